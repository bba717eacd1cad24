//! Seeded experiment runner: validates a [`TrialConfig`], runs its trials (in parallel
//! when the `parallel` feature is on) and aggregates them into a [`Report`].

mod config;
mod report;
mod sweep;
mod trial;

use std::sync::atomic::{AtomicBool, Ordering};

pub use config::{HarnessError, KnowledgeChoice, Layout, Plan, TrialConfig, CONFIG_KEYS};
pub use report::{Report, StrategyMetrics, Tally, TrialMetrics};
pub use sweep::{run_sweep, Grid, SweepCell, SweepTable};
pub use trial::{run_trial, Outcome, TrialRecord};

/// How trials are scheduled. Results never depend on the choice.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Executor {
    Sequential,
    /// Rayon data parallelism; sequential when built without the `parallel` feature.
    Parallel,
}

impl Default for Executor {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Self::Parallel
        } else {
            Self::Sequential
        }
    }
}

impl Executor {
    /// `f(i)` for `i in 0..count`, in index order.
    pub fn map<R, F>(self, count: u64, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(u64) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Self::Parallel => {
                use rayon::prelude::*;
                (0..count).into_par_iter().map(f).collect()
            }
            _ => (0..count).map(f).collect(),
        }
    }
}

pub fn run(config: &TrialConfig, executor: Executor) -> Result<Report, HarnessError> {
    run_with_cancel(config, executor, &AtomicBool::new(false))
}

/// Like [`run`], but trials not yet started when `cancel` is raised are skipped and
/// the report covers the completed ones.
pub fn run_with_cancel(config: &TrialConfig, executor: Executor, cancel: &AtomicBool) -> Result<Report, HarnessError> {
    let plan = Plan::new(config)?;
    let mut strategies = Vec::with_capacity(config.adversaries.len());
    let mut interrupted = false;
    for &kind in &config.adversaries {
        let results = executor.map(config.trials, |i| {
            (!cancel.load(Ordering::Relaxed)).then(|| run_trial(&plan, kind, i))
        });
        let mut tally = Tally::default();
        for r in results {
            match r {
                Some(record) => tally.add(&record?),
                None => interrupted = true,
            }
        }
        strategies.push(StrategyMetrics { strategy: kind.name().to_string(), tally });
    }
    Ok(Report { metrics: TrialMetrics::new(&plan, strategies, interrupted), config: config.clone() })
}

/// Re-runs the configuration embedded in a text report.
pub fn rerun(report_text: &str, executor: Executor) -> Result<Report, HarnessError> {
    run(&Report::parse_config(report_text)?, executor)
}
