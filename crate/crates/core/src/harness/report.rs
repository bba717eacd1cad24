//! Aggregated metrics and the line-oriented `key: value` report.

use serde::Serialize;

use super::config::{HarnessError, Plan, TrialConfig};
use super::trial::{Outcome, TrialRecord};
use crate::schemes::Stage;

/// Counts over a set of trials.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub trials: u64,
    pub correct: u64,
    pub wrong: u64,
    pub failure: u64,
    pub e_bad: u64,
    pub failures_omn: u64,
    pub failures_decrypt: u64,
    pub failures_sc: u64,
    pub failures_authenticate: u64,
    pub executions: u64,
    pub executions_correct: u64,
    pub forced_wrong_decodes: u64,
    pub forced_wrong_authenticated: u64,
    pub corrupted_symbols: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Tally {
    pub fn add(&mut self, r: &TrialRecord) {
        self.trials += 1;
        match r.outcome {
            Outcome::Correct => self.correct += 1,
            Outcome::WrongMessage => self.wrong += 1,
            Outcome::DecodeFailure => self.failure += 1,
        }
        self.e_bad += u64::from(r.e_bad);
        match r.failure_stage {
            Some(Stage::Omn) => self.failures_omn += 1,
            Some(Stage::Decrypt) => self.failures_decrypt += 1,
            Some(Stage::Sc) => self.failures_sc += 1,
            Some(Stage::Authenticate) => self.failures_authenticate += 1,
            None => {}
        }
        self.executions += r.executions as u64;
        self.executions_correct += r.executions_correct as u64;
        self.forced_wrong_decodes += r.forced_wrong_decodes as u64;
        self.forced_wrong_authenticated += r.forced_wrong_authenticated as u64;
        self.corrupted_symbols += r.corrupted_symbols as u64;
    }

    pub fn merge(&mut self, o: &Tally) {
        let fields = [
            (&mut self.trials, o.trials),
            (&mut self.correct, o.correct),
            (&mut self.wrong, o.wrong),
            (&mut self.failure, o.failure),
            (&mut self.e_bad, o.e_bad),
            (&mut self.failures_omn, o.failures_omn),
            (&mut self.failures_decrypt, o.failures_decrypt),
            (&mut self.failures_sc, o.failures_sc),
            (&mut self.failures_authenticate, o.failures_authenticate),
            (&mut self.executions, o.executions),
            (&mut self.executions_correct, o.executions_correct),
            (&mut self.forced_wrong_decodes, o.forced_wrong_decodes),
            (&mut self.forced_wrong_authenticated, o.forced_wrong_authenticated),
            (&mut self.corrupted_symbols, o.corrupted_symbols),
        ];
        for (mine, theirs) in fields {
            *mine += theirs;
        }
    }

    pub fn success_rate(&self) -> f64 {
        ratio(self.correct, self.trials)
    }

    pub fn wrong_message_rate(&self) -> f64 {
        ratio(self.wrong, self.trials)
    }

    pub fn decode_failure_rate(&self) -> f64 {
        ratio(self.failure, self.trials)
    }

    pub fn execution_success_rate(&self) -> f64 {
        ratio(self.executions_correct, self.executions)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StrategyMetrics {
    pub strategy: String,
    #[serde(flatten)]
    pub tally: Tally,
}

/// Run-level metrics. Rates pool every strategy's trials; `e` is the maximum per-strategy
/// wrong-message rate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialMetrics {
    pub scheme: String,
    pub q: u32,
    pub b: usize,
    pub n: usize,
    #[serde(rename = "C")]
    pub capacity: usize,
    pub delta_latency: usize,
    pub z: usize,
    pub trials: u64,
    pub success_rate: f64,
    pub wrong_message_rate: f64,
    pub decode_failure_rate: f64,
    pub achieved_rate: f64,
    pub e_bad_count: u64,
    pub seed: u64,
    pub e: f64,
    pub rate_contract: usize,
    pub receivers: usize,
    pub knowledge: String,
    pub controlled_edges: Vec<usize>,
    pub completed_trials: u64,
    pub interrupted: bool,
    pub total: Tally,
    pub strategies: Vec<StrategyMetrics>,
}

impl TrialMetrics {
    pub fn new(plan: &Plan, strategies: Vec<StrategyMetrics>, interrupted: bool) -> Self {
        let mut total = Tally::default();
        for s in &strategies {
            total.merge(&s.tally);
        }
        let e = strategies.iter().map(|s| s.tally.wrong_message_rate()).fold(0.0, f64::max);
        let c = &plan.config;
        Self {
            scheme: c.scheme.name().into(),
            q: c.q,
            b: plan.b,
            n: c.n,
            capacity: plan.capacity(),
            delta_latency: plan.delta,
            z: c.z,
            trials: c.trials,
            success_rate: total.success_rate(),
            wrong_message_rate: total.wrong_message_rate(),
            decode_failure_rate: total.decode_failure_rate(),
            achieved_rate: plan.achieved_rate(),
            e_bad_count: total.e_bad,
            seed: c.seed,
            e,
            rate_contract: plan.rate_contract(),
            receivers: plan.receivers,
            knowledge: plan.knowledge.to_string(),
            controlled_edges: plan.controlled.clone(),
            completed_trials: strategies.iter().map(|s| s.tally.trials).min().unwrap_or(0),
            interrupted,
            total,
            strategies,
        }
    }

    pub fn strategy(&self, name: &str) -> Option<&Tally> {
        self.strategies.iter().find(|s| s.strategy == name).map(|s| &s.tally)
    }
}

fn rate(v: f64) -> String {
    format!("{v:.6}")
}

fn tally_lines(prefix: &str, t: &Tally, out: &mut Vec<(String, String)>) {
    let mut push = |k: &str, v: String| out.push((format!("{prefix}{k}"), v));
    push("trials", t.trials.to_string());
    push("correct", t.correct.to_string());
    push("wrong", t.wrong.to_string());
    push("failure", t.failure.to_string());
    push("success_rate", rate(t.success_rate()));
    push("wrong_message_rate", rate(t.wrong_message_rate()));
    push("decode_failure_rate", rate(t.decode_failure_rate()));
    push("e_bad_count", t.e_bad.to_string());
    push("failures.omn", t.failures_omn.to_string());
    push("failures.decrypt", t.failures_decrypt.to_string());
    push("failures.sc", t.failures_sc.to_string());
    push("failures.authenticate", t.failures_authenticate.to_string());
    push("executions", t.executions.to_string());
    push("execution_success_rate", rate(t.execution_success_rate()));
    push("forced_wrong_decodes", t.forced_wrong_decodes.to_string());
    push("forced_wrong_authenticated", t.forced_wrong_authenticated.to_string());
    push("corrupted_symbols", t.corrupted_symbols.to_string());
}

/// Metrics plus the configuration that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub metrics: TrialMetrics,
    pub config: TrialConfig,
}

impl Report {
    /// Ordered `(key, value)` lines; the fixed fields come first.
    pub fn lines(&self) -> Vec<(String, String)> {
        let m = &self.metrics;
        let mut out: Vec<(String, String)> = [
            ("scheme", m.scheme.clone()),
            ("q", m.q.to_string()),
            ("b", m.b.to_string()),
            ("n", m.n.to_string()),
            ("C", m.capacity.to_string()),
            ("delta_latency", m.delta_latency.to_string()),
            ("z", m.z.to_string()),
            ("trials", m.trials.to_string()),
            ("success_rate", rate(m.success_rate)),
            ("wrong_message_rate", rate(m.wrong_message_rate)),
            ("decode_failure_rate", rate(m.decode_failure_rate)),
            ("achieved_rate", rate(m.achieved_rate)),
            ("e_bad_count", m.e_bad_count.to_string()),
            ("seed", m.seed.to_string()),
            ("e", rate(m.e)),
            ("rate_contract", m.rate_contract.to_string()),
            ("receivers", m.receivers.to_string()),
            ("knowledge", m.knowledge.clone()),
            (
                "controlled_edges",
                m.controlled_edges.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(","),
            ),
            ("completed_trials", m.completed_trials.to_string()),
            ("interrupted", m.interrupted.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        tally_lines("total.", &m.total, &mut out);
        for s in &m.strategies {
            tally_lines(&format!("strategy.{}.", s.strategy), &s.tally, &mut out);
        }
        out.extend(self.config.entries().into_iter().map(|(k, v)| (format!("config.{k}"), v)));
        out
    }

    pub fn to_text(&self) -> String {
        self.lines().into_iter().map(|(k, v)| format!("{k}: {v}\n")).collect()
    }

    /// JSON mirror of [`to_text`](Self::to_text).
    pub fn to_json(&self) -> String {
        let config: serde_json::Map<String, serde_json::Value> =
            self.config.entries().into_iter().map(|(k, v)| (k.to_string(), v.into())).collect();
        let value = serde_json::json!({ "metrics": self.metrics, "config": config });
        serde_json::to_string_pretty(&value).expect("plain data serializes")
    }

    /// Reads the embedded configuration back out of a text report.
    pub fn parse_config(text: &str) -> Result<TrialConfig, HarnessError> {
        let mut config = TrialConfig::default();
        let mut seen = 0;
        for (no, line) in text.lines().enumerate() {
            let Some(rest) = line.strip_prefix("config.") else { continue };
            let (key, value) = rest
                .split_once(": ")
                .or_else(|| rest.strip_suffix(':').map(|k| (k, "")))
                .ok_or_else(|| HarnessError::config(format!("report line {}: expected `key: value`", no + 1)))?;
            config.set(key, value)?;
            seen += 1;
        }
        if seen == 0 {
            return Err(HarnessError::config("report carries no config.* lines"));
        }
        Ok(config)
    }
}
