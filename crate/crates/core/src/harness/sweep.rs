//! Cartesian parameter sweeps described in TOML:
//!
//! ```toml
//! [base]
//! scheme = "omn"
//! topology = "c3.topo"   # relative to the grid file
//! trials = 50
//!
//! [grid]
//! z = [0, 1]
//! ```
//!
//! An empty or missing `[grid]` table yields no cells.

use std::path::{Path, PathBuf};

use super::config::{HarnessError, TrialConfig};
use super::report::Report;
use super::{run, Executor};

/// `(key, value)` pairs that define one sweep cell.
pub type Assignments = Vec<(String, String)>;

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    base: Vec<(String, String)>,
    axes: Vec<(String, Vec<String>)>,
    dir: PathBuf,
}

fn scalar(key: &str, v: &toml::Value) -> Result<String, HarnessError> {
    match v {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::Boolean(b) => Ok(b.to_string()),
        toml::Value::Array(items) => {
            Ok(items.iter().map(|i| scalar(key, i)).collect::<Result<Vec<_>, _>>()?.join(","))
        }
        other => Err(HarnessError::Grid(format!("{key}: unsupported value {other}"))),
    }
}

impl Grid {
    /// `dir` resolves relative topology paths.
    pub fn parse(text: &str, dir: impl Into<PathBuf>) -> Result<Self, HarnessError> {
        let doc: toml::Table = text.parse().map_err(|e: toml::de::Error| HarnessError::Grid(e.to_string()))?;
        let table = |name: &str| -> Result<toml::Table, HarnessError> {
            match doc.get(name) {
                None => Ok(toml::Table::new()),
                Some(toml::Value::Table(t)) => Ok(t.clone()),
                Some(_) => Err(HarnessError::Grid(format!("[{name}] must be a table"))),
            }
        };
        if let Some(extra) = doc.keys().find(|k| *k != "base" && *k != "grid") {
            return Err(HarnessError::Grid(format!("unknown section `{extra}`")));
        }
        let base = table("base")?
            .iter()
            .map(|(k, v)| Ok((k.clone(), scalar(k, v)?)))
            .collect::<Result<_, HarnessError>>()?;
        let axes = table("grid")?
            .iter()
            .map(|(k, v)| {
                let toml::Value::Array(items) = v else {
                    return Err(HarnessError::Grid(format!("grid axis `{k}` must be an array")));
                };
                Ok((k.clone(), items.iter().map(|i| scalar(k, i)).collect::<Result<_, _>>()?))
            })
            .collect::<Result<_, HarnessError>>()?;
        Ok(Self { base, axes, dir: dir.into() })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| HarnessError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn axes(&self) -> impl Iterator<Item = &str> {
        self.axes.iter().map(|(k, _)| k.as_str())
    }

    fn apply(&self, config: &mut TrialConfig, key: &str, value: &str) -> Result<(), HarnessError> {
        if key == "topology" {
            let path = Path::new(value);
            let path = if path.is_relative() { self.dir.join(path) } else { path.to_path_buf() };
            return config.load_topology(path);
        }
        config.set(key, value)
    }

    /// Every cell's assignments and configuration, axes varying fastest on the right.
    pub fn cells(&self) -> Result<Vec<(Assignments, TrialConfig)>, HarnessError> {
        if self.axes.is_empty() {
            return Ok(Vec::new());
        }
        let mut assignments: Vec<Assignments> = vec![Vec::new()];
        for (key, values) in &self.axes {
            assignments = assignments
                .into_iter()
                .flat_map(|prefix| {
                    values.iter().map(move |v| {
                        let mut next = prefix.clone();
                        next.push((key.clone(), v.clone()));
                        next
                    })
                })
                .collect();
        }
        assignments
            .into_iter()
            .map(|cell| {
                let mut config = TrialConfig::default();
                for (k, v) in self.base.iter().chain(&cell) {
                    self.apply(&mut config, k, v)?;
                }
                Ok((cell, config))
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepCell {
    pub assignments: Assignments,
    pub report: Report,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    pub axes: Vec<String>,
    pub cells: Vec<SweepCell>,
}

const COLUMNS: [&str; 6] =
    ["success_rate", "wrong_message_rate", "decode_failure_rate", "achieved_rate", "rate_contract", "e_bad_count"];

impl SweepTable {
    /// Tab-separated summary, one row per cell.
    pub fn to_text(&self) -> String {
        let mut out = self.axes.iter().map(String::as_str).chain(COLUMNS).collect::<Vec<_>>().join("\t");
        out.push('\n');
        for cell in &self.cells {
            let m = &cell.report.metrics;
            let mut row: Vec<String> = cell.assignments.iter().map(|(_, v)| v.clone()).collect();
            row.extend([
                format!("{:.6}", m.success_rate),
                format!("{:.6}", m.wrong_message_rate),
                format!("{:.6}", m.decode_failure_rate),
                format!("{:.6}", m.achieved_rate),
                m.rate_contract.to_string(),
                m.e_bad_count.to_string(),
            ]);
            out.push_str(&row.join("\t"));
            out.push('\n');
        }
        out
    }
}

/// Validates every cell first, then runs them in order.
pub fn run_sweep(grid: &Grid, executor: Executor) -> Result<SweepTable, HarnessError> {
    let cells = grid.cells()?;
    for (_, config) in &cells {
        super::Plan::new(config)?;
    }
    let cells = cells
        .into_iter()
        .map(|(assignments, config)| Ok(SweepCell { assignments, report: run(&config, executor)? }))
        .collect::<Result<_, HarnessError>>()?;
    Ok(SweepTable { axes: grid.axes().map(String::from).collect(), cells })
}
