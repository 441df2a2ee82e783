//! Run configuration: a JSON document merged with command-line overrides.

use std::path::{Path, PathBuf};

use esn_core::pathsim::auto_truncation_eps_for_horizon;
use esn_core::tail_measure::PiecewiseTable;
use esn_core::{EsnError, EsnParams, TailMeasure};
use serde::Deserialize;
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub measure: Option<Value>,
    pub b: Option<f64>,
    pub x0: Option<f64>,
    pub horizon: Option<f64>,
    pub truncation_eps: Option<Value>,
    pub seed: Option<u64>,
    pub n: Option<u64>,
    pub grid_step: Option<f64>,
    pub event_budget: Option<usize>,
    #[serde(default)]
    pub eval: EvalGrid,
    pub cutout_sweep: Option<Vec<f64>>,
    #[serde(default)]
    pub outputs: Outputs,
}

/// Evaluation points for `eval`.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalGrid {
    pub x: Option<Vec<f64>>,
    pub t: Option<Vec<f64>>,
    pub u: Option<Vec<f64>>,
    pub theta: Option<Vec<f64>>,
    pub functions: Option<Vec<String>>,
    pub fdd: Option<Vec<FddQuery>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FddQuery {
    pub times: Vec<f64>,
    pub levels: Vec<f64>,
}

/// Output file names, relative to the output directory.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub path_csv: Option<String>,
    pub events_json: Option<String>,
    pub eval_csv: Option<String>,
    pub classification_json: Option<String>,
    pub cutout_csv: Option<String>,
    pub cutout_summary_csv: Option<String>,
    pub reports_jsonl: Option<String>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub measure: Option<String>,
    pub b: Option<f64>,
    pub x0: Option<f64>,
    pub horizon: Option<f64>,
    pub eps: Option<String>,
    pub seed: Option<u64>,
    pub n: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsSetting {
    Fixed(f64),
    Auto,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub measure: Option<TailMeasure>,
    pub b: f64,
    pub x0: f64,
    pub horizon: f64,
    pub eps: EpsSetting,
    pub seed: u64,
    pub n: u64,
    pub grid_step: Option<f64>,
    pub event_budget: Option<usize>,
    pub eval: EvalGrid,
    pub cutout_sweep: Option<Vec<f64>>,
    pub outputs: Outputs,
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("field `{field}`: {msg}"))
}

impl RunConfig {
    pub fn load(path: Option<&Path>, over: &Overrides) -> Result<Self, CliError> {
        let (file, base) = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                let file: FileConfig = serde_json::from_str(&text).map_err(|e| {
                    CliError::Config(format!("{}: {e}", p.display()))
                })?;
                (file, p.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (FileConfig::default(), PathBuf::new()),
        };

        let measure = match &over.measure {
            Some(s) => Some(parse_measure_flag(s)?),
            None => match &file.measure {
                Some(v) => Some(parse_measure_value(v, &base)?),
                None => None,
            },
        };
        let eps = match &over.eps {
            Some(s) => parse_eps_str(s).map_err(|m| invalid("truncation_eps", m))?,
            None => match &file.truncation_eps {
                None => EpsSetting::Fixed(0.0),
                Some(Value::String(s)) if s == "auto" => EpsSetting::Auto,
                Some(Value::Number(n)) => EpsSetting::Fixed(n.as_f64().unwrap_or(f64::NAN)),
                Some(other) => return Err(invalid("truncation_eps", format!("expected a number or \"auto\", got {other}"))),
            },
        };
        Ok(RunConfig {
            measure,
            b: over.b.or(file.b).unwrap_or(1.0),
            x0: over.x0.or(file.x0).unwrap_or(0.0),
            horizon: over.horizon.or(file.horizon).unwrap_or(10.0),
            eps,
            seed: over.seed.or(file.seed).unwrap_or(0),
            n: over.n.or(file.n).unwrap_or(10_000),
            grid_step: file.grid_step,
            event_budget: file.event_budget,
            eval: file.eval,
            cutout_sweep: file.cutout_sweep,
            outputs: file.outputs,
        })
    }

    pub fn measure(&self) -> Result<&TailMeasure, CliError> {
        self.measure
            .as_ref()
            .ok_or_else(|| invalid("measure", "required for this subcommand"))
    }

    /// Simulation parameters, resolving `"auto"` truncation and checking the
    /// combination of measure, drift and truncation.
    pub fn params(&self) -> Result<EsnParams, CliError> {
        let measure = self.measure()?.clone();
        if !(self.x0 >= 0.0 && self.x0.is_finite()) {
            return Err(invalid("x0", format!("must be finite and ≥ 0, got {}", self.x0)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(invalid("horizon", format!("must be positive, got {}", self.horizon)));
        }
        let eps = match self.eps {
            EpsSetting::Fixed(e) => e,
            EpsSetting::Auto => auto_truncation_eps_for_horizon(&measure, self.b, self.horizon)?,
        };
        let mut p = EsnParams {
            b: self.b,
            measure,
            truncation_eps: eps,
            horizon: self.horizon,
            event_budget: esn_core::pathsim::DEFAULT_EVENT_BUDGET,
        };
        if let Some(budget) = self.event_budget {
            p.event_budget = budget;
        }
        p.validate().map_err(|e| {
            let field = match &e {
                EsnError::InvalidParams(m) if m.starts_with("b ") => "b",
                EsnError::InvalidParams(m) if m.starts_with("horizon") => "horizon",
                _ => "truncation_eps",
            };
            invalid(field, e)
        })?;
        Ok(p)
    }

    pub fn output(&self, chosen: &Option<String>, default: &str) -> String {
        chosen.clone().unwrap_or_else(|| default.to_string())
    }
}

fn parse_eps_str(s: &str) -> Result<EpsSetting, String> {
    if s == "auto" {
        return Ok(EpsSetting::Auto);
    }
    s.parse::<f64>()
        .map(EpsSetting::Fixed)
        .map_err(|_| format!("expected a number or \"auto\", got {s:?}"))
}

/// A `--measure` flag is inline JSON or a path to a table CSV.
fn parse_measure_flag(s: &str) -> Result<TailMeasure, CliError> {
    if s.trim_start().starts_with('{') {
        let v: Value = serde_json::from_str(s).map_err(|e| invalid("measure", e))?;
        parse_measure_value(&v, Path::new(""))
    } else {
        load_table(Path::new(s)).map_err(|e| invalid("measure", format!("{s}: {e}")))
    }
}

fn load_table(path: &Path) -> esn_core::Result<TailMeasure> {
    TailMeasure::table(PiecewiseTable::from_csv_path(path)?)
}

/// `{"csv": "table.csv"}` (relative to the config file), `{"family": "zero"}`
/// or a family object.
fn parse_measure_value(v: &Value, base: &Path) -> Result<TailMeasure, CliError> {
    if let Some(obj) = v.as_object() {
        if obj.get("family").and_then(Value::as_str) == Some("zero") && obj.len() == 1 {
            return Ok(TailMeasure::zero());
        }
        if let Some(csv) = obj.get("csv") {
            if obj.len() > 1 {
                return Err(invalid("measure", "a csv measure takes no other keys"));
            }
            let rel = csv.as_str().ok_or_else(|| invalid("measure.csv", "expected a path string"))?;
            let path = base.join(rel);
            return load_table(&path)
                .map_err(|e| invalid("measure.csv", format!("{}: {e}", path.display())));
        }
    }
    serde_json::from_value(v.clone()).map_err(|e| invalid("measure", e))
}
