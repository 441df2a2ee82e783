//! Subcommand bodies. Each one dispatches to `esn_core` and writes files.

use std::fmt::Write as _;
use std::path::Path;

use esn_core::format::sig17;
use esn_core::laws::{self, TestFunction};
use esn_core::pathsim::{cutout_intervals, cutout_sweep, simulate_path};
use esn_core::rng::replicate_rng;
use esn_core::verify::{render_table, run_suite, to_json_lines};
use esn_core::{PassageSolver, PathSkeleton};

use crate::config::{EvalGrid, RunConfig};
use crate::{CliError, EvalKind};

/// Stdout that tolerates a closed pipe.
fn emit(text: &str) {
    let _ = std::io::Write::write_all(&mut std::io::stdout(), text.as_bytes());
}

fn write(out: &Path, name: &str, body: &str) -> Result<(), CliError> {
    let path = out.join(name);
    std::fs::write(&path, body).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

pub fn simulate(cfg: &RunConfig, grid_step: Option<f64>, out: &Path) -> Result<(), CliError> {
    let params = cfg.params()?;
    let path = simulate_path(cfg.x0, &params, &mut replicate_rng(cfg.seed, 0))?;
    let step = grid_step.or(cfg.grid_step).unwrap_or_else(|| path.default_grid_step());
    let csv = path.to_grid_csv(step).map_err(|e| CliError::Config(format!("field `grid_step`: {e}")))?;
    let json = path.to_json();
    if PathSkeleton::from_json(&json)? != path {
        return Err(CliError::Numerical("event skeleton does not survive a JSON round trip".into()));
    }
    write(out, &cfg.output(&cfg.outputs.path_csv, "path.csv"), &csv)?;
    write(out, &cfg.output(&cfg.outputs.events_json, "events.json"), &json)?;
    emit(&format!("{} events, truncation_eps={}\n", path.events.len(), sig17(params.truncation_eps)));
    Ok(())
}

fn need<'a, T>(v: &'a Option<Vec<T>>, field: &str) -> Result<&'a [T], CliError> {
    match v {
        Some(v) if !v.is_empty() => Ok(v),
        _ => Err(CliError::Config(format!("field `eval.{field}`: needs at least one value"))),
    }
}

fn test_function(name: &str) -> Result<TestFunction, CliError> {
    let (base, arg) = match name.split_once(':') {
        Some((b, a)) => {
            let v = a
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("field `eval.functions`: bad argument in {name:?}")))?;
            (b, Some(v))
        }
        None => (name, None),
    };
    Ok(match (base, arg) {
        ("gaussian", None) => TestFunction::gaussian(),
        ("cauchy", None) => TestFunction::cauchy(),
        ("gamma_bump", None) => TestFunction::gamma_bump(),
        ("exponential", None) => TestFunction::exponential(),
        ("constant", Some(c)) => TestFunction::constant(c),
        ("constant", None) => TestFunction::constant(1.0),
        ("plateau", Some(r)) => TestFunction::plateau(r)?,
        _ => {
            return Err(CliError::Config(format!(
                "field `eval.functions`: unknown test function {name:?}; expected gaussian, cauchy, gamma_bump, exponential, constant[:c] or plateau:r"
            )))
        }
    })
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| sig17(*x)).collect::<Vec<_>>().join(";")
}

pub fn eval(cfg: &RunConfig, which: EvalKind, grid: &EvalGrid, out: &Path) -> Result<(), CliError> {
    let m = cfg.measure()?;
    let b = cfg.b;
    let default_x = vec![cfg.x0];
    let xs: &[f64] = grid.x.as_deref().unwrap_or(&default_x);
    let mut s = String::new();
    // closed-form laws carry no quadrature error
    match which {
        EvalKind::Cdf => {
            s.push_str("x,t,u,value,abs_err\n");
            for &x in xs {
                for &t in need(&grid.t, "t")? {
                    for &u in need(&grid.u, "u")? {
                        let v = laws::cdf(x, t, u, b, m)?;
                        let _ = writeln!(s, "{},{},{},{},{}", sig17(x), sig17(t), sig17(u), sig17(v), sig17(0.0));
                    }
                }
            }
        }
        EvalKind::Fdd => {
            s.push_str("x,times,levels,value,abs_err\n");
            let queries = grid
                .fdd
                .as_ref()
                .filter(|q| !q.is_empty())
                .ok_or_else(|| CliError::Config("field `eval.fdd`: needs at least one {times, levels} query".into()))?;
            for &x in xs {
                for q in queries {
                    let v = laws::fdd_from(x, &q.times, &q.levels, b, m)?;
                    let _ = writeln!(s, "{},{},{},{},{}", sig17(x), join(&q.times), join(&q.levels), sig17(v), sig17(0.0));
                }
            }
        }
        EvalKind::Stationary => {
            s.push_str("u,value,abs_err\n");
            for &u in need(&grid.u, "u")? {
                let v = laws::stationary_cdf(u, b, m)?;
                let _ = writeln!(s, "{},{},{}", sig17(u), sig17(v), sig17(0.0));
            }
        }
        EvalKind::Ftheta => {
            let solver = PassageSolver::new(m.clone(), b)?;
            s.push_str("x,theta,value,abs_err\n");
            for &x in xs {
                for &theta in need(&grid.theta, "theta")? {
                    let e = solver.f_theta_estimate(x, theta)?;
                    let _ = writeln!(s, "{},{},{},{}", sig17(x), sig17(theta), sig17(e.value), sig17(e.abs_err));
                }
            }
        }
        EvalKind::Phi => {
            let solver = PassageSolver::new(m.clone(), b)?;
            s.push_str("theta,value,abs_err\n");
            for &theta in need(&grid.theta, "theta")? {
                let e = solver.inverse_local_time_exponent_estimate(theta)?;
                let _ = writeln!(s, "{},{},{}", sig17(theta), sig17(e.value), sig17(e.abs_err));
            }
        }
        EvalKind::Generator => {
            s.push_str("function,x,value,abs_err\n");
            for name in need(&grid.functions, "functions")? {
                let f = test_function(name)?;
                f.validate_for(m)?;
                for &x in xs {
                    let e = laws::generator_apply(&f, x, b, m)?;
                    let _ = writeln!(s, "{},{},{},{}", f.name(), sig17(x), sig17(e.value), sig17(e.abs_err));
                }
            }
        }
    }
    let default = format!("eval_{}.csv", format!("{which:?}").to_lowercase());
    write(out, &cfg.output(&cfg.outputs.eval_csv, &default), &s)?;
    emit(&s);
    Ok(())
}

pub fn classify(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let c = esn_core::passage::classify(cfg.b, cfg.measure()?)?;
    let json = c.to_json();
    write(out, &cfg.output(&cfg.outputs.classification_json, "classification.json"), &json)?;
    emit(&format!("{json}\n"));
    Ok(())
}

pub fn cutout(cfg: &RunConfig, sweep: Option<Vec<f64>>, out: &Path) -> Result<(), CliError> {
    let params = cfg.params()?;
    let mut rng = replicate_rng(cfg.seed, 0);
    let cuts = match sweep {
        Some(levels) => cutout_sweep(&params, &levels, &mut rng)
            .map_err(|e| CliError::Config(format!("field `cutout_sweep`: {e}")))?,
        None => vec![cutout_intervals(&params, &mut rng)?],
    };
    let mut intervals = String::from("eps,left,right\n");
    let mut summary = String::from("eps,atoms,uncovered_intervals,uncovered_measure\n");
    for c in &cuts {
        for (l, r) in c.uncovered.intervals() {
            let _ = writeln!(intervals, "{},{},{}", sig17(c.eps), sig17(*l), sig17(*r));
        }
        let _ = writeln!(
            summary,
            "{},{},{},{}",
            sig17(c.eps),
            c.atoms,
            c.uncovered.len(),
            sig17(c.uncovered.measure())
        );
    }
    write(out, &cfg.output(&cfg.outputs.cutout_csv, "cutout.csv"), &intervals)?;
    write(out, &cfg.output(&cfg.outputs.cutout_summary_csv, "cutout_summary.csv"), &summary)?;
    emit(&summary);
    Ok(())
}

pub fn verify(cfg: &RunConfig, suite: &str, out: &Path) -> Result<(), CliError> {
    let reports = run_suite(suite, cfg.n, cfg.seed)?;
    let default = format!("verify_{suite}.jsonl");
    write(out, &cfg.output(&cfg.outputs.reports_jsonl, &default), &to_json_lines(&reports))?;
    emit(&render_table(&reports));
    let failed: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.check_id.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::CheckFailed(failed.join(", ")))
    }
}
