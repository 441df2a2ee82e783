//! Exact event-driven simulation of `ESN(b, µ)`.
//!
//! From a post-jump value `v`, the path follows the line `(v − b u)_+` until
//! the first atom whose mark exceeds the line. Atom arrivals above the line
//! form an inhomogeneous Poisson process with rate `µ̄(line(u))`, so the
//! waiting time is obtained by inverting the cumulative hazard
//! `Λ(u) = (1/b) ∫_{v − b u}^{v} µ̄` against a unit exponential, and the new
//! value is a draw from `µ` conditioned above the line.
//!
//! When `µ̄(0) = ∞`, atoms with marks `≤ ε` (`truncation_eps`) are dropped.
//! They can never lift the running maximum above `ε`, so every path value
//! above `ε` is exact.

mod intervals;
mod skeleton;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

pub use intervals::IntervalSet;
pub use skeleton::{PathEvent, PathSkeleton, RefinedValue};

use crate::error::{EsnError, Result};
use crate::quad::{integrate, ErrorSlot, Tolerance};
use crate::rng::{open_uniform, unit_exponential};
use crate::tail_measure::TailMeasure;

pub const DEFAULT_EVENT_BUDGET: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsnParams {
    pub b: f64,
    pub measure: TailMeasure,
    /// Marks `≤ truncation_eps` are ignored; must be positive when `µ̄(0) = ∞`.
    pub truncation_eps: f64,
    pub horizon: f64,
    #[serde(default = "default_budget")]
    pub event_budget: usize,
}

fn default_budget() -> usize {
    DEFAULT_EVENT_BUDGET
}

impl EsnParams {
    pub fn new(b: f64, measure: TailMeasure, truncation_eps: f64, horizon: f64) -> Result<Self> {
        let p = EsnParams {
            b,
            measure,
            truncation_eps,
            horizon,
            event_budget: DEFAULT_EVENT_BUDGET,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.b.is_finite() {
            return Err(EsnError::InvalidParams(format!("b must be finite, got {}", self.b)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(EsnError::InvalidParams(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if !(self.truncation_eps >= 0.0 && self.truncation_eps.is_finite()) {
            return Err(EsnError::InvalidParams(format!(
                "truncation_eps must be ≥ 0, got {}",
                self.truncation_eps
            )));
        }
        if self.truncation_eps == 0.0 && self.measure.tail(0.0).is_infinite() {
            return Err(EsnError::InvalidParams(
                "truncation_eps must be > 0 when µ̄(0) = ∞".into(),
            ));
        }
        Ok(())
    }

    pub fn with_horizon(&self, horizon: f64) -> Self {
        EsnParams {
            horizon,
            ..self.clone()
        }
    }

    pub fn with_eps(&self, truncation_eps: f64) -> Self {
        EsnParams {
            truncation_eps,
            ..self.clone()
        }
    }

    pub fn with_measure(&self, measure: TailMeasure) -> Self {
        EsnParams {
            measure,
            ..self.clone()
        }
    }

    /// Lowest level at which atoms are still simulated.
    fn floor(&self) -> f64 {
        self.truncation_eps
    }
}

/// Outcome of [`next_event`], measured from the current post-jump value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NextEvent {
    /// An atom above the line arrives after `wait`; the path jumps to `value`.
    Jump { wait: f64, value: f64 },
    /// No atom will ever arrive; the line reaches `level` after `wait` and
    /// stays there.
    DescentToLevel { wait: f64, level: f64 },
    /// No atom will ever arrive and the line never stops (`b ≤ 0`).
    NoArrival,
}

/// Samples the next jump from `current`.
pub fn next_event<R: Rng + ?Sized>(current: f64, params: &EsnParams, rng: &mut R) -> Result<NextEvent> {
    let b = params.b;
    let m = &params.measure;
    let floor = params.floor();
    let e = unit_exponential(rng);
    if b > 0.0 {
        let mut remaining = e;
        let mut descent = 0.0;
        if current > floor {
            if let Some(level) = m.level_below(current, b * e, floor)? {
                let wait = (current - level) / b;
                let value = m.sample_conditional(level, open_uniform(rng))?;
                return Ok(NextEvent::Jump { wait, value });
            }
            remaining = e - m.tail_integral(floor, current)? / b;
            descent = (current - floor) / b;
        }
        let rate = m.tail(floor);
        if rate.is_infinite() {
            return Err(EsnError::Precondition(
                "µ̄ = ∞ at the simulation floor; set truncation_eps > 0".into(),
            ));
        }
        if rate == 0.0 {
            return Ok(NextEvent::DescentToLevel {
                wait: current / b,
                level: 0.0,
            });
        }
        let wait = descent + remaining.max(0.0) / rate;
        let value = m.sample_conditional(floor, open_uniform(rng))?;
        Ok(NextEvent::Jump { wait, value })
    } else if b == 0.0 {
        // extremal process: constant line, only strictly larger marks matter
        let level = current.max(floor);
        let rate = m.tail_open(level);
        if rate.is_infinite() {
            return Err(EsnError::Precondition(
                "µ̄ = ∞ at the simulation floor; set truncation_eps > 0".into(),
            ));
        }
        if rate == 0.0 {
            return Ok(NextEvent::NoArrival);
        }
        let wait = e / rate;
        let value = m.sample_conditional_open(level, open_uniform(rng));
        Ok(NextEvent::Jump { wait, value })
    } else {
        let slope = -b;
        let mut remaining = e;
        let mut dwell = 0.0;
        let mut start = current;
        if current < floor {
            // line below the floor: atoms above the floor arrive at a constant rate
            let rate = m.tail(floor);
            if rate.is_infinite() {
                return Err(EsnError::Precondition(
                    "µ̄ = ∞ at the simulation floor; set truncation_eps > 0".into(),
                ));
            }
            let span = (floor - current) / slope;
            if rate * span > e {
                let wait = e / rate;
                let value = m.sample_conditional(floor, open_uniform(rng))?;
                return Ok(NextEvent::Jump { wait, value });
            }
            remaining = e - rate * span;
            dwell = span;
            start = floor;
        }
        match m.level_above(start, slope * remaining)? {
            Some(level) => {
                let wait = dwell + (level - start) / slope;
                let value = m.sample_conditional(level, open_uniform(rng))?;
                Ok(NextEvent::Jump { wait, value })
            }
            None => Ok(NextEvent::NoArrival),
        }
    }
}

/// Simulates one trajectory from `x0` on `[0, horizon]`.
pub fn simulate_path<R: Rng + ?Sized>(x0: f64, params: &EsnParams, rng: &mut R) -> Result<PathSkeleton> {
    if !(x0 >= 0.0 && x0.is_finite()) {
        return Err(EsnError::Domain(format!("initial value must be ≥ 0, got {x0}")));
    }
    params.validate()?;
    let mut events = Vec::new();
    let mut t = 0.0;
    let mut v = x0;
    loop {
        if events.len() >= params.event_budget {
            return Err(EsnError::BudgetExceeded(format!(
                "{} events before t={}; truncation_eps={} is too small for this horizon",
                params.event_budget, params.horizon, params.truncation_eps
            )));
        }
        match next_event(v, params, rng)? {
            NextEvent::Jump { wait, value } => {
                t += wait;
                if t > params.horizon {
                    break;
                }
                events.push(PathEvent { time: t, value });
                v = value;
            }
            NextEvent::DescentToLevel { .. } | NextEvent::NoArrival => break,
        }
    }
    Ok(PathSkeleton {
        x0,
        b: params.b,
        horizon: params.horizon,
        exact_above: params.truncation_eps,
        events,
    })
}

/// Outcome of a first-passage simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Passage {
    /// `σ_a`, the exact crossing time.
    Hit(f64),
    /// The level was not reached before `time_cap`.
    Censored(f64),
}

impl Passage {
    pub fn time(&self) -> Option<f64> {
        match self {
            Passage::Hit(t) => Some(*t),
            Passage::Censored(_) => None,
        }
    }
}

/// Default censoring cap `100 (x − a)/b`.
pub fn default_time_cap(x: f64, a: f64, b: f64) -> f64 {
    100.0 * (x - a) / b
}

/// Samples `σ_a = inf{s ≥ 0 : M(s) ≤ a}` for the process started at `x`.
///
/// Requires `a ≥ truncation_eps`: ignored atoms then have marks below the
/// target level and cannot change the path before `σ_a`, so the result is
/// exact.
pub fn first_passage<R: Rng + ?Sized>(
    x: f64,
    a: f64,
    params: &EsnParams,
    rng: &mut R,
    time_cap: f64,
) -> Result<Passage> {
    params.validate()?;
    let b = params.b;
    if !(b > 0.0) {
        return Err(EsnError::Precondition("first passage needs b > 0".into()));
    }
    if !(x > a && a >= 0.0) {
        return Err(EsnError::Precondition(format!("first passage needs x > a ≥ 0, got x={x}, a={a}")));
    }
    if a < params.truncation_eps {
        return Err(EsnError::Precondition(format!(
            "level a={a} below truncation_eps={}",
            params.truncation_eps
        )));
    }
    if a == 0.0 && params.measure.tail(0.0).is_infinite() {
        return Err(EsnError::Precondition("a = 0 needs µ̄(0) < ∞".into()));
    }
    let mut t = 0.0;
    let mut v = x;
    let mut steps = 0usize;
    loop {
        steps += 1;
        if steps > params.event_budget {
            return Err(EsnError::BudgetExceeded(format!(
                "{} events without reaching level {a}",
                params.event_budget
            )));
        }
        let reach = (v - a) / b;
        match next_event(v, params, rng)? {
            NextEvent::Jump { wait, value } if wait < reach => {
                t += wait;
                if t > time_cap {
                    return Ok(Passage::Censored(time_cap));
                }
                v = value;
            }
            _ => {
                let sigma = t + reach;
                return Ok(if sigma > time_cap {
                    Passage::Censored(time_cap)
                } else {
                    Passage::Hit(sigma)
                });
            }
        }
    }
}

/// Covering intervals and the uncovered (cutout) set on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cutout {
    pub eps: f64,
    pub atoms: usize,
    pub covering: IntervalSet,
    pub uncovered: IntervalSet,
}

/// Samples the Poisson covering `⋃ (s, s + ξ_s/b)` on `[0, horizon]` for
/// marks above `truncation_eps`, and its complement.
///
/// The uncovered set of the truncated measure contains the true cutout set.
pub fn cutout_intervals<R: Rng + ?Sized>(params: &EsnParams, rng: &mut R) -> Result<Cutout> {
    let mut sweep = cutout_sweep(params, &[params.truncation_eps], rng)?;
    Ok(sweep.pop().expect("one level requested"))
}

/// Cutout sets for a decreasing sequence of truncation levels on one shared
/// atom stream: atoms are generated layer by layer, so each finer level adds
/// atoms to the coarser one and the uncovered measure is pathwise
/// non-increasing along the sweep.
pub fn cutout_sweep<R: Rng + ?Sized>(params: &EsnParams, eps_levels: &[f64], rng: &mut R) -> Result<Vec<Cutout>> {
    let b = params.b;
    if !(b > 0.0) {
        return Err(EsnError::Precondition("cutout sets need b > 0".into()));
    }
    if params.horizon.is_infinite() {
        return Err(EsnError::InvalidParams("horizon must be finite".into()));
    }
    if eps_levels.windows(2).any(|w| w[1] >= w[0]) {
        return Err(EsnError::InvalidParams("truncation levels must be strictly decreasing".into()));
    }
    let m = &params.measure;
    let horizon = params.horizon;
    let mut atoms: Vec<(f64, f64)> = Vec::new();
    let mut out = Vec::with_capacity(eps_levels.len());
    let mut upper = f64::INFINITY;
    for &eps in eps_levels {
        let rate_here = m.tail(eps);
        if rate_here.is_infinite() {
            return Err(EsnError::InvalidParams(format!(
                "µ̄({eps}) = ∞; cutout sampling needs truncation_eps > 0"
            )));
        }
        let rate_above = if upper.is_infinite() { 0.0 } else { m.tail(upper) };
        let mean = (rate_here - rate_above) * horizon;
        if mean > 0.0 {
            let count = Poisson::new(mean)
                .map_err(|e| EsnError::Precondition(format!("poisson mean {mean}: {e}")))?
                .sample(rng) as usize;
            if atoms.len() + count > params.event_budget {
                return Err(EsnError::BudgetExceeded(format!(
                    "{} atoms needed at eps={eps}",
                    atoms.len() + count
                )));
            }
            atoms.reserve(count);
            for _ in 0..count {
                let s = horizon * open_uniform(rng);
                let u = open_uniform(rng);
                let mark = if upper.is_infinite() {
                    m.sample_conditional(eps, u)?
                } else {
                    m.sample_layer(eps, upper, u)
                };
                atoms.push((s, mark));
            }
        }
        atoms.sort_by(|x, y| x.0.total_cmp(&y.0));
        let covering = IntervalSet::merge_sorted(atoms.iter().map(|&(s, xi)| (s, s + xi / b)));
        let uncovered = covering.complement_within(0.0, horizon);
        out.push(Cutout {
            eps,
            atoms: atoms.len(),
            covering,
            uncovered,
        });
        upper = eps;
    }
    Ok(out)
}

/// Expected extra zero time on `[0, horizon]` caused by dropping marks
/// `≤ eps`: `∫_0^T [e^{−Λ_ε(s)} − e^{−Λ(s)}] ds` with
/// `Λ(s) = (1/b) ∫_0^{bs} µ̄` and `Λ_ε` the same for `µ̄(· ∨ ε)`.
pub fn truncation_zero_bias(measure: &TailMeasure, b: f64, horizon: f64, eps: f64) -> Result<f64> {
    if !(b > 0.0) {
        return Err(EsnError::Precondition("zero-set bias needs b > 0".into()));
    }
    if eps == 0.0 {
        return Ok(0.0);
    }
    let at_eps = measure.tail(eps);
    let slot = ErrorSlot::new();
    let est = integrate(
        |s| {
            let z = b * s;
            let truncated = if z <= eps {
                z * at_eps
            } else {
                slot.take(measure.tail_integral(eps, z).map(|v| eps * at_eps + v))
            };
            let full = slot.take(measure.tail_integral(0.0, z));
            (-truncated / b).exp() - (-full / b).exp()
        },
        0.0,
        horizon,
        Tolerance::new(1e-12, 1e-8),
    );
    let est = slot.finish(est)?;
    Ok(est.value.max(0.0))
}

/// Largest `ε = 2^{−k}` whose zero-set bias is below `tol`; `0` when
/// `µ̄(0) < ∞` (no truncation needed).
pub fn auto_truncation_eps(measure: &TailMeasure, b: f64, horizon: f64, tol: f64) -> Result<f64> {
    if measure.tail(0.0).is_finite() {
        return Ok(0.0);
    }
    let mut eps = 1.0;
    for _ in 0..200 {
        if truncation_zero_bias(measure, b, horizon, eps)? <= tol {
            return Ok(eps);
        }
        eps *= 0.5;
    }
    Err(EsnError::Precondition(format!(
        "no truncation level reaches zero-set bias {tol}"
    )))
}

/// [`auto_truncation_eps`] with tolerance `1e−3 × horizon`.
pub fn auto_truncation_eps_for_horizon(measure: &TailMeasure, b: f64, horizon: f64) -> Result<f64> {
    auto_truncation_eps(measure, b, horizon, 1e-3 * horizon)
}
