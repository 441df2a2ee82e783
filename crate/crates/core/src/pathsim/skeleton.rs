use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{EsnError, Result};
use crate::format::sig17;
use crate::rng::open_uniform;
use crate::tail_measure::TailMeasure;

/// One jump of the process: the post-jump value at `time`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathEvent {
    pub time: f64,
    pub value: f64,
}

/// Exact piecewise-linear representation of one trajectory on `[0, horizon]`.
///
/// Between events the value is `(v − b Δt)_+`, where `v` is the last
/// post-jump value (or `x0`). Values above `exact_above` are exact for the
/// untruncated process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSkeleton {
    pub x0: f64,
    pub b: f64,
    pub horizon: f64,
    pub exact_above: f64,
    pub events: Vec<PathEvent>,
}

/// A path value together with whether truncation could have biased it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinedValue {
    pub value: f64,
    pub exact: bool,
    pub layers: u32,
}

#[inline]
fn line(v: f64, b: f64, dt: f64) -> f64 {
    (v - b * dt).max(0.0)
}

impl PathSkeleton {
    /// `M(t)`; right-continuous at event times.
    pub fn evaluate(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0 && t <= self.horizon) {
            return Err(EsnError::Domain(format!(
                "t={t} outside the simulated horizon [0, {}]",
                self.horizon
            )));
        }
        Ok(self.value_at(t))
    }

    pub(crate) fn value_at(&self, t: f64) -> f64 {
        let i = self.events.partition_point(|e| e.time <= t);
        if i == 0 {
            line(self.x0, self.b, t)
        } else {
            let e = self.events[i - 1];
            line(e.value, self.b, t - e.time)
        }
    }

    /// `M(t)` with layered refinement below the truncation level.
    ///
    /// When the coarse value is `≤ exact_above = ε`, atoms with marks in
    /// `(ε/2, ε]` near `t` are sampled and folded in, then `(ε/4, ε/2]`, and
    /// so on, until the value clears the current layer floor (and is then
    /// exact) or `max_layers` is exhausted.
    pub fn evaluate_refined<R: Rng + ?Sized>(
        &self,
        t: f64,
        measure: &TailMeasure,
        rng: &mut R,
        max_layers: u32,
    ) -> Result<RefinedValue> {
        let mut value = self.evaluate(t)?;
        let mut eps = self.exact_above;
        if eps == 0.0 || value > eps {
            return Ok(RefinedValue {
                value,
                exact: true,
                layers: 0,
            });
        }
        for layer in 1..=max_layers {
            let lo = 0.5 * eps;
            let rate = measure.tail(lo) - measure.tail(eps);
            let window = if self.b > 0.0 { t.min(eps / self.b) } else { t };
            let mean = rate * window;
            if mean > 0.0 {
                let count = Poisson::new(mean)
                    .map_err(|e| EsnError::Precondition(format!("layer rate {mean}: {e}")))?
                    .sample(rng) as u64;
                if count > 50_000_000 {
                    return Err(EsnError::BudgetExceeded(format!(
                        "refinement layer with {count} atoms"
                    )));
                }
                for _ in 0..count {
                    let age = window * open_uniform(rng);
                    let mark = measure.sample_layer(lo, eps, open_uniform(rng));
                    value = value.max(line(mark, self.b, age));
                }
            }
            eps = lo;
            if value > eps {
                return Ok(RefinedValue {
                    value,
                    exact: true,
                    layers: layer,
                });
            }
        }
        Ok(RefinedValue {
            value,
            exact: false,
            layers: max_layers,
        })
    }

    /// Lebesgue measure of `{t ≤ horizon : M(t) = 0}` read off the skeleton.
    pub fn zero_set_measure(&self) -> f64 {
        let mut total = 0.0;
        let mut seg_start = 0.0;
        let mut v = self.x0;
        let segments = self
            .events
            .iter()
            .map(|e| (e.time, e.value))
            .chain(std::iter::once((self.horizon, f64::NAN)));
        for (end, next_value) in segments {
            let zero_from = if self.b > 0.0 {
                seg_start + v / self.b
            } else if v == 0.0 && self.b == 0.0 {
                seg_start
            } else {
                f64::INFINITY
            };
            if zero_from < end {
                total += end - zero_from;
            }
            seg_start = end;
            v = next_value;
        }
        total
    }

    /// Grid step giving 1000 cells over the horizon.
    pub fn default_grid_step(&self) -> f64 {
        self.horizon / 1000.0
    }

    /// `(t, M(t))` rows on `t = 0, step, 2·step, …, horizon`.
    pub fn to_grid_csv(&self, step: f64) -> Result<String> {
        if !(step > 0.0) {
            return Err(EsnError::Domain(format!("grid step must be > 0, got {step}")));
        }
        let n = (self.horizon / step).floor() as usize;
        let mut s = String::from("t,value\n");
        for i in 0..=n {
            let t = (i as f64 * step).min(self.horizon);
            let _ = writeln!(s, "{},{}", sig17(t), sig17(self.value_at(t)));
        }
        if (n as f64) * step < self.horizon {
            let _ = writeln!(s, "{},{}", sig17(self.horizon), sig17(self.value_at(self.horizon)));
        }
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("skeleton serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| EsnError::Parse(e.to_string()))
    }
}
