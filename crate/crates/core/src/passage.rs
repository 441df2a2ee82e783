//! First passages below a level, boundary behaviour at `0` and the inverse
//! local time at `0`.
//!
//! Everything is driven by
//!
//! ```text
//! g(s)   = exp((1/b) ∫_s^1 µ̄)          (= exp(−(1/b) ∫_1^s µ̄) for s > 1)
//! f_θ(x) = ∫_x^∞ e^{−θs/b} g(s) ds
//! 𝓘 = ∫_1^∞ g,   𝓙 = ∫_0^1 g
//! ```
//!
//! `E_x[e^{−θσ_a}] = f_θ(x)/f_θ(a)` for `x > a`. Divergence of `𝓘`, `𝓙` and
//! `f_θ(0)` is decided from the declared endpoint behaviour of `µ̄`; quadrature
//! only ever evaluates integrals already known to be finite.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{EsnError, Result};
use crate::laws::{FunctionClass, TestFunction};
use crate::quad::{integrate, integrate_left_power, integrate_to_infinity, ErrorSlot, Estimate, Tolerance};
use crate::tail_measure::{InfinityBehavior, TailMeasure, ZeroBehavior};

fn passage_tolerance() -> Tolerance {
    Tolerance {
        abs: 1e-300,
        rel: 1e-12,
        max_intervals: 4000,
    }
}

/// Value of an improper integral, or the reason it diverges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum IntegralValue {
    Finite { value: f64, abs_err: f64 },
    Divergent { proof: String },
}

impl IntegralValue {
    pub fn is_finite(&self) -> bool {
        matches!(self, IntegralValue::Finite { .. })
    }

    pub fn value(&self) -> f64 {
        match self {
            IntegralValue::Finite { value, .. } => *value,
            IntegralValue::Divergent { .. } => f64::INFINITY,
        }
    }

    fn from_estimate(e: Estimate) -> Self {
        IntegralValue::Finite {
            value: e.value,
            abs_err: e.abs_err,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recurrence {
    Transient,
    NullRecurrent,
    PositiveRecurrent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Accessible,
    Inaccessible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    /// `𝓘` at the given `b`.
    pub i_integral: IntegralValue,
    /// `𝓙` at the given `b`.
    pub j_integral: IntegralValue,
    /// `∫_1^∞ µ̄`.
    pub tail_above_one: IntegralValue,
    /// `∫_0^1 µ̄`.
    pub tail_below_one: IntegralValue,
    /// `𝓘` and `𝓙` at `b = 1`, which govern the cutout set.
    pub cutout_i: IntegralValue,
    pub cutout_j: IntegralValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub b: f64,
    pub recurrence: Recurrence,
    pub boundary: Boundary,
    pub sticky: bool,
    /// The cutout set reduces to `{0}`.
    pub cutout_degenerate: bool,
    pub cutout_bounded: bool,
    pub evidence: Evidence,
}

impl Classification {
    pub fn is_recurrent(&self) -> bool {
        self.recurrence != Recurrence::Transient
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("classification serializes")
    }
}

/// How the lower piece `∫_x^1` is mapped to remove the singularity of `g`
/// at `0`.
#[derive(Debug, Clone, Copy, PartialEq)]
enum LowerMap {
    /// `s = x + (1 − x) w^p`.
    Power(f64),
    /// `s = e^v`, only for `x > 0`.
    Log,
}

/// `f_θ` and everything derived from it for one `(µ, b)`, with memoized
/// `f_θ` values. Safe to share across threads.
#[derive(Debug)]
pub struct PassageSolver {
    measure: TailMeasure,
    b: f64,
    cache: RwLock<HashMap<(u64, u64), f64>>,
}

impl PassageSolver {
    pub fn new(measure: TailMeasure, b: f64) -> Result<Self> {
        if !(b > 0.0 && b.is_finite()) {
            return Err(EsnError::Precondition(format!("passage analysis needs b > 0, got {b}")));
        }
        Ok(PassageSolver {
            measure,
            b,
            cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn measure(&self) -> &TailMeasure {
        &self.measure
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// `ln g(s)`; `+∞` at `s = 0` when `∫_0^1 µ̄ = ∞`.
    pub fn log_g(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(EsnError::Domain(format!("g is defined on [0, ∞), got {s}")));
        }
        if s <= 1.0 {
            Ok(self.measure.tail_integral(s, 1.0)? / self.b)
        } else {
            Ok(-self.measure.tail_integral(1.0, s)? / self.b)
        }
    }

    pub fn g(&self, s: f64) -> Result<f64> {
        Ok(self.log_g(s)?.exp())
    }

    fn lower_map(&self) -> Result<LowerMap> {
        Ok(match self.measure.zero_behavior() {
            ZeroBehavior::Finite => LowerMap::Power(1.0),
            ZeroBehavior::Integrable | ZeroBehavior::LogHarmonic { .. } | ZeroBehavior::Undeclared => {
                LowerMap::Power(2.0)
            }
            ZeroBehavior::Harmonic { coef } => {
                let beta = coef / self.b;
                if beta < 1.0 {
                    LowerMap::Power(1.0 / (1.0 - beta))
                } else {
                    LowerMap::Log
                }
            }
            ZeroBehavior::Steep => LowerMap::Log,
        })
    }

    /// Certifies `𝓙 = ∞`, returning the reason, or `None` when `𝓙 < ∞`.
    fn j_divergence(&self) -> Result<Option<String>> {
        Ok(match self.measure.zero_behavior() {
            ZeroBehavior::Finite | ZeroBehavior::Integrable | ZeroBehavior::LogHarmonic { .. } => None,
            ZeroBehavior::Harmonic { coef } => {
                let beta = coef / self.b;
                if beta < 1.0 {
                    None
                } else {
                    Some(format!(
                        "µ̄(s) ~ {coef}/s at 0, so g(s) ~ C s^(-{beta}) with exponent ≥ 1"
                    ))
                }
            }
            ZeroBehavior::Steep => Some(
                "µ̄(s) ~ s^(-alpha), alpha > 1, at 0, so ln g(s) grows like s^(1-alpha)".to_string(),
            ),
            ZeroBehavior::Undeclared => {
                return Err(EsnError::InconclusiveDivergence(
                    "behaviour of µ̄ at 0 is not declared".into(),
                ))
            }
        })
    }

    fn i_divergence(&self) -> Result<Option<String>> {
        Ok(match self.measure.infinity_behavior() {
            InfinityBehavior::Integrable => {
                Some("∫_1^∞ µ̄ < ∞, so g tends to a positive constant".to_string())
            }
            InfinityBehavior::Harmonic { coef } => {
                let beta = coef / self.b;
                if beta <= 1.0 {
                    Some(format!("µ̄(s) ~ {coef}/s at ∞, so g(s) ~ C s^(-{beta}) with exponent ≤ 1"))
                } else {
                    None
                }
            }
            InfinityBehavior::Heavy => None,
            InfinityBehavior::Undeclared => {
                return Err(EsnError::InconclusiveDivergence(
                    "behaviour of µ̄ at ∞ is not declared".into(),
                ))
            }
        })
    }

    /// `𝓙 = ∫_0^1 g`.
    pub fn j_integral(&self) -> Result<IntegralValue> {
        if let Some(proof) = self.j_divergence()? {
            return Ok(IntegralValue::Divergent { proof });
        }
        let est = self.lower_piece(0.0, 0.0)?;
        Ok(IntegralValue::from_estimate(est))
    }

    /// `𝓘 = ∫_1^∞ g`.
    pub fn i_integral(&self) -> Result<IntegralValue> {
        if let Some(proof) = self.i_divergence()? {
            return Ok(IntegralValue::Divergent { proof });
        }
        let slot = ErrorSlot::new();
        let est = match self.measure.infinity_behavior() {
            InfinityBehavior::Harmonic { coef } => {
                // s = u^{−1/(β−1)} turns g(s) ds ~ s^{−β} ds into a bounded integrand
                let k = 1.0 / (coef / self.b - 1.0);
                integrate(
                    |u| {
                        let s = u.powf(-k);
                        if s.is_infinite() {
                            return 0.0;
                        }
                        k * s / u * slot.take(self.g(s))
                    },
                    0.0,
                    1.0,
                    passage_tolerance(),
                )
            }
            _ => integrate_to_infinity(|s| slot.take(self.g(s)), 1.0, passage_tolerance()),
        };
        Ok(IntegralValue::from_estimate(slot.finish(est)?.require("I integral")?))
    }

    /// `∫_x^1 e^{−θs/b} g(s) ds` for `x < 1`.
    fn lower_piece(&self, x: f64, theta: f64) -> Result<Estimate> {
        let b = self.b;
        let slot = ErrorSlot::new();
        let h = |s: f64| (-theta * s / b + slot.take(self.log_g(s))).exp();
        let est = match self.lower_map()? {
            LowerMap::Power(p) => {
                let singular = x == 0.0;
                integrate_left_power(h, x, 1.0, if singular { p } else { p.min(2.0) }, passage_tolerance())
            }
            LowerMap::Log => {
                if x == 0.0 {
                    return Err(EsnError::Divergent("f_theta(0) divergent: J = ∞".into()));
                }
                integrate(
                    |v| {
                        let s = v.exp();
                        s * h(s)
                    },
                    x.ln(),
                    0.0,
                    passage_tolerance(),
                )
            }
        };
        slot.finish(est)?.require("lower piece of f_theta")
    }

    /// `∫_A^∞ e^{−θs/b} g(s) ds`, `A ≥ 1`: dyadic pieces up to a few decay
    /// lengths `b/θ`, then `s = A' − (b/θ) ln u` on the rest.
    fn upper_piece(&self, a: f64, theta: f64) -> Result<Estimate> {
        let b = self.b;
        let scale = b / theta;
        let slot = ErrorSlot::new();
        let h = |s: f64| (-theta * s / b + slot.take(self.log_g(s))).exp();
        let mut total = Estimate::exact(0.0);
        let mut lo = a;
        let mut len = scale.min(1.0);
        while len < 8.0 * scale {
            total = total.add(integrate(h, lo, lo + len, passage_tolerance()));
            lo += len;
            len *= 2.0;
        }
        let start = lo;
        let head = (-theta * start / b).exp() * scale;
        let tail = integrate(
            |u| {
                if u == 0.0 {
                    return 0.0;
                }
                let s = start - scale * u.ln();
                if s.is_infinite() {
                    0.0
                } else {
                    head * slot.take(self.g(s))
                }
            },
            0.0,
            1.0,
            passage_tolerance(),
        );
        total = total.add(tail);
        slot.finish(total)?.require("upper piece of f_theta")
    }

    /// `f_θ(x)` with its quadrature error, uncached.
    pub fn f_theta_estimate(&self, x: f64, theta: f64) -> Result<Estimate> {
        if !(x >= 0.0) || x.is_infinite() {
            return Err(EsnError::Domain(format!("f_theta needs finite x ≥ 0, got {x}")));
        }
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(EsnError::Domain(format!("f_theta needs θ > 0, got {theta}")));
        }
        if x == 0.0 {
            if let Some(proof) = self.j_divergence()? {
                return Err(EsnError::Divergent(format!("f_theta(0) divergent: J = ∞ ({proof})")));
            }
        }
        let lower = if x < 1.0 { self.lower_piece(x, theta)? } else { Estimate::exact(0.0) };
        let upper = self.upper_piece(x.max(1.0), theta)?;
        let est = lower.add(upper);
        if !(est.value > 0.0) {
            return Err(EsnError::Quadrature {
                what: format!("f_theta({x}) underflowed at θ={theta}"),
                abs_err: est.abs_err,
            });
        }
        Ok(est)
    }

    /// `f_θ(x)`, memoized per `(x, θ)`.
    pub fn f_theta(&self, x: f64, theta: f64) -> Result<f64> {
        let key = (x.to_bits(), theta.to_bits());
        if let Some(v) = self.cache.read().expect("cache lock").get(&key) {
            return Ok(*v);
        }
        let v = self.f_theta_estimate(x, theta)?.value;
        self.cache.write().expect("cache lock").insert(key, v);
        Ok(v)
    }

    /// `f_θ'(x) = −e^{−θx/b} g(x)`.
    pub fn f_theta_prime(&self, x: f64, theta: f64) -> Result<f64> {
        Ok(-(-theta * x / self.b + self.log_g(x)?).exp())
    }

    /// `E_x[e^{−θσ_a}] = f_θ(x)/f_θ(a)`; `0` for `a = 0` when `0` is
    /// inaccessible.
    pub fn passage_laplace(&self, x: f64, a: f64, theta: f64) -> Result<f64> {
        if !(a >= 0.0 && x >= a) {
            return Err(EsnError::Precondition(format!("passage needs x ≥ a ≥ 0, got x={x}, a={a}")));
        }
        if x == a {
            return Ok(1.0);
        }
        if a == 0.0 && self.j_divergence()?.is_some() {
            return Ok(0.0);
        }
        Ok(self.f_theta(x, theta)? / self.f_theta(a, theta)?)
    }

    /// [`passage_laplace`](Self::passage_laplace) with a propagated
    /// quadrature error bound.
    pub fn passage_laplace_estimate(&self, x: f64, a: f64, theta: f64) -> Result<Estimate> {
        let value = self.passage_laplace(x, a, theta)?;
        if value == 0.0 || value == 1.0 {
            return Ok(Estimate::exact(value));
        }
        let fx = self.f_theta_estimate(x, theta)?;
        let fa = self.f_theta_estimate(a, theta)?;
        let rel = fx.abs_err / fx.value + fa.abs_err / fa.value;
        Ok(Estimate {
            value,
            abs_err: value * (rel + 4.0 * f64::EPSILON),
            converged: true,
        })
    }

    /// `φ(θ) = f_1(0)/f_θ(0)`, the Laplace exponent of the inverse local time
    /// at `0`.
    pub fn inverse_local_time_exponent(&self, theta: f64) -> Result<f64> {
        if let Some(proof) = self.j_divergence()? {
            return Err(EsnError::Precondition(format!("0 is inaccessible, no local time ({proof})")));
        }
        Ok(self.f_theta(0.0, 1.0)? / self.f_theta(0.0, theta)?)
    }

    /// [`inverse_local_time_exponent`](Self::inverse_local_time_exponent)
    /// with a propagated quadrature error bound.
    pub fn inverse_local_time_exponent_estimate(&self, theta: f64) -> Result<Estimate> {
        let value = self.inverse_local_time_exponent(theta)?;
        let f1 = self.f_theta_estimate(0.0, 1.0)?;
        let ft = self.f_theta_estimate(0.0, theta)?;
        let rel = f1.abs_err / f1.value + ft.abs_err / ft.value;
        Ok(Estimate {
            value,
            abs_err: value * (rel + 4.0 * f64::EPSILON),
            converged: true,
        })
    }

    /// `f_θ` as a test function for the generator and semigroup.
    pub fn test_function(self: &Arc<Self>, theta: f64) -> Result<TestFunction> {
        let f_solver = Arc::clone(self);
        let d_solver = Arc::clone(self);
        TestFunction::new(
            format!("f_theta({theta})"),
            Arc::new(move |y| f_solver.f_theta(y, theta).unwrap_or(f64::NAN)),
            Arc::new(move |y| d_solver.f_theta_prime(y, theta).unwrap_or(f64::NAN)),
            FunctionClass::General,
            0.0,
        )
    }

    fn tail_value(&self, a: f64, b: f64, divergence: &str) -> Result<IntegralValue> {
        let v = self.measure.tail_integral(a, b)?;
        Ok(if v.is_infinite() {
            IntegralValue::Divergent {
                proof: divergence.to_string(),
            }
        } else {
            IntegralValue::Finite { value: v, abs_err: 0.0 }
        })
    }

    pub fn classify(&self) -> Result<Classification> {
        let unit = if self.b == 1.0 {
            None
        } else {
            Some(PassageSolver::new(self.measure.clone(), 1.0)?)
        };
        let cut = unit.as_ref().unwrap_or(self);
        let i_integral = self.i_integral()?;
        let j_integral = self.j_integral()?;
        let tail_above_one = self.tail_value(1.0, f64::INFINITY, &tail_proof(self.measure.infinity_behavior()))?;
        let tail_below_one = self.tail_value(0.0, 1.0, &zero_proof(self.measure.zero_behavior()))?;
        let cutout_i = cut.i_integral()?;
        let cutout_j = cut.j_integral()?;
        let recurrence = if i_integral.is_finite() {
            Recurrence::Transient
        } else if tail_above_one.is_finite() {
            Recurrence::PositiveRecurrent
        } else {
            Recurrence::NullRecurrent
        };
        Ok(Classification {
            b: self.b,
            recurrence,
            boundary: if j_integral.is_finite() {
                Boundary::Accessible
            } else {
                Boundary::Inaccessible
            },
            sticky: tail_below_one.is_finite(),
            cutout_degenerate: !cutout_j.is_finite(),
            cutout_bounded: cutout_i.is_finite(),
            evidence: Evidence {
                i_integral,
                j_integral,
                tail_above_one,
                tail_below_one,
                cutout_i,
                cutout_j,
            },
        })
    }
}

fn tail_proof(b: InfinityBehavior) -> String {
    match b {
        InfinityBehavior::Harmonic { coef } => format!("µ̄(s) ~ {coef}/s at ∞"),
        InfinityBehavior::Heavy => "µ̄(s) ~ s^(-alpha), alpha < 1, at ∞".into(),
        _ => "certified by the tail integral".into(),
    }
}

fn zero_proof(b: ZeroBehavior) -> String {
    match b {
        ZeroBehavior::Harmonic { coef } => format!("µ̄(s) ~ {coef}/s at 0"),
        ZeroBehavior::LogHarmonic { coef } => format!("µ̄(s) = {coef}/(s ln(1/s)) near 0"),
        ZeroBehavior::Steep => "µ̄(s) ~ s^(-alpha), alpha > 1, at 0".into(),
        _ => "certified by the tail integral".into(),
    }
}

pub fn classify(b: f64, measure: &TailMeasure) -> Result<Classification> {
    PassageSolver::new(measure.clone(), b)?.classify()
}

/// True when the Poisson intervals `(s, s + ξ_s)` cover all of `(0, ∞)`.
pub fn shepp_criterion(measure: &TailMeasure) -> Result<bool> {
    Ok(PassageSolver::new(measure.clone(), 1.0)?.j_divergence()?.is_some())
}

/// `φ(θ) = θ^{1 − c/b}` for `µ̄(x) = c/x`, `c < b`.
pub fn selfsimilar_phi(c: f64, b: f64, theta: f64) -> f64 {
    theta.powf(1.0 - c / b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs()
    }

    fn solver(m: TailMeasure) -> PassageSolver {
        PassageSolver::new(m, 1.0).unwrap()
    }

    /// erfc via a Taylor series of erf; accurate near 1.
    fn erfc(x: f64) -> f64 {
        let mut term = x;
        let mut sum = x;
        for n in 1..60 {
            term *= -x * x / n as f64;
            sum += term / (2 * n + 1) as f64;
        }
        1.0 - 2.0 / PI.sqrt() * sum
    }

    #[test]
    fn pure_drift_f_theta() {
        let s = solver(TailMeasure::zero());
        for (x, th) in [(0.0, 1.0), (0.5, 2.0), (3.0, 0.7)] {
            let v = s.f_theta(x, th).unwrap();
            assert!(close(v, (-th * x).exp() / th, 1e-10), "{x} {th}: {v}");
        }
        assert!(close(s.passage_laplace(3.0, 1.0, 2.0).unwrap(), (-4.0f64).exp(), 1e-10));
    }

    #[test]
    fn half_harmonic_gamma_integrals() {
        let s = solver(TailMeasure::power_law(0.5, 1.0).unwrap());
        assert!(close(s.f_theta(0.0, 1.0).unwrap(), PI.sqrt(), 1e-9));
        assert!(close(s.f_theta(0.0, 3.0).unwrap(), (PI / 3.0).sqrt(), 1e-9));
        let r = s.passage_laplace(1.0, 0.0, 1.0).unwrap();
        assert!(close(r, erfc(1.0), 1e-9), "{r}");
        assert!((erfc(1.0) - 0.157299).abs() < 1e-6);
    }

    #[test]
    fn harmonic_unit_diverges_at_zero() {
        let s = solver(TailMeasure::power_law(1.0, 1.0).unwrap());
        assert!(matches!(s.f_theta(0.0, 1.0), Err(EsnError::Divergent(_))));
        assert_eq!(s.passage_laplace(1.0, 0.0, 1.0).unwrap(), 0.0);
        assert!(s.f_theta(0.5, 1.0).unwrap().is_finite());
    }

    #[test]
    fn f_theta_matches_incomplete_gamma_for_steep_harmonic() {
        // c = 2: f_1(x) = ∫_x^∞ e^{−s} s^{−2} ds = e^{−x}/x − E_1(x)
        let s = solver(TailMeasure::power_law(2.0, 1.0).unwrap());
        let x: f64 = 0.5;
        // E_1 by its series
        let mut e1 = -0.577_215_664_901_532_9 - x.ln();
        let mut term = 1.0;
        for k in 1..80 {
            term *= -x / k as f64;
            e1 -= term / k as f64;
        }
        let oracle = (-x).exp() / x - e1;
        assert!(close(s.f_theta(x, 1.0).unwrap(), oracle, 1e-9));
    }

    #[test]
    fn phi_selfsimilar() {
        for c in [0.25, 0.5, 0.75] {
            let s = solver(TailMeasure::power_law(c, 1.0).unwrap());
            for th in [0.5, 1.0, 2.0, 4.0] {
                let phi = s.inverse_local_time_exponent(th).unwrap();
                assert!(close(phi, selfsimilar_phi(c, 1.0, th), 1e-8), "c={c} θ={th}: {phi}");
            }
        }
        let z = solver(TailMeasure::zero());
        assert!(close(z.inverse_local_time_exponent(3.0).unwrap(), 3.0, 1e-10));
        assert!(solver(TailMeasure::power_law(1.5, 1.0).unwrap())
            .inverse_local_time_exponent(2.0)
            .is_err());
    }

    #[test]
    fn phi_with_non_unit_drift() {
        let s = PassageSolver::new(TailMeasure::power_law(0.5, 1.0).unwrap(), 2.0).unwrap();
        let phi = s.inverse_local_time_exponent(4.0).unwrap();
        assert!(close(phi, selfsimilar_phi(0.5, 2.0, 4.0), 1e-8));
    }

    #[test]
    fn classification_table() {
        let t = classify(1.0, &TailMeasure::power_law(2.0, 1.0).unwrap()).unwrap();
        assert_eq!(t.recurrence, Recurrence::Transient);
        assert_eq!(t.boundary, Boundary::Inaccessible);
        assert!(!t.sticky && t.cutout_degenerate);
        let n = classify(1.0, &TailMeasure::power_law(0.5, 1.0).unwrap()).unwrap();
        assert_eq!(n.recurrence, Recurrence::NullRecurrent);
        assert_eq!(n.boundary, Boundary::Accessible);
        assert!(!n.sticky && !n.cutout_degenerate && !n.cutout_bounded);
        let e = classify(1.0, &TailMeasure::exponential(1.0, 1.0).unwrap()).unwrap();
        assert_eq!(e.recurrence, Recurrence::PositiveRecurrent);
        assert_eq!(e.boundary, Boundary::Accessible);
        assert!(e.sticky);
        let json = e.to_json();
        let back: Classification = serde_json::from_str(&json).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn transient_i_integral_value() {
        // c = 2: 𝓘 = ∫_1^∞ s^{−2} ds = 1
        let s = solver(TailMeasure::power_law(2.0, 1.0).unwrap());
        assert!(close(s.i_integral().unwrap().value(), 1.0, 1e-10));
        // c = 0.5: 𝓙 = ∫_0^1 s^{−1/2} ds = 2
        let s = solver(TailMeasure::power_law(0.5, 1.0).unwrap());
        assert!(close(s.j_integral().unwrap().value(), 2.0, 1e-10));
    }

    #[test]
    fn shepp_examples() {
        assert!(shepp_criterion(&TailMeasure::power_law(1.5, 1.0).unwrap()).unwrap());
        assert!(shepp_criterion(&TailMeasure::power_law(1.0, 1.0).unwrap()).unwrap());
        assert!(!shepp_criterion(&TailMeasure::power_law(0.5, 1.0).unwrap()).unwrap());
        assert!(!shepp_criterion(&TailMeasure::zero()).unwrap());
        assert!(!shepp_criterion(&TailMeasure::log_cutout()).unwrap());
    }

    #[test]
    fn log_cutout_f_theta_at_zero() {
        // g(s) = ln(1/s) for s < 1/e and 1 on [1/e, 1]; f_θ(0) finite
        let s = solver(TailMeasure::log_cutout());
        let v = s.f_theta(0.0, 1.0).unwrap();
        let inv_e = (-1.0f64).exp();
        // ∫_0^a u^k ln(1/u) du = a^{k+1}/(k+1) · (ln(1/a) + 1/(k+1)), with ln(1/a) = 1
        let mut lower = 0.0;
        let mut fact = 1.0;
        for k in 0..40 {
            if k > 0 {
                fact *= k as f64;
            }
            let kk = (k + 1) as f64;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            lower += sign / fact * inv_e.powi(k + 1) / kk * (1.0 + 1.0 / kk);
        }
        let oracle = lower + (-inv_e).exp();
        assert!(close(v, oracle, 1e-9), "{v} vs {oracle}");
    }

    #[test]
    fn recurrence_limit() {
        let nr = solver(TailMeasure::power_law(0.5, 1.0).unwrap());
        assert!(nr.passage_laplace(2.0, 1.0, 1e-4).unwrap() > 0.99);
        let tr = solver(TailMeasure::power_law(2.0, 1.0).unwrap());
        let v = tr.passage_laplace(2.0, 1.0, 1e-4).unwrap();
        assert!((v - 0.5).abs() < 1e-2, "{v}");
    }

    #[test]
    fn cached_values_are_reused() {
        let s = solver(TailMeasure::exponential(1.0, 1.0).unwrap());
        let a = s.f_theta(1.0, 1.0).unwrap();
        let b = s.f_theta(1.0, 1.0).unwrap();
        assert_eq!(a, b);
        assert_eq!(s.cache.read().unwrap().len(), 1);
    }
}
