//! Closed-form laws of `ESN(b, µ)`: one- and multi-dimensional marginals,
//! the stationary law, the zero-set atom, the generator and the semigroup.

use std::fmt;
use std::sync::Arc;

use crate::error::{EsnError, Result};
use crate::quad::{integrate, integrate_left_power, integrate_to_infinity, ErrorSlot, Estimate, Tolerance};
use crate::tail_measure::TailMeasure;

pub(crate) fn law_tolerance() -> Tolerance {
    Tolerance {
        abs: 1e-13,
        rel: 1e-12,
        max_intervals: 4000,
    }
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(EsnError::Domain(format!("time must be positive and finite, got {t}")))
    }
}

fn check_start(x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(EsnError::Domain(format!("initial value must be ≥ 0, got {x}")))
    }
}

/// `(1/|b|) ∫ µ̄` over the segment swept by a line of slope `−b` in time `dt`
/// ending at level `end`; for `b = 0` the open tail times `dt`.
fn swept_mass(measure: &TailMeasure, b: f64, end: f64, dt: f64) -> Result<f64> {
    if b == 0.0 {
        let rate = measure.tail_open(end);
        return Ok(if rate == 0.0 { 0.0 } else { dt * rate });
    }
    let start = end + b * dt;
    let (lo, hi) = if start <= end { (start, end) } else { (end, start) };
    let lo = lo.max(0.0);
    match measure.tail_integral(lo, hi) {
        Ok(v) => Ok(v / b.abs()),
        Err(EsnError::Quadrature { .. }) => {
            // direct time integral of µ̄ along the line
            let slot = ErrorSlot::new();
            let est = integrate(
                |s| slot.take(measure.bar_mu((end + b * (dt - s)).max(0.0))),
                0.0,
                dt,
                law_tolerance(),
            );
            Ok(slot.finish(est)?.require("segment integral")?.value)
        }
        Err(e) => Err(e),
    }
}

/// `F^x_t(u) = P_x(M(t) ≤ u)`.
pub fn cdf(x: f64, t: f64, u: f64, b: f64, measure: &TailMeasure) -> Result<f64> {
    check_start(x)?;
    check_time(t)?;
    if u.is_nan() {
        return Err(EsnError::Domain("level is NaN".into()));
    }
    let support = (x - b * t).max(0.0).max(-b * t);
    if u < support {
        return Ok(0.0);
    }
    if u.is_infinite() {
        return Ok(1.0);
    }
    Ok((-swept_mass(measure, b, u, t)?).exp())
}

/// `P_0(M(s_1) ≤ u_1, …, M(s_n) ≤ u_n)`.
pub fn fdd(times: &[f64], levels: &[f64], b: f64, measure: &TailMeasure) -> Result<f64> {
    fdd_from(0.0, times, levels, b, measure)
}

/// `P_x(M(s_1) ≤ u_1, …, M(s_n) ≤ u_n)`.
///
/// On `[s_{i−1}, s_i]` the constraint lines `u_j + b (s_j − t)`, `j ≥ i`,
/// are parallel, so the binding one is the minimiser of `u_j + b s_j` and
/// each segment contributes a single tail integral.
pub fn fdd_from(x: f64, times: &[f64], levels: &[f64], b: f64, measure: &TailMeasure) -> Result<f64> {
    check_start(x)?;
    if times.is_empty() || times.len() != levels.len() {
        return Err(EsnError::Domain(format!(
            "need matching non-empty times and levels, got {} and {}",
            times.len(),
            levels.len()
        )));
    }
    if !(times[0] > 0.0) || times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
        return Err(EsnError::Domain("times must be positive, finite and strictly increasing".into()));
    }
    for (&s, &u) in times.iter().zip(levels) {
        if u.is_nan() {
            return Err(EsnError::Domain("level is NaN".into()));
        }
        if u < (x - b * s).max(0.0).max(-b * s) {
            return Ok(0.0);
        }
    }
    let n = times.len();
    // index j ≥ i minimising u_j + b s_j
    let mut binding = vec![n - 1; n];
    for i in (0..n - 1).rev() {
        let j = binding[i + 1];
        binding[i] = if levels[i] + b * times[i] <= levels[j] + b * times[j] { i } else { j };
    }
    let mut total = 0.0;
    let mut prev = 0.0;
    for i in 0..n {
        let j = binding[i];
        if levels[j].is_finite() {
            let level = if j == i { levels[i] } else { levels[j] + b * (times[j] - times[i]) };
            total += swept_mass(measure, b, level, times[i] - prev)?;
        }
        if total.is_infinite() {
            return Ok(0.0);
        }
        prev = times[i];
    }
    Ok((-total).exp())
}

/// `π([0, u]) = exp(−(1/b) ∫_u^∞ µ̄)`.
pub fn stationary_cdf(u: f64, b: f64, measure: &TailMeasure) -> Result<f64> {
    require_stationary(b, measure)?;
    if u.is_nan() {
        return Err(EsnError::Domain("level is NaN".into()));
    }
    if u < 0.0 {
        return Ok(0.0);
    }
    Ok((-measure.tail_integral(u, f64::INFINITY)? / b).exp())
}

fn require_stationary(b: f64, measure: &TailMeasure) -> Result<()> {
    if !(b > 0.0) {
        return Err(EsnError::Precondition(format!("stationary law needs b > 0, got {b}")));
    }
    if measure.tail_integral(1.0, f64::INFINITY)?.is_infinite() {
        return Err(EsnError::NoStationaryLaw(
            "∫_1^∞ µ̄ = ∞, the process drifts to infinity in probability".into(),
        ));
    }
    Ok(())
}

/// Upper bound `(1/b) ∫_{bt}^∞ µ̄` on the total variation distance between
/// the law of `M(t)` under `P_x` and the stationary law, for `t > x/b`.
pub fn tv_bound(x: f64, t: f64, b: f64, measure: &TailMeasure) -> Result<f64> {
    check_start(x)?;
    check_time(t)?;
    require_stationary(b, measure)?;
    if !(t > x / b) {
        return Err(EsnError::Precondition(format!("tv bound needs t > x/b, got t={t}, x/b={}", x / b)));
    }
    Ok(measure.tail_integral(b * t, f64::INFINITY)? / b)
}

/// `P_0(M(s) = 0)`.
pub fn atom_zero_prob(s: f64, b: f64, measure: &TailMeasure) -> Result<f64> {
    check_time(s)?;
    if b < 0.0 {
        return Ok(0.0);
    }
    Ok((-swept_mass(measure, b, 0.0, s)?).exp())
}

/// `E_x |{s ≤ horizon : M(s) = 0}| = ∫ P_0(M(s) = 0) 1{s ≥ x/b} ds`.
pub fn expected_zero_time(x: f64, horizon: f64, b: f64, measure: &TailMeasure) -> Result<Estimate> {
    check_start(x)?;
    check_time(horizon)?;
    if !(b > 0.0) {
        return Err(EsnError::Precondition(format!("zero time needs b > 0, got {b}")));
    }
    let start = (x / b).min(horizon);
    let slot = ErrorSlot::new();
    let est = integrate(
        |s| if s == 0.0 { 1.0 } else { slot.take(atom_zero_prob(s, b, measure)) },
        start,
        horizon,
        law_tolerance(),
    );
    slot.finish(est)?.require("expected zero time")
}

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Regularity class of a test function near `0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FunctionClass {
    /// Constant on `[0, radius]`.
    D0 { radius: f64 },
    /// `f'(0) = 0` and `∫_0^1 |f'| µ̄ < ∞`.
    D1,
    General,
}

/// A `C^1` function on `[0, ∞)` with a limit at infinity, on which the
/// generator and the semigroup act.
#[derive(Clone)]
pub struct TestFunction {
    name: String,
    f: RealFn,
    f_prime: RealFn,
    class: FunctionClass,
    at_infinity: f64,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("name", &self.name)
            .field("class", &self.class)
            .field("at_infinity", &self.at_infinity)
            .finish()
    }
}

const PROBE: [f64; 9] = [0.0, 1e-6, 1e-3, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0];

impl TestFunction {
    /// Registers a test function; `f(∞) = at_infinity`. The class claim is
    /// checked at the origin and on a probe grid.
    pub fn new(
        name: impl Into<String>,
        f: RealFn,
        f_prime: RealFn,
        class: FunctionClass,
        at_infinity: f64,
    ) -> Result<Self> {
        let name = name.into();
        if !at_infinity.is_finite() {
            return Err(EsnError::InvalidParams(format!("{name}: f(∞) must be finite")));
        }
        for &y in &PROBE[1..] {
            if !f(y).is_finite() || !f_prime(y).is_finite() {
                return Err(EsnError::InvalidParams(format!("{name}: not finite at y={y}")));
            }
        }
        match class {
            FunctionClass::D1 => {
                let d0 = f_prime(0.0);
                if d0.abs() > 1e-12 {
                    return Err(EsnError::InvalidParams(format!("{name}: class D1 needs f'(0) = 0, got {d0}")));
                }
            }
            FunctionClass::D0 { radius } => {
                if !(radius > 0.0) {
                    return Err(EsnError::InvalidParams(format!("{name}: D0 radius must be > 0")));
                }
                for &y in PROBE.iter().filter(|y| **y <= radius) {
                    if f_prime(y) != 0.0 {
                        return Err(EsnError::InvalidParams(format!(
                            "{name}: class D0 needs f' = 0 on [0, {radius}], f'({y}) ≠ 0"
                        )));
                    }
                }
            }
            FunctionClass::General => {}
        }
        Ok(TestFunction {
            name,
            f,
            f_prime,
            class,
            at_infinity,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn class(&self) -> FunctionClass {
        self.class
    }

    pub fn at_infinity(&self) -> f64 {
        self.at_infinity
    }

    pub fn eval(&self, y: f64) -> f64 {
        if y.is_infinite() {
            self.at_infinity
        } else {
            (self.f)(y)
        }
    }

    pub fn derivative(&self, y: f64) -> f64 {
        (self.f_prime)(y)
    }

    /// Numerical check of `∫_0^1 |f'| µ̄ < ∞` over dyadic shells.
    pub fn validate_for(&self, measure: &TailMeasure) -> Result<()> {
        if measure.tail(0.0).is_finite() || matches!(self.class, FunctionClass::D0 { .. }) {
            return Ok(());
        }
        let shell = |k: i32| {
            let hi = 2f64.powi(-k);
            integrate(
                |y| self.derivative(y).abs() * measure.tail(y),
                0.5 * hi,
                hi,
                law_tolerance(),
            )
            .value
        };
        let total: f64 = (0..30).map(shell).sum();
        let late: f64 = (30..40).map(shell).sum();
        if late.is_finite() && late <= 1e-6 * (1.0 + total) {
            Ok(())
        } else {
            Err(EsnError::Divergent(format!(
                "{}: ∫_0^1 |f'| µ̄ does not converge (shells 30..40 carry {late:e})",
                self.name
            )))
        }
    }

    pub fn constant(c: f64) -> Self {
        TestFunction::new(
            format!("const({c})"),
            Arc::new(move |_| c),
            Arc::new(|_| 0.0),
            FunctionClass::D0 { radius: f64::INFINITY },
            c,
        )
        .expect("constant is a valid test function")
    }

    /// `e^{−y²}`.
    pub fn gaussian() -> Self {
        TestFunction::new(
            "exp(-y^2)",
            Arc::new(|y| (-y * y).exp()),
            Arc::new(|y| -2.0 * y * (-y * y).exp()),
            FunctionClass::D1,
            0.0,
        )
        .expect("valid")
    }

    /// `1/(1 + y²)`.
    pub fn cauchy() -> Self {
        TestFunction::new(
            "1/(1+y^2)",
            Arc::new(|y| 1.0 / (1.0 + y * y)),
            Arc::new(|y| {
                let d = 1.0 + y * y;
                -2.0 * y / (d * d)
            }),
            FunctionClass::D1,
            0.0,
        )
        .expect("valid")
    }

    /// `y² e^{−y}`.
    pub fn gamma_bump() -> Self {
        TestFunction::new(
            "y^2*exp(-y)",
            Arc::new(|y| y * y * (-y).exp()),
            Arc::new(|y| (2.0 * y - y * y) * (-y).exp()),
            FunctionClass::D1,
            0.0,
        )
        .expect("valid")
    }

    /// `e^{−y}`.
    pub fn exponential() -> Self {
        TestFunction::new(
            "exp(-y)",
            Arc::new(|y| (-y).exp()),
            Arc::new(|y| -(-y).exp()),
            FunctionClass::General,
            0.0,
        )
        .expect("valid")
    }

    /// `exp(−((y − r)_+)²)`, constant on `[0, r]`.
    pub fn plateau(radius: f64) -> Result<Self> {
        TestFunction::new(
            format!("plateau({radius})"),
            Arc::new(move |y| {
                let z = (y - radius).max(0.0);
                (-z * z).exp()
            }),
            Arc::new(move |y| {
                let z = (y - radius).max(0.0);
                -2.0 * z * (-z * z).exp()
            }),
            FunctionClass::D0 { radius },
            0.0,
        )
    }
}

/// `∫_a^∞ h` split at `a + 1`; the first piece uses `w²` spacing when the
/// integrand may carry an algebraic singularity at `a`.
fn half_line<F: Fn(f64) -> f64>(h: F, a: f64, singular: bool, tol: Tolerance) -> Estimate {
    let mid = a + 1.0;
    let head = if singular {
        integrate_left_power(&h, a, mid, 2.0, tol)
    } else {
        integrate(&h, a, mid, tol)
    };
    head.add(integrate_to_infinity(&h, mid, tol))
}

/// `𝒜f(x) = ∫_x^∞ µ̄(v) f'(v) dv − b f'(x)`.
pub fn generator_apply(f: &TestFunction, x: f64, b: f64, measure: &TailMeasure) -> Result<Estimate> {
    check_start(x)?;
    let singular = measure.tail(0.0).is_infinite();
    let start = match f.class() {
        FunctionClass::D0 { radius } => x.max(radius),
        FunctionClass::D1 => x,
        FunctionClass::General => {
            if x == 0.0 && singular {
                return Err(EsnError::Precondition(format!(
                    "{}: the generator at 0 needs a D0 or D1 test function when µ̄(0) = ∞",
                    f.name()
                )));
            }
            x
        }
    };
    let jump = if start.is_infinite() {
        Estimate::exact(0.0)
    } else {
        half_line(
            |v| {
                let d = f.derivative(v);
                if d == 0.0 {
                    0.0
                } else {
                    measure.tail(v) * d
                }
            },
            start,
            singular && start == 0.0,
            law_tolerance(),
        )
    };
    let drift = Estimate::exact(-b * f.derivative(x));
    jump.add(drift).require("generator integral")
}

/// `P_t f(x) = E_x f(M(t)) = f(∞) − ∫_{m}^∞ f'(y) F^x_t(y) dy`, where `m` is
/// the lower edge of the support of `M(t)`.
pub fn semigroup_apply(f: &TestFunction, x: f64, t: f64, b: f64, measure: &TailMeasure) -> Result<Estimate> {
    check_start(x)?;
    check_time(t)?;
    let m = (x - b * t).max(0.0).max(-b * t);
    let singular = m == 0.0 && measure.tail(0.0).is_infinite();
    let slot = ErrorSlot::new();
    let est = half_line(
        |y| {
            let d = f.derivative(y);
            if d == 0.0 {
                0.0
            } else {
                d * slot.take(cdf(x, t, y, b, measure))
            }
        },
        m,
        singular,
        law_tolerance(),
    );
    let est = slot.finish(est)?;
    Estimate::exact(f.at_infinity())
        .add(est.scale(-1.0))
        .require("semigroup integral")
}

/// Richardson extrapolation of `d(δ)` to `δ → 0` over `δ_0, δ_0/2, …`,
/// assuming an error expansion in integer powers of `δ`. The error estimate
/// is the change across the last extrapolation order.
pub fn richardson<F: FnMut(f64) -> Result<f64>>(mut d: F, delta0: f64, levels: usize) -> Result<Estimate> {
    if levels < 2 || !(delta0 > 0.0) {
        return Err(EsnError::Domain("richardson needs δ0 > 0 and at least two levels".into()));
    }
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(levels);
    for i in 0..levels {
        let delta = delta0 / 2f64.powi(i as i32);
        let mut row = vec![d(delta)?];
        for j in 1..=i {
            let factor = 2f64.powi(j as i32) - 1.0;
            let v = row[j - 1] + (row[j - 1] - table[i - 1][j - 1]) / factor;
            row.push(v);
        }
        table.push(row);
    }
    let last = &table[levels - 1];
    let best = last[levels - 1];
    let err = (best - last[levels - 2]).abs();
    Ok(Estimate {
        value: best,
        abs_err: err,
        converged: best.is_finite(),
    })
}

/// Richardson-extrapolated `(P_δ f(x) − f(x))/δ`.
pub fn semigroup_derivative(
    f: &TestFunction,
    x: f64,
    b: f64,
    measure: &TailMeasure,
    delta0: f64,
    levels: usize,
) -> Result<Estimate> {
    let fx = f.eval(x);
    richardson(
        |delta| Ok((semigroup_apply(f, x, delta, b, measure)?.value - fx) / delta),
        delta0,
        levels,
    )
}
