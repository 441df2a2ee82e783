//! The intensity measure `µ` on `(0, ∞)`, handled through its tail
//! `µ̄(x) = µ([x, ∞))`.
//!
//! Every family carries enough structure to decide divergence of the
//! improper integrals `∫_0 µ̄` and `∫^∞ µ̄` analytically; quadrature is never
//! asked to certify a divergence.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{EsnError, Result};

/// `1/e`, the support edge of [`Family::LogCutout`].
pub const INV_E: f64 = 0.367_879_441_171_442_33;

/// A point mass of the jump law of a finite measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub position: f64,
    pub weight: f64,
}

/// Tabulated tail with power-law extrapolation outside the knot range.
///
/// Between two positive values the tail is interpolated log-log linearly
/// (piecewise power law); a segment ending at zero is interpolated linearly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseTable {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
    /// `µ̄(x) ∝ x^(−lower_exponent)` below the first knot.
    pub lower_exponent: Option<f64>,
    /// `µ̄(x) ∝ x^(−upper_exponent)` above the last knot.
    pub upper_exponent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// `µ̄(x) = c x^(−alpha)`.
    PowerLaw { c: f64, alpha: f64 },
    /// `µ̄(x) = c e^(−lambda x)`.
    Exponential { c: f64, lambda: f64 },
    /// `µ̄(x) = 1/(x log(1/x))` for `x < 1/e`, zero beyond.
    LogCutout,
    /// Finite measure `total_mass × (jump law)` with a discrete jump law.
    FiniteAtomic { total_mass: f64, atoms: Vec<Atom> },
    PiecewiseTable(PiecewiseTable),
}

/// Which operations have closed forms for a family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AnalyticFlags {
    pub tail_integral: bool,
    pub quantile: bool,
}

/// Behaviour of `µ̄` near `0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZeroBehavior {
    /// `µ̄(0) < ∞`.
    Finite,
    /// `µ̄(0) = ∞` but `∫_0^1 µ̄ < ∞`.
    Integrable,
    /// `µ̄(x) ~ coef / x`.
    Harmonic { coef: f64 },
    /// `µ̄(x) ~ x^(−alpha)` with `alpha > 1`.
    Steep,
    /// `µ̄(x) = coef / (x log(1/x))`.
    LogHarmonic { coef: f64 },
    /// No declared exponent.
    Undeclared,
}

/// Behaviour of `µ̄` near `∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InfinityBehavior {
    /// `∫_1^∞ µ̄ < ∞`.
    Integrable,
    /// `µ̄(x) ~ coef / x`.
    Harmonic { coef: f64 },
    /// `µ̄(x) ~ x^(−alpha)` with `alpha < 1`.
    Heavy,
    Undeclared,
}

#[derive(Debug, Clone, PartialEq)]
enum Derived {
    None,
    Atomic { positions: Vec<f64>, suffix: Vec<f64> },
    Table(TableCache),
}

#[derive(Debug, Clone, PartialEq)]
struct TableCache {
    /// Per-segment log-log slope; `None` for linear segments.
    slopes: Vec<Option<f64>>,
    lower: f64,
    upper: f64,
}

/// The measure `µ`, seen through its tail.
///
/// Immutable after construction. `weight` multiplies the family's tail, so
/// `µ/n` is `measure.scaled(1.0 / n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureRepr", into = "MeasureRepr")]
pub struct TailMeasure {
    family: Family,
    weight: f64,
    derived: Derived,
}

#[derive(Serialize, Deserialize)]
struct MeasureRepr {
    #[serde(flatten)]
    family: Family,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    weight: f64,
}

fn one() -> f64 {
    1.0
}

fn is_one(w: &f64) -> bool {
    *w == 1.0
}

impl TryFrom<MeasureRepr> for TailMeasure {
    type Error = EsnError;
    fn try_from(r: MeasureRepr) -> Result<Self> {
        TailMeasure::new(r.family)?.scaled(r.weight)
    }
}

impl From<TailMeasure> for MeasureRepr {
    fn from(m: TailMeasure) -> Self {
        MeasureRepr {
            family: m.family,
            weight: m.weight,
        }
    }
}

impl fmt::Display for TailMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.weight != 1.0 {
            write!(f, "{} × ", self.weight)?;
        }
        match &self.family {
            Family::PowerLaw { c, alpha } => write!(f, "PowerLaw(c={c}, alpha={alpha})"),
            Family::Exponential { c, lambda } => write!(f, "Exponential(c={c}, lambda={lambda})"),
            Family::LogCutout => write!(f, "LogCutout"),
            Family::FiniteAtomic { total_mass, atoms } => {
                write!(f, "FiniteAtomic(mass={total_mass}, {} atoms)", atoms.len())
            }
            Family::PiecewiseTable(t) => write!(f, "PiecewiseTable({} knots)", t.knots.len()),
        }
    }
}

fn invalid(msg: impl Into<String>) -> EsnError {
    EsnError::InvalidParams(msg.into())
}

/// `∫_a^b k x^(−alpha) dx` for `0 ≤ a ≤ b ≤ ∞`, `alpha ≥ 0`, with divergence
/// decided from the exponent.
fn power_integral(k: f64, alpha: f64, a: f64, b: f64) -> f64 {
    if k == 0.0 || a >= b {
        return 0.0;
    }
    let q = 1.0 - alpha;
    if a == 0.0 {
        if alpha >= 1.0 || b.is_infinite() {
            return f64::INFINITY;
        }
        return k * b.powf(q) / q;
    }
    if b.is_infinite() {
        if alpha <= 1.0 {
            return f64::INFINITY;
        }
        return k * a.powf(q) / -q;
    }
    let r = (b / a).ln();
    if alpha == 1.0 {
        k * r
    } else {
        k * a.powf(q) * (q * r).exp_m1() / q
    }
}

impl TailMeasure {
    pub fn new(family: Family) -> Result<Self> {
        let (family, derived) = match family {
            Family::PowerLaw { c, alpha } => {
                if !(c >= 0.0 && c.is_finite()) {
                    return Err(invalid(format!("power law c must be ≥ 0, got {c}")));
                }
                if !(alpha > 0.0 && alpha.is_finite()) {
                    return Err(invalid(format!("power law alpha must be > 0, got {alpha}")));
                }
                (Family::PowerLaw { c, alpha }, Derived::None)
            }
            Family::Exponential { c, lambda } => {
                if !(c >= 0.0 && c.is_finite()) {
                    return Err(invalid(format!("exponential c must be ≥ 0, got {c}")));
                }
                if !(lambda > 0.0 && lambda.is_finite()) {
                    return Err(invalid(format!("exponential lambda must be > 0, got {lambda}")));
                }
                (Family::Exponential { c, lambda }, Derived::None)
            }
            Family::LogCutout => (Family::LogCutout, Derived::None),
            Family::FiniteAtomic { total_mass, mut atoms } => {
                if !(total_mass > 0.0 && total_mass.is_finite()) {
                    return Err(invalid(format!("total_mass must be > 0, got {total_mass}")));
                }
                if atoms.is_empty() {
                    return Err(invalid("finite atomic measure needs at least one atom"));
                }
                if atoms
                    .iter()
                    .any(|a| !(a.position > 0.0 && a.position.is_finite()) || !(a.weight > 0.0 && a.weight.is_finite()))
                {
                    return Err(invalid("atoms need positive finite positions and weights"));
                }
                atoms.sort_by(|a, b| a.position.total_cmp(&b.position));
                let total: f64 = atoms.iter().map(|a| a.weight).sum();
                for a in atoms.iter_mut() {
                    a.weight /= total;
                }
                let positions: Vec<f64> = atoms.iter().map(|a| a.position).collect();
                let mut suffix = vec![0.0; atoms.len()];
                let mut acc = 0.0;
                for i in (0..atoms.len()).rev() {
                    acc += atoms[i].weight;
                    suffix[i] = acc;
                }
                (
                    Family::FiniteAtomic { total_mass, atoms },
                    Derived::Atomic { positions, suffix },
                )
            }
            Family::PiecewiseTable(t) => {
                let cache = validate_table(&t)?;
                (Family::PiecewiseTable(t), Derived::Table(cache))
            }
        };
        Ok(TailMeasure {
            family,
            weight: 1.0,
            derived,
        })
    }

    pub fn power_law(c: f64, alpha: f64) -> Result<Self> {
        Self::new(Family::PowerLaw { c, alpha })
    }

    pub fn exponential(c: f64, lambda: f64) -> Result<Self> {
        Self::new(Family::Exponential { c, lambda })
    }

    pub fn log_cutout() -> Self {
        Self::new(Family::LogCutout).expect("log cutout has no parameters")
    }

    /// The zero measure, `µ̄ ≡ 0`.
    pub fn zero() -> Self {
        Self::power_law(0.0, 1.0).expect("valid")
    }

    pub fn finite_atomic(total_mass: f64, atoms: Vec<Atom>) -> Result<Self> {
        Self::new(Family::FiniteAtomic { total_mass, atoms })
    }

    pub fn table(table: PiecewiseTable) -> Result<Self> {
        Self::new(Family::PiecewiseTable(table))
    }

    /// `k · µ` for `k > 0`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(invalid(format!("scale factor must be positive, got {k}")));
        }
        let mut m = self.clone();
        m.weight *= k;
        Ok(m)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn analytic_flags(&self) -> AnalyticFlags {
        match self.family {
            Family::PowerLaw { .. } | Family::Exponential { .. } | Family::FiniteAtomic { .. } => {
                AnalyticFlags {
                    tail_integral: true,
                    quantile: true,
                }
            }
            Family::LogCutout | Family::PiecewiseTable(_) => AnalyticFlags {
                tail_integral: true,
                quantile: false,
            },
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.family {
            Family::PowerLaw { c, .. } | Family::Exponential { c, .. } => *c == 0.0,
            Family::PiecewiseTable(t) => t.values.iter().all(|v| *v == 0.0),
            _ => false,
        }
    }

    /// `µ̄(x)`, returning `+∞` at `x = 0` for infinite measures.
    pub fn bar_mu(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(EsnError::Domain(format!("µ̄ is defined on [0, ∞), got x={x}")));
        }
        Ok(self.tail(x))
    }

    /// Unchecked `µ̄(x)` for `x ≥ 0`.
    pub fn tail(&self, x: f64) -> f64 {
        let w = self.weight;
        match (&self.family, &self.derived) {
            (Family::PowerLaw { c, alpha }, _) => {
                if *c == 0.0 {
                    0.0
                } else if x == 0.0 {
                    f64::INFINITY
                } else {
                    w * c * x.powf(-alpha)
                }
            }
            (Family::Exponential { c, lambda }, _) => w * c * (-lambda * x).exp(),
            (Family::LogCutout, _) => {
                if x == 0.0 {
                    f64::INFINITY
                } else if x < INV_E {
                    w / (x * (1.0 / x).ln())
                } else {
                    0.0
                }
            }
            (Family::FiniteAtomic { total_mass, .. }, Derived::Atomic { positions, suffix }) => {
                let i = positions.partition_point(|p| *p < x);
                if i == positions.len() {
                    0.0
                } else {
                    w * total_mass * suffix[i]
                }
            }
            (Family::PiecewiseTable(t), Derived::Table(cache)) => w * table_tail(t, cache, x),
            _ => unreachable!("derived data matches family"),
        }
    }

    /// `µ((x, ∞))`; differs from `µ̄(x)` only at atoms.
    pub fn tail_open(&self, x: f64) -> f64 {
        match (&self.family, &self.derived) {
            (Family::FiniteAtomic { total_mass, .. }, Derived::Atomic { positions, suffix }) => {
                let i = positions.partition_point(|p| *p <= x);
                if i == positions.len() {
                    0.0
                } else {
                    self.weight * total_mass * suffix[i]
                }
            }
            _ => self.tail(x),
        }
    }

    /// `∫_a^b µ̄(y) dy` for `0 ≤ a ≤ b ≤ ∞`.
    ///
    /// Returns `+∞` only when divergence is certified by the family's
    /// endpoint exponents; a table without the relevant declared exponent
    /// yields [`EsnError::InconclusiveDivergence`].
    pub fn tail_integral(&self, a: f64, b: f64) -> Result<f64> {
        if !(a >= 0.0) || !(b >= a) || b.is_nan() {
            return Err(EsnError::Domain(format!(
                "tail_integral needs 0 ≤ a ≤ b ≤ ∞, got a={a}, b={b}"
            )));
        }
        if a == b || self.is_zero() {
            return Ok(0.0);
        }
        let w = self.weight;
        let v = match (&self.family, &self.derived) {
            (Family::PowerLaw { c, alpha }, _) => power_integral(w * c, *alpha, a, b),
            (Family::Exponential { c, lambda }, _) => {
                let k = w * c / lambda;
                if b.is_infinite() {
                    k * (-lambda * a).exp()
                } else {
                    k * (-lambda * a).exp() * -(-lambda * (b - a)).exp_m1()
                }
            }
            (Family::LogCutout, _) => {
                if a == 0.0 {
                    f64::INFINITY
                } else {
                    let a1 = a.min(INV_E);
                    let b1 = b.min(INV_E);
                    if a1 >= b1 {
                        0.0
                    } else {
                        // ln ln(1/a) − ln ln(1/b), written to keep precision near 1/e
                        w * ((1.0 / a1).ln() / (1.0 / b1).ln()).ln()
                    }
                }
            }
            (Family::FiniteAtomic { total_mass, atoms }, _) => {
                let mut acc = 0.0;
                for at in atoms {
                    let hi = at.position.min(b);
                    if hi > a {
                        acc += at.weight * (hi - a);
                    }
                }
                w * total_mass * acc
            }
            (Family::PiecewiseTable(t), Derived::Table(cache)) => w * table_integral(t, cache, a, b)?,
            _ => unreachable!("derived data matches family"),
        };
        Ok(v)
    }

    /// Generalized inverse `sup{x > 0 : µ̄(x) ≥ y}`, `0` when the set is empty.
    pub fn quantile(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) || y.is_infinite() {
            return Err(EsnError::Domain(format!("quantile needs y in (0, ∞), got {y}")));
        }
        Ok(self.quantile_unchecked(y))
    }

    fn quantile_unchecked(&self, y: f64) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let w = self.weight;
        match (&self.family, &self.derived) {
            (Family::PowerLaw { c, alpha }, _) => (w * c / y).powf(1.0 / alpha),
            (Family::Exponential { c, lambda }, _) => {
                let k = w * c;
                if y >= k {
                    0.0
                } else {
                    (k / y).ln() / lambda
                }
            }
            (Family::FiniteAtomic { total_mass, .. }, Derived::Atomic { positions, suffix }) => {
                let k = w * total_mass;
                let count = suffix.partition_point(|s| k * s >= y);
                if count == 0 {
                    0.0
                } else {
                    positions[count - 1]
                }
            }
            _ => self.quantile_bisect(y),
        }
    }

    /// Bracketed bisection on the monotone tail, to `1e−12` relative.
    fn quantile_bisect(&self, y: f64) -> f64 {
        if self.tail(0.0) < y {
            return 0.0;
        }
        let mut hi = 1.0;
        let mut guard = 0;
        while self.tail(hi) >= y {
            hi *= 2.0;
            guard += 1;
            if guard > 2100 {
                return hi;
            }
        }
        let mut lo = hi * 0.5;
        while self.tail(lo) < y {
            lo *= 0.5;
            if lo < 1e-300 {
                return 0.0;
            }
        }
        // µ̄(lo) ≥ y > µ̄(hi)
        while hi - lo > 1e-12 * hi {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.tail(mid) >= y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// A draw from `µ` conditioned on `[level, ∞)`, as
    /// `quantile(u · µ̄(level))` for `u ∈ (0, 1]`.
    pub fn sample_conditional(&self, level: f64, u: f64) -> Result<f64> {
        if !(level >= 0.0) {
            return Err(EsnError::Domain(format!("level must be ≥ 0, got {level}")));
        }
        if !(u > 0.0 && u <= 1.0) {
            return Err(EsnError::Domain(format!("u must be in (0, 1], got {u}")));
        }
        let t = self.tail(level);
        if t.is_infinite() {
            return Err(EsnError::Precondition(format!(
                "µ̄({level}) = ∞; conditional sampling needs a truncation level"
            )));
        }
        if t == 0.0 {
            return Err(EsnError::Precondition(format!("µ̄({level}) = 0, nothing to sample")));
        }
        Ok(self.quantile_unchecked(u * t).max(level))
    }

    /// Like [`sample_conditional`](Self::sample_conditional) but conditioned
    /// on `(level, ∞)`; identical for diffuse measures.
    pub(crate) fn sample_conditional_open(&self, level: f64, u: f64) -> f64 {
        let t = self.tail_open(level);
        let x = self.quantile_unchecked(u * t);
        x.max(level)
    }

    /// Mark in `[lo, hi]` for a uniform `u`, i.e. `µ` restricted to a layer.
    pub(crate) fn sample_layer(&self, lo: f64, hi: f64, u: f64) -> f64 {
        let top = self.tail(hi);
        let bottom = self.tail(lo);
        let y = top + u * (bottom - top);
        self.quantile_unchecked(y).clamp(lo, hi)
    }

    /// Solves `∫_ℓ^upper µ̄ = mass` for `ℓ ∈ [floor, upper]`.
    ///
    /// `None` when `∫_floor^upper µ̄ < mass`, i.e. the descent reaches the
    /// floor first.
    pub fn level_below(&self, upper: f64, mass: f64, floor: f64) -> Result<Option<f64>> {
        let cap = self.tail_integral(floor, upper)?;
        if mass > cap || (mass == cap && cap.is_finite() && floor > 0.0) {
            return Ok(None);
        }
        if mass == 0.0 {
            return Ok(Some(upper));
        }
        let w = self.weight;
        let closed = match &self.family {
            Family::PowerLaw { c, alpha } => {
                let k = w * c;
                if *alpha == 1.0 {
                    Some(upper * (-mass / k).exp())
                } else {
                    let q = 1.0 - alpha;
                    let z = -mass * q * upper.powf(-q) / k;
                    Some(upper * (z.ln_1p() / q).exp())
                }
            }
            Family::Exponential { c, lambda } => {
                let k = w * c;
                let e = (-lambda * upper).exp() + mass * lambda / k;
                Some(-e.ln() / lambda)
            }
            Family::LogCutout => {
                let top = upper.min(INV_E);
                let log_inv = (1.0 / top).ln() * (mass / w).exp();
                Some((-log_inv).exp())
            }
            _ => None,
        };
        let level = match closed {
            Some(l) if l.is_finite() => l,
            _ => self.solve_below(upper, mass, floor)?,
        };
        Ok(Some(level.clamp(floor, upper)))
    }

    fn solve_below(&self, upper: f64, mass: f64, floor: f64) -> Result<f64> {
        let mut lo = floor;
        let mut hi = upper;
        let mut x = 0.5 * (lo + hi);
        for _ in 0..400 {
            if hi - lo <= 1e-13 * hi {
                break;
            }
            let h = self.tail_integral(x, upper)? - mass;
            if h > 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            if h == 0.0 {
                return Ok(x);
            }
            // Newton step (h' = −µ̄), kept inside the bracket
            let slope = self.tail(x);
            let newton = if slope > 0.0 && slope.is_finite() { x + h / slope } else { f64::NAN };
            x = if newton > lo && newton < hi {
                newton
            } else if lo > 0.0 && hi / lo > 4.0 {
                (lo * hi).sqrt()
            } else if lo == 0.0 {
                hi / 16.0
            } else {
                0.5 * (lo + hi)
            };
        }
        Ok(0.5 * (lo + hi))
    }

    /// Solves `∫_lower^ℓ µ̄ = mass` for `ℓ > lower`; `None` when the total
    /// mass above `lower` is not enough.
    pub fn level_above(&self, lower: f64, mass: f64) -> Result<Option<f64>> {
        let cap = self.tail_integral(lower, f64::INFINITY)?;
        if mass >= cap {
            return Ok(None);
        }
        if mass == 0.0 {
            return Ok(Some(lower));
        }
        let mut hi = (2.0 * lower).max(1.0);
        let mut guard = 0;
        while self.tail_integral(lower, hi)? < mass {
            hi *= 2.0;
            guard += 1;
            if guard > 2000 {
                return Ok(None);
            }
        }
        let mut lo = lower;
        let mut x = 0.5 * (lo + hi);
        for _ in 0..400 {
            if hi - lo <= 1e-13 * hi {
                break;
            }
            let h = self.tail_integral(lower, x)? - mass;
            if h < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            if h == 0.0 {
                return Ok(Some(x));
            }
            let slope = self.tail(x);
            let newton = if slope > 0.0 { x - h / slope } else { f64::NAN };
            x = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        }
        Ok(Some(0.5 * (lo + hi)))
    }

    pub fn zero_behavior(&self) -> ZeroBehavior {
        if self.is_zero() {
            return ZeroBehavior::Finite;
        }
        let w = self.weight;
        match &self.family {
            Family::PowerLaw { c, alpha } => power_zero(w * c, *alpha),
            Family::Exponential { .. } | Family::FiniteAtomic { .. } => ZeroBehavior::Finite,
            Family::LogCutout => ZeroBehavior::LogHarmonic { coef: w },
            Family::PiecewiseTable(t) => match t.lower_exponent {
                None => ZeroBehavior::Undeclared,
                Some(e) => {
                    if e == 0.0 {
                        ZeroBehavior::Finite
                    } else {
                        power_zero(w * t.values[0] * t.knots[0].powf(e), e)
                    }
                }
            },
        }
    }

    pub fn infinity_behavior(&self) -> InfinityBehavior {
        if self.is_zero() {
            return InfinityBehavior::Integrable;
        }
        let w = self.weight;
        match &self.family {
            Family::PowerLaw { c, alpha } => power_infinity(w * c, *alpha),
            Family::Exponential { .. } | Family::FiniteAtomic { .. } | Family::LogCutout => {
                InfinityBehavior::Integrable
            }
            Family::PiecewiseTable(t) => {
                let last = *t.values.last().expect("non-empty");
                if last == 0.0 {
                    return InfinityBehavior::Integrable;
                }
                match t.upper_exponent {
                    None => InfinityBehavior::Undeclared,
                    Some(e) => power_infinity(w * last * t.knots.last().unwrap().powf(e), e),
                }
            }
        }
    }
}

fn power_zero(k: f64, alpha: f64) -> ZeroBehavior {
    if alpha < 1.0 {
        ZeroBehavior::Integrable
    } else if alpha == 1.0 {
        ZeroBehavior::Harmonic { coef: k }
    } else {
        ZeroBehavior::Steep
    }
}

fn power_infinity(k: f64, alpha: f64) -> InfinityBehavior {
    if alpha > 1.0 {
        InfinityBehavior::Integrable
    } else if alpha == 1.0 {
        InfinityBehavior::Harmonic { coef: k }
    } else {
        InfinityBehavior::Heavy
    }
}

fn validate_table(t: &PiecewiseTable) -> Result<TableCache> {
    if t.knots.is_empty() || t.knots.len() != t.values.len() {
        return Err(invalid("table needs equally many knots and values, at least one"));
    }
    if t.knots.iter().any(|k| !(*k > 0.0 && k.is_finite())) {
        return Err(invalid("table knots must be positive and finite"));
    }
    if t.knots.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("table knots must be strictly increasing"));
    }
    if t.values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(invalid("table values must be non-negative and finite"));
    }
    if t.values.windows(2).any(|w| w[1] > w[0]) {
        return Err(invalid("table values must be non-increasing"));
    }
    for e in [t.lower_exponent, t.upper_exponent].into_iter().flatten() {
        if !(e >= 0.0 && e.is_finite()) {
            return Err(invalid(format!("extrapolation exponents must be ≥ 0, got {e}")));
        }
    }
    let slopes: Vec<Option<f64>> = t
        .knots
        .windows(2)
        .zip(t.values.windows(2))
        .map(|(k, v)| {
            if v[0] > 0.0 && v[1] > 0.0 {
                Some(-(v[1] / v[0]).ln() / (k[1] / k[0]).ln())
            } else {
                None
            }
        })
        .collect();
    let lower = t
        .lower_exponent
        .or_else(|| slopes.first().copied().flatten())
        .unwrap_or(0.0);
    let upper = t
        .upper_exponent
        .or_else(|| slopes.last().copied().flatten())
        .unwrap_or(0.0);
    Ok(TableCache { slopes, lower, upper })
}

fn table_tail(t: &PiecewiseTable, cache: &TableCache, x: f64) -> f64 {
    let n = t.knots.len();
    let k0 = t.knots[0];
    let kn = t.knots[n - 1];
    if x < k0 {
        let v0 = t.values[0];
        if v0 == 0.0 {
            return 0.0;
        }
        if x == 0.0 {
            return if cache.lower > 0.0 { f64::INFINITY } else { v0 };
        }
        return v0 * (x / k0).powf(-cache.lower);
    }
    if x >= kn {
        let vn = t.values[n - 1];
        if vn == 0.0 {
            return 0.0;
        }
        return vn * (x / kn).powf(-cache.upper);
    }
    let i = t.knots.partition_point(|k| *k <= x) - 1;
    segment_value(t, cache, i, x)
}

fn segment_value(t: &PiecewiseTable, cache: &TableCache, i: usize, x: f64) -> f64 {
    let (k0, k1) = (t.knots[i], t.knots[i + 1]);
    let (v0, v1) = (t.values[i], t.values[i + 1]);
    match cache.slopes[i] {
        Some(s) => v0 * (x / k0).powf(-s),
        None => v0 + (v1 - v0) * (x - k0) / (k1 - k0),
    }
}

fn segment_integral(t: &PiecewiseTable, cache: &TableCache, i: usize, a: f64, b: f64) -> f64 {
    match cache.slopes[i] {
        Some(s) => power_integral(t.values[i] * t.knots[i].powf(s), s, a, b),
        // linear segment: the trapezoid rule is exact
        None => 0.5 * (segment_value(t, cache, i, a) + segment_value(t, cache, i, b)) * (b - a),
    }
}

fn table_integral(t: &PiecewiseTable, cache: &TableCache, a: f64, b: f64) -> Result<f64> {
    let n = t.knots.len();
    let k0 = t.knots[0];
    let kn = t.knots[n - 1];
    let mut acc = 0.0;
    if a < k0 {
        let v0 = t.values[0];
        if v0 > 0.0 {
            if a == 0.0 && t.lower_exponent.is_none() {
                return Err(EsnError::InconclusiveDivergence(
                    "∫_0 µ̄ for a table without a declared lower exponent".into(),
                ));
            }
            acc += power_integral(v0 * k0.powf(cache.lower), cache.lower, a, b.min(k0));
        }
    }
    if b > kn {
        let vn = t.values[n - 1];
        if vn > 0.0 {
            if b.is_infinite() && t.upper_exponent.is_none() {
                return Err(EsnError::InconclusiveDivergence(
                    "∫^∞ µ̄ for a table without a declared upper exponent".into(),
                ));
            }
            acc += power_integral(vn * kn.powf(cache.upper), cache.upper, a.max(kn), b);
        }
    }
    for i in 0..n.saturating_sub(1) {
        let lo = a.max(t.knots[i]);
        let hi = b.min(t.knots[i + 1]);
        if hi > lo {
            acc += segment_integral(t, cache, i, lo, hi);
        }
    }
    Ok(acc)
}

impl PiecewiseTable {
    /// Parses the two-column table format.
    ///
    /// ```text
    /// # lower_exponent=0.5, upper_exponent=2
    /// knot,value
    /// 0.1,3.0
    /// 1.0,1.0
    /// ```
    ///
    /// The exponent header is mandatory; write `none` for an undeclared
    /// exponent. The `knot,value` column line is optional.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines
            .next()
            .ok_or_else(|| EsnError::Parse("empty table".into()))?;
        let header = header.strip_prefix('#').ok_or_else(|| {
            EsnError::Parse(format!(
                "line {hline}: expected exponent header '# lower_exponent=…, upper_exponent=…'"
            ))
        })?;
        let mut lower = None;
        let mut upper = None;
        let (mut saw_lower, mut saw_upper) = (false, false);
        for item in header.split([',', ' ', '\t']).filter(|s| !s.is_empty()) {
            let (key, val) = item.split_once('=').ok_or_else(|| {
                EsnError::Parse(format!("line {hline}: expected key=value, got '{item}'"))
            })?;
            let parsed = match val.trim() {
                "none" | "" => None,
                v => Some(v.parse::<f64>().map_err(|e| {
                    EsnError::Parse(format!("line {hline}: bad exponent '{v}': {e}"))
                })?),
            };
            match key.trim() {
                "lower_exponent" => {
                    lower = parsed;
                    saw_lower = true;
                }
                "upper_exponent" => {
                    upper = parsed;
                    saw_upper = true;
                }
                other => {
                    return Err(EsnError::Parse(format!("line {hline}: unknown header key '{other}'")))
                }
            }
        }
        if !saw_lower || !saw_upper {
            return Err(EsnError::Parse(format!(
                "line {hline}: header must declare lower_exponent and upper_exponent"
            )));
        }
        let mut knots = Vec::new();
        let mut values = Vec::new();
        for (ln, line) in lines {
            if line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let (a, b) = match (cols.next(), cols.next(), cols.next()) {
                (Some(a), Some(b), None) => (a, b),
                _ => return Err(EsnError::Parse(format!("line {ln}: expected two columns"))),
            };
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(k), Ok(v)) => {
                    knots.push(k);
                    values.push(v);
                }
                _ if knots.is_empty() && a.eq_ignore_ascii_case("knot") => continue,
                _ => return Err(EsnError::Parse(format!("line {ln}: non-numeric row '{line}'"))),
            }
        }
        let table = PiecewiseTable {
            knots,
            values,
            lower_exponent: lower,
            upper_exponent: upper,
        };
        validate_table(&table)?;
        Ok(table)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_csv_str(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate, Tolerance};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn bar_mu_examples() {
        let p = TailMeasure::power_law(1.0, 1.0).unwrap();
        assert_eq!(p.bar_mu(2.0).unwrap(), 0.5);
        let e = TailMeasure::exponential(1.0, 1.0).unwrap();
        assert_eq!(e.bar_mu(0.0).unwrap(), 1.0);
        assert!(e.bar_mu(-1.0).is_err());
        assert!(p.bar_mu(1e300).unwrap() < 1e-299);
        assert_eq!(p.bar_mu(0.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn tail_integral_examples() {
        let e = TailMeasure::exponential(1.0, 1.0).unwrap();
        let v = e.tail_integral(0.5, 1.5).unwrap();
        let expected = (-0.5f64).exp() - (-1.5f64).exp();
        assert!((v - expected).abs() < 1e-15);
        assert!((v - 0.383401).abs() < 1e-6);
        // quadrature cross-check
        let q = integrate(|y| e.tail(y), 0.5, 1.5, Tolerance::new(1e-14, 1e-14));
        assert!((q.value - v).abs() < 1e-13);

        let p = TailMeasure::power_law(1.0, 1.0).unwrap();
        assert_eq!(p.tail_integral(0.0, 1.0).unwrap(), f64::INFINITY);
        assert_eq!(p.tail_integral(1.0, f64::INFINITY).unwrap(), f64::INFINITY);
        let z = TailMeasure::zero();
        assert_eq!(z.tail_integral(0.0, f64::INFINITY).unwrap(), 0.0);
        assert_eq!(z.tail_integral(0.3, 7.0).unwrap(), 0.0);
        assert!(p.tail_integral(2.0, 1.0).is_err());
    }

    #[test]
    fn power_law_divergence_rules() {
        let heavy = TailMeasure::power_law(1.0, 0.5).unwrap();
        assert!((heavy.tail_integral(0.0, 1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(heavy.tail_integral(1.0, f64::INFINITY).unwrap().is_infinite());
        let steep = TailMeasure::power_law(1.0, 2.0).unwrap();
        assert!(steep.tail_integral(0.0, 1.0).unwrap().is_infinite());
        assert!((steep.tail_integral(1.0, f64::INFINITY).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn quantile_examples() {
        let p = TailMeasure::power_law(1.0, 1.0).unwrap();
        assert_eq!(p.quantile(0.5).unwrap(), 2.0);
        let e = TailMeasure::exponential(1.0, 1.0).unwrap();
        assert!((e.quantile((-3f64).exp()).unwrap() - 3.0).abs() < 1e-14);
        let a = TailMeasure::finite_atomic(1.0, vec![Atom { position: 1.0, weight: 1.0 }]).unwrap();
        assert_eq!(a.quantile(1.5).unwrap(), 0.0);
        assert_eq!(a.quantile(0.3).unwrap(), 1.0);
        assert!(p.quantile(0.0).is_err());
    }

    #[test]
    fn sample_conditional_examples() {
        let p = TailMeasure::power_law(1.0, 1.0).unwrap();
        assert!((p.sample_conditional(1.0, 0.5).unwrap() - 2.0).abs() < 1e-15);
        let e = TailMeasure::exponential(1.0, 1.0).unwrap();
        assert!((e.sample_conditional(0.0, (-1f64).exp()).unwrap() - 1.0).abs() < 1e-15);
        assert!((e.sample_conditional(0.7, 1.0).unwrap() - 0.7).abs() < 1e-14);
        assert!(p.sample_conditional(0.0, 0.5).is_err());
    }

    #[test]
    fn log_cutout_closed_forms() {
        let l = TailMeasure::log_cutout();
        assert_eq!(l.tail(INV_E), 0.0);
        assert_eq!(l.tail(0.5), 0.0);
        assert!(l.tail_integral(0.0, 0.1).unwrap().is_infinite());
        let x = 0.01;
        let v = l.tail_integral(x, f64::INFINITY).unwrap();
        assert!(close(v, (1.0f64 / x).ln().ln(), 1e-14));
        let q = integrate(|y| l.tail(y), 0.01, 0.2, Tolerance::new(1e-13, 1e-13));
        assert!(close(q.value, l.tail_integral(0.01, 0.2).unwrap(), 1e-11));
        // generalized inverse lands on the support edge for small y
        let edge = l.quantile(1.0).unwrap();
        assert!((edge - INV_E).abs() < 1e-11);
        let q5 = l.quantile(50.0).unwrap();
        assert!(close(l.tail(q5), 50.0, 1e-10));
    }

    #[test]
    fn level_below_inverts_tail_integral() {
        let cases = [
            TailMeasure::power_law(1.0, 1.0).unwrap(),
            TailMeasure::power_law(0.7, 0.4).unwrap(),
            TailMeasure::power_law(2.0, 2.5).unwrap(),
            TailMeasure::exponential(1.5, 0.7).unwrap(),
            TailMeasure::log_cutout(),
            TailMeasure::finite_atomic(
                2.0,
                vec![Atom { position: 0.5, weight: 1.0 }, Atom { position: 3.0, weight: 2.0 }],
            )
            .unwrap(),
        ];
        for m in &cases {
            let upper = 2.0;
            let floor = 0.05;
            let cap = m.tail_integral(floor, upper).unwrap();
            for frac in [0.1, 0.5, 0.9] {
                let mass = frac * cap;
                let l = m.level_below(upper, mass, floor).unwrap().unwrap();
                let back = m.tail_integral(l, upper).unwrap();
                assert!(close(back, mass, 1e-10), "{m}: {back} vs {mass}");
            }
            assert!(m.level_below(upper, cap * 1.01, floor).unwrap().is_none());
        }
    }

    #[test]
    fn level_above_inverts_tail_integral() {
        let m = TailMeasure::exponential(1.0, 1.0).unwrap();
        let l = m.level_above(0.5, 0.2).unwrap().unwrap();
        assert!(close(m.tail_integral(0.5, l).unwrap(), 0.2, 1e-10));
        assert!(m.level_above(0.5, 1.0).unwrap().is_none());
    }

    #[test]
    fn weight_scales_everything() {
        let m = TailMeasure::exponential(1.0, 1.0).unwrap();
        let q = m.scaled(0.25).unwrap();
        assert!(close(q.tail(0.3), 0.25 * m.tail(0.3), 1e-15));
        assert!(close(
            q.tail_integral(0.0, 2.0).unwrap(),
            0.25 * m.tail_integral(0.0, 2.0).unwrap(),
            1e-15
        ));
        assert!(close(q.quantile(0.1).unwrap(), (2.5f64).ln(), 1e-14));
    }

    #[test]
    fn atomic_open_and_closed_tails() {
        let a = TailMeasure::finite_atomic(1.0, vec![Atom { position: 1.0, weight: 1.0 }]).unwrap();
        assert_eq!(a.tail(1.0), 1.0);
        assert_eq!(a.tail_open(1.0), 0.0);
        assert_eq!(a.tail(0.0), 1.0);
        assert_eq!(a.tail_integral(0.0, f64::INFINITY).unwrap(), 1.0);
    }

    #[test]
    fn table_csv_and_extrapolation() {
        let csv = "# lower_exponent=0.5, upper_exponent=2\nknot,value\n0.1,3.1622776601683795\n1.0,1.0\n10.0,0.01\n";
        let t = PiecewiseTable::from_csv_str(csv).unwrap();
        let m = TailMeasure::table(t).unwrap();
        assert!(close(m.tail(0.01), 10.0, 1e-12));
        assert!(close(m.tail(100.0), 1e-4, 1e-12));
        // the 0.1..1 segment is exactly 1/sqrt(x)
        assert!(close(m.tail(0.25), 2.0, 1e-12));
        assert!(close(m.tail_integral(0.0, 1.0).unwrap(), 2.0, 1e-12));
        assert!(close(m.tail_integral(10.0, f64::INFINITY).unwrap(), 0.1, 1e-12));
        let q = integrate(|y| m.tail(y), 0.2, 5.0, Tolerance::new(1e-13, 1e-13));
        assert!(close(q.value, m.tail_integral(0.2, 5.0).unwrap(), 1e-10));
        assert_eq!(m.zero_behavior(), ZeroBehavior::Integrable);
        assert_eq!(m.infinity_behavior(), InfinityBehavior::Integrable);
    }

    #[test]
    fn undeclared_table_is_inconclusive() {
        let csv = "# lower_exponent=none, upper_exponent=none\n0.5,2\n1,1\n";
        let m = TailMeasure::table(PiecewiseTable::from_csv_str(csv).unwrap()).unwrap();
        assert!(matches!(
            m.tail_integral(0.0, 1.0),
            Err(EsnError::InconclusiveDivergence(_))
        ));
        assert!(matches!(
            m.tail_integral(1.0, f64::INFINITY),
            Err(EsnError::InconclusiveDivergence(_))
        ));
        assert!(m.tail_integral(0.2, 3.0).unwrap().is_finite());
        assert_eq!(m.zero_behavior(), ZeroBehavior::Undeclared);
    }

    #[test]
    fn table_parse_errors_name_the_line() {
        let err = PiecewiseTable::from_csv_str("knot,value\n1,1\n").unwrap_err();
        assert!(err.to_string().contains("line 1"));
        let err = PiecewiseTable::from_csv_str("# lower_exponent=1, upper_exponent=2\n1,1\n2,x\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        assert!(PiecewiseTable::from_csv_str("# lower_exponent=1, upper_exponent=2\n1,1\n2,3\n").is_err());
    }

    #[test]
    fn serde_roundtrip_with_weight() {
        let m = TailMeasure::power_law(0.5, 1.0).unwrap().scaled(0.25).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"family\":\"power_law\""), "{s}");
        let back: TailMeasure = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        let bad = serde_json::from_str::<TailMeasure>(r#"{"family":"exponential","c":1,"lambda":-1}"#);
        assert!(bad.is_err());
    }
}
