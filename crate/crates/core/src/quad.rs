//! Globally adaptive Gauss–Kronrod (10/21 point) quadrature.
//!
//! Endpoint singularities and infinite ranges are handled by the callers
//! through changes of variables; this module only ever sees finite ranges
//! with integrands that are finite at the Kronrod nodes.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{EsnError, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Stopping rule for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 1e-10,
            rel: 1e-10,
            max_intervals: 4000,
        }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Tolerance {
            abs,
            rel,
            ..Default::default()
        }
    }
}

/// A quadrature value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub abs_err: f64,
    pub converged: bool,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate {
            value,
            abs_err: 0.0,
            converged: true,
        }
    }

    pub fn add(self, other: Estimate) -> Estimate {
        Estimate {
            value: self.value + other.value,
            abs_err: self.abs_err + other.abs_err,
            converged: self.converged && other.converged,
        }
    }

    pub fn scale(self, k: f64) -> Estimate {
        Estimate {
            value: self.value * k,
            abs_err: self.abs_err * k.abs(),
            converged: self.converged,
        }
    }

    /// Turns a non-converged or non-finite estimate into an error.
    pub fn require(self, what: &str) -> Result<Estimate> {
        if self.value.is_finite() && self.converged {
            Ok(self)
        } else {
            Err(EsnError::Quadrature {
                what: what.to_string(),
                abs_err: self.abs_err,
            })
        }
    }
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn kronrod21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_g = 0.0;
    let mut res_k = WGK[10] * fc;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = res_k * 0.5;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let result = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (result, err)
}

/// Integrates `f` over the finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Estimate {
    if a == b {
        return Estimate::exact(0.0);
    }
    if b < a {
        return integrate(f, b, a, tol).scale(-1.0);
    }
    let (v, e) = kronrod21(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, value: v, err: e });
    let mut total = v;
    let mut total_err = e;
    loop {
        if !total.is_finite() || !total_err.is_finite() {
            return Estimate {
                value: total,
                abs_err: total_err,
                converged: false,
            };
        }
        if total_err <= tol.abs.max(tol.rel * total.abs()) {
            break;
        }
        if heap.len() >= tol.max_intervals {
            return Estimate {
                value: total,
                abs_err: total_err,
                converged: false,
            };
        }
        let worst = heap.pop().expect("heap never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval cannot be split further in floating point
            heap.push(worst);
            return Estimate {
                value: total,
                abs_err: total_err,
                converged: false,
            };
        }
        let (v1, e1) = kronrod21(&f, worst.a, mid);
        let (v2, e2) = kronrod21(&f, mid, worst.b);
        heap.push(Piece { a: worst.a, b: mid, value: v1, err: e1 });
        heap.push(Piece { a: mid, b: worst.b, value: v2, err: e2 });
        // resum to avoid drift from repeated add/subtract
        total = heap.iter().map(|p| p.value).sum();
        total_err = heap.iter().map(|p| p.err).sum();
    }
    Estimate {
        value: total,
        abs_err: total_err,
        converged: true,
    }
}

/// Integrates `f` over `[a, ∞)` through `x = a + (1 − t)/t`, `t ∈ (0, 1]`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, tol: Tolerance) -> Estimate {
    integrate(
        |t| {
            let x = a + (1.0 - t) / t;
            let v = f(x);
            if v == 0.0 {
                0.0
            } else {
                v / (t * t)
            }
        },
        0.0,
        1.0,
        tol,
    )
}

/// Integrates `f` over `[a, b]` with `x = a + (b − a) w^p`, which removes an
/// algebraic singularity of order `1 − 1/p` at the left endpoint.
pub fn integrate_left_power<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    p: f64,
    tol: Tolerance,
) -> Estimate {
    if p == 1.0 {
        return integrate(f, a, b, tol);
    }
    let len = b - a;
    integrate(
        |w| {
            let wp1 = w.powf(p - 1.0);
            let x = a + len * wp1 * w;
            let v = f(x);
            if v == 0.0 {
                0.0
            } else {
                v * len * p * wp1
            }
        },
        0.0,
        1.0,
        tol,
    )
}

/// Collects the first error raised inside an integrand, which must return
/// a plain `f64` to the quadrature loop.
#[derive(Default)]
pub(crate) struct ErrorSlot {
    slot: std::cell::RefCell<Option<EsnError>>,
}

impl ErrorSlot {
    pub(crate) fn new() -> Self {
        Self::default()
    }

    /// The value, or NaN after recording the error.
    pub(crate) fn take(&self, r: Result<f64>) -> f64 {
        match r {
            Ok(v) => v,
            Err(e) => {
                let mut s = self.slot.borrow_mut();
                if s.is_none() {
                    *s = Some(e);
                }
                f64::NAN
            }
        }
    }

    pub(crate) fn finish(self, est: Estimate) -> Result<Estimate> {
        match self.slot.into_inner() {
            Some(e) => Err(e),
            None => Ok(est),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| 3.0 * x * x, 0.0, 2.0, Tolerance::default());
        assert!((r.value - 8.0).abs() < 1e-14);
        assert!(r.converged);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let r = integrate(|x| x.exp(), 1.0, 0.0, Tolerance::default());
        assert!((r.value + (1f64.exp() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn sqrt_singularity_resolved_adaptively() {
        let r = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, Tolerance::new(1e-10, 1e-10));
        assert!((r.value - 2.0).abs() < 1e-8, "{r:?}");
    }

    #[test]
    fn power_map_flattens_singularity() {
        let r = integrate_left_power(|x| x.powf(-0.75), 0.0, 1.0, 4.0, Tolerance::new(1e-14, 1e-14));
        assert!((r.value - 4.0).abs() < 1e-12, "{r:?}");
    }

    #[test]
    fn semi_infinite_exponential() {
        let r = integrate_to_infinity(|x| (-x).exp(), 1.0, Tolerance::new(1e-14, 1e-13));
        assert!((r.value - (-1f64).exp()).abs() < 1e-12, "{r:?}");
    }

    #[test]
    fn nonfinite_integrand_is_not_converged() {
        let r = integrate(|_| f64::NAN, 0.0, 1.0, Tolerance::default());
        assert!(!r.converged);
        assert!(r.require("nan").is_err());
    }
}
