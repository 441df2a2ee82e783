//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use esn_core::laws::{self, TestFunction};
use esn_core::passage::{self, Boundary, PassageSolver, Recurrence};
use esn_core::pathsim::{first_passage, EsnParams, Passage};
use esn_core::rng::replicate_rng;
use esn_core::verify::{self, ks_one_sample, ks_two_sample, sample_marginal};
use esn_core::{Result, TailMeasure};

const SEED: u64 = 42;

struct Outcome {
    pass: bool,
    summary: String,
}

fn outcome(pass: bool, summary: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome {
        pass,
        summary: summary.into(),
    })
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

fn cdf_oracle() -> Result<Outcome> {
    let start = Instant::now();
    let eps = 1e-6;
    let params = EsnParams::new(1.0, TailMeasure::power_law(1.0, 1.0)?, eps, 1.0)?;
    let n = 100_000;
    let sample = sample_marginal(&params, 0.0, 1.0, n, SEED, 0)?;
    // M(1) under µ̄(x) = 1/x, b = 1 is u ↦ u/(1+u)
    let ks = ks_one_sample(&sample, |u| Ok(if u < 0.0 { 0.0 } else { u / (1.0 + u) }), eps)?;
    let secs = start.elapsed().as_secs_f64();
    outcome(
        ks <= 0.01 && secs <= 60.0,
        format!("KS={ks:.5} (≤ 0.01), n={n}, runtime {secs:.1}s (≤ 60s)"),
    )
}

fn fdd_oracle() -> Result<Outcome> {
    let m = TailMeasure::power_law(1.0, 1.0)?;
    // two segment integrals of ln 2 each
    let oracle = (-2.0 * 2f64.ln()).exp();
    let theory = laws::fdd(&[1.0, 2.0], &[1.0, 1.0], 1.0, &m)?;
    let params = EsnParams::new(1.0, m, 1e-6, 2.0)?;
    let r = verify::check_fdd(&params, &[1.0, 2.0], &[1.0, 1.0], 100_000, SEED)?;
    let pass = (theory - 0.25).abs() < 1e-14 && (oracle - 0.25).abs() < 1e-15 && (r.estimate - 0.25).abs() <= 3.0 * r.stderr;
    outcome(
        pass,
        format!(
            "theory={theory:.15}, MC={:.5} ± {:.5}, |diff|/SE={:.2} (≤ 3)",
            r.estimate,
            r.stderr,
            (r.estimate - 0.25).abs() / r.stderr
        ),
    )
}

fn passage_laplace() -> Result<Outcome> {
    let m = TailMeasure::exponential(1.0, 1.0)?;
    // f_1(x) = e^{−1/e} (exp(e^{−x}) − 1) for µ̄(x) = e^{−x}, b = 1
    let f1 = |x: f64| (-(-1.0f64).exp()).exp() * ((-x).exp().exp() - 1.0);
    let oracle = f1(2.0) / f1(1.0);
    let solver = PassageSolver::new(m.clone(), 1.0)?;
    let theory = solver.passage_laplace(2.0, 1.0, 1.0)?;
    let params = EsnParams::new(1.0, m, 0.0, 1.0)?;
    let r = verify::check_passage(&params, 2.0, 1.0, 1.0, 100_000, SEED, None)?;
    let censored = r.details["censored_fraction"];
    let z = (r.estimate - oracle).abs() / r.stderr;
    let pass = rel(theory, oracle) < 1e-10 && z <= 3.0 && censored < 1e-3;
    outcome(
        pass,
        format!(
            "f1(2)/f1(1)={oracle:.10} (quadrature rel err {:.1e}), MC={:.5} ± {:.5}, |diff|/SE={z:.2}, censored={censored}",
            rel(theory, oracle),
            r.estimate,
            r.stderr
        ),
    )
}

fn stable_exponent() -> Result<Outcome> {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for c in [0.25, 0.5, 0.75] {
        let solver = PassageSolver::new(TailMeasure::power_law(c, 1.0)?, 1.0)?;
        for theta in [0.5, 1.0, 2.0, 4.0] {
            let phi = solver.inverse_local_time_exponent(theta)?;
            worst = worst.max(rel(phi, f64::powf(theta, 1.0 - c)));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-6 && secs <= 5.0,
        format!("max rel err {worst:.2e} (≤ 1e-6), runtime {secs:.2}s (≤ 5s)"),
    )
}

fn theta_invariance() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for m in [TailMeasure::exponential(1.0, 1.0)?, TailMeasure::power_law(0.5, 1.0)?] {
        let solver = Arc::new(PassageSolver::new(m.clone(), 1.0)?);
        for theta in [0.5, 1.0, 2.0] {
            let f = solver.test_function(theta)?;
            for x in [0.5, 1.0, 2.0] {
                let lhs = laws::generator_apply(&f, x, 1.0, &m)?.value;
                worst = worst.max(rel(lhs, theta * solver.f_theta(x, theta)?));
            }
        }
    }
    outcome(worst <= 1e-6, format!("max rel residual {worst:.2e} (≤ 1e-6) over 18 points"))
}

fn excessive_identity() -> Result<Outcome> {
    let theta = 1.0;
    let mut worst: f64 = 0.0;
    let mut below = 0;
    for m in [TailMeasure::exponential(1.0, 1.0)?, TailMeasure::power_law(0.5, 1.0)?] {
        let solver = Arc::new(PassageSolver::new(m.clone(), 1.0)?);
        let f = solver.test_function(theta)?;
        for x in [0.5, 1.0, 2.0] {
            for t in [0.25, 1.0, 3.0] {
                if x < t {
                    below += 1;
                }
                let lhs = laws::semigroup_apply(&f, x, t, 1.0, &m)?.value;
                let rhs = (theta * t).exp() * solver.f_theta(x.max(t), theta)?;
                worst = worst.max(rel(lhs, rhs));
            }
        }
    }
    outcome(
        worst <= 1e-6 && below > 0,
        format!("max rel err {worst:.2e} (≤ 1e-6), {below} grid points with x < bt"),
    )
}

fn generator_vs_semigroup() -> Result<Outcome> {
    let m = TailMeasure::exponential(1.0, 1.0)?;
    let mut worst: f64 = 0.0;
    for f in [TestFunction::gaussian(), TestFunction::cauchy(), TestFunction::gamma_bump()] {
        f.validate_for(&m)?;
        for x in [0.0, 0.5, 2.0] {
            let r = verify::check_generator(&f, x, 1.0, &m)?;
            worst = worst.max(r.details["relative_error"]);
        }
    }
    outcome(worst <= 1e-3, format!("max rel err {worst:.2e} (≤ 1e-3) over 9 points"))
}

fn zero_set_measure() -> Result<Outcome> {
    let oracle = simpson(|s| (-(1.0 - (-s).exp())).exp(), 0.0, 5.0, 200_000);
    let params = EsnParams::new(1.0, TailMeasure::exponential(1.0, 1.0)?, 0.0, 5.0)?;
    let r = verify::check_zero_measure(&params, 0.0, 10_000, SEED)?;
    let z = (r.estimate - oracle).abs() / r.stderr;
    outcome(
        z <= 3.0,
        format!("oracle={oracle:.6}, MC={:.5} ± {:.5}, |diff|/SE={z:.2} (≤ 3)", r.estimate, r.stderr),
    )
}

fn classification_table() -> Result<Outcome> {
    let t = passage::classify(1.0, &TailMeasure::power_law(2.0, 1.0)?)?;
    let n = passage::classify(1.0, &TailMeasure::power_law(0.5, 1.0)?)?;
    let e = passage::classify(1.0, &TailMeasure::exponential(1.0, 1.0)?)?;
    let shepp = [
        passage::shepp_criterion(&TailMeasure::power_law(0.5, 1.0)?)?,
        passage::shepp_criterion(&TailMeasure::power_law(1.0, 1.0)?)?,
        passage::shepp_criterion(&TailMeasure::power_law(1.5, 1.0)?)?,
    ];
    let pass = t.recurrence == Recurrence::Transient
        && t.boundary == Boundary::Inaccessible
        && n.recurrence == Recurrence::NullRecurrent
        && n.boundary == Boundary::Accessible
        && e.recurrence == Recurrence::PositiveRecurrent
        && e.boundary == Boundary::Accessible
        && e.sticky
        && shepp == [false, true, true];
    outcome(
        pass,
        format!(
            "c=2: {:?}/{:?}; c=0.5: {:?}/{:?}; exp: {:?}/{:?}/sticky={}; shepp(0.5,1,1.5)={shepp:?}",
            t.recurrence, t.boundary, n.recurrence, n.boundary, e.recurrence, e.boundary, e.sticky
        ),
    )
}

fn stationary_convergence() -> Result<Outcome> {
    let m = TailMeasure::exponential(1.0, 1.0)?;
    let bound = laws::tv_bound(0.0, 10.0, 1.0, &m)?;
    let params = EsnParams::new(1.0, m, 0.0, 10.0)?;
    let r = verify::check_stationary(&params, 10.0, 50, 100_000, SEED)?;
    let pass = rel(bound, (-10.0f64).exp()) < 1e-14 && r.pass;
    outcome(
        pass,
        format!(
            "binned TV={:.5} ≤ {:.5} (tv_bound={bound:.3e} + 3×noise {:.5})",
            r.estimate, r.threshold, r.details["noise"]
        ),
    )
}

fn max_infinite_divisibility() -> Result<Outcome> {
    let m = TailMeasure::exponential(1.0, 1.0)?;
    let params = EsnParams::new(1.0, m.clone(), 0.0, 1.0)?;
    let n = 10_000;
    let whole = sample_marginal(&params, 0.0, 1.0, n, SEED, 1)?;
    let piece = params.with_measure(m.scaled(0.25)?);
    let mut maxima = vec![0.0f64; n as usize];
    for k in 0..4 {
        for (acc, v) in maxima.iter_mut().zip(sample_marginal(&piece, 0.0, 1.0, n, SEED, 2 + k)?) {
            *acc = acc.max(v);
        }
    }
    let ks = ks_two_sample(&whole, &maxima);
    outcome(ks <= 0.02, format!("two-sample KS={ks:.5} (≤ 0.02), n={n}"))
}

fn truncation_exactness() -> Result<Outcome> {
    let m = TailMeasure::power_law(0.5, 1.0)?;
    let (x, a, eps) = (2.0, 0.5, 0.5);
    let coarse = EsnParams::new(1.0, m.clone(), eps, 1.0)?;
    let fine = EsnParams::new(1.0, m, eps / 4.0, 1.0)?;
    let cap = 1e4;
    let mut identical = 0;
    let mut hits = 0;
    for i in 0..1000 {
        let p = first_passage(x, a, &coarse, &mut replicate_rng(SEED, i), cap)?;
        let q = first_passage(x, a, &fine, &mut replicate_rng(SEED, i), cap)?;
        if p == q {
            identical += 1;
        }
        if matches!(p, Passage::Hit(_)) {
            hits += 1;
        }
    }
    outcome(
        identical == 1000,
        format!("{identical}/1000 bit-identical σ_a samples (ε={eps} vs ε/4, a={a}); {hits} hits"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Result<Outcome>); 12] = [
        ("cdf oracle", cdf_oracle),
        ("fdd oracle", fdd_oracle),
        ("first-passage Laplace transform", passage_laplace),
        ("stable inverse local time exponent", stable_exponent),
        ("theta-invariance of f_theta", theta_invariance),
        ("excessivity identity", excessive_identity),
        ("generator vs semigroup", generator_vs_semigroup),
        ("zero-set measure", zero_set_measure),
        ("classification table", classification_table),
        ("stationary convergence", stationary_convergence),
        ("max-infinite divisibility", max_infinite_divisibility),
        ("truncation exactness", truncation_exactness),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, summary) = match run() {
            Ok(o) => (o.pass, o.summary),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<36} {}  {} [{:.1}s]",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            summary,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {} failed", criteria.len() - failed, failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
