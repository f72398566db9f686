//! Acceptance gate. Each test prints exactly one `criterion N: PASS|FAIL` line.
//!
//! Run with `cargo test -p bautin-core --test acceptance -- --nocapture`.

use std::time::{Duration, Instant};

use bautin_core::cycles::{bisect_threshold, classify_amplitude, PortraitClass, Verdict};
use bautin_core::integrator::{integrate, IntegrationOptions, LinearDelay};
use bautin_core::normalform::{cycle_radii, integrate_polar, radial_rhs, region_classify, CycleStability, Zone};
use bautin_core::spectrum::{char_residual, hopf_curve, hopf_r, leading_eigenvalue, leading_root, HopfFamily};
use bautin_core::{History, Options, Params, Settings, Unfolding};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(n: u32, ok: bool, detail: impl AsRef<str>) {
    let tag = if ok { "PASS" } else { "FAIL" };
    println!("criterion {n}: {tag} | {}", detail.as_ref());
    assert!(ok, "criterion {n} failed: {}", detail.as_ref());
}

fn base() -> Params {
    Params::new(2.5, 2.0, 0.0023073665, 1.01, 5.3).unwrap()
}

fn at(delta: f64, r: f64) -> Params {
    base().with_delta_r(delta, r).unwrap()
}

fn run(params: &Params, c: f64) -> PortraitClass<f64> {
    let eig = leading_eigenvalue(params).unwrap();
    classify_amplitude(params, &eig, c, &Options::default(), &Settings::default()).unwrap()
}

fn family() -> HopfFamily<f64> {
    HopfFamily::from(&base())
}

#[test]
fn criterion_1_hopf_fixture() {
    let fam = family();
    let p = hopf_r(0.0023073665, &fam).unwrap();
    let rel = (p.r_star - 5.301432998).abs() / 5.301432998;

    let reps = 1000;
    let start = Instant::now();
    for _ in 0..reps {
        std::hint::black_box(hopf_r(std::hint::black_box(0.0023073665), &fam).unwrap());
    }
    let per_call = start.elapsed() / reps;

    report(
        1,
        rel < 1e-6 && per_call < Duration::from_millis(1),
        format!("r* = {:.12}, rel err {rel:.2e}, {per_call:?} per call", p.r_star),
    );
}

#[test]
fn criterion_2_hopf_self_consistency() {
    let fam = family();
    let start = Instant::now();
    let samples = hopf_curve(0.0012, 0.0030, 50, &fam).unwrap();
    let mut worst_re = 0.0f64;
    let mut worst_res = 0.0f64;
    let mut failures = 0;
    for sample in &samples {
        let Ok(h) = &sample.point else {
            failures += 1;
            continue;
        };
        let params = fam.params(sample.delta, h.r_star).unwrap();
        // Start off the root so the polish actually iterates.
        let guess = Complex64::new(-0.05 * h.omega_star, 0.9 * h.omega_star);
        match leading_root(&params, guess) {
            Ok(eig) => {
                let res = char_residual(eig.as_complex(), &params).unwrap().norm();
                worst_re = worst_re.max(eig.mu.abs());
                worst_res = worst_res.max(res);
                if (eig.omega - h.omega_star).abs() > 1e-8 * h.omega_star {
                    failures += 1;
                }
            }
            Err(_) => failures += 1,
        }
    }
    let elapsed = start.elapsed();
    let ok = samples.len() == 50
        && failures == 0
        && worst_re < 1e-8
        && worst_res < 1e-12
        && elapsed < Duration::from_secs(1);
    report(
        2,
        ok,
        format!(
            "{} points, {failures} failures, max |Re λ| {worst_re:.1e}, max residual {worst_res:.1e}, {elapsed:?}",
            samples.len()
        ),
    );
}

#[test]
fn criterion_3_zone1() {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, delta, r) in [("P1", 0.002, 5.93), ("P1'", 0.0024, 5.14)] {
        let params = at(delta, r);
        let start = Instant::now();
        let class = run(&params, 0.5);
        let elapsed = start.elapsed();
        ok &= class.verdict == Verdict::ConvergesToEquilibrium && elapsed < Duration::from_secs(30);
        parts.push(format!("{name}: {} in {elapsed:.2?}", class.verdict));
    }
    report(3, ok, parts.join(", "));
}

#[test]
fn criterion_4_zone2() {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, delta, r, cs) in [("P2", 0.0024, 5.2, [0.001, 0.2]), ("P2'", 0.0015, 7.56, [0.1, 5.0])] {
        let params = at(delta, r);
        let mut amps = Vec::new();
        for c in cs {
            let class = run(&params, c);
            ok &= class.verdict == Verdict::ConvergesToCycle;
            amps.push(class.cycle_amplitude.unwrap_or(f64::NAN));
        }
        let rel = (amps[0] - amps[1]).abs() / amps[0].abs().max(amps[1].abs());
        ok &= rel < 1e-2;
        parts.push(format!(
            "{name}: amplitudes {:.5}/{:.5} rel {rel:.1e}",
            amps[0], amps[1]
        ));
    }
    report(4, ok, parts.join(", "));
}

#[test]
fn criterion_5_zone3_threshold() {
    let params = at(0.0015, 7.55);
    let opts = Options::default();
    let settings = Settings::default();
    let start = Instant::now();

    let cs = [0.1, 0.42, 0.425, 0.45, 0.6];
    let expected = [
        Verdict::ConvergesToEquilibrium,
        Verdict::ConvergesToEquilibrium,
        Verdict::ConvergesToCycle,
        Verdict::ConvergesToCycle,
        Verdict::ConvergesToCycle,
    ];
    let verdicts: Vec<Verdict> = cs.iter().map(|&c| run(&params, c).verdict).collect();
    let ladder_ok = verdicts == expected;

    let bracket = bisect_threshold(&params, 0.1, 0.6, 0.005, &opts, &settings).unwrap();
    let bracket_ok = bracket.c_lo <= 0.425 && bracket.c_hi >= 0.42 && bracket.c_hi - bracket.c_lo <= 0.005;
    let elapsed = start.elapsed();

    let ladder: Vec<String> = verdicts.iter().map(|v| v.to_string()).collect();
    report(
        5,
        ladder_ok && bracket_ok && elapsed < Duration::from_secs(600),
        format!(
            "ladder [{}], bracket [{:.5}, {:.5}] after {} probes, {elapsed:.2?}",
            ladder.join(", "),
            bracket.c_lo,
            bracket.c_hi,
            bracket.probes.len()
        ),
    );
}

/// Closed-form method-of-steps solution of `x' = -x(t-1)`, `x ≡ 1` on `[-1, 0]`.
fn linear_exact(t: f64) -> f64 {
    let mut sum = 0.0;
    let mut factorial = 1.0;
    for j in 0..=(t.floor() as i32 + 1) {
        if j > 0 {
            factorial *= j as f64;
        }
        let arg = t - (j - 1) as f64;
        if arg < 0.0 {
            break;
        }
        sum += (-1f64).powi(j) * arg.powi(j) / factorial;
    }
    sum
}

#[test]
fn criterion_6_integrator_order() {
    let start = Instant::now();
    let system = LinearDelay {
        a: 0.0,
        b: -1.0,
        tau: 1.0,
    };
    // On [0, 2] the solution is a quadratic and the scheme is exact, so the
    // study runs to t = 5 where the solution is a quintic.
    let t_end = 5.0;
    let steps = [1e-2, 5e-3, 2.5e-3, 1.25e-3];
    let errors: Vec<f64> = steps
        .iter()
        .map(|&h| {
            let history = History::constant(1.0, 1.0).unwrap();
            let traj = integrate(system, history, &IntegrationOptions::fixed(h, t_end)).unwrap();
            traj.times()
                .iter()
                .zip(traj.states())
                .map(|(&t, &x)| (x - linear_exact(t)).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let min_order = orders.iter().cloned().fold(f64::INFINITY, f64::min);
    let elapsed = start.elapsed();
    report(
        6,
        min_order >= 2.7 && elapsed < Duration::from_secs(1),
        format!(
            "errors {:?}, observed orders {:?}, {elapsed:.2?}",
            errors.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>(),
            orders.iter().map(|o| format!("{o:.3}")).collect::<Vec<_>>()
        ),
    );
}

/// Asymptotic check of one analytic cycle against the numerical radial flow.
fn check_cycle(p: &Unfolding, rho: f64, stability: CycleStability) -> Result<(), String> {
    let h = 1e-6;
    let slope = (radial_rhs(rho + h, p) - radial_rhs(rho - h, p)) / (2.0 * h);
    let rate = slope.abs();
    match stability {
        CycleStability::Stable => {
            // Contract from a 1e-3 relative offset to below 1e-6.
            let t_end = (20.0 / rate).min(2e4);
            for side in [-1.0, 1.0] {
                let end = integrate_polar(p, rho * (1.0 + side * 1e-3), t_end).map_err(|e| e.to_string())?;
                if (end - rho).abs() > 1e-6 {
                    return Err(format!("stable ρ={rho} reached {end} from side {side}"));
                }
            }
        }
        CycleStability::Unstable => {
            // A small offset must grow, on the same side it started.
            let offset = 1e-6 * rho;
            let t_end = (4.0 / rate).min(2e4);
            for side in [-1.0, 1.0] {
                let end = integrate_polar(p, rho + side * offset, t_end).map_err(|e| e.to_string())?;
                let moved = (end - rho) * side;
                if moved < 10.0 * offset {
                    return Err(format!("unstable ρ={rho} did not repel from side {side}: end {end}"));
                }
            }
        }
        CycleStability::SemiStable => return Err("semistable cycle in random sample".into()),
    }
    Ok(())
}

#[test]
fn criterion_7_normal_form_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let mut failures: Vec<String> = Vec::new();
    let mut counts = [0usize; 3];
    for _ in 0..1000 {
        let b1: f64 = rng.gen_range(-1.0..=1.0);
        let b2: f64 = rng.gen_range(-1.0..=1.0);
        let p = Unfolding::negative(b1, b2);
        let set = cycle_radii(&p);
        counts[set.len().min(2)] += 1;

        for cycle in &set.cycles {
            let residual = p.radial_polynomial(cycle.radius * cycle.radius).abs();
            if residual > 1e-12 {
                failures.push(format!("({b1}, {b2}) residual {residual:e}"));
            }
            if let Err(msg) = check_cycle(&p, cycle.radius, cycle.stability) {
                failures.push(format!("({b1}, {b2}) {msg}"));
            }
        }

        let expected = match set.len() {
            0 => Zone::Zone1,
            1 => Zone::Zone2,
            _ => Zone::Zone3,
        };
        let zone = region_classify(&p).unwrap();
        if zone != expected {
            failures.push(format!("({b1}, {b2}) zone {zone:?} with {} radii", set.len()));
        }
    }
    let fold = region_classify(&Unfolding::negative(-0.0625, 0.5)).unwrap();
    if fold != Zone::OnFoldT {
        failures.push(format!("fold example classified {fold:?}"));
    }
    let elapsed = start.elapsed();
    let detail = format!(
        "1000 samples ({} zone1, {} zone2, {} zone3), fold -> {}, {} failures{}, {elapsed:.2?}",
        counts[0],
        counts[1],
        counts[2],
        fold.label(),
        failures.len(),
        failures.first().map(|f| format!(" e.g. {f}")).unwrap_or_default()
    );
    report(7, failures.is_empty() && elapsed < Duration::from_secs(10), detail);
}

#[test]
fn criterion_8_reproducibility_statement() {
    println!(
        "criterion 8: INFO | statement only: the source figures omit solver tolerances, horizons and plot \
         ranges, so criteria 3-5 check verdicts and the threshold bracket instead of pixel agreement"
    );
}
