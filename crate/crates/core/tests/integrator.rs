use approx::assert_abs_diff_eq;
use bautin_core::cycles::{make_history, peaks, Signal};
use bautin_core::integrator::{integrate, IntegrationOptions, LinearDelay, Trajectory};
use bautin_core::spectrum::leading_eigenvalue;
use bautin_core::{History, ModelTrajectory, Options, Params};

fn p1() -> Params {
    Params::new(2.5, 2.0, 0.002, 1.01, 5.93).unwrap()
}

fn eigen_run(params: &Params, c: f64, t_end: f64) -> ModelTrajectory {
    let eig = leading_eigenvalue(params).unwrap();
    let history = make_history(params, &eig, c).unwrap();
    integrate(*params, history, &Options::default().with_t_end(t_end)).unwrap()
}

fn linear() -> Trajectory<f64, LinearDelay<f64>> {
    let system = LinearDelay {
        a: 0.0,
        b: -1.0,
        tau: 1.0,
    };
    integrate(
        system,
        History::constant(1.0, 1.0).unwrap(),
        &Options::default().with_t_end(2.0),
    )
    .unwrap()
}

fn linear_exact(t: f64) -> f64 {
    if t <= 1.0 {
        1.0 - t
    } else {
        1.0 - t + (t - 1.0).powi(2) / 2.0
    }
}

#[test]
fn linear_test_problem_within_1e6() {
    let traj = linear();
    let worst = (0..=2000)
        .map(|i| i as f64 * 1e-3)
        .map(|t| (traj.eval(t).unwrap() - linear_exact(t)).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-6, "max error {worst}");
}

#[test]
fn linear_midpoints_match_closed_form() {
    let traj = linear();
    let opts = Options::default();
    for w in traj.times().windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let tol = opts.abs_tol + opts.rel_tol * linear_exact(mid).abs();
        assert!((traj.eval(mid).unwrap() - linear_exact(mid)).abs() <= tol, "t = {mid}");
    }
}

#[test]
fn linear_derivative_at_half() {
    assert_abs_diff_eq!(linear().eval_derivative(0.5).unwrap(), -1.0, epsilon = 1e-12);
}

#[test]
fn equilibrium_is_preserved_for_1000_delays() {
    let params = p1();
    let x2 = params.x2().unwrap();
    let opts = Options::default().with_t_end(1000.0 * params.r);
    let traj = integrate(params, History::constant(params.r, x2).unwrap(), &opts).unwrap();
    let drift = traj.states().iter().map(|x| (x - x2).abs()).fold(0.0, f64::max);
    assert!(drift < 10.0 * opts.abs_tol, "drift {drift}");
    assert_abs_diff_eq!(traj.eval_derivative(777.7).unwrap(), 0.0, epsilon = 1e-12);
}

#[test]
fn runs_are_bit_identical() {
    let params = Params::new(2.5, 2.0, 0.0015, 1.01, 7.55).unwrap();
    let a = eigen_run(&params, 0.45, 5000.0);
    let b = eigen_run(&params, 0.45, 5000.0);
    assert_eq!(a.times(), b.times());
    assert_eq!(a.states(), b.states());
    assert_eq!(a.derivatives(), b.derivatives());
}

#[test]
fn steps_respect_the_delay_and_hit_breaks() {
    let params = p1();
    let traj = eigen_run(&params, 0.5, 200.0);
    for w in traj.times().windows(2) {
        assert!(w[1] - w[0] <= params.r * (1.0 + 1e-12));
    }
    for m in 1..=4 {
        let target = m as f64 * params.r;
        assert!(traj.times().contains(&target), "missing break {target}");
    }
}

#[test]
fn dense_output_is_exact_on_nodes_and_delegates_to_history() {
    let params = p1();
    let traj = eigen_run(&params, 0.5, 300.0);
    for (&t, &x) in traj.times().iter().zip(traj.states()).step_by(7) {
        assert_eq!(traj.eval(t).unwrap(), x);
    }
    for s in [-params.r, -2.0, -0.5] {
        assert_eq!(traj.eval(s).unwrap(), traj.history().eval(s).unwrap());
    }
    assert!(traj.eval(-params.r - 1.0).is_err());
    assert!(traj.eval(301.0).is_err());
}

#[test]
fn derivative_matches_finite_difference() {
    let params = Params::new(2.5, 2.0, 0.0024, 1.01, 5.2).unwrap();
    let traj = eigen_run(&params, 0.2, 3000.0);
    let h = 1e-3;
    let worst = (1..300)
        .map(|i| i as f64 * 9.97)
        .map(|t| {
            let fd = (traj.eval(t + h).unwrap() - traj.eval(t - h).unwrap()) / (2.0 * h);
            (traj.eval_derivative(t).unwrap() - fd).abs()
        })
        .fold(0.0, f64::max);
    assert!(worst < 1e-4, "max deviation {worst}");
}

#[test]
fn p1_successive_maxima_decrease_after_transient() {
    let params = p1();
    let x2 = params.x2().unwrap();
    let traj = eigen_run(&params, 0.5, 6000.0);
    let amps: Vec<f64> = peaks(&traj, 1000.0).iter().map(|p| p.amplitude(x2)).collect();
    assert!(amps.len() > 10);
    assert!(amps.windows(2).all(|w| w[1] < w[0]), "{amps:?}");
}

#[test]
fn csv_export_has_header_and_endpoint() {
    let traj = linear();
    let csv = traj.to_csv(0.3).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,x,xdot"));
    let last = lines.last().unwrap();
    assert!(last.starts_with("2,"), "{last}");
}

#[test]
fn invalid_options_are_rejected() {
    let bad = [
        IntegrationOptions {
            rel_tol: 0.0,
            ..Options::default()
        },
        IntegrationOptions {
            abs_tol: -1.0,
            ..Options::default()
        },
        IntegrationOptions {
            max_step: Some(10.0),
            ..Options::default()
        },
        IntegrationOptions {
            t_end: f64::NAN,
            ..Options::default()
        },
    ];
    for opts in bad {
        let res = integrate(p1(), History::constant(5.93, 3.0).unwrap(), &opts);
        assert!(res.is_err(), "{opts:?}");
    }
}

#[test]
fn signal_view_matches_trajectory() {
    let traj = eigen_run(&p1(), 0.5, 100.0);
    let n = Signal::mesh(&traj).len();
    assert_eq!(n, traj.len());
    assert_eq!(traj.mesh_value(n - 1), *traj.states().last().unwrap());
}

#[test]
fn f32_trajectory_tracks_f64() {
    let p64 = p1();
    let p32 = bautin_core::model::ModelParams::<f32>::new(2.5, 2.0, 0.002, 1.01, 5.93).unwrap();
    let e32 = leading_eigenvalue(&p32).unwrap();
    let h32 = make_history(&p32, &e32, 0.5).unwrap();
    let o32 = IntegrationOptions::<f32>::default().with_t_end(500.0);
    let t32 = integrate(p32, h32, &o32).unwrap();
    // Same tolerance in both precisions; the f32 default is clamped above
    // epsilon, where the global error is a few 1e-3, so the runs only agree
    // to that order.
    let o64 = IntegrationOptions {
        rel_tol: o32.rel_tol as f64,
        ..Options::default().with_t_end(500.0)
    };
    let eig = leading_eigenvalue(&p64).unwrap();
    let t64 = integrate(p64, make_history(&p64, &eig, 0.5).unwrap(), &o64).unwrap();
    for t in [50.0, 250.0, 500.0] {
        let d = (t32.eval(t as f32).unwrap() as f64 - t64.eval(t).unwrap()).abs();
        assert!(d < 1e-3, "t = {t}: {d}");
    }
}
