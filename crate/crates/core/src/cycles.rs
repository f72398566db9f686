//! Eigenmode initial histories, long-run classification of trajectories and
//! the search for the basin boundary between the equilibrium and the outer
//! limit cycle.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{DelaySystem, HistoryFunction, IntegrationOptions, Trajectory};
use crate::model::ModelParams;
use crate::scalar::Scalar;
use crate::spectrum::{leading_eigenvalue, Eigenvalue};

/// `φ(s) = x₂ + c·e^{μs}·cos(ωs)` on `[−r, 0]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistorySpec<T> {
    pub c: T,
    pub mu: T,
    pub omega: T,
    pub x2: T,
}

impl<T: Scalar> HistorySpec<T> {
    pub fn new(params: &ModelParams<T>, eig: &Eigenvalue<T>, c: T) -> Result<Self> {
        Ok(Self {
            c,
            mu: eig.mu,
            omega: eig.omega,
            x2: params.x2()?,
        })
    }

    pub fn materialize(&self, delay: T) -> Result<HistoryFunction<T>> {
        HistoryFunction::eigenmode(delay, self.x2, self.c, self.mu, self.omega)
    }
}

pub fn make_history<T: Scalar>(params: &ModelParams<T>, eig: &Eigenvalue<T>, c: T) -> Result<HistoryFunction<T>> {
    HistorySpec::new(params, eig, c)?.materialize(params.r)
}

/// A scalar signal with a mesh of scan points, as seen by [`peaks`] and
/// [`classify`]. Implemented by [`Trajectory`]; tests supply closed forms.
pub trait Signal<T: Copy> {
    /// Ascending scan points; consecutive points bracket at most one extremum.
    fn mesh(&self) -> &[T];
    fn value(&self, t: T) -> T;
    fn slope(&self, t: T) -> T;

    /// Value at `mesh()[i]`.
    fn mesh_value(&self, i: usize) -> T {
        self.value(self.mesh()[i])
    }

    /// Slope at `mesh()[i]`.
    fn mesh_slope(&self, i: usize) -> T {
        self.slope(self.mesh()[i])
    }
}

impl<T: Scalar, S: DelaySystem<T>> Signal<T> for Trajectory<T, S> {
    fn mesh(&self) -> &[T] {
        self.times()
    }

    fn value(&self, t: T) -> T {
        self.lookup(t)
    }

    fn slope(&self, t: T) -> T {
        Trajectory::slope(self, t)
    }

    fn mesh_value(&self, i: usize) -> T {
        self.states()[i]
    }

    fn mesh_slope(&self, i: usize) -> T {
        self.derivatives()[i]
    }
}

/// Local extremum located to within the bisection tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak<T> {
    pub t: T,
    pub value: T,
}

impl<T: Scalar> Peak<T> {
    pub fn amplitude(&self, baseline: T) -> T {
        self.value - baseline
    }
}

fn extrema<T: Scalar, G: Signal<T> + ?Sized>(signal: &G, t_min: T, maxima: bool) -> Vec<Peak<T>> {
    let mesh = signal.mesh();
    let tol = T::lit(1e-8);
    let half = T::lit(0.5);
    let rising = |d: T| if maxima { d > T::zero() } else { d < T::zero() };
    let mut out = Vec::new();
    let start = mesh.partition_point(|&t| t < t_min);
    if start >= mesh.len() {
        return out;
    }
    let mut prev = signal.mesh_slope(start);
    for i in start + 1..mesh.len() {
        let next = signal.mesh_slope(i);
        if rising(prev) && !rising(next) && next != prev {
            let (mut a, mut b) = (mesh[i - 1], mesh[i]);
            if next == T::zero() {
                out.push(Peak {
                    t: b,
                    value: signal.mesh_value(i),
                });
            } else {
                let floor = tol.max(T::epsilon() * T::lit(4.0) * b.abs());
                while b - a > floor {
                    let m = (a + b) * half;
                    if rising(signal.slope(m)) {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                let t = (a + b) * half;
                out.push(Peak {
                    t,
                    value: signal.value(t),
                });
            }
        }
        prev = next;
    }
    out
}

/// Local maxima of the signal after `t_min`, located by a sign change of
/// the slope between mesh points and refined by bisection to `1e-8`.
pub fn peaks<T: Scalar, G: Signal<T> + ?Sized>(signal: &G, t_min: T) -> Vec<Peak<T>> {
    extrema(signal, t_min, true)
}

/// Local minima, the mirror image of [`peaks`].
pub fn troughs<T: Scalar, G: Signal<T> + ?Sized>(signal: &G, t_min: T) -> Vec<Peak<T>> {
    extrema(signal, t_min, false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ConvergesToEquilibrium,
    ConvergesToCycle,
    Undetermined,
    Diverged,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::ConvergesToEquilibrium => "converges_to_equilibrium",
            Verdict::ConvergesToCycle => "converges_to_cycle",
            Verdict::Undetermined => "undetermined",
            Verdict::Diverged => "diverged",
        })
    }
}

/// Outcome of [`classify`].
///
/// `cycle_amplitude` (half the peak-to-trough excursion of the settled
/// oscillation) and `cycle_period` are set exactly for
/// [`Verdict::ConvergesToCycle`]. `transient_end` is the time at which the
/// deciding criterion latched.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PortraitClass<T> {
    pub verdict: Verdict,
    pub cycle_amplitude: Option<T>,
    pub cycle_period: Option<T>,
    pub transient_end: Option<T>,
}

impl<T: Scalar> PortraitClass<T> {
    fn plain(verdict: Verdict, transient_end: Option<T>) -> Self {
        Self {
            verdict,
            cycle_amplitude: None,
            cycle_period: None,
            transient_end,
        }
    }
}

/// Classification thresholds and the integration horizon policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifySettings<T> {
    /// Number of trailing peaks examined by the peak criteria.
    pub k_peaks: usize,
    /// Relative spread allowed among the trailing main peaks of a cycle.
    pub amp_rel_tol: T,
    /// `ε_eq = eq_eps_rel · max(1, |x₂|)`.
    pub eq_eps_rel: T,
    /// Peaks below this fraction of the running maximum amplitude are not
    /// main peaks.
    pub main_peak_fraction: T,
    /// `|x|` above this bound is reported as divergence.
    pub diverge_bound: T,
    /// Start of the analysis window.
    pub t_min: T,
    /// Longest horizon [`classify_history`] integrates to while the verdict
    /// stays undetermined.
    pub max_horizon: T,
    /// Fallback period for the envelope criterion when too few peaks exist.
    pub period_hint: Option<T>,
}

impl<T: Scalar> Default for ClassifySettings<T> {
    fn default() -> Self {
        Self {
            k_peaks: 10,
            amp_rel_tol: T::lit(1e-3),
            eq_eps_rel: T::lit(1e-4),
            main_peak_fraction: T::lit(0.5),
            diverge_bound: T::lit(1e6),
            t_min: T::zero(),
            max_horizon: T::lit(300_000.0),
            period_hint: None,
        }
    }
}

impl<T: Scalar> ClassifySettings<T> {
    pub fn eq_eps(&self, x2: T) -> T {
        self.eq_eps_rel * x2.abs().max(T::one())
    }
}

fn mean_spacing<T: Scalar>(ps: &[Peak<T>]) -> Option<T> {
    if ps.len() < 2 {
        return None;
    }
    let n = T::from_usize(ps.len() - 1).unwrap();
    Some((ps[ps.len() - 1].t - ps[0].t) / n)
}

/// Classifies the long-run behaviour of `signal` relative to the equilibrium
/// `x2`.
///
/// Criteria, in order:
/// 1. `Diverged` if `|x|` leaves the configured bound.
/// 2. `ConvergesToEquilibrium` if `|x − x₂| < ε_eq` during at least one
///    putative period before the end of the window.
/// 3. `ConvergesToCycle` if the last `k_peaks` main peaks agree to
///    `amp_rel_tol` relative, all exceed `10·ε_eq`, and the oscillation
///    continues to the end of the window.
/// 4. `ConvergesToEquilibrium` if the last `k_peaks` peaks decrease
///    strictly and the last one is below `10·ε_eq`.
///
/// Otherwise `Undetermined`. Peaks lower than `ε_eq` above `x₂` are
/// ignored throughout.
pub fn classify<T: Scalar, G: Signal<T> + ?Sized>(
    signal: &G,
    x2: T,
    settings: &ClassifySettings<T>,
) -> PortraitClass<T> {
    let mesh = signal.mesh();
    let eps = settings.eq_eps(x2);
    let k = settings.k_peaks.max(2);
    let ten = T::lit(10.0);
    if mesh.is_empty() {
        return PortraitClass::plain(Verdict::Undetermined, None);
    }
    let t_end = mesh[mesh.len() - 1];
    let start = mesh.partition_point(|&t| t < settings.t_min);
    if start >= mesh.len() {
        return PortraitClass::plain(Verdict::Undetermined, None);
    }

    let mut last_exceed: Option<T> = None;
    for (i, &t) in mesh.iter().enumerate().skip(start) {
        let x = signal.mesh_value(i);
        if !x.is_finite() || x.abs() > settings.diverge_bound {
            return PortraitClass::plain(Verdict::Diverged, Some(t));
        }
        if (x - x2).abs() >= eps {
            last_exceed = Some(t);
        }
    }

    let floor_peaks: Vec<Peak<T>> = peaks(signal, settings.t_min)
        .into_iter()
        .filter(|p| p.amplitude(x2) >= eps)
        .collect();
    if let Some(p) = floor_peaks.last() {
        last_exceed = Some(last_exceed.map_or(p.t, |t| t.max(p.t)));
    }

    // 2. envelope below ε_eq for one putative period
    let tail = &floor_peaks[floor_peaks.len().saturating_sub(k)..];
    let period = mean_spacing(tail).or(settings.period_hint);
    match (last_exceed, period) {
        (None, _) => {
            return PortraitClass::plain(Verdict::ConvergesToEquilibrium, Some(mesh[start]));
        }
        (Some(te), Some(p)) if t_end - te >= p => {
            return PortraitClass::plain(Verdict::ConvergesToEquilibrium, Some(te));
        }
        _ => {}
    }

    // 3. settled oscillation
    let mut running = T::zero();
    let main: Vec<Peak<T>> = floor_peaks
        .iter()
        .filter(|p| {
            let a = p.amplitude(x2);
            running = running.max(a);
            a >= settings.main_peak_fraction * running
        })
        .copied()
        .collect();
    if main.len() >= k {
        let last = &main[main.len() - k..];
        let amps = last.iter().map(|p| p.amplitude(x2));
        let hi = amps.clone().fold(T::neg_infinity(), T::max);
        let lo = amps.fold(T::infinity(), T::min);
        let period = mean_spacing(last).unwrap();
        let persists = t_end - last[k - 1].t <= period * T::lit(2.0);
        if persists && lo > ten * eps && (hi - lo) <= settings.amp_rel_tol * hi {
            let from = last[0].t;
            let top = last.iter().map(|p| p.value).fold(T::neg_infinity(), T::max);
            let bottom = troughs(signal, from)
                .iter()
                .map(|p| p.value)
                .fold(T::infinity(), T::min);
            let bottom = if bottom.is_finite() { bottom } else { x2 };
            return PortraitClass {
                verdict: Verdict::ConvergesToCycle,
                cycle_amplitude: Some((top - bottom) * T::lit(0.5)),
                cycle_period: Some(period),
                transient_end: Some(from),
            };
        }
    }

    // 4. decaying peak sequence
    if floor_peaks.len() >= k {
        let last = &floor_peaks[floor_peaks.len() - k..];
        let decreasing = last.windows(2).all(|w| w[1].value < w[0].value);
        if decreasing && last[k - 1].amplitude(x2) < ten * eps {
            return PortraitClass::plain(Verdict::ConvergesToEquilibrium, Some(last[k - 1].t));
        }
    }

    PortraitClass::plain(Verdict::Undetermined, None)
}

/// A verdict together with the trajectory it was drawn from.
pub type ClassifiedRun<T> = (PortraitClass<T>, Trajectory<T, ModelParams<T>>);

/// Integrates from `history`, starting with `options.t_end` and doubling the
/// horizon while the verdict is undetermined, up to
/// `settings.max_horizon`. Non-finite states classify as
/// [`Verdict::Diverged`].
pub fn classify_history<T: Scalar>(
    params: &ModelParams<T>,
    history: HistoryFunction<T>,
    options: &IntegrationOptions<T>,
    settings: &ClassifySettings<T>,
) -> Result<ClassifiedRun<T>> {
    let x2 = params.x2()?;
    let mut traj = Trajectory::start(*params, history)?;
    let mut horizon = options.t_end;
    loop {
        match traj.extend(&options.with_t_end(horizon)) {
            Ok(()) => {}
            Err(Error::NonFinite { t }) => {
                let class = PortraitClass::plain(Verdict::Diverged, Some(T::lit(t)));
                return Ok((class, traj));
            }
            Err(e) => return Err(e),
        }
        let class = classify(&traj, x2, settings);
        if class.verdict != Verdict::Undetermined || horizon >= settings.max_horizon {
            return Ok((class, traj));
        }
        horizon = (horizon * T::lit(2.0)).min(settings.max_horizon);
    }
}

/// Classifies the run started from the eigenmode history with amplitude `c`.
pub fn classify_amplitude<T: Scalar>(
    params: &ModelParams<T>,
    eig: &Eigenvalue<T>,
    c: T,
    options: &IntegrationOptions<T>,
    settings: &ClassifySettings<T>,
) -> Result<PortraitClass<T>> {
    let history = make_history(params, eig, c)?;
    Ok(classify_history(params, history, options, settings)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probe<T> {
    pub c: T,
    pub verdict: Verdict,
    /// Whether the probe needed the doubled horizon.
    pub retried: bool,
}

/// Bracket `[c_lo, c_hi]` around the basin boundary in the history
/// amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult<T> {
    pub c_lo: T,
    pub c_hi: T,
    pub verdict_lo: Verdict,
    pub verdict_hi: Verdict,
    pub probes: Vec<Probe<T>>,
}

impl<T: Scalar + Serialize> ThresholdResult<T> {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("threshold result serializes")
    }
}

fn probe<T: Scalar>(
    params: &ModelParams<T>,
    eig: &Eigenvalue<T>,
    c: T,
    options: &IntegrationOptions<T>,
    settings: &ClassifySettings<T>,
) -> Result<Probe<T>> {
    let class = classify_amplitude(params, eig, c, options, settings)?;
    if class.verdict != Verdict::Undetermined {
        return Ok(Probe {
            c,
            verdict: class.verdict,
            retried: false,
        });
    }
    let longer = ClassifySettings {
        max_horizon: settings.max_horizon * T::lit(2.0),
        ..*settings
    };
    let class = classify_amplitude(params, eig, c, options, &longer)?;
    Ok(Probe {
        c,
        verdict: class.verdict,
        retried: true,
    })
}

/// Bisects the eigenmode amplitude between a run that returns to `x₂`
/// (`c_lo`) and one that settles on a cycle (`c_hi`) until the bracket is at
/// most `tol_c` wide.
///
/// A probe that is still undetermined after one retry with a doubled
/// horizon counts as the equilibrium side. Diverging probes count as the
/// upper side.
pub fn bisect_threshold<T: Scalar>(
    params: &ModelParams<T>,
    c_lo: T,
    c_hi: T,
    tol_c: T,
    options: &IntegrationOptions<T>,
    settings: &ClassifySettings<T>,
) -> Result<ThresholdResult<T>> {
    if !(c_lo < c_hi) {
        return Err(Error::InvalidInterval(format!(
            "c_lo = {} must be below c_hi = {}",
            c_lo, c_hi
        )));
    }
    if !(tol_c > T::zero()) {
        return Err(Error::InvalidInterval(format!("tol_c = {} must be positive", tol_c)));
    }
    let eig = leading_eigenvalue(params)?;
    let mut probes = Vec::new();

    let lo = probe(params, &eig, c_lo, options, settings)?;
    probes.push(lo);
    if lo.verdict != Verdict::ConvergesToEquilibrium {
        return Err(Error::Precondition {
            endpoint: "c_lo",
            c: c_lo.as_f64(),
            verdict: lo.verdict.to_string(),
        });
    }
    let hi = probe(params, &eig, c_hi, options, settings)?;
    probes.push(hi);
    if hi.verdict != Verdict::ConvergesToCycle {
        return Err(Error::Precondition {
            endpoint: "c_hi",
            c: c_hi.as_f64(),
            verdict: hi.verdict.to_string(),
        });
    }

    let (mut a, mut b) = (c_lo, c_hi);
    let (mut verdict_lo, mut verdict_hi) = (lo.verdict, hi.verdict);
    while b - a > tol_c {
        let mid = (a + b) * T::lit(0.5);
        let p = probe(params, &eig, mid, options, settings)?;
        probes.push(p);
        match p.verdict {
            Verdict::ConvergesToCycle | Verdict::Diverged => {
                b = mid;
                verdict_hi = p.verdict;
            }
            Verdict::ConvergesToEquilibrium | Verdict::Undetermined => {
                a = mid;
                verdict_lo = Verdict::ConvergesToEquilibrium;
            }
        }
    }
    Ok(ThresholdResult {
        c_lo: a,
        c_hi: b,
        verdict_lo,
        verdict_hi,
        probes,
    })
}

/// One cell of a [`sweep`] table.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell<T> {
    pub row: usize,
    pub params: ModelParams<T>,
    pub c: T,
    pub outcome: Result<PortraitClass<T>>,
}

/// Classifies every `(params, c)` combination. Cells are independent and
/// computed on up to `jobs` threads (`0` = rayon default); the output is in
/// row-major order regardless. A failing cell keeps its error.
pub fn sweep<T: Scalar>(
    params_grid: &[ModelParams<T>],
    c_grid: &[T],
    options: &IntegrationOptions<T>,
    settings: &ClassifySettings<T>,
    jobs: usize,
) -> Vec<SweepCell<T>> {
    let cells: Vec<(usize, ModelParams<T>, T)> = params_grid
        .iter()
        .enumerate()
        .flat_map(|(row, p)| c_grid.iter().map(move |&c| (row, *p, c)))
        .collect();
    let run = || {
        cells
            .par_iter()
            .map(|&(row, params, c)| SweepCell {
                row,
                params,
                c,
                outcome: leading_eigenvalue(&params)
                    .and_then(|eig| classify_amplitude(&params, &eig, c, options, settings)),
            })
            .collect()
    };
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    }
}

fn opt<T: Scalar>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// CSV with header
/// `beta0,n,delta,k,r,c,verdict,cycle_amplitude,cycle_period,transient_end`.
/// Failed cells report the verdict `error` with empty numeric fields.
pub fn sweep_csv<T: Scalar>(cells: &[SweepCell<T>]) -> String {
    let mut out = String::from("beta0,n,delta,k,r,c,verdict,cycle_amplitude,cycle_period,transient_end\n");
    for cell in cells {
        let p = &cell.params;
        out.push_str(&format!("{},{},{},{},{},{},", p.beta0, p.n, p.delta, p.k, p.r, cell.c));
        match &cell.outcome {
            Ok(class) => out.push_str(&format!(
                "{},{},{},{}\n",
                class.verdict,
                opt(class.cycle_amplitude),
                opt(class.cycle_period),
                opt(class.transient_end)
            )),
            Err(_) => out.push_str("error,,,\n"),
        }
    }
    out
}
