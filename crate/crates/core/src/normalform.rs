//! Radial dynamics of the planar generalized Hopf (Bautin) normal form
//! `u' = (b₁ + i)u + b₂u|u|² + s·u|u|⁴`.
//!
//! In polar coordinates the angle decouples (`θ' = 1`) and the radius obeys
//! `ρ' = ρ(b₁ + b₂ρ² + sρ⁴)`. Limit cycles are the positive roots of the
//! quadratic `b₁ + b₂q + sq² = 0` in `q = ρ²`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Sign of the quintic coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuinticSign {
    Plus,
    Minus,
}

impl QuinticSign {
    pub fn value<T: Scalar>(self) -> T {
        match self {
            QuinticSign::Plus => T::one(),
            QuinticSign::Minus => -T::one(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalFormParams<T> {
    pub b1: T,
    pub b2: T,
    pub s: QuinticSign,
}

impl<T: Scalar> NormalFormParams<T> {
    /// The case with a negative quintic coefficient.
    pub fn negative(b1: T, b2: T) -> Self {
        Self {
            b1,
            b2,
            s: QuinticSign::Minus,
        }
    }

    /// `b₁ + b₂q + sq²` at `q = ρ²`.
    pub fn radial_polynomial(&self, q: T) -> T {
        self.b1 + q * (self.b2 + self.s.value::<T>() * q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleStability {
    Stable,
    Unstable,
    /// Double root on the fold: repelling inside, attracting outside when
    /// `s = −1`.
    SemiStable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cycle<T> {
    pub radius: T,
    pub stability: CycleStability,
}

/// Limit cycles ordered by increasing radius.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CycleSet<T> {
    pub cycles: Vec<Cycle<T>>,
}

impl<T: Scalar> CycleSet<T> {
    pub fn radii(&self) -> Vec<T> {
        self.cycles.iter().map(|c| c.radius).collect()
    }

    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }
}

/// `ρ(b₁ + b₂ρ² + sρ⁴)`.
pub fn radial_rhs<T: Scalar>(rho: T, p: &NormalFormParams<T>) -> T {
    rho * p.radial_polynomial(rho * rho)
}

/// `d/dρ [ρ' ]` at a root of the radial polynomial: `2q(b₂ + 2sq)`.
fn root_slope<T: Scalar>(q: T, p: &NormalFormParams<T>) -> T {
    let two = T::lit(2.0);
    two * q * (p.b2 + two * p.s.value::<T>() * q)
}

/// Positive limit-cycle radii with their stability.
pub fn cycle_radii<T: Scalar>(p: &NormalFormParams<T>) -> CycleSet<T> {
    let s = p.s.value::<T>();
    let two = T::lit(2.0);
    let disc = p.b2 * p.b2 - T::lit(4.0) * s * p.b1;
    let mut qs: Vec<T> = Vec::with_capacity(2);
    if disc == T::zero() {
        qs.push(-p.b2 / (two * s));
    } else if disc > T::zero() {
        // cancellation-free pair of roots
        let sq = disc.sqrt();
        let big = -(p.b2 + p.b2.signum() * sq) / (two * s);
        qs.push(big);
        if big != T::zero() {
            qs.push(p.b1 / (s * big));
        } else {
            qs.push(-p.b2 / s);
        }
    }
    let mut cycles: Vec<Cycle<T>> = qs
        .into_iter()
        .filter(|&q| q > T::zero() && q.is_finite())
        .map(|q| {
            let stability = if disc == T::zero() {
                CycleStability::SemiStable
            } else if root_slope(q, p) < T::zero() {
                CycleStability::Stable
            } else {
                CycleStability::Unstable
            };
            Cycle {
                radius: q.sqrt(),
                stability,
            }
        })
        .collect();
    cycles.sort_by(|a, b| a.radius.partial_cmp(&b.radius).unwrap());
    cycles.dedup_by(|a, b| a.radius == b.radius);
    CycleSet { cycles }
}

/// Regions of the `(b₁, b₂)` plane for `s = −1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Zone {
    /// Stable focus, no cycles.
    Zone1,
    /// One stable cycle around an unstable focus.
    Zone2,
    /// Unstable cycle inside a stable cycle around a stable focus.
    Zone3,
    /// `b₁ = 0`.
    OnHopfAxis,
    /// `b₁ < 0`, `b₂ > 0`, `b₂² + 4b₁ = 0`: the two cycles coincide.
    OnFoldT,
}

impl Zone {
    pub fn label(self) -> &'static str {
        match self {
            Zone::Zone1 => "zone1",
            Zone::Zone2 => "zone2",
            Zone::Zone3 => "zone3",
            Zone::OnHopfAxis => "hopf_axis",
            Zone::OnFoldT => "fold_t",
        }
    }
}

pub fn region_classify<T: Scalar>(p: &NormalFormParams<T>) -> Result<Zone> {
    if p.s != QuinticSign::Minus {
        return Err(Error::Unsupported("region classification is defined for s = -1 only"));
    }
    let (b1, b2) = (p.b1, p.b2);
    if b1 == T::zero() {
        return Ok(Zone::OnHopfAxis);
    }
    if b1 > T::zero() {
        return Ok(Zone::Zone2);
    }
    let fold = b2 * b2 + T::lit(4.0) * b1;
    if b2 > T::zero() && fold == T::zero() {
        Ok(Zone::OnFoldT)
    } else if b2 > T::zero() && fold > T::zero() {
        Ok(Zone::Zone3)
    } else {
        Ok(Zone::Zone1)
    }
}

/// Classical fourth-order Runge–Kutta integration of the radial equation
/// with step `1e-3`, returning `ρ(t_end)`.
pub fn integrate_polar<T: Scalar>(p: &NormalFormParams<T>, rho0: T, t_end: T) -> Result<T> {
    if !(rho0 > T::zero()) {
        return Err(Error::Domain {
            what: "initial radius",
            value: rho0.as_f64(),
        });
    }
    let h = T::lit(1e-3);
    let steps = (t_end / h).round().to_usize().unwrap_or(0);
    let half = T::lit(0.5);
    let sixth = T::lit(1.0 / 6.0);
    let two = T::lit(2.0);
    let mut rho = rho0;
    for _ in 0..steps {
        let k1 = radial_rhs(rho, p);
        let k2 = radial_rhs(rho + half * h * k1, p);
        let k3 = radial_rhs(rho + half * h * k2, p);
        let k4 = radial_rhs(rho + h * k3, p);
        rho = rho + h * sixth * (k1 + two * k2 + two * k3 + k4);
        if !rho.is_finite() || rho.abs() > T::lit(1e12) {
            return Err(Error::Diverged);
        }
    }
    Ok(rho)
}

/// Raster of [`region_classify`] over a rectangle as CSV `b1,b2,zone`
/// (row-major in `b2`, then `b1`).
pub fn zones_csv<T: Scalar>(b1_range: (T, T), b2_range: (T, T), n_b1: usize, n_b2: usize) -> Result<String> {
    let grid = zone_grid(b1_range, b2_range, n_b1, n_b2)?;
    let mut out = String::from("b1,b2,zone\n");
    for (b1, b2, z) in grid {
        out.push_str(&format!("{},{},{}\n", b1, b2, z.label()));
    }
    Ok(out)
}

/// Grid points with their zone; both axes inclusive of the endpoints.
pub fn zone_grid<T: Scalar>(b1_range: (T, T), b2_range: (T, T), n_b1: usize, n_b2: usize) -> Result<Vec<(T, T, Zone)>> {
    if n_b1 < 2 || n_b2 < 2 {
        return Err(Error::InvalidInterval(
            "zone raster needs at least 2 points per axis".into(),
        ));
    }
    if !(b1_range.0 < b1_range.1 && b2_range.0 < b2_range.1) {
        return Err(Error::InvalidInterval("zone raster ranges must be increasing".into()));
    }
    let at =
        |r: (T, T), i: usize, n: usize| r.0 + (r.1 - r.0) * T::from_usize(i).unwrap() / T::from_usize(n - 1).unwrap();
    let mut out = Vec::with_capacity(n_b1 * n_b2);
    for j in 0..n_b2 {
        let b2 = at(b2_range, j, n_b2);
        for i in 0..n_b1 {
            let b1 = at(b1_range, i, n_b1);
            out.push((b1, b2, region_classify(&NormalFormParams::negative(b1, b2))?));
        }
    }
    Ok(out)
}
