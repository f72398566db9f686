//! Characteristic roots of the linearization around `x₂` and the Hopf curve.
//!
//! Around the nontrivial equilibrium the perturbation obeys
//! `z'(t) = -(B₁+δ) z(t) + k B₁ z(t-r)`, whose characteristic function is
//! `Δ(λ) = λ + δ + B₁ − k B₁ e^{−λr}`. A Hopf point is a parameter set with a
//! root `λ = iω*`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::scalar::Scalar;

/// Leading characteristic root `μ + iω` with `ω ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue<T> {
    pub mu: T,
    pub omega: T,
}

impl<T: Scalar> Eigenvalue<T> {
    pub fn as_complex(&self) -> Complex<T> {
        Complex::new(self.mu, self.omega)
    }
}

/// Point `(δ, r*)` of the Hopf curve with its crossing frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopfPoint<T> {
    pub delta: T,
    pub r_star: T,
    pub omega_star: T,
}

/// The coefficients `(δ, B₁, k, r)` of the characteristic function.
///
/// Normally built from [`ModelParams`], but any combination may be supplied
/// directly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicEquation<T> {
    pub delta: T,
    pub b1: T,
    pub k: T,
    pub r: T,
}

impl<T: Scalar> CharacteristicEquation<T> {
    pub fn from_params(params: &ModelParams<T>) -> Result<Self> {
        Ok(Self {
            delta: params.delta,
            b1: params.b1()?.b1,
            k: params.k,
            r: params.r,
        })
    }

    /// `Δ(λ) = λ + δ + B₁ − k B₁ e^{−λr}`.
    pub fn residual(&self, lambda: Complex<T>) -> Complex<T> {
        let kb1 = self.k * self.b1;
        lambda + (self.delta + self.b1) - (-lambda * self.r).exp() * kb1
    }

    /// `Δ'(λ) = 1 + r k B₁ e^{−λr}`.
    pub fn derivative(&self, lambda: Complex<T>) -> Complex<T> {
        let rkb1 = self.r * self.k * self.b1;
        (-lambda * self.r).exp() * rkb1 + T::one()
    }
}

pub fn char_residual<T: Scalar>(lambda: Complex<T>, params: &ModelParams<T>) -> Result<Complex<T>> {
    Ok(CharacteristicEquation::from_params(params)?.residual(lambda))
}

/// Settings for the damped Newton polish of a characteristic root.
#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions<T> {
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Scalar> Default for NewtonOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::root_tol(),
            max_iter: 100,
        }
    }
}

/// Polishes a characteristic root from `guess` by damped Newton iteration.
///
/// The step is halved while it fails to decrease `|Δ|`. The returned root is
/// normalized to `ω ≥ 0`.
pub fn polish_root<T: Scalar>(
    eq: &CharacteristicEquation<T>,
    guess: Complex<T>,
    opts: NewtonOptions<T>,
) -> Result<Eigenvalue<T>> {
    let mut lambda = guess;
    let mut f = eq.residual(lambda);
    let mut norm = f.norm();
    let half = T::lit(0.5);
    for _ in 0..opts.max_iter {
        if norm < opts.tol {
            break;
        }
        let step = f / eq.derivative(lambda);
        if !(step.re.is_finite() && step.im.is_finite()) {
            break;
        }
        let mut scale = T::one();
        let mut accepted = false;
        for _ in 0..30 {
            let trial = lambda - step * scale;
            let ft = eq.residual(trial);
            let nt = ft.norm();
            if nt < norm {
                lambda = trial;
                f = ft;
                norm = nt;
                accepted = true;
                break;
            }
            scale = scale * half;
        }
        if !accepted {
            break;
        }
    }
    if norm < opts.tol {
        Ok(Eigenvalue {
            mu: lambda.re,
            omega: lambda.im.abs(),
        })
    } else {
        Err(Error::NewtonFailed {
            iterations: opts.max_iter,
            re: lambda.re.as_f64(),
            im: lambda.im.as_f64(),
            residual: norm.as_f64(),
        })
    }
}

/// Newton-polished root of the characteristic equation at `params`.
pub fn leading_root<T: Scalar>(params: &ModelParams<T>, guess: Complex<T>) -> Result<Eigenvalue<T>> {
    let eq = CharacteristicEquation::from_params(params)?;
    polish_root(&eq, guess, NewtonOptions::default())
}

/// Leading root seeded with `iω*(δ)` from the Hopf formula at the same `δ`.
pub fn leading_eigenvalue<T: Scalar>(params: &ModelParams<T>) -> Result<Eigenvalue<T>> {
    let hopf = hopf_r(params.delta, &HopfFamily::from(params))?;
    leading_root(params, Complex::new(T::zero(), hopf.omega_star))
}

/// The parameters held fixed while tracing the Hopf curve in the `(δ, r)`
/// plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopfFamily<T> {
    pub beta0: T,
    pub n: T,
    pub k: T,
}

impl<T: Scalar> From<&ModelParams<T>> for HopfFamily<T> {
    fn from(p: &ModelParams<T>) -> Self {
        Self {
            beta0: p.beta0,
            n: p.n,
            k: p.k,
        }
    }
}

impl<T: Scalar> HopfFamily<T> {
    pub fn params(&self, delta: T, r: T) -> Result<ModelParams<T>> {
        ModelParams::new(self.beta0, self.n, delta, self.k, r)
    }
}

/// Smallest positive delay at which `±iω*` are characteristic roots.
///
/// `ω* = √((kB₁)² − (δ+B₁)²)`; the delay solves both
/// `kB₁ cos(ω*r) = δ+B₁` and `kB₁ sin(ω*r) = −ω*`. The principal arccosine
/// satisfies the sine condition when `kB₁ < 0`, otherwise the reflected
/// angle `2π − θ` is used.
pub fn hopf_r<T: Scalar>(delta: T, family: &HopfFamily<T>) -> Result<HopfPoint<T>> {
    // B₁ does not depend on r.
    let params = family.params(delta, T::one())?;
    CharacteristicEquation::from_params(&params)?.hopf_point()
}

impl<T: Scalar> CharacteristicEquation<T> {
    /// Hopf point for the current `(δ, B₁, k)`; the stored `r` is ignored.
    pub fn hopf_point(&self) -> Result<HopfPoint<T>> {
        let kb1 = self.k * self.b1;
        let a = self.delta + self.b1;
        let disc = kb1 * kb1 - a * a;
        if !(disc > T::zero()) {
            return Err(Error::NoHopf {
                delta: self.delta.as_f64(),
                discriminant: disc.as_f64(),
            });
        }
        let omega = disc.sqrt();
        let mut theta = (a / kb1).max(-T::one()).min(T::one()).acos();
        if kb1 > T::zero() {
            theta = T::TAU() - theta;
        }
        Ok(HopfPoint {
            delta: self.delta,
            r_star: theta / omega,
            omega_star: omega,
        })
    }
}

/// One sample of [`hopf_curve`]; samples without a Hopf point keep their
/// error instead of being dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct HopfSample<T> {
    pub delta: T,
    pub point: Result<HopfPoint<T>>,
}

/// Samples the Hopf curve at `n_samples` uniformly spaced `δ` values
/// (inclusive endpoints).
pub fn hopf_curve<T: Scalar>(
    delta_lo: T,
    delta_hi: T,
    n_samples: usize,
    family: &HopfFamily<T>,
) -> Result<Vec<HopfSample<T>>> {
    if n_samples == 0 {
        return Err(Error::InvalidInterval("n_samples must be at least 1".into()));
    }
    if n_samples > 1 && !(delta_lo < delta_hi) {
        return Err(Error::InvalidInterval(format!(
            "delta_lo = {} must be below delta_hi = {}",
            delta_lo, delta_hi
        )));
    }
    let samples: Vec<_> = (0..n_samples)
        .map(|i| {
            let delta = if n_samples == 1 {
                delta_lo
            } else {
                let f = T::from_usize(i).unwrap() / T::from_usize(n_samples - 1).unwrap();
                delta_lo + (delta_hi - delta_lo) * f
            };
            HopfSample {
                delta,
                point: hopf_r(delta, family),
            }
        })
        .collect();
    Ok(samples)
}

/// Renders curve samples as CSV (`delta,r_star,omega_star`). Samples
/// without a Hopf point leave the last two fields empty.
pub fn hopf_curve_csv<T: Scalar>(samples: &[HopfSample<T>]) -> String {
    let mut out = String::from("delta,r_star,omega_star\n");
    for s in samples {
        match &s.point {
            Ok(p) => out.push_str(&format!("{},{},{}\n", p.delta, p.r_star, p.omega_star)),
            Err(_) => out.push_str(&format!("{},,\n", s.delta)),
        }
    }
    out
}
