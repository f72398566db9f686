//! The resting-cell equation, its equilibria and the linearization slope.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Parameter vector `(β₀, n, δ, k, r)`.
///
/// All five entries are strictly positive and `k < 2`. Parameter sets
/// without a nontrivial equilibrium are allowed; the operations that need
/// `x₂` report [`Error::Infeasible`] for them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "RawParams<T>",
    bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct ModelParams<T> {
    pub beta0: T,
    pub n: T,
    pub delta: T,
    pub k: T,
    pub r: T,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams<T> {
    beta0: T,
    n: T,
    delta: T,
    k: T,
    r: T,
}

impl<T: Scalar> TryFrom<RawParams<T>> for ModelParams<T> {
    type Error = Error;

    fn try_from(raw: RawParams<T>) -> Result<Self> {
        ModelParams::new(raw.beta0, raw.n, raw.delta, raw.k, raw.r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumKind {
    Trivial,
    Nontrivial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium<T> {
    pub value: T,
    pub kind: EquilibriumKind,
}

/// `B₁ = β'(x₂)·x₂ + β(x₂)`, the slope of `x ↦ x·β(x)` at the nontrivial
/// equilibrium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizationCoefficient<T> {
    pub b1: T,
}

fn check_positive<T: Scalar>(name: &'static str, value: T) -> Result<()> {
    if value.is_finite() && value > T::zero() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value: value.as_f64(),
            reason: "must be finite and strictly positive",
        })
    }
}

impl<T: Scalar> ModelParams<T> {
    pub fn new(beta0: T, n: T, delta: T, k: T, r: T) -> Result<Self> {
        check_positive("beta0", beta0)?;
        check_positive("n", n)?;
        check_positive("delta", delta)?;
        check_positive("k", k)?;
        check_positive("r", r)?;
        if k >= T::lit(2.0) {
            return Err(Error::InvalidParameter {
                name: "k",
                value: k.as_f64(),
                reason: "must be below 2",
            });
        }
        Ok(Self { beta0, n, delta, k, r })
    }

    /// Same parameters with a different `(δ, r)` pair.
    pub fn with_delta_r(&self, delta: T, r: T) -> Result<Self> {
        Self::new(self.beta0, self.n, delta, self.k, r)
    }

    /// `β(x) = β₀ / (1 + xⁿ)`.
    pub fn beta(&self, x: T) -> Result<T> {
        if !(x >= T::zero()) {
            return Err(Error::Domain {
                what: "beta argument",
                value: x.as_f64(),
            });
        }
        Ok(self.beta_unchecked(x))
    }

    #[inline]
    pub(crate) fn beta_unchecked(&self, x: T) -> T {
        self.beta0 / (T::one() + x.powf(self.n))
    }

    /// Right-hand side `-[β(x)+δ]x + kβ(x_r)x_r` on the model domain `x, x_r ≥ 0`.
    pub fn rhs(&self, x_now: T, x_delayed: T) -> Result<T> {
        if !(x_now >= T::zero()) {
            return Err(Error::Domain {
                what: "current state",
                value: x_now.as_f64(),
            });
        }
        if !(x_delayed >= T::zero()) {
            return Err(Error::Domain {
                what: "delayed state",
                value: x_delayed.as_f64(),
            });
        }
        Ok(self.rhs_unchecked(x_now, x_delayed))
    }

    /// The same formula without the sign check. Integration uses this form:
    /// eigenmode histories with large amplitude dip below zero, and the
    /// formula stays finite there for integer `n`.
    #[inline]
    pub fn rhs_unchecked(&self, x_now: T, x_delayed: T) -> T {
        -(self.beta_unchecked(x_now) + self.delta) * x_now + self.k * self.beta_unchecked(x_delayed) * x_delayed
    }

    /// `(β₀/δ)(k−1) − 1`; positive iff the nontrivial equilibrium exists.
    pub fn feasibility_margin(&self) -> T {
        self.beta0 / self.delta * (self.k - T::one()) - T::one()
    }

    pub fn feasible(&self) -> bool {
        self.feasibility_margin() > T::zero()
    }

    /// `x₂ = ((β₀/δ)(k−1) − 1)^{1/n}`.
    pub fn x2(&self) -> Result<T> {
        let margin = self.feasibility_margin();
        if margin > T::zero() {
            Ok(margin.powf(self.n.recip()))
        } else {
            Err(Error::Infeasible {
                margin: margin.as_f64(),
            })
        }
    }

    /// Equilibria in ascending order; `x₂` is present iff the parameters are
    /// feasible.
    pub fn equilibria(&self) -> Vec<Equilibrium<T>> {
        let mut out = vec![Equilibrium {
            value: T::zero(),
            kind: EquilibriumKind::Trivial,
        }];
        if let Ok(value) = self.x2() {
            out.push(Equilibrium {
                value,
                kind: EquilibriumKind::Nontrivial,
            });
        }
        out
    }

    /// `β'(x) = −β₀ n x^{n−1} / (1 + xⁿ)²`.
    pub fn beta_prime(&self, x: T) -> T {
        let xn = x.powf(self.n);
        let den = T::one() + xn;
        if x == T::zero() {
            // x^{n-1} is singular at 0 for n < 1; only x·β'(x) is needed there.
            return if self.n == T::one() { -self.beta0 } else { T::zero() };
        }
        -self.beta0 * self.n * xn / x / (den * den)
    }

    pub fn b1(&self) -> Result<LinearizationCoefficient<T>> {
        let x2 = self.x2()?;
        let xn = x2.powf(self.n);
        let den = T::one() + xn;
        // β(x₂) + x₂β'(x₂), written without the x^{n-1} factor.
        let b1 = self.beta0 / den - self.beta0 * self.n * xn / (den * den);
        Ok(LinearizationCoefficient { b1 })
    }
}

/// Free-function form of [`ModelParams::beta`].
pub fn beta<T: Scalar>(x: T, params: &ModelParams<T>) -> Result<T> {
    params.beta(x)
}

/// Free-function form of [`ModelParams::rhs`].
pub fn rhs<T: Scalar>(x_now: T, x_delayed: T, params: &ModelParams<T>) -> Result<T> {
    params.rhs(x_now, x_delayed)
}

pub fn equilibria<T: Scalar>(params: &ModelParams<T>) -> Vec<Equilibrium<T>> {
    params.equilibria()
}

pub fn feasibility<T: Scalar>(params: &ModelParams<T>) -> bool {
    params.feasible()
}

pub fn b1<T: Scalar>(params: &ModelParams<T>) -> Result<LinearizationCoefficient<T>> {
    params.b1()
}
