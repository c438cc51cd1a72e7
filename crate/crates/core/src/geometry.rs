//! Finite-dimensional `ℓp` geometry for `1 < p ≤ 2`.
//!
//! `E = ℓp^n` is 2-uniformly convex and its dual `E* = ℓq^n` is 2-uniformly
//! smooth. The normalized duality map `J: E → E*` is single valued and its
//! inverse is the duality map of `E*`. All Lyapunov-type quantities used by
//! the splitting solvers are built from `J` and the two norms.
//!
//! The constants carried by [`Space`] are
//!
//! ```text
//! mu    = 1 / (p - 1)          (1/mu)·‖x − y‖² ≤ φ(x, y)
//! kappa = sqrt((q - 1) / 2)    ‖u + v‖² ≤ ‖u‖² + 2⟨v, J*u⟩ + 2κ²‖v‖²  on E*
//! ```
//!
//! which reduce to `mu = 1`, `kappa = 1/√2` in the Hilbert case `p = 2`.
//! In finite dimension weak and strong convergence coincide, so every
//! convergence statement in this crate is a norm statement.

use std::ops::Deref;

use crate::error::{Error, Result};

macro_rules! coordinate_vector {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name(Vec<f64>);

        impl $name {
            pub fn new(coords: Vec<f64>) -> Self {
                Self(coords)
            }

            pub fn zeros(dim: usize) -> Self {
                Self(vec![0.0; dim])
            }

            pub fn as_slice(&self) -> &[f64] {
                &self.0
            }

            pub fn as_mut_slice(&mut self) -> &mut [f64] {
                &mut self.0
            }

            pub fn into_inner(self) -> Vec<f64> {
                self.0
            }

            pub fn is_finite(&self) -> bool {
                self.0.iter().all(|v| v.is_finite())
            }

            /// `a·self + b·other`, coordinate-wise.
            pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
                debug_assert_eq!(self.len(), other.len());
                Self(
                    self.0
                        .iter()
                        .zip(&other.0)
                        .map(|(x, y)| a * x + b * y)
                        .collect(),
                )
            }

            pub fn sub(&self, other: &Self) -> Self {
                debug_assert_eq!(self.len(), other.len());
                Self(self.0.iter().zip(&other.0).map(|(x, y)| x - y).collect())
            }

            pub fn add(&self, other: &Self) -> Self {
                debug_assert_eq!(self.len(), other.len());
                Self(self.0.iter().zip(&other.0).map(|(x, y)| x + y).collect())
            }

            pub fn scale(&self, s: f64) -> Self {
                Self(self.0.iter().map(|x| s * x).collect())
            }

            /// `‖self − other‖_∞`
            pub fn max_abs_diff(&self, other: &Self) -> f64 {
                self.0
                    .iter()
                    .zip(&other.0)
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0, f64::max)
            }
        }

        impl Deref for $name {
            type Target = [f64];

            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl From<Vec<f64>> for $name {
            fn from(coords: Vec<f64>) -> Self {
                Self(coords)
            }
        }
    };
}

coordinate_vector!(
    /// An element of the primal space `E = ℓp^n`.
    Primal
);
coordinate_vector!(
    /// An element of the dual space `E* = ℓq^n`.
    Dual
);

/// The `ℓp^n` space with its dual exponent and 2-uniform constants.
///
/// `q`, `mu` and `kappa` are derived from `p` at construction and never set
/// independently.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Space {
    dim: usize,
    p: f64,
    q: f64,
    mu: f64,
    kappa: f64,
}

impl Space {
    pub fn new(dim: usize, p: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::EmptySpace);
        }
        if !(p > 1.0 && p <= 2.0) {
            return Err(Error::InvalidExponent(p));
        }
        let q = p / (p - 1.0);
        Ok(Self {
            dim,
            p,
            q,
            mu: 1.0 / (p - 1.0),
            kappa: ((q - 1.0) / 2.0).sqrt(),
        })
    }

    pub fn hilbert(dim: usize) -> Result<Self> {
        Self::new(dim, 2.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// 2-uniform convexity constant of `E`.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// 2-uniform smoothness constant of `E*`.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn is_hilbert(&self) -> bool {
        self.p == 2.0
    }

    /// Validates dimension and finiteness of a coordinate array.
    pub fn check(&self, coords: &[f64], what: &'static str) -> Result<()> {
        if coords.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: coords.len(),
            });
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(what));
        }
        Ok(())
    }

    pub fn primal(&self, coords: Vec<f64>) -> Result<Primal> {
        self.check(&coords, "primal vector")?;
        Ok(Primal(coords))
    }

    pub fn dual(&self, coords: Vec<f64>) -> Result<Dual> {
        self.check(&coords, "dual vector")?;
        Ok(Dual(coords))
    }

    pub fn norm(&self, x: &Primal) -> f64 {
        lp_norm(x, self.p)
    }

    pub fn dual_norm(&self, x: &Dual) -> f64 {
        lp_norm(x, self.q)
    }

    /// `(Jx)ⱼ = ‖x‖_p^{2−p} · sign(xⱼ)|xⱼ|^{p−1}`, with `J(0) = 0`.
    pub fn duality_map(&self, x: &Primal) -> Dual {
        Dual(normalized_duality(x, self.p))
    }

    /// `J⁻¹ = J*`, the duality map of `ℓq`.
    pub fn inverse_duality_map(&self, xstar: &Dual) -> Primal {
        Primal(normalized_duality(xstar, self.q))
    }

    /// `φ(x, y) = ‖x‖² − 2⟨x, Jy⟩ + ‖y‖²`.
    pub fn lyapunov(&self, x: &Primal, y: &Primal) -> f64 {
        let jy = self.duality_map(y);
        let nx = self.norm(x);
        let ny = self.norm(y);
        (nx * nx - 2.0 * pairing(&jy, x) + ny * ny).max(0.0)
    }

    /// `V(x, x*) = ‖x‖² − 2⟨x, x*⟩ + ‖x*‖²`, equal to `φ(x, J⁻¹x*)`.
    pub fn v_functional(&self, x: &Primal, xstar: &Dual) -> f64 {
        let nx = self.norm(x);
        let ns = self.dual_norm(xstar);
        (nx * nx - 2.0 * pairing(xstar, x) + ns * ns).max(0.0)
    }

    /// Upper end of the admissible step-size interval, `1/(√(2μ)·κ·L)`.
    ///
    /// With the constants above this is `(p − 1)/L`.
    pub fn step_size_cap(&self, lipschitz: f64) -> Result<f64> {
        if !(lipschitz > 0.0) || !lipschitz.is_finite() {
            return Err(Error::InvalidParameter {
                name: "lipschitz",
                reason: format!("must be positive and finite, got {lipschitz}"),
            });
        }
        Ok(1.0 / ((2.0 * self.mu).sqrt() * self.kappa * lipschitz))
    }

    /// Open upper bound on the line-search parameter θ, `1/(√(2μ)·κ)`.
    pub fn theta_cap(&self) -> f64 {
        1.0 / ((2.0 * self.mu).sqrt() * self.kappa)
    }
}

/// `⟨x*, x⟩ = Σ xⱼ*·xⱼ`
pub fn pairing(xstar: &Dual, x: &Primal) -> f64 {
    debug_assert_eq!(xstar.len(), x.len());
    xstar.iter().zip(x.iter()).map(|(a, b)| a * b).sum()
}

/// `(Σ|xⱼ|^r)^{1/r}`, rescaled by the largest magnitude to avoid overflow.
pub fn lp_norm(x: &[f64], r: f64) -> f64 {
    let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    if r == 2.0 {
        return scale * x.iter().map(|v| (v / scale).powi(2)).sum::<f64>().sqrt();
    }
    let sum: f64 = x.iter().map(|v| (v.abs() / scale).powf(r)).sum();
    scale * sum.powf(1.0 / r)
}

/// Duality map of `ℓr`: `‖x‖_r^{2−r} · sign(xⱼ)|xⱼ|^{r−1}`.
///
/// `|xⱼ|^{r−1}` is evaluated directly; `r > 1` keeps it finite at zero.
fn normalized_duality(x: &[f64], r: f64) -> Vec<f64> {
    if r == 2.0 {
        return x.to_vec();
    }
    let norm = lp_norm(x, r);
    if norm == 0.0 {
        return vec![0.0; x.len()];
    }
    // ‖x‖^{2−r}·|xⱼ|^{r−1} = ‖x‖ · (|xⱼ|/‖x‖)^{r−1}, which stays in range.
    x.iter()
        .map(|&v| {
            if v == 0.0 {
                0.0
            } else {
                norm * (v.abs() / norm).powf(r - 1.0) * v.signum()
            }
        })
        .collect()
}
