//! The two halves of the inclusion `0 ∈ (A + B)x`.
//!
//! `A` is a single-valued Lipschitz monotone map `E → E*` given in closed
//! form ([`LipschitzMonotoneMap`]). `B = ∂f` for a coordinate-separable
//! convex `f` ([`SeparableConvex`]), which also covers normal cones of boxes
//! through interval indicators.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::geometry::{Dual, Primal};

/// Multiplicative safety margin applied to power-iteration estimates.
pub const LIPSCHITZ_INFLATION: f64 = 1.01;
const POWER_ITERATIONS: usize = 200;
const POWER_STAGNATION: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum MapKind {
    /// `x ↦ Mx + c`
    Affine {
        matrix: DMatrix<f64>,
        offset: Dual,
    },
    /// `x ↦ Mᵀ(Mx − b)`, the gradient of `½‖Mx − b‖₂²`.
    LeastSquaresGradient {
        matrix: DMatrix<f64>,
        rhs: Vec<f64>,
    },
    Zero {
        dim: usize,
    },
}

/// A monotone map together with a certified upper bound on its Lipschitz
/// constant as a map `ℓp → ℓq`.
///
/// The bound is the (inflated) spectral norm. It is valid for every
/// `1 < p ≤ 2` because `‖·‖₂ ≤ ‖·‖_p` on `E` and `‖·‖_q ≤ ‖·‖₂` on `E*`.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzMonotoneMap {
    kind: MapKind,
    lipschitz: f64,
}

impl LipschitzMonotoneMap {
    /// Monotonicity (`M + Mᵀ ⪰ 0`) is not enforced here; see
    /// [`LipschitzMonotoneMap::symmetric_part_min_eigenvalue`].
    pub fn affine(matrix: DMatrix<f64>, offset: Vec<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(invalid("matrix", "affine maps need a square matrix"));
        }
        if matrix.nrows() == 0 {
            return Err(Error::EmptySpace);
        }
        if offset.len() != matrix.nrows() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: offset.len(),
            });
        }
        if matrix.iter().chain(&offset).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("affine map"));
        }
        let kind = MapKind::Affine {
            matrix,
            offset: Dual::new(offset),
        };
        let lipschitz = certify_lipschitz(&kind);
        Ok(Self { kind, lipschitz })
    }

    pub fn least_squares_gradient(matrix: DMatrix<f64>, rhs: Vec<f64>) -> Result<Self> {
        if matrix.ncols() == 0 || matrix.nrows() == 0 {
            return Err(Error::EmptySpace);
        }
        if rhs.len() != matrix.nrows() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: rhs.len(),
            });
        }
        if matrix.iter().chain(&rhs).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("least-squares map"));
        }
        let kind = MapKind::LeastSquaresGradient { matrix, rhs };
        let lipschitz = certify_lipschitz(&kind);
        Ok(Self { kind, lipschitz })
    }

    /// The zero map. Any positive number bounds its Lipschitz constant; `1`
    /// keeps step-size caps finite.
    pub fn zero(dim: usize) -> Self {
        Self {
            kind: MapKind::Zero { dim },
            lipschitz: 1.0,
        }
    }

    /// Replaces the certified bound by a larger, user-supplied one.
    pub fn with_lipschitz_bound(mut self, bound: f64) -> Result<Self> {
        if !(bound.is_finite() && bound >= self.lipschitz) {
            return Err(invalid(
                "lipschitz",
                format!("{bound} is below the certified bound {}", self.lipschitz),
            ));
        }
        self.lipschitz = bound;
        Ok(self)
    }

    #[cfg(test)]
    pub(crate) fn with_understated_bound(mut self, bound: f64) -> Self {
        self.lipschitz = bound;
        self
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    pub fn lipschitz_bound(&self) -> f64 {
        self.lipschitz
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            MapKind::Affine { matrix, .. } => matrix.ncols(),
            MapKind::LeastSquaresGradient { matrix, .. } => matrix.ncols(),
            MapKind::Zero { dim } => *dim,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, MapKind::Zero { .. })
    }

    /// Evaluates `A(x)` after checking the dimension.
    pub fn eval(&self, x: &Primal) -> Result<Dual> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(self.apply(x))
    }

    pub(crate) fn apply(&self, x: &Primal) -> Dual {
        match &self.kind {
            MapKind::Affine { matrix, offset } => {
                let mx = matrix * DVector::from_column_slice(x);
                Dual::new(mx.iter().zip(offset.iter()).map(|(a, c)| a + c).collect())
            }
            MapKind::LeastSquaresGradient { matrix, rhs } => {
                let mut r = matrix * DVector::from_column_slice(x);
                for (ri, bi) in r.iter_mut().zip(rhs) {
                    *ri -= bi;
                }
                Dual::new(matrix.tr_mul(&r).as_slice().to_vec())
            }
            MapKind::Zero { dim } => Dual::zeros(*dim),
        }
    }

    /// Smallest eigenvalue of `(M + Mᵀ)/2` for affine maps (`MᵀM` for
    /// least-squares gradients, `0` for the zero map). Nonnegative iff the
    /// map is monotone.
    pub fn symmetric_part_min_eigenvalue(&self) -> f64 {
        let sym = match &self.kind {
            MapKind::Affine { matrix, .. } => (matrix + matrix.transpose()) * 0.5,
            MapKind::LeastSquaresGradient { matrix, .. } => matrix.tr_mul(matrix),
            MapKind::Zero { .. } => return 0.0,
        };
        SymmetricEigen::new(sym)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Largest singular value of `m` by power iteration on `MᵀM`.
///
/// Runs at most 200 iterations and stops early once the estimate changes by
/// less than `1e-12` relative. The start vector is drawn from a fixed seed.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    let n = m.ncols();
    if n == 0 || m.nrows() == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_1a11);
    let mut v = DVector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(&mut rng)));
    let norm = v.norm();
    if norm == 0.0 {
        return 0.0;
    }
    v /= norm;
    let mut estimate = 0.0_f64;
    for _ in 0..POWER_ITERATIONS {
        let mv = m * &v;
        let next = mv.norm_squared();
        let w = m.tr_mul(&mv);
        let wn = w.norm();
        if wn == 0.0 {
            return next.sqrt();
        }
        v = w / wn;
        let stagnated = (next - estimate).abs() <= POWER_STAGNATION * next;
        estimate = next;
        if stagnated {
            break;
        }
    }
    // Rayleigh quotient of the final vector, never smaller than the iterate sequence
    estimate.max((m * &v).norm_squared()).sqrt()
}

/// Certified Lipschitz bound: `1.01·σ_max(M)` for affine maps and
/// `1.01·σ_max(M)²` for least-squares gradients.
pub fn certify_lipschitz(kind: &MapKind) -> f64 {
    match kind {
        MapKind::Affine { matrix, .. } => LIPSCHITZ_INFLATION * spectral_norm(matrix),
        MapKind::LeastSquaresGradient { matrix, .. } => {
            LIPSCHITZ_INFLATION * spectral_norm(matrix).powi(2)
        }
        MapKind::Zero { .. } => 0.0,
    }
}

/// Strong monotonicity modulus `γ` (`0` for merely monotone maps).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StrongMonotonicity(f64);

impl StrongMonotonicity {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(invalid(
                "gamma",
                format!("must be finite and ≥ 0, got {gamma}"),
            ));
        }
        Ok(Self(gamma))
    }

    pub fn gamma(&self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityReport {
    /// `min ⟨Ax − Ay, x − y⟩ / ‖x − y‖₂²` over the sampled pairs.
    pub min_inner_value: f64,
    pub pass: bool,
}

/// Randomized check of `⟨Ax − Ay, x − y⟩ ≥ 0` using the Euclidean pairing.
pub fn monotonicity_probe(
    map: &LipschitzMonotoneMap,
    sample_count: usize,
    seed: u64,
) -> Result<MonotonicityReport> {
    if sample_count == 0 {
        return Err(invalid("sampleCount", "must be at least 1"));
    }
    let n = map.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gauss =
        || -> Primal { Primal::new((0..n).map(|_| StandardNormal.sample(&mut rng)).collect()) };
    let mut min_inner_value = f64::INFINITY;
    for _ in 0..sample_count {
        let x = gauss();
        let y = gauss();
        let d = x.sub(&y);
        let d2: f64 = d.iter().map(|v| v * v).sum();
        if d2 == 0.0 {
            continue;
        }
        let da = map.apply(&x).sub(&map.apply(&y));
        let inner: f64 = da.iter().zip(d.iter()).map(|(a, b)| a * b).sum();
        min_inner_value = min_inner_value.min(inner / d2);
    }
    Ok(MonotonicityReport {
        min_inner_value,
        pass: min_inner_value >= -1e-10,
    })
}

/// A proper closed convex function of one real variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarPiece {
    Zero,
    /// Indicator of `[lo, hi]`; either end may be infinite.
    Interval {
        lo: f64,
        hi: f64,
    },
    /// `α|t|`
    ScaledAbs {
        alpha: f64,
    },
    /// `½·w·t²`
    Quadratic {
        weight: f64,
    },
}

impl ScalarPiece {
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
            return Err(invalid("interval", format!("[{lo}, {hi}] is empty")));
        }
        Ok(Self::Interval { lo, hi })
    }

    pub fn scaled_abs(alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(invalid(
                "alpha",
                format!("must be finite and ≥ 0, got {alpha}"),
            ));
        }
        Ok(Self::ScaledAbs { alpha })
    }

    pub fn quadratic(weight: f64) -> Result<Self> {
        if !(weight >= 0.0 && weight.is_finite()) {
            return Err(invalid(
                "weight",
                format!("must be finite and ≥ 0, got {weight}"),
            ));
        }
        Ok(Self::Quadratic { weight })
    }

    pub fn in_domain(&self, t: f64) -> bool {
        match *self {
            Self::Interval { lo, hi } => lo <= t && t <= hi,
            _ => t.is_finite(),
        }
    }

    /// Function value, `+∞` outside the domain.
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::Interval { .. } => {
                if self.in_domain(t) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Self::ScaledAbs { alpha } => alpha * t.abs(),
            Self::Quadratic { weight } => 0.5 * weight * t * t,
        }
    }

    /// `∂f(t) = [d⁻, d⁺]`, possibly with infinite ends.
    pub fn subdifferential(&self, t: f64) -> Result<(f64, f64)> {
        if !self.in_domain(t) {
            return Err(Error::OutsideDomain { t });
        }
        Ok(match *self {
            Self::Zero => (0.0, 0.0),
            Self::Interval { lo, hi } => {
                let lower = if t == lo { f64::NEG_INFINITY } else { 0.0 };
                let upper = if t == hi { f64::INFINITY } else { 0.0 };
                (lower, upper)
            }
            Self::ScaledAbs { alpha } => {
                if t == 0.0 {
                    (-alpha, alpha)
                } else {
                    let g = alpha * t.signum();
                    (g, g)
                }
            }
            Self::Quadratic { weight } => (weight * t, weight * t),
        })
    }

    /// Distance from `v` to `∂f(t)`, `+∞` when `t` is outside the domain.
    pub fn subgradient_distance(&self, t: f64, v: f64) -> f64 {
        match self.subdifferential(t) {
            Ok((lo, hi)) => (lo - v).max(v - hi).max(0.0),
            Err(_) => f64::INFINITY,
        }
    }
}

/// `f(x) = Σ fⱼ(xⱼ)`; its subdifferential is the maximal monotone part `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableConvex {
    pieces: Vec<ScalarPiece>,
}

impl SeparableConvex {
    pub fn new(pieces: Vec<ScalarPiece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::EmptySpace);
        }
        for piece in &pieces {
            // re-run the constructors' validation for pieces built by hand
            match *piece {
                ScalarPiece::Zero => {}
                ScalarPiece::Interval { lo, hi } => {
                    ScalarPiece::interval(lo, hi)?;
                }
                ScalarPiece::ScaledAbs { alpha } => {
                    ScalarPiece::scaled_abs(alpha)?;
                }
                ScalarPiece::Quadratic { weight } => {
                    ScalarPiece::quadratic(weight)?;
                }
            }
        }
        Ok(Self { pieces })
    }

    pub fn uniform(piece: ScalarPiece, dim: usize) -> Result<Self> {
        Self::new(vec![piece; dim])
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            pieces: vec![ScalarPiece::Zero; dim],
        }
    }

    /// Indicator of the box `Π [loⱼ, hiⱼ]`, whose subdifferential is `N_C`.
    pub fn box_indicator(bounds: &[(f64, f64)]) -> Result<Self> {
        bounds
            .iter()
            .map(|&(lo, hi)| ScalarPiece::interval(lo, hi))
            .collect::<Result<Vec<_>>>()
            .and_then(Self::new)
    }

    pub fn pieces(&self) -> &[ScalarPiece] {
        &self.pieces
    }

    pub fn dim(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.iter().all(|p| *p == ScalarPiece::Zero)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.pieces.iter().zip(x).map(|(p, &t)| p.value(t)).sum()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.pieces.iter().zip(x).all(|(p, &t)| p.in_domain(t))
    }

    /// Per-coordinate distances from `v` to `∂f(x)`.
    pub fn subgradient_distances(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        self.pieces
            .iter()
            .zip(x.iter().zip(v))
            .map(|(piece, (&t, &g))| piece.subgradient_distance(t, g))
            .collect()
    }
}
