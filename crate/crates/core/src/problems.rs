//! Problem instances, seeded generators with planted solutions, the
//! composite-minimization reduction `A = ∇g`, `B = ∂f`, and independent
//! oracles used to certify solver output.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::geometry::{lp_norm, Primal, Space};
use crate::operators::{
    spectral_norm, LipschitzMonotoneMap, ScalarPiece, SeparableConvex, StrongMonotonicity,
};

/// Tolerance below which a planted solution is accepted by
/// [`ProblemInstance::with_known_solution`].
pub const PLANTED_TOLERANCE: f64 = 1e-8;

/// `find x with 0 ∈ (A + B)x` over a fixed `ℓp` space.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    space: Space,
    a: LipschitzMonotoneMap,
    b: SeparableConvex,
    known_solution: Option<Primal>,
    solution_unique: bool,
    strong_monotonicity: StrongMonotonicity,
    seed: u64,
}

impl ProblemInstance {
    /// Checks dimensions and that `A` is monotone (`M + Mᵀ ⪰ 0`).
    pub fn new(space: Space, a: LipschitzMonotoneMap, b: SeparableConvex) -> Result<Self> {
        for found in [a.dim(), b.dim()] {
            if found != space.dim() {
                return Err(Error::DimensionMismatch {
                    expected: space.dim(),
                    found,
                });
            }
        }
        let min_eig = a.symmetric_part_min_eigenvalue();
        if min_eig < -1e-10 * (1.0 + a.lipschitz_bound()) {
            return Err(invalid(
                "A",
                format!("not monotone: symmetric part has eigenvalue {min_eig:e}"),
            ));
        }
        Ok(Self {
            space,
            a,
            b,
            known_solution: None,
            solution_unique: false,
            strong_monotonicity: StrongMonotonicity::default(),
            seed: 0,
        })
    }

    /// Attaches a solution after certifying it with
    /// [`brute_force_inclusion_check`].
    pub fn with_known_solution(mut self, x: Primal) -> Result<Self> {
        self.space.check(&x, "known solution")?;
        let residual = brute_force_inclusion_check(&self, &x);
        if !(residual <= PLANTED_TOLERANCE) {
            return Err(invalid(
                "knownSolution",
                format!("inclusion residual {residual:e} exceeds {PLANTED_TOLERANCE:e}"),
            ));
        }
        self.known_solution = Some(x);
        Ok(self)
    }

    pub fn with_unique_solution(mut self, unique: bool) -> Self {
        self.solution_unique = unique;
        self
    }

    pub fn with_strong_monotonicity(mut self, tag: StrongMonotonicity) -> Self {
        if tag.gamma() > 0.0 {
            self.solution_unique = true;
        }
        self.strong_monotonicity = tag;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn a(&self) -> &LipschitzMonotoneMap {
        &self.a
    }

    pub fn b(&self) -> &SeparableConvex {
        &self.b
    }

    pub fn known_solution(&self) -> Option<&Primal> {
        self.known_solution.as_ref()
    }

    pub fn solution_unique(&self) -> bool {
        self.solution_unique
    }

    pub fn strong_monotonicity(&self) -> StrongMonotonicity {
        self.strong_monotonicity
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn lipschitz(&self) -> f64 {
        self.a.lipschitz_bound()
    }

    /// Same operators over a different exponent.
    pub fn in_space(&self, p: f64) -> Result<Self> {
        let mut out = self.clone();
        out.space = Space::new(self.space.dim(), p)?;
        Ok(out)
    }
}

/// `min f(x) + ½‖Mx − b‖₂²` with separable `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeMinProblem {
    pub f: SeparableConvex,
    pub matrix: DMatrix<f64>,
    pub rhs: Vec<f64>,
}

impl CompositeMinProblem {
    pub fn new(f: SeparableConvex, matrix: DMatrix<f64>, rhs: Vec<f64>) -> Result<Self> {
        if f.dim() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.ncols(),
                found: f.dim(),
            });
        }
        if rhs.len() != matrix.nrows() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: rhs.len(),
            });
        }
        Ok(Self { f, matrix, rhs })
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    /// `f(x) + ½‖Mx − b‖₂²`
    pub fn objective(&self, x: &[f64]) -> f64 {
        let r =
            &self.matrix * DVector::from_column_slice(x) - DVector::from_column_slice(&self.rhs);
        self.f.value(x) + 0.5 * r.norm_squared()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMethod {
    CoordinateDescent,
    GridPolish,
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub point: Primal,
    pub objective_value: f64,
    pub method: OracleMethod,
    pub sweeps: usize,
}

/// `A = ∇g = Mᵀ(M· − b)`, `B = ∂f`.
pub fn composite_to_inclusion(cm: &CompositeMinProblem, space: Space) -> Result<ProblemInstance> {
    let a = LipschitzMonotoneMap::least_squares_gradient(cm.matrix.clone(), cm.rhs.clone())?;
    ProblemInstance::new(space, a, cm.f.clone())
}

/// ℓq-distance from `−A(x)` to `∂f(x) = Π ∂fⱼ(xⱼ)`; zero iff `x` solves
/// the inclusion, `+∞` if `x` is outside `dom f`.
pub fn brute_force_inclusion_check(inst: &ProblemInstance, candidate: &Primal) -> f64 {
    let minus_a: Vec<f64> = inst.a.apply(candidate).iter().map(|v| -v).collect();
    let distances = inst.b.subgradient_distances(candidate, &minus_a);
    if distances.iter().any(|d| d.is_infinite()) {
        return f64::INFINITY;
    }
    lp_norm(&distances, inst.space.q())
}

/// Cyclic exact coordinate minimization of `f + ½‖Mx − b‖²`.
///
/// Euclidean only; stops once a full sweep lowers the objective by less
/// than `1e-12·(1 + |objective|)` or after `max_sweeps` sweeps.
pub fn coordinate_descent_oracle(cm: &CompositeMinProblem, max_sweeps: usize) -> OracleSolution {
    let n = cm.dim();
    let m = &cm.matrix;
    let col_sq: Vec<f64> = (0..n).map(|j| m.column(j).norm_squared()).collect();
    let mut x = vec![0.0; n];
    let b = DVector::from_column_slice(&cm.rhs);
    let mut residual = b.clone();
    let mut objective = cm.objective(&x);
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        sweeps += 1;
        for j in 0..n {
            let a = col_sq[j];
            if a == 0.0 {
                continue;
            }
            let col = m.column(j);
            let rho = col.dot(&residual) + a * x[j];
            let next = match cm.f.pieces()[j] {
                ScalarPiece::Zero => rho / a,
                ScalarPiece::ScaledAbs { alpha } => rho.signum() * (rho.abs() - alpha).max(0.0) / a,
                ScalarPiece::Interval { lo, hi } => (rho / a).clamp(lo, hi),
                ScalarPiece::Quadratic { weight } => rho / (a + weight),
            };
            let delta = next - x[j];
            if delta != 0.0 {
                residual.axpy(-delta, &col, 1.0);
                x[j] = next;
            }
        }
        // refresh the running residual to keep round-off from accumulating
        residual = &b - m * DVector::from_column_slice(&x);
        let next_objective = cm.objective(&x);
        let decrease = objective - next_objective;
        objective = next_objective;
        if decrease <= 1e-12 * (1.0 + objective.abs()) {
            break;
        }
    }
    OracleSolution {
        point: Primal::new(x),
        objective_value: objective,
        method: OracleMethod::CoordinateDescent,
        sweeps,
    }
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

fn unit_spectral(mut m: DMatrix<f64>) -> DMatrix<f64> {
    let s = spectral_norm(&m);
    if s > 0.0 {
        m /= s;
    }
    m
}

/// `x ↦ Mx + c` with `c` chosen so that `A(x*) = d` holds for the planted
/// point; `d = 0` makes `A(x*)` vanish exactly.
fn planted_affine(matrix: DMatrix<f64>, x_star: &[f64], d: &[f64]) -> Result<LipschitzMonotoneMap> {
    let mx = &matrix * DVector::from_column_slice(x_star);
    let offset = mx.iter().zip(d).map(|(v, dj)| dj - v).collect();
    LipschitzMonotoneMap::affine(matrix, offset)
}

/// Monotone variational inequality over a box with a planted interior
/// solution.
///
/// `M = w·S + (1 − w)·PᵀP` for a random skew `S` and random `P`, both
/// scaled to unit spectral norm. `x*` is drawn from the middle 80% of each
/// box edge and `c = −Mx*`, so `A(x*) = 0 ∈ N_C(x*)`.
pub fn gen_skew_vi(
    seed: u64,
    n: usize,
    p: f64,
    skew_weight: f64,
    bounds: (f64, f64),
) -> Result<ProblemInstance> {
    let space = Space::new(n, p)?;
    if !(0.0..=1.0).contains(&skew_weight) {
        return Err(invalid(
            "skewWeight",
            format!("must lie in [0, 1], got {skew_weight}"),
        ));
    }
    let (lo, hi) = bounds;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(invalid(
            "bounds",
            format!("need a finite box with lo < hi, got [{lo}, {hi}]"),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = gaussian_matrix(&mut rng, n, n);
    let skew = unit_spectral((&g - g.transpose()) * 0.5);
    let pm = unit_spectral(gaussian_matrix(&mut rng, n, n));
    let psd = pm.tr_mul(&pm);
    let matrix = skew * skew_weight + psd * (1.0 - skew_weight);

    let x_star: Vec<f64> = (0..n)
        .map(|_| lo + (hi - lo) * rng.random_range(0.1..0.9))
        .collect();
    let a = planted_affine(matrix, &x_star, &vec![0.0; n])?;
    let b = SeparableConvex::box_indicator(&vec![(lo, hi); n])?;
    // a nonsingular skew part pins the interior solution; odd skew matrices are singular
    let unique = skew_weight < 1.0 || n.is_multiple_of(2);
    ProblemInstance::new(space, a, b)?
        .with_known_solution(Primal::new(x_star))
        .map(|inst| inst.with_unique_solution(unique).with_seed(seed))
}

/// Strongly monotone affine inclusion over the box `[−1, 1]ⁿ`.
///
/// `M = PᵀP + γI` with `P` of unit spectral norm. About a quarter of the
/// planted solution's coordinates sit on a bound with a strictly
/// complementary normal-cone multiplier; the rest are interior.
pub fn gen_strongly_monotone(seed: u64, n: usize, p: f64, gamma: f64) -> Result<ProblemInstance> {
    let space = Space::new(n, p)?;
    let tag = StrongMonotonicity::new(gamma)?;
    if gamma == 0.0 {
        return Err(invalid("gamma", "must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pm = unit_spectral(gaussian_matrix(&mut rng, n, n));
    let matrix = pm.tr_mul(&pm) + DMatrix::identity(n, n) * gamma;

    let mut x_star = Vec::with_capacity(n);
    let mut d = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random();
        let multiplier = rng.random_range(0.1..1.0);
        if u < 0.125 {
            // at the lower bound −A(x*)ⱼ must lie in (−∞, 0]
            x_star.push(-1.0);
            d.push(multiplier);
        } else if u < 0.25 {
            x_star.push(1.0);
            d.push(-multiplier);
        } else {
            x_star.push(rng.random_range(-0.9..0.9));
            d.push(0.0);
        }
    }
    let a = planted_affine(matrix, &x_star, &d)?;
    let b = SeparableConvex::box_indicator(&vec![(-1.0, 1.0); n])?;
    ProblemInstance::new(space, a, b)?
        .with_known_solution(Primal::new(x_star))
        .map(|inst| inst.with_strong_monotonicity(tag).with_seed(seed))
}

/// `f = α‖·‖₁`, `M` Gaussian with unit spectral norm, `b = M·x_sparse`
/// plus Gaussian noise of standard deviation `0.01`. A quarter of
/// `x_sparse` (at least one entry) is nonzero.
pub fn gen_lasso_like(seed: u64, m: usize, n: usize, alpha: f64) -> Result<CompositeMinProblem> {
    if m == 0 || n == 0 {
        return Err(Error::EmptySpace);
    }
    let piece = ScalarPiece::scaled_abs(alpha)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let matrix = unit_spectral(gaussian_matrix(&mut rng, m, n));
    let support = (n / 4).max(1);
    let mut x_sparse = vec![0.0; n];
    for (j, v) in x_sparse.iter_mut().enumerate().take(support) {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        *v = sign * rng.random_range(0.5..2.0);
    }
    let clean = &matrix * DVector::from_column_slice(&x_sparse);
    let rhs = clean
        .iter()
        .map(|v| v + 0.01 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    CompositeMinProblem::new(SeparableConvex::uniform(piece, n)?, matrix, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::monotonicity_probe;

    #[test]
    fn scalar_strongly_monotone_example() {
        let space = Space::hilbert(1).unwrap();
        let a = LipschitzMonotoneMap::affine(DMatrix::from_element(1, 1, 2.0), vec![-2.0]).unwrap();
        let inst = ProblemInstance::new(space, a, SeparableConvex::zero(1))
            .unwrap()
            .with_known_solution(Primal::new(vec![1.0]))
            .unwrap();
        assert_eq!(
            brute_force_inclusion_check(&inst, &Primal::new(vec![1.0])),
            0.0
        );
        assert_eq!(
            brute_force_inclusion_check(&inst, &Primal::new(vec![1.5])),
            1.0
        );
    }

    #[test]
    fn rejects_non_monotone_and_bad_plants() {
        let space = Space::hilbert(2).unwrap();
        let neg = LipschitzMonotoneMap::affine(-DMatrix::identity(2, 2), vec![0.0; 2]).unwrap();
        assert!(ProblemInstance::new(space, neg, SeparableConvex::zero(2)).is_err());
        let id = LipschitzMonotoneMap::affine(DMatrix::identity(2, 2), vec![0.0; 2]).unwrap();
        let inst = ProblemInstance::new(space, id, SeparableConvex::zero(2)).unwrap();
        assert!(inst
            .clone()
            .with_known_solution(Primal::new(vec![1.0, 0.0]))
            .is_err());
        assert!(inst.with_known_solution(Primal::zeros(2)).is_ok());
        let id3 = LipschitzMonotoneMap::affine(DMatrix::identity(3, 3), vec![0.0; 3]).unwrap();
        assert!(ProblemInstance::new(space, id3, SeparableConvex::zero(2)).is_err());
    }

    #[test]
    fn planted_solutions_certify() {
        for seed in 0..5 {
            for p in [1.25, 1.5, 2.0] {
                let inst = gen_strongly_monotone(seed, 12, p, 0.5).unwrap();
                let xs = inst.known_solution().unwrap();
                assert!(brute_force_inclusion_check(&inst, xs) <= 1e-10);
                assert!(inst.solution_unique());
                let vi = gen_skew_vi(seed, 7, p, 0.6, (-2.0, 3.0)).unwrap();
                assert_eq!(
                    brute_force_inclusion_check(&vi, vi.known_solution().unwrap()),
                    0.0
                );
            }
        }
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(
            gen_strongly_monotone(9, 6, 1.5, 1.0),
            gen_strongly_monotone(9, 6, 1.5, 1.0)
        );
        assert_eq!(
            gen_skew_vi(9, 6, 1.5, 0.3, (-1.0, 1.0)),
            gen_skew_vi(9, 6, 1.5, 0.3, (-1.0, 1.0))
        );
        assert_eq!(gen_lasso_like(9, 8, 5, 0.1), gen_lasso_like(9, 8, 5, 0.1));
        assert_ne!(gen_lasso_like(9, 8, 5, 0.1), gen_lasso_like(10, 8, 5, 0.1));
    }

    #[test]
    fn skew_weight_zero_is_symmetric_psd() {
        let inst = gen_skew_vi(4, 5, 2.0, 0.0, (-1.0, 1.0)).unwrap();
        match inst.a().kind() {
            crate::operators::MapKind::Affine { matrix, .. } => {
                assert!((matrix - matrix.transpose()).amax() < 1e-15);
            }
            _ => unreachable!(),
        }
        assert!(inst.a().symmetric_part_min_eigenvalue() >= -1e-12);
        let pure = gen_skew_vi(4, 2, 2.0, 1.0, (-1.0, 1.0)).unwrap();
        assert!(pure.solution_unique());
        assert!(!gen_skew_vi(4, 3, 2.0, 1.0, (-1.0, 1.0))
            .unwrap()
            .solution_unique());
    }

    #[test]
    fn strongly_monotone_probe_sees_gamma() {
        let gamma = 0.7;
        let inst = gen_strongly_monotone(2, 10, 1.5, gamma).unwrap();
        let report = monotonicity_probe(inst.a(), 2000, 8).unwrap();
        assert!(report.min_inner_value >= gamma * (1.0 - 1e-6));
    }

    #[test]
    fn perturbed_solution_fails_check() {
        let inst = gen_strongly_monotone(3, 6, 1.5, 1.0).unwrap();
        let mut x = inst.known_solution().unwrap().clone();
        // move an interior coordinate, keeping x inside the box
        let j = x.iter().position(|v| v.abs() < 0.85).unwrap();
        x.as_mut_slice()[j] += 0.1;
        assert!(brute_force_inclusion_check(&inst, &x) > 1e-3);
    }

    #[test]
    fn zero_b_check_is_dual_norm_of_a() {
        let space = Space::new(3, 1.5).unwrap();
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, -1.0, 2.0, 0.0, 0.0, 0.0, 1.0]);
        let a = LipschitzMonotoneMap::affine(m, vec![0.5, -0.5, 1.0]).unwrap();
        let inst = ProblemInstance::new(space, a.clone(), SeparableConvex::zero(3)).unwrap();
        let x = Primal::new(vec![0.3, -0.1, 0.9]);
        let expected = space.dual_norm(&a.eval(&x).unwrap());
        assert!((brute_force_inclusion_check(&inst, &x) - expected).abs() < 1e-15);
    }

    #[test]
    fn coordinate_descent_examples() {
        // alpha = 0, M = I → b in one sweep
        let cm = CompositeMinProblem::new(
            SeparableConvex::uniform(ScalarPiece::scaled_abs(0.0).unwrap(), 3).unwrap(),
            DMatrix::identity(3, 3),
            vec![1.0, -2.0, 0.5],
        )
        .unwrap();
        let sol = coordinate_descent_oracle(&cm, 100);
        assert_eq!(sol.point.as_slice(), &[1.0, -2.0, 0.5]);
        assert!(sol.objective_value.abs() < 1e-15);

        // scalar lasso: argmin α|x| + ½(m x − b)² = soft(m b, α)/m²
        let cm = CompositeMinProblem::new(
            SeparableConvex::uniform(ScalarPiece::scaled_abs(0.3).unwrap(), 1).unwrap(),
            DMatrix::from_element(1, 1, 2.0),
            vec![1.0],
        )
        .unwrap();
        let sol = coordinate_descent_oracle(&cm, 100);
        assert!((sol.point[0] - (2.0 - 0.3) / 4.0).abs() < 1e-15);
    }

    #[test]
    fn large_alpha_gives_zero_minimizer() {
        let cm = gen_lasso_like(1, 10, 20, 0.0).unwrap();
        let mtb = cm.matrix.tr_mul(&DVector::from_column_slice(&cm.rhs));
        let cm = CompositeMinProblem::new(
            SeparableConvex::uniform(ScalarPiece::scaled_abs(mtb.amax()).unwrap(), 20).unwrap(),
            cm.matrix,
            cm.rhs,
        )
        .unwrap();
        let sol = coordinate_descent_oracle(&cm, 1000);
        assert!(sol.point.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn composite_reduction_zero_at_exact_recovery() {
        let cm = gen_lasso_like(5, 6, 4, 0.0).unwrap();
        let x_sparse_rhs = cm.rhs.clone();
        // rebuild with noise-free rhs: solve is not needed, pick any x and set b = Mx
        let x = vec![0.5, -1.0, 0.0, 2.0];
        let b = (&cm.matrix * DVector::from_column_slice(&x))
            .as_slice()
            .to_vec();
        assert_ne!(b, x_sparse_rhs);
        let clean = CompositeMinProblem::new(cm.f.clone(), cm.matrix.clone(), b).unwrap();
        let inst = composite_to_inclusion(&clean, Space::hilbert(4).unwrap()).unwrap();
        let g = inst.a().eval(&Primal::new(x)).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-14));
    }
}
