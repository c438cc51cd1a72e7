//! Resolvents `(J + λB)⁻¹J` of separable `B = ∂f` in `ℓp` geometry.
//!
//! Writing `w = Jz` and `t = ‖y‖_p^{2−p}`, the inclusion `w ∈ Jy + λ∂f(y)`
//! splits into scalar inclusions
//!
//! ```text
//! t·sign(yⱼ)|yⱼ|^{p−1} + λ∂fⱼ(yⱼ) ∋ wⱼ
//! ```
//!
//! coupled only through the scalar `t`. For fixed `t` each coordinate is a
//! monotone scalar problem with a unique root, and `t ↦ ‖y(t)‖^{2−p}` is
//! nonincreasing, so the outer fixed point `t = ‖y(t)‖^{2−p}` is unique and
//! found by a bracketed regula falsi search. `y = 0` is tested first since
//! `t` degenerates there; for `p = 2` the outer loop disappears (`t ≡ 1`).

use crate::error::{invalid, Error, Result};
use crate::geometry::{lp_norm, Dual, Primal, Space};
use crate::operators::{ScalarPiece, SeparableConvex};

const MAX_BRACKET_STEPS: usize = 200;
const MAX_OUTER_STEPS: usize = 300;
const MAX_SCALAR_ITERATIONS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct ResolventResult {
    pub y: Primal,
    /// Fixed-point scale `‖y‖_p^{2−p}` (`0` when `y = 0`, `1` when `p = 2`).
    pub t_star: f64,
    pub inner_iterations: usize,
    /// [`inclusion_residual`] of the returned point.
    pub residual_norm: f64,
}

/// `J_λ^B(z) = (J + λB)⁻¹Jz`.
pub fn resolve(
    space: &Space,
    b: &SeparableConvex,
    lambda: f64,
    z: &Primal,
) -> Result<ResolventResult> {
    space.check(z, "resolvent input")?;
    if b.is_zero() {
        validate(space, b, lambda)?;
        return Ok(ResolventResult {
            y: z.clone(),
            t_star: space.norm(z).powf(2.0 - space.p()),
            inner_iterations: 0,
            residual_norm: 0.0,
        });
    }
    resolve_dual(space, b, lambda, &space.duality_map(z))
}

/// `(J + λB)⁻¹w` for a dual vector `w`; [`resolve`] is the case `w = Jz`.
///
/// The splitting solvers call this form directly on `Jx − λAx`, which
/// avoids a round trip through `J⁻¹`.
pub fn resolve_dual(
    space: &Space,
    b: &SeparableConvex,
    lambda: f64,
    w: &Dual,
) -> Result<ResolventResult> {
    let (y, t_star, inner_iterations) = resolve_point(space, b, lambda, w)?;
    let residual_norm = if b.is_zero() {
        0.0
    } else {
        inclusion_residual_dual(space, b, lambda, w, &y)
    };
    Ok(ResolventResult {
        y,
        t_star,
        inner_iterations,
        residual_norm,
    })
}

/// [`resolve_dual`] without the residual certificate: `(y, t*, inner iterations)`.
pub(crate) fn resolve_point(
    space: &Space,
    b: &SeparableConvex,
    lambda: f64,
    w: &Dual,
) -> Result<(Primal, f64, usize)> {
    validate(space, b, lambda)?;
    space.check(w, "resolvent input")?;
    let p = space.p();

    if b.is_zero() {
        return Ok((
            space.inverse_duality_map(w),
            space.dual_norm(w).powf(2.0 - p),
            0,
        ));
    }

    let zero_solves = b.pieces().iter().zip(w.iter()).all(|(piece, &wj)| {
        piece.in_domain(0.0)
            && piece
                .subdifferential(0.0)
                .map(|(lo, hi)| lambda * lo <= wj && wj <= lambda * hi)
                .unwrap_or(false)
    });
    if zero_solves {
        return Ok((Primal::zeros(space.dim()), 0.0, 0));
    }

    let mut solver = CoordinateSolver {
        pieces: b.pieces(),
        w,
        lambda,
        p,
        iterations: 0,
        buffer: vec![0.0; space.dim()],
    };

    let t_star = if space.is_hilbert() {
        1.0
    } else {
        solver.outer_fixed_point()?
    };
    solver.fill(t_star);
    Ok((Primal::new(solver.buffer), t_star, solver.iterations))
}

/// Generalized projection `Π_C(x) = argmin_{y∈C} φ(y, x)` onto a box.
///
/// This is the resolvent of `N_C` and does not depend on `λ`.
pub fn generalized_projection(space: &Space, bounds: &[(f64, f64)], x: &Primal) -> Result<Primal> {
    let b = SeparableConvex::box_indicator(bounds)?;
    Ok(resolve(space, &b, 1.0, x)?.y)
}

/// `ℓq`-norm of the coordinate distances from `(Jz − Jy)ⱼ/λ` to `∂fⱼ(yⱼ)`.
///
/// Zero iff `y = J_λ^B(z)`; `+∞` if some `yⱼ` lies outside the domain.
pub fn inclusion_residual(
    space: &Space,
    b: &SeparableConvex,
    lambda: f64,
    z: &Primal,
    y: &Primal,
) -> f64 {
    inclusion_residual_dual(space, b, lambda, &space.duality_map(z), y)
}

pub fn inclusion_residual_dual(
    space: &Space,
    b: &SeparableConvex,
    lambda: f64,
    w: &Dual,
    y: &Primal,
) -> f64 {
    let jy = space.duality_map(y);
    let targets: Vec<f64> = w
        .iter()
        .zip(jy.iter())
        .map(|(a, c)| (a - c) / lambda)
        .collect();
    let distances = b.subgradient_distances(y, &targets);
    if distances.iter().any(|d| d.is_infinite()) {
        return f64::INFINITY;
    }
    lp_norm(&distances, space.q())
}

/// Objective of the resolvent as a minimization,
/// `f(y) + ‖y‖²/(2λ) − ⟨y, Jz⟩/λ`.
pub fn resolvent_objective(
    space: &Space,
    b: &SeparableConvex,
    lambda: f64,
    z: &Primal,
    y: &Primal,
) -> f64 {
    let jz = space.duality_map(z);
    let ny = space.norm(y);
    let inner: f64 = y.iter().zip(jz.iter()).map(|(a, c)| a * c).sum();
    b.value(y) + ny * ny / (2.0 * lambda) - inner / lambda
}

fn validate(space: &Space, b: &SeparableConvex, lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid(
            "lambda",
            format!("must be positive and finite, got {lambda}"),
        ));
    }
    if b.dim() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

struct CoordinateSolver<'a> {
    pieces: &'a [ScalarPiece],
    w: &'a Dual,
    lambda: f64,
    p: f64,
    iterations: usize,
    buffer: Vec<f64>,
}

impl CoordinateSolver<'_> {
    fn fill(&mut self, t: f64) {
        for j in 0..self.pieces.len() {
            self.buffer[j] = self.scalar(self.pieces[j], t, self.w[j]);
        }
    }

    /// `t − ‖y(t)‖^{2−p}`, strictly increasing in `t`.
    fn gap(&mut self, t: f64) -> f64 {
        self.fill(t);
        t - lp_norm(&self.buffer, self.p).powf(2.0 - self.p)
    }

    fn outer_fixed_point(&mut self) -> Result<f64> {
        let q = self.p / (self.p - 1.0);
        let mut t0 = lp_norm(self.w, q).powf(2.0 - self.p);
        if !(t0 > 0.0 && t0.is_finite()) {
            t0 = 1.0;
        }
        let g0 = self.gap(t0);
        if g0 == 0.0 {
            return Ok(t0);
        }
        // h(t) = ‖y(t)‖^{2−p} is nonincreasing, so the root lies between t0
        // and h(t0); the expansion loops only run if round-off breaks that.
        let h0 = t0 - g0;
        let (mut lo, mut g_lo, mut hi, mut g_hi) = if g0 < 0.0 {
            let (mut lo, mut g_lo, mut hi) = (t0, g0, h0);
            let mut steps = 0;
            loop {
                let g = self.gap(hi);
                if g >= 0.0 {
                    break (lo, g_lo, hi, g);
                }
                (lo, g_lo) = (hi, g);
                hi *= 2.0;
                steps += 1;
                if steps >= MAX_BRACKET_STEPS || !hi.is_finite() {
                    return Err(Error::BracketFailure(steps));
                }
            }
        } else {
            let (mut lo, mut hi, mut g_hi) = (if h0 > 0.0 { h0 } else { 0.5 * t0 }, t0, g0);
            let mut steps = 0;
            loop {
                let g = self.gap(lo);
                if g < 0.0 {
                    break (lo, g, hi, g_hi);
                }
                if g == 0.0 {
                    return Ok(lo);
                }
                (hi, g_hi) = (lo, g);
                lo *= 0.5;
                steps += 1;
                if steps >= MAX_BRACKET_STEPS || lo == 0.0 {
                    return Err(Error::BracketFailure(steps));
                }
            }
        };
        if g_hi == 0.0 {
            return Ok(hi);
        }
        // Illinois variant of regula falsi: the bracket is kept, and the
        // stale endpoint's value is halved so both ends converge.
        let mut last_side = 0i8;
        for _ in 0..MAX_OUTER_STEPS {
            if hi - lo <= 4.0 * f64::EPSILON * hi {
                break;
            }
            let mut t = (lo * g_hi - hi * g_lo) / (g_hi - g_lo);
            if !(t > lo && t < hi) {
                t = 0.5 * (lo + hi);
                if t <= lo || t >= hi {
                    break;
                }
            }
            self.iterations += 1;
            let g = self.gap(t);
            if g == 0.0 {
                return Ok(t);
            }
            if g < 0.0 {
                (lo, g_lo) = (t, g);
                if last_side == -1 {
                    g_hi *= 0.5;
                }
                last_side = -1;
            } else {
                (hi, g_hi) = (t, g);
                if last_side == 1 {
                    g_lo *= 0.5;
                }
                last_side = 1;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Unique root of `t·ψ(y) + λ∂f(y) ∋ w` with `ψ(y) = sign(y)|y|^{p−1}`.
    fn scalar(&mut self, piece: ScalarPiece, t: f64, w: f64) -> f64 {
        let lambda = self.lambda;
        match piece {
            ScalarPiece::Zero => inverse_power(w / t, self.p),
            ScalarPiece::Interval { lo, hi } => inverse_power(w / t, self.p).clamp(lo, hi),
            ScalarPiece::ScaledAbs { alpha } => {
                let threshold = lambda * alpha;
                if w.abs() <= threshold {
                    0.0
                } else {
                    inverse_power((w - threshold * w.signum()) / t, self.p)
                }
            }
            ScalarPiece::Quadratic { weight } => {
                if weight == 0.0 {
                    return inverse_power(w / t, self.p);
                }
                if w == 0.0 {
                    return 0.0;
                }
                let (s, iters) = solve_shrink(t, lambda * weight, w.abs(), self.p);
                self.iterations += iters;
                w.signum() * s.powf(1.0 / (self.p - 1.0))
            }
        }
    }
}

/// `ψ⁻¹(s) = sign(s)|s|^{1/(p−1)}`
fn inverse_power(s: f64, p: f64) -> f64 {
    if p == 2.0 {
        s
    } else {
        s.signum() * s.abs().powf(1.0 / (p - 1.0))
    }
}

/// Root `s ∈ (0, w/t]` of `F(s) = t·s + c·s^r − w` with `r = 1/(p−1) ≥ 1`.
///
/// `F` is convex and increasing on `s ≥ 0`, so Newton started at the right
/// end of the bracket decreases monotonically; bisection guards the
/// bracket against round-off. Iterates until the step or the residual is at
/// round-off level.
fn solve_shrink(t: f64, c: f64, w: f64, p: f64) -> (f64, usize) {
    let r = 1.0 / (p - 1.0);
    if r == 1.0 {
        return (w / (t + c), 1);
    }
    let f = |s: f64| t * s + c * s.powf(r) - w;
    let mut lo = 0.0;
    let mut hi = w / t;
    let mut s = hi;
    let mut iterations = 0;
    while iterations < MAX_SCALAR_ITERATIONS {
        iterations += 1;
        let fs = f(s);
        if fs.abs() <= f64::EPSILON * w {
            break;
        }
        if fs > 0.0 {
            hi = s;
        } else {
            lo = s;
        }
        let slope = t + c * r * s.powf(r - 1.0);
        let mut next = s - fs / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - s).abs();
        s = next;
        if step <= 4.0 * f64::EPSILON * s || hi - lo <= 2.0 * f64::EPSILON * hi {
            break;
        }
    }
    (s, iterations)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn soft_threshold(z: f64, k: f64) -> f64 {
        z.signum() * (z.abs() - k).max(0.0)
    }

    #[test]
    fn zero_b_is_identity() {
        for p in [1.25, 1.5, 2.0] {
            let s = Space::new(3, p).unwrap();
            let z = Primal::new(vec![0.3, -2.0, 1.7]);
            let r = resolve(&s, &SeparableConvex::zero(3), 4.0, &z).unwrap();
            assert_eq!(r.y, z);
            let r = resolve_dual(&s, &SeparableConvex::zero(3), 4.0, &s.duality_map(&z)).unwrap();
            assert!(r.y.max_abs_diff(&z) < 1e-13);
        }
    }

    #[test]
    fn hilbert_soft_threshold_example() {
        let s = Space::hilbert(2).unwrap();
        let b = SeparableConvex::uniform(ScalarPiece::scaled_abs(1.0).unwrap(), 2).unwrap();
        let r = resolve(&s, &b, 1.0, &Primal::new(vec![2.0, -0.5])).unwrap();
        assert_eq!(r.y.as_slice(), &[1.0, 0.0]);
        assert!(r.residual_norm <= 1e-15);
    }

    #[test]
    fn hilbert_clamp_example_ignores_lambda() {
        let s = Space::hilbert(2).unwrap();
        let b = SeparableConvex::box_indicator(&[(0.0, 1.0), (0.0, 1.0)]).unwrap();
        let r = resolve(&s, &b, 7.0, &Primal::new(vec![2.0, -3.0])).unwrap();
        assert_eq!(r.y.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn generalized_projection_examples() {
        let h = Space::hilbert(2).unwrap();
        let y =
            generalized_projection(&h, &[(-1.0, 1.0); 2], &Primal::new(vec![3.0, 0.5])).unwrap();
        assert_eq!(y.as_slice(), &[1.0, 0.5]);

        let s = Space::new(2, 1.5).unwrap();
        let inside = Primal::new(vec![0.2, 0.7]);
        let y = generalized_projection(&s, &[(0.0, 1.0); 2], &inside).unwrap();
        assert!(y.max_abs_diff(&inside) < 1e-14);

        // grid minimization of φ(y, x) over [0,1]² at resolution 1e-3
        let x = Primal::new(vec![2.0, 2.0]);
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in 0..=1000 {
            for k in 0..=1000 {
                let cand = Primal::new(vec![i as f64 * 1e-3, k as f64 * 1e-3]);
                let v = s.lyapunov(&cand, &x);
                if v < best.0 {
                    best = (v, cand[0], cand[1]);
                }
            }
        }
        assert_eq!((best.1, best.2), (1.0, 1.0));
        let y = generalized_projection(&s, &[(0.0, 1.0); 2], &x).unwrap();
        assert!(y.max_abs_diff(&Primal::new(vec![1.0, 1.0])) < 1e-14);
    }

    #[test]
    fn residual_examples() {
        let s = Space::new(2, 1.5).unwrap();
        let z = Primal::new(vec![1.0, -0.4]);
        let zero = SeparableConvex::zero(2);
        assert_eq!(inclusion_residual(&s, &zero, 1.0, &z, &z), 0.0);
        let y = Primal::new(vec![0.5, -0.4]);
        let expected = s.dual_norm(&s.duality_map(&z).sub(&s.duality_map(&y))) / 2.0;
        let got = inclusion_residual(&s, &zero, 2.0, &z, &y);
        assert!(got > 0.0 && (got - expected).abs() < 1e-15);

        let unit = SeparableConvex::box_indicator(&[(0.0, 1.0); 2]).unwrap();
        assert_eq!(
            inclusion_residual(&s, &unit, 1.0, &z, &Primal::new(vec![2.0, 0.0])),
            f64::INFINITY
        );
    }

    #[test]
    fn lp_quadratic_and_mixed_pieces_satisfy_the_inclusion() {
        let pieces = vec![
            ScalarPiece::quadratic(3.0).unwrap(),
            ScalarPiece::scaled_abs(0.2).unwrap(),
            ScalarPiece::interval(-0.3, f64::INFINITY).unwrap(),
            ScalarPiece::Zero,
            ScalarPiece::quadratic(0.5).unwrap(),
        ];
        let b = SeparableConvex::new(pieces).unwrap();
        for p in [1.1, 1.25, 1.5, 1.75, 2.0] {
            let s = Space::new(5, p).unwrap();
            for lambda in [0.01, 0.1, 1.0, 10.0] {
                let z = Primal::new(vec![1.3, -0.05, -2.0, 0.7, -4.0]);
                let r = resolve(&s, &b, lambda, &z).unwrap();
                assert!(
                    r.residual_norm <= 1e-10,
                    "p={p} λ={lambda}: {}",
                    r.residual_norm
                );
            }
        }
    }

    #[test]
    fn zero_candidate_and_interval_away_from_zero() {
        let s = Space::new(2, 1.5).unwrap();
        let b = SeparableConvex::uniform(ScalarPiece::scaled_abs(5.0).unwrap(), 2).unwrap();
        let r = resolve(&s, &b, 1.0, &Primal::new(vec![0.3, -0.2])).unwrap();
        assert_eq!(r.y.as_slice(), &[0.0, 0.0]);
        assert_eq!(r.t_star, 0.0);

        // zero input, constraint set excluding zero
        let b = SeparableConvex::box_indicator(&[(1.0, 2.0), (-1.0, 1.0)]).unwrap();
        let r = resolve(&s, &b, 1.0, &Primal::zeros(2)).unwrap();
        assert!(r.y.max_abs_diff(&Primal::new(vec![1.0, 0.0])) < 1e-14);
        assert!(r.residual_norm <= 1e-12);
    }

    #[test]
    fn rejects_bad_requests() {
        let s = Space::new(2, 1.5).unwrap();
        let b = SeparableConvex::zero(2);
        let z = Primal::new(vec![1.0, 1.0]);
        assert!(resolve(&s, &b, 0.0, &z).is_err());
        assert!(resolve(&s, &b, f64::NAN, &z).is_err());
        assert!(matches!(
            resolve(&s, &SeparableConvex::zero(3), 1.0, &z),
            Err(Error::DimensionMismatch { .. })
        ));
        assert_eq!(
            resolve(&s, &b, 1.0, &Primal::new(vec![f64::INFINITY, 0.0])),
            Err(Error::NonFinite("resolvent input"))
        );
    }

    #[test]
    fn hilbert_matches_closed_forms() {
        let s = Space::hilbert(1).unwrap();
        for z in [-3.0, -0.5, 0.0, 0.2, 4.0] {
            let zp = Primal::new(vec![z]);
            let abs = SeparableConvex::uniform(ScalarPiece::scaled_abs(0.7).unwrap(), 1).unwrap();
            assert_eq!(
                resolve(&s, &abs, 2.0, &zp).unwrap().y[0],
                soft_threshold(z, 1.4)
            );
            let quad = SeparableConvex::uniform(ScalarPiece::quadratic(3.0).unwrap(), 1).unwrap();
            let y = resolve(&s, &quad, 2.0, &zp).unwrap().y[0];
            assert!((y - z / 7.0).abs() <= 1e-15);
        }
    }
}
