use crate::error::{Error, Result};
use crate::geometry::{Dual, Primal, Space};
use crate::operators::{LipschitzMonotoneMap, SeparableConvex};
use crate::resolvent::resolve_point;

/// Budget for the backtracking search; reaching it means `A` is not
/// Lipschitz on the visited region.
pub const TRIAL_BUDGET: usize = 10_000;

/// Forward-backward point `yₙ` together with the map values needed for the
/// correction.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardBackward {
    pub lambda: f64,
    pub y: Primal,
    pub ax: Dual,
    pub ay: Dual,
    pub inner_iterations: usize,
}

impl ForwardBackward {
    /// `Jy − λ(Ay − Ax)`
    pub fn corrected_dual(&self, space: &Space) -> Dual {
        let jy = space.duality_map(&self.y);
        let delta = self.ay.sub(&self.ax);
        jy.combine(1.0, &delta, -self.lambda)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsengStep {
    pub y: Primal,
    pub x_next: Primal,
}

/// `y = (J + λB)⁻¹(Jx − λAx)` with the values of `A` at both points.
pub fn forward_backward(
    space: &Space,
    a: &LipschitzMonotoneMap,
    b: &SeparableConvex,
    lambda: f64,
    x: &Primal,
    ax: &Dual,
) -> Result<ForwardBackward> {
    forward_backward_with(space, a, b, lambda, x, &space.duality_map(x), ax)
}

pub(crate) fn forward_backward_with(
    space: &Space,
    a: &LipschitzMonotoneMap,
    b: &SeparableConvex,
    lambda: f64,
    x: &Primal,
    jx: &Dual,
    ax: &Dual,
) -> Result<ForwardBackward> {
    let w = jx.combine(1.0, ax, -lambda);
    let (y, _, inner_iterations) = resolve_point(space, b, lambda, &w)?;
    let ay = if y == *x { ax.clone() } else { a.apply(&y) };
    Ok(ForwardBackward {
        lambda,
        y,
        ax: ax.clone(),
        ay,
        inner_iterations,
    })
}

/// `xNext = J⁻¹(Jy − λ(Ay − Ax))`, or `x` itself when `y = x`.
pub fn correct(space: &Space, x: &Primal, fb: &ForwardBackward) -> Primal {
    if fb.y == *x {
        return x.clone();
    }
    space.inverse_duality_map(&fb.corrected_dual(space))
}

/// One forward-backward-forward step with fixed `λ`.
pub fn tseng_step(
    space: &Space,
    a: &LipschitzMonotoneMap,
    b: &SeparableConvex,
    lambda: f64,
    x: &Primal,
) -> Result<TsengStep> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(crate::error::invalid(
            "lambda",
            format!("must be positive, got {lambda}"),
        ));
    }
    let ax = a.eval(x)?;
    space.check(x, "iterate")?;
    let fb = forward_backward(space, a, b, lambda, x, &ax)?;
    let x_next = correct(space, x, &fb);
    Ok(TsengStep { y: fb.y, x_next })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchStep {
    pub step: ForwardBackward,
    pub trials: usize,
}

/// Largest `λ ∈ {γ, γl, γl², …}` with `λ‖Ax − Ay‖_q ≤ θ‖x − y‖_p`; the
/// resolvent is recomputed for every trial.
pub fn line_search_step(
    space: &Space,
    a: &LipschitzMonotoneMap,
    b: &SeparableConvex,
    gamma: f64,
    l: f64,
    theta: f64,
    x: &Primal,
) -> Result<LineSearchStep> {
    let ax = a.eval(x)?;
    space.check(x, "iterate")?;
    line_search_from(
        space,
        a,
        b,
        (gamma, l, theta),
        x,
        &space.duality_map(x),
        &ax,
    )
}

pub(crate) fn line_search_from(
    space: &Space,
    a: &LipschitzMonotoneMap,
    b: &SeparableConvex,
    (gamma, l, theta): (f64, f64, f64),
    x: &Primal,
    jx: &Dual,
    ax: &Dual,
) -> Result<LineSearchStep> {
    let mut lambda = gamma;
    for trials in 1..=TRIAL_BUDGET {
        let fb = forward_backward_with(space, a, b, lambda, x, jx, ax)?;
        let lhs = lambda * space.dual_norm(&fb.ax.sub(&fb.ay));
        let rhs = theta * space.norm(&x.sub(&fb.y));
        if lhs <= rhs {
            return Ok(LineSearchStep { step: fb, trials });
        }
        lambda *= l;
    }
    Err(Error::TrialBudgetExceeded(TRIAL_BUDGET))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn hilbert_skew_example() {
        let space = Space::hilbert(2).unwrap();
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let a = LipschitzMonotoneMap::affine(m, vec![0.0, 0.0]).unwrap();
        let step = tseng_step(
            &space,
            &a,
            &SeparableConvex::zero(2),
            0.1,
            &Primal::new(vec![1.0, 0.0]),
        )
        .unwrap();
        // Ax = (0, −1), y = x − 0.1·Ax, Ay − Ax = (0.1, 0)
        assert!((step.y[0] - 1.0).abs() < 1e-15 && (step.y[1] - 0.1).abs() < 1e-15);
        assert!((step.x_next[0] - 0.99).abs() < 1e-15);
        assert!((step.x_next[1] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn zero_map_is_proximal_point() {
        let space = Space::new(3, 1.5).unwrap();
        let b = SeparableConvex::box_indicator(&[(-0.5, 0.5); 3]).unwrap();
        let x = Primal::new(vec![1.0, -0.2, 0.3]);
        let step = tseng_step(&space, &LipschitzMonotoneMap::zero(3), &b, 0.7, &x).unwrap();
        let direct = crate::resolvent::resolve(&space, &b, 0.7, &x).unwrap();
        assert!(step.y.max_abs_diff(&direct.y) < 1e-14);
        assert!(step.x_next.max_abs_diff(&step.y) < 1e-14);
    }

    #[test]
    fn fixed_point_is_kept() {
        let space = Space::new(2, 1.5).unwrap();
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]);
        let a = LipschitzMonotoneMap::affine(m, vec![-2.0, 0.0]).unwrap();
        let x = Primal::new(vec![1.0, 0.0]);
        let step = tseng_step(&space, &a, &SeparableConvex::zero(2), 0.1, &x).unwrap();
        assert!(step.y.max_abs_diff(&x) < 1e-15);
        let ls =
            line_search_step(&space, &a, &SeparableConvex::zero(2), 1.0, 0.5, 0.3, &x).unwrap();
        assert_eq!(ls.trials, 1);
    }

    #[test]
    fn line_search_bracket() {
        let space = Space::hilbert(3).unwrap();
        let m = DMatrix::from_row_slice(3, 3, &[0.0, 10.0, 0.0, -10.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let a = LipschitzMonotoneMap::affine(m, vec![1.0, -1.0, 0.5]).unwrap();
        let x = Primal::new(vec![0.3, 2.0, -1.0]);
        let ls =
            line_search_step(&space, &a, &SeparableConvex::zero(3), 1.0, 0.5, 0.9, &x).unwrap();
        let lambda = ls.step.lambda;
        assert!((0.045..=1.0).contains(&lambda), "{lambda}");
        assert!(ls.trials > 1);
    }

    #[test]
    fn constant_map_accepts_first_trial() {
        let space = Space::new(2, 1.25).unwrap();
        let a = LipschitzMonotoneMap::affine(DMatrix::zeros(2, 2), vec![1.0, -3.0]).unwrap();
        let b = SeparableConvex::box_indicator(&[(-1.0, 1.0); 2]).unwrap();
        let x = Primal::new(vec![0.2, 0.4]);
        let ls = line_search_step(&space, &a, &b, 2.0, 0.5, 0.1, &x).unwrap();
        assert_eq!((ls.trials, ls.step.lambda), (1, 2.0));
    }
}
