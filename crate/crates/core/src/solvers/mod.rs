//! Tseng forward-backward-forward splitting with a fixed step schedule,
//! a backtracking line search, and Halpern anchoring.
//!
//! Every variant iterates
//!
//! ```text
//! yₙ   = (J + λₙB)⁻¹(Jxₙ − λₙAxₙ)
//! wₙ   = J⁻¹(Jyₙ − λₙ(Ayₙ − Axₙ))
//! xₙ₊₁ = wₙ                                  (fixed, linesearch)
//! xₙ₊₁ = J⁻¹(αₙJx₁ + (1 − αₙ)(Jyₙ − λₙ(Ayₙ − Axₙ)))   (halpern)
//! ```
//!
//! and stops once `‖xₙ − yₙ‖_p ≤ ε`. When the problem carries a known
//! solution `x*`, each step is checked against the descent inequality
//! `φ(x*, wₙ) ≤ φ(x*, xₙ) − c·φ(yₙ, xₙ)` with `c = 1 − 2κ²λₙ²L²μ`
//! (`1 − 2κ²θ²μ` under line search).

mod config;
mod rate;
mod step;

pub use config::{AnchorSchedule, SolverConfig, StepSchedule, Variant};
pub use rate::{rate_certificate, RateReport, RATE_SLACK};
pub use step::{
    correct, forward_backward, line_search_step, tseng_step, ForwardBackward, LineSearchStep,
    TsengStep, TRIAL_BUDGET,
};

use crate::error::{invalid, Error, Result};
use crate::geometry::{pairing, Dual, Primal, Space};
use crate::problems::ProblemInstance;

/// Slack on both descent inequalities.
pub const DESCENT_SLACK: f64 = 1e-10;

/// A residual below `EXACT_HIT_ULPS·ε_mach·(1 + ‖xₙ‖_p)` is treated as
/// `xₙ = yₙ`.
pub const EXACT_HIT_ULPS: f64 = 64.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIterations,
    ExactSolutionHit,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Converged => "Converged",
            Status::MaxIterations => "MaxIterations",
            Status::ExactSolutionHit => "ExactSolutionHit",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub n: usize,
    pub lambda: f64,
    /// `‖xₙ − yₙ‖_p`
    pub residual: f64,
    /// `φ(x*, xₙ)` when a solution is known.
    pub phi_to_solution: Option<f64>,
    pub linesearch_trials: Option<usize>,
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DescentSummary {
    pub checks: usize,
    pub violations: usize,
    /// Largest excess over either inequality, slack not subtracted.
    pub worst_excess: f64,
}

impl DescentSummary {
    pub fn clean(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub status: Status,
    /// `yₙ` at the last iteration; it always lies in `dom B`.
    pub final_point: Primal,
    /// `xₙ` at the last iteration.
    pub last_iterate: Primal,
    pub iterations: usize,
    pub trace: Vec<IterationRecord>,
    pub resolvent_calls: usize,
    pub descent: DescentSummary,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        self.trace.last().map_or(f64::NAN, |r| r.residual)
    }
}

/// Runs whichever variant `config` names; Halpern anchors at `start`.
pub fn solve(
    problem: &ProblemInstance,
    config: &SolverConfig,
    start: &Primal,
) -> Result<SolveReport> {
    run(problem, config, start)
}

pub fn solve_fixed(
    problem: &ProblemInstance,
    config: &SolverConfig,
    start: &Primal,
) -> Result<SolveReport> {
    expect(config, "fixed")?;
    run(problem, config, start)
}

pub fn solve_linesearch(
    problem: &ProblemInstance,
    config: &SolverConfig,
    start: &Primal,
) -> Result<SolveReport> {
    expect(config, "linesearch")?;
    run(problem, config, start)
}

pub fn solve_halpern(
    problem: &ProblemInstance,
    config: &SolverConfig,
    x1: &Primal,
) -> Result<SolveReport> {
    expect(config, "halpern")?;
    run(problem, config, x1)
}

fn expect(config: &SolverConfig, name: &'static str) -> Result<()> {
    if config.variant.name() != name {
        return Err(invalid(
            "variant",
            format!("expected {name}, got {}", config.variant.name()),
        ));
    }
    Ok(())
}

/// `φ(x, y)` from a cached `Jy` and `‖y‖`; matches [`Space::lyapunov`].
fn phi_cached(space: &Space, x: &Primal, jy: &Dual, ny: f64) -> f64 {
    let nx = space.norm(x);
    (nx * nx - 2.0 * pairing(jy, x) + ny * ny).max(0.0)
}

struct DescentCheck<'a> {
    x_star: &'a Primal,
    strict: bool,
    summary: DescentSummary,
}

impl DescentCheck<'_> {
    /// Records `φ(x*, next) − φ(x*, x)` and the same plus `factor·φ(y, x)`.
    fn observe(
        &mut self,
        n: usize,
        phi_now: f64,
        phi_next: f64,
        phi_yx: f64,
        factor: f64,
    ) -> Result<()> {
        let plain = phi_next - phi_now;
        let quantified = plain + factor * phi_yx;
        let excess = plain.max(quantified);
        self.summary.checks += 1;
        self.summary.worst_excess = self.summary.worst_excess.max(excess);
        if excess > DESCENT_SLACK {
            self.summary.violations += 1;
            if self.strict {
                return Err(Error::DescentViolation {
                    iteration: n,
                    excess,
                });
            }
        }
        Ok(())
    }
}

fn run(problem: &ProblemInstance, config: &SolverConfig, x1: &Primal) -> Result<SolveReport> {
    let space = problem.space();
    let a = problem.a();
    let b = problem.b();
    let lipschitz = problem.lipschitz();
    config.validate(space, lipschitz)?;
    space.check(x1, "starting point")?;

    let kk_mu = 2.0 * space.kappa().powi(2) * space.mu();
    let anchor: Option<(Dual, AnchorSchedule)> = match config.variant {
        Variant::Halpern { anchor, .. } => Some((space.duality_map(x1), anchor)),
        _ => None,
    };
    let mut descent = problem.known_solution().map(|x_star| DescentCheck {
        x_star,
        strict: config.strict,
        summary: DescentSummary::default(),
    });

    let mut trace = Vec::new();
    let mut resolvent_calls = 0;
    let mut x = x1.clone();
    let mut jx = space.duality_map(&x);
    let mut nx = space.norm(&x);
    let mut n = 0;
    loop {
        n += 1;
        let ax = a.apply(&x);
        let (fb, trials, factor) = match config.variant {
            Variant::Fixed {
                a: lo,
                b: hi,
                schedule,
            }
            | Variant::Halpern {
                a: lo,
                b: hi,
                schedule,
                ..
            } => {
                let lambda = schedule.lambda(n, lo, hi);
                let fb = step::forward_backward_with(space, a, b, lambda, &x, &jx, &ax)?;
                resolvent_calls += 1;
                let factor = 1.0 - kk_mu * (lambda * lipschitz).powi(2);
                (fb, None, factor)
            }
            Variant::Linesearch { gamma, l, theta } => {
                let ls = step::line_search_from(space, a, b, (gamma, l, theta), &x, &jx, &ax)?;
                resolvent_calls += ls.trials;
                (ls.step, Some(ls.trials), 1.0 - kk_mu * theta * theta)
            }
        };
        let residual = space.norm(&x.sub(&fb.y));
        let phi_now = descent
            .as_ref()
            .map(|d| phi_cached(space, d.x_star, &jx, nx));
        let alpha = anchor.as_ref().map(|(_, s)| s.alpha(n));
        let record = IterationRecord {
            n,
            lambda: fb.lambda,
            residual,
            phi_to_solution: phi_now,
            linesearch_trials: trials,
            alpha,
        };

        let exact = residual <= EXACT_HIT_ULPS * f64::EPSILON * (1.0 + nx);
        let status = if exact {
            Some(Status::ExactSolutionHit)
        } else if residual <= config.epsilon {
            Some(Status::Converged)
        } else if n >= config.max_iterations {
            Some(Status::MaxIterations)
        } else {
            None
        };
        if let Some(status) = status {
            trace.push(record);
            return Ok(SolveReport {
                status,
                final_point: fb.y,
                last_iterate: x,
                iterations: n,
                trace,
                resolvent_calls,
                descent: descent.map(|d| d.summary).unwrap_or_default(),
            });
        }
        if (n - 1) % config.trace_every == 0 {
            trace.push(record);
        }

        // the descent inequality is about wₙ; it is xₙ₊₁ unless anchored
        let (next, w) = match &anchor {
            None => (correct(space, &x, &fb), None),
            Some((jx1, schedule)) => {
                let v = fb.corrected_dual(space);
                let alpha = schedule.alpha(n);
                let w = descent.is_some().then(|| space.inverse_duality_map(&v));
                let next = if alpha == 0.0 {
                    space.inverse_duality_map(&v)
                } else {
                    space.inverse_duality_map(&jx1.combine(alpha, &v, 1.0 - alpha))
                };
                (next, w)
            }
        };
        let j_next = space.duality_map(&next);
        let n_next = space.norm(&next);
        if let (Some(check), Some(phi)) = (descent.as_mut(), phi_now) {
            let phi_next = match &w {
                None => phi_cached(space, check.x_star, &j_next, n_next),
                Some(w) => space.lyapunov(check.x_star, w),
            };
            let phi_yx = phi_cached(space, &fb.y, &jx, nx);
            check.observe(n, phi, phi_next, phi_yx, factor)?;
        }
        x = next;
        jx = j_next;
        nx = n_next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{LipschitzMonotoneMap, SeparableConvex};
    use crate::problems::gen_strongly_monotone;
    use nalgebra::DMatrix;

    fn scalar_problem() -> ProblemInstance {
        let a = LipschitzMonotoneMap::affine(DMatrix::from_element(1, 1, 2.0), vec![-2.0]).unwrap();
        ProblemInstance::new(Space::hilbert(1).unwrap(), a, SeparableConvex::zero(1))
            .unwrap()
            .with_known_solution(Primal::new(vec![1.0]))
            .unwrap()
    }

    #[test]
    fn start_at_solution_is_exact_hit() {
        let inst = gen_strongly_monotone(1, 20, 1.5, 0.5).unwrap();
        let cap = inst.space().step_size_cap(inst.lipschitz()).unwrap();
        let cfg = SolverConfig::fixed(0.2 * cap, 0.8 * cap);
        let x_star = inst.known_solution().unwrap().clone();
        let r = solve_fixed(&inst, &cfg, &x_star).unwrap();
        assert_eq!(r.status, Status::ExactSolutionHit);
        assert_eq!(r.iterations, 1);
        assert_eq!(r.trace.len(), 1);
    }

    #[test]
    fn scalar_converges() {
        let inst = scalar_problem();
        let cfg = SolverConfig::fixed(0.1, 0.4).epsilon(1e-12).strict(true);
        let r = solve_fixed(&inst, &cfg, &Primal::new(vec![5.0])).unwrap();
        assert_ne!(r.status, Status::MaxIterations);
        assert!((r.final_point[0] - 1.0).abs() < 1e-11);
        assert!(r.descent.clean());
    }

    #[test]
    fn trace_rows_follow_trace_every() {
        let inst = scalar_problem();
        let cfg = SolverConfig::fixed(0.01, 0.02)
            .max_iterations(25)
            .trace_every(10);
        let r = solve_fixed(&inst, &cfg, &Primal::new(vec![5.0])).unwrap();
        assert_eq!(r.status, Status::MaxIterations);
        let ns: Vec<_> = r.trace.iter().map(|t| t.n).collect();
        assert_eq!(ns, vec![1, 11, 21, 25]);
    }

    #[test]
    fn wrong_variant_is_rejected() {
        let inst = scalar_problem();
        let cfg = SolverConfig::linesearch(1.0, 0.5, 0.5);
        assert!(solve_fixed(&inst, &cfg, &Primal::new(vec![0.0])).is_err());
        assert!(solve_linesearch(&inst, &cfg, &Primal::new(vec![0.0])).is_ok());
    }

    #[test]
    fn zero_map_linesearch_uses_gamma() {
        let space = Space::new(3, 1.5).unwrap();
        let b = SeparableConvex::box_indicator(&[(-1.0, 1.0); 3]).unwrap();
        let inst = ProblemInstance::new(space, LipschitzMonotoneMap::zero(3), b).unwrap();
        let cfg = SolverConfig::linesearch(0.3, 0.5, 0.4).max_iterations(5);
        let r = solve_linesearch(&inst, &cfg, &Primal::new(vec![3.0, -0.5, 0.2])).unwrap();
        assert!(r
            .trace
            .iter()
            .all(|t| t.lambda == 0.3 && t.linesearch_trials == Some(1)));
    }

    #[test]
    fn understated_lipschitz_bound_breaks_descent() {
        let skew = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let a = LipschitzMonotoneMap::affine(skew, vec![0.0, 0.0])
            .unwrap()
            .with_understated_bound(0.25);
        let inst = ProblemInstance::new(Space::hilbert(2).unwrap(), a, SeparableConvex::zero(2))
            .unwrap()
            .with_known_solution(Primal::zeros(2))
            .unwrap();
        // λ = 3 > 1/‖M‖: the corrected step expands by √(1 − λ² + λ⁴)
        let cfg = SolverConfig::fixed(3.0, 3.0).max_iterations(10);
        let x1 = Primal::new(vec![1.0, 0.0]);
        let lenient = solve_fixed(&inst, &cfg, &x1).unwrap();
        assert_eq!(lenient.descent.violations, 9);
        let strict = solve_fixed(&inst, &cfg.strict(true), &x1);
        assert!(matches!(
            strict,
            Err(Error::DescentViolation { iteration: 1, .. })
        ));
    }

    #[test]
    fn halpern_with_zero_anchor_matches_fixed_bitwise() {
        let inst = gen_strongly_monotone(4, 15, 1.25, 0.3).unwrap();
        let cap = inst.space().step_size_cap(inst.lipschitz()).unwrap();
        let x1 = Primal::new(vec![0.7; 15]);
        let fixed = SolverConfig::fixed(0.3 * cap, 0.9 * cap)
            .schedule(StepSchedule::Ramp)
            .max_iterations(200);
        let halpern = SolverConfig::halpern(0.3 * cap, 0.9 * cap)
            .schedule(StepSchedule::Ramp)
            .anchor(AnchorSchedule::Zero)
            .max_iterations(200);
        let f = solve_fixed(&inst, &fixed, &x1).unwrap();
        let h = solve_halpern(&inst, &halpern, &x1).unwrap();
        assert_eq!(f.iterations, h.iterations);
        for (a, b) in f.trace.iter().zip(&h.trace) {
            assert_eq!(a.residual.to_bits(), b.residual.to_bits());
        }
        assert_eq!(f.last_iterate, h.last_iterate);
    }
}
