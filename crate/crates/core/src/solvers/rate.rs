use crate::error::{invalid, Result};
use crate::geometry::Space;

use super::IterationRecord;

/// Additive slack on the rate inequality.
pub const RATE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateReport {
    pub pass: bool,
    /// `max_n (min_{k≤n} residual²) / bound(n)` over logged rows.
    pub worst_ratio: f64,
    pub checked: usize,
}

/// Checks `min_{k≤n} ‖x_k − y_k‖² ≤ μ·φ₁/(n(1 − 2κ²b²L²μ))` at every logged
/// `n`. Only logged rows enter the running minimum, which can only make
/// the left side larger.
pub fn rate_certificate(
    space: &Space,
    lipschitz: f64,
    b: f64,
    phi1: f64,
    trace: &[IterationRecord],
) -> Result<RateReport> {
    let mu = space.mu();
    let kappa = space.kappa();
    let factor = 1.0 - 2.0 * kappa * kappa * b * b * lipschitz * lipschitz * mu;
    if !(factor > 0.0) {
        return Err(invalid(
            "b",
            format!("1 − 2κ²b²L²μ = {factor:e} must be positive"),
        ));
    }
    if !(phi1 >= 0.0) {
        return Err(invalid("phi1", format!("must be nonnegative, got {phi1}")));
    }
    let mut best = f64::INFINITY;
    let mut worst_ratio = 0.0f64;
    let mut pass = true;
    for rec in trace {
        best = best.min(rec.residual * rec.residual);
        let bound = mu * phi1 / (rec.n as f64 * factor);
        if best > bound + RATE_SLACK {
            pass = false;
        }
        let ratio = if bound > 0.0 {
            best / bound
        } else if best == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        worst_ratio = worst_ratio.max(ratio);
    }
    Ok(RateReport {
        pass,
        worst_ratio,
        checked: trace.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(n: usize, residual: f64) -> IterationRecord {
        IterationRecord {
            n,
            lambda: 0.1,
            residual,
            phi_to_solution: None,
            linesearch_trials: None,
            alpha: None,
        }
    }

    #[test]
    fn n_one_bound() {
        let s = Space::hilbert(2).unwrap();
        // μ = 1, κ² = 1/2: bound = φ₁/(1 − b²L²)
        let r = rate_certificate(&s, 1.0, 0.5, 3.0, &[row(1, 2.0)]).unwrap();
        assert!(r.pass);
        assert!((r.worst_ratio - 1.0).abs() < 1e-15);
        let r = rate_certificate(&s, 1.0, 0.5, 3.0, &[row(1, 2.01)]).unwrap();
        assert!(!r.pass);
    }

    #[test]
    fn zero_residual_passes() {
        let s = Space::new(3, 1.5).unwrap();
        let trace: Vec<_> = (1..10).map(|n| row(n, 0.0)).collect();
        let r = rate_certificate(&s, 2.0, 0.1, 0.0, &trace).unwrap();
        assert!(r.pass);
        assert_eq!(r.worst_ratio, 0.0);
    }

    #[test]
    fn inflated_trace_fails() {
        let s = Space::new(3, 1.5).unwrap();
        let trace: Vec<_> = (1..10).map(|n| row(n, 10.0)).collect();
        assert!(!rate_certificate(&s, 1.0, 0.1, 1.0, &trace).unwrap().pass);
        assert!(rate_certificate(&s, 1.0, 1.0, 1.0, &trace).is_err());
    }
}
