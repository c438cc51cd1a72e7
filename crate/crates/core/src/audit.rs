//! Sampled verification of the geometric identities and of the constants
//! `mu`, `kappa` carried by [`Space`].
//!
//! Every check reports a scaled violation: identities use
//! `|lhs − rhs| / (1 + scale)`, inequalities use `(lhs − rhs) / (1 + scale)`,
//! where `scale` is the magnitude of the terms involved. A check passes when
//! its worst violation does not exceed its tolerance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::geometry::{pairing, Dual, Primal, Space};

pub const IDENTITY_TOLERANCE: f64 = 1e-9;
pub const INEQUALITY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    Identity,
    Inequality,
}

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub kind: CheckKind,
    pub samples: usize,
    pub max_violation: f64,
    pub tolerance: f64,
}

impl CheckResult {
    fn new(name: &'static str, kind: CheckKind) -> Self {
        let tolerance = match kind {
            CheckKind::Identity => IDENTITY_TOLERANCE,
            CheckKind::Inequality => INEQUALITY_SLACK,
        };
        Self {
            name,
            kind,
            samples: 0,
            max_violation: f64::NEG_INFINITY,
            tolerance,
        }
    }

    fn record(&mut self, violation: f64) {
        self.samples += 1;
        // NaN must count as a failure
        if violation.is_nan() {
            self.max_violation = f64::INFINITY;
        } else {
            self.max_violation = self.max_violation.max(violation);
        }
    }

    fn identity(&mut self, lhs: f64, rhs: f64, scale: f64) {
        self.record((lhs - rhs).abs() / (1.0 + scale));
    }

    fn inequality(&mut self, lhs: f64, rhs: f64, scale: f64) {
        self.record((lhs - rhs) / (1.0 + scale));
    }

    pub fn passed(&self) -> bool {
        self.max_violation <= self.tolerance
    }
}

#[derive(Debug, Clone)]
pub struct AuditReport {
    pub p: f64,
    pub dim: usize,
    pub checks: Vec<CheckResult>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Draws a vector with Gaussian coordinates, a random overall magnitude in
/// `[0.1, 10]` and roughly a fifth of its coordinates set exactly to zero.
pub fn sample_coords<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    let scale = 10f64.powf(rng.random_range(-1.0..=1.0));
    (0..dim)
        .map(|_| {
            if dim > 1 && rng.random_bool(0.2) {
                0.0
            } else {
                scale * rng.sample::<f64, _>(StandardNormal)
            }
        })
        .collect()
}

/// Runs every sampled check with `samples` draws each.
pub fn audit_space(space: &Space, samples: usize, seed: u64) -> AuditReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = space.dim();
    let mu = space.mu();
    let kappa = space.kappa();

    let mut inverse_pair = CheckResult::new("inverse_pair", CheckKind::Identity);
    let mut duality_pairing = CheckResult::new("duality_pairing", CheckKind::Identity);
    let mut duality_norm = CheckResult::new("duality_norm", CheckKind::Identity);
    let mut homogeneity = CheckResult::new("homogeneity", CheckKind::Identity);
    let mut three_point = CheckResult::new("three_point_identity", CheckKind::Identity);
    let mut two_point = CheckResult::new("two_point_identity", CheckKind::Identity);
    let mut v_phi = CheckResult::new("v_equals_phi", CheckKind::Identity);
    let mut lower = CheckResult::new("uniform_convexity_lower_bound", CheckKind::Inequality);
    let mut smooth = CheckResult::new("dual_uniform_smoothness", CheckKind::Inequality);
    let mut v_perturb = CheckResult::new("v_perturbation_bound", CheckKind::Inequality);

    for _ in 0..samples {
        let x = Primal::new(sample_coords(&mut rng, n));
        let y = Primal::new(sample_coords(&mut rng, n));
        let z = Primal::new(sample_coords(&mut rng, n));
        let u = Dual::new(sample_coords(&mut rng, n));
        let v = Dual::new(sample_coords(&mut rng, n));

        let nx = space.norm(&x);
        let ny = space.norm(&y);
        let nz = space.norm(&z);
        let jx = space.duality_map(&x);
        let jy = space.duality_map(&y);
        let jz = space.duality_map(&z);

        let back = space.inverse_duality_map(&jx);
        inverse_pair.record(space.norm(&back.sub(&x)) / (1.0 + nx));

        duality_pairing.identity(pairing(&jx, &x), nx * nx, nx * nx);
        duality_norm.identity(space.dual_norm(&jx), nx, nx);

        let t = 10f64.powf(rng.random_range(-2.0..=2.0));
        let jtx = space.duality_map(&x.scale(t));
        homogeneity.record(space.dual_norm(&jtx.sub(&jx.scale(t))) / (1.0 + t * nx));

        let sq = nx * nx + ny * ny + nz * nz;
        let phi_xy = space.lyapunov(&x, &y);
        let phi_xz = space.lyapunov(&x, &z);
        let phi_zy = space.lyapunov(&z, &y);
        let cross = pairing(&jz.sub(&jy), &x.sub(&z));
        three_point.identity(phi_xy, phi_xz + phi_zy + 2.0 * cross, sq);

        let phi_yx = space.lyapunov(&y, &x);
        two_point.identity(phi_xy + phi_yx, 2.0 * pairing(&jx.sub(&jy), &x.sub(&y)), sq);

        v_phi.identity(
            space.v_functional(&x, &u),
            space.lyapunov(&x, &space.inverse_duality_map(&u)),
            nx * nx + space.dual_norm(&u).powi(2),
        );

        let diff = space.norm(&x.sub(&y));
        lower.inequality(diff * diff / mu, phi_xy, nx * nx + ny * ny);

        let nu = space.dual_norm(&u);
        let nv = space.dual_norm(&v);
        let jstar_u = space.inverse_duality_map(&u);
        let lhs = space.dual_norm(&u.add(&v)).powi(2);
        let rhs = nu * nu + 2.0 * pairing(&v, &jstar_u) + 2.0 * kappa * kappa * nv * nv;
        smooth.inequality(lhs, rhs, nu * nu + nv * nv);

        let lhs = space.v_functional(&x, &u) + 2.0 * pairing(&v, &jstar_u.sub(&x));
        let rhs = space.v_functional(&x, &u.add(&v));
        v_perturb.inequality(lhs, rhs, nx * nx + nu * nu + nv * nv);
    }

    AuditReport {
        p: space.p(),
        dim: n,
        checks: vec![
            inverse_pair,
            duality_pairing,
            duality_norm,
            homogeneity,
            three_point,
            two_point,
            v_phi,
            lower,
            smooth,
            v_perturb,
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hilbert_space_passes_with_room() {
        let report = audit_space(&Space::hilbert(5).unwrap(), 500, 7);
        assert!(report.passed());
        for c in &report.checks {
            assert!(c.max_violation <= 1e-12, "{} {}", c.name, c.max_violation);
        }
    }

    #[test]
    fn sharp_constants_are_attained_near_the_diagonal() {
        // At y = (1, 1) in direction (1, −1) both quadratic bounds are tight to
        // second order, so the Hilbert constants would be violated.
        let space = Space::new(2, 1.25).unwrap();
        let d = 1e-3;
        let x = Primal::new(vec![1.0 + d, 1.0 - d]);
        let y = Primal::new(vec![1.0, 1.0]);
        let dist2 = space.norm(&x.sub(&y)).powi(2);
        let phi = space.lyapunov(&x, &y);
        assert!(dist2 > phi, "mu = 1 must fail for p = 1.25");
        assert!(dist2 / space.mu() <= phi);
        let ratio = phi / dist2;
        assert!((ratio - (space.p() - 1.0)).abs() < 1e-2, "{ratio}");

        let u = Dual::new(vec![1.0, 1.0]);
        let v = Dual::new(vec![d, -d]);
        let lhs = space.dual_norm(&u.add(&v)).powi(2);
        let lin = space.dual_norm(&u).powi(2) + 2.0 * pairing(&v, &space.inverse_duality_map(&u));
        let nv2 = space.dual_norm(&v).powi(2);
        assert!(lhs > lin + nv2, "2κ² = 1 must fail for q = 5");
        assert!(lhs <= lin + 2.0 * space.kappa().powi(2) * nv2);
    }

    #[test]
    fn audit_is_deterministic() {
        let s = Space::new(4, 1.5).unwrap();
        let a = audit_space(&s, 50, 11);
        let b = audit_space(&s, 50, 11);
        for (x, y) in a.checks.iter().zip(&b.checks) {
            assert_eq!(x.max_violation.to_bits(), y.max_violation.to_bits());
        }
    }
}
