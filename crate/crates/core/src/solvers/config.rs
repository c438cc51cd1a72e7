use crate::error::{invalid, Result};
use crate::geometry::Space;

/// Step-size rule for the fixed-step and anchored variants, always inside
/// `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum StepSchedule {
    /// `λₙ = (a + b)/2`
    #[default]
    Constant,
    /// `λₙ = a + n/(n + 1)·(b − a)`
    Ramp,
}

impl StepSchedule {
    pub fn lambda(&self, n: usize, a: f64, b: f64) -> f64 {
        match self {
            StepSchedule::Constant => 0.5 * (a + b),
            StepSchedule::Ramp => {
                let n = n as f64;
                a + n / (n + 1.0) * (b - a)
            }
        }
    }
}

/// Anchor weights `αₙ` of the Halpern recursion.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum AnchorSchedule {
    /// `αₙ = 1/(n + 1)`
    #[default]
    Harmonic,
    /// `αₙ = (n + 1)^(−e)` with `0 < e ≤ 1`.
    Power(f64),
    /// `αₙ = 0`; reproduces the fixed-step iterates.
    Zero,
}

impl AnchorSchedule {
    pub fn alpha(&self, n: usize) -> f64 {
        let m = n as f64 + 1.0;
        match *self {
            AnchorSchedule::Harmonic => 1.0 / m,
            AnchorSchedule::Power(e) => m.powf(-e),
            AnchorSchedule::Zero => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    Fixed {
        a: f64,
        b: f64,
        schedule: StepSchedule,
    },
    Linesearch {
        gamma: f64,
        l: f64,
        theta: f64,
    },
    Halpern {
        a: f64,
        b: f64,
        schedule: StepSchedule,
        anchor: AnchorSchedule,
    },
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Fixed { .. } => "fixed",
            Variant::Linesearch { .. } => "linesearch",
            Variant::Halpern { .. } => "halpern",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub variant: Variant,
    /// Stop once `‖xₙ − yₙ‖_p ≤ epsilon`.
    pub epsilon: f64,
    pub max_iterations: usize,
    pub trace_every: usize,
    /// Turn descent violations into errors instead of counting them.
    pub strict: bool,
}

impl SolverConfig {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            epsilon: 1e-6,
            max_iterations: 100_000,
            trace_every: 1,
            strict: false,
        }
    }

    pub fn fixed(a: f64, b: f64) -> Self {
        Self::new(Variant::Fixed {
            a,
            b,
            schedule: StepSchedule::Constant,
        })
    }

    pub fn linesearch(gamma: f64, l: f64, theta: f64) -> Self {
        Self::new(Variant::Linesearch { gamma, l, theta })
    }

    pub fn halpern(a: f64, b: f64) -> Self {
        Self::new(Variant::Halpern {
            a,
            b,
            schedule: StepSchedule::Constant,
            anchor: AnchorSchedule::Harmonic,
        })
    }

    pub fn epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn trace_every(mut self, trace_every: usize) -> Self {
        self.trace_every = trace_every;
        self
    }

    pub fn strict(mut self, strict: bool) -> Self {
        self.strict = strict;
        self
    }

    /// Replaces the step schedule of a fixed-step or Halpern config.
    pub fn schedule(mut self, schedule: StepSchedule) -> Self {
        match &mut self.variant {
            Variant::Fixed { schedule: s, .. } | Variant::Halpern { schedule: s, .. } => {
                *s = schedule
            }
            Variant::Linesearch { .. } => {}
        }
        self
    }

    /// Replaces the anchor schedule of a Halpern config.
    pub fn anchor(mut self, anchor: AnchorSchedule) -> Self {
        if let Variant::Halpern { anchor: s, .. } = &mut self.variant {
            *s = anchor;
        }
        self
    }

    /// Checks every parameter against the space and the Lipschitz bound of `A`.
    pub fn validate(&self, space: &Space, lipschitz: f64) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(invalid(
                "epsilon",
                format!("must be positive, got {}", self.epsilon),
            ));
        }
        if self.max_iterations == 0 {
            return Err(invalid("maxIterations", "must be at least 1"));
        }
        if self.trace_every == 0 {
            return Err(invalid("traceEvery", "must be at least 1"));
        }
        match self.variant {
            Variant::Fixed { a, b, .. } | Variant::Halpern { a, b, .. } => {
                let cap = space.step_size_cap(lipschitz)?;
                if !(a > 0.0 && a <= b && b < cap) {
                    return Err(invalid(
                        "a, b",
                        format!("need 0 < a ≤ b < {cap:e}, got a = {a}, b = {b}"),
                    ));
                }
            }
            Variant::Linesearch { gamma, l, theta } => {
                if !(gamma > 0.0 && gamma.is_finite()) {
                    return Err(invalid("gamma", format!("must be positive, got {gamma}")));
                }
                if !(l > 0.0 && l < 1.0) {
                    return Err(invalid("l", format!("must lie in (0, 1), got {l}")));
                }
                let cap = space.theta_cap();
                if !(theta > 0.0 && theta < cap) {
                    return Err(invalid(
                        "theta",
                        format!("must lie in (0, {cap}), got {theta}"),
                    ));
                }
            }
        }
        if let Variant::Halpern {
            anchor: AnchorSchedule::Power(e),
            ..
        } = self.variant
        {
            if !(e > 0.0 && e <= 1.0) {
                return Err(invalid(
                    "anchor",
                    format!("power must lie in (0, 1], got {e}"),
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedules_stay_in_range() {
        for n in 1..50 {
            let ramp = StepSchedule::Ramp.lambda(n, 0.1, 0.3);
            assert!((0.1..0.3).contains(&ramp));
        }
        assert_eq!(StepSchedule::Constant.lambda(7, 0.1, 0.3), 0.2);
        assert_eq!(StepSchedule::Ramp.lambda(1, 0.0, 1.0), 0.5);
        assert_eq!(AnchorSchedule::Harmonic.alpha(1), 0.5);
        assert_eq!(AnchorSchedule::Power(0.5).alpha(3), 0.5);
        assert_eq!(AnchorSchedule::Zero.alpha(3), 0.0);
    }

    #[test]
    fn validation_catches_each_field() {
        let s = Space::new(2, 1.5).unwrap();
        let cap = s.step_size_cap(1.0).unwrap();
        assert!(SolverConfig::fixed(0.1 * cap, 0.5 * cap)
            .validate(&s, 1.0)
            .is_ok());
        assert!(SolverConfig::fixed(0.1 * cap, cap)
            .validate(&s, 1.0)
            .is_err());
        assert!(SolverConfig::fixed(0.0, 0.5 * cap)
            .validate(&s, 1.0)
            .is_err());
        assert!(SolverConfig::fixed(0.4 * cap, 0.3 * cap)
            .validate(&s, 1.0)
            .is_err());
        let ok = SolverConfig::linesearch(1.0, 0.5, 0.4);
        assert!(ok.validate(&s, 1.0).is_ok());
        assert!(SolverConfig::linesearch(1.0, 0.5, s.theta_cap())
            .validate(&s, 1.0)
            .is_err());
        assert!(SolverConfig::linesearch(1.0, 1.0, 0.4)
            .validate(&s, 1.0)
            .is_err());
        assert!(ok.max_iterations(0).validate(&s, 1.0).is_err());
        assert!(ok.trace_every(0).validate(&s, 1.0).is_err());
        assert!(ok.epsilon(0.0).validate(&s, 1.0).is_err());
        let h = SolverConfig::halpern(0.1 * cap, 0.2 * cap).anchor(AnchorSchedule::Power(1.5));
        assert!(h.validate(&s, 1.0).is_err());
    }
}
