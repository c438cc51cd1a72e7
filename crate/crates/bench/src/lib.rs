//! Fixtures shared by the criterion benches.

use banach_splitting::{gen_skew_vi, Primal, ProblemInstance, SolverConfig};

/// Deterministic point with mixed signs and magnitudes, a few zeros included.
pub fn sample_point(n: usize) -> Primal {
    Primal::new(
        (0..n)
            .map(|i| {
                if i % 7 == 3 {
                    0.0
                } else {
                    3.0 * ((i as f64 + 1.0) * 1.37).sin()
                }
            })
            .collect(),
    )
}

pub fn skew_instance(n: usize, p: f64) -> ProblemInstance {
    gen_skew_vi(7, n, p, 0.5, (-1.0, 1.0)).expect("valid generator parameters")
}

/// Fixed-step and line-search configurations running exactly `iterations` steps.
pub fn budgets(inst: &ProblemInstance, iterations: usize) -> [(&'static str, SolverConfig); 2] {
    let cap = inst
        .space()
        .step_size_cap(inst.lipschitz())
        .expect("finite Lipschitz bound");
    let theta = 0.5 * inst.space().theta_cap();
    let limit = |c: SolverConfig| {
        c.epsilon(f64::MIN_POSITIVE)
            .max_iterations(iterations)
            .trace_every(iterations)
    };
    [
        ("fixed", limit(SolverConfig::fixed(0.5 * cap, 0.9 * cap))),
        (
            "linesearch",
            limit(SolverConfig::linesearch(1.0, 0.5, theta)),
        ),
    ]
}
