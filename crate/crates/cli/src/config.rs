//! JSON run configuration.

use std::path::{Path, PathBuf};

use banach_splitting::problems::{composite_to_inclusion, gen_lasso_like};
use banach_splitting::solvers::{AnchorSchedule, StepSchedule, Variant};
use banach_splitting::{
    gen_skew_vi, gen_strongly_monotone, LipschitzMonotoneMap, Primal, ProblemInstance, ScalarPiece,
    SeparableConvex, SolverConfig, Space,
};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub space: SpaceSpec,
    pub problem: ProblemSpec,
    #[serde(default)]
    pub solver: Option<SolverSpec>,
    #[serde(default)]
    pub solvers: Option<Vec<SolverSpec>>,
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub n: usize,
    pub p: f64,
}

/// Either `generator` + `seed` (+ `params`) or `inline`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    #[serde(default)]
    pub generator: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub params: serde_json::Map<String, serde_json::Value>,
    #[serde(default)]
    pub inline: Option<InlineSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineSpec {
    #[serde(rename = "A")]
    pub a: MapSpec,
    #[serde(rename = "B")]
    pub b: Vec<PieceSpec>,
    #[serde(
        default,
        rename = "knownSolution",
        skip_serializing_if = "Option::is_none"
    )]
    pub known_solution: Option<Vec<f64>>,
    /// Overrides the certified Lipschitz bound; may only raise it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase", deny_unknown_fields)]
pub enum MapSpec {
    Affine {
        matrix: Vec<Vec<f64>>,
        offset: Vec<f64>,
    },
    LeastSquares {
        matrix: Vec<Vec<f64>>,
        rhs: Vec<f64>,
    },
    Zero,
}

/// Infinite interval ends are written as `null`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase", deny_unknown_fields)]
pub enum PieceSpec {
    Zero,
    Interval { lo: Option<f64>, hi: Option<f64> },
    Abs { alpha: f64 },
    Quadratic { weight: f64 },
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(rename_all = "camelCase")]
pub enum ScheduleSpec {
    Constant,
    Ramp,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(rename_all = "camelCase")]
pub enum AnchorSpec {
    Harmonic,
    Zero,
    Power(f64),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct SolverSpec {
    pub variant: String,
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default)]
    pub b: Option<f64>,
    #[serde(default)]
    pub schedule: Option<ScheduleSpec>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub l: Option<f64>,
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default)]
    pub anchor: Option<AnchorSpec>,
    pub epsilon: f64,
    pub max_iterations: usize,
    pub trace_every: usize,
    #[serde(default)]
    pub start: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: PathBuf,
}

pub type ConfigResult<T> = Result<T, String>;

pub fn load(path: &Path) -> ConfigResult<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
}

fn lib_err(field: &str) -> impl Fn(banach_splitting::Error) -> String + '_ {
    move |e| format!("{field}: {e}")
}

fn param(
    params: &serde_json::Map<String, serde_json::Value>,
    key: &str,
    default: f64,
) -> ConfigResult<f64> {
    match params.get(key) {
        None => Ok(default),
        Some(v) => v
            .as_f64()
            .ok_or_else(|| format!("problem.params.{key}: expected a number")),
    }
}

fn check_params(
    params: &serde_json::Map<String, serde_json::Value>,
    allowed: &[&str],
) -> ConfigResult<()> {
    match params.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(format!(
            "problem.params.{k}: unknown parameter (expected one of {})",
            allowed.join(", ")
        )),
        None => Ok(()),
    }
}

fn matrix(rows: &[Vec<f64>], field: &str) -> ConfigResult<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(format!(
            "{field}: expected a nonempty rectangular array of rows"
        ));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

impl InlineSpec {
    pub fn build(&self, space: Space) -> ConfigResult<ProblemInstance> {
        let a = match &self.a {
            MapSpec::Affine { matrix: m, offset } => {
                LipschitzMonotoneMap::affine(matrix(m, "problem.inline.A.matrix")?, offset.clone())
                    .map_err(lib_err("problem.inline.A"))?
            }
            MapSpec::LeastSquares { matrix: m, rhs } => {
                LipschitzMonotoneMap::least_squares_gradient(
                    matrix(m, "problem.inline.A.matrix")?,
                    rhs.clone(),
                )
                .map_err(lib_err("problem.inline.A"))?
            }
            MapSpec::Zero => LipschitzMonotoneMap::zero(space.dim()),
        };
        let a = match self.lipschitz {
            Some(l) => a
                .with_lipschitz_bound(l)
                .map_err(lib_err("problem.inline.lipschitz"))?,
            None => a,
        };
        let pieces = self
            .b
            .iter()
            .map(|p| match *p {
                PieceSpec::Zero => Ok(ScalarPiece::Zero),
                PieceSpec::Interval { lo, hi } => ScalarPiece::interval(
                    lo.unwrap_or(f64::NEG_INFINITY),
                    hi.unwrap_or(f64::INFINITY),
                ),
                PieceSpec::Abs { alpha } => ScalarPiece::scaled_abs(alpha),
                PieceSpec::Quadratic { weight } => ScalarPiece::quadratic(weight),
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(lib_err("problem.inline.B"))?;
        let b = SeparableConvex::new(pieces).map_err(lib_err("problem.inline.B"))?;
        let inst = ProblemInstance::new(space, a, b).map_err(lib_err("problem.inline"))?;
        match &self.known_solution {
            Some(x) => inst
                .with_known_solution(Primal::new(x.clone()))
                .map_err(lib_err("problem.inline.knownSolution")),
            None => Ok(inst),
        }
    }

    /// Inline form of an instance, for exporting generated problems.
    pub fn from_instance(inst: &ProblemInstance) -> Self {
        use banach_splitting::MapKind;
        let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
            (0..m.nrows())
                .map(|i| m.row(i).iter().copied().collect())
                .collect()
        };
        let a = match inst.a().kind() {
            MapKind::Affine { matrix, offset } => MapSpec::Affine {
                matrix: rows(matrix),
                offset: offset.to_vec(),
            },
            MapKind::LeastSquaresGradient { matrix, rhs } => MapSpec::LeastSquares {
                matrix: rows(matrix),
                rhs: rhs.clone(),
            },
            MapKind::Zero { .. } => MapSpec::Zero,
        };
        let finite = |v: f64| v.is_finite().then_some(v);
        let b = inst
            .b()
            .pieces()
            .iter()
            .map(|p| match *p {
                ScalarPiece::Zero => PieceSpec::Zero,
                ScalarPiece::Interval { lo, hi } => PieceSpec::Interval {
                    lo: finite(lo),
                    hi: finite(hi),
                },
                ScalarPiece::ScaledAbs { alpha } => PieceSpec::Abs { alpha },
                ScalarPiece::Quadratic { weight } => PieceSpec::Quadratic { weight },
            })
            .collect();
        Self {
            a,
            b,
            known_solution: inst.known_solution().map(|x| x.to_vec()),
            lipschitz: Some(inst.lipschitz()),
        }
    }
}

impl RunConfig {
    pub fn space(&self) -> ConfigResult<Space> {
        Space::new(self.space.n, self.space.p).map_err(lib_err("space"))
    }

    pub fn instance(&self) -> ConfigResult<ProblemInstance> {
        let space = self.space()?;
        let problem = &self.problem;
        match (&problem.generator, &problem.inline) {
            (Some(name), None) => {
                let seed = problem
                    .seed
                    .ok_or("problem.seed: required when a generator is named")?;
                build_generated(name, seed, &problem.params, space)
            }
            (None, Some(inline)) => {
                if problem.seed.is_some() || !problem.params.is_empty() {
                    return Err("problem.seed/params: only valid with a generator".into());
                }
                inline.build(space)
            }
            (Some(_), Some(_)) => {
                Err("problem: give either `generator` or `inline`, not both".into())
            }
            (None, None) => Err("problem: missing `generator` or `inline`".into()),
        }
    }
}

fn build_generated(
    name: &str,
    seed: u64,
    params: &serde_json::Map<String, serde_json::Value>,
    space: Space,
) -> ConfigResult<ProblemInstance> {
    let (n, p) = (space.dim(), space.p());
    let err = lib_err("problem.params");
    match name {
        "stronglyMonotone" => {
            check_params(params, &["gamma"])?;
            gen_strongly_monotone(seed, n, p, param(params, "gamma", 0.5)?).map_err(err)
        }
        "skewVI" => {
            check_params(params, &["skewWeight", "lo", "hi"])?;
            let bounds = (param(params, "lo", -1.0)?, param(params, "hi", 1.0)?);
            gen_skew_vi(seed, n, p, param(params, "skewWeight", 0.5)?, bounds).map_err(err)
        }
        "lassoLike" => {
            check_params(params, &["m", "alpha"])?;
            let m = param(params, "m", n as f64)?;
            if !(m >= 1.0 && m.fract() == 0.0) {
                return Err("problem.params.m: expected a positive integer".into());
            }
            let cm = gen_lasso_like(seed, m as usize, n, param(params, "alpha", 0.1)?)
                .map_err(lib_err("problem.params"))?;
            composite_to_inclusion(&cm, space).map_err(err)
        }
        other => Err(format!(
            "problem.generator: unknown generator `{other}` (expected stronglyMonotone, skewVI or lassoLike)"
        )),
    }
}

impl SolverSpec {
    /// Missing step parameters default to fractions of the admissible
    /// bounds: `a = 0.5·cap`, `b = 0.9·cap`, `θ = 0.5·θ_max`, `γ = 1`,
    /// `l = 0.5`.
    pub fn to_config(&self, inst: &ProblemInstance) -> ConfigResult<SolverConfig> {
        let space = inst.space();
        let step_cap = || {
            space
                .step_size_cap(inst.lipschitz())
                .map_err(lib_err("problem"))
        };
        let schedule = match self.schedule.unwrap_or(ScheduleSpec::Constant) {
            ScheduleSpec::Constant => StepSchedule::Constant,
            ScheduleSpec::Ramp => StepSchedule::Ramp,
        };
        let bounds = || -> ConfigResult<(f64, f64)> {
            Ok(match (self.a, self.b) {
                (Some(a), Some(b)) => (a, b),
                (a, b) => {
                    let cap = step_cap()?;
                    (a.unwrap_or(0.5 * cap), b.unwrap_or(0.9 * cap))
                }
            })
        };
        let disallow = |present: bool, field: &str| -> ConfigResult<()> {
            if present {
                Err(format!(
                    "solver.{field}: not a parameter of the {} variant",
                    self.variant
                ))
            } else {
                Ok(())
            }
        };
        let variant = match self.variant.as_str() {
            "fixed" => {
                disallow(
                    self.gamma.is_some() || self.l.is_some() || self.theta.is_some(),
                    "gamma/l/theta",
                )?;
                disallow(self.anchor.is_some(), "anchor")?;
                let (a, b) = bounds()?;
                Variant::Fixed { a, b, schedule }
            }
            "linesearch" => {
                disallow(self.a.is_some() || self.b.is_some(), "a/b")?;
                disallow(self.schedule.is_some(), "schedule")?;
                disallow(self.anchor.is_some(), "anchor")?;
                Variant::Linesearch {
                    gamma: self.gamma.unwrap_or(1.0),
                    l: self.l.unwrap_or(0.5),
                    theta: self.theta.unwrap_or(0.5 * space.theta_cap()),
                }
            }
            "halpern" => {
                disallow(
                    self.gamma.is_some() || self.l.is_some() || self.theta.is_some(),
                    "gamma/l/theta",
                )?;
                let (a, b) = bounds()?;
                let anchor = match self.anchor.unwrap_or(AnchorSpec::Harmonic) {
                    AnchorSpec::Harmonic => AnchorSchedule::Harmonic,
                    AnchorSpec::Zero => AnchorSchedule::Zero,
                    AnchorSpec::Power(e) => AnchorSchedule::Power(e),
                };
                Variant::Halpern {
                    a,
                    b,
                    schedule,
                    anchor,
                }
            }
            other => return Err(format!(
                "solver.variant: unknown variant `{other}` (expected fixed, linesearch or halpern)"
            )),
        };
        let config = SolverConfig::new(variant)
            .epsilon(self.epsilon)
            .max_iterations(self.max_iterations)
            .trace_every(self.trace_every);
        config
            .validate(space, inst.lipschitz())
            .map_err(lib_err("solver"))?;
        Ok(config)
    }

    pub fn start(&self, inst: &ProblemInstance) -> ConfigResult<Primal> {
        let space = inst.space();
        match &self.start {
            Some(x) => space.primal(x.clone()).map_err(lib_err("solver.start")),
            None => Ok(Primal::zeros(space.dim())),
        }
    }
}
