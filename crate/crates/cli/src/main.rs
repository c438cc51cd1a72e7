mod config;
mod trace;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use banach_splitting::audit::audit_space;
use banach_splitting::{
    rate_certificate, solve, Error, ProblemInstance, SolveReport, Space, Status,
};
use clap::{Parser, Subcommand};

use config::{InlineSpec, RunConfig, SolverSpec};

const EXIT_ERROR: u8 = 1;
const EXIT_MAX_ITERATIONS: u8 = 2;
const EXIT_DESCENT: u8 = 3;
const EXIT_RATE_VIOLATED: u8 = 4;

#[derive(Parser)]
#[command(
    name = "splitting",
    version,
    about = "Forward-backward-forward splitting in lp spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured problem and write its trace.
    Run { config: PathBuf },
    /// Sample the geometric inequalities and identities for each exponent.
    VerifyConstants {
        /// Comma-separated exponents in (1, 2].
        #[arg(long, value_delimiter = ',', default_value = "1.25,1.5,2")]
        p: Vec<f64>,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        dim: usize,
    },
    /// Check a fixed-step trace against the O(1/n) bound on the best residual.
    RateReport {
        #[arg(long)]
        trace: PathBuf,
        /// Defaults to the first row's phi_to_solution.
        #[arg(long)]
        phi1: Option<f64>,
        #[arg(long)]
        lipschitz: f64,
        /// Upper end of the step-size range used by the run.
        #[arg(long)]
        b: f64,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 1)]
        n: usize,
    },
    /// Run every entry of `solvers` on one instance; traces go to the output directory.
    Compare { config: PathBuf },
    /// Print the configured problem as an inline instance.
    Instance { config: PathBuf },
}

enum Failure {
    Usage(String),
    Descent(Error),
}

impl From<String> for Failure {
    fn from(s: String) -> Self {
        Failure::Usage(s)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Run { config } => cmd_run(&config),
        Command::VerifyConstants {
            p,
            samples,
            seed,
            dim,
        } => cmd_verify(&p, samples, seed, dim),
        Command::RateReport {
            trace,
            phi1,
            lipschitz,
            b,
            p,
            n,
        } => cmd_rate(&trace, phi1, lipschitz, b, p, n),
        Command::Compare { config } => cmd_compare(&config),
        Command::Instance { config } => cmd_instance(&config),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_ERROR)
        }
        Err(Failure::Descent(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_DESCENT)
        }
    }
}

fn strict_mode() -> bool {
    std::env::var("SPLITTING_STRICT").is_ok_and(|v| v == "1")
}

struct Finished {
    report: SolveReport,
    seconds: f64,
}

fn run_one(inst: &ProblemInstance, spec: &SolverSpec) -> Result<Finished, Failure> {
    let config = spec.to_config(inst)?.strict(strict_mode());
    let start = spec.start(inst)?;
    let clock = Instant::now();
    let report = solve(inst, &config, &start).map_err(|e| match e {
        Error::DescentViolation { .. } => Failure::Descent(e),
        other => Failure::Usage(format!("solver: {other}")),
    })?;
    let d = report.descent;
    if d.violations > 0 {
        eprintln!(
            "warning: descent inequality violated on {} of {} steps (worst excess {:e})",
            d.violations, d.checks, d.worst_excess
        );
    }
    Ok(Finished {
        report,
        seconds: clock.elapsed().as_secs_f64(),
    })
}

fn write_trace(path: &Path, report: &SolveReport) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| format!("output.path: {e}"))?;
    }
    let file = File::create(path).map_err(|e| format!("output.path {}: {e}", path.display()))?;
    trace::write(BufWriter::new(file), &report.trace)
        .map_err(|e| format!("output.path {}: {e}", path.display()))?;
    Ok(())
}

fn status_code(status: Status) -> u8 {
    match status {
        Status::Converged | Status::ExactSolutionHit => 0,
        Status::MaxIterations => EXIT_MAX_ITERATIONS,
    }
}

fn load_with_instance(path: &Path) -> Result<(RunConfig, ProblemInstance), Failure> {
    let cfg = config::load(path)?;
    let inst = cfg.instance()?;
    Ok((cfg, inst))
}

fn cmd_run(path: &Path) -> Result<u8, Failure> {
    let (cfg, inst) = load_with_instance(path)?;
    if cfg.solvers.is_some() {
        return Err(
            "solvers: a list of solvers belongs to `compare`; use `solver` for `run`"
                .to_string()
                .into(),
        );
    }
    let spec = cfg
        .solver
        .as_ref()
        .ok_or("solver: missing field".to_string())?;
    let done = run_one(&inst, spec)?;
    write_trace(&cfg.output.path, &done.report)?;
    println!(
        "status={} iters={} residual={:.16e} seconds={:.3}",
        done.report.status,
        done.report.iterations,
        done.report.final_residual(),
        done.seconds
    );
    Ok(status_code(done.report.status))
}

fn cmd_compare(path: &Path) -> Result<u8, Failure> {
    let (cfg, inst) = load_with_instance(path)?;
    if cfg.solver.is_some() {
        return Err("solver: `compare` takes a `solvers` list"
            .to_string()
            .into());
    }
    let specs = cfg
        .solvers
        .as_deref()
        .ok_or("solvers: missing field".to_string())?;
    if specs.is_empty() {
        return Err("solvers: list is empty".to_string().into());
    }
    for (i, spec) in specs.iter().enumerate() {
        spec.to_config(&inst)
            .map_err(|e| format!("solvers[{i}]: {e}"))?;
    }

    let results: Vec<Result<Finished, Failure>> = std::thread::scope(|scope| {
        let handles: Vec<_> = specs
            .iter()
            .map(|spec| scope.spawn(|| run_one(&inst, spec)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("solver thread panicked"))
            .collect()
    });

    let dir = &cfg.output.path;
    std::fs::create_dir_all(dir).map_err(|e| format!("output.path {}: {e}", dir.display()))?;
    let mut finished = Vec::new();
    for (i, (spec, result)) in specs.iter().zip(results).enumerate() {
        let done = result?;
        write_trace(&dir.join(format!("{i}-{}.csv", spec.variant)), &done.report)?;
        finished.push((spec.variant.as_str(), done));
    }

    println!(
        "{:<4}{:<12}{:<18}{:>12}{:>16}{:>26}{:>10}",
        "#", "variant", "status", "iterations", "resolvent_calls", "final_residual", "seconds"
    );
    let mut code = 0;
    for (i, (variant, done)) in finished.iter().enumerate() {
        let r = &done.report;
        println!(
            "{i:<4}{variant:<12}{:<18}{:>12}{:>16}{:>26.16e}{:>10.3}",
            r.status.as_str(),
            r.iterations,
            r.resolvent_calls,
            r.final_residual(),
            done.seconds
        );
        code = code.max(status_code(r.status));
    }
    let mut spread = 0.0f64;
    for (i, (_, a)) in finished.iter().enumerate() {
        for (_, b) in &finished[i + 1..] {
            spread = spread.max(a.report.final_point.max_abs_diff(&b.report.final_point));
        }
    }
    println!("max_pairwise_final_point_gap={spread:.16e}");
    Ok(code)
}

fn cmd_instance(path: &Path) -> Result<u8, Failure> {
    let (cfg, inst) = load_with_instance(path)?;
    let doc = serde_json::json!({
        "space": { "n": cfg.space.n, "p": cfg.space.p },
        "problem": { "inline": InlineSpec::from_instance(&inst) },
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&doc).map_err(|e| e.to_string())?
    );
    Ok(0)
}

fn cmd_verify(ps: &[f64], samples: usize, seed: u64, dim: usize) -> Result<u8, Failure> {
    let spaces = ps
        .iter()
        .map(|&p| Space::new(dim, p).map_err(|e| format!("--p: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    let mut all = true;
    for space in &spaces {
        let report = audit_space(space, samples, seed);
        println!(
            "p={} q={:.6} mu={:.6} kappa={:.6} dim={} samples={}",
            space.p(),
            space.q(),
            space.mu(),
            space.kappa(),
            dim,
            samples
        );
        for c in &report.checks {
            println!(
                "  {:<32} max_violation={:>12.3e} tolerance={:.0e} {}",
                c.name,
                c.max_violation,
                c.tolerance,
                if c.passed() { "ok" } else { "FAIL" }
            );
        }
        all &= report.passed();
    }
    println!(
        "{}",
        if all {
            "all checks passed"
        } else {
            "some checks failed"
        }
    );
    Ok(if all { 0 } else { EXIT_ERROR })
}

fn cmd_rate(
    path: &Path,
    phi1: Option<f64>,
    lipschitz: f64,
    b: f64,
    p: f64,
    n: usize,
) -> Result<u8, Failure> {
    let file = File::open(path).map_err(|e| format!("--trace {}: {e}", path.display()))?;
    let rows = trace::read(file).map_err(|e| format!("--trace {}: {e}", path.display()))?;
    if rows.is_empty() {
        return Err(format!("--trace {}: no rows", path.display()).into());
    }
    if rows.iter().any(|r| r.phi_to_solution.is_none()) {
        return Err(format!(
            "--trace {}: phi_to_solution column is missing or empty; the run needs a known solution",
            path.display()
        )
        .into());
    }
    let phi1 = match phi1 {
        Some(v) => v,
        None if rows[0].n == 1 => rows[0].phi_to_solution.unwrap_or_default(),
        None => {
            return Err("--phi1: required when the trace does not start at n = 1"
                .to_string()
                .into())
        }
    };
    let space = Space::new(n, p).map_err(|e| format!("--p: {e}"))?;
    let report = rate_certificate(&space, lipschitz, b, phi1, &rows).map_err(|e| e.to_string())?;
    println!(
        "rows={} worst_ratio={:.16e} pass={}",
        report.checked, report.worst_ratio, report.pass
    );
    Ok(if report.pass { 0 } else { EXIT_RATE_VIOLATED })
}
