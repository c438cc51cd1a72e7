//! Trace CSV: `n,lambda,residual,phi_to_solution,linesearch_trials,alpha_n`.
//!
//! Reals are written with 17 significant digits; inapplicable cells are
//! empty.

use std::io::{Read, Write};

use banach_splitting::IterationRecord;

pub const HEADER: [&str; 6] = [
    "n",
    "lambda",
    "residual",
    "phi_to_solution",
    "linesearch_trials",
    "alpha_n",
];

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write<W: Write>(out: W, trace: &[IterationRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in trace {
        w.write_record([
            r.n.to_string(),
            real(r.lambda),
            real(r.residual),
            r.phi_to_solution.map(real).unwrap_or_default(),
            r.linesearch_trials
                .map(|t| t.to_string())
                .unwrap_or_default(),
            r.alpha.map(real).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn cell<T: std::str::FromStr>(s: &str, column: &str, line: usize) -> Result<Option<T>, String> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| format!("line {line}: cannot parse `{s}` in column {column}"))
}

/// Reads a trace back. Columns are located by name, so extra columns are
/// ignored; `n`, `lambda` and `residual` are required.
pub fn read<R: Read>(input: R) -> Result<Vec<IterationRecord>, String> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(|e| e.to_string())?.clone();
    let index = |name: &str| headers.iter().position(|h| h == name);
    let required = |name: &str| index(name).ok_or_else(|| format!("trace has no `{name}` column"));
    let (n_col, lambda_col, residual_col) =
        (required("n")?, required("lambda")?, required("residual")?);
    let phi_col = index("phi_to_solution");
    let trials_col = index("linesearch_trials");
    let alpha_col = index("alpha_n");

    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let line = i + 2;
        let get = |c: Option<usize>| c.and_then(|c| rec.get(c)).unwrap_or("");
        let need = |c: usize, name: &str| -> Result<f64, String> {
            cell(get(Some(c)), name, line)?.ok_or_else(|| format!("line {line}: empty {name}"))
        };
        rows.push(IterationRecord {
            n: cell(get(Some(n_col)), "n", line)?.ok_or_else(|| format!("line {line}: empty n"))?,
            lambda: need(lambda_col, "lambda")?,
            residual: need(residual_col, "residual")?,
            phi_to_solution: cell(get(phi_col), "phi_to_solution", line)?,
            linesearch_trials: cell(get(trials_col), "linesearch_trials", line)?,
            alpha: cell(get(alpha_col), "alpha_n", line)?,
        });
    }
    Ok(rows)
}
