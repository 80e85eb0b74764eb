//! Drivers behind the `run` and `converge` commands.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error as ThisError;

use crate::chernoff::{convergence_study, ConvergenceReport, Scheme};
use crate::config::{ConfigError, Experiment};
use crate::error::Error;

#[derive(Debug, ThisError)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{}: {0}", .0.name())]
    Numeric(#[from] Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    /// Process exit status: 2 for configuration problems, 3 for numeric
    /// failures, 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numeric(_) => 3,
            RunError::Io(_) => 1,
        }
    }
}

pub fn snapshot_name(exp: &Experiment, n: usize) -> String {
    format!("field_{}_n{}.csv", exp.scheme.variant, n)
}

/// Evolves the initial data once per configured `n`, writes a field snapshot
/// per run into `out_dir` and a summary line per run to `log`.
pub fn cmd_run<W: Write>(exp: &Experiment, out_dir: &Path, log: &mut W) -> Result<Vec<PathBuf>, RunError> {
    let scheme = Scheme::new(exp.domain.clone(), exp.scheme.clone())?;
    fs::create_dir_all(out_dir)?;
    let start = scheme.sample(&exp.initial);
    let disc = scheme.discretization();
    let mut written = Vec::new();
    for &n in &exp.scheme.n {
        let u = scheme.evolve(&start, n)?;
        let path = out_dir.join(snapshot_name(exp, n));
        let mut file = BufWriter::new(fs::File::create(&path)?);
        disc.write_csv(&u, &mut file)?;
        file.flush()?;
        writeln!(
            log,
            "variant={} n={} sup_norm={:.16e} l2_norm={:.16e} file={}",
            exp.scheme.variant,
            n,
            disc.sup_norm(&u),
            disc.l2_norm(&u),
            path.display()
        )?;
        written.push(path);
    }
    Ok(written)
}

pub const REPORT_FILE: &str = "convergence.csv";
pub const GRID_CHECK_FILE: &str = "grid_check.csv";

/// Runs the convergence study, writes `convergence.csv` (and `grid_check.csv`
/// when requested) into `out_dir`, and echoes the observed orders to `log`.
pub fn cmd_converge<W: Write>(exp: &Experiment, out_dir: &Path, log: &mut W) -> Result<ConvergenceReport, RunError> {
    let scheme = Scheme::new(exp.domain.clone(), exp.scheme.clone())?;
    let report = convergence_study(&scheme, &exp.initial, exp.reference, exp.grid_check)?;
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join(REPORT_FILE), report.to_csv())?;
    writeln!(log, "variant={} reference={}", report.variant, report.reference.as_str())?;
    for row in &report.rows {
        let order = row.observed_order.map(|o| format!("{o:.6}")).unwrap_or_else(|| "-".into());
        writeln!(log, "n={} sup_error={:.6e} l2_error={:.6e} order={}", row.n, row.sup_error, row.l2_error, order)?;
    }
    if let Some(g) = &report.grid_check {
        fs::write(
            out_dir.join(GRID_CHECK_FILE),
            format!("n,h,sup_change,l2_change\n{},{:.16e},{:.16e},{:.16e}\n", g.n, g.h, g.sup_change, g.l2_change),
        )?;
        writeln!(log, "grid check at n={}: sup change {:.6e} when h={} is halved", g.n, g.sup_change, g.h)?;
    }
    Ok(report)
}
