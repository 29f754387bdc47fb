//! Parallel sweep driver with per-cell checkpointing.
//!
//! Cells are independent jobs seeded by their index, so results are
//! identical for any worker count; the merge happens in cell order. A
//! completed cell writes one checkpoint file, and a restarted sweep skips
//! every cell whose checkpoint already exists (wall time is restored from
//! the checkpoint).

use std::path::{Path, PathBuf};
use std::time::Instant;

use geokrige_core::rng::derive_seed;
use geokrige_core::simstudy::{run_cell, CellRunConfig, CellScores, Design, Method, SweepCell};
use rayon::prelude::*;

use crate::io::{write_atomic, IoError};

/// Result row set of one cell, with its wall time.
#[derive(Clone, Debug)]
pub struct CellOutcome {
    /// The cell.
    pub cell: SweepCell,
    /// Aggregated scores.
    pub scores: CellScores,
    /// Wall-clock seconds spent (or restored from checkpoint).
    pub seconds: f64,
}

/// Sweep-level configuration.
#[derive(Clone, Debug)]
pub struct SweepConfig {
    /// Per-cell run settings (the per-cell seed is derived internally).
    pub cell: CellRunConfig,
    /// Master seed: derives the design and every cell seed.
    pub seed: u64,
    /// Directory for per-cell checkpoint files (enables resume).
    pub checkpoint_dir: Option<PathBuf>,
}

/// Run all `cells` (in parallel over the current rayon pool) and return
/// outcomes in input order.
pub fn run_sweep(
    cells: &[SweepCell],
    design: &Design,
    cfg: &SweepConfig,
) -> Result<Vec<CellOutcome>, IoError> {
    if let Some(dir) = &cfg.checkpoint_dir {
        std::fs::create_dir_all(dir)?;
    }
    let outcomes: Vec<Result<CellOutcome, IoError>> = cells
        .par_iter()
        .enumerate()
        .map(|(idx, cell)| run_or_restore(idx, cell, design, cfg))
        .collect();
    outcomes.into_iter().collect()
}

fn checkpoint_path(dir: &Path, idx: usize, cell: &SweepCell) -> PathBuf {
    dir.join(format!("cell_{idx:04}_{}.csv", cell.label()))
}

fn run_or_restore(
    idx: usize,
    cell: &SweepCell,
    design: &Design,
    cfg: &SweepConfig,
) -> Result<CellOutcome, IoError> {
    if let Some(dir) = &cfg.checkpoint_dir {
        let path = checkpoint_path(dir, idx, cell);
        if path.exists() {
            if let Ok(outcome) = load_checkpoint(&path, cell) {
                return Ok(outcome);
            }
            // unreadable checkpoint: fall through and recompute
        }
    }
    let mut cell_cfg = cfg.cell.clone();
    cell_cfg.seed = derive_seed(cfg.seed, &[0xce11, idx as u64]);
    let start = Instant::now();
    let scores = run_cell(cell, design, &cell_cfg)
        .map_err(|e| IoError::Invalid(format!("cell {}: {e}", cell.label())))?;
    let seconds = start.elapsed().as_secs_f64();
    let outcome = CellOutcome {
        cell: *cell,
        scores,
        seconds,
    };
    if let Some(dir) = &cfg.checkpoint_dir {
        write_atomic(
            &checkpoint_path(dir, idx, cell),
            checkpoint_body(&outcome).as_bytes(),
        )?;
    }
    Ok(outcome)
}

fn checkpoint_body(o: &CellOutcome) -> String {
    let mut s = format!("# seconds: {}\n# n_fail: {}\n", o.seconds, o.scores.n_fail);
    for row in result_rows(o) {
        s.push_str(&row);
        s.push('\n');
    }
    s
}

fn load_checkpoint(path: &Path, cell: &SweepCell) -> Result<CellOutcome, IoError> {
    let text = std::fs::read_to_string(path)?;
    let mut seconds = 0.0;
    let mut n_fail = 0usize;
    let mut methods = Vec::new();
    let mut rmse = Vec::new();
    let mut rmse_se = Vec::new();
    let mut coverage = Vec::new();
    let mut coverage_se = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix("# seconds:") {
            seconds = rest.trim().parse().unwrap_or(0.0);
            continue;
        }
        if let Some(rest) = line.strip_prefix("# n_fail:") {
            n_fail = rest.trim().parse().unwrap_or(0);
            continue;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(IoError::Parse(format!(
                "checkpoint {}: line {} has {} fields",
                path.display(),
                i + 1,
                f.len()
            )));
        }
        let method = match f[4] {
            "kale" => Method::Kale,
            "kile" => Method::Kile,
            "hmc" => Method::Hmc,
            other => {
                return Err(IoError::Parse(format!(
                    "checkpoint {}: unknown method `{other}`",
                    path.display()
                )))
            }
        };
        methods.push(method);
        let parse = |s: &str| -> Result<f64, IoError> {
            s.parse()
                .map_err(|_| IoError::Parse(format!("checkpoint {}: `{s}`", path.display())))
        };
        rmse.push(parse(f[5])?);
        rmse_se.push(parse(f[6])?);
        coverage.push(parse(f[7])?);
        coverage_se.push(parse(f[8])?);
    }
    if methods.is_empty() {
        return Err(IoError::Invalid(format!(
            "checkpoint {} holds no rows",
            path.display()
        )));
    }
    Ok(CellOutcome {
        cell: *cell,
        scores: CellScores {
            methods,
            rmse,
            rmse_se,
            coverage,
            coverage_se,
            n_fail,
            flagged: (n_fail as f64) > 0.05 * cell.n_reps as f64,
        },
        seconds,
    })
}

/// Result rows for one cell:
/// `beta,sigma2_x,sigma2_u,params,method,rmse,rmse_se,coverage,coverage_se`.
pub fn result_rows(o: &CellOutcome) -> Vec<String> {
    let params = if o.cell.params_known { "known" } else { "estimated" };
    o.scores
        .methods
        .iter()
        .enumerate()
        .map(|(k, m)| {
            format!(
                "{},{},{},{},{},{},{},{},{}",
                o.cell.beta,
                o.cell.sigma2_x,
                o.cell.sigma2_u,
                params,
                m.name(),
                o.scores.rmse[k],
                o.scores.rmse_se[k],
                o.scores.coverage[k],
                o.scores.coverage_se[k]
            )
        })
        .collect()
}

/// The deterministic results CSV (no timing data).
pub fn results_csv(head: &str, outcomes: &[CellOutcome]) -> String {
    let mut s = String::from(head);
    s.push_str("beta,sigma2_x,sigma2_u,params,method,rmse,rmse_se,coverage,coverage_se\n");
    for o in outcomes {
        for row in result_rows(o) {
            s.push_str(&row);
            s.push('\n');
        }
    }
    s
}

/// The wall-time sidecar CSV (not covered by byte-determinism guarantees).
pub fn timings_csv(head: &str, outcomes: &[CellOutcome]) -> String {
    let mut s = String::from(head);
    s.push_str("beta,sigma2_x,sigma2_u,params,seconds\n");
    for o in outcomes {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            o.cell.beta,
            o.cell.sigma2_x,
            o.cell.sigma2_u,
            if o.cell.params_known { "known" } else { "estimated" },
            o.seconds
        ));
    }
    s
}
