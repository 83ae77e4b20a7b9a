//! Parameter sweeps: independent Eulerian runs over a grid of `n`,
//! amplitude and `M`, run in parallel and gathered into one table.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::commands::simulate_run;
use crate::config::{with_amplitude, Command, RunConfig};
use crate::failure::Failure;
use crate::output::{Check, Output, Summary};
use crate::plot::{Plot, Series};

/// Environment variable capping the number of sweep workers.
pub const WORKERS_VAR: &str = "TOOL_WORKERS";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub n: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub amplitude: Option<f64>,
    pub status: &'static str,
    pub t_reached: Option<f64>,
    pub blow_up_t: Option<f64>,
    pub max_abs_dxu: Option<f64>,
    pub min_dxu: Option<f64>,
    pub error: Option<String>,
}

fn base_amplitude(cfg: &RunConfig) -> Option<f64> {
    use stagflow::InitialProfile::*;
    match cfg.u0 {
        Sine { amplitude, .. } | TwoMode { amplitude, .. } | RandomBandlimited { amplitude, .. } => Some(amplitude),
        _ => None,
    }
}

/// The cartesian product of the axes, `n` outermost and `M` innermost.
pub fn cells(cfg: &RunConfig) -> Vec<(f64, Option<f64>, usize)> {
    let ns = cfg.sweep.n.clone().unwrap_or_else(|| vec![cfg.n]);
    let amps: Vec<Option<f64>> = match &cfg.sweep.amplitude {
        Some(a) => a.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let ms = cfg.sweep.m.clone().unwrap_or_else(|| vec![cfg.m]);
    let mut out = Vec::new();
    for &n in &ns {
        for &a in &amps {
            for &m in &ms {
                out.push((n, a, m));
            }
        }
    }
    out
}

pub fn run_cell(base: &RunConfig, n: f64, amplitude: Option<f64>, m: usize) -> Cell {
    let mut cell = Cell {
        n,
        m,
        amplitude: amplitude.or_else(|| base_amplitude(base)),
        status: "failed",
        t_reached: None,
        blow_up_t: None,
        max_abs_dxu: None,
        min_dxu: None,
        error: None,
    };
    let mut cfg = base.clone();
    cfg.n = n;
    cfg.m = m;
    if let Some(a) = amplitude {
        match with_amplitude(&cfg.u0, a) {
            Ok(p) => cfg.u0 = p,
            Err(e) => {
                cell.status = "invalid";
                cell.error = Some(e);
                return cell;
            }
        }
    }
    match simulate_run(&cfg) {
        Ok(run) => {
            let sup = run
                .records
                .iter()
                .map(|r| r.min_dxu.abs().max(r.max_dxu.abs()))
                .chain(run.blow_up.map(|b| b.1))
                .fold(0.0, f64::max);
            cell.t_reached = Some(run.last.t);
            cell.max_abs_dxu = Some(sup);
            cell.min_dxu = run.gradient_history.iter().map(|h| h.1).reduce(f64::min);
            match run.blow_up {
                Some((t, _)) => {
                    cell.status = "blow_up";
                    cell.blow_up_t = Some(t);
                }
                None => cell.status = "completed",
            }
        }
        Err(e) => {
            cell.status = if matches!(e, Failure::Config(_)) { "invalid" } else { "failed" };
            cell.error = Some(e.to_string());
        }
    }
    cell
}

/// Worker count from [`WORKERS_VAR`]; `None` leaves the choice to rayon.
pub fn worker_limit() -> Result<Option<usize>, Failure> {
    match std::env::var(WORKERS_VAR) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(Some(k)),
            _ => Err(Failure::Config(format!("{WORKERS_VAR} must be a positive integer, got {v:?}"))),
        },
    }
}

pub fn sweep(cfg: &RunConfig, out: &Output) -> Result<Summary, Failure> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = worker_limit()? {
        builder = builder.num_threads(k);
    }
    let pool = builder
        .build()
        .map_err(|e| Failure::Numerical(format!("cannot start workers: {e}")))?;
    let grid = cells(cfg);
    let table: Vec<Cell> = pool.install(|| grid.par_iter().map(|&(n, a, m)| run_cell(cfg, n, a, m)).collect());

    out.diagnostics(
        &["n", "M", "amplitude", "status", "t_reached", "blow_up_t", "max_abs_dxu", "min_dxu", "error"],
        &table,
    )?;
    let count = |s: &str| table.iter().filter(|c| c.status == s).count();
    let mut summary = Summary::new(Command::Sweep, cfg);
    summary.check(Check::holds(
        "all_cells_ran",
        count("failed") + count("invalid") == 0,
        format!("{} of {} cells ran to completion or blow-up", count("completed") + count("blow_up"), table.len()),
    ));
    summary.results = json!({
        "cells": table,
        "completed": count("completed"),
        "blow_up": count("blow_up"),
        "failed": count("failed"),
        "invalid": count("invalid"),
    });

    let mut plot = Plot::new("Largest gradient across the sweep", "n", "max |u_x|").log_y();
    let mut keys: Vec<(Option<f64>, usize)> = Vec::new();
    for c in &table {
        if !keys.contains(&(c.amplitude, c.m)) {
            keys.push((c.amplitude, c.m));
        }
    }
    for (a, m) in keys {
        let pts = table
            .iter()
            .filter(|c| c.amplitude == a && c.m == m)
            .map(|c| (c.n, c.max_abs_dxu.unwrap_or(f64::NAN)))
            .collect();
        let label = match a {
            Some(a) => format!("A = {a}, M = {m}"),
            None => format!("M = {m}"),
        };
        plot = plot.with(Series::new(label, pts));
    }
    out.plot("sweep", &plot)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_axes_hold_the_base_value() {
        let cfg = RunConfig::default();
        assert_eq!(cells(&cfg), vec![(3.0, None, 256)]);
    }

    #[test]
    fn empty_axis_gives_no_cells() {
        let mut cfg = RunConfig::default();
        cfg.sweep.n = Some(vec![2.0, 3.0]);
        cfg.sweep.amplitude = Some(vec![]);
        assert!(cells(&cfg).is_empty());
    }

    #[test]
    fn order_is_n_then_amplitude_then_m() {
        let mut cfg = RunConfig::default();
        cfg.sweep.n = Some(vec![2.0, 3.0]);
        cfg.sweep.m = Some(vec![32, 64]);
        let c = cells(&cfg);
        assert_eq!(c[1], (2.0, None, 64));
        assert_eq!(c[2], (3.0, None, 32));
    }

    #[test]
    fn bad_cells_are_recorded() {
        let cfg = RunConfig {
            t_end: 0.01,
            ..RunConfig::default()
        };
        let c = run_cell(&cfg, 1.0, None, 32);
        assert_eq!(c.status, "invalid");
        assert!(c.error.is_some());
        let c = run_cell(&cfg, 3.0, Some(0.1), 32);
        assert_eq!(c.status, "completed");
        assert_eq!(c.amplitude, Some(0.1));
    }
}
