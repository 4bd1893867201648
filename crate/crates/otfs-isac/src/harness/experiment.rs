//! Seeded Monte Carlo experiment execution.
//!
//! Every `(sweep point, trial)` work unit derives its own RNG stream, so
//! results are independent of execution order and thread count. Axes that
//! change the dimensionality of the sampled randomness (target counts,
//! AP/antenna pairs) reseed the stream; pure parameter axes (RCS variance,
//! bound thresholds, speeds, grid sizes) share the trial's draws so sweeps
//! compare like against like. Rows are sorted by (sweep point, trial,
//! target) before serialization.

use rayon::prelude::*;
use std::time::Instant;

use crate::bounds::Snapshot;
use crate::comm::se_from_sinr;
use crate::error::{Error, Result};
use crate::fisher::FimMode;
use crate::harness::config::{ExperimentConfig, ExperimentKind};
use crate::harness::results::ResultRow;
use crate::optimizer::{allocate_power, equal_power, SensingModel, SolveStatus};
use crate::otfs::{OtfsGrid, BRUTE_FORCE_GRID_LIMIT};
use crate::rng::{derive_seed, trial_rng};
use crate::scenario::dbsm_to_sqm;
use crate::verify::{
    check_derivative_convergence, check_fim_equivalence, check_moment_equivalence,
};

/// Aggregate outcome of a run, for CLI exit codes.
#[derive(Debug, Clone, Copy)]
pub struct RunSummary {
    pub rows: usize,
    /// Every solver outcome in the run was infeasible.
    pub infeasible_only: bool,
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn blank_row(cfg: &ExperimentConfig, kind: ExperimentKind) -> ResultRow {
    ResultRow {
        experiment: kind.as_str().to_string(),
        trial: 0,
        seed: cfg.master_seed,
        sweep_name: String::new(),
        sweep_value: String::new(),
        target: -1,
        peb_exact_m: f64::NAN,
        peb_approx_m: f64::NAN,
        crlb_m2: f64::NAN,
        min_sinr_db: f64::NAN,
        min_se_bps_hz: f64::NAN,
        iterations: 0,
        status: "ok".into(),
        runtime_ms: 0.0,
    }
}

fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    if threads == 0 {
        f()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool")
            .install(f)
    }
}

type Keyed = (u64, usize, i64, ResultRow);

fn finish(mut keyed: Vec<Keyed>) -> (Vec<ResultRow>, RunSummary) {
    keyed.sort_by_key(|k| (k.0, k.1, k.2));
    let rows: Vec<ResultRow> = keyed.into_iter().map(|(_, _, _, r)| r).collect();
    let infeasible_only = !rows.is_empty() && rows.iter().all(|r| r.status == "infeasible");
    let summary = RunSummary {
        rows: rows.len(),
        infeasible_only,
    };
    (rows, summary)
}

/// Run the configured experiment and return its sorted rows.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(Vec<ResultRow>, RunSummary)> {
    let kind = cfg
        .kind
        .ok_or_else(|| Error::Config("no experiment kind selected".into()))?;
    match kind {
        ExperimentKind::PebValidate => with_pool(cfg.threads, || peb_validate(cfg)).map(finish),
        ExperimentKind::Tradeoff => with_pool(cfg.threads, || tradeoff(cfg)).map(finish),
        ExperimentKind::VelocitySweep => with_pool(cfg.threads, || velocity_sweep(cfg)).map(finish),
        ExperimentKind::Allocate => with_pool(cfg.threads, || allocate(cfg)).map(finish),
        ExperimentKind::OracleCheck => oracle_check(cfg).map(finish),
    }
}

/// Equal-power exact vs. approximate bounds across target counts and RCS
/// variances.
fn peb_validate(cfg: &ExperimentConfig) -> Result<Vec<Keyed>> {
    let mut points = Vec::new();
    for (ti, &t_g) in cfg.targets_sweep.iter().enumerate() {
        for &rcs_dbsm in &cfg.rcs_dbsm_sweep {
            points.push((points.len() as u64, ti as u64, t_g, rcs_dbsm));
        }
    }
    let units: Vec<(u64, u64, usize, f64, usize)> = points
        .iter()
        .flat_map(|&(ord, structural, t_g, rcs)| {
            (0..cfg.trials).map(move |trial| (ord, structural, t_g, rcs, trial))
        })
        .collect();

    let results: Result<Vec<Vec<Keyed>>> = units
        .par_iter()
        .map(|&(ord, structural, t_g, rcs_dbsm, trial)| {
            let started = Instant::now();
            let seed = derive_seed(cfg.master_seed, structural, trial as u64);
            let mut rng = trial_rng(cfg.master_seed, structural, trial as u64);
            let mut params = cfg.params.clone();
            params.t_g = t_g;
            params.rcs_variance = dbsm_to_sqm(rcs_dbsm);
            let snapshot = Snapshot::generate(&params, &cfg.grid, &mut rng)?;
            let alloc = equal_power(&snapshot.stats, params.p_d)?;
            let min_sinr = snapshot.min_sinr(&alloc);
            let se = se_from_sinr(min_sinr, cfg.zeta(&cfg.grid));
            let runtime = if cfg.record_runtime {
                started.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            };

            let mut out = Vec::new();
            for t in 0..t_g {
                let exact = snapshot.position_bound(t, FimMode::Exact, &alloc)?;
                let approx = snapshot.position_bound(t, FimMode::Approx, &alloc)?;
                let mut row = blank_row(cfg, ExperimentKind::PebValidate);
                row.trial = trial;
                row.seed = seed;
                row.sweep_name = "targets;rcs_dbsm".into();
                row.sweep_value = format!("{t_g};{rcs_dbsm}");
                row.target = t as i64;
                row.peb_exact_m = exact.peb;
                row.peb_approx_m = approx.peb;
                row.crlb_m2 = exact.crlb;
                row.min_sinr_db = db(min_sinr);
                row.min_se_bps_hz = se;
                row.runtime_ms = runtime;
                out.push((ord, trial, t as i64, row));
            }
            Ok(out)
        })
        .collect();
    Ok(results?.into_iter().flatten().collect())
}

/// Allocator runs across ascending bound thresholds, warm-started so the
/// achieved level can only improve along the sweep.
fn tradeoff(cfg: &ExperimentConfig) -> Result<Vec<Keyed>> {
    let mut gammas = cfg.gamma_sweep_m.clone();
    gammas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let units: Vec<(u64, usize)> = (0..cfg.ap_antenna_sweep.len() as u64)
        .flat_map(|ai| (0..cfg.trials).map(move |t| (ai, t)))
        .collect();

    let results: Result<Vec<Vec<Keyed>>> = units
        .par_iter()
        .map(|&(ai, trial)| {
            let started = Instant::now();
            let (n_ap, m_t) = cfg.ap_antenna_sweep[ai as usize];
            let seed = derive_seed(cfg.master_seed, ai, trial as u64);
            let mut rng = trial_rng(cfg.master_seed, ai, trial as u64);
            let mut params = cfg.params.clone();
            params.n_ap = n_ap;
            params.m_t = m_t;
            let snapshot = Snapshot::generate(&params, &cfg.grid, &mut rng)?;
            let model = SensingModel {
                coeff: snapshot.sensing_coefficients(),
            };

            let mut out = Vec::new();
            let mut warm = None;
            for (gi, &gamma) in gammas.iter().enumerate() {
                let mut solver = cfg.solver.clone();
                solver.peb_threshold_m = gamma;
                let report =
                    allocate_power(&snapshot.stats, &model, &solver, params.p_d, warm.as_ref())?;
                let feasible = report.status != SolveStatus::Infeasible;
                if feasible {
                    warm = Some(report.allocation.clone());
                }
                let se = se_from_sinr(report.min_sinr, cfg.zeta(&cfg.grid));
                let runtime = if cfg.record_runtime {
                    started.elapsed().as_secs_f64() * 1e3
                } else {
                    0.0
                };
                let ord = ai * gammas.len() as u64 + gi as u64;
                let targets = params.t_g.max(1);
                for t in 0..targets {
                    let mut row = blank_row(cfg, ExperimentKind::Tradeoff);
                    row.trial = trial;
                    row.seed = seed;
                    row.sweep_name = "ap_x_antennas;gamma_m".into();
                    row.sweep_value = format!("{n_ap}x{m_t};{gamma}");
                    row.target = if params.t_g == 0 { -1 } else { t as i64 };
                    if feasible && t < params.t_g {
                        row.crlb_m2 = report.crlb[t];
                        row.peb_approx_m = report.crlb[t].sqrt();
                        row.peb_exact_m = snapshot
                            .position_bound(t, FimMode::Exact, &report.allocation)?
                            .peb;
                    }
                    if feasible {
                        row.min_sinr_db = db(report.min_sinr);
                        row.min_se_bps_hz = se;
                    }
                    row.iterations = report.iterations as u64;
                    row.status = report.status.as_str().into();
                    row.runtime_ms = runtime;
                    out.push((ord, trial, row.target, row));
                }
            }
            Ok(out)
        })
        .collect();
    Ok(results?.into_iter().flatten().collect())
}

/// Equal-power performance across speeds and grid shapes sharing each
/// trial's draws, so path sets are fixed up to the speed scale.
fn velocity_sweep(cfg: &ExperimentConfig) -> Result<Vec<Keyed>> {
    let mut points = Vec::new();
    for &(m, n) in &cfg.grid_sweep {
        for &v in &cfg.velocity_kmh_sweep {
            points.push((points.len() as u64, m, n, v));
        }
    }
    let units: Vec<(u64, usize, usize, f64, usize)> = points
        .iter()
        .flat_map(|&(ord, m, n, v)| (0..cfg.trials).map(move |t| (ord, m, n, v, t)))
        .collect();

    let results: Result<Vec<Vec<Keyed>>> = units
        .par_iter()
        .map(|&(ord, m, n, v_kmh, trial)| {
            let started = Instant::now();
            // one structural coordinate: the whole sweep shares draws
            let seed = derive_seed(cfg.master_seed, 0, trial as u64);
            let mut rng = trial_rng(cfg.master_seed, 0, trial as u64);
            let grid = OtfsGrid::derive(m, n, cfg.grid.delta_f, cfg.grid.tau_max)?;
            let mut params = cfg.params.clone();
            params.v_max = v_kmh / 3.6;
            let snapshot = Snapshot::generate(&params, &grid, &mut rng)?;
            let alloc = equal_power(&snapshot.stats, params.p_d)?;
            let min_sinr = snapshot.min_sinr(&alloc);
            let se = se_from_sinr(min_sinr, cfg.zeta(&grid));
            let runtime = if cfg.record_runtime {
                started.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            };

            let mut out = Vec::new();
            let targets = params.t_g.max(1);
            for t in 0..targets {
                let mut row = blank_row(cfg, ExperimentKind::VelocitySweep);
                row.trial = trial;
                row.seed = seed;
                row.sweep_name = "grid;v_kmh".into();
                row.sweep_value = format!("{m}x{n};{v_kmh}");
                row.target = if params.t_g == 0 { -1 } else { t as i64 };
                if t < params.t_g {
                    let exact = snapshot.position_bound(t, FimMode::Exact, &alloc)?;
                    let approx = snapshot.position_bound(t, FimMode::Approx, &alloc)?;
                    row.peb_exact_m = exact.peb;
                    row.peb_approx_m = approx.peb;
                    row.crlb_m2 = exact.crlb;
                }
                row.min_sinr_db = db(min_sinr);
                row.min_se_bps_hz = se;
                row.runtime_ms = runtime;
                out.push((ord, trial, row.target, row));
            }
            Ok(out)
        })
        .collect();
    Ok(results?.into_iter().flatten().collect())
}

/// One allocator solve per trial at the configured threshold.
fn allocate(cfg: &ExperimentConfig) -> Result<Vec<Keyed>> {
    let units: Vec<usize> = (0..cfg.trials).collect();
    let results: Result<Vec<Vec<Keyed>>> = units
        .par_iter()
        .map(|&trial| {
            let started = Instant::now();
            let seed = derive_seed(cfg.master_seed, 0, trial as u64);
            let mut rng = trial_rng(cfg.master_seed, 0, trial as u64);
            let snapshot = Snapshot::generate(&cfg.params, &cfg.grid, &mut rng)?;
            let model = SensingModel {
                coeff: snapshot.sensing_coefficients(),
            };
            let report =
                allocate_power(&snapshot.stats, &model, &cfg.solver, cfg.params.p_d, None)?;
            let feasible = report.status != SolveStatus::Infeasible;
            let se = se_from_sinr(report.min_sinr, cfg.zeta(&cfg.grid));
            let runtime = if cfg.record_runtime {
                started.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            };

            let mut out = Vec::new();
            let targets = cfg.params.t_g.max(1);
            for t in 0..targets {
                let mut row = blank_row(cfg, ExperimentKind::Allocate);
                row.trial = trial;
                row.seed = seed;
                row.sweep_name = "gamma_m".into();
                row.sweep_value = format!("{}", cfg.solver.peb_threshold_m);
                row.target = if cfg.params.t_g == 0 { -1 } else { t as i64 };
                if feasible && t < cfg.params.t_g {
                    row.crlb_m2 = report.crlb[t];
                    row.peb_approx_m = report.crlb[t].sqrt();
                    row.peb_exact_m = snapshot
                        .position_bound(t, FimMode::Exact, &report.allocation)?
                        .peb;
                }
                if feasible {
                    row.min_sinr_db = db(report.min_sinr);
                    row.min_se_bps_hz = se;
                }
                row.iterations = report.iterations as u64;
                row.status = report.status.as_str().into();
                row.runtime_ms = runtime;
                out.push((0, trial, row.target, row));
            }
            Ok(out)
        })
        .collect();
    Ok(results?.into_iter().flatten().collect())
}

/// Oracle suites: closed vs. brute moments (standard small grids plus the
/// configured grid), analytic vs. finite-difference information entries,
/// and derivative convergence.
fn oracle_check(cfg: &ExperimentConfig) -> Result<Vec<Keyed>> {
    if cfg.grid.m * cfg.grid.n > BRUTE_FORCE_GRID_LIMIT {
        return Err(Error::ResourceLimit(format!(
            "oracle-check enumerates the configured {}x{} grid; keep m*n at or below {}",
            cfg.grid.m, cfg.grid.n, BRUTE_FORCE_GRID_LIMIT
        )));
    }
    let mut cases =
        check_moment_equivalence(cfg.master_seed, &[2, 3, 4, 8], cfg.oracle_points, 1e-9);
    cases.extend(check_moment_equivalence(
        cfg.master_seed ^ 0xa5a5,
        &[cfg.grid.m, cfg.grid.n],
        cfg.oracle_points,
        1e-9,
    ));
    cases.extend(check_fim_equivalence(
        cfg.master_seed,
        cfg.oracle_configs,
        1e-4,
    ));
    cases.extend(check_derivative_convergence(
        cfg.master_seed,
        cfg.oracle_points,
        (3.5, 4.5),
    ));

    let mut out = Vec::new();
    for (i, case) in cases.into_iter().enumerate() {
        let mut row = blank_row(cfg, ExperimentKind::OracleCheck);
        row.trial = i;
        row.sweep_name = case.suite.into();
        row.sweep_value = case.label;
        row.iterations = case.comparisons as u64;
        row.status = if case.pass {
            "ok".into()
        } else {
            "fail".into()
        };
        row.crlb_m2 = case.worst;
        out.push((0u64, i, -1, row));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::parse_config;
    use crate::harness::results::rows_to_csv;

    fn desk_config(kind: ExperimentKind, extra: &str) -> ExperimentConfig {
        let text = format!(
            "[scenario]\nn_ap = 8\nm_t = 4\nk_u = 3\nt_g = 2\n\
             [grid]\nm = 16\nn = 16\ntau_max_us = 0.5\n\
             [experiment]\ntrials = 3\nmaster_seed = 9\n{extra}"
        );
        let mut cfg = parse_config(&text).unwrap();
        cfg.kind = Some(kind);
        cfg
    }

    #[test]
    fn peb_validate_rows_and_upper_bound() {
        let mut cfg = desk_config(ExperimentKind::PebValidate, "targets_sweep = 1,2\n");
        cfg.rcs_dbsm_sweep = vec![0.0];
        let (rows, summary) = run_experiment(&cfg).unwrap();
        // 1 target * 3 trials + 2 targets * 3 trials
        assert_eq!(rows.len(), 3 + 6);
        assert!(!summary.infeasible_only);
        for r in &rows {
            if r.peb_exact_m.is_finite() && r.peb_approx_m.is_finite() {
                assert!(r.peb_approx_m >= r.peb_exact_m - 1e-9);
            }
        }
    }

    #[test]
    fn reruns_are_byte_identical_across_thread_counts() {
        let cfg1 = desk_config(
            ExperimentKind::PebValidate,
            "targets_sweep = 1,2\nthreads = 1\n",
        );
        let mut cfg8 = cfg1.clone();
        cfg8.threads = 4;
        let (rows1, _) = run_experiment(&cfg1).unwrap();
        let (rows8, _) = run_experiment(&cfg8).unwrap();
        assert_eq!(rows_to_csv(&rows1), rows_to_csv(&rows8));
    }

    #[test]
    fn velocity_rows_cover_the_sweep() {
        let cfg = desk_config(
            ExperimentKind::VelocitySweep,
            "velocity_kmh_sweep = 30,300\ngrid_sweep = 16x16,8x32\n",
        );
        let (rows, _) = run_experiment(&cfg).unwrap();
        assert_eq!(rows.len(), 2 * 2 * 3 * 2); // grids * speeds * trials * targets
    }

    #[test]
    fn tradeoff_rows_cover_the_sweep_and_stay_sorted() {
        let cfg = desk_config(
            ExperimentKind::Tradeoff,
            "gamma_sweep_m = 60,120\nap_antenna_sweep = 8x4,8x8\n",
        );
        let (rows, _) = run_experiment(&cfg).unwrap();
        // pairs * thresholds * trials * targets
        assert_eq!(rows.len(), 2 * 2 * 3 * 2);
        let keys: Vec<(String, usize, i64)> = rows
            .iter()
            .map(|r| (r.sweep_value.clone(), r.trial, r.target))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort_by(|a, b| {
            let pa = rows.iter().position(|r| r.sweep_value == a.0).unwrap();
            let pb = rows.iter().position(|r| r.sweep_value == b.0).unwrap();
            (pa, a.1, a.2).cmp(&(pb, b.1, b.2))
        });
        assert_eq!(
            keys, sorted,
            "rows must be ordered by (sweep point, trial, target)"
        );
    }

    #[test]
    fn oracle_check_rejects_full_scale_grids() {
        let cfg = ExperimentConfig {
            kind: Some(ExperimentKind::OracleCheck),
            ..ExperimentConfig::default()
        };
        assert!(matches!(run_experiment(&cfg), Err(Error::ResourceLimit(_))));
    }

    #[test]
    fn oracle_check_runs_on_small_grids() {
        let mut cfg = desk_config(
            ExperimentKind::OracleCheck,
            "oracle_points = 2\noracle_configs = 2\n",
        );
        cfg.oracle_points = 2;
        cfg.oracle_configs = 2;
        let (rows, _) = run_experiment(&cfg).unwrap();
        assert!(rows.iter().all(|r| r.status == "ok"), "{rows:?}");
    }
}
