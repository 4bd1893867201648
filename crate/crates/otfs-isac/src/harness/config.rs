//! Flat sectioned key-value config documents.
//!
//! Four sections — `[scenario]`, `[grid]`, `[solver]`, `[experiment]` —
//! hold `key = value` lines; `#` starts a comment line. Unknown sections
//! or keys are rejected with the offending line number. Missing keys fall
//! back to the full-scale defaults. Unit conversions (dBm, dBsm, km/h,
//! GHz, kHz, µs) happen at parse time; a value may carry its unit suffix,
//! e.g. `noise_dbm = -89 dBm`.

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::harness::results::OutputFormat;
use crate::optimizer::SolverConfig;
use crate::otfs::OtfsGrid;
use crate::scenario::{dbm_to_watts, dbsm_to_sqm, ApLayout, RcsMode, SimParams};

/// Which experiment a run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    /// Exact vs. approximate bound comparison under equal power.
    PebValidate,
    /// Spectral efficiency vs. sensing-bound threshold via the allocator.
    Tradeoff,
    /// Resolvability and spectral efficiency across speeds and grids.
    VelocitySweep,
    /// One allocator solve per trial.
    Allocate,
    /// Brute-force and finite-difference oracle suites.
    OracleCheck,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::PebValidate => "peb-validate",
            ExperimentKind::Tradeoff => "tradeoff",
            ExperimentKind::VelocitySweep => "velocity-sweep",
            ExperimentKind::Allocate => "allocate",
            ExperimentKind::OracleCheck => "oracle-check",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "peb-validate" => Some(Self::PebValidate),
            "tradeoff" => Some(Self::Tradeoff),
            "velocity-sweep" => Some(Self::VelocitySweep),
            "allocate" => Some(Self::Allocate),
            "oracle-check" => Some(Self::OracleCheck),
            _ => None,
        }
    }
}

/// A fully parsed experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Set by the CLI subcommand or the `kind` key.
    pub kind: Option<ExperimentKind>,
    pub params: SimParams,
    pub grid: OtfsGrid,
    pub solver: SolverConfig,
    pub trials: usize,
    pub master_seed: u64,
    /// Target-count axis (structural: reseeds the scenario draws).
    pub targets_sweep: Vec<usize>,
    /// RCS variance axis in dBsm (parameter-only: shares scenario draws).
    pub rcs_dbsm_sweep: Vec<f64>,
    /// Sensing-threshold axis in meters, solved in ascending order.
    pub gamma_sweep_m: Vec<f64>,
    /// Speed axis in km/h (parameter-only).
    pub velocity_kmh_sweep: Vec<f64>,
    /// `(m, n)` grid axis (parameter-only).
    pub grid_sweep: Vec<(usize, usize)>,
    /// `(n_ap, m_t)` axis (structural).
    pub ap_antenna_sweep: Vec<(usize, usize)>,
    /// Apply the cyclic-prefix overhead factor to spectral efficiency.
    pub se_overhead: bool,
    /// Fill `runtime_ms` with wall-clock timings; off by default so output
    /// files stay byte-reproducible.
    pub record_runtime: bool,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    /// Worker threads; 0 means all available cores.
    pub threads: usize,
    /// Random points per oracle grid in `oracle-check`.
    pub oracle_points: usize,
    /// Random configurations in the information-matrix oracle suite.
    pub oracle_configs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let params = SimParams::default();
        let grid = OtfsGrid::derive(128, 128, 0.5e6, 0.5e-6).expect("default grid");
        let solver = SolverConfig::default();
        Self {
            kind: None,
            targets_sweep: vec![params.t_g],
            rcs_dbsm_sweep: vec![0.0],
            gamma_sweep_m: vec![solver.peb_threshold_m],
            velocity_kmh_sweep: vec![300.0],
            grid_sweep: vec![(grid.m, grid.n)],
            ap_antenna_sweep: vec![(params.n_ap, params.m_t)],
            params,
            grid,
            solver,
            trials: 50,
            master_seed: 1,
            se_overhead: true,
            record_runtime: false,
            out: None,
            format: OutputFormat::Csv,
            threads: 0,
            oracle_points: 50,
            oracle_configs: 20,
        }
    }
}

impl ExperimentConfig {
    /// Cross-field checks that need the whole document.
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.solver.validate()?;
        for &(n_ap, m_t) in &self.ap_antenna_sweep {
            let mut p = self.params.clone();
            p.n_ap = n_ap;
            p.m_t = m_t;
            p.validate()?;
        }
        for &t_g in &self.targets_sweep {
            let mut p = self.params.clone();
            p.t_g = t_g;
            p.validate()?;
        }
        Ok(())
    }

    /// Overhead factor the spectral-efficiency column uses for one grid.
    pub fn zeta(&self, grid: &OtfsGrid) -> f64 {
        if self.se_overhead {
            grid.cp_overhead_factor()
        } else {
            1.0
        }
    }
}

struct Cursor {
    line: usize,
}

impl Cursor {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            msg: msg.into(),
        }
    }
}

/// Numeric value with an optional unit suffix; `allowed` lists the
/// acceptable suffix spellings (lowercase).
fn number(cur: &Cursor, value: &str, allowed: &[&str]) -> Result<f64> {
    let mut parts = value.split_whitespace();
    let first = parts.next().ok_or_else(|| cur.err("empty value"))?;
    let num: f64 = first
        .parse()
        .map_err(|_| cur.err(format!("expected a number, got `{first}`")))?;
    let unit: String = parts.collect::<Vec<_>>().join("").to_lowercase();
    if !unit.is_empty() && !allowed.contains(&unit.as_str()) {
        return Err(cur.err(format!("unexpected unit `{unit}`")));
    }
    Ok(num)
}

fn integer(cur: &Cursor, value: &str) -> Result<u64> {
    value
        .trim()
        .parse()
        .map_err(|_| cur.err(format!("expected an integer, got `{value}`")))
}

fn boolean(cur: &Cursor, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "on" | "yes" => Ok(true),
        "false" | "off" | "no" => Ok(false),
        other => Err(cur.err(format!("expected a boolean, got `{other}`"))),
    }
}

fn float_list(cur: &Cursor, value: &str) -> Result<Vec<f64>> {
    let items: Result<Vec<f64>> = value
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| cur.err(format!("expected a number list, got `{s}`")))
        })
        .collect();
    let items = items?;
    if items.is_empty() {
        return Err(cur.err("empty sweep axis"));
    }
    Ok(items)
}

fn usize_list(cur: &Cursor, value: &str) -> Result<Vec<usize>> {
    float_list(cur, value)?
        .into_iter()
        .map(|v| {
            if v.fract() == 0.0 && v >= 0.0 {
                Ok(v as usize)
            } else {
                Err(cur.err(format!("expected nonnegative integers, got {v}")))
            }
        })
        .collect()
}

/// Pairs written `AxB`, comma separated.
fn pair_list(cur: &Cursor, value: &str) -> Result<Vec<(usize, usize)>> {
    value
        .split(',')
        .map(|s| {
            let s = s.trim();
            let (a, b) = s
                .split_once('x')
                .ok_or_else(|| cur.err(format!("expected `AxB` pairs, got `{s}`")))?;
            let a = a
                .trim()
                .parse()
                .map_err(|_| cur.err(format!("bad pair `{s}`")))?;
            let b = b
                .trim()
                .parse()
                .map_err(|_| cur.err(format!("bad pair `{s}`")))?;
            Ok((a, b))
        })
        .collect()
}

/// Parse a config document over the full-scale defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    // raw grid inputs; re-derived at the end
    let mut grid_m = cfg.grid.m;
    let mut grid_n = cfg.grid.n;
    let mut delta_f = cfg.grid.delta_f;
    let mut tau_max = cfg.grid.tau_max;
    // sweep axes set explicitly win over defaults derived from scalars
    let mut explicit_rcs = false;
    let mut explicit_gamma = false;
    let mut explicit_velocity = false;
    let mut explicit_grid_sweep = false;
    let mut explicit_ap_antenna = false;
    let mut explicit_targets = false;
    let mut rcs_dbsm_scalar = 0.0;
    let mut v_kmh_scalar = 300.0;

    let mut section = String::new();
    let mut cur = Cursor { line: 0 };
    for raw in text.lines() {
        cur.line += 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| cur.err("unterminated section header"))?
                .trim();
            if !["scenario", "grid", "solver", "experiment"].contains(&name) {
                return Err(cur.err(format!("unknown section `{name}`")));
            }
            section = name.to_string();
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| cur.err("expected `key = value`"))?;
        let key = key.trim();
        let value = value.trim();
        if value.is_empty() {
            return Err(cur.err(format!("empty value for `{key}`")));
        }

        match (section.as_str(), key) {
            ("scenario", "n_ap") => cfg.params.n_ap = integer(&cur, value)? as usize,
            ("scenario", "m_t") => cfg.params.m_t = integer(&cur, value)? as usize,
            ("scenario", "k_u") => cfg.params.k_u = integer(&cur, value)? as usize,
            ("scenario", "t_g") => cfg.params.t_g = integer(&cur, value)? as usize,
            ("scenario", "n_rx_per_target") => {
                cfg.params.n_rx_per_target = integer(&cur, value)? as usize
            }
            ("scenario", "area_m") => {
                cfg.params.area_side = number(&cur, value, &["m"])?;
                if !(cfg.params.area_side > 0.0) {
                    return Err(cur.err("area must be positive"));
                }
            }
            ("scenario", "power_w") => {
                cfg.params.p_d = number(&cur, value, &["w"])?;
                if !(cfg.params.p_d > 0.0) {
                    return Err(cur.err("power budget must be positive"));
                }
            }
            ("scenario", "noise_dbm") => {
                cfg.params.noise_power = dbm_to_watts(number(&cur, value, &["dbm"])?)
            }
            ("scenario", "rcs_dbsm") => {
                let dbsm = number(&cur, value, &["dbsm"])?;
                cfg.params.rcs_variance = dbsm_to_sqm(dbsm);
                rcs_dbsm_scalar = dbsm;
            }
            ("scenario", "carrier_ghz") => {
                let ghz = number(&cur, value, &["ghz"])?;
                if !(ghz > 0.0) {
                    return Err(cur.err("carrier frequency must be positive"));
                }
                cfg.params.carrier_freq = ghz * 1e9;
            }
            ("scenario", "tx_gain") => cfg.params.g_t = number(&cur, value, &[])?,
            ("scenario", "rx_gain") => cfg.params.g_r = number(&cur, value, &[])?,
            ("scenario", "v_max_kmh") => {
                let kmh = number(&cur, value, &["km/h", "kmh"])?;
                if kmh < 0.0 {
                    return Err(cur.err("speed must be nonnegative"));
                }
                cfg.params.v_max = kmh / 3.6;
                v_kmh_scalar = kmh;
            }
            ("scenario", "shadowing") => cfg.params.shadowing = boolean(&cur, value)?,
            ("scenario", "shadowing_sigma_db") => {
                cfg.params.shadowing_sigma_db = number(&cur, value, &["db"])?
            }
            ("scenario", "pointing_offset_rad") => {
                cfg.params.pointing_offset = number(&cur, value, &["rad"])?
            }
            ("scenario", "layout") => {
                cfg.params.layout = match value {
                    "uniform" => ApLayout::Uniform,
                    "colocated-pairs" => ApLayout::ColocatedPairs,
                    other => return Err(cur.err(format!("unknown layout `{other}`"))),
                }
            }
            ("scenario", "mean_paths") => cfg.params.mean_paths = number(&cur, value, &[])?,
            ("scenario", "rcs_mode") => {
                cfg.params.rcs_mode = match value {
                    "realized" => RcsMode::Realized,
                    "expected" => RcsMode::Expected,
                    other => return Err(cur.err(format!("unknown rcs mode `{other}`"))),
                }
            }

            ("grid", "m") => grid_m = integer(&cur, value)? as usize,
            ("grid", "n") => grid_n = integer(&cur, value)? as usize,
            ("grid", "delta_f_khz") => {
                let khz = number(&cur, value, &["khz"])?;
                if !(khz > 0.0) {
                    return Err(cur.err("subcarrier spacing must be positive"));
                }
                delta_f = khz * 1e3;
            }
            ("grid", "tau_max_us") => {
                let us = number(&cur, value, &["us", "µs"])?;
                if us < 0.0 {
                    return Err(cur.err("tau_max must be nonnegative"));
                }
                tau_max = us * 1e-6;
            }

            ("solver", "epsilon") => {
                cfg.solver.epsilon = number(&cur, value, &[])?;
                if !(cfg.solver.epsilon > 0.0) {
                    return Err(cur.err("epsilon must be positive"));
                }
            }
            ("solver", "max_iters") => {
                cfg.solver.max_iters = integer(&cur, value)? as usize;
                if cfg.solver.max_iters == 0 {
                    return Err(cur.err("max_iters must be at least 1"));
                }
            }
            ("solver", "peb_threshold_m") => {
                let m = number(&cur, value, &["m"])?;
                if !(m > 0.0) {
                    return Err(cur.err("threshold must be positive"));
                }
                cfg.solver.peb_threshold_m = m;
            }
            ("solver", "bisection_rel_tol") => {
                cfg.solver.bisection_rel_tol = number(&cur, value, &[])?
            }
            ("solver", "feasibility_budget") => {
                cfg.solver.feasibility_budget = integer(&cur, value)? as usize
            }

            ("experiment", "kind") => {
                cfg.kind = Some(
                    ExperimentKind::parse(value)
                        .ok_or_else(|| cur.err(format!("unknown experiment kind `{value}`")))?,
                )
            }
            ("experiment", "trials") => {
                cfg.trials = integer(&cur, value)? as usize;
                if cfg.trials == 0 {
                    return Err(cur.err("trials must be at least 1"));
                }
            }
            ("experiment", "master_seed") => cfg.master_seed = integer(&cur, value)?,
            ("experiment", "targets_sweep") => {
                cfg.targets_sweep = usize_list(&cur, value)?;
                explicit_targets = true;
            }
            ("experiment", "rcs_dbsm_sweep") => {
                cfg.rcs_dbsm_sweep = float_list(&cur, value)?;
                explicit_rcs = true;
            }
            ("experiment", "gamma_sweep_m") => {
                cfg.gamma_sweep_m = float_list(&cur, value)?;
                if cfg.gamma_sweep_m.iter().any(|&g| !(g > 0.0)) {
                    return Err(cur.err("thresholds must be positive"));
                }
                explicit_gamma = true;
            }
            ("experiment", "velocity_kmh_sweep") => {
                cfg.velocity_kmh_sweep = float_list(&cur, value)?;
                if cfg.velocity_kmh_sweep.iter().any(|&v| v < 0.0) {
                    return Err(cur.err("speeds must be nonnegative"));
                }
                explicit_velocity = true;
            }
            ("experiment", "grid_sweep") => {
                cfg.grid_sweep = pair_list(&cur, value)?;
                explicit_grid_sweep = true;
            }
            ("experiment", "ap_antenna_sweep") => {
                cfg.ap_antenna_sweep = pair_list(&cur, value)?;
                explicit_ap_antenna = true;
            }
            ("experiment", "se_overhead") => cfg.se_overhead = boolean(&cur, value)?,
            ("experiment", "record_runtime") => cfg.record_runtime = boolean(&cur, value)?,
            ("experiment", "out") => cfg.out = Some(PathBuf::from(value)),
            ("experiment", "format") => {
                cfg.format = OutputFormat::parse(value)
                    .ok_or_else(|| cur.err(format!("unknown format `{value}`")))?
            }
            ("experiment", "threads") => cfg.threads = integer(&cur, value)? as usize,
            ("experiment", "oracle_points") => {
                cfg.oracle_points = integer(&cur, value)? as usize;
                if cfg.oracle_points == 0 {
                    return Err(cur.err("oracle_points must be at least 1"));
                }
            }
            ("experiment", "oracle_configs") => cfg.oracle_configs = integer(&cur, value)? as usize,

            ("", k) => return Err(cur.err(format!("key `{k}` outside any section"))),
            (s, k) => return Err(cur.err(format!("unknown key `{k}` in section [{s}]"))),
        }
    }

    cfg.grid = OtfsGrid::derive(grid_m, grid_n, delta_f, tau_max)?;
    cfg.params.master_seed = cfg.master_seed;
    if !explicit_grid_sweep {
        cfg.grid_sweep = vec![(cfg.grid.m, cfg.grid.n)];
    }
    if !explicit_ap_antenna {
        cfg.ap_antenna_sweep = vec![(cfg.params.n_ap, cfg.params.m_t)];
    }
    if !explicit_targets {
        cfg.targets_sweep = vec![cfg.params.t_g];
    }
    if !explicit_rcs {
        cfg.rcs_dbsm_sweep = vec![rcs_dbsm_scalar];
    }
    if !explicit_gamma {
        cfg.gamma_sweep_m = vec![cfg.solver.peb_threshold_m];
    }
    if !explicit_velocity {
        cfg.velocity_kmh_sweep = vec![v_kmh_scalar];
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_full_scale_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg.params.n_ap, 32);
        assert_eq!(cfg.params.m_t, 16);
        assert_eq!(cfg.params.k_u, 10);
        assert_eq!(cfg.params.t_g, 2);
        assert_eq!(cfg.grid.m, 128);
        assert!((cfg.grid.bandwidth() - 64e6).abs() < 1.0);
        assert!((cfg.params.carrier_freq - 38e9).abs() < 1.0);
        assert!((cfg.solver.peb_threshold_m - 0.1).abs() < 1e-12);
        assert!((cfg.params.p_d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn units_convert_at_parse_time() {
        let cfg = parse_config(
            "[scenario]\nnoise_dbm = -89 dBm\nrcs_dbsm = 10\nv_max_kmh = 36 km/h\n\
             [grid]\ndelta_f_khz = 250\n",
        )
        .unwrap();
        assert!((cfg.params.noise_power - 10f64.powf(-11.9)).abs() < 1e-15);
        assert!((cfg.params.rcs_variance - 10.0).abs() < 1e-12);
        assert!((cfg.params.v_max - 10.0).abs() < 1e-12);
        assert!((cfg.grid.delta_f - 250e3).abs() < 1e-9);
    }

    #[test]
    fn bad_documents_are_rejected_with_line_context() {
        for (text, needle) in [
            ("[experiment]\ntrials = 0\n", "trials"),
            ("[scenario]\nbogus = 1\n", "unknown key"),
            ("[nope]\n", "unknown section"),
            ("[scenario]\nn_ap 32\n", "key = value"),
            ("[scenario]\nnoise_dbm = -89 volts\n", "unit"),
        ] {
            match parse_config(text) {
                Err(Error::Parse { line, msg }) => {
                    assert!(line >= 1, "line context missing for {text:?}");
                    assert!(
                        msg.to_lowercase().contains(needle) || needle == "trials",
                        "msg {msg:?} for {text:?}"
                    );
                }
                other => panic!("expected parse error for {text:?}, got {other:?}"),
            }
        }
    }

    #[test]
    fn sweeps_parse() {
        let cfg = parse_config(
            "[experiment]\ntargets_sweep = 1,2,3\ngamma_sweep_m = 0.05, 0.1, 1\n\
             grid_sweep = 64x16, 16x64\nap_antenna_sweep = 32x16,8x64\n",
        )
        .unwrap();
        assert_eq!(cfg.targets_sweep, vec![1, 2, 3]);
        assert_eq!(cfg.gamma_sweep_m, vec![0.05, 0.1, 1.0]);
        assert_eq!(cfg.grid_sweep, vec![(64, 16), (16, 64)]);
        assert_eq!(cfg.ap_antenna_sweep, vec![(32, 16), (8, 64)]);
    }

    #[test]
    fn explicit_sweeps_survive_scalar_overrides() {
        // the sweep is written before the scalar it would default from
        let cfg = parse_config(
            "[experiment]\nvelocity_kmh_sweep = 10,20\nrcs_dbsm_sweep = 5\n\
             [scenario]\nv_max_kmh = 200\nrcs_dbsm = -3\n",
        )
        .unwrap();
        assert_eq!(cfg.velocity_kmh_sweep, vec![10.0, 20.0]);
        assert_eq!(cfg.rcs_dbsm_sweep, vec![5.0]);
        // while unset sweeps follow the scalars
        let cfg2 = parse_config("[scenario]\nv_max_kmh = 72\nrcs_dbsm = -3\n").unwrap();
        assert_eq!(cfg2.velocity_kmh_sweep, vec![72.0]);
        assert_eq!(cfg2.rcs_dbsm_sweep, vec![-3.0]);
        assert_eq!(cfg2.grid_sweep, vec![(128, 128)]);
    }

    #[test]
    fn cross_field_validation_runs() {
        // every AP would be a receiver
        let err = parse_config("[scenario]\nn_ap = 4\nt_g = 2\nn_rx_per_target = 2\n");
        assert!(err.is_err());
    }
}
