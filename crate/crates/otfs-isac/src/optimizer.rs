//! Max-min fairness power allocation under per-AP power and per-target
//! position-bound constraints.
//!
//! The outer loop alternates the fractional-programming auxiliary update
//! with a convex subproblem in the square-root user coefficients. The
//! subproblem runs a bisection on the common surrogate level `z`; each
//! feasibility query descends a max-violation merit function by projected
//! subgradient steps with backtracking on the unit box. Warm starts carry
//! a certified feasible point between levels, so the reported level
//! trajectory is non-decreasing by construction.

use nalgebra::Matrix2;

use crate::comm::{power_used, sinr, LinkStats, PowerAllocation};
use crate::error::{Error, Result};
use crate::fisher::peb_from_fim;

/// Stopping and tolerance knobs for the allocator.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Outer-loop stop: quit once the surrogate level moves less than this.
    pub epsilon: f64,
    /// Outer-loop iteration cap.
    pub max_iters: usize,
    /// Sensing bound threshold in meters of PEB; squared into a variance
    /// threshold internally.
    pub peb_threshold_m: f64,
    /// Relative window at which the bisection on the level stops.
    pub bisection_rel_tol: f64,
    /// Projected-gradient step budget per feasibility query.
    pub feasibility_budget: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-4,
            max_iters: 50,
            peb_threshold_m: 0.1,
            bisection_rel_tol: 1e-6,
            feasibility_budget: 300,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || self.max_iters < 1 {
            return Err(Error::Config(
                "solver needs epsilon > 0 and at least one iteration".into(),
            ));
        }
        if !(self.bisection_rel_tol > 0.0) || self.feasibility_budget == 0 {
            return Err(Error::Config(
                "bisection tolerance and feasibility budget must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Linear model of the approximate per-target position information:
/// `F_t(alloc) = sum_p eta_pt * coeff[t][p]`.
#[derive(Debug, Clone)]
pub struct SensingModel {
    pub coeff: Vec<Vec<Matrix2<f64>>>,
}

impl SensingModel {
    pub fn n_targets(&self) -> usize {
        self.coeff.len()
    }

    pub fn fim(&self, target: usize, alloc: &PowerAllocation) -> Matrix2<f64> {
        let mut f = Matrix2::zeros();
        for (p, c) in self.coeff[target].iter().enumerate() {
            f += c * alloc.target(p, target);
        }
        f
    }

    /// Trace-inverse bound; infinite when the information is singular.
    pub fn crlb(&self, target: usize, alloc: &PowerAllocation) -> f64 {
        peb_from_fim(&self.fim(target, alloc)).crlb
    }
}

/// Position-bound constraint check of one target: the approximate bound
/// and whether it meets the threshold (inclusive).
pub fn sensing_constraint(
    alloc: &PowerAllocation,
    target: usize,
    model: &SensingModel,
    gamma_crlb: f64,
) -> (f64, bool) {
    let crlb = model.crlb(target, alloc);
    (crlb, crlb <= gamma_crlb)
}

/// Equal-power baseline: every beam of AP `p` gets
/// `p_d / (sum_q b_pq + sum_t b_pt)`, which uses the budget exactly.
pub fn equal_power(stats: &LinkStats, p_d: f64) -> Result<PowerAllocation> {
    let mut alloc = PowerAllocation::zeros(stats.n_tx, stats.k_u, stats.t_g);
    for p in 0..stats.n_tx {
        let denom: f64 =
            stats.b_user[p].iter().sum::<f64>() + stats.b_target[p].iter().sum::<f64>();
        if !(denom > 0.0) {
            return Err(Error::Config(format!(
                "AP {p} has no beam with positive trace"
            )));
        }
        let eta = p_d / denom;
        for q in 0..stats.k_u {
            alloc.set_user(p, q, eta);
        }
        for t in 0..stats.t_g {
            alloc.set_target(p, t, eta);
        }
    }
    Ok(alloc)
}

/// Full SINR denominator of user `q`.
fn sinr_denominator(q: usize, alloc: &PowerAllocation, stats: &LinkStats) -> f64 {
    let mut d = stats.noise_power;
    for p in 0..stats.n_tx {
        for q2 in 0..stats.k_u {
            d += alloc.user(p, q2) * stats.a_user[p][q][q2];
        }
        for t in 0..stats.t_g {
            d += alloc.target(p, t) * stats.a_target[p][q][t];
        }
    }
    d
}

/// Fractional-programming auxiliary variable of user `q` at a fixed
/// allocation: coherent amplitude over the full SINR denominator.
pub fn auxiliary_update(q: usize, alloc: &PowerAllocation, stats: &LinkStats) -> f64 {
    let mut amp = 0.0;
    for p in 0..stats.n_tx {
        amp += alloc.user(p, q).max(0.0).sqrt() * stats.b_user[p][q];
    }
    amp / sinr_denominator(q, alloc, stats)
}

/// Concave surrogate of user `q`'s SINR at auxiliary value `y`.
pub fn surrogate(q: usize, alloc: &PowerAllocation, y: f64, stats: &LinkStats) -> f64 {
    let mut amp = 0.0;
    for p in 0..stats.n_tx {
        amp += alloc.user(p, q).max(0.0).sqrt() * stats.b_user[p][q];
    }
    2.0 * y * amp - y * y * sinr_denominator(q, alloc, stats)
}

/// Solver outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIters,
    Infeasible,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIters => "max-iters",
            SolveStatus::Infeasible => "infeasible",
        }
    }
}

/// Result of one allocation solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub allocation: PowerAllocation,
    /// Surrogate level after each outer iteration; non-decreasing.
    pub z_trajectory: Vec<f64>,
    pub iterations: usize,
    pub status: SolveStatus,
    /// Per-AP power drawn by the final allocation.
    pub power_used: Vec<f64>,
    /// Approximate position bound per target at the final allocation.
    pub crlb: Vec<f64>,
    /// Per-user SINR at the final allocation.
    pub user_sinr: Vec<f64>,
    pub min_sinr: f64,
    /// Which constraint blocked an infeasible instance.
    pub binding: Option<String>,
    /// Exact-pipeline bound per target, filled by callers that have the
    /// full snapshot at hand.
    pub exact_crlb: Vec<f64>,
}

/// Internal: the subproblem in unit-box coordinates. User coordinates are
/// square-root coefficients over their single-beam power cap, target
/// coordinates are linear over theirs, so every per-AP power constraint
/// becomes `sum x_user^2 + sum x_target <= 1`.
struct Subproblem<'a> {
    stats: &'a LinkStats,
    gamma_crlb: f64,
    p_d: f64,
    /// Desired-signal amplitude per unit user coordinate.
    amp: Vec<Vec<f64>>,
    /// Interference into user q per squared user coordinate (p, q').
    int_user: Vec<Vec<Vec<f64>>>,
    /// Interference into user q per target coordinate (p, t).
    int_target: Vec<Vec<Vec<f64>>>,
    /// Scaled sensing coefficient matrices, `F_t = sum_p x_pt * sens[t][p]`.
    sens: Vec<Vec<Matrix2<f64>>>,
    y: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Active {
    Power(usize),
    Sensing(usize),
    User(usize),
}

impl<'a> Subproblem<'a> {
    fn new(stats: &'a LinkStats, model: &SensingModel, gamma_crlb: f64, p_d: f64) -> Self {
        let floor = 1e-300;
        let mut amp = vec![vec![0.0; stats.k_u]; stats.n_tx];
        let mut int_user = vec![vec![vec![0.0; stats.k_u]; stats.k_u]; stats.n_tx];
        let mut int_target = vec![vec![vec![0.0; stats.t_g]; stats.k_u]; stats.n_tx];
        for p in 0..stats.n_tx {
            for q in 0..stats.k_u {
                amp[p][q] = (p_d * stats.b_user[p][q]).max(0.0).sqrt();
                for q2 in 0..stats.k_u {
                    int_user[p][q][q2] =
                        p_d * stats.a_user[p][q][q2] / stats.b_user[p][q2].max(floor);
                }
                for t in 0..stats.t_g {
                    int_target[p][q][t] =
                        p_d * stats.a_target[p][q][t] / stats.b_target[p][t].max(floor);
                }
            }
        }
        let mut sens = vec![vec![Matrix2::zeros(); stats.n_tx]; stats.t_g];
        for t in 0..stats.t_g {
            for p in 0..stats.n_tx {
                sens[t][p] = model.coeff[t][p] * (p_d / stats.b_target[p][t].max(floor));
            }
        }
        Self {
            stats,
            gamma_crlb,
            p_d,
            amp,
            int_user,
            int_target,
            sens,
            y: vec![0.0; stats.k_u],
        }
    }

    fn dim(&self) -> usize {
        self.stats.n_tx * (self.stats.k_u + self.stats.t_g)
    }

    #[inline]
    fn iu(&self, p: usize, q: usize) -> usize {
        p * (self.stats.k_u + self.stats.t_g) + q
    }

    #[inline]
    fn it(&self, p: usize, t: usize) -> usize {
        p * (self.stats.k_u + self.stats.t_g) + self.stats.k_u + t
    }

    fn to_alloc(&self, x: &[f64]) -> PowerAllocation {
        let floor = 1e-300;
        let mut alloc = PowerAllocation::zeros(self.stats.n_tx, self.stats.k_u, self.stats.t_g);
        for p in 0..self.stats.n_tx {
            for q in 0..self.stats.k_u {
                let v = x[self.iu(p, q)];
                alloc.set_user(p, q, v * v * self.p_d / self.stats.b_user[p][q].max(floor));
            }
            for t in 0..self.stats.t_g {
                alloc.set_target(
                    p,
                    t,
                    x[self.it(p, t)] * self.p_d / self.stats.b_target[p][t].max(floor),
                );
            }
        }
        alloc
    }

    fn unit_coordinates(&self, alloc: &PowerAllocation) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        for p in 0..self.stats.n_tx {
            for q in 0..self.stats.k_u {
                x[self.iu(p, q)] = (alloc.user(p, q) * self.stats.b_user[p][q] / self.p_d)
                    .max(0.0)
                    .sqrt();
            }
            for t in 0..self.stats.t_g {
                x[self.it(p, t)] = alloc.target(p, t) * self.stats.b_target[p][t] / self.p_d;
            }
        }
        x
    }

    fn power_violation(&self, x: &[f64], p: usize) -> f64 {
        let mut total = 0.0;
        for q in 0..self.stats.k_u {
            let v = x[self.iu(p, q)];
            total += v * v;
        }
        for t in 0..self.stats.t_g {
            total += x[self.it(p, t)];
        }
        total - 1.0
    }

    fn sensing_fim(&self, x: &[f64], t: usize) -> Matrix2<f64> {
        let mut f = Matrix2::zeros();
        for p in 0..self.stats.n_tx {
            f += self.sens[t][p] * x[self.it(p, t)];
        }
        f
    }

    fn sensing_violation(&self, x: &[f64], t: usize) -> f64 {
        let crlb = peb_from_fim(&self.sensing_fim(x, t)).crlb;
        crlb / self.gamma_crlb - 1.0
    }

    fn surrogate_value(&self, x: &[f64], q: usize) -> f64 {
        let y = self.y[q];
        let mut amp = 0.0;
        let mut denom = self.stats.noise_power;
        for p in 0..self.stats.n_tx {
            amp += self.amp[p][q] * x[self.iu(p, q)];
            for q2 in 0..self.stats.k_u {
                let v = x[self.iu(p, q2)];
                denom += self.int_user[p][q][q2] * v * v;
            }
            for t in 0..self.stats.t_g {
                denom += self.int_target[p][q][t] * x[self.it(p, t)];
            }
        }
        2.0 * y * amp - y * y * denom
    }

    /// Max constraint violation at level `z` and the set of constraints
    /// within `band` of the max.
    fn merit(&self, x: &[f64], z: f64) -> (f64, Vec<Active>) {
        let mut worst = f64::NEG_INFINITY;
        let mut values: Vec<(f64, Active)> = Vec::new();
        for p in 0..self.stats.n_tx {
            let v = self.power_violation(x, p);
            values.push((v, Active::Power(p)));
            worst = worst.max(v);
        }
        for t in 0..self.stats.t_g {
            let v = self.sensing_violation(x, t);
            values.push((v, Active::Sensing(t)));
            worst = worst.max(v);
        }
        if z.is_finite() {
            let scale = z.abs().max(1e-300);
            for q in 0..self.stats.k_u {
                let v = (z - self.surrogate_value(x, q)) / scale;
                values.push((v, Active::User(q)));
                worst = worst.max(v);
            }
        }
        let band = 0.05 * worst.abs() + 1e-12;
        let active = values
            .into_iter()
            .filter(|(v, _)| worst.is_infinite() && v.is_infinite() || *v >= worst - band)
            .map(|(_, id)| id)
            .collect();
        (worst, active)
    }

    /// Subgradient of one constraint's violation.
    fn gradient(&self, x: &[f64], z: f64, id: Active, out: &mut [f64]) {
        out.iter_mut().for_each(|g| *g = 0.0);
        match id {
            Active::Power(p) => {
                for q in 0..self.stats.k_u {
                    out[self.iu(p, q)] = 2.0 * x[self.iu(p, q)];
                }
                for t in 0..self.stats.t_g {
                    out[self.it(p, t)] = 1.0;
                }
            }
            Active::Sensing(t) => {
                // d tr(F^-1)/d x_pt = -tr(F^-1 C F^-1); regularize a singular
                // information matrix so descent still has a direction
                let mut f = self.sensing_fim(x, t);
                let det = f[(0, 0)] * f[(1, 1)] - f[(0, 1)] * f[(1, 0)];
                if !(det > 1e-300) {
                    let bump = 1e-9 * (f[(0, 0)] + f[(1, 1)]).abs().max(1e-9);
                    f[(0, 0)] += bump;
                    f[(1, 1)] += bump;
                }
                if let Some(inv) = f.try_inverse() {
                    for p in 0..self.stats.n_tx {
                        let m = inv * self.sens[t][p] * inv;
                        out[self.it(p, t)] = -m.trace() / self.gamma_crlb;
                    }
                }
            }
            Active::User(q) => {
                let y = self.y[q];
                let scale = z.abs().max(1e-300);
                for p in 0..self.stats.n_tx {
                    for q2 in 0..self.stats.k_u {
                        let mut g = y * y * 2.0 * x[self.iu(p, q2)] * self.int_user[p][q][q2];
                        if q2 == q {
                            g -= 2.0 * y * self.amp[p][q];
                        }
                        out[self.iu(p, q2)] += g / scale;
                    }
                    for t in 0..self.stats.t_g {
                        out[self.it(p, t)] += y * y * self.int_target[p][q][t] / scale;
                    }
                }
            }
        }
    }

    /// Projected subgradient descent of the max violation; returns as soon
    /// as a certified point (violation <= 0) is found.
    fn seek_feasible(&self, x0: &[f64], z: f64, budget: usize) -> (Vec<f64>, f64) {
        let dim = self.dim();
        let clamp = |x: &mut Vec<f64>| {
            for v in x.iter_mut() {
                *v = v.clamp(0.0, 1.0);
            }
        };
        let mut x = x0.to_vec();
        clamp(&mut x);
        let (mut value, mut active) = self.merit(&x, z);
        let mut best_x = x.clone();
        let mut best_v = value;
        if value <= 0.0 {
            return (x, value);
        }

        let mut grad = vec![0.0; dim];
        let mut single = vec![0.0; dim];
        let mut step = 0.25;
        for _ in 0..budget {
            // averaged subgradient over the near-active set
            grad.iter_mut().for_each(|g| *g = 0.0);
            for id in &active {
                self.gradient(&x, z, *id, &mut single);
                for (g, s) in grad.iter_mut().zip(&single) {
                    *g += s;
                }
            }
            let inv = 1.0 / active.len() as f64;
            grad.iter_mut().for_each(|g| *g *= inv);
            let norm2: f64 = grad.iter().map(|g| g * g).sum();
            if norm2 < 1e-30 {
                break;
            }
            let scale = norm2.sqrt();

            let mut accepted = false;
            let mut t = step;
            for _ in 0..40 {
                let mut x_new = x.clone();
                for i in 0..dim {
                    x_new[i] -= t / scale * grad[i];
                }
                clamp(&mut x_new);
                let (v_new, a_new) = self.merit(&x_new, z);
                if v_new < value - 1e-6 * t * scale || (v_new <= 0.0 && v_new < value) {
                    x = x_new;
                    value = v_new;
                    active = a_new;
                    step = (t * 1.8).min(0.5);
                    accepted = true;
                    break;
                }
                t *= 0.5;
                if t < 1e-16 {
                    break;
                }
            }
            if value < best_v {
                best_v = value;
                best_x = x.clone();
            }
            if value <= 0.0 {
                return (x, value);
            }
            if !accepted {
                break;
            }
        }
        (best_x, best_v)
    }

    /// Largest surrogate level any user could reach at the current
    /// auxiliaries: ignore interference, keep noise, cap every coordinate
    /// at full per-beam power. The SINR-style bound `A^2 / noise` also
    /// holds for every auxiliary value, so take the smaller.
    fn level_upper_bound(&self) -> f64 {
        let mut bound = f64::INFINITY;
        for q in 0..self.stats.k_u {
            let total: f64 = (0..self.stats.n_tx).map(|p| self.amp[p][q]).sum();
            let sinr_bound = total * total / self.stats.noise_power;
            let y = self.y[q];
            let surrogate_bound = 2.0 * y * total - y * y * self.stats.noise_power;
            bound = bound.min(sinr_bound.min(surrogate_bound));
        }
        bound
    }
}

/// One convex subproblem at fixed auxiliary values: maximize the common
/// surrogate level by bisection, carrying a certified feasible point.
/// `warm` must be feasible at level `z_lo`; returns the best certified
/// `(allocation, level)`.
#[allow(clippy::too_many_arguments)]
pub fn solve_subproblem(
    y: &[f64],
    stats: &LinkStats,
    model: &SensingModel,
    gamma_crlb: f64,
    p_d: f64,
    cfg: &SolverConfig,
    warm: &PowerAllocation,
    z_lo: f64,
) -> (PowerAllocation, f64) {
    let mut sub = Subproblem::new(stats, model, gamma_crlb, p_d);
    sub.y = y.to_vec();
    let mut x_best = sub.unit_coordinates(warm);
    let mut lo = z_lo;
    let mut hi = sub.level_upper_bound().max(lo);
    for _ in 0..80 {
        if hi - lo <= cfg.bisection_rel_tol * hi.abs().max(1e-300) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let (x, v) = sub.seek_feasible(&x_best, mid, cfg.feasibility_budget);
        if v <= 0.0 {
            lo = mid;
            x_best = x;
        } else {
            hi = mid;
        }
    }
    (sub.to_alloc(&x_best), lo)
}

/// Full power allocation: equal-power start (or a caller-provided warm
/// start), alternating auxiliary updates and subproblem solves until the
/// level stalls or the iteration cap hits. Infeasible instances are
/// first-class outcomes, not errors.
pub fn allocate_power(
    stats: &LinkStats,
    model: &SensingModel,
    cfg: &SolverConfig,
    p_d: f64,
    warm_start: Option<&PowerAllocation>,
) -> Result<SolveReport> {
    cfg.validate()?;
    let gamma_crlb = cfg.peb_threshold_m * cfg.peb_threshold_m;
    let start = match warm_start {
        Some(a) => a.clone(),
        None => equal_power(stats, p_d)?,
    };

    let report_for =
        |alloc: &PowerAllocation, traj: Vec<f64>, status: SolveStatus, binding: Option<String>| {
            let user_sinr: Vec<f64> = (0..stats.k_u).map(|q| sinr(q, alloc, stats)).collect();
            let min_sinr = user_sinr.iter().copied().fold(f64::INFINITY, f64::min);
            SolveReport {
                allocation: alloc.clone(),
                iterations: traj.len(),
                z_trajectory: traj,
                status,
                power_used: (0..stats.n_tx)
                    .map(|p| power_used(p, alloc, stats))
                    .collect(),
                crlb: (0..stats.t_g).map(|t| model.crlb(t, alloc)).collect(),
                user_sinr,
                min_sinr,
                binding,
                exact_crlb: Vec::new(),
            }
        };

    if !(cfg.peb_threshold_m > 0.0) {
        return Ok(report_for(
            &start,
            Vec::new(),
            SolveStatus::Infeasible,
            Some("nonpositive position-bound threshold".into()),
        ));
    }

    let sub = Subproblem::new(stats, model, gamma_crlb, p_d);
    let mut x = sub.unit_coordinates(&start);

    // phase 0: certify power + sensing feasibility before touching levels
    let (v0, _) = sub.merit(&x, f64::NEG_INFINITY);
    if v0 > 0.0 {
        let (x1, v1) = sub.seek_feasible(&x, f64::NEG_INFINITY, 4 * cfg.feasibility_budget);
        if v1 > 0.0 {
            let alloc = sub.to_alloc(&x1);
            let (_, active) = sub.merit(&x1, f64::NEG_INFINITY);
            let binding = active.first().map(|id| match id {
                Active::Power(p) => format!("power budget at transmitter {p}"),
                Active::Sensing(t) => format!(
                    "position bound of target {t}: reached {} > threshold {}",
                    model.crlb(*t, &alloc),
                    gamma_crlb
                ),
                Active::User(q) => format!("surrogate of user {q}"),
            });
            return Ok(report_for(
                &alloc,
                Vec::new(),
                SolveStatus::Infeasible,
                binding,
            ));
        }
        x = x1;
    }

    let mut alloc = sub.to_alloc(&x);
    let mut trajectory: Vec<f64> = Vec::new();
    let mut z_prev = 0.0;
    let mut status = SolveStatus::MaxIters;
    for _ in 0..cfg.max_iters {
        let y: Vec<f64> = (0..stats.k_u)
            .map(|q| auxiliary_update(q, &alloc, stats))
            .collect();
        // the current point certifies this level under the fresh auxiliaries
        let z_lo = (0..stats.k_u)
            .map(|q| surrogate(q, &alloc, y[q], stats))
            .fold(f64::INFINITY, f64::min)
            .max(0.0);
        let (next, z) = solve_subproblem(&y, stats, model, gamma_crlb, p_d, cfg, &alloc, z_lo);
        alloc = next;
        trajectory.push(z);
        // epsilon reads as a relative tolerance: achieved levels span many
        // orders of magnitude across scenario scales
        if (z - z_prev).abs() <= cfg.epsilon * z.abs().max(1e-300) {
            status = SolveStatus::Converged;
            break;
        }
        z_prev = z;
    }

    Ok(report_for(&alloc, trajectory, status, None))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_link_stats() -> LinkStats {
        LinkStats {
            n_tx: 1,
            k_u: 1,
            t_g: 0,
            m_t: 2,
            resolvable: vec![vec![1]],
            b_user: vec![vec![2.0]],
            b_target: vec![vec![]],
            a_user: vec![vec![vec![1.0]]],
            a_target: vec![vec![vec![]]],
            comm_identity_scale: vec![vec![1.0]],
            noise_power: 3.0,
        }
    }

    fn empty_model(t_g: usize, n_tx: usize) -> SensingModel {
        SensingModel {
            coeff: vec![vec![Matrix2::zeros(); n_tx]; t_g],
        }
    }

    #[test]
    fn equal_power_uses_budget_exactly() {
        let stats = LinkStats {
            n_tx: 2,
            k_u: 2,
            t_g: 1,
            m_t: 2,
            resolvable: vec![vec![1, 1]; 2],
            b_user: vec![vec![1.0, 1.0], vec![0.5, 2.5]],
            b_target: vec![vec![1.0], vec![1.0]],
            a_user: vec![vec![vec![0.1; 2]; 2]; 2],
            a_target: vec![vec![vec![0.1]; 2]; 2],
            comm_identity_scale: vec![vec![1.0; 2]; 2],
            noise_power: 1.0,
        };
        let alloc = equal_power(&stats, 1.0).unwrap();
        assert!((alloc.user(0, 0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((alloc.target(0, 0) - 1.0 / 3.0).abs() < 1e-15);
        for p in 0..2 {
            assert!((power_used(p, &alloc, &stats) - 1.0).abs() < 1e-12);
        }
        // doubling the budget doubles every coefficient
        let double = equal_power(&stats, 2.0).unwrap();
        assert!((double.user(1, 1) - 2.0 * alloc.user(1, 1)).abs() < 1e-15);
    }

    #[test]
    fn auxiliary_update_values() {
        let mut stats = single_link_stats();
        stats.b_user = vec![vec![1.0]];
        stats.noise_power = 1.0;
        let mut alloc = PowerAllocation::zeros(1, 1, 0);
        alloc.set_user(0, 0, 1.0);
        let y = auxiliary_update(0, &alloc, &stats);
        assert!((y - 0.5).abs() < 1e-15);

        let zero = PowerAllocation::zeros(1, 1, 0);
        assert_eq!(auxiliary_update(0, &zero, &stats), 0.0);

        // plugging the optimal auxiliary back recovers the SINR exactly
        let s = surrogate(0, &alloc, y, &stats);
        assert!((s - sinr(0, &alloc, &stats)).abs() < 1e-12);
    }

    #[test]
    fn subproblem_reaches_the_hand_solved_boundary_optimum() {
        let stats = single_link_stats();
        let model = empty_model(0, 1);
        let cfg = SolverConfig {
            bisection_rel_tol: 1e-9,
            feasibility_budget: 600,
            ..Default::default()
        };
        // warm point eta = 0.2, certified at its own surrogate value
        let warm = PowerAllocation::from_parts(1, 1, 0, vec![0.2]).unwrap();
        let z_warm = surrogate(0, &warm, 0.5, &stats);
        let (alloc, z) = solve_subproblem(&[0.5], &stats, &model, 1.0, 1.0, &cfg, &warm, z_warm);
        assert!(
            (alloc.user(0, 0) - 0.5).abs() < 1e-3,
            "eta = {}",
            alloc.user(0, 0)
        );
        assert!((z - 0.53921).abs() < 1e-3, "z = {z}");
    }

    #[test]
    fn relaxed_sensing_gives_full_power_to_single_user() {
        // no interference: optimum pushes the single user to the power cap
        let mut stats = single_link_stats();
        stats.a_user = vec![vec![vec![0.0]]];
        let model = empty_model(0, 1);
        let cfg = SolverConfig {
            bisection_rel_tol: 1e-9,
            feasibility_budget: 600,
            ..Default::default()
        };
        let warm = PowerAllocation::from_parts(1, 1, 0, vec![0.01]).unwrap();
        let z_warm = surrogate(0, &warm, 0.3, &stats);
        let (alloc, _) = solve_subproblem(
            &[0.3],
            &stats,
            &model,
            f64::INFINITY,
            1.0,
            &cfg,
            &warm,
            z_warm,
        );
        assert!(
            (alloc.user(0, 0) - 0.5).abs() < 1e-3,
            "eta = {}",
            alloc.user(0, 0)
        );
    }

    #[test]
    fn zero_threshold_is_infeasible() {
        let stats = single_link_stats();
        let model = empty_model(0, 1);
        let cfg = SolverConfig {
            peb_threshold_m: 0.0,
            ..Default::default()
        };
        let report = allocate_power(&stats, &model, &cfg, 1.0, None).unwrap();
        assert_eq!(report.status, SolveStatus::Infeasible);
    }

    #[test]
    fn zero_allocation_fails_sensing() {
        let model = SensingModel {
            coeff: vec![vec![Matrix2::identity()]],
        };
        let alloc = PowerAllocation::zeros(1, 1, 1);
        let (crlb, ok) = sensing_constraint(&alloc, 0, &model, 1.0);
        assert!(crlb.is_infinite());
        assert!(!ok);
    }

    #[test]
    fn sensing_bound_scales_inversely_and_is_inclusive() {
        let model = SensingModel {
            coeff: vec![vec![Matrix2::new(2.0, 0.1, 0.1, 1.0)]],
        };
        let mut alloc = PowerAllocation::zeros(1, 1, 1);
        alloc.set_target(0, 0, 0.5);
        let (crlb, _) = sensing_constraint(&alloc, 0, &model, 1.0);
        let (crlb4, _) = sensing_constraint(&alloc.scaled(4.0), 0, &model, 1.0);
        assert!((crlb4 - crlb / 4.0).abs() < 1e-12 * crlb);
        // threshold equal to the achieved bound counts as feasible
        let (_, ok) = sensing_constraint(&alloc, 0, &model, crlb);
        assert!(ok);
    }

    #[test]
    fn huge_epsilon_converges_after_one_iteration() {
        let stats = single_link_stats();
        let model = empty_model(0, 1);
        let cfg = SolverConfig {
            epsilon: 1e9,
            ..Default::default()
        };
        let report = allocate_power(&stats, &model, &cfg, 1.0, None).unwrap();
        assert_eq!(report.status, SolveStatus::Converged);
        assert_eq!(report.iterations, 1);
    }

    #[test]
    fn allocator_dominates_equal_power_and_is_monotone() {
        // two APs, two users with asymmetric gains and no sensing
        let stats = LinkStats {
            n_tx: 2,
            k_u: 2,
            t_g: 0,
            m_t: 2,
            resolvable: vec![vec![1, 1]; 2],
            b_user: vec![vec![2.0, 0.3], vec![0.4, 1.5]],
            b_target: vec![vec![]; 2],
            a_user: vec![
                vec![vec![0.5, 0.1], vec![0.1, 0.2]],
                vec![vec![0.2, 0.05], vec![0.07, 0.6]],
            ],
            a_target: vec![vec![vec![]; 2]; 2],
            comm_identity_scale: vec![vec![1.0; 2]; 2],
            noise_power: 0.05,
        };
        let model = empty_model(0, 2);
        let cfg = SolverConfig {
            epsilon: 1e-7,
            ..Default::default()
        };
        let report = allocate_power(&stats, &model, &cfg, 1.0, None).unwrap();
        assert_ne!(report.status, SolveStatus::Infeasible);

        for w in report.z_trajectory.windows(2) {
            assert!(w[1] >= w[0] - 1e-8, "level went down: {} -> {}", w[0], w[1]);
        }
        let equal = equal_power(&stats, 1.0).unwrap();
        let equal_min = (0..2)
            .map(|q| sinr(q, &equal, &stats))
            .fold(f64::INFINITY, f64::min);
        assert!(report.min_sinr >= equal_min - 1e-6);
        for p in 0..2 {
            assert!(report.power_used[p] <= 1.0 * (1.0 + 1e-6));
        }
        let z_final = *report.z_trajectory.last().unwrap();
        assert!(
            (report.min_sinr - z_final).abs() <= 1e-4 * z_final.abs().max(1e-12),
            "min sinr {} vs level {z_final}",
            report.min_sinr
        );
    }
}
