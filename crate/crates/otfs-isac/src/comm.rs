//! Communication-side statistics: resolvable-path channel modeling, the
//! precoder-covariance scalars feeding the SINR expression, SINR and
//! spectral-efficiency evaluation, and the per-AP power accounting.
//!
//! Channel estimate covariances default to the true spatial covariances,
//! scaled identities carrying the large-scale gain. Physical paths that
//! land in the same delay-Doppler resolution bin merge by summing
//! covariances, so the resolvable count reflects the grid resolution.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::otfs::OtfsGrid;
use crate::scenario::{LinkGains, Scenario, SimParams, SPEED_OF_LIGHT};

/// Precoder/channel covariance scalars for every link of a snapshot.
///
/// All communication covariances are scaled identities, so each link is
/// summarized by its total trace scale; sensing beams are unit-norm
/// rank-one with trace exactly 1.
#[derive(Debug, Clone)]
pub struct LinkStats {
    pub n_tx: usize,
    pub k_u: usize,
    pub t_g: usize,
    pub m_t: usize,
    /// Resolvable path count per (transmitter, user).
    pub resolvable: Vec<Vec<usize>>,
    /// Coherent-gain coefficient `b_pq`: total estimate-covariance trace.
    pub b_user: Vec<Vec<f64>>,
    /// Sensing-beam trace `b_pt` (1 for unit-norm steering).
    pub b_target: Vec<Vec<f64>>,
    /// Interference coefficient `a[p][q][q']` between beams q' and link q.
    pub a_user: Vec<Vec<Vec<f64>>>,
    /// Interference coefficient `a[p][q][t]` from sensing beam t.
    pub a_target: Vec<Vec<Vec<f64>>>,
    /// Per-(p, q) total identity scale of the estimate covariance; the
    /// communication part of the transmit covariance is this times `I`.
    pub comm_identity_scale: Vec<Vec<f64>>,
    /// Receiver noise power in watts.
    pub noise_power: f64,
}

/// Draw per-link physical paths, merge the ones sharing a delay-Doppler
/// bin, and reduce everything to the trace scalars the SINR needs.
pub fn channel_stats(
    scenario: &Scenario,
    gains: &LinkGains,
    grid: &OtfsGrid,
    params: &SimParams,
    rng: &mut impl Rng,
) -> Result<LinkStats> {
    let n_tx = gains.tx_aps.len();
    let k_u = scenario.user_positions.len();
    let t_g = scenario.target_positions.len();
    let m_t = params.m_t as f64;

    let poisson = Poisson::new(params.mean_paths.max(1e-12))
        .map_err(|e| Error::Config(format!("invalid mean path count: {e}")))?;
    let delay_bin = grid.delay_resolution();
    let doppler_bin = grid.doppler_resolution();

    let mut resolvable = vec![vec![0usize; k_u]; n_tx];
    let mut b_user = vec![vec![0.0; k_u]; n_tx];
    let mut comm_identity_scale = vec![vec![0.0; k_u]; n_tx];

    for p in 0..n_tx {
        for q in 0..k_u {
            let n_phys = (poisson.sample(rng) as usize).max(1);
            let speed = scenario.user_velocities[q].norm();
            let doppler_span = speed * params.carrier_freq / SPEED_OF_LIGHT;

            // bin physical paths on the DD lattice; co-binned paths merge
            let mut bins: Vec<(i64, i64, f64)> = Vec::with_capacity(n_phys);
            let scale_each = gains.comm[p][q] / n_phys as f64;
            for _ in 0..n_phys {
                let tau = rng.random::<f64>() * grid.tau_max;
                let angle = rng.random::<f64>() * 2.0 * std::f64::consts::PI;
                let doppler = doppler_span * angle.cos();
                // Doppler bins centered on zero so near-static paths co-bin
                let key = (
                    (tau / delay_bin).floor() as i64,
                    (doppler / doppler_bin).round() as i64,
                );
                match bins.iter_mut().find(|(d, v, _)| (*d, *v) == key) {
                    Some(entry) => entry.2 += scale_each,
                    None => bins.push((key.0, key.1, scale_each)),
                }
            }

            resolvable[p][q] = bins.len();
            // b_pq sums Tr over resolvable paths; with scaled identities the
            // merge preserves the total trace
            b_user[p][q] = bins.iter().map(|(_, _, s)| s * m_t).sum();
            comm_identity_scale[p][q] = bins.iter().map(|(_, _, s)| s).sum();
        }
    }

    // a[p][q][q'] = sum_{i,j} Tr(B_pq,i B_pq',j) = scale_q * scale_q' * m_t
    let mut a_user = vec![vec![vec![0.0; k_u]; k_u]; n_tx];
    for p in 0..n_tx {
        for q in 0..k_u {
            for q2 in 0..k_u {
                a_user[p][q][q2] = comm_identity_scale[p][q] * comm_identity_scale[p][q2] * m_t;
            }
        }
    }

    // a[p][q][t] = sum_i Tr(B_pq,i B_pt) = scale_q * Tr(B_pt), Tr(B_pt) = 1
    let b_target = vec![vec![1.0; t_g]; n_tx];
    let mut a_target = vec![vec![vec![0.0; t_g]; k_u]; n_tx];
    for p in 0..n_tx {
        for q in 0..k_u {
            for t in 0..t_g {
                a_target[p][q][t] = comm_identity_scale[p][q] * b_target[p][t];
            }
        }
    }

    Ok(LinkStats {
        n_tx,
        k_u,
        t_g,
        m_t: params.m_t,
        resolvable,
        b_user,
        b_target,
        a_user,
        a_target,
        comm_identity_scale,
        noise_power: params.noise_power,
    })
}

/// Power-control coefficients for every (transmitting AP, beam), beams
/// being the users followed by the sensing targets.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub n_tx: usize,
    pub k_u: usize,
    pub t_g: usize,
    eta: Vec<f64>,
}

impl PowerAllocation {
    pub fn zeros(n_tx: usize, k_u: usize, t_g: usize) -> Self {
        Self {
            n_tx,
            k_u,
            t_g,
            eta: vec![0.0; n_tx * (k_u + t_g)],
        }
    }

    pub fn from_parts(n_tx: usize, k_u: usize, t_g: usize, eta: Vec<f64>) -> Result<Self> {
        if eta.len() != n_tx * (k_u + t_g) {
            return Err(Error::Argument(format!(
                "allocation length {} does not match {n_tx}x({k_u}+{t_g})",
                eta.len()
            )));
        }
        Ok(Self {
            n_tx,
            k_u,
            t_g,
            eta,
        })
    }

    #[inline]
    pub fn user(&self, p: usize, q: usize) -> f64 {
        self.eta[p * (self.k_u + self.t_g) + q]
    }

    #[inline]
    pub fn target(&self, p: usize, t: usize) -> f64 {
        self.eta[p * (self.k_u + self.t_g) + self.k_u + t]
    }

    pub fn set_user(&mut self, p: usize, q: usize, value: f64) {
        self.eta[p * (self.k_u + self.t_g) + q] = value;
    }

    pub fn set_target(&mut self, p: usize, t: usize, value: f64) {
        self.eta[p * (self.k_u + self.t_g) + self.k_u + t] = value;
    }

    /// All coefficients, users first within each AP block.
    pub fn coefficients(&self) -> &[f64] {
        &self.eta
    }

    /// Allocation scaled by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            n_tx: self.n_tx,
            k_u: self.k_u,
            t_g: self.t_g,
            eta: self.eta.iter().map(|e| e * c).collect(),
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.eta.iter().all(|&e| e >= 0.0)
    }
}

/// Downlink SINR of user `q`: coherent gain squared over total received
/// interference (own-beam term included) plus noise.
pub fn sinr(q: usize, alloc: &PowerAllocation, stats: &LinkStats) -> f64 {
    let mut amplitude = 0.0;
    let mut interference = 0.0;
    for p in 0..stats.n_tx {
        amplitude += alloc.user(p, q).max(0.0).sqrt() * stats.b_user[p][q];
        for q2 in 0..stats.k_u {
            interference += alloc.user(p, q2) * stats.a_user[p][q][q2];
        }
        for t in 0..stats.t_g {
            interference += alloc.target(p, t) * stats.a_target[p][q][t];
        }
    }
    amplitude * amplitude / (interference + stats.noise_power)
}

/// Spectral efficiency in bits/s/Hz: `zeta * log2(1 + sinr)` with the
/// cyclic-prefix overhead factor `zeta` (pass 1.0 for no overhead).
pub fn se_from_sinr(sinr: f64, zeta: f64) -> f64 {
    zeta * (1.0 + sinr).log2()
}

/// Per-AP transmit power implied by an allocation: the trace accounting
/// `sum_q eta_pq b_pq + sum_t eta_pt b_pt`.
pub fn power_used(p: usize, alloc: &PowerAllocation, stats: &LinkStats) -> f64 {
    let mut total = 0.0;
    for q in 0..stats.k_u {
        total += alloc.user(p, q) * stats.b_user[p][q];
    }
    for t in 0..stats.t_g {
        total += alloc.target(p, t) * stats.b_target[p][t];
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{generate_scenario, link_gains};
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny_stats() -> LinkStats {
        // one transmitter, one user, no targets: b = 2, a = 1
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

    #[test]
    fn sinr_scalar_case() {
        let stats = tiny_stats();
        let mut alloc = PowerAllocation::zeros(1, 1, 0);
        alloc.set_user(0, 0, 1.0);
        assert!((sinr(0, &alloc, &stats) - 1.0).abs() < 1e-12);

        let zero = PowerAllocation::zeros(1, 1, 0);
        assert_eq!(sinr(0, &zero, &stats), 0.0);
    }

    #[test]
    fn sinr_halves_with_doubled_noise_when_interference_free() {
        let mut stats = tiny_stats();
        stats.a_user = vec![vec![vec![0.0]]];
        let mut alloc = PowerAllocation::zeros(1, 1, 0);
        alloc.set_user(0, 0, 1.0);
        let base = sinr(0, &alloc, &stats);
        stats.noise_power *= 2.0;
        let doubled = sinr(0, &alloc, &stats);
        assert!((base / doubled - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sinr_increases_in_own_power() {
        let stats = tiny_stats();
        let mut lo = PowerAllocation::zeros(1, 1, 0);
        lo.set_user(0, 0, 0.4);
        let mut hi = lo.clone();
        hi.set_user(0, 0, 0.9);
        assert!(sinr(0, &hi, &stats) > sinr(0, &lo, &stats));
    }

    #[test]
    fn se_values() {
        assert_eq!(se_from_sinr(0.0, 0.7), 0.0);
        assert!((se_from_sinr(1.0, 1.0) - 1.0).abs() < 1e-12);
        // m = 128 subcarriers with a full-symbol CP halves the rate
        let grid = OtfsGrid::derive(128, 16, 0.5e6, 2e-6).unwrap();
        assert!((grid.cp_overhead_factor() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn power_used_hand_sum() {
        let stats = LinkStats {
            n_tx: 1,
            k_u: 2,
            t_g: 1,
            m_t: 2,
            resolvable: vec![vec![1, 1]],
            b_user: vec![vec![1.0, 2.0]],
            b_target: vec![vec![1.0]],
            a_user: vec![vec![vec![0.0; 2]; 2]],
            a_target: vec![vec![vec![0.0]; 2]],
            comm_identity_scale: vec![vec![0.5, 1.0]],
            noise_power: 1.0,
        };
        let alloc = PowerAllocation::from_parts(1, 2, 1, vec![0.1, 0.2, 0.3]).unwrap();
        assert!((power_used(0, &alloc, &stats) - 0.8).abs() < 1e-12);
        let zero = PowerAllocation::zeros(1, 2, 1);
        assert_eq!(power_used(0, &zero, &stats), 0.0);
    }

    #[test]
    fn stats_shapes_and_identities() {
        let params = SimParams {
            n_ap: 8,
            m_t: 4,
            k_u: 3,
            t_g: 1,
            n_rx_per_target: 2,
            ..SimParams::default()
        };
        let grid = OtfsGrid::derive(16, 16, 0.5e6, 0.5e-6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let scenario = generate_scenario(&params, &mut rng).unwrap();
        let gains = link_gains(&scenario, &params, &mut rng).unwrap();
        let stats = channel_stats(&scenario, &gains, &grid, &params, &mut rng).unwrap();

        assert_eq!(stats.n_tx, scenario.transmitters().len());
        for p in 0..stats.n_tx {
            for q in 0..stats.k_u {
                assert!(stats.resolvable[p][q] >= 1);
                // the total trace carries the large-scale gain regardless of merging
                let expected = gains.comm[p][q] * params.m_t as f64;
                assert!((stats.b_user[p][q] - expected).abs() < 1e-12 * expected);
                // identity-covariance contraction: a_pq,t = scale * 1
                for t in 0..stats.t_g {
                    assert!(
                        (stats.a_target[p][q][t] - stats.comm_identity_scale[p][q]).abs() < 1e-18
                    );
                }
                // own-beam coefficient consistent with the trace formulas
                let own = stats.comm_identity_scale[p][q].powi(2) * params.m_t as f64;
                assert!((stats.a_user[p][q][q] - own).abs() < 1e-15 * own.max(1e-30));
            }
            for t in 0..stats.t_g {
                assert_eq!(stats.b_target[p][t], 1.0);
            }
        }
    }

    #[test]
    fn merging_preserves_total_trace() {
        // all physical paths forced into one bin: huge tau_max bin via m=1
        let params = SimParams {
            n_ap: 6,
            m_t: 2,
            k_u: 2,
            t_g: 1,
            n_rx_per_target: 2,
            v_max: 0.0,
            ..SimParams::default()
        };
        let grid = OtfsGrid::derive(1, 1, 0.5e6, 0.5e-6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let scenario = generate_scenario(&params, &mut rng).unwrap();
        let gains = link_gains(&scenario, &params, &mut rng).unwrap();
        let stats = channel_stats(&scenario, &gains, &grid, &params, &mut rng).unwrap();
        for p in 0..stats.n_tx {
            for q in 0..stats.k_u {
                assert_eq!(
                    stats.resolvable[p][q], 1,
                    "zero-speed paths on a 1x1 grid co-bin"
                );
                let expected = gains.comm[p][q] * params.m_t as f64;
                assert!((stats.b_user[p][q] - expected).abs() < 1e-12 * expected);
            }
        }
    }

    #[test]
    fn sinr_invariant_under_transmitter_relabeling() {
        let params = SimParams {
            n_ap: 8,
            m_t: 4,
            k_u: 3,
            t_g: 1,
            n_rx_per_target: 2,
            ..SimParams::default()
        };
        let grid = OtfsGrid::derive(16, 16, 0.5e6, 0.5e-6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let scenario = generate_scenario(&params, &mut rng).unwrap();
        let gains = link_gains(&scenario, &params, &mut rng).unwrap();
        let stats = channel_stats(&scenario, &gains, &grid, &params, &mut rng).unwrap();

        let mut alloc = PowerAllocation::zeros(stats.n_tx, stats.k_u, stats.t_g);
        for p in 0..stats.n_tx {
            for q in 0..stats.k_u {
                alloc.set_user(p, q, 0.01 * (p + q + 1) as f64);
            }
            for t in 0..stats.t_g {
                alloc.set_target(p, t, 0.02 * (p + t + 1) as f64);
            }
        }
        let base: Vec<f64> = (0..stats.k_u).map(|q| sinr(q, &alloc, &stats)).collect();

        // reverse the transmitter ordering consistently everywhere
        let perm: Vec<usize> = (0..stats.n_tx).rev().collect();
        let mut stats2 = stats.clone();
        let mut alloc2 = PowerAllocation::zeros(stats.n_tx, stats.k_u, stats.t_g);
        for (new_p, &old_p) in perm.iter().enumerate() {
            stats2.b_user[new_p] = stats.b_user[old_p].clone();
            stats2.a_user[new_p] = stats.a_user[old_p].clone();
            stats2.a_target[new_p] = stats.a_target[old_p].clone();
            stats2.b_target[new_p] = stats.b_target[old_p].clone();
            stats2.resolvable[new_p] = stats.resolvable[old_p].clone();
            stats2.comm_identity_scale[new_p] = stats.comm_identity_scale[old_p].clone();
            for q in 0..stats.k_u {
                alloc2.set_user(new_p, q, alloc.user(old_p, q));
            }
            for t in 0..stats.t_g {
                alloc2.set_target(new_p, t, alloc.target(old_p, t));
            }
        }
        for q in 0..stats.k_u {
            let v = sinr(q, &alloc2, &stats2);
            assert!((v - base[q]).abs() < 1e-12 * base[q].max(1e-30));
        }
    }
}
