//! Snapshot assembly: resolves all per-trial randomness (placement, link
//! gains, channel statistics, reflectivity draws) into the path terms the
//! Fisher-information pipelines consume, and exposes per-target position
//! bounds for a given power allocation.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::comm::{channel_stats, sinr, LinkStats, PowerAllocation};
use crate::error::{Error, Result};
use crate::fisher::{
    approx_information_coeffs, position_fim, position_jacobian, transmit_covariance, BeamLoad,
    FimMode, PathTerms, PositionBound,
};
use crate::otfs::{AmbiguityMoments, OtfsGrid};
use crate::scenario::{
    generate_scenario, link_gains, path_geometry, steering_vector, LinkGains, RcsMode, Scenario,
    SimParams,
};

/// A fully resolved simulation snapshot: one deployment, one channel-draw
/// realization, ready for bound evaluation under any allocation.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub scenario: Scenario,
    pub grid: OtfsGrid,
    pub params: SimParams,
    pub gains: LinkGains,
    pub stats: LinkStats,
    /// Per target, all (transmitter, receiver) reflected paths.
    pub target_paths: Vec<Vec<PathTerms>>,
    /// Sensing beam per (transmitter slot, target).
    pub sensing_beams: Vec<Vec<DVector<Complex64>>>,
}

impl Snapshot {
    /// Generate a scenario and resolve it into a snapshot.
    pub fn generate(params: &SimParams, grid: &OtfsGrid, rng: &mut impl Rng) -> Result<Self> {
        let scenario = generate_scenario(params, rng)?;
        Self::from_scenario(scenario, params, grid, rng)
    }

    /// Resolve an existing scenario: link gains, channel statistics, then
    /// one reflectivity draw per reflected path (ordered target-major,
    /// transmitter, receiver).
    pub fn from_scenario(
        scenario: Scenario,
        params: &SimParams,
        grid: &OtfsGrid,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let gains = link_gains(&scenario, params, rng)?;
        let stats = channel_stats(&scenario, &gains, grid, params, rng)?;
        let tx_aps = gains.tx_aps.clone();

        let mut sensing_beams = Vec::with_capacity(tx_aps.len());
        for &p in &tx_aps {
            let mut per_target = Vec::with_capacity(scenario.target_positions.len());
            for target in &scenario.target_positions {
                let d = (scenario.ap_positions[p] - target).norm();
                if d <= 0.0 {
                    return Err(Error::DegenerateGeometry(format!("target on top of ap{p}")));
                }
                let rho = (scenario.ap_positions[p] - target) / d;
                let aod = std::f64::consts::PI * rho.dot(&scenario.ap_axes[p]);
                per_target.push(steering_vector(aod + params.pointing_offset, params.m_t));
            }
            sensing_beams.push(per_target);
        }

        let unit_normal = Normal::new(0.0, 1.0).expect("unit normal");
        let mut target_paths = Vec::with_capacity(scenario.target_positions.len());
        for t in 0..scenario.target_positions.len() {
            let mut paths = Vec::new();
            for (slot, &p) in tx_aps.iter().enumerate() {
                for &r in &scenario.receiver_sets[t] {
                    let geom = path_geometry(
                        scenario.ap_positions[p],
                        scenario.ap_positions[r],
                        scenario.target_positions[t],
                        scenario.target_velocities[t],
                        scenario.ap_axes[p],
                        scenario.ap_axes[r],
                        params,
                    )?;
                    let reflectivity = match params.rcs_mode {
                        RcsMode::Realized => {
                            let sigma = (params.rcs_variance / 2.0).sqrt();
                            Complex64::new(
                                sigma * unit_normal.sample(rng),
                                sigma * unit_normal.sample(rng),
                            )
                        }
                        RcsMode::Expected => Complex64::new(params.rcs_variance.sqrt(), 0.0),
                    };
                    let gain = reflectivity * geom.radar_gain.sqrt();
                    let moments = AmbiguityMoments::closed_form(grid, geom.delay);
                    let jacobian = position_jacobian(
                        &geom,
                        scenario.ap_axes[p],
                        scenario.ap_axes[r],
                        scenario.target_velocities[t],
                        params.wavelength(),
                    )?;
                    paths.push(PathTerms {
                        tx: slot,
                        gain,
                        rx_response: steering_vector(geom.aoa, params.m_t),
                        tx_response: steering_vector(geom.aod, params.m_t),
                        jacobian,
                        moments,
                        approx: approx_information_coeffs(params.m_t, grid, &moments),
                    });
                }
            }
            target_paths.push(paths);
        }

        Ok(Self {
            scenario,
            grid: *grid,
            params: params.clone(),
            gains,
            stats,
            target_paths,
            sensing_beams,
        })
    }

    pub fn n_tx(&self) -> usize {
        self.gains.tx_aps.len()
    }

    /// Transmit covariance of every transmitting AP under an allocation.
    pub fn beam_loads(&self, alloc: &PowerAllocation) -> Result<Vec<BeamLoad>> {
        let mut loads = Vec::with_capacity(self.n_tx());
        for slot in 0..self.n_tx() {
            let sensing: Vec<(f64, &DVector<Complex64>)> = (0..self.stats.t_g)
                .map(|t| (alloc.target(slot, t), &self.sensing_beams[slot][t]))
                .collect();
            let comm: Vec<(f64, f64)> = (0..self.stats.k_u)
                .map(|q| (alloc.user(slot, q), self.stats.comm_identity_scale[slot][q]))
                .collect();
            loads.push(transmit_covariance(self.params.m_t, &sensing, &comm)?);
        }
        Ok(loads)
    }

    /// Position bound of one target under an allocation, through either
    /// pipeline.
    pub fn position_bound(
        &self,
        target: usize,
        mode: FimMode,
        alloc: &PowerAllocation,
    ) -> Result<PositionBound> {
        let loads = match mode {
            FimMode::Exact => self.beam_loads(alloc)?,
            FimMode::Approx => Vec::new(),
        };
        let fim = position_fim(
            &self.target_paths[target],
            mode,
            alloc,
            target,
            &loads,
            self.params.noise_power,
        )?;
        Ok(crate::fisher::peb_from_fim(&fim))
    }

    /// Per-target, per-transmitter 2x2 coefficient matrices of the
    /// approximate position information, `F_t(alloc) = sum_p eta_pt C[t][p]`.
    pub fn sensing_coefficients(&self) -> Vec<Vec<nalgebra::Matrix2<f64>>> {
        let mut coeff =
            vec![vec![nalgebra::Matrix2::<f64>::zeros(); self.n_tx()]; self.target_paths.len()];
        for (t, paths) in self.target_paths.iter().enumerate() {
            for path in paths {
                let weight = 2.0 * path.gain.norm_sqr() / self.params.noise_power;
                let j1 = path.jacobian.row(0).transpose();
                let j3 = path.jacobian.row(2).transpose();
                let j4 = path.jacobian.row(3).transpose();
                coeff[t][path.tx] += (j1 * j1.transpose() * path.approx.angle
                    + j3 * j3.transpose() * path.approx.delay
                    + j4 * j4.transpose() * path.approx.doppler)
                    * weight;
            }
        }
        coeff
    }

    /// Exact-pipeline evaluation of one target keeping all intermediate
    /// information matrices.
    pub fn fisher_bundle(
        &self,
        target: usize,
        alloc: &PowerAllocation,
    ) -> Result<crate::fisher::FisherBundle> {
        let loads = self.beam_loads(alloc)?;
        crate::fisher::fisher_bundle(&self.target_paths[target], &loads, self.params.noise_power)
    }

    /// Worst-user downlink SINR under an allocation.
    pub fn min_sinr(&self, alloc: &PowerAllocation) -> f64 {
        (0..self.stats.k_u)
            .map(|q| sinr(q, alloc, &self.stats))
            .fold(f64::INFINITY, f64::min)
    }
}
