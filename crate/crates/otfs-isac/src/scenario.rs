//! Scenario generation: AP/user/target placement over a square area, AP
//! mode assignment (ISAC transmitter vs. sensing receiver), per-path
//! bi-static geometry, array steering vectors, and large-scale link gains.

use nalgebra::{DVector, Vector2};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Speed of light in m/s, exact.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// How AP sites are placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApLayout {
    /// Every AP drawn independently and uniformly over the area.
    Uniform,
    /// APs placed as co-located pairs sharing position and array axis, so a
    /// receiver can sit on top of its transmitter (cellular-style baseline).
    ColocatedPairs,
}

/// Whether bound computations use the realized per-trial reflectivity draw
/// or its variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RcsMode {
    /// Per-path complex gain drawn each trial.
    Realized,
    /// Deterministic gain with squared magnitude equal to the RCS variance
    /// times the radar gain.
    Expected,
}

/// Top-level simulation parameters. Scalar fields are SI units; gains are
/// linear.
#[derive(Debug, Clone)]
pub struct SimParams {
    /// Side of the square deployment area in meters.
    pub area_side: f64,
    /// Number of APs.
    pub n_ap: usize,
    /// Antennas per AP (uniform linear array).
    pub m_t: usize,
    /// Single-antenna users.
    pub k_u: usize,
    /// Sensing targets (may be zero).
    pub t_g: usize,
    /// Receiving APs assigned per target.
    pub n_rx_per_target: usize,
    /// Per-AP downlink power budget in watts.
    pub p_d: f64,
    /// Receiver noise power in watts.
    pub noise_power: f64,
    /// RCS variance in square meters.
    pub rcs_variance: f64,
    /// Carrier frequency in Hz.
    pub carrier_freq: f64,
    /// Transmit antenna gain, linear.
    pub g_t: f64,
    /// Receive antenna gain, linear.
    pub g_r: f64,
    /// Maximum user/target speed in m/s.
    pub v_max: f64,
    /// Seed all per-trial randomness derives from.
    pub master_seed: u64,
    /// Log-normal shadowing on communication path loss.
    pub shadowing: bool,
    /// Shadowing standard deviation in dB.
    pub shadowing_sigma_db: f64,
    /// Sensing-beam pointing offset added to the departure spatial
    /// frequency, radians. Zero means perfect pointing.
    pub pointing_offset: f64,
    /// AP placement scheme.
    pub layout: ApLayout,
    /// Mean physical path count per communication link (Poisson, min 1).
    pub mean_paths: f64,
    /// Reflectivity handling in bound computations.
    pub rcs_mode: RcsMode,
}

impl Default for SimParams {
    /// Full-scale defaults matching the reference simulation setup.
    fn default() -> Self {
        Self {
            area_side: 300.0,
            n_ap: 32,
            m_t: 16,
            k_u: 10,
            t_g: 2,
            n_rx_per_target: 2,
            p_d: 1.0,
            noise_power: dbm_to_watts(-89.0),
            rcs_variance: dbsm_to_sqm(0.0),
            carrier_freq: 38e9,
            g_t: 1.0,
            g_r: 1.0,
            v_max: 300.0 / 3.6,
            master_seed: 1,
            shadowing: false,
            shadowing_sigma_db: 4.0,
            pointing_offset: 0.0,
            layout: ApLayout::Uniform,
            mean_paths: 4.0,
            rcs_mode: RcsMode::Realized,
        }
    }
}

impl SimParams {
    /// Carrier wavelength in meters.
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_ap < 1 || self.m_t < 1 || self.k_u < 1 || self.n_rx_per_target < 1 {
            return Err(Error::Config(
                "n_ap, m_t, k_u and n_rx_per_target must all be at least 1".into(),
            ));
        }
        if !(self.area_side > 0.0) {
            return Err(Error::Config(format!(
                "area side must be positive, got {}",
                self.area_side
            )));
        }
        if !(self.p_d > 0.0) {
            return Err(Error::Config(format!(
                "power budget must be positive, got {}",
                self.p_d
            )));
        }
        if !(self.noise_power > 0.0) {
            return Err(Error::Config(format!(
                "noise power must be positive, got {}",
                self.noise_power
            )));
        }
        if !(self.rcs_variance > 0.0) || !(self.carrier_freq > 0.0) {
            return Err(Error::Config(
                "rcs variance and carrier frequency must be positive".into(),
            ));
        }
        if !(self.g_t > 0.0) || !(self.g_r > 0.0) {
            return Err(Error::Config("antenna gains must be positive".into()));
        }
        if !(self.v_max >= 0.0) {
            return Err(Error::Config(format!(
                "v_max must be nonnegative, got {}",
                self.v_max
            )));
        }
        if self.n_rx_per_target * self.t_g >= self.n_ap {
            return Err(Error::Config(format!(
                "receiver demand {}x{} leaves no transmitter among {} APs",
                self.n_rx_per_target, self.t_g, self.n_ap
            )));
        }
        if !(self.mean_paths >= 0.0) {
            return Err(Error::Config("mean path count must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Conversion from dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Conversion from dBsm to square meters.
pub fn dbsm_to_sqm(dbsm: f64) -> f64 {
    10f64.powf(dbsm / 10.0)
}

/// Role of an AP in the snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApMode {
    Transmit,
    Receive,
}

/// One generated deployment snapshot.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub ap_positions: Vec<Vector2<f64>>,
    /// Unit direction vector of each AP's linear array.
    pub ap_axes: Vec<Vector2<f64>>,
    pub user_positions: Vec<Vector2<f64>>,
    pub user_velocities: Vec<Vector2<f64>>,
    pub target_positions: Vec<Vector2<f64>>,
    pub target_velocities: Vec<Vector2<f64>>,
    /// Per-AP role; filled by `assign_modes`.
    pub modes: Vec<ApMode>,
    /// Per-target receiving AP indices (size `n_rx_per_target` each).
    pub receiver_sets: Vec<Vec<usize>>,
}

impl Scenario {
    /// Indices of transmitting APs, ascending.
    pub fn transmitters(&self) -> Vec<usize> {
        (0..self.ap_positions.len())
            .filter(|&i| self.modes[i] == ApMode::Transmit)
            .collect()
    }

    /// Indices of receiving APs, ascending.
    pub fn receivers(&self) -> Vec<usize> {
        (0..self.ap_positions.len())
            .filter(|&i| self.modes[i] == ApMode::Receive)
            .collect()
    }
}

fn draw_point(rng: &mut impl Rng, side: f64) -> Vector2<f64> {
    Vector2::new(rng.random::<f64>() * side, rng.random::<f64>() * side)
}

fn draw_velocity(rng: &mut impl Rng, v_max: f64) -> Vector2<f64> {
    let speed = rng.random::<f64>() * v_max;
    let heading = rng.random::<f64>() * 2.0 * PI;
    Vector2::new(speed * heading.cos(), speed * heading.sin())
}

/// Generate a snapshot: AP sites and array axes, user and target positions
/// and velocities, then mode assignment. Deterministic for a fixed seed.
pub fn generate_scenario(params: &SimParams, rng: &mut impl Rng) -> Result<Scenario> {
    params.validate()?;

    let mut ap_positions = Vec::with_capacity(params.n_ap);
    let mut ap_axes = Vec::with_capacity(params.n_ap);
    match params.layout {
        ApLayout::Uniform => {
            for _ in 0..params.n_ap {
                ap_positions.push(draw_point(rng, params.area_side));
                let angle = rng.random::<f64>() * 2.0 * PI;
                ap_axes.push(Vector2::new(angle.cos(), angle.sin()));
            }
        }
        ApLayout::ColocatedPairs => {
            let sites = params.n_ap.div_ceil(2);
            for _ in 0..sites {
                let p = draw_point(rng, params.area_side);
                let angle = rng.random::<f64>() * 2.0 * PI;
                let axis = Vector2::new(angle.cos(), angle.sin());
                ap_positions.push(p);
                ap_axes.push(axis);
                if ap_positions.len() < params.n_ap {
                    ap_positions.push(p);
                    ap_axes.push(axis);
                }
            }
        }
    }

    let mut user_positions = Vec::with_capacity(params.k_u);
    let mut user_velocities = Vec::with_capacity(params.k_u);
    for _ in 0..params.k_u {
        user_positions.push(draw_point(rng, params.area_side));
        user_velocities.push(draw_velocity(rng, params.v_max));
    }

    let mut target_positions = Vec::with_capacity(params.t_g);
    let mut target_velocities = Vec::with_capacity(params.t_g);
    for _ in 0..params.t_g {
        target_positions.push(draw_point(rng, params.area_side));
        target_velocities.push(draw_velocity(rng, params.v_max));
    }

    let scenario = Scenario {
        ap_positions,
        ap_axes,
        user_positions,
        user_velocities,
        target_positions,
        target_velocities,
        modes: Vec::new(),
        receiver_sets: Vec::new(),
    };
    assign_modes(scenario, params.n_rx_per_target)
}

/// Assign the `n_rx` closest APs (Euclidean) to each target as its sensing
/// receivers; ties break toward the lower AP index. The union over targets
/// is the receive set, everything else transmits. A receiving AP may serve
/// several targets.
pub fn assign_modes(mut scenario: Scenario, n_rx_per_target: usize) -> Result<Scenario> {
    let n_ap = scenario.ap_positions.len();
    if n_rx_per_target * scenario.target_positions.len() > 0 && n_rx_per_target > n_ap {
        return Err(Error::Config(format!(
            "cannot pick {n_rx_per_target} receivers among {n_ap} APs"
        )));
    }

    let mut receiver_sets = Vec::with_capacity(scenario.target_positions.len());
    let mut is_receiver = vec![false; n_ap];
    for target in &scenario.target_positions {
        let mut order: Vec<usize> = (0..n_ap).collect();
        order.sort_by(|&a, &b| {
            let da = (scenario.ap_positions[a] - target).norm();
            let db = (scenario.ap_positions[b] - target).norm();
            da.partial_cmp(&db).unwrap().then(a.cmp(&b))
        });
        let set: Vec<usize> = order[..n_rx_per_target].to_vec();
        for &i in &set {
            is_receiver[i] = true;
        }
        receiver_sets.push(set);
    }

    if is_receiver.iter().all(|&r| r) {
        return Err(Error::Config(
            "every AP would become a sensing receiver".into(),
        ));
    }

    scenario.modes = is_receiver
        .iter()
        .map(|&r| if r { ApMode::Receive } else { ApMode::Transmit })
        .collect();
    scenario.receiver_sets = receiver_sets;
    Ok(scenario)
}

/// Geometry of one bi-static reflected path transmitter -> target ->
/// receiver. Spatial frequencies are in radians, delay in seconds, Doppler
/// in Hz.
#[derive(Debug, Clone)]
pub struct PathGeometry {
    /// Arrival spatial frequency at the receiving array.
    pub aoa: f64,
    /// Departure spatial frequency at the transmitting array.
    pub aod: f64,
    /// Bi-static delay `(d_pt + d_tr) / c`.
    pub delay: f64,
    /// Bi-static Doppler shift.
    pub doppler: f64,
    /// Unit vector from target toward the transmitter.
    pub rho_pt: Vector2<f64>,
    /// Unit vector from receiver toward the target.
    pub rho_tr: Vector2<f64>,
    /// Transmitter-target distance in meters.
    pub d_pt: f64,
    /// Target-receiver distance in meters.
    pub d_tr: f64,
    /// Radar-equation gain, linear.
    pub radar_gain: f64,
    /// RCS variance of the reflecting target, square meters.
    pub rcs_variance: f64,
}

/// Bi-static path geometry for a (transmitter, receiver, target) triple.
pub fn path_geometry(
    p_tx: Vector2<f64>,
    p_rx: Vector2<f64>,
    target_pos: Vector2<f64>,
    target_vel: Vector2<f64>,
    u_tx: Vector2<f64>,
    u_rx: Vector2<f64>,
    params: &SimParams,
) -> Result<PathGeometry> {
    let d_pt = (p_tx - target_pos).norm();
    let d_tr = (target_pos - p_rx).norm();
    if d_pt <= 0.0 || d_tr <= 0.0 {
        return Err(Error::DegenerateGeometry(
            "target coincides with a transmitting or receiving AP".into(),
        ));
    }
    let rho_pt = (p_tx - target_pos) / d_pt;
    let rho_tr = (target_pos - p_rx) / d_tr;
    let wavelength = params.wavelength();
    Ok(PathGeometry {
        aoa: PI * rho_tr.dot(&u_rx),
        aod: PI * rho_pt.dot(&u_tx),
        delay: (d_pt + d_tr) / SPEED_OF_LIGHT,
        doppler: target_vel.dot(&(rho_pt + rho_tr)) / wavelength,
        rho_pt,
        rho_tr,
        d_pt,
        d_tr,
        radar_gain: radar_gain(wavelength, params.g_t, params.g_r, d_pt, d_tr),
        rcs_variance: params.rcs_variance,
    })
}

/// Radar-equation gain `lambda^2 G_t G_r / ((4 pi)^3 d_pt^2 d_tr^2)`.
pub fn radar_gain(wavelength: f64, g_t: f64, g_r: f64, d_pt: f64, d_tr: f64) -> f64 {
    wavelength * wavelength * g_t * g_r / ((4.0 * PI).powi(3) * d_pt * d_pt * d_tr * d_tr)
}

/// Unit-norm array response of an `m_t`-element half-wavelength ULA at
/// spatial frequency `omega`: entry `i` is `e^{-j omega i} / sqrt(m_t)`.
pub fn steering_vector(omega: f64, m_t: usize) -> DVector<Complex64> {
    let scale = 1.0 / (m_t as f64).sqrt();
    DVector::from_fn(m_t, |i, _| Complex64::from_polar(scale, -omega * i as f64))
}

/// Urban-microcell path loss in dB at distance `d` meters and carrier
/// `f_c` Hz: `22.4 + 35.3 log10(d) + 21.3 log10(f_c / 1 GHz)`.
pub fn umi_path_loss_db(d: f64, f_c: f64) -> f64 {
    22.4 + 35.3 * d.log10() + 21.3 * (f_c / 1e9).log10()
}

/// Large-scale gains of a snapshot: the radar-equation gain per
/// (transmitter, target, receiver) path and the communication gain per
/// (transmitter, user) link.
#[derive(Debug, Clone)]
pub struct LinkGains {
    /// Transmitting AP indices the first axis of both tables refers to.
    pub tx_aps: Vec<usize>,
    /// `radar[p][t][r]` with `r` indexing the target's receiver set.
    pub radar: Vec<Vec<Vec<f64>>>,
    /// `comm[p][q]` linear large-scale gain.
    pub comm: Vec<Vec<f64>>,
}

/// Compute all large-scale link gains. Shadowing draws come from `rng`
/// only when enabled in `params`.
pub fn link_gains(
    scenario: &Scenario,
    params: &SimParams,
    rng: &mut impl Rng,
) -> Result<LinkGains> {
    let tx_aps = scenario.transmitters();
    let wavelength = params.wavelength();

    let mut radar = Vec::with_capacity(tx_aps.len());
    for &p in &tx_aps {
        let mut per_target = Vec::with_capacity(scenario.target_positions.len());
        for (t, target) in scenario.target_positions.iter().enumerate() {
            let mut per_rx = Vec::new();
            for &r in &scenario.receiver_sets[t] {
                let d_pt = (scenario.ap_positions[p] - target).norm();
                let d_tr = (target - scenario.ap_positions[r]).norm();
                if d_pt <= 0.0 || d_tr <= 0.0 {
                    return Err(Error::DegenerateGeometry(format!(
                        "zero distance on path ap{p} -> target{t} -> ap{r}"
                    )));
                }
                per_rx.push(radar_gain(wavelength, params.g_t, params.g_r, d_pt, d_tr));
            }
            per_target.push(per_rx);
        }
        radar.push(per_target);
    }

    let shadow = Normal::new(0.0, params.shadowing_sigma_db).map_err(|e| {
        Error::Config(format!(
            "invalid shadowing sigma {}: {e}",
            params.shadowing_sigma_db
        ))
    })?;
    let mut comm = Vec::with_capacity(tx_aps.len());
    for &p in &tx_aps {
        let mut row = Vec::with_capacity(scenario.user_positions.len());
        for user in &scenario.user_positions {
            let d = (scenario.ap_positions[p] - user).norm();
            if d <= 0.0 {
                return Err(Error::DegenerateGeometry(format!("user on top of ap{p}")));
            }
            let mut pl_db = umi_path_loss_db(d, params.carrier_freq);
            if params.shadowing {
                pl_db += shadow.sample(rng);
            }
            row.push(10f64.powf(-pl_db / 10.0));
        }
        comm.push(row);
    }

    Ok(LinkGains {
        tx_aps,
        radar,
        comm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn desk_params() -> SimParams {
        SimParams {
            n_ap: 8,
            m_t: 4,
            k_u: 3,
            t_g: 2,
            n_rx_per_target: 2,
            ..SimParams::default()
        }
    }

    #[test]
    fn generation_stays_in_area_and_is_deterministic() {
        let params = SimParams {
            n_ap: 32,
            ..desk_params()
        };
        let a = generate_scenario(&params, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = generate_scenario(&params, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a.ap_positions.len(), 32);
        for p in a
            .ap_positions
            .iter()
            .chain(&a.user_positions)
            .chain(&a.target_positions)
        {
            assert!(p.x >= 0.0 && p.x <= 300.0 && p.y >= 0.0 && p.y <= 300.0);
        }
        assert_eq!(a.ap_positions, b.ap_positions);
        assert_eq!(a.target_velocities, b.target_velocities);
        assert_eq!(a.modes, b.modes);
        for axis in &a.ap_axes {
            assert!((axis.norm() - 1.0).abs() < 1e-12);
        }
        for (v, _) in a.target_velocities.iter().zip(&a.user_velocities) {
            assert!(v.norm() <= params.v_max + 1e-12);
        }
    }

    #[test]
    fn modes_pick_closest_aps() {
        let scenario = Scenario {
            ap_positions: vec![
                Vector2::new(0.0, 0.0),
                Vector2::new(10.0, 0.0),
                Vector2::new(100.0, 0.0),
            ],
            ap_axes: vec![Vector2::new(1.0, 0.0); 3],
            user_positions: vec![],
            user_velocities: vec![],
            target_positions: vec![Vector2::new(1.0, 0.0)],
            target_velocities: vec![Vector2::zeros()],
            modes: vec![],
            receiver_sets: vec![],
        };
        let s = assign_modes(scenario, 2).unwrap();
        assert_eq!(s.receiver_sets[0], vec![0, 1]);
        assert_eq!(s.modes[2], ApMode::Transmit);
    }

    #[test]
    fn mode_tie_breaks_to_lower_index() {
        let scenario = Scenario {
            ap_positions: vec![
                Vector2::new(-5.0, 0.0),
                Vector2::new(5.0, 0.0),
                Vector2::new(0.0, 50.0),
            ],
            ap_axes: vec![Vector2::new(1.0, 0.0); 3],
            user_positions: vec![],
            user_velocities: vec![],
            target_positions: vec![Vector2::new(0.0, 0.0)],
            target_velocities: vec![Vector2::zeros()],
            modes: vec![],
            receiver_sets: vec![],
        };
        let s = assign_modes(scenario, 1).unwrap();
        assert_eq!(s.receiver_sets[0], vec![0]);
    }

    #[test]
    fn all_receivers_is_rejected() {
        let scenario = Scenario {
            ap_positions: vec![Vector2::new(0.0, 0.0), Vector2::new(1.0, 0.0)],
            ap_axes: vec![Vector2::new(1.0, 0.0); 2],
            user_positions: vec![],
            user_velocities: vec![],
            target_positions: vec![Vector2::new(0.0, 0.1), Vector2::new(1.0, 0.1)],
            target_velocities: vec![Vector2::zeros(); 2],
            modes: vec![],
            receiver_sets: vec![],
        };
        assert!(matches!(assign_modes(scenario, 1), Err(Error::Config(_))));
    }

    #[test]
    fn receiver_sets_permutation_invariant_when_disjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let params = desk_params();
        let s = generate_scenario(&params, &mut rng).unwrap();
        let mut swapped = s.clone();
        swapped.target_positions.reverse();
        swapped.target_velocities.reverse();
        swapped.modes.clear();
        swapped.receiver_sets.clear();
        let swapped = assign_modes(swapped, params.n_rx_per_target).unwrap();
        let disjoint = s.receiver_sets[0]
            .iter()
            .all(|i| !s.receiver_sets[1].contains(i));
        if disjoint {
            assert_eq!(s.modes, swapped.modes);
            assert_eq!(s.receiver_sets[0], swapped.receiver_sets[1]);
            assert_eq!(s.receiver_sets[1], swapped.receiver_sets[0]);
        }
        for set in &s.receiver_sets {
            assert_eq!(set.len(), params.n_rx_per_target);
        }
    }

    #[test]
    fn collinear_path_geometry() {
        let params = SimParams::default();
        let g = path_geometry(
            Vector2::new(-150.0, 0.0),
            Vector2::new(150.0, 0.0),
            Vector2::new(0.0, 0.0),
            Vector2::zeros(),
            Vector2::new(1.0, 0.0),
            Vector2::new(1.0, 0.0),
            &params,
        )
        .unwrap();
        assert!((g.delay - 300.0 / SPEED_OF_LIGHT).abs() < 1e-18);
        assert!((g.rho_pt - Vector2::new(-1.0, 0.0)).norm() < 1e-12);
        assert!((g.rho_tr - Vector2::new(-1.0, 0.0)).norm() < 1e-12);
        assert_eq!(g.doppler, 0.0);
    }

    #[test]
    fn doppler_from_radial_motion() {
        let params = SimParams::default(); // 38 GHz
        let g = path_geometry(
            Vector2::new(-150.0, 0.0),
            Vector2::new(150.0, 0.0),
            Vector2::new(0.0, 0.0),
            Vector2::new(30.0, 0.0),
            Vector2::new(1.0, 0.0),
            Vector2::new(1.0, 0.0),
            &params,
        )
        .unwrap();
        let expected = -60.0 / params.wavelength();
        assert!((g.doppler - expected).abs() < 1e-6 * expected.abs());
        assert!(
            (g.doppler + 7605.0).abs() < 1.0,
            "doppler {} should be near -7.605 kHz",
            g.doppler
        );
    }

    #[test]
    fn doppler_ignores_transverse_motion() {
        let params = SimParams::default();
        let base = path_geometry(
            Vector2::new(-100.0, 0.0),
            Vector2::new(80.0, 0.0),
            Vector2::new(0.0, 0.0),
            Vector2::new(12.0, 0.0),
            Vector2::new(0.0, 1.0),
            Vector2::new(0.0, 1.0),
            &params,
        )
        .unwrap();
        // rho_pt + rho_tr is along x here, so adding y-velocity changes nothing
        let shifted = path_geometry(
            Vector2::new(-100.0, 0.0),
            Vector2::new(80.0, 0.0),
            Vector2::new(0.0, 0.0),
            Vector2::new(12.0, 77.0),
            Vector2::new(0.0, 1.0),
            Vector2::new(0.0, 1.0),
            &params,
        )
        .unwrap();
        assert!((base.doppler - shifted.doppler).abs() < 1e-9 * base.doppler.abs().max(1.0));
    }

    #[test]
    fn coincident_target_rejected() {
        let params = SimParams::default();
        let r = path_geometry(
            Vector2::new(1.0, 1.0),
            Vector2::new(5.0, 5.0),
            Vector2::new(1.0, 1.0),
            Vector2::zeros(),
            Vector2::new(1.0, 0.0),
            Vector2::new(1.0, 0.0),
            &params,
        );
        assert!(matches!(r, Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn radar_gain_values_and_symmetry() {
        let lambda = SPEED_OF_LIGHT / 38e9;
        let xi = radar_gain(lambda, 1.0, 1.0, 100.0, 100.0);
        assert!((xi - 3.14e-16).abs() < 0.02e-16, "xi = {xi:e}");
        // distance symmetry and inverse-square in each leg
        assert!(
            (radar_gain(lambda, 1.0, 1.0, 50.0, 200.0) - radar_gain(lambda, 1.0, 1.0, 200.0, 50.0))
                .abs()
                < 1e-30
        );
        let halved = radar_gain(lambda, 1.0, 1.0, 200.0, 100.0);
        assert!((xi / halved - 4.0).abs() < 1e-9);
    }

    #[test]
    fn umi_path_loss_reference_point() {
        let pl = umi_path_loss_db(100.0, 38e9);
        assert!((pl - 126.6).abs() < 0.1, "PL = {pl}");
    }

    #[test]
    fn steering_vector_shape() {
        let a = steering_vector(0.0, 4);
        for v in a.iter() {
            assert!((v - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        }
        let b = steering_vector(PI, 2);
        assert!((b[0] - Complex64::new(1.0 / 2f64.sqrt(), 0.0)).norm() < 1e-12);
        assert!((b[1] - Complex64::new(-1.0 / 2f64.sqrt(), 0.0)).norm() < 1e-12);
        for m_t in [1usize, 3, 16] {
            let v = steering_vector(-1.234, m_t);
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn link_gains_cover_all_links() {
        let params = desk_params();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = generate_scenario(&params, &mut rng).unwrap();
        let gains = link_gains(&s, &params, &mut rng).unwrap();
        assert_eq!(gains.tx_aps, s.transmitters());
        assert_eq!(gains.comm.len(), gains.tx_aps.len());
        assert_eq!(gains.comm[0].len(), params.k_u);
        assert_eq!(gains.radar[0].len(), params.t_g);
        assert_eq!(gains.radar[0][0].len(), params.n_rx_per_target);
        for row in &gains.comm {
            for &b in row {
                assert!(b > 0.0 && b < 1.0);
            }
        }
    }

    #[test]
    fn colocated_pairs_share_sites() {
        let params = SimParams {
            layout: ApLayout::ColocatedPairs,
            ..desk_params()
        };
        let s = generate_scenario(&params, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
        assert_eq!(s.ap_positions.len(), params.n_ap);
        for pair in s.ap_positions.chunks(2) {
            if pair.len() == 2 {
                assert_eq!(pair[0], pair[1]);
            }
        }
    }

    #[test]
    fn shadowing_moves_comm_gains_only() {
        let params = desk_params();
        let mut shadowed = desk_params();
        shadowed.shadowing = true;
        let s = generate_scenario(&params, &mut ChaCha8Rng::seed_from_u64(14)).unwrap();
        let plain = link_gains(&s, &params, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let noisy = link_gains(&s, &shadowed, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(plain.radar, noisy.radar);
        let moved = plain
            .comm
            .iter()
            .flatten()
            .zip(noisy.comm.iter().flatten())
            .filter(|(a, b)| (*a - *b).abs() > 1e-18)
            .count();
        assert!(
            moved > 0,
            "shadowing draws should perturb the communication gains"
        );
    }

    #[test]
    fn invalid_params_rejected() {
        let mut params = desk_params();
        params.n_ap = 4;
        params.t_g = 2;
        params.n_rx_per_target = 2;
        assert!(generate_scenario(&params, &mut ChaCha8Rng::seed_from_u64(1)).is_err());
    }
}
