//! Oracle suites: independent cross-checks of the closed-form moments, the
//! analytic information entries and the coupling-factor derivatives. Used
//! by both the CLI `oracle-check` run and the acceptance tests.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::fisher::{finite_difference_fim, path_fim, BeamLoad};
use crate::otfs::{cross_ambiguity, AmbiguityMoments, Derivative, OtfsGrid};
use crate::scenario::steering_vector;

/// Outcome of one oracle case.
#[derive(Debug, Clone)]
pub struct OracleCase {
    /// Which suite produced the case.
    pub suite: &'static str,
    /// Human-readable case coordinates.
    pub label: String,
    /// Number of individual comparisons inside the case.
    pub comparisons: usize,
    /// Worst relative error (or ratio deviation for convergence cases).
    pub worst: f64,
    pub pass: bool,
}

fn rel_err(a: Complex64, b: Complex64) -> f64 {
    let scale = a.norm().max(b.norm()).max(1e-30);
    (a - b).norm() / scale
}

/// Closed-form vs. brute-force signal moments on every grid pair from
/// `sizes`, at `points` random off-grid delays and random Dopplers each.
pub fn check_moment_equivalence(
    seed: u64,
    sizes: &[usize],
    points: usize,
    tol: f64,
) -> Vec<OracleCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for &m in sizes {
        for &n in sizes {
            let grid = OtfsGrid::derive(m, n, 1.0, 0.0).expect("grid");
            let mut worst = 0.0f64;
            let mut comparisons = 0;
            for _ in 0..points {
                // off-grid delay: strictly between two taps
                let tap = rng.random_range(0..m) as f64;
                let tau = (tap + 0.05 + 0.9 * rng.random::<f64>()) * grid.delay_resolution();
                let doppler =
                    (rng.random::<f64>() - 0.5) * 2.0 * n as f64 * grid.doppler_resolution();
                let brute = AmbiguityMoments::brute_force(&grid, tau, doppler).expect("brute");
                let closed = AmbiguityMoments::closed_form(&grid, tau);
                for (a, b) in [
                    (brute.r00, closed.r00),
                    (brute.r10, closed.r10),
                    (brute.r01, closed.r01),
                    (brute.r11, closed.r11),
                    (brute.r20, closed.r20),
                    (brute.r02, closed.r02),
                ] {
                    worst = worst.max(rel_err(a, b));
                    comparisons += 1;
                }
            }
            out.push(OracleCase {
                suite: "moment-equivalence",
                label: format!("grid {m}x{n}"),
                comparisons,
                worst,
                pass: worst <= tol,
            });
        }
    }
    out
}

/// Analytic information entries vs. the finite-difference oracle on random
/// tiny configurations.
pub fn check_fim_equivalence(seed: u64, configs: usize, tol: f64) -> Vec<OracleCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = OtfsGrid::derive(2, 2, 1.0, 0.0).expect("grid");
    let mut out = Vec::new();
    for case in 0..configs {
        let m_t = if rng.random::<bool>() { 2 } else { 3 };
        let aoa = (rng.random::<f64>() - 0.5) * 2.0;
        let aod = (rng.random::<f64>() - 0.5) * 2.0;
        let delay = (rng.random_range(0..grid.m) as f64 + 0.1 + 0.8 * rng.random::<f64>())
            * grid.delay_resolution();
        let doppler = (rng.random::<f64>() - 0.5) * grid.doppler_resolution();
        let gain = Complex64::new(rng.random::<f64>() + 0.3, rng.random::<f64>() - 0.5);
        let raw = DMatrix::<Complex64>::from_fn(m_t, m_t, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let load = BeamLoad {
            matrix: &raw * raw.adjoint()
                + DMatrix::identity(m_t, m_t).map(|x: f64| Complex64::new(0.05 * x, 0.0)),
        };
        let noise = 0.5 + rng.random::<f64>();

        let analytic = path_fim(
            gain,
            &steering_vector(aoa, m_t),
            &steering_vector(aod, m_t),
            &load,
            &AmbiguityMoments::closed_form(&grid, delay),
            noise,
        )
        .expect("analytic entries");
        let fd = finite_difference_fim(
            &grid, aoa, aod, delay, doppler, gain, m_t, &load, noise, 1e-5,
        )
        .expect("fd oracle");

        let scale = analytic.norm();
        let mut worst = 0.0f64;
        let mut comparisons = 0;
        for i in 0..6 {
            for j in 0..6 {
                let a = analytic[(i, j)];
                let b = fd.fim[(i, j)];
                if a.abs() > 1e-12 * scale {
                    worst = worst.max((a - b).abs() / a.abs());
                    comparisons += 1;
                }
            }
        }
        out.push(OracleCase {
            suite: "fim-equivalence",
            label: format!("config {case} (m_t={m_t})"),
            comparisons,
            worst,
            pass: worst <= tol,
        });
    }
    out
}

/// Central-difference convergence of the coupling-factor derivatives:
/// halving the step must shrink the aggregated error by a factor inside
/// `ratio_window` (order-2 behaviour) at every random point.
pub fn check_derivative_convergence(
    seed: u64,
    points: usize,
    ratio_window: (f64, f64),
) -> Vec<OracleCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for case in 0..points {
        let m = rng.random_range(2..=8usize);
        let n = rng.random_range(2..=8usize);
        let grid = OtfsGrid::derive(m, n, 1.0, 0.0).expect("grid");
        let tau = (rng.random_range(0..m) as f64 + 0.1 + 0.8 * rng.random::<f64>())
            * grid.delay_resolution();
        let doppler = (rng.random::<f64>() - 0.5) * 2.0 * grid.doppler_resolution() * n as f64;

        // a fixed batch of index tuples; errors aggregate in the 2-norm
        let tuples: Vec<(usize, usize, usize, usize)> = (0..8)
            .map(|_| {
                (
                    rng.random_range(0..n),
                    rng.random_range(0..m),
                    rng.random_range(0..n),
                    rng.random_range(0..m),
                )
            })
            .collect();

        let err = |which: Derivative, h_tau: f64, h_nu: f64| -> f64 {
            let mut total = 0.0;
            for &(k, l, k_in, l_in) in &tuples {
                let at = |t: f64, v: f64| {
                    cross_ambiguity(&grid, k, l, k_in, l_in, t, v, Derivative::Value).unwrap()
                };
                let analytic =
                    cross_ambiguity(&grid, k, l, k_in, l_in, tau, doppler, which).unwrap();
                let fd = match which {
                    Derivative::Delay => {
                        (at(tau + h_tau, doppler) - at(tau - h_tau, doppler)) / (2.0 * h_tau)
                    }
                    Derivative::Doppler => {
                        (at(tau, doppler + h_nu) - at(tau, doppler - h_nu)) / (2.0 * h_nu)
                    }
                    Derivative::Value => unreachable!(),
                };
                total += (fd - analytic).norm_sqr();
            }
            total.sqrt()
        };

        let h_tau = 1e-3 * grid.delay_resolution();
        let h_nu = 1e-3 * grid.doppler_resolution();
        let ratio_delay =
            err(Derivative::Delay, h_tau, h_nu) / err(Derivative::Delay, h_tau / 2.0, h_nu);
        let ratio_doppler =
            err(Derivative::Doppler, h_tau, h_nu) / err(Derivative::Doppler, h_tau, h_nu / 2.0);

        let ok = |r: f64| r >= ratio_window.0 && r <= ratio_window.1;
        let worst = (ratio_delay - 4.0).abs().max((ratio_doppler - 4.0).abs());
        out.push(OracleCase {
            suite: "derivative-convergence",
            label: format!("point {case} ({m}x{n}) ratios {ratio_delay:.2}/{ratio_doppler:.2}"),
            comparisons: 2,
            worst,
            pass: ok(ratio_delay) && ok(ratio_doppler),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_oracle_suites_pass() {
        let cases = check_moment_equivalence(3, &[2, 3], 3, 1e-9);
        assert_eq!(cases.len(), 4);
        assert!(cases.iter().all(|c| c.pass), "{cases:?}");

        let fim = check_fim_equivalence(5, 3, 1e-4);
        assert!(fim.iter().all(|c| c.pass), "{fim:?}");

        let conv = check_derivative_convergence(7, 5, (3.5, 4.5));
        assert!(conv.iter().all(|c| c.pass), "{conv:?}");
    }
}
