//! Fisher information for bi-static target positioning: assembly of the
//! per-path 6x6 information matrix over the parameters
//! (arrival frequency, departure frequency, delay, Doppler, gain real,
//! gain imaginary), Schur reduction to the 4x4 equivalent matrix, mapping
//! to the 2x2 position information via the geometry Jacobian, the
//! trace-inverse position error bound, and a single-beam approximation
//! that is linear in the sensing power coefficients.
//!
//! A finite-difference oracle differentiates the effective channel built
//! entrywise from the cross-ambiguity factor and validates every analytic
//! entry on small grids.

use nalgebra::{DMatrix, DVector, Matrix2, SMatrix, Vector2};
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::comm::PowerAllocation;
use crate::error::{Error, Result};
use crate::otfs::{cross_ambiguity, AmbiguityMoments, Derivative, OtfsGrid};
use crate::scenario::{steering_vector, PathGeometry, SPEED_OF_LIGHT};

/// 6x6 real symmetric information matrix in the parameter order
/// (aoa, aod, delay, doppler, gain_re, gain_im).
pub type Fim6 = SMatrix<f64, 6, 6>;
/// 4x4 equivalent information over the geometric parameters.
pub type Efim4 = SMatrix<f64, 4, 4>;
/// Rows are the gradients of (aoa, aod, delay, doppler) w.r.t. position.
pub type Jacobian42 = SMatrix<f64, 4, 2>;

/// Transmit-covariance surrogate of one transmitting AP: the power-weighted
/// sum of beam outer products, with communication beams entering in
/// expectation as scaled identities.
#[derive(Debug, Clone)]
pub struct BeamLoad {
    pub matrix: DMatrix<Complex64>,
}

/// Build the transmit covariance `V_p` from sensing beams
/// `(eta_pt, unit-norm beam vector)` and communication loads
/// `(eta_pq, identity trace scale)`.
pub fn transmit_covariance(
    m_t: usize,
    sensing: &[(f64, &DVector<Complex64>)],
    comm_identity: &[(f64, f64)],
) -> Result<BeamLoad> {
    let mut v = DMatrix::<Complex64>::zeros(m_t, m_t);
    for (eta, beam) in sensing {
        if *eta < 0.0 {
            return Err(Error::Argument(format!(
                "negative sensing coefficient {eta}"
            )));
        }
        if beam.len() != m_t {
            return Err(Error::Argument(format!(
                "beam length {} does not match array size {m_t}",
                beam.len()
            )));
        }
        v += (*beam * beam.adjoint()).scale(*eta);
    }
    let mut identity_scale = 0.0;
    for (eta, scale) in comm_identity {
        if *eta < 0.0 {
            return Err(Error::Argument(format!(
                "negative communication coefficient {eta}"
            )));
        }
        identity_scale += eta * scale;
    }
    for i in 0..m_t {
        v[(i, i)] += Complex64::new(identity_scale, 0.0);
    }
    Ok(BeamLoad { matrix: v })
}

/// `[0, 1, ..., len-1]` elementwise product with `h`.
fn ramp(h: &DVector<Complex64>) -> DVector<Complex64> {
    DVector::from_fn(h.len(), |i, _| h[i] * i as f64)
}

fn quad_form(a: &DVector<Complex64>, v: &DMatrix<Complex64>, b: &DVector<Complex64>) -> Complex64 {
    a.dotc(&(v * b))
}

/// All 6x6 information entries of one reflected path, assembled from the
/// array responses, the transmit covariance and the signal moments.
///
/// `moments` must be evaluated at the same delay-tap count as the path's
/// delay.
pub fn path_fim(
    gain: Complex64,
    rx_response: &DVector<Complex64>,
    tx_response: &DVector<Complex64>,
    load: &BeamLoad,
    moments: &AmbiguityMoments,
    noise_power: f64,
) -> Result<Fim6> {
    if !(noise_power > 0.0) {
        return Err(Error::Argument(format!(
            "noise power must be positive, got {noise_power}"
        )));
    }
    let m_t = rx_response.len();
    if tx_response.len() != m_t || load.matrix.nrows() != m_t || load.matrix.ncols() != m_t {
        return Err(Error::Argument(
            "array response / covariance dimension mismatch".into(),
        ));
    }

    let rx_ramp = ramp(rx_response);
    let tx_ramp = ramp(tx_response);
    let v = &load.matrix;

    let rx_energy = rx_response.dotc(rx_response); // h_tr' h_tr
    let rx_ramp_energy = rx_ramp.dotc(&rx_ramp); // hd_tr' hd_tr
    let rx_cross = rx_ramp.dotc(rx_response); // hd_tr' h_tr
    let tx_quad = quad_form(tx_response, v, tx_response); // h_pt' V h_pt
    let tx_quad_ramp = quad_form(&tx_ramp, v, &tx_ramp); // hd_pt' V hd_pt
    let tx_cross = quad_form(tx_response, v, &tx_ramp); // h_pt' V hd_pt
    let tx_cross_rev = quad_form(&tx_ramp, v, tx_response); // hd_pt' V h_pt

    let s = 2.0 / noise_power;
    let j = Complex64::new(0.0, 1.0);
    let bb = Complex64::new(gain.norm_sqr(), 0.0);
    let gc = gain.conj();

    let mut f = Fim6::zeros();
    f[(0, 0)] = (bb * rx_ramp_energy * tx_quad * moments.r00).re;
    f[(1, 1)] = (bb * rx_energy * tx_quad_ramp * moments.r00).re;
    f[(2, 2)] = (bb * rx_energy * tx_quad * moments.r20).re;
    f[(3, 3)] = (bb * rx_energy * tx_quad * moments.r02).re;
    f[(4, 4)] = (rx_energy * tx_quad * moments.r00).re;
    f[(5, 5)] = (rx_energy * tx_quad * moments.r00).re;

    f[(0, 1)] = -(bb * rx_cross * tx_cross_rev * moments.r00).re;
    f[(0, 2)] = (j * bb * rx_cross * tx_quad * moments.r10).re;
    f[(0, 3)] = (j * bb * rx_cross * tx_quad * moments.r01).re;
    f[(0, 4)] = (j * gc * rx_cross * tx_quad * moments.r00).re;
    f[(0, 5)] = -(gc * rx_cross * tx_quad * moments.r00).re;

    f[(1, 2)] = -(j * bb * rx_energy * tx_cross * moments.r10).re;
    f[(1, 3)] = -(j * bb * rx_energy * tx_cross * moments.r01).re;
    f[(1, 4)] = -(j * gc * rx_energy * tx_cross * moments.r00).re;
    f[(1, 5)] = (gc * rx_energy * tx_cross * moments.r00).re;

    f[(2, 3)] = (bb * rx_energy * tx_quad * moments.r11).re;
    f[(2, 4)] = (gc * rx_energy * tx_quad * moments.r10.conj()).re;
    f[(2, 5)] = (j * gc * rx_energy * tx_quad * moments.r10.conj()).re;

    f[(3, 4)] = (gc * rx_energy * tx_quad * moments.r01.conj()).re;
    f[(3, 5)] = (j * gc * rx_energy * tx_quad * moments.r01.conj()).re;

    f[(4, 5)] = (j * rx_energy * tx_quad * moments.r00).re;

    for i in 0..6 {
        for k in 0..6 {
            if i < k {
                f[(k, i)] = f[(i, k)];
            }
            f[(i, k)] *= s;
        }
    }
    Ok(f)
}

/// Schur complement eliminating the complex-gain block: the 4x4 equivalent
/// information over the geometric parameters. The boolean reports whether a
/// rank-deficient gain block forced the pseudo-inverse path.
pub fn equivalent_fim(f: &Fim6) -> (Efim4, bool) {
    let f11 = f.fixed_view::<4, 4>(0, 0).into_owned();
    let f12 = f.fixed_view::<4, 2>(0, 4).into_owned();
    let f22 = f.fixed_view::<2, 2>(4, 4).into_owned();

    let det = f22[(0, 0)] * f22[(1, 1)] - f22[(0, 1)] * f22[(1, 0)];
    let (inv, degenerate) = if det.abs() > 1e-300 {
        (
            Matrix2::new(f22[(1, 1)], -f22[(0, 1)], -f22[(1, 0)], f22[(0, 0)]) / det,
            false,
        )
    } else {
        (pseudo_inverse_2x2(&Matrix2::from(f22)), true)
    };
    (f11 - f12 * inv * f12.transpose(), degenerate)
}

/// Moore-Penrose inverse of a symmetric 2x2 matrix via its eigensystem.
fn pseudo_inverse_2x2(m: &Matrix2<f64>) -> Matrix2<f64> {
    let half_trace = (m[(0, 0)] + m[(1, 1)]) / 2.0;
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let gap = (half_trace * half_trace - det).max(0.0).sqrt();
    let eigs = [half_trace + gap, half_trace - gap];
    let tol = 1e-12 * eigs[0].abs().max(eigs[1].abs()).max(1e-300);
    let mut out = Matrix2::zeros();
    for lambda in eigs {
        if lambda.abs() <= tol {
            continue;
        }
        // eigenvector of a symmetric 2x2 for eigenvalue lambda
        let v = if m[(0, 1)].abs() > 1e-300 {
            Vector2::new(m[(0, 1)], lambda - m[(0, 0)])
        } else if (m[(0, 0)] - lambda).abs() <= (m[(1, 1)] - lambda).abs() {
            Vector2::new(1.0, 0.0)
        } else {
            Vector2::new(0.0, 1.0)
        };
        let n = v.norm();
        if n <= 0.0 {
            continue;
        }
        let u = v / n;
        out += u * u.transpose() / lambda;
    }
    out
}

/// Gradient rows of the path parameters with respect to the target
/// position, in the printed sign convention (see the delay-row note in the
/// crate tests: the analytic gradient of the bi-static delay flips the
/// sign of the transmitter leg).
pub fn position_jacobian(
    geom: &PathGeometry,
    u_tx: Vector2<f64>,
    u_rx: Vector2<f64>,
    target_vel: Vector2<f64>,
    wavelength: f64,
) -> Result<Jacobian42> {
    if geom.d_pt <= 0.0 || geom.d_tr <= 0.0 {
        return Err(Error::DegenerateGeometry(
            "zero-length path leg in Jacobian".into(),
        ));
    }
    let eye = Matrix2::identity();
    let proj_tr = (eye - geom.rho_tr * geom.rho_tr.transpose()) / geom.d_tr;
    let proj_pt = (eye - geom.rho_pt * geom.rho_pt.transpose()) / geom.d_pt;

    let row_aoa = PI * (proj_tr.transpose() * u_rx);
    let row_aod = PI * (proj_pt.transpose() * u_tx);
    let row_delay = (geom.rho_tr + geom.rho_pt) / SPEED_OF_LIGHT;
    let row_doppler = (proj_tr + proj_pt).transpose() * target_vel / wavelength;

    let mut jac = Jacobian42::zeros();
    jac.set_row(0, &row_aoa.transpose());
    jac.set_row(1, &row_aod.transpose());
    jac.set_row(2, &row_delay.transpose());
    jac.set_row(3, &row_doppler.transpose());
    Ok(jac)
}

/// Per-path diagonal information coefficients of the single-beam
/// approximation: angle, delay and Doppler terms, each multiplying the
/// outer product of the matching Jacobian row.
#[derive(Debug, Clone, Copy)]
pub struct ApproxCoeffs {
    pub angle: f64,
    pub delay: f64,
    pub doppler: f64,
}

/// Coefficients from the array size, grid size and the path's moments.
/// Squaring the purely imaginary first-order moments yields the real
/// negative corrections.
pub fn approx_information_coeffs(
    m_t: usize,
    grid: &OtfsGrid,
    moments: &AmbiguityMoments,
) -> ApproxCoeffs {
    let mt = m_t as f64;
    let mn = (grid.m * grid.n) as f64;
    ApproxCoeffs {
        angle: (mt - 1.0) * (2.0 * mt - 1.0) * mn / 6.0 - (mt - 1.0) * (mt - 1.0) * mn / 4.0,
        delay: (moments.r20 + moments.r10 * moments.r10 / mn).re,
        doppler: (moments.r02 + moments.r01 * moments.r01 / mn).re,
    }
}

/// Everything the position-information assembly needs about one
/// (transmitter, receiver) path of a target.
#[derive(Debug, Clone)]
pub struct PathTerms {
    /// Index into the transmitter list, for power-coefficient addressing.
    pub tx: usize,
    /// Complex path gain (reflectivity times the root radar gain).
    pub gain: Complex64,
    /// Receive-array response at the arrival frequency.
    pub rx_response: DVector<Complex64>,
    /// Transmit-array response at the departure frequency.
    pub tx_response: DVector<Complex64>,
    /// Geometry Jacobian of this path.
    pub jacobian: Jacobian42,
    /// Closed-form moments at the path's delay-tap count.
    pub moments: AmbiguityMoments,
    /// Approximation coefficients for the same moments.
    pub approx: ApproxCoeffs,
}

/// Which position-information pipeline to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FimMode {
    /// Full per-path 6x6 assembly, Schur reduction and Jacobian mapping.
    Exact,
    /// Single-beam approximation, linear in the sensing coefficients.
    Approx,
}

/// 2x2 position information of target `t` accumulated over its reflected
/// paths. `loads` maps transmitter index to its transmit covariance and is
/// only consulted in exact mode.
pub fn position_fim(
    paths: &[PathTerms],
    mode: FimMode,
    alloc: &PowerAllocation,
    target: usize,
    loads: &[BeamLoad],
    noise_power: f64,
) -> Result<Matrix2<f64>> {
    if paths.is_empty() {
        return Err(Error::Argument(
            "position information requires at least one path".into(),
        ));
    }
    let mut acc = Matrix2::<f64>::zeros();
    for path in paths {
        match mode {
            FimMode::Exact => {
                let f6 = path_fim(
                    path.gain,
                    &path.rx_response,
                    &path.tx_response,
                    &loads[path.tx],
                    &path.moments,
                    noise_power,
                )?;
                let (e4, _) = equivalent_fim(&f6);
                acc += path.jacobian.transpose() * e4 * path.jacobian;
            }
            FimMode::Approx => {
                let eta = alloc.target(path.tx, target);
                let weight = eta * 2.0 * path.gain.norm_sqr() / noise_power;
                let j1 = path.jacobian.row(0).transpose();
                let j3 = path.jacobian.row(2).transpose();
                let j4 = path.jacobian.row(3).transpose();
                acc += (j1 * j1.transpose() * path.approx.angle
                    + j3 * j3.transpose() * path.approx.delay
                    + j4 * j4.transpose() * path.approx.doppler)
                    * weight;
            }
        }
    }
    Ok(acc)
}

/// Full evaluation trail of one target through the exact pipeline: every
/// path's 6x6 information matrix, its 4x4 reduction, the accumulated 2x2
/// position information and the resulting bound.
#[derive(Debug, Clone)]
pub struct FisherBundle {
    pub path_fims: Vec<Fim6>,
    pub equivalent_fims: Vec<Efim4>,
    pub position_fim: Matrix2<f64>,
    pub bound: PositionBound,
}

/// Exact-pipeline evaluation of target `t` keeping all intermediates.
pub fn fisher_bundle(
    paths: &[PathTerms],
    loads: &[BeamLoad],
    noise_power: f64,
) -> Result<FisherBundle> {
    if paths.is_empty() {
        return Err(Error::Argument(
            "position information requires at least one path".into(),
        ));
    }
    let mut path_fims = Vec::with_capacity(paths.len());
    let mut equivalent_fims = Vec::with_capacity(paths.len());
    let mut position = Matrix2::<f64>::zeros();
    for path in paths {
        let f6 = path_fim(
            path.gain,
            &path.rx_response,
            &path.tx_response,
            &loads[path.tx],
            &path.moments,
            noise_power,
        )?;
        let (e4, _) = equivalent_fim(&f6);
        position += path.jacobian.transpose() * e4 * path.jacobian;
        path_fims.push(f6);
        equivalent_fims.push(e4);
    }
    let bound = peb_from_fim(&position);
    Ok(FisherBundle {
        path_fims,
        equivalent_fims,
        position_fim: position,
        bound,
    })
}

/// Trace-inverse position bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionBound {
    /// Variance bound in square meters; infinite when the target is not
    /// localizable from the given information.
    pub crlb: f64,
    /// Error bound in meters, the square root of `crlb`.
    pub peb: f64,
}

/// `Tr(F^{-1})` of a 2x2 position information matrix, evaluated as
/// `(F11 + F22) / det(F)`. A non-positive or non-finite determinant yields
/// the infinite sentinel instead of an error.
pub fn peb_from_fim(f: &Matrix2<f64>) -> PositionBound {
    let det = f[(0, 0)] * f[(1, 1)] - f[(0, 1)] * f[(1, 0)];
    let trace = f[(0, 0)] + f[(1, 1)];
    if !(det > 0.0) || !det.is_finite() || !trace.is_finite() {
        return PositionBound {
            crlb: f64::INFINITY,
            peb: f64::INFINITY,
        };
    }
    let crlb = trace / det;
    if !(crlb > 0.0) {
        return PositionBound {
            crlb: f64::INFINITY,
            peb: f64::INFINITY,
        };
    }
    PositionBound {
        crlb,
        peb: crlb.sqrt(),
    }
}

/// Finite-difference information matrix with a conditioning report.
#[derive(Debug, Clone)]
pub struct FdFim {
    pub fim: Fim6,
    /// False when the requested relative step is outside the window where
    /// the central difference is trustworthy.
    pub conditioning_ok: bool,
}

/// Grid-size cap for the finite-difference oracle.
pub const FD_GRID_LIMIT: usize = 64;
/// Array-size cap for the finite-difference oracle.
pub const FD_ARRAY_LIMIT: usize = 4;

/// Finite-difference oracle for [`path_fim`].
///
/// Builds the noiseless effective per-bin channel from the cross-ambiguity
/// factor and the two array responses (receive response times the
/// conjugate-transposed transmit response), central-differences it in each
/// of the six parameters with relative step `step`, contracts derivative
/// pairs against the transmit covariance under unit symbol covariance, and
/// applies the `2/noise * Re` rule. Independent of the analytic entries
/// and of the closed-form moments.
#[allow(clippy::too_many_arguments)]
pub fn finite_difference_fim(
    grid: &OtfsGrid,
    aoa: f64,
    aod: f64,
    delay: f64,
    doppler: f64,
    gain: Complex64,
    m_t: usize,
    load: &BeamLoad,
    noise_power: f64,
    step: f64,
) -> Result<FdFim> {
    if grid.m * grid.n > FD_GRID_LIMIT {
        return Err(Error::ResourceLimit(format!(
            "finite differences limited to {FD_GRID_LIMIT} bins, got {}",
            grid.m * grid.n
        )));
    }
    if m_t > FD_ARRAY_LIMIT {
        return Err(Error::ResourceLimit(format!(
            "finite differences limited to {FD_ARRAY_LIMIT} antennas, got {m_t}"
        )));
    }
    if !(step > 0.0) {
        return Err(Error::Argument(format!(
            "step must be positive, got {step}"
        )));
    }
    let conditioning_ok = (1e-9..=1e-2).contains(&step);

    // per-parameter absolute steps on each parameter's natural scale
    let scales = [
        1.0,
        1.0,
        grid.delay_resolution(),
        grid.doppler_resolution(),
        gain.norm().max(1.0),
        gain.norm().max(1.0),
    ];

    let bins = grid.m * grid.n;
    let eval = |theta: &[f64; 6]| -> Result<Vec<DMatrix<Complex64>>> {
        let u = steering_vector(theta[0], m_t);
        let v = steering_vector(theta[1], m_t);
        let outer = u * v.adjoint();
        let g = Complex64::new(theta[4], theta[5]);
        let mut out = Vec::with_capacity(bins * bins);
        for k in 0..grid.n {
            for l in 0..grid.m {
                for k_in in 0..grid.n {
                    for l_in in 0..grid.m {
                        let psi = cross_ambiguity(
                            grid,
                            k,
                            l,
                            k_in,
                            l_in,
                            theta[2],
                            theta[3],
                            Derivative::Value,
                        )?;
                        out.push(&outer * (g * psi));
                    }
                }
            }
        }
        Ok(out)
    };

    let theta0 = [aoa, aod, delay, doppler, gain.re, gain.im];
    let mut derivs: Vec<Vec<DMatrix<Complex64>>> = Vec::with_capacity(6);
    for i in 0..6 {
        let h = step * scales[i];
        let mut plus = theta0;
        plus[i] += h;
        let mut minus = theta0;
        minus[i] -= h;
        let fp = eval(&plus)?;
        let fm = eval(&minus)?;
        let d: Vec<DMatrix<Complex64>> = fp
            .into_iter()
            .zip(fm)
            .map(|(a, b)| (a - b).map(|z| z / (2.0 * h)))
            .collect();
        derivs.push(d);
    }

    let mut fim = Fim6::zeros();
    for i in 0..6 {
        for jj in i..6 {
            let mut acc = Complex64::new(0.0, 0.0);
            for b in 0..bins * bins {
                let p = &derivs[jj][b] * &load.matrix;
                for r in 0..m_t {
                    for c in 0..m_t {
                        acc += derivs[i][b][(r, c)].conj() * p[(r, c)];
                    }
                }
            }
            let val = 2.0 / noise_power * acc.re;
            fim[(i, jj)] = val;
            fim[(jj, i)] = val;
        }
    }
    Ok(FdFim {
        fim,
        conditioning_ok,
    })
}
