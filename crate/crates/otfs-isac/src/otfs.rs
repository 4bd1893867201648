//! Delay-Doppler grid machinery: the cross-ambiguity coupling factor between
//! DD grid points induced by a path with delay `tau` and Doppler `nu`, its
//! partial derivatives, and the aggregate signal moments that enter the
//! Fisher information entries.
//!
//! The coupling factor factorizes into a Doppler-axis sum over `N` symbols
//! and a delay-axis sum over `M` subcarriers, so a single value costs
//! `O(N + M)`. Moments are available two ways: a brute-force quadruple sum
//! over all grid index pairs (the oracle, restricted to small grids) and
//! closed forms that depend on delay only through the delay-tap count.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// OTFS frame parameters. `t_sym` is always `1/delta_f`; the cyclic-prefix
/// length follows the ceiling rule from `tau_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OtfsGrid {
    /// Subcarriers (delay axis size).
    pub m: usize,
    /// Symbols (Doppler axis size).
    pub n: usize,
    /// Subcarrier spacing in Hz.
    pub delta_f: f64,
    /// Symbol duration in seconds, `1/delta_f`.
    pub t_sym: f64,
    /// Cyclic prefix length in samples, `ceil(tau_max * m * delta_f)`.
    pub n_cp: usize,
    /// Maximum channel delay the CP must cover, in seconds.
    pub tau_max: f64,
}

impl OtfsGrid {
    /// Build a grid from its free parameters, filling the derived fields.
    pub fn derive(m: usize, n: usize, delta_f: f64, tau_max: f64) -> Result<Self> {
        if m < 1 || n < 1 {
            return Err(Error::Config(format!(
                "grid must be at least 1x1, got {m}x{n}"
            )));
        }
        if !(delta_f > 0.0) {
            return Err(Error::Config(format!(
                "subcarrier spacing must be positive, got {delta_f}"
            )));
        }
        if !(tau_max >= 0.0) {
            return Err(Error::Config(format!(
                "tau_max must be nonnegative, got {tau_max}"
            )));
        }
        let n_cp = (tau_max * m as f64 * delta_f).ceil() as usize;
        Ok(Self {
            m,
            n,
            delta_f,
            t_sym: 1.0 / delta_f,
            n_cp,
            tau_max,
        })
    }

    /// Occupied bandwidth `m * delta_f` in Hz.
    pub fn bandwidth(&self) -> f64 {
        self.m as f64 * self.delta_f
    }

    /// Delay bin width `1/(m delta_f)` in seconds.
    pub fn delay_resolution(&self) -> f64 {
        1.0 / (self.m as f64 * self.delta_f)
    }

    /// Doppler bin width `1/(n t_sym)` in Hz.
    pub fn doppler_resolution(&self) -> f64 {
        1.0 / (self.n as f64 * self.t_sym)
    }

    /// Spectral-efficiency overhead factor `MN / (MN + N * n_cp)` for one
    /// cyclic prefix per OTFS symbol.
    pub fn cp_overhead_factor(&self) -> f64 {
        let mn = (self.m * self.n) as f64;
        mn / (mn + (self.n * self.n_cp) as f64)
    }

    /// Delay tap count `ceil(tau * m * delta_f)`.
    ///
    /// Products that are an integer up to 1e-9 relative rounding snap to
    /// that integer before the ceiling, so an on-boundary delay resolves to
    /// `tau * m * delta_f` rather than one tap above it.
    pub fn delay_tap(&self, tau: f64) -> usize {
        let x = tau * self.m as f64 * self.delta_f;
        let nearest = x.round();
        let snapped = if (x - nearest).abs() <= 1e-9 * nearest.abs().max(1.0) {
            nearest
        } else {
            x.ceil()
        };
        snapped.max(0.0) as usize
    }
}

/// Which quantity `cross_ambiguity` evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Derivative {
    /// The coupling factor itself.
    Value,
    /// Partial derivative with respect to path delay.
    Delay,
    /// Partial derivative with respect to path Doppler.
    Doppler,
}

/// `(sum of e^{j theta i}, sum of i e^{j theta i})` for `i in 0..len`,
/// accumulated by incremental rotation.
fn phase_ramp_sums(theta: f64, len: usize) -> (Complex64, Complex64) {
    let step = Complex64::from_polar(1.0, theta);
    let mut term = Complex64::new(1.0, 0.0);
    let mut plain = Complex64::new(0.0, 0.0);
    let mut weighted = Complex64::new(0.0, 0.0);
    for i in 0..len {
        plain += term;
        weighted += term * i as f64;
        term *= step;
    }
    (plain, weighted)
}

/// True when input delay tap `l_in` falls in the inter-symbol-interference
/// range `[m - l_tau, m - 1]` (delays that wrap past the symbol boundary).
fn is_isi(l_in: usize, l_tau: usize, m: usize) -> bool {
    l_in + l_tau >= m
}

/// Doppler phase slope `g(l) = l/(m delta_f)` for ICI taps and
/// `l/(m delta_f) - t_sym` for ISI taps.
fn doppler_slope(l_in: usize, l_tau: usize, grid: &OtfsGrid) -> f64 {
    let base = l_in as f64 / (grid.m as f64 * grid.delta_f);
    if is_isi(l_in, l_tau, grid.m) {
        base - grid.t_sym
    } else {
        base
    }
}

/// Cross-ambiguity coupling from input DD bin `(k_in, l_in)` to output bin
/// `(k, l)` for a path with the given delay and Doppler, or one of its
/// derivatives.
///
/// The ICI/ISI membership is treated as locally constant in `tau`: the
/// derivatives differentiate only the smooth phases.
#[allow(clippy::too_many_arguments)]
pub fn cross_ambiguity(
    grid: &OtfsGrid,
    k: usize,
    l: usize,
    k_in: usize,
    l_in: usize,
    tau: f64,
    doppler: f64,
    which: Derivative,
) -> Result<Complex64> {
    if k >= grid.n || k_in >= grid.n {
        return Err(Error::Argument(format!(
            "Doppler index out of range: k={k}, k_in={k_in}, n={}",
            grid.n
        )));
    }
    if l >= grid.m || l_in >= grid.m {
        return Err(Error::Argument(format!(
            "delay index out of range: l={l}, l_in={l_in}, m={}",
            grid.m
        )));
    }
    if !(tau >= 0.0) {
        return Err(Error::Argument(format!(
            "delay must be nonnegative, got {tau}"
        )));
    }

    let m = grid.m as f64;
    let n = grid.n as f64;
    let l_tau = grid.delay_tap(tau);

    let theta_sym = 2.0 * PI * (k_in as f64 - k as f64 + doppler * n * grid.t_sym) / n;
    let theta_sub = 2.0 * PI * (l_in as f64 - l as f64 + tau * m * grid.delta_f) / m;
    let (sym_plain, sym_weighted) = phase_ramp_sums(theta_sym, grid.n);
    let (sub_plain, sub_weighted) = phase_ramp_sums(theta_sub, grid.m);

    // Common phase of the delay-axis factor: Doppler rotation of the input
    // tap plus the extra ISI rotation when the tap wraps.
    let mut out_phase = 2.0 * PI * doppler * l_in as f64 / (m * grid.delta_f);
    if is_isi(l_in, l_tau, grid.m) {
        out_phase -= 2.0 * PI * (doppler * grid.t_sym + k_in as f64 / n);
    }
    let sub_common = Complex64::from_polar(1.0, out_phase);

    let norm = 1.0 / (n * m);
    let j = Complex64::new(0.0, 1.0);
    let value = match which {
        Derivative::Value => sym_plain * sub_common * sub_plain * norm,
        Derivative::Delay => {
            j * 2.0 * PI * grid.delta_f * sym_plain * sub_common * sub_weighted * norm
        }
        Derivative::Doppler => {
            let symbol_term = grid.t_sym * sym_weighted * sub_common * sub_plain;
            let tap_term = doppler_slope(l_in, l_tau, grid) * sym_plain * sub_common * sub_plain;
            j * 2.0 * PI * (symbol_term + tap_term) * norm
        }
    };
    Ok(value)
}

/// The six signal moments indexed by derivative orders `(i, j)` in
/// (delay, Doppler): `r00 = (0,0)`, `r10 = (1,0)`, `r01 = (0,1)`,
/// `r11 = (1,1)`, `r20 = (2,0)`, `r02 = (0,2)`.
///
/// In closed form `r00`, `r20`, `r02`, `r11` are real and `r10`, `r01`
/// purely imaginary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmbiguityMoments {
    pub r00: Complex64,
    pub r10: Complex64,
    pub r01: Complex64,
    pub r11: Complex64,
    pub r20: Complex64,
    pub r02: Complex64,
}

/// Largest grid (in `m * n`) the brute-force moment enumeration accepts.
pub const BRUTE_FORCE_GRID_LIMIT: usize = 1024;

impl AmbiguityMoments {
    /// Closed-form moments. Independent of Doppler; the delay enters only
    /// through the tap count `l_tau` (clamped to `m` for delays beyond one
    /// symbol, where every tap is ISI).
    pub fn closed_form(grid: &OtfsGrid, tau: f64) -> Self {
        let m = grid.m as f64;
        let n = grid.n as f64;
        let df = grid.delta_f;
        let t = grid.t_sym;
        let mn = m * n;
        let n_isi = grid.delay_tap(tau).min(grid.m) as f64;

        // sums of the Doppler phase slope g(l) and its square over all taps
        let sum_sq_taps = (m - 1.0) * m * (2.0 * m - 1.0) / 6.0;
        let sum_isi_taps = n_isi * (2.0 * m - n_isi - 1.0) / 2.0;
        let sum_g = (m - 1.0) / (2.0 * df) - n_isi * t;
        let sum_g2 =
            sum_sq_taps / (m * df * m * df) - 2.0 * t * sum_isi_taps / (m * df) + n_isi * t * t;

        let r00 = mn;
        let r10 = PI * df * (m - 1.0) * mn;
        let r01 = PI * (t * (n - 1.0) * mn + 2.0 * n * sum_g);
        let r11 = PI * PI * (m - 1.0) * n * ((n - 1.0) * m + 2.0 * df * sum_g);
        let two_pi = 2.0 * PI;
        let r20 = (two_pi * df).powi(2) * (m - 1.0) * mn * (2.0 * m - 1.0) / 6.0;
        let r02 = (two_pi * t).powi(2) * (n - 1.0) * mn * (2.0 * n - 1.0) / 6.0
            + two_pi.powi(2) * n * sum_g2
            + two_pi.powi(2) * t * (n - 1.0) * n * sum_g;

        Self {
            r00: Complex64::new(r00, 0.0),
            r10: Complex64::new(0.0, r10),
            r01: Complex64::new(0.0, r01),
            r11: Complex64::new(r11, 0.0),
            r20: Complex64::new(r20, 0.0),
            r02: Complex64::new(r02, 0.0),
        }
    }

    /// Brute-force moments: the quadruple sum over all `(k, l, k_in, l_in)`
    /// of conjugated products of `cross_ambiguity` outputs. Intended as the
    /// oracle for `closed_form`; rejects grids with `m * n` above
    /// [`BRUTE_FORCE_GRID_LIMIT`].
    pub fn brute_force(grid: &OtfsGrid, tau: f64, doppler: f64) -> Result<Self> {
        if grid.m * grid.n > BRUTE_FORCE_GRID_LIMIT {
            return Err(Error::ResourceLimit(format!(
                "brute-force moments on a {}x{} grid exceed the {} bin limit",
                grid.m, grid.n, BRUTE_FORCE_GRID_LIMIT
            )));
        }
        let mut acc = [Complex64::new(0.0, 0.0); 6];
        for k in 0..grid.n {
            for k_in in 0..grid.n {
                for l in 0..grid.m {
                    for l_in in 0..grid.m {
                        let v = cross_ambiguity(
                            grid,
                            k,
                            l,
                            k_in,
                            l_in,
                            tau,
                            doppler,
                            Derivative::Value,
                        )?;
                        let dt = cross_ambiguity(
                            grid,
                            k,
                            l,
                            k_in,
                            l_in,
                            tau,
                            doppler,
                            Derivative::Delay,
                        )?;
                        let dv = cross_ambiguity(
                            grid,
                            k,
                            l,
                            k_in,
                            l_in,
                            tau,
                            doppler,
                            Derivative::Doppler,
                        )?;
                        acc[0] += v.conj() * v;
                        acc[1] += v.conj() * dt;
                        acc[2] += v.conj() * dv;
                        acc[3] += dt.conj() * dv;
                        acc[4] += dt.conj() * dt;
                        acc[5] += dv.conj() * dv;
                    }
                }
            }
        }
        Ok(Self {
            r00: acc[0],
            r10: acc[1],
            r01: acc[2],
            r11: acc[3],
            r20: acc[4],
            r02: acc[5],
        })
    }

    /// Moment for derivative orders `(i, j)`.
    pub fn order(&self, i: usize, j: usize) -> Result<Complex64> {
        match (i, j) {
            (0, 0) => Ok(self.r00),
            (1, 0) => Ok(self.r10),
            (0, 1) => Ok(self.r01),
            (1, 1) => Ok(self.r11),
            (2, 0) => Ok(self.r20),
            (0, 2) => Ok(self.r02),
            _ => Err(Error::Argument(format!(
                "unsupported moment order ({i},{j})"
            ))),
        }
    }
}

/// How to evaluate a signal moment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentMethod {
    /// Quadruple-sum enumeration (small grids only).
    Brute,
    /// Closed form.
    Closed,
}

/// Single signal moment of derivative orders `(i, j)` in (delay, Doppler).
pub fn signal_moment(
    i: usize,
    j: usize,
    tau: f64,
    doppler: f64,
    grid: &OtfsGrid,
    method: MomentMethod,
) -> Result<Complex64> {
    let moments = match method {
        MomentMethod::Brute => AmbiguityMoments::brute_force(grid, tau, doppler)?,
        MomentMethod::Closed => AmbiguityMoments::closed_form(grid, tau),
    };
    moments.order(i, j)
}
