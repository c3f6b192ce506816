//! Power-spectrum models and the spectral parameters derived from them:
//! the moments `sigma_n^2`, the correlation length `r_c = sigma0 / sigma1`
//! and the packing fraction `q = (L / r_c)^d`.
//!
//! Moments are radial integrals of the power spectrum against the
//! isotropic measure of the embedding dimension,
//!
//! ```text
//! 3D:  sigma_n^2 = int dk k^2/(2 pi^2) k^(2n) P(k) W^2(k Rs)
//! 2D:  sigma_n^2 = int dk k  /(2 pi)   k^(2n) P(k) W^2(k Rs)
//! ```
//!
//! with the Gaussian window `W(x) = exp(-x^2 / 2)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::Dim;

/// Relative tolerance of every spectral quadrature.
pub const QUAD_REL_TOL: f64 = 1e-8;

/// Parametric power spectrum `P(k) = amplitude * k^alpha`, optionally
/// restricted to an intrinsic window `[k_low, k_high]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSpectrumModel {
    pub amplitude: f64,
    pub alpha: f64,
    pub k_low: Option<f64>,
    pub k_high: Option<f64>,
}

/// Whether a spectrum carries an intrinsic cutoff scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectrumType {
    /// No physical cutoff; only the observation window limits the modes.
    Type1,
    /// At least one intrinsic large- or small-scale cutoff.
    Type2,
}

impl PowerSpectrumModel {
    pub fn new(
        amplitude: f64,
        alpha: f64,
        k_low: Option<f64>,
        k_high: Option<f64>,
    ) -> Result<Self> {
        if !(amplitude >= 0.0) || !amplitude.is_finite() {
            return Err(Error::Domain(format!(
                "amplitude must be finite and >= 0, got {amplitude}"
            )));
        }
        if !alpha.is_finite() {
            return Err(Error::Domain(format!("alpha must be finite, got {alpha}")));
        }
        for (name, k) in [("k_low", k_low), ("k_high", k_high)] {
            if let Some(k) = k {
                if !(k > 0.0) || !k.is_finite() {
                    return Err(Error::Domain(format!(
                        "{name} must be a positive finite wavenumber, got {k}"
                    )));
                }
            }
        }
        if let (Some(lo), Some(hi)) = (k_low, k_high) {
            if lo >= hi {
                return Err(Error::Domain(format!(
                    "k_low ({lo}) must be below k_high ({hi})"
                )));
            }
        }
        Ok(Self {
            amplitude,
            alpha,
            k_low,
            k_high,
        })
    }

    /// A pure power law without cutoffs.
    pub fn power_law(amplitude: f64, alpha: f64) -> Result<Self> {
        Self::new(amplitude, alpha, None, None)
    }

    pub fn classify(&self) -> SpectrumType {
        if self.k_low.is_some() || self.k_high.is_some() {
            SpectrumType::Type2
        } else {
            SpectrumType::Type1
        }
    }

    /// `P(k)`; zero outside the intrinsic window.
    pub fn eval(&self, k: f64) -> Result<f64> {
        if !(k > 0.0) {
            return Err(Error::Domain(format!(
                "power spectrum evaluated at k = {k}; need k > 0"
            )));
        }
        Ok(self.value(k))
    }

    /// `P(k)` for `k > 0` without argument checking.
    pub(crate) fn value(&self, k: f64) -> f64 {
        if self.k_low.is_some_and(|lo| k < lo) || self.k_high.is_some_and(|hi| k > hi) {
            return 0.0;
        }
        if self.amplitude == 0.0 {
            return 0.0;
        }
        if self.alpha == 0.0 {
            self.amplitude
        } else {
            self.amplitude * k.powf(self.alpha)
        }
    }
}

/// Squared Gaussian window `W^2(k Rs) = exp(-k^2 Rs^2)`.
pub fn window_sq(k: f64, rs: f64) -> f64 {
    (-(k * rs) * (k * rs)).exp()
}

fn measure(k: f64, dim: Dim) -> f64 {
    match dim {
        Dim::Two => k / (2.0 * PI),
        Dim::Three => k * k / (2.0 * PI * PI),
    }
}

/// `sigma_n^2` over `[kmin, kmax]` (`kmax` may be infinite when `rs > 0`).
pub fn spectral_moment(
    model: &PowerSpectrumModel,
    n: u32,
    rs: f64,
    kmin: f64,
    kmax: f64,
    dim: Dim,
) -> Result<f64> {
    if !(rs >= 0.0) {
        return Err(Error::Domain(format!(
            "smoothing length must be >= 0, got {rs}"
        )));
    }
    if !(kmin >= 0.0) || !(kmin < kmax) {
        return Err(Error::Domain(format!(
            "need 0 <= kmin < kmax, got [{kmin}, {kmax}]"
        )));
    }
    let lo = model.k_low.map_or(kmin, |k| k.max(kmin));
    let mut hi = model.k_high.map_or(kmax, |k| k.min(kmax));
    if model.amplitude == 0.0 || lo >= hi {
        return Ok(0.0);
    }

    // Local power of the integrand: measure * k^(2n) * k^alpha ~ k^exponent.
    let exponent = model.alpha + (dim.as_usize() as f64 - 1.0) + 2.0 * n as f64;
    if lo == 0.0 && exponent <= -1.0 {
        return Err(Error::Divergent {
            limit: "k = 0",
            detail: format!(
                "integrand ~ k^{exponent} near zero (alpha = {}, n = {n}, dim = {})",
                model.alpha,
                dim.as_usize()
            ),
        });
    }
    if hi.is_infinite() {
        if rs == 0.0 {
            return Err(Error::Divergent {
                limit: "k = infinity",
                detail: "unsmoothed spectrum without a high-k cutoff".into(),
            });
        }
        hi = truncation_point(exponent, rs, lo);
    }

    let integrand = |k: f64| {
        if k <= 0.0 {
            return 0.0;
        }
        measure(k, dim) * k.powi(2 * n as i32) * model.value(k) * window_sq(k, rs)
    };
    let r = quad::integrate(integrand, lo, hi, QUAD_REL_TOL);
    if !r.converged {
        return Err(Error::Divergent {
            limit: if lo == 0.0 {
                "k = 0"
            } else {
                "integration window"
            },
            detail: format!(
                "quadrature did not reach tolerance (estimate {} +- {})",
                r.value, r.error
            ),
        });
    }
    Ok(r.value)
}

/// Upper limit beyond which `k^exponent exp(-k^2 rs^2)` has dropped below
/// 1e-16 of its reference value.
fn truncation_point(exponent: f64, rs: f64, lo: f64) -> f64 {
    let log_g = |k: f64| exponent * k.ln() - (k * rs) * (k * rs);
    let k_ref = ((exponent.max(0.0) / 2.0).sqrt().max(0.5) / rs).max(lo);
    let floor = log_g(k_ref) + 1e-16f64.ln();
    let mut k = k_ref;
    while log_g(k) > floor {
        k *= 1.25;
    }
    k
}

/// Nyquist wavenumber `pi / dx` of a grid of `side` pixels over `box_size`.
pub fn nyquist(side: usize, box_size: f64) -> f64 {
    PI * side as f64 / box_size
}

/// Spectral parameters of a smoothed field observed in a box of size `L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralParams {
    pub sigma0: f64,
    pub sigma1: f64,
    pub r_c: f64,
    pub q: f64,
    pub dim: Dim,
    pub box_size: f64,
    pub rs: f64,
}

/// Integration window `[2 pi / L, min(k_high, kmax_cap)]`.
fn observation_window(box_size: f64, kmax_cap: Option<f64>) -> Result<(f64, f64)> {
    if !(box_size > 0.0) {
        return Err(Error::Domain(format!(
            "box size must be > 0, got {box_size}"
        )));
    }
    let kmin = 2.0 * PI / box_size;
    let kmax = kmax_cap.unwrap_or(f64::INFINITY);
    if !(kmax > kmin) {
        return Err(Error::Domain(format!(
            "empty integration window [{kmin}, {kmax}]"
        )));
    }
    Ok((kmin, kmax))
}

/// `sigma0`, `sigma1`, `r_c` and `q` for a model smoothed on scale `rs`
/// and observed in a box of size `box_size`. `kmax_cap` is the resolution
/// cutoff (the grid Nyquist wavenumber when a grid is attached).
pub fn spectral_params(
    model: &PowerSpectrumModel,
    rs: f64,
    box_size: f64,
    dim: Dim,
    kmax_cap: Option<f64>,
) -> Result<SpectralParams> {
    let (kmin, kmax) = observation_window(box_size, kmax_cap)?;
    let s0 = spectral_moment(model, 0, rs, kmin, kmax, dim)?;
    let s1 = spectral_moment(model, 1, rs, kmin, kmax, dim)?;
    if s1 <= 0.0 {
        return Err(Error::DegenerateField(
            "gradient variance sigma1^2 is zero in the observation window".into(),
        ));
    }
    let r_c = (s0 / s1).sqrt();
    let q = packing_fraction(r_c, box_size, dim)?;
    Ok(SpectralParams {
        sigma0: s0.sqrt(),
        sigma1: s1.sqrt(),
        r_c,
        q,
        dim,
        box_size,
        rs,
    })
}

/// `r_c = sigma0 / sigma1` with observational cutoffs folded in.
pub fn correlation_length(
    model: &PowerSpectrumModel,
    rs: f64,
    box_size: f64,
    dim: Dim,
    kmax_cap: Option<f64>,
) -> Result<f64> {
    spectral_params(model, rs, box_size, dim, kmax_cap).map(|p| p.r_c)
}

/// `q = (L / r_c)^d`.
pub fn packing_fraction(r_c: f64, box_size: f64, dim: Dim) -> Result<f64> {
    if !(r_c > 0.0) || !(box_size > 0.0) {
        return Err(Error::Domain(format!(
            "need r_c > 0 and L > 0, got r_c = {r_c}, L = {box_size}"
        )));
    }
    Ok((box_size / r_c).powi(dim.as_usize() as i32))
}

/// Measured response of `r_c` and `q` to doubling the box and halving the
/// smoothing length, at fixed resolution cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub spectrum_type: SpectrumType,
    pub base: SpectralParams,
    /// `r_c(2L, Rs) / r_c(L, Rs)`
    pub rc_ratio_double_box: f64,
    /// `r_c(L, Rs / 2) / r_c(L, Rs)`
    pub rc_ratio_half_smoothing: f64,
    /// `q(2L, Rs) / q(L, Rs)`
    pub q_ratio_double_box: f64,
    /// `q(L, Rs / 2) / q(L, Rs)`
    pub q_ratio_half_smoothing: f64,
}

pub fn scaling_report(
    model: &PowerSpectrumModel,
    rs: f64,
    box_size: f64,
    dim: Dim,
    kmax_cap: Option<f64>,
) -> Result<ScalingReport> {
    let base = spectral_params(model, rs, box_size, dim, kmax_cap)?;
    let big = spectral_params(model, rs, 2.0 * box_size, dim, kmax_cap)?;
    let fine = spectral_params(model, rs / 2.0, box_size, dim, kmax_cap)?;
    Ok(ScalingReport {
        spectrum_type: model.classify(),
        base,
        rc_ratio_double_box: big.r_c / base.r_c,
        rc_ratio_half_smoothing: fine.r_c / base.r_c,
        q_ratio_double_box: big.q / base.q,
        q_ratio_half_smoothing: fine.q / base.q,
    })
}
