//! Gaussian-field expectation of the Euler characteristic, Binomial
//! moment inversions and PDF comparisons.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, ContinuousCDF, Discrete, Normal};

use crate::error::{Error, Result};

/// Largest `N` reported when `sigma^2 = mu` (the Poisson limit).
pub const POISSON_N_CAP: f64 = 1e9;

/// Floor on the Gaussian width used by [`pdf_compare`].
pub const SIGMA_FLOOR: f64 = 1e-9;

/// Fewest samples [`pdf_compare`] accepts.
pub const MIN_PDF_SAMPLES: usize = 100;

/// `A_2 = 1 / (4 sqrt(2) pi^(3/2) r_c^2)`.
pub fn chi_amplitude(r_c: f64) -> f64 {
    1.0 / (4.0 * 2f64.sqrt() * PI.powf(1.5) * r_c * r_c)
}

/// Expected Euler characteristic per unit area of a 2D Gaussian field,
/// `A_2 nu exp(-nu^2 / 2)`.
pub fn analytic_chi_gaussian(nu: f64, r_c: f64) -> Result<f64> {
    if !(r_c > 0.0) || !r_c.is_finite() {
        return Err(Error::Domain(format!(
            "correlation length must be > 0, got {r_c}"
        )));
    }
    Ok(chi_amplitude(r_c) * nu * (-0.5 * nu * nu).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    HighPositive,
    LowNegative,
    Intermediate,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::HighPositive => "high_positive",
            Regime::LowNegative => "low_negative",
            Regime::Intermediate => "intermediate",
        }
    }
}

/// Topological statistic a fit or histogram refers to. `NegChi` is `-chi`,
/// the positive count modelled at large negative thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    B0,
    B1,
    B2,
    Chi,
    NegChi,
    Bsum,
}

impl Statistic {
    pub fn name(self) -> &'static str {
        match self {
            Statistic::B0 => "b0",
            Statistic::B1 => "b1",
            Statistic::B2 => "b2",
            Statistic::Chi => "chi",
            Statistic::NegChi => "neg_chi",
            Statistic::Bsum => "bsum",
        }
    }
}

/// Binomial parameters `(N, p)` with `mean = N p` and `var = N p (1 - p)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinomialFit {
    pub nu: f64,
    pub regime: Regime,
    pub statistic: Statistic,
    pub n_fit: f64,
    pub n_rounded: u64,
    pub p_fit: f64,
    pub valid: bool,
    /// Why the fit is invalid, or `poisson_like` at the `sigma^2 = mu` limit.
    pub note: Option<String>,
}

impl BinomialFit {
    fn invalid(
        nu: f64,
        regime: Regime,
        statistic: Statistic,
        n_fit: f64,
        p_fit: f64,
        why: &str,
    ) -> Self {
        Self {
            nu,
            regime,
            statistic,
            n_fit,
            n_rounded: round_n(n_fit),
            p_fit,
            valid: false,
            note: Some(why.to_string()),
        }
    }
}

fn round_n(n: f64) -> u64 {
    if n.is_finite() && n > 0.0 {
        n.round() as u64
    } else {
        0
    }
}

/// Inverts `mu = N p`, `var = N p (1 - p)` for a model-supplied mean `mu`.
/// `var = mu` is the Poisson limit, reported with `N` capped.
fn invert_model_mean(
    nu: f64,
    regime: Regime,
    statistic: Statistic,
    mu: f64,
    var: f64,
) -> BinomialFit {
    if !(mu > 0.0) {
        return BinomialFit::invalid(
            nu,
            regime,
            statistic,
            0.0,
            f64::NAN,
            "model mean is not positive",
        );
    }
    if !(var > 0.0) {
        return BinomialFit::invalid(
            nu,
            regime,
            statistic,
            f64::NAN,
            f64::NAN,
            "variance is not positive",
        );
    }
    if var > mu {
        let p = 1.0 - var / mu;
        return BinomialFit::invalid(nu, regime, statistic, mu / p, p, "variance exceeds mean");
    }
    if var == mu {
        let n = POISSON_N_CAP;
        return BinomialFit {
            nu,
            regime,
            statistic,
            n_fit: n,
            n_rounded: n as u64,
            p_fit: mu / n,
            valid: true,
            note: Some("poisson_like".into()),
        };
    }
    let p = 1.0 - var / mu;
    let n = mu / p;
    if n < 1.0 {
        return BinomialFit::invalid(nu, regime, statistic, n, p, "N below one");
    }
    BinomialFit {
        nu,
        regime,
        statistic,
        n_fit: n,
        n_rounded: round_n(n),
        p_fit: p,
        valid: true,
        note: None,
    }
}

/// Large positive thresholds: `chi ~ b0 ~ m_0`, with mean from the Gaussian
/// formula `mu = area A_2 nu exp(-nu^2/2)` and the measured `sd_chi`.
pub fn fit_binomial_high_nu(nu: f64, sd_chi: f64, r_c: f64, area: f64) -> Result<BinomialFit> {
    if !(nu > 0.0) {
        return Err(Error::Domain(format!(
            "high-threshold fit needs nu > 0, got {nu}"
        )));
    }
    check_sd(sd_chi)?;
    let mu = area * analytic_chi_gaussian(nu, r_c)?;
    Ok(invert_model_mean(
        nu,
        Regime::HighPositive,
        Statistic::Chi,
        mu,
        sd_chi * sd_chi,
    ))
}

/// Large negative thresholds: `-chi ~ b1 ~ j_max`, with
/// `mu = -area A_2 nu exp(-nu^2/2)`.
pub fn fit_binomial_low_nu(nu: f64, sd_chi: f64, r_c: f64, area: f64) -> Result<BinomialFit> {
    if !(nu < 0.0) {
        return Err(Error::Domain(format!(
            "low-threshold fit needs nu < 0, got {nu}"
        )));
    }
    check_sd(sd_chi)?;
    let mu = -area * analytic_chi_gaussian(nu, r_c)?;
    Ok(invert_model_mean(
        nu,
        Regime::LowNegative,
        Statistic::NegChi,
        mu,
        sd_chi * sd_chi,
    ))
}

fn check_sd(sd: f64) -> Result<()> {
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(Error::Domain(format!(
            "measured standard deviation must be > 0, got {sd}"
        )));
    }
    Ok(())
}

/// Method of moments from an ensemble mean and variance:
/// `p = 1 - var / mean`, `N = mean / p`. Invalid when `mean <= 0` or
/// `var >= mean`.
pub fn fit_binomial_moments(
    nu: f64,
    statistic: Statistic,
    mean: f64,
    variance: f64,
) -> BinomialFit {
    let regime = Regime::Intermediate;
    if !(mean > 0.0) {
        let p = 1.0 - variance / mean;
        return BinomialFit::invalid(nu, regime, statistic, mean / p, p, "mean is not positive");
    }
    let p = 1.0 - variance / mean;
    if !(variance < mean) {
        return BinomialFit::invalid(
            nu,
            regime,
            statistic,
            mean / p,
            p,
            "variance not below mean",
        );
    }
    let n = mean / p;
    if n < 1.0 {
        return BinomialFit::invalid(nu, regime, statistic, n, p, "N below one");
    }
    BinomialFit {
        nu,
        regime,
        statistic,
        n_fit: n,
        n_rounded: round_n(n),
        p_fit: p,
        valid: true,
        note: None,
    }
}

/// Empirical PMF of integer samples and its total-variation distances to a
/// Binomial and to a moment-matched Gaussian integrated over unit bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdfComparison {
    pub histogram: BTreeMap<i64, u64>,
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    /// Absent when the fit is invalid.
    pub tv_binomial: Option<f64>,
    pub tv_gaussian: f64,
}

pub fn histogram(samples: &[i64]) -> BTreeMap<i64, u64> {
    let mut h = BTreeMap::new();
    for &s in samples {
        *h.entry(s).or_insert(0) += 1;
    }
    h
}

/// Total-variation distance between the empirical PMF and a model PMF.
/// Model mass outside the observed bins contributes `1 - sum(model over
/// observed bins)`, so unbounded supports need no truncation.
fn tv_distance(hist: &BTreeMap<i64, u64>, n: usize, model: impl Fn(i64) -> f64) -> f64 {
    let mut diff = 0.0;
    let mut covered = 0.0;
    for (&k, &c) in hist {
        let q = model(k);
        diff += (c as f64 / n as f64 - q).abs();
        covered += q;
    }
    0.5 * (diff + (1.0 - covered).max(0.0))
}

/// Compares the sample PMF with `Binomial(round(N), p)` (when `fit` is
/// valid) and with a Gaussian of the sample mean and (unbiased) sd, floored
/// at [`SIGMA_FLOOR`].
pub fn pdf_compare(samples: &[i64], fit: Option<&BinomialFit>) -> Result<PdfComparison> {
    let n = samples.len();
    if n < MIN_PDF_SAMPLES {
        return Err(Error::Domain(format!(
            "pdf comparison needs at least {MIN_PDF_SAMPLES} samples, got {n}"
        )));
    }
    let hist = histogram(samples);
    let moments = super::stats::IntMoments::from_samples(samples.iter().copied());
    let mean = moments.mean();
    let sd = moments.sd();

    let normal =
        Normal::new(mean, sd.max(SIGMA_FLOOR)).map_err(|e| Error::Domain(e.to_string()))?;
    let tv_gaussian = tv_distance(&hist, n, |k| {
        normal.cdf(k as f64 + 0.5) - normal.cdf(k as f64 - 0.5)
    });

    let tv_binomial = match fit {
        Some(f) if f.valid => {
            let b =
                Binomial::new(f.p_fit, f.n_rounded).map_err(|e| Error::Domain(e.to_string()))?;
            Some(tv_distance(&hist, n, |k| {
                if k < 0 {
                    0.0
                } else {
                    b.pmf(k as u64)
                }
            }))
        }
        _ => None,
    };
    Ok(PdfComparison {
        histogram: hist,
        n,
        mean,
        sd,
        tv_binomial,
        tv_gaussian,
    })
}
