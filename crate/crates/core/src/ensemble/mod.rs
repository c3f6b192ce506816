//! Ensembles of Gaussian realizations pushed through the topology pipeline,
//! with per-threshold moments, Binomial fits and diagnostics.
//!
//! Realization `i` draws from generator stream `i` of the master seed, so
//! every realization is fixed by `(master_seed, i)` alone. Realizations run
//! in parallel; all aggregation happens afterwards in index order and uses
//! exact integer sums, so results do not depend on the worker count.

mod diagnostics;
mod fit;
mod output;
mod stats;

pub use diagnostics::{
    check_mj_inequality, duality_check, normality_trend, DualityReport, DualityRow,
    MjInequalityReport, NormalityReport, NormalityRow, DUALITY_SYSTEMATIC, DUALITY_Z_MAX,
};
pub use fit::{
    analytic_chi_gaussian, chi_amplitude, fit_binomial_high_nu, fit_binomial_low_nu,
    fit_binomial_moments, histogram, pdf_compare, BinomialFit, PdfComparison, Regime, Statistic,
    MIN_PDF_SAMPLES, POISSON_N_CAP, SIGMA_FLOOR,
};
pub use output::{fit_table, manifest_hash, write_outputs, FitRow, Manifest, INCOMPLETE_MARKER};
pub use stats::{correlation, covariance, shape, IntMoments};

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euler::{euler_periodic, euler_planar};
use crate::grf::{generate_smoothed, sample_moments, FieldMoments};
use crate::label::{label, touches_border, Connectivity};
use crate::spectrum::{nyquist, spectral_params, PowerSpectrumModel};
use crate::topo2d::{
    betti_from_h, component_census, spectrum_from_holes, threshold, topo_stats_from_spectrum,
    HoleSpectrum, SigmaMode, TopoStats,
};
use crate::topo3d::betti3d;
use crate::Dim;

/// `FWHM = sqrt(8 ln 2) Rs` for a Gaussian kernel of width `Rs`.
pub fn fwhm_to_rs(fwhm: f64) -> f64 {
    fwhm / (8.0 * 2f64.ln()).sqrt()
}

pub fn rs_to_fwhm(rs: f64) -> f64 {
    rs * (8.0 * 2f64.ln()).sqrt()
}

/// Where the correlation length entering the Gaussian formula comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RcSource {
    /// `sqrt(mean sigma0^2 / mean sigma1^2)` over the realizations.
    Measured,
    /// Spectral integrals over `[2 pi / L, pi N / L]`.
    Spectral,
}

/// Largest `j` whose `m_j` enters the cross-correlation table.
pub const MJ_CORR_JMAX: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub model: PowerSpectrumModel,
    pub side: usize,
    pub box_size: f64,
    pub dim: Dim,
    pub rs: f64,
    pub n_realizations: usize,
    pub thresholds: Vec<f64>,
    pub master_seed: u64,
    pub sigma_mode: SigmaMode,
    pub rc_source: RcSource,
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_realizations < 2 {
            return Err(Error::Config(format!(
                "need at least 2 realizations, got {}",
                self.n_realizations
            )));
        }
        if self.thresholds.is_empty() {
            return Err(Error::Config("threshold list is empty".into()));
        }
        if self.thresholds.iter().any(|t| !t.is_finite()) {
            return Err(Error::Config("thresholds must be finite".into()));
        }
        if self.thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "thresholds must be strictly increasing".into(),
            ));
        }
        if !(self.rs >= 0.0) || !self.rs.is_finite() {
            return Err(Error::Config(format!(
                "rs must be finite and >= 0, got {}",
                self.rs
            )));
        }
        if !(self.box_size > 0.0) || !self.box_size.is_finite() {
            return Err(Error::Config(format!(
                "box size must be > 0, got {}",
                self.box_size
            )));
        }
        if let SigmaMode::Ensemble(s) = self.sigma_mode {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::Config(format!(
                    "ensemble sigma0 must be > 0, got {s}"
                )));
            }
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        self.box_size.powi(self.dim.as_usize() as i32)
    }

    /// Spectral `sigma0` and `r_c` of the smoothed model over the grid's
    /// mode window.
    pub fn spectral(&self) -> Result<crate::spectrum::SpectralParams> {
        spectral_params(
            &self.model,
            self.rs,
            self.box_size,
            self.dim,
            Some(nyquist(self.side, self.box_size)),
        )
    }
}

/// Results of one realization at one threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRecord {
    pub stats: TopoStats,
    /// 2D only.
    pub spectrum: Option<HoleSpectrum>,
    /// Closed-cell Euler characteristic of the planar mask.
    pub chi_cells: i64,
    /// Closed-cell Euler characteristic with periodic edges.
    pub chi_periodic: i64,
    /// Components that do not reach the grid border.
    pub b0_interior: u64,
    /// Whether the generating-function statistics equal the direct sums.
    pub h_agrees: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationRecord {
    pub index: u64,
    pub moments: FieldMoments,
    pub sigma_used: f64,
    pub thresholds: Vec<ThresholdRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MjCorrelation {
    pub j: usize,
    pub k: usize,
    /// `None` when either coefficient is constant over the ensemble.
    pub corr: Option<f64>,
}

/// Ensemble moments at one threshold. Means and spreads are raw counts per
/// realization; divide by `area` for densities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSummary {
    pub nu: f64,
    pub n: usize,
    pub area: f64,
    pub sum_b0: i64,
    pub sum_b1: i64,
    pub sum_b2: i64,
    pub sum_chi: i64,
    pub mean_b0: f64,
    pub mean_b1: f64,
    pub mean_b2: f64,
    pub mean_chi: f64,
    pub mean_bsum: f64,
    pub sd_b0: f64,
    pub sd_b1: f64,
    pub sd_b2: f64,
    pub sd_chi: f64,
    pub sd_bsum: f64,
    pub cov_b0b1: f64,
    pub mean_chi_periodic: f64,
    pub sd_chi_periodic: f64,
    pub mean_b0_interior: f64,
    pub sd_b0_interior: f64,
    pub mean_mj: BTreeMap<usize, f64>,
    /// Unbiased sample variance of each `m_j`.
    pub var_mj: BTreeMap<usize, f64>,
    pub mj_corr: Vec<MjCorrelation>,
    pub histograms: BTreeMap<Statistic, BTreeMap<i64, u64>>,
}

impl ThresholdSummary {
    /// Standard error of the mean of a statistic with spread `sd`.
    pub fn standard_error(&self, sd: f64) -> f64 {
        sd / (self.n as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRun {
    pub config: EnsembleConfig,
    /// `sqrt(mean sigma0^2 / mean sigma1^2)` over the realizations.
    pub r_c_measured: f64,
    /// Absent when the spectral integrals fail (for example diverge).
    pub r_c_spectral: Option<f64>,
    /// The value selected by `config.rc_source`.
    pub r_c: f64,
    pub records: Vec<RealizationRecord>,
    pub summaries: Vec<ThresholdSummary>,
}

impl EnsembleRun {
    /// Per-realization samples of `stat` at threshold index `t`.
    pub fn samples(&self, t: usize, stat: Statistic) -> Vec<i64> {
        self.records
            .iter()
            .map(|r| stat_value(&r.thresholds[t], stat))
            .collect()
    }

    pub fn threshold_index(&self, nu: f64) -> Option<usize> {
        self.config
            .thresholds
            .iter()
            .position(|&t| (t - nu).abs() < 1e-9)
    }
}

fn stat_value(rec: &ThresholdRecord, stat: Statistic) -> i64 {
    let s = &rec.stats;
    match stat {
        Statistic::B0 => s.b0 as i64,
        Statistic::B1 => s.b1 as i64,
        Statistic::B2 => s.b2 as i64,
        Statistic::Chi => s.chi,
        Statistic::NegChi => -s.chi,
        Statistic::Bsum => s.bsum as i64,
    }
}

/// Runs the ensemble on `workers` threads (0 picks the default). Either
/// every realization succeeds or the first error is returned.
pub fn run_ensemble(config: &EnsembleConfig, workers: usize) -> Result<EnsembleRun> {
    config.validate()?;
    let spectral = config.spectral();
    if config.rc_source == RcSource::Spectral {
        if let Err(e) = &spectral {
            return Err(Error::Config(format!(
                "spectral correlation length unavailable: {e}"
            )));
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let records: Vec<RealizationRecord> = pool.install(|| {
        (0..config.n_realizations as u64)
            .into_par_iter()
            .map(|i| run_realization(config, i))
            .collect::<Result<Vec<_>>>()
    })?;

    let (s0, s1) = records.iter().fold((0.0, 0.0), |(a, b), r| {
        (
            a + r.moments.sigma0 * r.moments.sigma0,
            b + r.moments.sigma1 * r.moments.sigma1,
        )
    });
    if !(s1 > 0.0) {
        return Err(Error::DegenerateField(
            "ensemble has vanishing gradient variance".into(),
        ));
    }
    let r_c_measured = (s0 / s1).sqrt();
    let r_c_spectral = spectral.ok().map(|p| p.r_c);
    let r_c = match config.rc_source {
        RcSource::Measured => r_c_measured,
        RcSource::Spectral => r_c_spectral.expect("checked above"),
    };

    let summaries = summarize(config, &records);
    Ok(EnsembleRun {
        config: config.clone(),
        r_c_measured,
        r_c_spectral,
        r_c,
        records,
        summaries,
    })
}

/// Generates, smooths and analyses realization `index`.
pub fn run_realization(config: &EnsembleConfig, index: u64) -> Result<RealizationRecord> {
    let field = generate_smoothed(
        &config.model,
        config.side,
        config.box_size,
        config.dim,
        config.rs,
        config.master_seed,
        index,
    )?;
    let moments = sample_moments(&field);
    let sigma = match config.sigma_mode {
        SigmaMode::Sample => moments.sigma0,
        SigmaMode::Ensemble(s) => s,
    };
    if !(sigma > 0.0) {
        return Err(Error::DegenerateField(format!(
            "realization {index} has sigma0 = {sigma}"
        )));
    }

    let mut thresholds = Vec::with_capacity(config.thresholds.len());
    for &nu in &config.thresholds {
        let mask = threshold(&field, nu, sigma);
        let chi_cells = euler_planar(&mask.bits, mask.side, mask.dim);
        let chi_periodic = euler_periodic(&mask.bits, mask.side, mask.dim);
        let rec = match config.dim {
            Dim::Two => {
                let census = component_census(&mask)?;
                let spectrum = spectrum_from_holes(nu, &census.holes);
                let stats = topo_stats_from_spectrum(&spectrum);
                let h = betti_from_h(&spectrum);
                let h_agrees =
                    (h.b0, h.b1, h.chi, h.bsum) == (stats.b0, stats.b1, stats.chi, stats.bsum);
                let b0_interior = census.touches_border.iter().filter(|&&t| !t).count() as u64;
                ThresholdRecord {
                    stats,
                    spectrum: Some(spectrum),
                    chi_cells,
                    chi_periodic,
                    b0_interior,
                    h_agrees,
                }
            }
            Dim::Three => {
                let stats = betti3d(&mask)?;
                let fg = label(&mask.bits, mask.side, Dim::Three, true, Connectivity::Full);
                let b0_interior = touches_border(&fg, mask.side, Dim::Three)
                    .iter()
                    .filter(|&&t| !t)
                    .count() as u64;
                ThresholdRecord {
                    stats,
                    spectrum: None,
                    chi_cells,
                    chi_periodic,
                    b0_interior,
                    h_agrees: true,
                }
            }
        };
        thresholds.push(rec);
    }
    Ok(RealizationRecord {
        index,
        moments,
        sigma_used: sigma,
        thresholds,
    })
}

/// Aggregates per-realization records into one summary per threshold.
pub fn summarize(config: &EnsembleConfig, records: &[RealizationRecord]) -> Vec<ThresholdSummary> {
    let area = config.area();
    config
        .thresholds
        .iter()
        .enumerate()
        .map(|(t, &nu)| {
            let col = |f: &dyn Fn(&ThresholdRecord) -> i64| {
                records
                    .iter()
                    .map(|r| f(&r.thresholds[t]))
                    .collect::<Vec<i64>>()
            };
            let b0 = col(&|r| r.stats.b0 as i64);
            let b1 = col(&|r| r.stats.b1 as i64);
            let b2 = col(&|r| r.stats.b2 as i64);
            let chi = col(&|r| r.stats.chi);
            let bsum = col(&|r| r.stats.bsum as i64);
            let chi_p = col(&|r| r.chi_periodic);
            let interior = col(&|r| r.b0_interior as i64);
            let m = |xs: &[i64]| IntMoments::from_samples(xs.iter().copied());
            let (m0, m1, m2, mc, ms) = (m(&b0), m(&b1), m(&b2), m(&chi), m(&bsum));

            let js: BTreeSet<usize> = records
                .iter()
                .filter_map(|r| r.thresholds[t].spectrum.as_ref())
                .flat_map(|s| s.counts().keys().copied().collect::<Vec<_>>())
                .collect();
            let mj_samples: BTreeMap<usize, Vec<i64>> = js
                .iter()
                .map(|&j| {
                    let xs = records
                        .iter()
                        .map(|r| {
                            r.thresholds[t]
                                .spectrum
                                .as_ref()
                                .map_or(0, |s| s.m(j) as i64)
                        })
                        .collect();
                    (j, xs)
                })
                .collect();
            let mean_mj = mj_samples
                .iter()
                .map(|(&j, xs)| (j, m(xs).mean()))
                .collect();
            let var_mj = mj_samples
                .iter()
                .map(|(&j, xs)| (j, m(xs).variance()))
                .collect();
            let mut mj_corr = Vec::new();
            let low: Vec<(usize, &Vec<i64>)> = mj_samples
                .range(..=MJ_CORR_JMAX)
                .map(|(&j, xs)| (j, xs))
                .collect();
            for (a, &(j, xj)) in low.iter().enumerate() {
                for &(k, xk) in &low[a + 1..] {
                    mj_corr.push(MjCorrelation {
                        j,
                        k,
                        corr: correlation(xj, xk),
                    });
                }
            }

            let mut histograms = BTreeMap::new();
            histograms.insert(Statistic::B0, histogram(&b0));
            histograms.insert(Statistic::B1, histogram(&b1));
            if config.dim == Dim::Three {
                histograms.insert(Statistic::B2, histogram(&b2));
            }
            histograms.insert(Statistic::Chi, histogram(&chi));
            histograms.insert(Statistic::Bsum, histogram(&bsum));

            ThresholdSummary {
                nu,
                n: records.len(),
                area,
                sum_b0: m0.sum as i64,
                sum_b1: m1.sum as i64,
                sum_b2: m2.sum as i64,
                sum_chi: mc.sum as i64,
                mean_b0: m0.mean(),
                mean_b1: m1.mean(),
                mean_b2: m2.mean(),
                mean_chi: mc.mean(),
                mean_bsum: ms.mean(),
                sd_b0: m0.sd(),
                sd_b1: m1.sd(),
                sd_b2: m2.sd(),
                sd_chi: mc.sd(),
                sd_bsum: ms.sd(),
                cov_b0b1: covariance(&b0, &b1),
                mean_chi_periodic: m(&chi_p).mean(),
                sd_chi_periodic: m(&chi_p).sd(),
                mean_b0_interior: m(&interior).mean(),
                sd_b0_interior: m(&interior).sd(),
                mean_mj,
                var_mj,
                mj_corr,
                histograms,
            }
        })
        .collect()
}
