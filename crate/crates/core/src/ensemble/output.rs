//! Plot-ready CSV output of an ensemble run and its manifest.
//!
//! Every CSV starts with a header row and ends each row with the manifest
//! hash, so each file can be traced back to the configuration that made it.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::diagnostics::{check_mj_inequality, duality_check};
use super::fit::{
    analytic_chi_gaussian, fit_binomial_high_nu, fit_binomial_low_nu, fit_binomial_moments,
    pdf_compare, BinomialFit, Regime, Statistic, MIN_PDF_SAMPLES,
};
use super::stats::IntMoments;
use super::{EnsembleConfig, EnsembleRun};
use crate::error::Result;
use crate::Dim;

/// Written before a run starts and removed once every output is complete.
pub const INCOMPLETE_MARKER: &str = "INCOMPLETE";

/// Thresholds at or beyond this `|nu|` also get the tail-regime fits.
pub const TAIL_NU: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub hash: String,
    pub version: String,
    pub config: EnsembleConfig,
    pub r_c_measured: f64,
    pub r_c_spectral: Option<f64>,
    pub r_c_used: f64,
}

/// SHA-256 of the canonical JSON form of the configuration. Worker count
/// and output location are not part of the configuration.
pub fn manifest_hash(config: &EnsembleConfig) -> String {
    let json = serde_json::to_string(config).expect("configuration serializes");
    Sha256::digest(json.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// One Binomial fit compared with the samples of `compared`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub fit: BinomialFit,
    pub compared: Statistic,
    pub tv_binomial: Option<f64>,
    pub tv_gaussian: Option<f64>,
}

/// Moment fits of every statistic at every threshold, plus the tail fits
/// derived from `sd_chi` and the Gaussian mean: at `nu >= 2` compared with
/// `b0`, `chi` and `bsum`, at `nu <= -2` with `b1`, `-chi` and `bsum`.
/// TV distances are left out below [`MIN_PDF_SAMPLES`] realizations.
pub fn fit_table(run: &EnsembleRun) -> Result<Vec<FitRow>> {
    let area = run.config.area();
    let mut rows = Vec::new();
    let push =
        |rows: &mut Vec<FitRow>, fit: BinomialFit, t: usize, compared: Statistic| -> Result<()> {
            let samples = run.samples(t, compared);
            let (tv_binomial, tv_gaussian) = if samples.len() >= MIN_PDF_SAMPLES {
                let cmp = pdf_compare(&samples, Some(&fit))?;
                (cmp.tv_binomial, Some(cmp.tv_gaussian))
            } else {
                (None, None)
            };
            rows.push(FitRow {
                fit,
                compared,
                tv_binomial,
                tv_gaussian,
            });
            Ok(())
        };
    for (t, s) in run.summaries.iter().enumerate() {
        let nu = s.nu;
        for stat in [
            Statistic::B0,
            Statistic::B1,
            Statistic::Chi,
            Statistic::Bsum,
        ] {
            let m = IntMoments::from_samples(run.samples(t, stat));
            push(
                &mut rows,
                fit_binomial_moments(nu, stat, m.mean(), m.variance()),
                t,
                stat,
            )?;
        }
        if run.config.dim != Dim::Two || s.sd_chi.is_nan() {
            continue;
        }
        let tail = if nu >= TAIL_NU - 1e-9 {
            Some((
                fit_binomial_high_nu(nu, s.sd_chi, run.r_c, area),
                Regime::HighPositive,
                Statistic::Chi,
            ))
        } else if nu <= -TAIL_NU + 1e-9 {
            Some((
                fit_binomial_low_nu(nu, s.sd_chi, run.r_c, area),
                Regime::LowNegative,
                Statistic::NegChi,
            ))
        } else {
            None
        };
        let Some((fit, regime, source)) = tail else {
            continue;
        };
        // A zero spread admits no inversion; report it as an invalid fit.
        let fit = fit.unwrap_or_else(|e| BinomialFit {
            nu,
            regime,
            statistic: source,
            n_fit: f64::NAN,
            n_rounded: 0,
            p_fit: f64::NAN,
            valid: false,
            note: Some(e.to_string()),
        });
        let compared = match regime {
            Regime::HighPositive => [Statistic::B0, Statistic::Chi, Statistic::Bsum],
            _ => [Statistic::B1, Statistic::NegChi, Statistic::Bsum],
        };
        for stat in compared {
            push(&mut rows, fit.clone(), t, stat)?;
        }
    }
    Ok(rows)
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?)
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

/// Label used in histogram file names, e.g. `+1.50`.
pub fn nu_label(nu: f64) -> String {
    let nu = if nu == 0.0 { 0.0 } else { nu };
    format!("{nu:+.2}")
}

/// Writes manifest, summary, realization table, histograms, fits and
/// diagnostics into `dir`.
pub fn write_outputs(run: &EnsembleRun, dir: &Path) -> Result<Manifest> {
    fs::create_dir_all(dir)?;
    let hash = manifest_hash(&run.config);
    let manifest = Manifest {
        hash: hash.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: run.config.clone(),
        r_c_measured: run.r_c_measured,
        r_c_spectral: run.r_c_spectral,
        r_c_used: run.r_c,
    };
    fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;

    let mut w = writer(&dir.join("summary.csv"))?;
    w.write_record([
        "nu",
        "n",
        "area",
        "per_area",
        "mean_b0",
        "mean_b1",
        "mean_b2",
        "mean_chi",
        "mean_bsum",
        "sd_b0",
        "sd_b1",
        "sd_b2",
        "sd_chi",
        "sd_bsum",
        "cov_b0b1",
        "mean_chi_periodic",
        "sd_chi_periodic",
        "mean_b0_interior",
        "mean_chi_per_area",
        "mean_chi_periodic_per_area",
        "analytic_chi_per_area",
        "manifest",
    ])?;
    for s in &run.summaries {
        let analytic = match run.config.dim {
            Dim::Two => analytic_chi_gaussian(s.nu, run.r_c).ok(),
            Dim::Three => None,
        };
        w.write_record([
            s.nu.to_string(),
            s.n.to_string(),
            s.area.to_string(),
            "false".into(),
            s.mean_b0.to_string(),
            s.mean_b1.to_string(),
            s.mean_b2.to_string(),
            s.mean_chi.to_string(),
            s.mean_bsum.to_string(),
            s.sd_b0.to_string(),
            s.sd_b1.to_string(),
            s.sd_b2.to_string(),
            s.sd_chi.to_string(),
            s.sd_bsum.to_string(),
            s.cov_b0b1.to_string(),
            s.mean_chi_periodic.to_string(),
            s.sd_chi_periodic.to_string(),
            s.mean_b0_interior.to_string(),
            (s.mean_chi / s.area).to_string(),
            (s.mean_chi_periodic / s.area).to_string(),
            opt(analytic),
            hash.clone(),
        ])?;
    }
    w.flush()?;

    let mut w = writer(&dir.join("realizations.csv"))?;
    w.write_record([
        "index",
        "nu",
        "sigma0",
        "sigma1",
        "sigma_used",
        "b0",
        "b1",
        "b2",
        "chi",
        "bsum",
        "chi_cells",
        "chi_periodic",
        "b0_interior",
        "jmax",
        "m_spectrum",
        "manifest",
    ])?;
    for r in &run.records {
        for (t, rec) in r.thresholds.iter().enumerate() {
            let s = &rec.stats;
            w.write_record([
                r.index.to_string(),
                run.config.thresholds[t].to_string(),
                r.moments.sigma0.to_string(),
                r.moments.sigma1.to_string(),
                r.sigma_used.to_string(),
                s.b0.to_string(),
                s.b1.to_string(),
                s.b2.to_string(),
                s.chi.to_string(),
                s.bsum.to_string(),
                rec.chi_cells.to_string(),
                rec.chi_periodic.to_string(),
                rec.b0_interior.to_string(),
                rec.spectrum
                    .as_ref()
                    .map_or_else(String::new, |h| h.jmax().to_string()),
                rec.spectrum
                    .as_ref()
                    .map_or_else(String::new, |h| h.to_json()),
                hash.clone(),
            ])?;
        }
    }
    w.flush()?;

    for s in &run.summaries {
        for (stat, hist) in &s.histograms {
            let mut w = writer(&dir.join(format!("hist_{}_{}.csv", stat.name(), nu_label(s.nu))))?;
            w.write_record(["bin", "count", "manifest"])?;
            for (bin, count) in hist {
                w.write_record([bin.to_string(), count.to_string(), hash.clone()])?;
            }
            w.flush()?;
        }
    }

    let mut w = writer(&dir.join("fits.csv"))?;
    w.write_record([
        "nu",
        "statistic",
        "fitted_from",
        "regime",
        "N",
        "N_rounded",
        "p",
        "valid",
        "note",
        "tv_binomial",
        "tv_gaussian",
        "manifest",
    ])?;
    for row in fit_table(run)? {
        let f = &row.fit;
        w.write_record([
            f.nu.to_string(),
            row.compared.name().to_string(),
            f.statistic.name().to_string(),
            f.regime.name().to_string(),
            f.n_fit.to_string(),
            f.n_rounded.to_string(),
            f.p_fit.to_string(),
            f.valid.to_string(),
            f.note.clone().unwrap_or_default(),
            opt(row.tv_binomial),
            opt(row.tv_gaussian),
            hash.clone(),
        ])?;
    }
    w.flush()?;

    // The duality check needs a grid symmetric about zero; other grids skip it.
    if let Ok(report) = duality_check(&run.summaries) {
        let mut w = writer(&dir.join("duality.csv"))?;
        w.write_record([
            "nu",
            "mean_b0",
            "mean_b1_mirror",
            "diff",
            "se",
            "allowance",
            "z",
            "pass",
            "diff_interior",
            "manifest",
        ])?;
        for r in &report.rows {
            w.write_record([
                r.nu.to_string(),
                r.mean_b0.to_string(),
                r.mean_b1_mirror.to_string(),
                r.diff.to_string(),
                r.se.to_string(),
                r.allowance.to_string(),
                opt(r.z),
                r.pass.to_string(),
                r.diff_interior.to_string(),
                hash.clone(),
            ])?;
        }
        w.flush()?;
    }

    if run.config.dim == Dim::Two {
        let mut w = writer(&dir.join("mj_inequality.csv"))?;
        w.write_record(["nu", "total", "total_negative", "violating_j", "manifest"])?;
        for s in &run.summaries {
            let r = check_mj_inequality(s);
            let js: Vec<String> = r.violating_j.iter().map(|j| j.to_string()).collect();
            w.write_record([
                r.nu.to_string(),
                r.total.to_string(),
                r.total_negative.to_string(),
                js.join(" "),
                hash.clone(),
            ])?;
        }
        w.flush()?;

        let mut w = writer(&dir.join("mj_correlations.csv"))?;
        w.write_record(["nu", "j", "k", "corr", "manifest"])?;
        for s in &run.summaries {
            for c in &s.mj_corr {
                w.write_record([
                    s.nu.to_string(),
                    c.j.to_string(),
                    c.k.to_string(),
                    opt(c.corr),
                    hash.clone(),
                ])?;
            }
        }
        w.flush()?;
    }
    Ok(manifest)
}
