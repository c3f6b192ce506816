//! Ensemble-level diagnostics: the `m_j` variance inequality, the
//! `b0(nu) = b1(-nu)` duality and the trend towards normality with grid size.

use serde::{Deserialize, Serialize};

use super::fit::Statistic;
use super::stats::shape;
use super::{EnsembleRun, ThresholdSummary};
use crate::error::{Error, Result};

/// Result of evaluating `sum_j j (<m_j^2> - <m_j> sum_k <m_k>)`, which
/// equals `Cov(b0, b1)` when the `m_j` are independent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MjInequalityReport {
    pub nu: f64,
    pub total: f64,
    pub total_negative: bool,
    /// `j >= 1` with `<m_j> > 0` violating `<m_j> + var_j / <m_j> < sum_k <m_k>`.
    pub violating_j: Vec<usize>,
}

/// Evaluates the inequality with `<m_j^2> = var_mj + <m_j>^2`.
pub fn check_mj_inequality(summary: &ThresholdSummary) -> MjInequalityReport {
    let total_mean: f64 = summary.mean_mj.values().sum();
    let var = |j: usize| {
        summary
            .var_mj
            .get(&j)
            .copied()
            .filter(|v| v.is_finite())
            .unwrap_or(0.0)
    };
    let mut total = 0.0;
    let mut violating_j = Vec::new();
    for (&j, &mean) in &summary.mean_mj {
        if j == 0 {
            continue;
        }
        let second = var(j) + mean * mean;
        total += j as f64 * (second - mean * total_mean);
        if mean > 0.0 && !(mean + var(j) / mean < total_mean) {
            violating_j.push(j);
        }
    }
    MjInequalityReport {
        nu: summary.nu,
        total,
        total_negative: total < 0.0,
        violating_j,
    }
}

/// Fractional allowance for boundary clipping in the duality check.
pub const DUALITY_SYSTEMATIC: f64 = 0.02;
/// Largest accepted excess over the allowance, in combined standard errors.
pub const DUALITY_Z_MAX: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityRow {
    pub nu: f64,
    pub mean_b0: f64,
    /// `<b1(-nu)>`
    pub mean_b1_mirror: f64,
    pub diff: f64,
    /// `sqrt(se_b0^2 + se_b1^2)`
    pub se: f64,
    /// `DUALITY_SYSTEMATIC * max(<b0(nu)>, <b1(-nu)>)`
    pub allowance: f64,
    /// `max(|diff| - allowance, 0) / se`; `None` without a usable error.
    pub z: Option<f64>,
    pub pass: bool,
    /// `<b0(nu)>` restricted to components away from the border, minus
    /// `<b1(-nu)>`.
    pub diff_interior: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub rows: Vec<DualityRow>,
    /// Set when some threshold has fewer than two realizations.
    pub insufficient_data: bool,
}

impl DualityReport {
    /// Whether every row with `|nu| <= nu_max` passes.
    pub fn passes_within(&self, nu_max: f64) -> bool {
        !self.insufficient_data
            && self
                .rows
                .iter()
                .filter(|r| r.nu.abs() <= nu_max + 1e-9)
                .all(|r| r.pass)
    }
}

/// Compares `<b0(nu)>` with `<b1(-nu)>` for every threshold. The grid must
/// be symmetric about zero.
pub fn duality_check(summaries: &[ThresholdSummary]) -> Result<DualityReport> {
    let mirror = |nu: f64| summaries.iter().find(|s| (s.nu + nu).abs() < 1e-9);
    let mut rows = Vec::with_capacity(summaries.len());
    let mut insufficient_data = false;
    for s in summaries {
        let m = mirror(s.nu).ok_or_else(|| {
            Error::Config(format!(
                "threshold grid is not symmetric: -{} missing",
                s.nu
            ))
        })?;
        let diff = s.mean_b0 - m.mean_b1;
        let se = (s.standard_error(s.sd_b0).powi(2) + m.standard_error(m.sd_b1).powi(2)).sqrt();
        let allowance = DUALITY_SYSTEMATIC * s.mean_b0.max(m.mean_b1);
        let excess = (diff.abs() - allowance).max(0.0);
        let z = if s.n < 2 || m.n < 2 || !se.is_finite() {
            insufficient_data = true;
            None
        } else if se > 0.0 {
            Some(excess / se)
        } else {
            Some(if excess > 0.0 { f64::INFINITY } else { 0.0 })
        };
        let pass = z.is_some_and(|z| z <= DUALITY_Z_MAX);
        rows.push(DualityRow {
            nu: s.nu,
            mean_b0: s.mean_b0,
            mean_b1_mirror: m.mean_b1,
            diff,
            se,
            allowance,
            z,
            pass,
            diff_interior: s.mean_b0_interior - m.mean_b1,
        });
    }
    Ok(DualityReport {
        rows,
        insufficient_data,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityRow {
    pub statistic: Statistic,
    pub nu: f64,
    /// `(side, skewness, excess kurtosis)` in the order given; shape is
    /// `None` for a constant statistic.
    pub by_side: Vec<(usize, Option<(f64, f64)>)>,
    /// Whether `|skewness|` strictly decreases with side; `None` if any
    /// skewness is undefined.
    pub skew_decreasing: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityReport {
    pub rows: Vec<NormalityRow>,
}

impl NormalityReport {
    pub fn row(&self, statistic: Statistic, nu: f64) -> Option<&NormalityRow> {
        self.rows
            .iter()
            .find(|r| r.statistic == statistic && (r.nu - nu).abs() < 1e-9)
    }
}

/// Skewness and excess kurtosis of each statistic at each common threshold
/// for runs of increasing grid side.
pub fn normality_trend(runs: &[&EnsembleRun], statistics: &[Statistic]) -> Result<NormalityReport> {
    if runs.len() < 2 {
        return Err(Error::Config(
            "normality trend needs at least two grid sizes".into(),
        ));
    }
    if runs
        .windows(2)
        .any(|w| w[0].config.side >= w[1].config.side)
    {
        return Err(Error::Config(
            "runs must be ordered by strictly increasing grid side".into(),
        ));
    }
    let mut rows = Vec::new();
    for &nu in &runs[0].config.thresholds {
        let Some(idx) = runs
            .iter()
            .map(|r| r.threshold_index(nu))
            .collect::<Option<Vec<_>>>()
        else {
            continue;
        };
        for &statistic in statistics {
            let by_side: Vec<(usize, Option<(f64, f64)>)> = runs
                .iter()
                .zip(&idx)
                .map(|(r, &t)| (r.config.side, shape(&r.samples(t, statistic))))
                .collect();
            let skews: Option<Vec<f64>> = by_side
                .iter()
                .map(|(_, s)| s.map(|(g1, _)| g1.abs()))
                .collect();
            let skew_decreasing = skews.map(|s| s.windows(2).all(|w| w[1] < w[0]));
            rows.push(NormalityRow {
                statistic,
                nu,
                by_side,
                skew_decreasing,
            });
        }
    }
    Ok(NormalityReport { rows })
}
