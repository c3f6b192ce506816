//! Excursion sets of 2D fields and their decomposition into the basis of
//! planar regions with `j` holes.
//!
//! An excursion set is a union of `m_j` components carrying exactly `j`
//! holes each. The coefficient vector `{m_j}` (the [`HoleSpectrum`])
//! determines every topological statistic:
//!
//! ```text
//! b0 = sum m_j     b1 = sum j m_j     chi = sum (1 - j) m_j     bsum = sum (1 + j) m_j
//! ```
//!
//! Foreground is 8-connected and background 4-connected on the planar
//! grid, which agrees with reading the mask as a union of closed pixels.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euler::{euler_periodic, euler_planar};
use crate::grf::{sample_moments, FieldGrid};
use crate::label::{label, touches_border, Connectivity};
use crate::Dim;

/// Which standard deviation scales the threshold `nu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SigmaMode {
    /// The field's own sample standard deviation.
    Sample,
    /// A fixed, externally supplied `sigma0`.
    Ensemble(f64),
}

/// The set of grid points where `f >= nu * sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcursionMask {
    pub dim: Dim,
    pub side: usize,
    pub bits: Vec<bool>,
    pub nu: f64,
    pub sigma_used: f64,
}

impl ExcursionMask {
    pub fn from_bits(dim: Dim, side: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != dim.cells(side) || side == 0 {
            return Err(Error::Config(format!(
                "mask of side {side} in {}D needs {} cells, got {}",
                dim.as_usize(),
                dim.cells(side),
                bits.len()
            )));
        }
        Ok(Self {
            dim,
            side,
            bits,
            nu: f64::NAN,
            sigma_used: f64::NAN,
        })
    }

    /// Builds a 2D mask from text rows, `#` or `1` marking foreground. The
    /// grid is padded with background to a square.
    pub fn from_ascii<S: AsRef<str>>(rows: &[S]) -> Result<Self> {
        let height = rows.len();
        let width = rows
            .iter()
            .map(|r| r.as_ref().chars().count())
            .max()
            .unwrap_or(0);
        let side = height.max(width);
        if side == 0 {
            return Err(Error::Format("empty mask".into()));
        }
        let mut bits = vec![false; side * side];
        for (y, row) in rows.iter().enumerate() {
            for (x, c) in row.as_ref().chars().enumerate() {
                bits[y * side + x] = match c {
                    '#' | '1' => true,
                    '.' | '0' | ' ' => false,
                    other => {
                        return Err(Error::Format(format!(
                            "unexpected mask character {other:?}"
                        )))
                    }
                };
            }
        }
        Self::from_bits(Dim::Two, side, bits)
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Whether every foreground pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &ExcursionMask) -> bool {
        self.bits.len() == other.bits.len()
            && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }
}

/// Thresholds `field` at `nu` standard deviations.
pub fn excursion_mask(field: &FieldGrid, nu: f64, sigma_mode: SigmaMode) -> Result<ExcursionMask> {
    if nu.is_nan() {
        return Err(Error::Domain("threshold nu is NaN".into()));
    }
    let sigma = match sigma_mode {
        SigmaMode::Sample => sample_moments(field).sigma0,
        SigmaMode::Ensemble(s) => s,
    };
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::DegenerateField(format!(
            "cannot threshold with sigma0 = {sigma}"
        )));
    }
    Ok(threshold(field, nu, sigma))
}

/// Thresholds at `nu * sigma` with an already validated `sigma > 0`.
pub(crate) fn threshold(field: &FieldGrid, nu: f64, sigma: f64) -> ExcursionMask {
    let level = nu * sigma;
    ExcursionMask {
        dim: field.dim,
        side: field.side,
        bits: field.values.iter().map(|&v| v >= level).collect(),
        nu,
        sigma_used: sigma,
    }
}

/// The coefficients `m_j`: how many foreground components carry exactly
/// `j` holes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoleSpectrum {
    nu: f64,
    counts: BTreeMap<usize, u64>,
    jmax: usize,
}

impl HoleSpectrum {
    /// Zero entries are dropped.
    pub fn new(nu: f64, counts: BTreeMap<usize, u64>) -> Self {
        let counts: BTreeMap<usize, u64> = counts.into_iter().filter(|&(_, m)| m > 0).collect();
        let jmax = counts.keys().next_back().copied().unwrap_or(0);
        Self { nu, counts, jmax }
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn counts(&self) -> &BTreeMap<usize, u64> {
        &self.counts
    }

    pub fn jmax(&self) -> usize {
        self.jmax
    }

    pub fn m(&self, j: usize) -> u64 {
        self.counts.get(&j).copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// JSON object `{"j": m_j, ...}` as used in sweep output.
    pub fn to_json(&self) -> String {
        let entries: Vec<String> = self
            .counts
            .iter()
            .map(|(j, m)| format!("\"{j}\":{m}"))
            .collect();
        format!("{{{}}}", entries.join(","))
    }
}

/// Betti numbers, Euler characteristic and sum of Betti numbers at one
/// threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopoStats {
    pub nu: f64,
    pub b0: u64,
    pub b1: u64,
    pub b2: u64,
    pub chi: i64,
    pub bsum: u64,
}

impl TopoStats {
    pub fn from_betti(nu: f64, b0: u64, b1: u64, b2: u64) -> Self {
        Self {
            nu,
            b0,
            b1,
            b2,
            chi: b0 as i64 - b1 as i64 + b2 as i64,
            bsum: b0 + b1 + b2,
        }
    }
}

/// Hole spectrum of a 2D mask.
///
/// Each bounded background component (a 4-connected background region
/// that does not reach the grid border) is a hole. It is charged to the
/// foreground component owning the pixel directly above its first pixel in
/// raster order; under 8/4 connectivity that pixel is foreground and
/// belongs to the component enclosing the hole, also for islands nested
/// inside holes.
pub fn hole_spectrum(mask: &ExcursionMask) -> Result<HoleSpectrum> {
    Ok(spectrum_from_holes(mask.nu, &holes_per_component(mask)?))
}

/// Per-component census of a 2D mask, components in raster order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentCensus {
    /// Holes carried by each foreground component.
    pub holes: Vec<usize>,
    /// Whether each foreground component reaches the grid border.
    pub touches_border: Vec<bool>,
}

/// Number of holes of every foreground component, in raster order of the
/// components.
pub fn holes_per_component(mask: &ExcursionMask) -> Result<Vec<usize>> {
    component_census(mask).map(|c| c.holes)
}

pub fn component_census(mask: &ExcursionMask) -> Result<ComponentCensus> {
    if mask.dim != Dim::Two {
        return Err(Error::Domain(
            "hole spectra are defined for 2D masks only".into(),
        ));
    }
    let side = mask.side;
    let fg = label(&mask.bits, side, Dim::Two, true, Connectivity::Full);
    let bg = label(&mask.bits, side, Dim::Two, false, Connectivity::Face);
    let exterior = touches_border(&bg, side, Dim::Two);

    let mut holes = vec![0usize; fg.count];
    for (c, &first) in bg.first.iter().enumerate() {
        if exterior[c] {
            continue;
        }
        // Bounded components never touch row 0, so `first - side` exists.
        let owner = fg.labels[first - side];
        debug_assert!(owner != 0, "pixel above a hole must be foreground");
        holes[owner as usize - 1] += 1;
    }
    Ok(ComponentCensus {
        holes,
        touches_border: touches_border(&fg, side, Dim::Two),
    })
}

/// Hole spectrum from per-component hole counts.
pub fn spectrum_from_holes(nu: f64, holes: &[usize]) -> HoleSpectrum {
    let mut counts = BTreeMap::new();
    for &h in holes {
        *counts.entry(h).or_insert(0) += 1;
    }
    HoleSpectrum::new(nu, counts)
}

/// The four statistics as direct sums over the coefficients.
pub fn topo_stats_from_spectrum(hs: &HoleSpectrum) -> TopoStats {
    let mut b0 = 0u64;
    let mut b1 = 0u64;
    let mut chi = 0i64;
    let mut bsum = 0u64;
    for (&j, &m) in hs.counts() {
        b0 += m;
        b1 += j as u64 * m;
        chi += (1 - j as i64) * m as i64;
        bsum += (1 + j as u64) * m;
    }
    TopoStats {
        nu: hs.nu,
        b0,
        b1,
        b2: 0,
        chi,
        bsum,
    }
}

/// `h(alpha) = sum_j m_j exp(-j alpha)` and its derivative `h'(alpha)`.
pub fn generating_function(hs: &HoleSpectrum, alpha: f64) -> (f64, f64) {
    hs.counts().iter().fold((0.0, 0.0), |(h, dh), (&j, &m)| {
        let term = m as f64 * (-(j as f64) * alpha).exp();
        (h + term, dh - j as f64 * term)
    })
}

/// Statistics recovered from the generating function at `alpha = 0`:
/// `b0 = h`, `b1 = -h'`, `chi = h + h'`, `bsum = h - h'`.
pub fn betti_from_h(hs: &HoleSpectrum) -> TopoStats {
    let (h, dh) = generating_function(hs, 0.0);
    TopoStats {
        nu: hs.nu,
        b0: h as u64,
        b1: (-dh) as u64,
        b2: 0,
        chi: (h + dh) as i64,
        bsum: (h - dh) as u64,
    }
}

/// Closed-cell Euler characteristic of a planar 2D or 3D mask.
pub fn euler_closed_cell(mask: &ExcursionMask) -> i64 {
    euler_planar(&mask.bits, mask.side, mask.dim)
}

/// Closed-cell Euler characteristic with periodic identification of the
/// grid edges.
pub fn euler_closed_cell_periodic(mask: &ExcursionMask) -> i64 {
    euler_periodic(&mask.bits, mask.side, mask.dim)
}

/// Hole spectrum and statistics of one 2D mask.
pub fn analyze_2d(mask: &ExcursionMask) -> Result<(HoleSpectrum, TopoStats)> {
    let hs = hole_spectrum(mask)?;
    let stats = topo_stats_from_spectrum(&hs);
    Ok((hs, stats))
}
