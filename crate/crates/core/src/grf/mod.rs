//! Periodic Gaussian random fields: spectral synthesis, Gaussian smoothing
//! and empirical field moments.
//!
//! Fourier convention: `f(x) = L^-d sum_k F_k exp(i k.x)` with
//! `<|F_k|^2> = L^d P(|k|)`, so the field variance approximates
//! `int d^dk / (2 pi)^d P(k)`, the measure used by
//! [`crate::spectrum::spectral_moment`].

mod dump;
pub(crate) mod fft;

pub use dump::{
    decode_field, encode_field, read_field, write_field, FieldSidecar, HEADER_LEN, MAGIC,
};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::{nyquist, PowerSpectrumModel};
use crate::Dim;
use fft::{for_each_mode, wavenumbers, GridFft};

/// A real scalar field sampled on a periodic `side^dim` lattice spanning a
/// box of physical size `box_size`. Values are row-major with the x index
/// fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub dim: Dim,
    pub side: usize,
    pub box_size: f64,
    pub values: Vec<f64>,
    pub seed: u64,
    /// Stream of the seeded generator; realization `i` of an ensemble uses stream `i`.
    pub stream: u64,
    pub rs_applied: f64,
}

impl FieldGrid {
    /// Wraps existing samples. `values.len()` must equal `side^dim`.
    pub fn from_values(dim: Dim, side: usize, box_size: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() != dim.cells(side) {
            return Err(Error::Config(format!(
                "expected {} samples for a {}D grid of side {side}, got {}",
                dim.cells(side),
                dim.as_usize(),
                values.len()
            )));
        }
        if !(box_size > 0.0) {
            return Err(Error::Domain(format!(
                "box size must be > 0, got {box_size}"
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("field samples must be finite".into()));
        }
        Ok(Self {
            dim,
            side,
            box_size,
            values,
            seed: 0,
            stream: 0,
            rs_applied: 0.0,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Pixel size `L / N`.
    pub fn pixel_size(&self) -> f64 {
        self.box_size / self.side as f64
    }

    pub fn area(&self) -> f64 {
        self.box_size.powi(self.dim.as_usize() as i32)
    }

    /// A copy with every sample negated.
    pub fn negated(&self) -> Self {
        Self {
            values: self.values.iter().map(|v| -v).collect(),
            ..self.clone()
        }
    }
}

fn check_grid(side: usize, box_size: f64) -> Result<()> {
    if side < 32 || !side.is_power_of_two() {
        return Err(Error::Config(format!(
            "grid side must be a power of two >= 32, got {side}"
        )));
    }
    if !(box_size > 0.0) || !box_size.is_finite() {
        return Err(Error::Config(format!(
            "box size must be positive and finite, got {box_size}"
        )));
    }
    Ok(())
}

/// Draws one realization using generator stream 0 of `seed`.
pub fn generate(
    model: &PowerSpectrumModel,
    side: usize,
    box_size: f64,
    dim: Dim,
    seed: u64,
) -> Result<FieldGrid> {
    generate_stream(model, side, box_size, dim, seed, 0)
}

/// Draws one realization from stream `stream` of the counter-based
/// generator keyed by `seed`. Identical arguments give identical fields.
///
/// White noise is drawn in real space and coloured in Fourier space, which
/// yields Hermitian-symmetric modes directly. The `k = 0` mode is removed
/// and modes beyond the isotropic Nyquist radius `pi / dx` are zeroed.
pub fn generate_stream(
    model: &PowerSpectrumModel,
    side: usize,
    box_size: f64,
    dim: Dim,
    seed: u64,
    stream: u64,
) -> Result<FieldGrid> {
    synthesize(model, side, box_size, dim, seed, stream, 0.0)
}

/// Same draw as [`generate_stream`] followed by [`smooth`] with `rs`, with
/// the smoothing kernel applied to the modes before the single inverse
/// transform. Agrees with the two-step route to rounding.
pub fn generate_smoothed(
    model: &PowerSpectrumModel,
    side: usize,
    box_size: f64,
    dim: Dim,
    rs: f64,
    seed: u64,
    stream: u64,
) -> Result<FieldGrid> {
    if !(rs >= 0.0) || !rs.is_finite() {
        return Err(Error::Domain(format!(
            "smoothing length must be finite and >= 0, got {rs}"
        )));
    }
    synthesize(model, side, box_size, dim, seed, stream, rs)
}

fn synthesize(
    model: &PowerSpectrumModel,
    side: usize,
    box_size: f64,
    dim: Dim,
    seed: u64,
    stream: u64,
    rs: f64,
) -> Result<FieldGrid> {
    check_grid(side, box_size)?;
    let cells = dim.cells(side);
    let mut grid = FieldGrid {
        dim,
        side,
        box_size,
        values: vec![0.0; cells],
        seed,
        stream,
        rs_applied: rs,
    };
    if model.amplitude == 0.0 {
        return Ok(grid);
    }

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut modes: Vec<Complex64> = (0..cells)
        .map(|_| Complex64::new(StandardNormal.sample(&mut rng), 0.0))
        .collect();

    let fft = GridFft::new(side, dim);
    fft.forward(&mut modes);

    let volume = box_size.powi(dim.as_usize() as i32);
    let k_cut = nyquist(side, box_size);
    let ks = wavenumbers(side, box_size);
    for_each_mode(side, dim, &ks, |i, k| {
        let kk = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
        let amp = if kk == 0.0 || kk > k_cut * (1.0 + 1e-12) {
            0.0
        } else {
            (model.value(kk) * volume / cells as f64).sqrt() * (-0.5 * kk * kk * rs * rs).exp()
        };
        modes[i] *= amp;
    });

    fft.inverse(&mut modes);
    for (v, m) in grid.values.iter_mut().zip(&modes) {
        *v = m.re / volume;
    }
    Ok(grid)
}

/// Convolves the field with a Gaussian kernel of width `rs` by multiplying
/// its Fourier modes with `exp(-k^2 rs^2 / 2)`. The `k = 0` mode, and
/// therefore the mean, is untouched.
pub fn smooth(field: &FieldGrid, rs: f64) -> Result<FieldGrid> {
    if !(rs >= 0.0) || !rs.is_finite() {
        return Err(Error::Domain(format!(
            "smoothing length must be finite and >= 0, got {rs}"
        )));
    }
    if rs == 0.0 {
        return Ok(field.clone());
    }
    let fft = GridFft::new(field.side, field.dim);
    let mut modes: Vec<Complex64> = field
        .values
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    fft.forward(&mut modes);
    let ks = wavenumbers(field.side, field.box_size);
    for_each_mode(field.side, field.dim, &ks, |i, k| {
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 > 0.0 {
            modes[i] *= (-0.5 * k2 * rs * rs).exp();
        }
    });
    fft.inverse(&mut modes);
    let norm = 1.0 / field.len() as f64;
    let values = modes.iter().map(|m| m.re * norm).collect();
    let rs_applied = (field.rs_applied * field.rs_applied + rs * rs).sqrt();
    Ok(FieldGrid {
        values,
        rs_applied,
        ..field.clone()
    })
}

/// Empirical mean, standard deviation and RMS gradient of a field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldMoments {
    pub mean: f64,
    pub sigma0: f64,
    pub sigma1: f64,
}

impl FieldMoments {
    /// `sigma0 / sigma1`, if the gradient does not vanish.
    pub fn correlation_length(&self) -> Option<f64> {
        (self.sigma1 > 0.0).then(|| self.sigma0 / self.sigma1)
    }
}

/// Mean and (population) standard deviation over all samples, and
/// `sigma1 = sqrt(<|grad f|^2>)` from the spectral derivative. The gradient
/// variance is evaluated in Fourier space through Parseval's identity; the
/// Nyquist component along the differentiated axis carries no derivative.
pub fn sample_moments(field: &FieldGrid) -> FieldMoments {
    let m = field.len() as f64;
    let mean = field.values.iter().sum::<f64>() / m;
    let var = field
        .values
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / m;

    let fft = GridFft::new(field.side, field.dim);
    let mut modes: Vec<Complex64> = field
        .values
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    fft.forward(&mut modes);
    let mut ks = wavenumbers(field.side, field.box_size);
    if field.side.is_multiple_of(2) {
        ks[field.side / 2] = 0.0;
    }
    let mut grad = 0.0;
    for_each_mode(field.side, field.dim, &ks, |i, k| {
        grad += (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) * modes[i].norm_sqr();
    });
    let grad = grad / (m * m);
    FieldMoments {
        mean,
        sigma0: var.sqrt(),
        sigma1: grad.sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn flat() -> PowerSpectrumModel {
        PowerSpectrumModel::power_law(1.0, 0.0).unwrap()
    }

    #[test]
    fn zero_amplitude_gives_zero_field() {
        let zero = PowerSpectrumModel::power_law(0.0, 0.0).unwrap();
        let f = generate(&zero, 32, 32.0, Dim::Two, 1).unwrap();
        assert!(f.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate(&flat(), 64, 64.0, Dim::Two, 7).unwrap();
        let b = generate(&flat(), 64, 64.0, Dim::Two, 7).unwrap();
        assert_eq!(a.values, b.values);
        let c = generate_stream(&flat(), 64, 64.0, Dim::Two, 7, 1).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn rejects_bad_side() {
        assert!(matches!(
            generate(&flat(), 48, 48.0, Dim::Two, 0),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            generate(&flat(), 16, 16.0, Dim::Two, 0),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            generate(&flat(), 64, 0.0, Dim::Two, 0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn generated_field_has_zero_mean() {
        let f = generate(&flat(), 64, 64.0, Dim::Three, 3).unwrap();
        let mean = f.values.iter().sum::<f64>() / f.len() as f64;
        assert!(mean.abs() < 1e-12);
    }

    #[test]
    fn zero_smoothing_is_identity() {
        let f = generate(&flat(), 32, 32.0, Dim::Two, 11).unwrap();
        assert_eq!(smooth(&f, 0.0).unwrap(), f);
    }

    #[test]
    fn fused_smoothing_matches_two_step() {
        let two_step = smooth(
            &generate_stream(&flat(), 64, 64.0, Dim::Two, 4, 9).unwrap(),
            2.5,
        )
        .unwrap();
        let fused = generate_smoothed(&flat(), 64, 64.0, Dim::Two, 2.5, 4, 9).unwrap();
        assert_eq!(fused.rs_applied, two_step.rs_applied);
        for (a, b) in fused.values.iter().zip(&two_step.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn smoothing_preserves_mean() {
        let mut f = generate(&flat(), 64, 64.0, Dim::Two, 5).unwrap();
        for v in f.values.iter_mut() {
            *v += 3.25;
        }
        let before = f.values.iter().sum::<f64>() / f.len() as f64;
        let g = smooth(&f, 2.5).unwrap();
        let after = g.values.iter().sum::<f64>() / g.len() as f64;
        assert!((before - after).abs() < 1e-12);
        assert!((g.rs_applied - 2.5).abs() < 1e-15);
    }

    #[test]
    fn smoothing_is_a_semigroup() {
        let f = generate(&flat(), 64, 64.0, Dim::Two, 9).unwrap();
        let ab = smooth(&smooth(&f, 1.5).unwrap(), 2.0).unwrap();
        let c = smooth(&f, 2.5).unwrap();
        let scale = c.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for (x, y) in ab.values.iter().zip(&c.values) {
            assert!((x - y).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn constant_field_moments() {
        let f = FieldGrid::from_values(Dim::Two, 32, 32.0, vec![2.5; 1024]).unwrap();
        let m = sample_moments(&f);
        assert!((m.mean - 2.5).abs() < 1e-15);
        assert!(m.sigma0.abs() < 1e-12);
        assert!(m.sigma1.abs() < 1e-12);
    }

    #[test]
    fn sine_gradient_ratio() {
        let (n, l) = (256usize, 10.0);
        let values = (0..n * n)
            .map(|i| (2.0 * PI * (i % n) as f64 * (l / n as f64) / l).sin())
            .collect();
        let f = FieldGrid::from_values(Dim::Two, n, l, values).unwrap();
        let m = sample_moments(&f);
        assert!((m.sigma1 / m.sigma0 - 2.0 * PI / l).abs() < 1e-3 * 2.0 * PI / l);
    }

    #[test]
    fn gaussianity_moment_check() {
        let f = generate(&flat(), 256, 256.0, Dim::Two, 21).unwrap();
        let m = f.len() as f64;
        let mean = f.values.iter().sum::<f64>() / m;
        let var = f.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m;
        let skew = f.values.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / m / var.powf(1.5);
        let kurt = f.values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / m / (var * var) - 3.0;
        assert!(skew.abs() < 5.0 * (6.0 / m).sqrt(), "skewness {skew}");
        assert!(
            kurt.abs() < 5.0 * (24.0 / m).sqrt(),
            "excess kurtosis {kurt}"
        );
    }
}
