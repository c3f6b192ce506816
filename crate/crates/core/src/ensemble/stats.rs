//! Exact moment accumulation for integer-valued statistics.
//!
//! Sums are kept in `i128`, so means, variances and covariances are exact
//! rationals until the final division. Results do not depend on the order
//! in which samples arrive.

/// Running sums for one integer variable.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IntMoments {
    pub n: u64,
    pub sum: i128,
    pub sum_sq: i128,
}

impl IntMoments {
    pub fn push(&mut self, x: i64) {
        self.n += 1;
        self.sum += x as i128;
        self.sum_sq += (x as i128) * (x as i128);
    }

    pub fn from_samples(xs: impl IntoIterator<Item = i64>) -> Self {
        let mut m = Self::default();
        for x in xs {
            m.push(x);
        }
        m
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            return f64::NAN;
        }
        self.sum as f64 / self.n as f64
    }

    /// Unbiased sample variance; NaN below two samples.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return f64::NAN;
        }
        let n = self.n as i128;
        (n * self.sum_sq - self.sum * self.sum) as f64 / (n * (n - 1)) as f64
    }

    pub fn sd(&self) -> f64 {
        self.variance().sqrt()
    }
}

/// Unbiased sample covariance of paired integer samples; NaN below two pairs.
pub fn covariance(xs: &[i64], ys: &[i64]) -> f64 {
    assert_eq!(xs.len(), ys.len(), "paired samples differ in length");
    let n = xs.len() as i128;
    if n < 2 {
        return f64::NAN;
    }
    let sx: i128 = xs.iter().map(|&x| x as i128).sum();
    let sy: i128 = ys.iter().map(|&y| y as i128).sum();
    let sxy: i128 = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| x as i128 * y as i128)
        .sum();
    (n * sxy - sx * sy) as f64 / (n * (n - 1)) as f64
}

/// Pearson correlation, `None` when either variable is constant.
pub fn correlation(xs: &[i64], ys: &[i64]) -> Option<f64> {
    let vx = IntMoments::from_samples(xs.iter().copied()).variance();
    let vy = IntMoments::from_samples(ys.iter().copied()).variance();
    if !(vx > 0.0) || !(vy > 0.0) {
        return None;
    }
    Some(covariance(xs, ys) / (vx * vy).sqrt())
}

/// Sample skewness `g1 = m3 / m2^(3/2)` and excess kurtosis `g2 = m4 / m2^2 - 3`
/// from central moments. `None` for constant or empty samples.
pub fn shape(xs: &[i64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().map(|&x| x as f64).sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in xs {
        let d = x as f64 - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if m2 == 0.0 {
        return None;
    }
    Some((m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0))
}
