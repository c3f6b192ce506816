//! Run configuration files: one `key = value` pair per line, `#` starts a
//! comment. Keys are the [`RunConfig`] field names.
//!
//! ```text
//! # reference ensemble
//! alpha = 0
//! side = 512
//! box_size = 512
//! rs = 4
//! n_realizations = 500
//! thresholds = -3.5:3.5:0.5
//! master_seed = 20240501
//! ```
//!
//! `thresholds` is either a comma-separated list or `min:max:step`. The
//! smoothing scale may be given as `rs` or as `fwhm`, not both.
//! `sigma_mode` is `sample`, `ensemble` (spectral `sigma0` of the model) or
//! a positive number.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use crate::ensemble::{fwhm_to_rs, EnsembleConfig, RcSource};
use crate::error::{Error, Result};
use crate::spectrum::PowerSpectrumModel;
use crate::topo2d::SigmaMode;
use crate::Dim;

const KEYS: &[&str] = &[
    "amplitude",
    "alpha",
    "k_low",
    "k_high",
    "side",
    "box_size",
    "dim",
    "rs",
    "fwhm",
    "n_realizations",
    "thresholds",
    "master_seed",
    "sigma_mode",
    "rc_source",
    "output_dir",
    "workers",
    "verbosity",
];

/// Ensemble configuration plus where and how to run it.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub ensemble: EnsembleConfig,
    pub output_dir: Option<PathBuf>,
    /// 0 uses every available core.
    pub workers: usize,
    pub verbosity: u8,
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse {key} = {value:?}")))
}

/// Thresholds from `a,b,c` or `min:max:step` (inclusive of `max` up to
/// rounding).
pub fn parse_thresholds(value: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = value.split(':').map(str::trim).collect();
    match parts.as_slice() {
        [lo, hi, step] => {
            let (lo, hi, step): (f64, f64, f64) = (
                parse("thresholds", lo)?,
                parse("thresholds", hi)?,
                parse("thresholds", step)?,
            );
            threshold_range(lo, hi, step)
        }
        [_] => value
            .split(',')
            .map(|v| parse("thresholds", v.trim()))
            .collect(),
        _ => Err(Error::Config(format!(
            "thresholds must be a list or min:max:step, got {value:?}"
        ))),
    }
}

/// `lo, lo + step, ...` up to `hi`. Each value is computed as
/// `lo + k step` and rounded to 12 decimals so grids like -3.5:3.5:0.5 hit
/// their end points exactly.
pub fn threshold_range(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !lo.is_finite() || !hi.is_finite() || !(lo <= hi) {
        return Err(Error::Config(format!(
            "need min <= max and step > 0, got {lo}:{hi}:{step}"
        )));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    if count > 100_000 {
        return Err(Error::Config(format!(
            "threshold grid of {count} values is too large"
        )));
    }
    Ok((0..count)
        .map(|k| ((lo + k as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

pub fn parse_run_config(text: &str) -> Result<RunConfig> {
    let mut kv: BTreeMap<&str, &str> = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(Error::Config(format!(
                "line {}: unknown key {key:?}",
                lineno + 1
            )));
        }
        if kv.insert(key, value).is_some() {
            return Err(Error::Config(format!(
                "line {}: duplicate key {key:?}",
                lineno + 1
            )));
        }
    }

    let get = |k: &str| kv.get(k).copied();
    let req = |k: &str| get(k).ok_or_else(|| Error::Config(format!("missing required key {k:?}")));

    let amplitude = get("amplitude").map_or(Ok(1.0), |v| parse("amplitude", v))?;
    let alpha = get("alpha").map_or(Ok(0.0), |v| parse("alpha", v))?;
    let k_low = get("k_low").map(|v| parse("k_low", v)).transpose()?;
    let k_high = get("k_high").map(|v| parse("k_high", v)).transpose()?;
    let model = PowerSpectrumModel::new(amplitude, alpha, k_low, k_high)
        .map_err(|e| Error::Config(e.to_string()))?;

    let side: usize = parse("side", req("side")?)?;
    let box_size = get("box_size").map_or(Ok(side as f64), |v| parse("box_size", v))?;
    let dim = Dim::from_usize(get("dim").map_or(Ok(2), |v| parse("dim", v))?)?;
    let rs = match (get("rs"), get("fwhm")) {
        (Some(_), Some(_)) => return Err(Error::Config("give either rs or fwhm, not both".into())),
        (Some(v), None) => parse("rs", v)?,
        (None, Some(v)) => fwhm_to_rs(parse("fwhm", v)?),
        (None, None) => 0.0,
    };
    let n_realizations = parse("n_realizations", req("n_realizations")?)?;
    let thresholds = parse_thresholds(req("thresholds")?)?;
    let master_seed = get("master_seed").map_or(Ok(0), |v| parse("master_seed", v))?;
    let rc_source = match get("rc_source").unwrap_or("measured") {
        "measured" => RcSource::Measured,
        "spectral" => RcSource::Spectral,
        other => {
            return Err(Error::Config(format!(
                "rc_source must be measured or spectral, got {other:?}"
            )))
        }
    };

    let mut ensemble = EnsembleConfig {
        model,
        side,
        box_size,
        dim,
        rs,
        n_realizations,
        thresholds,
        master_seed,
        sigma_mode: SigmaMode::Sample,
        rc_source,
    };
    ensemble.sigma_mode = match get("sigma_mode").unwrap_or("sample") {
        "sample" => SigmaMode::Sample,
        "ensemble" => {
            let p = ensemble
                .spectral()
                .map_err(|e| Error::Config(format!("sigma_mode = ensemble: {e}")))?;
            SigmaMode::Ensemble(p.sigma0)
        }
        other => SigmaMode::Ensemble(parse("sigma_mode", other)?),
    };
    ensemble.validate()?;

    Ok(RunConfig {
        ensemble,
        output_dir: get("output_dir").map(PathBuf::from),
        workers: get("workers").map_or(Ok(0), |v| parse("workers", v))?,
        verbosity: get("verbosity").map_or(Ok(1), |v| parse("verbosity", v))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = "
        # comment line
        alpha = 0
        side = 64      # trailing comment
        rs = 2
        n_realizations = 3
        thresholds = -1:1:0.5
        master_seed = 9
    ";

    #[test]
    fn parses_basic_file() {
        let c = parse_run_config(BASIC).unwrap();
        assert_eq!(c.ensemble.side, 64);
        assert_eq!(c.ensemble.box_size, 64.0);
        assert_eq!(c.ensemble.thresholds, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(c.ensemble.sigma_mode, SigmaMode::Sample);
        assert_eq!(c.ensemble.rc_source, RcSource::Measured);
        assert_eq!(c.workers, 0);
        assert_eq!(c.output_dir, None);
    }

    #[test]
    fn reference_grid_is_exact() {
        let t = parse_thresholds("-3.5:3.5:0.5").unwrap();
        assert_eq!(t.len(), 15);
        assert_eq!(t[0], -3.5);
        assert_eq!(t[7], 0.0);
        assert_eq!(t[14], 3.5);
        assert_eq!(parse_thresholds("0, 1.5 ,2").unwrap(), vec![0.0, 1.5, 2.0]);
        assert_eq!(threshold_range(0.0, 0.3, 0.1).unwrap().len(), 4);
    }

    #[test]
    fn fwhm_and_sigma_modes() {
        let c = parse_run_config(&format!("{BASIC}\nsigma_mode = 0.25\n")).unwrap();
        assert_eq!(c.ensemble.sigma_mode, SigmaMode::Ensemble(0.25));
        let c = parse_run_config(&format!("{BASIC}\nsigma_mode = ensemble\n")).unwrap();
        assert!(matches!(c.ensemble.sigma_mode, SigmaMode::Ensemble(s) if s > 0.0));
        let text = BASIC.replace("rs = 2", "fwhm = 4.709640090");
        let c = parse_run_config(&text).unwrap();
        assert!((c.ensemble.rs - 2.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_files() {
        for bad in [
            format!("{BASIC}\nbogus = 1\n"),
            format!("{BASIC}\nside = 32\n"),
            format!("{BASIC}\nfwhm = 3\n"),
            BASIC.replace("n_realizations = 3", "n_realizations = 1"),
            BASIC.replace("thresholds = -1:1:0.5", "thresholds = 1, 0"),
            BASIC.replace("thresholds = -1:1:0.5", "thresholds = 1:0:0.5"),
            BASIC.replace("alpha = 0", "alpha = zero"),
            BASIC.replace("side = 64", ""),
            "side 64".to_string(),
        ] {
            assert!(
                matches!(parse_run_config(&bad), Err(Error::Config(_))),
                "{bad}"
            );
        }
    }
}
