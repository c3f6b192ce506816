//! Command-line front end.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 I/O or file
//! format error, 4 numerical or domain error.

mod config;

pub use config::{parse_run_config, parse_thresholds, threshold_range, RunConfig};

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::ensemble::{
    duality_check, run_ensemble, write_outputs, DUALITY_SYSTEMATIC, INCOMPLETE_MARKER,
};
use crate::error::{Error, Result};
use crate::grf::{generate, read_field, sample_moments, smooth, write_field, FieldGrid};
use crate::spectrum::{nyquist, scaling_report, PowerSpectrumModel};
use crate::states::count_states;
use crate::topo2d::{analyze_2d, excursion_mask, ExcursionMask, SigmaMode, TopoStats};
use crate::topo3d::betti3d;
use crate::Dim;

#[derive(Debug, Parser)]
#[command(
    name = "extopo",
    version,
    about = "Topology of excursion sets of Gaussian random fields"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw one Gaussian random field and write it as a binary dump.
    Gen(GenArgs),
    /// Threshold a field (or analyse a text mask) and tabulate its topology.
    Sweep(SweepArgs),
    /// Run an ensemble described by a configuration file.
    Ensemble(EnsembleArgs),
    /// Count the states compatible with given Betti numbers.
    States(StatesArgs),
    /// Spectral parameters of a power-spectrum model.
    Spectrum(SpectrumArgs),
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Spectral index of P(k) = amplitude * k^alpha.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
    /// Intrinsic large-scale cutoff.
    #[arg(long)]
    klow: Option<f64>,
    /// Intrinsic small-scale cutoff.
    #[arg(long)]
    khigh: Option<f64>,
}

impl ModelArgs {
    fn model(&self) -> Result<PowerSpectrumModel> {
        PowerSpectrumModel::new(self.amplitude, self.alpha, self.klow, self.khigh)
    }
}

#[derive(Debug, Args)]
struct GenArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Grid side (power of two, at least 32).
    #[arg(long)]
    n: usize,
    /// Physical box size; defaults to the grid side.
    #[arg(long)]
    boxsize: Option<f64>,
    /// Gaussian smoothing length.
    #[arg(long, default_value_t = 0.0)]
    rs: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Output file; a JSON sidecar is written next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Binary field dump.
    #[arg(long, conflicts_with = "mask", required_unless_present = "mask")]
    field: Option<PathBuf>,
    /// Text mask: rows of `#`/`1` (foreground) and `.`/`0` (background).
    #[arg(long)]
    mask: Option<PathBuf>,
    /// Fixed sigma0 for thresholding instead of the field's sample value.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = -3.0, allow_negative_numbers = true)]
    nu_min: f64,
    #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
    nu_max: f64,
    #[arg(long, default_value_t = 0.5)]
    nu_step: f64,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EnsembleArgs {
    /// Configuration file of `key = value` lines.
    config: PathBuf,
    /// Output directory; overrides `output_dir` from the file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; overrides `workers` from the file (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct StatesArgs {
    #[arg(long)]
    b0: u64,
    #[arg(long)]
    b1: u64,
    /// Also list the coefficient vectors.
    #[arg(long)]
    list: bool,
}

#[derive(Debug, Args)]
struct SpectrumArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 0.0)]
    rs: f64,
    #[arg(long)]
    boxsize: f64,
    /// Grid side; caps the integrals at its Nyquist wavenumber.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 2)]
    dim: usize,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Diagnostics go to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let mut stdout = std::io::stdout().lock();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(&a, &mut stdout),
        Command::Sweep(a) => cmd_sweep(&a, &mut stdout),
        Command::Ensemble(a) => cmd_ensemble(&a),
        Command::States(a) => cmd_states(&a, &mut stdout),
        Command::Spectrum(a) => cmd_spectrum(&a, &mut stdout),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn usage(e: Error) -> Error {
    match e {
        Error::Domain(m) => Error::Config(m),
        other => other,
    }
}

fn cmd_gen(a: &GenArgs, out: &mut impl Write) -> Result<()> {
    let model = a.model.model().map_err(usage)?;
    let dim = Dim::from_usize(a.dim)?;
    let box_size = a.boxsize.unwrap_or(a.n as f64);
    let field = generate(&model, a.n, box_size, dim, a.seed)?;
    let field = smooth(&field, a.rs).map_err(usage)?;
    write_field(&a.out, &field)?;
    let m = sample_moments(&field);
    let json = serde_json::json!({
        "mean": m.mean,
        "sigma0": m.sigma0,
        "sigma1": m.sigma1,
        "r_c": m.correlation_length(),
    });
    writeln!(out, "{json}")?;
    Ok(())
}

fn read_mask(path: &Path) -> Result<ExcursionMask> {
    let text = fs::read_to_string(path)?;
    let rows: Vec<&str> = text
        .lines()
        .map(str::trim_end)
        .filter(|l| !l.is_empty())
        .collect();
    ExcursionMask::from_ascii(&rows)
}

fn stats_of(mask: &ExcursionMask) -> Result<(TopoStats, String, String)> {
    match mask.dim {
        Dim::Two => {
            let (hs, st) = analyze_2d(mask)?;
            Ok((st, hs.jmax().to_string(), hs.to_json()))
        }
        Dim::Three => Ok((betti3d(mask)?, String::new(), String::new())),
    }
}

fn cmd_sweep(a: &SweepArgs, out: &mut impl Write) -> Result<()> {
    let mut rows: Vec<[String; 8]> = Vec::new();
    let row = |nu: String, s: &TopoStats, jmax: String, spec: String| {
        [
            nu,
            s.b0.to_string(),
            s.b1.to_string(),
            s.b2.to_string(),
            s.chi.to_string(),
            s.bsum.to_string(),
            jmax,
            spec,
        ]
    };
    if let Some(path) = &a.mask {
        let mask = read_mask(path)?;
        let (s, jmax, spec) = stats_of(&mask)?;
        // a literal mask carries no threshold
        rows.push(row(String::new(), &s, jmax, spec));
    } else {
        let path = a.field.as_ref().expect("clap requires --field or --mask");
        if !(a.nu_min < a.nu_max) {
            return Err(Error::Config(format!(
                "--nu-min ({}) must be below --nu-max ({})",
                a.nu_min, a.nu_max
            )));
        }
        let nus = threshold_range(a.nu_min, a.nu_max, a.nu_step)?;
        let field: FieldGrid = read_field(path)?;
        let mode = match a.sigma {
            Some(s) => SigmaMode::Ensemble(s),
            None => SigmaMode::Sample,
        };
        for nu in nus {
            let mask = excursion_mask(&field, nu, mode)?;
            let (s, jmax, spec) = stats_of(&mask)?;
            rows.push(row(nu.to_string(), &s, jmax, spec));
        }
    }

    let sink: Box<dyn Write + '_> = match &a.out {
        Some(p) => Box::new(fs::File::create(p)?),
        None => Box::new(out),
    };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink);
    w.write_record(["nu", "b0", "b1", "b2", "chi", "bsum", "jmax", "m_spectrum"])?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_ensemble(a: &EnsembleArgs) -> Result<()> {
    let text = fs::read_to_string(&a.config)?;
    let cfg = parse_run_config(&text)?;
    let dir = a
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| Error::Config("no output directory: pass --out or set output_dir".into()))?;
    let workers = a.workers.unwrap_or(cfg.workers);
    fs::create_dir_all(&dir)?;
    let marker = dir.join(INCOMPLETE_MARKER);
    fs::write(&marker, "run in progress\n")?;

    let outcome = run_ensemble(&cfg.ensemble, workers)
        .and_then(|run| write_outputs(&run, &dir).map(|m| (run, m)));
    match outcome {
        Ok((run, manifest)) => {
            fs::remove_file(&marker)?;
            if cfg.verbosity > 0 {
                eprintln!(
                    "{} realizations, {} thresholds, r_c = {:.4}, manifest {}",
                    run.records.len(),
                    run.summaries.len(),
                    run.r_c,
                    &manifest.hash[..12]
                );
                if let Ok(d) = duality_check(&run.summaries) {
                    let failing = d.rows.iter().filter(|r| !r.pass).count();
                    eprintln!(
                        "duality: {failing} of {} thresholds outside 3 se + {}%",
                        d.rows.len(),
                        DUALITY_SYSTEMATIC * 100.0
                    );
                }
            }
            Ok(())
        }
        Err(e) => {
            // keep the marker and record why the run stopped
            let _ = fs::write(&marker, format!("run failed: {e}\n"));
            Err(e)
        }
    }
}

fn cmd_states(a: &StatesArgs, out: &mut impl Write) -> Result<()> {
    let (b0, b1) = (
        i64::try_from(a.b0).map_err(|_| Error::Config("b0 too large".into()))?,
        i64::try_from(a.b1).map_err(|_| Error::Config("b1 too large".into()))?,
    );
    let s = count_states(b0, b1, a.list)?;
    writeln!(out, "{}", s.to_json())?;
    Ok(())
}

fn cmd_spectrum(a: &SpectrumArgs, out: &mut impl Write) -> Result<()> {
    let model = a.model.model().map_err(usage)?;
    let dim = Dim::from_usize(a.dim)?;
    let cap = a.n.map(|n| nyquist(n, a.boxsize));
    let r = scaling_report(&model, a.rs, a.boxsize, dim, cap)?;
    writeln!(out, "{}", serde_json::to_string(&r)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(args: &[&str]) -> i32 {
        run(std::iter::once("extopo").chain(args.iter().copied()))
    }

    #[test]
    fn usage_errors_exit_with_two() {
        assert_eq!(code(&["gen", "--n", "64"]), 2);
        assert_eq!(code(&["states", "--b0", "-1", "--b1", "2"]), 2);
        assert_eq!(code(&["nonsense"]), 2);
    }

    #[test]
    fn states_command_succeeds() {
        assert_eq!(code(&["states", "--b0", "2", "--b1", "2"]), 0);
    }

    #[test]
    fn missing_files_exit_with_three() {
        assert_eq!(code(&["sweep", "--field", "/nonexistent/f.bin"]), 3);
        assert_eq!(
            code(&["ensemble", "/nonexistent/run.cfg", "--out", "/tmp/x"]),
            3
        );
    }
}
