//! Batch experiment driver.
//!
//! Every subcommand resolves its parameters from three layers — command-line
//! flags, then a flat `key=value` config file (`--config`), then built-in
//! defaults — runs one experiment, and writes a three-file output set into
//! the output directory:
//!
//! * `config.txt` — the fully-resolved configuration, sorted `key=value`
//!   lines that can be fed back through `--config` to reproduce the run;
//! * `data.csv` — per-grid-point / per-sample rows, 17-significant-digit
//!   reals (round-trip exact);
//! * `summary.json` — fitted slopes, limits, violation counts, diagnostics.
//!
//! The output directory is chosen by `--out`, else the `PDLAB_OUT`
//! environment variable, else the config file's `output_dir`, else
//! `pdlab_out`. Exit codes: 0 success, 1 domain/validation errors (including
//! unknown flags), 2 numeric/accuracy failures.

mod commands;
mod output;

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use output::{fmt_f64, fmt_f64_list, RunOutput};

const DEFAULT_SEED: u64 = 12345;
const DEFAULT_OUT_DIR: &str = "pdlab_out";
const OUT_ENV_VAR: &str = "PDLAB_OUT";
/// Config keys handled by the driver rather than a subcommand resolver.
const GLOBAL_KEYS: [&str; 3] = ["operation", "output_dir", "seed"];

#[derive(Parser, Debug)]
#[command(
    name = "pdlab",
    version,
    about = "Numerical laboratory for two-parameter Poisson-Dirichlet projections, \
             their reversible degenerate diffusion, and functional-inequality scans",
    disable_help_subcommand = true
)]
struct Cli {
    /// Base RNG seed (config key `seed`)
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (precedence: this flag, then $PDLAB_OUT, then the
    /// config file's `output_dir`, then `pdlab_out`)
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Flat key=value config file; command-line flags override its entries
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Thread-pool size for parallel scans (defaults to all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw truncated GEM(alpha, theta) stick-breaking weight sequences
    SampleGem(SampleGemArgs),
    /// Draw Dirichlet-process samples over positive integer labels
    SampleDp(SampleDpArgs),
    /// Project Dirichlet-process samples to d-simplex points
    Project(ProjectArgs),
    /// Evaluate the projection log-density and companion quantities at a point
    Density(DensityArgs),
    /// Sample the projection measure by random-walk Metropolis
    Mcmc(McmcArgs),
    /// Simulate the reversible degenerate diffusion by Euler-Maruyama
    Simulate(SimulateArgs),
    /// Check the super-Poincare inequality on a polynomial test family
    CheckSp(CheckSpArgs),
    /// Scan Cheeger-type landscape bounds a1, a2, lambda over sublevel sets
    CheegerScan(CheegerScanArgs),
    /// Scan the boundary flux of the quarter-power test function over level sets
    FluxScan(FluxScanArgs),
    /// Scan the perturbation potential psi and sup e^W over sublevel sets
    PsiScan(PsiScanArgs),
    /// Truncated second moments of the uniform-integrability counterexample
    Counterexample(CounterexampleArgs),
    /// Discrete spectrum of the d = 1 generator by graded finite elements
    Spectrum(SpectrumArgs),
    /// Fit rate constants for the candidate beta(r) exponents side by side
    FitRate(FitRateArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::SampleGem(_) => "sample-gem",
            Command::SampleDp(_) => "sample-dp",
            Command::Project(_) => "project",
            Command::Density(_) => "density",
            Command::Mcmc(_) => "mcmc",
            Command::Simulate(_) => "simulate",
            Command::CheckSp(_) => "check-sp",
            Command::CheegerScan(_) => "cheeger-scan",
            Command::FluxScan(_) => "flux-scan",
            Command::PsiScan(_) => "psi-scan",
            Command::Counterexample(_) => "counterexample",
            Command::Spectrum(_) => "spectrum",
            Command::FitRate(_) => "fit-rate",
        }
    }
}

#[derive(Args, Debug)]
struct SampleGemArgs {
    /// Stick-breaking discount alpha in [0, 1) (default 0.5)
    #[arg(long)]
    alpha: Option<f64>,
    /// Concentration theta > -alpha (default 1)
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    /// Residual stick mass at which breaking stops (default 1e-8)
    #[arg(long)]
    trunc_eps: Option<f64>,
    /// Number of independent sequences (default 10)
    #[arg(long)]
    n_samples: Option<usize>,
}

#[derive(Args, Debug)]
struct SampleDpArgs {
    /// Stick-breaking discount alpha in [0, 1) (default 0.5)
    #[arg(long)]
    alpha: Option<f64>,
    /// Concentration theta > -alpha (default 1)
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    /// Residual stick mass at which breaking stops (default 1e-8)
    #[arg(long)]
    trunc_eps: Option<f64>,
    /// Number of independent samples (default 10)
    #[arg(long)]
    n_samples: Option<usize>,
    /// Base law over labels: geometric[:ratio], inverse-square, or
    /// finite:p1,p2,... (default geometric:0.5)
    #[arg(long)]
    base: Option<String>,
}

#[derive(Args, Debug)]
struct ProjectArgs {
    /// Stick-breaking discount alpha in [0, 1) (default 0.5)
    #[arg(long)]
    alpha: Option<f64>,
    /// Concentration theta > -alpha (default 1)
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    /// Number of free simplex coordinates (default 2)
    #[arg(long)]
    d: Option<usize>,
    /// Residual stick mass at which breaking stops (default 1e-8)
    #[arg(long)]
    trunc_eps: Option<f64>,
    /// Number of independent samples (default 10)
    #[arg(long)]
    n_samples: Option<usize>,
    /// Base law over labels: geometric[:ratio], inverse-square, or
    /// finite:p1,p2,... (default geometric:0.5)
    #[arg(long)]
    base: Option<String>,
}

#[derive(Args, Debug)]
struct DensityArgs {
    /// Number of free simplex coordinates (default 1)
    #[arg(long)]
    d: Option<usize>,
    /// Concentration theta > -1/2 (default 1)
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    /// Base probabilities p_1,...,p_{d+1} (default uniform)
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    /// Evaluation point: free coordinates x_1,...,x_d (default barycenter)
    #[arg(long, value_delimiter = ',')]
    x: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct McmcArgs {
    /// Number of free simplex coordinates (default 1)
    #[arg(long)]
    d: Option<usize>,
    /// Concentration theta > -1/2 (default 1)
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    /// Base probabilities p_1,...,p_{d+1} (default uniform)
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    /// Total chain length including burn-in (default 50000)
    #[arg(long)]
    length: Option<usize>,
    /// Discarded prefix length (default 5000)
    #[arg(long)]
    burn_in: Option<usize>,
    /// Proposal scale in logit coordinates (default 0.5)
    #[arg(long)]
    step_scale: Option<f64>,
    /// Keep every thin-th retained sample in the CSV (default 10)
    #[arg(long)]
    thin: Option<usize>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Number of free simplex coordinates (default 1)
    #[arg(long)]
    d: Option<usize>,
    /// Concentration theta > -1/2 (default 1)
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    /// Base probabilities p_1,...,p_{d+1} (default uniform)
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    /// Euler-Maruyama step size (default 1e-4)
    #[arg(long)]
    step_h: Option<f64>,
    /// Number of steps (default 100000)
    #[arg(long)]
    n_steps: Option<usize>,
    /// Clamp shell distance from the simplex boundary (default 1e-8)
    #[arg(long)]
    boundary_eps: Option<f64>,
    /// Record one state every this many steps (default 100)
    #[arg(long)]
    thinning: Option<usize>,
    /// Initial point: free coordinates (default barycenter)
    #[arg(long, value_delimiter = ',')]
    x0: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct CheckSpArgs {
    /// Number of free simplex coordinates (default 1)
    #[arg(long)]
    d: Option<usize>,
    /// Concentration theta > -1/2 (default 1)
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    /// Base probabilities p_1,...,p_{d+1} (default uniform)
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    /// Retained Metropolis samples of the projection measure (default 100000)
    #[arg(long)]
    n_samples: Option<usize>,
    /// Metropolis burn-in (default 10000)
    #[arg(long)]
    burn_in: Option<usize>,
    /// Metropolis proposal scale (default 0.5)
    #[arg(long)]
    step_scale: Option<f64>,
    /// Smallest r in the grid (default 1e-3)
    #[arg(long)]
    r_min: Option<f64>,
    /// Largest r in the grid (default 10)
    #[arg(long)]
    r_max: Option<f64>,
    /// Number of log-spaced r grid points (default 9)
    #[arg(long)]
    r_points: Option<usize>,
    /// Random degree-3 polynomials added to the monomial family (default 4)
    #[arg(long)]
    n_random: Option<usize>,
}

#[derive(Args, Debug)]
struct CheegerScanArgs {
    /// Number of free simplex coordinates (default 2)
    #[arg(long)]
    d: Option<usize>,
    /// Concentration theta > -1/2 (default 1)
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    /// Base probabilities p_1,...,p_{d+1} (default uniform)
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    /// Smallest level s (default 1e2)
    #[arg(long)]
    s_min: Option<f64>,
    /// Largest level s (default 1e6)
    #[arg(long)]
    s_max: Option<f64>,
    /// Number of log-spaced levels (default 9)
    #[arg(long)]
    s_points: Option<usize>,
    /// Search starts per level (default 64)
    #[arg(long)]
    n_search: Option<usize>,
}

#[derive(Args, Debug)]
struct FluxScanArgs {
    /// Number of free simplex coordinates, at most 2 (default 2)
    #[arg(long)]
    d: Option<usize>,
    /// Concentration theta > -1/2 (default 1)
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    /// Base probabilities p_1,...,p_{d+1} (default uniform)
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    /// Smallest level r (default 1e3)
    #[arg(long)]
    r_min: Option<f64>,
    /// Largest level r (default 1e7)
    #[arg(long)]
    r_max: Option<f64>,
    /// Number of log-spaced levels (default 5)
    #[arg(long)]
    r_points: Option<usize>,
    /// Include the remainder coordinate in the quarter-power test function
    /// (default false)
    #[arg(long)]
    include_remainder: Option<bool>,
}

#[derive(Args, Debug)]
struct PsiScanArgs {
    /// Number of free simplex coordinates (default 2)
    #[arg(long)]
    d: Option<usize>,
    /// Concentration theta > -1/2 (default 1)
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    /// Base probabilities p_1,...,p_{d+1} (default uniform)
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    /// Comparison Dirichlet exponents alpha_1,...,alpha_{d+1}
    /// (default alpha_i = theta + d/2, the bounded-perturbation choice)
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    /// Smallest level s (default 1e2)
    #[arg(long)]
    s_min: Option<f64>,
    /// Largest level s (default 1e6)
    #[arg(long)]
    s_max: Option<f64>,
    /// Number of log-spaced levels (default 5)
    #[arg(long)]
    s_points: Option<usize>,
    /// Search starts per level (default 64)
    #[arg(long)]
    n_search: Option<usize>,
}

#[derive(Args, Debug)]
struct CounterexampleArgs {
    /// Concentration theta > 0 (default 1)
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    /// Atom probability schedule: geometric (p_n = 2^-n) or geometric:ratio
    /// (p_n = ratio^n) (default geometric)
    #[arg(long)]
    pn: Option<String>,
    /// Smallest n (default 5)
    #[arg(long)]
    n_min: Option<u32>,
    /// Largest n (default 25)
    #[arg(long)]
    n_max: Option<u32>,
    /// Truncation threshold constant c in t >= sqrt(c p_n (1 + theta p_n))
    /// (default 1)
    #[arg(long)]
    c_threshold: Option<f64>,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    /// Concentration theta > -1/2 (default 1)
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    /// Base probabilities p_1,p_2 (default 0.5,0.5; the solver is d = 1)
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    /// Number of mesh cells (default 512)
    #[arg(long)]
    n_cells: Option<usize>,
    /// Interval truncation distance from each endpoint (default 1e-6)
    #[arg(long)]
    cutoff_delta: Option<f64>,
    /// Mesh grading exponent toward the endpoints (default 2)
    #[arg(long)]
    grading_exponent: Option<f64>,
    /// Number of eigenvalues to report (default 6)
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Args, Debug)]
struct FitRateArgs {
    /// Number of free simplex coordinates (default 1)
    #[arg(long)]
    d: Option<usize>,
    /// Concentration theta > -1/2 (default 1)
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    /// Base probabilities p_1,...,p_{d+1} (default uniform)
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    /// Retained Metropolis samples of the projection measure (default 50000)
    #[arg(long)]
    n_samples: Option<usize>,
    /// Metropolis burn-in (default 5000)
    #[arg(long)]
    burn_in: Option<usize>,
    /// Metropolis proposal scale (default 0.5)
    #[arg(long)]
    step_scale: Option<f64>,
    /// Smallest r in the grid (default 1e-3)
    #[arg(long)]
    r_min: Option<f64>,
    /// Largest r in the grid (default 10)
    #[arg(long)]
    r_max: Option<f64>,
    /// Number of log-spaced r grid points (default 9)
    #[arg(long)]
    r_points: Option<usize>,
    /// Random degree-3 polynomials added to the monomial family (default 4)
    #[arg(long)]
    n_random: Option<usize>,
}

/// Merges config-file entries under explicit flags and records every
/// resolved value, so the run can write back a complete, reproducible
/// configuration.
pub(crate) struct Resolver<'a> {
    file: &'a BTreeMap<String, String>,
    used: BTreeSet<String>,
    resolved: BTreeMap<String, String>,
}

impl<'a> Resolver<'a> {
    fn new(file: &'a BTreeMap<String, String>) -> Self {
        Resolver {
            file,
            used: BTreeSet::new(),
            resolved: BTreeMap::new(),
        }
    }

    fn file_value(&mut self, key: &str) -> Option<&'a str> {
        self.used.insert(key.to_string());
        self.file.get(key).map(|s| s.as_str())
    }

    fn record(&mut self, key: &str, value: String) {
        self.resolved.insert(key.to_string(), value);
    }

    pub(crate) fn f64(&mut self, key: &str, flag: Option<f64>, default: f64) -> Result<f64> {
        // The config key is consumed (marked used) even when the flag
        // shadows it, so a written-back config always round-trips.
        let file_raw = self.file_value(key);
        let v = match flag {
            Some(v) => v,
            None => match file_raw {
                Some(raw) => parse_scalar::<f64>(key, raw, "a real number")?,
                None => default,
            },
        };
        self.record(key, fmt_f64(v));
        Ok(v)
    }

    pub(crate) fn usize(&mut self, key: &str, flag: Option<usize>, default: usize) -> Result<usize> {
        let file_raw = self.file_value(key);
        let v = match flag {
            Some(v) => v,
            None => match file_raw {
                Some(raw) => parse_scalar::<usize>(key, raw, "an unsigned integer")?,
                None => default,
            },
        };
        self.record(key, v.to_string());
        Ok(v)
    }

    pub(crate) fn u32(&mut self, key: &str, flag: Option<u32>, default: u32) -> Result<u32> {
        let file_raw = self.file_value(key);
        let v = match flag {
            Some(v) => v,
            None => match file_raw {
                Some(raw) => parse_scalar::<u32>(key, raw, "an unsigned integer")?,
                None => default,
            },
        };
        self.record(key, v.to_string());
        Ok(v)
    }

    pub(crate) fn bool(&mut self, key: &str, flag: Option<bool>, default: bool) -> Result<bool> {
        let file_raw = self.file_value(key);
        let v = match flag {
            Some(v) => v,
            None => match file_raw {
                Some(raw) => parse_scalar::<bool>(key, raw, "true or false")?,
                None => default,
            },
        };
        self.record(key, v.to_string());
        Ok(v)
    }

    pub(crate) fn string(&mut self, key: &str, flag: Option<&str>, default: &str) -> Result<String> {
        let file_raw = self.file_value(key);
        let v = match flag {
            Some(v) => v.to_string(),
            None => match file_raw {
                Some(raw) => raw.to_string(),
                None => default.to_string(),
            },
        };
        self.record(key, v.clone());
        Ok(v)
    }

    /// Comma-separated list of reals; `default` is evaluated only when
    /// neither the flag nor the config file provides the key.
    pub(crate) fn vec_f64(
        &mut self,
        key: &str,
        flag: Option<&[f64]>,
        default: impl FnOnce() -> Vec<f64>,
    ) -> Result<Vec<f64>> {
        let file_raw = self.file_value(key);
        let v: Vec<f64> = match flag {
            Some(v) => v.to_vec(),
            None => match file_raw {
                Some(raw) => {
                    let mut out = Vec::new();
                    for piece in raw.split(',') {
                        out.push(parse_scalar::<f64>(key, piece, "a real number")?);
                    }
                    out
                }
                None => default(),
            },
        };
        self.record(key, fmt_f64_list(&v));
        Ok(v)
    }

    /// Errors on config keys that belong to no layer: neither global nor
    /// consumed by the subcommand's resolution.
    fn finish(self, operation: &str) -> Result<BTreeMap<String, String>> {
        for key in self.file.keys() {
            if GLOBAL_KEYS.contains(&key.as_str()) || self.used.contains(key) {
                continue;
            }
            return Err(Error::InvalidParameter(format!(
                "unknown config key '{key}' for operation '{operation}'"
            )));
        }
        Ok(self.resolved)
    }
}

fn parse_scalar<T: std::str::FromStr>(key: &str, raw: &str, what: &str) -> Result<T> {
    raw.trim().parse::<T>().map_err(|_| {
        Error::InvalidParameter(format!(
            "config key {key}: cannot parse '{}' as {what}",
            raw.trim()
        ))
    })
}

/// Parses a flat `key=value` config file. Blank lines and `#` comments are
/// skipped; duplicate keys are rejected so a file never silently shadows
/// itself.
fn parse_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("reading config {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::InvalidParameter(format!(
                "config {}:{}: expected key=value, got '{line}'",
                path.display(),
                idx + 1
            )));
        };
        let key = k.trim().to_string();
        if key.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "config {}:{}: empty key",
                path.display(),
                idx + 1
            )));
        }
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::InvalidParameter(format!(
                "config {}:{}: duplicate key '{key}'",
                path.display(),
                idx + 1
            )));
        }
    }
    Ok(map)
}

/// Log-spaced grid from `lo` to `hi` inclusive with `n` points (n >= 2, or
/// n = 1 when lo == hi).
pub(crate) fn log_grid(key: &str, lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi >= lo) {
        return Err(Error::InvalidParameter(format!(
            "{key}: need 0 < min <= max, got [{lo}, {hi}]"
        )));
    }
    if n == 0 || (n == 1 && hi > lo) {
        return Err(Error::InvalidParameter(format!(
            "{key}: {n} points cannot span [{lo}, {hi}]"
        )));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let (ll, lh) = (lo.ln(), hi.ln());
    Ok((0..n)
        .map(|i| (ll + (lh - ll) * i as f64 / (n - 1) as f64).exp())
        .collect())
}

/// Full driver: parse `args`, run, report. Returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("pdlab: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<Vec<PathBuf>> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::InvalidParameter(
                "--threads must be at least 1".into(),
            ));
        }
        // The pool is process-global; a second initialization (embedding,
        // tests) fails harmlessly and keeps the existing pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }

    let file_cfg = match &cli.config {
        Some(path) => parse_config_file(path)?,
        None => BTreeMap::new(),
    };
    let operation = cli.command.name();
    if let Some(stated) = file_cfg.get("operation") {
        if stated != operation {
            return Err(Error::InvalidParameter(format!(
                "config file states operation '{stated}' but subcommand '{operation}' was invoked"
            )));
        }
    }

    let seed = match cli.seed {
        Some(s) => s,
        None => match file_cfg.get("seed") {
            Some(raw) => parse_scalar::<u64>("seed", raw, "an unsigned integer")?,
            None => DEFAULT_SEED,
        },
    };
    let out_dir: PathBuf = cli
        .out
        .clone()
        .or_else(|| {
            std::env::var_os(OUT_ENV_VAR)
                .filter(|v| !v.is_empty())
                .map(PathBuf::from)
        })
        .or_else(|| file_cfg.get("output_dir").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));

    let mut resolver = Resolver::new(&file_cfg);
    let (data, summary) = commands::dispatch(&cli.command, seed, &mut resolver)?;
    let mut config = resolver.finish(operation)?;
    config.insert("operation".to_string(), operation.to_string());
    config.insert("seed".to_string(), seed.to_string());
    config.insert("output_dir".to_string(), out_dir.display().to_string());

    output::write_run(
        &out_dir,
        &RunOutput {
            config,
            data,
            summary,
        },
    )
}
