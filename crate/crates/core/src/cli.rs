//! Command implementations for the `so3tengen` binary.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or input error,
//! 3 enumeration over the size cap, 4 training divergence.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::equilearn::{self, TrainConfig, Variant};
use crate::equivar::{self, EquivariantBasis};
use crate::error::{Error, Result};
use crate::invgen::{self, GeneratorSet, Signature, SlotSpec, DEFAULT_SEED};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_OVERFLOW: i32 = 3;
pub const EXIT_DIVERGED: i32 = 4;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "SO3TENGEN_THREADS";

#[derive(Debug, Parser)]
#[command(name = "so3tengen", version, about = "Rotation-invariant and equivariant tensor-network generators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Enumerate invariant generators for a signature such as "cart:1,cart:2".
    Enumerate {
        signature: String,
        #[arg(long)]
        degree: usize,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(0..=1))]
        epsilon: u8,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Build an equivariant basis from the input signature to one output slot.
    Basis {
        signature: String,
        #[arg(long = "out-rep")]
        out_rep: String,
        #[arg(long)]
        degree: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Check a generator set or basis file under random rotations.
    Verify {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 200)]
        rotations: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the report JSON here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Train the stress models and write runs.csv and aggregate.csv.
    Experiment {
        /// One variant or a comma-separated list (mlp, equi3, equi7).
        #[arg(long)]
        variant: String,
        #[arg(long = "train-sizes", value_delimiter = ',')]
        train_sizes: Option<Vec<usize>>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Override the number of optimiser steps.
        #[arg(long)]
        steps: Option<usize>,
        /// Override the number of repetitions per train size.
        #[arg(long)]
        runs: Option<usize>,
        /// Also write each run's training set as JSON lines.
        #[arg(long)]
        dump_data: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub signature: Signature,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub out_rep: Option<SlotSpec>,
    pub degree: usize,
    /// Per-generator worst invariance error (generator sets only).
    pub invariance: Vec<f64>,
    /// Per-element worst equivariance error (bases only).
    pub equivariance: Vec<f64>,
    pub max_violation: f64,
    pub rotations: usize,
    pub seed: u64,
    pub tol: f64,
    pub pass: bool,
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| Error::Parse(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    let mut f = fs::File::create(&tmp)?;
    f.write_all(bytes)?;
    f.sync_all()?;
    drop(f);
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::EnumerationTooLarge { .. } => EXIT_OVERFLOW,
        Error::TrainingDiverged { .. } => EXIT_DIVERGED,
        _ => EXIT_USAGE,
    }
}

/// Applies the thread cap from the environment, if set.
pub fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Parse(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn cmd_enumerate(signature: &str, degree: usize, epsilon: u8, out: &Path, seed: u64) -> Result<i32> {
    let sig: Signature = signature.parse()?;
    let set = invgen::enumerate_networks_seeded(&sig, degree, epsilon, seed)?;
    write_atomic(out, set.to_json()?.as_bytes())?;
    for (d, n) in set.count_per_degree() {
        println!("degree {d}: {n} generators");
    }
    println!("total: {} generators -> {}", set.len(), out.display());
    Ok(EXIT_OK)
}

pub fn cmd_basis(signature: &str, out_rep: &str, degree: usize, out: &Path, seed: u64) -> Result<i32> {
    let sig: Signature = signature.parse()?;
    let rep: SlotSpec = out_rep.parse()?;
    let basis = equivar::equivariant_basis_seeded(&sig, &rep, degree, seed)?;
    write_atomic(out, basis.to_json()?.as_bytes())?;
    println!("{} basis elements -> {}", basis.len(), out.display());
    for (i, e) in basis.elements.iter().enumerate() {
        println!("  [{i}] degree {:?}: {}", e.degree, equivar::formula_sketch(&e.net));
    }
    Ok(EXIT_OK)
}

/// Runs the rotation check on a parsed file.
pub fn verify_file(text: &str, rotations: usize, tol: f64, seed: u64) -> Result<VerificationReport> {
    if rotations == 0 {
        return Err(Error::Parse("at least one rotation is needed".into()));
    }
    let value: serde_json::Value = serde_json::from_str(text)?;
    let (signature, out_rep, degree, invariance, equivariance) = if value.get("out_rep").is_some() {
        let b: EquivariantBasis = serde_json::from_value(value)?;
        let v = equivar::equivariance_violations(&b, rotations, seed)?;
        (b.signature, Some(b.out_rep), b.max_degree, Vec::new(), v)
    } else {
        let s: GeneratorSet = serde_json::from_value(value)?;
        let v = invgen::invariance_violations(&s, rotations, seed)?;
        (s.signature, None, s.max_degree, v, Vec::new())
    };
    let max_violation = invariance.iter().chain(&equivariance).copied().fold(0.0, f64::max);
    let pass = invariance.iter().chain(&equivariance).all(|&v| v <= tol);
    Ok(VerificationReport { signature, out_rep, degree, invariance, equivariance, max_violation, rotations, seed, tol, pass })
}

pub fn cmd_verify(input: &Path, rotations: usize, tol: f64, seed: u64, report: Option<&Path>) -> Result<i32> {
    let text = fs::read_to_string(input)?;
    let rep = verify_file(&text, rotations, tol, seed)?;
    let json = serde_json::to_string_pretty(&rep)?;
    println!("{json}");
    if let Some(p) = report {
        write_atomic(p, json.as_bytes())?;
    }
    Ok(if rep.pass { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

pub struct ExperimentArgs<'a> {
    pub variants: &'a str,
    pub train_sizes: Option<Vec<usize>>,
    pub seed: u64,
    pub out: &'a Path,
    pub steps: Option<usize>,
    pub runs: Option<usize>,
    pub dump_data: bool,
}

pub fn cmd_experiment(args: ExperimentArgs<'_>) -> Result<i32> {
    let variants: Vec<Variant> = args.variants.split(',').map(|v| v.trim().parse()).collect::<Result<_>>()?;
    fs::create_dir_all(args.out)?;
    let mut metrics = equilearn::Metrics::default();
    for variant in variants {
        let mut cfg = TrainConfig { variant, seed: args.seed, steps: args.steps, ..TrainConfig::default() };
        if let Some(sizes) = &args.train_sizes {
            cfg.train_sizes = sizes.clone();
        }
        if let Some(r) = args.runs {
            cfg.runs = r;
        }
        if args.dump_data {
            for &n in &cfg.train_sizes {
                for k in 0..cfg.runs as u64 {
                    let [train, _, _] = equilearn::run_datasets(&cfg, n, cfg.seed + k)?;
                    let mut buf = Vec::new();
                    equilearn::write_jsonl(&train, &mut buf)?;
                    write_atomic(&args.out.join(format!("train_n{n}_seed{}.jsonl", cfg.seed + k)), &buf)?;
                }
            }
        }
        let m = equilearn::run_experiment(&cfg)?;
        for a in &m.aggregate {
            println!("{} N={}: mse {:.3e} +- {:.1e}", a.variant, a.train_size, a.mse_mean, a.mse_std);
        }
        metrics.extend(m);
    }
    metrics.write_csvs(args.out)?;
    println!("wrote {}/runs.csv and aggregate.csv", args.out.display());
    Ok(EXIT_OK)
}

fn dispatch(cli: Cli) -> Result<i32> {
    configure_threads()?;
    match cli.command {
        Command::Enumerate { signature, degree, epsilon, out, seed } => cmd_enumerate(&signature, degree, epsilon, &out, seed),
        Command::Basis { signature, out_rep, degree, out, seed } => cmd_basis(&signature, &out_rep, degree, &out, seed),
        Command::Verify { input, rotations, tol, seed, report } => cmd_verify(&input, rotations, tol, seed, report.as_deref()),
        Command::Experiment { variant, train_sizes, seed, out, steps, runs, dump_data } => {
            cmd_experiment(ExperimentArgs { variants: &variant, train_sizes, seed, out: &out, steps, runs, dump_data })
        }
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
