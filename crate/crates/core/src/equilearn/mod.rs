//! Regression of a hyperelastic stress law from deformation samples, with an
//! equivariant model built from matrix features and a plain network baseline.

mod adam;
mod material;
mod mlp;
mod model;

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use adam::{cosine_lr, Adam};
pub use material::{
    conjugate, det, equivariant_features, feature_invariants, linear_law, matmul, neo_hookean, sample_deformation,
    trace, transpose, Mat3, DET_FLOOR, IDENTITY,
};
pub use mlp::{Activation, Cache, Mlp};
pub use model::{
    combine_features, model_equivariance_violation, model_forward, model_inputs, new_network, Prepared, Variant,
};

use crate::error::{Error, Result};

/// One deformation and its exact stress.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeformationSample {
    #[serde(rename = "F")]
    pub f: Mat3,
    #[serde(rename = "P")]
    pub p: Mat3,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub variant: Variant,
    pub train_sizes: Vec<usize>,
    pub val_size: usize,
    pub test_size: usize,
    pub seed: u64,
    /// Independent repetitions per train size; run `k` uses seed `seed + k`.
    pub runs: usize,
    /// Optimiser steps; `None` picks 2000 for up to 1000 samples, else 500.
    pub steps: Option<usize>,
    /// Minibatch size; `None` trains on the full set every step.
    pub batch_size: Option<usize>,
    pub mu: f64,
    pub lambda: f64,
    pub amplitude: f64,
    pub lr: f64,
    pub weight_decay: f64,
    pub hidden: Vec<usize>,
    /// Validation is measured every this many steps and after the last one.
    pub eval_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            variant: Variant::Equi7,
            train_sizes: vec![100, 500, 1000, 2000, 5000, 10000],
            val_size: 1000,
            test_size: 1000,
            seed: 0,
            runs: 3,
            steps: None,
            batch_size: None,
            mu: 1.0,
            lambda: 1.0,
            amplitude: 0.3,
            lr: 5e-4,
            weight_decay: 1e-8,
            hidden: vec![64, 64],
            eval_every: 20,
        }
    }
}

impl TrainConfig {
    pub fn steps_for(&self, train_size: usize) -> usize {
        self.steps.unwrap_or(if train_size <= 1000 { 2000 } else { 500 })
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Parse(m.to_string()));
        if self.train_sizes.is_empty() || self.train_sizes.contains(&0) {
            return bad("train sizes must be non-empty and positive");
        }
        if self.val_size == 0 || self.test_size == 0 || self.runs == 0 || self.eval_every == 0 {
            return bad("validation size, test size, runs and eval interval must be positive");
        }
        if !(self.amplitude > 0.0 && self.amplitude < 1.0) {
            return bad("sampling amplitude must lie in (0, 1)");
        }
        if self.batch_size == Some(0) {
            return bad("batch size must be positive");
        }
        Ok(())
    }
}

/// `n` samples with exact neo-Hookean labels.
pub fn generate_dataset(n: usize, mu: f64, lambda: f64, amplitude: f64, rng: &mut ChaCha8Rng) -> Result<Vec<DeformationSample>> {
    (0..n)
        .map(|_| {
            let f = sample_deformation(rng, amplitude);
            Ok(DeformationSample { p: neo_hookean(&f, mu, lambda)?, f })
        })
        .collect()
}

/// One sample per line as `{"F": [9 reals], "P": [9 reals]}`.
pub fn write_jsonl<W: Write>(samples: &[DeformationSample], mut w: W) -> Result<()> {
    for s in samples {
        serde_json::to_writer(&mut w, s)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const STREAM_VAL: u64 = 1;
const STREAM_TEST: u64 = 2;
const STREAM_INIT: u64 = 3;
const STREAM_BATCH: u64 = 4;
// train sets use stream STREAM_TRAIN + size so every size draws fresh data
const STREAM_TRAIN: u64 = 1 << 32;

/// The three datasets of one run. Validation and test sets depend only on
/// the run seed, so every variant and train size sees the same ones.
pub fn run_datasets(cfg: &TrainConfig, train_size: usize, run_seed: u64) -> Result<[Vec<DeformationSample>; 3]> {
    let gen = |n, stream| generate_dataset(n, cfg.mu, cfg.lambda, cfg.amplitude, &mut rng_for(run_seed, stream));
    Ok([
        gen(train_size, STREAM_TRAIN + train_size as u64)?,
        gen(cfg.val_size, STREAM_VAL)?,
        gen(cfg.test_size, STREAM_TEST)?,
    ])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub variant: Variant,
    pub train_size: usize,
    pub seed: u64,
    pub test_mse: f64,
    pub val_mse: f64,
    pub wall_seconds: f64,
}

/// A trained model with its record and full-batch training loss per step.
pub struct TrainedRun {
    pub record: RunRecord,
    pub net: Mlp,
    pub loss_curve: Vec<f64>,
}

fn prepare(variant: Variant, s: &[DeformationSample]) -> Prepared {
    let fs: Vec<Mat3> = s.iter().map(|x| x.f).collect();
    let ps: Vec<Mat3> = s.iter().map(|x| x.p).collect();
    Prepared::new(variant, &fs, &ps)
}

/// Trains one model and keeps the checkpoint with the best validation error.
pub fn train_run(cfg: &TrainConfig, train_size: usize, run_seed: u64) -> Result<TrainedRun> {
    let start = Instant::now();
    let [train, val, test] = run_datasets(cfg, train_size, run_seed)?;
    let (train, val, test) = (prepare(cfg.variant, &train), prepare(cfg.variant, &val), prepare(cfg.variant, &test));
    let mut net = new_network(cfg.variant, &cfg.hidden, rng_seed(run_seed, STREAM_INIT));
    let mut opt = Adam::new(net.params.len(), cfg.lr, cfg.weight_decay);
    let steps = cfg.steps_for(train_size);
    let mut batch_rng = rng_for(run_seed, STREAM_BATCH);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut cursor = order.len();
    let mut best = (f64::INFINITY, net.clone());
    let mut curve = Vec::with_capacity(steps);
    for step in 0..steps {
        let rows = match cfg.batch_size {
            Some(b) if b < train.len() => {
                if cursor + b > order.len() {
                    order.shuffle(&mut batch_rng);
                    cursor = 0;
                }
                cursor += b;
                Some(&order[cursor - b..cursor])
            }
            _ => None,
        };
        let (loss, grads) = train.loss_and_grad(&net, rows)?;
        if !loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::TrainingDiverged { seed: run_seed, step });
        }
        curve.push(loss);
        if step % cfg.eval_every == 0 {
            let v = val.mse(&net)?;
            if v < best.0 {
                best = (v, net.clone());
            }
        }
        opt.step(&mut net.params, &grads, cosine_lr(step, steps, cfg.lr));
    }
    let v = val.mse(&net)?;
    if !v.is_finite() {
        return Err(Error::TrainingDiverged { seed: run_seed, step: steps });
    }
    if v < best.0 {
        best = (v, net);
    }
    let test_mse = test.mse(&best.1)?;
    Ok(TrainedRun {
        record: RunRecord {
            variant: cfg.variant,
            train_size,
            seed: run_seed,
            test_mse,
            val_mse: best.0,
            wall_seconds: start.elapsed().as_secs_f64(),
        },
        net: best.1,
        loss_curve: curve,
    })
}

fn rng_seed(seed: u64, stream: u64) -> u64 {
    use rand::RngCore;
    rng_for(seed, stream).next_u64()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub variant: Variant,
    pub train_size: usize,
    pub mse_mean: f64,
    pub mse_std: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub runs: Vec<RunRecord>,
    pub aggregate: Vec<Aggregate>,
}

impl Metrics {
    /// Sum of per-run training times, i.e. the single-core cost of the grid.
    pub fn total_run_seconds(&self) -> f64 {
        self.runs.iter().map(|r| r.wall_seconds).sum()
    }

    pub fn mean_at(&self, variant: Variant, train_size: usize) -> Option<f64> {
        self.aggregate.iter().find(|a| a.variant == variant && a.train_size == train_size).map(|a| a.mse_mean)
    }

    pub fn extend(&mut self, other: Metrics) {
        self.runs.extend(other.runs);
        self.aggregate.extend(other.aggregate);
    }

    pub fn write_runs_csv<W: Write>(&self, w: W) -> Result<()> {
        write_csv(&self.runs, w)
    }

    pub fn write_aggregate_csv<W: Write>(&self, w: W) -> Result<()> {
        write_csv(&self.aggregate, w)
    }

    /// Writes `runs.csv` and `aggregate.csv` into `dir`.
    pub fn write_csvs(&self, dir: &Path) -> Result<()> {
        let mut runs = Vec::new();
        self.write_runs_csv(&mut runs)?;
        crate::cli::write_atomic(&dir.join("runs.csv"), &runs)?;
        let mut agg = Vec::new();
        self.write_aggregate_csv(&mut agg)?;
        crate::cli::write_atomic(&dir.join("aggregate.csv"), &agg)
    }
}

fn write_csv<T: Serialize, W: Write>(rows: &[T], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    wr.flush()?;
    Ok(())
}

/// Mean and sample standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Trains every (train size, run) pair of the grid, in parallel across runs;
/// each run is itself single-threaded and deterministic.
pub fn run_experiment_with_models(cfg: &TrainConfig) -> Result<(Metrics, Vec<TrainedRun>)> {
    cfg.validate()?;
    let jobs: Vec<(usize, u64)> = cfg
        .train_sizes
        .iter()
        .flat_map(|&n| (0..cfg.runs as u64).map(move |k| (n, k)))
        .collect();
    let trained: Vec<TrainedRun> =
        jobs.par_iter().map(|&(n, k)| train_run(cfg, n, cfg.seed + k)).collect::<Result<_>>()?;
    let mut metrics = Metrics::default();
    for &n in &cfg.train_sizes {
        let mses: Vec<f64> = trained.iter().filter(|t| t.record.train_size == n).map(|t| t.record.test_mse).collect();
        let (mse_mean, mse_std) = mean_std(&mses);
        metrics.aggregate.push(Aggregate { variant: cfg.variant, train_size: n, mse_mean, mse_std });
    }
    metrics.runs = trained.iter().map(|t| t.record.clone()).collect();
    Ok((metrics, trained))
}

pub fn run_experiment(cfg: &TrainConfig) -> Result<Metrics> {
    Ok(run_experiment_with_models(cfg)?.0)
}
