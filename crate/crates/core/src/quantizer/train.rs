//! Recursive training: fit at fixed size, double, repeat until the target bitrate.

use std::io::Write;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dither::{sfvq_loss_grad, sfvq_loss_grad_per_sample, vq_loss_grad};
use super::{expand, init_norm_sorted, init_random, Codebook};
use crate::error::{Error, Result};
use crate::optim::{AdamState, LrSchedule};
use crate::vectors::VectorSet;

/// Codebook size at the first stage.
pub const INITIAL_CODEWORDS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    NormSorted,
    RandomNormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuantizerMode {
    /// Dithered segment assignment; the curve itself quantizes.
    Sfvq,
    /// Nearest-codeword baseline.
    Vq,
}

/// How interpolation factors are drawn for each batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaSampling {
    /// One λ per segment, shared by the whole batch.
    PerSegment,
    /// An independent λ vector for every sample.
    PerSample,
}

/// How the codebook reaches its target size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Growth {
    /// Start at four codewords and double after every stage.
    Recursive,
    /// Initialize all `2^target_bits` codewords at once and train a single stage.
    /// With `QuantizerMode::Vq` this is ordinary VQ, whose indices carry no arrangement.
    Direct,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub target_bits: u32,
    pub batch_size: usize,
    pub batches_per_stage: usize,
    pub base_lr: f64,
    /// Fractions of each stage after which the learning rate halves.
    pub halve_at: Vec<f64>,
    pub seed: u64,
    pub init_mode: InitMode,
    pub mode: QuantizerMode,
    pub init_sample_count: usize,
    pub lambda_sampling: LambdaSampling,
    pub growth: Growth,
    /// Emit a progress line every this many batches; 0 disables logging.
    pub log_interval: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            target_bits: 6,
            batch_size: 64,
            batches_per_stage: 100_000,
            base_lr: 1e-3,
            halve_at: vec![0.6, 0.8],
            seed: 0,
            init_mode: InitMode::NormSorted,
            mode: QuantizerMode::Sfvq,
            init_sample_count: 1000,
            lambda_sampling: LambdaSampling::PerSegment,
            growth: Growth::Recursive,
            log_interval: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(2..=12).contains(&self.target_bits) {
            return Err(Error::InvalidConfig(format!(
                "target bits {} outside [2, 12]",
                self.target_bits
            )));
        }
        if self.batch_size == 0 || self.batches_per_stage == 0 || self.init_sample_count == 0 {
            return Err(Error::InvalidConfig(
                "batch size, batches per stage and init sample count must be positive".into(),
            ));
        }
        self.schedule().map(|_| ())
    }

    pub fn schedule(&self) -> Result<LrSchedule> {
        LrSchedule::from_fractions(self.base_lr, self.batches_per_stage, &self.halve_at)
    }

    pub fn target_codewords(&self) -> usize {
        1 << self.target_bits
    }
}

/// Loss summary for one stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StageRecord {
    pub codewords: usize,
    /// Loss of the first batch of the stage.
    pub initial_loss: f64,
    /// Mean loss over the last tenth of the stage's batches.
    pub final_loss: f64,
    pub mean_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub codebook: Codebook,
    pub history: Vec<StageRecord>,
}

pub fn train(config: &TrainConfig, data: &VectorSet) -> Result<TrainOutcome> {
    train_inner(config, data, None)
}

/// Trains while writing `batch<TAB>loss<TAB>lr` lines to `log` every `log_interval` batches.
///
/// `batch` counts from zero across the whole run.
pub fn train_with_log(
    config: &TrainConfig,
    data: &VectorSet,
    log: &mut dyn Write,
) -> Result<TrainOutcome> {
    train_inner(config, data, Some(log))
}

fn train_inner(
    config: &TrainConfig,
    data: &VectorSet,
    mut log: Option<&mut dyn Write>,
) -> Result<TrainOutcome> {
    config.validate()?;
    let initial = match config.growth {
        Growth::Recursive => INITIAL_CODEWORDS,
        Growth::Direct => config.target_codewords(),
    };
    if data.count() < config.batch_size.max(initial) {
        return Err(Error::InsufficientData {
            needed: config.batch_size.max(initial),
            got: data.count(),
        });
    }
    let schedule = config.schedule()?;
    let dim = data.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let init_seed = rng.next_u64();
    let mut codebook = match config.init_mode {
        InitMode::NormSorted => init_norm_sorted(
            data,
            initial,
            config.init_sample_count.max(initial),
            init_seed,
        )?,
        InitMode::RandomNormal => init_random(initial, dim, init_seed)?,
    };

    let tail = (config.batches_per_stage / 10).max(1);
    let mut history = Vec::new();
    let mut global_batch = 0usize;
    let mut rows = vec![0usize; config.batch_size];
    let mut lambdas = Vec::new();
    loop {
        let n = codebook.len();
        let mut params = codebook.points().as_slice().to_vec();
        let mut adam = AdamState::new(params.len());
        let mut record = StageRecord {
            codewords: n,
            initial_loss: 0.0,
            final_loss: 0.0,
            mean_loss: 0.0,
        };
        for b in 0..config.batches_per_stage {
            for r in rows.iter_mut() {
                *r = rng.random_range(0..data.count());
            }
            let batch = data.select(&rows);
            let lg = match config.mode {
                QuantizerMode::Vq => vq_loss_grad(&batch, &codebook)?,
                QuantizerMode::Sfvq => {
                    let per = match config.lambda_sampling {
                        LambdaSampling::PerSegment => 1,
                        LambdaSampling::PerSample => config.batch_size,
                    };
                    lambdas.clear();
                    lambdas.extend((0..per * (n - 1)).map(|_| rng.random::<f64>()));
                    if per == 1 {
                        sfvq_loss_grad(&batch, &codebook, &lambdas)?
                    } else {
                        sfvq_loss_grad_per_sample(&batch, &codebook, &lambdas)?
                    }
                }
            };
            let lr = schedule.lr_at(b)?;
            adam.step(&mut params, lg.as_slice(), lr)?;
            codebook = Codebook::new(VectorSet::new(dim, params.clone())?)?;

            if b == 0 {
                record.initial_loss = lg.loss;
            }
            record.mean_loss += lg.loss;
            if b + tail >= config.batches_per_stage {
                record.final_loss += lg.loss;
            }
            if let Some(w) = log.as_deref_mut() {
                if config.log_interval > 0 && global_batch.is_multiple_of(config.log_interval) {
                    writeln!(w, "{global_batch}\t{}\t{lr}", lg.loss)?;
                }
            }
            global_batch += 1;
        }
        record.mean_loss /= config.batches_per_stage as f64;
        record.final_loss /= tail.min(config.batches_per_stage) as f64;
        history.push(record);
        if n >= config.target_codewords() {
            break;
        }
        codebook = expand(&codebook)?;
    }
    Ok(TrainOutcome { codebook, history })
}
