//! The full synthetic experiment: train the source network on rendered
//! pedal/no-pedal pairs, then evaluate the three detection methods on
//! passages played by a different instrument.

use crate::corpus::synthetic_passages;
use crate::error::Result;
use crate::nn::{train, Dataset, EpochRecord, Network, NetworkConfig, TrainConfig, TrainOutcome};
use crate::pipeline::{logo_cv, CvConfig, CvReport, Passage};
use crate::synth::{generate_paired_dataset, SynthConfig};

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub n_pairs: usize,
    pub source: SynthConfig,
    pub network: NetworkConfig,
    pub train: TrainConfig,
    pub n_passages: usize,
    pub passage_s: f64,
    pub target: SynthConfig,
    pub cv: CvConfig,
}

impl ExperimentConfig {
    pub fn new(seed: u64) -> Self {
        ExperimentConfig {
            n_pairs: 200,
            source: SynthConfig {
                seed,
                ..SynthConfig::default()
            },
            network: NetworkConfig::multi(),
            train: TrainConfig {
                batch_size: 16,
                max_epochs: 12,
                patience: 5,
                seed,
                ..TrainConfig::default()
            },
            n_passages: 10,
            passage_s: 10.0,
            target: SynthConfig::target_instrument(seed.wrapping_add(1)),
            cv: CvConfig {
                seed,
                ..CvConfig::default()
            },
        }
    }
}

pub fn source_dataset(n_pairs: usize, synth: &SynthConfig) -> Result<Dataset<f32>> {
    Dataset::from_mels(&generate_paired_dataset(n_pairs, synth)?)
}

pub fn train_source(cfg: &ExperimentConfig) -> Result<TrainOutcome<f32>> {
    train(&cfg.network, &cfg.train, &source_dataset(cfg.n_pairs, &cfg.source)?)
}

pub fn target_passages(cfg: &ExperimentConfig) -> Result<Vec<Passage>> {
    Ok(synthetic_passages(cfg.n_passages, cfg.passage_s, &cfg.target)?
        .into_iter()
        .map(|p| p.0)
        .collect())
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub network: Network<f32>,
    pub history: Vec<EpochRecord>,
    pub best: EpochRecord,
    pub cv: CvReport,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let outcome = train_source(cfg)?;
    let cv = logo_cv(&target_passages(cfg)?, &outcome.network, &cfg.cv)?;
    Ok(ExperimentResult {
        best: *outcome.best_record(),
        network: outcome.network,
        history: outcome.history,
        cv,
    })
}
