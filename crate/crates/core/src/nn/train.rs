//! Source-task training loop, head retraining and evaluation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::layers::softmax_cross_entropy_grad;
use super::network::{Network, NetworkConfig, PEDAL_CLASS};
use super::optim::{Adam, AdamConfig};
use super::real::Real;
use super::tensor::Tensor;
use crate::dsp::MelSpectrogram;
use crate::error::{Error, Result};
use crate::metrics::auc_roc;

/// Scales max-referenced dB values (floor -80) into roughly `[-1, 1]`.
pub fn mel_to_input<T: Real>(mel: &MelSpectrogram) -> Vec<T> {
    mel.values.data.iter().map(|&v| T::lit(v / 40.0 + 1.0)).collect()
}

/// Labelled single-channel inputs, all `input.0 x input.1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub input: (usize, usize),
    pub samples: Vec<Vec<T>>,
    /// 1 = pedal, 0 = no pedal
    pub labels: Vec<usize>,
}

impl<T: Real> Dataset<T> {
    pub fn new(input: (usize, usize), samples: Vec<Vec<T>>, labels: Vec<usize>) -> Result<Self> {
        if samples.len() != labels.len() {
            return Err(Error::invalid("samples and labels differ in length"));
        }
        if let Some(i) = samples.iter().position(|s| s.len() != input.0 * input.1) {
            return Err(Error::invalid(format!("sample {i} does not match input {input:?}")));
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::invalid("labels must be 0 or 1"));
        }
        Ok(Dataset { input, samples, labels })
    }

    pub fn from_mels(items: &[(MelSpectrogram, bool)]) -> Result<Self> {
        let input = items
            .first()
            .map(|(m, _)| m.shape())
            .ok_or_else(|| Error::invalid("empty dataset"))?;
        Self::new(
            input,
            items.iter().map(|(m, _)| mel_to_input(m)).collect(),
            items.iter().map(|&(_, l)| l as usize).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn has_both_classes(&self) -> bool {
        self.labels.contains(&0) && self.labels.contains(&1)
    }

    pub fn batch(&self, indices: &[usize]) -> Result<Tensor<T>> {
        let planes: Vec<&[T]> = indices.iter().map(|&i| self.samples[i].as_slice()).collect();
        Tensor::from_planes(&planes, self.input.0, self.input.1)
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset<T> {
        Dataset {
            input: self.input,
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    /// Epochs without validation-accuracy improvement before stopping.
    pub patience: usize,
    pub max_epochs: usize,
    pub adam: AdamConfig,
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 128,
            patience: 10,
            max_epochs: 200,
            adam: AdamConfig::default(),
            val_fraction: 0.2,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.patience == 0 || self.max_epochs == 0 {
            return Err(Error::Config("batch_size, patience and max_epochs must be >= 1".into()));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(Error::Config("val_fraction must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_acc: f64,
    pub val_auc: f64,
}

pub const HISTORY_HEADER: &str = "epoch,train_loss,val_acc,val_auc";

pub fn history_to_csv(history: &[EpochRecord]) -> String {
    let mut out = String::from(HISTORY_HEADER);
    out.push('\n');
    for r in history {
        out.push_str(&format!("{},{},{},{}\n", r.epoch, r.train_loss, r.val_acc, r.val_auc));
    }
    out
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    /// Checkpoint from the epoch with the best validation accuracy.
    pub network: Network<T>,
    pub history: Vec<EpochRecord>,
    /// 1-based epoch of the returned checkpoint.
    pub best_epoch: usize,
    /// 1-based epoch with the highest validation AUC (reported only).
    pub best_auc_epoch: usize,
}

impl<T> TrainOutcome<T> {
    pub fn best_record(&self) -> &EpochRecord {
        &self.history[self.best_epoch - 1]
    }
}

/// Seeded stratified split; returns (train, validation) indices.
pub fn stratified_split(labels: &[usize], val_fraction: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut val = Vec::new();
    for class in [0, 1] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(rng);
        let mut n_val = (idx.len() as f64 * val_fraction).round() as usize;
        if idx.len() >= 2 {
            n_val = n_val.clamp(1, idx.len() - 1);
        } else {
            n_val = 0;
        }
        val.extend_from_slice(&idx[..n_val]);
        train.extend_from_slice(&idx[n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

fn accuracy(pedal_probs: &[f64], labels: &[usize]) -> f64 {
    let correct = pedal_probs
        .iter()
        .zip(labels)
        .filter(|(&p, &l)| (p >= 0.5) == (l == 1))
        .count();
    correct as f64 / labels.len().max(1) as f64
}

/// AUC that degrades to 0.5 when only one class is present.
fn auc_or_half(scores: &[f64], labels: &[usize]) -> f64 {
    let truth: Vec<bool> = labels.iter().map(|&l| l == 1).collect();
    auc_roc(scores, &truth).unwrap_or(0.5)
}

const EVAL_CHUNK: usize = 32;

/// Pedal probabilities and logit margins, in inference mode.
fn scores<T: Real>(network: &Network<T>, data: &Dataset<T>) -> Result<(Vec<f64>, Vec<f64>)> {
    let idx: Vec<usize> = (0..data.len()).collect();
    let (mut probs, mut margins) = (Vec::with_capacity(data.len()), Vec::with_capacity(data.len()));
    for chunk in idx.chunks(EVAL_CHUNK) {
        let inf = network.infer(&data.batch(chunk)?)?;
        probs.extend(inf.probs.chunks(2).map(|p| p[PEDAL_CLASS].as_f64()));
        margins.extend(inf.logits.chunks(2).map(|z| (z[PEDAL_CLASS] - z[1 - PEDAL_CLASS]).as_f64()));
    }
    Ok((probs, margins))
}

/// Pedal-class probabilities for every sample, in inference mode.
pub fn predict_dataset<T: Real>(network: &Network<T>, data: &Dataset<T>) -> Result<Vec<f64>> {
    Ok(scores(network, data)?.0)
}

/// Accuracy at a 0.5 threshold on the pedal probability, and ROC AUC.
/// The AUC ranks logit margins so saturated probabilities do not tie.
pub fn evaluate<T: Real>(network: &Network<T>, data: &Dataset<T>) -> Result<(f64, f64)> {
    let (probs, margins) = scores(network, data)?;
    Ok((accuracy(&probs, &data.labels), auc_or_half(&margins, &data.labels)))
}

/// Trains a fresh network with early stopping on validation accuracy.
pub fn train<T: Real>(config: &NetworkConfig, tcfg: &TrainConfig, data: &Dataset<T>) -> Result<TrainOutcome<T>> {
    tcfg.validate()?;
    if !data.has_both_classes() {
        return Err(Error::SingleClass);
    }
    if data.input != config.input {
        return Err(Error::shape(
            "network input",
            format!("dataset is {:?}, network expects {:?}", data.input, config.input),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(tcfg.seed);
    let (mut train_idx, val_idx) = stratified_split(&data.labels, tcfg.val_fraction, &mut rng);
    let val = data.subset(&val_idx);

    let mut net = Network::new(config.clone(), tcfg.seed)?;
    let mut adam = Adam::new(tcfg.adam);
    let mut history = Vec::new();
    let mut best: Option<(f64, usize, Network<T>)> = None;
    let mut best_auc = (f64::NEG_INFINITY, 0);

    for epoch in 1..=tcfg.max_epochs {
        train_idx.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in train_idx.chunks(tcfg.batch_size) {
            // batch norm needs at least two values per channel
            if batch.len() < 2 && train_idx.len() >= 2 {
                continue;
            }
            let x = data.batch(batch)?;
            let labels: Vec<usize> = batch.iter().map(|&i| data.labels[i]).collect();
            let loss = net.compute_gradients(&x, &labels)?;
            adam.step(&mut net.params_mut());
            loss_sum += loss.as_f64() * batch.len() as f64;
        }
        let (val_acc, val_auc) = evaluate(&net, &val)?;
        history.push(EpochRecord {
            epoch,
            train_loss: loss_sum / train_idx.len() as f64,
            val_acc,
            val_auc,
        });
        if val_auc > best_auc.0 {
            best_auc = (val_auc, epoch);
        }
        match &best {
            Some((acc, _, _)) if val_acc <= *acc => {}
            _ => best = Some((val_acc, epoch, net.clone())),
        }
        let best_epoch = best.as_ref().map_or(epoch, |b| b.1);
        if epoch - best_epoch >= tcfg.patience {
            break;
        }
    }
    let (_, best_epoch, network) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        network,
        history,
        best_epoch,
        best_auc_epoch: best_auc.1,
    })
}

/// Pooled head inputs (the last block's average-pooled activations).
pub fn pooled_features<T: Real>(network: &Network<T>, data: &Dataset<T>) -> Result<Vec<Vec<T>>> {
    let c = network.config().channels;
    let fl = network.feature_len();
    let idx: Vec<usize> = (0..data.len()).collect();
    let mut out = Vec::with_capacity(data.len());
    for chunk in idx.chunks(EVAL_CHUNK) {
        let inf = network.infer(&data.batch(chunk)?)?;
        for s in 0..chunk.len() {
            out.push(inf.taps[s * fl + fl - c..(s + 1) * fl].to_vec());
        }
    }
    Ok(out)
}

/// Retrains only the dense head on the given data; every conv and
/// batch-norm parameter (including running statistics) stays frozen.
pub fn retrain_head<T: Real>(network: &Network<T>, data: &Dataset<T>, tcfg: &TrainConfig) -> Result<Network<T>> {
    let pooled = pooled_features(network, data)?;
    retrain_head_on_pooled(network, &pooled, &data.labels, tcfg)
}

/// [`retrain_head`] on precomputed pooled vectors.
pub fn retrain_head_on_pooled<T: Real>(
    network: &Network<T>,
    pooled: &[Vec<T>],
    labels: &[usize],
    tcfg: &TrainConfig,
) -> Result<Network<T>> {
    tcfg.validate()?;
    if pooled.len() != labels.len() {
        return Err(Error::invalid("pooled features and labels differ in length"));
    }
    if !(labels.contains(&0) && labels.contains(&1)) {
        return Err(Error::SingleClass);
    }
    let c = network.config().channels;
    if let Some(i) = pooled.iter().position(|p| p.len() != c) {
        return Err(Error::shape("dense", format!("pooled row {i} has length {}, expected {c}", pooled[i].len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(tcfg.seed);
    let (mut train_idx, val_idx) = stratified_split(labels, tcfg.val_fraction, &mut rng);
    let gather = |idx: &[usize]| -> Vec<T> { idx.iter().flat_map(|&i| pooled[i].iter().copied()).collect() };
    let val_x = gather(&val_idx);
    let val_labels: Vec<usize> = val_idx.iter().map(|&i| labels[i]).collect();
    let val_acc_of = |net: &Network<T>| -> Result<f64> {
        let probs: Vec<f64> = net.head_probs(&val_x)?.chunks(2).map(|p| p[PEDAL_CLASS].as_f64()).collect();
        Ok(accuracy(&probs, &val_labels))
    };

    let mut net = network.clone();
    let mut adam = Adam::new(tcfg.adam);
    let mut best: Option<(f64, usize, Network<T>)> = None;
    for epoch in 1..=tcfg.max_epochs {
        train_idx.shuffle(&mut rng);
        for batch in train_idx.chunks(tcfg.batch_size) {
            let x = gather(batch);
            let y: Vec<usize> = batch.iter().map(|&i| labels[i]).collect();
            let dense = net.dense_mut();
            dense.weight.zero_grad();
            dense.bias.zero_grad();
            let probs = super::layers::softmax(&dense.forward(&x)?, 2);
            let dlogits = softmax_cross_entropy_grad(&probs, &y);
            dense.backward(&x, &dlogits);
            adam.step(&mut [&mut dense.weight, &mut dense.bias]);
        }
        let acc = val_acc_of(&net)?;
        match &best {
            Some((b, _, _)) if acc <= *b => {}
            _ => best = Some((acc, epoch, net.clone())),
        }
        if epoch - best.as_ref().map_or(epoch, |b| b.1) >= tcfg.patience {
            break;
        }
    }
    Ok(best.expect("at least one epoch ran").2)
}
