use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::layers::{
    binary_cross_entropy, global_avg_pool, global_avg_pool_backward, max_pool, max_pool_backward, pooled_dims,
    softmax, softmax_cross_entropy_grad, BatchNorm, BnCache, Conv2d, Dense, Param,
};
use super::real::Real;
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Index of the pedal class in the two softmax outputs.
pub const PEDAL_CLASS: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvBranch {
    pub channels: usize,
    /// (frequency, time)
    pub kernel: (usize, usize),
}

/// Architecture of a pedal convnet: a first layer of parallel conv
/// branches concatenated on channels, `layers - 1` trunk blocks, global
/// average pooling and a two-way softmax.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkConfig {
    /// (mel bands, frames)
    pub input: (usize, usize),
    pub first_layer: Vec<ConvBranch>,
    pub channels: usize,
    pub layers: usize,
    pub trunk_kernel: (usize, usize),
    pub pool: (usize, usize),
}

/// Default network input: 128 mel bands by 201 frames (2 s at 10 ms hop).
pub const DEFAULT_INPUT: (usize, usize) = (128, 201);

impl NetworkConfig {
    /// One first-layer kernel shape with `channels` channels throughout.
    pub fn single(channels: usize, kernel: (usize, usize), layers: usize) -> Self {
        NetworkConfig {
            input: DEFAULT_INPUT,
            first_layer: vec![ConvBranch { channels, kernel }],
            channels,
            layers,
            trunk_kernel: (3, 3),
            pool: (2, 2),
        }
    }

    /// `(3, 3)` first layer, 21 channels.
    pub fn baseline() -> Self {
        Self::single(21, (3, 3), 4)
    }

    /// Tall first-layer kernel `(m, 3)` for wider frequency context.
    pub fn frequency(m: usize) -> Self {
        Self::single(21, (m, 3), 4)
    }

    /// Wide first-layer kernel `(3, n)` for longer time context.
    pub fn time(n: usize) -> Self {
        Self::single(21, (3, n), 4)
    }

    /// First layer `(7,(45,3)) + (7,(3,10)) + (7,(3,3))`, four blocks.
    pub fn multi() -> Self {
        Self::multi_reduced(21, 4)
    }

    /// The multi-shape family with `channels` (split evenly over the three
    /// branches) and `layers` conv blocks.
    pub fn multi_reduced(channels: usize, layers: usize) -> Self {
        let per = channels / 3;
        NetworkConfig {
            input: DEFAULT_INPUT,
            first_layer: vec![
                ConvBranch { channels: per, kernel: (45, 3) },
                ConvBranch { channels: per, kernel: (3, 10) },
                ConvBranch { channels: channels - 2 * per, kernel: (3, 3) },
            ],
            channels,
            layers,
            trunk_kernel: (3, 3),
            pool: (2, 2),
        }
    }

    pub fn with_input(mut self, input: (usize, usize)) -> Self {
        self.input = input;
        self
    }

    /// Length of the concatenated transfer feature vector.
    pub fn feature_len(&self) -> usize {
        self.channels * self.layers
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Config(m));
        if self.layers == 0 {
            return err("network needs at least one conv layer".into());
        }
        if self.first_layer.is_empty() {
            return err("first layer needs at least one branch".into());
        }
        let total: usize = self.first_layer.iter().map(|b| b.channels).sum();
        if total != self.channels {
            return err(format!(
                "first-layer branches sum to {total} channels, expected {}",
                self.channels
            ));
        }
        let (mut h, mut w) = self.input;
        if h == 0 || w == 0 {
            return err("input dims must be >= 1".into());
        }
        for (i, b) in self.first_layer.iter().enumerate() {
            if b.channels == 0 || b.kernel.0 == 0 || b.kernel.1 == 0 || b.kernel.0 > h || b.kernel.1 > w {
                return err(format!("first-layer branch {i} {:?} does not fit {h}x{w}", b));
            }
        }
        for layer in 0..self.layers {
            if layer > 0 && (self.trunk_kernel.0 > h || self.trunk_kernel.1 > w || self.trunk_kernel.0 == 0 || self.trunk_kernel.1 == 0) {
                return err(format!("trunk kernel {:?} does not fit {h}x{w} at layer {}", self.trunk_kernel, layer + 1));
            }
            let (nh, nw) = pooled_dims(h, w, self.pool)
                .map_err(|_| Error::Config(format!("pool {:?} does not fit {h}x{w} at layer {}", self.pool, layer + 1)))?;
            h = nh;
            w = nw;
        }
        Ok(())
    }
}

fn fmt_pair(p: (usize, usize)) -> String {
    format!("{}x{}", p.0, p.1)
}

fn parse_pair(s: &str) -> Result<(usize, usize)> {
    let (a, b) = s
        .split_once('x')
        .ok_or_else(|| Error::Parse(format!("expected AxB, got {s:?}")))?;
    let p = |v: &str| v.trim().parse::<usize>().map_err(|_| Error::Parse(format!("bad number in {s:?}")));
    Ok((p(a)?, p(b)?))
}

impl fmt::Display for NetworkConfig {
    /// Line-oriented `key=value` text, the form stored in checkpoints.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let branches: Vec<String> = self
            .first_layer
            .iter()
            .map(|b| format!("{}:{}", b.channels, fmt_pair(b.kernel)))
            .collect();
        writeln!(f, "input={}", fmt_pair(self.input))?;
        writeln!(f, "first_layer={}", branches.join(","))?;
        writeln!(f, "channels={}", self.channels)?;
        writeln!(f, "layers={}", self.layers)?;
        writeln!(f, "trunk_kernel={}", fmt_pair(self.trunk_kernel))?;
        writeln!(f, "pool={}", fmt_pair(self.pool))
    }
}

impl FromStr for NetworkConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut input = None;
        let mut first_layer = None;
        let mut channels = None;
        let mut layers = None;
        let mut trunk_kernel = None;
        let mut pool = None;
        for line in s.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {line:?}")))?;
            let num = |v: &str| v.parse::<usize>().map_err(|_| Error::Parse(format!("bad {k}: {v:?}")));
            match k {
                "input" => input = Some(parse_pair(v)?),
                "first_layer" => {
                    let branches = v
                        .split(',')
                        .map(|b| {
                            let (c, kernel) = b
                                .split_once(':')
                                .ok_or_else(|| Error::Parse(format!("bad branch {b:?}")))?;
                            Ok(ConvBranch {
                                channels: num(c)?,
                                kernel: parse_pair(kernel)?,
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    first_layer = Some(branches);
                }
                "channels" => channels = Some(num(v)?),
                "layers" => layers = Some(num(v)?),
                "trunk_kernel" => trunk_kernel = Some(parse_pair(v)?),
                "pool" => pool = Some(parse_pair(v)?),
                other => return Err(Error::Parse(format!("unknown network key {other:?}"))),
            }
        }
        let missing = |k: &str| Error::Parse(format!("network config missing {k}"));
        let cfg = NetworkConfig {
            input: input.ok_or_else(|| missing("input"))?,
            first_layer: first_layer.ok_or_else(|| missing("first_layer"))?,
            channels: channels.ok_or_else(|| missing("channels"))?,
            layers: layers.ok_or_else(|| missing("layers"))?,
            trunk_kernel: trunk_kernel.ok_or_else(|| missing("trunk_kernel"))?,
            pool: pool.ok_or_else(|| missing("pool"))?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Conv layer(s) + batch norm + ReLU + max pool.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Block<T> {
    pub convs: Vec<Conv2d<T>>,
    pub bn: BatchNorm<T>,
    pub pool: (usize, usize),
}

struct BlockCache<T> {
    input: Tensor<T>,
    bn: BnCache<T>,
    pre_activation: Tensor<T>,
    argmax: Vec<u32>,
}

impl<T: Real> Block<T> {
    fn conv_forward(&self, x: &Tensor<T>, index: usize) -> Result<Tensor<T>> {
        let name = format!("conv block {}", index + 1);
        let out_c: usize = self.convs.iter().map(|c| c.out_channels).sum();
        let mut out = Tensor::zeros([x.batch(), out_c, x.height(), x.width()]);
        let mut offset = 0;
        for conv in &self.convs {
            conv.check_input(x, &name)?;
            conv.forward_into(x, &mut out, offset);
            offset += conv.out_channels;
        }
        Ok(out)
    }

    fn forward_train(&mut self, x: Tensor<T>, index: usize) -> Result<(Tensor<T>, BlockCache<T>)> {
        let conv_out = self.conv_forward(&x, index)?;
        let (pre, bn_cache) = self.bn.forward_train(&conv_out)?;
        let mut act = pre.clone();
        super::layers::relu_in_place(&mut act);
        let (pooled, argmax) = max_pool(&act, self.pool)?;
        Ok((
            pooled,
            BlockCache {
                input: x,
                bn: bn_cache,
                pre_activation: pre,
                argmax,
            },
        ))
    }

    fn forward_infer(&self, x: &Tensor<T>, index: usize) -> Result<Tensor<T>> {
        let mut y = self.conv_forward(x, index)?;
        self.bn.apply_infer_in_place(&mut y);
        super::layers::relu_in_place(&mut y);
        Ok(max_pool(&y, self.pool)?.0)
    }

    fn backward(&mut self, dpooled: &Tensor<T>, cache: BlockCache<T>, need_dx: bool) -> Option<Tensor<T>> {
        let mut dact = max_pool_backward(dpooled, &cache.argmax, cache.pre_activation.shape());
        super::layers::relu_backward_in_place(&mut dact, &cache.pre_activation);
        let dconv = self.bn.backward(&dact, &cache.bn);
        let mut dx = need_dx.then(|| Tensor::zeros(cache.input.shape()));
        let mut offset = 0;
        for conv in &mut self.convs {
            conv.backward_from(&cache.input, &dconv, offset, dx.as_mut());
            offset += conv.out_channels;
        }
        dx
    }
}

/// Result of an inference pass over a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct Inference<T> {
    /// `[n, 2]` dense outputs before the softmax.
    pub logits: Vec<T>,
    /// `[n, 2]` softmax outputs.
    pub probs: Vec<T>,
    /// `[n, channels * layers]` average-pooled block activations.
    pub taps: Vec<T>,
}

/// Cached state of a training-mode forward pass.
pub struct TrainPass<T> {
    caches: Vec<BlockCache<T>>,
    last_shape: [usize; 4],
    pooled: Vec<T>,
    pub probs: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    config: NetworkConfig,
    pub(crate) blocks: Vec<Block<T>>,
    pub(crate) dense: Dense<T>,
}

impl<T: Real> Network<T> {
    /// Randomly initialised network.
    pub fn new(config: NetworkConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut blocks = Vec::with_capacity(config.layers);
        for layer in 0..config.layers {
            let convs = if layer == 0 {
                config
                    .first_layer
                    .iter()
                    .map(|b| Conv2d::new(1, b.channels, b.kernel, &mut rng))
                    .collect()
            } else {
                vec![Conv2d::new(config.channels, config.channels, config.trunk_kernel, &mut rng)]
            };
            blocks.push(Block {
                convs,
                bn: BatchNorm::new(config.channels),
                pool: config.pool,
            });
        }
        let dense = Dense::new(config.channels, 2, &mut rng);
        Ok(Network { config, blocks, dense })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn feature_len(&self) -> usize {
        self.config.feature_len()
    }

    pub fn dense(&self) -> &Dense<T> {
        &self.dense
    }

    pub(crate) fn dense_mut(&mut self) -> &mut Dense<T> {
        &mut self.dense
    }

    pub fn batch_norm(&self, layer: usize) -> &BatchNorm<T> {
        &self.blocks[layer].bn
    }

    pub fn batch_norm_mut(&mut self, layer: usize) -> &mut BatchNorm<T> {
        &mut self.blocks[layer].bn
    }

    pub fn convs(&self, layer: usize) -> &[Conv2d<T>] {
        &self.blocks[layer].convs
    }

    pub fn convs_mut(&mut self, layer: usize) -> &mut [Conv2d<T>] {
        &mut self.blocks[layer].convs
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<()> {
        if x.channels() != 1 || (x.height(), x.width()) != self.config.input {
            return Err(Error::shape(
                "network input",
                format!(
                    "expected [n, 1, {}, {}], got {:?}",
                    self.config.input.0,
                    self.config.input.1,
                    x.shape()
                ),
            ));
        }
        Ok(())
    }

    /// Trainable parameters in checkpoint order: per block each conv's
    /// weight and bias, then gamma and beta; then dense weight and bias.
    pub fn params(&self) -> Vec<&Param<T>> {
        let mut out = Vec::new();
        for b in &self.blocks {
            for c in &b.convs {
                out.push(&c.weight);
                out.push(&c.bias);
            }
            out.push(&b.bn.gamma);
            out.push(&b.bn.beta);
        }
        out.push(&self.dense.weight);
        out.push(&self.dense.bias);
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        let mut out = Vec::new();
        for b in &mut self.blocks {
            for c in &mut b.convs {
                out.push(&mut c.weight);
                out.push(&mut c.bias);
            }
            out.push(&mut b.bn.gamma);
            out.push(&mut b.bn.beta);
        }
        out.push(&mut self.dense.weight);
        out.push(&mut self.dense.bias);
        out
    }

    pub fn zero_grad(&mut self) {
        self.params_mut().into_iter().for_each(Param::zero_grad);
    }

    /// Training-mode forward (batch statistics, running stats updated).
    pub fn forward_train(&mut self, x: &Tensor<T>) -> Result<TrainPass<T>> {
        self.check_input(x)?;
        let mut caches = Vec::with_capacity(self.blocks.len());
        let mut h = x.clone();
        for (i, block) in self.blocks.iter_mut().enumerate() {
            let (out, cache) = block.forward_train(h, i)?;
            caches.push(cache);
            h = out;
        }
        let pooled = global_avg_pool(&h);
        let logits = self.dense.forward(&pooled)?;
        Ok(TrainPass {
            caches,
            last_shape: h.shape(),
            pooled,
            probs: softmax(&logits, 2),
        })
    }

    /// Backpropagates the mean cross-entropy of `pass` against `labels`,
    /// accumulating into every parameter gradient. Returns the loss.
    pub fn backward(&mut self, pass: TrainPass<T>, labels: &[usize]) -> Result<T> {
        let n = pass.probs.len() / 2;
        if labels.len() != n {
            return Err(Error::invalid(format!("{} labels for a batch of {n}", labels.len())));
        }
        let loss = binary_cross_entropy(&pass.probs, labels);
        let dlogits = softmax_cross_entropy_grad(&pass.probs, labels);
        let dpooled = self.dense.backward(&pass.pooled, &dlogits);
        let mut grad = global_avg_pool_backward(&dpooled, pass.last_shape);
        for (i, (block, cache)) in self.blocks.iter_mut().zip(pass.caches).enumerate().rev() {
            match block.backward(&grad, cache, i > 0) {
                Some(dx) => grad = dx,
                None => break,
            }
        }
        Ok(loss)
    }

    /// Zeroes gradients, runs forward and backward; returns the loss.
    pub fn compute_gradients(&mut self, x: &Tensor<T>, labels: &[usize]) -> Result<T> {
        self.zero_grad();
        let pass = self.forward_train(x)?;
        self.backward(pass, labels)
    }

    /// Inference with running batch-norm statistics; also returns the
    /// per-block average-pooled activations.
    pub fn infer(&self, x: &Tensor<T>) -> Result<Inference<T>> {
        self.check_input(x)?;
        let n = x.batch();
        let c = self.config.channels;
        let l = self.blocks.len();
        let mut taps = vec![T::zero(); n * c * l];
        let mut h = x.clone();
        for (i, block) in self.blocks.iter().enumerate() {
            h = block.forward_infer(&h, i)?;
            let g = global_avg_pool(&h);
            for s in 0..n {
                taps[s * c * l + i * c..s * c * l + (i + 1) * c].copy_from_slice(&g[s * c..(s + 1) * c]);
            }
        }
        let pooled = global_avg_pool(&h);
        let logits = self.dense.forward(&pooled)?;
        let probs = softmax(&logits, 2);
        Ok(Inference { logits, probs, taps })
    }

    /// Pedal-class probability per sample.
    pub fn predict_pedal(&self, x: &Tensor<T>) -> Result<Vec<T>> {
        let inf = self.infer(x)?;
        Ok(inf.probs.chunks(2).map(|p| p[PEDAL_CLASS]).collect())
    }

    /// Pedal logit minus no-pedal logit per sample. Ranks like the pedal
    /// probability but does not saturate.
    pub fn predict_margin(&self, x: &Tensor<T>) -> Result<Vec<T>> {
        let inf = self.infer(x)?;
        Ok(inf.logits.chunks(2).map(|z| z[PEDAL_CLASS] - z[1 - PEDAL_CLASS]).collect())
    }

    /// Softmax outputs of the dense head applied to pooled features
    /// (the last block's tap), bypassing the conv stack.
    pub fn head_probs(&self, pooled: &[T]) -> Result<Vec<T>> {
        Ok(softmax(&self.dense.forward(pooled)?, 2))
    }
}
