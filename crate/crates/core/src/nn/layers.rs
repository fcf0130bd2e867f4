//! Layer kernels: same-padded convolution, batch normalisation, ReLU,
//! max pooling, global average pooling and the softmax head.
//!
//! Forward functions return whatever the matching backward function needs;
//! parameter gradients are accumulated into [`Param::grad`].

use rand::Rng;

use super::real::{matmul, Mat, Real};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Probability floor applied before taking logs in the loss.
pub const PROB_CLAMP: f64 = 1e-7;
pub const BN_MOMENTUM: f64 = 0.99;
pub const BN_EPSILON: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct Param<T> {
    pub value: Vec<T>,
    pub grad: Vec<T>,
}

impl<T: Real> Param<T> {
    pub fn new(value: Vec<T>) -> Self {
        let grad = vec![T::zero(); value.len()];
        Param { value, grad }
    }

    pub fn zero_grad(&mut self) {
        self.grad.iter_mut().for_each(|g| *g = T::zero());
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }
}

/// Leading zero padding for a same-padded kernel of length `k`.
#[inline]
fn pad_before(k: usize) -> isize {
    ((k - 1) / 2) as isize
}

/// Column range `[lo, hi)` of outputs whose shifted source `x + shift` is in
/// `0..len`.
#[inline]
fn valid_range(len: usize, shift: isize) -> (usize, usize) {
    let lo = (-shift).clamp(0, len as isize) as usize;
    let hi = (len as isize - shift).clamp(lo as isize, len as isize) as usize;
    (lo, hi)
}

/// Unfolds one sample `[c, h, w]` into `[c*kh*kw, h*w]` patch columns.
fn im2col<T: Real>(x: &[T], c: usize, h: usize, w: usize, kh: usize, kw: usize, col: &mut [T]) {
    let hw = h * w;
    let (pt, pl) = (pad_before(kh), pad_before(kw));
    for ci in 0..c {
        let plane = &x[ci * hw..(ci + 1) * hw];
        for i in 0..kh {
            let dy = i as isize - pt;
            for j in 0..kw {
                let dx = j as isize - pl;
                let row = &mut col[((ci * kh + i) * kw + j) * hw..][..hw];
                let (xlo, xhi) = valid_range(w, dx);
                for y in 0..h {
                    let yy = y as isize + dy;
                    let dst = &mut row[y * w..(y + 1) * w];
                    if yy < 0 || yy >= h as isize {
                        dst.fill(T::zero());
                        continue;
                    }
                    let src = &plane[yy as usize * w..(yy as usize + 1) * w];
                    dst[..xlo].fill(T::zero());
                    dst[xhi..].fill(T::zero());
                    let s0 = (xlo as isize + dx) as usize;
                    dst[xlo..xhi].copy_from_slice(&src[s0..s0 + (xhi - xlo)]);
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: accumulates patch columns back into `dx`.
fn col2im<T: Real>(col: &[T], c: usize, h: usize, w: usize, kh: usize, kw: usize, dx_out: &mut [T]) {
    let hw = h * w;
    let (pt, pl) = (pad_before(kh), pad_before(kw));
    for ci in 0..c {
        let plane = &mut dx_out[ci * hw..(ci + 1) * hw];
        for i in 0..kh {
            let dy = i as isize - pt;
            for j in 0..kw {
                let dx = j as isize - pl;
                let row = &col[((ci * kh + i) * kw + j) * hw..][..hw];
                let (xlo, xhi) = valid_range(w, dx);
                for y in 0..h {
                    let yy = y as isize + dy;
                    if yy < 0 || yy >= h as isize {
                        continue;
                    }
                    let dst = &mut plane[yy as usize * w..(yy as usize + 1) * w];
                    let s0 = (xlo as isize + dx) as usize;
                    for (d, &v) in dst[s0..s0 + (xhi - xlo)].iter_mut().zip(&row[y * w + xlo..y * w + xhi]) {
                        *d += v;
                    }
                }
            }
        }
    }
}

/// Same-padded 2-D cross-correlation layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d<T> {
    pub in_channels: usize,
    pub out_channels: usize,
    /// (frequency, time)
    pub kernel: (usize, usize),
    /// `[out, in, kh, kw]`
    pub weight: Param<T>,
    pub bias: Param<T>,
}

impl<T: Real> Conv2d<T> {
    /// He-uniform weights, zero bias.
    pub fn new(in_channels: usize, out_channels: usize, kernel: (usize, usize), rng: &mut impl Rng) -> Self {
        let fan_in = in_channels * kernel.0 * kernel.1;
        let limit = (6.0 / fan_in as f64).sqrt();
        let weight = (0..out_channels * fan_in)
            .map(|_| T::lit(rng.gen_range(-limit..limit)))
            .collect();
        Conv2d {
            in_channels,
            out_channels,
            kernel,
            weight: Param::new(weight),
            bias: Param::new(vec![T::zero(); out_channels]),
        }
    }

    pub fn from_parts(kernel: (usize, usize), in_channels: usize, weight: Vec<T>, bias: Vec<T>) -> Result<Self> {
        let out_channels = bias.len();
        if weight.len() != out_channels * in_channels * kernel.0 * kernel.1 || kernel.0 == 0 || kernel.1 == 0 {
            return Err(Error::shape("conv2d", "kernel buffer does not match declared shape"));
        }
        Ok(Conv2d {
            in_channels,
            out_channels,
            kernel,
            weight: Param::new(weight),
            bias: Param::new(bias),
        })
    }

    fn fan_in(&self) -> usize {
        self.in_channels * self.kernel.0 * self.kernel.1
    }

    pub fn check_input(&self, x: &Tensor<T>, layer: &str) -> Result<()> {
        if x.channels() != self.in_channels {
            return Err(Error::shape(
                layer,
                format!("expected {} input channels, got {}", self.in_channels, x.channels()),
            ));
        }
        if self.kernel.0 > x.height() || self.kernel.1 > x.width() {
            return Err(Error::shape(
                layer,
                format!(
                    "kernel {:?} larger than input {}x{}",
                    self.kernel,
                    x.height(),
                    x.width()
                ),
            ));
        }
        Ok(())
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.check_input(x, "conv2d")?;
        let mut out = Tensor::zeros([x.batch(), self.out_channels, x.height(), x.width()]);
        self.forward_into(x, &mut out, 0);
        Ok(out)
    }

    /// Writes this layer's output channels into `out` starting at
    /// `channel_offset`.
    pub(crate) fn forward_into(&self, x: &Tensor<T>, out: &mut Tensor<T>, channel_offset: usize) {
        let (h, w) = (x.height(), x.width());
        let hw = h * w;
        let k = self.fan_in();
        let mut col = vec![T::zero(); k * hw];
        for n in 0..x.batch() {
            im2col(x.sample(n), self.in_channels, h, w, self.kernel.0, self.kernel.1, &mut col);
            let start = (n * out.channels() + channel_offset) * hw;
            let dst = &mut out.data_mut()[start..start + self.out_channels * hw];
            matmul(
                Mat::new(&self.weight.value, self.out_channels, k),
                Mat::new(&col, k, hw),
                dst,
                false,
            );
            for (oc, &b) in self.bias.value.iter().enumerate() {
                dst[oc * hw..(oc + 1) * hw].iter_mut().for_each(|v| *v += b);
            }
        }
    }

    /// Accumulates weight/bias gradients from `dy`, whose channels
    /// `channel_offset..channel_offset+out_channels` belong to this layer.
    /// Adds the input gradient into `dx` when given.
    pub(crate) fn backward_from(
        &mut self,
        x: &Tensor<T>,
        dy: &Tensor<T>,
        channel_offset: usize,
        mut dx: Option<&mut Tensor<T>>,
    ) {
        let (h, w) = (x.height(), x.width());
        let hw = h * w;
        let k = self.fan_in();
        let mut col = vec![T::zero(); k * hw];
        let mut dcol = vec![T::zero(); k * hw];
        for n in 0..x.batch() {
            let start = (n * dy.channels() + channel_offset) * hw;
            let g = &dy.data()[start..start + self.out_channels * hw];
            im2col(x.sample(n), self.in_channels, h, w, self.kernel.0, self.kernel.1, &mut col);
            matmul(
                Mat::new(g, self.out_channels, hw),
                Mat::new(&col, k, hw).t(),
                &mut self.weight.grad,
                true,
            );
            for (oc, db) in self.bias.grad.iter_mut().enumerate() {
                *db += g[oc * hw..(oc + 1) * hw].iter().copied().sum::<T>();
            }
            if let Some(dx) = dx.as_deref_mut() {
                matmul(
                    Mat::new(&self.weight.value, self.out_channels, k).t(),
                    Mat::new(g, self.out_channels, hw),
                    &mut dcol,
                    false,
                );
                col2im(&dcol, self.in_channels, h, w, self.kernel.0, self.kernel.1, dx.sample_mut(n));
            }
        }
    }

    pub fn backward(&mut self, x: &Tensor<T>, dy: &Tensor<T>) -> Tensor<T> {
        let mut dx = Tensor::zeros(x.shape());
        self.backward_from(x, dy, 0, Some(&mut dx));
        dx
    }
}

/// Per-channel batch normalisation.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm<T> {
    pub gamma: Param<T>,
    pub beta: Param<T>,
    pub running_mean: Vec<T>,
    pub running_var: Vec<T>,
}

/// Values cached by a training-mode forward pass.
#[derive(Debug, Clone)]
pub struct BnCache<T> {
    pub xhat: Tensor<T>,
    pub inv_std: Vec<T>,
}

impl<T: Real> BatchNorm<T> {
    pub fn new(channels: usize) -> Self {
        BatchNorm {
            gamma: Param::new(vec![T::one(); channels]),
            beta: Param::new(vec![T::zero(); channels]),
            running_mean: vec![T::zero(); channels],
            running_var: vec![T::one(); channels],
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    fn check(&self, x: &Tensor<T>) -> Result<()> {
        if x.channels() != self.channels() {
            return Err(Error::shape(
                "batch_norm",
                format!("expected {} channels, got {}", self.channels(), x.channels()),
            ));
        }
        Ok(())
    }

    /// Normalises with batch statistics and updates the running averages.
    /// Returns the normalised-and-scaled output and the backward cache.
    pub fn forward_train(&mut self, x: &Tensor<T>) -> Result<(Tensor<T>, BnCache<T>)> {
        self.check(x)?;
        let (nb, c, hw) = (x.batch(), x.channels(), x.plane_len());
        let count = nb * hw;
        if count < 2 {
            return Err(Error::invalid("batch norm in train mode needs at least 2 values per channel"));
        }
        let eps = T::lit(BN_EPSILON);
        let mom = T::lit(BN_MOMENTUM);
        let inv_count = T::one() / T::lit(count as f64);
        let mut xhat = Tensor::zeros(x.shape());
        let mut y = Tensor::zeros(x.shape());
        let mut inv_std = vec![T::zero(); c];
        for ch in 0..c {
            let mean = (0..nb).map(|n| x.plane(n, ch).iter().copied().sum::<T>()).sum::<T>() * inv_count;
            let var = (0..nb)
                .map(|n| x.plane(n, ch).iter().map(|&v| (v - mean) * (v - mean)).sum::<T>())
                .sum::<T>()
                * inv_count;
            let istd = T::one() / (var + eps).sqrt();
            inv_std[ch] = istd;
            let (g, b) = (self.gamma.value[ch], self.beta.value[ch]);
            for n in 0..nb {
                let src = x.plane(n, ch);
                let xh = xhat.plane_mut(n, ch);
                for (d, &v) in xh.iter_mut().zip(src) {
                    *d = (v - mean) * istd;
                }
                let xh = xhat.plane(n, ch);
                for (d, &v) in y.plane_mut(n, ch).iter_mut().zip(xh) {
                    *d = g * v + b;
                }
            }
            self.running_mean[ch] = mom * self.running_mean[ch] + (T::one() - mom) * mean;
            self.running_var[ch] = mom * self.running_var[ch] + (T::one() - mom) * var;
        }
        Ok((y, BnCache { xhat, inv_std }))
    }

    /// Affine map using the running statistics.
    pub fn forward_infer(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.check(x)?;
        let mut y = x.clone();
        self.apply_infer_in_place(&mut y);
        Ok(y)
    }

    pub(crate) fn apply_infer_in_place(&self, x: &mut Tensor<T>) {
        let eps = T::lit(BN_EPSILON);
        for ch in 0..x.channels() {
            let scale = self.gamma.value[ch] / (self.running_var[ch] + eps).sqrt();
            let shift = self.beta.value[ch] - self.running_mean[ch] * scale;
            for n in 0..x.batch() {
                x.plane_mut(n, ch).iter_mut().for_each(|v| *v = *v * scale + shift);
            }
        }
    }

    /// Accumulates gamma/beta gradients and returns the input gradient.
    pub fn backward(&mut self, dy: &Tensor<T>, cache: &BnCache<T>) -> Tensor<T> {
        let (nb, c, hw) = (dy.batch(), dy.channels(), dy.plane_len());
        let m = T::lit((nb * hw) as f64);
        let mut dx = Tensor::zeros(dy.shape());
        for ch in 0..c {
            let mut sum_dy = T::zero();
            let mut sum_dy_xhat = T::zero();
            for n in 0..nb {
                for (&g, &xh) in dy.plane(n, ch).iter().zip(cache.xhat.plane(n, ch)) {
                    sum_dy += g;
                    sum_dy_xhat += g * xh;
                }
            }
            self.gamma.grad[ch] += sum_dy_xhat;
            self.beta.grad[ch] += sum_dy;
            let k = self.gamma.value[ch] * cache.inv_std[ch] / m;
            for n in 0..nb {
                let g = dy.plane(n, ch);
                let xh = cache.xhat.plane(n, ch);
                for ((d, &gv), &xv) in dx.plane_mut(n, ch).iter_mut().zip(g).zip(xh) {
                    *d = k * (m * gv - sum_dy - xv * sum_dy_xhat);
                }
            }
        }
        dx
    }
}

pub fn relu_in_place<T: Real>(x: &mut Tensor<T>) {
    x.data_mut().iter_mut().for_each(|v| {
        if *v < T::zero() {
            *v = T::zero()
        }
    });
}

/// Zeroes `dy` wherever the pre-activation was not positive.
pub fn relu_backward_in_place<T: Real>(dy: &mut Tensor<T>, pre_activation: &Tensor<T>) {
    for (g, &p) in dy.data_mut().iter_mut().zip(pre_activation.data()) {
        if p <= T::zero() {
            *g = T::zero();
        }
    }
}

/// Output spatial dims of a non-overlapping pool.
pub fn pooled_dims(h: usize, w: usize, pool: (usize, usize)) -> Result<(usize, usize)> {
    if pool.0 == 0 || pool.1 == 0 {
        return Err(Error::shape("max_pool", "pool dims must be >= 1"));
    }
    if pool.0 > h || pool.1 > w {
        return Err(Error::shape(
            "max_pool",
            format!("pool {pool:?} larger than input {h}x{w}"),
        ));
    }
    Ok((h / pool.0, w / pool.1))
}

/// Non-overlapping max pool with floor division. Returns the pooled tensor
/// and, per output element, the flat in-plane index of the (first) maximum.
pub fn max_pool<T: Real>(x: &Tensor<T>, pool: (usize, usize)) -> Result<(Tensor<T>, Vec<u32>)> {
    let (h, w) = (x.height(), x.width());
    let (oh, ow) = pooled_dims(h, w, pool)?;
    let mut out = Tensor::zeros([x.batch(), x.channels(), oh, ow]);
    let mut argmax = vec![0u32; out.data().len()];
    let mut o = 0;
    for n in 0..x.batch() {
        for c in 0..x.channels() {
            let plane = x.plane(n, c);
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut best_idx = oy * pool.0 * w + ox * pool.1;
                    let mut best = plane[best_idx];
                    for dy in 0..pool.0 {
                        let row = (oy * pool.0 + dy) * w + ox * pool.1;
                        for dx in 0..pool.1 {
                            if plane[row + dx] > best {
                                best = plane[row + dx];
                                best_idx = row + dx;
                            }
                        }
                    }
                    out.data_mut()[o] = best;
                    argmax[o] = best_idx as u32;
                    o += 1;
                }
            }
        }
    }
    Ok((out, argmax))
}

/// Routes each pooled gradient to the position that won the max.
pub fn max_pool_backward<T: Real>(dy: &Tensor<T>, argmax: &[u32], input_shape: [usize; 4]) -> Tensor<T> {
    let mut dx = Tensor::zeros(input_shape);
    let out_plane = dy.plane_len();
    for n in 0..dy.batch() {
        for c in 0..dy.channels() {
            let base = (n * dy.channels() + c) * out_plane;
            let g = dy.plane(n, c).to_vec();
            let plane = dx.plane_mut(n, c);
            for (i, gv) in g.into_iter().enumerate() {
                plane[argmax[base + i] as usize] += gv;
            }
        }
    }
    dx
}

/// Mean over each channel's plane: `[n, c]` row-major.
pub fn global_avg_pool<T: Real>(x: &Tensor<T>) -> Vec<T> {
    let inv = T::one() / T::lit(x.plane_len() as f64);
    (0..x.batch())
        .flat_map(|n| (0..x.channels()).map(move |c| (n, c)))
        .map(|(n, c)| x.plane(n, c).iter().copied().sum::<T>() * inv)
        .collect()
}

pub fn global_avg_pool_backward<T: Real>(dpooled: &[T], input_shape: [usize; 4]) -> Tensor<T> {
    let mut dx = Tensor::zeros(input_shape);
    let inv = T::one() / T::lit((input_shape[2] * input_shape[3]) as f64);
    for n in 0..input_shape[0] {
        for c in 0..input_shape[1] {
            let g = dpooled[n * input_shape[1] + c] * inv;
            dx.plane_mut(n, c).iter_mut().for_each(|v| *v = g);
        }
    }
    dx
}

/// Fully connected layer from pooled features to the two class logits.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub inputs: usize,
    pub outputs: usize,
    /// `[outputs, inputs]`
    pub weight: Param<T>,
    pub bias: Param<T>,
}

impl<T: Real> Dense<T> {
    pub fn new(inputs: usize, outputs: usize, rng: &mut impl Rng) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let weight = (0..inputs * outputs)
            .map(|_| T::lit(rng.gen_range(-limit..limit)))
            .collect();
        Dense {
            inputs,
            outputs,
            weight: Param::new(weight),
            bias: Param::new(vec![T::zero(); outputs]),
        }
    }

    /// `x` is `[n, inputs]`; returns `[n, outputs]` logits.
    pub fn forward(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() % self.inputs != 0 {
            return Err(Error::shape("dense", format!("input length {} not a multiple of {}", x.len(), self.inputs)));
        }
        let n = x.len() / self.inputs;
        let mut out = vec![T::zero(); n * self.outputs];
        matmul(
            Mat::new(x, n, self.inputs),
            Mat::new(&self.weight.value, self.outputs, self.inputs).t(),
            &mut out,
            false,
        );
        for row in out.chunks_mut(self.outputs) {
            for (v, &b) in row.iter_mut().zip(&self.bias.value) {
                *v += b;
            }
        }
        Ok(out)
    }

    /// Accumulates parameter gradients; returns `d x`.
    pub fn backward(&mut self, x: &[T], dlogits: &[T]) -> Vec<T> {
        let n = x.len() / self.inputs;
        matmul(
            Mat::new(dlogits, n, self.outputs).t(),
            Mat::new(x, n, self.inputs),
            &mut self.weight.grad,
            true,
        );
        for row in dlogits.chunks(self.outputs) {
            for (g, &d) in self.bias.grad.iter_mut().zip(row) {
                *g += d;
            }
        }
        let mut dx = vec![T::zero(); x.len()];
        matmul(
            Mat::new(dlogits, n, self.outputs),
            Mat::new(&self.weight.value, self.outputs, self.inputs),
            &mut dx,
            false,
        );
        dx
    }
}

/// Row-wise softmax with max subtraction.
pub fn softmax<T: Real>(logits: &[T], classes: usize) -> Vec<T> {
    let mut out = logits.to_vec();
    for row in out.chunks_mut(classes) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        row.iter_mut().for_each(|v| *v /= sum);
    }
    out
}

/// Mean negative log-likelihood of the true class, probabilities clamped
/// at `1e-7`.
pub fn binary_cross_entropy<T: Real>(probs: &[T], labels: &[usize]) -> T {
    let classes = probs.len() / labels.len().max(1);
    let clamp = T::lit(PROB_CLAMP);
    let total: T = labels
        .iter()
        .enumerate()
        .map(|(i, &y)| -(probs[i * classes + y].max(clamp)).ln())
        .sum();
    total / T::lit(labels.len() as f64)
}

/// Gradient of the mean softmax cross-entropy w.r.t. the logits.
pub fn softmax_cross_entropy_grad<T: Real>(probs: &[T], labels: &[usize]) -> Vec<T> {
    let classes = probs.len() / labels.len();
    let inv_n = T::one() / T::lit(labels.len() as f64);
    let mut g = probs.to_vec();
    for (i, &y) in labels.iter().enumerate() {
        g[i * classes + y] -= T::one();
    }
    g.iter_mut().for_each(|v| *v *= inv_n);
    g
}
