//! Soft-margin RBF support vector machine trained by SMO, plus the
//! bandwidth/penalty grid search.

use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::container::{Block, Container};
use crate::error::{Error, Result};
use crate::metrics::micro_f1;
use crate::nn::stratified_split;

pub const SVM_KIND: &[u8; 4] = b"SVM\0";
pub const DEFAULT_TOLERANCE: f64 = 1e-5;
const TAU: f64 = 1e-12;

pub fn rbf_kernel(x: &[f64], y: &[f64], gamma: f64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!("kernel inputs have {} and {} dims", x.len(), y.len())));
    }
    if !(gamma > 0.0) {
        return Err(Error::invalid("gamma must be positive"));
    }
    Ok(rbf(x, y, gamma))
}

#[inline]
fn rbf(x: &[f64], y: &[f64], gamma: f64) -> f64 {
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * d2).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmParams {
    pub c: f64,
    pub gamma: f64,
    /// Scale each class's penalty by `n / (2 n_class)`.
    pub class_weight: bool,
    /// Stop once the maximal KKT violation drops below this.
    pub tolerance: f64,
    pub max_iter: usize,
}

impl SvmParams {
    pub fn new(c: f64, gamma: f64) -> Self {
        SvmParams {
            c,
            gamma,
            class_weight: false,
            tolerance: DEFAULT_TOLERANCE,
            max_iter: 1_000_000,
        }
    }
}

/// Per-dimension standardisation fitted on training data.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Population standard deviation; constant dimensions use 1.
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &[Vec<f64>]) -> Self {
        let d = x[0].len();
        let n = x.len() as f64;
        let mut mean = vec![0.0; d];
        for row in x {
            mean.iter_mut().zip(row).for_each(|(m, v)| *m += v / n);
        }
        let mut var = vec![0.0; d];
        for row in x {
            var.iter_mut().zip(row.iter().zip(&mean)).for_each(|(s, (v, m))| *s += (v - m) * (v - m) / n);
        }
        let std = var.into_iter().map(|v| if v > 0.0 { v.sqrt() } else { 1.0 }).collect();
        Standardizer { mean, std }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.mean).zip(&self.std).map(|((v, m), s)| (v - m) / s).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub gamma: f64,
    pub c: f64,
    pub scaler: Standardizer,
    /// Standardised support vectors.
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i * y_i` per support vector.
    pub dual_coeffs: Vec<f64>,
    pub bias: f64,
}

/// Everything SMO produced, including zero multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    /// `sum(alpha) - 0.5 alpha^T Q alpha`, to be maximised.
    pub dual_objective: f64,
    /// Maximal KKT violation at exit.
    pub violation: f64,
    pub iterations: usize,
    /// Per-sample upper bounds (C, possibly class-weighted).
    pub upper: Vec<f64>,
}

fn check_training(x: &[Vec<f64>], y: &[i8]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::invalid("features and labels differ in length"));
    }
    if x.is_empty() {
        return Err(Error::invalid("no training data"));
    }
    let d = x[0].len();
    if d == 0 || x.iter().any(|r| r.len() != d) {
        return Err(Error::invalid("feature rows must share a positive dimension"));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("features must be finite"));
    }
    if y.iter().any(|&l| l != 1 && l != -1) {
        return Err(Error::invalid("labels must be -1 or +1"));
    }
    if !(y.contains(&1) && y.contains(&-1)) {
        return Err(Error::SingleClass);
    }
    Ok(())
}

/// Solves the dual on already-prepared inputs (no standardisation).
pub fn smo(x: &[Vec<f64>], y: &[i8], params: &SvmParams) -> Result<SmoSolution> {
    check_training(x, y)?;
    if !(params.c > 0.0 && params.gamma > 0.0 && params.tolerance > 0.0) {
        return Err(Error::invalid("C, gamma and tolerance must be positive"));
    }
    let n = x.len();
    let yf: Vec<f64> = y.iter().map(|&l| l as f64).collect();
    let n_pos = y.iter().filter(|&&l| l == 1).count() as f64;
    let upper: Vec<f64> = yf
        .iter()
        .map(|&l| {
            if params.class_weight {
                let n_class = if l > 0.0 { n_pos } else { n as f64 - n_pos };
                params.c * n as f64 / (2.0 * n_class)
            } else {
                params.c
            }
        })
        .collect();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = rbf(&x[i], &x[j], params.gamma);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    let q = |i: usize, j: usize| yf[i] * yf[j] * k[i * n + j];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let in_up = |a: f64, l: f64, u: f64| (l > 0.0 && a < u) || (l < 0.0 && a > 0.0);
    let in_low = |a: f64, l: f64, u: f64| (l > 0.0 && a > 0.0) || (l < 0.0 && a < u);

    let mut iterations = 0;
    let violation = loop {
        let (mut i, mut m) = (usize::MAX, f64::NEG_INFINITY);
        let (mut j, mut mm) = (usize::MAX, f64::INFINITY);
        for t in 0..n {
            let v = -yf[t] * grad[t];
            if in_up(alpha[t], yf[t], upper[t]) && v > m {
                m = v;
                i = t;
            }
            if in_low(alpha[t], yf[t], upper[t]) && v < mm {
                mm = v;
                j = t;
            }
        }
        let gap = m - mm;
        if i == usize::MAX || j == usize::MAX || gap < params.tolerance || iterations >= params.max_iter {
            break gap.max(0.0);
        }
        iterations += 1;

        let (ai_old, aj_old) = (alpha[i], alpha[j]);
        let (ci, cj) = (upper[i], upper[j]);
        if yf[i] != yf[j] {
            let quad = (q(i, i) + q(j, j) + 2.0 * q(i, j)).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > ci - cj {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = ci - diff;
                }
            } else if alpha[j] > cj {
                alpha[j] = cj;
                alpha[i] = cj + diff;
            }
        } else {
            let quad = (q(i, i) + q(j, j) - 2.0 * q(i, j)).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > ci {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = sum - ci;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > cj {
                if alpha[j] > cj {
                    alpha[j] = cj;
                    alpha[i] = sum - cj;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - ai_old, alpha[j] - aj_old);
        for t in 0..n {
            grad[t] += q(t, i) * di + q(t, j) * dj;
        }
    };

    // offset from free multipliers, else the midpoint of the feasible range
    let (mut sum, mut count) = (0.0, 0usize);
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    for t in 0..n {
        let yg = yf[t] * grad[t];
        if alpha[t] > 0.0 && alpha[t] < upper[t] {
            sum += yg;
            count += 1;
        } else if (alpha[t] >= upper[t] && yf[t] < 0.0) || (alpha[t] <= 0.0 && yf[t] > 0.0) {
            ub = ub.min(yg);
        } else {
            lb = lb.max(yg);
        }
    }
    let rho = if count > 0 { sum / count as f64 } else { (ub + lb) / 2.0 };
    // grad = Q alpha - 1, so alpha^T Q alpha = alpha . (grad + 1)
    let quad: f64 = alpha.iter().zip(&grad).map(|(a, g)| a * (g + 1.0)).sum();
    let dual_objective = alpha.iter().sum::<f64>() - 0.5 * quad;
    Ok(SmoSolution {
        alpha,
        bias: -rho,
        dual_objective,
        violation,
        iterations,
        upper,
    })
}

/// Standardises the features, solves the dual and keeps the support vectors.
pub fn train_svm(x: &[Vec<f64>], y: &[i8], params: &SvmParams) -> Result<SvmModel> {
    check_training(x, y)?;
    let scaler = Standardizer::fit(x);
    let z: Vec<Vec<f64>> = x.iter().map(|r| scaler.apply(r)).collect();
    let sol = smo(&z, y, params)?;
    let (mut support_vectors, mut dual_coeffs) = (Vec::new(), Vec::new());
    for (t, &a) in sol.alpha.iter().enumerate() {
        if a > 0.0 {
            support_vectors.push(z[t].clone());
            dual_coeffs.push(a * y[t] as f64);
        }
    }
    Ok(SvmModel {
        gamma: params.gamma,
        c: params.c,
        scaler,
        support_vectors,
        dual_coeffs,
        bias: sol.bias,
    })
}

impl SvmModel {
    pub fn dim(&self) -> usize {
        self.scaler.mean.len()
    }

    /// Decision value for an already standardised input.
    pub fn decision_standardized(&self, z: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coeffs)
            .map(|(sv, &c)| c * rbf(sv, z, self.gamma))
            .sum::<f64>()
            + self.bias
    }

    /// `(on, decision)`; a decision of exactly 0 counts as on.
    pub fn predict(&self, x: &[f64]) -> Result<(bool, f64)> {
        if x.len() != self.dim() {
            return Err(Error::shape("svm", format!("feature has {} dims, model expects {}", x.len(), self.dim())));
        }
        let d = self.decision_standardized(&self.scaler.apply(x));
        Ok((d >= 0.0, d))
    }

    pub fn predict_many(&self, xs: &[Vec<f64>]) -> Result<Vec<(bool, f64)>> {
        xs.iter().map(|x| self.predict(x)).collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = format!(
            "gamma={}\nc={}\nbias={}\ndim={}\nn_sv={}\n",
            self.gamma,
            self.c,
            self.bias,
            self.dim(),
            self.support_vectors.len()
        );
        Container {
            kind: *SVM_KIND,
            header,
            blocks: vec![
                Block::F64(self.scaler.mean.clone()),
                Block::F64(self.scaler.std.clone()),
                Block::F64(self.dual_coeffs.clone()),
                Block::F64(self.support_vectors.concat()),
            ],
        }
        .to_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let c = Container::from_bytes(bytes, SVM_KIND)?;
        let mut fields = std::collections::HashMap::new();
        for line in c.header.lines().filter(|l| !l.is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::BlockMismatch(format!("bad header line {line:?}")))?;
            fields.insert(k, v);
        }
        let get = |k: &str| -> Result<&str> {
            fields.get(k).copied().ok_or_else(|| Error::BlockMismatch(format!("header lacks {k}")))
        };
        let float = |k: &str| -> Result<f64> {
            get(k)?.parse().map_err(|_| Error::BlockMismatch(format!("bad {k} in header")))
        };
        let int = |k: &str| -> Result<usize> {
            get(k)?.parse().map_err(|_| Error::BlockMismatch(format!("bad {k} in header")))
        };
        let (dim, n_sv) = (int("dim")?, int("n_sv")?);
        let expected = [dim, dim, n_sv, dim * n_sv];
        if c.blocks.len() != 4 {
            return Err(Error::BlockMismatch(format!("{} blocks stored, expected 4", c.blocks.len())));
        }
        let mut blocks = Vec::with_capacity(4);
        for (i, (b, want)) in c.blocks.into_iter().zip(expected).enumerate() {
            match b {
                Block::F64(v) if v.len() == want => blocks.push(v),
                other => {
                    return Err(Error::BlockMismatch(format!(
                        "block {i} holds {} values ({}), expected {want} f64",
                        other.len(),
                        if matches!(other, Block::F64(_)) { "f64" } else { "f32" }
                    )))
                }
            }
        }
        let sv_flat = blocks.pop().unwrap();
        let dual_coeffs = blocks.pop().unwrap();
        let std = blocks.pop().unwrap();
        let mean = blocks.pop().unwrap();
        Ok(SvmModel {
            gamma: float("gamma")?,
            c: float("c")?,
            bias: float("bias")?,
            scaler: Standardizer { mean, std },
            support_vectors: if dim == 0 { Vec::new() } else { sv_flat.chunks(dim).map(<[f64]>::to_vec).collect() },
            dual_coeffs,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub gammas: Vec<f64>,
    pub cs: Vec<f64>,
}

impl GridSpec {
    /// Bandwidths `2^-3, 2^-5, ..., 2^-13` and `1/dim`; penalties
    /// `0.1, 2, 8, 32`.
    pub fn standard(dim: usize) -> Self {
        let mut gammas: Vec<f64> = (0..6).map(|i| 2f64.powi(-(3 + 2 * i))).collect();
        gammas.push(1.0 / dim as f64);
        GridSpec {
            gammas,
            cs: vec![0.1, 2.0, 8.0, 32.0],
        }
    }

    pub fn candidates(&self) -> Vec<(f64, f64)> {
        self.gammas
            .iter()
            .flat_map(|&g| self.cs.iter().map(move |&c| (g, c)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRow {
    pub gamma: f64,
    pub c: f64,
    pub micro_f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub best_gamma: f64,
    pub best_c: f64,
    /// In grid order (gamma-major).
    pub table: Vec<GridRow>,
}

impl GridResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("gamma,c,micro_f1\n");
        for r in &self.table {
            let _ = writeln!(out, "{},{},{}", r.gamma, r.c, r.micro_f1);
        }
        out
    }
}

/// Minimum points per class for the inner split.
pub const MIN_PER_CLASS: usize = 10;

/// Scores every (gamma, C) by micro-F on a stratified inner validation
/// split of the given training data. Ties go to the smaller C, then the
/// smaller gamma.
pub fn grid_search(
    x: &[Vec<f64>],
    y: &[i8],
    grid: &GridSpec,
    val_fraction: f64,
    seed: u64,
    class_weight: bool,
) -> Result<GridResult> {
    check_training(x, y)?;
    let per_class = [1i8, -1].map(|c| y.iter().filter(|&&l| l == c).count());
    if per_class.iter().any(|&n| n < MIN_PER_CLASS) {
        return Err(Error::invalid(format!(
            "grid search needs at least {MIN_PER_CLASS} points per class, got {per_class:?}"
        )));
    }
    if grid.gammas.is_empty() || grid.cs.is_empty() {
        return Err(Error::Config("empty grid".into()));
    }
    let as_class: Vec<usize> = y.iter().map(|&l| (l > 0) as usize).collect();
    let (tr, va) = stratified_split(&as_class, val_fraction, &mut ChaCha8Rng::seed_from_u64(seed));
    let pick = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<i8>) {
        (idx.iter().map(|&i| x[i].clone()).collect(), idx.iter().map(|&i| y[i]).collect())
    };
    let (xt, yt) = pick(&tr);
    let (xv, yv) = pick(&va);
    let truth: Vec<bool> = yv.iter().map(|&l| l > 0).collect();
    let table = grid
        .candidates()
        .par_iter()
        .map(|&(gamma, c)| {
            let params = SvmParams {
                class_weight,
                ..SvmParams::new(c, gamma)
            };
            let model = train_svm(&xt, &yt, &params)?;
            let pred: Vec<bool> = model.predict_many(&xv)?.into_iter().map(|p| p.0).collect();
            Ok(GridRow {
                gamma,
                c,
                micro_f1: micro_f1(&[(pred, truth.clone())])?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut order: Vec<&GridRow> = table.iter().collect();
    order.sort_by(|a, b| a.c.total_cmp(&b.c).then(a.gamma.total_cmp(&b.gamma)));
    let best = order.iter().fold(order[0], |b, r| if r.micro_f1 > b.micro_f1 { r } else { b });
    Ok(GridResult {
        best_gamma: best.gamma,
        best_c: best.c,
        table,
    })
}
