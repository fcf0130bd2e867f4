//! Audio front end: STFT, mel filterbank and the dB melspectrogram the
//! convnet consumes.
//!
//! All routines are pure functions of their inputs. [`MelFrontEnd`] caches the
//! FFT plan, window and filterbank for callers that analyse many excerpts with
//! the same configuration (the sliding-window feature extractor does).

mod wav;

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub use wav::{read_wav, write_wav};

/// Sample rate every pipeline stage works at.
pub const PIPELINE_SAMPLE_RATE: u32 = 44_100;

/// Mono audio buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl Signal {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::invalid(format!("non-finite sample at index {i}")));
        }
        Ok(Signal {
            samples,
            sample_rate,
        })
    }

    pub fn zeros(len: usize, sample_rate: u32) -> Self {
        Signal {
            samples: vec![0.0; len],
            sample_rate,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Samples in `[start_s, end_s)`, clamped to the buffer.
    pub fn slice_seconds(&self, start_s: f64, end_s: f64) -> Signal {
        let sr = self.sample_rate as f64;
        let a = ((start_s * sr).round().max(0.0) as usize).min(self.len());
        let b = ((end_s * sr).round().max(0.0) as usize).clamp(a, self.len());
        Signal {
            samples: self.samples[a..b].to_vec(),
            sample_rate: self.sample_rate,
        }
    }

    /// Linear-interpolation resampling.
    pub fn resample_linear(&self, target_rate: u32) -> Signal {
        if target_rate == self.sample_rate || self.samples.is_empty() {
            return Signal {
                samples: self.samples.clone(),
                sample_rate: target_rate,
            };
        }
        let ratio = self.sample_rate as f64 / target_rate as f64;
        let out_len = ((self.len() as f64) / ratio).round().max(1.0) as usize;
        let last = self.len() - 1;
        let samples = (0..out_len)
            .map(|i| {
                let pos = i as f64 * ratio;
                let i0 = (pos.floor() as usize).min(last);
                let i1 = (i0 + 1).min(last);
                let frac = pos - i0 as f64;
                self.samples[i0] * (1.0 - frac) + self.samples[i1] * frac
            })
            .collect();
        Signal {
            samples,
            sample_rate: target_rate,
        }
    }
}

/// Dense row-major matrix used for spectrogram-shaped data.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

/// STFT and mel analysis parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DspConfig {
    pub fft_size: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub fmin: f64,
    /// `None` means the Nyquist frequency of the analysed signal.
    pub fmax: Option<f64>,
    pub floor_db: f64,
}

impl Default for DspConfig {
    fn default() -> Self {
        DspConfig {
            fft_size: 1024,
            hop: 441,
            n_mels: 128,
            fmin: 0.0,
            fmax: None,
            floor_db: -80.0,
        }
    }
}

impl DspConfig {
    pub fn n_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn fmax_for(&self, sample_rate: u32) -> f64 {
        self.fmax.unwrap_or(sample_rate as f64 / 2.0)
    }

    /// Number of STFT frames for a signal of `len` samples.
    pub fn n_frames(&self, len: usize) -> usize {
        1 + len / self.hop
    }

    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        if self.fft_size < 2 || !self.fft_size.is_power_of_two() {
            return Err(Error::Config(format!(
                "fft_size {} is not a power of two",
                self.fft_size
            )));
        }
        if self.hop == 0 || self.hop > self.fft_size {
            return Err(Error::Config(format!(
                "hop {} must lie in 1..={}",
                self.hop, self.fft_size
            )));
        }
        if self.n_mels == 0 {
            return Err(Error::Config("n_mels must be at least 1".into()));
        }
        let nyquist = sample_rate as f64 / 2.0;
        let fmax = self.fmax_for(sample_rate);
        if !(self.fmin >= 0.0 && self.fmin < fmax && fmax <= nyquist) {
            return Err(Error::Config(format!(
                "need 0 <= fmin < fmax <= {nyquist}, got fmin={} fmax={fmax}",
                self.fmin
            )));
        }
        if !(self.floor_db < 0.0) {
            return Err(Error::Config("floor_db must be negative".into()));
        }
        Ok(())
    }
}

/// HTK mel scale.
pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Periodic Hann window.
pub fn hann_window(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Index into a signal of length `len` with mirror reflection (edge sample
/// not repeated), folding as many times as needed.
pub(crate) fn reflect_index(i: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let m = i.rem_euclid(period);
    if m >= len as isize {
        (period - m) as usize
    } else {
        m as usize
    }
}

/// Triangular mel filterbank, `n_mels x (fft_size/2 + 1)`.
///
/// Filter vertices are equally spaced on the mel scale. Each FFT bin stands
/// for the frequency cell `[f_k - df/2, f_k + df/2]` and receives the mean of
/// the triangle over that cell, so a filter narrower than one bin still has
/// positive weight on the bin it falls in.
pub fn mel_filterbank(cfg: &DspConfig, sample_rate: u32) -> Result<Matrix> {
    cfg.validate(sample_rate)?;
    let n_bins = cfg.n_bins();
    if cfg.n_mels >= n_bins {
        return Err(Error::Config(format!(
            "{} mel bands cannot be resolved by {} FFT bins",
            cfg.n_mels, n_bins
        )));
    }
    let fmax = cfg.fmax_for(sample_rate);
    let mel_lo = hz_to_mel(cfg.fmin);
    let mel_hi = hz_to_mel(fmax);
    let points: Vec<f64> = (0..cfg.n_mels + 2)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (cfg.n_mels + 1) as f64))
        .collect();
    let df = sample_rate as f64 / cfg.fft_size as f64;

    let mut fb = Matrix::zeros(cfg.n_mels, n_bins);
    for m in 0..cfg.n_mels {
        let (l, c, r) = (points[m], points[m + 1], points[m + 2]);
        for k in 0..n_bins {
            let a = (k as f64 - 0.5) * df;
            let b = (k as f64 + 0.5) * df;
            let w = triangle_integral(l, c, r, a, b) / df;
            if w > 0.0 {
                fb.set(m, k, w);
            }
        }
        if fb.row(m).iter().all(|&w| w <= 0.0) {
            return Err(Error::Config(format!("mel band {m} has zero support")));
        }
    }
    Ok(fb)
}

/// Integral over `[a, b]` of the unit-peak triangle with vertices `l < c < r`.
fn triangle_integral(l: f64, c: f64, r: f64, a: f64, b: f64) -> f64 {
    let mut total = 0.0;
    let (ra, rb) = (a.max(l), b.min(c));
    if rb > ra && c > l {
        total += ((rb - l).powi(2) - (ra - l).powi(2)) / (2.0 * (c - l));
    }
    let (fa, fb) = (a.max(c), b.min(r));
    if fb > fa && r > c {
        total += ((r - fa).powi(2) - (r - fb).powi(2)) / (2.0 * (r - c));
    }
    total
}

/// Melspectrogram in max-referenced decibels, `n_mels x n_frames`.
#[derive(Debug, Clone, PartialEq)]
pub struct MelSpectrogram {
    pub values: Matrix,
    pub frame_hop_s: f64,
    pub floor_db: f64,
}

impl MelSpectrogram {
    pub fn n_mels(&self) -> usize {
        self.values.rows
    }

    pub fn n_frames(&self) -> usize {
        self.values.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.values.rows, self.values.cols)
    }
}

/// Reusable analysis state for one configuration and sample rate.
pub struct MelFrontEnd {
    cfg: DspConfig,
    sample_rate: u32,
    window: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    filterbank: Matrix,
}

impl MelFrontEnd {
    pub fn new(cfg: DspConfig, sample_rate: u32) -> Result<Self> {
        let filterbank = mel_filterbank(&cfg, sample_rate)?;
        let fft = FftPlanner::new().plan_fft_forward(cfg.fft_size);
        Ok(MelFrontEnd {
            window: hann_window(cfg.fft_size),
            cfg,
            sample_rate,
            fft,
            filterbank,
        })
    }

    pub fn config(&self) -> &DspConfig {
        &self.cfg
    }

    pub fn filterbank(&self) -> &Matrix {
        &self.filterbank
    }

    /// STFT power (squared magnitude), `(fft_size/2+1) x n_frames`.
    fn stft_power(&self, signal: &Signal) -> Result<Matrix> {
        let mut mag = self.stft_magnitude(signal)?;
        mag.data.iter_mut().for_each(|v| *v *= *v);
        Ok(mag)
    }

    pub fn stft_magnitude(&self, signal: &Signal) -> Result<Matrix> {
        if signal.is_empty() {
            return Err(Error::invalid("cannot analyse an empty signal"));
        }
        let n = self.cfg.fft_size;
        let half = (n / 2) as isize;
        let n_bins = self.cfg.n_bins();
        let n_frames = self.cfg.n_frames(signal.len());
        let mut out = Matrix::zeros(n_bins, n_frames);
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        for t in 0..n_frames {
            let start = (t * self.cfg.hop) as isize - half;
            for (i, slot) in buf.iter_mut().enumerate() {
                let idx = reflect_index(start + i as isize, signal.len());
                *slot = Complex::new(signal.samples[idx] * self.window[i], 0.0);
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for (k, z) in buf.iter().take(n_bins).enumerate() {
                out.set(k, t, z.norm());
            }
        }
        Ok(out)
    }

    pub fn melspectrogram(&self, signal: &Signal) -> Result<MelSpectrogram> {
        if signal.sample_rate != self.sample_rate {
            return Err(Error::invalid(format!(
                "front end built for {} Hz, got {} Hz",
                self.sample_rate, signal.sample_rate
            )));
        }
        let power = self.stft_power(signal)?;
        let (n_mels, n_bins, n_frames) = (self.cfg.n_mels, power.rows, power.cols);
        let mut mel = Matrix::zeros(n_mels, n_frames);
        for m in 0..n_mels {
            let w = self.filterbank.row(m);
            for (k, &wk) in w.iter().enumerate().take(n_bins) {
                if wk == 0.0 {
                    continue;
                }
                let prow = power.row(k);
                let mrow = &mut mel.data[m * n_frames..(m + 1) * n_frames];
                for (dst, &p) in mrow.iter_mut().zip(prow) {
                    *dst += wk * p;
                }
            }
        }
        let floor = self.cfg.floor_db;
        let peak = mel.data.iter().cloned().fold(0.0f64, f64::max);
        for v in mel.data.iter_mut() {
            // ratio first so power-of-two gain changes cancel exactly
            *v = if peak > 0.0 && *v > 0.0 {
                (10.0 * (*v / peak).log10()).max(floor)
            } else {
                floor
            };
        }
        Ok(MelSpectrogram {
            values: mel,
            frame_hop_s: self.cfg.hop as f64 / self.sample_rate as f64,
            floor_db: floor,
        })
    }
}

/// Magnitude STFT with centred reflect padding and a periodic Hann window.
pub fn stft_magnitude(signal: &Signal, cfg: &DspConfig) -> Result<Matrix> {
    MelFrontEnd::new(cfg.clone(), signal.sample_rate)?.stft_magnitude(signal)
}

pub fn melspectrogram(signal: &Signal, cfg: &DspConfig) -> Result<MelSpectrogram> {
    MelFrontEnd::new(cfg.clone(), signal.sample_rate)?.melspectrogram(signal)
}

/// Cyclically repeats or truncates `signal` to exactly `target_s` seconds.
pub fn fit_to_duration(signal: &Signal, target_s: f64) -> Result<Signal> {
    if signal.is_empty() {
        return Err(Error::invalid("cannot fit an empty signal"));
    }
    if !(target_s > 0.0) {
        return Err(Error::invalid("target duration must be positive"));
    }
    let target = (target_s * signal.sample_rate as f64).round() as usize;
    let samples = signal.samples.iter().cycle().take(target).copied().collect();
    Ok(Signal {
        samples,
        sample_rate: signal.sample_rate,
    })
}
