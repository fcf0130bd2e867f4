//! Transfer features: per-block average-pooled activations of a trained
//! network, for whole excerpts or for sliding windows over a recording.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::dsp::{fit_to_duration, DspConfig, MelFrontEnd, MelSpectrogram, Signal};
use crate::error::{Error, Result};
use crate::nn::{mel_to_input, Network, Tensor, PEDAL_CLASS};
use crate::synth::EXCERPT_S;

const CHUNK: usize = 32;

/// One feature row with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub recording_id: String,
    pub frame_time_s: f64,
    pub values: Vec<f64>,
}

/// Sliding-window layout for frame-wise analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameConfig {
    pub window_s: f64,
    pub hop_s: f64,
    /// Each window is tiled to this length before the melspectrogram.
    pub tile_s: f64,
}

impl Default for FrameConfig {
    fn default() -> Self {
        FrameConfig {
            window_s: 0.3,
            hop_s: 0.1,
            tile_s: EXCERPT_S,
        }
    }
}

impl FrameConfig {
    fn sizes(&self, sample_rate: u32) -> Result<(usize, usize)> {
        let sr = sample_rate as f64;
        let (w, h) = ((self.window_s * sr).round() as usize, (self.hop_s * sr).round() as usize);
        if w == 0 || h == 0 || !(self.tile_s > 0.0) {
            return Err(Error::Config("window, hop and tile lengths must be positive".into()));
        }
        Ok((w, h))
    }

    /// Window start samples: `0, hop, 2 hop, ...` while the window fits.
    pub fn window_starts(&self, len: usize, sample_rate: u32) -> Result<Vec<usize>> {
        let (w, h) = self.sizes(sample_rate)?;
        if len < w {
            return Err(Error::invalid(format!(
                "recording of {len} samples is shorter than one {} s window",
                self.window_s
            )));
        }
        Ok((0..=(len - w) / h).map(|k| k * h).collect())
    }

    /// Frame timestamps (window centres) for a recording of `len` samples.
    pub fn frame_times(&self, len: usize, sample_rate: u32) -> Result<Vec<f64>> {
        let (w, _) = self.sizes(sample_rate)?;
        Ok(self
            .window_starts(len, sample_rate)?
            .into_iter()
            .map(|s| (s as f64 + w as f64 / 2.0) / sample_rate as f64)
            .collect())
    }
}

fn run(network: &Network<f32>, mels: &[MelSpectrogram]) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let (h, w) = network.config().input;
    if let Some(m) = mels.iter().find(|m| m.shape() != (h, w)) {
        return Err(Error::shape(
            "feature extractor",
            format!("melspectrogram is {:?}, network expects {:?}", m.shape(), (h, w)),
        ));
    }
    let fl = network.feature_len();
    let mut taps = Vec::with_capacity(mels.len());
    let mut probs = Vec::with_capacity(mels.len());
    for chunk in mels.chunks(CHUNK) {
        let inputs: Vec<Vec<f32>> = chunk.iter().map(mel_to_input).collect();
        let planes: Vec<&[f32]> = inputs.iter().map(Vec::as_slice).collect();
        let inf = network.infer(&Tensor::from_planes(&planes, h, w)?)?;
        taps.extend(inf.taps.chunks(fl).map(|t| t.iter().map(|&v| v as f64).collect::<Vec<_>>()));
        probs.extend(inf.probs.chunks(2).map(|p| p[PEDAL_CLASS] as f64));
    }
    Ok((taps, probs))
}

/// Concatenated per-block average-pooled activations (`channels * layers`).
pub fn extract_features(network: &Network<f32>, mel: &MelSpectrogram) -> Result<Vec<f64>> {
    Ok(run(network, std::slice::from_ref(mel))?.0.remove(0))
}

pub fn extract_features_batch(network: &Network<f32>, mels: &[MelSpectrogram]) -> Result<Vec<Vec<f64>>> {
    Ok(run(network, mels)?.0)
}

/// Tiled melspectrograms of every analysis window, with frame times.
pub fn frame_mels(signal: &Signal, frames: &FrameConfig, dsp: &DspConfig) -> Result<(Vec<f64>, Vec<MelSpectrogram>)> {
    let front = MelFrontEnd::new(dsp.clone(), signal.sample_rate)?;
    let (w, _) = frames.sizes(signal.sample_rate)?;
    let starts = frames.window_starts(signal.len(), signal.sample_rate)?;
    let times = frames.frame_times(signal.len(), signal.sample_rate)?;
    let mels = starts
        .par_iter()
        .map(|&s| {
            let window = Signal {
                samples: signal.samples[s..s + w].to_vec(),
                sample_rate: signal.sample_rate,
            };
            front.melspectrogram(&fit_to_duration(&window, frames.tile_s)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((times, mels))
}

/// Everything one inference pass over a recording's windows yields.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameAnalysis {
    pub recording_id: String,
    pub times: Vec<f64>,
    /// Transfer feature per frame.
    pub features: Vec<Vec<f64>>,
    /// Network pedal probability per frame.
    pub pedal_probs: Vec<f64>,
}

impl FrameAnalysis {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// The last block's slice of each feature, i.e. the dense head's input.
    pub fn head_inputs(&self, channels: usize) -> Vec<Vec<f64>> {
        self.features.iter().map(|f| f[f.len() - channels..].to_vec()).collect()
    }

    pub fn feature_vectors(&self) -> Vec<FeatureVector> {
        self.times
            .iter()
            .zip(&self.features)
            .map(|(&t, f)| FeatureVector {
                recording_id: self.recording_id.clone(),
                frame_time_s: t,
                values: f.clone(),
            })
            .collect()
    }
}

pub fn analyze_frames(
    network: &Network<f32>,
    signal: &Signal,
    recording_id: &str,
    frames: &FrameConfig,
    dsp: &DspConfig,
) -> Result<FrameAnalysis> {
    let (times, mels) = frame_mels(signal, frames, dsp)?;
    let (features, pedal_probs) = run(network, &mels)?;
    Ok(FrameAnalysis {
        recording_id: recording_id.to_string(),
        times,
        features,
        pedal_probs,
    })
}

/// Frame-wise transfer features with the default 0.3 s / 0.1 s windows.
pub fn extract_frame_features(network: &Network<f32>, signal: &Signal, recording_id: &str) -> Result<Vec<FeatureVector>> {
    Ok(analyze_frames(network, signal, recording_id, &FrameConfig::default(), &DspConfig::default())?.feature_vectors())
}

pub fn features_to_csv(rows: &[FeatureVector]) -> String {
    let dim = rows.first().map_or(0, |r| r.values.len());
    let mut out = String::from("recording_id,frame_time_s");
    for i in 0..dim {
        let _ = write!(out, ",f{i}");
    }
    out.push('\n');
    for r in rows {
        let _ = write!(out, "{},{}", r.recording_id, r.frame_time_s);
        for v in &r.values {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

pub fn features_from_csv(text: &str) -> Result<Vec<FeatureVector>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty feature file".into()))?;
    let dim = header.split(',').count().saturating_sub(2);
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != dim + 2 {
                return Err(Error::Parse(format!("feature row {} has {} columns, expected {}", i + 1, cols.len(), dim + 2)));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse(format!("bad number {s:?} in row {}", i + 1)));
            Ok(FeatureVector {
                recording_id: cols[0].to_string(),
                frame_time_s: num(cols[1])?,
                values: cols[2..].iter().map(|s| num(s)).collect::<Result<_>>()?,
            })
        })
        .collect()
}

pub fn write_features(rows: &[FeatureVector], path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, features_to_csv(rows))?;
    Ok(())
}

pub fn read_features(path: impl AsRef<Path>) -> Result<Vec<FeatureVector>> {
    features_from_csv(&std::fs::read_to_string(path)?)
}
