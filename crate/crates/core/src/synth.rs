//! Piano-like additive synthesiser used to build paired pedal/no-pedal
//! training data and longer test passages.
//!
//! Each note is a bank of exponentially decaying, slightly inharmonic
//! partials. A note that overlaps a pedal-on segment decays more slowly,
//! keeps ringing until the pedal is released and excites a few quiet
//! sympathetic strings. Everything is driven by seeded generators.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dsp::{fit_to_duration, DspConfig, MelFrontEnd, MelSpectrogram, Signal, PIPELINE_SAMPLE_RATE};
use crate::error::{Error, Result};
use crate::midi::{ControlEvent, MidiPerformance, Note, PedalSegment, PEDAL_THRESHOLD};

/// Damper decay applied once a note is released (1/s).
const DAMPER_RATE: f64 = 40.0;
/// Audio rendered after the damper engages.
const RELEASE_S: f64 = 0.15;
const ATTACK_S: f64 = 0.002;
const MAX_SYMPATHETIC: usize = 5;
const PEAK: f64 = 0.9;

/// Length of every training excerpt after tiling or truncation.
pub const EXCERPT_S: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub sample_rate: u32,
    pub n_partials: usize,
    pub decay_rate_no_pedal: f64,
    pub decay_rate_pedal: f64,
    pub resonance_gain: f64,
    /// `B` in `f_k = k f0 sqrt(1 + B k^2)`.
    pub inharmonicity: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            sample_rate: PIPELINE_SAMPLE_RATE,
            n_partials: 8,
            decay_rate_no_pedal: 4.0,
            decay_rate_pedal: 1.0,
            resonance_gain: 0.2,
            inharmonicity: 1e-4,
            seed: 0,
        }
    }
}

impl SynthConfig {
    /// A differently voiced instrument for the target task: brighter,
    /// longer natural sustain and weaker resonance.
    pub fn target_instrument(seed: u64) -> Self {
        SynthConfig {
            n_partials: 12,
            decay_rate_no_pedal: 2.0,
            decay_rate_pedal: 0.7,
            resonance_gain: 0.08,
            inharmonicity: 4e-4,
            seed,
            ..SynthConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 || self.n_partials == 0 {
            return Err(Error::Config("sample_rate and n_partials must be >= 1".into()));
        }
        if !(self.decay_rate_pedal > 0.0 && self.decay_rate_pedal < self.decay_rate_no_pedal) {
            return Err(Error::Config(
                "decay rates must satisfy 0 < decay_rate_pedal < decay_rate_no_pedal".into(),
            ));
        }
        if !(self.resonance_gain >= 0.0 && self.inharmonicity >= 0.0) {
            return Err(Error::Config("resonance_gain and inharmonicity must be >= 0".into()));
        }
        Ok(())
    }
}

pub fn midi_to_hz(pitch: f64) -> f64 {
    440.0 * 2f64.powf((pitch - 69.0) / 12.0)
}

/// Adds one decaying sinusoid to `out` using a complex recursive oscillator.
/// The decay switches to the damper rate at sample `damp_at`.
#[allow(clippy::too_many_arguments)]
fn add_partial(out: &mut [f64], sr: f64, start: usize, damp_at: usize, stop: usize, freq: f64, amp: f64, phase: f64, rate: f64) {
    let stop = stop.min(out.len());
    if start >= stop {
        return;
    }
    let w = 2.0 * PI * freq / sr;
    let (sw, cw) = w.sin_cos();
    let ring = (-rate / sr).exp();
    let damped = (-(rate + DAMPER_RATE) / sr).exp();
    let (mut re, mut im) = (amp * phase.cos(), amp * phase.sin());
    let attack = ((ATTACK_S * sr) as usize).max(1);
    for (i, o) in out[start..stop].iter_mut().enumerate() {
        let n = start + i;
        let env = if i < attack { i as f64 / attack as f64 } else { 1.0 };
        *o += env * im;
        let g = if n < damp_at { ring } else { damped };
        let (r2, i2) = (re * cw - im * sw, re * sw + im * cw);
        re = r2 * g;
        im = i2 * g;
    }
}

fn note_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (index as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Renders a performance with or without the sustain-pedal effect,
/// peak-normalised to 0.9.
pub fn render(perf: &MidiPerformance, with_pedal: bool, cfg: &SynthConfig) -> Result<Signal> {
    cfg.validate()?;
    if perf.notes.is_empty() {
        return Err(Error::invalid("cannot render a performance without notes"));
    }
    let sr = cfg.sample_rate as f64;
    let segments = if with_pedal {
        perf.pedal_segments(PEDAL_THRESHOLD)
    } else {
        Vec::new()
    };
    let sounding_end = |n: &Note| -> (f64, Vec<PedalSegment>) {
        let hits: Vec<PedalSegment> = segments
            .iter()
            .copied()
            .filter(|s| s.overlaps(n.onset_s, n.offset_s.max(n.onset_s + 1e-9)))
            .collect();
        let end = hits.iter().map(|s| s.offset_s).fold(n.offset_s, f64::max);
        (end, hits)
    };
    let last = perf.notes.iter().map(|n| sounding_end(n).0).fold(perf.end_s, f64::max);
    let len = ((last + RELEASE_S) * sr).ceil() as usize;
    let mut out = vec![0.0; len];
    let idx = |t: f64| (t * sr).round().max(0.0) as usize;

    for (i, note) in perf.notes.iter().enumerate() {
        let mut rng = note_rng(cfg.seed, i);
        let phases: Vec<f64> = (0..cfg.n_partials).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        let (end, hits) = sounding_end(note);
        let pedaled = !hits.is_empty();
        let rate = if pedaled { cfg.decay_rate_pedal } else { cfg.decay_rate_no_pedal };
        let amp = note.velocity as f64 / 127.0;
        let f0 = midi_to_hz(note.pitch as f64);
        let (start, damp_at, stop) = (idx(note.onset_s), idx(end), idx(end + RELEASE_S));
        for k in 1..=cfg.n_partials {
            let kf = k as f64;
            let f = kf * f0 * (1.0 + cfg.inharmonicity * kf * kf).sqrt();
            if f >= 0.45 * sr {
                break;
            }
            let rate_k = rate * (1.0 + 0.25 * (kf - 1.0));
            add_partial(&mut out, sr, start, damp_at, stop, f, amp / kf, phases[k - 1], rate_k);
        }
        if !pedaled || cfg.resonance_gain == 0.0 {
            continue;
        }
        for seg in hits {
            let n_sym = rng.gen_range(1..=MAX_SYMPATHETIC);
            let s_start = idx(note.onset_s.max(seg.onset_s));
            let (s_damp, s_stop) = (idx(seg.offset_s), idx(seg.offset_s + RELEASE_S));
            for _ in 0..n_sym {
                let mut pitch = rng.gen_range(28..=96u8);
                if pitch == note.pitch {
                    pitch += 1;
                }
                let fs = midi_to_hz(pitch as f64);
                for k in 1..=4usize {
                    let kf = k as f64;
                    let f = kf * fs * (1.0 + cfg.inharmonicity * kf * kf).sqrt();
                    if f >= 0.45 * sr {
                        break;
                    }
                    let phase = rng.gen_range(0.0..2.0 * PI);
                    let a = cfg.resonance_gain * amp / kf;
                    add_partial(&mut out, sr, s_start, s_damp, s_stop, f, a, phase, cfg.decay_rate_pedal);
                }
            }
        }
    }
    let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        let g = PEAK / peak;
        out.iter_mut().for_each(|v| *v *= g);
    }
    Signal::new(out, cfg.sample_rate)
}

/// A short random score with exactly one pedal segment.
pub fn random_score(rng: &mut impl Rng) -> (MidiPerformance, PedalSegment) {
    let on = rng.gen_range(0.3..0.8);
    let seg = PedalSegment {
        onset_s: on,
        offset_s: on + rng.gen_range(1.0..2.5),
    };
    let n = rng.gen_range(1..=6);
    let simultaneous = rng.gen_bool(0.5);
    let chord_onset = rng.gen_range(on - 0.2..on + 0.3);
    let span = 0.6 * seg.duration_s();
    let notes = (0..n)
        .map(|j| {
            let onset = if simultaneous {
                chord_onset
            } else {
                on - 0.2 + span * j as f64 / n as f64 + rng.gen_range(0.0..0.1)
            };
            // held at least until just after the pedal goes down, otherwise
            // the pedal has nothing to sustain and the pair is identical
            Note {
                onset_s: onset,
                offset_s: (onset + rng.gen_range(0.1..0.5)).max(on + 0.05),
                pitch: rng.gen_range(36..=84),
                velocity: rng.gen_range(50..=110),
            }
        })
        .collect();
    let cc64 = vec![
        ControlEvent {
            time_s: seg.onset_s,
            value: 127,
        },
        ControlEvent {
            time_s: seg.offset_s,
            value: 0,
        },
    ];
    let perf = MidiPerformance::from_events(notes, cc64).expect("generated score is valid");
    (perf, seg)
}

/// One rendered training pair, both clipped to the pedal segment.
#[derive(Debug, Clone, PartialEq)]
pub struct PairClip {
    pub score: MidiPerformance,
    pub segment: PedalSegment,
    pub pedal: Signal,
    pub no_pedal: Signal,
}

fn pair_clip(index: usize, cfg: &SynthConfig) -> Result<PairClip> {
    let mut rng = note_rng(cfg.seed, usize::MAX - index);
    let (score, segment) = random_score(&mut rng);
    let clip = |with| -> Result<Signal> {
        Ok(render(&score, with, cfg)?.slice_seconds(segment.onset_s, segment.offset_s))
    };
    Ok(PairClip {
        pedal: clip(true)?,
        no_pedal: clip(false)?,
        score,
        segment,
    })
}

/// Renders `n_pairs` random scores both ways, clipped to their pedal segment.
pub fn generate_pair_clips(n_pairs: usize, cfg: &SynthConfig) -> Result<Vec<PairClip>> {
    cfg.validate()?;
    if n_pairs == 0 {
        return Err(Error::invalid("n_pairs must be >= 1"));
    }
    (0..n_pairs).into_par_iter().map(|i| pair_clip(i, cfg)).collect()
}

/// Pedal (true) and no-pedal (false) melspectrograms, pairs adjacent,
/// each fitted to two seconds.
pub fn generate_paired_dataset(n_pairs: usize, cfg: &SynthConfig) -> Result<Vec<(MelSpectrogram, bool)>> {
    let clips = generate_pair_clips(n_pairs, cfg)?;
    let front = MelFrontEnd::new(DspConfig::default(), cfg.sample_rate)?;
    let mel = |s: &Signal| -> Result<MelSpectrogram> { front.melspectrogram(&fit_to_duration(s, EXCERPT_S)?) };
    let pairs: Vec<[(MelSpectrogram, bool); 2]> = clips
        .par_iter()
        .map(|c| Ok([(mel(&c.pedal)?, true), (mel(&c.no_pedal)?, false)]))
        .collect::<Result<_>>()?;
    Ok(pairs.into_iter().flatten().collect())
}

/// A longer passage with several pedal segments, for frame-wise detection.
///
/// Times are quantised through the MIDI file representation so that the
/// returned performance is exactly what a reader of the written `.mid`
/// sees.
pub fn random_passage(duration_s: f64, rng: &mut impl Rng) -> MidiPerformance {
    let mut cc64 = Vec::new();
    let mut t = rng.gen_range(0.0..0.6);
    while t < duration_s - 0.5 {
        let end = (t + rng.gen_range(0.8..2.5)).min(duration_s - 0.05);
        cc64.push(ControlEvent { time_s: t, value: 127 });
        cc64.push(ControlEvent { time_s: end, value: 0 });
        t = end + rng.gen_range(0.3..1.0);
    }
    let mut notes = Vec::new();
    let mut t = rng.gen_range(0.0..0.2);
    let mut pitch: i32 = rng.gen_range(48..=72);
    while t < duration_s - 0.3 {
        let chord = if rng.gen_bool(0.25) { rng.gen_range(2..=3) } else { 1 };
        let dur = rng.gen_range(0.1..0.6f64).min(duration_s - 0.05 - t);
        for c in 0..chord {
            notes.push(Note {
                onset_s: t,
                offset_s: t + dur,
                pitch: (pitch - 4 * c).clamp(36, 84) as u8,
                velocity: rng.gen_range(45..=105),
            });
        }
        pitch = (pitch + rng.gen_range(-5..=5)).clamp(40, 80);
        t += rng.gen_range(0.15..0.5);
    }
    let mut perf = MidiPerformance::from_events(notes, cc64).expect("generated passage is valid");
    perf.end_s = perf.end_s.max(duration_s);
    MidiPerformance::from_file(&perf.to_midi_file())
}
