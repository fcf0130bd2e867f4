//! On-disk layouts: excerpt sets (WAV files plus a manifest) and passage
//! corpora (`<id>.wav` with a matching `<id>.mid`).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dsp::{fit_to_duration, read_wav, write_wav, DspConfig, MelFrontEnd, MelSpectrogram, Signal, PIPELINE_SAMPLE_RATE};
use crate::error::{Error, Result};
use crate::midi::{ExcerptLabel, ExcerptManifest, ManifestEntry, MidiFile, MidiPerformance, TaggedPerformance, PEDAL_THRESHOLD};
use crate::pipeline::Passage;
use crate::synth::{generate_pair_clips, random_passage, render, SynthConfig, EXCERPT_S};

pub const MANIFEST_FILE: &str = "manifest.csv";

/// WAV file name of a rendered excerpt.
pub fn excerpt_file_name(e: &ManifestEntry) -> String {
    format!("{}_{:.3}_{}.wav", e.source_id, e.onset_s, e.label)
}

fn read_pipeline_wav(path: &Path) -> Result<Signal> {
    let s = read_wav(path)?;
    Ok(if s.sample_rate == PIPELINE_SAMPLE_RATE {
        s
    } else {
        s.resample_linear(PIPELINE_SAMPLE_RATE)
    })
}

fn sorted_files(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case(ext)))
        .collect();
    out.sort();
    Ok(out)
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Renders `n_pairs` synthetic pairs into `dir` with a manifest.
pub fn write_synthetic_pairs(dir: &Path, n_pairs: usize, cfg: &SynthConfig) -> Result<ExcerptManifest> {
    fs::create_dir_all(dir)?;
    let clips = generate_pair_clips(n_pairs, cfg)?;
    let mut manifest = ExcerptManifest::default();
    for (i, clip) in clips.iter().enumerate() {
        for (label, signal) in [(ExcerptLabel::Pedal, &clip.pedal), (ExcerptLabel::NoPedal, &clip.no_pedal)] {
            let entry = ManifestEntry {
                source_id: format!("pair{:04}", i + 1),
                composer_id: "synthetic".into(),
                onset_s: clip.segment.onset_s,
                offset_s: clip.segment.offset_s,
                label,
            };
            write_wav(dir.join(excerpt_file_name(&entry)), signal)?;
            manifest.entries.push(entry);
        }
    }
    manifest.write(dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

/// Renders the excerpts of a manifest from `<source_id>.mid` files in
/// `midi_dir`: pedal entries from the original, no-pedal entries with
/// sustain ignored.
pub fn render_manifest(manifest: &ExcerptManifest, midi_dir: &Path, out: &Path, cfg: &SynthConfig) -> Result<()> {
    fs::create_dir_all(out)?;
    let mut by_source: BTreeMap<&str, Vec<&ManifestEntry>> = BTreeMap::new();
    for e in &manifest.entries {
        by_source.entry(e.source_id.as_str()).or_default().push(e);
    }
    by_source.into_par_iter().try_for_each(|(source, entries)| -> Result<()> {
        let perf = MidiPerformance::from_file(&MidiFile::read(midi_dir.join(format!("{source}.mid")))?);
        let pedal = render(&perf, true, cfg)?;
        let dry = render(&perf, false, cfg)?;
        for e in entries {
            let full = if e.label == ExcerptLabel::Pedal { &pedal } else { &dry };
            write_wav(out.join(excerpt_file_name(e)), &full.slice_seconds(e.onset_s, e.offset_s))?;
        }
        Ok(())
    })?;
    manifest.write(out.join(MANIFEST_FILE))
}

/// Loads an excerpt set as two-second melspectrograms with labels.
pub fn read_excerpt_set(dir: &Path, dsp: &DspConfig) -> Result<Vec<(MelSpectrogram, bool)>> {
    let manifest = ExcerptManifest::read(dir.join(MANIFEST_FILE))?;
    if manifest.entries.is_empty() {
        return Err(Error::invalid(format!("{} lists no excerpts", dir.join(MANIFEST_FILE).display())));
    }
    let front = MelFrontEnd::new(dsp.clone(), PIPELINE_SAMPLE_RATE)?;
    manifest
        .entries
        .par_iter()
        .map(|e| {
            let signal = read_pipeline_wav(&dir.join(excerpt_file_name(e)))?;
            Ok((front.melspectrogram(&fit_to_duration(&signal, EXCERPT_S)?)?, e.label == ExcerptLabel::Pedal))
        })
        .collect()
}

/// Reads every `.mid` file in `dir`. The composer id is the part of the
/// file stem before the first `_`, or the whole stem.
pub fn read_midi_dir(dir: &Path) -> Result<Vec<TaggedPerformance>> {
    sorted_files(dir, "mid")?
        .into_iter()
        .map(|p| {
            let source_id = stem(&p);
            let composer_id = source_id.split('_').next().unwrap_or_default().to_string();
            Ok(TaggedPerformance {
                performance: MidiPerformance::from_file(&MidiFile::read(&p)?),
                source_id,
                composer_id,
            })
        })
        .collect()
}

/// Random passages rendered with the given instrument, ids `passage01`...
pub fn synthetic_passages(n: usize, duration_s: f64, cfg: &SynthConfig) -> Result<Vec<(Passage, MidiPerformance)>> {
    cfg.validate()?;
    if n == 0 || !(duration_s >= 1.0) {
        return Err(Error::invalid("need at least one passage of at least 1 s"));
    }
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x5EED_0000 + i as u64));
            let perf = random_passage(duration_s, &mut rng);
            let signal = render(&perf, true, cfg)?.slice_seconds(0.0, duration_s);
            Ok((
                Passage {
                    id: format!("passage{:02}", i + 1),
                    signal,
                    segments: perf.pedal_segments(PEDAL_THRESHOLD),
                },
                perf,
            ))
        })
        .collect()
}

pub fn write_corpus(dir: &Path, passages: &[(Passage, MidiPerformance)]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (p, perf) in passages {
        write_wav(dir.join(format!("{}.wav", p.id)), &p.signal)?;
        perf.to_midi_file().write(dir.join(format!("{}.mid", p.id)))?;
    }
    Ok(())
}

/// Loads `<id>.wav` / `<id>.mid` pairs, sorted by id. A WAV without a
/// matching MIDI file is an error.
pub fn read_corpus(dir: &Path) -> Result<Vec<Passage>> {
    let wavs = sorted_files(dir, "wav")?;
    if wavs.is_empty() {
        return Err(Error::invalid(format!("no .wav files in {}", dir.display())));
    }
    wavs.into_iter()
        .map(|wav| {
            let id = stem(&wav);
            let mid = wav.with_extension("mid");
            if !mid.exists() {
                return Err(Error::invalid(format!("{} has no matching {}", wav.display(), mid.display())));
            }
            let perf = MidiPerformance::from_file(&MidiFile::read(&mid)?);
            Ok(Passage {
                signal: read_pipeline_wav(&wav)?,
                segments: perf.pedal_segments(PEDAL_THRESHOLD),
                id,
            })
        })
        .collect()
}
