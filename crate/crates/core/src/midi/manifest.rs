use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{MidiPerformance, PEDAL_THRESHOLD};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExcerptLabel {
    Pedal,
    NoPedal,
}

impl fmt::Display for ExcerptLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExcerptLabel::Pedal => "pedal",
            ExcerptLabel::NoPedal => "no-pedal",
        })
    }
}

impl FromStr for ExcerptLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pedal" => Ok(ExcerptLabel::Pedal),
            "no-pedal" => Ok(ExcerptLabel::NoPedal),
            other => Err(Error::Parse(format!("unknown excerpt label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub source_id: String,
    pub composer_id: String,
    pub onset_s: f64,
    pub offset_s: f64,
    pub label: ExcerptLabel,
}

/// Paired pedal/no-pedal excerpt list. Entries come in twins: a `pedal`
/// entry immediately followed by its `no-pedal` counterpart.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExcerptManifest {
    pub entries: Vec<ManifestEntry>,
}

pub const MANIFEST_HEADER: &str = "source_id,composer_id,onset_s,offset_s,label";

impl ExcerptManifest {
    pub fn n_pairs(&self) -> usize {
        self.entries.len() / 2
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(MANIFEST_HEADER);
        out.push('\n');
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.source_id, e.composer_id, e.onset_s, e.offset_s, e.label
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(MANIFEST_HEADER) {
            return Err(Error::Parse("manifest header mismatch".into()));
        }
        let entries = lines
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, line)| {
                let cols: Vec<&str> = line.split(',').collect();
                let bad = || Error::Parse(format!("manifest row {}: {line:?}", i + 1));
                if cols.len() != 5 {
                    return Err(bad());
                }
                Ok(ManifestEntry {
                    source_id: cols[0].to_string(),
                    composer_id: cols[1].to_string(),
                    onset_s: cols[2].parse().map_err(|_| bad())?,
                    offset_s: cols[3].parse().map_err(|_| bad())?,
                    label: cols[4].parse()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ExcerptManifest { entries })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

/// A performance with its provenance.
#[derive(Debug, Clone)]
pub struct TaggedPerformance {
    pub source_id: String,
    pub composer_id: String,
    pub performance: MidiPerformance,
}

/// Builds the paired excerpt manifest.
///
/// Each pedal segment yields one pair. Per composer at most
/// `cap_per_composer` pairs are kept, drawn with a seeded shuffle; composers
/// with fewer contribute all of theirs. Segments shorter than
/// `min_duration_s` are dropped when a minimum is given.
pub fn build_excerpt_manifest(
    perfs: &[TaggedPerformance],
    cap_per_composer: usize,
    seed: u64,
    min_duration_s: Option<f64>,
) -> ExcerptManifest {
    let mut by_composer: BTreeMap<&str, Vec<(&str, f64, f64)>> = BTreeMap::new();
    for tp in perfs {
        let list = by_composer.entry(tp.composer_id.as_str()).or_default();
        for seg in tp.performance.pedal_segments(PEDAL_THRESHOLD) {
            if min_duration_s.map_or(true, |m| seg.duration_s() >= m) {
                list.push((tp.source_id.as_str(), seg.onset_s, seg.offset_s));
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::new();
    for (composer, pairs) in by_composer {
        let mut chosen: Vec<usize> = (0..pairs.len()).collect();
        if pairs.len() > cap_per_composer {
            chosen.shuffle(&mut rng);
            chosen.truncate(cap_per_composer);
            chosen.sort_unstable();
        }
        for i in chosen {
            let (source, onset_s, offset_s) = pairs[i];
            for label in [ExcerptLabel::Pedal, ExcerptLabel::NoPedal] {
                entries.push(ManifestEntry {
                    source_id: source.to_string(),
                    composer_id: composer.to_string(),
                    onset_s,
                    offset_s,
                    label,
                });
            }
        }
    }
    ExcerptManifest { entries }
}
