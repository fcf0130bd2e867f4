//! MIDI performances and sustain-pedal segmentation.

mod manifest;
mod smf;

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};

pub use manifest::{build_excerpt_manifest, ExcerptLabel, ExcerptManifest, ManifestEntry, TaggedPerformance};
pub use smf::{Division, MidiFile, TrackEvent, SUSTAIN_CC};

/// Default on/off threshold for CC64 values (`value >= threshold` is on).
pub const PEDAL_THRESHOLD: u8 = 64;

const DEFAULT_TEMPO: u32 = 500_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Note {
    pub onset_s: f64,
    pub offset_s: f64,
    pub pitch: u8,
    pub velocity: u8,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlEvent {
    pub time_s: f64,
    pub value: u8,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PedalSegment {
    pub onset_s: f64,
    pub offset_s: f64,
}

impl PedalSegment {
    pub fn duration_s(&self) -> f64 {
        self.offset_s - self.onset_s
    }

    /// Closed-left, open-right membership.
    pub fn contains(&self, t: f64) -> bool {
        t >= self.onset_s && t < self.offset_s
    }

    pub fn overlaps(&self, start: f64, end: f64) -> bool {
        start < self.offset_s && end > self.onset_s
    }
}

/// Notes and sustain-pedal events of a performance, in seconds.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MidiPerformance {
    pub notes: Vec<Note>,
    pub cc64: Vec<ControlEvent>,
    /// `(tick, microseconds per quarter)`, empty for programmatic scores.
    pub tempo_map: Vec<(u64, u32)>,
    /// Time of the last event; closes a trailing pedal-on state.
    pub end_s: f64,
}

impl MidiPerformance {
    /// Builds a performance from notes and pedal events, sorting both and
    /// setting `end_s` to the last event time.
    pub fn from_events(mut notes: Vec<Note>, mut cc64: Vec<ControlEvent>) -> Result<Self> {
        for n in &notes {
            if !(n.onset_s.is_finite() && n.offset_s.is_finite() && n.onset_s >= 0.0) {
                return Err(Error::invalid("note times must be finite and non-negative"));
            }
            if n.offset_s < n.onset_s {
                return Err(Error::invalid("note offset precedes onset"));
            }
            if n.pitch > 127 || n.velocity > 127 {
                return Err(Error::invalid("pitch and velocity must lie in 0..=127"));
            }
        }
        if cc64.iter().any(|c| !(c.time_s.is_finite() && c.time_s >= 0.0) || c.value > 127) {
            return Err(Error::invalid("bad controller event"));
        }
        notes.sort_by(|a, b| a.onset_s.total_cmp(&b.onset_s).then(a.pitch.cmp(&b.pitch)));
        cc64.sort_by(|a, b| a.time_s.total_cmp(&b.time_s));
        let end_s = notes
            .iter()
            .map(|n| n.offset_s)
            .chain(cc64.iter().map(|c| c.time_s))
            .fold(0.0, f64::max);
        Ok(MidiPerformance {
            notes,
            cc64,
            tempo_map: Vec::new(),
            end_s,
        })
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        Ok(Self::from_file(&MidiFile::parse(bytes)?))
    }

    pub fn from_file(file: &MidiFile) -> Self {
        let events = file.merged_events();
        let mut tempo_map: Vec<(u64, u32)> = events
            .iter()
            .filter_map(|e| e.tempo().map(|t| (e.tick, t)))
            .collect();
        tempo_map.dedup_by_key(|(tick, _)| *tick);
        let clock = TickClock::new(file.division, &tempo_map);

        let mut notes = Vec::new();
        let mut open: HashMap<(u8, u8), VecDeque<(f64, u8)>> = HashMap::new();
        let mut cc64 = Vec::new();
        let mut end_s = 0.0f64;
        for ev in &events {
            let t = clock.seconds(ev.tick);
            end_s = end_s.max(t);
            if !ev.is_channel() {
                continue;
            }
            let status = ev.status();
            let channel = status & 0x0F;
            match (status & 0xF0, &ev.bytes[1..]) {
                (0x90, &[pitch, vel]) if vel > 0 => {
                    open.entry((channel, pitch)).or_default().push_back((t, vel));
                }
                (0x80, &[pitch, _]) | (0x90, &[pitch, _]) => {
                    if let Some((onset, velocity)) =
                        open.get_mut(&(channel, pitch)).and_then(|q| q.pop_front())
                    {
                        notes.push(Note {
                            onset_s: onset,
                            offset_s: t,
                            pitch,
                            velocity,
                        });
                    }
                }
                (0xB0, &[SUSTAIN_CC, value]) => cc64.push(ControlEvent { time_s: t, value }),
                _ => {}
            }
        }
        for ((_, pitch), queue) in open {
            for (onset, velocity) in queue {
                notes.push(Note {
                    onset_s: onset,
                    offset_s: end_s,
                    pitch,
                    velocity,
                });
            }
        }
        notes.sort_by(|a, b| a.onset_s.total_cmp(&b.onset_s).then(a.pitch.cmp(&b.pitch)));
        MidiPerformance {
            notes,
            cc64,
            tempo_map,
            end_s,
        }
    }

    /// Single-track SMF at 480 ticks per quarter and 120 bpm (960 ticks
    /// per second), channel 0. Times are rounded to the nearest tick.
    pub fn to_midi_file(&self) -> MidiFile {
        const TICKS_PER_S: f64 = 960.0;
        let tick = |t: f64| (t * TICKS_PER_S).round() as u64;
        // (tick, order at equal ticks, bytes): offs, then pedal, then ons
        let mut events: Vec<(u64, u8, Vec<u8>)> = Vec::new();
        for n in &self.notes {
            events.push((tick(n.onset_s), 2, vec![0x90, n.pitch, n.velocity.max(1)]));
            events.push((tick(n.offset_s), 0, vec![0x80, n.pitch, 0]));
        }
        for c in &self.cc64 {
            events.push((tick(c.time_s), 1, vec![0xB0, SUSTAIN_CC, c.value]));
        }
        events.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut track = vec![TrackEvent {
            tick: 0,
            bytes: vec![0xFF, 0x51, 0x03, 0x07, 0xA1, 0x20],
        }];
        track.extend(events.into_iter().map(|(tick, _, bytes)| TrackEvent { tick, bytes }));
        let end = track.last().map_or(0, |e| e.tick).max(tick(self.end_s));
        track.push(TrackEvent {
            tick: end,
            bytes: vec![0xFF, 0x2F, 0x00],
        });
        MidiFile {
            format: 0,
            division: Division::TicksPerQuarter(480),
            tracks: vec![track],
        }
    }

    pub fn pedal_segments(&self, threshold: u8) -> Vec<PedalSegment> {
        pedal_segments(&self.cc64, threshold, self.end_s)
    }

    pub fn is_empty(&self) -> bool {
        self.notes.is_empty()
    }
}

/// Converts ticks to seconds through a tempo map.
struct TickClock {
    /// (tick, seconds at tick, seconds per tick from here on)
    breakpoints: Vec<(u64, f64, f64)>,
}

impl TickClock {
    fn new(division: Division, tempo_map: &[(u64, u32)]) -> Self {
        match division {
            Division::Smpte {
                fps,
                ticks_per_frame,
            } => {
                let spt = 1.0 / (fps.max(1) as f64 * ticks_per_frame.max(1) as f64);
                TickClock {
                    breakpoints: vec![(0, 0.0, spt)],
                }
            }
            Division::TicksPerQuarter(tpq) => {
                let per_tick = |tempo: u32| tempo as f64 * 1e-6 / tpq as f64;
                let mut breakpoints = vec![(0u64, 0.0, per_tick(DEFAULT_TEMPO))];
                for &(tick, tempo) in tempo_map {
                    let &(t0, s0, spt) = breakpoints.last().unwrap();
                    let s = s0 + (tick - t0) as f64 * spt;
                    if tick == t0 {
                        breakpoints.pop();
                    }
                    breakpoints.push((tick, s, per_tick(tempo)));
                }
                TickClock { breakpoints }
            }
        }
    }

    fn seconds(&self, tick: u64) -> f64 {
        let idx = self.breakpoints.partition_point(|&(t, _, _)| t <= tick) - 1;
        let (t0, s0, spt) = self.breakpoints[idx];
        s0 + (tick - t0) as f64 * spt
    }
}

/// Maximal pedal-on intervals from time-sorted CC64 events.
///
/// A value `>= threshold` is on. A pedal still on after the last event is
/// closed at `end_s`; zero-length intervals are dropped.
pub fn pedal_segments(cc64: &[ControlEvent], threshold: u8, end_s: f64) -> Vec<PedalSegment> {
    let mut segments = Vec::new();
    let mut on_since: Option<f64> = None;
    for ev in cc64 {
        let on = ev.value >= threshold;
        match (on_since, on) {
            (None, true) => on_since = Some(ev.time_s),
            (Some(start), false) => {
                if ev.time_s > start {
                    segments.push(PedalSegment {
                        onset_s: start,
                        offset_s: ev.time_s,
                    });
                }
                on_since = None;
            }
            _ => {}
        }
    }
    if let Some(start) = on_since {
        let last = cc64.last().map_or(end_s, |e| e.time_s.max(end_s));
        if last > start {
            segments.push(PedalSegment {
                onset_s: start,
                offset_s: last,
            });
        }
    }
    segments
}

/// Same performance without sustain-pedal events.
pub fn strip_sustain(perf: &MidiPerformance) -> MidiPerformance {
    MidiPerformance {
        cc64: Vec::new(),
        ..perf.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cc(pairs: &[(f64, u8)]) -> Vec<ControlEvent> {
        pairs
            .iter()
            .map(|&(time_s, value)| ControlEvent { time_s, value })
            .collect()
    }

    fn seg(a: f64, b: f64) -> PedalSegment {
        PedalSegment {
            onset_s: a,
            offset_s: b,
        }
    }

    fn smf(track_body: &[u8]) -> Vec<u8> {
        let mut bytes = b"MThd\x00\x00\x00\x06\x00\x00\x00\x01\x01\xE0MTrk".to_vec();
        bytes.extend_from_slice(&(track_body.len() as u32).to_be_bytes());
        bytes.extend_from_slice(track_body);
        bytes
    }

    #[test]
    fn single_note_at_default_tempo() {
        let body = [
            0x00, 0xFF, 0x51, 0x03, 0x07, 0xA1, 0x20, // 500000 us/quarter
            0x00, 0x90, 60, 80, //
            0x83, 0x60, 0x80, 60, 0, // 480 ticks later
            0x00, 0xFF, 0x2F, 0x00,
        ];
        let perf = MidiPerformance::parse(&smf(&body)).unwrap();
        assert_eq!(perf.notes.len(), 1);
        assert_eq!(perf.notes[0].onset_s, 0.0);
        assert!((perf.notes[0].offset_s - 0.5).abs() < 1e-12);
        assert!(perf.cc64.is_empty());
        assert_eq!(perf.tempo_map, vec![(0, 500_000)]);
    }

    #[test]
    fn velocity_zero_note_on_closes_note() {
        let body = [
            0x00, 0x90, 67, 90, //
            0x81, 0x70, 0x90, 67, 0, // 240 ticks
            0x00, 0xFF, 0x2F, 0x00,
        ];
        let perf = MidiPerformance::parse(&smf(&body)).unwrap();
        assert_eq!(perf.notes.len(), 1);
        assert!((perf.notes[0].offset_s - 0.25).abs() < 1e-12);
        assert_eq!(perf.notes[0].velocity, 90);
    }

    #[test]
    fn tempo_change_mid_track() {
        // 480 ticks at 500000 then 480 ticks at 1000000 -> 0.5 s + 1.0 s
        let body = [
            0x00, 0x90, 60, 80, //
            0x83, 0x60, 0xFF, 0x51, 0x03, 0x0F, 0x42, 0x40, //
            0x83, 0x60, 0x80, 60, 0, //
            0x00, 0xFF, 0x2F, 0x00,
        ];
        let perf = MidiPerformance::parse(&smf(&body)).unwrap();
        assert!((perf.notes[0].offset_s - 1.5).abs() < 1e-12);
    }

    #[test]
    fn threshold_segments() {
        assert_eq!(
            pedal_segments(&cc(&[(0.0, 0), (1.0, 100), (3.0, 20)]), 64, 5.0),
            vec![seg(1.0, 3.0)]
        );
        assert!(pedal_segments(&cc(&[(0.0, 10), (1.0, 63)]), 64, 5.0).is_empty());
        assert_eq!(
            pedal_segments(&cc(&[(0.5, 64), (0.9, 63), (2.0, 127), (2.5, 0)]), 64, 5.0),
            vec![seg(0.5, 0.9), seg(2.0, 2.5)]
        );
    }

    #[test]
    fn trailing_on_closes_at_end() {
        assert_eq!(
            pedal_segments(&cc(&[(1.0, 127), (1.5, 90)]), 64, 4.0),
            vec![seg(1.0, 4.0)]
        );
    }

    #[test]
    fn strip_is_idempotent_and_clears_pedal() {
        let perf = MidiPerformance::from_events(
            vec![Note {
                onset_s: 0.0,
                offset_s: 1.0,
                pitch: 60,
                velocity: 70,
            }],
            (0..10).map(|i| ControlEvent { time_s: i as f64 * 0.1, value: (i * 13) as u8 }).collect(),
        )
        .unwrap();
        let stripped = strip_sustain(&perf);
        assert_eq!(stripped.cc64.len(), 0);
        assert_eq!(stripped.notes, perf.notes);
        assert!(stripped.pedal_segments(64).is_empty());
        assert_eq!(strip_sustain(&stripped), stripped);
    }

    #[test]
    fn file_without_pedal_round_trips_byte_identically() {
        let body = [
            0x00, 0xFF, 0x51, 0x03, 0x07, 0xA1, 0x20, //
            0x00, 0x90, 60, 80, //
            0x83, 0x60, 0x80, 60, 0, //
            0x00, 0xFF, 0x2F, 0x00,
        ];
        let bytes = smf(&body);
        let file = MidiFile::parse(&bytes).unwrap();
        assert_eq!(file.strip_sustain().to_bytes(), bytes);
    }

    proptest::proptest! {
        #[test]
        fn segments_sorted_and_disjoint(values in proptest::collection::vec(0u8..128, 0..40)) {
            let events: Vec<ControlEvent> = values
                .iter()
                .enumerate()
                .map(|(i, &v)| ControlEvent { time_s: i as f64 * 0.25, value: v })
                .collect();
            let segs = pedal_segments(&events, 64, 20.0);
            for s in &segs {
                proptest::prop_assert!(s.offset_s > s.onset_s);
            }
            for w in segs.windows(2) {
                proptest::prop_assert!(w[0].offset_s <= w[1].onset_s);
            }
        }
    }
}
