//! Standard MIDI File reading and writing at the event-byte level.
//!
//! Events keep their original bytes (with the running status expanded) and
//! absolute tick, so dropping events and re-serializing leaves every other
//! event untouched.

use std::path::Path;

use crate::error::{Error, Result};

/// Sustain-pedal controller number.
pub const SUSTAIN_CC: u8 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Division {
    TicksPerQuarter(u16),
    /// SMPTE frames per second and ticks per frame.
    Smpte { fps: u8, ticks_per_frame: u8 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrackEvent {
    pub tick: u64,
    /// Full event bytes, status byte included.
    pub bytes: Vec<u8>,
}

impl TrackEvent {
    pub fn status(&self) -> u8 {
        self.bytes[0]
    }

    pub fn is_channel(&self) -> bool {
        (0x80..0xF0).contains(&self.status())
    }

    pub fn is_sustain_cc(&self) -> bool {
        self.status() & 0xF0 == 0xB0 && self.bytes.get(1) == Some(&SUSTAIN_CC)
    }

    /// Tempo in microseconds per quarter for a set-tempo meta event.
    pub fn tempo(&self) -> Option<u32> {
        match self.bytes.as_slice() {
            [0xFF, 0x51, 0x03, a, b, c] => Some(u32::from_be_bytes([0, *a, *b, *c])),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MidiFile {
    pub format: u16,
    pub division: Division,
    pub tracks: Vec<Vec<TrackEvent>>,
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::MidiParse {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.data.len() {
            return Err(self.err(format!("unexpected end of data (wanted {n} bytes)")));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn vlq(&mut self) -> Result<u32> {
        let mut value = 0u32;
        for _ in 0..4 {
            let b = self.u8()?;
            value = (value << 7) | (b & 0x7F) as u32;
            if b & 0x80 == 0 {
                return Ok(value);
            }
        }
        Err(self.err("variable-length quantity longer than 4 bytes"))
    }
}

fn write_vlq(out: &mut Vec<u8>, mut value: u32) {
    let mut buf = [0u8; 5];
    let mut i = buf.len() - 1;
    buf[i] = (value & 0x7F) as u8;
    value >>= 7;
    while value > 0 {
        i -= 1;
        buf[i] = (value & 0x7F) as u8 | 0x80;
        value >>= 7;
    }
    out.extend_from_slice(&buf[i..]);
}

fn channel_data_len(status: u8) -> usize {
    match status & 0xF0 {
        0xC0 | 0xD0 => 1,
        _ => 2,
    }
}

impl MidiFile {
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor { data: bytes, pos: 0 };
        if cur.take(4)? != b"MThd" {
            cur.pos = 0;
            return Err(cur.err("missing MThd header"));
        }
        let header_len = cur.u32()? as usize;
        if header_len < 6 {
            return Err(cur.err(format!("header length {header_len} < 6")));
        }
        let format = cur.u16()?;
        if format > 1 {
            return Err(cur.err(format!("unsupported SMF format {format}")));
        }
        let n_tracks = cur.u16()?;
        let raw_div = cur.u16()?;
        cur.take(header_len - 6)?;
        let division = if raw_div & 0x8000 != 0 {
            let fps = (-((raw_div >> 8) as u8 as i8)) as u8;
            Division::Smpte {
                fps,
                ticks_per_frame: (raw_div & 0xFF) as u8,
            }
        } else {
            if raw_div == 0 {
                return Err(cur.err("division of zero ticks per quarter"));
            }
            Division::TicksPerQuarter(raw_div)
        };

        let mut tracks = Vec::with_capacity(n_tracks as usize);
        while tracks.len() < n_tracks as usize {
            let chunk_start = cur.pos;
            let id = cur.take(4)?;
            let len = cur.u32()? as usize;
            if id != b"MTrk" {
                // unknown chunks are skipped
                cur.take(len)?;
                continue;
            }
            if cur.pos + len > bytes.len() {
                cur.pos = chunk_start;
                return Err(cur.err(format!("track chunk of {len} bytes overruns file")));
            }
            let mut track_cur = Cursor {
                data: &bytes[..cur.pos + len],
                pos: cur.pos,
            };
            tracks.push(parse_track(&mut track_cur)?);
            cur.pos += len;
        }
        Ok(MidiFile {
            format,
            division,
            tracks,
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read(path)?)
    }

    /// Serializes without running status.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(b"MThd");
        out.extend_from_slice(&6u32.to_be_bytes());
        out.extend_from_slice(&self.format.to_be_bytes());
        out.extend_from_slice(&(self.tracks.len() as u16).to_be_bytes());
        let div = match self.division {
            Division::TicksPerQuarter(t) => t,
            Division::Smpte {
                fps,
                ticks_per_frame,
            } => (((-(fps as i8)) as u8 as u16) << 8) | ticks_per_frame as u16,
        };
        out.extend_from_slice(&div.to_be_bytes());
        for track in &self.tracks {
            let mut body = Vec::new();
            let mut prev = 0u64;
            for ev in track {
                write_vlq(&mut body, (ev.tick - prev) as u32);
                body.extend_from_slice(&ev.bytes);
                prev = ev.tick;
            }
            out.extend_from_slice(b"MTrk");
            out.extend_from_slice(&(body.len() as u32).to_be_bytes());
            out.extend_from_slice(&body);
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    /// Copy with every sustain-pedal controller event removed.
    pub fn strip_sustain(&self) -> MidiFile {
        MidiFile {
            format: self.format,
            division: self.division,
            tracks: self
                .tracks
                .iter()
                .map(|t| t.iter().filter(|e| !e.is_sustain_cc()).cloned().collect())
                .collect(),
        }
    }

    /// All events of all tracks ordered by tick (stable within a tick).
    pub(crate) fn merged_events(&self) -> Vec<&TrackEvent> {
        let mut all: Vec<&TrackEvent> = self.tracks.iter().flatten().collect();
        all.sort_by_key(|e| e.tick);
        all
    }
}

fn parse_track(cur: &mut Cursor<'_>) -> Result<Vec<TrackEvent>> {
    let mut events = Vec::new();
    let mut tick = 0u64;
    let mut running: Option<u8> = None;
    while cur.pos < cur.data.len() {
        tick += cur.vlq()? as u64;
        let first = cur.u8()?;
        let mut bytes = Vec::new();
        match first {
            0xFF => {
                let kind = cur.u8()?;
                let len_start = cur.pos;
                let len = cur.vlq()? as usize;
                let len_bytes = &cur.data[len_start..cur.pos];
                bytes.extend_from_slice(&[0xFF, kind]);
                bytes.extend_from_slice(len_bytes);
                bytes.extend_from_slice(cur.take(len)?);
            }
            0xF0 | 0xF7 => {
                let len_start = cur.pos;
                let len = cur.vlq()? as usize;
                bytes.push(first);
                bytes.extend_from_slice(&cur.data[len_start..cur.pos]);
                bytes.extend_from_slice(cur.take(len)?);
                running = None;
            }
            0x80..=0xEF => {
                running = Some(first);
                bytes.push(first);
                bytes.extend_from_slice(cur.take(channel_data_len(first))?);
            }
            0x00..=0x7F => {
                let status = running.ok_or_else(|| {
                    cur.pos -= 1;
                    cur.err("data byte without running status")
                })?;
                bytes.push(status);
                bytes.push(first);
                if channel_data_len(status) == 2 {
                    bytes.push(cur.u8()?);
                }
            }
            _ => {
                cur.pos -= 1;
                return Err(cur.err(format!("unexpected status byte {first:#04x}")));
            }
        }
        if let Some(&b) = bytes.iter().skip(1).take(2).find(|&&b| b > 0x7F) {
            if (0x80..0xF0).contains(&bytes[0]) {
                return Err(cur.err(format!("channel data byte {b:#04x} out of range")));
            }
        }
        events.push(TrackEvent { tick, bytes });
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vlq_encoding_matches_reference_values() {
        for (v, expect) in [
            (0u32, vec![0x00]),
            (0x7F, vec![0x7F]),
            (0x80, vec![0x81, 0x00]),
            (0x3FFF, vec![0xFF, 0x7F]),
            (0x0FFF_FFFF, vec![0xFF, 0xFF, 0xFF, 0x7F]),
        ] {
            let mut out = Vec::new();
            write_vlq(&mut out, v);
            assert_eq!(out, expect);
            let mut c = Cursor { data: &out, pos: 0 };
            assert_eq!(c.vlq().unwrap(), v);
        }
    }

    #[test]
    fn running_status_is_expanded() {
        let mut bytes = b"MThd\x00\x00\x00\x06\x00\x00\x00\x01\x01\xE0MTrk".to_vec();
        let body = [
            0x00, 0x90, 60, 100, // note on
            0x10, 64, 90, // running status note on
            0x00, 0xFF, 0x2F, 0x00,
        ];
        bytes.extend_from_slice(&(body.len() as u32).to_be_bytes());
        bytes.extend_from_slice(&body);
        let f = MidiFile::parse(&bytes).unwrap();
        assert_eq!(f.tracks[0][1].bytes, vec![0x90, 64, 90]);
        assert_eq!(f.tracks[0][1].tick, 16);
    }

    #[test]
    fn truncated_and_bad_headers_report_offsets() {
        match MidiFile::parse(b"RIFF0000") {
            Err(Error::MidiParse { offset, .. }) => assert_eq!(offset, 0),
            other => panic!("{other:?}"),
        }
        let mut bytes = b"MThd\x00\x00\x00\x06\x00\x00\x00\x01\x01\xE0MTrk".to_vec();
        bytes.extend_from_slice(&100u32.to_be_bytes());
        bytes.extend_from_slice(&[0x00, 0x90]);
        match MidiFile::parse(&bytes) {
            Err(Error::MidiParse { offset, .. }) => assert_eq!(offset, 14),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn smpte_division_round_trips() {
        let f = MidiFile {
            format: 0,
            division: Division::Smpte {
                fps: 25,
                ticks_per_frame: 40,
            },
            tracks: vec![vec![TrackEvent {
                tick: 0,
                bytes: vec![0xFF, 0x2F, 0x00],
            }]],
        };
        assert_eq!(MidiFile::parse(&f.to_bytes()).unwrap(), f);
    }
}
