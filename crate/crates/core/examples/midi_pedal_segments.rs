//! Pedal segments from a MIDI performance, and the same file with every
//! sustain controller removed.
//!
//! `cargo run --example midi_pedal_segments [file.mid]`

use sustain_pedal::midi::{ControlEvent, MidiFile, MidiPerformance, Note, PEDAL_THRESHOLD};

fn main() -> sustain_pedal::Result<()> {
    let file = match std::env::args().nth(1) {
        Some(path) => MidiFile::read(path)?,
        None => {
            let notes = vec![Note { onset_s: 0.0, offset_s: 1.5, pitch: 60, velocity: 80 }];
            let cc64 = [(0.2, 127), (1.0, 64), (1.4, 63), (2.0, 100)]
                .map(|(time_s, value)| ControlEvent { time_s, value })
                .to_vec();
            MidiPerformance::from_events(notes, cc64)?.to_midi_file()
        }
    };
    let perf = MidiPerformance::from_file(&file);
    println!("{} notes, {:.2} s", perf.notes.len(), perf.end_s);
    for s in perf.pedal_segments(PEDAL_THRESHOLD) {
        println!("pedal on {:.3} .. {:.3} s", s.onset_s, s.offset_s);
    }

    let dry = file.strip_sustain();
    let events = |f: &MidiFile| f.tracks.iter().map(Vec::len).sum::<usize>();
    println!("events: {} -> {} after stripping sustain", events(&file), events(&dry));
    Ok(())
}
