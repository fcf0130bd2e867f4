//! Renders one random score with and without the sustain pedal and writes
//! both clips as WAV files.

use sustain_pedal::dsp::write_wav;
use sustain_pedal::synth::{generate_pair_clips, SynthConfig};

fn main() -> sustain_pedal::Result<()> {
    let out = std::env::temp_dir();
    let clip = generate_pair_clips(1, &SynthConfig::default())?.remove(0);
    println!(
        "{} notes, pedal segment {:.2}..{:.2} s",
        clip.score.notes.len(),
        clip.segment.onset_s,
        clip.segment.offset_s
    );
    let rms = |s: &[f64]| (s.iter().map(|v| v * v).sum::<f64>() / s.len() as f64).sqrt();
    println!("rms pedal {:.4}, no pedal {:.4}", rms(&clip.pedal.samples), rms(&clip.no_pedal.samples));
    write_wav(out.join("pair_pedal.wav"), &clip.pedal)?;
    write_wav(out.join("pair_no_pedal.wav"), &clip.no_pedal)?;
    println!("wrote {}", out.join("pair_*.wav").display());
    Ok(())
}
