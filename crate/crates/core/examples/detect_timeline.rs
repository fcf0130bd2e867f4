//! Frame-wise detection with a freshly trained SVM and timeline export as
//! CSV and SVG.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sustain_pedal::dsp::DspConfig;
use sustain_pedal::features::{analyze_frames, FrameConfig};
use sustain_pedal::midi::PEDAL_THRESHOLD;
use sustain_pedal::nn::{Network, NetworkConfig};
use sustain_pedal::pipeline::{detect, frame_ground_truth, timeline_to_csv, timeline_to_svg, Method, Models};
use sustain_pedal::svm::{train_svm, SvmParams};
use sustain_pedal::synth::{random_passage, render, SynthConfig};

fn main() -> sustain_pedal::Result<()> {
    let network: Network<f32> = Network::new(NetworkConfig::multi_reduced(6, 2), 1)?;
    let (frames, dsp) = (FrameConfig::default(), DspConfig::default());
    let synth = SynthConfig::default();
    let passage = |seed| -> sustain_pedal::Result<_> {
        let perf = random_passage(4.0, &mut ChaCha8Rng::seed_from_u64(seed));
        Ok((render(&perf, true, &synth)?.slice_seconds(0.0, 4.0), perf.pedal_segments(PEDAL_THRESHOLD)))
    };

    let (train_sig, train_segs) = passage(10)?;
    let a = analyze_frames(&network, &train_sig, "train", &frames, &dsp)?;
    let y: Vec<i8> = frame_ground_truth(&train_segs, &a.times).iter().map(|&t| if t { 1 } else { -1 }).collect();
    let svm = train_svm(&a.features, &y, &SvmParams::new(2.0, 1.0 / network.feature_len() as f64))?;

    let (sig, segs) = passage(11)?;
    let models = Models { network: Some(network), svm: Some(svm), ..Models::default() };
    let timeline = detect(&sig, "test", Method::Svm, &models, &frames, &dsp)?;
    let truth = frame_ground_truth(&segs, &timeline.times());
    print!("{}", timeline_to_csv(&timeline, Some(&truth))?);
    let svg = std::env::temp_dir().join("timeline.svg");
    std::fs::write(&svg, timeline_to_svg(&timeline, Some(&truth), frames.hop_s))?;
    println!("wrote {}", svg.display());
    Ok(())
}
