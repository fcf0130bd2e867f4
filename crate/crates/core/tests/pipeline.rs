use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sustain_pedal::dsp::{DspConfig, Signal, PIPELINE_SAMPLE_RATE};
use sustain_pedal::features::{analyze_frames, FrameConfig};
use sustain_pedal::midi::{ControlEvent, MidiPerformance, Note, PedalSegment, PEDAL_THRESHOLD};
use sustain_pedal::nn::{Network, NetworkConfig};
use sustain_pedal::pipeline::{detect, frame_ground_truth, logo_cv, CvConfig, Method, Models, Passage};
use sustain_pedal::svm::{train_svm, GridSpec, SvmParams};
use sustain_pedal::synth::{random_passage, render, SynthConfig};
use sustain_pedal::Error;

fn net() -> Network<f32> {
    Network::new(NetworkConfig::multi_reduced(6, 2), 7).unwrap()
}

/// Repeated notes over `secs` seconds, pedal held throughout or never.
fn steady(secs: f64, pedal: bool, seed: u64) -> Signal {
    let notes: Vec<Note> = (0..(secs / 0.4) as usize)
        .map(|i| Note {
            onset_s: 0.4 * i as f64,
            offset_s: 0.4 * i as f64 + 0.2,
            pitch: [48, 55, 60, 64, 67, 72][i % 6],
            velocity: 90,
        })
        .collect();
    let cc64 = vec![ControlEvent { time_s: 0.0, value: 127 }, ControlEvent { time_s: secs, value: 0 }];
    let perf = MidiPerformance::from_events(notes, cc64).unwrap();
    let cfg = SynthConfig { seed, ..SynthConfig::default() };
    render(&perf, pedal, &cfg).unwrap().slice_seconds(0.0, secs)
}

#[test]
fn pedal_held_throughout_is_detected_on_every_frame() {
    let network = net();
    let (frames, dsp) = (FrameConfig::default(), DspConfig::default());
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (seed, pedal) in [(1, true), (2, false), (3, true), (4, false)] {
        let a = analyze_frames(&network, &steady(3.0, pedal, seed), "train", &frames, &dsp).unwrap();
        y.extend(std::iter::repeat(if pedal { 1i8 } else { -1 }).take(a.len()));
        x.extend(a.features);
    }
    let svm = train_svm(&x, &y, &SvmParams::new(8.0, 1.0 / 12.0)).unwrap();
    let models = Models { network: Some(network), svm: Some(svm), finetuned: None };
    let timeline = detect(&steady(3.0, true, 9), "held", Method::Svm, &models, &frames, &dsp).unwrap();
    assert!(timeline.frames.iter().all(|f| f.on), "{:?}", timeline.labels());
}

#[test]
fn ten_seconds_give_ninety_eight_frames() {
    let models = Models { network: Some(net()), ..Models::default() };
    let signal = Signal::new(vec![0.0; 10 * PIPELINE_SAMPLE_RATE as usize], PIPELINE_SAMPLE_RATE).unwrap();
    let t = detect(&signal, "silence", Method::Direct, &models, &FrameConfig::default(), &DspConfig::default()).unwrap();
    assert_eq!(t.frames.len(), 98);
    for w in t.frames.windows(2) {
        assert!((w[1].time_s - w[0].time_s - 0.1).abs() < 1e-9);
    }
    assert!(t.frames.iter().all(|f| f.score.is_finite()));
}

#[test]
fn missing_models_are_reported() {
    let signal = Signal::new(vec![0.1; PIPELINE_SAMPLE_RATE as usize], PIPELINE_SAMPLE_RATE).unwrap();
    let (f, d) = (FrameConfig::default(), DspConfig::default());
    let only_net = Models { network: Some(net()), ..Models::default() };
    for (models, method) in [
        (&Models::default(), Method::Direct),
        (&only_net, Method::Svm),
        (&only_net, Method::Finetune),
    ] {
        let err = detect(&signal, "x", method, models, &f, &d).unwrap_err();
        assert!(matches!(err, Error::MissingModel(_)), "{err}");
        assert!(err.is_model_error());
    }
}

#[test]
fn logo_folds_partition_the_passages() {
    let synth = SynthConfig::target_instrument(3);
    let passages: Vec<Passage> = (0..3)
        .map(|i| {
            let perf = random_passage(6.0, &mut ChaCha8Rng::seed_from_u64(40 + i));
            Passage {
                id: format!("p{i}"),
                signal: render(&perf, true, &synth).unwrap().slice_seconds(0.0, 6.0),
                segments: perf.pedal_segments(PEDAL_THRESHOLD),
            }
        })
        .collect();
    let cfg = CvConfig {
        grid: Some(GridSpec { gammas: vec![1.0 / 12.0], cs: vec![2.0] }),
        head: sustain_pedal::nn::TrainConfig { max_epochs: 5, batch_size: 16, ..Default::default() },
        ..CvConfig::default()
    };
    let report = logo_cv(&passages, &net(), &cfg).unwrap();
    assert_eq!(report.folds.len(), 3);
    for f in &report.folds {
        let mut all = f.train_ids.clone();
        assert!(!all.contains(&f.held_out));
        all.push(f.held_out.clone());
        all.sort();
        assert_eq!(all, vec!["p0", "p1", "p2"]);
    }
    for m in &report.methods {
        assert_eq!(m.rows.len(), 3);
        for r in &m.rows {
            assert_eq!(r.n_on + r.n_off, 58);
            for v in [r.prf.precision, r.prf.recall, r.prf.f1] {
                assert!((0.0..=1.0).contains(&v));
            }
        }
        assert!((0.0..=1.0).contains(&m.micro_f1));
    }
    assert_eq!(report.timelines.len(), 9);
    assert_eq!(report.to_table().lines().filter(|l| l.starts_with("| p")).count(), 3);
    assert!(logo_cv(&passages[..1], &net(), &cfg).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn truth_aligns_with_frames(
        len in 13_230usize..200_000,
        raw in proptest::collection::vec((0.0f64..5.0, 0.05f64..2.0), 0..4),
    ) {
        let frames = FrameConfig::default();
        let times = frames.frame_times(len, PIPELINE_SAMPLE_RATE).unwrap();
        let segments: Vec<PedalSegment> = raw.iter().map(|&(a, d)| PedalSegment { onset_s: a, offset_s: a + d }).collect();
        let truth = frame_ground_truth(&segments, &times);
        prop_assert_eq!(truth.len(), times.len());
        for (t, on) in times.iter().zip(&truth) {
            prop_assert_eq!(*on, segments.iter().any(|s| s.onset_s <= *t && *t < s.offset_s));
        }
    }
}
