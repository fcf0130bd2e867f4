//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{gram, oracle_dual, random_problem, GAMMA_C};
use sustain_pedal::dsp::{melspectrogram, stft_magnitude, DspConfig, Signal, PIPELINE_SAMPLE_RATE};
use sustain_pedal::experiment::{source_dataset, target_passages, train_source, ExperimentConfig};
use sustain_pedal::features::{analyze_frames, extract_features, FrameConfig};
use sustain_pedal::metrics::{auc_roc, f_measure};
use sustain_pedal::midi::{build_excerpt_manifest, MidiFile, MidiPerformance, PedalSegment, TaggedPerformance, PEDAL_THRESHOLD};
use sustain_pedal::nn::layers::{
    binary_cross_entropy, global_avg_pool, global_avg_pool_backward, max_pool, max_pool_backward, relu_backward_in_place,
    relu_in_place, softmax, softmax_cross_entropy_grad, BatchNorm, Conv2d, Dense,
};
use sustain_pedal::nn::{
    network_from_bytes, network_to_bytes, train, Network, NetworkConfig, Tensor, TrainConfig,
};
use sustain_pedal::pipeline::{detect, frame_ground_truth, logo_cv, Method, Models};
use sustain_pedal::svm::{smo, train_svm, SvmParams};
use sustain_pedal::synth::{generate_pair_clips, random_passage, render, SynthConfig};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn criterion(name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let secs = start.elapsed().as_secs_f64();
    match &result {
        Ok(detail) => println!("PASS  {name}: {detail} [{secs:.1} s]"),
        Err(detail) => println!("FAIL  {name}: {detail} [{secs:.1} s]"),
    }
    result.is_ok()
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

// ---------------------------------------------------------------- gradients

const H: f64 = 1e-5;

fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Worst relative error of `analytic` against central differences of
/// `loss` with respect to the entries of `values`.
fn fd_worst(values: &mut [f64], analytic: &[f64], mut loss: impl FnMut(&[f64]) -> f64) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..values.len() {
        let orig = values[i];
        values[i] = orig + H;
        let up = loss(values);
        values[i] = orig - H;
        let down = loss(values);
        values[i] = orig;
        worst = worst.max(rel_err(analytic[i], (up - down) / (2.0 * H)));
    }
    worst
}

fn gradient_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let shape = [2, 2, 8, 10];
    let n_in = shape.iter().product();
    let mut report = Vec::new();

    // conv
    let mut conv: Conv2d<f64> = Conv2d::new(2, 3, (3, 3), &mut rng);
    conv.bias.value = random_vec(&mut rng, 3);
    let mut x = random_vec(&mut rng, n_in);
    let w = random_vec(&mut rng, 2 * 3 * 80);
    let xt = Tensor::new(shape, x.clone()).map_err(e)?;
    conv.weight.zero_grad();
    conv.bias.zero_grad();
    let dx = conv.backward(&xt, &Tensor::new([2, 3, 8, 10], w.clone()).map_err(e)?);
    let conv_loss = |c: &Conv2d<f64>, x: &[f64]| dot(&w, c.forward(&Tensor::new(shape, x.to_vec()).unwrap()).unwrap().data());
    let (gw, gb) = (conv.weight.grad.clone(), conv.bias.grad.clone());
    let mut worst = fd_worst(&mut x, dx.data(), |x| conv_loss(&conv, x));
    let mut wv = conv.weight.value.clone();
    worst = worst.max(fd_worst(&mut wv, &gw, |v| {
        let mut c = conv.clone();
        c.weight.value = v.to_vec();
        conv_loss(&c, &x)
    }));
    let mut bv = conv.bias.value.clone();
    worst = worst.max(fd_worst(&mut bv, &gb, |v| {
        let mut c = conv.clone();
        c.bias.value = v.to_vec();
        conv_loss(&c, &x)
    }));
    report.push(("conv", worst));

    // batch norm, training mode
    let mut bn: BatchNorm<f64> = BatchNorm::new(2);
    bn.gamma.value = vec![1.3, 0.7];
    bn.beta.value = vec![0.2, -0.4];
    let w = random_vec(&mut rng, n_in);
    let mut x = random_vec(&mut rng, n_in);
    let (_, cache) = bn.forward_train(&Tensor::new(shape, x.clone()).unwrap()).map_err(e)?;
    bn.gamma.zero_grad();
    bn.beta.zero_grad();
    let dx = bn.backward(&Tensor::new(shape, w.clone()).unwrap(), &cache);
    let (gg, gbeta) = (bn.gamma.grad.clone(), bn.beta.grad.clone());
    let bn_loss = |b: &BatchNorm<f64>, x: &[f64]| {
        let mut b = b.clone();
        dot(&w, b.forward_train(&Tensor::new(shape, x.to_vec()).unwrap()).unwrap().0.data())
    };
    let mut worst = fd_worst(&mut x, dx.data(), |x| bn_loss(&bn, x));
    let mut gv = bn.gamma.value.clone();
    worst = worst.max(fd_worst(&mut gv, &gg, |v| {
        let mut b = bn.clone();
        b.gamma.value = v.to_vec();
        bn_loss(&b, &x)
    }));
    let mut bv = bn.beta.value.clone();
    worst = worst.max(fd_worst(&mut bv, &gbeta, |v| {
        let mut b = bn.clone();
        b.beta.value = v.to_vec();
        bn_loss(&b, &x)
    }));
    report.push(("batch norm", worst));

    // relu
    let mut x = random_vec(&mut rng, n_in);
    let w = random_vec(&mut rng, n_in);
    let mut dy = Tensor::new(shape, w.clone()).unwrap();
    relu_backward_in_place(&mut dy, &Tensor::new(shape, x.clone()).unwrap());
    let worst = fd_worst(&mut x, dy.data(), |x| {
        let mut t = Tensor::new(shape, x.to_vec()).unwrap();
        relu_in_place(&mut t);
        dot(&w, t.data())
    });
    report.push(("relu", worst));

    // max pool
    let mut x = random_vec(&mut rng, n_in);
    let (y, argmax) = max_pool(&Tensor::new(shape, x.clone()).unwrap(), (2, 2)).map_err(e)?;
    let w = random_vec(&mut rng, y.data().len());
    let dx = max_pool_backward(&Tensor::new(y.shape(), w.clone()).unwrap(), &argmax, shape);
    let worst = fd_worst(&mut x, dx.data(), |x| {
        dot(&w, max_pool(&Tensor::new(shape, x.to_vec()).unwrap(), (2, 2)).unwrap().0.data())
    });
    report.push(("max pool", worst));

    // global average pool
    let mut x = random_vec(&mut rng, n_in);
    let w = random_vec(&mut rng, 4);
    let dx = global_avg_pool_backward(&w, shape);
    let worst = fd_worst(&mut x, dx.data(), |x| dot(&w, &global_avg_pool(&Tensor::new(shape, x.to_vec()).unwrap())));
    report.push(("global avg pool", worst));

    // dense + softmax cross-entropy
    let labels = [1usize, 0, 1];
    let mut dense: Dense<f64> = Dense::new(5, 2, &mut rng);
    dense.bias.value = random_vec(&mut rng, 2);
    let mut x = random_vec(&mut rng, 15);
    let probs = softmax(&dense.forward(&x).map_err(e)?, 2);
    dense.weight.zero_grad();
    dense.bias.zero_grad();
    let dx = dense.backward(&x, &softmax_cross_entropy_grad(&probs, &labels));
    let (gw, gb) = (dense.weight.grad.clone(), dense.bias.grad.clone());
    let ce = |d: &Dense<f64>, x: &[f64]| binary_cross_entropy(&softmax(&d.forward(x).unwrap(), 2), &labels);
    let mut worst = fd_worst(&mut x, &dx, |x| ce(&dense, x));
    let mut wv = dense.weight.value.clone();
    worst = worst.max(fd_worst(&mut wv, &gw, |v| {
        let mut d = dense.clone();
        d.weight.value = v.to_vec();
        ce(&d, &x)
    }));
    let mut bv = dense.bias.value.clone();
    worst = worst.max(fd_worst(&mut bv, &gb, |v| {
        let mut d = dense.clone();
        d.bias.value = v.to_vec();
        ce(&d, &x)
    }));
    report.push(("dense+softmax", worst));

    // composed two-layer networks
    let mut multi = NetworkConfig::multi_reduced(3, 2).with_input((8, 10));
    for b in &mut multi.first_layer {
        b.kernel = (b.kernel.0.min(5), b.kernel.1.min(4));
    }
    for (label, cfg) in [
        ("2-layer single", NetworkConfig::single(3, (3, 3), 2).with_input((8, 10))),
        ("2-layer multi", multi),
    ] {
        let mut net: Network<f64> = Network::new(cfg, 5).map_err(e)?;
        for l in 0..2 {
            let bn = net.batch_norm_mut(l);
            bn.beta.value.iter_mut().for_each(|b| *b = 0.3);
        }
        let x = Tensor::new([3, 1, 8, 10], random_vec(&mut rng, 240)).unwrap();
        let labels = [0usize, 1, 1];
        net.zero_grad();
        net.compute_gradients(&x, &labels).map_err(e)?;
        let analytic: Vec<Vec<f64>> = net.params().iter().map(|p| p.grad.clone()).collect();
        let mut worst = 0.0f64;
        for (pi, grads) in analytic.iter().enumerate() {
            let mut values = net.params()[pi].value.clone();
            worst = worst.max(fd_worst(&mut values, grads, |v| {
                let mut probe = net.clone();
                probe.params_mut()[pi].value.copy_from_slice(v);
                probe.compute_gradients(&x, &labels).unwrap()
            }));
        }
        report.push((label, worst));
    }

    let elapsed = start.elapsed();
    let worst = report.iter().map(|r| r.1).fold(0.0, f64::max);
    let detail = report.iter().map(|(n, w)| format!("{n} {w:.1e}")).collect::<Vec<_>>().join(", ");
    ensure(worst < 1e-4, || format!("max relative error {worst:.2e} >= 1e-4 ({detail})"))?;
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!("max relative error {worst:.1e} ({detail})"))
}

// ---------------------------------------------------------------------- dsp

/// Direct DFT magnitude of centred, reflect-padded, Hann-windowed frames.
fn direct_stft(x: &[f64], n_fft: usize, hop: usize) -> Vec<Vec<f64>> {
    let half = n_fft / 2;
    let len = x.len() as isize;
    let padded: Vec<f64> = (-(half as isize)..len + half as isize)
        .map(|j| {
            let j = if j < 0 {
                -j
            } else if j >= len {
                2 * (len - 1) - j
            } else {
                j
            };
            x[j as usize]
        })
        .collect();
    let window: Vec<f64> = (0..n_fft).map(|n| (PI * n as f64 / n_fft as f64).sin().powi(2)).collect();
    let n_frames = 1 + x.len() / hop;
    let cos: Vec<f64> = (0..n_fft).map(|m| (2.0 * PI * m as f64 / n_fft as f64).cos()).collect();
    let sin: Vec<f64> = (0..n_fft).map(|m| (2.0 * PI * m as f64 / n_fft as f64).sin()).collect();
    (0..n_frames)
        .map(|t| {
            let frame = &padded[t * hop..t * hop + n_fft];
            (0..=half)
                .map(|k| {
                    let (mut re, mut im) = (0.0, 0.0);
                    for (n, v) in frame.iter().enumerate() {
                        let m = (k * n) % n_fft;
                        re += v * window[n] * cos[m];
                        im -= v * window[n] * sin[m];
                    }
                    re.hypot(im)
                })
                .collect()
        })
        .collect()
}

fn dsp_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for (len, n_fft, hop) in [(4096, 1024, 441), (1000, 1024, 441), (2048, 512, 256), (300, 256, 100)] {
        let x: Vec<f64> = (0..len)
            .map(|i| 0.6 * (2.0 * PI * 440.0 * i as f64 / 44100.0).sin() + rng.gen_range(-0.3..0.3))
            .collect();
        let cfg = DspConfig {
            fft_size: n_fft,
            hop,
            ..DspConfig::default()
        };
        let fast = stft_magnitude(&Signal::new(x.clone(), PIPELINE_SAMPLE_RATE).unwrap(), &cfg).map_err(e)?;
        let slow = direct_stft(&x, n_fft, hop);
        ensure(fast.cols == slow.len() && fast.rows == n_fft / 2 + 1, || "STFT shape differs".into())?;
        for (t, col) in slow.iter().enumerate() {
            for (k, v) in col.iter().enumerate() {
                worst = worst.max((fast.get(k, t) - v).abs());
            }
        }
    }
    ensure(worst <= 1e-9, || format!("STFT differs from direct DFT by {worst:.2e}"))?;

    let sr = PIPELINE_SAMPLE_RATE;
    let x: Vec<f64> = (0..2 * sr as usize)
        .map(|i| (2.0 * PI * 330.0 * i as f64 / sr as f64).sin() * 0.5 + rng.gen_range(-0.05..0.05))
        .collect();
    let base = melspectrogram(&Signal::new(x.clone(), sr).unwrap(), &DspConfig::default()).map_err(e)?;
    ensure(base.shape() == (128, 201), || format!("2 s melspectrogram shape {:?}", base.shape()))?;
    for gain in [2.0, 0.25, 1024.0, 1.0 / 64.0] {
        let scaled = Signal::new(x.iter().map(|v| v * gain).collect(), sr).unwrap();
        let m = melspectrogram(&scaled, &DspConfig::default()).map_err(e)?;
        ensure(m.values == base.values, || format!("melspectrogram changed under gain {gain}"))?;
    }
    Ok(format!("max |STFT - DFT| {worst:.1e}; shape (128, 201); gains 2, 1/4, 1024, 1/64 leave output identical"))
}

// ---------------------------------------------------------------------- svm

fn svm_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst_gap, mut worst_kkt) = (f64::MIN, 0.0f64);
    for problem in 0..10 {
        let (x, y) = random_problem(&mut rng);
        let yf: Vec<f64> = y.iter().map(|&l| l as f64).collect();
        for (gamma, c) in GAMMA_C {
            let sol = smo(&x, &y, &SvmParams::new(c, gamma)).map_err(e)?;
            let k = gram(&x, gamma);
            let oracle = oracle_dual(&k, &yf, c);
            worst_gap = worst_gap.max(oracle - sol.dual_objective);
            ensure((sol.dual_objective - oracle).abs() <= 1e-6, || {
                format!("problem {problem} gamma {gamma} C {c}: smo {} vs qp {oracle}", sol.dual_objective)
            })?;
            let eq: f64 = sol.alpha.iter().zip(&yf).map(|(a, y)| a * y).sum();
            worst_kkt = worst_kkt.max(eq.abs());
            for i in 0..x.len() {
                let f: f64 = (0..x.len()).map(|j| sol.alpha[j] * yf[j] * k[i][j]).sum::<f64>() + sol.bias;
                let m = yf[i] * f;
                let a = sol.alpha[i];
                let v = if a <= 1e-12 {
                    (1.0 - m).max(0.0)
                } else if a >= c - 1e-12 {
                    (m - 1.0).max(0.0)
                } else {
                    (m - 1.0).abs()
                };
                worst_kkt = worst_kkt.max(v).max((-a).max(a - c).max(0.0));
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(worst_kkt < 1e-3, || format!("KKT violation {worst_kkt:.2e}"))?;
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "40 problems: max (qp - smo) {worst_gap:.1e}, max KKT violation {worst_kkt:.1e}"
    ))
}

// ------------------------------------------------------------------ metrics

const TABLE_ROWS: [(&str, [f64; 6]); 10] = [
    ("Op.10 No.3", [0.7615, 0.9965, 0.8633, 0.8457, 0.9941, 0.9139]),
    ("Op.23 No.1", [0.6670, 0.8573, 0.7503, 0.8643, 0.9349, 0.8982]),
    ("Op.28 No.4", [0.7569, 0.9698, 0.8502, 0.8148, 0.9859, 0.8922]),
    ("Op.28 No.6", [0.7357, 0.9607, 0.8332, 0.8178, 0.9569, 0.8819]),
    ("Op.28 No.7", [0.8217, 0.8866, 0.8529, 0.8971, 0.8385, 0.8668]),
    ("Op.28 No.15", [0.6659, 0.9329, 0.7771, 0.8412, 0.9624, 0.8977]),
    ("Op.28 No.20", [0.7405, 0.9949, 0.8490, 0.7849, 0.9974, 0.8785]),
    ("Op.66", [0.7720, 0.9439, 0.8494, 0.9425, 0.9439, 0.9432]),
    ("Op.69 No.2", [0.7622, 0.9272, 0.8366, 0.9649, 0.7902, 0.8688]),
    ("B.49", [0.7091, 0.9172, 0.7998, 0.8175, 0.9919, 0.8963]),
];

fn metric_identities() -> Outcome {
    let mut worst = 0.0f64;
    for (name, v) in TABLE_ROWS {
        for (p, r, f) in [(v[0], v[1], v[2]), (v[3], v[4], v[5])] {
            let got = f_measure(p, r).ok_or_else(|| format!("{name}: F undefined"))?;
            ensure((got - f).abs() <= 5e-4, || format!("{name}: F({p}, {r}) = {got:.5}, table {f}"))?;
            worst = worst.max((got - f).abs());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for i in 0..100 {
        let n = rng.gen_range(2..=12);
        let mut labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        labels[0] = true;
        labels[1] = false;
        let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0..5) as f64 / 4.0).collect();
        let (mut wins, mut pairs) = (0.0, 0.0);
        for (sp, _) in scores.iter().zip(&labels).filter(|p| *p.1) {
            for (sn, _) in scores.iter().zip(&labels).filter(|p| !*p.1) {
                pairs += 1.0;
                wins += if sp > sn { 1.0 } else if sp == sn { 0.5 } else { 0.0 };
            }
        }
        let auc = auc_roc(&scores, &labels).map_err(e)?;
        ensure(auc == wins / pairs, || format!("instance {i}: rank AUC {auc} vs pairwise {}", wins / pairs))?;
    }
    Ok(format!("20 F identities within {worst:.1e}; rank AUC equals pairwise count on 100 tied instances"))
}

// --------------------------------------------------------------------- midi

fn hand_smf() -> Vec<u8> {
    let cc = |delta: &[u8], v: u8| [delta, &[0xB0, 64, v]].concat();
    let q = [0x83, 0x60]; // 480 ticks = 0.5 s at 480 tpq, 120 bpm
    let body = [
        vec![0x00, 0xFF, 0x51, 0x03, 0x07, 0xA1, 0x20],
        vec![0x00, 0xC0, 0x05],
        vec![0x00, 0xB0, 0x07, 100],
        vec![0x00, 0x90, 60, 80],
        cc(&q, 127),
        cc(&q, 63),
        cc(&q, 64),
        cc(&q, 0),
        cc(&q, 127),
        cc(&q, 100),
        vec![0x00, 0xFF, 0x01, 0x03, b'a', b'b', b'c'],
        vec![0x87, 0x40, 0x80, 60, 0],
        vec![0x00, 0xFF, 0x2F, 0x00],
    ]
    .concat();
    let mut bytes = b"MThd\x00\x00\x00\x06\x00\x00\x00\x01\x01\xE0MTrk".to_vec();
    bytes.extend_from_slice(&(body.len() as u32).to_be_bytes());
    bytes.extend_from_slice(&body);
    bytes
}

fn midi_segmentation() -> Outcome {
    let file = MidiFile::parse(&hand_smf()).map_err(e)?;
    let n_cc = file.tracks.iter().flatten().filter(|ev| ev.is_sustain_cc()).count();
    ensure(n_cc == 6, || format!("{n_cc} CC64 events parsed"))?;
    let perf = MidiPerformance::from_file(&file);
    let got = perf.pedal_segments(PEDAL_THRESHOLD);
    let want = [(0.5, 1.0), (1.5, 2.0), (2.5, 4.0)].map(|(onset_s, offset_s)| PedalSegment { onset_s, offset_s });
    ensure(got == want, || format!("segments {got:?}"))?;

    let stripped = MidiFile::parse(&file.strip_sustain().to_bytes()).map_err(e)?;
    ensure(stripped.tracks.iter().flatten().all(|ev| !ev.is_sustain_cc()), || "CC64 survived stripping".into())?;
    let keep = |f: &MidiFile| -> Vec<(u64, Vec<u8>)> {
        f.tracks
            .iter()
            .flatten()
            .filter(|ev| !ev.is_sustain_cc())
            .map(|ev| (ev.tick, ev.bytes.clone()))
            .collect()
    };
    ensure(keep(&stripped) == keep(&file), || "non-sustain events changed".into())?;
    ensure(stripped.format == file.format && stripped.division == file.division, || "header changed".into())?;
    Ok(format!(
        "segments {:?}; {} other events preserved byte-for-byte",
        got.iter().map(|s| (s.onset_s, s.offset_s)).collect::<Vec<_>>(),
        keep(&file).len()
    ))
}

// ----------------------------------------------------------------- features

fn feature_contract() -> Outcome {
    let sr = PIPELINE_SAMPLE_RATE;
    let x: Vec<f64> = (0..2 * sr as usize).map(|i| (i as f64 * 0.031).sin() * (i as f64 * 1e-4).cos()).collect();
    let mel = melspectrogram(&Signal::new(x, sr).unwrap(), &DspConfig::default()).map_err(e)?;
    let mut dims = Vec::new();
    for (cfg, want) in [(NetworkConfig::multi(), 84), (NetworkConfig::multi_reduced(12, 3), 36)] {
        let a: Network<f32> = Network::new(cfg.clone(), 4).map_err(e)?;
        let b: Network<f32> = Network::new(cfg, 4).map_err(e)?;
        let fa = extract_features(&a, &mel).map_err(e)?;
        ensure(fa.len() == want && a.feature_len() == want, || format!("{} features, want {want}", fa.len()))?;
        ensure(fa == extract_features(&a, &mel).map_err(e)?, || "repeat extraction differs".into())?;
        ensure(fa == extract_features(&b, &mel).map_err(e)?, || "same-seed network differs".into())?;
        dims.push(fa.len());
    }
    Ok(format!("dims {dims:?}; repeat and same-seed extractions identical"))
}

// ---------------------------------------------------------------- end to end

fn end_to_end(keep: &mut Option<Network<f32>>) -> Outcome {
    let cfg = ExperimentConfig::new(0);
    let start = Instant::now();
    let outcome = train_source(&cfg).map_err(e)?;
    let train_time = start.elapsed();
    let best = *outcome.best_record();
    for r in &outcome.history {
        println!(
            "      epoch {:2}: loss {:.4} val_acc {:.4} val_auc {:.4}",
            r.epoch, r.train_loss, r.val_acc, r.val_auc
        );
    }
    let passages = target_passages(&cfg).map_err(e)?;
    let report = logo_cv(&passages, &outcome.network, &cfg.cv).map_err(e)?;
    for line in report.to_table().lines() {
        println!("      {line}");
    }
    *keep = Some(outcome.network);

    ensure(best.val_acc >= 0.90, || format!("validation accuracy {:.4}", best.val_acc))?;
    ensure(best.val_auc >= 0.95, || format!("validation AUC {:.4}", best.val_auc))?;
    ensure(train_time < Duration::from_secs(15 * 60), || format!("training took {train_time:?}"))?;
    ensure(report.folds.len() == 10, || format!("{} folds", report.folds.len()))?;
    let table = report.to_table();
    let rows = table.lines().filter(|l| l.starts_with("| passage")).count();
    ensure(rows == 10 && table.contains("| **Average** |"), || "report is missing rows".into())?;
    for f in &report.folds {
        ensure(!f.train_ids.contains(&f.held_out) && f.train_ids.len() == 9, || {
            format!("fold {} trains on {:?}", f.held_out, f.train_ids)
        })?;
    }
    let micro = |m| report.method(m).map(|r| r.micro_f1).unwrap_or(f64::NAN);
    let (svm, direct, tuned) = (micro(Method::Svm), micro(Method::Direct), micro(Method::Finetune));
    let mean = |m| report.method(m).map(|r| r.mean_f1).unwrap_or(f64::NAN);
    println!(
        "INFO  mean F1 svm_transfer {:.4} vs finetuned_head {:.4} ({})",
        mean(Method::Svm),
        mean(Method::Finetune),
        if mean(Method::Svm) >= mean(Method::Finetune) { "svm ahead" } else { "finetuned head ahead" }
    );
    ensure(svm >= direct, || format!("svm_transfer micro-F {svm:.4} < pretrained_direct {direct:.4}"))?;
    Ok(format!(
        "400 excerpts, epoch {} val_acc {:.4} val_auc {:.4}, trained in {:.0} s; micro-F svm {svm:.4} >= direct {direct:.4} (finetuned {tuned:.4})",
        best.epoch,
        best.val_acc,
        best.val_auc,
        train_time.as_secs_f64()
    ))
}

// -------------------------------------------------------------- determinism

fn determinism() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let perfs: Vec<TaggedPerformance> = (0..4)
        .map(|i| TaggedPerformance {
            source_id: format!("p{i}"),
            composer_id: ["a", "b"][i % 2].into(),
            performance: random_passage(20.0, &mut rng),
        })
        .collect();
    let m1 = build_excerpt_manifest(&perfs, 3, 17, None);
    ensure(m1 == build_excerpt_manifest(&perfs, 3, 17, None), || "manifest differs".into())?;
    let synth = SynthConfig {
        seed: 21,
        ..SynthConfig::default()
    };
    ensure(
        generate_pair_clips(4, &synth).map_err(e)? == generate_pair_clips(4, &synth).map_err(e)?,
        || "synthetic pairs differ".into(),
    )?;

    let data = source_dataset(16, &synth).map_err(e)?;
    let cfg = NetworkConfig::multi_reduced(6, 2);
    let tcfg = TrainConfig {
        batch_size: 8,
        max_epochs: 3,
        patience: 3,
        seed: 9,
        ..TrainConfig::default()
    };
    let a = train(&cfg, &tcfg, &data).map_err(e)?;
    let b = train(&cfg, &tcfg, &data).map_err(e)?;
    let bits = |h: &[sustain_pedal::nn::EpochRecord]| -> Vec<[u64; 3]> {
        h.iter().map(|r| [r.train_loss.to_bits(), r.val_acc.to_bits(), r.val_auc.to_bits()]).collect()
    };
    ensure(bits(&a.history) == bits(&b.history), || "training histories differ".into())?;
    ensure(network_to_bytes(&a.network) == network_to_bytes(&b.network), || "trained weights differ".into())?;

    let (frames, dsp) = (FrameConfig::default(), DspConfig::default());
    let perf = random_passage(4.0, &mut ChaCha8Rng::seed_from_u64(6));
    let signal = render(&perf, true, &synth).map_err(e)?.slice_seconds(0.0, 4.0);
    let analysis = analyze_frames(&a.network, &signal, "p", &frames, &dsp).map_err(e)?;
    let y: Vec<i8> = frame_ground_truth(&perf.pedal_segments(PEDAL_THRESHOLD), &analysis.times)
        .iter()
        .map(|&t| if t { 1 } else { -1 })
        .collect();
    let models = Models {
        svm: Some(train_svm(&analysis.features, &y, &SvmParams::new(2.0, 1.0 / 12.0)).map_err(e)?),
        network: Some(a.network),
        finetuned: None,
    };
    for method in [Method::Svm, Method::Direct] {
        let t1 = detect(&signal, "p", method, &models, &frames, &dsp).map_err(e)?;
        let t2 = detect(&signal, "p", method, &models, &frames, &dsp).map_err(e)?;
        ensure(t1 == t2, || format!("{method} timelines differ"))?;
    }
    Ok(format!(
        "manifest ({} entries), synthetic pairs, {}-epoch histories and weights, svm/direct timelines all identical",
        m1.entries.len(),
        a.history.len()
    ))
}

// --------------------------------------------------------------- checkpoint

fn checkpoint_round_trip(trained: Option<&Network<f32>>) -> Outcome {
    let fresh: Network<f32> = Network::new(NetworkConfig::multi(), 1).map_err(e)?;
    let mut checked = 0;
    for net in std::iter::once(&fresh).chain(trained) {
        let bytes = network_to_bytes(net);
        let back = network_from_bytes(&bytes).map_err(e)?;
        ensure(network_to_bytes(&back) == bytes, || "save -> load -> save changed bytes".into())?;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (h, w) = net.config().input;
        let x = Tensor::new([3, 1, h, w], (0..3 * h * w).map(|_| rng.gen_range(-1.0f32..1.0)).collect()).unwrap();
        let (a, b) = (net.infer(&x).map_err(e)?, back.infer(&x).map_err(e)?);
        ensure(a.probs == b.probs && a.taps == b.taps, || "inference changed after round trip".into())?;
        checked += 1;
    }
    Ok(format!("{checked} networks byte-identical with unchanged inference"))
}

fn main() {
    let mut trained = None;
    let results = [
        criterion("gradient oracle", gradient_oracle),
        criterion("dsp oracle", dsp_oracle),
        criterion("svm oracle", svm_oracle),
        criterion("metric identities", metric_identities),
        criterion("midi segmentation", midi_segmentation),
        criterion("transfer feature contract", feature_contract),
        criterion("end-to-end scaled experiment", || end_to_end(&mut trained)),
        criterion("determinism", determinism),
        criterion("checkpoint round trip", || checkpoint_round_trip(trained.as_ref())),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
