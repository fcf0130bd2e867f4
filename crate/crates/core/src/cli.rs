//! The `pedal` command line. Every long flag can also be set from a
//! `key=value` config file passed with `--config`; flags given on the
//! command line win.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::corpus::{
    read_corpus, read_excerpt_set, read_midi_dir, render_manifest, synthetic_passages, write_corpus,
    write_synthetic_pairs, MANIFEST_FILE,
};
use crate::dsp::{read_wav, DspConfig, PIPELINE_SAMPLE_RATE};
use crate::error::{Error, Result};
use crate::features::{analyze_frames, read_features, write_features, FeatureVector, FrameConfig};
use crate::midi::{build_excerpt_manifest, ExcerptManifest, MidiFile, MidiPerformance, PEDAL_THRESHOLD};
use crate::nn::{
    history_to_csv, load_network, retrain_head_on_pooled, save_network, train, AdamConfig, Dataset, NetworkConfig,
    TrainConfig,
};
use crate::pipeline::{
    detect, frame_ground_truth, logo_cv, timeline_from_csv, timeline_to_csv, timeline_to_svg, CvConfig, Method, Models,
};
use crate::svm::{grid_search, train_svm, GridSpec, SvmModel, SvmParams};
use crate::synth::SynthConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_MODEL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "pedal", version, about = "Sustain-pedal detection in piano recordings")]
pub struct Cli {
    /// key=value file supplying defaults for any long flag
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract pedal segments, a paired excerpt manifest and sustain-free MIDI
    Prepare(PrepareArgs),
    /// Render synthetic training pairs and/or target passages
    Synth(SynthArgs),
    /// Train a source-task network on an excerpt set
    Train(TrainArgs),
    /// Dump frame-wise transfer features as CSV
    Features(FeaturesArgs),
    /// Fit the RBF SVM (and optionally a retrained head) on a corpus
    SvmTrain(SvmTrainArgs),
    /// Frame-wise detection on one recording
    Detect(DetectArgs),
    /// Leave-one-passage-out evaluation over a corpus directory
    Cv(CvArgs),
    /// Render a timeline CSV as an SVG strip chart
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    /// Directory of .mid files; the composer id is the file-name prefix before `_`
    #[arg(long)]
    pub midi_dir: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Maximum pairs per composer
    #[arg(long, default_value_t = 1000)]
    pub cap: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Drop segments shorter than this many seconds
    #[arg(long)]
    pub min_duration: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Random pedal/no-pedal pairs (source instrument) written to OUT
    #[arg(long, default_value_t = 200)]
    pub pairs: usize,
    /// Passages (target instrument) written to OUT/passages
    #[arg(long, default_value_t = 0)]
    pub passages: usize,
    #[arg(long, default_value_t = 10.0)]
    pub passage_seconds: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Render this manifest from MIDI_DIR instead of random pairs
    #[arg(long, requires = "midi_dir")]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub midi_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Arch {
    Baseline,
    Frequency,
    Time,
    Multi,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Excerpt set directory (WAV files plus manifest.csv)
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Arch::Multi)]
    pub arch: Arch,
    /// First-layer kernel MxN for single-shape architectures
    #[arg(long, value_parser = parse_kernel)]
    pub kernel: Option<(usize, usize)>,
    #[arg(long, default_value_t = 21)]
    pub channels: usize,
    #[arg(long, default_value_t = 4)]
    pub layers: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 128)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 200)]
    pub max_epochs: usize,
    #[arg(long, default_value_t = 10)]
    pub patience: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 0.2)]
    pub val_fraction: f64,
    /// Per-epoch history CSV
    #[arg(long)]
    pub history: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// WAV files; the recording id is the file stem
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    pub input: Vec<PathBuf>,
    /// Every WAV in a corpus directory
    #[arg(long, conflicts_with = "input")]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SvmTrainArgs {
    /// Corpus directory of <id>.wav with <id>.mid annotations
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Reuse a feature CSV from `features` instead of extracting
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Grid-search table CSV
    #[arg(long)]
    pub grid_out: Option<PathBuf>,
    /// Also retrain the dense head on the same frames and save it here
    #[arg(long)]
    pub head_out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.2)]
    pub val_fraction: f64,
    #[arg(long)]
    pub class_weight: bool,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_parser = parse_method, default_value = "svm")]
    pub method: Method,
    /// Pre-trained network
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Network with retrained head
    #[arg(long)]
    pub finetuned: Option<PathBuf>,
    #[arg(long)]
    pub svm: Option<PathBuf>,
    /// MIDI annotation for the truth column
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Timeline CSV (stdout when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Majority filter width in frames
    #[arg(long)]
    pub median: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_parser = parse_method, value_delimiter = ',', default_value = "direct,finetune,svm")]
    pub methods: Vec<Method>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.2)]
    pub val_fraction: f64,
    #[arg(long)]
    pub class_weight: bool,
    #[arg(long)]
    pub median: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub timeline: PathBuf,
    #[arg(long)]
    pub svg: PathBuf,
    /// Chart title (defaults to the file stem)
    #[arg(long)]
    pub id: Option<String>,
    #[arg(long, default_value_t = 0.1)]
    pub hop: f64,
}

fn parse_kernel(s: &str) -> std::result::Result<(usize, usize), String> {
    let (m, n) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected MxN, got {s:?}"))?;
    match (m.parse(), n.parse()) {
        (Ok(m), Ok(n)) if m > 0 && n > 0 => Ok((m, n)),
        _ => Err(format!("expected positive MxN, got {s:?}")),
    }
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Parses `key=value` lines; `#` starts a comment. Keys may use `_` or `-`.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            let (k, v) = l
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("config line {}: expected key=value", i + 1)))?;
            let k = k.trim().replace('_', "-");
            if k.is_empty() {
                return Err(Error::Config(format!("config line {}: empty key", i + 1)));
            }
            Ok((k, v.trim().to_string()))
        })
        .collect()
}

/// Removes `--config FILE` from `args` and splices the file's settings in
/// after the subcommand, skipping keys already given on the command line.
pub fn expand_config(args: Vec<String>) -> Result<Vec<String>> {
    let mut rest = Vec::with_capacity(args.len());
    let mut config = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            config = Some(it.next().ok_or_else(|| Error::Config("--config needs a file".into()))?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            config = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = config else {
        return Ok(rest);
    };
    let text = fs::read_to_string(&path).map_err(|e| Error::Config(format!("cannot read config {path}: {e}")))?;
    let Some(sub) = rest.iter().skip(1).position(|a| !a.starts_with('-')).map(|p| p + 1) else {
        return Ok(rest);
    };
    let given = |k: &str| {
        let flag = format!("--{k}");
        rest.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")))
    };
    let mut extra = Vec::new();
    for (k, v) in parse_config(&text)? {
        if given(&k) {
            continue;
        }
        match v.as_str() {
            "true" => extra.push(format!("--{k}")),
            "false" => {}
            _ => extra.push(format!("--{k}={v}")),
        }
    }
    rest.splice(sub + 1..sub + 1, extra);
    Ok(rest)
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_USAGE,
        e if e.is_model_error() => EXIT_MODEL,
        _ => EXIT_DATA,
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args(args: impl IntoIterator<Item = OsString>) -> i32 {
    let args: Option<Vec<String>> = args.into_iter().map(|a| a.into_string().ok()).collect();
    let Some(args) = args else {
        eprintln!("error: arguments must be valid UTF-8");
        return EXIT_USAGE;
    };
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Prepare(a) => prepare(&a),
        Command::Synth(a) => synth(&a),
        Command::Train(a) => train_cmd(&a),
        Command::Features(a) => features(&a),
        Command::SvmTrain(a) => svm_train(&a),
        Command::Detect(a) => detect_cmd(&a),
        Command::Cv(a) => cv(&a),
        Command::Report(a) => report(&a),
    }
}

fn prepare(a: &PrepareArgs) -> Result<()> {
    let perfs = read_midi_dir(&a.midi_dir)?;
    if perfs.is_empty() {
        return Err(Error::invalid(format!("no .mid files in {}", a.midi_dir.display())));
    }
    let stripped = a.out.join("stripped");
    fs::create_dir_all(&stripped)?;
    let mut segments = String::from("source_id,onset_s,offset_s\n");
    for p in &perfs {
        for s in p.performance.pedal_segments(PEDAL_THRESHOLD) {
            segments.push_str(&format!("{},{},{}\n", p.source_id, s.onset_s, s.offset_s));
        }
        let file = MidiFile::read(a.midi_dir.join(format!("{}.mid", p.source_id)))?;
        file.strip_sustain().write(stripped.join(format!("{}.mid", p.source_id)))?;
    }
    fs::write(a.out.join("segments.csv"), segments)?;
    let manifest = build_excerpt_manifest(&perfs, a.cap, a.seed, a.min_duration);
    manifest.write(a.out.join(MANIFEST_FILE))?;
    println!("{} files, {} pairs", perfs.len(), manifest.n_pairs());
    Ok(())
}

fn synth(a: &SynthArgs) -> Result<()> {
    let source = SynthConfig {
        seed: a.seed,
        ..SynthConfig::default()
    };
    match (&a.manifest, &a.midi_dir) {
        (Some(m), Some(dir)) => {
            let manifest = ExcerptManifest::read(m)?;
            render_manifest(&manifest, dir, &a.out, &source)?;
            println!("rendered {} excerpts", manifest.entries.len());
        }
        _ if a.pairs > 0 => {
            let manifest = write_synthetic_pairs(&a.out, a.pairs, &source)?;
            println!("{} pairs", manifest.n_pairs());
        }
        _ => {}
    }
    if a.passages > 0 {
        let target = SynthConfig::target_instrument(a.seed.wrapping_add(1));
        write_corpus(&a.out.join("passages"), &synthetic_passages(a.passages, a.passage_seconds, &target)?)?;
        println!("{} passages", a.passages);
    }
    Ok(())
}

/// Network configuration from the `train` flags.
pub fn network_config(arch: Arch, kernel: Option<(usize, usize)>, channels: usize, layers: usize) -> Result<NetworkConfig> {
    let single = |default| NetworkConfig::single(channels, kernel.unwrap_or(default), layers);
    let cfg = match arch {
        Arch::Baseline => single((3, 3)),
        Arch::Frequency => single((45, 3)),
        Arch::Time => single((3, 10)),
        Arch::Multi if kernel.is_some() => return Err(Error::Config("--kernel applies to single-shape architectures".into())),
        Arch::Multi => NetworkConfig::multi_reduced(channels, layers),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn train_cmd(a: &TrainArgs) -> Result<()> {
    let config = network_config(a.arch, a.kernel, a.channels, a.layers)?;
    let data: Dataset<f32> = Dataset::from_mels(&read_excerpt_set(&a.data, &DspConfig::default())?)?;
    let tcfg = TrainConfig {
        batch_size: a.batch_size,
        patience: a.patience,
        max_epochs: a.max_epochs,
        adam: AdamConfig {
            learning_rate: a.learning_rate,
            ..AdamConfig::default()
        },
        val_fraction: a.val_fraction,
        seed: a.seed,
    };
    let outcome = train(&config, &tcfg, &data)?;
    save_network(&outcome.network, &a.out)?;
    if let Some(h) = &a.history {
        fs::write(h, history_to_csv(&outcome.history))?;
    }
    let best = outcome.best_record();
    println!(
        "best epoch {} of {}: val_acc {:.4} val_auc {:.4}",
        best.epoch,
        outcome.history.len(),
        best.val_acc,
        best.val_auc
    );
    Ok(())
}

fn wav_inputs(a: &FeaturesArgs) -> Result<Vec<PathBuf>> {
    if let Some(dir) = &a.corpus {
        let mut v: Vec<PathBuf> = fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav")))
            .collect();
        v.sort();
        return Ok(v);
    }
    if a.input.is_empty() {
        return Err(Error::Config("give --input or --corpus".into()));
    }
    Ok(a.input.clone())
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn load_signal(p: &Path) -> Result<crate::dsp::Signal> {
    let s = read_wav(p)?;
    Ok(if s.sample_rate == PIPELINE_SAMPLE_RATE {
        s
    } else {
        s.resample_linear(PIPELINE_SAMPLE_RATE)
    })
}

fn features(a: &FeaturesArgs) -> Result<()> {
    let network = load_network(&a.model)?;
    let mut rows = Vec::new();
    for p in wav_inputs(a)? {
        let analysis = analyze_frames(&network, &load_signal(&p)?, &stem(&p), &FrameConfig::default(), &DspConfig::default())?;
        rows.extend(analysis.feature_vectors());
    }
    write_features(&rows, &a.out)?;
    println!("{} rows of {} features", rows.len(), network.feature_len());
    Ok(())
}

fn svm_train(a: &SvmTrainArgs) -> Result<()> {
    let network = load_network(&a.model)?;
    let passages = read_corpus(&a.corpus)?;
    let rows: Vec<FeatureVector> = match &a.features {
        Some(f) => read_features(f)?,
        None => {
            let mut rows = Vec::new();
            for p in &passages {
                rows.extend(
                    analyze_frames(&network, &p.signal, &p.id, &FrameConfig::default(), &DspConfig::default())?
                        .feature_vectors(),
                );
            }
            rows
        }
    };
    let labels: Vec<bool> = rows
        .iter()
        .map(|r| {
            let p = passages
                .iter()
                .find(|p| p.id == r.recording_id)
                .ok_or_else(|| Error::invalid(format!("no annotation for recording {:?}", r.recording_id)))?;
            Ok(frame_ground_truth(&p.segments, &[r.frame_time_s])[0])
        })
        .collect::<Result<_>>()?;
    let x: Vec<Vec<f64>> = rows.into_iter().map(|r| r.values).collect();
    let y: Vec<i8> = labels.iter().map(|&l| if l { 1 } else { -1 }).collect();
    let dim = x.first().map_or(0, Vec::len);
    let gs = grid_search(&x, &y, &GridSpec::standard(dim), a.val_fraction, a.seed, a.class_weight)?;
    if let Some(g) = &a.grid_out {
        fs::write(g, gs.to_csv())?;
    }
    let params = SvmParams {
        class_weight: a.class_weight,
        ..SvmParams::new(gs.best_c, gs.best_gamma)
    };
    train_svm(&x, &y, &params)?.save(&a.out)?;
    println!("{} frames, gamma {} C {}", x.len(), gs.best_gamma, gs.best_c);
    if let Some(h) = &a.head_out {
        let channels = network.config().channels;
        let pooled: Vec<Vec<f32>> = x.iter().map(|f| f[dim - channels..].iter().map(|&v| v as f32).collect()).collect();
        let labels: Vec<usize> = labels.iter().map(|&l| l as usize).collect();
        let tcfg = TrainConfig {
            batch_size: 32,
            seed: a.seed,
            val_fraction: a.val_fraction,
            ..TrainConfig::default()
        };
        save_network(&retrain_head_on_pooled(&network, &pooled, &labels, &tcfg)?, h)?;
    }
    Ok(())
}

fn detect_cmd(a: &DetectArgs) -> Result<()> {
    let models = Models {
        network: a.model.as_ref().map(load_network).transpose()?,
        finetuned: a.finetuned.as_ref().map(load_network).transpose()?,
        svm: a.svm.as_ref().map(SvmModel::load).transpose()?,
    };
    let signal = load_signal(&a.input)?;
    let frames = FrameConfig::default();
    let mut timeline = detect(&signal, &stem(&a.input), a.method, &models, &frames, &DspConfig::default())?;
    if let Some(w) = a.median.filter(|&w| w > 1) {
        timeline = timeline.median_filtered(w);
    }
    let truth = match &a.truth {
        Some(m) => {
            let perf = MidiPerformance::from_file(&MidiFile::read(m)?);
            Some(frame_ground_truth(&perf.pedal_segments(PEDAL_THRESHOLD), &timeline.times()))
        }
        None => None,
    };
    let csv = timeline_to_csv(&timeline, truth.as_deref())?;
    match &a.out {
        Some(p) => fs::write(p, csv)?,
        None => print!("{csv}"),
    }
    if let Some(p) = &a.svg {
        fs::write(p, timeline_to_svg(&timeline, truth.as_deref(), frames.hop_s))?;
    }
    Ok(())
}

fn cv(a: &CvArgs) -> Result<()> {
    let network = load_network(&a.model)?;
    let passages = read_corpus(&a.corpus)?;
    let cfg = CvConfig {
        methods: a.methods.clone(),
        inner_val_fraction: a.val_fraction,
        seed: a.seed,
        class_weight: a.class_weight,
        median_width: a.median,
        ..CvConfig::default()
    };
    let report = logo_cv(&passages, &network, &cfg)?;
    let timelines = a.out.join("timelines");
    fs::create_dir_all(&timelines)?;
    fs::write(a.out.join("report.md"), report.to_table())?;
    fs::write(a.out.join("report.csv"), report.to_csv())?;
    let mut folds = String::from("held_out,train_passages,gamma,c\n");
    for f in &report.folds {
        let (g, c) = f.svm_choice.map_or((String::new(), String::new()), |(g, c)| (g.to_string(), c.to_string()));
        folds.push_str(&format!("{},{},{g},{c}\n", f.held_out, f.train_ids.join(";")));
    }
    fs::write(a.out.join("folds.csv"), folds)?;
    for (method, timeline, truth) in &report.timelines {
        let base = timelines.join(format!("{}_{}", timeline.recording_id, method));
        fs::write(base.with_extension("csv"), timeline_to_csv(timeline, Some(truth))?)?;
        fs::write(base.with_extension("svg"), timeline_to_svg(timeline, Some(truth), cfg.frames.hop_s))?;
    }
    print!("{}", report.to_table());
    Ok(())
}

fn report(a: &ReportArgs) -> Result<()> {
    let id = a.id.clone().unwrap_or_else(|| stem(&a.timeline));
    let (timeline, truth) = timeline_from_csv(&fs::read_to_string(&a.timeline)?, &id)?;
    fs::write(&a.svg, timeline_to_svg(&timeline, truth.as_deref(), a.hop))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn config_lines() {
        let kv = parse_config("# comment\nbatch_size = 16\n\nclass-weight=true # inline\n").unwrap();
        assert_eq!(kv, vec![("batch-size".into(), "16".into()), ("class-weight".into(), "true".into())]);
        assert!(parse_config("novalue").is_err());
    }

    #[test]
    fn config_is_spliced_after_subcommand_and_cli_wins() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        fs::write(&path, "seed=7\nlayers=3\nclass_weight=false\n").unwrap();
        let args = strings(&["pedal", "--config", path.to_str().unwrap(), "train", "--seed=2"]);
        assert_eq!(expand_config(args).unwrap(), strings(&["pedal", "train", "--layers=3", "--seed=2"]));
    }

    #[test]
    fn every_flag_accepts_a_config_key() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.conf");
        fs::write(&path, "data=d\nout=o\narch=time\nkernel=3x12\nchannels=6\nlayers=2\nbatch_size=8\nhistory=h.csv\n").unwrap();
        let args = expand_config(strings(&["pedal", "--config", path.to_str().unwrap(), "train"])).unwrap();
        let Command::Train(t) = Cli::try_parse_from(args).unwrap().command else {
            panic!("expected train");
        };
        assert_eq!((t.arch, t.kernel, t.channels, t.layers, t.batch_size), (Arch::Time, Some((3, 12)), 6, 2, 8));
    }

    #[test]
    fn usage_errors_exit_one() {
        let code = |v: &[&str]| main_with_args(v.iter().map(OsString::from));
        assert_eq!(code(&["pedal"]), EXIT_USAGE);
        assert_eq!(code(&["pedal", "train", "--data", "d", "--out", "o", "--kernel", "3by3"]), EXIT_USAGE);
        assert_eq!(code(&["pedal", "detect", "--input", "x.wav", "--method", "knn"]), EXIT_USAGE);
        assert_eq!(code(&["pedal", "--help"]), EXIT_OK);
    }

    #[test]
    fn architectures() {
        assert_eq!(network_config(Arch::Multi, None, 21, 4).unwrap(), NetworkConfig::multi());
        assert_eq!(network_config(Arch::Baseline, None, 21, 4).unwrap(), NetworkConfig::baseline());
        assert_eq!(network_config(Arch::Frequency, Some((20, 3)), 21, 4).unwrap(), NetworkConfig::frequency(20));
        assert!(network_config(Arch::Multi, Some((3, 3)), 21, 4).is_err());
        assert!(network_config(Arch::Time, Some((3, 400)), 21, 4).is_err());
    }
}
