//! Frame-wise detection, ground truth, leave-one-passage-out evaluation and
//! report emission.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rayon::prelude::*;

use crate::dsp::{DspConfig, Signal};
use crate::error::{Error, Result};
use crate::features::{analyze_frames, FrameAnalysis, FrameConfig};
use crate::metrics::{micro_f1, Counts, Prf};
use crate::midi::PedalSegment;
use crate::nn::{retrain_head_on_pooled, Network, TrainConfig, PEDAL_CLASS};
use crate::svm::{grid_search, train_svm, GridSpec, SvmModel, SvmParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Source-task network applied as is.
    Direct,
    /// Source-task network with only the dense head retrained.
    Finetune,
    /// RBF SVM on transfer features.
    Svm,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Direct, Method::Finetune, Method::Svm];

    pub fn name(self) -> &'static str {
        match self {
            Method::Direct => "pretrained_direct",
            Method::Finetune => "finetuned_head",
            Method::Svm => "svm_transfer",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" | "pretrained_direct" => Ok(Method::Direct),
            "finetune" | "finetuned_head" => Ok(Method::Finetune),
            "svm" | "svm_transfer" => Ok(Method::Svm),
            other => Err(Error::Parse(format!("unknown method {other:?} (direct, finetune, svm)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub time_s: f64,
    pub on: bool,
    /// Pedal probability, or the SVM decision value.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionTimeline {
    pub recording_id: String,
    pub frames: Vec<Frame>,
}

impl DetectionTimeline {
    pub fn labels(&self) -> Vec<bool> {
        self.frames.iter().map(|f| f.on).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.time_s).collect()
    }

    fn from_scores(recording_id: &str, times: &[f64], scores: &[f64], threshold: f64) -> Self {
        DetectionTimeline {
            recording_id: recording_id.to_string(),
            frames: times
                .iter()
                .zip(scores)
                .map(|(&time_s, &score)| Frame {
                    time_s,
                    on: score >= threshold,
                    score,
                })
                .collect(),
        }
    }

    /// Majority vote over a centred window of `width` frames (odd).
    pub fn median_filtered(&self, width: usize) -> Self {
        let labels = median_filter(&self.labels(), width);
        let mut out = self.clone();
        out.frames.iter_mut().zip(labels).for_each(|(f, l)| f.on = l);
        out
    }
}

pub fn median_filter(labels: &[bool], width: usize) -> Vec<bool> {
    let half = width / 2;
    (0..labels.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(labels.len());
            let on = labels[lo..hi].iter().filter(|&&l| l).count();
            2 * on > hi - lo || (2 * on == hi - lo && labels[i])
        })
        .collect()
}

/// Trained artifacts available to [`detect`].
#[derive(Debug, Clone, Default)]
pub struct Models {
    pub network: Option<Network<f32>>,
    pub finetuned: Option<Network<f32>>,
    pub svm: Option<SvmModel>,
}

fn missing(what: &str) -> Error {
    Error::MissingModel(what.to_string())
}

/// Frame-wise pedal detection over a recording.
pub fn detect(
    signal: &Signal,
    recording_id: &str,
    method: Method,
    models: &Models,
    frames: &FrameConfig,
    dsp: &DspConfig,
) -> Result<DetectionTimeline> {
    let network = match method {
        Method::Direct | Method::Svm => models.network.as_ref().ok_or_else(|| missing("pretrained network"))?,
        Method::Finetune => models.finetuned.as_ref().ok_or_else(|| missing("fine-tuned network"))?,
    };
    if method == Method::Svm && models.svm.is_none() {
        return Err(missing("svm model"));
    }
    let analysis = analyze_frames(network, signal, recording_id, frames, dsp)?;
    timeline_from_analysis(&analysis, method, network, models.svm.as_ref())
}

/// Applies a method to an existing analysis. For `Finetune`, `network` is
/// the fine-tuned network; its conv stack must match the one that produced
/// the analysis.
pub fn timeline_from_analysis(
    analysis: &FrameAnalysis,
    method: Method,
    network: &Network<f32>,
    svm: Option<&SvmModel>,
) -> Result<DetectionTimeline> {
    let scores: Vec<f64> = match method {
        Method::Direct => analysis.pedal_probs.clone(),
        Method::Finetune => head_scores(network, &analysis.head_inputs(network.config().channels))?,
        Method::Svm => {
            let svm = svm.ok_or_else(|| missing("svm model"))?;
            svm.predict_many(&analysis.features)?.into_iter().map(|p| p.1).collect()
        }
    };
    let threshold = if method == Method::Svm { 0.0 } else { 0.5 };
    Ok(DetectionTimeline::from_scores(&analysis.recording_id, &analysis.times, &scores, threshold))
}

fn head_scores(network: &Network<f32>, pooled: &[Vec<f64>]) -> Result<Vec<f64>> {
    let flat: Vec<f32> = pooled.iter().flatten().map(|&v| v as f32).collect();
    Ok(network.head_probs(&flat)?.chunks(2).map(|p| p[PEDAL_CLASS] as f64).collect())
}

/// On iff the frame time lies in some segment (closed-left, open-right).
pub fn frame_ground_truth(segments: &[PedalSegment], frame_times: &[f64]) -> Vec<bool> {
    frame_times.iter().map(|&t| segments.iter().any(|s| s.contains(t))).collect()
}

pub const TIMELINE_HEADER: &str = "time_s,predicted,truth,score";

fn on_off(v: bool) -> &'static str {
    if v {
        "on"
    } else {
        "off"
    }
}

/// CSV with one row per frame. `truth` may be omitted (empty column).
pub fn timeline_to_csv(timeline: &DetectionTimeline, truth: Option<&[bool]>) -> Result<String> {
    if let Some(t) = truth {
        if t.len() != timeline.frames.len() {
            return Err(Error::invalid(format!(
                "{} ground-truth labels for {} frames",
                t.len(),
                timeline.frames.len()
            )));
        }
    }
    let mut out = String::from(TIMELINE_HEADER);
    out.push('\n');
    for (i, f) in timeline.frames.iter().enumerate() {
        let t = truth.map_or("", |t| on_off(t[i]));
        let _ = writeln!(out, "{},{},{},{}", f.time_s, on_off(f.on), t, f.score);
    }
    Ok(out)
}

/// Parses [`timeline_to_csv`] output; truth is `None` when any row lacks it.
pub fn timeline_from_csv(text: &str, recording_id: &str) -> Result<(DetectionTimeline, Option<Vec<bool>>)> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(TIMELINE_HEADER) {
        return Err(Error::Parse(format!("timeline CSV must start with {TIMELINE_HEADER:?}")));
    }
    let label = |s: &str, row: usize| match s {
        "on" => Ok(true),
        "off" => Ok(false),
        other => Err(Error::Parse(format!("row {row}: expected on/off, got {other:?}"))),
    };
    let mut frames = Vec::new();
    let mut truth = Some(Vec::new());
    for (row, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(Error::Parse(format!("row {}: expected 4 columns", row + 1)));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse(format!("row {}: bad number {s:?}", row + 1)));
        frames.push(Frame {
            time_s: num(cols[0])?,
            on: label(cols[1], row + 1)?,
            score: num(cols[3])?,
        });
        truth = match (truth, cols[2]) {
            (Some(mut t), s) if !s.is_empty() => {
                t.push(label(s, row + 1)?);
                Some(t)
            }
            _ => None,
        };
    }
    Ok((
        DetectionTimeline {
            recording_id: recording_id.to_string(),
            frames,
        },
        truth,
    ))
}

/// Maximal runs of `true`, as `[start, end)` frame index pairs.
fn runs(labels: &[bool]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, &l) in labels.iter().chain(std::iter::once(&false)).enumerate() {
        match (l, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    out
}

/// Static SVG strip chart: a prediction lane and a ground-truth lane with
/// pedal-on frames highlighted.
pub fn timeline_to_svg(timeline: &DetectionTimeline, truth: Option<&[bool]>, hop_s: f64) -> String {
    const WIDTH: f64 = 900.0;
    const LEFT: f64 = 90.0;
    const LANE_H: f64 = 28.0;
    let end = timeline.frames.last().map_or(1.0, |f| f.time_s + hop_s / 2.0).max(1e-9);
    let x = |t: f64| LEFT + (WIDTH - LEFT - 10.0) * (t / end).clamp(0.0, 1.0);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="120" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<text x="{LEFT}" y="14">{}</text>"#, xml_escape(&timeline.recording_id));
    let lanes: [(&str, Option<Vec<bool>>, f64, &str); 2] = [
        ("prediction", Some(timeline.labels()), 24.0, "#d9534f"),
        ("ground truth", truth.map(<[bool]>::to_vec), 24.0 + LANE_H + 8.0, "#337ab7"),
    ];
    for (name, labels, y, colour) in lanes {
        let _ = writeln!(svg, r#"<text x="4" y="{}">{name}</text>"#, y + 18.0);
        let _ = writeln!(
            svg,
            r##"<rect class="lane" x="{LEFT}" y="{y}" width="{}" height="{LANE_H}" fill="#f4f4f4" stroke="#999"/>"##,
            WIDTH - LEFT - 10.0
        );
        for (s, e) in labels.as_deref().map(runs).unwrap_or_default() {
            let t0 = timeline.frames[s].time_s - hop_s / 2.0;
            let t1 = timeline.frames[e - 1].time_s + hop_s / 2.0;
            let _ = writeln!(
                svg,
                r#"<rect class="on" data-lane="{name}" x="{:.2}" y="{y}" width="{:.2}" height="{LANE_H}" fill="{colour}"/>"#,
                x(t0),
                (x(t1) - x(t0)).max(0.5)
            );
        }
    }
    let axis_y = 24.0 + 2.0 * LANE_H + 24.0;
    let mut t = 0.0;
    while t <= end + 1e-9 {
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{axis_y}" text-anchor="middle">{t:.0}</text>"#, x(t));
        t += if end > 30.0 { 5.0 } else { 1.0 };
    }
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// A target-task recording with its pedal annotation.
#[derive(Debug, Clone, PartialEq)]
pub struct Passage {
    pub id: String,
    pub signal: Signal,
    pub segments: Vec<PedalSegment>,
}

#[derive(Debug, Clone)]
pub struct CvConfig {
    pub methods: Vec<Method>,
    /// `None` uses [`GridSpec::standard`] for the feature dimension.
    pub grid: Option<GridSpec>,
    pub inner_val_fraction: f64,
    pub seed: u64,
    /// Early-stopping setup for head retraining.
    pub head: TrainConfig,
    pub class_weight: bool,
    /// Optional majority filter width; off by default.
    pub median_width: Option<usize>,
    pub frames: FrameConfig,
    pub dsp: DspConfig,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            methods: Method::ALL.to_vec(),
            grid: None,
            inner_val_fraction: 0.2,
            seed: 0,
            head: TrainConfig {
                batch_size: 32,
                max_epochs: 200,
                ..TrainConfig::default()
            },
            class_weight: false,
            median_width: None,
            frames: FrameConfig::default(),
            dsp: DspConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PassageScore {
    pub passage_id: String,
    pub n_on: usize,
    pub n_off: usize,
    pub prf: Prf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodReport {
    pub method: Method,
    pub rows: Vec<PassageScore>,
    /// Means of P1, R1 and F1 over passages.
    pub mean_precision: f64,
    pub mean_recall: f64,
    pub mean_f1: f64,
    /// F pooled over both labels and all folds.
    pub micro_f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldRecord {
    pub held_out: String,
    pub train_ids: Vec<String>,
    /// Selected (gamma, C) when the SVM method ran.
    pub svm_choice: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub methods: Vec<MethodReport>,
    pub folds: Vec<FoldRecord>,
    /// Per method, per passage: timeline and ground truth.
    pub timelines: Vec<(Method, DetectionTimeline, Vec<bool>)>,
}

impl CvReport {
    pub fn method(&self, m: Method) -> Option<&MethodReport> {
        self.methods.iter().find(|r| r.method == m)
    }

    /// Per-passage counts with P1/R1/F1 for each method, an average row and
    /// the micro-averaged F per method, as a Markdown table.
    pub fn to_table(&self) -> String {
        let mut out = String::from("| Passage | on | off |");
        let mut rule = String::from("|---|---:|---:|");
        for m in &self.methods {
            let _ = write!(out, " {0} P1 | {0} R1 | {0} F1 |", m.method);
            rule.push_str("---:|---:|---:|");
        }
        out.push('\n');
        out.push_str(&rule);
        out.push('\n');
        let Some(first) = self.methods.first() else {
            return out;
        };
        for (i, row) in first.rows.iter().enumerate() {
            let _ = write!(out, "| {} | {} | {} |", row.passage_id, row.n_on, row.n_off);
            for m in &self.methods {
                let p = &m.rows[i].prf;
                let _ = write!(out, " {:.4} | {:.4} | {:.4} |", p.precision, p.recall, p.f1);
            }
            out.push('\n');
        }
        let n = first.rows.len().max(1) as f64;
        let mean_on = first.rows.iter().map(|r| r.n_on).sum::<usize>() as f64 / n;
        let mean_off = first.rows.iter().map(|r| r.n_off).sum::<usize>() as f64 / n;
        let _ = write!(out, "| **Average** | {mean_on:.0} | {mean_off:.0} |");
        for m in &self.methods {
            let _ = write!(out, " {:.4} | {:.4} | {:.4} |", m.mean_precision, m.mean_recall, m.mean_f1);
        }
        out.push_str("\n\n");
        for m in &self.methods {
            let _ = writeln!(out, "micro-F ({}): {:.4}", m.method, m.micro_f1);
        }
        out
    }

    /// Long-format CSV: method, passage, counts and metrics, plus an
    /// `average` and a `micro` row per method.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,passage,on,off,p1,r1,f1\n");
        for m in &self.methods {
            for r in &m.rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    m.method, r.passage_id, r.n_on, r.n_off, r.prf.precision, r.prf.recall, r.prf.f1
                );
            }
            let _ = writeln!(out, "{},average,,,{},{},{}", m.method, m.mean_precision, m.mean_recall, m.mean_f1);
            let _ = writeln!(out, "{},micro,,,,,{}", m.method, m.micro_f1);
        }
        out
    }
}

struct Analyzed {
    analysis: FrameAnalysis,
    truth: Vec<bool>,
}

/// Training rows gathered from every passage except `held_out`, each
/// tagged with its source passage.
fn training_rows<'a>(data: &'a [Analyzed], held_out: usize) -> Vec<(&'a str, &'a [f64], bool)> {
    let id = &data[held_out].analysis.recording_id;
    let rows: Vec<(&str, &[f64], bool)> = data
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != held_out)
        .flat_map(|(_, a)| {
            a.analysis
                .features
                .iter()
                .zip(&a.truth)
                .map(move |(f, &t)| (a.analysis.recording_id.as_str(), f.as_slice(), t))
        })
        .collect();
    assert!(
        rows.iter().all(|r| r.0 != id.as_str()),
        "held-out passage {id} leaked into its own training fold"
    );
    rows
}

/// Leave-one-passage-out evaluation of the requested methods.
pub fn logo_cv(passages: &[Passage], network: &Network<f32>, cfg: &CvConfig) -> Result<CvReport> {
    if passages.len() < 2 {
        return Err(Error::invalid("cross-validation needs at least two passages"));
    }
    let mut ids: Vec<&str> = passages.iter().map(|p| p.id.as_str()).collect();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() != passages.len() {
        return Err(Error::invalid("passage ids must be unique"));
    }
    let data: Vec<Analyzed> = passages
        .iter()
        .map(|p| {
            let analysis = analyze_frames(network, &p.signal, &p.id, &cfg.frames, &cfg.dsp)?;
            let truth = frame_ground_truth(&p.segments, &analysis.times);
            Ok(Analyzed { analysis, truth })
        })
        .collect::<Result<_>>()?;
    let channels = network.config().channels;
    let dim = network.feature_len();
    let grid = cfg.grid.clone().unwrap_or_else(|| GridSpec::standard(dim));

    let folds: Vec<(FoldRecord, Vec<(Method, DetectionTimeline)>)> = (0..data.len())
        .into_par_iter()
        .map(|k| {
            let held = &data[k].analysis;
            let rows = training_rows(&data, k);
            let mut train_ids: Vec<String> = rows.iter().map(|r| r.0.to_string()).collect();
            train_ids.dedup();
            let mut record = FoldRecord {
                held_out: held.recording_id.clone(),
                train_ids,
                svm_choice: None,
            };
            let mut timelines = Vec::new();
            for &method in &cfg.methods {
                let timeline = match method {
                    Method::Direct => timeline_from_analysis(held, method, network, None)?,
                    Method::Finetune => {
                        let pooled: Vec<Vec<f32>> =
                            rows.iter().map(|r| r.1[dim - channels..].iter().map(|&v| v as f32).collect()).collect();
                        let labels: Vec<usize> = rows.iter().map(|r| r.2 as usize).collect();
                        let head = TrainConfig {
                            seed: cfg.head.seed ^ k as u64,
                            ..cfg.head.clone()
                        };
                        let tuned = retrain_head_on_pooled(network, &pooled, &labels, &head)?;
                        timeline_from_analysis(held, method, &tuned, None)?
                    }
                    Method::Svm => {
                        let x: Vec<Vec<f64>> = rows.iter().map(|r| r.1.to_vec()).collect();
                        let y: Vec<i8> = rows.iter().map(|r| if r.2 { 1 } else { -1 }).collect();
                        let gs = grid_search(&x, &y, &grid, cfg.inner_val_fraction, cfg.seed ^ k as u64, cfg.class_weight)?;
                        record.svm_choice = Some((gs.best_gamma, gs.best_c));
                        let params = SvmParams {
                            class_weight: cfg.class_weight,
                            ..SvmParams::new(gs.best_c, gs.best_gamma)
                        };
                        let model = train_svm(&x, &y, &params)?;
                        timeline_from_analysis(held, method, network, Some(&model))?
                    }
                };
                let timeline = match cfg.median_width {
                    Some(w) if w > 1 => timeline.median_filtered(w),
                    _ => timeline,
                };
                timelines.push((method, timeline));
            }
            Ok((record, timelines))
        })
        .collect::<Result<_>>()?;

    let mut methods = Vec::new();
    let mut all_timelines = Vec::new();
    for (mi, &method) in cfg.methods.iter().enumerate() {
        let mut rows = Vec::new();
        let mut pooled = Vec::new();
        for (k, (_, timelines)) in folds.iter().enumerate() {
            let (_, timeline) = &timelines[mi];
            let truth = &data[k].truth;
            let pred = timeline.labels();
            let prf = Counts::for_label(&pred, truth, true)?.prf();
            let n_on = truth.iter().filter(|&&t| t).count();
            rows.push(PassageScore {
                passage_id: timeline.recording_id.clone(),
                n_on,
                n_off: truth.len() - n_on,
                prf,
            });
            pooled.push((pred, truth.clone()));
            all_timelines.push((method, timeline.clone(), truth.clone()));
        }
        let n = rows.len() as f64;
        methods.push(MethodReport {
            method,
            mean_precision: rows.iter().map(|r| r.prf.precision).sum::<f64>() / n,
            mean_recall: rows.iter().map(|r| r.prf.recall).sum::<f64>() / n,
            mean_f1: rows.iter().map(|r| r.prf.f1).sum::<f64>() / n,
            micro_f1: micro_f1(&pooled)?,
            rows,
        });
    }
    Ok(CvReport {
        methods,
        folds: folds.into_iter().map(|f| f.0).collect(),
        timelines: all_timelines,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn timeline(labels: &[bool]) -> DetectionTimeline {
        DetectionTimeline {
            recording_id: "r".into(),
            frames: labels
                .iter()
                .enumerate()
                .map(|(i, &on)| Frame {
                    time_s: 0.15 + 0.1 * i as f64,
                    on,
                    score: if on { 0.75 } else { 0.125 },
                })
                .collect(),
        }
    }

    #[test]
    fn ground_truth_examples() {
        let seg = [PedalSegment {
            onset_s: 1.0,
            offset_s: 3.0,
        }];
        assert_eq!(frame_ground_truth(&seg, &[0.15, 1.15, 3.15]), vec![false, true, false]);
        assert_eq!(frame_ground_truth(&[], &[0.15, 1.15]), vec![false, false]);
        assert_eq!(frame_ground_truth(&seg, &[1.0, 3.0]), vec![true, false]);
    }

    #[test]
    fn method_names() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert_eq!("svm".parse::<Method>().unwrap(), Method::Svm);
        assert!("knn".parse::<Method>().is_err());
    }

    #[test]
    fn csv_round_trip_and_row_count() {
        let t = timeline(&[false, true, true, false, true]);
        let truth = [false, false, true, true, true];
        let csv = timeline_to_csv(&t, Some(&truth)).unwrap();
        assert_eq!(csv.lines().count(), 1 + 5);
        let (back, tr) = timeline_from_csv(&csv, "r").unwrap();
        assert_eq!(back, t);
        assert_eq!(tr.unwrap(), truth);
        let (_, none) = timeline_from_csv(&timeline_to_csv(&t, None).unwrap(), "r").unwrap();
        assert!(none.is_none());
        assert!(timeline_to_csv(&t, Some(&truth[..2])).is_err());
    }

    #[test]
    fn svg_highlights_only_on_spans() {
        let off = timeline(&[false; 6]);
        let svg = timeline_to_svg(&off, Some(&[false, true, true, false, false, false]), 0.1);
        assert!(!svg.contains(r#"data-lane="prediction""#));
        assert_eq!(svg.matches(r#"data-lane="ground truth""#).count(), 1);
        let on = timeline(&[true, false, true, true, false, true]);
        assert_eq!(timeline_to_svg(&on, None, 0.1).matches(r#"class="on""#).count(), 3);
    }

    #[test]
    fn median_filter_removes_blips() {
        let l = [true, true, false, true, true, false, false, true, false, false];
        assert_eq!(median_filter(&l, 1), l.to_vec());
        assert_eq!(
            median_filter(&l, 3),
            vec![true, true, true, true, true, false, false, false, false, false]
        );
    }
}
