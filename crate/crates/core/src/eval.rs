//! Confusion counts, derived rates, training-trace CSV and weight images.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::network::StackedNetwork;
use crate::raster::GrayImage;
use crate::train::{TracePoint, TrainingTrace};

/// Binary confusion counts. "Positive" is the detection target (the
/// defective class).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

/// Counts `predicted` against `truth`, treating class `positive` as
/// positive and every other class as negative.
pub fn confusion(predicted: &[usize], truth: &[usize], positive: usize) -> Result<ConfusionCounts> {
    if predicted.len() != truth.len() {
        return Err(Error::shape(
            "confusion",
            (predicted.len(), 1),
            (truth.len(), 1),
        ));
    }
    let mut c = ConfusionCounts::default();
    for (&p, &t) in predicted.iter().zip(truth) {
        match (p == positive, t == positive) {
            (true, true) => c.tp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

/// A ratio whose denominator may be zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rate {
    Value(f64),
    Undefined,
}

impl Rate {
    fn ratio(num: u64, den: u64) -> Rate {
        if den == 0 {
            Rate::Undefined
        } else {
            Rate::Value(num as f64 / den as f64)
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Rate::Value(v) => Some(v),
            Rate::Undefined => None,
        }
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rate::Value(v) => write!(f, "{:.4}", v),
            Rate::Undefined => f.write_str("undefined"),
        }
    }
}

/// Rates under both conventions: `*_total` divide by the sample count (so
/// accuracy and the two error rates partition 1), `*_classwise` divide by
/// the relevant true-class count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub fp_rate_total: f64,
    pub fn_rate_total: f64,
    pub fp_rate_classwise: Rate,
    pub fn_rate_classwise: Rate,
    pub precision: Rate,
    pub recall: Rate,
}

pub fn metrics(c: &ConfusionCounts) -> Result<Metrics> {
    let total = c.total();
    if total == 0 {
        return Err(Error::EmptyEvaluation);
    }
    let t = total as f64;
    Ok(Metrics {
        accuracy: (c.tp + c.tn) as f64 / t,
        fp_rate_total: c.fp as f64 / t,
        fn_rate_total: c.fn_ as f64 / t,
        fp_rate_classwise: Rate::ratio(c.fp, c.fp + c.tn),
        fn_rate_classwise: Rate::ratio(c.fn_, c.fn_ + c.tp),
        precision: Rate::ratio(c.tp, c.tp + c.fp),
        recall: Rate::ratio(c.tp, c.tp + c.fn_),
    })
}

/// Aligned 2×2 table plus the metric block, as printed by the CLI.
pub fn render_report(
    c: &ConfusionCounts,
    positive_name: &str,
    negative_name: &str,
) -> Result<String> {
    let m = metrics(c)?;
    let w = positive_name.len().max(negative_name.len()).max(9);
    let mut s = String::new();
    writeln!(
        s,
        "{:>w$} | {:>w$} {:>w$}",
        "true\\pred", positive_name, negative_name
    )
    .unwrap();
    writeln!(s, "{}", "-".repeat(3 * w + 4)).unwrap();
    writeln!(s, "{:>w$} | {:>w$} {:>w$}", positive_name, c.tp, c.fn_).unwrap();
    writeln!(s, "{:>w$} | {:>w$} {:>w$}", negative_name, c.fp, c.tn).unwrap();
    writeln!(s).unwrap();
    writeln!(s, "samples            {}", c.total()).unwrap();
    writeln!(s, "accuracy           {:.4}", m.accuracy).unwrap();
    writeln!(s, "fp_rate_total      {:.4}", m.fp_rate_total).unwrap();
    writeln!(s, "fn_rate_total      {:.4}", m.fn_rate_total).unwrap();
    writeln!(s, "fp_rate_classwise  {}", m.fp_rate_classwise).unwrap();
    writeln!(s, "fn_rate_classwise  {}", m.fn_rate_classwise).unwrap();
    writeln!(s, "precision          {}", m.precision).unwrap();
    writeln!(s, "recall             {}", m.recall).unwrap();
    Ok(s)
}

/// Class name treated as positive when present.
pub const POSITIVE_CLASS: &str = "defective";

/// Index of [`POSITIVE_CLASS`] in `class_names`, else 0.
pub fn positive_class(class_names: &[String]) -> usize {
    class_names
        .iter()
        .position(|n| n == POSITIVE_CLASS)
        .unwrap_or(0)
}

/// Positive-versus-rest evaluation of a network on a labeled dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub counts: ConfusionCounts,
    pub metrics: Metrics,
    pub positive_name: String,
    pub negative_name: String,
    pub predicted: Vec<usize>,
}

impl Evaluation {
    pub fn report(&self) -> String {
        render_report(&self.counts, &self.positive_name, &self.negative_name)
            .expect("evaluation is never empty")
    }
}

pub fn evaluate(net: &StackedNetwork, data: &Dataset) -> Result<Evaluation> {
    if data.is_empty() {
        return Err(Error::EmptyEvaluation);
    }
    if data.classes() != net.classes() {
        return Err(Error::Param(format!(
            "dataset has {} classes, network has {}",
            data.classes(),
            net.classes()
        )));
    }
    let predicted = net.predict(&data.features)?.labels;
    let positive = positive_class(&data.class_names);
    let counts = confusion(&predicted, &data.class_indices(), positive)?;
    let negative_name = match data.class_names.len() {
        2 => data.class_names[1 - positive].clone(),
        _ => format!("not-{}", data.class_names[positive]),
    };
    Ok(Evaluation {
        counts,
        metrics: metrics(&counts)?,
        positive_name: data.class_names[positive].clone(),
        negative_name,
        predicted,
    })
}

pub const TRACE_HEADER: &str = "phase,iteration,loss,train_accuracy,val_accuracy";

/// CSV rendering of a trace. Reals use the shortest representation that
/// parses back to the same bits; absent accuracies are empty fields.
pub fn trace_to_csv(trace: &TrainingTrace) -> String {
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    let mut s = String::from(TRACE_HEADER);
    s.push('\n');
    for p in &trace.points {
        writeln!(
            s,
            "{},{},{},{},{}",
            p.phase,
            p.iteration,
            p.loss,
            opt(p.train_accuracy),
            opt(p.val_accuracy)
        )
        .unwrap();
    }
    s
}

pub fn emit_trace_csv(trace: &TrainingTrace, path: &Path) -> Result<()> {
    fs::write(path, trace_to_csv(trace)).map_err(|e| Error::io(path, e))
}

pub fn parse_trace_csv(text: &str) -> Result<TrainingTrace> {
    let bad = |line: usize, why: String| Error::Param(format!("trace csv line {line}: {why}"));
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == TRACE_HEADER => {}
        other => return Err(bad(1, format!("unexpected header {other:?}"))),
    }
    let mut points = Vec::new();
    for (i, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(bad(i + 2, format!("expected 5 fields, got {}", f.len())));
        }
        let real = |s: &str| s.parse::<f64>().map_err(|e| bad(i + 2, e.to_string()));
        let opt = |s: &str| {
            if s.is_empty() {
                Ok(None)
            } else {
                real(s).map(Some)
            }
        };
        points.push(TracePoint {
            phase: f[0].to_string(),
            iteration: f[1]
                .parse()
                .map_err(|e: std::num::ParseIntError| bad(i + 2, e.to_string()))?,
            loss: real(f[2])?,
            train_accuracy: opt(f[3])?,
            val_accuracy: opt(f[4])?,
        });
    }
    Ok(TrainingTrace { points })
}

/// Grayscale tile for one weight row: min-max scaled onto `[0, 255]`,
/// constant rows map to 128.
pub fn weight_tile(row: &[f64], width: usize, height: usize) -> Result<GrayImage> {
    let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pixels = if hi > lo {
        row.iter()
            .map(|v| ((v - lo) / (hi - lo) * 255.0).round() as u8)
            .collect()
    } else {
        vec![128; row.len()]
    };
    GrayImage::new(width, height, pixels)
}

/// Resolves the tile shape for an `n`-wide weight row.
pub fn tile_shape(n: usize, explicit: Option<(usize, usize)>) -> Result<(usize, usize)> {
    match explicit {
        Some((h, w)) if h * w == n => Ok((h, w)),
        Some((h, w)) => Err(Error::Param(format!(
            "tile shape {h}x{w} does not cover {n} weights"
        ))),
        None => {
            let side = (n as f64).sqrt().round() as usize;
            if side * side == n {
                Ok((side, side))
            } else {
                Err(Error::Param(format!(
                    "layer input width {n} is not a perfect square; pass an explicit height x width"
                )))
            }
        }
    }
}

/// Writes one PGM per hidden unit of encoder `layer` (0-based) as
/// `weight_<layer>_<neuron>.pgm`.
pub fn visualize_weights(
    net: &StackedNetwork,
    layer: usize,
    out_dir: &Path,
    shape: Option<(usize, usize)>,
) -> Result<Vec<PathBuf>> {
    let enc = net.encoders.get(layer).ok_or_else(|| {
        Error::Param(format!(
            "layer {layer} out of range; network has {} encoders",
            net.encoders.len()
        ))
    })?;
    let (h, w) = tile_shape(enc.n(), shape)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::with_capacity(enc.m());
    for j in 0..enc.m() {
        let tile = weight_tile(enc.w_enc.row(j), w, h)?;
        let path = out_dir.join(format!("weight_{layer}_{j}.pgm"));
        tile.write_pgm(&path)?;
        written.push(path);
    }
    Ok(written)
}
