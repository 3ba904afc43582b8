//! In-browser demo on the synthetic two-blob corpus: preview samples, train
//! a small stacked autoencoder classifier, and render its first-layer
//! weights. The plain functions run natively; the `#[wasm_bindgen]` items
//! wrap them for JavaScript.

use sae_core::data::{split, synth_blobs};
use sae_core::eval::{evaluate, trace_to_csv, weight_tile, Evaluation};
use sae_core::train::{fine_tune, pretrain};
use sae_core::{StackedNetwork, TrainConfig, TrainingTrace};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Grayscale to RGBA with opaque alpha, the layout `ImageData` expects.
pub fn gray_to_rgba(gray: &[u8]) -> Vec<u8> {
    gray.iter().flat_map(|&g| [g, g, g, 255]).collect()
}

/// `count` samples of one class, laid out left to right with a 1-pixel
/// gap, as RGBA. Returns `(width, height, rgba)`.
pub fn sample_strip(
    class: usize,
    count: usize,
    side: usize,
    noise: f64,
    seed: u64,
) -> Result<(usize, usize, Vec<u8>), String> {
    if class > 1 {
        return Err(format!("class must be 0 or 1, got {class}"));
    }
    let ds = synth_blobs(count, side, noise, seed).map_err(|e| e.to_string())?;
    let tiles: Vec<Vec<u8>> = (0..count)
        .map(|i| {
            ds.features
                .row(class * count + i)
                .iter()
                .map(|v| (v * 255.0).round() as u8)
                .collect()
        })
        .collect();
    Ok(mosaic(&tiles, side, side, count))
}

/// Tiles of `w × h` gray pixels on a grid `columns` wide, separated by
/// 1-pixel mid-gray gaps.
fn mosaic(tiles: &[Vec<u8>], w: usize, h: usize, columns: usize) -> (usize, usize, Vec<u8>) {
    let columns = columns.clamp(1, tiles.len().max(1));
    let rows = tiles.len().div_ceil(columns);
    let width = columns * (w + 1) - 1;
    let height = (rows * (h + 1)).saturating_sub(1);
    let mut gray = vec![128u8; width * height];
    for (t, tile) in tiles.iter().enumerate() {
        let (r0, c0) = ((t / columns) * (h + 1), (t % columns) * (w + 1));
        for y in 0..h {
            let dst = (r0 + y) * width + c0;
            gray[dst..dst + w].copy_from_slice(&tile[y * w..(y + 1) * w]);
        }
    }
    (width, height, gray_to_rgba(&gray))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemoParams {
    pub side: usize,
    pub samples_per_class: usize,
    pub noise: f64,
    pub hidden1: usize,
    pub hidden2: usize,
    pub pretrain_epochs: usize,
    pub softmax_epochs: usize,
    pub finetune_epochs: usize,
    pub seed: u64,
}

impl Default for DemoParams {
    fn default() -> Self {
        DemoParams {
            side: 16,
            samples_per_class: 100,
            noise: 0.1,
            hidden1: 64,
            hidden2: 16,
            pretrain_epochs: 200,
            softmax_epochs: 200,
            finetune_epochs: 100,
            seed: 1,
        }
    }
}

pub struct DemoRun {
    pub params: DemoParams,
    pub network: StackedNetwork,
    pub trace: TrainingTrace,
    pub evaluation: Evaluation,
}

/// Generates the corpus, splits 80/20, pretrains and fine-tunes.
pub fn run_demo(p: DemoParams) -> Result<DemoRun, String> {
    let err = |e: sae_core::Error| e.to_string();
    let data = synth_blobs(p.samples_per_class, p.side, p.noise, p.seed).map_err(err)?;
    let (train, val) = split(&data, 0.2, p.seed).map_err(err)?;
    let mut cfg = TrainConfig::for_layers(2);
    cfg.seed = p.seed;
    for phase in &mut cfg.pretrain {
        phase.epochs = p.pretrain_epochs;
    }
    cfg.softmax.epochs = p.softmax_epochs;
    cfg.finetune.epochs = p.finetune_epochs;
    let layers = [p.side * p.side, p.hidden1, p.hidden2];
    let (net, mut trace) = pretrain(&train, Some(&val), &layers, &cfg).map_err(err)?;
    let (net, ft) = fine_tune(net, &train, Some(&val), &cfg).map_err(err)?;
    trace.extend(ft);
    let evaluation = evaluate(&net, &val).map_err(err)?;
    Ok(DemoRun {
        params: p,
        network: net,
        trace,
        evaluation,
    })
}

impl DemoRun {
    /// Trace points, report text and headline metrics as one JSON object.
    pub fn summary_json(&self) -> String {
        let points: Vec<_> = self
            .trace
            .points
            .iter()
            .map(|t| {
                json!({
                    "phase": t.phase,
                    "iteration": t.iteration,
                    "loss": t.loss,
                    "train_accuracy": t.train_accuracy,
                    "val_accuracy": t.val_accuracy,
                })
            })
            .collect();
        let m = &self.evaluation.metrics;
        json!({
            "shape": self.network.shape(),
            "trace": points,
            "accuracy": m.accuracy,
            "fp_rate_total": m.fp_rate_total,
            "fn_rate_total": m.fn_rate_total,
            "report": self.evaluation.report(),
        })
        .to_string()
    }

    /// First-layer encoder weights as a mosaic of `side × side` tiles.
    pub fn weight_mosaic(&self) -> Result<(usize, usize, Vec<u8>), String> {
        let enc = &self.network.encoders[0];
        let side = self.params.side;
        let tiles = (0..enc.m())
            .map(|j| {
                weight_tile(enc.w_enc.row(j), side, side)
                    .map(|t| t.pixels)
                    .map_err(|e| e.to_string())
            })
            .collect::<Result<Vec<_>, _>>()?;
        let columns = (enc.m() as f64).sqrt().ceil() as usize;
        Ok(mosaic(&tiles, side, side, columns))
    }
}

/// RGBA image handed to JavaScript.
#[wasm_bindgen]
pub struct Picture {
    width: usize,
    height: usize,
    rgba: Vec<u8>,
}

#[wasm_bindgen]
impl Picture {
    #[wasm_bindgen(getter)]
    pub fn width(&self) -> usize {
        self.width
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn rgba(&self) -> Vec<u8> {
        self.rgba.clone()
    }
}

impl From<(usize, usize, Vec<u8>)> for Picture {
    fn from((width, height, rgba): (usize, usize, Vec<u8>)) -> Self {
        Picture {
            width,
            height,
            rgba,
        }
    }
}

/// Operation 1: a strip of synthetic samples of one class.
#[wasm_bindgen(js_name = sampleStrip)]
pub fn sample_strip_js(
    class: usize,
    count: usize,
    side: usize,
    noise: f64,
    seed: u32,
) -> Result<Picture, JsError> {
    sample_strip(class, count, side, noise, seed.into())
        .map(Picture::from)
        .map_err(|e| JsError::new(&e))
}

/// A trained model kept alive on the JavaScript side.
#[wasm_bindgen]
pub struct Trained(DemoRun);

/// Operation 2: train on a fresh synthetic corpus.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn train(
    side: usize,
    samples_per_class: usize,
    noise: f64,
    hidden1: usize,
    hidden2: usize,
    pretrain_epochs: usize,
    finetune_epochs: usize,
    seed: u32,
) -> Result<Trained, JsError> {
    let p = DemoParams {
        side,
        samples_per_class,
        noise,
        hidden1,
        hidden2,
        pretrain_epochs,
        softmax_epochs: pretrain_epochs,
        finetune_epochs,
        seed: seed.into(),
    };
    run_demo(p).map(Trained).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
impl Trained {
    pub fn summary(&self) -> String {
        self.0.summary_json()
    }

    #[wasm_bindgen(js_name = traceCsv)]
    pub fn trace_csv(&self) -> String {
        trace_to_csv(&self.0.trace)
    }

    /// Operation 3: first-layer weight tiles.
    #[wasm_bindgen(js_name = weightMosaic)]
    pub fn weight_mosaic(&self) -> Result<Picture, JsError> {
        self.0
            .weight_mosaic()
            .map(Picture::from)
            .map_err(|e| JsError::new(&e))
    }
}
