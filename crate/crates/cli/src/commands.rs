//! One function per subcommand. Each returns the text it would print so
//! the binary and the tests share a code path.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sae_core::data::{load_directory, load_image, split, synth_blobs, write_dataset_pgm};
use sae_core::eval::{emit_trace_csv, evaluate, visualize_weights, Evaluation};
use sae_core::selfcheck::{run_suite, SuiteReport, GRADCHECK_TOLERANCE};
use sae_core::train::{fine_tune, pretrain};
use sae_core::{model_io, Dataset, StackedNetwork};

use crate::config::{Resolved, RunConfig};
use crate::error::{CliError, CliResult};

pub const MODEL_FILE: &str = "model.saem";
pub const TRACE_FILE: &str = "trace.csv";
pub const REPORT_FILE: &str = "report.txt";
pub const CONFIG_FILE: &str = "config.json";

/// Class names live next to the model, one per line, in label order.
pub fn classes_path(model: &Path) -> PathBuf {
    model.with_extension("classes")
}

pub fn write_classes(model: &Path, names: &[String]) -> CliResult<()> {
    let path = classes_path(model);
    let mut text = names.join("\n");
    text.push('\n');
    fs::write(&path, text)
        .map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))
}

/// Reads the class-name sidecar; `None` if it does not exist.
pub fn read_classes(model: &Path) -> CliResult<Option<Vec<String>>> {
    let path = classes_path(model);
    match fs::read_to_string(&path) {
        Ok(text) => Ok(Some(text.lines().map(str::to_string).collect())),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(CliError::data(format!(
            "cannot read {}: {e}",
            path.display()
        ))),
    }
}

fn data_dir(cfg: &RunConfig) -> CliResult<&Path> {
    cfg.data_dir
        .as_deref()
        .ok_or_else(|| CliError::config("no data directory: pass --data or set data_dir"))
}

fn load_data(cfg: &RunConfig, resolved: &Resolved) -> CliResult<Dataset> {
    let dir = data_dir(cfg)?;
    if !dir.is_dir() {
        return Err(CliError::data(format!(
            "data directory {} does not exist",
            dir.display()
        )));
    }
    Ok(load_directory(dir, &resolved.preprocess)?)
}

pub struct TrainOutcome {
    pub network: StackedNetwork,
    pub evaluation: Evaluation,
    pub model_path: PathBuf,
}

/// Ingest, split, pretrain, fine-tune, then write the model, class names,
/// trace, validation report and resolved config into `out_dir`.
pub fn train(cfg: &RunConfig) -> CliResult<(TrainOutcome, String)> {
    let resolved = cfg.resolve()?;
    let data = load_data(cfg, &resolved)?;
    let (train_set, val_set) = split(&data, cfg.val_fraction, cfg.seed)?;
    let (net, mut trace) = pretrain(
        &train_set,
        Some(&val_set),
        &resolved.layers,
        &resolved.train,
    )?;
    let (net, ft) = fine_tune(net, &train_set, Some(&val_set), &resolved.train)?;
    trace.extend(ft);
    let evaluation = evaluate(&net, &val_set)?;

    let out = &cfg.out_dir;
    fs::create_dir_all(out)
        .map_err(|e| CliError::data(format!("cannot create {}: {e}", out.display())))?;
    let model_path = out.join(MODEL_FILE);
    model_io::save(&net, &model_path)?;
    write_classes(&model_path, &data.class_names)?;
    emit_trace_csv(&trace, &out.join(TRACE_FILE))?;
    let report = evaluation.report();
    let write = |name: &str, text: &str| {
        let p = out.join(name);
        fs::write(&p, text)
            .map_err(|e| CliError::data(format!("cannot write {}: {e}", p.display())))
    };
    write(REPORT_FILE, &report)?;
    write(CONFIG_FILE, &cfg.to_json())?;

    let mut text = String::new();
    writeln!(
        text,
        "trained {:?} on {} samples ({} validation); model written to {}",
        net.shape(),
        train_set.len(),
        val_set.len(),
        model_path.display()
    )
    .unwrap();
    text.push_str(&report);
    Ok((
        TrainOutcome {
            network: net,
            evaluation,
            model_path,
        },
        text,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SplitPart {
    All,
    Train,
    Val,
}

/// Evaluates a saved model on the data directory, or on one side of the
/// same split `train` used.
pub fn eval(cfg: &RunConfig, model: &Path, part: SplitPart) -> CliResult<Evaluation> {
    let resolved = cfg.resolve()?;
    let net = model_io::load(model)?;
    let data = load_data(cfg, &resolved)?;
    if net.input_width() != data.width() {
        return Err(CliError::data(format!(
            "model {} expects input width {}, data has width {}",
            model.display(),
            net.input_width(),
            data.width()
        )));
    }
    if let Some(names) = read_classes(model)? {
        if names != data.class_names {
            return Err(CliError::data(format!(
                "model classes {:?} differ from data classes {:?}",
                names, data.class_names
            )));
        }
    }
    let data = match part {
        SplitPart::All => data,
        SplitPart::Train => split(&data, cfg.val_fraction, cfg.seed)?.0,
        SplitPart::Val => split(&data, cfg.val_fraction, cfg.seed)?.1,
    };
    Ok(evaluate(&net, &data)?)
}

/// One line per image: path, predicted class, then per-class probabilities.
pub fn predict(cfg: &RunConfig, model: &Path, images: &[PathBuf]) -> CliResult<String> {
    let resolved = cfg.resolve()?;
    let net = model_io::load(model)?;
    if net.input_width() != resolved.preprocess.feature_width() {
        return Err(CliError::data(format!(
            "model {} expects input width {}, configured images give {}",
            model.display(),
            net.input_width(),
            resolved.preprocess.feature_width()
        )));
    }
    let names = read_classes(model)?
        .unwrap_or_else(|| (0..net.classes()).map(|c| format!("class{c}")).collect());
    let mut text = String::new();
    for path in images {
        let row = load_image(path, &resolved.preprocess)?;
        let p = net.predict(&row)?;
        let probs: Vec<String> = names
            .iter()
            .zip(p.probs.row(0))
            .map(|(n, v)| format!("{n}={v:.6}"))
            .collect();
        writeln!(
            text,
            "{} {} {}",
            path.display(),
            names[p.labels[0]],
            probs.join(" ")
        )
        .unwrap();
    }
    Ok(text)
}

pub fn visualize(
    model: &Path,
    layer: usize,
    out_dir: &Path,
    shape: Option<(usize, usize)>,
) -> CliResult<Vec<PathBuf>> {
    let net = model_io::load(model)?;
    Ok(visualize_weights(&net, layer, out_dir, shape)?)
}

pub fn gradcheck(seed: u64, configs: usize) -> CliResult<(SuiteReport, String)> {
    let r = run_suite(seed, configs)?;
    let text = format!(
        "configurations per component: {}\nautoencoder layer  {:.3e}\nsoftmax head       {:.3e}\nfull stack         {:.3e}\nmax relative error {:.3e} (tolerance {:.0e})\n",
        r.configs_per_component,
        r.layer,
        r.head,
        r.stack,
        r.max(),
        GRADCHECK_TOLERANCE
    );
    if !r.passed() {
        return Err(CliError::numeric(format!(
            "gradient check failed: max relative error {:.3e} exceeds {:.0e}",
            r.max(),
            GRADCHECK_TOLERANCE
        )));
    }
    Ok((r, text))
}

pub fn synth(
    out_dir: &Path,
    samples_per_class: usize,
    side: usize,
    noise_sd: f64,
    seed: u64,
) -> CliResult<Vec<PathBuf>> {
    let ds = synth_blobs(samples_per_class, side, noise_sd, seed)?;
    Ok(write_dataset_pgm(&ds, side, out_dir)?)
}
