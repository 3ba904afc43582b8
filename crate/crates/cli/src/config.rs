//! Flat run configuration: JSON file, then command-line overrides, then
//! validation of every key before any work starts.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use sae_core::{PhaseConfig, PreprocessConfig, ResizeFilter, SparsityConfig, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Directory with one subdirectory of images per class.
    pub data_dir: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub val_fraction: f64,
    /// `[n, m1, m2, ...]`; `n` must equal `target_height * target_width`.
    pub layers: Vec<usize>,
    pub target_height: usize,
    pub target_width: usize,
    /// `nearest` or `bilinear`.
    pub resize_filter: String,
    /// One entry per autoencoder layer.
    pub pretrain_epochs: Vec<usize>,
    pub softmax_epochs: usize,
    pub finetune_epochs: usize,
    pub pretrain_learning_rate: f64,
    pub softmax_learning_rate: f64,
    pub finetune_learning_rate: f64,
    /// `null` trains full-batch.
    pub batch_size: Option<usize>,
    pub rho: f64,
    pub beta: f64,
    pub lambda: f64,
    pub head_lambda: f64,
    pub log_every: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        let pre = PreprocessConfig::default();
        let sparsity = SparsityConfig::default();
        RunConfig {
            data_dir: None,
            out_dir: PathBuf::from("out"),
            seed: train.seed,
            val_fraction: 0.2,
            layers: vec![pre.feature_width(), 2000, 500],
            target_height: pre.target_height,
            target_width: pre.target_width,
            resize_filter: pre.resize_filter.to_string(),
            pretrain_epochs: train.pretrain.iter().map(|p| p.epochs).collect(),
            softmax_epochs: train.softmax.epochs,
            finetune_epochs: train.finetune.epochs,
            pretrain_learning_rate: train.pretrain[0].learning_rate,
            softmax_learning_rate: train.softmax.learning_rate,
            finetune_learning_rate: train.finetune.learning_rate,
            batch_size: train.batch_size,
            rho: sparsity.rho,
            beta: sparsity.beta,
            lambda: sparsity.lambda,
            head_lambda: train.head_lambda,
            log_every: train.log_every,
        }
    }
}

/// Flags shared by the commands that train or read image data. Every flag
/// overrides the matching key of `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// JSON file with any subset of the configuration keys.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Data directory (one subdirectory per class).
    #[arg(long, value_name = "DIR")]
    pub data: Option<PathBuf>,
    #[arg(long, value_name = "REAL")]
    pub val_fraction: Option<f64>,
    /// Layer widths including the input, e.g. `256,64,16`.
    #[arg(long, value_name = "N,M1,M2", value_delimiter = ',')]
    pub layers: Option<Vec<usize>>,
    /// Image height and width, e.g. `16x16`.
    #[arg(long, value_name = "HxW", value_parser = parse_size)]
    pub image_size: Option<(usize, usize)>,
    /// Epochs per pretraining layer, then softmax, then fine-tune.
    #[arg(long, value_name = "P1,P2,SM,FT", value_delimiter = ',')]
    pub epochs: Option<Vec<usize>>,
    /// One rate for every phase, or `pretrain,softmax,finetune`.
    #[arg(long, value_name = "RATES", value_delimiter = ',')]
    pub lr: Option<Vec<f64>>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Print the fully resolved configuration as JSON and exit.
    #[arg(long)]
    pub print_config: bool,
}

/// Parses `HxW`.
pub fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (h, w) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected HxW, got `{s}`"))?;
    let dim = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("`{v}`: {e}"));
    Ok((dim(h)?, dim(w)?))
}

/// Validated settings in the form the library consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub train: TrainConfig,
    pub preprocess: PreprocessConfig,
    pub layers: Vec<usize>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("config {}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// File config (or defaults) with `args` applied on top.
    pub fn from_args(args: &ConfigArgs) -> CliResult<Self> {
        let mut cfg = match &args.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        cfg.apply(args)?;
        Ok(cfg)
    }

    pub fn apply(&mut self, args: &ConfigArgs) -> CliResult<()> {
        if let Some(v) = args.seed {
            self.seed = v;
        }
        if let Some(v) = &args.out {
            self.out_dir = v.clone();
        }
        if let Some(v) = &args.data {
            self.data_dir = Some(v.clone());
        }
        if let Some(v) = args.val_fraction {
            self.val_fraction = v;
        }
        if let Some(v) = &args.layers {
            self.layers = v.clone();
        }
        if let Some((h, w)) = args.image_size {
            self.target_height = h;
            self.target_width = w;
        }
        if let Some(v) = &args.epochs {
            if v.len() < 3 {
                return Err(CliError::config(format!(
                    "--epochs needs one value per pretraining layer plus softmax and fine-tune, got {}",
                    v.len()
                )));
            }
            self.pretrain_epochs = v[..v.len() - 2].to_vec();
            self.softmax_epochs = v[v.len() - 2];
            self.finetune_epochs = v[v.len() - 1];
        }
        if let Some(v) = &args.lr {
            let (p, s, f) = match v.as_slice() {
                [a] => (*a, *a, *a),
                [p, s, f] => (*p, *s, *f),
                _ => {
                    return Err(CliError::config(format!(
                        "--lr takes 1 or 3 values, got {}",
                        v.len()
                    )))
                }
            };
            self.pretrain_learning_rate = p;
            self.softmax_learning_rate = s;
            self.finetune_learning_rate = f;
        }
        if let Some(v) = args.batch_size {
            self.batch_size = Some(v);
        }
        Ok(())
    }

    pub fn resolve(&self) -> CliResult<Resolved> {
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(CliError::config(format!(
                "val_fraction must lie in (0,1), got {}",
                self.val_fraction
            )));
        }
        let resize_filter: ResizeFilter = self.resize_filter.parse().map_err(CliError::config)?;
        let preprocess = PreprocessConfig {
            target_height: self.target_height,
            target_width: self.target_width,
            resize_filter,
        };
        preprocess.validate()?;
        if self.layers.len() < 2 || self.layers.contains(&0) {
            return Err(CliError::config(format!(
                "layers must list the input width and at least one hidden width, all >= 1, got {:?}",
                self.layers
            )));
        }
        if self.layers[0] != preprocess.feature_width() {
            return Err(CliError::config(format!(
                "layers[0] = {} but images are {}x{} = {} pixels",
                self.layers[0],
                self.target_height,
                self.target_width,
                preprocess.feature_width()
            )));
        }
        let depth = self.layers.len() - 1;
        if self.pretrain_epochs.len() != depth {
            return Err(CliError::config(format!(
                "pretrain_epochs has {} entries for {} autoencoder layers",
                self.pretrain_epochs.len(),
                depth
            )));
        }
        let sparsity = SparsityConfig::new(self.rho, self.beta, self.lambda)?;
        let train = TrainConfig {
            pretrain: self
                .pretrain_epochs
                .iter()
                .map(|&epochs| PhaseConfig {
                    epochs,
                    learning_rate: self.pretrain_learning_rate,
                })
                .collect(),
            softmax: PhaseConfig {
                epochs: self.softmax_epochs,
                learning_rate: self.softmax_learning_rate,
            },
            finetune: PhaseConfig {
                epochs: self.finetune_epochs,
                learning_rate: self.finetune_learning_rate,
            },
            batch_size: self.batch_size,
            seed: self.seed,
            sparsity: vec![sparsity; depth],
            head_lambda: self.head_lambda,
            log_every: self.log_every,
        };
        train.validate(depth)?;
        Ok(Resolved {
            train,
            preprocess,
            layers: self.layers.clone(),
        })
    }
}
