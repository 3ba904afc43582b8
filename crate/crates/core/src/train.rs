//! Gradient-descent training: greedy layerwise pretraining of the encoder
//! stack, the softmax head on top of the frozen features, and supervised
//! fine-tuning of everything at once.

use rand::seq::SliceRandom;

use crate::autoencoder::{AutoencoderParams, SparsityConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::gradcheck::{Parameters, Trainable};
use crate::matrix::{seeded_rng, Matrix, RngState};
use crate::network::{check_layer_sizes, StackedNetwork};
use crate::softmax::{argmax, SoftmaxParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseConfig {
    /// Passes over the data; 0 skips the phase.
    pub epochs: usize,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// One entry per autoencoder layer, input side first.
    pub pretrain: Vec<PhaseConfig>,
    pub softmax: PhaseConfig,
    pub finetune: PhaseConfig,
    /// `None` trains full-batch.
    pub batch_size: Option<usize>,
    pub seed: u64,
    /// One entry per autoencoder layer.
    pub sparsity: Vec<SparsityConfig>,
    pub head_lambda: f64,
    pub log_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig::for_layers(2)
    }
}

impl TrainConfig {
    /// Defaults for a stack of `layers` autoencoders.
    pub fn for_layers(layers: usize) -> Self {
        TrainConfig {
            pretrain: vec![
                PhaseConfig {
                    epochs: 400,
                    learning_rate: 0.1,
                };
                layers
            ],
            softmax: PhaseConfig {
                epochs: 400,
                learning_rate: 0.1,
            },
            finetune: PhaseConfig {
                epochs: 200,
                learning_rate: 0.01,
            },
            batch_size: None,
            seed: 0,
            sparsity: vec![SparsityConfig::default(); layers],
            head_lambda: 0.001,
            log_every: 10,
        }
    }

    pub fn validate(&self, layers: usize) -> Result<()> {
        if self.pretrain.len() != layers || self.sparsity.len() != layers {
            return Err(Error::Param(format!(
                "config has {} pretrain phases and {} sparsity configs for {} autoencoder layers",
                self.pretrain.len(),
                self.sparsity.len(),
                layers
            )));
        }
        for (i, p) in self
            .pretrain
            .iter()
            .chain([&self.softmax, &self.finetune])
            .enumerate()
        {
            if !(p.learning_rate > 0.0 && p.learning_rate.is_finite()) {
                return Err(Error::Param(format!(
                    "phase {i}: learning rate must be > 0, got {}",
                    p.learning_rate
                )));
            }
        }
        for s in &self.sparsity {
            s.validate()?;
        }
        if !(self.head_lambda >= 0.0 && self.head_lambda.is_finite()) {
            return Err(Error::Param(format!(
                "head lambda must be >= 0, got {}",
                self.head_lambda
            )));
        }
        if self.batch_size == Some(0) {
            return Err(Error::Param("batch size must be >= 1".into()));
        }
        if self.log_every == 0 {
            return Err(Error::Param("log_every must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TracePoint {
    pub phase: String,
    pub iteration: usize,
    pub loss: f64,
    /// Absent for unsupervised phases.
    pub train_accuracy: Option<f64>,
    pub val_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingTrace {
    pub points: Vec<TracePoint>,
}

impl TrainingTrace {
    pub fn extend(&mut self, other: TrainingTrace) {
        self.points.extend(other.points);
    }

    pub fn phase<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a TracePoint> + 'a {
        self.points.iter().filter(move |p| p.phase == name)
    }
}

/// How one phase iterates over its data.
#[derive(Debug, Clone, Copy)]
pub struct PhaseSpec<'a> {
    pub name: &'a str,
    pub config: PhaseConfig,
    pub batch_size: Option<usize>,
    pub log_every: usize,
}

/// Plain gradient descent, `θ ← θ − η·∇`.
///
/// `objective` receives the row indices of the current minibatch, or `None`
/// when the whole dataset forms the batch. Minibatch order is shuffled each
/// epoch with `rng`; full-batch training never touches it. A point is
/// logged at the first iteration, every `log_every` iterations and the last
/// iteration, with `monitor` supplying (train, validation) accuracies.
pub fn gd_train<P, F, M>(
    mut params: P,
    n_samples: usize,
    phase: &PhaseSpec<'_>,
    rng: &mut RngState,
    mut objective: F,
    mut monitor: M,
) -> Result<(P, TrainingTrace)>
where
    P: Trainable,
    F: FnMut(&P, Option<&[usize]>) -> Result<(f64, P::Grad)>,
    M: FnMut(&P) -> Result<(Option<f64>, Option<f64>)>,
{
    let mut trace = TrainingTrace::default();
    let cfg = phase.config;
    if cfg.epochs == 0 {
        return Ok((params, trace));
    }
    let batch = match phase.batch_size {
        Some(b) if b < n_samples => Some(b),
        _ => None,
    };
    let per_epoch = batch.map_or(1, |b| n_samples.div_ceil(b));
    let total = cfg.epochs * per_epoch;
    let mut order: Vec<usize> = (0..n_samples).collect();
    let mut iteration = 0;
    for _ in 0..cfg.epochs {
        if batch.is_some() {
            order.shuffle(rng);
        }
        for b in 0..per_epoch {
            iteration += 1;
            let rows = batch.map(|size| &order[b * size..((b + 1) * size).min(n_samples)]);
            let (loss, grad) = objective(&params, rows)?;
            if !loss.is_finite() {
                return Err(non_finite("loss", phase.name, iteration));
            }
            if !grad.all_finite() {
                return Err(non_finite("gradient", phase.name, iteration));
            }
            if iteration == 1 || iteration % phase.log_every == 0 || iteration == total {
                let (train_accuracy, val_accuracy) = monitor(&params)?;
                trace.points.push(TracePoint {
                    phase: phase.name.to_string(),
                    iteration,
                    loss,
                    train_accuracy,
                    val_accuracy,
                });
            }
            params.descend(&grad, cfg.learning_rate);
        }
    }
    Ok((params, trace))
}

fn non_finite(what: &'static str, phase: &str, iteration: usize) -> Error {
    Error::NonFinite {
        what,
        phase: phase.to_string(),
        iteration,
    }
}

fn rows_of<'a>(m: &'a Matrix, rows: Option<&[usize]>) -> std::borrow::Cow<'a, Matrix> {
    match rows {
        Some(r) => std::borrow::Cow::Owned(m.select_rows(r)),
        None => std::borrow::Cow::Borrowed(m),
    }
}

/// Fraction of rows whose argmax probability matches the one-hot label.
pub fn accuracy(probs: &Matrix, labels: &Matrix) -> f64 {
    if probs.rows() == 0 {
        return 0.0;
    }
    let hits = (0..probs.rows())
        .filter(|&r| argmax(probs.row(r)) == argmax(labels.row(r)))
        .count();
    hits as f64 / probs.rows() as f64
}

pub fn pretrain_phase_name(layer: usize) -> String {
    format!("pretrain{}", layer + 1)
}

/// Trains one autoencoder on `x`.
pub fn train_autoencoder(
    params: AutoencoderParams,
    x: &Matrix,
    sparsity: &SparsityConfig,
    phase: &PhaseSpec<'_>,
    rng: &mut RngState,
) -> Result<(AutoencoderParams, TrainingTrace)> {
    gd_train(
        params,
        x.rows(),
        phase,
        rng,
        |p, rows| p.loss_and_gradients(&rows_of(x, rows), sparsity),
        |_| Ok((None, None)),
    )
}

/// Greedy layerwise pretraining followed by training the softmax head on
/// the top-level features.
///
/// `layer_sizes = [n, m1, m2, ...]` with `n` the dataset width. Each
/// autoencoder is trained on the previous encoder's output; the head is
/// trained on the last one. `val` only feeds the validation accuracy
/// reported in the trace.
pub fn pretrain(
    train: &Dataset,
    val: Option<&Dataset>,
    layer_sizes: &[usize],
    cfg: &TrainConfig,
) -> Result<(StackedNetwork, TrainingTrace)> {
    check_layer_sizes(layer_sizes)?;
    let layers = layer_sizes.len() - 1;
    cfg.validate(layers)?;
    if layer_sizes[0] != train.width() {
        return Err(Error::shape(
            "pretrain input width",
            (train.len(), train.width()),
            (train.len(), layer_sizes[0]),
        ));
    }
    if train.is_empty() {
        return Err(Error::Param("cannot pretrain on an empty dataset".into()));
    }
    let mut rng = seeded_rng(cfg.seed);
    let mut trace = TrainingTrace::default();
    let mut encoders = Vec::with_capacity(layers);
    let mut features = train.features.clone();
    for (l, dims) in layer_sizes.windows(2).enumerate() {
        let name = pretrain_phase_name(l);
        let phase = PhaseSpec {
            name: &name,
            config: cfg.pretrain[l],
            batch_size: cfg.batch_size,
            log_every: cfg.log_every,
        };
        let init = AutoencoderParams::random(dims[0], dims[1], &mut rng);
        let (ae, t) = train_autoencoder(init, &features, &cfg.sparsity[l], &phase, &mut rng)?;
        features = ae.encode(&features)?;
        encoders.push(ae);
        trace.extend(t);
    }

    let classes = train.classes();
    let head = SoftmaxParams::random(layer_sizes[layers], classes, cfg.head_lambda, &mut rng);
    let val_features = match val {
        Some(v) => {
            let mut f = v.features.clone();
            for e in &encoders {
                f = e.encode(&f)?;
            }
            Some((f, &v.labels))
        }
        None => None,
    };
    let phase = PhaseSpec {
        name: "softmax",
        config: cfg.softmax,
        batch_size: cfg.batch_size,
        log_every: cfg.log_every,
    };
    let (head, t) = gd_train(
        head,
        train.len(),
        &phase,
        &mut rng,
        |h, rows| h.loss_and_gradients(&rows_of(&features, rows), &rows_of(&train.labels, rows)),
        |h| {
            let tr = accuracy(&h.probabilities(&features)?, &train.labels);
            let va = match &val_features {
                Some((f, y)) => Some(accuracy(&h.probabilities(f)?, y)),
                None => None,
            };
            Ok((Some(tr), va))
        },
    )?;
    trace.extend(t);
    let net = StackedNetwork::new(encoders, cfg.sparsity.clone(), head)?;
    Ok((net, trace))
}

/// Joint supervised training of every encoder and the head on the
/// cross-entropy objective. Decoders are left untouched.
pub fn fine_tune(
    net: StackedNetwork,
    train: &Dataset,
    val: Option<&Dataset>,
    cfg: &TrainConfig,
) -> Result<(StackedNetwork, TrainingTrace)> {
    net.validate()?;
    if train.width() != net.input_width() {
        return Err(Error::shape(
            "fine-tune input width",
            (train.len(), train.width()),
            (train.len(), net.input_width()),
        ));
    }
    if train.classes() != net.classes() {
        return Err(Error::Param(format!(
            "dataset has {} classes, network has {}",
            train.classes(),
            net.classes()
        )));
    }
    let mut rng = seeded_rng(cfg.seed);
    rng.set_stream(1);
    let phase = PhaseSpec {
        name: "finetune",
        config: cfg.finetune,
        batch_size: cfg.batch_size,
        log_every: cfg.log_every,
    };
    gd_train(
        net,
        train.len(),
        &phase,
        &mut rng,
        |n, rows| {
            n.finetune_loss_and_gradients(
                &rows_of(&train.features, rows),
                &rows_of(&train.labels, rows),
            )
        },
        |n| {
            let tr = accuracy(&n.probabilities(&train.features)?, &train.labels);
            let va = match val {
                Some(v) => Some(accuracy(&n.probabilities(&v.features)?, &v.labels)),
                None => None,
            };
            Ok((Some(tr), va))
        },
    )
}

/// Accuracy of `net` on a labeled dataset.
pub fn evaluate_accuracy(net: &StackedNetwork, data: &Dataset) -> Result<f64> {
    Ok(accuracy(&net.probabilities(&data.features)?, &data.labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth_blobs;

    #[derive(Clone, Debug, PartialEq)]
    struct Probe(Vec<f64>);

    impl Parameters for Probe {
        fn slices(&self) -> Vec<&[f64]> {
            vec![&self.0]
        }
        fn slices_mut(&mut self) -> Vec<&mut [f64]> {
            vec![&mut self.0]
        }
    }

    impl Trainable for Probe {
        type Grad = Probe;
        fn trainable(&self) -> Vec<&[f64]> {
            vec![&self.0]
        }
        fn trainable_mut(&mut self) -> Vec<&mut [f64]> {
            vec![&mut self.0]
        }
    }

    fn spec(epochs: usize, lr: f64) -> PhaseSpec<'static> {
        PhaseSpec {
            name: "probe",
            config: PhaseConfig {
                epochs,
                learning_rate: lr,
            },
            batch_size: None,
            log_every: 10,
        }
    }

    #[test]
    fn quadratic_probe_converges() {
        let (p, trace) = gd_train(
            Probe(vec![0.0]),
            1,
            &spec(50, 0.5),
            &mut seeded_rng(0),
            |p, _| {
                let d = p.0[0] - 3.0;
                Ok((0.5 * d * d, Probe(vec![d])))
            },
            |_| Ok((None, None)),
        )
        .unwrap();
        assert!((p.0[0] - 3.0).abs() < 1e-6);
        let iters: Vec<usize> = trace.points.iter().map(|t| t.iteration).collect();
        assert_eq!(iters, vec![1, 10, 20, 30, 40, 50]);
    }

    #[test]
    fn zero_epochs_is_identity() {
        let start = Probe(vec![1.5, -2.0]);
        let (p, trace) = gd_train(
            start.clone(),
            1,
            &spec(0, 0.5),
            &mut seeded_rng(0),
            |_, _| -> Result<(f64, Probe)> { unreachable!() },
            |_| Ok((None, None)),
        )
        .unwrap();
        assert_eq!(p, start);
        assert!(trace.points.is_empty());
    }

    #[test]
    fn non_finite_loss_names_phase_and_iteration() {
        let err = gd_train(
            Probe(vec![1.0]),
            1,
            &spec(5, 1.0),
            &mut seeded_rng(0),
            |p, _| Ok((if p.0[0] > 2.5 { f64::NAN } else { 0.0 }, Probe(vec![-1.0]))),
            |_| Ok((None, None)),
        )
        .unwrap_err();
        match err {
            Error::NonFinite {
                phase, iteration, ..
            } => {
                assert_eq!(phase, "probe");
                assert_eq!(iteration, 3);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn minibatches_cover_every_row_each_epoch() {
        let mut seen = Vec::new();
        let phase = PhaseSpec {
            batch_size: Some(3),
            ..spec(2, 0.1)
        };
        gd_train(
            Probe(vec![0.0]),
            7,
            &phase,
            &mut seeded_rng(4),
            |_, rows| {
                seen.push(rows.unwrap().to_vec());
                Ok((0.0, Probe(vec![0.0])))
            },
            |_| Ok((None, None)),
        )
        .unwrap();
        assert_eq!(seen.len(), 6);
        for epoch in seen.chunks(3) {
            let mut all: Vec<usize> = epoch.concat();
            all.sort_unstable();
            assert_eq!(all, (0..7).collect::<Vec<_>>());
        }
    }

    fn small_cfg(seed: u64) -> TrainConfig {
        TrainConfig {
            pretrain: vec![
                PhaseConfig {
                    epochs: 30,
                    learning_rate: 0.1
                };
                2
            ],
            softmax: PhaseConfig {
                epochs: 50,
                learning_rate: 0.1,
            },
            finetune: PhaseConfig {
                epochs: 20,
                learning_rate: 0.01,
            },
            batch_size: Some(16),
            seed,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn training_is_deterministic() {
        let ds = synth_blobs(20, 4, 0.1, 1).unwrap();
        let run = || {
            let (net, mut t) = pretrain(&ds, None, &[16, 8, 4], &small_cfg(5)).unwrap();
            let (net, t2) = fine_tune(net, &ds, None, &small_cfg(5)).unwrap();
            t.extend(t2);
            (net, t)
        };
        let (a, ta) = run();
        let (b, tb) = run();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        for phase in ["pretrain1", "pretrain2", "softmax", "finetune"] {
            let iters: Vec<usize> = ta.phase(phase).map(|p| p.iteration).collect();
            assert!(!iters.is_empty(), "{phase}");
            assert!(iters.windows(2).all(|w| w[0] < w[1]), "{phase}");
        }
    }

    #[test]
    fn fine_tune_zero_epochs_and_shape() {
        let ds = synth_blobs(10, 4, 0.1, 2).unwrap();
        let cfg = small_cfg(1);
        let (net, _) = pretrain(&ds, None, &[16, 6, 3], &cfg).unwrap();
        let mut zero = cfg.clone();
        zero.finetune.epochs = 0;
        let (same, trace) = fine_tune(net.clone(), &ds, None, &zero).unwrap();
        assert_eq!(same, net);
        assert!(trace.points.is_empty());

        let (tuned, _) = fine_tune(net.clone(), &ds, None, &cfg).unwrap();
        assert_eq!(tuned.shape(), net.shape());
        assert_eq!(tuned.encoders[0].w_dec, net.encoders[0].w_dec);
        assert_ne!(tuned.encoders[0].w_enc, net.encoders[0].w_enc);
    }

    #[test]
    fn pretrain_without_training_gives_random_projection_features() {
        let ds = synth_blobs(3, 4, 0.1, 2).unwrap();
        let mut cfg = small_cfg(1);
        cfg.pretrain = vec![
            PhaseConfig {
                epochs: 0,
                learning_rate: 0.1
            };
            1
        ];
        cfg.sparsity.truncate(1);
        let (net, _) = pretrain(&ds, None, &[16, 16], &cfg).unwrap();
        let feats = net.features(&ds.features).unwrap();
        assert_eq!(feats.shape(), (6, 16));
        // Zero biases: the features are exactly sigmoid(x·Wᵀ) of the Glorot draw.
        let expect = AutoencoderParams::random(16, 16, &mut seeded_rng(1))
            .encode(&ds.features)
            .unwrap();
        assert_eq!(feats, expect);
    }

    #[test]
    fn pretrain_rejects_bad_sizes() {
        let ds = synth_blobs(3, 4, 0.1, 2).unwrap();
        assert!(pretrain(&ds, None, &[15, 4, 2], &small_cfg(0)).is_err());
        assert!(pretrain(&ds, None, &[16, 4, 2, 2], &small_cfg(0)).is_err());
        assert!(pretrain(&ds, None, &[16], &small_cfg(0)).is_err());
    }

    #[test]
    fn overfit_two_samples() {
        let ds = synth_blobs(1, 4, 0.0, 0).unwrap();
        let mut cfg = small_cfg(3);
        cfg.batch_size = None;
        cfg.softmax.epochs = 300;
        cfg.softmax.learning_rate = 1.0;
        cfg.finetune.epochs = 300;
        cfg.finetune.learning_rate = 0.5;
        let (net, _) = pretrain(&ds, None, &[16, 4, 3], &cfg).unwrap();
        let (net, _) = fine_tune(net, &ds, None, &cfg).unwrap();
        assert_eq!(net.predict(&ds.features).unwrap().labels, vec![0, 1]);
    }
}
