//! The assembled classifier: an ordered stack of encoders feeding a softmax
//! head. Decoders ride along in each layer record but never take part in
//! prediction or fine-tuning.

use crate::autoencoder::{AutoencoderParams, SparsityConfig};
use crate::error::{Error, Result};
use crate::gradcheck::{Parameters, Trainable};
use crate::matrix::{Matrix, RngState};
use crate::softmax::{argmax, SoftmaxParams};

#[derive(Debug, Clone, PartialEq)]
pub struct StackedNetwork {
    /// Position in the list is the layer index, input side first.
    pub encoders: Vec<AutoencoderParams>,
    /// One sparsity/decay config per encoder; the lambdas also weight the
    /// encoder decay during fine-tuning.
    pub sparsity: Vec<SparsityConfig>,
    pub head: SoftmaxParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderGradients {
    pub d_w: Matrix,
    pub d_b: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGradients {
    pub encoders: Vec<EncoderGradients>,
    pub head_w: Matrix,
    pub head_b: Matrix,
}

#[derive(Debug, Clone)]
pub struct Prediction {
    pub labels: Vec<usize>,
    pub probs: Matrix,
}

impl StackedNetwork {
    pub fn new(
        encoders: Vec<AutoencoderParams>,
        sparsity: Vec<SparsityConfig>,
        head: SoftmaxParams,
    ) -> Result<Self> {
        let net = StackedNetwork {
            encoders,
            sparsity,
            head,
        };
        net.validate()?;
        Ok(net)
    }

    /// Random network for `layer_sizes = [n, m1, m2, ...]` and `classes`
    /// outputs. Draws layers input-side first, then the head.
    pub fn random(
        layer_sizes: &[usize],
        classes: usize,
        sparsity: &[SparsityConfig],
        head_lambda: f64,
        rng: &mut RngState,
    ) -> Result<Self> {
        check_layer_sizes(layer_sizes)?;
        if sparsity.len() != layer_sizes.len() - 1 {
            return Err(Error::Param(format!(
                "{} sparsity configs for {} autoencoder layers",
                sparsity.len(),
                layer_sizes.len() - 1
            )));
        }
        let encoders = layer_sizes
            .windows(2)
            .map(|w| AutoencoderParams::random(w[0], w[1], rng))
            .collect();
        let head = SoftmaxParams::random(*layer_sizes.last().unwrap(), classes, head_lambda, rng);
        StackedNetwork::new(encoders, sparsity.to_vec(), head)
    }

    pub fn validate(&self) -> Result<()> {
        if self.encoders.is_empty() {
            return Err(Error::Param("network needs at least one encoder".into()));
        }
        if self.sparsity.len() != self.encoders.len() {
            return Err(Error::Param(format!(
                "{} sparsity configs for {} encoders",
                self.sparsity.len(),
                self.encoders.len()
            )));
        }
        for (i, (enc, cfg)) in self.encoders.iter().zip(&self.sparsity).enumerate() {
            enc.validate()?;
            cfg.validate()?;
            if let Some(next) = self.encoders.get(i + 1) {
                if enc.m() != next.n() {
                    return Err(Error::shape(
                        "encoder chain",
                        (enc.n(), enc.m()),
                        (next.n(), next.m()),
                    ));
                }
            }
        }
        self.head.validate()?;
        let last = self.encoders.last().unwrap();
        if last.m() != self.head.input_width() {
            return Err(Error::shape(
                "encoder/head chain",
                (last.n(), last.m()),
                self.head.w.shape(),
            ));
        }
        Ok(())
    }

    pub fn input_width(&self) -> usize {
        self.encoders[0].n()
    }

    pub fn classes(&self) -> usize {
        self.head.classes()
    }

    /// `[n, m1, m2, ..., k]`
    pub fn shape(&self) -> Vec<usize> {
        let mut s = vec![self.input_width()];
        s.extend(self.encoders.iter().map(|e| e.m()));
        s.push(self.classes());
        s
    }

    /// Output of the last encoder.
    pub fn features(&self, x: &Matrix) -> Result<Matrix> {
        self.check_input(x)?;
        let mut a = x.clone();
        for enc in &self.encoders {
            a = enc.encode(&a)?;
        }
        Ok(a)
    }

    pub fn probabilities(&self, x: &Matrix) -> Result<Matrix> {
        self.head.probabilities(&self.features(x)?)
    }

    pub fn predict(&self, x: &Matrix) -> Result<Prediction> {
        let probs = self.probabilities(x)?;
        let labels = (0..probs.rows()).map(|r| argmax(probs.row(r))).collect();
        Ok(Prediction { labels, probs })
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.input_width() {
            return Err(Error::shape(
                "network input",
                x.shape(),
                (x.rows(), self.input_width()),
            ));
        }
        Ok(())
    }

    fn encoder_decay(&self) -> f64 {
        self.encoders
            .iter()
            .zip(&self.sparsity)
            .map(|(e, c)| 0.5 * c.lambda * e.w_enc.frobenius_sq())
            .sum()
    }

    /// Supervised end-to-end loss: cross-entropy of the head plus L2 decay
    /// on every encoder weight and the head weight.
    pub fn finetune_loss(&self, x: &Matrix, labels: &Matrix) -> Result<f64> {
        let feats = self.features(x)?;
        // The head loss carries the head's own decay term.
        Ok(self.head.loss(&feats, labels)? + self.encoder_decay())
    }

    pub fn finetune_loss_and_gradients(
        &self,
        x: &Matrix,
        labels: &Matrix,
    ) -> Result<(f64, NetworkGradients)> {
        self.check_input(x)?;
        let mut acts = Vec::with_capacity(self.encoders.len() + 1);
        acts.push(x.clone());
        for enc in &self.encoders {
            let next = enc.encode(acts.last().unwrap())?;
            acts.push(next);
        }
        let (head_loss, head_grad) = self.head.loss_and_gradients(acts.last().unwrap(), labels)?;
        let loss = head_loss + self.encoder_decay();

        let mut upstream = head_grad.d_features;
        let mut grads = Vec::with_capacity(self.encoders.len());
        for (l, (enc, cfg)) in self.encoders.iter().zip(&self.sparsity).enumerate().rev() {
            let a = &acts[l + 1];
            for (d, &h) in upstream.data_mut().iter_mut().zip(a.data()) {
                *d *= h * (1.0 - h);
            }
            let mut d_w = upstream.transposed_matmul(&acts[l])?;
            d_w.axpy_in_place(-cfg.lambda, &enc.w_enc);
            let d_b = upstream.column_sums();
            if l > 0 {
                upstream = upstream.matmul(&enc.w_enc)?;
            }
            grads.push(EncoderGradients { d_w, d_b });
        }
        grads.reverse();
        Ok((
            loss,
            NetworkGradients {
                encoders: grads,
                head_w: head_grad.d_w,
                head_b: head_grad.d_b,
            },
        ))
    }
}

pub(crate) fn check_layer_sizes(layer_sizes: &[usize]) -> Result<()> {
    if layer_sizes.len() < 2 {
        return Err(Error::Param(format!(
            "layer sizes need an input width and at least one hidden width, got {layer_sizes:?}"
        )));
    }
    if layer_sizes.contains(&0) {
        return Err(Error::Param(format!(
            "layer sizes must be >= 1, got {layer_sizes:?}"
        )));
    }
    Ok(())
}

impl Trainable for StackedNetwork {
    type Grad = NetworkGradients;

    fn trainable(&self) -> Vec<&[f64]> {
        let mut v: Vec<&[f64]> = Vec::new();
        for e in &self.encoders {
            v.push(e.w_enc.data());
            v.push(e.b_hidden.data());
        }
        v.push(self.head.w.data());
        v.push(self.head.b.data());
        v
    }

    fn trainable_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v: Vec<&mut [f64]> = Vec::new();
        for e in &mut self.encoders {
            v.push(e.w_enc.data_mut());
            v.push(e.b_hidden.data_mut());
        }
        v.push(self.head.w.data_mut());
        v.push(self.head.b.data_mut());
        v
    }
}

impl Parameters for NetworkGradients {
    fn slices(&self) -> Vec<&[f64]> {
        let mut v: Vec<&[f64]> = Vec::new();
        for e in &self.encoders {
            v.push(e.d_w.data());
            v.push(e.d_b.data());
        }
        v.push(self.head_w.data());
        v.push(self.head_b.data());
        v
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v: Vec<&mut [f64]> = Vec::new();
        for e in &mut self.encoders {
            v.push(e.d_w.data_mut());
            v.push(e.d_b.data_mut());
        }
        v.push(self.head_w.data_mut());
        v.push(self.head_b.data_mut());
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::{finite_diff_gradient, max_relative_error};
    use crate::matrix::seeded_rng;
    use crate::softmax::one_hot;
    use rand::Rng;

    fn tiny(seed: u64) -> (StackedNetwork, Matrix, Matrix) {
        let mut rng = seeded_rng(seed);
        let sp = [SparsityConfig::new(0.1, 1.0, 0.01).unwrap(); 2];
        let mut net = StackedNetwork::random(&[4, 3, 2], 2, &sp, 0.02, &mut rng).unwrap();
        // Non-zero biases so their gradients are exercised.
        for e in &mut net.encoders {
            for b in e.b_hidden.data_mut() {
                *b = rng.random_range(-0.5..0.5);
            }
        }
        let x =
            Matrix::from_vec(3, 4, (0..12).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap();
        let y = one_hot(&[0, 1, 1], 2).unwrap();
        (net, x, y)
    }

    #[test]
    fn shape_chain_validation() {
        let (net, _, _) = tiny(1);
        assert_eq!(net.shape(), vec![4, 3, 2, 2]);
        let mut bad = net.clone();
        bad.encoders[1] = AutoencoderParams::zeros(5, 2);
        assert!(bad.validate().is_err());
        let mut bad = net.clone();
        bad.head = SoftmaxParams::random(3, 2, 0.0, &mut seeded_rng(0));
        assert!(bad.validate().is_err());
        let mut bad = net;
        bad.sparsity.pop();
        assert!(bad.validate().is_err());
    }

    #[test]
    fn full_stack_gradients_match_finite_differences() {
        for seed in 0..10 {
            let (net, x, y) = tiny(seed);
            let (_, g) = net.finetune_loss_and_gradients(&x, &y).unwrap();
            let fd = finite_diff_gradient(&net, 1e-5, |n| n.finetune_loss(&x, &y).unwrap());
            let err = max_relative_error(&g.flatten(), &fd);
            assert!(err <= 1e-6, "seed {seed}: {err}");
        }
    }

    #[test]
    fn predict_rows_sum_to_one_and_commute_with_permutation() {
        let (net, x, _) = tiny(3);
        let p = net.predict(&x).unwrap();
        for r in 0..p.probs.rows() {
            assert!((p.probs.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let perm = [2, 0, 1];
        let q = net.predict(&x.select_rows(&perm)).unwrap();
        for (i, &src) in perm.iter().enumerate() {
            assert_eq!(q.labels[i], p.labels[src]);
            assert_eq!(q.probs.row(i), p.probs.row(src));
        }
    }

    #[test]
    fn predict_rejects_wrong_width() {
        let (net, _, _) = tiny(3);
        assert!(matches!(
            net.predict(&Matrix::zeros(1, 5)),
            Err(Error::Shape { .. })
        ));
    }
}
