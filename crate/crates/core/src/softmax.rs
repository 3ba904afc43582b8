//! Softmax classifier head with cross-entropy loss.

use crate::error::{Error, Result};
use crate::gradcheck::{Parameters, Trainable};
use crate::matrix::{glorot_init, Matrix, RngState};

/// Floor applied to probabilities before taking their log.
pub const PROB_FLOOR: f64 = 1e-12;

/// Row-wise softmax with max subtraction.
pub fn softmax(z: &Matrix) -> Matrix {
    let mut out = z.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

/// Index of the largest entry; ties go to the lower index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxParams {
    /// `k × d`
    pub w: Matrix,
    /// `k × 1`
    pub b: Matrix,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxGradients {
    pub d_w: Matrix,
    pub d_b: Matrix,
    /// Gradient with respect to the input features, `batch × d`.
    pub d_features: Matrix,
}

impl SoftmaxParams {
    pub fn random(d: usize, k: usize, lambda: f64, rng: &mut RngState) -> Self {
        SoftmaxParams {
            w: glorot_init(k, d, rng),
            b: Matrix::zeros(k, 1),
            lambda,
        }
    }

    pub fn classes(&self) -> usize {
        self.w.rows()
    }

    pub fn input_width(&self) -> usize {
        self.w.cols()
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes() < 2 || self.input_width() < 1 {
            return Err(Error::Param(format!(
                "softmax head needs k >= 2 and d >= 1, got k={} d={}",
                self.classes(),
                self.input_width()
            )));
        }
        if self.b.shape() != (self.classes(), 1) {
            return Err(Error::shape(
                "softmax params",
                self.b.shape(),
                (self.classes(), 1),
            ));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Param(format!(
                "head lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        Ok(())
    }

    pub fn probabilities(&self, features: &Matrix) -> Result<Matrix> {
        if features.cols() != self.input_width() {
            return Err(Error::shape(
                "softmax head",
                features.shape(),
                self.w.shape(),
            ));
        }
        let z = features
            .matmul_transposed(&self.w)?
            .add_bias_rows(&self.b)?;
        Ok(softmax(&z))
    }

    pub fn loss(&self, features: &Matrix, labels: &Matrix) -> Result<f64> {
        let probs = self.checked_probabilities(features, labels)?;
        Ok(self.loss_from(&probs, labels))
    }

    pub fn gradients(&self, features: &Matrix, labels: &Matrix) -> Result<SoftmaxGradients> {
        Ok(self.loss_and_gradients(features, labels)?.1)
    }

    pub fn loss_and_gradients(
        &self,
        features: &Matrix,
        labels: &Matrix,
    ) -> Result<(f64, SoftmaxGradients)> {
        let probs = self.checked_probabilities(features, labels)?;
        let loss = self.loss_from(&probs, labels);
        let batch = features.rows() as f64;
        let delta = probs.sub(labels)?.scale(1.0 / batch);
        let mut d_w = delta.transposed_matmul(features)?;
        d_w.axpy_in_place(-self.lambda, &self.w);
        let d_b = delta.column_sums();
        let d_features = delta.matmul(&self.w)?;
        Ok((
            loss,
            SoftmaxGradients {
                d_w,
                d_b,
                d_features,
            },
        ))
    }

    fn checked_probabilities(&self, features: &Matrix, labels: &Matrix) -> Result<Matrix> {
        if features.rows() == 0 {
            return Err(Error::Param("softmax loss needs a non-empty batch".into()));
        }
        if labels.shape() != (features.rows(), self.classes()) {
            return Err(Error::shape(
                "softmax labels",
                labels.shape(),
                (features.rows(), self.classes()),
            ));
        }
        check_one_hot(labels)?;
        self.probabilities(features)
    }

    fn loss_from(&self, probs: &Matrix, labels: &Matrix) -> f64 {
        let batch = probs.rows() as f64;
        let ce: f64 = probs
            .data()
            .iter()
            .zip(labels.data())
            .filter(|(_, &t)| t != 0.0)
            .map(|(&p, &t)| -t * p.max(PROB_FLOOR).ln())
            .sum();
        ce / batch + 0.5 * self.lambda * self.w.frobenius_sq()
    }
}

pub fn check_one_hot(labels: &Matrix) -> Result<()> {
    for r in 0..labels.rows() {
        let row = labels.row(r);
        let ones = row.iter().filter(|&&v| v == 1.0).count();
        let zeros = row.iter().filter(|&&v| v == 0.0).count();
        if ones != 1 || ones + zeros != row.len() {
            return Err(Error::Param(format!("label row {r} is not one-hot")));
        }
    }
    Ok(())
}

/// One-hot encoding of class indices.
pub fn one_hot(classes: &[usize], k: usize) -> Result<Matrix> {
    let mut m = Matrix::zeros(classes.len(), k);
    for (r, &c) in classes.iter().enumerate() {
        if c >= k {
            return Err(Error::Param(format!(
                "class index {c} out of range for k={k}"
            )));
        }
        m.set(r, c, 1.0);
    }
    Ok(m)
}

impl Parameters for SoftmaxParams {
    fn slices(&self) -> Vec<&[f64]> {
        vec![self.w.data(), self.b.data()]
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![self.w.data_mut(), self.b.data_mut()]
    }
}

impl Trainable for SoftmaxParams {
    type Grad = SoftmaxGradients;

    fn trainable(&self) -> Vec<&[f64]> {
        self.slices()
    }

    fn trainable_mut(&mut self) -> Vec<&mut [f64]> {
        self.slices_mut()
    }
}

/// Only the parameter gradients; `d_features` is not a parameter.
impl Parameters for SoftmaxGradients {
    fn slices(&self) -> Vec<&[f64]> {
        vec![self.d_w.data(), self.d_b.data()]
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![self.d_w.data_mut(), self.d_b.data_mut()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::{finite_diff_gradient, max_relative_error, relative_error};
    use crate::matrix::seeded_rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_matrix(rows: usize, cols: usize, rng: &mut RngState) -> Matrix {
        let data = (0..rows * cols)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        Matrix::from_vec(rows, cols, data).unwrap()
    }

    fn random_instance(
        d: usize,
        k: usize,
        batch: usize,
        seed: u64,
    ) -> (SoftmaxParams, Matrix, Matrix) {
        let mut rng = seeded_rng(seed);
        let p = SoftmaxParams {
            w: random_matrix(k, d, &mut rng),
            b: random_matrix(k, 1, &mut rng),
            lambda: 0.05,
        };
        let f = random_matrix(batch, d, &mut rng);
        let classes: Vec<usize> = (0..batch).map(|_| rng.random_range(0..k)).collect();
        (p, f, one_hot(&classes, k).unwrap())
    }

    #[test]
    fn softmax_examples() {
        let p = softmax(&Matrix::from_rows(&[[0.0, 0.0]]).unwrap());
        assert_eq!(p.data(), &[0.5, 0.5]);
        let p = softmax(&Matrix::from_rows(&[[1f64.ln(), 3f64.ln()]]).unwrap());
        assert!((p.get(0, 0) - 0.25).abs() < 1e-15);
        assert!((p.get(0, 1) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn softmax_large_logits_stay_finite() {
        let p = softmax(&Matrix::from_rows(&[[1000.0, 1000.0, -1000.0]]).unwrap());
        assert!(p.is_finite());
        assert!((p.get(0, 0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.1, 0.7, 0.7]), 1);
        assert_eq!(argmax(&[0.1, 0.2, 0.7]), 2);
    }

    #[test]
    fn loss_examples() {
        // Huge margin on the true class → probability 1 → zero loss.
        let p = SoftmaxParams {
            w: Matrix::from_rows(&[[1000.0], [-1000.0]]).unwrap(),
            b: Matrix::zeros(2, 1),
            lambda: 0.0,
        };
        let f = Matrix::filled(1, 1, 1.0);
        let y = one_hot(&[0], 2).unwrap();
        assert_eq!(p.loss(&f, &y).unwrap(), 0.0);
        let g = p.gradients(&f, &y).unwrap();
        assert!(g.flatten().iter().all(|v| v.abs() < 1e-9));

        let p = SoftmaxParams {
            w: Matrix::zeros(2, 3),
            b: Matrix::zeros(2, 1),
            lambda: 0.0,
        };
        let f = Matrix::filled(2, 3, 0.3);
        let y = one_hot(&[0, 1], 2).unwrap();
        assert!((p.loss(&f, &y).unwrap() - 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn loss_matches_scalar_oracle() {
        let (p, f, y) = random_instance(3, 2, 2, 4);
        let mut expect = 0.0;
        for s in 0..2 {
            let logits: Vec<f64> = (0..2)
                .map(|c| (0..3).map(|j| p.w.get(c, j) * f.get(s, j)).sum::<f64>() + p.b.get(c, 0))
                .collect();
            let denom: f64 = logits.iter().map(|z| z.exp()).sum();
            for c in 0..2 {
                expect -= y.get(s, c) * (logits[c].exp() / denom).ln();
            }
        }
        expect /= 2.0;
        expect += 0.5 * p.lambda * p.w.data().iter().map(|v| v * v).sum::<f64>();
        assert!((p.loss(&f, &y).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn gradients_match_finite_differences_over_many_shapes() {
        for seed in 0..20u64 {
            let d = 1 + (seed as usize % 5);
            let k = 2 + (seed as usize % 3);
            let batch = 1 + (seed as usize % 4);
            let (p, f, y) = random_instance(d, k, batch, seed);
            let g = p.gradients(&f, &y).unwrap();
            let fd = finite_diff_gradient(&p, 1e-5, |q| q.loss(&f, &y).unwrap());
            let err = max_relative_error(&g.flatten(), &fd);
            assert!(err <= 1e-6, "seed {seed}: {err}");
        }
    }

    #[test]
    fn feature_gradient_matches_directional_difference() {
        let (p, f, y) = random_instance(4, 3, 3, 99);
        let g = p.gradients(&f, &y).unwrap();
        let eps = 1e-5;
        for idx in 0..f.data().len() {
            let mut plus = f.clone();
            plus.data_mut()[idx] += eps;
            let mut minus = f.clone();
            minus.data_mut()[idx] -= eps;
            let fd = (p.loss(&plus, &y).unwrap() - p.loss(&minus, &y).unwrap()) / (2.0 * eps);
            assert!(relative_error(g.d_features.data()[idx], fd) <= 1e-6);
        }
    }

    #[test]
    fn rejects_invalid_labels() {
        let (p, f, _) = random_instance(2, 2, 2, 1);
        let bad = Matrix::from_rows(&[[1.0, 1.0], [0.0, 1.0]]).unwrap();
        assert!(p.loss(&f, &bad).is_err());
        assert!(p.loss(&f, &Matrix::zeros(3, 2)).is_err());
        assert!(one_hot(&[2], 2).is_err());
    }

    proptest! {
        #[test]
        fn rows_sum_to_one_and_shift_invariant(seed in any::<u64>(), k in 2usize..6) {
            let mut rng = seeded_rng(seed);
            let z = random_matrix(3, k, &mut rng).scale(5.0);
            let p = softmax(&z);
            for r in 0..3 {
                let s: f64 = p.row(r).iter().sum();
                prop_assert!((s - 1.0).abs() < 1e-12);
                prop_assert!(p.row(r).iter().all(|&v| v > 0.0 && v < 1.0));
                prop_assert_eq!(argmax(p.row(r)), argmax(z.row(r)));
            }
            let shifted = softmax(&z.map_scalar(|v| v + 100.0));
            for (a, b) in p.data().iter().zip(shifted.data()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
