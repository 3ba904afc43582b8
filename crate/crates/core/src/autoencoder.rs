//! A single sparse autoencoder layer.
//!
//! Encoder: `h = s(x·W_encᵀ + b_hidden)`, decoder: `y = s(h·W_decᵀ + b_out)`,
//! with `s` the logistic sigmoid. Encoder and decoder weights are separate
//! parameters (untied). The training objective is
//!
//! ```text
//! L = (1/B) Σ ½‖y − x‖²  +  (λ/2)(‖W_enc‖² + ‖W_dec‖²)  +  β Σ_j KL(ρ ‖ ρ̂_j)
//! ```
//!
//! where `ρ̂_j` is the batch-mean activation of hidden unit `j`. Biases are
//! not decayed.

use crate::error::{Error, Result};
use crate::gradcheck::{Parameters, Trainable};
use crate::matrix::{glorot_init, Matrix, RngState};

/// Bound applied to `ρ̂_j` before it enters the KL term.
pub const KL_CLAMP: f64 = 1e-10;

/// Logistic function on one value, branching on sign so `exp` never
/// overflows.
#[inline]
pub fn sigmoid_scalar(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid(v: &Matrix) -> Matrix {
    v.map_scalar(sigmoid_scalar)
}

/// Bernoulli KL divergence `KL(p ‖ q)`.
pub fn kl_divergence(p: f64, q: f64) -> f64 {
    p * (p / q).ln() + (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparsityConfig {
    /// Target mean activation, in (0, 1).
    pub rho: f64,
    /// Weight of the sparsity penalty.
    pub beta: f64,
    /// L2 weight decay.
    pub lambda: f64,
}

impl Default for SparsityConfig {
    fn default() -> Self {
        SparsityConfig {
            rho: 0.05,
            beta: 1.0,
            lambda: 0.001,
        }
    }
}

impl SparsityConfig {
    pub fn new(rho: f64, beta: f64, lambda: f64) -> Result<Self> {
        let cfg = SparsityConfig { rho, beta, lambda };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::Param(format!(
                "rho must lie in (0,1), got {}",
                self.rho
            )));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::Param(format!(
                "beta must be >= 0, got {}",
                self.beta
            )));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Param(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderParams {
    /// `m × n`
    pub w_enc: Matrix,
    /// `m × 1`
    pub b_hidden: Matrix,
    /// `n × m`
    pub w_dec: Matrix,
    /// `n × 1`
    pub b_out: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradients {
    pub d_w_enc: Matrix,
    pub d_b_hidden: Matrix,
    pub d_w_dec: Matrix,
    pub d_b_out: Matrix,
}

impl AutoencoderParams {
    /// Glorot-uniform weights, zero biases. Draws the encoder then the
    /// decoder from `rng`.
    pub fn random(n: usize, m: usize, rng: &mut RngState) -> Self {
        let w_enc = glorot_init(m, n, rng);
        let w_dec = glorot_init(n, m, rng);
        AutoencoderParams {
            w_enc,
            b_hidden: Matrix::zeros(m, 1),
            w_dec,
            b_out: Matrix::zeros(n, 1),
        }
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        AutoencoderParams {
            w_enc: Matrix::zeros(m, n),
            b_hidden: Matrix::zeros(m, 1),
            w_dec: Matrix::zeros(n, m),
            b_out: Matrix::zeros(n, 1),
        }
    }

    /// Input/output width.
    pub fn n(&self) -> usize {
        self.w_enc.cols()
    }

    /// Hidden width.
    pub fn m(&self) -> usize {
        self.w_enc.rows()
    }

    pub fn validate(&self) -> Result<()> {
        let (n, m) = (self.n(), self.m());
        let expect = [
            (self.b_hidden.shape(), (m, 1)),
            (self.w_dec.shape(), (n, m)),
            (self.b_out.shape(), (n, 1)),
        ];
        for (got, want) in expect {
            if got != want {
                return Err(Error::shape("autoencoder params", got, want));
            }
        }
        if n == 0 || m == 0 {
            return Err(Error::Param("autoencoder widths must be >= 1".into()));
        }
        Ok(())
    }

    pub fn encode(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.n() {
            return Err(Error::shape("encode", x.shape(), self.w_enc.shape()));
        }
        let z = x
            .matmul_transposed(&self.w_enc)?
            .add_bias_rows(&self.b_hidden)?;
        Ok(sigmoid(&z))
    }

    pub fn decode(&self, h: &Matrix) -> Result<Matrix> {
        if h.cols() != self.m() {
            return Err(Error::shape("decode", h.shape(), self.w_dec.shape()));
        }
        let z = h
            .matmul_transposed(&self.w_dec)?
            .add_bias_rows(&self.b_out)?;
        Ok(sigmoid(&z))
    }

    pub fn loss(&self, x: &Matrix, cfg: &SparsityConfig) -> Result<f64> {
        let fwd = self.forward(x)?;
        Ok(self.loss_from(&fwd, x, cfg))
    }

    pub fn gradients(&self, x: &Matrix, cfg: &SparsityConfig) -> Result<LayerGradients> {
        Ok(self.loss_and_gradients(x, cfg)?.1)
    }

    /// Loss and gradients from one shared forward pass.
    pub fn loss_and_gradients(
        &self,
        x: &Matrix,
        cfg: &SparsityConfig,
    ) -> Result<(f64, LayerGradients)> {
        let fwd = self.forward(x)?;
        let loss = self.loss_from(&fwd, x, cfg);
        let batch = x.rows() as f64;

        // Output error through the decoder sigmoid.
        let mut delta_out = fwd.y.sub(x)?;
        for (d, &y) in delta_out.data_mut().iter_mut().zip(fwd.y.data()) {
            *d *= y * (1.0 - y) / batch;
        }
        let mut d_w_dec = delta_out.transposed_matmul(&fwd.h)?;
        d_w_dec.axpy_in_place(-cfg.lambda, &self.w_dec);
        let d_b_out = delta_out.column_sums();

        // Back into the hidden layer, plus the sparsity term through ρ̂.
        let mut d_h = delta_out.matmul(&self.w_dec)?;
        if cfg.beta != 0.0 {
            let sparse: Vec<f64> = fwd
                .rho_hat
                .iter()
                .map(|&q| cfg.beta * (-cfg.rho / q + (1.0 - cfg.rho) / (1.0 - q)) / batch)
                .collect();
            for r in 0..d_h.rows() {
                for (d, s) in d_h.row_mut(r).iter_mut().zip(&sparse) {
                    *d += s;
                }
            }
        }
        for (d, &h) in d_h.data_mut().iter_mut().zip(fwd.h.data()) {
            *d *= h * (1.0 - h);
        }
        let mut d_w_enc = d_h.transposed_matmul(x)?;
        d_w_enc.axpy_in_place(-cfg.lambda, &self.w_enc);
        let d_b_hidden = d_h.column_sums();

        Ok((
            loss,
            LayerGradients {
                d_w_enc,
                d_b_hidden,
                d_w_dec,
                d_b_out,
            },
        ))
    }

    fn forward(&self, x: &Matrix) -> Result<Forward> {
        if x.rows() == 0 {
            return Err(Error::Param(
                "autoencoder loss needs a non-empty batch".into(),
            ));
        }
        let h = self.encode(x)?;
        let y = self.decode(&h)?;
        let batch = x.rows() as f64;
        let rho_hat = h
            .column_sums()
            .data()
            .iter()
            .map(|s| (s / batch).clamp(KL_CLAMP, 1.0 - KL_CLAMP))
            .collect();
        Ok(Forward { h, y, rho_hat })
    }

    fn loss_from(&self, fwd: &Forward, x: &Matrix, cfg: &SparsityConfig) -> f64 {
        let batch = x.rows() as f64;
        let recon: f64 = fwd
            .y
            .data()
            .iter()
            .zip(x.data())
            .map(|(y, x)| (y - x) * (y - x))
            .sum::<f64>()
            * 0.5
            / batch;
        let decay = 0.5 * cfg.lambda * (self.w_enc.frobenius_sq() + self.w_dec.frobenius_sq());
        let sparsity = if cfg.beta != 0.0 {
            cfg.beta
                * fwd
                    .rho_hat
                    .iter()
                    .map(|&q| kl_divergence(cfg.rho, q))
                    .sum::<f64>()
        } else {
            0.0
        };
        recon + decay + sparsity
    }
}

struct Forward {
    h: Matrix,
    y: Matrix,
    rho_hat: Vec<f64>,
}

impl Parameters for AutoencoderParams {
    fn slices(&self) -> Vec<&[f64]> {
        vec![
            self.w_enc.data(),
            self.b_hidden.data(),
            self.w_dec.data(),
            self.b_out.data(),
        ]
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.w_enc.data_mut(),
            self.b_hidden.data_mut(),
            self.w_dec.data_mut(),
            self.b_out.data_mut(),
        ]
    }
}

impl Trainable for AutoencoderParams {
    type Grad = LayerGradients;

    fn trainable(&self) -> Vec<&[f64]> {
        self.slices()
    }

    fn trainable_mut(&mut self) -> Vec<&mut [f64]> {
        self.slices_mut()
    }
}

impl Parameters for LayerGradients {
    fn slices(&self) -> Vec<&[f64]> {
        vec![
            self.d_w_enc.data(),
            self.d_b_hidden.data(),
            self.d_w_dec.data(),
            self.d_b_out.data(),
        ]
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.d_w_enc.data_mut(),
            self.d_b_hidden.data_mut(),
            self.d_w_dec.data_mut(),
            self.d_b_out.data_mut(),
        ]
    }
}
