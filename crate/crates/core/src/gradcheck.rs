//! Flat parameter access and the central-difference gradient oracle.

/// A bundle of parameter (or gradient) arrays exposed as flat slices in a
/// fixed order.
pub trait Parameters {
    fn slices(&self) -> Vec<&[f64]>;
    fn slices_mut(&mut self) -> Vec<&mut [f64]>;

    fn num_values(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    fn flatten(&self) -> Vec<f64> {
        self.slices().concat()
    }

    fn all_finite(&self) -> bool {
        self.slices()
            .iter()
            .all(|s| s.iter().all(|v| v.is_finite()))
    }
}

/// Something gradient descent can update. `trainable_mut` yields the
/// updatable arrays in the same order as `Grad::slices`.
pub trait Trainable {
    type Grad: Parameters;

    fn trainable(&self) -> Vec<&[f64]>;
    fn trainable_mut(&mut self) -> Vec<&mut [f64]>;

    /// `θ ← θ − rate·∇`.
    fn descend(&mut self, grad: &Self::Grad, rate: f64) {
        for (p, g) in self.trainable_mut().into_iter().zip(grad.slices()) {
            debug_assert_eq!(p.len(), g.len());
            for (pv, gv) in p.iter_mut().zip(g) {
                *pv -= rate * gv;
            }
        }
    }
}

/// Central differences `(L(θ+ε) − L(θ−ε)) / 2ε` for every trainable scalar,
/// flattened in `trainable()` order.
pub fn finite_diff_gradient<P, F>(params: &P, epsilon: f64, loss: F) -> Vec<f64>
where
    P: Trainable + Clone,
    F: Fn(&P) -> f64,
{
    central_stencil(params, epsilon, &[(1.0, 0.5)], loss)
}

/// Fourth-order central differences
/// `(8(L(θ+ε) − L(θ−ε)) − (L(θ+2ε) − L(θ−2ε))) / 12ε`. Truncation error
/// is `O(ε⁴)`, so a larger `ε` keeps rounding noise low on tiny gradients.
pub fn finite_diff_gradient_4th<P, F>(params: &P, epsilon: f64, loss: F) -> Vec<f64>
where
    P: Trainable + Clone,
    F: Fn(&P) -> f64,
{
    central_stencil(
        params,
        epsilon,
        &[(1.0, 8.0 / 12.0), (2.0, -1.0 / 12.0)],
        loss,
    )
}

/// `Σ w · (L(θ+sε) − L(θ−sε)) / ε` over `(s, w)` taps.
fn central_stencil<P, F>(params: &P, epsilon: f64, taps: &[(f64, f64)], loss: F) -> Vec<f64>
where
    P: Trainable + Clone,
    F: Fn(&P) -> f64,
{
    assert!(epsilon > 0.0, "epsilon must be positive");
    let mut probe = params.clone();
    let lens: Vec<usize> = params.trainable().iter().map(|s| s.len()).collect();
    let mut out = Vec::with_capacity(lens.iter().sum());
    for (si, &len) in lens.iter().enumerate() {
        for i in 0..len {
            let orig = probe.trainable()[si][i];
            let mut acc = 0.0;
            for &(step, weight) in taps {
                probe.trainable_mut()[si][i] = orig + step * epsilon;
                let plus = loss(&probe);
                probe.trainable_mut()[si][i] = orig - step * epsilon;
                let minus = loss(&probe);
                acc += weight * (plus - minus);
            }
            probe.trainable_mut()[si][i] = orig;
            out.push(acc / epsilon);
        }
    }
    out
}

/// `|a − b| / max(1e-8, |a| + |b|)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs()).max(1e-8)
}

pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &b)| relative_error(a, b))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Clone)]
    struct Scalar(Vec<f64>);

    impl Parameters for Scalar {
        fn slices(&self) -> Vec<&[f64]> {
            vec![&self.0]
        }
        fn slices_mut(&mut self) -> Vec<&mut [f64]> {
            vec![&mut self.0]
        }
    }

    impl Trainable for Scalar {
        type Grad = Scalar;
        fn trainable(&self) -> Vec<&[f64]> {
            vec![&self.0]
        }
        fn trainable_mut(&mut self) -> Vec<&mut [f64]> {
            vec![&mut self.0]
        }
    }

    #[test]
    fn quadratic_probe() {
        let g = finite_diff_gradient(&Scalar(vec![3.0]), 1e-5, |p| 0.5 * p.0[0] * p.0[0]);
        assert!((g[0] - 3.0).abs() < 1e-8);
    }

    #[test]
    fn affine_probe_has_no_truncation_error() {
        // Only rounding remains, which grows like ulp / eps.
        for eps in [1e-6, 1e-3, 0.5, 2.0] {
            let g = finite_diff_gradient(&Scalar(vec![1.25]), eps, |p| 5.0 * p.0[0]);
            assert!(
                (g[0] - 5.0).abs() < 1e-14 / eps + 1e-12,
                "eps {eps}: {}",
                g[0]
            );
        }
    }

    #[test]
    fn fourth_order_is_exact_on_cubics() {
        let g = finite_diff_gradient_4th(&Scalar(vec![2.0]), 0.1, |p| p.0[0].powi(3));
        assert!((g[0] - 12.0).abs() < 1e-12, "{}", g[0]);
        let g = finite_diff_gradient(&Scalar(vec![2.0]), 0.1, |p| p.0[0].powi(3));
        assert!((g[0] - 12.01).abs() < 1e-12, "{}", g[0]);
    }

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert!((relative_error(1.0, 3.0) - 0.5).abs() < 1e-15);
        assert!((relative_error(1e-9, 0.0) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn descend_steps_against_gradient() {
        let mut p = Scalar(vec![1.0, 2.0]);
        p.descend(&Scalar(vec![10.0, -10.0]), 0.1);
        assert_eq!(p.0, vec![0.0, 3.0]);
    }
}
