//! Dense neural-network kernels with hand-derived backward passes, plus
//! Adam.

use ndarray::{Array2, ArrayView2, Axis, Zip};
use rand::Rng;

use crate::error::{Error, Result};

pub type DenseMatrix = Array2<f64>;

pub const SELU_LAMBDA: f64 = 1.050_700_987_355_480_5;
pub const SELU_ALPHA: f64 = 1.673_263_242_354_377_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[inline]
fn selu_scalar(x: f64) -> f64 {
    if x > 0.0 {
        SELU_LAMBDA * x
    } else {
        SELU_LAMBDA * SELU_ALPHA * x.exp_m1()
    }
}

pub fn selu(x: ArrayView2<'_, f64>) -> DenseMatrix {
    x.mapv(selu_scalar)
}

/// Gradient of [`selu`] at `x`, chained with `upstream`. At exactly zero
/// the non-positive branch applies.
pub fn selu_backward(x: ArrayView2<'_, f64>, upstream: ArrayView2<'_, f64>) -> Result<DenseMatrix> {
    if x.dim() != upstream.dim() {
        return Err(Error::Shape(format!(
            "selu input {:?} vs upstream {:?}",
            x.dim(),
            upstream.dim()
        )));
    }
    Ok(Zip::from(x).and(upstream).map_collect(|&x, &g| {
        let slope = if x > 0.0 {
            SELU_LAMBDA
        } else {
            SELU_LAMBDA * SELU_ALPHA * x.exp()
        };
        g * slope
    }))
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(x: ArrayView2<'_, f64>) -> DenseMatrix {
    let mut out = x.to_owned();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

/// Backward of [`softmax_rows`] given its output `probs`:
/// `dL/dz_i = p_i * (g_i - <g, p>)` per row.
pub fn softmax_rows_backward(
    probs: ArrayView2<'_, f64>,
    upstream: ArrayView2<'_, f64>,
) -> Result<DenseMatrix> {
    if probs.dim() != upstream.dim() {
        return Err(Error::Shape(format!(
            "softmax output {:?} vs upstream {:?}",
            probs.dim(),
            upstream.dim()
        )));
    }
    let mut out = Array2::zeros(probs.dim());
    for ((p, g), mut o) in probs
        .rows()
        .into_iter()
        .zip(upstream.rows())
        .zip(out.rows_mut())
    {
        let dot = p.dot(&g);
        Zip::from(&mut o)
            .and(&p)
            .and(&g)
            .for_each(|o, &p, &g| *o = p * (g - dot));
    }
    Ok(out)
}

/// Inverted dropout. Returns the output and, in training mode with a
/// non-zero rate, the per-entry scale mask (0 or `1/(1-rate)`) needed by
/// [`dropout_backward`].
pub fn dropout<R: Rng + ?Sized>(
    x: ArrayView2<'_, f64>,
    rate: f64,
    mode: Mode,
    rng: &mut R,
) -> Result<(DenseMatrix, Option<DenseMatrix>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Config(format!("dropout rate {rate} outside [0, 1)")));
    }
    if mode == Mode::Eval || rate == 0.0 {
        return Ok((x.to_owned(), None));
    }
    let keep_scale = 1.0 / (1.0 - rate);
    let mask = Array2::from_shape_simple_fn(x.dim(), || {
        if rng.random::<f64>() < rate {
            0.0
        } else {
            keep_scale
        }
    });
    Ok((&x * &mask, Some(mask)))
}

pub fn dropout_backward(upstream: ArrayView2<'_, f64>, mask: Option<&DenseMatrix>) -> DenseMatrix {
    match mask {
        Some(m) => &upstream * m,
        None => upstream.to_owned(),
    }
}

/// Uniform Glorot initialization, `U(-a, a)` with `a = sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> DenseMatrix {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Array2::from_shape_simple_fn((fan_in, fan_out), || rng.random_range(-limit..limit))
}

pub fn column_sums(x: ArrayView2<'_, f64>) -> DenseMatrix {
    x.sum_axis(Axis(0)).insert_axis(Axis(0))
}

pub fn check_finite(x: ArrayView2<'_, f64>, what: &str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numerical(format!("non-finite values in {what}")))
    }
}

/// Bias-corrected Adam over an ordered list of matrix parameters.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    first: Vec<DenseMatrix>,
    second: Vec<DenseMatrix>,
}

impl AdamState {
    pub fn new(shapes: &[(usize, usize)], learning_rate: f64) -> Self {
        AdamState {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            first: shapes.iter().map(|&s| Array2::zeros(s)).collect(),
            second: shapes.iter().map(|&s| Array2::zeros(s)).collect(),
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Applies one update. Parameters are left untouched if any gradient is
    /// non-finite.
    pub fn step(&mut self, params: &mut [&mut DenseMatrix], grads: &[&DenseMatrix]) -> Result<()> {
        if params.len() != self.first.len() || grads.len() != self.first.len() {
            return Err(Error::Shape(format!(
                "optimizer tracks {} parameters, got {} params and {} grads",
                self.first.len(),
                params.len(),
                grads.len()
            )));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.dim() != self.first[i].dim() || g.dim() != self.first[i].dim() {
                return Err(Error::Shape(format!("parameter {i} changed shape")));
            }
            if let Some(bad) = g.iter().find(|v| !v.is_finite()) {
                return Err(Error::Numerical(format!(
                    "non-finite gradient {bad} for parameter {i} at step {}",
                    self.step + 1
                )));
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let (b1, b2, eps) = (self.beta1, self.beta2, self.epsilon);
        let step_size = self.learning_rate / (1.0 - b1.powi(t));
        let second_correction = 1.0 / (1.0 - b2.powi(t));
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.first.iter_mut().zip(self.second.iter_mut()))
        {
            Zip::from(&mut **p)
                .and(*g)
                .and(m)
                .and(v)
                .for_each(|p, &g, m, v| {
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    *p -= step_size * *m / ((*v * second_correction).sqrt() + eps);
                });
        }
        Ok(())
    }
}
