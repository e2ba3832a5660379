//! Dense row-major tensors and the handful of kernels the coherence model
//! needs. Every kernel accumulates in a fixed order, so evaluating one row
//! alone gives bit-identical results to evaluating it inside a batch.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Tensor {
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    /// Columns of a matrix; a vector counts as a single column.
    pub fn cols(&self) -> usize {
        self.shape.get(1).copied().unwrap_or(1)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let c = self.cols();
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn sum_squares(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Tanh,
    Relu,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
        }
    }

    /// Derivative expressed through the activation's output `y`.
    #[inline]
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn parse(s: &str) -> Option<Activation> {
        match s {
            "tanh" => Some(Activation::Tanh),
            "relu" => Some(Activation::Relu),
            _ => None,
        }
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let j = i * 4;
        acc[0] += a[j] * b[j];
        acc[1] += a[j + 1] * b[j + 1];
        acc[2] += a[j + 2] * b[j + 2];
        acc[3] += a[j + 3] * b[j + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for j in chunks * 4..a.len() {
        s += a[j] * b[j];
    }
    s
}

/// `act(W x + b)` for `W` of shape (out, in).
pub fn dense_forward(w: &Tensor, b: &Tensor, x: &[f64], act: Option<Activation>) -> Vec<f64> {
    debug_assert_eq!(w.cols(), x.len());
    (0..w.rows())
        .map(|j| {
            let z = b.data[j] + dot(w.row(j), x);
            act.map_or(z, |a| a.apply(z))
        })
        .collect()
}

/// `Wᵀ dy`.
pub fn matvec_transposed(w: &Tensor, dy: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; w.cols()];
    for (j, &g) in dy.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        for (o, wv) in out.iter_mut().zip(w.row(j)) {
            *o += g * wv;
        }
    }
    out
}

/// `dW += dy xᵀ`, `db += dy`.
pub fn accumulate_outer(dw: &mut Tensor, db: &mut Tensor, dy: &[f64], x: &[f64]) {
    for (j, &g) in dy.iter().enumerate() {
        db.data[j] += g;
        if g == 0.0 {
            continue;
        }
        for (d, xv) in dw.row_mut(j).iter_mut().zip(x) {
            *d += g * xv;
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
