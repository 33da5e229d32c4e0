//! Skip-gram with negative sampling.
//!
//! The loss is the negated log-likelihood
//! `-[log σ(u'_ctx · u_ctr) + Σ_i log σ(-u'_neg_i · u_ctr)]`, so training
//! minimizes it.

use rand::Rng;

use crate::linalg::{dot, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct SgnsModel {
    /// Input (center) vectors, one row per vocabulary word.
    pub input: Matrix,
    /// Output (context) vectors.
    pub output: Matrix,
}

/// Sparse gradient of the loss for one (center, context, negatives) example.
#[derive(Debug, Clone, PartialEq)]
pub struct SgnsGrad {
    pub center: usize,
    pub center_grad: Vec<f64>,
    /// One entry per distinct output row touched (context and negatives),
    /// with repeated ids merged.
    pub output_grads: Vec<(usize, Vec<f64>)>,
}

impl SgnsModel {
    /// Input rows uniform in `[-0.5/dim, 0.5/dim]`, output rows zero.
    pub fn new<R: Rng + ?Sized>(vocab_size: usize, dim: usize, rng: &mut R) -> Self {
        let bound = 0.5 / dim as f64;
        SgnsModel {
            input: Matrix::random_uniform(vocab_size, dim, bound, rng),
            output: Matrix::zeros(vocab_size, dim),
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.input.rows()
    }

    pub fn dim(&self) -> usize {
        self.input.cols()
    }

    pub fn loss(&self, center: usize, context: usize, negatives: &[usize]) -> f64 {
        let u = self.input.row(center);
        let mut loss = -log_sigmoid(dot(self.output.row(context), u));
        for &n in negatives {
            loss -= log_sigmoid(-dot(self.output.row(n), u));
        }
        loss
    }

    pub fn grad(&self, center: usize, context: usize, negatives: &[usize]) -> SgnsGrad {
        let dim = self.dim();
        let u = self.input.row(center);
        let mut center_grad = vec![0.0; dim];
        let mut output_grads: Vec<(usize, Vec<f64>)> = Vec::with_capacity(negatives.len() + 1);

        let mut push = |id: usize, coeff: f64, center_grad: &mut [f64]| {
            let out = self.output.row(id);
            for (g, &o) in center_grad.iter_mut().zip(out) {
                *g += coeff * o;
            }
            let slot = match output_grads.iter().position(|(i, _)| *i == id) {
                Some(p) => p,
                None => {
                    output_grads.push((id, vec![0.0; dim]));
                    output_grads.len() - 1
                }
            };
            for (g, &x) in output_grads[slot].1.iter_mut().zip(u) {
                *g += coeff * x;
            }
        };

        // d/ds [-log σ(s)] = σ(s) - 1 ; d/ds [-log σ(-s)] = σ(s)
        let s = dot(self.output.row(context), u);
        push(context, sigmoid(s) - 1.0, &mut center_grad);
        for &n in negatives {
            let s = dot(self.output.row(n), u);
            push(n, sigmoid(s), &mut center_grad);
        }
        SgnsGrad {
            center,
            center_grad,
            output_grads,
        }
    }
}

pub fn sgns_loss(model: &SgnsModel, center: usize, context: usize, negatives: &[usize]) -> f64 {
    model.loss(center, context, negatives)
}

pub fn sgns_grad(model: &SgnsModel, center: usize, context: usize, negatives: &[usize]) -> SgnsGrad {
    model.grad(center, context, negatives)
}

/// Logistic function, branch-stable for large `|x|`.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log σ(x)` without overflow or catastrophic cancellation.
#[inline]
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}
