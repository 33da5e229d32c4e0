//! Two-layer attentive graph convolution:
//! `U_m = Γ̃ · ReLU(Γ̃ · U · W0) · W1`, with `Γ̃` fixed.

use rand::Rng;

use crate::error::{GriError, Result};
use crate::linalg::Matrix;
use crate::semgraph::NormalizedAdjacency;

#[derive(Debug, Clone)]
pub struct GcnParams {
    /// `d x h`
    pub w0: Matrix,
    /// `h x d`
    pub w1: Matrix,
    adjacency: NormalizedAdjacency,
}

/// Intermediates of one forward pass, consumed by [`GcnParams::backward`].
#[derive(Debug, Clone)]
pub struct GcnTape {
    /// `Γ̃ U`
    au: Matrix,
    /// `Γ̃ U W0`, the layer-1 pre-activation.
    pre: Matrix,
    /// `Γ̃ ReLU(pre)`
    ah: Matrix,
    fingerprint: u64,
}

impl GcnTape {
    pub fn pre_activation(&self) -> &Matrix {
        &self.pre
    }
}

#[derive(Debug, Clone)]
pub struct GcnGrads {
    pub d_u: Matrix,
    pub d_w0: Matrix,
    pub d_w1: Matrix,
}

impl GcnParams {
    /// Glorot-uniform weights: `± sqrt(6 / (fan_in + fan_out))`.
    pub fn new<R: Rng + ?Sized>(adjacency: NormalizedAdjacency, dim: usize, hidden: usize, rng: &mut R) -> Self {
        let bound = (6.0 / (dim + hidden) as f64).sqrt();
        let w0 = Matrix::random_uniform(dim, hidden, bound, rng);
        let w1 = Matrix::random_uniform(hidden, dim, bound, rng);
        GcnParams { w0, w1, adjacency }
    }

    pub fn from_weights(adjacency: NormalizedAdjacency, w0: Matrix, w1: Matrix) -> Result<Self> {
        if w0.cols() != w1.rows() || w0.rows() != w1.cols() {
            return Err(GriError::shape(
                "GcnParams",
                format!("W0 {:?} and W1 {:?} do not compose to d x d", w0.shape(), w1.shape()),
            ));
        }
        Ok(GcnParams { w0, w1, adjacency })
    }

    pub fn adjacency(&self) -> &NormalizedAdjacency {
        &self.adjacency
    }

    pub fn dim(&self) -> usize {
        self.w0.rows()
    }

    pub fn hidden(&self) -> usize {
        self.w0.cols()
    }

    fn check_input(&self, u: &Matrix) -> Result<()> {
        if u.rows() != self.adjacency.len() {
            return Err(GriError::ContractViolation(format!(
                "gcn input has {} rows but the graph has {} nodes",
                u.rows(),
                self.adjacency.len()
            )));
        }
        if u.cols() != self.dim() {
            return Err(GriError::ContractViolation(format!(
                "gcn input has dim {} but W0 expects {}",
                u.cols(),
                self.dim()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, u: &Matrix) -> Result<(Matrix, GcnTape)> {
        self.check_input(u)?;
        let au = self.adjacency.apply(u);
        let pre = au.matmul(&self.w0);
        let h = pre.map(relu);
        let ah = self.adjacency.apply(&h);
        let um = ah.matmul(&self.w1);
        let fingerprint = self.fingerprint(u);
        Ok((
            um,
            GcnTape {
                au,
                pre,
                ah,
                fingerprint,
            },
        ))
    }

    /// Exact gradients of a loss `L(U_m)` given `dL/dU_m`. ReLU's
    /// subgradient at 0 is taken as 0.
    pub fn backward(&self, tape: &GcnTape, u: &Matrix, d_um: &Matrix) -> Result<GcnGrads> {
        self.check_input(u)?;
        if tape.fingerprint != self.fingerprint(u) {
            return Err(GriError::ContractViolation(
                "stale gcn tape: parameters or input changed since forward".into(),
            ));
        }
        if d_um.shape() != u.shape() {
            return Err(GriError::ContractViolation(format!(
                "dL/dU_m has shape {:?}, expected {:?}",
                d_um.shape(),
                u.shape()
            )));
        }
        let d_w1 = tape.ah.t_matmul(d_um);
        // Γ̃ is symmetric, so Γ̃ᵀ G = Γ̃ G.
        let d_h = self.adjacency.apply(d_um).matmul_t(&self.w1);
        let mask = tape.pre.map(|x| if x > 0.0 { 1.0 } else { 0.0 });
        let d_pre = d_h.hadamard(&mask);
        let d_w0 = tape.au.t_matmul(&d_pre);
        let d_u = self.adjacency.apply(&d_pre).matmul_t(&self.w0);
        Ok(GcnGrads { d_u, d_w0, d_w1 })
    }

    fn fingerprint(&self, u: &Matrix) -> u64 {
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        for m in [u, &self.w0, &self.w1] {
            h = (h ^ m.rows() as u64).wrapping_mul(0x0100_0000_01b3);
            for x in m.data() {
                h = (h ^ x.to_bits()).wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }
}

#[inline]
fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

pub fn gcn_forward(params: &GcnParams, u: &Matrix) -> Result<(Matrix, GcnTape)> {
    params.forward(u)
}

pub fn gcn_backward(params: &GcnParams, tape: &GcnTape, u: &Matrix, d_um: &Matrix) -> Result<GcnGrads> {
    params.backward(tape, u, d_um)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::Embeddings;
    use crate::semgraph::{normalize_adjacency, SemanticGraph};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn triangle() -> NormalizedAdjacency {
        let words = vec!["a".to_string(), "b".into(), "c".into()];
        let m = Matrix::from_rows(&[[1.0, 0.2, 0.0], [0.9, 0.5, 0.1], [0.8, 0.0, 0.3]]).unwrap();
        let e = Embeddings::new(words.clone(), m).unwrap();
        let g = SemanticGraph::build(&words, &e, 0.5).unwrap();
        assert_eq!(g.edges().len(), 3);
        normalize_adjacency(&g)
    }

    #[test]
    fn isolated_node_identity_weights() {
        let adj = NormalizedAdjacency::identity(vec!["x".into()]);
        let p = GcnParams::from_weights(adj, Matrix::identity(3), Matrix::identity(3)).unwrap();
        let u = Matrix::from_rows(&[[0.5, 2.0, 0.0]]).unwrap();
        let (um, _) = p.forward(&u).unwrap();
        assert_eq!(um, u);
    }

    #[test]
    fn isolated_node_gradient_is_masked_upstream() {
        let adj = NormalizedAdjacency::identity(vec!["x".into()]);
        let p = GcnParams::from_weights(adj, Matrix::identity(3), Matrix::identity(3)).unwrap();
        let u = Matrix::from_rows(&[[0.5, -2.0, 1.0]]).unwrap();
        let (_, tape) = p.forward(&u).unwrap();
        let g = Matrix::from_rows(&[[3.0, 4.0, -1.0]]).unwrap();
        let grads = p.backward(&tape, &u, &g).unwrap();
        assert_eq!(grads.d_u.row(0), &[3.0, 0.0, -1.0]);
    }

    #[test]
    fn zero_output_weights_zero_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut p = GcnParams::new(triangle(), 4, 5, &mut rng);
        p.w1 = Matrix::zeros(5, 4);
        let u = Matrix::random_uniform(3, 4, 1.0, &mut rng);
        let (um, _) = p.forward(&u).unwrap();
        assert!(um.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn forward_matches_per_entry_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = GcnParams::new(triangle(), 4, 3, &mut rng);
        let u = Matrix::random_uniform(3, 4, 1.0, &mut rng);
        let (um, _) = p.forward(&u).unwrap();

        let a = p.adjacency().to_dense();
        let (n, d, h) = (3, 4, 3);
        let mut hidden = vec![vec![0.0; h]; n];
        for i in 0..n {
            for k in 0..h {
                let mut s = 0.0;
                for j in 0..n {
                    for l in 0..d {
                        s += a[(i, j)] * u[(j, l)] * p.w0[(l, k)];
                    }
                }
                hidden[i][k] = s.max(0.0);
            }
        }
        for i in 0..n {
            for c in 0..d {
                let mut s = 0.0;
                for j in 0..n {
                    for k in 0..h {
                        s += a[(i, j)] * hidden[j][k] * p.w1[(k, c)];
                    }
                }
                assert!((um[(i, c)] - s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = GcnParams::new(triangle(), 3, 3, &mut rng);
        let u = Matrix::random_uniform(3, 3, 1.0, &mut rng);
        let (_, tape) = p.forward(&u).unwrap();
        let g = p.backward(&tape, &u, &Matrix::zeros(3, 3)).unwrap();
        assert_eq!(g.d_u.max_abs() + g.d_w0.max_abs() + g.d_w1.max_abs(), 0.0);
    }

    #[test]
    fn stale_tape_and_shape_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut p = GcnParams::new(triangle(), 3, 3, &mut rng);
        let u = Matrix::random_uniform(3, 3, 1.0, &mut rng);
        let (_, tape) = p.forward(&u).unwrap();
        p.w0[(0, 0)] += 0.1;
        assert!(matches!(p.backward(&tape, &u, &Matrix::zeros(3, 3)), Err(GriError::ContractViolation(_))));
        assert!(p.forward(&Matrix::zeros(2, 3)).is_err());
        assert!(p.forward(&Matrix::zeros(3, 4)).is_err());
    }

    #[test]
    fn edgeless_graph_is_row_mlp() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let adj = NormalizedAdjacency::identity((0..5).map(|i| i.to_string()).collect());
        let p = GcnParams::new(adj, 3, 4, &mut rng);
        let u = Matrix::random_uniform(5, 3, 1.0, &mut rng);
        let (um, _) = p.forward(&u).unwrap();
        let want = u.matmul(&p.w0).map(relu).matmul(&p.w1);
        assert!(um.sub(&want).max_abs() < 1e-14);
    }
}
