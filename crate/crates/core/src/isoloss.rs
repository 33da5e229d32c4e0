//! Isomorphism losses between the graph-convolved source seed matrix `U_m`
//! and the target seed matrix `V`, plus the combined objective.
//!
//! Norms are Frobenius norms of the stacked matrices averaged over the row
//! count `N`. For the Procrustes loss the optimal rotation `W*` is treated
//! as a constant when differentiating (envelope theorem).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{GriError, Result};
use crate::linalg::{svd, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IsoLossKind {
    #[serde(rename = "l2")]
    L2,
    #[serde(rename = "proc")]
    Proc,
    /// Procrustes loss, with train-seed source rows initialized from their
    /// translations before training.
    #[serde(rename = "proc_init")]
    ProcInit,
}

impl IsoLossKind {
    pub const ALL: [IsoLossKind; 3] = [IsoLossKind::L2, IsoLossKind::Proc, IsoLossKind::ProcInit];

    pub fn uses_procrustes(self) -> bool {
        matches!(self, IsoLossKind::Proc | IsoLossKind::ProcInit)
    }
}

impl fmt::Display for IsoLossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IsoLossKind::L2 => "l2",
            IsoLossKind::Proc => "proc",
            IsoLossKind::ProcInit => "proc_init",
        })
    }
}

impl FromStr for IsoLossKind {
    type Err = GriError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "l2" => Ok(IsoLossKind::L2),
            "proc" | "procrustes" => Ok(IsoLossKind::Proc),
            "proc_init" | "procinit" => Ok(IsoLossKind::ProcInit),
            other => Err(GriError::InvalidConfig(format!(
                "unknown iso loss {other:?} (expected l2, proc or proc_init)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProcrustesSolution {
    /// Orthogonal `d x d` map applied on the right of `U_m`.
    pub w: Matrix,
    /// `Vᵀ U_m` was the zero matrix; `w` is the identity.
    pub degenerate: bool,
}

/// Loss value and `dL/dU_m` for one evaluation.
#[derive(Debug, Clone)]
pub struct IsoEval {
    pub loss: f64,
    pub grad: Matrix,
    pub rotation: Option<ProcrustesSolution>,
}

fn check_shapes(op: &'static str, um: &Matrix, v: &Matrix) -> Result<()> {
    if um.shape() != v.shape() {
        return Err(GriError::shape(op, format!("U_m {:?} vs V {:?}", um.shape(), v.shape())));
    }
    if um.rows() == 0 || um.cols() == 0 {
        return Err(GriError::shape(op, "empty seed matrices"));
    }
    Ok(())
}

/// `(1/N) ‖U_m − V‖_F`
pub fn l2_loss(um: &Matrix, v: &Matrix) -> Result<f64> {
    check_shapes("l2_loss", um, v)?;
    Ok(um.sub(v).frobenius_norm() / um.rows() as f64)
}

/// `W = Q Pᵀ` where `P Σ Qᵀ = svd(Vᵀ U_m)`; minimizes `‖U_m W − V‖_F` over
/// orthogonal `W`.
pub fn procrustes_solve(um: &Matrix, v: &Matrix) -> Result<ProcrustesSolution> {
    check_shapes("procrustes_solve", um, v)?;
    let m = v.t_matmul(um);
    if m.max_abs() == 0.0 {
        return Ok(ProcrustesSolution {
            w: Matrix::identity(um.cols()),
            degenerate: true,
        });
    }
    let dec = svd(&m)?;
    Ok(ProcrustesSolution {
        w: dec.q.matmul_t(&dec.p),
        degenerate: false,
    })
}

/// `(1/N) ‖U_m W* − V‖_F`
pub fn procrustes_loss(um: &Matrix, v: &Matrix) -> Result<f64> {
    let sol = procrustes_solve(um, v)?;
    Ok(um.matmul(&sol.w).sub(v).frobenius_norm() / um.rows() as f64)
}

/// Gradient of `(1/N)‖R‖_F` is `R / (N ‖R‖_F)`; zero at `R = 0`.
fn norm_grad(residual: &Matrix, n: usize) -> (f64, Matrix) {
    let fro = residual.frobenius_norm();
    let loss = fro / n as f64;
    let grad = if fro > 0.0 {
        residual.scale(1.0 / (n as f64 * fro))
    } else {
        Matrix::zeros(residual.rows(), residual.cols())
    };
    (loss, grad)
}

pub fn l2_loss_grad(um: &Matrix, v: &Matrix) -> Result<IsoEval> {
    check_shapes("l2_loss", um, v)?;
    let (loss, grad) = norm_grad(&um.sub(v), um.rows());
    Ok(IsoEval {
        loss,
        grad,
        rotation: None,
    })
}

/// Procrustes loss and its gradient with `W*` frozen:
/// `dL/dU_m = (U_m W* − V) W*ᵀ / (N ‖U_m W* − V‖_F)`.
pub fn procrustes_loss_grad(um: &Matrix, v: &Matrix) -> Result<IsoEval> {
    let sol = procrustes_solve(um, v)?;
    let (loss, g) = norm_grad(&um.matmul(&sol.w).sub(v), um.rows());
    Ok(IsoEval {
        loss,
        grad: g.matmul_t(&sol.w),
        rotation: Some(sol),
    })
}

pub fn iso_loss_grad(kind: IsoLossKind, um: &Matrix, v: &Matrix) -> Result<IsoEval> {
    match kind {
        IsoLossKind::L2 => l2_loss_grad(um, v),
        IsoLossKind::Proc | IsoLossKind::ProcInit => procrustes_loss_grad(um, v),
    }
}

/// `α · L_SG + (1 − α) · L_ISO`
pub fn gri_loss(l_sg: f64, l_iso: f64, alpha: f64) -> f64 {
    assert!((0.0..=1.0).contains(&alpha), "alpha must lie in [0, 1], got {alpha}");
    alpha * l_sg + (1.0 - alpha) * l_iso
}
