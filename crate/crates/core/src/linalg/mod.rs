//! Sparse and dense kernels used by assembly and time stepping.

mod block;
mod cg;
mod lobpcg;
mod power;
mod rng;
mod sparse;

pub use block::{block_factor_solve, BlockDiagMatrix, DenseSymBlock};
pub use cg::{cg_solve, CgOptions, CgOutcome, CgMass};
pub use lobpcg::lobpcg_max_eig;
pub use power::{power_iteration_max_eig, EigenEstimate, PowerOptions};
pub use rng::RngState;
pub use sparse::{SparseMatrix, SparsityPattern};

use crate::error::Result;

/// Square linear map `y = A x`.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// A mass operator that can be applied and inverted.
pub trait MassOperator: LinearOperator {
    /// Solves `M x = r`. On entry `x` holds an initial guess, which iterative
    /// implementations may use as a warm start.
    fn solve(&self, r: &[f64], x: &mut [f64]) -> Result<()>;
}

/// Identity operator, mostly for tests and diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct Identity(pub usize);

impl LinearOperator for Identity {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
    }
}

impl MassOperator for Identity {
    fn solve(&self, r: &[f64], x: &mut [f64]) -> Result<()> {
        x.copy_from_slice(r);
        Ok(())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `x^T A x`.
pub fn quadratic_form(op: &dyn LinearOperator, x: &[f64]) -> f64 {
    let mut y = vec![0.0; x.len()];
    op.apply(x, &mut y);
    dot(x, &y)
}
