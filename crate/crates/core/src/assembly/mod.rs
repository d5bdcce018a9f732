//! Global degrees of freedom and assembled operators.

mod checks;
mod dofmap;
mod functional;
mod matrices;
mod tables;

pub use checks::{lumped_load_defect, max_tangential_jump};
pub use dofmap::{
    build_dof_map, build_dof_map_with, BoundaryCondition, DofMap, GlobalNode, NodeBlock, CONSTRAINED};
pub use functional::{
    assemble_functional, assemble_load, elliptic_projection, error_norms, evaluate_discrete,
    ExactSolution, ZeroField,
};
pub use matrices::{
    assemble_consistent_mass, assemble_lumped_mass, assemble_stiffness, element_lumped_mass,
    element_mass, element_stiffness, shared_pattern,
};
pub use tables::ReferenceTables;

use std::ops::{Deref, DerefMut};

use nalgebra::Matrix3;

use crate::error::{Error, Result};

/// Constant symmetric positive definite material coefficient, stored as
/// `scale * shape`. Scalar coefficients keep `shape = I`, so assembled
/// operators scale exactly with them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficient {
    scale: f64,
    shape: Matrix3<f64>,
}

impl Coefficient {
    pub fn identity() -> Self {
        Self {
            scale: 1.0,
            shape: Matrix3::identity(),
        }
    }

    pub fn scalar(value: f64) -> Result<Self> {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "coefficient must be positive, got {value}"
            )));
        }
        Ok(Self {
            scale: value,
            shape: Matrix3::identity(),
        })
    }

    pub fn tensor(m: Matrix3<f64>) -> Result<Self> {
        if (m - m.transpose()).abs().max() > 1e-14 * m.abs().max() {
            return Err(Error::InvalidArgument("coefficient tensor is not symmetric".into()));
        }
        if m.cholesky().is_none() {
            return Err(Error::InvalidArgument(
                "coefficient tensor is not positive definite".into(),
            ));
        }
        Ok(Self {
            scale: 1.0,
            shape: m,
        })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn shape(&self) -> &Matrix3<f64> {
        &self.shape
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        self.shape * self.scale
    }

    /// Inverse coefficient, e.g. `mu^{-1}` from `mu`.
    pub fn inverse(&self) -> Self {
        Self {
            scale: 1.0 / self.scale,
            shape: self.shape.try_inverse().expect("positive definite"),
        }
    }
}

impl Default for Coefficient {
    fn default() -> Self {
        Self::identity()
    }
}

/// Coefficient vector over the free dofs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FieldVector {
    pub values: Vec<f64>,
    pub time: Option<f64>,
}

impl FieldVector {
    pub fn zeros(n: usize) -> Self {
        Self {
            values: vec![0.0; n],
            time: None,
        }
    }

    pub fn at(values: Vec<f64>, time: f64) -> Self {
        Self {
            values,
            time: Some(time),
        }
    }
}

impl From<Vec<f64>> for FieldVector {
    fn from(values: Vec<f64>) -> Self {
        Self { values, time: None }
    }
}

impl Deref for FieldVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.values
    }
}

impl DerefMut for FieldVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}
