use nalgebra::{DMatrix, SMatrix};

use super::{Basis, ElementGeometry, Family, LocalDof, LocalNode};

/// Interior corrections of the eight face functions: column `j` lists the
/// multiples of the four interior functions added to face function `j`.
pub const FACE_CORRECTION: [[f64; 8]; 4] = [
    [0.0, 0.0, 3.0, 3.0, 3.0, 3.0, 3.0, 3.0],
    [3.0, 3.0, 0.0, 0.0, 0.0, -3.0, 0.0, -3.0],
    [0.0, -3.0, 0.0, -3.0, 0.0, 0.0, -3.0, 0.0],
    [-3.0, 0.0, -3.0, 0.0, -3.0, 0.0, 0.0, 0.0],
];

/// Corrections of the twelve edge functions by the twelve lumped face and
/// interior functions (rows), one column per edge function.
pub const EDGE_CORRECTION: [[f64; 12]; 12] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, -2.0, 1.0, -2.0, 1.0],
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -2.0, 1.0, 1.0, 1.0, 1.0, -2.0],
    [0.0, 0.0, 1.0, 1.0, -2.0, 1.0, 0.0, 0.0, 0.0, 0.0, -2.0, 1.0],
    [0.0, 0.0, -2.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, -2.0],
    [1.0, 1.0, 0.0, 0.0, -2.0, 1.0, 0.0, 0.0, -2.0, 1.0, 0.0, 0.0],
    [-2.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, -2.0, 0.0, 0.0],
    [1.0, 1.0, -2.0, 1.0, 0.0, 0.0, -2.0, 1.0, 0.0, 0.0, 0.0, 0.0],
    [-2.0, 1.0, 1.0, 1.0, 0.0, 0.0, 1.0, -2.0, 0.0, 0.0, 0.0, 0.0],
    [0.0, -9.0, 0.0, -9.0, 0.0, -9.0, 3.0, 3.0, 3.0, 3.0, 3.0, 3.0],
    [-9.0, 0.0, 3.0, 3.0, 3.0, 3.0, 0.0, -9.0, 0.0, -9.0, 3.0, 3.0],
    [3.0, 3.0, -9.0, 0.0, 3.0, 3.0, -9.0, 0.0, 3.0, 3.0, 0.0, -9.0],
    [3.0, 3.0, 3.0, 3.0, -9.0, 0.0, 3.0, 3.0, -9.0, 0.0, -9.0, 0.0],
];

/// Change of basis from the hierarchical functions to the lumped ones.
///
/// Row `j` of [`LumpedTransform::matrix`] expresses the lumped function `j`
/// in terms of the raw functions (edge, face, interior). The coefficients are
/// the same on every element.
#[derive(Debug, Clone, PartialEq)]
pub struct LumpedTransform {
    face: SMatrix<f64, 4, 8>,
    edge: SMatrix<f64, 12, 12>,
    matrix: DMatrix<f64>,
}

impl LumpedTransform {
    pub fn standard() -> Self {
        Self::from_coefficients(
            SMatrix::from_fn(|i, j| FACE_CORRECTION[i][j]),
            SMatrix::from_fn(|i, j| EDGE_CORRECTION[i][j]),
        )
    }

    pub fn from_coefficients(face: SMatrix<f64, 4, 8>, edge: SMatrix<f64, 12, 12>) -> Self {
        let mut t = DMatrix::<f64>::identity(24, 24);
        for j in 0..8 {
            for i in 0..4 {
                t[(12 + j, 20 + i)] = face[(i, j)];
            }
        }
        for j in 0..12 {
            for i in 0..12 {
                let c = edge[(i, j)];
                if c != 0.0 {
                    let row = t.row(12 + i).clone_owned();
                    let mut target = t.row_mut(j);
                    target += row * c;
                }
            }
        }
        Self {
            face,
            edge,
            matrix: t,
        }
    }

    pub fn face_coefficients(&self) -> &SMatrix<f64, 4, 8> {
        &self.face
    }

    pub fn edge_coefficients(&self) -> &SMatrix<f64, 12, 12> {
        &self.edge
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn determinant(&self) -> f64 {
        self.matrix.determinant()
    }
}

/// The lumping transform for an element. The coefficients do not depend on
/// the geometry; `geom` is accepted so callers can treat it per element.
pub fn build_lumped_transform(_geom: &ElementGeometry) -> LumpedTransform {
    LumpedTransform::standard()
}

/// Largest value of each lumped function at a node it should vanish at,
/// relative to its value at its own node. Zero up to round-off when the
/// transform lumps correctly.
pub fn locality_defect(
    family: Family,
    transform: &LumpedTransform,
    geom: &ElementGeometry,
) -> f64 {
    let basis = Basis::with_transform(family, transform).expect("lumpable family");
    let values: Vec<_> = LocalNode::ALL
        .iter()
        .map(|n| basis.eval(geom, &n.barycentric()))
        .collect();
    let mut worst: f64 = 0.0;
    for k in 0..24 {
        let own = LocalDof::of_slot(k).node().index();
        let scale = values[own][k].norm();
        if scale == 0.0 {
            return f64::INFINITY;
        }
        for (n, vals) in values.iter().enumerate() {
            if n != own {
                worst = worst.max(vals[k].norm() / scale);
            }
        }
    }
    worst
}
