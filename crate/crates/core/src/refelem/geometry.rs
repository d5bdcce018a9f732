use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::mesh::{Point, LOCAL_EDGES};

/// Affine tetrahedron with cached barycentric gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementGeometry {
    pub vertices: [Point; 4],
    /// `grad_lambda[i]` is the constant gradient of the barycentric coordinate of vertex `i`.
    pub grad_lambda: [Vector3<f64>; 4],
    pub volume: f64,
}

impl ElementGeometry {
    pub fn new(vertices: [Point; 4]) -> Result<Self> {
        let scale = LOCAL_EDGES
            .iter()
            .map(|&[i, j]| (vertices[i] - vertices[j]).norm())
            .fold(0.0, f64::max);
        let jac = Matrix3::from_columns(&[
            vertices[1] - vertices[0],
            vertices[2] - vertices[0],
            vertices[3] - vertices[0],
        ]);
        let det = jac.determinant();
        let volume = det.abs() / 6.0;
        let threshold = 1e-14 * scale.powi(3);
        if !(volume >= threshold) || volume == 0.0 {
            return Err(Error::DegenerateElement { volume, threshold });
        }
        // Rows of J^{-1} are the gradients of lambda_1..lambda_3.
        let inv = jac.try_inverse().ok_or(Error::DegenerateElement { volume, threshold })?;
        let g1 = inv.row(0).transpose();
        let g2 = inv.row(1).transpose();
        let g3 = inv.row(2).transpose();
        let g0 = -(g1 + g2 + g3);
        Ok(Self {
            vertices,
            grad_lambda: [g0, g1, g2, g3],
            volume,
        })
    }

    pub fn point(&self, bary: &[f64; 4]) -> Point {
        self.vertices
            .iter()
            .zip(bary)
            .fold(Point::zeros(), |acc, (v, &l)| acc + v * l)
    }

    pub fn barycentric(&self, x: &Point) -> [f64; 4] {
        let d = x - self.vertices[0];
        let l1 = self.grad_lambda[1].dot(&d);
        let l2 = self.grad_lambda[2].dot(&d);
        let l3 = self.grad_lambda[3].dot(&d);
        [1.0 - l1 - l2 - l3, l1, l2, l3]
    }

    /// `grad_lambda[i] x grad_lambda[j]` for the local edge pairs, in [`LOCAL_EDGES`] order.
    pub fn gradient_crosses(&self) -> [Vector3<f64>; 6] {
        LOCAL_EDGES.map(|[i, j]| self.grad_lambda[i].cross(&self.grad_lambda[j]))
    }

    /// Longest edge.
    pub fn diameter(&self) -> f64 {
        LOCAL_EDGES
            .iter()
            .map(|&[i, j]| (self.vertices[i] - self.vertices[j]).norm())
            .fold(0.0, f64::max)
    }
}

/// Convenience form of [`ElementGeometry::new`].
pub fn element_geometry(vertices: [Point; 4]) -> Result<ElementGeometry> {
    ElementGeometry::new(vertices)
}

/// Random, reasonably shaped tetrahedron with vertices in `[-1, 1]^3`.
pub fn random_tet(rng: &mut impl rand::Rng) -> ElementGeometry {
    loop {
        let v = [(); 4].map(|_| {
            Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        if let Ok(g) = ElementGeometry::new(v) {
            if g.volume > 0.02 * g.diameter().powi(3) {
                return g;
            }
        }
    }
}

#[cfg(test)]
pub(crate) mod testing {
    pub use super::random_tet;
}
