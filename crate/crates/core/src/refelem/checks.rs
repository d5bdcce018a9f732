//! Measured defects of quadrature and trace properties of the interior
//! functions. Each returns a relative residual that vanishes up to round-off.

use nalgebra::{Matrix3, Vector3};

use super::{bubble_gradient, face_bubble, modified_face_bubble, BasisFunction, ElementGeometry, QuadratureRule};
use crate::mesh::LOCAL_FACES;

/// Componentwise `|Q(w*_4) - int w*_4|` relative to `|K| |w*_4|` scale, for
/// the lumping rule `Q`.
pub fn modified_bubble_mean_defect(geom: &ElementGeometry) -> f64 {
    let w = modified_face_bubble();
    let lump = QuadratureRule::lumping();
    let exact = QuadratureRule::high_order();
    let scale = geom.volume * geom.grad_lambda[3].norm();
    let mut worst: f64 = 0.0;
    for c in 0..3 {
        let q = lump.integrate_barycentric(geom.volume, |b| w.eval(geom, b)[c]);
        let e = exact.integrate_barycentric(geom.volume, |b| w.eval(geom, b)[c]);
        worst = worst.max((q - e).abs() / scale);
    }
    worst
}

/// Lumping-rule error for `w . grad(b_K)` over the constant and
/// divergence-free linear fields `w`, relative to the integrand scale.
pub fn divfree_bubble_gradient_defect(geom: &ElementGeometry) -> f64 {
    let grad_b = bubble_gradient();
    let lump = QuadratureRule::lumping();
    let exact = QuadratureRule::high_order();
    let centre = geom.point(&[0.25; 4]);
    let mut fields: Vec<Box<dyn Fn(&Vector3<f64>) -> Vector3<f64>>> = Vec::new();
    for c in 0..3 {
        fields.push(Box::new(move |_| Vector3::ith(c, 1.0)));
    }
    for i in 0..3 {
        for j in 0..3 {
            if i == j {
                continue;
            }
            let mut a = Matrix3::zeros();
            a[(i, j)] = 1.0;
            fields.push(Box::new(move |x| a * (x - centre)));
        }
    }
    for d in 0..2 {
        let mut a = Matrix3::zeros();
        a[(d, d)] = 1.0;
        a[(2, 2)] = -1.0;
        fields.push(Box::new(move |x| a * (x - centre)));
    }
    debug_assert_eq!(fields.len(), 11);
    let gb_scale = geom.grad_lambda.iter().map(|g| g.norm()).fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    for w in &fields {
        let f = |b: &[f64; 4]| w(&geom.point(b)).dot(&grad_b.eval(geom, b));
        let q = lump.integrate_barycentric(geom.volume, f);
        let e = exact.integrate_barycentric(geom.volume, f);
        let scale = geom.volume * gb_scale * geom.diameter().max(1.0);
        worst = worst.max((q - e).abs() / scale);
    }
    worst
}

/// Largest tangential component of `w_1..w_4` and `w*_4` at six points on
/// each face, relative to the largest value at those points.
pub fn bubble_tangential_defect(geom: &ElementGeometry) -> f64 {
    let samples: [[f64; 3]; 6] = [
        [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        [0.6, 0.2, 0.2],
        [0.2, 0.6, 0.2],
        [0.2, 0.2, 0.6],
        [0.5, 0.25, 0.25],
        [0.1, 0.3, 0.6],
    ];
    let mut fns: Vec<BasisFunction> = (0..4).map(face_bubble).collect();
    fns.push(modified_face_bubble());
    let mut tangential: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (f, verts) in LOCAL_FACES.iter().enumerate() {
        let n = geom.grad_lambda[f].normalize();
        for s in &samples {
            let mut b = [0.0; 4];
            for (k, &v) in verts.iter().enumerate() {
                b[v] = s[k];
            }
            for w in &fns {
                let v = w.eval(geom, &b);
                tangential = tangential.max(v.cross(&n).norm());
                scale = scale.max(v.norm());
            }
        }
    }
    // The values themselves are normal to the face; use the interior scale
    // when they vanish identically.
    let interior = fns
        .iter()
        .map(|w| w.eval(geom, &[0.25; 4]).norm())
        .fold(0.0, f64::max);
    tangential / scale.max(interior)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refelem::geometry::testing::random_tet;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn interior_function_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..10 {
            let g = random_tet(&mut rng);
            assert!(modified_bubble_mean_defect(&g) < 1e-13);
            assert!(divfree_bubble_gradient_defect(&g) < 1e-13);
            assert!(bubble_tangential_defect(&g) < 1e-13);
        }
    }

    #[test]
    fn divergent_field_is_not_integrated_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let g = random_tet(&mut rng);
        let grad_b = bubble_gradient();
        let c = g.point(&[0.25; 4]);
        let f = |b: &[f64; 4]| (g.point(b) - c).dot(&grad_b.eval(&g, b));
        let q = QuadratureRule::lumping().integrate_barycentric(g.volume, f);
        let e = QuadratureRule::high_order().integrate_barycentric(g.volume, f);
        assert!((q - e).abs() > 1e-6 * e.abs());
    }
}
