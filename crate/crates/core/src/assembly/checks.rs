//! Measured defects of conformity and lumping on an assembled mesh.

use nalgebra::Vector3;

use super::{assemble_functional, evaluate_discrete, DofMap, ReferenceTables, CONSTRAINED};
use crate::error::Result;
use crate::mesh::{Mesh, Point};
use crate::refelem::{ElementGeometry, QuadratureRule};

const FACE_SAMPLES: [[f64; 3]; 6] = [
    [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
    [0.6, 0.2, 0.2],
    [0.2, 0.6, 0.2],
    [0.2, 0.2, 0.6],
    [0.5, 0.5, 0.0],
    [0.1, 0.3, 0.6],
];

/// Largest jump of the tangential trace of a single global basis function
/// across an interior face, over six points per face, relative to the field
/// size there (at least one).
pub fn max_tangential_jump(mesh: &Mesh, dofmap: &DofMap) -> Result<f64> {
    let mut coeffs = vec![0.0; dofmap.n_free()];
    let mut worst: f64 = 0.0;
    for f in 0..mesh.n_faces() {
        if mesh.is_boundary_face(f) {
            continue;
        }
        let (ta, tb) = (mesh.face_tets(f)[0], mesh.face_tets(f)[1]);
        let db = dofmap.free_tet_dofs(tb);
        let shared: Vec<usize> = dofmap.free_tet_dofs(ta).into_iter().filter(|d| db.contains(d)).collect();
        let p: Vec<Point> = mesh.faces()[f].iter().map(|&v| mesh.vertices()[v]).collect();
        let normal = (p[1] - p[0]).cross(&(p[2] - p[0])).normalize();
        let ga = ElementGeometry::new(mesh.tet_vertices(ta))?;
        let gb = ElementGeometry::new(mesh.tet_vertices(tb))?;
        for &d in &shared {
            coeffs[d] = 1.0;
            for s in &FACE_SAMPLES {
                let x = p[0] * s[0] + p[1] * s[1] + p[2] * s[2];
                let (va, _) = evaluate_discrete(mesh, dofmap, &coeffs, ta, &ga.barycentric(&x))?;
                let (vb, _) = evaluate_discrete(mesh, dofmap, &coeffs, tb, &gb.barycentric(&x))?;
                let jump = (va - vb).cross(&normal).norm();
                worst = worst.max(jump / va.norm().max(vb.norm()).max(1.0));
            }
            coeffs[d] = 0.0;
        }
    }
    Ok(worst)
}

/// `max_j |(c, phi_j)_h - (c, phi_j)|` over the unit constant fields `c`,
/// where `(., .)_h` is the lumping rule.
pub fn lumped_load_defect(mesh: &Mesh, dofmap: &DofMap) -> Result<f64> {
    let tables = ReferenceTables::get(dofmap.family());
    let rule = QuadratureRule::lumping();
    let mut worst: f64 = 0.0;
    for c in [Vector3::x(), Vector3::y(), Vector3::z()] {
        let exact = assemble_functional(mesh, dofmap, |_, _, _| (c, Vector3::zeros()))?;
        let mut lumped = vec![0.0; dofmap.n_free()];
        for t in 0..mesh.n_tets() {
            let g = ElementGeometry::new(mesh.tet_vertices(t))?;
            for (n, vals) in tables.node_values.iter().enumerate() {
                for (k, &d) in dofmap.tet_dofs(t).iter().enumerate() {
                    if d == CONSTRAINED {
                        continue;
                    }
                    let phi: Vector3<f64> = (0..4).map(|m| g.grad_lambda[m] * vals[k][m]).sum();
                    lumped[d] += rule.weights[n] * g.volume * phi.dot(&c);
                }
            }
        }
        for (a, b) in exact.iter().zip(&lumped) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}
