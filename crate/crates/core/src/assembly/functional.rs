use nalgebra::Vector3;
use rayon::prelude::*;

use super::{DofMap, FieldVector, ReferenceTables, CONSTRAINED};
use crate::error::{Error, Result};
use crate::linalg::{cg_solve, dot, CgOptions, LinearOperator, SparseMatrix};
use crate::mesh::{Mesh, Point};
use crate::refelem::ElementGeometry;

const CHUNK: usize = 1024;

/// A prescribed field with the derivatives needed for loads and projections.
pub trait ExactSolution: Sync {
    fn field(&self, x: &Point, t: f64) -> Vector3<f64>;
    fn curl(&self, x: &Point, t: f64) -> Vector3<f64>;
    /// Second time derivative of the field.
    fn dtt(&self, x: &Point, t: f64) -> Vector3<f64>;
}

/// `E = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroField;

impl ExactSolution for ZeroField {
    fn field(&self, _: &Point, _: f64) -> Vector3<f64> {
        Vector3::zeros()
    }

    fn curl(&self, _: &Point, _: f64) -> Vector3<f64> {
        Vector3::zeros()
    }

    fn dtt(&self, _: &Point, _: f64) -> Vector3<f64> {
        Vector3::zeros()
    }
}

/// `F_j = sum_K int_K a . phi_j + b . curl phi_j`, where `integrand` returns
/// `(a, b)` at a point given the element index and barycentric coordinates.
pub fn assemble_functional(
    mesh: &Mesh,
    dofmap: &DofMap,
    integrand: impl Fn(usize, &Point, &[f64; 4]) -> (Vector3<f64>, Vector3<f64>) + Sync,
) -> Result<Vec<f64>> {
    let tables = ReferenceTables::get(dofmap.family());
    let n = tables.dim;
    let mut out = vec![0.0; dofmap.n_free()];
    let nt = mesh.n_tets();
    for start in (0..nt).step_by(CHUNK) {
        let end = (start + CHUNK).min(nt);
        let local: Vec<Vec<f64>> = (start..end)
            .into_par_iter()
            .map(|t| {
                let geom = ElementGeometry::new(mesh.tet_vertices(t))
                    .map_err(|e| e.context(format!("element {t}")))?;
                let crosses = geom.gradient_crosses();
                let mut f = vec![0.0; n];
                for (q, bary) in tables.rule.points.iter().enumerate() {
                    let x = geom.point(bary);
                    let (a, b) = integrand(t, &x, bary);
                    let w = tables.rule.weights[q] * geom.volume;
                    let ga: [f64; 4] = std::array::from_fn(|m| geom.grad_lambda[m].dot(&a));
                    let xb: [f64; 6] = std::array::from_fn(|p| crosses[p].dot(&b));
                    for k in 0..n {
                        let cv = &tables.quad_values[q][k];
                        let cc = &tables.quad_curls[q][k];
                        let mut s = 0.0;
                        for m in 0..4 {
                            s += cv[m] * ga[m];
                        }
                        for p in 0..6 {
                            s += cc[p] * xb[p];
                        }
                        f[k] += w * s;
                    }
                }
                Ok(f)
            })
            .collect::<Result<_>>()?;
        for (t, f) in (start..end).zip(local) {
            for (k, &d) in dofmap.tet_dofs(t).iter().enumerate() {
                if d != CONSTRAINED {
                    out[d] += f[k];
                }
            }
        }
    }
    Ok(out)
}

/// `(dtt E(t), phi_j) + (curl E(t), curl phi_j)`, the right-hand side for a
/// manufactured solution with unit coefficients.
pub fn assemble_load(mesh: &Mesh, dofmap: &DofMap, case: &dyn ExactSolution, t: f64) -> Result<FieldVector> {
    let v = assemble_functional(mesh, dofmap, |_, x, _| (case.dtt(x, t), case.curl(x, t)))?;
    Ok(FieldVector::at(v, t))
}

/// Solves `(M + K) x = (E(t), phi) + (curl E(t), curl phi)` by CG.
pub fn elliptic_projection(
    mesh: &Mesh,
    dofmap: &DofMap,
    mass: &SparseMatrix,
    stiffness: &SparseMatrix,
    case: &dyn ExactSolution,
    t: f64,
    tol: f64,
) -> Result<FieldVector> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let rhs = assemble_functional(mesh, dofmap, |_, x, _| (case.field(x, t), case.curl(x, t)))?;
    let a = mass.add_scaled(1.0, stiffness);
    let mut x = vec![0.0; rhs.len()];
    let opts = CgOptions {
        tol,
        max_iter: 20 * rhs.len().max(50),
        jacobi: true,
    };
    cg_solve(&a, Some(&a.diagonal()), &rhs, &mut x, &opts)
        .map_err(|e| e.context("elliptic projection"))?;
    Ok(FieldVector::at(x, t))
}

/// `(sqrt(e^T M e), sqrt(e^T K e))`.
pub fn error_norms(e: &[f64], mass: &SparseMatrix, stiffness: &SparseMatrix) -> (f64, f64) {
    let mut y = vec![0.0; e.len()];
    mass.apply(e, &mut y);
    let l2 = dot(e, &y).max(0.0).sqrt();
    stiffness.apply(e, &mut y);
    let curl = dot(e, &y).max(0.0).sqrt();
    (l2, curl)
}

/// Value and curl of a discrete field on element `tet` at a barycentric point.
pub fn evaluate_discrete(
    mesh: &Mesh,
    dofmap: &DofMap,
    coeffs: &[f64],
    tet: usize,
    bary: &[f64; 4],
) -> Result<(Vector3<f64>, Vector3<f64>)> {
    let tables = ReferenceTables::get(dofmap.family());
    let geom = ElementGeometry::new(mesh.tet_vertices(tet))?;
    let vals = tables.basis.eval(&geom, bary);
    let curls = tables.basis.eval_curl(&geom, bary);
    let mut v = Vector3::zeros();
    let mut c = Vector3::zeros();
    for (k, &d) in dofmap.tet_dofs(tet).iter().enumerate() {
        if d != CONSTRAINED {
            v += vals[k] * coeffs[d];
            c += curls[k] * coeffs[d];
        }
    }
    Ok((v, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{
        assemble_consistent_mass, assemble_stiffness, build_dof_map,
        Coefficient,
    };
    use crate::linalg::RngState;
    use crate::mesh::build_cube_mesh;
    use crate::refelem::{exact_monomial_integral, modified_face_bubble, Family};

    #[test]
    fn zero_field_gives_zero_load() {
        let mesh = build_cube_mesh(1).unwrap();
        let map = build_dof_map(&mesh, Family::Mej1);
        let f = assemble_load(&mesh, &map, &ZeroField, 0.3).unwrap();
        assert!(f.iter().all(|v| *v == 0.0));
        assert_eq!(f.time, Some(0.3));
    }

    #[test]
    fn projection_reproduces_discrete_fields() {
        let mesh = build_cube_mesh(2).unwrap();
        let map = build_dof_map(&mesh, Family::Mej1);
        let m = assemble_consistent_mass(&mesh, &map, &Coefficient::identity(), None).unwrap();
        let k = assemble_stiffness(&mesh, &map, &Coefficient::identity(), Some(m.pattern().clone())).unwrap();
        let coeffs = RngState::new(11).vector(map.n_free());
        struct Discrete<'a>(&'a Mesh, &'a DofMap, &'a [f64]);
        let field = Discrete(&mesh, &map, &coeffs);
        let rhs = assemble_functional(&mesh, &map, |t, _, b| {
            evaluate_discrete(field.0, field.1, field.2, t, b).unwrap()
        })
        .unwrap();
        let a = m.add_scaled(1.0, &k);
        let mut x = vec![0.0; rhs.len()];
        cg_solve(&a, Some(&a.diagonal()), &rhs, &mut x, &CgOptions { tol: 1e-13, ..CgOptions::default() }).unwrap();
        for (a, b) in x.iter().zip(&coeffs) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn norms_of_unit_vectors() {
        let mesh = build_cube_mesh(1).unwrap();
        let map = build_dof_map(&mesh, Family::Mej1);
        let m = assemble_consistent_mass(&mesh, &map, &Coefficient::identity(), None).unwrap();
        let k = assemble_stiffness(&mesh, &map, &Coefficient::identity(), Some(m.pattern().clone())).unwrap();
        assert_eq!(error_norms(&vec![0.0; map.n_free()], &m, &k), (0.0, 0.0));
        let mut e = vec![0.0; map.n_free()];
        e[5] = 1.0;
        let (l2, _) = error_norms(&e, &m, &k);
        assert!((l2 - m.get(5, 5).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn single_element_modified_bubble_norm() {
        let v = vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.2, 0.0),
            Point::new(0.1, 1.0, 0.3),
            Point::new(0.0, 0.2, 1.0),
        ];
        let mesh = Mesh::from_connectivity(v, vec![[0, 1, 2, 3]]).unwrap();
        let map = build_dof_map(&mesh, Family::Mej1);
        let m = assemble_consistent_mass(&mesh, &map, &Coefficient::identity(), None).unwrap();
        let k = assemble_stiffness(&mesh, &map, &Coefficient::identity(), Some(m.pattern().clone())).unwrap();
        let mut e = vec![0.0; map.n_free()];
        e[map.interior_dofs(0)[3]] = 1.0;
        let (l2, _) = error_norms(&e, &m, &k);
        let g = ElementGeometry::new(mesh.tet_vertices(0)).unwrap();
        let w = modified_face_bubble();
        let mut exact = 0.0;
        for a in &w.terms {
            for b in &w.terms {
                let mut p = a.pow;
                for i in 0..4 {
                    p[i] += b.pow[i];
                }
                exact += a.coef * b.coef * g.grad_lambda[a.grad].dot(&g.grad_lambda[b.grad])
                    * exact_monomial_integral(p, g.volume);
            }
        }
        assert!((l2 * l2 - exact).abs() < 1e-13 * exact, "{} vs {exact}", l2 * l2);
    }
}
