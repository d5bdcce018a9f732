use std::sync::Arc;

use nalgebra::{DMatrix, Matrix3, Vector3};
use rayon::prelude::*;

use super::{Coefficient, DofMap, ReferenceTables, CONSTRAINED};
use crate::error::{Error, Result};
use crate::linalg::{BlockDiagMatrix, DenseSymBlock, SparseMatrix, SparsityPattern};
use crate::mesh::Mesh;
use crate::refelem::{ElementGeometry, LocalDof, LocalNode, QuadratureRule};
use super::GlobalNode;

const CHUNK: usize = 1024;

fn geometry(mesh: &Mesh, tet: usize) -> Result<ElementGeometry> {
    ElementGeometry::new(mesh.tet_vertices(tet)).map_err(|e| e.context(format!("element {tet}")))
}

fn gram<const N: usize>(v: &[Vector3<f64>; N], c: &Matrix3<f64>) -> [[f64; N]; N] {
    let mut g = [[0.0; N]; N];
    for i in 0..N {
        let cv = c * v[i];
        for j in 0..N {
            g[j][i] = v[j].dot(&cv);
        }
    }
    g
}

/// Consistent element mass `(eps phi_k, phi_l)`.
pub fn element_mass(tables: &ReferenceTables, geom: &ElementGeometry, eps: &Coefficient) -> DMatrix<f64> {
    let g = gram(&geom.grad_lambda, eps.shape());
    let n = tables.dim;
    let c = eps.scale() * geom.volume;
    DMatrix::from_fn(n, n, |k, l| {
        let t = &tables.mass[(k * n + l) * 16..(k * n + l + 1) * 16];
        let mut s = 0.0;
        for m in 0..4 {
            for mp in 0..4 {
                s += g[m][mp] * t[m * 4 + mp];
            }
        }
        s * c
    })
}

/// Element stiffness `(mu_inv curl phi_k, curl phi_l)`.
pub fn element_stiffness(tables: &ReferenceTables, geom: &ElementGeometry, mu_inv: &Coefficient) -> DMatrix<f64> {
    let h = gram(&geom.gradient_crosses(), mu_inv.shape());
    let n = tables.dim;
    let c = mu_inv.scale() * geom.volume;
    DMatrix::from_fn(n, n, |k, l| {
        let t = &tables.curl[(k * n + l) * 36..(k * n + l + 1) * 36];
        let mut s = 0.0;
        for p in 0..6 {
            for pp in 0..6 {
                s += h[p][pp] * t[p * 6 + pp];
            }
        }
        s * c
    })
}

/// Element mass under the eight-point lumping rule, all entries.
pub fn element_lumped_mass(tables: &ReferenceTables, geom: &ElementGeometry, eps: &Coefficient) -> DMatrix<f64> {
    let g = gram(&geom.grad_lambda, &eps.matrix());
    let rule = QuadratureRule::lumping();
    let n = tables.dim;
    let mut out = DMatrix::zeros(n, n);
    for (node, vals) in tables.node_values.iter().enumerate() {
        let w = rule.weights[node] * geom.volume;
        for k in 0..n {
            for l in 0..n {
                let mut s = 0.0;
                for m in 0..4 {
                    for mp in 0..4 {
                        s += vals[k][m] * g[m][mp] * vals[l][mp];
                    }
                }
                out[(k, l)] += w * s;
            }
        }
    }
    out
}

/// Sparsity pattern coupling all free dofs of each element.
pub fn shared_pattern(dofmap: &DofMap, n_tets: usize) -> Arc<SparsityPattern> {
    let lists: Vec<Vec<usize>> = (0..n_tets).map(|t| dofmap.free_tet_dofs(t)).collect();
    Arc::new(SparsityPattern::from_elements(dofmap.n_free(), lists.iter().map(|l| l.as_slice())))
}

fn assemble_sparse(
    mesh: &Mesh,
    dofmap: &DofMap,
    pattern: Option<Arc<SparsityPattern>>,
    element: impl Fn(&ElementGeometry) -> DMatrix<f64> + Sync,
) -> Result<SparseMatrix> {
    let pattern = pattern.unwrap_or_else(|| shared_pattern(dofmap, mesh.n_tets()));
    let mut out = SparseMatrix::zeros(pattern);
    let nt = mesh.n_tets();
    for start in (0..nt).step_by(CHUNK) {
        let end = (start + CHUNK).min(nt);
        let local: Vec<DMatrix<f64>> = (start..end)
            .into_par_iter()
            .map(|t| geometry(mesh, t).map(|g| element(&g)))
            .collect::<Result<_>>()?;
        for (t, m) in (start..end).zip(local) {
            let dofs = dofmap.tet_dofs(t);
            for (k, &i) in dofs.iter().enumerate() {
                if i == CONSTRAINED {
                    continue;
                }
                for (l, &j) in dofs.iter().enumerate() {
                    if j == CONSTRAINED || j < i {
                        continue;
                    }
                    out.add_upper(i, j, m[(k, l)]);
                }
            }
        }
    }
    out.finish_symmetric();
    Ok(out)
}

pub fn assemble_consistent_mass(
    mesh: &Mesh,
    dofmap: &DofMap,
    eps: &Coefficient,
    pattern: Option<Arc<SparsityPattern>>,
) -> Result<SparseMatrix> {
    let tables = ReferenceTables::get(dofmap.family());
    assemble_sparse(mesh, dofmap, pattern, |g| element_mass(tables, g, eps))
}

pub fn assemble_stiffness(
    mesh: &Mesh,
    dofmap: &DofMap,
    mu_inv: &Coefficient,
    pattern: Option<Arc<SparsityPattern>>,
) -> Result<SparseMatrix> {
    let tables = ReferenceTables::get(dofmap.family());
    assemble_sparse(mesh, dofmap, pattern, |g| element_stiffness(tables, g, mu_inv))
}

/// Block-diagonal lumped mass. Only couplings between functions surviving
/// at the same lumping node are accumulated, so entries outside the node
/// blocks are zero by construction.
pub fn assemble_lumped_mass(mesh: &Mesh, dofmap: &DofMap, eps: &Coefficient) -> Result<BlockDiagMatrix> {
    let family = dofmap.family();
    if !family.supports_lumping() {
        return Err(Error::InvalidArgument(format!(
            "family {family} has no lumped mass"
        )));
    }
    let tables = ReferenceTables::get(family);
    let rule = QuadratureRule::lumping();
    let survivors: Vec<Vec<usize>> = LocalNode::ALL
        .iter()
        .map(|n| (0..24).filter(|&k| LocalDof::of_slot(k).node() == *n).collect())
        .collect();

    let mut values: Vec<Vec<f64>> = dofmap.blocks().iter().map(|b| vec![0.0; b.len * b.len]).collect();
    let nt = mesh.n_tets();
    for start in (0..nt).step_by(CHUNK) {
        let end = (start + CHUNK).min(nt);
        let local: Vec<Vec<[[f64; 3]; 3]>> = (start..end)
            .into_par_iter()
            .map(|t| {
                let geom = geometry(mesh, t)?;
                let g = gram(&geom.grad_lambda, eps.shape());
                Ok(survivors
                    .iter()
                    .enumerate()
                    .map(|(node, ks)| {
                        let w = rule.weights[node] * geom.volume;
                        let vals = &tables.node_values[node];
                        let mut m = [[0.0; 3]; 3];
                        for (a, &k) in ks.iter().enumerate() {
                            for (b, &l) in ks.iter().enumerate() {
                                let mut s = 0.0;
                                for i in 0..4 {
                                    for j in 0..4 {
                                        s += vals[k][i] * g[i][j] * vals[l][j];
                                    }
                                }
                                m[a][b] = w * s;
                            }
                        }
                        m
                    })
                    .collect())
            })
            .collect::<Result<_>>()?;
        for (t, nodes) in (start..end).zip(local) {
            let dofs = dofmap.tet_dofs(t);
            for (node, m) in nodes.iter().enumerate() {
                let ks = &survivors[node];
                for (a, &k) in ks.iter().enumerate() {
                    let i = dofs[k];
                    if i == CONSTRAINED {
                        continue;
                    }
                    let blk = dofmap.block_of(i);
                    let b0 = dofmap.blocks()[blk].start;
                    let len = dofmap.blocks()[blk].len;
                    for (b, &l) in ks.iter().enumerate() {
                        let j = dofs[l];
                        if j == CONSTRAINED {
                            continue;
                        }
                        if dofmap.block_of(j) != blk {
                            return Err(Error::AssemblyIntegrity(format!(
                                "element {t}: dofs {i} and {j} share a lumping node but not a block"
                            )));
                        }
                        values[blk][(i - b0) * len + (j - b0)] += m[a][b];
                    }
                }
            }
        }
    }

    let blocks = dofmap
        .blocks()
        .iter()
        .zip(values)
        .enumerate()
        .map(|(b, (blk, vals))| {
            let label = match blk.node {
                GlobalNode::Vertex(v) => {
                    let p = mesh.vertices()[v];
                    format!("vertex {v} at ({}, {}, {})", p.x, p.y, p.z)
                }
                GlobalNode::Face(f) => format!("face {f} {:?}", mesh.faces()[f]),
            };
            // Mirror the upper triangle so each block is exactly symmetric.
            let mut vals = vals;
            for i in 0..blk.len {
                for j in 0..i {
                    vals[i * blk.len + j] = vals[j * blk.len + i];
                }
            }
            vals.iter_mut().for_each(|v| *v *= eps.scale());
            DenseSymBlock::new(b, label, blk.start, blk.len, vals).map_err(|e| match e {
                Error::Factorization { node, .. } => Error::AssemblyIntegrity(format!(
                    "lumped mass block {b} at {node} is not positive definite"
                )),
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    BlockDiagMatrix::new(dofmap.n_free(), blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::build_dof_map;
    use crate::linalg::{dot, LinearOperator, RngState};
    use crate::mesh::build_cube_mesh;
    use crate::refelem::{exact_curl_gram, exact_mass_gram, Basis, Family};
    use crate::refelem::geometry::testing::random_tet;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tensor_route_matches_exact_integrals() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let eps = Coefficient::tensor(Matrix3::new(2.0, 0.3, 0.0, 0.3, 1.0, 0.1, 0.0, 0.1, 1.5)).unwrap();
        for fam in [Family::N1, Family::Ej1, Family::Mej1] {
            let tables = ReferenceTables::get(fam);
            let basis = Basis::for_assembly(fam);
            for _ in 0..3 {
                let g = random_tet(&mut rng);
                let m = element_mass(tables, &g, &eps);
                let me = exact_mass_gram(&basis, &g, &eps.matrix());
                assert!((&m - &me).abs().max() < 1e-11 * me.abs().max(), "{fam} mass");
                let k = element_stiffness(tables, &g, &eps);
                let ke = exact_curl_gram(&basis, &g, &eps.matrix());
                assert!((&k - &ke).abs().max() < 1e-11 * ke.abs().max(), "{fam} stiffness");
            }
        }
    }

    #[test]
    fn element_lumped_mass_is_local() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let g = random_tet(&mut rng);
        let tables = ReferenceTables::get(Family::Mej1);
        let m = element_lumped_mass(tables, &g, &Coefficient::identity());
        let scale = m.abs().max();
        for k in 0..24 {
            for l in 0..24 {
                if LocalDof::of_slot(k).node() != LocalDof::of_slot(l).node() {
                    assert!(m[(k, l)].abs() < 1e-12 * scale);
                }
            }
        }
    }

    #[test]
    fn lumped_blocks_and_scaling() {
        let mesh = build_cube_mesh(2).unwrap();
        let map = build_dof_map(&mesh, Family::Mej1);
        let m1 = assemble_lumped_mass(&mesh, &map, &Coefficient::identity()).unwrap();
        let m3 = assemble_lumped_mass(&mesh, &map, &Coefficient::scalar(3.0).unwrap()).unwrap();
        for (a, b) in m1.blocks().iter().zip(m3.blocks()) {
            for (x, y) in a.entries().iter().zip(b.entries()) {
                assert_eq!(x * 3.0, *y);
            }
        }
        let dense = m1.to_dense();
        for i in 0..map.n_free() {
            for j in 0..map.n_free() {
                if map.block_of(i) != map.block_of(j) {
                    assert_eq!(dense[(i, j)], 0.0);
                }
            }
        }
        assert!(m1.blocks().iter().any(|b| b.size() == 4));
    }

    #[test]
    fn stiffness_is_psd_and_mass_spd() {
        let mesh = build_cube_mesh(2).unwrap();
        let map = build_dof_map(&mesh, Family::Mej1);
        let k = assemble_stiffness(&mesh, &map, &Coefficient::identity(), None).unwrap();
        let m = assemble_consistent_mass(&mesh, &map, &Coefficient::identity(), Some(k.pattern().clone())).unwrap();
        assert!(k.is_symmetric() && m.is_symmetric());
        let mut rng = RngState::new(7);
        let scale = k.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut y = vec![0.0; map.n_free()];
        for _ in 0..100 {
            let x = rng.vector(map.n_free());
            k.apply(&x, &mut y);
            assert!(dot(&x, &y) >= -1e-12 * scale * dot(&x, &x));
            m.apply(&x, &mut y);
            assert!(dot(&x, &y) > 0.0);
        }
    }

    #[test]
    fn bubble_gradient_has_no_curl_energy() {
        let mesh = build_cube_mesh(1).unwrap();
        let map = build_dof_map(&mesh, Family::Ej1);
        let k = assemble_stiffness(&mesh, &map, &Coefficient::identity(), None).unwrap();
        // The lumped interior functions are the raw bubbles plus nothing else,
        // so the sum over the four interior dofs of one element is grad(b_K).
        let mut x = vec![0.0; map.n_free()];
        for d in map.interior_dofs(3) {
            x[d] = 1.0;
        }
        let mut y = vec![0.0; map.n_free()];
        k.apply(&x, &mut y);
        let scale = k.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(dot(&x, &y).abs() < 1e-12 * scale, "{}", dot(&x, &y));
    }

    #[test]
    fn lumped_mass_families() {
        let mesh = build_cube_mesh(1).unwrap();
        let map = build_dof_map(&mesh, Family::Ej1);
        assert!(assemble_lumped_mass(&mesh, &map, &Coefficient::identity()).is_ok());
        let n1 = build_dof_map(&mesh, Family::N1);
        assert!(matches!(
            assemble_lumped_mass(&mesh, &n1, &Coefficient::identity()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn parallel_matches_serial() {
        let mesh = build_cube_mesh(3).unwrap();
        let map = build_dof_map(&mesh, Family::Mej1);
        let par = assemble_stiffness(&mesh, &map, &Coefficient::identity(), None).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let ser = pool.install(|| assemble_stiffness(&mesh, &map, &Coefficient::identity(), None).unwrap());
        for (a, b) in par.values().iter().zip(ser.values()) {
            assert!((a - b).abs() <= 1e-14 * a.abs().max(1.0));
        }
    }
}
