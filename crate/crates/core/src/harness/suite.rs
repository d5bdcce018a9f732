use std::fmt;

use nalgebra::{DMatrix, Matrix3, SymmetricEigen};

use super::{compute_eoc, CaseTag, ManufacturedCase};
use crate::assembly::{
    assemble_consistent_mass, assemble_lumped_mass, assemble_stiffness, build_dof_map,
    build_dof_map_with, lumped_load_defect, max_tangential_jump, BoundaryCondition, Coefficient,
    GlobalNode,
};
use crate::dynamics::{cfl_constant, leapfrog_run, stability_probe, CflMass, Leapfrog, RunOptions, TransientState};
use crate::error::Result;
use crate::linalg::{dot, norm, LinearOperator, PowerOptions, RngState};
use crate::mesh::{build_cube_mesh, Point};
use crate::refelem::{
    bubble_tangential_defect, curl_rank, divfree_bubble_gradient_defect, eval_monomial,
    exact_mass_gram, exact_monomial_integral, locality_defect, modified_bubble_mean_defect,
    monomials_up_to, numerical_rank, random_tet, Basis, ElementGeometry, Family, LumpedTransform,
    QuadratureRule,
};

const SEED: u64 = 20;
const RANDOM_TETS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    AtMost,
    AtLeast,
    Equal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyCheck {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    pub comparison: Comparison,
    /// Set when the check could not be evaluated.
    pub error: Option<String>,
}

impl PropertyCheck {
    fn new(name: &str, measured: f64, comparison: Comparison, threshold: f64) -> Self {
        let passed = match comparison {
            Comparison::AtMost => measured <= threshold,
            Comparison::AtLeast => measured >= threshold,
            Comparison::Equal => measured == threshold,
        };
        Self {
            name: name.to_owned(),
            passed,
            measured,
            threshold,
            comparison,
            error: None,
        }
    }

    fn failed(name: &str, comparison: Comparison, threshold: f64, err: String) -> Self {
        Self {
            name: name.to_owned(),
            passed: false,
            measured: f64::NAN,
            threshold,
            comparison,
            error: Some(err),
        }
    }
}

impl fmt::Display for PropertyCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let op = match self.comparison {
            Comparison::AtMost => "<=",
            Comparison::AtLeast => ">=",
            Comparison::Equal => "==",
        };
        write!(f, "{status} {:<40} measured {:.3e} {op} {:.3e}", self.name, self.measured, self.threshold)?;
        if let Some(e) = &self.error {
            write!(f, " ({e})")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PropertyReport {
    pub checks: Vec<PropertyCheck>,
}

impl PropertyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &PropertyCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&PropertyCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn record(&mut self, name: &str, comparison: Comparison, threshold: f64, f: impl FnOnce() -> Result<f64>) {
        let check = match f() {
            Ok(v) => PropertyCheck::new(name, v, comparison, threshold),
            Err(e) => PropertyCheck::failed(name, comparison, threshold, e.to_string()),
        };
        self.checks.push(check);
    }
}

impl fmt::Display for PropertyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        let failed = self.failures().count();
        write!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

fn tets(seed: u64) -> Vec<ElementGeometry> {
    let mut rng = RngState::new(seed);
    (0..RANDOM_TETS).map(|_| random_tet(rng.rng())).collect()
}

fn worst(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

/// Runs every reference-element, assembly and time-stepping invariant on
/// fixed seeds and small meshes.
pub fn run_property_suite() -> PropertyReport {
    use Comparison::*;
    let mut r = PropertyReport::default();
    let geoms = tets(SEED);

    r.record("quadrature cubic exactness", AtMost, 1e-13, || {
        let rule = QuadratureRule::lumping();
        Ok(worst(geoms.iter().flat_map(|g| {
            let rule = &rule;
            monomials_up_to(3).into_iter().map(move |m| {
                let q = rule.integrate_barycentric(g.volume, |b| eval_monomial(&m, b));
                let e = exact_monomial_integral(m, g.volume);
                (q - e).abs() / e
            })
        })))
    });
    r.record("quadrature quartic witness", AtMost, 1e-15, || {
        let q = QuadratureRule::lumping().integrate_barycentric(1.0, |b| b[1] * b[1] * b[2] * b[2]);
        let e = exact_monomial_integral([0, 2, 2, 0], 1.0);
        Ok((q - 1.0 / 180.0).abs().max((e - 1.0 / 210.0).abs()))
    });
    r.record("modified bubble mean", AtMost, 1e-13, || {
        Ok(worst(geoms.iter().map(modified_bubble_mean_defect)))
    });
    r.record("divergence-free degree-4 exactness", AtMost, 1e-13, || {
        Ok(worst(geoms.iter().map(divfree_bubble_gradient_defect)))
    });
    r.record("bubble tangential traces", AtMost, 1e-13, || {
        Ok(worst(geoms.iter().map(bubble_tangential_defect)))
    });
    r.record("mEJ1 gram rank", Equal, 24.0, || {
        let g = &geoms[0];
        let gram = exact_mass_gram(&Basis::raw(Family::Mej1), g, &Matrix3::identity());
        Ok(numerical_rank(&gram, 1e-12) as f64)
    });
    r.record("EJ1 added curl rank", Equal, 3.0, || Ok(curl_rank(Family::Ej1, &geoms[1]) as f64));
    r.record("mEJ1 added curl rank", Equal, 4.0, || Ok(curl_rank(Family::Mej1, &geoms[1]) as f64));

    let standard = LumpedTransform::standard();
    for fam in [Family::Ej1, Family::Mej1] {
        r.record(&format!("{fam} lumping locality"), AtMost, 1e-12, || {
            Ok(worst(geoms.iter().map(|g| locality_defect(fam, &standard, g))))
        });
    }
    r.record("perturbed locality detected", AtLeast, 1e-5, || {
        let mut edge = *standard.edge_coefficients();
        edge[(0, 6)] += 1e-3;
        let bad = LumpedTransform::from_coefficients(*standard.face_coefficients(), edge);
        Ok(locality_defect(Family::Mej1, &bad, &geoms[0]))
    });

    r.record("free dof count formula", AtMost, 0.0, || {
        let mut mismatches = 0;
        for n in 1..=3 {
            let mesh = build_cube_mesh(n)?;
            let ie = (0..mesh.n_edges()).filter(|&e| !mesh.is_boundary_edge(e)).count();
            let ifc = (0..mesh.n_faces()).filter(|&f| !mesh.is_boundary_face(f)).count();
            for fam in Family::ALL {
                let interior = if fam.has_interior() { 4 * mesh.n_tets() } else { 0 };
                if build_dof_map(&mesh, fam).n_free() != 2 * ie + 2 * ifc + interior {
                    mismatches += 1;
                }
            }
        }
        Ok(mismatches as f64)
    });

    let mesh2 = || build_cube_mesh(2);
    r.record("tangential continuity", AtMost, 1e-12, || {
        let mesh = mesh2()?;
        let mut w: f64 = 0.0;
        for fam in Family::ALL {
            w = w.max(max_tangential_jump(&mesh, &build_dof_map(&mesh, fam))?);
        }
        Ok(w)
    });
    r.record("lumped constant-field exactness", AtMost, 1e-12, || {
        let mesh = mesh2()?;
        let mut w: f64 = 0.0;
        for fam in [Family::Ej1, Family::Mej1] {
            w = w.max(lumped_load_defect(&mesh, &build_dof_map(&mesh, fam))?);
        }
        Ok(w)
    });
    r.record("lumped mass block structure", AtMost, 0.0, || {
        let mesh = mesh2()?;
        let map = build_dof_map(&mesh, Family::Mej1);
        let m = assemble_lumped_mass(&mesh, &map, &Coefficient::identity())?;
        let dense = m.to_dense();
        let mut bad = 0usize;
        for i in 0..map.n_free() {
            for j in 0..map.n_free() {
                if map.block_of(i) != map.block_of(j) && dense[(i, j)] != 0.0 {
                    bad += 1;
                }
            }
        }
        for b in map.blocks() {
            if let GlobalNode::Face(f) = b.node {
                if !mesh.is_boundary_face(f) && b.len != 4 {
                    bad += 1;
                }
            }
        }
        Ok(bad as f64)
    });
    r.record("lumped mass blocks SPD", AtLeast, f64::MIN_POSITIVE, || {
        let mesh = mesh2()?;
        let map = build_dof_map(&mesh, Family::Mej1);
        let m = assemble_lumped_mass(&mesh, &map, &Coefficient::identity())?;
        let mut least = f64::INFINITY;
        for b in m.blocks() {
            let d = DMatrix::from_row_slice(b.size(), b.size(), b.entries());
            let eig = SymmetricEigen::new(d);
            let max = eig.eigenvalues.max();
            least = least.min(eig.eigenvalues.min() / max);
        }
        Ok(least)
    });
    r.record("natural boundary lumped mass", AtLeast, f64::MIN_POSITIVE, || {
        let mesh = mesh2()?;
        let mut least = f64::INFINITY;
        for fam in [Family::Ej1, Family::Mej1] {
            let map = build_dof_map_with(&mesh, fam, BoundaryCondition::Natural);
            let m = assemble_lumped_mass(&mesh, &map, &Coefficient::identity())?;
            for b in m.blocks() {
                let eig = SymmetricEigen::new(DMatrix::from_row_slice(b.size(), b.size(), b.entries()));
                least = least.min(eig.eigenvalues.min() / eig.eigenvalues.max());
            }
        }
        Ok(least)
    });
    r.record("permittivity scaling", AtMost, 1e-15, || {
        let mesh = mesh2()?;
        let map = build_dof_map(&mesh, Family::Mej1);
        let three = Coefficient::scalar(3.0)?;
        let one = Coefficient::identity();
        let l1 = assemble_lumped_mass(&mesh, &map, &one)?;
        let l3 = assemble_lumped_mass(&mesh, &map, &three)?;
        let c1 = assemble_consistent_mass(&mesh, &map, &one, None)?;
        let c3 = assemble_consistent_mass(&mesh, &map, &three, None)?;
        let mut w: f64 = 0.0;
        for (a, b) in l1.blocks().iter().zip(l3.blocks()) {
            for (x, y) in a.entries().iter().zip(b.entries()) {
                w = w.max((3.0 * x - y).abs() / y.abs().max(f64::MIN_POSITIVE));
            }
        }
        for (x, y) in c1.values().iter().zip(c3.values()) {
            if *y != 0.0 {
                w = w.max((3.0 * x - y).abs() / y.abs());
            }
        }
        Ok(w)
    });
    r.record("stiffness positive semidefinite", AtLeast, -1e-12, || {
        let mesh = mesh2()?;
        let map = build_dof_map(&mesh, Family::Mej1);
        let k = assemble_stiffness(&mesh, &map, &Coefficient::identity(), None)?;
        let scale = k.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut rng = RngState::new(SEED);
        let mut y = vec![0.0; k.dim()];
        let mut least = f64::INFINITY;
        for _ in 0..100 {
            let x = rng.vector(k.dim());
            k.apply(&x, &mut y);
            least = least.min(dot(&x, &y) / (scale * dot(&x, &x)));
        }
        Ok(least)
    });
    r.record("bubble gradient curl energy", AtMost, 1e-12, || {
        let mesh = build_cube_mesh(1)?;
        let map = build_dof_map(&mesh, Family::Ej1);
        let k = assemble_stiffness(&mesh, &map, &Coefficient::identity(), None)?;
        let scale = k.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut w: f64 = 0.0;
        for t in 0..mesh.n_tets() {
            let mut x = vec![0.0; k.dim()];
            for d in map.interior_dofs(t) {
                x[d] = 1.0;
            }
            let mut y = vec![0.0; k.dim()];
            k.apply(&x, &mut y);
            w = w.max(dot(&x, &y).abs() / scale);
        }
        Ok(w)
    });

    dynamics_checks(&mut r);

    r.record("divergence-free case divergence", AtMost, 1e-14, || {
        let case = ManufacturedCase::new(CaseTag::DivFree);
        let mut rng = RngState::new(SEED);
        Ok(worst((0..100).map(|_| {
            let x = Point::new(rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0));
            case.divergence(&x, rng.uniform(0.0, 2.0)).abs()
        })))
    });
    r.record("second case divergence is nonzero", AtLeast, 1.0, || {
        let case = ManufacturedCase::new(CaseTag::NonDivFree);
        Ok(case.divergence(&Point::new(0.25, 0.25, 0.5), 0.0).abs())
    });
    r.record("eoc example", AtMost, 0.005, || {
        Ok((compute_eoc(0.036455, 0.008924, 0.5, 0.25)? - 2.03).abs())
    });
    r
}

fn dynamics_checks(r: &mut PropertyReport) {
    use Comparison::*;
    let setup = || -> Result<_> {
        let mesh = build_cube_mesh(2)?;
        let map = build_dof_map(&mesh, Family::Mej1);
        let m = assemble_lumped_mass(&mesh, &map, &Coefficient::identity())?;
        let k = assemble_stiffness(&mesh, &map, &Coefficient::identity(), None)?;
        let h = mesh.stats().h_max;
        let cfl = cfl_constant(h, CflMass::Lumped(&m), &k, &PowerOptions::default(), &mut RngState::new(SEED))?;
        Ok((m, k, cfl.tau_max))
    };
    let system = match setup() {
        Ok(s) => s,
        Err(e) => {
            for name in ["energy drift", "instability detected", "energy identity", "time reversal"] {
                r.checks.push(PropertyCheck::failed(name, AtMost, 0.0, e.to_string()));
            }
            return;
        }
    };
    let (m, k, tau_max) = (&system.0, &system.1, system.2);
    let n = k.dim();

    r.record("energy drift", AtMost, 1e-10, || {
        let mut rng = RngState::new(SEED);
        let tau = 0.9 * tau_max;
        let opts = RunOptions { tau, t_end: 1000.0 * tau, sample_every: 0, record_energy: true };
        let tr = leapfrog_run(m, k, None, rng.vector(n), rng.vector(n), &opts)?;
        Ok(tr.energy.relative_drift())
    });
    r.record("instability detected", Equal, 1.0, || {
        let res = stability_probe(m, k, &[2.5 * tau_max], &mut RngState::new(SEED))?;
        Ok(if res[0].is_stable() { 0.0 } else { 1.0 })
    });
    r.record("energy identity", AtMost, 1e-10, || {
        let mut rng = RngState::new(SEED);
        let tau = 0.5 * tau_max;
        let g = rng.vector(n);
        let mut st = TransientState::new(rng.vector(n), rng.vector(n), tau, 1.0)?;
        let mut lf = Leapfrog::new(m, k);
        let mut prev = lf.energy(&st.e_prev.clone(), &st.e_curr.clone(), tau);
        let mut w: f64 = 0.0;
        for _ in 0..20 {
            let before = st.e_prev.clone();
            let e = lf.step(&mut st, Some(&g), true)?.unwrap_or(f64::NAN);
            let work: f64 = (0..n).map(|i| g[i] * (st.e_curr[i] - before[i]) / 2.0).sum();
            w = w.max((e - prev - work).abs() / e.abs().max(prev.abs()));
            prev = e;
        }
        Ok(w)
    });
    r.record("time reversal", AtMost, 1e-9, || {
        let mut rng = RngState::new(SEED);
        let (e0, e1) = (rng.vector(n), rng.vector(n));
        let mut st = TransientState::new(e0.clone(), e1.clone(), 0.5 * tau_max, 1.0)?;
        let mut lf = Leapfrog::new(m, k);
        for _ in 0..100 {
            lf.step(&mut st, None, false)?;
        }
        std::mem::swap(&mut st.e_prev, &mut st.e_curr);
        for _ in 0..100 {
            lf.step(&mut st, None, false)?;
        }
        let d: Vec<f64> = st.e_curr.iter().zip(&e0).chain(st.e_prev.iter().zip(&e1)).map(|(a, b)| a - b).collect();
        Ok(norm(&d) / norm(&e0).max(norm(&e1)))
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes() {
        let report = run_property_suite();
        assert!(report.all_passed(), "{report}");
        assert_eq!(report.get("EJ1 added curl rank").unwrap().measured, 3.0);
        assert_eq!(report.get("mEJ1 added curl rank").unwrap().measured, 4.0);
        assert!(report.checks.len() >= 25);
    }

    #[test]
    fn comparisons() {
        assert!(PropertyCheck::new("a", 1.0, Comparison::AtMost, 1.0).passed);
        assert!(!PropertyCheck::new("a", f64::NAN, Comparison::AtMost, 1.0).passed);
        assert!(!PropertyCheck::new("a", 0.5, Comparison::AtLeast, 1.0).passed);
        assert!(!PropertyCheck::new("a", 2.0, Comparison::Equal, 3.0).passed);
    }
}
