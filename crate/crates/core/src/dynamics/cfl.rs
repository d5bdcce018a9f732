use super::leapfrog::{Leapfrog, TransientState};
use crate::error::{Error, Result};
use crate::linalg::{
    dot, lobpcg_max_eig, BlockDiagMatrix, LinearOperator, MassOperator, PowerOptions, RngState,
    SparseMatrix,
};

/// Steps run per stability candidate.
pub const PROBE_STEPS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CflEstimate {
    pub h: f64,
    pub lambda_max: f64,
    /// `1 / (h sqrt(lambda_max))`.
    pub c: f64,
    /// Sufficient step `c h = 1 / sqrt(lambda_max)`.
    pub tau_max: f64,
    /// Sharp leapfrog limit `2 / sqrt(lambda_max)`.
    pub tau_sharp: f64,
    pub iterations: usize,
}

/// Mass matrix entering the step-size limit.
#[derive(Clone, Copy)]
pub enum CflMass<'a> {
    Lumped(&'a BlockDiagMatrix),
    /// Consistent mass, preconditioned by its diagonal.
    Consistent(&'a SparseMatrix),
}

/// Default relative tolerance on the eigenvalue estimate.
pub const CFL_TOLERANCE: f64 = 1e-10;

/// `c = 1 / (h sqrt(lambda_max(M^{-1} K)))`.
///
/// The eigenvalue is computed with [`lobpcg_max_eig`], which needs no
/// inner solves for the consistent mass.
pub fn cfl_constant(
    h: f64,
    mass: CflMass<'_>,
    stiffness: &dyn LinearOperator,
    opts: &PowerOptions,
    rng: &mut RngState,
) -> Result<CflEstimate> {
    let est = match mass {
        CflMass::Lumped(m) => {
            let pre = |r: &[f64], z: &mut [f64]| {
                m.solve(r, z).expect("block solve cannot fail after factorization")
            };
            lobpcg_max_eig(stiffness, m, &pre, opts, rng)
        }
        CflMass::Consistent(m) => {
            let inv: Vec<f64> = m.diagonal().iter().map(|d| 1.0 / d).collect();
            let pre = |r: &[f64], z: &mut [f64]| {
                z.iter_mut().zip(r).zip(&inv).for_each(|((z, r), d)| *z = r * d)
            };
            lobpcg_max_eig(stiffness, m, &pre, opts, rng)
        }
    }
    .map_err(|e| e.context("CFL estimate"))?;
    if !(est.lambda > 0.0) {
        return Err(Error::InvalidInput("stiffness has no positive eigenvalue".into()));
    }
    let s = est.lambda.sqrt();
    Ok(CflEstimate {
        h,
        lambda_max: est.lambda,
        c: 1.0 / (h * s),
        tau_max: 1.0 / s,
        tau_sharp: 2.0 / s,
        iterations: est.iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbeOutcome {
    /// Largest ratio of the monitored energy to its initial value.
    Stable { growth: f64 },
    Unstable { step: usize },
}

impl ProbeOutcome {
    pub fn is_stable(&self) -> bool {
        matches!(self, ProbeOutcome::Stable { .. })
    }
}

/// Runs [`PROBE_STEPS`] unforced steps from random data for each `tau`.
///
/// The conserved energy stays constant even past the stability limit, so the
/// probe monitors the positive quantity `1/2 |d|_M^2 + 1/2 |curl e_hat|^2`
/// and declares a candidate stable while it stays within 10 times its
/// initial value.
pub fn stability_probe(
    mass: &dyn MassOperator,
    stiffness: &dyn LinearOperator,
    taus: &[f64],
    rng: &mut RngState,
) -> Result<Vec<ProbeOutcome>> {
    let n = stiffness.dim();
    let e0 = rng.vector(n);
    let e1 = rng.vector(n);
    let mut out = Vec::with_capacity(taus.len());
    for &tau in taus {
        let mut state = TransientState::new(e0.clone(), e1.clone(), tau, PROBE_STEPS as f64 * tau)?;
        let mut lf = Leapfrog::new(mass, stiffness);
        let p0 = monitored(mass, stiffness, &state.e_prev, &state.e_curr, tau);
        let mut growth: f64 = 1.0;
        let mut result = None;
        for _ in 0..PROBE_STEPS {
            match lf.step(&mut state, None, false) {
                Ok(_) => {}
                Err(Error::Instability { step }) => {
                    result = Some(ProbeOutcome::Unstable { step });
                    break;
                }
                Err(e) => return Err(e),
            }
            let p = monitored(mass, stiffness, &state.e_prev, &state.e_curr, tau);
            growth = growth.max(p / p0);
            if !(p <= 10.0 * p0) {
                result = Some(ProbeOutcome::Unstable { step: state.n });
                break;
            }
        }
        out.push(result.unwrap_or(ProbeOutcome::Stable { growth }));
    }
    Ok(out)
}

fn monitored(mass: &dyn MassOperator, stiffness: &dyn LinearOperator, a: &[f64], b: &[f64], tau: f64) -> f64 {
    let n = a.len();
    let d: Vec<f64> = (0..n).map(|i| (b[i] - a[i]) / tau).collect();
    let avg: Vec<f64> = (0..n).map(|i| 0.5 * (a[i] + b[i])).collect();
    let mut y = vec![0.0; n];
    mass.apply(&d, &mut y);
    let kinetic = dot(&d, &y);
    stiffness.apply(&avg, &mut y);
    0.5 * kinetic + 0.5 * dot(&avg, &y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{
        assemble_consistent_mass, assemble_lumped_mass, assemble_stiffness, build_dof_map, Coefficient,
    };
    use crate::dynamics::{leapfrog_run, RunOptions};
    use crate::linalg::{power_iteration_max_eig, CgMass, CgOptions};
    use crate::mesh::build_cube_mesh;
    use crate::refelem::Family;

    #[test]
    fn probe_and_drift() {
        let mesh = build_cube_mesh(2).unwrap();
        let map = build_dof_map(&mesh, Family::Mej1);
        let m = assemble_lumped_mass(&mesh, &map, &Coefficient::identity()).unwrap();
        let k = assemble_stiffness(&mesh, &map, &Coefficient::identity(), None).unwrap();
        let mut rng = RngState::new(3);
        let cfl = cfl_constant(0.5, CflMass::Lumped(&m), &k, &PowerOptions::default(), &mut rng).unwrap();
        let taus = [0.5 * cfl.tau_max, (1.0 + 1e-3) * cfl.tau_max, 2.5 * cfl.tau_max];
        let res = stability_probe(&m, &k, &taus, &mut rng).unwrap();
        assert!(res[0].is_stable() && res[1].is_stable(), "{res:?}");
        assert!(!res[2].is_stable());

        let n = k.dim();
        let opts = RunOptions {
            tau: 0.9 * cfl.tau_max,
            t_end: 1000.0 * 0.9 * cfl.tau_max,
            sample_every: 0,
            record_energy: true,
        };
        let tr = leapfrog_run(&m, &k, None, rng.vector(n), rng.vector(n), &opts).unwrap();
        assert_eq!(tr.energy.values.len(), 1000);
        assert!(tr.energy.relative_drift() <= 1e-10, "{}", tr.energy.relative_drift());
    }

    #[test]
    fn permittivity_scaling() {
        let mesh = build_cube_mesh(2).unwrap();
        let map = build_dof_map(&mesh, Family::Mej1);
        let k = assemble_stiffness(&mesh, &map, &Coefficient::identity(), None).unwrap();
        let m1 = assemble_lumped_mass(&mesh, &map, &Coefficient::identity()).unwrap();
        let m2 = assemble_lumped_mass(&mesh, &map, &Coefficient::scalar(2.0).unwrap()).unwrap();
        let opts = PowerOptions { tol: 1e-12, ..PowerOptions::default() };
        let a = cfl_constant(0.5, CflMass::Lumped(&m1), &k, &opts, &mut RngState::new(9)).unwrap();
        let b = cfl_constant(0.5, CflMass::Lumped(&m2), &k, &opts, &mut RngState::new(9)).unwrap();
        assert!((b.tau_max / a.tau_max - 2f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn agrees_with_power_iteration() {
        let mesh = build_cube_mesh(1).unwrap();
        for fam in [Family::N1, Family::Mej1] {
            let map = build_dof_map(&mesh, fam);
            let k = assemble_stiffness(&mesh, &map, &Coefficient::identity(), None).unwrap();
            let opts = PowerOptions { tol: 1e-12, max_iter: 200_000 };
            let (lob, pow) = if fam == Family::N1 {
                let m = assemble_consistent_mass(&mesh, &map, &Coefficient::identity(), None).unwrap();
                let cg = CgMass::new(&m, m.diagonal(), CgOptions { tol: 1e-13, ..CgOptions::default() });
                (
                    cfl_constant(1.0, CflMass::Consistent(&m), &k, &opts, &mut RngState::new(2)).unwrap(),
                    power_iteration_max_eig(&k, &cg, &opts, &mut RngState::new(2)).unwrap(),
                )
            } else {
                let m = assemble_lumped_mass(&mesh, &map, &Coefficient::identity()).unwrap();
                (
                    cfl_constant(1.0, CflMass::Lumped(&m), &k, &opts, &mut RngState::new(2)).unwrap(),
                    power_iteration_max_eig(&k, &m, &opts, &mut RngState::new(2)).unwrap(),
                )
            };
            assert!((lob.lambda_max - pow.lambda).abs() < 1e-8 * pow.lambda, "{fam}: {} vs {}", lob.lambda_max, pow.lambda);
        }
    }
}
