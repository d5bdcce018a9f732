use std::path::PathBuf;
use std::time::Instant;

use super::{CaseTag, ManufacturedCase};
use crate::assembly::{
    assemble_consistent_mass, assemble_load, assemble_lumped_mass, assemble_stiffness,
    build_dof_map_with, elliptic_projection, BoundaryCondition, error_norms, Coefficient,
};
use crate::dynamics::{cfl_constant, CflEstimate, CflMass, Leapfrog, TransientState, CFL_TOLERANCE};
use crate::error::{Error, Result};
use crate::linalg::{CgMass, CgOptions, MassOperator, PowerOptions, RngState};
use crate::mesh::build_cube_mesh;
use crate::refelem::Family;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub family: Family,
    pub case: CaseTag,
    /// The test fields have a nonzero tangential trace, so the study keeps
    /// the boundary dofs by default.
    pub boundary: BoundaryCondition,
    /// Subdivisions per axis of the cube mesh, one study level each.
    pub levels: Vec<usize>,
    pub tau_factor: f64,
    pub t_end: f64,
    /// Errors are sampled at every `sample_every`-th time level.
    pub sample_every: usize,
    pub projection_tol: f64,
    /// CG tolerance for mass solves when the family has no lumped mass.
    pub mass_tol: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            family: Family::Mej1,
            case: CaseTag::NonDivFree,
            boundary: BoundaryCondition::Natural,
            levels: vec![2, 4, 8, 16],
            tau_factor: 0.02,
            t_end: 2.0,
            sample_every: 10,
            projection_tol: 1e-12,
            mass_tol: 1e-12,
            seed: RngState::DEFAULT_SEED,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::InvalidArgument("at least one level is required".into()));
        }
        if self.levels.iter().any(|&n| n == 0) {
            return Err(Error::InvalidArgument("levels must be positive".into()));
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!(
                "levels must be strictly ascending, got {:?}",
                self.levels
            )));
        }
        if !(self.tau_factor > 0.0) || !self.tau_factor.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "tau factor must be positive, got {}",
                self.tau_factor
            )));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::InvalidArgument(format!("final time must be positive, got {}", self.t_end)));
        }
        if self.sample_every == 0 {
            return Err(Error::InvalidArgument("sample interval must be at least 1".into()));
        }
        if !(self.projection_tol > 0.0) || !(self.mass_tol > 0.0) {
            return Err(Error::InvalidArgument("solver tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub level: usize,
    pub h: f64,
    pub ndof: usize,
    pub err_l2: f64,
    pub eoc_l2: Option<f64>,
    pub err_curl: f64,
    pub eoc_curl: Option<f64>,
    pub runtime_s: f64,
}

/// `log(err_coarse / err_fine) / log(h_coarse / h_fine)`.
pub fn compute_eoc(err_coarse: f64, err_fine: f64, h_coarse: f64, h_fine: f64) -> Result<f64> {
    for (name, v) in [
        ("coarse error", err_coarse),
        ("fine error", err_fine),
        ("coarse h", h_coarse),
        ("fine h", h_fine),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
        }
    }
    if h_coarse == h_fine {
        return Err(Error::InvalidArgument("mesh sizes must differ".into()));
    }
    Ok((err_coarse / err_fine).ln() / (h_coarse / h_fine).ln())
}

/// One level of the study: discrete solution from projected initial data,
/// errors against the elliptic projection sampled up to (excluding) `t_end`.
///
/// Both test fields are `cos(t) F(x)`, so the load and the projection are
/// computed once and scaled by `cos(t)`.
pub fn run_level(config: &RunConfig, n: usize) -> Result<ConvergenceRow> {
    let start = Instant::now();
    let mesh = build_cube_mesh(n)?;
    let h = mesh.stats().h_max;
    let map = build_dof_map_with(&mesh, config.family, config.boundary);
    let unit = Coefficient::identity();
    let stiffness = assemble_stiffness(&mesh, &map, &unit, None)?;
    let mass = assemble_consistent_mass(&mesh, &map, &unit, Some(stiffness.pattern().clone()))?;
    let case = ManufacturedCase::new(config.case);
    let load0 = assemble_load(&mesh, &map, &case, 0.0)?.values;
    let proj0 = elliptic_projection(&mesh, &map, &mass, &stiffness, &case, 0.0, config.projection_tol)?.values;

    let lumped;
    let cg_mass;
    let mass_op: &dyn MassOperator = if config.family.supports_lumping() {
        lumped = assemble_lumped_mass(&mesh, &map, &unit)?;
        &lumped
    } else {
        let opts = CgOptions {
            tol: config.mass_tol,
            ..CgOptions::default()
        };
        cg_mass = CgMass::new(&mass, mass.diagonal(), opts);
        &cg_mass
    };

    let tau = config.tau_factor * h;
    let e0 = proj0.clone();
    let e1: Vec<f64> = proj0.iter().map(|v| v * tau.cos()).collect();
    let mut state = TransientState::new(e0, e1, tau, config.t_end)?;
    let total = state.total_steps();
    let mut stepper = Leapfrog::new(mass_op, &stiffness);
    let mut g = vec![0.0; map.n_free()];
    let mut diff = vec![0.0; map.n_free()];
    let mut err_l2: f64 = 0.0;
    let mut err_curl: f64 = 0.0;
    let mut sample = |n: usize, e: &[f64]| {
        let c = (n as f64 * tau).cos();
        for i in 0..diff.len() {
            diff[i] = c * proj0[i] - e[i];
        }
        let (l2, curl) = error_norms(&diff, &mass, &stiffness);
        err_l2 = err_l2.max(l2);
        err_curl = err_curl.max(curl);
    };
    sample(0, &state.e_prev);
    if config.sample_every == 1 && total > 1 {
        sample(1, &state.e_curr);
    }
    while state.n + 1 < total {
        let c = state.time().cos();
        for i in 0..g.len() {
            g[i] = c * load0[i];
        }
        stepper.step(&mut state, Some(&g), false)?;
        if state.n % config.sample_every == 0 {
            sample(state.n, &state.e_curr);
        }
    }
    Ok(ConvergenceRow {
        level: n,
        h,
        ndof: map.n_free(),
        err_l2,
        eoc_l2: None,
        err_curl,
        eoc_curl: None,
        runtime_s: start.elapsed().as_secs_f64(),
    })
}

pub fn run_convergence_study(config: &RunConfig) -> Result<Vec<ConvergenceRow>> {
    config.validate()?;
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(config.levels.len());
    for &n in &config.levels {
        let mut row = run_level(config, n).map_err(|e| e.context(format!("level n={n}")))?;
        if let Some(prev) = rows.last() {
            row.eoc_l2 = compute_eoc(prev.err_l2, row.err_l2, prev.h, row.h).ok();
            row.eoc_curl = compute_eoc(prev.err_curl, row.err_curl, prev.h, row.h).ok();
        }
        rows.push(row);
    }
    Ok(rows)
}

/// CFL constants of several families on one mesh level.
#[derive(Debug, Clone, PartialEq)]
pub struct CflRow {
    pub level: usize,
    pub h: f64,
    pub entries: Vec<(Family, usize, CflEstimate)>,
}

pub fn run_cfl_table(
    families: &[Family],
    levels: &[usize],
    boundary: BoundaryCondition,
    seed: u64,
) -> Result<Vec<CflRow>> {
    let unit = Coefficient::identity();
    let opts = PowerOptions {
        tol: CFL_TOLERANCE,
        ..PowerOptions::default()
    };
    let mut rows = Vec::new();
    for &n in levels {
        let mesh = build_cube_mesh(n)?;
        let h = mesh.stats().h_max;
        let mut entries = Vec::new();
        for &family in families {
            let map = build_dof_map_with(&mesh, family, boundary);
            let k = assemble_stiffness(&mesh, &map, &unit, None)?;
            let mut rng = RngState::new(seed);
            let est = if family.supports_lumping() {
                let m = assemble_lumped_mass(&mesh, &map, &unit)?;
                cfl_constant(h, CflMass::Lumped(&m), &k, &opts, &mut rng)
            } else {
                let m = assemble_consistent_mass(&mesh, &map, &unit, Some(k.pattern().clone()))?;
                cfl_constant(h, CflMass::Consistent(&m), &k, &opts, &mut rng)
            }
            .map_err(|e| e.context(format!("{family} on level n={n}")))?;
            entries.push((family, map.n_free(), est));
        }
        rows.push(CflRow { level: n, h, entries });
    }
    Ok(rows)
}
