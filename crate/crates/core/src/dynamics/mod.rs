//! Explicit leapfrog time stepping, discrete energy and step-size limits.

mod cfl;
mod leapfrog;

pub use cfl::{
    cfl_constant, stability_probe, CflEstimate, CflMass, ProbeOutcome, CFL_TOLERANCE, PROBE_STEPS,
};
pub use leapfrog::{leapfrog_run, EnergyTrace, Leapfrog, OpCounters, RunOptions, Trajectory, TransientState};
