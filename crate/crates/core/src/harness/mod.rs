//! Manufactured solutions, convergence studies, results files and the
//! property suite.

mod cases;
mod output;
mod study;
mod suite;

pub use cases::{CaseTag, ManufacturedCase};
pub use output::{
    emit_cfl, emit_results, format_sig, parse_results, render_cfl_table, render_table, write_results,
    CSV_HEADER,
};
pub use study::{
    compute_eoc, run_cfl_table, run_convergence_study, run_level, CflRow, ConvergenceRow, RunConfig,
};
pub use suite::{run_property_suite, Comparison, PropertyCheck, PropertyReport};
