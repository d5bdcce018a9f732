use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lumped_maxwell::assembly::BoundaryCondition;
use lumped_maxwell::harness::{
    emit_cfl, render_cfl_table, render_table, run_cfl_table, run_convergence_study,
    run_property_suite, emit_results, CaseTag, RunConfig,
};
use lumped_maxwell::mesh::{build_cube_mesh, write_mesh};
use lumped_maxwell::refelem::Family;
use lumped_maxwell::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_PROPERTY: u8 = 3;

#[derive(Parser)]
#[command(name = "lumped-maxwell", version, about = "Mass-lumped H(curl) elements for the time-domain Maxwell equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convergence study against the elliptic projection of a manufactured solution.
    Run {
        #[arg(long, default_value = "mej1")]
        element: Family,
        #[arg(long, default_value = "nondivfree")]
        case: CaseTag,
        /// Mesh subdivisions per axis, ascending.
        #[arg(long, value_delimiter = ',', default_value = "2,4,8,16")]
        levels: Vec<usize>,
        /// Time step as a multiple of h.
        #[arg(long, default_value_t = 0.02)]
        tau_factor: f64,
        #[arg(long, default_value_t = 2.0)]
        t_end: f64,
        #[arg(long, default_value_t = 10)]
        sample_every: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = "natural")]
        boundary: BoundaryCondition,
        /// CSV output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// CFL constants `1 / (h sqrt(lambda_max))` per element family and level.
    Cfl {
        /// Element families; all three by default.
        #[arg(long, value_delimiter = ',', default_value = "n1,ej1,mej1")]
        element: Vec<Family>,
        #[arg(long, value_delimiter = ',', default_value = "4,8,16")]
        levels: Vec<usize>,
        #[arg(long, default_value = "natural")]
        boundary: BoundaryCondition,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs the property suite.
    Verify,
    /// Writes the cube mesh with `n` subdivisions per axis.
    Mesh {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code(err: &Error) -> u8 {
    match err.root() {
        Error::InvalidArgument(_) => EXIT_USAGE,
        _ => EXIT_SOLVER,
    }
}

fn create(path: &Path) -> Result<File, Error> {
    File::create(path).map_err(|e| Error::from(e).context(format!("cannot create {}", path.display())))
}

fn execute(command: Command) -> Result<u8, Error> {
    match command {
        Command::Run {
            element,
            case,
            levels,
            tau_factor,
            t_end,
            sample_every,
            seed,
            boundary,
            out,
        } => {
            let config = RunConfig {
                family: element,
                case,
                boundary,
                levels,
                tau_factor,
                t_end,
                sample_every,
                seed,
                out,
                ..RunConfig::default()
            };
            let file = config.out.as_deref().map(create).transpose()?;
            let rows = run_convergence_study(&config)?;
            print!("{}", render_table(&rows));
            if let Some(file) = file {
                emit_results(&rows, BufWriter::new(file))?;
            }
            Ok(0)
        }
        Command::Cfl {
            element,
            levels,
            boundary,
            seed,
            out,
        } => {
            if element.is_empty() || levels.is_empty() {
                return Err(Error::InvalidArgument("need at least one element and one level".into()));
            }
            let file = out.as_deref().map(create).transpose()?;
            let rows = run_cfl_table(&element, &levels, boundary, seed)?;
            print!("{}", render_cfl_table(&rows));
            if let Some(file) = file {
                emit_cfl(&rows, BufWriter::new(file))?;
            }
            Ok(0)
        }
        Command::Verify => {
            let report = run_property_suite();
            println!("{report}");
            Ok(if report.all_passed() { 0 } else { EXIT_PROPERTY })
        }
        Command::Mesh { n, out } => {
            let mesh = build_cube_mesh(n)?;
            write_mesh(&mesh, &out)?;
            let s = mesh.stats();
            println!(
                "wrote {} ({} vertices, {} tetrahedra, h_max {:.6})",
                out.display(),
                s.n_vertices,
                s.n_tets,
                s.h_max
            );
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
