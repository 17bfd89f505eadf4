use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use aleweno::cases::{make_case, reference_1d_solve};
use aleweno::runner::{
    convergence_csv, convergence_study, format_convergence_table, run, RunConfig,
};
use aleweno::Error;

#[derive(Parser)]
#[command(name = "aleweno", version, about = "ALE one-step WENO solver for the Baer-Nunziato model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a test case (or a key = value config file) to its final time.
    Run(RunArgs),
    /// Vortex convergence table on a sequence of meshes.
    Convergence {
        #[arg(long, default_value_t = 2)]
        order: usize,
        #[arg(long, value_delimiter = ',', default_value = "24,32")]
        meshes: Vec<usize>,
        #[arg(long, default_value_t = 2.0)]
        t_end: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fine-grid 1D reference profile of a Riemann or explosion case.
    Reference {
        #[arg(long)]
        case: String,
        #[arg(long, default_value_t = 10_000)]
        cells: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "")]
        commit: String,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Case name or path of a config file.
    #[arg(long)]
    case: String,
    /// Polynomial degree M (1..=3).
    #[arg(long)]
    order: Option<String>,
    #[arg(long)]
    flux: Option<String>,
    #[arg(long)]
    recon: Option<String>,
    #[arg(long)]
    mesh_velocity: Option<String>,
    /// Cells across the domain, or a mesh file.
    #[arg(long)]
    mesh: Option<String>,
    #[arg(long)]
    cfl: Option<String>,
    #[arg(long)]
    t_end: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    threads: Option<String>,
    #[arg(long)]
    output_every: Option<String>,
    /// Compare against a 1D reference with this many cells.
    #[arg(long)]
    reference_cells: Option<String>,
}

fn config(args: &RunArgs) -> aleweno::Result<RunConfig> {
    let path = Path::new(&args.case);
    let mut c = if path.is_file() {
        RunConfig::load(path)?
    } else {
        RunConfig {
            case: args.case.clone(),
            ..RunConfig::default()
        }
    };
    let overrides = [
        ("order", &args.order),
        ("flux", &args.flux),
        ("recon", &args.recon),
        ("mesh-velocity", &args.mesh_velocity),
        ("mesh", &args.mesh),
        ("cfl", &args.cfl),
        ("t-end", &args.t_end),
        ("out", &args.out),
        ("threads", &args.threads),
        ("output-every", &args.output_every),
        ("reference-cells", &args.reference_cells),
    ];
    for (k, v) in overrides {
        if let Some(v) = v {
            c.set(k, v)?;
        }
    }
    Ok(c)
}

fn execute(command: Command) -> aleweno::Result<()> {
    match command {
        Command::Run(args) => {
            let c = config(&args)?;
            let s = run(&c)?;
            println!(
                "{}: {} steps to t = {}, {} elements, GCL max {:.2e}, {:.1} s",
                s.case, s.steps, s.time, s.elements, s.gcl_max, s.wall_time
            );
            if let Some(e) = s.l2_error_phi {
                println!("L2(phi_s) = {e:.4e}");
            }
            for (name, d) in s.reference_l1.iter().flatten() {
                println!("L1/range {name} = {d:.4}");
            }
        }
        Command::Convergence {
            order,
            meshes,
            t_end,
            out,
        } => {
            let mut base = RunConfig::default();
            base.set("order", &order.to_string())?;
            let rows = convergence_study(base.degree, &meshes, t_end, &base)?;
            print!("{}", format_convergence_table(base.degree, &rows));
            if let Some(p) = out {
                std::fs::write(&p, convergence_csv(&rows))
                    .map_err(|source| Error::Io { path: p, source })?;
            }
        }
        Command::Reference {
            case,
            cells,
            out,
            commit,
        } => {
            let def = make_case(&case)?;
            let mut p = reference_1d_solve(&def, cells, def.t_end)?;
            p.commit = commit;
            p.write(&out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            match e {
                Error::UnknownCase { .. } => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
