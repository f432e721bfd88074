use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use dscatter::cli::{init_threads, main_with, Overrides, Task};

/// Single-excitation scattering off emitters and separable potentials.
#[derive(Parser, Debug)]
#[command(name = "dscatter", version)]
struct Args {
    task: Task,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    tol_lev: Option<f64>,
    #[arg(long)]
    e_min: Option<f64>,
    #[arg(long)]
    e_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    init_threads();
    let o = Overrides { tol_lev: args.tol_lev, e_min: args.e_min, e_max: args.e_max, points: args.points };
    let code = main_with(args.task, &args.config, args.out.as_deref(), &o);
    ExitCode::from(code as u8)
}
