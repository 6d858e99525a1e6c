//! Command-line front end: single eigensolves, convergence studies, mesh
//! export, and matrix dumps.

use clap::{Args, Parser, Subcommand};
use elvib::analysis::StudyConfig;
use elvib::driver::{
    cmd_dump_matrices, cmd_export_mesh, cmd_solve, cmd_study, parse_domain, OutputFormat,
    SolveConfig, StudyCommand,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "elvib",
    about = "Mixed pseudostress-displacement eigensolver for 2D elastic vibration problems",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct MaterialArgs {
    /// Poisson ratio in [0, 0.5]; 0.5 selects the incompressible limit.
    #[arg(long)]
    nu: f64,
    /// Young's modulus.
    #[arg(long, default_value_t = 1.0)]
    e: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the lowest vibration frequencies on one mesh.
    Solve {
        /// square | lshape | disk | path to a mesh file.
        #[arg(long)]
        domain: String,
        #[command(flatten)]
        material: MaterialArgs,
        /// Polynomial order (0, 1 or 2).
        #[arg(long, short, default_value_t = 0)]
        k: usize,
        /// Refinement level (ignored for imported meshes).
        #[arg(long, short = 'N', default_value_t = 8)]
        n: usize,
        /// Number of requested modes.
        #[arg(long, default_value_t = 5)]
        nev: usize,
        /// Spectral shift θ.
        #[arg(long, default_value_t = 0.0)]
        shift: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Comma-separated outputs: json, vtk.
        #[arg(long, default_value = "json", value_delimiter = ',')]
        formats: Vec<String>,
    },
    /// Run a mesh-refinement study with per-mode order fitting.
    Study {
        #[arg(long)]
        domain: String,
        /// Comma-separated Poisson ratios.
        #[arg(long, value_delimiter = ',')]
        nu: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        e: f64,
        /// Comma-separated polynomial orders.
        #[arg(long, short, default_value = "0", value_delimiter = ',')]
        k: Vec<usize>,
        /// Comma-separated refinement levels, ascending, at least three.
        #[arg(long, short = 'N', value_delimiter = ',')]
        n: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        nev: usize,
        #[arg(long, default_value_t = 0.0)]
        shift: f64,
        /// Sobolev regularity exponent for the reference error slope.
        #[arg(long)]
        regularity: Option<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Comma-separated outputs: csv, json.
        #[arg(long, default_value = "csv,json", value_delimiter = ',')]
        formats: Vec<String>,
    },
    /// Generate a mesh and write it in the ASCII exchange format.
    ExportMesh {
        #[arg(long)]
        domain: String,
        #[arg(long, short = 'N')]
        n: usize,
        /// Output file path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Assemble one system and dump A, B, M, c in MatrixMarket format.
    DumpMatrices {
        #[arg(long)]
        domain: String,
        #[command(flatten)]
        material: MaterialArgs,
        #[arg(long, short, default_value_t = 0)]
        k: usize,
        #[arg(long, short = 'N')]
        n: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn parse_formats(raw: &[String]) -> elvib::Result<Vec<OutputFormat>> {
    raw.iter().map(|s| s.parse()).collect()
}

fn run() -> elvib::Result<Vec<PathBuf>> {
    if let Ok(threads) = std::env::var("ELVIB_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            // Ignore failures: the pool may already be running.
            let _ = elvib::configure_thread_pool(n);
        }
    }
    let cli = Cli::parse();
    match cli.command {
        Command::Solve { domain, material, k, n, nev, shift, out, formats } => {
            let config = SolveConfig {
                domain: parse_domain(&domain),
                nu: material.nu,
                e: material.e,
                k,
                n,
                nev,
                shift,
                out_dir: out,
                formats: parse_formats(&formats)?,
            };
            cmd_solve(&config)
        }
        Command::Study {
            domain,
            nu,
            e,
            k,
            n,
            nev,
            shift,
            regularity,
            out,
            formats,
        } => {
            let command = StudyCommand {
                study: StudyConfig {
                    domain: parse_domain(&domain),
                    nu_list: nu,
                    e,
                    k_list: k,
                    n_list: n,
                    nev,
                    shift,
                    regularity_s: regularity,
                },
                out_dir: out,
                formats: parse_formats(&formats)?,
            };
            cmd_study(&command)
        }
        Command::ExportMesh { domain, n, out } => {
            cmd_export_mesh(&parse_domain(&domain), n, &out)?;
            Ok(vec![out])
        }
        Command::DumpMatrices { domain, material, k, n, out } => {
            cmd_dump_matrices(&parse_domain(&domain), material.nu, material.e, k, n, &out)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let record = serde_json::json!({ "error": { "message": e.to_string() } });
            eprintln!("{record}");
            ExitCode::FAILURE
        }
    }
}
