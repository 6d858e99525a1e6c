//! File-producing front-end operations behind the CLI.
//!
//! Every output embeds the resolved configuration and a schema version,
//! and identical configurations produce byte-identical files.

use crate::analysis::{run_study, StudyConfig, REPORT_SCHEMA_VERSION};
use crate::assembly::{assemble_system, build_lame, dump_matrices, Assembler};
use crate::elements::MAX_ORDER;
use crate::mesh::{generate_mesh, import_mesh, write_mesh, DomainSpec, Mesh};
use crate::spectral::{build_pencil, solve_eigen};
use crate::vtk::{vertex_average_u, write_vtk};
use crate::{Error, Result};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// Output formats a command may emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
    Vtk,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            "vtk" => Ok(OutputFormat::Vtk),
            other => Err(Error::InvalidInput(format!("unknown output format {other:?}"))),
        }
    }
}

/// Parses a domain argument: a builtin name or a mesh-file path.
pub fn parse_domain(s: &str) -> DomainSpec {
    match s {
        "square" => DomainSpec::UnitSquare,
        "lshape" => DomainSpec::LShape,
        "disk" | "circle" => DomainSpec::Disk,
        path => DomainSpec::Imported(PathBuf::from(path)),
    }
}

/// Configuration of a single eigensolve.
#[derive(Debug, Clone, Serialize)]
pub struct SolveConfig {
    pub domain: DomainSpec,
    pub nu: f64,
    pub e: f64,
    pub k: usize,
    pub n: usize,
    pub nev: usize,
    pub shift: f64,
    pub out_dir: PathBuf,
    pub formats: Vec<OutputFormat>,
}

impl SolveConfig {
    /// Checks every precondition of the downstream operations before any
    /// compute starts.
    pub fn validate(&self) -> Result<()> {
        build_lame(self.e, self.nu)?;
        if self.k > MAX_ORDER {
            return Err(Error::InvalidInput(format!("unsupported order k = {}", self.k)));
        }
        if self.n == 0 && !matches!(self.domain, DomainSpec::Imported(_)) {
            return Err(Error::InvalidInput("refinement parameter N must be >= 1".into()));
        }
        if self.nev == 0 {
            return Err(Error::InvalidInput("nev must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Serialize)]
struct ModeRecord {
    mode: usize,
    cluster: usize,
    kappa: f64,
    omega: f64,
    residual: f64,
    multiplier: f64,
}

#[derive(Debug, Serialize)]
struct SolveRecord<'c> {
    schema_version: u32,
    config: &'c SolveConfig,
    limit_regime: bool,
    h: f64,
    n_rho: usize,
    n_u: usize,
    modes: Vec<ModeRecord>,
}

fn load_mesh(domain: &DomainSpec, n: usize) -> Result<Mesh> {
    match domain {
        DomainSpec::Imported(path) => import_mesh(path),
        generated => generate_mesh(generated, n),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))
}

/// Runs one eigensolve and writes the requested files; returns their paths.
pub fn cmd_solve(config: &SolveConfig) -> Result<Vec<PathBuf>> {
    config.validate()?;
    ensure_dir(&config.out_dir)?;
    let mesh = Arc::new(load_mesh(&config.domain, config.n)?);
    let material = build_lame(config.e, config.nu)?;
    let system = assemble_system(mesh.clone(), config.k, material)?;
    let pencil = build_pencil(&system, config.nev, config.shift)?;
    let solution = solve_eigen(&pencil)?;

    let mut written = Vec::new();
    if config.formats.contains(&OutputFormat::Json) {
        let record = SolveRecord {
            schema_version: REPORT_SCHEMA_VERSION,
            config,
            limit_regime: material.is_limit(),
            h: mesh.h,
            n_rho: system.dofs.n_rho,
            n_u: system.dofs.n_u,
            modes: (0..solution.nev())
                .map(|i| ModeRecord {
                    mode: i + 1,
                    cluster: solution.clusters[i],
                    kappa: solution.kappas[i],
                    omega: solution.omegas[i],
                    residual: solution.residuals[i],
                    multiplier: solution.multipliers[i],
                })
                .collect(),
        };
        let path = config.out_dir.join("solve.json");
        std::fs::write(&path, serde_json::to_string_pretty(&record).expect("serializes"))
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        written.push(path);
    }
    if config.formats.contains(&OutputFormat::Vtk) {
        let asm = Assembler::new(&mesh, config.k)?;
        for i in 0..solution.nev() {
            let field = vertex_average_u(&asm, &solution.u[i]);
            let path = config.out_dir.join(format!("mode_{}.vtk", i + 1));
            write_vtk(&mesh, &format!("u_mode_{}", i + 1), &field, &path)?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Study command configuration: the analysis config plus output choices.
#[derive(Debug, Clone, Serialize)]
pub struct StudyCommand {
    pub study: StudyConfig,
    pub out_dir: PathBuf,
    pub formats: Vec<OutputFormat>,
}

/// Runs a convergence study and writes CSV/JSON reports.
pub fn cmd_study(config: &StudyCommand) -> Result<Vec<PathBuf>> {
    config.study.validate()?;
    ensure_dir(&config.out_dir)?;
    let report = run_study(&config.study)?;
    let mut written = Vec::new();
    if config.formats.contains(&OutputFormat::Csv) {
        let path = config.out_dir.join("study.csv");
        std::fs::write(&path, report.to_csv())
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        written.push(path);
    }
    if config.formats.contains(&OutputFormat::Json) {
        let path = config.out_dir.join("study.json");
        std::fs::write(&path, report.to_json())
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        written.push(path);
    }
    Ok(written)
}

/// Generates a mesh and writes it in the ASCII exchange format.
pub fn cmd_export_mesh(domain: &DomainSpec, n: usize, path: &Path) -> Result<()> {
    let mesh = load_mesh(domain, n)?;
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    write_mesh(&mesh, path)
}

/// Assembles one system and dumps its blocks in MatrixMarket format.
pub fn cmd_dump_matrices(
    domain: &DomainSpec,
    nu: f64,
    e: f64,
    k: usize,
    n: usize,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let mesh = Arc::new(load_mesh(domain, n)?);
    let material = build_lame(e, nu)?;
    let system = assemble_system(mesh, k, material)?;
    dump_matrices(&system, out_dir)?;
    Ok(["a.mtx", "b.mtx", "m.mtx", "c.mtx"]
        .iter()
        .map(|f| out_dir.join(f))
        .collect())
}
