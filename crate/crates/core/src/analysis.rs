//! Mesh-refinement studies: mode matching across levels, convergence-order
//! fitting, extrapolated frequencies, and relative-error tables.
//!
//! Each mode is fitted separately with the three-parameter model
//! `ω_h ≈ ω + C h^α`. The nonlinear parameter α is found by a coarse scan
//! plus golden-section refinement over [0.25, 8]; for each candidate α the
//! inner linear least squares for (ω, C) is solved in closed form. The
//! search is derivative-free and fully deterministic.

use crate::assembly::{assemble_system, build_lame};
use crate::mesh::{generate_mesh, import_mesh, DomainSpec, Mesh};
use crate::par::map_indexed;
use crate::spectral::{cluster_indices, solve_system, EigenSolution};
use crate::{Error, Result};
use serde::Serialize;
use std::sync::Arc;

/// Schema version stamped into every report file.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Levels whose successive frequency difference falls below this relative
/// threshold are dropped from the fit (precision saturation).
pub const SATURATION_REL_DIFF: f64 = 1e-9;

/// Search interval for the convergence order.
pub const ALPHA_RANGE: (f64, f64) = (0.25, 8.0);

/// Configuration of a refinement study.
#[derive(Debug, Clone, Serialize)]
pub struct StudyConfig {
    /// Domain name: square | lshape | disk (imported meshes cannot be
    /// refined, so studies only accept generated domains).
    pub domain: DomainSpec,
    pub nu_list: Vec<f64>,
    pub e: f64,
    pub k_list: Vec<usize>,
    pub n_list: Vec<usize>,
    pub nev: usize,
    pub shift: f64,
    /// Sobolev regularity exponent for the reference error slope
    /// `h^{2 min(s, k+1)}`; `None` treats the solution as smooth.
    pub regularity_s: Option<f64>,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_list.len() < 3 {
            return Err(Error::InvalidInput(format!(
                "a study needs at least 3 refinement levels for the 3-parameter fit, got {}",
                self.n_list.len()
            )));
        }
        if !self.n_list.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidInput("N list must be strictly increasing".into()));
        }
        if self.nu_list.is_empty() || self.k_list.is_empty() {
            return Err(Error::InvalidInput("empty nu or k list".into()));
        }
        for &nu in &self.nu_list {
            if !(0.0..=0.5).contains(&nu) {
                return Err(Error::InvalidInput(format!("nu {nu} outside [0, 1/2]")));
            }
        }
        if self.nev == 0 {
            return Err(Error::InvalidInput("nev must be at least 1".into()));
        }
        if matches!(self.domain, DomainSpec::Imported(_)) {
            return Err(Error::InvalidInput(
                "imported meshes have no refinement parameter; studies need a generated domain"
                    .into(),
            ));
        }
        Ok(())
    }
}

/// Result of fitting `ω_h ≈ ω + C h^α` for one mode.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FitResult {
    /// Fitted order; `None` when saturation left fewer than 3 usable levels.
    pub alpha: Option<f64>,
    pub omega_extr: f64,
    pub c: f64,
    /// Root-mean-square misfit over the used levels.
    pub residual: f64,
    /// False when the level frequencies are not monotone.
    pub monotone: bool,
    /// True when at least one level was dropped by the saturation guard.
    pub saturated: bool,
    pub used_levels: usize,
}

/// Fits the convergence model to one mode's (h, ω) sequence.
///
/// Non-monotone data is fitted anyway and flagged; levels indistinguishable
/// from the previous one (relative difference below `SATURATION_REL_DIFF`)
/// are excluded first.
pub fn fit_order(h: &[f64], omega: &[f64]) -> Result<FitResult> {
    if h.len() != omega.len() {
        return Err(Error::DimensionMismatch(format!(
            "h has {} entries, omega has {}",
            h.len(),
            omega.len()
        )));
    }
    if h.len() < 3 {
        return Err(Error::InvalidInput("fit needs at least 3 levels".into()));
    }

    // Saturation guard: drop levels that no longer move.
    let mut hs = vec![h[0]];
    let mut ws = vec![omega[0]];
    let mut saturated = false;
    for i in 1..h.len() {
        if (omega[i] - omega[i - 1]).abs() < SATURATION_REL_DIFF * omega[i].abs() {
            saturated = true;
            continue;
        }
        hs.push(h[i]);
        ws.push(omega[i]);
    }

    let monotone = ws.windows(2).all(|w| w[1] < w[0]) || ws.windows(2).all(|w| w[1] > w[0]);

    if hs.len() < 3 {
        // Frequencies are converged to working precision; report the finest
        // value instead of a meaningless exponent.
        return Ok(FitResult {
            alpha: None,
            omega_extr: *omega.last().unwrap(),
            c: 0.0,
            residual: 0.0,
            monotone,
            saturated: true,
            used_levels: hs.len(),
        });
    }

    let sse = |alpha: f64| -> (f64, f64, f64) {
        // Closed-form least squares for (ω, C) at fixed α.
        let n = hs.len() as f64;
        let mut s12 = 0.0;
        let mut s22 = 0.0;
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for (hi, wi) in hs.iter().zip(&ws) {
            let p = hi.powf(alpha);
            s12 += p;
            s22 += p * p;
            b1 += wi;
            b2 += wi * p;
        }
        let det = n * s22 - s12 * s12;
        let (omega0, c) = if det.abs() > 1e-300 {
            ((b1 * s22 - b2 * s12) / det, (n * b2 - b1 * s12) / det)
        } else {
            (b1 / n, 0.0)
        };
        let mut err = 0.0;
        for (hi, wi) in hs.iter().zip(&ws) {
            let r = wi - omega0 - c * hi.powf(alpha);
            err += r * r;
        }
        (err, omega0, c)
    };

    // Coarse scan, then golden-section refinement in the best bracket.
    let (lo, hi_a) = ALPHA_RANGE;
    let grid = 156;
    let mut best_alpha = lo;
    let mut best_err = f64::INFINITY;
    for g in 0..=grid {
        let alpha = lo + (hi_a - lo) * g as f64 / grid as f64;
        let (err, _, _) = sse(alpha);
        if err < best_err {
            best_err = err;
            best_alpha = alpha;
        }
    }
    let step = (hi_a - lo) / grid as f64;
    let mut a = (best_alpha - step).max(lo);
    let mut b = (best_alpha + step).min(hi_a);
    let phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = sse(x1).0;
    let mut f2 = sse(x2).0;
    for _ in 0..120 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = sse(x1).0;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = sse(x2).0;
        }
        if b - a < 1e-10 {
            break;
        }
    }
    let alpha = 0.5 * (a + b);
    let (err, omega_extr, c) = sse(alpha);

    Ok(FitResult {
        alpha: Some(alpha),
        omega_extr,
        c,
        residual: (err / hs.len() as f64).sqrt(),
        monotone,
        saturated,
        used_levels: hs.len(),
    })
}

/// Aligns modes across refinement levels by ascending frequency.
///
/// Sorting canonicalizes the order inside multiplicity clusters, so
/// repeated frequencies stay aligned level to level. Returns
/// `sequences[mode][level]`.
pub fn match_modes(solutions: &[EigenSolution], nev: usize) -> Result<Vec<Vec<f64>>> {
    for (level, sol) in solutions.iter().enumerate() {
        if sol.nev() < nev {
            return Err(Error::InvalidInput(format!(
                "level {level} carries {} modes, matching needs {nev}",
                sol.nev()
            )));
        }
    }
    let mut sequences = vec![vec![0.0; solutions.len()]; nev];
    for (level, sol) in solutions.iter().enumerate() {
        let mut omegas = sol.omegas.clone();
        omegas.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (mode, seq) in sequences.iter_mut().enumerate() {
            seq[level] = omegas[mode];
        }
    }
    Ok(sequences)
}

/// One refinement level of one mode in the report.
#[derive(Debug, Clone, Serialize)]
pub struct LevelEntry {
    pub n: usize,
    pub h: f64,
    pub omega: f64,
    /// `|ω_h − ω_extr| / |ω_extr|`.
    pub rel_err: f64,
    /// Reference slope line `∝ h^{2 min(s, k+1)}` anchored at the coarsest
    /// level.
    pub ref_err: f64,
}

/// Per-mode block of the convergence report.
#[derive(Debug, Clone, Serialize)]
pub struct ModeReport {
    pub nu: f64,
    pub k: usize,
    /// 1-based mode index (ascending frequency).
    pub mode: usize,
    /// Cluster id among the modes of this (ν, k) block.
    pub cluster: usize,
    pub levels: Vec<LevelEntry>,
    pub alpha: Option<f64>,
    pub omega_extr: f64,
    pub fit_residual: f64,
    pub saturated: bool,
    pub monotone: bool,
}

/// Machine-readable study output.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub schema_version: u32,
    pub config: StudyConfig,
    pub modes: Vec<ModeReport>,
}

/// Flattened plot-ready error rows.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorRow {
    pub nu: f64,
    pub k: usize,
    pub mode: usize,
    pub n: usize,
    pub h: f64,
    pub e: f64,
    pub reference: f64,
}

fn build_level_mesh(domain: &DomainSpec, n: usize) -> Result<Arc<Mesh>> {
    match domain {
        DomainSpec::Imported(path) => Ok(Arc::new(import_mesh(path)?)),
        generated => Ok(Arc::new(generate_mesh(generated, n)?)),
    }
}

/// Runs the full pipeline for every (ν, k, N) cell of the study.
///
/// Cells execute in parallel when enabled; the report is reduced in the
/// fixed (ν, k, mode, N) order regardless of scheduling.
pub fn run_study(config: &StudyConfig) -> Result<ConvergenceReport> {
    config.validate()?;
    let cells: Vec<(f64, usize, usize)> = config
        .nu_list
        .iter()
        .flat_map(|&nu| {
            config.k_list.iter().flat_map(move |&k| {
                config.n_list.iter().map(move |&n| (nu, k, n))
            })
        })
        .collect();

    let solved: Vec<Result<(EigenSolution, f64)>> = map_indexed(cells.len(), |i| {
        let (nu, k, n) = cells[i];
        let run = || -> Result<(EigenSolution, f64)> {
            let mesh = build_level_mesh(&config.domain, n)?;
            let h = mesh.h;
            let material = build_lame(config.e, nu)?;
            let system = assemble_system(mesh, k, material)?;
            let solution = solve_system(&system, config.nev, config.shift)?;
            Ok((solution, h))
        };
        run().map_err(|e| Error::Study { nu, k, n, source: Box::new(e) })
    });

    let mut modes = Vec::new();
    let mut idx = 0;
    for &nu in &config.nu_list {
        for &k in &config.k_list {
            let mut level_solutions = Vec::with_capacity(config.n_list.len());
            let mut hs = Vec::with_capacity(config.n_list.len());
            for _ in &config.n_list {
                match &solved[idx] {
                    Ok((sol, h)) => {
                        level_solutions.push(sol.clone());
                        hs.push(*h);
                    }
                    Err(e) => return Err(e.clone()),
                }
                idx += 1;
            }
            let sequences = match_modes(&level_solutions, config.nev)?;
            let finest: Vec<f64> = sequences.iter().map(|s| *s.last().unwrap()).collect();
            let clusters = cluster_indices(&finest);
            let slope = 2.0 * config
                .regularity_s
                .unwrap_or(f64::INFINITY)
                .min((k + 1) as f64);
            for (mode_idx, seq) in sequences.iter().enumerate() {
                let fit = fit_order(&hs, seq)?;
                let mut levels = Vec::with_capacity(seq.len());
                for (li, (&n, &w)) in config.n_list.iter().zip(seq.iter()).enumerate() {
                    let rel_err = (w - fit.omega_extr).abs() / fit.omega_extr.abs();
                    levels.push(LevelEntry {
                        n,
                        h: hs[li],
                        omega: w,
                        rel_err,
                        ref_err: 0.0, // anchored below once the first rel_err is known
                    });
                }
                let anchor = levels
                    .iter()
                    .find(|l| l.rel_err > 0.0)
                    .map(|l| (l.h, l.rel_err))
                    .unwrap_or((hs[0], 1.0));
                for l in &mut levels {
                    l.ref_err = anchor.1 * (l.h / anchor.0).powf(slope);
                }
                modes.push(ModeReport {
                    nu,
                    k,
                    mode: mode_idx + 1,
                    cluster: clusters[mode_idx],
                    levels,
                    alpha: fit.alpha,
                    omega_extr: fit.omega_extr,
                    fit_residual: fit.residual,
                    saturated: fit.saturated,
                    monotone: fit.monotone,
                });
            }
        }
    }

    Ok(ConvergenceReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config: config.clone(),
        modes,
    })
}

/// Extracts the flattened relative-error table from a fitted report.
pub fn relative_errors(report: &ConvergenceReport) -> Result<Vec<ErrorRow>> {
    let mut rows = Vec::new();
    for m in &report.modes {
        if m.omega_extr == 0.0 {
            return Err(Error::InvalidInput(format!(
                "mode (nu = {}, k = {}, mode = {}) has zero extrapolated frequency",
                m.nu, m.k, m.mode
            )));
        }
        for l in &m.levels {
            rows.push(ErrorRow {
                nu: m.nu,
                k: m.k,
                mode: m.mode,
                n: l.n,
                h: l.h,
                e: l.rel_err,
                reference: l.ref_err,
            });
        }
    }
    Ok(rows)
}

impl ConvergenceReport {
    /// CSV rendering: two comment lines (schema, resolved config) and one
    /// row per (mode, level).
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# schema_version: {}\n", self.schema_version));
        out.push_str(&format!(
            "# config: {}\n",
            serde_json::to_string(&self.config).expect("config serializes")
        ));
        out.push_str("nu,k,mode,N,h,omega,alpha,omega_extr,rel_err\n");
        for m in &self.modes {
            for l in &m.levels {
                let alpha = m
                    .alpha
                    .map(|a| format!("{a:.6}"))
                    .unwrap_or_else(|| "saturated".to_string());
                out.push_str(&format!(
                    "{},{},{},{},{:.8e},{:.8},{},{:.8},{:.8e}\n",
                    m.nu, m.k, m.mode, l.n, l.h, l.omega, alpha, m.omega_extr, l.rel_err
                ));
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The fitted block for one (ν, k); modes ascending.
    pub fn block(&self, nu: f64, k: usize) -> Vec<&ModeReport> {
        self.modes
            .iter()
            .filter(|m| m.nu == nu && m.k == k)
            .collect()
    }
}
