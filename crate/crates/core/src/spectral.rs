//! The constrained saddle-point eigenvalue pencil and its shift-invert
//! Krylov solver.
//!
//! The discrete problem is `K z = κ M̂ z` with the bordered blocks
//!
//! ```text
//!     K = [ A   Bᵀ  c ]        M̂ = [ 0   0   0 ]
//!         [ B   0   0 ]            [ 0  −M   0 ]
//!         [ cᵀ  0   0 ]            [ 0   0   0 ]
//! ```
//!
//! where the single bordered row enforces the zero-mean-trace constraint
//! through a Lagrange multiplier. Applying `(K − θM̂)⁻¹ M̂` to a vector only
//! reads its displacement block, and the resulting map `u ↦ û` is
//! self-adjoint in the M-inner product. The Krylov iteration therefore runs
//! as a Lanczos recurrence with full reorthogonalization and thick
//! restarts; Ritz values ν convert to pencil eigenvalues κ = θ + 1/ν, and
//! Ritz values near zero are the numerically infinite eigenvalues of the
//! singular pencil, which are filtered out.

use crate::assembly::{assemble_system, build_lame, AssembledSystem};
use crate::mesh::Mesh;
use crate::rng::SplitMix64;
use crate::sparse::{Factorization, SparseMatrix, Triplets};
use crate::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use std::sync::Arc;

/// Krylov iteration parameters. `subspace = 0` selects an automatic size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovParams {
    pub subspace: usize,
    /// Relative residual tolerance on Ritz pairs (scaled by the largest
    /// Ritz value).
    pub tol: f64,
    pub max_restarts: usize,
    /// Seed of the deterministic start vector.
    pub seed: u64,
    /// Ritz values below `filter_tol * max ν` count as infinite κ.
    pub filter_tol: f64,
}

impl Default for KrylovParams {
    fn default() -> Self {
        KrylovParams {
            subspace: 0,
            tol: 1e-12,
            max_restarts: 60,
            seed: 0x00C0_FFEE,
            filter_tol: 1e-10,
        }
    }
}

/// The bordered generalized eigenvalue problem.
pub struct PencilProblem {
    /// Bordered stiffness block, symmetric.
    pub k_mat: SparseMatrix,
    /// `diag(0, −M, 0)` at pencil size.
    pub m_hat: SparseMatrix,
    /// Displacement mass block alone (defines the Krylov inner product).
    pub m_block: SparseMatrix,
    pub n_rho: usize,
    pub n_u: usize,
    pub nev: usize,
    pub shift: f64,
    pub params: KrylovParams,
}

impl PencilProblem {
    pub fn size(&self) -> usize {
        self.n_rho + self.n_u + 1
    }
}

/// Eigenvalues and eigenvectors of the pencil, ascending in κ.
#[derive(Debug, Clone)]
pub struct EigenSolution {
    pub kappas: Vec<f64>,
    /// Vibration frequencies ω = √κ.
    pub omegas: Vec<f64>,
    pub rho: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    pub multipliers: Vec<f64>,
    /// `‖K z − κ M̂ z‖₂ / ‖z‖₂` per accepted pair.
    pub residuals: Vec<f64>,
    /// Cluster index per mode; repeated κ (relative gap < 1e−6) share one.
    pub clusters: Vec<usize>,
}

impl EigenSolution {
    pub fn nev(&self) -> usize {
        self.kappas.len()
    }
}

/// Relative gap below which eigenvalues are reported as one multiplicity
/// cluster.
pub const CLUSTER_REL_GAP: f64 = 1e-6;

/// Assembles the bordered pencil from the system blocks.
pub fn build_pencil(system: &AssembledSystem, nev: usize, shift: f64) -> Result<PencilProblem> {
    let n_rho = system.dofs.n_rho;
    let n_u = system.dofs.n_u;
    if system.a.nrows() != n_rho
        || system.b.nrows() != n_u
        || system.b.ncols() != n_rho
        || system.m.nrows() != n_u
        || system.c.len() != n_rho
    {
        return Err(Error::DimensionMismatch(format!(
            "blocks A {}x{}, B {}x{}, M {}x{}, c {} vs n_rho {n_rho}, n_u {n_u}",
            system.a.nrows(),
            system.a.ncols(),
            system.b.nrows(),
            system.b.ncols(),
            system.m.nrows(),
            system.m.ncols(),
            system.c.len(),
        )));
    }
    if nev == 0 {
        return Err(Error::InvalidInput("nev must be at least 1".into()));
    }
    let n = n_rho + n_u + 1;
    let mut kt = Triplets::new(n, n);
    for i in 0..n_rho {
        for (j, v) in system.a.row(i) {
            kt.push(i, j, v);
        }
    }
    for i in 0..n_u {
        for (j, v) in system.b.row(i) {
            kt.push(n_rho + i, j, v);
            kt.push(j, n_rho + i, v);
        }
    }
    for (i, &v) in system.c.iter().enumerate() {
        if v != 0.0 {
            kt.push(i, n - 1, v);
            kt.push(n - 1, i, v);
        }
    }
    let k_mat = SparseMatrix::from_triplets(&kt);

    let mut mt = Triplets::new(n, n);
    for i in 0..n_u {
        for (j, v) in system.m.row(i) {
            mt.push(n_rho + i, n_rho + j, -v);
        }
    }
    let m_hat = SparseMatrix::from_triplets(&mt);

    Ok(PencilProblem {
        k_mat,
        m_hat,
        m_block: system.m.clone(),
        n_rho,
        n_u,
        nev,
        shift,
        params: KrylovParams::default(),
    })
}

/// Solves the pencil for the `nev` eigenvalues closest to (and above) the
/// shift.
pub fn solve_eigen(problem: &PencilProblem) -> Result<EigenSolution> {
    let solver = BorderedSolver::new(problem)?;
    let lanczos = mass_lanczos(problem, &solver)?;
    assemble_solution(problem, &solver, lanczos)
}

/// Limit-regime convenience: assembles with λ = ∞ and solves.
pub fn solve_limit_eigen(
    mesh: Arc<Mesh>,
    k: usize,
    mu: f64,
    nev: usize,
) -> Result<EigenSolution> {
    if !(mu > 0.0) {
        return Err(Error::InvalidInput(format!("shear modulus must be positive, got {mu}")));
    }
    // ν = 1/2 fixes E = 3μ.
    let material = build_lame(3.0 * mu, 0.5)?;
    debug_assert!(material.is_limit());
    let system = assemble_system(mesh, k, material)?;
    let pencil = build_pencil(&system, nev, 0.0)?;
    solve_eigen(&pencil)
}

/// Full driver: assemble, build the pencil at θ = 0 and solve.
pub fn solve_system(system: &AssembledSystem, nev: usize, shift: f64) -> Result<EigenSolution> {
    let pencil = build_pencil(system, nev, shift)?;
    solve_eigen(&pencil)
}

/// Direct solver for the shifted bordered matrix `K − θ M̂`.
///
/// Factoring the bordered matrix as-is is hopeless: the constraint column
/// couples every trace-carrying DOF, which defeats fill-reducing orderings.
/// Instead the unbordered saddle block is factored — with one diagonal
/// entry bumped so the factorization also exists in the limit regime, where
/// the block alone is singular — and the border plus the bump are undone
/// exactly through a 2-by-2 Schur system per solve, followed by one step of
/// iterative refinement on the full bordered system.
pub struct BorderedSolver {
    inner: Factorization,
    /// Bordered matrix (for residuals and refinement).
    k_shift: SparseMatrix,
    /// Border column without the multiplier entry.
    c: Vec<f64>,
    /// inner⁻¹ c.
    y_c: Vec<f64>,
    /// inner⁻¹ e_p.
    y_e: Vec<f64>,
    /// Bumped diagonal index and value.
    p: usize,
    s: f64,
    n: usize,
}

impl BorderedSolver {
    pub fn new(problem: &PencilProblem) -> Result<Self> {
        let n = problem.size();
        let n0 = n - 1;
        let k_shift = shifted_matrix(problem);
        let mut c = vec![0.0; n0];
        for (j, v) in k_shift.row(n - 1) {
            if j < n0 {
                c[j] = v;
            }
        }
        // Bump the DOF with the strongest trace coupling; the limit-regime
        // kernel is the identity-tensor direction, which such a DOF carries.
        let p = c
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap().then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .unwrap_or(0);
        if c[p] == 0.0 {
            return Err(Error::FactorizationFailed(
                "trace-constraint vector is zero; bordered system is singular".into(),
            ));
        }
        let scale = k_shift.max_abs();

        let mut attempt_errors = Vec::new();
        for factor in [1.0, 4.0, 0.25] {
            let s = scale * factor;
            let mut t = Triplets::new(n0, n0);
            for i in 0..n0 {
                for (j, v) in k_shift.row(i) {
                    if j < n0 {
                        t.push(i, j, v);
                    }
                }
            }
            t.push(p, p, s);
            let k0m = SparseMatrix::from_triplets(&t);
            let inner = match Factorization::new(&k0m) {
                Ok(f) => f,
                Err(e) => {
                    attempt_errors.push(format!("s = {s:.3e}: {e}"));
                    continue;
                }
            };
            let y_c = inner.solve(&c);
            let mut e_p = vec![0.0; n0];
            e_p[p] = 1.0;
            let y_e = inner.solve(&e_p);
            let solver = BorderedSolver { inner, k_shift: k_shift.clone(), c: c.clone(), y_c, y_e, p, s, n };
            match solver.probe() {
                Ok(()) => return Ok(solver),
                Err(e) => attempt_errors.push(format!("s = {s:.3e}: {e}")),
            }
        }
        Err(Error::FactorizationFailed(format!(
            "bordered solve failed at shift θ = {}; perturbing θ may help ({})",
            problem.shift,
            attempt_errors.join("; ")
        )))
    }

    /// Solves the bordered system for a full-length right-hand side.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let z = self.solve_once(b);
        // One refinement step absorbs the mild error amplification of the
        // bordered elimination.
        let r = self.residual_vec(b, &z);
        let dz = self.solve_once(&r);
        let mut out = z;
        for (o, d) in out.iter_mut().zip(&dz) {
            *o += d;
        }
        out
    }

    fn solve_once(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let n0 = self.n - 1;
        let g = b[n0];
        let y_b = self.inner.solve(&b[..n0]);
        let dot = |a: &[f64], bb: &[f64]| -> f64 { a.iter().zip(bb).map(|(x, y)| x * y).sum() };
        // Unknowns (t, m): t undoes the diagonal bump, m is the multiplier.
        let a11 = self.s * dot(&self.c, &self.y_e);
        let a12 = -dot(&self.c, &self.y_c);
        let a21 = self.s * self.y_e[self.p] - 1.0;
        let a22 = -self.y_c[self.p];
        let r1 = g - dot(&self.c, &y_b);
        let r2 = -y_b[self.p];
        let det = a11 * a22 - a12 * a21;
        let t = (r1 * a22 - r2 * a12) / det;
        let m = (a11 * r2 - a21 * r1) / det;
        let mut z = vec![0.0; self.n];
        for i in 0..n0 {
            z[i] = y_b[i] + self.s * t * self.y_e[i] - m * self.y_c[i];
        }
        z[n0] = m;
        z
    }

    fn residual_vec(&self, b: &[f64], z: &[f64]) -> Vec<f64> {
        let kz = self.k_shift.mul_vec(z);
        b.iter().zip(&kz).map(|(bb, k)| bb - k).collect()
    }

    /// Verifies the whole bordered solve on a deterministic probe; LU can
    /// "succeed" on a numerically singular matrix, which would poison the
    /// iteration.
    fn probe(&self) -> Result<()> {
        let mut rng = SplitMix64::new(0xFACF_ACED);
        let mut w = vec![0.0; self.n];
        rng.fill_symmetric(&mut w);
        let b = self.k_shift.mul_vec(&w);
        let x = self.solve(&b);
        let r: f64 = self
            .residual_vec(&b, &x)
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        let bn: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !r.is_finite() || r > 1e-8 * bn.max(1e-300) {
            return Err(Error::FactorizationFailed(format!(
                "probe residual {:.3e} after refinement",
                r / bn.max(1e-300)
            )));
        }
        Ok(())
    }
}

fn shifted_matrix(problem: &PencilProblem) -> SparseMatrix {
    if problem.shift == 0.0 {
        return problem.k_mat.clone();
    }
    // K − θ M̂ adds +θ M to the displacement block.
    let n = problem.size();
    let mut t = Triplets::new(n, n);
    for i in 0..n {
        for (j, v) in problem.k_mat.row(i) {
            t.push(i, j, v);
        }
    }
    for i in 0..problem.n_u {
        for (j, v) in problem.m_block.row(i) {
            t.push(problem.n_rho + i, problem.n_rho + j, problem.shift * v);
        }
    }
    SparseMatrix::from_triplets(&t)
}

struct LanczosOutput {
    /// Ritz values ν, descending.
    ritz: Vec<f64>,
    /// M-orthonormal Ritz vectors on the displacement space.
    vectors: Vec<Vec<f64>>,
    restarts: usize,
}

/// Thick-restart Lanczos on the shift-inverted operator in the M-inner
/// product.
fn mass_lanczos(problem: &PencilProblem, fact: &BorderedSolver) -> Result<LanczosOutput> {
    let n_u = problem.n_u;
    let n_rho = problem.n_rho;
    let n = problem.size();
    let nev = problem.nev;
    let p = &problem.params;
    let m_block = &problem.m_block;

    let apply = |v: &[f64]| -> Vec<f64> {
        let mv = m_block.mul_vec(v);
        let mut rhs = vec![0.0; n];
        rhs[n_rho..n_rho + n_u].iter_mut().zip(&mv).for_each(|(r, &x)| *r = -x);
        let sol = fact.solve(&rhs);
        sol[n_rho..n_rho + n_u].to_vec()
    };
    let m_dot = |a: &[f64], b: &[f64]| -> f64 {
        let mb = m_block.mul_vec(b);
        a.iter().zip(&mb).map(|(x, y)| x * y).sum()
    };

    let max_dim = if p.subspace > 0 {
        p.subspace.max(nev + 2)
    } else {
        (2 * nev + 20).max(40)
    }
    .min(n_u);
    if max_dim < nev {
        return Err(Error::NotEnoughModes { wanted: nev, available: n_u });
    }

    let mut rng = SplitMix64::new(p.seed);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_dim + 1);
    // Locked (thick-restart) part: values on the diagonal plus a coupling
    // column to the first new Lanczos vector.
    let mut locked_vals: Vec<f64> = Vec::new();
    let mut locked_coup: Vec<f64> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();

    // Deterministic start vector, M-normalized.
    let mut v0 = vec![0.0; n_u];
    rng.fill_symmetric(&mut v0);
    normalize_m(&mut v0, &m_dot)?;
    basis.push(v0);

    let mut restarts = 0usize;
    loop {
        // Expand the Krylov basis up to max_dim vectors.
        while locked_vals.len() + alphas.len() < max_dim {
            let j = basis.len() - 1;
            let v = basis[j].clone();
            let mut w = apply(&v);
            let alpha = m_dot(&w, &v);
            axpy(&mut w, -alpha, &v);
            if alphas.is_empty() {
                // First step after a restart couples to every locked vector.
                for (i, s) in locked_coup.iter().enumerate() {
                    axpy(&mut w, -s, &basis[i]);
                }
            } else {
                let beta_prev = *betas.last().unwrap();
                axpy(&mut w, -beta_prev, &basis[j - 1]);
            }
            // Full reorthogonalization, two passes.
            for _ in 0..2 {
                for b in &basis {
                    let proj = m_dot(&w, b);
                    axpy(&mut w, -proj, b);
                }
            }
            alphas.push(alpha);
            let beta = m_dot(&w, &w).max(0.0).sqrt();
            if beta < 1e-14 {
                // Invariant subspace: continue with a fresh direction.
                let mut fresh = vec![0.0; n_u];
                rng.fill_symmetric(&mut fresh);
                for _ in 0..2 {
                    for b in &basis {
                        let proj = m_dot(&fresh, b);
                        axpy(&mut fresh, -proj, b);
                    }
                }
                if normalize_m(&mut fresh, &m_dot).is_err() {
                    // The whole space is exhausted.
                    betas.push(0.0);
                    basis.push(vec![0.0; n_u]);
                    break;
                }
                betas.push(0.0);
                basis.push(fresh);
            } else {
                scale(&mut w, 1.0 / beta);
                betas.push(beta);
                basis.push(w);
            }
        }

        // Rayleigh-Ritz on the arrowhead + tridiagonal projected matrix.
        let nl = locked_vals.len();
        let dim = nl + alphas.len();
        let mut h = DMatrix::zeros(dim, dim);
        for (i, &t) in locked_vals.iter().enumerate() {
            h[(i, i)] = t;
            h[(i, nl)] = locked_coup[i];
            h[(nl, i)] = locked_coup[i];
        }
        for (t, &a) in alphas.iter().enumerate() {
            h[(nl + t, nl + t)] = a;
            if t + 1 < alphas.len() {
                h[(nl + t, nl + t + 1)] = betas[t];
                h[(nl + t + 1, nl + t)] = betas[t];
            }
        }
        let eig = SymmetricEigen::new(h);
        let beta_last = *betas.last().unwrap_or(&0.0);

        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .partial_cmp(&eig.eigenvalues[a])
                .unwrap()
                .then(a.cmp(&b))
        });

        let scale_ritz = order
            .first()
            .map(|&i| eig.eigenvalues[i].abs())
            .unwrap_or(1.0)
            .max(1e-300);
        let res_of = |col: usize| -> f64 {
            (beta_last * eig.eigenvectors[(dim - 1, col)]).abs()
        };

        // Count wanted pairs: the nev largest Ritz values above the
        // infinite-eigenvalue filter.
        let wanted: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&i| eig.eigenvalues[i] > problem.params.filter_tol * scale_ritz)
            .take(nev)
            .collect();
        let tol_abs = p.tol * scale_ritz;
        let all_converged =
            wanted.len() == nev && wanted.iter().all(|&i| res_of(i) <= tol_abs);
        let exhausted = dim >= n_u;

        if all_converged || restarts >= p.max_restarts || exhausted {
            if !all_converged && !exhausted {
                return Err(Error::NoConvergence {
                    wanted: nev,
                    converged: wanted.iter().filter(|&&i| res_of(i) <= tol_abs).count(),
                    restarts,
                });
            }
            if wanted.len() < nev {
                return Err(Error::NotEnoughModes { wanted: nev, available: wanted.len() });
            }
            let mut ritz = Vec::with_capacity(nev);
            let mut vectors = Vec::with_capacity(nev);
            for &i in &wanted {
                ritz.push(eig.eigenvalues[i]);
                let mut u = vec![0.0; n_u];
                for (bi, b) in basis.iter().take(dim).enumerate() {
                    axpy(&mut u, eig.eigenvectors[(bi, i)], b);
                }
                vectors.push(u);
            }
            return Ok(LanczosOutput { ritz, vectors, restarts });
        }

        // Thick restart: keep the best `keep` Ritz pairs plus the trailing
        // Lanczos vector.
        let keep = (2 * nev + 5).min(dim - 1).max(nev);
        let kept: Vec<usize> = order.iter().copied().take(keep).collect();
        let mut new_basis: Vec<Vec<f64>> = Vec::with_capacity(max_dim + 1);
        let mut new_vals = Vec::with_capacity(keep);
        let mut new_coup = Vec::with_capacity(keep);
        for &i in &kept {
            let mut u = vec![0.0; n_u];
            for (bi, b) in basis.iter().take(dim).enumerate() {
                axpy(&mut u, eig.eigenvectors[(bi, i)], b);
            }
            new_vals.push(eig.eigenvalues[i]);
            new_coup.push(beta_last * eig.eigenvectors[(dim - 1, i)]);
            new_basis.push(u);
        }
        new_basis.push(basis[dim].clone());
        basis = new_basis;
        locked_vals = new_vals;
        locked_coup = new_coup;
        alphas = Vec::new();
        betas = Vec::new();
        restarts += 1;
    }
}

fn assemble_solution(
    problem: &PencilProblem,
    fact: &BorderedSolver,
    lanczos: LanczosOutput,
) -> Result<EigenSolution> {
    let n_rho = problem.n_rho;
    let n_u = problem.n_u;
    let n = problem.size();

    let mut modes: Vec<(f64, Vec<f64>, Vec<f64>, f64, f64)> = Vec::with_capacity(lanczos.ritz.len());
    for (i, &nu) in lanczos.ritz.iter().enumerate() {
        let kappa = problem.shift + 1.0 / nu;
        let u = &lanczos.vectors[i];
        // One extra solve reconstructs the pseudostress and multiplier
        // components: (K − θM̂)(ρ̂, û, m̂) = (0, −Mu, 0) and z = (ρ̂/ν, u, m̂/ν).
        let mv = problem.m_block.mul_vec(u);
        let mut rhs = vec![0.0; n];
        rhs[n_rho..n_rho + n_u].iter_mut().zip(&mv).for_each(|(r, &x)| *r = -x);
        let sol = fact.solve(&rhs);
        let rho: Vec<f64> = sol[..n_rho].iter().map(|&x| x / nu).collect();
        let mult = sol[n - 1] / nu;

        // Pencil residual of the assembled eigenvector.
        let mut z = vec![0.0; n];
        z[..n_rho].copy_from_slice(&rho);
        z[n_rho..n_rho + n_u].copy_from_slice(u);
        z[n - 1] = mult;
        let kz = problem.k_mat.mul_vec(&z);
        let mz = problem.m_hat.mul_vec(&z);
        let res2: f64 = kz
            .iter()
            .zip(&mz)
            .map(|(a, b)| (a - kappa * b) * (a - kappa * b))
            .sum();
        let znorm: f64 = z.iter().map(|x| x * x).sum::<f64>().sqrt();
        modes.push((kappa, rho, u.clone(), mult, res2.sqrt() / znorm));
    }

    // Ascending κ; the Lanczos ordering already is, but make it explicit.
    let mut order: Vec<usize> = (0..modes.len()).collect();
    order.sort_by(|&a, &b| modes[a].0.partial_cmp(&modes[b].0).unwrap().then(a.cmp(&b)));

    let mut out = EigenSolution {
        kappas: Vec::new(),
        omegas: Vec::new(),
        rho: Vec::new(),
        u: Vec::new(),
        multipliers: Vec::new(),
        residuals: Vec::new(),
        clusters: Vec::new(),
    };
    for &i in &order {
        let (kappa, rho, u, mult, res) = &modes[i];
        if *kappa <= 0.0 {
            return Err(Error::NoConvergence {
                wanted: problem.nev,
                converged: out.kappas.len(),
                restarts: lanczos.restarts,
            });
        }
        out.kappas.push(*kappa);
        out.omegas.push(kappa.sqrt());
        out.rho.push(rho.clone());
        out.u.push(u.clone());
        out.multipliers.push(*mult);
        out.residuals.push(*res);
    }
    out.clusters = cluster_indices(&out.omegas);
    Ok(out)
}

/// Assigns a cluster id per (sorted) frequency; repeated frequencies within
/// the relative gap share an id.
pub fn cluster_indices(omegas: &[f64]) -> Vec<usize> {
    let mut clusters = Vec::with_capacity(omegas.len());
    let mut current = 0usize;
    for i in 0..omegas.len() {
        if i > 0 && (omegas[i] - omegas[i - 1]).abs() > CLUSTER_REL_GAP * omegas[i].abs() {
            current += 1;
        }
        clusters.push(current);
    }
    clusters
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    if a == 0.0 {
        return;
    }
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn scale(v: &mut [f64], s: f64) {
    for x in v {
        *x *= s;
    }
}

fn normalize_m(v: &mut [f64], m_dot: &dyn Fn(&[f64], &[f64]) -> f64) -> Result<()> {
    let norm = m_dot(v, v).max(0.0).sqrt();
    if norm < 1e-300 {
        return Err(Error::InvalidInput("zero vector cannot be normalized".into()));
    }
    scale(v, 1.0 / norm);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_mesh, DomainSpec};

    fn small_system(n: usize, k: usize, nu: f64) -> AssembledSystem {
        let mesh = Arc::new(generate_mesh(&DomainSpec::UnitSquare, n).unwrap());
        let material = build_lame(1.0, nu).unwrap();
        assemble_system(mesh, k, material).unwrap()
    }

    #[test]
    fn pencil_dimensions_and_symmetry() {
        let sys = small_system(2, 0, 0.35);
        let p = build_pencil(&sys, 4, 0.0).unwrap();
        assert_eq!(p.k_mat.nrows(), sys.dofs.n_rho + sys.dofs.n_u + 1);
        assert_eq!(p.k_mat.symmetry_error(), 0.0);
        assert_eq!(p.m_hat.symmetry_error(), 0.0);
    }

    #[test]
    fn zero_shift_factorization_succeeds() {
        let sys = small_system(2, 0, 0.35);
        let p = build_pencil(&sys, 4, 0.0).unwrap();
        BorderedSolver::new(&p).unwrap();
    }

    #[test]
    fn limit_pencil_factorizes_at_zero_shift() {
        // A is singular at λ = ∞; the bordered constraint restores
        // invertibility of K.
        let mesh = Arc::new(generate_mesh(&DomainSpec::UnitSquare, 2).unwrap());
        let material = build_lame(1.0, 0.5).unwrap();
        let sys = assemble_system(mesh, 0, material).unwrap();
        let p = build_pencil(&sys, 4, 0.0).unwrap();
        let solver = BorderedSolver::new(&p).unwrap();
        // The bordered solve reproduces K z = b to high accuracy.
        let mut rng = crate::rng::SplitMix64::new(7);
        let mut w = vec![0.0; p.size()];
        rng.fill_symmetric(&mut w);
        let b = p.k_mat.mul_vec(&w);
        let z = solver.solve(&b);
        let r = p.k_mat.mul_vec(&z);
        let err: f64 = r.iter().zip(&b).map(|(a, bb)| (a - bb) * (a - bb)).sum::<f64>().sqrt();
        let bn: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(err <= 1e-10 * bn, "relative residual {"{"}:.3e{"}"}", err / bn);
    }

    #[test]
    fn eigenvalues_positive_and_constraints_satisfied() {
        let sys = small_system(3, 0, 0.35);
        let p = build_pencil(&sys, 5, 0.0).unwrap();
        let sol = solve_eigen(&p).unwrap();
        assert_eq!(sol.nev(), 5);
        for i in 0..5 {
            assert!(sol.kappas[i] > 0.0);
            if i > 0 {
                assert!(sol.kappas[i] >= sol.kappas[i - 1]);
            }
            // Multiplier vanishes and the trace constraint holds.
            let znorm: f64 = sol.rho[i]
                .iter()
                .chain(sol.u[i].iter())
                .map(|x| x * x)
                .sum::<f64>()
                .sqrt();
            assert!(sol.multipliers[i].abs() <= 1e-8 * znorm);
            let ctr: f64 = sys.c.iter().zip(&sol.rho[i]).map(|(a, b)| a * b).sum();
            let rnorm: f64 = sol.rho[i].iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(ctr.abs() <= 1e-8 * rnorm, "mode {i}: cᵀρ = {ctr:e}");
        }
    }

    #[test]
    fn eigenvectors_are_mass_orthonormal() {
        let sys = small_system(3, 0, 0.4);
        let p = build_pencil(&sys, 4, 0.0).unwrap();
        let sol = solve_eigen(&p).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let mu = sys.m.mul_vec(&sol.u[j]);
                let dot: f64 = sol.u[i].iter().zip(&mu).map(|(a, b)| a * b).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-8, "({i},{j}): {dot}");
            }
        }
    }

    #[test]
    fn residual_bound_holds() {
        let sys = small_system(3, 0, 0.35);
        let p = build_pencil(&sys, 4, 0.0).unwrap();
        let sol = solve_eigen(&p).unwrap();
        let bound = 1e-8 * p.k_mat.frobenius_norm() / p.size() as f64;
        for (i, r) in sol.residuals.iter().enumerate() {
            assert!(*r <= bound, "mode {i}: residual {r:e} > {bound:e}");
        }
    }

    #[test]
    fn determinism_bitwise() {
        let sys = small_system(3, 0, 0.35);
        let p = build_pencil(&sys, 4, 0.0).unwrap();
        let s1 = solve_eigen(&p).unwrap();
        let s2 = solve_eigen(&p).unwrap();
        assert_eq!(s1.kappas, s2.kappas);
        assert_eq!(s1.omegas, s2.omegas);
        assert_eq!(s1.u, s2.u);
    }

    #[test]
    fn nonzero_shift_matches_zero_shift() {
        let sys = small_system(3, 0, 0.35);
        let p0 = build_pencil(&sys, 4, 0.0).unwrap();
        let s0 = solve_eigen(&p0).unwrap();
        let p1 = build_pencil(&sys, 4, 5.0).unwrap();
        let s1 = solve_eigen(&p1).unwrap();
        for i in 0..4 {
            assert!(
                (s0.kappas[i] - s1.kappas[i]).abs() < 1e-8 * s0.kappas[i],
                "mode {i}: {} vs {}",
                s0.kappas[i],
                s1.kappas[i]
            );
        }
    }

    #[test]
    fn limit_solver_runs() {
        let mesh = Arc::new(generate_mesh(&DomainSpec::UnitSquare, 3).unwrap());
        let sol = solve_limit_eigen(mesh, 0, 1.0 / 3.0, 3).unwrap();
        assert_eq!(sol.nev(), 3);
        assert!(sol.kappas.iter().all(|&k| k > 0.0));
    }

    #[test]
    fn cluster_detection() {
        let omegas = [4.0, 5.5, 5.5 + 1e-9, 6.2];
        assert_eq!(cluster_indices(&omegas), vec![0, 1, 1, 2]);
    }
}
