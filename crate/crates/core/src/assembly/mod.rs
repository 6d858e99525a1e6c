//! Global assembly of the mixed formulation.
//!
//! The pseudostress unknown is stored row-major: each of the two rows of
//! the tensor field is an independent scalar Raviart-Thomas field, and the
//! tensor DOF index is `row * n_scalar + scalar_dof`. Scalar RT DOFs number
//! edge moments first (global edge index × moment index) and then interior
//! moments per cell. Displacement DOFs are `component * (n_cells * d_p) +
//! cell * d_p + local`, with the cell-local polynomial basis scaled so the
//! constant function is exactly 1 — the mass matrix then carries plain cell
//! areas on its diagonal.
//!
//! Per-cell local assembly is pure and runs in parallel when enabled;
//! triplets are concatenated in cell order and compressed by a stable sort,
//! so assembled matrices do not depend on the thread count.

mod interp;
mod material;

pub use interp::{eval_rho_at, eval_rho_div_at, eval_u_at, l2_project, rt_interpolate};
pub use material::{build_lame, MaterialParams, DIM};

use crate::elements::{reference_pk_basis, reference_rt_basis, pk_dim, Piola, ReferenceElement};
use crate::mesh::Mesh;
use crate::par::map_indexed;
use crate::sparse::{write_vector_market, SparseMatrix, Triplets};
use crate::{Error, Result};
use std::path::Path;
use std::sync::Arc;

/// Global DOF numbering for a mesh and order.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    pub k: usize,
    pub n_edges: usize,
    pub n_cells: usize,
    /// Scalar RT DOFs per row of the tensor.
    pub n_scalar: usize,
    /// Tensor (pseudostress) DOFs: `2 * n_scalar`.
    pub n_rho: usize,
    /// Displacement DOFs: `2 * n_cells * d_p`.
    pub n_u: usize,
    /// Local RT dimension `(k+1)(k+3)` and local P_k dimension.
    pub d_rt: usize,
    pub d_p: usize,
}

impl DofMap {
    pub fn new(mesh: &Mesh, k: usize) -> DofMap {
        let edge_per = k + 1;
        let cell_per = k * (k + 1);
        let d_p = pk_dim(k);
        let n_scalar = mesh.n_edges() * edge_per + mesh.n_cells() * cell_per;
        DofMap {
            k,
            n_edges: mesh.n_edges(),
            n_cells: mesh.n_cells(),
            n_scalar,
            n_rho: 2 * n_scalar,
            n_u: 2 * mesh.n_cells() * d_p,
            d_rt: (k + 1) * (k + 3),
            d_p,
        }
    }

    pub fn scalar_edge_dof(&self, edge: usize, q: usize) -> usize {
        edge * (self.k + 1) + q
    }

    pub fn scalar_cell_dof(&self, cell: usize, j: usize) -> usize {
        self.n_edges * (self.k + 1) + cell * self.k * (self.k + 1) + j
    }

    pub fn rho_dof(&self, row: usize, scalar: usize) -> usize {
        row * self.n_scalar + scalar
    }

    pub fn u_dof(&self, comp: usize, cell: usize, j: usize) -> usize {
        comp * (self.n_cells * self.d_p) + cell * self.d_p + j
    }

    /// Total size of the bordered eigenvalue pencil.
    pub fn pencil_size(&self) -> usize {
        self.n_rho + self.n_u + 1
    }
}

/// Scalar RT DOFs of one cell in reference order, with orientation signs.
#[derive(Debug, Clone)]
pub struct CellDofs {
    pub scalars: Vec<usize>,
    pub signs: Vec<f64>,
}

/// Which algebraic form of the constitutive bilinear form to assemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AForm {
    /// `(1/μ) ∫ ξ:τ − (λ+μ)/(μ(nλ+(n+1)μ)) ∫ tr ξ tr τ`; finite λ only.
    Original,
    /// `(1/μ) ∫ ξᵈ:τᵈ + 1/(n(nλ+(n+1)μ)) ∫ tr ξ tr τ`; the trace term is
    /// dropped exactly in the limit regime.
    Deviatoric,
}

/// Precomputed per-(mesh, order) assembly context.
pub struct Assembler<'m> {
    pub mesh: &'m Mesh,
    pub k: usize,
    pub elem: ReferenceElement,
    pub dofs: DofMap,
    /// Displacement basis values at the quadrature points (scaled so the
    /// constant function is 1).
    u_values: Vec<Vec<f64>>,
    /// Displacement basis polynomials, same scaling.
    pub(crate) u_functions: Vec<crate::elements::poly::Poly2>,
    /// Reference divergence coupling `∫ q̂_j div φ̂_m`; geometry-independent.
    b_ref: Vec<Vec<f64>>,
}

impl<'m> Assembler<'m> {
    pub fn new(mesh: &'m Mesh, k: usize) -> Result<Self> {
        let elem = reference_rt_basis(k)?;
        let dofs = DofMap::new(mesh, k);
        let pk = reference_pk_basis(k)?;
        let scale = std::f64::consts::FRAC_1_SQRT_2;
        let u_functions: Vec<_> = pk.functions.iter().map(|p| p.scaled(scale)).collect();
        let quad = &elem.quad;
        let u_values: Vec<Vec<f64>> = u_functions
            .iter()
            .map(|p| (0..quad.len()).map(|g| { let (x, y) = quad.xy(g); p.eval(x, y) }).collect())
            .collect();
        let mut b_ref = vec![vec![0.0; elem.dim]; dofs.d_p];
        for j in 0..dofs.d_p {
            for m in 0..elem.dim {
                b_ref[j][m] = (0..quad.len())
                    .map(|g| quad.weights[g] * u_values[j][g] * elem.divs[m][g])
                    .sum();
            }
        }
        Ok(Assembler { mesh, k, elem, dofs, u_values, u_functions, b_ref })
    }

    /// Global scalar DOFs and orientation signs of cell `c`, in the
    /// reference element's DOF order.
    pub fn cell_dofs(&self, c: usize) -> CellDofs {
        let k = self.k;
        let cell = &self.mesh.cells[c];
        let mut scalars = Vec::with_capacity(self.dofs.d_rt);
        let mut signs = Vec::with_capacity(self.dofs.d_rt);
        for l in 0..3 {
            let edge = self.mesh.cell_edges[c][l].edge;
            let ascending = cell[(l + 1) % 3] < cell[(l + 2) % 3];
            for q in 0..=k {
                scalars.push(self.dofs.scalar_edge_dof(edge, q));
                // Reversing the edge parameter flips odd Legendre moments and
                // the normal; the combined factor is −(−1)^q.
                signs.push(if ascending {
                    1.0
                } else if q % 2 == 0 {
                    -1.0
                } else {
                    1.0
                });
            }
        }
        for j in 0..k * (k + 1) {
            scalars.push(self.dofs.scalar_cell_dof(c, j));
            signs.push(1.0);
        }
        CellDofs { scalars, signs }
    }

    pub fn piola(&self, c: usize) -> Result<Piola> {
        let (jac, _) = self.mesh.jacobian(c);
        Piola::new(jac).map_err(|_| Error::DegenerateCell(c))
    }

    /// Physical basis values at the quadrature points of cell `c`, with
    /// orientation signs applied.
    fn physical_values(&self, piola: &Piola, dofs: &CellDofs) -> Vec<Vec<[f64; 2]>> {
        (0..self.elem.dim)
            .map(|m| {
                self.elem.values[m]
                    .iter()
                    .map(|v| {
                        let w = piola.vector(*v);
                        [w[0] * dofs.signs[m], w[1] * dofs.signs[m]]
                    })
                    .collect()
            })
            .collect()
    }

    /// Assembles the constitutive block in the requested form.
    pub fn assemble_a(&self, material: &MaterialParams, form: AForm) -> Result<SparseMatrix> {
        let inv_mu = 1.0 / material.mu;
        let (dev_split, trace_coeff) = match form {
            AForm::Original => (false, -material.trace_coeff_original()?),
            AForm::Deviatoric => (true, material.trace_coeff_deviatoric()),
        };
        let quad_w = &self.elem.quad.weights;
        let dim = self.elem.dim;
        let n_rho = self.dofs.n_rho;

        let per_cell = map_indexed(self.mesh.n_cells(), |c| {
            let piola = self.piola(c).expect("validated mesh has no degenerate cells");
            let dofs = self.cell_dofs(c);
            let phys = self.physical_values(&piola, &dofs);
            let det = piola.det;
            let mut entries = Vec::with_capacity(4 * dim * dim);
            for m in 0..dim {
                for mp in m..dim {
                    // Componentwise products integrated over the cell.
                    let (mut sxx, mut sxy, mut syx, mut syy) = (0.0, 0.0, 0.0, 0.0);
                    for g in 0..quad_w.len() {
                        let w = quad_w[g] * det;
                        let u = phys[m][g];
                        let v = phys[mp][g];
                        sxx += w * u[0] * v[0];
                        sxy += w * u[0] * v[1];
                        syx += w * u[1] * v[0];
                        syy += w * u[1] * v[1];
                    }
                    let dot = sxx + syy;
                    // Tensor rows r (for m) and rp (for mp):
                    //   full contraction  = δ_{r,rp} (φ_m · φ_mp)
                    //   trace product     = (φ_m)_r (φ_mp)_rp
                    //   deviatoric pairing = full − ½ trace.
                    let pair = |tr: f64, full: f64| -> f64 {
                        if dev_split {
                            inv_mu * (full - 0.5 * tr) + trace_coeff * tr
                        } else {
                            inv_mu * full + trace_coeff * tr
                        }
                    };
                    let vals = [
                        pair(sxx, dot), // (r, rp) = (0, 0)
                        pair(sxy, 0.0), // (0, 1)
                        pair(syx, 0.0), // (1, 0)
                        pair(syy, dot), // (1, 1)
                    ];
                    let gm = &dofs.scalars;
                    for r in 0..2 {
                        for rp in 0..2 {
                            // For m == mp the (1,0) entry is the mirror of
                            // (0,1); pushing the same float keeps A = Aᵀ
                            // exact instead of relying on re-association.
                            if m == mp && r > rp {
                                continue;
                            }
                            let v = vals[2 * r + rp];
                            if v == 0.0 {
                                continue;
                            }
                            let gi = self.dofs.rho_dof(r, gm[m]);
                            let gj = self.dofs.rho_dof(rp, gm[mp]);
                            entries.push((gi, gj, v));
                            if m != mp || r != rp {
                                entries.push((gj, gi, v));
                            }
                        }
                    }
                }
            }
            entries
        });

        let mut trip = Triplets::new(n_rho, n_rho);
        for cell_entries in per_cell {
            trip.entries.extend(cell_entries);
        }
        Ok(SparseMatrix::from_triplets(&trip))
    }

    /// Divergence coupling `B[(v), (τ)] = ∫ v · div τ`. The cell integrals
    /// reduce to reference quantities, so only DOF signs vary per cell.
    pub fn assemble_b(&self) -> SparseMatrix {
        let dim = self.elem.dim;
        let per_cell = map_indexed(self.mesh.n_cells(), |c| {
            let dofs = self.cell_dofs(c);
            let mut entries = Vec::with_capacity(2 * self.dofs.d_p * dim);
            for j in 0..self.dofs.d_p {
                for m in 0..dim {
                    let v = dofs.signs[m] * self.b_ref[j][m];
                    if v == 0.0 {
                        continue;
                    }
                    for comp in 0..2 {
                        entries.push((
                            self.dofs.u_dof(comp, c, j),
                            self.dofs.rho_dof(comp, dofs.scalars[m]),
                            v,
                        ));
                    }
                }
            }
            entries
        });
        let mut trip = Triplets::new(self.dofs.n_u, self.dofs.n_rho);
        for cell_entries in per_cell {
            trip.entries.extend(cell_entries);
        }
        SparseMatrix::from_triplets(&trip)
    }

    /// Displacement mass matrix; block-diagonal per cell and SPD.
    pub fn assemble_mass(&self) -> SparseMatrix {
        let quad_w = &self.elem.quad.weights;
        let per_cell = map_indexed(self.mesh.n_cells(), |c| {
            let (_, det) = self.mesh.jacobian(c);
            let mut entries = Vec::with_capacity(2 * self.dofs.d_p * self.dofs.d_p);
            for j in 0..self.dofs.d_p {
                for jp in 0..self.dofs.d_p {
                    let mut acc = 0.0;
                    for g in 0..quad_w.len() {
                        acc += quad_w[g] * self.u_values[j][g] * self.u_values[jp][g];
                    }
                    let v = acc * det;
                    for comp in 0..2 {
                        entries.push((self.dofs.u_dof(comp, c, j), self.dofs.u_dof(comp, c, jp), v));
                    }
                }
            }
            entries
        });
        let mut trip = Triplets::new(self.dofs.n_u, self.dofs.n_u);
        for cell_entries in per_cell {
            trip.entries.extend(cell_entries);
        }
        SparseMatrix::from_triplets(&trip)
    }

    /// Mean-trace constraint vector: `c · x = ∫ tr(τ_h)`.
    pub fn trace_constraint(&self) -> Vec<f64> {
        let mut c_vec = vec![0.0; self.dofs.n_rho];
        for c in 0..self.mesh.n_cells() {
            let piola = self.piola(c).expect("validated mesh");
            let dofs = self.cell_dofs(c);
            for m in 0..self.elem.dim {
                let integral = self.elem.integrals[m];
                // ∫_cell (φ_m)_r dx = sign · (J ∫ φ̂_m)_r; the trace of the
                // row-r tensor basis is the r-th vector component.
                let jx = piola.jac[0][0] * integral[0] + piola.jac[0][1] * integral[1];
                let jy = piola.jac[1][0] * integral[0] + piola.jac[1][1] * integral[1];
                c_vec[self.dofs.rho_dof(0, dofs.scalars[m])] += dofs.signs[m] * jx;
                c_vec[self.dofs.rho_dof(1, dofs.scalars[m])] += dofs.signs[m] * jy;
            }
        }
        c_vec
    }
}

/// All sparse blocks of the discrete mixed eigenproblem.
#[derive(Debug)]
pub struct AssembledSystem {
    pub a: SparseMatrix,
    pub b: SparseMatrix,
    pub m: SparseMatrix,
    pub c: Vec<f64>,
    pub dofs: DofMap,
    pub material: MaterialParams,
    pub mesh: Arc<Mesh>,
    pub k: usize,
}

/// Assembles every block with the deviatoric form of `a`, which is valid
/// for finite λ and the incompressible limit alike.
pub fn assemble_system(mesh: Arc<Mesh>, k: usize, material: MaterialParams) -> Result<AssembledSystem> {
    let asm = Assembler::new(&mesh, k)?;
    let a = asm.assemble_a(&material, AForm::Deviatoric)?;
    let b = asm.assemble_b();
    let m = asm.assemble_mass();
    let c = asm.trace_constraint();
    let dofs = asm.dofs.clone();
    drop(asm);
    Ok(AssembledSystem { a, b, m, c, dofs, material, mesh, k })
}

/// Spec-level convenience wrappers.
pub fn assemble_a_original(mesh: &Mesh, k: usize, material: &MaterialParams) -> Result<SparseMatrix> {
    Assembler::new(mesh, k)?.assemble_a(material, AForm::Original)
}

pub fn assemble_a_deviatoric(mesh: &Mesh, k: usize, material: &MaterialParams) -> Result<SparseMatrix> {
    Assembler::new(mesh, k)?.assemble_a(material, AForm::Deviatoric)
}

pub fn assemble_b(mesh: &Mesh, k: usize) -> Result<SparseMatrix> {
    Ok(Assembler::new(mesh, k)?.assemble_b())
}

pub fn assemble_mass(mesh: &Mesh, k: usize) -> Result<SparseMatrix> {
    Ok(Assembler::new(mesh, k)?.assemble_mass())
}

pub fn trace_constraint(mesh: &Mesh, k: usize) -> Result<Vec<f64>> {
    Ok(Assembler::new(mesh, k)?.trace_constraint())
}

/// Dumps A (symmetric), B (general), M (symmetric) and c in MatrixMarket
/// coordinate format into `dir`.
pub fn dump_matrices(sys: &AssembledSystem, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let write = |name: &str, f: &dyn Fn(&mut dyn std::io::Write) -> Result<()>| -> Result<()> {
        let path = dir.join(name);
        let mut file = std::io::BufWriter::new(
            std::fs::File::create(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?,
        );
        f(&mut file)
    };
    write("a.mtx", &|w| sys.a.write_matrix_market(true, w))?;
    write("b.mtx", &|w| sys.b.write_matrix_market(false, w))?;
    write("m.mtx", &|w| sys.m.write_matrix_market(true, w))?;
    write("c.mtx", &|w| write_vector_market(&sys.c, w))?;
    Ok(())
}

#[cfg(test)]
mod tests;
