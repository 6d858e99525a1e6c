use super::*;
use crate::mesh::{generate_mesh, DomainSpec};
use crate::rng::SplitMix64;

fn reference_cell_mesh() -> Mesh {
    Mesh::from_raw(
        vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
        vec![[0, 1, 2]],
        None,
    )
    .unwrap()
}

fn square(n: usize) -> Mesh {
    generate_mesh(&DomainSpec::UnitSquare, n).unwrap()
}

fn identity_tensor(_x: f64, _y: f64) -> [[f64; 2]; 2] {
    [[1.0, 0.0], [0.0, 1.0]]
}

fn max_rel_diff(a: &SparseMatrix, b: &SparseMatrix) -> f64 {
    let scale = a.max_abs().max(b.max_abs());
    let mut worst = 0.0_f64;
    for i in 0..a.nrows() {
        for (j, v) in a.row(i) {
            worst = worst.max((v - b.get(i, j)).abs());
        }
        for (j, v) in b.row(i) {
            worst = worst.max((v - a.get(i, j)).abs());
        }
    }
    worst / scale
}

#[test]
fn dof_counts_match_formulas() {
    for k in 0..=2 {
        let mesh = square(3);
        let dofs = DofMap::new(&mesh, k);
        assert_eq!(
            dofs.n_rho,
            2 * (mesh.n_edges() * (k + 1) + mesh.n_cells() * k * (k + 1))
        );
        assert_eq!(dofs.n_u, 2 * mesh.n_cells() * (k + 1) * (k + 2) / 2);
    }
}

#[test]
fn a_is_exactly_symmetric() {
    let mesh = square(3);
    let material = build_lame(1.0, 0.35).unwrap();
    for k in 0..=1 {
        let a = assemble_a_original(&mesh, k, &material).unwrap();
        assert_eq!(a.symmetry_error(), 0.0, "k={k}");
        let ad = assemble_a_deviatoric(&mesh, k, &material).unwrap();
        assert_eq!(ad.symmetry_error(), 0.0, "k={k}");
    }
}

#[test]
fn disjoint_supports_give_zero_entries() {
    let mesh = square(4);
    let material = build_lame(1.0, 0.35).unwrap();
    let asm = Assembler::new(&mesh, 0).unwrap();
    let a = asm.assemble_a(&material, AForm::Original).unwrap();
    // Edge 0 is (0,1) at the bottom-left corner; the lexicographically last
    // edge touches the top-right corner. Their cells do not overlap.
    let i = asm.dofs.rho_dof(0, asm.dofs.scalar_edge_dof(0, 0));
    let j = asm.dofs.rho_dof(0, asm.dofs.scalar_edge_dof(mesh.n_edges() - 1, 0));
    assert_eq!(a.get(i, j), 0.0);
}

#[test]
fn reference_cell_identity_tensor_value() {
    // a(I, I) = 2 |T| / (2λ + 3μ) on a single cell.
    let mesh = reference_cell_mesh();
    let material = build_lame(1.0, 0.35).unwrap();
    let lambda = material.lambda.unwrap();
    let expect = 2.0 * 0.5 / (2.0 * lambda + 3.0 * material.mu);
    for k in 0..=2 {
        let asm = Assembler::new(&mesh, k).unwrap();
        let x = rt_interpolate(&asm, &identity_tensor);
        for form in [AForm::Original, AForm::Deviatoric] {
            let a = asm.assemble_a(&material, form).unwrap();
            let ax = a.mul_vec(&x);
            let quad_form: f64 = x.iter().zip(&ax).map(|(xi, yi)| xi * yi).sum();
            assert!(
                (quad_form - expect).abs() < 1e-12,
                "k={k} {form:?}: {quad_form} vs {expect}"
            );
        }
    }
}

#[test]
fn two_path_equality_for_finite_lambda() {
    let material = build_lame(1.0, 0.35).unwrap();
    for k in 0..=2 {
        let mesh = square(2);
        let orig = assemble_a_original(&mesh, k, &material).unwrap();
        let dev = assemble_a_deviatoric(&mesh, k, &material).unwrap();
        assert!(max_rel_diff(&orig, &dev) < 1e-12, "k={k}");
    }
}

#[test]
fn original_form_rejects_limit_material() {
    let mesh = square(1);
    let limit = build_lame(1.0, 0.5).unwrap();
    assert!(assemble_a_original(&mesh, 0, &limit).is_err());
}

#[test]
fn limit_form_annihilates_pure_trace_fields() {
    let mesh = reference_cell_mesh();
    let limit = build_lame(1.0, 0.5).unwrap();
    let asm = Assembler::new(&mesh, 0).unwrap();
    let a = asm.assemble_a(&limit, AForm::Deviatoric).unwrap();
    let x = rt_interpolate(&asm, &identity_tensor);
    let ax = a.mul_vec(&x);
    let quad_form: f64 = x.iter().zip(&ax).map(|(xi, yi)| xi * yi).sum();
    assert!(quad_form.abs() < 1e-14, "identity tensor is pure trace: {quad_form}");
}

#[test]
fn large_lambda_approaches_limit_form() {
    let mesh = square(2);
    let asm = Assembler::new(&mesh, 0).unwrap();
    let limit = build_lame(1.0, 0.5).unwrap();
    let a_inf = asm.assemble_a(&limit, AForm::Deviatoric).unwrap();
    // Same μ as the limit material, huge λ.
    let near = MaterialParams { e: 1.0, nu: 0.5, mu: limit.mu, lambda: Some(1e8) };
    let a_near = asm.assemble_a(&near, AForm::Deviatoric).unwrap();
    let diff = max_rel_diff(&a_inf, &a_near);
    assert!(diff > 0.0 && diff < 1e-6, "O(1/λ) difference, got {diff}");
}

#[test]
fn b_row_sum_is_boundary_flux() {
    // For constant v = e_r, Σ_cells (B x)[v-dof] = ∮ (τ_h n) · e_r.
    let mesh = square(1);
    let asm = Assembler::new(&mesh, 0).unwrap();
    let b = asm.assemble_b();
    let tau = |x: f64, y: f64| [[1.0 + 0.5 * x, 0.25 * y], [0.5 * y, 2.0 - 0.25 * x]];
    let x = rt_interpolate(&asm, &tau);
    let bx = b.mul_vec(&x);
    for r in 0..2 {
        let volume: f64 = (0..mesh.n_cells()).map(|c| bx[asm.dofs.u_dof(r, c, 0)]).sum();
        // u basis for k=0 is the constant 1, so the sum is ∫ div(row r).
        let mut boundary = 0.0;
        let (nodes, weights) = crate::quadrature::gauss_legendre(4);
        for e in 0..mesh.n_edges() {
            if !mesh.boundary_edge[e] {
                continue;
            }
            let [va, vb] = mesh.edges[e];
            let (pa, pb) = (mesh.vertices[va], mesh.vertices[vb]);
            let len = mesh.edge_length(e);
            // Outward normal: boundary edges belong to one cell whose sign
            // links the global normal to the outward one.
            let inc = mesh
                .cell_edges
                .iter()
                .flatten()
                .find(|ce| ce.edge == e)
                .unwrap();
            let n = mesh.edge_normal(e);
            let n_out = [n[0] * inc.sign, n[1] * inc.sign];
            for (t, w) in nodes.iter().zip(&weights) {
                let px = 0.5 * (pa[0] + pb[0]) + 0.5 * t * (pb[0] - pa[0]);
                let py = 0.5 * (pa[1] + pb[1]) + 0.5 * t * (pb[1] - pa[1]);
                let rows = tau(px, py);
                boundary += 0.5 * len * w * (rows[r][0] * n_out[0] + rows[r][1] * n_out[1]);
            }
        }
        assert!((volume - boundary).abs() < 1e-12, "row {r}: {volume} vs {boundary}");
    }
}

#[test]
fn mass_matrix_is_cell_areas_for_k0() {
    let mesh = square(2);
    let m = assemble_mass(&mesh, 0).unwrap();
    let dofs = DofMap::new(&mesh, 0);
    for c in 0..mesh.n_cells() {
        let area = mesh.cell_area(c);
        for comp in 0..2 {
            let d = dofs.u_dof(comp, c, 0);
            assert!((m.get(d, d) - area).abs() < 1e-15);
        }
    }
    assert_eq!(m.symmetry_error(), 0.0);
}

#[test]
fn unit_field_mass_energy_is_domain_area() {
    for k in 0..=2 {
        let mesh = square(2);
        let asm = Assembler::new(&mesh, k).unwrap();
        let m = asm.assemble_mass();
        let x = l2_project(&asm, &|_x, _y| [1.0, 0.0]);
        let mx = m.mul_vec(&x);
        let energy: f64 = x.iter().zip(&mx).map(|(a, b)| a * b).sum();
        assert!((energy - 1.0).abs() < 1e-12, "k={k}: {energy}");
    }
}

#[test]
fn mass_conditioning_uniform_in_n() {
    for n in [2usize, 4, 8] {
        let mesh = square(n);
        let m = assemble_mass(&mesh, 1).unwrap();
        let (mut dmin, mut dmax) = (f64::INFINITY, 0.0_f64);
        let mut offdiag = 0.0_f64;
        for i in 0..m.nrows() {
            for (j, v) in m.row(i) {
                if i == j {
                    dmin = dmin.min(v);
                    dmax = dmax.max(v);
                } else {
                    offdiag = offdiag.max(v.abs());
                }
            }
        }
        // Scaled by the uniform cell area, the blocks are identical across
        // N; orthonormality of the reference basis keeps them diagonal.
        assert!(dmax / dmin < 1.0 + 1e-12, "N={n}");
        assert!(offdiag <= 1e-14, "N={n}: offdiag {offdiag}");
    }
}

#[test]
fn trace_constraint_examples() {
    for k in 0..=1 {
        let mesh = square(2);
        let asm = Assembler::new(&mesh, k).unwrap();
        let c = asm.trace_constraint();
        assert!(c.iter().any(|&v| v != 0.0));

        // x = interpolant of the identity: cᵀx = n |Ω| = 2.
        let x = rt_interpolate(&asm, &identity_tensor);
        let dot: f64 = c.iter().zip(&x).map(|(a, b)| a * b).sum();
        assert!((dot - 2.0).abs() < 1e-12, "k={k}: {dot}");
    }
    // Pointwise trace-free field (rows are degree-1, exact for k = 1).
    let mesh = square(2);
    let asm = Assembler::new(&mesh, 1).unwrap();
    let c = asm.trace_constraint();
    let x = rt_interpolate(&asm, &|px, _py| [[px, 0.3], [0.7, -px]]);
    let dot: f64 = c.iter().zip(&x).map(|(a, b)| a * b).sum();
    assert!(dot.abs() < 1e-12, "trace-free field: {dot}");
}

#[test]
fn interpolation_reproduces_polynomials() {
    for k in 0..=2 {
        let mesh = square(2);
        let asm = Assembler::new(&mesh, k).unwrap();
        // Component degrees track k so the rows lie in (P_k)² ⊆ RT_k.
        let tau = move |x: f64, y: f64| {
            let mut p = 1.5;
            let mut q = 2.0;
            if k >= 1 {
                p += x + 0.5 * y;
                q += y - 0.5 * x;
            }
            if k >= 2 {
                p += x * x - 0.25 * y * y;
                q += 0.5 * x * y;
            }
            [[p, q], [q - p, 0.25 * p]]
        };
        let coeffs = rt_interpolate(&asm, &tau);
        for c in 0..mesh.n_cells() {
            let piola = asm.piola(c).unwrap();
            let p0 = mesh.vertices[mesh.cells[c][0]];
            for g in 0..asm.elem.quad.len() {
                let (xr, yr) = asm.elem.quad.xy(g);
                let p = piola.push_point(p0, xr, yr);
                let want = tau(p[0], p[1]);
                let got = eval_rho_at(&asm, &coeffs, c, xr, yr);
                for r in 0..2 {
                    for comp in 0..2 {
                        assert!(
                            (want[r][comp] - got[r][comp]).abs() < 1e-10,
                            "k={k} cell {c}"
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn identity_interpolant_is_divergence_free() {
    let mesh = square(3);
    for k in 0..=1 {
        let asm = Assembler::new(&mesh, k).unwrap();
        let coeffs = rt_interpolate(&asm, &identity_tensor);
        for c in [0usize, 5, 11] {
            let d = eval_rho_div_at(&asm, &coeffs, c, 0.3, 0.3);
            assert!(d[0].abs() < 1e-11 && d[1].abs() < 1e-11, "k={k} cell {c}: {d:?}");
        }
    }
}

#[test]
fn projection_reproduces_polynomials_and_constants() {
    for k in 0..=2 {
        let mesh = square(2);
        let asm = Assembler::new(&mesh, k).unwrap();
        let kf = k as f64;
        let v = move |x: f64, y: f64| [1.0 + x.powf(kf), y.powf(kf) - 2.0 * x.powf(kf)];
        let coeffs = l2_project(&asm, &v);
        for c in 0..mesh.n_cells() {
            let piola = asm.piola(c).unwrap();
            let p0 = mesh.vertices[mesh.cells[c][0]];
            for g in 0..asm.elem.quad.len() {
                let (xr, yr) = asm.elem.quad.xy(g);
                let p = piola.push_point(p0, xr, yr);
                let want = v(p[0], p[1]);
                let got = eval_u_at(&asm, &coeffs, c, xr, yr);
                assert!((want[0] - got[0]).abs() < 1e-11, "k={k}");
                assert!((want[1] - got[1]).abs() < 1e-11, "k={k}");
            }
        }

        let ones = l2_project(&asm, &|_x, _y| [1.0, 1.0]);
        for c in 0..mesh.n_cells() {
            let got = eval_u_at(&asm, &ones, c, 0.25, 0.5);
            assert!((got[0] - 1.0).abs() < 1e-13 && (got[1] - 1.0).abs() < 1e-13);
        }
    }
}

#[test]
fn assembled_system_has_consistent_dimensions() {
    let mesh = Arc::new(square(2));
    let material = build_lame(1.0, 0.35).unwrap();
    let sys = assemble_system(mesh.clone(), 1, material).unwrap();
    assert_eq!(sys.a.nrows(), sys.dofs.n_rho);
    assert_eq!(sys.b.nrows(), sys.dofs.n_u);
    assert_eq!(sys.b.ncols(), sys.dofs.n_rho);
    assert_eq!(sys.m.nrows(), sys.dofs.n_u);
    assert_eq!(sys.c.len(), sys.dofs.n_rho);
}

#[test]
fn norm_equivalence_of_deviatoric_split() {
    // xᵀ A_dev x = (1/μ)‖τᵈ‖² + coeff ‖tr τ‖², with the right side
    // integrated independently from pointwise field values.
    let mesh = square(2);
    let material = build_lame(1.0, 0.4).unwrap();
    let asm = Assembler::new(&mesh, 1).unwrap();
    let a = asm.assemble_a(&material, AForm::Deviatoric).unwrap();
    let mut rng = SplitMix64::new(2024);
    let mut x = vec![0.0; asm.dofs.n_rho];
    rng.fill_symmetric(&mut x);
    let ax = a.mul_vec(&x);
    let quad_form: f64 = x.iter().zip(&ax).map(|(a, b)| a * b).sum();

    let mut dev_norm2 = 0.0;
    let mut tr_norm2 = 0.0;
    for c in 0..mesh.n_cells() {
        let (_, det) = mesh.jacobian(c);
        for g in 0..asm.elem.quad.len() {
            let (xr, yr) = asm.elem.quad.xy(g);
            let rows = eval_rho_at(&asm, &x, c, xr, yr);
            let w = asm.elem.quad.weights[g] * det;
            let tr = rows[0][0] + rows[1][1];
            let dev = [
                [rows[0][0] - 0.5 * tr, rows[0][1]],
                [rows[1][0], rows[1][1] - 0.5 * tr],
            ];
            dev_norm2 += w * (dev[0][0] * dev[0][0]
                + dev[0][1] * dev[0][1]
                + dev[1][0] * dev[1][0]
                + dev[1][1] * dev[1][1]);
            tr_norm2 += w * tr * tr;
        }
    }
    let expect = dev_norm2 / material.mu + material.trace_coeff_deviatoric() * tr_norm2;
    assert!(
        (quad_form - expect).abs() < 1e-12 * expect.abs().max(1.0),
        "{quad_form} vs {expect}"
    );
}
