mod common;

use common::{dense_lambda_max, rel_err};
use proptest::prelude::*;
use stepbound::mesh::MeshSpec;
use stepbound::reference::Quadrature;
use stepbound::spectral::{geometric_bound, top_eigenpair, zhudu_bound, EigenOptions};
use stepbound::{
    compute_report, AssembledSystem, DiffusionField, DiffusionSpec, ProblemSpec, ReferenceElement, ReportOptions,
    SurrogatePolicy,
};

fn perturbed(nx: usize, ny: usize, seed: u64) -> MeshSpec {
    MeshSpec::RandomPerturbed {
        nx,
        ny,
        amplitude: 0.25 / nx.max(ny) as f64,
        seed,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sandwich_on_random_meshes(
        nx in 2usize..6,
        ny in 2usize..6,
        seed in 0u64..1000,
        m in 1usize..=3,
        angle in 0.0f64..std::f64::consts::PI,
        k2 in 1.0f64..200.0,
        hrz in any::<bool>(),
    ) {
        let spec = ProblemSpec {
            mesh: perturbed(nx, ny, seed),
            order: m,
            diffusion: DiffusionSpec::RotatedAnisotropic { angle, eigenvalues: [1.0, k2] },
            policy: if hrz { SurrogatePolicy::HrzDiagonal } else { SurrogatePolicy::Consistent },
        };
        let s = spec.assemble().unwrap();
        let r = compute_report(&s, &ReportOptions::default()).unwrap();
        let exact = dense_lambda_max(&s.stiffness, &s.surrogate);
        prop_assert!(rel_err(r.lambda_max_exact.unwrap(), exact) < 1e-8);
        prop_assert!(r.lower_diag_ratio <= exact * (1.0 + 1e-9));
        prop_assert!(exact <= r.upper_diag_ratio * (1.0 + 1e-9));
        prop_assert!(exact <= r.upper_geometric * (1.0 + 1e-9));
        prop_assert!(exact <= r.upper_patch * (1.0 + 1e-9));
        prop_assert!(exact <= r.upper_geometric_refined * (1.0 + 1e-9));
        if let Some(m_bound) = r.upper_diag_ratio_m_matrix {
            prop_assert!(exact <= m_bound * (1.0 + 1e-9));
        }
    }

    #[test]
    fn rigid_rotation_invariance(seed in 0u64..1000, angle in -3.0f64..3.0, m in 1usize..=2) {
        let mesh = stepbound::generate_mesh(&perturbed(4, 3, seed)).unwrap();
        let elem = ReferenceElement::new(2, m).unwrap();
        let d = DiffusionField::RotatedAnisotropic { angle: 0.3, eigenvalues: [2.0, 40.0] };
        let a = AssembledSystem::assemble(&mesh, &elem, &d, SurrogatePolicy::HrzDiagonal).unwrap();
        let b = AssembledSystem::assemble(&mesh.rotated(angle), &elem, &d.rotated(angle), SurrogatePolicy::HrzDiagonal)
            .unwrap();
        let lam = |s: &AssembledSystem| top_eigenpair(&s.stiffness, &s.surrogate, &EigenOptions::default()).unwrap().value;
        prop_assert!(rel_err(lam(&b), lam(&a)) < 1e-10);
        prop_assert!(rel_err(geometric_bound(&b).unwrap(), geometric_bound(&a).unwrap()) < 1e-10);
        prop_assert!(rel_err(zhudu_bound(&b).unwrap(), zhudu_bound(&a).unwrap()) < 1e-10);
    }

    #[test]
    fn surrogates_are_spectrally_equivalent(seed in 0u64..1000, m in 1usize..=3, samples in 1usize..20) {
        // (λ̂₁/Λ̂₂) vᵀM̃₂v ≤ vᵀM̃₁v ≤ (Λ̂₁/λ̂₂) vᵀM̃₂v for any two policies
        let mesh = stepbound::generate_mesh(&perturbed(3, 4, seed)).unwrap();
        let elem = ReferenceElement::new(2, m).unwrap();
        let d = DiffusionField::identity(2);
        let s1 = AssembledSystem::assemble(&mesh, &elem, &d, SurrogatePolicy::Consistent).unwrap();
        let s2 = AssembledSystem::assemble(&mesh, &elem, &d, SurrogatePolicy::HrzDiagonal).unwrap();
        let (r1, r2) = (&s1.surrogate_ref, &s2.surrogate_ref);
        let n = s1.n_free();
        for k in 0..samples {
            let v: Vec<f64> = (0..n).map(|i| ((i * 31 + k * 17 + seed as usize) % 13) as f64 - 6.0).collect();
            let (q1, q2) = (s1.surrogate.quad_form(&v), s2.surrogate.quad_form(&v));
            prop_assert!(r1.lambda_min / r2.lambda_max * q2 <= q1 * (1.0 + 1e-12));
            prop_assert!(q1 <= r1.lambda_max / r2.lambda_min * q2 * (1.0 + 1e-12));
        }
    }
}

#[test]
fn element_blocks_satisfy_m2() {
    // each global diagonal is the patch sum of |K| (M̃_K̂)_ii
    let mesh = stepbound::generate_mesh(&perturbed(3, 3, 4)).unwrap();
    for m in 1..=3 {
        let elem = ReferenceElement::new(2, m).unwrap();
        let s = AssembledSystem::assemble(&mesh, &elem, &DiffusionField::identity(2), SurrogatePolicy::HrzDiagonal)
            .unwrap();
        let full = s.full_surrogate.to_dense();
        for (k, dofs) in s.dofs.element_dofs.iter().enumerate() {
            for (i, &gi) in dofs.iter().enumerate() {
                let summed: f64 = s.patches.elements[gi]
                    .iter()
                    .zip(&s.patches.local_index[gi])
                    .map(|(&kk, &li)| s.maps[kk].volume * s.surrogate_ref.matrix[(li, li)])
                    .sum();
                assert!(rel_err(full[(gi, gi)], summed) < 1e-13, "element {k} node {i}");
            }
        }
    }
}

#[test]
fn consistent_interval_discrete_spectrum() {
    // top of the discrete Dirichlet spectrum: h²λ = 6(1 + cos(π/n)) / (2 − cos(π/n)), which tends to 12
    let mut prev_gap = f64::INFINITY;
    for n in [25, 50, 100, 200] {
        let s = ProblemSpec {
            mesh: MeshSpec::UniformInterval { n },
            order: 1,
            diffusion: DiffusionSpec::Identity,
            policy: SurrogatePolicy::Consistent,
        }
        .assemble()
        .unwrap();
        let h = 1.0 / n as f64;
        let c = (std::f64::consts::PI / n as f64).cos();
        let expected = 6.0 * (1.0 + c) / (2.0 - c) / (h * h);
        let lam = top_eigenpair(&s.stiffness, &s.surrogate, &EigenOptions::default())
            .unwrap()
            .value;
        assert!(rel_err(lam, expected) < 1e-10, "n={n}");
        let gap = 12.0 - lam * h * h;
        assert!(gap > 0.0 && gap < prev_gap / 3.9, "n={n} gap={gap}");
        prev_gap = gap;
    }
}

#[test]
fn variable_diffusion_alignment_is_bracketed() {
    let mesh = stepbound::generate_mesh(&perturbed(4, 4, 1)).unwrap();
    let elem = ReferenceElement::new(2, 2).unwrap();
    let dx = |x: &[f64]| nalgebra::DMatrix::from_row_slice(2, 2, &[1.0 + x[0] * x[0], 0.0, 0.0, 1.0]);
    let d = DiffusionField::variable(2, dx);
    let s = AssembledSystem::assemble(&mesh, &elem, &d, SurrogatePolicy::HrzDiagonal).unwrap();
    let exact = dense_lambda_max(&s.stiffness, &s.surrogate);
    assert!(exact <= geometric_bound(&s).unwrap());
    let rule = Quadrature::simplex(2, 2).unwrap();
    let norm = |m: nalgebra::DMatrix<f64>| m.symmetric_eigen().eigenvalues.max();
    for (k, map) in s.maps.iter().enumerate() {
        let af = stepbound::assembly::element_alignment_factor(map, &d, &rule);
        let base = norm(&map.inv_jacobian * map.inv_jacobian.transpose());
        let verts: Vec<&Vec<f64>> = mesh.elements()[k].iter().map(|&v| &mesh.vertices()[v]).collect();
        let top = verts.iter().map(|x| 1.0 + x[0] * x[0]).fold(0.0, f64::max);
        assert!(
            af >= base * (1.0 - 1e-12) && af <= top * base * (1.0 + 1e-12),
            "element {k}"
        );
        for x in verts {
            let at_vertex = norm(&map.inv_jacobian * dx(x) * map.inv_jacobian.transpose());
            assert!(af >= at_vertex * (1.0 - 1e-12), "element {k}");
        }
    }
}

#[test]
fn coordinate_export_round_trip() {
    let s = ProblemSpec {
        mesh: perturbed(3, 3, 2),
        order: 2,
        diffusion: common::rotated_d(),
        policy: SurrogatePolicy::Consistent,
    }
    .assemble()
    .unwrap();
    let mut buf = Vec::new();
    s.stiffness.write_coordinate(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let triplets: Vec<(usize, usize, f64)> = text
        .lines()
        .map(|l| {
            let t: Vec<&str> = l.split(' ').collect();
            (t[0].parse().unwrap(), t[1].parse().unwrap(), t[2].parse().unwrap())
        })
        .collect();
    let back = stepbound::CsrMatrix::from_triplets(s.n_free(), s.n_free(), triplets);
    assert_eq!(back, s.stiffness);
}
