use super::*;
use crate::connlab::{connection_check, standard_matrix, ExprConnection, ExprForm};
use crate::jets::Expr;
use crate::reduction::{build_chart, sigma_project, SpElement};
use std::sync::Arc;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn standard_j_and_its_metric() {
    let j = CompatibleJ::standard(2).unwrap();
    assert_eq!(j.j(), vec![0.0, -1.0, 1.0, 0.0]);
    assert_eq!(j.b_metric(), vec![1.0, 0.0, 0.0, 1.0]);
    let (jp, _) = j_projections(&j);
    let want = [c(0.5, 0.0), c(0.0, 0.5), c(0.0, -0.5), c(0.5, 0.0)];
    for k in 0..4 {
        assert!((jp[(k / 2, k % 2)] - want[k]).norm() < 1e-15);
    }
}

#[test]
fn invariants_are_enforced() {
    let om = standard_matrix(2);
    assert!(CompatibleJ::new(2, &[1.0, 0.0, 0.0, 1.0], &om).is_err());
    // j² = -1 but B_j negative
    assert!(matches!(CompatibleJ::new(2, &[0.0, 1.0, -1.0, 0.0], &om), Err(Error::InvalidInput(_))));
    assert!(matches!(CompatibleJ::new(3, &[0.0; 9], &[0.0; 9]), Err(Error::UnsupportedDimension(3))));
}

#[test]
fn random_j_is_compatible_and_seeded() {
    for d in [2, 4, 6] {
        let om = standard_matrix(d);
        let a = random_compatible_j(d, &om, 1).unwrap();
        let b = random_compatible_j(d, &om, 2).unwrap();
        let again = random_compatible_j(d, &om, 1).unwrap();
        assert_eq!(a.j(), again.j());
        assert!(a.j().iter().zip(b.j()).any(|(x, y)| (x - y).abs() > 1e-3));
    }
    // a non-standard constant form
    let om = vec![0.0, 2.0, 0.5, 0.0, -2.0, 0.0, 0.0, 1.0, -0.5, 0.0, 0.0, 3.0, 0.0, -1.0, -3.0, 0.0];
    let p = mat(4, &symplectic_basis(4, &om).unwrap());
    let back = p.transpose() * mat(4, &om) * &p;
    assert!((back - mat(4, &standard_matrix(4))).amax() < 1e-12);
    random_compatible_j(4, &om, 5).unwrap();
}

#[test]
fn projector_algebra() {
    let j = random_compatible_j(4, &standard_matrix(4), 3).unwrap();
    let (jp, jm) = j_projections(&j);
    let one = DMatrix::<Complex64>::identity(4, 4);
    let jc = j.j.map(|v| c(v, 0.0));
    let checks = [
        (&jp + &jm - &one).camax(),
        (&jp * &jp - &jp).camax(),
        (&jm * &jm - &jm).camax(),
        (&jp * &jm).camax(),
        (&jc * &jp - &jp * c(0.0, 1.0)).camax(),
    ];
    assert!(checks.iter().all(|v| *v < 1e-13), "{checks:?}");
    let v = DVector::from_vec(vec![c(0.3, 0.0), c(-1.0, 0.2), c(0.5, 0.0), c(0.1, -0.4)]);
    let w = &jp * v;
    assert!((&jc * &w - &w * c(0.0, 1.0)).camax() < 1e-13);
}

fn ricci_type_point() -> CurvaturePoint {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    loop {
        let a = SpElement::random(6, &mut rng, 1.0).unwrap();
        let v: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        if a.hamiltonian(&v) > 0.2 {
            let x0 = sigma_project(&a, &v).unwrap();
            if let Ok(chart) = build_chart(&a, &x0, 0.3) {
                return CurvaturePoint::at(&chart.connection(), &chart.form(), &[0.02, -0.01, 0.03, 0.0]).unwrap();
            }
        }
    }
}

#[test]
fn flat_curvature_is_integrable() {
    let om = standard_matrix(4);
    let flat = CurvaturePoint::flat(4, om.clone()).unwrap();
    let j = random_compatible_j(4, &om, 0).unwrap();
    assert_eq!(integrability_defect(&flat, &j).unwrap(), 0.0);
}

#[test]
fn ricci_type_curvature_is_integrable_for_all_sampled_j() {
    let curv = ricci_type_point();
    assert!(curv.max_abs() > 1e-2);
    assert!(curv.w_part().unwrap().max_abs() < 1e-9);
    for seed in 0..50 {
        let j = random_compatible_j(4, &curv.omega, seed).unwrap();
        assert!(integrability_defect(&curv, &j).unwrap() < 1e-9);
    }
}

#[test]
fn e_part_only_is_integrable() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let om = standard_matrix(4);
    let w = random_w_curvature(4, &om, 1.0, &mut rng).unwrap();
    // any Bianchi curvature with a nonzero Ricci part
    use crate::connlab::koszul::{koszul_a, to_curvature_tensor, KoszulSpace};
    let low = to_curvature_tensor(&koszul_a(&KoszulSpace::new(4, 1, 3).unwrap().random(&mut rng)).unwrap());
    let e = CurvaturePoint::from_lowered(4, om.clone(), &low).unwrap().e_part().unwrap();
    assert!(e.max_abs() > 1e-2 && w.max_abs() > 0.99);
    let mut worst_w = 0.0f64;
    for seed in 0..50 {
        let j = random_compatible_j(4, &om, seed).unwrap();
        assert!(integrability_defect(&e, &j).unwrap() < 1e-9);
        worst_w = worst_w.max(integrability_defect(&e.add(&w), &j).unwrap());
    }
    assert!(worst_w > 1e-3, "{worst_w:e}");
}

#[test]
fn norm_is_conjugation_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let om = standard_matrix(4);
    let curv = random_w_curvature(4, &om, 1.0, &mut rng).unwrap();
    let g = random_symplectic(4, &mut rng, 0.7);
    for seed in 0..5 {
        let j = random_compatible_j(4, &om, seed).unwrap();
        let a = integrability_norm(&curv, &j).unwrap();
        let b = integrability_norm(&curv.conjugate(&g).unwrap(), &j.conjugate(&g).unwrap()).unwrap();
        assert!(a > 1e-3 && (a - b).abs() < 1e-10 * a.max(1.0), "{a} {b}");
    }
}

fn torsion_example() -> (ConnRef, FormRef) {
    // Γ_ijk := ω(Γ(∂_i, ∂_j), ∂_k) = v_i h_jk, symmetric in (j,k) and with torsion
    let d = 4;
    let om = standard_matrix(d);
    let v = [0.3, -0.5, 0.2, 0.7];
    let h = [[1.0, 0.2, 0.0, -0.4], [0.2, 0.5, 0.3, 0.0], [0.0, 0.3, -0.8, 0.1], [-0.4, 0.0, 0.1, 0.6]];
    let inv = mat(d, &om).try_inverse().unwrap();
    let mut g = vec![Expr::c(0.0); d * d * d];
    for m in 0..d {
        for i in 0..d {
            for j in 0..d {
                let val: f64 = (0..d).map(|k| v[i] * h[j][k] * inv[(k, m)]).sum();
                g[i3(d, m, i, j)] = Expr::c(val) + Expr::c(0.1 * val) * Expr::x(0);
            }
        }
    }
    (Arc::new(ExprConnection::new(d, g).unwrap()), Arc::new(ExprForm::standard(d)))
}

#[test]
fn torsion_correction_yields_symplectic_connections() {
    let (conn, form) = torsion_example();
    let x = vec![0.2, -0.1, 0.4, 0.3];
    let before = PointData::at(conn.as_ref(), form.as_ref(), &x, 1).unwrap();
    assert!(linalg::max_abs_jets(&before.torsion()) > 1e-2);
    let fixed = torsion_correct(conn.clone(), form.clone(), &[x.clone()]).unwrap();
    let rep = connection_check(&fixed, form.as_ref(), &x).unwrap();
    assert!(rep.torsion < 1e-12 && rep.nabla_omega < 1e-12, "{rep:?}");
    assert!(rep.bianchi < 1e-10 && rep.lowered_symmetry < 1e-10 && rep.ricci_symmetry < 1e-10, "{rep:?}");
    // projection: correcting twice changes nothing
    let fixed: ConnRef = Arc::new(fixed);
    let twice = torsion_correct(fixed.clone(), form.clone(), &[x.clone()]).unwrap();
    let a = linalg::values(&fixed.gamma(&x, 2).unwrap());
    let b = linalg::values(&twice.gamma(&x, 2).unwrap());
    assert!(a.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-12));
}

#[test]
fn torsion_free_input_is_unchanged_and_bad_input_rejected() {
    let form: FormRef = Arc::new(ExprForm::standard(2));
    let flat: ConnRef = Arc::new(ExprConnection::flat(2));
    let same = torsion_correct(flat, form.clone(), &[vec![0.0, 0.0]]).unwrap();
    assert!(linalg::max_abs_jets(&same.gamma(&[0.3, 0.1], 1).unwrap()) == 0.0);
    let mut g = vec![Expr::c(0.0); 8];
    g[0] = Expr::c(1.0);
    let bad: ConnRef = Arc::new(ExprConnection::new(2, g).unwrap());
    assert!(matches!(torsion_correct(bad, form, &[vec![0.0, 0.0]]), Err(Error::InvalidInput(_))));
}

#[test]
fn uniqueness_rank_is_full() {
    let r2 = uniqueness_rank(2, 10, 0).unwrap();
    assert_eq!((r2.rank, r2.expected), (4, 4));
    let r4 = uniqueness_rank(4, 40, 0).unwrap();
    assert_eq!((r4.rank, r4.expected), (20, 20));
    // the kernel is trivial: |A x| ≥ σ_min |x| with σ_min well above the cutoff
    assert!(r4.sigma_min > 1e-8 * r4.sigma_max);
    assert!(matches!(uniqueness_rank(4, 10, 0), Err(Error::NeedMoreSamples { got: 10, need: 20 })));
}

#[test]
fn a_single_j_leaves_a_kernel() {
    let r = uniqueness_rank(2, 4, 0).unwrap();
    assert_eq!(r.expected, 4);
    // one sample alone would not determine B̲
    let om = standard_matrix(2);
    let j = random_compatible_j(2, &om, 0).unwrap();
    let (_, jm) = j_projections(&j);
    assert!(jm.clone().map(|z| z.norm()).rank(1e-10) == 1);
}
