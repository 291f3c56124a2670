use super::*;
use crate::connlab::{closedness_defect, connection_check, ExteriorDerivative, RICCI_TYPE_TOL};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn generic_a(size: usize, seed: u64) -> (SpElement, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let a = SpElement::random(size, &mut rng, 1.0).unwrap();
        let v: Vec<f64> = (0..size).map(|_| rng.random_range(-1.0..1.0)).collect();
        if a.hamiltonian(&v) > 0.2 {
            let x0 = sigma_project(&a, &v).unwrap();
            if build_chart(&a, &x0, 0.3).is_ok() {
                return (a, x0);
            }
        }
    }
}

#[test]
fn sigma_project_examples() {
    let j = SpElement::j0(4).unwrap();
    assert_eq!(sigma_project(&j, &[2.0, 0.0, 0.0, 0.0]).unwrap(), vec![1.0, 0.0, 0.0, 0.0]);
    let v = [0.3, -0.2, 0.5, 0.1];
    let p = sigma_project(&j, &v).unwrap();
    let pp = sigma_project(&j, &p).unwrap();
    let scaled = sigma_project(&j, &v.map(|c| 3.7 * c)).unwrap();
    for k in 0..4 {
        assert!((pp[k] - p[k]).abs() < 1e-15);
        assert!((scaled[k] - p[k]).abs() < 1e-15);
    }
    let neg = SpElement::new(4, j.matrix().iter().map(|v| -v).collect()).unwrap();
    assert!(matches!(sigma_project(&neg, &v), Err(Error::OffCone(_))));
}

#[test]
fn membership_is_enforced() {
    let mut m = SpElement::j0(4).unwrap().matrix().to_vec();
    m[0] = 1.0;
    assert!(matches!(SpElement::new(4, m), Err(Error::InvalidInput(_))));
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for size in [4, 6, 8] {
        assert!(SpElement::random(size, &mut rng, 1.0).unwrap().residual() < 1e-13);
        assert!(symplectic_residual(&random_symplectic(size, &mut rng, 0.5), size) < 1e-12);
    }
}

#[test]
fn chart_basics() {
    let j = SpElement::j0(4).unwrap();
    let chart = build_chart(&j, &e0(4), 0.3).unwrap();
    assert_eq!(chart.embed(&[0.0, 0.0]).unwrap(), e0(4));
    let x = chart.embed(&[0.1, 0.0]).unwrap();
    assert!((j.hamiltonian(&x) - 1.0).abs() < 1e-12);
    let std = standard_matrix(2);
    let om = chart.reduced_form_at(&[0.0, 0.0]).unwrap();
    assert!(max_dev(&om, &std) < 1e-14);
    // injective on a grid
    let mut pts = Vec::new();
    for a in 0..10 {
        for b in 0..10 {
            let y = [-0.2 + 0.04 * a as f64, -0.2 + 0.04 * b as f64];
            pts.push(chart.embed(&y).unwrap());
        }
    }
    for i in 0..pts.len() {
        for k in i + 1..pts.len() {
            assert!(max_dev(&pts[i], &pts[k]) > 1e-4);
        }
    }
}

#[test]
fn chart_too_large_and_bad_frames() {
    // A with Ω′A = diag(1, -1, 1, -1): the normalizer becomes negative far out
    let s = [1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, -1.0];
    let a = SpElement::from_symmetric(4, &s).unwrap();
    let x0 = e0(4);
    assert!(build_chart(&a, &x0, 0.5).is_ok());
    assert!(matches!(build_chart(&a, &x0, 2.0), Err(Error::ChartTooLarge { .. })));
    assert!(matches!(build_chart(&a, &[0.5, 0.0, 0.0, 0.0], 0.5), Err(Error::Precondition(_))));
    let frame = vec![vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 0.0, 0.0, 1.0]];
    assert!(matches!(build_chart_with_frame(&a, &x0, frame, 0.3), Err(Error::DegenerateHorizontal(_))));
}

#[test]
fn reduced_form_is_symplectic() {
    let (a, x0) = generic_a(6, 11);
    let chart = build_chart(&a, &x0, 0.3).unwrap();
    let form = chart.form();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for y in chart.sample_points(50, &mut rng) {
        let om = form.omega(&y, 1).unwrap();
        let v = linalg::values(&om);
        for i in 0..4 {
            for j in 0..4 {
                assert!((v[i * 4 + j] + v[j * 4 + i]).abs() < 1e-14);
            }
        }
        assert!(linalg::det(&v, 4).abs() > 1e-6);
        assert!(closedness_defect(&om, 4) < 1e-8);
    }
}

#[test]
fn potential_is_a_primitive() {
    let (a, x0) = generic_a(6, 3);
    let chart = build_chart(&a, &x0, 0.3).unwrap();
    let exact = ExteriorDerivative { lambda: Arc::new(chart.potential()) };
    let y = [0.05, -0.1, 0.07, 0.02];
    let w1 = linalg::values(&exact.omega(&y, 2).unwrap());
    let w2 = linalg::values(&chart.form().omega(&y, 2).unwrap());
    assert!(max_dev(&w1, &w2) < 1e-12);
}

#[test]
fn reduced_connection_is_symplectic_and_ricci_type() {
    for (a, x0) in [(SpElement::j0(4).unwrap(), e0(4)), generic_a(4, 7), generic_a(6, 8)] {
        let chart = build_chart(&a, &x0, 0.3).unwrap();
        let conn = chart.connection();
        let form = chart.form();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut curved = 0.0f64;
        for y in chart.sample_points(5, &mut rng) {
            let r = connection_check(&conn, &form, &y).unwrap();
            assert!(r.torsion < 1e-10, "{r:?}");
            assert!(r.nabla_omega < 1e-8, "{r:?}");
            assert!(r.bianchi < 1e-8 && r.ricci_symmetry < 1e-8 && r.ricci_trace_relation < 1e-8, "{r:?}");
            assert!(r.w_norm < 1e-7, "{r:?}");
            assert!(r.preferred < 1e-7, "{r:?}");
            let p = PointData::at(&conn, &form, &y, 1).unwrap();
            curved = curved.max(linalg::max_abs_jets(&p.curvature()));
        }
        assert!(curved > 1e-2);
    }
}

#[test]
fn nilpotent_rank_one_gives_flat_reduction() {
    // A w = -Ω′(v, w) v, with Ω′(x, Ax) = Ω′(v, x)² and A² = 0
    let v = [0.0, 0.0, -1.0, 0.0];
    let mut m = vec![0.0; 16];
    for r in 0..4 {
        for c in 0..4 {
            let mut ec = [0.0; 4];
            ec[c] = 1.0;
            m[r * 4 + c] = -omega_prime(&v, &ec) * v[r];
        }
    }
    let a = SpElement::new(4, m).unwrap();
    let chart = build_chart(&a, &e0(4), 0.3).unwrap();
    let (rho, u, f) = formula_invariants(&chart, &[0.0, 0.0]).unwrap();
    assert!(linalg::max_abs(&rho) < 1e-14 && linalg::max_abs(&u) < 1e-14 && f.abs() < 1e-14);
    let p = PointData::at(&chart.connection(), &chart.form(), &[0.05, 0.1], 1).unwrap();
    let c = CurvatureData::new(&p);
    assert!(linalg::max_abs_jets(&c.ricci) < 1e-10);
    assert!(linalg::max_abs_jets(&c.r) < 1e-10);
}

#[test]
fn certification_matches_pullback_formulas() {
    for (a, x0) in [(SpElement::j0(4).unwrap(), e0(4)), generic_a(4, 21), (SpElement::j0(6).unwrap(), e0(6)), generic_a(6, 22)] {
        let chart = build_chart(&a, &x0, 0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pts = chart.sample_points(6, &mut rng);
        let rep = certification(&chart, &pts, RICCI_TYPE_TOL).unwrap();
        eprintln!(
            "N={} rho {:e} u {:e} f {:e} K {:e} spread {:e}",
            a.size(),
            rep.rho_dev,
            rep.u_dev,
            rep.f_dev,
            rep.k_mean,
            rep.k_spread
        );
        let p = &rep.points[0];
        eprintln!("  rho {:?}\n  rhoF {:?}\n  u {:?}\n  uF {:?}\n  f {} fF {}", p.rho, p.rho_formula, p.u, p.u_formula, p.f, p.f_formula);
        assert!(rep.rho_dev < 1e-6 && rep.u_dev < 1e-6 && rep.f_dev < 1e-6);
        assert!(rep.k_spread < 1e-6);
        assert!(rep.rebuild_max < 1e-7);
        certify_reduction(&chart, &pts, 1e-6).unwrap();
    }
}

#[test]
fn a_tilde_zero_data() {
    for d in [2, 4, 6] {
        let a = a_tilde(&vec![0.0; d * d], &vec![0.0; d], 0.0).unwrap();
        let big = d + 2;
        let m = a.matrix();
        let nz: Vec<(usize, usize)> = (0..big * big).filter(|&k| m[k] != 0.0).map(|k| (k / big, k % big)).collect();
        assert_eq!(nz, vec![(d / 2 + 1, 0)]);
        assert_eq!(a.hamiltonian(&e0(big)), 1.0);
    }
    let mut bad = vec![0.0; 4];
    bad[0] = 1.0;
    assert!(matches!(a_tilde(&bad, &[0.0, 0.0], 0.0), Err(Error::InvalidInput(_))));
}

fn random_data(d: usize, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>, f64) {
    let rho = SpElement::random(d + 2, rng, 1.0).unwrap(); // only used for its size class
    let _ = rho;
    let mut s = vec![0.0; d * d];
    for i in 0..d {
        for j in i..d {
            let v = rng.random_range(-1.0..1.0);
            s[i * d + j] = v;
            s[j * d + i] = v;
        }
    }
    let om = standard_matrix(d);
    let rho: Vec<f64> = matmul(&om, &s, d).iter().map(|v| -v).collect();
    let u: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    (rho, u, rng.random_range(-1.0..1.0))
}

#[test]
fn a_tilde_roundtrip() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for d in [2, 4] {
        for _ in 0..3 {
            let (rho, u, f) = random_data(d, &mut rng);
            let a = a_tilde(&rho, &u, f).unwrap();
            assert!(a.residual() < 1e-12);
            let chart = build_chart(&a, &e0(d + 2), 0.1).unwrap();
            for (k, fr) in chart.frame().iter().enumerate() {
                let mut e = vec![0.0; d + 2];
                e[block_pos(d / 2, k + 2)] = 1.0;
                assert!(max_dev(fr, &e) < 1e-15);
            }
            let inv = connlab::ricci_type_invariants(&chart.connection(), &chart.form(), &vec![0.0; d], RICCI_TYPE_TOL).unwrap();
            eprintln!("d={d} rho {:e} u {:e} f {:e}", max_dev(&inv.rho, &rho), max_dev(&inv.u, &u), (inv.f - f).abs());
            assert!(max_dev(&inv.rho, &rho) < 1e-5);
            assert!(max_dev(&inv.u, &u) < 1e-5);
            assert!((inv.f - f).abs() < 1e-5);
        }
    }
}

#[test]
fn conjugate_models_agree() {
    // g = id on (e0, e_{n+1}) and a random h ∈ Sp(2n) on the rest fixes the base data;
    // the invariants at the centre transform by h.
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let d = 4;
    let n = d / 2;
    let big = d + 2;
    let (rho, u, f) = random_data(d, &mut rng);
    let a = a_tilde(&rho, &u, f).unwrap();
    let h = random_symplectic(d, &mut rng, 0.4);
    let mut g = vec![0.0; big * big];
    g[0] = 1.0;
    g[(n + 1) * big + n + 1] = 1.0;
    for r in 0..d {
        for c in 0..d {
            g[block_pos(n, r + 2) * big + block_pos(n, c + 2)] = h[r * d + c];
        }
    }
    let a2 = a.conjugate(&g).unwrap();
    let c1 = build_chart(&a, &e0(big), 0.1).unwrap();
    let c2 = build_chart_with_frame(&a2, &e0(big), c1.frame().to_vec(), 0.1).unwrap();
    let i1 = connlab::ricci_type_invariants(&c1.connection(), &c1.form(), &[0.0; 4], RICCI_TYPE_TOL).unwrap();
    let i2 = connlab::ricci_type_invariants(&c2.connection(), &c2.form(), &[0.0; 4], RICCI_TYPE_TOL).unwrap();
    // ρ' = h ρ h⁻¹, U' = h U, K' = K
    let hinv = {
        let om = standard_matrix(d);
        matmul(&om, &matmul(&transpose(&h, d), &om, d), d).iter().map(|v| -v).collect::<Vec<_>>()
    };
    let rho_t = matmul(&h, &matmul(&i1.rho, &hinv, d), d);
    let u_t = matvec(&h, &i1.u);
    assert!(max_dev(&i2.rho, &rho_t) < 1e-6);
    assert!(max_dev(&i2.u, &u_t) < 1e-6);
    assert!((i1.k - i2.k).abs() < 1e-6);
}
