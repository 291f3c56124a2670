use std::f64::consts::PI;

use nalgebra::Matrix4;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::jets::Expr;

fn pt(a: f64, l: f64) -> PhasePoint {
    PhasePoint::new(a, l)
}

fn random_point(rng: &mut ChaCha8Rng) -> PhasePoint {
    pt(rng.random_range(-1.0..1.0), rng.random_range(-2.0..2.0))
}

fn triples(n: usize, seed: u64) -> Vec<[PhasePoint; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| [random_point(&mut rng), random_point(&mut rng), random_point(&mut rng)]).collect()
}

fn quads(n: usize, seed: u64) -> Vec<[PhasePoint; 4]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| [0; 4].map(|_| random_point(&mut rng))).collect()
}

#[test]
fn symmetry_examples() {
    assert_eq!(symmetry(pt(0.0, 0.0), pt(0.7, -1.3)), pt(-0.7, 1.3));
    let x = pt(0.4, -0.9);
    assert!(symmetry(x, x).dist(&x) < 1e-15);
    let s = symmetry(pt(1.0, 2.0), pt(0.0, 0.0));
    assert!(s.dist(&pt(2.0, 4.0 * 1f64.cosh())) < 1e-14);
    assert!((s.l - 6.1723).abs() < 1e-4);
}

#[test]
fn symmetries_are_involutive_symplectic_and_compose() {
    for m in [Model::Curved, Model::Flat] {
        for [x, y, z] in triples(1000, 1) {
            assert!(m.symmetry(x, m.symmetry(x, y)).dist(&y) < 1e-10);
            assert!((symmetry_jacobian(m, x, y) - 1.0).abs() < 1e-12);
            assert!(symmetry_law_residual(m, x, y, z) < 1e-10);
        }
    }
}

#[test]
fn phase_examples() {
    let (x, z) = (pt(0.3, 1.1), pt(-0.8, 0.2));
    assert_eq!(s_can(x, x, z), 0.0);
    assert_eq!(s_can(pt(0.1, 0.0), pt(0.5, 0.0), pt(-0.9, 0.0)), 0.0);
    assert!((s_can(pt(0.0, 0.0), pt(1.0, 0.0), pt(0.0, 1.0)) + 1f64.sinh()).abs() < 1e-15);
    assert!((s_flat(pt(0.0, 0.0), pt(1.0, 0.0), pt(0.0, 1.0)) + 1.0).abs() < 1e-15);
}

#[test]
fn triple_fixed_point_closes_the_chain() {
    let p = pt(0.2, -0.4);
    assert!(triple_fixed_point(p, p, p).unwrap().dist(&p) < 1e-15);
    let collinear = [pt(-0.5, 0.0), pt(0.1, 0.0), pt(0.8, 0.0)];
    let x = triple_fixed_point(collinear[0], collinear[1], collinear[2]).unwrap();
    assert!((x.a - (-0.5 - 0.1 + 0.8)).abs() < 1e-15);
    let back = symmetry(collinear[0], symmetry(collinear[1], symmetry(collinear[2], x)));
    assert!(back.dist(&x) < 1e-12);
    for m in [Model::Curved, Model::Flat] {
        for [x, y, z] in triples(200, 2) {
            let big = m.triple_fixed_point(x, y, z).unwrap();
            assert!(m.symmetry(x, m.symmetry(y, m.symmetry(z, big))).dist(&big) < 1e-10);
            let [bx, by, bz] = m.phi_map(x, y, z).unwrap();
            assert_eq!(bx, big);
            assert!(m.symmetry(x, bz).dist(&bx) < 1e-10);
            assert!(m.symmetry(z, bx).dist(&by) < 1e-15);
        }
    }
    let [a, b, c] = phi_map(p, p, p).unwrap();
    assert!(a.dist(&p) < 1e-15 && b.dist(&p) < 1e-15 && c.dist(&p) < 1e-15);
}

#[test]
fn jacobian_depends_only_on_a() {
    let p = pt(0.3, 0.3);
    assert!(jac_phi(p, p, p).unwrap() > 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for [x, y, z] in triples(100, 3) {
        let j = jac_phi(x, y, z).unwrap();
        assert!(j > 0.0);
        let mut moved = [x, y, z];
        for q in &mut moved {
            q.l += rng.random_range(-3.0..3.0);
        }
        assert!((jac_phi(moved[0], moved[1], moved[2]).unwrap() - j).abs() < 1e-9 * j.max(1.0));
        let c = 1.7;
        let shifted = jac_phi(pt(x.a, x.l + c), pt(y.a, y.l + c), pt(z.a, z.l + c)).unwrap();
        assert!((shifted - j).abs() < 1e-9 * j.max(1.0));
    }
}

// The determinant of Φ in the flat model is that of
// [[1,-1,1],[-1,1,1],[1,1,-1]] ⊗ I₂, i.e. (-4)² = 16.
#[test]
fn flat_jacobian_is_sixteen() {
    for [x, y, z] in triples(20, 4) {
        assert!((Model::Flat.jac_phi(x, y, z).unwrap() - 16.0).abs() < 1e-12);
    }
}

// √Jac_Φ equals the strongly closed amplitude up to the constant factor 4,
// which is the flat value √16.
#[test]
fn jacobian_root_is_four_times_the_strongly_closed_amplitude() {
    let p = Amplitude::strongly_closed();
    let mut worst: f64 = 0.0;
    for [x, y, z] in triples(100, 6) {
        let ratio = amplitude(&Amplitude::JacSqrt, x, y, z).unwrap() / amplitude(&p, x, y, z).unwrap();
        worst = worst.max((ratio / 4.0 - 1.0).abs());
    }
    assert!(worst < 1e-6, "{worst}");
}

#[test]
fn amplitude_examples() {
    let (x, y, z) = (pt(0.2, 0.1), pt(0.5, -1.0), pt(0.5, 2.0));
    assert_eq!(amplitude(&Amplitude::A0, x, y, z).unwrap(), 1.0);
    let one = Amplitude::Pfamily(Arc::new(|_| 1.0));
    for [x, y, z] in triples(20, 7) {
        let a0 = amplitude(&Amplitude::A0, x, y, z).unwrap();
        assert!((amplitude(&one, x, y, z).unwrap() - a0).abs() < 1e-15 * a0);
    }
    let vanishing = Amplitude::Pfamily(Arc::new(|t: f64| t));
    assert!(matches!(amplitude(&vanishing, x, x, z), Err(Error::AmplitudeSingularity(_))));
    assert!(matches!(WkbKernel::new(0.0, Amplitude::A0, Model::Curved), Err(Error::InvalidInput(_))));
}

#[test]
fn poisson_bracket_convention() {
    let a = ExprField::new(Expr::x(0)).unwrap();
    let l = ExprField::new(Expr::x(1)).unwrap();
    let x = pt(0.3, -0.2);
    assert_eq!(poisson_bracket(&a, &l, x), -1.0);
    assert_eq!(poisson_bracket(&l, &a, x), 1.0);
    assert!(ExprField::new(Expr::x(2)).is_err());

    let f = ExprField::new(Expr::x(0) * Expr::x(0) * Expr::x(1) + Expr::x(1).powi(3)).unwrap();
    let g = ExprField::new(Expr::x(0).sinh() - Expr::x(1) * Expr::c(2.0)).unwrap();
    let h = ExprField::new(Expr::x(0) * Expr::x(1) + Expr::c(1.0)).unwrap();
    let fg = ExprField::new(f.0.clone() * g.0.clone()).unwrap();
    let f_plus_2g = ExprField::new(f.0.clone() + g.0.clone() * Expr::c(2.0)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..50 {
        let x = random_point(&mut rng);
        assert_eq!(poisson_bracket(&f, &f, x), 0.0);
        let lin = poisson_bracket(&f_plus_2g, &h, x) - poisson_bracket(&f, &h, x) - 2.0 * poisson_bracket(&g, &h, x);
        assert!(lin.abs() < 1e-10);
        let leibniz = poisson_bracket(&fg, &h, x) - f.value(x) * poisson_bracket(&g, &h, x) - g.value(x) * poisson_bracket(&f, &h, x);
        assert!(leibniz.abs() < 1e-10);
    }
}

/// Closed-form flat star product of two Gaussians: a four-dimensional
/// complex Gaussian integral `∫ exp(-½YᵀKY + bᵀY + c) = 4π²/√det K · exp(½bᵀK⁻¹b + c)`
/// in `Y = (a_y, ℓ_y, a_z, ℓ_z)`.
fn flat_gaussian_star(u: &Gaussian, v: &Gaussian, x: PhasePoint, theta: f64) -> Complex64 {
    let i_th = Complex64::new(0.0, 1.0 / theta);
    let (wu, wv) = (u.w * u.w, v.w * v.w);
    // phase (i/θ)(a_z ℓ_y - a_y ℓ_z) = -½YᵀKY contributes -(i/θ) on the mixed entries
    let mut k = Matrix4::<Complex64>::zeros();
    for (d, w) in [(0, wu), (1, wu), (2, wv), (3, wv)] {
        k[(d, d)] = Complex64::new(1.0 / w, 0.0);
    }
    k[(1, 2)] = -i_th;
    k[(2, 1)] = -i_th;
    k[(0, 3)] = i_th;
    k[(3, 0)] = i_th;
    let b = nalgebra::Vector4::new(
        u.center.a / wu + i_th * x.l,
        u.center.l / wu - i_th * x.a,
        v.center.a / wv - i_th * x.l,
        v.center.l / wv + i_th * x.a,
    );
    let c = -(u.center.a.powi(2) + u.center.l.powi(2)) / (2.0 * wu) - (v.center.a.powi(2) + v.center.l.powi(2)) / (2.0 * wv);
    // every eigenvalue has positive real part, so the principal roots pick the branch
    let root: Complex64 = k.clone().schur().eigenvalues().unwrap().iter().map(|e| e.sqrt()).product();
    let kinv = k.try_inverse().unwrap();
    let quad = (b.transpose() * kinv * b)[(0, 0)];
    let integral = (quad * 0.5 + c).exp() * (4.0 * PI * PI) / root;
    integral / (4.0 * PI * PI * theta * theta)
}

#[test]
fn flat_star_product_matches_the_gaussian_integral() {
    let u = Gaussian::new(0.3, 0.2, 0.7).unwrap();
    let v = Gaussian::new(-0.2, -0.3, 0.8).unwrap();
    for (theta, x) in [(0.5, pt(0.1, 0.15)), (0.2, pt(-0.3, 0.4)), (0.1, pt(0.0, 0.0))] {
        let k = WkbKernel::new(theta, Amplitude::A0, Model::Flat).unwrap();
        let grid = QuadratureGrid::for_gaussians(x, &k, &u, &v, 64, 64).unwrap();
        let s = star_product(&u, &v, &k, &grid, x, 1e-9).unwrap();
        let exact = flat_gaussian_star(&u, &v, x, theta);
        assert!((s.value - exact).norm() < 1e-9, "θ = {theta}: {} vs {exact}", s.value);
    }
}

#[test]
fn star_product_errors_and_zero() {
    let u = Gaussian::new(0.3, 0.2, 0.7).unwrap();
    let v = Gaussian::new(-0.2, -0.3, 0.8).unwrap();
    let x = pt(0.1, 0.1);
    let k = WkbKernel::new(0.2, Amplitude::strongly_closed(), Model::Curved).unwrap();
    let zero = ExprField::new(Expr::c(0.0)).unwrap();
    let grid = QuadratureGrid::for_gaussians(x, &k, &u, &v, 16, 16).unwrap();
    assert_eq!(star_product(&zero, &v, &k, &grid, x, 1e-12).unwrap().value, Complex64::new(0.0, 0.0));

    let tight = QuadratureGrid::new([-1.0, 1.0], [-1.0, 1.0], [-1.0, 1.0], [-1.0, 1.0], 16, 16).unwrap();
    assert!(matches!(star_product(&u, &v, &k, &tight, x, 1e-6), Err(Error::Truncation(_))));
    let coarse = QuadratureGrid::for_gaussians(x, &k, &u, &v, 4, 4).unwrap();
    let r = star_product(&u, &v, &k, &coarse, x, 1e-10);
    assert!(matches!(r, Err(Error::NotConverged { .. })), "{r:?}");
    assert!(QuadratureGrid::new([1.0, 0.0], [-1.0, 1.0], [-1.0, 1.0], [-1.0, 1.0], 16, 16).is_err());
}

#[test]
fn star_product_is_bilinear() {
    let u1 = Gaussian::new(0.3, 0.2, 0.7).unwrap();
    let u2 = Gaussian::new(-0.1, 0.4, 0.6).unwrap();
    let v = Gaussian::new(-0.2, -0.3, 0.8).unwrap();
    let x = pt(0.05, 0.1);
    let k = WkbKernel::new(0.3, Amplitude::A0, Model::Curved).unwrap();
    struct Combo<'a>(&'a Gaussian, &'a Gaussian, f64);
    impl PhaseField for Combo<'_> {
        fn value(&self, p: PhasePoint) -> f64 {
            self.0.value(p) + self.2 * self.1.value(p)
        }
        fn grad(&self, p: PhasePoint) -> (f64, f64) {
            let (a, b) = (self.0.grad(p), self.1.grad(p));
            (a.0 + self.2 * b.0, a.1 + self.2 * b.1)
        }
    }
    // one box covering both summands
    let grid = QuadratureGrid::new([-7.0, 7.0], [-6.0, 6.0], [-7.0, 7.0], [-6.5, 6.5], 96, 64).unwrap();
    let s = |f: &dyn PhaseField| star_product_with(f, &v, &k, &grid, x).unwrap().value;
    let lhs = s(&Combo(&u1, &u2, -1.5));
    let rhs = s(&u1) - s(&u2) * 1.5;
    assert!((lhs - rhs).norm() < 1e-10);
}

// Measured first-order term: `u⋆v - uv ≈ κ(θ/2i){u,v}` with κ → -2, i.e.
// `u⋆v = uv + iθ{u,v} + O(θ²)` under `{a,ℓ} = -1`.
#[test]
fn first_order_coefficient_is_minus_two() {
    let u = Gaussian::new(0.3, 0.2, 0.7).unwrap();
    let v = Gaussian::new(-0.2, -0.3, 0.8).unwrap();
    let x = pt(0.1, 0.15);
    for m in [Model::Flat, Model::Curved] {
        let k = WkbKernel::new(0.025, Amplitude::strongly_closed(), m).unwrap();
        let c = first_order_coefficient(&u, &v, x, &k, (64, 64)).unwrap();
        assert!((c - Complex64::new(-2.0, 0.0)).norm() < 1e-2, "{m:?}: {c}");
    }
    let centered = Gaussian::new(0.0, 0.0, 0.7).unwrap();
    let k = WkbKernel::new(0.1, Amplitude::A0, Model::Curved).unwrap();
    assert!(first_order_coefficient(&centered, &centered, pt(0.0, 0.0), &k, (32, 32)).is_err());
}

#[test]
fn expansion_residual_is_second_order_with_calibrated_term() {
    let u = Gaussian::new(0.3, 0.2, 0.7).unwrap();
    let v = Gaussian::new(-0.2, -0.3, 0.8).unwrap();
    let x = pt(0.1, 0.15);
    let k = WkbKernel::new(0.2, Amplitude::strongly_closed(), Model::Curved).unwrap();
    let thetas = [0.4, 0.2, 0.1, 0.05];
    let calibrated = expansion_sweep(&u, &v, x, &k, &thetas, (64, 64), -2.0).unwrap();
    assert!(calibrated.slope >= 1.8, "{}", calibrated.slope);
    assert!(calibrated.refinement_margin() > 1e3);
    // the displayed normalization leaves a first-order residual
    let literal = expansion_sweep(&u, &v, x, &k, &thetas, (64, 64), 1.0).unwrap();
    assert!(literal.slope < 1.5, "{}", literal.slope);
}

#[test]
fn admissibility_and_antisymmetry() {
    let samples = quads(1000, 9);
    let flat = admissibility(Model::Flat, &samples);
    assert!(flat.max() < 1e-12, "{flat:?}");
    let curved = admissibility(Model::Curved, &samples);
    assert!(curved.max() < 1e-10, "{curved:?}");
}

#[test]
fn cocycle_contrast() {
    let samples = quads(500, 10);
    assert!(cocycle_defect(Model::Flat, &samples) < 1e-12);
    assert!(cocycle_defect(Model::Curved, &samples) > 1e-3);
    let repeated: Vec<[PhasePoint; 4]> = samples.iter().map(|&[x, y, z, _]| [x, y, y, z]).collect();
    assert!(cocycle_defect(Model::Curved, &repeated) < 1e-15);
}

#[test]
fn flat_barycentre_makes_the_phase_geometrically_associative() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let ts: Vec<PhasePoint> = (0..100).map(|_| random_point(&mut rng)).collect();
    for quad in quads(10, 12) {
        let probes = [random_point(&mut rng), random_point(&mut rng)];
        let b = find_barycentre(Model::Flat, quad, probes).unwrap();
        assert!(geometric_associativity(Model::Flat, b.g, quad, &ts) < 1e-8);
    }
    let p = pt(0.4, -0.6);
    assert_eq!(geometric_associativity(Model::Curved, p, [p; 4], &ts), 0.0);
}

#[test]
fn curved_phase_has_no_barycentre() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let ts: Vec<PhasePoint> = (0..100).map(|_| random_point(&mut rng)).collect();
    for quad in quads(5, 14) {
        let mut best = f64::INFINITY;
        for i in 0..41 {
            for j in 0..41 {
                let g = pt(-2.0 + 0.1 * i as f64, -4.0 + 0.2 * j as f64);
                best = best.min(geometric_associativity(Model::Curved, g, quad, &ts));
            }
        }
        let probes = [ts[0], ts[1]];
        if let Ok(b) = find_barycentre(Model::Curved, quad, probes) {
            best = best.min(geometric_associativity(Model::Curved, b.g, quad, &ts));
        }
        assert!(best > 1e-3, "{best}");
    }
}
