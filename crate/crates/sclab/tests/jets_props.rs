use proptest::prelude::*;
use sclab::jets::{fd, jet_eval, Expr, Jet};

fn x(i: usize) -> Expr {
    Expr::x(i)
}

fn c(v: f64) -> Expr {
    Expr::c(v)
}

/// `k₀ exp(k₁x₁ + k₂x₂) + sinh(k₃x₁x₂) + (k₄ + x₁²)x₂³ + ln(2 + x₁²) / cosh(x₂)`
fn sample_field(k: &[f64]) -> Expr {
    c(k[0]) * (c(k[1]) * x(0) + c(k[2]) * x(1)).exp()
        + (c(k[3]) * x(0) * x(1)).sinh()
        + (c(k[4]) + x(0).powi(2)) * x(1).powi(3)
        + (c(2.0) + x(0) * x(0)).ln() / x(1).cosh()
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 5)
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 2)
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(p, q)| (p - q).abs() <= tol * (1.0 + q.abs()))
}

proptest! {
    #[test]
    fn jets_agree_with_finite_differences(k in coeffs(), p in point()) {
        let e = sample_field(&k);
        let f = |y: &[f64]| e.eval(y);
        let j = jet_eval(&e, &p, 3).unwrap();
        prop_assert!((j.value() - f(&p)).abs() < 1e-13);
        prop_assert!(close(&j.grad(), &fd::gradient(&f, &p), 1e-7));
        prop_assert!(close(&j.hessian(), &fd::hessian(&f, &p), 1e-5));
        prop_assert!(close(&j.third(), &fd::third(&f, &p), 1e-4));
    }

    #[test]
    fn product_rule(k in coeffs(), m in coeffs(), p in point()) {
        let (f, g) = (jet_eval(&sample_field(&k), &p, 2).unwrap(), jet_eval(&sample_field(&m), &p, 2).unwrap());
        let fg = &f * &g;
        let (df, dg) = (f.grad(), g.grad());
        let expect: Vec<f64> = (0..2).map(|i| df[i] * g.value() + f.value() * dg[i]).collect();
        prop_assert!(close(&fg.grad(), &expect, 1e-12));
        let (hf, hg, h) = (f.hessian(), g.hessian(), fg.hessian());
        for i in 0..2 {
            for l in 0..2 {
                let v = hf[i * 2 + l] * g.value() + df[i] * dg[l] + df[l] * dg[i] + f.value() * hg[i * 2 + l];
                prop_assert!((h[i * 2 + l] - v).abs() < 1e-10 * (1.0 + v.abs()));
            }
        }
    }

    #[test]
    fn exp_of_a_jet_follows_the_chain_rule(k in coeffs(), p in point()) {
        let f = jet_eval(&sample_field(&k), &p, 2).unwrap();
        let ef: Jet = f.exp();
        let (v, g, h) = (f.value().exp(), f.grad(), f.hessian());
        let grad: Vec<f64> = g.iter().map(|d| v * d).collect();
        prop_assert!(close(&ef.grad(), &grad, 1e-12));
        let hess: Vec<f64> = (0..4).map(|ij| v * (h[ij] + g[ij / 2] * g[ij % 2])).collect();
        prop_assert!(close(&ef.hessian(), &hess, 1e-10));
    }
}
