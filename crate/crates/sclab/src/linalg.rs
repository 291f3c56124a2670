//! Small dense linear algebra over jets.

use crate::error::{Error, Result};
use crate::jets::Jet;

/// Relative pivot threshold below which a system is declared singular.
const PIVOT_TOL: f64 = 1e-13;

/// Solve `A X = B` with `A` n×n and `B` n×m, both row-major jets.
/// Partial pivoting on the values; a hard error when singular.
pub fn solve(a: &[Jet], b: &[Jet], n: usize, m: usize, what: &str) -> Result<Vec<Jet>> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n * m);
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    let scale = a.iter().map(|v| v.value().abs()).fold(0.0, f64::max).max(1e-300);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&r, &s| a[r * n + col].value().abs().total_cmp(&a[s * n + col].value().abs()))
            .unwrap();
        if a[piv * n + col].value().abs() <= PIVOT_TOL * scale {
            return Err(Error::Singular(what.to_string()));
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            for k in 0..m {
                b.swap(col * m + k, piv * m + k);
            }
        }
        let inv = a[col * n + col].recip();
        for r in col + 1..n {
            if a[r * n + col].coeffs().iter().all(|&v| v == 0.0) {
                continue;
            }
            let f = &a[r * n + col] * &inv;
            for k in col..n {
                let t = &f * &a[col * n + k];
                a[r * n + k] -= t;
            }
            for k in 0..m {
                let t = &f * &b[col * m + k];
                b[r * m + k] -= t;
            }
        }
    }
    let mut x: Vec<Jet> = b.clone();
    for col in (0..n).rev() {
        let inv = a[col * n + col].recip();
        for k in 0..m {
            let mut acc = b[col * m + k].clone();
            for j in col + 1..n {
                acc -= &a[col * n + j] * &x[j * m + k];
            }
            x[col * m + k] = &acc * &inv;
        }
    }
    Ok(x)
}

pub fn identity(n: usize, proto: &Jet) -> Vec<Jet> {
    (0..n * n).map(|k| proto.lift(if k / n == k % n { 1.0 } else { 0.0 })).collect()
}

pub fn inverse(a: &[Jet], n: usize, what: &str) -> Result<Vec<Jet>> {
    solve(a, &identity(n, &a[0]), n, n, what)
}

/// Row-major product of an n×k and a k×m jet matrix.
pub fn matmul(a: &[Jet], b: &[Jet], n: usize, k: usize, m: usize) -> Vec<Jet> {
    let mut out = Vec::with_capacity(n * m);
    for i in 0..n {
        for j in 0..m {
            let mut acc = &a[i * k] * &b[j];
            for l in 1..k {
                acc += &a[i * k + l] * &b[l * m + j];
            }
            out.push(acc);
        }
    }
    out
}

pub fn values(a: &[Jet]) -> Vec<f64> {
    a.iter().map(Jet::value).collect()
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn max_abs_jets(a: &[Jet]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.value().abs()))
}

/// Determinant of a real n×n matrix (row-major).
pub fn det(a: &[f64], n: usize) -> f64 {
    nalgebra::DMatrix::from_row_slice(n, n, a).determinant()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_jet_matrix() {
        let v = Jet::variables(&[0.3, -0.4], 2);
        let one = v[0].lift(1.0);
        let a = vec![&v[0] + 2.0, v[1].clone(), v[0].sinh(), &one + &(&v[1] * &v[1])];
        let inv = inverse(&a, 2, "test").unwrap();
        let prod = matmul(&a, &inv, 2, 2, 2);
        for (k, p) in prod.iter().enumerate() {
            let target = if k % 3 == 0 { 1.0 } else { 0.0 };
            assert!((p.value() - target).abs() < 1e-14);
            assert!(p.coeffs()[1..].iter().all(|c| c.abs() < 1e-13));
        }
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let one = Jet::constant(1, 1, 1.0);
        let a = vec![one.clone(), one.clone(), one.clone(), one.clone()];
        assert!(matches!(inverse(&a, 2, "x"), Err(Error::Singular(_))));
    }
}
