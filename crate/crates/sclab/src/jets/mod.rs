//! Truncated multivariate Taylor jets.
//!
//! A [`Jet`] stores the Taylor coefficients `c_α = ∂^α f / α!` of a smooth
//! function around a base point, for all multi-indices with `|α| <= order`.
//! Arithmetic is truncated polynomial arithmetic, so derivatives of any
//! composition are exact up to rounding.

mod expr;
pub mod fd;
mod layout;
mod ops;

use std::sync::Arc;

pub use expr::Expr;
use layout::{layout, Layout, NONE};

use crate::error::{Error, Result};

/// Largest jet order accepted by the public evaluation entry points.
///
/// Order 6 is what the reduction-then-induction pipeline consumes: the
/// induced curvature needs the base connection at order 4, which in turn
/// needs the chart embedding at order 6.
pub const MAX_ORDER: usize = 6;
/// Largest number of jet variables.
pub const MAX_DIM: usize = 12;

#[derive(Clone)]
pub struct Jet {
    layout: Arc<Layout>,
    c: Vec<f64>,
}

impl std::fmt::Debug for Jet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Jet")
            .field("dim", &self.dim())
            .field("order", &self.order())
            .field("coeffs", &self.c)
            .finish()
    }
}

pub fn check_order(order: usize) -> Result<()> {
    if order > MAX_ORDER {
        return Err(Error::UnsupportedOrder { order, max: MAX_ORDER });
    }
    Ok(())
}

impl Jet {
    pub fn constant(dim: usize, order: usize, value: f64) -> Jet {
        let layout = layout(dim, order);
        let mut c = vec![0.0; layout.len()];
        c[0] = value;
        Jet { layout, c }
    }

    pub fn zero(dim: usize, order: usize) -> Jet {
        Jet::constant(dim, order, 0.0)
    }

    /// The coordinate function `x_i` expanded around `x_i = at`.
    pub fn variable(dim: usize, order: usize, i: usize, at: f64) -> Jet {
        let mut j = Jet::constant(dim, order, at);
        if order > 0 {
            let k = j.layout.up[i];
            j.c[k] = 1.0;
        }
        j
    }

    /// Coordinate jets for all variables at the point `x`.
    pub fn variables(x: &[f64], order: usize) -> Vec<Jet> {
        (0..x.len()).map(|i| Jet::variable(x.len(), order, i, x[i])).collect()
    }

    pub fn dim(&self) -> usize {
        self.layout.dim
    }

    pub fn order(&self) -> usize {
        self.layout.order
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|v| v.is_finite())
    }

    /// Constant jet with the same dimension and order as `self`.
    pub fn lift(&self, value: f64) -> Jet {
        Jet::constant(self.dim(), self.order(), value)
    }

    /// Partial derivative `∂_{vars[0]} ∂_{vars[1]} ... f` at the base point.
    pub fn partial(&self, vars: &[usize]) -> f64 {
        let mut e = vec![0u8; self.dim()];
        for &v in vars {
            e[v] += 1;
        }
        match self.layout.index_of(&e) {
            Some(i) => self.c[i] * self.layout.fact[i],
            None => panic!("partial of order {} requested from a jet of order {}", vars.len(), self.order()),
        }
    }

    pub fn grad(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.partial(&[i])).collect()
    }

    /// Symmetric Hessian, row-major.
    pub fn hessian(&self) -> Vec<f64> {
        let d = self.dim();
        let mut h = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                h[i * d + j] = self.partial(&[i, j]);
            }
        }
        h
    }

    /// Symmetric third-derivative tensor, flattened as `[i][j][k]`.
    pub fn third(&self) -> Vec<f64> {
        let d = self.dim();
        let mut t = vec![0.0; d * d * d];
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    t[(i * d + j) * d + k] = self.partial(&[i, j, k]);
                }
            }
        }
        t
    }

    /// `∂_v` of the jet; the result has order one less.
    pub fn d(&self, v: usize) -> Jet {
        assert!(self.order() >= 1, "cannot differentiate an order-0 jet");
        let lo = layout(self.dim(), self.order() - 1);
        let dim = self.dim();
        let mut c = vec![0.0; lo.len()];
        for (b, cb) in c.iter_mut().enumerate() {
            let k = self.layout.up[b * dim + v];
            debug_assert!(k != NONE);
            *cb = self.c[k] * (lo.exps[b][v] as f64 + 1.0);
        }
        Jet { layout: lo, c }
    }

    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order() {
            return self.clone();
        }
        let lo = layout(self.dim(), order);
        Jet { c: self.c[..lo.len()].to_vec(), layout: lo }
    }

    /// Same function viewed as a jet in `new_dim >= dim` variables, the
    /// extra variables appended at the end and not entering the function.
    pub fn extend_dim(&self, new_dim: usize) -> Jet {
        assert!(new_dim >= self.dim());
        let hi = layout(new_dim, self.order());
        let mut c = vec![0.0; hi.len()];
        for (i, e) in self.layout.exps.iter().enumerate() {
            let mut f = e.clone();
            f.resize(new_dim, 0);
            c[hi.index_of(&f).unwrap()] = self.c[i];
        }
        Jet { layout: hi, c }
    }

    /// Restriction to the coordinate slice spanned by `vars`; the other
    /// variables are frozen at their base values.
    pub fn restrict(&self, vars: &[usize]) -> Jet {
        let lo = layout(vars.len(), self.order());
        let mut c = vec![0.0; lo.len()];
        for (i, e) in lo.exps.iter().enumerate() {
            let mut f = vec![0u8; self.dim()];
            for (k, &v) in vars.iter().enumerate() {
                f[v] = e[k];
            }
            c[i] = self.c[self.layout.index_of(&f).unwrap()];
        }
        Jet { layout: lo, c }
    }

    /// Composition `f(inner - inner(0))` where `self` is the jet of `f` and
    /// `inner[m]` are jets (in some other variables) of the displacements of
    /// the `m`-th argument. Constant parts of `inner` are ignored.
    pub fn substitute(&self, inner: &[Jet]) -> Jet {
        assert_eq!(inner.len(), self.dim());
        let proto = &inner[0];
        let order = proto.order().min(self.order());
        let disp: Vec<Jet> = inner
            .iter()
            .map(|g| {
                let mut g = g.truncate(order);
                g.c[0] = 0.0;
                g
            })
            .collect();
        let n = self.layout.len_upto(order);
        let mut mono: Vec<Jet> = Vec::with_capacity(n);
        mono.push(proto.truncate(order).lift(1.0));
        let mut out = proto.truncate(order).lift(self.c[0]);
        for i in 1..n {
            let m = &mono[self.layout.parent[i]] * &disp[self.layout.first_var[i]];
            if self.c[i] != 0.0 {
                out.axpy(self.c[i], &m);
            }
            mono.push(m);
        }
        out
    }

    /// `self += a * other` (same layout required).
    pub fn axpy(&mut self, a: f64, other: &Jet) {
        let n = self.c.len().min(other.c.len());
        if other.order() < self.order() {
            self.layout = other.layout.clone();
            self.c.truncate(n);
        }
        for i in 0..n {
            self.c[i] += a * other.c[i];
        }
    }

    pub fn scale(&self, a: f64) -> Jet {
        Jet { layout: self.layout.clone(), c: self.c.iter().map(|v| v * a).collect() }
    }

    /// `φ(self)` from the derivatives `φ^{(m)}(value)`, `m = 0..=order`.
    pub fn compose(&self, derivs: &[f64]) -> Jet {
        let k = self.order();
        let mut g = self.clone();
        g.c[0] = 0.0;
        let mut fact = 1.0;
        let coef: Vec<f64> = (0..=k)
            .map(|m| {
                if m > 0 {
                    fact *= m as f64;
                }
                derivs[m] / fact
            })
            .collect();
        let mut out = self.lift(coef[k]);
        for m in (0..k).rev() {
            out = &out * &g;
            out.c[0] += coef[m];
        }
        out
    }

    fn power_derivs(x: f64, p: f64, k: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(k + 1);
        let mut fall = 1.0;
        for m in 0..=k {
            out.push(fall * x.powf(p - m as f64));
            fall *= p - m as f64;
        }
        out
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose(&vec![e; self.order() + 1])
    }

    pub fn sinh(&self) -> Jet {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        let d: Vec<f64> = (0..=self.order()).map(|m| if m % 2 == 0 { s } else { c }).collect();
        self.compose(&d)
    }

    pub fn cosh(&self) -> Jet {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        let d: Vec<f64> = (0..=self.order()).map(|m| if m % 2 == 0 { c } else { s }).collect();
        self.compose(&d)
    }

    pub fn ln(&self) -> Jet {
        let x = self.value();
        let mut d = vec![x.ln()];
        let mut f = 1.0;
        for m in 1..=self.order() {
            d.push(f / x.powi(m as i32));
            f *= -(m as f64);
        }
        self.compose(&d)
    }

    pub fn powf(&self, p: f64) -> Jet {
        self.compose(&Self::power_derivs(self.value(), p, self.order()))
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    pub fn recip(&self) -> Jet {
        self.compose(&Self::power_derivs(self.value(), -1.0, self.order()))
    }

    pub fn powi(&self, n: i32) -> Jet {
        if n < 0 {
            return self.powi(-n).recip();
        }
        let mut out = self.lift(1.0);
        let mut base = self.clone();
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                out = &out * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        out
    }
}

/// Operations shared by plain reals and jets, so that geometric maps can be
/// written once and evaluated either pointwise or with derivatives.
pub trait Scalar:
    Clone
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + std::ops::Neg<Output = Self>
    + std::ops::Add<f64, Output = Self>
    + std::ops::Sub<f64, Output = Self>
    + std::ops::Mul<f64, Output = Self>
    + std::ops::Div<f64, Output = Self>
{
    fn value(&self) -> f64;
    /// A constant of the same kind as `self`.
    fn lift(&self, c: f64) -> Self;
    fn exp(&self) -> Self;
    fn sinh(&self) -> Self;
    fn cosh(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn ln(&self) -> Self;
    fn powf(&self, p: f64) -> Self;
    fn powi(&self, n: i32) -> Self;
}

impl Scalar for f64 {
    fn value(&self) -> f64 {
        *self
    }
    fn lift(&self, c: f64) -> f64 {
        c
    }
    fn exp(&self) -> f64 {
        f64::exp(*self)
    }
    fn sinh(&self) -> f64 {
        f64::sinh(*self)
    }
    fn cosh(&self) -> f64 {
        f64::cosh(*self)
    }
    fn sqrt(&self) -> f64 {
        f64::sqrt(*self)
    }
    fn ln(&self) -> f64 {
        f64::ln(*self)
    }
    fn powf(&self, p: f64) -> f64 {
        f64::powf(*self, p)
    }
    fn powi(&self, n: i32) -> f64 {
        f64::powi(*self, n)
    }
}

impl Scalar for Jet {
    fn value(&self) -> f64 {
        Jet::value(self)
    }
    fn lift(&self, c: f64) -> Jet {
        Jet::lift(self, c)
    }
    fn exp(&self) -> Jet {
        Jet::exp(self)
    }
    fn sinh(&self) -> Jet {
        Jet::sinh(self)
    }
    fn cosh(&self) -> Jet {
        Jet::cosh(self)
    }
    fn sqrt(&self) -> Jet {
        Jet::sqrt(self)
    }
    fn ln(&self) -> Jet {
        Jet::ln(self)
    }
    fn powf(&self, p: f64) -> Jet {
        Jet::powf(self, p)
    }
    fn powi(&self, n: i32) -> Jet {
        Jet::powi(self, n)
    }
}

/// Evaluate a scalar expression to a jet at `x`.
pub fn jet_eval(field: &Expr, x: &[f64], order: usize) -> Result<Jet> {
    check_order(order)?;
    if x.len() > MAX_DIM {
        return Err(Error::DimensionMismatch(format!("{} variables exceed the limit {MAX_DIM}", x.len())));
    }
    if let Some(m) = field.max_coord() {
        if m >= x.len() {
            return Err(Error::DimensionMismatch(format!(
                "expression uses x{} but the point has {} coordinates",
                m + 1,
                x.len()
            )));
        }
    }
    let vars = Jet::variables(x, order);
    let j = field.eval(&vars);
    if !j.is_finite() {
        return Err(Error::NumericDomain(format!("non-finite jet at {x:?}")));
    }
    Ok(j)
}

/// Finite-value guard used by field evaluators.
pub(crate) fn ensure_finite(j: &[Jet], what: &str) -> Result<()> {
    if j.iter().all(Jet::is_finite) {
        Ok(())
    } else {
        Err(Error::NumericDomain(format!("non-finite {what}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn product_of_coordinates() {
        let f = Expr::x(0) * Expr::x(1);
        let j = jet_eval(&f, &[1.0, 2.0], 2).unwrap();
        assert_eq!(j.value(), 2.0);
        assert_eq!(j.grad(), vec![2.0, 1.0]);
        assert_eq!(j.hessian(), vec![0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn order_above_max_is_rejected() {
        let f = Expr::x(0);
        assert!(matches!(jet_eval(&f, &[0.0], MAX_ORDER + 1), Err(Error::UnsupportedOrder { .. })));
    }

    #[test]
    fn sqrt_of_negative_is_domain_error() {
        let f = Expr::x(0).sqrt();
        assert!(matches!(jet_eval(&f, &[-1.0], 1), Err(Error::NumericDomain(_))));
    }

    #[test]
    fn univariate_rules() {
        let x = Jet::variable(1, 4, 0, 0.7);
        let e = x.exp();
        for m in 0..=4 {
            let v = vec![0usize; m];
            assert!(close(e.partial(&v), 0.7f64.exp(), 1e-13));
        }
        let s = x.sinh();
        assert!(close(s.partial(&[0, 0, 0]), 0.7f64.cosh(), 1e-13));
        let r = x.recip();
        assert!(close(r.partial(&[0, 0]), 2.0 / 0.7f64.powi(3), 1e-12));
        let q = x.sqrt();
        assert!(close(q.partial(&[0]), 0.5 / 0.7f64.sqrt(), 1e-13));
        let l = x.ln();
        assert!(close(l.partial(&[0, 0, 0]), 2.0 / 0.7f64.powi(3), 1e-12));
        let p = (&x * &x).powi(-2);
        assert!(close(p.partial(&[0]), -4.0 * 0.7f64.powi(-5), 1e-11));
    }

    #[test]
    fn derivative_lowers_order() {
        let v = Jet::variables(&[0.3, -0.2], 3);
        let f = &(&v[0] * &v[0]) * &v[1];
        let g = f.d(0);
        assert_eq!(g.order(), 2);
        assert!(close(g.value(), 2.0 * 0.3 * -0.2, 1e-15));
        assert!(close(g.partial(&[1]), 0.6, 1e-15));
    }

    #[test]
    fn restrict_and_extend_roundtrip() {
        let v = Jet::variables(&[0.1, 0.2], 3);
        let f = (&v[0] * &v[1]).sinh();
        let g = f.extend_dim(4).restrict(&[0, 1]);
        assert_eq!(f.coeffs(), g.coeffs());
    }

    #[test]
    fn substitute_on_diagonal() {
        // f(x, p) = x * p^2 restricted to p = x gives x^3
        let v = Jet::variables(&[0.5, 0.5], 3);
        let f = &v[0] * &(&v[1] * &v[1]);
        let x = Jet::variable(1, 3, 0, 0.5);
        let g = f.substitute(&[x.clone(), x]);
        assert!(close(g.value(), 0.125, 1e-15));
        assert!(close(g.partial(&[0]), 0.75, 1e-14));
        assert!(close(g.partial(&[0, 0, 0]), 6.0, 1e-13));
    }
}
