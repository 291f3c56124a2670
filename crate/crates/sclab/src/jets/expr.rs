//! Composable scalar field expressions over chart coordinates.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use super::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Zero-based coordinate index.
    Coord(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Exp(Box<Expr>),
    Sinh(Box<Expr>),
    Cosh(Box<Expr>),
    Sqrt(Box<Expr>),
    Ln(Box<Expr>),
    Powi(Box<Expr>, i32),
    Powf(Box<Expr>, f64),
}

impl Expr {
    pub fn c(v: f64) -> Expr {
        Expr::Const(v)
    }

    pub fn x(i: usize) -> Expr {
        Expr::Coord(i)
    }

    pub fn exp(self) -> Expr {
        Expr::Exp(Box::new(self))
    }

    pub fn sinh(self) -> Expr {
        Expr::Sinh(Box::new(self))
    }

    pub fn cosh(self) -> Expr {
        Expr::Cosh(Box::new(self))
    }

    pub fn sqrt(self) -> Expr {
        Expr::Sqrt(Box::new(self))
    }

    pub fn ln(self) -> Expr {
        Expr::Ln(Box::new(self))
    }

    pub fn powi(self, n: i32) -> Expr {
        Expr::Powi(Box::new(self), n)
    }

    pub fn powf(self, p: f64) -> Expr {
        Expr::Powf(Box::new(self), p)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(v) if *v == 0.0)
    }

    /// Largest coordinate index referenced, if any.
    pub fn max_coord(&self) -> Option<usize> {
        use Expr::*;
        match self {
            Const(_) => None,
            Coord(i) => Some(*i),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) => match (a.max_coord(), b.max_coord()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
            Neg(a) | Exp(a) | Sinh(a) | Cosh(a) | Sqrt(a) | Ln(a) | Powi(a, _) | Powf(a, _) => a.max_coord(),
        }
    }

    /// Evaluate with the coordinates replaced by `vars`.
    pub fn eval<S: Scalar>(&self, vars: &[S]) -> S {
        use Expr::*;
        match self {
            Const(v) => vars[0].lift(*v),
            Coord(i) => vars[*i].clone(),
            Add(a, b) => a.eval(vars) + b.eval(vars),
            Sub(a, b) => a.eval(vars) - b.eval(vars),
            Mul(a, b) => match (&**a, &**b) {
                (Const(c), e) | (e, Const(c)) => e.eval(vars) * *c,
                _ => a.eval(vars) * b.eval(vars),
            },
            Div(a, b) => match &**b {
                Const(c) => a.eval(vars) / *c,
                _ => a.eval(vars) / b.eval(vars),
            },
            Neg(a) => -a.eval(vars),
            Exp(a) => a.eval(vars).exp(),
            Sinh(a) => a.eval(vars).sinh(),
            Cosh(a) => a.eval(vars).cosh(),
            Sqrt(a) => a.eval(vars).sqrt(),
            Ln(a) => a.eval(vars).ln(),
            Powi(a, n) => a.eval(vars).powi(*n),
            Powf(a, p) => a.eval(vars).powf(*p),
        }
    }

    /// Symbolic partial derivative with respect to coordinate `v`.
    pub fn diff(&self, v: usize) -> Expr {
        use Expr::*;
        match self {
            Const(_) => Expr::c(0.0),
            Coord(i) => Expr::c(if *i == v { 1.0 } else { 0.0 }),
            Add(a, b) => a.diff(v) + b.diff(v),
            Sub(a, b) => a.diff(v) - b.diff(v),
            Mul(a, b) => a.diff(v) * (**b).clone() + (**a).clone() * b.diff(v),
            Div(a, b) => {
                let num = a.diff(v) * (**b).clone() - (**a).clone() * b.diff(v);
                num / (**b).clone().powi(2)
            }
            Neg(a) => -a.diff(v),
            Exp(a) => self.clone() * a.diff(v),
            Sinh(a) => (**a).clone().cosh() * a.diff(v),
            Cosh(a) => (**a).clone().sinh() * a.diff(v),
            Sqrt(a) => a.diff(v) / (Expr::c(2.0) * self.clone()),
            Ln(a) => a.diff(v) / (**a).clone(),
            Powi(a, n) => {
                if *n == 0 {
                    Expr::c(0.0)
                } else {
                    Expr::c(*n as f64) * (**a).clone().powi(n - 1) * a.diff(v)
                }
            }
            Powf(a, p) => Expr::c(*p) * (**a).clone().powf(p - 1.0) * a.diff(v),
        }
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        match (self, rhs) {
            (Expr::Const(a), Expr::Const(b)) => Expr::c(a + b),
            (a, b) if b.is_zero() => a,
            (a, b) if a.is_zero() => b,
            (a, b) => Expr::Add(Box::new(a), Box::new(b)),
        }
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        match (self, rhs) {
            (Expr::Const(a), Expr::Const(b)) => Expr::c(a - b),
            (a, b) if b.is_zero() => a,
            (a, b) if a.is_zero() => -b,
            (a, b) => Expr::Sub(Box::new(a), Box::new(b)),
        }
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        match (self, rhs) {
            (Expr::Const(a), Expr::Const(b)) => Expr::c(a * b),
            (a, b) if a.is_zero() || b.is_zero() => Expr::c(0.0),
            (Expr::Const(o), b) if o == 1.0 => b,
            (a, Expr::Const(o)) if o == 1.0 => a,
            (a, b) => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }
}

impl Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        match (self, rhs) {
            (Expr::Const(a), Expr::Const(b)) => Expr::c(a / b),
            (a, _) if a.is_zero() => Expr::c(0.0),
            (a, Expr::Const(o)) if o == 1.0 => a,
            (a, b) => Expr::Div(Box::new(a), Box::new(b)),
        }
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        match self {
            Expr::Const(a) => Expr::c(-a),
            Expr::Neg(a) => *a,
            a => Expr::Neg(Box::new(a)),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Expr::*;
        match self {
            Const(v) => write!(f, "{v}"),
            Coord(i) => write!(f, "x{}", i + 1),
            Add(a, b) => write!(f, "({a} + {b})"),
            Sub(a, b) => write!(f, "({a} - {b})"),
            Mul(a, b) => write!(f, "({a} * {b})"),
            Div(a, b) => write!(f, "({a} / {b})"),
            Neg(a) => write!(f, "(-{a})"),
            Exp(a) => write!(f, "exp({a})"),
            Sinh(a) => write!(f, "sinh({a})"),
            Cosh(a) => write!(f, "cosh({a})"),
            Sqrt(a) => write!(f, "sqrt({a})"),
            Ln(a) => write!(f, "ln({a})"),
            Powi(a, n) => write!(f, "({a})^{n}"),
            Powf(a, p) => write!(f, "({a})^{p}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbolic_diff_matches_jet() {
        let e = (Expr::x(0) - Expr::x(1)).sinh() * Expr::x(2) / (Expr::x(0) * Expr::x(0) + Expr::c(1.0)).sqrt();
        let x = [0.3, 0.1, 2.0];
        let j = e.eval(&crate::jets::Jet::variables(&x, 1));
        for v in 0..3 {
            let d = e.diff(v).eval(&x);
            assert!((d - j.partial(&[v])).abs() < 1e-13);
        }
    }

    #[test]
    fn max_coord_reports_highest_index() {
        let e = Expr::x(3).exp() + Expr::x(1);
        assert_eq!(e.max_coord(), Some(3));
        assert_eq!(Expr::c(2.0).max_coord(), None);
    }
}
