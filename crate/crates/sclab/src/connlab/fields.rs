//! Symplectic forms and connections given as fields on a chart.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jets::{check_order, ensure_finite, Expr, Jet};
use crate::linalg;

use super::tensor;

/// A symplectic form on a coordinate chart, evaluated as jets.
pub trait SymplecticForm: Send + Sync {
    fn dim(&self) -> usize;
    /// `ω_ij` row-major.
    fn omega(&self, x: &[f64], order: usize) -> Result<Vec<Jet>>;
}

/// A linear connection on a coordinate chart, evaluated as jets.
pub trait Connection: Send + Sync {
    fn dim(&self) -> usize;
    /// `Γ^k_ij` stored at `(k * d + i) * d + j`, with `∇_{∂i} ∂j = Γ^k_ij ∂k`.
    fn gamma(&self, x: &[f64], order: usize) -> Result<Vec<Jet>>;
}

pub type FormRef = Arc<dyn SymplecticForm>;
pub type ConnRef = Arc<dyn Connection>;

pub(crate) fn check_point(d: usize, x: &[f64]) -> Result<()> {
    if x.len() != d {
        return Err(Error::DimensionMismatch(format!("point has {} coordinates, chart has {d}", x.len())));
    }
    Ok(())
}

pub(crate) fn eval_all(exprs: &[Expr], x: &[f64], order: usize, what: &str) -> Result<Vec<Jet>> {
    check_order(order)?;
    let vars = Jet::variables(x, order);
    let out: Vec<Jet> = exprs.iter().map(|e| e.eval(&vars)).collect();
    ensure_finite(&out, what)?;
    Ok(out)
}

fn check_coords(exprs: &[Expr], d: usize) -> Result<()> {
    for e in exprs {
        if let Some(m) = e.max_coord() {
            if m >= d {
                return Err(Error::DimensionMismatch(format!("expression {e} uses x{} on a {d}-dimensional chart", m + 1)));
            }
        }
    }
    Ok(())
}

pub(crate) fn check_even_dim(d: usize) -> Result<()> {
    if d == 0 || d % 2 != 0 {
        return Err(Error::UnsupportedDimension(d));
    }
    Ok(())
}

/// Reject forms that are numerically degenerate at the point.
pub fn check_nondegenerate(omega: &[Jet], d: usize) -> Result<()> {
    let det = linalg::det(&linalg::values(omega), d);
    if !(det.abs() > 1e-12) {
        return Err(Error::DegenerateForm(format!("det ω = {det:e}")));
    }
    Ok(())
}

/// Antisymmetric form from expressions.
#[derive(Clone, Debug)]
pub struct ExprForm {
    d: usize,
    entries: Vec<Expr>,
}

impl ExprForm {
    /// From the strictly upper triangular entries `ω_ij`, `i < j`, row by row.
    pub fn from_upper(d: usize, upper: Vec<Expr>) -> Result<ExprForm> {
        check_even_dim(d)?;
        if upper.len() != d * (d - 1) / 2 {
            return Err(Error::DimensionMismatch(format!(
                "{} upper entries given, {} expected",
                upper.len(),
                d * (d - 1) / 2
            )));
        }
        check_coords(&upper, d)?;
        let mut entries = vec![Expr::c(0.0); d * d];
        let mut it = upper.into_iter();
        for i in 0..d {
            for j in i + 1..d {
                let e = it.next().unwrap();
                entries[j * d + i] = -e.clone();
                entries[i * d + j] = e;
            }
        }
        Ok(ExprForm { d, entries })
    }

    /// Constant form from a full antisymmetric matrix.
    pub fn constant(d: usize, m: &[f64]) -> Result<ExprForm> {
        if m.len() != d * d {
            return Err(Error::DimensionMismatch("form matrix has wrong size".into()));
        }
        for i in 0..d {
            for j in 0..d {
                if (m[i * d + j] + m[j * d + i]).abs() > 1e-14 {
                    return Err(Error::InvalidInput("form matrix is not antisymmetric".into()));
                }
            }
        }
        let mut upper = Vec::new();
        for i in 0..d {
            for j in i + 1..d {
                upper.push(Expr::c(m[i * d + j]));
            }
        }
        ExprForm::from_upper(d, upper)
    }

    /// `Σ dx_i ∧ dx_{n+i}`.
    pub fn standard(d: usize) -> ExprForm {
        ExprForm::constant(d, &standard_matrix(d)).expect("standard form")
    }

    /// `ω = dλ` for a 1-form `λ = Σ λ_i dx_i`.
    pub fn exact(lambda: &[Expr]) -> Result<ExprForm> {
        let d = lambda.len();
        check_coords(lambda, d)?;
        let mut upper = Vec::new();
        for i in 0..d {
            for j in i + 1..d {
                upper.push(lambda[j].diff(i) - lambda[i].diff(j));
            }
        }
        ExprForm::from_upper(d, upper)
    }

    pub fn entries(&self) -> &[Expr] {
        &self.entries
    }
}

/// Standard symplectic matrix `[[0, I], [-I, 0]]`.
pub fn standard_matrix(d: usize) -> Vec<f64> {
    let n = d / 2;
    let mut m = vec![0.0; d * d];
    for i in 0..n {
        m[i * d + n + i] = 1.0;
        m[(n + i) * d + i] = -1.0;
    }
    m
}

impl SymplecticForm for ExprForm {
    fn dim(&self) -> usize {
        self.d
    }

    fn omega(&self, x: &[f64], order: usize) -> Result<Vec<Jet>> {
        check_point(self.d, x)?;
        eval_all(&self.entries, x, order, "symplectic form")
    }
}

/// Connection with Christoffel symbols given by expressions.
#[derive(Clone, Debug)]
pub struct ExprConnection {
    d: usize,
    gamma: Vec<Expr>,
}

impl ExprConnection {
    /// `gamma[(k * d + i) * d + j] = Γ^k_ij`.
    pub fn new(d: usize, gamma: Vec<Expr>) -> Result<ExprConnection> {
        if gamma.len() != d * d * d {
            return Err(Error::DimensionMismatch(format!("{} Christoffel symbols for dimension {d}", gamma.len())));
        }
        check_coords(&gamma, d)?;
        Ok(ExprConnection { d, gamma })
    }

    pub fn flat(d: usize) -> ExprConnection {
        ExprConnection { d, gamma: vec![Expr::c(0.0); d * d * d] }
    }

    pub fn symbols(&self) -> &[Expr] {
        &self.gamma
    }
}

impl Connection for ExprConnection {
    fn dim(&self) -> usize {
        self.d
    }

    fn gamma(&self, x: &[f64], order: usize) -> Result<Vec<Jet>> {
        check_point(self.d, x)?;
        eval_all(&self.gamma, x, order, "Christoffel symbols")
    }
}

/// Exterior derivative check: largest `|∂_i ω_jk + ∂_j ω_ki + ∂_k ω_ij|`.
pub fn closedness_defect(omega: &[Jet], d: usize) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                let v = omega[j * d + k].partial(&[i]) + omega[k * d + i].partial(&[j]) + omega[i * d + j].partial(&[k]);
                worst = worst.max(v.abs());
            }
        }
    }
    worst
}

/// `∇ = ∇⁰ + ⅓ N(X,Y) + ⅓ N(Y,X)` where `(∇⁰_X ω)(Y,Z) = ω(N(X,Y),Z)`.
pub struct Symplectized {
    base: ConnRef,
    form: FormRef,
}

/// Turn a torsion-free connection into a torsion-free ω-parallel one.
pub fn symplectize(base: ConnRef, form: FormRef) -> Result<Symplectized> {
    if base.dim() != form.dim() {
        return Err(Error::DimensionMismatch("connection and form dimensions differ".into()));
    }
    check_even_dim(form.dim())?;
    Ok(Symplectized { base, form })
}

/// Tolerance for the preconditions checked on every evaluation.
const PRECONDITION_TOL: f64 = 1e-9;

impl Connection for Symplectized {
    fn dim(&self) -> usize {
        self.form.dim()
    }

    fn gamma(&self, x: &[f64], order: usize) -> Result<Vec<Jet>> {
        check_order(order)?;
        let d = self.dim();
        let g0 = self.base.gamma(x, order)?;
        let omega = self.form.omega(x, order + 1)?;
        check_nondegenerate(&omega, d)?;
        let tor = linalg::max_abs_jets(&tensor::torsion(&g0, d));
        if tor > PRECONDITION_TOL {
            return Err(Error::Precondition(format!("base connection has torsion {tor:e}")));
        }
        let closed = closedness_defect(&omega, d);
        if closed > PRECONDITION_TOL {
            return Err(Error::Precondition(format!("form is not closed: |dω| = {closed:e}")));
        }
        let omega_lo: Vec<Jet> = omega.iter().map(|w| w.truncate(order)).collect();
        let inv = linalg::inverse(&omega_lo, d, "ω")?;
        let nw = tensor::nabla_omega(&omega, &g0, d);
        let mut n = Vec::with_capacity(d * d * d);
        for m in 0..d {
            for i in 0..d {
                for j in 0..d {
                    let mut acc = &nw[(i * d + j) * d] * &inv[m];
                    for k in 1..d {
                        acc += &nw[(i * d + j) * d + k] * &inv[k * d + m];
                    }
                    n.push(acc);
                }
            }
        }
        let mut out = g0;
        for m in 0..d {
            for i in 0..d {
                for j in 0..d {
                    let s = &n[(m * d + i) * d + j] + &n[(m * d + j) * d + i];
                    out[(m * d + i) * d + j].axpy(1.0 / 3.0, &s);
                }
            }
        }
        Ok(out)
    }
}

/// `∇ + S` where `ω(S(X,Y),Z)` is the symmetrization of the given 3-tensor.
pub struct Perturbed {
    base: ConnRef,
    form: FormRef,
    s: Vec<Expr>,
}

/// Add a totally symmetric (after lowering with ω) term to a connection.
/// `s[(i * d + j) * d + k]` is symmetrized over all index permutations.
pub fn add_symmetric(base: ConnRef, form: FormRef, s: Vec<Expr>) -> Result<Perturbed> {
    let d = form.dim();
    if base.dim() != d || s.len() != d * d * d {
        return Err(Error::DimensionMismatch("perturbation does not match the chart".into()));
    }
    check_coords(&s, d)?;
    Ok(Perturbed { base, form, s })
}

impl Connection for Perturbed {
    fn dim(&self) -> usize {
        self.form.dim()
    }

    fn gamma(&self, x: &[f64], order: usize) -> Result<Vec<Jet>> {
        let d = self.dim();
        let mut g = self.base.gamma(x, order)?;
        let raw = eval_all(&self.s, x, order, "perturbation")?;
        let sym = tensor::symmetrize3(&raw, d);
        let omega = self.form.omega(x, order)?;
        check_nondegenerate(&omega, d)?;
        let inv = linalg::inverse(&omega, d, "ω")?;
        for m in 0..d {
            for i in 0..d {
                for j in 0..d {
                    let mut acc = &sym[(i * d + j) * d] * &inv[m];
                    for k in 1..d {
                        acc += &sym[(i * d + j) * d + k] * &inv[k * d + m];
                    }
                    g[(m * d + i) * d + j] += acc;
                }
            }
        }
        Ok(g)
    }
}

/// The canonical connection of a symplectic symmetric space,
/// `ω_x(∇_X Y, Z) = ½ X_x ω(Y + s_{x*}Y, Z)`.
pub struct CanonicalSymmetric {
    form: FormRef,
    /// `s_x(y)` as expressions in `(x_1..x_d, y_1..y_d)`.
    sym: Vec<Expr>,
    /// `∂ s_x(y)^m / ∂ y_j` at `[m * d + j]`.
    dsym: Vec<Expr>,
}

pub fn canonical_symmetric_connection(form: FormRef, sym: Vec<Expr>) -> Result<CanonicalSymmetric> {
    let d = form.dim();
    if sym.len() != d {
        return Err(Error::DimensionMismatch("symmetry map has the wrong number of components".into()));
    }
    check_coords(&sym, 2 * d)?;
    let mut dsym = Vec::with_capacity(d * d);
    for s in &sym {
        for j in 0..d {
            dsym.push(s.diff(d + j));
        }
    }
    Ok(CanonicalSymmetric { form, sym, dsym })
}

impl CanonicalSymmetric {
    /// Evaluate `s_x(y)`.
    pub fn apply(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let xy: Vec<f64> = x.iter().chain(y).copied().collect();
        self.sym.iter().map(|s| s.eval(&xy)).collect()
    }

    /// Largest deviation from the symmetric-space axioms at sample pairs:
    /// `s_x(x) = x`, `s_x² = id`, `D s_x(x) = -id`, `s_x^* ω = ω`.
    pub fn axiom_defect(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let d = self.form.dim();
        let mut worst = 0.0f64;
        let fx = self.apply(x, x);
        for m in 0..d {
            worst = worst.max((fx[m] - x[m]).abs());
        }
        let back = self.apply(x, &self.apply(x, y));
        for m in 0..d {
            worst = worst.max((back[m] - y[m]).abs());
        }
        let xx: Vec<f64> = x.iter().chain(x).copied().collect();
        for m in 0..d {
            for j in 0..d {
                let target = if m == j { -1.0 } else { 0.0 };
                worst = worst.max((self.dsym[m * d + j].eval(&xx) - target).abs());
            }
        }
        let xy: Vec<f64> = x.iter().chain(y).copied().collect();
        let ds: Vec<f64> = self.dsym.iter().map(|e| e.eval(&xy)).collect();
        let wy = linalg::values(&self.form.omega(y, 0)?);
        let wq = linalg::values(&self.form.omega(&self.apply(x, y), 0)?);
        for a in 0..d {
            for b in 0..d {
                let mut pull = 0.0;
                for m in 0..d {
                    for k in 0..d {
                        pull += ds[m * d + a] * wq[m * d + k] * ds[k * d + b];
                    }
                }
                worst = worst.max((pull - wy[a * d + b]).abs());
            }
        }
        Ok(worst)
    }
}

impl Connection for CanonicalSymmetric {
    fn dim(&self) -> usize {
        self.form.dim()
    }

    fn gamma(&self, x: &[f64], order: usize) -> Result<Vec<Jet>> {
        check_order(order)?;
        let d = self.dim();
        check_point(d, x)?;
        let hi = order + 1;
        let xp: Vec<f64> = x.iter().chain(x).copied().collect();
        let vars = Jet::variables(&xp, hi);
        let q: Vec<Jet> = self.sym.iter().map(|s| s.eval(&vars)).collect();
        let xq: Vec<Jet> = vars[..d].iter().cloned().chain(q.iter().cloned()).collect();
        let ds: Vec<Jet> = self.dsym.iter().map(|e| e.eval(&xq)).collect();
        let wp: Vec<Jet> = self.form.omega(x, hi)?.iter().map(|w| w.substitute(&vars[d..])).collect();
        ensure_finite(&ds, "symmetry differential")?;
        let mut df = Vec::with_capacity(d * d * d);
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let mut f = wp[j * d + k].clone();
                    for m in 0..d {
                        f += &wp[m * d + k] * &ds[m * d + j];
                    }
                    df.push(f.d(d + i));
                }
            }
        }
        let xv = Jet::variables(x, order);
        let diag: Vec<Jet> = xv.iter().chain(xv.iter()).cloned().collect();
        let df: Vec<Jet> = df.iter().map(|f| f.substitute(&diag)).collect();
        let omega = self.form.omega(x, order)?;
        check_nondegenerate(&omega, d)?;
        let inv = linalg::inverse(&omega, d, "ω")?;
        let mut g = Vec::with_capacity(d * d * d);
        for m in 0..d {
            for i in 0..d {
                for j in 0..d {
                    let mut acc = &df[(i * d + j) * d] * &inv[m];
                    for k in 1..d {
                        acc += &df[(i * d + j) * d + k] * &inv[k * d + m];
                    }
                    g.push(acc * 0.5);
                }
            }
        }
        Ok(g)
    }
}

/// A 1-form `λ = Σ λ_i dx_i` on a chart.
pub trait OneForm: Send + Sync {
    fn dim(&self) -> usize;
    fn lambda(&self, x: &[f64], order: usize) -> Result<Vec<Jet>>;
}

pub type OneFormRef = Arc<dyn OneForm>;

#[derive(Clone, Debug)]
pub struct ExprOneForm {
    lambda: Vec<Expr>,
}

impl ExprOneForm {
    pub fn new(lambda: Vec<Expr>) -> Result<ExprOneForm> {
        check_coords(&lambda, lambda.len())?;
        Ok(ExprOneForm { lambda })
    }
}

impl OneForm for ExprOneForm {
    fn dim(&self) -> usize {
        self.lambda.len()
    }

    fn lambda(&self, x: &[f64], order: usize) -> Result<Vec<Jet>> {
        check_point(self.lambda.len(), x)?;
        eval_all(&self.lambda, x, order, "1-form")
    }
}

/// `ω = dλ`, `ω_ij = ∂_i λ_j - ∂_j λ_i`.
pub struct ExteriorDerivative {
    pub lambda: OneFormRef,
}

pub fn d_lambda(lambda: &[Jet], d: usize) -> Vec<Jet> {
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            out.push(lambda[j].d(i) - lambda[i].d(j));
        }
    }
    out
}

impl SymplecticForm for ExteriorDerivative {
    fn dim(&self) -> usize {
        self.lambda.dim()
    }

    fn omega(&self, x: &[f64], order: usize) -> Result<Vec<Jet>> {
        check_order(order + 1)?;
        let l = self.lambda.lambda(x, order + 1)?;
        Ok(d_lambda(&l, self.dim()))
    }
}
