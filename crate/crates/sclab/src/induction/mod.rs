//! Induction of a Ricci-flat connection on `P = M × ℝ_t × ℝ_s` from any
//! symplectic connection on an exact chart `(M, ω = dλ)`, and reduction back.
//!
//! The contact quadruple is `N = M × ℝ_t`, `α = dt + λ`, and
//! `μ = d(e^{2s} α)`. Coordinates on `P` are `(x_0..x_{2n-1}, t, s)`.
//! Frame: `X̄_i = ∂_i - λ_i ∂_t`, `E = ∂_t`, `S = ∂_s`.

use std::sync::Arc;

use crate::connlab::tensor::{self, i3, i4, Slot};
use crate::connlab::{
    check_even_dim, check_point, d_lambda, ConnRef, Connection, CurvatureData, ExteriorDerivative, FormRef,
    OneFormRef, PointData, SymplecticForm,
};
use crate::error::{Error, Result};
use crate::jets::{check_order, Expr, Jet};
use crate::linalg;

/// Time step for the two-sided flow comparisons.
pub const FLOW_EPS: f64 = 1e-3;

/// The exact-chart contact quadruple `(M, M × ℝ, dt + λ, p_1)`.
#[derive(Clone)]
pub struct ContactQuadruple {
    lambda: OneFormRef,
}

impl ContactQuadruple {
    pub fn new(lambda: OneFormRef) -> Result<ContactQuadruple> {
        check_even_dim(lambda.dim())?;
        Ok(ContactQuadruple { lambda })
    }

    /// Also check `dλ = ω` at the given points.
    pub fn for_form(lambda: OneFormRef, form: &dyn SymplecticForm, points: &[Vec<f64>]) -> Result<ContactQuadruple> {
        if lambda.dim() != form.dim() {
            return Err(Error::DimensionMismatch("potential and form dimensions differ".into()));
        }
        let q = ContactQuadruple::new(lambda)?;
        let dl = q.base_form();
        for x in points {
            let a = linalg::values(&dl.omega(x, 0)?);
            let b = linalg::values(&form.omega(x, 0)?);
            let dev = a.iter().zip(&b).fold(0.0f64, |m, (u, v)| m.max((u - v).abs()));
            if !(dev < 1e-9) {
                return Err(Error::NotExact(format!("|dλ - ω| = {dev:e} at {x:?}")));
            }
        }
        Ok(q)
    }

    pub fn base_dim(&self) -> usize {
        self.lambda.dim()
    }

    /// `dim P = 2n + 2`.
    pub fn dim(&self) -> usize {
        self.lambda.dim() + 2
    }

    pub fn lambda(&self) -> &OneFormRef {
        &self.lambda
    }

    /// `ω = dλ` on `M`.
    pub fn base_form(&self) -> ExteriorDerivative {
        ExteriorDerivative { lambda: self.lambda.clone() }
    }

    pub fn induced_form(&self) -> InducedForm {
        InducedForm { quad: self.clone() }
    }

    /// Coordinate components of `X̄_0..X̄_{2n-1}, E, S` as jets on `P`.
    pub fn frame(&self, p: &[f64], order: usize) -> Result<Vec<Vec<Jet>>> {
        let d = self.base_dim();
        let dp = d + 2;
        check_point(dp, p)?;
        let lam: Vec<Jet> = self.lambda.lambda(&p[..d], order)?.iter().map(|l| l.extend_dim(dp)).collect();
        let zero = lam[0].lift(0.0);
        let mut out = Vec::with_capacity(dp);
        for i in 0..d {
            let mut v = vec![zero.clone(); dp];
            v[i] = zero.lift(1.0);
            v[d] = -&lam[i];
            out.push(v);
        }
        for k in [d, d + 1] {
            let mut v = vec![zero.clone(); dp];
            v[k] = zero.lift(1.0);
            out.push(v);
        }
        Ok(out)
    }
}

/// `μ = d(e^{2s}(dt + λ))`.
#[derive(Clone)]
pub struct InducedForm {
    quad: ContactQuadruple,
}

impl SymplecticForm for InducedForm {
    fn dim(&self) -> usize {
        self.quad.dim()
    }

    fn omega(&self, p: &[f64], order: usize) -> Result<Vec<Jet>> {
        check_order(order + 1)?;
        let d = self.quad.base_dim();
        let dp = d + 2;
        check_point(dp, p)?;
        let lam = self.quad.lambda.lambda(&p[..d], order + 1)?;
        let e2s = (Jet::variable(dp, order + 1, d + 1, p[d + 1]) * 2.0).exp();
        let mut beta: Vec<Jet> = lam.iter().map(|l| &l.extend_dim(dp) * &e2s).collect();
        beta.push(e2s.clone());
        beta.push(e2s.lift(0.0));
        Ok(d_lambda(&beta, dp))
    }
}

/// Coordinate vector field bracket `[V, W]^c = V^a ∂_a W^c - W^a ∂_a V^c`.
pub fn bracket(v: &[Jet], w: &[Jet]) -> Vec<Jet> {
    let n = v.len();
    (0..n)
        .map(|c| {
            let mut acc = v[0].truncate(v[0].order() - 1).lift(0.0);
            for a in 0..n {
                acc += &v[a].truncate(v[a].order() - 1) * &w[c].d(a);
                acc -= &w[a].truncate(w[a].order() - 1) * &v[c].d(a);
            }
            acc
        })
        .collect()
}

/// Residuals of the frame's defining conditions and bracket relations.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameReport {
    pub defining: f64,
    pub reeb: f64,
    pub brackets: f64,
}

pub fn frame_check(quad: &ContactQuadruple, p: &[f64]) -> Result<FrameReport> {
    let d = quad.base_dim();
    let dp = d + 2;
    let fr = quad.frame(p, 2)?;
    let lam: Vec<Jet> = quad.lambda.lambda(&p[..d], 2)?.iter().map(|l| l.extend_dim(dp)).collect();
    // α = dt + λ as covector components
    let mut alpha: Vec<f64> = lam.iter().map(Jet::value).collect();
    alpha.push(1.0);
    alpha.push(0.0);
    let pair = |cov: &[f64], v: &[Jet]| -> f64 { cov.iter().zip(v).map(|(c, x)| c * x.value()).sum() };
    let mut defining = 0.0f64;
    for (i, x) in fr[..d].iter().enumerate() {
        for k in 0..d {
            defining = defining.max((x[k].value() - if k == i { 1.0 } else { 0.0 }).abs());
        }
        defining = defining.max(pair(&alpha, x).abs()).max(x[d + 1].value().abs());
    }
    let e = &fr[d];
    let s = &fr[d + 1];
    defining = defining.max(e[d + 1].value().abs());
    for k in 0..d {
        defining = defining.max(e[k].value().abs());
    }
    let dalpha = d_lambda(&lam.iter().cloned().chain([lam[0].lift(1.0), lam[0].lift(0.0)]).collect::<Vec<_>>(), dp);
    let mut reeb = (pair(&alpha, e) - 1.0).abs();
    for b in 0..dp {
        let v: f64 = (0..dp).map(|a| e[a].value() * dalpha[a * dp + b].value()).sum();
        reeb = reeb.max(v.abs());
    }
    let om = d_lambda(&lam, d);
    let mut brackets = linalg::max_abs_jets(&bracket(e, s));
    for i in 0..d {
        brackets = brackets.max(linalg::max_abs_jets(&bracket(e, &fr[i])));
        brackets = brackets.max(linalg::max_abs_jets(&bracket(s, &fr[i])));
        for j in 0..d {
            // [X̄_i, X̄_j] = overline([∂_i, ∂_j]) - ω_ij E = -ω_ij E
            let b = bracket(&fr[i], &fr[j]);
            for c in 0..dp {
                let target = if c == d { -om[i * d + j].value() } else { 0.0 };
                brackets = brackets.max((b[c].value() - target).abs());
            }
        }
    }
    Ok(FrameReport { defining, reeb, brackets })
}

/// Jets of the data `(ŝ, σ, U, f)` defining `∇^P`, with `ŝ(X,Y) = ω(X, σY)`.
#[derive(Clone, Debug)]
pub struct SpecJets {
    pub s_hat: Vec<Jet>,
    pub sigma: Vec<Jet>,
    pub u: Vec<Jet>,
    pub f: Jet,
}

pub trait InducedSpec: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64], order: usize) -> Result<SpecJets>;
}

pub type SpecRef = Arc<dyn InducedSpec>;

/// `ŝ = 0, U = 0, f = 0`.
pub struct ZeroSpec {
    pub dim: usize,
}

impl InducedSpec for ZeroSpec {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64], order: usize) -> Result<SpecJets> {
        check_point(self.dim, x)?;
        let z = Jet::zero(self.dim, order);
        Ok(SpecJets { s_hat: vec![z.clone(); self.dim * self.dim], sigma: vec![z.clone(); self.dim * self.dim], u: vec![z.clone(); self.dim], f: z })
    }
}

/// Spec from expressions; `σ` is derived from `ŝ` unless given, in which
/// case the two are checked against each other.
pub struct ExprSpec {
    form: FormRef,
    s_hat: Vec<Expr>,
    sigma: Option<Vec<Expr>>,
    u: Vec<Expr>,
    f: Expr,
}

impl ExprSpec {
    pub fn new(form: FormRef, s_hat: Vec<Expr>, sigma: Option<Vec<Expr>>, u: Vec<Expr>, f: Expr) -> Result<ExprSpec> {
        let d = form.dim();
        if s_hat.len() != d * d || u.len() != d || sigma.as_ref().is_some_and(|s| s.len() != d * d) {
            return Err(Error::DimensionMismatch(format!("spec fields do not match dimension {d}")));
        }
        Ok(ExprSpec { form, s_hat, sigma, u, f })
    }
}

const SPEC_TOL: f64 = 1e-9;

impl InducedSpec for ExprSpec {
    fn dim(&self) -> usize {
        self.form.dim()
    }

    fn eval(&self, x: &[f64], order: usize) -> Result<SpecJets> {
        let d = self.dim();
        check_point(d, x)?;
        let vars = Jet::variables(x, order);
        let s_hat: Vec<Jet> = self.s_hat.iter().map(|e| e.eval(&vars)).collect();
        for i in 0..d {
            for j in 0..d {
                let diff = &s_hat[i * d + j] - &s_hat[j * d + i];
                if linalg::max_abs(diff.coeffs()) > SPEC_TOL {
                    return Err(Error::InvalidInput("ŝ is not symmetric".into()));
                }
            }
        }
        let omega = self.form.omega(x, order)?;
        let sigma = match &self.sigma {
            None => linalg::solve(&omega, &s_hat, d, d, "ω for σ")?,
            Some(exprs) => {
                let sigma: Vec<Jet> = exprs.iter().map(|e| e.eval(&vars)).collect();
                let back = linalg::matmul(&omega, &sigma, d, d, d);
                for (a, b) in back.iter().zip(&s_hat) {
                    if linalg::max_abs((a - b).coeffs()) > SPEC_TOL {
                        return Err(Error::InvalidInput("ŝ(X,Y) ≠ ω(X, σY)".into()));
                    }
                }
                sigma
            }
        };
        let u = self.u.iter().map(|e| e.eval(&vars)).collect();
        let f = self.f.eval(&vars);
        let all: Vec<Jet> = s_hat.iter().chain(&sigma).chain(&u).chain([&f]).cloned().collect();
        crate::jets::ensure_finite(&all, "induction spec")?;
        Ok(SpecJets { s_hat, sigma, u, f })
    }
}

/// The choice making `∇^P` Ricci-flat:
/// `ŝ = -r/(2(n+1))`, `ω(U, ·) = 2/(2n+1) Tr[Y ↦ ∇_Y σ]`,
/// `f = Tr(ρ²)/(2n(n+1)²) + Tr[X ↦ ∇_X U]/n`.
pub struct RicciFlatChoice {
    conn: ConnRef,
    form: FormRef,
}

pub fn ricci_flat_choice(conn: ConnRef, form: FormRef) -> Result<RicciFlatChoice> {
    if conn.dim() != form.dim() {
        return Err(Error::DimensionMismatch("connection and form dimensions differ".into()));
    }
    check_even_dim(form.dim())?;
    Ok(RicciFlatChoice { conn, form })
}

impl InducedSpec for RicciFlatChoice {
    fn dim(&self) -> usize {
        self.form.dim()
    }

    /// Needs the base `Γ` at `order + 3`.
    fn eval(&self, x: &[f64], order: usize) -> Result<SpecJets> {
        let d = self.dim();
        let n = (d / 2) as f64;
        let p = PointData::at(self.conn.as_ref(), self.form.as_ref(), x, order + 3)?;
        let c = CurvatureData::new(&p);
        let k = -1.0 / (2.0 * (n + 1.0));
        let s_hat: Vec<Jet> = c.ricci.iter().map(|r| r * k).collect();
        let sigma: Vec<Jet> = c.rho.iter().map(|r| r * k).collect();
        let nsig = tensor::covariant(&sigma, &[Slot::Up, Slot::Down], &p.gamma, d);
        // τ_j = Σ_m (∇_m σ)^m_j ; Σ_m U^m ω_mj = 2/(2n+1) τ_j
        let o1 = nsig[0].order();
        let mut rhs = Vec::with_capacity(d);
        for j in 0..d {
            let mut acc = nsig[0].lift(0.0);
            for m in 0..d {
                acc += &nsig[i3(d, m, m, j)];
            }
            rhs.push(acc * (2.0 / (2.0 * n + 1.0)));
        }
        let om_t: Vec<Jet> = (0..d * d).map(|k| p.omega[(k % d) * d + k / d].truncate(o1)).collect();
        let u = linalg::solve(&om_t, &rhs, d, 1, "ω for U")?;
        let nu = tensor::covariant(&u, &[Slot::Up], &p.gamma, d);
        let o0 = nu[0].order();
        let rho0: Vec<Jet> = c.rho.iter().map(|r| r.truncate(o0)).collect();
        let rho2 = linalg::matmul(&rho0, &rho0, d, d, d);
        let mut f = nu[0].lift(0.0);
        for i in 0..d {
            f += &rho2[i * d + i] * (1.0 / (2.0 * n * (n + 1.0) * (n + 1.0)));
            f += &nu[i * d + i] * (1.0 / n);
        }
        let tr = |v: &[Jet]| v.iter().map(|j| j.truncate(order)).collect::<Vec<_>>();
        Ok(SpecJets { s_hat: tr(&s_hat), sigma: tr(&sigma), u: tr(&u), f: f.truncate(order) })
    }
}

/// The connection `∇^P` given by the frame formulas
/// `∇_X̄ Ȳ = overline(∇_X Y) - ½ω(X,Y)E - ŝ(X,Y)S`,
/// `∇_E X̄ = ∇_X̄ E = 2 overline(σX) + ω(X,U)S`,
/// `∇_S X̄ = ∇_X̄ S = X̄`, `∇_E E = fS - 2Ū`, `∇_E S = ∇_S E = E`, `∇_S S = S`,
/// converted to coordinate Christoffels through `∂_i = X̄_i + λ_i E`.
#[derive(Clone)]
pub struct InducedConnection {
    base: ConnRef,
    quad: ContactQuadruple,
    spec: SpecRef,
}

impl InducedConnection {
    pub fn new(base: ConnRef, quad: ContactQuadruple, spec: SpecRef) -> Result<InducedConnection> {
        if base.dim() != quad.base_dim() || spec.dim() != quad.base_dim() {
            return Err(Error::DimensionMismatch("base connection, potential and spec dimensions differ".into()));
        }
        Ok(InducedConnection { base, quad, spec })
    }

    pub fn quad(&self) -> &ContactQuadruple {
        &self.quad
    }

    pub fn spec(&self) -> &SpecRef {
        &self.spec
    }

    pub fn base(&self) -> &ConnRef {
        &self.base
    }
}

/// Frame slots: `0..d` are `X̄_i`, `d` is `E`, `d + 1` is `S`.
fn frame_nabla(a: usize, b: usize, d: usize, g: &[Jet], om: &[Jet], sp: &SpecJets, zero: &Jet) -> Vec<Jet> {
    let (e, s) = (d, d + 1);
    let mut v = vec![zero.clone(); d + 2];
    match (a.min(b), a.max(b)) {
        (_, j) if j < d => {
            for k in 0..d {
                v[k] = g[i3(d, k, a, b)].clone();
            }
            v[e] = &om[a * d + b] * -0.5;
            v[s] = -&sp.s_hat[a * d + b];
        }
        (i, j) if j == e && i < d => {
            for k in 0..d {
                v[k] = &sp.sigma[k * d + i] * 2.0;
            }
            let mut c = zero.clone();
            for m in 0..d {
                c += &om[i * d + m] * &sp.u[m];
            }
            v[s] = c;
        }
        (i, j) if j == s && i < d => v[i] = zero.lift(1.0),
        (i, j) if i == e && j == e => {
            for k in 0..d {
                v[k] = &sp.u[k] * -2.0;
            }
            v[s] = sp.f.clone();
        }
        (i, j) if i == e && j == s => v[e] = zero.lift(1.0),
        _ => v[s] = zero.lift(1.0),
    }
    v
}

impl Connection for InducedConnection {
    fn dim(&self) -> usize {
        self.quad.dim()
    }

    fn gamma(&self, p: &[f64], order: usize) -> Result<Vec<Jet>> {
        check_order(order + 1)?;
        let d = self.quad.base_dim();
        let dp = d + 2;
        check_point(dp, p)?;
        let x = &p[..d];
        let g: Vec<Jet> = self.base.gamma(x, order)?;
        let lam1 = self.quad.lambda.lambda(x, order + 1)?;
        let sp = self.spec.eval(x, order)?;
        let om: Vec<Jet> = d_lambda(&lam1, d);
        let lam: Vec<Jet> = lam1.iter().map(|l| l.truncate(order)).collect();
        let zero = lam[0].lift(0.0);
        // ∂_a = Σ_A C[a][A] F_A
        let coef = |a: usize, frame: usize| -> Option<Jet> {
            if a < d {
                if frame == a {
                    Some(zero.lift(1.0))
                } else if frame == d {
                    Some(lam[a].clone())
                } else {
                    None
                }
            } else if frame == a {
                Some(zero.lift(1.0))
            } else {
                None
            }
        };
        let nab: Vec<Vec<Vec<Jet>>> =
            (0..dp).map(|a| (0..dp).map(|b| frame_nabla(a, b, d, &g, &om, &sp, &zero)).collect()).collect();
        let mut out = vec![zero.extend_dim(dp); dp * dp * dp];
        for a in 0..dp {
            for b in 0..dp {
                let mut v = vec![zero.clone(); dp];
                for fa in 0..dp {
                    let Some(ca) = coef(a, fa) else { continue };
                    for fb in 0..dp {
                        let Some(cb) = coef(b, fb) else { continue };
                        let w = &ca * &cb;
                        for k in 0..dp {
                            v[k] += &w * &nab[fa][fb][k];
                        }
                    }
                    // F_A(C[b][E]) E, nonzero for b < d and F_A = X̄_m: ∂_m λ_b
                    if b < d && fa < d {
                        v[d] += &ca * &lam1[b].d(fa);
                    }
                }
                // frame components (α, β, γ) → coordinates (α, β - Σ α_k λ_k, γ)
                let mut t = v[d].clone();
                for k in 0..d {
                    t -= &v[k] * &lam[k];
                }
                v[d] = t;
                for c in 0..dp {
                    out[i3(dp, c, a, b)] = v[c].extend_dim(dp);
                }
            }
        }
        Ok(out)
    }
}

/// Largest `|Γ(t+ε) - Γ(t-ε)| / 2ε` over all symbols: the Lie derivative of
/// `∇` along `∂_t` by a two-sided flow comparison.
pub fn flow_affinity_defect(conn: &dyn Connection, p: &[f64], var: usize) -> Result<f64> {
    let mut a = p.to_vec();
    let mut b = p.to_vec();
    a[var] += FLOW_EPS;
    b[var] -= FLOW_EPS;
    let ga = linalg::values(&conn.gamma(&a, 0)?);
    let gb = linalg::values(&conn.gamma(&b, 0)?);
    Ok(ga.iter().zip(&gb).fold(0.0f64, |m, (x, y)| m.max((x - y).abs() / (2.0 * FLOW_EPS))))
}

/// One named block of the closed-form curvature comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockCheck {
    pub name: &'static str,
    /// Largest deviation between the displayed formula and the generic engine.
    pub deviation: f64,
    /// Largest entry of the block in the generic engine.
    pub magnitude: f64,
}

#[derive(Clone, Debug)]
pub struct ClosedFormReport {
    pub blocks: Vec<BlockCheck>,
    pub zero_blocks: Vec<BlockCheck>,
    pub ricci: Vec<BlockCheck>,
    /// Alternative readings of ambiguous displays, not counted in the
    /// deviation totals.
    pub readings: Vec<BlockCheck>,
}

impl ClosedFormReport {
    pub fn max_block_deviation(&self) -> f64 {
        self.blocks.iter().chain(&self.ricci).map(|b| b.deviation).fold(0.0, f64::max)
    }

    pub fn max_zero_block(&self) -> f64 {
        self.zero_blocks.iter().map(|b| b.magnitude).fold(0.0, f64::max)
    }
}

/// Reading of the `R(X̄,E)E` line: the displayed `2·(½fX - ∇_X U - 2σ²X)`
/// with the factor 2 applied to the whole vector.
pub const XEE_FACTOR: f64 = 2.0;

/// Evaluate the displayed curvature and Ricci blocks of `∇^P` at `p` and
/// compare them with the generic curvature of the coordinate Christoffels.
///
/// In the `R(X̄,Ȳ)Z̄` line the factor 2 in front of the overlined vector is
/// taken to multiply `ω(X,Y)σZ` only: the remaining terms come from
/// `∇_X̄(-½ω(Y,Z)E - ŝ(Y,Z)S)` with coefficient 1. The literal reading is
/// reported under `readings`.
pub fn closed_form_curvature(conn: &InducedConnection, p: &[f64]) -> Result<ClosedFormReport> {
    let quad = &conn.quad;
    let d = quad.base_dim();
    let dp = d + 2;
    let n = (d / 2) as f64;
    let (ei, si) = (d, d + 1);
    let x = &p[..d];
    // generic engine
    let pp = PointData::at(conn, &quad.induced_form(), p, 1)?;
    let cp = CurvatureData::new(&pp);
    let rp: Vec<f64> = linalg::values(&cp.r);
    let ricp: Vec<f64> = linalg::values(&cp.ricci);
    let fr: Vec<Vec<f64>> = quad.frame(p, 0)?.iter().map(|v| linalg::values(v)).collect();
    let lam: Vec<f64> = linalg::values(&quad.lambda.lambda(x, 0)?);
    // R(F_A, F_B)F_C in frame components
    let r_frame = |a: usize, b: usize, c: usize| -> Vec<f64> {
        let mut v = vec![0.0; dp];
        for (k, vk) in v.iter_mut().enumerate() {
            let mut acc = 0.0;
            for aa in 0..dp {
                if fr[a][aa] == 0.0 {
                    continue;
                }
                for bb in 0..dp {
                    if fr[b][bb] == 0.0 {
                        continue;
                    }
                    for cc in 0..dp {
                        if fr[c][cc] != 0.0 {
                            acc += fr[a][aa] * fr[b][bb] * fr[c][cc] * rp[i4(dp, k, cc, aa, bb)];
                        }
                    }
                }
            }
            *vk = acc;
        }
        let t = v[d] + (0..d).map(|k| v[k] * lam[k]).sum::<f64>();
        v[d] = t;
        v
    };
    let ric_frame = |a: usize, b: usize| -> f64 {
        let mut acc = 0.0;
        for aa in 0..dp {
            for bb in 0..dp {
                acc += fr[a][aa] * fr[b][bb] * ricp[aa * dp + bb];
            }
        }
        acc
    };
    // base data
    let bp = PointData::at(conn.base.as_ref(), &quad.base_form(), x, 1)?;
    let r = linalg::values(&bp.curvature());
    let ric = linalg::values(&tensor::ricci(&bp.curvature(), d));
    let om = linalg::values(&bp.omega);
    let sp = conn.spec.eval(x, 1)?;
    let sig = linalg::values(&sp.sigma);
    let shat = linalg::values(&sp.s_hat);
    let u = linalg::values(&sp.u);
    let f = sp.f.value();
    let gamma1: Vec<Jet> = bp.gamma.iter().map(|g| g.truncate(1)).collect();
    let nsig = linalg::values(&tensor::covariant(&sp.sigma, &[Slot::Up, Slot::Down], &gamma1, d));
    let nu = linalg::values(&tensor::covariant(&sp.u, &[Slot::Up], &gamma1, d));
    let df: Vec<f64> = (0..d).map(|k| sp.f.d(k).value()).collect();
    let sig2: Vec<f64> = linalg::values(&linalg::matmul(
        &sp.sigma.iter().map(|j| j.truncate(0)).collect::<Vec<_>>(),
        &sp.sigma.iter().map(|j| j.truncate(0)).collect::<Vec<_>>(),
        d,
        d,
        d,
    ));
    let omv = |a: &[f64], b: &[f64]| -> f64 {
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                acc += a[i] * om[i * d + j] * b[j];
            }
        }
        acc
    };
    let e = |i: usize| -> Vec<f64> {
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        v
    };
    // D(σ,U)(Y,Y') = (∇_Y σ)Y' + ½ω(Y',U)Y - ½ω(Y,Y')U, for basis Y = ∂_y, Y' = ∂_z
    let dsu = |y: usize, z: usize| -> Vec<f64> {
        let mut v: Vec<f64> = (0..d).map(|k| nsig[i3(d, y, k, z)]).collect();
        let wzu = omv(&e(z), &u);
        v[y] += 0.5 * wzu;
        for k in 0..d {
            v[k] -= 0.5 * om[y * d + z] * u[k];
        }
        v
    };
    // Q(X) = ½fX - ∇_X U - 2σ²X
    let q = |x_: usize| -> Vec<f64> { (0..d).map(|k| 0.5 * f * e(x_)[k] - nu[x_ * d + k] - 2.0 * sig2[k * d + x_]).collect() };
    let mut blocks: Vec<BlockCheck> = Vec::new();
    let mut readings: Vec<BlockCheck> = Vec::new();
    let push = |list: &mut Vec<BlockCheck>, name: &'static str, formula: Vec<f64>, engine: Vec<f64>| {
        let dev = formula.iter().zip(&engine).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let mag = linalg::max_abs(&engine);
        if let Some(b) = list.iter_mut().find(|b| b.name == name) {
            b.deviation = b.deviation.max(dev);
            b.magnitude = b.magnitude.max(mag);
        } else {
            list.push(BlockCheck { name, deviation: dev, magnitude: mag });
        }
    };
    let frame_vec = |xpart: &[f64], epart: f64, spart: f64| -> Vec<f64> {
        let mut v = xpart.to_vec();
        v.push(epart);
        v.push(spart);
        v
    };
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                // R(X̄,Ȳ)Z̄
                let base_r: Vec<f64> = (0..d).map(|k| r[i4(d, k, c, a, b)]).collect();
                let corr: Vec<f64> = (0..d)
                    .map(|k| {
                        -om[b * d + c] * sig[k * d + a] + om[a * d + c] * sig[k * d + b] - shat[b * d + c] * e(a)[k]
                            + shat[a * d + c] * e(b)[k]
                    })
                    .collect();
                let lead: Vec<f64> = (0..d).map(|k| om[a * d + b] * sig[k * d + c]).collect();
                let sp_ = omv(&e(a), &dsu(b, c)) - omv(&e(b), &dsu(a, c));
                let eng = r_frame(a, b, c);
                // the factor 2 on the leading term only
                let xp: Vec<f64> = (0..d).map(|k| base_r[k] + 2.0 * lead[k] + corr[k]).collect();
                // the factor 2 on the whole overlined vector
                let literal: Vec<f64> = (0..d).map(|k| base_r[k] + 2.0 * (lead[k] + corr[k])).collect();
                push(&mut readings, "R(X̄,Ȳ)Z̄ factor 2 on all terms", frame_vec(&literal, 0.0, sp_), eng.clone());
                push(&mut blocks, "R(X̄,Ȳ)Z̄", frame_vec(&xp, 0.0, sp_), eng);
            }
            // R(X̄,Ȳ)E
            let (dab, dba) = (dsu(a, b), dsu(b, a));
            let xp: Vec<f64> = (0..d).map(|k| 2.0 * dab[k] - 2.0 * dba[k]).collect();
            let sp_ = omv(&e(a), &q(b)) - omv(&e(b), &q(a));
            push(&mut blocks, "R(X̄,Ȳ)E", frame_vec(&xp, 0.0, sp_), r_frame(a, b, ei));
            // R(X̄,E)Ȳ
            let xp: Vec<f64> = (0..d).map(|k| 2.0 * dab[k]).collect();
            push(&mut blocks, "R(X̄,E)Ȳ", frame_vec(&xp, 0.0, -omv(&e(b), &q(a))), r_frame(a, ei, b));
        }
        // R(X̄,E)E
        let qa = q(a);
        let xp: Vec<f64> = qa.iter().map(|v| XEE_FACTOR * v).collect();
        let su: f64 = (0..d).map(|k| shat[a * d + k] * u[k]).sum();
        push(&mut blocks, "R(X̄,E)E", frame_vec(&xp, 0.0, df[a] + 4.0 * su), r_frame(a, ei, ei));
    }
    let mut zero_blocks = Vec::new();
    for a in 0..d {
        for b in 0..d {
            push(&mut zero_blocks, "R(X̄,Ȳ)S", vec![0.0; dp], r_frame(a, b, si));
            push(&mut zero_blocks, "R(X̄,S)Ȳ", vec![0.0; dp], r_frame(a, si, b));
        }
        push(&mut zero_blocks, "R(X̄,E)S", vec![0.0; dp], r_frame(a, ei, si));
        push(&mut zero_blocks, "R(X̄,S)E", vec![0.0; dp], r_frame(a, si, ei));
        push(&mut zero_blocks, "R(X̄,S)S", vec![0.0; dp], r_frame(a, si, si));
        push(&mut zero_blocks, "R(E,S)X̄", vec![0.0; dp], r_frame(ei, si, a));
    }
    push(&mut zero_blocks, "R(E,S)E", vec![0.0; dp], r_frame(ei, si, ei));
    push(&mut zero_blocks, "R(E,S)S", vec![0.0; dp], r_frame(ei, si, si));
    let mut ricci = Vec::new();
    let tr_sig2: f64 = (0..d).map(|k| sig2[k * d + k]).sum();
    let tr_nu: f64 = (0..d).map(|k| nu[k * d + k]).sum();
    for a in 0..d {
        for b in 0..d {
            let v = ric[a * d + b] + 2.0 * (n + 1.0) * shat[a * d + b];
            push(&mut ricci, "r(X̄,Ȳ)", vec![v], vec![ric_frame(a, b)]);
        }
        let tr: f64 = (0..d).map(|m| nsig[i3(d, m, m, a)]).sum();
        let v = -(2.0 * n + 1.0) * omv(&e(a), &u) - 2.0 * tr;
        push(&mut ricci, "r(X̄,E)", vec![v], vec![ric_frame(a, ei)]);
        push(&mut ricci, "r(X̄,S)", vec![0.0], vec![ric_frame(a, si)]);
    }
    push(&mut ricci, "r(E,E)", vec![4.0 * tr_sig2 - 2.0 * n * f + 2.0 * tr_nu], vec![ric_frame(ei, ei)]);
    push(&mut ricci, "r(E,S)", vec![0.0], vec![ric_frame(ei, si)]);
    push(&mut ricci, "r(S,S)", vec![0.0], vec![ric_frame(si, si)]);
    Ok(ClosedFormReport { blocks, zero_blocks, ricci, readings })
}

/// `(ω^M, ∇^M)` obtained from a connection on `P` by reduction along
/// `Σ = {μ(S, Ẽ) = 1}` with `S = ∂_s` and `Ẽ = ½∂_t`, which makes `Σ = {s = 0}`.
/// The chart on `M` is the slice `t = 0` of `Σ`.
#[derive(Clone)]
pub struct ReducedFromP {
    conn: ConnRef,
    form: FormRef,
    d: usize,
}

/// The symplectic vector field used for the reduction, as a multiple of `∂_t`.
pub const E_TILDE: f64 = 0.5;

/// Verify the reduction hypotheses at the given base points and build the
/// reduced structures.
pub fn reduce_back(conn: ConnRef, form: FormRef, points: &[Vec<f64>]) -> Result<ReducedFromP> {
    let dp = conn.dim();
    if form.dim() != dp || dp < 4 {
        return Err(Error::DimensionMismatch("P connection and form must share a dimension ≥ 4".into()));
    }
    let d = dp - 2;
    let (ti, si) = (d, d + 1);
    for x in points {
        check_point(d, x)?;
        for (t, s) in [(0.0, 0.0), (0.7, -0.3)] {
            let mut p = x.clone();
            p.push(t);
            p.push(s);
            let mu = form.omega(&p, 1)?;
            let mut conformal = 0.0f64;
            let mut symplectic = 0.0f64;
            for ab in 0..dp * dp {
                conformal = conformal.max((mu[ab].d(si).value() - 2.0 * mu[ab].value()).abs());
                symplectic = symplectic.max(mu[ab].d(ti).value().abs());
            }
            let pairing = E_TILDE * mu[si * dp + ti].value();
            let affine = flow_affinity_defect(conn.as_ref(), &p, ti)?;
            let bad = [
                (conformal > 1e-9, "S is not conformal"),
                (symplectic > 1e-9, "Ẽ is not symplectic"),
                (affine > 1e-6, "Ẽ is not affine"),
                (!(pairing > 0.0), "μ(S, Ẽ) is not positive"),
            ];
            if let Some((_, what)) = bad.iter().find(|(b, _)| *b) {
                return Err(Error::Precondition(format!("not reducible at {p:?}: {what}")));
            }
        }
    }
    Ok(ReducedFromP { conn, form, d })
}

impl ReducedFromP {
    pub fn form(&self) -> ReducedBackForm {
        ReducedBackForm { inner: self.clone() }
    }

    pub fn connection(&self) -> ReducedBackConnection {
        ReducedBackConnection { inner: self.clone() }
    }

    fn point(&self, x: &[f64]) -> Vec<f64> {
        let mut p = x.to_vec();
        p.push(0.0);
        p.push(0.0);
        p
    }

    fn slice(&self) -> Vec<usize> {
        (0..self.d).collect()
    }

    /// `μ` at order `order` on the slice, and the lifts `Ȳ_i = ∂_i + a_i ∂_t + b_i ∂_s`
    /// with `μ(Ẽ, Ȳ_i) = μ(S, Ȳ_i) = 0`, as jets in the `M` variables.
    fn lifts(&self, x: &[f64], order: usize) -> Result<(Vec<Jet>, Vec<Vec<Jet>>)> {
        let d = self.d;
        let dp = d + 2;
        let (ti, si) = (d, d + 1);
        check_point(d, x)?;
        let mu: Vec<Jet> = self.form.omega(&self.point(x), order)?.iter().map(|j| j.restrict(&self.slice())).collect();
        let m = |a: usize, b: usize| mu[a * dp + b].clone();
        // rows: Ẽ = ½∂_t, S = ∂_s; unknowns (a, b)
        let sys = vec![m(ti, ti) * E_TILDE, m(ti, si) * E_TILDE, m(si, ti), m(si, si)];
        let mut rhs = Vec::with_capacity(2 * d);
        for row in [ti, si] {
            let w = if row == ti { E_TILDE } else { 1.0 };
            for i in 0..d {
                rhs.push(m(row, i) * -w);
            }
        }
        let sol = linalg::solve(&sys, &rhs, 2, d, "horizontal lift on P").map_err(|e| match e {
            Error::Singular(s) => Error::DegenerateHorizontal(s),
            other => other,
        })?;
        let zero = mu[0].lift(0.0);
        let lifts = (0..d)
            .map(|i| {
                let mut v = vec![zero.clone(); dp];
                v[i] = zero.lift(1.0);
                v[ti] = sol[i].clone();
                v[si] = sol[d + i].clone();
                v
            })
            .collect();
        Ok((mu, lifts))
    }
}

fn pair_mu(mu: &[Jet], a: &[Jet], b: &[Jet]) -> Jet {
    let dp = a.len();
    let mut acc = a[0].lift(0.0);
    for i in 0..dp {
        for j in 0..dp {
            acc += &(&a[i] * &mu[i * dp + j]) * &b[j];
        }
    }
    acc
}

/// `ω^M(Y_1, Y_2) = μ(Ȳ_1, Ȳ_2)`.
#[derive(Clone)]
pub struct ReducedBackForm {
    inner: ReducedFromP,
}

impl SymplecticForm for ReducedBackForm {
    fn dim(&self) -> usize {
        self.inner.d
    }

    fn omega(&self, x: &[f64], order: usize) -> Result<Vec<Jet>> {
        let d = self.inner.d;
        let (mu, lifts) = self.inner.lifts(x, order)?;
        let mut out = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                out.push(pair_mu(&mu, &lifts[i], &lifts[j]));
            }
        }
        Ok(out)
    }
}

/// `overline(∇^M_{Y1} Y2) = ∇^P_{Ȳ1} Ȳ2 + μ(Ȳ2, ∇^P_{Ȳ1} Ẽ)S - μ(Ȳ2, ∇^P_{Ȳ1} S)Ẽ`.
#[derive(Clone)]
pub struct ReducedBackConnection {
    inner: ReducedFromP,
}

impl Connection for ReducedBackConnection {
    fn dim(&self) -> usize {
        self.inner.d
    }

    fn gamma(&self, x: &[f64], order: usize) -> Result<Vec<Jet>> {
        check_order(order + 1)?;
        let d = self.inner.d;
        let dp = d + 2;
        let (mu, lifts) = self.inner.lifts(x, order)?;
        let gp: Vec<Jet> =
            self.inner.conn.gamma(&self.inner.point(x), order)?.iter().map(|j| j.restrict(&self.inner.slice())).collect();
        // The x components of Ȳ_j are constant and the Ẽ, S corrections
        // have none, so only Γ^P(Ȳ_i, Ȳ_j) survives the projection.
        let mut out = vec![mu[0].lift(0.0); d * d * d];
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let mut acc = mu[0].lift(0.0);
                    for a in 0..dp {
                        for b in 0..dp {
                            acc += &(&lifts[i][a] * &gp[i3(dp, k, a, b)]) * &lifts[j][b];
                        }
                    }
                    out[i3(d, k, i, j)] = acc;
                }
            }
        }
        Ok(out)
    }
}

/// Horizontality residual of `∇^Σ_{Ȳ1}Ȳ2 - μ(Ȳ2, ∇^P_{Ȳ1}S)Ẽ` at `x`:
/// its `μ`-pairings with `Ẽ` and `S` should vanish.
pub fn reduce_back_horizontality(r: &ReducedFromP, x: &[f64]) -> Result<f64> {
    let d = r.d;
    let dp = d + 2;
    let (ti, si) = (d, d + 1);
    let (mu1, lifts1) = r.lifts(x, 1)?;
    let mu: Vec<f64> = mu1.iter().map(Jet::value).collect();
    let lifts: Vec<Vec<f64>> = lifts1.iter().map(|v| v.iter().map(Jet::value).collect()).collect();
    let gp = linalg::values(&r.conn.gamma(&r.point(x), 0)?);
    let nab = |v: &[f64], w: &[f64]| -> Vec<f64> {
        (0..dp).map(|c| (0..dp).map(|a| (0..dp).map(|b| v[a] * gp[i3(dp, c, a, b)] * w[b]).sum::<f64>()).sum()).collect()
    };
    let pair = |a: &[f64], b: &[f64]| -> f64 { (0..dp).map(|i| (0..dp).map(|j| a[i] * mu[i * dp + j] * b[j]).sum::<f64>()).sum() };
    let mut et = vec![0.0; dp];
    et[ti] = E_TILDE;
    let mut s = vec![0.0; dp];
    s[si] = 1.0;
    let mut worst = 0.0f64;
    for i in 0..d {
        let ne = nab(&lifts[i], &et);
        let ns = nab(&lifts[i], &s);
        for j in 0..d {
            let mut v = nab(&lifts[i], &lifts[j]);
            for c in 0..dp {
                v[c] += lifts1[j][c].d(i).value();
            }
            let ce = pair(&lifts[j], &ne);
            let cs = pair(&lifts[j], &ns);
            for c in 0..dp {
                v[c] += ce * s[c] - cs * et[c];
            }
            worst = worst.max(pair(&et, &v).abs()).max(pair(&s, &v).abs());
        }
    }
    Ok(worst)
}
