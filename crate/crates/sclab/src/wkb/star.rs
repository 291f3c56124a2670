//! Tensor Gauss–Legendre quadrature of the star product
//! `(u ⋆ v)(x) = 1/(4π²θ²) ∬ A(x,y,z) exp(iS(x,y,z)/θ) u(y) v(z) dy dz`.
//!
//! For fixed `a`-coordinates the phase is affine in `ℓ_y` and `ℓ_z`, so the
//! two `ℓ`-integrals factor into one-dimensional Fourier sums per node pair.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;

use super::{Model, PhasePoint, WkbKernel};
use crate::error::{Error, Result};
use crate::jets::{jet_eval, Expr};
use crate::parallel::par_map;

/// Decay threshold on the truncation box boundary.
pub const DECAY_TOL: f64 = 1e-12;

/// `e^{-k²w²/2}` of a Gaussian's ℓ-transform is below `e^{-36}` for `|k| w ≥ √72`.
const FOURIER_CUT: f64 = 8.485_281_374_238_57;

/// Half-width of a Gaussian's support box, in units of `w`.
const SUPPORT_WIDTHS: f64 = 8.0;

pub trait PhaseField: Sync {
    fn value(&self, p: PhasePoint) -> f64;
    /// `(∂_a, ∂_ℓ)`.
    fn grad(&self, p: PhasePoint) -> (f64, f64);
}

/// `exp(-((a-a₀)² + (ℓ-ℓ₀)²)/(2w²))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gaussian {
    pub center: PhasePoint,
    pub w: f64,
}

impl Gaussian {
    pub fn new(a0: f64, l0: f64, w: f64) -> Result<Gaussian> {
        if !(w > 0.0 && w.is_finite() && a0.is_finite() && l0.is_finite()) {
            return Err(Error::InvalidInput(format!("bad Gaussian ({a0}, {l0}, {w})")));
        }
        Ok(Gaussian { center: PhasePoint::new(a0, l0), w })
    }
}

impl PhaseField for Gaussian {
    fn value(&self, p: PhasePoint) -> f64 {
        let (da, dl) = (p.a - self.center.a, p.l - self.center.l);
        (-(da * da + dl * dl) / (2.0 * self.w * self.w)).exp()
    }

    fn grad(&self, p: PhasePoint) -> (f64, f64) {
        let v = self.value(p);
        let s = -v / (self.w * self.w);
        (s * (p.a - self.center.a), s * (p.l - self.center.l))
    }
}

/// A field given by an expression in `x1 = a`, `x2 = ℓ`.
#[derive(Clone, Debug)]
pub struct ExprField(pub Expr);

impl ExprField {
    pub fn new(e: Expr) -> Result<ExprField> {
        if e.max_coord().is_some_and(|m| m > 1) {
            return Err(Error::DimensionMismatch("phase-space fields use x1 and x2 only".into()));
        }
        Ok(ExprField(e))
    }
}

impl PhaseField for ExprField {
    fn value(&self, p: PhasePoint) -> f64 {
        self.0.eval(&[p.a, p.l])
    }

    fn grad(&self, p: PhasePoint) -> (f64, f64) {
        match jet_eval(&self.0, &[p.a, p.l], 1) {
            Ok(j) => {
                let g = j.grad();
                (g[0], g[1])
            }
            Err(_) => (f64::NAN, f64::NAN),
        }
    }
}

/// `{u, v} = X_u(v)` with `i(X_u)ω = du` and `ω = da ∧ dℓ`, i.e.
/// `u_ℓ v_a - u_a v_ℓ`; in particular `{a, ℓ} = -1`.
pub fn poisson_bracket(u: &dyn PhaseField, v: &dyn PhaseField, x: PhasePoint) -> f64 {
    let (ua, ul) = u.grad(x);
    let (va, vl) = v.grad(x);
    ul * va - ua * vl
}

/// Truncation box `[a_y] × [ℓ_y] × [a_z] × [ℓ_z]` and base node counts;
/// evaluation uses `n` and `2n` nodes per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureGrid {
    pub ay: [f64; 2],
    pub ly: [f64; 2],
    pub az: [f64; 2],
    pub lz: [f64; 2],
    pub n_a: usize,
    pub n_l: usize,
}

impl QuadratureGrid {
    pub fn new(ay: [f64; 2], ly: [f64; 2], az: [f64; 2], lz: [f64; 2], n_a: usize, n_l: usize) -> Result<QuadratureGrid> {
        for r in [ay, ly, az, lz] {
            if !(r[0] < r[1] && r[0].is_finite() && r[1].is_finite()) {
                return Err(Error::InvalidInput(format!("bad interval {r:?}")));
            }
        }
        if n_a < 2 || n_l < 2 || n_a > 2048 || n_l > 2048 {
            return Err(Error::InvalidInput(format!("node counts {n_a}, {n_l} outside 2..=2048")));
        }
        Ok(QuadratureGrid { ay, ly, az, lz, n_a, n_l })
    }

    /// Box for a Gaussian pair at `x`: the `ℓ`-boxes cover `±8w`, and each
    /// `a`-box keeps the node pairs where the other factor's `ℓ`-frequency is
    /// below `√72/w`, intersected with the factor's own support.
    pub fn for_gaussians(x: PhasePoint, kernel: &WkbKernel, u: &Gaussian, v: &Gaussian, n_a: usize, n_l: usize) -> Result<QuadratureGrid> {
        let reach = |w: f64| {
            let k = kernel.theta * FOURIER_CUT / w;
            match kernel.model {
                Model::Curved => k.asinh(),
                Model::Flat => k,
            }
        };
        let a_box = |own: &Gaussian, other: &Gaussian| {
            let osc = [x.a - reach(other.w), x.a + reach(other.w)];
            let sup = [own.center.a - SUPPORT_WIDTHS * own.w, own.center.a + SUPPORT_WIDTHS * own.w];
            let lo = osc[0].max(sup[0]);
            let hi = osc[1].min(sup[1]);
            if lo < hi {
                [lo, hi]
            } else {
                osc
            }
        };
        let l_box = |g: &Gaussian| [g.center.l - SUPPORT_WIDTHS * g.w, g.center.l + SUPPORT_WIDTHS * g.w];
        QuadratureGrid::new(a_box(u, v), l_box(u), a_box(v, u), l_box(v), n_a, n_l)
    }
}

/// A star-product value with its node-doubling error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StarValue {
    pub value: Complex64,
    pub coarse: Complex64,
    pub error: f64,
    /// Largest ℓ-integrated integrand on the `a`-edges of the box.
    pub edge: f64,
}

fn rule(n: usize, [lo, hi]: [f64; 2]) -> (Vec<f64>, Vec<f64>) {
    let q = GaussLegendre::new(NonZeroUsize::new(n).expect("at least one node"));
    let (mid, half) = ((lo + hi) / 2.0, (hi - lo) / 2.0);
    q.as_node_weight_pairs().iter().map(|&(t, w)| (mid + half * t, half * w)).unzip()
}

fn check_l_edges(f: &dyn PhaseField, a: [f64; 2], l: [f64; 2], n: usize, what: &str) -> Result<()> {
    let (nodes, _) = rule(n, a);
    for av in nodes.iter().copied().chain(a) {
        for lv in l {
            let val = f.value(PhasePoint::new(av, lv));
            if !(val.abs() < DECAY_TOL) {
                return Err(Error::Truncation(format!("|{what}| = {val:e} on the box edge at ({av}, {lv})")));
            }
        }
    }
    Ok(())
}

fn evaluate(u: &dyn PhaseField, v: &dyn PhaseField, k: &WkbKernel, g: &QuadratureGrid, x: PhasePoint, na: usize, nl: usize) -> Result<(Complex64, f64)> {
    let m = k.model;
    let th = k.theta;
    let (ya, yw) = rule(na, g.ay);
    let (za, zw) = rule(na, g.az);
    let (yl, ylw) = rule(nl, g.ly);
    let (zl, zlw) = rule(nl, g.lz);
    // interior nodes first, then the two edges with weight zero
    let ya_all: Vec<f64> = ya.iter().copied().chain(g.ay).collect();
    let za_all: Vec<f64> = za.iter().copied().chain(g.az).collect();
    let table = |f: &dyn PhaseField, a: &[f64], l: &[f64], w: &[f64]| -> Vec<Vec<f64>> {
        a.iter().map(|&av| l.iter().zip(w).map(|(&lv, &wv)| wv * f.value(PhasePoint::new(av, lv))).collect()).collect()
    };
    let ut = table(u, &ya_all, &yl, &ylw);
    let vt = table(v, &za_all, &zl, &zlw);
    if ut.iter().chain(&vt).flatten().any(|c| !c.is_finite()) {
        return Err(Error::NumericDomain("non-finite test function value".into()));
    }
    let transform = |row: &[f64], nodes: &[f64], freq: f64| -> Complex64 {
        row.iter().zip(nodes).map(|(&c, &l)| Complex64::from_polar(c, freq * l)).sum()
    };
    let rows: Vec<usize> = (0..ya_all.len()).collect();
    let per_row = par_map(&rows, |&i| -> Result<(Complex64, f64)> {
        let ay = ya_all[i];
        let kz = m.sinh(&(x.a - ay)) / th;
        let mut acc = Complex64::new(0.0, 0.0);
        let mut edge = 0.0f64;
        for (j, &az) in za_all.iter().enumerate() {
            let interior = i < na && j < na;
            let ky = m.sinh(&(az - x.a)) / th;
            let uh = transform(&ut[i], &yl, ky);
            let vh = transform(&vt[j], &zl, kz);
            let amp = k.amplitude.eval(m, x, PhasePoint::new(ay, 0.0), PhasePoint::new(az, 0.0))?;
            let ph = Complex64::from_polar(1.0, m.sinh(&(ay - az)) * x.l / th);
            let term = ph * uh * vh * amp;
            if interior {
                acc += term * (yw[i] * zw[j]);
            } else {
                edge = edge.max(term.norm());
            }
        }
        Ok((acc, edge))
    });
    let pref = 1.0 / (4.0 * PI * PI * th * th);
    let mut total = Complex64::new(0.0, 0.0);
    let mut edge = 0.0f64;
    for r in per_row {
        let (a, e) = r?;
        total += a;
        edge = edge.max(e);
    }
    Ok((total * pref, edge * pref))
}

fn refined(u: &dyn PhaseField, v: &dyn PhaseField, kernel: &WkbKernel, grid: &QuadratureGrid, x: PhasePoint) -> Result<StarValue> {
    if !x.is_finite() {
        return Err(Error::NumericDomain("non-finite evaluation point".into()));
    }
    check_l_edges(u, grid.ay, grid.ly, 2 * grid.n_a, "u")?;
    check_l_edges(v, grid.az, grid.lz, 2 * grid.n_a, "v")?;
    let (coarse, _) = evaluate(u, v, kernel, grid, x, grid.n_a, grid.n_l)?;
    let (value, edge) = evaluate(u, v, kernel, grid, x, 2 * grid.n_a, 2 * grid.n_l)?;
    Ok(StarValue { value, coarse, error: (value - coarse).norm(), edge })
}

fn check_a_edges(s: StarValue) -> Result<StarValue> {
    if !(s.edge < DECAY_TOL) {
        return Err(Error::Truncation(format!("ℓ-integrated integrand is {:e} on the a-edges of the box", s.edge)));
    }
    Ok(s)
}

/// Star product at `x` on `n` and `2n` nodes, without a tolerance check.
pub fn star_product_with(u: &dyn PhaseField, v: &dyn PhaseField, kernel: &WkbKernel, grid: &QuadratureGrid, x: PhasePoint) -> Result<StarValue> {
    check_a_edges(refined(u, v, kernel, grid, x)?)
}

/// Star product with the refinement estimate required below `tol`. The
/// a-edge decay is only meaningful once the ℓ-sums are resolved, so it is
/// checked after convergence.
pub fn star_product(u: &dyn PhaseField, v: &dyn PhaseField, kernel: &WkbKernel, grid: &QuadratureGrid, x: PhasePoint, tol: f64) -> Result<StarValue> {
    let s = refined(u, v, kernel, grid, x)?;
    if !(s.error <= tol) {
        return Err(Error::NotConverged { estimate: s.error, tol });
    }
    check_a_edges(s)
}

/// One θ of an expansion sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpansionPoint {
    pub theta: f64,
    pub star: Complex64,
    pub residual: f64,
    pub quad_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionReport {
    pub uv: f64,
    pub bracket: f64,
    /// Multiplier on the displayed first-order term `(θ/2i){u,v}`.
    pub kappa: f64,
    pub points: Vec<ExpansionPoint>,
    /// Least-squares slope of `ln residual` against `ln θ`.
    pub slope: f64,
}

impl ExpansionReport {
    /// Smallest ratio `residual / quad_error` over the sweep.
    pub fn refinement_margin(&self) -> f64 {
        self.points.iter().map(|p| p.residual / p.quad_error.max(f64::MIN_POSITIVE)).fold(f64::INFINITY, f64::min)
    }
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Residuals `|u⋆v - uv - κ(θ/2i){u,v}|` at `x` over a θ sweep; `κ = 1` is
/// the displayed expansion.
pub fn expansion_sweep(
    u: &Gaussian,
    v: &Gaussian,
    x: PhasePoint,
    kernel: &WkbKernel,
    thetas: &[f64],
    nodes: (usize, usize),
    kappa: f64,
) -> Result<ExpansionReport> {
    if thetas.len() < 2 {
        return Err(Error::InvalidInput("a slope needs at least two θ values".into()));
    }
    let uv = u.value(x) * v.value(x);
    let bracket = poisson_bracket(u, v, x);
    let mut points = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let k = WkbKernel::new(theta, kernel.amplitude.clone(), kernel.model)?;
        let grid = QuadratureGrid::for_gaussians(x, &k, u, v, nodes.0, nodes.1)?;
        let s = star_product_with(u, v, &k, &grid, x)?;
        let first = Complex64::new(0.0, -theta / 2.0) * (kappa * bracket);
        let residual = (s.value - uv - first).norm();
        points.push(ExpansionPoint { theta, star: s.value, residual, quad_error: s.error });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.theta.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.residual.max(f64::MIN_POSITIVE).ln()).collect();
    Ok(ExpansionReport { uv, bracket, kappa, slope: fit_slope(&xs, &ys), points })
}

/// Measured first-order coefficient in units of the displayed
/// `(1/2i){u,v}`: Richardson extrapolation of `(u⋆v - uv)/θ` from `θ` and
/// `θ/2`. The displayed expansion corresponds to `1`.
pub fn first_order_coefficient(u: &Gaussian, v: &Gaussian, x: PhasePoint, kernel: &WkbKernel, nodes: (usize, usize)) -> Result<Complex64> {
    let bracket = poisson_bracket(u, v, x);
    if !(bracket.abs() > 1e-6) {
        return Err(Error::InvalidInput(format!("{{u,v}}(x) = {bracket:e} is too small to calibrate against")));
    }
    let uv = u.value(x) * v.value(x);
    let mut c = Vec::new();
    for theta in [kernel.theta, kernel.theta / 2.0] {
        let k = WkbKernel::new(theta, kernel.amplitude.clone(), kernel.model)?;
        let grid = QuadratureGrid::for_gaussians(x, &k, u, v, nodes.0, nodes.1)?;
        let s = star_product_with(u, v, &k, &grid, x)?;
        c.push((s.value - uv) / theta);
    }
    let c0 = c[1] * 2.0 - c[0];
    Ok(c0 / Complex64::new(0.0, -0.5 * bracket))
}
