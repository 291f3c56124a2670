//! Ricci-type connections by local reduction of the flat space
//! `(ℝ^{2n+2}, Ω′)` along the quadric `Σ_A = {Ω′(x, Ax) = 1}`.
//!
//! `Ω′` is the block form `[[0, I], [-I, 0]]`. A chart on the reduced space
//! is realized by normalizing `x0 + Σ y_i f_i` back onto `Σ_A`, where
//! `(f_i)` is a symplectic frame of `H_{x0} = ⟨x0, A x0⟩^⊥`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use crate::connlab::{
    self, check_point, standard_matrix, Connection, CurvatureData, OneForm, PointData, SymplecticForm,
};
use crate::error::{Error, Result};
use crate::jets::{check_order, Jet};
use crate::linalg;
use crate::parallel::par_map;

/// Tolerance for `AᵀΩ′ + Ω′A = 0`, relative to `1 + max|A|`.
pub const SP_TOL: f64 = 1e-12;
/// Tolerance for `Ω′(x0, A x0) = 1` and for frame checks.
pub const BASE_TOL: f64 = 1e-10;

/// `Ω′(u, v)` for the block form `[[0, I], [-I, 0]]`.
pub fn omega_prime(u: &[f64], v: &[f64]) -> f64 {
    let m = u.len() / 2;
    (0..m).map(|i| u[i] * v[m + i] - u[m + i] * v[i]).sum()
}

fn omega_prime_jets(u: &[Jet], v: &[Jet]) -> Jet {
    let m = u.len() / 2;
    let mut acc = &u[0] * &v[m] - &u[m] * &v[0];
    for i in 1..m {
        acc += &u[i] * &v[m + i];
        acc -= &u[m + i] * &v[i];
    }
    acc
}

fn matvec(a: &[f64], v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n).map(|r| (0..n).map(|c| a[r * n + c] * v[c]).sum()).collect()
}

fn matvec_jets(a: &[f64], v: &[Jet]) -> Vec<Jet> {
    let n = v.len();
    (0..n)
        .map(|r| {
            let mut acc = v[0].lift(0.0);
            for c in 0..n {
                let m = a[r * n + c];
                if m != 0.0 {
                    acc.axpy(m, &v[c]);
                }
            }
            acc
        })
        .collect()
}

fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let v = a[i * n + k];
            if v != 0.0 {
                for j in 0..n {
                    out[i * n + j] += v * b[k * n + j];
                }
            }
        }
    }
    out
}

fn transpose(a: &[f64], n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            t[j * n + i] = a[i * n + j];
        }
    }
    t
}

/// Largest entry of `AᵀΩ + ΩA` for the standard form of size `n`.
pub fn membership_residual(a: &[f64], n: usize) -> f64 {
    let om = standard_matrix(n);
    let l = matmul(&transpose(a, n), &om, n);
    let r = matmul(&om, a, n);
    l.iter().zip(&r).fold(0.0f64, |m, (x, y)| m.max((x + y).abs()))
}

/// Largest entry of `gᵀΩg - Ω`.
pub fn symplectic_residual(g: &[f64], n: usize) -> f64 {
    let om = standard_matrix(n);
    let m = matmul(&transpose(g, n), &matmul(&om, g, n), n);
    m.iter().zip(&om).fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()))
}

/// Random symplectic matrix: a product of symmetric shears.
pub fn random_symplectic(n: usize, rng: &mut impl Rng, scale: f64) -> Vec<f64> {
    let m = n / 2;
    let mut g = linalg_identity(n);
    for step in 0..3 {
        let mut sh = linalg_identity(n);
        for i in 0..m {
            for j in i..m {
                let v = rng.random_range(-scale..scale);
                let (r, c) = if step % 2 == 0 { (i, m + j) } else { (m + i, j) };
                let (r2, c2) = if step % 2 == 0 { (j, m + i) } else { (m + j, i) };
                sh[r * n + c] = v;
                sh[r2 * n + c2] = v;
            }
        }
        g = matmul(&g, &sh, n);
    }
    g
}

fn linalg_identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

/// An element of `sp(ℝ^N, Ω′)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpElement {
    size: usize,
    a: Vec<f64>,
}

impl SpElement {
    pub fn new(size: usize, a: Vec<f64>) -> Result<SpElement> {
        if !(4..=8).contains(&size) || size % 2 != 0 {
            return Err(Error::UnsupportedDimension(size));
        }
        if a.len() != size * size {
            return Err(Error::DimensionMismatch(format!("A has {} entries, expected {}", a.len(), size * size)));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("A has non-finite entries".into()));
        }
        let res = membership_residual(&a, size);
        if res > SP_TOL * (1.0 + linalg::max_abs(&a)) {
            return Err(Error::InvalidInput(format!("A is not in sp(Ω′): |AᵀΩ′ + Ω′A| = {res:e}")));
        }
        Ok(SpElement { size, a })
    }

    /// `J₀ = -Ω′`, so that `Ω′(v, J₀v) = |v|²`.
    pub fn j0(size: usize) -> Result<SpElement> {
        SpElement::new(size, standard_matrix(size).iter().map(|v| -v).collect())
    }

    /// `A = -Ω′S` for symmetric `S`; then `Ω′(v, Av) = vᵀSv`.
    pub fn from_symmetric(size: usize, s: &[f64]) -> Result<SpElement> {
        if s.len() != size * size {
            return Err(Error::DimensionMismatch("S has the wrong size".into()));
        }
        let om = standard_matrix(size);
        SpElement::new(size, matmul(&om, s, size).iter().map(|v| -v).collect())
    }

    pub fn random(size: usize, rng: &mut impl Rng, scale: f64) -> Result<SpElement> {
        let mut s = vec![0.0; size * size];
        for i in 0..size {
            for j in i..size {
                let v = rng.random_range(-scale..scale);
                s[i * size + j] = v;
                s[j * size + i] = v;
            }
        }
        SpElement::from_symmetric(size, &s)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn matrix(&self) -> &[f64] {
        &self.a
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        matvec(&self.a, v)
    }

    /// `Ω′(v, Av)`.
    pub fn hamiltonian(&self, v: &[f64]) -> f64 {
        omega_prime(v, &self.apply(v))
    }

    pub fn residual(&self) -> f64 {
        membership_residual(&self.a, self.size)
    }

    /// `g A g⁻¹` for symplectic `g`.
    pub fn conjugate(&self, g: &[f64]) -> Result<SpElement> {
        let n = self.size;
        if g.len() != n * n {
            return Err(Error::DimensionMismatch("g has the wrong size".into()));
        }
        let res = symplectic_residual(g, n);
        if res > 1e-10 {
            return Err(Error::InvalidInput(format!("g is not symplectic: residual {res:e}")));
        }
        // g⁻¹ = -Ω′ gᵀ Ω′
        let om = standard_matrix(n);
        let ginv: Vec<f64> = matmul(&om, &matmul(&transpose(g, n), &om, n), n).iter().map(|v| -v).collect();
        SpElement::new(n, matmul(g, &matmul(&self.a, &ginv, n), n))
    }
}

/// `v / √Ω′(v, Av)`, the point of `Σ_A` on the ray through `v`.
pub fn sigma_project(a: &SpElement, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != a.size {
        return Err(Error::DimensionMismatch(format!("vector of length {} for N = {}", v.len(), a.size)));
    }
    let q = a.hamiltonian(v);
    if !(q > 0.0) {
        return Err(Error::OffCone(q));
    }
    let s = q.sqrt();
    Ok(v.iter().map(|x| x / s).collect())
}

/// Ω′-projection onto `H_x = ⟨x, Ax⟩^⊥` for `x ∈ Σ_A`:
/// `w + Ω′(w, x)Ax - Ω′(w, Ax)x`.
pub fn horizontal_projection(w: &[f64], x: &[f64], ax: &[f64]) -> Vec<f64> {
    let p = omega_prime(w, x);
    let q = omega_prime(w, ax);
    (0..w.len()).map(|i| w[i] + p * ax[i] - q * x[i]).collect()
}

/// Symplectic Gram–Schmidt on the projected coordinate vectors.
/// Returns `(u_1..u_n, v_1..v_n)` with `Ω′(u_i, v_j) = δ_ij`.
pub fn symplectic_frame(a: &SpElement, x0: &[f64]) -> Result<Vec<Vec<f64>>> {
    let big = a.size;
    let n = big / 2 - 1;
    let ax = a.apply(x0);
    let mut pool: Vec<Vec<f64>> = (0..big)
        .map(|k| {
            let mut e = vec![0.0; big];
            e[k] = 1.0;
            horizontal_projection(&e, x0, &ax)
        })
        .collect();
    let mut us = Vec::new();
    let mut vs = Vec::new();
    for _ in 0..n {
        pool.retain(|w| w.iter().any(|v| v.abs() > 1e-12));
        let u = pool.first().cloned().ok_or_else(|| Error::DegenerateHorizontal("frame construction ran out of vectors".into()))?;
        let (best, val) = pool
            .iter()
            .enumerate()
            .map(|(k, w)| (k, omega_prime(&u, w)))
            .fold((0, 0.0f64), |acc, (k, v)| if v.abs() > acc.1.abs() { (k, v) } else { acc });
        if !(val.abs() > 1e-10) {
            return Err(Error::DegenerateHorizontal("no symplectic partner in H".into()));
        }
        let v: Vec<f64> = pool[best].iter().map(|c| c / val).collect();
        pool.remove(best);
        pool.remove(0);
        for z in &mut pool {
            let zu = omega_prime(z, &u);
            let zv = omega_prime(z, &v);
            for i in 0..big {
                z[i] += zu * v[i] - zv * u[i];
            }
        }
        us.push(u);
        vs.push(v);
    }
    us.extend(vs);
    Ok(us)
}

/// A chart `y ↦ x(y) ∈ Σ_A` around `x0`.
#[derive(Clone, Debug)]
pub struct SigmaChart {
    a: SpElement,
    x0: Vec<f64>,
    frame: Vec<Vec<f64>>,
    radius: f64,
}

pub fn build_chart(a: &SpElement, x0: &[f64], radius: f64) -> Result<SigmaChart> {
    check_base(a, x0)?;
    let frame = symplectic_frame(a, x0)?;
    build_chart_with_frame(a, x0, frame, radius)
}

fn check_base(a: &SpElement, x0: &[f64]) -> Result<()> {
    if x0.len() != a.size {
        return Err(Error::DimensionMismatch(format!("base point of length {} for N = {}", x0.len(), a.size)));
    }
    let h = a.hamiltonian(x0);
    if !((h - 1.0).abs() < BASE_TOL) {
        return Err(Error::Precondition(format!("base point is not on Σ_A: Ω′(x0, Ax0) = {h}")));
    }
    Ok(())
}

pub fn build_chart_with_frame(a: &SpElement, x0: &[f64], frame: Vec<Vec<f64>>, radius: f64) -> Result<SigmaChart> {
    check_base(a, x0)?;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidInput(format!("chart radius {radius} must be positive")));
    }
    let big = a.size;
    let d = big - 2;
    if frame.len() != d || frame.iter().any(|f| f.len() != big) {
        return Err(Error::DimensionMismatch(format!("frame must have {d} vectors of length {big}")));
    }
    let ax = a.apply(x0);
    for f in &frame {
        if omega_prime(x0, f).abs() > BASE_TOL || omega_prime(&ax, f).abs() > BASE_TOL {
            return Err(Error::DegenerateHorizontal("frame vector not in ⟨x0, Ax0⟩^⊥".into()));
        }
    }
    let std = standard_matrix(d);
    for i in 0..d {
        for j in 0..d {
            if (omega_prime(&frame[i], &frame[j]) - std[i * d + j]).abs() > BASE_TOL {
                return Err(Error::DegenerateHorizontal("frame is not symplectic".into()));
            }
        }
    }
    // Ω′(x0 + Fy, A(x0 + Fy)) = 1 + yᵀBy with B_ij = Ω′(f_i, A f_j)
    let b = DMatrix::from_fn(d, d, |i, j| {
        0.5 * (omega_prime(&frame[i], &a.apply(&frame[j])) + omega_prime(&frame[j], &a.apply(&frame[i])))
    });
    let lmin = SymmetricEigen::new(b).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let qmin = 1.0 + radius * radius * lmin.min(0.0);
    if !(qmin > 0.0) {
        return Err(Error::ChartTooLarge { min: qmin, radius });
    }
    Ok(SigmaChart { a: a.clone(), x0: x0.to_vec(), frame, radius })
}

/// Jets of the embedding and the horizontal lifts of the coordinate fields.
pub struct Lifts {
    /// `x(y)`, one order above the lifts.
    pub x: Vec<Jet>,
    /// `X̄_i = ∂_i x + α_i Ax + β_i x`, in `H_x`.
    pub xbar: Vec<Vec<Jet>>,
    /// The coefficient `α_i` of the flow direction.
    pub alpha: Vec<Jet>,
}

impl SigmaChart {
    /// Reduced dimension `2n`.
    pub fn dim(&self) -> usize {
        self.a.size - 2
    }

    pub fn a(&self) -> &SpElement {
        &self.a
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn frame(&self) -> &[Vec<f64>] {
        &self.frame
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn raw(&self, y: &[f64]) -> Vec<f64> {
        let mut v = self.x0.clone();
        for (f, yi) in self.frame.iter().zip(y) {
            for (vi, fi) in v.iter_mut().zip(f) {
                *vi += yi * fi;
            }
        }
        v
    }

    pub fn embed(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_point(self.dim(), y)?;
        sigma_project(&self.a, &self.raw(y))
    }

    pub fn embed_jets(&self, y: &[f64], order: usize) -> Result<Vec<Jet>> {
        check_point(self.dim(), y)?;
        check_order(order)?;
        let vars = Jet::variables(y, order);
        let v: Vec<Jet> = (0..self.a.size)
            .map(|k| {
                let mut acc = vars[0].lift(self.x0[k]);
                for (i, f) in self.frame.iter().enumerate() {
                    if f[k] != 0.0 {
                        acc.axpy(f[k], &vars[i]);
                    }
                }
                acc
            })
            .collect();
        let av = matvec_jets(&self.a.a, &v);
        let q = omega_prime_jets(&v, &av);
        if !(q.value() > 0.0) {
            return Err(Error::OffCone(q.value()));
        }
        let s = q.sqrt().recip();
        Ok(v.iter().map(|c| c * &s).collect())
    }

    /// Lifts at `order`, the embedding at `order + 1`.
    pub fn lifts(&self, y: &[f64], order: usize) -> Result<Lifts> {
        let d = self.dim();
        let x = self.embed_jets(y, order + 1)?;
        let xt: Vec<Jet> = x.iter().map(|c| c.truncate(order)).collect();
        let ax = matvec_jets(&self.a.a, &xt);
        // [Ω′(x,Ax)  Ω′(x,x) ] [α]   [-Ω′(x, ∂x) ]
        // [Ω′(Ax,Ax) Ω′(Ax,x)] [β] = [-Ω′(Ax, ∂x)]
        let m = vec![omega_prime_jets(&xt, &ax), omega_prime_jets(&xt, &xt), omega_prime_jets(&ax, &ax), omega_prime_jets(&ax, &xt)];
        let dx: Vec<Vec<Jet>> = (0..d).map(|i| x.iter().map(|c| c.d(i)).collect()).collect();
        let mut rhs = Vec::with_capacity(2 * d);
        for base in [&xt, &ax] {
            for dxi in &dx {
                rhs.push(-omega_prime_jets(base, dxi));
            }
        }
        let sol = linalg::solve(&m, &rhs, 2, d, "horizontal lift").map_err(|e| match e {
            Error::Singular(s) => Error::DegenerateHorizontal(s),
            other => other,
        })?;
        let mut xbar = Vec::with_capacity(d);
        for i in 0..d {
            let (al, be) = (&sol[i], &sol[d + i]);
            xbar.push((0..self.a.size).map(|k| &(&dx[i][k] + &(al * &ax[k])) + &(be * &xt[k])).collect());
        }
        Ok(Lifts { x, xbar, alpha: sol[..d].to_vec() })
    }

    /// `ω^red_ij = Ω′(X̄_i, X̄_j)` as values.
    pub fn reduced_form_at(&self, y: &[f64]) -> Result<Vec<f64>> {
        let om = ReducedForm { chart: self.clone() }.omega(y, 0)?;
        Ok(linalg::values(&om))
    }

    pub fn form(&self) -> ReducedForm {
        ReducedForm { chart: self.clone() }
    }

    pub fn connection(&self) -> ReducedConnection {
        ReducedConnection { chart: self.clone() }
    }

    pub fn potential(&self) -> ReducedPotential {
        ReducedPotential { chart: self.clone() }
    }

    /// `count` points drawn uniformly from the cube of half-width
    /// `radius/√(2n)`, which lies inside the chart ball.
    pub fn sample_points(&self, count: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
        let d = self.dim();
        let h = self.radius / (d as f64).sqrt();
        (0..count).map(|_| (0..d).map(|_| rng.random_range(-h..h)).collect()).collect()
    }
}

/// The reduced form `ω^red` on a chart.
#[derive(Clone, Debug)]
pub struct ReducedForm {
    chart: SigmaChart,
}

impl SymplecticForm for ReducedForm {
    fn dim(&self) -> usize {
        self.chart.dim()
    }

    fn omega(&self, y: &[f64], order: usize) -> Result<Vec<Jet>> {
        let d = self.dim();
        let l = self.chart.lifts(y, order)?;
        let mut out = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                out.push(omega_prime_jets(&l.xbar[i], &l.xbar[j]));
            }
        }
        Ok(out)
    }
}

/// The reduced connection, from
/// `∇^red_X Y = π_*(∇_X̄ Ȳ - Ω′(AX̄, Ȳ)x + Ω′(X̄, Ȳ)Ax)`.
///
/// `Ȳ` is extended to a neighbourhood equivariantly along `exp(tA)`, so the
/// flat derivative along `X̄_i = ∂_i x + α_i Ax` is `∂_i Ȳ + α_i AȲ`. The
/// components are read off with `ω^red` since `π_*` of a horizontal vector
/// `v` is `Σ_k c_k ∂_k` with `Ω′(X̄_l, v) = ω^red_lk c_k`.
#[derive(Clone, Debug)]
pub struct ReducedConnection {
    chart: SigmaChart,
}

impl Connection for ReducedConnection {
    fn dim(&self) -> usize {
        self.chart.dim()
    }

    fn gamma(&self, y: &[f64], order: usize) -> Result<Vec<Jet>> {
        check_order(order + 1)?;
        let d = self.dim();
        let big = self.chart.a.size;
        let l = self.chart.lifts(y, order + 1)?;
        let xb: Vec<Vec<Jet>> = l.xbar.iter().map(|v| v.iter().map(|c| c.truncate(order)).collect()).collect();
        let xt: Vec<Jet> = l.x.iter().map(|c| c.truncate(order)).collect();
        let ax = matvec_jets(&self.chart.a.a, &xt);
        let axb: Vec<Vec<Jet>> = xb.iter().map(|v| matvec_jets(&self.chart.a.a, v)).collect();
        let mut omega = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                omega.push(omega_prime_jets(&xb[i], &xb[j]));
            }
        }
        let mut rhs = vec![xt[0].lift(0.0); d * d * d];
        for i in 0..d {
            let al = l.alpha[i].truncate(order);
            for j in 0..d {
                let w_ij = omega_prime_jets(&xb[i], &xb[j]);
                let a_ij = omega_prime_jets(&axb[i], &xb[j]);
                let v: Vec<Jet> = (0..big)
                    .map(|k| {
                        let mut c = l.xbar[j][k].d(i);
                        c += &al * &axb[j][k];
                        c -= &a_ij * &xt[k];
                        c += &w_ij * &ax[k];
                        c
                    })
                    .collect();
                for m in 0..d {
                    rhs[m * d * d + i * d + j] = omega_prime_jets(&xb[m], &v);
                }
            }
        }
        let g = linalg::solve(&omega, &rhs, d, d * d, "reduced form").map_err(|e| match e {
            Error::Singular(s) => Error::DegenerateHorizontal(s),
            other => other,
        })?;
        Ok(g)
    }
}

/// `λ_j = ½ Ω′(x, ∂_j x)`, a primitive of `ω^red` on the chart.
#[derive(Clone, Debug)]
pub struct ReducedPotential {
    chart: SigmaChart,
}

impl OneForm for ReducedPotential {
    fn dim(&self) -> usize {
        self.chart.dim()
    }

    fn lambda(&self, y: &[f64], order: usize) -> Result<Vec<Jet>> {
        check_order(order + 1)?;
        let x = self.chart.embed_jets(y, order + 1)?;
        let xt: Vec<Jet> = x.iter().map(|c| c.truncate(order)).collect();
        Ok((0..self.dim())
            .map(|j| {
                let dx: Vec<Jet> = x.iter().map(|c| c.d(j)).collect();
                omega_prime_jets(&xt, &dx) * 0.5
            })
            .collect())
    }
}

/// Invariants of the reduced connection against the closed-form pullbacks
/// `ρX = -2(n+1) Ā_x X̄`, `U = -2(n+1)(2n+1) Ā²_x x`,
/// `f = 2(n+1)(2n+1) Ω′(A²x, Ax)`, where `Ā^k_x` is `A^k` followed by the
/// projection onto `H_x`.
#[derive(Clone, Debug)]
pub struct PointCertification {
    pub y: Vec<f64>,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    pub f: f64,
    pub k: f64,
    pub rho_formula: Vec<f64>,
    pub u_formula: Vec<f64>,
    pub f_formula: f64,
    pub rho_dev: f64,
    pub u_dev: f64,
    pub f_dev: f64,
    pub w_norm: f64,
    pub preferred: f64,
    pub rebuild: f64,
}

/// The closed-form `(ρ, U, f)` at a chart point.
pub fn formula_invariants(chart: &SigmaChart, y: &[f64]) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let d = chart.dim();
    let n = (d / 2) as f64;
    let a = &chart.a;
    let l = chart.lifts(y, 0)?;
    let x: Vec<f64> = l.x.iter().map(Jet::value).collect();
    let xb: Vec<Vec<f64>> = l.xbar.iter().map(|v| v.iter().map(Jet::value).collect()).collect();
    let ax = a.apply(&x);
    let a2x = a.apply(&ax);
    let om: Vec<Jet> = (0..d * d).map(|k| Jet::constant(1, 0, omega_prime(&xb[k / d], &xb[k % d]))).collect();
    let inv = linalg::values(&linalg::inverse(&om, d, "ω^red")?);
    let c1 = -2.0 * (n + 1.0);
    let c2 = -2.0 * (n + 1.0) * (2.0 * n + 1.0);
    let mut rho = vec![0.0; d * d];
    let mut u = vec![0.0; d];
    for k in 0..d {
        for l in 0..d {
            let w = inv[k * d + l];
            for j in 0..d {
                rho[k * d + j] += c1 * w * omega_prime(&xb[l], &a.apply(&xb[j]));
            }
            u[k] += c2 * w * omega_prime(&xb[l], &a2x);
        }
    }
    let f = -c2 * omega_prime(&a2x, &ax);
    Ok((rho, u, f))
}

fn max_dev(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

pub fn certify_point(chart: &SigmaChart, y: &[f64], w_tol: f64) -> Result<PointCertification> {
    let conn = chart.connection();
    let form = chart.form();
    let p = PointData::at(&conn, &form, y, 3)?;
    let c = CurvatureData::new(&p);
    let preferred = connlab::preferred_residual_at(&p, &c.ricci);
    let inv = connlab::ricci_type_invariants_at(&p, w_tol)?;
    let (rho_f, u_f, f_f) = formula_invariants(chart, y)?;
    Ok(PointCertification {
        y: y.to_vec(),
        rho_dev: max_dev(&inv.rho, &rho_f),
        u_dev: max_dev(&inv.u, &u_f),
        f_dev: (inv.f - f_f).abs(),
        rho: inv.rho,
        u: inv.u,
        f: inv.f,
        k: inv.k,
        rho_formula: rho_f,
        u_formula: u_f,
        f_formula: f_f,
        w_norm: inv.w_norm,
        preferred,
        rebuild: inv.rebuild_residual,
    })
}

/// Summary over a set of chart points.
#[derive(Clone, Debug)]
pub struct CertificationReport {
    pub points: Vec<PointCertification>,
    pub rho_dev: f64,
    pub u_dev: f64,
    pub f_dev: f64,
    pub k_mean: f64,
    pub k_spread: f64,
    pub w_max: f64,
    pub preferred_max: f64,
    pub rebuild_max: f64,
}

/// Measure all deviations without judging them.
pub fn certification(chart: &SigmaChart, points: &[Vec<f64>], w_tol: f64) -> Result<CertificationReport> {
    if points.is_empty() {
        return Err(Error::InvalidInput("no chart points given".into()));
    }
    let results = par_map(points, |y| certify_point(chart, y, w_tol));
    let pts = results.into_iter().collect::<Result<Vec<_>>>()?;
    let fold = |g: &dyn Fn(&PointCertification) -> f64| pts.iter().map(g).fold(0.0f64, f64::max);
    let kmin = pts.iter().map(|p| p.k).fold(f64::INFINITY, f64::min);
    let kmax = pts.iter().map(|p| p.k).fold(f64::NEG_INFINITY, f64::max);
    Ok(CertificationReport {
        rho_dev: fold(&|p| p.rho_dev),
        u_dev: fold(&|p| p.u_dev),
        f_dev: fold(&|p| p.f_dev),
        k_mean: pts.iter().map(|p| p.k).sum::<f64>() / pts.len() as f64,
        k_spread: kmax - kmin,
        w_max: fold(&|p| p.w_norm),
        preferred_max: fold(&|p| p.preferred),
        rebuild_max: fold(&|p| p.rebuild),
        points: pts,
    })
}

/// [`certification`], failing when a pullback formula deviates beyond `tol`.
pub fn certify_reduction(chart: &SigmaChart, points: &[Vec<f64>], tol: f64) -> Result<CertificationReport> {
    let rep = certification(chart, points, connlab::RICCI_TYPE_TOL)?;
    for (what, dev) in [("ρ", rep.rho_dev), ("U", rep.u_dev), ("f", rep.f_dev), ("K spread", rep.k_spread)] {
        if !(dev <= tol) {
            return Err(Error::CertificationFailed { what: what.into(), deviation: dev, tol });
        }
    }
    Ok(rep)
}

/// Position of the block coordinates `(b0, b1, c_1..c_n, d_1..d_n)` in the
/// standard layout of `ℝ^{2n+2}`, where `Ω′(b0, b1) = 1`.
fn block_pos(n: usize, k: usize) -> usize {
    match k {
        0 => 0,
        1 => n + 1,
        k if k < n + 2 => k - 1,
        k => k,
    }
}

/// The element
/// `Ã = [[0, f/c₂, -u̲/c₂], [1, 0, 0], [0, -u/c₂, -ρ/c₁]]`
/// with `c₁ = 2(n+1)`, `c₂ = 2(n+1)(2n+1)` and `u̲ = Ω(u, ·)`, written in
/// the block basis `(b0, b1, ℝ^{2n})` and returned in the standard layout.
/// Reducing along `Σ_Ã` at `e₀` gives back `(ρ, u, f)` at the chart centre.
pub fn a_tilde(rho: &[f64], u: &[f64], f: f64) -> Result<SpElement> {
    let d = u.len();
    if d == 0 || d % 2 != 0 || d > 6 {
        return Err(Error::UnsupportedDimension(d));
    }
    if rho.len() != d * d {
        return Err(Error::DimensionMismatch(format!("ρ has {} entries for 2n = {d}", rho.len())));
    }
    if rho.iter().chain(u).any(|v| !v.is_finite()) || !f.is_finite() {
        return Err(Error::InvalidInput("non-finite data".into()));
    }
    let res = membership_residual(rho, d);
    if res > SP_TOL * (1.0 + linalg::max_abs(rho)) {
        return Err(Error::InvalidInput(format!("ρ is not in sp(2n): residual {res:e}")));
    }
    let n = d / 2;
    let big = d + 2;
    let c1 = 2.0 * (n as f64 + 1.0);
    let c2 = c1 * (2.0 * n as f64 + 1.0);
    let om = standard_matrix(d);
    let mut m = vec![0.0; big * big];
    let mut set = |r: usize, c: usize, v: f64| m[block_pos(n, r) * big + block_pos(n, c)] = v;
    set(1, 0, 1.0);
    set(0, 1, f / c2);
    for k in 0..d {
        let u_low: f64 = (0..d).map(|i| u[i] * om[i * d + k]).sum();
        set(0, k + 2, -u_low / c2);
        set(k + 2, 1, -u[k] / c2);
        for j in 0..d {
            set(k + 2, j + 2, -rho[k * d + j] / c1);
        }
    }
    SpElement::new(big, m)
}

/// `e₀ = (1, 0, …, 0)`.
pub fn e0(size: usize) -> Vec<f64> {
    let mut v = vec![0.0; size];
    v[0] = 1.0;
    v
}

#[cfg(test)]
mod tests;
