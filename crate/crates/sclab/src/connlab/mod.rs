//! Symplectic connections on coordinate charts: symplectization, curvature
//! decomposition, Ricci-type invariants and the Koszul operators.

mod fields;
pub mod koszul;
pub mod tensor;

pub use fields::{
    add_symmetric, canonical_symmetric_connection, check_nondegenerate, closedness_defect, d_lambda,
    standard_matrix, symplectize, CanonicalSymmetric, ConnRef, Connection, ExprConnection, ExprForm, ExprOneForm,
    ExteriorDerivative, FormRef, OneForm, OneFormRef, Perturbed, SymplecticForm, Symplectized,
};
pub(crate) use fields::{check_even_dim, check_point};

use crate::error::{Error, Result};
use crate::jets::{check_order, Jet};
use crate::linalg;
use tensor::{i3, i4, Slot};

/// Default tolerance for the Ricci-type test `|W| < tol`.
pub const RICCI_TYPE_TOL: f64 = 1e-7;

/// Jets of `ω` (one order above), `ω^{-1}` and `Γ` at a point.
pub struct PointData {
    pub d: usize,
    pub omega: Vec<Jet>,
    pub omega_inv: Vec<Jet>,
    pub gamma: Vec<Jet>,
}

impl PointData {
    /// Evaluate `Γ` at `order` and `ω` at `order + 1`.
    pub fn at(conn: &dyn Connection, form: &dyn SymplecticForm, x: &[f64], order: usize) -> Result<PointData> {
        check_order(order + 1)?;
        let d = form.dim();
        if conn.dim() != d {
            return Err(Error::DimensionMismatch("connection and form dimensions differ".into()));
        }
        check_point(d, x)?;
        let gamma = conn.gamma(x, order)?;
        let omega = form.omega(x, order + 1)?;
        check_nondegenerate(&omega, d)?;
        let omega_inv = linalg::inverse(&omega, d, "ω")?;
        Ok(PointData { d, omega, omega_inv, gamma })
    }

    pub fn torsion(&self) -> Vec<Jet> {
        tensor::torsion(&self.gamma, self.d)
    }

    pub fn nabla_omega(&self) -> Vec<Jet> {
        tensor::nabla_omega(&self.omega, &self.gamma, self.d)
    }

    pub fn curvature(&self) -> Vec<Jet> {
        tensor::curvature(&self.gamma, self.d)
    }
}

/// Curvature and its traces at a point.
pub struct CurvatureData {
    pub d: usize,
    pub r: Vec<Jet>,
    pub ricci: Vec<Jet>,
    pub rho: Vec<Jet>,
    pub e: Vec<Jet>,
    pub w: Vec<Jet>,
}

impl CurvatureData {
    pub fn new(p: &PointData) -> CurvatureData {
        let d = p.d;
        let r = p.curvature();
        let ricci = tensor::ricci(&r, d);
        let rho = tensor::rho(&ricci, &p.omega_inv, d);
        let e = tensor::e_part(&ricci, &rho, &p.omega, d);
        let w: Vec<Jet> = r.iter().zip(&e).map(|(a, b)| a - b).collect();
        CurvatureData { d, r, ricci, rho, e, w }
    }

    pub fn w_norm(&self) -> f64 {
        linalg::max_abs_jets(&self.w)
    }
}

/// Residual of the preferred-connection equation: the largest cyclic sum
/// `(∇_X r)(Y,Z) + (∇_Y r)(Z,X) + (∇_Z r)(X,Y)` over basis triples.
/// Needs `Γ` at order >= 2.
pub fn preferred_residual_at(p: &PointData, ricci: &[Jet]) -> f64 {
    let d = p.d;
    let nr = tensor::covariant(ricci, &[Slot::Down, Slot::Down], &p.gamma, d);
    let mut worst = 0.0f64;
    for x in 0..d {
        for y in 0..d {
            for z in 0..d {
                let v = nr[i3(d, x, y, z)].value() + nr[i3(d, y, z, x)].value() + nr[i3(d, z, x, y)].value();
                worst = worst.max(v.abs());
            }
        }
    }
    worst
}

pub fn preferred_residual(conn: &dyn Connection, form: &dyn SymplecticForm, x: &[f64]) -> Result<f64> {
    let p = PointData::at(conn, form, x, 2)?;
    let c = CurvatureData::new(&p);
    Ok(preferred_residual_at(&p, &c.ricci))
}

/// Pointwise diagnostics of a connection.
#[derive(Clone, Debug, PartialEq)]
pub struct ConnectionReport {
    pub torsion: f64,
    pub nabla_omega: f64,
    pub bianchi: f64,
    pub bianchi_koszul: f64,
    pub lowered_symmetry: f64,
    pub ricci_symmetry: f64,
    pub ricci_trace_relation: f64,
    pub w_norm: f64,
    pub preferred: f64,
}

/// Torsion, parallelism, curvature identities and the Ricci-type test.
pub fn connection_check(conn: &dyn Connection, form: &dyn SymplecticForm, x: &[f64]) -> Result<ConnectionReport> {
    let p = PointData::at(conn, form, x, 2)?;
    let d = p.d;
    check_even_dim(d)?;
    let c = CurvatureData::new(&p);
    let low = tensor::lower_curvature(&c.r, &p.omega, d);
    let mut lowered_symmetry = 0.0f64;
    for k in 0..d {
        for l in 0..d {
            for j in 0..d {
                for t in 0..d {
                    let a = low[i4(d, k, l, j, t)].value();
                    lowered_symmetry = lowered_symmetry
                        .max((a - low[i4(d, k, l, t, j)].value()).abs())
                        .max((a + low[i4(d, l, k, j, t)].value()).abs());
                }
            }
        }
    }
    let mut ricci_symmetry = 0.0f64;
    for a in 0..d {
        for b in 0..d {
            ricci_symmetry = ricci_symmetry.max((c.ricci[a * d + b].value() - c.ricci[b * d + a].value()).abs());
        }
    }
    let r2 = tensor::ricci_second(&c.r, &p.omega, &p.omega_inv, d);
    let rel: Vec<f64> = r2.iter().zip(&c.ricci).map(|(a, b)| a.value() + 2.0 * b.value()).collect();
    Ok(ConnectionReport {
        torsion: linalg::max_abs_jets(&p.torsion()),
        nabla_omega: linalg::max_abs_jets(&p.nabla_omega()),
        bianchi: tensor::bianchi_cyclic(&c.r, d),
        bianchi_koszul: koszul::bianchi_check(&low, d)?,
        lowered_symmetry,
        ricci_symmetry,
        ricci_trace_relation: linalg::max_abs(&rel),
        w_norm: c.w_norm(),
        preferred: preferred_residual_at(&p, &c.ricci),
    })
}

/// The algebraic curvature identities at a point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CurvatureIdentities {
    /// Cyclic first Bianchi sum.
    pub bianchi: f64,
    pub ricci_symmetry: f64,
    /// `r' + 2r`.
    pub ricci_trace_relation: f64,
    /// `E + W - R`.
    pub decomposition: f64,
    /// Ricci trace of `W`.
    pub w_trace: f64,
    /// `max |R|`, for scaling.
    pub magnitude: f64,
    pub ricci_max: f64,
    pub w_norm: f64,
}

impl CurvatureIdentities {
    pub fn max(&self) -> f64 {
        self.bianchi.max(self.ricci_symmetry).max(self.ricci_trace_relation).max(self.decomposition).max(self.w_trace)
    }
}

/// Curvature identities from `Γ` at order 1; works for any torsion-free
/// symplectic connection.
pub fn curvature_identities(conn: &dyn Connection, form: &dyn SymplecticForm, x: &[f64]) -> Result<CurvatureIdentities> {
    let p = PointData::at(conn, form, x, 1)?;
    let d = p.d;
    check_even_dim(d)?;
    let c = CurvatureData::new(&p);
    let mut ricci_symmetry = 0.0f64;
    for a in 0..d {
        for b in 0..d {
            ricci_symmetry = ricci_symmetry.max((c.ricci[a * d + b].value() - c.ricci[b * d + a].value()).abs());
        }
    }
    let r2 = tensor::ricci_second(&c.r, &p.omega, &p.omega_inv, d);
    let rel: Vec<f64> = r2.iter().zip(&c.ricci).map(|(a, b)| a.value() + 2.0 * b.value()).collect();
    let decomposition = c.r.iter().zip(&c.e).zip(&c.w).map(|((r, e), w)| (e.value() + w.value() - r.value()).abs()).fold(0.0, f64::max);
    Ok(CurvatureIdentities {
        bianchi: tensor::bianchi_cyclic(&c.r, d),
        ricci_symmetry,
        ricci_trace_relation: linalg::max_abs(&rel),
        decomposition,
        w_trace: linalg::max_abs_jets(&tensor::ricci(&c.w, d)),
        magnitude: linalg::max_abs_jets(&c.r),
        ricci_max: linalg::max_abs_jets(&c.ricci),
        w_norm: c.w_norm(),
    })
}

/// Largest `|∇R|` component; zero for a locally symmetric connection.
pub fn curvature_parallelism(conn: &dyn Connection, form: &dyn SymplecticForm, x: &[f64]) -> Result<f64> {
    let p = PointData::at(conn, form, x, 2)?;
    let r = p.curvature();
    let nr = tensor::covariant(&r, &[Slot::Up, Slot::Down, Slot::Down, Slot::Down], &p.gamma, p.d);
    Ok(linalg::max_abs_jets(&nr))
}

/// The invariants `(ρ, U, f, K)` of a Ricci-type connection, with
/// `∇_X ρ = -1/(2n+1) (X⊗U̲ + U⊗X̲)`,
/// `∇_X U = -(2n+1)/(2(n+1)) ρ²X + f X`,
/// `K = tr ρ² + 4(n+1)/(2n+1) f`.
#[derive(Clone, Debug)]
pub struct RicciTypeInvariants {
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    pub f: f64,
    pub k: f64,
    pub w_norm: f64,
    pub u_residual: f64,
    pub f_residual: f64,
    pub rebuild_residual: f64,
}

/// Jets of the Ricci-type invariants. `rho` and `u` carry one and zero
/// orders fewer than the input respectively.
pub struct RicciTypeJets {
    pub rho: Vec<Jet>,
    pub u: Vec<Jet>,
    pub u_residual: f64,
    pub w_norm: f64,
    pub rebuild_residual: f64,
}

/// Fit `U` from `∇ρ`. Needs `Γ` at order >= 2; `U` comes out at order - 2.
pub fn ricci_type_u(p: &PointData, tol: f64) -> Result<RicciTypeJets> {
    let d = p.d;
    check_even_dim(d)?;
    let n = d / 2;
    let c = CurvatureData::new(p);
    let w_norm = c.w_norm();
    if !(w_norm < tol) {
        return Err(Error::NotRicciType { w_norm, tol });
    }
    let rebuild = tensor::ricci_type_rebuild(&c.rho, &tensor::truncate_all(&p.omega, c.rho[0].order()), d);
    let rebuild_residual = c.r.iter().zip(&rebuild).fold(0.0f64, |m, (a, b)| m.max((a.value() - b.value()).abs()));
    let nrho = tensor::covariant(&c.rho, &[Slot::Up, Slot::Down], &p.gamma, d);
    let order = nrho[0].order();
    let omega = tensor::truncate_all(&p.omega, order);
    // (∇_k ρ)^i_j = -1/(2n+1) [ (Σ_m U^m ω_mj) δ^i_k + ω_kj U^i ], linear in U.
    let c0 = -1.0 / (2.0 * n as f64 + 1.0);
    let zero = nrho[0].lift(0.0);
    let rows = d * d * d;
    let mut a = vec![zero.clone(); rows * d];
    for k in 0..d {
        for i in 0..d {
            for j in 0..d {
                let row = i3(d, k, i, j);
                for m in 0..d {
                    let mut coef = zero.clone();
                    if i == k {
                        coef += &omega[m * d + j];
                    }
                    if m == i {
                        coef += &omega[k * d + j];
                    }
                    a[row * d + m] = coef * c0;
                }
            }
        }
    }
    // normal equations
    let mut ata = vec![zero.clone(); d * d];
    let mut atb = vec![zero.clone(); d];
    for row in 0..rows {
        for m in 0..d {
            let am = &a[row * d + m];
            if am.coeffs().iter().all(|&v| v == 0.0) {
                continue;
            }
            atb[m] += am * &nrho[row];
            for l in 0..d {
                ata[m * d + l] += am * &a[row * d + l];
            }
        }
    }
    let u = linalg::solve(&ata, &atb, d, 1, "normal equations for U")?;
    let mut u_residual = 0.0f64;
    for row in 0..rows {
        let mut v = -nrho[row].value();
        for m in 0..d {
            v += a[row * d + m].value() * u[m].value();
        }
        u_residual = u_residual.max(v.abs());
    }
    Ok(RicciTypeJets { rho: c.rho, u, u_residual, w_norm, rebuild_residual })
}

/// Recover `(ρ, U, f, K)`. Needs `Γ` at order 3 (so `ω` at order 4).
pub fn ricci_type_invariants(
    conn: &dyn Connection,
    form: &dyn SymplecticForm,
    x: &[f64],
    tol: f64,
) -> Result<RicciTypeInvariants> {
    let p = PointData::at(conn, form, x, 3)?;
    ricci_type_invariants_at(&p, tol)
}

pub fn ricci_type_invariants_at(p: &PointData, tol: f64) -> Result<RicciTypeInvariants> {
    let d = p.d;
    let n = (d / 2) as f64;
    let j = ricci_type_u(p, tol)?;
    if !(j.u_residual < tol) {
        return Err(Error::Inconsistent(format!("∇ρ does not have the Ricci-type form: residual {:e}", j.u_residual)));
    }
    let nu = tensor::covariant(&j.u, &[Slot::Up], &p.gamma, d);
    let rho = linalg::values(&j.rho);
    let rho2 = linalg::values(&linalg::matmul(&tensor::truncate_all(&j.rho, 0), &tensor::truncate_all(&j.rho, 0), d, d, d));
    let tr2: f64 = (0..d).map(|i| rho2[i * d + i]).sum();
    let c = (2.0 * n + 1.0) / (2.0 * (n + 1.0));
    // nu[(k, i)] = (∇_k U)^i = -c (ρ²)^i_k + f δ^i_k
    let trace: f64 = (0..d).map(|i| nu[i * d + i].value()).sum();
    let f = (trace + c * tr2) / d as f64;
    let mut f_residual = 0.0f64;
    for k in 0..d {
        for i in 0..d {
            let target = -c * rho2[i * d + k] + if i == k { f } else { 0.0 };
            f_residual = f_residual.max((nu[k * d + i].value() - target).abs());
        }
    }
    let k = tr2 + 4.0 * (n + 1.0) / (2.0 * n + 1.0) * f;
    Ok(RicciTypeInvariants {
        rho,
        u: linalg::values(&j.u),
        f,
        k,
        w_norm: j.w_norm,
        u_residual: j.u_residual,
        f_residual,
        rebuild_residual: j.rebuild_residual,
    })
}
