//! Pointwise linear algebra of compatible complex structures: the
//! projections `j±`, the algebraic integrability condition
//! `j⁺R(j⁻X, j⁻Y)j⁻Z = 0`, torsion correction, and the uniqueness rank.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::connlab::tensor::{self, i3, i4};
use crate::connlab::{check_nondegenerate, check_point, ConnRef, Connection, FormRef, PointData, SymplecticForm};
use crate::error::{Error, Result};
use crate::jets::{check_order, Jet};
use crate::linalg;
use crate::reduction::random_symplectic;

/// Tolerance of the `CompatibleJ` invariants.
pub const J_TOL: f64 = 1e-12;

fn mat(d: usize, v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(d, d, v)
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let (r, c) = m.shape();
    (0..r * c).map(|k| m[(k / c, k % c)]).collect()
}

fn check_matrix(d: usize, v: &[f64], what: &str) -> Result<()> {
    if d == 0 || d % 2 != 0 {
        return Err(Error::UnsupportedDimension(d));
    }
    if v.len() != d * d {
        return Err(Error::DimensionMismatch(format!("{what} has {} entries, expected {}", v.len(), d * d)));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NumericDomain(format!("{what} has non-finite entries")));
    }
    Ok(())
}

/// A linear complex structure compatible with a constant symplectic matrix:
/// `j² = -1`, `ω(jX, jY) = ω(X, Y)`, and `B_j(X, Y) = ω(X, jY)` positive.
#[derive(Clone, Debug)]
pub struct CompatibleJ {
    d: usize,
    j: DMatrix<f64>,
    omega: DMatrix<f64>,
}

impl CompatibleJ {
    pub fn new(d: usize, j: &[f64], omega: &[f64]) -> Result<CompatibleJ> {
        check_matrix(d, j, "j")?;
        check_matrix(d, omega, "ω")?;
        let jm = mat(d, j);
        let om = mat(d, omega);
        let sq = (&jm * &jm + DMatrix::identity(d, d)).amax();
        if !(sq < J_TOL) {
            return Err(Error::InvalidInput(format!("j² + 1 = {sq:e}")));
        }
        let inv = (jm.transpose() * &om * &jm - &om).amax();
        if !(inv < J_TOL) {
            return Err(Error::InvalidInput(format!("ω is not j-invariant: {inv:e}")));
        }
        let b = &om * &jm;
        let asym = (&b - b.transpose()).amax();
        if !(asym < J_TOL) {
            return Err(Error::InvalidInput(format!("B_j is not symmetric: {asym:e}")));
        }
        let min = SymmetricEigen::new(b).eigenvalues.min();
        if !(min > 0.0) {
            return Err(Error::InvalidInput(format!("B_j is not positive: smallest eigenvalue {min:e}")));
        }
        Ok(CompatibleJ { d, j: jm, omega: om })
    }

    /// `j₀ = -Ω` for the standard `Ω = [[0, I], [-I, 0]]`, so that `B_{j₀} = I`.
    pub fn standard(d: usize) -> Result<CompatibleJ> {
        let om = crate::connlab::standard_matrix(d);
        let j: Vec<f64> = om.iter().map(|v| -v).collect();
        CompatibleJ::new(d, &j, &om)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn j(&self) -> Vec<f64> {
        row_major(&self.j)
    }

    pub fn omega(&self) -> Vec<f64> {
        row_major(&self.omega)
    }

    /// `B_j(e_a, e_b)` row-major.
    pub fn b_metric(&self) -> Vec<f64> {
        row_major(&(&self.omega * &self.j))
    }

    /// `g j g⁻¹` for an `ω`-symplectic `g`.
    pub fn conjugate(&self, g: &[f64]) -> Result<CompatibleJ> {
        check_matrix(self.d, g, "g")?;
        let gm = mat(self.d, g);
        let gi = gm.clone().try_inverse().ok_or_else(|| Error::Singular("g".into()))?;
        CompatibleJ::new(self.d, &row_major(&(&gm * &self.j * gi)), &self.omega())
    }
}

/// Columns `e_1..e_n, f_1..f_n` with `Pᵀ ω P = [[0, I], [-I, 0]]`.
pub fn symplectic_basis(d: usize, omega: &[f64]) -> Result<Vec<f64>> {
    check_matrix(d, omega, "ω")?;
    let om = mat(d, omega);
    let w = |a: &DVector<f64>, b: &DVector<f64>| (a.transpose() * &om * b)[(0, 0)];
    let mut pool: Vec<DVector<f64>> = (0..d).map(|k| DVector::from_fn(d, |i, _| if i == k { 1.0 } else { 0.0 })).collect();
    let n = d / 2;
    let mut p = DMatrix::zeros(d, d);
    for k in 0..n {
        let e = pool.remove(0);
        let (best, val) = pool.iter().enumerate().map(|(i, v)| (i, w(&e, v))).fold((0, 0.0), |acc, (i, v)| {
            if v.abs() > f64::abs(acc.1) {
                (i, v)
            } else {
                acc
            }
        });
        if !(val.abs() > 1e-12) {
            return Err(Error::DegenerateForm("ω has no symplectic basis".into()));
        }
        let f = pool.remove(best) / val;
        for u in &mut pool {
            let (uf, ue) = (w(u, &f), w(u, &e));
            *u = &*u - &e * uf + &f * ue;
        }
        p.set_column(k, &e);
        p.set_column(n + k, &f);
    }
    Ok(row_major(&p))
}

/// `P j₀ P⁻¹` conjugated by a random `ω`-symplectic matrix.
pub fn random_compatible_j(d: usize, omega: &[f64], seed: u64) -> Result<CompatibleJ> {
    let p = mat(d, &symplectic_basis(d, omega)?);
    let pi = p.clone().try_inverse().ok_or_else(|| Error::Singular("symplectic basis".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = mat(d, &random_symplectic(d, &mut rng, 0.8));
    let om_std = mat(d, &crate::connlab::standard_matrix(d));
    let g = &p * h * &pi;
    let j = &g * (&p * (-om_std) * &pi) * g.try_inverse().ok_or_else(|| Error::Singular("g".into()))?;
    CompatibleJ::new(d, &row_major(&j), omega)
}

/// `j± = ½(1 ∓ ij)`.
pub fn j_projections(j: &CompatibleJ) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let d = j.d;
    let half = Complex64::new(0.5, 0.0);
    let ij = j.j.map(|v| Complex64::new(0.0, v));
    let one = DMatrix::<Complex64>::identity(d, d);
    ((&one - &ij) * half, (&one + &ij) * half)
}

/// Curvature `R^i_jkl` at a point together with the constant `ω` there.
#[derive(Clone, Debug)]
pub struct CurvaturePoint {
    pub d: usize,
    pub omega: Vec<f64>,
    pub r: Vec<f64>,
}

fn consts(v: &[f64]) -> Vec<Jet> {
    v.iter().map(|&x| Jet::constant(1, 0, x)).collect()
}

impl CurvaturePoint {
    pub fn new(d: usize, omega: Vec<f64>, r: Vec<f64>) -> Result<CurvaturePoint> {
        check_matrix(d, &omega, "ω")?;
        if r.len() != d * d * d * d {
            return Err(Error::DimensionMismatch("curvature needs d⁴ entries".into()));
        }
        Ok(CurvaturePoint { d, omega, r })
    }

    pub fn at(conn: &dyn Connection, form: &dyn SymplecticForm, x: &[f64]) -> Result<CurvaturePoint> {
        let p = PointData::at(conn, form, x, 1)?;
        CurvaturePoint::new(p.d, linalg::values(&p.omega), linalg::values(&p.curvature()))
    }

    pub fn flat(d: usize, omega: Vec<f64>) -> Result<CurvaturePoint> {
        CurvaturePoint::new(d, omega, vec![0.0; d * d * d * d])
    }

    /// Build from `R̲(X,Y,Z,T) = ω(R(X,Y)Z, T)` at `[(k,l,j,t)]`.
    pub fn from_lowered(d: usize, omega: Vec<f64>, low: &[f64]) -> Result<CurvaturePoint> {
        check_matrix(d, &omega, "ω")?;
        let inv = linalg::inverse(&consts(&omega), d, "ω")?;
        let r = linalg::values(&tensor::raise_curvature(&consts(low), &inv, d));
        CurvaturePoint::new(d, omega, r)
    }

    fn parts(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let d = self.d;
        let om = consts(&self.omega);
        let inv = linalg::inverse(&om, d, "ω")?;
        let r = consts(&self.r);
        let ric = tensor::ricci(&r, d);
        let rho = tensor::rho(&ric, &inv, d);
        let e = linalg::values(&tensor::e_part(&ric, &rho, &om, d));
        let w = self.r.iter().zip(&e).map(|(a, b)| a - b).collect();
        Ok((e, w))
    }

    /// The Ricci-type part alone.
    pub fn e_part(&self) -> Result<CurvaturePoint> {
        let (e, _) = self.parts()?;
        CurvaturePoint::new(self.d, self.omega.clone(), e)
    }

    /// The Weyl part `W = R - E`.
    pub fn w_part(&self) -> Result<CurvaturePoint> {
        let (_, w) = self.parts()?;
        CurvaturePoint::new(self.d, self.omega.clone(), w)
    }

    pub fn max_abs(&self) -> f64 {
        linalg::max_abs(&self.r)
    }

    pub fn add(&self, other: &CurvaturePoint) -> CurvaturePoint {
        let r = self.r.iter().zip(&other.r).map(|(a, b)| a + b).collect();
        CurvaturePoint { d: self.d, omega: self.omega.clone(), r }
    }

    pub fn scaled(&self, c: f64) -> CurvaturePoint {
        CurvaturePoint { d: self.d, omega: self.omega.clone(), r: self.r.iter().map(|v| c * v).collect() }
    }

    /// `R ↦ g R(g⁻¹·, g⁻¹·) g⁻¹` and `ω ↦ g⁻ᵀ ω g⁻¹`.
    pub fn conjugate(&self, g: &[f64]) -> Result<CurvaturePoint> {
        let d = self.d;
        check_matrix(d, g, "g")?;
        let gm = mat(d, g);
        let gi = gm.clone().try_inverse().ok_or_else(|| Error::Singular("g".into()))?;
        let om = gi.transpose() * mat(d, &self.omega) * &gi;
        let mut r = vec![0.0; d * d * d * d];
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let mut acc = 0.0;
                        for a in 0..d {
                            for b in 0..d {
                                for c in 0..d {
                                    for e in 0..d {
                                        let v = self.r[i4(d, a, b, c, e)];
                                        if v != 0.0 {
                                            acc += gm[(i, a)] * v * gi[(b, j)] * gi[(c, k)] * gi[(e, l)];
                                        }
                                    }
                                }
                            }
                        }
                        r[i4(d, i, j, k, l)] = acc;
                    }
                }
            }
        }
        CurvaturePoint::new(d, row_major(&om), r)
    }
}

/// A Weyl-type curvature: `a` of a random element of `Λ¹ ⊗ S³` (which
/// satisfies Bianchi), minus its Ricci-type part, scaled to max norm `norm`.
pub fn random_w_curvature(d: usize, omega: &[f64], norm: f64, rng: &mut impl Rng) -> Result<CurvaturePoint> {
    use crate::connlab::koszul::{koszul_a, to_curvature_tensor, KoszulSpace};
    let t = KoszulSpace::new(d, 1, 3)?.random(rng);
    let low = to_curvature_tensor(&koszul_a(&t)?);
    let w = CurvaturePoint::from_lowered(d, omega.to_vec(), &low)?.w_part()?;
    let m = w.max_abs();
    if !(m > 1e-12) {
        return Err(Error::Inconsistent("sampled curvature has no Weyl part".into()));
    }
    Ok(w.scaled(norm / m))
}

fn check_pair(curv: &CurvaturePoint, j: &CompatibleJ) -> Result<()> {
    if curv.d != j.d {
        return Err(Error::DimensionMismatch("curvature and j dimensions differ".into()));
    }
    let dev = curv.omega.iter().zip(&row_major(&j.omega)).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if !(dev < 1e-9) {
        return Err(Error::DimensionMismatch(format!("curvature and j use different ω (|Δ| = {dev:e})")));
    }
    Ok(())
}

/// `T[(a,b,c)]`: the vector `j⁺R(j⁻e_a, j⁻e_b)j⁻e_c`.
fn condition_tensor(curv: &CurvaturePoint, j: &CompatibleJ) -> Vec<DVector<Complex64>> {
    let d = curv.d;
    let (jp, jm) = j_projections(j);
    // R^i_{c a b} contracted with j⁻ in the three lower slots
    let mut out = Vec::with_capacity(d * d * d);
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                let mut v = DVector::<Complex64>::zeros(d);
                for i in 0..d {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for jj in 0..d {
                        for k in 0..d {
                            for l in 0..d {
                                let r = curv.r[i4(d, i, jj, k, l)];
                                if r != 0.0 {
                                    acc += jm[(k, a)] * jm[(l, b)] * jm[(jj, c)] * r;
                                }
                            }
                        }
                    }
                    v[i] = acc;
                }
                out.push(&jp * v);
            }
        }
    }
    out
}

/// Largest modulus over basis triples of `j⁺R(j⁻e_a, j⁻e_b)j⁻e_c`.
pub fn integrability_defect(curv: &CurvaturePoint, j: &CompatibleJ) -> Result<f64> {
    check_pair(curv, j)?;
    Ok(condition_tensor(curv, j).iter().flat_map(|v| v.iter().map(|z| z.norm()).collect::<Vec<_>>()).fold(0.0, f64::max))
}

/// Frobenius norm of the same tensor in a `B_j`-orthonormal basis. Unlike
/// the max-modulus defect this is invariant under symplectic conjugation of
/// `(R, j)`.
pub fn integrability_norm(curv: &CurvaturePoint, j: &CompatibleJ) -> Result<f64> {
    check_pair(curv, j)?;
    let d = curv.d;
    let b = &j.omega * &j.j;
    let b = (&b + b.transpose()) * 0.5;
    let chol = Cholesky::new(b).ok_or_else(|| Error::Singular("B_j".into()))?;
    // B = C Cᵀ; the columns of L = C⁻ᵀ are B-orthonormal.
    let c = chol.l();
    let l = c.transpose().try_inverse().ok_or_else(|| Error::Singular("B_j factor".into()))?;
    let ct = c.transpose().map(|v| Complex64::new(v, 0.0));
    let t = condition_tensor(curv, j);
    let mut total = 0.0;
    for a in 0..d {
        for bb in 0..d {
            for cc in 0..d {
                let mut v = DVector::<Complex64>::zeros(d);
                for p in 0..d {
                    for q in 0..d {
                        for r in 0..d {
                            let w = l[(p, a)] * l[(q, bb)] * l[(r, cc)];
                            if w != 0.0 {
                                v += &t[i3(d, p, q, r)] * Complex64::new(w, 0.0);
                            }
                        }
                    }
                }
                // coordinates in the basis L: L⁻¹ v = Cᵀ v
                total += (&ct * v).norm_squared();
            }
        }
    }
    Ok(total.sqrt())
}

/// The symplectic connection obtained from an `ω`-parallel connection with
/// torsion by
/// `ω(∇'_X Y, Z) = ω(∇_X Y, Z) - ½ω(T(X,Y), Z) + ⅙ω(X, T(Y,Z)) + ⅙ω(Y, T(X,Z))`.
pub struct TorsionCorrected {
    base: ConnRef,
    form: FormRef,
}

/// Tolerance on `∇ω` for the input of [`torsion_correct`].
pub const PARALLEL_TOL: f64 = 1e-9;

pub fn torsion_correct(base: ConnRef, form: FormRef, points: &[Vec<f64>]) -> Result<TorsionCorrected> {
    if base.dim() != form.dim() {
        return Err(Error::DimensionMismatch("connection and form dimensions differ".into()));
    }
    for x in points {
        let p = PointData::at(base.as_ref(), form.as_ref(), x, 0)?;
        let dev = linalg::max_abs_jets(&p.nabla_omega());
        if !(dev < PARALLEL_TOL) {
            return Err(Error::InvalidInput(format!("connection is not ω-parallel at {x:?}: |∇ω| = {dev:e}")));
        }
    }
    Ok(TorsionCorrected { base, form })
}

impl Connection for TorsionCorrected {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn gamma(&self, x: &[f64], order: usize) -> Result<Vec<Jet>> {
        check_order(order)?;
        let d = self.dim();
        check_point(d, x)?;
        let g = self.base.gamma(x, order)?;
        let om = self.form.omega(x, order)?;
        check_nondegenerate(&om, d)?;
        let inv = linalg::inverse(&om, d, "ω")?;
        let t = tensor::torsion(&g, d);
        let zero = g[0].lift(0.0);
        // ω(T(a,b), c) and ω(a, T(b,c))
        let t_low = |a: usize, b: usize, c: usize| {
            let mut acc = zero.clone();
            for m in 0..d {
                acc += &t[i3(d, m, a, b)] * &om[m * d + c];
            }
            acc
        };
        let low_t = |a: usize, b: usize, c: usize| {
            let mut acc = zero.clone();
            for m in 0..d {
                acc += &om[a * d + m] * &t[i3(d, m, b, c)];
            }
            acc
        };
        let mut out = g.clone();
        for i in 0..d {
            for j in 0..d {
                let a: Vec<Jet> = (0..d)
                    .map(|k| t_low(i, j, k) * -0.5 + low_t(i, j, k) * (1.0 / 6.0) + low_t(j, i, k) * (1.0 / 6.0))
                    .collect();
                for m in 0..d {
                    for k in 0..d {
                        out[i3(d, m, i, j)] += &a[k] * &inv[k * d + m];
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Result of the uniqueness rank computation.
#[derive(Clone, Debug, PartialEq)]
pub struct UniquenessRank {
    pub rank: usize,
    pub expected: usize,
    pub sigma_max: f64,
    pub sigma_min: f64,
}

/// Relative singular value cutoff for the numerical rank.
pub const RANK_RTOL: f64 = 1e-8;

fn multisets3(d: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for a in 0..d {
        for b in a..d {
            for c in b..d {
                out.push([a, b, c]);
            }
        }
    }
    out
}

fn distinct_perms(m: [usize; 3]) -> Vec<[usize; 3]> {
    let [a, b, c] = m;
    let mut v = vec![[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]];
    v.sort_unstable();
    v.dedup();
    v
}

/// Rank of `B̲ ↦ (B̲(j⁻X, j⁻Y, j⁻Z))_j` on totally symmetric 3-tensors, over
/// `samples` compatible `j` for the standard `ω`.
pub fn uniqueness_rank(d: usize, samples: usize, seed: u64) -> Result<UniquenessRank> {
    let basis = multisets3(d);
    let expected = basis.len();
    if samples < expected {
        return Err(Error::NeedMoreSamples { got: samples, need: expected });
    }
    let om = crate::connlab::standard_matrix(d);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for s in 0..samples {
        let j = random_compatible_j(d, &om, seed.wrapping_add(s as u64))?;
        let (_, jm) = j_projections(&j);
        for &[p, q, r] in &basis {
            let row: Vec<Complex64> = basis
                .iter()
                .map(|&m| {
                    distinct_perms(m)
                        .iter()
                        .map(|&[a, b, c]| jm[(a, p)] * jm[(b, q)] * jm[(c, r)])
                        .sum::<Complex64>()
                })
                .collect();
            rows.push(row.iter().map(|z| z.re).collect());
            rows.push(row.iter().map(|z| z.im).collect());
        }
    }
    let a = DMatrix::from_fn(rows.len(), expected, |i, k| rows[i][k]);
    let sv = a.singular_values();
    let sigma_max = sv.max();
    let sigma_min = sv.min();
    let rank = sv.iter().filter(|&&s| s > RANK_RTOL * sigma_max).count();
    Ok(UniquenessRank { rank, expected, sigma_max, sigma_min })
}

#[cfg(test)]
mod tests;
