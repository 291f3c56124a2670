//! Admissibility, cocycle and geometric-associativity checks for the
//! phase function of either model.

use super::{Model, PhasePoint};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Admissibility {
    /// `|S(x,y,z) + S(x, s_x(y), z)|`.
    pub admissible: f64,
    /// Largest `|S + S∘τ|` over the three transpositions `τ`.
    pub antisymmetry: f64,
    /// `|S(s_w x, s_w y, s_w z) - S(x,y,z)|`.
    pub diagonal: f64,
}

impl Admissibility {
    pub fn max(&self) -> f64 {
        self.admissible.max(self.antisymmetry).max(self.diagonal)
    }
}

/// Sample `[x, y, z, w]`, with `w` the centre of the diagonal symmetry.
pub fn admissibility(m: Model, samples: &[[PhasePoint; 4]]) -> Admissibility {
    let mut out = Admissibility::default();
    for &[x, y, z, w] in samples {
        let s = m.phase(x, y, z);
        out.admissible = out.admissible.max((s + m.phase(x, m.symmetry(x, y), z)).abs());
        let t = [m.phase(y, x, z), m.phase(x, z, y), m.phase(z, y, x)];
        out.antisymmetry = t.iter().fold(out.antisymmetry, |acc, v| acc.max((s + v).abs()));
        let d = m.phase(m.symmetry(w, x), m.symmetry(w, y), m.symmetry(w, z));
        out.diagonal = out.diagonal.max((d - s).abs());
    }
    out
}

/// `δS(x₀,…,x₃) = S(x₁,x₂,x₃) - S(x₀,x₂,x₃) + S(x₀,x₁,x₃) - S(x₀,x₁,x₂)`,
/// largest modulus over the samples.
pub fn cocycle_defect(m: Model, samples: &[[PhasePoint; 4]]) -> f64 {
    samples
        .iter()
        .map(|&[x0, x1, x2, x3]| {
            (m.phase(x1, x2, x3) - m.phase(x0, x2, x3) + m.phase(x0, x1, x3) - m.phase(x0, x1, x2)).abs()
        })
        .fold(0.0, f64::max)
}

fn residual_at(m: Model, g: PhasePoint, [a, b, c, d]: [PhasePoint; 4], t: PhasePoint) -> f64 {
    let pt = m.symmetry(g, t);
    m.phase(a, b, t) + m.phase(t, c, d) - m.phase(a, pt, d) - m.phase(pt, b, c)
}

/// With `φ = s_g`, the largest
/// `|S(a,b,t) + S(t,c,d) - S(a,φt,d) - S(φt,b,c)|` over the `t`-samples.
pub fn geometric_associativity(m: Model, g: PhasePoint, quad: [PhasePoint; 4], ts: &[PhasePoint]) -> f64 {
    ts.iter().map(|&t| residual_at(m, g, quad, t).abs()).fold(0.0, f64::max)
}

/// A point `g` zeroing the associativity residual at the probe points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Barycentre {
    pub g: PhasePoint,
    pub probe_residual: f64,
    pub iterations: usize,
    pub method: &'static str,
}

const BARY_TOL: f64 = 1e-12;
const LM_ITERS: usize = 200;

fn probe_vec(m: Model, g: PhasePoint, quad: [PhasePoint; 4], probes: [PhasePoint; 2]) -> [f64; 2] {
    probes.map(|t| residual_at(m, g, quad, t))
}

fn levenberg_marquardt(m: Model, quad: [PhasePoint; 4], probes: [PhasePoint; 2], start: PhasePoint) -> Option<Barycentre> {
    let scale = 1.0 + probes.iter().chain(&quad).map(|p| p.a.abs().max(p.l.abs())).fold(0.0, f64::max);
    let tol = BARY_TOL * scale * scale;
    let mut g = start;
    let mut f = probe_vec(m, g, quad, probes);
    let norm2 = |v: [f64; 2]| v[0] * v[0] + v[1] * v[1];
    let mut mu = 1e-3;
    for it in 0..LM_ITERS {
        if f[0].abs().max(f[1].abs()) < tol {
            return Some(Barycentre { g, probe_residual: f[0].abs().max(f[1].abs()), iterations: it, method: "levenberg-marquardt" });
        }
        // central-difference Jacobian, columns ∂/∂a and ∂/∂ℓ
        let h = 1e-6 * (1.0 + g.a.abs().max(g.l.abs()));
        let mut jac = [[0.0; 2]; 2];
        for (c, dir) in [(1.0, 0.0), (0.0, 1.0)].into_iter().enumerate() {
            let fp = probe_vec(m, PhasePoint::new(g.a + h * dir.0, g.l + h * dir.1), quad, probes);
            let fm = probe_vec(m, PhasePoint::new(g.a - h * dir.0, g.l - h * dir.1), quad, probes);
            for r in 0..2 {
                jac[r][c] = (fp[r] - fm[r]) / (2.0 * h);
            }
        }
        // (JᵀJ + μ diag) δ = -Jᵀf
        let jtj = [
            [jac[0][0] * jac[0][0] + jac[1][0] * jac[1][0], jac[0][0] * jac[0][1] + jac[1][0] * jac[1][1]],
            [jac[0][1] * jac[0][0] + jac[1][1] * jac[1][0], jac[0][1] * jac[0][1] + jac[1][1] * jac[1][1]],
        ];
        let jtf = [jac[0][0] * f[0] + jac[1][0] * f[1], jac[0][1] * f[0] + jac[1][1] * f[1]];
        let mut accepted = false;
        for _ in 0..30 {
            let a00 = jtj[0][0] + mu * (jtj[0][0] + 1e-12);
            let a11 = jtj[1][1] + mu * (jtj[1][1] + 1e-12);
            let det = a00 * a11 - jtj[0][1] * jtj[1][0];
            if det == 0.0 || !det.is_finite() {
                mu *= 10.0;
                continue;
            }
            let da = -(a11 * jtf[0] - jtj[0][1] * jtf[1]) / det;
            let dl = -(a00 * jtf[1] - jtj[1][0] * jtf[0]) / det;
            let cand = PhasePoint::new(g.a + da, g.l + dl);
            let fc = probe_vec(m, cand, quad, probes);
            if cand.is_finite() && norm2(fc) < norm2(f) {
                g = cand;
                f = fc;
                mu = (mu / 10.0).max(1e-15);
                accepted = true;
                break;
            }
            mu *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    None
}

/// Scan and bisect the first probe residual along the segment from `a` to `c`,
/// then accept if the second probe residual also vanishes there.
fn bisection_fallback(m: Model, quad: [PhasePoint; 4], probes: [PhasePoint; 2]) -> Option<Barycentre> {
    let [a, _, c, _] = quad;
    let at = |s: f64| PhasePoint::new(a.a + s * (c.a - a.a), a.l + s * (c.l - a.l));
    let f = |s: f64| probe_vec(m, at(s), quad, probes)[0];
    let steps = 200;
    let (lo_s, hi_s) = (-2.0, 3.0);
    for k in 0..steps {
        let mut lo = lo_s + (hi_s - lo_s) * k as f64 / steps as f64;
        let mut hi = lo_s + (hi_s - lo_s) * (k + 1) as f64 / steps as f64;
        let (mut flo, fhi) = (f(lo), f(hi));
        if flo * fhi > 0.0 {
            continue;
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            let fm = f(mid);
            if flo * fm <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
                flo = fm;
            }
        }
        let g = at(0.5 * (lo + hi));
        let r = probe_vec(m, g, quad, probes);
        let res = r[0].abs().max(r[1].abs());
        if res < 1e-9 {
            return Some(Barycentre { g, probe_residual: res, iterations: 100, method: "bisection" });
        }
    }
    None
}

/// Search for `g` by two-dimensional root finding on the associativity
/// residual at two probe points, starting from the centroid of the quadruple.
pub fn find_barycentre(m: Model, quad: [PhasePoint; 4], probes: [PhasePoint; 2]) -> Result<Barycentre> {
    if quad.iter().chain(&probes).any(|p| !p.is_finite()) {
        return Err(Error::InvalidInput("non-finite quadruple or probe".into()));
    }
    let centroid = PhasePoint::new(
        quad.iter().map(|p| p.a).sum::<f64>() / 4.0,
        quad.iter().map(|p| p.l).sum::<f64>() / 4.0,
    );
    levenberg_marquardt(m, quad, probes, centroid)
        .or_else(|| bisection_fallback(m, quad, probes))
        .ok_or_else(|| Error::NoBarycentre(format!("no root of the probe residuals for {quad:?}")))
}
