//! Pointwise tensor algebra on jets: torsion, curvature, traces and
//! covariant derivatives. All tensors are flat row-major vectors.
//!
//! Index conventions: `Γ[(k,i,j)] = Γ^k_ij`, `R[(i,j,k,l)] = R^i_jkl` with
//! `R(∂k,∂l)∂j = R^i_jkl ∂i`, `r[(a,b)] = r(∂a,∂b)`.

use crate::jets::Jet;

#[inline]
pub fn i3(d: usize, a: usize, b: usize, c: usize) -> usize {
    (a * d + b) * d + c
}

#[inline]
pub fn i4(d: usize, a: usize, b: usize, c: usize, e: usize) -> usize {
    ((a * d + b) * d + c) * d + e
}

/// Variance of a tensor slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    Up,
    Down,
}

/// `T^k_ij = Γ^k_ij - Γ^k_ji`.
pub fn torsion(g: &[Jet], d: usize) -> Vec<Jet> {
    let mut t = Vec::with_capacity(d * d * d);
    for k in 0..d {
        for i in 0..d {
            for j in 0..d {
                t.push(&g[i3(d, k, i, j)] - &g[i3(d, k, j, i)]);
            }
        }
    }
    t
}

/// `(∇_i ω)_jk = ∂_i ω_jk - Γ^m_ij ω_mk - Γ^m_ik ω_jm`, at `[(i,j,k)]`.
/// Needs `ω` one order above `Γ`.
pub fn nabla_omega(omega: &[Jet], g: &[Jet], d: usize) -> Vec<Jet> {
    covariant(omega, &[Slot::Down, Slot::Down], g, d)
}

/// Covariant derivative. The new derivative slot comes first.
pub fn covariant(t: &[Jet], slots: &[Slot], g: &[Jet], d: usize) -> Vec<Jet> {
    let rank = slots.len();
    let size = d.pow(rank as u32);
    assert_eq!(t.len(), size);
    let stride: Vec<usize> = (0..rank).map(|s| d.pow((rank - 1 - s) as u32)).collect();
    let mut out = Vec::with_capacity(d * size);
    let mut digits = vec![0usize; rank];
    for m in 0..d {
        for idx in 0..size {
            let mut rem = idx;
            for s in 0..rank {
                digits[s] = rem / stride[s];
                rem %= stride[s];
            }
            let mut acc = t[idx].d(m);
            for (s, slot) in slots.iter().enumerate() {
                let base = idx - digits[s] * stride[s];
                for c in 0..d {
                    let other = &t[base + c * stride[s]];
                    match slot {
                        Slot::Up => acc += &g[i3(d, digits[s], m, c)] * other,
                        Slot::Down => acc -= &g[i3(d, c, m, digits[s])] * other,
                    }
                }
            }
            out.push(acc);
        }
    }
    out
}

/// `R^i_jkl = ∂_k Γ^i_lj - ∂_l Γ^i_kj + Γ^i_km Γ^m_lj - Γ^i_lm Γ^m_kj`.
pub fn curvature(g: &[Jet], d: usize) -> Vec<Jet> {
    let dg: Vec<Vec<Jet>> = (0..d).map(|m| g.iter().map(|x| x.d(m)).collect()).collect();
    let mut r = Vec::with_capacity(d * d * d * d);
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let mut acc = &dg[k][i3(d, i, l, j)] - &dg[l][i3(d, i, k, j)];
                    for m in 0..d {
                        acc += &g[i3(d, i, k, m)] * &g[i3(d, m, l, j)];
                        acc -= &g[i3(d, i, l, m)] * &g[i3(d, m, k, j)];
                    }
                    r.push(acc);
                }
            }
        }
    }
    r
}

/// `r(X,Y) = Tr(Z ↦ R(X,Z)Y)`, i.e. `r_ab = R^i_{b a i}`.
pub fn ricci(r: &[Jet], d: usize) -> Vec<Jet> {
    let mut out = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            let mut acc = r[i4(d, 0, b, a, 0)].clone();
            for i in 1..d {
                acc += &r[i4(d, i, b, a, i)];
            }
            out.push(acc);
        }
    }
    out
}

/// `r'(X,Y) = Σ_i ω(R(e_i, e^i)X, Y)` with `ω(e_i, e^j) = δ_ij`.
pub fn ricci_second(r: &[Jet], omega: &[Jet], omega_inv: &[Jet], d: usize) -> Vec<Jet> {
    // e^i = Σ_k (ω^{-1})^{ki} ∂_k
    let mut out = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            let mut acc = r[0].lift(0.0);
            for i in 0..d {
                for k in 0..d {
                    let c = &omega_inv[k * d + i];
                    for m in 0..d {
                        acc += &(c * &r[i4(d, m, a, i, k)]) * &omega[m * d + b];
                    }
                }
            }
            out.push(acc);
        }
    }
    out
}

/// `R̲(X,Y,Z,T) = ω(R(X,Y)Z, T)` at `[(k,l,j,t)]`.
pub fn lower_curvature(r: &[Jet], omega: &[Jet], d: usize) -> Vec<Jet> {
    let mut out = Vec::with_capacity(d * d * d * d);
    for k in 0..d {
        for l in 0..d {
            for j in 0..d {
                for t in 0..d {
                    let mut acc = &omega[t] * &r[i4(d, 0, j, k, l)];
                    for m in 1..d {
                        acc += &omega[m * d + t] * &r[i4(d, m, j, k, l)];
                    }
                    out.push(acc);
                }
            }
        }
    }
    out
}

/// Inverse of [`lower_curvature`].
pub fn raise_curvature(low: &[Jet], omega_inv: &[Jet], d: usize) -> Vec<Jet> {
    // ω_mt R^m_jkl = R̲_klj t  ⇒  R^m_jkl = Σ_t R̲_kljt (ω^{-1})^{tm}
    let mut out = Vec::with_capacity(d * d * d * d);
    for m in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let mut acc = &low[i4(d, k, l, j, 0)] * &omega_inv[m];
                    for t in 1..d {
                        acc += &low[i4(d, k, l, j, t)] * &omega_inv[t * d + m];
                    }
                    out.push(acc);
                }
            }
        }
    }
    out
}

/// `ρ` with `ω(X, ρY) = r(X,Y)`, i.e. `ρ = ω^{-1} r`.
pub fn rho(ric: &[Jet], omega_inv: &[Jet], d: usize) -> Vec<Jet> {
    crate::linalg::matmul(omega_inv, ric, d, d, d)
}

/// The Ricci-type part
/// `E(X,Y)Z = 1/(2n+2) (2ω(X,Y)ρZ + ω(X,Z)ρY - ω(Y,Z)ρX + ω(X,ρZ)Y - ω(Y,ρZ)X)`.
pub fn e_part(ric: &[Jet], rho: &[Jet], omega: &[Jet], d: usize) -> Vec<Jet> {
    let c = 1.0 / (d as f64 + 2.0);
    let mut out = Vec::with_capacity(d * d * d * d);
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let mut acc = &(&omega[k * d + l] * &rho[i * d + j]) * 2.0;
                    acc += &omega[k * d + j] * &rho[i * d + l];
                    acc -= &omega[l * d + j] * &rho[i * d + k];
                    if i == l {
                        acc += &ric[k * d + j];
                    }
                    if i == k {
                        acc -= &ric[l * d + j];
                    }
                    out.push(acc * c);
                }
            }
        }
    }
    out
}

/// The curvature written in the endomorphism form
/// `R(X,Y) = -1/(2(n+1)) [-2ω(X,Y)ρ - ρY⊗X̲ + ρX⊗Y̲ - X⊗(ρY)̲ + Y⊗(ρX)̲]`,
/// with `X̲ = ω(X, ·)`.
pub fn ricci_type_rebuild(rho: &[Jet], omega: &[Jet], d: usize) -> Vec<Jet> {
    let c = -1.0 / (d as f64 + 2.0);
    let mut rho_low = Vec::with_capacity(d * d); // ω(ρ∂_l, ∂_j) at [l][j]
    for l in 0..d {
        for j in 0..d {
            let mut acc = &rho[l] * &omega[j];
            for m in 1..d {
                acc += &rho[m * d + l] * &omega[m * d + j];
            }
            rho_low.push(acc);
        }
    }
    let mut out = Vec::with_capacity(d * d * d * d);
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let mut acc = &(&omega[k * d + l] * &rho[i * d + j]) * -2.0;
                    acc -= &rho[i * d + l] * &omega[k * d + j];
                    acc += &rho[i * d + k] * &omega[l * d + j];
                    if i == k {
                        acc -= &rho_low[l * d + j];
                    }
                    if i == l {
                        acc += &rho_low[k * d + j];
                    }
                    out.push(acc * c);
                }
            }
        }
    }
    out
}

/// Largest first-Bianchi residual `R^i_jkl + R^i_klj + R^i_ljk`.
pub fn bianchi_cyclic(r: &[Jet], d: usize) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let v = r[i4(d, i, j, k, l)].value() + r[i4(d, i, k, l, j)].value() + r[i4(d, i, l, j, k)].value();
                    worst = worst.max(v.abs());
                }
            }
        }
    }
    worst
}

/// Average over all permutations of a 3-tensor.
pub fn symmetrize3(t: &[Jet], d: usize) -> Vec<Jet> {
    let mut out = Vec::with_capacity(d * d * d);
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                let mut acc = t[i3(d, a, b, c)].clone();
                acc += &t[i3(d, a, c, b)];
                acc += &t[i3(d, b, a, c)];
                acc += &t[i3(d, b, c, a)];
                acc += &t[i3(d, c, a, b)];
                acc += &t[i3(d, c, b, a)];
                out.push(acc * (1.0 / 6.0));
            }
        }
    }
    out
}

/// Truncate every entry to the given order.
pub fn truncate_all(t: &[Jet], order: usize) -> Vec<Jet> {
    t.iter().map(|x| x.truncate(order)).collect()
}
