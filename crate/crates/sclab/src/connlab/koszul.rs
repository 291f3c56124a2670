//! The Koszul operators `a` and `s` on `Λ^q V ⊗ S^p V`.
//!
//! Elements are stored in the monomial basis `e_{i1}∧…∧e_{iq} ⊗ e_{j1}⋯e_{jp}`
//! with `i1 < … < iq` and `j1 <= … <= jp`.

use std::collections::HashMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::jets::Jet;

type Key = (Vec<usize>, Vec<usize>);

#[derive(Clone, Debug)]
pub struct KoszulSpace {
    pub dim: usize,
    pub q: usize,
    pub p: usize,
    basis: Vec<Key>,
    index: HashMap<Key, usize>,
}

fn increasing(dim: usize, len: usize, strict: bool) -> Vec<Vec<usize>> {
    fn rec(dim: usize, len: usize, strict: bool, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for v in start..dim {
            cur.push(v);
            rec(dim, len, strict, if strict { v + 1 } else { v }, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, len, strict, 0, &mut Vec::new(), &mut out);
    out
}

impl KoszulSpace {
    pub fn new(dim: usize, q: usize, p: usize) -> Result<KoszulSpace> {
        if dim == 0 || dim > 6 || q + p > 4 {
            return Err(Error::UnsupportedDimension(dim));
        }
        let mut basis = Vec::new();
        for w in increasing(dim, q, true) {
            for s in increasing(dim, p, false) {
                basis.push((w.clone(), s));
            }
        }
        let index = basis.iter().enumerate().map(|(i, k)| (k.clone(), i)).collect();
        Ok(KoszulSpace { dim, q, p, basis, index })
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn zero(&self) -> KElem {
        KElem { dim: self.dim, q: self.q, p: self.p, coeffs: vec![0.0; self.len()] }
    }

    pub fn basis_elem(&self, k: usize) -> KElem {
        let mut e = self.zero();
        e.coeffs[k] = 1.0;
        e
    }

    pub fn random(&self, rng: &mut impl Rng) -> KElem {
        let mut e = self.zero();
        for c in &mut e.coeffs {
            *c = rng.random_range(-1.0..1.0);
        }
        e
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KElem {
    pub dim: usize,
    pub q: usize,
    pub p: usize,
    pub coeffs: Vec<f64>,
}

impl KElem {
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sub(&self, other: &KElem) -> KElem {
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *a -= b;
        }
        out
    }

    pub fn scaled(&self, c: f64) -> KElem {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|v| *v *= c);
        out
    }

    pub fn add(&self, other: &KElem) -> KElem {
        self.sub(&other.scaled(-1.0))
    }
}

fn space_of(e: &KElem) -> KoszulSpace {
    KoszulSpace::new(e.dim, e.q, e.p).expect("element of a supported space")
}

/// `a(v¹∧…∧v^q ⊗ w¹⋯w^p) = Σ_i v¹∧…∧v^q∧w^i ⊗ ∏_{k≠i} w^k`.
pub fn koszul_a(t: &KElem) -> Result<KElem> {
    if t.p == 0 {
        return Err(Error::InvalidInput("a is undefined on elements without symmetric factors".into()));
    }
    let src = space_of(t);
    let dst = KoszulSpace::new(t.dim, t.q + 1, t.p - 1)?;
    let mut out = dst.zero();
    for (k, (w, s)) in src.basis.iter().enumerate() {
        let c = t.coeffs[k];
        if c == 0.0 {
            continue;
        }
        for pos in 0..s.len() {
            let v = s[pos];
            if w.contains(&v) {
                continue;
            }
            let passed = w.iter().filter(|&&u| u > v).count();
            let sign = if passed % 2 == 0 { 1.0 } else { -1.0 };
            let mut nw = w.clone();
            nw.push(v);
            nw.sort_unstable();
            let mut ns = s.clone();
            ns.remove(pos);
            out.coeffs[dst.index[&(nw, ns)]] += sign * c;
        }
    }
    Ok(out)
}

/// `s(v¹∧…∧v^q ⊗ w) = Σ_i (-1)^{q-i} v¹∧…v̂^i…∧v^q ⊗ v^i·w`.
pub fn koszul_s(t: &KElem) -> Result<KElem> {
    if t.q == 0 {
        return Err(Error::InvalidInput("s is undefined on elements without exterior factors".into()));
    }
    let src = space_of(t);
    let dst = KoszulSpace::new(t.dim, t.q - 1, t.p + 1)?;
    let mut out = dst.zero();
    let q = t.q;
    for (k, (w, s)) in src.basis.iter().enumerate() {
        let c = t.coeffs[k];
        if c == 0.0 {
            continue;
        }
        for i in 0..q {
            // position i is the (i+1)-th factor, sign (-1)^{q-(i+1)}
            let sign = if (q - 1 - i) % 2 == 0 { 1.0 } else { -1.0 };
            let mut nw = w.clone();
            let v = nw.remove(i);
            let mut ns = s.clone();
            ns.push(v);
            ns.sort_unstable();
            out.coeffs[dst.index[&(nw, ns)]] += sign * c;
        }
    }
    Ok(out)
}

/// Largest deviation of the three Koszul identities on `t`:
/// `a²t = 0`, `s²t = 0`, `(as + sa)t = (p+q)t`.
pub fn koszul_identity_defect(t: &KElem) -> Result<f64> {
    let mut worst = 0.0f64;
    if t.p >= 2 {
        worst = worst.max(koszul_a(&koszul_a(t)?)?.max_abs());
    }
    if t.q >= 2 {
        worst = worst.max(koszul_s(&koszul_s(t)?)?.max_abs());
    }
    let target = t.scaled((t.p + t.q) as f64);
    let mut sum = space_of(t).zero();
    if t.q >= 1 {
        sum = sum.add(&koszul_a(&koszul_s(t)?)?);
    }
    if t.p >= 1 {
        sum = sum.add(&koszul_s(&koszul_a(t)?)?);
    }
    Ok(worst.max(sum.sub(&target).max_abs()))
}

/// Element of `Λ²V ⊗ S²V` corresponding to a 4-tensor `T[(k,l,j,t)]`
/// antisymmetric in `(k,l)` and symmetric in `(j,t)`.
pub fn from_curvature_tensor(low: &[f64], dim: usize) -> Result<KElem> {
    let space = KoszulSpace::new(dim, 2, 2)?;
    let mut e = space.zero();
    for (idx, (w, s)) in space.basis.iter().enumerate() {
        let (k, l, j, t) = (w[0], w[1], s[0], s[1]);
        let v = low[((k * dim + l) * dim + j) * dim + t];
        e.coeffs[idx] = if j == t { v / 2.0 } else { v };
    }
    Ok(e)
}

/// Inverse of [`from_curvature_tensor`].
pub fn to_curvature_tensor(e: &KElem) -> Vec<f64> {
    let d = e.dim;
    let space = space_of(e);
    let mut low = vec![0.0; d * d * d * d];
    for (idx, (w, s)) in space.basis.iter().enumerate() {
        let (k, l, j, t) = (w[0], w[1], s[0], s[1]);
        let v = if j == t { 2.0 * e.coeffs[idx] } else { e.coeffs[idx] };
        for (a, b, sg) in [(k, l, 1.0), (l, k, -1.0)] {
            low[((a * d + b) * d + j) * d + t] = sg * v;
            low[((a * d + b) * d + t) * d + j] = sg * v;
        }
    }
    low
}

/// Bianchi membership residual: largest coefficient of `a(R̲)`.
pub fn bianchi_check(low: &[Jet], dim: usize) -> Result<f64> {
    let vals: Vec<f64> = low.iter().map(Jet::value).collect();
    bianchi_check_values(&vals, dim)
}

pub fn bianchi_check_values(low: &[f64], dim: usize) -> Result<f64> {
    Ok(koszul_a(&from_curvature_tensor(low, dim)?)?.max_abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identities_hold_exactly_on_all_spaces() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dim in [2, 4] {
            for q in 0..=4 {
                for p in 0..=(4 - q) {
                    let space = KoszulSpace::new(dim, q, p).unwrap();
                    if space.is_empty() {
                        continue;
                    }
                    let t = space.random(&mut rng);
                    assert!(koszul_identity_defect(&t).unwrap() < 1e-12, "dim {dim} q {q} p {p}");
                }
            }
        }
    }

    #[test]
    fn one_three_example() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let t = KoszulSpace::new(4, 1, 2).unwrap().random(&mut rng);
        let lhs = koszul_a(&koszul_s(&t).unwrap()).unwrap().add(&koszul_s(&koszul_a(&t).unwrap()).unwrap());
        assert!(lhs.sub(&t.scaled(3.0)).max_abs() < 1e-12);
    }

    #[test]
    fn tensor_conversion_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let e = KoszulSpace::new(4, 2, 2).unwrap().random(&mut rng);
        let back = from_curvature_tensor(&to_curvature_tensor(&e), 4).unwrap();
        assert!(back.sub(&e).max_abs() < 1e-15);
    }
}
