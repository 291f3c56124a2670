//! Multi-index bookkeeping shared by all jets of a given (dim, order).
//!
//! Multi-indices are listed by total degree, and within a degree in a fixed
//! order that does not depend on the maximal order. A jet of lower order is
//! therefore a prefix of a jet of higher order in the same dimension.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

pub(crate) const NONE: usize = usize::MAX;

#[derive(Debug)]
pub(crate) struct Layout {
    pub dim: usize,
    pub order: usize,
    pub exps: Vec<Vec<u8>>,
    pub degree: Vec<usize>,
    /// `up[i * dim + v]` is the index of `exps[i] + e_v`, or `NONE`.
    pub up: Vec<usize>,
    /// All (i, j, k) with exps[i] + exps[j] == exps[k].
    pub prod: Vec<(u32, u32, u32)>,
    /// For degree >= 1: a variable with nonzero exponent and the index of
    /// the multi-index with that exponent lowered by one.
    pub first_var: Vec<usize>,
    pub parent: Vec<usize>,
    /// Product of factorials of the exponents.
    pub fact: Vec<f64>,
}

fn degree_block(dim: usize, deg: usize) -> Vec<Vec<u8>> {
    fn rec(dim: usize, pos: usize, left: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if pos + 1 == dim {
            cur[pos] = left as u8;
            out.push(cur.clone());
            cur[pos] = 0;
            return;
        }
        for e in (0..=left).rev() {
            cur[pos] = e as u8;
            rec(dim, pos + 1, left - e, cur, out);
        }
        cur[pos] = 0;
    }
    let mut out = Vec::new();
    if dim == 0 {
        if deg == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    let mut cur = vec![0u8; dim];
    rec(dim, 0, deg, &mut cur, &mut out);
    out
}

impl Layout {
    fn build(dim: usize, order: usize) -> Layout {
        let mut exps = Vec::new();
        let mut degree = Vec::new();
        for g in 0..=order {
            for e in degree_block(dim, g) {
                exps.push(e);
                degree.push(g);
            }
        }
        let index: HashMap<Vec<u8>, usize> =
            exps.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        let len = exps.len();
        let mut up = vec![NONE; len * dim];
        for i in 0..len {
            for v in 0..dim {
                let mut e = exps[i].clone();
                e[v] += 1;
                if let Some(&k) = index.get(&e) {
                    up[i * dim + v] = k;
                }
            }
        }
        let mut prod = Vec::new();
        for i in 0..len {
            for j in 0..len {
                if degree[i] + degree[j] > order {
                    continue;
                }
                let e: Vec<u8> = exps[i].iter().zip(&exps[j]).map(|(a, b)| a + b).collect();
                let k = index[&e];
                prod.push((i as u32, j as u32, k as u32));
            }
        }
        let mut first_var = vec![NONE; len];
        let mut parent = vec![NONE; len];
        for i in 1..len {
            let v = exps[i].iter().position(|&a| a > 0).unwrap();
            let mut e = exps[i].clone();
            e[v] -= 1;
            first_var[i] = v;
            parent[i] = index[&e];
        }
        let fact = exps
            .iter()
            .map(|e| e.iter().map(|&a| (1..=a as u64).product::<u64>() as f64).product())
            .collect();
        Layout { dim, order, exps, degree, up, prod, first_var, parent, fact }
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    /// Number of coefficients of degree <= `order`.
    pub fn len_upto(&self, order: usize) -> usize {
        self.degree.partition_point(|&g| g <= order)
    }

    pub fn index_of(&self, e: &[u8]) -> Option<usize> {
        let mut i = 0usize;
        for (v, &a) in e.iter().enumerate() {
            for _ in 0..a {
                i = self.up[i * self.dim + v];
                if i == NONE {
                    return None;
                }
            }
        }
        Some(i)
    }
}

pub(crate) fn layout(dim: usize, order: usize) -> Arc<Layout> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Layout>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(l) = cache.lock().unwrap().get(&(dim, order)) {
        return l.clone();
    }
    let built = Arc::new(Layout::build(dim, order));
    cache.lock().unwrap().entry((dim, order)).or_insert(built).clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binom(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn sizes_match_binomials() {
        for dim in 1..5 {
            for order in 0..5 {
                let l = layout(dim, order);
                assert_eq!(l.len(), binom(dim + order, order));
                assert_eq!(l.prod.len(), binom(2 * dim + order, order));
            }
        }
    }

    #[test]
    fn lower_order_is_prefix() {
        let lo = layout(3, 2);
        let hi = layout(3, 4);
        assert_eq!(&hi.exps[..lo.len()], &lo.exps[..]);
        assert_eq!(hi.len_upto(2), lo.len());
    }
}
