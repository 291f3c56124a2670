//! Central finite differences, used as an independent check on jets.

/// Step used for first derivatives.
pub const STEP_FIRST: f64 = 1e-4;
/// Step used for second and third derivatives.
pub const STEP_HIGHER: f64 = 1e-3;

fn shifted(x: &[f64], moves: &[(usize, f64)]) -> Vec<f64> {
    let mut y = x.to_vec();
    for &(i, h) in moves {
        y[i] += h;
    }
    y
}

pub fn gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let h = STEP_FIRST;
    (0..x.len())
        .map(|i| (f(&shifted(x, &[(i, h)])) - f(&shifted(x, &[(i, -h)]))) / (2.0 * h))
        .collect()
}

fn hessian_with(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let d = x.len();
    let f0 = f(x);
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for j in i..d {
            let v = if i == j {
                (f(&shifted(x, &[(i, h)])) - 2.0 * f0 + f(&shifted(x, &[(i, -h)]))) / (h * h)
            } else {
                (f(&shifted(x, &[(i, h), (j, h)])) - f(&shifted(x, &[(i, h), (j, -h)]))
                    - f(&shifted(x, &[(i, -h), (j, h)]))
                    + f(&shifted(x, &[(i, -h), (j, -h)])))
                    / (4.0 * h * h)
            };
            out[i * d + j] = v;
            out[j * d + i] = v;
        }
    }
    out
}

/// Row-major Hessian.
pub fn hessian(f: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    hessian_with(f, x, STEP_HIGHER)
}

/// Third derivatives as central differences of the Hessian, `[i][j][k]`.
pub fn third(f: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let d = x.len();
    let h = STEP_HIGHER;
    let mut out = vec![0.0; d * d * d];
    for k in 0..d {
        let hp = hessian_with(f, &shifted(x, &[(k, h)]), h);
        let hm = hessian_with(f, &shifted(x, &[(k, -h)]), h);
        for ij in 0..d * d {
            out[ij * d + k] = (hp[ij] - hm[ij]) / (2.0 * h);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_has_second_derivative_two() {
        let f = |x: &[f64]| x[0] * x[0];
        let h = hessian(&f, &[0.4]);
        assert!((h[0] - 2.0).abs() < 1e-6);
    }
}
