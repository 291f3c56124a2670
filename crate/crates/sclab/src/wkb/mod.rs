//! WKB quantization on the hyperbolic cylinder in global Darboux
//! coordinates `(a, ℓ)` with `ω = da ∧ dℓ`, and its flat analogue
//! (`sinh → id`, `cosh → 1`).

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jets::{Jet, Scalar};
use crate::linalg;

mod cochain;
mod star;

pub use cochain::{
    admissibility, cocycle_defect, find_barycentre, geometric_associativity, Admissibility, Barycentre,
};
pub use star::{
    expansion_sweep, first_order_coefficient, poisson_bracket, star_product, star_product_with, ExpansionPoint,
    ExpansionReport, ExprField, Gaussian, PhaseField, QuadratureGrid, StarValue, DECAY_TOL,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhasePoint {
    pub a: f64,
    pub l: f64,
}

impl PhasePoint {
    pub fn new(a: f64, l: f64) -> PhasePoint {
        PhasePoint { a, l }
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.l.is_finite()
    }

    pub fn dist(&self, o: &PhasePoint) -> f64 {
        (self.a - o.a).abs().max((self.l - o.l).abs())
    }
}

/// The curved surface or its flat comparison model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Model {
    Curved,
    Flat,
}

impl Model {
    fn sinh<T: Scalar>(self, t: &T) -> T {
        match self {
            Model::Curved => t.sinh(),
            Model::Flat => t.clone(),
        }
    }

    fn cosh<T: Scalar>(self, t: &T) -> T {
        match self {
            Model::Curved => t.cosh(),
            Model::Flat => t.lift(1.0),
        }
    }

    /// `s_x(y) = (2a_x - a_y, 2cosh(a_x - a_y)ℓ_x - ℓ_y)`.
    pub fn symmetry_of<T: Scalar>(self, x: (&T, &T), y: (&T, &T)) -> (T, T) {
        let (ax, lx) = x;
        let (ay, ly) = y;
        let a = ax.clone() * 2.0 - ay.clone();
        let l = self.cosh(&(ax.clone() - ay.clone())) * lx.clone() * 2.0 - ly.clone();
        (a, l)
    }

    /// Cyclic sum `sinh(a₁-a₂)ℓ₃ + sinh(a₂-a₃)ℓ₁ + sinh(a₃-a₁)ℓ₂`.
    pub fn phase_of<T: Scalar>(self, p: [(&T, &T); 3]) -> T {
        let [(a1, l1), (a2, l2), (a3, l3)] = p;
        self.sinh(&(a1.clone() - a2.clone())) * l3.clone()
            + self.sinh(&(a2.clone() - a3.clone())) * l1.clone()
            + self.sinh(&(a3.clone() - a1.clone())) * l2.clone()
    }

    pub fn symmetry(self, x: PhasePoint, y: PhasePoint) -> PhasePoint {
        let (a, l) = self.symmetry_of((&x.a, &x.l), (&y.a, &y.l));
        PhasePoint { a, l }
    }

    pub fn phase(self, x: PhasePoint, y: PhasePoint, z: PhasePoint) -> f64 {
        self.phase_of([(&x.a, &x.l), (&y.a, &y.l), (&z.a, &z.l)])
    }

    /// `A⁰(y, z) = cosh(a_y - a_z)`.
    pub fn a0(self, ay: f64, az: f64) -> f64 {
        self.cosh(&(ay - az))
    }
}

pub fn symmetry(x: PhasePoint, y: PhasePoint) -> PhasePoint {
    Model::Curved.symmetry(x, y)
}

pub fn s_can(x: PhasePoint, y: PhasePoint, z: PhasePoint) -> f64 {
    Model::Curved.phase(x, y, z)
}

pub fn s_flat(x: PhasePoint, y: PhasePoint, z: PhasePoint) -> f64 {
    Model::Flat.phase(x, y, z)
}

/// Largest allowed deviation of the composed ℓ-map slope from -1.
const SLOPE_TOL: f64 = 1e-9;

/// `X` with `s_x s_y s_z(X) = X`, for scalars of any kind. The a-chain gives
/// `a_X = a_x - a_y + a_z`; the ℓ-chain is affine with slope -1, so
/// `ℓ_X = c/2` where `c` is the image of `ℓ = 0`.
fn fixed_point_of<T: Scalar>(m: Model, x: (&T, &T), y: (&T, &T), z: (&T, &T)) -> (T, T) {
    let a = x.0.clone() - y.0.clone() + z.0.clone();
    let zero = a.lift(0.0);
    let chain = |l: T| {
        let p = m.symmetry_of(z, (&a, &l));
        let p = m.symmetry_of(y, (&p.0, &p.1));
        m.symmetry_of(x, (&p.0, &p.1)).1
    };
    let c = chain(zero);
    (a, c * 0.5)
}

impl Model {
    pub fn triple_fixed_point(self, x: PhasePoint, y: PhasePoint, z: PhasePoint) -> Result<PhasePoint> {
        let px = (&x.a, &x.l);
        let py = (&y.a, &y.l);
        let pz = (&z.a, &z.l);
        let (a, l) = fixed_point_of(self, px, py, pz);
        // the slope of the composed ℓ-map must be exactly -1
        let at = |lv: f64| {
            let p = self.symmetry_of(pz, (&a, &lv));
            let p = self.symmetry_of(py, (&p.0, &p.1));
            self.symmetry_of(px, (&p.0, &p.1)).1
        };
        let slope = at(1.0) - at(0.0);
        if !((slope + 1.0).abs() < SLOPE_TOL * (1.0 + at(0.0).abs())) {
            return Err(Error::Inconsistent(format!("composed ℓ-map has slope {slope}, expected -1")));
        }
        let p = PhasePoint { a, l };
        if !p.is_finite() {
            return Err(Error::NumericDomain("non-finite fixed point".into()));
        }
        Ok(p)
    }

    /// `(X, Y, Z)` with `s_x s_y s_z(X) = X`, `Y = s_z(X)`, `Z = s_y(Y)`.
    pub fn phi_map(self, x: PhasePoint, y: PhasePoint, z: PhasePoint) -> Result<[PhasePoint; 3]> {
        let big_x = self.triple_fixed_point(x, y, z)?;
        let big_y = self.symmetry(z, big_x);
        let big_z = self.symmetry(y, big_y);
        Ok([big_x, big_y, big_z])
    }

    /// `|det ∂(X,Y,Z)/∂(x,y,z)|` from order-1 jets of the closed-form solve.
    pub fn jac_phi(self, x: PhasePoint, y: PhasePoint, z: PhasePoint) -> Result<f64> {
        let v = Jet::variables(&[x.a, x.l, y.a, y.l, z.a, z.l], 1);
        let (xa, xl) = fixed_point_of(self, (&v[0], &v[1]), (&v[2], &v[3]), (&v[4], &v[5]));
        let (ya, yl) = self.symmetry_of((&v[4], &v[5]), (&xa, &xl));
        let (za, zl) = self.symmetry_of((&v[2], &v[3]), (&ya, &yl));
        let outs = [xa, xl, ya, yl, za, zl];
        let mut m = Vec::with_capacity(36);
        for o in &outs {
            m.extend(o.grad());
        }
        let det = linalg::det(&m, 6);
        if !det.is_finite() {
            return Err(Error::NumericDomain("non-finite Jacobian".into()));
        }
        Ok(det.abs())
    }
}

pub fn triple_fixed_point(x: PhasePoint, y: PhasePoint, z: PhasePoint) -> Result<PhasePoint> {
    Model::Curved.triple_fixed_point(x, y, z)
}

pub fn phi_map(x: PhasePoint, y: PhasePoint, z: PhasePoint) -> Result<[PhasePoint; 3]> {
    Model::Curved.phi_map(x, y, z)
}

pub fn jac_phi(x: PhasePoint, y: PhasePoint, z: PhasePoint) -> Result<f64> {
    Model::Curved.jac_phi(x, y, z)
}

/// `|det D(s_x)|` at `y`.
pub fn symmetry_jacobian(m: Model, x: PhasePoint, y: PhasePoint) -> f64 {
    let v = Jet::variables(&[y.a, y.l], 1);
    let xa = v[0].lift(x.a);
    let xl = v[0].lift(x.l);
    let (a, l) = m.symmetry_of((&xa, &xl), (&v[0], &v[1]));
    let (ga, gl) = (a.grad(), l.grad());
    (ga[0] * gl[1] - ga[1] * gl[0]).abs()
}

/// `s_{s_x(y)}(z) - s_x s_y s_x(z)`, max-norm.
pub fn symmetry_law_residual(m: Model, x: PhasePoint, y: PhasePoint, z: PhasePoint) -> f64 {
    let lhs = m.symmetry(m.symmetry(x, y), z);
    let rhs = m.symmetry(x, m.symmetry(y, m.symmetry(x, z)));
    lhs.dist(&rhs)
}

pub type PFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Amplitude of the oscillating kernel.
#[derive(Clone)]
pub enum Amplitude {
    /// `A⁰(y, z) = cosh(a_y - a_z)`.
    A0,
    /// `P(a_x - a_z)P(a_y - a_x)/P(a_y - a_z) · A⁰(y, z)`.
    Pfamily(PFn),
    /// `√Jac_Φ`.
    JacSqrt,
}

impl fmt::Debug for Amplitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Amplitude::A0 => write!(f, "A0"),
            Amplitude::Pfamily(_) => write!(f, "Pfamily"),
            Amplitude::JacSqrt => write!(f, "JacSqrt"),
        }
    }
}

impl Amplitude {
    /// The P-family member with `P = √cosh`.
    pub fn strongly_closed() -> Amplitude {
        Amplitude::Pfamily(Arc::new(|a: f64| a.cosh().sqrt()))
    }

    pub fn eval(&self, m: Model, x: PhasePoint, y: PhasePoint, z: PhasePoint) -> Result<f64> {
        let v = match self {
            Amplitude::A0 => m.a0(y.a, z.a),
            Amplitude::Pfamily(p) => {
                let args = [x.a - z.a, y.a - x.a, y.a - z.a];
                let vals = args.map(|t| p(t));
                if let Some(k) = (0..3).find(|&k| !(vals[k].abs() > 1e-300) || !vals[k].is_finite()) {
                    return Err(Error::AmplitudeSingularity(format!("P({}) = {}", args[k], vals[k])));
                }
                vals[0] * vals[1] / vals[2] * m.a0(y.a, z.a)
            }
            Amplitude::JacSqrt => m.jac_phi(x, y, z)?.sqrt(),
        };
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::AmplitudeSingularity(format!("amplitude {v} at {x:?}, {y:?}, {z:?}")));
        }
        Ok(v)
    }
}

pub fn amplitude(kind: &Amplitude, x: PhasePoint, y: PhasePoint, z: PhasePoint) -> Result<f64> {
    kind.eval(Model::Curved, x, y, z)
}

/// Kernel `A · exp(iS/θ)` of the star product.
#[derive(Clone, Debug)]
pub struct WkbKernel {
    pub theta: f64,
    pub amplitude: Amplitude,
    pub model: Model,
}

impl WkbKernel {
    pub fn new(theta: f64, amplitude: Amplitude, model: Model) -> Result<WkbKernel> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::InvalidInput(format!("θ must be positive, got {theta}")));
        }
        Ok(WkbKernel { theta, amplitude, model })
    }
}

#[cfg(test)]
mod tests;
