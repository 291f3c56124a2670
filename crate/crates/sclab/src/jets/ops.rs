use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use super::Jet;

fn lower<'a>(a: &'a Jet, b: &'a Jet) -> &'a Jet {
    assert_eq!(a.dim(), b.dim(), "jet dimension mismatch");
    if a.order() <= b.order() {
        a
    } else {
        b
    }
}

fn add_ref(a: &Jet, b: &Jet, sign: f64) -> Jet {
    let lo = lower(a, b);
    let n = lo.c.len();
    let c = (0..n).map(|i| a.c[i] + sign * b.c[i]).collect();
    Jet { layout: lo.layout.clone(), c }
}

fn mul_ref(a: &Jet, b: &Jet) -> Jet {
    let lo = lower(a, b);
    let l = &lo.layout;
    let mut c = vec![0.0; l.len()];
    for &(i, j, k) in &l.prod {
        c[k as usize] += a.c[i as usize] * b.c[j as usize];
    }
    Jet { layout: l.clone(), c }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl $tr<&Jet> for &Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                $body(self, rhs)
            }
        }
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                $body(&self, &rhs)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                $body(&self, rhs)
            }
        }
        impl $tr<Jet> for &Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                $body(self, &rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| add_ref(a, b, 1.0));
binop!(Sub, sub, |a, b| add_ref(a, b, -1.0));
binop!(Mul, mul, mul_ref);
binop!(Div, div, |a: &Jet, b: &Jet| mul_ref(a, &b.recip()));

macro_rules! scalar_op {
    ($tr:ident, $m:ident, $f:expr) => {
        impl $tr<f64> for &Jet {
            type Output = Jet;
            fn $m(self, rhs: f64) -> Jet {
                $f(self.clone(), rhs)
            }
        }
        impl $tr<f64> for Jet {
            type Output = Jet;
            fn $m(self, rhs: f64) -> Jet {
                $f(self, rhs)
            }
        }
    };
}

scalar_op!(Add, add, |mut a: Jet, r: f64| {
    a.c[0] += r;
    a
});
scalar_op!(Sub, sub, |mut a: Jet, r: f64| {
    a.c[0] -= r;
    a
});
scalar_op!(Mul, mul, |mut a: Jet, r: f64| {
    a.c.iter_mut().for_each(|v| *v *= r);
    a
});
scalar_op!(Div, div, |mut a: Jet, r: f64| {
    a.c.iter_mut().for_each(|v| *v /= r);
    a
});

impl Mul<&Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        rhs * self
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        rhs * self
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        self.c.iter_mut().for_each(|v| *v = -*v);
        self
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        -self.clone()
    }
}

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        self.axpy(1.0, rhs);
    }
}

impl AddAssign<Jet> for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        self.axpy(1.0, &rhs);
    }
}

impl SubAssign<&Jet> for Jet {
    fn sub_assign(&mut self, rhs: &Jet) {
        self.axpy(-1.0, rhs);
    }
}

impl SubAssign<Jet> for Jet {
    fn sub_assign(&mut self, rhs: Jet) {
        self.axpy(-1.0, &rhs);
    }
}
