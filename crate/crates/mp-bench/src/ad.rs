//! Minimal forward-mode dual numbers. The bench setpoint maps are written
//! generically over `Real`, so the same expressions yield both values (f64)
//! and exact partial derivatives (Dual) for the analytic setpoint Jacobians.

use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn c(v: f64) -> Self;
    /// Real part, used for branching.
    fn re(self) -> f64;
    fn exp(self) -> Self;
}

impl Real for f64 {
    fn c(v: f64) -> Self {
        v
    }
    fn re(self) -> f64 {
        self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
}

/// First-order dual number carrying one derivative slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub d: f64,
}

impl Dual {
    pub fn var(v: f64) -> Self {
        Self { v, d: 1.0 }
    }
    pub fn cst(v: f64) -> Self {
        Self { v, d: 0.0 }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual {
            v: self.v + o.v,
            d: self.d + o.d,
        }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual {
            v: self.v - o.v,
            d: self.d - o.d,
        }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual {
            v: self.v * o.v,
            d: self.d * o.v + self.v * o.d,
        }
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        Dual {
            v: self.v / o.v,
            d: (self.d * o.v - self.v * o.d) / (o.v * o.v),
        }
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual {
            v: -self.v,
            d: -self.d,
        }
    }
}

impl Real for Dual {
    fn c(v: f64) -> Self {
        Dual::cst(v)
    }
    fn re(self) -> f64 {
        self.v
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        Dual {
            v: e,
            d: self.d * e,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_matches_finite_difference() {
        let f = |x: f64| (x * x + 3.0 * x).exp() / (x + 2.0);
        let g = |x: Dual| (x * x + Dual::cst(3.0) * x).exp() / (x + Dual::cst(2.0));
        let x = 0.37;
        let h = 1e-6;
        let fd = (f(x + h) - f(x - h)) / (2.0 * h);
        let ad = g(Dual::var(x));
        assert!((ad.v - f(x)).abs() < 1e-12);
        assert!((ad.d - fd).abs() < 1e-5 * fd.abs());
    }
}
