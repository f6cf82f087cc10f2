//! Second-order forward-mode differentiation.
//!
//! A [`Jet`] carries `(f, f', f'')` of a scalar function along one variable.
//! Arithmetic propagates the first two derivatives exactly, so applying the
//! zonal Laplacian to a closed-form expression or to a polynomial evaluated
//! through its three-term recurrence involves no finite-difference error.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet {
    pub const fn constant(value: f64) -> Self {
        Jet {
            value,
            d1: 0.0,
            d2: 0.0,
        }
    }

    /// The independent variable evaluated at `x`.
    pub const fn variable(x: f64) -> Self {
        Jet {
            value: x,
            d1: 1.0,
            d2: 0.0,
        }
    }

    /// Chain rule for a scalar function with derivatives `(g, g', g'')` at `self.value`.
    fn compose(self, g: f64, dg: f64, d2g: f64) -> Self {
        Jet {
            value: g,
            d1: dg * self.d1,
            d2: d2g * self.d1 * self.d1 + dg * self.d2,
        }
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.compose(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.compose(c, -s, -c)
    }

    pub fn ln(self) -> Self {
        let x = self.value;
        self.compose(x.ln(), 1.0 / x, -1.0 / (x * x))
    }

    pub fn exp(self) -> Self {
        let e = self.value.exp();
        self.compose(e, e, e)
    }

    pub fn sqrt(self) -> Self {
        let r = self.value.sqrt();
        self.compose(r, 0.5 / r, -0.25 / (r * self.value))
    }

    pub fn powf(self, p: f64) -> Self {
        let x = self.value;
        self.compose(x.powf(p), p * x.powf(p - 1.0), p * (p - 1.0) * x.powf(p - 2.0))
    }

    pub fn powi(self, k: i32) -> Self {
        let x = self.value;
        let kf = f64::from(k);
        self.compose(
            x.powi(k),
            kf * x.powi(k - 1),
            kf * (kf - 1.0) * x.powi(k - 2),
        )
    }

    pub fn abs(self) -> Self {
        if self.value < 0.0 {
            -self
        } else {
            self
        }
    }
}

impl From<f64> for Jet {
    fn from(v: f64) -> Self {
        Jet::constant(v)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet {
            value: self.value + o.value,
            d1: self.d1 + o.d1,
            d2: self.d2 + o.d2,
        }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        Jet {
            value: self.value - o.value,
            d1: self.d1 - o.d1,
            d2: self.d2 - o.d2,
        }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        Jet {
            value: self.value * o.value,
            d1: self.d1 * o.value + self.value * o.d1,
            d2: self.d2 * o.value + 2.0 * self.d1 * o.d1 + self.value * o.d2,
        }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        let inv = 1.0 / o.value;
        let q = self.value * inv;
        let d1 = (self.d1 - q * o.d1) * inv;
        let d2 = (self.d2 - 2.0 * d1 * o.d1 - q * o.d2) * inv;
        Jet { value: q, d1, d2 }
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet {
            value: -self.value,
            d1: -self.d1,
            d2: -self.d2,
        }
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, o: f64) -> Jet {
        Jet {
            value: self.value + o,
            ..self
        }
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(self, o: f64) -> Jet {
        Jet {
            value: self.value - o,
            ..self
        }
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, o: f64) -> Jet {
        Jet {
            value: self.value * o,
            d1: self.d1 * o,
            d2: self.d2 * o,
        }
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        o * self
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(self, o: f64) -> Jet {
        self * (1.0 / o)
    }
}

/// Zonal Laplace-Beltrami operator on the unit sphere S^n applied to a
/// function of the polar angle: `g'' + (n-1) cot(phi) g'`, where `g` is the
/// jet of the function in `phi` at `phi`.
pub fn zonal_laplacian(n: usize, phi: f64, g: Jet) -> f64 {
    let (s, c) = phi.sin_cos();
    g.d2 + (n as f64 - 1.0) * c / s * g.d1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd2(f: impl Fn(f64) -> f64, x: f64) -> (f64, f64) {
        let h = 1e-4;
        let d1 = (f(x + h) - f(x - h)) / (2.0 * h);
        let d2 = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
        (d1, d2)
    }

    #[test]
    fn composite_matches_finite_differences() {
        let x = 0.7;
        let j = Jet::variable(x);
        let g = (j.sin() * j.ln().abs()).powf(1.5) / (j.cos() + 2.0) + j.exp().sqrt();
        let f = |x: f64| (x.sin() * x.ln().abs()).powf(1.5) / (x.cos() + 2.0) + x.exp().sqrt();
        let (d1, d2) = fd2(f, x);
        assert!((g.value - f(x)).abs() < 1e-14);
        assert!((g.d1 - d1).abs() < 1e-7);
        assert!((g.d2 - d2).abs() < 1e-5);
    }

    #[test]
    fn laplacian_of_cos_on_s2() {
        // -Δ cos φ = 2 cos φ on S²
        for &phi in &[0.3, 1.1, 2.5] {
            let lap = zonal_laplacian(2, phi, Jet::variable(phi).cos());
            assert!((lap + 2.0 * phi.cos()).abs() < 1e-13);
        }
    }
}
