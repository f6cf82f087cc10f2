//! Orthonormal Gegenbauer polynomials and Gauss rules built from them.
//!
//! Zonal eigenfunctions on S^n are polynomials in `x = cos(phi)` orthogonal
//! for the weight `(1 - x^2)^((n-2)/2)`. They are evaluated through the
//! orthonormal three-term recurrence
//! `x p_k = a_{k+1} p_{k+1} + a_k p_{k-1}`, which involves no factorials and
//! stays stable for degrees in the thousands.

use std::ops::{Mul, Sub};

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::linalg::tridiagonal_eigenvalues;

/// Surface measure of the unit sphere S^m embedded in R^{m+1}.
pub fn sphere_volume(m: usize) -> f64 {
    use std::f64::consts::PI;
    match m {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (m as f64 - 1.0) * sphere_volume(m - 2),
    }
}

/// Recurrence data for polynomials orthonormal on `[-1, 1]` with weight
/// `(1 - x^2)^((n-2)/2)`.
#[derive(Debug, Clone)]
pub struct GegenbauerFamily {
    n: usize,
    /// `a[k]` for `k >= 1`; `a[0]` is unused.
    a: Vec<f64>,
    p0: f64,
}

impl GegenbauerFamily {
    /// Family able to evaluate degrees `0..=max_degree` (one extra
    /// coefficient is kept for Gauss-node polishing).
    pub fn new(n: usize, max_degree: usize) -> Self {
        let lam = (n as f64 - 1.0) / 2.0;
        let mut a = vec![0.0; max_degree + 2];
        for (k, ak) in a.iter_mut().enumerate().skip(1) {
            let kf = k as f64;
            *ak = (kf * (kf + 2.0 * lam - 1.0) / (4.0 * (kf + lam) * (kf + lam - 1.0))).sqrt();
        }
        let mass = sphere_volume(n) / sphere_volume(n - 1);
        GegenbauerFamily {
            n,
            a,
            p0: 1.0 / mass.sqrt(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn max_degree(&self) -> usize {
        self.a.len() - 2
    }

    /// Total mass of the weight on `[-1, 1]`.
    pub fn weight_mass(&self) -> f64 {
        1.0 / (self.p0 * self.p0)
    }

    /// Writes `p_0(x) ..= p_{out.len()-1}(x)` into `out`.
    pub fn eval_into<T>(&self, x: T, out: &mut [T])
    where
        T: Copy + From<f64> + Mul<T, Output = T> + Sub<T, Output = T> + Mul<f64, Output = T>,
    {
        let len = out.len();
        assert!(len <= self.a.len(), "degree beyond recurrence table");
        if len == 0 {
            return;
        }
        out[0] = T::from(self.p0);
        if len == 1 {
            return;
        }
        out[1] = x * out[0] * (1.0 / self.a[1]);
        for k in 1..len - 1 {
            out[k + 1] = (x * out[k] - out[k - 1] * self.a[k]) * (1.0 / self.a[k + 1]);
        }
    }

    pub fn eval(&self, x: f64, degree: usize) -> f64 {
        let mut buf = vec![0.0; degree + 1];
        self.eval_into(x, &mut buf);
        buf[degree]
    }

    /// Jets in `phi` of `p_k(cos phi)` for `k = 0..out.len()`.
    pub fn eval_phi_jets(&self, phi: f64, out: &mut [Jet]) {
        self.eval_into(Jet::variable(phi).cos(), out);
    }

    /// Gauss nodes and weights (in `x = cos phi`) for this weight with
    /// `count` nodes: exact for polynomials of degree `2 count - 1`.
    pub fn gauss_rule(&self, count: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        if count == 0 {
            return Err(Error::domain("Gauss rule needs at least one node"));
        }
        let fam = if self.max_degree() + 1 >= count {
            self.clone()
        } else {
            GegenbauerFamily::new(self.n, count)
        };
        let diag = vec![0.0; count];
        let off: Vec<f64> = (1..count).map(|k| fam.a[k]).collect();
        let mut nodes = tridiagonal_eigenvalues(&diag, &off)?;
        let mut buf = vec![0.0; count + 1];
        let mut jets = vec![Jet::constant(0.0); count + 1];
        let mut weights = Vec::with_capacity(count);
        for x in nodes.iter_mut() {
            // One Newton step on p_count polishes the eigenvalue.
            fam.eval_into(Jet::variable(*x), &mut jets);
            let pn = jets[count];
            if pn.d1 != 0.0 {
                let step = pn.value / pn.d1;
                if step.abs() < 1e-6 {
                    *x -= step;
                }
            }
            fam.eval_into(*x, &mut buf);
            let s: f64 = buf[..count].iter().map(|p| p * p).sum();
            weights.push(1.0 / s);
        }
        Ok((nodes, weights))
    }
}

/// One-dimensional quadrature rule on an interval.
#[derive(Debug, Clone)]
pub struct Rule1d {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule1d {
    /// Gauss-Legendre rule with `m` nodes on `[a, b]`.
    pub fn gauss_legendre(m: usize, a: f64, b: f64) -> Result<Self> {
        let fam = GegenbauerFamily::new(2, m);
        let (x, w) = fam.gauss_rule(m)?;
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        Ok(Rule1d {
            nodes: x.iter().map(|t| mid + half * t).collect(),
            weights: w.iter().map(|v| v * half).collect(),
        })
    }

    /// Composite Gauss-Legendre rule over consecutive breakpoints.
    pub fn composite(breaks: &[f64], m: usize) -> Result<Self> {
        let base = Rule1d::gauss_legendre(m, -1.0, 1.0)?;
        let mut nodes = Vec::with_capacity(m * breaks.len());
        let mut weights = Vec::with_capacity(m * breaks.len());
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (t, wt) in base.nodes.iter().zip(&base.weights) {
                nodes.push(mid + half * t);
                weights.push(wt * half);
            }
        }
        Ok(Rule1d { nodes, weights })
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}
