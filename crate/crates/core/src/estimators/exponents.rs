//! Growth exponents of eigenfunctions and Bochner-Riesz means.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `p_c = 2(n+1)/(n−1)`.
pub fn p_critical(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::domain(format!("critical exponent needs n >= 2, got {n}")));
    }
    Ok(2.0 * (n as f64 + 1.0) / (n as f64 - 1.0))
}

/// Eigenfunction growth exponent:
/// `σ(p) = max(n(1/2 − 1/p) − 1/2, (n−1)/2 · (1/2 − 1/p))` for `p ∈ [2, ∞]`.
///
/// The branches cross at `p_c`, where `σ(p_c) = 1/p_c`.
pub fn sigma(p: f64, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::domain(format!("sigma needs n >= 2, got {n}")));
    }
    if !(p >= 2.0) {
        return Err(Error::domain(format!("sigma needs p >= 2, got {p}")));
    }
    let nf = n as f64;
    let t = 0.5 - 1.0 / p;
    Ok((nf * t - 0.5).max((nf - 1.0) / 2.0 * t))
}

/// Critical Bochner-Riesz index `δ(p) = max(n|1/2 − 1/p| − 1/2, 0)`.
pub fn delta_br(p: f64, n: usize) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::domain(format!("delta needs p >= 1, got {p}")));
    }
    Ok((n as f64 * (0.5 - 1.0 / p).abs() - 0.5).max(0.0))
}

/// `σ` and `δ` tabulated on a grid of exponents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentTable {
    pub n: usize,
    pub p: Vec<f64>,
    pub sigma: Vec<f64>,
    pub p_critical: f64,
    pub delta: Vec<f64>,
}

impl ExponentTable {
    pub fn new(n: usize, p: &[f64]) -> Result<Self> {
        Ok(ExponentTable {
            n,
            p: p.to_vec(),
            sigma: p.iter().map(|&q| sigma(q, n)).collect::<Result<_>>()?,
            p_critical: p_critical(n)?,
            delta: p.iter().map(|&q| delta_br(q, n)).collect::<Result<_>>()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn closed_forms() {
        assert_eq!(sigma(4.0, 3).unwrap(), 0.25);
        assert_eq!(sigma(2.0, 5).unwrap(), 0.0);
        assert_eq!(sigma(f64::INFINITY, 2).unwrap(), 0.5);
        assert_eq!(p_critical(2).unwrap(), 6.0);
        assert_eq!(p_critical(3).unwrap(), 4.0);
        assert_eq!(p_critical(5).unwrap(), 3.0);
        assert!(sigma(1.5, 3).is_err());
        assert_eq!(delta_br(1.0, 2).unwrap(), 0.5);
        assert_eq!(delta_br(2.0, 4).unwrap(), 0.0);
    }

    #[test]
    fn sigma_at_critical_point() {
        for n in 2..=6 {
            let pc = p_critical(n).unwrap();
            assert!((sigma(pc, n).unwrap() - 1.0 / pc).abs() < 1e-15);
            assert_eq!(sigma(f64::INFINITY, n).unwrap(), (n as f64 - 1.0) / 2.0);
        }
    }

    #[test]
    fn delta_vanishes_in_middle_range() {
        let t = ExponentTable::new(3, &[2.0, 2.4, 3.0, 6.0]).unwrap();
        // n|1/2 − 1/p| ≤ 1/2 ⇔ p ∈ [3/2, 3] for n = 3
        assert_eq!(&t.delta[..3], &[0.0, 0.0, 0.0]);
        assert!(t.delta[3] > 0.0);
        assert_eq!(delta_br(1.5, 3).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn sigma_nondecreasing(n in 2usize..8, a in 2.0f64..1e3, b in 2.0f64..1e3) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(sigma(lo, n).unwrap() <= sigma(hi, n).unwrap());
        }

        #[test]
        fn sigma_continuous(n in 2usize..8, p in 2.0f64..100.0) {
            let h = 1e-7;
            prop_assert!((sigma(p + h, n).unwrap() - sigma(p, n).unwrap()).abs() < 1e-6);
        }
    }
}
