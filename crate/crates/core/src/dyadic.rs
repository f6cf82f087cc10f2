//! Smooth dyadic partitions of unity.
//!
//! With `φ` smooth, equal to 1 on `[0, 6/5]` and 0 on `[9/5, ∞)`, the bump
//! `β(r) = φ(r) − φ(2r)` is nonnegative, supported in `[3/5, 9/5] ⊂ (1/2, 2)`,
//! equal to 1 on `[9/10, 6/5]`, and `Σ_k β(r/2^k) = 1` for `r > 0` (the sum
//! telescopes).

/// `0` for `t ≤ 0`, `1` for `t ≥ 1`, `C^∞` in between.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    a / (a + b)
}

/// `φ(r) = 1 − S((r − 6/5) / (3/5))`: 1 on `[0, 6/5]`, 0 on `[9/5, ∞)`.
pub fn low_pass(r: f64) -> f64 {
    1.0 - smooth_step((r - 1.2) / 0.6)
}

/// Littlewood-Paley bump `β(r) = φ(r) − φ(2r)`, supported in `[3/5, 9/5]`.
pub fn lp_bump(r: f64) -> f64 {
    if r <= 0.6 || r >= 1.8 {
        return 0.0;
    }
    low_pass(r) - low_pass(2.0 * r)
}

/// The inhomogeneous family `β_j(ξ) = β(2^{1−j} ξ)` for `j ≥ 1` and
/// `β_0(ξ) = φ(2ξ)`, supported in `[0, 9/10]`: `Σ_{j≥0} β_j = 1` on `[0, ∞)`.
pub fn lp_family(j: usize, xi: f64) -> f64 {
    if j == 0 {
        low_pass(2.0 * xi)
    } else {
        lp_bump(xi * 2f64.powi(1 - j as i32))
    }
}
