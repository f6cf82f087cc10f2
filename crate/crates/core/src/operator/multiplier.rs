use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Basis;
use crate::operator::spectral::SpectralDecomposition;
use crate::orthopoly::Rule1d;

/// `m(√(H_V + N))` at fixed truncation: a coefficient per eigenpair.
#[derive(Debug, Clone)]
pub struct MultiplierOperator {
    spec: Arc<SpectralDecomposition>,
    coeffs: Vec<Complex64>,
    label: String,
}

/// Real multiplier `c_i = m(λ_i)`. Fails listing every frequency where `m`
/// is not finite.
pub fn multiplier(
    spec: &Arc<SpectralDecomposition>,
    m: impl Fn(f64) -> f64,
    label: impl Into<String>,
) -> Result<MultiplierOperator> {
    multiplier_complex(spec, |l| Complex64::new(m(l), 0.0), label)
}

pub fn multiplier_complex(
    spec: &Arc<SpectralDecomposition>,
    m: impl Fn(f64) -> Complex64,
    label: impl Into<String>,
) -> Result<MultiplierOperator> {
    let freqs = spec.frequencies();
    let coeffs: Vec<Complex64> = freqs.iter().map(|&l| m(l)).collect();
    let bad: Vec<f64> = freqs
        .iter()
        .zip(&coeffs)
        .filter(|(_, c)| !c.is_finite())
        .map(|(&l, _)| l)
        .collect();
    if !bad.is_empty() {
        return Err(Error::domain(format!("multiplier undefined at frequencies {bad:?}")));
    }
    Ok(MultiplierOperator {
        spec: Arc::clone(spec),
        coeffs,
        label: label.into(),
    })
}

/// Multiplier given directly by one coefficient per eigenpair, for symbols
/// that depend on more than the frequency (e.g. `e^{−tμ_i}` with `μ_i`
/// unshifted).
pub fn multiplier_from_coefficients(
    spec: &Arc<SpectralDecomposition>,
    coeffs: Vec<Complex64>,
    label: impl Into<String>,
) -> Result<MultiplierOperator> {
    if coeffs.len() != spec.len() {
        return Err(Error::domain(format!(
            "{} coefficients for {} eigenpairs",
            coeffs.len(),
            spec.len()
        )));
    }
    if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
        return Err(Error::domain(format!("multiplier coefficient {i} is not finite")));
    }
    Ok(MultiplierOperator {
        spec: Arc::clone(spec),
        coeffs,
        label: label.into(),
    })
}

/// Spectral projector onto frequencies in the closed band `[λ, λ + 1]`.
pub fn band_projector(spec: &Arc<SpectralDecomposition>, lambda: f64) -> Result<MultiplierOperator> {
    if !(lambda >= 0.0) {
        return Err(Error::domain(format!("band start must be >= 0, got {lambda}")));
    }
    multiplier(
        spec,
        |l| if l >= lambda && l <= lambda + 1.0 { 1.0 } else { 0.0 },
        format!("projector[{lambda},{}]", lambda + 1.0),
    )
}

/// Sharp cutoff `1_{λ_i ≤ Λ}`.
pub fn spectral_cutoff(spec: &Arc<SpectralDecomposition>, cap: f64) -> Result<MultiplierOperator> {
    multiplier(spec, |l| if l <= cap { 1.0 } else { 0.0 }, format!("cutoff[{cap}]"))
}

impl MultiplierOperator {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn spectral(&self) -> &Arc<SpectralDecomposition> {
        &self.spec
    }

    pub fn is_real(&self) -> bool {
        self.coeffs.iter().all(|c| c.im == 0.0)
    }

    /// `m₁ m₂`, coefficient by coefficient.
    pub fn compose(&self, other: &MultiplierOperator) -> Result<MultiplierOperator> {
        if !Arc::ptr_eq(&self.spec, &other.spec) && *self.spec != *other.spec {
            return Err(Error::domain("multipliers built on different spectral decompositions"));
        }
        Ok(MultiplierOperator {
            spec: Arc::clone(&self.spec),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).collect(),
            label: format!("{}∘{}", self.label, other.label),
        })
    }

    /// Applies to basis coefficients.
    pub fn apply_coeffs(&self, f: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut a = self.spec.project(f)?;
        for (x, c) in a.iter_mut().zip(&self.coeffs) {
            *x *= c;
        }
        self.spec.reconstruct(&a)
    }

    pub fn apply_real_coeffs(&self, f: &[f64]) -> Result<Vec<Complex64>> {
        let z: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.apply_coeffs(&z)
    }

    /// Applies to a grid function on `basis`'s grid; the input is first
    /// projected onto the span of the basis.
    pub fn apply_grid(&self, basis: &Basis, values: &[f64]) -> Result<Vec<Complex64>> {
        self.check_basis(basis)?;
        let out = self.apply_real_coeffs(&basis.analyze(values)?)?;
        synthesize_par(basis, &out)
    }

    /// Grid values of `m(P) f` for basis coefficients `f`.
    pub fn apply_to_grid(&self, basis: &Basis, f: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_basis(basis)?;
        synthesize_par(basis, &self.apply_coeffs(f)?)
    }

    /// Column `v` of the operator kernel at a point: `Σ_i c_i v_i(x) v_i(·)`
    /// as basis coefficients, given the basis values `e_j(x)`.
    pub fn kernel_coeffs(&self, point_values: &[f64]) -> Result<Vec<Complex64>> {
        let ev: Vec<f64> = self.spec.project(point_values)?;
        let a: Vec<Complex64> = ev.iter().zip(&self.coeffs).map(|(v, c)| c * v).collect();
        self.spec.reconstruct(&a)
    }

    fn check_basis(&self, basis: &Basis) -> Result<()> {
        if basis.len() != self.spec.dim() {
            return Err(Error::domain(format!(
                "basis has {} modes, spectral decomposition {}",
                basis.len(),
                self.spec.dim()
            )));
        }
        Ok(())
    }
}

fn synthesize_par(basis: &Basis, c: &[Complex64]) -> Result<Vec<Complex64>> {
    let re: Vec<f64> = c.iter().map(|z| z.re).collect();
    let im: Vec<f64> = c.iter().map(|z| z.im).collect();
    let (a, b) = rayon::join(|| basis.synthesize(&re), || {
        if im.iter().all(|&x| x == 0.0) {
            Ok(vec![0.0; basis.grid().len()])
        } else {
            basis.synthesize(&im)
        }
    });
    let (a, b) = (a?, b?);
    Ok(a.into_par_iter().zip(b).map(|(r, i)| Complex64::new(r, i)).collect())
}

/// A bump `β ≥ 0` supported in `(1/2, 1)` with `∫β = 1`.
#[derive(Clone)]
pub struct BumpProfile {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    lo: f64,
    hi: f64,
    mass: f64,
    rule: Rule1d,
}

impl std::fmt::Debug for BumpProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BumpProfile(support [{}, {}])", self.lo, self.hi)
    }
}

/// Uniform bound `C₀⁻¹ ≤ β̃_λ(τ) ≤ C₀` for `0 ≤ τ ≤ 4λ²`: since
/// `β̃_λ(τ) = ∫ e^{−uτ/λ²} β(u) du` with `u ≤ 1`, `C₀ = e⁴` works.
pub const BERNSTEIN_C0: f64 = 54.598_150_033_144_236;

impl BumpProfile {
    /// `exp(−1/((u−a)(b−u)))` on `(a, b)`, normalized.
    pub fn smooth(a: f64, b: f64) -> Result<Self> {
        Self::from_fn(move |u| {
            if u > a && u < b {
                (-1.0 / ((u - a) * (b - u))).exp()
            } else {
                0.0
            }
        }, a, b, true)
    }

    /// The default profile on `(0.55, 0.95)`.
    pub fn standard() -> Self {
        Self::smooth(0.55, 0.95).expect("valid support")
    }

    /// A user profile claimed to live on `[lo, hi] ⊂ (1/2, 1)`. With
    /// `normalize = false` it must already have unit mass (to 1e-6).
    pub fn from_fn(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        lo: f64,
        hi: f64,
        normalize: bool,
    ) -> Result<Self> {
        if !(lo > 0.5 && hi < 1.0 && lo < hi) {
            return Err(Error::config(format!("bump support [{lo}, {hi}] must lie inside (1/2, 1)")));
        }
        let breaks: Vec<f64> = (0..=16).map(|i| lo + (hi - lo) * i as f64 / 16.0).collect();
        let rule = Rule1d::composite(&breaks, 24)?;
        if rule.nodes.iter().any(|&u| !(f(u) >= 0.0)) {
            return Err(Error::config("bump profile must be nonnegative"));
        }
        let outside = [0.0, 0.25, 0.5, lo - 1e-9, hi + 1e-9, 1.0, 1.5];
        if outside.iter().any(|&u| (u < lo || u > hi) && f(u) != 0.0) {
            return Err(Error::config("bump profile does not vanish outside its declared support"));
        }
        let mass = rule.integrate(&f);
        if !(mass > 0.0) {
            return Err(Error::config("bump profile has zero mass"));
        }
        if !normalize && (mass - 1.0).abs() > 1e-6 {
            return Err(Error::config(format!("bump profile has mass {mass}, expected 1")));
        }
        Ok(BumpProfile {
            f: Arc::new(f),
            lo,
            hi,
            mass: if normalize { mass } else { 1.0 },
            rule,
        })
    }

    pub fn eval(&self, u: f64) -> f64 {
        (self.f)(u) / self.mass
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// `β̃_λ(τ) = ∫₀^∞ e^{−tτ} λ² β(λ² t) dt = ∫ e^{−uτ/λ²} β(u) du`.
    pub fn laplace(&self, lambda: f64, tau: f64) -> f64 {
        let s = tau / (lambda * lambda);
        self.rule.integrate(|u| (-u * s).exp() * self.eval(u))
    }
}

/// `β̃_λ(H_V + N)`, coefficients `β̃_λ(λ_i²)`. Checks the sandwich bound on
/// `λ_i ≤ 2λ`.
pub fn bernstein(spec: &Arc<SpectralDecomposition>, lambda: f64, beta: &BumpProfile) -> Result<MultiplierOperator> {
    if !(lambda >= 1.0) {
        return Err(Error::domain(format!("Bernstein operator needs λ >= 1, got {lambda}")));
    }
    let op = multiplier(spec, |l| beta.laplace(lambda, l * l), format!("bernstein[{lambda}]"))?;
    for (l, c) in spec.frequencies().iter().zip(&op.coeffs) {
        if *l <= 2.0 * lambda && !(c.re >= 1.0 / BERNSTEIN_C0 && c.re <= BERNSTEIN_C0) {
            return Err(Error::Convergence {
                module: "operator-core",
                detail: format!("Bernstein coefficient {} at frequency {l} violates the sandwich bound", c.re),
            });
        }
    }
    Ok(op)
}

/// `L̃_λ`: `1/β̃_λ(λ_i²)` for `λ_i ≤ 2λ`, zero above, so that
/// `β̃_λ(H) ∘ L̃_λ = 1_{P ≤ 2λ}`.
pub fn bernstein_inverse(spec: &Arc<SpectralDecomposition>, lambda: f64, beta: &BumpProfile) -> Result<MultiplierOperator> {
    multiplier(
        spec,
        |l| if l <= 2.0 * lambda { 1.0 / beta.laplace(lambda, l * l) } else { 0.0 },
        format!("bernstein-inverse[{lambda}]"),
    )
}
