//! The experiment registry: what each experiment reads, validates and writes.

mod dynamics;
mod parametrix;
mod spectral;

use std::sync::Arc;

use anyhow::Result;
use qlab_core::estimators::{geometric_grid, p_critical};
use qlab_core::geometry::{build_basis, Basis, ModelManifold};
use qlab_core::operator::{shifted_spectrum, SpectralDecomposition};
use qlab_core::potentials::Potential;

use crate::config::ExperimentConfig;
use crate::output::{Outcome, Outputs};

type RunFn = fn(&ExperimentConfig, &mut Outputs) -> Result<Outcome>;

pub struct Experiment {
    pub name: &'static str,
    pub summary: &'static str,
    pub default_manifold: &'static str,
    pub default_truncation: Option<usize>,
    run: RunFn,
}

impl Experiment {
    pub fn run(&self, cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome> {
        (self.run)(cfg, out)
    }
}

pub const EXPERIMENTS: &[Experiment] = &[
    Experiment {
        name: "spectrum",
        summary: "Galerkin eigenpairs of −Δ + V and the positivity shift",
        default_manifold: "sphere-zonal",
        default_truncation: Some(16),
        run: spectral::spectrum,
    },
    Experiment {
        name: "kato",
        summary: "Kato moduli over shrinking radii, verdict and L^{n/2} norm",
        default_manifold: "sphere-zonal",
        default_truncation: None,
        run: spectral::kato,
    },
    Experiment {
        name: "counterexample",
        summary: "zero-energy singular eigenfunction: residual, growth at the poles, Kato and L^q status",
        default_manifold: "sphere-zonal",
        default_truncation: Some(128),
        run: spectral::counterexample,
    },
    Experiment {
        name: "projector-norms",
        summary: "L² → L^p norms of unit-band spectral projectors against λ^σ(p)",
        default_manifold: "sphere-full-2d",
        default_truncation: Some(64),
        run: spectral::projector_norms,
    },
    Experiment {
        name: "quasimode",
        summary: "quasimode ratios of band-projected point masses and eigenfunctions",
        default_manifold: "sphere-zonal",
        default_truncation: Some(64),
        run: spectral::quasimode,
    },
    Experiment {
        name: "bochner-riesz",
        summary: "L^p lower bounds for Bochner-Riesz means below and above the critical index",
        default_manifold: "sphere-zonal",
        default_truncation: Some(512),
        run: dynamics::bochner_riesz,
    },
    Experiment {
        name: "square-function",
        summary: "Littlewood-Paley square function norm equivalence over a test battery",
        default_manifold: "sphere-zonal",
        default_truncation: Some(64),
        run: dynamics::square_function,
    },
    Experiment {
        name: "multiplier",
        summary: "Hörmander multipliers: windowed Sobolev condition and action on a battery",
        default_manifold: "sphere-zonal",
        default_truncation: Some(64),
        run: dynamics::multiplier,
    },
    Experiment {
        name: "heat",
        summary: "heat-kernel sup against t^{−n/2}",
        default_manifold: "sphere-zonal",
        default_truncation: Some(64),
        run: dynamics::heat,
    },
    Experiment {
        name: "wave-speed",
        summary: "mollified wave-kernel mass outside the light cone across truncations",
        default_manifold: "sphere-zonal",
        default_truncation: Some(64),
        run: dynamics::wave_speed,
    },
    Experiment {
        name: "strichartz",
        summary: "space-time L^{p_c} wave norms on a frequency ladder and the band bound",
        default_manifold: "sphere-zonal",
        default_truncation: Some(96),
        run: dynamics::strichartz,
    },
    Experiment {
        name: "parametrix",
        summary: "Bessel kernels of the flat parametrix: closed forms, regimes, recursion, L⁶ and remainder scaling",
        default_manifold: "sphere-zonal",
        default_truncation: None,
        run: parametrix::parametrix,
    },
    Experiment {
        name: "weyl",
        summary: "local Weyl sums at a point against the flat density",
        default_manifold: "sphere-full-2d",
        default_truncation: Some(48),
        run: spectral::weyl,
    },
    Experiment {
        name: "divergent-quasimode",
        summary: "partial sums of the divergent quasimode and its L² normalization",
        default_manifold: "sphere-zonal",
        default_truncation: None,
        run: spectral::divergent_quasimode,
    },
    Experiment {
        name: "resolvent-probe",
        summary: "L^p → L^{p'} resolvent lower bounds on the torus",
        default_manifold: "torus",
        default_truncation: None,
        run: spectral::resolvent_probe,
    },
];

pub fn find(name: &str) -> Option<&'static Experiment> {
    EXPERIMENTS.iter().find(|e| e.name == name)
}

pub fn names() -> Vec<&'static str> {
    EXPERIMENTS.iter().map(|e| e.name).collect()
}

/// One line per experiment, in registry order.
pub fn listing() -> String {
    let width = EXPERIMENTS.iter().map(|e| e.name.len()).max().unwrap_or(0);
    EXPERIMENTS
        .iter()
        .map(|e| format!("{:width$}  {}\n", e.name, e.summary))
        .collect()
}

/// Default `λ`-grids, truncation requirements and shared setup.
pub(crate) struct Setup {
    pub manifold: ModelManifold,
    pub potential: Potential,
    pub basis: Basis,
    pub spec: Arc<SpectralDecomposition>,
}

impl Setup {
    pub fn build(cfg: &ExperimentConfig, exp: &Experiment) -> Result<Self> {
        let manifold = cfg.manifold(exp.default_manifold)?;
        let potential = cfg.potential(manifold)?;
        let k = cfg.truncation_or(exp.default_truncation.unwrap_or(16));
        Self::at(manifold, potential, k)
    }

    pub fn at(manifold: ModelManifold, potential: Potential, k: usize) -> Result<Self> {
        let basis = build_basis(manifold, k)?;
        let spec = shifted_spectrum(&potential, &basis)?;
        Ok(Setup {
            manifold,
            potential,
            basis,
            spec,
        })
    }
}

pub(crate) fn experiment(name: &str) -> &'static Experiment {
    find(name).expect("registered experiment")
}

pub(crate) fn default_lambdas(name: &str) -> Vec<f64> {
    match name {
        "projector-norms" => geometric_grid(10.0, 60.0),
        "quasimode" => geometric_grid(8.0, 45.0),
        "bochner-riesz" => geometric_grid(8.0, 64.0),
        "parametrix" => geometric_grid(8.0, 256.0),
        "resolvent-probe" => qlab_core::estimators::default_resolvent_grid(),
        _ => Vec::new(),
    }
}

pub(crate) fn default_times() -> Vec<f64> {
    (0..6).map(|j| 0.01 * 10f64.powf(j as f64 / 5.0)).collect()
}

pub(crate) fn default_ks() -> Vec<f64> {
    vec![4.0, 8.0, 16.0, 32.0]
}

/// Smallest truncation an experiment can run at, given its grids.
fn required_truncation(cfg: &ExperimentConfig) -> usize {
    let lambdas = cfg.lambdas.clone().unwrap_or_else(|| default_lambdas(&cfg.experiment));
    let top = lambdas.iter().cloned().fold(0.0, f64::max);
    match cfg.experiment.as_str() {
        "projector-norms" | "quasimode" => (top + 1.0).ceil() as usize + 1,
        "bochner-riesz" => (4.0 * top).ceil() as usize,
        "strichartz" => {
            let ks = cfg.params.ks.clone().unwrap_or_else(default_ks);
            (2.0 * ks.iter().cloned().fold(0.0, f64::max)).ceil() as usize
        }
        "heat" => {
            let times = cfg.params.times.clone().unwrap_or_else(default_times);
            let t = times.iter().cloned().fold(f64::INFINITY, f64::min);
            (20.0 / t).sqrt().ceil() as usize
        }
        _ => 1,
    }
}

/// Static checks of a config; never builds bases or touches the disk.
pub fn validate(cfg: &ExperimentConfig) -> Vec<String> {
    let mut diags = Vec::new();
    let Some(exp) = find(&cfg.experiment) else {
        diags.push(format!(
            "unknown experiment {:?}; valid experiments: {}",
            cfg.experiment,
            names().join(", ")
        ));
        return diags;
    };
    match cfg.manifold(exp.default_manifold) {
        Ok(m) => {
            if let Err(e) = cfg.potential(m) {
                diags.push(format!("potential: {e}"));
            }
        }
        Err(e) => diags.push(format!("manifold: {e}")),
    }
    for (key, list) in [("lambdas", &cfg.lambdas), ("p", &cfg.p)] {
        if let Some(l) = list {
            if l.is_empty() {
                diags.push(format!("{key}: list is empty"));
            }
            if l.iter().any(|v| !(*v > 0.0)) {
                diags.push(format!("{key}: entries must be positive"));
            }
        }
    }
    if let Some(t) = &cfg.params.times {
        if t.iter().any(|v| !(*v > 0.0)) {
            diags.push("params.times: entries must be positive".into());
        }
    }
    if let Some(tol) = cfg.tolerances.slope {
        if !(tol > 0.0) {
            diags.push("tolerances.slope must be positive".into());
        }
    }
    if exp.default_truncation.is_some() {
        let k = cfg.truncation_or(exp.default_truncation.unwrap_or(0));
        let need = required_truncation(cfg);
        if k == 0 || k < need {
            diags.push(format!("K = {k}: truncation too small (need at least {need})"));
        }
    }
    if let Some(ts) = &cfg.params.truncations {
        if ts.iter().any(|&k| k < 8) {
            diags.push("params.truncations: truncation too small (need at least 8)".into());
        }
    }
    if cfg.experiment == "divergent-quasimode" && cfg.n.unwrap_or(4) < 4 {
        diags.push("n: the divergent quasimode needs n >= 4".into());
    }
    if cfg.experiment == "resolvent-probe" && cfg.n.unwrap_or(3) < 3 {
        diags.push("n: the resolvent probe needs n >= 3".into());
    }
    diags
}

/// `p` list with the critical exponent as default companion of `∞`.
pub(crate) fn p_list(cfg: &ExperimentConfig, n: usize, default: &[f64]) -> Result<Vec<f64>> {
    Ok(match &cfg.p {
        Some(p) => p.clone(),
        None if default.is_empty() => vec![f64::INFINITY, p_critical(n)?],
        None => default.to_vec(),
    })
}

/// `p` as it appears in file names: `inf`, `6`, `1.333`.
pub(crate) fn p_tag(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        let s = format!("{p:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_is_complete_and_listed() {
        let want = [
            "spectrum",
            "kato",
            "counterexample",
            "projector-norms",
            "quasimode",
            "bochner-riesz",
            "square-function",
            "multiplier",
            "heat",
            "wave-speed",
            "strichartz",
            "parametrix",
            "weyl",
            "divergent-quasimode",
            "resolvent-probe",
        ];
        assert_eq!(names(), want);
        assert!(listing().contains("strichartz"));
        assert_eq!(listing(), listing());
    }

    #[test]
    fn truncation_diagnostics() {
        let mut c = ExperimentConfig::bare("projector-norms");
        c.truncation = Some(0);
        let d = validate(&c);
        assert!(d.iter().any(|m| m.contains("truncation too small")), "{d:?}");
        c.truncation = Some(64);
        assert!(validate(&c).is_empty(), "{:?}", validate(&c));
        c.lambdas = Some(vec![10.0, 100.0]);
        assert!(validate(&c).iter().any(|m| m.contains("truncation too small")));
    }

    #[test]
    fn unknown_experiment_lists_names() {
        let d = validate(&ExperimentConfig::bare("nope"));
        assert!(d[0].contains("strichartz") && d[0].contains("nope"));
    }

    #[test]
    fn p_tags() {
        assert_eq!(p_tag(f64::INFINITY), "inf");
        assert_eq!(p_tag(6.0), "6");
        assert_eq!(p_tag(4.0 / 3.0), "1.333");
    }
}
