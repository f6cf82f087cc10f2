//! Growth exponents and the measurements that estimate them: quasimode
//! ratios, `L² → L^p` projector norms, slope fits, local Weyl sums, the
//! divergent quasimode, and a torus resolvent probe.

mod exponents;
mod projector;
mod report;
mod resolvent;
mod weyl;

pub use exponents::{delta_br, p_critical, sigma, ExponentTable};
pub use projector::{projector_norm, quasimode_ratio, AscentOptions, ProjectorNorm};
pub use report::{fit_exponent, geometric_grid, Expectation, ExperimentReport, Fit, Verdict};
pub use resolvent::{default_resolvent_grid, resolvent_exponent, resolvent_ratios, uniform_resolvent_probe, RESOLVENT_BATTERY};
pub use weyl::{divergent_quasimode, harmonic_dimension, local_weyl, DivergentQuasimode};
