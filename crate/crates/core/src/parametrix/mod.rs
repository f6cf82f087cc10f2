//! Flat Hadamard parametrix kernels: modified Bessel functions of complex
//! argument, the radial kernels `F_ν(r, λ)`, and numerical checks of
//! their size and oscillation.

mod bessel;
mod checks;
mod kernel;

pub use bessel::{bessel_k, BesselEvaluator, BesselMethod};
pub use checks::{
    annulus_bump, kernel_l6_check, kernel_l6_exact, kernel_l6_norm, kernel_regime_check, remainder_scale_check, RegimeCheck,
    RemainderOptions,
};
pub use kernel::{f_nu, kernel_table, write_kernel_csv, HadamardKernel, KernelSample, MAX_NU};
