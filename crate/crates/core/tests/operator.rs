use qlab_core::geometry::{build_basis, GradedOptions, ModelManifold, QuadratureGrid};
use qlab_core::operator::{assemble, diagonalize};
use qlab_core::potentials::{eigenfunction_from_ln_distance, Potential};

/// Rayleigh quotient of the Galerkin matrix at the truncated expansion of
/// the explicit zero-energy eigenfunction: an upper bound for the lowest
/// Galerkin eigenvalue that tends to 0.
fn rayleigh_bound(k: usize) -> (f64, f64) {
    let s3 = ModelManifold::sphere_zonal(3).unwrap();
    let basis = build_basis(s3, k).unwrap();
    let a = assemble(&Potential::Counterexample { n: 3 }, &basis).unwrap().to_dense();
    let grid = QuadratureGrid::zonal_graded(3, &GradedOptions::for_degree(k)).unwrap();
    let prof = basis.zonal_profiles(&grid).unwrap();
    let z = grid.zonal().unwrap();
    let c: Vec<f64> = (0..=k)
        .map(|j| {
            (0..grid.len())
                .map(|i| grid.weights()[i] * eigenfunction_from_ln_distance(3, z.ln_pole_distance[i]) * prof[[i, j]])
                .sum()
        })
        .collect();
    let ac = a.dot(&ndarray::Array1::from(c.clone()));
    let num: f64 = c.iter().zip(ac.iter()).map(|(x, y)| x * y).sum();
    let den: f64 = c.iter().map(|x| x * x).sum();
    let lowest = diagonalize(&assemble(&Potential::Counterexample { n: 3 }, &basis).unwrap())
        .unwrap()
        .eigenvalue(0);
    (lowest, num / den)
}

#[test]
fn counterexample_ground_state_approaches_zero() {
    let (mu64, r64) = rayleigh_bound(64);
    let (mu128, r128) = rayleigh_bound(128);
    assert!(mu128 <= 0.05, "lowest eigenvalue {mu128}");
    assert!(mu128 <= mu64 + 1e-12);
    assert!(mu128 >= -1e-9, "H_V ≥ 0 because f > 0 is a ground state");
    assert!(mu64 <= r64 + 1e-10 && mu128 <= r128 + 1e-10);
    assert!(r128 < r64);
}
