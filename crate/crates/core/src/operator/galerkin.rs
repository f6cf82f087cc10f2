use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Basis, GradedOptions, ModelManifold, QuadratureGrid};
use crate::potentials::Potential;

/// Entries may move by at most this much (relative) under refinement.
const REFINEMENT_TOLERANCE: f64 = 0.01;

/// A diagonal block of the Galerkin matrix acting on the listed basis modes.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub indices: Vec<usize>,
    pub matrix: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureInfo {
    pub rule: String,
    pub nodes: usize,
    pub refined_nodes: usize,
    /// Largest relative entry change between the two rules.
    pub max_refinement_change: f64,
}

/// `A_jk = λ_j² δ_jk + ⟨V e_j, e_k⟩ + shift δ_jk`, stored block-diagonally.
/// Zonal potentials couple only modes of equal sector, so on S² the matrix
/// splits by azimuthal order; constants give 1×1 blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct GalerkinMatrix {
    pub dim: usize,
    pub blocks: Vec<Block>,
    pub shift: f64,
    pub quadrature: QuadratureInfo,
}

impl GalerkinMatrix {
    pub fn to_dense(&self) -> Array2<f64> {
        let mut a = Array2::<f64>::zeros((self.dim, self.dim));
        for b in &self.blocks {
            for (p, &i) in b.indices.iter().enumerate() {
                for (q, &j) in b.indices.iter().enumerate() {
                    a[[i, j]] = b.matrix[[p, q]];
                }
            }
        }
        a
    }

    /// Matrix with `shift` added to the diagonal (replacing any previous shift).
    pub fn with_shift(&self, shift: f64) -> GalerkinMatrix {
        let mut out = self.clone();
        let delta = shift - self.shift;
        for b in &mut out.blocks {
            for p in 0..b.indices.len() {
                b.matrix[[p, p]] += delta;
            }
        }
        out.shift = shift;
        out
    }

    /// Largest `|A_jk − A_kj| / max|A|`.
    pub fn asymmetry(&self) -> f64 {
        let mut top: f64 = 0.0;
        let mut diff: f64 = 0.0;
        for b in &self.blocks {
            let m = &b.matrix;
            for p in 0..m.nrows() {
                for q in 0..m.ncols() {
                    top = top.max(m[[p, q]].abs());
                    diff = diff.max((m[[p, q]] - m[[q, p]]).abs());
                }
            }
        }
        if top == 0.0 {
            0.0
        } else {
            diff / top
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.matrix.iter())
            .fold(0.0f64, |a, v| a.max(v.abs()))
    }
}

/// Assembles the Galerkin matrix of `−Δ + V` on `basis`.
///
/// Pole-singular potentials are integrated on a pole-graded grid down to
/// the poles, smooth ones on a Gauss rule; each entry is recomputed on a
/// refined rule and must agree to 1%.
pub fn assemble(v: &Potential, basis: &Basis) -> Result<GalerkinMatrix> {
    v.check_manifold(basis.manifold())?;
    let lam2: Vec<f64> = basis.modes().iter().map(|m| m.eigenvalue()).collect();
    let dim = basis.len();
    if let Some(c) = v.constant_value() {
        let blocks = (0..dim)
            .map(|j| Block {
                indices: vec![j],
                matrix: Array2::from_elem((1, 1), lam2[j] + c),
            })
            .collect();
        return Ok(GalerkinMatrix {
            dim,
            blocks,
            shift: 0.0,
            quadrature: QuadratureInfo {
                rule: "exact".into(),
                nodes: 0,
                refined_nodes: 0,
                max_refinement_change: 0.0,
            },
        });
    }
    match basis.manifold() {
        ModelManifold::Torus { n } => assemble_torus(v, basis, n, &lam2),
        _ => assemble_zonal(v, basis, &lam2),
    }
}

/// Sector blocks of `Σ_i w_i V_i P_ij P_ik` on a zonal grid.
fn zonal_blocks(v: &Potential, basis: &Basis, grid: &QuadratureGrid, sectors: &[Vec<usize>]) -> Result<Vec<Array2<f64>>> {
    let profiles = basis.zonal_profiles(grid)?;
    let z = grid.zonal().expect("zonal grid");
    let wv: Vec<f64> = (0..grid.len())
        .map(|i| {
            let (lv, s) = v.zonal_ln_abs(z.is_north(i), z.ln_pole_distance[i]);
            if s == 0.0 {
                0.0
            } else {
                s * (grid.ln_weights()[i] + lv).exp()
            }
        })
        .collect();
    if let Some(bad) = wv.iter().position(|x| !x.is_finite()) {
        return Err(Error::Convergence {
            module: "operator-core",
            detail: format!("potential times weight is not finite at polar angle {}", z.phi[bad]),
        });
    }
    // keep only nodes that contribute
    let live: Vec<usize> = (0..grid.len()).filter(|&i| wv[i] != 0.0).collect();
    Ok(sectors
        .par_iter()
        .map(|idx| {
            let mut p = Array2::<f64>::zeros((live.len(), idx.len()));
            let mut wp = Array2::<f64>::zeros((live.len(), idx.len()));
            for (r, &i) in live.iter().enumerate() {
                for (c, &j) in idx.iter().enumerate() {
                    p[[r, c]] = profiles[[i, j]];
                    wp[[r, c]] = wv[i] * profiles[[i, j]];
                }
            }
            let mut m = p.t().dot(&wp);
            symmetrize(&mut m);
            m
        })
        .collect())
}

fn symmetrize(m: &mut Array2<f64>) {
    for p in 0..m.nrows() {
        for q in p + 1..m.ncols() {
            let a = 0.5 * (m[[p, q]] + m[[q, p]]);
            m[[p, q]] = a;
            m[[q, p]] = a;
        }
    }
}

fn zonal_rules(v: &Potential, basis: &Basis) -> Result<(QuadratureGrid, QuadratureGrid, String)> {
    let k = basis.max_degree();
    let n = basis.manifold().dimension();
    if v.is_pole_singular() || !v.breakpoints().is_empty() {
        let opts = GradedOptions::for_degree(k.max(8)).with_breakpoints(&v.breakpoints());
        Ok((
            QuadratureGrid::zonal_graded(n, &opts)?,
            QuadratureGrid::zonal_graded(n, &opts.refined())?,
            "pole-graded composite Gauss".into(),
        ))
    } else {
        let m = 2 * k + 32;
        Ok((
            QuadratureGrid::zonal_gauss(n, m)?,
            QuadratureGrid::zonal_gauss(n, 2 * m)?,
            "Gauss-Gegenbauer".into(),
        ))
    }
}

fn assemble_zonal(v: &Potential, basis: &Basis, lam2: &[f64]) -> Result<GalerkinMatrix> {
    let mut sectors: Vec<Vec<usize>> = vec![Vec::new(); basis.sector_count()];
    for m in basis.modes() {
        sectors[m.sector].push(m.index);
    }
    sectors.retain(|s| !s.is_empty());
    let (coarse, fine, rule) = zonal_rules(v, basis)?;
    let a = zonal_blocks(v, basis, &coarse, &sectors)?;
    let b = zonal_blocks(v, basis, &fine, &sectors)?;
    let scale = b.iter().flat_map(|m| m.iter()).fold(0.0f64, |x, y| x.max(y.abs()));
    let mut worst = (0usize, 0usize, 0.0f64);
    for (s, idx) in sectors.iter().enumerate() {
        for p in 0..idx.len() {
            for q in 0..idx.len() {
                let (x, y) = (a[s][[p, q]], b[s][[p, q]]);
                let rel = (x - y).abs() / y.abs().max(1e-6 * scale).max(f64::MIN_POSITIVE);
                if rel > worst.2 {
                    worst = (idx[p], idx[q], rel);
                }
            }
        }
    }
    if worst.2 > REFINEMENT_TOLERANCE {
        return Err(Error::Assembly {
            row: worst.0,
            col: worst.1,
            relative_change: worst.2,
        });
    }
    let blocks = sectors
        .into_iter()
        .zip(b)
        .map(|(indices, mut matrix)| {
            for (p, &j) in indices.iter().enumerate() {
                matrix[[p, p]] += lam2[j];
            }
            Block { indices, matrix }
        })
        .collect();
    Ok(GalerkinMatrix {
        dim: basis.len(),
        blocks,
        shift: 0.0,
        quadrature: QuadratureInfo {
            rule,
            nodes: coarse.len(),
            refined_nodes: fine.len(),
            max_refinement_change: worst.2,
        },
    })
}

fn torus_matrix(v: &Potential, basis: &Basis, n: usize, per_axis: usize) -> Result<(Array2<f64>, usize)> {
    let grid = QuadratureGrid::torus_uniform(n, per_axis)?;
    let rows: Vec<Result<(Vec<f64>, f64)>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let p = grid.point(i);
            Ok((basis.eval_point(&p)?, v.eval_point(&p)? * grid.weights()[i]))
        })
        .collect();
    let m = basis.len();
    let mut e = Array2::<f64>::zeros((grid.len(), m));
    let mut we = Array2::<f64>::zeros((grid.len(), m));
    for (i, r) in rows.into_iter().enumerate() {
        let (vals, wv) = r?;
        for j in 0..m {
            e[[i, j]] = vals[j];
            we[[i, j]] = wv * vals[j];
        }
    }
    let mut a = e.t().dot(&we);
    symmetrize(&mut a);
    Ok((a, grid.len()))
}

fn assemble_torus(v: &Potential, basis: &Basis, n: usize, lam2: &[f64]) -> Result<GalerkinMatrix> {
    let k = basis.max_degree();
    let p = 4 * k + 4;
    let (a, nodes) = torus_matrix(v, basis, n, p)?;
    let (b, fine_nodes) = torus_matrix(v, basis, n, 2 * p)?;
    let scale = b.iter().fold(0.0f64, |x, y| x.max(y.abs()));
    let mut worst = (0, 0, 0.0f64);
    for ((i, j), y) in b.indexed_iter() {
        let rel = (a[[i, j]] - y).abs() / y.abs().max(1e-6 * scale).max(f64::MIN_POSITIVE);
        if rel > worst.2 {
            worst = (i, j, rel);
        }
    }
    if worst.2 > REFINEMENT_TOLERANCE {
        return Err(Error::Assembly {
            row: worst.0,
            col: worst.1,
            relative_change: worst.2,
        });
    }
    let mut matrix = b;
    for j in 0..basis.len() {
        matrix[[j, j]] += lam2[j];
    }
    Ok(GalerkinMatrix {
        dim: basis.len(),
        blocks: vec![Block {
            indices: (0..basis.len()).collect(),
            matrix,
        }],
        shift: 0.0,
        quadrature: QuadratureInfo {
            rule: "trapezoid".into(),
            nodes,
            refined_nodes: fine_nodes,
            max_refinement_change: worst.2,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_basis;

    #[test]
    fn zero_and_constant() {
        let b = build_basis(ModelManifold::sphere_zonal(2).unwrap(), 6).unwrap();
        let a = assemble(&Potential::zero(), &b).unwrap().to_dense();
        for j in 0..7 {
            for k in 0..7 {
                let want = if j == k { (j * (j + 1)) as f64 } else { 0.0 };
                assert_eq!(a[[j, k]], want);
            }
        }
        let c = assemble(&Potential::Constant(2.5), &b).unwrap().to_dense();
        assert_eq!(c[[3, 3]], 12.0 + 2.5);
    }

    #[test]
    fn cos_phi_entry() {
        let s2 = ModelManifold::sphere_zonal(2).unwrap();
        let b = build_basis(s2, 4).unwrap();
        let v = Potential::parse("cos(phi)", s2, false).unwrap();
        let a = assemble(&v, &b).unwrap();
        let d = a.to_dense();
        assert!((d[[0, 1]] - 1.0 / 3f64.sqrt()).abs() < 1e-14);
        assert!(a.asymmetry() < 1e-12);
    }

    #[test]
    fn full_sphere_blocks_by_order() {
        let b = build_basis(ModelManifold::SphereFull2d, 5).unwrap();
        let v = Potential::parse("cos(phi)", ModelManifold::SphereFull2d, false).unwrap();
        let a = assemble(&v, &b).unwrap();
        assert_eq!(a.blocks.len(), 11);
        // ⟨cos θ Y_00, Y_10⟩ = 1/√3
        let i10 = b.modes().iter().position(|m| m.degree == 1 && m.order == 0).unwrap();
        assert!((a.to_dense()[[0, i10]] - 1.0 / 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn singular_counterexample_assembles() {
        let b = build_basis(ModelManifold::sphere_zonal(3).unwrap(), 16).unwrap();
        let a = assemble(&Potential::Counterexample { n: 3 }, &b).unwrap();
        assert!(a.quadrature.max_refinement_change < 0.01);
        assert!(a.asymmetry() < 1e-12);
    }

    #[test]
    fn torus_potential() {
        let t2 = ModelManifold::torus(2).unwrap();
        let b = build_basis(t2, 2).unwrap();
        let v = Potential::parse("cos(x1)", t2, false).unwrap();
        let a = assemble(&v, &b).unwrap().to_dense();
        // ⟨cos(x1) · 1/(2π), √2 cos(x1)/(2π)⟩ = √2/2 · ... = 1/√2
        let c = b.modes().iter().position(|m| m.lattice == vec![1, 0] && m.order == 1).unwrap();
        assert!((a[[0, c]] - 1.0 / 2f64.sqrt()).abs() < 1e-13);
    }
}
