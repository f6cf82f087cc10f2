use std::fs::File;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;
use crate::operator::galerkin::GalerkinMatrix;

/// One eigenpair: the vector lives on the modes of a single block.
#[derive(Debug, Clone, PartialEq)]
struct Pair {
    value: f64,
    block: usize,
    coeffs: Vec<f64>,
}

/// Eigenpairs of a Galerkin matrix, eigenvalues ascending.
///
/// `frequency(i) = √(μ_i + N)` with `N` the positivity shift, so that the
/// frequencies are the spectrum of `√(H_V + N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    dim: usize,
    blocks: Vec<Vec<usize>>,
    pairs: Vec<Pair>,
    shift: i64,
}

#[derive(Debug, Serialize, Deserialize)]
struct VectorRow {
    eigen_index: usize,
    block: usize,
    basis_index: usize,
    value: f64,
}

/// Full eigendecomposition, block by block. Deterministic.
pub fn diagonalize(a: &GalerkinMatrix) -> Result<SpectralDecomposition> {
    let mut pairs = Vec::with_capacity(a.dim);
    for (b, block) in a.blocks.iter().enumerate() {
        let eig = symmetric_eigen(&block.matrix)?;
        for (i, &mu) in eig.values.iter().enumerate() {
            pairs.push(Pair {
                // the matrix may already carry a diagonal shift; store μ of A itself
                value: mu - a.shift,
                block: b,
                coeffs: eig.vectors.column(i).to_vec(),
            });
        }
    }
    sort_pairs(&mut pairs);
    Ok(SpectralDecomposition {
        dim: a.dim,
        blocks: a.blocks.iter().map(|b| b.indices.clone()).collect(),
        pairs,
        shift: 0,
    })
}

fn sort_pairs(pairs: &mut [Pair]) {
    pairs.sort_by(|x, y| x.value.total_cmp(&y.value).then(x.block.cmp(&y.block)));
}

impl SpectralDecomposition {
    /// Number of eigenpairs (= basis size).
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.value).collect()
    }

    pub fn eigenvalue(&self, i: usize) -> f64 {
        self.pairs[i].value
    }

    pub fn shift(&self) -> i64 {
        self.shift
    }

    /// The same decomposition with frequencies computed from `μ + shift`.
    pub fn with_shift(mut self, shift: i64) -> Self {
        self.shift = shift;
        self
    }

    /// `λ_i(V) = √max(μ_i + N, 0)`.
    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.frequency(i)).collect()
    }

    pub fn frequency(&self, i: usize) -> f64 {
        (self.pairs[i].value + self.shift as f64).max(0.0).sqrt()
    }

    pub fn max_frequency(&self) -> f64 {
        self.pairs.last().map_or(0.0, |_| self.frequency(self.len() - 1))
    }

    /// Block id that owns eigenvector `i`.
    pub fn block_of(&self, i: usize) -> usize {
        self.pairs[i].block
    }

    /// Eigenvector `i` in basis coordinates.
    pub fn vector(&self, i: usize) -> Vec<f64> {
        let p = &self.pairs[i];
        let mut v = vec![0.0; self.dim];
        for (&j, &c) in self.blocks[p.block].iter().zip(&p.coeffs) {
            v[j] = c;
        }
        v
    }

    /// Dense eigenvector matrix, eigenvectors as columns.
    pub fn vector_matrix(&self) -> Array2<f64> {
        let mut m = Array2::<f64>::zeros((self.dim, self.len()));
        for (i, p) in self.pairs.iter().enumerate() {
            for (&j, &c) in self.blocks[p.block].iter().zip(&p.coeffs) {
                m[[j, i]] = c;
            }
        }
        m
    }

    /// Eigen-coefficients `⟨f, v_i⟩` of basis coefficients `f`.
    pub fn project<T>(&self, f: &[T]) -> Result<Vec<T>>
    where
        T: Copy + Default + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
    {
        self.check_len(f.len())?;
        Ok(self
            .pairs
            .iter()
            .map(|p| {
                self.blocks[p.block]
                    .iter()
                    .zip(&p.coeffs)
                    .fold(T::default(), |acc, (&j, &c)| acc + f[j] * c)
            })
            .collect())
    }

    /// Basis coefficients `Σ_i a_i v_i`.
    pub fn reconstruct<T>(&self, a: &[T]) -> Result<Vec<T>>
    where
        T: Copy + Default + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
    {
        self.check_len(a.len())?;
        let mut out = vec![T::default(); self.dim];
        for (p, &ai) in self.pairs.iter().zip(a) {
            for (&j, &c) in self.blocks[p.block].iter().zip(&p.coeffs) {
                out[j] = out[j] + ai * c;
            }
        }
        Ok(out)
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim {
            return Err(Error::domain(format!(
                "coefficient vector has length {len}, expected {}",
                self.dim
            )));
        }
        Ok(())
    }

    /// `max_i ‖A v_i − μ_i v_i‖ / ‖A‖_max`.
    pub fn max_residual(&self, a: &GalerkinMatrix) -> f64 {
        let norm = a.max_abs().max(f64::MIN_POSITIVE);
        self.pairs
            .iter()
            .map(|p| {
                let m = &a.blocks[p.block].matrix;
                let mu = p.value + a.shift;
                (0..m.nrows())
                    .map(|r| {
                        let av: f64 = (0..m.ncols()).map(|c| m[[r, c]] * p.coeffs[c]).sum();
                        (av - mu * p.coeffs[r]).powi(2)
                    })
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
            / norm
    }

    /// `max |VᵀV − I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let v = self.vector_matrix();
        let g = v.t().dot(&v);
        let mut worst: f64 = 0.0;
        for ((i, j), x) in g.indexed_iter() {
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((x - want).abs());
        }
        worst
    }

    /// Writes the eigenvalue and eigenvector CSV files. Floats are written
    /// in shortest round-trip form, so [`read_csv`](Self::read_csv)
    /// restores the decomposition bit for bit.
    pub fn write_csv(&self, eigenvalues: &Path, vectors: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(eigenvalues)?;
        w.write_record(["index", "eigenvalue", "frequency", "shift"])?;
        for i in 0..self.len() {
            w.write_record([
                i.to_string(),
                format!("{:e}", self.pairs[i].value),
                format!("{:e}", self.frequency(i)),
                self.shift.to_string(),
            ])?;
        }
        w.flush()?;
        let mut w = csv::Writer::from_path(vectors)?;
        w.write_record(["eigen_index", "block", "basis_index", "value"])?;
        for (i, p) in self.pairs.iter().enumerate() {
            for (&j, &c) in self.blocks[p.block].iter().zip(&p.coeffs) {
                w.write_record([i.to_string(), p.block.to_string(), j.to_string(), format!("{c:e}")])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(eigenvalues: &Path, vectors: &Path) -> Result<Self> {
        let bad = |msg: String| Error::Config(format!("spectral CSV: {msg}"));
        let mut values = Vec::new();
        let mut shift = 0;
        let mut r = csv::Reader::from_reader(File::open(eigenvalues)?);
        for (k, rec) in r.records().enumerate() {
            let rec = rec?;
            let get = |c: usize| rec.get(c).ok_or_else(|| bad(format!("row {k} is short")));
            let index: usize = get(0)?.parse().map_err(|_| bad(format!("row {k}: bad index")))?;
            if index != k {
                return Err(bad(format!("row {k} has index {index}")));
            }
            values.push(get(1)?.parse::<f64>().map_err(|_| bad(format!("row {k}: bad eigenvalue")))?);
            shift = get(3)?.parse().map_err(|_| bad(format!("row {k}: bad shift")))?;
        }
        let mut pairs: Vec<Pair> = values
            .iter()
            .map(|&value| Pair {
                value,
                block: usize::MAX,
                coeffs: Vec::new(),
            })
            .collect();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut r = csv::Reader::from_reader(File::open(vectors)?);
        for rec in r.deserialize::<VectorRow>() {
            let row = rec?;
            let p = pairs
                .get_mut(row.eigen_index)
                .ok_or_else(|| bad(format!("eigen index {} out of range", row.eigen_index)))?;
            if row.block >= blocks.len() {
                blocks.resize(row.block + 1, Vec::new());
            }
            if p.block == usize::MAX {
                p.block = row.block;
            } else if p.block != row.block {
                return Err(bad(format!("eigenvector {} spans two blocks", row.eigen_index)));
            }
            let idx = &mut blocks[row.block];
            let pos = match idx.iter().position(|&j| j == row.basis_index) {
                Some(pos) => pos,
                None => {
                    idx.push(row.basis_index);
                    idx.len() - 1
                }
            };
            if p.coeffs.len() <= pos {
                p.coeffs.resize(pos + 1, 0.0);
            }
            p.coeffs[pos] = row.value;
        }
        let dim = blocks.iter().map(Vec::len).sum();
        for (i, p) in pairs.iter_mut().enumerate() {
            if p.block == usize::MAX {
                return Err(bad(format!("eigenvector {i} missing")));
            }
            p.coeffs.resize(blocks[p.block].len(), 0.0);
        }
        if dim != pairs.len() {
            return Err(bad(format!("{} eigenvalues but {dim} basis indices", pairs.len())));
        }
        Ok(SpectralDecomposition { dim, blocks, pairs, shift })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_basis, ModelManifold};
    use crate::operator::galerkin::{assemble, Block, QuadratureInfo};
    use crate::potentials::Potential;
    use ndarray::array;

    fn single(m: Array2<f64>) -> GalerkinMatrix {
        GalerkinMatrix {
            dim: m.nrows(),
            blocks: vec![Block {
                indices: (0..m.nrows()).collect(),
                matrix: m,
            }],
            shift: 0.0,
            quadrature: QuadratureInfo {
                rule: "test".into(),
                nodes: 0,
                refined_nodes: 0,
                max_refinement_change: 0.0,
            },
        }
    }

    #[test]
    fn two_by_two() {
        let s = diagonalize(&single(array![[0.0, 1.0], [1.0, 0.0]])).unwrap();
        let ev = s.eigenvalues();
        assert!((ev[0] + 1.0).abs() < 1e-15 && (ev[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn diagonal_input() {
        let s = diagonalize(&single(array![[3.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 2.0]])).unwrap();
        assert_eq!(s.eigenvalues(), vec![1.0, 2.0, 3.0]);
        assert_eq!(s.vector(0), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn residual_and_orthonormality() {
        let b = build_basis(ModelManifold::SphereFull2d, 8).unwrap();
        let v = Potential::parse("10*cos(phi)", ModelManifold::SphereFull2d, false).unwrap();
        let a = assemble(&v, &b).unwrap();
        let s = diagonalize(&a).unwrap();
        assert!(s.max_residual(&a) < 1e-8);
        assert!(s.orthonormality_error() < 1e-10);
        let ev = s.eigenvalues();
        assert!(ev.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn csv_roundtrip() {
        let b = build_basis(ModelManifold::SphereFull2d, 4).unwrap();
        let v = Potential::parse("cos(phi)^2", ModelManifold::SphereFull2d, false).unwrap();
        let s = diagonalize(&assemble(&v, &b).unwrap()).unwrap().with_shift(2);
        let dir = tempfile::tempdir().unwrap();
        let (e, vpath) = (dir.path().join("e.csv"), dir.path().join("v.csv"));
        s.write_csv(&e, &vpath).unwrap();
        let back = SpectralDecomposition::read_csv(&e, &vpath).unwrap();
        assert_eq!(back.eigenvalues(), s.eigenvalues());
        assert_eq!(back.vector_matrix(), s.vector_matrix());
        assert_eq!(back.shift(), 2);
    }

    #[test]
    fn project_reconstruct() {
        let s = diagonalize(&single(array![[2.0, 1.0], [1.0, 2.0]])).unwrap();
        let f = vec![0.3, -1.2];
        let back = s.reconstruct(&s.project(&f).unwrap()).unwrap();
        assert!((back[0] - 0.3).abs() < 1e-15 && (back[1] + 1.2).abs() < 1e-15);
    }
}
