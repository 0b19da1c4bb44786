//! Random embeddings `x = R y` from a low-dimensional search box into the
//! full parameter space.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::rows_serde;
use crate::probspec::Prior;

/// `D × d_e` matrix with unit-norm rows, plus its search box
/// `[-h, h]^{d_e}` with `h = scale · √d_e`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub index: usize,
    #[serde(with = "rows_serde")]
    pub matrix: DMatrix<f64>,
    pub half_width: f64,
}

/// Each row is a standard-normal vector scaled to unit length, i.e. a
/// uniform draw from the sphere `S^{d_e - 1}`.
pub fn sample_embedding<R: Rng + ?Sized>(input_dim: usize, embed_dim: usize, index: usize, scale: f64, rng: &mut R) -> Result<Embedding> {
    if embed_dim == 0 || embed_dim > input_dim {
        return Err(Error::Config(format!("embedding dimension must satisfy 1 <= d_e <= D, got d_e = {embed_dim}, D = {input_dim}")));
    }
    if !(scale > 0.0) {
        return Err(Error::Config(format!("embedding domain scale must be positive, got {scale}")));
    }
    let mut matrix = DMatrix::zeros(input_dim, embed_dim);
    for i in 0..input_dim {
        loop {
            let row: Vec<f64> = (0..embed_dim).map(|_| rng.sample(StandardNormal)).collect();
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm >= 1e-12 {
                for (j, v) in row.iter().enumerate() {
                    matrix[(i, j)] = v / norm;
                }
                break;
            }
        }
    }
    Ok(Embedding { index, matrix, half_width: scale * (embed_dim as f64).sqrt() })
}

impl Embedding {
    pub fn input_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn domain(&self) -> (f64, f64) {
        (-self.half_width, self.half_width)
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        let tol = 1e-12 * self.half_width;
        y.len() == self.dim() && y.iter().all(|v| v.abs() <= self.half_width + tol)
    }

    /// `R y` with no clipping.
    pub fn map(&self, y: &[f64]) -> Result<DVector<f64>> {
        if y.len() != self.dim() {
            return Err(Error::dims("embedded point", self.dim(), y.len()));
        }
        if !self.contains(y) {
            return Err(Error::OutsideDomain { point: y.to_vec(), lower: -self.half_width, upper: self.half_width });
        }
        Ok(&self.matrix * DVector::from_column_slice(y))
    }

    /// `R y`, clipped into the box for uniform priors.
    pub fn lift(&self, y: &[f64], prior: &Prior) -> Result<DVector<f64>> {
        let x = self.map(y)?;
        Ok(match prior {
            Prior::Box(b) => b.clip(&x),
            Prior::Gaussian(_) => x,
        })
    }
}
