//! Dense symmetric positive-definite algebra.
//!
//! All solves go through a cached lower Cholesky factor; nothing here ever
//! forms an explicit inverse.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Relative tolerance for the symmetry check.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Jitter added once, relative to the mean diagonal, when a factorization fails.
pub const FACTOR_JITTER: f64 = 1e-10;

/// An SPD matrix together with its lower Cholesky factor.
#[derive(Clone, Debug)]
pub struct SpdMatrix {
    name: String,
    matrix: DMatrix<f64>,
    lower: DMatrix<f64>,
}

impl SpdMatrix {
    /// Factorizes `matrix`, retrying once with a small diagonal jitter.
    pub fn new(name: impl Into<String>, matrix: DMatrix<f64>) -> Result<Self> {
        let name = name.into();
        if !matrix.is_square() {
            return Err(Error::dims(format!("{name} (square)"), matrix.nrows(), matrix.ncols()));
        }
        check_symmetric(&name, &matrix)?;
        let lower = cholesky_lower(&matrix).or_else(|| {
            let n = matrix.nrows().max(1) as f64;
            let jitter = FACTOR_JITTER * matrix.diagonal().sum() / n;
            if !(jitter > 0.0) {
                return None;
            }
            let mut bumped = matrix.clone();
            for i in 0..bumped.nrows() {
                bumped[(i, i)] += jitter;
            }
            cholesky_lower(&bumped)
        });
        match lower {
            Some(lower) => Ok(Self { name, matrix, lower }),
            None => Err(Error::NotPositiveDefinite { name }),
        }
    }

    pub fn identity(name: impl Into<String>, dim: usize) -> Self {
        Self { name: name.into(), matrix: DMatrix::identity(dim, dim), lower: DMatrix::identity(dim, dim) }
    }

    pub fn diagonal(name: impl Into<String>, diag: &[f64]) -> Result<Self> {
        Self::new(name, DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Lower-triangular `L` with `L Lᵀ = matrix`.
    pub fn lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    fn check_dim(&self, v: &DVector<f64>) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::dims(format!("vector against `{}`", self.name), self.dim(), v.len()));
        }
        Ok(())
    }

    /// `L⁻¹ v` by forward substitution.
    pub fn whiten(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(v)?;
        self.lower.solve_lower_triangular(v).ok_or_else(|| Error::NotPositiveDefinite { name: self.name.clone() })
    }

    /// `vᵀ M⁻¹ v`.
    pub fn mahalanobis_sq(&self, v: &DVector<f64>) -> Result<f64> {
        Ok(self.whiten(v)?.norm_squared())
    }

    /// `M⁻¹ v`.
    pub fn solve(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        let w = self.whiten(v)?;
        self.lower.tr_solve_lower_triangular(&w).ok_or_else(|| Error::NotPositiveDefinite { name: self.name.clone() })
    }

    /// `M⁻¹ B` column by column.
    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if b.nrows() != self.dim() {
            return Err(Error::dims(format!("matrix against `{}`", self.name), self.dim(), b.nrows()));
        }
        let mut out = b.clone();
        self.lower.solve_lower_triangular_mut(&mut out);
        self.lower.tr_solve_lower_triangular_mut(&mut out);
        Ok(out)
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.lower.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    /// `L ξ`, used to colour standard-normal draws.
    pub fn colour(&self, xi: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(xi)?;
        Ok(&self.lower * xi)
    }
}

impl PartialEq for SpdMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix
    }
}

/// Serialized as row-major nested arrays of the matrix itself.
impl Serialize for SpdMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        to_rows(&self.matrix).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SpdMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(deserializer)?;
        let matrix = from_rows(&rows).map_err(serde::de::Error::custom)?;
        SpdMatrix::new("matrix", matrix).map_err(serde::de::Error::custom)
    }
}

fn cholesky_lower(matrix: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let chol = matrix.clone().cholesky()?;
    let lower = chol.unpack();
    if lower.diagonal().iter().all(|d| *d > 0.0 && d.is_finite()) {
        Some(lower)
    } else {
        None
    }
}

fn check_symmetric(name: &str, m: &DMatrix<f64>) -> Result<()> {
    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(f64::MIN_POSITIVE);
    for i in 0..m.nrows() {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::NotSymmetric { name: name.to_string() });
            }
        }
    }
    Ok(())
}

/// Row-major nested arrays.
pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
        return Err(Error::dims("ragged matrix row", ncols, bad.len()));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

/// Serde helpers for plain `DMatrix` fields stored row-major.
pub mod rows_serde {
    use super::*;

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        from_rows(&rows).map_err(serde::de::Error::custom)
    }
}
