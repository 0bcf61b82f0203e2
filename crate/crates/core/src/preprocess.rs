//! Column standardization and the full-sample Pearson correlation matrix.

use nalgebra::{DMatrix, DVector};

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Pearson correlations between all pairs of columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    rho: DMatrix<f64>,
}

impl CorrelationMatrix {
    /// Wraps an existing matrix after checking symmetry, unit diagonal and
    /// the `[-1, 1]` range.
    pub fn new(rho: DMatrix<f64>) -> Result<Self> {
        const TOL: f64 = 1e-12;
        let p = rho.nrows();
        if rho.ncols() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: rho.ncols(),
            });
        }
        for i in 0..p {
            if (rho[(i, i)] - 1.0).abs() > TOL {
                return Err(Error::InvalidConfig(format!("diagonal entry {i} is not 1")));
            }
            for j in 0..p {
                let v = rho[(i, j)];
                if !v.is_finite() || v.abs() > 1.0 + TOL || (v - rho[(j, i)]).abs() > TOL {
                    return Err(Error::InvalidConfig(format!(
                        "entry ({i}, {j}) is not a valid correlation"
                    )));
                }
            }
        }
        Ok(CorrelationMatrix { rho })
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rho[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.rho
    }
}

fn column_moments(values: &DMatrix<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
    let n = values.nrows() as f64;
    let p = values.ncols();
    let mut means = DVector::zeros(p);
    let mut sds = DVector::zeros(p);
    for j in 0..p {
        let col = values.column(j);
        let mean = col.sum() / n;
        let ss: f64 = col.iter().map(|&x| (x - mean) * (x - mean)).sum();
        let sd = (ss / (n - 1.0)).sqrt();
        if !(sd > 0.0) || sd <= f64::EPSILON * mean.abs() {
            return Err(Error::ConstantColumn { col: j });
        }
        means[j] = mean;
        sds[j] = sd;
    }
    Ok((means, sds))
}

/// Centers every column to mean 0 and scales it to sample variance 1
/// (denominator `n - 1`).
pub fn standardize(ds: &Dataset) -> Result<Dataset> {
    let (means, sds) = column_moments(ds.values())?;
    let mut values = ds.values().clone();
    for (j, mut col) in values.column_iter_mut().enumerate() {
        for x in col.iter_mut() {
            *x = (*x - means[j]) / sds[j];
        }
    }
    Ok(Dataset::from_parts_unchecked(values, ds.names().to_vec()))
}

/// Full-sample Pearson correlation matrix, independent of any grouping.
pub fn correlation_matrix(ds: &Dataset) -> Result<CorrelationMatrix> {
    let (means, _) = column_moments(ds.values())?;
    let p = ds.n_cols();
    let mut centered = ds.values().clone();
    for (j, mut col) in centered.column_iter_mut().enumerate() {
        col.add_scalar_mut(-means[j]);
    }
    let norms: Vec<f64> = (0..p).map(|j| centered.column(j).norm()).collect();
    let mut rho = DMatrix::identity(p, p);
    for i in 0..p {
        for j in (i + 1)..p {
            let r = (centered.column(i).dot(&centered.column(j)) / (norms[i] * norms[j]))
                .clamp(-1.0, 1.0);
            rho[(i, j)] = r;
            rho[(j, i)] = r;
        }
    }
    Ok(CorrelationMatrix { rho })
}
