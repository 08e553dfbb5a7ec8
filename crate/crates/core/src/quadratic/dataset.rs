use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Basis, DiagonalProblem, DroppedDirection, ResidualState};
use crate::error::{Error, Result};

/// One observation `(e_index, y)`; `index` is 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub index: usize,
    pub y: f64,
}

/// Samples whose inputs are standard basis vectors of `R^dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    samples: Vec<Sample>,
    dim: usize,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>, dim: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for (i, s) in samples.iter().enumerate() {
            if s.index >= dim {
                return Err(Error::SampleOutOfRange { sample: i, index: s.index, dim });
            }
        }
        Ok(Self { samples, dim })
    }

    /// Noiseless labels `y = beta_star[index]`.
    pub fn from_indices(indices: &[usize], beta_star: &[f64]) -> Result<Self> {
        let dim = beta_star.len();
        let samples = indices
            .iter()
            .map(|&index| Sample { index, y: beta_star.get(index).copied().unwrap_or(f64::NAN) })
            .collect();
        Self::new(samples, dim)
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of samples landing on each basis vector.
    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.dim];
        for s in &self.samples {
            counts[s.index] += 1;
        }
        counts
    }

    /// `n x dim` design matrix with one-hot rows.
    pub fn design_matrix(&self) -> DMatrix<f64> {
        let mut x = DMatrix::zeros(self.len(), self.dim);
        for (row, s) in self.samples.iter().enumerate() {
            x[(row, s.index)] = 1.0;
        }
        x
    }
}

/// Diagonal of `X^T X / n`. One-hot inputs make the off-diagonal zero.
pub fn empirical_covariance(dataset: &Dataset) -> Result<Vec<f64>> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = dataset.len() as f64;
    Ok(dataset.counts().into_iter().map(|c| c as f64 / n).collect())
}

/// Builds the eigen-coordinate problem for `dataset`, starting from
/// `beta = 0`.
///
/// Coordinates never sampled are dropped; the rest are sorted by train
/// curvature (descending, ties to the lower coordinate). The returned basis
/// records the permutation and the dropped coordinates.
pub fn build_problem(
    dataset: &Dataset,
    beta_star: &[f64],
    lambda: &[f64],
) -> Result<(DiagonalProblem, ResidualState)> {
    let dim = dataset.dim();
    for v in [beta_star, lambda] {
        if v.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
        }
    }
    for (i, s) in dataset.samples().iter().enumerate() {
        let expected = beta_star[s.index];
        if (s.y - expected).abs() > 1e-12 * expected.abs().max(1.0) {
            return Err(Error::InconsistentLabel { sample: i, label: s.y, expected });
        }
    }
    let cov = empirical_covariance(dataset)?;

    let mut kept: Vec<usize> = (0..dim).filter(|&j| cov[j] > 0.0).collect();
    if kept.is_empty() {
        return Err(Error::ZeroCovariance);
    }
    // stable sort keeps lower coordinates first among equal curvatures
    kept.sort_by(|&a, &b| cov[b].total_cmp(&cov[a]));

    let pick = |v: &[f64]| kept.iter().map(|&j| v[j]).collect::<Vec<_>>();
    let mut vectors = DMatrix::zeros(dim, kept.len());
    for (col, &j) in kept.iter().enumerate() {
        vectors[(j, col)] = 1.0;
    }
    let dropped = (0..dim)
        .filter(|&j| cov[j] == 0.0)
        .map(|j| {
            let mut direction = vec![0.0; dim];
            direction[j] = 1.0;
            DroppedDirection { direction, lambda: lambda[j], residual: -beta_star[j] }
        })
        .collect();

    let ground_truth = pick(beta_star);
    let delta0 = ground_truth.iter().map(|b| -b).collect();
    let problem = DiagonalProblem::new(pick(&cov), pick(lambda), ground_truth)?
        .with_basis(Basis { vectors, dropped })?;
    Ok((problem, ResidualState::initial(delta0)))
}
