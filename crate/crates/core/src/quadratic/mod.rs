//! Diagonal train/population quadratic pairs.
//!
//! Both losses share one orthonormal eigenbasis, so everything is expressed
//! in residual coordinates `delta = U^T (beta - beta_star)`:
//!
//! ```text
//!   train(delta)      = sum_i gamma_i  * delta_i^2
//!   population(delta) = sum_i lambda_i * delta_i^2
//! ```
//!
//! `gamma` is kept sorted non-increasing and strictly positive; directions
//! outside the image of the sample covariance are removed at construction
//! and recorded as [`DroppedDirection`]s.

mod dataset;
mod joint;

pub use dataset::{build_problem, empirical_covariance, Dataset, Sample};
pub use joint::from_covariances;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Error, Result};

/// Maximum tolerated deviation of `U^T U` from the identity.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// Which part of an optimizer run a residual snapshot belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Phase {
    Init,
    Gd,
    Gf,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Init => "INIT",
            Phase::Gd => "GD",
            Phase::Gf => "GF",
        }
    }
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Residual in eigen-coordinates at a point in an optimizer run.
///
/// `time` is continuous time for [`Phase::Gf`] and the step count for
/// [`Phase::Gd`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualState {
    pub delta: Vec<f64>,
    pub time: f64,
    pub phase: Phase,
}

impl ResidualState {
    pub fn new(delta: Vec<f64>, time: f64, phase: Phase) -> Self {
        Self { delta, time, phase }
    }

    pub fn initial(delta: Vec<f64>) -> Self {
        Self::new(delta, 0.0, Phase::Init)
    }

    pub fn dim(&self) -> usize {
        self.delta.len()
    }
}

/// A direction removed from the problem because the sample covariance has
/// no curvature along it. The residual along it never moves under either
/// optimizer, so it contributes a constant to the population loss.
#[derive(Debug, Clone, PartialEq)]
pub struct DroppedDirection {
    /// Unit vector in parameter coordinates.
    pub direction: Vec<f64>,
    /// Population curvature along `direction`.
    pub lambda: f64,
    /// Frozen residual component `<direction, beta_0 - beta_star>`.
    pub residual: f64,
}

impl DroppedDirection {
    /// Index of the parameter coordinate when `direction` is a standard
    /// basis vector.
    pub fn coordinate(&self) -> Option<usize> {
        standard_basis_index(&self.direction)
    }

    pub fn population_loss(&self) -> f64 {
        self.lambda * self.residual * self.residual
    }
}

/// Map from eigen-coordinates back to parameter coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    /// `ambient x d`, orthonormal columns; column `i` is eigen-coordinate `i`.
    pub vectors: DMatrix<f64>,
    pub dropped: Vec<DroppedDirection>,
}

impl Basis {
    pub fn ambient_dim(&self) -> usize {
        self.vectors.nrows()
    }

    /// Parameter coordinate carried by each eigen-coordinate, when every
    /// column is a standard basis vector.
    pub fn coordinates(&self) -> Option<Vec<usize>> {
        self.vectors
            .column_iter()
            .map(|c| standard_basis_index(c.as_slice()))
            .collect()
    }

    pub fn dropped_coordinates(&self) -> Vec<usize> {
        self.dropped.iter().filter_map(DroppedDirection::coordinate).collect()
    }

    /// `U delta` in parameter coordinates, including the frozen dropped
    /// components.
    pub fn embed(&self, delta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ambient_dim()];
        for (j, &dj) in delta.iter().enumerate() {
            for (o, &u) in out.iter_mut().zip(self.vectors.column(j).iter()) {
                *o += u * dj;
            }
        }
        for d in &self.dropped {
            for (o, &u) in out.iter_mut().zip(&d.direction) {
                *o += u * d.residual;
            }
        }
        out
    }
}

fn standard_basis_index(v: &[f64]) -> Option<usize> {
    let mut found = None;
    for (i, &x) in v.iter().enumerate() {
        if x == 1.0 {
            if found.is_some() {
                return None;
            }
            found = Some(i);
        } else if x != 0.0 {
            return None;
        }
    }
    found
}

/// Train/population quadratic pair in a shared eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalProblem {
    gamma: Vec<f64>,
    lambda: Vec<f64>,
    ground_truth: Vec<f64>,
    basis: Option<Basis>,
}

impl DiagonalProblem {
    /// Validates ordering and positivity of `gamma`, non-negativity of
    /// `lambda`, and matching lengths.
    pub fn new(gamma: Vec<f64>, lambda: Vec<f64>, ground_truth: Vec<f64>) -> Result<Self> {
        let d = gamma.len();
        if d == 0 {
            return Err(Error::EmptyProblem);
        }
        for v in [&lambda, &ground_truth] {
            if v.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: v.len() });
            }
        }
        for (i, &g) in gamma.iter().enumerate() {
            check_finite("gamma", g)?;
            if g <= 0.0 {
                return Err(Error::NonPositiveTrainEigenvalue { index: i, value: g });
            }
            if i > 0 && g > gamma[i - 1] {
                return Err(Error::UnsortedEigenvalues { index: i });
            }
        }
        for (i, &l) in lambda.iter().enumerate() {
            check_finite("lambda", l)?;
            if l < 0.0 {
                return Err(Error::NegativePopulationEigenvalue { index: i, value: l });
            }
        }
        for &b in &ground_truth {
            check_finite("ground_truth", b)?;
        }
        Ok(Self { gamma, lambda, ground_truth, basis: None })
    }

    /// Problem with `ground_truth = 0`, for callers that only work with
    /// residuals.
    pub fn from_spectra(gamma: Vec<f64>, lambda: Vec<f64>) -> Result<Self> {
        let d = gamma.len();
        Self::new(gamma, lambda, vec![0.0; d])
    }

    pub fn with_basis(mut self, basis: Basis) -> Result<Self> {
        let d = self.dim();
        if basis.vectors.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: basis.vectors.ncols() });
        }
        let gram = basis.vectors.transpose() * &basis.vectors;
        let deviation = (gram - DMatrix::<f64>::identity(d, d)).amax();
        if deviation.is_nan() || deviation > ORTHONORMAL_TOL {
            return Err(Error::NonOrthonormalBasis { deviation });
        }
        self.basis = Some(basis);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn ground_truth(&self) -> &[f64] {
        &self.ground_truth
    }

    pub fn basis(&self) -> Option<&Basis> {
        self.basis.as_ref()
    }

    /// Largest train eigenvalue.
    pub fn top_gamma(&self) -> f64 {
        self.gamma[0]
    }

    /// Population loss carried by directions removed at construction.
    pub fn dropped_population_loss(&self) -> f64 {
        self.basis
            .as_ref()
            .map_or(0.0, |b| b.dropped.iter().map(DroppedDirection::population_loss).fold(0.0, |a, x| a + x))
    }

    pub fn check_dim(&self, delta: &[f64]) -> Result<()> {
        if delta.len() == self.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.dim(), found: delta.len() })
        }
    }

    pub fn train_loss_of(&self, delta: &[f64]) -> Result<f64> {
        self.check_dim(delta)?;
        Ok(weighted_square_sum(&self.gamma, delta))
    }

    pub fn population_loss_of(&self, delta: &[f64]) -> Result<f64> {
        self.check_dim(delta)?;
        Ok(weighted_square_sum(&self.lambda, delta))
    }
}

pub(crate) fn weighted_square_sum(weights: &[f64], delta: &[f64]) -> f64 {
    weights.iter().zip(delta).fold(0.0, |a, (w, x)| a + w * x * x)
}

/// `sum_i gamma_i delta_i^2`.
pub fn train_loss(state: &ResidualState, problem: &DiagonalProblem) -> Result<f64> {
    problem.train_loss_of(&state.delta)
}

/// `sum_i lambda_i delta_i^2`.
pub fn population_loss(state: &ResidualState, problem: &DiagonalProblem) -> Result<f64> {
    problem.population_loss_of(&state.delta)
}

/// Extremes of the population loss over the train-loss level set
/// `{delta : train(delta) = epsilon}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelSetExtremes {
    pub best: f64,
    pub worst: f64,
    /// 0-based eigen-coordinate attaining `best`.
    pub best_index: usize,
    /// 0-based eigen-coordinate attaining `worst`.
    pub worst_index: usize,
}

/// The level set is an ellipsoid whose extremes of `sum lambda_i delta_i^2`
/// sit on the axes, at `epsilon * lambda_i / gamma_i`. Ties go to the
/// lowest index.
pub fn level_set_extremes(epsilon: f64, problem: &DiagonalProblem) -> Result<LevelSetExtremes> {
    check_finite("epsilon", epsilon)?;
    if epsilon <= 0.0 {
        return Err(Error::NonPositiveEpsilon(epsilon));
    }
    let mut best_index = 0;
    let mut worst_index = 0;
    let ratio = |i: usize| problem.lambda[i] / problem.gamma[i];
    for i in 1..problem.dim() {
        if ratio(i) < ratio(best_index) {
            best_index = i;
        }
        if ratio(i) > ratio(worst_index) {
            worst_index = i;
        }
    }
    Ok(LevelSetExtremes {
        best: epsilon * ratio(best_index),
        worst: epsilon * ratio(worst_index),
        best_index,
        worst_index,
    })
}
