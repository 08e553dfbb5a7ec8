use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{Basis, DiagonalProblem, DroppedDirection, ResidualState};
use crate::error::{Error, Result};

/// Max-norm bound on `Sigma * Sigma_hat - Sigma_hat * Sigma`.
pub const COMMUTATOR_TOL: f64 = 1e-8;

fn check_symmetric(name: &'static str, m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() || m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NotSymmetric { name });
    }
    let scale = m.amax().max(1.0);
    if (m - m.transpose()).amax() > 1e-12 * scale {
        return Err(Error::NotSymmetric { name });
    }
    Ok(())
}

/// Sorted (descending) eigenpairs of a symmetric matrix, eigenvectors as
/// columns with a deterministic sign.
fn sorted_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = eig.eigenvectors.select_columns(&order);
    for mut col in vectors.column_iter_mut() {
        normalize_sign(col.as_mut_slice());
    }
    (values, vectors)
}

fn normalize_sign(v: &mut [f64]) {
    let pivot = v.iter().copied().fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
    if pivot < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Jointly diagonalizes a commuting pair of symmetric covariances and
/// builds the eigen-coordinate problem starting from `beta = 0`.
///
/// Eigenspaces of `train` with repeated eigenvalues are rotated so that
/// `population` is diagonal inside them too. Directions where `train` has
/// no curvature are dropped.
pub fn from_covariances(
    train: &DMatrix<f64>,
    population: &DMatrix<f64>,
    beta_star: &[f64],
) -> Result<(DiagonalProblem, ResidualState)> {
    check_symmetric("train", train)?;
    check_symmetric("population", population)?;
    let n = train.nrows();
    if population.nrows() != n {
        return Err(Error::DimensionMismatch { expected: n, found: population.nrows() });
    }
    if beta_star.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: beta_star.len() });
    }
    let residual = (population * train - train * population).amax();
    if residual > COMMUTATOR_TOL {
        return Err(Error::NotCommuting { residual });
    }

    let (values, mut vectors) = sorted_eigen(train);
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let cluster_tol = 1e-10 * scale;

    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (values[start] - values[end]).abs() <= cluster_tol {
            end += 1;
        }
        if end - start > 1 {
            let block = vectors.columns(start, end - start).into_owned();
            let projected = block.transpose() * population * &block;
            let projected = (&projected + projected.transpose()) * 0.5;
            let (_, rotation) = sorted_eigen(&projected);
            let mut rotated = block * rotation;
            for mut col in rotated.column_iter_mut() {
                normalize_sign(col.as_mut_slice());
            }
            vectors.columns_mut(start, end - start).copy_from(&rotated);
        }
        start = end;
    }

    let beta = DVector::from_column_slice(beta_star);
    let rayleigh = |m: &DMatrix<f64>, v: &DVector<f64>| v.dot(&(m * v));
    let zero_tol = 1e-12 * scale;

    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for j in 0..n {
        let v = vectors.column(j).into_owned();
        let gamma = rayleigh(train, &v);
        let mut lambda = rayleigh(population, &v);
        if lambda < 0.0 && lambda > -zero_tol {
            lambda = 0.0;
        }
        let truth = v.dot(&beta);
        if gamma > zero_tol {
            kept.push((gamma, lambda, truth, v));
        } else {
            dropped.push(DroppedDirection { direction: v.as_slice().to_vec(), lambda, residual: -truth });
        }
    }
    if kept.is_empty() {
        return Err(Error::ZeroCovariance);
    }
    kept.sort_by(|a, b| b.0.total_cmp(&a.0));

    let columns: Vec<_> = kept.iter().map(|k| k.3.clone()).collect();
    let basis = Basis { vectors: DMatrix::from_columns(&columns), dropped };
    let gamma = kept.iter().map(|k| k.0).collect();
    let lambda = kept.iter().map(|k| k.1).collect();
    let truth: Vec<f64> = kept.iter().map(|k| k.2).collect();
    let delta0 = truth.iter().map(|t| -t).collect();
    let problem = DiagonalProblem::new(gamma, lambda, truth)?.with_basis(basis)?;
    Ok((problem, ResidualState::initial(delta0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rotation(theta: f64) -> DMatrix<f64> {
        let (s, c) = theta.sin_cos();
        DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
    }

    #[test]
    fn diagonal_inputs_recover_spectra() {
        let train = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0 / 3.0, 2.0 / 3.0]));
        let pop = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 0.5]));
        let (p, s) = from_covariances(&train, &pop, &[3.0, 7.0]).unwrap();
        assert!((p.gamma()[0] - 2.0 / 3.0).abs() < 1e-14);
        assert!((p.gamma()[1] - 1.0 / 3.0).abs() < 1e-14);
        assert!((s.delta[0] + 7.0).abs() < 1e-12);
        assert!((s.delta[1] + 3.0).abs() < 1e-12);
    }

    #[test]
    fn rotated_pair_is_jointly_diagonalized() {
        let u = rotation(0.3);
        let train = &u * DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.5])) * u.transpose();
        let pop = &u * DMatrix::from_diagonal(&DVector::from_vec(vec![0.1, 0.9])) * u.transpose();
        let (p, s) = from_covariances(&train, &pop, &[1.0, -2.0]).unwrap();
        assert!((p.gamma()[0] - 2.0).abs() < 1e-12);
        assert!((p.lambda()[0] - 0.1).abs() < 1e-12);
        assert!((p.lambda()[1] - 0.9).abs() < 1e-12);
        // loss in parameter space equals loss in eigen-coordinates
        let b = DVector::from_vec(vec![-1.0, 2.0]);
        let direct = b.dot(&(&train * &b));
        assert!((p.train_loss_of(&s.delta).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn repeated_train_eigenvalue_splits_by_population() {
        let u = rotation(0.7);
        let train = DMatrix::identity(2, 2);
        let pop = &u * DMatrix::from_diagonal(&DVector::from_vec(vec![0.2, 0.8])) * u.transpose();
        let (p, _) = from_covariances(&train, &pop, &[0.0, 0.0]).unwrap();
        let mut l = p.lambda().to_vec();
        l.sort_by(f64::total_cmp);
        assert!((l[0] - 0.2).abs() < 1e-12 && (l[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_train_drops_kernel() {
        let train = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]);
        let pop = DMatrix::identity(2, 2);
        let (p, s) = from_covariances(&train, &pop, &[1.0, 3.0]).unwrap();
        assert_eq!(p.dim(), 1);
        assert!((p.gamma()[0] - 1.0).abs() < 1e-12);
        let basis = p.basis().unwrap();
        assert_eq!(basis.dropped.len(), 1);
        // (1,3) has component -2/sqrt(2) along the kernel (1,-1)/sqrt(2) up to sign
        assert!((p.dropped_population_loss() - 2.0).abs() < 1e-12);
        assert!((s.delta[0].abs() - 4.0 / 2f64.sqrt()).abs() < 1e-12);
        let beta_minus_truth = basis.embed(&s.delta);
        assert!((beta_minus_truth[0] + 1.0).abs() < 1e-12);
        assert!((beta_minus_truth[1] + 3.0).abs() < 1e-12);
    }

    #[test]
    fn non_commuting_pair_is_rejected() {
        let train = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let pop = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.0]);
        assert!(matches!(from_covariances(&train, &pop, &[0.0, 0.0]), Err(Error::NotCommuting { .. })));
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let train = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        let pop = DMatrix::identity(2, 2);
        assert_eq!(
            from_covariances(&train, &pop, &[0.0, 0.0]),
            Err(Error::NotSymmetric { name: "train" })
        );
    }
}
