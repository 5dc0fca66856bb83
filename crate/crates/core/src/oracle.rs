//! Brute-force reference computations over `{0,1}^d`.
//!
//! Every function here is a direct transcription of a definition — exhaustive
//! sums over the cube with compensated accumulation, no algorithmic
//! shortcuts — so estimator outputs can be tested against independently
//! computed ground truth. Everything is capped at `d <= 12`.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::dist::{bits_from_index, DistributionTable, KahanSum};
use crate::graph::ConfigTable;
use crate::transform::fill_transform;

/// Hard cap on the dimension of exhaustive oracle computations.
pub const ORACLE_D_MAX: usize = 12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("dimension {d} exceeds the oracle limit {limit}")]
    DimensionTooLarge { d: usize, limit: usize },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("direction has norm {0}, expected a unit vector")]
    NotUnit(f64),

    #[error("matrix is not symmetric (max asymmetry {0})")]
    NotSymmetric(f64),
}

/// Exact first and second moments of the filled vector under a dense pmf.
#[derive(Debug, Clone)]
pub struct ExactMoments {
    /// `E[F(X, q)]`.
    pub mean: Vec<f64>,
    /// Covariance of `F(X, q)`.
    pub cov: DMatrix<f64>,
    /// `E[(F(X, q) - q)(F(X, q) - q)^T]`, full diagonal.
    pub second_moment_centered: DMatrix<f64>,
}

fn check_inputs(
    dist: &DistributionTable,
    reference: &[f64],
    table: &ConfigTable,
) -> Result<(), OracleError> {
    if dist.dim() > ORACLE_D_MAX {
        return Err(OracleError::DimensionTooLarge { d: dist.dim(), limit: ORACLE_D_MAX });
    }
    if dist.dim() != table.dim() {
        return Err(OracleError::DimensionMismatch(dist.dim(), table.dim()));
    }
    if reference.len() != table.len() {
        return Err(OracleError::DimensionMismatch(reference.len(), table.len()));
    }
    Ok(())
}

/// `E_D[F(X, q)]` by exhaustive summation.
pub fn exact_mean_f(
    dist: &DistributionTable,
    reference: &[f64],
    table: &ConfigTable,
) -> Result<Vec<f64>, OracleError> {
    check_inputs(dist, reference, table)?;
    let d = table.dim();
    let mut acc = vec![KahanSum::default(); table.len()];
    let mut x = vec![0u8; d];
    for idx in 0..(1usize << d) {
        let w = dist.prob(idx);
        if w == 0.0 {
            continue;
        }
        bits_from_index(idx, &mut x);
        let fv = fill_transform(&x, reference, table).expect("checked lengths");
        for (a, &v) in acc.iter_mut().zip(fv.values()) {
            a.add(w * v);
        }
    }
    Ok(acc.into_iter().map(|a| a.value()).collect())
}

/// `E_D[(F(X, q) - q)(F(X, q) - q)^T]`, optionally with the diagonal zeroed.
///
/// The difference `F(x, q) - q` is nonzero only on the `d` active
/// coordinates of `x`, so each point contributes at most `d^2` entries.
pub fn exact_second_moment(
    dist: &DistributionTable,
    reference: &[f64],
    table: &ConfigTable,
    zero_diag: bool,
) -> Result<DMatrix<f64>, OracleError> {
    check_inputs(dist, reference, table)?;
    let d = table.dim();
    let m = table.len();
    let mut sum = DMatrix::<f64>::zeros(m, m);
    let mut carry = DMatrix::<f64>::zeros(m, m);
    let mut x = vec![0u8; d];
    let mut actives = Vec::with_capacity(d);
    for idx in 0..(1usize << d) {
        let w = dist.prob(idx);
        if w == 0.0 {
            continue;
        }
        bits_from_index(idx, &mut x);
        table.active_configs(&x, &mut actives);
        for (i, &ka) in actives.iter().enumerate() {
            let ua = x[i] as f64 - reference[ka];
            for (j, &kb) in actives.iter().enumerate() {
                let term = w * ua * (x[j] as f64 - reference[kb]);
                // Kahan step with a paired carry matrix.
                let y = term - carry[(ka, kb)];
                let t = sum[(ka, kb)] + y;
                carry[(ka, kb)] = (t - sum[(ka, kb)]) - y;
                sum[(ka, kb)] = t;
            }
        }
    }
    if zero_diag {
        for k in 0..m {
            sum[(k, k)] = 0.0;
        }
    }
    Ok(sum)
}

/// Mean, covariance, and reference-centered second moment together.
pub fn exact_moments(
    dist: &DistributionTable,
    reference: &[f64],
    table: &ConfigTable,
) -> Result<ExactMoments, OracleError> {
    let mean = exact_mean_f(dist, reference, table)?;
    let second_moment_centered = exact_second_moment(dist, reference, table, false)?;
    // Cov[F] = E[(F - q)(F - q)^T] - (mean - q)(mean - q)^T.
    let m = table.len();
    let mut cov = second_moment_centered.clone();
    for a in 0..m {
        for b in 0..m {
            cov[(a, b)] -= (mean[a] - reference[a]) * (mean[b] - reference[b]);
        }
    }
    Ok(ExactMoments { mean, cov, second_moment_centered })
}

/// `Pr_D[|v . (F(X, q) - q)| >= threshold]` by exhaustive summation.
pub fn exact_tail(
    dist: &DistributionTable,
    direction: &[f64],
    reference: &[f64],
    threshold: f64,
    table: &ConfigTable,
) -> Result<f64, OracleError> {
    check_inputs(dist, reference, table)?;
    if direction.len() != table.len() {
        return Err(OracleError::DimensionMismatch(direction.len(), table.len()));
    }
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(OracleError::NotUnit(norm));
    }
    let d = table.dim();
    let mut mass = KahanSum::default();
    let mut x = vec![0u8; d];
    for idx in 0..(1usize << d) {
        let w = dist.prob(idx);
        if w == 0.0 {
            continue;
        }
        bits_from_index(idx, &mut x);
        let p = crate::transform::sparse_projection(&x, reference, direction, table);
        if p.abs() >= threshold {
            mass.add(w);
        }
    }
    Ok(mass.value())
}

/// Exact conditional probability table of a dense pmf with respect to a
/// configuration table: entry `k = (i, a)` is `Pr[X_i = 1 | Π_k]`.
/// Configurations with zero probability fall back to one half, matching the
/// estimator-side convention for unseen configurations.
pub fn conditional_table(
    dist: &DistributionTable,
    table: &ConfigTable,
) -> Result<Vec<f64>, OracleError> {
    if dist.dim() > ORACLE_D_MAX {
        return Err(OracleError::DimensionTooLarge { d: dist.dim(), limit: ORACLE_D_MAX });
    }
    if dist.dim() != table.dim() {
        return Err(OracleError::DimensionMismatch(dist.dim(), table.dim()));
    }
    let d = table.dim();
    let m = table.len();
    let mut mass = vec![KahanSum::default(); m];
    let mut ones = vec![KahanSum::default(); m];
    let mut x = vec![0u8; d];
    for idx in 0..(1usize << d) {
        let w = dist.prob(idx);
        if w == 0.0 {
            continue;
        }
        bits_from_index(idx, &mut x);
        for i in 0..d {
            let k = table.active_config(&x, i);
            mass[k].add(w);
            if x[i] == 1 {
                ones[k].add(w);
            }
        }
    }
    Ok(mass
        .iter()
        .zip(&ones)
        .map(|(m, o)| if m.value() > 0.0 { (o.value() / m.value()).clamp(0.0, 1.0) } else { 0.5 })
        .collect())
}

fn check_symmetric(matrix: &DMatrix<f64>) -> Result<(), OracleError> {
    let n = matrix.nrows();
    if n != matrix.ncols() {
        return Err(OracleError::DimensionMismatch(n, matrix.ncols()));
    }
    let mut max_abs = 0.0f64;
    let mut asym = 0.0f64;
    for i in 0..n {
        for j in i..n {
            max_abs = max_abs.max(matrix[(i, j)].abs());
            asym = asym.max((matrix[(i, j)] - matrix[(j, i)]).abs());
        }
    }
    if asym > 1e-12 * (1.0 + max_abs) {
        return Err(OracleError::NotSymmetric(asym));
    }
    Ok(())
}

/// Eigenvalue of largest absolute value and an associated unit eigenvector,
/// via dense symmetric eigendecomposition.
pub fn dense_top_eigenpair(matrix: &DMatrix<f64>) -> Result<(f64, Vec<f64>), OracleError> {
    check_symmetric(matrix)?;
    let n = matrix.nrows();
    if n == 0 {
        return Ok((0.0, Vec::new()));
    }
    let eigen = nalgebra::linalg::SymmetricEigen::new(matrix.clone());
    let mut best = 0usize;
    for i in 1..n {
        if eigen.eigenvalues[i].abs() > eigen.eigenvalues[best].abs() {
            best = i;
        }
    }
    let mut v: Vec<f64> = eigen.eigenvectors.column(best).iter().copied().collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    Ok((eigen.eigenvalues[best], v))
}

/// Spectral norm (largest absolute eigenvalue) of a symmetric matrix through
/// dense decomposition; the reference for iterative solvers.
pub fn spectral_norm_dense(matrix: &DMatrix<f64>) -> Result<f64, OracleError> {
    let (lambda, _) = dense_top_eigenpair(matrix)?;
    Ok(lambda.abs())
}
