//! Top eigenpair (largest absolute eigenvalue) of the symmetric moment
//! matrix.
//!
//! Small matrices go through the dense symmetric eigendecomposition; large
//! ones use power iteration on the squared matrix, which is positive
//! semidefinite and so converges regardless of the sign of the dominant
//! eigenvalue. The converged vector is then split into the two signed
//! eigenspaces to recover the signed eigenvalue.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::EngineError;
use crate::oracle;

/// Below this size the dense decomposition is used directly.
pub const DENSE_EIGEN_CUTOFF: usize = 512;

fn random_unit(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
        let norm = v.norm();
        if norm > 1e-6 {
            return v / norm;
        }
    }
}

/// Power iteration for the eigenvalue of largest magnitude of a symmetric
/// matrix. Deterministic for a given seed. Errors with `NoConvergence` when
/// the iteration budget runs out before the squared Rayleigh quotient
/// stagnates to within `tol` (relative).
pub fn power_iteration(
    matrix: &DMatrix<f64>,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<(f64, Vec<f64>), EngineError> {
    let n = matrix.nrows();
    assert_eq!(n, matrix.ncols(), "matrix must be square");
    if n == 0 {
        return Ok((0.0, Vec::new()));
    }
    let scale = matrix.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    if scale == 0.0 {
        let mut e = vec![0.0; n];
        e[0] = 1.0;
        return Ok((0.0, e));
    }

    let mut spent = 0usize;
    for _restart in 0..3 {
        let mut x = random_unit(n, &mut rng);
        let mut prev_rho = f64::NEG_INFINITY;
        while spent < max_iter {
            spent += 1;
            let y = matrix * &x;
            let z = matrix * &y;
            // Rayleigh quotient of the squared matrix: ||M x||^2.
            let rho = y.norm_squared();
            let nz = z.norm();
            if nz == 0.0 {
                // x lies in the kernel of M^2; try a fresh start.
                break;
            }
            let converged = prev_rho.is_finite()
                && (rho - prev_rho).abs() <= tol * rho.max(f64::MIN_POSITIVE);
            x = z / nz;
            prev_rho = rho;
            if converged {
                return Ok(split_signed_eigenpair(matrix, &x));
            }
        }
        if spent >= max_iter {
            break;
        }
    }
    Err(EngineError::NoConvergence { iterations: spent })
}

/// Given an (approximate) unit eigenvector of `M^2`, recovers the signed
/// eigenpair of `M` by projecting onto the two signed eigenspaces.
fn split_signed_eigenpair(matrix: &DMatrix<f64>, x: &DVector<f64>) -> (f64, Vec<f64>) {
    let w = matrix * x;
    let lam_abs = w.norm();
    if lam_abs == 0.0 {
        return (0.0, x.iter().copied().collect());
    }
    let plus = x + &w / lam_abs;
    let minus = x - &w / lam_abs;
    let candidate = if plus.norm() >= minus.norm() { plus } else { minus };
    let v = &candidate / candidate.norm();
    let lambda = v.dot(&(matrix * &v));
    (lambda, v.iter().copied().collect())
}

/// Eigenvalue of largest magnitude with its eigenvector: dense
/// decomposition up to [`DENSE_EIGEN_CUTOFF`], power iteration above, with
/// a dense fallback when the iteration fails to converge.
pub fn top_eigenpair(
    matrix: &DMatrix<f64>,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<(f64, Vec<f64>), EngineError> {
    let dense = |matrix: &DMatrix<f64>| {
        oracle::dense_top_eigenpair(matrix)
            .map_err(|e| EngineError::InvalidConfig(format!("eigen input: {e}")))
    };
    if matrix.nrows() <= DENSE_EIGEN_CUTOFF {
        return dense(matrix);
    }
    match power_iteration(matrix, tol, max_iter, seed) {
        Ok(pair) => Ok(pair),
        Err(EngineError::NoConvergence { .. }) => dense(matrix),
        Err(e) => Err(e),
    }
}
