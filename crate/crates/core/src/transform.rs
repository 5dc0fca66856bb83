//! The conditional-mean-filling map from samples to `R^m`.
//!
//! A sample `x` only reveals the conditional behaviour of each node under
//! the one parental configuration it realizes. To turn `x` into a vector
//! over *all* configurations, the active coordinate of each node receives
//! the observed bit and every other coordinate is filled with the reference
//! table value. Estimating the mean of the filled vector then estimates the
//! whole conditional table at once.

use thiserror::Error;

use crate::graph::ConfigTable;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error("{what} has length {got}, expected {expected}")]
    LengthMismatch { what: &'static str, got: usize, expected: usize },

    #[error("coordinate {index} holds {value}, which is not a bit")]
    Inconsistent { index: usize, value: f64 },

    #[error("direction has norm {0}, expected a unit vector")]
    NotUnit(f64),
}

/// A filled vector in `R^m`: one observed bit per node, reference values
/// everywhere else.
#[derive(Debug, Clone, PartialEq)]
pub struct FilledVector {
    values: Vec<f64>,
}

impl FilledVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Test-side constructor for hand-built vectors.
    pub fn from_values(values: Vec<f64>) -> Self {
        Self { values }
    }
}

fn check_lengths(x: &[u8], reference: &[f64], table: &ConfigTable) -> Result<(), TransformError> {
    if x.len() != table.dim() {
        return Err(TransformError::LengthMismatch { what: "sample", got: x.len(), expected: table.dim() });
    }
    if reference.len() != table.len() {
        return Err(TransformError::LengthMismatch {
            what: "reference table",
            got: reference.len(),
            expected: table.len(),
        });
    }
    Ok(())
}

/// Dense filling map: coordinate `(i, a)` equals `x_i` when `x` realizes
/// configuration `(i, a)` and the reference entry otherwise.
pub fn fill_transform(
    x: &[u8],
    reference: &[f64],
    table: &ConfigTable,
) -> Result<FilledVector, TransformError> {
    check_lengths(x, reference, table)?;
    let mut values = reference.to_vec();
    for i in 0..table.dim() {
        values[table.active_config(x, i)] = x[i] as f64;
    }
    Ok(FilledVector { values })
}

/// Inverse of the filling map: decodes the sample back out of a filled
/// vector, walking nodes in index order and using the already-decoded bits
/// to locate each node's active coordinate. That coordinate must hold an
/// exact bit.
pub fn recover_sample(fv: &FilledVector, table: &ConfigTable) -> Result<Vec<u8>, TransformError> {
    if fv.values.len() != table.len() {
        return Err(TransformError::LengthMismatch {
            what: "filled vector",
            got: fv.values.len(),
            expected: table.len(),
        });
    }
    let mut x = vec![0u8; table.dim()];
    for i in 0..table.dim() {
        let k = table.active_config(&x, i);
        let value = fv.values[k];
        if value == 0.0 {
            x[i] = 0;
        } else if value == 1.0 {
            x[i] = 1;
        } else {
            return Err(TransformError::Inconsistent { index: k, value });
        }
    }
    Ok(x)
}

/// `direction . (fill(x) - reference)`, computed sparsely: only the `d`
/// active coordinates differ from the reference.
pub fn projection(
    x: &[u8],
    reference: &[f64],
    direction: &[f64],
    table: &ConfigTable,
) -> Result<f64, TransformError> {
    check_lengths(x, reference, table)?;
    if direction.len() != table.len() {
        return Err(TransformError::LengthMismatch {
            what: "direction",
            got: direction.len(),
            expected: table.len(),
        });
    }
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(TransformError::NotUnit(norm));
    }
    Ok(sparse_projection(x, reference, direction, table))
}

/// Unchecked sparse projection for hot paths; callers guarantee lengths and
/// a unit direction.
pub(crate) fn sparse_projection(
    x: &[u8],
    reference: &[f64],
    direction: &[f64],
    table: &ConfigTable,
) -> f64 {
    let mut acc = 0.0;
    for i in 0..table.dim() {
        let k = table.active_config(x, i);
        acc += direction[k] * (x[i] as f64 - reference[k]);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::bits_from_index;
    use crate::gen::random_net;
    use crate::graph::Dag;

    fn random_reference(m: usize, seed: u64) -> Vec<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..m).map(|_| rng.random()).collect()
    }

    #[test]
    fn chain_fill_example() {
        let table = ConfigTable::new(&Dag::chain(2).unwrap()).unwrap();
        let fv = fill_transform(&[1, 0], &[0.5, 0.2, 0.8], &table).unwrap();
        assert_eq!(fv.values(), &[1.0, 0.2, 0.0]);
    }

    #[test]
    fn empty_graph_fill_is_identity() {
        let table = ConfigTable::new(&Dag::empty(4).unwrap()).unwrap();
        let reference = random_reference(4, 5);
        let mut x = vec![0u8; 4];
        for idx in 0..16 {
            bits_from_index(idx, &mut x);
            let fv = fill_transform(&x, &reference, &table).unwrap();
            let expected: Vec<f64> = x.iter().map(|&b| b as f64).collect();
            assert_eq!(fv.values(), expected.as_slice());
        }
    }

    #[test]
    fn recover_roundtrip_exhaustive() {
        for seed in 0..10u64 {
            let d = 2 + (seed % 7) as usize;
            let net = random_net(d, 3, 0.05, seed);
            let table = net.config_table();
            let reference = random_reference(table.len(), seed + 77);
            let mut x = vec![0u8; d];
            for idx in 0..(1usize << d) {
                bits_from_index(idx, &mut x);
                let fv = fill_transform(&x, &reference, table).unwrap();
                assert_eq!(recover_sample(&fv, table).unwrap(), x);
            }
        }
    }

    #[test]
    fn recover_rejects_non_bit() {
        let table = ConfigTable::new(&Dag::chain(2).unwrap()).unwrap();
        let fv = FilledVector::from_values(vec![0.37, 0.2, 0.8]);
        assert_eq!(
            recover_sample(&fv, &table).unwrap_err(),
            TransformError::Inconsistent { index: 0, value: 0.37 }
        );
    }

    #[test]
    fn projection_zero_when_bits_match_reference() {
        let table = ConfigTable::new(&Dag::chain(2).unwrap()).unwrap();
        // x = (1, 0); active coordinates are 0 and 2, and the reference
        // already holds those bits there.
        let reference = vec![1.0, 0.4, 0.0];
        let direction = vec![0.6, 0.64, 0.48];
        let p = projection(&[1, 0], &reference, &direction, &table).unwrap();
        assert_eq!(p, 0.0);
    }

    #[test]
    fn projection_on_roots_is_coordinate_gap() {
        let table = ConfigTable::new(&Dag::empty(3).unwrap()).unwrap();
        let reference = vec![0.3, 0.5, 0.9];
        let mut direction = vec![0.0, 0.0, 0.0];
        direction[1] = 1.0;
        let p = projection(&[1, 1, 0], &reference, &direction, &table).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
    }

    #[test]
    fn projection_bounded_by_sqrt_d() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for seed in 0..8u64 {
            let d = 2 + (seed % 7) as usize;
            let net = random_net(d, 3, 0.05, seed);
            let table = net.config_table();
            let m = table.len();
            let mut direction: Vec<f64> = (0..m).map(|_| rng.random::<f64>() - 0.5).collect();
            let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
            direction.iter_mut().for_each(|v| *v /= norm);
            let reference = random_reference(m, seed + 13);
            let mut x = vec![0u8; d];
            for idx in 0..(1usize << d) {
                bits_from_index(idx, &mut x);
                let p = projection(&x, &reference, &direction, table).unwrap();
                assert!(p.abs() <= (d as f64).sqrt() + 1e-12);
            }
        }
    }

    #[test]
    fn projection_rejects_non_unit() {
        let table = ConfigTable::new(&Dag::empty(2).unwrap()).unwrap();
        let err = projection(&[0, 1], &[0.5, 0.5], &[1.0, 1.0], &table).unwrap_err();
        assert!(matches!(err, TransformError::NotUnit(_)));
    }

    #[test]
    fn length_mismatches() {
        let table = ConfigTable::new(&Dag::chain(2).unwrap()).unwrap();
        assert!(matches!(
            fill_transform(&[1], &[0.5, 0.5, 0.5], &table),
            Err(TransformError::LengthMismatch { what: "sample", .. })
        ));
        assert!(matches!(
            fill_transform(&[1, 0], &[0.5], &table),
            Err(TransformError::LengthMismatch { what: "reference table", .. })
        ));
    }

    #[test]
    fn mean_of_fill_at_true_table_is_the_table() {
        // Exhaustive expectation of the filled vector at the true table.
        for seed in 0..6u64 {
            let d = 2 + (seed % 5) as usize;
            let net = random_net(d, 2, 0.05, seed);
            let table = net.config_table();
            let mut mean = vec![0.0; table.len()];
            let mut x = vec![0u8; d];
            for idx in 0..(1usize << d) {
                bits_from_index(idx, &mut x);
                let w = net.pmf(&x);
                let fv = fill_transform(&x, net.cpt(), table).unwrap();
                for (m, v) in mean.iter_mut().zip(fv.values()) {
                    *m += w * v;
                }
            }
            for (k, (&got, &want)) in mean.iter().zip(net.cpt()).enumerate() {
                assert!((got - want).abs() < 1e-10, "seed {seed} coord {k}: {got} vs {want}");
            }
        }
    }
}
