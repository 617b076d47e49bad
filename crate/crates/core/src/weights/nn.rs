//! Nearest-neighbour (Voronoi cell) weighting.

use nalgebra::DMatrix;

use super::{check_same_dim, WeightVector};
use crate::error::{Error, Result};

/// Count the target samples falling in each source sample's Voronoi cell
/// and add one. Equidistant source points resolve to the lowest index.
pub fn estimate_nn(source: &DMatrix<f64>, target: &DMatrix<f64>) -> Result<WeightVector> {
    if source.nrows() == 0 {
        return Err(Error::Argument("nearest-neighbour weighting needs source samples".into()));
    }
    if target.nrows() > 0 {
        check_same_dim(source, target)?;
    }
    let mut counts = vec![1.0; source.nrows()];
    for z in target.row_iter() {
        let mut best = 0;
        let mut best_d2 = f64::INFINITY;
        for (i, x) in source.row_iter().enumerate() {
            let d2: f64 = x.iter().zip(z.iter()).map(|(a, b)| (a - b).powi(2)).sum();
            if d2 < best_d2 {
                best_d2 = d2;
                best = i;
            }
        }
        counts[best] += 1.0;
    }
    WeightVector::new(counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(v.len(), 1, v)
    }

    #[test]
    fn hand_counted_cells() {
        let w = estimate_nn(&col(&[0.0, 10.0]), &col(&[1.0, 2.0, 9.0])).unwrap();
        assert_eq!(w.values(), &[3.0, 2.0]);
    }

    #[test]
    fn empty_target_gives_ones() {
        let w = estimate_nn(&col(&[0.0, 10.0, 3.0]), &DMatrix::zeros(0, 1)).unwrap();
        assert_eq!(w.values(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let w = estimate_nn(&col(&[-1.0, 1.0]), &col(&[0.0])).unwrap();
        assert_eq!(w.values(), &[2.0, 1.0]);
    }
}
