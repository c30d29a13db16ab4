//! Euclidean embeddability through the doubly-centered squared-distance form.
//!
//! A finite metric space embeds isometrically in `R^k` iff
//! `B = -1/2 J D^2 J` (with `J = I - 11^T / n`) is positive semidefinite of
//! rank at most `k`; the top eigenpairs of `B` then give coordinates.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::metric::FiniteMetricSpace;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbedResult {
    pub success: bool,
    /// One row per point, `dimension` columns; present on success.
    pub coordinates: Option<Vec<Vec<f64>>>,
    /// Numerical rank of the form (eigenvalues above the cutoff).
    pub dimension: usize,
    pub requested: usize,
    /// Largest `| |x_i - x_j| - d(i, j) |` of the embedding from the
    /// nonnegative part of the spectrum, truncated to `requested` dimensions.
    pub residual: f64,
    /// Eigenvalues of the form, descending.
    pub eigenvalues: Vec<f64>,
    pub tolerance: f64,
}

/// Attempts an isometric embedding into `R^k` with `k <= max_dim`.
///
/// Eigenvalues `>= -tol * max|lambda|` count as nonnegative and those
/// `> tol * max|lambda|` count towards the rank. Success also requires the
/// distance residual to be within `tol` (relative to the largest distance, at least 1).
pub fn flatness_embed<S: Scalar>(space: &FiniteMetricSpace<S>, max_dim: usize, tol: f64) -> EmbedResult {
    let n = space.len();
    let d = |i: usize, j: usize| space.dist(i, j).to_f64();
    let sq = DMatrix::from_fn(n, n, |i, j| d(i, j).powi(2));
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n.max(1) as f64;
    let form = DMatrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand));

    let eigen = SymmetricEigen::new(form);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eigen.eigenvalues[k]).collect();

    let scale = eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let cutoff = tol * scale;
    let psd = eigenvalues.last().is_none_or(|&l| l >= -cutoff);
    let rank = eigenvalues.iter().filter(|&&l| l > cutoff).count();

    let used = rank.min(max_dim);
    let coordinates: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            order[..used]
                .iter()
                .map(|&k| eigen.eigenvalues[k].sqrt() * eigen.eigenvectors[(i, k)])
                .collect()
        })
        .collect();

    let mut residual = 0.0f64;
    let mut max_dist = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let e: f64 = coordinates[i]
                .iter()
                .zip(&coordinates[j])
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            residual = residual.max((e - d(i, j)).abs());
            max_dist = max_dist.max(d(i, j));
        }
    }

    let success = psd && rank <= max_dim && residual <= tol * max_dist.max(1.0);
    EmbedResult {
        success,
        coordinates: success.then_some(coordinates),
        dimension: rank,
        requested: max_dim,
        residual,
        eigenvalues,
        tolerance: tol,
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::model::{gen_cloud, gen_concyclic, Norm, PointCloud};
    use crate::DEFAULT_TOLERANCE as TOL;

    #[test]
    fn triangles_embed_in_the_plane() {
        for sides in [[3.0, 4.0, 5.0], [1.0, 1.0, 1.0], [1.0, 1.0, 2.0], [2.0, 2.5, 4.0]] {
            let space = FiniteMetricSpace::from_fn(vec!["a".into(), "b".into(), "c".into()], |i, j| {
                sides[i + j - 1]
            })
            .unwrap();
            let r = flatness_embed(&space, 2, TOL);
            assert!(r.success, "{sides:?}: {r:?}");
            assert!(r.residual < 1e-9);
        }
    }

    #[test]
    fn concyclic_quadruple_is_planar() {
        let g = gen_concyclic(&[0.1, 1.0, 2.5, 4.0], 1.3).unwrap();
        let r = flatness_embed(&g.space, 2, TOL);
        assert!(r.success);
        assert_eq!(r.dimension, 2);
        assert!(r.residual < 1e-9);
    }

    #[test]
    fn l1_square_is_not_flat() {
        let square = PointCloud::new(
            2,
            Norm::p(1.0).unwrap(),
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]],
        )
        .unwrap()
        .metric_space();
        for k in 1..=3 {
            let r = flatness_embed(&square, k, TOL);
            assert!(!r.success);
            assert!(r.coordinates.is_none());
            assert!(*r.eigenvalues.last().unwrap() < -0.1);
        }
    }

    #[test]
    fn euclidean_clouds_recover_their_dimension() {
        for dim in [1, 2, 3, 5] {
            let g = gen_cloud(12, dim, Norm::Euclidean, dim as u64).unwrap();
            let r = flatness_embed(&g.space, dim, TOL);
            assert!(r.success, "dim {dim}: {r:?}");
            assert_eq!(r.dimension, dim);
            if dim > 1 {
                assert!(!flatness_embed(&g.space, dim - 1, TOL).success);
            }
        }
    }

    #[test]
    fn degenerate_inputs() {
        let one = FiniteMetricSpace::<f64>::from_fn(vec!["a".into()], |_, _| 0.0).unwrap();
        let r = flatness_embed(&one, 1, TOL);
        assert!(r.success);
        assert_eq!(r.dimension, 0);
        let g = gen_concyclic(&[0.0, PI / 2.0, PI], 1.0).unwrap();
        assert!(!flatness_embed(&g.space, 1, TOL).success);
    }
}
