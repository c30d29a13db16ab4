//! Example spaces and normed-plane geometry.

mod flatness;
mod norm;

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::metric::FiniteMetricSpace;
use crate::scalar::{Exact, Scalar};

pub use flatness::{flatness_embed, EmbedResult};
pub use norm::{Norm, NormedPlane, PointCloud, PolygonNorm, Segment};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("p must be at least 1, got {0}")]
    InvalidP(f64),
    #[error("invalid polygon: {0}")]
    BadPolygon(&'static str),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("coordinates must be finite")]
    NonFinite,
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("angles must be strictly increasing in [0, 2pi)")]
    BadAngles,
    #[error("radius must be positive and finite")]
    BadRadius,
    #[error("inversion requires the Euclidean norm")]
    NotEuclidean,
    #[error("point {0} coincides with the inversion center")]
    PointAtCenter(usize),
    #[error("grid needs at least 3 points, got {0}")]
    GridTooSmall(usize),
}

/// A generated space together with the coordinates it came from.
#[derive(Debug, Clone)]
pub struct Generated {
    pub space: FiniteMetricSpace<f64>,
    pub cloud: PointCloud,
}

/// `{x, y, m1, m2}` with `|xy| = 2` and every other distance 1.
pub fn gen_paper_four_point() -> FiniteMetricSpace<Exact> {
    let labels = ["x", "y", "m1", "m2"].map(String::from).to_vec();
    FiniteMetricSpace::from_fn(labels, |i, j| {
        if (i, j) == (0, 1) {
            Exact::from_ratio(2, 1)
        } else {
            Exact::from_ratio(1, 1)
        }
    })
    .expect("static example")
    .with_name("paper4")
}

/// Points on a circle at the given angles, with chord-length distances
/// `2 r sin(|a - b| / 2)`.
pub fn gen_concyclic(angles: &[f64], radius: f64) -> Result<Generated, ModelError> {
    if angles.len() < 3 {
        return Err(ModelError::TooFewPoints {
            needed: 3,
            got: angles.len(),
        });
    }
    let in_range = angles.iter().all(|a| (0.0..TAU).contains(a));
    if !in_range || angles.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ModelError::BadAngles);
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(ModelError::BadRadius);
    }
    let points = angles
        .iter()
        .map(|a| vec![radius * a.cos(), radius * a.sin()])
        .collect();
    let cloud = PointCloud::new(2, Norm::Euclidean, points)?;
    let space = FiniteMetricSpace::from_fn(cloud.labels(), |i, j| {
        2.0 * radius * ((angles[j] - angles[i]).abs() / 2.0).sin()
    })
    .expect("labels are distinct")
    .with_name("concyclic");
    Ok(Generated { space, cloud })
}

/// `n` seeded uniform points in `[-1, 1]^dim` with the given norm.
pub fn gen_cloud(n: usize, dim: usize, norm: Norm, seed: u64) -> Result<Generated, ModelError> {
    if n == 0 {
        return Err(ModelError::TooFewPoints { needed: 1, got: 0 });
    }
    if let Norm::P { p } = norm {
        if p.is_nan() || p < 1.0 {
            return Err(ModelError::InvalidP(p));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect();
    let cloud = PointCloud::new(dim, norm, points)?;
    let space = cloud.metric_space().with_name(format!("cloud-{seed}"));
    Ok(Generated { space, cloud })
}

/// `v -> c + (v - c) / |v - c|^2`.
pub fn apply_inversion(cloud: &PointCloud, center: &[f64]) -> Result<PointCloud, ModelError> {
    if !cloud.norm.is_euclidean() {
        return Err(ModelError::NotEuclidean);
    }
    if center.len() != cloud.dim {
        return Err(ModelError::DimensionMismatch {
            expected: cloud.dim,
            got: center.len(),
        });
    }
    let points = cloud
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let rel: Vec<f64> = p.iter().zip(center).map(|(a, c)| a - c).collect();
            let r2: f64 = rel.iter().map(|x| x * x).sum();
            if r2 == 0.0 {
                return Err(ModelError::PointAtCenter(i));
            }
            Ok(rel.iter().zip(center).map(|(x, c)| c + x / r2).collect())
        })
        .collect::<Result<Vec<_>, _>>()?;
    PointCloud::new(cloud.dim, Norm::Euclidean, points)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BusemannReport {
    pub check: &'static str,
    pub passed: bool,
    pub grid: usize,
    pub pairs_checked: usize,
    /// `max f((t1 + t2) / 2) - (f(t1) + f(t2)) / 2` over grid pairs.
    pub max_violation: f64,
    pub witness: Option<[f64; 2]>,
    pub tolerance: f64,
}

/// Samples midpoint convexity of `t -> |a(t) b(t)|` on a uniform grid of `[0, 1]`.
pub fn check_busemann_sample(
    plane: &NormedPlane,
    seg_a: &Segment,
    seg_b: &Segment,
    grid: usize,
    tol: f64,
) -> Result<BusemannReport, ModelError> {
    if grid < 3 {
        return Err(ModelError::GridTooSmall(grid));
    }
    let f = |t: f64| plane.distance(seg_a.at(t), seg_b.at(t));
    let ts: Vec<f64> = (0..grid).map(|i| i as f64 / (grid - 1) as f64).collect();
    let values: Vec<f64> = ts.iter().map(|&t| f(t)).collect();
    let mut passed = true;
    let mut max_violation = f64::NEG_INFINITY;
    let mut witness = None;
    let mut pairs = 0;
    for i in 0..grid {
        for j in (i + 1)..grid {
            pairs += 1;
            let mid = f((ts[i] + ts[j]) / 2.0);
            let avg = (values[i] + values[j]) / 2.0;
            if !mid.approx_le(&avg, tol) {
                passed = false;
            }
            if mid - avg > max_violation {
                max_violation = mid - avg;
                witness = Some([ts[i], ts[j]]);
            }
        }
    }
    Ok(BusemannReport {
        check: "busemann",
        passed,
        grid,
        pairs_checked: pairs,
        max_violation,
        witness,
        tolerance: tol,
    })
}
