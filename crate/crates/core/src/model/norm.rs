use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::metric::FiniteMetricSpace;

/// A centrally symmetric convex polygon used as a unit ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolygonDoc", into = "PolygonDoc")]
pub struct PolygonNorm {
    vertices: Vec<[f64; 2]>,
    /// Outward normal `n` and offset `c > 0` of each edge line `n . x = c`.
    facets: Vec<([f64; 2], f64)>,
}

#[derive(Serialize, Deserialize)]
struct PolygonDoc {
    vertices: Vec<[f64; 2]>,
}

impl TryFrom<PolygonDoc> for PolygonNorm {
    type Error = ModelError;

    fn try_from(doc: PolygonDoc) -> Result<Self, ModelError> {
        PolygonNorm::new(doc.vertices)
    }
}

impl From<PolygonNorm> for PolygonDoc {
    fn from(p: PolygonNorm) -> Self {
        PolygonDoc { vertices: p.vertices }
    }
}

impl PolygonNorm {
    /// Vertices in either orientation. They must be centrally symmetric
    /// (`v[i + k/2] = -v[i]`) and in strictly convex position.
    pub fn new(mut vertices: Vec<[f64; 2]>) -> Result<Self, ModelError> {
        let k = vertices.len();
        if k < 4 || !k.is_multiple_of(2) {
            return Err(ModelError::BadPolygon("need an even number of at least 4 vertices"));
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(ModelError::BadPolygon("non-finite vertex"));
        }
        let scale = vertices.iter().flatten().fold(0.0f64, |m, c| m.max(c.abs()));
        let eps = 1e-12 * scale.max(1.0);
        for i in 0..k / 2 {
            let (a, b) = (vertices[i], vertices[i + k / 2]);
            if (a[0] + b[0]).abs() > eps || (a[1] + b[1]).abs() > eps {
                return Err(ModelError::BadPolygon("vertices are not centrally symmetric"));
            }
        }
        let area2: f64 = (0..k)
            .map(|i| {
                let (a, b) = (vertices[i], vertices[(i + 1) % k]);
                a[0] * b[1] - a[1] * b[0]
            })
            .sum();
        if area2 < 0.0 {
            vertices.reverse();
        }
        let mut facets = Vec::with_capacity(k);
        for i in 0..k {
            let (a, b, c) = (vertices[i], vertices[(i + 1) % k], vertices[(i + 2) % k]);
            let turn = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
            if turn <= eps * eps {
                return Err(ModelError::BadPolygon("vertices are not in strictly convex position"));
            }
            let normal = [b[1] - a[1], a[0] - b[0]];
            let offset = normal[0] * a[0] + normal[1] * a[1];
            if offset <= 0.0 {
                return Err(ModelError::BadPolygon("origin is not interior"));
            }
            facets.push((normal, offset));
        }
        Ok(Self { vertices, facets })
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    /// Minkowski gauge of the polygon.
    pub fn gauge(&self, v: [f64; 2]) -> f64 {
        self.facets
            .iter()
            .map(|(n, c)| (n[0] * v[0] + n[1] * v[1]) / c)
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Norm {
    Euclidean,
    /// `(sum |v_i|^p)^(1/p)` for finite `p >= 1`.
    P { p: f64 },
    /// Max-coordinate norm (the `p = infinity` case).
    Max,
    Polygon(PolygonNorm),
}

impl Norm {
    /// The `p`-norm; `p = 2` and `p = infinity` map to the dedicated variants.
    pub fn p(p: f64) -> Result<Self, ModelError> {
        if p.is_nan() || p < 1.0 {
            Err(ModelError::InvalidP(p))
        } else if p == 2.0 {
            Ok(Norm::Euclidean)
        } else if p.is_infinite() {
            Ok(Norm::Max)
        } else {
            Ok(Norm::P { p })
        }
    }

    pub fn polygon(vertices: Vec<[f64; 2]>) -> Result<Self, ModelError> {
        PolygonNorm::new(vertices).map(Norm::Polygon)
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self, Norm::Euclidean)
    }

    /// Dimension the norm is restricted to, if any.
    pub fn required_dim(&self) -> Option<usize> {
        match self {
            Norm::Polygon(_) => Some(2),
            _ => None,
        }
    }

    pub fn norm(&self, v: &[f64]) -> f64 {
        match self {
            Norm::Euclidean => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Norm::P { p } => v.iter().map(|x| x.abs().powf(*p)).sum::<f64>().powf(1.0 / p),
            Norm::Max => v.iter().fold(0.0, |m, x| m.max(x.abs())),
            Norm::Polygon(poly) => poly.gauge([v[0], v[1]]),
        }
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        self.norm(&diff)
    }
}

/// A two-dimensional normed space with straight segments as geodesics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NormedPlane {
    norm: Norm,
}

impl NormedPlane {
    pub fn new(norm: Norm) -> Self {
        Self { norm }
    }

    pub fn euclidean() -> Self {
        Self::new(Norm::Euclidean)
    }

    pub fn p_norm(p: f64) -> Result<Self, ModelError> {
        Norm::p(p).map(Self::new)
    }

    pub fn max_norm() -> Self {
        Self::new(Norm::Max)
    }

    pub fn norm(&self) -> &Norm {
        &self.norm
    }

    pub fn length(&self, v: [f64; 2]) -> f64 {
        self.norm.norm(&v)
    }

    pub fn distance(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        self.length([a[0] - b[0], a[1] - b[1]])
    }

    /// `v / |v|`.
    pub fn normalize(&self, v: [f64; 2]) -> [f64; 2] {
        let l = self.length(v);
        [v[0] / l, v[1] / l]
    }
}

/// The affinely parameterized segment `t -> (1 - t) start + t end`, `t in [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: [f64; 2],
    pub end: [f64; 2],
}

impl Segment {
    pub fn new(start: [f64; 2], end: [f64; 2]) -> Self {
        Self { start, end }
    }

    pub fn at(&self, t: f64) -> [f64; 2] {
        [
            (1.0 - t) * self.start[0] + t * self.end[0],
            (1.0 - t) * self.start[1] + t * self.end[1],
        ]
    }
}

/// Points in `R^dim` with a norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub dim: usize,
    pub norm: Norm,
    pub points: Vec<Vec<f64>>,
}

impl PointCloud {
    pub fn new(dim: usize, norm: Norm, points: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        if dim == 0 {
            return Err(ModelError::ZeroDimension);
        }
        if let Some(req) = norm.required_dim() {
            if req != dim {
                return Err(ModelError::DimensionMismatch { expected: req, got: dim });
            }
        }
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(ModelError::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
        if points.iter().flatten().any(|c| !c.is_finite()) {
            return Err(ModelError::NonFinite);
        }
        Ok(Self { dim, norm, points })
    }

    /// Euclidean cloud; the dimension is taken from the first point.
    pub fn euclidean(points: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        let dim = points.first().map_or(1, Vec::len);
        Self::new(dim, Norm::Euclidean, points)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Labels `p0, p1, ...`.
    pub fn labels(&self) -> Vec<String> {
        (0..self.points.len()).map(|i| format!("p{i}")).collect()
    }

    /// The induced metric space in float mode.
    pub fn metric_space(&self) -> FiniteMetricSpace<f64> {
        FiniteMetricSpace::from_fn(self.labels(), |i, j| self.norm.distance(&self.points[i], &self.points[j]))
            .expect("labels are distinct and the matrix is square")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l1_diamond() -> Vec<[f64; 2]> {
        vec![[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]
    }

    #[test]
    fn polygon_gauge_matches_l1_and_max() {
        let diamond = PolygonNorm::new(l1_diamond()).unwrap();
        let square = PolygonNorm::new(vec![[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]]).unwrap();
        let l1 = Norm::p(1.0).unwrap();
        for v in [[0.3, -0.7], [2.0, 5.0], [-1.5, 0.25], [0.0, 0.0]] {
            assert!((diamond.gauge(v) - l1.norm(&v)).abs() < 1e-12);
            assert!((square.gauge(v) - Norm::Max.norm(&v)).abs() < 1e-12);
        }
    }

    #[test]
    fn polygon_orientation_is_normalized() {
        let mut cw = l1_diamond();
        cw.reverse();
        let p = PolygonNorm::new(cw).unwrap();
        assert!((p.gauge([0.5, 0.5]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn polygon_validation() {
        assert!(PolygonNorm::new(vec![[1.0, 0.0], [-1.0, 0.0]]).is_err());
        // not symmetric
        assert!(PolygonNorm::new(vec![[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -2.0]]).is_err());
        // hexagon with a reflex pair: symmetric but not convex
        let star = vec![[1.0, 0.0], [0.2, 0.2], [0.0, 1.0], [-1.0, 0.0], [-0.2, -0.2], [0.0, -1.0]];
        assert!(PolygonNorm::new(star).is_err());
    }

    #[test]
    fn polygon_norm_axioms_spot_check() {
        let hex: Vec<[f64; 2]> = (0..6)
            .map(|k| {
                let a = std::f64::consts::PI / 3.0 * k as f64 + 0.1;
                [2.0 * a.cos(), a.sin()]
            })
            .collect();
        let plane = NormedPlane::new(Norm::polygon(hex).unwrap());
        let vs = [[0.3, 0.9], [-1.2, 0.4], [2.5, -0.5], [0.0, 1.0]];
        for u in vs {
            for lambda in [-3.0, -0.5, 0.0, 2.0] {
                let scaled = plane.length([lambda * u[0], lambda * u[1]]);
                assert!((scaled - f64::abs(lambda) * plane.length(u)).abs() < 1e-12);
            }
            for v in vs {
                let sum = plane.length([u[0] + v[0], u[1] + v[1]]);
                assert!(sum <= plane.length(u) + plane.length(v) + 1e-12);
            }
        }
    }

    #[test]
    fn p_norm_constructor() {
        assert_eq!(Norm::p(2.0).unwrap(), Norm::Euclidean);
        assert_eq!(Norm::p(f64::INFINITY).unwrap(), Norm::Max);
        assert!(matches!(Norm::p(0.5), Err(ModelError::InvalidP(_))));
        assert!((Norm::p(3.0).unwrap().norm(&[1.0, 2.0]) - 9f64.cbrt()).abs() < 1e-12);
    }

    #[test]
    fn cloud_json_shape() {
        let cloud = PointCloud::new(2, Norm::p(1.5).unwrap(), vec![vec![0.0, 1.0]]).unwrap();
        let json = serde_json::to_value(&cloud).unwrap();
        assert_eq!(json["dim"], 2);
        assert_eq!(json["norm"]["kind"], "p");
        assert_eq!(json["norm"]["p"], 1.5);
        let back: PointCloud = serde_json::from_value(json).unwrap();
        assert_eq!(back, cloud);

        let poly = PointCloud::new(2, Norm::polygon(l1_diamond()).unwrap(), vec![]).unwrap();
        let json = serde_json::to_string(&poly).unwrap();
        assert_eq!(serde_json::from_str::<PointCloud>(&json).unwrap(), poly);
        assert!(serde_json::from_str::<PointCloud>(r#"{"dim":2,"norm":{"kind":"polygon","vertices":[[1,0]]},"points":[]}"#).is_err());
    }

    #[test]
    fn cloud_validation() {
        assert!(PointCloud::new(3, Norm::polygon(l1_diamond()).unwrap(), vec![]).is_err());
        assert!(PointCloud::new(2, Norm::Euclidean, vec![vec![1.0]]).is_err());
        assert!(PointCloud::new(0, Norm::Euclidean, vec![]).is_err());
    }
}
