//! Finite metric spaces and metric-axiom validation.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::scalar::{ParseScalarError, Scalar, DEFAULT_TOLERANCE};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpaceError {
    #[error("matrix has {rows} rows but {labels} labels were given")]
    RowCount { rows: usize, labels: usize },
    #[error("row {row} has {len} entries, expected {expected}")]
    RowLength { row: usize, len: usize, expected: usize },
    #[error("entry ({row}, {col}): {source}")]
    Entry {
        row: usize,
        col: usize,
        #[source]
        source: ParseScalarError,
    },
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("index {index} out of range for a space with {len} points")]
    IndexOutOfRange { index: usize, len: usize },
}

/// A labeled distance matrix.
///
/// Construction does not check the metric axioms; call [`validate_metric`].
/// The full square matrix is kept so asymmetric input can be reported rather
/// than silently repaired.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetricSpace<S> {
    name: String,
    labels: Vec<String>,
    dist: Vec<S>,
}

impl<S: Scalar> FiniteMetricSpace<S> {
    /// Builds a space from already-typed rows.
    pub fn new(labels: Vec<String>, rows: Vec<Vec<S>>) -> Result<Self, SpaceError> {
        let n = labels.len();
        if rows.len() != n {
            return Err(SpaceError::RowCount {
                rows: rows.len(),
                labels: n,
            });
        }
        let mut seen = HashSet::with_capacity(n);
        for label in &labels {
            if !seen.insert(label.as_str()) {
                return Err(SpaceError::DuplicateLabel(label.clone()));
            }
        }
        let mut dist = Vec::with_capacity(n * n);
        for (row, entries) in rows.into_iter().enumerate() {
            if entries.len() != n {
                return Err(SpaceError::RowLength {
                    row,
                    len: entries.len(),
                    expected: n,
                });
            }
            dist.extend(entries);
        }
        Ok(Self {
            name: "space".to_owned(),
            labels,
            dist,
        })
    }

    /// Builds a space from a label list and a symmetric distance function.
    pub fn from_fn(labels: Vec<String>, mut f: impl FnMut(usize, usize) -> S) -> Result<Self, SpaceError> {
        let n = labels.len();
        let upper: Vec<Vec<S>> = (0..n).map(|i| ((i + 1)..n).map(|j| f(i, j)).collect()).collect();
        let rows = (0..n)
            .map(|i| {
                let mut row: Vec<S> = (0..i).map(|j| upper[j][i - j - 1].clone()).collect();
                row.push(S::zero());
                row.extend(upper[i].iter().cloned());
                row
            })
            .collect();
        Self::new(labels, rows)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> &S {
        &self.dist[i * self.labels.len() + j]
    }

    pub fn index_of(&self, label: &str) -> Result<usize, SpaceError> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| SpaceError::UnknownLabel(label.to_owned()))
    }

    pub fn check_index(&self, index: usize) -> Result<(), SpaceError> {
        if index < self.len() {
            Ok(())
        } else {
            Err(SpaceError::IndexOutOfRange {
                index,
                len: self.len(),
            })
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = &[S]> {
        self.dist.chunks(self.labels.len().max(1)).take(self.labels.len())
    }

    /// The subspace induced on `indices`, in the given order.
    pub fn subspace(&self, indices: &[usize]) -> Result<Self, SpaceError> {
        for &i in indices {
            self.check_index(i)?;
        }
        let labels = indices.iter().map(|&i| self.labels[i].clone()).collect();
        let rows = indices
            .iter()
            .map(|&i| indices.iter().map(|&j| self.dist(i, j).clone()).collect())
            .collect();
        Ok(Self::new(labels, rows)?.with_name(self.name.clone()))
    }

    /// Multiplies every distance by `factor`.
    pub fn scaled(&self, factor: &S) -> Self {
        Self {
            name: self.name.clone(),
            labels: self.labels.clone(),
            dist: self.dist.iter().map(|d| d.times(factor)).collect(),
        }
    }

    /// Returns a copy with the distance between `i` and `j` (both orders) replaced.
    pub fn with_distance(&self, i: usize, j: usize, value: S) -> Self {
        let n = self.len();
        let mut out = self.clone();
        out.dist[i * n + j] = value.clone();
        out.dist[j * n + i] = value;
        out
    }

    /// Converts the distances to another mode.
    pub fn convert<T: Scalar>(&self) -> Result<FiniteMetricSpace<T>, ParseScalarError> {
        let dist = self
            .dist
            .iter()
            .map(|d| match S::MODE {
                crate::Mode::Exact => T::parse_entry(&d.to_string()),
                crate::Mode::Float => T::from_f64(d.to_f64()),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FiniteMetricSpace {
            name: self.name.clone(),
            labels: self.labels.clone(),
            dist,
        })
    }
}

/// Parses a string matrix in the mode `S`; entries may be decimals or `p/q`.
pub fn build_space<S: Scalar>(labels: Vec<String>, matrix: &[Vec<String>]) -> Result<FiniteMetricSpace<S>, SpaceError> {
    let rows = matrix
        .iter()
        .enumerate()
        .map(|(row, entries)| {
            entries
                .iter()
                .enumerate()
                .map(|(col, cell)| S::parse_entry(cell).map_err(|source| SpaceError::Entry { row, col, source }))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    FiniteMetricSpace::new(labels, rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ViolationKind {
    Symmetry,
    Diagonal,
    Positivity,
    Triangle,
}

/// One failed axiom instance.
///
/// For triangle violations `indices` is `(i, j, k)` with `d(i,k) > d(i,j) + d(j,k)`
/// and `magnitude` is the excess.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub indices: Vec<usize>,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub points: usize,
    /// Total number of violations found.
    pub violation_count: usize,
    /// The first violations in lexicographic witness order, truncated at [`MAX_LISTED_VIOLATIONS`].
    pub violations: Vec<Violation>,
    pub tolerance: f64,
}

pub const MAX_LISTED_VIOLATIONS: usize = 64;

/// Checks symmetry, zero diagonal, positivity and every triangle inequality.
pub fn validate_metric<S: Scalar>(space: &FiniteMetricSpace<S>, tol: f64) -> ValidationReport {
    let n = space.len();
    let mut violations = Vec::new();

    for i in 0..n {
        let d = space.dist(i, i);
        if !d.is_zero() {
            violations.push(Violation {
                kind: ViolationKind::Diagonal,
                indices: vec![i],
                magnitude: d.to_f64().abs(),
            });
        }
        for j in (i + 1)..n {
            let (a, b) = (space.dist(i, j), space.dist(j, i));
            if !a.approx_eq(b, tol) {
                violations.push(Violation {
                    kind: ViolationKind::Symmetry,
                    indices: vec![i, j],
                    magnitude: a.abs_diff(b).to_f64(),
                });
            }
            for (p, q, d) in [(i, j, a), (j, i, b)] {
                if !d.is_positive() {
                    violations.push(Violation {
                        kind: ViolationKind::Positivity,
                        indices: vec![p, q],
                        magnitude: -d.to_f64(),
                    });
                }
            }
        }
    }

    // Triangle scan is the O(n^3) part; rows are independent.
    let triangle: Vec<Violation> = (0..n)
        .into_par_iter()
        .with_min_len(16)
        .flat_map_iter(|i| {
            let mut found = Vec::new();
            for j in 0..n {
                let dij = space.dist(i, j);
                for k in 0..n {
                    let through = dij.plus(space.dist(j, k));
                    let direct = space.dist(i, k);
                    if !direct.approx_le(&through, tol) {
                        found.push(Violation {
                            kind: ViolationKind::Triangle,
                            indices: vec![i, j, k],
                            magnitude: direct.minus(&through).to_f64(),
                        });
                    }
                }
            }
            found
        })
        .collect();
    violations.extend(triangle);

    violations.sort_by(|a, b| a.indices.cmp(&b.indices).then(a.kind.cmp(&b.kind)));
    let violation_count = violations.len();
    violations.truncate(MAX_LISTED_VIOLATIONS);
    ValidationReport {
        passed: violation_count == 0,
        points: n,
        violation_count,
        violations,
        tolerance: if S::MODE == crate::Mode::Float { tol } else { 0.0 },
    }
}

/// [`validate_metric`] with the default tolerance.
pub fn validate(space: &FiniteMetricSpace<impl Scalar>) -> ValidationReport {
    validate_metric(space, DEFAULT_TOLERANCE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Exact;

    fn labels(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn strings(rows: &[&[&str]]) -> Vec<Vec<String>> {
        rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect()
    }

    #[test]
    fn one_point_space_is_valid() {
        let s = build_space::<Exact>(labels(&["p"]), &strings(&[&["0"]])).unwrap();
        assert_eq!(s.len(), 1);
        assert!(validate(&s).passed);
    }

    #[test]
    fn exact_entry_round_trips() {
        let s = build_space::<Exact>(labels(&["a", "b"]), &strings(&[&["0", "1/3"], &["1/3", "0"]])).unwrap();
        assert_eq!(*s.dist(0, 1), Exact::from_ratio(1, 3));
        assert_eq!(s.dist(0, 1).to_string(), "1/3");
    }

    #[test]
    fn build_errors() {
        let err = build_space::<f64>(labels(&["a", "b"]), &strings(&[&["0", "1"]])).unwrap_err();
        assert!(matches!(err, SpaceError::RowCount { .. }));
        let err = build_space::<f64>(labels(&["a", "b"]), &strings(&[&["0", "1"], &["1"]])).unwrap_err();
        assert!(matches!(err, SpaceError::RowLength { row: 1, .. }));
        let err = build_space::<f64>(labels(&["a", "a"]), &strings(&[&["0", "1"], &["1", "0"]])).unwrap_err();
        assert_eq!(err, SpaceError::DuplicateLabel("a".into()));
        let err = build_space::<Exact>(labels(&["a", "b"]), &strings(&[&["0", "x"], &["1", "0"]])).unwrap_err();
        assert!(matches!(err, SpaceError::Entry { row: 0, col: 1, .. }));
    }

    #[test]
    fn triangle_violation_witness() {
        let s = build_space::<Exact>(
            labels(&["a", "b", "c"]),
            &strings(&[&["0", "1", "3"], &["1", "0", "1"], &["3", "1", "0"]]),
        )
        .unwrap();
        let report = validate(&s);
        assert!(!report.passed);
        let first = &report.violations[0];
        assert_eq!(first.kind, ViolationKind::Triangle);
        assert_eq!(first.indices, vec![0, 1, 2]);
        assert_eq!(first.magnitude, 1.0);
    }

    #[test]
    fn asymmetric_and_pseudometric_inputs() {
        let s = build_space::<f64>(labels(&["a", "b"]), &strings(&[&["0", "1"], &["2", "0"]])).unwrap();
        let report = validate(&s);
        assert!(report.violations.iter().any(|v| v.kind == ViolationKind::Symmetry));

        let s = build_space::<f64>(labels(&["a", "b"]), &strings(&[&["0", "0"], &["0", "0"]])).unwrap();
        let report = validate(&s);
        assert!(!report.passed);
        assert!(report.violations.iter().all(|v| v.kind == ViolationKind::Positivity));

        let s = build_space::<f64>(labels(&["a", "b"]), &strings(&[&["1", "1"], &["1", "0"]])).unwrap();
        assert_eq!(validate(&s).violations[0].kind, ViolationKind::Diagonal);
    }

    #[test]
    fn subspace_and_scaling() {
        let s = FiniteMetricSpace::<Exact>::from_fn(labels(&["a", "b", "c"]), |i, j| Exact::from_ratio((i + j) as i64, 1))
            .unwrap();
        let sub = s.subspace(&[2, 0]).unwrap();
        assert_eq!(sub.labels(), &labels(&["c", "a"])[..]);
        assert_eq!(*sub.dist(0, 1), Exact::from_ratio(2, 1));
        let scaled = s.scaled(&Exact::from_ratio(3, 1));
        assert_eq!(*scaled.dist(1, 2), Exact::from_ratio(9, 1));
    }

    #[test]
    fn convert_between_modes() {
        let s = build_space::<Exact>(labels(&["a", "b"]), &strings(&[&["0", "1/4"], &["1/4", "0"]])).unwrap();
        let f: FiniteMetricSpace<f64> = s.convert().unwrap();
        assert_eq!(*f.dist(0, 1), 0.25);
        let back: FiniteMetricSpace<Exact> = f.convert().unwrap();
        assert_eq!(back, s);
    }
}
