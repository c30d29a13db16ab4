//! The Ptolemy inequality, Möbius equivalence and distance convexity.
//!
//! For a quadruple `(x, y, z, w)` the three products of opposite distances
//!
//! ```text
//! A = ( |xy||zw|, |xz||yw|, |xw||yz| )
//! ```
//!
//! must satisfy the triangle inequality. The normalized defect
//! `(max - (sum of the other two)) / max` is scale invariant and `<= 0`
//! exactly when the quadruple is Ptolemy.

use std::cmp::Ordering;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::metric::{FiniteMetricSpace, SpaceError};
use crate::quadruple::{par_fold_ranks, quadruple_count, unrank, Quadruple, Quadruples};
use crate::scalar::{Mode, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("spaces have different sizes ({0} vs {1})")]
    SizeMismatch(usize, usize),
    #[error("`{m}` is not a midpoint of `{x}` and `{y}`")]
    NotMidpoint { x: String, y: String, m: String },
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// The Ptolemy triple of one quadruple and its defect.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadrupleVerdict<S> {
    pub quadruple: Quadruple,
    pub products: [S; 3],
    pub defect: S,
    pub satisfied: bool,
}

impl<S: Scalar> Serialize for QuadrupleVerdict<S> {
    fn serialize<Ser: Serializer>(&self, serializer: Ser) -> Result<Ser::Ok, Ser::Error> {
        let mut st = serializer.serialize_struct("QuadrupleVerdict", 4)?;
        st.serialize_field("indices", &self.quadruple)?;
        st.serialize_field("products", &self.products.iter().map(S::to_json).collect::<Vec<_>>())?;
        st.serialize_field("defect", &self.defect.to_json())?;
        st.serialize_field("satisfied", &self.satisfied)?;
        st.end()
    }
}

impl<S: Scalar> QuadrupleVerdict<S> {
    /// Larger defect wins; ties go to the lexicographically smaller quadruple.
    fn worse(self, other: Self) -> Self {
        match self.defect.total_cmp(&other.defect) {
            Ordering::Greater => self,
            Ordering::Less => other,
            Ordering::Equal if self.quadruple <= other.quadruple => self,
            Ordering::Equal => other,
        }
    }
}

/// Defect value used when every product vanishes (impossible for a genuine metric).
pub fn defect_sentinel<S: Scalar>() -> S {
    S::from_ratio(-1, 1)
}

/// Products `(|xy||zw|, |xz||yw|, |xw||yz|)` for `q = (x, y, z, w)`.
pub fn ptolemy_products<S: Scalar>(space: &FiniteMetricSpace<S>, q: Quadruple) -> [S; 3] {
    let [x, y, z, w] = q.0;
    [
        space.dist(x, y).times(space.dist(z, w)),
        space.dist(x, z).times(space.dist(y, w)),
        space.dist(x, w).times(space.dist(y, z)),
    ]
}

pub fn ptolemy_verdict<S: Scalar>(space: &FiniteMetricSpace<S>, q: Quadruple, tol: f64) -> QuadrupleVerdict<S> {
    let products = ptolemy_products(space, q);
    let largest = products.iter().fold(&products[0], |m, p| m.max_ref(p)).clone();
    let total = products[0].plus(&products[1]).plus(&products[2]);
    let others = total.minus(&largest);
    let defect = if largest.is_zero() {
        defect_sentinel()
    } else {
        largest.minus(&others).divide(&largest)
    };
    let satisfied = largest.approx_le(&others, tol);
    QuadrupleVerdict {
        quadruple: q,
        products,
        defect,
        satisfied,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Exhaustive,
    /// Uniform sample without replacement; `count` is clamped to the number of quadruples.
    Sampled { count: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PtolemyReport<S> {
    pub space: String,
    pub strategy: Strategy,
    pub checked: u64,
    /// `None` only when the space has fewer than four points.
    pub worst: Option<QuadrupleVerdict<S>>,
    pub passed: bool,
    pub tolerance: f64,
}

impl<S: Scalar> Serialize for PtolemyReport<S> {
    fn serialize<Ser: Serializer>(&self, serializer: Ser) -> Result<Ser::Ok, Ser::Error> {
        let (strategy, requested, seed) = match self.strategy {
            Strategy::Exhaustive => ("exhaustive", None, None),
            Strategy::Sampled { count, seed } => ("sampled", Some(count), Some(seed)),
        };
        let mut st = serializer.serialize_struct("PtolemyReport", 10)?;
        st.serialize_field("check", "ptolemy")?;
        st.serialize_field("space", &self.space)?;
        st.serialize_field("mode", &S::MODE)?;
        st.serialize_field("passed", &self.passed)?;
        st.serialize_field("strategy", strategy)?;
        st.serialize_field("requested", &requested)?;
        st.serialize_field("checked", &self.checked)?;
        st.serialize_field("worst", &self.worst)?;
        st.serialize_field("tolerance", &self.tolerance)?;
        st.serialize_field("seed", &seed)?;
        st.end()
    }
}

/// Scans quadruples and reports the one with maximal defect.
pub fn check_ptolemy<S: Scalar>(space: &FiniteMetricSpace<S>, strategy: Strategy, tol: f64) -> PtolemyReport<S> {
    let n = space.len();
    let total = quadruple_count(n);
    let (checked, worst) = match strategy {
        Strategy::Exhaustive => {
            let worst = par_fold_ranks(
                total,
                |ranks| {
                    Quadruples::range(n, ranks)
                        .map(|q| ptolemy_verdict(space, q, tol))
                        .reduce(QuadrupleVerdict::worse)
                },
                merge_worst,
            )
            .flatten();
            (total, worst)
        }
        Strategy::Sampled { count, seed } => {
            let ranks = sample_ranks(total, count, seed);
            let worst = par_fold_ranks(
                ranks.len() as u64,
                |slots| {
                    ranks[slots.start as usize..slots.end as usize]
                        .iter()
                        .map(|&r| ptolemy_verdict(space, unrank(n, r), tol))
                        .reduce(QuadrupleVerdict::worse)
                },
                merge_worst,
            )
            .flatten();
            (ranks.len() as u64, worst)
        }
    };
    let passed = worst.as_ref().is_none_or(|w| w.satisfied);
    PtolemyReport {
        space: space.name().to_owned(),
        strategy,
        checked,
        worst,
        passed,
        tolerance: tol,
    }
}

fn merge_worst<S: Scalar>(a: Option<QuadrupleVerdict<S>>, b: Option<QuadrupleVerdict<S>>) -> Option<QuadrupleVerdict<S>> {
    match (a, b) {
        (Some(a), Some(b)) => Some(a.worse(b)),
        (a, b) => a.or(b),
    }
}

/// Seeded uniform sample of `count` distinct ranks from `0..total`, ascending.
pub fn sample_ranks(total: u64, count: u64, seed: u64) -> Vec<u64> {
    let amount = count.min(total) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ranks: Vec<u64> = index::sample(&mut rng, total as usize, amount)
        .into_iter()
        .map(|r| r as u64)
        .collect();
    ranks.sort_unstable();
    ranks
}

/// The `satisfied` flag of every quadruple, in lexicographic order.
pub fn satisfied_flags<S: Scalar>(space: &FiniteMetricSpace<S>, tol: f64) -> Vec<bool> {
    let n = space.len();
    par_fold_ranks(
        quadruple_count(n),
        |ranks| {
            Quadruples::range(n, ranks)
                .map(|q| ptolemy_verdict(space, q, tol).satisfied)
                .collect::<Vec<_>>()
        },
        |mut a, b| {
            a.extend(b);
            a
        },
    )
    .unwrap_or_default()
}

/// The Ptolemy triple divided by `|xw||yz|`: the cross-ratio pair followed by 1.
pub fn mobius_triple<S: Scalar>(space: &FiniteMetricSpace<S>, q: Quadruple) -> [S; 3] {
    let [a, b, c] = ptolemy_products(space, q);
    [a.divide(&c), b.divide(&c), S::from_ratio(1, 1)]
}

#[derive(Debug, Clone, PartialEq)]
pub struct MobiusWitness<S> {
    pub quadruple: Quadruple,
    pub first: [S; 3],
    pub second: [S; 3],
    /// Largest relative difference between the sorted cross-ratio pairs.
    pub discrepancy: f64,
}

impl<S: Scalar> Serialize for MobiusWitness<S> {
    fn serialize<Ser: Serializer>(&self, serializer: Ser) -> Result<Ser::Ok, Ser::Error> {
        let mut st = serializer.serialize_struct("MobiusWitness", 4)?;
        st.serialize_field("indices", &self.quadruple)?;
        st.serialize_field("first", &self.first.iter().map(S::to_json).collect::<Vec<_>>())?;
        st.serialize_field("second", &self.second.iter().map(S::to_json).collect::<Vec<_>>())?;
        st.serialize_field("discrepancy", &self.discrepancy)?;
        st.end()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MobiusReport<S> {
    pub passed: bool,
    pub checked: u64,
    pub disagreements: u64,
    /// Quadruple with the largest discrepancy (lexicographic tie-break).
    pub worst: Option<MobiusWitness<S>>,
    pub tolerance: f64,
}

impl<S: Scalar> Serialize for MobiusReport<S> {
    fn serialize<Ser: Serializer>(&self, serializer: Ser) -> Result<Ser::Ok, Ser::Error> {
        let mut st = serializer.serialize_struct("MobiusReport", 7)?;
        st.serialize_field("check", "mobius")?;
        st.serialize_field("mode", &S::MODE)?;
        st.serialize_field("passed", &self.passed)?;
        st.serialize_field("checked", &self.checked)?;
        st.serialize_field("disagreements", &self.disagreements)?;
        st.serialize_field("worst", &self.worst)?;
        st.serialize_field("tolerance", &self.tolerance)?;
        st.end()
    }
}

fn sorted_pair<S: Scalar>(t: &[S; 3]) -> [S; 2] {
    if t[0].total_cmp(&t[1]) == Ordering::Greater {
        [t[1].clone(), t[0].clone()]
    } else {
        [t[0].clone(), t[1].clone()]
    }
}

fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Compares the cross-ratio pairs (as unordered pairs) of two metrics on the same labels.
pub fn check_mobius_equivalence<S: Scalar>(
    first: &FiniteMetricSpace<S>,
    second: &FiniteMetricSpace<S>,
    tol: f64,
) -> Result<MobiusReport<S>, CheckError> {
    if first.len() != second.len() {
        return Err(CheckError::SizeMismatch(first.len(), second.len()));
    }
    let n = first.len();
    let total = quadruple_count(n);
    type Acc<S> = (u64, Option<MobiusWitness<S>>);
    let merge = |(da, wa): Acc<S>, (db, wb): Acc<S>| -> Acc<S> {
        let worst = match (wa, wb) {
            (Some(a), Some(b)) => Some(match a.discrepancy.total_cmp(&b.discrepancy) {
                Ordering::Greater => a,
                Ordering::Less => b,
                Ordering::Equal if a.quadruple <= b.quadruple => a,
                Ordering::Equal => b,
            }),
            (a, b) => a.or(b),
        };
        (da + db, worst)
    };
    let (disagreements, worst) = par_fold_ranks(
        total,
        |ranks| {
            Quadruples::range(n, ranks)
                .map(|q| {
                    let ta = mobius_triple(first, q);
                    let tb = mobius_triple(second, q);
                    let (pa, pb) = (sorted_pair(&ta), sorted_pair(&tb));
                    let agree = pa[0].approx_eq(&pb[0], tol) && pa[1].approx_eq(&pb[1], tol);
                    let discrepancy = relative_gap(pa[0].to_f64(), pb[0].to_f64())
                        .max(relative_gap(pa[1].to_f64(), pb[1].to_f64()));
                    let witness = MobiusWitness {
                        quadruple: q,
                        first: ta,
                        second: tb,
                        discrepancy,
                    };
                    (u64::from(!agree), Some(witness))
                })
                .fold((0, None), merge)
        },
        merge,
    )
    .unwrap_or((0, None));
    Ok(MobiusReport {
        passed: disagreements == 0,
        checked: total,
        disagreements,
        worst,
        tolerance: tol,
    })
}

/// Whether `m` satisfies both midpoint equalities for `x` and `y`.
pub fn is_midpoint<S: Scalar>(space: &FiniteMetricSpace<S>, x: usize, y: usize, m: usize, tol: f64) -> bool {
    let half = space.dist(x, y).half();
    space.dist(x, m).approx_eq(&half, tol) && space.dist(m, y).approx_eq(&half, tol)
}

/// `|mz| <= (|xz| + |yz|) / 2` for a midpoint `m` of `x` and `y`.
pub fn check_distance_convexity<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    x: usize,
    y: usize,
    m: usize,
    z: usize,
    tol: f64,
) -> Result<bool, CheckError> {
    for i in [x, y, m, z] {
        space.check_index(i)?;
    }
    if !is_midpoint(space, x, y, m, tol) {
        return Err(CheckError::NotMidpoint {
            x: space.label(x).to_owned(),
            y: space.label(y).to_owned(),
            m: space.label(m).to_owned(),
        });
    }
    let bound = space.dist(x, z).plus(space.dist(y, z)).half();
    Ok(space.dist(m, z).approx_le(&bound, tol))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityWitness {
    /// `(x, y, m, z)`.
    pub indices: [usize; 4],
    /// `|mz| - (|xz| + |yz|) / 2`.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityReport {
    pub check: &'static str,
    pub passed: bool,
    /// Number of `(x, y, m)` midpoint triples found.
    pub midpoint_triples: u64,
    /// Number of `(x, y, m, z)` instances checked.
    pub checked: u64,
    pub worst: Option<ConvexityWitness>,
    pub tolerance: f64,
}

/// Checks distance convexity for every midpoint triple present in the space.
pub fn check_convexity_all<S: Scalar>(space: &FiniteMetricSpace<S>, tol: f64) -> ConvexityReport {
    let n = space.len();
    let mut triples = 0;
    let mut checked = 0;
    let mut passed = true;
    let mut worst: Option<ConvexityWitness> = None;
    for x in 0..n {
        for y in (x + 1)..n {
            for m in 0..n {
                if !is_midpoint(space, x, y, m, tol) {
                    continue;
                }
                triples += 1;
                for z in 0..n {
                    checked += 1;
                    let bound = space.dist(x, z).plus(space.dist(y, z)).half();
                    let lhs = space.dist(m, z);
                    if !lhs.approx_le(&bound, tol) {
                        passed = false;
                    }
                    let excess = lhs.minus(&bound).to_f64();
                    if worst.as_ref().is_none_or(|w| excess > w.excess) {
                        worst = Some(ConvexityWitness {
                            indices: [x, y, m, z],
                            excess,
                        });
                    }
                }
            }
        }
    }
    ConvexityReport {
        check: "convexity",
        passed,
        midpoint_triples: triples,
        checked,
        worst,
        tolerance: if S::MODE == Mode::Float { tol } else { 0.0 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{gen_paper_four_point, NormedPlane, PointCloud};
    use crate::scalar::Exact;
    use crate::DEFAULT_TOLERANCE as TOL;

    fn q(n: i64, d: i64) -> Exact {
        Exact::from_ratio(n, d)
    }

    fn line(points: &[i64]) -> FiniteMetricSpace<Exact> {
        let labels = points.iter().map(|p| p.to_string()).collect();
        FiniteMetricSpace::from_fn(labels, |i, j| q((points[i] - points[j]).abs(), 1)).unwrap()
    }

    fn l1_square() -> FiniteMetricSpace<f64> {
        PointCloud::new(
            2,
            NormedPlane::p_norm(1.0).unwrap().norm().clone(),
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]],
        )
        .unwrap()
        .metric_space()
    }

    #[test]
    fn four_point_space_equality() {
        let space = gen_paper_four_point();
        let v = ptolemy_verdict(&space, Quadruple([0, 1, 2, 3]), TOL);
        assert_eq!(v.products, [q(2, 1), q(1, 1), q(1, 1)]);
        assert_eq!(v.defect, q(0, 1));
        assert!(v.satisfied);
    }

    #[test]
    fn collinear_points_attain_equality() {
        let space = line(&[0, 1, 2, 3]);
        let v = ptolemy_verdict(&space, Quadruple([0, 1, 2, 3]), TOL);
        // |xz||yw| = 4 = |xy||zw| + |yz||wx| = 1 + 3
        assert_eq!(v.products, [q(1, 1), q(4, 1), q(3, 1)]);
        assert_eq!(v.defect, q(0, 1));
        assert!(v.satisfied);
    }

    #[test]
    fn l1_square_defect_is_one_half() {
        let space = l1_square();
        let v = ptolemy_verdict(&space, Quadruple([0, 1, 2, 3]), TOL);
        // sides 1, diagonals 2: products (1*1, 2*2, 1*1)
        assert_eq!(v.products, [1.0, 4.0, 1.0]);
        assert_eq!(v.defect, 0.5);
        assert!(!v.satisfied);
        let report = check_ptolemy(&space, Strategy::Exhaustive, TOL);
        assert!(!report.passed);
        assert_eq!(report.worst.unwrap().defect, 0.5);
    }

    #[test]
    fn small_spaces_pass_vacuously() {
        let report = check_ptolemy(&line(&[0, 5, 7]), Strategy::Exhaustive, TOL);
        assert!(report.passed);
        assert_eq!(report.checked, 0);
        assert!(report.worst.is_none());
    }

    #[test]
    fn mobius_triple_of_collinear_points() {
        let space = line(&[0, 1, 2, 3]);
        let b = mobius_triple(&space, Quadruple([0, 1, 2, 3]));
        assert_eq!(b, [q(1, 3), q(4, 3), q(1, 1)]);
        let scaled = space.scaled(&q(3, 1));
        assert_eq!(mobius_triple(&scaled, Quadruple([0, 1, 2, 3])), b);
    }

    #[test]
    fn mobius_scaling_and_perturbation() {
        let space = line(&[0, 1, 3, 7, 8]);
        let report = check_mobius_equivalence(&space, &space.scaled(&q(7, 1)), TOL).unwrap();
        assert!(report.passed);
        let bumped = space.with_distance(0, 3, space.dist(0, 3).times(&q(21, 20)));
        let report = check_mobius_equivalence(&space, &bumped, TOL).unwrap();
        assert!(!report.passed);
        let w = report.worst.unwrap();
        assert!(w.quadruple.0.contains(&0) && w.quadruple.0.contains(&3));
        assert!(check_mobius_equivalence(&space, &line(&[0, 1]), TOL).is_err());
    }

    #[test]
    fn distance_convexity_cases() {
        let space = gen_paper_four_point();
        let (x, y, m1, m2) = (0, 1, 2, 3);
        // z = x: |mx| = |xy| / 2
        assert!(check_distance_convexity(&space, x, y, m1, x, TOL).unwrap());
        // |m1 m2| = 1 <= (1 + 1) / 2
        assert!(check_distance_convexity(&space, x, y, m1, m2, TOL).unwrap());
        let err = check_distance_convexity(&space, x, m1, m2, y, TOL).unwrap_err();
        assert!(matches!(err, CheckError::NotMidpoint { .. }));

        let report = check_convexity_all(&space, TOL);
        assert!(report.passed);
        assert_eq!(report.midpoint_triples, 2);
    }

    #[test]
    fn euclidean_convexity_is_strict_off_the_line() {
        let cloud = PointCloud::euclidean(vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![1.0, 0.0], vec![1.0, 3.0]]).unwrap();
        let space = cloud.metric_space();
        assert!(check_distance_convexity(&space, 0, 1, 2, 3, TOL).unwrap());
        let lhs = *space.dist(2, 3);
        let rhs = (space.dist(0, 3) + space.dist(1, 3)) / 2.0;
        assert!(lhs < rhs - 0.1);
    }

    #[test]
    fn sampled_scan_is_reproducible() {
        let ranks = sample_ranks(1000, 10, 42);
        assert_eq!(ranks.len(), 10);
        assert_eq!(ranks, sample_ranks(1000, 10, 42));
        assert!(ranks.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(sample_ranks(15, 100, 1), (0..15).collect::<Vec<_>>());
    }
}
