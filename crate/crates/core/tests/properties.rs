use proptest::prelude::*;
use ptolemy_core::completion::complete_once;
use ptolemy_core::completion::DEFAULT_CAP;
use ptolemy_core::io::{space_from_json, space_to_json, AnySpace};
use ptolemy_core::model::{apply_inversion, flatness_embed, PointCloud};
use ptolemy_core::ptolemy::{check_mobius_equivalence, satisfied_flags};
use ptolemy_core::quadruple::{enumerate_quadruples, quadruple_count};
use ptolemy_core::{check_ptolemy, validate, Exact, FiniteMetricSpace, Scalar, Strategy as Scan, DEFAULT_TOLERANCE as TOL};

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("q{i}")).collect()
}

/// Rational matrices with off-diagonal entries `k / 16` for `k` in `lo..=hi`.
/// With `16 <= lo` and `hi <= 32` every such matrix is a metric.
fn exact_matrix(n: std::ops::RangeInclusive<usize>, lo: i64, hi: i64) -> impl Strategy<Value = FiniteMetricSpace<Exact>> {
    n.prop_flat_map(move |n| proptest::collection::vec(lo..=hi, n * (n - 1) / 2)).prop_map(|ks| {
        let n = (1..).find(|m| m * (m - 1) / 2 == ks.len()).unwrap();
        let mut it = ks.into_iter();
        FiniteMetricSpace::from_fn(labels(n), |_, _| Exact::from_ratio(it.next().unwrap(), 16)).unwrap()
    })
}

/// Entries in `[1, 7/5]`: every Ptolemy product lies in `[1, 49/25]`, so the
/// largest is below the sum of the other two.
fn ptolemy_matrix(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = FiniteMetricSpace<Exact>> {
    exact_matrix(n, 16, 22)
}

fn cloud(n: std::ops::RangeInclusive<usize>, dim: usize) -> impl Strategy<Value = PointCloud> {
    n.prop_flat_map(move |n| proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, dim), n))
        .prop_map(|points| PointCloud::euclidean(points).unwrap())
}

fn well_separated(c: &PointCloud) -> bool {
    let s = c.metric_space();
    (0..s.len()).all(|i| (0..i).all(|j| *s.dist(i, j) > 1e-3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn scaling_preserves_verdicts(space in exact_matrix(4..=7, 16, 32), k in 1i64..50, m in 1i64..50) {
        let factor = Exact::from_ratio(k, m);
        let scaled = space.scaled(&factor);
        prop_assert_eq!(satisfied_flags(&space, TOL), satisfied_flags(&scaled, TOL));
        let a = check_ptolemy(&space, Scan::Exhaustive, TOL);
        let b = check_ptolemy(&scaled, Scan::Exhaustive, TOL);
        prop_assert_eq!(a.passed, b.passed);
        let (wa, wb) = (a.worst.unwrap(), b.worst.unwrap());
        prop_assert_eq!(wa.quadruple, wb.quadruple);
        prop_assert_eq!(wa.defect, wb.defect);
    }

    #[test]
    fn ptolemy_is_hereditary(space in ptolemy_matrix(4..=8), mask in proptest::collection::vec(any::<bool>(), 8)) {
        prop_assert!(check_ptolemy(&space, Scan::Exhaustive, TOL).passed);
        let keep: Vec<usize> = (0..space.len()).filter(|&i| mask[i]).collect();
        let sub = space.subspace(&keep).unwrap();
        prop_assert!(check_ptolemy(&sub, Scan::Exhaustive, TOL).passed);
    }

    #[test]
    fn failures_are_witnessed_in_subspaces(space in exact_matrix(4..=8, 16, 32)) {
        let report = check_ptolemy(&space, Scan::Exhaustive, TOL);
        let worst = report.worst.unwrap();
        let sub = space.subspace(&worst.quadruple.0).unwrap();
        let sub_report = check_ptolemy(&sub, Scan::Exhaustive, TOL);
        prop_assert_eq!(sub_report.passed, report.passed);
        prop_assert_eq!(sub_report.worst.unwrap().defect, worst.defect);
    }

    #[test]
    fn sampling_agrees_with_exhaustive_scan(space in exact_matrix(4..=12, 16, 32), count in 1u64..600, seed in any::<u64>()) {
        let float: FiniteMetricSpace<f64> = space.convert().unwrap();
        let full = check_ptolemy(&float, Scan::Exhaustive, TOL);
        let sampled = check_ptolemy(&float, Scan::Sampled { count, seed }, TOL);
        let total = quadruple_count(float.len());
        prop_assert_eq!(sampled.checked, count.min(total));
        if !sampled.passed {
            prop_assert!(!full.passed);
        }
        prop_assert!(sampled.worst.as_ref().unwrap().defect <= full.worst.as_ref().unwrap().defect);
        if count >= total {
            prop_assert_eq!(sampled.passed, full.passed);
            prop_assert_eq!(sampled.worst.unwrap().quadruple, full.worst.unwrap().quadruple);
        }
        // exact and float verdicts agree on these well-separated rationals
        prop_assert_eq!(check_ptolemy(&space, Scan::Exhaustive, TOL).passed, full.passed);
    }

    #[test]
    fn completion_preserves_metric(space in exact_matrix(1..=10, 16, 32)) {
        prop_assert!(validate(&space).passed);
        let m = complete_once(&space, DEFAULT_CAP).unwrap();
        prop_assert_eq!(m.space().len(), space.len() * (space.len() + 1) / 2);
        prop_assert!(validate(m.space()).passed);
        for x in 0..space.len() {
            for y in 0..space.len() {
                let (ex, ey) = (m.embedding(x), m.embedding(y));
                prop_assert_eq!(m.space().dist(ex, ey), space.dist(x, y));
            }
        }
    }

    #[test]
    fn completion_preserves_ptolemy(space in ptolemy_matrix(4..=8)) {
        let m = complete_once(&space, DEFAULT_CAP).unwrap();
        let report = check_ptolemy(m.space(), Scan::Exhaustive, TOL);
        prop_assert!(report.passed, "{:?}", report.worst);
        prop_assert_eq!(report.checked, quadruple_count(m.space().len()));
    }

    #[test]
    fn euclidean_clouds_embed_isometrically(c in cloud(2..=12, 3)) {
        let r = flatness_embed(&c.metric_space(), 3, TOL);
        prop_assert!(r.success, "{:?}", r);
        prop_assert!(r.dimension <= 3);
        prop_assert!(r.residual < 1e-9 * 20.0);
    }

    #[test]
    fn inversion_is_mobius(c in cloud(4..=9, 2), center in proptest::collection::vec(-8.0f64..8.0, 2)) {
        prop_assume!(c.points.iter().all(|p| (p[0] - center[0]).hypot(p[1] - center[1]) > 0.05));
        prop_assume!(well_separated(&c));
        let image = apply_inversion(&c, &center).unwrap();
        let (a, b) = (c.metric_space(), image.metric_space());
        let report = check_mobius_equivalence(&a, &b, 1e-6).unwrap();
        prop_assert!(report.passed, "{:?}", report.worst);
        prop_assert_eq!(satisfied_flags(&a, TOL), satisfied_flags(&b, TOL));
    }

    #[test]
    fn validation_and_documents_are_stable(space in exact_matrix(1..=8, 8, 40)) {
        let first = validate(&space);
        prop_assert_eq!(&first, &validate(&space));
        prop_assert_eq!(first.passed, first.violation_count == 0);
        let doc = space_to_json(&space);
        prop_assert_eq!(space_from_json(&doc, None).unwrap(), AnySpace::Exact(space.clone()));
        let text = serde_json::to_string(&doc).unwrap();
        prop_assert_eq!(serde_json::to_string(&space_to_json(&space)).unwrap(), text);
    }
}

#[test]
fn quadruple_enumeration_is_lexicographic() {
    let all: Vec<_> = enumerate_quadruples(7).collect();
    assert_eq!(all.len() as u64, quadruple_count(7));
    assert!(all.windows(2).all(|w| w[0].0 < w[1].0));
}
