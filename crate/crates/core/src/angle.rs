//! Comparison angles, generalized angles at scale and weak angles in normed planes.
//!
//! A normed plane is its own blow-up: `|a s u - b s v| = s |a u - b v|`, so the
//! generalized angle at scale `(a, b)` is a single comparison angle.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::model::NormedPlane;
use crate::scalar::Scalar;

pub const DEFAULT_ANGULAR_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_SCALE_GRID: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

/// Unit length is checked to this relative accuracy.
const UNIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AngleError {
    #[error("side lengths must be positive, got ({0}, {1})")]
    ZeroSide(f64, f64),
    #[error("sides ({0}, {1}, {2}) violate the triangle inequality")]
    TriangleViolated(f64, f64, f64),
    #[error("direction {which} has norm {norm}, expected 1")]
    NonUnit { which: &'static str, norm: f64 },
    #[error("scales must be positive and finite, got ({0}, {1})")]
    BadScale(f64, f64),
    #[error("scale grid must be nonempty")]
    EmptyGrid,
    #[error("directions {i} and {j} have no weak angle: angle gap {gap} between ratios {ratios:?}")]
    NoWeakAngle {
        i: usize,
        j: usize,
        gap: f64,
        ratios: [f64; 2],
    },
}

/// `(dpx^2 + dpy^2 - dxy^2) / (2 dpx dpy)` without clamping.
pub fn law_of_cosines(dpx: f64, dpy: f64, dxy: f64) -> f64 {
    (dpx * dpx + dpy * dpy - dxy * dxy) / (2.0 * dpx * dpy)
}

/// Angle at `p` of the Euclidean triangle with sides `dpx`, `dpy`, `dxy`.
///
/// Evaluated with Kahan's cancellation-free half-angle formula, which agrees
/// with the clamped arccos of [`law_of_cosines`] and stays accurate near 0 and pi.
/// Triangle inequalities are accepted up to the relative tolerance `1e-9`.
pub fn comparison_angle(dpx: f64, dpy: f64, dxy: f64) -> Result<f64, AngleError> {
    let tol = crate::DEFAULT_TOLERANCE;
    if !(dpx > 0.0 && dpy > 0.0) || !dpx.is_finite() || !dpy.is_finite() {
        return Err(AngleError::ZeroSide(dpx, dpy));
    }
    let ok = dxy >= 0.0
        && dxy.approx_le(&(dpx + dpy), tol)
        && dpx.approx_le(&(dpy + dxy), tol)
        && dpy.approx_le(&(dpx + dxy), tol);
    if !ok {
        return Err(AngleError::TriangleViolated(dpx, dpy, dxy));
    }
    let (a, b) = if dpx >= dpy { (dpx, dpy) } else { (dpy, dpx) };
    let c = dxy;
    let mu = if b >= c { c - (a - b) } else { b - (a - c) };
    let num = ((a - b) + c) * mu.max(0.0);
    let den = (a + (b + c)) * ((a - c) + b);
    if den <= 0.0 {
        return Ok(std::f64::consts::PI);
    }
    Ok(2.0 * (num / den).sqrt().atan())
}

fn check_unit(plane: &NormedPlane, v: [f64; 2], which: &'static str) -> Result<(), AngleError> {
    let norm = plane.length(v);
    if (norm - 1.0).abs() > UNIT_TOLERANCE {
        return Err(AngleError::NonUnit { which, norm });
    }
    Ok(())
}

fn angle_unchecked(plane: &NormedPlane, u: [f64; 2], v: [f64; 2], a: f64, b: f64) -> Result<f64, AngleError> {
    // Distances cannot resolve an angle within ~sqrt(eps) of 0 or pi, so
    // directions collinear up to rounding are treated as exactly collinear.
    let cross = u[0] * v[1] - u[1] * v[0];
    if cross.abs() <= 4.0 * f64::EPSILON * u[0].hypot(u[1]) * v[0].hypot(v[1]) {
        let same = u[0] * v[0] + u[1] * v[1] > 0.0;
        return Ok(if same { 0.0 } else { std::f64::consts::PI });
    }
    let c = plane.length([a * u[0] - b * v[0], a * u[1] - b * v[1]]);
    comparison_angle(a, b, c)
}

/// Angle between the rays `t u` and `t v` at scale `(a, b)`.
pub fn generalized_angle(plane: &NormedPlane, u: [f64; 2], v: [f64; 2], a: f64, b: f64) -> Result<f64, AngleError> {
    check_unit(plane, u, "u")?;
    check_unit(plane, v, "v")?;
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(AngleError::BadScale(a, b));
    }
    angle_unchecked(plane, u, v, a, b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaleSample {
    /// `a / b` with `b = 1`.
    pub ratio: f64,
    pub angle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum WeakAngle {
    /// All samples agree; the value is their mean.
    Exists { value: f64 },
    /// Two scales whose angles differ by more than the tolerance.
    Fails { witness: [ScaleSample; 2], gap: f64 },
}

impl WeakAngle {
    pub fn value(&self) -> Option<f64> {
        match self {
            WeakAngle::Exists { value } => Some(*value),
            WeakAngle::Fails { .. } => None,
        }
    }
}

/// Weak-angle sampling for one direction pair. `exists` only means that no
/// disagreement was found on the sampled grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AngleProfile {
    pub check: &'static str,
    pub plane: NormedPlane,
    pub u: [f64; 2],
    pub v: [f64; 2],
    pub samples: Vec<ScaleSample>,
    pub max_gap: f64,
    #[serde(flatten)]
    pub weak_angle: WeakAngle,
    pub angular_tolerance: f64,
}

impl AngleProfile {
    pub fn passed(&self) -> bool {
        matches!(self.weak_angle, WeakAngle::Exists { .. })
    }
}

fn log_distance(r: f64, s: f64) -> f64 {
    (r.ln() - s.ln()).abs()
}

/// Samples the generalized angle at scales `(r, 1)` for each grid ratio `r`.
///
/// On failure the witness pairs the ratio closest to 1 (log scale) with the
/// nearest ratio whose angle differs from it by more than the tolerance.
pub fn weak_angle_profile(
    plane: &NormedPlane,
    u: [f64; 2],
    v: [f64; 2],
    grid: &[f64],
    angular_tol: f64,
) -> Result<AngleProfile, AngleError> {
    check_unit(plane, u, "u")?;
    check_unit(plane, v, "v")?;
    if grid.is_empty() {
        return Err(AngleError::EmptyGrid);
    }
    let samples = grid
        .par_iter()
        .map(|&r| {
            if !(r > 0.0 && r.is_finite()) {
                return Err(AngleError::BadScale(r, 1.0));
            }
            angle_unchecked(plane, u, v, r, 1.0).map(|angle| ScaleSample { ratio: r, angle })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut max_gap = 0.0f64;
    let mut widest = (0, 0);
    for i in 0..samples.len() {
        for j in (i + 1)..samples.len() {
            let gap = (samples[i].angle - samples[j].angle).abs();
            if gap > max_gap {
                max_gap = gap;
                widest = (i, j);
            }
        }
    }

    let weak_angle = if max_gap <= angular_tol {
        let value = samples.iter().map(|s| s.angle).sum::<f64>() / samples.len() as f64;
        WeakAngle::Exists { value }
    } else {
        let nearest = |from: f64, candidates: &mut dyn Iterator<Item = usize>| {
            candidates.min_by(|&i, &j| {
                let (ri, rj) = (samples[i].ratio, samples[j].ratio);
                log_distance(ri, from)
                    .total_cmp(&log_distance(rj, from))
                    .then(ri.total_cmp(&rj))
            })
        };
        let reference = nearest(1.0, &mut (0..samples.len())).expect("grid is nonempty");
        let ref_ratio = samples[reference].ratio;
        let partner = nearest(
            ref_ratio,
            &mut (0..samples.len()).filter(|&k| (samples[k].angle - samples[reference].angle).abs() > angular_tol),
        );
        let (i, j) = partner.map_or(widest, |k| (reference, k));
        WeakAngle::Fails {
            witness: [samples[i], samples[j]],
            gap: (samples[i].angle - samples[j].angle).abs(),
        }
    };

    Ok(AngleProfile {
        check: "weak-angle",
        plane: plane.clone(),
        u,
        v,
        samples,
        max_gap,
        weak_angle,
        angular_tolerance: angular_tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomResult {
    pub axiom: &'static str,
    pub passed: bool,
    pub checked: usize,
    pub max_error: f64,
    /// Direction indices of the worst case; an index `i + n` stands for `-u_i`.
    pub witness: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    pub check: &'static str,
    pub passed: bool,
    pub directions: Vec<[f64; 2]>,
    /// Weak angle between each ordered pair of directions.
    pub angles: Vec<Vec<f64>>,
    pub axioms: Vec<AxiomResult>,
    pub angular_tolerance: f64,
}

struct Tally {
    axiom: &'static str,
    checked: usize,
    max_error: f64,
    witness: Option<Vec<usize>>,
}

impl Tally {
    fn new(axiom: &'static str) -> Self {
        Self {
            axiom,
            checked: 0,
            max_error: 0.0,
            witness: None,
        }
    }

    fn record(&mut self, error: f64, indices: &[usize]) {
        self.checked += 1;
        if error > self.max_error || self.witness.is_none() {
            self.max_error = self.max_error.max(error);
            self.witness = Some(indices.to_vec());
        }
    }

    fn finish(self, tol: f64) -> AxiomResult {
        AxiomResult {
            axiom: self.axiom,
            passed: self.max_error <= tol,
            checked: self.checked,
            max_error: self.max_error,
            witness: self.witness,
        }
    }
}

/// Checks symmetry, the triangle inequality, zero self-angle and pi for
/// opposite directions over a set of unit directions. Every pair must have a
/// weak angle on `grid`; the first pair without one is reported as an error.
pub fn angle_axiom_suite(
    plane: &NormedPlane,
    directions: &[[f64; 2]],
    grid: &[f64],
    angular_tol: f64,
) -> Result<AxiomReport, AngleError> {
    let n = directions.len();
    let weak = |i: usize, j: usize, u: [f64; 2], v: [f64; 2]| -> Result<f64, AngleError> {
        let profile = weak_angle_profile(plane, u, v, grid, angular_tol)?;
        match profile.weak_angle {
            WeakAngle::Exists { value } => Ok(value),
            WeakAngle::Fails { witness, gap } => Err(AngleError::NoWeakAngle {
                i,
                j,
                gap,
                ratios: [witness[0].ratio, witness[1].ratio],
            }),
        }
    };
    let mut angles = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            angles[i][j] = weak(i, j, directions[i], directions[j])?;
        }
    }
    let opposite = (0..n)
        .map(|i| {
            let u = directions[i];
            weak(i, i + n, u, [-u[0], -u[1]])
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut symmetry = Tally::new("symmetry");
    let mut triangle = Tally::new("triangle");
    let mut zero = Tally::new("zero");
    let mut straight = Tally::new("opposite");
    for i in 0..n {
        zero.record(angles[i][i].abs(), &[i, i]);
        straight.record((opposite[i] - std::f64::consts::PI).abs(), &[i, i + n]);
        for j in 0..n {
            symmetry.record((angles[i][j] - angles[j][i]).abs(), &[i, j]);
            for k in 0..n {
                let excess = angles[i][k] - angles[i][j] - angles[j][k];
                triangle.record(excess.max(0.0), &[i, j, k]);
            }
        }
    }
    let axioms: Vec<AxiomResult> = [symmetry, triangle, zero, straight]
        .into_iter()
        .map(|t| t.finish(angular_tol))
        .collect();
    Ok(AxiomReport {
        check: "angle-axioms",
        passed: axioms.iter().all(|a| a.passed),
        directions: directions.to_vec(),
        angles,
        axioms,
        angular_tolerance: angular_tol,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, PI};

    use proptest::prelude::*;

    use super::*;

    const TOL: f64 = DEFAULT_ANGULAR_TOLERANCE;

    fn unit(theta: f64) -> [f64; 2] {
        [theta.cos(), theta.sin()]
    }

    #[test]
    fn comparison_angle_examples() {
        assert!((comparison_angle(1.0, 1.0, 1.0).unwrap() - PI / 3.0).abs() < 1e-15);
        assert!((comparison_angle(3.0, 4.0, 5.0).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(comparison_angle(1.0, 1.0, 2.0).unwrap(), PI);
        assert_eq!(comparison_angle(2.0, 1.0, 1.0).unwrap(), 0.0);
        assert_eq!(comparison_angle(0.0, 1.0, 1.0), Err(AngleError::ZeroSide(0.0, 1.0)));
        assert!(matches!(comparison_angle(1.0, 1.0, 3.0), Err(AngleError::TriangleViolated(..))));
        assert!(matches!(comparison_angle(5.0, 1.0, 1.0), Err(AngleError::TriangleViolated(..))));
    }

    #[test]
    fn generalized_angle_examples() {
        let e = NormedPlane::euclidean();
        for (a, b) in [(1.0, 1.0), (0.3, 7.0), (4.0, 0.25)] {
            let theta = generalized_angle(&e, [1.0, 0.0], [0.0, 1.0], a, b).unwrap();
            assert!((theta - FRAC_PI_2).abs() < 1e-14);
        }
        let max = NormedPlane::max_norm();
        let (x, y) = ([1.0, 0.0], [0.0, 1.0]);
        assert!((generalized_angle(&max, x, y, 1.0, 1.0).unwrap() - PI / 3.0).abs() < 1e-15);
        assert!((generalized_angle(&max, x, y, 2.0, 1.0).unwrap() - 0.25f64.acos()).abs() < 1e-15);
        assert!(matches!(
            generalized_angle(&max, [2.0, 0.0], y, 1.0, 1.0),
            Err(AngleError::NonUnit { which: "u", .. })
        ));
        assert!(matches!(generalized_angle(&max, x, y, 0.0, 1.0), Err(AngleError::BadScale(..))));
    }

    #[test]
    fn weak_angle_examples() {
        let max = NormedPlane::max_norm();
        let p = weak_angle_profile(&max, [1.0, 0.0], [0.0, 1.0], &[1.0, 2.0], TOL).unwrap();
        let WeakAngle::Fails { witness, gap } = p.weak_angle else {
            panic!("expected failure: {p:?}");
        };
        assert_eq!(witness[0].ratio, 1.0);
        assert_eq!(witness[1].ratio, 2.0);
        assert!((gap - (PI / 3.0 - 0.25f64.acos()).abs()).abs() < 1e-15);

        let full = weak_angle_profile(&max, [1.0, 0.0], [0.0, 1.0], &DEFAULT_SCALE_GRID, TOL).unwrap();
        let WeakAngle::Fails { witness, gap } = full.weak_angle else {
            panic!("expected failure");
        };
        assert_eq!([witness[0].ratio, witness[1].ratio], [1.0, 0.5]);
        assert!((gap - 0.2709).abs() < 1e-4);
        assert!(full.max_gap > gap);

        for plane in [NormedPlane::euclidean(), max, NormedPlane::p_norm(1.0).unwrap()] {
            let u = plane.normalize([0.3, -0.8]);
            let same = weak_angle_profile(&plane, u, u, &DEFAULT_SCALE_GRID, TOL).unwrap();
            assert_eq!(same.weak_angle, WeakAngle::Exists { value: 0.0 });
        }
        let e = NormedPlane::euclidean();
        assert_eq!(
            weak_angle_profile(&e, [1.0, 0.0], [0.0, 1.0], &[], TOL).unwrap_err(),
            AngleError::EmptyGrid
        );
    }

    #[test]
    fn euclidean_weak_angle_is_the_usual_angle() {
        let e = NormedPlane::euclidean();
        for (s, t) in [(0.0, 0.7), (1.0, 3.0), (2.0, 2.0 + 1e-6), (0.5, 0.5 + PI - 1e-5)] {
            let p = weak_angle_profile(&e, unit(s), unit(t), &DEFAULT_SCALE_GRID, TOL).unwrap();
            let value = p.weak_angle.value().expect("exists");
            let expected = (t - s).abs().min(2.0 * PI - (t - s).abs());
            assert!((value - expected).abs() < 1e-9, "{s} {t}: {value} vs {expected}");
        }
    }

    #[test]
    fn axiom_suite() {
        let e = NormedPlane::euclidean();
        let dirs: Vec<[f64; 2]> = (0..8).map(|k| unit(k as f64 * PI / 4.0)).collect();
        let r = angle_axiom_suite(&e, &dirs, &DEFAULT_SCALE_GRID, TOL).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.axioms.len(), 4);
        assert_eq!(r.axioms[1].checked, 512);
        assert!((r.angles[0][4] - PI).abs() < 1e-12);

        let max = NormedPlane::max_norm();
        let err = angle_axiom_suite(&max, &[[1.0, 0.0], [0.0, 1.0]], &DEFAULT_SCALE_GRID, TOL).unwrap_err();
        assert!(matches!(err, AngleError::NoWeakAngle { i: 0, j: 1, .. }));

        // a single direction: only self and opposite angles, valid in any plane
        let r = angle_axiom_suite(&max, &[[1.0, 0.5]], &DEFAULT_SCALE_GRID, TOL).unwrap();
        assert!(r.passed);
        assert_eq!(r.angles[0][0], 0.0);
    }

    proptest! {
        #[test]
        fn angles_lie_in_range_and_match_clamped_cosine(
            a in 0.01f64..10.0, b in 0.01f64..10.0, t in 0.0f64..=1.0
        ) {
            let c = (a - b).abs() + t * (a + b - (a - b).abs());
            let theta = comparison_angle(a, b, c).unwrap();
            prop_assert!((0.0..=PI).contains(&theta));
            let raw = law_of_cosines(a, b, c);
            prop_assert!(raw.abs() <= 1.0 + 1e-9);
            prop_assert!((theta.cos() - raw.clamp(-1.0, 1.0)).abs() < 1e-9);
        }

        #[test]
        fn normed_distances_scale_linearly(
            p in 1.0f64..6.0, s in 0.001f64..1000.0,
            u in (-1.0f64..1.0, -1.0f64..1.0), v in (-1.0f64..1.0, -1.0f64..1.0),
            a in 0.1f64..4.0, b in 0.1f64..4.0,
        ) {
            let plane = NormedPlane::p_norm(p).unwrap();
            let base = plane.distance([a * u.0, a * u.1], [b * v.0, b * v.1]);
            let scaled = plane.distance([s * a * u.0, s * a * u.1], [s * b * v.0, s * b * v.1]) / s;
            prop_assert!((base - scaled).abs() <= 1e-12 * base.max(1.0));
        }

        #[test]
        fn euclidean_profiles_always_exist(s in 0.0f64..std::f64::consts::TAU, t in 0.0f64..std::f64::consts::TAU) {
            let e = NormedPlane::euclidean();
            let p = weak_angle_profile(&e, unit(s), unit(t), &DEFAULT_SCALE_GRID, TOL).unwrap();
            prop_assert!(p.passed(), "{:?}", p);
            prop_assert!(p.samples.iter().all(|x| (0.0..=PI).contains(&x.angle)));
        }
    }
}
