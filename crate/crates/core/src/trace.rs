//! Finite inequalities along two geodesics with common endpoints.
//!
//! Given `p-`, `p+` at distance `L` and two geodesics `x_s`, `y_s` from `p-`
//! to `p+` with midpoints `m_s` of `x_s y_s`, the following hold for
//! `0 < s < t <= L` in any Ptolemy space:
//!
//! ```text
//! (a) |m_s x_t| + |m_s y_t| >= |x_t y_t|
//! (b) |m_t x_s| + |m_t y_s| >= (t/s) |x_s y_s|
//! (c) |m_s x_t||m_t x_s| + |m_s y_t||m_t y_s| <= 1/2 |x_s y_s||x_t y_t| + 2 (t-s) |m_s m_t|
//! ```
//!
//! (a) is the triangle inequality, (b) follows from the Ptolemy inequality on
//! `(p-, x_s, m_t, y_s)` once `|p- m_t| = t`, and (c) from the Ptolemy
//! inequality on `(m_s, x_t, m_t, x_s)` and `(m_s, y_t, m_t, y_s)`.

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::metric::{FiniteMetricSpace, SpaceError};
use crate::ptolemy::is_midpoint;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error("parameter {0} is not in (0, L]")]
    ParameterOutOfRange(String),
    #[error("`{label}` is not between the endpoints: |p-p+| != |p-x| + |xp+|")]
    NotBetween { label: String },
    #[error("`{label}` is not at distance {param} from p-")]
    WrongParameter { label: String, param: String },
    #[error("`{m}` is not a midpoint of `{x}` and `{y}`")]
    NotMidpoint { x: String, y: String, m: String },
    #[error("chain is not geodesic between parameters {s} and {t}")]
    NotGeodesic { s: String, t: String },
    #[error("no chain sample at parameter {0}")]
    MissingSample(String),
    #[error("need 0 < s < t, got s = {s}, t = {t}")]
    BadOrder { s: String, t: String },
    #[error("duplicate chain sample at parameter {0}")]
    DuplicateSample(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// The chain points at one parameter value.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSample<S> {
    pub param: S,
    pub x: usize,
    pub y: usize,
    pub midpoint: usize,
}

/// Two geodesics `x_s`, `y_s` from `p-` to `p+`, sampled at finitely many parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct BigonConfig<S> {
    space: FiniteMetricSpace<S>,
    p_minus: usize,
    p_plus: usize,
    samples: Vec<ChainSample<S>>,
    tol: f64,
}

impl<S: Scalar> BigonConfig<S> {
    /// Validates the configuration.
    ///
    /// Every sample must lie between the endpoints at the right parameter,
    /// carry a genuine midpoint, and both chains must be geodesic:
    /// `|x_s x_t| = |y_s y_t| = |t - s|`.
    pub fn new(
        space: FiniteMetricSpace<S>,
        p_minus: usize,
        p_plus: usize,
        samples: Vec<ChainSample<S>>,
        tol: f64,
    ) -> Result<Self, TraceError> {
        space.check_index(p_minus)?;
        space.check_index(p_plus)?;
        let length = space.dist(p_minus, p_plus).clone();
        let label = |i: usize| space.label(i).to_owned();

        for (k, sample) in samples.iter().enumerate() {
            for i in [sample.x, sample.y, sample.midpoint] {
                space.check_index(i)?;
            }
            let s = &sample.param;
            if !s.is_positive() || !s.approx_le(&length, tol) {
                return Err(TraceError::ParameterOutOfRange(s.to_string()));
            }
            if samples[..k].iter().any(|o| o.param == *s) {
                return Err(TraceError::DuplicateSample(s.to_string()));
            }
            for point in [sample.x, sample.y] {
                let via = space.dist(p_minus, point).plus(space.dist(point, p_plus));
                if !via.approx_eq(&length, tol) {
                    return Err(TraceError::NotBetween { label: label(point) });
                }
                if !space.dist(p_minus, point).approx_eq(s, tol) {
                    return Err(TraceError::WrongParameter {
                        label: label(point),
                        param: s.to_string(),
                    });
                }
            }
            if !is_midpoint(&space, sample.x, sample.y, sample.midpoint, tol) {
                return Err(TraceError::NotMidpoint {
                    x: label(sample.x),
                    y: label(sample.y),
                    m: label(sample.midpoint),
                });
            }
            for other in &samples[..k] {
                let gap = s.abs_diff(&other.param);
                let geodesic = space.dist(sample.x, other.x).approx_eq(&gap, tol)
                    && space.dist(sample.y, other.y).approx_eq(&gap, tol);
                if !geodesic {
                    return Err(TraceError::NotGeodesic {
                        s: other.param.to_string(),
                        t: s.to_string(),
                    });
                }
            }
        }
        Ok(Self {
            space,
            p_minus,
            p_plus,
            samples,
            tol,
        })
    }

    pub fn space(&self) -> &FiniteMetricSpace<S> {
        &self.space
    }

    pub fn endpoints(&self) -> (usize, usize) {
        (self.p_minus, self.p_plus)
    }

    pub fn samples(&self) -> &[ChainSample<S>] {
        &self.samples
    }

    pub fn length(&self) -> &S {
        self.space.dist(self.p_minus, self.p_plus)
    }

    fn sample(&self, param: &S) -> Result<&ChainSample<S>, TraceError> {
        self.samples
            .iter()
            .find(|c| c.param.approx_eq(param, self.tol))
            .ok_or_else(|| TraceError::MissingSample(param.to_string()))
    }
}

/// One inequality `lhs (<= | >=) rhs` with its slack (nonnegative when it holds).
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityTrace<S> {
    pub name: &'static str,
    pub lhs: S,
    pub rhs: S,
    pub slack: S,
    pub holds: bool,
}

impl<S: Scalar> Serialize for InequalityTrace<S> {
    fn serialize<Ser: Serializer>(&self, serializer: Ser) -> Result<Ser::Ok, Ser::Error> {
        let mut st = serializer.serialize_struct("InequalityTrace", 5)?;
        st.serialize_field("name", self.name)?;
        st.serialize_field("lhs", &self.lhs.to_json())?;
        st.serialize_field("rhs", &self.rhs.to_json())?;
        st.serialize_field("slack", &self.slack.to_json())?;
        st.serialize_field("holds", &self.holds)?;
        st.end()
    }
}

impl<S: Scalar> InequalityTrace<S> {
    fn at_least(name: &'static str, lhs: S, rhs: S, tol: f64) -> Self {
        let holds = rhs.approx_le(&lhs, tol);
        let slack = lhs.minus(&rhs);
        Self { name, lhs, rhs, slack, holds }
    }

    fn at_most(name: &'static str, lhs: S, rhs: S, tol: f64) -> Self {
        let holds = lhs.approx_le(&rhs, tol);
        let slack = rhs.minus(&lhs);
        Self { name, lhs, rhs, slack, holds }
    }

    pub fn is_equality(&self) -> bool {
        self.slack.is_zero()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceReport<S> {
    pub s: S,
    pub t: S,
    pub passed: bool,
    /// Triangle bound at `m_s`.
    pub triangle: InequalityTrace<S>,
    /// Lower bound on `|m_t x_s| + |m_t y_s|`.
    pub spread: InequalityTrace<S>,
    /// Product bound from the two Ptolemy quadruples.
    pub product: InequalityTrace<S>,
    /// Ptolemy on `(p-, x_s, m_t, y_s)` with `|p- m_t| = t`, `|p- x_s| = |p- y_s| = s`;
    /// it implies `spread`, so a Ptolemy space shows both holding together.
    pub spread_support: InequalityTrace<S>,
}

impl<S: Scalar> Serialize for TraceReport<S> {
    fn serialize<Ser: Serializer>(&self, serializer: Ser) -> Result<Ser::Ok, Ser::Error> {
        let mut st = serializer.serialize_struct("TraceReport", 8)?;
        st.serialize_field("check", "trace")?;
        st.serialize_field("s", &self.s.to_json())?;
        st.serialize_field("t", &self.t.to_json())?;
        st.serialize_field("passed", &self.passed)?;
        st.serialize_field("triangle", &self.triangle)?;
        st.serialize_field("spread", &self.spread)?;
        st.serialize_field("product", &self.product)?;
        st.serialize_field("spread_support", &self.spread_support)?;
        st.end()
    }
}

/// Evaluates the three inequalities at parameters `0 < s < t`.
pub fn bigon_trace<S: Scalar>(config: &BigonConfig<S>, s: &S, t: &S) -> Result<TraceReport<S>, TraceError> {
    if !s.is_positive() || s.total_cmp(t) != std::cmp::Ordering::Less {
        return Err(TraceError::BadOrder {
            s: s.to_string(),
            t: t.to_string(),
        });
    }
    let tol = config.tol;
    let d = |a: usize, b: usize| config.space.dist(a, b);
    let at_s = config.sample(s)?;
    let at_t = config.sample(t)?;
    let (xs, ys, ms) = (at_s.x, at_s.y, at_s.midpoint);
    let (xt, yt, mt) = (at_t.x, at_t.y, at_t.midpoint);
    let (s, t) = (&at_s.param, &at_t.param);

    let triangle = InequalityTrace::at_least("triangle", d(ms, xt).plus(d(ms, yt)), d(xt, yt).clone(), tol);

    let ratio = t.divide(s);
    let spread = InequalityTrace::at_least("spread", d(mt, xs).plus(d(mt, ys)), ratio.times(d(xs, ys)), tol);

    let two = S::from_ratio(2, 1);
    let product = InequalityTrace::at_most(
        "product",
        d(ms, xt).times(d(mt, xs)).plus(&d(ms, yt).times(d(mt, ys))),
        d(xs, ys)
            .times(d(xt, yt))
            .half()
            .plus(&two.times(&t.minus(s)).times(d(ms, mt))),
        tol,
    );

    let spread_support = InequalityTrace::at_most(
        "spread_support",
        t.times(d(xs, ys)),
        d(mt, xs).times(s).plus(&d(mt, ys).times(s)),
        tol,
    );

    Ok(TraceReport {
        s: s.clone(),
        t: t.clone(),
        passed: triangle.holds && spread.holds && product.holds,
        triangle,
        spread,
        product,
        spread_support,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::completion::{complete_once, PairLabel};
    use crate::model::{gen_paper_four_point, PointCloud};
    use crate::scalar::Exact;
    use crate::DEFAULT_TOLERANCE as TOL;

    fn q(n: i64, d: i64) -> Exact {
        Exact::from_ratio(n, d)
    }

    fn pair_space_config() -> BigonConfig<Exact> {
        let pairs = complete_once(&gen_paper_four_point(), 5000).unwrap();
        let idx = |a: usize, b: usize| pairs.index_of(PairLabel::new(a, b)).unwrap();
        let (x, y, m1, m2) = (0, 1, 2, 3);
        let samples = vec![
            ChainSample {
                param: q(1, 1),
                x: idx(m1, m1),
                y: idx(m2, m2),
                midpoint: idx(m1, m2),
            },
            ChainSample {
                param: q(2, 1),
                x: idx(y, y),
                y: idx(y, y),
                midpoint: idx(y, y),
            },
        ];
        BigonConfig::new(pairs.space().clone(), idx(x, x), idx(y, y), samples, TOL).unwrap()
    }

    #[test]
    fn pair_space_config_attains_equality() {
        let config = pair_space_config();
        let report = bigon_trace(&config, &q(1, 1), &q(2, 1)).unwrap();
        assert!(report.passed);
        // |y m1| + |y m2| = 2 >= (2/1) |m1 m2| = 2
        assert_eq!(report.spread.lhs, q(2, 1));
        assert_eq!(report.spread.rhs, q(2, 1));
        assert!(report.spread.is_equality());
        // 1*1 + 1*1 = 2 <= 1/2 * 1 * 0 + 2 * 1 * |{m1,m2} y| = 2
        assert_eq!(report.product.lhs, q(2, 1));
        assert_eq!(report.product.rhs, q(2, 1));
        assert!(report.product.is_equality());
        assert!(report.triangle.holds);
        assert!(report.spread_support.holds);
    }

    #[test]
    fn single_euclidean_geodesic() {
        let cloud = PointCloud::euclidean(vec![vec![0.0, 0.0], vec![4.0, 0.0], vec![1.0, 0.0], vec![3.0, 0.0]]).unwrap();
        let space = cloud.metric_space();
        let samples = vec![
            ChainSample { param: 1.0, x: 2, y: 2, midpoint: 2 },
            ChainSample { param: 3.0, x: 3, y: 3, midpoint: 3 },
        ];
        let config = BigonConfig::new(space, 0, 1, samples, TOL).unwrap();
        let report = bigon_trace(&config, &1.0, &3.0).unwrap();
        assert!(report.passed);
        assert_eq!(report.spread.rhs, 0.0);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let space = gen_paper_four_point();
        // m1 is between x and y, but at parameter 1, not 1/2
        let bad = vec![ChainSample { param: q(1, 2), x: 2, y: 2, midpoint: 2 }];
        assert!(matches!(
            BigonConfig::new(space.clone(), 0, 1, bad, TOL),
            Err(TraceError::WrongParameter { .. })
        ));
        // m1 and m2 as the two chains, but m1 is not a midpoint of m1 and m2
        let bad = vec![ChainSample { param: q(1, 1), x: 2, y: 3, midpoint: 2 }];
        assert!(matches!(
            BigonConfig::new(space.clone(), 0, 1, bad, TOL),
            Err(TraceError::NotMidpoint { .. })
        ));
        let bad = vec![ChainSample { param: q(3, 1), x: 2, y: 2, midpoint: 2 }];
        assert!(matches!(
            BigonConfig::new(space.clone(), 0, 1, bad, TOL),
            Err(TraceError::ParameterOutOfRange(_))
        ));

        let config = pair_space_config();
        assert!(matches!(
            bigon_trace(&config, &q(2, 1), &q(1, 1)),
            Err(TraceError::BadOrder { .. })
        ));
        assert!(matches!(
            bigon_trace(&config, &q(1, 2), &q(1, 1)),
            Err(TraceError::MissingSample(_))
        ));
    }
}
