//! Midpoint completion.
//!
//! `M(X)` is the set of one- and two-element subsets of `X` with
//!
//! ```text
//! |{x1,x2}{y1,y2}| = (|x1y1| + |x1y2| + |x2y1| + |x2y2|) / 4   if {x1,x2} != {y1,y2}
//!                  = 0                                          otherwise
//! ```
//!
//! `x -> {x,x}` is an isometric embedding and `{x,y}` is a midpoint of
//! `{x,x}` and `{y,y}`. Iterating gives `M^k(X)`. Labels of iterates are nested
//! pair trees; `{a,a}` is kept distinct from `a`, the embedding being explicit.
//!
//! Dyadic chains are built lazily on a [`Tower`] of interned pair nodes so that
//! a chain in `M^k(X)` never needs the whole iterate materialized.

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::metric::{FiniteMetricSpace, SpaceError};
use crate::ptolemy::is_midpoint;
use crate::scalar::Scalar;

/// Default label cap for materialized pair spaces.
pub const DEFAULT_CAP: usize = 5000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompletionError {
    #[error("level {level} would have {projected} labels, above the cap of {cap}")]
    CapExceeded { level: usize, projected: u64, cap: usize },
    #[error("pair ({0}, {1}) refers to a point outside the base space")]
    PairOutOfRange(usize, usize),
    #[error("cannot parse pair tree `{0}`")]
    BadTree(String),
    #[error("pair tree `{tree}` has depth {depth}, deeper than level {level}")]
    TreeTooDeep { tree: String, depth: usize, level: usize },
    #[error("chain points {i} and {j} are not at distance |i-j| * step")]
    ChainNotIsometric { i: usize, j: usize },
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// An unordered pair of base indices, stored with `lo <= hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PairLabel {
    lo: usize,
    hi: usize,
}

impl PairLabel {
    pub fn new(a: usize, b: usize) -> Self {
        Self { lo: a.min(b), hi: a.max(b) }
    }

    pub fn singleton(a: usize) -> Self {
        Self { lo: a, hi: a }
    }

    pub fn parts(&self) -> (usize, usize) {
        (self.lo, self.hi)
    }

    pub fn is_singleton(&self) -> bool {
        self.lo == self.hi
    }
}

/// Position of `{lo, hi}` in the canonical enumeration over `n` points.
fn pair_index(n: usize, p: PairLabel) -> usize {
    p.lo * n - p.lo * p.lo.saturating_sub(1) / 2 + (p.hi - p.lo)
}

/// The quarter-sum distance between two pairs of base points.
pub fn pair_distance<S: Scalar>(base: &FiniteMetricSpace<S>, a: PairLabel, b: PairLabel) -> Result<S, CompletionError> {
    for p in [a, b] {
        if p.hi >= base.len() {
            return Err(CompletionError::PairOutOfRange(p.lo, p.hi));
        }
    }
    Ok(quarter_sum(base, a, b))
}

#[inline]
fn quarter_sum<S: Scalar>(base: &FiniteMetricSpace<S>, a: PairLabel, b: PairLabel) -> S {
    if a == b {
        return S::zero();
    }
    base.dist(a.lo, b.lo)
        .plus(base.dist(a.lo, b.hi))
        .plus(base.dist(a.hi, b.lo))
        .plus(base.dist(a.hi, b.hi))
        .divide(&S::from_ratio(4, 1))
}

/// Label count of each iterate `M^0 .. M^k` (saturating).
pub fn projected_sizes(n: usize, levels: usize) -> Vec<u64> {
    let mut sizes = vec![n as u64];
    for _ in 0..levels {
        let m = *sizes.last().unwrap();
        sizes.push(m.saturating_mul(m.saturating_add(1)) / 2);
    }
    sizes
}

fn check_cap(level: usize, projected: u64, cap: usize) -> Result<(), CompletionError> {
    if projected > cap as u64 {
        Err(CompletionError::CapExceeded { level, projected, cap })
    } else {
        Ok(())
    }
}

/// `M(X)` materialized, with its base kept for provenance.
#[derive(Debug, Clone)]
pub struct PairSpace<S> {
    base: FiniteMetricSpace<S>,
    pairs: Vec<PairLabel>,
    space: FiniteMetricSpace<S>,
}

impl<S: Scalar> PairSpace<S> {
    pub fn base(&self) -> &FiniteMetricSpace<S> {
        &self.base
    }

    pub fn space(&self) -> &FiniteMetricSpace<S> {
        &self.space
    }

    pub fn into_space(self) -> FiniteMetricSpace<S> {
        self.space
    }

    pub fn pairs(&self) -> &[PairLabel] {
        &self.pairs
    }

    pub fn index_of(&self, p: PairLabel) -> Option<usize> {
        (p.hi < self.base.len()).then(|| pair_index(self.base.len(), p))
    }

    /// Index of `{x, x}`.
    pub fn embedding(&self, x: usize) -> usize {
        pair_index(self.base.len(), PairLabel::singleton(x))
    }
}

/// Materializes `M(X)`.
pub fn complete_once<S: Scalar>(space: &FiniteMetricSpace<S>, cap: usize) -> Result<PairSpace<S>, CompletionError> {
    let n = space.len();
    check_cap(1, projected_sizes(n, 1)[1], cap)?;
    let pairs: Vec<PairLabel> = (0..n).flat_map(|a| (a..n).map(move |b| PairLabel::new(a, b))).collect();
    let labels = pairs
        .iter()
        .map(|p| format!("{{{},{}}}", space.label(p.lo), space.label(p.hi)))
        .collect();
    let rows = pairs
        .par_iter()
        .map(|&a| pairs.iter().map(|&b| quarter_sum(space, a, b)).collect())
        .collect();
    let pair_space = FiniteMetricSpace::new(labels, rows)?.with_name(format!("M({})", space.name()));
    Ok(PairSpace {
        base: space.clone(),
        pairs,
        space: pair_space,
    })
}

/// A label of `M^k(X)`: a base label or a pair of trees of equal depth.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PairTree {
    Leaf(String),
    Pair(Box<PairTree>, Box<PairTree>),
}

impl PairTree {
    pub fn pair(a: PairTree, b: PairTree) -> Self {
        PairTree::Pair(Box::new(a), Box::new(b))
    }

    pub fn depth(&self) -> usize {
        match self {
            PairTree::Leaf(_) => 0,
            PairTree::Pair(a, _) => 1 + a.depth(),
        }
    }

    /// Parses the canonical rendering, e.g. `{{x,x},{x,y}}`.
    pub fn parse(s: &str) -> Result<Self, CompletionError> {
        let bad = || CompletionError::BadTree(s.to_owned());
        let (tree, rest) = Self::parse_prefix(s.trim()).ok_or_else(bad)?;
        if !rest.is_empty() {
            return Err(bad());
        }
        tree.is_balanced().then_some(tree).ok_or_else(bad)
    }

    fn parse_prefix(s: &str) -> Option<(Self, &str)> {
        if let Some(rest) = s.strip_prefix('{') {
            let (a, rest) = Self::parse_prefix(rest)?;
            let rest = rest.strip_prefix(',')?;
            let (b, rest) = Self::parse_prefix(rest)?;
            let rest = rest.strip_prefix('}')?;
            Some((Self::pair(a, b), rest))
        } else {
            let end = s.find([',', '{', '}']).unwrap_or(s.len());
            (end > 0).then(|| (PairTree::Leaf(s[..end].to_owned()), &s[end..]))
        }
    }

    fn is_balanced(&self) -> bool {
        match self {
            PairTree::Leaf(_) => true,
            PairTree::Pair(a, b) => a.depth() == b.depth() && a.is_balanced() && b.is_balanced(),
        }
    }

    /// Base labels at the leaves, left to right.
    pub fn leaves(&self) -> Vec<&str> {
        match self {
            PairTree::Leaf(l) => vec![l.as_str()],
            PairTree::Pair(a, b) => {
                let mut v = a.leaves();
                v.extend(b.leaves());
                v
            }
        }
    }
}

impl fmt::Display for PairTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PairTree::Leaf(l) => f.write_str(l),
            PairTree::Pair(a, b) => write!(f, "{{{a},{b}}}"),
        }
    }
}

/// Leaves serialize as strings, pairs as two-element arrays.
impl Serialize for PairTree {
    fn serialize<Ser: Serializer>(&self, serializer: Ser) -> Result<Ser::Ok, Ser::Error> {
        match self {
            PairTree::Leaf(l) => serializer.serialize_str(l),
            PairTree::Pair(a, b) => (a.as_ref(), b.as_ref()).serialize(serializer),
        }
    }
}

/// The iterate `M^k(X)` with the pair tree behind every label.
#[derive(Debug, Clone)]
pub struct Iterate<S> {
    pub level: usize,
    pub space: FiniteMetricSpace<S>,
    pub trees: Vec<PairTree>,
}

impl<S: Scalar> Iterate<S> {
    pub fn tree(&self, label: &str) -> Option<&PairTree> {
        self.space.index_of(label).ok().map(|i| &self.trees[i])
    }
}

/// Materializes `M^k(X)`; `k = 0` returns the input.
pub fn complete_k<S: Scalar>(space: &FiniteMetricSpace<S>, k: usize, cap: usize) -> Result<Iterate<S>, CompletionError> {
    let sizes = projected_sizes(space.len(), k);
    for (level, &size) in sizes.iter().enumerate().skip(1) {
        check_cap(level, size, cap)?;
    }
    let mut current = space.clone();
    let mut trees: Vec<PairTree> = space.labels().iter().cloned().map(PairTree::Leaf).collect();
    for _ in 0..k {
        let next = complete_once(&current, cap)?;
        trees = next
            .pairs()
            .iter()
            .map(|p| PairTree::pair(trees[p.lo].clone(), trees[p.hi].clone()))
            .collect();
        current = next.into_space();
    }
    let name = if k == 0 {
        space.name().to_owned()
    } else {
        format!("M^{k}({})", space.name())
    };
    Ok(Iterate {
        level: k,
        space: current.with_name(name),
        trees,
    })
}

/// All `m` with `|xm| = |xy| / 2 = |my|`, in index order.
pub fn midpoint_set<S: Scalar>(space: &FiniteMetricSpace<S>, x: usize, y: usize, tol: f64) -> Vec<usize> {
    (0..space.len()).filter(|&m| is_midpoint(space, x, y, m, tol)).collect()
}

#[derive(Debug, Default)]
struct Level<S> {
    nodes: Vec<(usize, usize)>,
    ids: HashMap<(usize, usize), usize>,
    cache: HashMap<(usize, usize), S>,
    canonical: Option<Vec<usize>>,
}

/// Lazily interned nodes of `M^1(X), M^2(X), ...` over a base space.
///
/// Level 0 nodes are base indices. A node at level `j + 1` is a sorted pair of
/// level-`j` node ids. Distances are evaluated recursively and memoized.
#[derive(Debug)]
pub struct Tower<'a, S> {
    base: &'a FiniteMetricSpace<S>,
    levels: Vec<Level<S>>,
}

impl<'a, S: Scalar> Tower<'a, S> {
    pub fn new(base: &'a FiniteMetricSpace<S>) -> Self {
        Self { base, levels: Vec::new() }
    }

    fn level_mut(&mut self, level: usize) -> &mut Level<S> {
        while self.levels.len() < level {
            self.levels.push(Level {
                nodes: Vec::new(),
                ids: HashMap::new(),
                cache: HashMap::new(),
                canonical: None,
            });
        }
        &mut self.levels[level - 1]
    }

    /// Id of the pair `{a, b}` of level-`(level - 1)` nodes.
    pub fn intern(&mut self, level: usize, a: usize, b: usize) -> usize {
        let key = (a.min(b), a.max(b));
        let lv = self.level_mut(level);
        if let Some(&id) = lv.ids.get(&key) {
            return id;
        }
        let id = lv.nodes.len();
        lv.nodes.push(key);
        lv.ids.insert(key, id);
        id
    }

    /// `a -> {a, a}` from `level` to `level + 1`.
    pub fn lift(&mut self, level: usize, a: usize) -> usize {
        self.intern(level + 1, a, a)
    }

    /// Embeds a node of `from` into the higher level `to`.
    pub fn embed(&mut self, from: usize, to: usize, mut node: usize) -> usize {
        for level in from..to {
            node = self.lift(level, node);
        }
        node
    }

    pub fn distance(&mut self, level: usize, a: usize, b: usize) -> S {
        if a == b {
            return S::zero();
        }
        if level == 0 {
            return self.base.dist(a, b).clone();
        }
        let key = (a.min(b), a.max(b));
        if let Some(d) = self.levels[level - 1].cache.get(&key) {
            return d.clone();
        }
        let (a1, a2) = self.levels[level - 1].nodes[a];
        let (b1, b2) = self.levels[level - 1].nodes[b];
        let sum = self
            .distance(level - 1, a1, b1)
            .plus(&self.distance(level - 1, a1, b2))
            .plus(&self.distance(level - 1, a2, b1))
            .plus(&self.distance(level - 1, a2, b2));
        let d = sum.divide(&S::from_ratio(4, 1));
        self.levels[level - 1].cache.insert(key, d.clone());
        d
    }

    pub fn tree(&self, level: usize, node: usize) -> PairTree {
        if level == 0 {
            return PairTree::Leaf(self.base.label(node).to_owned());
        }
        let (a, b) = self.levels[level - 1].nodes[node];
        PairTree::pair(self.tree(level - 1, a), self.tree(level - 1, b))
    }

    /// Interns `tree` and embeds it at `level`.
    pub fn node_of(&mut self, tree: &PairTree, level: usize) -> Result<usize, CompletionError> {
        let depth = tree.depth();
        if depth > level {
            return Err(CompletionError::TreeTooDeep {
                tree: tree.to_string(),
                depth,
                level,
            });
        }
        let node = self.intern_tree(tree)?;
        Ok(self.embed(depth, level, node))
    }

    fn intern_tree(&mut self, tree: &PairTree) -> Result<usize, CompletionError> {
        match tree {
            PairTree::Leaf(l) => Ok(self.base.index_of(l)?),
            PairTree::Pair(a, b) => {
                let depth = a.depth();
                let (ia, ib) = (self.intern_tree(a)?, self.intern_tree(b)?);
                Ok(self.intern(depth + 1, ia, ib))
            }
        }
    }

    /// Every node of `level` in the order [`complete_k`] lists labels.
    pub fn canonical_nodes(&mut self, level: usize) -> Vec<usize> {
        if level == 0 {
            return (0..self.base.len()).collect();
        }
        if let Some(nodes) = &self.level_mut(level).canonical {
            return nodes.clone();
        }
        let below = self.canonical_nodes(level - 1);
        let mut nodes = Vec::with_capacity(below.len() * (below.len() + 1) / 2);
        for (i, &a) in below.iter().enumerate() {
            for &b in &below[i..] {
                nodes.push(self.intern(level, a, b));
            }
        }
        self.level_mut(level).canonical = Some(nodes.clone());
        nodes
    }
}

/// How to pick a midpoint when a subdivision has several.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selector {
    /// Always the pair `{a, b}` itself.
    Canonical,
    /// A named point (base label or rendered pair tree), used wherever it is a
    /// midpoint of the segment being split; `{a, b}` elsewhere.
    Named(PairTree),
    /// The `i`-th midpoint of the lifted endpoints in the next iterate, in label
    /// order; `{a, b}` when there are fewer. Materializes that iterate's labels.
    Index(usize),
}

/// `2^k + 1` points of `M^k(X)` from `x` to `y`, exactly isometric to a segment.
#[derive(Debug, Clone)]
pub struct DyadicChain<S> {
    pub level: usize,
    pub points: Vec<PairTree>,
    pub step: S,
    /// The chain's own distance matrix, labeled by rendered trees.
    pub space: FiniteMetricSpace<S>,
}

impl<S: Scalar> DyadicChain<S> {
    pub fn labels(&self) -> &[String] {
        self.space.labels()
    }

    /// Whether `d(c_i, c_j) = |i - j| * step` holds for every pair.
    pub fn is_isometric(&self, tol: f64) -> bool {
        first_isometry_failure(&self.space, &self.step, tol).is_none()
    }
}

fn first_isometry_failure<S: Scalar>(space: &FiniteMetricSpace<S>, step: &S, tol: f64) -> Option<(usize, usize)> {
    let n = space.len();
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .find(|&(i, j)| !space.dist(i, j).approx_eq(&S::from_ratio((j - i) as i64, 1).times(step), tol))
}

/// Builds the level-`k` chain between base points `x` and `y` by `k` rounds of
/// midpoint insertion, then verifies its isometry.
pub fn dyadic_chain<S: Scalar>(
    base: &FiniteMetricSpace<S>,
    x: usize,
    y: usize,
    k: usize,
    selector: &Selector,
    cap: usize,
    tol: f64,
) -> Result<DyadicChain<S>, CompletionError> {
    base.check_index(x)?;
    base.check_index(y)?;
    let length = 1u64.checked_shl(k as u32).and_then(|p| p.checked_add(1)).unwrap_or(u64::MAX);
    check_cap(k, length, cap)?;
    if let Selector::Index(_) = selector {
        for (level, &size) in projected_sizes(base.len(), k).iter().enumerate().skip(1) {
            check_cap(level, size, cap)?;
        }
    }

    let mut tower = Tower::new(base);
    let mut chain = vec![x, y];
    for level in 0..k {
        let mut next = Vec::with_capacity(2 * chain.len() - 1);
        for w in chain.windows(2) {
            let (a, b) = (w[0], w[1]);
            next.push(tower.lift(level, a));
            next.push(choose_midpoint(&mut tower, level, a, b, selector, tol)?);
        }
        next.push(tower.lift(level, *chain.last().unwrap()));
        chain = next;
    }

    let points: Vec<PairTree> = chain.iter().map(|&c| tower.tree(k, c)).collect();
    let labels = points.iter().map(|p| p.to_string()).collect();
    let mut rows = vec![vec![S::zero(); chain.len()]; chain.len()];
    for i in 0..chain.len() {
        for j in 0..chain.len() {
            rows[i][j] = tower.distance(k, chain[i], chain[j]);
        }
    }
    let space = FiniteMetricSpace::new(labels, rows)?.with_name("chain");
    let step = base.dist(x, y).divide(&S::from_ratio(1i64 << k.min(62), 1));
    if let Some((i, j)) = first_isometry_failure(&space, &step, tol) {
        return Err(CompletionError::ChainNotIsometric { i, j });
    }
    Ok(DyadicChain { level: k, points, step, space })
}

fn choose_midpoint<S: Scalar>(
    tower: &mut Tower<'_, S>,
    level: usize,
    a: usize,
    b: usize,
    selector: &Selector,
    tol: f64,
) -> Result<usize, CompletionError> {
    let canonical = tower.intern(level + 1, a, b);
    let (la, lb) = (tower.lift(level, a), tower.lift(level, b));
    let half = tower.distance(level + 1, la, lb).half();
    let is_mid = |tower: &mut Tower<'_, S>, m: usize| {
        tower.distance(level + 1, la, m).approx_eq(&half, tol) && tower.distance(level + 1, m, lb).approx_eq(&half, tol)
    };
    match selector {
        Selector::Canonical => Ok(canonical),
        Selector::Named(tree) => {
            if tree.depth() > level + 1 {
                return Ok(canonical);
            }
            let m = tower.node_of(tree, level + 1)?;
            Ok(if is_mid(tower, m) { m } else { canonical })
        }
        Selector::Index(i) => {
            let mut found = 0;
            for m in tower.canonical_nodes(level + 1) {
                if is_mid(tower, m) {
                    if found == *i {
                        return Ok(m);
                    }
                    found += 1;
                }
            }
            Ok(canonical)
        }
    }
}
