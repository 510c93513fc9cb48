//! Weighted graphs `(X, b, ρ)`, their vertex measures and exhaustions.
//!
//! Vertices are opaque string ids. Insertion order is frozen at construction
//! and fixes the row/column assignment of every matrix built downstream.
//! Edge weights are stored per directed pair so that [`validate_graph`] can
//! diagnose asymmetric input; every constructor that is not explicitly
//! "raw" symmetrizes.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Edge weights at or below this value do not count as adjacency
/// (`x ~ y`), but are still included in degree sums.
pub const ADJACENCY_EPS: f64 = 1e-15;

#[derive(Debug, Clone)]
pub struct WeightedGraph {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    rho: Vec<f64>,
    // out[x] is sorted by neighbour index
    out: Vec<Vec<(usize, f64)>>,
}

impl WeightedGraph {
    /// Builds a graph from vertex weights and undirected edges. Each edge is
    /// stored in both directions. Repeating a pair with the same weight is
    /// tolerated; repeating it with a different weight is an error.
    pub fn new<V, E, S, T>(vertices: V, edges: E) -> Result<Self>
    where
        V: IntoIterator<Item = (S, f64)>,
        E: IntoIterator<Item = (T, T, f64)>,
        S: Into<String>,
        T: AsRef<str>,
    {
        let mut g = Self::empty(vertices)?;
        let mut seen: HashMap<(usize, usize), f64> = HashMap::new();
        for (u, v, b) in edges {
            let (u, v) = (u.as_ref(), v.as_ref());
            let x = g.lookup(u)?;
            let y = g.lookup(v)?;
            if !b.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "edge ({u}, {v}) has non-finite weight {b}"
                )));
            }
            let key = (x.min(y), x.max(y));
            if let Some(&first) = seen.get(&key) {
                if first != b {
                    return Err(Error::ConflictingEdge {
                        u: u.to_string(),
                        v: v.to_string(),
                        first,
                        second: b,
                    });
                }
                continue;
            }
            seen.insert(key, b);
            g.out[x].push((y, b));
            if x != y {
                g.out[y].push((x, b));
            }
        }
        g.sort_rows();
        Ok(g)
    }

    /// Builds a graph from directed entries `b(u, v)` without symmetrizing.
    /// Meant for loading and diagnosing possibly inconsistent data.
    pub fn from_directed<V, E, S, T>(vertices: V, entries: E) -> Result<Self>
    where
        V: IntoIterator<Item = (S, f64)>,
        E: IntoIterator<Item = (T, T, f64)>,
        S: Into<String>,
        T: AsRef<str>,
    {
        let mut g = Self::empty(vertices)?;
        for (u, v, b) in entries {
            let x = g.lookup(u.as_ref())?;
            let y = g.lookup(v.as_ref())?;
            match g.out[x].iter_mut().find(|(z, _)| *z == y) {
                Some(entry) => entry.1 = b,
                None => g.out[x].push((y, b)),
            }
        }
        g.sort_rows();
        Ok(g)
    }

    fn empty<V, S>(vertices: V) -> Result<Self>
    where
        V: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut ids = Vec::new();
        let mut rho = Vec::new();
        let mut index = HashMap::new();
        for (id, r) in vertices {
            let id = id.into();
            if index.insert(id.clone(), ids.len()).is_some() {
                return Err(Error::DuplicateVertex(id));
            }
            ids.push(id);
            rho.push(r);
        }
        let out = vec![Vec::new(); ids.len()];
        Ok(Self {
            ids,
            index,
            rho,
            out,
        })
    }

    fn sort_rows(&mut self) {
        for row in &mut self.out {
            row.sort_by_key(|&(y, _)| y);
        }
    }

    fn lookup(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownVertex(id.to_string()))
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, x: usize) -> &str {
        &self.ids[x]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn vertex(&self, id: &str) -> Result<usize> {
        self.lookup(id)
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    /// Stored directed entries `(y, b(x, y))`, sorted by `y`.
    pub fn neighbors(&self, x: usize) -> &[(usize, f64)] {
        &self.out[x]
    }

    pub fn weight(&self, x: usize, y: usize) -> f64 {
        self.out[x]
            .binary_search_by_key(&y, |&(z, _)| z)
            .map(|i| self.out[x][i].1)
            .unwrap_or(0.0)
    }

    /// `Σ_y b(x, y)`.
    pub fn degree(&self, x: usize) -> f64 {
        self.out[x].iter().map(|&(_, b)| b).sum()
    }

    pub fn is_adjacent(&self, x: usize, y: usize) -> bool {
        x != y && self.weight(x, y) > ADJACENCY_EPS
    }

    /// Unordered pairs `x < y` with their stored weight `b(x, y)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.out.iter().enumerate().flat_map(|(x, row)| {
            row.iter()
                .filter(move |&&(y, _)| y > x)
                .map(move |&(y, b)| (x, y, b))
        })
    }

    pub fn measure(&self) -> Measure {
        Measure {
            weights: self.rho.clone(),
        }
    }

    /// Hop distances from `root` along adjacency; `None` for unreachable vertices.
    pub fn hop_distances(&self, root: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.len()];
        let mut queue = VecDeque::new();
        dist[root] = Some(0);
        queue.push_back(root);
        while let Some(x) = queue.pop_front() {
            let d = dist[x].unwrap_or(0);
            for &(y, b) in &self.out[x] {
                if y != x && b > ADJACENCY_EPS && dist[y].is_none() {
                    dist[y] = Some(d + 1);
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    /// Number of connected components of the adjacency relation.
    pub fn component_count(&self) -> usize {
        let mut label = vec![usize::MAX; self.len()];
        let mut count = 0;
        for start in 0..self.len() {
            if label[start] != usize::MAX {
                continue;
            }
            let mut stack = vec![start];
            label[start] = count;
            while let Some(x) = stack.pop() {
                for &(y, b) in &self.out[x] {
                    if b > ADJACENCY_EPS && label[y] == usize::MAX {
                        label[y] = count;
                        stack.push(y);
                    }
                }
            }
            count += 1;
        }
        count
    }

    /// `C(b, ρ) = sup_x ρ(x)^{-1} Σ_y b(x, y)`.
    pub fn form_bound(&self) -> f64 {
        (0..self.len())
            .map(|x| self.degree(x) / self.rho[x])
            .fold(0.0, f64::max)
    }
}

/// Positive vertex weights; `μ(A) = Σ_{x∈A} m(x)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measure {
    weights: Vec<f64>,
}

impl Measure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w > 0.0))
        {
            return Err(Error::InvalidArgument(format!(
                "measure weight {w} at index {i} is not strictly positive"
            )));
        }
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn mass(&self, subset: impl IntoIterator<Item = usize>) -> f64 {
        subset.into_iter().map(|x| self.weights[x]).sum()
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// The measure `dμ_F = F dμ`.
    pub fn reweighted(&self, f: &[f64]) -> Result<Self> {
        if f.len() != self.len() {
            return Err(Error::ShapeMismatch {
                expected: self.len(),
                found: f.len(),
            });
        }
        Self::new(self.weights.iter().zip(f).map(|(m, f)| m * f).collect())
    }

    /// Restriction to a list of indices, in that order.
    pub fn restricted(&self, subset: &[usize]) -> Self {
        Self {
            weights: subset.iter().map(|&x| self.weights[x]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    Asymmetry {
        x: String,
        y: String,
        forward: f64,
        backward: f64,
    },
    Loop {
        x: String,
        weight: f64,
    },
    NonPositiveRho {
        x: String,
        rho: f64,
    },
    NegativeWeight {
        x: String,
        y: String,
        weight: f64,
    },
    InfiniteRowSum {
        x: String,
    },
    Disconnected {
        components: usize,
        unreachable_from_first: Vec<String>,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "no violations");
        }
        let parts: Vec<String> = self
            .violations
            .iter()
            .map(|v| match v {
                Violation::Asymmetry { x, y, .. } => format!("asymmetric pair ({x}, {y})"),
                Violation::Loop { x, .. } => format!("loop at {x}"),
                Violation::NonPositiveRho { x, rho } => format!("rho({x}) = {rho}"),
                Violation::NegativeWeight { x, y, weight } => {
                    format!("b({x}, {y}) = {weight}")
                }
                Violation::InfiniteRowSum { x } => format!("infinite row sum at {x}"),
                Violation::Disconnected { components, .. } => {
                    format!("disconnected ({components} components)")
                }
            })
            .collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// Lists every violated structural invariant. Never fails.
pub fn validate_graph(g: &WeightedGraph) -> ValidationReport {
    let mut violations = Vec::new();
    for x in 0..g.len() {
        let r = g.rho[x];
        if !(r.is_finite() && r > 0.0) {
            violations.push(Violation::NonPositiveRho {
                x: g.ids[x].clone(),
                rho: r,
            });
        }
    }
    for x in 0..g.len() {
        let mut row_sum = 0.0;
        for &(y, b) in &g.out[x] {
            row_sum += b;
            if y == x {
                if b != 0.0 {
                    violations.push(Violation::Loop {
                        x: g.ids[x].clone(),
                        weight: b,
                    });
                }
                continue;
            }
            if !(b >= 0.0) {
                violations.push(Violation::NegativeWeight {
                    x: g.ids[x].clone(),
                    y: g.ids[y].clone(),
                    weight: b,
                });
            }
            // Report each unordered pair once: from the smaller index, or from
            // the larger one when the reverse entry is missing entirely.
            let back = g.weight(y, x);
            if back != b && (x < y || !has_entry(g, y, x)) {
                violations.push(Violation::Asymmetry {
                    x: g.ids[x.min(y)].clone(),
                    y: g.ids[x.max(y)].clone(),
                    forward: g.weight(x.min(y), x.max(y)),
                    backward: g.weight(x.max(y), x.min(y)),
                });
            }
        }
        if !row_sum.is_finite() {
            violations.push(Violation::InfiniteRowSum {
                x: g.ids[x].clone(),
            });
        }
    }
    if g.len() > 1 {
        let components = g.component_count();
        if components > 1 {
            let dist = g.hop_distances(0);
            violations.push(Violation::Disconnected {
                components,
                unreachable_from_first: dist
                    .iter()
                    .enumerate()
                    .filter(|(_, d)| d.is_none())
                    .map(|(x, _)| g.ids[x].clone())
                    .collect(),
            });
        }
    }
    ValidationReport { violations }
}

fn has_entry(g: &WeightedGraph, x: usize, y: usize) -> bool {
    g.out[x].binary_search_by_key(&y, |&(z, _)| z).is_ok()
}

/// `(Σ_x |f(x)|^q m(x))^{1/q}`, or `max_x |f(x)|` for `q = ∞`.
pub fn lq_norm(f: &[f64], q: f64, m: &Measure) -> Result<f64> {
    if f.len() != m.len() {
        return Err(Error::ShapeMismatch {
            expected: m.len(),
            found: f.len(),
        });
    }
    if q.is_nan() || q < 1.0 {
        return Err(Error::InvalidArgument(format!("L^q exponent {q} < 1")));
    }
    let scale = f.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if q.is_infinite() || scale == 0.0 {
        return Ok(scale);
    }
    let sum: f64 = f
        .iter()
        .zip(m.weights())
        .map(|(v, w)| (v.abs() / scale).powf(q) * w)
        .sum();
    Ok(scale * sum.powf(1.0 / q))
}

/// For each threshold `c`, the measure of the level set `{|f| ≥ c}`.
pub fn weak_vanishing_profile(
    f: &[f64],
    m: &Measure,
    thresholds: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if f.len() != m.len() {
        return Err(Error::ShapeMismatch {
            expected: m.len(),
            found: f.len(),
        });
    }
    thresholds
        .iter()
        .map(|&c| {
            if !(c > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "threshold {c} must be positive"
                )));
            }
            let mass = f
                .iter()
                .zip(m.weights())
                .filter(|(v, _)| v.abs() >= c)
                .map(|(_, w)| w)
                .sum();
            Ok((c, mass))
        })
        .collect()
}

/// Level-set measures of `f` on every level of an exhaustion.
#[derive(Debug, Clone, Serialize)]
pub struct LevelSetProfile {
    pub threshold: f64,
    /// `μ({|f| ≥ c} ∩ X_n)` for each level.
    pub per_level: Vec<f64>,
    /// The last two levels agree: the finite-volume proxy for `μ{|f| ≥ c} < ∞`.
    pub stabilized: bool,
}

pub fn weak_vanishing_on_exhaustion(
    f: &[f64],
    m: &Measure,
    ex: &Exhaustion,
    thresholds: &[f64],
) -> Result<Vec<LevelSetProfile>> {
    let mut out = Vec::with_capacity(thresholds.len());
    for &c in thresholds {
        let mut per_level = Vec::with_capacity(ex.levels().len());
        for level in ex.levels() {
            let sub: Vec<f64> = level.iter().map(|&x| f[x]).collect();
            let mm = m.restricted(level);
            per_level.push(weak_vanishing_profile(&sub, &mm, &[c])?[0].1);
        }
        let stabilized = match per_level.as_slice() {
            [.., a, b] => a == b,
            _ => true,
        };
        out.push(LevelSetProfile {
            threshold: c,
            per_level,
            stabilized,
        });
    }
    Ok(out)
}

/// Increasing finite vertex sets `X_1 ⊊ X_2 ⊊ …`, stored as sorted index lists.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exhaustion {
    levels: Vec<Vec<usize>>,
    radii: Option<Vec<usize>>,
}

impl Exhaustion {
    /// Checks strict nesting of explicitly supplied levels.
    pub fn from_levels(levels: Vec<Vec<usize>>, host_size: usize) -> Result<Self> {
        let mut sorted = Vec::with_capacity(levels.len());
        for mut level in levels {
            level.sort_unstable();
            level.dedup();
            if level.is_empty() {
                return Err(Error::EmptySubset);
            }
            if let Some(&x) = level.iter().find(|&&x| x >= host_size) {
                return Err(Error::InvalidArgument(format!(
                    "level contains index {x} outside a host of size {host_size}"
                )));
            }
            sorted.push(level);
        }
        for pair in sorted.windows(2) {
            let (small, big) = (&pair[0], &pair[1]);
            let nested = small.iter().all(|x| big.binary_search(x).is_ok());
            if !nested || big.len() <= small.len() {
                return Err(Error::InvalidArgument(
                    "exhaustion levels must be strictly increasing".into(),
                ));
            }
        }
        Ok(Self {
            levels: sorted,
            radii: None,
        })
    }

    /// The trivial exhaustion consisting of the whole host.
    pub fn whole(g: &WeightedGraph) -> Self {
        Self {
            levels: vec![(0..g.len()).collect()],
            radii: None,
        }
    }

    pub fn levels(&self) -> &[Vec<usize>] {
        &self.levels
    }

    pub fn radii(&self) -> Option<&[usize]> {
        self.radii.as_deref()
    }

    pub fn last(&self) -> &[usize] {
        self.levels.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Hop-metric balls around `root` with strictly increasing `radii`. The
/// sequence stops at the first ball that covers the whole host.
pub fn build_exhaustion(g: &WeightedGraph, root: usize, radii: &[usize]) -> Result<Exhaustion> {
    if root >= g.len() {
        return Err(Error::InvalidArgument(format!(
            "root index {root} out of range"
        )));
    }
    if radii.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one radius is required".into(),
        ));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "radii must be strictly increasing".into(),
        ));
    }
    let components = g.component_count();
    if components > 1 {
        return Err(Error::Disconnected(components));
    }
    let dist = g.hop_distances(root);
    let mut levels = Vec::new();
    let mut used = Vec::new();
    for &r in radii {
        let level: Vec<usize> = (0..g.len())
            .filter(|&x| dist[x].is_some_and(|d| d <= r))
            .collect();
        let full = level.len() == g.len();
        levels.push(level);
        used.push(r);
        if full {
            break;
        }
    }
    Ok(Exhaustion {
        levels,
        radii: Some(used),
    })
}

/// Radii `[D/8, D/4, D/2, D]` (each at least 1, deduplicated) for the
/// eccentricity `D` of `root`; the last ball is the whole host.
pub fn dyadic_radii(g: &WeightedGraph, root: usize) -> Result<Vec<usize>> {
    if root >= g.len() {
        return Err(Error::InvalidArgument(format!(
            "root index {root} out of range"
        )));
    }
    let mut eccentricity = 0;
    for d in g.hop_distances(root) {
        eccentricity = eccentricity.max(d.ok_or(Error::Disconnected(g.component_count()))?);
    }
    let mut radii: Vec<usize> = [
        eccentricity / 8,
        eccentricity / 4,
        eccentricity / 2,
        eccentricity,
    ]
    .into_iter()
    .map(|r| r.max(1))
    .collect();
    radii.dedup();
    Ok(radii)
}

/// Small deterministic host families used by tests, benches and the demo.
pub mod generators {
    use rand::Rng;

    use super::WeightedGraph;

    fn vid(i: usize) -> String {
        format!("x{i}")
    }

    /// Path `x0 – x1 – … – x(n-1)` with constant weights.
    pub fn path(n: usize, b: f64, rho: f64) -> WeightedGraph {
        path_with(&vec![rho; n], &vec![b; n.saturating_sub(1)])
    }

    pub fn path_with(rho: &[f64], b: &[f64]) -> WeightedGraph {
        let n = rho.len();
        assert_eq!(b.len(), n.saturating_sub(1), "path needs n-1 edge weights");
        WeightedGraph::new(
            (0..n).map(|i| (vid(i), rho[i])),
            (1..n).map(|i| (vid(i - 1), vid(i), b[i - 1])),
        )
        .expect("path construction")
    }

    /// Star `K_{1,k}` with centre `x0`.
    pub fn star(k: usize) -> WeightedGraph {
        WeightedGraph::new(
            (0..=k).map(|i| (vid(i), 1.0)),
            (1..=k).map(|i| (vid(0), vid(i), 1.0)),
        )
        .expect("star construction")
    }

    pub fn cycle(n: usize) -> WeightedGraph {
        WeightedGraph::new(
            (0..n).map(|i| (vid(i), 1.0)),
            (0..n).map(|i| (vid(i), vid((i + 1) % n), 1.0)),
        )
        .expect("cycle construction")
    }

    /// `nx × ny` grid; vertex `(i, j)` has id `g{i}_{j}` and index `i * ny + j`.
    pub fn grid(nx: usize, ny: usize, b: f64, rho: f64) -> WeightedGraph {
        let id = |i: usize, j: usize| format!("g{i}_{j}");
        let mut edges = Vec::new();
        for i in 0..nx {
            for j in 0..ny {
                if i + 1 < nx {
                    edges.push((id(i, j), id(i + 1, j), b));
                }
                if j + 1 < ny {
                    edges.push((id(i, j), id(i, j + 1), b));
                }
            }
        }
        let verts: Vec<(String, f64)> = (0..nx)
            .flat_map(|i| (0..ny).map(move |j| (i, j)))
            .map(|(i, j)| (id(i, j), rho))
            .collect();
        WeightedGraph::new(verts, edges).expect("grid construction")
    }

    /// Parameters for [`erdos_renyi`].
    #[derive(Debug, Clone, Copy)]
    pub struct RandomGraphSpec {
        pub n: usize,
        pub p: f64,
        pub b_range: (f64, f64),
        pub rho_range: (f64, f64),
    }

    /// Seeded Erdős–Rényi graph overlaid with a random spanning tree, so the
    /// result is always connected.
    #[allow(clippy::needless_range_loop)]
    pub fn erdos_renyi<R: Rng + ?Sized>(spec: RandomGraphSpec, rng: &mut R) -> WeightedGraph {
        let RandomGraphSpec {
            n,
            p,
            b_range,
            rho_range,
        } = spec;
        let sample = |rng: &mut R, (lo, hi): (f64, f64)| {
            if hi > lo {
                rng.random_range(lo..hi)
            } else {
                lo
            }
        };
        let rho: Vec<f64> = (0..n).map(|_| sample(rng, rho_range)).collect();
        let mut adjacency = vec![vec![false; n]; n];
        for i in 1..n {
            let j = rng.random_range(0..i);
            adjacency[i][j] = true;
            adjacency[j][i] = true;
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random::<f64>() < p {
                    adjacency[i][j] = true;
                    adjacency[j][i] = true;
                }
            }
        }
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if adjacency[i][j] {
                    edges.push((vid(i), vid(j), sample(rng, b_range)));
                }
            }
        }
        WeightedGraph::new((0..n).map(|i| (vid(i), rho[i])), edges).expect("random graph")
    }
}

#[cfg(test)]
mod tests {
    use super::generators::*;
    use super::*;

    #[test]
    fn single_vertex_is_valid() {
        let g = WeightedGraph::new([("x", 1.0)], Vec::<(&str, &str, f64)>::new()).unwrap();
        assert!(validate_graph(&g).is_valid());
    }

    #[test]
    fn asymmetric_pair_is_reported() {
        let g = WeightedGraph::from_directed(
            [("1", 1.0), ("2", 1.0)],
            [("1", "2", 1.0), ("2", "1", 2.0)],
        )
        .unwrap();
        let report = validate_graph(&g);
        assert_eq!(report.violations.len(), 1);
        match &report.violations[0] {
            Violation::Asymmetry {
                x,
                y,
                forward,
                backward,
            } => {
                assert_eq!((x.as_str(), y.as_str()), ("1", "2"));
                assert_eq!((*forward, *backward), (1.0, 2.0));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn one_sided_entry_is_asymmetric() {
        let g = WeightedGraph::from_directed([("1", 1.0), ("2", 1.0)], [("2", "1", 1.0)]).unwrap();
        let report = validate_graph(&g);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::Asymmetry { .. })));
    }

    #[test]
    fn loops_rho_and_disconnection_are_reported() {
        let g = WeightedGraph::from_directed(
            [("a", 1.0), ("b", 0.0), ("c", 1.0)],
            [("a", "a", 1.0), ("a", "b", 1.0), ("b", "a", 1.0)],
        )
        .unwrap();
        let report = validate_graph(&g);
        let kinds: Vec<_> = report
            .violations
            .iter()
            .map(std::mem::discriminant)
            .collect();
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::Loop { .. })));
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::NonPositiveRho { .. })));
        assert!(report.violations.iter().any(
            |v| matches!(v, Violation::Disconnected { unreachable_from_first, .. } if unreachable_from_first == &["c".to_string()])
        ));
        assert_eq!(kinds.len(), 3);
    }

    #[test]
    fn path_is_valid_and_connected() {
        let g = path(10, 1.0, 1.0);
        assert!(validate_graph(&g).is_valid());
        // BFS oracle: every vertex reached with the expected hop count.
        let d = g.hop_distances(0);
        assert!(d.iter().enumerate().all(|(i, d)| *d == Some(i)));
    }

    #[test]
    fn float_dust_does_not_connect() {
        let g = WeightedGraph::new([("a", 1.0), ("b", 1.0)], [("a", "b", 1e-16)]).unwrap();
        assert_eq!(g.component_count(), 2);
        assert_eq!(g.degree(0), 1e-16);
    }

    #[test]
    fn conflicting_duplicate_edges_are_rejected() {
        let err = WeightedGraph::new([("a", 1.0), ("b", 1.0)], [("a", "b", 1.0), ("b", "a", 2.0)])
            .unwrap_err();
        assert!(matches!(err, Error::ConflictingEdge { .. }));
        let ok = WeightedGraph::new([("a", 1.0), ("b", 1.0)], [("a", "b", 1.0), ("b", "a", 1.0)])
            .unwrap();
        assert_eq!(ok.degree(0), 1.0);
    }

    #[test]
    fn lq_norm_examples() {
        let m = Measure::new(vec![1.0; 3]).unwrap();
        assert!((lq_norm(&[1.0; 3], 2.0, &m).unwrap() - 3f64.sqrt()).abs() < 1e-15);
        let m = Measure::new(vec![4.0, 1.0]).unwrap();
        assert_eq!(lq_norm(&[1.0, 0.0], 1.0, &m).unwrap(), 4.0);
        assert_eq!(lq_norm(&[-3.0, 2.0], f64::INFINITY, &m).unwrap(), 3.0);
        assert!(lq_norm(&[1.0, 0.0], 0.5, &m).is_err());
    }

    #[test]
    fn lq_norm_matches_term_by_term_summation() {
        let mut rng = crate::random::rng(50);
        let f = crate::random::real_vector(&mut rng, 50);
        let w: Vec<f64> = crate::random::real_vector(&mut rng, 50)
            .iter()
            .map(|v| v.abs() + 0.1)
            .collect();
        // Neumaier-compensated sum of |f|³ w, without the rescaling lq_norm uses.
        let (mut sum, mut carry) = (0.0f64, 0.0f64);
        for (v, wx) in f.iter().zip(&w) {
            let term = v.abs().powi(3) * wx;
            let next = sum + term;
            carry += if sum.abs() >= term.abs() {
                (sum - next) + term
            } else {
                (term - next) + sum
            };
            sum = next;
        }
        let oracle = (sum + carry).cbrt();
        let got = lq_norm(&f, 3.0, &Measure::new(w).unwrap()).unwrap();
        assert!((got - oracle).abs() <= 1e-12 * oracle, "{got} vs {oracle}");
    }

    #[test]
    fn weak_profile_examples() {
        let m = Measure::new(vec![1.0; 10]).unwrap();
        assert_eq!(
            weak_vanishing_profile(&[0.0; 10], &m, &[0.1]).unwrap()[0].1,
            0.0
        );
        assert_eq!(
            weak_vanishing_profile(&[1.0; 10], &m, &[0.5]).unwrap()[0].1,
            10.0
        );
        let f: Vec<f64> = (1..=10).map(|k| 1.0 / k as f64).collect();
        // 1/k >= 1/3 holds for k = 1, 2, 3.
        assert_eq!(
            weak_vanishing_profile(&f, &m, &[1.0 / 3.0]).unwrap()[0].1,
            3.0
        );
    }

    #[test]
    fn exhaustion_examples() {
        let g = WeightedGraph::new([("x", 1.0)], Vec::<(&str, &str, f64)>::new()).unwrap();
        let ex = build_exhaustion(&g, 0, &[1, 2, 3]).unwrap();
        assert_eq!(ex.levels(), &[vec![0]]);

        let g = path(7, 1.0, 1.0);
        let ex = build_exhaustion(&g, 0, &[1, 2, 3]).unwrap();
        let sizes: Vec<usize> = ex.levels().iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![2, 3, 4]);

        let g = star(5);
        let ex = build_exhaustion(&g, 0, &[1, 2]).unwrap();
        assert_eq!(ex.levels().len(), 1);
        assert_eq!(ex.levels()[0].len(), 6);
    }

    #[test]
    fn exhaustion_rejects_disconnected_hosts() {
        let g =
            WeightedGraph::new([("a", 1.0), ("b", 1.0)], Vec::<(&str, &str, f64)>::new()).unwrap();
        assert!(matches!(
            build_exhaustion(&g, 0, &[1]),
            Err(Error::Disconnected(2))
        ));
    }

    #[test]
    fn explicit_levels_must_nest() {
        assert!(Exhaustion::from_levels(vec![vec![0, 1], vec![1, 2]], 3).is_err());
        assert!(Exhaustion::from_levels(vec![vec![0, 1], vec![0, 1]], 3).is_err());
        assert!(Exhaustion::from_levels(vec![vec![1], vec![0, 1, 2]], 3).is_ok());
    }

    #[test]
    fn reweighted_measure_matches_definition() {
        let m = Measure::new(vec![1.0, 2.0, 3.0]).unwrap();
        let mf = m.reweighted(&[2.0, 0.5, 1.0]).unwrap();
        assert_eq!(mf.mass([0, 1, 2]), 2.0 + 1.0 + 3.0);
        assert!(m.reweighted(&[1.0, 0.0, 1.0]).is_err());
    }
}
