//! Hermitian vector bundles over a vertex set, unitary connections,
//! endomorphism fields and the orthonormal-frame trivialization.
//!
//! A bundle of rank `d` assigns to every vertex the fiber `ℂ^d` with a
//! Hermitian positive definite metric `G_x`, so that `(u, v)_x = u^* G_x v`.
//! Vertices are addressed by their index in the owning [`WeightedGraph`].

use std::collections::BTreeMap;

use nalgebra::Cholesky;
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::linalg::{hermitian_defect, max_abs, operator_norm, CMat, CVec, Spectral, ONE, ZERO};
use crate::random;

pub const MAX_RANK: usize = 8;
/// Tolerance for the inverse and unitarity conditions on a connection.
pub const CONNECTION_TOL: f64 = 1e-10;
/// Tolerance for Hermitian symmetry of metrics and self-adjointness of fields.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalues above `-NONNEG_TOL` count as nonnegative.
pub const NONNEG_TOL: f64 = 1e-12;
/// Largest admissible condition number of a fiber metric.
pub const MAX_METRIC_CONDITION: f64 = 1e12;

fn check_rank(rank: usize) -> Result<()> {
    if rank == 0 || rank > MAX_RANK {
        return Err(Error::UnsupportedRank(rank));
    }
    Ok(())
}

fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

#[derive(Debug, Clone)]
pub struct HermitianBundle {
    rank: usize,
    len: usize,
    // None means every fiber carries the Euclidean metric.
    metrics: Option<Vec<CMat>>,
}

impl HermitianBundle {
    pub fn identity(len: usize, rank: usize) -> Result<Self> {
        check_rank(rank)?;
        Ok(Self {
            rank,
            len,
            metrics: None,
        })
    }

    pub fn with_metrics(rank: usize, metrics: Vec<CMat>) -> Result<Self> {
        check_rank(rank)?;
        for (x, g) in metrics.iter().enumerate() {
            let bad = |reason: String| Error::BadMetric {
                vertex: x.to_string(),
                reason,
            };
            if g.nrows() != rank || g.ncols() != rank {
                return Err(bad(format!(
                    "shape {}x{} for rank {rank}",
                    g.nrows(),
                    g.ncols()
                )));
            }
            let defect = hermitian_defect(g);
            if defect > HERMITIAN_TOL * max_abs(g).max(1.0) {
                return Err(bad(format!("not Hermitian (defect {defect:e})")));
            }
            let spec = Spectral::of_hermitian(g)?;
            if !(spec.min() > 0.0) {
                return Err(bad(format!(
                    "not positive definite (min eigenvalue {:e})",
                    spec.min()
                )));
            }
        }
        Ok(Self {
            rank,
            len: metrics.len(),
            metrics: Some(metrics),
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn has_identity_metric(&self) -> bool {
        self.metrics.is_none()
    }

    pub fn metric(&self, x: usize) -> CMat {
        match &self.metrics {
            Some(m) => m[x].clone(),
            None => identity(self.rank),
        }
    }

    /// `(u, v)_x = u^* G_x v`.
    pub fn inner(&self, x: usize, u: &CVec, v: &CVec) -> Complex64 {
        match &self.metrics {
            Some(m) => (u.adjoint() * &m[x] * v)[(0, 0)],
            None => u.dotc(v),
        }
    }

    pub fn norm(&self, x: usize, v: &CVec) -> f64 {
        self.inner(x, v, v).re.max(0.0).sqrt()
    }
}

/// A section `f(x) ∈ ℂ^d`, one fiber vector per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    rank: usize,
    values: Vec<CVec>,
}

impl Section {
    pub fn new(rank: usize, values: Vec<CVec>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| v.len() != rank) {
            return Err(Error::ShapeMismatch {
                expected: rank,
                found: v.len(),
            });
        }
        Ok(Self { rank, values })
    }

    pub fn zeros(len: usize, rank: usize) -> Self {
        Self {
            rank,
            values: vec![CVec::zeros(rank); len],
        }
    }

    pub fn scalar(values: &[Complex64]) -> Self {
        Self {
            rank: 1,
            values: values.iter().map(|&z| CVec::from_element(1, z)).collect(),
        }
    }

    /// Vertex `x`, fiber coordinate `j` set to one; everything else zero.
    pub fn basis(len: usize, rank: usize, x: usize, j: usize) -> Self {
        let mut s = Self::zeros(len, rank);
        s.values[x][j] = ONE;
        s
    }

    /// Reads a flat vector laid out vertex-major (`x * rank + j`).
    pub fn from_flat(rank: usize, flat: &[Complex64]) -> Self {
        Self {
            rank,
            values: flat.chunks(rank).map(CVec::from_column_slice).collect(),
        }
    }

    pub fn to_flat(&self) -> Vec<Complex64> {
        self.values.iter().flat_map(|v| v.iter().copied()).collect()
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, len: usize, rank: usize) -> Self {
        Self {
            rank,
            values: (0..len)
                .map(|_| random::complex_vector(rng, rank))
                .collect(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[CVec] {
        &self.values
    }

    pub fn at(&self, x: usize) -> &CVec {
        &self.values[x]
    }
}

fn check_section(f: &Section, bundle: &HermitianBundle) -> Result<()> {
    if f.rank != bundle.rank {
        return Err(Error::ShapeMismatch {
            expected: bundle.rank,
            found: f.rank,
        });
    }
    if f.len() != bundle.len {
        return Err(Error::ShapeMismatch {
            expected: bundle.len,
            found: f.len(),
        });
    }
    Ok(())
}

/// `x ↦ |f(x)|_x`.
pub fn pointwise_norm(f: &Section, bundle: &HermitianBundle) -> Result<Vec<f64>> {
    check_section(f, bundle)?;
    Ok(f.values
        .iter()
        .enumerate()
        .map(|(x, v)| bundle.norm(x, v))
        .collect())
}

/// Per-vertex orthonormal frames `e_1(x), …, e_d(x)` (the columns of `E_x`),
/// together with the coefficient maps `C_x = E_x^* G_x`.
#[derive(Debug, Clone)]
pub struct Frame {
    vectors: Vec<CMat>,
    coefficients: Vec<CMat>,
}

impl Frame {
    pub fn vectors(&self, x: usize) -> &CMat {
        &self.vectors[x]
    }

    /// `C_x`, mapping fiber vectors to frame coefficients.
    pub fn coefficient_map(&self, x: usize) -> &CMat {
        &self.coefficients[x]
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Gram–Schmidt in each fiber metric applied to the standard basis.
pub fn gram_schmidt_frame(bundle: &HermitianBundle) -> Result<Frame> {
    let d = bundle.rank;
    let mut vectors = Vec::with_capacity(bundle.len);
    let mut coefficients = Vec::with_capacity(bundle.len);
    for x in 0..bundle.len {
        let g = bundle.metric(x);
        let spec = Spectral::of_hermitian(&g)?;
        let cond = spec.max() / spec.min();
        if !(cond <= MAX_METRIC_CONDITION) {
            return Err(Error::BadMetric {
                vertex: x.to_string(),
                reason: format!("condition number {cond:e} exceeds {MAX_METRIC_CONDITION:e}"),
            });
        }
        let mut e = CMat::zeros(d, d);
        for j in 0..d {
            let mut v = CVec::zeros(d);
            v[j] = ONE;
            // Modified Gram–Schmidt, twice for stability.
            for _ in 0..2 {
                for k in 0..j {
                    let ek = e.column(k).into_owned();
                    let c = (ek.adjoint() * &g * &v)[(0, 0)];
                    v -= ek * c;
                }
            }
            let n = (v.adjoint() * &g * &v)[(0, 0)].re.sqrt();
            e.set_column(j, &(v / Complex64::new(n, 0.0)));
        }
        coefficients.push(e.adjoint() * &g);
        vectors.push(e);
    }
    Ok(Frame {
        vectors,
        coefficients,
    })
}

/// Frame coefficients `c_j(x) = (e_j(x), f(x))_x`.
pub fn trivialize(f: &Section, frame: &Frame) -> Result<Section> {
    if f.len() != frame.len() {
        return Err(Error::ShapeMismatch {
            expected: frame.len(),
            found: f.len(),
        });
    }
    Ok(Section {
        rank: f.rank,
        values: f
            .values
            .iter()
            .enumerate()
            .map(|(x, v)| &frame.coefficients[x] * v)
            .collect(),
    })
}

/// `f(x) = Σ_j c_j(x) e_j(x)`.
pub fn untrivialize(c: &Section, frame: &Frame) -> Result<Section> {
    if c.len() != frame.len() {
        return Err(Error::ShapeMismatch {
            expected: frame.len(),
            found: c.len(),
        });
    }
    Ok(Section {
        rank: c.rank,
        values: c
            .values
            .iter()
            .enumerate()
            .map(|(x, v)| &frame.vectors[x] * v)
            .collect(),
    })
}

/// Worst observed defect of the two connection conditions.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct ConnectionDefects {
    pub inverse: f64,
    pub unitarity: f64,
}

/// Fiber maps `Φ_{x,y}: E_x → E_y` on directed edges. Edges without a stored
/// map carry the identity.
#[derive(Debug, Clone)]
pub struct UnitaryConnection {
    rank: usize,
    maps: BTreeMap<(usize, usize), CMat>,
}

impl UnitaryConnection {
    /// Validates `maps` against `g` and `bundle`: every stored pair must be
    /// an edge, both directions must be present, `Φ_{y,x} Φ_{x,y} = Id` and
    /// `Φ_{x,y}^* G_y Φ_{x,y} = G_x`, each within [`CONNECTION_TOL`].
    pub fn new(
        g: &WeightedGraph,
        bundle: &HermitianBundle,
        maps: BTreeMap<(usize, usize), CMat>,
    ) -> Result<Self> {
        let d = bundle.rank;
        for (&(x, y), phi) in &maps {
            let (u, v) = (g.id(x).to_string(), g.id(y).to_string());
            if !g.is_adjacent(x, y) {
                return Err(Error::InvalidArgument(format!(
                    "connection map on non-edge ({u}, {v})"
                )));
            }
            if phi.nrows() != d || phi.ncols() != d {
                return Err(Error::ShapeMismatch {
                    expected: d,
                    found: phi.nrows(),
                });
            }
            let back = maps.get(&(y, x)).ok_or_else(|| Error::BadConnection {
                u: v.clone(),
                v: u.clone(),
                condition: "presence of the reverse map",
                defect: f64::INFINITY,
            })?;
            let inverse = operator_norm(&(back * phi - identity(d)));
            if !(inverse <= CONNECTION_TOL) {
                return Err(Error::BadConnection {
                    u,
                    v,
                    condition: "Φ_{y,x} = Φ_{x,y}^{-1}",
                    defect: inverse,
                });
            }
            let unitary =
                operator_norm(&(phi.adjoint() * bundle.metric(y) * phi - bundle.metric(x)));
            if !(unitary <= CONNECTION_TOL) {
                return Err(Error::BadConnection {
                    u,
                    v,
                    condition: "Φ_{x,y}^* = Φ_{x,y}^{-1}",
                    defect: unitary,
                });
            }
        }
        Ok(Self { rank: d, maps })
    }

    /// Stores the given maps together with their inverses.
    pub fn from_forward(
        g: &WeightedGraph,
        bundle: &HermitianBundle,
        forward: impl IntoIterator<Item = ((usize, usize), CMat)>,
    ) -> Result<Self> {
        let mut maps = BTreeMap::new();
        for ((x, y), phi) in forward {
            let inv = phi
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::BadConnection {
                    u: g.id(x).to_string(),
                    v: g.id(y).to_string(),
                    condition: "invertibility",
                    defect: f64::INFINITY,
                })?;
            maps.insert((y, x), inv);
            maps.insert((x, y), phi);
        }
        Self::new(g, bundle, maps)
    }

    pub fn trivial(rank: usize) -> Self {
        Self {
            rank,
            maps: BTreeMap::new(),
        }
    }

    /// Rank-one connection `Φ_{x,y} = e^{iθ(x,y)}` for `x < y`.
    pub fn magnetic(g: &WeightedGraph, theta: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let bundle = HermitianBundle::identity(g.len(), 1)?;
        let forward: Vec<_> = g
            .edges()
            .filter(|&(x, y, _)| g.is_adjacent(x, y))
            .map(|(x, y, _)| {
                let phase = Complex64::from_polar(1.0, theta(x, y));
                ((x, y), CMat::from_element(1, 1, phase))
            })
            .collect();
        Self::from_forward(g, &bundle, forward)
    }

    /// Haar-random maps on every edge, unitary with respect to `bundle`'s metrics.
    pub fn random<R: Rng + ?Sized>(
        g: &WeightedGraph,
        bundle: &HermitianBundle,
        rng: &mut R,
    ) -> Result<Self> {
        let d = bundle.rank;
        let frame = gram_schmidt_frame(bundle)?;
        let mut maps = BTreeMap::new();
        for (x, y, _) in g.edges() {
            if !g.is_adjacent(x, y) {
                continue;
            }
            let u = random::unitary(rng, d);
            let phi = frame.vectors(y) * &u * frame.coefficient_map(x);
            let back = frame.vectors(x) * u.adjoint() * frame.coefficient_map(y);
            maps.insert((x, y), phi);
            maps.insert((y, x), back);
        }
        Self::new(g, bundle, maps)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn get(&self, x: usize, y: usize) -> Option<&CMat> {
        self.maps.get(&(x, y))
    }

    /// `Φ_{x,y}`, defaulting to the identity on edges without a stored map.
    pub fn phi(&self, x: usize, y: usize) -> CMat {
        self.get(x, y)
            .cloned()
            .unwrap_or_else(|| identity(self.rank))
    }

    pub fn maps(&self) -> &BTreeMap<(usize, usize), CMat> {
        &self.maps
    }

    pub fn defects(&self, bundle: &HermitianBundle) -> ConnectionDefects {
        let d = self.rank;
        let mut out = ConnectionDefects::default();
        for (&(x, y), phi) in &self.maps {
            let back = self.phi(y, x);
            out.inverse = out.inverse.max(operator_norm(&(back * phi - identity(d))));
            out.unitarity = out.unitarity.max(operator_norm(
                &(phi.adjoint() * bundle.metric(y) * phi - bundle.metric(x)),
            ));
        }
        out
    }

    /// `Φ'_{x,y} = U(y) Φ_{x,y} U(x)^{-1}` for per-vertex unitaries `U`.
    /// Edges without a stored map are materialized first.
    pub fn gauge_transform(&self, g: &WeightedGraph, u: &[CMat]) -> Self {
        let mut maps = BTreeMap::new();
        for (x, y, _) in g.edges() {
            if !g.is_adjacent(x, y) {
                continue;
            }
            for (a, b) in [(x, y), (y, x)] {
                maps.insert((a, b), &u[b] * self.phi(a, b) * u[a].adjoint());
            }
        }
        Self {
            rank: self.rank,
            maps,
        }
    }

    /// The same connection expressed in frame coefficients:
    /// `C_y Φ_{x,y} E_x`, unitary for the Euclidean metric.
    pub fn trivialized(&self, g: &WeightedGraph, frame: &Frame) -> Self {
        let mut maps = BTreeMap::new();
        for (x, y, _) in g.edges() {
            if !g.is_adjacent(x, y) {
                continue;
            }
            for (a, b) in [(x, y), (y, x)] {
                maps.insert(
                    (a, b),
                    frame.coefficient_map(b) * self.phi(a, b) * frame.vectors(a),
                );
            }
        }
        Self {
            rank: self.rank,
            maps,
        }
    }
}

/// Per-vertex `d × d` matrices `W(x)`, with flags describing them relative to
/// the Euclidean fiber metric.
#[derive(Debug, Clone, PartialEq)]
pub struct EndomorphismField {
    rank: usize,
    values: Vec<CMat>,
    self_adjoint: bool,
    nonnegative: bool,
}

impl EndomorphismField {
    pub fn new(rank: usize, values: Vec<CMat>) -> Result<Self> {
        check_rank(rank)?;
        if let Some(w) = values
            .iter()
            .find(|w| w.nrows() != rank || w.ncols() != rank)
        {
            return Err(Error::ShapeMismatch {
                expected: rank,
                found: w.nrows(),
            });
        }
        let identity = HermitianBundle::identity(values.len(), rank)?;
        let (self_adjoint, nonnegative) = field_flags(&values, &identity)?;
        Ok(Self {
            rank,
            values,
            self_adjoint,
            nonnegative,
        })
    }

    pub fn scalar(values: &[f64]) -> Self {
        Self::new(
            1,
            values
                .iter()
                .map(|&v| CMat::from_element(1, 1, Complex64::new(v, 0.0)))
                .collect(),
        )
        .expect("rank one is supported")
    }

    pub fn zeros(len: usize, rank: usize) -> Result<Self> {
        Self::new(rank, vec![CMat::zeros(rank, rank); len])
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[CMat] {
        &self.values
    }

    pub fn at(&self, x: usize) -> &CMat {
        &self.values[x]
    }

    pub fn is_self_adjoint(&self) -> bool {
        self.self_adjoint
    }

    pub fn is_nonnegative(&self) -> bool {
        self.nonnegative
    }

    /// Flags `(self_adjoint, nonnegative)` relative to `bundle`'s metrics.
    pub fn flags_in(&self, bundle: &HermitianBundle) -> Result<(bool, bool)> {
        field_flags(&self.values, bundle)
    }

    /// Real values of a rank-one field, if it has no imaginary part.
    pub fn as_scalar(&self) -> Option<Vec<f64>> {
        if self.rank != 1 || self.values.iter().any(|w| w[(0, 0)].im != 0.0) {
            return None;
        }
        Some(self.values.iter().map(|w| w[(0, 0)].re).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|w| w.iter().all(|z| *z == ZERO))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Self::new(
            self.rank,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Self::new(
            self.rank,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    /// Keeps `W(x)` where `keep(x)` holds and zeroes it elsewhere.
    pub fn masked(&self, keep: impl Fn(usize) -> bool) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(x, w)| {
                if keep(x) {
                    w.clone()
                } else {
                    CMat::zeros(self.rank, self.rank)
                }
            })
            .collect();
        Self::new(self.rank, values).expect("shape preserved")
    }

    /// Restriction to a list of vertices, in that order.
    pub fn restricted(&self, subset: &[usize]) -> Self {
        Self::new(
            self.rank,
            subset.iter().map(|&x| self.values[x].clone()).collect(),
        )
        .expect("shape preserved")
    }

    /// `C_x W(x) E_x`: the field in orthonormal frame coordinates.
    pub fn trivialized(&self, frame: &Frame) -> Result<Self> {
        Self::new(
            self.rank,
            self.values
                .iter()
                .enumerate()
                .map(|(x, w)| frame.coefficient_map(x) * w * frame.vectors(x))
                .collect(),
        )
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.rank != other.rank {
            return Err(Error::ShapeMismatch {
                expected: self.rank,
                found: other.rank,
            });
        }
        if self.len() != other.len() {
            return Err(Error::ShapeMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(())
    }
}

fn whitened(w: &CMat, x: usize, bundle: &HermitianBundle) -> Result<CMat> {
    if bundle.has_identity_metric() {
        return Ok(w.clone());
    }
    // G = L L^*, so |v|_G = |L^* v| and W acts as L^* W L^{-*}.
    let l = Cholesky::new(bundle.metric(x))
        .ok_or_else(|| Error::BadMetric {
            vertex: x.to_string(),
            reason: "Cholesky factorization failed".into(),
        })?
        .unpack();
    let lh = l.adjoint();
    let lh_inv = lh.clone().try_inverse().ok_or(Error::Eigen)?;
    Ok(lh * w * lh_inv)
}

fn field_flags(values: &[CMat], bundle: &HermitianBundle) -> Result<(bool, bool)> {
    let mut self_adjoint = true;
    let mut nonnegative = true;
    for (x, w) in values.iter().enumerate() {
        let a = whitened(w, x, bundle)?;
        if hermitian_defect(&a) > HERMITIAN_TOL * max_abs(&a).max(1.0) {
            self_adjoint = false;
            nonnegative = false;
            break;
        }
        if nonnegative && Spectral::of_hermitian(&a)?.min() < -NONNEG_TOL {
            nonnegative = false;
        }
    }
    Ok((self_adjoint, nonnegative))
}

/// `x ↦ ‖W(x)‖` in the operator norm induced by the fiber metric.
pub fn endo_norm(w: &EndomorphismField, bundle: &HermitianBundle) -> Result<Vec<f64>> {
    if w.rank != bundle.rank {
        return Err(Error::ShapeMismatch {
            expected: bundle.rank,
            found: w.rank,
        });
    }
    if w.len() != bundle.len {
        return Err(Error::ShapeMismatch {
            expected: bundle.len,
            found: w.len(),
        });
    }
    w.values
        .iter()
        .enumerate()
        .map(|(x, m)| {
            if w.rank == 1 {
                Ok(m[(0, 0)].norm())
            } else {
                Ok(operator_norm(&whitened(m, x, bundle)?))
            }
        })
        .collect()
}

/// How to split a potential `W = W1 + W2`.
#[derive(Debug, Clone)]
pub enum Split {
    /// `W1 = 1_{|W| > c} W`, so that `|W2| ≤ c`.
    Threshold(f64),
    /// `W1 = 1_S W`.
    Support(Vec<usize>),
    /// User-supplied parts; must sum to `W`.
    Explicit(EndomorphismField, EndomorphismField),
}

/// Tolerance on `W1 + W2 = W` for explicit splits.
pub const SPLIT_TOL: f64 = 1e-12;

/// Returns `(W1, W2)` with `W2 = W − W1`.
pub fn decompose_potential(
    w: &EndomorphismField,
    split: &Split,
    bundle: &HermitianBundle,
) -> Result<(EndomorphismField, EndomorphismField)> {
    let w1 = match split {
        Split::Threshold(c) => {
            if !(*c >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "threshold {c} must be nonnegative"
                )));
            }
            let norms = endo_norm(w, bundle)?;
            w.masked(|x| norms[x] > *c)
        }
        Split::Support(set) => {
            if let Some(&x) = set.iter().find(|&&x| x >= w.len()) {
                return Err(Error::InvalidArgument(format!(
                    "support index {x} out of range"
                )));
            }
            let mut keep = vec![false; w.len()];
            for &x in set {
                keep[x] = true;
            }
            w.masked(|x| keep[x])
        }
        Split::Explicit(w1, w2) => {
            let sum = w1.add(w2)?;
            let defect = sum
                .values
                .iter()
                .zip(&w.values)
                .map(|(a, b)| max_abs(&(a - b)))
                .fold(0.0, f64::max);
            if !(defect <= SPLIT_TOL) {
                return Err(Error::InvalidArgument(format!(
                    "explicit split does not sum to W (defect {defect:e})"
                )));
            }
            w1.clone()
        }
    };
    let w2 = w.sub(&w1)?;
    Ok((w1, w2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generators;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn diag(entries: &[f64]) -> CMat {
        let d = entries.len();
        CMat::from_fn(d, d, |i, j| if i == j { c(entries[i], 0.0) } else { ZERO })
    }

    #[test]
    fn pointwise_norm_examples() {
        let b1 = HermitianBundle::identity(1, 1).unwrap();
        let f = Section::scalar(&[c(3.0, 4.0)]);
        assert_eq!(pointwise_norm(&f, &b1).unwrap(), vec![5.0]);

        let b2 = HermitianBundle::identity(1, 2).unwrap();
        let f = Section::new(2, vec![CVec::from_vec(vec![ONE, ONE])]).unwrap();
        assert!((pointwise_norm(&f, &b2).unwrap()[0] - 2f64.sqrt()).abs() < 1e-15);

        let b3 = HermitianBundle::with_metrics(2, vec![diag(&[4.0, 1.0])]).unwrap();
        let f = Section::new(2, vec![CVec::from_vec(vec![ONE, ZERO])]).unwrap();
        assert_eq!(pointwise_norm(&f, &b3).unwrap(), vec![2.0]);
    }

    #[test]
    fn endo_norm_examples() {
        let b = HermitianBundle::identity(2, 2).unwrap();
        let w = EndomorphismField::new(2, vec![CMat::zeros(2, 2), diag(&[2.0, -3.0])]).unwrap();
        assert_eq!(endo_norm(&w, &b).unwrap(), vec![0.0, 3.0]);
    }

    #[test]
    fn endo_norm_matches_power_iteration() {
        let mut rng = random::rng(7);
        let m = random::complex_gaussian_matrix(&mut rng, 3);
        let w = EndomorphismField::new(3, vec![m.clone()]).unwrap();
        let b = HermitianBundle::identity(1, 3).unwrap();
        let norm = endo_norm(&w, &b).unwrap()[0];
        // Power iteration on W^* W.
        let ww = m.adjoint() * &m;
        let mut v = CVec::from_element(3, ONE);
        let mut lambda = 0.0;
        for _ in 0..2000 {
            let next = &ww * &v;
            lambda = next.norm() / v.norm();
            v = next.clone() / c(next.norm(), 0.0);
        }
        assert!((norm - lambda.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn frame_examples() {
        let b = HermitianBundle::identity(2, 2).unwrap();
        let frame = gram_schmidt_frame(&b).unwrap();
        assert_eq!(frame.vectors(0), &CMat::identity(2, 2));

        let b = HermitianBundle::with_metrics(2, vec![diag(&[4.0, 1.0])]).unwrap();
        let frame = gram_schmidt_frame(&b).unwrap();
        assert!((frame.vectors(0)[(0, 0)] - c(0.5, 0.0)).norm() < 1e-15);
        let f = Section::new(2, vec![CVec::from_vec(vec![ONE, ZERO])]).unwrap();
        let t = trivialize(&f, &frame).unwrap();
        assert!((t.at(0)[0] - c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn ill_conditioned_metric_is_rejected() {
        let b = HermitianBundle::with_metrics(2, vec![diag(&[1.0, 1e-13])]).unwrap();
        assert!(matches!(
            gram_schmidt_frame(&b),
            Err(Error::BadMetric { .. })
        ));
    }

    #[test]
    fn bad_metrics_are_rejected() {
        assert!(HermitianBundle::with_metrics(2, vec![diag(&[1.0, -1.0])]).is_err());
        let mut g = diag(&[1.0, 1.0]);
        g[(0, 1)] = c(0.5, 0.0);
        assert!(HermitianBundle::with_metrics(2, vec![g]).is_err());
        assert!(HermitianBundle::identity(3, 9).is_err());
    }

    #[test]
    fn connection_rejects_broken_inverse() {
        let g = generators::path(2, 1.0, 1.0);
        let b = HermitianBundle::identity(2, 1).unwrap();
        let mut maps = BTreeMap::new();
        maps.insert((0, 1), CMat::from_element(1, 1, c(0.0, 1.0)));
        maps.insert((1, 0), CMat::from_element(1, 1, c(0.0, 1.0)));
        let err = UnitaryConnection::new(&g, &b, maps).unwrap_err();
        assert!(matches!(err, Error::BadConnection { .. }));

        let mut maps = BTreeMap::new();
        maps.insert((0, 1), CMat::from_element(1, 1, c(2.0, 0.0)));
        maps.insert((1, 0), CMat::from_element(1, 1, c(0.5, 0.0)));
        let err = UnitaryConnection::new(&g, &b, maps).unwrap_err();
        assert!(matches!(err, Error::BadConnection { condition, .. } if condition.contains("^*")));
    }

    #[test]
    fn decompose_examples() {
        let n = 6;
        let b = HermitianBundle::identity(n, 1).unwrap();
        let zero = EndomorphismField::scalar(&vec![0.0; n]);
        let (w1, w2) = decompose_potential(&zero, &Split::Threshold(0.1), &b).unwrap();
        assert!(w1.is_zero() && w2.is_zero());

        let f: Vec<f64> = (1..=n).map(|k| 1.0 / k as f64).collect();
        let w = EndomorphismField::scalar(&f);
        let (w1, w2) = decompose_potential(&w, &Split::Threshold(1.0 / 3.0), &b).unwrap();
        let s1 = w1.as_scalar().unwrap();
        assert_eq!(&s1[..2], &f[..2]);
        assert!(s1[2..].iter().all(|&v| v == 0.0));
        assert!(endo_norm(&w2, &b).unwrap().iter().all(|&v| v <= 1.0 / 3.0));
        assert!(w1.is_self_adjoint() && w2.is_self_adjoint());

        let (w1, w2) = decompose_potential(&w, &Split::Support((0..n).collect()), &b).unwrap();
        assert_eq!(w1, w);
        assert!(w2.is_zero());

        let bad = Split::Explicit(w.clone(), w.clone());
        assert!(decompose_potential(&w, &bad, &b).is_err());
    }

    #[test]
    fn random_connection_is_unitary_for_general_metrics() {
        let mut rng = random::rng(3);
        let g = generators::cycle(5);
        let metrics = (0..5)
            .map(|_| random::positive_definite(&mut rng, 2, 0.5, 3.0))
            .collect();
        let b = HermitianBundle::with_metrics(2, metrics).unwrap();
        let conn = UnitaryConnection::random(&g, &b, &mut rng).unwrap();
        let defects = conn.defects(&b);
        assert!(defects.inverse < 1e-12 && defects.unitarity < 1e-12);
        let frame = gram_schmidt_frame(&b).unwrap();
        let flat = conn.trivialized(&g, &frame);
        let euclid = HermitianBundle::identity(5, 2).unwrap();
        assert!(flat.defects(&euclid).unitarity < 1e-10);
    }
}
