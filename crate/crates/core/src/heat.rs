//! Heat semigroups `e^{-tH}`, heat kernels and their verification.
//!
//! Kernel convention: `e^{-tH} f(x) = Σ_y p(t,x,y) f(y) ρ(y)`, so
//! `p(t,x,y) = [e^{-tH}]_{xy} / ρ(y)`. In symmetrized coordinates this is
//! `[e^{-tA}]_{xy} / √(ρ(x) ρ(y))`. At `t = 0` the kernel is `δ_{xy} / ρ(y)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Exhaustion, WeightedGraph};
use crate::linalg::{weighted_norm, CMat};
use crate::operators::{assemble_laplacian, dirichlet_restriction, OperatorMatrix, PSD_TOL};
use crate::report::{LedgerRow, Location, Tolerances};

/// Default time grid. Closed under doubling on `0.1 … 2` and contains
/// `0.1 + 0.4 = 0.5`, so the semigroup law has several composable pairs.
pub const DEFAULT_TIMES: [f64; 13] = [
    0.001, 0.01, 0.1, 0.2, 0.4, 0.5, 0.8, 1.0, 1.6, 2.0, 4.0, 10.0, 100.0,
];

/// Probe times for strong continuity at `t ↓ 0`.
pub const CONTINUITY_TIMES: [f64; 2] = [1e-3, 1e-6];

fn require_psd(h: &OperatorMatrix) -> Result<()> {
    let min = h.min_eigenvalue()?;
    if min < -PSD_TOL {
        return Err(Error::NotPositive(min));
    }
    Ok(())
}

fn check_time(t: f64) -> Result<()> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "time {t} must be finite and nonnegative"
        )));
    }
    Ok(())
}

/// `e^{-tH}` through the eigendecomposition of the symmetrized operator;
/// exactly the identity at `t = 0`.
pub fn semigroup(h: &OperatorMatrix, t: f64) -> Result<CMat> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(CMat::identity(h.dim(), h.dim()));
    }
    require_psd(h)?;
    h.function(|lambda| (-t * lambda).exp())
}

/// Tabulated `p(t, ·, ·)` on a time grid, for a scalar operator.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatKernel {
    times: Vec<f64>,
    kernels: Vec<DMatrix<f64>>,
    ids: Vec<String>,
    rho: Vec<f64>,
    vertices: Vec<usize>,
}

impl HeatKernel {
    /// Wraps stored kernels. Times must be strictly increasing and
    /// nonnegative; every matrix must be `n × n` for `n = rho.len()`.
    pub fn new(
        times: Vec<f64>,
        kernels: Vec<DMatrix<f64>>,
        ids: Vec<String>,
        rho: Vec<f64>,
    ) -> Result<Self> {
        let n = rho.len();
        if ids.len() != n {
            return Err(Error::ShapeMismatch {
                expected: n,
                found: ids.len(),
            });
        }
        if times.len() != kernels.len() {
            return Err(Error::ShapeMismatch {
                expected: times.len(),
                found: kernels.len(),
            });
        }
        for &t in &times {
            check_time(t)?;
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "kernel times must be strictly increasing".into(),
            ));
        }
        if let Some(k) = kernels.iter().find(|k| k.nrows() != n || k.ncols() != n) {
            return Err(Error::ShapeMismatch {
                expected: n,
                found: k.nrows(),
            });
        }
        if let Some(r) = rho.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "kernel measure weight {r} is not positive"
            )));
        }
        Ok(Self {
            times,
            kernels,
            ids,
            rho,
            vertices: (0..n).collect(),
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn kernels(&self) -> &[DMatrix<f64>] {
        &self.kernels
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    /// Host-graph indices of the kernel's vertices.
    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    /// Index of `t` on the grid, up to a relative mismatch of `1e-12`.
    pub fn time_index(&self, t: f64) -> Option<usize> {
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
    }

    pub fn at(&self, t: f64) -> Result<&DMatrix<f64>> {
        self.time_index(t)
            .map(|i| &self.kernels[i])
            .ok_or(Error::TimeNotOnGrid(t))
    }

    /// `p(t, x, x)` for every vertex.
    pub fn diagonal(&self, t: f64) -> Result<Vec<f64>> {
        Ok(self.at(t)?.diagonal().iter().copied().collect())
    }

    /// Mutable access, for corrupting kernels in tests and fixtures.
    pub fn kernels_mut(&mut self) -> &mut [DMatrix<f64>] {
        &mut self.kernels
    }
}

/// `p(t,x,y) = [e^{-tH}]_{xy} / ρ(y)` on every requested time.
pub fn kernel_from_semigroup(h: &OperatorMatrix, times: &[f64]) -> Result<HeatKernel> {
    if h.rank() != 1 || !h.is_real() {
        return Err(Error::NotScalar);
    }
    for &t in times {
        check_time(t)?;
    }
    require_psd(h)?;
    let rho = h.rho().to_vec();
    let n = rho.len();
    let inv_sqrt: Vec<f64> = rho.iter().map(|r| 1.0 / r.sqrt()).collect();
    let kernels: Vec<DMatrix<f64>> = times
        .par_iter()
        .map(|&t| -> Result<DMatrix<f64>> {
            if t == 0.0 {
                return Ok(DMatrix::from_fn(n, n, |x, y| {
                    if x == y {
                        1.0 / rho[y]
                    } else {
                        0.0
                    }
                }));
            }
            let e = h
                .symmetric_function_real(|lambda| (-t * lambda).exp())?
                .ok_or(Error::NotScalar)?;
            Ok(DMatrix::from_fn(n, n, |x, y| {
                e[(x, y)] * inv_sqrt[x] * inv_sqrt[y]
            }))
        })
        .collect::<Result<_>>()?;
    let mut k = HeatKernel::new(times.to_vec(), kernels, h.ids().to_vec(), rho)?;
    k.vertices = h.vertices().to_vec();
    Ok(k)
}

#[derive(Debug, Clone, Serialize)]
pub struct AxiomReport {
    pub rows: Vec<LedgerRow>,
    /// Number of `(t, s)` pairs with `t + s` on the grid.
    pub composable_pairs: usize,
    pub row_mass_min: f64,
    pub row_mass_max: f64,
    /// Smallest stored entry, clamped to zero when within rounding.
    pub min_entry: f64,
    pub notes: Vec<String>,
}

impl AxiomReport {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn row(&self, prefix: &str) -> Option<&LedgerRow> {
        self.rows.iter().find(|r| r.name.starts_with(prefix))
    }
}

pub const A1_NAME: &str = "A1 semigroup law p(t+s,x,y) = Σ_z p(t,x,z) p(s,z,y) ρ(z)";
pub const A2_NAME: &str = "A2 symmetry p(t,x,y) = p(t,y,x)";
pub const A3_NAME: &str = "A3 sub-Markov row mass Σ_y p(t,x,y) ρ(y) ≤ 1";
pub const POSITIVITY_NAME: &str = "nonnegativity p(t,x,y) ≥ 0";
pub const CONTINUITY_NAME: &str = "continuity ‖P_t f − f‖ ≤ t ‖H f‖";

/// Negative entries within rounding are shown as zero in reports.
pub fn reported_entry(p: f64, tol: &Tolerances) -> f64 {
    if p < 0.0 && p >= -tol.positivity {
        0.0
    } else {
        p
    }
}

/// Checks the semigroup law, symmetry, sub-Markov property and
/// nonnegativity on stored kernels, and strong continuity at `t ↓ 0` when
/// the generating operator is supplied.
pub fn verify_axioms(
    k: &HeatKernel,
    h: Option<&OperatorMatrix>,
    tol: &Tolerances,
) -> Result<AxiomReport> {
    let n = k.len();
    let ids = k.ids();
    let mut rows = Vec::new();
    let mut notes = Vec::new();

    // A1 on every pair t ≤ s of positive grid times whose sum is on the grid.
    let mut pairs = Vec::new();
    for (i, &t) in k.times.iter().enumerate() {
        for (j, &s) in k.times.iter().enumerate().skip(i) {
            if t > 0.0 && s > 0.0 {
                if let Some(l) = k.time_index(t + s) {
                    pairs.push((i, j, l));
                }
            }
        }
    }
    if pairs.is_empty() {
        notes.push("A1 not evaluated: no stored pair (t, s) with t + s on the grid".into());
    } else {
        let worst = pairs
            .par_iter()
            .map(|&(i, j, l)| {
                let mut left = k.kernels[i].clone();
                for (z, r) in k.rho.iter().enumerate() {
                    left.column_mut(z).scale_mut(*r);
                }
                let composed = left * &k.kernels[j];
                let mut best = (0.0f64, (i, j, 0usize, 0usize));
                for y in 0..n {
                    for x in 0..n {
                        let d = (composed[(x, y)] - k.kernels[l][(x, y)]).abs();
                        if d > best.0 || d.is_nan() {
                            best = (d, (i, j, x, y));
                        }
                    }
                }
                best
            })
            .reduce(|| (0.0, (0, 0, 0, 0)), |a, b| if b.0 > a.0 { b } else { a });
        let (dev, (i, j, x, y)) = worst;
        let mut at = Location::txy(k.times[i], &ids[x], &ids[y]);
        at.s = Some(k.times[j]);
        rows.push(LedgerRow::equal_abs(A1_NAME, dev, 0.0, tol.a1).located(at));
    }

    // A2, A3 and nonnegativity in one sweep per time.
    let mut asym = (0.0f64, Location::default());
    let mut mass_max = (f64::NEG_INFINITY, Location::default());
    let mut mass_min = f64::INFINITY;
    let mut min_entry = (f64::INFINITY, Location::default());
    for (ti, p) in k.kernels.iter().enumerate() {
        let t = k.times[ti];
        for x in 0..n {
            let mut mass = 0.0;
            for y in 0..n {
                let v = p[(x, y)];
                mass += v * k.rho[y];
                if y > x {
                    let d = (v - p[(y, x)]).abs();
                    if d > asym.0 || d.is_nan() {
                        asym = (d, Location::txy(t, &ids[x], &ids[y]));
                    }
                }
                if v < min_entry.0 {
                    min_entry = (v, Location::txy(t, &ids[x], &ids[y]));
                }
            }
            if mass > mass_max.0 {
                mass_max = (mass, Location::txy(t, &ids[x], &ids[x]));
            }
            mass_min = mass_min.min(mass);
        }
    }
    if n > 0 && !k.times.is_empty() {
        rows.push(LedgerRow::equal_abs(A2_NAME, asym.0, 0.0, tol.a2).located(asym.1));
        rows.push(LedgerRow::at_most(A3_NAME, mass_max.0, 1.0, tol.a3).located(mass_max.1));
        let shown = reported_entry(min_entry.0, tol);
        rows.push(
            LedgerRow::at_most(POSITIVITY_NAME, -shown, 0.0, tol.positivity).located(min_entry.1),
        );
    }

    match h {
        Some(h) => rows.extend(continuity_probe(h, tol)?),
        None => notes.push("continuity not evaluated: no generating operator supplied".into()),
    }

    Ok(AxiomReport {
        rows,
        composable_pairs: pairs.len(),
        row_mass_min: mass_min,
        row_mass_max: mass_max.0,
        min_entry: reported_entry(min_entry.0, tol),
        notes,
    })
}

/// `‖P_t f − f‖ ≤ t ‖H f‖` at `t ∈ {1e-3, 1e-6}` for the constant function,
/// an alternating function and point masses at up to 32 vertices.
pub fn continuity_probe(h: &OperatorMatrix, tol: &Tolerances) -> Result<Vec<LedgerRow>> {
    let dim = h.dim();
    let w = h.dof_weights();
    let one = Complex64::new(1.0, 0.0);
    let mut probes: Vec<(String, Vec<Complex64>)> = vec![
        ("constant".into(), vec![one; dim]),
        (
            "alternating".into(),
            (0..dim)
                .map(|i| if i % 2 == 0 { one } else { -one })
                .collect(),
        ),
    ];
    for i in 0..dim.min(32) {
        let mut f = vec![Complex64::new(0.0, 0.0); dim];
        f[i] = one;
        probes.push((format!("delta[{i}]"), f));
    }
    let mut rows = Vec::new();
    for &t in &CONTINUITY_TIMES {
        let p = semigroup(h, t)?;
        let mut worst: Option<LedgerRow> = None;
        for (name, f) in &probes {
            let v = nalgebra::DVector::from_column_slice(f);
            let diff: Vec<Complex64> = (&p * &v - &v).iter().copied().collect();
            let hf: Vec<Complex64> = (h.matrix() * &v).iter().copied().collect();
            let row = LedgerRow::at_most(
                CONTINUITY_NAME,
                weighted_norm(&diff, &w),
                t * weighted_norm(&hf, &w),
                tol.continuity,
            )
            .located(Location::t(t).with_probe(name.clone()));
            if worst.as_ref().is_none_or(|r| row.slack < r.slack) {
                worst = Some(row);
            }
        }
        rows.extend(worst);
    }
    Ok(rows)
}

pub const RHO_BOUND_NAME: &str = "universal bound p(t,x,y) ρ(y) ≤ 1";

/// `max_{t,x,y} p(t,x,y) ρ(y)` against one.
pub fn verify_rho_bound(k: &HeatKernel, tol: &Tolerances) -> LedgerRow {
    let mut best = (f64::NEG_INFINITY, Location::default());
    for (ti, p) in k.kernels.iter().enumerate() {
        for y in 0..k.len() {
            for x in 0..k.len() {
                let v = p[(x, y)] * k.rho[y];
                if v > best.0 {
                    best = (v, Location::txy(k.times[ti], &k.ids[x], &k.ids[y]));
                }
            }
        }
    }
    LedgerRow::at_most(RHO_BOUND_NAME, best.0, 1.0, tol.rho_bound).located(best.1)
}

/// Largest increment between consecutive exhaustion levels at one time.
#[derive(Debug, Clone, Serialize)]
pub struct TimeIncrement {
    pub t: f64,
    /// `sup (p_{n+1} − p_n)` over `X_n × X_n`.
    pub sup_increment: f64,
    pub at: Location,
    /// The same supremum restricted to the first level `X_1 × X_1`.
    pub base_window_increment: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelIncrement {
    /// Zero-based index `n` of the smaller level.
    pub from_level: usize,
    pub per_time: Vec<TimeIncrement>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub level_sizes: Vec<usize>,
    /// `p_n ≤ p_{n+1} + tol` over all consecutive levels and stored samples.
    pub monotonicity: LedgerRow,
    pub increments: Vec<LevelIncrement>,
}

impl ConvergenceReport {
    pub fn pass(&self) -> bool {
        self.monotonicity.pass
    }

    /// `sup`-increments at time `t`, one per consecutive level pair.
    pub fn sup_increments(&self, t: f64) -> Vec<f64> {
        self.increments
            .iter()
            .filter_map(|l| {
                l.per_time
                    .iter()
                    .find(|p| (p.t - t).abs() <= 1e-12 * t.max(1.0))
                    .map(|p| p.sup_increment)
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct MinimalKernel {
    pub levels: Vec<HeatKernel>,
    pub report: ConvergenceReport,
}

impl MinimalKernel {
    /// The kernel on the largest level: the best available approximation
    /// of the minimal kernel.
    pub fn finest(&self) -> &HeatKernel {
        self.levels.last().expect("at least one level")
    }
}

pub const MONOTONE_NAME: &str = "exhaustion monotonicity p_n(t,x,y) ≤ p_{n+1}(t,x,y)";

/// Dirichlet heat kernels of the Laplacian of `g` on every exhaustion level.
pub fn minimal_kernel(
    g: &WeightedGraph,
    ex: &Exhaustion,
    times: &[f64],
    tol: &Tolerances,
) -> Result<MinimalKernel> {
    minimal_kernel_of(&assemble_laplacian(g)?, ex, times, tol)
}

/// Dirichlet heat kernels of `h` restricted to every exhaustion level, with
/// the monotonicity check and increment diagnostics.
pub fn minimal_kernel_of(
    h: &OperatorMatrix,
    ex: &Exhaustion,
    times: &[f64],
    tol: &Tolerances,
) -> Result<MinimalKernel> {
    if ex.levels().is_empty() {
        return Err(Error::InvalidArgument("exhaustion has no levels".into()));
    }
    let levels: Vec<HeatKernel> = ex
        .levels()
        .par_iter()
        .map(|level| kernel_from_semigroup(&dirichlet_restriction(h, level)?, times))
        .collect::<Result<_>>()?;

    let base = &levels[0];
    let mut worst = (f64::NEG_INFINITY, Location::default());
    let mut increments = Vec::new();
    for (n, pair) in levels.windows(2).enumerate() {
        let (small, big) = (&pair[0], &pair[1]);
        let pos = positions(small.vertices(), big.vertices())?;
        let base_pos = positions(base.vertices(), small.vertices())?;
        let mut per_time = Vec::new();
        for (ti, &t) in times.iter().enumerate() {
            let (ps, pb) = (&small.kernels[ti], &big.kernels[ti]);
            let mut sup = (f64::NEG_INFINITY, Location::default());
            for y in 0..small.len() {
                for x in 0..small.len() {
                    let inc = pb[(pos[x], pos[y])] - ps[(x, y)];
                    if inc > sup.0 {
                        sup = (
                            inc,
                            Location::txy(t, &small.ids[x], &small.ids[y]).with_level(n),
                        );
                    }
                    if -inc > worst.0 {
                        worst = (
                            -inc,
                            Location::txy(t, &small.ids[x], &small.ids[y]).with_level(n),
                        );
                    }
                }
            }
            let mut base_sup = f64::NEG_INFINITY;
            for &y in &base_pos {
                for &x in &base_pos {
                    base_sup = base_sup.max(pb[(pos[x], pos[y])] - ps[(x, y)]);
                }
            }
            per_time.push(TimeIncrement {
                t,
                sup_increment: sup.0,
                at: sup.1,
                base_window_increment: base_sup,
            });
        }
        increments.push(LevelIncrement {
            from_level: n,
            per_time,
        });
    }
    let monotonicity = if levels.len() > 1 {
        LedgerRow::at_most(MONOTONE_NAME, worst.0, 0.0, tol.monotone).located(worst.1)
    } else {
        LedgerRow::at_most(MONOTONE_NAME, 0.0, 0.0, tol.monotone)
            .with_detail("single level: nothing to compare")
    };
    Ok(MinimalKernel {
        report: ConvergenceReport {
            level_sizes: levels.iter().map(HeatKernel::len).collect(),
            monotonicity,
            increments,
        },
        levels,
    })
}

/// Position of each `inner` vertex within `outer`.
fn positions(inner: &[usize], outer: &[usize]) -> Result<Vec<usize>> {
    inner
        .iter()
        .map(|v| {
            outer.iter().position(|w| w == v).ok_or_else(|| {
                Error::InvalidArgument(format!("exhaustion level is not nested at vertex {v}"))
            })
        })
        .collect()
}
