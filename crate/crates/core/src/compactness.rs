//! Resolvents, Hilbert–Schmidt and operator-norm bounds for `Ŵ P_t` and
//! `Ŵ (H + a)^{-1}`, the `2 → α` bound for `1_U P_t`, Kato domination, and
//! the singular-value stabilization certificate over an exhaustion.
//!
//! Potentials are given in the coordinates of the operator they multiply,
//! i.e. in an orthonormal frame, so the fiber norm `|W(x)|` is the Euclidean
//! operator norm of `W(x)`.

use std::num::NonZeroUsize;

use gauss_quad::{FiniteAboveNegOneF64, GaussLaguerre};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::bundle::{EndomorphismField, HermitianBundle};
use crate::control::{laplace_integral, ControlPair, SpatialControl, Verdict};
use crate::error::{Error, Result};
use crate::graph::{lq_norm, weak_vanishing_profile, Exhaustion, Measure};
use crate::heat::{semigroup, HeatKernel};
use crate::linalg::{operator_norm, symmetrize, CMat};
use crate::operators::{
    dirichlet_restriction, multiplication_operator, weighted_operator_norm,
    weighted_singular_values, OperatorMatrix, PSD_TOL,
};
use crate::random::complex_vector;
use crate::report::{all_pass, LedgerRow, Location, Tolerances};

/// Default resolvent parameters.
pub const DEFAULT_A: [f64; 4] = [0.5, 1.0, 2.0, 4.0];

/// The Hilbert–Schmidt resolvent bound is asserted only from this `a` on.
pub const HS_RESOLVENT_MIN_A: f64 = 2.0;

fn check_a(a: f64) -> Result<()> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "resolvent parameter a={a} must be positive"
        )));
    }
    Ok(())
}

/// `(H + a)^{-1}` through the spectral decomposition.
pub fn resolvent(h: &OperatorMatrix, a: f64) -> Result<CMat> {
    check_a(a)?;
    let min = h.min_eigenvalue()?;
    if min < -PSD_TOL {
        return Err(Error::NotPositive(min));
    }
    h.function(|lambda| 1.0 / (lambda + a))
}

/// Largest Gauss–Laguerre degree used by [`resolvent_laplace`].
pub const MAX_LAPLACE_DEGREE: usize = 600;

/// `∫_0^∞ e^{-at} e^{-tH} dt` on a Gauss–Laguerre grid, summing semigroup
/// matrices. Time is rescaled by `σ`, the harmonic mean of `a` and
/// `a + λ_max`, so that every spectral component decays like `e^{-c s}`
/// with `|c/(2+c)|` as small as the spectrum allows.
pub fn resolvent_laplace(h: &OperatorMatrix, a: f64) -> Result<CMat> {
    check_a(a)?;
    let dim = h.dim();
    if dim == 0 {
        return Ok(CMat::zeros(0, 0));
    }
    let lo = h.min_eigenvalue()?.max(0.0);
    let hi = h.spectral()?.max().max(lo);
    let sigma = 2.0 * (a + lo) * (a + hi) / (2.0 * a + lo + hi);
    let contraction = |lambda: f64| {
        let c = (a + lambda) / sigma - 1.0;
        (c / (2.0 + c)).abs()
    };
    let r = contraction(lo).max(contraction(hi)).min(1.0 - 1e-12);
    let degree = if r == 0.0 {
        8
    } else {
        ((1e-12f64.ln() / (2.0 * r.ln())).ceil() as usize + 8).clamp(8, MAX_LAPLACE_DEGREE)
    };
    let rule = GaussLaguerre::new(
        NonZeroUsize::new(degree).expect("positive degree"),
        FiniteAboveNegOneF64::new(0.0).expect("alpha = 0"),
    );
    let mut total = CMat::zeros(dim, dim);
    for &(s, _) in rule.as_node_weight_pairs() {
        let factor = (laguerre_log_weight(degree, s) + s * (1.0 - a / sigma) - sigma.ln()).exp();
        if factor == 0.0 || !factor.is_finite() {
            continue;
        }
        let e = semigroup(h, s / sigma)?;
        total += e * Complex64::new(factor, 0.0);
    }
    Ok(total)
}

/// `ln w` for the Gauss–Laguerre node `s` of an `n`-point rule, from
/// `w = s / ((n+1)² L_{n+1}(s)²)`. The eigenvector-based weights are only
/// accurate to absolute rounding, which the `e^{s(1−a/σ)}` factor would
/// amplify in the tail.
fn laguerre_log_weight(n: usize, s: f64) -> f64 {
    const RESCALE: f64 = 1e100;
    let (mut prev, mut cur) = (1.0f64, 1.0 - s);
    let mut log_scale = 0.0;
    for k in 1..=n {
        let next =
            ((2 * k + 1) as f64 - s) * cur / (k + 1) as f64 - k as f64 * prev / (k + 1) as f64;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            cur /= RESCALE;
            prev /= RESCALE;
            log_scale += RESCALE.ln();
        }
    }
    s.ln() - 2.0 * ((n + 1) as f64).ln() - 2.0 * (cur.abs().ln() + log_scale)
}

pub const RESOLVENT_NAME: &str = "resolvent (H+a)^{-1} = ∫ e^{-at} e^{-tH} dt";

/// Relative Frobenius distance between the spectral resolvent and its
/// Laplace quadrature.
pub fn check_resolvent(h: &OperatorMatrix, a: f64, tol: &Tolerances) -> Result<LedgerRow> {
    let r = resolvent(h, a)?;
    let l = resolvent_laplace(h, a)?;
    let scale = r.norm().max(f64::MIN_POSITIVE);
    let rel = (&r - &l).norm() / scale;
    Ok(LedgerRow::at_most(RESOLVENT_NAME, rel, 0.0, tol.resolvent)
        .located(Location::default().with_a(a))
        .with_detail("relative Frobenius error of the Laplace quadrature"))
}

/// `x ↦ |W(x)|` for a potential in orthonormal coordinates.
pub fn fiber_norms(w: &EndomorphismField) -> Vec<f64> {
    if w.rank() == 1 {
        return w.values().iter().map(|m| m[(0, 0)].norm()).collect();
    }
    w.values().iter().map(operator_norm).collect()
}

/// `Σ_{ij} |K_ij|² w_i / w_j`: the squared Hilbert–Schmidt norm on `ℓ²(μ)`.
pub fn weighted_hs_sq(k: &CMat, w: &[f64]) -> f64 {
    symmetrize(k, w).iter().map(|z| z.norm_sqr()).sum()
}

/// `P_t` as a matrix acting on vertex functions: `(P_t)_{xy} = p(t,x,y) ρ(y)`.
fn kernel_operator(p: &DMatrix<f64>, rho: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(p.nrows(), p.ncols(), |x, y| p[(x, y)] * rho[y])
}

pub const HS_IDENTITY_NAME: &str = "HS identity ‖ŴP_t‖²_HS = Σ_x |W(x)|² p(2t,x,x) ρ(x)";
pub const HS_BOUND_NAME: &str = "HS bound ‖ŴP_t‖²_HS ≤ F2(2t) ‖W‖²_{L²(F1 μ)}";

/// The Hilbert–Schmidt norm of `Ŵ P_t`, directly and through the diagonal
/// at `2t`, followed by its control-pair bound. `w` holds `|W(x)|` in the
/// kernel's vertex order.
pub fn check_hs_bound(
    w: &[f64],
    k: &HeatKernel,
    cp: &ControlPair,
    t: f64,
    tol: &Tolerances,
) -> Result<Vec<LedgerRow>> {
    if w.len() != k.len() {
        return Err(Error::ShapeMismatch {
            expected: k.len(),
            found: w.len(),
        });
    }
    if cp.q() != 1.0 {
        return Err(Error::ControlMismatch(format!(
            "the Hilbert–Schmidt bound is the q = 1 estimate (got q = {})",
            cp.q()
        )));
    }
    let p = k.at(t)?;
    let p2 = k.at(2.0 * t)?;
    let rho = k.rho();
    let op = kernel_operator(p, rho);
    let mut direct = 0.0;
    for x in 0..k.len() {
        let wx2 = w[x] * w[x];
        if wx2 == 0.0 {
            continue;
        }
        for y in 0..k.len() {
            let e = op[(x, y)];
            direct += wx2 * e * e * rho[x] / rho[y];
        }
    }
    let diagonal: f64 = (0..k.len())
        .map(|x| w[x] * w[x] * p2[(x, x)] * rho[x])
        .sum();
    let f1 = cp.f1_on(k.vertices());
    let norm_sq: f64 = (0..k.len()).map(|x| w[x] * w[x] * f1[x] * rho[x]).sum();
    let rhs = cp.f2().eval(2.0 * t) * norm_sq;
    let at = Location::t(t);
    Ok(vec![
        LedgerRow::equal_rel(HS_IDENTITY_NAME, direct, diagonal, tol.hs_identity)
            .located(at.clone()),
        LedgerRow::at_most(HS_BOUND_NAME, direct, rhs, tol.norm_bound * rhs.abs()).located(at),
    ])
}

pub const SEMIGROUP_BOUND_NAME: &str =
    "operator-norm bound ‖ŴP_t‖ ≤ F2(t)^{1/(2q)} ‖W‖_{L^{2q}(μ)}";

/// `‖Ŵ P_t‖_{2→2} ≤ F2(t)^{1/(2q)} ‖W‖_{2q}` for a pair with `F1 ≡ 1`.
pub fn check_semigroup_bound(
    w: &[f64],
    k: &HeatKernel,
    cp: &ControlPair,
    t: f64,
    tol: &Tolerances,
) -> Result<LedgerRow> {
    if w.len() != k.len() {
        return Err(Error::ShapeMismatch {
            expected: k.len(),
            found: w.len(),
        });
    }
    if *cp.f1() != SpatialControl::One {
        return Err(Error::ControlMismatch(
            "the operator-norm bound needs F1 ≡ 1".into(),
        ));
    }
    let rho = k.rho();
    let op = kernel_operator(k.at(t)?, rho);
    let wp = CMat::from_fn(k.len(), k.len(), |x, y| {
        Complex64::new(w[x] * op[(x, y)], 0.0)
    });
    let lhs = weighted_operator_norm(&wp, rho);
    let q = cp.q();
    let norm = lq_norm(w, 2.0 * q, &Measure::new(rho.to_vec())?)?;
    let rhs = cp.f2().eval(t).powf(1.0 / (2.0 * q)) * norm;
    Ok(
        LedgerRow::at_most(SEMIGROUP_BOUND_NAME, lhs, rhs, tol.norm_bound * rhs.abs())
            .located(Location::t(t)),
    )
}

pub const RESOLVENT_BOUND_NAME: &str =
    "resolvent bound σ1(Ŵ(H+a)^{-1}) ≤ ‖W‖_{L^{2q}(F1 μ)} ∫ F2(t)^{1/(2q)} e^{-at} dt";
pub const HS_RESOLVENT_NAME: &str =
    "HS resolvent bound ‖Ŵ(H+a)^{-1}‖_HS ≤ ‖W‖_{L²(F1 μ)} ∫ F2(2t)^{1/2} e^{-at} dt";
pub const BOUNDED_PART_NAME: &str = "bounded part ‖Ŵ2(H+a)^{-1}‖ ≤ sup|W2| / a";

fn integral_value(v: Verdict) -> Result<f64> {
    match v {
        Verdict::Convergent { value, .. } => Ok(value),
        Verdict::Divergent {
            reason, exponent, ..
        } => Err(Error::NotIntegrable(format!(
            "{reason} (exponent {exponent})"
        ))),
    }
}

/// `∫_0^∞ F2(t)^{1/(2q)} e^{-at} dt`.
pub fn resolvent_bound_integral(cp: &ControlPair, a: f64) -> Result<f64> {
    integral_value(laplace_integral(cp.f2(), 1.0 / (2.0 * cp.q()), a, 1.0)?)
}

/// `∫_0^∞ F2(2t)^{1/2} e^{-at} dt`.
pub fn hs_integral(cp: &ControlPair, a: f64) -> Result<f64> {
    integral_value(laplace_integral(cp.f2(), 0.5, a, 2.0)?)
}

/// `‖W‖_{L^{2q}(F1 μ)}` of `|W|` on the given host vertices with weights `rho`.
pub fn control_norm(w: &[f64], rho: &[f64], vertices: &[usize], cp: &ControlPair) -> Result<f64> {
    let f1 = cp.f1_on(vertices);
    let weights: Vec<f64> = rho.iter().zip(&f1).map(|(r, f)| r * f).collect();
    lq_norm(w, 2.0 * cp.q(), &Measure::new(weights)?)
}

/// `σ_1(Ŵ (H + a)^{-1})` against the Laplace-transformed control bound.
/// `w` is indexed by the operator's local vertex order.
pub fn check_resolvent_bound(
    w: &EndomorphismField,
    h: &OperatorMatrix,
    cp: &ControlPair,
    a: f64,
    tol: &Tolerances,
) -> Result<LedgerRow> {
    let k = resolvent_product(w, h, a)?;
    let lhs = weighted_operator_norm(&k, &h.dof_weights());
    let norm = control_norm(&fiber_norms(w), h.rho(), h.vertices(), cp)?;
    let rhs = norm * resolvent_bound_integral(cp, a)?;
    Ok(
        LedgerRow::at_most(RESOLVENT_BOUND_NAME, lhs, rhs, tol.norm_bound * rhs.abs())
            .located(Location::default().with_a(a)),
    )
}

/// `Ŵ (H + a)^{-1}`.
pub fn resolvent_product(w: &EndomorphismField, h: &OperatorMatrix, a: f64) -> Result<CMat> {
    let what = multiplication_operator(w, h.domain())?;
    Ok(what.matrix() * resolvent(h, a)?)
}

pub const TWO_ALPHA_NAME: &str = "2→α bound ‖1_U P_t‖_{2→α} ≤ C_U(t)^{(α−2)/(2α)}";

/// Number of random starts for the `2 → α` ascent.
pub const ASCENT_RESTARTS: usize = 20;
const ASCENT_STEPS: usize = 400;

/// Ascent estimate of `‖1_U P_t‖_{2→α}` on `ℓ²(μ)` (a lower bound on the
/// norm) against `C_U(t)^{(α−2)/(2α)}` with `C_U(t) = sup_{x∈U, y} p(t,x,y)`.
/// `u` holds local vertex positions of the kernel.
pub fn check_2a_bound<R: Rng + ?Sized>(
    u: &[usize],
    k: &HeatKernel,
    t: f64,
    alpha: f64,
    rng: &mut R,
    tol: &Tolerances,
) -> Result<LedgerRow> {
    if !(alpha > 2.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "α={alpha} must be a finite number above 2"
        )));
    }
    if let Some(&x) = u.iter().find(|&&x| x >= k.len()) {
        return Err(Error::InvalidArgument(format!(
            "vertex position {x} out of range"
        )));
    }
    let p = k.at(t)?;
    let rho = k.rho();
    let n = k.len();
    let at = Location::t(t).with_probe(format!("α={alpha}, |U|={}", u.len()));
    if u.is_empty() {
        return Ok(LedgerRow::at_most(TWO_ALPHA_NAME, 0.0, 0.0, tol.two_alpha).located(at));
    }
    let c_u = u
        .iter()
        .flat_map(|&x| (0..n).map(move |y| p[(x, y)]))
        .fold(0.0, f64::max);
    let rhs = c_u.powf((alpha - 2.0) / (2.0 * alpha));

    // With h = D^{1/2} f on the Euclidean unit sphere, (1_U P_t f)(x) = Σ_y m_xy h_y
    // where m_xy = p(t,x,y) √ρ(y).
    let sqrt_rho: Vec<f64> = rho.iter().map(|r| r.sqrt()).collect();
    let m = DMatrix::from_fn(u.len(), n, |i, y| p[(u[i], y)] * sqrt_rho[y]);
    let rho_u: Vec<f64> = u.iter().map(|&x| rho[x]).collect();
    let objective = |h: &nalgebra::DVector<f64>| -> f64 {
        let g = &m * h;
        g.iter()
            .zip(&rho_u)
            .map(|(v, r)| r * v.abs().powf(alpha))
            .sum()
    };
    let gradient = |h: &nalgebra::DVector<f64>| {
        let g = &m * h;
        let s = nalgebra::DVector::from_fn(g.len(), |i, _| {
            rho_u[i] * alpha * g[i].abs().powf(alpha - 2.0) * g[i]
        });
        m.transpose() * s
    };

    let mut starts: Vec<nalgebra::DVector<f64>> =
        vec![nalgebra::DVector::from_column_slice(&sqrt_rho)];
    // A delta at the vertex carrying C_U(t).
    let (xi, _) = u
        .iter()
        .map(|&x| (x, (0..n).map(|y| p[(x, y)]).fold(0.0, f64::max)))
        .fold(
            (u[0], f64::NEG_INFINITY),
            |acc, c| if c.1 > acc.1 { c } else { acc },
        );
    starts.push(nalgebra::DVector::from_fn(n, |y, _| {
        if y == xi {
            1.0
        } else {
            0.0
        }
    }));
    while starts.len() < ASCENT_RESTARTS {
        starts.push(nalgebra::DVector::from_fn(n, |_, _| {
            let z: f64 = rng.sample(StandardNormal);
            z.abs()
        }));
    }

    let mut best = 0.0f64;
    for mut h in starts {
        let norm = h.norm();
        if norm == 0.0 {
            continue;
        }
        h /= norm;
        let mut value = objective(&h);
        let mut step = 1.0;
        for _ in 0..ASCENT_STEPS {
            let grad = gradient(&h);
            let tangent = &grad - &h * grad.dot(&h);
            let tn = tangent.norm();
            if tn <= 1e-14 * grad.norm().max(1e-300) {
                break;
            }
            let dir = tangent / tn;
            let mut accepted = false;
            while step > 1e-12 {
                let mut trial = &h + &dir * step;
                trial /= trial.norm();
                let v = objective(&trial);
                if v > value {
                    h = trial;
                    value = v;
                    accepted = true;
                    step = (step * 2.0).min(1.0);
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        best = best.max(value.powf(1.0 / alpha));
    }
    Ok(LedgerRow::at_most(TWO_ALPHA_NAME, best, rhs, tol.two_alpha)
        .located(at)
        .with_detail("lhs is an ascent lower bound on the norm"))
}

pub const DOMINATION_SEMIGROUP_NAME: &str = "Kato domination |e^{-tT}f|(x) ≤ e^{-tS}|f|(x)";
pub const DOMINATION_RESOLVENT_NAME: &str = "Kato domination |(T+a)^{-1}f|(x) ≤ (S+a)^{-1}|f|(x)";
pub const SPECTRAL_ORDER_NAME: &str = "spectral ordering λ_min(T) ≥ λ_min(S)";

#[derive(Debug, Clone, Serialize)]
pub struct DominationReport {
    pub rows: Vec<LedgerRow>,
    /// Basis sections plus random sections.
    pub sections: usize,
}

impl DominationReport {
    pub fn pass(&self) -> bool {
        all_pass(&self.rows)
    }
}

fn same_host(t: &OperatorMatrix, s: &OperatorMatrix) -> Result<()> {
    if s.rank() != 1 {
        return Err(Error::InvalidArgument(
            "the dominating operator must act on functions".into(),
        ));
    }
    if t.vertices() != s.vertices() || t.rho() != s.rho() {
        return Err(Error::InvalidArgument(
            "dominated and dominating operators live on different graphs or measures".into(),
        ));
    }
    Ok(())
}

/// Worst pointwise slack of `|E_T f|(x) ≤ (E_S |f|)(x)` over the columns of `f`.
fn pointwise_slack(
    et: &CMat,
    es: &CMat,
    sections: &CMat,
    moduli: &CMat,
    rank: usize,
) -> (f64, f64, f64, usize, usize) {
    let lhs = et * sections;
    let rhs = es * moduli;
    let mut worst = (f64::INFINITY, 0.0, 0.0, 0, 0);
    for j in 0..sections.ncols() {
        for x in 0..rhs.nrows() {
            let l = (0..rank)
                .map(|i| lhs[(x * rank + i, j)].norm_sqr())
                .sum::<f64>()
                .sqrt();
            let r = rhs[(x, j)].re;
            if r - l < worst.0 {
                worst = (r - l, l, r, j, x);
            }
        }
    }
    worst
}

/// Checks that `T` (over the bundle) is dominated by `S` (over functions)
/// in the Kato sense on all fiber-coordinate basis sections and `trials`
/// random complex sections, for every `t` and `a`, and compares the bottoms
/// of the spectra.
pub fn check_domination<R: Rng + ?Sized>(
    t_op: &OperatorMatrix,
    s_op: &OperatorMatrix,
    times: &[f64],
    a_values: &[f64],
    trials: usize,
    rng: &mut R,
    tol: &Tolerances,
) -> Result<DominationReport> {
    same_host(t_op, s_op)?;
    let d = t_op.rank();
    let n = t_op.len();
    let dim = n * d;
    let count = dim + trials;
    let mut sections = CMat::zeros(dim, count);
    for j in 0..dim {
        sections[(j, j)] = Complex64::new(1.0, 0.0);
    }
    for j in dim..count {
        let v = complex_vector(rng, dim);
        sections.column_mut(j).copy_from(&v);
    }
    let moduli = CMat::from_fn(n, count, |x, j| {
        let m = (0..d)
            .map(|i| sections[(x * d + i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        Complex64::new(m, 0.0)
    });
    let describe = |j: usize| {
        if j < dim {
            format!("basis({}, {})", t_op.ids()[j / d], j % d)
        } else {
            format!("random #{}", j - dim)
        }
    };

    let mut rows: Vec<LedgerRow> = times
        .par_iter()
        .map(|&t| -> Result<LedgerRow> {
            let et = semigroup(t_op, t)?;
            let es = semigroup(s_op, t)?;
            let (_, l, r, j, x) = pointwise_slack(&et, &es, &sections, &moduli, d);
            let mut at = Location::t(t).with_probe(describe(j));
            at.x = Some(t_op.ids()[x].clone());
            Ok(LedgerRow::at_most(DOMINATION_SEMIGROUP_NAME, l, r, tol.domination).located(at))
        })
        .collect::<Result<_>>()?;
    let resolvent_rows: Vec<LedgerRow> = a_values
        .par_iter()
        .map(|&a| -> Result<LedgerRow> {
            let rt = resolvent(t_op, a)?;
            let rs = resolvent(s_op, a)?;
            let (_, l, r, j, x) = pointwise_slack(&rt, &rs, &sections, &moduli, d);
            let mut at = Location::default().with_a(a).with_probe(describe(j));
            at.x = Some(t_op.ids()[x].clone());
            Ok(LedgerRow::at_most(DOMINATION_RESOLVENT_NAME, l, r, tol.domination).located(at))
        })
        .collect::<Result<_>>()?;
    rows.extend(resolvent_rows);
    let lt = t_op.min_eigenvalue()?;
    let ls = s_op.min_eigenvalue()?;
    // λ_min(S) ≤ λ_min(T) as an at-most row.
    rows.push(LedgerRow::at_most(
        SPECTRAL_ORDER_NAME,
        ls,
        lt,
        tol.domination,
    ));
    Ok(DominationReport {
        rows,
        sections: count,
    })
}

/// Thresholds at which the weak-vanishing profile of `|W2|` is reported.
pub const PROFILE_THRESHOLDS: [f64; 11] = [
    1.0,
    0.5,
    0.25,
    0.125,
    0.0625,
    0.03125,
    0.015625,
    0.0078125,
    0.00390625,
    0.001953125,
    0.0009765625,
];

/// `W = W1 + W2` together with the membership certificates the
/// compactness bounds rely on. All fields are indexed by host vertex.
#[derive(Debug, Clone, Serialize)]
pub struct PotentialDecomposition {
    #[serde(skip)]
    pub w: EndomorphismField,
    #[serde(skip)]
    pub w1: EndomorphismField,
    #[serde(skip)]
    pub w2: EndomorphismField,
    pub q: f64,
    /// `‖W1‖_{L^{2q}(F1 μ)}`.
    pub w1_norm: f64,
    /// `sup |W2|`.
    pub w2_sup: f64,
    /// `(c, μ{|W2| ≥ c})`.
    pub w2_profile: Vec<(f64, f64)>,
}

impl PotentialDecomposition {
    /// `w1 + w2` must reproduce `w`; `rho` is the host measure.
    pub fn new(
        w: EndomorphismField,
        w1: EndomorphismField,
        w2: EndomorphismField,
        rho: &[f64],
        cp: &ControlPair,
    ) -> Result<Self> {
        if w.len() != rho.len() {
            return Err(Error::ShapeMismatch {
                expected: rho.len(),
                found: w.len(),
            });
        }
        let defect = w1
            .add(&w2)?
            .values()
            .iter()
            .zip(w.values())
            .map(|(s, v)| crate::linalg::max_abs(&(s - v)))
            .fold(0.0, f64::max);
        if !(defect <= crate::bundle::SPLIT_TOL) {
            return Err(Error::InvalidArgument(format!(
                "W1 + W2 differs from W by {defect:e}"
            )));
        }
        let all: Vec<usize> = (0..rho.len()).collect();
        let w1_norm = control_norm(&fiber_norms(&w1), rho, &all, cp)?;
        let n2 = fiber_norms(&w2);
        let w2_sup = n2.iter().copied().fold(0.0, f64::max);
        let w2_profile =
            weak_vanishing_profile(&n2, &Measure::new(rho.to_vec())?, &PROFILE_THRESHOLDS)?;
        Ok(Self {
            w,
            w1,
            w2,
            q: cp.q(),
            w1_norm,
            w2_sup,
            w2_profile,
        })
    }

    /// Splits `w` with [`crate::bundle::decompose_potential`] over an
    /// orthonormal bundle of the potential's rank.
    pub fn split(
        w: EndomorphismField,
        split: &crate::bundle::Split,
        rho: &[f64],
        cp: &ControlPair,
    ) -> Result<Self> {
        let bundle = HermitianBundle::identity(w.len(), w.rank())?;
        let (w1, w2) = crate::bundle::decompose_potential(&w, split, &bundle)?;
        Self::new(w, w1, w2, rho, cp)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelSpectrum {
    pub a: f64,
    /// One-based exhaustion level.
    pub level: usize,
    pub vertices: usize,
    /// Singular values of `Ŵ(H|_{X_n} + a)^{-1}`, descending.
    pub singular_values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Drift {
    pub a: f64,
    pub from_level: usize,
    pub to_level: usize,
    /// `max_{i ≤ k} |σ_i(X_{n+1}) − σ_i(X_n)|`.
    pub max_drift: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TruncationStage {
    pub level: usize,
    /// Truncation height `n` in `W_n = 1_{X_n} min(n, |W|)`.
    pub height: f64,
    /// `‖W − W_n‖_{L^{2q}(F1 μ)}`.
    pub residual: f64,
}

pub const VERDICT_OK: &str = "hypotheses-verified";
pub const SUMMARY_OK: &str = "hypotheses verified + spectra stabilized";

#[derive(Debug, Clone, Serialize)]
pub struct CompactnessReport {
    pub bounds: Vec<LedgerRow>,
    pub singular_values: Vec<LevelSpectrum>,
    pub top_k: usize,
    pub drift: Vec<Drift>,
    pub truncation: Vec<TruncationStage>,
    pub integral: f64,
    pub decomposition: PotentialDecomposition,
    pub stabilized: bool,
    pub verdict: String,
    pub summary: String,
}

impl CompactnessReport {
    pub fn pass(&self) -> bool {
        self.verdict == VERDICT_OK && self.stabilized
    }

    /// Drift between the two largest levels at `a`.
    pub fn final_drift(&self, a: f64) -> Option<f64> {
        self.drift
            .iter()
            .rev()
            .find(|d| d.a == a)
            .map(|d| d.max_drift)
    }
}

pub const TRUNCATION_NAME: &str = "truncation ‖Ŵ2 − 1_{|W2| ≥ 1/n} Ŵ2‖ ≤ 1/n";
pub const TRUNCATION_IDENTITY_NAME: &str =
    "truncation ‖Ŵ2 − 1_{|W2| ≥ 1/n} Ŵ2‖ = sup_{|W2| < 1/n} |W2|";

#[derive(Debug, Clone)]
pub struct CertifyOptions {
    pub a_values: Vec<f64>,
    pub top_k: usize,
    pub tol: Tolerances,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            a_values: DEFAULT_A.to_vec(),
            top_k: 5,
            tol: Tolerances::default(),
        }
    }
}

/// Singular values of `Ŵ(H|_{X_n} + a)^{-1}` on every exhaustion level, the
/// operator-norm and Hilbert–Schmidt resolvent bounds, the truncation
/// surrogate for `W2`, and the top-`k` drift across levels.
///
/// `h` acts on the whole host; the potential is indexed by host vertex.
pub fn certify_compactness(
    pd: PotentialDecomposition,
    h: &OperatorMatrix,
    cp: &ControlPair,
    ex: &Exhaustion,
    opts: &CertifyOptions,
) -> Result<CompactnessReport> {
    let verdict = cp.integrability()?;
    if let Verdict::Divergent {
        reason, exponent, ..
    } = &verdict
    {
        return Err(Error::NotIntegrable(format!(
            "{reason} (exponent {exponent})"
        )));
    }
    if h.len() != pd.w.len() || h.rank() != pd.w.rank() {
        return Err(Error::ShapeMismatch {
            expected: h.dim(),
            found: pd.w.len() * pd.w.rank(),
        });
    }
    if ex.levels().is_empty() {
        return Err(Error::InvalidArgument("exhaustion has no levels".into()));
    }
    if !(pd.w1_norm.is_finite() && pd.w2_sup.is_finite()) {
        return Err(Error::InvalidArgument(
            "potential certificates are not finite".into(),
        ));
    }
    for &a in &opts.a_values {
        check_a(a)?;
    }
    let tol = &opts.tol;
    let host_norms = fiber_norms(&pd.w);
    let w1_norms = fiber_norms(&pd.w1);
    let w2_norms = fiber_norms(&pd.w2);

    // One job per (level, a).
    let jobs: Vec<(usize, f64)> = (0..ex.levels().len())
        .flat_map(|l| opts.a_values.iter().map(move |&a| (l, a)))
        .collect();
    let results: Vec<(LevelSpectrum, Vec<LedgerRow>)> = jobs
        .par_iter()
        .map(|&(l, a)| -> Result<(LevelSpectrum, Vec<LedgerRow>)> {
            let level = &ex.levels()[l];
            let hn = dirichlet_restriction(h, level)?;
            let weights = hn.dof_weights();
            let r = resolvent(&hn, a)?;
            let prod = |w: &EndomorphismField| -> Result<CMat> {
                Ok(multiplication_operator(&w.restricted(level), hn.domain())?.matrix() * &r)
            };
            let k = prod(&pd.w)?;
            let sv = weighted_singular_values(&k, &weights);
            let at = Location::default().with_level(l + 1).with_a(a);
            let local = |norms: &[f64]| -> Vec<f64> { level.iter().map(|&x| norms[x]).collect() };

            let mut rows = Vec::new();
            let lhs = sv.first().copied().unwrap_or(0.0);
            let rhs = control_norm(&local(&host_norms), hn.rho(), level, cp)?
                * resolvent_bound_integral(cp, a)?;
            rows.push(
                LedgerRow::at_most(RESOLVENT_BOUND_NAME, lhs, rhs, tol.norm_bound * rhs.abs())
                    .located(at.clone()),
            );

            let k1 = prod(&pd.w1)?;
            let lhs1 = weighted_operator_norm(&k1, &weights);
            let rhs1 = control_norm(&local(&w1_norms), hn.rho(), level, cp)?
                * resolvent_bound_integral(cp, a)?;
            rows.push(
                LedgerRow::at_most(
                    RESOLVENT_BOUND_NAME,
                    lhs1,
                    rhs1,
                    tol.norm_bound * rhs1.abs(),
                )
                .located(at.clone())
                .with_detail("W1 part"),
            );
            if cp.q() == 1.0 && a >= HS_RESOLVENT_MIN_A {
                let hs = weighted_hs_sq(&k1, &weights).sqrt();
                let bound =
                    control_norm(&local(&w1_norms), hn.rho(), level, cp)? * hs_integral(cp, a)?;
                rows.push(
                    LedgerRow::at_most(HS_RESOLVENT_NAME, hs, bound, tol.norm_bound * bound.abs())
                        .located(at.clone())
                        .with_detail("W1 part"),
                );
            }
            let k2 = prod(&pd.w2)?;
            let lhs2 = weighted_operator_norm(&k2, &weights);
            let sup2 = level.iter().map(|&x| w2_norms[x]).fold(0.0, f64::max);
            let rhs2 = sup2 / a;
            rows.push(
                LedgerRow::at_most(BOUNDED_PART_NAME, lhs2, rhs2, tol.norm_bound * rhs2.abs())
                    .located(at),
            );
            Ok((
                LevelSpectrum {
                    a,
                    level: l + 1,
                    vertices: level.len(),
                    singular_values: sv,
                },
                rows,
            ))
        })
        .collect::<Result<_>>()?;

    let mut bounds = Vec::new();
    let mut spectra = Vec::new();
    for (spectrum, rows) in results {
        spectra.push(spectrum);
        bounds.extend(rows);
    }
    spectra.sort_by(|x, y| x.a.total_cmp(&y.a).then(x.level.cmp(&y.level)));

    // Truncation of the bounded part on the largest level.
    let finest = ex.last();
    let (domain, _) = h.domain().restricted(finest)?;
    let weights = domain.dof_weights();
    let mut n = 1.0f64;
    while n <= 1024.0 {
        let cut = 1.0 / n;
        let rest = pd
            .w2
            .restricted(finest)
            .masked(|x| w2_norms[finest[x]] < cut);
        let lhs =
            weighted_operator_norm(multiplication_operator(&rest, &domain)?.matrix(), &weights);
        let exact = finest
            .iter()
            .map(|&x| w2_norms[x])
            .filter(|&v| v < cut)
            .fold(0.0, f64::max);
        let at = Location::default()
            .with_level(ex.levels().len())
            .with_probe(format!("n={n}"));
        bounds.push(
            LedgerRow::at_most(TRUNCATION_NAME, lhs, cut, tol.norm_bound).located(at.clone()),
        );
        bounds.push(
            LedgerRow::equal_abs(TRUNCATION_IDENTITY_NAME, lhs, exact, tol.norm_bound).located(at),
        );
        n *= 2.0;
    }

    // W_n = 1_{X_n} min(n, |W|), radially truncated.
    let host_rho = h.rho();
    let all: Vec<usize> = (0..host_rho.len()).collect();
    let truncation = ex
        .levels()
        .iter()
        .enumerate()
        .map(|(l, level)| -> Result<TruncationStage> {
            let height = (l + 1) as f64;
            let mut inside = vec![false; host_rho.len()];
            for &x in level {
                inside[x] = true;
            }
            let residual: Vec<f64> = host_norms
                .iter()
                .enumerate()
                .map(|(x, &v)| if inside[x] { (v - height).max(0.0) } else { v })
                .collect();
            Ok(TruncationStage {
                level: l + 1,
                height,
                residual: control_norm(&residual, host_rho, &all, cp)?,
            })
        })
        .collect::<Result<_>>()?;

    let k = opts.top_k;
    let mut drift = Vec::new();
    for &a in &opts.a_values {
        let at_a: Vec<&LevelSpectrum> = spectra.iter().filter(|s| s.a == a).collect();
        for pair in at_a.windows(2) {
            let top =
                |s: &LevelSpectrum, i: usize| s.singular_values.get(i).copied().unwrap_or(0.0);
            let max_drift = (0..k)
                .map(|i| (top(pair[1], i) - top(pair[0], i)).abs())
                .fold(0.0, f64::max);
            drift.push(Drift {
                a,
                from_level: pair[0].level,
                to_level: pair[1].level,
                max_drift,
            });
        }
    }
    let stabilized = opts.a_values.iter().all(|&a| {
        drift
            .iter()
            .rev()
            .find(|d| d.a == a)
            .is_none_or(|d| d.max_drift < tol.drift)
    });
    let verdict = match bounds.iter().find(|r| !r.pass) {
        None => VERDICT_OK.to_string(),
        Some(r) => format!("hypothesis-failed:{}", r.name),
    };
    let summary = match (verdict == VERDICT_OK, stabilized) {
        (true, true) => SUMMARY_OK.to_string(),
        (true, false) => "hypotheses verified; spectra not stabilized".to_string(),
        (false, _) => "hypothesis failed".to_string(),
    };
    Ok(CompactnessReport {
        bounds,
        singular_values: spectra,
        top_k: k,
        drift,
        truncation,
        integral: resolvent_bound_integral(cp, 1.0)?,
        decomposition: pd,
        stabilized,
        verdict,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::Split;
    use crate::control::TimeControl;
    use crate::graph::{build_exhaustion, generators, WeightedGraph};
    use crate::heat::kernel_from_semigroup;
    use crate::operators::{assemble_laplacian, Domain, OperatorKind};
    use crate::random;

    fn two_vertex() -> WeightedGraph {
        generators::path(2, 1.0, 1.0)
    }

    fn single(rho: f64) -> WeightedGraph {
        WeightedGraph::new([("x", rho)], Vec::<(&str, &str, f64)>::new()).unwrap()
    }

    #[test]
    fn resolvent_examples() {
        let h = assemble_laplacian(&single(1.0)).unwrap();
        let r = resolvent(&h, 2.0).unwrap();
        assert!((r[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!(resolvent(&h, 0.0).is_err());

        let h = assemble_laplacian(&two_vertex()).unwrap();
        let r = resolvent(&h, 1.0).unwrap();
        let d = 0.5 * (1.0 + 1.0 / 3.0);
        let o = 0.5 * (1.0 - 1.0 / 3.0);
        assert!((r[(0, 0)].re - d).abs() < 1e-14 && (r[(0, 1)].re - o).abs() < 1e-14);
    }

    #[test]
    fn recurrence_weights_match_the_rule() {
        let rule = GaussLaguerre::new(
            NonZeroUsize::new(40).unwrap(),
            FiniteAboveNegOneF64::new(0.0).unwrap(),
        );
        let mut total = 0.0;
        for &(s, w) in rule.as_node_weight_pairs() {
            let lw = laguerre_log_weight(40, s).exp();
            total += lw;
            if w > 1e-10 {
                assert!((lw - w).abs() < 1e-10 * w, "s={s}: {lw} vs {w}");
            }
        }
        assert!((total - 1.0).abs() < 1e-10, "{total}");
    }

    #[test]
    fn laplace_quadrature_matches_resolvent() {
        let mut rng = random::rng(7);
        let spec = generators::RandomGraphSpec {
            n: 50,
            p: 0.1,
            b_range: (0.1, 2.0),
            rho_range: (0.1, 10.0),
        };
        let g = generators::erdos_renyi(spec, &mut rng);
        let h = assemble_laplacian(&g).unwrap();
        for a in [0.5, 1.0, 4.0] {
            let row = check_resolvent(&h, a, &Tolerances::default()).unwrap();
            assert!(row.pass, "{row:?}");
        }
    }

    #[test]
    fn hs_examples() {
        let g = two_vertex();
        let h = assemble_laplacian(&g).unwrap();
        let k = kernel_from_semigroup(&h, &[0.5, 1.0]).unwrap();
        let cp = ControlPair::weighted(vec![1.0, 1.0], TimeControl::Constant { c: 1.0 }).unwrap();
        let tol = Tolerances::default();
        let rows = check_hs_bound(&[0.0, 0.0], &k, &cp, 0.5, &tol).unwrap();
        assert!(rows.iter().all(|r| r.pass && r.lhs == 0.0 && r.rhs == 0.0));
        let rows = check_hs_bound(&[1.0, 0.0], &k, &cp, 0.5, &tol).unwrap();
        let expected = (1.0 + (-2.0f64).exp()) / 2.0;
        assert!((rows[0].lhs - expected).abs() < 1e-13 && (rows[0].rhs - expected).abs() < 1e-13);
        assert!(rows.iter().all(|r| r.pass));
        assert!(matches!(
            check_hs_bound(&[1.0, 0.0], &k, &cp, 1.0, &tol),
            Err(Error::TimeNotOnGrid(_))
        ));
    }

    #[test]
    fn two_alpha_examples() {
        let tol = Tolerances::default();
        let mut rng = random::rng(1);
        let h = assemble_laplacian(&single(1.0)).unwrap();
        let k = kernel_from_semigroup(&h, &[1.0]).unwrap();
        let row = check_2a_bound(&[0], &k, 1.0, 3.0, &mut rng, &tol).unwrap();
        assert!((row.lhs - 1.0).abs() < 1e-12 && (row.rhs - 1.0).abs() < 1e-12 && row.pass);
        let row = check_2a_bound(&[], &k, 1.0, 3.0, &mut rng, &tol).unwrap();
        assert!(row.pass && row.lhs == 0.0);
        assert!(check_2a_bound(&[0], &k, 1.0, 2.0, &mut rng, &tol).is_err());

        // ρ = c: the norm is c^{1/α − 1/2} = C_U^{(α−2)/(2α)} with C_U = 1/c.
        let h = assemble_laplacian(&single(4.0)).unwrap();
        let k = kernel_from_semigroup(&h, &[1.0]).unwrap();
        let row = check_2a_bound(&[0], &k, 1.0, 4.0, &mut rng, &tol).unwrap();
        assert!((row.lhs - 4f64.powf(0.25 - 0.5)).abs() < 1e-12 && row.pass);

        let h = assemble_laplacian(&two_vertex()).unwrap();
        let k = kernel_from_semigroup(&h, &[1.0]).unwrap();
        let row = check_2a_bound(&[0], &k, 1.0, 4.0, &mut rng, &tol).unwrap();
        let c = (1.0 + (-2.0f64).exp()) / 2.0;
        assert!(
            (row.rhs - c.powf(0.25)).abs() < 1e-14 && row.pass,
            "{row:?}"
        );
        assert!(row.lhs > 0.5);
    }

    #[test]
    fn domination_examples() {
        let tol = Tolerances::default();
        let mut rng = random::rng(3);
        let g = two_vertex();
        let s = assemble_laplacian(&g).unwrap();
        let report = check_domination(&s, &s, &[0.5, 1.0], &[1.0], 5, &mut rng, &tol).unwrap();
        assert!(report.pass());
        // Basis sections are nonnegative, so T = S gives equality there.
        assert!(
            report.rows.iter().all(|r| r.slack.abs() < 1e-12),
            "{report:?}"
        );

        let phi =
            crate::bundle::UnitaryConnection::magnetic(&g, |_, _| std::f64::consts::FRAC_PI_2)
                .unwrap();
        let bundle = HermitianBundle::identity(2, 1).unwrap();
        let t = crate::operators::assemble_covariant(&g, &bundle, &phi).unwrap();
        let et = semigroup(&t, 1.0).unwrap();
        let es = semigroup(&s, 1.0).unwrap();
        let off = (1.0 - (-2.0f64).exp()) / 2.0;
        assert!((et[(1, 0)].norm() - off).abs() < 1e-14 && (es[(1, 0)].re - off).abs() < 1e-14);
        let f = [Complex64::new(1.0, 0.0); 2];
        let tf = &et * nalgebra::DVector::from_column_slice(&f);
        let sf = &es * nalgebra::DVector::from_column_slice(&f);
        assert!(tf[0].norm() < sf[0].re - 1e-3);
        let report = check_domination(&t, &s, &[1.0], &[1.0], 10, &mut rng, &tol).unwrap();
        assert!(report.pass(), "{report:?}");
    }

    #[test]
    fn semigroup_and_resolvent_bounds_on_a_path() {
        let tol = Tolerances::default();
        let g = generators::path(12, 1.0, 1.0);
        let h = assemble_laplacian(&g).unwrap();
        let k = kernel_from_semigroup(&h, &[0.1, 1.0]).unwrap();
        let w: Vec<f64> = (0..12).map(|j| 1.0 / (1.0 + j as f64)).collect();
        for q in [1.5, 2.0, 3.0] {
            let cp = ControlPair::uniform(TimeControl::Constant { c: 1.0 }, q).unwrap();
            for t in [0.1, 1.0] {
                assert!(check_semigroup_bound(&w, &k, &cp, t, &tol).unwrap().pass);
            }
            for a in [1.0, 2.0, 4.0] {
                assert!(
                    check_resolvent_bound(&EndomorphismField::scalar(&w), &h, &cp, a, &tol)
                        .unwrap()
                        .pass
                );
            }
        }
    }

    #[test]
    fn certify_single_vertex_and_zero_potential() {
        let g = single(1.0);
        let h = assemble_laplacian(&g).unwrap();
        let cp = ControlPair::weighted(vec![1.0], TimeControl::Constant { c: 1.0 }).unwrap();
        let ex = Exhaustion::whole(&g);
        let w = EndomorphismField::scalar(&[-0.7]);
        let pd = PotentialDecomposition::split(w, &Split::Threshold(0.0), g.rho(), &cp).unwrap();
        let opts = CertifyOptions {
            a_values: vec![1.0],
            ..CertifyOptions::default()
        };
        let report = certify_compactness(pd, &h, &cp, &ex, &opts).unwrap();
        assert!((report.singular_values[0].singular_values[0] - 0.7).abs() < 1e-14);
        let bound = &report.bounds[0];
        assert!((bound.rhs - 0.7).abs() < 1e-8 && bound.pass);

        let g = generators::path(20, 1.0, 1.0);
        let h = assemble_laplacian(&g).unwrap();
        let cp = ControlPair::weighted(vec![1.0; 20], TimeControl::Constant { c: 1.0 }).unwrap();
        let ex = build_exhaustion(&g, 0, &[5, 10, 19]).unwrap();
        let pd = PotentialDecomposition::split(
            EndomorphismField::zeros(20, 1).unwrap(),
            &Split::Threshold(0.1),
            g.rho(),
            &cp,
        )
        .unwrap();
        let report = certify_compactness(pd, &h, &cp, &ex, &CertifyOptions::default()).unwrap();
        assert!(report
            .singular_values
            .iter()
            .all(|s| s.singular_values.iter().all(|&v| v == 0.0)));
        assert!(report.pass());
        assert_eq!(report.summary, SUMMARY_OK);
    }

    #[test]
    fn divergent_pair_is_a_hard_error() {
        let g = single(1.0);
        let h = assemble_laplacian(&g).unwrap();
        let cp = ControlPair::uniform(TimeControl::PowerLaw { c: 1.0, gamma: 3.0 }, 1.0).unwrap();
        let pd = PotentialDecomposition::split(
            EndomorphismField::scalar(&[1.0]),
            &Split::Threshold(0.0),
            g.rho(),
            &cp,
        )
        .unwrap();
        let r = certify_compactness(
            pd,
            &h,
            &cp,
            &Exhaustion::whole(&g),
            &CertifyOptions::default(),
        );
        assert!(matches!(r, Err(Error::NotIntegrable(_))));
    }

    #[test]
    fn domain_mismatch_is_rejected() {
        let g = generators::path(3, 1.0, 1.0);
        let s = assemble_laplacian(&g).unwrap();
        let other = OperatorMatrix::new(
            s.matrix().clone(),
            Domain {
                rho: vec![2.0; 3],
                ..s.domain().clone()
            },
            OperatorKind::ScalarLaplacian,
            true,
        );
        if let Ok(other) = other {
            let mut rng = random::rng(0);
            assert!(check_domination(
                &s,
                &other,
                &[1.0],
                &[1.0],
                1,
                &mut rng,
                &Tolerances::default()
            )
            .is_err());
        }
    }
}
