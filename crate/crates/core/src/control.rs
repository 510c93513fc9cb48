//! Control pairs `(F1, F2, q)` with `p(t,x,x) ≤ F1(x) F2(t)`, the
//! integrability test `∫_0^∞ e^{-t} F2(t)^{1/(2q)} dt < ∞`, and fitting of
//! pairs to computed kernels.
//!
//! Closed-form time controls factor as `F2(t) = t^{-s} r(t)` with `r` bounded
//! and smooth on `[0, 1]`, which lets the integrability verdict be decided
//! analytically (`s / (2q) < 1`) and the value be computed with a
//! singularity-aware rule.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::heat::HeatKernel;
use crate::quadrature::{exponential_tail, legendre, singular_head, Estimate};
use crate::report::{LedgerRow, Location};

/// Absolute error target for control integrals.
pub const INTEGRAL_TOL: f64 = 1e-8;

/// `F_{m,β,R}(r) = 2^{2m+2β} R^{m+β} r^{-(m+β)}`.
pub fn bakry_emery_factor(m: u32, beta: f64, big_r: f64, r: f64) -> Result<f64> {
    if m == 0 || !(beta >= 0.0) || !(big_r > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need m ≥ 1, β ≥ 0, R > 0 (got m={m}, β={beta}, R={big_r})"
        )));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "radius r={r} must be positive"
        )));
    }
    let e = m as f64 + beta;
    Ok(2f64.powf(2.0 * e) * (big_r / r).powf(e))
}

/// The time part `F2` of a control pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum TimeControl {
    /// `F2 ≡ c`.
    Constant { c: f64 },
    /// `F2(t) = c (t^{-γ} + 1)`.
    PowerLaw { c: f64, gamma: f64 },
    /// `F2(t) = c t^{-γ}`; mostly useful as the additive part fed to
    /// [`combine_additive`].
    Monomial { c: f64, gamma: f64 },
    /// `F2(t) = c (F_{m,β,R}(√t) + 1)`.
    BakryEmery {
        c: f64,
        m: u32,
        beta: f64,
        radius: f64,
    },
    /// `F2(t) = offset + scale · inner(t)`.
    Affine {
        offset: f64,
        scale: f64,
        inner: Box<TimeControl>,
    },
    /// Samples on a strictly increasing time grid; interpolated linearly in
    /// log–log coordinates, held constant after the last sample and
    /// extended below the first sample by a power law fitted to the three
    /// smallest samples.
    Tabulated { times: Vec<f64>, values: Vec<f64> },
}

impl TimeControl {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        match self {
            Self::Constant { c } if !(*c > 0.0 && c.is_finite()) => {
                bad(format!("constant {c} must be positive"))
            }
            Self::PowerLaw { c, gamma } | Self::Monomial { c, gamma }
                if !(*c > 0.0 && *gamma >= 0.0 && gamma.is_finite()) =>
            {
                bad(format!(
                    "power law needs C > 0 and γ ≥ 0 (got C={c}, γ={gamma})"
                ))
            }
            Self::BakryEmery { c, m, beta, radius } => {
                if !(*c > 0.0) {
                    return bad(format!("C={c} must be positive"));
                }
                bakry_emery_factor(*m, *beta, *radius, 1.0).map(|_| ())
            }
            Self::Affine {
                offset,
                scale,
                inner,
            } => {
                if !(*offset >= 0.0 && *scale >= 0.0 && offset + scale > 0.0) {
                    return bad("affine control needs offset, scale ≥ 0, not both zero".into());
                }
                inner.validate()
            }
            Self::Tabulated { times, values } => {
                if times.len() != values.len() || times.is_empty() {
                    return bad(
                        "tabulated control needs matching, nonempty times and values".into(),
                    );
                }
                if times.iter().any(|t| !(*t > 0.0)) || times.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("tabulated times must be positive and strictly increasing".into());
                }
                if values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                    return bad("tabulated values must be positive and finite".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// `F2(t)`; `+∞` at `t = 0` for singular families.
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::Tabulated { times, values } => tabulated_eval(times, values, t),
            _ => {
                let s = self.singular_exponent().unwrap_or(0.0);
                if t == 0.0 && s > 0.0 {
                    return f64::INFINITY;
                }
                t.powf(-s) * self.regular_part(t)
            }
        }
    }

    /// `s` with `F2(t) = t^{-s} r(t)`; `None` for tables.
    pub fn singular_exponent(&self) -> Option<f64> {
        match self {
            Self::Constant { .. } => Some(0.0),
            Self::PowerLaw { gamma, .. } | Self::Monomial { gamma, .. } => Some(*gamma),
            Self::BakryEmery { m, beta, .. } => Some((*m as f64 + beta) / 2.0),
            Self::Affine { inner, .. } => inner.singular_exponent(),
            Self::Tabulated { .. } => None,
        }
    }

    /// `r(t) = t^s F2(t)`, evaluated without cancellation.
    fn regular_part(&self, t: f64) -> f64 {
        match self {
            Self::Constant { c } => *c,
            Self::PowerLaw { c, gamma } => c * (1.0 + t.powf(*gamma)),
            Self::Monomial { c, .. } => *c,
            Self::BakryEmery { c, m, beta, radius } => {
                let s = (*m as f64 + beta) / 2.0;
                let k = bakry_emery_factor(*m, *beta, *radius, 1.0).expect("validated");
                c * (k + t.powf(s))
            }
            Self::Affine {
                offset,
                scale,
                inner,
            } => {
                let s = inner.singular_exponent().unwrap_or(0.0);
                offset * t.powf(s) + scale * inner.regular_part(t)
            }
            Self::Tabulated { times, values } => tabulated_eval(times, values, t),
        }
    }
}

/// `(A, s)` with `F ≈ A t^{-s}` fitted to the three smallest samples below `t = 1`.
fn small_time_fit(times: &[f64], values: &[f64]) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t < 1.0)
        .take(3)
        .map(|(t, v)| (t.ln(), v.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "tabulated control needs at least 3 samples below t = 1 (found {})",
            pts.len()
        )));
    }
    let (slope, intercept) = least_squares(&pts);
    Ok((intercept.exp(), -slope))
}

fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

fn tabulated_eval(times: &[f64], values: &[f64], t: f64) -> f64 {
    let n = times.len();
    if t >= times[n - 1] {
        return values[n - 1];
    }
    if t <= times[0] {
        return match small_time_fit(times, values) {
            Ok((a, s)) if t > 0.0 => a * t.powf(-s),
            Ok((_, s)) if s > 0.0 => f64::INFINITY,
            Ok((a, _)) => a,
            Err(_) => values[0],
        };
    }
    let i = times.partition_point(|&s| s <= t) - 1;
    let (t0, t1) = (times[i].ln(), times[i + 1].ln());
    let (v0, v1) = (values[i].ln(), values[i + 1].ln());
    (v0 + (v1 - v0) * (t.ln() - t0) / (t1 - t0)).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    Convergent {
        value: f64,
        error: f64,
        /// Set when the answer rests on extrapolated samples.
        heuristic: bool,
    },
    Divergent {
        reason: String,
        /// The exponent `p` of the `t^{-p}` singularity at zero.
        exponent: f64,
        heuristic: bool,
    },
}

impl Verdict {
    pub fn is_convergent(&self) -> bool {
        matches!(self, Self::Convergent { .. })
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Self::Convergent { value, .. } => Some(*value),
            Self::Divergent { .. } => None,
        }
    }
}

pub const DIVERGENT_REASON: &str = "endpoint exponent ≥ 1";

/// `t^{-p}` is not integrable at 0. Exponents a few ulps below 1 count as
/// divergent so that `γ = 2q` stays on the divergent side after rounding
/// `γ · 1/(2q)`.
fn is_endpoint_divergent(p: f64) -> bool {
    p >= 1.0 - 4.0 * f64::EPSILON
}

/// `∫_0^∞ F2(κ t)^e e^{-a t} dt`, with an analytic convergence verdict at
/// `t = 0` (`s·e < 1`) for closed-form controls.
pub fn laplace_integral(f2: &TimeControl, e: f64, a: f64, kappa: f64) -> Result<Verdict> {
    f2.validate()?;
    if !(a > 0.0 && kappa > 0.0 && e > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "Laplace integral needs a > 0, κ > 0, e > 0 (got a={a}, κ={kappa}, e={e})"
        )));
    }
    if let TimeControl::Tabulated { times, values } = f2 {
        return tabulated_laplace(times, values, e, a, kappa);
    }
    let s = f2.singular_exponent().ok_or_else(|| {
        Error::InvalidArgument("affine controls over tabulated samples cannot be integrated".into())
    })?;
    let p = s * e;
    if is_endpoint_divergent(p) {
        return Ok(Verdict::Divergent {
            reason: DIVERGENT_REASON.into(),
            exponent: p,
            heuristic: false,
        });
    }
    // F2(κt)^e = t^{-p} · κ^{-p} r(κt)^e.
    let g = |t: f64| kappa.powf(-p) * f2.regular_part(kappa * t).powf(e) * (-a * t).exp();
    let head = singular_head(g, p, 1.0, INTEGRAL_TOL / 4.0);
    let tail = exponential_tail(|t| f2.eval(kappa * t).powf(e), a, 1.0, INTEGRAL_TOL / 4.0);
    let total = head + tail;
    Ok(Verdict::Convergent {
        value: total.value,
        error: total.error,
        heuristic: false,
    })
}

fn tabulated_laplace(times: &[f64], values: &[f64], e: f64, a: f64, kappa: f64) -> Result<Verdict> {
    let (amp, s) = small_time_fit(times, values)?;
    let s = s.max(0.0);
    let p = s * e;
    if is_endpoint_divergent(p) {
        return Ok(Verdict::Divergent {
            reason: DIVERGENT_REASON.into(),
            exponent: p,
            heuristic: true,
        });
    }
    // In integration time t the samples sit at τ_i / κ.
    let nodes: Vec<f64> = times.iter().map(|t| t / kappa).collect();
    let first = nodes[0];
    let g = |t: f64| (amp * kappa.powf(-s)).powf(e) * (-a * t).exp();
    let mut total = if s > 0.0 {
        singular_head(g, p, first, INTEGRAL_TOL / 4.0)
    } else {
        legendre(
            |t| tabulated_eval(times, values, kappa * t).powf(e) * (-a * t).exp(),
            0.0,
            first,
            INTEGRAL_TOL / 4.0,
        )
    };
    let seg_tol = INTEGRAL_TOL / (4.0 * nodes.len() as f64);
    for w in nodes.windows(2) {
        total = total
            + legendre(
                |t| tabulated_eval(times, values, kappa * t).powf(e) * (-a * t).exp(),
                w[0],
                w[1],
                seg_tol,
            );
    }
    let last = *nodes.last().expect("nonempty");
    let v_last = values.last().expect("nonempty").powf(e);
    total = total
        + Estimate {
            value: v_last * (-a * last).exp() / a,
            error: 0.0,
        };
    Ok(Verdict::Convergent {
        value: total.value,
        error: total.error,
        heuristic: true,
    })
}

/// `∫_0^∞ e^{-t} F2(t)^{1/(2q)} dt`.
pub fn check_integrability(f2: &TimeControl, q: f64) -> Result<Verdict> {
    if !(q >= 1.0) {
        return Err(Error::InvalidArgument(format!("q={q} must be at least 1")));
    }
    laplace_integral(f2, 1.0 / (2.0 * q), 1.0, 1.0)
}

/// The spatial part `F1`. Per-vertex values are only admissible with `q = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "values", rename_all = "kebab-case")]
pub enum SpatialControl {
    PerVertex(Vec<f64>),
    One,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlPair {
    #[serde(rename = "F1")]
    f1: SpatialControl,
    #[serde(rename = "F2")]
    f2: TimeControl,
    q: f64,
}

impl ControlPair {
    /// `q = 1` with a per-vertex `F1 > 0`.
    pub fn weighted(f1: Vec<f64>, f2: TimeControl) -> Result<Self> {
        if let Some(v) = f1.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "F1 value {v} must be positive and finite"
            )));
        }
        f2.validate()?;
        Ok(Self {
            f1: SpatialControl::PerVertex(f1),
            f2,
            q: 1.0,
        })
    }

    /// `F1 ≡ 1`, any `q ≥ 1`.
    pub fn uniform(f2: TimeControl, q: f64) -> Result<Self> {
        if !(q >= 1.0 && q.is_finite()) {
            return Err(Error::InvalidArgument(format!("q={q} must be at least 1")));
        }
        f2.validate()?;
        Ok(Self {
            f1: SpatialControl::One,
            f2,
            q,
        })
    }

    pub fn f1(&self) -> &SpatialControl {
        &self.f1
    }

    pub fn f2(&self) -> &TimeControl {
        &self.f2
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn f1_at(&self, x: usize) -> f64 {
        match &self.f1 {
            SpatialControl::PerVertex(v) => v[x],
            SpatialControl::One => 1.0,
        }
    }

    /// `F1` restricted to a list of vertex indices.
    pub fn f1_on(&self, vertices: &[usize]) -> Vec<f64> {
        vertices.iter().map(|&x| self.f1_at(x)).collect()
    }

    pub fn integrability(&self) -> Result<Verdict> {
        check_integrability(&self.f2, self.q)
    }
}

/// Fitting families for [`fit_control`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// `F1 = 1/ρ`, `F2 ≡ 1`; for `q > 1`, `F1 ≡ 1` and `F2 ≡ 1/inf ρ`.
    Graph,
    PowerLaw,
    Constant,
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleViolation {
    pub t: f64,
    pub x: String,
    pub p: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    /// The tightest sample of `p(t,x,x) ≤ F1(x) F2(t)`.
    pub worst: LedgerRow,
    pub max_slack: f64,
    pub samples: usize,
    pub violations: Vec<SampleViolation>,
    pub pass: bool,
    /// Observations that are reported but not asserted.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FittedControl {
    pub pair: ControlPair,
    pub certificate: Certificate,
}

pub const DIAGONAL_CONTROL_NAME: &str = "diagonal control p(t,x,x) ≤ F1(x) F2(t)";
/// Relative rounding allowance for the diagonal control check.
pub const DIAGONAL_TOL: f64 = 1e-10;

/// Checks `p(t,x,x) ≤ F1(x) F2(t)` on every stored sample.
pub fn certify(k: &HeatKernel, pair: &ControlPair) -> Certificate {
    let mut worst: Option<LedgerRow> = None;
    let mut max_slack = f64::NEG_INFINITY;
    let mut violations = Vec::new();
    let mut samples = 0;
    for (ti, &t) in k.times().iter().enumerate() {
        let p = &k.kernels()[ti];
        let f2 = pair.f2.eval(t);
        for x in 0..k.len() {
            let lhs = p[(x, x)];
            let rhs = pair.f1_at(k.vertices()[x]) * f2;
            let row = LedgerRow::at_most(DIAGONAL_CONTROL_NAME, lhs, rhs, DIAGONAL_TOL * rhs.abs())
                .located(Location::txy(t, &k.ids()[x], &k.ids()[x]));
            samples += 1;
            if row.slack.is_finite() {
                max_slack = max_slack.max(row.slack);
            }
            if !row.pass && violations.len() < 100 {
                violations.push(SampleViolation {
                    t,
                    x: k.ids()[x].clone(),
                    p: lhs,
                    bound: rhs,
                });
            }
            if worst.as_ref().is_none_or(|w| row.slack < w.slack) {
                worst = Some(row);
            }
        }
    }
    let worst = worst.unwrap_or_else(|| LedgerRow::at_most(DIAGONAL_CONTROL_NAME, 0.0, 0.0, 0.0));
    Certificate {
        pass: violations.is_empty() && worst.pass,
        worst,
        max_slack,
        samples,
        violations,
        notes: Vec::new(),
    }
}

/// Fits a control pair to the kernel diagonal and certifies it on every
/// stored sample. `F1` is indexed by the kernel's host vertices.
pub fn fit_control(k: &HeatKernel, family: Family, q: f64) -> Result<FittedControl> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::InvalidArgument(format!("q={q} must be at least 1")));
    }
    let host_len = k.vertices().iter().copied().max().map_or(0, |m| m + 1);
    let mut rho_host = vec![1.0; host_len];
    for (i, &v) in k.vertices().iter().enumerate() {
        rho_host[v] = k.rho()[i];
    }
    let inv_rho: Vec<f64> = rho_host.iter().map(|r| 1.0 / r).collect();
    let uniform = q > 1.0;
    // Normalized diagonal p(t,x,x) / F1(x) for the chosen F1.
    let f1_local = |i: usize| if uniform { 1.0 } else { 1.0 / k.rho()[i] };
    let mut notes = Vec::new();
    let pair = match family {
        Family::Graph => {
            if uniform {
                let inf_rho = k.rho().iter().copied().fold(f64::INFINITY, f64::min);
                ControlPair::uniform(TimeControl::Constant { c: 1.0 / inf_rho }, q)?
            } else {
                ControlPair::weighted(inv_rho, TimeControl::Constant { c: 1.0 })?
            }
        }
        Family::Constant => {
            let mut c = 0.0f64;
            for p in k.kernels() {
                for i in 0..k.len() {
                    c = c.max(p[(i, i)] / f1_local(i));
                }
            }
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "constant family cannot dominate the samples (max normalized diagonal {c})"
                )));
            }
            let f2 = TimeControl::Constant { c };
            if uniform {
                ControlPair::uniform(f2, q)?
            } else {
                ControlPair::weighted(inv_rho, f2)?
            }
        }
        Family::PowerLaw => {
            let positive: Vec<(usize, f64)> = k
                .times()
                .iter()
                .copied()
                .enumerate()
                .filter(|(_, t)| *t > 0.0)
                .collect();
            let take = positive.len().div_ceil(3).max(2).min(positive.len());
            let pts: Vec<(f64, f64)> = positive[..take]
                .iter()
                .map(|&(ti, t)| {
                    let p = &k.kernels()[ti];
                    let m = (0..k.len())
                        .map(|i| p[(i, i)] / f1_local(i))
                        .fold(f64::INFINITY, f64::min);
                    (t.ln(), m.ln())
                })
                .collect();
            let gamma = if pts.len() >= 2 {
                (-least_squares(&pts).0).max(0.0)
            } else {
                0.0
            };
            notes.push(format!(
                "fitted exponent γ = {gamma:.6} from the {} smallest positive times",
                pts.len()
            ));
            let mut c = 0.0f64;
            for (ti, &t) in k.times().iter().enumerate() {
                let shape = t.powf(-gamma) + 1.0;
                for i in 0..k.len() {
                    c = c.max(k.kernels()[ti][(i, i)] / f1_local(i) / shape);
                }
            }
            if !(c > 0.0) {
                c = f64::MIN_POSITIVE;
            }
            let f2 = TimeControl::PowerLaw { c, gamma };
            if uniform {
                ControlPair::uniform(f2, q)?
            } else {
                ControlPair::weighted(inv_rho, f2)?
            }
        }
    };
    let mut certificate = certify(k, &pair);
    certificate.notes = notes;
    Ok(FittedControl { pair, certificate })
}

pub const MAJORIZATION_NAME: &str = "product majorization F1(x)(1 + f2(t)/inf F1) ≥ F1(x) + f2(t)";

/// Turns an additive bound `p ≤ f2(t) + F1(x)` into the product form
/// `p ≤ F1(x) F2(t)` with `F2 = 1 + f2 / inf F1`, checking the
/// majorization on the given sample times.
pub fn combine_additive(
    f1: Vec<f64>,
    f2: TimeControl,
    sample_times: &[f64],
) -> Result<(ControlPair, LedgerRow)> {
    let inf = f1.iter().copied().fold(f64::INFINITY, f64::min);
    if !(inf > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "inf F1 = {inf} must be positive"
        )));
    }
    let product = TimeControl::Affine {
        offset: 1.0,
        scale: 1.0 / inf,
        inner: Box::new(f2.clone()),
    };
    let mut worst: Option<LedgerRow> = None;
    for &t in sample_times {
        let (f2t, big) = (f2.eval(t), product.eval(t));
        for (x, &v) in f1.iter().enumerate() {
            let additive = v + f2t;
            let row =
                LedgerRow::at_most(MAJORIZATION_NAME, additive, v * big, 1e-12 * additive.abs())
                    .located(Location {
                        t: Some(t),
                        x: Some(x.to_string()),
                        ..Location::default()
                    });
            if worst.as_ref().is_none_or(|w| row.slack < w.slack) {
                worst = Some(row);
            }
        }
    }
    let row = worst.unwrap_or_else(|| LedgerRow::at_most(MAJORIZATION_NAME, 0.0, 0.0, 0.0));
    Ok((ControlPair::weighted(f1, product)?, row))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightedGraph;
    use crate::heat::kernel_from_semigroup;
    use crate::operators::assemble_laplacian;

    #[test]
    fn bakry_emery_examples() {
        assert_eq!(bakry_emery_factor(1, 0.0, 1.0, 1.0).unwrap(), 4.0);
        assert_eq!(bakry_emery_factor(2, 0.0, 3.7, 3.7).unwrap(), 16.0);
        assert_eq!(bakry_emery_factor(3, 1.0, 2.0, 1.0).unwrap(), 4096.0);
        assert!(bakry_emery_factor(1, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn constant_control_integrates_to_one() {
        let v = check_integrability(&TimeControl::Constant { c: 1.0 }, 3.0).unwrap();
        assert!((v.value().unwrap() - 1.0).abs() < 1e-10, "{v:?}");
    }

    #[test]
    fn inverse_time_control_matches_a_smooth_quadrature() {
        let v = check_integrability(&TimeControl::PowerLaw { c: 1.0, gamma: 1.0 }, 1.0).unwrap();
        assert!(v.is_convergent());
        // t = u² turns ∫ e^{-t} (1/t + 1)^{1/2} dt into 2 ∫ e^{-u²} (1 + u²)^{1/2} du,
        // smooth on [0, 8] with a negligible tail; composite Simpson on a fine mesh.
        let g = |u: f64| 2.0 * (-u * u).exp() * (1.0 + u * u).sqrt();
        let (n, h) = (20_000, 8.0 / 20_000.0);
        let mut oracle = g(0.0) + g(8.0);
        for i in 1..n {
            oracle += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 * h);
        }
        oracle *= h / 3.0;
        let value = v.value().unwrap();
        assert!((value - oracle).abs() < 1e-7, "{value} vs {oracle}");
    }

    #[test]
    fn boundary_of_the_criterion_diverges() {
        for q in [1.0, 1.5, 4.0] {
            let v = check_integrability(
                &TimeControl::PowerLaw {
                    c: 1.0,
                    gamma: 2.0 * q,
                },
                q,
            )
            .unwrap();
            match v {
                Verdict::Divergent { reason, .. } => assert_eq!(reason, DIVERGENT_REASON),
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn tabulated_needs_three_small_samples() {
        let f2 = TimeControl::Tabulated {
            times: vec![0.5, 2.0],
            values: vec![1.0, 1.0],
        };
        assert!(check_integrability(&f2, 1.0).is_err());
    }

    #[test]
    fn tabulated_power_law_is_heuristic_and_close() {
        let times: Vec<f64> = (0..40).map(|i| 10f64.powf(-3.0 + i as f64 * 0.1)).collect();
        let values: Vec<f64> = times.iter().map(|t| t.powf(-0.5) + 1.0).collect();
        let tab = TimeControl::Tabulated { times, values };
        let exact =
            check_integrability(&TimeControl::PowerLaw { c: 1.0, gamma: 0.5 }, 1.0).unwrap();
        match check_integrability(&tab, 1.0).unwrap() {
            Verdict::Convergent {
                value, heuristic, ..
            } => {
                assert!(heuristic);
                assert!((value - exact.value().unwrap()).abs() < 1e-3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn combine_additive_examples() {
        let (pair, row) =
            combine_additive(vec![2.0, 5.0], TimeControl::Constant { c: 4.0 }, &[1.0]).unwrap();
        assert!((pair.f2().eval(1.0) - 3.0).abs() < 1e-15);
        assert!(row.pass);
        let (pair, _) = combine_additive(
            vec![1.0; 3],
            TimeControl::Monomial { c: 1.0, gamma: 1.0 },
            &[0.5],
        )
        .unwrap();
        for t in [0.01, 0.5, 3.0] {
            assert!((pair.f2().eval(t) - (1.0 + 1.0 / t)).abs() < 1e-12);
        }
        let (pair, _) =
            combine_additive(vec![1.0, 2.0], TimeControl::Constant { c: 1e-300 }, &[1.0]).unwrap();
        assert!((pair.f2().eval(1.0) - 1.0).abs() < 1e-15);
        assert!(
            combine_additive(vec![0.0, 1.0], TimeControl::Constant { c: 1.0 }, &[1.0]).is_err()
        );
    }

    #[test]
    fn graph_family_on_small_kernels() {
        let c = 3.0;
        let g = WeightedGraph::new([("x", c)], Vec::<(&str, &str, f64)>::new()).unwrap();
        let k = kernel_from_semigroup(&assemble_laplacian(&g).unwrap(), &[0.1, 1.0]).unwrap();
        let fit = fit_control(&k, Family::Graph, 1.0).unwrap();
        assert!(fit.certificate.pass);
        assert_eq!(fit.pair.f1_at(0), 1.0 / c);
        assert!(fit.certificate.worst.slack.abs() < 1e-15);

        let g = WeightedGraph::new([("1", 1.0), ("2", 1.0)], [("1", "2", 1.0)]).unwrap();
        let k = kernel_from_semigroup(&assemble_laplacian(&g).unwrap(), &[1.0]).unwrap();
        let fit = fit_control(&k, Family::Graph, 1.0).unwrap();
        assert!(fit.certificate.pass);
        assert!((fit.certificate.worst.slack - (1.0 - (-2.0f64).exp()) / 2.0).abs() < 1e-14);
    }
}
