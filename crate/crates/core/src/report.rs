//! Self-describing ledger rows and the tolerance table shared by all checks.

use serde::Serialize;

use crate::error::{Error, Result};

/// Embedded in every emitted report.
pub const SCHEMA_VERSION: &str = "kato-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = "=")]
    Equal,
}

/// Where a worst case was observed.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Location {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe: Option<String>,
}

impl Location {
    pub fn t(t: f64) -> Self {
        Self {
            t: Some(t),
            ..Self::default()
        }
    }

    pub fn txy(t: f64, x: &str, y: &str) -> Self {
        Self {
            t: Some(t),
            x: Some(x.to_string()),
            y: Some(y.to_string()),
            ..Self::default()
        }
    }

    pub fn with_level(mut self, level: usize) -> Self {
        self.level = Some(level);
        self
    }

    pub fn with_a(mut self, a: f64) -> Self {
        self.a = Some(a);
        self
    }

    pub fn with_probe(mut self, probe: impl Into<String>) -> Self {
        self.probe = Some(probe.into());
        self
    }
}

/// One checked inequality or identity. For `<=` rows `slack = rhs − lhs`
/// and the row passes iff `lhs ≤ rhs + tol`. For `=` rows
/// `slack = tol − |lhs − rhs|` (relative rows scale `tol` by `max(|lhs|, |rhs|)`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerRow {
    pub name: String,
    pub relation: Relation,
    pub lhs: f64,
    pub rhs: f64,
    pub tol: f64,
    pub slack: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub at: Option<Location>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl LedgerRow {
    pub fn at_most(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            relation: Relation::AtMost,
            lhs,
            rhs,
            tol,
            slack: rhs - lhs,
            pass: lhs <= rhs + tol,
            at: None,
            detail: None,
        }
    }

    pub fn equal_abs(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        let gap = (lhs - rhs).abs();
        Self {
            name: name.into(),
            relation: Relation::Equal,
            lhs,
            rhs,
            tol,
            slack: tol - gap,
            pass: gap <= tol,
            at: None,
            detail: None,
        }
    }

    pub fn equal_rel(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        let gap = (lhs - rhs).abs();
        let bound = tol * lhs.abs().max(rhs.abs());
        Self {
            name: name.into(),
            relation: Relation::Equal,
            lhs,
            rhs,
            tol,
            slack: bound - gap,
            pass: gap <= bound,
            at: None,
            detail: None,
        }
    }

    pub fn located(mut self, at: Location) -> Self {
        self.at = Some(at);
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

pub fn all_pass(rows: &[LedgerRow]) -> bool {
    rows.iter().all(|r| r.pass)
}

/// Pass thresholds for every check. Defaults are the documented values;
/// [`Tolerances::set`] only tightens unless loosening is explicitly allowed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances {
    /// Semigroup law, max absolute entry difference.
    pub a1: f64,
    /// Kernel symmetry, max absolute asymmetry.
    pub a2: f64,
    /// Row mass excess over one.
    pub a3: f64,
    /// Negative kernel entries down to `-positivity` count as rounding.
    pub positivity: f64,
    /// Slack allowed in `‖P_t f − f‖ ≤ t ‖H f‖`.
    pub continuity: f64,
    /// `p(t,x,y) ρ(y) ≤ 1 + rho_bound`.
    pub rho_bound: f64,
    /// Exhaustion monotonicity `p_n ≤ p_{n+1} + monotone`.
    pub monotone: f64,
    /// Relative agreement of the two Hilbert–Schmidt evaluations.
    pub hs_identity: f64,
    /// Relative slack on norm bounds evaluated by dense linear algebra.
    pub norm_bound: f64,
    /// Absolute slack on the ascent estimate of a `2 → α` norm.
    pub two_alpha: f64,
    /// Pointwise domination inequalities.
    pub domination: f64,
    /// Resolvent versus Laplace quadrature, relative Frobenius error.
    pub resolvent: f64,
    /// Level-to-level drift of the top singular values.
    pub drift: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            a1: 1e-8,
            a2: 1e-10,
            a3: 1e-10,
            positivity: 1e-12,
            continuity: 1e-10,
            rho_bound: 1e-10,
            monotone: 1e-10,
            hs_identity: 1e-8,
            norm_bound: 1e-10,
            two_alpha: 1e-8,
            domination: 1e-9,
            resolvent: 1e-6,
            drift: 1e-3,
        }
    }
}

impl Tolerances {
    pub const NAMES: [&'static str; 13] = [
        "a1",
        "a2",
        "a3",
        "positivity",
        "continuity",
        "rho_bound",
        "monotone",
        "hs_identity",
        "norm_bound",
        "two_alpha",
        "domination",
        "resolvent",
        "drift",
    ];

    fn slot(&mut self, name: &str) -> Option<&mut f64> {
        Some(match name {
            "a1" => &mut self.a1,
            "a2" => &mut self.a2,
            "a3" => &mut self.a3,
            "positivity" => &mut self.positivity,
            "continuity" => &mut self.continuity,
            "rho_bound" => &mut self.rho_bound,
            "monotone" => &mut self.monotone,
            "hs_identity" => &mut self.hs_identity,
            "norm_bound" => &mut self.norm_bound,
            "two_alpha" => &mut self.two_alpha,
            "domination" => &mut self.domination,
            "resolvent" => &mut self.resolvent,
            "drift" => &mut self.drift,
            _ => return None,
        })
    }

    /// Overrides one tolerance. Values above the documented default are
    /// rejected unless `allow_loosen` is set.
    pub fn set(&mut self, name: &str, value: f64, allow_loosen: bool) -> Result<()> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance {name}={value} must be finite and nonnegative"
            )));
        }
        let default = Self::default().slot(name).map(|v| *v);
        let slot = self.slot(name).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "unknown tolerance `{name}` (known: {})",
                Self::NAMES.join(", ")
            ))
        })?;
        let default = default.expect("same key set");
        if value > default && !allow_loosen {
            return Err(Error::InvalidArgument(format!(
                "tolerance {name}={value} is looser than the default {default}; pass --unsafe to allow"
            )));
        }
        *slot = value;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_compute_slack_and_pass() {
        let r = LedgerRow::at_most("x", 1.0, 2.0, 0.0);
        assert!(r.pass && r.slack == 1.0);
        let r = LedgerRow::at_most("x", 2.0 + 1e-12, 2.0, 1e-10);
        assert!(r.pass && r.slack < 0.0);
        let r = LedgerRow::equal_rel("x", 100.0, 100.0 + 1e-7, 1e-8);
        assert!(r.pass);
        let r = LedgerRow::equal_abs("x", 1.0, 1.1, 1e-3);
        assert!(!r.pass);
    }

    #[test]
    fn tolerances_only_tighten_without_unsafe() {
        let mut t = Tolerances::default();
        t.set("a2", 1e-12, false).unwrap();
        assert_eq!(t.a2, 1e-12);
        assert!(t.set("a2", 1e-6, false).is_err());
        t.set("a2", 1e-6, true).unwrap();
        assert_eq!(t.a2, 1e-6);
        assert!(t.set("nope", 1.0, true).is_err());
        assert!(t.set("a1", f64::NAN, true).is_err());
    }
}
