//! Report envelopes, JSON and CSV emission.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use kato_core::report::Relation;
use kato_core::{LedgerRow, Tolerances, SCHEMA_VERSION};
use serde::Serialize;

/// What every emitted report carries besides its payload.
#[derive(Debug, Serialize)]
pub struct Envelope<'a, A: Serialize, R: Serialize> {
    pub schema: &'static str,
    pub command: &'a str,
    pub seed: u64,
    pub tolerances: &'a Tolerances,
    pub args: &'a A,
    pub pass: bool,
    pub report: &'a R,
}

/// A finished command: serialized payload plus the ledger rows it asserts.
pub struct Outcome {
    pub json: String,
    pub rows: Vec<LedgerRow>,
    pub pass: bool,
}

impl Outcome {
    pub fn new<A: Serialize, R: Serialize>(
        command: &str,
        seed: u64,
        tolerances: &Tolerances,
        args: &A,
        report: &R,
        rows: Vec<LedgerRow>,
        pass: bool,
    ) -> Result<Self> {
        let envelope = Envelope {
            schema: SCHEMA_VERSION,
            command,
            seed,
            tolerances,
            args,
            pass,
            report,
        };
        Ok(Self {
            json: kato_core::io::to_json(&envelope)?,
            rows,
            pass,
        })
    }

    /// A payload written as-is, e.g. a kernel file meant to be read back.
    pub fn raw<R: Serialize>(report: &R) -> Result<Self> {
        Ok(Self {
            json: kato_core::io::to_json(report)?,
            rows: Vec::new(),
            pass: true,
        })
    }
}

pub fn emit(outcome: &Outcome, out: Option<&Path>, csv: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, &outcome.json)
            .with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(outcome.json.as_bytes())?,
    }
    if let Some(path) = csv {
        write_csv(&outcome.rows, path).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CsvRow<'a> {
    name: &'a str,
    relation: &'static str,
    lhs: f64,
    rhs: f64,
    tol: f64,
    slack: f64,
    pass: bool,
    level: Option<usize>,
    t: Option<f64>,
    s: Option<f64>,
    a: Option<f64>,
    x: Option<&'a str>,
    y: Option<&'a str>,
    probe: Option<&'a str>,
}

fn write_csv(rows: &[LedgerRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        let at = r.at.clone().unwrap_or_default();
        w.serialize(CsvRow {
            name: &r.name,
            relation: match r.relation {
                Relation::AtMost => "<=",
                Relation::Equal => "=",
            },
            lhs: r.lhs,
            rhs: r.rhs,
            tol: r.tol,
            slack: r.slack,
            pass: r.pass,
            level: at.level,
            t: at.t,
            s: at.s,
            a: at.a,
            x: r.at.as_ref().and_then(|l| l.x.as_deref()),
            y: r.at.as_ref().and_then(|l| l.y.as_deref()),
            probe: r.at.as_ref().and_then(|l| l.probe.as_deref()),
        })?;
    }
    w.flush()?;
    Ok(())
}

/// One stderr line per failing row, naming where it failed.
pub fn describe_failures(rows: &[LedgerRow]) -> Vec<String> {
    rows.iter()
        .filter(|r| !r.pass)
        .map(|r| {
            let mut parts = Vec::new();
            if let Some(at) = &r.at {
                if let Some(level) = at.level {
                    parts.push(format!("level={level}"));
                }
                if let Some(t) = at.t {
                    parts.push(format!("t={t}"));
                }
                if let Some(s) = at.s {
                    parts.push(format!("s={s}"));
                }
                if let Some(a) = at.a {
                    parts.push(format!("a={a}"));
                }
                if let Some(x) = &at.x {
                    parts.push(format!("x={x}"));
                }
                if let Some(y) = &at.y {
                    parts.push(format!("y={y}"));
                }
                if let Some(p) = &at.probe {
                    parts.push(format!("probe={p}"));
                }
            }
            format!(
                "violated: {} (lhs {:e}, rhs {:e}, tol {:e}) at ({})",
                r.name,
                r.lhs,
                r.rhs,
                r.tol,
                parts.join(", ")
            )
        })
        .collect()
}
