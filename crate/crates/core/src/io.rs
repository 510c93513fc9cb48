//! JSON formats for graphs, bundles and tabulated heat kernels.
//!
//! Graph: `{"vertices": [{"id", "rho"}], "edges": [{"u", "v", "b"}]}`.
//! Bundle: `{"rank", "metric": "identity" | {id: matrix}, "connection":
//! [{"u", "v", "phi"}], "potentials": {name: {id: matrix | number}}}`.
//! Kernel: `{"schema", "times", "vertices": [{"id", "rho"}], "kernels":
//! [rows per time]}`, row-major in vertex order.
//!
//! Complex numbers are `[re, im]` pairs; a bare number is read as real.
//! Matrices are lists of rows.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::bundle::{EndomorphismField, HermitianBundle, UnitaryConnection};
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::heat::HeatKernel;
use crate::linalg::CMat;
use crate::report::SCHEMA_VERSION;

/// Parses JSON, reporting the field path together with line and column.
pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::Format(format!("at `{path}`: {inner}"))
    })
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

fn in_file<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json(value)?)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexRecord {
    pub id: String,
    pub rho: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub u: String,
    pub v: String,
    pub b: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub vertices: Vec<VertexRecord>,
    pub edges: Vec<EdgeRecord>,
}

impl GraphFile {
    pub fn from_graph(g: &WeightedGraph) -> Self {
        Self {
            vertices: g
                .ids()
                .iter()
                .zip(g.rho())
                .map(|(id, &rho)| VertexRecord {
                    id: id.clone(),
                    rho,
                })
                .collect(),
            edges: g
                .edges()
                .map(|(x, y, b)| EdgeRecord {
                    u: g.id(x).to_string(),
                    v: g.id(y).to_string(),
                    b,
                })
                .collect(),
        }
    }

    pub fn build(&self) -> Result<WeightedGraph> {
        WeightedGraph::new(
            self.vertices.iter().map(|v| (v.id.as_str(), v.rho)),
            self.edges.iter().map(|e| (e.u.as_str(), e.v.as_str(), e.b)),
        )
    }
}

pub fn parse_graph(text: &str) -> Result<WeightedGraph> {
    from_json::<GraphFile>(text)?.build()
}

pub fn read_graph(path: &Path) -> Result<WeightedGraph> {
    in_file(path, parse_graph(&read_text(path)?))
}

/// A complex entry: `[re, im]` or a real number.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexEntry {
    Real(f64),
    Pair([f64; 2]),
}

impl From<ComplexEntry> for Complex64 {
    fn from(c: ComplexEntry) -> Self {
        match c {
            ComplexEntry::Real(re) => Complex64::new(re, 0.0),
            ComplexEntry::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

pub type MatrixRows = Vec<Vec<ComplexEntry>>;

pub fn matrix_from_rows(rows: &MatrixRows, rank: usize, what: &str) -> Result<CMat> {
    if rows.len() != rank || rows.iter().any(|r| r.len() != rank) {
        return Err(Error::Format(format!(
            "{what}: expected a {rank}×{rank} matrix"
        )));
    }
    Ok(CMat::from_fn(rank, rank, |i, j| rows[i][j].into()))
}

pub fn matrix_to_rows(m: &CMat) -> MatrixRows {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| ComplexEntry::Pair([m[(i, j)].re, m[(i, j)].im]))
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MetricSpec {
    Named(String),
    PerVertex(BTreeMap<String, MatrixRows>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionRecord {
    pub u: String,
    pub v: String,
    pub phi: MatrixRows,
}

/// A potential value at one vertex: a matrix, or a real number meaning a
/// multiple of the identity.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PotentialEntry {
    Scalar(f64),
    Matrix(MatrixRows),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleFile {
    pub rank: usize,
    #[serde(default = "identity_metric")]
    pub metric: MetricSpec,
    #[serde(default)]
    pub connection: Vec<ConnectionRecord>,
    /// Vertices missing from a potential carry zero.
    #[serde(default)]
    pub potentials: BTreeMap<String, BTreeMap<String, PotentialEntry>>,
}

fn identity_metric() -> MetricSpec {
    MetricSpec::Named("identity".into())
}

/// A bundle file resolved against a graph.
#[derive(Debug, Clone)]
pub struct BundleData {
    pub bundle: HermitianBundle,
    pub connection: UnitaryConnection,
    pub potentials: BTreeMap<String, EndomorphismField>,
}

impl BundleData {
    pub fn potential(&self, name: &str) -> Result<&EndomorphismField> {
        self.potentials.get(name).ok_or_else(|| {
            let known: Vec<&str> = self.potentials.keys().map(String::as_str).collect();
            Error::InvalidArgument(format!(
                "no potential named `{name}` (known: {})",
                known.join(", ")
            ))
        })
    }
}

impl BundleFile {
    pub fn build(&self, g: &WeightedGraph) -> Result<BundleData> {
        let d = self.rank;
        let bundle = match &self.metric {
            MetricSpec::Named(name) if name == "identity" => HermitianBundle::identity(g.len(), d)?,
            MetricSpec::Named(name) => {
                return Err(Error::Format(format!("metric: unknown metric `{name}`")));
            }
            MetricSpec::PerVertex(map) => {
                for id in map.keys() {
                    g.vertex(id)?;
                }
                let metrics = g
                    .ids()
                    .iter()
                    .map(|id| {
                        let rows = map.get(id).ok_or_else(|| {
                            Error::Format(format!("metric: missing vertex `{id}`"))
                        })?;
                        matrix_from_rows(rows, d, &format!("metric.{id}"))
                    })
                    .collect::<Result<Vec<_>>>()?;
                HermitianBundle::with_metrics(d, metrics)?
            }
        };
        let mut maps = BTreeMap::new();
        for (i, rec) in self.connection.iter().enumerate() {
            let x = g.vertex(&rec.u)?;
            let y = g.vertex(&rec.v)?;
            let phi = matrix_from_rows(&rec.phi, d, &format!("connection[{i}].phi"))?;
            if maps.insert((x, y), phi).is_some() {
                return Err(Error::Format(format!(
                    "connection[{i}]: edge ({}, {}) listed twice",
                    rec.u, rec.v
                )));
            }
        }
        // A single listed direction implies its inverse on the reverse edge.
        let missing: Vec<((usize, usize), CMat)> = maps
            .iter()
            .filter(|(k, _)| !maps.contains_key(&(k.1, k.0)))
            .map(|(&(x, y), phi)| {
                let inv = phi
                    .clone()
                    .try_inverse()
                    .ok_or_else(|| Error::BadConnection {
                        u: g.id(x).to_string(),
                        v: g.id(y).to_string(),
                        condition: "invertibility",
                        defect: f64::INFINITY,
                    })?;
                Ok(((y, x), inv))
            })
            .collect::<Result<_>>()?;
        maps.extend(missing);
        let connection = UnitaryConnection::new(g, &bundle, maps)?;

        let mut potentials = BTreeMap::new();
        for (name, entries) in &self.potentials {
            let mut values = vec![CMat::zeros(d, d); g.len()];
            for (id, entry) in entries {
                let x = g.vertex(id)?;
                values[x] = match entry {
                    PotentialEntry::Scalar(v) => CMat::identity(d, d) * Complex64::new(*v, 0.0),
                    PotentialEntry::Matrix(rows) => {
                        matrix_from_rows(rows, d, &format!("potentials.{name}.{id}"))?
                    }
                };
            }
            potentials.insert(name.clone(), EndomorphismField::new(d, values)?);
        }
        Ok(BundleData {
            bundle,
            connection,
            potentials,
        })
    }
}

pub fn parse_bundle(text: &str, g: &WeightedGraph) -> Result<BundleData> {
    from_json::<BundleFile>(text)?.build(g)
}

pub fn read_bundle(path: &Path, g: &WeightedGraph) -> Result<BundleData> {
    in_file(path, parse_bundle(&read_text(path)?, g))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelFile {
    pub schema: String,
    pub times: Vec<f64>,
    pub vertices: Vec<VertexRecord>,
    /// One `n × n` matrix per time, as rows.
    pub kernels: Vec<Vec<Vec<f64>>>,
}

impl KernelFile {
    pub fn from_kernel(k: &HeatKernel) -> Self {
        Self {
            schema: SCHEMA_VERSION.to_string(),
            times: k.times().to_vec(),
            vertices: k
                .ids()
                .iter()
                .zip(k.rho())
                .map(|(id, &rho)| VertexRecord {
                    id: id.clone(),
                    rho,
                })
                .collect(),
            kernels: k
                .kernels()
                .iter()
                .map(|m| {
                    (0..m.nrows())
                        .map(|i| m.row(i).iter().copied().collect())
                        .collect()
                })
                .collect(),
        }
    }

    pub fn build(&self) -> Result<HeatKernel> {
        let n = self.vertices.len();
        let kernels = self
            .kernels
            .iter()
            .enumerate()
            .map(|(ti, rows)| {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(Error::Format(format!(
                        "kernels[{ti}]: expected a {n}×{n} matrix"
                    )));
                }
                Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
            })
            .collect::<Result<Vec<_>>>()?;
        HeatKernel::new(
            self.times.clone(),
            kernels,
            self.vertices.iter().map(|v| v.id.clone()).collect(),
            self.vertices.iter().map(|v| v.rho).collect(),
        )
    }
}

pub fn parse_kernel(text: &str) -> Result<HeatKernel> {
    from_json::<KernelFile>(text)?.build()
}

pub fn read_kernel(path: &Path) -> Result<HeatKernel> {
    in_file(path, parse_kernel(&read_text(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generators;
    use crate::heat::kernel_from_semigroup;
    use crate::operators::assemble_laplacian;

    #[test]
    fn graph_roundtrip() {
        let g = generators::path(4, 2.0, 0.5);
        let text = to_json(&GraphFile::from_graph(&g)).unwrap();
        let back = parse_graph(&text).unwrap();
        assert_eq!(back.ids(), g.ids());
        assert_eq!(back.weight(1, 2), 2.0);
    }

    #[test]
    fn malformed_graph_names_the_field() {
        let text = r#"{"vertices": [{"id": "a", "rho": "x"}], "edges": []}"#;
        let err = parse_graph(text).unwrap_err().to_string();
        assert!(
            err.contains("vertices[0].rho") && err.contains("line 1"),
            "{err}"
        );
    }

    #[test]
    fn bundle_with_one_direction_and_scalar_potential() {
        let g = generators::path(2, 1.0, 1.0);
        let text = r#"{
            "rank": 1,
            "connection": [{"u": "x0", "v": "x1", "phi": [[[0.0, 1.0]]]}],
            "potentials": {"W": {"x0": 2.0}}
        }"#;
        let data = parse_bundle(text, &g).unwrap();
        let back = data.connection.phi(1, 0);
        assert!((back[(0, 0)] - Complex64::new(0.0, -1.0)).norm() < 1e-15);
        let w = data.potential("W").unwrap();
        assert_eq!(w.as_scalar().unwrap(), vec![2.0, 0.0]);
        assert!(data.potential("V").is_err());
    }

    #[test]
    fn non_unitary_connection_is_rejected() {
        let g = generators::path(2, 1.0, 1.0);
        let text = r#"{"rank": 1, "connection": [{"u": "x0", "v": "x1", "phi": [[2.0]]}]}"#;
        assert!(matches!(
            parse_bundle(text, &g),
            Err(Error::BadConnection { .. })
        ));
    }

    #[test]
    fn kernel_roundtrip() {
        let g = generators::path(3, 1.0, 1.0);
        let k = kernel_from_semigroup(&assemble_laplacian(&g).unwrap(), &[0.5, 1.0]).unwrap();
        let text = to_json(&KernelFile::from_kernel(&k)).unwrap();
        let back = parse_kernel(&text).unwrap();
        assert_eq!(back.kernels(), k.kernels());
        assert_eq!(back.times(), k.times());
    }
}
