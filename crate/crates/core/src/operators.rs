//! Graph Laplacians, covariant Laplacians, potentials and Dirichlet
//! restrictions as dense matrices acting on `ℓ²(X_0, μ_ρ) ⊗ ℂ^d`.
//!
//! Rows and columns are indexed vertex-major: degree of freedom `x * d + j`
//! is fiber coordinate `j` at the `x`-th vertex of the operator's domain.
//! On a finite vertex set every operator here is bounded, so the form sum
//! `H ∔ V` coincides with the matrix sum `H + V`; [`add_potential`] relies
//! on this.

use std::sync::OnceLock;

use num_complex::Complex64;
use serde::Serialize;

use crate::bundle::{
    gram_schmidt_frame, EndomorphismField, HermitianBundle, Section, UnitaryConnection,
};
use crate::error::{Error, Result};
use crate::graph::{validate_graph, Measure, WeightedGraph};
use crate::linalg::{
    desymmetrize, hermitian_defect, is_real, max_abs, operator_norm, singular_values, symmetrize,
    weighted_inner, CMat, Spectral, ZERO,
};

/// Tolerance for self-adjointness in the weighted inner product.
pub const SELF_ADJOINT_TOL: f64 = 1e-10;
/// Eigenvalues above `-PSD_TOL` count as nonnegative.
pub const PSD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorKind {
    ScalarLaplacian,
    Covariant,
    DirichletRestriction,
    Multiplication,
    Sum,
}

/// The vertex set an operator acts on, with its measure and fiber rank.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    /// Indices into the host graph.
    pub vertices: Vec<usize>,
    pub ids: Vec<String>,
    pub rho: Vec<f64>,
    pub rank: usize,
}

impl Domain {
    pub fn of_graph(g: &WeightedGraph, rank: usize) -> Self {
        Self {
            vertices: (0..g.len()).collect(),
            ids: g.ids().to_vec(),
            rho: g.rho().to_vec(),
            rank,
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vertices.len() * self.rank
    }

    /// `ρ` repeated once per fiber coordinate.
    pub fn dof_weights(&self) -> Vec<f64> {
        self.rho
            .iter()
            .flat_map(|&r| std::iter::repeat_n(r, self.rank))
            .collect()
    }

    pub fn measure(&self) -> Measure {
        Measure::new(self.rho.clone()).expect("domain weights are positive")
    }

    /// Local position of a host vertex.
    pub fn position(&self, host_vertex: usize) -> Option<usize> {
        self.vertices.iter().position(|&v| v == host_vertex)
    }

    /// Sub-domain on the given host vertices, in the order given.
    pub fn restricted(&self, host_vertices: &[usize]) -> Result<(Self, Vec<usize>)> {
        let mut local = Vec::with_capacity(host_vertices.len());
        for &v in host_vertices {
            let p = self.position(v).ok_or_else(|| {
                Error::InvalidArgument(format!("vertex index {v} is not in the operator's domain"))
            })?;
            local.push(p);
        }
        let dom = Self {
            vertices: host_vertices.to_vec(),
            ids: local.iter().map(|&p| self.ids[p].clone()).collect(),
            rho: local.iter().map(|&p| self.rho[p]).collect(),
            rank: self.rank,
        };
        Ok((dom, local))
    }
}

#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    matrix: CMat,
    domain: Domain,
    kind: OperatorKind,
    psd: bool,
    self_adjoint: bool,
    spectral: OnceLock<Spectral>,
}

impl OperatorMatrix {
    /// Wraps a matrix after checking that it is self-adjoint in the weighted
    /// inner product of `domain`.
    pub fn new(matrix: CMat, domain: Domain, kind: OperatorKind, psd: bool) -> Result<Self> {
        let op = Self::unchecked(matrix, domain, kind, psd, true)?;
        let defect = op.self_adjoint_defect();
        if !(defect <= SELF_ADJOINT_TOL * max_abs(&op.matrix).max(1.0)) {
            return Err(Error::NotWeightedHermitian(defect));
        }
        Ok(op)
    }

    fn unchecked(
        matrix: CMat,
        domain: Domain,
        kind: OperatorKind,
        psd: bool,
        self_adjoint: bool,
    ) -> Result<Self> {
        if matrix.nrows() != domain.dim() || matrix.ncols() != domain.dim() {
            return Err(Error::ShapeMismatch {
                expected: domain.dim(),
                found: matrix.nrows(),
            });
        }
        Ok(Self {
            matrix,
            domain,
            kind,
            psd,
            self_adjoint,
            spectral: OnceLock::new(),
        })
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn rank(&self) -> usize {
        self.domain.rank
    }

    /// Number of vertices.
    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn vertices(&self) -> &[usize] {
        &self.domain.vertices
    }

    pub fn ids(&self) -> &[String] {
        &self.domain.ids
    }

    pub fn rho(&self) -> &[f64] {
        &self.domain.rho
    }

    pub fn dof_weights(&self) -> Vec<f64> {
        self.domain.dof_weights()
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    /// Whether the operator is expected to be positive semidefinite.
    pub fn is_psd(&self) -> bool {
        self.psd
    }

    pub fn is_self_adjoint(&self) -> bool {
        self.self_adjoint
    }

    pub fn is_real(&self) -> bool {
        is_real(&self.matrix)
    }

    /// Hermitian defect of `D^{1/2} M D^{-1/2}`.
    pub fn self_adjoint_defect(&self) -> f64 {
        hermitian_defect(&self.symmetrized())
    }

    /// `A = D^{1/2} M D^{-1/2}`.
    pub fn symmetrized(&self) -> CMat {
        symmetrize(&self.matrix, &self.dof_weights())
    }

    /// Cached eigendecomposition of the symmetrized matrix.
    pub fn spectral(&self) -> Result<&Spectral> {
        if let Some(s) = self.spectral.get() {
            return Ok(s);
        }
        if !self.self_adjoint {
            return Err(Error::NotSelfAdjoint(self.self_adjoint_defect()));
        }
        let s = Spectral::of_hermitian(&self.symmetrized())?;
        Ok(self.spectral.get_or_init(|| s))
    }

    pub fn eigenvalues(&self) -> Result<&[f64]> {
        Ok(self.spectral()?.eigenvalues())
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.spectral()?.min())
    }

    /// `φ(M) = D^{-1/2} U φ(Λ) U^* D^{1/2}`.
    pub fn function(&self, phi: impl Fn(f64) -> f64) -> Result<CMat> {
        let a = self.spectral()?.apply(phi);
        Ok(desymmetrize(&a, &self.dof_weights()))
    }

    /// `U φ(Λ) U^*` in symmetrized coordinates, real when possible.
    pub fn symmetric_function_real(
        &self,
        phi: impl Fn(f64) -> f64,
    ) -> Result<Option<nalgebra::DMatrix<f64>>> {
        Ok(self.spectral()?.apply_real(phi))
    }

    pub fn apply(&self, f: &[Complex64]) -> Vec<Complex64> {
        let v = nalgebra::DVector::from_column_slice(f);
        (&self.matrix * v).iter().copied().collect()
    }

    /// `⟨f, M h⟩` in the weighted inner product.
    pub fn form(&self, f: &[Complex64], h: &[Complex64]) -> Complex64 {
        weighted_inner(f, &self.apply(h), &self.dof_weights())
    }

    /// Operator norm on `ℓ²(μ)`.
    pub fn norm(&self) -> f64 {
        operator_norm(&self.symmetrized())
    }
}

/// Singular values on `ℓ²(μ)` of a matrix over weights `w`, descending.
pub fn weighted_singular_values(m: &CMat, w: &[f64]) -> Vec<f64> {
    singular_values(&symmetrize(m, w))
}

/// Operator norm on `ℓ²(μ)` of a matrix over weights `w`.
pub fn weighted_operator_norm(m: &CMat, w: &[f64]) -> f64 {
    operator_norm(&symmetrize(m, w))
}

fn require_valid(g: &WeightedGraph) -> Result<()> {
    let report = validate_graph(g);
    if report.is_valid() {
        Ok(())
    } else {
        Err(Error::InvalidGraph(report))
    }
}

/// `H = −Δ_{b,ρ}`: `H[x,x] = ρ(x)^{-1} Σ_y b(x,y)`, `H[x,y] = −b(x,y)/ρ(x)`.
pub fn assemble_laplacian(g: &WeightedGraph) -> Result<OperatorMatrix> {
    require_valid(g)?;
    let n = g.len();
    let mut m = CMat::zeros(n, n);
    for x in 0..n {
        let r = g.rho()[x];
        m[(x, x)] = Complex64::new(g.degree(x) / r, 0.0);
        for &(y, b) in g.neighbors(x) {
            m[(x, y)] -= Complex64::new(b / r, 0.0);
        }
    }
    OperatorMatrix::new(
        m,
        Domain::of_graph(g, 1),
        OperatorKind::ScalarLaplacian,
        true,
    )
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::ShapeMismatch { expected, found });
    }
    Ok(())
}

/// `½ Σ_{x,y} b(x,y) conj(f1(x) − f1(y)) (f2(x) − f2(y))`.
pub fn quadratic_form(g: &WeightedGraph, f1: &[Complex64], f2: &[Complex64]) -> Result<Complex64> {
    check_len(g.len(), f1.len())?;
    check_len(g.len(), f2.len())?;
    let mut sum = ZERO;
    for x in 0..g.len() {
        for &(y, b) in g.neighbors(x) {
            sum += (f1[x] - f1[y]).conj() * (f2[x] - f2[y]) * b;
        }
    }
    Ok(sum * 0.5)
}

/// `C(b, ρ) = sup_x ρ(x)^{-1} Σ_y b(x, y)`.
pub fn form_bound(g: &WeightedGraph) -> f64 {
    g.form_bound()
}

/// `½ Σ_{x,y} b(x,y) (f1(x) − Φ_{y,x} f1(y), f2(x) − Φ_{y,x} f2(y))` in
/// Euclidean fiber coordinates.
pub fn covariant_form(
    g: &WeightedGraph,
    conn: &UnitaryConnection,
    f1: &Section,
    f2: &Section,
) -> Result<Complex64> {
    check_len(g.len(), f1.len())?;
    check_len(g.len(), f2.len())?;
    check_len(conn.rank(), f1.rank())?;
    check_len(conn.rank(), f2.rank())?;
    let mut sum = ZERO;
    for x in 0..g.len() {
        for &(y, b) in g.neighbors(x) {
            let phi = conn.phi(y, x);
            let d1 = f1.at(x) - &phi * f1.at(y);
            let d2 = f2.at(x) - &phi * f2.at(y);
            sum += d1.dotc(&d2) * b;
        }
    }
    Ok(sum * 0.5)
}

/// Block matrix `H^Φ` with diagonal blocks `ρ(x)^{-1} Σ_y b(x,y) Id` and
/// off-diagonal blocks `−(b(x,y)/ρ(x)) Φ_{y,x}`. Non-Euclidean fiber metrics
/// are first trivialized through an orthonormal frame.
pub fn assemble_covariant(
    g: &WeightedGraph,
    bundle: &HermitianBundle,
    conn: &UnitaryConnection,
) -> Result<OperatorMatrix> {
    require_valid(g)?;
    check_len(g.len(), bundle.len())?;
    check_len(bundle.rank(), conn.rank())?;
    let d = bundle.rank();
    let flat;
    let conn = if bundle.has_identity_metric() {
        conn
    } else {
        flat = conn.trivialized(g, &gram_schmidt_frame(bundle)?);
        &flat
    };
    let euclid = HermitianBundle::identity(g.len(), d)?;
    let defects = conn.defects(&euclid);
    if defects.inverse > crate::bundle::CONNECTION_TOL
        || defects.unitarity > crate::bundle::CONNECTION_TOL
    {
        return Err(Error::BadConnection {
            u: String::new(),
            v: String::new(),
            condition: "unitarity in orthonormal coordinates",
            defect: defects.inverse.max(defects.unitarity),
        });
    }
    let n = g.len();
    let mut m = CMat::zeros(n * d, n * d);
    for x in 0..n {
        let r = g.rho()[x];
        let diag = g.degree(x) / r;
        for j in 0..d {
            m[(x * d + j, x * d + j)] = Complex64::new(diag, 0.0);
        }
        for &(y, b) in g.neighbors(x) {
            let phi = conn.phi(y, x);
            for i in 0..d {
                for j in 0..d {
                    m[(x * d + i, y * d + j)] -= phi[(i, j)] * (b / r);
                }
            }
        }
    }
    OperatorMatrix::new(m, Domain::of_graph(g, d), OperatorKind::Covariant, true)
}

/// Block-diagonal multiplication operator `Ŵ f(x) = W(x) f(x)` over `domain`.
pub fn multiplication_operator(w: &EndomorphismField, domain: &Domain) -> Result<OperatorMatrix> {
    check_len(domain.len(), w.len())?;
    check_len(domain.rank, w.rank())?;
    let d = w.rank();
    let mut m = CMat::zeros(domain.dim(), domain.dim());
    for x in 0..w.len() {
        m.view_mut((x * d, x * d), (d, d)).copy_from(w.at(x));
    }
    OperatorMatrix::unchecked(
        m,
        domain.clone(),
        OperatorKind::Multiplication,
        w.is_nonnegative(),
        w.is_self_adjoint(),
    )
}

/// `V̂` for a real scalar potential.
pub fn scalar_multiplication(v: &[f64], domain: &Domain) -> Result<OperatorMatrix> {
    multiplication_operator(&EndomorphismField::scalar(v), domain)
}

/// `H + V̂`; `V` is indexed by the operator's local vertex order.
pub fn add_potential(h: &OperatorMatrix, v: &EndomorphismField) -> Result<OperatorMatrix> {
    if !v.is_self_adjoint() {
        let defect = v.values().iter().map(hermitian_defect).fold(0.0, f64::max);
        return Err(Error::NotSelfAdjoint(defect));
    }
    let vhat = multiplication_operator(v, h.domain())?;
    OperatorMatrix::new(
        h.matrix() + vhat.matrix(),
        h.domain().clone(),
        OperatorKind::Sum,
        h.is_psd() && v.is_nonnegative(),
    )
}

/// Principal submatrix of `h` on the given host vertices (all fiber
/// coordinates kept). Diagonal entries keep the full host degree.
pub fn dirichlet_restriction(h: &OperatorMatrix, subset: &[usize]) -> Result<OperatorMatrix> {
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    let (domain, local) = h.domain().restricted(subset)?;
    let d = h.rank();
    let dofs: Vec<usize> = local
        .iter()
        .flat_map(|&p| (0..d).map(move |j| p * d + j))
        .collect();
    let m = CMat::from_fn(dofs.len(), dofs.len(), |i, j| {
        h.matrix()[(dofs[i], dofs[j])]
    });
    OperatorMatrix::unchecked(
        m,
        domain,
        OperatorKind::DirichletRestriction,
        h.is_psd(),
        h.is_self_adjoint(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generators;
    use crate::random;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn two_vertex(beta: f64, rho: (f64, f64)) -> WeightedGraph {
        WeightedGraph::new([("1", rho.0), ("2", rho.1)], [("1", "2", beta)]).unwrap()
    }

    #[test]
    fn two_vertex_laplacian() {
        let h = assemble_laplacian(&two_vertex(2.5, (1.0, 1.0))).unwrap();
        let m = h.matrix();
        assert_eq!(m[(0, 0)], c(2.5));
        assert_eq!(m[(0, 1)], c(-2.5));
        let ev = h.eigenvalues().unwrap();
        assert!(ev[0].abs() < 1e-14 && (ev[1] - 5.0).abs() < 1e-13);
    }

    #[test]
    fn two_vertex_weighted_laplacian() {
        let h = assemble_laplacian(&two_vertex(1.0, (1.0, 2.0))).unwrap();
        let m = h.matrix();
        assert_eq!(
            [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]],
            [c(1.0), c(-1.0), c(-0.5), c(0.5)]
        );
        let f = [c(0.3), c(-1.7)];
        let g = [c(2.0), c(0.4)];
        assert!((h.form(&f, &g) - h.form(&g, &f).conj()).norm() < 1e-15);
    }

    #[test]
    fn single_vertex_laplacian_is_zero() {
        let g = WeightedGraph::new([("x", 3.0)], Vec::<(&str, &str, f64)>::new()).unwrap();
        let h = assemble_laplacian(&g).unwrap();
        assert_eq!(h.matrix()[(0, 0)], ZERO);
    }

    #[test]
    fn invalid_graph_is_rejected() {
        let g = WeightedGraph::from_directed([("1", 1.0), ("2", 1.0)], [("1", "2", 1.0)]).unwrap();
        assert!(matches!(
            assemble_laplacian(&g),
            Err(Error::InvalidGraph(_))
        ));
    }

    #[test]
    fn quadratic_form_examples() {
        let g = generators::path(3, 1.0, 1.0);
        let f = [c(1.0), c(0.0), c(-1.0)];
        assert_eq!(quadratic_form(&g, &f, &f).unwrap(), c(2.0));
        let h = assemble_laplacian(&g).unwrap();
        assert!((h.form(&f, &f) - c(2.0)).norm() < 1e-15);
        let ones = [c(1.0); 3];
        assert_eq!(quadratic_form(&g, &ones, &ones).unwrap(), ZERO);

        let g = two_vertex(1.0, (1.0, 1.0));
        let delta = [c(1.0), c(0.0)];
        assert_eq!(quadratic_form(&g, &delta, &delta).unwrap(), c(1.0));
        assert_eq!(form_bound(&g), 1.0);
    }

    #[test]
    fn magnetic_two_vertex() {
        let beta = 1.5;
        let g = two_vertex(beta, (1.0, 1.0));
        for theta in [0.0, 0.3, 1.0, std::f64::consts::PI] {
            let conn = UnitaryConnection::magnetic(&g, |_, _| theta).unwrap();
            let b = HermitianBundle::identity(2, 1).unwrap();
            let h = assemble_covariant(&g, &b, &conn).unwrap();
            let expected = Complex64::from_polar(beta, -theta);
            assert!((h.matrix()[(0, 1)] + expected).norm() < 1e-15);
            let ev = h.eigenvalues().unwrap();
            assert!(ev[0].abs() < 1e-13 && (ev[1] - 2.0 * beta).abs() < 1e-13);
        }
    }

    #[test]
    fn frustrated_triangle_has_no_kernel() {
        let g = generators::cycle(3);
        let conn = UnitaryConnection::magnetic(&g, |x, y| {
            if (x, y) == (0, 1) {
                std::f64::consts::PI
            } else {
                0.0
            }
        })
        .unwrap();
        let b = HermitianBundle::identity(3, 1).unwrap();
        let h = assemble_covariant(&g, &b, &conn).unwrap();
        assert!(h.min_eigenvalue().unwrap() > 1e-8);
    }

    #[test]
    fn trivial_connection_matches_laplacian_exactly() {
        let mut rng = random::rng(11);
        let g = generators::erdos_renyi(
            generators::RandomGraphSpec {
                n: 12,
                p: 0.3,
                b_range: (0.1, 2.0),
                rho_range: (0.2, 5.0),
            },
            &mut rng,
        );
        let h = assemble_laplacian(&g).unwrap();
        let b = HermitianBundle::identity(g.len(), 1).unwrap();
        let hc = assemble_covariant(&g, &b, &UnitaryConnection::trivial(1)).unwrap();
        assert_eq!(h.matrix(), hc.matrix());
    }

    #[test]
    fn potentials_shift_spectrum() {
        let g = two_vertex(1.0, (1.0, 1.0));
        let h = assemble_laplacian(&g).unwrap();
        let same = add_potential(&h, &EndomorphismField::scalar(&[0.0, 0.0])).unwrap();
        assert_eq!(same.matrix(), h.matrix());
        let shifted = add_potential(&h, &EndomorphismField::scalar(&[1.0, 1.0])).unwrap();
        let ev = shifted.eigenvalues().unwrap();
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
        let one_sided = add_potential(&h, &EndomorphismField::scalar(&[1.0, 0.0])).unwrap();
        let ev = one_sided.eigenvalues().unwrap();
        let s5 = 5f64.sqrt();
        assert!((ev[0] - (3.0 - s5) / 2.0).abs() < 1e-14);
        assert!((ev[1] - (3.0 + s5) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn multiplication_examples() {
        let g = generators::path(3, 1.0, 1.0);
        let dom = Domain::of_graph(&g, 1);
        let id = scalar_multiplication(&[1.0; 3], &dom).unwrap();
        assert_eq!(id.matrix(), &CMat::identity(3, 3));
        let v = scalar_multiplication(&[0.0, -3.0, 0.0], &dom).unwrap();
        assert_eq!(v.matrix()[(1, 1)], c(-3.0));
        assert!(v.is_self_adjoint());
        let skew = EndomorphismField::new(
            1,
            vec![CMat::from_element(1, 1, Complex64::new(0.0, 1.0)); 3],
        )
        .unwrap();
        assert!(!multiplication_operator(&skew, &dom)
            .unwrap()
            .is_self_adjoint());
    }

    #[test]
    fn restriction_examples() {
        let g = generators::path(3, 1.0, 1.0);
        let h = assemble_laplacian(&g).unwrap();
        let full = dirichlet_restriction(&h, &[0, 1, 2]).unwrap();
        assert_eq!(full.matrix(), h.matrix());
        let mid = dirichlet_restriction(&h, &[1]).unwrap();
        assert_eq!(mid.matrix()[(0, 0)], c(2.0));
        assert_eq!(mid.kind(), OperatorKind::DirichletRestriction);
        assert!(matches!(
            dirichlet_restriction(&h, &[]),
            Err(Error::EmptySubset)
        ));
        assert!(dirichlet_restriction(&h, &[5]).is_err());
    }
}
