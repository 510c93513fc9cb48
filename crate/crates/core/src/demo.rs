//! The Coulomb-type lattice example: a path or square lattice with unit
//! weights, a constant-phase magnetic connection, and a potential
//! `W(x) = κ / (1 + d(x, x₀)^p)` split at a threshold into an `ℓ²` part and
//! a bounded part. Every hypothesis of the relative compactness statement
//! is checked, and the singular values of `Ŵ(H^Φ + a)^{-1}` are tracked
//! over an exhaustion by balls around `x₀`.

use serde::Serialize;

use crate::bundle::{EndomorphismField, HermitianBundle, Split, UnitaryConnection};
use crate::compactness::{
    certify_compactness, check_2a_bound, check_domination, check_hs_bound, check_resolvent,
    fiber_norms, CertifyOptions, CompactnessReport, DominationReport, PotentialDecomposition,
    DEFAULT_A,
};
use crate::control::{fit_control, Family, FittedControl, Verdict};
use crate::error::{Error, Result};
use crate::graph::{build_exhaustion, dyadic_radii, generators, validate_graph, WeightedGraph};
use crate::heat::{
    kernel_from_semigroup, verify_axioms, verify_rho_bound, AxiomReport, DEFAULT_TIMES,
};
use crate::operators::{assemble_covariant, assemble_laplacian};
use crate::random;
use crate::report::{all_pass, LedgerRow, Tolerances, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Lattice {
    Path,
    /// Square grid with `⌈√n⌉` vertices per side.
    Grid,
}

#[derive(Debug, Clone, Serialize)]
pub struct DemoConfig {
    pub lattice: Lattice,
    pub n: usize,
    pub kappa: f64,
    pub theta: f64,
    /// Exponent `p` in `κ / (1 + d^p)`.
    pub decay_power: f64,
    pub threshold: f64,
    pub a_values: Vec<f64>,
    pub top_k: usize,
    pub times: Vec<f64>,
    /// Random sections per domination check.
    pub trials: usize,
    pub seed: u64,
    pub tol: Tolerances,
}

impl Default for DemoConfig {
    fn default() -> Self {
        Self {
            lattice: Lattice::Path,
            n: 200,
            kappa: 1.0,
            theta: 0.3,
            decay_power: 1.0,
            threshold: 0.1,
            a_values: DEFAULT_A.to_vec(),
            top_k: 5,
            times: DEFAULT_TIMES.to_vec(),
            trials: 50,
            seed: 0,
            tol: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphSummary {
    pub vertices: usize,
    pub edges: usize,
    pub root: String,
    pub radii: Vec<usize>,
    pub level_sizes: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DemoReport {
    pub schema: &'static str,
    pub config: DemoConfig,
    pub graph: GraphSummary,
    pub axioms: AxiomReport,
    pub rho_bound: LedgerRow,
    pub control: FittedControl,
    pub integrability: Verdict,
    pub resolvent: Vec<LedgerRow>,
    pub hilbert_schmidt: Vec<LedgerRow>,
    pub two_alpha: Vec<LedgerRow>,
    pub domination: DominationReport,
    pub compactness: CompactnessReport,
    pub pass: bool,
}

impl DemoReport {
    /// Every ledger row of the run, in report order.
    pub fn rows(&self) -> impl Iterator<Item = &LedgerRow> {
        self.axioms
            .rows
            .iter()
            .chain(std::iter::once(&self.rho_bound))
            .chain(std::iter::once(&self.control.certificate.worst))
            .chain(&self.resolvent)
            .chain(&self.hilbert_schmidt)
            .chain(&self.two_alpha)
            .chain(&self.domination.rows)
            .chain(&self.compactness.bounds)
    }
}

fn lattice(config: &DemoConfig) -> WeightedGraph {
    match config.lattice {
        Lattice::Path => generators::path(config.n, 1.0, 1.0),
        Lattice::Grid => {
            let side = (config.n as f64).sqrt().ceil() as usize;
            generators::grid(side, side, 1.0, 1.0)
        }
    }
}

pub fn run(config: &DemoConfig) -> Result<DemoReport> {
    if config.n < 2 {
        return Err(Error::InvalidArgument(
            "the lattice needs at least two vertices".into(),
        ));
    }
    if !(config.kappa.is_finite() && config.theta.is_finite() && config.decay_power > 0.0) {
        return Err(Error::InvalidArgument(
            "κ, θ must be finite and the decay power positive".into(),
        ));
    }
    let tol = &config.tol;
    let mut rng = random::rng(config.seed);
    let g = lattice(config);
    let report = validate_graph(&g);
    if !report.is_valid() {
        return Err(Error::InvalidGraph(report));
    }
    let root = 0;
    let dist: Vec<usize> = g
        .hop_distances(root)
        .into_iter()
        .map(|d| d.expect("lattices are connected"))
        .collect();
    let radii = dyadic_radii(&g, root)?;
    let ex = build_exhaustion(&g, root, &radii)?;

    let h = assemble_laplacian(&g)?;
    let k = kernel_from_semigroup(&h, &config.times)?;
    let axioms = verify_axioms(&k, Some(&h), tol)?;
    let rho_bound = verify_rho_bound(&k, tol);
    let control = fit_control(&k, Family::Graph, 1.0)?;
    let integrability = control.pair.integrability()?;

    let resolvent = config
        .a_values
        .iter()
        .map(|&a| check_resolvent(&h, a, tol))
        .collect::<Result<Vec<_>>>()?;

    let w_values: Vec<f64> = dist
        .iter()
        .map(|&d| config.kappa / (1.0 + (d as f64).powf(config.decay_power)))
        .collect();
    let pd = PotentialDecomposition::split(
        EndomorphismField::scalar(&w_values),
        &Split::Threshold(config.threshold),
        g.rho(),
        &control.pair,
    )?;

    let w1 = fiber_norms(&pd.w1);
    let mut hilbert_schmidt = Vec::new();
    for &t in &config.times {
        if t > 0.0 && k.time_index(2.0 * t).is_some() {
            hilbert_schmidt.extend(check_hs_bound(&w1, &k, &control.pair, t, tol)?);
        }
    }
    let support: Vec<usize> = (0..g.len()).filter(|&x| w1[x] > 0.0).collect();
    let t_probe = if k.time_index(1.0).is_some() {
        1.0
    } else {
        *config.times.last().expect("nonempty time grid")
    };
    let two_alpha = [3.0, 4.0, 8.0]
        .iter()
        .map(|&alpha| check_2a_bound(&support, &k, t_probe, alpha, &mut rng, tol))
        .collect::<Result<Vec<_>>>()?;

    let phi = UnitaryConnection::magnetic(&g, |_, _| config.theta)?;
    let bundle = HermitianBundle::identity(g.len(), 1)?;
    let h_phi = assemble_covariant(&g, &bundle, &phi)?;
    let positive_times: Vec<f64> = config.times.iter().copied().filter(|&t| t > 0.0).collect();
    let domination = check_domination(
        &h_phi,
        &h,
        &positive_times,
        &config.a_values,
        config.trials,
        &mut rng,
        tol,
    )?;

    let opts = CertifyOptions {
        a_values: config.a_values.clone(),
        top_k: config.top_k,
        tol: tol.clone(),
    };
    let compactness = certify_compactness(pd, &h_phi, &control.pair, &ex, &opts)?;

    let graph = GraphSummary {
        vertices: g.len(),
        edges: g.edges().count(),
        root: g.id(root).to_string(),
        radii,
        level_sizes: ex.levels().iter().map(Vec::len).collect(),
    };
    let mut out = DemoReport {
        schema: SCHEMA_VERSION,
        config: config.clone(),
        graph,
        axioms,
        rho_bound,
        control,
        integrability,
        resolvent,
        hilbert_schmidt,
        two_alpha,
        domination,
        compactness,
        pass: false,
    };
    let rows: Vec<LedgerRow> = out.rows().cloned().collect();
    out.pass = all_pass(&rows)
        && out.control.certificate.pass
        && out.integrability.is_convergent()
        && out.compactness.pass();
    Ok(out)
}
