//! One function per subcommand. Each returns the serialized report and the
//! rows it asserts; input problems surface as errors.

use std::path::Path;

use anyhow::{bail, Context, Result};
use kato_core::bundle::{gram_schmidt_frame, Split};
use kato_core::compactness::{certify_compactness, check_domination, CertifyOptions, DEFAULT_A};
use kato_core::control::{check_integrability, fit_control, Family, TimeControl};
use kato_core::demo::{self, DemoConfig, Lattice};
use kato_core::graph::{build_exhaustion, dyadic_radii, validate_graph};
use kato_core::heat::{
    kernel_from_semigroup, minimal_kernel, verify_axioms, verify_rho_bound, DEFAULT_TIMES,
};
use kato_core::io::{self, BundleData, KernelFile};
use kato_core::operators::{add_potential, assemble_covariant, assemble_laplacian};
use kato_core::{
    EndomorphismField, Exhaustion, HermitianBundle, OperatorMatrix, PotentialDecomposition,
    Tolerances, WeightedGraph,
};
use serde::Serialize;

use crate::args::*;
use crate::output::Outcome;

pub struct RunContext {
    pub seed: u64,
    pub tol: Tolerances,
}

impl RunContext {
    fn outcome<A: Serialize, R: Serialize>(
        &self,
        command: &str,
        args: &A,
        report: &R,
        rows: Vec<kato_core::LedgerRow>,
        pass: bool,
    ) -> Result<Outcome> {
        Outcome::new(command, self.seed, &self.tol, args, report, rows, pass)
    }
}

fn read_valid_graph(path: &Path) -> Result<WeightedGraph> {
    let g = io::read_graph(path)?;
    let report = validate_graph(&g);
    if !report.is_valid() {
        bail!("{}: invalid graph: {report}", path.display());
    }
    Ok(g)
}

fn times_or_default(times: &Option<Vec<f64>>) -> Vec<f64> {
    times.clone().unwrap_or_else(|| DEFAULT_TIMES.to_vec())
}

/// Parses `root=ID,radii=R1,R2,...`.
fn parse_exhaustion(g: &WeightedGraph, spec: &str) -> Result<Exhaustion> {
    let rest = spec
        .strip_prefix("root=")
        .with_context(|| format!("exhaustion `{spec}` must start with root=ID"))?;
    let (root, radii) = match rest.split_once(",radii=") {
        Some((root, radii)) => {
            let radii = radii
                .split(',')
                .map(|r| {
                    r.trim()
                        .parse::<usize>()
                        .with_context(|| format!("bad radius `{r}`"))
                })
                .collect::<Result<Vec<_>>>()?;
            (g.vertex(root)?, radii)
        }
        None => {
            let root = g.vertex(rest)?;
            (root, dyadic_radii(g, root)?)
        }
    };
    Ok(build_exhaustion(g, root, &radii)?)
}

fn default_exhaustion(g: &WeightedGraph) -> Result<Exhaustion> {
    Ok(build_exhaustion(g, 0, &dyadic_radii(g, 0)?)?)
}

pub fn graph_validate(cx: &RunContext, args: &GraphArgs) -> Result<Outcome> {
    let g = io::read_graph(&args.graph)?;
    let report = validate_graph(&g);
    #[derive(Serialize)]
    struct Report {
        vertices: usize,
        edges: usize,
        components: usize,
        validation: kato_core::ValidationReport,
    }
    let pass = report.is_valid();
    if !pass {
        eprintln!("invalid graph: {report}");
    }
    let out = Report {
        vertices: g.len(),
        edges: g.edges().count(),
        components: g.component_count(),
        validation: report,
    };
    cx.outcome("graph validate", args, &out, Vec::new(), pass)
}

pub fn heat_kernel(args: &HeatKernelArgs) -> Result<Outcome> {
    let g = read_valid_graph(&args.graph)?;
    let k = kernel_from_semigroup(&assemble_laplacian(&g)?, &times_or_default(&args.times))?;
    Outcome::raw(&KernelFile::from_kernel(&k))
}

pub fn heat_verify(cx: &RunContext, args: &HeatVerifyArgs) -> Result<Outcome> {
    #[derive(Serialize)]
    struct Report {
        axioms: kato_core::AxiomReport,
        rho_bound: kato_core::LedgerRow,
        #[serde(skip_serializing_if = "Option::is_none")]
        exhaustion: Option<kato_core::heat::ConvergenceReport>,
    }
    let (axioms, rho_bound, exhaustion) = match (&args.graph, &args.kernel) {
        (Some(path), None) => {
            let g = read_valid_graph(path)?;
            let h = assemble_laplacian(&g)?;
            let k = kernel_from_semigroup(&h, &times_or_default(&args.times))?;
            let axioms = verify_axioms(&k, Some(&h), &cx.tol)?;
            let rho = verify_rho_bound(&k, &cx.tol);
            let exhaustion = match &args.exhaustion {
                Some(spec) => {
                    let ex = parse_exhaustion(&g, spec)?;
                    Some(minimal_kernel(&g, &ex, &times_or_default(&args.times), &cx.tol)?.report)
                }
                None => None,
            };
            (axioms, rho, exhaustion)
        }
        (None, Some(path)) => {
            if args.times.is_some() {
                bail!("--times applies to --graph; a kernel file carries its own grid");
            }
            let k = io::read_kernel(path)?;
            (
                verify_axioms(&k, None, &cx.tol)?,
                verify_rho_bound(&k, &cx.tol),
                None,
            )
        }
        _ => bail!("pass exactly one of --graph and --kernel"),
    };
    let mut rows = axioms.rows.clone();
    rows.push(rho_bound.clone());
    if let Some(ex) = &exhaustion {
        rows.push(ex.monotonicity.clone());
    }
    let pass = rows.iter().all(|r| r.pass);
    let report = Report {
        axioms,
        rho_bound,
        exhaustion,
    };
    cx.outcome("heat verify", args, &report, rows, pass)
}

pub fn heat_minimal(cx: &RunContext, args: &HeatMinimalArgs) -> Result<Outcome> {
    let g = read_valid_graph(&args.graph)?;
    let ex = match &args.exhaustion {
        Some(spec) => parse_exhaustion(&g, spec)?,
        None => default_exhaustion(&g)?,
    };
    let mk = minimal_kernel(&g, &ex, &times_or_default(&args.times), &cx.tol)?;
    let rows = vec![mk.report.monotonicity.clone()];
    cx.outcome("heat minimal", args, &mk.report, rows, mk.report.pass())
}

pub fn control_check(cx: &RunContext, args: &ControlCheckArgs) -> Result<Outcome> {
    let f2 = match args.family {
        F2Family::Power => TimeControl::PowerLaw {
            c: args.c,
            gamma: args.gamma,
        },
        F2Family::Constant => TimeControl::Constant { c: args.c },
        F2Family::Monomial => TimeControl::Monomial {
            c: args.c,
            gamma: args.gamma,
        },
        F2Family::BakryEmery => TimeControl::BakryEmery {
            c: args.c,
            m: args.m,
            beta: args.beta,
            radius: args.radius,
        },
    };
    let verdict = check_integrability(&f2, args.q)?;
    #[derive(Serialize)]
    struct Report {
        f2: TimeControl,
        q: f64,
        verdict: kato_core::Verdict,
    }
    let pass = verdict.is_convergent();
    let report = Report {
        f2,
        q: args.q,
        verdict,
    };
    cx.outcome("control check", args, &report, Vec::new(), pass)
}

pub fn control_fit(cx: &RunContext, args: &ControlFitArgs) -> Result<Outcome> {
    let k = io::read_kernel(&args.kernel)?;
    let family = match args.family {
        FitFamily::Graph => Family::Graph,
        FitFamily::Power => Family::PowerLaw,
        FitFamily::Constant => Family::Constant,
    };
    let fitted = fit_control(&k, family, args.q)?;
    let rows = vec![fitted.certificate.worst.clone()];
    let pass = fitted.certificate.pass;
    cx.outcome("control fit", args, &fitted, rows, pass)
}

/// `W` in orthonormal frame coordinates, matching the covariant operator.
fn euclidean(field: &EndomorphismField, bundle: &HermitianBundle) -> Result<EndomorphismField> {
    if bundle.has_identity_metric() {
        return Ok(field.clone());
    }
    Ok(field.trivialized(&gram_schmidt_frame(bundle)?)?)
}

fn covariant_operator(
    g: &WeightedGraph,
    data: &BundleData,
    v: Option<&str>,
) -> Result<OperatorMatrix> {
    let h = assemble_covariant(g, &data.bundle, &data.connection)?;
    Ok(match v {
        Some(name) => {
            let v = euclidean(data.potential(name)?, &data.bundle)?;
            if !v.is_nonnegative() {
                bail!("potential `{name}` must be pointwise nonnegative");
            }
            add_potential(&h, &v)?
        }
        None => h,
    })
}

fn parse_split(spec: &str, g: &WeightedGraph, data: &BundleData) -> Result<Split> {
    let (kind, value) = spec.split_once(':').unwrap_or((spec, ""));
    Ok(match kind {
        "threshold" => Split::Threshold(
            value
                .parse()
                .with_context(|| format!("bad threshold `{value}`"))?,
        ),
        "support" => Split::Support(
            value
                .split(',')
                .filter(|s| !s.is_empty())
                .map(|id| g.vertex(id.trim()).map_err(Into::into))
                .collect::<Result<_>>()?,
        ),
        "explicit" => {
            let (w1, w2) = value
                .split_once(',')
                .with_context(|| "explicit split needs `explicit:W1,W2`".to_string())?;
            Split::Explicit(
                euclidean(data.potential(w1)?, &data.bundle)?,
                euclidean(data.potential(w2)?, &data.bundle)?,
            )
        }
        "none" => Split::Support((0..g.len()).collect()),
        _ => {
            bail!("unknown decomposition `{spec}` (threshold:C, support:IDS, explicit:W1,W2, none)")
        }
    })
}

pub fn compact_certify(cx: &RunContext, args: &CertifyArgs) -> Result<Outcome> {
    let g = read_valid_graph(&args.graph)?;
    let data = io::read_bundle(&args.bundle, &g)?;
    let h = covariant_operator(&g, &data, args.v.as_deref())?;
    let k = kernel_from_semigroup(&assemble_laplacian(&g)?, &times_or_default(&args.times))?;
    let fitted = fit_control(&k, Family::Graph, args.q)?;
    let w = euclidean(data.potential(&args.potential)?, &data.bundle)?;
    let split = parse_split(&args.decomp, &g, &data)?;
    let pd = PotentialDecomposition::split(w, &split, g.rho(), &fitted.pair)?;
    let root = match &args.root {
        Some(id) => g.vertex(id)?,
        None => 0,
    };
    let radii = match &args.radii {
        Some(r) => r.clone(),
        None => dyadic_radii(&g, root)?,
    };
    let ex = build_exhaustion(&g, root, &radii)?;
    let opts = CertifyOptions {
        a_values: args.a_values.clone().unwrap_or_else(|| DEFAULT_A.to_vec()),
        top_k: args.top_k,
        tol: cx.tol.clone(),
    };
    let report = certify_compactness(pd, &h, &fitted.pair, &ex, &opts)?;
    let mut rows = vec![fitted.certificate.worst.clone()];
    rows.extend(report.bounds.iter().cloned());
    let pass = fitted.certificate.pass && report.pass();
    if !report.stabilized {
        eprintln!("{}", report.summary);
    }
    #[derive(Serialize)]
    struct Report<'a> {
        control: &'a kato_core::control::FittedControl,
        level_sizes: Vec<usize>,
        #[serde(flatten)]
        compactness: &'a kato_core::CompactnessReport,
    }
    let out = Report {
        control: &fitted,
        level_sizes: ex.levels().iter().map(Vec::len).collect(),
        compactness: &report,
    };
    cx.outcome("compact certify", args, &out, rows, pass)
}

pub fn dominate_check(cx: &RunContext, args: &DominateArgs) -> Result<Outcome> {
    let g = read_valid_graph(&args.graph)?;
    let data = io::read_bundle(&args.bundle, &g)?;
    let t_op = covariant_operator(&g, &data, args.potential.as_deref())?;
    let s_op = assemble_laplacian(&g)?;
    let times: Vec<f64> = times_or_default(&args.times)
        .into_iter()
        .filter(|&t| t > 0.0)
        .collect();
    let a_values = args.a_values.clone().unwrap_or_else(|| DEFAULT_A.to_vec());
    let mut rng = kato_core::random::rng(cx.seed);
    let report = check_domination(
        &t_op,
        &s_op,
        &times,
        &a_values,
        args.trials,
        &mut rng,
        &cx.tol,
    )?;
    let rows = report.rows.clone();
    cx.outcome("dominate check", args, &report, rows, report.pass())
}

pub fn demo_coulomb(cx: &RunContext, args: &CoulombArgs) -> Result<Outcome> {
    let config = DemoConfig {
        lattice: match args.lattice {
            LatticeArg::Path => Lattice::Path,
            LatticeArg::Grid => Lattice::Grid,
        },
        n: args.n,
        kappa: args.kappa,
        theta: args.theta,
        decay_power: args.decay_power,
        threshold: args.threshold,
        a_values: args.a_values.clone().unwrap_or_else(|| DEFAULT_A.to_vec()),
        top_k: args.top_k,
        trials: args.trials,
        seed: cx.seed,
        tol: cx.tol.clone(),
        ..DemoConfig::default()
    };
    let report = demo::run(&config)?;
    if !report.compactness.stabilized {
        eprintln!("{}", report.compactness.summary);
    }
    let rows: Vec<_> = report.rows().cloned().collect();
    cx.outcome("demo coulomb-lattice", args, &report, rows, report.pass)
}
