//! End-to-end assembly: resolve the host graph's robust-connectivity
//! parameters, derive every stage constant from a single accuracy knob
//! `eps`, run separator extraction → cycle-breaking/path-joining →
//! leftover absorption, and re-verify the final system from scratch.
//!
//! Also provides the instance generators (clique, balanced bipartite,
//! random regular, quadratic-residue expander fixture) and the benchmark
//! harness that the command-line front end exposes.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::str::FromStr;

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::base::BaseParams;
use crate::connectivity::{
    certify_robust_connectivity, CertMode, ConnectivityError, RobustConnCertificate,
};
use crate::exec;
use crate::graph::{
    norm_edge, verify_separation, Edge, Graph, GraphError, InvalidPath, PathSystem, SepMode,
    SeparationReport,
};
use crate::leftover::{last_few_paths_with_labels, practical_label_count, LeftoverError};
use crate::refine::{refine_eps_prime, refine_separator, RefineError};
use crate::separator::{build_separator, SeparatorError};
use crate::util::{derive_seed, rng_from_seed};
use rand::Rng;

/// Accuracy knob used by the benchmark harness when none is given.
pub const DEFAULT_EPS: f64 = 0.2;

/// Largest host for which connectivity certification defaults to exact
/// (all-pairs) mode; larger hosts default to a seeded sample.
pub const EXACT_CERT_MAX_N: usize = 320;

/// Pairs sampled by default when exact certification is off the table.
pub const SAMPLED_CERT_PAIRS: usize = 2_000;

/// Robust-connectivity parameter ladder tried in order when no override is
/// given: generous direct connectivity first (cliques), then weaker
/// one-hop, then two- and three-hop regimes (balanced bipartite hosts land
/// on `(0.2, 2)`).  The first certified entry wins.
pub const CONNECTIVITY_LADDER: [(f64, u32); 5] =
    [(0.5, 1), (0.25, 1), (0.2, 2), (0.1, 2), (0.05, 3)];

// Stage seed salts (arbitrary fixed tags; distinct so stages draw
// independent streams from one run seed).
const SALT_CERT: u64 = 0x6365_7274;
const SALT_SEPARATOR: u64 = 0x7365_7061;
const SALT_REFINE: u64 = 0x7265_6669;
const SALT_LEFTOVER: u64 = 0x6c65_6674;

#[derive(Debug, Error)]
pub enum DriverError {
    #[error("bad parameter {what}: {value}")]
    BadParameter { what: &'static str, value: f64 },
    #[error("{0}")]
    Domain(String),
    #[error("reading graph: {0}")]
    Io(String),
    #[error("parsing graph: {0}")]
    Graph(#[from] GraphError),
    #[error("no connectivity-ladder entry certifies the host; last attempt {0}")]
    NotRobust(String),
    #[error("connectivity stage: {0}")]
    Connectivity(#[from] ConnectivityError),
    #[error("separator stage: {0}")]
    Separator(#[from] SeparatorError),
    #[error("path-joining stage: {0}")]
    Refine(#[from] RefineError),
    #[error("leftover stage: {0}")]
    Leftover(#[from] LeftoverError),
    #[error("assembled system is malformed: {0}")]
    Malformed(#[from] InvalidPath),
    #[error(
        "final verification failed: {violations} containment violations, \
         {uncovered} uncovered edges"
    )]
    Unverified { violations: u64, uncovered: usize },
}

// ---------------------------------------------------------------------------
// Instance generators
// ---------------------------------------------------------------------------

/// The built-in host-graph families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphFamily {
    /// Complete graph on `n` vertices.
    Clique,
    /// Complete bipartite graph with sides `⌊n/2⌋` and `⌈n/2⌉`.
    Bipartite,
    /// Dense circulant randomized by degree-preserving edge swaps.
    RandomRegular,
    /// Quadratic-residue (Paley) graph on the smallest prime `p ≥ n`
    /// with `p ≡ 1 (mod 4)`; a classical explicit expander.
    ExpanderFixture,
}

impl GraphFamily {
    pub const ALL: [GraphFamily; 4] = [
        GraphFamily::Clique,
        GraphFamily::Bipartite,
        GraphFamily::RandomRegular,
        GraphFamily::ExpanderFixture,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            GraphFamily::Clique => "clique",
            GraphFamily::Bipartite => "bipartite",
            GraphFamily::RandomRegular => "random-regular",
            GraphFamily::ExpanderFixture => "expander-fixture",
        }
    }
}

impl fmt::Display for GraphFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GraphFamily {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "clique" => Ok(GraphFamily::Clique),
            "bipartite" => Ok(GraphFamily::Bipartite),
            "random-regular" => Ok(GraphFamily::RandomRegular),
            "expander-fixture" => Ok(GraphFamily::ExpanderFixture),
            other => Err(format!(
                "unknown family {other:?} (expected clique|bipartite|random-regular|expander-fixture)"
            )),
        }
    }
}

/// Generate a host graph of the given family with ~`n` vertices.  All
/// families are deterministic in `seed`; the expander fixture ignores it
/// (the graph is explicit) and may round `n` up to the next usable prime.
pub fn generate_family(family: GraphFamily, n: usize, seed: u64) -> Result<Graph, DriverError> {
    if n < 8 {
        return Err(DriverError::BadParameter {
            what: "n",
            value: n as f64,
        });
    }
    match family {
        GraphFamily::Clique => Ok(Graph::complete(n)),
        GraphFamily::Bipartite => Ok(Graph::complete_bipartite(n / 2, n - n / 2)),
        GraphFamily::RandomRegular => random_regular(n, seed),
        GraphFamily::ExpanderFixture => paley_graph(n),
    }
}

/// Dense random regular graph: a circulant with offsets `1..=⌈n/4⌉`
/// (degree `2⌈n/4⌉ ≈ n/2`), mixed by degree-preserving 2-opt edge swaps.
fn random_regular(n: usize, seed: u64) -> Result<Graph, DriverError> {
    let k = n.div_ceil(4);
    debug_assert!(2 * k < n, "offset range must stay below n/2");
    let mut edges: Vec<Edge> = Vec::with_capacity(n * k);
    for off in 1..=k as u32 {
        for u in 0..n as u32 {
            edges.push(norm_edge(u, (u + off) % n as u32));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    let mut present: HashSet<Edge> = edges.iter().copied().collect();

    let mut rng = rng_from_seed(derive_seed(seed, 0x7267_7377));
    let attempts = 4 * edges.len();
    for _ in 0..attempts {
        let i = rng.random_range(0..edges.len());
        let j = rng.random_range(0..edges.len());
        if i == j {
            continue;
        }
        let (a, b) = edges[i];
        let (mut c, mut d) = edges[j];
        // Two rewirings preserve all degrees; pick one by coin flip.
        if rng.random_bool(0.5) {
            std::mem::swap(&mut c, &mut d);
        }
        if a == c || a == d || b == c || b == d {
            continue;
        }
        let e1 = norm_edge(a, c);
        let e2 = norm_edge(b, d);
        if present.contains(&e1) || present.contains(&e2) {
            continue;
        }
        present.remove(&edges[i]);
        present.remove(&edges[j]);
        present.insert(e1);
        present.insert(e2);
        edges[i] = e1;
        edges[j] = e2;
    }
    let mut final_edges: Vec<Edge> = present.into_iter().collect();
    final_edges.sort_unstable();
    Ok(Graph::new(n, final_edges)?)
}

fn is_prime(p: usize) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Quadratic-residue graph on the smallest prime `p ≥ max(n, 13)` with
/// `p ≡ 1 (mod 4)`: vertices `0..p`, edge `{a, b}` iff `a − b` is a
/// nonzero square mod `p`.  The congruence makes `−1` a square, so the
/// relation is symmetric; the graph is `(p−1)/2`-regular.
fn paley_graph(n: usize) -> Result<Graph, DriverError> {
    let mut p = n.max(13);
    while !(is_prime(p) && p % 4 == 1) {
        p += 1;
    }
    let mut residue = vec![false; p];
    for x in 1..p {
        residue[(x * x) % p] = true;
    }
    let mut edges: Vec<Edge> = Vec::new();
    for a in 0..p as u32 {
        for b in (a + 1)..p as u32 {
            if residue[(b - a) as usize] {
                edges.push((a, b));
            }
        }
    }
    Ok(Graph::new(p, edges)?)
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Where the host graph comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum GraphSource {
    /// Plain edge-list file (`u v` per line, `#` comments).
    File(String),
    /// Generated instance.
    Family { family: GraphFamily, n: usize },
}

/// Per-stage constant overrides.  `None` means "derive the default from
/// the host graph and `eps`"; every constant of the construction is
/// reachable here so desk-scale tuning stays honest and explicit.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageOverrides {
    /// Robust-connectivity density (with `l_max`; both or neither).
    pub delta: Option<f64>,
    /// Robust-connectivity path-length cap (with `delta`; both or neither).
    pub l_max: Option<u32>,
    /// Certification mode (default: exact up to [`EXACT_CERT_MAX_N`]
    /// vertices, sampled beyond).
    pub cert_mode: Option<CertMode>,
    /// Separator-stage accuracy (default `1 − 1/(1 + eps/2)`).
    pub eps_separator: Option<f64>,
    /// Compactness parameter (default from [`refine_eps_prime`]).
    pub eps_prime: Option<f64>,
    /// Target uncovered-degree fraction after path-joining
    /// (default `(eps·delta/2400L)²`).
    pub refine_eps_target: Option<f64>,
    /// Leftover label count (default [`practical_label_count`]).
    pub label_count: Option<usize>,
}

/// One reproducible construction request.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub source: GraphSource,
    pub eps: f64,
    pub seed: u64,
    /// Number of repeated constructions (trial `t` uses seed
    /// `derive_seed(seed, t)`, except trial 0 which uses `seed` itself).
    pub trials: usize,
    pub overrides: StageOverrides,
    /// Output target for the front end (path-system file); the library
    /// itself never writes it.
    pub out: Option<String>,
}

impl RunConfig {
    pub fn new(source: GraphSource, eps: f64, seed: u64) -> RunConfig {
        RunConfig {
            source,
            eps,
            seed,
            trials: 1,
            overrides: StageOverrides::default(),
            out: None,
        }
    }

    /// Load or generate the host graph.
    pub fn resolve_graph(&self) -> Result<Graph, DriverError> {
        match &self.source {
            GraphSource::File(path) => {
                let text =
                    fs::read_to_string(path).map_err(|e| DriverError::Io(format!("{path}: {e}")))?;
                Ok(Graph::parse_edge_list(&text)?)
            }
            GraphSource::Family { family, n } => {
                generate_family(*family, *n, derive_seed(self.seed, 0x6765_6e66))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// Every constant the run actually used, after applying overrides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedParams {
    pub delta: f64,
    pub l_max: u32,
    pub cert_exact: bool,
    /// The separator accuracy the `eps` split asks for.
    pub eps_separator_requested: f64,
    /// The separator accuracy actually used: the requested value, inflated
    /// to the smallest feasible one when the host is too small for it.
    pub eps_separator: f64,
    pub lambda: f64,
    pub eps_prime: f64,
    pub refine_eps_target: f64,
    pub label_count: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConnectivityMetrics {
    pub delta: f64,
    pub l_max: u32,
    /// Whether the certificate is a proof (exact mode) or an empirical
    /// sample.
    pub is_proof: bool,
    pub pairs_checked: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SeparatorMetrics {
    /// Number of 2-matchings extracted.
    pub t: usize,
    pub covered_edges: usize,
    /// Fraction of oriented arcs the conflict-free matching covered.
    pub arc_coverage: f64,
    /// Structural properties (degree ≤ 2, multiplicity ≤ 3, strong
    /// self-separation, size) — these are hard requirements.
    pub structural_ok: bool,
    /// Whether the measured asymptotic targets also passed.
    pub measured_all_pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RefineMetrics {
    pub paths: usize,
    pub extra_paths: usize,
    pub fallback_members: usize,
    /// Size of the separated-edge ledger `|E_t|`.
    pub separated_edges: usize,
    pub connector_edges: usize,
    pub eps_effective: f64,
    pub final_max_uncovered_degree: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RemainderMetrics {
    pub edges: usize,
    pub max_degree: usize,
    /// The asymptotic target `(eps·delta/2400L)²·n` for the remainder's
    /// maximum degree; desk-scale runs may exceed it (the excess is simply
    /// absorbed by the leftover stage and the ratio grows).
    pub target_max_degree: f64,
    pub within_target: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LeftoverMetrics {
    pub label_count: usize,
    pub matchings: usize,
    pub parts: usize,
    pub paths: usize,
    pub connector_edges: usize,
    pub checks_pass: bool,
}

/// Per-stage measurements of one construction.
#[derive(Clone, Debug, Serialize)]
pub struct StageMetrics {
    pub connectivity: ConnectivityMetrics,
    pub separator: SeparatorMetrics,
    pub refine: RefineMetrics,
    pub remainder: RemainderMetrics,
    pub leftover: LeftoverMetrics,
}

fn serialize_system<S: Serializer>(ps: &PathSystem, s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(ps.paths.iter().map(|p| &p.vertices))
}

/// Outcome of one construction.  `verdict` is the from-scratch output of
/// the strong-separation verifier on `system` — never inferred from stage
/// bookkeeping — and a report is only ever returned when it passed.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub n: usize,
    pub m: usize,
    /// Regularity coefficient `2m/n²` of the host.
    pub alpha: f64,
    /// `√(3α+1) − 1`.
    pub beta: f64,
    pub eps: f64,
    pub seed: u64,
    pub params: ResolvedParams,
    /// Number of paths in the final system.
    pub size: usize,
    /// `size / n`.
    pub ratio: f64,
    /// `β + eps`: the size coefficient the construction aims for.
    pub target_coefficient: f64,
    /// `(β + eps)·n`, reported as a target — desk-scale runs may exceed it.
    pub target_size: f64,
    pub target_met: bool,
    pub stages: StageMetrics,
    pub verdict: SeparationReport,
    #[serde(serialize_with = "serialize_system")]
    pub system: PathSystem,
}

impl RunReport {
    /// Deterministic serialization: identical configuration and seed give
    /// byte-identical output.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// One-line human summary.
    pub fn summary(&self) -> String {
        format!(
            "n={} m={} size={} ratio={:.3} target={:.3} ({}) verified={}",
            self.n,
            self.m,
            self.size,
            self.ratio,
            self.target_coefficient,
            if self.target_met { "met" } else { "missed" },
            self.verdict.ok,
        )
    }
}

// ---------------------------------------------------------------------------
// Parameter resolution
// ---------------------------------------------------------------------------

fn default_cert_mode(n: usize) -> CertMode {
    if n <= EXACT_CERT_MAX_N {
        CertMode::Exact
    } else {
        CertMode::Sampled {
            pairs: SAMPLED_CERT_PAIRS,
        }
    }
}

/// Find robust-connectivity parameters for the host: honor explicit
/// overrides, otherwise walk [`CONNECTIVITY_LADDER`] and return the first
/// certificate that holds.
fn resolve_connectivity(
    g: &Graph,
    overrides: &StageOverrides,
    seed: u64,
) -> Result<RobustConnCertificate, DriverError> {
    let mode = overrides
        .cert_mode
        .clone()
        .unwrap_or_else(|| default_cert_mode(g.n()));
    match (overrides.delta, overrides.l_max) {
        (Some(delta), Some(l_max)) => {
            Ok(certify_robust_connectivity(g, delta, l_max, mode, seed)?)
        }
        (None, None) => {
            let mut last = String::from("(none tried)");
            for (delta, l_max) in CONNECTIVITY_LADDER {
                match certify_robust_connectivity(g, delta, l_max, mode.clone(), seed) {
                    Ok(cert) => return Ok(cert),
                    Err(e) => last = format!("(delta={delta}, L={l_max}): {e}"),
                }
            }
            Err(DriverError::NotRobust(last))
        }
        _ => Err(DriverError::Domain(
            "delta and l_max overrides must be given together".into(),
        )),
    }
}

/// Smallest separator accuracy ≥ `requested` whose auxiliary-structure
/// parameters are non-degenerate on this host.  The triple-sampling
/// probability scales like `1/((λ²−β²)³n)`, so hosts with `α < 1` need a
/// minimum accuracy at small `n`; the deterministic geometric probe finds
/// it and the report carries both requested and effective values.
fn feasible_eps_separator(n: usize, alpha: f64, requested: f64) -> Result<f64, DriverError> {
    let beta = (3.0 * alpha + 1.0).sqrt() - 1.0;
    let mut eps2 = requested;
    for _ in 0..64 {
        if eps2 >= 0.9 {
            break;
        }
        if BaseParams::new(n, alpha, beta / (1.0 - eps2)).is_ok() {
            return Ok(eps2);
        }
        eps2 *= 1.15;
    }
    Err(DriverError::Domain(format!(
        "no feasible separator accuracy at or above {requested:.4} for n = {n}, alpha = {alpha:.4}"
    )))
}

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

/// Run the full construction with default parameter derivation.
pub fn construct_ssp(g: &Graph, eps: f64, seed: u64) -> Result<RunReport, DriverError> {
    construct_ssp_with(g, eps, seed, &StageOverrides::default())
}

/// Run the full construction: certify connectivity, build the separator
/// collection, break cycles and join fragments into one path per member,
/// absorb the uncovered remainder with path quadruples, then strong-verify
/// the union from scratch.  Fails rather than return an unverified system.
pub fn construct_ssp_with(
    g: &Graph,
    eps: f64,
    seed: u64,
    overrides: &StageOverrides,
) -> Result<RunReport, DriverError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(DriverError::BadParameter {
            what: "eps",
            value: eps,
        });
    }
    let n = g.n();
    if n < 8 || g.m() == 0 {
        return Err(DriverError::Domain(format!(
            "host too small: n = {n}, m = {} (need n ≥ 8 and at least one edge)",
            g.m()
        )));
    }
    let alpha = g.regularity();
    let beta = (3.0 * alpha + 1.0).sqrt() - 1.0;

    // Stage 0: robust connectivity of the host.
    let cert = resolve_connectivity(g, overrides, derive_seed(seed, SALT_CERT))?;
    let (delta, l_max) = (cert.delta, cert.l_max);

    // Constant wiring: split the accuracy budget so that the separator
    // inaccuracy eps₂ satisfies (1+eps/2)(1−eps₂) = 1, i.e. member count
    // t ≈ λn with λ = β(1+eps/2) ≤ (β+eps)n overall.
    let eps_separator_requested = 1.0 - 1.0 / (1.0 + eps / 2.0);
    // An explicit override is honored verbatim (failures surface from the
    // stage); the derived default is inflated to feasibility.
    let eps_separator = match overrides.eps_separator {
        Some(x) => x,
        None => feasible_eps_separator(n, alpha, eps_separator_requested)?,
    };
    if !(eps_separator > 0.0 && eps_separator < 1.0) {
        return Err(DriverError::BadParameter {
            what: "eps_separator",
            value: eps_separator,
        });
    }
    let lambda = beta / (1.0 - eps_separator);
    let eps_prime = match overrides.eps_prime {
        Some(x) => x,
        None => refine_eps_prime(delta, l_max, beta)?,
    };
    let refine_eps_target = overrides.refine_eps_target.unwrap_or_else(|| {
        let x = eps * delta / (2400.0 * l_max as f64);
        x * x
    });

    // Stage 1: separator collection (t indexed 2-matchings).
    let sep = build_separator(
        g,
        delta,
        l_max,
        eps_separator,
        eps_prime,
        derive_seed(seed, SALT_SEPARATOR),
    )?;

    // Stage 2: break cycles, join fragments, one path per member.
    let refined = refine_separator(
        g,
        &sep.collection,
        refine_eps_target,
        derive_seed(seed, SALT_REFINE),
    )?;

    // Stage 3: the remainder = host edges not in the separated ledger.
    let ledger: HashSet<Edge> = refined.separated.iter().copied().collect();
    let remainder: Vec<Edge> = g
        .edges()
        .iter()
        .copied()
        .filter(|e| !ledger.contains(e))
        .collect();
    let label_count = overrides
        .label_count
        .unwrap_or_else(|| practical_label_count(n, &remainder));
    let left = last_few_paths_with_labels(
        g,
        &remainder,
        delta,
        l_max,
        label_count,
        derive_seed(seed, SALT_LEFTOVER),
    )?;

    // Assemble and re-verify from scratch.
    let refine_metrics = RefineMetrics {
        paths: refined.paths.len(),
        extra_paths: refined.extra_paths.len(),
        fallback_members: refined.diagnostics.fallback_members,
        separated_edges: refined.separated.len(),
        connector_edges: refined.diagnostics.connector_edges,
        eps_effective: refined.diagnostics.eps_effective,
        final_max_uncovered_degree: refined.diagnostics.final_max_uncovered_degree,
    };
    let mut paths = refined.paths;
    paths.extend(refined.extra_paths);
    paths.extend(left.paths.iter().cloned());
    let system = PathSystem::new(paths);
    let verdict = verify_separation(g, &system, SepMode::Strong)?;
    if !verdict.ok {
        return Err(DriverError::Unverified {
            violations: verdict.total_violations,
            uncovered: verdict.uncovered.len(),
        });
    }

    let target_max_degree = refine_eps_target * n as f64;
    let remainder_max_degree = {
        let mut deg = vec![0usize; n];
        for &(u, v) in &remainder {
            deg[u as usize] += 1;
            deg[v as usize] += 1;
        }
        deg.into_iter().max().unwrap_or(0)
    };

    let size = system.len();
    let ratio = size as f64 / n as f64;
    let target_coefficient = beta + eps;
    let target_size = target_coefficient * n as f64;

    Ok(RunReport {
        n,
        m: g.m(),
        alpha,
        beta,
        eps,
        seed,
        params: ResolvedParams {
            delta,
            l_max,
            cert_exact: cert.is_proof(),
            eps_separator_requested,
            eps_separator,
            lambda,
            eps_prime,
            refine_eps_target,
            label_count,
        },
        size,
        ratio,
        target_coefficient,
        target_size,
        target_met: (size as f64) <= target_size,
        stages: StageMetrics {
            connectivity: ConnectivityMetrics {
                delta,
                l_max,
                is_proof: cert.is_proof(),
                pairs_checked: cert.pairs_checked,
            },
            separator: SeparatorMetrics {
                t: sep.collection.t,
                covered_edges: sep.collection.covered_edges().len(),
                arc_coverage: sep.diagnostics.coverage,
                structural_ok: sep.report.structural_ok(),
                measured_all_pass: sep.report.all_pass(),
            },
            refine: refine_metrics,
            remainder: RemainderMetrics {
                edges: remainder.len(),
                max_degree: remainder_max_degree,
                target_max_degree,
                within_target: (remainder_max_degree as f64) <= target_max_degree,
            },
            leftover: LeftoverMetrics {
                label_count: left.stats.label_count,
                matchings: left.stats.matchings,
                parts: left.stats.parts,
                paths: left.stats.paths,
                connector_edges: left.stats.connector_edges,
                checks_pass: left.report.all_pass(),
            },
        },
        verdict,
        system,
    })
}

/// Resolve a [`RunConfig`] and run its trials (in parallel under the
/// `parallel` feature; reports come back in trial order either way).
pub fn run(config: &RunConfig) -> Result<Vec<RunReport>, DriverError> {
    if !(config.eps > 0.0 && config.eps < 1.0) {
        return Err(DriverError::BadParameter {
            what: "eps",
            value: config.eps,
        });
    }
    let g = config.resolve_graph()?;
    let trials = config.trials.max(1);
    let results = exec::map_indices(trials, |t| {
        let trial_seed = if t == 0 {
            config.seed
        } else {
            derive_seed(config.seed, t as u64)
        };
        construct_ssp_with(&g, config.eps, trial_seed, &config.overrides)
    });
    results.into_iter().collect()
}

// ---------------------------------------------------------------------------
// Benchmark harness
// ---------------------------------------------------------------------------

/// One benchmark measurement.  `wall_ms` is the only nondeterministic
/// field; the front end zeroes it unless timings were explicitly requested,
/// keeping default outputs byte-reproducible.
#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub family: GraphFamily,
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub ok: bool,
    pub m: usize,
    pub size: usize,
    pub ratio: f64,
    pub separator_t: usize,
    pub refine_paths: usize,
    pub refine_extra_paths: usize,
    pub remainder_edges: usize,
    pub remainder_max_degree: usize,
    pub leftover_paths: usize,
    pub verified: bool,
    pub wall_ms: u64,
    /// Empty on success; sanitized failure message otherwise.
    pub error: String,
}

/// CSV cells must stay quote-free: strip the separators from free text.
fn sanitize_csv(text: &str) -> String {
    text.replace([',', '\n', '\r'], ";")
}

/// Run the benchmark grid: one construction per (family, size, trial),
/// in parallel under the `parallel` feature.  Row seeds are derived from
/// `(seed, family, n, trial)`, so the row set is deterministic and
/// independent of execution order.  Failures become rows, not errors.
pub fn bench(
    families: &[GraphFamily],
    sizes: &[usize],
    trials: usize,
    seed: u64,
) -> Vec<BenchRow> {
    let mut combos: Vec<(GraphFamily, usize, usize)> = Vec::new();
    for &family in families {
        for &n in sizes {
            for trial in 0..trials {
                combos.push((family, n, trial));
            }
        }
    }
    exec::map_indices(combos.len(), |idx| {
        let (family, n, trial) = combos[idx];
        let fam_tag = family
            .name()
            .bytes()
            .fold(0u64, |a, b| a.wrapping_mul(31).wrapping_add(b as u64));
        let row_seed = derive_seed(
            derive_seed(derive_seed(seed, fam_tag), n as u64),
            trial as u64,
        );
        bench_one(family, n, trial, row_seed)
    })
}

fn bench_one(family: GraphFamily, n: usize, trial: usize, seed: u64) -> BenchRow {
    let started = std::time::Instant::now();
    let mut row = BenchRow {
        family,
        n,
        trial,
        seed,
        ok: false,
        m: 0,
        size: 0,
        ratio: 0.0,
        separator_t: 0,
        refine_paths: 0,
        refine_extra_paths: 0,
        remainder_edges: 0,
        remainder_max_degree: 0,
        leftover_paths: 0,
        verified: false,
        wall_ms: 0,
        error: String::new(),
    };
    let g = match generate_family(family, n, derive_seed(seed, 1)) {
        Ok(g) => g,
        Err(e) => {
            row.error = sanitize_csv(&e.to_string());
            row.wall_ms = started.elapsed().as_millis() as u64;
            return row;
        }
    };
    row.m = g.m();
    match construct_ssp(&g, DEFAULT_EPS, seed) {
        Ok(report) => {
            row.ok = true;
            row.size = report.size;
            row.ratio = report.ratio;
            row.separator_t = report.stages.separator.t;
            row.refine_paths = report.stages.refine.paths;
            row.refine_extra_paths = report.stages.refine.extra_paths;
            row.remainder_edges = report.stages.remainder.edges;
            row.remainder_max_degree = report.stages.remainder.max_degree;
            row.leftover_paths = report.stages.leftover.paths;
            row.verified = report.verdict.ok;
        }
        Err(e) => {
            row.error = sanitize_csv(&e.to_string());
        }
    }
    row.wall_ms = started.elapsed().as_millis() as u64;
    row
}

/// Header line of the benchmark CSV.
pub const BENCH_CSV_HEADER: &str = "family,n,trial,seed,ok,m,size,ratio,separator_t,\
refine_paths,refine_extra_paths,remainder_edges,remainder_max_degree,leftover_paths,\
verified,wall_ms,error";

/// Render rows as CSV (header + one line per row, no quoting).
pub fn rows_to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(BENCH_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{:.6},{},{},{},{},{},{},{},{},{}\n",
            r.family,
            r.n,
            r.trial,
            r.seed,
            r.ok,
            r.m,
            r.size,
            r.ratio,
            r.separator_t,
            r.refine_paths,
            r.refine_extra_paths,
            r.remainder_edges,
            r.remainder_max_degree,
            r.leftover_paths,
            r.verified,
            r.wall_ms,
            r.error,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_names_round_trip() {
        for f in GraphFamily::ALL {
            assert_eq!(f.name().parse::<GraphFamily>().unwrap(), f);
        }
        assert!("triangle".parse::<GraphFamily>().is_err());
    }

    #[test]
    fn clique_and_bipartite_shapes() {
        let g = generate_family(GraphFamily::Clique, 10, 0).unwrap();
        assert_eq!((g.n(), g.m()), (10, 45));
        let b = generate_family(GraphFamily::Bipartite, 11, 0).unwrap();
        assert_eq!((b.n(), b.m()), (11, 30));
        assert!(generate_family(GraphFamily::Clique, 4, 0).is_err());
    }

    #[test]
    fn random_regular_is_regular_and_seeded() {
        let g = generate_family(GraphFamily::RandomRegular, 40, 7).unwrap();
        let d = g.degree(0);
        assert_eq!(d, 2 * 10); // 2·⌈40/4⌉
        for v in 0..40 {
            assert_eq!(g.degree(v), d, "vertex {v} degree");
        }
        let g2 = generate_family(GraphFamily::RandomRegular, 40, 7).unwrap();
        assert_eq!(g.edges(), g2.edges());
        let g3 = generate_family(GraphFamily::RandomRegular, 40, 8).unwrap();
        assert_ne!(g.edges(), g3.edges());
    }

    #[test]
    fn expander_fixture_is_a_residue_graph() {
        let g = generate_family(GraphFamily::ExpanderFixture, 60, 0).unwrap();
        // Smallest prime ≥ 60 congruent 1 mod 4 is 61.
        assert_eq!(g.n(), 61);
        for v in 0..61 {
            assert_eq!(g.degree(v), 30, "vertex {v}");
        }
        // Spot-check the residue rule directly.
        let residues: std::collections::HashSet<usize> =
            (1..61).map(|x| (x * x) % 61).collect();
        for &(a, b) in g.edges() {
            assert!(residues.contains(&((b - a) as usize)));
        }
        // Determinism and seed-independence.
        let g2 = generate_family(GraphFamily::ExpanderFixture, 60, 999).unwrap();
        assert_eq!(g.edges(), g2.edges());
    }

    #[test]
    fn ladder_matches_host_shape() {
        let g = Graph::complete(24);
        let cert = resolve_connectivity(&g, &StageOverrides::default(), 5).unwrap();
        assert_eq!((cert.delta, cert.l_max), (0.5, 1));
        let b = Graph::complete_bipartite(12, 12);
        let cert_b = resolve_connectivity(&b, &StageOverrides::default(), 5).unwrap();
        assert_eq!((cert_b.delta, cert_b.l_max), (0.2, 2));
    }

    #[test]
    fn overrides_must_come_in_pairs() {
        let g = Graph::complete(24);
        let half = StageOverrides {
            delta: Some(0.5),
            ..Default::default()
        };
        assert!(matches!(
            resolve_connectivity(&g, &half, 0),
            Err(DriverError::Domain(_))
        ));
    }

    #[test]
    fn construct_on_clique_verifies_and_reproduces() {
        let g = Graph::complete(60);
        let report = construct_ssp(&g, 0.2, 42).unwrap();
        assert!(report.verdict.ok);
        assert_eq!(report.verdict.total_violations, 0);
        assert!(report.verdict.uncovered.is_empty());
        assert!(report.ratio <= 19.0, "ratio {}", report.ratio);
        assert_eq!(report.params.delta, 0.5);
        assert_eq!(report.params.l_max, 1);
        assert!(report.params.cert_exact);
        // Coverage accounting: every host edge is either in the ledger or
        // the remainder.
        assert_eq!(
            report.stages.refine.separated_edges + report.stages.remainder.edges,
            report.m
        );
        let again = construct_ssp(&g, 0.2, 42).unwrap();
        assert_eq!(report.to_json(), again.to_json());
        let other = construct_ssp(&g, 0.2, 43).unwrap();
        assert!(other.verdict.ok);
    }

    #[test]
    fn construct_on_balanced_bipartite_verifies() {
        let g = Graph::complete_bipartite(30, 30);
        let report = construct_ssp(&g, 0.2, 7).unwrap();
        assert!(report.verdict.ok);
        assert_eq!((report.params.delta, report.params.l_max), (0.2, 2));
        // Desk-scale hosts with α < 1 need the separator accuracy inflated
        // above the requested split; the report records both.
        assert!(report.params.eps_separator >= report.params.eps_separator_requested);
        // The tight part-size cap δn/4L makes small bipartite hosts
        // expensive; the size is honest but far from the asymptotic target.
        assert!(!report.target_met);
        assert_eq!(
            report.size,
            report.stages.refine.paths
                + report.stages.refine.extra_paths
                + report.stages.leftover.paths
        );
    }

    #[test]
    fn label_count_override_is_respected() {
        let g = Graph::complete(40);
        let overrides = StageOverrides {
            label_count: Some(777),
            ..Default::default()
        };
        let report = construct_ssp_with(&g, 0.2, 3, &overrides).unwrap();
        assert_eq!(report.params.label_count, 777);
        assert_eq!(report.stages.leftover.label_count, 777);
    }

    #[test]
    fn run_config_resolves_files_and_trials() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("host.txt");
        std::fs::write(&path, Graph::complete(40).to_edge_list()).unwrap();
        let mut config = RunConfig::new(
            GraphSource::File(path.to_string_lossy().into_owned()),
            0.2,
            11,
        );
        config.trials = 2;
        let reports = run(&config).unwrap();
        assert_eq!(reports.len(), 2);
        assert!(reports.iter().all(|r| r.verdict.ok));
        // Trial 0 must agree with a direct construct call at the same seed.
        let direct = construct_ssp(&Graph::complete(40), 0.2, 11).unwrap();
        assert_eq!(reports[0].to_json(), direct.to_json());
        // Distinct trials use distinct seeds.
        assert_ne!(reports[0].seed, reports[1].seed);
    }

    #[test]
    fn bench_grid_shape_and_determinism() {
        let rows = bench(&[GraphFamily::Clique], &[40], 2, 9);
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.ok && r.verified));
        let rows2 = bench(&[GraphFamily::Clique], &[40], 2, 9);
        let strip = |rs: &[BenchRow]| {
            rs.iter()
                .map(|r| {
                    let mut r = r.clone();
                    r.wall_ms = 0;
                    r
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(rows_to_csv(&strip(&rows)), rows_to_csv(&strip(&rows2)));
        assert!(rows_to_csv(&rows).starts_with(BENCH_CSV_HEADER));
    }

    #[test]
    fn empty_bench_is_header_only() {
        let rows = bench(&[], &[60, 120], 3, 1);
        assert!(rows.is_empty());
        assert_eq!(rows_to_csv(&rows), format!("{BENCH_CSV_HEADER}\n"));
    }

    #[test]
    fn bench_records_failures_as_rows() {
        // n = 7 is below the generator floor: the row must record the
        // failure instead of aborting the grid.
        let rows = bench(&[GraphFamily::Clique], &[7], 1, 3);
        assert_eq!(rows.len(), 1);
        assert!(!rows[0].ok);
        assert!(!rows[0].error.is_empty());
        assert!(!rows[0].error.contains(','));
    }

    #[test]
    fn csv_sanitizer_strips_separators() {
        assert_eq!(sanitize_csv("a,b\nc"), "a;b;c");
    }
}
