//! Command-line front end: lower bounds, construction, verification,
//! the exact brute-force solver, the benchmark grid, and robust-
//! connectivity certification.
//!
//! Every subcommand is deterministic for fixed flags and seed: reruns
//! produce byte-identical stdout and files (benchmark wall times are
//! zeroed unless `--timings` opts in).

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use seppath::connectivity::{certify_robust_connectivity, CertMode};
use seppath::driver::{self, GraphFamily, GraphSource, RunConfig};
use seppath::graph::{
    density_coefficient, lower_bound_clique, lower_bound_general, verify_separation, Graph,
    PathSystem, SepMode,
};
use seppath::oracle::{exact_ssp, OracleOutcome, SearchBudget};

#[derive(Parser)]
#[command(
    name = "seppath",
    about = "Construct and verify strong-separating path systems on dense regular graphs",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the general and clique lower bounds on the minimum system size.
    Bounds(BoundsArgs),
    /// Build a strong-separating path system and write it to a file.
    Construct(ConstructArgs),
    /// Check a path system against a host graph; exit 0 iff it separates.
    Verify(VerifyArgs),
    /// Exact minimum system size by exhaustive search (tiny graphs only).
    Oracle(OracleArgs),
    /// Run the construction grid and write one CSV row per instance.
    Bench(BenchArgs),
    /// Certify that a graph is (delta, L)-robustly-connected.
    Certify(CertifyArgs),
}

#[derive(Args)]
struct BoundsArgs {
    /// Number of vertices.
    #[arg(long)]
    n: u64,
    /// Regularity coefficient (average degree / n), in (0, 1].
    #[arg(long)]
    alpha: f64,
    /// Accuracy term added to the coefficient.
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
}

#[derive(Args)]
struct ConstructArgs {
    /// Host graph as an edge-list file (one `u v` pair per line).
    #[arg(long, conflicts_with = "family")]
    graph: Option<PathBuf>,
    /// Generate the host instead: clique or bipartite (also accepts
    /// random-regular and expander-fixture).
    #[arg(long, requires = "n")]
    family: Option<GraphFamily>,
    /// Vertex count for --family.
    #[arg(long)]
    n: Option<usize>,
    /// Accuracy knob in (0, 1).
    #[arg(long, default_value_t = driver::DEFAULT_EPS)]
    eps: f64,
    /// Run seed; fixed seed and flags give byte-identical outputs.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to write the resulting path system (JSON).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Host graph edge-list file.
    #[arg(long)]
    graph: PathBuf,
    /// Path-system JSON file (as written by `construct --out`).
    #[arg(long)]
    paths: PathBuf,
    /// weak: signatures pairwise distinct; strong: pairwise incomparable
    /// and every edge covered.
    #[arg(long)]
    mode: SepMode,
}

#[derive(Args)]
struct OracleArgs {
    /// Host graph edge-list file (at most 12 edges).
    #[arg(long)]
    graph: PathBuf,
    /// Wall-clock budget in seconds.
    #[arg(long, default_value_t = 60)]
    budget: u64,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated families:
    /// clique,bipartite,random-regular,expander-fixture.
    #[arg(long)]
    family: String,
    /// Comma-separated vertex counts.
    #[arg(long)]
    sizes: String,
    /// Constructions per (family, size).
    #[arg(long, default_value_t = 3)]
    trials: usize,
    /// Grid seed; row seeds derive from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path.
    #[arg(long)]
    csv: PathBuf,
    /// Record real wall-clock times (makes the CSV nondeterministic).
    #[arg(long, default_value_t = false)]
    timings: bool,
}

#[derive(Args)]
struct CertifyArgs {
    /// Host graph edge-list file.
    #[arg(long)]
    graph: PathBuf,
    /// Robustness density: every pair needs ≥ delta·n^ell paths with
    /// exactly ell ≤ L inner vertices, for some ell.
    #[arg(long)]
    delta: f64,
    /// Maximum inner-vertex count.
    #[arg(long = "L")]
    l_max: u32,
    /// Check only this many sampled pairs instead of all (the certificate
    /// is then an empirical report, not a proof).
    #[arg(long)]
    sampled: Option<usize>,
}

fn load_graph(path: &PathBuf) -> Result<Graph> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading graph file {}", path.display()))?;
    Ok(Graph::parse_edge_list(&text)
        .with_context(|| format!("parsing graph file {}", path.display()))?)
}

fn cmd_bounds(args: &BoundsArgs) -> Result<()> {
    let general = lower_bound_general(args.n, args.alpha, args.eps)?;
    let clique = lower_bound_clique(args.n)?;
    println!("n: {}", args.n);
    println!("alpha: {}", args.alpha);
    println!("eps: {}", args.eps);
    println!("density_coefficient: {}", density_coefficient(args.alpha));
    println!("general_lower_bound: {general}");
    println!("clique_lower_bound: {clique}");
    Ok(())
}

fn cmd_construct(args: &ConstructArgs) -> Result<()> {
    let source = match (&args.graph, args.family) {
        (Some(path), None) => GraphSource::File(path.to_string_lossy().into_owned()),
        (None, Some(family)) => GraphSource::Family {
            family,
            n: args.n.context("--family requires --n")?,
        },
        (None, None) => bail!("give either --graph FILE or --family NAME with --n N"),
        (Some(_), Some(_)) => unreachable!("clap rejects --graph with --family"),
    };
    let config = RunConfig::new(source, args.eps, args.seed);
    let g = config.resolve_graph()?;
    let report = driver::construct_ssp(&g, args.eps, args.seed)?;
    fs::write(&args.out, report.system.to_json(g.n()))
        .with_context(|| format!("writing path system to {}", args.out.display()))?;
    println!("{}", report.to_json());
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<ExitCode> {
    let g = load_graph(&args.graph)?;
    let text = fs::read_to_string(&args.paths)
        .with_context(|| format!("reading path system {}", args.paths.display()))?;
    let (n, system) = PathSystem::from_json(&text)
        .with_context(|| format!("parsing path system {}", args.paths.display()))?;
    if n != g.n() {
        bail!(
            "path system was written for n = {n}, but the graph has n = {}",
            g.n()
        );
    }
    let report = verify_separation(&g, &system, args.mode)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("report serialization cannot fail")
    );
    Ok(if report.ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn cmd_oracle(args: &OracleArgs) -> Result<()> {
    let g = load_graph(&args.graph)?;
    let outcome = exact_ssp(&g, &SearchBudget::from_secs(args.budget))?;
    match outcome {
        OracleOutcome::Exact { value, witness } => {
            println!("exact_ssp: {value}");
            println!("{}", witness.to_json(g.n()));
        }
        OracleOutcome::Inconclusive {
            proved_lower,
            known_upper,
            reason,
            ..
        } => {
            println!("inconclusive: optimum in [{proved_lower}, {known_upper}]");
            println!("reason: {reason}");
        }
    }
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let mut families = Vec::new();
    if !args.family.trim().is_empty() {
        for name in args.family.split(',') {
            families.push(
                name.trim()
                    .parse::<GraphFamily>()
                    .map_err(anyhow::Error::msg)?,
            );
        }
    }
    let mut sizes = Vec::new();
    if !args.sizes.trim().is_empty() {
        for s in args.sizes.split(',') {
            sizes.push(
                s.trim()
                    .parse::<usize>()
                    .with_context(|| format!("bad size {:?}", s.trim()))?,
            );
        }
    }
    let mut rows = driver::bench(&families, &sizes, args.trials, args.seed);
    if !args.timings {
        for row in &mut rows {
            row.wall_ms = 0;
        }
    }
    let csv = driver::rows_to_csv(&rows);
    fs::write(&args.csv, &csv)
        .with_context(|| format!("writing CSV to {}", args.csv.display()))?;
    println!("wrote {} rows to {}", rows.len(), args.csv.display());
    Ok(())
}

fn cmd_certify(args: &CertifyArgs) -> Result<()> {
    let g = load_graph(&args.graph)?;
    let mode = match args.sampled {
        Some(pairs) => CertMode::Sampled { pairs },
        None => CertMode::Exact,
    };
    // No user-visible randomness: sampled pair choice is fixed so reruns
    // of the same command reproduce the certificate byte for byte.
    let cert = certify_robust_connectivity(&g, args.delta, args.l_max, mode, 0)?;
    println!("{}", cert.to_json());
    Ok(())
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Bounds(args) => cmd_bounds(args).map(|_| ExitCode::SUCCESS),
        Command::Construct(args) => cmd_construct(args).map(|_| ExitCode::SUCCESS),
        Command::Verify(args) => cmd_verify(args),
        Command::Oracle(args) => cmd_oracle(args).map(|_| ExitCode::SUCCESS),
        Command::Bench(args) => cmd_bench(args).map(|_| ExitCode::SUCCESS),
        Command::Certify(args) => cmd_certify(args).map(|_| ExitCode::SUCCESS),
    }
}
