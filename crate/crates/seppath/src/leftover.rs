//! Leftover stage: cover a sparse remainder graph with few paths so that
//! every remainder edge ends up separated from every other host edge.
//!
//! Pipeline: (1) give every remainder edge a uniform 2-subset of labels and
//! repair collisions by local resampling until the label classes `M_i =
//! {e : i ∈ φ(e)}` are matchings that pairwise share at most one edge;
//! (2) split each matching into parts small enough that connector searches
//! stay feasible; (3) weave each part `M′ = {x₁y₁, …, x_ℓy_ℓ}` into TWO
//! paths that both traverse all of `M′` but share no other edge, by
//! routing one path `x₁y₁ → y₂x₂ → x₃y₃ → …` and the other
//! `y₁x₁ → x₂y₂ → y₃x₃ → …` through internally disjoint connectors.
//!
//! Each remainder edge `e` then lies in exactly four produced paths (two
//! per label), whose edge sets intersect in exactly `{e}` — so for every
//! other edge `f`, one of the four contains `e` and misses `f`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::base::PropertyCheck;
use crate::graph::{norm_edge, Edge, Graph, Path};
use crate::util::{rng_from_seed, BitSet};
use rand::Rng;

/// Cap on label-correction events before giving up.
pub const RESAMPLE_CAP: usize = 1_000_000;
/// Deterministic node-visit budget per connector search.
const CONNECTOR_BUDGET: usize = 2_000_000;

#[derive(Debug, Error)]
pub enum LeftoverError {
    #[error("remainder edge list invalid: {0}")]
    BadRemainder(String),
    #[error("bad parameter {what}: {value}")]
    BadParameter { what: &'static str, value: f64 },
    #[error("label resampling did not stabilise within {0} corrections")]
    ResampleCap(usize),
    #[error("label family invalid: {0}")]
    BadFamily(String),
    #[error(
        "no connector path with <= {l_max} inner vertices from {from} to {to} \
         avoiding {forbidden} forbidden vertices"
    )]
    NoConnector {
        from: u32,
        to: u32,
        l_max: u32,
        forbidden: usize,
    },
}

fn validate_remainder(g: &Graph, remainder: &[Edge]) -> Result<Vec<Edge>, LeftoverError> {
    let mut edges: Vec<Edge> = Vec::with_capacity(remainder.len());
    for &(u, v) in remainder {
        if u == v || (u as usize) >= g.n() || (v as usize) >= g.n() {
            return Err(LeftoverError::BadRemainder(format!(
                "edge ({u},{v}) out of range for n={}",
                g.n()
            )));
        }
        if !g.has_edge(u, v) {
            return Err(LeftoverError::BadRemainder(format!(
                "edge ({u},{v}) is not a host edge"
            )));
        }
        edges.push(norm_edge(u, v));
    }
    edges.sort_unstable();
    let before = edges.len();
    edges.dedup();
    if edges.len() != before {
        return Err(LeftoverError::BadRemainder(
            "duplicate edges in remainder".into(),
        ));
    }
    Ok(edges)
}

fn max_degree_of(n: usize, edges: &[Edge]) -> usize {
    let mut deg = vec![0usize; n];
    for &(u, v) in edges {
        deg[u as usize] += 1;
        deg[v as usize] += 1;
    }
    deg.into_iter().max().unwrap_or(0)
}

/// Asymptotic label count: `⌈256·√(Δn)⌉ + 1` labels (a 2-subset is drawn
/// from that many).  Generous — nearly every edge gets a private label
/// pair, so the family is large but collision repair is instant.
pub fn asymptotic_label_count(n: usize, remainder: &[Edge]) -> usize {
    let delta = max_degree_of(n, remainder);
    (256.0 * ((delta * n) as f64).sqrt()).ceil() as usize + 1
}

/// Practical label count for the full-pipeline driver:
/// `max(4Δ+4, ⌈4√|E|⌉, 8) + 1` labels.  Keeps the produced path count
/// proportional to `√|E|`-ish instead of `|E|`, while staying far enough
/// above the local constraint density that resampling converges fast.
pub fn practical_label_count(n: usize, remainder: &[Edge]) -> usize {
    let delta = max_degree_of(n, remainder);
    let m = remainder.len();
    (4 * delta + 4)
        .max((4.0 * (m as f64).sqrt()).ceil() as usize)
        .max(8)
        + 1
}

// ---------------------------------------------------------------------------
// Label assignment by local resampling
// ---------------------------------------------------------------------------

/// Two label classes collide when (a) two edges draw the same label PAIR
/// (their classes would share two edges), or (b) two edges sharing a vertex
/// draw overlapping pairs (a class would not be a matching).
fn pair_violates(edges: &[Edge], phi: &[(u32, u32)], a: usize, b: usize) -> bool {
    if phi[a] == phi[b] {
        return true;
    }
    let (u1, v1) = edges[a];
    let (u2, v2) = edges[b];
    let adjacent = u1 == u2 || u1 == v2 || v1 == u2 || v1 == v2;
    if !adjacent {
        return false;
    }
    let (p, q) = phi[a];
    let (r, s) = phi[b];
    p == r || p == s || q == r || q == s
}

fn sample_pair<R: Rng>(rng: &mut R, label_count: usize) -> (u32, u32) {
    let a = rng.random_range(0..label_count as u32);
    let mut b = rng.random_range(0..label_count as u32 - 1);
    if b >= a {
        b += 1;
    }
    (a.min(b), a.max(b))
}

/// Resample the label pair of edge `e`, preferring pairs that conflict
/// with nothing right now (labels unused by adjacent edges, pair value
/// unused globally).  Random draws first; if none of the bounded tries
/// lands on a clean pair, fall back to the lexicographically smallest
/// clean pair, and only then to an unconstrained draw.  Clean repairs
/// strictly shrink the violation set, which is what makes the repair loop
/// terminate even when the label count is only a small multiple of the
/// remainder's maximum degree.
#[allow(clippy::too_many_arguments)]
fn sample_repair_pair<R: Rng>(
    rng: &mut R,
    label_count: usize,
    e: usize,
    remainder: &[Edge],
    phi: &[(u32, u32)],
    bucket: &HashMap<(u32, u32), Vec<usize>>,
    incident: &[Vec<usize>],
) -> (u32, u32) {
    let mut banned = vec![false; label_count];
    let (u, v) = remainder[e];
    for &j in incident[u as usize].iter().chain(incident[v as usize].iter()) {
        if j != e {
            banned[phi[j].0 as usize] = true;
            banned[phi[j].1 as usize] = true;
        }
    }
    for _ in 0..20 {
        let p = sample_pair(rng, label_count);
        if !banned[p.0 as usize] && !banned[p.1 as usize] && !bucket.contains_key(&p) {
            return p;
        }
    }
    let free: Vec<u32> = (0..label_count as u32).filter(|&l| !banned[l as usize]).collect();
    for (i, &a) in free.iter().enumerate() {
        for &b in &free[i + 1..] {
            if !bucket.contains_key(&(a, b)) {
                return (a, b);
            }
        }
    }
    sample_pair(rng, label_count)
}

/// Label assignment with the asymptotic label count
/// ([`asymptotic_label_count`]): draw uniform 2-subsets, then repair violated
/// constraints lowest-first by resampling.  Deterministic per seed.
pub fn assign_labels_lll(
    n: usize,
    remainder: &[Edge],
    seed: u64,
) -> Result<Vec<(u32, u32)>, LeftoverError> {
    assign_labels_with_count(n, remainder, asymptotic_label_count(n, remainder), seed)
}

/// Assign each remainder edge a 2-subset of `{0, …, label_count−1}` such
/// that every label class is a matching and classes pairwise share at most
/// one edge.  Violated constraints are repaired smallest-first by
/// resampling both participating edges; errors out after [`RESAMPLE_CAP`]
/// corrections.  Fully deterministic for a fixed seed.
pub fn assign_labels_with_count(
    n: usize,
    remainder: &[Edge],
    label_count: usize,
    seed: u64,
) -> Result<Vec<(u32, u32)>, LeftoverError> {
    if label_count < 4 {
        return Err(LeftoverError::BadParameter {
            what: "label_count",
            value: label_count as f64,
        });
    }
    let m = remainder.len();
    if m == 0 {
        return Ok(Vec::new());
    }
    let mut rng = rng_from_seed(seed);
    let mut phi: Vec<(u32, u32)> = (0..m).map(|_| sample_pair(&mut rng, label_count)).collect();

    // incident edge indices per vertex
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, &(u, v)) in remainder.iter().enumerate() {
        incident[u as usize].push(i);
        incident[v as usize].push(i);
    }
    // edges grouped by exact label pair (for same-pair detection)
    let mut bucket: HashMap<(u32, u32), Vec<usize>> = HashMap::new();
    for (i, &p) in phi.iter().enumerate() {
        bucket.entry(p).or_default().push(i);
    }

    // all constraint partners of edge i: same-pair bucket plus incident edges
    let partners = |phi: &[(u32, u32)],
                    bucket: &HashMap<(u32, u32), Vec<usize>>,
                    i: usize|
     -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        if let Some(b) = bucket.get(&phi[i]) {
            out.extend(b.iter().copied().filter(|&j| j != i));
        }
        let (u, v) = remainder[i];
        for &j in incident[u as usize].iter().chain(incident[v as usize].iter()) {
            if j != i {
                out.push(j);
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    };

    let mut violated: BTreeSet<(usize, usize)> = BTreeSet::new();
    for i in 0..m {
        for j in partners(&phi, &bucket, i) {
            if j > i && pair_violates(remainder, &phi, i, j) {
                violated.insert((i, j));
            }
        }
    }

    let mut corrections = 0usize;
    while let Some(&(a, b)) = violated.iter().next() {
        if corrections >= RESAMPLE_CAP {
            return Err(LeftoverError::ResampleCap(RESAMPLE_CAP));
        }
        corrections += 1;
        for &e in &[a, b] {
            // drop stale constraints involving e
            for j in partners(&phi, &bucket, e) {
                violated.remove(&(e.min(j), e.max(j)));
            }
            let old = phi[e];
            let vecref = bucket.get_mut(&old).unwrap();
            vecref.retain(|&x| x != e);
            if vecref.is_empty() {
                bucket.remove(&old);
            }
            phi[e] = sample_repair_pair(&mut rng, label_count, e, remainder, &phi, &bucket, &incident);
            bucket.entry(phi[e]).or_default().push(e);
        }
        for &e in &[a, b] {
            for j in partners(&phi, &bucket, e) {
                if pair_violates(remainder, &phi, e, j) {
                    violated.insert((e.min(j), e.max(j)));
                }
            }
        }
    }
    Ok(phi)
}

// ---------------------------------------------------------------------------
// Label classes → verified matchings
// ---------------------------------------------------------------------------

/// Matchings of the remainder, keyed by their original label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchingFamily {
    pub n: usize,
    /// `(label, edges)` with nonempty edge lists, ascending labels.
    pub matchings: Vec<(u32, Vec<Edge>)>,
}

impl MatchingFamily {
    pub fn t(&self) -> usize {
        self.matchings.len()
    }
}

/// Group edges by label and independently re-verify the family contract:
/// every edge in exactly two classes, every class a matching, classes
/// pairwise sharing at most one edge.
pub fn labels_to_matchings(
    n: usize,
    remainder: &[Edge],
    phi: &[(u32, u32)],
) -> Result<MatchingFamily, LeftoverError> {
    if phi.len() != remainder.len() {
        return Err(LeftoverError::BadFamily(format!(
            "{} labels for {} edges",
            phi.len(),
            remainder.len()
        )));
    }
    let mut by_label: BTreeMap<u32, Vec<Edge>> = BTreeMap::new();
    let mut seen_pairs: HashMap<(u32, u32), Edge> = HashMap::new();
    for (i, &(a, b)) in phi.iter().enumerate() {
        if a == b {
            return Err(LeftoverError::BadFamily(format!(
                "edge {:?} has a repeated label {a}",
                remainder[i]
            )));
        }
        let key = (a.min(b), a.max(b));
        if let Some(prev) = seen_pairs.insert(key, remainder[i]) {
            return Err(LeftoverError::BadFamily(format!(
                "edges {:?} and {:?} share both labels {key:?}",
                prev, remainder[i]
            )));
        }
        by_label.entry(a).or_default().push(remainder[i]);
        by_label.entry(b).or_default().push(remainder[i]);
    }
    for (label, edges) in &by_label {
        let mut seen = vec![false; n];
        for &(u, v) in edges {
            if seen[u as usize] || seen[v as usize] {
                return Err(LeftoverError::BadFamily(format!(
                    "label {label} class is not a matching at edge ({u},{v})"
                )));
            }
            seen[u as usize] = true;
            seen[v as usize] = true;
        }
    }
    let mut matchings: Vec<(u32, Vec<Edge>)> = by_label.into_iter().collect();
    for (_, edges) in &mut matchings {
        edges.sort_unstable();
    }
    Ok(MatchingFamily { n, matchings })
}

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

/// A contiguous slice of one matching, small enough to weave.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchingPart {
    /// Original label of the matching this part came from.
    pub label: u32,
    /// Index of this part within its matching.
    pub part: u32,
    pub edges: Vec<Edge>,
}

/// Split every matching into parts of fewer than `δn/(4L)` edges each
/// (edge order, canonical part numbering).
pub fn split_matchings(
    fam: &MatchingFamily,
    delta: f64,
    l_max: u32,
) -> Result<Vec<MatchingPart>, LeftoverError> {
    if !(delta > 0.0 && delta <= 1.0) || l_max == 0 {
        return Err(LeftoverError::BadParameter {
            what: "delta/l_max",
            value: delta,
        });
    }
    let cap_f = delta * fam.n as f64 / (4.0 * l_max as f64);
    let cap = (cap_f - 1e-9).floor() as usize;
    if cap == 0 {
        return Err(LeftoverError::BadParameter {
            what: "part_size_cap",
            value: cap_f,
        });
    }
    let mut parts = Vec::new();
    for (label, edges) in &fam.matchings {
        for (k, chunk) in edges.chunks(cap).enumerate() {
            parts.push(MatchingPart {
                label: *label,
                part: k as u32,
                edges: chunk.to_vec(),
            });
        }
    }
    Ok(parts)
}

// ---------------------------------------------------------------------------
// Weaving one part into a pair of paths
// ---------------------------------------------------------------------------

/// Shortest-first, lexicographically smallest `a`–`b` path with at most
/// `l_max` inner vertices, all outside `forbidden`.
fn connector_path(
    g: &Graph,
    a: u32,
    b: u32,
    l_max: u32,
    forbidden: &BitSet,
) -> Option<Vec<u32>> {
    if g.has_edge(a, b) {
        return Some(vec![a, b]);
    }
    let mut budget = CONNECTOR_BUDGET;
    for ell in 1..=l_max as usize {
        let mut inner = Vec::with_capacity(ell);
        if connector_dfs(g, a, b, ell, forbidden, &mut inner, &mut budget) {
            let mut path = Vec::with_capacity(ell + 2);
            path.push(a);
            path.extend_from_slice(&inner);
            path.push(b);
            return Some(path);
        }
    }
    None
}

fn connector_dfs(
    g: &Graph,
    cur: u32,
    b: u32,
    remaining: usize,
    forbidden: &BitSet,
    inner: &mut Vec<u32>,
    budget: &mut usize,
) -> bool {
    if remaining == 0 {
        return g.has_edge(cur, b);
    }
    for &v in g.neighbors(cur) {
        if *budget == 0 {
            return false;
        }
        *budget -= 1;
        if v == b || forbidden.get(v as usize) || inner.contains(&v) {
            continue;
        }
        inner.push(v);
        if connector_dfs(g, v, b, remaining - 1, forbidden, inner, budget) {
            return true;
        }
        inner.pop();
    }
    false
}

/// Weave a matching part `{x₁y₁, …, x_ℓy_ℓ}` into two paths `P` and `Q`
/// that both contain every part edge and share nothing else:
/// `P = x₁y₁ → y₂x₂ → x₃y₃ → …` and `Q = y₁x₁ → x₂y₂ → …`, joined by
/// connectors with at most `l_max` inner vertices, each internally
/// disjoint from the part's vertices and all previous connectors.  The
/// connector between consecutive `y`s goes into `P` exactly when the one
/// between the matching `x`s goes into `Q`, so the two paths share no
/// connector, and `E(P) ∩ E(Q)` equals the part exactly (verified).
/// Requires room to route: `2|part|(L+1) < δn`.
pub fn cover_matching_with_path_pair(
    g: &Graph,
    part: &[Edge],
    delta: f64,
    l_max: u32,
) -> Result<(Path, Path), LeftoverError> {
    if part.is_empty() {
        return Err(LeftoverError::BadFamily("empty part".into()));
    }
    if 2.0 * part.len() as f64 * (l_max as f64 + 1.0) >= delta * g.n() as f64 {
        return Err(LeftoverError::BadParameter {
            what: "part_too_large_for_host",
            value: part.len() as f64,
        });
    }
    let ell = part.len();
    let xs: Vec<u32> = part.iter().map(|e| e.0).collect();
    let ys: Vec<u32> = part.iter().map(|e| e.1).collect();
    let mut forbidden = BitSet::new(g.n());
    for &v in xs.iter().chain(ys.iter()) {
        if forbidden.get(v as usize) {
            return Err(LeftoverError::BadFamily(format!(
                "part is not a matching: vertex {v} repeats"
            )));
        }
        forbidden.set(v as usize);
    }
    // connectors[k] = (x_k → x_{k+1} path, y_k → y_{k+1} path)
    let mut x_conn: Vec<Vec<u32>> = Vec::with_capacity(ell.saturating_sub(1));
    let mut y_conn: Vec<Vec<u32>> = Vec::with_capacity(ell.saturating_sub(1));
    for k in 0..ell - 1 {
        for (from, to, store) in [
            (xs[k], xs[k + 1], &mut x_conn),
            (ys[k], ys[k + 1], &mut y_conn),
        ] {
            let p = connector_path(g, from, to, l_max, &forbidden).ok_or(
                LeftoverError::NoConnector {
                    from,
                    to,
                    l_max,
                    forbidden: forbidden.count(),
                },
            )?;
            for &v in &p[1..p.len() - 1] {
                forbidden.set(v as usize);
            }
            store.push(p);
        }
    }
    // P: x₁y₁, y-connector, y₂x₂, x-connector, x₃y₃, …
    let mut p = vec![xs[0], ys[0]];
    // Q: y₁x₁, x-connector, x₂y₂, y-connector, y₃x₃, …
    let mut q = vec![ys[0], xs[0]];
    for k in 0..ell - 1 {
        if k % 2 == 0 {
            p.extend_from_slice(&y_conn[k][1..y_conn[k].len() - 1]);
            p.push(ys[k + 1]);
            p.push(xs[k + 1]);
            q.extend_from_slice(&x_conn[k][1..x_conn[k].len() - 1]);
            q.push(xs[k + 1]);
            q.push(ys[k + 1]);
        } else {
            p.extend_from_slice(&x_conn[k][1..x_conn[k].len() - 1]);
            p.push(xs[k + 1]);
            p.push(ys[k + 1]);
            q.extend_from_slice(&y_conn[k][1..y_conn[k].len() - 1]);
            q.push(ys[k + 1]);
            q.push(xs[k + 1]);
        }
    }
    let p = Path::new(p);
    let q = Path::new(q);
    // exactness: the two edge sets meet in precisely the part
    let pe: BTreeSet<Edge> = p.edges().collect();
    let qe: BTreeSet<Edge> = q.edges().collect();
    let inter: BTreeSet<Edge> = pe.intersection(&qe).copied().collect();
    let want: BTreeSet<Edge> = part.iter().copied().collect();
    if inter != want {
        return Err(LeftoverError::BadFamily(format!(
            "path pair shares {} edges, expected the {} part edges",
            inter.len(),
            want.len()
        )));
    }
    Ok((p, q))
}

// ---------------------------------------------------------------------------
// Full stage
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LeftoverReport {
    pub checks: Vec<PropertyCheck>,
}

impl LeftoverReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
    pub fn summary(&self) -> String {
        self.checks
            .iter()
            .map(|c| {
                format!(
                    "{} {}: measured {:.4} vs allowed {:.4} — {}",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.measured,
                    c.allowed,
                    c.detail
                )
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LeftoverStats {
    pub remainder_edges: usize,
    pub remainder_max_degree: usize,
    pub label_count: usize,
    pub matchings: usize,
    pub parts: usize,
    pub paths: usize,
    pub connector_edges: usize,
}

pub struct LeftoverOutcome {
    /// `2r` paths: the pair of part `k` sits at indices `2k` and `2k+1`.
    pub paths: Vec<Path>,
    pub parts: Vec<MatchingPart>,
    /// Per remainder edge, the four path indices whose edge sets intersect
    /// in exactly that edge.
    pub quadruples: BTreeMap<Edge, [usize; 4]>,
    pub report: LeftoverReport,
    pub stats: LeftoverStats,
}

/// [`last_few_paths_with_labels`] with the asymptotic label count.
pub fn last_few_paths(
    g: &Graph,
    remainder: &[Edge],
    delta: f64,
    l_max: u32,
    seed: u64,
) -> Result<LeftoverOutcome, LeftoverError> {
    let edges = validate_remainder(g, remainder)?;
    let lc = asymptotic_label_count(g.n(), &edges);
    last_few_paths_with_labels(g, remainder, delta, l_max, lc, seed)
}

/// Cover `remainder` (a sparse subgraph of the host `g`) with paths such
/// that every remainder edge is separated from every other host edge by
/// its quadruple of paths.  `delta`/`l_max` must describe robust
/// connectivity the HOST actually has, or connector searches may fail.
/// `label_count` comes from [`asymptotic_label_count`] or
/// [`practical_label_count`].
pub fn last_few_paths_with_labels(
    g: &Graph,
    remainder: &[Edge],
    delta: f64,
    l_max: u32,
    label_count: usize,
    seed: u64,
) -> Result<LeftoverOutcome, LeftoverError> {
    let edges = validate_remainder(g, remainder)?;
    let n = g.n();
    let max_deg = max_degree_of(n, &edges);
    if edges.is_empty() {
        return Ok(LeftoverOutcome {
            paths: Vec::new(),
            parts: Vec::new(),
            quadruples: BTreeMap::new(),
            report: LeftoverReport { checks: Vec::new() },
            stats: LeftoverStats {
                remainder_edges: 0,
                remainder_max_degree: 0,
                label_count,
                matchings: 0,
                parts: 0,
                paths: 0,
                connector_edges: 0,
            },
        });
    }

    let phi = assign_labels_with_count(n, &edges, label_count, seed)?;
    let fam = labels_to_matchings(n, &edges, &phi)?;
    let t = fam.t();
    let parts = split_matchings(&fam, delta, l_max)?;
    let r = parts.len();

    // weave every part; record which pair covers which (label, part)
    let mut paths: Vec<Path> = Vec::with_capacity(2 * r);
    let mut pair_of: HashMap<(u32, u32), (usize, usize)> = HashMap::new();
    for part in &parts {
        let (p, q) = cover_matching_with_path_pair(g, &part.edges, delta, l_max)?;
        let ip = paths.len();
        paths.push(p);
        paths.push(q);
        pair_of.insert((part.label, part.part), (ip, ip + 1));
    }

    // part lookup per (label, edge)
    let mut part_of: HashMap<(u32, Edge), (u32, u32)> = HashMap::new();
    for part in &parts {
        for &e in &part.edges {
            part_of.insert((part.label, e), (part.label, part.part));
        }
    }
    // quadruple per edge + exactness verification
    let mut quadruples: BTreeMap<Edge, [usize; 4]> = BTreeMap::new();
    let mut quad_exact = true;
    let mut quad_detail = String::from("every quadruple intersects in exactly its edge");
    let path_edge_sets: Vec<BTreeSet<Edge>> = paths.iter().map(|p| p.edges().collect()).collect();
    for (i, &e) in edges.iter().enumerate() {
        let (a, b) = phi[i];
        let pa = pair_of[&part_of[&(a, e)]];
        let pb = pair_of[&part_of[&(b, e)]];
        let quad = [pa.0, pa.1, pb.0, pb.1];
        let mut inter = path_edge_sets[quad[0]].clone();
        for &k in &quad[1..] {
            inter = inter.intersection(&path_edge_sets[k]).copied().collect();
        }
        if inter.len() != 1 || !inter.contains(&e) {
            quad_exact = false;
            quad_detail = format!(
                "edge {e:?}: quadruple intersection has {} edges",
                inter.len()
            );
        }
        quadruples.insert(e, quad);
    }

    // each remainder edge occurs in exactly 4 paths; the rest are connectors
    let connector_edges: usize =
        paths.iter().map(|p| p.len_edges()).sum::<usize>() - 4 * edges.len();
    let t_bound = 300.0 * ((max_deg * n) as f64).sqrt();
    let r_bound = 600.0 * l_max as f64 / delta * ((max_deg * n) as f64).sqrt();
    let cap_f = delta * n as f64 / (4.0 * l_max as f64);
    let max_part = parts.iter().map(|p| p.edges.len()).max().unwrap_or(0);
    let path_ok = paths.iter().all(|p| p.check(g).is_ok());

    let checks = vec![
        PropertyCheck {
            name: "label-family".into(),
            pass: true,
            measured: t as f64,
            allowed: f64::INFINITY,
            detail: "each edge in exactly 2 classes; classes are matchings; pairwise overlap <= 1"
                .into(),
        },
        PropertyCheck {
            name: "matching-count".into(),
            pass: (t as f64) <= t_bound,
            measured: t as f64,
            allowed: t_bound,
            detail: format!("t = {t} nonempty matchings vs 300*sqrt(max_deg*n)"),
        },
        PropertyCheck {
            name: "part-size".into(),
            pass: (max_part as f64) < cap_f,
            measured: max_part as f64,
            allowed: cap_f,
            detail: format!("largest part vs delta*n/(4*L) = {cap_f:.3}"),
        },
        PropertyCheck {
            name: "part-count".into(),
            pass: (r as f64) <= r_bound,
            measured: r as f64,
            allowed: r_bound,
            detail: format!("r = {r} parts vs 600*L/delta*sqrt(max_deg*n)"),
        },
        PropertyCheck {
            name: "quadruple-intersection".into(),
            pass: quad_exact,
            measured: edges.len() as f64,
            allowed: edges.len() as f64,
            detail: quad_detail,
        },
        PropertyCheck {
            name: "path-validity".into(),
            pass: path_ok,
            measured: paths.len() as f64,
            allowed: paths.len() as f64,
            detail: "all produced paths are simple host paths".into(),
        },
    ];

    Ok(LeftoverOutcome {
        stats: LeftoverStats {
            remainder_edges: edges.len(),
            remainder_max_degree: max_deg,
            label_count,
            matchings: t,
            parts: r,
            paths: paths.len(),
            connector_edges,
        },
        paths,
        parts,
        quadruples,
        report: LeftoverReport { checks },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::separated_edges;
    use crate::graph::PathSystem;

    fn random_remainder(g: &Graph, max_deg: usize, target: usize, seed: u64) -> Vec<Edge> {
        let mut rng = rng_from_seed(seed);
        let all = g.edges();
        let mut deg = vec![0usize; g.n()];
        let mut out = Vec::new();
        let mut tries = 0;
        while out.len() < target && tries < 50 * target {
            tries += 1;
            let e = all[rng.random_range(0..all.len())];
            if deg[e.0 as usize] < max_deg && deg[e.1 as usize] < max_deg && !out.contains(&e) {
                deg[e.0 as usize] += 1;
                deg[e.1 as usize] += 1;
                out.push(e);
            }
        }
        out.sort_unstable();
        out
    }

    #[test]
    fn label_assignment_satisfies_family_contract() {
        let g = Graph::complete(60);
        let rem = random_remainder(&g, 3, 50, 17);
        for lc in [asymptotic_label_count(60, &rem), practical_label_count(60, &rem)] {
            let phi = assign_labels_with_count(60, &rem, lc, 99).unwrap();
            let fam = labels_to_matchings(60, &rem, &phi).unwrap();
            assert!(fam.t() >= 2);
            // determinism
            let phi2 = assign_labels_with_count(60, &rem, lc, 99).unwrap();
            assert_eq!(phi, phi2);
        }
    }

    #[test]
    fn infeasible_label_count_hits_the_cap() {
        // a 3-star needs 6 labels locally; 4 cannot work
        let rem = vec![(0u32, 1u32), (0, 2), (0, 3)];
        let err = assign_labels_with_count(5, &rem, 4, 3).unwrap_err();
        assert!(matches!(err, LeftoverError::ResampleCap(_)));
    }

    #[test]
    fn default_label_count_gives_adjacent_edges_four_distinct_labels() {
        // two edges sharing a vertex must receive four pairwise distinct labels
        let rem = vec![(0u32, 1u32), (1, 2)];
        let phi = assign_labels_lll(10, &rem, 5).unwrap();
        let mut seen: Vec<u32> = vec![phi[0].0, phi[0].1, phi[1].0, phi[1].1];
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 4);
        labels_to_matchings(10, &rem, &phi).unwrap();
    }

    #[test]
    fn default_label_count_gives_star_disjoint_pairs() {
        // a 5-star: all edges are pairwise adjacent, so the 5 label pairs
        // must be pairwise disjoint (10 distinct labels in total)
        let rem: Vec<Edge> = (1u32..=5).map(|v| (0, v)).collect();
        let phi = assign_labels_lll(6, &rem, 11).unwrap();
        let mut seen: Vec<u32> = phi.iter().flat_map(|&(a, b)| [a, b]).collect();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 10);
        let fam = labels_to_matchings(6, &rem, &phi).unwrap();
        assert_eq!(fam.t(), 10);
    }

    #[test]
    fn family_verifier_rejects_bad_labelings() {
        let rem = vec![(0u32, 1u32), (2, 3), (1, 2)];
        // duplicate pair on edges 0 and 1
        let bad_a = vec![(0, 1), (0, 1), (2, 3)];
        assert!(labels_to_matchings(4, &rem, &bad_a).is_err());
        // adjacent edges 0 and 2 share label 0
        let bad_b = vec![(0, 1), (2, 3), (0, 4)];
        assert!(labels_to_matchings(5, &rem, &bad_b).is_err());
        // repeated label on one edge
        let bad_c = vec![(5, 5), (0, 1), (2, 3)];
        assert!(labels_to_matchings(6, &rem, &bad_c).is_err());
        // a fine labeling passes
        let good = vec![(0, 1), (2, 3), (4, 5)];
        let fam = labels_to_matchings(6, &rem, &good).unwrap();
        assert_eq!(fam.t(), 6);
    }

    #[test]
    fn split_respects_size_cap_and_label_origins() {
        let fam = MatchingFamily {
            n: 40,
            matchings: vec![
                (3, vec![(0, 1), (2, 3), (4, 5), (6, 7), (8, 9)]),
                (7, vec![(10, 11)]),
            ],
        };
        // cap: delta*n/(4L) = 0.5*40/4 = 5 → parts of < 5, i.e. ≤ 4 edges
        let parts = split_matchings(&fam, 0.5, 1).unwrap();
        assert_eq!(parts.len(), 3);
        assert_eq!(parts[0].label, 3);
        assert_eq!(parts[0].part, 0);
        assert_eq!(parts[0].edges.len(), 4);
        assert_eq!(parts[1].edges.len(), 1);
        assert_eq!(parts[2].label, 7);
        assert!(parts.iter().all(|p| (p.edges.len() as f64) < 5.0));
    }

    #[test]
    fn weave_on_clique_matches_hand_computation() {
        let g = Graph::complete(20);
        let part = vec![(0u32, 1u32), (2, 3)];
        let (p, q) = cover_matching_with_path_pair(&g, &part, 0.5, 1).unwrap();
        // y-connector 1→3 and x-connector 0→2 are both direct edges
        assert_eq!(p.vertices, vec![0, 1, 3, 2]);
        assert_eq!(q.vertices, vec![1, 0, 2, 3]);
    }

    #[test]
    fn weave_on_bipartite_uses_inner_vertices() {
        let g = Graph::complete_bipartite(10, 10);
        let part = vec![(0u32, 10u32), (1, 11)];
        let (p, q) = cover_matching_with_path_pair(&g, &part, 0.5, 1).unwrap();
        // x-connector 0→1 takes the smallest free right vertex 12;
        // y-connector 10→11 then takes the smallest free left vertex 2
        assert_eq!(p.vertices, vec![0, 10, 2, 11, 1]);
        assert_eq!(q.vertices, vec![10, 0, 12, 1, 11]);
    }

    #[test]
    fn weave_rejects_non_matching_part() {
        let g = Graph::complete(10);
        assert!(cover_matching_with_path_pair(&g, &[(0, 1), (1, 2)], 0.5, 1).is_err());
    }

    #[test]
    fn full_stage_separates_the_remainder() {
        let g = Graph::complete(60);
        let rem = random_remainder(&g, 3, 40, 5);
        let lc = practical_label_count(60, &rem);
        let out = last_few_paths_with_labels(&g, &rem, 0.5, 1, lc, 77).unwrap();
        assert!(out.report.all_pass(), "{}", out.report.summary());
        assert_eq!(out.paths.len(), 2 * out.parts.len());
        assert_eq!(out.quadruples.len(), rem.len());
        // independent verification: the produced system alone separates
        // every remainder edge from every other host edge
        let ps = PathSystem::new(out.paths.clone());
        let truly: std::collections::HashSet<Edge> =
            separated_edges(&g, &ps).unwrap().into_iter().collect();
        for e in &rem {
            assert!(truly.contains(e), "remainder edge {e:?} not separated");
        }
        // determinism
        let again = last_few_paths_with_labels(&g, &rem, 0.5, 1, lc, 77).unwrap();
        let a: Vec<Vec<u32>> = again.paths.iter().map(|p| p.vertices.clone()).collect();
        let b: Vec<Vec<u32>> = out.paths.iter().map(|p| p.vertices.clone()).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_remainder_is_fine() {
        let g = Graph::complete(10);
        let out = last_few_paths_with_labels(&g, &[], 0.5, 1, 8, 1).unwrap();
        assert!(out.paths.is_empty());
        assert!(out.report.all_pass());
    }

    #[test]
    fn single_edge_remainder_yields_four_trivial_paths() {
        let g = Graph::complete(20);
        let rem = vec![(2u32, 5u32)];
        let out = last_few_paths_with_labels(&g, &rem, 0.5, 1, 8, 4).unwrap();
        assert_eq!(out.paths.len(), 4);
        for p in &out.paths {
            assert_eq!(p.len_edges(), 1);
        }
        let quad = out.quadruples[&(2, 5)];
        assert_eq!(quad, [0, 1, 2, 3]);
        assert!(out.report.all_pass());
    }

    #[test]
    fn remainder_validation_catches_foreign_edges() {
        let g = Graph::complete_bipartite(3, 3);
        // (0,1) is a same-side pair, not a host edge
        assert!(last_few_paths_with_labels(&g, &[(0, 1)], 0.5, 1, 8, 1).is_err());
        // duplicates rejected
        assert!(last_few_paths_with_labels(&g, &[(0, 3), (3, 0)], 0.5, 1, 8, 1).is_err());
    }
}
