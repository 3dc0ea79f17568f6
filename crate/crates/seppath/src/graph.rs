//! Graphs, paths, edge signatures and the separation verifier.
//!
//! Everything downstream reduces to the two questions answered here: given a
//! path system, what is each edge's signature, and are the signatures
//! pairwise incomparable (strong separation) or pairwise distinct (weak
//! separation)?  The verifier is exact; it is the final word on every
//! construction in this crate.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec;
use crate::util::{sorted_subset, BitSet};

/// An undirected edge, stored with `e.0 < e.1`.
pub type Edge = (u32, u32);

/// Normalize an endpoint pair into the canonical edge form.
#[inline]
pub fn norm_edge(u: u32, v: u32) -> Edge {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("vertex {v} out of range for n = {n}")]
    VertexOutOfRange { v: u32, n: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(u32),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(u32, u32),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Simple undirected graph on vertices `0..n`.
///
/// Keeps sorted neighbor lists, a bit-matrix for O(1) adjacency tests and
/// fast common-neighborhood counting, and a dense edge-id index so per-edge
/// data can live in flat arrays.
#[derive(Clone, Debug)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    adj: Vec<Vec<u32>>,
    adj_bits: Vec<BitSet>,
    edge_ids: HashMap<Edge, u32>,
}

impl Graph {
    pub fn new(n: usize, edge_iter: impl IntoIterator<Item = (u32, u32)>) -> Result<Self, GraphError> {
        let mut edges: Vec<Edge> = Vec::new();
        for (u, v) in edge_iter {
            if u as usize >= n {
                return Err(GraphError::VertexOutOfRange { v: u, n });
            }
            if v as usize >= n {
                return Err(GraphError::VertexOutOfRange { v, n });
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            edges.push(norm_edge(u, v));
        }
        edges.sort_unstable();
        if let Some(w) = edges.windows(2).find(|w| w[0] == w[1]) {
            return Err(GraphError::DuplicateEdge(w[0].0, w[0].1));
        }
        let mut adj = vec![Vec::new(); n];
        let mut adj_bits = vec![BitSet::new(n); n];
        let mut edge_ids = HashMap::with_capacity(edges.len());
        for (id, &(u, v)) in edges.iter().enumerate() {
            adj[u as usize].push(v);
            adj[v as usize].push(u);
            adj_bits[u as usize].set(v as usize);
            adj_bits[v as usize].set(u as usize);
            edge_ids.insert((u, v), id as u32);
        }
        for row in &mut adj {
            row.sort_unstable();
        }
        Ok(Graph {
            n,
            edges,
            adj,
            adj_bits,
            edge_ids,
        })
    }

    /// Complete graph `K_n`.
    pub fn complete(n: usize) -> Graph {
        let mut edges = Vec::with_capacity(n * (n - 1) / 2);
        for u in 0..n as u32 {
            for v in u + 1..n as u32 {
                edges.push((u, v));
            }
        }
        Graph::new(n, edges).expect("complete graph is always valid")
    }

    /// Complete bipartite graph with sides `{0..a}` and `{a..a+b}`.
    pub fn complete_bipartite(a: usize, b: usize) -> Graph {
        let mut edges = Vec::with_capacity(a * b);
        for u in 0..a as u32 {
            for v in 0..b as u32 {
                edges.push((u, a as u32 + v));
            }
        }
        Graph::new(a + b, edges).expect("complete bipartite graph is always valid")
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    #[inline]
    pub fn neighbors(&self, u: u32) -> &[u32] {
        &self.adj[u as usize]
    }

    #[inline]
    pub fn degree(&self, u: u32) -> usize {
        self.adj[u as usize].len()
    }

    #[inline]
    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        u != v && (v as usize) < self.n && self.adj_bits[u as usize].get(v as usize)
    }

    /// Dense edge id (index into [`Graph::edges`]) of `{u, v}`, if present.
    #[inline]
    pub fn edge_id(&self, u: u32, v: u32) -> Option<u32> {
        self.edge_ids.get(&norm_edge(u, v)).copied()
    }

    /// Adjacency row of `u` as a bitset over vertices.
    #[inline]
    pub fn adj_row(&self, u: u32) -> &BitSet {
        &self.adj_bits[u as usize]
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Edge density relative to `C(n, 2)`.
    pub fn density(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        self.m() as f64 / (self.n as f64 * (self.n as f64 - 1.0) / 2.0)
    }

    /// Average degree divided by `n`: the regularity coefficient used by the
    /// construction pipeline.
    pub fn regularity(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        2.0 * self.m() as f64 / (self.n as f64 * self.n as f64)
    }

    /// Parse the plain edge-list format: one `u v` pair per line, `#` starts
    /// a comment, blank lines are skipped.  `n` is the largest endpoint + 1.
    pub fn parse_edge_list(text: &str) -> Result<Graph, GraphError> {
        let mut edges = Vec::new();
        let mut max_v: u32 = 0;
        for (i, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<u32, GraphError> {
                tok.ok_or(GraphError::Parse {
                    line: i + 1,
                    msg: "expected two vertex ids".into(),
                })?
                .parse()
                .map_err(|e| GraphError::Parse {
                    line: i + 1,
                    msg: format!("bad vertex id: {e}"),
                })
            };
            let u = parse(it.next())?;
            let v = parse(it.next())?;
            if it.next().is_some() {
                return Err(GraphError::Parse {
                    line: i + 1,
                    msg: "expected exactly two vertex ids".into(),
                });
            }
            max_v = max_v.max(u).max(v);
            edges.push((u, v));
        }
        let n = if edges.is_empty() { 0 } else { max_v as usize + 1 };
        Graph::new(n, edges)
    }

    /// Serialize into the edge-list format accepted by [`Graph::parse_edge_list`].
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("# n = {}, m = {}\n", self.n, self.m());
        for &(u, v) in &self.edges {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }

    /// Order-invariant structural hash, used as a cache key.
    ///
    /// For `n ≤ 8` the hash is canonical (minimized over all vertex
    /// relabelings), so isomorphic small graphs collide on purpose; beyond
    /// that it hashes the labeled edge set.
    pub fn structural_hash(&self) -> u64 {
        fn fnv(data: impl Iterator<Item = u64>) -> u64 {
            let mut h: u64 = 0xcbf2_9ce4_8422_2325;
            for x in data {
                h ^= x;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
            h
        }
        if self.n <= 8 && self.n >= 1 {
            // Adjacency of a relabeling packed into one u64 (≤ 28 pair bits).
            let mut perm: Vec<u32> = (0..self.n as u32).collect();
            let mut best = u64::MAX;
            permute(&mut perm, 0, &mut |p| {
                let mut bits: u64 = 0;
                let mut k = 0;
                for i in 0..self.n as u32 {
                    for j in i + 1..self.n as u32 {
                        if self.has_edge(p[i as usize], p[j as usize]) {
                            bits |= 1 << k;
                        }
                        k += 1;
                    }
                }
                best = best.min(bits);
            });
            fnv([self.n as u64, best].into_iter())
        } else {
            fnv(std::iter::once(self.n as u64)
                .chain(self.edges.iter().map(|&(u, v)| ((u as u64) << 32) | v as u64)))
        }
    }
}

fn permute(perm: &mut Vec<u32>, k: usize, visit: &mut impl FnMut(&[u32])) {
    if k == perm.len() {
        visit(perm);
        return;
    }
    for i in k..perm.len() {
        perm.swap(k, i);
        permute(perm, k + 1, visit);
        perm.swap(k, i);
    }
}

/// A simple path: at least two pairwise-distinct vertices, consecutive pairs
/// adjacent in the host graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Path {
    pub vertices: Vec<u32>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PathDefect {
    #[error("fewer than two vertices")]
    TooShort,
    #[error("repeated vertex {0}")]
    RepeatedVertex(u32),
    #[error("vertex {0} out of range")]
    VertexOutOfRange(u32),
    #[error("missing edge ({0}, {1})")]
    MissingEdge(u32, u32),
}

/// Invalid path inside a system, reporting the first offending index.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("path {index} invalid: {defect}")]
pub struct InvalidPath {
    pub index: usize,
    pub defect: PathDefect,
}

impl Path {
    pub fn new(vertices: Vec<u32>) -> Path {
        Path { vertices }
    }

    pub fn len_edges(&self) -> usize {
        self.vertices.len().saturating_sub(1)
    }

    pub fn endpoints(&self) -> (u32, u32) {
        (self.vertices[0], *self.vertices.last().unwrap())
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.vertices.windows(2).map(|w| norm_edge(w[0], w[1]))
    }

    pub fn check(&self, g: &Graph) -> Result<(), PathDefect> {
        if self.vertices.len() < 2 {
            return Err(PathDefect::TooShort);
        }
        let mut seen = BitSet::new(g.n());
        for &v in &self.vertices {
            if v as usize >= g.n() {
                return Err(PathDefect::VertexOutOfRange(v));
            }
            if seen.get(v as usize) {
                return Err(PathDefect::RepeatedVertex(v));
            }
            seen.set(v as usize);
        }
        for w in self.vertices.windows(2) {
            if !g.has_edge(w[0], w[1]) {
                return Err(PathDefect::MissingEdge(w[0], w[1]));
            }
        }
        Ok(())
    }
}

/// An ordered list of paths over a shared host graph.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PathSystem {
    pub paths: Vec<Path>,
}

/// Serialization of a path system: a structured document carrying the vertex
/// count and the vertex sequence of every path.
#[derive(Serialize, Deserialize)]
struct PathSystemFile {
    n: usize,
    paths: Vec<Vec<u32>>,
}

impl PathSystem {
    pub fn new(paths: Vec<Path>) -> PathSystem {
        PathSystem { paths }
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn check(&self, g: &Graph) -> Result<(), InvalidPath> {
        for (index, p) in self.paths.iter().enumerate() {
            p.check(g).map_err(|defect| InvalidPath { index, defect })?;
        }
        Ok(())
    }

    pub fn to_json(&self, n: usize) -> String {
        serde_json::to_string_pretty(&PathSystemFile {
            n,
            paths: self.paths.iter().map(|p| p.vertices.clone()).collect(),
        })
        .expect("path system serialization cannot fail")
    }

    /// Parse the JSON form; returns `(n, system)`.
    pub fn from_json(text: &str) -> Result<(usize, PathSystem), serde_json::Error> {
        let f: PathSystemFile = serde_json::from_str(text)?;
        Ok((
            f.n,
            PathSystem {
                paths: f.paths.into_iter().map(Path::new).collect(),
            },
        ))
    }
}

/// `true` iff every path in `ps` is a valid simple path of `g`.
pub fn validate_path_system(g: &Graph, ps: &PathSystem) -> bool {
    ps.check(g).is_ok()
}

/// Per-edge signatures: for edge id `e`, the sorted list of indices of paths
/// containing it.
#[derive(Clone, Debug)]
pub struct EdgeSignatures {
    pub by_edge: Vec<Vec<u32>>,
}

impl EdgeSignatures {
    /// View keyed by edge endpoints, for reporting and tests.
    pub fn as_map(&self, g: &Graph) -> BTreeMap<Edge, BTreeSet<u32>> {
        g.edges()
            .iter()
            .enumerate()
            .map(|(id, &e)| (e, self.by_edge[id].iter().copied().collect()))
            .collect()
    }
}

/// Compute the signature of every edge of `g` under `ps`.
///
/// Fails with the first invalid path index if `ps` is not a path system of
/// `g`; an edge of a path is by construction an edge of `g` after that check.
pub fn edge_signatures(g: &Graph, ps: &PathSystem) -> Result<EdgeSignatures, InvalidPath> {
    ps.check(g)?;
    let mut by_edge = vec![Vec::new(); g.m()];
    for (i, p) in ps.paths.iter().enumerate() {
        for (u, v) in p.edges() {
            let id = g.edge_id(u, v).expect("checked path edge exists");
            by_edge[id as usize].push(i as u32);
        }
    }
    // Path indices are visited in increasing order, so each list is sorted.
    Ok(EdgeSignatures { by_edge })
}

/// Which separation property to verify.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SepMode {
    /// Signatures pairwise distinct.
    Weak,
    /// Signatures pairwise incomparable under inclusion, every edge covered.
    Strong,
}

impl fmt::Display for SepMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SepMode::Weak => write!(f, "weak"),
            SepMode::Strong => write!(f, "strong"),
        }
    }
}

impl std::str::FromStr for SepMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "weak" => Ok(SepMode::Weak),
            "strong" => Ok(SepMode::Strong),
            other => Err(format!("unknown mode {other:?} (expected weak|strong)")),
        }
    }
}

/// Listing more violations than this only burns memory; the exact count is
/// still reported in `total_violations`.
pub const VIOLATION_CAP: usize = 1_000_000;

/// Outcome of a separation check.
///
/// `violations` lists offending ordered pairs `(e, f)` with `sig(e) ⊆ sig(f)`
/// (strong mode) or `sig(e) = sig(f)` (weak mode), capped at
/// [`VIOLATION_CAP`] entries; `total_violations` is always the exact count.
/// `uncovered` lists edges on no path at all.  An uncovered edge has the
/// empty signature, which is contained in every other signature, so in strong
/// mode it violates against every other edge; in a one-edge graph there is no
/// other edge, but coverage is still required for strong separation (the
/// smallest strong-separating system of a single-edge graph is the one-edge
/// path, not the empty system).
#[derive(Clone, Debug, Serialize)]
pub struct SeparationReport {
    pub mode: SepMode,
    pub ok: bool,
    pub violations: Vec<(Edge, Edge)>,
    pub uncovered: Vec<Edge>,
    pub total_violations: u64,
    pub truncated: bool,
}

/// Verify weak or strong separation of `E(g)` by `ps`.
///
/// Strong mode avoids the quadratic pair scan: `sig(e) ⊆ sig(f)` forces `f`
/// to lie on every path containing `e`, so for each covered edge only the
/// edges of one such path are candidate dominators.
pub fn verify_separation(
    g: &Graph,
    ps: &PathSystem,
    mode: SepMode,
) -> Result<SeparationReport, InvalidPath> {
    let sigs = edge_signatures(g, ps)?;
    let m = g.m();
    let uncovered_ids: Vec<u32> = (0..m as u32)
        .filter(|&e| sigs.by_edge[e as usize].is_empty())
        .collect();
    let uncovered: Vec<Edge> = uncovered_ids.iter().map(|&e| g.edges()[e as usize]).collect();

    let mut violations: Vec<(Edge, Edge)> = Vec::new();
    let mut total: u64 = 0;

    match mode {
        SepMode::Strong => {
            // Covered-vs-covered containments, found via the shortest path
            // containing each edge.
            let path_edge_ids: Vec<Vec<u32>> = ps
                .paths
                .iter()
                .map(|p| {
                    p.edges()
                        .map(|(u, v)| g.edge_id(u, v).expect("checked"))
                        .collect()
                })
                .collect();
            let per_edge: Vec<Vec<(Edge, Edge)>> = exec::map_indices(m, |e| {
                let sig_e = &sigs.by_edge[e];
                if sig_e.is_empty() {
                    return Vec::new();
                }
                let host = sig_e
                    .iter()
                    .copied()
                    .min_by_key(|&p| path_edge_ids[p as usize].len())
                    .unwrap();
                let mut out = Vec::new();
                for &f in &path_edge_ids[host as usize] {
                    if f as usize != e && sorted_subset(sig_e, &sigs.by_edge[f as usize]) {
                        out.push((g.edges()[e], g.edges()[f as usize]));
                    }
                }
                out
            });
            for mut v in per_edge {
                total += v.len() as u64;
                if violations.len() < VIOLATION_CAP {
                    let room = VIOLATION_CAP - violations.len();
                    v.truncate(room);
                    violations.extend(v);
                }
            }
            // Every uncovered edge is dominated by every other edge.
            if m >= 2 {
                total += uncovered_ids.len() as u64 * (m as u64 - 1);
                'outer: for &e in &uncovered_ids {
                    for f in 0..m as u32 {
                        if f == e {
                            continue;
                        }
                        if violations.len() >= VIOLATION_CAP {
                            break 'outer;
                        }
                        violations.push((g.edges()[e as usize], g.edges()[f as usize]));
                    }
                }
            }
            let ok = uncovered.is_empty() && total == 0;
            let truncated = (violations.len() as u64) < total;
            return Ok(SeparationReport {
                mode,
                ok,
                violations,
                uncovered,
                total_violations: total,
                truncated,
            });
        }
        SepMode::Weak => {
            // Group edges by signature; any group of two or more is a clash.
            let mut groups: HashMap<&[u32], Vec<u32>> = HashMap::new();
            for e in 0..m as u32 {
                groups
                    .entry(&sigs.by_edge[e as usize])
                    .or_default()
                    .push(e);
            }
            let mut clashes: Vec<&Vec<u32>> = groups.values().filter(|v| v.len() > 1).collect();
            clashes.sort_unstable_by_key(|v| v[0]);
            for group in clashes {
                total += (group.len() as u64) * (group.len() as u64 - 1);
                for &e in group {
                    for &f in group {
                        if e != f && violations.len() < VIOLATION_CAP {
                            violations.push((g.edges()[e as usize], g.edges()[f as usize]));
                        }
                    }
                }
            }
            violations.sort_unstable();
            let ok = total == 0;
            let truncated = (violations.len() as u64) < total;
            Ok(SeparationReport {
                mode,
                ok,
                violations,
                uncovered,
                total_violations: total,
                truncated,
            })
        }
    }
}

/// The set of edges the system separates from *all* other edges: edges `e`
/// with nonempty signature such that no other edge's signature contains
/// `sig(e)`.  This one-sided property is what the construction pipeline
/// tracks per edge; the whole system is strong-separating iff every edge
/// qualifies.
pub fn separated_edges(g: &Graph, ps: &PathSystem) -> Result<Vec<Edge>, InvalidPath> {
    let sigs = edge_signatures(g, ps)?;
    let path_edge_ids: Vec<Vec<u32>> = ps
        .paths
        .iter()
        .map(|p| {
            p.edges()
                .map(|(u, v)| g.edge_id(u, v).expect("checked"))
                .collect()
        })
        .collect();
    let flags: Vec<bool> = exec::map_indices(g.m(), |e| {
        let sig_e = &sigs.by_edge[e];
        if sig_e.is_empty() {
            return false;
        }
        let host = sig_e
            .iter()
            .copied()
            .min_by_key(|&p| path_edge_ids[p as usize].len())
            .unwrap();
        !path_edge_ids[host as usize]
            .iter()
            .any(|&f| f as usize != e && sorted_subset(sig_e, &sigs.by_edge[f as usize]))
    });
    Ok(g.edges()
        .iter()
        .zip(&flags)
        .filter_map(|(&e, &ok)| ok.then_some(e))
        .collect())
}

/// Exact lower bound for complete graphs: any strong-separating path system
/// of `K_n` with `n ≥ 3` has at least `n` paths.
pub fn lower_bound_clique(n: u64) -> Result<u64, DomainError> {
    if n < 3 {
        return Err(DomainError {
            what: format!("clique lower bound requires n >= 3, got {n}"),
        });
    }
    Ok(n)
}

/// `f(alpha) = sqrt(3*alpha + 1) - 1`: the density-driven coefficient in the
/// general lower bound.
pub fn density_coefficient(alpha: f64) -> f64 {
    (3.0 * alpha + 1.0).sqrt() - 1.0
}

/// General lower bound `(sqrt(3*alpha + 1) - 1 - eps) * n` for graphs with
/// `alpha * C(n, 2)` edges.  Requires `alpha ∈ (0, 1]` and `eps ∈ [0, 1]`
/// (`eps = 0` yields the bare coefficient).
pub fn lower_bound_general(n: u64, alpha: f64, eps: f64) -> Result<f64, DomainError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(DomainError {
            what: format!("alpha must lie in (0, 1], got {alpha}"),
        });
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(DomainError {
            what: format!("eps must lie in [0, 1], got {eps}"),
        });
    }
    Ok((density_coefficient(alpha) - eps) * n as f64)
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("{what}")]
pub struct DomainError {
    pub what: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k3_rotations() -> PathSystem {
        // Three 2-edge paths of the triangle: a-b-c, b-c-a, c-a-b.
        PathSystem::new(vec![
            Path::new(vec![0, 1, 2]),
            Path::new(vec![1, 2, 0]),
            Path::new(vec![2, 0, 1]),
        ])
    }

    #[test]
    fn signatures_on_triangle_rotations() {
        let g = Graph::complete(3);
        let sigs = edge_signatures(&g, &k3_rotations()).unwrap();
        let map = sigs.as_map(&g);
        let get = |u, v| map[&norm_edge(u, v)].iter().copied().collect::<Vec<_>>();
        assert_eq!(get(0, 1), vec![0, 2]);
        assert_eq!(get(1, 2), vec![0, 1]);
        assert_eq!(get(2, 0), vec![1, 2]);
    }

    #[test]
    fn signatures_reject_invalid_path() {
        let g = Graph::complete(3);
        let ps = PathSystem::new(vec![
            Path::new(vec![0, 1]),
            Path::new(vec![0, 1, 0]), // repeated vertex
        ]);
        let err = edge_signatures(&g, &ps).unwrap_err();
        assert_eq!(err.index, 1);
        assert_eq!(err.defect, PathDefect::RepeatedVertex(0));
        assert!(!validate_path_system(&g, &ps));
    }

    #[test]
    fn empty_system_all_uncovered() {
        let g = Graph::complete(3);
        let rep = verify_separation(&g, &PathSystem::default(), SepMode::Strong).unwrap();
        assert!(!rep.ok);
        assert_eq!(rep.uncovered.len(), 3);
        // Each uncovered edge violates against both others.
        assert_eq!(rep.total_violations, 6);
    }

    #[test]
    fn triangle_single_edge_paths_strong() {
        let g = Graph::complete(3);
        let ps = PathSystem::new(vec![
            Path::new(vec![0, 1]),
            Path::new(vec![1, 2]),
            Path::new(vec![2, 0]),
        ]);
        let rep = verify_separation(&g, &ps, SepMode::Strong).unwrap();
        assert!(rep.ok);
        assert!(rep.violations.is_empty() && rep.uncovered.is_empty());
    }

    #[test]
    fn triangle_rotations_strong() {
        let g = Graph::complete(3);
        let rep = verify_separation(&g, &k3_rotations(), SepMode::Strong).unwrap();
        assert!(rep.ok, "rotation signatures are pairwise incomparable");
    }

    #[test]
    fn single_long_path_fails_strong() {
        let g = Graph::complete(3);
        let ps = PathSystem::new(vec![Path::new(vec![0, 1, 2])]);
        let rep = verify_separation(&g, &ps, SepMode::Strong).unwrap();
        assert!(!rep.ok);
        assert_eq!(rep.uncovered, vec![(0, 2)]);
        // The uncovered edge is dominated by both covered edges.
        assert!(rep.violations.contains(&((0, 2), (0, 1))));
        // And the two covered edges share signature {0}, each direction listed.
        assert!(rep.violations.contains(&((0, 1), (1, 2))));
        assert!(rep.violations.contains(&((1, 2), (0, 1))));
    }

    #[test]
    fn weak_allows_nested_but_distinct() {
        // P3: edges ab, bc; system {a-b-c, b-c} gives sig(ab) = {0} and
        // sig(bc) = {0, 1}: distinct (weak ok) but nested (strong fails).
        let g = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        let ps = PathSystem::new(vec![Path::new(vec![0, 1, 2]), Path::new(vec![1, 2])]);
        let weak = verify_separation(&g, &ps, SepMode::Weak).unwrap();
        assert!(weak.ok);
        let strong = verify_separation(&g, &ps, SepMode::Strong).unwrap();
        assert!(!strong.ok, "{{0}} ⊂ {{0,1}} is a strong violation");
        assert_eq!(strong.total_violations, 1);
        assert_eq!(strong.violations, vec![((0, 1), (1, 2))]);
    }

    #[test]
    fn weak_equal_signatures_fail() {
        let g = Graph::new(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let ps = PathSystem::new(vec![Path::new(vec![0, 1, 2, 3])]);
        let rep = verify_separation(&g, &ps, SepMode::Weak).unwrap();
        assert!(!rep.ok);
        assert_eq!(rep.total_violations, 6, "three edges share one signature");
    }

    #[test]
    fn one_edge_graph_conventions() {
        let g = Graph::new(2, [(0, 1)]).unwrap();
        let empty = verify_separation(&g, &PathSystem::default(), SepMode::Strong).unwrap();
        assert!(!empty.ok, "strong separation requires coverage");
        assert_eq!(empty.total_violations, 0, "no other edge to clash with");
        let covered = verify_separation(
            &g,
            &PathSystem::new(vec![Path::new(vec![0, 1])]),
            SepMode::Strong,
        )
        .unwrap();
        assert!(covered.ok);
    }

    #[test]
    fn separated_edges_one_sided() {
        let g = Graph::new(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let ps = PathSystem::new(vec![Path::new(vec![0, 1, 2, 3]), Path::new(vec![1, 2])]);
        // sig(ab) = {0}, sig(bc) = {0,1}, sig(cd) = {0}.
        // bc's signature is contained in no other; ab/cd are dominated by bc.
        assert_eq!(separated_edges(&g, &ps).unwrap(), vec![(1, 2)]);
    }

    #[test]
    fn bounds_values() {
        assert_eq!(lower_bound_clique(3).unwrap(), 3);
        assert!(lower_bound_clique(2).is_err());
        assert_eq!(lower_bound_general(100, 1.0, 0.0).unwrap(), 100.0);
        let c = lower_bound_general(1, 0.5, 0.0).unwrap();
        assert!((c - (2.5f64.sqrt() - 1.0)).abs() < 1e-12);
        assert!(lower_bound_general(10, 0.0, 0.0).is_err());
        assert!(lower_bound_general(10, 0.5, 1.5).is_err());
    }

    #[test]
    fn parse_and_write_edge_list() {
        let text = "# triangle\n0 1\n1 2\n\n2 0  # closing edge\n";
        let g = Graph::parse_edge_list(text).unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.m(), 3);
        let echo = Graph::parse_edge_list(&g.to_edge_list()).unwrap();
        assert_eq!(echo.edges(), g.edges());
        assert!(Graph::parse_edge_list("0 1 2").is_err());
        assert!(Graph::parse_edge_list("0 x").is_err());
        assert!(Graph::parse_edge_list("3 3").is_err());
    }

    #[test]
    fn path_system_json_roundtrip() {
        let ps = k3_rotations();
        let (n, back) = PathSystem::from_json(&ps.to_json(3)).unwrap();
        assert_eq!(n, 3);
        assert_eq!(back, ps);
    }

    #[test]
    fn structural_hash_isomorphism_small() {
        // Two labelings of P3 hash identically; P3 and K3 differ.
        let a = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        let b = Graph::new(3, [(0, 2), (1, 2)]).unwrap();
        assert_eq!(a.structural_hash(), b.structural_hash());
        assert_ne!(a.structural_hash(), Graph::complete(3).structural_hash());
    }

    #[test]
    fn graph_validation_errors() {
        assert_eq!(
            Graph::new(2, [(0, 0)]).unwrap_err(),
            GraphError::SelfLoop(0)
        );
        assert_eq!(
            Graph::new(2, [(0, 1), (1, 0)]).unwrap_err(),
            GraphError::DuplicateEdge(0, 1)
        );
        assert!(matches!(
            Graph::new(2, [(0, 5)]),
            Err(GraphError::VertexOutOfRange { v: 5, .. })
        ));
    }

    mod properties {
        use super::*;
        use crate::util::rng_from_seed;
        use proptest::prelude::*;
        use rand::Rng;
        use std::collections::{BTreeSet, HashMap};

        fn random_host(n: usize, density: f64, seed: u64) -> Graph {
            let mut rng = rng_from_seed(seed);
            let mut edges = Vec::new();
            for u in 0..n as u32 {
                for v in (u + 1)..n as u32 {
                    if rng.random_bool(density) {
                        edges.push((u, v));
                    }
                }
            }
            Graph::new(n, edges).unwrap()
        }

        /// `k` seeded self-avoiding walks, each at least one edge long.
        fn random_walks(g: &Graph, k: usize, seed: u64) -> PathSystem {
            let mut rng = rng_from_seed(seed ^ 0x9E37_79B9_7F4A_7C15);
            let mut paths = Vec::new();
            for _ in 0..k {
                if g.m() == 0 {
                    break;
                }
                let (u, v) = g.edges()[rng.random_range(0..g.m())];
                let mut verts = vec![u, v];
                let mut used: BTreeSet<u32> = verts.iter().copied().collect();
                let extra = rng.random_range(0..g.n());
                while verts.len() < extra + 2 {
                    let cur = *verts.last().unwrap();
                    let nbrs: Vec<u32> = g
                        .neighbors(cur)
                        .iter()
                        .copied()
                        .filter(|w| !used.contains(w))
                        .collect();
                    if nbrs.is_empty() {
                        break;
                    }
                    let w = nbrs[rng.random_range(0..nbrs.len())];
                    verts.push(w);
                    used.insert(w);
                }
                paths.push(Path::new(verts));
            }
            PathSystem::new(paths)
        }

        /// Reference signature map: per edge, the set of paths containing it.
        fn naive_signatures(g: &Graph, ps: &PathSystem) -> Vec<BTreeSet<usize>> {
            let mut sig = vec![BTreeSet::new(); g.m()];
            for (i, p) in ps.paths.iter().enumerate() {
                for (u, v) in p.edges() {
                    sig[g.edge_id(u, v).unwrap() as usize].insert(i);
                }
            }
            sig
        }

        /// Reference strong verdict by the double loop over all edge pairs.
        fn naive_strong(g: &Graph, sig: &[BTreeSet<usize>]) -> (bool, u64, Vec<Edge>) {
            let m = sig.len();
            let uncovered: Vec<Edge> = (0..m)
                .filter(|&e| sig[e].is_empty())
                .map(|e| g.edges()[e])
                .collect();
            let mut total = 0u64;
            for e in 0..m {
                if sig[e].is_empty() {
                    continue;
                }
                for f in 0..m {
                    if e != f && !sig[f].is_empty() && sig[e].is_subset(&sig[f]) {
                        total += 1;
                    }
                }
            }
            if m >= 2 {
                total += uncovered.len() as u64 * (m as u64 - 1);
            }
            (uncovered.is_empty() && total == 0, total, uncovered)
        }

        /// Reference weak verdict: signature multiset has no repeats.
        fn naive_weak(sig: &[BTreeSet<usize>]) -> (bool, u64) {
            let mut groups: HashMap<Vec<usize>, u64> = HashMap::new();
            for s in sig {
                *groups.entry(s.iter().copied().collect()).or_default() += 1;
            }
            let total: u64 = groups.values().map(|&c| c * (c - 1)).sum();
            (total == 0, total)
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(96))]

            /// `alpha ≤ f(alpha) ≤ 1` on `(0, 1]`, `f` nondecreasing, and
            /// the general bound never exceeds `n`.
            #[test]
            fn coefficient_sandwich_and_monotone(
                a in 1e-6f64..=1.0,
                b in 1e-6f64..=1.0,
                n in 1u64..=100_000,
            ) {
                let fa = density_coefficient(a);
                prop_assert!(fa >= a - 1e-12, "f({a}) = {fa} < alpha");
                prop_assert!(fa <= 1.0 + 1e-12, "f({a}) = {fa} > 1");
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                prop_assert!(density_coefficient(lo) <= density_coefficient(hi) + 1e-12);
                let lb = lower_bound_general(n, a, 0.0).unwrap();
                prop_assert!(lb <= n as f64 + 1e-9);
                prop_assert!(lb >= (a - 1e-12) * n as f64);
            }

            /// Strong acceptance implies weak acceptance, and both verdicts
            /// (plus violation totals and uncovered sets) agree with the
            /// all-pairs reference implementation on random systems.
            #[test]
            fn verifier_matches_all_pairs_reference(
                n in 2usize..16,
                density in 0.15f64..=1.0,
                k in 0usize..10,
                seed in any::<u64>(),
            ) {
                let g = random_host(n, density, seed);
                let ps = random_walks(&g, k, seed);
                let strong = verify_separation(&g, &ps, SepMode::Strong).unwrap();
                let weak = verify_separation(&g, &ps, SepMode::Weak).unwrap();
                if strong.ok {
                    prop_assert!(weak.ok, "strong accepted but weak rejected");
                }
                prop_assert_eq!(&strong.uncovered, &weak.uncovered);

                let sig = naive_signatures(&g, &ps);
                let (sok, stotal, suncov) = naive_strong(&g, &sig);
                prop_assert_eq!(strong.ok, sok);
                prop_assert_eq!(strong.total_violations, stotal);
                prop_assert_eq!(&strong.uncovered, &suncov);
                let (wok, wtotal) = naive_weak(&sig);
                prop_assert_eq!(weak.ok, wok);
                prop_assert_eq!(weak.total_violations, wtotal);

                // Non-vacuous side: one single-edge path per edge is always
                // strongly separating.
                if g.m() > 0 {
                    let per_edge = PathSystem::new(
                        g.edges().iter().map(|&(u, v)| Path::new(vec![u, v])).collect(),
                    );
                    prop_assert!(verify_separation(&g, &per_edge, SepMode::Strong).unwrap().ok);
                    prop_assert!(verify_separation(&g, &per_edge, SepMode::Weak).unwrap().ok);
                }
            }
        }
    }
}
