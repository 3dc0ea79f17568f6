//! The separator pipeline: orient the host graph, build a base 3-graph,
//! sample vertex-membership sets, run a conflict-free slot matching over the
//! implicit auxiliary 8-graph, and extract a collection of 2-matchings that
//! strongly separates its own edge set.
//!
//! The auxiliary 8-graph is never materialized.  An aux edge is a pair
//! (arc `(x, y)` of the orientation, triple `{i, j, k}` of the base graph)
//! and exists iff both `x` and `y` belong to `Xᵢ ∩ Xⱼ ∩ Xₖ`.  A matching
//! must keep these 8-sets disjoint, which is equivalent to: every arc used
//! at most once, every triple used at most once, and every (vertex-copy,
//! base-vertex) slot `(x₁, a)` / `(y₂, a)` used at most once.  The slot
//! discipline is what bounds every extracted 2-matching's degree by 2.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::base::{build_base, BaseError, BaseThreeGraph, PropertyCheck};
use crate::connectivity::count_internal_paths;
use crate::exec;
use crate::graph::{norm_edge, Edge, Graph};
use crate::util::{derive_seed, rng_from_seed, BitSet};
use rand::seq::SliceRandom;
use rand::Rng;

/// Greedy matching restarts per stage attempt.
pub const SEPARATOR_RESTARTS: usize = 3;
/// Random probes per arc before falling back to exhaustive candidate scan.
const PROBE_CAP: usize = 60;
/// Stage reseeds before giving up on a build.
pub const STAGE_RETRY_CAP: usize = 5;

#[derive(Debug, Error)]
pub enum SeparatorError {
    #[error("base construction failed: {0}")]
    Base(#[from] BaseError),
    #[error("{what} must lie in (0, 1), got {value}")]
    BadParameter { what: &'static str, value: f64 },
    #[error("host graph is degenerate: {0}")]
    Degenerate(String),
    #[error("extraction found a vertex of degree {degree} > 2 in 2-matching {index}: input was not a matching")]
    NotAMatching { index: usize, degree: usize },
    #[error("stage `{stage}` failed after {attempts} attempts: {detail}")]
    StageFailed {
        stage: &'static str,
        attempts: usize,
        detail: String,
    },
    #[error("serialization: {0}")]
    Serde(String),
}

// ---------------------------------------------------------------------------
// Orientation
// ---------------------------------------------------------------------------

/// One uniformly random orientation per host edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrientedGraph {
    pub n: usize,
    /// One `(tail, head)` arc per host edge, in host edge order.
    pub arcs: Vec<(u32, u32)>,
}

impl OrientedGraph {
    pub fn out_degrees(&self) -> Vec<u32> {
        let mut d = vec![0u32; self.n];
        for &(x, _) in &self.arcs {
            d[x as usize] += 1;
        }
        d
    }

    pub fn in_degrees(&self) -> Vec<u32> {
        let mut d = vec![0u32; self.n];
        for &(_, y) in &self.arcs {
            d[y as usize] += 1;
        }
        d
    }

    /// Largest deviation of any in- or out-degree from `target`.
    pub fn max_degree_deviation(&self, target: f64) -> f64 {
        let outs = self.out_degrees();
        let ins = self.in_degrees();
        outs.iter()
            .chain(ins.iter())
            .map(|&d| (d as f64 - target).abs())
            .fold(0.0, f64::max)
    }
}

/// Orient each edge of `g` uniformly at random (deterministic per seed).
pub fn orient_random(g: &Graph, seed: u64) -> OrientedGraph {
    let mut rng = rng_from_seed(derive_seed(seed, 0x6f72_6965));
    let arcs = g
        .edges()
        .iter()
        .map(|&(u, v)| if rng.random_bool(0.5) { (u, v) } else { (v, u) })
        .collect();
    OrientedGraph { n: g.n(), arcs }
}

// ---------------------------------------------------------------------------
// X family
// ---------------------------------------------------------------------------

/// Per-base-vertex membership sets `Xᵢ ⊆ V(G)` and the transposed view
/// `Yₓ = {i : x ∈ Xᵢ}`.
#[derive(Clone, Debug)]
pub struct XFamily {
    pub n_graph: usize,
    pub n_base: usize,
    /// `member[i]` = bitset of graph vertices in `Xᵢ`.
    pub member: Vec<BitSet>,
    /// `y[x]` = bitset of base vertices whose set contains `x`.
    pub y: Vec<BitSet>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XFamilyStats {
    pub x_min: usize,
    pub x_max: usize,
    pub y_min: usize,
    pub y_max: usize,
}

impl XFamily {
    pub fn stats(&self) -> XFamilyStats {
        let xs: Vec<usize> = self.member.iter().map(|b| b.count()).collect();
        let ys: Vec<usize> = self.y.iter().map(|b| b.count()).collect();
        XFamilyStats {
            x_min: xs.iter().copied().min().unwrap_or(0),
            x_max: xs.iter().copied().max().unwrap_or(0),
            y_min: ys.iter().copied().min().unwrap_or(0),
            y_max: ys.iter().copied().max().unwrap_or(0),
        }
    }
}

/// Include each graph vertex in each `Xᵢ` independently with probability
/// `1 − eps`.
pub fn sample_x_family(g: &Graph, j: &BaseThreeGraph, eps: f64, seed: u64) -> XFamily {
    let n = g.n();
    let n_base = j.n_vertices();
    let p = 1.0 - eps;
    let mut rng = rng_from_seed(derive_seed(seed, 0x7866_616d));
    let mut member: Vec<BitSet> = (0..n_base).map(|_| BitSet::new(n)).collect();
    let mut y: Vec<BitSet> = (0..n).map(|_| BitSet::new(n_base)).collect();
    for i in 0..n_base {
        for x in 0..n {
            if p >= 1.0 || (p > 0.0 && rng.random_bool(p)) {
                member[i].set(x);
                y[x].set(i);
            }
        }
    }
    XFamily {
        n_graph: n,
        n_base,
        member,
        y,
    }
}

// ---------------------------------------------------------------------------
// Conflict system
// ---------------------------------------------------------------------------

/// Incremental detector for monochromatic short directed cycles.
///
/// A conflict is a set of matched (arc, triple) pairs whose arcs form a
/// directed cycle of length `3..=r` in the orientation and whose triples all
/// contain one common U₁ vertex (the cycle's colour).  Because each slot
/// `(x₁, a)` is used at most once, the matched arcs of any one colour form a
/// functional digraph (out-degree ≤ 1), so "would this candidate close a
/// short cycle of colour `a`?" is a single chain walk of ≤ r−1 steps.
#[derive(Clone, Debug)]
pub struct SeparatorConflicts {
    /// Maximum banned cycle length, `⌊1/ε′⌋`.
    pub r: usize,
    /// `(colour, tail) → head` over matched arcs.
    next: HashMap<(u32, u32), u32>,
}

impl SeparatorConflicts {
    pub fn new(r: usize) -> SeparatorConflicts {
        SeparatorConflicts {
            r,
            next: HashMap::new(),
        }
    }

    /// Would matching arc `(x, y)` with the given U₁ colours complete a
    /// monochromatic directed cycle of length ≤ r?  Returns the colour and
    /// the cycle length.
    pub fn would_close(&self, x: u32, y: u32, colours: &[u32]) -> Option<(u32, usize)> {
        if self.r < 3 {
            return None;
        }
        for &a in colours {
            let mut v = y;
            for steps in 1..self.r {
                match self.next.get(&(a, v)) {
                    Some(&w) => {
                        if w == x {
                            // cycle = steps matched arcs + the candidate
                            let len = steps + 1;
                            if len >= 3 {
                                return Some((a, len));
                            }
                            break;
                        }
                        v = w;
                    }
                    None => break,
                }
            }
        }
        None
    }

    /// Register an accepted arc under its colours.
    pub fn record(&mut self, x: u32, y: u32, colours: &[u32]) {
        for &a in colours {
            self.next.insert((a, x), y);
        }
    }
}

/// Fresh conflict detector for the given compactness parameter.  The banned
/// cycle-length range is `3..=⌊1/ε′⌋`; an `ε′ > 1/3` yields an empty system
/// (no directed cycle is that short).
pub fn conflict_system_for(
    _d: &OrientedGraph,
    _j: &BaseThreeGraph,
    eps_prime: f64,
) -> Result<SeparatorConflicts, SeparatorError> {
    if !(eps_prime > 0.0 && eps_prime < 1.0) {
        return Err(SeparatorError::BadParameter {
            what: "eps_prime",
            value: eps_prime,
        });
    }
    Ok(SeparatorConflicts::new(
        ((1.0 / eps_prime) + 1e-9).floor() as usize,
    ))
}

/// Exhaustively enumerate every conflict set at desk scale: all directed
/// cycles of length `3..=r`, each monochromatic colour, and each eligible
/// label assignment.  Each conflict is returned as the set of its
/// (arc index, triple index) pairs.  Intended for tiny fixtures; stops at
/// `cap` conflicts.
pub fn enumerate_conflicts_exhaustive(
    d: &OrientedGraph,
    j: &BaseThreeGraph,
    xf: &XFamily,
    eps_prime: f64,
    cap: usize,
) -> Result<Vec<Vec<(u32, u32)>>, SeparatorError> {
    let r = conflict_system_for(d, j, eps_prime)?.r;
    let n = d.n;
    let triples: Vec<[u32; 3]> = j.edges().copied().collect();
    // arc lookup and adjacency
    let mut arc_id: HashMap<(u32, u32), u32> = HashMap::new();
    let mut out: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (idx, &(x, y)) in d.arcs.iter().enumerate() {
        arc_id.insert((x, y), idx as u32);
        out[x as usize].push(y);
    }
    for row in &mut out {
        row.sort_unstable();
    }
    // eligible triples per (arc, colour): triple contains colour and both
    // arc endpoints lie in all three member sets.
    let eligible = |x: u32, y: u32, ti: usize| -> bool {
        triples[ti]
            .iter()
            .all(|&c| xf.member[c as usize].get(x as usize) && xf.member[c as usize].get(y as usize))
    };
    let mut by_colour: Vec<Vec<u32>> = vec![Vec::new(); j.n_vertices()];
    for (ti, t) in triples.iter().enumerate() {
        for &c in t {
            by_colour[c as usize].push(ti as u32);
        }
    }

    // Enumerate directed cycles canonically (minimum vertex first).
    let mut cycles: Vec<Vec<u32>> = Vec::new();
    fn dfs_cycles(
        out: &[Vec<u32>],
        start: u32,
        path: &mut Vec<u32>,
        on_path: &mut Vec<bool>,
        r: usize,
        cycles: &mut Vec<Vec<u32>>,
    ) {
        let cur = *path.last().unwrap();
        for &w in &out[cur as usize] {
            if w == start && path.len() >= 3 {
                cycles.push(path.clone());
            }
            if w > start && !on_path[w as usize] && path.len() < r {
                path.push(w);
                on_path[w as usize] = true;
                dfs_cycles(out, start, path, on_path, r, cycles);
                on_path[w as usize] = false;
                path.pop();
            }
        }
    }
    for s in 0..n as u32 {
        let mut path = vec![s];
        let mut on_path = vec![false; n];
        on_path[s as usize] = true;
        dfs_cycles(&out, s, &mut path, &mut on_path, r, &mut cycles);
    }

    // For each cycle and colour, take the cartesian product of per-arc
    // eligible labels.
    let mut conflicts: Vec<Vec<(u32, u32)>> = Vec::new();
    for cyc in &cycles {
        let ell = cyc.len();
        let cycle_arcs: Vec<(u32, u32)> = (0..ell)
            .map(|a| (cyc[a], cyc[(a + 1) % ell]))
            .collect();
        for colour in 0..j.u1_size as u32 {
            let per_arc: Vec<Vec<u32>> = cycle_arcs
                .iter()
                .map(|&(x, y)| {
                    by_colour[colour as usize]
                        .iter()
                        .copied()
                        .filter(|&ti| eligible(x, y, ti as usize))
                        .collect()
                })
                .collect();
            if per_arc.iter().any(|v| v.is_empty()) {
                continue;
            }
            let mut pick = vec![0usize; ell];
            loop {
                let set: Vec<(u32, u32)> = cycle_arcs
                    .iter()
                    .enumerate()
                    .map(|(a, &arc)| (arc_id[&arc], per_arc[a][pick[a]]))
                    .collect();
                conflicts.push(set);
                if conflicts.len() >= cap {
                    return Ok(conflicts);
                }
                // odometer increment
                let mut pos = 0;
                loop {
                    if pos == ell {
                        break;
                    }
                    pick[pos] += 1;
                    if pick[pos] < per_arc[pos].len() {
                        break;
                    }
                    pick[pos] = 0;
                    pos += 1;
                }
                if pos == ell {
                    break;
                }
            }
        }
    }
    Ok(conflicts)
}

// ---------------------------------------------------------------------------
// Greedy slot matching
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct SlotMatching {
    /// Accepted (arc index, triple index) pairs.
    pub pairs: Vec<(u32, u32)>,
    /// Per-graph-vertex tail-side acceptance counters (|Z_{x₁} ∩ M|).
    pub z_tail: Vec<u32>,
    /// Per-graph-vertex head-side acceptance counters (|Z_{x₂} ∩ M|).
    pub z_head: Vec<u32>,
    /// Per-base-vertex acceptance counters (|Z_i ∩ M|).
    pub z_base: Vec<u32>,
}

fn slots_ok(v1x: &BitSet, v2y: &BitSet, t: &[u32; 3]) -> bool {
    t.iter()
        .all(|&c| v1x.get(c as usize) && v2y.get(c as usize))
}

/// One greedy pass: arcs in seeded random order; per arc, random triple
/// probes then an exhaustive scan over the arc's free colours.  An arc stays
/// unmatched only if no currently-compatible conflict-free triple exists.
pub fn greedy_matching(
    d: &OrientedGraph,
    j: &BaseThreeGraph,
    xf: &XFamily,
    r: usize,
    seed: u64,
) -> SlotMatching {
    let n = d.n;
    let triples: Vec<[u32; 3]> = j.edges().copied().collect();
    let n_triples = triples.len();
    let mut by_colour: Vec<Vec<u32>> = vec![Vec::new(); j.n_vertices()];
    for (ti, t) in triples.iter().enumerate() {
        for &c in t {
            by_colour[c as usize].push(ti as u32);
        }
    }

    let mut rng = rng_from_seed(derive_seed(seed, 0x6d61_7463));
    let mut order: Vec<u32> = (0..d.arcs.len() as u32).collect();
    order.shuffle(&mut rng);

    // Free-slot bitsets start as the Y-memberships: a colour is usable for
    // (x, y) iff x, y are members AND neither copy-slot is consumed.
    let mut v1_free: Vec<BitSet> = xf.y.clone();
    let mut v2_free: Vec<BitSet> = xf.y.clone();
    let mut triple_used = vec![false; n_triples];
    let mut conflicts = SeparatorConflicts::new(r);

    let mut pairs = Vec::with_capacity(d.arcs.len());
    let mut z_tail = vec![0u32; n];
    let mut z_head = vec![0u32; n];
    let mut z_base = vec![0u32; j.n_vertices()];

    let u1 = j.u1_size as u32;
    let mut colours_buf: Vec<u32> = Vec::with_capacity(3);

    for &arc_idx in &order {
        let (x, y) = d.arcs[arc_idx as usize];
        let (xi, yi) = (x as usize, y as usize);
        let mut chosen: Option<u32> = None;

        if n_triples > 0 {
            for _ in 0..PROBE_CAP {
                let ti = rng.random_range(0..n_triples);
                if triple_used[ti] || !slots_ok(&v1_free[xi], &v2_free[yi], &triples[ti]) {
                    continue;
                }
                colours_buf.clear();
                colours_buf.extend(triples[ti].iter().copied().filter(|&c| c < u1));
                if conflicts.would_close(x, y, &colours_buf).is_none() {
                    chosen = Some(ti as u32);
                    break;
                }
            }
        }

        if chosen.is_none() {
            // Exhaustive: walk colours free on both sides, ascending, then
            // that colour's triples in construction order.
            'outer: for (wi, (&wa, &wb)) in v1_free[xi]
                .words()
                .iter()
                .zip(v2_free[yi].words())
                .enumerate()
            {
                let mut w = wa & wb;
                while w != 0 {
                    let c = wi * 64 + w.trailing_zeros() as usize;
                    w &= w - 1;
                    for &ti in &by_colour[c] {
                        let ti_us = ti as usize;
                        if triple_used[ti_us]
                            || !slots_ok(&v1_free[xi], &v2_free[yi], &triples[ti_us])
                        {
                            continue;
                        }
                        colours_buf.clear();
                        colours_buf.extend(triples[ti_us].iter().copied().filter(|&c| c < u1));
                        if conflicts.would_close(x, y, &colours_buf).is_none() {
                            chosen = Some(ti);
                            break 'outer;
                        }
                    }
                }
            }
        }

        if let Some(ti) = chosen {
            let t = triples[ti as usize];
            triple_used[ti as usize] = true;
            for &c in &t {
                v1_free[xi].clear(c as usize);
                v2_free[yi].clear(c as usize);
                z_base[c as usize] += 1;
            }
            colours_buf.clear();
            colours_buf.extend(t.iter().copied().filter(|&c| c < u1));
            conflicts.record(x, y, &colours_buf);
            z_tail[xi] += 1;
            z_head[yi] += 1;
            pairs.push((arc_idx, ti));
        }
    }

    pairs.sort_unstable();
    SlotMatching {
        pairs,
        z_tail,
        z_head,
        z_base,
    }
}

// ---------------------------------------------------------------------------
// Collection, extraction, validation
// ---------------------------------------------------------------------------

/// Parameters a separator collection was built for (and is validated
/// against).  `delta`/`l_max` describe the HOST graph's robust
/// connectivity; each member's own robustness thresholds are the
/// level-dependent `(eps^ℓ · delta / 2) · n^ℓ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparatorParams {
    pub delta: f64,
    pub l_max: u32,
    pub lambda: f64,
    pub eps: f64,
    pub eps_prime: f64,
    /// Number of 2-matchings = |U₁| of the base graph.
    pub t: usize,
}

/// An indexed collection of 2-matchings over the host graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparatorCollection {
    pub n: usize,
    pub t: usize,
    pub two_matchings: Vec<Vec<Edge>>,
    pub params: SeparatorParams,
}

impl SeparatorCollection {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("separator serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<SeparatorCollection, SeparatorError> {
        serde_json::from_str(text).map_err(|e| SeparatorError::Serde(e.to_string()))
    }

    /// Distinct covered edges.
    pub fn covered_edges(&self) -> Vec<Edge> {
        let mut edges: Vec<Edge> = self.two_matchings.iter().flatten().copied().collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    /// Map covered edge → sorted list of member indices containing it.
    pub fn signatures(&self) -> HashMap<Edge, Vec<u32>> {
        let mut sig: HashMap<Edge, Vec<u32>> = HashMap::new();
        for (i, q) in self.two_matchings.iter().enumerate() {
            for &e in q {
                sig.entry(e).or_default().push(i as u32);
            }
        }
        for v in sig.values_mut() {
            v.sort_unstable();
            v.dedup();
        }
        sig
    }
}

/// Turn matched (arc, triple) pairs into the indexed 2-matchings: edge `xy`
/// joins `Q_a` for every U₁ vertex `a` of its triple.  Errors if any member
/// exceeds degree 2 (impossible for genuine matchings).
pub fn extract_two_matchings(
    pairs: &[(u32, u32)],
    d: &OrientedGraph,
    j: &BaseThreeGraph,
) -> Result<Vec<Vec<Edge>>, SeparatorError> {
    let triples: Vec<[u32; 3]> = j.edges().copied().collect();
    let mut qs: Vec<Vec<Edge>> = vec![Vec::new(); j.u1_size];
    for &(arc_idx, ti) in pairs {
        let (x, y) = d.arcs[arc_idx as usize];
        for &a in &triples[ti as usize] {
            if (a as usize) < j.u1_size {
                qs[a as usize].push(norm_edge(x, y));
            }
        }
    }
    for (index, q) in qs.iter_mut().enumerate() {
        q.sort_unstable();
        q.dedup();
        let mut deg: HashMap<u32, usize> = HashMap::new();
        for &(u, v) in q.iter() {
            *deg.entry(u).or_default() += 1;
            *deg.entry(v).or_default() += 1;
        }
        if let Some((_, &degree)) = deg.iter().max_by_key(|&(_, &d)| d) {
            if degree > 2 {
                return Err(SeparatorError::NotAMatching { index, degree });
            }
        }
    }
    Ok(qs)
}

/// Decompose a 2-matching (max degree ≤ 2) into its path and cycle
/// components, both as vertex sequences (a cycle lists each vertex once;
/// the closing edge back to the first vertex is implicit).
pub(crate) fn decompose_two_matching(n: usize, edges: &[Edge]) -> (Vec<Vec<u32>>, Vec<Vec<u32>>) {
    let mut adj: HashMap<u32, Vec<u32>> = HashMap::new();
    for &(u, v) in edges {
        adj.entry(u).or_default().push(v);
        adj.entry(v).or_default().push(u);
    }
    let mut seen = BitSet::new(n);
    let mut paths = Vec::new();
    let mut cycles = Vec::new();
    // Paths: start from degree-1 vertices.
    let mut starts: Vec<u32> = adj
        .iter()
        .filter(|(_, nb)| nb.len() == 1)
        .map(|(&v, _)| v)
        .collect();
    starts.sort_unstable();
    for s in starts {
        if seen.get(s as usize) {
            continue;
        }
        let mut walk = vec![s];
        seen.set(s as usize);
        let mut cur = s;
        loop {
            let next = adj[&cur]
                .iter()
                .copied()
                .find(|&w| !seen.get(w as usize));
            match next {
                Some(w) => {
                    seen.set(w as usize);
                    walk.push(w);
                    cur = w;
                }
                None => break,
            }
        }
        paths.push(walk);
    }
    // Remaining components are cycles.
    let mut keys: Vec<u32> = adj.keys().copied().collect();
    keys.sort_unstable();
    for s in keys {
        if seen.get(s as usize) {
            continue;
        }
        let mut walk = vec![s];
        let mut cur = s;
        seen.set(s as usize);
        loop {
            let next = adj[&cur]
                .iter()
                .copied()
                .find(|&w| !seen.get(w as usize));
            match next {
                Some(w) => {
                    seen.set(w as usize);
                    walk.push(w);
                    cur = w;
                }
                None => break,
            }
        }
        cycles.push(walk);
    }
    (paths, cycles)
}

/// Validation report over the five separator properties.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeparatorReport {
    pub checks: Vec<PropertyCheck>,
}

impl SeparatorReport {
    pub fn check(&self, name: &str) -> &PropertyCheck {
        self.checks
            .iter()
            .find(|c| c.name == name)
            .unwrap_or_else(|| panic!("no check named {name}"))
    }

    /// The structurally-guaranteed properties (degree bound, multiplicity,
    /// strong separation, size).  The measured asymptotic targets (path
    /// counts, endpoint counts, leftover degree, cycle length) may honestly
    /// fail at desk scale and are reported separately.
    pub fn structural_ok(&self) -> bool {
        ["degree-bound", "Q2-size", "Q2-separation", "Q4-multiplicity"]
            .iter()
            .all(|name| self.check(name).pass)
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn summary(&self) -> String {
        self.checks
            .iter()
            .map(|c| {
                format!(
                    "{:22} {}  measured {:.3} vs allowed {:.3}  ({})",
                    c.name,
                    if c.pass { "pass" } else { "FAIL" },
                    c.measured,
                    c.allowed,
                    c.detail
                )
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Re-measure every separator property from scratch.  Reports only; the
/// asymptotic targets (ε′-scaled) may fail honestly at desk scale.
pub fn validate_separator(g: &Graph, s: &SeparatorCollection) -> SeparatorReport {
    let n = g.n();
    let nf = n as f64;
    let epsp = s.params.eps_prime;
    let mut checks = Vec::new();

    // Degree bound: every member has max degree ≤ 2.
    let mut worst_deg = 0usize;
    for q in &s.two_matchings {
        let mut deg: HashMap<u32, usize> = HashMap::new();
        for &(u, v) in q {
            *deg.entry(u).or_default() += 1;
            *deg.entry(v).or_default() += 1;
        }
        worst_deg = worst_deg.max(deg.values().copied().max().unwrap_or(0));
    }
    checks.push(PropertyCheck {
        name: "degree-bound".into(),
        pass: worst_deg <= 2,
        measured: worst_deg as f64,
        allowed: 2.0,
        detail: "max degree over all 2-matchings".into(),
    });

    // Q1: compactness — minimum cycle length and maximum per-member path
    // count; plus sampled robust-connectivity below.
    let mut min_cycle = usize::MAX;
    let mut max_paths = 0usize;
    for q in &s.two_matchings {
        let (paths, cycles) = decompose_two_matching(n, q);
        max_paths = max_paths.max(paths.len());
        if let Some(c) = cycles.iter().map(|c| c.len()).min() {
            min_cycle = min_cycle.min(c);
        }
    }
    let cycle_threshold = 1.0 / epsp;
    checks.push(PropertyCheck {
        name: "Q1-cycle-length".into(),
        pass: min_cycle == usize::MAX || (min_cycle as f64) >= cycle_threshold - 1e-9,
        measured: if min_cycle == usize::MAX {
            f64::INFINITY
        } else {
            min_cycle as f64
        },
        allowed: cycle_threshold,
        detail: "min cycle length (allowed is a lower bound)".into(),
    });
    checks.push(PropertyCheck {
        name: "Q1-path-count".into(),
        pass: (max_paths as f64) <= epsp * nf,
        measured: max_paths as f64,
        allowed: epsp * nf,
        detail: "max path count per member".into(),
    });

    // Q1 robust connectivity, sampled: pairs inside V(Qᵢ) must have, for
    // some ℓ ≤ L, at least (eps^ℓ·delta/2)·n^ℓ paths with ℓ inner vertices
    // avoiding V(Qᵢ).
    let mut rc_checked = 0u64;
    let mut rc_failures = 0u64;
    let mut rc_worst_ratio = f64::INFINITY;
    {
        let mut rng = rng_from_seed(derive_seed(0x5643_4845, s.t as u64));
        let sample_members: Vec<usize> = {
            let mut idx: Vec<usize> = (0..s.two_matchings.len())
                .filter(|&i| !s.two_matchings[i].is_empty())
                .collect();
            idx.shuffle(&mut rng);
            idx.truncate(8);
            idx.sort_unstable();
            idx
        };
        for &i in &sample_members {
            let q = &s.two_matchings[i];
            let mut verts: Vec<u32> = q.iter().flat_map(|&(u, v)| [u, v]).collect();
            verts.sort_unstable();
            verts.dedup();
            if verts.len() < 2 {
                continue;
            }
            let mut forbidden = BitSet::new(n);
            for &v in &verts {
                forbidden.set(v as usize);
            }
            for _ in 0..6 {
                let a = verts[rng.random_range(0..verts.len())];
                let b = verts[rng.random_range(0..verts.len())];
                if a == b {
                    continue;
                }
                rc_checked += 1;
                let mut ok = false;
                let mut best_ratio = 0.0f64;
                for ell in 1..=s.params.l_max {
                    let need =
                        s.params.eps.powi(ell as i32) * s.params.delta / 2.0 * nf.powi(ell as i32);
                    let have = count_internal_paths(g, a, b, ell, &forbidden)
                        .map(|c| c as f64)
                        .unwrap_or(0.0);
                    if need > 0.0 {
                        best_ratio = best_ratio.max(have / need);
                    }
                    if have >= need {
                        ok = true;
                        break;
                    }
                }
                if !ok {
                    rc_failures += 1;
                }
                rc_worst_ratio = rc_worst_ratio.min(best_ratio);
            }
        }
    }
    checks.push(PropertyCheck {
        name: "Q1-robust-conn".into(),
        pass: rc_failures == 0,
        measured: rc_failures as f64,
        allowed: 0.0,
        detail: format!(
            "sampled {} pairs, worst count/threshold ratio {:.3}",
            rc_checked,
            if rc_worst_ratio.is_finite() {
                rc_worst_ratio
            } else {
                f64::NAN
            }
        ),
    });

    // Q2: size and exact strong separation of E(Q) (signature antichain).
    checks.push(PropertyCheck {
        name: "Q2-size".into(),
        pass: s.two_matchings.len() == s.t && s.t == s.params.t,
        measured: s.two_matchings.len() as f64,
        allowed: s.params.t as f64,
        detail: "collection size must equal t".into(),
    });
    let sigs = s.signatures();
    let mut by_sig: HashMap<&[u32], u32> = HashMap::new();
    for sig in sigs.values() {
        *by_sig.entry(sig.as_slice()).or_default() += 1;
    }
    let mut q2_violations = 0u64;
    for (&sig, &count) in &by_sig {
        if count > 1 {
            q2_violations += (count as u64) * (count as u64 - 1);
        }
        if sig.len() == 3 {
            for drop in 0..3 {
                let sub: Vec<u32> = sig
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != drop)
                    .map(|(_, &v)| v)
                    .collect();
                if let Some(&c2) = by_sig.get(sub.as_slice()) {
                    q2_violations += count as u64 * c2 as u64;
                }
            }
        }
        if sig.is_empty() {
            q2_violations += count as u64;
        }
    }
    checks.push(PropertyCheck {
        name: "Q2-separation".into(),
        pass: q2_violations == 0,
        measured: q2_violations as f64,
        allowed: 0.0,
        detail: format!("{} covered edges, exact antichain scan", sigs.len()),
    });

    // Q3: per-vertex path-endpoint count over all members.
    let mut endpoint_count = vec![0u64; n];
    for q in &s.two_matchings {
        let (paths, _) = decompose_two_matching(n, q);
        for p in paths {
            if p.len() >= 2 {
                endpoint_count[p[0] as usize] += 1;
                endpoint_count[*p.last().unwrap() as usize] += 1;
            }
        }
    }
    let q3_measured = endpoint_count.iter().copied().max().unwrap_or(0) as f64;
    checks.push(PropertyCheck {
        name: "Q3-endpoints".into(),
        pass: q3_measured <= epsp * nf,
        measured: q3_measured,
        allowed: epsp * nf,
        detail: "max per-vertex path endpoints".into(),
    });

    // Q4: per-edge multiplicity ≤ 3 (and never exactly 1 by construction).
    let max_mult = sigs.values().map(|v| v.len()).max().unwrap_or(0);
    let singletons = sigs.values().filter(|v| v.len() == 1).count();
    checks.push(PropertyCheck {
        name: "Q4-multiplicity".into(),
        pass: max_mult <= 3,
        measured: max_mult as f64,
        allowed: 3.0,
        detail: format!("{singletons} edges with multiplicity 1 (expect 0)"),
    });

    // Q5: max degree of the uncovered remainder.
    let mut covered_deg = vec![0u64; n];
    for &(u, v) in sigs.keys() {
        covered_deg[u as usize] += 1;
        covered_deg[v as usize] += 1;
    }
    let q5_measured = exec::map_indices(n, |v| g.degree(v as u32) as f64 - covered_deg[v] as f64)
        .into_iter()
        .fold(0.0f64, f64::max);
    checks.push(PropertyCheck {
        name: "Q5-leftover-degree".into(),
        pass: q5_measured <= epsp * nf,
        measured: q5_measured,
        allowed: epsp * nf,
        detail: "max degree of host minus covered edges".into(),
    });

    SeparatorReport { checks }
}

// ---------------------------------------------------------------------------
// Full pipeline
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeparatorDiagnostics {
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub arcs: usize,
    pub matched: usize,
    pub coverage: f64,
    pub base_attempts: usize,
    pub stage_attempts: usize,
    pub restart_selected: usize,
    pub orientation_max_dev: f64,
    pub x_stats: XFamilyStats,
    pub members_subset_of_x: bool,
}

pub struct SeparatorOutcome {
    pub collection: SeparatorCollection,
    pub report: SeparatorReport,
    pub diagnostics: SeparatorDiagnostics,
}

/// Run the full pipeline: orient, base graph, X family, conflict-free slot
/// matching (parallel restarts, best coverage wins), extraction, validation.
/// Structural properties (degree ≤ 2, multiplicity ≤ 3, strong separation of
/// the covered set, |Q| = t) are required; asymptotic ε′-targets are
/// measured and reported.
pub fn build_separator(
    g: &Graph,
    delta: f64,
    l_max: u32,
    eps: f64,
    eps_prime: f64,
    seed: u64,
) -> Result<SeparatorOutcome, SeparatorError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(SeparatorError::BadParameter {
            what: "eps",
            value: eps,
        });
    }
    if !(eps_prime > 0.0 && eps_prime < 1.0) {
        return Err(SeparatorError::BadParameter {
            what: "eps_prime",
            value: eps_prime,
        });
    }
    if g.m() == 0 || g.n() < 4 {
        return Err(SeparatorError::Degenerate(format!(
            "need a nonempty host graph on ≥ 4 vertices, got n = {}, m = {}",
            g.n(),
            g.m()
        )));
    }
    let n = g.n();
    let alpha = g.regularity();
    let beta = (3.0 * alpha + 1.0).sqrt() - 1.0;
    let lambda = beta / (1.0 - eps);
    let r = ((1.0 / eps_prime) + 1e-9).floor() as usize;

    let mut last_detail = String::new();
    for attempt in 0..STAGE_RETRY_CAP {
        let stage_seed = derive_seed(seed, 0x7374_6167 + attempt as u64);
        let d = orient_random(g, derive_seed(stage_seed, 1));
        let (j, _params, base_attempts) =
            build_base(n, alpha, lambda, derive_seed(stage_seed, 2))?;
        let xf = sample_x_family(g, &j, eps, derive_seed(stage_seed, 3));

        let runs: Vec<SlotMatching> = exec::map_indices(SEPARATOR_RESTARTS, |restart| {
            greedy_matching(&d, &j, &xf, r, derive_seed(stage_seed, 100 + restart as u64))
        });
        let restart_selected = runs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.pairs.len().cmp(&b.1.pairs.len()).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let matching = &runs[restart_selected];
        let coverage = matching.pairs.len() as f64 / d.arcs.len().max(1) as f64;
        if coverage < 0.5 {
            last_detail = format!(
                "attempt {attempt}: coverage {coverage:.3} below 0.5 ({} of {} arcs)",
                matching.pairs.len(),
                d.arcs.len()
            );
            continue;
        }

        let qs = extract_two_matchings(&matching.pairs, &d, &j)?;
        // Invariant: V(Qᵢ) ⊆ Xᵢ.
        let members_subset_of_x = qs.iter().enumerate().all(|(i, q)| {
            q.iter()
                .all(|&(u, v)| xf.member[i].get(u as usize) && xf.member[i].get(v as usize))
        });

        let params = SeparatorParams {
            delta,
            l_max,
            lambda,
            eps,
            eps_prime,
            t: j.u1_size,
        };
        let collection = SeparatorCollection {
            n,
            t: j.u1_size,
            two_matchings: qs,
            params,
        };
        let report = validate_separator(g, &collection);
        if !report.structural_ok() {
            last_detail = format!(
                "attempt {attempt}: structural check failed\n{}",
                report.summary()
            );
            continue;
        }
        let diagnostics = SeparatorDiagnostics {
            alpha,
            beta,
            lambda,
            arcs: d.arcs.len(),
            matched: matching.pairs.len(),
            coverage,
            base_attempts,
            stage_attempts: attempt + 1,
            restart_selected,
            orientation_max_dev: d.max_degree_deviation(alpha * n as f64 / 2.0),
            x_stats: xf.stats(),
            members_subset_of_x,
        };
        return Ok(SeparatorOutcome {
            collection,
            report,
            diagnostics,
        });
    }
    Err(SeparatorError::StageFailed {
        stage: "separator",
        attempts: STAGE_RETRY_CAP,
        detail: last_detail,
    })
}
