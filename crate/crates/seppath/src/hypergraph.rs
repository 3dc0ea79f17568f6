//! Uniform hypergraphs, conflict systems, and a conflict-free matching engine.
//!
//! The construction stages phrase their randomized choices as matchings in
//! auxiliary hypergraphs whose "conflicts" encode forbidden patterns (for
//! example short monochromatic directed cycles).  The engine here is a
//! seeded multi-restart randomized greedy: it certifies the exact properties
//! (vertex-disjointness, conflict-freeness, maximality) on every run, while
//! the near-perfect matching *size* promised by the asymptotic theory is
//! treated as an empirical quantity, reported but never assumed.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use thiserror::Error;

use crate::exec;
use crate::util::{derive_seed, rng_from_seed, BitSet};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HypergraphError {
    #[error("hyperedge {index} does not have exactly {k} distinct vertices")]
    BadHyperedge { index: usize, k: usize },
    #[error("vertex {v} out of range for n = {n}")]
    VertexOutOfRange { v: u32, n: usize },
    #[error("duplicate hyperedge at index {0}")]
    DuplicateHyperedge(usize),
    #[error("j = {j} out of range 1..={k}")]
    JOutOfRange { j: usize, k: usize },
    #[error("enumeration budget exceeded: {0}")]
    Budget(String),
    #[error("{0}")]
    Domain(String),
}

/// Signal that a lazily enumerated conflict listing hit its budget.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("conflict enumeration budget exceeded")]
pub struct BudgetExceeded;

/// A k-uniform hypergraph over vertices `0..n`; hyperedges stored sorted.
#[derive(Clone, Debug)]
pub struct UniformHypergraph {
    k: usize,
    n: usize,
    edges: Vec<Vec<u32>>,
}

impl UniformHypergraph {
    pub fn new(
        k: usize,
        n: usize,
        edges: Vec<Vec<u32>>,
    ) -> Result<UniformHypergraph, HypergraphError> {
        let mut sorted_edges = Vec::with_capacity(edges.len());
        for (index, mut e) in edges.into_iter().enumerate() {
            e.sort_unstable();
            e.dedup();
            if e.len() != k {
                return Err(HypergraphError::BadHyperedge { index, k });
            }
            if let Some(&v) = e.iter().find(|&&v| v as usize >= n) {
                return Err(HypergraphError::VertexOutOfRange { v, n });
            }
            sorted_edges.push(e);
        }
        let mut seen: HashMap<&[u32], usize> = HashMap::with_capacity(sorted_edges.len());
        for (i, e) in sorted_edges.iter().enumerate() {
            if seen.insert(e.as_slice(), i).is_some() {
                return Err(HypergraphError::DuplicateHyperedge(i));
            }
        }
        Ok(UniformHypergraph {
            k,
            n,
            edges: sorted_edges,
        })
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Vec<u32>] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> &[u32] {
        &self.edges[i]
    }
}

fn subsets_of(edge: &[u32], j: usize, mut visit: impl FnMut(&[u32])) {
    fn rec(
        edge: &[u32],
        j: usize,
        start: usize,
        depth: usize,
        buf: &mut Vec<u32>,
        visit: &mut impl FnMut(&[u32]),
    ) {
        if depth == j {
            visit(buf);
            return;
        }
        for i in start..edge.len() {
            buf.push(edge[i]);
            rec(edge, j, i + 1, depth + 1, buf, visit);
            buf.pop();
        }
    }
    let mut buf = Vec::with_capacity(j);
    rec(edge, j, 0, 0, &mut buf, &mut visit);
}

/// Min/max, over all j-sets of vertices *occurring inside some hyperedge*,
/// of the number of hyperedges containing the set.  Sufficient for the
/// degree-condition checks; see [`degree_stats_exhaustive`] for the variant
/// that also counts j-sets lying in no hyperedge (as zeros).
pub fn degree_stats(
    h: &UniformHypergraph,
    j: usize,
) -> Result<(u64, u64), HypergraphError> {
    if j < 1 || j > h.k {
        return Err(HypergraphError::JOutOfRange { j, k: h.k });
    }
    let mut counts: HashMap<Vec<u32>, u64> = HashMap::new();
    for e in &h.edges {
        subsets_of(e, j, |s| {
            *counts.entry(s.to_vec()).or_insert(0) += 1;
        });
    }
    if counts.is_empty() {
        return Ok((0, 0));
    }
    let min = counts.values().copied().min().unwrap();
    let max = counts.values().copied().max().unwrap();
    Ok((min, max))
}

/// As [`degree_stats`], but ranging over *every* j-subset of `0..n`, so
/// j-sets in no hyperedge drive the minimum to zero.  Exponential in `j`;
/// refuses instances with more than ~10⁶ subsets.
pub fn degree_stats_exhaustive(
    h: &UniformHypergraph,
    j: usize,
) -> Result<(u64, u64), HypergraphError> {
    if j < 1 || j > h.k {
        return Err(HypergraphError::JOutOfRange { j, k: h.k });
    }
    let mut total: u128 = 1;
    for i in 0..j {
        total = total * (h.n - i) as u128 / (i + 1) as u128;
    }
    if total > 1_000_000 {
        return Err(HypergraphError::Budget(format!(
            "C({}, {j}) = {total} subsets exceeds the exhaustive cap",
            h.n
        )));
    }
    let (min_occ, max) = degree_stats(h, j)?;
    let mut occurring: u128 = 0;
    let mut counted: HashMap<Vec<u32>, ()> = HashMap::new();
    for e in &h.edges {
        subsets_of(e, j, |s| {
            counted.entry(s.to_vec()).or_insert(());
        });
    }
    occurring += counted.len() as u128;
    let min = if occurring < total { 0 } else { min_occ };
    Ok((min, max))
}

/// A conflict system over the hyperedge indices of a host hypergraph.
///
/// Conflicts may be numerous, so the interface is lazy: the matching engine
/// only ever asks whether a candidate would *complete* a conflict against
/// the already-chosen set, and the exhaustive checks enumerate conflicts
/// per hyperedge under a budget.
pub trait ConflictSystem: Sync {
    /// `(min, max)` conflict sizes; `(0, 0)` when empty.
    fn size_range(&self) -> (usize, usize);

    /// Would adding hyperedge `candidate` to the chosen set complete some
    /// conflict, i.e. is there a conflict `C` with `candidate ∈ C` and
    /// `C ∖ {candidate} ⊆ chosen`?
    fn completes(&self, candidate: usize, chosen: &BitSet) -> bool;

    /// Every conflict containing `edge`, as sorted lists of hyperedge
    /// indices.  Each produced conflict decrements `budget`; exhaustion
    /// aborts with [`BudgetExceeded`].
    fn conflicts_containing(
        &self,
        edge: usize,
        budget: &mut u64,
    ) -> Result<Vec<Vec<u32>>, BudgetExceeded>;
}

/// The empty conflict system.
pub struct NoConflicts;

impl ConflictSystem for NoConflicts {
    fn size_range(&self) -> (usize, usize) {
        (0, 0)
    }
    fn completes(&self, _candidate: usize, _chosen: &BitSet) -> bool {
        false
    }
    fn conflicts_containing(
        &self,
        _edge: usize,
        _budget: &mut u64,
    ) -> Result<Vec<Vec<u32>>, BudgetExceeded> {
        Ok(Vec::new())
    }
}

/// A conflict system given by an explicit list of conflicts.
pub struct ExplicitConflicts {
    sets: Vec<Vec<u32>>,
    by_edge: HashMap<u32, Vec<u32>>,
}

impl ExplicitConflicts {
    pub fn new(sets: Vec<Vec<u32>>) -> ExplicitConflicts {
        let mut sets: Vec<Vec<u32>> = sets
            .into_iter()
            .map(|mut s| {
                s.sort_unstable();
                s.dedup();
                s
            })
            .collect();
        sets.sort();
        sets.dedup();
        let mut by_edge: HashMap<u32, Vec<u32>> = HashMap::new();
        for (i, s) in sets.iter().enumerate() {
            for &e in s {
                by_edge.entry(e).or_default().push(i as u32);
            }
        }
        ExplicitConflicts { sets, by_edge }
    }

    pub fn sets(&self) -> &[Vec<u32>] {
        &self.sets
    }
}

impl ConflictSystem for ExplicitConflicts {
    fn size_range(&self) -> (usize, usize) {
        match (
            self.sets.iter().map(Vec::len).min(),
            self.sets.iter().map(Vec::len).max(),
        ) {
            (Some(a), Some(b)) => (a, b),
            _ => (0, 0),
        }
    }

    fn completes(&self, candidate: usize, chosen: &BitSet) -> bool {
        let Some(ids) = self.by_edge.get(&(candidate as u32)) else {
            return false;
        };
        ids.iter().any(|&ci| {
            self.sets[ci as usize]
                .iter()
                .all(|&e| e as usize == candidate || chosen.get(e as usize))
        })
    }

    fn conflicts_containing(
        &self,
        edge: usize,
        budget: &mut u64,
    ) -> Result<Vec<Vec<u32>>, BudgetExceeded> {
        let Some(ids) = self.by_edge.get(&(edge as u32)) else {
            return Ok(Vec::new());
        };
        let mut out = Vec::with_capacity(ids.len());
        for &ci in ids {
            if *budget == 0 {
                return Err(BudgetExceeded);
            }
            *budget -= 1;
            out.push(self.sets[ci as usize].clone());
        }
        Ok(out)
    }
}

/// A named set of hyperedge indices whose coverage by the matching is
/// reported (and drives restart selection).
#[derive(Clone, Debug)]
pub struct TrackedSet {
    pub name: String,
    pub members: Vec<u32>,
}

#[derive(Clone, Debug, Default)]
pub struct MatchOpts {
    /// Independent seeded restarts; the best run is returned.
    pub restarts: usize,
    /// Optional cap on hyperedges considered per restart.  A truncated pass
    /// still yields a valid conflict-free matching, but not a maximal one.
    pub iteration_cap: Option<u64>,
}

impl MatchOpts {
    pub fn with_restarts(restarts: usize) -> MatchOpts {
        MatchOpts {
            restarts,
            iteration_cap: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrackedCoverage {
    pub name: String,
    pub size: usize,
    pub covered: usize,
}

#[derive(Clone, Debug)]
pub struct MatchingStats {
    pub restarts_run: usize,
    pub selected_restart: usize,
    pub considered: u64,
    pub skipped_vertex: u64,
    pub skipped_conflict: u64,
    pub tracked: Vec<TrackedCoverage>,
}

#[derive(Clone, Debug)]
pub struct MatchingResult {
    /// Chosen hyperedge indices, sorted ascending.
    pub chosen: Vec<u32>,
    pub stats: MatchingStats,
}

struct RestartRun {
    chosen: Vec<u32>,
    considered: u64,
    skipped_vertex: u64,
    skipped_conflict: u64,
    coverage_total: usize,
}

fn greedy_pass(
    h: &UniformHypergraph,
    c: &dyn ConflictSystem,
    tracked: &[TrackedSet],
    seed: u64,
    cap: Option<u64>,
) -> RestartRun {
    let m = h.num_edges();
    let mut rng = rng_from_seed(seed);
    let mut order: Vec<u32> = (0..m as u32).collect();
    order.shuffle(&mut rng);
    let mut used = BitSet::new(h.n());
    let mut chosen_set = BitSet::new(m);
    let mut chosen: Vec<u32> = Vec::new();
    let (mut considered, mut skipped_vertex, mut skipped_conflict) = (0u64, 0u64, 0u64);
    for &ei in &order {
        if cap.map_or(false, |c| considered >= c) {
            break;
        }
        considered += 1;
        let edge = h.edge(ei as usize);
        if edge.iter().any(|&v| used.get(v as usize)) {
            skipped_vertex += 1;
            continue;
        }
        if c.completes(ei as usize, &chosen_set) {
            skipped_conflict += 1;
            continue;
        }
        for &v in edge {
            used.set(v as usize);
        }
        chosen_set.set(ei as usize);
        chosen.push(ei);
    }
    chosen.sort_unstable();
    let coverage_total = tracked
        .iter()
        .map(|z| z.members.iter().filter(|&&e| chosen_set.get(e as usize)).count())
        .sum();
    RestartRun {
        chosen,
        considered,
        skipped_vertex,
        skipped_conflict,
        coverage_total,
    }
}

/// Seeded multi-restart randomized greedy conflict-free matching.
///
/// Each restart shuffles the hyperedges and takes every edge that neither
/// collides with the partial matching nor completes a conflict.  Both skip
/// conditions are monotone in the chosen set, so the result of an uncapped
/// pass is maximal.  Among restarts the winner maximizes total tracked-set
/// coverage, then matching size, ties resolved toward the lowest restart
/// index — a deterministic rule, so identical inputs give identical output
/// regardless of thread scheduling.
pub fn find_conflict_free_matching(
    h: &UniformHypergraph,
    c: &dyn ConflictSystem,
    tracked: &[TrackedSet],
    seed: u64,
    opts: &MatchOpts,
) -> MatchingResult {
    let restarts = opts.restarts.max(1);
    let runs: Vec<RestartRun> = exec::map_indices(restarts, |r| {
        greedy_pass(h, c, tracked, derive_seed(seed, r as u64), opts.iteration_cap)
    });
    let mut best = 0usize;
    for i in 1..runs.len() {
        let better = (runs[i].coverage_total, runs[i].chosen.len())
            > (runs[best].coverage_total, runs[best].chosen.len());
        if better {
            best = i;
        }
    }
    let win = &runs[best];
    let mut chosen_set = BitSet::new(h.num_edges());
    for &e in &win.chosen {
        chosen_set.set(e as usize);
    }
    let tracked_stats = tracked
        .iter()
        .map(|z| TrackedCoverage {
            name: z.name.clone(),
            size: z.members.len(),
            covered: z
                .members
                .iter()
                .filter(|&&e| chosen_set.get(e as usize))
                .count(),
        })
        .collect();
    MatchingResult {
        chosen: win.chosen.clone(),
        stats: MatchingStats {
            restarts_run: restarts,
            selected_restart: best,
            considered: win.considered,
            skipped_vertex: win.skipped_vertex,
            skipped_conflict: win.skipped_conflict,
            tracked: tracked_stats,
        },
    }
}

/// Exhaustive post-hoc validity scan: pairwise vertex-disjoint and no
/// conflict completed within the chosen set.
pub fn is_valid_matching(h: &UniformHypergraph, c: &dyn ConflictSystem, chosen: &[u32]) -> bool {
    let mut used = BitSet::new(h.n());
    for &e in chosen {
        for &v in h.edge(e as usize) {
            if used.get(v as usize) {
                return false;
            }
            used.set(v as usize);
        }
    }
    let mut chosen_set = BitSet::new(h.num_edges());
    for &e in chosen {
        chosen_set.set(e as usize);
    }
    for &e in chosen {
        chosen_set.clear(e as usize);
        if c.completes(e as usize, &chosen_set) {
            chosen_set.set(e as usize);
            return false;
        }
        chosen_set.set(e as usize);
    }
    true
}

/// `true` iff no hyperedge outside `chosen` could be added without breaking
/// disjointness or completing a conflict.
pub fn is_maximal_matching(h: &UniformHypergraph, c: &dyn ConflictSystem, chosen: &[u32]) -> bool {
    let mut used = BitSet::new(h.n());
    let mut chosen_set = BitSet::new(h.num_edges());
    for &e in chosen {
        chosen_set.set(e as usize);
        for &v in h.edge(e as usize) {
            used.set(v as usize);
        }
    }
    for e in 0..h.num_edges() {
        if chosen_set.get(e) {
            continue;
        }
        let blocked = h.edge(e).iter().any(|&v| used.get(v as usize))
            || c.completes(e, &chosen_set);
        if !blocked {
            return false;
        }
    }
    true
}

/// Outcome of the degree-condition checks on a conflict system.
#[derive(Clone, Debug)]
pub struct ConflictBoundsReport {
    /// `false` iff the enumeration budget ran out before all conflicts were
    /// listed; in that case the per-condition verdicts are not trustworthy.
    pub conclusive: bool,
    pub conflicts_seen: usize,
    /// First violation per condition (`None` = passed).
    pub c1_violation: Option<String>,
    pub c2_violation: Option<String>,
    pub c3_violation: Option<String>,
}

impl ConflictBoundsReport {
    pub fn all_pass(&self) -> bool {
        self.conclusive
            && self.c1_violation.is_none()
            && self.c2_violation.is_none()
            && self.c3_violation.is_none()
    }
}

/// Exhaustively verify the three degree conditions that make a conflict
/// system `(d, ell, rho)`-bounded:
///
/// 1. every conflict has size in `[3, ell]`;
/// 2. every hyperedge lies in at most `ell·d^(j−1)` conflicts of size `j`;
/// 3. every set of `j'` hyperedges (`2 ≤ j' < j`) lies in at most
///    `ell·d^(j−j'−rho)` conflicts of size `j`.
///
/// Enumeration is capped at `max_conflicts`; exceeding it yields an
/// inconclusive report rather than a wrong verdict.
pub fn check_bounded_conflicts(
    h: &UniformHypergraph,
    c: &dyn ConflictSystem,
    d: f64,
    ell: usize,
    rho: f64,
    max_conflicts: u64,
) -> ConflictBoundsReport {
    let mut budget = max_conflicts;
    let mut all: Vec<Vec<u32>> = Vec::new();
    let mut seen: HashMap<Vec<u32>, ()> = HashMap::new();
    for e in 0..h.num_edges() {
        match c.conflicts_containing(e, &mut budget) {
            Ok(list) => {
                for conf in list {
                    debug_assert!(conf.windows(2).all(|w| w[0] < w[1]));
                    if seen.insert(conf.clone(), ()).is_none() {
                        all.push(conf);
                    }
                }
            }
            Err(BudgetExceeded) => {
                return ConflictBoundsReport {
                    conclusive: false,
                    conflicts_seen: all.len(),
                    c1_violation: None,
                    c2_violation: None,
                    c3_violation: None,
                };
            }
        }
    }

    let c1_violation = all
        .iter()
        .find(|conf| conf.len() < 3 || conf.len() > ell)
        .map(|conf| format!("conflict {conf:?} has size {} outside [3, {ell}]", conf.len()));

    let mut c2_violation = None;
    let mut c3_violation = None;
    let max_size = all.iter().map(Vec::len).max().unwrap_or(0);
    for j in 3..=max_size.max(3) {
        let of_size_j: Vec<&Vec<u32>> = all.iter().filter(|conf| conf.len() == j).collect();
        if of_size_j.is_empty() {
            continue;
        }
        // Condition 2: per-hyperedge counts.
        if c2_violation.is_none() {
            let mut per_edge: HashMap<u32, u64> = HashMap::new();
            for conf in &of_size_j {
                for &e in conf.iter() {
                    *per_edge.entry(e).or_insert(0) += 1;
                }
            }
            let bound = ell as f64 * d.powi(j as i32 - 1);
            if let Some((&e, &cnt)) = per_edge.iter().find(|(_, &cnt)| cnt as f64 > bound) {
                c2_violation = Some(format!(
                    "hyperedge {e} lies in {cnt} size-{j} conflicts > {bound:.3}"
                ));
            }
        }
        // Condition 3: per-(j'-set) counts.
        if c3_violation.is_none() {
            'jp: for jp in 2..j {
                let mut per_set: HashMap<Vec<u32>, u64> = HashMap::new();
                for conf in &of_size_j {
                    subsets_of(conf, jp, |s| {
                        *per_set.entry(s.to_vec()).or_insert(0) += 1;
                    });
                }
                let bound = ell as f64 * d.powf(j as f64 - jp as f64 - rho);
                for (s, &cnt) in &per_set {
                    if cnt as f64 > bound {
                        c3_violation = Some(format!(
                            "{jp}-set {s:?} lies in {cnt} size-{j} conflicts > {bound:.3}"
                        ));
                        break 'jp;
                    }
                }
            }
        }
    }
    ConflictBoundsReport {
        conclusive: true,
        conflicts_seen: all.len(),
        c1_violation,
        c2_violation,
        c3_violation,
    }
}

/// Upper limit on `n` for [`count_cycles_containing`].
pub const MAX_CYCLE_VERTICES: usize = 9;

/// Exact number of simple directed `j`-cycles of the complete digraph on
/// `n` vertices that contain every arc of `r`.
///
/// Requires `2 ≤ j`, `|r| < j` after deduplication, and
/// `n ≤ `[`MAX_CYCLE_VERTICES`].  Cycles are enumerated canonically (lowest
/// vertex first); arcs of `r` force the successor of their tail, which
/// prunes the enumeration to roughly `n^(j-|r|-1)` leaves.
pub fn count_cycles_containing(
    n: usize,
    r: &[(u32, u32)],
    j: usize,
) -> Result<u64, HypergraphError> {
    if n > MAX_CYCLE_VERTICES {
        return Err(HypergraphError::Budget(format!(
            "n = {n} exceeds the cycle-enumeration cap {MAX_CYCLE_VERTICES}"
        )));
    }
    if j < 2 {
        return Err(HypergraphError::Domain(format!(
            "cycle length j = {j} must be at least 2"
        )));
    }
    let mut arcs: Vec<(u32, u32)> = r.to_vec();
    arcs.sort_unstable();
    arcs.dedup();
    for &(u, v) in &arcs {
        if u as usize >= n || v as usize >= n {
            return Err(HypergraphError::VertexOutOfRange {
                v: u.max(v),
                n,
            });
        }
        if u == v {
            return Err(HypergraphError::Domain(format!("self-loop arc ({u}, {v})")));
        }
    }
    if arcs.len() >= j {
        return Err(HypergraphError::Domain(format!(
            "|r| = {} must be smaller than j = {j}",
            arcs.len()
        )));
    }

    // A vertex appears once in a simple cycle, so an arc of r fixes the
    // successor of its tail and the predecessor of its head; two arcs out
    // of (or into) one vertex make the count zero.
    let mut forced_next = vec![None::<u32>; n];
    let mut forced_prev = vec![None::<u32>; n];
    for &(u, v) in &arcs {
        if forced_next[u as usize].replace(v).is_some() {
            return Ok(0);
        }
        if forced_prev[v as usize].replace(u).is_some() {
            return Ok(0);
        }
    }

    struct Ctx<'a> {
        n: usize,
        j: usize,
        need: usize,
        forced_next: &'a [Option<u32>],
        on_cycle: Vec<bool>,
        count: u64,
        start: u32,
        used_arcs: usize,
    }
    fn extend(ctx: &mut Ctx<'_>, cur: u32, depth: usize) {
        if depth == ctx.j {
            // Close the cycle with arc (cur -> start).
            let closing_forced = ctx.forced_next[cur as usize];
            if closing_forced.map_or(true, |w| w == ctx.start) {
                let used = ctx.used_arcs + usize::from(closing_forced == Some(ctx.start));
                if used == ctx.need {
                    ctx.count += 1;
                }
            }
            return;
        }
        match ctx.forced_next[cur as usize] {
            Some(w) => {
                // Forced successor: must be new and not the canonical start
                // (the start is only re-entered by the closing arc).
                if w > ctx.start && !ctx.on_cycle[w as usize] {
                    ctx.on_cycle[w as usize] = true;
                    ctx.used_arcs += 1;
                    extend(ctx, w, depth + 1);
                    ctx.used_arcs -= 1;
                    ctx.on_cycle[w as usize] = false;
                }
            }
            None => {
                for w in (ctx.start + 1)..ctx.n as u32 {
                    if !ctx.on_cycle[w as usize] {
                        ctx.on_cycle[w as usize] = true;
                        extend(ctx, w, depth + 1);
                        ctx.on_cycle[w as usize] = false;
                    }
                }
            }
        }
    }

    let mut total = 0u64;
    for start in 0..n as u32 {
        let mut ctx = Ctx {
            n,
            j,
            need: arcs.len(),
            forced_next: &forced_next,
            on_cycle: vec![false; n],
            count: 0,
            start,
            used_arcs: 0,
        };
        ctx.on_cycle[start as usize] = true;
        extend(&mut ctx, start, 1);
        total += ctx.count;
    }
    Ok(total)
}

/// The counting bound `j^|r| · n^(j−|r|−1)` that
/// [`count_cycles_containing`] never exceeds when `r` is nonempty.
///
/// The bound genuinely requires `|r| ≥ 1`: it rests on the arcs of `r`
/// spanning at least `|r| + 1` vertices, which fails for the empty set
/// (already `n = 4, j = 2` has six 2-cycles but a bound of 4).
pub fn cycle_count_bound(n: usize, r_len: usize, j: usize) -> f64 {
    (j as f64).powi(r_len as i32) * (n as f64).powi(j as i32 - r_len as i32 - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn h3(n: usize, edges: &[[u32; 3]]) -> UniformHypergraph {
        UniformHypergraph::new(3, n, edges.iter().map(|e| e.to_vec()).collect()).unwrap()
    }

    #[test]
    fn construction_validates() {
        assert!(UniformHypergraph::new(3, 5, vec![vec![0, 1, 1]]).is_err());
        assert!(UniformHypergraph::new(3, 3, vec![vec![0, 1, 5]]).is_err());
        assert!(matches!(
            UniformHypergraph::new(3, 5, vec![vec![0, 1, 2], vec![2, 1, 0]]),
            Err(HypergraphError::DuplicateHyperedge(1))
        ));
    }

    #[test]
    fn degree_stats_disjoint_edges() {
        let h = h3(6, &[[0, 1, 2], [3, 4, 5]]);
        assert_eq!(degree_stats(&h, 1).unwrap(), (1, 1));
    }

    #[test]
    fn degree_stats_shared_pair() {
        let h = h3(4, &[[0, 1, 2], [0, 1, 3]]);
        let (_, delta2) = degree_stats(&h, 2).unwrap();
        assert_eq!(delta2, 2);
        // Exhaustive variant sees the pair {2, 3} in no hyperedge.
        assert_eq!(degree_stats_exhaustive(&h, 2).unwrap(), (0, 2));
        assert!(degree_stats(&h, 4).is_err());
    }

    #[test]
    fn matching_takes_both_disjoint_edges() {
        let h = h3(6, &[[0, 1, 2], [3, 4, 5]]);
        let r = find_conflict_free_matching(&h, &NoConflicts, &[], 7, &MatchOpts::default());
        assert_eq!(r.chosen, vec![0, 1]);
    }

    #[test]
    fn matching_respects_conflict() {
        let h = h3(9, &[[0, 1, 2], [3, 4, 5], [6, 7, 8]]);
        let c = ExplicitConflicts::new(vec![vec![0, 1, 2]]);
        for seed in 0..10 {
            let r = find_conflict_free_matching(&h, &c, &[], seed, &MatchOpts::default());
            assert_eq!(r.chosen.len(), 2, "any 2 of the 3 avoid the conflict");
            assert!(is_valid_matching(&h, &c, &r.chosen));
            assert!(is_maximal_matching(&h, &c, &r.chosen));
        }
    }

    #[test]
    fn matching_respects_vertex_disjointness() {
        let h = h3(5, &[[0, 1, 2], [2, 3, 4]]);
        let r = find_conflict_free_matching(&h, &NoConflicts, &[], 3, &MatchOpts::default());
        assert_eq!(r.chosen.len(), 1);
    }

    #[test]
    fn tracked_coverage_reported_and_drives_selection() {
        let h = h3(9, &[[0, 1, 2], [3, 4, 5], [6, 7, 8]]);
        let z = TrackedSet {
            name: "left".into(),
            members: vec![0, 1],
        };
        let r = find_conflict_free_matching(
            &h,
            &NoConflicts,
            &[z],
            11,
            &MatchOpts::with_restarts(4),
        );
        assert_eq!(r.chosen.len(), 3, "no conflicts: everything fits");
        assert_eq!(r.stats.tracked[0].covered, 2);
        assert_eq!(r.stats.tracked[0].size, 2);
    }

    #[test]
    fn matching_deterministic() {
        let h = h3(12, &[[0, 1, 2], [2, 3, 4], [4, 5, 6], [6, 7, 8], [8, 9, 10], [1, 9, 11]]);
        let c = ExplicitConflicts::new(vec![vec![0, 2, 4], vec![1, 3, 5]]);
        let opts = MatchOpts::with_restarts(6);
        let a = find_conflict_free_matching(&h, &c, &[], 99, &opts);
        let b = find_conflict_free_matching(&h, &c, &[], 99, &opts);
        assert_eq!(a.chosen, b.chosen);
        assert_eq!(a.stats.selected_restart, b.stats.selected_restart);
    }

    #[test]
    fn bounds_check_empty_passes() {
        let h = h3(6, &[[0, 1, 2], [3, 4, 5]]);
        let rep = check_bounded_conflicts(&h, &NoConflicts, 10.0, 4, 0.1, 1_000);
        assert!(rep.all_pass());
    }

    #[test]
    fn bounds_check_small_conflict_fails_c1() {
        let h = h3(6, &[[0, 1, 2], [3, 4, 5]]);
        let c = ExplicitConflicts::new(vec![vec![0, 1]]);
        let rep = check_bounded_conflicts(&h, &c, 10.0, 4, 0.1, 1_000);
        assert!(rep.conclusive);
        assert!(rep.c1_violation.is_some());
    }

    #[test]
    fn bounds_check_budget_inconclusive() {
        let h = h3(6, &[[0, 1, 2], [3, 4, 5]]);
        let c = ExplicitConflicts::new(vec![vec![0, 1]]);
        let rep = check_bounded_conflicts(&h, &c, 10.0, 4, 0.1, 0);
        assert!(!rep.conclusive);
        assert!(!rep.all_pass());
    }

    #[test]
    fn bounds_check_c2_c3_violations_detected() {
        // Nine size-3 conflicts all containing hyperedge 0 and sharing the
        // pair {0, 1}: with d = 2, ell = 3, the per-edge cap is 3·2² = 12
        // (fine) but the pair cap 3·2^(1-ρ) is exceeded.
        let edges: Vec<Vec<u32>> = (0..12).map(|i| vec![3 * i, 3 * i + 1, 3 * i + 2]).collect();
        let h = UniformHypergraph::new(3, 36, edges).unwrap();
        let sets: Vec<Vec<u32>> = (2..11).map(|x| vec![0, 1, x]).collect();
        let c = ExplicitConflicts::new(sets);
        let rep = check_bounded_conflicts(&h, &c, 2.0, 3, 0.5, 10_000);
        assert!(rep.conclusive);
        assert!(rep.c1_violation.is_none());
        assert!(rep.c3_violation.is_some(), "pair {{0,1}} in 9 > 3·2^0.5 conflicts");
    }

    /// Slow reference count: enumerate every canonical directed j-cycle and
    /// test arc containment directly.
    fn count_cycles_reference(n: usize, r: &[(u32, u32)], j: usize) -> u64 {
        fn rec(
            n: usize,
            j: usize,
            seq: &mut Vec<u32>,
            used: &mut Vec<bool>,
            r: &[(u32, u32)],
            count: &mut u64,
        ) {
            if seq.len() == j {
                let mut arcs = Vec::with_capacity(j);
                for i in 0..j {
                    arcs.push((seq[i], seq[(i + 1) % j]));
                }
                if r.iter().all(|a| arcs.contains(a)) {
                    *count += 1;
                }
                return;
            }
            let start = seq[0];
            for w in (start + 1)..n as u32 {
                if !used[w as usize] {
                    used[w as usize] = true;
                    seq.push(w);
                    rec(n, j, seq, used, r, count);
                    seq.pop();
                    used[w as usize] = false;
                }
            }
        }
        let mut count = 0;
        for s in 0..n as u32 {
            let mut used = vec![false; n];
            used[s as usize] = true;
            let mut seq = vec![s];
            rec(n, j, &mut seq, &mut used, r, &mut count);
        }
        count
    }

    #[test]
    fn cycle_counts_examples() {
        assert_eq!(count_cycles_containing(4, &[(0, 1)], 3).unwrap(), 2);
        assert_eq!(count_cycles_containing(4, &[(0, 1), (1, 0)], 3).unwrap(), 0);
        // All directed triangles on 4 vertices: C(4,3)·2! = 8.
        assert_eq!(count_cycles_containing(4, &[], 3).unwrap(), 8);
        // 2-cycles: one per ordered... unordered pair.
        assert_eq!(count_cycles_containing(4, &[], 2).unwrap(), 6);
        assert_eq!(count_cycles_containing(4, &[(0, 1)], 2).unwrap(), 1);
    }

    #[test]
    fn cycle_count_errors() {
        assert!(count_cycles_containing(10, &[], 3).is_err());
        assert!(count_cycles_containing(4, &[(0, 1), (1, 2), (2, 3)], 3).is_err());
        assert!(count_cycles_containing(4, &[(0, 0)], 3).is_err());
        assert!(count_cycles_containing(4, &[(0, 9)], 3).is_err());
        assert!(count_cycles_containing(4, &[], 1).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn cycle_count_matches_reference_and_bound(
            n in 2usize..6,
            j in 2usize..6,
            picks in proptest::collection::vec((0u32..6, 0u32..6), 1..4),
        ) {
            let arcs: Vec<(u32, u32)> = picks
                .into_iter()
                .map(|(a, b)| (a % n as u32, b % n as u32))
                .filter(|&(a, b)| a != b)
                .collect();
            let mut dedup = arcs.clone();
            dedup.sort_unstable();
            dedup.dedup();
            prop_assume!(!dedup.is_empty() && dedup.len() < j);
            let got = count_cycles_containing(n, &arcs, j).unwrap();
            prop_assert_eq!(got, count_cycles_reference(n, &dedup, j));
            // The bound needs a nonempty arc set; see cycle_count_bound.
            prop_assert!(got as f64 <= cycle_count_bound(n, dedup.len(), j));
        }

        #[test]
        fn greedy_matching_always_valid_and_maximal(seed in 0u64..200) {
            // Random 3-graph on 12 vertices with random explicit conflicts.
            let mut rng = rng_from_seed(seed);
            let mut edges = Vec::new();
            for _ in 0..14 {
                let mut e = Vec::new();
                while e.len() < 3 {
                    let v = rand::Rng::random_range(&mut rng, 0u32..12);
                    if !e.contains(&v) {
                        e.push(v);
                    }
                }
                e.sort_unstable();
                if !edges.contains(&e) {
                    edges.push(e);
                }
            }
            let m = edges.len();
            let h = UniformHypergraph::new(3, 12, edges).unwrap();
            let mut sets = Vec::new();
            for _ in 0..4 {
                if m >= 3 {
                    let mut s = Vec::new();
                    while s.len() < 3 {
                        let x = rand::Rng::random_range(&mut rng, 0u32..m as u32);
                        if !s.contains(&x) {
                            s.push(x);
                        }
                    }
                    sets.push(s);
                }
            }
            let c = ExplicitConflicts::new(sets);
            let r = find_conflict_free_matching(&h, &c, &[], seed, &MatchOpts::with_restarts(3));
            prop_assert!(is_valid_matching(&h, &c, &r.chosen));
            prop_assert!(is_maximal_matching(&h, &c, &r.chosen));
        }
    }
}
