//! Refinement: turn a separator collection of 2-matchings into an
//! almost-separating path system.  Cycles are broken first; then, member by
//! member, each 2-matching's path fragments are glued into a single path
//! with short connecting paths whose edges are chosen so that the damage to
//! the separated-edge ledger stays small and controlled.
//!
//! The ledger `E` starts as the edge set of the (acyclic) collection and
//! only shrinks.  Adding a connector edge `f` to member `i` can destroy the
//! separation of exactly the edges `e` with `i ∈ sig(e)` and
//! `sig(e) ∖ {i} ⊆ sig(f)`, where `sig` maps an edge to the set of members
//! containing it.  That damage set is computed exactly (by enumerating the
//! ≤ 4 subsets of `sig(f)`) before an edge is accepted, and an edge is only
//! accepted when every damaged endpoint has spare degree (is not "tight"),
//! which is what keeps the final uncovered degree bounded.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{norm_edge, Edge, Graph, Path};
use crate::separator::{decompose_two_matching, SeparatorCollection};
use crate::util::{derive_seed, rng_from_seed, BitSet};
use rand::Rng;

/// Reseeds for cycle breaking before giving up on the removed-set degree cap.
pub const BREAK_CYCLES_RETRY_CAP: usize = 50;
/// Deterministic node-visit budget per good-path search.
const SEARCH_BUDGET: usize = 500_000;

#[derive(Debug, Error)]
pub enum RefineError {
    #[error("cycle breaking failed {attempts} times: removed-edge graph degree {degree} exceeds cap {cap:.3}")]
    BreakCyclesRetries {
        attempts: usize,
        degree: usize,
        cap: f64,
    },
    #[error("{0}")]
    Domain(String),
    #[error("ledger invariant violated at member {member}: {detail}")]
    Invariant { member: usize, detail: String },
}

// ---------------------------------------------------------------------------
// Compactness sizing
// ---------------------------------------------------------------------------

/// Largest compactness parameter (with a 10% safety margin) satisfying the
/// four constraints used by the gluing argument:
/// `ε′ < δ/(4L)`, `ε′ < 1/16`, `ε′ < (δ/(8(1+4Lβ)))²`, and
/// `4Lβε′ + 2√ε′ < δ/4`.
pub fn refine_eps_prime(delta: f64, l_max: u32, beta: f64) -> Result<f64, RefineError> {
    if !(delta > 0.0 && delta <= 1.0) || !(beta > 0.0) || l_max == 0 {
        return Err(RefineError::Domain(format!(
            "need delta in (0,1], beta > 0, L >= 1; got delta={delta}, beta={beta}, L={l_max}"
        )));
    }
    let l = l_max as f64;
    let c1 = delta / (4.0 * l);
    let c2 = 1.0 / 16.0;
    let c3 = (delta / (8.0 * (1.0 + 4.0 * l * beta))).powi(2);
    // 4Lβ·s² + 2s − δ/4 = 0 in s = √ε′.
    let a = 4.0 * l * beta;
    let s = ((1.0 + a * delta / 4.0).sqrt() - 1.0) / a;
    let c4 = s * s;
    Ok(0.9 * c1.min(c2).min(c3).min(c4))
}

// ---------------------------------------------------------------------------
// Cycle breaking
// ---------------------------------------------------------------------------

/// Remove one uniformly random edge from every cycle of every member.
/// Retries (fresh seed derivation) until the removed edges form a graph of
/// maximum degree at most `4 · ε′ · t`; errors after the retry cap.
/// Returns the acyclic members and the removed edges.
pub fn break_cycles(
    g: &Graph,
    s: &SeparatorCollection,
    seed: u64,
) -> Result<(Vec<Vec<Edge>>, Vec<Edge>), RefineError> {
    let n = g.n();
    let cap = 4.0 * s.params.eps_prime * s.t as f64;
    let mut last_degree = 0usize;
    for attempt in 0..BREAK_CYCLES_RETRY_CAP {
        let mut rng = rng_from_seed(derive_seed(seed, 0x6272_6b63 + attempt as u64));
        let mut members: Vec<Vec<Edge>> = Vec::with_capacity(s.two_matchings.len());
        let mut removed: Vec<Edge> = Vec::new();
        for q in &s.two_matchings {
            let (_, cycles) = decompose_two_matching(n, q);
            let mut drop: HashSet<Edge> = HashSet::new();
            for cyc in &cycles {
                let k = rng.random_range(0..cyc.len());
                let e = norm_edge(cyc[k], cyc[(k + 1) % cyc.len()]);
                drop.insert(e);
            }
            removed.extend(drop.iter().copied());
            members.push(q.iter().copied().filter(|e| !drop.contains(e)).collect());
        }
        removed.sort_unstable();
        removed.dedup();
        let mut deg = vec![0usize; n];
        for &(u, v) in &removed {
            deg[u as usize] += 1;
            deg[v as usize] += 1;
        }
        let max_deg = deg.iter().copied().max().unwrap_or(0);
        if (max_deg as f64) <= cap {
            for q in &members {
                let (_, cycles) = decompose_two_matching(n, q);
                debug_assert!(cycles.is_empty(), "cycle survived edge removal");
            }
            return Ok((members, removed));
        }
        last_degree = max_deg;
    }
    Err(RefineError::BreakCyclesRetries {
        attempts: BREAK_CYCLES_RETRY_CAP,
        degree: last_degree,
        cap,
    })
}

// ---------------------------------------------------------------------------
// Gluing state
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineParams {
    /// Target uncovered-degree fraction for the final ledger (the almost-
    /// separation parameter).  Inflated automatically if the input's
    /// uncovered degrees already exceed it; the effective value is reported.
    pub eps_target: f64,
    /// Compactness parameter of the input collection.
    pub eps_prime: f64,
    /// Maximum inner vertices per connecting path.
    pub l_max: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RefineDiagnostics {
    pub members: usize,
    pub empty_members: usize,
    pub fragments: usize,
    pub glue_successes: usize,
    pub fallback_members: usize,
    pub extra_paths: usize,
    pub connector_edges: usize,
    pub removed_from_ledger: usize,
    pub cycle_edges_removed: usize,
    pub eps_effective: f64,
    pub sqrt_eps_prime_effective: f64,
    pub initial_max_uncovered_degree: usize,
    pub final_max_uncovered_degree: usize,
}

pub struct RefineOutcome {
    /// One glued path per nonempty member, in member order, followed by
    /// nothing; fallback chains beyond the representative go to
    /// `extra_paths`.
    pub paths: Vec<Path>,
    /// Fallback chains emitted as standalone paths (their ledger edges were
    /// removed and routed to the leftover stage).
    pub extra_paths: Vec<Path>,
    /// The final ledger `E_t`: edges the combined path system separates
    /// from every other edge of the host graph.
    pub separated: Vec<Edge>,
    pub diagnostics: RefineDiagnostics,
}

type Sig = Vec<u32>;

struct GlueState<'g> {
    g: &'g Graph,
    n: usize,
    /// Current member sets per edge (sorted).  Updated as connectors join.
    sig: HashMap<Edge, Sig>,
    /// The separated-edge ledger.
    e_cur: HashSet<Edge>,
    /// Ledger edges grouped by exact signature value.
    sig_index: HashMap<Sig, HashSet<Edge>>,
    /// Degree in (host − ledger).
    uncovered_deg: Vec<u32>,
    /// Portion of `uncovered_deg` contributed by retired fallback chains
    /// (forced removals, not subject to the tightness discipline).
    retired_deg: Vec<u32>,
    /// Per-vertex fragment-endpoint count over unprocessed members.
    d_cur: Vec<u32>,
    used_connectors: HashSet<Edge>,
    used_conn_deg: Vec<u32>,
    /// Edges of emitted fallback chains; excluded from future use.
    polluted: HashSet<Edge>,
    eps_eff: f64,
    sqrt_epsp_eff: f64,
    removed_from_e: Vec<Edge>,
}

impl<'g> GlueState<'g> {
    fn new(
        g: &'g Graph,
        members: &[Vec<Edge>],
        fragments: &[Vec<Vec<u32>>],
        params: &RefineParams,
    ) -> GlueState<'g> {
        let n = g.n();
        let mut sig: HashMap<Edge, Sig> = HashMap::new();
        for (i, q) in members.iter().enumerate() {
            for &e in q {
                sig.entry(e).or_default().push(i as u32);
            }
        }
        for v in sig.values_mut() {
            v.sort_unstable();
            v.dedup();
        }
        // Initial ledger: only the edges whose member set is not contained
        // in any other edge's member set.  (Cycle breaking shrinks member
        // sets, so some covered edges start out dominated; those are not
        // separated and go straight to the leftover stage.)
        let mut superset_count: HashMap<Sig, u32> = HashMap::new();
        for s in sig.values() {
            for mask in 0u32..(1 << s.len()) {
                let mut sub: Sig = Vec::new();
                for (b, &m) in s.iter().enumerate() {
                    if mask & (1 << b) != 0 {
                        sub.push(m);
                    }
                }
                *superset_count.entry(sub).or_default() += 1;
            }
        }
        let e_cur: HashSet<Edge> = sig
            .iter()
            .filter(|(_, s)| superset_count.get(*s).copied().unwrap_or(0) == 1)
            .map(|(&e, _)| e)
            .collect();
        let mut sig_index: HashMap<Sig, HashSet<Edge>> = HashMap::new();
        for &e in &e_cur {
            sig_index.entry(sig[&e].clone()).or_default().insert(e);
        }
        let mut covered = vec![0u32; n];
        for &(u, v) in &e_cur {
            covered[u as usize] += 1;
            covered[v as usize] += 1;
        }
        let uncovered_deg: Vec<u32> = (0..n)
            .map(|v| g.degree(v as u32) as u32 - covered[v])
            .collect();
        let mut d_cur = vec![0u32; n];
        for frags in fragments {
            for f in frags {
                if f.len() >= 2 {
                    d_cur[f[0] as usize] += 1;
                    d_cur[*f.last().unwrap() as usize] += 1;
                }
            }
        }
        // Effective caps: the protective formulas need the initial state to
        // be feasible.  Inflate to the measured degrees when the caller's
        // targets are below them; at asymptotic scale the max() resolves to
        // the caller's values.
        let nf = n as f64;
        let mut sqrt_epsp_eff = params.eps_prime.sqrt();
        for v in 0..n {
            if d_cur[v] > 0 {
                let need = (uncovered_deg[v] as f64 + 2.0 * d_cur[v] as f64) / nf;
                sqrt_epsp_eff = sqrt_epsp_eff.max(need);
            }
        }
        let max_unc = uncovered_deg.iter().copied().max().unwrap_or(0);
        let eps_eff = params
            .eps_target
            .max(max_unc as f64 / nf)
            .max(sqrt_epsp_eff);
        GlueState {
            g,
            n,
            sig,
            e_cur,
            sig_index,
            uncovered_deg,
            retired_deg: vec![0u32; n],
            d_cur,
            used_connectors: HashSet::new(),
            used_conn_deg: vec![0u32; n],
            polluted: HashSet::new(),
            eps_eff,
            sqrt_epsp_eff,
            removed_from_e: Vec::new(),
        }
    }

    /// A vertex is tight when its uncovered degree is within 2 of its cap;
    /// removals from the ledger are only permitted at untight vertices.
    fn is_tight_with(&self, u: u32, extra: u32) -> bool {
        let nf = self.n as f64;
        let deg = (self.uncovered_deg[u as usize] + extra) as f64;
        let d = self.d_cur[u as usize] as f64;
        if d == 0.0 {
            deg > self.eps_eff * nf - 2.0
        } else {
            deg > self.sqrt_epsp_eff * nf - 2.0 * d - 2.0
        }
    }

    fn is_tight(&self, u: u32) -> bool {
        self.is_tight_with(u, 0)
    }

    /// The exact damage set of adding edge `f` to `member`: `f` itself plus
    /// every ledger edge `e` with `member ∈ sig(e)` and
    /// `sig(e) ∖ {member} ⊆ sig(f)`.
    fn compute_ef(&self, f: Edge, member: u32) -> Vec<Edge> {
        let sig_f: Sig = self.sig.get(&f).cloned().unwrap_or_default();
        let mut out = vec![f];
        for mask in 0u32..(1 << sig_f.len()) {
            let mut key: Sig = Vec::with_capacity(sig_f.len() + 1);
            for (b, &m) in sig_f.iter().enumerate() {
                if mask & (1 << b) != 0 {
                    key.push(m);
                }
            }
            key.push(member);
            key.sort_unstable();
            key.dedup();
            if let Some(set) = self.sig_index.get(&key) {
                for &e in set {
                    if e != f {
                        out.push(e);
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Can `f` join `member` right now, assuming the virtual uncovered-degree
    /// increments in `virt` from tentatively accepted earlier edges?
    /// Returns the damage set on success.
    fn edge_available(
        &self,
        f: Edge,
        member: u32,
        virt: &HashMap<u32, u32>,
    ) -> Option<Vec<Edge>> {
        if self.used_connectors.contains(&f) || self.polluted.contains(&f) {
            return None;
        }
        let sig_f = self.sig.get(&f);
        if let Some(s) = sig_f {
            if s.len() > 2 || s.binary_search(&member).is_ok() {
                return None;
            }
        }
        let ef = self.compute_ef(f, member);
        for &(u, v) in &ef {
            for w in [u, v] {
                let extra = virt.get(&w).copied().unwrap_or(0);
                if self.is_tight_with(w, extra) {
                    return None;
                }
            }
        }
        Some(ef)
    }

    /// Commit edge `f` to `member`: remove its damage set (except `f`
    /// itself) from the ledger and record the membership.
    fn commit_edge(&mut self, f: Edge, member: u32) {
        let ef = self.compute_ef(f, member);
        for &e in &ef {
            if e != f && self.e_cur.contains(&e) {
                self.remove_from_ledger(e);
            }
        }
        // membership update (and re-bucketing if f is itself a ledger edge)
        let old = self.sig.get(&f).cloned().unwrap_or_default();
        let mut new = old.clone();
        new.push(member);
        new.sort_unstable();
        new.dedup();
        if self.e_cur.contains(&f) {
            if let Some(set) = self.sig_index.get_mut(&old) {
                set.remove(&f);
                if set.is_empty() {
                    self.sig_index.remove(&old);
                }
            }
            self.sig_index.entry(new.clone()).or_default().insert(f);
        }
        debug_assert!(new.len() <= 3, "membership exceeded 3 after commit");
        self.sig.insert(f, new);
        self.used_connectors.insert(f);
        self.used_conn_deg[f.0 as usize] += 1;
        self.used_conn_deg[f.1 as usize] += 1;
    }

    fn remove_from_ledger(&mut self, e: Edge) {
        if !self.e_cur.remove(&e) {
            return;
        }
        let s = self.sig.get(&e).cloned().unwrap_or_default();
        if let Some(set) = self.sig_index.get_mut(&s) {
            set.remove(&e);
            if set.is_empty() {
                self.sig_index.remove(&s);
            }
        }
        self.uncovered_deg[e.0 as usize] += 1;
        self.uncovered_deg[e.1 as usize] += 1;
        self.removed_from_e.push(e);
    }

    /// Strip `member` from the edges of an emitted fallback chain, drop them
    /// from the ledger, and bar them from future connector use.
    fn retire_chain(&mut self, chain: &[u32], member: u32) {
        for w in chain.windows(2) {
            let e = norm_edge(w[0], w[1]);
            if self.e_cur.contains(&e) {
                self.retired_deg[e.0 as usize] += 1;
                self.retired_deg[e.1 as usize] += 1;
            }
            self.remove_from_ledger(e);
            self.polluted.insert(e);
            if let Some(s) = self.sig.get_mut(&e) {
                if let Ok(pos) = s.binary_search(&member) {
                    s.remove(pos);
                }
            }
        }
    }

    /// Shortest-first, lexicographically smallest good `x`–`y` path: at most
    /// `l_max` inner vertices, all outside `member_verts`, every edge
    /// currently available for `member`.
    fn find_good_path(
        &self,
        x: u32,
        y: u32,
        member: u32,
        member_verts: &BitSet,
        l_max: u32,
    ) -> Option<Vec<u32>> {
        // Zero inner vertices: the direct edge.
        if self.g.has_edge(x, y) {
            let empty = HashMap::new();
            if self
                .edge_available(norm_edge(x, y), member, &empty)
                .is_some()
            {
                return Some(vec![x, y]);
            }
        }
        let mut budget = SEARCH_BUDGET;
        for ell in 1..=l_max as usize {
            let mut inner: Vec<u32> = Vec::with_capacity(ell);
            let mut virt: HashMap<u32, u32> = HashMap::new();
            if self.dfs_inner(x, y, member, member_verts, ell, &mut inner, &mut virt, &mut budget)
            {
                let mut path = Vec::with_capacity(ell + 2);
                path.push(x);
                path.extend_from_slice(&inner);
                path.push(y);
                return Some(path);
            }
        }
        None
    }

    #[allow(clippy::too_many_arguments)]
    fn dfs_inner(
        &self,
        cur: u32,
        y: u32,
        member: u32,
        member_verts: &BitSet,
        remaining: usize,
        inner: &mut Vec<u32>,
        virt: &mut HashMap<u32, u32>,
        budget: &mut usize,
    ) -> bool {
        if *budget == 0 {
            return false;
        }
        if remaining == 0 {
            if !self.g.has_edge(cur, y) {
                return false;
            }
            return self
                .edge_available(norm_edge(cur, y), member, virt)
                .is_some();
        }
        for &v in self.g.neighbors(cur) {
            if *budget == 0 {
                return false;
            }
            *budget -= 1;
            if v == y || member_verts.get(v as usize) || inner.contains(&v) {
                continue;
            }
            let f = norm_edge(cur, v);
            let Some(ef) = self.edge_available(f, member, virt) else {
                continue;
            };
            // tentatively book the damage so later edges on this candidate
            // path see the cumulative degree pressure
            for &(a, b) in &ef {
                if norm_edge(a, b) != f && self.e_cur.contains(&norm_edge(a, b)) {
                    *virt.entry(a).or_default() += 1;
                    *virt.entry(b).or_default() += 1;
                }
            }
            inner.push(v);
            if self.dfs_inner(v, y, member, member_verts, remaining - 1, inner, virt, budget) {
                return true;
            }
            inner.pop();
            for &(a, b) in &ef {
                if norm_edge(a, b) != f && self.e_cur.contains(&norm_edge(a, b)) {
                    *virt.get_mut(&a).unwrap() -= 1;
                    *virt.get_mut(&b).unwrap() -= 1;
                }
            }
        }
        false
    }

    /// Ledger soundness: every ledger edge's member set must not be
    /// contained in any other edge's member set, and memberships stay ≤ 3.
    fn check_ledger(&self, member: usize) -> Result<(), RefineError> {
        let mut superset_count: HashMap<Sig, u32> = HashMap::new();
        for s in self.sig.values() {
            if s.len() > 3 {
                return Err(RefineError::Invariant {
                    member,
                    detail: format!("an edge lies in {} members", s.len()),
                });
            }
            for mask in 0u32..(1 << s.len()) {
                let mut sub: Sig = Vec::new();
                for (b, &m) in s.iter().enumerate() {
                    if mask & (1 << b) != 0 {
                        sub.push(m);
                    }
                }
                *superset_count.entry(sub).or_default() += 1;
            }
        }
        for e in &self.e_cur {
            let s = &self.sig[e];
            if superset_count.get(s).copied().unwrap_or(0) != 1 {
                return Err(RefineError::Invariant {
                    member,
                    detail: format!(
                        "ledger edge {e:?} with members {s:?} is dominated by another edge"
                    ),
                });
            }
        }
        Ok(())
    }

    /// Degree-cap soundness under the effective parameters.  Retired
    /// fallback-chain removals are forced (their chains stay in the path
    /// system) and are excluded; the caps govern the tightness-gated
    /// damage removals.
    fn check_degree_caps(&self, member: usize) -> Result<(), RefineError> {
        let nf = self.n as f64;
        for u in 0..self.n {
            let deg = (self.uncovered_deg[u] - self.retired_deg[u]) as f64;
            let d = self.d_cur[u] as f64;
            let cap = if d == 0.0 {
                self.eps_eff * nf
            } else {
                self.sqrt_epsp_eff * nf - 2.0 * d
            };
            if deg > cap + 1e-9 {
                return Err(RefineError::Invariant {
                    member,
                    detail: format!(
                        "vertex {u} uncovered degree {deg} exceeds cap {cap:.3} (pending endpoints {d})"
                    ),
                });
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Main gluing pass
// ---------------------------------------------------------------------------

fn sorted_fragments(n: usize, member: &[Edge]) -> Vec<Vec<u32>> {
    let (mut frags, cycles) = decompose_two_matching(n, member);
    debug_assert!(cycles.is_empty(), "gluing requires acyclic members");
    // canonical orientation: smaller endpoint first
    for f in &mut frags {
        if f.first() > f.last() {
            f.reverse();
        }
    }
    frags.sort_by_key(|f| (f[0], *f.last().unwrap(), f.len()));
    frags
}

/// Glue each acyclic member into a single path.  Members that cannot be
/// fully glued are emitted as several paths: the longest chain keeps the
/// member's identity, the others become `extra_paths` and their ledger
/// edges are removed (routed to the leftover stage).
pub fn connect_paths(
    g: &Graph,
    members: &[Vec<Edge>],
    params: &RefineParams,
) -> Result<RefineOutcome, RefineError> {
    if !(params.eps_target > 0.0 && params.eps_target < 1.0) {
        return Err(RefineError::Domain(format!(
            "eps_target must lie in (0,1), got {}",
            params.eps_target
        )));
    }
    let n = g.n();
    let fragments: Vec<Vec<Vec<u32>>> = members
        .iter()
        .map(|q| sorted_fragments(n, q))
        .collect();
    let mut st = GlueState::new(g, members, &fragments, params);
    let initial_max_uncovered = st.uncovered_deg.iter().copied().max().unwrap_or(0) as usize;

    let mut paths: Vec<Path> = Vec::new();
    let mut extra_paths: Vec<Path> = Vec::new();
    let mut glue_successes = 0usize;
    let mut fallback_members = 0usize;
    let mut empty_members = 0usize;
    let total_fragments: usize = fragments.iter().map(|f| f.len()).sum();

    for (i, frags) in fragments.iter().enumerate() {
        let member = i as u32;
        if frags.is_empty() {
            empty_members += 1;
            continue;
        }
        // every vertex of the member (fragments + connectors as they join)
        let mut member_verts = BitSet::new(n);
        for f in frags {
            for &v in f {
                member_verts.set(v as usize);
            }
        }
        let mut chain: Vec<u32> = frags[0].clone();
        let mut remaining: Vec<Vec<u32>> = frags[1..].to_vec();
        let mut emitted: Vec<Vec<u32>> = Vec::new();

        while !remaining.is_empty() {
            // candidate = (fragment index, x=chain end, y=fragment end,
            // flip chain?, flip fragment?)
            let mut success: Option<(usize, Vec<u32>, bool, bool)> = None;
            'frag: for (fi, frag) in remaining.iter().enumerate() {
                let (cf, cl) = (chain[0], *chain.last().unwrap());
                let (ff, fl) = (frag[0], *frag.last().unwrap());
                // (x, y, flip_chain, flip_frag): gluing appends the fragment
                // after the chain, so x must become the chain's LAST vertex
                // and y the fragment's FIRST.
                let mut pairings = [
                    (cl, ff, false, false),
                    (cl, fl, false, true),
                    (cf, ff, true, false),
                    (cf, fl, true, true),
                ];
                pairings.sort_by_key(|&(x, y, _, _)| {
                    (
                        st.used_conn_deg[x as usize] + st.used_conn_deg[y as usize],
                        x,
                        y,
                    )
                });
                for &(x, y, flip_chain, flip_frag) in &pairings {
                    if st.is_tight(x) || st.is_tight(y) {
                        continue;
                    }
                    if let Some(conn) =
                        st.find_good_path(x, y, member, &member_verts, params.l_max)
                    {
                        success = Some((fi, conn, flip_chain, flip_frag));
                        break 'frag;
                    }
                }
            }
            match success {
                Some((fi, conn, flip_chain, flip_frag)) => {
                    let mut frag = remaining.remove(fi);
                    if flip_chain {
                        chain.reverse();
                    }
                    if flip_frag {
                        frag.reverse();
                    }
                    for w in conn.windows(2) {
                        st.commit_edge(norm_edge(w[0], w[1]), member);
                    }
                    for &v in &conn[1..conn.len() - 1] {
                        member_verts.set(v as usize);
                    }
                    chain.extend_from_slice(&conn[1..conn.len() - 1]);
                    chain.extend_from_slice(&frag);
                    glue_successes += 1;
                }
                None => {
                    emitted.push(std::mem::replace(&mut chain, remaining.remove(0)));
                }
            }
        }
        emitted.push(chain);

        // representative = longest chain (ties: earliest emitted)
        let rep = emitted
            .iter()
            .enumerate()
            .max_by_key(|(k, c)| (c.len(), usize::MAX - k))
            .map(|(k, _)| k)
            .unwrap();
        if emitted.len() > 1 {
            fallback_members += 1;
        }
        for (k, c) in emitted.into_iter().enumerate() {
            if k == rep {
                paths.push(Path::new(c));
            } else {
                st.retire_chain(&c, member);
                extra_paths.push(Path::new(c));
            }
        }
        // member processed: its fragment endpoints leave the pending counts
        for f in frags {
            if f.len() >= 2 {
                st.d_cur[f[0] as usize] -= 1;
                st.d_cur[*f.last().unwrap() as usize] -= 1;
            }
        }
        st.check_ledger(i)?;
        st.check_degree_caps(i)?;
    }

    let mut separated: Vec<Edge> = st.e_cur.iter().copied().collect();
    separated.sort_unstable();
    let final_max_uncovered = st.uncovered_deg.iter().copied().max().unwrap_or(0) as usize;
    let diagnostics = RefineDiagnostics {
        members: members.len(),
        empty_members,
        fragments: total_fragments,
        glue_successes,
        fallback_members,
        extra_paths: extra_paths.len(),
        connector_edges: st.used_connectors.len(),
        removed_from_ledger: st.removed_from_e.len(),
        cycle_edges_removed: 0,
        eps_effective: st.eps_eff,
        sqrt_eps_prime_effective: st.sqrt_epsp_eff,
        initial_max_uncovered_degree: initial_max_uncovered,
        final_max_uncovered_degree: final_max_uncovered,
    };
    Ok(RefineOutcome {
        paths,
        extra_paths,
        separated,
        diagnostics,
    })
}

/// Full refinement: break cycles, then glue.  The returned `separated`
/// ledger is exactly the set of edges the path system (glued paths plus
/// extras) separates from every other edge.
pub fn refine_separator(
    g: &Graph,
    s: &SeparatorCollection,
    eps_target: f64,
    seed: u64,
) -> Result<RefineOutcome, RefineError> {
    let (acyclic, removed) = break_cycles(g, s, derive_seed(seed, 1))?;
    let params = RefineParams {
        eps_target,
        eps_prime: s.params.eps_prime,
        l_max: s.params.l_max,
    };
    let mut out = connect_paths(g, &acyclic, &params)?;
    out.diagnostics.cycle_edges_removed = removed.len();
    Ok(out)
}
