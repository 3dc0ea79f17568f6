//! Robust-connectivity certification, robust neighbourhoods, and the
//! expander-to-connectivity parameter derivation.
//!
//! A graph is `(δ, L)`-robustly-connected when every vertex pair `(x, y)` is
//! joined, for some `ℓ ≤ L`, by at least `δ·n^ℓ` paths with exactly `ℓ`
//! inner vertices.  The certifier here counts such paths exactly (for
//! `ℓ ≤ 4`) and emits either a certificate with re-checkable witnesses or a
//! refusal naming a failing pair.  Sampled mode exists for large instances
//! and is labeled as the non-proof it is.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec;
use crate::graph::Graph;
use crate::util::{derive_seed, rng_from_seed, BitSet};

/// Exact path counting is implemented for `ℓ` up to this level.
pub const MAX_PATH_LEVEL: u32 = 4;

#[derive(Debug, Error)]
pub enum ConnectivityError {
    #[error("ell = {0} exceeds the exact path-counting cap {MAX_PATH_LEVEL}")]
    LevelCap(u32),
    #[error("ell must be at least 1")]
    LevelZero,
    #[error("x and y must be distinct vertices of the graph")]
    BadPair,
    #[error(
        "not ({delta}, {l_max})-robustly-connected: pair ({x}, {y}) has per-level \
         path counts {counts:?}, all below the thresholds {thresholds:?}"
    )]
    NotRobust {
        x: u32,
        y: u32,
        delta: f64,
        l_max: u32,
        counts: Vec<u64>,
        thresholds: Vec<f64>,
    },
    #[error("exact expander check limited to n <= {cap}, got n = {n}")]
    ExpanderCap { n: usize, cap: usize },
    #[error("{0}")]
    Domain(String),
}

/// `|a ∩ b ∖ excl|` over equal-length word vectors.
fn count3(a: &BitSet, b: &BitSet, excl: &BitSet) -> u64 {
    a.words()
        .iter()
        .zip(b.words())
        .zip(excl.words())
        .map(|((&wa, &wb), &we)| (wa & wb & !we).count_ones() as u64)
        .sum()
}

/// Exact number of `(x, y)`-paths with exactly `ell` inner vertices, all of
/// them outside `forbidden` (membership of `x`/`y` themselves in `forbidden`
/// is irrelevant — only inner vertices are constrained).
///
/// `ell ≤ 2` is pure bitset arithmetic; `ell ∈ {3, 4}` enumerate the outer
/// inner-vertices and count the middle by bitset; larger `ell` is refused.
pub fn count_internal_paths(
    g: &Graph,
    x: u32,
    y: u32,
    ell: u32,
    forbidden: &BitSet,
) -> Result<u64, ConnectivityError> {
    if ell == 0 {
        return Err(ConnectivityError::LevelZero);
    }
    if ell > MAX_PATH_LEVEL {
        return Err(ConnectivityError::LevelCap(ell));
    }
    let n = g.n();
    if x == y || x as usize >= n || y as usize >= n {
        return Err(ConnectivityError::BadPair);
    }
    // Inner vertices must avoid the forbidden set and both endpoints.
    let mut excl = forbidden.clone();
    if excl.len() != n {
        return Err(ConnectivityError::Domain(format!(
            "forbidden set sized for {} vertices, graph has {n}",
            excl.len()
        )));
    }
    excl.set(x as usize);
    excl.set(y as usize);

    let adj = |v: u32| g.adj_row(v);
    let allowed = |v: u32| !excl.get(v as usize);

    let count = match ell {
        1 => count3(adj(x), adj(y), &excl),
        2 => {
            // x–a–b–y: a ∈ N(x), b ∈ N(a) ∩ N(y); b ≠ a is automatic.
            let mut total = 0u64;
            for &a in g.neighbors(x) {
                if allowed(a) {
                    total += count3(adj(a), adj(y), &excl);
                }
            }
            total
        }
        3 => {
            // x–a–b–c–y: enumerate a, c; count b ∈ N(a) ∩ N(c).
            let mut total = 0u64;
            for &a in g.neighbors(x) {
                if !allowed(a) {
                    continue;
                }
                for &c in g.neighbors(y) {
                    if c != a && allowed(c) {
                        total += count3(adj(a), adj(c), &excl);
                    }
                }
            }
            total
        }
        4 => {
            // x–a–b–c–d–y: enumerate a, d, b; count c ∈ N(b) ∩ N(d), c ≠ a.
            let mut total = 0u64;
            for &a in g.neighbors(x) {
                if !allowed(a) {
                    continue;
                }
                let mut excl_a = excl.clone();
                excl_a.set(a as usize);
                for &d in g.neighbors(y) {
                    if d == a || !allowed(d) {
                        continue;
                    }
                    for &b in g.neighbors(a) {
                        if b != d && b != x && b != y && allowed(b) {
                            total += count3(adj(b), adj(d), &excl_a);
                        }
                    }
                }
            }
            total
        }
        _ => unreachable!(),
    };
    Ok(count)
}

/// How a certificate was established.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CertMode {
    /// Every vertex pair checked: the certificate is a proof.
    Exact,
    /// Only a seeded sample of pairs checked: an empirical report, NOT a
    /// proof of robust connectivity.
    Sampled { pairs: usize },
}

/// The binding witness at one level: among pairs whose smallest successful
/// level is `ell`, the one with the fewest paths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelWitness {
    pub ell: u32,
    pub x: u32,
    pub y: u32,
    pub count: u64,
}

/// Certificate that a graph is `(delta, l_max)`-robustly-connected.
///
/// In [`CertMode::Exact`] mode every pair was verified; `witnesses` can be
/// re-checked against [`count_internal_paths`] and reproduce the stored
/// counts exactly.  In sampled mode the same fields describe only the
/// sampled pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustConnCertificate {
    pub n: usize,
    /// Hex of the graph's structural hash, tying the certificate to its graph.
    pub graph_hash: String,
    pub delta: f64,
    pub l_max: u32,
    pub mode: CertMode,
    pub pairs_checked: u64,
    /// `resolved_at_level[ℓ-1]` = number of pairs whose smallest successful
    /// level is ℓ.
    pub resolved_at_level: Vec<u64>,
    pub witnesses: Vec<LevelWitness>,
}

impl RobustConnCertificate {
    /// Only exact-mode certificates are proofs.
    pub fn is_proof(&self) -> bool {
        self.mode == CertMode::Exact
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<RobustConnCertificate, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Per-pair resolution: smallest successful level and its count, or the
/// failure evidence.
fn resolve_pair(
    g: &Graph,
    x: u32,
    y: u32,
    delta: f64,
    l_max: u32,
    empty_forbidden: &BitSet,
) -> Result<(u32, u64), (Vec<u64>, Vec<f64>)> {
    let n = g.n() as f64;
    let mut counts = Vec::with_capacity(l_max as usize);
    let mut thresholds = Vec::with_capacity(l_max as usize);
    for ell in 1..=l_max {
        let c = count_internal_paths(g, x, y, ell, empty_forbidden)
            .expect("levels within cap by precondition");
        let need = delta * n.powi(ell as i32);
        if c as f64 >= need {
            return Ok((ell, c));
        }
        counts.push(c);
        thresholds.push(need);
    }
    Err((counts, thresholds))
}

/// Certify that `g` is `(delta, l_max)`-robustly-connected.
///
/// Exact mode checks every pair (in parallel, with deterministic merging)
/// and is a proof; failure returns [`ConnectivityError::NotRobust`] naming a
/// failing pair and its per-level counts.  Sampled mode checks a seeded
/// sample of distinct pairs and returns a clearly-labeled empirical
/// certificate.  `l_max` beyond [`MAX_PATH_LEVEL`] is refused.
pub fn certify_robust_connectivity(
    g: &Graph,
    delta: f64,
    l_max: u32,
    mode: CertMode,
    seed: u64,
) -> Result<RobustConnCertificate, ConnectivityError> {
    if l_max == 0 {
        return Err(ConnectivityError::LevelZero);
    }
    if l_max > MAX_PATH_LEVEL {
        return Err(ConnectivityError::LevelCap(l_max));
    }
    if !(delta > 0.0) {
        return Err(ConnectivityError::Domain(format!(
            "delta must be positive, got {delta}"
        )));
    }
    let n = g.n();
    if n < 2 {
        return Err(ConnectivityError::Domain(
            "robust connectivity needs at least two vertices".into(),
        ));
    }
    let empty = BitSet::new(n);

    struct RowSummary {
        pairs: u64,
        resolved: Vec<u64>,
        best: Vec<Option<LevelWitness>>,
        failure: Option<(u32, u32, Vec<u64>, Vec<f64>)>,
    }

    let pair_list: Vec<(u32, u32)> = match mode {
        CertMode::Exact => Vec::new(),
        CertMode::Sampled { pairs } => {
            let mut rng = rng_from_seed(derive_seed(seed, 0x7061_6972));
            let total = n as u64 * (n as u64 - 1) / 2;
            let want = (pairs as u64).min(total) as usize;
            let mut set = std::collections::BTreeSet::new();
            while set.len() < want {
                let a = rand::Rng::random_range(&mut rng, 0..n as u32);
                let b = rand::Rng::random_range(&mut rng, 0..n as u32);
                if a != b {
                    set.insert((a.min(b), a.max(b)));
                }
            }
            set.into_iter().collect()
        }
    };

    let merge_pair = |summary: &mut RowSummary, g: &Graph, x: u32, y: u32| {
        if summary.failure.is_some() {
            return;
        }
        summary.pairs += 1;
        match resolve_pair(g, x, y, delta, l_max, &empty) {
            Ok((ell, count)) => {
                summary.resolved[ell as usize - 1] += 1;
                let slot = &mut summary.best[ell as usize - 1];
                if slot.as_ref().map_or(true, |w| count < w.count) {
                    *slot = Some(LevelWitness { ell, x, y, count });
                }
            }
            Err((counts, thresholds)) => {
                summary.failure = Some((x, y, counts, thresholds));
            }
        }
    };

    let summaries: Vec<RowSummary> = match mode {
        CertMode::Exact => exec::map_indices(n, |xi| {
            let x = xi as u32;
            let mut s = RowSummary {
                pairs: 0,
                resolved: vec![0; l_max as usize],
                best: vec![None; l_max as usize],
                failure: None,
            };
            for y in (x + 1)..n as u32 {
                merge_pair(&mut s, g, x, y);
            }
            s
        }),
        CertMode::Sampled { .. } => exec::map_indices(pair_list.len(), |i| {
            let (x, y) = pair_list[i];
            let mut s = RowSummary {
                pairs: 0,
                resolved: vec![0; l_max as usize],
                best: vec![None; l_max as usize],
                failure: None,
            };
            merge_pair(&mut s, g, x, y);
            s
        }),
    };

    let mut pairs_checked = 0u64;
    let mut resolved = vec![0u64; l_max as usize];
    let mut best: Vec<Option<LevelWitness>> = vec![None; l_max as usize];
    for s in summaries {
        if let Some((x, y, counts, thresholds)) = s.failure {
            return Err(ConnectivityError::NotRobust {
                x,
                y,
                delta,
                l_max,
                counts,
                thresholds,
            });
        }
        pairs_checked += s.pairs;
        for i in 0..l_max as usize {
            resolved[i] += s.resolved[i];
            if let Some(w) = &s.best[i] {
                if best[i].as_ref().map_or(true, |b| {
                    (w.count, w.x, w.y) < (b.count, b.x, b.y)
                }) {
                    best[i] = Some(w.clone());
                }
            }
        }
    }

    Ok(RobustConnCertificate {
        n,
        graph_hash: format!("{:016x}", g.structural_hash()),
        delta,
        l_max,
        mode,
        pairs_checked,
        resolved_at_level: resolved,
        witnesses: best.into_iter().flatten().collect(),
    })
}

/// Cache-aware certification: look for a previously stored exact certificate
/// keyed by (graph hash, delta, L) under `cache_dir`, else certify and (in
/// exact mode) store.  IO problems fall back to recomputation silently;
/// sampled certificates are never cached (they are not proofs).
pub fn load_or_certify(
    g: &Graph,
    delta: f64,
    l_max: u32,
    mode: CertMode,
    seed: u64,
    cache_dir: Option<&Path>,
) -> Result<RobustConnCertificate, ConnectivityError> {
    let path = cache_dir.map(|dir| cert_cache_path(dir, g, delta, l_max));
    if mode == CertMode::Exact {
        if let Some(p) = &path {
            if let Ok(text) = fs::read_to_string(p) {
                if let Ok(cert) = RobustConnCertificate::from_json(&text) {
                    if cert.mode == CertMode::Exact
                        && cert.n == g.n()
                        && cert.graph_hash == format!("{:016x}", g.structural_hash())
                        && cert.delta == delta
                        && cert.l_max == l_max
                    {
                        return Ok(cert);
                    }
                }
            }
        }
    }
    let cert = certify_robust_connectivity(g, delta, l_max, mode, seed)?;
    if cert.mode == CertMode::Exact {
        if let Some(p) = &path {
            if let Some(dir) = p.parent() {
                let _ = fs::create_dir_all(dir);
            }
            let _ = fs::write(p, cert.to_json());
        }
    }
    Ok(cert)
}

fn cert_cache_path(dir: &Path, g: &Graph, delta: f64, l_max: u32) -> PathBuf {
    dir.join(format!(
        "rc-{:016x}-d{:016x}-L{}.json",
        g.structural_hash(),
        delta.to_bits(),
        l_max
    ))
}

/// The ν-robust neighbourhood of `s`: every vertex with at least `ν·n`
/// neighbors inside `s` (the vertex itself may or may not lie in `s`).
pub fn robust_neighbourhood(g: &Graph, s: &BitSet, nu: f64) -> Vec<u32> {
    let n = g.n();
    let need = nu * n as f64;
    (0..n as u32)
        .filter(|&v| {
            let common = g
                .adj_row(v)
                .words()
                .iter()
                .zip(s.words())
                .map(|(&a, &b)| (a & b).count_ones() as u64)
                .sum::<u64>();
            common as f64 >= need
        })
        .collect()
}

/// Outcome of a robust-expander check.
#[derive(Clone, Debug)]
pub struct ExpanderReport {
    pub ok: bool,
    pub mode_exact: bool,
    pub sets_checked: u64,
    /// Smallest observed `|RN(S)| − |S| − νn` over checked sets.
    pub worst_margin: f64,
    /// A set achieving the worst margin (vertex list).
    pub worst_set: Vec<u32>,
}

/// Check the robust `(ν, τ)`-expander property: for every `S` with
/// `τn ≤ |S| ≤ (1−τ)n`, the ν-robust neighbourhood of `S` has size at least
/// `|S| + νn`.
///
/// Exact mode enumerates all subsets and is refused above 20 vertices;
/// sampled mode draws `samples` seeded random eligible sets and reports the
/// worst margin seen (not a proof).
pub fn check_robust_expander(
    g: &Graph,
    nu: f64,
    tau: f64,
    exact: bool,
    samples: usize,
    seed: u64,
) -> Result<ExpanderReport, ConnectivityError> {
    if !(nu > 0.0 && nu <= tau && tau <= 1.0) {
        return Err(ConnectivityError::Domain(format!(
            "need 0 < nu <= tau <= 1, got nu = {nu}, tau = {tau}"
        )));
    }
    let n = g.n();
    let lo = (tau * n as f64).ceil() as usize;
    let hi = ((1.0 - tau) * n as f64).floor() as usize;
    let mut report = ExpanderReport {
        ok: true,
        mode_exact: exact,
        sets_checked: 0,
        worst_margin: f64::INFINITY,
        worst_set: Vec::new(),
    };
    let consider = |s: &BitSet, report: &mut ExpanderReport| {
        let size = s.count() as f64;
        let rn = robust_neighbourhood(g, s, nu).len() as f64;
        let margin = rn - size - nu * n as f64;
        report.sets_checked += 1;
        if margin < report.worst_margin {
            report.worst_margin = margin;
            report.worst_set = s.iter_ones().map(|v| v as u32).collect();
        }
        if margin < 0.0 {
            report.ok = false;
        }
    };
    if exact {
        const CAP: usize = 20;
        if n > CAP {
            return Err(ConnectivityError::ExpanderCap { n, cap: CAP });
        }
        for mask in 0u32..(1u32 << n) {
            let size = mask.count_ones() as usize;
            if size < lo || size > hi {
                continue;
            }
            let mut s = BitSet::new(n);
            for v in 0..n {
                if mask & (1 << v) != 0 {
                    s.set(v);
                }
            }
            consider(&s, &mut report);
        }
    } else {
        let mut rng = rng_from_seed(derive_seed(seed, 0x6578_7061));
        for _ in 0..samples {
            if lo > hi || lo > n {
                break;
            }
            let size = rand::Rng::random_range(&mut rng, lo..=hi.min(n));
            let mut order: Vec<u32> = (0..n as u32).collect();
            rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
            let mut s = BitSet::new(n);
            for &v in order.iter().take(size) {
                s.set(v as usize);
            }
            consider(&s, &mut report);
        }
    }
    if report.sets_checked == 0 {
        report.worst_margin = 0.0;
    }
    Ok(report)
}

/// Parameters under which a robust `(ν, τ)`-expander is robustly connected:
/// `L = ⌈1/ν⌉` and `δ = (ν/4)^L · 4^(−L²)`.
pub fn expander_to_connectivity(nu: f64, tau: f64) -> Result<(u32, f64), ConnectivityError> {
    if !(nu > 0.0 && nu <= tau && tau <= 1.0) {
        return Err(ConnectivityError::Domain(format!(
            "need 0 < nu <= tau <= 1, got nu = {nu}, tau = {tau}"
        )));
    }
    // Guard the ceiling against float noise in 1/ν (e.g. 1/0.1 = 10.000…2).
    let recip = 1.0 / nu;
    let l = (recip - 1e-9).ceil().max(1.0) as u32;
    let delta = (nu / 4.0).powi(l as i32) * 4f64.powi(-((l * l) as i32));
    Ok((l, delta))
}
