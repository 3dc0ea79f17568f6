//! Construction and verification of strong-separating path systems on
//! dense regular graphs.
//!
//! A path system `𝒫` of a graph assigns each edge `e` a *signature*
//! `𝒫(e) = { i : e ∈ paths[i] }`.  The system *weakly separates* the graph
//! when all signatures are pairwise distinct, and *strongly separates* it
//! when the signatures are pairwise incomparable under inclusion and every
//! edge is covered.  This crate provides
//!
//! - exact verifiers and lower-bound formulas ([`graph`]),
//! - a brute-force optimum solver for tiny instances ([`oracle`]),
//! - a conflict-free hypergraph-matching engine ([`hypergraph`]),
//! - robust-connectivity certification ([`connectivity`]),
//! - the staged randomized construction for dense nearly regular graphs:
//!   auxiliary base structure ([`base`]), separator extraction
//!   ([`separator`]), cycle-breaking and path-joining ([`refine`]),
//!   leftover-edge absorption ([`leftover`]),
//! - and an end-to-end driver with instance generators ([`driver`]).
//!
//! All randomness is seeded and every stage is deterministic given its
//! seed, including under the parallel execution feature (`parallel`,
//! enabled by default).

pub mod base;
pub mod connectivity;
pub mod driver;
mod exec;
pub mod graph;
pub mod hypergraph;
pub mod leftover;
pub mod oracle;
pub mod refine;
pub mod separator;
pub mod util;
