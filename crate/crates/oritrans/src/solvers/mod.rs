//! Desk-scale optimizers: exhaustive lattice oracles, branched-topology
//! search with continuous position optimization, grouped-Steiner search over
//! partition coarsenings, and a first-order solver for the real-coefficient
//! relaxation on a fixed support.
//!
//! Every search is exhaustive within explicit budgets; exceeding a budget is
//! a hard error, never a silent truncation. All searches are deterministic:
//! parallel reductions order ties by candidate rank, and iterative methods
//! take their randomness from a caller-supplied seed.

mod lattice;
mod positions;
mod relax;
mod steiner_search;
mod topology;

pub use lattice::{
    brute_force_lattice_current, brute_force_lattice_mailing, LatticeGrid,
};
pub use positions::{optimize_positions, Topology};
pub use relax::solve_real_relaxation;
pub use steiner_search::{solve_partitioned_steiner, SteinerSolution};
pub use topology::solve_mailing_topology;

use crate::coefficients::CoeffError;
use crate::currents::CurrentError;
use crate::geometry::GeometryError;
use crate::mailing::MailingError;
use crate::steiner::SteinerError;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Coeff(#[from] CoeffError),
    #[error(transparent)]
    Current(#[from] CurrentError),
    #[error(transparent)]
    Mailing(#[from] MailingError),
    #[error(transparent)]
    Steiner(#[from] SteinerError),
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("instance not solvable by this solver: {0}")]
    BadInstance(String),
    #[error("boundary is infeasible on this support: {0}")]
    Infeasible(String),
    #[error("position optimizer did not reach the requested tolerance")]
    NoConvergence,
}

/// Budgets, tolerances, and seeds shared by the solvers. Budgets are hard
/// limits; a request beyond them fails with [`SolveError::BudgetExceeded`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Lattice oracles: maximum total routed units Σ g_ij.
    pub max_total_units: i64,
    /// Lattice oracles: maximum grid width and height in points.
    pub max_grid: i64,
    /// Topology search: maximum number of terminals.
    pub max_terminals: usize,
    /// Topology search: maximum allowed `max_steiner` argument.
    pub max_steiner_budget: usize,
    /// Grouped-Steiner search: maximum number of terminals.
    pub max_group_terminals: usize,
    /// Cap on enumerated candidates across any single search.
    pub max_enumeration: u64,
    /// Convergence tolerance for the continuous sub-solvers.
    pub tol: f64,
    /// Position optimizer: maximum coordinate sweeps per restart.
    pub max_sweeps: usize,
    /// Position optimizer: random restarts.
    pub restarts: usize,
    /// Relaxation: outer rounds with geometrically shrinking steps.
    pub relax_rounds: usize,
    /// Relaxation: subgradient steps per round.
    pub relax_inner: usize,
    /// Seed for all randomized initializations.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_total_units: 4,
            max_grid: 5,
            max_terminals: 5,
            max_steiner_budget: 3,
            max_group_terminals: 6,
            max_enumeration: 20_000_000,
            tol: 1e-6,
            max_sweeps: 20_000,
            restarts: 4,
            relax_rounds: 60,
            relax_inner: 500,
            seed: 0,
        }
    }
}

/// Outcome of a search: the best object found, its re-evaluated value, and
/// enough bookkeeping to audit the search (candidates examined, rank of the
/// winner in enumeration order, configuration echo).
#[derive(Clone, Debug)]
pub struct SolveReport<T> {
    pub best: T,
    pub value: f64,
    /// Candidates examined (for iterative solvers: iterations taken).
    pub enumerated: u64,
    /// Enumeration rank of the winner; ties break toward the lowest rank.
    pub best_rank: u64,
    /// Feasibility residual for iterative solvers; 0 for exact enumeration.
    pub residual: f64,
    pub config: SolverConfig,
}

impl<T> SolveReport<T> {
    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> SolveReport<U> {
        SolveReport {
            best: f(self.best),
            value: self.value,
            enumerated: self.enumerated,
            best_rank: self.best_rank,
            residual: self.residual,
            config: self.config,
        }
    }
}

/// Runs `f` on a dedicated thread pool sized by the ORITRANS_THREADS
/// environment variable, or on the global pool when unset or invalid.
pub(crate) fn with_thread_pool<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    let requested = std::env::var("ORITRANS_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n >= 1);
    match requested {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        None => f(),
    }
}

/// Minimum of (value, rank) pairs with a total order: lower value wins, then
/// lower rank. Values are finite by construction.
pub(crate) fn better(a: (f64, u64), b: (f64, u64)) -> (f64, u64) {
    if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}
