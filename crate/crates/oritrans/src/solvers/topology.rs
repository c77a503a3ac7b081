//! Branched-network search for routing instances: enumerate abstract route
//! systems over the terminals plus a bounded number of branching nodes,
//! price each system by its per-edge multiplicity cost, optimize the
//! branching positions, and keep the best.
//!
//! The search space is the set of per-unit simple routes through the
//! abstract node set. Per-commodity cycles are excluded (cycle removal never
//! increases the energy), branching nodes are forced to degree ≥ 3 in the
//! route union (degree ≤ 2 nodes collapse onto a straight edge at optimal
//! positions), and systems are deduplicated by commodity-wise route order
//! and first-use order of the branching nodes.

use super::{
    better, optimize_positions, with_thread_pool, SolveError, SolveReport,
    SolverConfig, Topology,
};
use crate::coefficients::{Alpha, PhiNorm};
use crate::currents::{energy_alpha_phi, remove_cycles, MailingInstance, PolyCurrent1, Ring};
use crate::geometry::{Point, Segment};
use rayon::prelude::*;
use std::collections::BTreeMap;

/// All simple routes from `from` to `to` through nodes 0..nodes.
fn enumerate_routes(nodes: usize, from: usize, to: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut walk = vec![from];
    let mut used = vec![false; nodes];
    used[from] = true;
    let mut next = vec![0usize];
    while let Some(cand) = next.last_mut() {
        let here = *walk.last().expect("walk non-empty");
        if here == to {
            out.push(walk.clone());
            next.pop();
            used[walk.pop().expect("non-empty")] = false;
            continue;
        }
        if *cand >= nodes {
            next.pop();
            used[walk.pop().expect("non-empty")] = false;
            continue;
        }
        let v = *cand;
        *cand += 1;
        if !used[v] {
            used[v] = true;
            walk.push(v);
            next.push(0);
        }
    }
    out
}

struct TopologyProblem {
    n: usize,
    channels: Vec<(usize, usize, i64)>,
    routes: Vec<Vec<Vec<usize>>>,
    total: u64,
}

impl TopologyProblem {
    fn build(
        inst: &MailingInstance,
        max_steiner: usize,
        config: &SolverConfig,
    ) -> Result<Self, SolveError> {
        if inst.n() > config.max_terminals {
            return Err(SolveError::BudgetExceeded(format!(
                "{} terminals exceed the limit of {}",
                inst.n(),
                config.max_terminals
            )));
        }
        if max_steiner > config.max_steiner_budget {
            return Err(SolveError::BudgetExceeded(format!(
                "{} branching nodes exceed the limit of {}",
                max_steiner, config.max_steiner_budget
            )));
        }
        let nodes = inst.n() + max_steiner;
        let mut channels = Vec::new();
        let mut routes = Vec::new();
        let mut total: u64 = 1;
        for (i, j, g) in inst.channels() {
            let list = enumerate_routes(nodes, i, j);
            for _ in 0..g {
                total = total
                    .checked_mul(list.len() as u64)
                    .filter(|&t| t <= config.max_enumeration)
                    .ok_or_else(|| {
                        SolveError::BudgetExceeded(format!(
                            "more than {} route systems",
                            config.max_enumeration
                        ))
                    })?;
            }
            channels.push((i, j, g));
            routes.push(list);
        }
        Ok(TopologyProblem { n: inst.n(), channels, routes, total })
    }

    fn decode(&self, rank: u64, out: &mut Vec<u32>) -> bool {
        out.clear();
        let mut r = rank;
        for (ch, &(_, _, g)) in self.channels.iter().enumerate() {
            let base = self.routes[ch].len() as u64;
            let mut prev = 0u32;
            for u in 0..g {
                let digit = (r % base) as u32;
                r /= base;
                if u > 0 && digit < prev {
                    return false;
                }
                prev = digit;
                out.push(digit);
            }
        }
        true
    }

    /// Canonical iff branching nodes first appear in id order; returns the
    /// number of branching nodes used.
    fn steiner_usage(&self, digits: &[u32]) -> Option<usize> {
        let mut next = self.n;
        let mut d = 0;
        for (ch, &(_, _, g)) in self.channels.iter().enumerate() {
            for _ in 0..g {
                for &v in &self.routes[ch][digits[d] as usize] {
                    if v >= self.n {
                        if v == next {
                            next += 1;
                        } else if v > next {
                            return None;
                        }
                    }
                }
                d += 1;
            }
        }
        Some(next - self.n)
    }

    /// Net multiplicity vectors per undirected node pair (low id first).
    fn edge_multiplicities(
        &self,
        digits: &[u32],
    ) -> BTreeMap<(usize, usize), Vec<i64>> {
        let nch = self.channels.len();
        let mut edges: BTreeMap<(usize, usize), Vec<i64>> = BTreeMap::new();
        let mut d = 0;
        for (ch, &(_, _, g)) in self.channels.iter().enumerate() {
            for _ in 0..g {
                let route = &self.routes[ch][digits[d] as usize];
                d += 1;
                for w in route.windows(2) {
                    let (a, b) = (w[0], w[1]);
                    let key = (a.min(b), a.max(b));
                    let sign = if a < b { 1 } else { -1 };
                    edges.entry(key).or_insert_with(|| vec![0; nch])[ch] += sign;
                }
            }
        }
        edges.retain(|_, m| m.iter().any(|&c| c != 0));
        edges
    }

    /// Builds the candidate topology, or None when a used branching node has
    /// fewer than 3 distinct neighbors (such systems collapse onto smaller
    /// ones and are enumerated there).
    fn candidate(
        &self,
        digits: &[u32],
    ) -> Option<(Topology, BTreeMap<(usize, usize), Vec<i64>>)> {
        let used = self.steiner_usage(digits)?;
        let edges = self.edge_multiplicities(digits);
        let mut degree = vec![std::collections::BTreeSet::new(); used];
        for &(u, v) in edges.keys() {
            if u >= self.n + used || v >= self.n + used {
                return None; // routes through unused ids are non-canonical
            }
            if u >= self.n {
                degree[u - self.n].insert(v);
            }
            if v >= self.n {
                degree[v - self.n].insert(u);
            }
        }
        if degree.iter().any(|d| d.len() < 3) {
            return None;
        }
        let pairs: Vec<(usize, usize)> = edges.keys().copied().collect();
        let mults: Vec<Vec<i64>> = edges.values().cloned().collect();
        let topo = Topology::new(self.n, used, pairs, mults).ok()?;
        Some((topo, edges))
    }
}

/// Searches branched routings of the instance: every admissible system of
/// per-unit simple routes through at most `max_steiner` extra nodes, with
/// branch positions optimized per candidate. Returns the best routing as an
/// integer current with per-commodity cycles removed.
pub fn solve_mailing_topology(
    inst: &MailingInstance,
    phi: &PhiNorm,
    alpha: Alpha,
    max_steiner: usize,
    config: &SolverConfig,
) -> Result<SolveReport<PolyCurrent1>, SolveError> {
    let prob = TopologyProblem::build(inst, max_steiner, config)?;
    let evaluate = |rank: u64| -> Option<f64> {
        let mut digits = Vec::new();
        if !prob.decode(rank, &mut digits) {
            return None;
        }
        let (topo, _) = prob.candidate(&digits)?;
        match optimize_positions(&topo, inst.points(), phi, alpha, config.tol, config)
        {
            Ok((_, value)) => Some(value),
            Err(_) => None,
        }
    };
    let total = prob.total;
    let chunk = (total / 64).max(16);
    let starts: Vec<u64> = (0..total).step_by(chunk as usize).collect();
    let (_, best_rank) = with_thread_pool(|| {
        starts
            .par_iter()
            .map(|&start| {
                let mut best = (f64::INFINITY, u64::MAX);
                for rank in start..(start + chunk).min(total) {
                    if let Some(v) = evaluate(rank) {
                        best = better(best, (v, rank));
                    }
                }
                best
            })
            .reduce(|| (f64::INFINITY, u64::MAX), better)
    });
    if best_rank == u64::MAX {
        return Err(SolveError::BadInstance(
            "no admissible routing found within the branching budget".into(),
        ));
    }

    // rebuild the winner deterministically
    let mut digits = Vec::new();
    assert!(prob.decode(best_rank, &mut digits));
    let (topo, _) = prob.candidate(&digits).expect("winner is admissible");
    let (positions, _) =
        optimize_positions(&topo, inst.points(), phi, alpha, config.tol, config)?;
    let m = inst.n() * inst.n();
    let mut raw: Vec<(Segment, Vec<f64>)> = Vec::new();
    let mut d = 0;
    for (ch, &(i, j, g)) in prob.channels.iter().enumerate() {
        for _ in 0..g {
            let route = &prob.routes[ch][digits[d] as usize];
            d += 1;
            let mut coef = vec![0.0; m];
            coef[i * inst.n() + j] = 1.0;
            let pts: Vec<&Point> = route.iter().map(|&v| &positions[v]).collect();
            for w in pts.windows(2) {
                if w[0] == w[1] {
                    continue; // collapsed branch nodes
                }
                raw.push((Segment::new(w[0].clone(), w[1].clone())?, coef.clone()));
            }
        }
    }
    let current = PolyCurrent1::new(m, Ring::Integer, raw)?;
    let current = remove_cycles(&current, phi, alpha)?;
    let value = energy_alpha_phi(&current, phi, alpha)?;
    Ok(SolveReport {
        best: current,
        value,
        enumerated: total,
        best_rank,
        residual: 0.0,
        config: config.clone(),
    })
}
