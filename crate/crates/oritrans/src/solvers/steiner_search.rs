//! Grouped-Steiner search: minimize total length over forests connecting
//! each terminal group, by trying every way of merging groups into
//! connected blocks and solving each block as a Euclidean Steiner tree.
//!
//! Block trees are found by enumerating full branching topologies (t − 2
//! degree-3 branch nodes for t terminals, built by inserting each terminal
//! into every edge of the smaller topologies) and optimizing the branch
//! positions; degenerate trees arise as collapses during optimization and
//! are contracted away when the winning forest is assembled.

use super::{optimize_positions, SolveError, SolveReport, SolverConfig, Topology};
use crate::coefficients::{Alpha, NormSpec, PhiNorm};
use crate::currents::{mass, PolyCurrent1};
use crate::geometry::Point;
use crate::steiner::{tree_to_current, Forest, PartitionedInstance};
use std::collections::BTreeMap;

/// A connecting forest together with its induced current.
#[derive(Clone, Debug)]
pub struct SteinerSolution {
    pub forest: Forest,
    pub current: PolyCurrent1,
}

/// All full branching topologies on `t` terminals (ids 0..t) with t − 2
/// branch nodes (ids t..2t − 2), as edge lists. Counts: 1, 3, 15, 105 for
/// t = 3, 4, 5, 6.
fn full_topologies(t: usize) -> Vec<Vec<(usize, usize)>> {
    assert!(t >= 2);
    if t == 2 {
        return vec![vec![(0, 1)]];
    }
    fn insert_terminal(
        m: usize,
        t: usize,
        edges: &[(usize, usize)],
        acc: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if m == t {
            acc.push(edges.to_vec());
            return;
        }
        let s = t + m - 2;
        for e in 0..edges.len() {
            let mut next = edges.to_vec();
            let (u, v) = next[e];
            next[e] = (u, s);
            next.push((s, v));
            next.push((s, m));
            insert_terminal(m + 1, t, &next, acc);
        }
    }
    let mut acc = Vec::new();
    insert_terminal(2, t, &[(0, 1)], &mut acc);
    acc
}

/// Minimal-length tree spanning the given terminals: value, node positions
/// (terminals first, then surviving branch nodes), edge list over those
/// nodes, and the number of topologies tried.
fn solve_block(
    points: &[Point],
    config: &SolverConfig,
) -> Result<(f64, Vec<Point>, Vec<(usize, usize)>, u64), SolveError> {
    let t = points.len();
    if t == 2 {
        let value = crate::geometry::dist(&points[0], &points[1]);
        return Ok((value, points.to_vec(), vec![(0, 1)], 1));
    }
    let topologies = full_topologies(t);
    let mut tried = 0u64;
    let mut best: Option<(f64, usize)> = None;
    for (idx, edges) in topologies.iter().enumerate() {
        tried += 1;
        let mult = vec![vec![1i64]; edges.len()];
        let topo = Topology::new(t, t - 2, edges.clone(), mult)?;
        let value = match optimize_positions(
            &topo,
            points,
            &PhiNorm::L1,
            Alpha::new(1.0).expect("1 is a valid exponent"),
            config.tol,
            config,
        ) {
            Ok((_, value)) => value,
            Err(SolveError::NoConvergence) => continue,
            Err(e) => return Err(e),
        };
        if best.map_or(true, |(bv, _)| value < bv) {
            best = Some((value, idx));
        }
    }
    let (value, idx) = best.ok_or(SolveError::NoConvergence)?;
    let edges = topologies[idx].clone();
    let mult = vec![vec![1i64]; edges.len()];
    let topo = Topology::new(t, t - 2, edges.clone(), mult)?;
    let (positions, value2) = optimize_positions(
        &topo,
        points,
        &PhiNorm::L1,
        Alpha::new(1.0).expect("1 is a valid exponent"),
        config.tol,
        config,
    )?;
    debug_assert!((value - value2).abs() <= 1e-9 * (1.0 + value.abs()));
    Ok((value2, positions, edges, tried))
}

/// Set partitions of {0..k} as block lists, in restricted-growth order.
fn set_partitions(k: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    let mut assign = vec![0usize; k];
    fn rec(i: usize, k: usize, max_used: usize, assign: &mut Vec<usize>, out: &mut Vec<Vec<Vec<usize>>>) {
        if i == k {
            let blocks = max_used + 1;
            let mut part = vec![Vec::new(); blocks];
            for (g, &b) in assign.iter().enumerate() {
                part[b].push(g);
            }
            out.push(part);
            return;
        }
        for b in 0..=max_used + 1 {
            assign[i] = b;
            rec(i + 1, k, max_used.max(b), assign, out);
        }
    }
    if k == 0 {
        return vec![Vec::new()];
    }
    assign[0] = 0;
    rec(1, k, 0, &mut assign, &mut out);
    out
}

/// Minimizes total forest length over all ways of merging the groups into
/// blocks, solving each block as a Euclidean Steiner tree. Returns the
/// winning forest and its induced current; the reported value is the
/// re-evaluated sup-norm mass of that current.
pub fn solve_partitioned_steiner(
    inst: &PartitionedInstance,
    config: &SolverConfig,
) -> Result<SolveReport<SteinerSolution>, SolveError> {
    if inst.n() > config.max_group_terminals {
        return Err(SolveError::BudgetExceeded(format!(
            "{} terminals exceed the limit of {}",
            inst.n(),
            config.max_group_terminals
        )));
    }
    let k = inst.k();
    type Block = (f64, Vec<Point>, Vec<(usize, usize)>, u64);
    let mut memo: BTreeMap<Vec<usize>, Block> = BTreeMap::new();
    let coarsenings = set_partitions(k);
    let mut enumerated = 0u64;
    let mut best: Option<(f64, u64)> = None;
    for (rank, coarsening) in coarsenings.iter().enumerate() {
        let mut total = 0.0;
        for groups in coarsening {
            let key: Vec<usize> = groups.clone();
            if !memo.contains_key(&key) {
                let members: Vec<Point> = groups
                    .iter()
                    .flat_map(|&g| inst.group_range(g))
                    .map(|i| inst.point(i).clone())
                    .collect();
                let block = solve_block(&members, config)?;
                enumerated += block.3;
                memo.insert(key.clone(), block);
            }
            total += memo[&key].0;
        }
        if best.map_or(true, |(bv, _)| total < bv) {
            best = Some((total, rank as u64));
        }
    }
    let (_, best_rank) = best.expect("at least the identity coarsening exists");

    // assemble the winning forest, contracting collapsed branch nodes
    let mut vertex_ids: BTreeMap<Point, usize> = BTreeMap::new();
    let mut vertices: Vec<Point> = Vec::new();
    let intern = |p: &Point, vertices: &mut Vec<Point>, ids: &mut BTreeMap<Point, usize>| {
        *ids.entry(p.clone()).or_insert_with(|| {
            vertices.push(p.clone());
            vertices.len() - 1
        })
    };
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut uf: Vec<usize> = Vec::new();
    fn find(uf: &mut Vec<usize>, x: usize) -> usize {
        if uf[x] != x {
            let r = find(uf, uf[x]);
            uf[x] = r;
        }
        uf[x]
    }
    for groups in &coarsenings[best_rank as usize] {
        let (_, positions, block_edges, _) = &memo[groups];
        for &(u, v) in block_edges {
            let (pu, pv) = (&positions[u], &positions[v]);
            if pu == pv {
                continue; // contracted zero-length edge
            }
            let iu = intern(pu, &mut vertices, &mut vertex_ids);
            let iv = intern(pv, &mut vertices, &mut vertex_ids);
            while uf.len() < vertices.len() {
                uf.push(uf.len());
            }
            let (ru, rv) = (find(&mut uf, iu), find(&mut uf, iv));
            if ru == rv {
                continue; // coincidence-induced duplicate connection
            }
            uf[ru] = rv;
            edges.push((iu, iv));
        }
    }
    // terminals that every block must contain are present by construction
    let forest = Forest::new(vertices, edges)?;
    let current = tree_to_current(&forest, inst)?;
    let value = mass(&current, &NormSpec::linf(inst.m()))?;
    Ok(SolveReport {
        best: SteinerSolution { forest, current },
        value,
        enumerated: enumerated + coarsenings.len() as u64,
        best_rank,
        residual: 0.0,
        config: config.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::currents::boundary;
    use crate::steiner::build_boundary_steiner;

    #[test]
    fn full_topology_counts() {
        assert_eq!(full_topologies(2).len(), 1);
        assert_eq!(full_topologies(3).len(), 1);
        assert_eq!(full_topologies(4).len(), 3);
        assert_eq!(full_topologies(5).len(), 15);
        assert_eq!(full_topologies(6).len(), 105);
    }

    #[test]
    fn set_partition_counts_are_bell_numbers() {
        assert_eq!(set_partitions(1).len(), 1);
        assert_eq!(set_partitions(2).len(), 2);
        assert_eq!(set_partitions(3).len(), 5);
    }

    #[test]
    fn square_with_diagonal_pairs_merges_into_the_branched_network() {
        let pts = vec![
            Point::xy(1, 1),
            Point::xy(1, -1),
            Point::xy(-1, -1),
            Point::xy(-1, 1),
        ];
        let inst =
            PartitionedInstance::new(pts, vec![vec![0, 2], vec![1, 3]]).unwrap();
        let config = SolverConfig::default();
        let rep = solve_partitioned_steiner(&inst, &config).unwrap();
        let expect = 2.0 + 2.0 * 3.0f64.sqrt();
        assert!(
            (rep.value - expect).abs() < 1e-4,
            "value {} vs {expect}",
            rep.value
        );
        assert_eq!(boundary(&rep.best.current), build_boundary_steiner(&inst));
        // beats the two plain diagonals
        assert!(rep.value < 4.0 * 2.0f64.sqrt() - 0.1);
    }

    #[test]
    fn close_pairs_stay_separate() {
        // two short pairs far apart: merging costs ≥ the 10-unit gap
        let pts = vec![
            Point::xy(0, 0),
            Point::xy(0, 1),
            Point::xy(10, 0),
            Point::xy(10, 1),
        ];
        let inst = PartitionedInstance::new(
            pts,
            vec![vec![0, 1], vec![2, 3]],
        )
        .unwrap();
        let config = SolverConfig::default();
        let rep = solve_partitioned_steiner(&inst, &config).unwrap();
        assert!((rep.value - 2.0).abs() < 1e-6);
        assert_eq!(rep.best.forest.edges().len(), 2);
    }

    #[test]
    fn single_group_of_three_builds_the_fermat_tree() {
        let h = 3.0f64.sqrt() / 2.0;
        let pts = vec![
            Point::from_f64(&[0.0, 0.0]).unwrap(),
            Point::from_f64(&[1.0, 0.0]).unwrap(),
            Point::from_f64(&[0.5, h]).unwrap(),
        ];
        let inst = PartitionedInstance::new(pts, vec![vec![0, 1, 2]]).unwrap();
        let config = SolverConfig::default();
        let rep = solve_partitioned_steiner(&inst, &config).unwrap();
        assert!((rep.value - 3.0f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn collinear_group_collapses_its_branch_node() {
        let pts = vec![Point::xy(0, 0), Point::xy(1, 0), Point::xy(3, 0)];
        let inst = PartitionedInstance::new(pts, vec![vec![0, 1, 2]]).unwrap();
        let config = SolverConfig::default();
        let rep = solve_partitioned_steiner(&inst, &config).unwrap();
        assert!((rep.value - 3.0).abs() < 1e-6);
    }

    #[test]
    fn budget_guard_rejects_seven_terminals() {
        let pts: Vec<Point> = (0..7).map(|i| Point::xy(i, i * i)).collect();
        let inst = PartitionedInstance::new(
            pts,
            vec![vec![0, 1, 2], vec![3, 4], vec![5, 6]],
        )
        .unwrap();
        let config = SolverConfig::default();
        assert!(matches!(
            solve_partitioned_steiner(&inst, &config),
            Err(SolveError::BudgetExceeded(_))
        ));
    }
}
