//! Continuous placement of branching nodes for a fixed routing topology.
//!
//! Once the per-edge multiplicity vectors are fixed, each edge has a
//! constant nonnegative cost rate and the objective Σ_e c_e·|x_u − x_v| is
//! convex in the branching-node positions. It is minimized by cyclic
//! single-node geometric-median updates (Weiszfeld steps with the standard
//! anchor-point correction), with seeded random restarts; convergence is
//! certified by a subgradient-norm residual that accounts for collapsed
//! (coincident) nodes via zero-length-edge slack.

use super::{SolveError, SolverConfig};
use crate::coefficients::{cost_c, Alpha, PhiNorm};
use crate::geometry::Point;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// An abstract routing graph: `terminals` fixed nodes (ids 0..t), `steiner`
/// movable nodes (ids t..t+s), and edges carrying integer multiplicity
/// vectors oriented from the lower id as listed.
#[derive(Clone, Debug, PartialEq)]
pub struct Topology {
    terminals: usize,
    steiner: usize,
    edges: Vec<(usize, usize)>,
    multiplicities: Vec<Vec<i64>>,
}

impl Topology {
    pub fn new(
        terminals: usize,
        steiner: usize,
        edges: Vec<(usize, usize)>,
        multiplicities: Vec<Vec<i64>>,
    ) -> Result<Self, SolveError> {
        let nodes = terminals + steiner;
        if multiplicities.len() != edges.len() {
            return Err(SolveError::BadInstance(
                "one multiplicity vector per edge required".into(),
            ));
        }
        let channels = multiplicities.first().map_or(0, |m| m.len());
        for m in &multiplicities {
            if m.len() != channels {
                return Err(SolveError::BadInstance(
                    "multiplicity vectors must share one length".into(),
                ));
            }
        }
        for &(u, v) in &edges {
            if u >= nodes || v >= nodes || u == v {
                return Err(SolveError::BadInstance(format!(
                    "edge ({u}, {v}) out of range"
                )));
            }
        }
        Ok(Topology { terminals, steiner, edges, multiplicities })
    }

    pub fn terminals(&self) -> usize {
        self.terminals
    }

    pub fn steiner(&self) -> usize {
        self.steiner
    }

    pub fn nodes(&self) -> usize {
        self.terminals + self.steiner
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn multiplicities(&self) -> &[Vec<i64>] {
        &self.multiplicities
    }

    /// True iff, per channel, the signed multiplicities around every node
    /// add up to the prescribed divergence (head counts +, tail counts −).
    pub fn check_conservation(&self, divergence: &[Vec<i64>]) -> bool {
        if divergence.len() != self.nodes() {
            return false;
        }
        let channels = self.multiplicities.first().map_or(0, |m| m.len());
        if divergence.iter().any(|d| d.len() != channels) {
            return false;
        }
        let mut acc = vec![vec![0i64; channels]; self.nodes()];
        for (&(u, v), m) in self.edges.iter().zip(&self.multiplicities) {
            for c in 0..channels {
                acc[v][c] += m[c];
                acc[u][c] -= m[c];
            }
        }
        acc == divergence
    }
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    norm(&sub(a, b))
}

struct Workspace {
    positions: Vec<Vec<f64>>,
    costs: Vec<f64>,
    incident: Vec<Vec<(usize, usize)>>, // per steiner node: (edge, other endpoint)
    terminals: usize,
    dim: usize,
    scale: f64,
}

impl Workspace {
    fn objective(&self, topo: &Topology) -> f64 {
        topo.edges
            .iter()
            .zip(&self.costs)
            .map(|(&(u, v), &c)| c * dist(&self.positions[u], &self.positions[v]))
            .sum()
    }

    /// One exact-ish block solve: Weiszfeld iterations for a single node
    /// against its (fixed) neighbors. Never increases the objective.
    fn relax_node(&mut self, s: usize, tiny: f64) {
        let node = self.terminals + s;
        let anchors: Vec<(Vec<f64>, f64)> = self.incident[s]
            .iter()
            .filter(|&&(e, _)| self.costs[e] > 0.0)
            .map(|&(e, other)| (self.positions[other].clone(), self.costs[e]))
            .collect();
        if anchors.is_empty() {
            return;
        }
        let mut x = self.positions[node].clone();
        for _ in 0..25 {
            // split anchors into coincident and distant
            let mut pull = vec![0.0; self.dim];
            let mut inv_sum = 0.0;
            let mut resist = 0.0;
            let mut drive = vec![0.0; self.dim];
            for (y, w) in &anchors {
                let d = dist(&x, y);
                if d <= tiny {
                    resist += w;
                } else {
                    for k in 0..self.dim {
                        pull[k] += w * y[k] / d;
                        drive[k] += w * (y[k] - x[k]) / d;
                    }
                    inv_sum += w / d;
                }
            }
            let step: Vec<f64> = if resist > 0.0 {
                // at an anchor: move only if the remaining pull beats the
                // anchor weight, and only by the corrected fraction
                let dn = norm(&drive);
                if dn <= resist || inv_sum == 0.0 {
                    break;
                }
                let t = (dn - resist) / (inv_sum * dn);
                (0..self.dim).map(|k| x[k] + t * drive[k]).collect()
            } else if inv_sum == 0.0 {
                break;
            } else {
                (0..self.dim).map(|k| pull[k] / inv_sum).collect()
            };
            let moved = dist(&step, &x);
            x = step;
            if moved <= tiny {
                break;
            }
        }
        self.positions[node] = x;
    }

    /// First-order stationarity residual. Nodes within `glue` of each other
    /// form clusters; a zero-length edge can absorb force up to its cost, so
    /// a clustered node's residual is reduced by its internal edge costs,
    /// and a cluster of movable nodes must also have small net force.
    fn residual(&self, topo: &Topology, glue: f64) -> f64 {
        let n = topo.nodes();
        let mut cluster: Vec<usize> = (0..n).collect();
        fn find(c: &mut Vec<usize>, x: usize) -> usize {
            if c[x] != x {
                let r = find(c, c[x]);
                c[x] = r;
            }
            c[x]
        }
        for &(u, v) in &topo.edges {
            if dist(&self.positions[u], &self.positions[v]) <= glue {
                let (ru, rv) = (find(&mut cluster, u), find(&mut cluster, v));
                if ru != rv {
                    cluster[ru] = rv;
                }
            }
        }
        let mut node_force = vec![vec![0.0; self.dim]; n];
        let mut node_slack = vec![0.0; n];
        for (&(u, v), &c) in topo.edges.iter().zip(&self.costs) {
            let d = dist(&self.positions[u], &self.positions[v]);
            if d <= glue {
                node_slack[u] += c;
                node_slack[v] += c;
                continue;
            }
            for k in 0..self.dim {
                let pull = c * (self.positions[v][k] - self.positions[u][k]) / d;
                node_force[u][k] += pull;
                node_force[v][k] -= pull;
            }
        }
        let mut res = 0.0f64;
        // per movable node: external force beyond zero-length slack
        for s in 0..topo.steiner {
            let node = self.terminals + s;
            res = res.max((norm(&node_force[node]) - node_slack[node]).max(0.0));
        }
        // per cluster of movable nodes only: rigid motion has no slack
        let mut cluster_force: std::collections::BTreeMap<usize, Vec<f64>> =
            std::collections::BTreeMap::new();
        let mut cluster_fixed: std::collections::BTreeSet<usize> =
            std::collections::BTreeSet::new();
        for x in 0..n {
            let r = find(&mut cluster, x);
            if x < self.terminals {
                cluster_fixed.insert(r);
                continue;
            }
            let entry =
                cluster_force.entry(r).or_insert_with(|| vec![0.0; self.dim]);
            for k in 0..self.dim {
                entry[k] += node_force[x][k];
            }
        }
        for (r, f) in &cluster_force {
            if !cluster_fixed.contains(r) {
                res = res.max(norm(f));
            }
        }
        res / self.scale.max(1.0)
    }
}

/// Minimizes Σ_e cost(θ_e)·length(e) over the movable-node positions.
///
/// Returns positions for all nodes (terminals first, unchanged) and the
/// objective value. Succeeds when some restart reaches subgradient residual
/// ≤ `tol`, or when at least two restarts agree on the value to within
/// `tol`; otherwise fails with [`SolveError::NoConvergence`].
pub fn optimize_positions(
    topo: &Topology,
    terminals: &[Point],
    phi: &PhiNorm,
    alpha: Alpha,
    tol: f64,
    config: &SolverConfig,
) -> Result<(Vec<Point>, f64), SolveError> {
    if terminals.len() != topo.terminals() {
        return Err(SolveError::BadInstance(format!(
            "topology expects {} terminals, got {}",
            topo.terminals(),
            terminals.len()
        )));
    }
    if !(tol > 0.0) {
        return Err(SolveError::BadInstance("tolerance must be positive".into()));
    }
    let dim = terminals.first().map_or(2, Point::dim);
    let term_f64: Vec<Vec<f64>> = terminals.iter().map(Point::to_f64).collect();
    let costs: Vec<f64> = topo
        .multiplicities()
        .iter()
        .map(|m| cost_c(m, phi, alpha))
        .collect();
    let scale = term_f64
        .iter()
        .flat_map(|a| term_f64.iter().map(move |b| dist(a, b)))
        .fold(1.0f64, f64::max);

    let mut incident = vec![Vec::new(); topo.steiner()];
    for (e, &(u, v)) in topo.edges().iter().enumerate() {
        if u >= topo.terminals() {
            incident[u - topo.terminals()].push((e, v));
        }
        if v >= topo.terminals() {
            incident[v - topo.terminals()].push((e, u));
        }
    }

    if topo.steiner() == 0 {
        let ws = Workspace {
            positions: term_f64,
            costs,
            incident,
            terminals: topo.terminals(),
            dim,
            scale,
        };
        let value = ws.objective(topo);
        return Ok((terminals.to_vec(), value));
    }

    let tiny = 1e-14 * scale;
    let glue = 1e-7 * scale;
    let mut results: Vec<(f64, Vec<Vec<f64>>, f64)> = Vec::new(); // (value, positions, residual)
    for restart in 0..config.restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(
            config.seed.wrapping_add((restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
        );
        let mut positions = term_f64.clone();
        for _ in 0..topo.steiner() {
            // random convex combination of the terminals
            let mut weights: Vec<f64> =
                (0..term_f64.len()).map(|_| rng.gen_range(0.05..1.0)).collect();
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
            let mut pos = vec![0.0; dim];
            for (t, w) in term_f64.iter().zip(&weights) {
                for k in 0..dim {
                    pos[k] += w * t[k];
                }
            }
            positions.push(pos);
        }
        let mut ws = Workspace {
            positions,
            costs: costs.clone(),
            incident: incident.clone(),
            terminals: topo.terminals(),
            dim,
            scale,
        };
        let mut value = ws.objective(topo);
        let mut residual = f64::INFINITY;
        for _sweep in 0..config.max_sweeps {
            for s in 0..topo.steiner() {
                ws.relax_node(s, tiny);
            }
            let next = ws.objective(topo);
            debug_assert!(
                next <= value + 1e-9 * (1.0 + value.abs()),
                "coordinate updates must not increase the objective"
            );
            let stalled = (value - next).abs() <= 1e-4 * tol * (1.0 + next.abs());
            value = next;
            residual = ws.residual(topo, glue);
            if residual <= tol || stalled {
                break;
            }
        }
        results.push((value, ws.positions, residual));
    }

    let best_idx = (0..results.len())
        .min_by(|&a, &b| {
            results[a].0.partial_cmp(&results[b].0).expect("finite objectives")
        })
        .expect("at least one restart");
    let (best_value, best_positions, best_residual) = &results[best_idx];
    let agreeing = results
        .iter()
        .filter(|(v, _, _)| (v - best_value).abs() <= tol * (1.0 + best_value.abs()))
        .count();
    if *best_residual > tol && agreeing < 2 {
        return Err(SolveError::NoConvergence);
    }

    // snap coincident movable nodes together (and onto terminals) so that
    // downstream exact geometry sees genuinely equal points
    let mut snapped = best_positions.clone();
    for i in topo.terminals()..topo.nodes() {
        for j in 0..i {
            if dist(&snapped[i], &snapped[j]) <= glue {
                snapped[i] = snapped[j].clone();
                break;
            }
        }
    }
    let value = {
        let ws = Workspace {
            positions: snapped.clone(),
            costs,
            incident,
            terminals: topo.terminals(),
            dim,
            scale,
        };
        ws.objective(topo)
    };
    let mut out: Vec<Point> = terminals.to_vec();
    for pos in snapped.iter().skip(topo.terminals()) {
        out.push(Point::from_f64(pos)?);
    }
    Ok((out, value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::dist as point_dist;

    fn unit_costs_topology(
        terminals: usize,
        steiner: usize,
        edges: Vec<(usize, usize)>,
    ) -> Topology {
        let mult = vec![vec![1i64]; edges.len()];
        Topology::new(terminals, steiner, edges, mult).unwrap()
    }

    fn l1() -> PhiNorm {
        PhiNorm::L1
    }

    fn one() -> Alpha {
        Alpha::new(1.0).unwrap()
    }

    #[test]
    fn conservation_check_matches_hand_count() {
        let topo = Topology::new(
            2,
            1,
            vec![(0, 2), (2, 1)],
            vec![vec![1, 0], vec![1, -1]],
        )
        .unwrap();
        let divergence = vec![vec![-1, 0], vec![1, -1], vec![0, 1]];
        assert!(topo.check_conservation(&divergence));
        let wrong = vec![vec![1, 0], vec![-1, 1], vec![0, -1]];
        assert!(!topo.check_conservation(&wrong));
    }

    #[test]
    fn fermat_point_of_the_unit_equilateral_triangle() {
        let h = 3.0f64.sqrt() / 2.0;
        let terminals = vec![
            Point::from_f64(&[0.0, 0.0]).unwrap(),
            Point::from_f64(&[1.0, 0.0]).unwrap(),
            Point::from_f64(&[0.5, h]).unwrap(),
        ];
        let topo = unit_costs_topology(3, 1, vec![(0, 3), (1, 3), (2, 3)]);
        let config = SolverConfig::default();
        let (positions, value) =
            optimize_positions(&topo, &terminals, &l1(), one(), 1e-7, &config)
                .unwrap();
        assert!((value - 3.0f64.sqrt()).abs() < 1e-6);
        let center = Point::from_f64(&[0.5, h / 3.0]).unwrap();
        assert!(point_dist(&positions[3], &center) < 1e-5);
    }

    #[test]
    fn chain_node_collapses_onto_the_segment() {
        let terminals = vec![Point::xy(0, 0), Point::xy(4, 0)];
        let topo = unit_costs_topology(2, 1, vec![(0, 2), (2, 1)]);
        let config = SolverConfig::default();
        let (positions, value) =
            optimize_positions(&topo, &terminals, &l1(), one(), 1e-7, &config)
                .unwrap();
        assert!((value - 4.0).abs() < 1e-6);
        // the movable node sits on the segment: distances add up
        let d = point_dist(&positions[0], &positions[2])
            + point_dist(&positions[2], &positions[1]);
        assert!((d - 4.0).abs() < 1e-6);
    }

    #[test]
    fn square_terminals_branch_through_two_junctions() {
        let terminals = vec![
            Point::xy(1, 1),
            Point::xy(1, -1),
            Point::xy(-1, -1),
            Point::xy(-1, 1),
        ];
        // junction 4 serves the right pair, junction 5 the left pair
        let topo = unit_costs_topology(
            4,
            2,
            vec![(0, 4), (1, 4), (4, 5), (5, 2), (5, 3)],
        );
        let config = SolverConfig::default();
        let (positions, value) =
            optimize_positions(&topo, &terminals, &l1(), one(), 1e-7, &config)
                .unwrap();
        let expect = 2.0 + 2.0 * 3.0f64.sqrt();
        assert!((value - expect).abs() < 1e-6, "value {value} vs {expect}");
        let c = 1.0 - 1.0 / 3.0f64.sqrt();
        let right = Point::from_f64(&[c, 0.0]).unwrap();
        let left = Point::from_f64(&[-c, 0.0]).unwrap();
        assert!(point_dist(&positions[4], &right) < 1e-4);
        assert!(point_dist(&positions[5], &left) < 1e-4);
    }

    #[test]
    fn restart_seeds_agree_on_the_value() {
        let h = 3.0f64.sqrt() / 2.0;
        let terminals = vec![
            Point::from_f64(&[0.0, 0.0]).unwrap(),
            Point::from_f64(&[1.0, 0.0]).unwrap(),
            Point::from_f64(&[0.5, h]).unwrap(),
        ];
        let topo = unit_costs_topology(3, 1, vec![(0, 3), (1, 3), (2, 3)]);
        let tol = 1e-7;
        let mut values = Vec::new();
        for seed in [0u64, 1, 42] {
            let config = SolverConfig { seed, ..SolverConfig::default() };
            let (_, value) =
                optimize_positions(&topo, &terminals, &l1(), one(), tol, &config)
                    .unwrap();
            values.push(value);
        }
        for w in values.windows(2) {
            assert!((w[0] - w[1]).abs() <= 10.0 * tol);
        }
    }

    #[test]
    fn weighted_edges_shift_the_junction() {
        // heavy edge to terminal 0 pulls the junction onto terminal 0
        let terminals = vec![Point::xy(0, 0), Point::xy(2, 0), Point::xy(0, 2)];
        let topo = Topology::new(
            3,
            1,
            vec![(0, 3), (1, 3), (2, 3)],
            vec![vec![10], vec![1], vec![1]],
        )
        .unwrap();
        let config = SolverConfig::default();
        let (positions, value) =
            optimize_positions(&topo, &terminals, &l1(), one(), 1e-7, &config)
                .unwrap();
        assert!(point_dist(&positions[3], &terminals[0]) < 1e-6);
        assert!((value - (2.0 + 2.0)).abs() < 1e-5);
    }
}
