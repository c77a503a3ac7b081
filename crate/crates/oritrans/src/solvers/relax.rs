//! Real-coefficient relaxation on a fixed support graph: minimize
//! Σ_e ‖θ_e‖ · length(e) over coefficient assignments whose induced current
//! has the prescribed boundary.
//!
//! The support is normalized into overlay atoms (edges) meeting at shared
//! endpoints (vertices). Per-channel conservation is a linear system
//! A z = b over the edges; a one-time reduction of [A | B] yields a
//! particular solution and an orthonormal null basis, so the subgradient
//! search moves only inside the affine feasible set and feasibility holds
//! to rounding error throughout.

use super::{SolveError, SolveReport, SolverConfig};
use crate::coefficients::{coeff_norm, Alpha, NormKind, NormSpec, PhiNorm};
use crate::currents::{AtomicMeasure0, PolyCurrent1, Ring};
use crate::geometry::{overlay, Point, Segment};
use std::collections::BTreeMap;

/// Edge list of the normalized support graph.
struct SupportGraph {
    vertices: Vec<Point>,
    /// (tail vertex, head vertex) per edge, following atom orientation.
    edges: Vec<(usize, usize)>,
    lengths: Vec<f64>,
    atoms: Vec<Segment>,
}

fn build_graph(support: &[Segment]) -> Result<SupportGraph, SolveError> {
    if let Some(first) = support.first() {
        if let Some(bad) = support.iter().find(|s| s.dim() != first.dim()) {
            return Err(SolveError::BadInstance(format!(
                "support mixes ambient dimensions {} and {}",
                first.dim(),
                bad.dim()
            )));
        }
    }
    let dec = overlay(support);
    let mut ids: BTreeMap<Point, usize> = BTreeMap::new();
    let mut vertices = Vec::new();
    let intern = |p: &Point, vertices: &mut Vec<Point>, ids: &mut BTreeMap<Point, usize>| {
        *ids.entry(p.clone()).or_insert_with(|| {
            vertices.push(p.clone());
            vertices.len() - 1
        })
    };
    let mut edges = Vec::with_capacity(dec.atoms.len());
    let mut lengths = Vec::with_capacity(dec.atoms.len());
    let mut atoms = Vec::with_capacity(dec.atoms.len());
    for oa in dec.atoms {
        let a = intern(oa.segment.a(), &mut vertices, &mut ids);
        let b = intern(oa.segment.b(), &mut vertices, &mut ids);
        edges.push((a, b));
        lengths.push(oa.segment.length());
        atoms.push(oa.segment);
    }
    Ok(SupportGraph { vertices, edges, lengths, atoms })
}

/// Row-reduced system for A z = b with A the vertex–edge incidence matrix
/// (+1 at the head, −1 at the tail) shared by every coefficient channel.
struct ReducedSystem {
    /// RREF of [A | B], rows × (edges + channels).
    rows: Vec<Vec<f64>>,
    /// Pivot column (an edge index) of each leading row.
    pivots: Vec<usize>,
    n_edges: usize,
}

fn reduce(graph: &SupportGraph, rhs: &[Vec<f64>]) -> ReducedSystem {
    let ne = graph.edges.len();
    let m = rhs.first().map_or(0, Vec::len);
    let mut rows: Vec<Vec<f64>> = graph
        .vertices
        .iter()
        .enumerate()
        .map(|(v, _)| {
            let mut row = vec![0.0; ne + m];
            for (e, &(a, b)) in graph.edges.iter().enumerate() {
                if b == v {
                    row[e] += 1.0;
                }
                if a == v {
                    row[e] -= 1.0;
                }
            }
            row[ne..].copy_from_slice(&rhs[v]);
            row
        })
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..ne {
        let Some(best) = (r..rows.len())
            .max_by(|&i, &j| rows[i][col].abs().total_cmp(&rows[j][col].abs()))
        else {
            break;
        };
        if rows[best][col].abs() < 1e-9 {
            continue;
        }
        rows.swap(r, best);
        let inv = 1.0 / rows[r][col];
        for x in rows[r].iter_mut() {
            *x *= inv;
        }
        for i in 0..rows.len() {
            if i != r && rows[i][col] != 0.0 {
                let f = rows[i][col];
                let (head, tail) = rows.split_at_mut(r.max(i));
                let (pivot_row, target) = if i > r {
                    (&head[r], &mut tail[0])
                } else {
                    (&tail[0], &mut head[i])
                };
                for (t, p) in target.iter_mut().zip(pivot_row) {
                    *t -= f * p;
                }
            }
        }
        pivots.push(col);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    ReducedSystem { rows, pivots, n_edges: ne }
}

impl ReducedSystem {
    /// Particular solution per channel, free variables set to zero.
    /// Errors if any eliminated row leaves a nonzero right-hand side.
    fn particular(&self, m: usize, scale: f64) -> Result<Vec<f64>, SolveError> {
        let rank = self.pivots.len();
        for (i, row) in self.rows.iter().enumerate().skip(rank) {
            for (j, &v) in row[self.n_edges..].iter().enumerate() {
                if v.abs() > 1e-9 * scale.max(1.0) {
                    return Err(SolveError::Infeasible(format!(
                        "boundary channel {j} is not balanced on the support \
                         (row {i} leaves {v:.3e})"
                    )));
                }
            }
        }
        let mut z = vec![0.0; self.n_edges * m];
        for (r, &col) in self.pivots.iter().enumerate() {
            for j in 0..m {
                z[col * m + j] = self.rows[r][self.n_edges + j];
            }
        }
        Ok(z)
    }

    /// Orthonormal basis of the null space of A.
    fn null_basis(&self) -> Vec<Vec<f64>> {
        let ne = self.n_edges;
        let is_pivot = {
            let mut v = vec![false; ne];
            for &c in &self.pivots {
                v[c] = true;
            }
            v
        };
        let mut basis = Vec::new();
        for f in (0..ne).filter(|&c| !is_pivot[c]) {
            let mut u = vec![0.0; ne];
            u[f] = 1.0;
            for (r, &col) in self.pivots.iter().enumerate() {
                u[col] = -self.rows[r][f];
            }
            // modified Gram–Schmidt against the accepted vectors
            for prev in &basis {
                let d: f64 = u.iter().zip(prev).map(|(x, y): (&f64, &f64)| x * y).sum();
                for (x, y) in u.iter_mut().zip(prev) {
                    *x -= d * y;
                }
            }
            let n: f64 = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 1e-12 {
                for x in &mut u {
                    *x /= n;
                }
                basis.push(u);
            }
        }
        basis
    }
}

/// One subgradient of the coefficient norm at `v`, written into `out`.
fn norm_subgrad(v: &[f64], spec: &NormSpec, out: &mut [f64]) {
    out.fill(0.0);
    match &spec.kind {
        NormKind::Linf => {
            let mut arg = 0;
            for (i, x) in v.iter().enumerate() {
                if x.abs() > v[arg].abs() {
                    arg = i;
                }
            }
            if v[arg] != 0.0 {
                out[arg] = v[arg].signum();
            }
        }
        NormKind::L1 => {
            for (g, x) in out.iter_mut().zip(v) {
                if *x != 0.0 {
                    *g = x.signum();
                }
            }
        }
        NormKind::PhiAlpha { phi, alpha } => phi_alpha_subgrad(v, phi, *alpha, out),
    }
}

fn phi_alpha_subgrad(v: &[f64], phi: &PhiNorm, alpha: Alpha, out: &mut [f64]) {
    let a = alpha.value();
    let lp = |parts: &mut dyn Iterator<Item = f64>| -> f64 {
        if a == 0.0 {
            parts.fold(0.0, f64::max)
        } else if a == 1.0 {
            parts.sum()
        } else {
            let p = 1.0 / a;
            parts.map(|x| if x == 0.0 { 0.0 } else { x.powf(p) }).sum::<f64>().powf(a)
        }
    };
    let pos = lp(&mut v.iter().map(|&x| x.max(0.0)));
    let neg = lp(&mut v.iter().map(|&x| (-x).max(0.0)));
    let (dpos, dneg) = match phi {
        PhiNorm::L1 => (1.0, 1.0),
        PhiNorm::Linf => {
            if pos >= neg {
                (1.0, 0.0)
            } else {
                (0.0, 1.0)
            }
        }
        PhiNorm::Lr(r) => {
            let val = (pos.powf(*r) + neg.powf(*r)).powf(1.0 / r);
            if val == 0.0 {
                (0.0, 0.0)
            } else {
                ((pos / val).powf(r - 1.0), (neg / val).powf(r - 1.0))
            }
        }
    };
    // d‖part‖_p/dv_i, chained through the positive and negative parts
    if a == 0.0 {
        // sup norm: only an attaining entry moves the value
        if dpos > 0.0 && pos > 0.0 {
            if let Some(i) = v.iter().position(|&x| x == pos) {
                out[i] += dpos;
            }
        }
        if dneg > 0.0 && neg > 0.0 {
            if let Some(i) = v.iter().position(|&x| -x == neg) {
                out[i] -= dneg;
            }
        }
    } else if a == 1.0 {
        for (g, &x) in out.iter_mut().zip(v) {
            if x > 0.0 {
                *g += dpos;
            } else if x < 0.0 {
                *g -= dneg;
            }
        }
    } else {
        let p = 1.0 / a;
        for (g, &x) in out.iter_mut().zip(v) {
            if x > 0.0 && pos > 0.0 {
                *g += dpos * (x / pos).powf(p - 1.0);
            } else if x < 0.0 && neg > 0.0 {
                *g -= dneg * (-x / neg).powf(p - 1.0);
            }
        }
    }
}

/// Minimizes Σ_e ‖θ_e‖·length(e) over real coefficients on the support
/// whose current has boundary `b`. The candidate set is parametrized as
/// particular-solution-plus-null-space, so every iterate is feasible; the
/// returned report carries the conservation residual actually achieved.
pub fn solve_real_relaxation(
    support: &[Segment],
    b: &AtomicMeasure0,
    spec: &NormSpec,
    tol: f64,
    config: &SolverConfig,
) -> Result<SolveReport<PolyCurrent1>, SolveError> {
    if !(tol > 0.0) {
        return Err(SolveError::BadInstance(format!("tolerance {tol} must be positive")));
    }
    let m = spec.m;
    if b.m() != m {
        return Err(SolveError::BadInstance(format!(
            "boundary has {} channels but the norm expects {}",
            b.m(),
            m
        )));
    }
    let graph = build_graph(support)?;
    if graph.edges.is_empty() {
        return if b.is_empty() {
            Ok(SolveReport {
                best: PolyCurrent1::zero(m, Ring::Real),
                value: 0.0,
                enumerated: 0,
                best_rank: 0,
                residual: 0.0,
                config: config.clone(),
            })
        } else {
            Err(SolveError::Infeasible("nonzero boundary on an empty support".into()))
        };
    }

    // right-hand side indexed by vertex; boundary off the vertex set is infeasible
    let mut rhs = vec![vec![0.0; m]; graph.vertices.len()];
    let mut ids: BTreeMap<&Point, usize> = BTreeMap::new();
    for (i, p) in graph.vertices.iter().enumerate() {
        ids.insert(p, i);
    }
    let mut bscale = 1.0f64;
    for (p, coef) in b.atoms() {
        let Some(&v) = ids.get(p) else {
            return Err(SolveError::Infeasible(format!(
                "boundary point {p:?} is not a vertex of the support"
            )));
        };
        rhs[v].copy_from_slice(coef);
        for &c in coef {
            bscale = bscale.max(c.abs());
        }
    }

    let sys = reduce(&graph, &rhs);
    let z0 = sys.particular(m, bscale)?;
    let basis = sys.null_basis();
    let ne = graph.edges.len();
    let nv = basis.len();

    let objective = |z: &[f64]| -> f64 {
        let mut total = 0.0;
        for e in 0..ne {
            let norm = coeff_norm(&z[e * m..(e + 1) * m], spec)
                .expect("edge coefficients match the norm dimension");
            total += norm * graph.lengths[e];
        }
        total
    };

    let mut z = z0.clone();
    let mut best_z = z.clone();
    let mut best_val = objective(&z);
    let mut iterations = 0u64;
    if nv > 0 && m > 0 {
        let mut w = vec![0.0; nv * m];
        let mut best_w = w.clone();
        let assemble = |w: &[f64], z: &mut [f64]| {
            z.copy_from_slice(&z0);
            for (k, u) in basis.iter().enumerate() {
                for (e, &ue) in u.iter().enumerate() {
                    if ue != 0.0 {
                        for j in 0..m {
                            z[e * m + j] += ue * w[k * m + j];
                        }
                    }
                }
            }
        };
        let mut step = z0.iter().fold(1.0f64, |acc, x| acc.max(x.abs()));
        let mut grad_z = vec![0.0; ne * m];
        let mut grad_w = vec![0.0; nv * m];
        let mut edge_grad = vec![0.0; m];
        for _round in 0..config.relax_rounds {
            for _ in 0..config.relax_inner {
                iterations += 1;
                for e in 0..ne {
                    norm_subgrad(&z[e * m..(e + 1) * m], spec, &mut edge_grad);
                    for j in 0..m {
                        grad_z[e * m + j] = edge_grad[j] * graph.lengths[e];
                    }
                }
                for (k, u) in basis.iter().enumerate() {
                    for j in 0..m {
                        grad_w[k * m + j] = (0..ne).map(|e| grad_z[e * m + j] * u[e]).sum();
                    }
                }
                let gn = grad_w.iter().map(|x| x * x).sum::<f64>().sqrt();
                if gn < 1e-15 {
                    break;
                }
                for (wi, gi) in w.iter_mut().zip(&grad_w) {
                    *wi -= step / gn * gi;
                }
                assemble(&w, &mut z);
                let val = objective(&z);
                if val < best_val {
                    best_val = val;
                    best_w.copy_from_slice(&w);
                }
            }
            w.copy_from_slice(&best_w);
            assemble(&w, &mut z);
            step *= 0.5;
            if step < 1e-3 * tol * (1.0 + best_val.abs()) {
                break;
            }
        }
        assemble(&best_w, &mut best_z);
    }

    // snap solver noise to zero so sparse optima come out sparse
    let snap = 1e-9 * bscale.max(1.0);
    for x in &mut best_z {
        if x.abs() < snap {
            *x = 0.0;
        }
    }
    let value = objective(&best_z);
    let mut residual = 0.0f64;
    for (v, want) in rhs.iter().enumerate() {
        for j in 0..m {
            let mut got = 0.0;
            for (e, &(ta, he)) in graph.edges.iter().enumerate() {
                if he == v {
                    got += best_z[e * m + j];
                }
                if ta == v {
                    got -= best_z[e * m + j];
                }
            }
            residual = residual.max((got - want[j]).abs());
        }
    }
    if residual > tol {
        return Err(SolveError::NoConvergence);
    }

    let raw: Vec<(Segment, Vec<f64>)> = graph
        .atoms
        .iter()
        .enumerate()
        .map(|(e, seg)| (seg.clone(), best_z[e * m..(e + 1) * m].to_vec()))
        .collect();
    let best = PolyCurrent1::new(m, Ring::Real, raw)?;
    Ok(SolveReport {
        best,
        value,
        enumerated: iterations,
        best_rank: 0,
        residual,
        config: config.clone(),
    })
}
