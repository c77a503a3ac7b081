//! Exhaustive routing oracles on a small integer grid.
//!
//! Both oracles enumerate, per commodity, every assignment of its units to
//! simple rook-step lattice paths, and differ only in how a candidate is
//! priced: the family oracle charges φ((θ⁻)^α, (θ⁺)^α) per unit edge with no
//! cancellation, the current oracle first cancels opposite traversals within
//! each commodity. Cycle-carrying currents are deliberately excluded from
//! the search space: removing cycles never increases the energy (a tested
//! property of the decomposition), so the path-decomposable candidates
//! always contain an optimum.
//!
//! Candidate prices are summed in edge-id order, so two candidates inducing
//! the same per-edge counts price bitwise identically; this is what makes
//! the two oracles' optima comparable with `==` rather than a tolerance.

use super::{better, with_thread_pool, SolveError, SolveReport, SolverConfig};
use crate::coefficients::{pow_alpha, Alpha, PhiNorm};
use crate::currents::{MailingInstance, PolyCurrent1};
use crate::geometry::Point;
use crate::mailing::{family_to_current, LabeledPath, PathFamily};
use rayon::prelude::*;

/// Grid of lattice points (x, y) with 0 ≤ x < width and 0 ≤ y < height.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LatticeGrid {
    pub width: i64,
    pub height: i64,
}

impl LatticeGrid {
    pub fn new(width: i64, height: i64) -> Self {
        LatticeGrid { width, height }
    }

    fn contains(&self, x: i64, y: i64) -> bool {
        (0..self.width).contains(&x) && (0..self.height).contains(&y)
    }

    fn vertex_count(&self) -> usize {
        (self.width * self.height) as usize
    }

    fn edge_count(&self) -> usize {
        ((self.width - 1) * self.height + self.width * (self.height - 1)) as usize
    }

    /// Canonical id and sign of the unit step from (x, y) by (dx, dy).
    fn step_edge(&self, x: i64, y: i64, dx: i64, dy: i64) -> (u32, i8) {
        let horizontals = (self.width - 1) * self.height;
        match (dx, dy) {
            (1, 0) => ((y * (self.width - 1) + x) as u32, 1),
            (-1, 0) => ((y * (self.width - 1) + x - 1) as u32, -1),
            (0, 1) => ((horizontals + x * (self.height - 1) + y) as u32, 1),
            (0, -1) => ((horizontals + x * (self.height - 1) + y - 1) as u32, -1),
            _ => unreachable!("unit steps only"),
        }
    }
}

/// One simple lattice path: the directed unit edges it traverses plus its
/// vertex walk for later materialization.
#[derive(Clone, Debug)]
struct LatticePath {
    edges: Vec<(u32, i8)>,
    vertices: Vec<(i64, i64)>,
}

fn enumerate_simple_paths(
    grid: &LatticeGrid,
    from: (i64, i64),
    to: (i64, i64),
    cap: u64,
) -> Result<Vec<LatticePath>, SolveError> {
    let mut out = Vec::new();
    let mut walk = vec![from];
    let mut visited = vec![false; grid.vertex_count()];
    let vid = |x: i64, y: i64| (y * grid.width + x) as usize;
    visited[vid(from.0, from.1)] = true;
    // explicit stack of per-depth next-direction indices
    const DIRS: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
    let mut next_dir = vec![0usize];
    while let Some(dir_idx) = next_dir.last_mut() {
        let (x, y) = *walk.last().expect("walk is never empty");
        if (x, y) == to && walk.len() > 1 {
            if out.len() as u64 >= cap {
                return Err(SolveError::BudgetExceeded(format!(
                    "more than {cap} simple lattice paths between {from:?} and {to:?}"
                )));
            }
            let edges = walk
                .windows(2)
                .map(|w| grid.step_edge(w[0].0, w[0].1, w[1].0 - w[0].0, w[1].1 - w[0].1))
                .collect();
            out.push(LatticePath { edges, vertices: walk.clone() });
            // a simple path may not continue through its endpoint and return
            next_dir.pop();
            let (px, py) = walk.pop().expect("non-empty");
            visited[vid(px, py)] = false;
            continue;
        }
        if *dir_idx >= DIRS.len() {
            next_dir.pop();
            let (px, py) = walk.pop().expect("non-empty");
            visited[vid(px, py)] = false;
            continue;
        }
        let (dx, dy) = DIRS[*dir_idx];
        *dir_idx += 1;
        let (nx, ny) = (x + dx, y + dy);
        if grid.contains(nx, ny) && !visited[vid(nx, ny)] {
            visited[vid(nx, ny)] = true;
            walk.push((nx, ny));
            next_dir.push(0);
        }
    }
    Ok(out)
}

/// The enumeration skeleton shared by both oracles.
struct LatticeProblem {
    /// (i, j, units) per commodity with positive demand, row-major order.
    channels: Vec<(usize, usize, i64)>,
    paths: Vec<Vec<LatticePath>>,
    edge_count: usize,
    /// candidate count = Π paths^units, including non-canonical duplicates
    total: u64,
}

impl LatticeProblem {
    fn build(
        inst: &MailingInstance,
        grid: &LatticeGrid,
        config: &SolverConfig,
    ) -> Result<Self, SolveError> {
        if grid.width < 1 || grid.height < 1 {
            return Err(SolveError::BadInstance("empty grid".into()));
        }
        if grid.width > config.max_grid || grid.height > config.max_grid {
            return Err(SolveError::BudgetExceeded(format!(
                "grid {}x{} exceeds {}x{}",
                grid.width, grid.height, config.max_grid, config.max_grid
            )));
        }
        let total_units: i64 = inst.channels().map(|(_, _, g)| g).sum();
        if total_units > config.max_total_units {
            return Err(SolveError::BudgetExceeded(format!(
                "{} routed units exceed the limit of {}",
                total_units, config.max_total_units
            )));
        }
        let coords: Vec<(i64, i64)> = inst
            .points()
            .iter()
            .map(|p| lattice_coords(p, grid))
            .collect::<Result<_, _>>()?;
        let mut channels = Vec::new();
        let mut paths = Vec::new();
        let mut total: u64 = 1;
        for (i, j, g) in inst.channels() {
            let list =
                enumerate_simple_paths(grid, coords[i], coords[j], config.max_enumeration)?;
            for _ in 0..g {
                total = total
                    .checked_mul(list.len() as u64)
                    .filter(|&t| t <= config.max_enumeration)
                    .ok_or_else(|| {
                        SolveError::BudgetExceeded(format!(
                            "more than {} candidate routings",
                            config.max_enumeration
                        ))
                    })?;
            }
            channels.push((i, j, g));
            paths.push(list);
        }
        Ok(LatticeProblem { channels, paths, edge_count: grid.edge_count(), total })
    }

    /// Mixed-radix decode of a candidate rank into per-unit path indices,
    /// contiguous per channel. Returns None for non-canonical candidates
    /// (unit indices within a channel must be non-decreasing).
    fn decode(&self, rank: u64, out: &mut Vec<u32>) -> bool {
        out.clear();
        let mut r = rank;
        for (ch, &(_, _, g)) in self.channels.iter().enumerate() {
            let base = self.paths[ch].len() as u64;
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
}

fn lattice_coords(p: &Point, grid: &LatticeGrid) -> Result<(i64, i64), SolveError> {
    let err = || SolveError::BadInstance(format!("point {p:?} is not a grid point"));
    let get = |k: usize| -> Result<i64, SolveError> {
        let c = &p.coords()[k];
        if !c.is_integer() {
            return Err(err());
        }
        i64::try_from(c.to_integer()).map_err(|_| err())
    };
    if p.dim() != 2 {
        return Err(err());
    }
    let (x, y) = (get(0)?, get(1)?);
    if !grid.contains(x, y) {
        return Err(err());
    }
    Ok((x, y))
}

/// Scratch buffers reused across candidates by one worker.
struct Scratch {
    /// per edge: (anti-aligned, aligned) traversal counts
    family: Vec<(u16, u16)>,
    /// per edge × channel: net signed multiplicity
    nets: Vec<i32>,
    touched: Vec<u32>,
}

impl Scratch {
    fn new(edge_count: usize, channels: usize) -> Self {
        Scratch {
            family: vec![(0, 0); edge_count],
            nets: vec![0; edge_count * channels],
            touched: Vec::with_capacity(64),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Pricing {
    /// no cancellation: φ((θ⁻)^α, (θ⁺)^α) per edge
    Family,
    /// per-commodity nets first, then φ(pos^α, neg^α) per edge
    Current,
}

/// Prices one candidate; edge contributions are summed in edge-id order so
/// equal per-edge counts give bitwise-equal prices.
fn price(
    prob: &LatticeProblem,
    digits: &[u32],
    pricing: Pricing,
    phi: &PhiNorm,
    alpha: Alpha,
    scratch: &mut Scratch,
) -> f64 {
    let nch = prob.channels.len();
    let mut d = 0;
    for (ch, &(_, _, g)) in prob.channels.iter().enumerate() {
        for _ in 0..g {
            let path = &prob.paths[ch][digits[d] as usize];
            d += 1;
            for &(e, s) in &path.edges {
                let e = e as usize;
                // traversal counts only grow, so (0, 0) means first touch
                if scratch.family[e] == (0, 0) {
                    scratch.touched.push(e as u32);
                }
                if s > 0 {
                    scratch.family[e].1 += 1;
                } else {
                    scratch.family[e].0 += 1;
                }
                scratch.nets[e * nch + ch] += i32::from(s);
            }
        }
    }
    scratch.touched.sort_unstable();
    let a = alpha.value();
    let mut value = 0.0;
    for &e in &scratch.touched {
        let e = e as usize;
        let term = match pricing {
            Pricing::Family => {
                let (minus, plus) = scratch.family[e];
                crate::coefficients::phi_eval(phi, pow_alpha(f64::from(minus), a), pow_alpha(f64::from(plus), a))
                    .expect("α-powers of counts are nonnegative")
            }
            Pricing::Current => {
                let (mut pos, mut neg) = (0i64, 0i64);
                for c in 0..nch {
                    let net = i64::from(scratch.nets[e * nch + c]);
                    if net > 0 {
                        pos += net;
                    } else {
                        neg -= net;
                    }
                }
                crate::coefficients::phi_eval(phi, pow_alpha(pos as f64, a), pow_alpha(neg as f64, a))
                    .expect("α-powers of counts are nonnegative")
            }
        };
        value += term;
        scratch.family[e] = (0, 0);
        scratch.nets[e * nch..(e + 1) * nch].fill(0);
    }
    scratch.touched.clear();
    value
}

fn search(
    prob: &LatticeProblem,
    pricing: Pricing,
    phi: &PhiNorm,
    alpha: Alpha,
) -> (f64, u64) {
    let nch = prob.channels.len();
    let total = prob.total;
    let chunk = (total / 64).max(4096);
    let starts: Vec<u64> = (0..total).step_by(chunk as usize).collect();
    with_thread_pool(|| {
        starts
            .par_iter()
            .map(|&start| {
                let mut scratch = Scratch::new(prob.edge_count, nch);
                let mut digits = Vec::new();
                let mut best = (f64::INFINITY, u64::MAX);
                for rank in start..(start + chunk).min(total) {
                    if !prob.decode(rank, &mut digits) {
                        continue;
                    }
                    let v = price(prob, &digits, pricing, phi, alpha, &mut scratch);
                    best = better(best, (v, rank));
                }
                best
            })
            .reduce(|| (f64::INFINITY, u64::MAX), better)
    })
}

fn materialize_family(
    prob: &LatticeProblem,
    inst: &MailingInstance,
    rank: u64,
) -> PathFamily {
    let mut digits = Vec::new();
    assert!(prob.decode(rank, &mut digits), "winning rank is canonical");
    let mut labeled = Vec::new();
    let mut d = 0;
    for (ch, &(i, j, g)) in prob.channels.iter().enumerate() {
        for _ in 0..g {
            let path = &prob.paths[ch][digits[d] as usize];
            d += 1;
            let mut vertices: Vec<Point> = Vec::new();
            for &(x, y) in &path.vertices {
                let p = Point::xy(x, y);
                // merge straight runs into single segments
                if vertices.len() >= 2 {
                    let k = vertices.len();
                    let a = &vertices[k - 2];
                    let b = &vertices[k - 1];
                    let col = {
                        let ux = b.coords()[0].clone() - a.coords()[0].clone();
                        let uy = b.coords()[1].clone() - a.coords()[1].clone();
                        let vx = p.coords()[0].clone() - b.coords()[0].clone();
                        let vy = p.coords()[1].clone() - b.coords()[1].clone();
                        ux * vy == uy * vx
                    };
                    if col {
                        vertices.pop();
                    }
                }
                vertices.push(p);
            }
            labeled.push(LabeledPath {
                commodity: (i, j),
                path: crate::geometry::Polyline::new(vertices)
                    .expect("lattice walks have ≥ 2 distinct vertices"),
            });
        }
    }
    PathFamily::new(labeled, inst.clone()).expect("commodities are valid")
}

/// Global optimum of the family energy over simple-lattice-path routings.
pub fn brute_force_lattice_mailing(
    inst: &MailingInstance,
    grid: &LatticeGrid,
    phi: &PhiNorm,
    alpha: Alpha,
    config: &SolverConfig,
) -> Result<SolveReport<PathFamily>, SolveError> {
    let prob = LatticeProblem::build(inst, grid, config)?;
    let (value, rank) = search(&prob, Pricing::Family, phi, alpha);
    let best = materialize_family(&prob, inst, rank);
    Ok(SolveReport {
        best,
        value,
        enumerated: prob.total,
        best_rank: rank,
        residual: 0.0,
        config: config.clone(),
    })
}

/// Global optimum of the current energy over the cycle-free integer lattice
/// currents (per-commodity path decomposable; see the module docs for why
/// this loses no optima).
pub fn brute_force_lattice_current(
    inst: &MailingInstance,
    grid: &LatticeGrid,
    phi: &PhiNorm,
    alpha: Alpha,
    config: &SolverConfig,
) -> Result<SolveReport<PolyCurrent1>, SolveError> {
    let prob = LatticeProblem::build(inst, grid, config)?;
    let (value, rank) = search(&prob, Pricing::Current, phi, alpha);
    let family = materialize_family(&prob, inst, rank);
    let best = family_to_current(&family)?;
    Ok(SolveReport {
        best,
        value,
        enumerated: prob.total,
        best_rank: rank,
        residual: 0.0,
        config: config.clone(),
    })
}
