//! Polyhedral 1-currents with coefficients in ℤ^m or ℝ^m.
//!
//! A current is a finite list of oriented segments ("atoms") carrying
//! coefficient vectors. Construction normalizes through the exact overlay:
//! collinear overlaps are cut at all endpoints and coefficients are summed
//! with orientation signs, so atoms of a stored current pairwise share at
//! most finitely many points and mass/energy integrals are plain sums.
//!
//! On top of the algebra this module provides the two boundary data of a
//! routing instance (the matrix-valued one and its relaxed lift with one
//! coordinate per routed unit), the per-channel decomposition of an integer
//! current into simple paths plus cycles, cycle removal, and the canonical
//! lift of a cycle-free current into the relaxed coefficient ring.

use crate::coefficients::{coeff_norm, cost_c, Alpha, CoeffError, NormSpec, PhiNorm};
use crate::geometry::{
    overlay, segment_intersection, GeometryError, Point, Polyline, SegIntersection, Segment,
};
use std::collections::BTreeMap;
use std::ops::Range;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CurrentError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Coeff(#[from] CoeffError),
    #[error("coefficient vector has length {got}, expected {expected}")]
    CoefLength { expected: usize, got: usize },
    #[error("integer-ring current has non-integer entry {0}")]
    NonIntegerEntry(f64),
    #[error("non-finite coefficient entry")]
    NonFinite,
    #[error("coefficient dimension {m} is not n² for any n")]
    NotSquare { m: usize },
    #[error("ring mismatch between currents")]
    RingMismatch,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("instance error: {0}")]
    BadInstance(String),
    #[error("pair ordering is inconsistent with the instance")]
    OrderingMismatch,
    #[error("current boundary does not match the instance boundary")]
    BoundaryMismatch,
    #[error("channel ({i},{j}) carries residual cycles; remove cycles first")]
    ResidualCycles { i: usize, j: usize },
    #[error("flow decomposition failed: {0}")]
    Decompose(String),
}

/// Coefficient ring of a current.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ring {
    Integer,
    Real,
}

/// One normalized atom: an oriented segment with its coefficient vector.
#[derive(Clone, Debug, PartialEq)]
pub struct CurrentAtom {
    pub segment: Segment,
    pub coef: Vec<f64>,
}

/// A polyhedral 1-current, stored normalized (pairwise zero-length atom
/// intersections, no zero coefficient vectors).
#[derive(Clone, Debug, PartialEq)]
pub struct PolyCurrent1 {
    m: usize,
    ring: Ring,
    atoms: Vec<CurrentAtom>,
}

fn validate_coef(m: usize, ring: Ring, coef: &[f64]) -> Result<(), CurrentError> {
    if coef.len() != m {
        return Err(CurrentError::CoefLength { expected: m, got: coef.len() });
    }
    for &x in coef {
        if !x.is_finite() {
            return Err(CurrentError::NonFinite);
        }
        if ring == Ring::Integer && (x.fract() != 0.0 || x.abs() > 2f64.powi(53)) {
            return Err(CurrentError::NonIntegerEntry(x));
        }
    }
    Ok(())
}

impl PolyCurrent1 {
    /// Builds and normalizes a current from raw (segment, coefficient) pairs.
    pub fn new(
        m: usize,
        ring: Ring,
        raw: Vec<(Segment, Vec<f64>)>,
    ) -> Result<Self, CurrentError> {
        let mut dim: Option<usize> = None;
        for (seg, coef) in &raw {
            validate_coef(m, ring, coef)?;
            match dim {
                None => dim = Some(seg.dim()),
                Some(d) if d != seg.dim() => {
                    return Err(CurrentError::DimensionMismatch(d, seg.dim()))
                }
                _ => {}
            }
        }
        let segs: Vec<Segment> = raw.iter().map(|(s, _)| s.clone()).collect();
        let dec = overlay(&segs);
        let mut atoms = Vec::new();
        for oa in dec.atoms {
            let mut coef = vec![0.0; m];
            for (i, sign) in &oa.coverage {
                for (dst, src) in coef.iter_mut().zip(&raw[*i].1) {
                    *dst += f64::from(*sign) * src;
                }
            }
            if coef.iter().any(|&x| x != 0.0) {
                atoms.push(CurrentAtom { segment: oa.segment, coef });
            }
        }
        Ok(PolyCurrent1 { m, ring, atoms })
    }

    pub fn zero(m: usize, ring: Ring) -> Self {
        PolyCurrent1 { m, ring, atoms: Vec::new() }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn ring(&self) -> Ring {
        self.ring
    }

    pub fn atoms(&self) -> &[CurrentAtom] {
        &self.atoms
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    fn raw_atoms(&self) -> Vec<(Segment, Vec<f64>)> {
        self.atoms.iter().map(|a| (a.segment.clone(), a.coef.clone())).collect()
    }

    pub fn negated(&self) -> Self {
        let atoms = self
            .atoms
            .iter()
            .map(|a| CurrentAtom {
                segment: a.segment.clone(),
                coef: a.coef.iter().map(|x| -x).collect(),
            })
            .collect();
        PolyCurrent1 { m: self.m, ring: self.ring, atoms }
    }

    pub fn add(&self, other: &PolyCurrent1) -> Result<PolyCurrent1, CurrentError> {
        if self.m != other.m {
            return Err(CurrentError::DimensionMismatch(self.m, other.m));
        }
        if self.ring != other.ring {
            return Err(CurrentError::RingMismatch);
        }
        let mut raw = self.raw_atoms();
        raw.extend(other.raw_atoms());
        PolyCurrent1::new(self.m, self.ring, raw)
    }

    /// Semantic equality: the difference normalizes to the zero current.
    /// (Structural equality can differ across subdivisions of the same mass.)
    pub fn equivalent(&self, other: &PolyCurrent1) -> Result<bool, CurrentError> {
        Ok(self.add(&other.negated())?.is_empty())
    }

    /// The single-channel current carrying coefficient coordinate `k`.
    pub fn channel(&self, k: usize) -> PolyCurrent1 {
        assert!(k < self.m);
        let atoms = self
            .atoms
            .iter()
            .filter(|a| a.coef[k] != 0.0)
            .map(|a| CurrentAtom { segment: a.segment.clone(), coef: vec![a.coef[k]] })
            .collect();
        // channel extraction of a normalized current stays normalized
        PolyCurrent1 { m: 1, ring: self.ring, atoms }
    }

    pub fn boundary(&self) -> AtomicMeasure0 {
        boundary(self)
    }
}

/// An atomic 0-dimensional measure with ℝ^m coefficients, merged by point.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicMeasure0 {
    m: usize,
    atoms: Vec<(Point, Vec<f64>)>,
}

impl AtomicMeasure0 {
    pub fn new(m: usize, raw: Vec<(Point, Vec<f64>)>) -> Result<Self, CurrentError> {
        let mut merged: BTreeMap<Point, Vec<f64>> = BTreeMap::new();
        for (p, coef) in raw {
            if coef.len() != m {
                return Err(CurrentError::CoefLength { expected: m, got: coef.len() });
            }
            let slot = merged.entry(p).or_insert_with(|| vec![0.0; m]);
            for (dst, src) in slot.iter_mut().zip(&coef) {
                *dst += src;
            }
        }
        let atoms = merged
            .into_iter()
            .filter(|(_, c)| c.iter().any(|&x| x != 0.0))
            .collect();
        Ok(AtomicMeasure0 { m, atoms })
    }

    pub fn zero(m: usize) -> Self {
        AtomicMeasure0 { m, atoms: Vec::new() }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn atoms(&self) -> &[(Point, Vec<f64>)] {
        &self.atoms
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn coef_at(&self, p: &Point) -> Option<&[f64]> {
        self.atoms
            .iter()
            .find(|(q, _)| q == p)
            .map(|(_, c)| c.as_slice())
    }

    pub fn add(&self, other: &AtomicMeasure0) -> Result<AtomicMeasure0, CurrentError> {
        if self.m != other.m {
            return Err(CurrentError::DimensionMismatch(self.m, other.m));
        }
        let mut raw = self.atoms.clone();
        raw.extend(other.atoms.clone());
        AtomicMeasure0::new(self.m, raw)
    }

    pub fn negated(&self) -> AtomicMeasure0 {
        AtomicMeasure0 {
            m: self.m,
            atoms: self
                .atoms
                .iter()
                .map(|(p, c)| (p.clone(), c.iter().map(|x| -x).collect()))
                .collect(),
        }
    }
}

/// ∂T: coefficient at the head minus coefficient at the tail of every atom.
pub fn boundary(t: &PolyCurrent1) -> AtomicMeasure0 {
    let mut raw = Vec::with_capacity(2 * t.atoms.len());
    for atom in &t.atoms {
        raw.push((atom.segment.b().clone(), atom.coef.clone()));
        raw.push((atom.segment.a().clone(), atom.coef.iter().map(|x| -x).collect()));
    }
    AtomicMeasure0::new(t.m, raw).expect("boundary coefficients have the current's dimension")
}

/// M(T) = Σ atoms ‖θ‖·length under the given coefficient norm.
pub fn mass(t: &PolyCurrent1, spec: &NormSpec) -> Result<f64, CurrentError> {
    let mut total = 0.0;
    for atom in &t.atoms {
        total += coeff_norm(&atom.coef, spec)? * atom.segment.length();
    }
    Ok(total)
}

fn square_side(m: usize) -> Result<usize, CurrentError> {
    let n = (m as f64).sqrt().round() as usize;
    if n * n == m {
        Ok(n)
    } else {
        Err(CurrentError::NotSquare { m })
    }
}

fn coef_to_ints(coef: &[f64]) -> Result<Vec<i64>, CurrentError> {
    coef.iter()
        .map(|&x| {
            if x.fract() == 0.0 && x.abs() <= 2f64.powi(53) {
                Ok(x as i64)
            } else {
                Err(CurrentError::NonIntegerEntry(x))
            }
        })
        .collect()
}

/// The transport energy Σ atoms 𝒞(θ)·length for a current whose coefficients
/// are n×n multiplicity matrices (m = n², integer ring).
pub fn energy_alpha_phi(
    t: &PolyCurrent1,
    phi: &PhiNorm,
    alpha: Alpha,
) -> Result<f64, CurrentError> {
    square_side(t.m)?;
    let mut total = 0.0;
    for atom in &t.atoms {
        let ints = coef_to_ints(&atom.coef)?;
        total += cost_c(&ints, phi, alpha) * atom.segment.length();
    }
    Ok(total)
}

/// A routing instance: n distinct points and the nonnegative integer demand
/// matrix G with zero diagonal (g_ij units to route from p_i to p_j).
#[derive(Clone, Debug, PartialEq)]
pub struct MailingInstance {
    points: Vec<Point>,
    g: Vec<i64>,
}

impl MailingInstance {
    pub fn new(points: Vec<Point>, g: Vec<i64>) -> Result<Self, CurrentError> {
        let n = points.len();
        if n == 0 {
            return Err(CurrentError::BadInstance("instance needs at least one point".into()));
        }
        let d = points[0].dim();
        if points.iter().any(|p| p.dim() != d) {
            return Err(CurrentError::BadInstance("points of mixed dimension".into()));
        }
        if g.len() != n * n {
            return Err(CurrentError::BadInstance(format!(
                "demand matrix has {} entries, expected {}",
                g.len(),
                n * n
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let v = g[i * n + j];
                if v < 0 {
                    return Err(CurrentError::BadInstance("negative demand".into()));
                }
                if i == j && v != 0 {
                    return Err(CurrentError::BadInstance("nonzero diagonal demand".into()));
                }
            }
        }
        let mut sorted = points.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != n {
            return Err(CurrentError::BadInstance("points must be distinct".into()));
        }
        Ok(MailingInstance { points, g })
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &Point {
        &self.points[i]
    }

    pub fn g(&self, i: usize, j: usize) -> i64 {
        self.g[i * self.n() + j]
    }

    pub fn g_entries(&self) -> &[i64] {
        &self.g
    }

    /// Channels (i, j, g_ij) with positive demand, in row-major order.
    pub fn channels(&self) -> impl Iterator<Item = (usize, usize, i64)> + '_ {
        let n = self.n();
        (0..n).flat_map(move |i| {
            (0..n).filter_map(move |j| {
                let g = self.g(i, j);
                (g > 0).then_some((i, j, g))
            })
        })
    }

    /// Total routed units N = Σ g_ij.
    pub fn total_units(&self) -> i64 {
        self.g.iter().sum()
    }
}

/// Row-major ordering of the n² channel pairs, assigning each pair a
/// contiguous block of basis indices in {0,…,N−1} of size g_ij.
#[derive(Clone, Debug, PartialEq)]
pub struct PairOrdering {
    n: usize,
    pairs: Vec<(usize, usize)>,
    g: Vec<i64>,
    block_start: Vec<usize>,
    total: usize,
}

impl PairOrdering {
    pub fn row_major(inst: &MailingInstance) -> Self {
        let n = inst.n();
        let mut pairs = Vec::with_capacity(n * n);
        let mut g = Vec::with_capacity(n * n);
        let mut block_start = Vec::with_capacity(n * n);
        let mut acc = 0usize;
        for i in 0..n {
            for j in 0..n {
                pairs.push((i, j));
                g.push(inst.g(i, j));
                block_start.push(acc);
                acc += inst.g(i, j) as usize;
            }
        }
        PairOrdering { n, pairs, g, block_start, total: acc }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// N = Σ g_ij, the relaxed coefficient dimension.
    pub fn total(&self) -> usize {
        self.total
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn block(&self, pair_index: usize) -> Range<usize> {
        let start = self.block_start[pair_index];
        start..start + self.g[pair_index] as usize
    }

    pub fn block_of_channel(&self, i: usize, j: usize) -> Range<usize> {
        self.block(i * self.n + j)
    }

    pub fn matches(&self, inst: &MailingInstance) -> bool {
        self.n == inst.n()
            && self
                .pairs
                .iter()
                .zip(&self.g)
                .all(|(&(i, j), &g)| inst.g(i, j) == g)
    }
}

/// The matrix-valued boundary: per channel (i,j), g_ij·E_ij·(δ_{p_j} − δ_{p_i}).
pub fn build_boundary_mailing(inst: &MailingInstance) -> AtomicMeasure0 {
    let n = inst.n();
    let m = n * n;
    let mut raw = Vec::new();
    for (i, j, g) in inst.channels() {
        let mut plus = vec![0.0; m];
        plus[i * n + j] = g as f64;
        let minus: Vec<f64> = plus.iter().map(|x| -x).collect();
        raw.push((inst.point(j).clone(), plus));
        raw.push((inst.point(i).clone(), minus));
    }
    AtomicMeasure0::new(m, raw).expect("boundary construction is well-formed")
}

/// The relaxed boundary: every basis coordinate of a channel's block carries
/// one unit flow boundary δ_{p_j} − δ_{p_i}.
pub fn build_boundary_relaxed(
    inst: &MailingInstance,
    ord: &PairOrdering,
) -> Result<AtomicMeasure0, CurrentError> {
    if !ord.matches(inst) {
        return Err(CurrentError::OrderingMismatch);
    }
    let nn = ord.total();
    let mut raw = Vec::new();
    for (idx, &(i, j)) in ord.pairs().iter().enumerate() {
        for k in ord.block(idx) {
            let mut plus = vec![0.0; nn];
            plus[k] = 1.0;
            let minus: Vec<f64> = plus.iter().map(|x| -x).collect();
            raw.push((inst.point(j).clone(), plus));
            raw.push((inst.point(i).clone(), minus));
        }
    }
    AtomicMeasure0::new(nn, raw)
}

/// Result of decomposing a single-channel integer current: oriented simple
/// paths from sources to sinks plus closed edge lists carrying the leftover
/// circulation. Σ paths + Σ cycles reconstructs the current exactly.
#[derive(Clone, Debug)]
pub struct ComponentDecomposition {
    pub paths: Vec<Polyline>,
    pub cycles: Vec<Vec<Segment>>,
}

impl ComponentDecomposition {
    /// Total length carried by cycles (the mass a cycle removal would drop).
    pub fn cycle_length(&self) -> f64 {
        self.cycles
            .iter()
            .map(|c| c.iter().map(Segment::length).sum::<f64>())
            .sum()
    }
}

struct FlowGraph {
    points: Vec<Point>,
    edges: Vec<FlowEdge>,
    out_edges: Vec<Vec<usize>>,
    balance: Vec<i64>,
}

struct FlowEdge {
    tail: usize,
    head: usize,
    seg: Segment,
    cap: i64,
}

fn build_flow_graph(t: &PolyCurrent1) -> Result<FlowGraph, CurrentError> {
    let mut ids: BTreeMap<Point, usize> = BTreeMap::new();
    let mut points = Vec::new();
    let intern = |p: &Point, points: &mut Vec<Point>, ids: &mut BTreeMap<Point, usize>| {
        *ids.entry(p.clone()).or_insert_with(|| {
            points.push(p.clone());
            points.len() - 1
        })
    };
    let mut edges = Vec::new();
    for atom in t.atoms() {
        let c = coef_to_ints(&atom.coef)?[0];
        let (seg, cap) = if c > 0 {
            (atom.segment.clone(), c)
        } else {
            (atom.segment.reversed(), -c)
        };
        let tail = intern(seg.a(), &mut points, &mut ids);
        let head = intern(seg.b(), &mut points, &mut ids);
        edges.push(FlowEdge { tail, head, seg, cap });
    }
    let mut out_edges = vec![Vec::new(); points.len()];
    let mut balance = vec![0i64; points.len()];
    for (e, edge) in edges.iter().enumerate() {
        out_edges[edge.tail].push(e);
        balance[edge.head] += edge.cap;
        balance[edge.tail] -= edge.cap;
    }
    Ok(FlowGraph { points, edges, out_edges, balance })
}

/// Walks a trail from `start`, consuming capacity, until it reaches a node
/// with positive remaining demand. Conservation guarantees progress.
fn walk_to_sink(
    g: &FlowGraph,
    cap: &mut [i64],
    demand: &[i64],
    start: usize,
) -> Result<Vec<usize>, CurrentError> {
    let mut trail = Vec::new();
    let mut cur = start;
    loop {
        let next = g.out_edges[cur].iter().find(|&&e| cap[e] > 0);
        let Some(&e) = next else {
            return Err(CurrentError::Decompose(format!(
                "stuck at node {:?} with no residual outgoing capacity",
                g.points[cur]
            )));
        };
        cap[e] -= 1;
        trail.push(e);
        cur = g.edges[e].head;
        if demand[cur] > 0 {
            return Ok(trail);
        }
    }
}

/// Node-level loop erasure of a trail; erased loop edges get their capacity
/// back (they stay in the residual and are peeled later as cycles).
fn erase_node_loops(g: &FlowGraph, cap: &mut [i64], trail: Vec<usize>, start: usize) -> Vec<usize> {
    let mut nodes = vec![start];
    let mut kept: Vec<usize> = Vec::new();
    for e in trail {
        let h = g.edges[e].head;
        if let Some(pos) = nodes.iter().position(|&n| n == h) {
            // the loop consists of kept[pos..] plus the closing edge e itself
            cap[e] += 1;
            for &dropped in &kept[pos..] {
                cap[dropped] += 1;
            }
            kept.truncate(pos);
            nodes.truncate(pos + 1);
        } else {
            kept.push(e);
            nodes.push(h);
        }
    }
    kept
}

/// Splits `seg` at interior point `x`, returning the (possibly degenerate,
/// hence None) pieces before and after x.
fn split_at(seg: &Segment, x: &Point) -> (Option<Segment>, Option<Segment>) {
    let pre = (seg.a() != x).then(|| Segment::new(seg.a().clone(), x.clone()).unwrap());
    let post = (seg.b() != x).then(|| Segment::new(x.clone(), seg.b().clone()).unwrap());
    (pre, post)
}

/// Enforces geometric simplicity of a chain of oriented segments by cutting
/// out self-intersection loops (exact splits at rational crossing points).
/// Returns the simple chain and the extracted loops.
fn uncross_chain(
    mut segs: Vec<Segment>,
) -> Result<(Vec<Segment>, Vec<Vec<Segment>>), CurrentError> {
    let mut cycles = Vec::new();
    'scan: loop {
        for i in 0..segs.len() {
            for j in (i + 1)..segs.len() {
                let x = match segment_intersection(&segs[i], &segs[j]) {
                    SegIntersection::Empty => continue,
                    SegIntersection::Single(x) => {
                        if j == i + 1 && x == *segs[i].b() {
                            continue; // shared chain vertex
                        }
                        x
                    }
                    SegIntersection::Overlap(_) => {
                        return Err(CurrentError::Decompose(
                            "path traverses overlapping atoms".into(),
                        ));
                    }
                };
                let (i_pre, i_post) = split_at(&segs[i], &x);
                let (j_pre, j_post) = split_at(&segs[j], &x);
                let mut looped = Vec::new();
                looped.extend(i_post);
                looped.extend(segs[(i + 1)..j].iter().cloned());
                looped.extend(j_pre);
                if looped.is_empty() {
                    return Err(CurrentError::Decompose(
                        "degenerate self-intersection loop".into(),
                    ));
                }
                let mut next = Vec::new();
                next.extend(segs[..i].iter().cloned());
                next.extend(i_pre);
                next.extend(j_post);
                next.extend(segs[(j + 1)..].iter().cloned());
                cycles.push(looped);
                segs = next;
                continue 'scan;
            }
        }
        return Ok((segs, cycles));
    }
}

fn chain_to_polyline(segs: &[Segment]) -> Result<Polyline, CurrentError> {
    let mut vertices = vec![segs[0].a().clone()];
    for seg in segs {
        debug_assert_eq!(seg.a(), vertices.last().unwrap(), "chain must be contiguous");
        vertices.push(seg.b().clone());
    }
    Ok(Polyline::new(vertices)?)
}

/// Decomposes a closed trail of edges into simple cycles.
fn split_closed_trail(g: &FlowGraph, trail: &[usize], start: usize) -> Vec<Vec<Segment>> {
    let mut cycles = Vec::new();
    let mut nodes = vec![start];
    let mut pending: Vec<usize> = Vec::new();
    for &e in trail {
        pending.push(e);
        let h = g.edges[e].head;
        if let Some(pos) = nodes.iter().position(|&n| n == h) {
            let cyc: Vec<Segment> =
                pending.split_off(rewind_index(&pending, &nodes, pos)).iter().map(|&e| g.edges[e].seg.clone()).collect();
            cycles.push(cyc);
            nodes.truncate(pos + 1);
        } else {
            nodes.push(h);
        }
    }
    debug_assert!(pending.is_empty(), "closed trail must decompose fully");
    cycles
}

/// Number of pending edges to keep when the node stack rewinds to `pos`.
fn rewind_index(pending: &[usize], nodes: &[usize], pos: usize) -> usize {
    // pending holds one edge per node beyond the first `pos + 1`
    pending.len() - (nodes.len() - pos)
}

/// Decomposes a single-channel integer current into simple source→sink paths
/// (one per boundary unit, oriented with the flow) plus leftover cycles.
pub fn decompose_component(t: &PolyCurrent1) -> Result<ComponentDecomposition, CurrentError> {
    if t.m() != 1 {
        return Err(CurrentError::DimensionMismatch(t.m(), 1));
    }
    if t.ring() != Ring::Integer {
        return Err(CurrentError::RingMismatch);
    }
    let g = build_flow_graph(t)?;
    let mut cap: Vec<i64> = g.edges.iter().map(|e| e.cap).collect();
    let mut demand: Vec<i64> = g.balance.iter().map(|&b| b.max(0)).collect();
    let mut supply: Vec<i64> = g.balance.iter().map(|&b| (-b).max(0)).collect();

    let mut paths = Vec::new();
    let mut cycles = Vec::new();
    for s in 0..g.points.len() {
        while supply[s] > 0 {
            let trail = walk_to_sink(&g, &mut cap, &demand, s)?;
            let kept = erase_node_loops(&g, &mut cap, trail, s);
            let sink = g.edges[*kept.last().expect("path has at least one edge")].head;
            demand[sink] -= 1;
            supply[s] -= 1;
            let chain: Vec<Segment> = kept.iter().map(|&e| g.edges[e].seg.clone()).collect();
            let (chain, mut loops) = uncross_chain(chain)?;
            cycles.append(&mut loops);
            let poly = chain_to_polyline(&chain)?;
            debug_assert!(poly.is_simple());
            paths.push(poly);
        }
    }
    if demand.iter().any(|&d| d != 0) {
        return Err(CurrentError::Decompose("unmatched sink demand".into()));
    }

    // peel the remaining circulation into closed trails, then simple cycles
    for v in 0..g.points.len() {
        while g.out_edges[v].iter().any(|&e| cap[e] > 0) {
            let mut trail = Vec::new();
            let mut cur = v;
            loop {
                let Some(&e) = g.out_edges[cur].iter().find(|&&e| cap[e] > 0) else {
                    break;
                };
                cap[e] -= 1;
                trail.push(e);
                cur = g.edges[e].head;
            }
            if cur != v {
                return Err(CurrentError::Decompose("residual trail is not closed".into()));
            }
            cycles.extend(split_closed_trail(&g, &trail, v));
        }
    }
    Ok(ComponentDecomposition { paths, cycles })
}

fn unit_coef(m: usize, k: usize, value: f64) -> Vec<f64> {
    let mut v = vec![0.0; m];
    v[k] = value;
    v
}

/// Raw atoms of a polyline current with the given coefficient.
fn polyline_atoms(poly: &Polyline, coef: &[f64]) -> Vec<(Segment, Vec<f64>)> {
    poly.segments().map(|s| (s, coef.to_vec())).collect()
}

/// Rebuilds a current keeping only the path part of every channel's
/// decomposition. The boundary is unchanged and the energy never increases
/// (dropping cycles removes nonnegative pointwise cost).
pub fn remove_cycles(
    t: &PolyCurrent1,
    phi: &PhiNorm,
    alpha: Alpha,
) -> Result<PolyCurrent1, CurrentError> {
    let before = energy_alpha_phi(t, phi, alpha)?;
    let mut raw = Vec::new();
    for k in 0..t.m() {
        let chan = t.channel(k);
        if chan.is_empty() {
            continue;
        }
        let dec = decompose_component(&chan)?;
        for path in &dec.paths {
            raw.extend(polyline_atoms(path, &unit_coef(t.m(), k, 1.0)));
        }
    }
    let out = PolyCurrent1::new(t.m(), t.ring(), raw)?;
    let after = energy_alpha_phi(&out, phi, alpha)?;
    debug_assert!(after <= before + 1e-9 * (1.0 + before));
    debug_assert_eq!(boundary(&out), boundary(t));
    Ok(out)
}

/// Lifts a cycle-free current with matrix coefficients and boundary matching
/// the instance into the relaxed ring: the ℓ-th extracted path of channel
/// (i,j) carries the ℓ-th basis index of that channel's block. Coefficients
/// of the lift are 0/±1 per coordinate and its relaxed-norm mass equals the
/// transport energy of the input pointwise.
pub fn lift_to_relaxed(
    t: &PolyCurrent1,
    inst: &MailingInstance,
    ord: &PairOrdering,
) -> Result<PolyCurrent1, CurrentError> {
    let n = inst.n();
    if t.m() != n * n {
        return Err(CurrentError::DimensionMismatch(t.m(), n * n));
    }
    if !ord.matches(inst) {
        return Err(CurrentError::OrderingMismatch);
    }
    if boundary(t) != build_boundary_mailing(inst) {
        return Err(CurrentError::BoundaryMismatch);
    }
    let nn = ord.total();
    let mut raw = Vec::new();
    for (i, j, g) in inst.channels() {
        let chan = t.channel(i * n + j);
        let dec = decompose_component(&chan)?;
        if !dec.cycles.is_empty() {
            return Err(CurrentError::ResidualCycles { i, j });
        }
        debug_assert_eq!(dec.paths.len() as i64, g);
        let block = ord.block_of_channel(i, j);
        for (path, k) in dec.paths.iter().zip(block) {
            raw.extend(polyline_atoms(path, &unit_coef(nn, k, 1.0)));
        }
    }
    PolyCurrent1::new(nn, Ring::Integer, raw)
}

/// The reverse of [`lift_to_relaxed`]: sums each channel's block of relaxed
/// coordinates back into the (i,j) entry of the multiplicity matrix.
pub fn project_from_relaxed(
    t: &PolyCurrent1,
    inst: &MailingInstance,
    ord: &PairOrdering,
) -> Result<PolyCurrent1, CurrentError> {
    if t.m() != ord.total() {
        return Err(CurrentError::DimensionMismatch(t.m(), ord.total()));
    }
    if !ord.matches(inst) {
        return Err(CurrentError::OrderingMismatch);
    }
    let n = inst.n();
    let mut raw = Vec::new();
    for atom in t.atoms() {
        let mut coef = vec![0.0; n * n];
        for (idx, &(i, j)) in ord.pairs().iter().enumerate() {
            coef[i * n + j] = ord.block(idx).map(|k| atom.coef[k]).sum();
        }
        raw.push((atom.segment.clone(), coef));
    }
    PolyCurrent1::new(n * n, t.ring(), raw)
}
