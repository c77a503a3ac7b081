//! Grouped connection problems: boundary data built from a partition of the
//! terminals and the map that turns a connecting forest into a current.
//!
//! The terminals are split into groups of size ≥ 2; each group must end up
//! connected. With k groups over n terminals the coefficients live in
//! ℤ^{n−k}: inside a group, every terminal except a designated hub (the last
//! member) receives its own basis vector, and the hub receives minus their
//! sum, so each group's vectors cancel and distinct groups use disjoint
//! blocks of coordinates. A forest containing every group in one component
//! induces a current by routing, per non-hub terminal, the unique forest
//! path from the hub with that terminal's basis vector as coefficient. The
//! resulting coefficient field has unit sup-norm on every atom it uses, so
//! its sup-norm mass is exactly the total length it covers.

use crate::currents::{
    boundary, AtomicMeasure0, CurrentError, PolyCurrent1, Ring,
};
use crate::geometry::{GeometryError, Point, Segment};
use std::collections::VecDeque;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SteinerError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Current(#[from] CurrentError),
    #[error("partition index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("partition must cover every terminal exactly once")]
    NotAPartition,
    #[error("group {0} has fewer than two terminals")]
    GroupTooSmall(usize),
    #[error("terminals must be distinct")]
    DuplicateTerminal,
    #[error("terminals must share one dimension")]
    MixedDimensions,
    #[error("edge ({0}, {1}) is invalid")]
    BadEdge(usize, usize),
    #[error("forest contains a cycle")]
    Cyclic,
    #[error("terminal {0} does not appear among the forest vertices")]
    TerminalMissing(usize),
    #[error("group {0} is split across forest components")]
    GroupDisconnected(usize),
}

/// Terminals with a partition into groups of size ≥ 2.
///
/// Internally the terminals are stored in grouped order (group 0 first, then
/// group 1, …); [`PartitionedInstance::original_index`] recovers the caller's
/// numbering. The hub of a group is its last member in grouped order.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionedInstance {
    points: Vec<Point>,
    group_sizes: Vec<usize>,
    to_original: Vec<usize>,
}

impl PartitionedInstance {
    /// `partition` lists 0-based indices into `points`; groups must be
    /// disjoint, cover all points, and contain at least two members each.
    pub fn new(
        points: Vec<Point>,
        partition: Vec<Vec<usize>>,
    ) -> Result<Self, SteinerError> {
        let n = points.len();
        if n > 0 {
            let d = points[0].dim();
            if points.iter().any(|p| p.dim() != d) {
                return Err(SteinerError::MixedDimensions);
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if points[i] == points[j] {
                    return Err(SteinerError::DuplicateTerminal);
                }
            }
        }
        let mut seen = vec![false; n];
        let mut to_original = Vec::with_capacity(n);
        let mut group_sizes = Vec::with_capacity(partition.len());
        for (gi, group) in partition.iter().enumerate() {
            if group.len() < 2 {
                return Err(SteinerError::GroupTooSmall(gi));
            }
            for &idx in group {
                if idx >= n {
                    return Err(SteinerError::IndexOutOfRange(idx));
                }
                if seen[idx] {
                    return Err(SteinerError::NotAPartition);
                }
                seen[idx] = true;
                to_original.push(idx);
            }
            group_sizes.push(group.len());
        }
        if seen.iter().any(|&s| !s) {
            return Err(SteinerError::NotAPartition);
        }
        let points = to_original.iter().map(|&i| points[i].clone()).collect();
        Ok(PartitionedInstance { points, group_sizes, to_original })
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn k(&self) -> usize {
        self.group_sizes.len()
    }

    /// Coefficient dimension n − k.
    pub fn m(&self) -> usize {
        self.n() - self.k()
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    /// Terminals in grouped order.
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, internal: usize) -> &Point {
        &self.points[internal]
    }

    pub fn group_sizes(&self) -> &[usize] {
        &self.group_sizes
    }

    /// The caller's index of the terminal at a grouped-order position.
    pub fn original_index(&self, internal: usize) -> usize {
        self.to_original[internal]
    }

    /// Grouped-order positions of group `gi` (consecutive by construction).
    pub fn group_range(&self, gi: usize) -> std::ops::Range<usize> {
        let start: usize = self.group_sizes[..gi].iter().sum();
        start..start + self.group_sizes[gi]
    }

    /// The hub terminal of group `gi`: its last member in grouped order.
    pub fn hub(&self, gi: usize) -> usize {
        self.group_range(gi).end - 1
    }

    /// The coefficient coordinate owned by a non-hub terminal, or None for
    /// hubs. Group `gi` owns the coordinate block shifted down by `gi`
    /// because each preceding group contributes one hub without a
    /// coordinate.
    pub fn basis_index(&self, internal: usize) -> Option<usize> {
        let mut start = 0;
        for (gi, &size) in self.group_sizes.iter().enumerate() {
            if internal < start + size {
                if internal == start + size - 1 {
                    return None;
                }
                return Some(internal - gi);
            }
            start += size;
        }
        None
    }
}

/// Integer coefficient vectors in ℤ^{n−k}, one per terminal in grouped
/// order: a non-hub terminal gets its own basis vector, the hub of each
/// group gets minus the sum of its group's vectors.
pub fn build_g_vectors(inst: &PartitionedInstance) -> Vec<Vec<i64>> {
    let m = inst.m();
    let mut out = Vec::with_capacity(inst.n());
    for internal in 0..inst.n() {
        let mut v = vec![0i64; m];
        match inst.basis_index(internal) {
            Some(b) => v[b] = 1,
            None => {
                let gi = (0..inst.k())
                    .find(|&g| inst.group_range(g).contains(&internal))
                    .expect("every terminal belongs to a group");
                for member in inst.group_range(gi) {
                    if let Some(b) = inst.basis_index(member) {
                        v[b] = -1;
                    }
                }
            }
        }
        out.push(v);
    }
    out
}

/// The boundary measure Σ_ℓ g_ℓ δ_{p_ℓ} of the grouped instance.
pub fn build_boundary_steiner(inst: &PartitionedInstance) -> AtomicMeasure0 {
    let g = build_g_vectors(inst);
    let raw = inst
        .points()
        .iter()
        .zip(g)
        .map(|(p, v)| (p.clone(), v.into_iter().map(|x| x as f64).collect()))
        .collect();
    AtomicMeasure0::new(inst.m(), raw).expect("coefficient lengths are uniform")
}

/// A geometric graph on explicit vertices: terminals plus auxiliary
/// branching points, with straight edges between them.
#[derive(Clone, Debug, PartialEq)]
pub struct Forest {
    vertices: Vec<Point>,
    edges: Vec<(usize, usize)>,
}

impl Forest {
    /// Validates indices, distinct vertices, and non-degenerate, unrepeated
    /// edges. Acyclicity is checked where it matters, in
    /// [`tree_to_current`], so invalid candidates can still be constructed
    /// and rejected with a precise error.
    pub fn new(
        vertices: Vec<Point>,
        edges: Vec<(usize, usize)>,
    ) -> Result<Self, SteinerError> {
        if !vertices.is_empty() {
            let d = vertices[0].dim();
            if vertices.iter().any(|p| p.dim() != d) {
                return Err(SteinerError::MixedDimensions);
            }
        }
        for i in 0..vertices.len() {
            for j in (i + 1)..vertices.len() {
                if vertices[i] == vertices[j] {
                    return Err(SteinerError::DuplicateTerminal);
                }
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for &(u, v) in &edges {
            if u >= vertices.len() || v >= vertices.len() || u == v {
                return Err(SteinerError::BadEdge(u, v));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(SteinerError::BadEdge(u, v));
            }
        }
        Ok(Forest { vertices, edges })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn segment(&self, e: usize) -> Segment {
        let (u, v) = self.edges[e];
        Segment::new(self.vertices[u].clone(), self.vertices[v].clone())
            .expect("forest edges are non-degenerate")
    }

    /// Total edge length.
    pub fn length(&self) -> f64 {
        (0..self.edges.len()).map(|e| self.segment(e).length()).sum()
    }

    pub fn is_acyclic(&self) -> bool {
        let mut parent: Vec<usize> = (0..self.vertices.len()).collect();
        fn find(parent: &mut Vec<usize>, x: usize) -> usize {
            if parent[x] != x {
                let r = find(parent, parent[x]);
                parent[x] = r;
            }
            parent[x]
        }
        for &(u, v) in &self.edges {
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            if ru == rv {
                return false;
            }
            parent[ru] = rv;
        }
        true
    }

    /// Component id per vertex.
    pub fn component_ids(&self) -> Vec<usize> {
        let n = self.vertices.len();
        let mut comp = vec![usize::MAX; n];
        let adj = self.adjacency();
        let mut next = 0;
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    if comp[v] == usize::MAX {
                        comp[v] = next;
                        queue.push_back(v);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        adj
    }

    fn vertex_of(&self, p: &Point) -> Option<usize> {
        self.vertices.iter().position(|q| q == p)
    }
}

/// Routes, for every group, the unique forest path from the group's hub to
/// each other terminal of the group, carrying that terminal's basis vector.
///
/// The result has the grouped boundary, coefficient entries in {−1, 0, +1},
/// and sup-norm exactly 1 on every atom it covers, so its sup-norm mass is
/// the length of the used part of the forest.
pub fn tree_to_current(
    forest: &Forest,
    inst: &PartitionedInstance,
) -> Result<PolyCurrent1, SteinerError> {
    if !forest.is_acyclic() {
        return Err(SteinerError::Cyclic);
    }
    let adj = forest.adjacency();
    let comp = forest.component_ids();
    let m = inst.m();
    let mut raw: Vec<(Segment, Vec<f64>)> = Vec::new();
    for gi in 0..inst.k() {
        let hub_internal = inst.hub(gi);
        let hub = forest
            .vertex_of(inst.point(hub_internal))
            .ok_or(SteinerError::TerminalMissing(inst.original_index(hub_internal)))?;
        // breadth-first parents rooted at the hub
        let mut parent = vec![usize::MAX; forest.vertices().len()];
        parent[hub] = hub;
        let mut queue = VecDeque::from([hub]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if parent[v] == usize::MAX {
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        for internal in inst.group_range(gi) {
            let Some(basis) = inst.basis_index(internal) else { continue };
            let target = forest
                .vertex_of(inst.point(internal))
                .ok_or(SteinerError::TerminalMissing(inst.original_index(internal)))?;
            if comp[target] != comp[hub] {
                return Err(SteinerError::GroupDisconnected(gi));
            }
            let mut coef = vec![0.0; m];
            coef[basis] = 1.0;
            // walk target → hub, emit segments oriented hub → target
            let mut v = target;
            while v != hub {
                let u = parent[v];
                let seg = Segment::new(
                    forest.vertices()[u].clone(),
                    forest.vertices()[v].clone(),
                )
                .expect("forest vertices are distinct");
                raw.push((seg, coef.clone()));
                v = u;
            }
        }
    }
    let t = PolyCurrent1::new(m, Ring::Integer, raw)?;
    debug_assert_eq!(boundary(&t), build_boundary_steiner(inst));
    Ok(t)
}
