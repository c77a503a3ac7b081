//! Exact rational points, oriented segments, simple polylines, and the
//! collinear-overlay decomposition used to integrate over networks.
//!
//! All coordinates are arbitrary-precision rationals, so overlap detection,
//! intersection points, and subdivision are exact; only Euclidean lengths
//! leave the rational world (via one square root at the very end).

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{FromPrimitive, Integer, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

/// Exact coordinate scalar used throughout the crate.
pub type Rational = BigRational;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GeometryError {
    #[error("unsupported ambient dimension {0} (expected 2 or 3)")]
    UnsupportedDimension(usize),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("degenerate segment: endpoints coincide")]
    DegenerateSegment,
    #[error("polyline needs at least 2 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polyline has consecutive duplicate vertices at index {0}")]
    DuplicateVertex(usize),
}

/// Shorthand for an integer rational.
pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Shorthand for the rational n/d.
pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Exact conversion of a finite f64 into a rational.
pub fn rational_from_f64(x: f64) -> Rational {
    Rational::from_f64(x).expect("finite float")
}

pub fn rational_to_f64(x: &Rational) -> f64 {
    x.to_f64().expect("rational in f64 range")
}

// ---- vector helpers on rational slices ----

pub(crate) fn vsub(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub(crate) fn vdot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn cross2(a: &[Rational], b: &[Rational]) -> Rational {
    &a[0] * &b[1] - &a[1] * &b[0]
}

pub(crate) fn cross3(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    vec![
        &a[1] * &b[2] - &a[2] * &b[1],
        &a[2] * &b[0] - &a[0] * &b[2],
        &a[0] * &b[1] - &a[1] * &b[0],
    ]
}

fn is_zero_vec(v: &[Rational]) -> bool {
    v.iter().all(Rational::is_zero)
}

/// A point of the ambient space, d ∈ {2, 3}.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Point {
    coords: Vec<Rational>,
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, c) in self.coords.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl Point {
    pub fn new(coords: Vec<Rational>) -> Result<Self, GeometryError> {
        if coords.len() != 2 && coords.len() != 3 {
            return Err(GeometryError::UnsupportedDimension(coords.len()));
        }
        Ok(Point { coords })
    }

    /// Planar point with integer coordinates.
    pub fn xy(x: i64, y: i64) -> Self {
        Point { coords: vec![rat(x), rat(y)] }
    }

    /// Planar point with rational coordinates.
    pub fn xy_rat(x: Rational, y: Rational) -> Self {
        Point { coords: vec![x, y] }
    }

    /// Exact conversion from float coordinates (binary rationals).
    pub fn from_f64(coords: &[f64]) -> Result<Self, GeometryError> {
        Point::new(coords.iter().map(|&c| rational_from_f64(c)).collect())
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Rational] {
        &self.coords
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coords.iter().map(rational_to_f64).collect()
    }

    /// The point (1−t)·self + t·other.
    pub fn lerp(&self, other: &Point, t: &Rational) -> Point {
        let one = Rational::from_integer(BigInt::from(1));
        let s = &one - t;
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a * &s + b * t)
            .collect();
        Point { coords }
    }
}

pub fn dist(a: &Point, b: &Point) -> f64 {
    a.to_f64()
        .iter()
        .zip(b.to_f64())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// An oriented straight segment a → b with a ≠ b.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Segment {
    a: Point,
    b: Point,
}

impl fmt::Debug for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}->{:?}", self.a, self.b)
    }
}

impl Segment {
    pub fn new(a: Point, b: Point) -> Result<Self, GeometryError> {
        if a.dim() != b.dim() {
            return Err(GeometryError::DimensionMismatch(a.dim(), b.dim()));
        }
        if a == b {
            return Err(GeometryError::DegenerateSegment);
        }
        Ok(Segment { a, b })
    }

    pub fn a(&self) -> &Point {
        &self.a
    }

    pub fn b(&self) -> &Point {
        &self.b
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    /// Exact squared Euclidean length.
    pub fn length2(&self) -> Rational {
        let d = vsub(self.b.coords(), self.a.coords());
        vdot(&d, &d)
    }

    /// Euclidean length |b − a|.
    pub fn length(&self) -> f64 {
        rational_to_f64(&self.length2()).sqrt()
    }

    /// Unit tangent (b − a)/|b − a| in floating point.
    pub fn tangent(&self) -> Vec<f64> {
        let len = self.length();
        self.b
            .to_f64()
            .iter()
            .zip(self.a.to_f64())
            .map(|(x, y)| (x - y) / len)
            .collect()
    }

    pub fn reversed(&self) -> Segment {
        Segment { a: self.b.clone(), b: self.a.clone() }
    }

    /// The point a + t·(b − a) for t ∈ [0, 1].
    pub fn point_at(&self, t: &Rational) -> Point {
        self.a.lerp(&self.b, t)
    }

    /// Exact parameter t with p = a + t·(b−a), if p lies on the closed segment.
    pub fn param_of(&self, p: &Point) -> Option<Rational> {
        let d = vsub(self.b.coords(), self.a.coords());
        let r = vsub(p.coords(), self.a.coords());
        // p is on the supporting line iff r is parallel to d.
        let parallel = if self.dim() == 2 {
            cross2(&r, &d).is_zero()
        } else {
            is_zero_vec(&cross3(&r, &d))
        };
        if !parallel {
            return None;
        }
        let t = vdot(&r, &d) / vdot(&d, &d);
        if t >= Rational::zero() && t <= rat(1) {
            Some(t)
        } else {
            None
        }
    }
}

/// Exact intersection of two closed segments.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SegIntersection {
    Empty,
    /// A single shared point (transversal crossing, T-touch, shared endpoint).
    Single(Point),
    /// A positive-length shared sub-segment (collinear overlap).
    Overlap(Segment),
}

pub fn segment_intersection(s: &Segment, t: &Segment) -> SegIntersection {
    assert_eq!(s.dim(), t.dim(), "segments must share ambient dimension");
    let r = vsub(s.b.coords(), s.a.coords());
    let u = vsub(t.b.coords(), t.a.coords());
    let w = vsub(t.a.coords(), s.a.coords());
    if s.dim() == 2 {
        let denom = cross2(&r, &u);
        if !denom.is_zero() {
            let tp = cross2(&w, &u) / &denom;
            let sp = cross2(&w, &r) / &denom;
            let zero = Rational::zero();
            let one = rat(1);
            if tp >= zero && tp <= one && sp >= zero && sp <= one {
                return SegIntersection::Single(s.point_at(&tp));
            }
            return SegIntersection::Empty;
        }
        if !cross2(&w, &r).is_zero() {
            return SegIntersection::Empty; // parallel, distinct lines
        }
        collinear_overlap(s, t, &r)
    } else {
        let n = cross3(&r, &u);
        if !is_zero_vec(&n) {
            if !vdot(&w, &n).is_zero() {
                return SegIntersection::Empty; // skew lines
            }
            let nn = vdot(&n, &n);
            let tp = vdot(&cross3(&w, &u), &n) / &nn;
            let sp = vdot(&cross3(&w, &r), &n) / &nn;
            let zero = Rational::zero();
            let one = rat(1);
            if tp >= zero && tp <= one && sp >= zero && sp <= one {
                return SegIntersection::Single(s.point_at(&tp));
            }
            return SegIntersection::Empty;
        }
        if !is_zero_vec(&cross3(&w, &r)) {
            return SegIntersection::Empty;
        }
        collinear_overlap(s, t, &r)
    }
}

/// Overlap of two segments known to lie on one line with direction r (of s).
fn collinear_overlap(s: &Segment, t: &Segment, r: &[Rational]) -> SegIntersection {
    let rr = vdot(r, r);
    let proj = |p: &Point| vdot(&vsub(p.coords(), s.a.coords()), r) / &rr;
    let (s0, s1) = (Rational::zero(), rat(1));
    let (mut t0, mut t1) = (proj(&t.a), proj(&t.b));
    if t0 > t1 {
        std::mem::swap(&mut t0, &mut t1);
    }
    let lo = s0.max(t0);
    let hi = s1.min(t1);
    if lo > hi {
        SegIntersection::Empty
    } else if lo == hi {
        SegIntersection::Single(s.point_at(&lo))
    } else {
        let a = s.point_at(&lo);
        let b = s.point_at(&hi);
        SegIntersection::Overlap(Segment { a, b })
    }
}

/// An ordered chain of ≥ 2 points with distinct consecutive vertices.
#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub struct Polyline {
    vertices: Vec<Point>,
}

impl Polyline {
    pub fn new(vertices: Vec<Point>) -> Result<Self, GeometryError> {
        if vertices.len() < 2 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        let d = vertices[0].dim();
        for (k, w) in vertices.windows(2).enumerate() {
            if w[1].dim() != d {
                return Err(GeometryError::DimensionMismatch(d, w[1].dim()));
            }
            if w[0] == w[1] {
                return Err(GeometryError::DuplicateVertex(k + 1));
            }
        }
        Ok(Polyline { vertices })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn first(&self) -> &Point {
        &self.vertices[0]
    }

    pub fn last(&self) -> &Point {
        self.vertices.last().unwrap()
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        self.vertices
            .windows(2)
            .map(|w| Segment { a: w[0].clone(), b: w[1].clone() })
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|s| s.length()).sum()
    }

    pub fn reversed(&self) -> Polyline {
        let mut vertices = self.vertices.clone();
        vertices.reverse();
        Polyline { vertices }
    }

    pub fn is_simple(&self) -> bool {
        is_simple(self)
    }
}

/// True iff no two non-adjacent segments of `p` intersect and adjacent
/// segments meet only at their shared vertex.
pub fn is_simple(p: &Polyline) -> bool {
    let segs: Vec<Segment> = p.segments().collect();
    for i in 0..segs.len() {
        for j in (i + 1)..segs.len() {
            match segment_intersection(&segs[i], &segs[j]) {
                SegIntersection::Empty => {}
                SegIntersection::Overlap(_) => return false,
                SegIntersection::Single(x) => {
                    if j == i + 1 {
                        // adjacent: only the shared vertex is allowed
                        if x != *segs[i].b() {
                            return false;
                        }
                    } else {
                        return false;
                    }
                }
            }
        }
    }
    true
}

// ---- collinear overlay ----

/// One atom of an overlay: a segment together with the list of input segments
/// covering it. The sign says whether the atom's orientation agrees (+1) or
/// disagrees (−1) with that input's orientation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OverlayAtom {
    pub segment: Segment,
    pub coverage: Vec<(usize, i8)>,
}

/// Decomposition of a set of segments into atoms that pairwise share at most
/// finitely many points (zero length), with exact coverage bookkeeping.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct OverlayDecomposition {
    pub atoms: Vec<OverlayAtom>,
}

/// Canonical key for the supporting line of a segment: the primitive integer
/// direction (sign-normalized) plus the exact moment of the line, which
/// together identify the line uniquely.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
struct LineKey {
    dir: Vec<BigInt>,
    moment: Vec<Rational>,
}

/// Primitive integer vector parallel to `v`, sign-normalized so the first
/// nonzero entry is positive. Returns the vector and whether the sign flipped.
fn primitive_direction(v: &[Rational]) -> (Vec<BigInt>, bool) {
    let mut lcm = BigInt::from(1);
    for c in v {
        lcm = lcm.lcm(c.denom());
    }
    let mut ints: Vec<BigInt> = v.iter().map(|c| c.numer() * (&lcm / c.denom())).collect();
    let mut gcd = BigInt::zero();
    for c in &ints {
        gcd = gcd.gcd(c);
    }
    for c in &mut ints {
        *c = &*c / &gcd;
    }
    let flip = ints
        .iter()
        .find(|c| !c.is_zero())
        .map(|c| c.is_negative())
        .unwrap_or(false);
    if flip {
        for c in &mut ints {
            *c = -&*c;
        }
    }
    (ints, flip)
}

fn line_key(seg: &Segment, dir: &[BigInt]) -> LineKey {
    let dir_rat: Vec<Rational> = dir.iter().map(|c| Rational::from_integer(c.clone())).collect();
    let a = seg.a().coords();
    let moment = if seg.dim() == 2 {
        vec![cross2(a, &dir_rat)]
    } else {
        cross3(a, &dir_rat)
    };
    LineKey { dir: dir.to_vec(), moment }
}

/// Computes the overlay of `inputs`: collinear overlapping segments are cut at
/// every endpoint and share atoms; transversal crossings are ignored (they
/// have zero length). Atom order is deterministic.
pub fn overlay(inputs: &[Segment]) -> OverlayDecomposition {
    // group inputs by supporting line, remembering orientation vs. the line
    let mut lines: BTreeMap<LineKey, Vec<(usize, Rational, Rational, i8)>> = BTreeMap::new();
    let mut points: BTreeMap<LineKey, BTreeMap<Rational, Point>> = BTreeMap::new();
    for (i, seg) in inputs.iter().enumerate() {
        let delta = vsub(seg.b().coords(), seg.a().coords());
        let (dir, flipped) = primitive_direction(&delta);
        let key = line_key(seg, &dir);
        let dir_rat: Vec<Rational> =
            dir.iter().map(|c| Rational::from_integer(c.clone())).collect();
        let ta = vdot(seg.a().coords(), &dir_rat);
        let tb = vdot(seg.b().coords(), &dir_rat);
        let sign: i8 = if flipped { -1 } else { 1 };
        debug_assert_eq!(sign == 1, tb > ta);
        let (lo, hi) = if ta < tb { (ta.clone(), tb.clone()) } else { (tb.clone(), ta.clone()) };
        let pts = points.entry(key.clone()).or_default();
        pts.insert(ta, seg.a().clone());
        pts.insert(tb, seg.b().clone());
        lines.entry(key).or_default().push((i, lo, hi, sign));
    }

    let mut atoms = Vec::new();
    for (key, spans) in &lines {
        let pts = &points[key];
        let cuts: Vec<&Rational> = pts.keys().collect();
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let coverage: Vec<(usize, i8)> = spans
                .iter()
                .filter(|(_, slo, shi, _)| slo <= lo && shi >= hi)
                .map(|(i, _, _, sign)| (*i, *sign))
                .collect();
            if coverage.is_empty() {
                continue;
            }
            let segment = Segment { a: pts[lo].clone(), b: pts[hi].clone() };
            atoms.push(OverlayAtom { segment, coverage });
        }
    }
    OverlayDecomposition { atoms }
}
