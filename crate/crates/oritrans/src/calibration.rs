//! Minimality certificates for planar polyhedral 1-currents.
//!
//! A certificate assigns to each cell of a convex polygonal complex a
//! constant matrix covector W. Three checks establish that a candidate
//! current minimizes mass among real-coefficient currents with the same
//! boundary:
//!
//! 1. closedness — the form is constant inside cells, so distributional
//!    closedness reduces to tangential continuity across cell interfaces;
//! 2. comass — ‖W_c‖ ≤ 1 for every cell, exact where the dual norm admits
//!    sign or subset enumeration, tolerance-qualified otherwise;
//! 3. equality — τᵀWθ = ‖θ‖ along every atom of the candidate, with atoms
//!    split exactly where they cross cell boundaries.
//!
//! A passing certificate proves minimality within the piecewise-constant
//! class; a failing one says nothing about other certificates, so verdicts
//! are always per-certificate.

use crate::coefficients::{coeff_norm, comass, CoeffError, CovectorMatrix, NormSpec};
use crate::currents::{CurrentError, PolyCurrent1};
use crate::geometry::{
    segment_intersection, GeometryError, Point, Rational, SegIntersection, Segment,
};
use num::{Signed, Zero};
use std::collections::BTreeSet;
use thiserror::Error;

/// Interface continuity tolerance: cell polygons are exact, so matching
/// tangential responses differ only by floating-point dust.
pub const CLOSEDNESS_TOL: f64 = 1e-12;
/// Tolerance for the comass bound when aggregating a verdict.
pub const COMASS_TOL: f64 = 1e-9;
/// Tolerance for the support equality condition.
pub const EQUALITY_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Coeff(#[from] CoeffError),
    #[error(transparent)]
    Current(#[from] CurrentError),
    #[error("certificates support planar cells only (ambient dimension {0})")]
    UnsupportedDimension(usize),
    #[error("cell {0} needs at least 3 vertices, got {1}")]
    TooFewVertices(usize, usize),
    #[error("cell {cell} is degenerate or not convex near vertex {vertex}")]
    NotConvex { cell: usize, vertex: usize },
    #[error("cell {cell}: covector is {rows}×{cols}, expected 2×{m}")]
    CovectorShape { cell: usize, rows: usize, cols: usize, m: usize },
    #[error("cells {0} and {1} overlap with positive area")]
    OverlappingCells(usize, usize),
    #[error("current has {got} coefficient channels, certificate norm expects {expected}")]
    ChannelMismatch { expected: usize, got: usize },
    #[error("atom {0:?} leaves the certified region")]
    UncoveredAtom(Segment),
}

/// One convex polygonal cell with its constant matrix covector.
#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationCell {
    polygon: Vec<Point>,
    w: CovectorMatrix,
}

impl CalibrationCell {
    /// Vertices in boundary order (either orientation); stored
    /// counter-clockwise. The polygon must be convex with positive area.
    pub fn new(polygon: Vec<Point>, w: CovectorMatrix) -> Result<Self, CalibrationError> {
        let cell = CalibrationCell { polygon, w };
        cell.validate(0)?;
        Ok(cell)
    }

    fn validate(&self, cell: usize) -> Result<(), CalibrationError> {
        let n = self.polygon.len();
        if n < 3 {
            return Err(CalibrationError::TooFewVertices(cell, n));
        }
        if let Some(p) = self.polygon.iter().find(|p| p.dim() != 2) {
            return Err(CalibrationError::UnsupportedDimension(p.dim()));
        }
        let area2 = shoelace2(&self.polygon);
        if area2.is_zero() {
            return Err(CalibrationError::NotConvex { cell, vertex: 0 });
        }
        for i in 0..n {
            let a = &self.polygon[i];
            let b = &self.polygon[(i + 1) % n];
            let c = &self.polygon[(i + 2) % n];
            let turn = cross2_points(a, b, c);
            if turn.is_zero() || (turn.is_positive() != area2.is_positive()) {
                return Err(CalibrationError::NotConvex { cell, vertex: (i + 1) % n });
            }
        }
        Ok(())
    }

    fn oriented(mut self) -> Self {
        if shoelace2(&self.polygon).is_negative() {
            self.polygon.reverse();
        }
        self
    }

    pub fn polygon(&self) -> &[Point] {
        &self.polygon
    }

    pub fn covector(&self) -> &CovectorMatrix {
        &self.w
    }

    /// Boundary edges in counter-clockwise order.
    fn edges(&self) -> impl Iterator<Item = Segment> + '_ {
        let n = self.polygon.len();
        (0..n).map(move |i| {
            Segment::new(self.polygon[i].clone(), self.polygon[(i + 1) % n].clone())
                .expect("convex cells have distinct consecutive vertices")
        })
    }

    /// Closed-region membership: inside or on the boundary.
    fn contains(&self, p: &Point) -> bool {
        let n = self.polygon.len();
        (0..n).all(|i| {
            !cross2_points(&self.polygon[i], &self.polygon[(i + 1) % n], p).is_negative()
        })
    }
}

/// Twice the signed area of the polygon.
fn shoelace2(polygon: &[Point]) -> Rational {
    let n = polygon.len();
    let mut acc = Rational::zero();
    for i in 0..n {
        let a = polygon[i].coords();
        let b = polygon[(i + 1) % n].coords();
        acc += &a[0] * &b[1] - &a[1] * &b[0];
    }
    acc
}

/// Cross product (b − a) × (c − a).
fn cross2_points(a: &Point, b: &Point, c: &Point) -> Rational {
    let (a, b, c) = (a.coords(), b.coords(), c.coords());
    (&b[0] - &a[0]) * (&c[1] - &a[1]) - (&b[1] - &a[1]) * (&c[0] - &a[0])
}

/// A piecewise-constant matrix covector on a convex polygonal complex.
#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationCertificate {
    cells: Vec<CalibrationCell>,
    norm: NormSpec,
}

impl CalibrationCertificate {
    /// Validates every cell (convexity, covector shape against the norm)
    /// and that cell interiors are pairwise disjoint.
    pub fn new(
        cells: Vec<CalibrationCell>,
        norm: NormSpec,
    ) -> Result<Self, CalibrationError> {
        let cells: Vec<CalibrationCell> =
            cells.into_iter().map(CalibrationCell::oriented).collect();
        for (i, cell) in cells.iter().enumerate() {
            cell.validate(i)?;
            if cell.w.d() != 2 || cell.w.m() != norm.m {
                return Err(CalibrationError::CovectorShape {
                    cell: i,
                    rows: cell.w.d(),
                    cols: cell.w.m(),
                    m: norm.m,
                });
            }
        }
        for i in 0..cells.len() {
            for j in i + 1..cells.len() {
                if polygons_overlap(&cells[i].polygon, &cells[j].polygon) {
                    return Err(CalibrationError::OverlappingCells(i, j));
                }
            }
        }
        Ok(CalibrationCertificate { cells, norm })
    }

    pub fn cells(&self) -> &[CalibrationCell] {
        &self.cells
    }

    pub fn norm(&self) -> &NormSpec {
        &self.norm
    }

    pub fn m(&self) -> usize {
        self.norm.m
    }

    /// The cell whose closed region contains `p`, if any.
    fn cell_containing(&self, p: &Point) -> Option<&CalibrationCell> {
        self.cells.iter().find(|c| c.contains(p))
    }
}

/// Exact positive-area test for the intersection of two convex polygons
/// (counter-clockwise), by clipping one against the half-planes of the other.
fn polygons_overlap(p: &[Point], q: &[Point]) -> bool {
    let mut region: Vec<(Rational, Rational)> = p
        .iter()
        .map(|v| (v.coords()[0].clone(), v.coords()[1].clone()))
        .collect();
    let nq = q.len();
    for i in 0..nq {
        let a = q[i].coords();
        let b = q[(i + 1) % nq].coords();
        let (dx, dy) = (&b[0] - &a[0], &b[1] - &a[1]);
        // keep the half-plane to the left of a→b
        let side = |pt: &(Rational, Rational)| -> Rational {
            &dx * (&pt.1 - &a[1]) - &dy * (&pt.0 - &a[0])
        };
        let mut clipped: Vec<(Rational, Rational)> = Vec::with_capacity(region.len() + 1);
        for k in 0..region.len() {
            let cur = &region[k];
            let nxt = &region[(k + 1) % region.len()];
            let sc = side(cur);
            let sn = side(nxt);
            if !sc.is_negative() {
                clipped.push(cur.clone());
            }
            if (sc.is_negative() && sn.is_positive())
                || (sc.is_positive() && sn.is_negative())
            {
                let t = &sc / (&sc - &sn);
                clipped.push((
                    &cur.0 + (&nxt.0 - &cur.0) * &t,
                    &cur.1 + (&nxt.1 - &cur.1) * &t,
                ));
            }
        }
        region = clipped;
        if region.len() < 3 {
            return false;
        }
    }
    let mut area2 = Rational::zero();
    for k in 0..region.len() {
        let a = &region[k];
        let b = &region[(k + 1) % region.len()];
        area2 += &a.0 * &b.1 - &a.1 * &b.0;
    }
    !area2.is_zero()
}

/// Where and how tangential continuity fails.
#[derive(Clone, Debug)]
pub struct ClosednessWitness {
    /// The shared interface piece on which the responses disagree.
    pub interface: Segment,
    /// Indices of the two disagreeing cells.
    pub cells: (usize, usize),
    /// Coefficient channel with the largest disagreement.
    pub channel: usize,
    /// |uᵀ(W_c − W_c′) e_channel| on the interface tangent u.
    pub mismatch: f64,
}

/// Tangential continuity across every internal interface: for each piece of
/// boundary shared by two cells with unit tangent u, uᵀW must agree
/// componentwise within [`CLOSEDNESS_TOL`]. Constant forms are closed inside
/// cells, so this is exactly distributional closedness of the certificate.
pub fn check_closed(
    cert: &CalibrationCertificate,
) -> Result<(bool, Option<ClosednessWitness>), CalibrationError> {
    let mut edges: Vec<Segment> = Vec::new();
    let mut owner: Vec<usize> = Vec::new();
    for (i, cell) in cert.cells().iter().enumerate() {
        for e in cell.edges() {
            edges.push(e);
            owner.push(i);
        }
    }
    let dec = crate::geometry::overlay(&edges);
    let mut worst: Option<ClosednessWitness> = None;
    for atom in &dec.atoms {
        let mut cells_here: Vec<usize> =
            atom.coverage.iter().map(|&(e, _)| owner[e]).collect();
        cells_here.sort_unstable();
        cells_here.dedup();
        if cells_here.len() < 2 {
            continue;
        }
        let tau = atom.segment.tangent();
        for (a, &ca) in cells_here.iter().enumerate() {
            for &cb in &cells_here[a + 1..] {
                let ra = cert.cells()[ca].w.apply(&tau);
                let rb = cert.cells()[cb].w.apply(&tau);
                for (j, (x, y)) in ra.iter().zip(&rb).enumerate() {
                    let gap = (x - y).abs();
                    if gap > CLOSEDNESS_TOL
                        && worst.as_ref().map_or(true, |w| gap > w.mismatch)
                    {
                        worst = Some(ClosednessWitness {
                            interface: atom.segment.clone(),
                            cells: (ca, cb),
                            channel: j,
                            mismatch: gap,
                        });
                    }
                }
            }
        }
    }
    Ok((worst.is_none(), worst))
}

/// Result of the comass check over all cells.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComassCheck {
    /// Largest per-cell comass bound.
    pub bound: f64,
    /// True when every per-cell bound came from exact enumeration.
    pub exact: bool,
    /// Largest certified sampling slack; the true comass is ≤ bound + slack.
    pub slack: f64,
    /// bound ≤ 1 + tol.
    pub ok: bool,
}

/// Max over cells of the comass of W_c under the certificate norm.
pub fn check_comass(
    cert: &CalibrationCertificate,
    tol: f64,
) -> Result<ComassCheck, CalibrationError> {
    let mut bound = 0.0f64;
    let mut exact = true;
    let mut slack = 0.0f64;
    for cell in cert.cells() {
        let b = comass(&cell.w, cert.norm(), tol)?;
        bound = bound.max(b.value);
        exact &= b.exact;
        slack = slack.max(b.tol);
    }
    Ok(ComassCheck { bound, exact, slack, ok: bound <= 1.0 + tol })
}

/// Max over the support of |τᵀWθ − ‖θ‖|, splitting every atom exactly where
/// it crosses cell boundaries so each piece sees a single constant W.
/// Errors if any piece lies outside all cells.
pub fn check_equality(
    cert: &CalibrationCertificate,
    t: &PolyCurrent1,
    tol: f64,
) -> Result<(f64, bool), CalibrationError> {
    if t.m() != cert.m() {
        return Err(CalibrationError::ChannelMismatch { expected: cert.m(), got: t.m() });
    }
    let mut worst = 0.0f64;
    for atom in t.atoms() {
        if atom.segment.dim() != 2 {
            return Err(CalibrationError::UnsupportedDimension(atom.segment.dim()));
        }
        let norm = coeff_norm(&atom.coef, cert.norm())?;
        let tau = atom.segment.tangent();
        let mut cuts: BTreeSet<Rational> = BTreeSet::new();
        cuts.insert(Rational::zero());
        cuts.insert(Rational::from_integer(1.into()));
        for cell in cert.cells() {
            for edge in cell.edges() {
                match segment_intersection(&atom.segment, &edge) {
                    SegIntersection::Empty => {}
                    SegIntersection::Single(p) => {
                        if let Some(tp) = atom.segment.param_of(&p) {
                            cuts.insert(tp);
                        }
                    }
                    SegIntersection::Overlap(seg) => {
                        for p in [seg.a(), seg.b()] {
                            if let Some(tp) = atom.segment.param_of(p) {
                                cuts.insert(tp);
                            }
                        }
                    }
                }
            }
        }
        let params: Vec<&Rational> = cuts.iter().collect();
        for pair in params.windows(2) {
            let mid = (pair[0] + pair[1]) / Rational::from_integer(2.into());
            let sample = atom.segment.point_at(&mid);
            let Some(cell) = cert.cell_containing(&sample) else {
                return Err(CalibrationError::UncoveredAtom(atom.segment.clone()));
            };
            let response = cell.w.apply(&tau);
            let pairing: f64 =
                response.iter().zip(&atom.coef).map(|(r, c)| r * c).sum();
            worst = worst.max((pairing - norm).abs());
        }
    }
    Ok((worst, worst <= tol))
}

/// Aggregated verdict of a certificate against a candidate current.
#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    /// All three checks passed: the candidate minimizes mass among
    /// real-coefficient currents with its boundary (within the
    /// piecewise-constant certificate class).
    Calibrated,
    /// A check failed definitively; the reason names it.
    Violated(String),
    /// The sampled comass bound straddles 1 too closely to decide.
    Inconclusive(String),
}

#[derive(Clone, Debug)]
pub struct CalibrationReport {
    pub closed: bool,
    pub closedness_witness: Option<ClosednessWitness>,
    pub comass: ComassCheck,
    pub equality_max_violation: f64,
    pub verdict: Verdict,
}

/// Runs all three checks at the default tolerances and aggregates.
/// A failing check yields [`Verdict::Violated`]; a sampled comass bound
/// whose uncertainty band contains 1 yields [`Verdict::Inconclusive`].
pub fn verify_calibration(
    cert: &CalibrationCertificate,
    t: &PolyCurrent1,
) -> Result<CalibrationReport, CalibrationError> {
    let (closed, witness) = check_closed(cert)?;
    let comass_check = check_comass(cert, COMASS_TOL)?;
    let equality = check_equality(cert, t, EQUALITY_TOL);
    let (equality_max_violation, equality_ok) = match equality {
        Ok(pair) => pair,
        Err(CalibrationError::UncoveredAtom(seg)) => {
            return Ok(CalibrationReport {
                closed,
                closedness_witness: witness,
                comass: comass_check,
                equality_max_violation: f64::INFINITY,
                verdict: Verdict::Violated(format!(
                    "equality: atom {seg:?} is not covered by any cell"
                )),
            })
        }
        Err(e) => return Err(e),
    };
    let verdict = if !closed {
        let w = witness.as_ref().expect("a failed closedness check carries a witness");
        Verdict::Violated(format!(
            "closedness: cells {} and {} disagree by {:.3e} on channel {} across {:?}",
            w.cells.0, w.cells.1, w.mismatch, w.channel, w.interface
        ))
    } else if comass_check.bound > 1.0 + COMASS_TOL {
        Verdict::Violated(format!(
            "comass: bound {:.12} exceeds 1",
            comass_check.bound
        ))
    } else if !equality_ok {
        Verdict::Violated(format!(
            "equality: worst violation {equality_max_violation:.3e} exceeds {EQUALITY_TOL:.0e}"
        ))
    } else if !comass_check.exact && comass_check.bound + comass_check.slack > 1.0 + COMASS_TOL {
        Verdict::Inconclusive(format!(
            "comass: sampled bound {:.9} ± {:.1e} straddles 1",
            comass_check.bound, comass_check.slack
        ))
    } else {
        Verdict::Calibrated
    };
    Ok(CalibrationReport {
        closed,
        closedness_witness: witness,
        comass: comass_check,
        equality_max_violation,
        verdict,
    })
}

/// The classical three-terminal example: terminals on the unit circle at
/// 120° spacing (rotated by `phase_deg` to keep coordinates generic), the
/// branch point at the origin, coefficients e₁, e₂, −e₁−e₂.
///
/// Returns the instance points, the minimizing current, and a single-cell
/// certificate whose covector columns are the two outgoing unit tangents.
/// Under the norm φ = ℓ¹ of the positive/negative suprema the certificate
/// passes all three checks; the comass enumeration is exact because the
/// dual norm is a subset maximum.
pub fn fermat_example(
    phase_deg: f64,
) -> Result<(Vec<Point>, PolyCurrent1, CalibrationCertificate), CalibrationError> {
    use crate::coefficients::{Alpha, PhiNorm};
    let dirs: Vec<[f64; 2]> = (0..3)
        .map(|k| {
            let th = (phase_deg + 120.0 * k as f64).to_radians();
            [th.cos(), th.sin()]
        })
        .collect();
    let terminals: Vec<Point> = dirs
        .iter()
        .map(|d| Point::from_f64(d).expect("finite coordinates"))
        .collect();
    let origin = Point::xy(0, 0);
    let norm = NormSpec::phi_alpha(
        PhiNorm::L1,
        Alpha::new(0.0).expect("0 is a valid exponent"),
        2,
    );
    let raw = vec![
        (
            Segment::new(origin.clone(), terminals[0].clone())?,
            vec![1.0, 0.0],
        ),
        (
            Segment::new(origin.clone(), terminals[1].clone())?,
            vec![0.0, 1.0],
        ),
        (
            Segment::new(origin.clone(), terminals[2].clone())?,
            vec![-1.0, -1.0],
        ),
    ];
    let current = PolyCurrent1::new(2, crate::currents::Ring::Integer, raw)?;
    let columns: Vec<Vec<f64>> = (0..2)
        .map(|j| {
            Segment::new(origin.clone(), terminals[j].clone())
                .expect("terminals are off the origin")
                .tangent()
        })
        .collect();
    let w = CovectorMatrix::from_columns(columns, 2)?;
    let cell = CalibrationCell::new(
        vec![
            Point::xy(-2, -2),
            Point::xy(2, -2),
            Point::xy(2, 2),
            Point::xy(-2, 2),
        ],
        w,
    )?;
    let cert = CalibrationCertificate::new(vec![cell], norm)?;
    Ok((terminals, current, cert))
}
