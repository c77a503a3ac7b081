//! Path families: the Lagrangian description of a routing instance.
//!
//! A family assigns each demand unit (i,j) a simple oriented polyline from
//! p_i to p_j. The overlay of all paths yields, per atom, the counts θ⁺/θ⁻
//! of paths aligned/anti-aligned with the atom's reference orientation; the
//! family energy integrates φ((θ⁻)^α, (θ⁺)^α) over the network and is
//! orientation-independent because φ is symmetric.
//!
//! The two constructive maps mirror the equivalence with currents: a family
//! becomes a current by pushing each path with a matrix unit coefficient
//! (cancellation can only lower the energy), and an integer current with the
//! instance boundary becomes a family by per-channel path decomposition
//! (cycles are dropped; their mass is reported).

use crate::coefficients::{pow_alpha, Alpha, PhiNorm};
use crate::currents::{
    boundary, build_boundary_mailing, decompose_component, CurrentError, MailingInstance,
    PairOrdering, PolyCurrent1, Ring,
};
use crate::geometry::{overlay, GeometryError, Polyline, Segment};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MailingError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Current(#[from] CurrentError),
    #[error("commodity ({i},{j}) out of range for n = {n}")]
    CommodityRange { i: usize, j: usize, n: usize },
    #[error("commodity endpoints must differ")]
    SelfCommodity,
    #[error("family is not compatible with its instance")]
    Incompatible,
}

/// One routed unit: a commodity (i,j) with its simple path from p_i to p_j.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledPath {
    pub commodity: (usize, usize),
    pub path: Polyline,
}

/// A family of labeled paths attached to a routing instance.
#[derive(Clone, Debug, PartialEq)]
pub struct PathFamily {
    paths: Vec<LabeledPath>,
    instance: MailingInstance,
}

impl PathFamily {
    pub fn new(paths: Vec<LabeledPath>, instance: MailingInstance) -> Result<Self, MailingError> {
        let n = instance.n();
        for lp in &paths {
            let (i, j) = lp.commodity;
            if i >= n || j >= n {
                return Err(MailingError::CommodityRange { i, j, n });
            }
            if i == j {
                return Err(MailingError::SelfCommodity);
            }
        }
        Ok(PathFamily { paths, instance })
    }

    pub fn paths(&self) -> &[LabeledPath] {
        &self.paths
    }

    pub fn instance(&self) -> &MailingInstance {
        &self.instance
    }
}

/// One atom of the family overlay with its aligned/anti-aligned path counts
/// relative to the stored segment orientation.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaAtom {
    pub segment: Segment,
    pub theta_plus: u32,
    pub theta_minus: u32,
}

/// The multiplicity field of a family over the overlay of its paths.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaField {
    pub atoms: Vec<ThetaAtom>,
}

impl ThetaField {
    /// The same field with the reference orientation of selected atoms
    /// flipped (swapping θ⁺ and θ⁻). Energies must not change.
    pub fn flipped(&self, flip: &[bool]) -> ThetaField {
        let atoms = self
            .atoms
            .iter()
            .enumerate()
            .map(|(k, a)| {
                if flip.get(k).copied().unwrap_or(false) {
                    ThetaAtom {
                        segment: a.segment.reversed(),
                        theta_plus: a.theta_minus,
                        theta_minus: a.theta_plus,
                    }
                } else {
                    a.clone()
                }
            })
            .collect();
        ThetaField { atoms }
    }
}

/// True iff every commodity (i,j) has exactly g_ij paths, every path runs
/// from p_i to p_j, and every path is simple.
pub fn check_compatible(f: &PathFamily) -> bool {
    let inst = f.instance();
    let n = inst.n();
    let mut counts = vec![0i64; n * n];
    for lp in f.paths() {
        let (i, j) = lp.commodity;
        counts[i * n + j] += 1;
        if lp.path.first() != inst.point(i) || lp.path.last() != inst.point(j) {
            return false;
        }
        if !lp.path.is_simple() {
            return false;
        }
    }
    counts == inst.g_entries()
}

/// Per overlay atom, the counts of covering paths aligned (+) and
/// anti-aligned (−) with the atom's reference orientation.
pub fn theta_pm(f: &PathFamily) -> ThetaField {
    let segments: Vec<Segment> =
        f.paths().iter().flat_map(|lp| lp.path.segments()).collect();
    let dec = overlay(&segments);
    let atoms = dec
        .atoms
        .into_iter()
        .map(|oa| {
            let theta_plus = oa.coverage.iter().filter(|(_, s)| *s == 1).count() as u32;
            let theta_minus = oa.coverage.len() as u32 - theta_plus;
            ThetaAtom { segment: oa.segment, theta_plus, theta_minus }
        })
        .collect();
    ThetaField { atoms }
}

/// Σ atoms φ((θ⁻)^α, (θ⁺)^α) · length over a multiplicity field.
pub fn energy_of_theta_field(field: &ThetaField, phi: &PhiNorm, alpha: Alpha) -> f64 {
    let a = alpha.value();
    field
        .atoms
        .iter()
        .map(|atom| {
            let x = pow_alpha(f64::from(atom.theta_minus), a);
            let y = pow_alpha(f64::from(atom.theta_plus), a);
            phi_symmetric_eval(phi, x, y) * atom.segment.length()
        })
        .sum()
}

/// φ evaluated on the quadrant; kept as a tiny wrapper so the energy reads
/// as the integrand.
fn phi_symmetric_eval(phi: &PhiNorm, x: f64, y: f64) -> f64 {
    // delegate through cost-free path: phi is symmetric, order irrelevant
    crate::coefficients::phi_eval(phi, x, y).expect("α-powers are nonnegative")
}

/// The family energy 𝔼(𝓕) = ∫ φ((θ⁻)^α, (θ⁺)^α) dℋ¹.
pub fn energy_family(f: &PathFamily, phi: &PhiNorm, alpha: Alpha) -> Result<f64, MailingError> {
    if !check_compatible(f) {
        return Err(MailingError::Incompatible);
    }
    Ok(energy_of_theta_field(&theta_pm(f), phi, alpha))
}

/// Pushes every path forward with the matrix unit coefficient of its
/// commodity. The boundary is the instance boundary exactly; overlaps of
/// opposite same-channel traversals cancel, so the energy never increases.
pub fn family_to_current(f: &PathFamily) -> Result<PolyCurrent1, MailingError> {
    if !check_compatible(f) {
        return Err(MailingError::Incompatible);
    }
    let n = f.instance().n();
    let m = n * n;
    let mut raw = Vec::new();
    for lp in f.paths() {
        let (i, j) = lp.commodity;
        let mut coef = vec![0.0; m];
        coef[i * n + j] = 1.0;
        for seg in lp.path.segments() {
            raw.push((seg, coef.clone()));
        }
    }
    let t = PolyCurrent1::new(m, Ring::Integer, raw)?;
    debug_assert_eq!(boundary(&t), build_boundary_mailing(f.instance()));
    Ok(t)
}

/// A family recovered from a current, with the total length of the cycles
/// that the per-channel decomposition had to drop.
#[derive(Clone, Debug)]
pub struct RecoveredFamily {
    pub family: PathFamily,
    pub dropped_cycle_length: f64,
}

/// Decomposes each channel of an integer current with the instance boundary
/// into simple paths, yielding a compatible family. Cycles carry no boundary
/// and are dropped; their total length is reported.
pub fn current_to_family(
    t: &PolyCurrent1,
    inst: &MailingInstance,
    ord: &PairOrdering,
) -> Result<RecoveredFamily, MailingError> {
    let n = inst.n();
    if t.m() != n * n {
        return Err(MailingError::Current(CurrentError::DimensionMismatch(t.m(), n * n)));
    }
    if !ord.matches(inst) {
        return Err(MailingError::Current(CurrentError::OrderingMismatch));
    }
    if boundary(t) != build_boundary_mailing(inst) {
        return Err(MailingError::Current(CurrentError::BoundaryMismatch));
    }
    let mut paths = Vec::new();
    let mut dropped = 0.0;
    for &(i, j) in ord.pairs() {
        if inst.g(i, j) == 0 {
            continue;
        }
        let chan = t.channel(i * n + j);
        let dec = decompose_component(&chan)?;
        dropped += dec.cycle_length();
        for path in dec.paths {
            paths.push(LabeledPath { commodity: (i, j), path });
        }
    }
    let family = PathFamily::new(paths, inst.clone())?;
    debug_assert!(check_compatible(&family));
    Ok(RecoveredFamily { family, dropped_cycle_length: dropped })
}

/// Per-channel aligned/anti-aligned counts on one atom, recomputed
/// independently of [`theta_pm`]; used to validate the splitting identity.
pub fn channel_counts_on_atom(
    f: &PathFamily,
    atom: &Segment,
) -> Vec<((usize, usize), u32, u32)> {
    let mut out: Vec<((usize, usize), u32, u32)> = Vec::new();
    for lp in f.paths() {
        for seg in lp.path.segments() {
            // the atom is covered by this segment iff both endpoints lie on it
            let ta = seg.param_of(atom.a());
            let tb = seg.param_of(atom.b());
            if let (Some(ta), Some(tb)) = (ta, tb) {
                let aligned = tb > ta;
                let entry = out.iter_mut().find(|(c, _, _)| *c == lp.commodity);
                let entry = match entry {
                    Some(e) => e,
                    None => {
                        out.push((lp.commodity, 0, 0));
                        out.last_mut().unwrap()
                    }
                };
                if aligned {
                    entry.1 += 1;
                } else {
                    entry.2 += 1;
                }
            }
        }
    }
    out
}
