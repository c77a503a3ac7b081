//! JSON representations of instances, currents, path families, forests, and
//! calibration certificates.
//!
//! Coordinates travel as exact rationals: the wire format accepts integers,
//! floats (converted exactly), or strings like `"3/2"`, and always emits
//! strings. Coefficient vectors are floats (integer-ring currents use
//! integral floats). Every `*_from_dto` runs the full model validation, so a
//! file that loads is a file whose invariants hold.

use crate::calibration::{
    CalibrationCell, CalibrationCertificate, CalibrationError, CalibrationReport, Verdict,
};
use crate::coefficients::{Alpha, CoeffError, CovectorMatrix, NormKind, NormSpec, PhiNorm};
use crate::currents::{
    AtomicMeasure0, CurrentError, MailingInstance, PolyCurrent1, Ring,
};
use crate::geometry::{
    rational_from_f64, rational_to_f64, GeometryError, Point, Polyline, Rational, Segment,
};
use crate::mailing::{LabeledPath, MailingError, PathFamily};
use crate::solvers::SolverConfig;
use crate::steiner::{Forest, PartitionedInstance, SteinerError};
use serde::{Deserialize, Serialize};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("cannot parse {0:?} as a rational number")]
    BadRational(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Coeff(#[from] CoeffError),
    #[error(transparent)]
    Current(#[from] CurrentError),
    #[error(transparent)]
    Mailing(#[from] MailingError),
    #[error(transparent)]
    Steiner(#[from] SteinerError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error("invalid file: {0}")]
    Invalid(String),
}

pub fn from_json_str<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, IoError> {
    Ok(serde_json::from_str(s)?)
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String, IoError> {
    Ok(serde_json::to_string_pretty(value)?)
}

// ---- rationals and points ----

/// Wire form of an exact rational: `3`, `1.5`, or `"3/2"`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum RationalDto {
    Int(i64),
    Float(f64),
    Text(String),
}

pub fn rational_from_dto(dto: &RationalDto) -> Result<Rational, IoError> {
    match dto {
        RationalDto::Int(n) => Ok(Rational::from_integer((*n).into())),
        RationalDto::Float(x) => {
            if x.is_finite() {
                Ok(rational_from_f64(*x))
            } else {
                Err(IoError::BadRational(x.to_string()))
            }
        }
        RationalDto::Text(s) => {
            Rational::from_str(s.trim()).map_err(|_| IoError::BadRational(s.clone()))
        }
    }
}

pub fn rational_to_dto(r: &Rational) -> RationalDto {
    RationalDto::Text(r.to_string())
}

pub fn point_from_dto(coords: &[RationalDto]) -> Result<Point, IoError> {
    let coords = coords.iter().map(rational_from_dto).collect::<Result<Vec<_>, _>>()?;
    Ok(Point::new(coords)?)
}

pub fn point_to_dto(p: &Point) -> Vec<RationalDto> {
    p.coords().iter().map(rational_to_dto).collect()
}

fn points_from_dto(points: &[Vec<RationalDto>]) -> Result<Vec<Point>, IoError> {
    points.iter().map(|c| point_from_dto(c)).collect()
}

fn points_to_dto(points: &[Point]) -> Vec<Vec<RationalDto>> {
    points.iter().map(point_to_dto).collect()
}

// ---- norms ----

/// Wire form of a φ choice: `"l1"`, `"linf"`, or `{"lr": 1.5}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum PhiDto {
    Named(PhiName),
    Lr { lr: f64 },
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum PhiName {
    L1,
    Linf,
}

pub fn phi_from_dto(dto: &PhiDto) -> Result<PhiNorm, IoError> {
    Ok(match dto {
        PhiDto::Named(PhiName::L1) => PhiNorm::L1,
        PhiDto::Named(PhiName::Linf) => PhiNorm::Linf,
        PhiDto::Lr { lr } => PhiNorm::lr(*lr)?,
    })
}

pub fn phi_to_dto(phi: &PhiNorm) -> PhiDto {
    match phi {
        PhiNorm::L1 => PhiDto::Named(PhiName::L1),
        PhiNorm::Linf => PhiDto::Named(PhiName::Linf),
        PhiNorm::Lr(r) => PhiDto::Lr { lr: *r },
    }
}

/// Wire form of a coefficient norm; the dimension `m` comes from context
/// (the instance or the object the norm is applied to).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormSpecDto {
    Linf,
    L1,
    PhiAlpha { phi: PhiDto, alpha: RationalDto },
}

pub fn norm_spec_from_dto(dto: &NormSpecDto, m: usize) -> Result<NormSpec, IoError> {
    Ok(match dto {
        NormSpecDto::Linf => NormSpec::linf(m),
        NormSpecDto::L1 => NormSpec::l1(m),
        NormSpecDto::PhiAlpha { phi, alpha } => {
            let a = rational_to_f64(&rational_from_dto(alpha)?);
            NormSpec::phi_alpha(phi_from_dto(phi)?, Alpha::new(a)?, m)
        }
    })
}

pub fn norm_spec_to_dto(spec: &NormSpec) -> NormSpecDto {
    match &spec.kind {
        NormKind::Linf => NormSpecDto::Linf,
        NormKind::L1 => NormSpecDto::L1,
        NormKind::PhiAlpha { phi, alpha } => NormSpecDto::PhiAlpha {
            phi: phi_to_dto(phi),
            alpha: RationalDto::Float(alpha.value()),
        },
    }
}

// ---- currents and measures ----

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum RingDto {
    Int,
    Real,
}

impl From<Ring> for RingDto {
    fn from(r: Ring) -> Self {
        match r {
            Ring::Integer => RingDto::Int,
            Ring::Real => RingDto::Real,
        }
    }
}

impl From<RingDto> for Ring {
    fn from(r: RingDto) -> Self {
        match r {
            RingDto::Int => Ring::Integer,
            RingDto::Real => Ring::Real,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CurrentAtomDto {
    pub a: Vec<RationalDto>,
    pub b: Vec<RationalDto>,
    pub coef: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CurrentDto {
    pub m: usize,
    pub ring: RingDto,
    pub atoms: Vec<CurrentAtomDto>,
}

pub fn current_from_dto(dto: &CurrentDto) -> Result<PolyCurrent1, IoError> {
    let raw = dto
        .atoms
        .iter()
        .map(|a| {
            let seg = Segment::new(point_from_dto(&a.a)?, point_from_dto(&a.b)?)?;
            Ok((seg, a.coef.clone()))
        })
        .collect::<Result<Vec<_>, IoError>>()?;
    Ok(PolyCurrent1::new(dto.m, dto.ring.into(), raw)?)
}

pub fn current_to_dto(t: &PolyCurrent1) -> CurrentDto {
    CurrentDto {
        m: t.m(),
        ring: t.ring().into(),
        atoms: t
            .atoms()
            .iter()
            .map(|a| CurrentAtomDto {
                a: point_to_dto(a.segment.a()),
                b: point_to_dto(a.segment.b()),
                coef: a.coef.clone(),
            })
            .collect(),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MeasureAtomDto {
    pub point: Vec<RationalDto>,
    pub coef: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MeasureDto {
    pub m: usize,
    pub atoms: Vec<MeasureAtomDto>,
}

pub fn measure_from_dto(dto: &MeasureDto) -> Result<AtomicMeasure0, IoError> {
    let raw = dto
        .atoms
        .iter()
        .map(|a| Ok((point_from_dto(&a.point)?, a.coef.clone())))
        .collect::<Result<Vec<_>, IoError>>()?;
    Ok(AtomicMeasure0::new(dto.m, raw)?)
}

pub fn measure_to_dto(b: &AtomicMeasure0) -> MeasureDto {
    MeasureDto {
        m: b.m(),
        atoms: b
            .atoms()
            .iter()
            .map(|(p, coef)| MeasureAtomDto { point: point_to_dto(p), coef: coef.clone() })
            .collect(),
    }
}

// ---- instances ----

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MailingInstanceDto {
    pub points: Vec<Vec<RationalDto>>,
    pub matrix: Vec<Vec<i64>>,
}

pub fn mailing_instance_from_dto(dto: &MailingInstanceDto) -> Result<MailingInstance, IoError> {
    let points = points_from_dto(&dto.points)?;
    let n = points.len();
    if dto.matrix.len() != n || dto.matrix.iter().any(|row| row.len() != n) {
        return Err(IoError::Invalid(format!(
            "demand matrix must be {n}×{n} to match the {n} points"
        )));
    }
    let flat: Vec<i64> = dto.matrix.iter().flatten().copied().collect();
    Ok(MailingInstance::new(points, flat)?)
}

pub fn mailing_instance_to_dto(inst: &MailingInstance) -> MailingInstanceDto {
    let n = inst.n();
    MailingInstanceDto {
        points: points_to_dto(inst.points()),
        matrix: (0..n).map(|i| (0..n).map(|j| inst.g(i, j)).collect()).collect(),
    }
}

/// A solvable instance file, dispatched on `"kind"`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InstanceFile {
    /// Route `matrix[i][j]` units from point i to point j, priced by the
    /// transport norm (defaults to φ = ℓ¹, α = 1/2). `max_steiner` extra
    /// branch points are allowed (default 2).
    Mailing {
        points: Vec<Vec<RationalDto>>,
        matrix: Vec<Vec<i64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        norm: Option<NormSpecDto>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_steiner: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        config: Option<SolverConfig>,
    },
    /// Connect every group of `partition` (0-based indices into `points`)
    /// by a forest of minimal total length.
    Steiner {
        points: Vec<Vec<RationalDto>>,
        partition: Vec<Vec<usize>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        config: Option<SolverConfig>,
    },
}

pub fn steiner_instance_from_parts(
    points: &[Vec<RationalDto>],
    partition: &[Vec<usize>],
) -> Result<PartitionedInstance, IoError> {
    Ok(PartitionedInstance::new(points_from_dto(points)?, partition.to_vec())?)
}

// ---- families and forests ----

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PathDto {
    pub commodity: (usize, usize),
    pub vertices: Vec<Vec<RationalDto>>,
}

/// A labeled path family together with the instance it routes. The optional
/// norm selects the transport cost used when pricing the family (defaults to
/// φ = ℓ¹ with exponent 1/2).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FamilyFile {
    pub instance: MailingInstanceDto,
    pub paths: Vec<PathDto>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm: Option<NormSpecDto>,
}

pub fn family_from_dto(dto: &FamilyFile) -> Result<PathFamily, IoError> {
    let instance = mailing_instance_from_dto(&dto.instance)?;
    let paths = dto
        .paths
        .iter()
        .map(|p| {
            Ok(LabeledPath {
                commodity: p.commodity,
                path: Polyline::new(points_from_dto(&p.vertices)?)?,
            })
        })
        .collect::<Result<Vec<_>, IoError>>()?;
    Ok(PathFamily::new(paths, instance)?)
}

pub fn family_to_dto(f: &PathFamily) -> FamilyFile {
    FamilyFile {
        instance: mailing_instance_to_dto(f.instance()),
        paths: f
            .paths()
            .iter()
            .map(|p| PathDto {
                commodity: p.commodity,
                vertices: points_to_dto(p.path.vertices()),
            })
            .collect(),
        norm: None,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ForestDto {
    pub vertices: Vec<Vec<RationalDto>>,
    pub edges: Vec<(usize, usize)>,
}

pub fn forest_from_dto(dto: &ForestDto) -> Result<Forest, IoError> {
    Ok(Forest::new(points_from_dto(&dto.vertices)?, dto.edges.clone())?)
}

pub fn forest_to_dto(f: &Forest) -> ForestDto {
    ForestDto { vertices: points_to_dto(f.vertices()), edges: f.edges().to_vec() }
}

// ---- certificates and reports ----

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CellDto {
    pub polygon: Vec<Vec<RationalDto>>,
    /// Row-major d×m covector matrix.
    #[serde(rename = "W")]
    pub w: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CertificateFile {
    pub cells: Vec<CellDto>,
    pub norm: NormSpecDto,
}

pub fn certificate_from_dto(dto: &CertificateFile) -> Result<CalibrationCertificate, IoError> {
    let m = dto
        .cells
        .first()
        .and_then(|c| c.w.first())
        .map(Vec::len)
        .ok_or_else(|| {
            IoError::Invalid("certificate needs at least one cell with a nonempty W".into())
        })?;
    let cells = dto
        .cells
        .iter()
        .map(|c| {
            let w = CovectorMatrix::from_rows(&c.w)?;
            Ok(CalibrationCell::new(points_from_dto(&c.polygon)?, w)?)
        })
        .collect::<Result<Vec<_>, IoError>>()?;
    Ok(CalibrationCertificate::new(cells, norm_spec_from_dto(&dto.norm, m)?)?)
}

pub fn certificate_to_dto(cert: &CalibrationCertificate) -> CertificateFile {
    CertificateFile {
        cells: cert
            .cells()
            .iter()
            .map(|c| CellDto {
                polygon: points_to_dto(c.polygon()),
                w: (0..c.covector().d())
                    .map(|i| {
                        (0..c.covector().m()).map(|j| c.covector().column(j)[i]).collect()
                    })
                    .collect(),
            })
            .collect(),
        norm: norm_spec_to_dto(cert.norm()),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum VerdictDto {
    Calibrated,
    Violated { reason: String },
    Inconclusive { reason: String },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ReportDto {
    pub closed: bool,
    pub comass_bound: f64,
    pub comass_exact: bool,
    pub equality_max_violation: f64,
    pub verdict: VerdictDto,
}

pub fn report_to_dto(report: &CalibrationReport) -> ReportDto {
    ReportDto {
        closed: report.closed,
        comass_bound: report.comass.bound,
        comass_exact: report.comass.exact,
        equality_max_violation: report.equality_max_violation,
        verdict: match &report.verdict {
            Verdict::Calibrated => VerdictDto::Calibrated,
            Verdict::Violated(reason) => VerdictDto::Violated { reason: reason.clone() },
            Verdict::Inconclusive(reason) => {
                VerdictDto::Inconclusive { reason: reason.clone() }
            }
        },
    }
}

// ---- combined inputs and solver outputs ----

/// A current paired with the routing instance that interprets it. The
/// optional norm selects the transport cost, as in [`FamilyFile`].
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CurrentWithInstance {
    pub instance: MailingInstanceDto,
    pub current: CurrentDto,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm: Option<NormSpecDto>,
}

/// A forest paired with the grouped instance that interprets it.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ForestWithInstance {
    pub points: Vec<Vec<RationalDto>>,
    pub partition: Vec<Vec<usize>>,
    pub forest: ForestDto,
}

/// Support graph plus boundary for the real relaxation.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RelaxationFile {
    pub support: Vec<SegmentDto>,
    pub boundary: MeasureDto,
    pub norm: NormSpecDto,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<SolverConfig>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SegmentDto {
    pub a: Vec<RationalDto>,
    pub b: Vec<RationalDto>,
}

pub fn segment_from_dto(dto: &SegmentDto) -> Result<Segment, IoError> {
    Ok(Segment::new(point_from_dto(&dto.a)?, point_from_dto(&dto.b)?)?)
}

pub fn segment_to_dto(s: &Segment) -> SegmentDto {
    SegmentDto { a: point_to_dto(s.a()), b: point_to_dto(s.b()) }
}

/// Result envelope every solve/relax command emits.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SolveResultDto {
    pub kind: String,
    pub value: f64,
    pub enumerated: u64,
    pub best_rank: u64,
    pub residual: f64,
    pub current: CurrentDto,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forest: Option<ForestDto>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<GapDto>,
    pub config: SolverConfig,
}

/// Integer-versus-relaxed comparison attached to relaxation results.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GapDto {
    pub integer_value: f64,
    pub relaxed_value: f64,
    pub gap: f64,
}
