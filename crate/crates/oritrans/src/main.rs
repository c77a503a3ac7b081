//! `oritrans` — command-line front end for oriented multi-commodity
//! transport networks: solve instances, verify calibration certificates,
//! convert between object representations, and solve the real-coefficient
//! relaxation over a fixed support.
//!
//! Exit codes: 0 success (or verdict CALIBRATED), 1 verdict VIOLATED,
//! 2 invalid or infeasible input, 3 solver budget exceeded, 4 verdict
//! INCONCLUSIVE.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use oritrans::calibration::{verify_calibration, CalibrationError, Verdict};
use oritrans::coefficients::{Alpha, CoeffError, NormKind, NormSpec, PhiNorm};
use oritrans::currents::{
    build_boundary_relaxed, energy_alpha_phi, lift_to_relaxed, mass, project_from_relaxed,
    CurrentError, PairOrdering,
};
use oritrans::geometry::{Point, Segment};
use oritrans::io::{
    self, CertificateFile, CurrentDto, CurrentWithInstance, FamilyFile, ForestWithInstance,
    GapDto, InstanceFile, IoError, MailingInstanceDto, NormSpecDto, RelaxationFile, SegmentDto,
    SolveResultDto,
};
use oritrans::mailing::{current_to_family, energy_family, family_to_current, MailingError};
use oritrans::render;
use oritrans::solvers::{
    solve_mailing_topology, solve_partitioned_steiner, solve_real_relaxation, SolveError,
    SolverConfig,
};
use oritrans::steiner::{build_boundary_steiner, tree_to_current, SteinerError};

const EXIT_OK: u8 = 0;
const EXIT_VIOLATED: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_BUDGET: u8 = 3;
const EXIT_INCONCLUSIVE: u8 = 4;

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error(transparent)]
    Coeff(#[from] CoeffError),
    #[error(transparent)]
    Current(#[from] CurrentError),
    #[error(transparent)]
    Mailing(#[from] MailingError),
    #[error(transparent)]
    Steiner(#[from] SteinerError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Solve(SolveError::BudgetExceeded(_)) => EXIT_BUDGET,
            _ => EXIT_INVALID,
        }
    }
}

/// Exact-arithmetic desk-scale toolkit for oriented multi-commodity
/// transport networks.
#[derive(Parser)]
#[command(name = "oritrans", version, about, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a routing or grouped-connection instance and print result JSON.
    Solve(SolveArgs),
    /// Check a piecewise-constant certificate against a candidate current.
    Verify(VerifyArgs),
    /// Convert between object representations, reporting values before and
    /// after.
    Convert(ConvertArgs),
    /// Solve the real-coefficient relaxation over a fixed segment support.
    Relax(RelaxArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Instance JSON file with `"kind": "mailing"` or `"kind": "steiner"`.
    instance: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
    /// Write an SVG drawing of the optimal network.
    #[arg(long, value_name = "FILE")]
    svg: Option<PathBuf>,
    /// Write a per-segment CSV table (length, units each way, cost).
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Certificate JSON file (cells with polygons and W matrices, plus norm).
    certificate: PathBuf,
    /// Candidate current JSON file (m, ring, atoms).
    current: PathBuf,
}

#[derive(Args)]
struct ConvertArgs {
    /// Input JSON file; its expected shape depends on `--to`.
    input: PathBuf,
    /// Target representation.
    #[arg(long, value_enum)]
    to: Direction,
}

#[derive(Args)]
struct RelaxArgs {
    /// Self-contained relaxation JSON (support + boundary + norm), or an
    /// instance JSON when SUPPORT is also given.
    input: PathBuf,
    /// Support segments JSON; the boundary and norm are then derived from
    /// INPUT, and the integer optimum is solved for a gap report.
    support: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    /// Write an SVG drawing of the relaxed current.
    #[arg(long, value_name = "FILE")]
    svg: Option<PathBuf>,
    /// Write a per-segment CSV table of the relaxed current.
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
}

/// Budget and tuning flags layered over the instance's solver config.
#[derive(Args, Clone, Copy, Default)]
struct Overrides {
    /// Cap on total routed units accepted by the exhaustive lattice search.
    #[arg(long, value_name = "N")]
    budget_units: Option<i64>,
    /// Cap on the lattice grid side length.
    #[arg(long, value_name = "N")]
    budget_grid: Option<i64>,
    /// Cap on terminals in branch-point topology search.
    #[arg(long, value_name = "N")]
    budget_terminals: Option<usize>,
    /// Cap on extra branch points per topology.
    #[arg(long, value_name = "N")]
    budget_steiner: Option<usize>,
    /// Cap on terminals of a grouped-connection instance.
    #[arg(long, value_name = "N")]
    budget_group_terminals: Option<usize>,
    /// Cap on enumerated candidates before giving up.
    #[arg(long, value_name = "N")]
    budget_enumeration: Option<u64>,
    /// Convergence tolerance for iterative refinement.
    #[arg(long, value_name = "EPS")]
    tol: Option<f64>,
    /// Base seed for randomized restarts.
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
}

impl Overrides {
    fn apply(&self, mut config: SolverConfig) -> SolverConfig {
        if let Some(v) = self.budget_units {
            config.max_total_units = v;
        }
        if let Some(v) = self.budget_grid {
            config.max_grid = v;
        }
        if let Some(v) = self.budget_terminals {
            config.max_terminals = v;
        }
        if let Some(v) = self.budget_steiner {
            config.max_steiner_budget = v;
        }
        if let Some(v) = self.budget_group_terminals {
            config.max_group_terminals = v;
        }
        if let Some(v) = self.budget_enumeration {
            config.max_enumeration = v;
        }
        if let Some(v) = self.tol {
            config.tol = v;
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        config
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Direction {
    /// Path family file → matrix-coefficient current.
    Current,
    /// Current-with-instance file → compatible path family (cycles dropped).
    Family,
    /// Matrix-coefficient current → one-coordinate-per-unit lifted current.
    Lift,
    /// Lifted current → matrix-coefficient current (block column sums).
    Project,
    /// Grouped forest → unit-coefficient current connecting its groups.
    TreeCurrent,
}

/// Envelope shared by all convert directions: the converted object plus the
/// transport value of the input and of the output.
#[derive(Serialize)]
struct ConvertOutput<T: Serialize> {
    direction: String,
    value_before: f64,
    value_after: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    dropped_cycle_length: Option<f64>,
    output: T,
}

/// Support segments, either wrapped in `{"support": [...]}` or a bare array.
#[derive(Deserialize)]
#[serde(untagged)]
enum SupportFile {
    Wrapped { support: Vec<SegmentDto> },
    Bare(Vec<SegmentDto>),
}

impl SupportFile {
    fn segments(&self) -> Result<Vec<Segment>, IoError> {
        let dtos = match self {
            SupportFile::Wrapped { support } => support,
            SupportFile::Bare(v) => v,
        };
        dtos.iter().map(io::segment_from_dto).collect()
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Convert(args) => cmd_convert(args),
        Command::Relax(args) => cmd_relax(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn read_to_string(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|source| CliError::Write { path: path.to_path_buf(), source })
}

fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    Ok(io::from_json_str(&read_to_string(path)?)?)
}

fn emit<T: Serialize>(value: &T) -> Result<(), CliError> {
    println!("{}", io::to_json_string(value)?);
    Ok(())
}

/// Resolves the optional norm of an instance or object file to the transport
/// cost it selects. Defaults to φ = ℓ¹ with exponent 1/2; the plain `l1` and
/// `linf` kinds act as those φ with exponent 1.
fn transport_cost(
    dto: Option<&NormSpecDto>,
    m: usize,
) -> Result<(PhiNorm, Alpha), CliError> {
    let Some(dto) = dto else {
        return Ok((PhiNorm::L1, Alpha::new(0.5)?));
    };
    let spec = io::norm_spec_from_dto(dto, m)?;
    Ok(match spec.kind {
        NormKind::PhiAlpha { phi, alpha } => (phi, alpha),
        NormKind::L1 => (PhiNorm::L1, Alpha::new(1.0)?),
        NormKind::Linf => (PhiNorm::Linf, Alpha::new(1.0)?),
    })
}

fn cmd_solve(args: SolveArgs) -> Result<u8, CliError> {
    let file: InstanceFile = load(&args.instance)?;
    match file {
        InstanceFile::Mailing { points, matrix, norm, max_steiner, config } => {
            let inst = io::mailing_instance_from_dto(&MailingInstanceDto { points, matrix })?;
            let config = args.overrides.apply(config.unwrap_or_default());
            let (phi, alpha) = transport_cost(norm.as_ref(), inst.n() * inst.n())?;
            let rep =
                solve_mailing_topology(&inst, &phi, alpha, max_steiner.unwrap_or(2), &config)?;
            let result = SolveResultDto {
                kind: "mailing".into(),
                value: rep.value,
                enumerated: rep.enumerated,
                best_rank: rep.best_rank,
                residual: rep.residual,
                current: io::current_to_dto(&rep.best),
                forest: None,
                gap: None,
                config: rep.config.clone(),
            };
            emit(&result)?;
            if let Some(path) = &args.svg {
                let spec = NormSpec::phi_alpha(phi.clone(), alpha, inst.n() * inst.n());
                write_file(path, &render::svg_current(&rep.best, &spec, inst.points()))?;
            }
            if let Some(path) = &args.csv {
                write_file(path, &render::csv_current(&rep.best, &phi, alpha))?;
            }
        }
        InstanceFile::Steiner { points, partition, config } => {
            let inst = io::steiner_instance_from_parts(&points, &partition)?;
            let config = args.overrides.apply(config.unwrap_or_default());
            let rep = solve_partitioned_steiner(&inst, &config)?;
            let result = SolveResultDto {
                kind: "steiner".into(),
                value: rep.value,
                enumerated: rep.enumerated,
                best_rank: rep.best_rank,
                residual: rep.residual,
                current: io::current_to_dto(&rep.best.current),
                forest: Some(io::forest_to_dto(&rep.best.forest)),
                gap: None,
                config: rep.config.clone(),
            };
            emit(&result)?;
            if let Some(path) = &args.svg {
                write_file(path, &render::svg_forest(&rep.best.forest, inst.points()))?;
            }
            if let Some(path) = &args.csv {
                let spec = NormSpec::linf(inst.m());
                write_file(path, &render::csv_mass(&rep.best.current, &spec)?)?;
            }
        }
    }
    Ok(EXIT_OK)
}

fn cmd_verify(args: VerifyArgs) -> Result<u8, CliError> {
    let cert_file: CertificateFile = load(&args.certificate)?;
    let cert = io::certificate_from_dto(&cert_file)?;
    let current_dto: CurrentDto = load(&args.current)?;
    let t = io::current_from_dto(&current_dto)?;
    let report = verify_calibration(&cert, &t)?;
    emit(&io::report_to_dto(&report))?;
    Ok(match report.verdict {
        Verdict::Calibrated => EXIT_OK,
        Verdict::Violated(_) => EXIT_VIOLATED,
        Verdict::Inconclusive(_) => EXIT_INCONCLUSIVE,
    })
}

fn cmd_convert(args: ConvertArgs) -> Result<u8, CliError> {
    let text = read_to_string(&args.input)?;
    match args.to {
        Direction::Current => {
            let file: FamilyFile = io::from_json_str(&text)?;
            let f = io::family_from_dto(&file)?;
            let n = f.instance().n();
            let (phi, alpha) = transport_cost(file.norm.as_ref(), n * n)?;
            let before = energy_family(&f, &phi, alpha)?;
            let t = family_to_current(&f)?;
            let after = energy_alpha_phi(&t, &phi, alpha)?;
            emit(&ConvertOutput {
                direction: "family-to-current".into(),
                value_before: before,
                value_after: after,
                dropped_cycle_length: None,
                output: CurrentWithInstance {
                    instance: file.instance.clone(),
                    current: io::current_to_dto(&t),
                    norm: file.norm.clone(),
                },
            })?;
        }
        Direction::Family => {
            let file: CurrentWithInstance = io::from_json_str(&text)?;
            let inst = io::mailing_instance_from_dto(&file.instance)?;
            let t = io::current_from_dto(&file.current)?;
            let (phi, alpha) = transport_cost(file.norm.as_ref(), inst.n() * inst.n())?;
            let ord = PairOrdering::row_major(&inst);
            let before = energy_alpha_phi(&t, &phi, alpha)?;
            let rec = current_to_family(&t, &inst, &ord)?;
            let after = energy_family(&rec.family, &phi, alpha)?;
            let mut out = io::family_to_dto(&rec.family);
            out.norm = file.norm.clone();
            emit(&ConvertOutput {
                direction: "current-to-family".into(),
                value_before: before,
                value_after: after,
                dropped_cycle_length: Some(rec.dropped_cycle_length),
                output: out,
            })?;
        }
        Direction::Lift => {
            let file: CurrentWithInstance = io::from_json_str(&text)?;
            let inst = io::mailing_instance_from_dto(&file.instance)?;
            let t = io::current_from_dto(&file.current)?;
            let (phi, alpha) = transport_cost(file.norm.as_ref(), inst.n() * inst.n())?;
            let ord = PairOrdering::row_major(&inst);
            let before = energy_alpha_phi(&t, &phi, alpha)?;
            let lifted = lift_to_relaxed(&t, &inst, &ord)?;
            let spec = NormSpec::phi_alpha(phi, alpha, ord.total());
            let after = mass(&lifted, &spec)?;
            emit(&ConvertOutput {
                direction: "current-to-lift".into(),
                value_before: before,
                value_after: after,
                dropped_cycle_length: None,
                output: io::current_to_dto(&lifted),
            })?;
        }
        Direction::Project => {
            let file: CurrentWithInstance = io::from_json_str(&text)?;
            let inst = io::mailing_instance_from_dto(&file.instance)?;
            let t = io::current_from_dto(&file.current)?;
            let (phi, alpha) = transport_cost(file.norm.as_ref(), inst.n() * inst.n())?;
            let ord = PairOrdering::row_major(&inst);
            let spec = NormSpec::phi_alpha(phi.clone(), alpha, ord.total());
            let before = mass(&t, &spec)?;
            let proj = project_from_relaxed(&t, &inst, &ord)?;
            let after = energy_alpha_phi(&proj, &phi, alpha)?;
            emit(&ConvertOutput {
                direction: "lift-to-current".into(),
                value_before: before,
                value_after: after,
                dropped_cycle_length: None,
                output: CurrentWithInstance {
                    instance: file.instance.clone(),
                    current: io::current_to_dto(&proj),
                    norm: file.norm.clone(),
                },
            })?;
        }
        Direction::TreeCurrent => {
            let file: ForestWithInstance = io::from_json_str(&text)?;
            let inst = io::steiner_instance_from_parts(&file.points, &file.partition)?;
            let forest = io::forest_from_dto(&file.forest)?;
            let before = forest.length();
            let t = tree_to_current(&forest, &inst)?;
            let after = mass(&t, &NormSpec::linf(inst.m()))?;
            emit(&ConvertOutput {
                direction: "forest-to-current".into(),
                value_before: before,
                value_after: after,
                dropped_cycle_length: None,
                output: io::current_to_dto(&t),
            })?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_relax(args: RelaxArgs) -> Result<u8, CliError> {
    let text = read_to_string(&args.input)?;
    let (support, boundary, spec, config, reference) = if let Some(sup_path) = &args.support {
        let sup: SupportFile = load(sup_path)?;
        let support = sup.segments()?;
        let file: InstanceFile = io::from_json_str(&text)?;
        match file {
            InstanceFile::Mailing { points, matrix, norm, max_steiner, config } => {
                let inst =
                    io::mailing_instance_from_dto(&MailingInstanceDto { points, matrix })?;
                let config = args.overrides.apply(config.unwrap_or_default());
                let (phi, alpha) = transport_cost(norm.as_ref(), inst.n() * inst.n())?;
                let ord = PairOrdering::row_major(&inst);
                let spec = NormSpec::phi_alpha(phi.clone(), alpha, ord.total());
                let boundary = build_boundary_relaxed(&inst, &ord)?;
                let reference = match solve_mailing_topology(
                    &inst,
                    &phi,
                    alpha,
                    max_steiner.unwrap_or(2),
                    &config,
                ) {
                    Ok(rep) => Some(rep.value),
                    Err(SolveError::BudgetExceeded(msg)) => {
                        eprintln!("note: integer reference skipped: {msg}");
                        None
                    }
                    Err(e) => return Err(e.into()),
                };
                (support, boundary, spec, config, reference)
            }
            InstanceFile::Steiner { points, partition, config } => {
                let inst = io::steiner_instance_from_parts(&points, &partition)?;
                let config = args.overrides.apply(config.unwrap_or_default());
                let spec = NormSpec::linf(inst.m());
                let boundary = build_boundary_steiner(&inst);
                let reference = match solve_partitioned_steiner(&inst, &config) {
                    Ok(rep) => Some(rep.value),
                    Err(SolveError::BudgetExceeded(msg)) => {
                        eprintln!("note: integer reference skipped: {msg}");
                        None
                    }
                    Err(e) => return Err(e.into()),
                };
                (support, boundary, spec, config, reference)
            }
        }
    } else {
        let file: RelaxationFile = io::from_json_str(&text)?;
        let support = file
            .support
            .iter()
            .map(io::segment_from_dto)
            .collect::<Result<Vec<_>, _>>()?;
        let boundary = io::measure_from_dto(&file.boundary)?;
        let spec = io::norm_spec_from_dto(&file.norm, boundary.m())?;
        let config = args.overrides.apply(file.config.unwrap_or_default());
        (support, boundary, spec, config, None)
    };

    let rep = solve_real_relaxation(&support, &boundary, &spec, config.tol, &config)?;
    let gap = reference.map(|integer_value| GapDto {
        integer_value,
        relaxed_value: rep.value,
        gap: integer_value - rep.value,
    });
    let result = SolveResultDto {
        kind: "relaxation".into(),
        value: rep.value,
        enumerated: rep.enumerated,
        best_rank: rep.best_rank,
        residual: rep.residual,
        current: io::current_to_dto(&rep.best),
        forest: None,
        gap,
        config: rep.config.clone(),
    };
    emit(&result)?;
    if let Some(path) = &args.svg {
        let marks: Vec<Point> = boundary.atoms().iter().map(|(p, _)| p.clone()).collect();
        write_file(path, &render::svg_current(&rep.best, &spec, &marks))?;
    }
    if let Some(path) = &args.csv {
        write_file(path, &render::csv_mass(&rep.best, &spec)?)?;
    }
    Ok(EXIT_OK)
}
