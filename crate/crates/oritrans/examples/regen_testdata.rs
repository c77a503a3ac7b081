//! Regenerates the JSON fixtures under `tests/data/`. Run from the crate
//! root with `cargo run --example regen_testdata`.
//!
//! The fixtures are a three-terminal branched network with its calibration
//! certificate (verdict CALIBRATED), the four-terminal square network with
//! two crossing demands, and a set of certificates that all fail against
//! that square network: the relaxation strictly undercuts it, so no
//! certificate for it can exist and every candidate must be rejected.

use std::fs;
use std::path::Path;

use oritrans::calibration::fermat_example;
use oritrans::geometry::Point;
use oritrans::io::{
    self, CellDto, CertificateFile, NormSpecDto, RationalDto,
};
use oritrans::steiner::{tree_to_current, Forest, PartitionedInstance};

fn write_json<T: serde::Serialize>(dir: &Path, name: &str, value: &T) {
    let path = dir.join(name);
    fs::write(&path, io::to_json_string(value).unwrap() + "\n").unwrap();
    println!("wrote {}", path.display());
}

fn square_cell(w_rows: [[f64; 2]; 2]) -> CellDto {
    let corner = |x: i64, y: i64| vec![RationalDto::Int(x), RationalDto::Int(y)];
    CellDto {
        polygon: vec![corner(-2, -2), corner(2, -2), corner(2, 2), corner(-2, 2)],
        w: w_rows.iter().map(|r| r.to_vec()).collect(),
    }
}

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data");
    fs::create_dir_all(&dir).unwrap();

    // Three terminals on the unit circle, their branched network, and the
    // certificate that calibrates it.
    let (_, fermat_current, fermat_cert) = fermat_example(40.0).unwrap();
    write_json(&dir, "fermat_current.json", &io::current_to_dto(&fermat_current));
    write_json(&dir, "fermat_certificate.json", &io::certificate_to_dto(&fermat_cert));

    // The square network joining the two diagonals through two branch
    // points at (±(1−1/√3), 0); total length 2+2√3.
    let inst = PartitionedInstance::new(
        vec![Point::xy(1, 1), Point::xy(-1, 1), Point::xy(-1, -1), Point::xy(1, -1)],
        vec![vec![0, 2], vec![1, 3]],
    )
    .unwrap();
    let x = 1.0 - 1.0 / 3.0f64.sqrt();
    let forest = Forest::new(
        vec![
            Point::xy(1, 1),
            Point::xy(-1, 1),
            Point::xy(-1, -1),
            Point::xy(1, -1),
            Point::from_f64(&[-x, 0.0]).unwrap(),
            Point::from_f64(&[x, 0.0]).unwrap(),
        ],
        vec![(2, 4), (1, 4), (4, 5), (5, 0), (5, 3)],
    )
    .unwrap();
    let square_current = tree_to_current(&forest, &inst).unwrap();
    write_json(&dir, "square_current.json", &io::current_to_dto(&square_current));

    let certs = dir.join("square_certificates");
    fs::create_dir_all(&certs).unwrap();
    let h = 3.0f64.sqrt() / 2.0;

    // The zero form: closed with comass 0, but pays nothing on the network.
    write_json(
        &certs,
        "zero_form.json",
        &CertificateFile {
            cells: vec![square_cell([[0.0, 0.0], [0.0, 0.0]])],
            norm: NormSpecDto::Linf,
        },
    );

    // Columns (1/2, √3/2) and (−1/2, √3/2): the unique-up-to-one-parameter
    // W that pays every atom of the square network exactly, with sup-norm
    // comass |w1 + w2| = √3 > 1.
    write_json(
        &certs,
        "equality_exact.json",
        &CertificateFile {
            cells: vec![square_cell([[0.5, -0.5], [h, h]])],
            norm: NormSpecDto::Linf,
        },
    );

    // The same form scaled by 1/√3: comass exactly 1, but every atom is now
    // underpaid by the same factor.
    write_json(
        &certs,
        "comass_scaled.json",
        &CertificateFile {
            cells: vec![square_cell([[0.5 / 3.0f64.sqrt(), -0.5 / 3.0f64.sqrt()], [0.5, 0.5]])],
            norm: NormSpecDto::Linf,
        },
    );

    // Two cells split at x = 0 with matching tangential traces (closed) but
    // a right-hand form of comass > 1.
    let left = CellDto {
        polygon: vec![
            vec![RationalDto::Int(-2), RationalDto::Int(-2)],
            vec![RationalDto::Int(0), RationalDto::Int(-2)],
            vec![RationalDto::Int(0), RationalDto::Int(2)],
            vec![RationalDto::Int(-2), RationalDto::Int(2)],
        ],
        w: vec![vec![0.5, -0.5], vec![h, h]],
    };
    let right = CellDto {
        polygon: vec![
            vec![RationalDto::Int(0), RationalDto::Int(-2)],
            vec![RationalDto::Int(2), RationalDto::Int(-2)],
            vec![RationalDto::Int(2), RationalDto::Int(2)],
            vec![RationalDto::Int(0), RationalDto::Int(2)],
        ],
        w: vec![vec![0.3, -0.7], vec![h, h]],
    };
    write_json(
        &certs,
        "two_cell.json",
        &CertificateFile { cells: vec![left, right], norm: NormSpecDto::Linf },
    );
}
