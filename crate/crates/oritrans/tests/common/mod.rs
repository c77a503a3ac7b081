//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use oritrans::geometry::{Point, Segment};
use oritrans::steiner::PartitionedInstance;

/// Four unit-square corners with the two diagonals as groups. The minimal
/// connecting network routes both pairs through two interior branch points
/// and has total length 2 + 2√3.
pub fn square_diagonal_instance() -> PartitionedInstance {
    PartitionedInstance::new(
        vec![Point::xy(1, 1), Point::xy(-1, 1), Point::xy(-1, -1), Point::xy(1, -1)],
        vec![vec![0, 2], vec![1, 3]],
    )
    .expect("square instance is valid")
}

/// The four edges of the square [−1, 1]², the support on which real
/// coefficients can undercut every integer network.
pub fn square_edges() -> Vec<Segment> {
    let c = [Point::xy(1, 1), Point::xy(-1, 1), Point::xy(-1, -1), Point::xy(1, -1)];
    (0..4)
        .map(|i| Segment::new(c[i].clone(), c[(i + 1) % 4].clone()).expect("nonzero edge"))
        .collect()
}

/// Length of the optimal square network, 2 + 2√3.
pub fn square_optimum() -> f64 {
    2.0 + 12.0f64.sqrt()
}

/// Directory holding the bundled JSON fixtures.
pub fn data_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}
