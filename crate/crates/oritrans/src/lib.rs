//! Oriented multi-commodity transport networks on polyhedral one-dimensional
//! supports.
//!
//! The crate models flows that route `g_ij` indivisible units from point
//! `p_i` to point `p_j` along oriented Lipschitz paths, together with the
//! vector-valued currents that encode such families, the concave transport
//! energies that price them, and a convex relaxation obtained by lifting the
//! coefficient ring to one coordinate per routed unit.
//!
//! Layout:
//! - [`geometry`]: exact rational points, segments, polylines, and the
//!   collinear-overlay decomposition every other module normalizes with.
//! - [`coefficients`]: the two-argument norms, the transport cost on signed
//!   multiplicity matrices, the lifted coefficient norm, its dual, and comass
//!   bounds for matrix-valued covectors.
//! - [`currents`]: polyhedral 1-currents with integer or real coefficient
//!   vectors, boundaries, mass, energy, boundary builders, per-channel path
//!   decomposition, cycle removal, and the lift into the relaxed ring.
//! - [`mailing`]: labeled path families, the multiplicity field they induce,
//!   family energy, and the equivalence between families and currents.
//! - [`steiner`]: grouped-terminal instances whose connectivity is forced by
//!   coefficient vectors, and the translation of forests into unit-norm
//!   currents.
//! - [`solvers`]: exhaustive desk-scale solvers (lattice oracles, tree
//!   topology search with position optimization, partitioned Steiner search,
//!   projected subgradient for the real relaxation).
//! - [`calibration`]: piecewise-constant matrix covectors on polygonal cell
//!   complexes and the closedness / comass / equality certificate checks.
//! - [`io`]: JSON instance and object (de)serialization shared by the CLI.
//! - [`render`]: SVG and CSV views of solutions.

pub mod calibration;
pub mod coefficients;
pub mod currents;
pub mod geometry;
pub mod io;
pub mod mailing;
pub mod render;
pub mod solvers;
pub mod steiner;
