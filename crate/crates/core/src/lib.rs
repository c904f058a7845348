//! Exact computations with polynomial vector fields: brackets, truncated
//! subalgebras, centralizers, first cohomology and derivation solving.

pub mod derivations;
pub mod exactla;
pub mod poly;
pub mod random;
pub mod textio;
pub mod verify;
pub mod witt;

pub use derivations::{
    centralizer, h1_dimension, h1_report, solve_inner, stabilization_scan, submodule_closure, CohomologyReport,
    DerivationError, DerivationSpec, GeneratorFamily, InconsistencyCertificate, InnerSolution, ScanTask,
    StabilizationReport, SubspaceSpec, Trajectory, TruncatedDerivations,
};
pub use exactla::{RationalMatrix, SolveKind, SolveOutcome};
pub use poly::{Monomial, Polynomial, Rational, Var};
pub use textio::{parse_field, parse_polynomial, print_field, JsonCodec, JsonError, ParseError};
pub use witt::{bracket, BasisTerm, TruncationMode, TruncationWindow, VectorField, WittError};
