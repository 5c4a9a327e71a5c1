//! Pathwise calculus on cadlag paths, with no probability anywhere.
//!
//! The library computes, on explicitly represented deterministic paths:
//!
//! * quadratic variation along a refining partition sequence, with
//!   Skorokhod-distance convergence diagnostics, polarisation to matrix form
//!   and a continuous/jump decomposition ([`quadvar`]);
//! * pathwise integrals as limits of left Riemann sums, horizontal and
//!   vertical derivatives of causal functionals, and the change-of-variable
//!   formulas connecting them ([`integrate`], [`functional`]);
//! * the identities those formulas imply: a product rule for pathwise
//!   integrals, harmonic-functional representations, and fair-game probes
//!   ([`identities`]).
//!
//! Everything is numerically verifiable from the command line; see the
//! `pathwise-cli` crate and the book under `book/`.

pub mod error;
pub mod partition;
pub mod path;
pub mod report;
pub mod skorokhod;

pub mod functional;
pub mod identities;
pub mod integrate;
pub mod quadvar;

pub use error::{Error, Result};
pub use functional::{Functional, FunctionalClass};
pub use partition::{dyadic_sequence, Partition, PartitionSequence};
pub use path::{faber_schauder_path, CadlagPath};
pub use report::{ConvergenceReport, Verdict};
pub use skorokhod::skorokhod_distance;

// The book's code blocks run under `cargo test --doc`, one module per
// chapter so a failure names its origin.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            pub struct $name;
        };
    }
    chapter!(Introduction, "../../../book/src/introduction.md");
    chapter!(Partitions, "../../../book/src/partitions.md");
    chapter!(Paths, "../../../book/src/paths.md");
    chapter!(
        QuadraticVariation,
        "../../../book/src/quadratic-variation.md"
    );
    chapter!(Functionals, "../../../book/src/functionals.md");
    chapter!(Integration, "../../../book/src/integration.md");
    chapter!(Identities, "../../../book/src/identities.md");
    chapter!(CommandLine, "../../../book/src/cli.md");
}
