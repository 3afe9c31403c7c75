//! Uniform random generators for algebraic data types decorated with
//! numeric constraints.
//!
//! The pipeline for a constrained recursive type is:
//!
//! 1. [`dsl`] parses and validates the annotated declarations;
//! 2. [`oracle`] builds the combinatorial system of the type and tunes the
//!    Boltzmann parameter to a target size;
//! 3. [`shape`] samples a constructor skeleton in a size window;
//! 4. [`binder`] turns the skeleton's collected positions into a [`csp::Csp`];
//! 5. [`prt`] draws a uniform solution and [`binder`] fills it back in.

pub mod bench;
pub mod binder;
pub mod cli;
pub mod csp;
pub mod dsl;
pub mod oracle;
pub mod prt;
pub mod rng;
pub mod selftest;
pub mod shape;
pub mod stats;
pub mod value;
mod walk;

pub use binder::{check, collect_values, GenConfig, GenError, Generator};
pub use dsl::{parse_decls, validate, TypeSystem};
pub use rng::RandomStream;
pub use value::GenValue;
