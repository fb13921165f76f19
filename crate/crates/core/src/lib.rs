//! Routing for compartmentalized trucks delivering orders of uncertain size.
//!
//! The crate covers the whole pipeline: instance data and replica expansion
//! ([`model`]), demand distributions ([`stochastics`]), expected-cost
//! evaluation ([`evaluation`]), savings construction ([`constructive`]),
//! iterated tabu search ([`tabu`]), exact and Monte Carlo cross-checks
//! ([`oracle`]) and file formats plus benchmark generation ([`io`]).

pub mod constructive;
pub mod datasets;
pub mod evaluation;
pub mod io;
pub mod loading;
pub mod model;
pub mod oracle;
pub mod stochastics;
pub mod tabu;

pub use evaluation::{evaluate, Evaluation, SearchKey};
pub use model::{Instance, Problem, Solution};
