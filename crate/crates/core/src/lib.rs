//! Commutativity algebra for second-order linear time-varying systems.
//!
//! Two cascaded systems commute when swapping their order leaves the overall
//! input-output map unchanged. For second-order LTV systems this is decided
//! by a small constant-coefficient algebra over the systems' coefficient
//! functions, with extra initial-state conditions in the unrelaxed case, and
//! the property is transitive across chains. This crate implements that
//! algebra end to end — pair synthesis, condition checking, inverse-direction
//! duality, constant composition, transitivity verdicts — and validates every
//! claim dynamically with a fixed-step cascade simulator.
//!
//! Modules:
//! - [`expr`]: closed-form time functions (parse, evaluate, differentiate,
//!   constancy tests).
//! - [`system`]: the second-order system model, JSON file I/O, and a
//!   generator for commutativity-eligible systems.
//! - [`commute`]: the pair/transitivity algebra and structured reports.
//! - [`sim`]: fixed-step Bogacki-Shampine cascade simulation with an RK4
//!   reference oracle and CSV export.

pub mod commute;
pub mod error;
pub mod expr;
pub mod grid;
pub mod sim;
pub mod system;

pub use error::{Error, Result};
pub use expr::{parse, CoeffExpr, DEFAULT_TOL};
pub use grid::TimeGrid;
pub use system::{InitialState, LTVSystem};
