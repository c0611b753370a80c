//! Finite Bayesian games, Bayesian games with intentions, and psychological
//! games, with exact arithmetic throughout.
//!
//! The modules build on each other bottom-up:
//!
//! - [`rational`], [`distribution`]: exact numbers and finite distributions.
//! - [`model`]: game models over type spaces and their validation.
//! - [`expr`]: the utility-expression language.
//! - [`equilibrium`]: expected utilities, best responses, equilibrium checks
//!   and exhaustive searches.
//! - [`hierarchy`]: finite-depth belief hierarchies extracted from types.
//! - [`psych`]: psychological games, their equilibria, and their embedding
//!   into games with intentions.
//! - [`format`]: the JSON file schema.

pub mod distribution;
pub mod equilibrium;
pub mod expr;
pub mod format;
pub mod hierarchy;
pub mod model;
pub mod psych;
pub mod rational;

pub use distribution::FiniteDistribution;
pub use expr::{parse_expr, UtilityExpr};
pub use model::{
    validate_model, GameKind, GameModel, Roster, Strategy, StrategyMode, TypeStrategyMap, Violation,
};
pub use rational::Rational;
