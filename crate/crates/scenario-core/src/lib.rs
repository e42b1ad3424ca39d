//! Object-oriented scenario modeling for driving-scenario assessment.
//!
//! The crate models scenarios the way assessment pipelines consume them:
//!
//! * [`model`] — validated, immutable domain types: scenarios (quantitative)
//!   and scenario categories (qualitative), built from shared actors,
//!   activities, events, and physical elements.
//! * [`dynamics`] — the parametric activity models (sinusoidal, linear,
//!   constant) with exact closed-form evaluation and least-squares fitting.
//! * [`condition`] — the boolean DSL event conditions are written in.
//! * [`tags`] / [`matching`] — hierarchical tag trees, the
//!   category-comprises-scenario relation, category-includes-category
//!   subsumption, and tag-based library queries.
//! * [`sim`] — an event-driven executor that advances world state, localizes
//!   condition-triggered events by bisection, switches activities at mode
//!   transitions, and records traces.
//! * [`persist`] — the `.scn.json` file format with `$ref`-based reuse, the
//!   library index, and the bundled pedestrian-crossing fixtures.

pub mod condition;
pub mod dynamics;
pub mod matching;
pub mod model;
pub mod persist;
pub mod scalar;
pub mod sim;
pub mod tags;

pub use condition::ConditionExpr;
pub use model::{Scenario, ScenarioCategory, Uid, ValidationContext, ValidationReport};
pub use tags::{Tag, TagRegistry, TagTree};

/// Double-precision aliases for the generic closed-form models; the rest of
/// the crate works in `f64` throughout.
pub type Sinusoidal64 = dynamics::Sinusoidal<f64>;
pub type Linear64 = dynamics::Linear<f64>;
pub type Constant64 = dynamics::Constant<f64>;
