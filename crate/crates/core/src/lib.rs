//! Scenario-weighted risk measures.
//!
//! The crate is organised bottom-up:
//!
//! * [`types`] holds the small validated domain types (levels, weight
//!   vectors, per-scenario risk vectors, loss samples).
//! * [`measures`] evaluates single-scenario empirical measures: mean, VaR,
//!   Expected Shortfall and the rest of the ES quadrangle.
//! * [`wgrm`] aggregates per-scenario risk values with simplex weights,
//!   sup-representations over weight sets, density weightings, and checks
//!   the aggregation axioms of a black-box functional.
//! * [`quadrangle`] mixes per-scenario ES quartets into the multi-scenario
//!   quartet and verifies its defining relations.

pub mod error;
pub mod measures;
pub mod quadrangle;
pub mod sum;
pub mod types;
pub mod wgrm;

pub use error::{CoreError, Result};
pub use measures::{
    deviation_es, error_kb, es_alpha, es_quartet, expectation, regret_es, sort_ascending, var_alpha, EsQuartet,
};
pub use quadrangle::{
    mix_quartet, offsets_b, verify_identities, weighted_expectation, IdentityReport, WeightedQuartet,
};
pub use types::{Level, LossSample, RiskVector, Scenario, ScenarioSet, WeightVector};
