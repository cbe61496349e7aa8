//! Duty-aware wake decisions for a hibernating personal agent.
//!
//! * [`duty`]: duty records, the single-writer registry and its file store.
//! * [`signals`] and [`engine`]: the four wake signals, composite score, zones,
//!   threshold adaptation and the wake cycle.
//! * [`ace`]: the institution-to-agent message codec and discovery document.
//! * [`aria`]: classification and routing of inbound commercial mail.
//! * [`sim`]: seeded Monte Carlo comparison of reminder policies.
//! * [`gen`]: seeded generators of synthetic inputs.
//!
//! The scoring math is generic over [`Scalar`] (`f32`/`f64`); the aliases below
//! fix it to `f64` for the domain records.

pub mod ace;
pub mod aria;
pub mod canonical;
pub mod duty;
pub mod engine;
pub mod gen;
pub mod notify;
pub mod scalar;
pub mod signals;
pub mod sim;

pub use scalar::Scalar;

/// Scalar used by duty records and the wake cycle.
pub type Real = f64;
pub type TocParams = duty::TocParams<Real>;
pub use duty::DutyThresholds;
pub type SignalBreakdown = signals::SignalBreakdown<Real>;
pub type Weights = engine::Weights<Real>;
pub type ThresholdRule = engine::ThresholdRule<Real>;
