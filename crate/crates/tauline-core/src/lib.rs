//! Milestone-based survival analysis for nonproportional-hazards trials.
//!
//! A clinically prespecified milestone `m` splits each arm into long-term
//! survivors (event-free beyond `m`) and the susceptible subgroup. Treatment
//! effects are then summarized by two complementary components: the
//! long-term contrast `η_1(m) - η_0(m)` of milestone survival fractions, and
//! the short-term trajectory of the susceptible tau process `τ_a(t; m)`,
//! which tracks pairwise event-time ordering within the subgroup that fails
//! by the milestone. Supporting machinery covers Kaplan-Meier estimation,
//! overall tau and dRMST processes, stratified bootstrap inference,
//! reconstruction of pseudo individual-level data from digitized published
//! curves, Cox/Schoenfeld PH diagnostics, and a trial simulator with
//! analytic truth sheets for validation.
//!
//! The curve algebra ([`stepfn`], [`km`], [`milestone`], [`tau`], [`rmst`])
//! is generic over the scalar type via [`scalar::Real`]; the aliases below
//! pin the standard double-precision pipeline used by the data, inference,
//! and CLI layers.

pub mod bootstrap;
pub mod cox;
pub mod data;
pub mod error;
pub mod km;
pub mod milestone;
pub mod reconstruct;
pub mod rmst;
pub mod rng;
pub mod scalar;
pub mod sim;
pub mod stepfn;
pub mod tau;

pub use error::{Error, Result};

/// Double-precision step function.
pub type StepFn = stepfn::StepFunction<f64>;
/// Double-precision survival curve.
pub type SurvCurve = stepfn::SurvivalCurve<f64>;
/// Double-precision Kaplan-Meier estimate.
pub type Km = km::KmCurve<f64>;
/// Double-precision per-arm data view.
pub type Arm = data::ArmView<f64>;
/// Double-precision tau process.
pub type Tau = tau::TauCurve<f64>;
/// Double-precision dRMST process.
pub type Drmst = rmst::DrmstCurve<f64>;
