//! Randomization-based inference for experiments that assign treatment by
//! independent Bernoulli trials with unit-varying probabilities.
//!
//! When every unit has its own treatment probability, permutation-test
//! machinery (which assumes exchangeable assignments) no longer applies.
//! This crate works directly with the assignment distribution instead:
//!
//! - **Exact tests** of sharp hypotheses by enumerating the support and
//!   weighting each assignment by its probability
//!   ([`inference::exact_p_value`]).
//! - **Monte-Carlo tests** when enumeration is out of reach: unbiased
//!   rejection sampling ([`inference::rejection_p_value`]) and
//!   self-normalized importance sampling from a uniform proposal over the
//!   conditioning set ([`inference::importance_p_value`]).
//! - **Conditional inference** on events of the realized assignment — the
//!   total treated count, per-stratum treated counts, or any predicate —
//!   expressed as an [`support::AcceptanceCriterion`].
//! - **Confidence intervals and point estimates** by inverting tests over
//!   a grid of hypothesized effects ([`inversion::invert_test`]).
//! - **A simulation bench** for validity and power studies over stratified
//!   populations ([`study::run_power_study`]).
//!
//! The `berntest` binary exposes the same engines over CSV study files;
//! see the `examples/` directory for the library walkthroughs.
//!
//! # A ten-minute tour
//!
//! ```
//! use berntest::{
//!     exact_p_value, MeanDifference, ObservedStudy, PropensityDesign,
//!     SharpHypothesis, Sidedness, SupportSpec,
//! };
//!
//! // Ten units, each with its own treatment probability.
//! let design = PropensityDesign::new(vec![
//!     0.9, 0.8, 0.5, 0.5, 0.7, 0.4, 0.6, 0.3, 0.1, 0.2,
//! ])?;
//! let w_obs = berntest::Assignment::from_indicators(&[0, 1, 1, 0, 0, 1, 1, 1, 0, 1]);
//! let y_obs = vec![-0.56, 0.26, 2.06, 0.07, 0.13, 2.22, 0.96, -0.77, -0.69, 0.05];
//! let study = ObservedStudy::new(design, w_obs, y_obs)?;
//!
//! // Exact two-sided test of the sharp null of no effect, conditioning on
//! // the assignment being nondegenerate (someone treated, someone not).
//! let report = exact_p_value(
//!     &study,
//!     &SharpHypothesis::sharp_null(),
//!     &MeanDifference,
//!     &SupportSpec::Nondegenerate,
//!     Sidedness::TwoSided,
//! )?;
//! assert!((report.p_value - 0.122).abs() < 0.001);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```
//!
//! # Determinism
//!
//! Every sampling engine takes either an explicit RNG or an
//! [`rng::RngStream`], a `(seed, stream)` pair that derives nested
//! substreams by index. Batch work is keyed by position, never by thread
//! schedule, so a fixed seed reproduces results bit-for-bit at any thread
//! count.

pub mod cli;
pub mod design;
pub mod inference;
pub mod numeric;
pub mod poisson_binomial;
pub mod rng;
pub mod inversion;
pub mod sampling;
pub mod study;
pub mod support;

pub use design::{
    Assignment, CovariateColumn, CovariateTable, CovariateValue, DesignError, PropensityDesign,
};
pub use inference::{
    exact_p_value, importance_p_value, rejection_p_value, InferenceError, MeanDifference, Method,
    ObservedStudy, PValueReport, RejectionOptions, SharpHypothesis, Sidedness, TestStatistic,
};
pub use inversion::{invert_test, InversionEngine, InversionResult, TauGrid};
pub use poisson_binomial::{poisson_binomial_pmf, poisson_binomial_pmf_all};
pub use rng::RngStream;
pub use sampling::{
    bernoulli_draw, rejection_sample, uniform_conditional_proposal, DrawBudget, SamplingError,
    UniformProposal,
};
pub use study::{run_power_study, run_rs_vs_is_study, SimConfig};
pub use support::{
    enumerate_support, support_normalizer, AcceptanceCriterion, CriterionClause, SupportError,
    SupportSpec,
};
