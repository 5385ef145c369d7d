//! Measurement-device-independent (MDI) certification of continuous-variable
//! quantum resources, at desk scale.
//!
//! The crate simulates two optical protocols in which untrusted detectors are
//! certified against a Bayesian estimation bound that only trusts the
//! preparation of coherent states:
//!
//! * **Entanglement witnessing** — a two-mode squeezed vacuum is mixed with
//!   trusted coherent states on balanced beam splitters and the summed
//!   estimation error of the joint quadrature variables is compared against
//!   the 1-LOCC threshold `2 v(σ*, σ*)`.
//! * **Memory certification** — a coherent state is stored in a lossy, noisy
//!   channel, released, and jointly measured with a later reference state in a
//!   CV Bell measurement; beating the same threshold refutes any
//!   measure-and-prepare (entanglement-breaking) model of the channel.
//!
//! Everything is Gaussian, so states are carried as mean vectors plus
//! covariance matrices ([`gaussian`]), every protocol has a closed-form
//! expectation ([`bounds`]), and every Monte Carlo estimate
//! ([`protocols`]) is cross-checked by a phase-space sampler that shares no
//! linear algebra with the engine ([`oracle`]).
//!
//! Conventions (used everywhere, without exception): ℏ = 1, quadrature
//! ordering `(x₁, p₁, …, xₙ, pₙ)`, vacuum variance 1/2, coherent-state mean
//! `⟨x̂⟩ = √2 αx`.

pub mod bounds;
pub mod gaussian;
pub mod oracle;
pub mod protocols;
pub mod stream;

pub use bounds::{BoundReport, CrossTermSign, EfficiencyBudget, OpoVariances, PriorSpec};
pub use gaussian::{GaussianState, Quadrature, QuadratureSelection};
pub use protocols::{
    EwConfig, JointConvention, MemoryConfig, SimonDuanEstimate, WitnessEstimate,
};
