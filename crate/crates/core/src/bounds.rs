//! Closed-form estimation bounds, certification thresholds, and expected
//! witness values.
//!
//! All functions here are pure arithmetic on doubles; the Monte Carlo
//! machinery in [`crate::protocols`] and [`crate::oracle`] must reproduce
//! them, and the test suites enforce that. Detection predicates use strict
//! inequality: boundary equality does not certify.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("alphabet width {0} must be positive and finite")]
    InvalidWidth(f64),
    #[error("squeezing parameter {0} must be >= 0")]
    InvalidSqueezing(f64),
    #[error("transmissivity {0} must be in (0, 1]")]
    InvalidTransmissivity(f64),
    #[error("excess noise {0} must be >= 0")]
    InvalidExcessNoise(f64),
    #[error("phase-noise variance {0} must be >= 0")]
    InvalidPhaseVariance(f64),
    #[error("1-LOCC threshold {0} out of range (0, 2)")]
    ThresholdOutOfRange(f64),
    #[error("pump ratio {0} must be in [0, 1) (at or above threshold)")]
    InvalidPumpRatio(f64),
    #[error("frequency {0} must be positive")]
    InvalidFrequency(f64),
    #[error("efficiency {0} must be in (0, 1] (stage \"{1}\")")]
    InvalidEfficiency(f64, String),
    #[error("efficiency {0} must be in [0, 1]")]
    InvalidTotalEfficiency(f64),
}

/// Per-party Gaussian alphabet widths for trusted coherent-state preparation.
///
/// The widths parameterize the prior density
/// `P(α) ∝ exp(−αx²/σx² − αp²/σp²)`, i.e. the sampling rule is
/// `αx ~ N(0, σx²/2)` and `αp ~ N(0, σp²/2)`, so that the quadrature mean
/// `√2 αx` has variance `σx²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorSpec {
    sigma_x: f64,
    sigma_p: f64,
}

impl PriorSpec {
    pub fn new(sigma_x: f64, sigma_p: f64) -> Result<Self, BoundsError> {
        for s in [sigma_x, sigma_p] {
            if !(s > 0.0 && s.is_finite()) {
                return Err(BoundsError::InvalidWidth(s));
            }
        }
        Ok(Self { sigma_x, sigma_p })
    }

    /// Equal widths in both quadratures.
    pub fn symmetric(sigma: f64) -> Result<Self, BoundsError> {
        Self::new(sigma, sigma)
    }

    pub fn sigma_x(&self) -> f64 {
        self.sigma_x
    }

    pub fn sigma_p(&self) -> f64 {
        self.sigma_p
    }

    /// Draw one amplitude from the prior: `(N(0, σx²/2), N(0, σp²/2))`.
    pub fn sample_amplitude<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let half = std::f64::consts::FRAC_1_SQRT_2;
        let zx: f64 = rng.sample(rand_distr::StandardNormal);
        let zp: f64 = rng.sample(rand_distr::StandardNormal);
        (self.sigma_x * half * zx, self.sigma_p * half * zp)
    }
}

/// The 1-LOCC threshold for a pair of priors, with the effective width σ*.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    /// Minimum summed error for estimating Alice's coherent state alone.
    pub v_alice: f64,
    /// Same for Bob.
    pub v_bob: f64,
    /// 1-LOCC bound on the joint estimation error: `v_alice + v_bob`.
    pub threshold: f64,
    /// Symmetric width with the same threshold: `2 v(σ*, σ*) = threshold`.
    pub sigma_star: f64,
}

/// Minimum summed error `Err(αx) + Err(αp)` for estimating a coherent state
/// drawn from `prior`: `v(σx, σp) = (1 + 1/(2σx²) + 1/(2σp²))⁻¹`.
///
/// For σx = σp = σ this is `σ²/(1+σ²)`.
pub fn min_error_bound(prior: &PriorSpec) -> f64 {
    1.0 / (1.0 + 0.5 / (prior.sigma_x * prior.sigma_x) + 0.5 / (prior.sigma_p * prior.sigma_p))
}

/// 1-LOCC lower bound on `Err(γx) + Err(γp)` for the joint variables of two
/// independently drawn coherent states, and the equivalent symmetric width.
pub fn locc_threshold(
    prior_a: &PriorSpec,
    prior_b: &PriorSpec,
) -> Result<BoundReport, BoundsError> {
    let v_alice = min_error_bound(prior_a);
    let v_bob = min_error_bound(prior_b);
    let threshold = v_alice + v_bob;
    if !(threshold > 0.0 && threshold < 2.0) {
        return Err(BoundsError::ThresholdOutOfRange(threshold));
    }
    let sigma_star = (threshold / (2.0 - threshold)).sqrt();
    Ok(BoundReport {
        v_alice,
        v_bob,
        threshold,
        sigma_star,
    })
}

/// Threshold `2 v(σ, σ) = 2σ²/(1+σ²)` for symmetric identical priors.
pub fn symmetric_threshold(sigma: f64) -> f64 {
    2.0 * sigma * sigma / (1.0 + sigma * sigma)
}

/// Expected entanglement-witness value for a TMSV with squeezing `r` whose
/// arms both have transmissivity `eta`: `2 + η(e^{−2r} − 1)`.
pub fn ew_expected(r: f64, eta: f64) -> Result<f64, BoundsError> {
    if !(r >= 0.0) {
        return Err(BoundsError::InvalidSqueezing(r));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(BoundsError::InvalidTransmissivity(eta));
    }
    Ok(2.0 + eta * ((-2.0 * r).exp() - 1.0))
}

/// Whether the honest (ε = 1) witness certifies entanglement:
/// `η(1 − e^{−2r}) > 2/(1+σ²)`.
pub fn ew_detectable(r: f64, eta: f64, sigma: f64) -> Result<bool, BoundsError> {
    if !(sigma > 0.0) {
        return Err(BoundsError::InvalidWidth(sigma));
    }
    ew_expected(r, eta)?;
    Ok(eta * (1.0 - (-2.0 * r).exp()) > 2.0 / (1.0 + sigma * sigma))
}

/// Error seen by Alice and Bob when all four outcomes are rescaled by ε,
/// lossless and without phase noise:
/// `⟨E⟩(ε, σ*, r) = ε²e^{−2r} + ε² + 2(ε−1)²σ*²`.
pub fn rescaled_error_expected(epsilon: f64, sigma_star: f64, r: f64) -> f64 {
    let e2 = epsilon * epsilon;
    let d = epsilon - 1.0;
    e2 * (-2.0 * r).exp() + e2 + 2.0 * d * d * sigma_star * sigma_star
}

/// The rescaling factor minimizing [`rescaled_error_expected`]:
/// `ε_opt = 2σ*² / (2σ*² + e^{−2r} + 1)`.
pub fn epsilon_opt(sigma_star: f64, r: f64) -> f64 {
    let s2 = 2.0 * sigma_star * sigma_star;
    s2 / (s2 + (-2.0 * r).exp() + 1.0)
}

/// Device-dependent Simon–Duan witness of a rescaled separable vacuum:
/// `⟨EW⟩(ε) = 2ε²`, a false violation of the ≥ 2 bound for any ε < 1.
pub fn simon_duan_rescaled(epsilon: f64) -> f64 {
    2.0 * epsilon * epsilon
}

/// Sign of the η·ξ cross term in the memory-witness closed form.
///
/// The two published forms of the expectation differ in this sign; the
/// Monte Carlo oracle arbitrates which one the channel model actually
/// produces (`Minus`). `Plus` is the default reporting convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CrossTermSign {
    #[default]
    Plus,
    Minus,
}

/// Expected memory-witness value for a channel with transmissivity `eta` and
/// excess noise `xi`: `(2 + ξ ± ηξ) / (2η)`. Both variants equal `1/η` at
/// ξ = 0.
pub fn memory_witness_expected(eta: f64, xi: f64, sign: CrossTermSign) -> Result<f64, BoundsError> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(BoundsError::InvalidTransmissivity(eta));
    }
    if !(xi >= 0.0) {
        return Err(BoundsError::InvalidExcessNoise(xi));
    }
    let cross = match sign {
        CrossTermSign::Plus => eta * xi,
        CrossTermSign::Minus => -eta * xi,
    };
    Ok((2.0 + xi + cross) / (2.0 * eta))
}

/// Whether memory certification succeeds:
/// `memory_witness_expected < 2σ²/(1+σ²)`.
pub fn memory_detectable(
    eta: f64,
    xi: f64,
    sigma: f64,
    sign: CrossTermSign,
) -> Result<bool, BoundsError> {
    if !(sigma > 0.0) {
        return Err(BoundsError::InvalidWidth(sigma));
    }
    Ok(memory_witness_expected(eta, xi, sign)? < symmetric_threshold(sigma))
}

/// Gaussian-averaged witness error with phase noise.
///
/// `phase_var = [Δ²θ₁, Δ²θ₂, Δ²θ₃]` are the variances of the TMSV–detector,
/// coherent–detector, and squeezer–squeezer phase jitters. Arms share the
/// transmissivity `eta`; `sigma` is the symmetric prior width. Reduces to
/// the lossy rescaled error at zero variances.
pub fn phase_noise_error_expected(
    epsilon: f64,
    r: f64,
    eta: f64,
    phase_var: [f64; 3],
    sigma: f64,
) -> Result<f64, BoundsError> {
    if !(r >= 0.0) {
        return Err(BoundsError::InvalidSqueezing(r));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(BoundsError::InvalidTransmissivity(eta));
    }
    for v in phase_var {
        if !(v >= 0.0) {
            return Err(BoundsError::InvalidPhaseVariance(v));
        }
    }
    let e2 = epsilon * epsilon;
    let cosh = (2.0 * r).cosh();
    let sinh = (2.0 * r).sinh();
    let e_t1 = (-2.0 * phase_var[0]).exp();
    let e_t2 = (-0.5 * phase_var[1]).exp();
    let e_t3 = (-0.5 * phase_var[2]).exp();
    let tmsv_term = 0.5 * (1.0 + e_t1) * (cosh - e_t3 * sinh)
        + 0.5 * (1.0 - e_t1) * (cosh + e_t3 * sinh);
    Ok(e2 * eta * tmsv_term
        + (1.0 - eta) * e2
        + e2
        + 2.0 * sigma * sigma * (1.0 + e2 - 2.0 * epsilon * e_t2))
}

/// Below-threshold OPO output spectra at sideband `omega` (same units as the
/// cavity bandwidth `cavity_bw`), for pump power ratio `P/P_thr` and total
/// detection efficiency `eta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpoVariances {
    pub squeezed: f64,
    pub antisqueezed: f64,
}

/// Squeezed/antisqueezed quadrature variances of a below-threshold OPO.
///
/// With `ζ = Ω√(P/P_thr)`:
/// squeezed `= 1/2 − 2ηΩζ/((Ω+ζ)² + ω²)`,
/// antisqueezed `= 1/2 + 2ηΩζ/((Ω−ζ)² + ω²)`.
pub fn opo_variances(
    cavity_bw: f64,
    omega: f64,
    pump_ratio: f64,
    eta: f64,
) -> Result<OpoVariances, BoundsError> {
    if !(cavity_bw > 0.0) {
        return Err(BoundsError::InvalidFrequency(cavity_bw));
    }
    if !(omega > 0.0) {
        return Err(BoundsError::InvalidFrequency(omega));
    }
    if !(0.0..1.0).contains(&pump_ratio) {
        return Err(BoundsError::InvalidPumpRatio(pump_ratio));
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(BoundsError::InvalidTotalEfficiency(eta));
    }
    let zeta = cavity_bw * pump_ratio.sqrt();
    let num = 2.0 * eta * cavity_bw * zeta;
    let dm = cavity_bw + zeta;
    let dp = cavity_bw - zeta;
    Ok(OpoVariances {
        squeezed: 0.5 - num / (dm * dm + omega * omega),
        antisqueezed: 0.5 + num / (dp * dp + omega * omega),
    })
}

/// A multiplicative efficiency budget built from named stages.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyBudget {
    pub stages: Vec<(String, f64)>,
    pub total: f64,
}

/// Multiply named per-stage efficiencies (escape, fiber coupling,
/// transmission, diode, visibility², clearance, …) into a total.
pub fn efficiency_budget(stages: &[(&str, f64)]) -> Result<EfficiencyBudget, BoundsError> {
    let mut total = 1.0;
    let mut named = Vec::with_capacity(stages.len());
    for &(name, value) in stages {
        if !(value > 0.0 && value <= 1.0) {
            return Err(BoundsError::InvalidEfficiency(value, name.to_string()));
        }
        total *= value;
        named.push((name.to_string(), value));
    }
    Ok(EfficiencyBudget {
        stages: named,
        total,
    })
}
