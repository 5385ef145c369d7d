//! Full simulated rounds of the two MDI protocols.
//!
//! The entanglement-witness protocol builds
//! `coherent(α) ⊗ tmsv(r) ⊗ coherent(β)`, applies per-arm loss, sampled
//! phase noise and the two balanced station splitters, reads x on one port
//! and p on the other of each station, and rescales all four outcomes by
//! Eve's ε. The memory protocol stores `coherent(α)` in a lossy noisy
//! channel, amplifies, matches `coherent(β)` to it, and performs a CV Bell
//! measurement.
//!
//! Port and sign conventions are fixed once so that the honest (ε = 1,
//! noiseless) estimators are unbiased: `E[a₁−b₁] = αx−βx`,
//! `E[a₂+b₂] = αp+βp`, and for the memory by default `E[g_x] = αx+βx`,
//! `E[g_p] = αp−βp` (the [`JointConvention`] flag swaps the memory targets;
//! the witness value is convention-invariant).
//!
//! Estimates are averaged per alphabet pair; the standard error comes from
//! the between-pair variance of per-pair means, because rounds within a pair
//! share (α, β) and are not i.i.d. with respect to the prior. Pair blocks
//! run in parallel on deterministically derived substreams and merge in
//! block order, so results are bit-identical for any worker count.

use nalgebra::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::bounds::{self, BoundsError, CrossTermSign, PriorSpec};
use crate::gaussian::{
    GaussianError, GaussianState, Quadrature, QuadratureSampler, QuadratureSelection,
};
use crate::stream::{substream, STREAM_ALPHABET, STREAM_PHASE, STREAM_QUANTUM};

/// Complex coherent-state amplitude α = αx + iαp.
pub type Amplitude = Complex<f64>;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Gaussian(#[from] GaussianError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Which joint variables a memory run targets.
///
/// `SumX` reads x on the Bell sum port and p on the difference port,
/// estimating (αx+βx, αp−βp); `DifferenceX` swaps the readout, estimating
/// (αx−βx, αp+βp). For symmetric priors the witness value is identical.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JointConvention {
    #[default]
    SumX,
    DifferenceX,
}

/// Parameters of one entanglement-witness experiment.
#[derive(Debug, Clone)]
pub struct EwConfig {
    /// TMSV squeezing parameter.
    pub r: f64,
    /// Transmissivity of the arm carrying TMSV mode A.
    pub eta_a: f64,
    /// Transmissivity of the arm carrying TMSV mode B.
    pub eta_b: f64,
    pub prior_a: PriorSpec,
    pub prior_b: PriorSpec,
    /// Eve's common rescaling factor on all four outcomes (1 = honest).
    pub epsilon: f64,
    /// Gaussian phase-noise variances [Δ²θ₁, Δ²θ₂, Δ²θ₃] (rad²):
    /// TMSV–detector, coherent–detector, squeezer–squeezer.
    pub phase_var: [f64; 3],
    /// Number of distinct (α, β) pairs.
    pub n_alphabet: usize,
    /// Rounds per pair.
    pub n_copies: usize,
    pub seed: u64,
    /// Violation verdict margin in standard errors.
    pub violation_k: f64,
}

impl EwConfig {
    /// Symmetric-arm, symmetric-prior configuration with no phase noise.
    pub fn symmetric(
        r: f64,
        eta: f64,
        epsilon: f64,
        sigma: f64,
        n_alphabet: usize,
        n_copies: usize,
        seed: u64,
    ) -> Result<Self, ProtocolError> {
        let prior = PriorSpec::symmetric(sigma)?;
        let cfg = Self {
            r,
            eta_a: eta,
            eta_b: eta,
            prior_a: prior,
            prior_b: prior,
            epsilon,
            phase_var: [0.0; 3],
            n_alphabet,
            n_copies,
            seed,
            violation_k: 3.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if !(self.r >= 0.0) {
            return Err(GaussianError::InvalidSqueezing(self.r).into());
        }
        for eta in [self.eta_a, self.eta_b] {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(GaussianError::InvalidLoss(eta).into());
            }
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(ProtocolError::InvalidConfig(format!(
                "rescaling factor {} must be finite and >= 0",
                self.epsilon
            )));
        }
        for v in self.phase_var {
            if !(v >= 0.0) {
                return Err(BoundsError::InvalidPhaseVariance(v).into());
            }
        }
        if self.n_alphabet < 2 {
            return Err(ProtocolError::InvalidConfig(
                "n_alphabet must be >= 2 (the standard error is estimated across pairs)".into(),
            ));
        }
        if self.n_copies < 1 {
            return Err(ProtocolError::InvalidConfig("n_copies must be >= 1".into()));
        }
        if !(self.violation_k >= 0.0 && self.violation_k.is_finite()) {
            return Err(ProtocolError::InvalidConfig(format!(
                "violation_k {} must be finite and >= 0",
                self.violation_k
            )));
        }
        Ok(())
    }

    /// Exact expectation of the witness under this configuration
    /// (phase-noise-averaged, allowing unequal arms and asymmetric priors):
    ///
    /// `ε²[(η_A+η_B)cosh2r/2 + (2−η_A−η_B)/2 − √(η_Aη_B) sinh2r e^{−2Δ²θ₁−Δ²θ₃/2}]
    ///  + ε² + (Vx+Vp)(1 + ε² − 2ε e^{−Δ²θ₂/2})`
    ///
    /// with `Vx = Var(αx−βx)`, `Vp = Var(αp+βp)`. Reduces to
    /// [`bounds::phase_noise_error_expected`] for equal arms and symmetric
    /// priors, and to `2 + η(e^{−2r}−1)` for ε = 1 without phase noise.
    pub fn expected_witness(&self) -> f64 {
        let e2 = self.epsilon * self.epsilon;
        let cosh = (2.0 * self.r).cosh();
        let sinh = (2.0 * self.r).sinh();
        let damp = (-2.0 * self.phase_var[0] - 0.5 * self.phase_var[2]).exp();
        let tmsv = 0.5 * (self.eta_a + self.eta_b) * cosh
            + 0.5 * (2.0 - self.eta_a - self.eta_b)
            - (self.eta_a * self.eta_b).sqrt() * sinh * damp;
        let vx = 0.5
            * (self.prior_a.sigma_x() * self.prior_a.sigma_x()
                + self.prior_b.sigma_x() * self.prior_b.sigma_x());
        let vp = 0.5
            * (self.prior_a.sigma_p() * self.prior_a.sigma_p()
                + self.prior_b.sigma_p() * self.prior_b.sigma_p());
        let e_t2 = (-0.5 * self.phase_var[1]).exp();
        e2 * tmsv + e2 + (vx + vp) * (1.0 + e2 - 2.0 * self.epsilon * e_t2)
    }
}

/// Parameters of one memory-certification experiment.
#[derive(Debug, Clone)]
pub struct MemoryConfig {
    /// Memory transmissivity.
    pub eta: f64,
    /// Memory excess noise.
    pub xi: f64,
    /// Eve's amplifier gain on the released state.
    pub nu: f64,
    /// Shared prior for both preparations.
    pub prior: PriorSpec,
    pub convention: JointConvention,
    pub n_alphabet: usize,
    pub n_copies: usize,
    pub seed: u64,
    pub violation_k: f64,
}

impl MemoryConfig {
    pub fn new(
        eta: f64,
        xi: f64,
        nu: f64,
        sigma: f64,
        n_alphabet: usize,
        n_copies: usize,
        seed: u64,
    ) -> Result<Self, ProtocolError> {
        let cfg = Self {
            eta,
            xi,
            nu,
            prior: PriorSpec::symmetric(sigma)?,
            convention: JointConvention::SumX,
            n_alphabet,
            n_copies,
            seed,
            violation_k: 3.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(GaussianError::InvalidLoss(self.eta).into());
        }
        if !(self.xi >= 0.0) {
            return Err(GaussianError::InvalidExcessNoise(self.xi).into());
        }
        if !(self.nu >= 1.0 && self.nu.is_finite()) {
            return Err(GaussianError::InvalidGain(self.nu).into());
        }
        if self.n_alphabet < 2 {
            return Err(ProtocolError::InvalidConfig(
                "n_alphabet must be >= 2 (the standard error is estimated across pairs)".into(),
            ));
        }
        if self.n_copies < 1 {
            return Err(ProtocolError::InvalidConfig("n_copies must be >= 1".into()));
        }
        if !(self.violation_k >= 0.0 && self.violation_k.is_finite()) {
            return Err(ProtocolError::InvalidConfig(format!(
                "violation_k {} must be finite and >= 0",
                self.violation_k
            )));
        }
        Ok(())
    }

    /// Exact expectation of the memory witness under the channel model:
    /// `(2 + ξ − ηξ)/(2η)`, independent of ν, the prior, and the convention.
    pub fn expected_witness(&self) -> f64 {
        bounds::memory_witness_expected(self.eta, self.xi, CrossTermSign::Minus)
            .expect("validated config")
    }
}

/// A Monte Carlo witness value with its decision context.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessEstimate {
    /// Mean of the squared-error sum over all rounds.
    pub value: f64,
    /// Standard error of `value`, from the between-pair variance.
    pub std_error: f64,
    /// 1-LOCC certification threshold `2v(σ*, σ*)`.
    pub threshold: f64,
    /// Effective symmetric width.
    pub sigma_star: f64,
    /// Whether `value + k·std_error < threshold`.
    pub violated: bool,
    /// Total number of rounds.
    pub n_total: usize,
}

/// Result of a device-dependent Simon–Duan run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimonDuanEstimate {
    /// `Var(ε(x₁−x₂)) + Var(ε(p₁+p₂))` from the sampled rounds.
    pub value: f64,
    pub std_error: f64,
    pub n_rounds: usize,
}

/// Draw one (α, β) pair: each component `~ N(0, σ²/2)` so the quadrature
/// means `√2 α` have the prior variances `σ²`.
pub fn sample_pair<R: Rng + ?Sized>(
    prior_a: &PriorSpec,
    prior_b: &PriorSpec,
    rng: &mut R,
) -> (Amplitude, Amplitude) {
    let (ax, ap) = prior_a.sample_amplitude(rng);
    let (bx, bp) = prior_b.sample_amplitude(rng);
    (Complex::new(ax, ap), Complex::new(bx, bp))
}

fn ew_selection() -> QuadratureSelection {
    // (a1, a2, b1, b2): x on each station's TMSV-labeled port, p on the
    // coherent-labeled port.
    QuadratureSelection::new(vec![
        (1, Quadrature::X),
        (0, Quadrature::P),
        (2, Quadrature::X),
        (3, Quadrature::P),
    ])
    .expect("static selection")
}

/// Network state for one EW round at fixed phase-noise angles.
/// Modes: 0 = Alice's coherent, 1 = TMSV A, 2 = TMSV B, 3 = Bob's coherent.
fn build_ew_state(
    cfg: &EwConfig,
    alpha: Amplitude,
    beta: Amplitude,
    thetas: [f64; 3],
) -> Result<GaussianState, GaussianError> {
    let st = GaussianState::coherent(alpha)
        .tensor(&GaussianState::tmsv(cfg.r)?)
        .tensor(&GaussianState::coherent(beta));
    let st = st.phase(1, thetas[2])?; // squeezer-squeezer jitter, at the source
    let st = st.loss(1, cfg.eta_a, 0.0)?.loss(2, cfg.eta_b, 0.0)?;
    let st = st.phase(1, thetas[0])?.phase(2, thetas[0])?; // TMSV vs detectors
    let st = st.phase(0, thetas[1])?.phase(3, thetas[1])?; // coherent vs detectors
    st.beamsplitter(1, 0, 0.5)?.beamsplitter(2, 3, 0.5)
}

fn draw_phases<R: Rng + ?Sized>(phase_var: [f64; 3], rng: &mut R) -> [f64; 3] {
    if phase_var == [0.0; 3] {
        return [0.0; 3];
    }
    let mut out = [0.0; 3];
    for (o, v) in out.iter_mut().zip(phase_var) {
        let z: f64 = rng.sample(StandardNormal);
        *o = v.sqrt() * z;
    }
    out
}

/// One EW round: returns Eve's rescaled outcomes (a₁, a₂, b₁, b₂).
pub fn run_ew_round<R: Rng + ?Sized>(
    cfg: &EwConfig,
    alpha: Amplitude,
    beta: Amplitude,
    quantum: &mut R,
    phase: &mut R,
) -> Result<[f64; 4], ProtocolError> {
    let thetas = draw_phases(cfg.phase_var, phase);
    let state = build_ew_state(cfg, alpha, beta, thetas)?;
    let out = state.sample_quadratures(&ew_selection(), quantum)?;
    Ok([
        cfg.epsilon * out[0],
        cfg.epsilon * out[1],
        cfg.epsilon * out[2],
        cfg.epsilon * out[3],
    ])
}

fn ew_pair_mean(cfg: &EwConfig, index: u64, alpha: Amplitude, beta: Amplitude) -> Result<f64, ProtocolError> {
    let mut quantum = substream(cfg.seed, STREAM_QUANTUM, index);
    let gamma_x = alpha.re - beta.re;
    let gamma_p = alpha.im + beta.im;
    let mut sum = 0.0;
    if cfg.phase_var == [0.0; 3] {
        // Copies of one pair share the network state; only the quantum
        // noise is redrawn.
        let state = build_ew_state(cfg, alpha, beta, [0.0; 3])?;
        let sampler = QuadratureSampler::new(&state, &ew_selection())?;
        let mut out = [0.0; 4];
        for _ in 0..cfg.n_copies {
            sampler.draw(&mut quantum, &mut out);
            let dx = cfg.epsilon * (out[0] - out[2]) - gamma_x;
            let dp = cfg.epsilon * (out[1] + out[3]) - gamma_p;
            sum += dx * dx + dp * dp;
        }
    } else {
        let mut phase = substream(cfg.seed, STREAM_PHASE, index);
        for _ in 0..cfg.n_copies {
            let [a1, a2, b1, b2] = run_ew_round(cfg, alpha, beta, &mut quantum, &mut phase)?;
            let dx = a1 - b1 - gamma_x;
            let dp = a2 + b2 - gamma_p;
            sum += dx * dx + dp * dp;
        }
    }
    Ok(sum / cfg.n_copies as f64)
}

fn mean_and_se(per_pair: &[f64]) -> (f64, f64) {
    let n = per_pair.len() as f64;
    let mean = per_pair.iter().sum::<f64>() / n;
    let ss = per_pair.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    let se = (ss / (n - 1.0) / n).sqrt();
    (mean, se)
}

/// Monte Carlo estimate of the entanglement witness
/// `⟨(a₁−b₁−γx)² + (a₂+b₂−γp)²⟩` against the 1-LOCC threshold.
pub fn estimate_ew_witness(cfg: &EwConfig) -> Result<WitnessEstimate, ProtocolError> {
    cfg.validate()?;
    let report = bounds::locc_threshold(&cfg.prior_a, &cfg.prior_b)?;
    let mut alphabet = substream(cfg.seed, STREAM_ALPHABET, 0);
    let pairs: Vec<(Amplitude, Amplitude)> = (0..cfg.n_alphabet)
        .map(|_| sample_pair(&cfg.prior_a, &cfg.prior_b, &mut alphabet))
        .collect();
    let results: Vec<Result<f64, ProtocolError>> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, &(alpha, beta))| ew_pair_mean(cfg, i as u64, alpha, beta))
        .collect();
    let per_pair = results.into_iter().collect::<Result<Vec<f64>, _>>()?;
    let (value, std_error) = mean_and_se(&per_pair);
    Ok(WitnessEstimate {
        value,
        std_error,
        threshold: report.threshold,
        sigma_star: report.sigma_star,
        violated: value + cfg.violation_k * std_error < report.threshold,
        n_total: cfg.n_alphabet * cfg.n_copies,
    })
}

/// Memory-round network: mode 0 carries α through loss(η, ξ) then gain ν;
/// mode 1 carries β through the amplitude-matching channel (mean scaled by
/// √(ην), variance kept at 1/2); both meet on a balanced splitter.
fn build_memory_state(
    cfg: &MemoryConfig,
    alpha: Amplitude,
    beta: Amplitude,
) -> Result<GaussianState, GaussianError> {
    let stored = GaussianState::coherent(alpha)
        .loss(0, cfg.eta, cfg.xi)?
        .amplifier(0, cfg.nu)?;
    let g = cfg.eta * cfg.nu;
    let matched = if g <= 1.0 {
        GaussianState::coherent(beta).loss(0, g, 0.0)?
    } else {
        // Continuation of the matching channel beyond unit gain: the mean
        // scales by √(ην) while the variance stays 1/2, which keeps the
        // witness independent of ν.
        GaussianState::coherent(beta * g.sqrt())
    };
    stored.tensor(&matched).beamsplitter(0, 1, 0.5)
}

/// One memory round: returns the normalized Bell outcomes (g_x, g_p).
pub fn run_memory_round<R: Rng + ?Sized>(
    cfg: &MemoryConfig,
    alpha: Amplitude,
    beta: Amplitude,
    rng: &mut R,
) -> Result<(f64, f64), ProtocolError> {
    let state = build_memory_state(cfg, alpha, beta)?;
    let norm = 1.0 / (cfg.eta * cfg.nu).sqrt();
    let (sel, sx, sp) = memory_readout(cfg.convention);
    let out = state.sample_quadratures(&sel, rng)?;
    Ok((sx * norm * out[0], sp * norm * out[1]))
}

// Selection and signs per convention: SumX reads x on the sum port (mode 0)
// and p on the difference port (mode 1, negated); DifferenceX swaps ports.
fn memory_readout(convention: JointConvention) -> (QuadratureSelection, f64, f64) {
    match convention {
        JointConvention::SumX => (
            QuadratureSelection::new(vec![(0, Quadrature::X), (1, Quadrature::P)])
                .expect("static selection"),
            1.0,
            -1.0,
        ),
        JointConvention::DifferenceX => (
            QuadratureSelection::new(vec![(1, Quadrature::X), (0, Quadrature::P)])
                .expect("static selection"),
            -1.0,
            1.0,
        ),
    }
}

fn memory_targets(cfg: &MemoryConfig, alpha: Amplitude, beta: Amplitude) -> (f64, f64) {
    match cfg.convention {
        JointConvention::SumX => (alpha.re + beta.re, alpha.im - beta.im),
        JointConvention::DifferenceX => (alpha.re - beta.re, alpha.im + beta.im),
    }
}

fn memory_pair_mean(
    cfg: &MemoryConfig,
    index: u64,
    alpha: Amplitude,
    beta: Amplitude,
) -> Result<f64, ProtocolError> {
    let mut quantum = substream(cfg.seed, STREAM_QUANTUM, index);
    let (gamma_x, gamma_p) = memory_targets(cfg, alpha, beta);
    let state = build_memory_state(cfg, alpha, beta)?;
    let norm = 1.0 / (cfg.eta * cfg.nu).sqrt();
    let (sel, sx, sp) = memory_readout(cfg.convention);
    let sampler = QuadratureSampler::new(&state, &sel)?;
    let mut out = [0.0; 2];
    let mut sum = 0.0;
    for _ in 0..cfg.n_copies {
        sampler.draw(&mut quantum, &mut out);
        let dx = sx * norm * out[0] - gamma_x;
        let dp = sp * norm * out[1] - gamma_p;
        sum += dx * dx + dp * dp;
    }
    Ok(sum / cfg.n_copies as f64)
}

/// Monte Carlo estimate of the memory witness
/// `⟨(g_x−γx)² + (g_p−γp)²⟩` against the 1-LOCC threshold.
pub fn estimate_memory_witness(cfg: &MemoryConfig) -> Result<WitnessEstimate, ProtocolError> {
    cfg.validate()?;
    let report = bounds::locc_threshold(&cfg.prior, &cfg.prior)?;
    let mut alphabet = substream(cfg.seed, STREAM_ALPHABET, 0);
    let pairs: Vec<(Amplitude, Amplitude)> = (0..cfg.n_alphabet)
        .map(|_| sample_pair(&cfg.prior, &cfg.prior, &mut alphabet))
        .collect();
    let results: Vec<Result<f64, ProtocolError>> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, &(alpha, beta))| memory_pair_mean(cfg, i as u64, alpha, beta))
        .collect();
    let per_pair = results.into_iter().collect::<Result<Vec<f64>, _>>()?;
    let (value, std_error) = mean_and_se(&per_pair);
    Ok(WitnessEstimate {
        value,
        std_error,
        threshold: report.threshold,
        sigma_star: report.sigma_star,
        violated: value + cfg.violation_k * std_error < report.threshold,
        n_total: cfg.n_alphabet * cfg.n_copies,
    })
}

/// Device-dependent Simon–Duan witness on the lossy TMSV with rescaled
/// outcomes: direct joint x-homodyne of both modes in half the rounds, joint
/// p-homodyne in the other half; returns `Var(ε(x₁−x₂)) + Var(ε(p₁+p₂))`.
pub fn estimate_simon_duan<R: Rng + ?Sized>(
    r: f64,
    eta: f64,
    epsilon: f64,
    n_rounds: usize,
    rng: &mut R,
) -> Result<SimonDuanEstimate, ProtocolError> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(ProtocolError::InvalidConfig(format!(
            "rescaling factor {epsilon} must be finite and >= 0"
        )));
    }
    if n_rounds < 4 {
        return Err(ProtocolError::InvalidConfig(
            "n_rounds must be >= 4 to split between x and p sampling".into(),
        ));
    }
    let state = GaussianState::tmsv(r)?
        .loss(0, eta, 0.0)?
        .loss(1, eta, 0.0)?;
    let sel_x = QuadratureSelection::new(vec![(0, Quadrature::X), (1, Quadrature::X)]).unwrap();
    let sel_p = QuadratureSelection::new(vec![(0, Quadrature::P), (1, Quadrature::P)]).unwrap();

    let combo_variance = |sel: &QuadratureSelection, sign: f64, n: usize, rng: &mut R| {
        let sampler = QuadratureSampler::new(&state, sel).expect("physical state");
        let mut out = [0.0; 2];
        let (mut sum, mut sum2) = (0.0, 0.0);
        for _ in 0..n {
            sampler.draw(rng, &mut out);
            let u = epsilon * (out[0] + sign * out[1]);
            sum += u;
            sum2 += u * u;
        }
        let nf = n as f64;
        let var = (sum2 - sum * sum / nf) / (nf - 1.0);
        // Standard error of a Gaussian sample variance.
        let se = var * (2.0 / (nf - 1.0)).sqrt();
        (var, se)
    };

    let n_x = n_rounds / 2;
    let n_p = n_rounds - n_x;
    let (var_x, se_x) = combo_variance(&sel_x, -1.0, n_x, rng);
    let (var_p, se_p) = combo_variance(&sel_p, 1.0, n_p, rng);
    Ok(SimonDuanEstimate {
        value: var_x + var_p,
        std_error: (se_x * se_x + se_p * se_p).sqrt(),
        n_rounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::symmetric_threshold;
    use approx::assert_relative_eq;

    #[test]
    fn sample_pair_moments() {
        let pa = PriorSpec::new(1.4, 0.9).unwrap();
        let pb = PriorSpec::symmetric(2.2).unwrap();
        let mut rng = substream(5, "pair-moments", 0);
        let n = 100_000;
        let (mut sx, mut sx2, mut cross) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let (a, b) = sample_pair(&pa, &pb, &mut rng);
            sx += a.re;
            sx2 += a.re * a.re;
            cross += a.re * b.im;
        }
        let nf = n as f64;
        let var = sx2 / nf - (sx / nf) * (sx / nf);
        let want = 1.4 * 1.4 / 2.0;
        assert!((var - want).abs() < 4.0 * (2.0 / nf).sqrt() * want);
        // Independence across parties.
        let se_cross = (want * 2.2 * 2.2 / 2.0 / nf).sqrt();
        assert!((cross / nf).abs() < 4.0 * se_cross);

        // Degenerate prior pins the amplitudes at zero.
        let tiny = PriorSpec::symmetric(1e-9).unwrap();
        let (a, b) = sample_pair(&tiny, &tiny, &mut rng);
        assert!(a.norm() < 1e-7 && b.norm() < 1e-7);
    }

    #[test]
    fn ew_round_unbiased_and_vacuum_variance() {
        // r = 0, η = 1, ε = 1, α = β = 0: E[a1] = 0, Var(a1−b1) → 1.
        let cfg = EwConfig::symmetric(0.0, 1.0, 1.0, 1.0, 2, 1, 9).unwrap();
        let mut quantum = substream(9, "round", 0);
        let mut phase = substream(9, "round-phase", 0);
        let zero = Complex::new(0.0, 0.0);
        let n = 60_000;
        let (mut s1, mut sd, mut sd2) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let [a1, _, b1, _] = run_ew_round(&cfg, zero, zero, &mut quantum, &mut phase).unwrap();
            s1 += a1;
            let d = a1 - b1;
            sd += d;
            sd2 += d * d;
        }
        let nf = n as f64;
        assert!((s1 / nf).abs() < 4.0 * (0.5_f64 / nf).sqrt());
        let var = sd2 / nf - (sd / nf) * (sd / nf);
        assert!((var - 1.0).abs() < 4.0 * (2.0 / nf).sqrt());

        // Nonzero amplitudes: estimator means hit the joint targets.
        let alpha = Complex::new(0.8, -0.3);
        let beta = Complex::new(-0.5, 0.6);
        let (mut ex, mut ep) = (0.0, 0.0);
        for _ in 0..n {
            let [a1, a2, b1, b2] =
                run_ew_round(&cfg, alpha, beta, &mut quantum, &mut phase).unwrap();
            ex += a1 - b1;
            ep += a2 + b2;
        }
        let se = (1.0_f64 / nf).sqrt();
        assert!((ex / nf - (alpha.re - beta.re)).abs() < 4.0 * se);
        assert!((ep / nf - (alpha.im + beta.im)).abs() < 4.0 * se);

        // ε = 0 zeroes every outcome.
        let cfg0 = EwConfig {
            epsilon: 0.0,
            ..cfg.clone()
        };
        let out = run_ew_round(&cfg0, alpha, beta, &mut quantum, &mut phase).unwrap();
        assert_eq!(out, [0.0; 4]);
    }

    #[test]
    fn ew_estimate_matches_closed_forms() {
        // Separable boundary: r = 0 gives 2 and never violates.
        let cfg = EwConfig::symmetric(0.0, 1.0, 1.0, 1.76, 300, 80, 21).unwrap();
        let est = estimate_ew_witness(&cfg).unwrap();
        assert!((est.value - 2.0).abs() < 3.0 * est.std_error);
        assert!(!est.violated);
        assert_relative_eq!(est.threshold, symmetric_threshold(1.76), max_relative = 1e-12);

        // Lossy squeezed case against 2 + η(e^{−2r}−1).
        let cfg = EwConfig::symmetric(0.2, 0.8, 1.0, 3.0, 400, 100, 22).unwrap();
        let est = estimate_ew_witness(&cfg).unwrap();
        let expect = bounds::ew_expected(0.2, 0.8).unwrap();
        assert!(
            (est.value - expect).abs() < 3.0 * est.std_error,
            "{} vs {expect} (se {})",
            est.value,
            est.std_error
        );
        assert_relative_eq!(cfg.expected_witness(), expect, max_relative = 1e-12);

        // Optimal rescaling saturates its own closed form.
        let sigma = 1.3;
        let eps = bounds::epsilon_opt(sigma, 0.15);
        let cfg = EwConfig::symmetric(0.15, 1.0, eps, sigma, 400, 100, 23).unwrap();
        let est = estimate_ew_witness(&cfg).unwrap();
        let expect = bounds::rescaled_error_expected(eps, sigma, 0.15);
        assert!((est.value - expect).abs() < 3.0 * est.std_error);
    }

    #[test]
    fn ew_expected_witness_general_form_matches_symmetric_special_case() {
        for &(eps, r, eta, sigma, pv) in &[
            (1.0, 0.2, 0.8, 3.0, [0.0; 3]),
            (0.7, 0.4, 0.65, 1.2, [0.02, 0.01, 0.03]),
            (1.2, 0.0, 1.0, 0.8, [0.0, 0.05, 0.0]),
        ] {
            let mut cfg = EwConfig::symmetric(r, eta, eps, sigma, 2, 1, 0).unwrap();
            cfg.phase_var = pv;
            let general = cfg.expected_witness();
            let special =
                bounds::phase_noise_error_expected(eps, r, eta, pv, sigma).unwrap();
            assert_relative_eq!(general, special, max_relative = 1e-12);
        }
    }

    #[test]
    fn ew_estimate_with_phase_noise_matches_closed_form() {
        let mut cfg = EwConfig::symmetric(0.3, 0.9, 1.0, 2.0, 250, 80, 31).unwrap();
        cfg.phase_var = [0.01, 0.01, 0.01];
        let est = estimate_ew_witness(&cfg).unwrap();
        let expect =
            bounds::phase_noise_error_expected(1.0, 0.3, 0.9, [0.01, 0.01, 0.01], 2.0).unwrap();
        assert!(
            (est.value - expect).abs() < 4.0 * est.std_error,
            "{} vs {expect} (se {})",
            est.value,
            est.std_error
        );
    }

    #[test]
    fn estimates_are_deterministic_across_worker_counts() {
        let cfg = EwConfig::symmetric(0.25, 0.85, 0.9, 2.0, 60, 30, 77).unwrap();
        let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let pool4 = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = pool1.install(|| estimate_ew_witness(&cfg).unwrap());
        let b = pool4.install(|| estimate_ew_witness(&cfg).unwrap());
        let c = estimate_ew_witness(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);

        let mcfg = MemoryConfig::new(0.8, 0.1, 1.5, 2.0, 50, 40, 78).unwrap();
        let a = pool1.install(|| estimate_memory_witness(&mcfg).unwrap());
        let b = pool4.install(|| estimate_memory_witness(&mcfg).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn round_streams_are_reproducible() {
        let cfg = EwConfig::symmetric(0.4, 0.7, 1.1, 1.5, 2, 1, 5).unwrap();
        let a = Complex::new(0.2, 0.4);
        let b = Complex::new(-0.1, 0.3);
        let mut q1 = substream(5, STREAM_QUANTUM, 0);
        let mut p1 = substream(5, STREAM_PHASE, 0);
        let mut q2 = substream(5, STREAM_QUANTUM, 0);
        let mut p2 = substream(5, STREAM_PHASE, 0);
        for _ in 0..10 {
            let x = run_ew_round(&cfg, a, b, &mut q1, &mut p1).unwrap();
            let y = run_ew_round(&cfg, a, b, &mut q2, &mut p2).unwrap();
            assert_eq!(x, y);
        }
    }

    #[test]
    fn memory_round_unbiased() {
        let cfg = MemoryConfig::new(0.8, 0.0, 1.0, 1.0, 2, 1, 3).unwrap();
        let alpha = Complex::new(0.6, -0.2);
        let beta = Complex::new(-0.4, 0.5);
        let mut rng = substream(3, "memory-bias", 0);
        let n = 60_000;
        let (mut sx, mut sp) = (0.0, 0.0);
        for _ in 0..n {
            let (gx, gp) = run_memory_round(&cfg, alpha, beta, &mut rng).unwrap();
            sx += gx;
            sp += gp;
        }
        let nf = n as f64;
        let se = (1.0_f64 / nf).sqrt();
        assert!((sx / nf - (alpha.re + beta.re)).abs() < 5.0 * se);
        assert!((sp / nf - (alpha.im - beta.im)).abs() < 5.0 * se);
    }

    #[test]
    fn memory_estimate_matches_closed_form_and_is_gain_invariant() {
        // η = 1, ξ = 0, ν = 1: ideal memory sits at 1.
        let cfg = MemoryConfig::new(1.0, 0.0, 1.0, 2.0, 300, 80, 41).unwrap();
        let est = estimate_memory_witness(&cfg).unwrap();
        assert!((est.value - 1.0).abs() < 3.0 * est.std_error);

        // η = 0.8: 1.25, for gains on both sides of ην = 1.
        let mut values = Vec::new();
        for (k, nu) in [1.0, 1.5, 2.0, 4.0].into_iter().enumerate() {
            let cfg = MemoryConfig::new(0.8, 0.0, nu, 2.0, 300, 80, 50 + k as u64).unwrap();
            let est = estimate_memory_witness(&cfg).unwrap();
            assert!(
                (est.value - 1.25).abs() < 3.0 * est.std_error,
                "nu={nu}: {} (se {})",
                est.value,
                est.std_error
            );
            values.push(est);
        }
        for i in 0..values.len() {
            for j in (i + 1)..values.len() {
                let d = (values[i].value - values[j].value).abs();
                let se = (values[i].std_error.powi(2) + values[j].std_error.powi(2)).sqrt();
                assert!(d < 4.0 * se);
            }
        }

        // Excess noise follows the model value (2+ξ−ηξ)/(2η).
        let cfg = MemoryConfig::new(0.8, 0.2, 1.0, 2.0, 400, 100, 61).unwrap();
        let est = estimate_memory_witness(&cfg).unwrap();
        assert_relative_eq!(cfg.expected_witness(), 1.275, max_relative = 1e-12);
        assert!((est.value - 1.275).abs() < 3.0 * est.std_error);
    }

    #[test]
    fn memory_conventions_agree() {
        let mut cfg = MemoryConfig::new(0.8, 0.1, 1.2, 2.0, 250, 60, 71).unwrap();
        let sum = estimate_memory_witness(&cfg).unwrap();
        cfg.convention = JointConvention::DifferenceX;
        let diff = estimate_memory_witness(&cfg).unwrap();
        let se = (sum.std_error.powi(2) + diff.std_error.powi(2)).sqrt();
        assert!((sum.value - diff.value).abs() < 4.0 * se);
    }

    #[test]
    fn memory_detection_pattern_across_widths() {
        // Thresholds straddle 1.25: violations only where 2σ²/(1+σ²) > 1.25.
        for (sigma, expect) in [(1.0, false), (1.35, true), (2.0, true), (3.0, true)] {
            let cfg = MemoryConfig::new(0.8, 0.0, 1.0, sigma, 400, 120, 81).unwrap();
            let est = estimate_memory_witness(&cfg).unwrap();
            assert_eq!(est.violated, expect, "sigma={sigma}: {est:?}");
        }
    }

    #[test]
    fn simon_duan_values() {
        let mut rng = substream(13, "simon-duan", 0);
        // Vacuum, honest: 2.
        let est = estimate_simon_duan(0.0, 1.0, 1.0, 100_000, &mut rng).unwrap();
        assert!((est.value - 2.0).abs() < 3.0 * est.std_error);

        // Rescaled vacuum: false violation at 2ε² = 1.62.
        let est = estimate_simon_duan(0.0, 1.0, 0.9, 100_000, &mut rng).unwrap();
        assert!((est.value - 1.62).abs() < 3.0 * est.std_error);
        assert!(est.value < 2.0);

        // Lossy TMSV: direct homodyne sees 2(ηe^{−2r} + 1 − η).
        let est = estimate_simon_duan(0.5, 0.8, 1.0, 200_000, &mut rng).unwrap();
        let expect = 2.0 * (0.8 * (-1.0_f64).exp() + 0.2);
        assert_relative_eq!(expect, 0.98861279161558664, max_relative = 1e-14);
        assert!(
            (est.value - expect).abs() < 3.0 * est.std_error,
            "{} vs {expect}",
            est.value
        );
    }

    #[test]
    fn config_validation() {
        assert!(EwConfig::symmetric(-0.1, 1.0, 1.0, 1.0, 10, 10, 0).is_err());
        assert!(EwConfig::symmetric(0.1, 0.0, 1.0, 1.0, 10, 10, 0).is_err());
        assert!(EwConfig::symmetric(0.1, 1.0, -0.5, 1.0, 10, 10, 0).is_err());
        assert!(EwConfig::symmetric(0.1, 1.0, 1.0, 0.0, 10, 10, 0).is_err());
        assert!(EwConfig::symmetric(0.1, 1.0, 1.0, 1.0, 1, 10, 0).is_err());
        assert!(MemoryConfig::new(0.0, 0.0, 1.0, 1.0, 10, 10, 0).is_err());
        assert!(MemoryConfig::new(0.5, -0.1, 1.0, 1.0, 10, 10, 0).is_err());
        assert!(MemoryConfig::new(0.5, 0.1, 0.5, 1.0, 10, 10, 0).is_err());
    }
}
