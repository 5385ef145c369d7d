//! Independent verification path for every witness estimate.
//!
//! Instead of covariance matrices, each round samples a phase-space point
//! per input mode directly from its Wigner distribution and pushes the
//! scalars through explicit input–output relations: balanced-splitter sums,
//! `√η`-losses with fresh vacuum draws, `√ν`-gains with idler draws, and
//! phase rotations of the sampled points. This is exact here because every
//! state involved is Gaussian with a positive Wigner function and only
//! commuting quadratures are read out in a given round, so the joint
//! outcome distribution *is* the sampled phase-space marginal.
//!
//! The module deliberately shares no linear-algebra code with the engine;
//! only the random-stream abstraction, [`PriorSpec`], and the configuration
//! and estimate types are shared. Disagreement between this path and
//! [`crate::protocols`] flags a modeling bug in one of them.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::bounds;
use crate::protocols::{EwConfig, JointConvention, MemoryConfig, ProtocolError, WitnessEstimate};
use crate::stream::{substream, STREAM_ALPHABET, STREAM_ORACLE};

const SQRT_2: f64 = std::f64::consts::SQRT_2;

fn normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    variance.sqrt() * z
}

fn rotate(x: f64, p: f64, theta: f64) -> (f64, f64) {
    let (s, c) = theta.sin_cos();
    (c * x + s * p, c * p - s * x)
}

/// One entanglement-witness round through the scalar relations; returns the
/// squared-error summand.
fn ew_round_summand<R: Rng + ?Sized>(
    cfg: &EwConfig,
    alpha: (f64, f64),
    beta: (f64, f64),
    rng: &mut R,
) -> f64 {
    let [t1, t2, t3] = if cfg.phase_var == [0.0; 3] {
        [0.0; 3]
    } else {
        [
            normal(rng, cfg.phase_var[0]),
            normal(rng, cfg.phase_var[1]),
            normal(rng, cfg.phase_var[2]),
        ]
    };

    // TMSV phase-space point from its squeezed joint combinations:
    // x_A−x_B and p_A+p_B have variance 2e^{−2r}; the orthogonal
    // combinations have 2e^{2r}.
    let wide = 2.0 * (2.0 * cfg.r).exp();
    let narrow = 2.0 * (-2.0 * cfg.r).exp();
    let sum_x = normal(rng, wide);
    let diff_x = normal(rng, narrow);
    let sum_p = normal(rng, narrow);
    let diff_p = normal(rng, wide);
    let (mut x_sa, mut p_sa) = (0.5 * (sum_x + diff_x), 0.5 * (sum_p + diff_p));
    let (mut x_sb, mut p_sb) = (0.5 * (sum_x - diff_x), 0.5 * (sum_p - diff_p));

    // Squeezer-squeezer jitter on mode A, then per-arm loss with fresh
    // vacuum, then the common TMSV-detector jitter.
    (x_sa, p_sa) = rotate(x_sa, p_sa, t3);
    x_sa = cfg.eta_a.sqrt() * x_sa + (1.0 - cfg.eta_a).sqrt() * normal(rng, 0.5);
    p_sa = cfg.eta_a.sqrt() * p_sa + (1.0 - cfg.eta_a).sqrt() * normal(rng, 0.5);
    x_sb = cfg.eta_b.sqrt() * x_sb + (1.0 - cfg.eta_b).sqrt() * normal(rng, 0.5);
    p_sb = cfg.eta_b.sqrt() * p_sb + (1.0 - cfg.eta_b).sqrt() * normal(rng, 0.5);
    (x_sa, p_sa) = rotate(x_sa, p_sa, t1);
    (x_sb, p_sb) = rotate(x_sb, p_sb, t1);

    // Trusted coherent inputs with the common coherent-detector jitter.
    let (mut x_ca, mut p_ca) = (
        SQRT_2 * alpha.0 + normal(rng, 0.5),
        SQRT_2 * alpha.1 + normal(rng, 0.5),
    );
    let (mut x_cb, mut p_cb) = (
        SQRT_2 * beta.0 + normal(rng, 0.5),
        SQRT_2 * beta.1 + normal(rng, 0.5),
    );
    (x_ca, p_ca) = rotate(x_ca, p_ca, t2);
    (x_cb, p_cb) = rotate(x_cb, p_cb, t2);

    // Station outputs and Eve's rescaling.
    let a1 = cfg.epsilon * (x_ca + x_sa) / SQRT_2;
    let a2 = cfg.epsilon * (p_ca - p_sa) / SQRT_2;
    let b1 = cfg.epsilon * (x_cb + x_sb) / SQRT_2;
    let b2 = cfg.epsilon * (p_cb - p_sb) / SQRT_2;

    let dx = a1 - b1 - (alpha.0 - beta.0);
    let dp = a2 + b2 - (alpha.1 + beta.1);
    dx * dx + dp * dp
}

/// One memory round through the scalar relations; returns the summand.
fn memory_round_summand<R: Rng + ?Sized>(
    cfg: &MemoryConfig,
    alpha: (f64, f64),
    beta: (f64, f64),
    rng: &mut R,
) -> f64 {
    let ge = (cfg.nu * cfg.eta).sqrt();
    let gl = (cfg.nu * (1.0 - cfg.eta)).sqrt();
    let gi = (cfg.nu - 1.0).sqrt();
    let env_var = 0.5 * (1.0 + cfg.xi);

    // Stored state through loss, environment, and the amplifier idler.
    let x_a = SQRT_2 * alpha.0 + normal(rng, 0.5);
    let p_a = SQRT_2 * alpha.1 + normal(rng, 0.5);
    let xa2 = ge * x_a + gl * normal(rng, env_var) + gi * normal(rng, 0.5);
    let pa2 = ge * p_a + gl * normal(rng, env_var) + gi * normal(rng, 0.5);

    // Amplitude-matched reference: mean scaled by √(ην), variance 1/2.
    let xb1 = ge * SQRT_2 * beta.0 + normal(rng, 0.5);
    let pb1 = ge * SQRT_2 * beta.1 + normal(rng, 0.5);

    let norm = SQRT_2 * ge;
    let (g_x, g_p, gamma_x, gamma_p) = match cfg.convention {
        JointConvention::SumX => (
            (xa2 + xb1) / norm,
            (pa2 - pb1) / norm,
            alpha.0 + beta.0,
            alpha.1 - beta.1,
        ),
        JointConvention::DifferenceX => (
            (xa2 - xb1) / norm,
            (pa2 + pb1) / norm,
            alpha.0 - beta.0,
            alpha.1 + beta.1,
        ),
    };
    let dx = g_x - gamma_x;
    let dp = g_p - gamma_p;
    dx * dx + dp * dp
}

fn mean_and_se(per_pair: &[f64]) -> (f64, f64) {
    let n = per_pair.len() as f64;
    let mean = per_pair.iter().sum::<f64>() / n;
    let ss = per_pair.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    (mean, (ss / (n - 1.0) / n).sqrt())
}

fn block_estimate<F>(
    n_alphabet: usize,
    n_copies: usize,
    seed: u64,
    prior_a: &bounds::PriorSpec,
    prior_b: &bounds::PriorSpec,
    violation_k: f64,
    summand: F,
) -> Result<WitnessEstimate, ProtocolError>
where
    F: Fn((f64, f64), (f64, f64), &mut rand_chacha::ChaCha12Rng) -> f64 + Sync,
{
    let report = bounds::locc_threshold(prior_a, prior_b)?;
    let mut alphabet = substream(seed, STREAM_ALPHABET, 0);
    let pairs: Vec<((f64, f64), (f64, f64))> = (0..n_alphabet)
        .map(|_| {
            (
                prior_a.sample_amplitude(&mut alphabet),
                prior_b.sample_amplitude(&mut alphabet),
            )
        })
        .collect();
    let per_pair: Vec<f64> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, &(alpha, beta))| {
            let mut rng = substream(seed, STREAM_ORACLE, i as u64);
            let mut sum = 0.0;
            for _ in 0..n_copies {
                sum += summand(alpha, beta, &mut rng);
            }
            sum / n_copies as f64
        })
        .collect();
    let (value, std_error) = mean_and_se(&per_pair);
    Ok(WitnessEstimate {
        value,
        std_error,
        threshold: report.threshold,
        sigma_star: report.sigma_star,
        violated: value + violation_k * std_error < report.threshold,
        n_total: n_alphabet * n_copies,
    })
}

/// Recompute the entanglement-witness estimand by phase-space sampling.
pub fn oracle_ew_witness(cfg: &EwConfig) -> Result<WitnessEstimate, ProtocolError> {
    cfg.validate()?;
    block_estimate(
        cfg.n_alphabet,
        cfg.n_copies,
        cfg.seed,
        &cfg.prior_a,
        &cfg.prior_b,
        cfg.violation_k,
        |alpha, beta, rng| ew_round_summand(cfg, alpha, beta, rng),
    )
}

/// Recompute the memory-witness estimand by phase-space sampling.
pub fn oracle_memory_witness(cfg: &MemoryConfig) -> Result<WitnessEstimate, ProtocolError> {
    cfg.validate()?;
    block_estimate(
        cfg.n_alphabet,
        cfg.n_copies,
        cfg.seed,
        &cfg.prior,
        &cfg.prior,
        cfg.violation_k,
        |alpha, beta, rng| memory_round_summand(cfg, alpha, beta, rng),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::{estimate_ew_witness, estimate_memory_witness};

    #[test]
    fn ew_oracle_boundary_values() {
        // Separable honest case: 2.
        let cfg = EwConfig::symmetric(0.0, 1.0, 1.0, 1.76, 300, 80, 7).unwrap();
        let est = oracle_ew_witness(&cfg).unwrap();
        assert!((est.value - 2.0).abs() < 3.0 * est.std_error, "{est:?}");

        // ε = 0: the witness is the prior variance of γ, 2σ*².
        let cfg = EwConfig::symmetric(0.0, 1.0, 0.0, 1.3, 600, 30, 8).unwrap();
        let est = oracle_ew_witness(&cfg).unwrap();
        assert!(
            (est.value - 2.0 * 1.3 * 1.3).abs() < 3.0 * est.std_error,
            "{est:?}"
        );
    }

    #[test]
    fn ew_oracle_agrees_with_engine() {
        for (k, &(r, eta, eps, sigma, pv)) in [
            (0.2, 0.8, 1.0, 3.0, [0.0; 3]),
            (0.3, 0.9, 1.0, 2.0, [0.01, 0.01, 0.01]),
            (0.1, 0.6, 0.5, 1.76, [0.0; 3]),
        ]
        .iter()
        .enumerate()
        {
            let mut cfg = EwConfig::symmetric(r, eta, eps, sigma, 300, 100, 900 + k as u64).unwrap();
            cfg.phase_var = pv;
            let engine = estimate_ew_witness(&cfg).unwrap();
            let oracle = oracle_ew_witness(&cfg).unwrap();
            let se = (engine.std_error.powi(2) + oracle.std_error.powi(2)).sqrt();
            assert!(
                (engine.value - oracle.value).abs() < 4.0 * se,
                "cfg {k}: engine {} oracle {} se {se}",
                engine.value,
                oracle.value
            );
            // Both should also sit on the closed form.
            let expect = cfg.expected_witness();
            assert!((oracle.value - expect).abs() < 4.0 * oracle.std_error);
        }
    }

    #[test]
    fn memory_oracle_values_and_gain_invariance() {
        // Identity channel: analytically 1.
        let cfg = MemoryConfig::new(1.0, 0.0, 1.0, 2.0, 300, 60, 11).unwrap();
        let est = oracle_memory_witness(&cfg).unwrap();
        assert!((est.value - 1.0).abs() < 3.0 * est.std_error);

        // η = 0.8 at gains below and above ην = 1.
        for nu in [1.0, 2.0] {
            let cfg = MemoryConfig::new(0.8, 0.0, nu, 2.0, 300, 60, 12).unwrap();
            let est = oracle_memory_witness(&cfg).unwrap();
            assert!(
                (est.value - 1.25).abs() < 3.0 * est.std_error,
                "nu={nu}: {est:?}"
            );
        }
    }

    #[test]
    fn memory_oracle_arbitrates_cross_term_sign() {
        let cfg = MemoryConfig::new(0.8, 0.2, 1.5, 2.0, 500, 400, 13).unwrap();
        let est = oracle_memory_witness(&cfg).unwrap();
        let plus = bounds::memory_witness_expected(0.8, 0.2, bounds::CrossTermSign::Plus).unwrap();
        let minus =
            bounds::memory_witness_expected(0.8, 0.2, bounds::CrossTermSign::Minus).unwrap();
        assert!((est.value - minus).abs() < 4.0 * est.std_error, "{est:?}");
        assert!((est.value - plus).abs() > 6.0 * est.std_error, "{est:?}");

        let engine = estimate_memory_witness(&cfg).unwrap();
        let se = (engine.std_error.powi(2) + est.std_error.powi(2)).sqrt();
        assert!((engine.value - est.value).abs() < 4.0 * se);
    }

    #[test]
    fn block_means_are_exchangeable() {
        // Permuting pair blocks moves the mean by at most rounding noise.
        let cfg = EwConfig::symmetric(0.2, 0.9, 1.0, 1.5, 64, 20, 17).unwrap();
        let mut alphabet = substream(cfg.seed, STREAM_ALPHABET, 0);
        let pairs: Vec<((f64, f64), (f64, f64))> = (0..cfg.n_alphabet)
            .map(|_| {
                (
                    cfg.prior_a.sample_amplitude(&mut alphabet),
                    cfg.prior_b.sample_amplitude(&mut alphabet),
                )
            })
            .collect();
        let mut per_pair: Vec<f64> = pairs
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| {
                let mut rng = substream(cfg.seed, STREAM_ORACLE, i as u64);
                (0..cfg.n_copies)
                    .map(|_| ew_round_summand(&cfg, a, b, &mut rng))
                    .sum::<f64>()
                    / cfg.n_copies as f64
            })
            .collect();
        let (forward, _) = mean_and_se(&per_pair);
        per_pair.reverse();
        let (backward, _) = mean_and_se(&per_pair);
        assert!((forward - backward).abs() < 1e-12);
    }
}
