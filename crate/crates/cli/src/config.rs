//! The JSON run-configuration format and its resolution into fully
//! parameterized points.
//!
//! One documented file format drives every subcommand; unknown keys are
//! rejected. `sweep` axes turn a single configuration into a cartesian grid
//! of parameter points (row-major in the listed axis order). All randomness
//! derives from the single `seed`.

use cvcert_core::bounds::{CrossTermSign, PriorSpec};
use cvcert_core::protocols::{EwConfig, JointConvention, MemoryConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolKind {
    Ew,
    Memory,
    SimonDuan,
}

impl ProtocolKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProtocolKind::Ew => "ew",
            ProtocolKind::Memory => "memory",
            ProtocolKind::SimonDuan => "simon-duan",
        }
    }
}

/// One sweep axis: `parameter` takes `steps` values from `min` to `max` on a
/// linear or log scale.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub parameter: String,
    pub min: f64,
    pub max: f64,
    pub steps: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<String>,
}

impl SweepAxis {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        if self.steps < 2 {
            return Err(CliError::Config(format!(
                "sweep axis \"{}\": steps must be >= 2, got {}",
                self.parameter, self.steps
            )));
        }
        let log = match self.scale.as_deref() {
            None | Some("linear") => false,
            Some("log") => true,
            Some(other) => {
                return Err(CliError::Config(format!(
                    "sweep axis \"{}\": scale must be \"linear\" or \"log\", got \"{other}\"",
                    self.parameter
                )))
            }
        };
        if log && !(self.min > 0.0 && self.max > 0.0) {
            return Err(CliError::Config(format!(
                "sweep axis \"{}\": log scale needs positive endpoints",
                self.parameter
            )));
        }
        let n = self.steps as usize;
        let vals = (0..n)
            .map(|k| {
                let t = k as f64 / (n - 1) as f64;
                if log {
                    self.min * (self.max / self.min).powf(t)
                } else {
                    self.min + (self.max - self.min) * t
                }
            })
            .collect();
        Ok(vals)
    }
}

/// The on-disk configuration. Exactly one `protocol`; parameter fields are
/// optional and validated per protocol. `sigma_star` is the symmetric
/// shorthand setting every alphabet width at once.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub protocol: String,
    pub seed: u64,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub violation_k: Option<f64>,

    // Batch structure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_alphabet: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_copies: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_rounds: Option<u64>,

    // Entanglement-witness parameters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_var_1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_var_2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_var_3: Option<f64>,

    // Alphabet widths: symmetric shorthand or explicit per party/quadrature.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_star: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_x_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_p_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_x_b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_p_b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_p: Option<f64>,

    // Memory parameters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convention: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<SweepAxis>>,

    // Region subcommand: optional Monte Carlo spot checks at grid cells.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_check_cells: Option<Vec<[u32; 2]>>,

    // Calibrate subcommand: rows of (V_IM, V_PM, measured αx, measured αp).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<[f64; 4]>>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| {
            CliError::Config(format!(
                "{} (line {}, column {})",
                e,
                e.line(),
                e.column()
            ))
        })
    }

    pub fn protocol_kind(&self) -> Result<ProtocolKind, CliError> {
        match self.protocol.as_str() {
            "ew" => Ok(ProtocolKind::Ew),
            "memory" => Ok(ProtocolKind::Memory),
            "simon-duan" => Ok(ProtocolKind::SimonDuan),
            other => Err(CliError::Config(format!(
                "protocol must be \"ew\", \"memory\" or \"simon-duan\", got \"{other}\""
            ))),
        }
    }

    fn convention(&self) -> Result<JointConvention, CliError> {
        match self.convention.as_deref() {
            None | Some("sum-x") => Ok(JointConvention::SumX),
            Some("difference-x") => Ok(JointConvention::DifferenceX),
            Some(other) => Err(CliError::Config(format!(
                "convention must be \"sum-x\" or \"difference-x\", got \"{other}\""
            ))),
        }
    }

    pub fn cross_term_sign(&self) -> Result<CrossTermSign, CliError> {
        match self.variant.as_deref() {
            None | Some("plus") => Ok(CrossTermSign::Plus),
            Some("minus") => Ok(CrossTermSign::Minus),
            Some(other) => Err(CliError::Config(format!(
                "variant must be \"plus\" or \"minus\", got \"{other}\""
            ))),
        }
    }

    fn require(&self, field: Option<f64>, name: &str) -> Result<f64, CliError> {
        field.ok_or_else(|| {
            CliError::Config(format!(
                "protocol \"{}\" requires field \"{name}\"",
                self.protocol
            ))
        })
    }

    /// Resolve into the base parameter point (before any sweep).
    pub fn base_point(&self) -> Result<ParamPoint, CliError> {
        let kind = self.protocol_kind()?;
        let violation_k = self.violation_k.unwrap_or(3.0);
        let n_alphabet = self.n_alphabet.unwrap_or(1000) as usize;
        let n_copies = self.n_copies.unwrap_or(100) as usize;
        let n_rounds = self.n_rounds.unwrap_or(100_000) as usize;

        let point = match kind {
            ProtocolKind::Ew => {
                let (eta_a, eta_b) = match (self.eta, self.eta_a, self.eta_b) {
                    (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                        return Err(CliError::Config(
                            "give either \"eta\" or \"eta_a\"/\"eta_b\", not both".into(),
                        ))
                    }
                    (Some(eta), None, None) => (eta, eta),
                    (None, Some(a), Some(b)) => (a, b),
                    _ => {
                        return Err(CliError::Config(
                            "protocol \"ew\" requires \"eta\" or both \"eta_a\" and \"eta_b\""
                                .into(),
                        ))
                    }
                };
                let widths = self.ew_widths()?;
                ParamPoint {
                    kind,
                    r: self.require(self.r, "r")?,
                    eta_a,
                    eta_b,
                    epsilon: self.epsilon.unwrap_or(1.0),
                    phase_var: [
                        self.phase_var_1.unwrap_or(0.0),
                        self.phase_var_2.unwrap_or(0.0),
                        self.phase_var_3.unwrap_or(0.0),
                    ],
                    widths,
                    eta: f64::NAN,
                    xi: 0.0,
                    nu: 1.0,
                    convention: JointConvention::SumX,
                    variant: self.cross_term_sign()?,
                    n_alphabet,
                    n_copies,
                    n_rounds,
                    seed: self.seed,
                    violation_k,
                }
            }
            ProtocolKind::Memory => {
                let widths = self.memory_widths()?;
                ParamPoint {
                    kind,
                    r: 0.0,
                    eta_a: f64::NAN,
                    eta_b: f64::NAN,
                    epsilon: 1.0,
                    phase_var: [0.0; 3],
                    widths,
                    eta: self.require(self.eta, "eta")?,
                    xi: self.xi.unwrap_or(0.0),
                    nu: self.nu.unwrap_or(1.0),
                    convention: self.convention()?,
                    variant: self.cross_term_sign()?,
                    n_alphabet,
                    n_copies,
                    n_rounds,
                    seed: self.seed,
                    violation_k,
                }
            }
            ProtocolKind::SimonDuan => ParamPoint {
                kind,
                r: self.require(self.r, "r")?,
                eta_a: f64::NAN,
                eta_b: f64::NAN,
                epsilon: self.epsilon.unwrap_or(1.0),
                phase_var: [0.0; 3],
                widths: [f64::NAN; 4],
                eta: self.require(self.eta, "eta")?,
                xi: 0.0,
                nu: 1.0,
                convention: JointConvention::SumX,
                variant: self.cross_term_sign()?,
                n_alphabet,
                n_copies,
                n_rounds,
                seed: self.seed,
                violation_k,
            },
        };
        Ok(point)
    }

    fn ew_widths(&self) -> Result<[f64; 4], CliError> {
        let explicit = [self.sigma_x_a, self.sigma_p_a, self.sigma_x_b, self.sigma_p_b];
        match (self.sigma_star, explicit) {
            (Some(_), e) if e.iter().any(Option::is_some) => Err(CliError::Config(
                "give either \"sigma_star\" or the four explicit widths, not both".into(),
            )),
            (Some(s), _) => Ok([s; 4]),
            (None, [Some(a), Some(b), Some(c), Some(d)]) => Ok([a, b, c, d]),
            _ => Err(CliError::Config(
                "protocol \"ew\" requires \"sigma_star\" or all of sigma_x_a, sigma_p_a, sigma_x_b, sigma_p_b".into(),
            )),
        }
    }

    fn memory_widths(&self) -> Result<[f64; 4], CliError> {
        match (self.sigma_star, self.sigma_x, self.sigma_p) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => Err(CliError::Config(
                "give either \"sigma_star\" or \"sigma_x\"/\"sigma_p\", not both".into(),
            )),
            (Some(s), None, None) => Ok([s; 4]),
            (None, Some(x), Some(p)) => Ok([x, p, x, p]),
            _ => Err(CliError::Config(
                "protocol \"memory\" requires \"sigma_star\" or both \"sigma_x\" and \"sigma_p\""
                    .into(),
            )),
        }
    }

    /// Cartesian product of sweep values, row-major in axis order.
    /// Returns (axes with resolved values, points).
    pub fn sweep_points(&self) -> Result<(Vec<(SweepAxis, Vec<f64>)>, Vec<ParamPoint>), CliError> {
        let base = self.base_point()?;
        let axes = self.sweep.clone().unwrap_or_default();
        let mut resolved = Vec::with_capacity(axes.len());
        for axis in &axes {
            base.check_parameter(&axis.parameter)?;
            resolved.push((axis.clone(), axis.values()?));
        }
        let mut points = vec![base];
        for (axis, values) in &resolved {
            let mut next = Vec::with_capacity(points.len() * values.len());
            for p in &points {
                for &v in values {
                    let mut q = p.clone();
                    q.set_parameter(&axis.parameter, v)?;
                    next.push(q);
                }
            }
            points = next;
        }
        Ok((resolved, points))
    }
}

/// A fully resolved parameter point for one estimate.
#[derive(Debug, Clone)]
pub struct ParamPoint {
    pub kind: ProtocolKind,
    pub r: f64,
    pub eta_a: f64,
    pub eta_b: f64,
    pub epsilon: f64,
    pub phase_var: [f64; 3],
    /// (σx_A, σp_A, σx_B, σp_B); for the memory protocol A and B hold the
    /// shared preparation prior.
    pub widths: [f64; 4],
    pub eta: f64,
    pub xi: f64,
    pub nu: f64,
    pub convention: JointConvention,
    pub variant: CrossTermSign,
    pub n_alphabet: usize,
    pub n_copies: usize,
    pub n_rounds: usize,
    pub seed: u64,
    pub violation_k: f64,
}

impl ParamPoint {
    /// Parameter names a sweep may reference for this protocol.
    pub fn sweepable(&self) -> &'static [&'static str] {
        match self.kind {
            ProtocolKind::Ew => &[
                "r",
                "eta",
                "eta_a",
                "eta_b",
                "epsilon",
                "sigma_star",
                "phase_var_1",
                "phase_var_2",
                "phase_var_3",
            ],
            ProtocolKind::Memory => &["eta", "xi", "nu", "sigma_star"],
            ProtocolKind::SimonDuan => &["r", "eta", "epsilon"],
        }
    }

    pub fn check_parameter(&self, name: &str) -> Result<(), CliError> {
        if self.sweepable().contains(&name) {
            Ok(())
        } else {
            Err(CliError::Config(format!(
                "parameter \"{name}\" is not sweepable for protocol \"{}\" (choose from {:?})",
                self.kind.name(),
                self.sweepable()
            )))
        }
    }

    pub fn set_parameter(&mut self, name: &str, value: f64) -> Result<(), CliError> {
        self.check_parameter(name)?;
        match name {
            "r" => self.r = value,
            "eta" if self.kind == ProtocolKind::Ew => {
                self.eta_a = value;
                self.eta_b = value;
            }
            "eta" => self.eta = value,
            "eta_a" => self.eta_a = value,
            "eta_b" => self.eta_b = value,
            "epsilon" => self.epsilon = value,
            "sigma_star" => self.widths = [value; 4],
            "phase_var_1" => self.phase_var[0] = value,
            "phase_var_2" => self.phase_var[1] = value,
            "phase_var_3" => self.phase_var[2] = value,
            "xi" => self.xi = value,
            "nu" => self.nu = value,
            other => {
                return Err(CliError::Internal(format!(
                    "unhandled sweep parameter \"{other}\""
                )))
            }
        }
        Ok(())
    }

    pub fn ew_config(&self) -> Result<EwConfig, CliError> {
        let prior_a = PriorSpec::new(self.widths[0], self.widths[1])?;
        let prior_b = PriorSpec::new(self.widths[2], self.widths[3])?;
        let cfg = EwConfig {
            r: self.r,
            eta_a: self.eta_a,
            eta_b: self.eta_b,
            prior_a,
            prior_b,
            epsilon: self.epsilon,
            phase_var: self.phase_var,
            n_alphabet: self.n_alphabet,
            n_copies: self.n_copies,
            seed: self.seed,
            violation_k: self.violation_k,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn memory_config(&self) -> Result<MemoryConfig, CliError> {
        let prior = PriorSpec::new(self.widths[0], self.widths[1])?;
        let cfg = MemoryConfig {
            eta: self.eta,
            xi: self.xi,
            nu: self.nu,
            prior,
            convention: self.convention,
            n_alphabet: self.n_alphabet,
            n_copies: self.n_copies,
            seed: self.seed,
            violation_k: self.violation_k,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
