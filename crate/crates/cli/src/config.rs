//! Scenario configuration: a single JSON document describing the system,
//! the times, the protocol, and the output destination.

use lgsim_core::lg::PairProtocol;
use lgsim_core::macroreal::HiddenModel;
use lgsim_core::qcore::{Operator, OperatorData, QuantumState, QuantumStateData, C64};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::PathBuf;

/// Error carrying the offending config field.
#[derive(Debug)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config field `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(field: &str, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError {
        field: field.into(),
        message: message.into(),
    })
}

/// Unit convention for every time-valued field in the file.
///
/// `omega_t` interprets times as ωt (radians) and requires a system with a
/// well-defined frequency: a Pauli-coefficient Hamiltonian, or a square-wave
/// classical model. `absolute` passes times through unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    OmegaT,
    #[default]
    Absolute,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HamiltonianSpec {
    /// H = cx σx + cy σy + cz σz.
    Pauli([f64; 3]),
    Matrix(OperatorData),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableSpec {
    /// Q = n·σ for a unit vector n.
    PauliDirection([f64; 3]),
    Matrix(OperatorData),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    /// One of `up_z`, `down_z`, `plus_x`, `plus_y`.
    Named(String),
    Explicit(QuantumStateData),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemConfig {
    pub dimension: usize,
    pub hamiltonian: HamiltonianSpec,
    pub q: ObservableSpec,
    pub initial_state: StateSpec,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TauGrid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

/// Either explicit three times or an equal-spacing τ grid anchored at t1.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TimesConfig {
    #[serde(default)]
    pub t1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t3: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_grid: Option<TauGrid>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ProtocolConfig {
    Sequential,
    Quasi,
    AncillaSimple,
    /// Real shared-phase ancilla amplitudes with α² + β² = 1.
    AncillaGeneral {
        alpha: f64,
        beta: f64,
    },
    Record,
    Classical {
        model: HiddenModel,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
    #[default]
    Both,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputConfig {
    pub path: PathBuf,
    #[serde(default)]
    pub format: OutputFormat,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            path: PathBuf::from("out"),
            format: OutputFormat::Both,
        }
    }
}

fn default_runs() -> u64 {
    100_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub units: Units,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemConfig>,
    pub times: TimesConfig,
    pub protocol: ProtocolConfig,
    #[serde(default = "default_runs")]
    pub runs: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputConfig,
}

/// A validated scenario ready to run.
#[derive(Debug)]
pub struct ResolvedScenario {
    pub quantum: Option<QuantumSystem>,
    pub classical: Option<HiddenModel>,
    pub protocol: ProtocolConfig,
    /// (t1, τ values); explicit three times become the single τ = t2 − t1
    /// entry with the t3 spacing checked separately.
    pub t1: f64,
    pub taus: Vec<f64>,
    /// Explicit (t2, t3) when the config named all three times.
    pub explicit: Option<(f64, f64)>,
    pub runs: u64,
    pub seed: u64,
    pub output: OutputConfig,
}

#[derive(Debug)]
pub struct QuantumSystem {
    pub q: Operator,
    pub h: Operator,
    pub state: QuantumState,
    pub pair_protocol: PairProtocol,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError {
            field: "<document>".into(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Validates the document and resolves units, operators, and the state.
    pub fn resolve(&self) -> Result<ResolvedScenario, ConfigError> {
        let classical_model = match &self.protocol {
            ProtocolConfig::Classical { model } => {
                HiddenModel::new(model.dynamics, model.kick, model.p_plus)
                    .map_err(|e| ConfigError {
                        field: "protocol.model".into(),
                        message: e.to_string(),
                    })?;
                Some(*model)
            }
            _ => None,
        };

        let omega = self.frequency(&classical_model)?;
        let scale = match self.units {
            Units::Absolute => 1.0,
            Units::OmegaT => match omega {
                Some(w) if w > 0.0 => 1.0 / w,
                _ => {
                    return err(
                        "units",
                        "omega_t units need a Pauli Hamiltonian or a square-wave model",
                    )
                }
            },
        };

        let quantum = match &self.protocol {
            ProtocolConfig::Classical { .. } => None,
            _ => Some(self.resolve_system()?),
        };

        let t1 = self.times.t1 * scale;
        let (taus, explicit) = match (self.times.t2, self.times.t3, self.times.tau_grid) {
            (Some(t2), Some(t3), None) => {
                let (t2, t3) = (t2 * scale, t3 * scale);
                if !(t1 < t2 && t2 < t3) {
                    return err("times", format!("need t1 < t2 < t3, got ({t1}, {t2}, {t3})"));
                }
                (vec![t2 - t1], Some((t2, t3)))
            }
            (None, None, Some(grid)) => {
                if grid.points == 0 {
                    return err("times.tau_grid.points", "must be ≥ 1");
                }
                if grid.points > 1 && grid.stop <= grid.start {
                    return err("times.tau_grid", "stop must exceed start");
                }
                if grid.start < 0.0 {
                    return err("times.tau_grid.start", "τ must be ≥ 0");
                }
                let taus = if grid.points == 1 {
                    vec![grid.start * scale]
                } else {
                    let step = (grid.stop - grid.start) / (grid.points - 1) as f64;
                    (0..grid.points)
                        .map(|k| (grid.start + step * k as f64) * scale)
                        .collect()
                };
                (taus, None)
            }
            _ => {
                return err(
                    "times",
                    "specify either {t2, t3} or {tau_grid}, and not both",
                )
            }
        };

        Ok(ResolvedScenario {
            quantum,
            classical: classical_model,
            protocol: self.protocol.clone(),
            t1,
            taus,
            explicit,
            runs: self.runs,
            seed: self.seed,
            output: self.output.clone(),
        })
    }

    /// Angular frequency implied by the system, when well defined.
    fn frequency(&self, classical: &Option<HiddenModel>) -> Result<Option<f64>, ConfigError> {
        if let Some(model) = classical {
            return Ok(match model.dynamics {
                lgsim_core::macroreal::Dynamics::SquareWave { omega } => Some(omega),
                lgsim_core::macroreal::Dynamics::Telegraph { .. } => None,
            });
        }
        let system = match &self.system {
            Some(s) => s,
            None => return Ok(None),
        };
        Ok(match &system.hamiltonian {
            // H = ½ω n̂·σ, so ω = 2‖c‖.
            HamiltonianSpec::Pauli([cx, cy, cz]) => {
                Some(2.0 * (cx * cx + cy * cy + cz * cz).sqrt())
            }
            HamiltonianSpec::Matrix(_) => None,
        })
    }

    fn resolve_system(&self) -> Result<QuantumSystem, ConfigError> {
        let system = match &self.system {
            Some(s) => s,
            None => return err("system", "required for quantum protocols"),
        };
        let dim = system.dimension;
        if dim < 2 {
            return err("system.dimension", "must be ≥ 2");
        }

        let h = match &system.hamiltonian {
            HamiltonianSpec::Pauli(c) => {
                if dim != 2 {
                    return err("system.hamiltonian", "pauli form requires dimension 2");
                }
                Operator::from_pauli_coeffs(c[0], c[1], c[2])
            }
            HamiltonianSpec::Matrix(data) => {
                let op = Operator::try_from(data.clone()).map_err(|e| ConfigError {
                    field: "system.hamiltonian.matrix".into(),
                    message: e.to_string(),
                })?;
                if !op.is_hermitian(1e-10) {
                    return err("system.hamiltonian.matrix", "must be hermitian");
                }
                op
            }
        };
        if h.dim() != dim {
            return err(
                "system.hamiltonian",
                format!("dimension {} ≠ system.dimension {dim}", h.dim()),
            );
        }

        let q = match &system.q {
            ObservableSpec::PauliDirection(n) => {
                if dim != 2 {
                    return err("system.q", "pauli_direction form requires dimension 2");
                }
                Operator::pauli_direction(*n).map_err(|e| ConfigError {
                    field: "system.q.pauli_direction".into(),
                    message: e.to_string(),
                })?
            }
            ObservableSpec::Matrix(data) => {
                Operator::try_from(data.clone()).map_err(|e| ConfigError {
                    field: "system.q.matrix".into(),
                    message: e.to_string(),
                })?
            }
        };
        if q.dim() != dim {
            return err(
                "system.q",
                format!("dimension {} ≠ system.dimension {dim}", q.dim()),
            );
        }
        if !q.is_dichotomic(1e-10) {
            return err("system.q", "must be hermitian with Q² = I");
        }

        let state = match &system.initial_state {
            StateSpec::Named(name) => match name.as_str() {
                "up_z" => QuantumState::up_z(),
                "down_z" => QuantumState::down_z(),
                "plus_x" => QuantumState::plus_x(),
                "plus_y" => QuantumState::plus_y(),
                other => {
                    return err(
                        "system.initial_state",
                        format!("unknown named state `{other}` (use up_z/down_z/plus_x/plus_y)"),
                    )
                }
            },
            StateSpec::Explicit(data) => {
                QuantumState::try_from(data.clone()).map_err(|e| ConfigError {
                    field: "system.initial_state".into(),
                    message: e.to_string(),
                })?
            }
        };
        if state.dim() != dim {
            return err(
                "system.initial_state",
                format!("dimension {} ≠ system.dimension {dim}", state.dim()),
            );
        }
        if matches!(system.initial_state, StateSpec::Named(_)) && dim != 2 {
            return err("system.initial_state", "named states require dimension 2");
        }

        let pair_protocol = match &self.protocol {
            ProtocolConfig::Sequential => PairProtocol::Sequential,
            ProtocolConfig::Quasi => PairProtocol::Quasi,
            ProtocolConfig::AncillaSimple => PairProtocol::AncillaSimple,
            ProtocolConfig::AncillaGeneral { alpha, beta } => {
                let total = alpha * alpha + beta * beta;
                if (total - 1.0).abs() > 1e-10 {
                    return err(
                        "protocol",
                        format!("ancilla amplitudes must satisfy α² + β² = 1, got {total}"),
                    );
                }
                PairProtocol::AncillaGeneral {
                    alpha: C64::new(*alpha, 0.0),
                    beta: C64::new(*beta, 0.0),
                }
            }
            ProtocolConfig::Record => PairProtocol::Record,
            ProtocolConfig::Classical { .. } => unreachable!("classical handled above"),
        };

        Ok(QuantumSystem {
            q,
            h,
            state,
            pair_protocol,
        })
    }
}
