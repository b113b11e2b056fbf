//! Experiment configuration: one TOML document per experiment.

use std::fmt;
use std::path::Path;

use nptcorr::estimators::Route;
use nptcorr::fermion::ModelParams;
use nptcorr::protocol::Bracket;
use nptcorr::qmat::PauliString;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    GreenRetardedScan,
    TwoPoint,
    ThreePoint,
    HadamardCompare,
    KeldyshTable,
    ConvergenceStudy,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::GreenRetardedScan => "green_retarded_scan",
            Self::TwoPoint => "two_point",
            Self::ThreePoint => "three_point",
            Self::HadamardCompare => "hadamard_compare",
            Self::KeldyshTable => "keldysh_table",
            Self::ConvergenceStudy => "convergence_study",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapChoice {
    #[default]
    Integrated,
    Trotter,
}

/// Evaluation times. `t` lists them explicitly; otherwise
/// `t_start + k t_step` up to `t_stop` inclusive.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    pub t_prime: f64,
    pub t: Vec<f64>,
    pub t_start: Option<f64>,
    pub t_stop: Option<f64>,
    pub t_step: Option<f64>,
    /// Middle time of three-point runs.
    pub t_mid: Option<f64>,
}

impl Grid {
    pub fn times(&self) -> Vec<f64> {
        if !self.t.is_empty() {
            return self.t.clone();
        }
        match (self.t_start, self.t_stop, self.t_step) {
            (Some(start), Some(stop), Some(step)) if step > 0.0 && stop >= start => {
                let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
                (0..count).map(|k| start + step * k as f64).collect()
            }
            _ => Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolOptions {
    pub exact: bool,
    pub shots: usize,
    pub seed: Option<u64>,
    pub route: Route,
    pub map: MapChoice,
    pub trotter_dt: Option<f64>,
    /// Pauli labels `O_1..O_n` for two- and three-point runs.
    pub ops: Vec<String>,
    pub brackets: Vec<Bracket>,
    /// Occupation of the mode at `t'`; defaults to `n_F(eps_k(0))`.
    pub n_ref: Option<f64>,
}

impl Default for ProtocolOptions {
    fn default() -> Self {
        Self {
            exact: false,
            shots: 10_000,
            seed: None,
            route: Route::ConditionalSubtraction,
            map: MapChoice::Integrated,
            trotter_dt: None,
            ops: Vec::new(),
            brackets: Vec::new(),
            n_ref: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseOptions {
    pub ancilla_dephasing: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KeldyshOptions {
    pub n: usize,
}

impl Default for KeldyshOptions {
    fn default() -> Self {
        Self { n: 3 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceOptions {
    pub dts: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputOptions {
    pub dir: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Base name of the output files; defaults to the experiment kind.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub model: ModelParams<f64>,
    #[serde(default)]
    pub grid: Grid,
    #[serde(default)]
    pub protocol: ProtocolOptions,
    #[serde(default)]
    pub noise: NoiseOptions,
    #[serde(default)]
    pub keldysh: KeldyshOptions,
    #[serde(default)]
    pub convergence: ConvergenceOptions,
    #[serde(default)]
    pub output: OutputOptions,
}

/// One validation failure, tied to a dotted config key.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn diag(out: &mut Vec<Diagnostic>, field: &str, message: impl Into<String>) {
    out.push(Diagnostic { field: field.into(), message: message.into() });
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Canonical TOML rendering, used for the echo and its hash.
    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn base_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.experiment.as_str().to_string())
    }

    pub fn n_ref(&self) -> f64 {
        self.protocol.n_ref.unwrap_or_else(|| self.model.default_occupation())
    }

    /// Every violation in the document; empty when the config can run.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        if let Err(e) = self.model.validate() {
            diag(&mut out, "model", e.to_string());
        }
        if let Some(name) = &self.name {
            if name.is_empty() || name.contains(['/', '\\']) {
                diag(&mut out, "name", "must be a non-empty file stem without path separators");
            }
        }
        let p = &self.protocol;
        if let Some(n) = p.n_ref {
            if !(0.0..=1.0).contains(&n) {
                diag(&mut out, "protocol.n_ref", format!("occupation must lie in [0, 1], got {n}"));
            }
        }
        let samples = !p.exact && self.experiment != ExperimentKind::KeldyshTable && self.experiment != ExperimentKind::ConvergenceStudy;
        if samples {
            if p.shots == 0 {
                diag(&mut out, "protocol.shots", "must be at least 1 when exact = false");
            }
            if p.seed.is_none() {
                diag(&mut out, "protocol.seed", "required when exact = false");
            }
        }
        if p.map == MapChoice::Trotter || self.experiment == ExperimentKind::ConvergenceStudy {
            match p.trotter_dt {
                Some(dt) if dt > 0.0 && dt.is_finite() => {}
                Some(dt) => diag(&mut out, "protocol.trotter_dt", format!("must be positive, got {dt}")),
                None if self.experiment != ExperimentKind::ConvergenceStudy => {
                    diag(&mut out, "protocol.trotter_dt", "required when map = \"trotter\"")
                }
                None => {}
            }
        }
        if self.experiment != ExperimentKind::KeldyshTable {
            self.validate_grid(&mut out);
        }
        match self.experiment {
            ExperimentKind::TwoPoint => self.validate_ops(&mut out, 2),
            ExperimentKind::ThreePoint => {
                self.validate_ops(&mut out, 3);
                match self.grid.t_mid {
                    None => diag(&mut out, "grid.t_mid", "required for three_point"),
                    Some(m) => {
                        if m < self.grid.t_prime {
                            diag(&mut out, "grid.t_mid", "must not precede grid.t_prime");
                        }
                        if self.grid.times().iter().any(|&t| t < m) {
                            diag(&mut out, "grid.t", "every time must be >= grid.t_mid");
                        }
                    }
                }
            }
            ExperimentKind::HadamardCompare => {
                let g = self.noise.ancilla_dephasing;
                if !(g >= 0.0 && g.is_finite()) {
                    diag(&mut out, "noise.ancilla_dephasing", format!("must be a finite rate >= 0, got {g}"));
                }
            }
            ExperimentKind::KeldyshTable => {
                if !(2..=8).contains(&self.keldysh.n) {
                    diag(&mut out, "keldysh.n", format!("must lie in 2..=8, got {}", self.keldysh.n));
                }
            }
            ExperimentKind::ConvergenceStudy => {
                let dts = &self.convergence.dts;
                if dts.len() < 2 {
                    diag(&mut out, "convergence.dts", "needs at least two step sizes");
                }
                if dts.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
                    diag(&mut out, "convergence.dts", "step sizes must be positive");
                }
                if dts.windows(2).any(|w| w[1] >= w[0]) {
                    diag(&mut out, "convergence.dts", "step sizes must decrease");
                }
            }
            ExperimentKind::GreenRetardedScan => {}
        }
        out
    }

    fn validate_grid(&self, out: &mut Vec<Diagnostic>) {
        let g = &self.grid;
        if !g.t.is_empty() && (g.t_start.is_some() || g.t_stop.is_some() || g.t_step.is_some()) {
            diag(out, "grid.t", "give either an explicit list or t_start/t_stop/t_step, not both");
        }
        let times = g.times();
        if times.is_empty() {
            diag(out, "grid.t", "no evaluation times (set grid.t or a complete t_start/t_stop/t_step range)");
            return;
        }
        if times.iter().any(|t| !t.is_finite()) || !g.t_prime.is_finite() {
            diag(out, "grid.t", "times must be finite");
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            diag(out, "grid.t", "times must be strictly increasing");
        }
        if times.iter().any(|&t| t < g.t_prime) {
            diag(out, "grid.t", format!("every time must be >= grid.t_prime = {}", g.t_prime));
        }
    }

    fn validate_ops(&self, out: &mut Vec<Diagnostic>, n: usize) {
        let p = &self.protocol;
        if p.ops.len() != n {
            diag(out, "protocol.ops", format!("expected {n} Pauli labels, got {}", p.ops.len()));
        }
        for (k, label) in p.ops.iter().enumerate() {
            match label.parse::<PauliString>() {
                Ok(s) if s.n_qubits() != 1 => diag(out, &format!("protocol.ops[{k}]"), "the mode is a single qubit"),
                Ok(s) if !s.is_hermitian() => diag(out, &format!("protocol.ops[{k}]"), format!("`{label}` is not Hermitian")),
                Ok(_) => {}
                Err(e) => diag(out, &format!("protocol.ops[{k}]"), e.to_string()),
            }
        }
        if p.brackets.len() != n - 1 {
            diag(out, "protocol.brackets", format!("expected {} entries, got {}", n - 1, p.brackets.len()));
        }
    }
}
