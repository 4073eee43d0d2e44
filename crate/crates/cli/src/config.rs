//! Run configuration: one JSON document shared by all subcommands.

use std::path::{Path, PathBuf};

use conveyor::control::{CompensationConfig, KernelModel};
use conveyor::optimizer::OptimizerConfig;
use conveyor::protocols::{FeasibilityLimits, Trajectory, TrajectoryRecord};
use conveyor::thermal::ThermalConfig;
use conveyor::transport::{Model, SimConfig};
use conveyor::{GridSpec, LatticeParams, SpinDownField};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SPEC_VERSION: &str = "1";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub spec_version: String,
    #[serde(default = "default_lattice")]
    pub lattice: LatticeParams,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub thermal: Option<ThermalConfig>,
    #[serde(default)]
    pub limits: FeasibilityLimits,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    /// Trajectory for the single-protocol commands; optimized when absent.
    #[serde(default)]
    pub protocol: Option<ProtocolSpec>,
    #[serde(default)]
    pub output: OutputConfig,
    /// Seeds optimizer restarts and plant noise.
    #[serde(default)]
    pub seed: u64,
    /// Transport distance in lattice sites.
    #[serde(default = "one_site")]
    pub sites: u32,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub landscape: LandscapeSection,
    #[serde(default)]
    pub optimize: OptimizeSection,
    #[serde(default)]
    pub interferometer: InterferometerSection,
    #[serde(default)]
    pub geometry: GeometrySection,
    #[serde(default)]
    pub control: ControlSection,
}

fn default_lattice() -> LatticeParams {
    LatticeParams::cesium(150.0).expect("valid default depth")
}

fn one_site() -> u32 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub steps_per_period: usize,
    pub escalate: bool,
    pub check_dt: bool,
    pub model: Model,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let s = SimConfig::default();
        Self {
            steps_per_period: s.steps_per_period,
            escalate: s.escalate,
            check_dt: s.check_dt,
            model: s.model,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Named protocols evaluated at the configured durations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    Linear,
    Parabolic,
    AdiabaticSine,
    ClassicalAnsatz,
    Optimal,
}

impl ProtocolKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Linear => "linear",
            Self::Parabolic => "parabolic",
            Self::AdiabaticSine => "adiabatic_sine",
            Self::ClassicalAnsatz => "classical_ansatz",
            Self::Optimal => "optimal",
        }
    }

    /// Analytic trajectory; `None` for the optimized protocol.
    pub fn trajectory(self, d: f64, tau: f64, params: &LatticeParams) -> Option<conveyor::Result<Trajectory>> {
        match self {
            Self::Linear => Some(Trajectory::linear(d, tau)),
            Self::Parabolic => Some(Trajectory::parabolic(d, tau)),
            Self::AdiabaticSine => Some(Trajectory::adiabatic_sine(d, tau)),
            Self::ClassicalAnsatz => Some(Trajectory::classical_ansatz(d, tau, params)),
            Self::Optimal => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProtocolSpec {
    Linear {},
    Parabolic {},
    AdiabaticSine {},
    ClassicalAnsatz {},
    Optimal {},
    /// Fixed Fourier coefficients, rescaled to each duration.
    Fourier { coefficients: Vec<f64> },
    /// A complete trajectory with its own distance and duration.
    Trajectory { trajectory: TrajectoryRecord },
}

impl ProtocolSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Linear {} => "linear",
            Self::Parabolic {} => "parabolic",
            Self::AdiabaticSine {} => "adiabatic_sine",
            Self::ClassicalAnsatz {} => "classical_ansatz",
            Self::Optimal {} => "optimal",
            Self::Fourier { .. } => "fourier",
            Self::Trajectory { .. } => "trajectory",
        }
    }

    pub fn kind(&self) -> Option<ProtocolKind> {
        match self {
            Self::Linear {} => Some(ProtocolKind::Linear),
            Self::Parabolic {} => Some(ProtocolKind::Parabolic),
            Self::AdiabaticSine {} => Some(ProtocolKind::AdiabaticSine),
            Self::ClassicalAnsatz {} => Some(ProtocolKind::ClassicalAnsatz),
            Self::Optimal {} => Some(ProtocolKind::Optimal),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub protocols: Vec<ProtocolKind>,
    pub tau_fracs: Vec<f64>,
    /// Depths; the lattice depth when empty.
    pub u0: Vec<f64>,
    /// Transverse temperatures in µK; 0 is the on-axis atom.
    pub t_perp_uk: Vec<f64>,
    pub geometry: bool,
    pub contrast: bool,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            protocols: vec![ProtocolKind::Linear, ProtocolKind::Parabolic, ProtocolKind::AdiabaticSine],
            tau_fracs: (1..=30).map(|k| 0.1 * k as f64).collect(),
            u0: Vec::new(),
            t_perp_uk: vec![0.0],
            geometry: false,
            contrast: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LandscapeSection {
    pub u0: Vec<f64>,
    pub tau_fracs: Vec<f64>,
    /// Detection fidelity defining the transition.
    pub threshold: f64,
    /// Also evaluate the adiabatic protocol in every cell.
    pub adiabatic: bool,
}

impl Default for LandscapeSection {
    fn default() -> Self {
        Self {
            u0: vec![70.0, 150.0, 300.0],
            tau_fracs: vec![3.0, 2.0, 1.5, 1.3, 1.2, 1.1, 1.0, 0.9, 0.8, 0.7, 0.6, 0.5],
            threshold: 0.5,
            adiabatic: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizeSection {
    pub tau_fracs: Vec<f64>,
}

impl Default for OptimizeSection {
    fn default() -> Self {
        Self {
            tau_fracs: vec![3.0, 2.0, 1.5, 1.2, 1.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InterferometerSection {
    pub tau_fracs: Vec<f64>,
    /// Spin-down field; balanced at the lattice depth when absent.
    pub field: Option<SpinDownField>,
    /// Add the run without spin-down compensation.
    pub uncompensated: bool,
}

impl Default for InterferometerSection {
    fn default() -> Self {
        Self {
            tau_fracs: vec![3.0, 2.0, 1.5, 1.0],
            field: None,
            uncompensated: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometrySection {
    pub tau_fracs: Vec<f64>,
    /// Propagation steps between logged states.
    pub stride: usize,
}

impl Default for GeometrySection {
    fn default() -> Self {
        Self {
            tau_fracs: vec![2.0, 1.5, 1.0],
            stride: conveyor::geometry::DEFAULT_STRIDE,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSource {
    Model(KernelModel),
    /// CSV with columns time_us,value.
    File { path: PathBuf },
}

impl Default for KernelSource {
    fn default() -> Self {
        KernelSource::Model(KernelModel::default())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlSection {
    pub kernel: KernelSource,
    /// Target CSV (time_us,x_over_lambda); the protocol is used when absent.
    pub target_file: Option<PathBuf>,
    /// Target duration in units of τ_HO for named protocols.
    pub tau_frac: f64,
    pub compensation: CompensationConfig,
    /// Clip the plant response at the slew limit.
    pub saturate: bool,
    pub noise_nm: Option<f64>,
    /// Rest time before and after the target, µs.
    pub pad_us: f64,
}

impl Default for ControlSection {
    fn default() -> Self {
        Self {
            kernel: KernelSource::default(),
            target_file: None,
            tau_frac: 1.5,
            compensation: CompensationConfig::default(),
            saturate: true,
            noise_nm: None,
            pad_us: 5.0,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: RunConfig =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |e: conveyor::Error| CliError::Config(e.to_string());
        if self.spec_version != SPEC_VERSION {
            return Err(CliError::Config(format!(
                "spec_version {:?} is not supported (expected {SPEC_VERSION:?})",
                self.spec_version
            )));
        }
        self.lattice.validate().map_err(bad)?;
        self.sim().validate().map_err(bad)?;
        self.limits.validate().map_err(bad)?;
        self.optimizer.validate().map_err(bad)?;
        if let Some(t) = &self.thermal {
            t.validate().map_err(bad)?;
        }
        if self.sites == 0 {
            return Err(CliError::Config("sites must be at least 1".into()));
        }
        let fracs = [
            ("sweep.tau_fracs", &self.sweep.tau_fracs),
            ("landscape.tau_fracs", &self.landscape.tau_fracs),
            ("optimize.tau_fracs", &self.optimize.tau_fracs),
            ("interferometer.tau_fracs", &self.interferometer.tau_fracs),
            ("geometry.tau_fracs", &self.geometry.tau_fracs),
        ];
        for (name, list) in fracs {
            if list.iter().any(|f| !(*f > 0.0) || !f.is_finite()) {
                return Err(CliError::Config(format!("{name} must hold positive durations")));
            }
        }
        for (name, list) in [("sweep.u0", &self.sweep.u0), ("landscape.u0", &self.landscape.u0)] {
            if list.iter().any(|u| !(*u > 0.0)) {
                return Err(CliError::Config(format!("{name} must hold positive depths")));
            }
        }
        if self.sweep.t_perp_uk.iter().any(|t| !(*t >= 0.0)) {
            return Err(CliError::Config("sweep.t_perp_uk must be non-negative".into()));
        }
        if !(self.control.tau_frac > 0.0) || !(self.control.pad_us >= 0.0) {
            return Err(CliError::Config("control.tau_frac must be positive, pad_us non-negative".into()));
        }
        if let Some(field) = &self.interferometer.field {
            field.validate().map_err(bad)?;
        }
        if let Some(ProtocolSpec::Trajectory { trajectory }) = &self.protocol {
            Trajectory::try_from(trajectory.clone()).map_err(bad)?;
        }
        Ok(())
    }

    pub fn sim(&self) -> SimConfig {
        SimConfig {
            grid: self.grid,
            steps_per_period: self.solver.steps_per_period,
            escalate: self.solver.escalate,
            check_dt: self.solver.check_dt,
            model: self.solver.model,
        }
    }

    pub fn distance(&self) -> f64 {
        self.sites as f64 * conveyor::lattice::SITE
    }

    pub fn optimizer(&self) -> OptimizerConfig {
        OptimizerConfig {
            seed: self.seed,
            ..self.optimizer
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = RunConfig::parse(r#"{"spec_version": "1"}"#).unwrap();
        assert_eq!(c.lattice.u0, 150.0);
        assert_eq!(c.grid, GridSpec::default());
        assert_eq!(c.sites, 1);
        assert!(c.protocol.is_none());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in [
            r#"{"spec_version": "1", "colour": 3}"#,
            r#"{"spec_version": "1", "grid": {"n_sites": 8, "pts_per_site": 32, "x": 1}}"#,
            r#"{"spec_version": "1", "sweep": {"protocol": ["linear"]}}"#,
            r#"{"spec_version": "1", "protocol": {"kind": "linear", "tau": 1}}"#,
        ] {
            assert!(matches!(RunConfig::parse(text), Err(CliError::Config(_))), "{text}");
        }
    }

    #[test]
    fn version_and_ranges_are_checked() {
        assert!(RunConfig::parse(r#"{"spec_version": "0"}"#).is_err());
        assert!(RunConfig::parse(r#"{}"#).is_err());
        assert!(RunConfig::parse(r#"{"spec_version": "1", "lattice": {"u0": -1}}"#).is_err());
        assert!(RunConfig::parse(r#"{"spec_version": "1", "sweep": {"tau_fracs": [0]}}"#).is_err());
    }

    #[test]
    fn protocol_forms() {
        let c = RunConfig::parse(
            r#"{"spec_version": "1", "protocol": {"kind": "fourier", "coefficients": [0, 0.1]}}"#,
        )
        .unwrap();
        assert_eq!(c.protocol.unwrap().name(), "fourier");
        let c = RunConfig::parse(
            r#"{"spec_version": "1", "protocol": {"kind": "trajectory",
                "trajectory": {"kind": "linear", "d": 3.14, "tau": 0.3}}}"#,
        )
        .unwrap();
        assert_eq!(c.protocol.unwrap().name(), "trajectory");
    }
}
