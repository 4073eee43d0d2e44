//! Transport of the ground state along a trajectory and its fidelity.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    fidelity, ground_band_population, ground_state, imaginary_time_ground_state, step_count,
    Conveyor, HarmonicWell, Observer, Potential, Propagator,
};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridSpec, WaveFunction};
use crate::lattice::LatticeParams;
use crate::protocols::Trajectory;

/// Largest tolerated momentum amplitude beyond 0.9·p_max, relative to the peak.
pub const ALIAS_LIMIT: f64 = 1e-8;
/// Fidelity change under dt halving accepted by the step-size check.
pub const DT_TOLERANCE: f64 = 1e-5;

/// Which trapping potential carries the atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    #[default]
    Lattice,
    /// Harmonic approximation of a single well, for analytic comparisons.
    Harmonic,
}

/// Numerical settings of a transport simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub grid: GridSpec,
    /// dt = τ_HO / steps_per_period.
    pub steps_per_period: usize,
    /// Double the samples per site for τ < 0.5·τ_HO.
    pub escalate: bool,
    /// Repeat with dt/2 and require |ΔF| < 1e-5.
    pub check_dt: bool,
    pub model: Model,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            steps_per_period: 512,
            escalate: true,
            check_dt: false,
            model: Model::Lattice,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps_per_period < 8 {
            return Err(Error::Input("steps_per_period must be at least 8".into()));
        }
        Grid::new(self.grid).map(|_| ())
    }

    /// Grid used for a transport of duration `tau`.
    pub fn grid_for(&self, tau: f64, params: &LatticeParams) -> GridSpec {
        if self.escalate && tau < 0.5 * params.tau_ho() && self.grid.pts_per_site < 128 {
            GridSpec {
                pts_per_site: 128,
                ..self.grid
            }
        } else {
            self.grid
        }
    }
}

#[derive(Debug, Clone)]
pub struct TransportResult {
    /// Overlap with the ground state of the destination well.
    pub fidelity: f64,
    /// Ground-band population summed over all wells.
    pub detection_fidelity: f64,
    pub dt: f64,
    pub steps: usize,
    pub grid: GridSpec,
    /// |F(dt) − F(dt/2)| when the step check ran.
    pub dt_shift: Option<f64>,
    /// Largest momentum tail ratio seen during the run.
    pub alias_ratio: f64,
    pub warnings: Vec<String>,
    pub final_state: WaveFunction,
}

/// Simulator for one depth and grid; reusable across trajectories.
#[derive(Debug, Clone)]
pub struct TransportSim {
    params: LatticeParams,
    config: SimConfig,
    grid: Arc<Grid>,
    ground: WaveFunction,
}

impl TransportSim {
    pub fn new(params: &LatticeParams, config: SimConfig) -> Result<Self> {
        params.validate()?;
        config.validate()?;
        let grid = Arc::new(Grid::new(config.grid)?);
        let ground = match config.model {
            Model::Lattice => ground_state(grid.clone(), params, 0)?,
            Model::Harmonic => {
                let mut v = vec![0.0; grid.len()];
                HarmonicWell::new(&grid, params.u0, |_| 0.0).fill(0.0, &mut v);
                let seed = WaveFunction::gaussian(grid.clone(), 0.0, params.delta_x());
                imaginary_time_ground_state(seed, &v, params.omega_ho(), 1e-12, 400_000)?.0
            }
        };
        Ok(Self {
            params: *params,
            config,
            grid,
            ground,
        })
    }

    /// Simulator with the grid escalated as needed for duration `tau`.
    pub fn for_duration(params: &LatticeParams, config: SimConfig, tau: f64) -> Result<Self> {
        let grid = config.grid_for(tau, params);
        Self::new(params, SimConfig { grid, ..config })
    }

    pub fn params(&self) -> &LatticeParams {
        &self.params
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Initial state: ground state of the well at x = 0.
    pub fn ground(&self) -> &WaveFunction {
        &self.ground
    }

    /// Ground state of the well at `d`.
    pub fn target(&self, d: f64) -> WaveFunction {
        self.ground.translated(d)
    }

    /// Step count for duration `tau` (even, so a jump at τ/2 falls on a step edge).
    pub fn steps_for(&self, tau: f64) -> usize {
        let n = step_count(tau, self.params.tau_ho() / self.config.steps_per_period as f64);
        n + n % 2
    }

    fn potential<'a>(&'a self, traj: &'a Trajectory) -> Box<dyn Potential + 'a> {
        let path = move |t: f64| traj.position(t);
        match self.config.model {
            Model::Lattice => Box::new(Conveyor::new(&self.grid, self.params.u0, path)),
            Model::Harmonic => Box::new(HarmonicWell::new(&self.grid, self.params.u0, path)),
        }
    }

    /// Evolves the initial state over [0, τ] with `steps` steps, calling
    /// `observer` every `stride` steps.
    pub fn evolve(
        &self,
        traj: &Trajectory,
        steps: usize,
        stride: usize,
        observer: Option<Observer<'_>>,
    ) -> WaveFunction {
        let pot = self.potential(traj);
        let mut psi = self.ground.clone();
        let mut prop = Propagator::new(self.grid.clone(), traj.tau() / steps as f64);
        prop.run(&mut psi, pot.as_ref(), 0.0, steps, stride, observer);
        psi
    }

    /// Site-resolved fidelity at the default step; the optimizer's objective.
    pub fn fidelity(&self, traj: &Trajectory) -> Result<f64> {
        let psi = self.evolve(traj, self.steps_for(traj.tau()), usize::MAX, None);
        fidelity(&psi, &self.target(traj.d()))
    }

    /// Full evaluation with both fidelities, aliasing guard and the optional
    /// step-size check.
    pub fn run(&self, traj: &Trajectory) -> Result<TransportResult> {
        let mut steps = self.steps_for(traj.tau());
        let (mut res, mut warnings) = self.run_at(traj, steps)?;
        let mut dt_shift = None;
        if self.config.check_dt {
            for _ in 0..3 {
                steps *= 2;
                let (fine, w) = self.run_at(traj, steps)?;
                let shift = (fine.fidelity - res.fidelity).abs();
                dt_shift = Some(shift);
                res = fine;
                warnings = w;
                if shift < DT_TOLERANCE {
                    break;
                }
            }
            if dt_shift.is_some_and(|s| s >= DT_TOLERANCE) {
                warnings.push(format!(
                    "fidelity still changes by {:.2e} after halving dt three times",
                    dt_shift.unwrap()
                ));
            }
        }
        for w in &warnings {
            log::warn!("{w}");
        }
        res.dt_shift = dt_shift;
        res.warnings = warnings;
        Ok(res)
    }

    fn run_at(&self, traj: &Trajectory, steps: usize) -> Result<(TransportResult, Vec<String>)> {
        let mut alias: f64 = 0.0;
        let stride = (steps / 16).max(1);
        let mut obs = |_: usize, _: f64, psi: &WaveFunction| {
            alias = alias.max(psi.high_momentum_ratio(0.9));
        };
        let psi = self.evolve(traj, steps, stride, Some(&mut obs));
        let target = self.target(traj.d());
        let f = fidelity(&psi, &target)?;
        let det = ground_band_population(&psi, &self.ground, traj.d())?;
        let mut warnings = Vec::new();
        if alias > ALIAS_LIMIT {
            warnings.push(format!(
                "momentum tail {alias:.1e} of peak beyond 0.9·p_max; refine the grid"
            ));
        }
        Ok((
            TransportResult {
                fidelity: f,
                detection_fidelity: det.max(f),
                dt: traj.tau() / steps as f64,
                steps,
                grid: self.grid.spec(),
                dt_shift: None,
                alias_ratio: alias,
                warnings: Vec::new(),
                final_state: psi,
            },
            warnings,
        ))
    }

    /// Evolution with the state stored every `stride` steps (plus the end).
    /// Returns the sample times and states.
    pub fn record(&self, traj: &Trajectory, steps: usize, stride: usize) -> (Vec<f64>, Vec<WaveFunction>) {
        let mut times = Vec::new();
        let mut states = Vec::new();
        let mut obs = |_: usize, t: f64, psi: &WaveFunction| {
            times.push(t);
            states.push(psi.clone());
        };
        self.evolve(traj, steps, stride, Some(&mut obs));
        (times, states)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::SITE;
    use std::f64::consts::PI;

    #[test]
    fn escalates_short_durations() {
        let p = LatticeParams::new(150.0).unwrap();
        let c = SimConfig::default();
        assert_eq!(c.grid_for(0.4 * p.tau_ho(), &p).pts_per_site, 128);
        assert_eq!(c.grid_for(0.6 * p.tau_ho(), &p).pts_per_site, 64);
        let off = SimConfig {
            escalate: false,
            ..c
        };
        assert_eq!(off.grid_for(0.1, &p).pts_per_site, 64);
    }

    #[test]
    fn even_step_counts() {
        let p = LatticeParams::new(150.0).unwrap();
        let sim = TransportSim::new(&p, SimConfig::default()).unwrap();
        for f in [0.3, 1.0, 1.7311] {
            assert_eq!(sim.steps_for(f * p.tau_ho()) % 2, 0);
        }
    }

    #[test]
    fn slow_transport_is_faithful() {
        let p = LatticeParams::new(150.0).unwrap();
        let sim = TransportSim::new(&p, SimConfig::default()).unwrap();
        let traj = Trajectory::adiabatic_sine(SITE, 6.0 * p.tau_ho()).unwrap();
        let r = sim.run(&traj).unwrap();
        assert!(r.fidelity > 0.999, "{}", r.fidelity);
        assert!(r.detection_fidelity >= r.fidelity);
        assert!(r.alias_ratio < ALIAS_LIMIT);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn zero_distance_transport_keeps_the_state() {
        let p = LatticeParams::new(150.0).unwrap();
        let sim = TransportSim::new(&p, SimConfig::default()).unwrap();
        let traj = Trajectory::linear(0.0, p.tau_ho()).unwrap();
        let r = sim.run(&traj).unwrap();
        assert!(1.0 - r.fidelity < 1e-9, "{}", r.fidelity);
    }

    #[test]
    fn sudden_shift_overlaps_like_gaussians() {
        // a very fast "transport" leaves the state behind: F ≈ exp(−d²/(4Δx²))
        let p = LatticeParams::new(150.0).unwrap();
        let sim = TransportSim::new(&p, SimConfig::default()).unwrap();
        let d = 0.2;
        let traj = Trajectory::linear(d, 1e-6).unwrap();
        let f = sim.fidelity(&traj).unwrap();
        let dx = p.delta_x();
        let expect = (-d * d / (4.0 * dx * dx)).exp();
        assert!((f - expect).abs() < 0.01, "{f} vs {expect}");
    }

    #[test]
    fn dt_check_reports_shift() {
        let p = LatticeParams::new(150.0).unwrap();
        let sim = TransportSim::new(
            &p,
            SimConfig {
                check_dt: true,
                ..SimConfig::default()
            },
        )
        .unwrap();
        let traj = Trajectory::parabolic(PI, 1.3 * p.tau_ho()).unwrap();
        let r = sim.run(&traj).unwrap();
        assert!(r.dt_shift.unwrap() < DT_TOLERANCE);
    }
}
