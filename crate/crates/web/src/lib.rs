//! Browser bindings: transport fidelity curves, wavepacket snapshots and the
//! drive compensation loop. Every entry point takes plain numbers and
//! returns a JSON string; the native functions are what the wasm exports wrap.

use conveyor::control::{
    apply_plant, iterate_compensation, CompensationConfig, KernelModel, Plant, Signal, SITE_LAMBDA,
};
use conveyor::lattice::SITE;
use conveyor::protocols::Trajectory;
use conveyor::transport::{SimConfig, TransportSim};
use conveyor::{GridSpec, LatticeParams};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Coarse numerics so a curve finishes in about a second in the browser.
fn demo_sim() -> SimConfig {
    SimConfig {
        grid: GridSpec {
            n_sites: 8,
            pts_per_site: 32,
        },
        steps_per_period: 128,
        escalate: false,
        ..SimConfig::default()
    }
}

fn protocol(name: &str, tau: f64, params: &LatticeParams) -> conveyor::Result<Trajectory> {
    match name {
        "linear" => Trajectory::linear(SITE, tau),
        "parabolic" => Trajectory::parabolic(SITE, tau),
        "adiabatic_sine" => Trajectory::adiabatic_sine(SITE, tau),
        "classical_ansatz" => Trajectory::classical_ansatz(SITE, tau, params),
        other => Err(conveyor::Error::Input(format!("unknown protocol {other:?}"))),
    }
}

#[derive(Debug, Serialize)]
pub struct Curve {
    pub tau_over_tau_ho: Vec<f64>,
    /// `None` where the protocol is undefined (classical ansatz below its limit).
    pub fidelity: Vec<Option<f64>>,
    pub detection_fidelity: Vec<Option<f64>>,
}

/// Transport fidelity over `points` durations spread evenly in [lo, hi]·τ_HO.
pub fn fidelity_curve(name: &str, u0: f64, lo: f64, hi: f64, points: usize) -> conveyor::Result<Curve> {
    if !(lo > 0.0 && hi >= lo) || points == 0 {
        return Err(conveyor::Error::Input("need 0 < lo ≤ hi and at least one point".into()));
    }
    let params = LatticeParams::cesium(u0)?;
    let sim = TransportSim::new(&params, demo_sim())?;
    let fracs: Vec<f64> = (0..points)
        .map(|k| if points == 1 { lo } else { lo + (hi - lo) * k as f64 / (points - 1) as f64 })
        .collect();
    let mut curve = Curve {
        tau_over_tau_ho: fracs.clone(),
        fidelity: Vec::with_capacity(points),
        detection_fidelity: Vec::with_capacity(points),
    };
    for frac in fracs {
        let run = match protocol(name, frac * params.tau_ho(), &params) {
            Ok(traj) => Some(sim.run(&traj)?),
            Err(conveyor::Error::BelowClassicalLimit { .. }) => None,
            Err(e) => return Err(e),
        };
        curve.fidelity.push(run.as_ref().map(|r| r.fidelity));
        curve.detection_fidelity.push(run.as_ref().map(|r| r.detection_fidelity));
    }
    Ok(curve)
}

#[derive(Debug, Serialize)]
pub struct Snapshots {
    /// Positions in lattice sites.
    pub x: Vec<f64>,
    pub times_over_tau_ho: Vec<f64>,
    /// Trap centre in sites at each snapshot.
    pub trap: Vec<f64>,
    /// |ψ|² at each snapshot.
    pub density: Vec<Vec<f64>>,
    pub fidelity: f64,
}

/// Probability density at `frames` equally spaced times, restricted to the
/// three sites around the transport.
pub fn snapshots(name: &str, u0: f64, frac: f64, frames: usize) -> conveyor::Result<Snapshots> {
    let params = LatticeParams::cesium(u0)?;
    let sim = TransportSim::new(&params, demo_sim())?;
    let traj = protocol(name, frac * params.tau_ho(), &params)?;
    let steps = sim.steps_for(traj.tau());
    let stride = (steps / frames.max(1)).max(1);
    let (times, states) = sim.record(&traj, steps, stride);
    let grid = sim.grid();
    let keep: Vec<usize> = (0..grid.len())
        .filter(|&i| (-SITE..=2.0 * SITE).contains(&grid.x()[i]))
        .collect();
    let fidelity = sim.fidelity(&traj)?;
    Ok(Snapshots {
        x: keep.iter().map(|&i| grid.x()[i] / SITE).collect(),
        times_over_tau_ho: times.iter().map(|t| t / params.tau_ho()).collect(),
        trap: times.iter().map(|&t| traj.position(t) / SITE).collect(),
        density: states
            .iter()
            .map(|psi| {
                let d = psi.density();
                keep.iter().map(|&i| d[i]).collect()
            })
            .collect(),
        fidelity,
    })
}

#[derive(Debug, Serialize)]
pub struct ControlDemo {
    pub time_us: Vec<f64>,
    /// All positions in lattice sites.
    pub target: Vec<f64>,
    pub drive: Vec<f64>,
    pub output: Vec<f64>,
    pub uncompensated: Vec<f64>,
    /// Largest |output − target| in sites after each iteration.
    pub history: Vec<f64>,
    pub converged: bool,
}

/// Iterative pre-distortion of a one-site move through the modelled drive
/// electronics (delay plus low-pass, slew limited).
pub fn control_demo(name: &str, u0: f64, frac: f64, gain: f64, iterations: usize) -> conveyor::Result<ControlDemo> {
    let params = LatticeParams::cesium(u0)?;
    let traj = protocol(name, frac * params.tau_ho(), &params)?;
    let model = KernelModel::default();
    let kernel = model.build()?;
    let plant = Plant::new(kernel, conveyor::protocols::FeasibilityLimits::default().max_slew)?;
    let target = Signal::from_trajectory(&traj, &params, model.dt_us, 5.0)?;
    let config = CompensationConfig {
        gain,
        max_iter: iterations.max(1),
        ..CompensationConfig::default()
    };
    let raw = apply_plant(&target, &plant)?;
    let (comp, history) = match iterate_compensation(&target, &plant, &config) {
        Ok(c) => {
            let h = c.history.clone();
            (c, h)
        }
        Err(conveyor::Error::Instability { history, .. }) => {
            return Err(conveyor::Error::Input(format!(
                "compensation diverged after {} iterations; lower the gain",
                history.len()
            )))
        }
        Err(e) => return Err(e),
    };
    let sites = |v: &[f64]| v.iter().map(|x| x / SITE_LAMBDA).collect::<Vec<_>>();
    Ok(ControlDemo {
        time_us: target.times(),
        target: sites(&target.values),
        drive: sites(&comp.drive.values),
        output: sites(&comp.output.values),
        uncompensated: sites(&raw.values),
        history: sites(&history),
        converged: comp.converged,
    })
}

fn to_js<T: Serialize>(r: conveyor::Result<T>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = fidelityCurve)]
pub fn fidelity_curve_js(protocol: &str, u0: f64, lo: f64, hi: f64, points: usize) -> Result<String, JsError> {
    to_js(fidelity_curve(protocol, u0, lo, hi, points))
}

#[wasm_bindgen(js_name = snapshots)]
pub fn snapshots_js(protocol: &str, u0: f64, frac: f64, frames: usize) -> Result<String, JsError> {
    to_js(snapshots(protocol, u0, frac, frames))
}

#[wasm_bindgen(js_name = controlDemo)]
pub fn control_demo_js(protocol: &str, u0: f64, frac: f64, gain: f64, iterations: usize) -> Result<String, JsError> {
    to_js(control_demo(protocol, u0, frac, gain, iterations))
}
