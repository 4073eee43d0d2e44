//! Simulated actuator chain: a finite-bandwidth plant, its regularized
//! inverse, and iterative pre-distortion of the drive.
//!
//! Signals are uniformly sampled in µs with positions in units of λ, the
//! format of the drive and trajectory files. One lattice site is λ/2.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use num_complex::Complex64;
use rand_distr::{Distribution, Normal};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dynamics::fidelity;
use crate::error::{Error, Result};
use crate::lattice::LatticeParams;
use crate::protocols::Trajectory;
use crate::transport::TransportSim;

/// One lattice site in units of λ.
pub const SITE_LAMBDA: f64 = 0.5;

/// Uniformly sampled position signal, x/λ against time in µs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    pub t0_us: f64,
    pub dt_us: f64,
    pub values: Vec<f64>,
}

impl Signal {
    pub fn new(t0_us: f64, dt_us: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt_us > 0.0) || !dt_us.is_finite() || !t0_us.is_finite() {
            return Err(Error::Input(format!("invalid sampling: t0 {t0_us} µs, dt {dt_us} µs")));
        }
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("signal needs finite samples".into()));
        }
        Ok(Self { t0_us, dt_us, values })
    }

    /// Signal from (time, value) pairs on a uniform grid.
    pub fn from_pairs(times: &[f64], values: &[f64]) -> Result<Self> {
        if times.len() != values.len() || times.len() < 2 {
            return Err(Error::Input("need at least two matching (time, value) pairs".into()));
        }
        let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
        if times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-6 * dt) {
            return Err(Error::Input("sample times are not uniformly spaced".into()));
        }
        Self::new(times[0], dt, values.to_vec())
    }

    /// Samples `traj` every `dt_us`, holding the end points for `pad_us`
    /// before the start and after the end.
    pub fn from_trajectory(traj: &Trajectory, params: &LatticeParams, dt_us: f64, pad_us: f64) -> Result<Self> {
        let unit_us = params.time_unit_s()? * 1e6;
        if !(dt_us > 0.0) || !(pad_us >= 0.0) {
            return Err(Error::Input("dt_us must be positive and pad_us non-negative".into()));
        }
        let tau_us = traj.tau() * unit_us;
        let pad = (pad_us / dt_us).ceil() as usize;
        let body = (tau_us / dt_us).ceil() as usize;
        let n = body + 2 * pad + 1;
        let t0 = -(pad as f64) * dt_us;
        let values = (0..n)
            .map(|i| {
                let t = (t0 + i as f64 * dt_us).clamp(0.0, tau_us);
                traj.position(t / unit_us) / (2.0 * PI)
            })
            .collect();
        Self::new(t0, dt_us, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.t0_us + i as f64 * self.dt_us).collect()
    }

    /// Linear interpolation, holding the end values outside the record.
    pub fn at(&self, t_us: f64) -> f64 {
        let s = (t_us - self.t0_us) / self.dt_us;
        if s <= 0.0 {
            return self.values[0];
        }
        let i = s.floor() as usize;
        if i + 1 >= self.len() {
            return self.values[self.len() - 1];
        }
        let f = s - i as f64;
        self.values[i] * (1.0 - f) + self.values[i + 1] * f
    }

    /// Largest |Δx/Δt| between neighbouring samples, in λ/µs.
    pub fn max_slope(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| ((w[1] - w[0]) / self.dt_us).abs())
            .fold(0.0, f64::max)
    }

    fn check_aligned(&self, other: &Signal) -> Result<()> {
        if self.len() != other.len()
            || (self.dt_us - other.dt_us).abs() > 1e-9 * self.dt_us
            || (self.t0_us - other.t0_us).abs() > 1e-6 * self.dt_us
        {
            return Err(Error::Shape("signals are sampled differently".into()));
        }
        Ok(())
    }

    /// max |self − other| in λ.
    pub fn max_deviation(&self, other: &Signal) -> Result<f64> {
        self.check_aligned(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// The stretch [start, end] µs as a trajectory in lattice units.
    pub fn to_trajectory(&self, params: &LatticeParams, start_us: f64, end_us: f64) -> Result<Trajectory> {
        if !(end_us > start_us) {
            return Err(Error::Input("empty time window".into()));
        }
        let unit_us = params.time_unit_s()? * 1e6;
        let n = ((end_us - start_us) / self.dt_us).ceil().max(1.0) as usize;
        let step = (end_us - start_us) / n as f64;
        let times: Vec<f64> = (0..=n).map(|i| i as f64 * step / unit_us).collect();
        let positions = (0..=n)
            .map(|i| 2.0 * PI * self.at(start_us + i as f64 * step))
            .collect();
        Trajectory::sampled(times, positions)
    }
}

/// Response of the actuator to a unit impulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpulseResponse {
    samples: Vec<f64>,
    dt_us: f64,
    delay_us: f64,
}

impl ImpulseResponse {
    /// Kernel from samples on a grid starting at t = 0; rescaled to unit DC
    /// gain (Σ samples·dt = 1).
    pub fn new(samples: Vec<f64>, dt_us: f64) -> Result<Self> {
        if !(dt_us > 0.0) || !dt_us.is_finite() {
            return Err(Error::Input(format!("kernel spacing must be positive, got {dt_us}")));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("kernel samples must be finite".into()));
        }
        let gain: f64 = samples.iter().sum::<f64>() * dt_us;
        if gain.abs() < 1e-12 {
            return Err(Error::Domain("kernel has zero DC gain".into()));
        }
        let samples: Vec<f64> = samples.iter().map(|v| v / gain).collect();
        let peak = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let first = samples.iter().position(|v| v.abs() > 1e-9 * peak).unwrap_or(0);
        Ok(Self {
            delay_us: first as f64 * dt_us,
            samples,
            dt_us,
        })
    }

    /// Kernel from (time, value) pairs; times must be uniform and start at
    /// or after zero (earlier samples are taken as zero).
    pub fn from_pairs(times: &[f64], values: &[f64]) -> Result<Self> {
        let s = Signal::from_pairs(times, values)?;
        if s.t0_us < -1e-9 * s.dt_us {
            return Err(Error::Input("kernel must be causal (times ≥ 0)".into()));
        }
        let lead = (s.t0_us / s.dt_us).round() as usize;
        let mut samples = vec![0.0; lead];
        samples.extend_from_slice(&s.values);
        Self::new(samples, s.dt_us)
    }

    /// Unit impulse.
    pub fn identity(dt_us: f64) -> Result<Self> {
        Self::new(vec![1.0], dt_us)
    }

    /// Pure delay followed by a first-order low-pass, averaged over each
    /// sample interval and truncated where the tail falls below 1e-9.
    pub fn delayed_low_pass(delay_us: f64, cutoff_hz: f64, dt_us: f64) -> Result<Self> {
        if !(delay_us >= 0.0) || !(cutoff_hz > 0.0) || !(dt_us > 0.0) {
            return Err(Error::Input("delay must be ≥ 0, cutoff and spacing > 0".into()));
        }
        let tc = 1e6 / (2.0 * PI * cutoff_hz);
        let cdf = |t: f64| if t <= delay_us { 0.0 } else { 1.0 - (-(t - delay_us) / tc).exp() };
        let end = delay_us + tc * 9.0 * 10f64.ln();
        let n = (end / dt_us).ceil() as usize + 1;
        let samples = (0..n)
            .map(|k| (cdf((k + 1) as f64 * dt_us) - cdf(k as f64 * dt_us)) / dt_us)
            .collect();
        Self::new(samples, dt_us)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn dt_us(&self) -> f64 {
        self.dt_us
    }

    pub fn delay_us(&self) -> f64 {
        self.delay_us
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Causal convolution, holding the first input value before the record.
    pub fn convolve(&self, input: &[f64]) -> Vec<f64> {
        let first = input.first().copied().unwrap_or(0.0);
        (0..input.len())
            .map(|n| {
                self.samples
                    .iter()
                    .enumerate()
                    .map(|(k, h)| h * if k <= n { input[n - k] } else { first })
                    .sum::<f64>()
                    * self.dt_us
            })
            .collect()
    }
}

/// Parametric kernel settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelModel {
    pub delay_us: f64,
    pub cutoff_hz: f64,
    pub dt_us: f64,
}

impl Default for KernelModel {
    fn default() -> Self {
        Self {
            delay_us: 0.4,
            cutoff_hz: 8e5,
            dt_us: 0.05,
        }
    }
}

impl KernelModel {
    pub fn build(&self) -> Result<ImpulseResponse> {
        ImpulseResponse::delayed_low_pass(self.delay_us, self.cutoff_hz, self.dt_us)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Noise {
    rms_lambda: f64,
    seed: u64,
}

/// Linear response followed by slew-rate saturation and optional noise.
#[derive(Debug, Clone, PartialEq)]
pub struct Plant {
    kernel: ImpulseResponse,
    /// Phase slew limit in rad/µs (infinite for a linear plant).
    slew_limit: f64,
    noise: Option<Noise>,
}

impl Plant {
    pub fn new(kernel: ImpulseResponse, slew_limit: f64) -> Result<Self> {
        if !(slew_limit > 0.0) {
            return Err(Error::Domain(format!("slew limit must be positive, got {slew_limit}")));
        }
        Ok(Self {
            kernel,
            slew_limit,
            noise: None,
        })
    }

    pub fn linear(kernel: ImpulseResponse) -> Self {
        Self {
            kernel,
            slew_limit: f64::INFINITY,
            noise: None,
        }
    }

    /// Adds Gaussian position noise of `rms_nm`; the same seed gives the
    /// same noise on every application.
    pub fn with_noise(mut self, rms_nm: f64, lambda_nm: f64, seed: u64) -> Result<Self> {
        if !(rms_nm >= 0.0) || !(lambda_nm > 0.0) {
            return Err(Error::Domain("noise rms must be ≥ 0 and λ > 0".into()));
        }
        self.noise = Some(Noise {
            rms_lambda: rms_nm / lambda_nm,
            seed,
        });
        Ok(self)
    }

    pub fn kernel(&self) -> &ImpulseResponse {
        &self.kernel
    }

    pub fn slew_limit(&self) -> f64 {
        self.slew_limit
    }

    /// Slew limit as a position rate in λ/µs (2π of phase is one site).
    pub fn slew_lambda_per_us(&self) -> f64 {
        self.slew_limit * SITE_LAMBDA / (2.0 * PI)
    }
}

fn check_rate(signal: &Signal, kernel: &ImpulseResponse) -> Result<()> {
    if (signal.dt_us - kernel.dt_us).abs() > 1e-9 * kernel.dt_us {
        return Err(Error::Shape(format!(
            "signal sampled at {} µs, kernel at {} µs",
            signal.dt_us, kernel.dt_us
        )));
    }
    Ok(())
}

/// Position the plant actually produces for `drive`.
pub fn apply_plant(drive: &Signal, plant: &Plant) -> Result<Signal> {
    check_rate(drive, &plant.kernel)?;
    let mut out = plant.kernel.convolve(&drive.values);
    if plant.slew_limit.is_finite() {
        let step = plant.slew_lambda_per_us() * drive.dt_us;
        for i in 1..out.len() {
            let prev = out[i - 1];
            out[i] = prev + (out[i] - prev).clamp(-step, step);
        }
    }
    if let Some(noise) = plant.noise {
        if noise.rms_lambda > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
            let normal = Normal::new(0.0, noise.rms_lambda).expect("finite rms");
            for v in out.iter_mut() {
                *v += normal.sample(&mut rng);
            }
        }
    }
    Signal::new(drive.t0_us, drive.dt_us, out)
}

/// Drive whose linear response approximates `target`.
///
/// The increments of the target are divided by the kernel spectrum with
/// Tikhonov weight `reg`·max|H|², then summed back from the first target
/// value. The target should rest at both ends for longer than the kernel.
pub fn deconvolve(target: &Signal, kernel: &ImpulseResponse, reg: f64) -> Result<Signal> {
    check_rate(target, kernel)?;
    if !(reg >= 0.0) {
        return Err(Error::Domain(format!("regularization must be ≥ 0, got {reg}")));
    }
    let n = target.len();
    let m = (2 * (n + kernel.len())).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(m);
    let inv = planner.plan_fft_inverse(m);

    let mut h: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); m];
    for (k, v) in kernel.samples.iter().enumerate() {
        h[k] = Complex64::new(v * kernel.dt_us, 0.0);
    }
    fwd.process(&mut h);
    let mut v: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); m];
    for (slot, w) in v[1..n].iter_mut().zip(target.values.windows(2)) {
        *slot = Complex64::new(w[1] - w[0], 0.0);
    }
    fwd.process(&mut v);
    let peak = h.iter().fold(0.0f64, |a, z| a.max(z.norm_sqr()));
    let eps = reg * peak;
    for (vk, hk) in v.iter_mut().zip(&h) {
        let den = hk.norm_sqr() + eps;
        *vk = if den > 0.0 { *vk * hk.conj() / den } else { Complex64::new(0.0, 0.0) };
    }
    inv.process(&mut v);
    let mut x = target.values[0];
    let values = (0..n)
        .map(|i| {
            if i > 0 {
                x += v[i].re / m as f64;
            }
            x
        })
        .collect();
    Signal::new(target.t0_us, target.dt_us, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompensationConfig {
    pub gain: f64,
    pub max_iter: usize,
    pub reg: f64,
    /// Stop once the largest deviation falls below this, in λ.
    pub threshold: f64,
}

impl Default for CompensationConfig {
    fn default() -> Self {
        Self {
            gain: 0.4,
            max_iter: 10,
            reg: 1e-3,
            threshold: 1e-3 * SITE_LAMBDA,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Compensation {
    pub drive: Signal,
    /// Plant response to the final drive.
    pub output: Signal,
    /// Largest |output − target| in λ after each iteration.
    pub history: Vec<f64>,
    pub converged: bool,
}

/// Pre-distorts the drive until the plant reproduces `target`.
///
/// Each iteration measures the plant output, subtracts `gain` times the
/// deviation from the signal being inverted and deconvolves again. Three
/// consecutive increases of the residual abort with the history.
pub fn iterate_compensation(target: &Signal, plant: &Plant, config: &CompensationConfig) -> Result<Compensation> {
    if !(config.gain >= 0.0) || config.max_iter == 0 || !(config.threshold >= 0.0) {
        return Err(Error::Input("gain and threshold must be ≥ 0, max_iter positive".into()));
    }
    let mut pre = target.clone();
    let mut drive = deconvolve(&pre, &plant.kernel, config.reg)?;
    let mut history = Vec::with_capacity(config.max_iter);
    let mut rises = 0;
    loop {
        let output = apply_plant(&drive, plant)?;
        let residual = output.max_deviation(target)?;
        if history.last().is_some_and(|&prev| residual > prev) {
            rises += 1;
        } else {
            rises = 0;
        }
        history.push(residual);
        if rises >= 3 {
            return Err(Error::Instability { history });
        }
        let converged = residual < config.threshold;
        if converged || history.len() >= config.max_iter {
            return Ok(Compensation {
                drive,
                output,
                history,
                converged,
            });
        }
        for ((p, o), t) in pre.values.iter_mut().zip(&output.values).zip(&target.values) {
            *p -= config.gain * (o - t);
        }
        drive = deconvolve(&pre, &plant.kernel, config.reg)?;
    }
}

/// Transport fidelity when the lattice follows `output` instead of the
/// ideal trajectory; time zero of the signal is the start of the transport.
pub fn plant_fidelity(sim: &TransportSim, ideal: &Trajectory, output: &Signal) -> Result<f64> {
    let params = sim.params();
    let tau_us = ideal.tau() * params.time_unit_s()? * 1e6;
    let actual = output.to_trajectory(params, 0.0, tau_us)?;
    let psi = sim.evolve(&actual, sim.steps_for(ideal.tau()), usize::MAX, None);
    fidelity(&psi, &sim.target(ideal.d()))
}
