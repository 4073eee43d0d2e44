//! Transport trajectories x_trap(t) and their analytic properties.
//!
//! Every trajectory starts at rest at 0 and ends at `d`: x(t ≤ 0) = 0 and
//! x(t ≥ τ) = d. Discontinuities (the sudden displacements of the classical
//! ansatz) are represented exactly; the propagator samples the potential at
//! step midpoints so a jump never lands on an evaluation point.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{LatticeParams, SITE};

/// Samples used by [`project_to_fourier`].
pub const PROJECTION_SAMPLES: usize = 4096;
/// Upper bound on the automatically chosen Fourier cutoff.
pub const J_MAX_CAP: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryKind {
    Linear,
    Parabolic,
    AdiabaticSine,
    ClassicalAnsatz,
    Fourier,
    Sampled,
}

impl TrajectoryKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Linear => "linear",
            Self::Parabolic => "parabolic",
            Self::AdiabaticSine => "adiabatic_sine",
            Self::ClassicalAnsatz => "classical_ansatz",
            Self::Fourier => "fourier",
            Self::Sampled => "sampled",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Linear,
    Parabolic,
    AdiabaticSine,
    ClassicalAnsatz { delta_x: f64 },
    /// b_j for j = 1..=len
    Fourier { coeffs: Vec<f64> },
    Sampled { times: Vec<f64>, positions: Vec<f64> },
}

/// A conveyor-belt trajectory over `[0, tau]` covering distance `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TrajectoryRecord", into = "TrajectoryRecord")]
pub struct Trajectory {
    d: f64,
    tau: f64,
    shape: Shape,
}

/// JSON form: `{kind, d, tau, coefficients?, samples?, delta_x?}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryRecord {
    pub kind: TrajectoryKind,
    pub d: f64,
    pub tau: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<f64>>,
    /// `[t, x]` pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_x: Option<f64>,
}

impl TryFrom<TrajectoryRecord> for Trajectory {
    type Error = Error;

    fn try_from(r: TrajectoryRecord) -> Result<Self> {
        let need = |what: &str| Error::Input(format!("{} trajectory needs `{what}`", r.kind.name()));
        match r.kind {
            TrajectoryKind::Linear => Trajectory::linear(r.d, r.tau),
            TrajectoryKind::Parabolic => Trajectory::parabolic(r.d, r.tau),
            TrajectoryKind::AdiabaticSine => Trajectory::adiabatic_sine(r.d, r.tau),
            TrajectoryKind::ClassicalAnsatz => {
                let dx = r.delta_x.ok_or_else(|| need("delta_x"))?;
                Trajectory::with_jump(r.d, r.tau, dx)
            }
            TrajectoryKind::Fourier => {
                let c = r.coefficients.clone().ok_or_else(|| need("coefficients"))?;
                Trajectory::fourier(r.d, r.tau, c)
            }
            TrajectoryKind::Sampled => {
                let s = r.samples.as_ref().ok_or_else(|| need("samples"))?;
                let (t, x): (Vec<f64>, Vec<f64>) = s.iter().map(|p| (p[0], p[1])).unzip();
                let traj = Trajectory::sampled(t, x)?;
                if (traj.d - r.d).abs() > 1e-9 * r.d.abs().max(1.0)
                    || (traj.tau - r.tau).abs() > 1e-9 * r.tau.abs().max(1.0)
                {
                    return Err(Error::Input(
                        "sampled trajectory: d and tau must match the last sample".into(),
                    ));
                }
                Ok(traj)
            }
        }
    }
}

impl From<Trajectory> for TrajectoryRecord {
    fn from(t: Trajectory) -> Self {
        let mut r = TrajectoryRecord {
            kind: t.kind(),
            d: t.d,
            tau: t.tau,
            coefficients: None,
            samples: None,
            delta_x: None,
        };
        match t.shape {
            Shape::ClassicalAnsatz { delta_x } => r.delta_x = Some(delta_x),
            Shape::Fourier { coeffs } => r.coefficients = Some(coeffs),
            Shape::Sampled { times, positions } => {
                r.samples = Some(times.iter().zip(&positions).map(|(&t, &x)| [t, x]).collect())
            }
            _ => {}
        }
        r
    }
}

fn check_duration(tau: f64) -> Result<()> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::Domain(format!("duration must be positive, got {tau}")));
    }
    Ok(())
}

impl Trajectory {
    /// Constant speed d/τ.
    pub fn linear(d: f64, tau: f64) -> Result<Self> {
        check_duration(tau)?;
        Ok(Self { d, tau, shape: Shape::Linear })
    }

    /// Constant acceleration a = 4d/τ² for τ/2, then −a.
    pub fn parabolic(d: f64, tau: f64) -> Result<Self> {
        check_duration(tau)?;
        Ok(Self { d, tau, shape: Shape::Parabolic })
    }

    /// A·sin(2πt/τ) + d·t/τ with A = −d/(2π), at rest at both ends.
    pub fn adiabatic_sine(d: f64, tau: f64) -> Result<Self> {
        check_duration(tau)?;
        Ok(Self { d, tau, shape: Shape::AdiabaticSine })
    }

    /// Trap path that keeps a classical particle on the constant
    /// accelerate/decelerate schedule: jumps of +δx, −2δx and +δx at 0⁺, τ/2
    /// and τ⁻, with (λ/4π)·sin⁻¹((τ_CB/τ)²) = δx ≤ λ/8.
    pub fn classical_ansatz(d: f64, tau: f64, params: &LatticeParams) -> Result<Self> {
        check_duration(tau)?;
        let tcb = tau_cb(d, params);
        if tau < tcb * (1.0 - 1e-12) {
            return Err(Error::BelowClassicalLimit { tau, tau_cb: tcb });
        }
        let ratio = ((tcb / tau).powi(2)).min(1.0);
        let delta_x = 0.5 * ratio.asin() * d.signum();
        Self::with_jump(d, tau, delta_x)
    }

    fn with_jump(d: f64, tau: f64, delta_x: f64) -> Result<Self> {
        check_duration(tau)?;
        if delta_x.abs() > SITE / 4.0 + 1e-12 {
            return Err(Error::Domain(format!("jump {delta_x} exceeds λ/8")));
        }
        Ok(Self {
            d,
            tau,
            shape: Shape::ClassicalAnsatz { delta_x },
        })
    }

    /// d(1 − cos ν₁t)/2 + Σ_j b_j sin(ν_j t), ν_j = πj/τ; `coeffs[j−1]` = b_j.
    pub fn fourier(d: f64, tau: f64, coeffs: Vec<f64>) -> Result<Self> {
        check_duration(tau)?;
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Input("non-finite Fourier coefficient".into()));
        }
        Ok(Self {
            d,
            tau,
            shape: Shape::Fourier { coeffs },
        })
    }

    /// Piecewise-linear interpolation through `(times, positions)`.
    ///
    /// The time axis is shifted so the first sample sits at t = 0; τ is the
    /// last sample time and `d` the last position. Outside the samples the
    /// end values are held.
    pub fn sampled(times: Vec<f64>, positions: Vec<f64>) -> Result<Self> {
        if times.len() != positions.len() || times.len() < 2 {
            return Err(Error::Input("sampled trajectory needs ≥ 2 matching samples".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Input("sample times must increase strictly".into()));
        }
        let t0 = times[0];
        let times: Vec<f64> = times.iter().map(|t| t - t0).collect();
        let tau = *times.last().unwrap();
        let d = *positions.last().unwrap();
        Ok(Self {
            d,
            tau,
            shape: Shape::Sampled { times, positions },
        })
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn kind(&self) -> TrajectoryKind {
        match self.shape {
            Shape::Linear => TrajectoryKind::Linear,
            Shape::Parabolic => TrajectoryKind::Parabolic,
            Shape::AdiabaticSine => TrajectoryKind::AdiabaticSine,
            Shape::ClassicalAnsatz { .. } => TrajectoryKind::ClassicalAnsatz,
            Shape::Fourier { .. } => TrajectoryKind::Fourier,
            Shape::Sampled { .. } => TrajectoryKind::Sampled,
        }
    }

    pub fn coefficients(&self) -> Option<&[f64]> {
        match &self.shape {
            Shape::Fourier { coeffs } => Some(coeffs),
            _ => None,
        }
    }

    /// Jump size of the classical ansatz.
    pub fn jump(&self) -> Option<f64> {
        match self.shape {
            Shape::ClassicalAnsatz { delta_x } => Some(delta_x),
            _ => None,
        }
    }

    pub fn samples(&self) -> Option<(&[f64], &[f64])> {
        match &self.shape {
            Shape::Sampled { times, positions } => Some((times, positions)),
            _ => None,
        }
    }

    /// Same shape stretched to a new duration (Fourier coefficients are kept).
    pub fn with_duration(&self, tau: f64) -> Result<Self> {
        check_duration(tau)?;
        let shape = match &self.shape {
            Shape::Sampled { times, positions } => {
                let s = tau / self.tau;
                Shape::Sampled {
                    times: times.iter().map(|t| t * s).collect(),
                    positions: positions.clone(),
                }
            }
            other => other.clone(),
        };
        Ok(Self { d: self.d, tau, shape })
    }

    /// x_trap(t).
    pub fn position(&self, t: f64) -> f64 {
        let (d, tau) = (self.d, self.tau);
        if let Shape::Sampled { times, positions } = &self.shape {
            return interp(times, positions, t);
        }
        if t <= 0.0 {
            return 0.0;
        }
        if t >= tau {
            return d;
        }
        let s = t / tau;
        match &self.shape {
            Shape::Linear => d * s,
            Shape::Parabolic => {
                if s <= 0.5 {
                    2.0 * d * s * s
                } else {
                    d - 2.0 * d * (1.0 - s) * (1.0 - s)
                }
            }
            Shape::AdiabaticSine => -d / (2.0 * PI) * (2.0 * PI * s).sin() + d * s,
            Shape::ClassicalAnsatz { delta_x } => {
                if s < 0.5 {
                    2.0 * d * s * s + delta_x
                } else if s > 0.5 {
                    d - 2.0 * d * (1.0 - s) * (1.0 - s) - delta_x
                } else {
                    0.5 * d
                }
            }
            Shape::Fourier { coeffs } => fourier_eval(coeffs, d, tau, t),
            Shape::Sampled { .. } => unreachable!(),
        }
    }

    /// dx_trap/dt away from jumps (one-sided at kinks, 0 outside [0, τ]).
    pub fn velocity(&self, t: f64) -> f64 {
        let (d, tau) = (self.d, self.tau);
        if let Shape::Sampled { times, positions } = &self.shape {
            return interp_slope(times, positions, t);
        }
        if t < 0.0 || t > tau {
            return 0.0;
        }
        let s = t / tau;
        match &self.shape {
            Shape::Linear => d / tau,
            Shape::Parabolic | Shape::ClassicalAnsatz { .. } => {
                if s <= 0.5 {
                    4.0 * d * s / tau
                } else {
                    4.0 * d * (1.0 - s) / tau
                }
            }
            Shape::AdiabaticSine => d / tau * (1.0 - (2.0 * PI * s).cos()),
            Shape::Fourier { coeffs } => {
                let nu1 = PI / tau;
                let mut v = 0.5 * d * nu1 * (nu1 * t).sin();
                for (j, b) in coeffs.iter().enumerate() {
                    let nu = nu1 * (j + 1) as f64;
                    v += b * nu * (nu * t).cos();
                }
                v
            }
            Shape::Sampled { .. } => unreachable!(),
        }
    }

    /// Sudden displacements as (time, size) pairs.
    pub fn jumps(&self) -> Vec<(f64, f64)> {
        match self.shape {
            Shape::ClassicalAnsatz { delta_x } if delta_x != 0.0 => vec![
                (0.0, delta_x),
                (0.5 * self.tau, -2.0 * delta_x),
                (self.tau, delta_x),
            ],
            _ => Vec::new(),
        }
    }
}

fn interp(times: &[f64], values: &[f64], t: f64) -> f64 {
    if t <= times[0] {
        return values[0];
    }
    let last = times.len() - 1;
    if t >= times[last] {
        return values[last];
    }
    let k = times.partition_point(|&s| s <= t) - 1;
    let w = (t - times[k]) / (times[k + 1] - times[k]);
    values[k] + w * (values[k + 1] - values[k])
}

fn interp_slope(times: &[f64], values: &[f64], t: f64) -> f64 {
    if t < times[0] || t > times[times.len() - 1] {
        return 0.0;
    }
    let k = (times.partition_point(|&s| s <= t).max(1) - 1).min(times.len() - 2);
    (values[k + 1] - values[k]) / (times[k + 1] - times[k])
}

/// d(1 − cos ν₁t)/2 + Σ b_j sin(ν_j t), clamped to 0 / d outside [0, τ].
pub fn fourier_eval(coeffs: &[f64], d: f64, tau: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= tau {
        return d;
    }
    let nu1 = PI / tau;
    // sin(jθ) by the Chebyshev recurrence
    let theta = nu1 * t;
    let (s1, c1) = theta.sin_cos();
    let mut x = 0.5 * d * (1.0 - c1);
    let (mut s_prev, mut s_cur) = (0.0, s1);
    for b in coeffs {
        x += b * s_cur;
        let next = 2.0 * c1 * s_cur - s_prev;
        s_prev = s_cur;
        s_cur = next;
    }
    x
}

/// τ_HO·√(2n/π) with n = d/(λ/2).
pub fn tau_cb(d: f64, params: &LatticeParams) -> f64 {
    let n = d.abs() / SITE;
    params.tau_ho() * (2.0 * n / PI).sqrt()
}

/// Protocols with a closed-form worst-case duration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeProtocol {
    Linear,
    Parabolic,
    Adiabatic,
}

/// Shortest duration that guarantees fidelity `fidelity` for any timing in
/// the harmonic approximation.
pub fn envelope_duration(
    protocol: EnvelopeProtocol,
    fidelity: f64,
    l_qgt: f64,
    params: &LatticeParams,
) -> Result<f64> {
    if !(fidelity > 0.0 && fidelity < 1.0) {
        return Err(Error::Domain(format!("target fidelity must lie in (0, 1), got {fidelity}")));
    }
    let neg_log = -fidelity.ln();
    let t_ho = params.tau_ho();
    Ok(match protocol {
        EnvelopeProtocol::Linear => t_ho / PI * l_qgt / neg_log.sqrt(),
        EnvelopeProtocol::Parabolic => t_ho * 2.0 / PI * l_qgt.sqrt() / neg_log.powf(0.25),
        EnvelopeProtocol::Adiabatic => {
            t_ho * (2.0 / 3.0 + (l_qgt * l_qgt / (PI * PI * neg_log)).cbrt()).sqrt()
        }
    })
}

/// Inverse of [`envelope_duration`]: worst-case fidelity at duration `tau`.
pub fn envelope_fidelity(protocol: EnvelopeProtocol, tau: f64, l_qgt: f64, params: &LatticeParams) -> f64 {
    let r = tau / params.tau_ho();
    let neg_log = match protocol {
        EnvelopeProtocol::Linear => (l_qgt / (PI * r)).powi(2),
        EnvelopeProtocol::Parabolic => (2.0 / PI).powi(4) * l_qgt * l_qgt / r.powi(4),
        EnvelopeProtocol::Adiabatic => {
            let y = r * r - 2.0 / 3.0;
            if y <= 0.0 {
                return 0.0;
            }
            l_qgt * l_qgt / (PI * PI * y.powi(3))
        }
    };
    (-neg_log).exp()
}

/// Least-squares fit of a trajectory onto the sine series.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// b_1 … b_jmax; excluded (odd) indices are zero.
    pub coeffs: Vec<f64>,
    /// Root-mean-square reconstruction error over the sample grid.
    pub rms_error: f64,
    pub max_error: f64,
}

impl Projection {
    pub fn trajectory(&self, d: f64, tau: f64) -> Result<Trajectory> {
        Trajectory::fourier(d, tau, self.coeffs.clone())
    }
}

/// Fits b_j (j ≤ `j_max`, only even j when `even_only`) to the residual
/// x(t) − d(1 − cos ν₁t)/2 on uniform samples.
pub fn project_to_fourier(traj: &Trajectory, j_max: usize, even_only: bool) -> Result<Projection> {
    if j_max == 0 {
        return Err(Error::Input("j_max must be at least 1".into()));
    }
    let (d, tau) = (traj.d(), traj.tau());
    let m = PROJECTION_SAMPLES;
    let active: Vec<usize> = (1..=j_max).filter(|j| !even_only || j % 2 == 0).collect();
    if active.is_empty() {
        return Err(Error::Input("no Fourier index selected".into()));
    }
    let nu1 = PI / tau;
    let times: Vec<f64> = (0..m).map(|i| tau * i as f64 / (m - 1) as f64).collect();
    let rhs = DVector::from_iterator(
        m,
        times
            .iter()
            .map(|&t| traj.position(t) - 0.5 * d * (1.0 - (nu1 * t).cos())),
    );
    let a = DMatrix::from_fn(m, active.len(), |i, c| (nu1 * active[c] as f64 * times[i]).sin());
    let sol = a
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::Input(format!("projection failed: {e}")))?;
    let mut coeffs = vec![0.0; j_max];
    for (c, &j) in active.iter().enumerate() {
        coeffs[j - 1] = sol[c];
    }
    let resid = &a * &sol - &rhs;
    let rms_error = (resid.norm_squared() / m as f64).sqrt();
    let max_error = resid.amax();
    Ok(Projection {
        coeffs,
        rms_error,
        max_error,
    })
}

/// Actuator limits for feasible trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeasibilityLimits {
    /// Phase slew limit in rad/µs.
    pub max_slew: f64,
    /// Control bandwidth in Hz.
    pub bandwidth_hz: f64,
}

impl Default for FeasibilityLimits {
    fn default() -> Self {
        Self {
            max_slew: 0.84,
            bandwidth_hz: 800e3,
        }
    }
}

impl FeasibilityLimits {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_slew > 0.0) || !(self.bandwidth_hz > 0.0) {
            return Err(Error::Domain("feasibility limits must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    /// max |ẋ| in recoil units.
    pub max_velocity: f64,
    /// Same as a phase slew in rad/µs (∞ when the trajectory jumps).
    pub max_slew: f64,
    pub slew_ok: bool,
    /// Highest Fourier component in Hz, for band-limited (Fourier) trajectories.
    pub highest_frequency_hz: Option<f64>,
    pub bandwidth_ok: bool,
    pub feasible: bool,
}

/// Largest |ẋ| sampled on a fine grid; infinite if the trajectory jumps.
pub fn max_speed(traj: &Trajectory, samples: usize) -> f64 {
    if !traj.jumps().is_empty() {
        return f64::INFINITY;
    }
    if let Some((t, x)) = traj.samples() {
        return t
            .windows(2)
            .zip(x.windows(2))
            .map(|(tw, xw)| ((xw[1] - xw[0]) / (tw[1] - tw[0])).abs())
            .fold(0.0, f64::max);
    }
    let tau = traj.tau();
    (0..=samples)
        .map(|i| traj.velocity(tau * i as f64 / samples as f64).abs())
        .fold(0.0, f64::max)
}

/// Checks the slew rate (φ = 4πx/λ) and bandwidth of a trajectory.
pub fn feasibility_check(
    traj: &Trajectory,
    limits: &FeasibilityLimits,
    params: &LatticeParams,
) -> Result<FeasibilityReport> {
    limits.validate()?;
    let max_velocity = max_speed(traj, 8192);
    let max_slew = if max_velocity.is_finite() {
        params.slew_from_velocity(max_velocity)?
    } else {
        f64::INFINITY
    };
    let slew_ok = max_slew <= limits.max_slew * (1.0 + 1e-9);
    let highest_frequency_hz = match traj.coefficients() {
        Some(c) => {
            let unit = params.time_unit_s()?;
            let j = c.iter().rposition(|&b| b != 0.0).map_or(1, |k| k + 1);
            // ν_j/(2π) = j/(2τ)
            Some(j as f64 / (2.0 * traj.tau() * unit))
        }
        None => None,
    };
    let bandwidth_ok = highest_frequency_hz.is_none_or(|f| f <= limits.bandwidth_hz * (1.0 + 1e-12));
    Ok(FeasibilityReport {
        max_velocity,
        max_slew,
        slew_ok,
        highest_frequency_hz,
        bandwidth_ok,
        feasible: slew_ok && bandwidth_ok,
    })
}

/// Largest j with ν_j ≤ 2π·bandwidth, capped at [`J_MAX_CAP`] and at least 2.
///
/// Logs a warning when the cap leaves the highest frequency below the
/// trap-depth frequency U₀/h.
pub fn default_j_max(tau: f64, params: &LatticeParams, limits: &FeasibilityLimits) -> usize {
    let Ok(unit) = params.time_unit_s() else {
        return J_MAX_CAP;
    };
    let tau_s = tau * unit;
    let by_bandwidth = (2.0 * limits.bandwidth_hz * tau_s + 1e-9).floor() as usize;
    let j = by_bandwidth.clamp(2, J_MAX_CAP);
    let f_top = j as f64 / (2.0 * tau_s);
    if let Some(e_rec) = params.e_rec_hz {
        let depth_hz = params.u0 * e_rec;
        if f_top < depth_hz {
            log::warn!(
                "highest control frequency {:.0} Hz is below U0/h = {:.0} Hz (j_max = {j})",
                f_top,
                depth_hz
            );
        }
    }
    j
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cs(u0: f64) -> LatticeParams {
        LatticeParams::cesium(u0).unwrap()
    }

    #[test]
    fn linear_basics() {
        let t = Trajectory::linear(PI, 2.0).unwrap();
        assert_relative_eq!(t.position(1.0), PI / 2.0);
        assert_relative_eq!(t.velocity(0.3), PI / 2.0);
        assert_eq!(t.position(-1.0), 0.0);
        assert_eq!(t.position(3.0), PI);
        assert!(Trajectory::linear(PI, 0.0).is_err());
    }

    #[test]
    fn parabolic_acceleration() {
        let (d, tau) = (PI, 1.3);
        let t = Trajectory::parabolic(d, tau).unwrap();
        assert_relative_eq!(t.position(tau / 2.0), d / 2.0, max_relative = 1e-14);
        // second difference gives ±4d/τ²
        let h = 1e-4;
        for &(s, sign) in &[(0.2, 1.0), (0.8, -1.0)] {
            let tt = s * tau;
            let acc = (t.position(tt + h) - 2.0 * t.position(tt) + t.position(tt - h)) / (h * h);
            assert!((acc - sign * 4.0 * d / (tau * tau)).abs() < 1e-4, "{acc}");
        }
    }

    #[test]
    fn adiabatic_ends_at_rest() {
        let t = Trajectory::adiabatic_sine(PI, 0.7).unwrap();
        assert!(t.velocity(0.0).abs() < 1e-12);
        assert!(t.velocity(0.7).abs() < 1e-12);
        assert_relative_eq!(t.position(0.35), PI / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn tau_cb_values() {
        let p = cs(150.0);
        assert_relative_eq!(tau_cb(PI, &p) / p.tau_ho(), 0.797_884_56, max_relative = 1e-8);
        assert_relative_eq!(tau_cb(2.0 * PI, &p) / p.tau_ho(), std::f64::consts::FRAC_2_SQRT_PI, max_relative = 1e-12);
        assert_relative_eq!(tau_cb(4.0 * PI, &p) / tau_cb(PI, &p), 2.0, max_relative = 1e-14);
    }

    #[test]
    fn classical_ansatz_jumps() {
        let p = cs(150.0);
        let tcb = tau_cb(PI, &p);
        let at_limit = Trajectory::classical_ansatz(PI, tcb, &p).unwrap();
        assert_relative_eq!(at_limit.jump().unwrap(), PI / 4.0, max_relative = 1e-12);
        let t = Trajectory::classical_ansatz(PI, 2f64.sqrt() * tcb, &p).unwrap();
        // λ/24 = 2π/24
        assert_relative_eq!(t.jump().unwrap(), 2.0 * PI / 24.0, max_relative = 1e-10);
        let dx = t.jump().unwrap();
        let sizes: Vec<f64> = t.jumps().iter().map(|j| j.1).collect();
        assert_eq!(sizes, vec![dx, -2.0 * dx, dx]);
        let eps = 1e-12;
        assert_relative_eq!(t.position(eps), dx, epsilon = 1e-9);
        assert_relative_eq!(t.position(t.tau() - eps), PI - dx, epsilon = 1e-9);
        let err = Trajectory::classical_ansatz(PI, 0.9 * tcb, &p).unwrap_err();
        assert!(matches!(err, Error::BelowClassicalLimit { .. }));
    }

    #[test]
    fn classical_ansatz_moves_point_particle_without_slosh() {
        // m = ½ ⇒ ẍ = −2 u0 sin(2(x − x_trap))
        let p = cs(150.0);
        let tau = 1.2 * p.tau_ho();
        let traj = Trajectory::classical_ansatz(PI, tau, &p).unwrap();
        let acc = |t: f64, x: f64| -2.0 * p.u0 * (2.0 * (x - traj.position(t))).sin();
        let n = 200_000;
        let h = tau / n as f64;
        let (mut x, mut v) = (0.0f64, 0.0f64);
        for k in 0..n {
            // RK4 on a piecewise-smooth force; jumps sit on step edges
            let t = k as f64 * h + 1e-15;
            let a1 = acc(t, x);
            let (x2, v2) = (x + 0.5 * h * v, v + 0.5 * h * a1);
            let a2 = acc(t + 0.5 * h, x2);
            let (x3, v3) = (x + 0.5 * h * v2, v + 0.5 * h * a2);
            let a3 = acc(t + 0.5 * h, x3);
            let (x4, v4) = (x + h * v3, v + h * a3);
            let a4 = acc(t + h - 2e-15, x4);
            x += h / 6.0 * (v + 2.0 * v2 + 2.0 * v3 + v4);
            v += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        }
        assert!((x - PI).abs() < 1e-6, "{}", x - PI);
        assert!(v.abs() < 1e-6, "{v}");
    }

    #[test]
    fn envelope_values() {
        let p = cs(150.0);
        let f = (-1.0f64).exp();
        let t = |proto| envelope_duration(proto, f, 11.0, &p).unwrap() / p.tau_ho();
        assert_relative_eq!(t(EnvelopeProtocol::Linear), 11.0 / PI, max_relative = 1e-12);
        assert!((t(EnvelopeProtocol::Linear) - 3.50).abs() < 0.01);
        assert!((t(EnvelopeProtocol::Parabolic) - 2.11).abs() < 0.01);
        assert!((t(EnvelopeProtocol::Adiabatic) - 1.72).abs() < 0.01);
        assert!(envelope_duration(EnvelopeProtocol::Linear, 1.0, 11.0, &p).is_err());
        assert!(envelope_duration(EnvelopeProtocol::Linear, 0.0, 11.0, &p).is_err());
        for proto in [EnvelopeProtocol::Linear, EnvelopeProtocol::Parabolic, EnvelopeProtocol::Adiabatic] {
            let tau = envelope_duration(proto, 0.9, 7.8, &p).unwrap();
            assert_relative_eq!(envelope_fidelity(proto, tau, 7.8, &p), 0.9, max_relative = 1e-10);
        }
    }

    #[test]
    fn envelope_ordering_flips_with_distance() {
        let p = cs(150.0);
        let f = 0.99;
        let lin = |l| envelope_duration(EnvelopeProtocol::Linear, f, l, &p).unwrap();
        let par = |l| envelope_duration(EnvelopeProtocol::Parabolic, f, l, &p).unwrap();
        assert!(lin(50.0) > par(50.0));
        assert!(lin(0.1) < par(0.1));
    }

    #[test]
    fn fourier_boundaries() {
        let c = vec![0.1, -0.3, 0.05, 0.2];
        assert_eq!(fourier_eval(&c, PI, 1.0, 0.0), 0.0);
        assert_relative_eq!(fourier_eval(&[0.0; 4], PI, 1.0, 1.0), PI);
        // interior limits agree with the clamped ends
        assert!(fourier_eval(&c, PI, 1.0, 1e-12).abs() < 1e-10);
        assert!((fourier_eval(&c, PI, 1.0, 1.0 - 1e-12) - PI).abs() < 1e-10);
        // Chebyshev recurrence against direct sines
        let t = 0.377;
        let direct = 0.5 * PI * (1.0 - (PI * t).cos())
            + c.iter().enumerate().map(|(j, b)| b * (PI * (j + 1) as f64 * t).sin()).sum::<f64>();
        assert_relative_eq!(fourier_eval(&c, PI, 1.0, t), direct, max_relative = 1e-13);
    }

    #[test]
    fn projection_recovers_fourier_coefficients() {
        let c = vec![0.0, 0.21, 0.0, -0.07, 0.0, 0.013];
        let t = Trajectory::fourier(PI, 0.4, c.clone()).unwrap();
        let proj = project_to_fourier(&t, 6, false).unwrap();
        for (a, b) in proj.coeffs.iter().zip(&c) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        assert!(proj.rms_error < 1e-12);
    }

    #[test]
    fn projection_of_ansatz_improves_and_stays_even() {
        let p = cs(150.0);
        let t = Trajectory::classical_ansatz(PI, 1.2 * p.tau_ho(), &p).unwrap();
        let mut last = f64::INFINITY;
        for j in [2, 4, 8, 16, 24] {
            let proj = project_to_fourier(&t, j, false).unwrap();
            assert!(proj.rms_error < last, "j={j}");
            last = proj.rms_error;
            for (k, b) in proj.coeffs.iter().enumerate() {
                if (k + 1) % 2 == 1 {
                    assert!(b.abs() < 1e-10, "odd b_{} = {b}", k + 1);
                }
            }
        }
    }

    #[test]
    fn point_symmetry_with_even_coefficients() {
        let c = vec![0.0, 0.3, 0.0, -0.1, 0.0, 0.04];
        let traj = Trajectory::fourier(PI, 1.0, c).unwrap();
        for i in 0..=50 {
            let t = i as f64 / 50.0;
            assert!((traj.position(t) - (PI - traj.position(1.0 - t))).abs() < 1e-12);
        }
    }

    #[test]
    fn feasibility_flags() {
        let p = cs(150.0);
        let limits = FeasibilityLimits::default();
        let lin = Trajectory::linear(PI, p.tau_ho()).unwrap();
        let rep = feasibility_check(&lin, &limits, &p).unwrap();
        // one site in τ_HO = 20.4 µs is 0.049 sites/µs, under the 0.13 sites/µs limit
        let sites_per_us = rep.max_slew / (2.0 * PI);
        assert!((sites_per_us - 1.0 / 20.41).abs() < 1e-3, "{sites_per_us}");
        assert!(rep.slew_ok);
        let still = Trajectory::fourier(0.0, 1.0, vec![0.0; 4]).unwrap();
        let rep = feasibility_check(&still, &limits, &p).unwrap();
        assert_eq!(rep.max_slew, 0.0);
        assert!(rep.feasible);
        // j = 40 in 20 µs is 1 MHz
        let mut c = vec![0.0; 40];
        c[39] = 1e-4;
        let fast = Trajectory::fourier(PI, p.tau_ho(), c).unwrap();
        let rep = feasibility_check(&fast, &limits, &p).unwrap();
        assert!(!rep.bandwidth_ok && !rep.feasible);
        let ansatz = Trajectory::classical_ansatz(PI, p.tau_ho(), &p).unwrap();
        assert!(!feasibility_check(&ansatz, &limits, &p).unwrap().slew_ok);
    }

    #[test]
    fn j_max_follows_bandwidth() {
        let p = cs(150.0);
        let limits = FeasibilityLimits::default();
        // 2 · 800 kHz · 10.2 µs ≈ 16
        assert_eq!(default_j_max(0.5 * p.tau_ho(), &p, &limits), 16);
        assert_eq!(default_j_max(2.0 * p.tau_ho(), &p, &limits), J_MAX_CAP);
    }

    #[test]
    fn json_round_trip() {
        let p = cs(150.0);
        for t in [
            Trajectory::linear(PI, 0.3).unwrap(),
            Trajectory::classical_ansatz(PI, 0.3, &p).unwrap(),
            Trajectory::fourier(PI, 0.3, vec![0.0, 0.1]).unwrap(),
            Trajectory::sampled(vec![0.0, 0.1, 0.3], vec![0.0, 1.0, PI]).unwrap(),
        ] {
            let s = serde_json::to_string(&t).unwrap();
            let back: Trajectory = serde_json::from_str(&s).unwrap();
            assert_eq!(back, t);
        }
        let bad = r#"{"kind":"fourier","d":3.0,"tau":1.0}"#;
        assert!(serde_json::from_str::<Trajectory>(bad).is_err());
        let unknown = r#"{"kind":"linear","d":3.0,"tau":1.0,"speed":2}"#;
        assert!(serde_json::from_str::<Trajectory>(unknown).is_err());
    }

    #[test]
    fn sampled_interpolates() {
        let t = Trajectory::sampled(vec![1.0, 2.0, 3.0], vec![0.0, 1.0, 3.0]).unwrap();
        assert_eq!(t.tau(), 2.0);
        assert_eq!(t.d(), 3.0);
        assert_relative_eq!(t.position(0.5), 0.5);
        assert_relative_eq!(t.position(1.5), 2.0);
        assert_relative_eq!(t.velocity(1.5), 2.0);
        assert_eq!(t.position(5.0), 3.0);
    }
}
