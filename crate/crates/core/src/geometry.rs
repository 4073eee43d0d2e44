//! Geometric and energetic quantities of a transport and the speed-limit
//! bounds built from them.
//!
//! Lengths are Fubini–Study angles (dimensionless), energies in E_rec and
//! times in ℏ/E_rec, so ℓ = ∫ΔE dt holds without further constants.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Conveyor, Hamiltonian, Potential};
use crate::error::{Error, Result};
use crate::grid::WaveFunction;
use crate::lattice::{LatticeParams, SITE};
use crate::protocols::{tau_cb, Trajectory};
use crate::transport::TransportSim;

/// Adjacent samples must overlap at least this much.
pub const MIN_OVERLAP: f64 = 0.99;
/// Default state-sampling stride in propagation steps.
pub const DEFAULT_STRIDE: usize = 4;
/// Largest relative change of ℓ between sampling every other recorded state
/// and every state. The chord sum converges quadratically, so halving the
/// stride once more moves ℓ by about a quarter of this.
pub const LENGTH_TOLERANCE: f64 = 2e-3;

/// Fubini–Study angle arccos|⟨a|b⟩| between normalized states, evaluated
/// as atan2(‖b − ⟨a|b⟩a‖, |⟨a|b⟩|) to stay accurate near unit overlap.
pub fn fs_distance(a: &WaveFunction, b: &WaveFunction) -> Result<f64> {
    let c = a.inner(b)?;
    let dx = a.grid().dx();
    let perp: f64 = a
        .amps()
        .iter()
        .zip(b.amps())
        .map(|(x, y)| (y - x * c).norm_sqr())
        .sum::<f64>()
        * dx;
    Ok(perp.sqrt().atan2(c.norm()))
}

/// Σ_k arccos|⟨ψ_{k+1}|ψ_k⟩| along a time-ordered state sequence.
pub fn path_length(states: &[WaveFunction]) -> Result<f64> {
    if states.len() < 2 {
        return Err(Error::Input("path length needs at least two states".into()));
    }
    let mut total = 0.0;
    for w in states.windows(2) {
        let overlap = w[0].inner(&w[1])?.norm();
        if overlap < MIN_OVERLAP {
            return Err(Error::Resolution {
                overlap,
                min: MIN_OVERLAP,
            });
        }
        total += fs_distance(&w[0], &w[1])?;
    }
    Ok(total)
}

/// Trapezoidal time average of `values` over `times`.
pub fn time_average(times: &[f64], values: &[f64]) -> Result<f64> {
    if times.len() != values.len() || times.len() < 2 {
        return Err(Error::Shape("time average needs ≥ 2 matched samples".into()));
    }
    let span = times[times.len() - 1] - times[0];
    if !(span > 0.0) {
        return Err(Error::Input("samples must span a positive time".into()));
    }
    let area: f64 = times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum();
    Ok(area / span)
}

/// Instantaneous ΔE(t) = ‖(H(t) − ⟨H⟩)ψ(t)‖ at each sample.
pub fn instantaneous_spread(
    times: &[f64],
    states: &[WaveFunction],
    potential: &dyn Potential,
) -> Result<Vec<f64>> {
    if times.len() != states.len() {
        return Err(Error::Shape("times and states differ in length".into()));
    }
    let mut v = Vec::new();
    times
        .iter()
        .zip(states)
        .map(|(&t, psi)| {
            v.resize(psi.grid().len(), 0.0);
            potential.fill(t, &mut v);
            Ok(Hamiltonian::new(psi.grid(), &v).moments(psi).1)
        })
        .collect()
}

/// Time-averaged energy uncertainty.
pub fn energy_spread(times: &[f64], states: &[WaveFunction], potential: &dyn Potential) -> Result<f64> {
    time_average(times, &instantaneous_spread(times, states, potential)?)
}

/// f(ξ) = √(1 + ξ²) + ξ²·arcsch(ξ), with f(0) = 1.
pub fn f_factor(xi: f64) -> Result<f64> {
    if !(xi >= 0.0) {
        return Err(Error::Domain(format!("f(ξ) needs ξ ≥ 0, got {xi}")));
    }
    if xi == 0.0 {
        return Ok(1.0);
    }
    if xi.is_infinite() {
        return Err(Error::Domain("f(ξ) diverges for infinite ξ".into()));
    }
    Ok((1.0 + xi * xi).sqrt() + xi * xi * (1.0 / xi).asinh())
}

/// Harmonic-approximation geodesic length d·Δp = d/(2Δx).
pub fn l_qgt(d: f64, params: &LatticeParams) -> f64 {
    d.abs() * params.delta_p()
}

/// ∫ ds_QGT along rigid displacements of `ground` from 0 to `d`, with
/// ds² = 1 − |⟨ψ₀(x + δ)|ψ₀(x)⟩|², summed over `steps` shifts.
pub fn l_qgt_exact(ground: &WaveFunction, d: f64, steps: usize) -> Result<f64> {
    if steps == 0 {
        return Err(Error::Input("at least one displacement step is needed".into()));
    }
    let delta = d / steps as f64;
    let mut prev = ground.clone();
    let mut total = 0.0;
    for k in 1..=steps {
        let next = ground.translated(k as f64 * delta);
        let c = prev.inner(&next)?.norm_sqr().min(1.0);
        total += (1.0 - c).sqrt();
        prev = next;
    }
    Ok(total)
}

/// Coherent-state estimate of the path length, (d/2Δx)·f(τ_HO/(πτ)).
pub fn l_qb_estimate(d: f64, tau: f64, params: &LatticeParams) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("duration must be positive, got {tau}")));
    }
    Ok(l_qgt(d, params) * f_factor(params.tau_ho() / (std::f64::consts::PI * tau))?)
}

/// Upper bound on the time-averaged energy uncertainty,
/// (ℓ_QGT/τ)·f(τ/(2n·τ_HO)) with n = d/(λ/2).
pub fn delta_e_upper(d: f64, tau: f64, params: &LatticeParams) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("duration must be positive, got {tau}")));
    }
    let n = d.abs() / SITE;
    if n == 0.0 {
        return Err(Error::Domain("distance must be non-zero".into()));
    }
    Ok(l_qgt(d, params) / tau * f_factor(tau / (2.0 * n * params.tau_ho()))?)
}

/// arccos|⟨ψ_t|ψ_i⟩| / ΔE; infinite when ΔE = 0.
pub fn mandelstam_tamm_time(init: &WaveFunction, target: &WaveFunction, delta_e: f64) -> Result<f64> {
    let ell_geo = fs_distance(init, target)?;
    Ok(mandelstam_tamm_from(ell_geo, delta_e))
}

pub fn mandelstam_tamm_from(ell_geo: f64, delta_e: f64) -> f64 {
    if delta_e <= 0.0 {
        f64::INFINITY
    } else {
        ell_geo / delta_e
    }
}

/// Coherent-state transport model: x̄(t) accelerates and decelerates
/// uniformly and α = x̄/(2Δx) + i·m·ẋ̄/(2Δp).
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentModel {
    pub times: Vec<f64>,
    pub alpha: Vec<Complex64>,
    /// ∫|α̇|dt by quadrature.
    pub ell: f64,
    /// Closed form (d/2Δx)·f(τ_HO/(πτ)).
    pub ell_closed: f64,
}

/// Mean position of the coherent model.
pub fn coherent_position(d: f64, tau: f64, t: f64) -> f64 {
    let s = (t / tau).clamp(0.0, 1.0);
    if s <= 0.5 {
        2.0 * d * s * s
    } else {
        -d + 4.0 * d * s - 2.0 * d * s * s
    }
}

/// Mean velocity of the coherent model.
pub fn coherent_velocity(d: f64, tau: f64, t: f64) -> f64 {
    let s = (t / tau).clamp(0.0, 1.0);
    if s <= 0.5 {
        4.0 * d * s / tau
    } else {
        4.0 * d * (1.0 - s) / tau
    }
}

pub fn coherent_model(d: f64, tau: f64, params: &LatticeParams, samples: usize) -> Result<CoherentModel> {
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("duration must be positive, got {tau}")));
    }
    let n = samples.max(2);
    let (dx, dp) = (params.delta_x(), params.delta_p());
    let times: Vec<f64> = (0..=n).map(|k| tau * k as f64 / n as f64).collect();
    // m = ½ in recoil units
    let alpha: Vec<Complex64> = times
        .iter()
        .map(|&t| {
            Complex64::new(
                coherent_position(d, tau, t) / (2.0 * dx),
                0.5 * coherent_velocity(d, tau, t) / (2.0 * dp),
            )
        })
        .collect();
    // |α̇| is smooth on each half, so Simpson's rule per half
    let acc = 4.0 * d / (tau * tau);
    let speed = |t: f64| {
        let re = coherent_velocity(d, tau, t) / (2.0 * dx);
        let im = 0.5 * acc / (2.0 * dp);
        re.hypot(im)
    };
    let half = n / 2;
    let simpson = |a: f64, b: f64| {
        let m = 2 * half.max(1);
        let h = (b - a) / m as f64;
        let mut s = speed(a) + speed(b);
        for k in 1..m {
            s += speed(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    };
    let ell = simpson(0.0, 0.5 * tau) + simpson(0.5 * tau, tau);
    Ok(CoherentModel {
        times,
        alpha,
        ell,
        ell_closed: l_qb_estimate(d, tau, params)?,
    })
}

/// States and instantaneous spreads logged along one transport.
#[derive(Debug, Clone)]
pub struct RunLog {
    pub d: f64,
    pub tau: f64,
    pub params: LatticeParams,
    pub times: Vec<f64>,
    pub states: Vec<WaveFunction>,
    /// ΔE(t) at each sample.
    pub delta_e: Vec<f64>,
    /// Δp·|2⟨p⟩| (kinetic) and Δx·|⟨∂U/∂x⟩| (potential) at each sample.
    pub delta_k: Vec<f64>,
    pub delta_u: Vec<f64>,
    pub init: WaveFunction,
    pub target: WaveFunction,
    pub stride: usize,
}

/// Propagates `traj`, keeping every `stride`-th state. Halves the stride
/// while adjacent samples overlap less than [`MIN_OVERLAP`] or the path
/// length is not converged to [`LENGTH_TOLERANCE`].
pub fn record_run(sim: &TransportSim, traj: &Trajectory, stride: usize) -> Result<RunLog> {
    let steps = sim.steps_for(traj.tau());
    let mut stride = stride.max(1);
    loop {
        let (times, states) = sim.record(traj, steps, stride);
        let coarse = states
            .windows(2)
            .map(|w| w[0].inner(&w[1]).map(|c| c.norm()))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .any(|o| o < MIN_OVERLAP);
        if coarse && stride > 1 {
            stride /= 2;
            continue;
        }
        if stride > 1 && states.len() > 2 {
            let ell = path_length(&states)?;
            if (ell - every_other_length(&states)?).abs() > LENGTH_TOLERANCE * ell {
                stride /= 2;
                continue;
            }
        }
        let params = *sim.params();
        let grid = sim.grid().clone();
        let pot = Conveyor::new(&grid, params.u0, |t| traj.position(t));
        let delta_e = instantaneous_spread(&times, &states, &pot)?;
        let mut delta_k = Vec::with_capacity(states.len());
        let mut delta_u = Vec::with_capacity(states.len());
        for (&t, psi) in times.iter().zip(&states) {
            let (k, u) = split_spread(psi, params.u0, traj.position(t));
            delta_k.push(k);
            delta_u.push(u);
        }
        return Ok(RunLog {
            d: traj.d(),
            tau: traj.tau(),
            params,
            times,
            states,
            delta_e,
            delta_k,
            delta_u,
            init: sim.ground().clone(),
            target: sim.target(traj.d()),
            stride,
        });
    }
}

// chord sum over samples 0, 2, 4, …, always ending on the last state
fn every_other_length(states: &[WaveFunction]) -> Result<f64> {
    let mut idx: Vec<usize> = (0..states.len()).step_by(2).collect();
    if idx.last() != Some(&(states.len() - 1)) {
        idx.push(states.len() - 1);
    }
    idx.windows(2).map(|w| fs_distance(&states[w[0]], &states[w[1]])).sum()
}

// leading kinetic and potential contributions to ΔE for a moving packet
fn split_spread(psi: &WaveFunction, u0: f64, x_trap: f64) -> (f64, f64) {
    let x0 = psi.mean_position(x_trap);
    let dx = psi.position_spread(x0);
    let dp = psi.momentum_spread();
    let phi = psi.momentum_amps();
    let (mut w, mut p1) = (0.0, 0.0);
    for (a, &p) in phi.iter().zip(psi.grid().p()) {
        let n = a.norm_sqr();
        w += n;
        p1 += n * p;
    }
    let mean_p = p1 / w;
    let dens = psi.density();
    let force: f64 = psi
        .grid()
        .x()
        .iter()
        .zip(&dens)
        .map(|(&x, &rho)| rho * u0 * (2.0 * (x - x_trap)).sin())
        .sum::<f64>()
        * psi.grid().dx();
    (dp * (2.0 * mean_p).abs(), dx * force.abs())
}

/// Verdicts of the speed-limit inequalities for one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundFlags {
    /// ℓ ≥ ℓ_QGT.
    pub eq7_flag: bool,
    /// τ ≥ τ_CB = τ_HO·√(2n/π).
    pub eq3_flag: bool,
    pub tau_over_tau_cb: f64,
    /// ΔE < ΔE_upper.
    pub eq8_flag: bool,
    /// τ_MT ≤ τ.
    pub mt_flag: bool,
    pub ell_over_ell_geo: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryReport {
    pub ell: f64,
    pub delta_e: f64,
    pub ell_geo: f64,
    pub ell_qgt: f64,
    pub ell_qb_est: f64,
    pub delta_e_upper: f64,
    pub tau_mt: f64,
    pub aa_residual: f64,
    pub bound_flags: BoundFlags,
}

/// Fills every report field from a logged run.
pub fn bound_report(log: &RunLog) -> Result<GeometryReport> {
    if log.states.len() < 2 {
        return Err(Error::Input("run log holds fewer than two states".into()));
    }
    let ell = path_length(&log.states)?;
    let delta_e = time_average(&log.times, &log.delta_e)?;
    let ell_geo = fs_distance(&log.init, &log.target)?;
    let ell_qgt = l_qgt(log.d, &log.params);
    let ell_qb_est = l_qb_estimate(log.d, log.tau, &log.params)?;
    let upper = delta_e_upper(log.d, log.tau, &log.params)?;
    let tau_mt = mandelstam_tamm_from(ell_geo, delta_e);
    let span = log.times[log.times.len() - 1] - log.times[0];
    let aa_residual = if ell > 0.0 {
        (ell - delta_e * span).abs() / ell
    } else {
        0.0
    };
    let tcb = tau_cb(log.d, &log.params);
    Ok(GeometryReport {
        ell,
        delta_e,
        ell_geo,
        ell_qgt,
        ell_qb_est,
        delta_e_upper: upper,
        tau_mt,
        aa_residual,
        bound_flags: BoundFlags {
            eq7_flag: ell >= ell_qgt,
            eq3_flag: log.tau >= tcb,
            tau_over_tau_cb: log.tau / tcb,
            eq8_flag: delta_e < upper,
            mt_flag: tau_mt <= log.tau,
            ell_over_ell_geo: if ell_geo > 0.0 { ell / ell_geo } else { f64::INFINITY },
        },
    })
}

/// Time averages of the kinetic and potential spreads.
pub fn kinetic_potential_ratio(log: &RunLog) -> Result<f64> {
    let k = time_average(&log.times, &log.delta_k)?;
    let u = time_average(&log.times, &log.delta_u)?;
    Ok(k / u)
}

/// Harmonic coherent-state speed: ΔE = ω|α₀| when ℏ = 1.
pub fn coherent_spread(params: &LatticeParams, alpha0: f64) -> f64 {
    params.omega_ho() * alpha0.abs()
}

/// ℓ_geo saturates at π/2 for orthogonal states.
pub const ELL_GEO_MAX: f64 = FRAC_PI_2;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{HarmonicWell, Propagator, StaticPotential};
    use crate::grid::{Grid, GridSpec};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn grid() -> Arc<Grid> {
        Arc::new(Grid::new(GridSpec::default()).unwrap())
    }

    #[test]
    fn f_values() {
        assert_eq!(f_factor(0.0).unwrap(), 1.0);
        let f1 = 2f64.sqrt() + (1.0 + 2f64.sqrt()).ln();
        assert!((f_factor(1.0).unwrap() - f1).abs() < 1e-14);
        assert!((f1 - 2.2956).abs() < 1e-4);
        assert!(f_factor(-0.1).is_err());
        let mut last = 0.0;
        for k in 0..100 {
            let v = f_factor(k as f64 * 0.05).unwrap();
            assert!(v > last && v >= 1.0);
            last = v;
        }
        // small-ξ behaviour is continuous
        assert!((f_factor(1e-9).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn qgt_values() {
        let p = LatticeParams::new(150.0).unwrap();
        assert!((l_qgt(PI, &p) - PI / (2.0 * p.delta_x())).abs() < 1e-12);
        assert!((l_qgt(PI, &p) - 7.78).abs() < 0.01);
        // d = 15·Δx → 7.5
        assert!((l_qgt(15.0 * p.delta_x(), &p) - 7.5).abs() < 1e-12);
        let est = l_qb_estimate(PI, p.tau_ho(), &p).unwrap();
        assert!((est / l_qgt(PI, &p) - f_factor(1.0 / PI).unwrap()).abs() < 1e-12);
        assert!((l_qb_estimate(PI, 1e6, &p).unwrap() - l_qgt(PI, &p)).abs() < 1e-6);
    }

    #[test]
    fn exact_qgt_matches_momentum_spread() {
        // the translation generator is p, so the exact length is d·Δp of the
        // numerical ground state; anharmonicity lowers Δp by roughly 1/(4√u0)
        let mut last = f64::INFINITY;
        for u0 in [70.0, 150.0, 300.0] {
            let p = LatticeParams::new(u0).unwrap();
            let psi = crate::dynamics::ground_state(grid(), &p, 0).unwrap();
            let exact = l_qgt_exact(&psi, PI, 512).unwrap();
            let spread = PI * psi.momentum_spread();
            assert!((exact - spread).abs() / exact < 1e-3, "u0 {u0}: {exact} vs {spread}");
            let dev = 1.0 - exact / l_qgt(PI, &p);
            assert!(dev > 0.0 && dev < 1.5 / (4.0 * u0.sqrt()), "u0 {u0}: {dev}");
            assert!(dev < last);
            last = dev;
        }
    }

    #[test]
    fn stationary_state_has_no_length_or_spread() {
        // exact eigenstate of the discrete step: a plane wave in a flat potential
        let g = grid();
        let amps = g.x().iter().map(|&x| Complex64::from_polar(1.0, 4.0 * x)).collect();
        let wave = WaveFunction::new(g.clone(), amps).unwrap();
        let flat = StaticPotential(vec![-3.0; g.len()]);
        let dt = 0.002;
        let mut prop = Propagator::new(g.clone(), dt);
        let mut cur = wave.clone();
        let mut states = vec![wave.clone()];
        let mut times = vec![0.0];
        for k in 1..=64 {
            prop.run(&mut cur, &flat, (k - 1) as f64 * 4.0 * dt, 4, usize::MAX, None);
            states.push(cur.clone());
            times.push(k as f64 * 4.0 * dt);
        }
        assert!(path_length(&states).unwrap() < 1e-8);
        let de = energy_spread(&times, &states, &flat).unwrap();
        assert!(de < 1e-10, "{de}");
    }

    #[test]
    fn coherent_state_circle() {
        // harmonic well, α₀ = 1: one period traces 2π|α₀| and ΔE = ω|α₀|
        let g = grid();
        let p = LatticeParams::new(150.0).unwrap();
        let well = HarmonicWell::new(&g, p.u0, |_| 0.0);
        let alpha0 = 1.0;
        let psi = WaveFunction::gaussian(g.clone(), 2.0 * p.delta_x() * alpha0, p.delta_x());
        let steps = 2048;
        let dt = p.tau_ho() / steps as f64;
        let mut times = Vec::new();
        let mut states = Vec::new();
        let mut obs = |_: usize, t: f64, s: &WaveFunction| {
            times.push(t);
            states.push(s.clone());
        };
        let mut cur = psi.clone();
        Propagator::new(g.clone(), dt).run(&mut cur, &well, 0.0, steps, 4, Some(&mut obs));
        let ell = path_length(&states).unwrap();
        assert!((ell / (2.0 * PI * alpha0) - 1.0).abs() < 0.005, "{ell}");
        let inst = instantaneous_spread(&times, &states, &well).unwrap();
        let want = coherent_spread(&p, alpha0);
        for de in &inst {
            assert!((de / want - 1.0).abs() < 0.01, "{de} vs {want}");
        }
    }

    #[test]
    fn coherent_model_matches_closed_form() {
        let p = LatticeParams::new(150.0).unwrap();
        for f in [0.5, 1.0, 2.0] {
            let m = coherent_model(PI, f * p.tau_ho(), &p, 2000).unwrap();
            assert!((m.ell / m.ell_closed - 1.0).abs() < 1e-4, "{} {}", m.ell, m.ell_closed);
        }
        let tau = 1.3;
        let h = 1e-7;
        let left = coherent_velocity(PI, tau, 0.5 * tau - h);
        let right = coherent_velocity(PI, tau, 0.5 * tau + h);
        assert!((left - 2.0 * PI / tau).abs() < 1e-5 && (right - 2.0 * PI / tau).abs() < 1e-5);
        assert_eq!(coherent_position(PI, tau, 0.0), 0.0);
        assert!((coherent_position(PI, tau, tau) - PI).abs() < 1e-12);
        // finite differences of the position agree with the velocity
        let t = 0.8 * tau;
        let fd = (coherent_position(PI, tau, t + h) - coherent_position(PI, tau, t - h)) / (2.0 * h);
        assert!((fd - coherent_velocity(PI, tau, t)).abs() < 1e-6);
    }

    #[test]
    fn mandelstam_tamm_limits() {
        let g = grid();
        let p = LatticeParams::new(150.0).unwrap();
        let psi = crate::dynamics::ground_state(g, &p, 0).unwrap();
        assert!(mandelstam_tamm_time(&psi, &psi, 3.0).unwrap() < 1e-7);
        let far = psi.translated(3.0 * PI);
        let t = mandelstam_tamm_time(&psi, &far, 2.0).unwrap();
        assert!((t - PI / 4.0).abs() < 1e-9);
        assert!(mandelstam_tamm_from(1.0, 0.0).is_infinite());
    }

    #[test]
    fn mandelstam_tamm_falls_with_distance() {
        // ΔE ≈ (d/2Δx)/τ with τ ∝ √d, ℓ_geo = π/2
        let p = LatticeParams::new(150.0).unwrap();
        let mut last = f64::INFINITY;
        for n in [1.0, 2.0, 4.0, 8.0] {
            let d = n * SITE;
            let tau = p.tau_ho() * n.sqrt();
            let t = mandelstam_tamm_from(ELL_GEO_MAX, l_qgt(d, &p) / tau);
            assert!(t < last);
            last = t;
        }
    }

    #[test]
    fn upper_bound_shape() {
        let p = LatticeParams::new(150.0).unwrap();
        let u = delta_e_upper(PI, p.tau_ho(), &p).unwrap();
        let want = l_qgt(PI, &p) / p.tau_ho() * f_factor(0.5).unwrap();
        assert!((u - want).abs() < 1e-12);
        assert!(delta_e_upper(0.0, 1.0, &p).is_err());
    }

    #[test]
    fn path_length_needs_fine_sampling() {
        let g = grid();
        let a = WaveFunction::gaussian(g.clone(), 0.0, 0.2);
        let b = a.translated(1.0);
        let err = path_length(&[a, b]).unwrap_err();
        assert!(matches!(err, Error::Resolution { .. }));
        assert!(path_length(&[]).is_err());
    }
}
