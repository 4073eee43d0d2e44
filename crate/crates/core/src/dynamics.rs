//! Split-step propagation on the periodic grid.
//!
//! Real-time steps use the symmetric (Strang) splitting
//! `e^{−iV(t+dt/2)dt/2} e^{−ip²dt} e^{−iV(t+dt/2)dt/2}`; between observation
//! points the two half kicks of neighbouring steps are fused into one pass.
//! Ground states come from the same splitting in imaginary time.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{wrap, Grid, WaveFunction};
use crate::lattice::{LatticeParams, SpinDownField, SITE};

/// A potential sampled on the grid at time `t`.
pub trait Potential {
    fn fill(&self, t: f64, out: &mut [f64]);
}

impl<F> Potential for F
where
    F: Fn(f64, &mut [f64]),
{
    fn fill(&self, t: f64, out: &mut [f64]) {
        self(t, out)
    }
}

/// Time-independent potential.
#[derive(Debug, Clone)]
pub struct StaticPotential(pub Vec<f64>);

impl Potential for StaticPotential {
    fn fill(&self, _t: f64, out: &mut [f64]) {
        out.copy_from_slice(&self.0);
    }
}

/// Spin-up conveyor belt −u0·cos²(x − path(t)).
pub struct Conveyor<P> {
    u0: f64,
    path: P,
    cos2x: Vec<f64>,
    sin2x: Vec<f64>,
}

impl<P: Fn(f64) -> f64> Conveyor<P> {
    pub fn new(grid: &Grid, u0: f64, path: P) -> Self {
        let (sin2x, cos2x) = grid.x().iter().map(|&x| (2.0 * x).sin_cos()).unzip();
        Self {
            u0,
            path,
            cos2x,
            sin2x,
        }
    }
}

impl<P: Fn(f64) -> f64> Potential for Conveyor<P> {
    fn fill(&self, t: f64, out: &mut [f64]) {
        // cos²(x − a) = (1 + cos 2x cos 2a + sin 2x sin 2a)/2
        let (s, c) = (2.0 * (self.path)(t)).sin_cos();
        let h = -0.5 * self.u0;
        for ((o, &cx), &sx) in out.iter_mut().zip(&self.cos2x).zip(&self.sin2x) {
            *o = h * (1.0 + cx * c + sx * s);
        }
    }
}

/// Harmonic approximation −u0 + u0·(x − path(t))², wrapped to the nearest
/// image. Used as an analytic test bed; its ground state has the harmonic
/// width exactly.
pub struct HarmonicWell<P> {
    u0: f64,
    path: P,
    x: Vec<f64>,
    box_length: f64,
}

impl<P: Fn(f64) -> f64> HarmonicWell<P> {
    pub fn new(grid: &Grid, u0: f64, path: P) -> Self {
        Self {
            u0,
            path,
            x: grid.x().to_vec(),
            box_length: grid.box_length(),
        }
    }
}

impl<P: Fn(f64) -> f64> Potential for HarmonicWell<P> {
    fn fill(&self, t: f64, out: &mut [f64]) {
        let a = (self.path)(t);
        for (o, &x) in out.iter_mut().zip(&self.x) {
            let d = wrap(x - a, self.box_length);
            *o = -self.u0 + self.u0 * d * d;
        }
    }
}

/// Spin-down conveyor belt driven by a time-dependent field.
pub struct SpinDownConveyor<F> {
    field: F,
    x: Vec<f64>,
}

impl<F: Fn(f64) -> SpinDownField> SpinDownConveyor<F> {
    pub fn new(grid: &Grid, field: F) -> Self {
        Self {
            field,
            x: grid.x().to_vec(),
        }
    }
}

impl<F: Fn(f64) -> SpinDownField> Potential for SpinDownConveyor<F> {
    fn fill(&self, t: f64, out: &mut [f64]) {
        let f = (self.field)(t);
        let (depth, offset, pos) = (f.depth(), f.offset(), f.position());
        for (o, &x) in out.iter_mut().zip(&self.x) {
            let c = (x - pos).cos();
            *o = -offset - depth * c * c;
        }
    }
}

/// Number of equal steps no longer than `dt_max` covering `span`.
pub fn step_count(span: f64, dt_max: f64) -> usize {
    ((span / dt_max) - 1e-9).ceil().max(1.0) as usize
}

/// Callback receiving (step, time, state) during propagation.
pub type Observer<'a> = &'a mut dyn FnMut(usize, f64, &WaveFunction);

/// Real-time split-step integrator with a fixed step.
pub struct Propagator {
    grid: Arc<Grid>,
    dt: f64,
    kinetic: Vec<Complex64>,
    v_a: Vec<f64>,
    v_b: Vec<f64>,
    scratch: Vec<Complex64>,
}

impl Propagator {
    pub fn new(grid: Arc<Grid>, dt: f64) -> Self {
        let n = grid.len();
        let inv_n = 1.0 / n as f64;
        let kinetic = grid
            .p()
            .iter()
            .map(|&p| Complex64::from_polar(inv_n, -p * p * dt))
            .collect();
        let scratch = vec![Complex64::default(); grid.scratch_len()];
        Self {
            grid,
            dt,
            kinetic,
            v_a: vec![0.0; n],
            v_b: vec![0.0; n],
            scratch,
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn kick(psi: &mut [Complex64], v: &[f64], h: f64) {
        for (a, &u) in psi.iter_mut().zip(v) {
            let (s, c) = (-u * h).sin_cos();
            *a *= Complex64::new(c, s);
        }
    }

    fn kick_pair(psi: &mut [Complex64], v1: &[f64], v2: &[f64], h: f64) {
        for ((a, &u1), &u2) in psi.iter_mut().zip(v1).zip(v2) {
            let (s, c) = (-(u1 + u2) * h).sin_cos();
            *a *= Complex64::new(c, s);
        }
    }

    fn drift(&mut self, psi: &mut [Complex64]) {
        self.grid.fft_forward(psi, &mut self.scratch);
        for (a, k) in psi.iter_mut().zip(&self.kinetic) {
            *a *= k;
        }
        self.grid.fft_inverse(psi, &mut self.scratch);
    }

    /// Advances `psi` by `steps` steps starting at `t0`.
    ///
    /// When `observer` is given it is called with (step index, time, state)
    /// at step 0, at every multiple of `stride` and after the last step.
    pub fn run(
        &mut self,
        psi: &mut WaveFunction,
        potential: &dyn Potential,
        t0: f64,
        steps: usize,
        stride: usize,
        mut observer: Option<Observer<'_>>,
    ) {
        if steps == 0 {
            if let Some(obs) = observer.as_mut() {
                obs(0, t0, psi);
            }
            return;
        }
        let dt = self.dt;
        let h = 0.5 * dt;
        let stride = stride.max(1);
        if let Some(obs) = observer.as_mut() {
            obs(0, t0, psi);
        }
        let mut v_a = std::mem::take(&mut self.v_a);
        let mut v_b = std::mem::take(&mut self.v_b);
        potential.fill(t0 + h, &mut v_a);
        Self::kick(psi.amps_mut(), &v_a, h);
        for k in 0..steps {
            self.drift(psi.amps_mut());
            let done = k + 1;
            let t_end = t0 + done as f64 * dt;
            if done < steps {
                potential.fill(t_end + h, &mut v_b);
                let observe = observer.is_some() && done % stride == 0;
                if observe {
                    Self::kick(psi.amps_mut(), &v_a, h);
                    if let Some(obs) = observer.as_mut() {
                        obs(done, t_end, psi);
                    }
                    Self::kick(psi.amps_mut(), &v_b, h);
                } else {
                    Self::kick_pair(psi.amps_mut(), &v_a, &v_b, h);
                }
                std::mem::swap(&mut v_a, &mut v_b);
            } else {
                Self::kick(psi.amps_mut(), &v_a, h);
                // the splitting is unitary; this only removes accumulated roundoff
                psi.normalize();
                if let Some(obs) = observer.as_mut() {
                    obs(done, t_end, psi);
                }
            }
        }
        self.v_a = v_a;
        self.v_b = v_b;
    }
}

/// Evolves `psi` from `t0` to `t1` with steps no longer than `dt`.
pub fn propagate(
    psi: &WaveFunction,
    potential: &dyn Potential,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<WaveFunction> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("time step must be positive, got {dt}")));
    }
    if !(t1 >= t0) {
        return Err(Error::Domain(format!("end time {t1} precedes start {t0}")));
    }
    let mut out = psi.clone();
    if t1 == t0 {
        return Ok(out);
    }
    let steps = step_count(t1 - t0, dt);
    let mut prop = Propagator::new(psi.grid().clone(), (t1 - t0) / steps as f64);
    prop.run(&mut out, potential, t0, steps, 0, None);
    Ok(out)
}

/// H = p² + V for a fixed potential sample.
pub struct Hamiltonian<'a> {
    grid: &'a Grid,
    v: &'a [f64],
}

impl<'a> Hamiltonian<'a> {
    pub fn new(grid: &'a Grid, v: &'a [f64]) -> Self {
        Self { grid, v }
    }

    pub fn apply(&self, psi: &[Complex64], out: &mut [Complex64], scratch: &mut [Complex64]) {
        let n = psi.len();
        out.copy_from_slice(psi);
        self.grid.fft_forward(out, scratch);
        let inv_n = 1.0 / n as f64;
        for (a, &p) in out.iter_mut().zip(self.grid.p()) {
            *a *= p * p * inv_n;
        }
        self.grid.fft_inverse(out, scratch);
        for ((o, a), &u) in out.iter_mut().zip(psi).zip(self.v) {
            *o += a * u;
        }
    }

    /// (⟨H⟩, √(⟨H²⟩ − ⟨H⟩²)) for a normalized state.
    pub fn moments(&self, psi: &WaveFunction) -> (f64, f64) {
        let n = psi.amps().len();
        let mut h = vec![Complex64::default(); n];
        let mut scratch = vec![Complex64::default(); self.grid.scratch_len()];
        self.apply(psi.amps(), &mut h, &mut scratch);
        let dx = self.grid.dx();
        let mean = dx
            * psi
                .amps()
                .iter()
                .zip(&h)
                .map(|(a, b)| (a.conj() * b).re)
                .sum::<f64>();
        // ‖(H − ⟨H⟩)ψ‖ avoids the cancellation in ⟨H²⟩ − ⟨H⟩²
        let var = dx
            * psi
                .amps()
                .iter()
                .zip(&h)
                .map(|(a, b)| (b - a * mean).norm_sqr())
                .sum::<f64>();
        (mean, var.sqrt())
    }

    pub fn energy(&self, psi: &WaveFunction) -> f64 {
        self.moments(psi).0
    }
}

/// Lowest state of a static potential grown from `seed` in imaginary time.
///
/// Runs a schedule of shrinking imaginary steps (0.2, 0.02, 0.002)/`scale`;
/// each stage stops once the energy drifts by less than `tol` per step,
/// measured over windows of 64 steps.
pub fn imaginary_time_ground_state(
    seed: WaveFunction,
    v: &[f64],
    scale: f64,
    tol: f64,
    max_steps: usize,
) -> Result<(WaveFunction, f64)> {
    const WINDOW: usize = 64;
    let grid = seed.grid().clone();
    let n = grid.len();
    let ham = Hamiltonian::new(&grid, v);
    let mut psi = seed;
    let mut scratch = vec![Complex64::default(); grid.scratch_len()];
    let mut total = 0;
    let mut energy = ham.energy(&psi);
    for &frac in &[0.2, 0.02, 0.002] {
        let dtau = frac / scale;
        let v_min = v.iter().cloned().fold(f64::INFINITY, f64::min);
        // shift by v_min so the factors stay ≤ 1
        let half: Vec<f64> = v.iter().map(|&u| (-(u - v_min) * 0.5 * dtau).exp()).collect();
        let inv_n = 1.0 / n as f64;
        let kin: Vec<f64> = grid.p().iter().map(|&p| (-p * p * dtau).exp() * inv_n).collect();
        loop {
            for _ in 0..WINDOW {
                let amps = psi.amps_mut();
                for (a, &f) in amps.iter_mut().zip(&half) {
                    *a *= f;
                }
                grid.fft_forward(amps, &mut scratch);
                for (a, &f) in amps.iter_mut().zip(&kin) {
                    *a *= f;
                }
                grid.fft_inverse(amps, &mut scratch);
                for (a, &f) in amps.iter_mut().zip(&half) {
                    *a *= f;
                }
                psi.normalize();
            }
            total += WINDOW;
            let e = ham.energy(&psi);
            let change = (e - energy).abs() / WINDOW as f64;
            energy = e;
            if change < tol {
                break;
            }
            if total >= max_steps {
                return Err(Error::Convergence {
                    steps: total,
                    last_change: change,
                });
            }
        }
    }
    Ok((psi, energy))
}

/// Ground state of the spin-up lattice (trap at x = 0) localized in `site`.
///
/// Imaginary time on the full lattice would slowly tunnel into the other
/// wells, so the relaxation runs in a single well: the lattice inside the
/// site and the barrier top (zero) everywhere else.
pub fn ground_state(grid: Arc<Grid>, params: &LatticeParams, site: i64) -> Result<WaveFunction> {
    params.validate()?;
    let (lo, hi) = grid.site_range();
    if site < lo || site > hi {
        return Err(Error::Input(format!("site {site} outside box {lo}..={hi}")));
    }
    let center = site as f64 * SITE;
    let box_length = grid.box_length();
    let v: Vec<f64> = grid
        .x()
        .iter()
        .map(|&x| {
            let r = wrap(x - center, box_length);
            if r.abs() <= 0.5 * SITE {
                -params.u0 * r.cos().powi(2)
            } else {
                0.0
            }
        })
        .collect();
    let seed = WaveFunction::gaussian(grid, center, params.delta_x());
    let (psi, _) = imaginary_time_ground_state(seed, &v, params.omega_ho(), 1e-12, 400_000)?;
    Ok(psi)
}

/// |⟨target|psi⟩|².
pub fn fidelity(psi: &WaveFunction, target: &WaveFunction) -> Result<f64> {
    Ok(target.inner(psi)?.norm_sqr().min(1.0))
}

/// Total population of the lowest band: Σ over every site in the box of
/// |⟨φ_s|ψ⟩|², where φ_s is `site_ground` (the ground state of the well at
/// x = 0) moved to `final_offset + s·λ/2`.
pub fn ground_band_population(
    psi: &WaveFunction,
    site_ground: &WaveFunction,
    final_offset: f64,
) -> Result<f64> {
    psi.check_grid(site_ground)?;
    let (lo, hi) = psi.grid().site_range();
    let base = site_ground.translated(final_offset - lo as f64 * SITE);
    let ppsite = psi.grid().spec().pts_per_site;
    let n = psi.grid().len();
    let dx = psi.grid().dx();
    let mut total = 0.0;
    for s in 0..=(hi - lo) as usize {
        // rotate by whole sites without copying
        let shift = s * ppsite;
        let mut acc = Complex64::default();
        for (k, a) in base.amps().iter().enumerate() {
            acc += a.conj() * psi.amps()[(k + shift) % n];
        }
        total += (acc * dx).norm_sqr();
    }
    Ok(total.min(1.0))
}
