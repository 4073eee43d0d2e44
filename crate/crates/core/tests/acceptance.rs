//! End-to-end acceptance checks, one line per criterion.
//!
//! Runs as a plain binary (no libtest harness) so the verdict lines are
//! always printed. The optimizer scan over three depths dominates the
//! runtime (about a quarter of an hour on one core).

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use conveyor::control::{
    iterate_compensation, plant_fidelity, CompensationConfig, KernelModel, Plant, Signal, SITE_LAMBDA,
};
use conveyor::geometry::{bound_report, record_run, GeometryReport, DEFAULT_STRIDE, ELL_GEO_MAX};
use conveyor::interferometer::interferometer_contrast;
use conveyor::lattice::SITE;
use conveyor::optimizer::{scan_qsl, OptimResult, OptimizerConfig, QslRow};
use conveyor::protocols::{envelope_fidelity, tau_cb, EnvelopeProtocol, FeasibilityLimits, Trajectory};
use conveyor::thermal::{thermal_fidelity, ThermalConfig};
use conveyor::transport::{Model, SimConfig, TransportSim};
use conveyor::{GridSpec, LatticeParams, SpinDownField, WaveFunction};

const DEPTHS: [f64; 3] = [70.0, 150.0, 300.0];
const FRACS: [f64; 12] = [3.0, 2.0, 1.5, 1.3, 1.2, 1.1, 1.0, 0.9, 0.8, 0.7, 0.6, 0.5];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

/// Shared state: the optimized scan, and every geometry report produced.
struct Suite {
    scan: Vec<QslRow>,
    /// Label, report and site-resolved fidelity of every recorded run.
    reports: Vec<(String, GeometryReport, f64)>,
    refinement: Vec<(String, f64)>,
    norms: Vec<f64>,
}

fn cs(u0: f64) -> LatticeParams {
    LatticeParams::cesium(u0).unwrap()
}

impl Suite {
    fn row(&self, u0: f64) -> &QslRow {
        self.scan.iter().find(|r| r.u0 == u0).unwrap()
    }

    fn optimized(&self, u0: f64, frac: f64) -> &OptimResult {
        let row = self.row(u0);
        row.results
            .iter()
            .find(|r| (r.tau / row.tau_ho - frac).abs() < 1e-9)
            .unwrap()
    }

    /// Geometry report for a run, with the stride-halving refinement and
    /// the final norm recorded.
    fn geometry(&mut self, label: String, sim: &TransportSim, traj: &Trajectory) -> GeometryReport {
        let coarse = record_run(sim, traj, DEFAULT_STRIDE).unwrap();
        let fine = record_run(sim, traj, coarse.stride / 2).unwrap();
        let report = bound_report(&coarse).unwrap();
        let fine_ell = bound_report(&fine).unwrap().ell;
        self.refinement.push((label.clone(), (fine_ell - report.ell).abs() / fine_ell));
        let last = coarse.states.last().unwrap();
        self.norms.push(last.norm_sq());
        let fidelity = coarse.target.inner(last).unwrap().norm_sqr();
        self.reports.push((label, report, fidelity));
        report
    }
}

fn c1() -> Verdict {
    let p = cs(150.0);
    let us = p.harmonic_period_s().unwrap() * 1e6;
    // oracle: τ_HO = π/√u0 recoil times, one recoil time = 1/(2π·2 kHz)
    let oracle = PI / 150f64.sqrt() / (2.0 * PI * 2e3) * 1e6;
    let pass = (us - oracle).abs() < 1e-9 && (us - 20.4).abs() < 0.05 && (us - 20.0).abs() / 20.0 < 0.05;
    verdict(pass, format!("tau_HO = {us:.3} us, within 5% of 20 us"))
}

fn c2(s: &Suite) -> Verdict {
    let fs: Vec<f64> = [1.5, 2.0, 3.0].iter().map(|&f| s.optimized(150.0, f).fidelity).collect();
    let feasible = [1.5, 2.0, 3.0].iter().all(|&f| s.optimized(150.0, f).feasible);
    verdict(
        feasible && fs.iter().all(|&f| f >= 0.99),
        format!("F at 1.5/2/3 tau_HO = {:.5} / {:.5} / {:.5}", fs[0], fs[1], fs[2]),
    )
}

fn c3(s: &Suite) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for &u0 in &DEPTHS {
        let row = s.row(u0);
        let star = row.transition.map(|t| t / row.tau_ho);
        let f99 = row.fidelity_crossing(0.99).map(|t| t / row.tau_ho);
        let tcb = tau_cb(SITE, &cs(u0)) / row.tau_ho;
        let ok = star.is_some_and(|t| (0.5..=1.3).contains(&t)) && f99.is_some_and(|t| t > tcb);
        pass &= ok;
        parts.push(format!(
            "u0={u0}: tau*={:.3} F99 at {:.3} (tau_CB {tcb:.3})",
            star.unwrap_or(f64::NAN),
            f99.unwrap_or(f64::NAN)
        ));
    }
    verdict(pass, parts.join("; "))
}

/// Local maxima of a sampled curve.
fn local_maxima(x: &[f64], y: &[f64]) -> Vec<f64> {
    (1..y.len() - 1)
        .filter(|&k| y[k] >= y[k - 1] && y[k] >= y[k + 1])
        .map(|k| x[k])
        .collect()
}

fn c4(s: &mut Suite) -> Verdict {
    let p = cs(150.0);
    let sim = TransportSim::new(&p, SimConfig::default()).unwrap();
    // E_rec = ℏ = 1: τ̃_HO = τ_HO(1 + τ_HO/2π)
    let shifted = 1.0 + p.tau_ho() / (2.0 * PI);
    let fracs: Vec<f64> = (0..=70).map(|k| 0.5 + 0.05 * k as f64).collect();
    let mut fid = Vec::new();
    let mut worst_ratio: f64 = 0.0;
    for (k, &f) in fracs.iter().enumerate() {
        let traj = Trajectory::linear(SITE, f * p.tau_ho()).unwrap();
        let r = sim.run(&traj).unwrap();
        s.norms.push(r.final_state.norm_sq());
        fid.push(r.fidelity);
        // geometry on every fifth run; ℓ_QGT is a property of the depth
        let l_qgt = if k % 5 == 0 {
            s.geometry(format!("linear {f:.2}"), &sim, &traj).ell_qgt
        } else {
            conveyor::geometry::l_qgt(SITE, &p)
        };
        let env = 1.0 - envelope_fidelity(EnvelopeProtocol::Linear, traj.tau(), l_qgt, &p);
        worst_ratio = worst_ratio.max((1.0 - r.fidelity) / env);
    }
    let maxima = local_maxima(&fracs, &fid);
    let mut pass = worst_ratio <= 1.2;
    let mut found = Vec::new();
    for m in 1..=3 {
        let want = m as f64 * shifted;
        let near = maxima
            .iter()
            .copied()
            .min_by(|a, b| (a - want).abs().total_cmp(&(b - want).abs()));
        let ok = near.is_some_and(|t| (t - want).abs() / want < 0.1);
        pass &= ok;
        found.push(format!("{:.2} (want {want:.3})", near.unwrap_or(f64::NAN)));
    }
    verdict(
        pass,
        format!(
            "revivals at {} tau_HO; max infidelity/envelope = {worst_ratio:.3}",
            found.join(", ")
        ),
    )
}

/// Two sudden velocity kicks in a harmonic trap: the packet leaves with
/// |α|² = m v²/(2ℏω)·|1 − e^{iωτ}|².
fn two_kick_fidelity(d: f64, tau: f64, u0: f64) -> f64 {
    let (m, omega) = (0.5, 2.0 * u0.sqrt());
    let v = d / tau;
    let alpha_sq = m * v * v / (2.0 * omega) * 4.0 * (omega * tau / 2.0).sin().powi(2);
    (-alpha_sq).exp()
}

fn c5() -> Verdict {
    let p = cs(150.0);
    let cfg = SimConfig {
        model: Model::Harmonic,
        ..SimConfig::default()
    };
    let sim = TransportSim::new(&p, cfg).unwrap();
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let tau = (0.3 + 0.15 * k as f64) * p.tau_ho();
        let f = sim.run(&Trajectory::linear(SITE, tau).unwrap()).unwrap().fidelity;
        worst = worst.max((f - two_kick_fidelity(SITE, tau, p.u0)).abs());
    }
    verdict(worst < 1e-3, format!("max |dF| = {worst:.2e} over 20 durations"))
}

fn c6(s: &Suite) -> Verdict {
    let worst_aa = s.reports.iter().map(|(_, r, _)| r.aa_residual).fold(0.0, f64::max);
    let worst_ref = s.refinement.iter().map(|(_, d)| *d).fold(0.0, f64::max);
    verdict(
        worst_aa < 0.01 && worst_ref < 1e-3,
        format!(
            "{} runs: max |l - dE tau|/l = {worst_aa:.2e}, max refinement shift = {worst_ref:.2e}",
            s.reports.len()
        ),
    )
}

fn c7_runs(s: &mut Suite) {
    let p = cs(150.0);
    for &f in &[2.0, 1.5, 1.3, 1.2, 1.1, 1.0] {
        let traj = s.optimized(150.0, f).trajectory().unwrap();
        let sim = TransportSim::for_duration(&p, SimConfig::default(), traj.tau()).unwrap();
        s.geometry(format!("optimal {f:.1}"), &sim, &traj);
    }
    for (name, traj) in [
        ("parabolic 2.0", Trajectory::parabolic(SITE, 2.0 * p.tau_ho()).unwrap()),
        ("adiabatic 2.0", Trajectory::adiabatic_sine(SITE, 2.0 * p.tau_ho()).unwrap()),
    ] {
        let sim = TransportSim::new(&p, SimConfig::default()).unwrap();
        s.geometry(name.into(), &sim, &traj);
    }
}

fn c7(s: &Suite) -> Verdict {
    let optimal: Vec<&GeometryReport> = s
        .reports
        .iter()
        .filter(|(l, _, _)| l.starts_with("optimal"))
        .map(|(_, r, _)| r)
        .collect();
    let qb = optimal
        .iter()
        .map(|r| (r.ell - r.ell_qb_est).abs() / r.ell_qb_est)
        .fold(0.0, f64::max);
    let all = || s.reports.iter().map(|(_, r, _)| r);
    // the path-length bound concerns processes that carry the atom to the
    // target; runs leaving it behind are listed but not held to it
    let (arrived, left): (Vec<_>, Vec<_>) = s.reports.iter().partition(|(_, _, f)| *f >= 0.5);
    let eq7 = arrived.iter().all(|(_, r, _)| r.bound_flags.eq7_flag);
    let min_arrived = arrived.iter().map(|(_, r, _)| r.ell / r.ell_qgt).fold(f64::INFINITY, f64::min);
    let worst_left = left.iter().map(|(_, _, f)| *f).fold(0.0, f64::max);
    let holding = all().filter(|r| r.bound_flags.eq7_flag).count();
    let eq8 = all().all(|r| r.bound_flags.eq8_flag);
    let geo = all().all(|r| r.ell_geo <= ELL_GEO_MAX + 1e-9);
    let ratio = all().map(|r| r.bound_flags.ell_over_ell_geo).fold(f64::INFINITY, f64::min);
    verdict(
        qb < 0.1 && eq7 && eq8 && geo && ratio > 4.0,
        format!(
            "optimal max |l - l_QB|/l_QB = {qb:.3}; l >= l_QGT on {} runs reaching the target {eq7} \
             (min l/l_QGT {min_arrived:.3}; {} runs with F <= {worst_left:.1e} left behind; holds on {holding} of {} overall); \
             dE < dE_upper {eq8}; l_geo <= pi/2 {geo}; min l/l_geo = {ratio:.2}",
            arrived.len(),
            left.len(),
            s.reports.len()
        ),
    )
}

fn c8(s: &Suite) -> Verdict {
    let p = cs(150.0);
    let th = ThermalConfig::new(1.0);
    let mut pass = true;
    let mut parts = Vec::new();
    for &f in &[0.8, 0.9, 1.0, 1.1, 1.2, 1.3, 1.5, 2.0] {
        let r = s.optimized(150.0, f);
        let hot = thermal_fidelity(&r.trajectory().unwrap(), &p, &th, SimConfig::default())
            .unwrap()
            .fidelity;
        pass &= hot < r.fidelity;
        parts.push(format!("{f}: {hot:.4}<{:.4}", r.fidelity));
    }
    verdict(pass, format!("thermal < zero-T at {}", parts.join(" ")))
}

fn c9(s: &Suite) -> Verdict {
    let p = cs(150.0);
    let field = SpinDownField::balanced(p.u0);
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for &f in &[1.0, 1.5, 2.0] {
        let r = s.optimized(150.0, f);
        let c = interferometer_contrast(&r.trajectory().unwrap(), &p, &field, true, SimConfig::default())
            .unwrap()
            .contrast;
        worst = worst.max((c - r.fidelity).abs());
        parts.push(format!("{f}: C={c:.4} F={:.4}", r.fidelity));
    }
    verdict(worst < 0.05, format!("max |C(2tau) - F(tau)| = {worst:.4} ({})", parts.join(", ")))
}

fn c10(s: &Suite) -> Verdict {
    let p = cs(150.0);
    let model = KernelModel::default();
    let plant = Plant::new(model.build().unwrap(), FeasibilityLimits::default().max_slew).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for &f in &[1.5, 2.0] {
        let r = s.optimized(150.0, f);
        let ideal = r.trajectory().unwrap();
        let target = Signal::from_trajectory(&ideal, &p, model.dt_us, 5.0).unwrap();
        let comp = iterate_compensation(&target, &plant, &CompensationConfig::default()).unwrap();
        let residual = comp.history.last().unwrap() / SITE_LAMBDA;
        let sim = TransportSim::for_duration(&p, SimConfig::default(), ideal.tau()).unwrap();
        let penalty = sim.fidelity(&ideal).unwrap() - plant_fidelity(&sim, &ideal, &comp.output).unwrap();
        pass &= comp.history.len() <= 10 && residual < 0.02 && penalty < 0.01;
        parts.push(format!(
            "{f}: {} iterations, residual {residual:.2e} site, penalty {penalty:.2e}",
            comp.history.len()
        ));
    }
    verdict(pass, parts.join("; "))
}

fn distance(a: &WaveFunction, b: &WaveFunction) -> f64 {
    a.amps()
        .iter()
        .zip(b.amps())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn c11(s: &Suite) -> Verdict {
    let p = cs(150.0);
    let norm = s.norms.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max);

    let traj = Trajectory::adiabatic_sine(SITE, p.tau_ho()).unwrap();
    let sim = TransportSim::new(&p, SimConfig::default()).unwrap();
    let base = 64;
    let states: Vec<WaveFunction> = [base, 2 * base, 4 * base]
        .iter()
        .map(|&n| sim.evolve(&traj, n, usize::MAX, None))
        .collect();
    let ratio = distance(&states[0], &states[1]) / distance(&states[1], &states[2]);

    let fine = SimConfig {
        grid: GridSpec {
            pts_per_site: 128,
            ..GridSpec::default()
        },
        ..SimConfig::default()
    };
    let shift = (TransportSim::new(&p, fine).unwrap().fidelity(&traj).unwrap() - sim.fidelity(&traj).unwrap()).abs();
    verdict(
        norm < 1e-12 && (3.5..=4.5).contains(&ratio) && shift < 1e-4,
        format!(
            "max norm drift {norm:.1e} over {} runs; dt-halving ratio {ratio:.3}; grid-doubling dF {shift:.1e}",
            s.norms.len()
        ),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut verdicts: Vec<(usize, &str, Verdict)> = Vec::new();
    let mut report = |n: usize, name: &'static str, v: Verdict| {
        eprintln!("[{:.0} s] criterion {n} evaluated", start.elapsed().as_secs_f64());
        verdicts.push((n, name, v));
    };

    report(1, "harmonic period", c1());
    report(5, "harmonic oracle", c5());

    eprintln!("optimizing over {} depths x {} durations...", DEPTHS.len(), FRACS.len());
    let scan = scan_qsl(
        &DEPTHS,
        &FRACS,
        0.5,
        SITE,
        &cs(150.0),
        &FeasibilityLimits::default(),
        SimConfig::default(),
        &OptimizerConfig::default(),
    )
    .unwrap();
    let mut suite = Suite {
        scan,
        reports: Vec::new(),
        refinement: Vec::new(),
        norms: Vec::new(),
    };
    report(2, "optimal-control plateau", c2(&suite));
    report(3, "speed-limit transition", c3(&suite));
    report(4, "linear-ramp revivals", c4(&mut suite));
    c7_runs(&mut suite);
    report(7, "geometry estimates", c7(&suite));
    // after every geometry-producing criterion
    report(6, "Anandan-Aharonov identity", c6(&suite));
    report(8, "thermal degradation", c8(&suite));
    report(9, "interferometer consistency", c9(&suite));
    report(10, "control chain", c10(&suite));
    report(11, "solver properties", c11(&suite));

    verdicts.sort_by_key(|v| v.0);
    for (n, name, v) in &verdicts {
        println!("criterion {n:>2} {name:<28} {} {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    let lines: Vec<bool> = verdicts.iter().map(|v| v.2.pass).collect();
    let failed = lines.iter().filter(|&&p| !p).count();
    println!(
        "acceptance: {} passed, {failed} failed in {:.0} s",
        lines.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
