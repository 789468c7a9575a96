//! Reference criteria for the transfer and gate protocols. Every criterion
//! is evaluated and reported as one PASS/FAIL line; the test fails if any
//! criterion fails.

use std::f64::consts::FRAC_PI_4;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

use resobus::analytic::{oracle_deviation, protocol_oracle_cases, OracleCase, Transition};
use resobus::dynamics::{ControlSchedule, DeviceParams, Evolver, Method, SolverOptions};
use resobus::fockspace::{basis_state, Level, Physicality, SpaceLayout};
use resobus::metrics::{
    average_gate_fidelity, population, sweep_kappa_gamma, transfer_fidelity, FidelityReport, SweepOptions, Threads,
};
use resobus::protocols::{
    cphase_schedule_5step, cphase_schedule_7step, ideal_action, state_transfer_schedule, transfer_final_state,
    transfer_initial_state, verify_ideal_action, TransferVariant, CPHASE_SIGNS, IDEAL_ACTION_TOLERANCE,
};

const TRACE_TOL: f64 = 1e-9;
const HERMITICITY_TOL: f64 = 1e-10;
const MIN_EIG_TOL: f64 = -1e-8;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            pass: true,
            detail: String::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl AsRef<str>) {
        self.pass &= ok;
        if !self.detail.is_empty() {
            self.detail.push_str("; ");
        }
        self.detail.push_str(what.as_ref());
        if !ok {
            self.detail.push_str(" [miss]");
        }
    }
}

/// Physicality figures collected from every evolution of the suite.
#[derive(Default)]
struct PhysLog(Vec<(String, Physicality)>);

impl PhysLog {
    fn record(&mut self, what: impl Into<String>, p: Physicality) {
        self.0.push((what.into(), p));
    }

    fn report(&mut self, what: &str, r: &FidelityReport) {
        self.record(what, r.physicality);
    }
}

fn device() -> DeviceParams {
    DeviceParams::default()
}

fn layout(d: usize) -> SpaceLayout {
    SpaceLayout::new([d, d, d]).unwrap()
}

fn transfer_schedule(dev: &DeviceParams) -> ControlSchedule {
    state_transfer_schedule(dev, 50.0, TransferVariant::SignMinus).unwrap()
}

fn transfer_at(d: usize, method: Method, log: &mut PhysLog) -> f64 {
    let dev = device();
    let l = layout(d);
    let r = transfer_fidelity(
        l,
        &dev,
        &transfer_schedule(&dev),
        &SolverOptions::default().with_method(method),
        &transfer_initial_state(l, FRAC_PI_4).unwrap(),
        &transfer_final_state(l, FRAC_PI_4, TransferVariant::SignMinus).unwrap(),
    )
    .unwrap();
    log.report(&format!("transfer d={d} {method:?}"), &r);
    r.value
}

fn gate_at(d: usize, grid_n: usize, log: &mut PhysLog) -> FidelityReport {
    let dev = device();
    let r = average_gate_fidelity(
        layout(d),
        &dev,
        &cphase_schedule_5step(&dev).unwrap(),
        &SolverOptions::default(),
        grid_n,
        Threads(1),
    )
    .unwrap();
    log.report(&format!("gate d={d} grid={grid_n}"), &r);
    r
}

fn criterion_1(log: &mut PhysLog) -> Outcome {
    let mut o = Outcome::new();
    let start = Instant::now();
    let f = transfer_at(3, Method::Exact, log);
    let elapsed = start.elapsed();
    o.check((f - 0.9997).abs() <= 0.0005, format!("F = {f:.6} (0.9997 ± 0.0005)"));
    o.check(
        elapsed < Duration::from_secs(10),
        format!("runtime {:.3} s (< 10 s)", elapsed.as_secs_f64()),
    );
    o
}

fn criterion_2(log: &mut PhysLog) -> Outcome {
    let mut o = Outcome::new();
    let r = gate_at(3, 16, log);
    o.check(
        (r.value - 0.9966).abs() <= 0.0010,
        format!("F = {:.6} (0.9966 ± 0.0010)", r.value),
    );
    o.check(
        (r.duration_ns - 91.5).abs() <= 0.1,
        format!("T = {:.3} ns (91.5 ± 0.1)", r.duration_ns),
    );
    o
}

/// Populations of `|1,0,0,g>`, `|0,1,0,g>`, `|0,0,1,g>` along the transfer.
fn transfer_populations(dev: &DeviceParams, log: &mut PhysLog) -> (Vec<f64>, [Vec<f64>; 3]) {
    let l = layout(3);
    let opts = SolverOptions::default().with_sampling(0.01);
    let evolver = Evolver::new(l, dev, &transfer_schedule(dev), opts, 1).unwrap();
    let rho0 = basis_state(l, 1, 0, 0, Level::G).unwrap().projector();
    let traj = evolver.run(&rho0).unwrap();
    log.record(format!("populations κ_r = {:e}/ns", dev.kappa_r), traj.physicality);
    let pops = [(1, 0, 0), (0, 1, 0), (0, 0, 1)]
        .map(|(a, b, c)| population(&traj, &basis_state(l, a, b, c, Level::G).unwrap()).unwrap());
    (traj.times, pops)
}

fn criterion_3(log: &mut PhysLog) -> Outcome {
    let mut o = Outcome::new();
    let (times, [_, p2, p3]) = transfer_populations(&device().lossless(), log);
    let (peak_idx, _) = p2
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |acc, (i, &p)| if p > acc.1 { (i, p) } else { acc });
    let t_peak = times[peak_idx];
    o.check(
        (t_peak - 5.0).abs() <= 0.1,
        format!("P2 peaks at t = {t_peak:.2} ns (5 ± 0.1)"),
    );
    let at_10 = |t: &[f64], p: &[f64]| {
        let k = t
            .iter()
            .position(|&x| (x - 10.0).abs() < 1e-9)
            .expect("10 ns is sampled");
        p[k]
    };
    let lossless = at_10(&times, &p3);
    o.check(lossless >= 0.999, format!("lossless P3(10) = {lossless:.6} (≥ 0.999)"));

    let (t50, [_, _, p3_50]) = transfer_populations(&DeviceParams::reference().with_lifetimes(50.0, 50.0), log);
    let (t10, [_, _, p3_10]) = transfer_populations(&DeviceParams::reference().with_lifetimes(10.0, 10.0), log);
    let (l50, l10) = (at_10(&t50, &p3_50), at_10(&t10, &p3_10));
    o.check(
        l10 < l50 && l50 < lossless,
        format!("P3(10): 10 µs {l10:.6} < 50 µs {l50:.6} < lossless {lossless:.6}"),
    );
    o
}

fn criterion_4(log: &mut PhysLog) -> Outcome {
    let mut o = Outcome::new();
    for (lifetime, g, want) in [(10.0, 22.0, 58.1), (20.0, 19.0, 65.8), (50.0, 13.0, 91.5)] {
        let dev = DeviceParams {
            g_ge_mhz: g,
            ..DeviceParams::reference().with_lifetimes(lifetime, lifetime)
        };
        let t = cphase_schedule_5step(&dev).unwrap().total_duration_ns();
        o.check(
            (t - want).abs() <= 0.1,
            format!("Γ⁻¹ = {lifetime} µs, g = {g} MHz: T = {t:.3} ns ({want} ± 0.1)"),
        );
    }
    let sweep = sweep_kappa_gamma(
        &DeviceParams::reference(),
        &[10.0, 20.0, 30.0, 40.0, 50.0],
        None,
        &SweepOptions::default(),
    )
    .unwrap();
    let fs: Vec<f64> = sweep.points.iter().map(|p| p.fidelity).collect();
    let increasing = fs.windows(2).all(|w| w[1] > w[0]);
    let listed: Vec<String> = fs.iter().map(|f| format!("{f:.5}")).collect();
    o.check(
        increasing,
        format!("F over 10..50 µs = [{}] strictly increasing", listed.join(", ")),
    );
    for p in &sweep.points {
        log.record(format!("lifetime sweep {} µs", p.x), p.physicality);
    }
    o
}

fn oracle_case() -> impl Strategy<Value = OracleCase> {
    let g = 5.0..50.0f64;
    prop_oneof![
        (0..2usize, g.clone()).prop_map(|(resonator, g_mhz)| OracleCase::Swap { resonator, g_mhz }),
        (prop_oneof![Just(Transition::Ge), Just(Transition::Ef)], g.clone())
            .prop_map(|(transition, g_mhz)| OracleCase::Jc { transition, g_mhz }),
        (g.clone(), -2.0..2.0f64, 0..2usize).prop_map(|(g_mhz, detuning_ghz, n)| OracleCase::Rabi {
            g_mhz,
            detuning_ghz,
            n
        }),
        (g.clone(), g).prop_map(|(g1_mhz, g_ge_mhz)| OracleCase::Chain { g1_mhz, g_ge_mhz }),
    ]
}

fn criterion_5() -> Outcome {
    let mut o = Outcome::new();
    let l = layout(3);
    let mut worst = 0.0f64;
    for (name, case, t) in protocol_oracle_cases(&device()) {
        let d = oracle_deviation(l, &case, t, 8, Method::rk45_default()).unwrap();
        worst = worst.max(d);
        o.check(d <= 1e-6, format!("{name} {d:.1e}"));
    }
    let config = Config {
        cases: 24,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    let random_worst = std::cell::Cell::new(0.0f64);
    let result = runner.run(&(oracle_case(), 1.0..30.0f64), |(case, t)| {
        let d =
            oracle_deviation(l, &case, t, 4, Method::rk45_default()).map_err(|e| TestCaseError::fail(e.to_string()))?;
        random_worst.set(random_worst.get().max(d));
        prop_assert!(d <= 1e-6, "{case:?} over {t} ns deviates by {d:e}");
        Ok(())
    });
    let random = random_worst.get();
    match result {
        Ok(()) => o.check(true, format!("24 random cases, worst {random:.1e}")),
        Err(e) => o.check(false, format!("random cases: {e}")),
    }
    o.check(
        worst.max(random) <= 1e-6,
        format!("max amplitude error {:.1e} (≤ 1e-6)", worst.max(random)),
    );
    o
}

fn criterion_6(log: &PhysLog) -> Outcome {
    let mut o = Outcome::new();
    let mut worst = Physicality::IDEAL;
    for (what, p) in &log.0 {
        let ok =
            p.trace_error <= TRACE_TOL && p.hermiticity_error <= HERMITICITY_TOL && p.min_eigenvalue >= MIN_EIG_TOL;
        if !ok {
            o.check(false, format!("{what}: {p:?}"));
        }
        worst = worst.worst(*p);
    }
    o.check(
        o.pass,
        format!(
            "{} runs, worst |Tr-1| {:.1e}, ‖ρ-ρ†‖ {:.1e}, min eig {:.1e}",
            log.0.len(),
            worst.trace_error,
            worst.hermiticity_error,
            worst.min_eigenvalue
        ),
    );
    o
}

fn criterion_7(log: &mut PhysLog) -> Outcome {
    let mut o = Outcome::new();
    let (t3, t4) = (transfer_at(3, Method::Exact, log), transfer_at(4, Method::Exact, log));
    o.check(
        (t3 - t4).abs() <= 1e-4,
        format!("transfer d=3 vs 4: {:.1e}", (t3 - t4).abs()),
    );
    let g3 = gate_at(3, 16, log).value;
    let g4 = gate_at(4, 16, log).value;
    o.check(
        (g3 - g4).abs() <= 1e-4,
        format!("gate d=3 vs 4: {:.1e}", (g3 - g4).abs()),
    );
    let g8 = gate_at(3, 8, log).value;
    o.check(
        (g8 - g3).abs() <= 1e-6,
        format!("grid 8 vs 16: {:.1e}", (g8 - g3).abs()),
    );
    let rk45 = transfer_at(3, Method::rk45_default(), log);
    let rk4 = transfer_at(3, Method::Rk4 { dt_ns: 1e-3 }, log);
    o.check(
        (rk45 - rk4).abs() <= 1e-7,
        format!("RK45 vs RK4: {:.1e}", (rk45 - rk4).abs()),
    );
    o
}

fn criterion_8() -> Outcome {
    let mut o = Outcome::new();
    let dev = device();
    let l = layout(3);
    for (name, s) in [
        ("5-step", cphase_schedule_5step(&dev).unwrap()),
        ("7-step", cphase_schedule_7step(&dev).unwrap()),
    ] {
        let dev_ok = verify_ideal_action(l, &dev, &s);
        let d = match dev_ok {
            Ok(d) => d,
            Err(e) => {
                o.check(false, format!("{name}: {e}"));
                continue;
            }
        };
        o.check(d <= IDEAL_ACTION_TOLERANCE, format!("{name} deviation {d:.1e}"));
        let u = ideal_action(l, &dev, &s);
        let phase = u[(0, 0)] / u[(0, 0)].norm();
        let signs: Vec<f64> = (0..4).map(|k| (u[(k, k)] / phase).re.signum()).collect();
        o.check(
            signs == CPHASE_SIGNS,
            format!(
                "{name} signs {:?}",
                signs
                    .iter()
                    .map(|s| if *s > 0.0 { '+' } else { '-' })
                    .collect::<String>()
            ),
        );
    }
    o
}

#[test]
fn acceptance() {
    let mut log = PhysLog::default();
    let results = [
        ("1 state transfer", criterion_1(&mut log)),
        ("2 c-phase gate", criterion_2(&mut log)),
        ("3 transfer populations", criterion_3(&mut log)),
        ("4 lifetime anchors", criterion_4(&mut log)),
        ("5 oracle equivalence", criterion_5()),
        ("7 convergence", criterion_7(&mut log)),
        ("8 ideal unitary", criterion_8()),
    ];
    let physical = criterion_6(&log);
    let mut lines = String::new();
    let mut failed = Vec::new();
    let mut all: Vec<(&str, &Outcome)> = results.iter().map(|(n, o)| (*n, o)).collect();
    all.insert(5, ("6 physicality", &physical));
    for (name, o) in all {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        writeln!(lines, "criterion {name}: {tag} ({})", o.detail).unwrap();
        if !o.pass {
            failed.push(name);
        }
    }
    println!("{lines}");
    assert!(failed.is_empty(), "failed criteria: {failed:?}\n{lines}");
}
