//! Populations, fidelities and parameter sweeps.

use std::f64::consts::TAU;

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::dynamics::{ControlSchedule, DeviceParams, Evolver, Frame, Method, SolverOptions, Trajectory};
use crate::error::{Error, Result};
use crate::fockspace::{DensityMatrix, Physicality, PureState, SpaceLayout, C64};
use crate::protocols::{
    cphase_final_state, cphase_initial_state, cphase_schedule_5step, ideal_propagator, logical_indices,
};

/// `P(t) = <ψ|ρ(t)|ψ>` at every sample of the trajectory.
pub fn population(traj: &Trajectory, target: &PureState) -> Result<Vec<f64>> {
    traj.states.iter().map(|rho| rho.expectation(target)).collect()
}

/// `F = <Ψ|ρ|Ψ>`
pub fn state_fidelity(rho: &DensityMatrix, target: &PureState) -> Result<f64> {
    rho.expectation(target)
}

/// Density matrix restricted to `|n1, 0, n2, g>` with `(n1, n2)` in the
/// order 00, 01, 10, 11.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogicalBlock {
    pub basis: [String; 4],
    pub real: [[f64; 4]; 4],
    pub imag: [[f64; 4]; 4],
}

pub fn logical_block(rho: &DensityMatrix) -> LogicalBlock {
    let idx = logical_indices(rho.layout());
    let m = rho.matrix();
    let block = Matrix4::<C64>::from_fn(|r, c| m[(idx[r], idx[c])]);
    LogicalBlock {
        basis: ["00", "01", "10", "11"].map(String::from),
        real: std::array::from_fn(|r| std::array::from_fn(|c| block[(r, c)].re)),
        imag: std::array::from_fn(|r| std::array::from_fn(|c| block[(r, c)].im)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FidelityKind {
    State,
    AverageGate,
}

/// Solver settings behind a reported number.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSummary {
    pub method: Method,
    pub frame: Frame,
    pub resonator_dims: [usize; 3],
    /// Dimension of the invariant block actually integrated.
    pub integrated_dim: usize,
}

impl SolverSummary {
    fn new(opts: &SolverOptions, evolver: &Evolver) -> Self {
        SolverSummary {
            method: opts.method,
            frame: opts.frame,
            resonator_dims: evolver.layout().resonator_dims(),
            integrated_dim: evolver.subspace().dim(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub value: f64,
    pub kind: FidelityKind,
    /// `(N1, N2)` for the average-gate grid.
    pub grid: Option<(usize, usize)>,
    pub schedule_label: String,
    pub duration_ns: f64,
    pub solver: Option<SolverSummary>,
    /// Worst tolerance figures seen over every evolution.
    pub physicality: Physicality,
}

/// Number of worker threads for grid and sweep evaluation. `0` means the
/// library default (all cores when the `parallel` feature is on).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Threads(pub usize);

/// Evaluates `f` at every index and returns the results in index order.
fn map_indexed<T, F>(n: usize, threads: Threads, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if threads.0 != 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.0)
                .build()
                .map_err(|e| Error::param("threads", e.to_string()))?;
            return pool.install(|| (0..n).into_par_iter().map(&f).collect());
        }
    }
    let _ = threads;
    (0..n).map(f).collect()
}

fn grid_angle(k: usize, n: usize) -> f64 {
    TAU * k as f64 / n as f64
}

fn check_grid(grid_n: usize) -> Result<()> {
    if grid_n < 4 {
        return Err(Error::param("grid_n", format!("need at least 4 points, got {grid_n}")));
    }
    Ok(())
}

/// Uniform-grid average of `f(θ1, θ2)`; the sum runs in fixed index order
/// so the value does not depend on the thread count.
fn grid_average<F>(grid_n: usize, threads: Threads, f: F) -> Result<(f64, Physicality)>
where
    F: Fn(f64, f64) -> Result<(f64, Physicality)> + Sync + Send,
{
    check_grid(grid_n)?;
    let values = map_indexed(grid_n * grid_n, threads, |k| {
        let (t1, t2) = (grid_angle(k / grid_n, grid_n), grid_angle(k % grid_n, grid_n));
        f(t1, t2).map_err(|e| Error::GridPoint {
            theta1: t1,
            theta2: t2,
            source: Box::new(e),
        })
    })?;
    let mut sum = 0.0;
    let mut worst = Physicality::IDEAL;
    for (v, p) in values {
        sum += v;
        worst = worst.worst(p);
    }
    Ok((sum / (grid_n * grid_n) as f64, worst))
}

/// Average over `θ1, θ2 ∈ [0, 2π)` of `<Ψ_ideal(θ1,θ2)|ρ(t_f)|Ψ_ideal(θ1,θ2)>`,
/// where `ρ(t_f)` is the evolved product input state, on a `grid_n × grid_n`
/// uniform grid.
pub fn average_gate_fidelity(
    layout: SpaceLayout,
    dev: &DeviceParams,
    schedule: &ControlSchedule,
    opts: &SolverOptions,
    grid_n: usize,
    threads: Threads,
) -> Result<FidelityReport> {
    check_grid(grid_n)?;
    let evolver = Evolver::new(layout, dev, schedule, *opts, 2)?;
    let (value, physicality) = grid_average(grid_n, threads, |t1, t2| {
        let rho0 = cphase_initial_state(layout, t1, t2)?.projector();
        let (rho, phys) = evolver.final_state(&rho0)?;
        Ok((state_fidelity(&rho, &cphase_final_state(layout, t1, t2)?)?, phys))
    })?;
    Ok(FidelityReport {
        value,
        kind: FidelityKind::AverageGate,
        grid: Some((grid_n, grid_n)),
        schedule_label: schedule.label.clone(),
        duration_ns: schedule.total_duration_ns(),
        solver: Some(SolverSummary::new(opts, &evolver)),
        physicality,
    })
}

/// Same average with the ideal segment propagators in place of the master
/// equation.
pub fn ideal_average_gate_fidelity(
    layout: SpaceLayout,
    dev: &DeviceParams,
    schedule: &ControlSchedule,
    grid_n: usize,
) -> Result<FidelityReport> {
    let u = ideal_propagator(layout, dev, schedule);
    let (value, physicality) = grid_average(grid_n, Threads(1), |t1, t2| {
        let out = u.apply(&cphase_initial_state(layout, t1, t2)?)?;
        let target = cphase_final_state(layout, t1, t2)?;
        Ok((target.amplitudes().dotc(&out).norm_sqr(), Physicality::IDEAL))
    })?;
    Ok(FidelityReport {
        value,
        kind: FidelityKind::AverageGate,
        grid: Some((grid_n, grid_n)),
        schedule_label: schedule.label.clone(),
        duration_ns: schedule.total_duration_ns(),
        solver: None,
        physicality,
    })
}

/// Fidelity of one evolved pure input against a target state.
pub fn transfer_fidelity(
    layout: SpaceLayout,
    dev: &DeviceParams,
    schedule: &ControlSchedule,
    opts: &SolverOptions,
    initial: &PureState,
    target: &PureState,
) -> Result<FidelityReport> {
    let evolver = Evolver::new(layout, dev, schedule, *opts, initial.max_excitations())?;
    let (rho, physicality) = evolver.final_state(&initial.projector())?;
    Ok(FidelityReport {
        value: state_fidelity(&rho, target)?,
        kind: FidelityKind::State,
        grid: None,
        schedule_label: schedule.label.clone(),
        duration_ns: schedule.total_duration_ns(),
        solver: Some(SolverSummary::new(opts, &evolver)),
        physicality,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    /// κ⁻¹ = Γ⁻¹ in µs.
    LifetimeUs,
    /// Qutrit anharmonicity δ in GHz.
    AnharmonicityGhz,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub x: f64,
    pub fidelity: f64,
    pub g_ge_mhz: f64,
    pub duration_ns: f64,
    pub physicality: Physicality,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
    pub notes: Vec<String>,
}

/// Lifetimes (µs) with their matching qutrit–bus couplings (MHz).
pub const LIFETIME_COUPLING_PAIRS: [(f64, f64); 5] =
    [(10.0, 22.0), (20.0, 19.0), (30.0, 13.0), (40.0, 13.0), (50.0, 13.0)];

/// Coupling paired with the tabulated lifetime closest to `lifetime_us`.
pub fn paired_coupling(lifetime_us: f64) -> f64 {
    LIFETIME_COUPLING_PAIRS
        .iter()
        .min_by(|a, b| (a.0 - lifetime_us).abs().total_cmp(&(b.0 - lifetime_us).abs()))
        .map(|p| p.1)
        .expect("nonempty table")
}

/// Settings shared by the sweeps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepOptions {
    pub layout: SpaceLayout,
    pub solver: SolverOptions,
    pub grid_n: usize,
    pub threads: Threads,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            layout: SpaceLayout::default(),
            solver: SolverOptions::default(),
            grid_n: 16,
            threads: Threads::default(),
        }
    }
}

fn sorted(mut points: Vec<SweepPoint>) -> Vec<SweepPoint> {
    points.sort_by(|a, b| a.x.total_cmp(&b.x));
    points
}

/// Five-step gate fidelity for each lifetime `κ⁻¹ = Γ⁻¹` (µs), with
/// `g_ge` taken from the paired table (nearest entry) unless
/// `g_override_mhz` is given.
pub fn sweep_kappa_gamma(
    dev_base: &DeviceParams,
    lifetimes_us: &[f64],
    g_override_mhz: Option<f64>,
    opts: &SweepOptions,
) -> Result<SweepResult> {
    if lifetimes_us.is_empty() {
        return Err(Error::param("points", "sweep needs at least one point"));
    }
    let mut points = Vec::with_capacity(lifetimes_us.len());
    let mut notes = Vec::new();
    for &life in lifetimes_us {
        if !(life > 0.0) {
            return Err(Error::param("points", format!("lifetime must be > 0, got {life}")));
        }
        let g = g_override_mhz.unwrap_or_else(|| paired_coupling(life));
        if g_override_mhz.is_none() && !LIFETIME_COUPLING_PAIRS.iter().any(|p| p.0 == life) {
            notes.push(format!(
                "{life} us: g_ge = {g} MHz taken from the nearest tabulated lifetime"
            ));
        }
        let mut dev = dev_base.clone().with_lifetimes(life, life);
        dev.g_ge_mhz = g;
        let schedule = cphase_schedule_5step(&dev)?;
        let report = average_gate_fidelity(opts.layout, &dev, &schedule, &opts.solver, opts.grid_n, opts.threads)?;
        points.push(SweepPoint {
            x: life,
            fidelity: report.value,
            g_ge_mhz: g,
            duration_ns: report.duration_ns,
            physicality: report.physicality,
        });
    }
    Ok(SweepResult {
        axis: SweepAxis::LifetimeUs,
        points: sorted(points),
        notes,
    })
}

/// Five-step gate fidelity against the anharmonicity δ (GHz), all else at
/// `dev_base`. The qutrit's tuning span is widened when a point needs it.
pub fn sweep_delta(dev_base: &DeviceParams, deltas_ghz: &[f64], opts: &SweepOptions) -> Result<SweepResult> {
    if deltas_ghz.is_empty() {
        return Err(Error::param("points", "sweep needs at least one point"));
    }
    let mut points = Vec::with_capacity(deltas_ghz.len());
    let mut notes = Vec::new();
    for &delta in deltas_ghz {
        if !(delta > 0.0) {
            return Err(Error::param("anharmonicity_ghz", format!("must be > 0, got {delta}")));
        }
        let mut dev = dev_base.clone();
        dev.anharmonicity_ghz = delta;
        let needed = dev.omega_r_ghz + delta - dev.parking_ghz.min(dev.omega_r_ghz);
        if needed > dev.tuning_span_ghz {
            notes.push(format!("{delta} GHz: tuning span widened to {needed:.3} GHz"));
            dev.tuning_span_ghz = needed;
        }
        let schedule = cphase_schedule_5step(&dev)?;
        let report = average_gate_fidelity(opts.layout, &dev, &schedule, &opts.solver, opts.grid_n, opts.threads)?;
        points.push(SweepPoint {
            x: delta,
            fidelity: report.value,
            g_ge_mhz: dev.g_ge_mhz,
            duration_ns: report.duration_ns,
            physicality: report.physicality,
        });
    }
    Ok(SweepResult {
        axis: SweepAxis::AnharmonicityGhz,
        points: sorted(points),
        notes,
    })
}
