//! Configuration files and experiment runner behind the `resobus` binary.

use std::f64::consts::FRAC_PI_4;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analytic::{oracle_deviation, protocol_oracle_cases};
use crate::dynamics::{evolve, validate_frame, ControlSchedule, DeviceParams, Frame, Method, SolverOptions};
use crate::error::Error;
use crate::fockspace::{basis_state, Level, SpaceLayout};
use crate::metrics::{
    average_gate_fidelity, logical_block, population, sweep_delta, sweep_kappa_gamma, transfer_fidelity, SweepOptions,
    SweepResult, Threads,
};
use crate::protocols::{
    cphase_final_state, cphase_initial_state, cphase_schedule_5step, cphase_schedule_7step, state_transfer_schedule,
    transfer_final_state, transfer_initial_state, verify_ideal_action, TransferVariant,
};

/// Device block: lifetimes plus optional overrides of the reference values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceConfig {
    /// Resonator lifetime κ⁻¹ in µs (`inf` for lossless).
    pub kappa_inv_us: f64,
    /// Qutrit lifetime Γ⁻¹ in µs (`inf` for lossless).
    pub gamma_inv_us: f64,
    pub omega_r_ghz: f64,
    pub omega_res_ghz: [f64; 2],
    pub g_ge_mhz: f64,
    pub anharmonicity_ghz: f64,
    pub g_max_mhz: f64,
    pub parking_ghz: f64,
    pub tuning_span_ghz: f64,
    /// Overrides the f→e relaxation rate (1/µs).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_ef_per_us: Option<f64>,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        let r = DeviceParams::reference();
        DeviceConfig {
            kappa_inv_us: 50.0,
            gamma_inv_us: 50.0,
            omega_r_ghz: r.omega_r_ghz,
            omega_res_ghz: r.omega_res_ghz,
            g_ge_mhz: r.g_ge_mhz,
            anharmonicity_ghz: r.anharmonicity_ghz,
            g_max_mhz: r.g_max_mhz,
            parking_ghz: r.parking_ghz,
            tuning_span_ghz: r.tuning_span_ghz,
            gamma_ef_per_us: None,
        }
    }
}

impl DeviceConfig {
    pub fn to_params(&self) -> Result<DeviceParams, Error> {
        for (name, v) in [("kappa_inv_us", self.kappa_inv_us), ("gamma_inv_us", self.gamma_inv_us)] {
            if !(v > 0.0) {
                return Err(Error::param(name, format!("lifetime must be > 0, got {v}")));
            }
        }
        let mut dev = DeviceParams {
            omega_r_ghz: self.omega_r_ghz,
            omega_res_ghz: self.omega_res_ghz,
            g_ge_mhz: self.g_ge_mhz,
            anharmonicity_ghz: self.anharmonicity_ghz,
            g_max_mhz: self.g_max_mhz,
            parking_ghz: self.parking_ghz,
            tuning_span_ghz: self.tuning_span_ghz,
            ..DeviceParams::reference()
        }
        .with_lifetimes(self.kappa_inv_us, self.gamma_inv_us);
        if let Some(r) = self.gamma_ef_per_us {
            dev.gamma_ef = r;
        }
        dev.validate()?;
        Ok(dev)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Transfer,
    Cphase5,
    Cphase7,
    SweepKappa,
    SweepDelta,
    Validate,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Transfer => "transfer",
            ExperimentKind::Cphase5 => "cphase5",
            ExperimentKind::Cphase7 => "cphase7",
            ExperimentKind::SweepKappa => "sweep-kappa",
            ExperimentKind::SweepDelta => "sweep-delta",
            ExperimentKind::Validate => "validate",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    /// Transfer input angle (rad).
    pub theta: f64,
    /// Gate input angles (rad) for the exported logical block.
    pub theta1: f64,
    pub theta2: f64,
    pub variant: TransferVariant,
    /// Transfer coupling; defaults to the device limit.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_op_mhz: Option<f64>,
    /// Sweep abscissae: lifetimes (µs) or anharmonicities (GHz).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<f64>>,
    /// Fixed `g_ge` for every lifetime point instead of the paired table.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_override_mhz: Option<f64>,
    /// Schedule file (as written to `schedule.toml`) replacing the
    /// generated schedule of a transfer or gate run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule_file: Option<PathBuf>,
    pub grid_n: usize,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            kind: ExperimentKind::Transfer,
            theta: FRAC_PI_4,
            theta1: FRAC_PI_4,
            theta2: FRAC_PI_4,
            variant: TransferVariant::SignMinus,
            g_op_mhz: None,
            points: None,
            g_override_mhz: None,
            schedule_file: None,
            grid_n: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub method: Method,
    pub frame: Frame,
    /// Trajectory output stride (ns).
    pub sample_every_ns: f64,
    /// Fock levels of `r1`, `R`, `r2`.
    pub truncation: [usize; 3],
    pub threads: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            method: Method::Exact,
            frame: Frame::SegmentInteraction,
            sample_every_ns: 0.05,
            truncation: [3, 3, 3],
            threads: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub device: DeviceConfig,
    pub experiment: ExperimentSection,
    pub solver: SolverSection,
    pub output: OutputSection,
}

/// Command-line overrides applied on top of a config file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub truncation: Option<[usize; 3]>,
    pub grid_n: Option<usize>,
}

/// Failure of a CLI invocation, mapped onto the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("output error: {0}")]
    Io(String),
    #[error("acceptance threshold missed: {0}")]
    Threshold(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Threshold(_) => 4,
        }
    }
}

fn classify(e: Error) -> CliError {
    match e {
        Error::Solver { .. } | Error::GridPoint { .. } => CliError::Solver(e.to_string()),
        other => CliError::Config(other.to_string()),
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(t) = o.threads {
            self.solver.threads = t;
        }
        if let Some(d) = &o.out_dir {
            self.output.dir = d.clone();
        }
        if let Some(t) = o.truncation {
            self.solver.truncation = t;
        }
        if let Some(n) = o.grid_n {
            self.experiment.grid_n = n;
        }
    }

    pub fn layout(&self) -> Result<SpaceLayout, CliError> {
        SpaceLayout::new(self.solver.truncation).map_err(classify)
    }

    pub fn device(&self) -> Result<DeviceParams, CliError> {
        self.device.to_params().map_err(classify)
    }

    pub fn solver_options(&self) -> Result<SolverOptions, CliError> {
        let opts = SolverOptions {
            method: self.solver.method,
            frame: self.solver.frame,
            ..SolverOptions::default()
        };
        opts.validate().map_err(classify)?;
        if !(self.solver.sample_every_ns > 0.0) {
            return Err(CliError::Config("solver.sample_every_ns must be > 0".into()));
        }
        Ok(opts)
    }

    /// Schedule of the configured experiment; sweeps and validation report
    /// the default five-step gate.
    pub fn schedule(&self) -> Result<ControlSchedule, CliError> {
        let dev = self.device()?;
        if let Some(path) = &self.experiment.schedule_file {
            let s = load_schedule(path)?;
            s.validate(&dev).map_err(classify)?;
            return Ok(s);
        }
        let s = match self.experiment.kind {
            ExperimentKind::Transfer => state_transfer_schedule(
                &dev,
                self.experiment.g_op_mhz.unwrap_or(dev.g_max_mhz),
                self.experiment.variant,
            ),
            ExperimentKind::Cphase7 => cphase_schedule_7step(&dev),
            _ => cphase_schedule_5step(&dev),
        };
        s.map_err(classify)
    }
}

pub fn load_schedule(path: &Path) -> Result<ControlSchedule, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Table of the configured schedule.
pub fn print_schedule(config: &ExperimentConfig) -> Result<String, CliError> {
    let s = config.schedule()?;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "schedule: {}{}",
        s.label,
        if s.derived_durations {
            " (derived durations)"
        } else {
            ""
        }
    );
    let _ = writeln!(
        out,
        "{:>5} {:>8} {:>8} {:>10} {:>13}",
        "step", "g1/MHz", "g2/MHz", "w_ge/GHz", "duration/ns"
    );
    for (i, seg) in s.segments.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:>5} {:>8.2} {:>8.2} {:>10.2} {:>13.3}",
            roman(i + 1),
            seg.knobs.g1_mhz,
            seg.knobs.g2_mhz,
            seg.knobs.omega_ge_ghz,
            seg.duration_ns
        );
    }
    let _ = writeln!(out, "total {:.3} ns", s.total_duration_ns());
    Ok(out)
}

fn roman(n: usize) -> &'static str {
    ["i", "ii", "iii", "iv", "v", "vi", "vii", "viii", "ix", "x"]
        .get(n - 1)
        .copied()
        .unwrap_or("?")
}

/// Summary of one `run`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub experiment: String,
    pub fidelity: Option<f64>,
    pub duration_ns: Option<f64>,
    /// Largest cross-check deviation (validation runs only).
    pub max_deviation: Option<f64>,
    pub files: Vec<PathBuf>,
    pub message: String,
}

#[derive(Serialize)]
struct FidelityJson<'a> {
    experiment: &'a str,
    fidelity: f64,
    duration_ns: f64,
    grid_n: Option<usize>,
    schedule: &'a str,
    theta: Option<f64>,
    resonator_dims: [usize; 3],
    method: Method,
    frame: Frame,
    device: &'a DeviceParams,
    max_trace_error: f64,
    max_hermiticity_error: f64,
    min_eigenvalue: f64,
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(Writer {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
        self.files.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        s.push('\n');
        self.write(name, &s)
    }
}

fn schedule_toml(s: &ControlSchedule) -> String {
    toml::to_string(s).expect("schedule is serializable")
}

/// Runs the configured experiment and writes its artifacts.
pub fn run(config: &ExperimentConfig) -> Result<RunSummary, CliError> {
    let kind = config.experiment.kind;
    if kind == ExperimentKind::Validate {
        return validate(config);
    }
    let layout = config.layout()?;
    let dev = config.device()?;
    let opts = config.solver_options()?;
    let threads = Threads(config.solver.threads);
    let mut w = Writer::new(&config.output.dir)?;
    let exp = &config.experiment;

    match kind {
        ExperimentKind::Transfer => {
            let schedule = config.schedule()?;
            let theta = exp.theta;
            let initial = transfer_initial_state(layout, theta).map_err(classify)?;
            let target = transfer_final_state(layout, theta, exp.variant).map_err(classify)?;
            let report = transfer_fidelity(layout, &dev, &schedule, &opts, &initial, &target).map_err(classify)?;

            // Population curves start from a single photon in r1.
            let one = basis_state(layout, 1, 0, 0, Level::G).map_err(classify)?;
            let traj = evolve(
                &one.projector(),
                &dev,
                &schedule,
                &opts.with_sampling(config.solver.sample_every_ns),
            )
            .map_err(classify)?;
            let pops: Vec<Vec<f64>> = [(1, 0, 0), (0, 1, 0), (0, 0, 1)]
                .iter()
                .map(|&(a, b, c)| {
                    let psi = basis_state(layout, a, b, c, Level::G)?;
                    population(&traj, &psi)
                })
                .collect::<Result<_, _>>()
                .map_err(classify)?;
            let mut csv = String::from("t_ns,P1,P2,P3,trace,purity\n");
            for (k, t) in traj.times.iter().enumerate() {
                let _ = writeln!(
                    csv,
                    "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                    t, pops[0][k], pops[1][k], pops[2][k], traj.observables["trace"][k], traj.observables["purity"][k]
                );
            }
            w.write("trajectory.csv", &csv)?;

            let evolver_state = crate::dynamics::Evolver::new(layout, &dev, &schedule, opts, 1)
                .and_then(|e| e.final_state(&initial.projector()))
                .map_err(classify)?;
            w.json("logical_block.json", &logical_block(&evolver_state.0))?;
            write_fidelity(
                &mut w,
                kind,
                &dev,
                &schedule,
                report.value,
                None,
                Some(theta),
                layout,
                &opts,
                report.physicality,
            )?;
            w.write("schedule.toml", &schedule_toml(&schedule))?;
            Ok(RunSummary {
                experiment: kind.name().into(),
                fidelity: Some(report.value),
                duration_ns: Some(report.duration_ns),
                max_deviation: None,
                files: w.files,
                message: format!(
                    "transfer fidelity {:.6} after {:.3} ns",
                    report.value, report.duration_ns
                ),
            })
        }
        ExperimentKind::Cphase5 | ExperimentKind::Cphase7 => {
            let schedule = config.schedule()?;
            let report =
                average_gate_fidelity(layout, &dev, &schedule, &opts, exp.grid_n, threads).map_err(classify)?;
            let rho0 = cphase_initial_state(layout, exp.theta1, exp.theta2)
                .map_err(classify)?
                .projector();
            let (rho, _) = crate::dynamics::Evolver::new(layout, &dev, &schedule, opts, 2)
                .and_then(|e| e.final_state(&rho0))
                .map_err(classify)?;
            w.json("logical_block.json", &logical_block(&rho))?;
            let ideal = cphase_final_state(layout, exp.theta1, exp.theta2).map_err(classify)?;
            w.json("logical_block_ideal.json", &logical_block(&ideal.projector()))?;
            write_fidelity(
                &mut w,
                kind,
                &dev,
                &schedule,
                report.value,
                Some(exp.grid_n),
                None,
                layout,
                &opts,
                report.physicality,
            )?;
            w.write("schedule.toml", &schedule_toml(&schedule))?;
            Ok(RunSummary {
                experiment: kind.name().into(),
                fidelity: Some(report.value),
                duration_ns: Some(report.duration_ns),
                max_deviation: None,
                files: w.files,
                message: format!(
                    "average gate fidelity {:.6} over {}x{} grid, gate time {:.3} ns",
                    report.value, exp.grid_n, exp.grid_n, report.duration_ns
                ),
            })
        }
        ExperimentKind::SweepKappa | ExperimentKind::SweepDelta => {
            let sweep_opts = SweepOptions {
                layout,
                solver: opts,
                grid_n: exp.grid_n,
                threads,
            };
            let result = if kind == ExperimentKind::SweepKappa {
                let pts = exp.points.clone().unwrap_or_else(|| vec![10.0, 20.0, 30.0, 40.0, 50.0]);
                sweep_kappa_gamma(&dev, &pts, exp.g_override_mhz, &sweep_opts)
            } else {
                let pts = exp
                    .points
                    .clone()
                    .unwrap_or_else(|| vec![0.4, 0.5, 0.6, 0.72, 0.8, 0.9, 1.0]);
                sweep_delta(&dev, &pts, &sweep_opts)
            }
            .map_err(classify)?;
            w.write("sweep.csv", &sweep_csv(&result))?;
            w.json("sweep.json", &result)?;
            Ok(RunSummary {
                experiment: kind.name().into(),
                fidelity: None,
                duration_ns: None,
                max_deviation: None,
                files: w.files,
                message: sweep_csv(&result),
            })
        }
        ExperimentKind::Validate => unreachable!("handled above"),
    }
}

#[allow(clippy::too_many_arguments)]
fn write_fidelity(
    w: &mut Writer,
    kind: ExperimentKind,
    dev: &DeviceParams,
    schedule: &ControlSchedule,
    fidelity: f64,
    grid_n: Option<usize>,
    theta: Option<f64>,
    layout: SpaceLayout,
    opts: &SolverOptions,
    phys: crate::fockspace::Physicality,
) -> Result<(), CliError> {
    w.json(
        "fidelity.json",
        &FidelityJson {
            experiment: kind.name(),
            fidelity,
            duration_ns: schedule.total_duration_ns(),
            grid_n,
            schedule: &schedule.label,
            theta,
            resonator_dims: layout.resonator_dims(),
            method: opts.method,
            frame: opts.frame,
            device: dev,
            max_trace_error: phys.trace_error,
            max_hermiticity_error: phys.hermiticity_error,
            min_eigenvalue: phys.min_eigenvalue,
        },
    )
}

fn sweep_csv(r: &SweepResult) -> String {
    let axis = match r.axis {
        crate::metrics::SweepAxis::LifetimeUs => "lifetime_us",
        crate::metrics::SweepAxis::AnharmonicityGhz => "delta_ghz",
    };
    let mut csv = format!("{axis},fidelity,g_ge_mhz,duration_ns\n");
    for p in &r.points {
        let _ = writeln!(
            csv,
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            p.x, p.fidelity, p.g_ge_mhz, p.duration_ns
        );
    }
    csv
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub frame: Vec<Check>,
    pub oracle: Vec<Check>,
    pub ideal_action: Vec<Check>,
    pub max_deviation: f64,
}

/// Cross-checks of the integrator against the interaction picture and the
/// closed-form solutions, for every segment type of the protocols.
pub fn validation_report(config: &ExperimentConfig) -> Result<ValidationReport, CliError> {
    let layout = config.layout()?;
    let dev = config.device()?.lossless();
    let mut frame = Vec::new();
    let mut seen = Vec::new();
    let schedules = [
        state_transfer_schedule(&dev, dev.g_max_mhz, TransferVariant::SignMinus),
        cphase_schedule_5step(&dev),
        cphase_schedule_7step(&dev),
    ];
    let schedules: Vec<ControlSchedule> = schedules.into_iter().collect::<Result<_, _>>().map_err(classify)?;
    for s in &schedules {
        for (i, seg) in s.segments.iter().enumerate() {
            if seen.contains(&seg.knobs) {
                continue;
            }
            seen.push(seg.knobs);
            let d = validate_frame(layout, &dev, &seg.knobs, seg.duration_ns.min(100.0)).map_err(classify)?;
            frame.push(Check {
                name: format!("{} step {}", s.label, roman(i + 1)),
                deviation: d,
            });
        }
    }
    let mut oracle = Vec::new();
    for (name, case, t) in protocol_oracle_cases(&dev) {
        let d = oracle_deviation(layout, &case, t, 16, config.solver.method).map_err(classify)?;
        oracle.push(Check {
            name: name.to_string(),
            deviation: d,
        });
    }
    let mut ideal_action = Vec::new();
    for s in &schedules[1..] {
        let d = verify_ideal_action(layout, &dev, s).map_err(classify)?;
        ideal_action.push(Check {
            name: s.label.clone(),
            deviation: d,
        });
    }
    let max_deviation = frame
        .iter()
        .chain(&oracle)
        .chain(&ideal_action)
        .map(|c| c.deviation)
        .fold(0.0, f64::max);
    Ok(ValidationReport {
        frame,
        oracle,
        ideal_action,
        max_deviation,
    })
}

fn validate(config: &ExperimentConfig) -> Result<RunSummary, CliError> {
    let report = validation_report(config)?;
    let mut w = Writer::new(&config.output.dir)?;
    w.json("validate.json", &report)?;
    let mut msg = String::new();
    for (group, checks) in [
        ("frame", &report.frame),
        ("oracle", &report.oracle),
        ("ideal", &report.ideal_action),
    ] {
        for c in checks.iter() {
            let _ = writeln!(msg, "{group:>6}  {:<28} {:.3e}", c.name, c.deviation);
        }
    }
    let _ = write!(msg, "max deviation {:.3e}", report.max_deviation);
    Ok(RunSummary {
        experiment: "validate".into(),
        fidelity: None,
        duration_ns: None,
        max_deviation: Some(report.max_deviation),
        files: w.files,
        message: msg,
    })
}

/// Threshold checks used by `--assert`.
pub fn check_thresholds(config: &ExperimentConfig, summary: &RunSummary) -> Result<(), CliError> {
    let miss = |what: String| Err(CliError::Threshold(what));
    match config.experiment.kind {
        ExperimentKind::Transfer => {
            let f = summary.fidelity.unwrap_or(0.0);
            if (f - 0.9997).abs() > 5e-4 {
                return miss(format!("transfer fidelity {f:.6} not within 0.9997 ± 0.0005"));
            }
        }
        ExperimentKind::Cphase5 => {
            let f = summary.fidelity.unwrap_or(0.0);
            let t = summary.duration_ns.unwrap_or(0.0);
            if (f - 0.9966).abs() > 1e-3 {
                return miss(format!("gate fidelity {f:.6} not within 0.9966 ± 0.001"));
            }
            if (t - 91.5).abs() > 0.1 {
                return miss(format!("gate time {t:.3} ns not within 91.5 ± 0.1 ns"));
            }
        }
        ExperimentKind::Validate => {
            let d = summary.max_deviation.unwrap_or(f64::INFINITY);
            if d > 1e-6 {
                return miss(format!("max deviation {d:.3e} above 1e-6"));
            }
        }
        _ => {
            if let Some(f) = summary.fidelity {
                if !(0.0..=1.0 + 1e-9).contains(&f) {
                    return miss(format!("fidelity {f} outside [0, 1]"));
                }
            }
        }
    }
    Ok(())
}

/// Parses `d1,dR,d2`.
pub fn parse_truncation(s: &str) -> Result<[usize; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected d1,dR,d2, got `{s}`"));
    }
    let mut out = [0; 3];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.parse().map_err(|_| format!("`{p}` is not a positive integer"))?;
    }
    Ok(out)
}

/// Lifetime in µs of a rate in 1/µs; `inf` for zero.
pub fn lifetime_us(rate: f64) -> f64 {
    if rate == 0.0 {
        f64::INFINITY
    } else {
        1.0 / rate
    }
}
