//! Closed-form solutions of the resonant and near-resonant exchange
//! processes in the processor. They serve as an oracle for the numerical
//! integrator and as the ideal segment propagators of the protocols.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::dynamics::{ControlKnobs, DeviceParams, Evolver, HamiltonianTerms, Method, OperatorSet, SolverOptions};
use crate::error::{Error, Result};
use crate::fockspace::{CMatrix, CVector, Level, Operator, PureState, SpaceLayout, C64, I, ONE, ZERO};
use crate::units::{ghz_to_rad_per_ns, mhz_to_rad_per_ns};
use std::f64::consts::FRAC_PI_2;

/// Amplitudes of the pair `{|e,n>, |g,n+1>}` coupled by a Jaynes–Cummings
/// interaction `g(σ⁺a e^{iΔt} + h.c.)`, in the interaction picture.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RabiAmplitudes {
    pub c_e_n: C64,
    pub c_g_n1: C64,
    pub n: usize,
    /// Coupling in rad/ns.
    pub g: f64,
    /// Qubit–resonator detuning in rad/ns.
    pub delta: f64,
}

impl RabiAmplitudes {
    pub fn new(c_e_n: C64, c_g_n1: C64, n: usize, g: f64, delta: f64) -> Self {
        RabiAmplitudes {
            c_e_n,
            c_g_n1,
            n,
            g,
            delta,
        }
    }

    /// Ω = √(4g²(n+1) + Δ²)
    pub fn omega_rabi(&self) -> f64 {
        (4.0 * self.g * self.g * (self.n as f64 + 1.0) + self.delta * self.delta).sqrt()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c_e_n.norm_sqr() + self.c_g_n1.norm_sqr()
    }
}

/// Evolves the pair amplitudes for a time `t` (ns).
///
/// The exchange matrix element between `|e,n>` and `|g,n+1>` is `g√(n+1)`,
/// so the off-diagonal coefficient is `2g√(n+1)/Ω`.
pub fn rabi_evolve(c0: &RabiAmplitudes, t: f64) -> RabiAmplitudes {
    let omega = c0.omega_rabi();
    if omega == 0.0 {
        return *c0;
    }
    let (s, c) = (0.5 * omega * t).sin_cos();
    let coupling = 2.0 * c0.g * (c0.n as f64 + 1.0).sqrt() / omega;
    let detuning = c0.delta / omega;
    let phase = (I * (0.5 * c0.delta * t)).exp();
    let c_e = (c0.c_e_n * C64::new(c, -detuning * s) - I * coupling * s * c0.c_g_n1) * phase;
    let c_g = (c0.c_g_n1 * C64::new(c, detuning * s) - I * coupling * s * c0.c_e_n) * phase.conj();
    RabiAmplitudes {
        c_e_n: c_e,
        c_g_n1: c_g,
        ..*c0
    }
}

/// State of the bus and one information resonator restricted to
/// `{|0_R 0_j>, |0_R 1_j>, |1_R 0_j>}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairState {
    pub vacuum: C64,
    pub photon_in_resonator: C64,
    pub photon_in_bus: C64,
}

/// Resonant bus–resonator exchange applied to `cos θ |0_R 0_j> + sin θ |0_R 1_j>`
/// for coupling `g` (rad/ns) and time `t` (ns).
pub fn swap_state(theta: f64, g: f64, t: f64) -> PairState {
    let (s, c) = (g * t).sin_cos();
    PairState {
        vacuum: C64::new(theta.cos(), 0.0),
        photon_in_resonator: C64::new(theta.sin() * c, 0.0),
        photon_in_bus: C64::new(0.0, -theta.sin() * s),
    }
}

/// Which qutrit transition talks to the bus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Transition {
    Ge,
    Ef,
}

impl Transition {
    pub fn levels(self) -> (Level, Level) {
        match self {
            Transition::Ge => (Level::G, Level::E),
            Transition::Ef => (Level::E, Level::F),
        }
    }
}

/// `exp(-i g t (a σ⁺ + a† σ⁻))` for the chosen transition, acting on the bus
/// and qutrit and as the identity on `r1`, `r2`. `g` in rad/ns, `t` in ns.
pub fn jc_propagator(layout: SpaceLayout, which: Transition, g: f64, t: f64) -> Operator {
    let ops = OperatorSet::new(layout);
    let raise = match which {
        Transition::Ge => &ops.raise_ge,
        Transition::Ef => &ops.raise_ef,
    };
    let coupling = (&ops.a * raise).into_matrix();
    let h = &coupling + coupling.adjoint();
    let u = (h * C64::new(0.0, -g * t)).exp();
    Operator::from_matrix(layout, u).expect("layout dimensions")
}

/// Matrix element `<to_level, to_n| U |from_level, from_n>` of the resonant
/// two-level propagator written as
///
/// ```text
/// U = cos(gt√(a†a+1))|u><u| + cos(gt√(a†a))|l><l|
///     − i sin(gt√(a†a+1))/√(a†a+1) · a |u><l|
///     − i a† · sin(gt√(a†a+1))/√(a†a+1) |l><u|
/// ```
///
/// with `l`, `u` the lower and upper level of the transition. A level not
/// involved in the transition is left unchanged.
pub fn printed_jc_element(which: Transition, g: f64, t: f64, to: (Level, usize), from: (Level, usize)) -> C64 {
    let (lower, upper) = which.levels();
    let (to_level, m) = to;
    let (from_level, n) = from;
    let root = |k: usize| (k as f64).sqrt();
    if from_level != lower && from_level != upper {
        return if to == from { ONE } else { ZERO };
    }
    match (from_level == upper, to_level == upper, to_level == lower) {
        // |u,n> → cos(gt√(n+1)) |u,n>
        (true, true, _) if m == n => C64::new((g * t * root(n + 1)).cos(), 0.0),
        // |u,n> → −i sin(gt√(n+1)) |l,n+1>
        (true, _, true) if m == n + 1 => C64::new(0.0, -(g * t * root(n + 1)).sin()),
        // |l,n> → cos(gt√n) |l,n>
        (false, _, true) if m == n => C64::new((g * t * root(n)).cos(), 0.0),
        // |l,n> → −i sin(gt√n) |u,n−1>
        (false, true, _) if n >= 1 && m + 1 == n => C64::new(0.0, -(g * t * root(n)).sin()),
        _ => ZERO,
    }
}

/// Propagator of the single-excitation chain `|1,0,g> ↔ |0,1,g> ↔ |0,0,e>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainPropagator {
    /// Basis order `{|1_1 0_R g>, |0_1 1_R g>, |0_1 0_R e>}`.
    pub matrix: Matrix3<C64>,
    /// Equal couplings, the condition under which the end-to-end transfer
    /// is complete at `t = π/(√2 g)`.
    pub equal_couplings: bool,
}

/// Exact propagator of the chain with resonator–bus coupling `g1` and
/// bus–qutrit coupling `g_ge` (rad/ns), for time `t` (ns).
///
/// With `H³ = Ω²H`, `Ω = √(g1² + g_ge²)`, the exponential is
/// `I + (cos Ωt − 1) H²/Ω² − i sin(Ωt) H/Ω`.
pub fn three_level_chain(g1: f64, g_ge: f64, t: f64) -> ChainPropagator {
    let h = Matrix3::new(
        ZERO,
        C64::new(g1, 0.0),
        ZERO,
        C64::new(g1, 0.0),
        ZERO,
        C64::new(g_ge, 0.0),
        ZERO,
        C64::new(g_ge, 0.0),
        ZERO,
    );
    let omega = (g1 * g1 + g_ge * g_ge).sqrt();
    let matrix = if omega == 0.0 {
        Matrix3::identity()
    } else {
        let (s, c) = (omega * t).sin_cos();
        Matrix3::identity() + (h * h) * C64::new((c - 1.0) / (omega * omega), 0.0) - h * C64::new(0.0, s / omega)
    };
    ChainPropagator {
        matrix,
        equal_couplings: (g1 - g_ge).abs() <= 1e-12 * omega.max(1e-300),
    }
}

/// Frequencies closer than this (GHz) are treated as resonant.
pub const RESONANCE_TOLERANCE_GHZ: f64 = 1e-9;

/// Ideal propagator of one schedule segment: only couplings between
/// resonant partners are kept, every detuned coupling is dropped, and the
/// evolution is the exponential of that resonant Hamiltonian.
pub fn resonant_propagator(layout: SpaceLayout, dev: &DeviceParams, knobs: &ControlKnobs, t: f64) -> Operator {
    let ops = OperatorSet::new(layout);
    let n = layout.total_dim();
    let mut h = CMatrix::zeros(n, n);
    let resonant = |w: f64| (w - dev.omega_r_ghz).abs() <= RESONANCE_TOLERANCE_GHZ;
    let mut add = |coef_mhz: f64, op: Operator| {
        if coef_mhz != 0.0 {
            let m = op.into_matrix();
            h += (&m + m.adjoint()) * C64::new(mhz_to_rad_per_ns(coef_mhz), 0.0);
        }
    };
    if resonant(knobs.omega_ge_ghz) {
        add(dev.g_ge_mhz, &ops.a * &ops.raise_ge);
    }
    if resonant(dev.omega_ef_ghz(knobs.omega_ge_ghz)) {
        add(dev.g_ef_mhz(), &ops.a * &ops.raise_ef);
    }
    if resonant(dev.omega_res_ghz[0]) {
        add(knobs.g1_mhz, &ops.b1.adjoint() * &ops.a);
    }
    if resonant(dev.omega_res_ghz[1]) {
        add(knobs.g2_mhz, &ops.b2.adjoint() * &ops.a);
    }
    let u = (h * C64::new(0.0, -t)).exp();
    Operator::from_matrix(layout, u).expect("layout dimensions")
}

/// Interaction-picture amplitude `c_e,n` implied by a rotating-frame
/// amplitude of `|e,n>` at time `t` when the qutrit is detuned by `delta`.
pub fn to_interaction_picture(rotating_amplitude: C64, delta: f64, t: f64) -> C64 {
    rotating_amplitude * (I * delta * t).exp()
}

/// Resonant bus–resonator coupling of `g_mhz` expressed in rad/ns.
pub fn coupling_rad_per_ns(g_mhz: f64) -> f64 {
    mhz_to_rad_per_ns(g_mhz)
}

/// Detuning `ω_q − ω_R` in rad/ns.
pub fn detuning_rad_per_ns(omega_q_ghz: f64, omega_r_ghz: f64) -> f64 {
    ghz_to_rad_per_ns(omega_q_ghz - omega_r_ghz)
}

/// Closed-system process whose numerical evolution has an exact closed
/// form. Couplings not named in a case are switched off.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OracleCase {
    /// Resonant exchange between the bus and `r1` (`resonator = 0`) or `r2`.
    Swap { resonator: usize, g_mhz: f64 },
    /// Resonant qutrit–bus exchange on one transition.
    Jc { transition: Transition, g_mhz: f64 },
    /// Detuned g↔e exchange within `{|e,n>, |g,n+1>}`.
    Rabi { g_mhz: f64, detuning_ghz: f64, n: usize },
    /// Single-excitation chain `r1 – R – q`.
    Chain { g1_mhz: f64, g_ge_mhz: f64 },
}

fn zero_terms() -> HamiltonianTerms {
    HamiltonianTerms {
        delta_ge: 0.0,
        delta_ef: 0.0,
        delta_res: [0.0; 2],
        g_ge: 0.0,
        g_ef: 0.0,
        g_res: [0.0; 2],
    }
}

impl OracleCase {
    fn terms(&self) -> HamiltonianTerms {
        let mut t = zero_terms();
        match *self {
            OracleCase::Swap { resonator, g_mhz } => t.g_res[resonator] = mhz_to_rad_per_ns(g_mhz),
            OracleCase::Jc {
                transition: Transition::Ge,
                g_mhz,
            } => t.g_ge = mhz_to_rad_per_ns(g_mhz),
            OracleCase::Jc {
                transition: Transition::Ef,
                g_mhz,
            } => t.g_ef = mhz_to_rad_per_ns(g_mhz),
            OracleCase::Rabi {
                g_mhz, detuning_ghz, ..
            } => {
                t.g_ge = mhz_to_rad_per_ns(g_mhz);
                t.delta_ge = ghz_to_rad_per_ns(detuning_ghz);
            }
            OracleCase::Chain { g1_mhz, g_ge_mhz } => {
                t.g_res[0] = mhz_to_rad_per_ns(g1_mhz);
                t.g_ge = mhz_to_rad_per_ns(g_ge_mhz);
            }
        }
        t
    }

    fn validate(&self, layout: SpaceLayout) -> Result<()> {
        let bus = layout.resonator_dims()[1];
        match *self {
            OracleCase::Swap { resonator, .. } if resonator > 1 => {
                Err(Error::param("resonator", format!("{resonator} is not 0 or 1")))
            }
            OracleCase::Rabi { n, .. } if n + 1 >= bus => Err(Error::param(
                "n",
                format!("|g,{}> does not fit a bus of dimension {bus}", n + 1),
            )),
            _ => Ok(()),
        }
    }

    /// Basis states used as inputs.
    fn inputs(&self, layout: SpaceLayout) -> Vec<usize> {
        let ix = |n1, nb, n2, l| layout.index(n1, nb, n2, l).expect("inside truncation");
        match *self {
            OracleCase::Swap { resonator: 0, .. } => vec![ix(1, 0, 0, Level::G), ix(0, 1, 0, Level::G)],
            OracleCase::Swap { .. } => vec![ix(0, 0, 1, Level::G), ix(0, 1, 0, Level::G)],
            OracleCase::Jc { .. } => layout
                .labels()
                .enumerate()
                .filter(|(_, l)| l.n1 == 0 && l.n2 == 0 && (1..=2).contains(&l.excitations()))
                .filter(|(_, l)| l.n_bus + 1 < layout.resonator_dims()[1] || l.level == Level::G)
                .map(|(i, _)| i)
                .collect(),
            OracleCase::Rabi { n, .. } => vec![ix(0, n, 0, Level::E), ix(0, n + 1, 0, Level::G)],
            OracleCase::Chain { .. } => vec![ix(1, 0, 0, Level::G), ix(0, 1, 0, Level::G), ix(0, 0, 0, Level::E)],
        }
    }

    /// Closed-form image of basis state `k` after time `t`, in the
    /// interaction picture of the case's Hamiltonian.
    fn expected(&self, layout: SpaceLayout, k: usize, t: f64) -> CVector {
        let n = layout.total_dim();
        let mut out = CVector::from_element(n, ZERO);
        match *self {
            OracleCase::Swap { g_mhz, .. } => {
                let inputs = self.inputs(layout);
                let other = if k == inputs[0] { inputs[1] } else { inputs[0] };
                let s = swap_state(FRAC_PI_2, mhz_to_rad_per_ns(g_mhz), t);
                out[k] = s.photon_in_resonator;
                out[other] = s.photon_in_bus;
            }
            OracleCase::Jc { transition, g_mhz } => {
                let u = jc_propagator(layout, transition, mhz_to_rad_per_ns(g_mhz), t);
                out.copy_from(&u.matrix().column(k));
            }
            OracleCase::Rabi {
                g_mhz,
                detuning_ghz,
                n: photons,
            } => {
                let inputs = self.inputs(layout);
                let (c_e, c_g) = if k == inputs[0] { (ONE, ZERO) } else { (ZERO, ONE) };
                let c0 = RabiAmplitudes::new(
                    c_e,
                    c_g,
                    photons,
                    mhz_to_rad_per_ns(g_mhz),
                    ghz_to_rad_per_ns(detuning_ghz),
                );
                let c = rabi_evolve(&c0, t);
                out[inputs[0]] = c.c_e_n;
                out[inputs[1]] = c.c_g_n1;
            }
            OracleCase::Chain { g1_mhz, g_ge_mhz } => {
                let inputs = self.inputs(layout);
                let col = inputs.iter().position(|&i| i == k).expect("chain input");
                let u = three_level_chain(mhz_to_rad_per_ns(g1_mhz), mhz_to_rad_per_ns(g_ge_mhz), t);
                for (row, &i) in inputs.iter().enumerate() {
                    out[i] = u.matrix[(row, col)];
                }
            }
        }
        out
    }
}

/// Largest amplitude error between the integrated closed-system evolution
/// and the closed form of `case`, over `samples` equally spaced times in
/// `(0, t_end_ns]` and every input state of the case.
///
/// Each input `|k>` is evolved as `(|vac> + |k>)/√2`; the vacuum is
/// stationary, so the column `2ρ(t)[:, vac]` is the amplitude vector `U|k>`.
pub fn oracle_deviation(
    layout: SpaceLayout,
    case: &OracleCase,
    t_end_ns: f64,
    samples: usize,
    method: Method,
) -> Result<f64> {
    case.validate(layout)?;
    if !(t_end_ns > 0.0) || samples == 0 {
        return Err(Error::param("t_end_ns", "need a positive span and at least one sample"));
    }
    let opts = SolverOptions::default()
        .with_method(method)
        .with_sampling(t_end_ns / samples as f64);
    let evolver = Evolver::from_terms(layout, &[(case.terms(), t_end_ns)], &[], opts, 2)?;
    let vac = layout.index(0, 0, 0, Level::G)?;
    let mut worst: f64 = 0.0;
    for k in case.inputs(layout) {
        let mut amps = CVector::from_element(layout.total_dim(), ZERO);
        amps[vac] = ONE;
        amps[k] = ONE;
        let psi = PureState::normalized(layout, amps)?;
        let traj = evolver.run(&psi.projector())?;
        for (&t, rho) in traj.times.iter().zip(&traj.states).skip(1) {
            let mut want = case.expected(layout, k, t);
            want[vac] = ONE;
            for (i, w) in want.iter().enumerate() {
                let got = rho.matrix()[(i, vac)] * 2.0;
                worst = worst.max((got - w).norm());
            }
        }
    }
    Ok(worst)
}

/// Every exchange process the protocols rely on, with a span covering at
/// least its full operation.
pub fn protocol_oracle_cases(dev: &DeviceParams) -> Vec<(&'static str, OracleCase, f64)> {
    let g = dev.g_max_mhz;
    let swap_t = 3.0 * FRAC_PI_2 / mhz_to_rad_per_ns(g);
    let g_ge = dev.g_ge_mhz;
    let chain_t = 2.0 * std::f64::consts::PI / (std::f64::consts::SQRT_2 * mhz_to_rad_per_ns(g_ge));
    vec![
        ("swap-r1", OracleCase::Swap { resonator: 0, g_mhz: g }, swap_t),
        ("swap-r2", OracleCase::Swap { resonator: 1, g_mhz: g }, swap_t),
        (
            "chain",
            OracleCase::Chain {
                g1_mhz: g_ge,
                g_ge_mhz: g_ge,
            },
            chain_t,
        ),
        (
            "jc-ge",
            OracleCase::Jc {
                transition: Transition::Ge,
                g_mhz: g_ge,
            },
            chain_t,
        ),
        (
            "jc-ef",
            OracleCase::Jc {
                transition: Transition::Ef,
                g_mhz: dev.g_ef_mhz(),
            },
            chain_t,
        ),
        (
            "rabi-parked",
            OracleCase::Rabi {
                g_mhz: g_ge,
                detuning_ghz: dev.parking_ghz - dev.omega_r_ghz,
                n: 0,
            },
            swap_t,
        ),
        (
            "rabi-phase-step",
            OracleCase::Rabi {
                g_mhz: g_ge,
                detuning_ghz: dev.anharmonicity_ghz,
                n: 1,
            },
            chain_t,
        ),
    ]
}
