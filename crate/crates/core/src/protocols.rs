//! Control schedules and ideal input/output states of the two protocols:
//! photon-state transfer `r1 → r2` through the bus, and the controlled-phase
//! gate on the photon qubits stored in `r1`, `r2`.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::analytic::{resonant_propagator, RESONANCE_TOLERANCE_GHZ};
use crate::dynamics::{ControlKnobs, ControlSchedule, DeviceParams, Segment};
use crate::error::{Error, Result};
use crate::fockspace::{CMatrix, CVector, Level, Operator, PureState, SpaceLayout, C64, ZERO};
use crate::units::mhz_to_rad_per_ns;

/// Largest deviation from the controlled-phase unitary accepted when
/// verifying a schedule by composing its ideal segment propagators.
pub const IDEAL_ACTION_TOLERANCE: f64 = 1e-10;

/// Phases of the controlled-phase gate on `|n1 n2>` = 00, 01, 10, 11.
pub const CPHASE_SIGNS: [f64; 4] = [1.0, -1.0, 1.0, 1.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolKind {
    StateTransfer,
    Cphase5Step,
    Cphase7Step,
}

/// Length of the second transfer swap: `g2 t = π/2` leaves a minus sign on
/// the one-photon component, `g2 t = 3π/2` leaves a plus sign.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransferVariant {
    #[default]
    SignMinus,
    SignPlus,
}

/// A protocol together with its input angles. For state transfer only
/// `theta1` is used.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSpec {
    pub kind: ProtocolKind,
    pub variant: TransferVariant,
    pub theta1: f64,
    pub theta2: f64,
}

impl ProtocolSpec {
    pub fn transfer(theta: f64, variant: TransferVariant) -> Self {
        ProtocolSpec {
            kind: ProtocolKind::StateTransfer,
            variant,
            theta1: theta,
            theta2: 0.0,
        }
    }

    pub fn cphase(kind: ProtocolKind, theta1: f64, theta2: f64) -> Self {
        ProtocolSpec {
            kind,
            variant: TransferVariant::default(),
            theta1,
            theta2,
        }
    }

    /// Schedule for this protocol; transfer uses the largest allowed coupling.
    pub fn schedule(&self, dev: &DeviceParams) -> Result<ControlSchedule> {
        match self.kind {
            ProtocolKind::StateTransfer => state_transfer_schedule(dev, dev.g_max_mhz, self.variant),
            ProtocolKind::Cphase5Step => cphase_schedule_5step(dev),
            ProtocolKind::Cphase7Step => cphase_schedule_7step(dev),
        }
    }

    pub fn initial_state(&self, layout: SpaceLayout) -> Result<PureState> {
        match self.kind {
            ProtocolKind::StateTransfer => transfer_initial_state(layout, self.theta1),
            _ => cphase_initial_state(layout, self.theta1, self.theta2),
        }
    }

    pub fn ideal_final_state(&self, layout: SpaceLayout) -> Result<PureState> {
        match self.kind {
            ProtocolKind::StateTransfer => transfer_final_state(layout, self.theta1, self.variant),
            _ => cphase_final_state(layout, self.theta1, self.theta2),
        }
    }
}

/// Time (ns) for `g t = phase` with `g` given as g/2π in MHz.
pub fn duration_for_phase(g_mhz: f64, phase: f64) -> f64 {
    phase / mhz_to_rad_per_ns(g_mhz)
}

fn check_coupling(dev: &DeviceParams, name: &str, g_mhz: f64) -> Result<()> {
    if !(g_mhz > 0.0 && g_mhz.is_finite()) {
        return Err(Error::DegenerateSchedule(format!(
            "{name} = {g_mhz} MHz cannot complete an exchange"
        )));
    }
    if g_mhz > dev.g_max_mhz {
        return Err(Error::param(
            "g_op_mhz",
            format!("{g_mhz} MHz exceeds the coupler limit of {} MHz", dev.g_max_mhz),
        ));
    }
    Ok(())
}

/// Two swaps `r1 → R → r2` with the qutrit parked far from the bus.
pub fn state_transfer_schedule(dev: &DeviceParams, g_op_mhz: f64, variant: TransferVariant) -> Result<ControlSchedule> {
    check_coupling(dev, "g_op", g_op_mhz)?;
    let park = dev.parking_ghz;
    let second = match variant {
        TransferVariant::SignMinus => FRAC_PI_2,
        TransferVariant::SignPlus => 3.0 * FRAC_PI_2,
    };
    let label = match variant {
        TransferVariant::SignMinus => "state-transfer",
        TransferVariant::SignPlus => "state-transfer-sign-plus",
    };
    Ok(ControlSchedule::new(
        label,
        vec![
            Segment {
                duration_ns: duration_for_phase(g_op_mhz, FRAC_PI_2),
                knobs: ControlKnobs::new(g_op_mhz, 0.0, park),
            },
            Segment {
                duration_ns: duration_for_phase(g_op_mhz, second),
                knobs: ControlKnobs::new(0.0, g_op_mhz, park),
            },
        ],
    ))
}

/// Qutrit g↔e frequency that puts its e↔f transition on the bus.
pub fn ef_resonant_omega_ge(dev: &DeviceParams) -> f64 {
    dev.omega_r_ghz + dev.anharmonicity_ghz
}

fn check_ef_resonance(dev: &DeviceParams, omega_ge_ghz: f64) -> Result<()> {
    let omega_ef = dev.omega_ef_ghz(omega_ge_ghz);
    if (omega_ef - dev.omega_r_ghz).abs() > RESONANCE_TOLERANCE_GHZ {
        return Err(Error::MisconfiguredAnharmonicity {
            omega_ef_ghz: omega_ef,
            omega_r_ghz: dev.omega_r_ghz,
        });
    }
    Ok(())
}

fn check_parking(dev: &DeviceParams) -> Result<()> {
    let omega_ef = dev.omega_ef_ghz(dev.parking_ghz);
    if !(omega_ef > 0.0) {
        return Err(Error::MisconfiguredAnharmonicity {
            omega_ef_ghz: omega_ef,
            omega_r_ghz: dev.omega_r_ghz,
        });
    }
    if (dev.parking_ghz - dev.omega_r_ghz).abs() <= RESONANCE_TOLERANCE_GHZ
        || (omega_ef - dev.omega_r_ghz).abs() <= RESONANCE_TOLERANCE_GHZ
    {
        return Err(Error::param(
            "parking_ghz",
            "the parked qutrit must be detuned from the bus on both transitions",
        ));
    }
    Ok(())
}

/// Five-step gate. Step iii uses the g↔e frequency `ω_R + δ`.
pub fn cphase_schedule_5step(dev: &DeviceParams) -> Result<ControlSchedule> {
    cphase_schedule_5step_at(dev, ef_resonant_omega_ge(dev))
}

/// Five-step gate with an explicit step-iii qutrit frequency, which must
/// bring the e↔f transition into resonance with the bus.
pub fn cphase_schedule_5step_at(dev: &DeviceParams, step3_omega_ge_ghz: f64) -> Result<ControlSchedule> {
    check_ef_resonance(dev, step3_omega_ge_ghz)?;
    check_parking(dev)?;
    let g = dev.g_ge_mhz;
    check_coupling(dev, "g_ge", g)?;
    let g_swap = dev.g_max_mhz;
    let chain = Segment {
        duration_ns: duration_for_phase(SQRT_2 * g, PI),
        knobs: ControlKnobs::new(g, 0.0, dev.omega_r_ghz),
    };
    let swap2 = Segment {
        duration_ns: duration_for_phase(g_swap, FRAC_PI_2),
        knobs: ControlKnobs::new(0.0, g_swap, dev.parking_ghz),
    };
    let phase = Segment {
        duration_ns: duration_for_phase(dev.g_ef_mhz(), PI),
        knobs: ControlKnobs::new(0.0, 0.0, step3_omega_ge_ghz),
    };
    Ok(ControlSchedule::new(
        "cphase-5step",
        vec![chain.clone(), swap2.clone(), phase, swap2, chain],
    ))
}

/// Seven-step gate. Its segment durations are the resonance times of each
/// exchange; the schedule is only returned if composing the ideal segment
/// propagators reproduces the controlled-phase unitary.
pub fn cphase_schedule_7step(dev: &DeviceParams) -> Result<ControlSchedule> {
    let step4 = ef_resonant_omega_ge(dev);
    check_ef_resonance(dev, step4)?;
    check_parking(dev)?;
    check_coupling(dev, "g_ge", dev.g_ge_mhz)?;
    let (park, g_swap) = (dev.parking_ghz, dev.g_max_mhz);
    let swap = |g1, g2| Segment {
        duration_ns: duration_for_phase(g_swap, FRAC_PI_2),
        knobs: ControlKnobs::new(g1, g2, park),
    };
    let load = Segment {
        duration_ns: duration_for_phase(dev.g_ge_mhz, FRAC_PI_2),
        knobs: ControlKnobs::new(0.0, 0.0, dev.omega_r_ghz),
    };
    let phase = Segment {
        duration_ns: duration_for_phase(dev.g_ef_mhz(), PI),
        knobs: ControlKnobs::new(0.0, 0.0, step4),
    };
    let mut schedule = ControlSchedule::new(
        "cphase-7step",
        vec![
            swap(g_swap, 0.0),
            load.clone(),
            swap(0.0, g_swap),
            phase,
            swap(0.0, g_swap),
            load,
            swap(g_swap, 0.0),
        ],
    );
    schedule.derived_durations = true;
    verify_ideal_action(SpaceLayout::default(), dev, &schedule)?;
    Ok(schedule)
}

/// Product of the ideal (resonant-coupling-only) segment propagators.
/// Zero-length segments are allowed and act as the identity.
pub fn ideal_propagator(layout: SpaceLayout, dev: &DeviceParams, schedule: &ControlSchedule) -> Operator {
    schedule.segments.iter().fold(Operator::identity(layout), |acc, seg| {
        &resonant_propagator(layout, dev, &seg.knobs, seg.duration_ns) * &acc
    })
}

/// Indices of `|n1, 0, n2, g>` for `(n1, n2)` = 00, 01, 10, 11.
pub fn logical_indices(layout: SpaceLayout) -> [usize; 4] {
    [(0, 0), (0, 1), (1, 0), (1, 1)].map(|(n1, n2)| {
        layout
            .index(n1, 0, n2, Level::G)
            .expect("every truncation holds one photon")
    })
}

/// Ideal action of a schedule restricted to the logical subspace.
pub fn ideal_action(layout: SpaceLayout, dev: &DeviceParams, schedule: &ControlSchedule) -> Matrix4<C64> {
    let u = ideal_propagator(layout, dev, schedule);
    let idx = logical_indices(layout);
    Matrix4::from_fn(|r, c| u.matrix()[(idx[r], idx[c])])
}

/// Largest entry of `e^{-iφ}U − diag(+1, −1, +1, +1)` with the global
/// phase `φ` fixed by the `|00>` entry.
pub fn cphase_deviation(u: &Matrix4<C64>) -> f64 {
    let anchor = u[(0, 0)];
    let phase = if anchor.norm() > 0.0 {
        anchor.conj() / anchor.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    let mut worst: f64 = 0.0;
    for r in 0..4 {
        for c in 0..4 {
            let want = if r == c { CPHASE_SIGNS[r] } else { 0.0 };
            worst = worst.max((u[(r, c)] * phase - C64::new(want, 0.0)).norm());
        }
    }
    worst
}

/// Fails unless the schedule's ideal action is the controlled-phase gate.
pub fn verify_ideal_action(layout: SpaceLayout, dev: &DeviceParams, schedule: &ControlSchedule) -> Result<f64> {
    let deviation = cphase_deviation(&ideal_action(layout, dev, schedule));
    if deviation > IDEAL_ACTION_TOLERANCE {
        return Err(Error::IdealActionMismatch {
            label: schedule.label.clone(),
            deviation,
        });
    }
    Ok(deviation)
}

fn from_terms(layout: SpaceLayout, terms: &[((usize, usize), C64)]) -> Result<PureState> {
    let mut amps = CVector::from_element(layout.total_dim(), ZERO);
    for &((n1, n2), a) in terms {
        amps[layout.index(n1, 0, n2, Level::G)?] += a;
    }
    PureState::normalized(layout, amps)
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `(cos θ |0>_1 + sin θ |1>_1) |0>_R |0>_2 |g>`
pub fn transfer_initial_state(layout: SpaceLayout, theta: f64) -> Result<PureState> {
    from_terms(layout, &[((0, 0), real(theta.cos())), ((1, 0), real(theta.sin()))])
}

/// `|0>_1 |0>_R (cos θ |0>_2 ∓ sin θ |1>_2) |g>`
pub fn transfer_final_state(layout: SpaceLayout, theta: f64, variant: TransferVariant) -> Result<PureState> {
    let sign = match variant {
        TransferVariant::SignMinus => -1.0,
        TransferVariant::SignPlus => 1.0,
    };
    from_terms(
        layout,
        &[((0, 0), real(theta.cos())), ((0, 1), real(sign * theta.sin()))],
    )
}

/// `α = (cosθ1 cosθ2, cosθ1 sinθ2, sinθ1 cosθ2, sinθ1 sinθ2)` on 00, 01, 10, 11.
pub fn cphase_alphas(theta1: f64, theta2: f64) -> [f64; 4] {
    let (s1, c1) = theta1.sin_cos();
    let (s2, c2) = theta2.sin_cos();
    [c1 * c2, c1 * s2, s1 * c2, s1 * s2]
}

/// `(α1|00> + α2|01> + α3|10> + α4|11>) |0>_R |g>`
pub fn cphase_initial_state(layout: SpaceLayout, theta1: f64, theta2: f64) -> Result<PureState> {
    let a = cphase_alphas(theta1, theta2);
    from_terms(
        layout,
        &[
            ((0, 0), real(a[0])),
            ((0, 1), real(a[1])),
            ((1, 0), real(a[2])),
            ((1, 1), real(a[3])),
        ],
    )
}

/// `(α1|00> − α2|01> + α3|10> + α4|11>) |0>_R |g>`
pub fn cphase_final_state(layout: SpaceLayout, theta1: f64, theta2: f64) -> Result<PureState> {
    let a = cphase_alphas(theta1, theta2);
    let s = CPHASE_SIGNS;
    from_terms(
        layout,
        &[
            ((0, 0), real(s[0] * a[0])),
            ((0, 1), real(s[1] * a[1])),
            ((1, 0), real(s[2] * a[2])),
            ((1, 1), real(s[3] * a[3])),
        ],
    )
}

/// `|<target| U |initial>|²` for a unitary on the full layout.
pub fn unitary_state_fidelity(u: &Operator, initial: &PureState, target: &PureState) -> Result<f64> {
    let out = u.apply(initial)?;
    let t: &CVector = target.amplitudes();
    Ok(t.dotc(&out).norm_sqr())
}

/// Matrix of a schedule's ideal action as a full-layout matrix; exposed for
/// callers that want to apply it to density matrices.
pub fn ideal_propagator_matrix(layout: SpaceLayout, dev: &DeviceParams, schedule: &ControlSchedule) -> CMatrix {
    ideal_propagator(layout, dev, schedule).into_matrix()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn dev() -> DeviceParams {
        DeviceParams::default()
    }

    #[test]
    fn transfer_durations() {
        let s = state_transfer_schedule(&dev(), 50.0, TransferVariant::SignMinus).unwrap();
        assert!((s.segments[0].duration_ns - 5.0).abs() < 1e-12);
        assert!((s.total_duration_ns() - 10.0).abs() < 1e-12);
        let p = state_transfer_schedule(&dev(), 50.0, TransferVariant::SignPlus).unwrap();
        assert!((p.segments[1].duration_ns - 15.0).abs() < 1e-12);
        assert!((p.segments[1].duration_ns / s.segments[1].duration_ns - 3.0).abs() < 1e-12);
        assert_eq!(s.segments[0].knobs, ControlKnobs::new(50.0, 0.0, 5.0));
        assert_eq!(s.segments[1].knobs, ControlKnobs::new(0.0, 50.0, 5.0));
    }

    #[test]
    fn transfer_rejects_zero_and_excess_coupling() {
        assert!(matches!(
            state_transfer_schedule(&dev(), 0.0, TransferVariant::SignMinus),
            Err(Error::DegenerateSchedule(_))
        ));
        assert!(state_transfer_schedule(&dev(), 60.0, TransferVariant::SignMinus).is_err());
    }

    #[test]
    fn five_step_layout() {
        let s = cphase_schedule_5step(&dev()).unwrap();
        let d: Vec<f64> = s.segments.iter().map(|x| x.duration_ns).collect();
        let t1 = 1.0 / (2.0 * SQRT_2 * 0.013);
        for (got, want) in d.iter().zip([t1, 5.0, t1, 5.0, t1]) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
        assert!((s.segments[2].knobs.omega_ge_ghz - 7.37).abs() < 1e-12);
        assert!((dev().omega_ef_ghz(s.segments[2].knobs.omega_ge_ghz) - 6.65).abs() < 1e-12);
        assert_eq!(s.segments[0].knobs, ControlKnobs::new(13.0, 0.0, 6.65));
        assert_eq!(s.segments[1].knobs, ControlKnobs::new(0.0, 50.0, 5.0));
        assert!(!s.derived_durations);
        s.validate(&dev()).unwrap();
    }

    #[test]
    fn five_step_rejects_wrong_step_three() {
        assert!(matches!(
            cphase_schedule_5step_at(&dev(), 7.2),
            Err(Error::MisconfiguredAnharmonicity { .. })
        ));
    }

    #[test]
    fn seven_step_knobs() {
        let s = cphase_schedule_7step(&dev()).unwrap();
        let knobs: Vec<(f64, f64, f64)> = s
            .segments
            .iter()
            .map(|x| (x.knobs.g1_mhz, x.knobs.g2_mhz, x.knobs.omega_ge_ghz))
            .collect();
        let w4 = 6.65 + 0.72;
        let want = [
            (50.0, 0.0, 5.0),
            (0.0, 0.0, 6.65),
            (0.0, 50.0, 5.0),
            (0.0, 0.0, w4),
            (0.0, 50.0, 5.0),
            (0.0, 0.0, 6.65),
            (50.0, 0.0, 5.0),
        ];
        for (g, w) in knobs.iter().zip(want) {
            assert!((g.0 - w.0).abs() < 1e-12 && (g.1 - w.1).abs() < 1e-12 && (g.2 - w.2).abs() < 1e-12);
        }
        assert!(s.derived_durations);
    }

    #[test]
    fn zero_swap_rejected_by_ideal_action() {
        let mut s = cphase_schedule_7step(&dev()).unwrap();
        s.segments[2].duration_ns = 0.0;
        assert!(matches!(
            verify_ideal_action(SpaceLayout::default(), &dev(), &s),
            Err(Error::IdealActionMismatch { .. })
        ));
    }

    #[test]
    fn ideal_actions_are_cphase() {
        for s in [
            cphase_schedule_5step(&dev()).unwrap(),
            cphase_schedule_7step(&dev()).unwrap(),
        ] {
            let u = ideal_action(SpaceLayout::default(), &dev(), &s);
            assert!(cphase_deviation(&u) < 1e-10, "{}", s.label);
            let phase = u[(0, 0)].conj();
            let twice = u * u * phase * phase;
            assert!((twice - Matrix4::identity()).iter().all(|z| z.norm() < 1e-10));
            for k in 0..4 {
                assert!((u[(k, k)] * phase - C64::new(CPHASE_SIGNS[k], 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn initial_states() {
        let l = SpaceLayout::default();
        let psi = transfer_initial_state(l, FRAC_PI_4).unwrap();
        let h = FRAC_PI_4.cos();
        assert!((psi.amplitude(0, 0, 0, Level::G).unwrap() - real(h)).norm() < 1e-15);
        assert!((psi.amplitude(1, 0, 0, Level::G).unwrap() - real(h)).norm() < 1e-15);
        let c = cphase_initial_state(l, FRAC_PI_4, FRAC_PI_4).unwrap();
        for i in logical_indices(l) {
            assert!((c.amplitudes()[i] - real(0.5)).norm() < 1e-15);
        }
        let v = transfer_initial_state(l, 0.0).unwrap();
        assert!((v.amplitudes().norm() - 1.0).abs() < 1e-15);
        assert_eq!(v.max_excitations(), 0);
    }

    #[test]
    fn final_states_signs() {
        let l = SpaceLayout::default();
        let th = 0.3;
        let m = transfer_final_state(l, th, TransferVariant::SignMinus).unwrap();
        assert!((m.amplitude(0, 0, 1, Level::G).unwrap() - real(-th.sin())).norm() < 1e-15);
        let p = transfer_final_state(l, th, TransferVariant::SignPlus).unwrap();
        assert!((p.amplitude(0, 0, 1, Level::G).unwrap() - real(th.sin())).norm() < 1e-15);
        let c = cphase_final_state(l, 0.4, 1.1).unwrap();
        let a = cphase_alphas(0.4, 1.1);
        assert!((c.amplitude(0, 0, 1, Level::G).unwrap() - real(-a[1])).norm() < 1e-15);
        assert!((c.amplitude(1, 0, 1, Level::G).unwrap() - real(a[3])).norm() < 1e-15);
    }

    #[test]
    fn ideal_transfer_maps_input_to_output() {
        let l = SpaceLayout::default();
        for variant in [TransferVariant::SignMinus, TransferVariant::SignPlus] {
            let s = state_transfer_schedule(&dev(), 50.0, variant).unwrap();
            let u = ideal_propagator(l, &dev(), &s);
            for &th in &[0.0, 0.3, FRAC_PI_4, 1.2, 2.9] {
                let spec = ProtocolSpec::transfer(th, variant);
                let f =
                    unitary_state_fidelity(&u, &spec.initial_state(l).unwrap(), &spec.ideal_final_state(l).unwrap())
                        .unwrap();
                assert!(f > 1.0 - 1e-10, "{variant:?} θ={th}: {f}");
            }
        }
    }
}
