use serde::{Deserialize, Serialize};

use crate::dynamics::params::{ControlKnobs, DeviceParams};
use crate::error::{Error, Result};
use crate::fockspace::{
    annihilation, qutrit_op, CMatrix, DensityMatrix, Operator, QutritOp, SpaceLayout, Subsystem, C64, I,
};
use crate::units::{ghz_to_rad_per_ns, mhz_to_rad_per_ns, per_us_to_per_ns};

/// Ladder and transition operators of one layout, built once.
#[derive(Clone, Debug)]
pub struct OperatorSet {
    pub layout: SpaceLayout,
    pub a: Operator,
    pub b1: Operator,
    pub b2: Operator,
    /// `|e><g|`
    pub raise_ge: Operator,
    /// `|f><e|`
    pub raise_ef: Operator,
    pub proj_e: Operator,
    pub proj_f: Operator,
}

impl OperatorSet {
    pub fn new(layout: SpaceLayout) -> Self {
        OperatorSet {
            layout,
            a: annihilation(layout, Subsystem::Bus).expect("bus is a mode"),
            b1: annihilation(layout, Subsystem::R1).expect("r1 is a mode"),
            b2: annihilation(layout, Subsystem::R2).expect("r2 is a mode"),
            raise_ge: qutrit_op(layout, QutritOp::RaiseGe),
            raise_ef: qutrit_op(layout, QutritOp::RaiseEf),
            proj_e: qutrit_op(layout, QutritOp::ProjectE),
            proj_f: qutrit_op(layout, QutritOp::ProjectF),
        }
    }

    fn b(&self, j: usize) -> &Operator {
        if j == 0 {
            &self.b1
        } else {
            &self.b2
        }
    }
}

/// Hamiltonian coefficients of one segment in rad/ns, relative to a frame
/// rotating at the bus frequency.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HamiltonianTerms {
    pub delta_ge: f64,
    pub delta_ef: f64,
    pub delta_res: [f64; 2],
    pub g_ge: f64,
    pub g_ef: f64,
    pub g_res: [f64; 2],
}

impl HamiltonianTerms {
    pub fn from_params(dev: &DeviceParams, knobs: &ControlKnobs) -> Self {
        let omega_r = dev.omega_r_ghz;
        HamiltonianTerms {
            delta_ge: ghz_to_rad_per_ns(knobs.omega_ge_ghz - omega_r),
            delta_ef: ghz_to_rad_per_ns(dev.omega_ef_ghz(knobs.omega_ge_ghz) - omega_r),
            delta_res: [
                ghz_to_rad_per_ns(dev.omega_res_ghz[0] - omega_r),
                ghz_to_rad_per_ns(dev.omega_res_ghz[1] - omega_r),
            ],
            g_ge: mhz_to_rad_per_ns(dev.g_ge_mhz),
            g_ef: mhz_to_rad_per_ns(dev.g_ef_mhz()),
            g_res: [mhz_to_rad_per_ns(knobs.g1_mhz), mhz_to_rad_per_ns(knobs.g2_mhz)],
        }
    }

    /// Diagonal of the free part `Δ_ge|e><e| + (Δ_ge+Δ_ef)|f><f| + Σ Δ_j b_j†b_j`.
    pub fn free_diagonal(&self, layout: SpaceLayout) -> Vec<f64> {
        layout
            .labels()
            .map(|l| {
                let q = match l.level.index() {
                    0 => 0.0,
                    1 => self.delta_ge,
                    _ => self.delta_ge + self.delta_ef,
                };
                q + self.delta_res[0] * l.n1 as f64 + self.delta_res[1] * l.n2 as f64
            })
            .collect()
    }

    /// Time-independent Hamiltonian in the frame rotating at ω_R.
    pub fn rotating(&self, ops: &OperatorSet) -> Operator {
        let layout = ops.layout;
        let n = layout.total_dim();
        let mut h = CMatrix::zeros(n, n);
        for (i, d) in self.free_diagonal(layout).into_iter().enumerate() {
            h[(i, i)] = C64::new(d, 0.0);
        }
        let mut add_pair = |coef: f64, op: &Operator| {
            if coef != 0.0 {
                let m = op.matrix();
                h += (m + m.adjoint()) * C64::new(coef, 0.0);
            }
        };
        add_pair(self.g_ge, &(&ops.a * &ops.raise_ge));
        add_pair(self.g_ef, &(&ops.a * &ops.raise_ef));
        for j in 0..2 {
            add_pair(self.g_res[j], &(&ops.b(j).adjoint() * &ops.a));
        }
        Operator::from_matrix(layout, h).expect("dimensions follow layout")
    }

    /// Interaction-picture Hamiltonian at time `t` (ns), with each coupling
    /// carrying its explicit `e^{iΔt}` phase.
    pub fn interaction_picture(&self, ops: &OperatorSet, t: f64) -> Operator {
        let layout = ops.layout;
        let n = layout.total_dim();
        let mut h = CMatrix::zeros(n, n);
        let mut add_rotating = |coef: f64, detuning: f64, op: &Operator| {
            if coef != 0.0 {
                let phase = (I * detuning * t).exp() * coef;
                let m = op.matrix() * phase;
                h += &m + m.adjoint();
            }
        };
        add_rotating(self.g_ge, self.delta_ge, &(&ops.a * &ops.raise_ge));
        add_rotating(self.g_ef, self.delta_ef, &(&ops.a * &ops.raise_ef));
        for j in 0..2 {
            add_rotating(self.g_res[j], self.delta_res[j], &(&ops.b(j).adjoint() * &ops.a));
        }
        Operator::from_matrix(layout, h).expect("dimensions follow layout")
    }
}

/// Rotating-frame Hamiltonian of one segment.
pub fn build_hamiltonian(layout: SpaceLayout, dev: &DeviceParams, knobs: &ControlKnobs) -> Result<Operator> {
    dev.validate()?;
    knobs.validate(dev)?;
    Ok(HamiltonianTerms::from_params(dev, knobs).rotating(&OperatorSet::new(layout)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    DecayR1,
    DecayR2,
    DecayBus,
    RelaxEg,
    RelaxFe,
    DephaseE,
    DephaseF,
}

/// One Lindblad channel `rate · D[L]ρ` with `D[L]ρ = (2LρL† − L†Lρ − ρL†L)/2`.
#[derive(Clone, Debug)]
pub struct Dissipator {
    pub channel: Channel,
    pub operator: Operator,
    /// Rate in 1/ns.
    pub rate: f64,
}

/// All seven loss channels, including those whose rate is zero.
pub fn build_dissipators(layout: SpaceLayout, dev: &DeviceParams) -> Result<Vec<Dissipator>> {
    dev.validate()?;
    Ok(dissipators_from(&OperatorSet::new(layout), dev))
}

pub(crate) fn dissipators_from(ops: &OperatorSet, dev: &DeviceParams) -> Vec<Dissipator> {
    let entry = |channel, operator: &Operator, rate_per_us: f64| Dissipator {
        channel,
        operator: operator.clone(),
        rate: per_us_to_per_ns(rate_per_us),
    };
    vec![
        entry(Channel::DecayR1, &ops.b1, dev.kappa_1),
        entry(Channel::DecayR2, &ops.b2, dev.kappa_2),
        entry(Channel::DecayBus, &ops.a, dev.kappa_r),
        entry(Channel::RelaxEg, &ops.raise_ge.adjoint(), dev.gamma_ge),
        entry(Channel::RelaxFe, &ops.raise_ef.adjoint(), dev.gamma_ef),
        entry(Channel::DephaseE, &ops.proj_e, dev.gamma_phi_e),
        entry(Channel::DephaseF, &ops.proj_f, dev.gamma_phi_f),
    ]
}

/// Lindblad generator on raw matrices, with `H_eff = H − (i/2) Σ r L†L`
/// precomputed.
#[derive(Clone, Debug)]
pub struct Lindbladian {
    h_eff: CMatrix,
    jumps: Vec<(CMatrix, f64)>,
}

impl Lindbladian {
    pub fn new(h: &CMatrix, channels: impl IntoIterator<Item = (CMatrix, f64)>) -> Self {
        let jumps: Vec<(CMatrix, f64)> = channels.into_iter().filter(|(_, r)| *r != 0.0).collect();
        let mut h_eff = h.clone();
        for (l, r) in &jumps {
            h_eff -= (l.adjoint() * l) * C64::new(0.0, 0.5 * r);
        }
        Lindbladian { h_eff, jumps }
    }

    pub fn dim(&self) -> usize {
        self.h_eff.nrows()
    }

    pub fn is_closed(&self) -> bool {
        self.jumps.is_empty()
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let hr = &self.h_eff * rho;
        let rh = rho * self.h_eff.adjoint();
        let mut out = (hr - rh) * C64::new(0.0, -1.0);
        for (l, r) in &self.jumps {
            out += (l * rho * l.adjoint()) * C64::new(*r, 0.0);
        }
        out
    }

    /// Column-major superoperator: `vec(L[ρ]) = S · vec(ρ)`.
    pub fn superoperator(&self) -> CMatrix {
        let n = self.dim();
        let id = CMatrix::identity(n, n);
        let mut s = id.kronecker(&self.h_eff) * C64::new(0.0, -1.0)
            + self.h_eff.map(|z| z.conj()).kronecker(&id) * C64::new(0.0, 1.0);
        for (l, r) in &self.jumps {
            s += l.map(|z| z.conj()).kronecker(l) * C64::new(*r, 0.0);
        }
        s
    }
}

/// `dρ/dt = −i[H,ρ] + Σ rate·D[L]ρ`.
pub fn lindblad_rhs(rho: &DensityMatrix, h: &Operator, channels: &[Dissipator]) -> Result<CMatrix> {
    if rho.layout() != h.layout() {
        return Err(Error::DimensionMismatch {
            expected: h.layout().total_dim(),
            found: rho.layout().total_dim(),
        });
    }
    let gen = Lindbladian::new(
        h.matrix(),
        channels.iter().map(|d| (d.operator.matrix().clone(), d.rate)),
    );
    Ok(gen.apply(rho.matrix()))
}
