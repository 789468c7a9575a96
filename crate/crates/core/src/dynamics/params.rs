use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::rate_from_lifetime_us;

/// Physical constants of the processor.
///
/// Frequencies are ω/2π (GHz for transition frequencies, MHz for couplings);
/// decay and dephasing rates are in 1/µs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceParams {
    /// Bus resonator frequency.
    pub omega_r_ghz: f64,
    /// Frequencies of `r1` and `r2`.
    pub omega_res_ghz: [f64; 2],
    /// Qutrit g↔e coupling to the bus; the e↔f coupling is √2 times this.
    pub g_ge_mhz: f64,
    /// δ = ω_ge − ω_ef.
    pub anharmonicity_ghz: f64,
    pub kappa_1: f64,
    pub kappa_2: f64,
    pub kappa_r: f64,
    pub gamma_ge: f64,
    pub gamma_ef: f64,
    pub gamma_phi_e: f64,
    pub gamma_phi_f: f64,
    /// Upper limit of the tunable resonator–bus couplings.
    pub g_max_mhz: f64,
    /// Qutrit g↔e frequency used while it must stay out of the way.
    pub parking_ghz: f64,
    /// Largest allowed spread of qutrit frequencies within one schedule.
    pub tuning_span_ghz: f64,
}

impl Default for DeviceParams {
    fn default() -> Self {
        DeviceParams::reference().with_lifetimes(50.0, 50.0)
    }
}

impl DeviceParams {
    /// Reference frequencies and couplings with every loss channel off.
    pub fn reference() -> Self {
        DeviceParams {
            omega_r_ghz: 6.65,
            omega_res_ghz: [6.65, 6.65],
            g_ge_mhz: 13.0,
            anharmonicity_ghz: 0.72,
            kappa_1: 0.0,
            kappa_2: 0.0,
            kappa_r: 0.0,
            gamma_ge: 0.0,
            gamma_ef: 0.0,
            gamma_phi_e: 0.0,
            gamma_phi_f: 0.0,
            g_max_mhz: 50.0,
            parking_ghz: 5.0,
            tuning_span_ghz: 2.5,
        }
    }

    /// Sets all resonator decay rates to `1/kappa_inv_us` and the qutrit
    /// rates from Γ = `1/gamma_inv_us`: γ_ge = γ_φe = γ_φf = Γ and
    /// γ_ef = Γ/2 (the f→e lifetime is twice Γ⁻¹). Infinite lifetimes turn a
    /// channel off.
    pub fn with_lifetimes(mut self, kappa_inv_us: f64, gamma_inv_us: f64) -> Self {
        let kappa = rate_from_lifetime_us(kappa_inv_us);
        let gamma = rate_from_lifetime_us(gamma_inv_us);
        self.kappa_1 = kappa;
        self.kappa_2 = kappa;
        self.kappa_r = kappa;
        self.gamma_ge = gamma;
        self.gamma_ef = gamma / 2.0;
        self.gamma_phi_e = gamma;
        self.gamma_phi_f = gamma;
        self
    }

    pub fn lossless(self) -> Self {
        self.with_lifetimes(f64::INFINITY, f64::INFINITY)
    }

    pub fn g_ef_mhz(&self) -> f64 {
        SQRT_2 * self.g_ge_mhz
    }

    /// Qutrit e↔f frequency for a given g↔e frequency.
    pub fn omega_ef_ghz(&self, omega_ge_ghz: f64) -> f64 {
        omega_ge_ghz - self.anharmonicity_ghz
    }

    pub fn rates(&self) -> [(&'static str, f64); 7] {
        [
            ("kappa_1", self.kappa_1),
            ("kappa_2", self.kappa_2),
            ("kappa_r", self.kappa_r),
            ("gamma_ge", self.gamma_ge),
            ("gamma_ef", self.gamma_ef),
            ("gamma_phi_e", self.gamma_phi_e),
            ("gamma_phi_f", self.gamma_phi_f),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, rate) in self.rates() {
            if !(rate >= 0.0 && rate.is_finite()) {
                return Err(Error::param(name, format!("rate must be finite and >= 0, got {rate}")));
            }
        }
        let positive = [
            ("omega_r_ghz", self.omega_r_ghz),
            ("omega_res_ghz[0]", self.omega_res_ghz[0]),
            ("omega_res_ghz[1]", self.omega_res_ghz[1]),
            ("anharmonicity_ghz", self.anharmonicity_ghz),
            ("g_max_mhz", self.g_max_mhz),
            ("parking_ghz", self.parking_ghz),
            ("tuning_span_ghz", self.tuning_span_ghz),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::param(name, format!("must be > 0, got {v}")));
            }
        }
        if !(self.g_ge_mhz >= 0.0 && self.g_ge_mhz.is_finite()) {
            return Err(Error::param(
                "g_ge_mhz",
                format!("must be finite and >= 0, got {}", self.g_ge_mhz),
            ));
        }
        Ok(())
    }
}

/// Control settings held constant during one schedule segment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlKnobs {
    pub g1_mhz: f64,
    pub g2_mhz: f64,
    pub omega_ge_ghz: f64,
}

impl ControlKnobs {
    pub fn new(g1_mhz: f64, g2_mhz: f64, omega_ge_ghz: f64) -> Self {
        ControlKnobs {
            g1_mhz,
            g2_mhz,
            omega_ge_ghz,
        }
    }

    pub fn validate(&self, dev: &DeviceParams) -> Result<()> {
        for (name, g) in [("g1_mhz", self.g1_mhz), ("g2_mhz", self.g2_mhz)] {
            if !(0.0..=dev.g_max_mhz).contains(&g) {
                return Err(Error::param(
                    name,
                    format!("coupling {g} MHz outside [0, {}] MHz", dev.g_max_mhz),
                ));
            }
        }
        if !(self.omega_ge_ghz > 0.0 && self.omega_ge_ghz.is_finite()) {
            return Err(Error::param(
                "omega_ge_ghz",
                format!("must be > 0, got {}", self.omega_ge_ghz),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub duration_ns: f64,
    #[serde(flatten)]
    pub knobs: ControlKnobs,
}

/// Piecewise-constant control sequence; knobs switch instantaneously at
/// segment boundaries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSchedule {
    pub label: String,
    /// Set when durations come from resonance conditions alone rather than
    /// from quoted operation times.
    #[serde(default)]
    pub derived_durations: bool,
    #[serde(rename = "segment")]
    pub segments: Vec<Segment>,
}

impl ControlSchedule {
    pub fn new(label: impl Into<String>, segments: Vec<Segment>) -> Self {
        ControlSchedule {
            label: label.into(),
            derived_durations: false,
            segments,
        }
    }

    pub fn total_duration_ns(&self) -> f64 {
        self.segments.iter().map(|s| s.duration_ns).sum()
    }

    /// Spread between the highest and lowest qutrit frequency used.
    pub fn qutrit_span_ghz(&self) -> f64 {
        let (lo, hi) = self
            .segments
            .iter()
            .map(|s| s.knobs.omega_ge_ghz)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), w| (lo.min(w), hi.max(w)));
        if lo.is_finite() {
            hi - lo
        } else {
            0.0
        }
    }

    pub fn validate(&self, dev: &DeviceParams) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::DegenerateSchedule(format!("`{}` has no segments", self.label)));
        }
        for (i, seg) in self.segments.iter().enumerate() {
            if !(seg.duration_ns > 0.0 && seg.duration_ns.is_finite()) {
                return Err(Error::DegenerateSchedule(format!(
                    "segment {i} of `{}` has duration {} ns",
                    self.label, seg.duration_ns
                )));
            }
            seg.knobs.validate(dev)?;
        }
        let span = self.qutrit_span_ghz();
        if span > dev.tuning_span_ghz + 1e-12 {
            return Err(Error::param(
                "omega_ge_ghz",
                format!(
                    "schedule `{}` spans {span:.3} GHz of qutrit tuning, more than {} GHz",
                    self.label, dev.tuning_span_ghz
                ),
            ));
        }
        Ok(())
    }
}
