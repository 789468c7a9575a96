//! Conversions between the lab conventions used in configuration
//! (frequencies as ω/2π in GHz or MHz, lifetimes in µs) and the internal
//! units (angular frequency in rad/ns, time in ns).

use std::f64::consts::TAU;

pub fn ghz_to_rad_per_ns(f_ghz: f64) -> f64 {
    TAU * f_ghz
}

pub fn mhz_to_rad_per_ns(f_mhz: f64) -> f64 {
    TAU * f_mhz * 1e-3
}

/// Rates quoted per µs become rates per ns.
pub fn per_us_to_per_ns(rate_per_us: f64) -> f64 {
    rate_per_us * 1e-3
}

/// `1/lifetime`; an infinite lifetime is a zero rate.
pub fn rate_from_lifetime_us(lifetime_us: f64) -> f64 {
    if lifetime_us.is_infinite() {
        0.0
    } else {
        1.0 / lifetime_us
    }
}

/// Quality factor `Q = ω / κ` of a mode at `f_ghz` with energy lifetime
/// `lifetime_us`.
pub fn quality_factor(f_ghz: f64, lifetime_us: f64) -> f64 {
    ghz_to_rad_per_ns(f_ghz) * lifetime_us * 1e3
}
