//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each binding wraps a plain function that returns [`resobus::Result`], so
//! the same code paths are tested natively.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use wasm_bindgen::prelude::*;

use resobus::analytic::{rabi_evolve, RabiAmplitudes};
use resobus::dynamics::{DeviceParams, Evolver, HamiltonianTerms, SolverOptions};
use resobus::fockspace::{basis_state, Level, SpaceLayout, C64};
use resobus::metrics::{population, sweep_delta, SweepOptions, SweepPoint, Threads};
use resobus::protocols::{state_transfer_schedule, TransferVariant};
use resobus::units::{ghz_to_rad_per_ns, mhz_to_rad_per_ns};
use resobus::Error;

/// Lifetimes above this many µs are treated as lossless.
const LOSSLESS_US: f64 = 1e6;

fn lifetime(us: f64) -> f64 {
    if us >= LOSSLESS_US {
        f64::INFINITY
    } else {
        us
    }
}

/// Populations of `|1,0,0,g>`, `|0,1,0,g>` and `|0,0,1,g>` along the
/// r1 → R → r2 transfer, flattened as `[t, P1, P2, P3, t, ...]`.
pub fn transfer_curve(g_mhz: f64, lifetime_us: f64, step_ns: f64) -> resobus::Result<Vec<f64>> {
    let l = SpaceLayout::default();
    let life = lifetime(lifetime_us);
    let dev = DeviceParams::reference().with_lifetimes(life, life);
    let schedule = state_transfer_schedule(&dev, g_mhz, TransferVariant::SignMinus)?;
    let opts = SolverOptions::default().with_sampling(step_ns);
    let traj = Evolver::new(l, &dev, &schedule, opts, 1)?.run(&basis_state(l, 1, 0, 0, Level::G)?.projector())?;
    let pops = [(1, 0, 0), (0, 1, 0), (0, 0, 1)]
        .iter()
        .map(|&(a, b, c)| population(&traj, &basis_state(l, a, b, c, Level::G)?))
        .collect::<resobus::Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(4 * traj.times.len());
    for (k, t) in traj.times.iter().enumerate() {
        out.extend([*t, pops[0][k], pops[1][k], pops[2][k]]);
    }
    Ok(out)
}

/// Excited-state population of a qutrit starting in `|e>` with `n` photons in
/// the bus, from the closed form and from the integrator, flattened as
/// `[t, analytic, numeric, ...]`.
pub fn rabi_curve(g_mhz: f64, detuning_mhz: f64, n: usize, t_end_ns: f64, points: usize) -> resobus::Result<Vec<f64>> {
    let l = SpaceLayout::default();
    if n + 1 >= l.resonator_dims()[1] {
        return Err(Error::param(
            "n",
            format!(
                "n + 1 photons must fit in the bus (at most {})",
                l.resonator_dims()[1] - 1
            ),
        ));
    }
    if points == 0 || !(t_end_ns > 0.0) {
        return Err(Error::param("points", "need a positive span and at least one point"));
    }
    let (g, delta) = (mhz_to_rad_per_ns(g_mhz), ghz_to_rad_per_ns(detuning_mhz * 1e-3));
    let terms = HamiltonianTerms {
        delta_ge: delta,
        delta_ef: 0.0,
        delta_res: [0.0; 2],
        g_ge: g,
        g_ef: 0.0,
        g_res: [0.0; 2],
    };
    let opts = SolverOptions::default().with_sampling(t_end_ns / points as f64);
    let start = basis_state(l, 0, n, 0, Level::E)?;
    let traj = Evolver::from_terms(l, &[(terms, t_end_ns)], &[], opts, n + 1)?.run(&start.projector())?;
    let numeric = population(&traj, &start)?;
    let c0 = RabiAmplitudes::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0), n, g, delta);
    let mut out = Vec::with_capacity(3 * traj.times.len());
    for (t, p) in traj.times.iter().zip(numeric) {
        out.extend([*t, rabi_evolve(&c0, *t).c_e_n.norm_sqr(), p]);
    }
    Ok(out)
}

/// Five-step gate average fidelity and duration for the given coupling,
/// lifetime `κ⁻¹ = Γ⁻¹` and anharmonicity.
pub fn cphase_point(g_ge_mhz: f64, lifetime_us: f64, delta_ghz: f64, grid_n: usize) -> resobus::Result<SweepPoint> {
    let life = lifetime(lifetime_us);
    let dev = DeviceParams {
        g_ge_mhz,
        ..DeviceParams::reference().with_lifetimes(life, life)
    };
    let opts = SweepOptions {
        grid_n,
        threads: Threads(1),
        ..SweepOptions::default()
    };
    Ok(sweep_delta(&dev, &[delta_ghz], &opts)?.points[0])
}

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = transferCurve)]
pub fn transfer_curve_js(g_mhz: f64, lifetime_us: f64, step_ns: f64) -> Result<Vec<f64>, JsError> {
    transfer_curve(g_mhz, lifetime_us, step_ns).map_err(js)
}

#[wasm_bindgen(js_name = rabiCurve)]
pub fn rabi_curve_js(
    g_mhz: f64,
    detuning_mhz: f64,
    n: usize,
    t_end_ns: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    rabi_curve(g_mhz, detuning_mhz, n, t_end_ns, points).map_err(js)
}

/// Returns `[fidelity, duration_ns]`.
#[wasm_bindgen(js_name = cphasePoint)]
pub fn cphase_point_js(g_ge_mhz: f64, lifetime_us: f64, delta_ghz: f64, grid_n: usize) -> Result<Vec<f64>, JsError> {
    cphase_point(g_ge_mhz, lifetime_us, delta_ghz, grid_n)
        .map(|p| vec![p.fidelity, p.duration_ns])
        .map_err(js)
}
