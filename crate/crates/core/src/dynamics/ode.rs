//! Explicit Runge–Kutta integrators on dense complex matrices.

use crate::fockspace::{CMatrix, C64};

fn axpy(y: &CMatrix, h: f64, terms: &[(f64, &CMatrix)]) -> CMatrix {
    let mut out = y.clone();
    for &(c, k) in terms {
        if c != 0.0 {
            out.zip_apply(k, |o, ki| *o += ki * C64::new(h * c, 0.0));
        }
    }
    out
}

/// Classic fourth-order Runge–Kutta from `t0` to `t1` with the largest
/// uniform step not exceeding `dt`.
pub fn rk4<F>(f: &F, t0: f64, y0: &CMatrix, t1: f64, dt: f64) -> CMatrix
where
    F: Fn(f64, &CMatrix) -> CMatrix,
{
    let span = t1 - t0;
    if span <= 0.0 {
        return y0.clone();
    }
    let steps = ((span / dt) - 1e-9).ceil().max(1.0) as usize;
    let h = span / steps as f64;
    let mut y = y0.clone();
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        let k1 = f(t, &y);
        let k2 = f(t + 0.5 * h, &axpy(&y, h, &[(0.5, &k1)]));
        let k3 = f(t + 0.5 * h, &axpy(&y, h, &[(0.5, &k2)]));
        let k4 = f(t + h, &axpy(&y, h, &[(1.0, &k3)]));
        y = axpy(
            &y,
            h,
            &[(1.0 / 6.0, &k1), (1.0 / 3.0, &k2), (1.0 / 3.0, &k3), (1.0 / 6.0, &k4)],
        );
    }
    y
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rk45Config {
    pub atol: f64,
    pub rtol: f64,
    pub max_step: f64,
}

/// Failure of the adaptive integrator at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepFailure {
    pub t: f64,
    pub reason: String,
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Adaptive Dormand–Prince integration from `t0` to `t1`.
///
/// `h` carries the step-size guess in and the last accepted step out, so
/// consecutive calls over adjacent intervals do not restart cold.
pub fn rk45<F>(f: &F, t0: f64, y0: &CMatrix, t1: f64, cfg: &Rk45Config, h: &mut f64) -> Result<CMatrix, StepFailure>
where
    F: Fn(f64, &CMatrix) -> CMatrix,
{
    let span = t1 - t0;
    if span <= 0.0 {
        return Ok(y0.clone());
    }
    let min_step = 1e-14 * span.max(1.0);
    let mut t = t0;
    let mut y = y0.clone();
    let mut k_first = f(t, &y);
    if !(*h > 0.0) {
        *h = (1e-3 * span).min(cfg.max_step);
    }
    let mut step = h.min(cfg.max_step);

    while t < t1 {
        let last = t + step >= t1 - 1e-12 * span;
        if last {
            step = t1 - t;
        }
        let mut ks: Vec<CMatrix> = Vec::with_capacity(7);
        ks.push(k_first.clone());
        for stage in 1..7 {
            let terms: Vec<(f64, &CMatrix)> = (0..stage).map(|j| (A[stage][j], &ks[j])).collect();
            let ys = axpy(&y, step, &terms);
            ks.push(f(t + C[stage] * step, &ys));
        }
        let y5 = axpy(&y, step, &B5.iter().zip(&ks).map(|(&b, k)| (b, k)).collect::<Vec<_>>());
        let y4 = axpy(&y, step, &B4.iter().zip(&ks).map(|(&b, k)| (b, k)).collect::<Vec<_>>());

        let mut acc = 0.0;
        for ((e5, e4), y_old) in y5.iter().zip(y4.iter()).zip(y.iter()) {
            let scale = cfg.atol + cfg.rtol * e5.norm().max(y_old.norm());
            acc += ((e5 - e4).norm() / scale).powi(2);
        }
        let err = (acc / y.len() as f64).sqrt();
        if !err.is_finite() {
            return Err(StepFailure {
                t,
                reason: "non-finite error estimate".into(),
            });
        }

        if err <= 1.0 {
            t = if last { t1 } else { t + step };
            y = y5;
            k_first = ks.pop().expect("seven stages");
            if !last {
                *h = step;
            }
            let grow = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            step = (step * grow).min(cfg.max_step);
        } else {
            step *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            if step < min_step {
                return Err(StepFailure {
                    t,
                    reason: format!("step size {step:.3e} ns below minimum, tolerance not met"),
                });
            }
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oscillator(omega: f64) -> impl Fn(f64, &CMatrix) -> CMatrix {
        move |_t, y: &CMatrix| y * C64::new(0.0, -omega)
    }

    #[test]
    fn rk4_matches_exponential() {
        let y0 = CMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        let y = rk4(&oscillator(3.0), 0.0, &y0, 2.0, 1e-3);
        let exact = C64::new(0.0, -6.0).exp();
        assert!((y[(0, 0)] - exact).norm() < 1e-10);
    }

    #[test]
    fn rk45_matches_exponential_and_respects_tolerance() {
        let y0 = CMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        let cfg = Rk45Config {
            atol: 1e-12,
            rtol: 1e-12,
            max_step: 0.1,
        };
        let mut h = 0.0;
        let y = rk45(&oscillator(10.0), 0.0, &y0, 5.0, &cfg, &mut h).unwrap();
        let exact = C64::new(0.0, -50.0).exp();
        assert!((y[(0, 0)] - exact).norm() < 1e-9);
    }

    #[test]
    fn rk45_time_dependent_rhs() {
        // y' = i t y  →  y = exp(i t²/2)
        let f = |t: f64, y: &CMatrix| y * C64::new(0.0, t);
        let y0 = CMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        let cfg = Rk45Config {
            atol: 1e-12,
            rtol: 1e-12,
            max_step: 0.05,
        };
        let mut h = 0.0;
        let y = rk45(&f, 0.0, &y0, 3.0, &cfg, &mut h).unwrap();
        assert!((y[(0, 0)] - C64::new(0.0, 4.5).exp()).norm() < 1e-9);
    }

    #[test]
    fn rk45_reports_blowup() {
        let f = |_t: f64, y: &CMatrix| y.map(|z| z * z * C64::new(1e3, 0.0));
        let y0 = CMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        let cfg = Rk45Config {
            atol: 1e-10,
            rtol: 1e-10,
            max_step: 0.1,
        };
        let mut h = 0.0;
        assert!(rk45(&f, 0.0, &y0, 1.0, &cfg, &mut h).is_err());
    }
}
