//! Explicit embedded Runge-Kutta 5(4) integration (Dormand-Prince
//! coefficients) with PI step-size control and 4th-order dense output.
//!
//! Samples are produced by interpolating the accepted steps, so reporting
//! resolution never forces the step size; the step is only capped at
//! `max_step`.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A21: f64 = 0.2;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Difference between the 5th- and 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// Dense-output coefficients.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

// PI controller constants.
const SAFE: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const FAC_MIN: f64 = 0.2; // max shrink factor per step: h/5
const FAC_MAX: f64 = 10.0; // max growth factor per step: 10h

#[derive(Debug, Clone)]
pub struct Dopri5Settings {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub initial_step: Option<f64>,
    pub max_steps: usize,
}

impl Default for Dopri5Settings {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            max_step: f64::INFINITY,
            initial_step: None,
            max_steps: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct IntegratorStats {
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub rhs_evals: usize,
}

#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub times: Vec<f64>,
    pub samples: Vec<DVector<f64>>,
    pub stats: IntegratorStats,
}

/// Integrates `y' = f(t, y)` from `t0` to `t_final`, sampling the dense
/// output every `sample_interval`. The final time is always sampled.
pub fn integrate<F>(
    mut f: F,
    t0: f64,
    t_final: f64,
    y0: DVector<f64>,
    sample_interval: f64,
    settings: &Dopri5Settings,
) -> Result<OdeSolution>
where
    F: FnMut(f64, &DVector<f64>, &mut DVector<f64>),
{
    if !(t_final > t0) {
        return Err(Error::InvalidConfig(format!(
            "t_final ({t_final}) must exceed t0 ({t0})"
        )));
    }
    if !(sample_interval > 0.0) {
        return Err(Error::InvalidConfig(
            "sample interval must be positive".into(),
        ));
    }
    if !(settings.rtol > 0.0) || !(settings.atol > 0.0) {
        return Err(Error::InvalidConfig(
            "integrator tolerances must be positive".into(),
        ));
    }
    if let Some(bad) = y0.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteState {
            t: t0,
            component: bad,
        });
    }

    let dim = y0.len();
    let mut stats = IntegratorStats::default();

    let mut k: Vec<DVector<f64>> = (0..7).map(|_| DVector::zeros(dim)).collect();
    let mut y = y0;
    let mut y_next = DVector::zeros(dim);
    let mut y_stage = DVector::zeros(dim);
    let mut t = t0;

    f(t, &y, &mut k[0]);
    stats.rhs_evals += 1;
    if let Some(bad) = k[0].iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteState {
            t,
            component: bad,
        });
    }

    let hmax = settings.max_step.min(t_final - t0);
    let mut h = match settings.initial_step {
        Some(h0) => h0.min(hmax),
        None => {
            let h0 = initial_step_guess(&mut f, t, &y, &k[0], settings, hmax);
            stats.rhs_evals += 1;
            h0
        }
    };

    let mut times = Vec::new();
    let mut samples = Vec::new();
    times.push(t0);
    samples.push(y.clone());
    let mut next_sample_idx: usize = 1;

    let mut facold = 1e-4f64;
    let mut rejected_last = false;
    let mut last = false;

    while !last {
        if stats.steps_accepted + stats.steps_rejected >= settings.max_steps {
            return Err(Error::MaxStepsExceeded {
                t,
                max_steps: settings.max_steps,
            });
        }
        if h < 10.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::StepSizeUnderflow { t });
        }
        if t + h >= t_final {
            h = t_final - t;
            last = true;
        }

        // Stage evaluations (k1 already holds f(t, y): FSAL).
        stage(&mut y_stage, &y, h, &[(A21, &k[0])]);
        f(t + C[1] * h, &y_stage, &mut k[1]);
        stage(&mut y_stage, &y, h, &[(A31, &k[0]), (A32, &k[1])]);
        f(t + C[2] * h, &y_stage, &mut k[2]);
        stage(
            &mut y_stage,
            &y,
            h,
            &[(A41, &k[0]), (A42, &k[1]), (A43, &k[2])],
        );
        f(t + C[3] * h, &y_stage, &mut k[3]);
        stage(
            &mut y_stage,
            &y,
            h,
            &[(A51, &k[0]), (A52, &k[1]), (A53, &k[2]), (A54, &k[3])],
        );
        f(t + C[4] * h, &y_stage, &mut k[4]);
        stage(
            &mut y_stage,
            &y,
            h,
            &[
                (A61, &k[0]),
                (A62, &k[1]),
                (A63, &k[2]),
                (A64, &k[3]),
                (A65, &k[4]),
            ],
        );
        f(t + C[5] * h, &y_stage, &mut k[5]);
        // 5th-order solution (the A7 row equals the b weights).
        stage(
            &mut y_next,
            &y,
            h,
            &[
                (A71, &k[0]),
                (A73, &k[2]),
                (A74, &k[3]),
                (A75, &k[4]),
                (A76, &k[5]),
            ],
        );
        f(t + h, &y_next, &mut k[6]);
        stats.rhs_evals += 6;

        // Weighted RMS error of the embedded difference.
        let mut err_acc = 0.0;
        for i in 0..dim {
            let e = h
                * (E1 * k[0][i]
                    + E3 * k[2][i]
                    + E4 * k[3][i]
                    + E5 * k[4][i]
                    + E6 * k[5][i]
                    + E7 * k[6][i]);
            let sc = settings.atol + settings.rtol * y[i].abs().max(y_next[i].abs());
            err_acc += (e / sc) * (e / sc);
        }
        let err = (err_acc / dim as f64).sqrt();

        if !err.is_finite() {
            // A non-finite error estimate from a finite state means the
            // step overshot into a blow-up region; shrink hard.
            stats.steps_rejected += 1;
            last = false;
            h *= 0.1;
            rejected_last = true;
            continue;
        }

        let fac11 = err.powf(EXPO1);
        if err <= 1.0 {
            // Accept. The PI controller mixes this step's error with the
            // previous accepted one.
            let mut fac = fac11 / facold.powf(BETA);
            fac = (fac / SAFE).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_new = h / fac;
            if rejected_last {
                h_new = h_new.min(h);
            }
            facold = err.max(1e-4);

            if let Some(bad) = y_next.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteState {
                    t: t + h,
                    component: bad,
                });
            }

            // Dense output over [t, t+h].
            let t_new = t + h;
            loop {
                let ts = t0 + next_sample_idx as f64 * sample_interval;
                if ts > t_new + 1e-9 * sample_interval || ts > t_final {
                    break;
                }
                let theta = (ts - t) / h;
                samples.push(interpolate(&y, &y_next, &k, h, theta));
                times.push(ts);
                next_sample_idx += 1;
            }
            if last {
                // Sample exactly t_final unless the grid just produced it.
                if times
                    .last()
                    .map(|&lt| (t_final - lt).abs() > 1e-9 * sample_interval)
                    .unwrap_or(true)
                {
                    times.push(t_final);
                    samples.push(y_next.clone());
                }
            }

            std::mem::swap(&mut y, &mut y_next);
            k.swap(0, 6); // FSAL
            t = t_new;
            stats.steps_accepted += 1;
            h = h_new.min(hmax);
            rejected_last = false;
        } else {
            stats.steps_rejected += 1;
            last = false;
            h /= (fac11 / SAFE).min(1.0 / FAC_MIN);
            rejected_last = true;
        }
    }

    Ok(OdeSolution {
        times,
        samples,
        stats,
    })
}

fn stage(out: &mut DVector<f64>, y: &DVector<f64>, h: f64, terms: &[(f64, &DVector<f64>)]) {
    out.copy_from(y);
    for (coeff, kv) in terms {
        out.axpy(h * coeff, kv, 1.0);
    }
}

fn interpolate(
    y0: &DVector<f64>,
    y1: &DVector<f64>,
    k: &[DVector<f64>],
    h: f64,
    theta: f64,
) -> DVector<f64> {
    let dim = y0.len();
    let mut out = DVector::zeros(dim);
    for i in 0..dim {
        let ydiff = y1[i] - y0[i];
        let bspl = h * k[0][i] - ydiff;
        let r4 = ydiff - h * k[6][i] - bspl;
        let r5 = h
            * (D1 * k[0][i]
                + D3 * k[2][i]
                + D4 * k[3][i]
                + D5 * k[4][i]
                + D6 * k[5][i]
                + D7 * k[6][i]);
        out[i] = y0[i] + theta * (ydiff + (1.0 - theta) * (bspl + theta * (r4 + (1.0 - theta) * r5)));
    }
    out
}

/// Hairer's starting-step heuristic based on the first two derivative
/// magnitudes.
fn initial_step_guess<F>(
    f: &mut F,
    t0: f64,
    y0: &DVector<f64>,
    f0: &DVector<f64>,
    settings: &Dopri5Settings,
    hmax: f64,
) -> f64
where
    F: FnMut(f64, &DVector<f64>, &mut DVector<f64>),
{
    let dim = y0.len();
    let mut dnf = 0.0;
    let mut dny = 0.0;
    for i in 0..dim {
        let sc = settings.atol + settings.rtol * y0[i].abs();
        dnf += (f0[i] / sc) * (f0[i] / sc);
        dny += (y0[i] / sc) * (y0[i] / sc);
    }
    let mut h0 = if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        (dny / dnf).sqrt() * 0.01
    };
    h0 = h0.min(hmax);

    let y1 = y0 + h0 * f0;
    let mut f1 = DVector::zeros(dim);
    f(t0 + h0, &y1, &mut f1);
    let mut der2 = 0.0;
    for i in 0..dim {
        let sc = settings.atol + settings.rtol * y0[i].abs();
        der2 += ((f1[i] - f0[i]) / sc) * ((f1[i] - f0[i]) / sc);
    }
    let der2 = der2.sqrt() / h0;
    let der12 = der2.max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / der12).powf(0.2)
    };
    (100.0 * h0).min(h1).min(hmax)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exponential_decay_matches_closed_form() {
        let sol = integrate(
            |_, y, dy| dy[0] = -y[0],
            0.0,
            5.0,
            DVector::from_vec(vec![1.0]),
            0.5,
            &Dopri5Settings::default(),
        )
        .unwrap();
        for (t, y) in sol.times.iter().zip(&sol.samples) {
            assert_abs_diff_eq!(y[0], (-t).exp(), epsilon = 1e-8);
        }
        assert_eq!(sol.times.len(), 11);
        assert_abs_diff_eq!(*sol.times.last().unwrap(), 5.0, epsilon = 0.0);
    }

    #[test]
    fn harmonic_oscillator_energy_preserved_to_tolerance() {
        let sol = integrate(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0,
            20.0,
            DVector::from_vec(vec![1.0, 0.0]),
            1.0,
            &Dopri5Settings::default(),
        )
        .unwrap();
        for y in &sol.samples {
            let energy = y[0] * y[0] + y[1] * y[1];
            assert_abs_diff_eq!(energy, 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn dense_output_tracks_between_steps() {
        // y' = 5 t^4: steps land exactly on t^5, samples in between go
        // through the 4th-order interpolant.
        let sol = integrate(
            |t, _, dy| dy[0] = 5.0 * t.powi(4),
            0.0,
            2.0,
            DVector::from_vec(vec![0.0]),
            0.01,
            &Dopri5Settings {
                max_step: 0.5,
                ..Default::default()
            },
        )
        .unwrap();
        for (t, y) in sol.times.iter().zip(&sol.samples) {
            assert_abs_diff_eq!(y[0], t.powi(5), epsilon = 1e-6);
        }
    }

    #[test]
    fn blow_up_reports_step_underflow() {
        // y' = y^2 from y(0) = 1 blows up at t = 1.
        let err = integrate(
            |_, y, dy| dy[0] = y[0] * y[0],
            0.0,
            2.0,
            DVector::from_vec(vec![1.0]),
            0.1,
            &Dopri5Settings::default(),
        )
        .unwrap_err();
        match err {
            Error::StepSizeUnderflow { t } => assert_abs_diff_eq!(t, 1.0, epsilon = 1e-3),
            other => panic!("expected step underflow, got {other:?}"),
        }
    }

    #[test]
    fn non_finite_initial_state_is_reported() {
        let err = integrate(
            |_, y, dy| dy[0] = y[0],
            0.0,
            1.0,
            DVector::from_vec(vec![f64::NAN]),
            0.1,
            &Dopri5Settings::default(),
        )
        .unwrap_err();
        match err {
            Error::NonFiniteState { component: 0, .. } => {}
            other => panic!("expected non-finite error, got {other:?}"),
        }
    }

    #[test]
    fn max_step_cap_is_respected() {
        let sol = integrate(
            |_, y, dy| dy[0] = -0.01 * y[0],
            0.0,
            10.0,
            DVector::from_vec(vec![1.0]),
            1.0,
            &Dopri5Settings {
                max_step: 0.25,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(sol.stats.steps_accepted >= 40);
    }

    #[test]
    fn identical_runs_are_bitwise_identical() {
        let run = || {
            integrate(
                |t, y, dy| {
                    dy[0] = y[1];
                    dy[1] = -y[0] + 0.1 * (t * 0.5).sin();
                },
                0.0,
                7.0,
                DVector::from_vec(vec![0.3, -0.2]),
                0.25,
                &Dopri5Settings::default(),
            )
            .unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.times.len(), b.times.len());
        for (ya, yb) in a.samples.iter().zip(&b.samples) {
            for (va, vb) in ya.iter().zip(yb.iter()) {
                assert_eq!(va.to_bits(), vb.to_bits());
            }
        }
    }
}
