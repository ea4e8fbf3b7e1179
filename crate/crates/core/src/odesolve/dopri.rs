//! Dormand–Prince 5(4) with elementary step-size control.

use super::OdeError;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

const MAX_STEPS: usize = 1_000_000;

/// Tolerances for [`dopri5`]; the local error estimate per step is kept
/// below `atol + rtol·|y|` componentwise (RMS norm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Tolerance {
    pub fn new(tol: f64) -> Self {
        Tolerance { rtol: tol, atol: tol }
    }
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction).
pub fn dopri5<F>(mut f: F, t0: f64, y0: &[f64], t1: f64, tol: Tolerance) -> Result<Vec<f64>, OdeError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let dim = y0.len();
    let mut y = y0.to_vec();
    if t0 == t1 {
        return Ok(y);
    }
    let dir = (t1 - t0).signum();
    let mut t = t0;
    let mut h = dir * (t1 - t0).abs().min(0.01);
    let mut k = vec![vec![0.0; dim]; 7];
    let mut tmp = vec![0.0; dim];
    let mut y5 = vec![0.0; dim];
    f(t, &y, &mut k[0]);
    for _ in 0..MAX_STEPS {
        if (t1 - t) * dir <= 0.0 {
            return Ok(y);
        }
        let last = (t + h - t1) * dir >= 0.0;
        if last {
            h = t1 - t;
        }
        for s in 1..7 {
            for i in 0..dim {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += h * A[s][j] * kj[i];
                }
                tmp[i] = acc;
            }
            f(t + C[s] * h, &tmp, &mut k[s]);
        }
        let mut err = 0.0;
        for i in 0..dim {
            let mut hi = 0.0;
            let mut lo = 0.0;
            for s in 0..7 {
                hi += B5[s] * k[s][i];
                lo += B4[s] * k[s][i];
            }
            y5[i] = y[i] + h * hi;
            let sc = tol.atol + tol.rtol * y[i].abs().max(y5[i].abs());
            err += (h * (hi - lo) / sc).powi(2);
        }
        let err = (err / dim as f64).sqrt();
        if err.is_finite() && err <= 1.0 {
            t = if last { t1 } else { t + h };
            y.copy_from_slice(&y5);
            // first-same-as-last: stage 7 is f at the new point
            let last = k[6].clone();
            k[0] = last;
            h *= (0.9 * err.max(1e-10).powf(-0.2)).min(5.0);
        } else {
            h *= if err.is_finite() { (0.9 * err.powf(-0.2)).max(0.2) } else { 0.2 };
        }
        if t != t1 && h.abs() < 1e-14 * t.abs().max(1.0) && (t1 - t).abs() > h.abs() {
            return Err(OdeError::StepUnderflow { at: t });
        }
    }
    Err(OdeError::NoConvergence(format!("more than {MAX_STEPS} steps")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let y = dopri5(|_, y, d| d[0] = y[0], 0.0, &[1.0], 1.0, Tolerance::new(1e-12)).unwrap();
        assert!((y[0] - std::f64::consts::E).abs() < 1e-10);
        let back = dopri5(|_, y, d| d[0] = y[0], 1.0, &y, 0.0, Tolerance::new(1e-12)).unwrap();
        assert!((back[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn blow_up_underflows() {
        let err = dopri5(|_, y, d| d[0] = y[0] * y[0], 0.0, &[1.0], 2.0, Tolerance::new(1e-10)).unwrap_err();
        assert!(matches!(err, OdeError::StepUnderflow { at } if (at - 1.0).abs() < 1e-3), "{err:?}");
    }
}
