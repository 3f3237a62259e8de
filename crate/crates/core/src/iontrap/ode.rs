//! Adaptive Dormand–Prince 5(4) integration of `dy/dt = f(t, y)` for
//! complex state vectors.

use crate::error::{validation, Result};
use crate::smallmat::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Abort after this many attempted steps.
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-12,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
}

// Dormand–Prince coefficients
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
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
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn combine(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = C64::new(0.0, 0.0);
        for (c, k) in terms {
            acc += k[i] * *c;
        }
        *o = y[i] + acc * h;
    }
}

/// Integrate `y` in place from `t0` to `t1`.
pub fn dopri5<F>(f: F, t0: f64, t1: f64, y: &mut [C64], opts: &OdeOptions) -> Result<OdeStats>
where
    F: Fn(f64, &[C64], &mut [C64]),
{
    if !(opts.rtol > 0.0 && opts.atol > 0.0) {
        return validation("integrator tolerances must be positive");
    }
    if t0.is_nan() || t1.is_nan() || t1 < t0 {
        return validation(format!("integration interval [{t0}, {t1}] is reversed"));
    }
    let mut stats = OdeStats::default();
    if t1 == t0 {
        return Ok(stats);
    }
    let n = y.len();
    let mut k: Vec<Vec<C64>> = (0..7).map(|_| vec![C64::new(0.0, 0.0); n]).collect();
    let mut tmp = vec![C64::new(0.0, 0.0); n];
    let mut y_new = vec![C64::new(0.0, 0.0); n];

    let mut t = t0;
    f(t, y, &mut k[0]);
    // initial step from the size of the derivative
    let scale = |v: &[C64]| v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let d0 = scale(y).max(1e-300);
    let d1 = scale(&k[0]).max(1e-300);
    let mut h = (0.01 * d0 / d1).min(t1 - t0).max(1e-12 * (t1 - t0));

    while t < t1 {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return validation(format!("integrator exceeded {} steps", opts.max_steps));
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        {
            let (k0, rest) = k.split_at_mut(1);
            combine(&mut tmp, y, h, &[(A21, &k0[0])]);
            f(t + C2 * h, &tmp, &mut rest[0]);
        }
        {
            let (done, rest) = k.split_at_mut(2);
            combine(&mut tmp, y, h, &[(A31, &done[0]), (A32, &done[1])]);
            f(t + C3 * h, &tmp, &mut rest[0]);
        }
        {
            let (done, rest) = k.split_at_mut(3);
            combine(
                &mut tmp,
                y,
                h,
                &[(A41, &done[0]), (A42, &done[1]), (A43, &done[2])],
            );
            f(t + C4 * h, &tmp, &mut rest[0]);
        }
        {
            let (done, rest) = k.split_at_mut(4);
            combine(
                &mut tmp,
                y,
                h,
                &[
                    (A51, &done[0]),
                    (A52, &done[1]),
                    (A53, &done[2]),
                    (A54, &done[3]),
                ],
            );
            f(t + C5 * h, &tmp, &mut rest[0]);
        }
        {
            let (done, rest) = k.split_at_mut(5);
            combine(
                &mut tmp,
                y,
                h,
                &[
                    (A61, &done[0]),
                    (A62, &done[1]),
                    (A63, &done[2]),
                    (A64, &done[3]),
                    (A65, &done[4]),
                ],
            );
            f(t + h, &tmp, &mut rest[0]);
        }
        combine(
            &mut y_new,
            y,
            h,
            &[
                (B1, &k[0]),
                (B3, &k[2]),
                (B4, &k[3]),
                (B5, &k[4]),
                (B6, &k[5]),
            ],
        );
        // stage 7 is the derivative at the new point, reused as stage 1 (FSAL)
        f(t + h, &y_new, &mut k[6]);
        let mut err: f64 = 0.0;
        for i in 0..n {
            let e = (k[0][i] * E1
                + k[2][i] * E3
                + k[3][i] * E4
                + k[4][i] * E5
                + k[5][i] * E6
                + k[6][i] * E7)
                * h;
            let sc = opts.atol + opts.rtol * y[i].norm().max(y_new[i].norm());
            err = err.max(e.norm() / sc);
        }
        if err <= 1.0 {
            t = if last { t1 } else { t + h };
            y.copy_from_slice(&y_new);
            k.swap(0, 6);
            stats.accepted += 1;
        } else {
            stats.rejected += 1;
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }
    Ok(stats)
}
