//! Small explicit integrators for autonomous systems of fixed dimension.

/// Butcher tableau of Dormand and Prince, order 5 with embedded order 4.
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

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (a, k) in terms {
        if *a != 0.0 {
            for i in 0..N {
                out[i] += h * a * k[i];
            }
        }
    }
    out
}

/// One Dormand-Prince step; returns the fifth-order solution and the error
/// estimate (difference to the embedded fourth-order solution).
pub(crate) fn dopri_step<const N: usize>(
    f: &impl Fn(&[f64; N]) -> [f64; N],
    y: &[f64; N],
    h: f64,
) -> ([f64; N], [f64; N]) {
    let mut k = [[0.0; N]; 7];
    k[0] = f(y);
    for s in 1..7 {
        let terms: Vec<(f64, &[f64; N])> = (0..s).map(|j| (A[s][j], &k[j])).collect();
        k[s] = f(&axpy(y, h, &terms));
    }
    let y5 = axpy(y, h, &(0..7).map(|j| (B5[j], &k[j])).collect::<Vec<_>>());
    let y4 = axpy(y, h, &(0..7).map(|j| (B4[j], &k[j])).collect::<Vec<_>>());
    let mut err = [0.0; N];
    for i in 0..N {
        err[i] = y5[i] - y4[i];
    }
    (y5, err)
}

/// Classical fourth-order Runge-Kutta step.
pub(crate) fn rk4_step<const N: usize>(
    f: &impl Fn(&[f64; N]) -> [f64; N],
    y: &[f64; N],
    h: f64,
) -> [f64; N] {
    let k1 = f(y);
    let k2 = f(&axpy(y, 0.5 * h, &[(1.0, &k1)]));
    let k3 = f(&axpy(y, 0.5 * h, &[(1.0, &k2)]));
    let k4 = f(&axpy(y, h, &[(1.0, &k3)]));
    axpy(
        y,
        h / 6.0,
        &[(1.0, &k1), (2.0, &k2), (2.0, &k3), (1.0, &k4)],
    )
}

/// Outcome of an observed adaptive integration.
pub(crate) enum Flow {
    Continue,
    Stop,
}

/// Adaptive integration of `y' = f(y)` from `t = 0` over at most `t_max`
/// (negative for backward integration), with mixed error control
/// `|err_i| <= tol (1 + |y_i|)`.
///
/// `observe(t0, y0, t1, y1)` is called after every accepted step and may
/// stop the integration. Returns the final time and state.
pub(crate) fn dopri_integrate<const N: usize>(
    f: &impl Fn(&[f64; N]) -> [f64; N],
    y0: [f64; N],
    t_max: f64,
    tol: f64,
    mut observe: impl FnMut(f64, &[f64; N], f64, &[f64; N]) -> Flow,
) -> (f64, [f64; N]) {
    let dir = t_max.signum();
    let span = t_max.abs();
    let mut t = 0.0f64;
    let mut y = y0;
    let mut h = (span * 1e-3).clamp(1e-12, 1e-2);
    let h_min = span * 1e-14;
    while t < span {
        h = h.min(span - t);
        let (y1, err) = dopri_step(f, &y, dir * h);
        let mut e: f64 = 0.0;
        for i in 0..N {
            e = e.max(err[i].abs() / (tol * (1.0 + y[i].abs().max(y1[i].abs()))));
        }
        if e <= 1.0 || h <= h_min {
            let t1 = t + h;
            let stop = matches!(observe(dir * t, &y, dir * t1, &y1), Flow::Stop);
            t = t1;
            y = y1;
            if stop {
                break;
            }
        }
        let factor = if e == 0.0 {
            5.0
        } else {
            (0.9 * e.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }
    (dir * t, y)
}

/// Root of a continuous scalar function: the bracket `[a, b]` is widened
/// until the signs differ, then refined with the Illinois variant of
/// regula falsi until the bracket is below `tol` relative to the root.
pub(crate) fn find_root(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> Option<f64> {
    let mut fa = f(a);
    let mut fb = f(b);
    let mut widen = 0;
    while fa.signum() == fb.signum() && fa != 0.0 && fb != 0.0 {
        widen += 1;
        if widen > 60 {
            return None;
        }
        let w = b - a;
        if fa.abs() < fb.abs() {
            a -= 2.0 * w;
            fa = f(a);
        } else {
            b += 2.0 * w;
            fb = f(b);
        }
    }
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    let mut side = 0;
    for _ in 0..500 {
        let x = (a * fb - b * fa) / (fb - fa);
        let fx = f(x);
        if fx == 0.0 {
            return Some(x);
        }
        if fx.signum() == fb.signum() {
            b = x;
            fb = fx;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = x;
            fa = fx;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if (b - a).abs() <= tol * (1.0 + x.abs()) {
            break;
        }
    }
    Some(if fa.abs() < fb.abs() { a } else { b })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let f = |y: &[f64; 2]| [y[1], -y[0]];
        let (t, y) = dopri_integrate(&f, [1.0, 0.0], std::f64::consts::PI, 1e-12, |_, _, _, _| {
            Flow::Continue
        });
        assert!((t - std::f64::consts::PI).abs() < 1e-12);
        assert!((y[0] + 1.0).abs() < 1e-9 && y[1].abs() < 1e-9);

        let mut z = [1.0, 0.0];
        let n = 1000;
        for _ in 0..n {
            z = rk4_step(&f, &z, -std::f64::consts::PI / n as f64);
        }
        assert!((z[0] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn illinois_root() {
        let r = find_root(&|x: f64| x.powi(3) - 2.0, 5.0, 6.0, 1e-15).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-14);
    }
}
