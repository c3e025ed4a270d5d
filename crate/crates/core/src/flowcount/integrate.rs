//! Adaptive Dormand–Prince 5(4) integration of autonomous systems with a per-step observer.

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

#[derive(Clone, Copy, Debug)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Outcome<const N: usize> {
    Stopped { time: f64, state: [f64; N] },
    Horizon { state: [f64; N] },
}

/// Integrate `y' = f(y)` from `y0` until `observe` returns `true` or `t_max` is reached.
/// Only the first `controlled` components enter the error estimate.
pub fn integrate<const N: usize>(
    f: impl Fn(&[f64; N]) -> [f64; N],
    y0: [f64; N],
    t_max: f64,
    ctl: StepControl,
    controlled: usize,
    mut observe: impl FnMut(f64, &[f64; N]) -> bool,
) -> Outcome<N> {
    let mut t = 0.0;
    let mut y = y0;
    let mut h = ctl.h_max.min(1e-3);
    let mut k = [[0.0; N]; 7];
    k[0] = f(&y);
    if observe(t, &y) {
        return Outcome::Stopped { time: t, state: y };
    }
    while t < t_max {
        h = h.min(t_max - t);
        for s in 1..7 {
            let mut ys = y;
            for (i, v) in ys.iter_mut().enumerate() {
                *v += h * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>();
            }
            k[s] = f(&ys);
        }
        let mut y5 = y;
        let mut err: f64 = 0.0;
        for i in 0..N {
            let d5: f64 = (0..7).map(|s| B5[s] * k[s][i]).sum();
            let d4: f64 = (0..7).map(|s| B4[s] * k[s][i]).sum();
            y5[i] = y[i] + h * d5;
            if i < controlled {
                let scale = ctl.atol + ctl.rtol * y[i].abs().max(y5[i].abs());
                err = err.max((h * (d5 - d4)).abs() / scale);
            }
        }
        if err <= 1.0 || h < 1e-12 {
            t += h;
            y = y5;
            // first-same-as-last: the seventh stage is f at the new point
            k[0] = k[6];
            if observe(t, &y) {
                return Outcome::Stopped { time: t, state: y };
            }
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h = (h * factor).min(ctl.h_max);
    }
    Outcome::Horizon { state: y }
}
