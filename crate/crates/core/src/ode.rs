//! Adaptive Dormand-Prince 5(4) integration for two-dimensional systems,
//! with quartic dense output and event localization by bisection on the
//! interpolant.
//!
//! Two components are all the shooting formulation needs: (u, v) with v the
//! flux. Events are scalar functions of (x, y) with a crossing direction;
//! the first triggered event terminates the trajectory.

use crate::error::{Error, Result};

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
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

pub type State = [f64; 2];

/// Scalar event g(x, y); triggers when g crosses zero with the given sign.
pub struct EventSpec<'a> {
    pub g: &'a dyn Fn(f64, State) -> f64,
    /// +1.0 for upward crossings, -1.0 for downward.
    pub direction: f64,
}

#[derive(Debug, Clone)]
pub struct Step {
    pub x0: f64,
    pub h: f64,
    pub y0: State,
    pub y1: State,
    rcont: [[f64; 2]; 5],
}

impl Step {
    /// Dense-output state at x0 + theta*h.
    pub fn eval(&self, theta: f64) -> State {
        let [r1, r2, r3, r4, r5] = self.rcont;
        let mut out = [0.0; 2];
        for i in 0..2 {
            let t1 = 1.0 - theta;
            out[i] = r1[i] + theta * (r2[i] + t1 * (r3[i] + theta * (r4[i] + t1 * r5[i])));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub enum Stop {
    /// Integration reached x_end.
    End { x: f64, y: State },
    /// events[index] fired at x.
    Event { index: usize, x: f64, y: State },
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub steps: Vec<Step>,
    pub stop: Stop,
}

impl Trajectory {
    pub fn end_x(&self) -> f64 {
        match &self.stop {
            Stop::End { x, .. } | Stop::Event { x, .. } => *x,
        }
    }

    pub fn end_y(&self) -> State {
        match &self.stop {
            Stop::End { y, .. } | Stop::Event { y, .. } => *y,
        }
    }

    /// Dense-output state at any x inside the covered interval.
    pub fn sample(&self, x: f64) -> State {
        debug_assert!(!self.steps.is_empty());
        let idx = self
            .steps
            .partition_point(|s| s.x0 + s.h < x)
            .min(self.steps.len() - 1);
        let s = &self.steps[idx];
        s.eval(((x - s.x0) / s.h).clamp(0.0, 1.0))
    }
}

/// Integrate y' = rhs(x, y) from (x0, y0) to x_end, stopping early at the
/// first event crossing (localized to 1e-12 in x).
pub fn integrate(
    rhs: &dyn Fn(f64, State) -> State,
    x0: f64,
    y0: State,
    x_end: f64,
    rtol: f64,
    atol: State,
    events: &[EventSpec],
) -> Result<Trajectory> {
    let mut x = x0;
    let mut y = y0;
    let mut k1 = rhs(x, y);
    let mut h = initial_step(rhs, x, y, &k1, rtol, atol, x_end - x0);
    let mut steps: Vec<Step> = Vec::new();
    let mut g_prev: Vec<f64> = events.iter().map(|e| (e.g)(x, y)).collect();

    loop {
        if x + h > x_end {
            h = x_end - x;
        }
        if h <= 1e-14 * (1.0 + x.abs()) {
            return Err(Error::Integration {
                x,
                u: y[0],
                v: y[1],
            });
        }

        let (y1, k7, err_norm, rcont) = attempt_step(rhs, x, y, &k1, h, rtol, atol);
        if !err_norm.is_finite() || err_norm > 1.0 {
            let shrink = if err_norm.is_finite() {
                (0.9 * err_norm.powf(-0.2)).max(0.2)
            } else {
                0.2
            };
            h *= shrink;
            continue;
        }

        let step = Step {
            x0: x,
            h,
            y0: y,
            y1,
            rcont,
        };

        // event check on the accepted step
        let mut fired: Option<(usize, f64)> = None;
        for (i, ev) in events.iter().enumerate() {
            let g0 = g_prev[i];
            let g1 = (ev.g)(x + h, y1);
            let crossed = if ev.direction < 0.0 {
                g0 > 0.0 && g1 <= 0.0
            } else {
                g0 < 0.0 && g1 >= 0.0
            };
            if crossed {
                let theta = bisect_event(&step, ev, h);
                let xe = x + theta * h;
                if fired.map_or(true, |(_, best)| xe < best) {
                    fired = Some((i, xe));
                }
            }
            g_prev[i] = g1;
        }

        if let Some((index, xe)) = fired {
            let ye = step.eval((xe - x) / h);
            steps.push(step);
            return Ok(Trajectory {
                steps,
                stop: Stop::Event {
                    index,
                    x: xe,
                    y: ye,
                },
            });
        }

        x += h;
        y = y1;
        k1 = k7; // first-same-as-last
        steps.push(step);

        if x >= x_end {
            return Ok(Trajectory {
                steps,
                stop: Stop::End { x, y },
            });
        }

        let grow = (0.9 * err_norm.max(1e-10).powf(-0.2)).min(5.0);
        h *= grow;
    }
}

fn initial_step(
    rhs: &dyn Fn(f64, State) -> State,
    x0: f64,
    y0: State,
    f0: &State,
    rtol: f64,
    atol: State,
    span: f64,
) -> f64 {
    let sc = |i: usize| atol[i] + rtol * y0[i].abs();
    let d0 = ((y0[0] / sc(0)).powi(2) + (y0[1] / sc(1)).powi(2)).sqrt();
    let d1 = ((f0[0] / sc(0)).powi(2) + (f0[1] / sc(1)).powi(2)).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    // one explicit Euler probe to bound the second derivative
    let y1 = [y0[0] + h0 * f0[0], y0[1] + h0 * f0[1]];
    let f1 = rhs(x0 + h0, y1);
    let d2 = (((f1[0] - f0[0]) / sc(0)).powi(2) + ((f1[1] - f0[1]) / sc(1)).powi(2)).sqrt() / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span.abs()).max(1e-12)
}

#[allow(clippy::type_complexity)]
fn attempt_step(
    rhs: &dyn Fn(f64, State) -> State,
    x: f64,
    y: State,
    k1: &State,
    h: f64,
    rtol: f64,
    atol: State,
) -> (State, State, f64, [[f64; 2]; 5]) {
    let stage = |coeffs: &[(f64, &State)]| {
        let mut out = y;
        for &(a, k) in coeffs {
            out[0] += h * a * k[0];
            out[1] += h * a * k[1];
        }
        out
    };

    let k2 = rhs(x + h / 5.0, stage(&[(A21, k1)]));
    let k3 = rhs(x + 3.0 * h / 10.0, stage(&[(A31, k1), (A32, &k2)]));
    let k4 = rhs(x + 4.0 * h / 5.0, stage(&[(A41, k1), (A42, &k2), (A43, &k3)]));
    let k5 = rhs(
        x + 8.0 * h / 9.0,
        stage(&[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    );
    let k6 = rhs(
        x + h,
        stage(&[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    );
    let y1 = stage(&[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    let k7 = rhs(x + h, y1);

    let mut err_norm = 0.0;
    for i in 0..2 {
        let e = h
            * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sc = atol[i] + rtol * y[i].abs().max(y1[i].abs());
        err_norm += (e / sc) * (e / sc);
    }
    err_norm = (err_norm / 2.0).sqrt();

    let mut rcont = [[0.0; 2]; 5];
    for i in 0..2 {
        let dy = y1[i] - y[i];
        let bspl = h * k1[i] - dy;
        rcont[0][i] = y[i];
        rcont[1][i] = dy;
        rcont[2][i] = bspl;
        rcont[3][i] = dy - h * k7[i] - bspl;
        rcont[4][i] = h
            * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
    }

    (y1, k7, err_norm, rcont)
}

fn bisect_event(step: &Step, ev: &EventSpec, h: f64) -> f64 {
    let g = |theta: f64| (ev.g)(step.x0 + theta * h, step.eval(theta));
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    // sign at lo is the pre-crossing sign by construction
    let sign_lo = if ev.direction < 0.0 { 1.0 } else { -1.0 };
    while (hi - lo) * h.abs() > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if g(mid) * sign_lo > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn harmonic_oscillator_accuracy_and_dense_output() {
        let rhs = |_x: f64, y: State| [y[1], -y[0]];
        let traj = integrate(&rhs, 0.0, [0.0, 1.0], 3.0, 1e-10, [1e-12, 1e-12], &[]).unwrap();
        let y = traj.end_y();
        assert_abs_diff_eq!(y[0], 3.0f64.sin(), epsilon = 1e-9);
        assert_abs_diff_eq!(y[1], 3.0f64.cos(), epsilon = 1e-9);
        for &x in &[0.1, 0.5, 1.7, 2.9] {
            let s = traj.sample(x);
            assert_abs_diff_eq!(s[0], x.sin(), epsilon = 1e-9);
            assert_abs_diff_eq!(s[1], x.cos(), epsilon = 1e-9);
        }
    }

    #[test]
    fn zero_crossing_event_is_localized() {
        let rhs = |_x: f64, y: State| [y[1], -y[0]];
        let ev = |_x: f64, y: State| y[0];
        let traj = integrate(
            &rhs,
            0.0,
            [0.0, 1.0],
            10.0,
            1e-10,
            [1e-12, 1e-12],
            &[EventSpec {
                g: &ev,
                direction: -1.0,
            }],
        )
        .unwrap();
        match traj.stop {
            Stop::Event { index, x, .. } => {
                assert_eq!(index, 0);
                assert_abs_diff_eq!(x, std::f64::consts::PI, epsilon = 1e-10);
            }
            _ => panic!("event did not fire"),
        }
    }

    #[test]
    fn blow_up_reports_integration_failure() {
        let rhs = |x: f64, _y: State| [1.0 / (1.0 - x), 0.0];
        let err = integrate(&rhs, 0.0, [0.0, 0.0], 2.0, 1e-10, [1e-12, 1e-12], &[]).unwrap_err();
        match err {
            Error::Integration { x, .. } => assert!((x - 1.0).abs() < 1e-3, "x = {x}"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn upward_event_direction() {
        let rhs = |_x: f64, _y: State| [1.0, 0.0];
        let ev = |_x: f64, y: State| y[0] - 2.5;
        let traj = integrate(
            &rhs,
            0.0,
            [0.0, 0.0],
            10.0,
            1e-10,
            [1e-12, 1e-12],
            &[EventSpec {
                g: &ev,
                direction: 1.0,
            }],
        )
        .unwrap();
        match traj.stop {
            Stop::Event { x, .. } => assert_abs_diff_eq!(x, 2.5, epsilon = 1e-10),
            _ => panic!("event did not fire"),
        }
    }
}
