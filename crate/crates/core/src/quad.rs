//! Tanh-sinh quadrature.
//!
//! Handles algebraic endpoint singularities without problem-specific
//! substitutions. The integrand receives the point together with its
//! distances to both endpoints, so factors like (1−x)^(−1/p) can be computed
//! without cancellation near the singular end.

const MAX_LEVEL: u32 = 12;
const T_MAX: f64 = 6.1; // exp(-pi*sinh t) underflows past this

/// ∫_a^b f dx where `f(x, d_left, d_right)` gets x−a and b−x exactly.
pub fn tanh_sinh<F: Fn(f64, f64, f64) -> f64>(a: f64, b: f64, tol: f64, f: F) -> f64 {
    let len = b - a;
    let pi = std::f64::consts::PI;

    // Sum of the symmetric pair at ±t (t > 0). Only the decaying exponential
    // e^{-pi sinh t} is ever formed, so nothing overflows.
    let eval_pair = |t: f64| -> f64 {
        let e = (-pi * t.sinh()).exp();
        let denom = 1.0 + e;
        let near = len * e / denom; // distance to the nearer endpoint
        let far = len / denom; // distance to the farther endpoint
        let weight = len * pi * t.cosh() * e / (denom * denom);
        if weight == 0.0 || !weight.is_finite() {
            return 0.0;
        }
        let right = f(b - near, far, near); // abscissa approaching b
        let left = f(a + near, near, far); // abscissa approaching a
        let mut term = 0.0;
        if right.is_finite() {
            term += weight * right;
        }
        if left.is_finite() {
            term += weight * left;
        }
        term
    };

    let center = {
        let v = f(a + 0.5 * len, 0.5 * len, 0.5 * len);
        if v.is_finite() {
            0.25 * len * pi * v
        } else {
            0.0
        }
    };

    let mut h = 1.0;
    let mut sum = center;
    let mut k = 1;
    while k as f64 * h <= T_MAX {
        sum += eval_pair(k as f64 * h);
        k += 1;
    }
    let mut integral = h * sum;

    for _level in 1..=MAX_LEVEL {
        h *= 0.5;
        let mut k = 1;
        let mut tiny_run = 0;
        while k as f64 * h <= T_MAX {
            let term = eval_pair(k as f64 * h);
            sum += term;
            // the tail decays double-exponentially; stop once it is dust
            if term.abs() <= 1e-18 * (1.0 + sum.abs()) {
                tiny_run += 1;
                if tiny_run >= 3 && k as f64 * h > 3.0 {
                    break;
                }
            } else {
                tiny_run = 0;
            }
            k += 2;
        }
        let refined = h * sum;
        if (refined - integral).abs() <= tol * (1.0 + refined.abs()) {
            return refined;
        }
        integral = refined;
    }
    integral
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn smooth_integrand() {
        let v = tanh_sinh(0.0, 1.0, 1e-14, |x, _, _| (2.0 * x).exp());
        assert_abs_diff_eq!(v, (2.0f64.exp() - 1.0) / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn inverse_sqrt_singularity_at_right_end() {
        // ∫_0^1 (1-x)^(-1/2) dx = 2
        let v = tanh_sinh(0.0, 1.0, 1e-14, |_, _, dr| dr.powf(-0.5));
        assert_abs_diff_eq!(v, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn singularities_at_both_ends() {
        // ∫_0^1 x^(-1/3) (1-x)^(-1/3) dx = B(2/3, 2/3)
        let v = tanh_sinh(0.0, 1.0, 1e-14, |_, dl, dr| {
            dl.powf(-1.0 / 3.0) * dr.powf(-1.0 / 3.0)
        });
        assert_abs_diff_eq!(v, 2.053_390_217_939_177_2, epsilon = 1e-11);
    }

    #[test]
    fn shifted_interval() {
        let v = tanh_sinh(1.0, 3.0, 1e-14, |x, _, _| x * x);
        assert_abs_diff_eq!(v, 26.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn asymmetric_singularity_uses_given_distances() {
        // ∫_0^2 x^(-1/2)(2-x)^(-1/2) dx = pi
        let v = tanh_sinh(0.0, 2.0, 1e-14, |_, dl, dr| 1.0 / (dl * dr).sqrt());
        assert_abs_diff_eq!(v, std::f64::consts::PI, epsilon = 1e-11);
    }
}
