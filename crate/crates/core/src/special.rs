//! p-trigonometric functions and first Dirichlet eigenpairs of the
//! one-dimensional r-Laplacian on (0,1).
//!
//! sin_p solves (|u′|^{p−2}u′)′ + (p−1)|u|^{p−2}u = 0 with u(0)=0, u′(0)=1.
//! On the rising branch it satisfies the first integral |u′|^p + |u|^p = 1,
//! so x = ∫_0^{sin_p x} (1−t^p)^{−1/p} dt, which is what we invert. π_p is
//! twice the integral over the full branch. The first eigenpair on (0,1) is
//! λ₁(r) = (r−1)π_r^r with eigenfunction proportional to sin_r(π_r x).

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::quad::tanh_sinh;

/// 1 − x^p without cancellation, given d = 1 − x.
#[inline]
fn one_minus_pow(d: f64, p: f64) -> f64 {
    // x^p = exp(p ln(1-d)); stable for small d
    -((p * (-d).ln_1p()).exp_m1())
}

/// Half-period of sin_p: π_p = 2∫_0^1 (1−s^p)^{−1/p} ds.
pub fn pi_p(p: f64) -> Result<f64> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::domain(format!("pi_p needs p > 1, got {p}")));
    }
    let v = tanh_sinh(0.0, 1.0, 1e-13, |_, _, dr| {
        one_minus_pow(dr, p).powf(-1.0 / p)
    });
    Ok(2.0 * v)
}

/// x(u) = ∫_0^u (1−t^p)^{−1/p} dt for u ∈ [0,1], the inverse of sin_p on the
/// rising branch. `half` must be π_p/2; the complementary form keeps accuracy
/// near the peak.
fn arcsin_p(u: f64, p: f64, half: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return half;
    }
    if u < 0.95 {
        tanh_sinh(0.0, u, 1e-13, |t, _, _| {
            (1.0 - t.powf(p)).powf(-1.0 / p)
        })
    } else {
        half - tanh_sinh(u, 1.0, 1e-13, |t, _, dr| {
            if dr <= 0.0 {
                return 0.0;
            }
            let _ = t;
            one_minus_pow(dr, p).powf(-1.0 / p)
        })
    }
}

/// Solve arcsin_p(u) = x by safeguarded Newton on the bracket [lo, hi].
fn invert_arcsin_p(x: f64, p: f64, half: f64, guess: f64) -> f64 {
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    let mut u = guess.clamp(1e-8, 1.0 - 1e-8);
    for _ in 0..80 {
        let fx = arcsin_p(u, p, half) - x;
        if fx > 0.0 {
            hi = u;
        } else {
            lo = u;
        }
        if fx.abs() <= 1e-13 * (1.0 + half) {
            break;
        }
        // Newton step; dx/du = (1-u^p)^(-1/p)
        let slope = (1.0 - u.powf(p)).max(0.0).powf(1.0 / p);
        let step = -fx * slope;
        let next = u + step;
        u = if next > lo && next < hi {
            next
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < 1e-16 {
            break;
        }
    }
    u
}

/// sin_p(x) on [0, π_p], extended by the reflection sin_p(π_p − x) = sin_p(x).
pub fn sin_p(p: f64, x: f64) -> Result<f64> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::domain(format!("sin_p needs p > 1, got {p}")));
    }
    let period = pi_p(p)?;
    let slack = 1e-12 * (1.0 + period);
    if !(x >= -slack && x <= period + slack) {
        return Err(Error::domain(format!(
            "sin_p argument {x} outside [0, pi_p={period}]"
        )));
    }
    let x = x.clamp(0.0, period);
    let half = period / 2.0;
    let y = if x <= half { x } else { period - x };
    if y <= 0.0 {
        return Ok(0.0);
    }
    if (y - half).abs() < 1e-15 {
        return Ok(1.0);
    }
    let guess = (std::f64::consts::FRAC_PI_2 * y / half).sin();
    Ok(invert_arcsin_p(y, p, half, guess))
}

/// Derivative of sin_p via the first integral: |u′|^p = 1 − |u|^p, with the
/// sign flipping at the peak.
pub fn sin_p_prime(p: f64, x: f64) -> Result<f64> {
    let period = pi_p(p)?;
    let u = sin_p(p, x)?;
    let mag = (1.0 - u.abs().powf(p)).max(0.0).powf(1.0 / p);
    Ok(if x <= period / 2.0 { mag } else { -mag })
}

/// First Dirichlet eigenpair of −(|u′|^{r−2}u′)′ = λ|u|^{r−2}u on (0,1).
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub r: f64,
    pub lambda1: f64,
    /// Eigenfunction with ‖φ′‖_r = 1 under the grid quadrature.
    pub phi: GridFunction,
}

/// λ₁(r) = (r−1)π_r^r and φ_r(x) = c·sin_r(π_r x) sampled on `grid`, with
/// exact derivative samples from the first integral. c normalizes ‖φ′‖_r to 1
/// by one division (the norm is 1-homogeneous); a bisection guard covers the
/// (never observed) case where rounding leaves a residual.
pub fn eigenpair(r: f64, grid: &Grid) -> Result<EigenPair> {
    if !(r > 1.0) || !r.is_finite() {
        return Err(Error::domain(format!("eigenpair needs r > 1, got {r}")));
    }
    let period = pi_p(r)?;
    let lambda1 = (r - 1.0) * period.powf(r);
    let half = period / 2.0;
    let n = grid.n_nodes();

    let mut values = vec![0.0; n];
    let mut dvalues = vec![0.0; n];
    // invert on the left half with warm starts, mirror to the right half
    let mut u_prev = 0.0f64;
    for i in 0..n {
        let x = grid.node(i);
        if x > 0.5 + 1e-15 {
            break;
        }
        let y = period * x;
        let u = if i == 0 {
            0.0
        } else if (y - half).abs() < 1e-14 {
            1.0
        } else {
            let guess = if u_prev > 1e-8 { u_prev } else { (std::f64::consts::FRAC_PI_2 * y / half).sin() };
            invert_arcsin_p(y, r, half, guess)
        };
        u_prev = u;
        let du = (1.0 - u.powf(r)).max(0.0).powf(1.0 / r) * period;
        values[i] = u;
        dvalues[i] = du;
        let j = n - 1 - i; // mirror node at 1 - x
        values[j] = u;
        dvalues[j] = -du;
    }
    values[0] = 0.0;
    values[n - 1] = 0.0;

    let raw_norm = grid.norm_pow(&dvalues, r).powf(1.0 / r);
    let mut c = 1.0 / raw_norm;
    // guard: the map c ↦ c·raw_norm is monotone; bisect if division left a residual
    let residual = |c: f64| {
        let scaled: Vec<f64> = dvalues.iter().map(|d| c * d).collect();
        grid.norm_pow(&scaled, r).powf(1.0 / r) - 1.0
    };
    if residual(c).abs() > 1e-10 {
        let (mut lo, mut hi) = (0.5 * c, 2.0 * c);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if residual(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        c = 0.5 * (lo + hi);
    }

    for v in values.iter_mut() {
        *v *= c;
    }
    for d in dvalues.iter_mut() {
        *d *= c;
    }
    let phi = GridFunction::new(grid.clone(), values, dvalues)?;
    Ok(EigenPair { r, lambda1, phi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Closed form π_p = 2π/(p sin(π/p)), the independent oracle for the
    /// singular-integral definition.
    fn pi_p_closed(p: f64) -> f64 {
        2.0 * std::f64::consts::PI / (p * (std::f64::consts::PI / p).sin())
    }

    #[test]
    fn pi_p_matches_closed_form() {
        for p in [1.2, 1.5, 2.0, 3.0, 6.0, 10.0] {
            assert_abs_diff_eq!(pi_p(p).unwrap(), pi_p_closed(p), epsilon = 1e-11);
        }
    }

    #[test]
    fn pi_2_is_pi() {
        assert_abs_diff_eq!(pi_p(2.0).unwrap(), std::f64::consts::PI, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_exponent() {
        assert!(pi_p(1.0).is_err());
        assert!(sin_p(0.5, 0.1).is_err());
        assert!(eigenpair(1.0, &Grid::default()).is_err());
    }

    #[test]
    fn sin_2_is_classical_sine() {
        for x in [0.0, 0.3, 1.0, std::f64::consts::FRAC_PI_2, 2.5, std::f64::consts::PI] {
            assert_abs_diff_eq!(sin_p(2.0, x).unwrap(), x.sin(), epsilon = 1e-11);
        }
    }

    #[test]
    fn peak_value_is_one() {
        for p in [1.5, 2.0, 6.0] {
            let period = pi_p(p).unwrap();
            assert_abs_diff_eq!(sin_p(p, period / 2.0).unwrap(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn reflection_symmetry_and_monotonicity() {
        let p = 6.0;
        let period = pi_p(p).unwrap();
        let mut prev = -1.0;
        for k in 0..=40 {
            let x = period / 2.0 * k as f64 / 40.0;
            let v = sin_p(p, x).unwrap();
            assert!(v >= prev - 1e-12, "not increasing at x={x}");
            prev = v;
            let mirrored = sin_p(p, period - x).unwrap();
            assert_abs_diff_eq!(v, mirrored, epsilon = 1e-10);
        }
        assert_abs_diff_eq!(sin_p(p, period).unwrap(), 0.0, epsilon = 1e-9);
    }

    /// Independent ODE oracle: integrate the defining IVP in flux form
    /// w = |u′|^{p−2}u′ with a fixed-step RK4 and compare.
    #[test]
    fn ode_oracle_agrees_with_inverse_integral() {
        let p = 6.0;
        let period = pi_p(p).unwrap();
        let target = period / 4.0;
        let rhs = |u: f64, w: f64| -> (f64, f64) {
            let du = w.abs().powf(1.0 / (p - 1.0)) * w.signum();
            let dw = -(p - 1.0) * u.abs().powf(p - 2.0) * u;
            (du, dw)
        };
        let n_steps = 200_000;
        let h = target / n_steps as f64;
        let (mut u, mut w) = (0.0f64, 1.0f64);
        for _ in 0..n_steps {
            let (k1u, k1w) = rhs(u, w);
            let (k2u, k2w) = rhs(u + 0.5 * h * k1u, w + 0.5 * h * k1w);
            let (k3u, k3w) = rhs(u + 0.5 * h * k2u, w + 0.5 * h * k2w);
            let (k4u, k4w) = rhs(u + h * k3u, w + h * k3w);
            u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
            w += h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
        }
        assert_abs_diff_eq!(sin_p(p, target).unwrap(), u, epsilon = 1e-8);
    }

    #[test]
    fn first_integral_holds_along_the_branch() {
        let p = 3.0;
        let period = pi_p(p).unwrap();
        for k in 1..20 {
            let x = period * k as f64 / 20.0;
            let u = sin_p(p, x).unwrap();
            let du = sin_p_prime(p, x).unwrap();
            let e = (p - 1.0) / p * (du.abs().powf(p) + u.abs().powf(p));
            assert_abs_diff_eq!(e, (p - 1.0) / p, epsilon = 1e-8);
        }
    }

    #[test]
    fn eigenpair_classical_case() {
        let grid = Grid::default();
        let e = eigenpair(2.0, &grid).unwrap();
        assert_abs_diff_eq!(e.lambda1, std::f64::consts::PI.powi(2), epsilon = 1e-10);
        // phi = c sin(pi x) with ||phi'||_2 = 1 means c = sqrt(2)/pi
        let c = 2.0f64.sqrt() / std::f64::consts::PI;
        let mid = e.phi.values()[grid.n_nodes() / 2];
        assert_abs_diff_eq!(mid, c, epsilon = 1e-10);
    }

    #[test]
    fn eigenpair_normalization_and_rayleigh() {
        let grid = Grid::default();
        for r in [1.2, 2.0, 3.0, 6.0, 10.0] {
            let e = eigenpair(r, &grid).unwrap();
            let dnorm = e.phi.dnorm_pow(r).powf(1.0 / r);
            assert_abs_diff_eq!(dnorm, 1.0, epsilon = 1e-12);
            let rayleigh = e.phi.dnorm_pow(r) / e.phi.norm_pow(r);
            assert!(
                (rayleigh - e.lambda1).abs() <= 1e-6 * e.lambda1,
                "r={r}: rayleigh={rayleigh}, lambda1={}",
                e.lambda1
            );
            assert!(e.phi.is_positive_interior());
        }
    }

    #[test]
    fn eigenpair_even_node_count() {
        // mirror logic must also work when 0.5 is not a node
        let grid = Grid::new(64).unwrap();
        let e = eigenpair(6.0, &grid).unwrap();
        assert!(e.phi.is_positive_interior());
        assert_abs_diff_eq!(e.phi.symmetry_defect(), 0.0, epsilon = 1e-14);
    }
}
