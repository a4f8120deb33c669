//! Energy functional, its two homogeneous parts, and fiber/Nehari utilities.
//!
//! For u in the discrete Dirichlet space,
//!   H_α(u) = ‖u′‖_p^p − α‖u‖_p^p,   G_β(u) = ‖u′‖_q^q − β‖u‖_q^q,
//!   E(u) = H_α(u)/p + G_β(u)/q.
//! Along the ray t ↦ E(t·u) with H and G of opposite sign there is a unique
//! critical point t*(u) = (−G/H)^{1/(p−q)}; inserting it gives the fibered
//! functional J(u), which is 0-homogeneous. Scaling by t* projects onto the
//! Nehari set {H + G = 0}.

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::params::Params;
use serde::Serialize;

/// Signed power |t|^{r−1}·sign(t), the scalar nonlinearity of the weak form.
pub fn odd_pow(t: f64, r: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    if r == 2.0 {
        return t;
    }
    if r.fract() == 0.0 && (1.0..=16.0).contains(&r) {
        return t.abs().powi(r as i32 - 1) * t.signum();
    }
    t.abs().powf(r - 1.0) * t.signum()
}

#[derive(Debug, Clone, Serialize)]
pub struct FiberReport {
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "G")]
    pub g: f64,
    #[serde(rename = "E")]
    pub e: f64,
    pub t_star: Option<f64>,
    #[serde(rename = "J")]
    pub j: Option<f64>,
    pub nehari_residual: f64,
}

pub fn h_alpha(u: &GridFunction, params: &Params) -> f64 {
    u.dnorm_pow(params.p) - params.alpha * u.norm_pow(params.p)
}

pub fn g_beta(u: &GridFunction, params: &Params) -> f64 {
    u.dnorm_pow(params.q) - params.beta * u.norm_pow(params.q)
}

pub fn energy(u: &GridFunction, params: &Params) -> f64 {
    h_alpha(u, params) / params.p + g_beta(u, params) / params.q
}

/// Directional derivative E′(u)[v], assembled from the weak form:
/// ∫ (|u′|^{p−2} + |u′|^{q−2}) u′ v′ − ∫ (α|u|^{p−2} + β|u|^{q−2}) u v.
pub fn energy_derivative(u: &GridFunction, v: &GridFunction, params: &Params) -> f64 {
    let (p, q) = (params.p, params.q);
    let w = u.grid().weights();
    let mut acc = 0.0;
    for i in 0..w.len() {
        let du = u.dvalues()[i];
        let uu = u.values()[i];
        let flux = odd_pow(du, p) + odd_pow(du, q);
        let src = params.alpha * odd_pow(uu, p) + params.beta * odd_pow(uu, q);
        acc += w[i] * (flux * v.dvalues()[i] - src * v.values()[i]);
    }
    acc
}

fn admissible_parts(u: &GridFunction, params: &Params) -> Result<(f64, f64)> {
    let h = h_alpha(u, params);
    let g = g_beta(u, params);
    if h.abs() < 1e-14 || g.abs() < 1e-14 || h * g >= 0.0 {
        return Err(Error::domain(format!(
            "fiber scaling undefined: H={h:.3e}, G={g:.3e} must have opposite signs"
        )));
    }
    Ok((h, g))
}

/// The unique critical point of t ↦ E(t·u), defined when H·G < 0.
pub fn t_star(u: &GridFunction, params: &Params) -> Result<f64> {
    let (h, g) = admissible_parts(u, params)?;
    Ok((g.abs() / h.abs()).powf(1.0 / (params.p - params.q)))
}

/// E evaluated at the fiber critical point; 0-homogeneous in u.
pub fn fibered_j(u: &GridFunction, params: &Params) -> Result<f64> {
    let (h, g) = admissible_parts(u, params)?;
    let (p, q) = (params.p, params.q);
    let magnitude = (p - q) / (p * q) * g.abs().powf(p / (p - q)) / h.abs().powf(q / (p - q));
    Ok(-h.signum() * magnitude)
}

/// t*(u)·u, which lands on the Nehari set H + G = 0.
pub fn nehari_project(u: &GridFunction, params: &Params) -> Result<GridFunction> {
    Ok(u.scaled(t_star(u, params)?))
}

pub fn report(u: &GridFunction, params: &Params) -> FiberReport {
    let h = h_alpha(u, params);
    let g = g_beta(u, params);
    let (t, j) = match t_star(u, params) {
        Ok(t) => (Some(t), fibered_j(u, params).ok()),
        Err(_) => (None, None),
    };
    FiberReport {
        h,
        g,
        e: h / params.p + g / params.q,
        t_star: t,
        j,
        nehari_residual: h + g,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, GridFunction, DEFAULT_NODES};
    use crate::special::eigenpair;
    use approx::assert_abs_diff_eq;

    const LAM1P: f64 = 422.0089738602162;

    fn fig3_params() -> Params {
        // beta sits 0.1 above the q-Rayleigh quotient of phi_p on this grid
        Params::new(6.0, 2.0, LAM1P - 0.1, 11.421617828096167).unwrap()
    }

    fn phi(r: f64) -> GridFunction {
        let grid = Grid::new(DEFAULT_NODES).unwrap();
        eigenpair(r, &grid).unwrap().phi
    }

    #[test]
    fn zero_function_reports_zeros() {
        let grid = Grid::new(DEFAULT_NODES).unwrap();
        let rep = report(&GridFunction::zero(grid), &fig3_params());
        assert_eq!(rep.h, 0.0);
        assert_eq!(rep.g, 0.0);
        assert_eq!(rep.e, 0.0);
        assert!(rep.t_star.is_none());
        assert!(rep.j.is_none());
    }

    #[test]
    fn eigenfunction_annihilates_its_part() {
        let u = phi(6.0);
        let params = Params::new(6.0, 2.0, LAM1P, 5.0).unwrap();
        let h = h_alpha(&u, &params);
        assert!(h.abs() <= 1e-6 * u.dnorm_pow(6.0), "H = {h:.3e}");
    }

    #[test]
    fn energy_identity() {
        let u = phi(2.0);
        let params = fig3_params();
        let e = energy(&u, &params);
        let sum = h_alpha(&u, &params) / 6.0 + g_beta(&u, &params) / 2.0;
        assert_abs_diff_eq!(e, sum, epsilon = 1e-12 * (1.0 + e.abs()));
    }

    #[test]
    fn t_star_matches_golden_section_on_the_fiber() {
        let u = phi(2.0);
        let params = fig3_params();
        let t = t_star(&u, &params).unwrap();

        let f = |t: f64| energy(&u.scaled(t), &params);
        let (mut a, mut b) = (t / 50.0, t * 50.0);
        let inv = (5.0f64.sqrt() - 1.0) / 2.0;
        for _ in 0..120 {
            let c = b - inv * (b - a);
            let d = a + inv * (b - a);
            if f(c) < f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let t_gold = 0.5 * (a + b);
        // golden section localizes a smooth minimum to about sqrt(eps)
        assert_abs_diff_eq!(t, t_gold, epsilon = 1e-6 * t);
        assert!(f(t) < 0.0);
    }

    #[test]
    fn fiber_sampling_attains_minimum_at_t_star() {
        let u = phi(2.0);
        let params = fig3_params();
        let t = t_star(&u, &params).unwrap();
        let at_star = energy(&u.scaled(t), &params);
        for k in -10..=10 {
            let e = energy(&u.scaled(t * 2f64.powi(k)), &params);
            assert!(e >= at_star - 1e-12, "k={k}: {e} < {at_star}");
        }
    }

    #[test]
    fn fibered_j_is_zero_homogeneous_and_matches_projected_energy() {
        let u = phi(2.0);
        let params = fig3_params();
        let j = fibered_j(&u, &params).unwrap();
        assert!(j < 0.0);
        for c in [0.1, 2.0, 37.5] {
            let jc = fibered_j(&u.scaled(c), &params).unwrap();
            assert_abs_diff_eq!(jc, j, epsilon = 1e-12 * (1.0 + j.abs()));
        }
        let t = t_star(&u, &params).unwrap();
        let e = energy(&u.scaled(t), &params);
        assert_abs_diff_eq!(j, e, epsilon = 1e-10 * (1.0 + j.abs()));
    }

    #[test]
    fn nehari_projection_has_tiny_residual_and_is_idempotent() {
        let u = phi(2.0);
        let params = fig3_params();
        let proj = nehari_project(&u, &params).unwrap();
        let residual = h_alpha(&proj, &params) + g_beta(&proj, &params);
        assert!(residual.abs() <= 1e-9 * u.dnorm_pow(params.p));

        let again = nehari_project(&proj, &params).unwrap();
        for (a, b) in again.values().iter().zip(proj.values()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn same_sign_parts_are_rejected() {
        let u = phi(2.0);
        let params = Params::new(6.0, 2.0, 0.0, 5.0).unwrap();
        let err = t_star(&u, &params).unwrap_err();
        assert!(err.to_string().contains("fiber scaling undefined"));
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let grid = Grid::new(DEFAULT_NODES).unwrap();
        let pi = std::f64::consts::PI;
        let mk = |coeffs: &[(f64, f64)]| {
            let mut values = vec![0.0; grid.n_nodes()];
            let mut dvalues = vec![0.0; grid.n_nodes()];
            for (i, &x) in grid.nodes().iter().enumerate() {
                for &(a, k) in coeffs {
                    values[i] += a * (k * pi * x).sin();
                    dvalues[i] += a * k * pi * (k * pi * x).cos();
                }
            }
            let last = values.len() - 1;
            values[0] = 0.0;
            values[last] = 0.0;
            GridFunction::new(grid.clone(), values, dvalues).unwrap()
        };
        let u = mk(&[(0.8, 1.0), (0.15, 3.0)]);
        let v = mk(&[(0.5, 2.0), (-0.3, 1.0)]);
        let params = fig3_params();

        let assembled = energy_derivative(&u, &v, &params);
        let eps = 1e-6;
        let plus = GridFunction::linear_combination(1.0, &u, eps, &v).unwrap();
        let minus = GridFunction::linear_combination(1.0, &u, -eps, &v).unwrap();
        let fd = (energy(&plus, &params) - energy(&minus, &params)) / (2.0 * eps);
        assert_abs_diff_eq!(assembled, fd, epsilon = 1e-5 * (1.0 + assembled.abs()));
    }
}
