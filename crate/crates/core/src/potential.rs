//! Exterior Dirichlet problem with logarithmic growth.
//!
//! The stream function is represented as the logarithmic potential of the
//! equilibrium measure `μ = ρ ds` of the boundary,
//!
//! ```text
//! ψ(x) = ∮ log|x − y| ρ(y) ds(y) + V + C0,
//! ```
//!
//! where `ρ` and the Robin constant `V` solve the first-kind (Symm) equation
//! `∮ log|x − y| ρ(y) ds(y) = −V` on the curve together with `∮ ρ ds = 1`.
//! Then `ψ = C0` on the boundary, `ψ − log|x| → V + C0` at infinity and
//! `V = I(E)` is the logarithmic energy. The potential is constant inside, so
//! the single-layer jump relation gives the exterior Neumann trace
//! `∂_nψ = 2π ρ`.
//!
//! The periodic log kernel is split as
//! `log|x(s) − x(t)| = ½ log(4 sin²((s − t)/2)) + K̃(s, t)` with `K̃` smooth;
//! the first part is integrated exactly against the trigonometric
//! interpolant of the density, the remainder by the trapezoidal rule.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::BoundaryDiscretization;

/// Equilibrium measure of a discretized boundary.
#[derive(Debug, Clone)]
pub struct EquilibriumSolution {
    /// `dμ/ds` at the nodes.
    pub density: Vec<f64>,
    /// Robin constant `V = I(E)`.
    pub robin_constant: f64,
    /// Exterior normal derivative `∂_nψ = 2π ρ`.
    pub neumann_trace: Vec<f64>,
    /// Dirichlet value of `ψ` on the boundary.
    pub c0: f64,
}

impl EquilibriumSolution {
    /// `∮ ρ ds`; equal to one for a probability measure.
    pub fn mass(&self, disc: &BoundaryDiscretization) -> f64 {
        disc.integrate(&self.density)
    }

    /// `∮ ∂_nψ ds`.
    pub fn flux(&self, disc: &BoundaryDiscretization) -> f64 {
        disc.integrate(&self.neumann_trace)
    }

    pub fn with_c0(mut self, c0: f64) -> Self {
        self.c0 = c0;
        self
    }
}

/// Summary of one solve, serialized by the CLI.
#[derive(Debug, Clone, Serialize)]
pub struct SolverDiagnostics {
    pub robin_constant: f64,
    pub flux: f64,
    pub condition_number: f64,
}

/// Quadrature weights `R_d` with
/// `∫₀^{2π} log(4 sin²((s_i − t)/2)) f(t) dt ≈ Σ_j R_{(i−j) mod N} f(t_j)`,
/// exact for trigonometric polynomials of degree below N/2.
pub fn log_sin_weights(n: usize) -> Vec<f64> {
    assert!(n % 2 == 0 && n >= 4);
    let half = n / 2;
    let nf = n as f64;
    (0..n)
        .map(|d| {
            let delta = TAU * d as f64 / nf;
            let series: f64 = (1..half).map(|m| (m as f64 * delta).cos() / m as f64).sum();
            let alt = if d % 2 == 0 { 1.0 } else { -1.0 };
            -4.0 * PI / nf * series - 4.0 * PI / (nf * nf) * alt
        })
        .collect()
}

fn assemble(disc: &BoundaryDiscretization) -> DMatrix<f64> {
    let n = disc.n_nodes();
    let h = TAU / n as f64;
    let weights = log_sin_weights(n);
    let mut m = DMatrix::<f64>::zeros(n + 1, n + 1);
    for i in 0..n {
        for j in 0..n {
            let smooth = if i == j {
                disc.speed[i].ln()
            } else {
                let dist = (disc.x[i] - disc.x[j]).hypot(disc.y[i] - disc.y[j]);
                let half_angle = 0.5 * (disc.theta[i] - disc.theta[j]);
                dist.ln() - (2.0 * half_angle.sin()).abs().ln()
            };
            // Unknowns are σ_j = ρ_j·speed_j, the density per unit θ.
            m[(i, j)] = 0.5 * weights[(i + n - j) % n] + h * smooth;
        }
        m[(i, n)] = 1.0;
        m[(n, i)] = h;
    }
    m
}

fn condition_of(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Condition number of the augmented (N+1)×(N+1) system.
pub fn condition_number(disc: &BoundaryDiscretization) -> f64 {
    condition_of(&assemble(disc))
}

/// Solves for the equilibrium measure and Robin constant of the curve.
pub fn solve_equilibrium(disc: &BoundaryDiscretization) -> Result<EquilibriumSolution> {
    let n = disc.n_nodes();
    if n % 2 != 0 {
        return Err(Error::InvalidInput(format!("node count must be even, got {n}")));
    }
    let m = assemble(disc);
    let mut rhs = DVector::<f64>::zeros(n + 1);
    rhs[n] = 1.0;
    let sol = m.clone().lu().solve(&rhs);
    let sol = match sol {
        Some(s) if s.iter().all(|v| v.is_finite()) => s,
        _ => {
            return Err(Error::SingularSystem {
                condition_number: condition_of(&m),
            })
        }
    };
    let density: Vec<f64> = (0..n).map(|j| sol[j] / disc.speed[j]).collect();
    let neumann_trace = density.iter().map(|r| TAU * r).collect();
    Ok(EquilibriumSolution {
        density,
        robin_constant: sol[n],
        neumann_trace,
        c0: 0.0,
    })
}

/// Logarithmic potential energy `I(E)`.
pub fn log_energy(disc: &BoundaryDiscretization) -> Result<f64> {
    Ok(solve_equilibrium(disc)?.robin_constant)
}

pub fn diagnostics(disc: &BoundaryDiscretization) -> Result<SolverDiagnostics> {
    let sol = solve_equilibrium(disc)?;
    Ok(SolverDiagnostics {
        robin_constant: sol.robin_constant,
        flux: sol.flux(disc),
        condition_number: condition_number(disc),
    })
}

/// Evaluates `ψ` at points strictly outside the curve.
///
/// Plain trapezoidal quadrature of the single layer: accurate away from the
/// boundary, degrading within a few node spacings of it.
pub fn eval_stream(
    disc: &BoundaryDiscretization,
    sol: &EquilibriumSolution,
    points: &[[f64; 2]],
) -> Result<Vec<f64>> {
    let min_spacing = disc.weights.iter().cloned().fold(f64::INFINITY, f64::min);
    points
        .iter()
        .map(|&p| {
            if disc.contains(p) {
                return Err(Error::InvalidInput(format!(
                    "point ({}, {}) is not exterior to the curve",
                    p[0], p[1]
                )));
            }
            let mut acc = 0.0;
            for j in 0..disc.n_nodes() {
                let dist = (p[0] - disc.x[j]).hypot(p[1] - disc.y[j]);
                if dist < 1e-3 * min_spacing {
                    return Err(Error::InvalidInput(format!(
                        "point ({}, {}) lies on the curve",
                        p[0], p[1]
                    )));
                }
                acc += dist.ln() * sol.density[j] * disc.weights[j];
            }
            Ok(acc + sol.robin_constant + sol.c0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ellipse_family, FourierShape};
    use approx::assert_abs_diff_eq;

    #[test]
    fn log_sin_weights_are_exact_on_low_modes() {
        // ∫ log(4 sin²((s − t)/2)) dt = 0 and ∫ log(4 sin²((s − t)/2)) cos t dt = −2π cos s.
        let n = 32;
        let w = log_sin_weights(n);
        let h = TAU / n as f64;
        for i in [0usize, 5, 17] {
            let s = h * i as f64;
            let c: f64 = (0..n).map(|j| w[(i + n - j) % n]).sum();
            assert_abs_diff_eq!(c, 0.0, epsilon = 1e-13);
            let c1: f64 = (0..n).map(|j| w[(i + n - j) % n] * (h * j as f64).cos()).sum();
            assert_abs_diff_eq!(c1, -TAU * s.cos(), epsilon = 1e-12);
            // mode 3: ∫ log(4 sin²) cos 3t dt = −(2π/3) cos 3s
            let c3: f64 = (0..n).map(|j| w[(i + n - j) % n] * (3.0 * h * j as f64).cos()).sum();
            assert_abs_diff_eq!(c3, -TAU / 3.0 * (3.0 * s).cos(), epsilon = 1e-12);
        }
    }

    #[test]
    fn unit_circle_exact() {
        let disc = FourierShape::disk(2).discretize(64).unwrap();
        let sol = solve_equilibrium(&disc).unwrap();
        assert_abs_diff_eq!(sol.robin_constant, 0.0, epsilon = 1e-12);
        for j in 0..64 {
            assert_abs_diff_eq!(sol.density[j], 1.0 / TAU, epsilon = 1e-12);
            assert_abs_diff_eq!(sol.neumann_trace[j], 1.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(sol.mass(&disc), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ellipse_robin_constant() {
        let e = ellipse_family(0.5);
        let v = log_energy(&e.discretize(128).unwrap()).unwrap();
        assert_abs_diff_eq!(v, -(0.5f64.cosh().ln()), epsilon = 1e-10);
    }

    #[test]
    fn shifted_radius_two_circle() {
        let disc = FourierShape::disk(2)
            .discretize(64)
            .unwrap()
            .scaled(2.0)
            .translated([5.0, 5.0]);
        let v = log_energy(&disc).unwrap();
        assert_abs_diff_eq!(v, -(2.0f64.ln()), epsilon = 1e-10);
    }

    #[test]
    fn stream_function_off_boundary() {
        let disc = FourierShape::disk(2).discretize(64).unwrap();
        let sol = solve_equilibrium(&disc).unwrap().with_c0(0.7);
        let vals = eval_stream(&disc, &sol, &[[2.0, 0.0], [0.0, -50.0]]).unwrap();
        assert_abs_diff_eq!(vals[0], 0.7 + 2.0f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], 0.7 + 50.0f64.ln(), epsilon = 1e-12);
        assert!(eval_stream(&disc, &sol, &[[0.1, 0.1]]).is_err());
    }

    #[test]
    fn ellipse_far_field() {
        let e = ellipse_family(0.5);
        let disc = e.discretize(128).unwrap();
        let sol = solve_equilibrium(&disc).unwrap();
        let r = 1e4;
        let vals = eval_stream(&disc, &sol, &[[r, 0.0], [0.0, r]]).unwrap();
        for v in vals {
            assert_abs_diff_eq!(v - r.ln(), -(0.5f64.cosh().ln()), epsilon = 1e-6);
        }
    }

    #[test]
    fn condition_number_is_finite() {
        let disc = FourierShape::disk(2).discretize(32).unwrap();
        let d = diagnostics(&disc).unwrap();
        assert!(d.condition_number.is_finite() && d.condition_number > 1.0);
        assert_abs_diff_eq!(d.flux, TAU, epsilon = 1e-12);
    }
}
