//! The functional `F_We(E) = We·π·I(E) + P(E)`, its shape gradient, the jump
//! residual of the free-boundary problem and the integral identities used to
//! certify candidate solutions.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BoundaryDiscretization;
use crate::potential::{solve_equilibrium, EquilibriumSolution};

/// Signed residuals of the boundary identities.
///
/// `flux`, `pohozaev`, `minkowski_1`, `minkowski_2` and the Cauchy–Schwarz
/// slack hold for every curve; `flux_l2` vanishes only on solutions of the
/// jump equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityResiduals {
    /// `∮ ∂_nψ ds − 2π`
    pub flux: f64,
    /// `∮ (x·n)(∂_nψ)² ds − 2π`
    pub pohozaev: f64,
    /// `∮ x·n ds − 2|E|`
    pub minkowski_1: f64,
    /// `∮ H (x·n) ds − P`
    pub minkowski_2: f64,
    /// `−(We/2)∮(∂_nψ)² ds + 2π − λ P`
    pub jump_gb: f64,
    /// `∮(∂_nψ)² ds − (P − P²/(πWe) + 4π/We)`; absent at We = 0.
    pub flux_l2: Option<f64>,
    /// `∮(∂_nψ)² ds − 4π²/P`
    pub cauchy_schwarz_slack: f64,
}

impl IdentityResiduals {
    /// Largest magnitude among the identities that hold for every curve.
    pub fn max_universal(&self) -> f64 {
        [self.flux, self.pohozaev, self.minkowski_1, self.minkowski_2]
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub we: f64,
    pub perimeter: f64,
    pub area: f64,
    pub log_energy: f64,
    pub functional: f64,
    pub lambda_best: f64,
    /// L² norm over arclength of the pointwise jump residual at `lambda_best`.
    pub jump_residual_norm: f64,
    pub identity_residuals: IdentityResiduals,
}

/// `We = ρα²/(σR)`.
pub fn weber_number(rho: f64, alpha: f64, sigma: f64, radius: f64) -> Result<f64> {
    if !(sigma > 0.0) || !(radius > 0.0) {
        return Err(Error::InvalidInput(format!(
            "surface tension and radius must be positive (σ = {sigma}, R = {radius})"
        )));
    }
    Ok(rho * alpha * alpha / (sigma * radius))
}

fn check_we(we: f64) -> Result<()> {
    if !(we >= 0.0) || !we.is_finite() {
        return Err(Error::InvalidInput(format!("Weber number must be ≥ 0, got {we}")));
    }
    Ok(())
}

/// `We·π·I(E) + P(E)` from an existing equilibrium solve.
pub fn functional_with(disc: &BoundaryDiscretization, sol: &EquilibriumSolution, we: f64) -> f64 {
    we * PI * sol.robin_constant + disc.perimeter()
}

pub fn functional(disc: &BoundaryDiscretization, we: f64) -> Result<f64> {
    check_we(we)?;
    let sol = solve_equilibrium(disc)?;
    Ok(functional_with(disc, &sol, we))
}

/// `−(We/2)(∂_nψ)² + H − λ` at every node.
pub fn jump_residual(
    disc: &BoundaryDiscretization,
    sol: &EquilibriumSolution,
    we: f64,
    lambda: f64,
) -> Vec<f64> {
    shape_gradient(disc, sol, we)
        .into_iter()
        .map(|g| g - lambda)
        .collect()
}

/// Integrated jump equation: `λ = (2π − (We/2)∮(∂_nψ)² ds) / P`.
///
/// On a solution this is the exact multiplier; on any other curve it is the
/// constant minimizing the arclength-L² norm of the jump residual, since
/// `∮ H ds = 2π`.
pub fn lambda_fit(disc: &BoundaryDiscretization, sol: &EquilibriumSolution, we: f64) -> f64 {
    let q = squared_trace_integral(disc, sol);
    (TAU - 0.5 * we * q) / disc.perimeter()
}

/// Arclength-L² gradient density `G = −(We/2)(∂_nψ)² + H` of `F_We` with
/// respect to normal displacement.
pub fn shape_gradient(disc: &BoundaryDiscretization, sol: &EquilibriumSolution, we: f64) -> Vec<f64> {
    sol.neumann_trace
        .iter()
        .zip(&disc.curvature)
        .map(|(dn, h)| -0.5 * we * dn * dn + h)
        .collect()
}

/// `∮ (∂_nψ)² ds`
fn squared_trace_integral(disc: &BoundaryDiscretization, sol: &EquilibriumSolution) -> f64 {
    let sq: Vec<f64> = sol.neumann_trace.iter().map(|v| v * v).collect();
    disc.integrate(&sq)
}

/// Evaluates every identity residual and the functional on one curve.
pub fn identity_report(
    disc: &BoundaryDiscretization,
    sol: &EquilibriumSolution,
    we: f64,
) -> EnergyReport {
    let perimeter = disc.perimeter();
    let area = disc.area();
    let xn = disc.position_dot_normal();
    let q = squared_trace_integral(disc, sol);
    let lambda = lambda_fit(disc, sol, we);

    let poho: Vec<f64> = xn
        .iter()
        .zip(&sol.neumann_trace)
        .map(|(p, d)| p * d * d)
        .collect();
    let hxn: Vec<f64> = xn.iter().zip(&disc.curvature).map(|(p, h)| p * h).collect();
    let residual = jump_residual(disc, sol, we, lambda);
    let res_sq: Vec<f64> = residual.iter().map(|r| r * r).collect();

    let identity_residuals = IdentityResiduals {
        flux: sol.flux(disc) - TAU,
        pohozaev: disc.integrate(&poho) - TAU,
        minkowski_1: disc.integrate(&xn) - 2.0 * area,
        minkowski_2: disc.integrate(&hxn) - perimeter,
        jump_gb: -0.5 * we * q + TAU - lambda * perimeter,
        flux_l2: (we > 0.0)
            .then(|| q - (perimeter - perimeter * perimeter / (PI * we) + 4.0 * PI / we)),
        cauchy_schwarz_slack: q - 4.0 * PI * PI / perimeter,
    };
    EnergyReport {
        we,
        perimeter,
        area,
        log_energy: sol.robin_constant,
        functional: functional_with(disc, sol, we),
        lambda_best: lambda,
        jump_residual_norm: disc.integrate(&res_sq).sqrt(),
        identity_residuals,
    }
}

/// Solves the potential problem and builds the full report.
pub fn report(disc: &BoundaryDiscretization, we: f64) -> Result<EnergyReport> {
    check_we(we)?;
    let sol = solve_equilibrium(disc)?;
    Ok(identity_report(disc, &sol, we))
}

/// `Ψ(s) = s − We·π·log(s/2π)` on `s ≥ 2π`; a lower bound for `F_We` at
/// perimeter `s` and area π.
pub fn perimeter_lower_envelope(s: f64, we: f64) -> Result<f64> {
    if !(s >= TAU) {
        return Err(Error::InvalidInput(format!(
            "perimeter {s} is below the isoperimetric floor 2π"
        )));
    }
    Ok(s - we * PI * (s / TAU).ln())
}
