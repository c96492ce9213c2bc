//! Linearization of the jump operator about the unit disk.
//!
//! On the unit circle the exterior Dirichlet-to-Neumann map acts on `e^{ikθ}`
//! by `|k|`, and the linearized jump operator is diagonal with eigenvalue
//! `(|k| − 1)(|k| + 1 − We)`. The quadratic part of `F_We` along
//! area-preserving radial perturbations carries the same symbol; here it is
//! checked by central second differences of the full functional.

use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::energy::functional;
use crate::error::{Error, Result};
use crate::geometry::{ellipse_log_energy, ellipse_perimeter, FourierShape};
use crate::potential::solve_equilibrium;

/// Eigenvalue of the linearized jump operator on mode `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeEigen {
    pub k: i64,
    pub we: f64,
    pub eigenvalue: f64,
}

impl ModeEigen {
    /// Modes `k = ±1` are infinitesimal translations.
    pub fn is_translation(&self) -> bool {
        self.k.abs() == 1
    }

    pub fn is_neutral(&self) -> bool {
        self.eigenvalue == 0.0
    }
}

/// Symbol of the exterior Dirichlet-to-Neumann map on the unit circle.
pub fn dtn_symbol(k: i64) -> f64 {
    k.abs() as f64
}

pub fn dispersion(k: i64, we: f64) -> ModeEigen {
    let m = k.abs() as f64;
    ModeEigen {
        k,
        we,
        // `+ 0.0` normalizes the −0 produced at |k| = 1 for We > 2.
        eigenvalue: (m - 1.0) * ((m + 1.0) - we) + 0.0,
    }
}

/// Integer Weber number where the disk's linearization has a kernel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BifurcationPoint {
    pub we: u32,
    /// `±(We − 1)`
    pub kernel_modes: [i64; 2],
}

/// All integers `m ≥ 3` in `[we_min, we_max]`.
pub fn bifurcation_points(we_min: f64, we_max: f64) -> Result<Vec<BifurcationPoint>> {
    if !(we_min <= we_max) {
        return Err(Error::InvalidInput(format!(
            "empty Weber range [{we_min}, {we_max}]"
        )));
    }
    let lo = we_min.ceil().max(3.0);
    if we_max < lo {
        return Ok(Vec::new());
    }
    Ok((lo as u32..=we_max.floor() as u32)
        .map(|m| BifurcationPoint {
            we: m,
            kernel_modes: [m as i64 - 1, -(m as i64 - 1)],
        })
        .collect())
}

/// Area-π perturbation `η = eps·cos kθ + a0` of the unit circle.
pub fn area_preserving_probe(k: usize, eps: f64) -> FourierShape {
    let mut shape = FourierShape::disk(k.max(2)).with_mode(k, eps, 0.0);
    // π[(1 + a0)² + eps²/2] = π
    shape.a0 = (1.0 - 0.5 * eps * eps).sqrt() - 1.0;
    shape
}

fn raw_second_difference(we: f64, k: usize, eps: f64, n_nodes: usize) -> Result<f64> {
    let f = |e: f64| -> Result<f64> {
        functional(&area_preserving_probe(k, e).discretize(n_nodes)?, we)
    };
    let f0 = functional(&FourierShape::disk(k.max(2)).discretize(n_nodes)?, we)?;
    Ok((f(eps)? + f(-eps)? - 2.0 * f0) / (eps * eps))
}

/// Constant relating the raw second difference of `F_We` along
/// `eps·cos kθ` to the dispersion symbol, fixed once by the `k = 2, We = 0`
/// run. It comes out as π: with the unitary transform
/// `η̂(k) = (2π)^{−1/2}∫ η e^{−ikθ} dθ`, `eps·cos kθ` has `|η̂(±k)|² = π eps²/2`.
pub fn quadratic_form_scale() -> f64 {
    static SCALE: OnceLock<f64> = OnceLock::new();
    *SCALE.get_or_init(|| {
        raw_second_difference(0.0, 2, 1e-3, 64).expect("calibration probe on a near-disk")
            / dispersion(2, 0.0).eigenvalue
    })
}

/// Second variation of `F_We` at the disk along mode `k`, normalized to the
/// dispersion symbol.
///
/// Fails with [`Error::Tolerance`] if halving the step changes the value by
/// more than 1% (higher-order contamination).
pub fn second_variation_fd(we: f64, k: i64, eps: f64, n_nodes: usize) -> Result<f64> {
    let m = k.unsigned_abs() as usize;
    if m < 2 {
        return Err(Error::InvalidInput(format!("mode |k| must be at least 2, got {k}")));
    }
    if n_nodes < 16 * m {
        return Err(Error::InvalidInput(format!(
            "n_nodes = {n_nodes} must be at least 16·|k| = {}",
            16 * m
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("step must be positive, got {eps}")));
    }
    let scale = quadratic_form_scale();
    let full = raw_second_difference(we, m, eps, n_nodes)? / scale;
    let half = raw_second_difference(we, m, 0.5 * eps, n_nodes)? / scale;
    if (full - half).abs() > 1e-2 * full.abs().max(1.0) {
        return Err(Error::Tolerance(format!(
            "second difference not converged: {full} at eps = {eps}, {half} at eps/2"
        )));
    }
    Ok(full)
}

/// First-order response of the Neumann trace to `eps·cos kθ`:
/// returns `c` with `∂_nψ ≈ 1 + c·eps·cos kθ`.
///
/// With the outward normal of the bubble this is `|k| − 1 = Λ − 1`; in the
/// convention `∂_n = −∂_r` on the unit circle the same response reads
/// `(1 − Λ)`.
pub fn neumann_response(k: usize, eps: f64, n_nodes: usize) -> Result<f64> {
    let project = |e: f64| -> Result<f64> {
        let disc = FourierShape::disk(k.max(2)).with_mode(k, e, 0.0).discretize(n_nodes)?;
        let sol = solve_equilibrium(&disc)?;
        Ok(2.0 / n_nodes as f64
            * sol
                .neumann_trace
                .iter()
                .zip(&disc.theta)
                .map(|(v, t)| v * (k as f64 * t).cos())
                .sum::<f64>())
    };
    Ok((project(eps)? - project(-eps)?) / (2.0 * eps))
}

/// Comparison of `F_We(E_t)` with its small-`t` expansion.
#[derive(Debug, Clone, Serialize)]
pub struct EllipseExpansionReport {
    pub we: f64,
    /// `½π(3 − We)`
    pub c2_expected: f64,
    /// `π(8We + 3)/96`
    pub c4_expected: f64,
    pub c2_fit: f64,
    pub c4_fit: f64,
    pub c6_fit: f64,
    pub rows: Vec<EllipseRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EllipseRow {
    pub t: f64,
    pub perimeter: f64,
    pub log_energy: f64,
    pub functional: f64,
    pub expansion: f64,
    /// `(F − expansion)/t⁶`
    pub scaled_remainder: f64,
}

/// `F_We(E_t)` from the closed-form perimeter integral and `−log cosh t`.
pub fn ellipse_functional(we: f64, t: f64) -> Result<f64> {
    Ok(ellipse_perimeter(t)? + we * PI * ellipse_log_energy(t))
}

/// Least-squares fit of `F_We(E_t) − 2π` on `{t², t⁴, t⁶, t⁸}`.
pub fn ellipse_quartic_check(we: f64, t_values: &[f64]) -> Result<EllipseExpansionReport> {
    if t_values.len() < 4 {
        return Err(Error::InvalidInput("need at least four t values".into()));
    }
    if let Some(t) = t_values.iter().find(|t| !(**t > 0.0 && **t <= 0.3)) {
        return Err(Error::InvalidInput(format!("t = {t} outside (0, 0.3]")));
    }
    let c2_expected = 0.5 * PI * (3.0 - we);
    let c4_expected = PI * (8.0 * we + 3.0) / 96.0;

    let mut rows = Vec::with_capacity(t_values.len());
    let mut design = DMatrix::<f64>::zeros(t_values.len(), 4);
    let mut rhs = DVector::<f64>::zeros(t_values.len());
    // Columns scaled by t_max^p so the normal problem stays well conditioned.
    let t_max = t_values.iter().cloned().fold(0.0, f64::max);
    for (i, &t) in t_values.iter().enumerate() {
        let perimeter = ellipse_perimeter(t)?;
        let log_energy = ellipse_log_energy(t);
        let f = perimeter + we * PI * log_energy;
        let expansion = TAU + c2_expected * t * t + c4_expected * t.powi(4);
        for (col, p) in [2, 4, 6, 8].into_iter().enumerate() {
            design[(i, col)] = (t / t_max).powi(p);
        }
        rhs[i] = f - TAU;
        rows.push(EllipseRow {
            t,
            perimeter,
            log_energy,
            functional: f,
            expansion,
            scaled_remainder: (f - expansion) / t.powi(6),
        });
    }
    let coeffs = design
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::InvalidInput(format!("least-squares fit failed: {e}")))?;
    Ok(EllipseExpansionReport {
        we,
        c2_expected,
        c4_expected,
        c2_fit: coeffs[0] / t_max.powi(2),
        c4_fit: coeffs[1] / t_max.powi(4),
        c6_fit: coeffs[2] / t_max.powi(6),
        rows,
    })
}

/// One row of a `(k, We)` scan.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumRow {
    pub k: i64,
    pub we: f64,
    pub eigenvalue_formula: f64,
    /// Absent for the translation modes.
    pub eigenvalue_fd: Option<f64>,
    pub abs_err: f64,
    pub tag: &'static str,
}

/// Formula and finite-difference eigenvalue of one mode.
pub fn spectrum_row(k: i64, we: f64, eps: f64, n_nodes: usize) -> Result<SpectrumRow> {
    let mode = dispersion(k, we);
    let tag = if mode.is_translation() {
        "translation"
    } else if k == 0 {
        "area"
    } else if mode.is_neutral() {
        "bifurcation"
    } else if mode.eigenvalue > 0.0 {
        "stable"
    } else {
        "unstable"
    };
    let eigenvalue_fd = if k.abs() >= 2 {
        Some(second_variation_fd(we, k, eps, n_nodes.max(16 * k.unsigned_abs() as usize))?)
    } else {
        None
    };
    Ok(SpectrumRow {
        k,
        we,
        eigenvalue_formula: mode.eigenvalue,
        eigenvalue_fd,
        abs_err: eigenvalue_fd.map_or(0.0, |fd| (fd - mode.eigenvalue).abs()),
        tag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn symbols() {
        assert_eq!(dtn_symbol(0), 0.0);
        assert_eq!(dtn_symbol(3), 3.0);
        assert_eq!(dtn_symbol(-3), 3.0);
        assert_eq!(dispersion(1, 7.3).eigenvalue, 0.0);
        assert_eq!(dispersion(-1, 0.2).eigenvalue, 0.0);
        assert_eq!(dispersion(2, 3.0).eigenvalue, 0.0);
        assert_eq!(dispersion(2, 0.0).eigenvalue, 3.0);
        assert!(dispersion(1, 2.0).is_translation());
    }

    #[test]
    fn sign_table() {
        for k in 2..=64i64 {
            for i in 0..=20 {
                let we = 0.5 * i as f64;
                let ev = dispersion(k, we).eigenvalue;
                assert_eq!(ev, dispersion(-k, we).eigenvalue);
                let unstable = (k as f64) < we - 1.0;
                assert_eq!(ev < 0.0, unstable, "k = {k}, We = {we}");
                if we < 3.0 {
                    assert!(ev > 0.0);
                }
            }
        }
    }

    #[test]
    fn bifurcation_lists() {
        assert!(bifurcation_points(0.0, 2.9).unwrap().is_empty());
        let pts: Vec<u32> = bifurcation_points(2.5, 5.5).unwrap().iter().map(|p| p.we).collect();
        assert_eq!(pts, vec![3, 4, 5]);
        let p = bifurcation_points(3.0, 3.0).unwrap();
        assert_eq!(p, vec![BifurcationPoint { we: 3, kernel_modes: [2, -2] }]);
        assert!(bifurcation_points(4.0, 3.0).is_err());
    }

    #[test]
    fn calibration_is_pi() {
        assert_abs_diff_eq!(quadratic_form_scale(), PI, epsilon = 1e-5);
    }

    #[test]
    fn second_variation_examples() {
        let v = second_variation_fd(0.0, 2, 1e-3, 64).unwrap();
        assert!((v - 3.0).abs() < 3e-3);
        let v = second_variation_fd(3.0, 2, 1e-3, 64).unwrap();
        assert!(v.abs() < 1e-3, "{v}");
        let v = second_variation_fd(4.0, 2, 1e-3, 64).unwrap();
        assert!((v + 1.0).abs() < 1e-3, "{v}");
        assert!(second_variation_fd(1.0, 1, 1e-3, 64).is_err());
        assert!(second_variation_fd(1.0, 4, 1e-3, 32).is_err());
    }

    #[test]
    fn large_step_is_rejected() {
        assert!(matches!(
            second_variation_fd(0.0, 3, 0.3, 64),
            Err(Error::Tolerance(_))
        ));
    }

    #[test]
    fn neumann_response_matches_dtn() {
        for k in 2..=5usize {
            let c = neumann_response(k, 1e-3, 128).unwrap();
            let expected = dtn_symbol(k as i64) - 1.0;
            assert!((c - expected).abs() <= 0.05 * expected, "k = {k}: {c}");
        }
    }

    #[test]
    fn ellipse_expansion_coefficients() {
        let ts: Vec<f64> = (1..=15).map(|i| 0.02 * i as f64).collect();
        let r3 = ellipse_quartic_check(3.0, &ts).unwrap();
        assert!(r3.c2_fit.abs() < 1e-6, "{}", r3.c2_fit);
        assert!((r3.c4_fit - 9.0 * PI / 32.0).abs() < 1e-2 * 9.0 * PI / 32.0);
        let r0 = ellipse_quartic_check(0.0, &ts).unwrap();
        assert!((r0.c2_fit - 1.5 * PI).abs() < 1e-6);
        assert!((r0.c4_fit - PI / 32.0).abs() < 1e-2 * PI / 32.0);
        let r4 = ellipse_quartic_check(4.0, &ts).unwrap();
        assert!((r4.c2_fit + 0.5 * PI).abs() < 1e-6);
        assert!(ellipse_quartic_check(1.0, &[0.1, 0.2, 0.25, 0.4]).is_err());
    }

    #[test]
    fn spectrum_row_tags() {
        let r = spectrum_row(1, 5.0, 1e-3, 64).unwrap();
        assert_eq!(r.tag, "translation");
        assert_eq!(r.eigenvalue_formula, 0.0);
        let r = spectrum_row(2, 3.0, 1e-3, 64).unwrap();
        assert_eq!(r.tag, "bifurcation");
        assert!(r.abs_err < 1e-3);
    }
}
