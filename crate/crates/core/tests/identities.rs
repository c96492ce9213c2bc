//! Boundary identities and invariances on randomized shapes.

use std::f64::consts::{PI, TAU};

use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use bubble_core::energy::{identity_report, perimeter_lower_envelope, report, shape_gradient};
use bubble_core::geometry::{ellipse_family, ellipse_log_energy, ellipse_perimeter, FourierShape, SupportShape};
use bubble_core::potential::{log_energy, solve_equilibrium};

/// Radial shape with modes 2..=`modes` from the given coefficient pairs.
fn radial(coeffs: &[(f64, f64)]) -> FourierShape {
    let mut s = FourierShape::disk(coeffs.len() + 1);
    for (i, (a, b)) in coeffs.iter().enumerate() {
        s = s.with_mode(i + 2, *a, *b);
    }
    s
}

fn coeff_strategy() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-0.15..0.15f64, -0.15..0.15f64), 1..7).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (a, b))| (a / (i + 1) as f64, b / (i + 1) as f64))
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn universal_identities_hold(coeffs in coeff_strategy(), ox in -3.0..3.0f64, oy in -3.0..3.0f64, we in 0.0..5.0f64) {
        let disc = radial(&coeffs).discretize(256).unwrap().translated([ox, oy]);
        let rep = report(&disc, we).unwrap();
        let r = rep.identity_residuals;
        prop_assert!(r.flux.abs() < 1e-9, "flux {}", r.flux);
        prop_assert!(r.pohozaev.abs() < 1e-7, "pohozaev {}", r.pohozaev);
        prop_assert!(r.minkowski_1.abs() < 1e-9, "minkowski_1 {}", r.minkowski_1);
        prop_assert!(r.minkowski_2.abs() < 1e-9, "minkowski_2 {}", r.minkowski_2);
        prop_assert!(r.cauchy_schwarz_slack >= -1e-9);
        // λ is defined by the integrated jump equation, so this one is exact.
        prop_assert!(r.jump_gb.abs() < 1e-10);
    }

    #[test]
    fn log_energy_is_translation_and_scale_covariant(coeffs in coeff_strategy(), s in 0.2..5.0f64, ox in -10.0..10.0f64) {
        let disc = radial(&coeffs).discretize(192).unwrap();
        let base = log_energy(&disc).unwrap();
        let moved = log_energy(&disc.translated([ox, -0.5 * ox])).unwrap();
        let scaled = log_energy(&disc.scaled(s)).unwrap();
        prop_assert!((moved - base).abs() < 1e-10);
        prop_assert!((scaled - (base - s.ln())).abs() < 1e-10);
    }

    #[test]
    fn functional_dominates_the_perimeter_envelope(coeffs in coeff_strategy(), we in 0.0..6.0f64) {
        let shape = radial(&coeffs).normalized_area();
        let disc = shape.discretize(256).unwrap();
        let rep = report(&disc, we).unwrap();
        let psi = perimeter_lower_envelope(rep.perimeter.max(TAU), we).unwrap();
        prop_assert!(rep.functional >= psi - 1e-9, "F = {} < Ψ(P) = {}", rep.functional, psi);
        // Capacity–perimeter inequality 2π·Cap ≤ P.
        prop_assert!(TAU * (-rep.log_energy).exp() <= rep.perimeter + 1e-9);
    }

    #[test]
    fn convex_shapes_satisfy_the_identities(seed in 0u64..1000) {
        let h = SupportShape::random(8, 8, 1.0, seed);
        let disc = h.discretize(256).unwrap();
        assert_abs_diff_eq!(disc.perimeter(), h.perimeter(), epsilon = 1e-11);
        assert_abs_diff_eq!(disc.area(), h.area(), epsilon = 1e-11);
        let r = report(&disc, 2.0).unwrap().identity_residuals;
        prop_assert!(r.max_universal() < 1e-7);
        // Equilibrium density is positive on convex curves.
        let sol = solve_equilibrium(&disc).unwrap();
        prop_assert!(sol.density.iter().all(|d| *d > 0.0));
    }
}

#[test]
fn shape_gradient_matches_finite_differences() {
    // dF/dε along r ↦ r + ε φ(θ) equals ∫ G r φ dθ.
    let base = FourierShape::disk(6).with_mode(2, 0.1, 0.03).with_mode(3, -0.04, 0.02);
    let we = 2.5;
    let n = 256;
    let disc = base.discretize(n).unwrap();
    let sol = solve_equilibrium(&disc).unwrap();
    let g = shape_gradient(&disc, &sol, we);
    let f = |s: &FourierShape| -> f64 {
        let d = s.discretize(n).unwrap();
        identity_report(&d, &solve_equilibrium(&d).unwrap(), we).functional
    };
    let h = TAU / n as f64;
    for (k, sine) in [(2usize, false), (3, true), (5, false)] {
        let pert = |eps: f64| {
            let (a, b) = (base.cos_coeff(k), base.sin_coeff(k));
            let s = base.clone();
            if sine {
                s.with_mode(k, a, b + eps)
            } else {
                s.with_mode(k, a + eps, b)
            }
        };
        let eps = 1e-5;
        let fd = (f(&pert(eps)) - f(&pert(-eps))) / (2.0 * eps);
        let analytic: f64 = (0..n)
            .map(|j| {
                let t = disc.theta[j];
                let phi = if sine { (k as f64 * t).sin() } else { (k as f64 * t).cos() };
                g[j] * base.radius(t).0 * phi * h
            })
            .sum();
        assert_abs_diff_eq!(fd, analytic, epsilon = 1e-7);
    }
}

#[test]
fn ellipse_quantities_converge_spectrally() {
    let t = 0.5;
    let exact_i = ellipse_log_energy(t);
    let exact_p = ellipse_perimeter(t).unwrap();
    let errors: Vec<f64> = [16usize, 32, 64]
        .iter()
        .map(|&n| {
            let disc = ellipse_family(t).discretize(n).unwrap();
            (log_energy(&disc).unwrap() - exact_i).abs()
        })
        .collect();
    assert!(errors[1] < 0.05 * errors[0], "{errors:?}");
    assert!(errors[2] < 1e-10, "{errors:?}");
    let disc = ellipse_family(t).discretize(64).unwrap();
    assert_abs_diff_eq!(disc.perimeter(), exact_p, epsilon = 1e-12);
    assert_abs_diff_eq!(disc.area(), PI, epsilon = 1e-12);
}

#[test]
fn disks_are_exact_at_every_resolution() {
    for n in [8usize, 16, 64] {
        let disc = FourierShape::disk(2).discretize(n).unwrap();
        let rep = report(&disc, 3.0).unwrap();
        assert_abs_diff_eq!(rep.functional, TAU, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.lambda_best, -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.identity_residuals.flux_l2.unwrap(), 0.0, epsilon = 1e-11);
    }
}
