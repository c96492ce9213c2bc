//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.
//!
//! Run with `cargo test -p bubble-core --test acceptance`.

use std::f64::consts::TAU;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use bubble_core::energy::{report, shape_gradient};
use bubble_core::geometry::{ellipse_family, FourierShape, Shape, SupportShape};
use bubble_core::potential::solve_equilibrium;
use bubble_core::solve::{
    continue_branch, minimize_energy, switch_branch, trivial_branch, BranchEnd, Constraint, MinimizeConfig,
    SolverConfig,
};
use bubble_core::spectrum::{dispersion, ellipse_quartic_check, second_variation_fd};

/// Outcome of one criterion: pass flag and a one-line measurement summary.
type Outcome = (bool, String);

fn disk_exactness() -> Outcome {
    let disc = FourierShape::disk(2).discretize(64).unwrap();
    let sol = solve_equilibrium(&disc).unwrap();
    let err_i = sol.robin_constant.abs();
    let err_rho = sol.density.iter().map(|d| (d - 1.0 / TAU).abs()).fold(0.0, f64::max);
    let err_dn = sol.neumann_trace.iter().map(|d| (d - 1.0).abs()).fold(0.0, f64::max);
    let worst = err_i.max(err_rho).max(err_dn);
    (
        worst < 1e-10,
        format!("|I| = {err_i:.1e}, max|ρ − 1/2π| = {err_rho:.1e}, max|∂nψ − 1| = {err_dn:.1e} (tol 1e-10)"),
    )
}

fn ellipse_capacity() -> Outcome {
    let errs: Vec<f64> = [0.1, 0.3, 0.5, 1.0]
        .iter()
        .map(|&t| {
            let disc = ellipse_family(t).discretize(256).unwrap();
            let i = solve_equilibrium(&disc).unwrap().robin_constant;
            (i + f64::cosh(t).ln()).abs()
        })
        .collect();
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    (worst < 1e-8, format!("max |I(E_t) + log cosh t| = {worst:.1e} over t ∈ {{0.1, 0.3, 0.5, 1}} (tol 1e-8)"))
}

fn identity_battery() -> Outcome {
    let worst = (0..50u64)
        .into_par_iter()
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let mut shape = FourierShape::random(8, 8, 0.15, seed);
            shape.a[0] = rng.gen_range(-0.15..0.15);
            shape.b[0] = rng.gen_range(-0.15..0.15);
            let origin = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
            let disc = shape.discretize(256).unwrap().translated(origin);
            let r = report(&disc, rng.gen_range(0.0..5.0)).unwrap().identity_residuals;
            [
                r.flux.abs(),
                r.pohozaev.abs(),
                r.minkowski_1.abs().max(r.minkowski_2.abs()),
                -r.cauchy_schwarz_slack,
            ]
        })
        .reduce(
            || [0.0, 0.0, 0.0, f64::NEG_INFINITY],
            |a, b| [a[0].max(b[0]), a[1].max(b[1]), a[2].max(b[2]), a[3].max(b[3])],
        );
    let ok = worst[0] < 1e-9 && worst[1] < 1e-7 && worst[2] < 1e-9 && worst[3] <= 1e-9;
    (
        ok,
        format!(
            "50 shapes: flux {:.1e} (1e-9), Pohozaev {:.1e} (1e-7), Minkowski {:.1e} (1e-9), min CS slack {:.1e} (≥ −1e-9)",
            worst[0], worst[1], worst[2], -worst[3]
        ),
    )
}

fn dispersion_match() -> Outcome {
    let jobs: Vec<(i64, f64)> = (2..=6).flat_map(|k| (0..=5).map(move |w| (k, w as f64))).collect();
    let results: Vec<(i64, f64, f64)> = jobs
        .par_iter()
        .map(|&(k, we)| {
            let target = dispersion(k, we).eigenvalue;
            let fd = second_variation_fd(we, k, 1e-3, 128).unwrap();
            let err = if target == 0.0 { fd.abs() } else { ((fd - target) / target).abs() };
            (k, we, err)
        })
        .collect();
    let (k, we, worst) = results.iter().cloned().fold((0, 0.0, 0.0), |a, b| if b.2 > a.2 { b } else { a });
    (
        worst < 1e-3,
        format!("30 (k, We) pairs: worst error {worst:.1e} at k = {k}, We = {we} (tol 1e-3 rel, abs at zero)"),
    )
}

fn ellipse_expansion() -> Outcome {
    let ts: Vec<f64> = (1..=25).map(|i| 0.01 * i as f64).collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for we in [0.0, 2.0, 3.0, 4.0] {
        let fit = ellipse_quartic_check(we, &ts).unwrap();
        let c2_err = if fit.c2_expected == 0.0 {
            let e = fit.c2_fit.abs();
            ok &= e < 1e-4;
            format!("|c2| {e:.1e}")
        } else {
            let e = ((fit.c2_fit - fit.c2_expected) / fit.c2_expected).abs();
            ok &= e < 0.01;
            format!("c2 {e:.1e}")
        };
        parts.push(format!("We={we}: {c2_err}"));
        if we == 3.0 {
            let e = ((fit.c4_fit - fit.c4_expected) / fit.c4_expected).abs();
            ok &= e < 0.02;
            parts.push(format!("We=3: c4 {e:.1e}"));
        }
    }
    (ok, format!("{} (c2 1% rel, 1e-4 abs at zero; c4 2%)", parts.join(", ")))
}

fn rigidity() -> Outcome {
    let cfg = MinimizeConfig::default();
    let jobs: Vec<(f64, u64, bool)> = [0.0, 1.0, 2.0]
        .iter()
        .flat_map(|&we| (0..10u64).flat_map(move |s| [(we, s, false), (we, s, true)]))
        .collect();
    let results: Vec<(f64, f64, bool)> = jobs
        .par_iter()
        .map(|&(we, seed, convex)| {
            let (init, constraint) = if convex {
                (Shape::Support(SupportShape::random(16, 8, 1.0, 100 + seed)), Constraint::Convex)
            } else {
                (Shape::Fourier(FourierShape::random(16, 8, 0.15, 100 + seed)), Constraint::None)
            };
            let r = minimize_energy(we, &init, constraint, &cfg).unwrap();
            (r.report.perimeter - TAU, r.report.functional - TAU, convex)
        })
        .collect();
    let worst = |convex: bool| {
        results
            .iter()
            .filter(|r| r.2 == convex)
            .fold((f64::NEG_INFINITY, f64::NEG_INFINITY), |a, r| (a.0.max(r.0), a.1.max(r.1)))
    };
    let (p, f) = worst(false);
    let (pc, fc) = worst(true);
    (
        p < 1e-6 && f < 1e-6 && pc < 1e-6 && fc < 1e-6,
        format!(
            "30 radial runs: max P−2π {p:.1e}, F−2π {f:.1e}; 30 convex runs: {pc:.1e}, {fc:.1e} (tol 1e-6)"
        ),
    )
}

fn instability() -> Outcome {
    let init = Shape::Fourier(FourierShape::disk(16).with_mode(2, 0.05, 0.0));
    let r = minimize_energy(4.0, &init, Constraint::None, &MinimizeConfig::default()).unwrap();
    let gap = TAU - r.report.functional;
    (gap > 1e-4, format!("We = 4: 2π − F = {gap:.3e} after {} iterations (need > 1e-4)", r.iterations))
}

fn trivial_branch_check() -> Outcome {
    let cfg = SolverConfig {
        max_mode: 8,
        n_nodes: 64,
        continuation_step: 0.1,
        ..SolverConfig::default()
    };
    let b = trivial_branch(0.0, 2.9, &cfg).unwrap();
    let lam = b.points.iter().map(|p| (p.lambda - (1.0 - p.we / 2.0)).abs()).fold(0.0, f64::max);
    let amp = b.points.iter().map(|p| p.max_mode_amplitude()).fold(0.0, f64::max);
    let ok = lam < 1e-9 && amp < 1e-9 && b.detected_bifurcations.is_empty() && b.end == BranchEnd::ReachedTarget;
    (
        ok,
        format!(
            "{} points on [0, 2.9]: max |λ − (1 − We/2)| {lam:.1e} (1e-9), max amplitude {amp:.1e}, {} detections",
            b.points.len(),
            b.detected_bifurcations.len()
        ),
    )
}

fn branch_certification() -> Outcome {
    let cfg = SolverConfig {
        max_mode: 64,
        n_nodes: 256,
        ..SolverConfig::default()
    };
    let start = match switch_branch(3, &cfg) {
        Ok(p) => p,
        Err(e) => return (false, format!("branch switch failed: {e}")),
    };
    let b = match continue_branch(&start, 3.2, &cfg) {
        Ok(b) => b,
        Err(e) => return (false, format!("continuation failed: {e}")),
    };
    let noncirc: Vec<_> = b.points.iter().filter(|p| !p.is_circular(1e-6)).collect();
    let res = noncirc.iter().map(|p| p.jump_residual_norm).fold(0.0, f64::max);
    let fl2 = noncirc
        .iter()
        .map(|p| p.report.identity_residuals.flux_l2.map_or(f64::INFINITY, f64::abs))
        .fold(0.0, f64::max);
    let modes_ok = noncirc.iter().all(|p| p.shape.dominant_mode().0 == 2);
    let we_min = b.points.iter().map(|p| p.we).fold(f64::INFINITY, f64::min);
    let reached = b.end == BranchEnd::ReachedTarget;
    let ok = reached && !noncirc.is_empty() && res < 1e-8 && fl2 < 1e-6 && modes_ok && we_min > 2.0;
    (
        ok,
        format!(
            "{} points to We = 3.2: max jump residual {res:.1e} (1e-8), max |flux_l2| {fl2:.1e} (1e-6), dominant mode 2: {modes_ok}, min We {we_min:.4}",
            noncirc.len()
        ),
    )
}

fn gradient_consistency() -> Outcome {
    let n = 256;
    let orders: Vec<f64> = (0..20u64)
        .into_par_iter()
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(5000 + seed);
            let base = FourierShape::random(8, 8, 0.15, seed);
            let we = rng.gen_range(0.0..5.0);
            let mut dir = FourierShape::disk(8);
            dir.a0 = rng.gen_range(-1.0..1.0);
            for k in 1..=8 {
                dir.a[k - 1] = rng.gen_range(-1.0..1.0) / k as f64;
                dir.b[k - 1] = rng.gen_range(-1.0..1.0) / k as f64;
            }
            let disc = base.discretize(n).unwrap();
            let sol = solve_equilibrium(&disc).unwrap();
            let g = shape_gradient(&disc, &sol, we);
            // ∮ G V_n ds with V_n ds = r·δr dθ for radial perturbations.
            let h = TAU / n as f64;
            let analytic: f64 = (0..n)
                .map(|j| {
                    let t = disc.theta[j];
                    let dr = dir.radius(t).0 - 1.0;
                    g[j] * base.radius(t).0 * dr * h
                })
                .sum();
            let f = |eps: f64| {
                let s = FourierShape {
                    max_mode: 8,
                    a0: base.a0 + eps * dir.a0,
                    a: base.a.iter().zip(&dir.a).map(|(x, d)| x + eps * d).collect(),
                    b: base.b.iter().zip(&dir.b).map(|(x, d)| x + eps * d).collect(),
                };
                report(&s.discretize(n).unwrap(), we).unwrap().functional
            };
            let err = |eps: f64| ((f(eps) - f(-eps)) / (2.0 * eps) - analytic).abs();
            (err(0.02) / err(0.01)).log2()
        })
        .collect();
    let min = orders.iter().cloned().fold(f64::INFINITY, f64::min);
    (min >= 1.9, format!("20 triples: minimum observed order {min:.3} (need ≥ 1.9)"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("disk exactness", disk_exactness),
        ("ellipse capacity", ellipse_capacity),
        ("universal identities", identity_battery),
        ("dispersion match", dispersion_match),
        ("ellipse expansion", ellipse_expansion),
        ("rigidity at small We", rigidity),
        ("instability above We = 3", instability),
        ("trivial branch", trivial_branch_check),
        ("branch certification", branch_certification),
        ("gradient consistency", gradient_consistency),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = check();
        if !ok {
            failures += 1;
        }
        println!(
            "{} {:>2} {name}: {detail} [{:.1}s]",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
