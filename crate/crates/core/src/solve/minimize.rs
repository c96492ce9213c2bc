//! Area-constrained descent for `F_We`.
//!
//! The objective is `f(c) = F_We(s(c)·E(c))` with `s = sqrt(π/|E|)`, i.e.
//! the functional of the shape rescaled to area π. By the scaling laws
//! `P(sE) = sP(E)` and `I(sE) = I(E) − log s`, its coefficient gradient at
//! area π is
//!
//! ```text
//! ∂f/∂c_j = ∮ (G − λ) V_j ds,   λ = (P − We·π)/(2π),
//! ```
//!
//! where `G = −(We/2)(∂_nψ)² + H` is the shape gradient and `V_j` the normal
//! velocity of coefficient `c_j` (`r·φ_j/|x'|` for radial shapes, `φ_j` for
//! support functions). Directions are preconditioned by the second variation
//! of the perimeter, `π(k² − 1)` on mode k, the k = 1 (translation) and k = 0
//! (scale) components are dropped, and Armijo backtracking on `f` fixes the
//! step. Every iterate is rescaled to area π exactly.
//!
//! In the convex mode the support function is projected onto the cone
//! `h + h'' ≥ floor` at the nodes after every step.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::energy::{identity_report, shape_gradient, EnergyReport};
use crate::error::{Error, Result};
use crate::geometry::{FourierShape, Shape, SupportShape};
use crate::potential::solve_equilibrium;

use super::MIN_RADIUS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Constraint {
    None,
    Convex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizeConfig {
    pub max_mode: usize,
    pub n_nodes: usize,
    pub max_iters: usize,
    /// Stop when the gradient, projected onto the represented modes
    /// k = 2..=max_mode, has L² norm below this value.
    pub grad_tol: f64,
    /// Sufficient-decrease constant of the Armijo rule.
    pub armijo_c: f64,
    pub max_backtracks: usize,
    /// Lower bound for the radius of curvature `h + h''` in convex mode,
    /// imposed before each rescaling to area π.
    pub convex_floor: f64,
}

impl Default for MinimizeConfig {
    fn default() -> Self {
        Self {
            max_mode: 16,
            n_nodes: 128,
            max_iters: 2000,
            grad_tol: 1e-6,
            armijo_c: 1e-4,
            max_backtracks: 40,
            convex_floor: 1e-3,
        }
    }
}

impl MinimizeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_mode < 2 {
            return Err(Error::InvalidInput(format!("max_mode must be ≥ 2, got {}", self.max_mode)));
        }
        if self.n_nodes < 4 * self.max_mode || self.n_nodes % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "n_nodes = {} must be even and at least 4·max_mode = {}",
                self.n_nodes,
                4 * self.max_mode
            )));
        }
        let positive = [self.grad_tol, self.armijo_c, self.convex_floor];
        if positive.iter().any(|v| !(*v > 0.0)) || self.armijo_c >= 1.0 {
            return Err(Error::InvalidInput(
                "grad_tol and convex_floor must be positive and armijo_c in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MinimizeStatus {
    /// Gradient norm below `grad_tol`.
    Converged,
    MaxIterations,
    /// No step satisfied the Armijo condition; the report carries the last
    /// accepted iterate.
    Stalled,
}

/// One accepted iterate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub functional: f64,
    pub perimeter: f64,
    pub log_energy: f64,
    pub gradient_norm: f64,
    /// Step length that produced this iterate (0 for the initial shape).
    pub step: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimizeResult {
    pub shape: Shape,
    pub report: EnergyReport,
    pub status: MinimizeStatus,
    pub iterations: usize,
    pub history: Vec<IterationRecord>,
}

/// Coefficient layout `[c0, cos_1..cos_K, sin_1..sin_K]`.
fn coefficients(shape: &Shape) -> Vec<f64> {
    let (c0, cos, sin) = match shape {
        Shape::Fourier(s) => (s.a0, &s.a, &s.b),
        Shape::Support(s) => (s.c0, &s.c, &s.d),
    };
    std::iter::once(c0).chain(cos.iter().cloned()).chain(sin.iter().cloned()).collect()
}

fn with_coefficients(template: &Shape, v: &[f64]) -> Shape {
    let k = template.max_mode();
    let c0 = v[0];
    let cos = v[1..=k].to_vec();
    let sin = v[k + 1..].to_vec();
    match template {
        Shape::Fourier(_) => Shape::Fourier(FourierShape { max_mode: k, a0: c0, a: cos, b: sin }),
        Shape::Support(_) => Shape::Support(SupportShape { max_mode: k, c0, c: cos, d: sin }),
    }
}

fn normalized(shape: &Shape) -> Shape {
    match shape {
        Shape::Fourier(s) => Shape::Fourier(s.normalized_area()),
        Shape::Support(s) => Shape::Support(s.normalized_area()),
    }
}

/// Zeroes the k = 1 coefficients.
fn recentered(shape: &Shape) -> Shape {
    let mut v = coefficients(shape);
    let k = shape.max_mode();
    v[1] = 0.0;
    v[k + 1] = 0.0;
    with_coefficients(shape, &v)
}

fn resized(shape: &Shape, max_mode: usize) -> Shape {
    let v = coefficients(shape);
    let k_old = shape.max_mode();
    let mut out = vec![0.0; 2 * max_mode + 1];
    out[0] = v[0];
    for k in 1..=max_mode.min(k_old) {
        out[k] = v[k];
        out[max_mode + k] = v[k_old + k];
    }
    let template = match shape {
        Shape::Fourier(_) => Shape::Fourier(FourierShape::disk(max_mode)),
        Shape::Support(_) => Shape::Support(SupportShape::disk(max_mode)),
    };
    with_coefficients(&template, &out)
}

/// Projects a support function onto `{h + h'' ≥ floor}` at the nodes.
///
/// The radius of curvature is clipped from below and mapped back to a
/// band-limited support function (`ĥ_k = ρ̂_k/(1 − k²)`, translation modes
/// dropped); a few rounds absorb the band-limiting overshoot, and a final
/// contraction toward the disk of equal perimeter guarantees feasibility.
pub fn project_convex(h: &SupportShape, n_nodes: usize, floor: f64) -> SupportShape {
    let k_max = h.max_mode;
    let theta: Vec<f64> = (0..n_nodes).map(|j| TAU * j as f64 / n_nodes as f64).collect();
    let rho_of = |s: &SupportShape| -> Vec<f64> { theta.iter().map(|&t| s.radius_of_curvature(t)).collect() };
    let min_of = |v: &[f64]| v.iter().cloned().fold(f64::INFINITY, f64::min);

    let mut cur = h.clone();
    let mut rho = rho_of(&cur);
    let nf = n_nodes as f64;
    for _ in 0..50 {
        if min_of(&rho) >= floor {
            return cur;
        }
        let clipped: Vec<f64> = rho.iter().map(|r| r.max(floor)).collect();
        let mut next = SupportShape::disk(k_max);
        next.c0 = clipped.iter().sum::<f64>() / nf;
        for k in 2..=k_max {
            let kf = k as f64;
            let (mut ck, mut sk) = (0.0, 0.0);
            for (r, t) in clipped.iter().zip(&theta) {
                let (s, c) = (kf * t).sin_cos();
                ck += r * c;
                sk += r * s;
            }
            let scale = 2.0 / nf / (1.0 - kf * kf);
            next.c[k - 1] = ck * scale;
            next.d[k - 1] = sk * scale;
        }
        cur = next;
        rho = rho_of(&cur);
    }
    let m = min_of(&rho);
    if m >= floor {
        return cur;
    }
    // ρ ↦ c0 + s(ρ − c0) with s chosen so that the minimum equals the floor.
    let s = (cur.c0 - floor) / (cur.c0 - m);
    SupportShape {
        max_mode: k_max,
        c0: cur.c0,
        c: cur.c.iter().map(|v| s * v).collect(),
        d: cur.d.iter().map(|v| s * v).collect(),
    }
}

struct Evaluation {
    shape: Shape,
    f: f64,
    /// Coefficient gradient of the area-normalized functional.
    grad: Vec<f64>,
    /// L²(dθ) norm of the gradient density projected onto modes 2..=K.
    grad_norm: f64,
    report: EnergyReport,
}

fn evaluate(shape: Shape, we: f64, n_nodes: usize) -> Result<Evaluation> {
    if let Shape::Fourier(s) = &shape {
        let r_min = s.min_radius(n_nodes);
        if r_min < MIN_RADIUS {
            return Err(Error::InvalidShape(format!("radius dropped to {r_min:.3e}")));
        }
    }
    let disc = shape.discretize(n_nodes)?;
    let sol = solve_equilibrium(&disc)?;
    let report = identity_report(&disc, &sol, we);
    let g = shape_gradient(&disc, &sol, we);
    let lambda = (report.perimeter - we * PI) / TAU;
    let h = TAU / n_nodes as f64;
    // Normal velocity per unit coefficient, times |x'|: r for radial shapes,
    // the radius of curvature (= speed) for support functions.
    let weight: Vec<f64> = match &shape {
        Shape::Fourier(s) => disc.theta.iter().map(|&t| s.radius(t).0).collect(),
        Shape::Support(_) => disc.speed.clone(),
    };
    let density: Vec<f64> = g
        .iter()
        .zip(&weight)
        .map(|(gi, w)| (gi - lambda) * w * h)
        .collect();
    let k_max = shape.max_mode();
    let mut grad = vec![0.0; 2 * k_max + 1];
    grad[0] = density.iter().sum();
    for k in 1..=k_max {
        let kf = k as f64;
        for (d, t) in density.iter().zip(&disc.theta) {
            let (s, c) = (kf * t).sin_cos();
            grad[k] += d * c;
            grad[k_max + k] += d * s;
        }
    }
    let grad_norm = (2..=k_max)
        .map(|k| grad[k] * grad[k] + grad[k_max + k] * grad[k_max + k])
        .sum::<f64>()
        .sqrt()
        / PI.sqrt();
    Ok(Evaluation {
        f: report.functional,
        shape,
        grad,
        grad_norm,
        report,
    })
}

/// Preconditioned descent direction; zero on the scale and translation modes.
fn direction(grad: &[f64], k_max: usize) -> Vec<f64> {
    let mut d = vec![0.0; grad.len()];
    for k in 2..=k_max {
        let p = PI * ((k * k) as f64 - 1.0);
        d[k] = -grad[k] / p;
        d[k_max + k] = -grad[k_max + k] / p;
    }
    d
}

fn feasible(shape: Shape, constraint: Constraint, config: &MinimizeConfig) -> Shape {
    let shape = match (constraint, shape) {
        (Constraint::Convex, Shape::Support(s)) => {
            Shape::Support(project_convex(&s, config.n_nodes, config.convex_floor))
        }
        (_, s) => s,
    };
    normalized(&recentered(&shape))
}

/// Minimizes `F_We` over shapes of area π, starting from `initial`.
///
/// The convex constraint requires a support-function shape. Support shapes
/// without the constraint remain convex because non-convex trial steps are
/// rejected by the line search.
pub fn minimize_energy(
    we: f64,
    initial: &Shape,
    constraint: Constraint,
    config: &MinimizeConfig,
) -> Result<MinimizeResult> {
    if !(we >= 0.0) || !we.is_finite() {
        return Err(Error::InvalidInput(format!("Weber number must be ≥ 0, got {we}")));
    }
    config.validate()?;
    initial.validate()?;
    if constraint == Constraint::Convex && !matches!(initial, Shape::Support(_)) {
        return Err(Error::InvalidInput(
            "the convex constraint needs a support-function initial shape".into(),
        ));
    }
    let start = feasible(resized(initial, config.max_mode), constraint, config);
    let mut cur = evaluate(start, we, config.n_nodes)?;
    let k_max = config.max_mode;
    let mut history = vec![IterationRecord {
        iteration: 0,
        functional: cur.f,
        perimeter: cur.report.perimeter,
        log_energy: cur.report.log_energy,
        gradient_norm: cur.grad_norm,
        step: 0.0,
    }];
    let mut status = MinimizeStatus::MaxIterations;
    let mut alpha = 1.0f64;
    let mut iterations = 0;

    while iterations < config.max_iters {
        if cur.grad_norm < config.grad_tol {
            status = MinimizeStatus::Converged;
            break;
        }
        let d = direction(&cur.grad, k_max);
        let x = coefficients(&cur.shape);
        let mut accepted = None;
        alpha = (2.0 * alpha).min(1.0);
        for _ in 0..config.max_backtracks {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + alpha * b).collect();
            let candidate = feasible(with_coefficients(&cur.shape, &trial), constraint, config);
            if let Ok(next) = evaluate(candidate, we, config.n_nodes) {
                // Decrease predicted by the actual (projected, rescaled) displacement.
                let moved: f64 = coefficients(&next.shape)
                    .iter()
                    .zip(&x)
                    .zip(&cur.grad)
                    .map(|((n, o), g)| g * (n - o))
                    .sum();
                let predicted = moved.min(0.0);
                if next.f <= cur.f + config.armijo_c * predicted && next.f < cur.f {
                    accepted = Some(next);
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some(next) = accepted else {
            status = MinimizeStatus::Stalled;
            break;
        };
        let projected_step = coefficients(&next.shape)
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        cur = next;
        iterations += 1;
        history.push(IterationRecord {
            iteration: iterations,
            functional: cur.f,
            perimeter: cur.report.perimeter,
            log_energy: cur.report.log_energy,
            gradient_norm: cur.grad_norm,
            step: alpha,
        });
        // With the constraint active the gradient need not vanish; stationarity
        // is then a vanishing projected step.
        if constraint == Constraint::Convex && projected_step / alpha < config.grad_tol {
            status = MinimizeStatus::Converged;
            break;
        }
    }
    Ok(MinimizeResult {
        shape: cur.shape,
        report: cur.report,
        status,
        iterations,
        history,
    })
}
