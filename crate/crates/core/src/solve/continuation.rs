//! Pseudo-arclength continuation in We and branch switching at the disk.
//!
//! The continuation state is `u = (η coefficients, λ, We)`. Each step predicts
//! along the unit tangent `τ` of the solution curve and corrects with Newton
//! on the residual system augmented by `τ·(u − u_pred) = 0`, so folds in We
//! are passed without special treatment.
//!
//! At an integer `m ≥ 3` the disk has the neutral modes `cos((m−1)θ)`,
//! `sin((m−1)θ)`. Restricting to cosine modes that are multiples of `m − 1`
//! fixes the rotation and leaves one neutral direction; the new branch is
//! entered by predicting along that mode.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{
    damped_newton, disk_lambda, evaluate, fd_jacobian, make_point, newton_solve, resize,
    BranchPoint, ModeBasis, SolverConfig,
};
use crate::error::{Error, Result};
use crate::geometry::FourierShape;

/// Why a continuation run stopped.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum BranchEnd {
    ReachedTarget,
    /// The step size fell below `min_step` at this We.
    StepUnderflow { we: f64 },
    MaxSteps,
}

#[derive(Debug, Clone, Serialize)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    /// We values where the determinant of the Jacobian in
    /// `(η, λ)` changed sign, by linear interpolation.
    pub detected_bifurcations: Vec<f64>,
    /// Indices of certified non-circular points with We ≤ 2. Such points
    /// contradict the rigidity of the disk and indicate a solver defect.
    pub rigidity_violations: Vec<usize>,
    pub end: BranchEnd,
}

/// Amplitude below which a branch point counts as a disk.
const CIRCULAR_TOL: f64 = 1e-8;

struct Problem {
    basis: ModeBasis,
    n_nodes: usize,
}

impl Problem {
    fn dim(&self) -> usize {
        self.basis.len()
    }

    fn residual(&self, u: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        let (shape, lambda) = self.basis.unpack(&u[..n]);
        evaluate(&self.basis, &shape, lambda, u[n], self.n_nodes)
    }

    fn state(&self, p: &BranchPoint) -> Vec<f64> {
        let mut u = self.basis.pack(&p.shape, p.lambda);
        u.push(p.we);
        u
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

/// Solves `[J; rowᵀ] τ = e_last` and normalizes `τ`.
fn tangent(jac: &DMatrix<f64>, row: &[f64]) -> Result<Vec<f64>> {
    let (n, m) = jac.shape();
    let mut a = DMatrix::<f64>::zeros(n + 1, m);
    a.view_mut((0, 0), (n, m)).copy_from(jac);
    for (j, v) in row.iter().enumerate() {
        a[(n, j)] = *v;
    }
    let mut rhs = DVector::<f64>::zeros(n + 1);
    rhs[n] = 1.0;
    let t = a
        .lu()
        .solve(&rhs)
        .ok_or(Error::SingularJacobian { we: f64::NAN, rcond: 0.0 })?;
    let mut t: Vec<f64> = t.iter().cloned().collect();
    normalize(&mut t);
    Ok(t)
}

fn corrector(
    problem: &Problem,
    predicted: &[f64],
    direction: &[f64],
    config: &SolverConfig,
) -> Result<(Vec<f64>, usize)> {
    let out = damped_newton(
        predicted.to_vec(),
        |v| {
            let mut r = problem.residual(v)?;
            let arc: f64 = direction
                .iter()
                .zip(v.iter().zip(predicted))
                .map(|(t, (x, p))| t * (x - p))
                .sum();
            r.push(arc);
            Ok(r)
        },
        config,
        predicted[problem.dim()],
    )?;
    Ok((out.x, out.iterations))
}

fn to_point(
    problem: &Problem,
    u: &[f64],
    config: &SolverConfig,
    arclength: f64,
    iterations: usize,
) -> Result<BranchPoint> {
    let n = problem.dim();
    let (shape, lambda) = problem.basis.unpack(&u[..n]);
    make_point(shape, lambda, u[n], config, arclength, iterations)
}

/// Enters the non-circular branch bifurcating from the disk at `We = m`.
///
/// Imposes the symmetry `m − 1`, seeds `η = ε cos((m−1)θ)` at We = m and
/// corrects with the mode amplitude held at `ε`, solving for the remaining
/// coefficients, λ and We.
pub fn switch_branch(m: u32, config: &SolverConfig) -> Result<BranchPoint> {
    if m < 3 {
        return Err(Error::InvalidInput(format!(
            "bifurcation points are integers m ≥ 3, got {m}"
        )));
    }
    let s = (m - 1) as usize;
    let cfg = SolverConfig {
        symmetry: s,
        ..config.clone()
    };
    cfg.validate()?;
    if cfg.max_mode < s {
        return Err(Error::InvalidInput(format!(
            "max_mode {} cannot represent the kernel mode {s}",
            cfg.max_mode
        )));
    }
    let problem = Problem {
        basis: cfg.basis(),
        n_nodes: cfg.n_nodes,
    };
    let idx = problem.basis.cos_index(s).expect("kernel mode in basis");
    let eps = cfg.switch_amplitude;
    let mut seed = FourierShape::disk(cfg.max_mode).with_mode(s, eps, 0.0);
    seed.a0 = (1.0 - 0.5 * eps * eps).sqrt() - 1.0;
    let mut predicted = problem.basis.pack(&seed, disk_lambda(m as f64));
    predicted.push(m as f64);
    let mut direction = vec![0.0; predicted.len()];
    direction[idx] = 1.0;
    let (u, iters) = corrector(&problem, &predicted, &direction, &cfg)?;
    to_point(&problem, &u, &cfg, 0.0, iters)
}

/// Disk branch from `we_start` to `we_end` (reflection symmetry imposed when
/// `config.symmetry == 0`, so that single modes crossing zero change the sign
/// of the test function).
pub fn trivial_branch(we_start: f64, we_end: f64, config: &SolverConfig) -> Result<Branch> {
    let cfg = SolverConfig {
        symmetry: config.symmetry.max(1),
        ..config.clone()
    };
    let start = newton_solve(&FourierShape::disk(cfg.max_mode), disk_lambda(we_start), we_start, &cfg)?;
    continue_branch(&start, we_end, &cfg)
}

/// Follows the solution branch through `start` until We reaches `we_target`.
///
/// The symmetry of `start` is kept. The initial direction moves We toward
/// the target from a disk, and increases the dominant mode amplitude from a
/// non-circular point.
pub fn continue_branch(start: &BranchPoint, we_target: f64, config: &SolverConfig) -> Result<Branch> {
    let cfg = SolverConfig {
        symmetry: start.symmetry,
        ..config.clone()
    };
    cfg.validate()?;
    if !(we_target >= 0.0) {
        return Err(Error::InvalidInput(format!("target We must be ≥ 0, got {we_target}")));
    }
    let problem = Problem {
        basis: cfg.basis(),
        n_nodes: cfg.n_nodes,
    };
    let n = problem.dim();
    let shape = resize(&start.shape, cfg.max_mode);
    let first = make_point(shape, start.lambda, start.we, &cfg, start.arclength_param, start.newton_iterations)?;
    let mut u = problem.state(&first);
    let dir = if we_target >= start.we { 1.0 } else { -1.0 };

    let residual = |v: &[f64]| problem.residual(v);
    let f0 = residual(&u)?;
    let mut jac = fd_jacobian(&residual, &u, &f0, cfg.fd_jacobian_step)?;

    let (k_dom, amp) = first.shape.dominant_mode();
    let mut hint = vec![0.0; n + 1];
    match problem.basis.cos_index(k_dom) {
        Some(i) if amp > CIRCULAR_TOL => hint[i] = first.shape.cos_coeff(k_dom).signum(),
        _ => hint[n] = dir,
    }
    let mut tau = tangent(&jac, &hint)?;
    if dot(&tau, &hint) < 0.0 {
        tau.iter_mut().for_each(|x| *x = -*x);
    }

    let det_of = |j: &DMatrix<f64>| j.columns(0, n).into_owned().determinant();
    let mut det_prev = det_of(&jac);

    let mut branch = Branch {
        points: vec![first],
        detected_bifurcations: Vec::new(),
        rigidity_violations: Vec::new(),
        end: BranchEnd::MaxSteps,
    };
    if (u[n] - we_target).abs() < 1e-14 {
        branch.end = BranchEnd::ReachedTarget;
        return Ok(branch);
    }

    let mut ds = cfg.continuation_step;
    let mut arclength = start.arclength_param;
    for _ in 0..cfg.max_steps {
        let predicted: Vec<f64> = u.iter().zip(&tau).map(|(x, t)| x + ds * t).collect();
        let (u_new, iters) = match corrector(&problem, &predicted, &tau, &cfg) {
            Ok(r) => r,
            Err(Error::Divergence { .. }) | Err(Error::InvalidShape(_)) | Err(Error::SingularJacobian { .. }) => {
                ds *= 0.5;
                if ds < cfg.min_step {
                    branch.end = BranchEnd::StepUnderflow { we: u[n] };
                    return Ok(branch);
                }
                continue;
            }
            Err(e) => return Err(e),
        };

        let f_new = residual(&u_new)?;
        jac = fd_jacobian(&residual, &u_new, &f_new, cfg.fd_jacobian_step)?;
        let mut tau_new = tangent(&jac, &tau)?;
        if dot(&tau_new, &tau) < 0.0 {
            tau_new.iter_mut().for_each(|x| *x = -*x);
        }
        let det = det_of(&jac);
        if det.signum() != det_prev.signum() {
            let at = |w: f64| -> Result<f64> {
                let v: Vec<f64> = u.iter().zip(&u_new).map(|(a, b)| a + w * (b - a)).collect();
                let fv = residual(&v)?;
                Ok(det_of(&fd_jacobian(&residual, &v, &fv, cfg.fd_jacobian_step)?))
            };
            let w = locate_sign_change(at, det_prev, det)?;
            let we_bif = u[n] + w * (u_new[n] - u[n]);
            // The last step may run past the target; crossings there are not on the branch.
            if (we_bif - we_target) * dir <= 0.0 {
                branch.detected_bifurcations.push(we_bif);
            }
        }
        det_prev = det;

        let step_len = u_new
            .iter()
            .zip(&u)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();

        if (u_new[n] - we_target) * dir >= 0.0 {
            // Overshot: interpolate and solve at the target We.
            let w = (we_target - u[n]) / (u_new[n] - u[n]);
            let guess: Vec<f64> = u.iter().zip(&u_new).map(|(a, b)| a + w * (b - a)).collect();
            let (shape, lambda) = problem.basis.unpack(&guess[..n]);
            let mut last = newton_solve(&shape, lambda, we_target, &cfg)?;
            last.arclength_param = arclength + w * step_len;
            push_point(&mut branch, last);
            branch.end = BranchEnd::ReachedTarget;
            return Ok(branch);
        }

        arclength += step_len;
        let point = to_point(&problem, &u_new, &cfg, arclength, iters)?;
        push_point(&mut branch, point);
        u = u_new;
        tau = tau_new;
        if iters <= 3 {
            ds = (ds * 1.5).min(cfg.max_step);
        } else if iters >= 6 {
            ds *= 0.5;
        }
    }
    Ok(branch)
}

/// Illinois regula falsi for the sign change of `g` on `[0, 1]`.
fn locate_sign_change<G>(g: G, mut g_lo: f64, mut g_hi: f64) -> Result<f64>
where
    G: Fn(f64) -> Result<f64>,
{
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut side = 0i8;
    for _ in 0..20 {
        let w = (lo * g_hi - hi * g_lo) / (g_hi - g_lo);
        let gw = g(w)?;
        if gw.signum() == g_lo.signum() {
            lo = w;
            g_lo = gw;
            if side == -1 {
                g_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = w;
            g_hi = gw;
            if side == 1 {
                g_lo *= 0.5;
            }
            side = 1;
        }
        if hi - lo < 1e-9 {
            break;
        }
    }
    Ok((lo * g_hi - hi * g_lo) / (g_hi - g_lo))
}

fn push_point(branch: &mut Branch, point: BranchPoint) {
    if point.we <= 2.0 && !point.is_circular(1e-6) && point.is_certified() {
        branch.rigidity_violations.push(branch.points.len());
    }
    branch.points.push(point);
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cfg() -> SolverConfig {
        SolverConfig {
            max_mode: 8,
            n_nodes: 64,
            continuation_step: 0.3,
            max_step: 0.5,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn disks_along_the_trivial_branch() {
        let b = trivial_branch(2.0, 2.9, &cfg()).unwrap();
        assert_eq!(b.end, BranchEnd::ReachedTarget);
        assert!(b.points.len() >= 2);
        for p in &b.points {
            assert!(p.is_circular(1e-9));
            assert_abs_diff_eq!(p.lambda, disk_lambda(p.we), epsilon = 1e-10);
        }
        assert_abs_diff_eq!(b.points.last().unwrap().we, 2.9, epsilon = 1e-12);
        assert!(b.detected_bifurcations.is_empty());
    }

    #[test]
    fn trivial_branch_detects_integer_crossings() {
        let b = trivial_branch(2.5, 4.5, &cfg()).unwrap();
        assert_eq!(b.detected_bifurcations.len(), 2, "{:?}", b.detected_bifurcations);
        assert_abs_diff_eq!(b.detected_bifurcations[0], 3.0, epsilon = 1e-3);
        assert_abs_diff_eq!(b.detected_bifurcations[1], 4.0, epsilon = 1e-3);
    }

    #[test]
    fn switch_rejects_small_m() {
        assert!(matches!(switch_branch(2, &cfg()), Err(Error::InvalidInput(_))));
    }
}
