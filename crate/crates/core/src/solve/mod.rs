//! Critical points of `F_We` under the area constraint.
//!
//! The unknowns are the Fourier coefficients of `η` (without the translation
//! modes k = ±1) together with the multiplier `λ`; the equations are the
//! Fourier projections of the jump residual onto the same modes plus the
//! area constraint, so the system is square. Newton uses forward-difference
//! Jacobians. [`continuation`] follows branches in We and [`minimize`] runs
//! the constrained gradient flow.

pub mod continuation;
pub mod minimize;

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::energy::{identity_report, jump_residual, EnergyReport};
use crate::error::{Error, Result};
use crate::geometry::FourierShape;
use crate::potential::solve_equilibrium;

pub use continuation::{continue_branch, switch_branch, trivial_branch, Branch, BranchEnd};
pub use minimize::{
    minimize_energy, project_convex, Constraint, IterationRecord, MinimizeConfig, MinimizeResult,
    MinimizeStatus,
};

/// Steps that would push the radius below this are rejected.
pub const MIN_RADIUS: f64 = 0.05;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_mode: usize,
    pub n_nodes: usize,
    /// Convergence threshold on the ∞-norm of the residual vector.
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    pub fd_jacobian_step: f64,
    /// Initial pseudo-arclength step.
    pub continuation_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub max_steps: usize,
    /// Imposed dihedral symmetry: 0 keeps every mode, `m ≥ 1` keeps the
    /// cosine modes that are multiples of `m`.
    pub symmetry: usize,
    /// Newton reports a singular Jacobian below this reciprocal condition.
    pub singular_tol: f64,
    /// Amplitude of the kernel mode used to seed a branch switch.
    pub switch_amplitude: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_mode: 16,
            n_nodes: 128,
            newton_tol: 1e-10,
            max_newton_iters: 25,
            fd_jacobian_step: 1e-6,
            continuation_step: 0.05,
            min_step: 1e-4,
            max_step: 0.1,
            max_steps: 200,
            symmetry: 0,
            singular_tol: 1e-7,
            switch_amplitude: 0.02,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_mode < 2 {
            return Err(Error::InvalidInput("max_mode must be at least 2".into()));
        }
        if self.n_nodes < 4 * self.max_mode || self.n_nodes % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "n_nodes = {} must be even and at least 4·max_mode = {}",
                self.n_nodes,
                4 * self.max_mode
            )));
        }
        let positive = [
            self.newton_tol,
            self.fd_jacobian_step,
            self.continuation_step,
            self.min_step,
            self.max_step,
            self.singular_tol,
            self.switch_amplitude,
        ];
        if positive.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidInput("tolerances and steps must be positive".into()));
        }
        Ok(())
    }

    pub(crate) fn basis(&self) -> ModeBasis {
        ModeBasis::new(self.max_mode, self.symmetry)
    }
}

/// Which Fourier modes of `η` are unknowns.
#[derive(Debug, Clone)]
pub(crate) struct ModeBasis {
    max_mode: usize,
    cos_modes: Vec<usize>,
    sin_modes: Vec<usize>,
}

impl ModeBasis {
    pub(crate) fn new(max_mode: usize, symmetry: usize) -> Self {
        let (cos_modes, sin_modes) = if symmetry == 0 {
            ((2..=max_mode).collect(), (2..=max_mode).collect())
        } else {
            (
                (2..=max_mode).filter(|k| k % symmetry == 0).collect(),
                Vec::new(),
            )
        };
        Self {
            max_mode,
            cos_modes,
            sin_modes,
        }
    }

    /// Shape coefficients plus λ.
    pub(crate) fn len(&self) -> usize {
        2 + self.cos_modes.len() + self.sin_modes.len()
    }

    pub(crate) fn pack(&self, shape: &FourierShape, lambda: f64) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.len());
        x.push(shape.a0);
        x.extend(self.cos_modes.iter().map(|&k| shape.cos_coeff(k)));
        x.extend(self.sin_modes.iter().map(|&k| shape.sin_coeff(k)));
        x.push(lambda);
        x
    }

    pub(crate) fn unpack(&self, x: &[f64]) -> (FourierShape, f64) {
        let mut shape = FourierShape::disk(self.max_mode);
        shape.a0 = x[0];
        let mut i = 1;
        for &k in &self.cos_modes {
            shape.a[k - 1] = x[i];
            i += 1;
        }
        for &k in &self.sin_modes {
            shape.b[k - 1] = x[i];
            i += 1;
        }
        (shape, x[i])
    }

    /// Index of the cosine coefficient of mode `k` in the packed vector.
    pub(crate) fn cos_index(&self, k: usize) -> Option<usize> {
        self.cos_modes.iter().position(|&m| m == k).map(|p| p + 1)
    }

    /// Projections of nodal values onto `{1} ∪ cos_modes ∪ sin_modes`.
    fn project(&self, theta: &[f64], values: &[f64]) -> Vec<f64> {
        let n = theta.len() as f64;
        let mut out = Vec::with_capacity(self.len() - 1);
        out.push(values.iter().sum::<f64>() / n);
        for &k in &self.cos_modes {
            let kf = k as f64;
            out.push(2.0 / n * theta.iter().zip(values).map(|(t, v)| v * (kf * t).cos()).sum::<f64>());
        }
        for &k in &self.sin_modes {
            let kf = k as f64;
            out.push(2.0 / n * theta.iter().zip(values).map(|(t, v)| v * (kf * t).sin()).sum::<f64>());
        }
        out
    }
}

/// A converged solution of the free-boundary problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchPoint {
    pub we: f64,
    pub lambda: f64,
    pub shape: FourierShape,
    /// Arclength-L² norm of `−(We/2)(∂_nψ)² + H − λ`.
    pub jump_residual_norm: f64,
    pub report: EnergyReport,
    pub arclength_param: f64,
    pub symmetry: usize,
    pub newton_iterations: usize,
}

impl BranchPoint {
    /// Largest |coefficient| over modes k ≥ 1.
    pub fn max_mode_amplitude(&self) -> f64 {
        self.shape.dominant_mode().1
    }

    pub fn is_circular(&self, tol: f64) -> bool {
        self.max_mode_amplitude() <= tol
    }

    /// Universal identities below 1e-7 and the solution-only flux identity
    /// below 1e-6.
    pub fn is_certified(&self) -> bool {
        let r = &self.report.identity_residuals;
        r.max_universal() < 1e-7 && r.flux_l2.map_or(true, |v| v.abs() < 1e-6)
    }
}

fn check_gauge(shape: &FourierShape) -> Result<()> {
    shape.validate()?;
    if shape.a[0] != 0.0 || shape.b[0] != 0.0 {
        return Err(Error::InvalidInput(format!(
            "translation modes must vanish (a1 = {}, b1 = {})",
            shape.a[0], shape.b[0]
        )));
    }
    Ok(())
}

fn evaluate(
    basis: &ModeBasis,
    shape: &FourierShape,
    lambda: f64,
    we: f64,
    n_nodes: usize,
) -> Result<Vec<f64>> {
    let r_min = shape.min_radius(n_nodes);
    if r_min < MIN_RADIUS {
        return Err(Error::InvalidShape(format!("radius dropped to {r_min:.3e}")));
    }
    let disc = shape.discretize(n_nodes)?;
    let sol = solve_equilibrium(&disc)?;
    let residual = jump_residual(&disc, &sol, we, lambda);
    let mut out = basis.project(&disc.theta, &residual);
    out.push(shape.area() - PI);
    Ok(out)
}

/// Jump-residual projections onto the solver modes followed by `|E| − π`.
pub fn residual_system(
    shape: &FourierShape,
    lambda: f64,
    we: f64,
    config: &SolverConfig,
) -> Result<Vec<f64>> {
    check_gauge(shape)?;
    if shape.max_mode != config.max_mode {
        return Err(Error::InvalidInput(format!(
            "shape has max_mode {} but the solver uses {}",
            shape.max_mode, config.max_mode
        )));
    }
    evaluate(&config.basis(), shape, lambda, we, config.n_nodes)
}

pub(crate) fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn two_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Forward-difference Jacobian of `f` at `x`, given `f(x)`.
pub(crate) fn fd_jacobian<F>(f: &F, x: &[f64], fx: &[f64], step: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut jac = DMatrix::<f64>::zeros(fx.len(), x.len());
    let mut xp = x.to_vec();
    for j in 0..x.len() {
        let h = step * x[j].abs().max(1.0);
        xp[j] = x[j] + h;
        let fp = f(&xp)?;
        xp[j] = x[j];
        for i in 0..fx.len() {
            jac[(i, j)] = (fp[i] - fx[i]) / h;
        }
    }
    Ok(jac)
}

pub(crate) fn reciprocal_condition(jac: &DMatrix<f64>) -> f64 {
    let sv = jac.clone().singular_values();
    let max = sv.max();
    if max > 0.0 {
        sv.min() / max
    } else {
        0.0
    }
}

pub(crate) struct NewtonOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
}

/// Damped Newton iteration on a square system.
///
/// A step is halved while it leaves the admissible set or fails to reduce
/// the residual 2-norm.
pub(crate) fn damped_newton<F>(
    x0: Vec<f64>,
    f: F,
    config: &SolverConfig,
    we_hint: f64,
) -> Result<NewtonOutcome>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut x = x0;
    let mut fx = f(&x)?;
    for iter in 0..=config.max_newton_iters {
        if inf_norm(&fx) < config.newton_tol {
            return Ok(NewtonOutcome { x, iterations: iter });
        }
        if iter == config.max_newton_iters {
            break;
        }
        let jac = fd_jacobian(&f, &x, &fx, config.fd_jacobian_step)?;
        let rcond = reciprocal_condition(&jac);
        if rcond < config.singular_tol {
            return Err(Error::SingularJacobian { we: we_hint, rcond });
        }
        let delta = jac
            .lu()
            .solve(&DVector::from_column_slice(&fx))
            .ok_or(Error::SingularJacobian { we: we_hint, rcond })?;
        let norm0 = two_norm(&fx);
        let mut alpha = 1.0;
        let mut accepted = None;
        while alpha >= 1.0 / 1024.0 {
            let trial: Vec<f64> = x.iter().zip(delta.iter()).map(|(xi, di)| xi - alpha * di).collect();
            if let Ok(ft) = f(&trial) {
                let norm = two_norm(&ft);
                if norm < (1.0 - 1e-4 * alpha) * norm0 || norm0 < 100.0 * config.newton_tol {
                    accepted = Some((trial, ft));
                    break;
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((xn, fxn)) => {
                x = xn;
                fx = fxn;
            }
            None => {
                return Err(Error::Divergence {
                    iterations: iter + 1,
                    residual: inf_norm(&fx),
                })
            }
        }
    }
    Err(Error::Divergence {
        iterations: config.max_newton_iters,
        residual: inf_norm(&fx),
    })
}

/// Assembles the certified record for a converged shape.
pub(crate) fn make_point(
    shape: FourierShape,
    lambda: f64,
    we: f64,
    config: &SolverConfig,
    arclength_param: f64,
    newton_iterations: usize,
) -> Result<BranchPoint> {
    let disc = shape.discretize(config.n_nodes)?;
    let sol = solve_equilibrium(&disc)?;
    let report = identity_report(&disc, &sol, we);
    let sq: Vec<f64> = jump_residual(&disc, &sol, we, lambda).iter().map(|r| r * r).collect();
    Ok(BranchPoint {
        we,
        lambda,
        shape,
        jump_residual_norm: disc.integrate(&sq).sqrt(),
        report,
        arclength_param,
        symmetry: config.symmetry,
        newton_iterations,
    })
}

/// Solves the free-boundary problem at fixed We by damped Newton from
/// `initial`.
pub fn newton_solve(
    initial: &FourierShape,
    lambda0: f64,
    we: f64,
    config: &SolverConfig,
) -> Result<BranchPoint> {
    config.validate()?;
    check_gauge(initial)?;
    if !(we >= 0.0) {
        return Err(Error::InvalidInput(format!("Weber number must be ≥ 0, got {we}")));
    }
    let basis = config.basis();
    let shape = if initial.max_mode == config.max_mode {
        initial.clone()
    } else {
        resize(initial, config.max_mode)
    };
    let x0 = basis.pack(&shape, lambda0);
    let n = config.n_nodes;
    let outcome = damped_newton(
        x0,
        |x| {
            let (s, l) = basis.unpack(x);
            evaluate(&basis, &s, l, we, n)
        },
        config,
        we,
    )?;
    let (shape, lambda) = basis.unpack(&outcome.x);
    make_point(shape, lambda, we, config, 0.0, outcome.iterations)
}

/// Truncates or zero-pads the coefficient arrays.
pub fn resize(shape: &FourierShape, max_mode: usize) -> FourierShape {
    let mut out = FourierShape::disk(max_mode);
    out.a0 = shape.a0;
    for k in 1..=max_mode.min(shape.max_mode) {
        out.a[k - 1] = shape.a[k - 1];
        out.b[k - 1] = shape.b[k - 1];
    }
    out
}

/// Expected multiplier on the disk branch.
pub fn disk_lambda(we: f64) -> f64 {
    1.0 - 0.5 * we
}
