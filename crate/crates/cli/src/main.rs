//! `bubble`: reproducible experiments on hollow-vortex bubble shapes.
//!
//! Exit codes: 0 when the command's checks pass, 1 when they fail, 2 for
//! usage and input errors.

mod output;
mod spec;

use std::f64::consts::{PI, TAU};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use bubble_core::energy::report;
use bubble_core::geometry::{ellipse_family, Shape};
use bubble_core::io::{
    branch_table, discretization_table, energy_table, equilibrium_table, fmt_f64, history_table,
    load_shape, spectrum_table, Table,
};
use bubble_core::potential::{diagnostics, solve_equilibrium};
use bubble_core::solve::{
    continue_branch, minimize_energy, switch_branch, trivial_branch, Branch, BranchEnd, Constraint,
    MinimizeConfig, MinimizeStatus, SolverConfig,
};
use bubble_core::spectrum::{
    bifurcation_points, ellipse_functional, ellipse_quartic_check, spectrum_row, SpectrumRow,
};

use output::{Format, Output};
use spec::{build_init, parse_init, parse_interval, parse_list, parse_range, InitSpec};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "BUBBLE_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "bubble", version, about = "Energy, spectrum and branch experiments for planar bubbles")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalOpts {
    /// Boundary nodes (even); each command has its own default.
    #[arg(long, global = true)]
    nodes: Option<usize>,
    /// Highest Fourier mode of the shape description.
    #[arg(long, global = true)]
    modes: Option<usize>,
    /// Pass/fail tolerance of the command's checks.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Output directory [default: $BUBBLE_OUT_DIR, else the current directory].
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Table format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ConstraintArg {
    None,
    Convex,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Disk second variation: formula against finite differences.
    Spectrum {
        #[arg(long, default_value_t = 8)]
        kmax: u32,
        /// Comma-separated Weber numbers.
        #[arg(long, default_value = "0,1,2,3,4,5")]
        we: String,
        /// Perturbation amplitude of the finite-difference probe.
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
    },
    /// Identity report for a shape file.
    Validate {
        shape: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        we: f64,
    },
    /// Functional, multiplier and residuals of a shape over a list of Weber numbers.
    Energy {
        shape: PathBuf,
        #[arg(long, default_value = "0")]
        we: String,
    },
    /// Logarithmic energy and capacity of a shape.
    Capacity { shape: PathBuf },
    /// Area-constrained descent of the functional.
    Minimize {
        #[arg(long)]
        we: f64,
        /// disk | cos<k>:<amp>[+sin<k>:<amp>...] | random:seed=<n>[,amp=<a>,modes=<m>] | file:<path>
        #[arg(long, default_value = "cos2:0.05", value_parser = parse_init)]
        init: InitSpec,
        #[arg(long, value_enum, default_value_t = ConstraintArg::None)]
        constraint: ConstraintArg,
        #[arg(long, default_value_t = 2000)]
        max_iters: usize,
    },
    /// Solution branches: the disk family or the branch born at We = m.
    Branch {
        /// Bifurcation point (integer ≥ 3) to switch at.
        #[arg(long, conflicts_with = "trivial", required_unless_present = "trivial")]
        m: Option<u32>,
        /// Target Weber number of the non-circular branch.
        #[arg(long, requires = "m")]
        to: Option<f64>,
        /// Follow the disk family instead.
        #[arg(long, requires = "we")]
        trivial: bool,
        /// Weber interval a:b of the disk family.
        #[arg(long, value_parser = parse_interval)]
        we: Option<(f64, f64)>,
        #[arg(long, default_value_t = 0.05)]
        step: f64,
    },
    /// Ellipse family: closed forms, boundary-integral check and expansion fit.
    EllipseScan {
        #[arg(long)]
        we: f64,
        /// Values of t: a:b:step or a single value.
        #[arg(long, default_value = "0:0.25:0.01")]
        t: String,
    },
}

/// Marks errors caused by the invocation rather than the computation.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn is_usage(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        e.is::<UsageError>()
            || matches!(
                e.downcast_ref::<bubble_core::Error>(),
                Some(bubble_core::Error::InvalidInput(_) | bubble_core::Error::InvalidShape(_))
            )
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(if is_usage(&err) { 2 } else { 1 })
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let g = &cli.global;
    if let Some(tol) = g.tol {
        if !(tol > 0.0) {
            return Err(usage(format!("--tol must be positive, got {tol}")));
        }
    }
    let out_dir = g
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let output = |config: serde_json::Value| Output::new(out_dir.clone(), g.format, config);

    match &cli.command {
        Command::Spectrum { kmax, we, eps } => {
            let we = &parse_list(we).map_err(usage)?;
            let nodes = g.nodes.unwrap_or(64);
            let tol = g.tol.unwrap_or(1e-3);
            if *kmax == 0 {
                return Err(usage("--kmax must be at least 1"));
            }
            if we.iter().any(|w| !(*w >= 0.0)) {
                return Err(usage("Weber numbers must be ≥ 0"));
            }
            let out = output(json!({
                "command": "spectrum", "kmax": kmax, "we": we, "eps": eps, "nodes": nodes, "tol": tol,
            }))?;
            let jobs: Vec<(i64, f64)> = (1..=*kmax as i64)
                .flat_map(|k| we.iter().map(move |w| (k, *w)))
                .collect();
            let rows = jobs
                .par_iter()
                .map(|&(k, w)| spectrum_row(k, w, *eps, nodes))
                .collect::<Result<Vec<SpectrumRow>, _>>()?;
            out.table("spectrum", &spectrum_table(&rows))?;
            let we_max = we.iter().cloned().fold(0.0, f64::max);
            let bif = bifurcation_points(0.0, we_max)?;
            out.record("bifurcations", "bifurcation_points", &bif)?;

            print_sign_table(&rows, we);
            let failing: Vec<&SpectrumRow> = rows.iter().filter(|r| !(r.abs_err <= tol)).collect();
            for r in &failing {
                eprintln!(
                    "FAIL k = {} We = {}: formula {} fd {:?} (|err| = {:.3e})",
                    r.k, r.we, r.eigenvalue_formula, r.eigenvalue_fd, r.abs_err
                );
            }
            println!("{} rows, {} outside tolerance {tol:e}", rows.len(), failing.len());
            Ok(failing.is_empty())
        }

        Command::Validate { shape, we } => {
            let nodes = g.nodes.unwrap_or(256);
            let tol = g.tol.unwrap_or(1e-8);
            let s = load_shape(shape)?;
            let disc = s.discretize(nodes)?;
            let rep = report(&disc, *we)?;
            let out = output(json!({
                "command": "validate", "shape": shape, "we": we, "nodes": nodes, "tol": tol,
            }))?;
            out.record("validate_report", "report", &rep)?;
            let r = &rep.identity_residuals;
            let checks = [
                ("flux", r.flux.abs() < tol),
                ("pohozaev", r.pohozaev.abs() < tol),
                ("minkowski_1", r.minkowski_1.abs() < tol),
                ("minkowski_2", r.minkowski_2.abs() < tol),
                ("cauchy_schwarz_slack", r.cauchy_schwarz_slack >= -tol),
            ];
            println!("We = {we}: F = {}, P = {}, I = {}", rep.functional, rep.perimeter, rep.log_energy);
            for (name, ok) in checks {
                println!("{} {name}", if ok { "PASS" } else { "FAIL" });
            }
            println!("jump residual norm {:.3e}, flux_l2 {:?}", rep.jump_residual_norm, r.flux_l2);
            Ok(checks.iter().all(|(_, ok)| *ok))
        }

        Command::Energy { shape, we } => {
            let we = &parse_list(we).map_err(usage)?;
            let nodes = g.nodes.unwrap_or(256);
            let s = load_shape(shape)?;
            let disc = s.discretize(nodes)?;
            let sol = solve_equilibrium(&disc)?;
            let reports = we
                .par_iter()
                .map(|w| report(&disc, *w))
                .collect::<Result<Vec<_>, _>>()?;
            let out = output(json!({ "command": "energy", "shape": shape, "we": we, "nodes": nodes }))?;
            out.table("energy", &energy_table(&reports))?;
            out.table("discretization", &discretization_table(&disc))?;
            out.table("equilibrium", &equilibrium_table(&disc, &sol))?;
            for r in &reports {
                println!("We = {}: F = {}, lambda = {}", r.we, r.functional, r.lambda_best);
            }
            Ok(true)
        }

        Command::Capacity { shape } => {
            let nodes = g.nodes.unwrap_or(256);
            let s = load_shape(shape)?;
            let d = diagnostics(&s.discretize(nodes)?)?;
            let out = output(json!({ "command": "capacity", "shape": shape, "nodes": nodes }))?;
            out.record("capacity", "diagnostics", &d)?;
            println!("log_energy {}", d.robin_constant);
            println!("capacity {}", (-d.robin_constant).exp());
            println!("flux {} condition {:.3e}", d.flux, d.condition_number);
            Ok(true)
        }

        Command::Minimize { we, init, constraint, max_iters } => {
            if !(*we >= 0.0) {
                return Err(usage(format!("--we must be ≥ 0, got {we}")));
            }
            let convex = matches!(constraint, ConstraintArg::Convex);
            let defaults = MinimizeConfig::default();
            let cfg = MinimizeConfig {
                max_mode: g.modes.unwrap_or(defaults.max_mode),
                n_nodes: g.nodes.unwrap_or(defaults.n_nodes),
                grad_tol: g.tol.unwrap_or(defaults.grad_tol),
                max_iters: *max_iters,
                ..defaults
            };
            cfg.validate()?;
            let initial = build_init(init, cfg.max_mode, convex).map_err(|e| usage(format!("{e:#}")))?;
            let constraint = if convex { Constraint::Convex } else { Constraint::None };
            let result = minimize_energy(*we, &initial, constraint, &cfg)?;
            let out = output(json!({
                "command": "minimize", "we": we, "init": format!("{init:?}"),
                "constraint": constraint, "solver": cfg,
            }))?;
            out.shape("minimize_shape", &result.shape)?;
            out.record("minimize_report", "report", &result.report)?;
            out.table("minimize_history", &history_table(&result.history))?;

            let rep = &result.report;
            println!("status {:?} after {} iterations", result.status, result.iterations);
            println!("F = {} (F − 2π = {:.3e})", rep.functional, rep.functional - TAU);
            println!("P = {} (P − 2π = {:.3e})", rep.perimeter, rep.perimeter - TAU);
            let (dmax, dmin) = diameters(&result.shape, cfg.n_nodes)?;
            println!("aspect ratio {:.6} (max/min width {dmax:.6}/{dmin:.6})", dmax / dmin);
            if result.status == MinimizeStatus::Stalled {
                let g = result.history.last().map_or(f64::NAN, |h| h.gradient_norm);
                eprintln!(
                    "warning: line search stalled with gradient norm {g:.3e}; \
                     the discretization limits further descent (raise --modes/--nodes)"
                );
            }
            // A stall before any accepted step means no descent was possible.
            Ok(result.status == MinimizeStatus::Converged || result.iterations > 0)
        }

        Command::Branch { m, to, trivial, we, step } => {
            let defaults = SolverConfig::default();
            let cfg = SolverConfig {
                // Disks are resolved exactly at any K; non-circular branches
                // beyond amplitude ≈ 0.4 need K ≈ 64 for residuals below 1e-6.
                max_mode: g.modes.unwrap_or(if *trivial { 16 } else { 64 }),
                n_nodes: g.nodes.unwrap_or(if *trivial { 64 } else { 256 }),
                newton_tol: g.tol.unwrap_or(defaults.newton_tol),
                continuation_step: *step,
                ..defaults
            };
            cfg.validate()?;
            let (branch, label) = if *trivial {
                let (a, b) = we.ok_or_else(|| usage("--trivial needs --we a:b"))?;
                if !(a >= 0.0 && b >= 0.0) {
                    return Err(usage("Weber numbers must be ≥ 0"));
                }
                (trivial_branch(a, b, &cfg)?, "trivial".to_string())
            } else {
                let m = m.ok_or_else(|| usage("--m is required"))?;
                if m < 3 {
                    return Err(usage(format!("bifurcation points are integers m ≥ 3, got m = {m}")));
                }
                let target = to.ok_or_else(|| usage("--m needs --to"))?;
                let start = switch_branch(m, &cfg).context("branch switch")?;
                (continue_branch(&start, target, &cfg)?, format!("m{m}"))
            };
            let out = output(json!({
                "command": "branch", "branch": label, "m": m, "to": to, "we": we, "solver": cfg,
            }))?;
            report_branch(&out, &branch, &label)
        }

        Command::EllipseScan { we, t } => {
            let nodes = g.nodes.unwrap_or(256);
            let tol = g.tol.unwrap_or(1e-8);
            if !(*we >= 0.0) {
                return Err(usage(format!("--we must be ≥ 0, got {we}")));
            }
            let ts = parse_range(t, 0.01).map_err(usage)?;
            if ts.iter().any(|t| !(*t >= 0.0 && *t < 5.0)) {
                return Err(usage("t values must lie in [0, 5)"));
            }
            let out = output(json!({
                "command": "ellipse-scan", "we": we, "t": ts, "nodes": nodes, "tol": tol,
            }))?;
            let rows = ts
                .par_iter()
                .map(|&t| -> anyhow::Result<[f64; 4]> {
                    let closed = ellipse_functional(*we, t)?;
                    let disc = ellipse_family(t).discretize(nodes)?;
                    let numeric = report(&disc, *we)?.functional;
                    Ok([t, closed, numeric, (numeric - closed).abs()])
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            let mut table = Table::new(&["t", "functional_closed_form", "functional_numeric", "abs_diff"]);
            rows.iter().for_each(|r| table.push_f64(r));
            out.table("ellipse_scan", &table)?;

            let mut ok = true;
            for r in &rows {
                if !(r[3] < tol) {
                    eprintln!("FAIL t = {}: closed form {} vs boundary integral {}", r[0], r[1], r[2]);
                    ok = false;
                }
            }
            let fit_t: Vec<f64> = ts.iter().cloned().filter(|t| *t > 0.0 && *t <= 0.3).collect();
            if fit_t.len() >= 4 {
                let fit = ellipse_quartic_check(*we, &fit_t)?;
                out.record("ellipse_fit", "fit", &fit)?;
                let c2_ok = if fit.c2_expected == 0.0 {
                    fit.c2_fit.abs() < 1e-4
                } else {
                    ((fit.c2_fit - fit.c2_expected) / fit.c2_expected).abs() < 0.01
                };
                let c4_ok = ((fit.c4_fit - fit.c4_expected) / fit.c4_expected).abs() < 0.02;
                println!("c2 fit {} expected {} {}", fit.c2_fit, fit.c2_expected, pass(c2_ok));
                println!("c4 fit {} expected {} {}", fit.c4_fit, fit.c4_expected, pass(c4_ok));
                ok &= c2_ok && c4_ok;
            } else {
                for r in &rows {
                    println!("t = {}: F = {} (closed form {})", r[0], r[2], r[1]);
                }
            }
            Ok(ok)
        }
    }
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Largest and smallest width of the discretized shape over 180 directions.
fn diameters(shape: &Shape, nodes: usize) -> anyhow::Result<(f64, f64)> {
    let disc = shape.discretize(nodes)?;
    let widths: Vec<f64> = (0..180)
        .map(|i| {
            let a = PI * i as f64 / 180.0;
            let (s, c) = a.sin_cos();
            let proj = disc.x.iter().zip(&disc.y).map(|(x, y)| x * c + y * s);
            let (lo, hi) = proj.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p), hi.max(p)));
            hi - lo
        })
        .collect();
    let max = widths.iter().cloned().fold(0.0, f64::max);
    let min = widths.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((max, min))
}

fn print_sign_table(rows: &[SpectrumRow], we: &[f64]) {
    print!("{:>6}", "k\\We");
    for w in we {
        print!(" {w:>6}");
    }
    println!();
    let mut k_prev = None;
    for r in rows {
        if k_prev != Some(r.k) {
            if k_prev.is_some() {
                println!();
            }
            print!("{:>6}", r.k);
            k_prev = Some(r.k);
        }
        let sym = match r.tag {
            "translation" => "T",
            "bifurcation" => "0",
            "stable" => "+",
            "unstable" => "-",
            _ => "?",
        };
        print!(" {sym:>6}");
    }
    println!();
}

fn report_branch(out: &Output, branch: &Branch, label: &str) -> anyhow::Result<bool> {
    out.table(&format!("branch_{label}"), &branch_table(&branch.points))?;
    for (i, p) in branch.points.iter().enumerate() {
        out.shape(&format!("branch_{label}_point_{i:04}"), &Shape::Fourier(p.shape.clone()))?;
    }
    out.record(
        &format!("branch_{label}_bifurcations"),
        "detected_bifurcations",
        &branch.detected_bifurcations,
    )?;
    let uncertified = branch.points.iter().filter(|p| !p.is_certified()).count();
    for p in &branch.points {
        println!(
            "We = {:.6} lambda = {:.9} amplitude = {:.3e} residual = {:.3e}",
            p.we,
            p.lambda,
            p.max_mode_amplitude(),
            p.jump_residual_norm
        );
    }
    println!("end: {:?}", branch.end);
    if !branch.detected_bifurcations.is_empty() {
        let list: Vec<String> = branch.detected_bifurcations.iter().map(|w| fmt_f64(*w)).collect();
        println!("bifurcations detected at We = {}", list.join(", "));
    }
    if !branch.rigidity_violations.is_empty() {
        eprintln!(
            "FAIL non-circular certified points at We ≤ 2 (indices {:?})",
            branch.rigidity_violations
        );
    }
    if uncertified > 0 {
        eprintln!("FAIL {uncertified} points fail identity certification");
    }
    if branch.end != BranchEnd::ReachedTarget {
        eprintln!("FAIL branch did not reach the target");
    }
    Ok(uncertified == 0 && branch.rigidity_violations.is_empty() && branch.end == BranchEnd::ReachedTarget)
}
