//! Parsers for the `name:value` flag grammar.

use std::path::PathBuf;

use anyhow::{bail, Context};
use bubble_core::geometry::{FourierShape, Shape, SupportShape};
use bubble_core::io::load_shape;

/// How the minimizer's initial shape is built.
#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    Disk,
    /// Sum of single-mode perturbations, e.g. `cos3:0.2+sin2:0.05`.
    Modes(Vec<ModeTerm>),
    Random { seed: u64, amplitude: f64, modes: usize },
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeTerm {
    pub sine: bool,
    pub k: usize,
    pub amplitude: f64,
}

fn number<T: std::str::FromStr>(s: &str, what: &str) -> Result<T, String> {
    s.trim()
        .parse()
        .map_err(|_| format!("cannot parse {what} from `{s}`"))
}

pub fn parse_init(s: &str) -> Result<InitSpec, String> {
    let s = s.trim();
    if s == "disk" {
        return Ok(InitSpec::Disk);
    }
    if let Some(path) = s.strip_prefix("file:") {
        return Ok(InitSpec::File(PathBuf::from(path)));
    }
    if let Some(rest) = s.strip_prefix("random") {
        let mut seed = None;
        let mut amplitude = 0.15;
        let mut modes = 8;
        let rest = rest.strip_prefix(':').unwrap_or(rest);
        for part in rest.split(',').filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| format!("expected key=value in `{part}`"))?;
            match key.trim() {
                "seed" => seed = Some(number(value, "seed")?),
                "amp" => amplitude = number(value, "amplitude")?,
                "modes" => modes = number(value, "mode count")?,
                other => return Err(format!("unknown random option `{other}`")),
            }
        }
        let seed = seed.ok_or("random init needs an explicit seed, e.g. random:seed=7")?;
        return Ok(InitSpec::Random { seed, amplitude, modes });
    }
    let terms = s
        .split('+')
        .map(|term| {
            let (head, amp) = term
                .split_once(':')
                .ok_or_else(|| format!("expected cos<k>:<amp> or sin<k>:<amp>, got `{term}`"))?;
            let (sine, k) = if let Some(k) = head.strip_prefix("cos") {
                (false, k)
            } else if let Some(k) = head.strip_prefix("sin") {
                (true, k)
            } else {
                return Err(format!("unknown init term `{head}`"));
            };
            let k: usize = number(k, "mode number")?;
            if k == 0 {
                return Err("mode number must be at least 1".into());
            }
            Ok(ModeTerm {
                sine,
                k,
                amplitude: number(amp, "amplitude")?,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(InitSpec::Modes(terms))
}

/// Builds the initial shape: radial for the unconstrained problem, a
/// support function for the convex one.
pub fn build_init(spec: &InitSpec, max_mode: usize, convex: bool) -> anyhow::Result<Shape> {
    let shape = match spec {
        InitSpec::Disk if convex => Shape::Support(SupportShape::disk(max_mode)),
        InitSpec::Disk => Shape::Fourier(FourierShape::disk(max_mode)),
        InitSpec::Modes(terms) => {
            if let Some(t) = terms.iter().find(|t| t.k > max_mode) {
                bail!("init mode {} exceeds --modes {max_mode}", t.k);
            }
            let set = |cos: &mut [f64], sin: &mut [f64]| {
                for t in terms {
                    let slot = if t.sine { &mut sin[t.k - 1] } else { &mut cos[t.k - 1] };
                    *slot += t.amplitude;
                }
            };
            if convex {
                let mut h = SupportShape::disk(max_mode);
                set(&mut h.c, &mut h.d);
                Shape::Support(h)
            } else {
                let mut r = FourierShape::disk(max_mode);
                set(&mut r.a, &mut r.b);
                Shape::Fourier(r)
            }
        }
        InitSpec::Random { seed, amplitude, modes } => {
            if convex {
                Shape::Support(SupportShape::random(max_mode, *modes, *amplitude, *seed))
            } else {
                Shape::Fourier(FourierShape::random(max_mode, *modes, *amplitude, *seed))
            }
        }
        InitSpec::File(path) => {
            let shape = load_shape(path).with_context(|| format!("loading {}", path.display()))?;
            if convex && !matches!(shape, Shape::Support(_)) {
                bail!("--constraint convex needs a support-function shape file");
            }
            shape
        }
    };
    Ok(shape)
}

/// `a:b:step` (inclusive), `a:b` with a default step, or a single value.
pub fn parse_range(s: &str, default_step: f64) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let (a, b, step) = match parts.as_slice() {
        [v] => {
            let v: f64 = number(v, "value")?;
            return Ok(vec![v]);
        }
        [a, b] => (number(a, "start")?, number(b, "end")?, default_step),
        [a, b, h] => (number(a, "start")?, number(b, "end")?, number(h, "step")?),
        _ => return Err(format!("expected a:b:step, got `{s}`")),
    };
    let a: f64 = a;
    let b: f64 = b;
    if !(step > 0.0) || !(b >= a) {
        return Err(format!("range `{s}` needs start ≤ end and a positive step"));
    }
    let count = ((b - a) / step + 1e-9).floor() as usize;
    let mut out: Vec<f64> = (0..=count).map(|i| a + step * i as f64).collect();
    if (b - out[count]).abs() > 1e-9 * step.max(1.0) {
        out.push(b);
    }
    Ok(out)
}

/// `a:b` interval.
pub fn parse_interval(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected a:b, got `{s}`"))?;
    let (a, b): (f64, f64) = (number(a, "start")?, number(b, "end")?);
    Ok((a, b))
}

/// Comma-separated list of numbers.
pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|v| number(v, "number")).collect()
}
