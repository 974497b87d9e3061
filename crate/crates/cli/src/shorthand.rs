//! Short forms for kernels and mark laws, e.g. `box:1,1`, `ball:1,2`,
//! `disc`, `degenerate:1`, `gaussian:0,1`, `lattice:1;1=0.5;2=0.5`.
//! Anything starting with `{` is read as JSON.

use scanstat::{KernelSpec, MarkSpec};

use crate::error::{CliError, Result};

fn numbers(what: &str, s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<f64>().map_err(|_| CliError::usage(format!("{what}: '{t}' is not a number"))))
        .collect()
}

fn exactly<const N: usize>(what: &str, v: Vec<f64>) -> Result<[f64; N]> {
    let n = v.len();
    v.try_into().map_err(|_| CliError::usage(format!("{what} takes {N} numbers, got {n}")))
}

fn split(s: &str) -> (String, &str) {
    match s.split_once(':') {
        Some((a, b)) => (a.trim().to_ascii_lowercase(), b),
        None => (s.trim().to_ascii_lowercase(), ""),
    }
}

pub fn parse_kernel(s: &str) -> Result<KernelSpec> {
    let s = s.trim();
    if s.starts_with('{') {
        return serde_json::from_str(s).map_err(|e| CliError::usage(format!("kernel JSON: {e}")));
    }
    let (name, args) = split(s);
    match name.as_str() {
        "disc" | "disk" if args.is_empty() => Ok(KernelSpec::Ball { r: 1.0, d: 2 }),
        "ball" => {
            let [r, d] = exactly("ball:R,D", numbers("ball", args)?)?;
            if d.fract() != 0.0 || d < 1.0 {
                return Err(CliError::usage(format!("ball dimension must be a positive integer, got {d}")));
            }
            Ok(KernelSpec::Ball { r, d: d as usize })
        }
        "box" => Ok(KernelSpec::Box { b: numbers("box", args)? }),
        "cylinder" => {
            let [r, h] = exactly("cylinder:R,H", numbers("cylinder", args)?)?;
            Ok(KernelSpec::Cylinder { r, h })
        }
        "polygon" => {
            let vertices = args
                .split(';')
                .filter(|t| !t.trim().is_empty())
                .map(|v| exactly::<2>("polygon vertex", numbers("polygon", &v.replace(' ', ","))?))
                .collect::<Result<Vec<_>>>()?;
            Ok(KernelSpec::Polygon { vertices })
        }
        _ => Err(CliError::usage(format!(
            "unknown kernel '{s}' (expected disc, ball:R,D, box:B1,...,Bd, cylinder:R,H, polygon:X Y;X Y;... or JSON)"
        ))),
    }
}

pub fn parse_law(s: &str) -> Result<MarkSpec> {
    let s = s.trim();
    if s.starts_with('{') {
        return serde_json::from_str(s).map_err(|e| CliError::usage(format!("mark law JSON: {e}")));
    }
    let (name, args) = split(s);
    match name.as_str() {
        "unit" if args.is_empty() => Ok(MarkSpec::Degenerate { eta: 1.0 }),
        "degenerate" => {
            let [eta] = exactly("degenerate:ETA", numbers("degenerate", args)?)?;
            Ok(MarkSpec::Degenerate { eta })
        }
        "gaussian" | "normal" => {
            let [mean, sd] = if args.is_empty() { [0.0, 1.0] } else { exactly("gaussian:MEAN,SD", numbers("gaussian", args)?)? };
            Ok(MarkSpec::Gaussian { mean, sd })
        }
        "lattice" => {
            let mut parts = args.split(';');
            let [eta] = exactly("lattice:ETA;V=P;...", numbers("lattice", parts.next().unwrap_or(""))?)?;
            let atoms = parts
                .filter(|t| !t.trim().is_empty())
                .map(|atom| {
                    let (v, p) = atom
                        .split_once('=')
                        .ok_or_else(|| CliError::usage(format!("lattice atom '{atom}' should read VALUE=PROB")))?;
                    let [v] = exactly("lattice value", numbers("lattice", v)?)?;
                    let [p] = exactly("lattice probability", numbers("lattice", p)?)?;
                    Ok([v, p])
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(MarkSpec::Lattice { eta, atoms })
        }
        _ => Err(CliError::usage(format!(
            "unknown mark law '{s}' (expected unit, degenerate:ETA, gaussian:MEAN,SD, lattice:ETA;V=P;... or JSON)"
        ))),
    }
}

/// Comma separated numbers, optionally in brackets; `inf` is allowed.
pub fn parse_list(what: &str, s: &str) -> Result<Vec<f64>> {
    numbers(what, s.trim().trim_start_matches('[').trim_end_matches(']'))
}

/// Counts such as `2000` or `1e5`.
pub fn parse_count(s: &str) -> Result<usize> {
    let s = s.trim();
    if let Ok(n) = s.parse::<usize>() {
        return Ok(n);
    }
    match s.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x < 1e15 => Ok(x as usize),
        _ => Err(CliError::usage(format!("'{s}' is not a whole number"))),
    }
}
