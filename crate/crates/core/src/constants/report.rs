//! CSV reports of `K` estimates, including the ball-kernel table of
//! normalised constants against `c_hat = M(theta)`.

use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScanError};
use crate::geometry::Kernel;
use crate::local_field::FieldModel;
use crate::marks::{threshold_for_mass, MarkLaw};

use super::{k_ball_lower_bound, k_occupation, omega_inverse_volume, KEstimate, OccupationOptions};

/// One `K` estimate together with the problem it belongs to.
#[derive(Clone, Debug, Serialize)]
pub struct KRecord {
    pub kernel: String,
    pub law: String,
    pub c: f64,
    pub estimate: KEstimate,
}

/// Writes records with columns `route, kernel, law, c, K, stderr, diagnostics`.
pub fn write_csv<W: Write>(out: W, records: &[KRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| ScanError::Numerical(format!("csv output failed: {e}"));
    w.write_record(["route", "kernel", "law", "c", "K", "stderr", "diagnostics"]).map_err(io)?;
    for r in records {
        w.write_record([
            r.estimate.route.as_str().to_string(),
            r.kernel.clone(),
            r.law.clone(),
            r.c.to_string(),
            r.estimate.value.to_string(),
            r.estimate.stderr.to_string(),
            r.estimate.diagnostics_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| ScanError::Numerical(format!("csv output failed: {e}")))?;
    Ok(())
}

/// Rows of the ball table (unit disc kernel in the plane).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Table1Row {
    /// Unit marks, `K / (1 + c_hat)^2` by the occupation route.
    #[serde(rename = "I")]
    Unit,
    /// The closed-form lower bound for unit marks, same normalisation.
    #[serde(rename = "lower")]
    Lower,
    /// Standard normal marks, `K theta / (1 + M(theta))^2`.
    #[serde(rename = "II")]
    Gaussian,
}

impl FromStr for Table1Row {
    type Err = ScanError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "I" | "i" | "unit" => Ok(Table1Row::Unit),
            "lower" | "bound" => Ok(Table1Row::Lower),
            "II" | "ii" | "gaussian" => Ok(Table1Row::Gaussian),
            other => Err(ScanError::InvalidArgument(format!("unknown table row '{other}' (expected I, lower or II)"))),
        }
    }
}

impl Table1Row {
    pub fn as_str(&self) -> &'static str {
        match self {
            Table1Row::Unit => "I",
            Table1Row::Lower => "lower",
            Table1Row::Gaussian => "II",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Table1Entry {
    pub row: Table1Row,
    /// `M(theta)`; infinite for the limiting column.
    pub c_hat: f64,
    pub value: f64,
    pub stderr: f64,
    pub estimate: Option<KEstimate>,
}

impl Table1Entry {
    pub fn write_csv<W: Write>(out: W, entries: &[Table1Entry]) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| ScanError::Numerical(format!("csv output failed: {e}"));
        w.write_record(["row", "c_hat", "value", "stderr", "reps", "diagnostics"]).map_err(io)?;
        for e in entries {
            let (reps, diag) =
                e.estimate.as_ref().map_or((String::new(), String::new()), |k| (k.reps.to_string(), k.diagnostics_string()));
            let c = if e.c_hat.is_infinite() { "inf".to_string() } else { e.c_hat.to_string() };
            w.write_record([e.row.as_str().to_string(), c, e.value.to_string(), e.stderr.to_string(), reps, diag])
                .map_err(io)?;
        }
        w.flush().map_err(|e| ScanError::Numerical(format!("csv output failed: {e}")))?;
        Ok(())
    }
}

/// Regenerates the normalised constants of the unit disc for the requested
/// rows and `c_hat` values. `c_hat = inf` gives the limiting column.
pub fn table1(rows: &[Table1Row], c_hats: &[f64], opts: &OccupationOptions, seed: u64) -> Result<Vec<Table1Entry>> {
    let disc = Kernel::ball(1.0, 2)?;
    let mut out = Vec::new();
    let needs_omega = c_hats.iter().any(|c| c.is_infinite()) && rows.iter().any(|r| *r != Table1Row::Lower);
    let omega = if needs_omega {
        let e = omega_inverse_volume(&disc, opts.reps, seed)?;
        (e.estimate, e.stderr)
    } else {
        (f64::NAN, f64::NAN)
    };
    for &row in rows {
        for &c_hat in c_hats {
            if !(c_hat > 1.0) {
                return Err(ScanError::InvalidArgument(format!("c_hat must exceed 1, got {c_hat}")));
            }
            if c_hat.is_infinite() {
                let (value, stderr) = match row {
                    Table1Row::Lower => (2.0 / std::f64::consts::PI, 0.0),
                    _ => omega,
                };
                out.push(Table1Entry { row, c_hat, value, stderr, estimate: None });
                continue;
            }
            let norm = (1.0 + c_hat).powi(2);
            match row {
                Table1Row::Lower => {
                    let v = k_ball_lower_bound(2, c_hat)? / norm;
                    out.push(Table1Entry { row, c_hat, value: v, stderr: 0.0, estimate: None });
                }
                Table1Row::Unit | Table1Row::Gaussian => {
                    let law = if row == Table1Row::Unit { MarkLaw::degenerate(1.0)? } else { MarkLaw::gaussian(0.0, 1.0)? };
                    let c = threshold_for_mass(&law, disc.volume(), c_hat)?;
                    let model = FieldModel::new(&disc, &law, c)?;
                    let k = k_occupation(&model, opts, seed)?;
                    let scale = if row == Table1Row::Unit { 1.0 } else { model.tilt().theta } / norm;
                    out.push(Table1Entry { row, c_hat, value: k.value * scale, stderr: k.stderr * scale, estimate: Some(k) });
                }
            }
        }
    }
    Ok(out)
}
