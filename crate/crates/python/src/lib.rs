//! Python bindings. Kernels and mark laws are passed as dicts in the same
//! form as the JSON specs (`{"shape": "box", "b": [1, 1]}`,
//! `{"law": "gaussian", "mean": 0, "sd": 1}`); results come back as dicts.
//! Heavy calls release the GIL.

// keyword arguments map one to one onto Python signatures
#![allow(clippy::too_many_arguments)]

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

use scanstat::constants::{self, KRoute, OccupationOptions, Table1Row};
use scanstat::gauss::{self, GaussSettings};
use scanstat::local_field::FieldModel;
use scanstat::marks::threshold_for_mass;
use scanstat::mc_oracle::{self, BoxDomain, ScanMethod};
use scanstat::overshoot::{self, WalkSpec};
use scanstat::tail_approx::{self, Variant};
use scanstat::{Kernel, KernelSpec, MarkLaw, MarkSpec, ScanError};

fn err(e: ScanError) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

/// A dict (or JSON string) to a spec.
fn from_py<T: DeserializeOwned>(what: &str, obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = match obj.extract::<String>() {
        Ok(s) => s,
        Err(_) => obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?,
    };
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(format!("{what}: {e}")))
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn kernel(obj: &Bound<'_, PyAny>) -> PyResult<Kernel> {
    Kernel::from_spec(&from_py::<KernelSpec>("kernel", obj)?).map_err(err)
}

fn law(obj: &Bound<'_, PyAny>) -> PyResult<MarkLaw> {
    MarkLaw::from_spec(&from_py::<MarkSpec>("law", obj)?).map_err(err)
}

fn threshold(law: &MarkLaw, volume: f64, c: Option<f64>, c_hat: Option<f64>) -> PyResult<f64> {
    match (c, c_hat) {
        (Some(c), None) => Ok(c),
        (None, Some(m)) => threshold_for_mass(law, volume, m).map_err(err),
        _ => Err(PyValueError::new_err("give exactly one of c and c_hat")),
    }
}

fn model(k: &Bound<'_, PyAny>, l: &Bound<'_, PyAny>, c: Option<f64>, c_hat: Option<f64>) -> PyResult<FieldModel> {
    let (k, l) = (kernel(k)?, law(l)?);
    let c = threshold(&l, k.volume(), c, c_hat)?;
    FieldModel::new(&k, &l, c).map_err(err)
}

fn route(s: &str) -> PyResult<KRoute> {
    s.parse().map_err(err)
}

/// Tilt parameters: theta, rate, chi, M(theta) and derivatives.
#[pyfunction]
#[pyo3(signature = (kernel_spec, law_spec, c=None, c_hat=None))]
fn solve_tilt<'py>(
    py: Python<'py>,
    kernel_spec: &Bound<'py, PyAny>,
    law_spec: &Bound<'py, PyAny>,
    c: Option<f64>,
    c_hat: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let m = model(kernel_spec, law_spec, c, c_hat)?;
    to_py(py, m.tilt())
}

/// `K` by one route: local, occupation, rectangle, ball or omega.
#[pyfunction]
#[pyo3(signature = (kernel_spec, law_spec, c=None, c_hat=None, route="occupation", reps=20_000, seed=1))]
fn estimate_k<'py>(
    py: Python<'py>,
    kernel_spec: &Bound<'py, PyAny>,
    law_spec: &Bound<'py, PyAny>,
    c: Option<f64>,
    c_hat: Option<f64>,
    route: &str,
    reps: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let m = model(kernel_spec, law_spec, c, c_hat)?;
    let r = self::route(route)?;
    let k = py.detach(|| constants::estimate_k(&m, r, reps, seed)).map_err(err)?;
    to_py(py, &k)
}

/// The tail approximation with a given `k`, or `k` estimated by `route`.
#[pyfunction]
#[pyo3(signature = (kernel_spec, law_spec, lam, domain_volume, c=None, c_hat=None, k=None, route=None,
                    linear=false, reps=20_000, seed=1))]
fn approx_p<'py>(
    py: Python<'py>,
    kernel_spec: &Bound<'py, PyAny>,
    law_spec: &Bound<'py, PyAny>,
    lam: f64,
    domain_volume: f64,
    c: Option<f64>,
    c_hat: Option<f64>,
    k: Option<f64>,
    route: Option<&str>,
    linear: bool,
    reps: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let m = model(kernel_spec, law_spec, c, c_hat)?;
    let k = match (k, route) {
        (Some(k), None) => k,
        (None, r) => {
            let r = match r {
                Some(r) => self::route(r)?,
                None if m.kernel().is_box() => KRoute::Rectangle,
                None => KRoute::Occupation,
            };
            let est = py.detach(|| constants::estimate_k(&m, r, reps, seed)).map_err(err)?;
            if let Some(f) = est.failure {
                return Err(PyRuntimeError::new_err(format!("K estimate failed a diagnostic: {f}")));
            }
            est.value
        }
        (Some(_), Some(_)) => return Err(PyValueError::new_err("give k or route, not both")),
    };
    let variant = if linear { Variant::Linear } else { Variant::Saturating };
    let r = tail_approx::approx_p(m.tilt(), m.kernel().dim(), lam, domain_volume, k, variant).map_err(err)?;
    to_py(py, &r)
}

/// Direct Monte Carlo estimate of `P{max scan >= lam c}` on `[0, side]^d`.
#[pyfunction]
#[pyo3(signature = (kernel_spec, law_spec, lam, domain_side, c=None, c_hat=None, reps=10_000, seed=1, grid_step=None))]
fn oracle_p<'py>(
    py: Python<'py>,
    kernel_spec: &Bound<'py, PyAny>,
    law_spec: &Bound<'py, PyAny>,
    lam: f64,
    domain_side: f64,
    c: Option<f64>,
    c_hat: Option<f64>,
    reps: usize,
    seed: u64,
    grid_step: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let (k, l) = (kernel(kernel_spec)?, law(law_spec)?);
    let c = threshold(&l, k.volume(), c, c_hat)?;
    let domain = BoxDomain::cube(domain_side, k.dim()).map_err(err)?;
    let method = match grid_step {
        Some(step) => ScanMethod::Grid { step },
        None => ScanMethod::ExactBoxSweep,
    };
    let est = py.detach(|| mc_oracle::estimate_p(lam, &domain, &k, &l, c, method, reps, seed)).map_err(err)?;
    to_py(py, &est)
}

/// `nu_c` for a law and threshold density `c / volume`.
#[pyfunction]
#[pyo3(signature = (law_spec, c=None, c_hat=None, volume=1.0, reps=20_000, seed=1))]
fn nu_c<'py>(
    py: Python<'py>,
    law_spec: &Bound<'py, PyAny>,
    c: Option<f64>,
    c_hat: Option<f64>,
    volume: f64,
    reps: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let l = law(law_spec)?;
    let c = threshold(&l, volume, c, c_hat)?;
    let spec = WalkSpec::for_threshold(&l, volume, c).map_err(err)?;
    let levels = overshoot::default_levels(&spec);
    let est = py.detach(|| overshoot::nu_c(&spec, &levels, reps, seed)).map_err(err)?;
    to_py(py, &est)
}

/// `E[1 / vol(Omega)]` for a kernel.
#[pyfunction]
#[pyo3(signature = (kernel_spec, reps=100_000, seed=1))]
fn omega_inverse_volume<'py>(
    py: Python<'py>,
    kernel_spec: &Bound<'py, PyAny>,
    reps: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let k = kernel(kernel_spec)?;
    let est = py.detach(|| constants::omega_inverse_volume(&k, reps, seed)).map_err(err)?;
    to_py(py, &est)
}

/// Closed-form lower bound on `K` for the unit ball with unit marks.
#[pyfunction]
fn k_ball_lower_bound(d: usize, c_hat: f64) -> PyResult<f64> {
    constants::k_ball_lower_bound(d, c_hat).map_err(err)
}

/// Rows of the unit-disc table as a list of dicts; `inf` gives the limit column.
#[pyfunction]
#[pyo3(signature = (rows, c_hats, reps=100_000, seed=1))]
fn table1<'py>(
    py: Python<'py>,
    rows: Vec<String>,
    c_hats: Vec<f64>,
    reps: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let rows = rows.iter().map(|r| r.parse::<Table1Row>().map_err(err)).collect::<PyResult<Vec<_>>>()?;
    let opts = OccupationOptions { reps, ..Default::default() };
    let entries = py.detach(|| constants::table1(&rows, &c_hats, &opts, seed)).map_err(err)?;
    to_py(py, &entries)
}

/// Gaussian-field constant by route pickands, clump or thm3, with default grids.
#[pyfunction]
#[pyo3(signature = (alpha, d, route="pickands", reps=4000, seed=1, xi=0.1))]
fn ktilde<'py>(
    py: Python<'py>,
    alpha: f64,
    d: usize,
    route: &str,
    reps: usize,
    seed: u64,
    xi: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let s = GaussSettings::default_for(alpha, d);
    let est = py
        .detach(|| match route {
            "pickands" => gauss::ktilde_pickands(alpha, d, &s.m_list, s.sup_step, reps, seed),
            "clump" => gauss::ktilde_clump(alpha, d, s.region, s.region_step, reps, seed),
            "thm3" => gauss::ktilde_thm3(alpha, d, xi, 8, s.region, s.region_step, reps, seed),
            other => Err(ScanError::InvalidArgument(format!("unknown route '{other}'"))),
        })
        .map_err(err)?;
    to_py(py, &est)
}

#[pyfunction]
fn ktilde_lower_bound(alpha: f64, d: usize) -> PyResult<f64> {
    gauss::ktilde_lower_bound(alpha, d).map_err(err)
}

/// Tail probability for a Gaussian field with constant `ktilde`.
#[pyfunction]
fn tail_p_gauss(alpha: f64, d: usize, a: f64, c: f64, domain_volume: f64, ktilde: f64) -> PyResult<f64> {
    gauss::tail_p_gauss(alpha, d, a, c, domain_volume, ktilde).map_err(err)
}

#[pymodule]
fn pyscanstat(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(solve_tilt, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_k, m)?)?;
    m.add_function(wrap_pyfunction!(approx_p, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_p, m)?)?;
    m.add_function(wrap_pyfunction!(nu_c, m)?)?;
    m.add_function(wrap_pyfunction!(omega_inverse_volume, m)?)?;
    m.add_function(wrap_pyfunction!(k_ball_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(table1, m)?)?;
    m.add_function(wrap_pyfunction!(ktilde, m)?)?;
    m.add_function(wrap_pyfunction!(ktilde_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(tail_p_gauss, m)?)?;
    Ok(())
}
