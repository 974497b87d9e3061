//! One function per subcommand. Each resolves its flags, runs the
//! computation and returns the resolved settings, the JSON result, a CSV
//! rendering and any diagnostic failure.

use std::str::FromStr;

use serde_json::{json, Map, Value};

use scanstat::constants::{
    estimate_k, k_omega_bound, omega_inverse_volume, table1 as table1_entries, write_csv, KEstimate, KRecord, KRoute,
    OccupationOptions, Table1Entry, Table1Row,
};
use scanstat::gauss::{
    ktilde_clump, ktilde_lower_bound, ktilde_pickands, ktilde_thm3, tail_p_gauss, GaussRoute, GaussSettings,
};
use scanstat::geometry::Kernel;
use scanstat::local_field::FieldModel;
use scanstat::marks::{solve_tilt, threshold_for_mass, MarkLaw, TiltSolution};
use scanstat::mc_oracle::{default_grid_step, estimate_p, scan_replicates, BoxDomain, ScanMethod};
use scanstat::overshoot::{default_levels, nu_c, WalkSpec};
use scanstat::tail_approx::{approx_p, ApproxResult, Variant};

use crate::error::{CliError, Result};
use crate::shorthand::{parse_count, parse_kernel, parse_law, parse_list};
use crate::{ApproxArgs, GaussArgs, KConstArgs, NuArgs, OmegaArgs, OracleArgs, Table1Args};

pub struct Outcome {
    /// Resolved settings; feeding them back as a config reproduces the run.
    pub config: Map<String, Value>,
    pub result: Value,
    pub csv: String,
    pub failure: Option<String>,
}

fn required<'a>(flag: &str, v: &'a Option<String>) -> Result<&'a str> {
    v.as_deref().ok_or_else(|| CliError::usage(format!("missing --{flag}")))
}

fn number(flag: &str, v: &Option<String>) -> Result<Option<f64>> {
    v.as_deref()
        .map(|s| s.trim().parse::<f64>().map_err(|_| CliError::usage(format!("--{flag}: '{s}' is not a number"))))
        .transpose()
}

fn required_number(flag: &str, v: &Option<String>) -> Result<f64> {
    number(flag, v)?.ok_or_else(|| CliError::usage(format!("missing --{flag}")))
}

fn count(flag: &str, v: &Option<String>, default: usize) -> Result<usize> {
    match v {
        None => Ok(default),
        Some(s) => parse_count(s).map_err(|e| CliError::usage(format!("--{flag}: {e}"))),
    }
}

fn list_text(xs: &[f64]) -> String {
    xs.iter().map(|x| if x.is_infinite() { "inf".to_string() } else { x.to_string() }).collect::<Vec<_>>().join(",")
}

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::usage(format!("csv output: {e}"));
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::usage(format!("csv output: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("results serialize")
}

fn join_failures(fs: impl IntoIterator<Item = String>) -> Option<String> {
    let v: Vec<String> = fs.into_iter().collect();
    (!v.is_empty()).then(|| v.join("; "))
}

/// Kernel, law and solved tilt shared by most commands.
struct Problem {
    kernel: Kernel,
    law: MarkLaw,
    tilt: TiltSolution,
}

impl Problem {
    fn resolve(
        kernel: &Option<String>,
        law: &Option<String>,
        c: &Option<String>,
        c_hat: &Option<String>,
        config: &mut Map<String, Value>,
    ) -> Result<Self> {
        let kernel_spec = parse_kernel(required("kernel", kernel)?)?;
        let law_spec = parse_law(required("law", law)?)?;
        let kernel = Kernel::from_spec(&kernel_spec)?;
        let law = MarkLaw::from_spec(&law_spec)?;
        let c = threshold(&law, kernel.volume(), c, c_hat)?;
        let tilt = solve_tilt(&law, &kernel, c)?;
        config.insert("kernel".into(), to_value(&kernel_spec));
        config.insert("law".into(), to_value(&law_spec));
        config.insert("c".into(), json!(c));
        Ok(Problem { kernel, law, tilt })
    }

    fn model(&self) -> Result<FieldModel> {
        Ok(FieldModel::from_tilt(&self.kernel, &self.law, &self.tilt)?)
    }

    fn default_route(&self) -> KRoute {
        if self.kernel.is_box() {
            KRoute::Rectangle
        } else {
            KRoute::Occupation
        }
    }
}

fn threshold(law: &MarkLaw, volume: f64, c: &Option<String>, c_hat: &Option<String>) -> Result<f64> {
    match (number("c", c)?, number("c-hat", c_hat)?) {
        (Some(c), None) => Ok(c),
        (None, Some(m)) => Ok(threshold_for_mass(law, volume, m)?),
        (Some(_), Some(_)) => Err(CliError::usage("give either --c or --c-hat, not both")),
        (None, None) => Err(CliError::usage("missing --c (or --c-hat)")),
    }
}

fn parse_route(s: &str) -> Result<KRoute> {
    Ok(KRoute::from_str(s)?)
}

fn route_name(r: KRoute) -> Value {
    to_value(&r)
}

fn tilt_summary(t: &TiltSolution) -> Value {
    json!({
        "theta": t.theta,
        "rate": t.rate,
        "c_hat": t.c_hat(),
        "chi": t.chi,
        "kernel_volume": t.kernel_volume,
        "mgf_second_derivative": t.m2,
        "span": t.span,
    })
}

/// K from an explicit value or a route; also records the choice in `config`.
fn k_for(
    problem: &Problem,
    k: &Option<String>,
    route: &Option<String>,
    reps: usize,
    seed: u64,
    config: &mut Map<String, Value>,
) -> Result<KEstimate> {
    if let Some(k) = number("k", k)? {
        config.insert("k".into(), json!(k));
        return Ok(given_k(k));
    }
    let route = match route {
        Some(r) => parse_route(r)?,
        None => problem.default_route(),
    };
    config.insert("k-route".into(), route_name(route));
    Ok(estimate_k(&problem.model()?, route, reps, seed)?)
}

fn given_k(k: f64) -> KEstimate {
    let mut e = KEstimate::exact(k, scanstat::constants::Route::LocalSup);
    e.diagnostics.insert("given".into(), 1.0);
    e
}

fn approx_row(a: &ApproxResult, tilt: &TiltSolution, k: &KEstimate, given: bool) -> Vec<String> {
    vec![
        a.p.to_string(),
        a.linear_p.to_string(),
        to_value(&a.variant).as_str().unwrap_or_default().to_string(),
        tilt.theta.to_string(),
        tilt.rate.to_string(),
        tilt.c_hat().to_string(),
        k.value.to_string(),
        k.stderr.to_string(),
        if given { "given".into() } else { k.route.as_str().into() },
    ]
}

const APPROX_HEADER: [&str; 9] = ["p", "linear_p", "variant", "theta", "rate", "c_hat", "K", "K_stderr", "K_route"];

fn k_json(k: &KEstimate, given: bool) -> Value {
    if given {
        json!({"value": k.value, "route": "given"})
    } else {
        to_value(k)
    }
}

pub fn approx(a: ApproxArgs, seed: u64) -> Result<Outcome> {
    let mut config = Map::new();
    let problem = Problem::resolve(&a.kernel, &a.law, &a.c, &a.c_hat, &mut config)?;
    let lambda = required_number("lambda", &a.lambda)?;
    let volume = match (number("domain-volume", &a.domain_volume)?, &a.domain) {
        (Some(v), None) => v,
        (None, Some(sides)) => parse_list("domain", sides)?.iter().product(),
        (Some(_), Some(_)) => return Err(CliError::usage("give either --domain-volume or --domain, not both")),
        (None, None) => return Err(CliError::usage("missing --domain-volume (or --domain)")),
    };
    let variant = match a.variant.as_deref().map(str::trim) {
        None | Some("saturating") => Variant::Saturating,
        Some("linear") => Variant::Linear,
        Some(v) => return Err(CliError::usage(format!("--variant: expected saturating or linear, got '{v}'"))),
    };
    let reps = count("reps", &a.reps, 20_000)?;
    config.insert("lambda".into(), json!(lambda));
    config.insert("domain-volume".into(), json!(volume));
    config.insert("variant".into(), to_value(&variant));
    config.insert("reps".into(), json!(reps));
    let given = a.k.is_some();
    let k = k_for(&problem, &a.k, &a.k_route, reps, seed, &mut config)?;
    let r = approx_p(&problem.tilt, problem.kernel.dim(), lambda, volume, k.value, variant)?;
    Ok(Outcome {
        config,
        result: json!({
            "p": r.p,
            "approximation": r,
            "tilt": tilt_summary(&problem.tilt),
            "k": k_json(&k, given),
        }),
        csv: csv_text(&APPROX_HEADER, &[approx_row(&r, &problem.tilt, &k, given)])?,
        failure: k.failure.clone(),
    })
}

pub fn oracle(a: OracleArgs, seed: u64) -> Result<Outcome> {
    let mut config = Map::new();
    let problem = Problem::resolve(&a.kernel, &a.law, &a.c, &a.c_hat, &mut config)?;
    let dim = problem.kernel.dim();
    let lambda = required_number("lambda", &a.lambda)?;
    let domain = match (number("domain-side", &a.domain_side)?, &a.domain) {
        (Some(s), None) => BoxDomain::cube(s, dim)?,
        (None, Some(sides)) => BoxDomain::new(&vec![0.0; dim], &parse_list("domain", sides)?)?,
        (Some(_), Some(_)) => return Err(CliError::usage("give either --domain-side or --domain, not both")),
        (None, None) => return Err(CliError::usage("missing --domain-side (or --domain)")),
    };
    let sweepable = problem.kernel.box_sides().is_some_and(|b| b.len() <= 2);
    let method = match a.method.as_deref().map(str::trim) {
        None if sweepable => ScanMethod::ExactBoxSweep,
        Some("exact") => ScanMethod::ExactBoxSweep,
        None | Some("grid") => {
            ScanMethod::Grid { step: number("step", &a.step)?.unwrap_or_else(|| default_grid_step(&problem.kernel)) }
        }
        Some(m) => return Err(CliError::usage(format!("--method: expected exact or grid, got '{m}'"))),
    };
    let reps = count("reps", &a.reps, 10_000)?;
    config.insert("lambda".into(), json!(lambda));
    config.insert("domain".into(), json!(list_text(&domain.hi[..dim].iter().zip(&domain.lo).map(|(h, l)| h - l).collect::<Vec<_>>())));
    match method {
        ScanMethod::ExactBoxSweep => {
            config.insert("method".into(), json!("exact"));
        }
        ScanMethod::Grid { step } => {
            config.insert("method".into(), json!("grid"));
            config.insert("step".into(), json!(step));
        }
    }
    config.insert("reps".into(), json!(reps));
    let est = estimate_p(lambda, &domain, &problem.kernel, &problem.law, problem.tilt.c, method, reps, seed)?;
    if let Some(path) = &a.dump {
        let sups = scan_replicates(lambda, &domain, &problem.kernel, &problem.law, method, reps, seed)?;
        let rows: Vec<Vec<String>> = sups.iter().enumerate().map(|(i, s)| vec![i.to_string(), s.to_string()]).collect();
        std::fs::write(path, csv_text(&["replicate", "sup"], &rows)?)
            .map_err(|source| CliError::Io { action: "write", path: path.clone(), source })?;
    }
    let mut result = json!({
        "p": est.estimate.estimate,
        "oracle": est,
        "domain": domain,
        "domain_volume": domain.volume(),
        "tilt": tilt_summary(&problem.tilt),
    });
    let mut header = vec!["p", "stderr", "exceedances", "reps", "threshold"];
    let mut row = vec![
        est.estimate.estimate.to_string(),
        est.estimate.stderr.to_string(),
        est.exceedances.to_string(),
        reps.to_string(),
        est.threshold.to_string(),
    ];
    let mut failure = None;
    if a.k.is_some() || a.k_route.is_some() {
        let k_reps = count("k-reps", &a.k_reps, 20_000)?;
        config.insert("k-reps".into(), json!(k_reps));
        let given = a.k.is_some();
        let k = k_for(&problem, &a.k, &a.k_route, k_reps, seed, &mut config)?;
        let r = approx_p(&problem.tilt, dim, lambda, domain.volume(), k.value, Variant::Saturating)?;
        result["approximation"] = to_value(&r);
        result["k"] = k_json(&k, given);
        result["ratio"] = json!(est.estimate.estimate / r.p);
        header.extend(["approx_p", "K"]);
        row.extend([r.p.to_string(), k.value.to_string()]);
        failure = k.failure.clone();
    }
    Ok(Outcome { config, result, csv: csv_text(&header, &[row])?, failure })
}

fn all_routes(problem: &Problem) -> Vec<KRoute> {
    let mut v = vec![KRoute::Local, KRoute::Occupation, KRoute::Omega];
    if problem.kernel.is_box() {
        v.push(KRoute::Rectangle);
    }
    let unit_ball = matches!(problem.kernel.spec(), scanstat::KernelSpec::Ball { r, .. } if r == 1.0);
    if unit_ball && problem.law.is_degenerate() {
        v.push(KRoute::Ball);
    }
    v
}

pub fn k_const(a: KConstArgs, seed: u64) -> Result<Outcome> {
    let mut config = Map::new();
    let problem = Problem::resolve(&a.kernel, &a.law, &a.c, &a.c_hat, &mut config)?;
    let routes = match a.route.as_deref().map(str::trim) {
        None => vec![KRoute::Occupation],
        Some("all") => all_routes(&problem),
        Some(s) => s.split(',').map(parse_route).collect::<Result<Vec<_>>>()?,
    };
    let reps = count("reps", &a.reps, 20_000)?;
    config.insert("route".into(), json!(routes.iter().map(|r| route_name(*r).as_str().unwrap().to_string()).collect::<Vec<_>>().join(",")));
    config.insert("reps".into(), json!(reps));
    let model = problem.model()?;
    let records = routes
        .iter()
        .map(|&r| {
            Ok(KRecord {
                kernel: problem.kernel.label(),
                law: problem.law.label(),
                c: problem.tilt.c,
                estimate: estimate_k(&model, r, reps, seed)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut buf = Vec::new();
    write_csv(&mut buf, &records)?;
    let failure = join_failures(
        records.iter().filter_map(|r| r.estimate.failure.as_ref().map(|f| format!("{}: {f}", r.estimate.route.as_str()))),
    );
    Ok(Outcome {
        config,
        result: json!({"tilt": tilt_summary(&problem.tilt), "estimates": records}),
        csv: String::from_utf8(buf).expect("csv output is utf-8"),
        failure,
    })
}

pub fn nu(a: NuArgs, seed: u64) -> Result<Outcome> {
    let mut config = Map::new();
    let law_spec = parse_law(required("law", &a.law)?)?;
    let law = MarkLaw::from_spec(&law_spec)?;
    let volume = match (&a.kernel, number("volume", &a.volume)?) {
        (Some(k), None) => Kernel::from_spec(&parse_kernel(k)?)?.volume(),
        (None, v) => v.unwrap_or(1.0),
        (Some(_), Some(_)) => return Err(CliError::usage("give either --kernel or --volume, not both")),
    };
    let c = threshold(&law, volume, &a.c, &a.c_hat)?;
    let spec = WalkSpec::for_threshold(&law, volume, c)?;
    let levels = match &a.levels {
        Some(s) => parse_list("levels", s)?,
        None => default_levels(&spec),
    };
    let reps = count("reps", &a.reps, 20_000)?;
    config.insert("law".into(), to_value(&law_spec));
    config.insert("volume".into(), json!(volume));
    config.insert("c".into(), json!(c));
    config.insert("levels".into(), json!(list_text(&levels)));
    config.insert("reps".into(), json!(reps));
    let est = nu_c(&spec, &levels, reps, seed)?;
    let rows: Vec<Vec<String>> = est
        .levels
        .iter()
        .map(|(y, e)| vec![y.to_string(), e.estimate.to_string(), e.stderr.to_string()])
        .collect();
    let failure = (!est.stable).then(|| "overshoot estimates are not stable across the top levels".to_string());
    Ok(Outcome {
        config,
        result: json!({"nu": est.estimate.estimate, "theta": spec.theta(), "estimate": est}),
        csv: csv_text(&["level", "nu", "stderr"], &rows)?,
        failure,
    })
}

pub fn omega(a: OmegaArgs, seed: u64) -> Result<Outcome> {
    let mut config = Map::new();
    let reps = count("reps", &a.reps, 100_000)?;
    let with_bound = a.law.is_some() || a.c.is_some() || a.c_hat.is_some();
    let (kernel, bound) = if with_bound {
        let problem = Problem::resolve(&a.kernel, &a.law, &a.c, &a.c_hat, &mut config)?;
        let bound = k_omega_bound(&problem.model()?, reps, seed)?;
        (problem.kernel, Some(bound))
    } else {
        let spec = parse_kernel(required("kernel", &a.kernel)?)?;
        config.insert("kernel".into(), to_value(&spec));
        (Kernel::from_spec(&spec)?, None)
    };
    config.insert("reps".into(), json!(reps));
    let est = omega_inverse_volume(&kernel, reps, seed)?;
    let mut header = vec!["inverse_volume", "stderr"];
    let mut row = vec![est.estimate.to_string(), est.stderr.to_string()];
    let mut result = json!({"inverse_volume": est});
    let mut failure = None;
    if let Some(b) = bound {
        header.extend(["K_bound", "K_bound_stderr"]);
        row.extend([b.value.to_string(), b.stderr.to_string()]);
        failure = b.failure.clone();
        result["k_bound"] = to_value(&b);
    }
    Ok(Outcome { config, result, csv: csv_text(&header, &[row])?, failure })
}

fn parse_gauss_route(s: &str) -> Result<GaussRoute> {
    match s.trim() {
        "pickands" => Ok(GaussRoute::Pickands),
        "clump" => Ok(GaussRoute::Clump),
        "thm3" | "slab" => Ok(GaussRoute::Thm3),
        "bound" => Ok(GaussRoute::Bound),
        other => Err(CliError::usage(format!("unknown route '{other}' (expected pickands, clump, thm3 or bound)"))),
    }
}

pub fn gauss(a: GaussArgs, seed: u64) -> Result<Outcome> {
    let mut config = Map::new();
    let alpha = required_number("alpha", &a.alpha)?;
    let d = parse_count(required("d", &a.d)?).map_err(|e| CliError::usage(format!("--d: {e}")))?;
    // with the default set, a bound that does not exist is only noted
    let (routes, bound_requested) = match a.route.as_deref().map(str::trim) {
        None | Some("all") => (vec![GaussRoute::Pickands, GaussRoute::Clump, GaussRoute::Thm3, GaussRoute::Bound], false),
        Some(s) => {
            let r = s.split(',').map(parse_gauss_route).collect::<Result<Vec<_>>>()?;
            let asked = r.contains(&GaussRoute::Bound);
            (r, asked)
        }
    };
    let defaults = GaussSettings::default_for(alpha, d);
    let m_list = match &a.m_list {
        Some(s) => parse_list("m-list", s)?,
        None => defaults.m_list.clone(),
    };
    let step = number("step", &a.step)?.unwrap_or(defaults.sup_step);
    let region = number("region", &a.region)?.unwrap_or(defaults.region);
    let region_step = number("region-step", &a.region_step)?.unwrap_or(defaults.region_step);
    let xi = number("xi", &a.xi)?.unwrap_or(0.1);
    let nodes = count("nodes", &a.nodes, 8)?;
    let reps = count("reps", &a.reps, 4000)?;
    for (k, v) in [
        ("alpha", json!(alpha)),
        ("d", json!(d)),
        ("route", json!(a.route.as_deref().map_or("all", str::trim))),
        ("m-list", json!(list_text(&m_list))),
        ("step", json!(step)),
        ("region", json!(region)),
        ("region-step", json!(region_step)),
        ("xi", json!(xi)),
        ("nodes", json!(nodes)),
        ("reps", json!(reps)),
    ] {
        config.insert(k.into(), v);
    }
    let tail = match number("c", &a.c)? {
        None => None,
        Some(c) => {
            let scale = required_number("a", &a.a)?;
            let vol = required_number("domain-volume", &a.domain_volume)?;
            config.insert("a".into(), json!(scale));
            config.insert("c".into(), json!(c));
            config.insert("domain-volume".into(), json!(vol));
            Some((scale, c, vol))
        }
    };

    let (lower_bound, bound_note) = match ktilde_lower_bound(alpha, d) {
        Ok(b) => (Some(b), None),
        Err(e) if !bound_requested && e.is_validation() && (1..=3).contains(&d) && alpha > 0.0 && alpha <= 2.0 => {
            (None, Some(e.to_string()))
        }
        Err(e) => return Err(e.into()),
    };
    let mut estimates = Vec::new();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for route in routes {
        let (value, stderr, record) = match route {
            GaussRoute::Bound => match lower_bound {
                Some(b) => (b, 0.0, json!({"route": "bound", "estimate": b})),
                None => continue,
            },
            _ => {
                let est = match route {
                    GaussRoute::Pickands => ktilde_pickands(alpha, d, &m_list, step, reps, seed)?,
                    GaussRoute::Clump => ktilde_clump(alpha, d, region, region_step, reps, seed)?,
                    _ => ktilde_thm3(alpha, d, xi, nodes, region, region_step, reps, seed)?,
                };
                if let Some(f) = &est.failure {
                    failures.push(format!("{}: {f}", route.as_str()));
                }
                let (v, se) = (est.estimate.estimate, est.estimate.stderr);
                if let Some(b) = lower_bound {
                    if v < b - 3.0 * se {
                        failures.push(format!("{}: estimate {v} is below the lower bound {b}", route.as_str()));
                    }
                }
                (v, se, to_value(&est))
            }
        };
        let mut record = record;
        let mut row = vec![route.as_str().to_string(), value.to_string(), stderr.to_string()];
        if let Some((scale, c, vol)) = tail {
            let p = tail_p_gauss(alpha, d, scale, c, vol, value)?;
            record["tail_p"] = json!(p);
            row.push(p.to_string());
        }
        rows.push(row);
        estimates.push(record);
    }
    let mut header = vec!["route", "estimate", "stderr"];
    if tail.is_some() {
        header.push("tail_p");
    }
    Ok(Outcome {
        config,
        result: json!({"lower_bound": lower_bound, "lower_bound_note": bound_note, "estimates": estimates}),
        csv: csv_text(&header, &rows)?,
        failure: join_failures(failures),
    })
}

pub fn table1(a: Table1Args, seed: u64) -> Result<Outcome> {
    let mut config = Map::new();
    let rows = match &a.rows {
        Some(s) => s.split(',').map(|r| Ok(Table1Row::from_str(r)?)).collect::<Result<Vec<_>>>()?,
        None => vec![Table1Row::Unit, Table1Row::Lower, Table1Row::Gaussian],
    };
    let c_hats = match &a.chat {
        Some(s) => parse_list("chat", s)?,
        None => vec![2.0, 3.0, 4.0, 5.0, 10.0, f64::INFINITY],
    };
    let opts = OccupationOptions {
        reps: count("reps", &a.reps, 100_000)?,
        rays: count("rays", &a.rays, 256)?,
        typical_cell: match a.sampler.as_deref() {
            None | Some("typical") => true,
            Some("origin") => false,
            Some(other) => return Err(CliError::Usage(format!("--sampler must be typical or origin, got {other:?}"))),
        },
        ..Default::default()
    };
    config.insert("rows".into(), json!(rows.iter().map(|r| r.as_str()).collect::<Vec<_>>().join(",")));
    config.insert("chat".into(), json!(list_text(&c_hats)));
    config.insert("reps".into(), json!(opts.reps));
    config.insert("rays".into(), json!(opts.rays));
    config.insert("sampler".into(), json!(if opts.typical_cell { "typical" } else { "origin" }));
    let entries = table1_entries(&rows, &c_hats, &opts, seed)?;
    let mut buf = Vec::new();
    Table1Entry::write_csv(&mut buf, &entries)?;
    let failure = join_failures(entries.iter().filter_map(|e| {
        e.estimate.as_ref().and_then(|k| k.failure.as_ref()).map(|f| format!("{} at c_hat={}: {f}", e.row.as_str(), e.c_hat))
    }));
    let result: Vec<Value> = entries
        .iter()
        .map(|e| {
            json!({
                "row": e.row.as_str(),
                "c_hat": if e.c_hat.is_infinite() { json!("inf") } else { json!(e.c_hat) },
                "value": e.value,
                "stderr": e.stderr,
                "estimate": e.estimate,
            })
        })
        .collect();
    Ok(Outcome {
        config,
        result: json!({"entries": result}),
        csv: String::from_utf8(buf).expect("csv output is utf-8"),
        failure,
    })
}
