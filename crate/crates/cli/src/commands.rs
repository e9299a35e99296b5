//! The individual subcommands.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use qbattery::analytic::{
    analytic_moments, correlator_diagnostics, steady_asymmetric, steady_symmetric, AnalyticDomain,
    Diagnostic, SYMMETRY_TOL,
};
use qbattery::csv::{format_float, format_optional, write_trajectory, writer};
use qbattery::dynamics::{
    integrate, steady_state_numeric, IntegrateOptions, MomentState, MOMENT_NAMES,
};
use qbattery::metrics::{
    baseline_state, comparison_ratios, evaluate, trajectory_metrics, BatteryMetrics,
    SinglePhotonBaseline,
};
use qbattery::model::{is_stable, stability_threshold, DerivedRates, ModelParams};
use qbattery::oracle::{
    auto_cutoff, build_generator, evolve, DensityMatrix, EvolveOptions, OracleError,
    OracleTrajectory, CUTOFF_ABS_TOL, CUTOFF_REL_TOL, CUTOFF_STEPS,
};

use crate::svg::{LinePlot, Series};
use crate::{rates_of, require_stable, threshold_message, CmdResult, Failure, JtGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Everything a command produces. `failure` is set when the command ran to
/// completion but its verdict is negative (the report is still written).
#[derive(Debug, Default)]
pub struct Output {
    pub body: String,
    pub svg: Option<String>,
    pub landscape: Option<String>,
    pub failure: Option<Failure>,
}

impl Output {
    fn text(body: String) -> Self {
        Self {
            body,
            ..Self::default()
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable report");
    s.push('\n');
    s
}

fn moments_json(s: &MomentState) -> Value {
    let map: serde_json::Map<String, Value> = MOMENT_NAMES
        .iter()
        .zip(s.as_array())
        .map(|(n, z)| (n.to_string(), json!([z.re, z.im])))
        .collect();
    Value::Object(map)
}

fn trajectory(
    rates: &DerivedRates,
    grid: &JtGrid,
) -> CmdResult<(qbattery::Trajectory, Vec<BatteryMetrics>)> {
    grid.validate()?;
    require_stable(rates)?;
    let traj = integrate(
        rates,
        &IntegrateOptions::rk4_jt(rates, grid.t_final, grid.dt),
    )
    .map_err(Failure::config)?;
    if traj.diverged {
        return Err(Failure::unstable(format!(
            "trajectory diverged; {}",
            threshold_message(rates)
        )));
    }
    let metrics = trajectory_metrics(&traj, rates.omega).map_err(Failure::unstable)?;
    Ok((traj, metrics))
}

fn metric_value(m: &BatteryMetrics, name: &str) -> CmdResult<f64> {
    Ok(match name {
        "E_b" => m.e_b,
        "E_b_passive" => m.e_b_passive,
        "ergotropy" => m.ergotropy,
        "E_a" => m.e_a,
        "power" => m.power.unwrap_or(f64::NAN),
        "eta_util" => m.eta_util.unwrap_or(f64::NAN),
        "eta_conv" => m.eta_conv.unwrap_or(f64::NAN),
        _ => {
            return Err(Failure::config(format!(
                "cannot plot unknown column {name:?}"
            )))
        }
    })
}

/// Integrates the moment equations over the requested `Jt` grid.
pub fn simulate(
    params: &ModelParams,
    grid: &JtGrid,
    format: Format,
    plot: Option<&[String]>,
) -> CmdResult<Output> {
    let rates = rates_of(params)?;
    let (traj, metrics) = trajectory(&rates, grid)?;
    let body = match format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_trajectory(&mut buf, &traj, &metrics).map_err(Failure::config)?;
            String::from_utf8(buf).expect("ascii output")
        }
        Format::Json => {
            let jt = traj.jt();
            let rows: Vec<Value> = (0..traj.len())
                .map(|k| json!({"t": traj.t[k], "Jt": jt[k], "moments": moments_json(&traj.states[k]), "metrics": metrics[k]}))
                .collect();
            to_json(&json!({"params": params, "rates": rates, "rows": rows}))
        }
    };
    let svg = match plot {
        Some(columns) => {
            let jt = traj.jt();
            let series = columns
                .iter()
                .map(|c| {
                    let points = jt
                        .iter()
                        .zip(&metrics)
                        .map(|(&x, m)| Ok((x, metric_value(m, c)?)))
                        .collect::<CmdResult<_>>()?;
                    Ok(Series {
                        name: c.clone(),
                        points,
                    })
                })
                .collect::<CmdResult<_>>()?;
            Some(
                LinePlot {
                    title: "Charging dynamics".into(),
                    x_label: "Jt".into(),
                    y_label: "energy / ω".into(),
                    series,
                }
                .render(),
            )
        }
        None => None,
    };
    Ok(Output {
        body,
        svg,
        ..Output::default()
    })
}

/// Numeric steady state with the printed-formula diagnostics.
pub fn steady(params: &ModelParams) -> CmdResult<Output> {
    let rates = rates_of(params)?;
    require_stable(&rates)?;
    let state = steady_state_numeric(&rates).map_err(Failure::unstable)?;
    let metrics = evaluate(&state, rates.omega).map_err(Failure::unstable)?;
    let dom = AnalyticDomain::from_rates(&rates);
    let mut notes: Vec<String> = Vec::new();
    let mut diagnostics: Vec<Diagnostic> = Vec::new();
    match dom.check_applicable() {
        Err(e) => notes.push(format!("printed formulas skipped: {e}")),
        Ok(()) => {
            let (l, d) = (rates.lambda_total, rates.delta_total);
            let symmetric = (l - d).abs() <= SYMMETRY_TOL * l.abs().max(d.abs()).max(1.0);
            let report = if symmetric {
                steady_symmetric(&rates)
            } else {
                let base = ModelParams {
                    x_scale: 1.0,
                    xi: 1.0,
                    ..*params
                };
                steady_asymmetric(&base, params.x_scale, params.xi)
            };
            match report {
                Ok(r) => diagnostics = r.diagnostics,
                Err(e) => {
                    notes.push(format!("steady energy formulas skipped: {e}"));
                    diagnostics = correlator_diagnostics(&dom, &state);
                }
            }
        }
    }
    let body = to_json(&json!({
        "params": params,
        "rates": rates,
        "stability_threshold": stability_threshold(&rates),
        "moments": moments_json(&state),
        "metrics": metrics,
        "E_b_over_omega": metrics.e_b / rates.omega,
        "ergotropy_over_omega": metrics.ergotropy / rates.omega,
        "diagnostics": diagnostics,
        "mismatched_formulas": diagnostics.iter().filter(|d| !d.matches).map(|d| d.formula_id.clone()).collect::<Vec<_>>(),
        "notes": notes,
    }));
    Ok(Output::text(body))
}

#[derive(Debug, Clone, Serialize)]
struct ComparisonRow {
    t: f64,
    #[serde(rename = "Jt")]
    jt: f64,
    #[serde(rename = "E_b")]
    e_b: f64,
    #[serde(rename = "E_b1")]
    e_b1: f64,
    #[serde(rename = "eta_E")]
    eta_e: Option<f64>,
    eta_erg: Option<f64>,
    chi: Option<f64>,
}

/// Two-photon battery against the single-photon baseline over time.
pub fn compare_single_photon(
    params: &ModelParams,
    grid: &JtGrid,
    format: Format,
    plot: bool,
) -> CmdResult<Output> {
    let rates = rates_of(params)?;
    baseline_state(&rates, 0.0).map_err(Failure::config)?;
    let (traj, metrics) = trajectory(&rates, grid)?;
    let jt = traj.jt();
    let mut rows = Vec::with_capacity(traj.len());
    for k in 0..traj.len() {
        let b = SinglePhotonBaseline::from_state(
            &baseline_state(&rates, traj.t[k]).map_err(Failure::config)?,
            rates.omega,
        );
        let r = comparison_ratios(&traj.states[k], &b, rates.omega).map_err(Failure::unstable)?;
        rows.push(ComparisonRow {
            t: traj.t[k],
            jt: jt[k],
            e_b: metrics[k].e_b,
            e_b1: b.e_b1,
            eta_e: r.eta_e,
            eta_erg: r.eta_erg,
            chi: r.chi,
        });
    }
    let body = match format {
        Format::Csv => {
            let mut buf = Vec::new();
            {
                let mut w = writer(&mut buf);
                w.write_record(["t", "Jt", "E_b", "E_b1", "eta_E", "eta_erg", "chi"])
                    .expect("in-memory write");
                for r in &rows {
                    w.write_record([
                        format_float(r.t),
                        format_float(r.jt),
                        format_float(r.e_b),
                        format_float(r.e_b1),
                        format_optional(r.eta_e),
                        format_optional(r.eta_erg),
                        format_optional(r.chi),
                    ])
                    .expect("in-memory write");
                }
                w.flush().expect("in-memory write");
            }
            String::from_utf8(buf).expect("ascii output")
        }
        Format::Json => to_json(&json!({"params": params, "rows": rows})),
    };
    let svg = plot.then(|| {
        let curve = |name: &str, pick: fn(&ComparisonRow) -> Option<f64>| Series {
            name: name.into(),
            points: rows
                .iter()
                .map(|r| (r.jt, pick(r).unwrap_or(f64::NAN)))
                .collect(),
        };
        LinePlot {
            title: "Two-photon versus single-photon charging".into(),
            x_label: "Jt".into(),
            y_label: "ratio".into(),
            series: vec![
                curve("eta_E", |r| r.eta_e),
                curve("eta_erg", |r| r.eta_erg),
                curve("chi", |r| r.chi),
            ],
        }
        .render()
    });
    Ok(Output {
        body,
        svg,
        ..Output::default()
    })
}

#[derive(Debug, Clone, Serialize)]
struct GridPoint {
    x: f64,
    xi: f64,
    e_b: Option<f64>,
    ergotropy: Option<f64>,
}

/// Steady ergotropy over the (x, ξ) asymmetry grid, best first.
pub fn optimize_asymmetry(params: &ModelParams, xs: &[f64], xis: &[f64]) -> CmdResult<Output> {
    rates_of(params)?;
    let pairs: Vec<(f64, f64)> = xs
        .iter()
        .flat_map(|&x| xis.iter().map(move |&xi| (x, xi)))
        .collect();
    let points: Vec<GridPoint> = pairs
        .par_iter()
        .map(|&(x, xi)| {
            let rates = rates_of(&params.with_asymmetry(x, xi))?;
            let mut p = GridPoint {
                x,
                xi,
                e_b: None,
                ergotropy: None,
            };
            if is_stable(&rates) {
                let s = steady_state_numeric(&rates).map_err(Failure::unstable)?;
                let m = evaluate(&s, rates.omega).map_err(Failure::unstable)?;
                p.e_b = Some(m.e_b);
                p.ergotropy = Some(m.ergotropy);
            }
            Ok(p)
        })
        .collect::<CmdResult<_>>()?;
    let skipped: Vec<&GridPoint> = points.iter().filter(|p| p.ergotropy.is_none()).collect();
    for p in &skipped {
        eprintln!(
            "warning: skipping unstable grid point x = {}, xi = {}",
            p.x, p.xi
        );
    }
    let mut ranked: Vec<&GridPoint> = points.iter().filter(|p| p.ergotropy.is_some()).collect();
    ranked.sort_by(|a, b| {
        b.ergotropy
            .partial_cmp(&a.ergotropy)
            .unwrap()
            .then(a.x.total_cmp(&b.x))
            .then(a.xi.total_cmp(&b.xi))
    });
    let ranked_json: Vec<Value> = ranked
        .iter()
        .enumerate()
        .map(|(k, p)| json!({"rank": k + 1, "x": p.x, "xi": p.xi, "E_b": p.e_b, "ergotropy": p.ergotropy}))
        .collect();
    let body = to_json(&json!({
        "params": params,
        "x_grid": xs,
        "xi_grid": xis,
        "evaluated": ranked.len(),
        "skipped_unstable": skipped.len(),
        "skipped_points": skipped.iter().map(|p| json!({"x": p.x, "xi": p.xi})).collect::<Vec<_>>(),
        "ranked": ranked_json,
    }));
    let mut buf = Vec::new();
    {
        let mut w = writer(&mut buf);
        w.write_record(["x", "xi", "E_b", "ergotropy"])
            .expect("in-memory write");
        for p in &points {
            w.write_record([
                format_float(p.x),
                format_float(p.xi),
                format_optional(p.e_b),
                format_optional(p.ergotropy),
            ])
            .expect("in-memory write");
        }
        w.flush().expect("in-memory write");
    }
    Ok(Output {
        body,
        landscape: Some(String::from_utf8(buf).expect("ascii output")),
        ..Output::default()
    })
}

/// Absolute deviation allowed between two paths: max(1e-5 relative, 1e-8 absolute).
pub const ORACLE_REL_TOL: f64 = 1e-5;
pub const ORACLE_ABS_TOL: f64 = 1e-8;
/// Ergotropy goes through a square root of a near-cancelling radicand, which
/// magnifies the oracle's truncation error about tenfold.
pub const METRIC_REL_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Serialize)]
pub struct Deviation {
    pub rel_tol: f64,
    pub max_abs: f64,
    /// Largest |a − b| / max(|b|, 1e-8).
    pub max_rel: f64,
    /// Largest |a − b| / max(rel_tol |b|, 1e-8); at most 1 to pass.
    pub max_tolerance_ratio: f64,
    pub worst_quantity: Option<String>,
    pub worst_jt: Option<f64>,
    pub samples: usize,
}

impl Deviation {
    fn new(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            max_abs: 0.0,
            max_rel: 0.0,
            max_tolerance_ratio: 0.0,
            worst_quantity: None,
            worst_jt: None,
            samples: 0,
        }
    }

    fn add(&mut self, name: &str, jt: f64, a: f64, b: f64) {
        let d = (a - b).abs();
        self.max_abs = self.max_abs.max(d);
        self.max_rel = self.max_rel.max(d / b.abs().max(ORACLE_ABS_TOL));
        let ratio = d / (self.rel_tol * b.abs()).max(ORACLE_ABS_TOL);
        if ratio > self.max_tolerance_ratio || self.worst_quantity.is_none() {
            self.max_tolerance_ratio = ratio;
            self.worst_quantity = Some(name.to_string());
            self.worst_jt = Some(jt);
        }
    }

    fn add_moments(&mut self, jt: f64, a: &MomentState, b: &MomentState) {
        for ((name, za), zb) in MOMENT_NAMES.iter().zip(a.as_array()).zip(b.as_array()) {
            self.add(&format!("{name}_re"), jt, za.re, zb.re);
            self.add(&format!("{name}_im"), jt, za.im, zb.im);
        }
        self.samples += 1;
    }

    fn add_metrics(&mut self, jt: f64, a: &BatteryMetrics, b: &BatteryMetrics) {
        self.add("E_b", jt, a.e_b, b.e_b);
        self.add("ergotropy", jt, a.ergotropy, b.ergotropy);
        self.add("E_a", jt, a.e_a, b.e_a);
        self.samples += 1;
    }

    pub fn passes(&self) -> bool {
        self.max_tolerance_ratio <= 1.0
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OracleCheckOptions {
    pub n_cut: Option<usize>,
    pub autocutoff: bool,
    pub sample_every: usize,
}

impl Default for OracleCheckOptions {
    fn default() -> Self {
        Self {
            n_cut: None,
            autocutoff: true,
            sample_every: 10,
        }
    }
}

fn oracle_failure(e: OracleError) -> Failure {
    match e {
        OracleError::BadGrid { .. } | OracleError::CutoffTooSmallToBuild(_) => Failure::config(e),
        _ => Failure::oracle(e),
    }
}

/// Runs the Fock-space oracle and compares it with the moment equations and,
/// where it applies, the closed form.
pub fn oracle_check(
    params: &ModelParams,
    grid: &JtGrid,
    opts: &OracleCheckOptions,
) -> CmdResult<Output> {
    let rates = rates_of(params)?;
    grid.validate()?;
    require_stable(&rates)?;
    if opts.sample_every == 0 {
        return Err(Failure::config("sample spacing must be at least one step"));
    }
    let j = rates.coupling_magnitude();
    let evolve_opts = EvolveOptions {
        t_final: grid.t_final / j,
        dt: grid.dt / j,
        sample_every: opts.sample_every,
    };
    let mut cutoff_runs = Vec::new();
    let mut converged = None;
    let mut tail = None;
    let oracle: OracleTrajectory = if opts.autocutoff {
        let cutoffs: Vec<usize> = match opts.n_cut {
            Some(n) => vec![n, n + 4, n + 8],
            None => CUTOFF_STEPS.to_vec(),
        };
        let report = auto_cutoff(&rates, &evolve_opts, &cutoffs).map_err(oracle_failure)?;
        cutoff_runs = report.runs;
        converged = Some(report.converged);
        tail = report.estimated_truncation_error;
        report.trajectory
    } else {
        let n = opts.n_cut.unwrap_or(CUTOFF_STEPS[CUTOFF_STEPS.len() - 1]);
        let gen = build_generator(&rates, n).map_err(oracle_failure)?;
        evolve(&DensityMatrix::vacuum(n), &gen, &evolve_opts).map_err(oracle_failure)?
    };
    let cutoff_problem = oracle.check_cutoff().err().map(|e| e.to_string());

    let ode = integrate(
        &rates,
        &IntegrateOptions::rk4(evolve_opts.t_final, evolve_opts.dt),
    )
    .map_err(Failure::config)?;
    let mut moments = Deviation::new(ORACLE_REL_TOL);
    let mut metrics = Deviation::new(METRIC_REL_TOL);
    let mut analytic = Deviation::new(ORACLE_REL_TOL);
    let dom = AnalyticDomain::from_rates(&rates);
    let mut analytic_note = dom.check_applicable().err().map(|e| e.to_string());
    for (t, m) in oracle.t.iter().zip(&oracle.moments) {
        let k = (t / evolve_opts.dt).round() as usize;
        let jt = t * j;
        let Some(d) = ode.states.get(k) else {
            return Err(Failure::oracle(format!(
                "moment trajectory ended before t = {t}"
            )));
        };
        moments.add_moments(jt, m, d);
        let (mo, md) = (
            evaluate(m, rates.omega).map_err(Failure::oracle)?,
            evaluate(d, rates.omega).map_err(Failure::oracle)?,
        );
        metrics.add_metrics(jt, &mo, &md);
        if analytic_note.is_none() {
            match analytic_moments(*t, &dom) {
                Ok(a) => analytic.add_moments(jt, m, &a),
                Err(e) => analytic_note = Some(e.to_string()),
            }
        }
    }
    let final_rho = &oracle.final_state;
    let checks = [
        ("oracle_vs_dynamics_moments", &moments),
        ("oracle_vs_dynamics_metrics", &metrics),
        ("oracle_vs_analytic_moments", &analytic),
    ];
    let mut worst: Option<(&str, &Deviation)> = None;
    for (name, d) in checks {
        if d.samples > 0 && worst.is_none_or(|(_, w)| d.max_tolerance_ratio > w.max_tolerance_ratio)
        {
            worst = Some((name, d));
        }
    }
    let deviations_pass = checks.iter().all(|(_, d)| d.passes());
    let pass = deviations_pass && cutoff_problem.is_none() && converged != Some(false);
    let report = json!({
        "pass": pass,
        "n_cut": oracle.n_cut,
        "autocutoff": opts.autocutoff,
        "cutoff_runs": cutoff_runs,
        "cutoff_converged": converged,
        "estimated_truncation_error": tail,
        "cutoff_tolerance": {"relative": CUTOFF_REL_TOL, "absolute": CUTOFF_ABS_TOL},
        "cutoff_diagnosis": cutoff_problem,
        "max_trace_drift": oracle.max_trace_drift,
        "max_edge_population": oracle.max_edge_population,
        "max_closure_residual": oracle.max_closure_residual,
        "final_hermiticity_error": final_rho.hermiticity_error(),
        "final_min_eigenvalue": final_rho.min_eigenvalue(),
        "tolerance": {"moments_relative": ORACLE_REL_TOL, "metrics_relative": METRIC_REL_TOL, "absolute": ORACLE_ABS_TOL},
        "oracle_vs_dynamics_moments": moments,
        "oracle_vs_dynamics_metrics": metrics,
        "oracle_vs_analytic_moments": if analytic.samples > 0 { json!(analytic) } else { Value::Null },
        "analytic_note": analytic_note,
        "t_final_Jt": grid.t_final,
        "dt_Jt": grid.dt,
    });
    let failure = (!pass).then(|| {
        let msg = if let Some(c) = &cutoff_problem {
            format!("oracle check failed: {c}")
        } else if converged == Some(false) {
            format!(
                "oracle check failed: cutoff did not converge by n_cut = {}",
                oracle.n_cut
            )
        } else {
            let (name, d) = worst.expect("a failing comparison exists");
            format!(
                "oracle check failed: worst offender {} in {name} at Jt = {} ({}x tolerance)",
                d.worst_quantity.as_deref().unwrap_or("?"),
                d.worst_jt.unwrap_or(f64::NAN),
                d.max_tolerance_ratio
            )
        };
        Failure::oracle(msg)
    });
    Ok(Output {
        body: to_json(&report),
        failure,
        ..Output::default()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short() -> JtGrid {
        JtGrid {
            t_final: 2.0,
            dt: 0.01,
        }
    }

    #[test]
    fn simulate_rejects_supercritical_drive() {
        let p = ModelParams::default().with_epsilon(0.15);
        let e = simulate(&p, &short(), Format::Csv, None).unwrap_err();
        assert_eq!(e.code, crate::EXIT_UNSTABLE);
        assert!(e.message.contains("0.14"));
    }

    #[test]
    fn steady_reports_reference_energy() {
        let out = steady(&ModelParams::default()).unwrap();
        let v: Value = serde_json::from_str(&out.body).unwrap();
        assert!((v["E_b_over_omega"].as_f64().unwrap() - 0.1806).abs() < 5e-5);
        assert!(!v["mismatched_formulas"].as_array().unwrap().is_empty());
    }

    #[test]
    fn single_point_grid_gives_one_row() {
        let p = ModelParams::default().with_kappa(0.02);
        let out = optimize_asymmetry(&p, &[1.0], &[1.0]).unwrap();
        let v: Value = serde_json::from_str(&out.body).unwrap();
        assert_eq!(v["ranked"].as_array().unwrap().len(), 1);
    }

    #[test]
    fn unstable_grid_points_are_counted() {
        let p = ModelParams::default().with_kappa(0.02).with_epsilon(0.1);
        let out = optimize_asymmetry(&p, &[0.5, 1.75, 3.0], &[1.0]).unwrap();
        let v: Value = serde_json::from_str(&out.body).unwrap();
        assert!(v["skipped_unstable"].as_u64().unwrap() >= 1);
    }

    #[test]
    fn tiny_cutoff_fails_oracle_check() {
        let opts = OracleCheckOptions {
            n_cut: Some(2),
            autocutoff: false,
            sample_every: 10,
        };
        let out = oracle_check(&ModelParams::default(), &short(), &opts).unwrap();
        let f = out.failure.unwrap();
        assert_eq!(f.code, crate::EXIT_ORACLE);
        assert!(f.message.contains("cutoff"), "{}", f.message);
    }
}
