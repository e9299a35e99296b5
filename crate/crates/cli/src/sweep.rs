//! Parameter sweeps producing long-format tables.
//!
//! A sweep file is a config file with a few extra keys:
//!
//! ```text
//! sweep = kappa
//! values = 0.02, 0.06, 0.10
//! outputs = E_b, ergotropy, power
//! t_final_Jt = 20
//! dt_Jt = 1e-3
//! every = 100      # keep every 100th time sample
//! steady = false   # true: one steady-state row per value
//! epsilon = 0.05   # any model key fixes that parameter
//! ```

use rayon::prelude::*;

use qbattery::config::{parse_entries, Entry};
use qbattery::csv::{format_float, format_optional, writer};
use qbattery::dynamics::{
    integrate, steady_state_numeric, IntegrateOptions, MomentState, MOMENT_NAMES,
};
use qbattery::metrics::{
    baseline_state, comparison_ratios, evaluate, trajectory_metrics, BatteryMetrics,
    SinglePhotonBaseline,
};
use qbattery::model::{is_stable, DerivedRates, ModelParams};

use crate::svg::{LinePlot, Series};
use crate::{rates_of, threshold_message, CmdResult, Failure, JtGrid};

const METRIC_OUTPUTS: [&str; 7] = [
    "E_b",
    "E_b_passive",
    "ergotropy",
    "E_a",
    "power",
    "eta_util",
    "eta_conv",
];
const BASELINE_OUTPUTS: [&str; 6] = ["E_b1", "E_a1", "eta_b1", "eta_E", "eta_erg", "chi"];

pub fn known_outputs() -> Vec<String> {
    let mut v: Vec<String> = MOMENT_NAMES
        .iter()
        .flat_map(|n| [format!("{n}_re"), format!("{n}_im")])
        .collect();
    v.extend(
        METRIC_OUTPUTS
            .iter()
            .chain(&BASELINE_OUTPUTS)
            .map(|s| s.to_string()),
    );
    v
}

fn needs_baseline(outputs: &[String]) -> bool {
    outputs
        .iter()
        .any(|o| BASELINE_OUTPUTS.contains(&o.as_str()))
}

/// One evaluated sample: moments, metrics and, when requested, the baseline.
pub struct Sample<'a> {
    pub state: &'a MomentState,
    pub metrics: &'a BatteryMetrics,
    pub baseline: Option<SinglePhotonBaseline>,
    pub omega: f64,
}

pub fn output_value(name: &str, s: &Sample) -> Option<f64> {
    if let Some(k) = MOMENT_NAMES.iter().position(|m| {
        name.strip_prefix(m)
            .is_some_and(|r| r == "_re" || r == "_im")
    }) {
        let z = s.state.as_array()[k];
        return Some(if name.ends_with("_re") { z.re } else { z.im });
    }
    let m = s.metrics;
    match name {
        "E_b" => Some(m.e_b),
        "E_b_passive" => Some(m.e_b_passive),
        "ergotropy" => Some(m.ergotropy),
        "E_a" => Some(m.e_a),
        "power" => m.power,
        "eta_util" => m.eta_util,
        "eta_conv" => m.eta_conv,
        _ => {
            let b = s.baseline.as_ref()?;
            match name {
                "E_b1" => Some(b.e_b1),
                "E_a1" => Some(b.e_a1),
                "eta_b1" => b.eta_b1,
                _ => {
                    let r = comparison_ratios(s.state, b, s.omega).ok()?;
                    match name {
                        "eta_E" => r.eta_e,
                        "eta_erg" => r.eta_erg,
                        "chi" => r.chi,
                        _ => None,
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub parameter: String,
    pub values: Vec<f64>,
    pub base: ModelParams,
    pub grid: JtGrid,
    pub every: usize,
    pub steady: bool,
    pub outputs: Vec<String>,
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',')
        .map(|v| v.trim().to_string())
        .filter(|v| !v.is_empty())
        .collect()
}

fn parse_num<T: std::str::FromStr>(e: &Entry) -> CmdResult<T> {
    e.value.parse().map_err(|_| {
        Failure::config(format!(
            "line {}: cannot parse {:?} for {}",
            e.line, e.value, e.key
        ))
    })
}

impl SweepSpec {
    pub fn parse(text: &str) -> CmdResult<Self> {
        let entries = parse_entries(text).map_err(Failure::config)?;
        let mut spec = SweepSpec {
            parameter: String::new(),
            values: Vec::new(),
            base: ModelParams::default(),
            grid: JtGrid {
                t_final: 20.0,
                dt: 1e-3,
            },
            every: 1,
            steady: false,
            outputs: vec!["E_b".into(), "ergotropy".into()],
        };
        for e in &entries {
            match e.key.as_str() {
                "sweep" => spec.parameter = e.value.clone(),
                "values" => {
                    spec.values = split_list(&e.value)
                        .iter()
                        .map(|v| {
                            v.parse().map_err(|_| {
                                Failure::config(format!("line {}: bad sweep value {v:?}", e.line))
                            })
                        })
                        .collect::<CmdResult<_>>()?
                }
                "outputs" => spec.outputs = split_list(&e.value),
                "t_final_Jt" => spec.grid.t_final = parse_num(e)?,
                "dt_Jt" => spec.grid.dt = parse_num(e)?,
                "every" => spec.every = parse_num(e)?,
                "steady" => {
                    spec.steady = match e.value.as_str() {
                        "true" | "yes" | "1" => true,
                        "false" | "no" | "0" => false,
                        _ => {
                            return Err(Failure::config(format!(
                                "line {}: steady must be true or false",
                                e.line
                            )))
                        }
                    }
                }
                _ => {
                    if !spec.base.apply_entry(e).map_err(Failure::config)? {
                        return Err(Failure::config(format!(
                            "line {}: unknown key {:?}",
                            e.line, e.key
                        )));
                    }
                }
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Model parameters at one sweep value.
    pub fn params_at(&self, value: f64) -> CmdResult<ModelParams> {
        let mut p = self.base;
        let entry = Entry {
            line: 0,
            key: self.parameter.clone(),
            value: format!("{value:?}"),
        };
        match p.apply_entry(&entry) {
            Ok(true) => Ok(p),
            _ => Err(Failure::config(format!(
                "cannot sweep {:?}",
                self.parameter
            ))),
        }
    }

    /// Rejects the whole sweep if any point is unusable.
    pub fn validate(&self) -> CmdResult<()> {
        if self.parameter.is_empty() {
            return Err(Failure::config("sweep file needs `sweep = <parameter>`"));
        }
        if self.values.is_empty() {
            return Err(Failure::config("sweep has no values"));
        }
        if self.every == 0 {
            return Err(Failure::config("every must be at least 1"));
        }
        if !self.steady {
            self.grid.validate()?;
        }
        let known = known_outputs();
        if let Some(bad) = self.outputs.iter().find(|o| !known.contains(o)) {
            return Err(Failure::config(format!("unknown output {bad:?}")));
        }
        for &v in &self.values {
            let r = rates_of(&self.params_at(v)?)
                .map_err(|f| Failure::config(format!("{} = {v}: {}", self.parameter, f.message)))?;
            if self.steady && !is_stable(&r) {
                return Err(Failure::config(format!(
                    "{} = {v}: {}",
                    self.parameter,
                    threshold_message(&r)
                )));
            }
            if needs_baseline(&self.outputs) && !(r.nonreciprocal && r.delta == 0.0) {
                return Err(Failure::config(format!(
                    "{} = {v}: baseline outputs need the nonreciprocal coupling and zero detuning",
                    self.parameter
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Row {
    pub value: f64,
    pub t: f64,
    pub jt: f64,
    pub cells: Vec<Option<f64>>,
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub parameter: String,
    pub outputs: Vec<String>,
    pub rows: Vec<Row>,
    /// Sweep values whose trajectory diverged and was truncated.
    pub diverged: Vec<f64>,
}

fn point_rows(spec: &SweepSpec, value: f64, rates: &DerivedRates) -> CmdResult<(Vec<Row>, bool)> {
    let want_baseline = needs_baseline(&spec.outputs);
    let omega = rates.omega;
    let row = |t: f64, jt: f64, state: &MomentState, metrics: &BatteryMetrics| -> CmdResult<Row> {
        let baseline = if want_baseline {
            let b = baseline_state(rates, t).map_err(Failure::config)?;
            Some(SinglePhotonBaseline::from_state(&b, omega))
        } else {
            None
        };
        let sample = Sample {
            state,
            metrics,
            baseline,
            omega,
        };
        Ok(Row {
            value,
            t,
            jt,
            cells: spec
                .outputs
                .iter()
                .map(|o| output_value(o, &sample))
                .collect(),
        })
    };
    if spec.steady {
        let state = steady_state_numeric(rates).map_err(Failure::unstable)?;
        let metrics = evaluate(&state, omega).map_err(Failure::unstable)?;
        return Ok((
            vec![row(f64::INFINITY, f64::INFINITY, &state, &metrics)?],
            false,
        ));
    }
    let traj = integrate(
        rates,
        &IntegrateOptions::rk4_jt(rates, spec.grid.t_final, spec.grid.dt),
    )
    .map_err(Failure::config)?;
    let metrics = trajectory_metrics(&traj, omega).map_err(Failure::unstable)?;
    let jt = traj.jt();
    let last = traj.len().saturating_sub(1);
    let rows = (0..traj.len())
        .filter(|&k| k % spec.every == 0 || k == last)
        .map(|k| row(traj.t[k], jt[k], &traj.states[k], &metrics[k]))
        .collect::<CmdResult<_>>()?;
    Ok((rows, traj.diverged))
}

/// Evaluates every sweep value in parallel; rows come out ordered by
/// (value, t).
pub fn run_sweep(spec: &SweepSpec) -> CmdResult<SweepTable> {
    spec.validate()?;
    let mut values = spec.values.clone();
    values.sort_by(f64::total_cmp);
    let results: Vec<CmdResult<(Vec<Row>, bool)>> = values
        .par_iter()
        .map(|&v| {
            let rates = rates_of(&spec.params_at(v)?)?;
            point_rows(spec, v, &rates)
        })
        .collect();
    let mut rows = Vec::new();
    let mut diverged = Vec::new();
    for (v, r) in values.iter().zip(results) {
        let (r, div) = r?;
        if div {
            diverged.push(*v);
        }
        rows.extend(r);
    }
    Ok(SweepTable {
        parameter: spec.parameter.clone(),
        outputs: spec.outputs.clone(),
        rows,
        diverged,
    })
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        {
            let mut w = writer(&mut buf);
            let mut header = vec![
                "parameter".to_string(),
                "value".into(),
                "t".into(),
                "Jt".into(),
            ];
            header.extend(self.outputs.iter().cloned());
            w.write_record(&header).expect("in-memory write");
            for r in &self.rows {
                let mut rec = vec![
                    self.parameter.clone(),
                    format_float(r.value),
                    format_float(r.t),
                    format_float(r.jt),
                ];
                rec.extend(r.cells.iter().map(|c| format_optional(*c)));
                w.write_record(&rec).expect("in-memory write");
            }
            w.flush().expect("in-memory write");
        }
        String::from_utf8(buf).expect("ascii output")
    }

    /// One curve per sweep value of the chosen output against Jt.
    pub fn plot(&self, output: usize) -> LinePlot {
        let mut series: Vec<Series> = Vec::new();
        for r in &self.rows {
            if series
                .last()
                .is_none_or(|s| s.name != format!("{} = {}", self.parameter, r.value))
            {
                series.push(Series {
                    name: format!("{} = {}", self.parameter, r.value),
                    points: Vec::new(),
                });
            }
            let y = r.cells[output].unwrap_or(f64::NAN);
            series.last_mut().unwrap().points.push((r.jt, y));
        }
        LinePlot {
            title: format!("{} sweep", self.parameter),
            x_label: "Jt".into(),
            y_label: self.outputs[output].clone(),
            series,
        }
    }
}
