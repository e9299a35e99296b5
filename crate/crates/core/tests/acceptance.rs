//! Acceptance suite. Runs every criterion, prints one verdict line each and
//! exits non-zero if a hard criterion fails. The last criterion is soft: its
//! verdict is printed but never fails the run.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::Instant;

use qbattery::analytic::{
    analytic_moments, printed, steady_asymmetric, steady_symmetric, AnalyticDomain,
};
use qbattery::dynamics::{integrate, steady_state_numeric, IntegrateOptions};
use qbattery::metrics::{
    comparison_ratios, evaluate, passive_radicand, power_settling_jt, single_photon_baseline,
    trajectory_metrics, trapezoid,
};
use qbattery::model::{derive_rates, stability_threshold, DerivedRates, ModelParams};
use qbattery::oracle::{auto_cutoff, EvolveOptions, CUTOFF_STEPS};
use qbattery::Trajectory;
use serde_json::{json, Value};

type Verdict = Result<String, String>;
/// Name, whether failing it fails the run, and the check.
type Criterion = (&'static str, bool, fn() -> Verdict);

fn symmetric_defaults() -> ModelParams {
    ModelParams::default()
}

fn rates(p: &ModelParams) -> DerivedRates {
    derive_rates(p).expect("valid parameters")
}

fn run(p: &ModelParams, t_final_jt: f64, dt_jt: f64) -> (DerivedRates, Trajectory) {
    let r = rates(p);
    let traj = integrate(&r, &IntegrateOptions::rk4_jt(&r, t_final_jt, dt_jt)).expect("integrates");
    (r, traj)
}

fn check(ok: bool, pass: String, fail: String) -> Verdict {
    if ok {
        Ok(pass)
    } else {
        Err(fail)
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Relative error with an absolute floor for quantities that start at zero.
fn rel_err_floor(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / b.abs().max(floor)
}

fn criterion_trajectory_matches_closed_form() -> Verdict {
    let start = Instant::now();
    let (r, traj) = run(&symmetric_defaults(), 20.0, 1e-3);
    let dom = AnalyticDomain::from_rates(&r);
    // Columns: numeric n_a, n_b, |bb| then the closed-form values.
    let mut rows: Vec<[f64; 6]> = Vec::with_capacity(traj.len());
    let mut printed_bb_gap = 0.0f64;
    for (&t, s) in traj.t.iter().zip(&traj.states) {
        let closed = analytic_moments(t, &dom).expect("closed form applies");
        rows.push([
            s.n_a.re,
            s.n_b.re,
            s.bb.norm(),
            printed::charger_occupation(t, &dom),
            printed::battery_occupation(t, &dom),
            closed.bb.norm(),
        ]);
        printed_bb_gap = printed_bb_gap
            .max((printed::battery_pair_coherence(t, &dom).norm() - s.bb.norm()).abs());
    }
    let elapsed = start.elapsed().as_secs_f64();
    // Error relative to each quantity's magnitude over the run; all three start
    // at exactly zero, so a pointwise ratio is undefined at the origin.
    let normwise = |k: usize| {
        let scale = rows.iter().map(|r| r[k + 3].abs()).fold(0.0, f64::max);
        rows.iter()
            .map(|r| (r[k] - r[k + 3]).abs())
            .fold(0.0, f64::max)
            / scale
    };
    // Pointwise relative error once the quantity exceeds 1e-3 of its maximum.
    let pointwise = |k: usize| {
        let scale = rows.iter().map(|r| r[k + 3].abs()).fold(0.0, f64::max);
        rows.iter()
            .filter(|r| r[k + 3].abs() > 1e-3 * scale)
            .map(|r| rel_err(r[k], r[k + 3]))
            .fold(0.0, f64::max)
    };
    let errs = [normwise(0), normwise(1), normwise(2)];
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    let detail = format!(
        "normwise rel err n_a {:.2e}, n_b {:.2e}, |bb| {:.2e}; pointwise above 1e-3 of peak {:.2e}, {:.2e}, {:.2e}; \
         |bb| from the cascade closed form (printed pair-coherence expression off by up to {printed_bb_gap:.2e}); {elapsed:.2} s",
        errs[0], errs[1], errs[2], pointwise(0), pointwise(1), pointwise(2)
    );
    check(worst < 1e-6 && elapsed < 1.0, detail.clone(), detail)
}

fn criterion_symmetric_steady_energy() -> Verdict {
    let r = rates(&symmetric_defaults());
    let s = steady_state_numeric(&r).expect("steady state");
    let e_b = evaluate(&s, r.omega).unwrap().e_b / r.omega;
    let formula = printed::symmetric_energy(r.gamma, r.epsilon, r.lambda_total);
    let rel = rel_err(e_b, formula);
    let detail = format!(
        "E_b/ω = {e_b:.10} at Λ = {}, printed expression rel diff {rel:.2e}",
        r.lambda_total
    );
    check(
        (e_b - 0.1806).abs() < 1e-3 && rel < 1e-10,
        detail.clone(),
        detail,
    )
}

fn criterion_stability_threshold() -> Verdict {
    let below = symmetric_defaults().with_epsilon(0.12);
    let (r, traj) = run(&below, 200.0, 1e-2);
    let steady = steady_state_numeric(&r).expect("stable");
    let gap = traj.last().unwrap().max_abs_diff(&steady);
    let (r_above, above) = run(&symmetric_defaults().with_epsilon(0.15), 200.0, 1e-2);
    let threshold = stability_threshold(&r);
    let detail = format!(
        "Λ/4 = {threshold:.4}; ε = 0.12 ends {gap:.2e} from steady state, diverged = {}; ε = 0.15 diverged = {} (Λ/4 = {:.4})",
        traj.diverged,
        above.diverged,
        stability_threshold(&r_above)
    );
    check(
        (threshold - 0.14).abs() < 1e-12 && gap < 1e-8 && !traj.diverged && above.diverged,
        detail.clone(),
        detail,
    )
}

fn criterion_oracle_equivalence() -> Verdict {
    let start = Instant::now();
    let r = rates(&symmetric_defaults());
    let j = r.coupling_magnitude();
    let opts = EvolveOptions {
        t_final: 20.0 / j,
        dt: 1e-2 / j,
        sample_every: 10,
    };
    let report = auto_cutoff(&r, &opts, &CUTOFF_STEPS).map_err(|e| e.to_string())?;
    let oracle = &report.trajectory;
    oracle.check_cutoff().map_err(|e| e.to_string())?;
    let ode = integrate(&r, &IntegrateOptions::rk4(opts.t_final, opts.dt)).expect("integrates");
    let mut worst = 0.0f64;
    for (t, m) in oracle.t.iter().zip(&oracle.moments) {
        let d = &ode.states[(t / opts.dt).round() as usize];
        for (x, y) in m.to_real().iter().zip(d.to_real()) {
            worst = worst.max((x - y).abs() / (1e-5 * y.abs()).max(1e-8));
        }
    }
    let steady = oracle.moments.last().unwrap();
    let reference = printed::steady_correlators(&AnalyticDomain::from_rates(&r));
    let mut steady_rel = 0.0f64;
    for (x, y) in steady.as_array().iter().zip(reference.as_array()).skip(2) {
        for (a, b) in [(x.re, y.re), (x.im, y.im)] {
            if b != 0.0 || a.abs() > 1e-8 {
                steady_rel = steady_rel.max(rel_err_floor(a, b, 1e-8));
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let detail = format!(
        "n_cut = {}, converged = {}, worst deviation {worst:.3} of tolerance, steady correlators rel err {steady_rel:.2e}; {elapsed:.1} s",
        oracle.n_cut, report.converged
    );
    check(
        report.converged && worst <= 1.0 && steady_rel < 1e-5 && elapsed < 30.0,
        detail.clone(),
        detail,
    )
}

fn criterion_cascade_is_one_way() -> Verdict {
    let runs: Vec<Trajectory> = [0.01, 0.06, 0.2]
        .iter()
        .map(|&kb| {
            let p = ModelParams {
                kappa_b: kb,
                ..symmetric_defaults()
            };
            run(&p, 20.0, 1e-3).1
        })
        .collect();
    let charger = |t: &Trajectory| -> Vec<[u64; 4]> {
        t.states
            .iter()
            .map(|s| {
                [
                    s.n_a.re.to_bits(),
                    s.n_a.im.to_bits(),
                    s.aa.re.to_bits(),
                    s.aa.im.to_bits(),
                ]
            })
            .collect()
    };
    let identical = runs.windows(2).all(|w| charger(&w[0]) == charger(&w[1]));
    let zero_means = runs.iter().flat_map(|t| &t.states).all(|s| {
        s.mean_a.re == 0.0 && s.mean_a.im == 0.0 && s.mean_b.re == 0.0 && s.mean_b.im == 0.0
    });
    let battery_differs = runs[0].states.last().unwrap().n_b != runs[2].states.last().unwrap().n_b;
    let detail = format!(
        "charger bit-identical across κ_b: {identical}; means exactly zero: {zero_means}; battery responds to κ_b: {battery_differs}"
    );
    check(
        identical && zero_means && battery_differs,
        detail.clone(),
        detail,
    )
}

fn criterion_metric_identities() -> Verdict {
    let mut params: Vec<ModelParams> = [0.02, 0.06, 0.10]
        .iter()
        .map(|&k| symmetric_defaults().with_kappa(k))
        .collect();
    params.extend(
        [0.03, 0.06, 0.09, 0.12]
            .iter()
            .map(|&e| symmetric_defaults().with_epsilon(e)),
    );
    let (mut split, mut min_d, mut integral) = (0.0f64, f64::INFINITY, 0.0f64);
    let mut settle = Vec::new();
    for p in &params {
        let (r, traj) = run(p, 20.0, 1e-3);
        let m = trajectory_metrics(&traj, r.omega).unwrap();
        for (s, m) in traj.states.iter().zip(&m) {
            split = split.max((m.e_b - m.e_b_passive - m.ergotropy).abs());
            min_d = min_d.min(passive_radicand(s));
        }
        let power: Vec<f64> = m.iter().map(|m| m.power.unwrap()).collect();
        let erg: Vec<f64> = m.iter().map(|m| m.ergotropy).collect();
        let delta = erg.last().unwrap() - erg[0];
        integral = integral.max((trapezoid(&traj.t, &power) - delta).abs() / delta.abs().max(1.0));
        if p.epsilon == 0.05 {
            let per_jt = power_settling_jt(&traj.jt(), &power, r.coupling_magnitude(), 1e-4);
            let per_t = power_settling_jt(&traj.jt(), &power, 1.0, 1e-4);
            settle.push((p.kappa_a, per_jt, per_t));
        }
    }
    let reference_settling = settle.iter().find(|s| s.0 == 0.06).and_then(|s| s.1);
    let listing: Vec<String> = settle
        .iter()
        .map(|(k, a, b)| {
            format!(
                "κ={k}: {:.2} ({:.2} in ω² units)",
                a.unwrap_or(f64::NAN),
                b.unwrap_or(f64::NAN)
            )
        })
        .collect();
    let detail = format!(
        "max |E_b − passive − ergotropy| {split:.1e}; min D {min_d:.12}; ∫P dt error {integral:.1e}; \
         power settles (dε_b/dJt < 1e-4) at Jt {}",
        listing.join(", ")
    );
    let ok = split <= 1e-14
        && min_d >= 1.0 - 1e-9
        && integral <= 1e-6
        && reference_settling.is_some_and(|j| (6.0..=10.0).contains(&j));
    check(ok, detail.clone(), detail)
}

fn steady_pair(p: &ModelParams) -> (f64, f64) {
    let r = rates(p);
    let m = evaluate(&steady_state_numeric(&r).unwrap(), r.omega).unwrap();
    (m.e_b, m.ergotropy)
}

fn criterion_monotonicity() -> Verdict {
    let strictly = |v: &[(f64, f64)], up: bool| {
        v.windows(2).all(|w| {
            let (d0, d1) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
            if up {
                d0 > 0.0 && d1 > 0.0
            } else {
                d0 < 0.0 && d1 < 0.0
            }
        })
    };
    let kappa: Vec<_> = [0.02, 0.06, 0.10]
        .iter()
        .map(|&k| steady_pair(&symmetric_defaults().with_kappa(k)))
        .collect();
    let eps: Vec<_> = [0.03, 0.06, 0.09, 0.12]
        .iter()
        .map(|&e| steady_pair(&symmetric_defaults().with_epsilon(e)))
        .collect();
    let base = symmetric_defaults().with_kappa(0.02);
    let grid: Vec<f64> = (0..26).map(|k| 0.5 + 0.1 * k as f64).collect();
    let land: Vec<Vec<(f64, f64)>> = grid
        .iter()
        .map(|&x| {
            grid.iter()
                .map(|&xi| steady_pair(&base.with_asymmetry(x, xi)))
                .collect()
        })
        .collect();
    let x_decreasing = (0..grid.len()).all(|j| {
        land.windows(2)
            .all(|w| w[1][j].0 < w[0][j].0 && w[1][j].1 < w[0][j].1)
    });
    let xi_nondecreasing = land
        .iter()
        .all(|row| row.windows(2).all(|w| w[1].0 >= w[0].0 && w[1].1 >= w[0].1));
    let detail = format!(
        "κ sweep decreasing: {}; ε sweep increasing: {}; decreasing in x: {x_decreasing}; nondecreasing in ξ: {xi_nondecreasing} (26×26 grid)",
        strictly(&kappa, false),
        strictly(&eps, true)
    );
    check(
        strictly(&kappa, false) && strictly(&eps, true) && x_decreasing && xi_nondecreasing,
        detail.clone(),
        detail,
    )
}

fn criterion_conversion_exceeds_unity() -> Verdict {
    let mut vals = Vec::new();
    for p in [0.02, 0.06, 0.10]
        .map(|k| symmetric_defaults().with_kappa(k))
        .iter()
        .chain(&[0.03, 0.06, 0.09, 0.12].map(|e| symmetric_defaults().with_epsilon(e)))
    {
        let r = rates(p);
        let m = evaluate(&steady_state_numeric(&r).unwrap(), r.omega).unwrap();
        vals.push(m.eta_conv.unwrap());
    }
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let detail = format!("steady ε_b/E_a over the κ and ε sweeps: min {min:.4}, values {vals:.4?}");
    check(min > 1.0, detail.clone(), detail)
}

fn report_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../reports/formula_adjudication.json")
}

fn criterion_formula_adjudication() -> Verdict {
    let mut symmetric = Vec::new();
    let (mut quartic_hits, mut sextic_hits, mut cases) = (0, 0, 0);
    for (kappa, eps) in [
        (0.06, 0.05),
        (0.02, 0.05),
        (0.10, 0.03),
        (0.5, 0.05),
        (0.5, 0.2),
    ] {
        let r = rates(&symmetric_defaults().with_kappa(kappa).with_epsilon(eps));
        let rep = steady_symmetric(&r).map_err(|e| e.to_string())?;
        let find = |id: &str| {
            rep.diagnostics
                .iter()
                .find(|d| d.formula_id == id)
                .unwrap()
                .clone()
        };
        let q = find("steady_ergotropy_symmetric_quartic_denominator");
        let s = find("steady_ergotropy_symmetric_sextic_denominator");
        cases += 1;
        quartic_hits += q.matches as usize;
        sextic_hits += s.matches as usize;
        symmetric.push(json!({
            "kappa": kappa, "epsilon": eps, "lambda": r.lambda_total,
            "energy": find("steady_energy_symmetric"),
            "ergotropy_quartic_denominator": q,
            "ergotropy_sextic_denominator": s,
        }));
    }
    let mut asymmetric = Vec::new();
    let mut energy_hits = 0;
    let mut ergotropy_equals_energy = 0;
    let mut asym_cases = 0;
    let base = symmetric_defaults().with_kappa(0.02);
    for (x, xi) in [(1.0, 1.0), (2.0, 1.5), (0.5, 3.0), (3.0, 0.5)] {
        let rep = steady_asymmetric(&base, x, xi).map_err(|e| e.to_string())?;
        let find = |id: &str| {
            rep.diagnostics
                .iter()
                .find(|d| d.formula_id == id)
                .unwrap()
                .clone()
        };
        asym_cases += 1;
        energy_hits += find("steady_energy_asymmetric").matches as usize;
        ergotropy_equals_energy +=
            ((rep.ergotropy_inf - rep.e_b_inf).abs() <= 1e-8 * rep.e_b_inf) as usize;
        asymmetric.push(json!({
            "x": x, "xi": xi,
            "oracle_energy": rep.e_b_inf, "oracle_ergotropy": rep.ergotropy_inf,
            "energy": find("steady_energy_asymmetric"),
            "ergotropy_as_printed": find("steady_ergotropy_asymmetric"),
        }));
    }
    let verdict_pair = match (quartic_hits == cases, sextic_hits == cases) {
        (true, false) => "quartic-denominator printing matches",
        (false, true) => "sextic-denominator printing matches",
        (true, true) => "both printings match",
        (false, false) => "neither printing matches the oracle in general",
    };
    let report = json!({
        "oracle": "numeric steady solve of the moment equations, cross-checked against the Fock-space master equation",
        "symmetric_steady_ergotropy": {
            "verdict": verdict_pair,
            "quartic_denominator_matches": format!("{quartic_hits}/{cases}"),
            "sextic_denominator_matches": format!("{sextic_hits}/{cases}"),
            "cases": symmetric,
        },
        "asymmetric_steady": {
            "energy_expression_matches": format!("{energy_hits}/{asym_cases}"),
            "ergotropy_equals_energy": format!("{ergotropy_equals_energy}/{asym_cases}"),
            "verdict": if ergotropy_equals_energy == 0 {
                "steady ergotropy is strictly below the stored energy; the claimed equality does not hold"
            } else {
                "steady ergotropy equals the stored energy in some cases"
            },
            "cases": asymmetric,
        },
    });
    let path = report_path();
    std::fs::create_dir_all(path.parent().unwrap()).map_err(|e| e.to_string())?;
    let mut text = serde_json::to_string_pretty(&report).unwrap();
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| e.to_string())?;
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let detail = format!(
        "{verdict_pair} (quartic {quartic_hits}/{cases}, sextic {sextic_hits}/{cases}); asymmetric energy expression \
         matches {energy_hits}/{asym_cases}, ergotropy = energy in {ergotropy_equals_energy}/{asym_cases}; report at {}",
        path.canonicalize().unwrap_or(path.clone()).display()
    );
    check(
        written["symmetric_steady_ergotropy"]["cases"]
            .as_array()
            .is_some_and(|c| c.len() == cases),
        detail.clone(),
        detail,
    )
}

fn steady_ratios(p: &ModelParams) -> (Option<f64>, Option<f64>) {
    let r = rates(p);
    let s = steady_state_numeric(&r).unwrap();
    let b = single_photon_baseline(&r, f64::INFINITY).unwrap();
    let c = comparison_ratios(&s, &b, r.omega).unwrap();
    (c.chi, c.eta_erg)
}

fn criterion_single_photon_comparison() -> Verdict {
    let mut grid: Vec<ModelParams> = [0.02, 0.06, 0.10]
        .iter()
        .map(|&k| symmetric_defaults().with_kappa(k))
        .collect();
    grid.extend(
        [0.03, 0.06, 0.09, 0.12]
            .iter()
            .map(|&e| symmetric_defaults().with_epsilon(e)),
    );
    let chi_max = grid
        .iter()
        .map(|p| steady_ratios(p).0.unwrap())
        .fold(0.0, f64::max);
    let eta = |k: f64| {
        steady_ratios(&symmetric_defaults().with_kappa(k))
            .1
            .unwrap()
            - 1.0
    };
    let ks: Vec<f64> = (1..=200).map(|k| 0.005 * k as f64).collect();
    let crossing = ks
        .windows(2)
        .find(|w| eta(w[0]).signum() != eta(w[1]).signum())
        .map(|w| {
            let (mut lo, mut hi) = (w[0], w[1]);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if eta(mid).signum() == eta(lo).signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        });
    let in_band = crossing.is_some_and(|k| (0.4..=0.8).contains(&k));
    let detail = format!(
        "max steady χ {chi_max:.4} (< 1: {}); steady ε_b/E_b1 = 1 at κ = {} (expected band [0.4, 0.8]: {in_band})",
        chi_max < 1.0,
        crossing.map_or("none in (0, 1]".to_string(), |k| format!("{k:.4}"))
    );
    check(chi_max < 1.0 && in_band, detail.clone(), detail)
}

fn main() {
    let criteria: [Criterion; 10] = [
        (
            "1 analytic-numeric trajectory equivalence",
            true,
            criterion_trajectory_matches_closed_form,
        ),
        (
            "2 symmetric steady energy",
            true,
            criterion_symmetric_steady_energy,
        ),
        (
            "3 stability threshold bracket",
            true,
            criterion_stability_threshold,
        ),
        (
            "4 Fock-space oracle equivalence",
            true,
            criterion_oracle_equivalence,
        ),
        ("5 one-way cascade", true, criterion_cascade_is_one_way),
        (
            "6 metric identities and power settling",
            true,
            criterion_metric_identities,
        ),
        ("7 monotonicity sweeps", true, criterion_monotonicity),
        (
            "8 conversion ratio above one",
            true,
            criterion_conversion_exceeds_unity,
        ),
        (
            "9 printed-formula adjudication report",
            true,
            criterion_formula_adjudication,
        ),
        (
            "10 single-photon comparison (soft)",
            false,
            criterion_single_photon_comparison,
        ),
    ];
    let mut hard_failures = 0;
    for (name, hard, f) in criteria {
        let verdict = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match verdict {
            Ok(d) => println!("PASS  criterion {name}: {d}"),
            Err(d) if hard => {
                hard_failures += 1;
                println!("FAIL  criterion {name}: {d}");
            }
            Err(d) => println!("FAIL (soft, not fatal)  criterion {name}: {d}"),
        }
    }
    if hard_failures > 0 {
        eprintln!("{hard_failures} hard acceptance criteria failed");
        std::process::exit(1);
    }
}
