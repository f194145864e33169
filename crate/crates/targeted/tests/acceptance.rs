//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.
//!
//! Criterion 11 needs a user-supplied copy of the ritodrine cohort; point
//! `TARGETED_DRYAD_CONFIG` at a run configuration for it to enable the check.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use targeted::commands::{replicate_study_parallel, Command, Invocation, EXIT_OK};
use targeted::config::{relative_to, RunConfig};
use targeted::io::read_dataset;
use targeted_core::data::{AnalysisData, Dataset};
use targeted_core::diagnostics::{c_statistic, positivity_table};
use targeted_core::learners::glm::{lasso_gradient, lasso_objective, logistic_gradient, logistic_objective};
use targeted_core::learners::{LearnerKind, LearnerSpec, Loss};
use targeted_core::sensitivity::{causal_gap_curve, default_grid};
use targeted_core::sim::{generate, true_psi, DgpSpec, EstimatorConfig, EstimatorKind};
use targeted_core::super_learner::{fit_super_learner, make_folds, DEFAULT_SEED};
use targeted_core::tmle::{run_tmle, truncation_bound, TmleConfig, TmleRun};
use targeted_core::{Matrix, Result as CoreResult};

const DGP_A_RD: f64 = 0.215_778_115_100_165_8;
const DGP_A_RD_MC_SE: f64 = 6.865_371_815_342_36e-5;

type Outcome = Result<String, String>;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn core<T>(r: CoreResult<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn learner(s: &str) -> LearnerSpec {
    s.parse().expect("valid learner")
}

fn lib(specs: &[&str]) -> Vec<LearnerSpec> {
    specs.iter().map(|s| learner(s)).collect()
}

fn e8() -> AnalysisData {
    let w = Matrix::from_rows(&[0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0].map(|v| vec![v])).unwrap();
    AnalysisData::new(
        vec![1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0],
        vec![1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0],
        w,
    )
    .unwrap()
}

fn e8_config() -> TmleConfig {
    let stratified = vec![LearnerSpec::of(LearnerKind::Stratified)];
    TmleConfig {
        folds: 2,
        g_bound: Some(0.0),
        ..TmleConfig::new(stratified.clone(), stratified)
    }
}

fn dgp_a_config() -> TmleConfig {
    TmleConfig::new(lib(&["logistic:interact_first=1"]), lib(&["logistic"]))
}

/// Hand stratification: mean over W of E(Y | A=1, W) - E(Y | A=0, W).
fn stratified_rd(d: &AnalysisData) -> f64 {
    let mut total = 0.0;
    for level in [0.0, 1.0] {
        let mean_y = |arm: f64| {
            let ys: Vec<f64> = (0..d.n()).filter(|&i| d.w.get(i, 0) == level && d.a[i] == arm).map(|i| d.y[i]).collect();
            ys.iter().sum::<f64>() / ys.len() as f64
        };
        let share = (0..d.n()).filter(|&i| d.w.get(i, 0) == level).count() as f64 / d.n() as f64;
        total += share * (mean_y(1.0) - mean_y(0.0));
    }
    total
}

fn load_table1(config: &str) -> Result<Dataset, String> {
    let path = fixture(config);
    let cfg = RunConfig::load(&path).map_err(|e| e.to_string())?;
    let data = cfg.data.ok_or("fixture has no data section")?;
    let mut ds = read_dataset(&relative_to(&path, &data.path), &data.columns).map_err(|e| e.to_string())?;
    for (column, mapping) in &cfg.analysis.recode {
        ds = core(ds.recode_categories(column, mapping))?;
    }
    let dose = cfg.treatment.dichotomize_dose.ok_or("fixture has no dose")?;
    Ok(core(ds.dichotomize_treatment(&dose))?.0)
}

fn truncation() -> Outcome {
    let bound = core(truncation_bound(225))?;
    let oracle = 5.0 / (225f64.sqrt() * 225f64.ln());
    ensure((bound - oracle).abs() < 1e-15, format!("{bound} vs closed form {oracle}"))?;
    ensure((bound - 0.06155).abs() <= 5e-4, format!("{bound} outside 0.06155 +/- 0.0005"))?;
    Ok(format!("truncation_bound(225) = {bound:.6}"))
}

fn table1() -> Outcome {
    let original = core(positivity_table(&load_table1("table1_original.toml")?, "age_group"))?;
    ensure(
        original.zero_cells == ["16-20", "46-50"],
        format!("zero cells {:?}", original.zero_cells),
    )?;
    let recoded = core(positivity_table(&load_table1("table1_recoded.toml")?, "age_group"))?;
    let cells: Vec<(&str, usize, usize)> = recoded.cells.iter().map(|c| (c.level.as_str(), c.n_control, c.n_treated)).collect();
    ensure(
        cells == [("16 - 30", 48, 33), ("31-35", 50, 29), ("36-50", 45, 20)],
        format!("recoded cells {cells:?}"),
    )?;
    ensure(recoded.zero_cells.is_empty(), "recoded table has empty cells")?;
    Ok(format!("zero cells {:?}; recoded {:?}", original.zero_cells, cells))
}

fn saturated() -> Outcome {
    let d = e8();
    let run = core(run_tmle(&d, &e8_config()))?;
    let hand = stratified_rd(&d);
    let (tmle, gcomp) = (run.result.rd.estimate, run.result.gcomp_rd);
    for (name, v) in [("tmle", tmle), ("gcomp", gcomp), ("stratified", hand)] {
        ensure((v - 0.5).abs() < 1e-10, format!("{name} RD = {v}"))?;
    }
    Ok(format!("tmle {tmle:.12}, gcomp {gcomp:.12}, stratified {hand:.12}"))
}

fn suite_runs() -> Result<Vec<(String, TmleRun)>, String> {
    let mut runs = vec![("E8".to_string(), core(run_tmle(&e8(), &e8_config()))?)];
    for (n, seed) in [(250, 3), (1000, 4)] {
        let sample = core(generate(&DgpSpec::dgp_a(), n, seed))?;
        runs.push((format!("DGP-A n={n}"), core(run_tmle(&sample.data, &dgp_a_config()))?));
        let default_lib = lib(&["intercept_only", "logistic", "lasso_logistic", "spline_logistic", "boosted_stumps"]);
        let full = TmleConfig::new(default_lib.clone(), default_lib);
        runs.push((format!("DGP-A n={n}, default library"), core(run_tmle(&sample.data, &full))?));
    }
    Ok(runs)
}

fn efficient_score(runs: &[(String, TmleRun)]) -> Outcome {
    let mut worst: f64 = 0.0;
    for (name, run) in runs {
        let m = run.result.mean_ic_rd.abs();
        ensure(m < 1e-8, format!("{name}: |mean IC| = {m:e}"))?;
        worst = worst.max(m);
    }
    Ok(format!("max |mean IC_RD| = {worst:.2e} over {} runs", runs.len()))
}

fn double_robustness() -> Outcome {
    let dgp = DgpSpec::dgp_a();
    let truth = core(true_psi(&dgp, 1_000_000, 42))?;
    ensure(
        (truth.rd - DGP_A_RD).abs() < 1e-15,
        format!("oracle {} differs from frozen {DGP_A_RD}", truth.rd),
    )?;
    let correct_q = lib(&["logistic:interact_first=1"]);
    let correct_g = lib(&["logistic"]);
    let intercept = lib(&["intercept_only"]);
    let estimators = [
        EstimatorConfig::new("tmle_correct", EstimatorKind::Tmle, correct_q.clone(), correct_g.clone()),
        EstimatorConfig::new("tmle_q_intercept", EstimatorKind::Tmle, intercept.clone(), correct_g),
        EstimatorConfig::new("gcomp_q_intercept", EstimatorKind::Gcomp, intercept.clone(), Vec::new()),
        EstimatorConfig::new("tmle_g_intercept", EstimatorKind::Tmle, correct_q, intercept),
    ];
    let summary = core(replicate_study_parallel(&dgp, 1000, 500, 1, &estimators, &truth, None))?;
    let s = &summary.estimators;
    let (a, b, gc, c) = (&s[0], &s[1], &s[2], &s[3]);
    let cov = a.coverage.ok_or("no coverage")?;
    let mut failures = Vec::new();
    if a.mean_bias.abs() >= 0.01 {
        failures.push(format!("(a) bias {:.4}", a.mean_bias));
    }
    if !(0.92..=0.98).contains(&cov) {
        failures.push(format!("(a) coverage {cov:.3}"));
    }
    if b.mean_bias.abs() >= 0.015 {
        failures.push(format!("(b) tmle bias {:.4}", b.mean_bias));
    }
    if gc.mean_bias.abs() <= 3.0 * b.mean_bias.abs() {
        failures.push(format!("(b) gcomp bias {:.4} not > 3x tmle", gc.mean_bias));
    }
    if c.mean_bias.abs() >= 0.015 {
        failures.push(format!("(c) tmle bias {:.4}", c.mean_bias));
    }
    let ic = s.iter().filter_map(|e| e.max_abs_mean_ic).fold(0.0, f64::max);
    if ic >= 1e-8 {
        failures.push(format!("max |mean IC| {ic:e}"));
    }
    let detail = format!(
        "(a) bias {:+.4} coverage {cov:.3}; (b) tmle bias {:+.4} vs gcomp {:+.4}; (c) bias {:+.4}; truth {:.6} (MC se {:.1e})",
        a.mean_bias, b.mean_bias, gc.mean_bias, c.mean_bias, truth.rd, DGP_A_RD_MC_SE
    );
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{}; {detail}", failures.join(", ")))
    }
}

fn super_learner_optimality(runs: &[(String, TmleRun)]) -> Outcome {
    let mut checked = 0;
    for (name, run) in runs {
        for (which, fit) in [("Q", &run.nuisances.q), ("g", &run.nuisances.g)] {
            let best = fit.cv_risks.iter().copied().fold(f64::INFINITY, f64::min);
            ensure(
                fit.ensemble_cv_risk <= best + 1e-9,
                format!("{name} {which}: ensemble {} > best {best}", fit.ensemble_cv_risk),
            )?;
            checked += 1;
        }
    }
    let sample = core(generate(&DgpSpec::dgp_a(), 300, 9))?;
    let folds = core(make_folds(300, 10, DEFAULT_SEED, None))?;
    for spec in ["logistic", "boosted_stumps", "intercept_only"] {
        let fit = core(fit_super_learner(&lib(&[spec]), &sample.data.w, &sample.data.a, &folds, Loss::NegLogLik))?;
        ensure(fit.weights == [1.0], format!("library of one `{spec}` weights {:?}", fit.weights))?;
    }
    Ok(format!("{checked} ensemble fits within 1e-9 of the best learner; singleton weights [1.0]"))
}

fn c_statistic_brute_force() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut instances = 0;
    while instances < 200 {
        let n = rng.random_range(2..=50);
        let levels = rng.random_range(2..=8);
        let g: Vec<f64> = (0..n).map(|_| rng.random_range(0..levels) as f64 / levels as f64).collect();
        let a: Vec<f64> = (0..n).map(|_| f64::from(u8::from(rng.random_bool(0.5)))).collect();
        let treated = a.iter().filter(|&&x| x == 1.0).count();
        if treated == 0 || treated == n {
            continue;
        }
        let (mut score, mut pairs) = (0.0, 0.0);
        for i in (0..n).filter(|&i| a[i] == 1.0) {
            for j in (0..n).filter(|&j| a[j] == 0.0) {
                pairs += 1.0;
                score += if g[i] > g[j] {
                    1.0
                } else if g[i] == g[j] {
                    0.5
                } else {
                    0.0
                };
            }
        }
        let c = core(c_statistic(&g, &a))?;
        worst = worst.max((c - score / pairs).abs());
        let flipped: Vec<f64> = a.iter().map(|x| 1.0 - x).collect();
        let complement = core(c_statistic(&g, &flipped))?;
        ensure((c + complement - 1.0).abs() < 1e-12, format!("c + c' = {}", c + complement))?;
        instances += 1;
    }
    ensure(worst < 1e-12, format!("max deviation {worst:e}"))?;
    Ok(format!("{instances} instances, max deviation {worst:.1e}; complement identity holds"))
}

fn sensitivity_thresholds() -> Outcome {
    let curve = core(causal_gap_curve(0.21, 0.062, (0.09, 0.33), &default_grid(0.21, 0.062)))?;
    ensure(curve.threshold_significance_pos == Some(0.09), format!("{:?}", curve.threshold_significance_pos))?;
    ensure(curve.threshold_sign_reversal_pos == Some(0.33), format!("{:?}", curve.threshold_sign_reversal_pos))?;
    Ok("significance 0.09, sign reversal 0.33".into())
}

fn gradients() -> Outcome {
    const H: f64 = 1e-5;
    let close = |a: f64, f: f64| (a - f).abs() <= 1e-5 * a.abs().max(f.abs()) + 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let (p, n) = (rng.random_range(1..5), rng.random_range(5..30));
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let y: Vec<f64> = (0..n).map(|_| f64::from(u8::from(rng.random_bool(0.4)))).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..3.0)).collect();
        let beta: Vec<f64> = (0..=p)
            .map(|_| {
                let b: f64 = rng.random_range(-1.5..1.5);
                if b.abs() < 0.01 { 0.01f64.copysign(b) } else { b }
            })
            .collect();
        let lambda = rng.random_range(0.0..0.5);
        let analytic = [
            logistic_gradient(&x, &y, Some(&w), None, true, &beta),
            lasso_gradient(&x, &y, Some(&w), true, &beta, lambda),
        ];
        for j in 0..beta.len() {
            let (mut up, mut down) = (beta.clone(), beta.clone());
            up[j] += H;
            down[j] -= H;
            let fd = [
                (logistic_objective(&x, &y, Some(&w), None, true, &up) - logistic_objective(&x, &y, Some(&w), None, true, &down))
                    / (2.0 * H),
                (lasso_objective(&x, &y, Some(&w), true, &up, lambda) - lasso_objective(&x, &y, Some(&w), true, &down, lambda))
                    / (2.0 * H),
            ];
            for k in 0..2 {
                let (a, f) = (analytic[k][j], fd[k]);
                ensure(close(a, f), format!("coordinate {j}: analytic {a} vs central difference {f}"))?;
                worst = worst.max((a - f).abs() / a.abs().max(f.abs()).max(1e-300));
            }
        }
    }
    Ok(format!("50 instances x 2 objectives, max relative deviation {worst:.1e}"))
}

fn run_cli(command: Command, config: &Path, out: &Path) -> Result<String, String> {
    let code = targeted::run(&Invocation {
        command,
        config: config.to_path_buf(),
        out: out.to_path_buf(),
        seed: None,
        threads: None,
    });
    ensure(code == EXIT_OK, format!("{} exited with {code}", command.as_str()))?;
    std::fs::read_to_string(out.join("report.json")).map_err(|e| e.to_string())
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = fixture("table1_recoded.toml");
    let first = run_cli(Command::Estimate, &config, &dir.path().join("first"))?;
    let second = run_cli(Command::Estimate, &config, &dir.path().join("second"))?;
    ensure(first == second, "reports differ")?;
    Ok(format!("two estimate runs, {} identical report bytes", first.len()))
}

/// `None` when no cohort configuration is supplied.
fn dryad() -> Option<Outcome> {
    let config = PathBuf::from(std::env::var_os("TARGETED_DRYAD_CONFIG")?);
    Some((|| {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let text = run_cli(Command::Estimate, &config, dir.path())?;
        let report: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
        let step = &report["steps"]["step_4_estimation"];
        let rd = step["result"]["rd"]["estimate"].as_f64().ok_or("no RD")?;
        let c = step["propensity_overlap"]["c_statistic"].as_f64().ok_or("no C-statistic")?;
        let or = step["baseline"]["fit"]["terms"][0]["odds_ratio"].as_f64().ok_or("no [baseline] fit")?;
        let mut failures = Vec::new();
        if (rd - 0.21).abs() > 0.05 {
            failures.push("RD");
        }
        if (c - 0.72).abs() > 0.05 {
            failures.push("C-statistic");
        }
        if !(or > 1.00 && or < 1.04) {
            failures.push("dose OR");
        }
        let detail = format!("RD {rd:.3}, C-statistic {c:.3}, per-unit dose OR {or:.4}");
        if failures.is_empty() {
            Ok(detail)
        } else {
            Err(format!("{} out of tolerance; {detail}", failures.join(", ")))
        }
    })())
}

fn main() {
    let start = Instant::now();
    let mut failed = 0;
    let mut report = |id: &str, name: &str, outcome: Outcome| {
        match &outcome {
            Ok(detail) => println!("PASS  {id:>2}  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {id:>2}  {name}: {detail}");
            }
        }
    };
    report("1", "truncation bound", truncation());
    report("2", "Table 1 positivity", table1());
    report("3", "saturated equivalence", saturated());
    match suite_runs() {
        Ok(runs) => {
            report("4", "efficient score equation", efficient_score(&runs));
            report("5", "double robustness", double_robustness());
            report("6", "super learner optimality", super_learner_optimality(&runs));
        }
        Err(e) => {
            report("4", "efficient score equation", Err(e.clone()));
            report("5", "double robustness", double_robustness());
            report("6", "super learner optimality", Err(e));
        }
    }
    report("7", "C-statistic", c_statistic_brute_force());
    report("8", "sensitivity thresholds", sensitivity_thresholds());
    report("9", "gradient checks", gradients());
    report("10", "determinism", determinism());
    match dryad() {
        Some(outcome) => report("11", "cohort data (optional)", outcome),
        None => println!("SKIP  11  cohort data (optional): set TARGETED_DRYAD_CONFIG to a run configuration"),
    }
    println!("acceptance: {failed} failed, {:.1}s", start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
