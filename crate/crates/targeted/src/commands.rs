//! The five subcommands. Each writes `report.json`, `metadata.json` and its CSVs
//! into the output directory and returns a process exit code.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::Serialize;
use targeted_core::data::{Dataset, Finding, ValidationReport, TIMING_VIOLATION, UNKNOWN_COLUMN};
use targeted_core::diagnostics::{crude_dose_table, overlap_summary, positivity_table};
use targeted_core::sensitivity::{causal_gap_curve, default_grid};
use targeted_core::sim::{self, DgpSpec, EstimatorConfig, OracleTruth, ReplicateEstimate, ReplicationSummary};
use targeted_core::super_learner::make_folds;
use targeted_core::tmle::{self, resolve_g_bound, TmleResult};
use targeted_core::Error as CoreError;

use crate::config::{relative_to, RunConfig};
use crate::io::{read_dataset, write_csv, write_json, IoError};
use crate::report::*;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_IDENTIFICATION: i32 = 3;
pub const EXIT_ESTIMATION: i32 = 4;

pub const REPORT_FILE: &str = "report.json";
pub const METADATA_FILE: &str = "metadata.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Validate,
    Diagnose,
    Estimate,
    Sensitivity,
    Simulate,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Diagnose => "diagnose",
            Command::Estimate => "estimate",
            Command::Sensitivity => "sensitivity",
            Command::Simulate => "simulate",
        }
    }

    /// Last roadmap step the command executes.
    fn last_step(self) -> usize {
        match self {
            Command::Validate => 2,
            Command::Diagnose => 3,
            Command::Estimate => 4,
            Command::Sensitivity => 5,
            Command::Simulate => 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Command,
    pub config: PathBuf,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

/// Early termination with an exit code.
struct Halt {
    code: i32,
    message: String,
}

impl Halt {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

#[derive(Serialize)]
struct Metadata<'a> {
    command: &'a str,
    config: String,
    started_unix_ms: u128,
    finished_unix_ms: u128,
    elapsed_seconds: f64,
    threads: Option<usize>,
    exit_code: i32,
}

fn unix_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0)
}

/// File name, header and rows of a CSV to write.
type Table = (String, Vec<String>, Vec<Vec<String>>);

struct Run<'a> {
    inv: &'a Invocation,
    cfg: RunConfig,
    report: Report,
    csvs: Vec<Table>,
    dataset_warnings: Vec<Finding>,
}

/// Runs one command end to end and returns the process exit code.
pub fn run(inv: &Invocation) -> i32 {
    let started = unix_ms();
    let clock = Instant::now();
    let mut report = Report::new(inv.command.as_str(), inv.seed.unwrap_or(targeted_core::super_learner::DEFAULT_SEED));
    let code = match RunConfig::load(&inv.config) {
        Err(e) => {
            report.error = Some(e.to_string());
            report.steps.block_after(0);
            report.steps.step_0_question.status = Status::Failed;
            EXIT_USAGE
        }
        Ok(mut cfg) => {
            if let Some(seed) = inv.seed {
                cfg.seed = seed;
            }
            report.seed = cfg.seed;
            let mut run = Run {
                inv,
                cfg,
                report,
                csvs: Vec::new(),
                dataset_warnings: Vec::new(),
            };
            let code = match run.execute() {
                Ok(()) => EXIT_OK,
                Err(h) => {
                    run.report.error = Some(h.message);
                    h.code
                }
            };
            report = run.report;
            if let Err(e) = write_tables(&inv.out, &run.csvs) {
                eprintln!("error: {e}");
                return EXIT_USAGE;
            }
            code
        }
    };
    report.exit_code = code;
    if let Some(msg) = &report.error {
        eprintln!("error: {msg}");
    }
    let meta = Metadata {
        command: inv.command.as_str(),
        config: inv.config.display().to_string(),
        started_unix_ms: started,
        finished_unix_ms: unix_ms(),
        elapsed_seconds: clock.elapsed().as_secs_f64(),
        threads: inv.threads,
        exit_code: code,
    };
    let written = write_json(&inv.out.join(REPORT_FILE), &report).and_then(|()| write_json(&inv.out.join(METADATA_FILE), &meta));
    if let Err(e) = written {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    code
}

fn write_tables(out: &Path, csvs: &[Table]) -> Result<(), IoError> {
    for (name, header, rows) in csvs {
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        write_csv(&out.join(name), &header, rows)?;
    }
    Ok(())
}

fn cell<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn file_stem(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

/// Exit code for a core error raised while loading or preparing data.
fn data_error_code(e: &CoreError) -> i32 {
    match e {
        CoreError::Cell { .. } | CoreError::UnknownColumn(_) | CoreError::UnmappedLevel { .. } => EXIT_VALIDATION,
        _ => EXIT_USAGE,
    }
}

fn data_error_code_name(e: &CoreError) -> &'static str {
    match e {
        CoreError::Cell { .. } => "BAD_CELL",
        CoreError::UnknownColumn(_) => UNKNOWN_COLUMN,
        CoreError::UnmappedLevel { .. } => "UNMAPPED_LEVEL",
        _ => "INVALID_DATA",
    }
}

impl Run<'_> {
    fn table(&mut self, name: String, header: &[&str], rows: Vec<Vec<String>>) {
        self.csvs.push((name, header.iter().map(|s| s.to_string()).collect(), rows));
    }

    fn execute(&mut self) -> Result<(), Halt> {
        let steps = &mut self.report.steps;
        steps.step_0_question = QuestionStep {
            status: Status::Ok,
            question: self.cfg.question.clone(),
        };
        match self.inv.command {
            Command::Simulate => self.simulate(),
            Command::Sensitivity if self.cfg.sensitivity.report.is_some() => self.sensitivity_from_report(),
            cmd => {
                let result = self.analysis(cmd.last_step());
                if let Err(h) = &result {
                    if h.code == EXIT_USAGE && self.report.steps.step_1_statistical_model.status == Status::Skipped {
                        self.report.steps.step_1_statistical_model.status = Status::Failed;
                        self.report.steps.block_after(1);
                    }
                }
                result
            }
        }
    }

    /// Loads, recodes and dichotomizes the data as configured.
    fn load_data(&mut self) -> Result<Dataset, Halt> {
        let data = self
            .cfg
            .data
            .clone()
            .ok_or_else(|| Halt::new(EXIT_USAGE, "missing [data] section"))?;
        let model = &mut self.report.steps.step_1_statistical_model;
        model.data_path = Some(data.path.display().to_string());
        model.columns = data.columns.clone();
        let path = relative_to(&self.inv.config, &data.path);
        let fail_data = |model: &mut ModelStep, e: &CoreError| {
            model.status = Status::Failed;
            model.validation = Some(ValidationReport {
                errors: vec![Finding::new(data_error_code_name(e), None, e.to_string())],
                ..ValidationReport::default()
            });
            Halt::new(data_error_code(e), e.to_string())
        };
        let mut ds = match read_dataset(&path, &data.columns) {
            Ok(ds) => ds,
            Err(IoError::Data { source, .. }) => return Err(fail_data(model, &source)),
            Err(e) => return Err(Halt::new(EXIT_USAGE, e.to_string())),
        };
        model.rows = Some(ds.n());
        for (column, mapping) in &self.cfg.analysis.recode {
            ds = ds.recode_categories(column, mapping).map_err(|e| fail_data(model, &e))?;
            model.recoded.push(column.clone());
        }
        let mut warnings = Vec::new();
        if let Some(dose) = &self.cfg.treatment.dichotomize_dose {
            let (d, w) = ds.dichotomize_treatment(dose).map_err(|e| fail_data(model, &e))?;
            ds = d;
            warnings = w;
            model.treatment_definition = Some(format!("{dose}_any = 1 if {dose} > 0, else 0"));
        }
        if let Some(t) = ds.treatment() {
            model.treatment_definition.get_or_insert_with(|| format!("binary column `{}`", t.name()));
        }
        self.dataset_warnings = warnings;
        Ok(ds)
    }

    fn analysis(&mut self, last_step: usize) -> Result<(), Halt> {
        let ds = self.load_data()?;
        let adjustment = self.cfg.analysis.adjustment_set.clone();

        // Step 1: validation against the declared statistical model.
        let (prepared, mut validation) = ds.prepare(&adjustment);
        validation.warnings.extend(std::mem::take(&mut self.dataset_warnings));
        let timing: Vec<Finding> = validation.errors.iter().filter(|f| f.code == TIMING_VIOLATION).cloned().collect();
        let model = &mut self.report.steps.step_1_statistical_model;
        let ok = validation.is_ok();
        model.validation = Some(validation);
        let Some(ds) = prepared.filter(|_| ok) else {
            model.status = Status::Failed;
            self.report.steps.step_3_identification.timing = timing;
            self.report.steps.block_after(1);
            return Err(Halt::new(EXIT_VALIDATION, "data validation failed; see step_1_statistical_model.validation"));
        };
        model.complete_rows = Some(ds.n());
        model.status = Status::Ok;

        // Step 2: estimand.
        let estimand = &mut self.report.steps.step_2_causal_estimand;
        estimand.status = Status::Ok;
        estimand.outcome = ds.outcome().map(|c| c.name().to_string());
        estimand.treatment = ds.treatment().map(|c| c.name().to_string());
        estimand.adjustment_set = adjustment.clone();
        if last_step < 3 {
            return Ok(());
        }

        self.identification(&ds)?;
        if last_step < 4 {
            return Ok(());
        }

        let result = self.estimation(&ds, &adjustment)?;
        if last_step < 5 {
            return Ok(());
        }
        self.interpretation(result.rd.estimate, result.rd.se, (result.rd.lower, result.rd.upper), "inline estimation")
    }

    fn identification(&mut self, ds: &Dataset) -> Result<(), Halt> {
        let step = &mut self.report.steps.step_3_identification;
        step.status = Status::Ok;
        step.notes.push(format!(
            "timing check passed: all {} adjustment column(s) are measured at baseline",
            self.cfg.analysis.adjustment_set.len()
        ));
        if let Some(dose) = ds.dose() {
            let name = dose.name().to_string();
            match crude_dose_table(ds, &name, &self.cfg.analysis.dose_edges) {
                Ok(bins) => {
                    let rows = bins
                        .iter()
                        .map(|b| {
                            vec![
                                b.label.clone(),
                                cell(b.lower),
                                cell(b.upper),
                                b.n.to_string(),
                                b.events.to_string(),
                                cell(b.proportion),
                            ]
                        })
                        .collect();
                    step.dose_table = Some(bins);
                    self.csvs.push(("dose_table.csv".into(), DOSE_HEADER.map(String::from).to_vec(), rows));
                }
                Err(e) => return Err(Halt::new(EXIT_USAGE, format!("dose table: {e}"))),
            }
        }
        let step = &mut self.report.steps.step_3_identification;
        if self.cfg.analysis.stratifiers.is_empty() {
            step.notes.push("no stratifiers checked".into());
        }
        let mut zero = Vec::new();
        for stratifier in &self.cfg.analysis.stratifiers {
            let table = positivity_table(ds, stratifier).map_err(|e| Halt::new(EXIT_USAGE, format!("stratifier: {e}")))?;
            let rows = table
                .cells
                .iter()
                .map(|c| {
                    vec![
                        c.level.clone(),
                        c.n_control.to_string(),
                        c.n_treated.to_string(),
                        table.zero_cells.contains(&c.level).to_string(),
                    ]
                })
                .collect();
            self.csvs.push((
                format!("positivity_{}.csv", file_stem(stratifier)),
                POSITIVITY_HEADER.map(String::from).to_vec(),
                rows,
            ));
            zero.extend(table.zero_cells.iter().map(|l| format!("{stratifier}={l}")));
            step.positivity.push(table);
        }
        let treated = ds.treatment().and_then(|t| t.numeric()).map(|v| v.iter().filter(|x| **x == Some(1.0)).count());
        if let Some(t) = treated {
            if t == 0 || t == ds.n() {
                zero.push(format!("all {} analysis rows fall in one treatment arm", ds.n()));
            }
        }
        if !zero.is_empty() {
            step.status = Status::Failed;
            step.hint = Some(
                "merge sparse categories with [analysis.recode] (e.g. pool adjacent age groups) so that every level has \
                 treated and control subjects, or restrict the target population"
                    .into(),
            );
            self.report.steps.block_after(3);
            return Err(Halt::new(
                EXIT_IDENTIFICATION,
                format!("positivity concern: empty treatment arm in {}", zero.join(", ")),
            ));
        }
        Ok(())
    }

    fn estimation(&mut self, ds: &Dataset, adjustment: &[String]) -> Result<TmleResult, Halt> {
        let cfg = self.cfg.tmle_config().map_err(|e| Halt::new(EXIT_USAGE, e.to_string()))?;
        let fail = |report: &mut Report, stage: &str, code: i32, e: &dyn std::fmt::Display| {
            let step = &mut report.steps.step_4_estimation;
            step.status = Status::Failed;
            step.error = Some(StageError {
                stage: stage.into(),
                message: e.to_string(),
            });
            report.steps.block_after(4);
            Halt::new(code, format!("estimation failed at stage `{stage}`: {e}"))
        };
        let data = ds.analysis_data(adjustment).map_err(|e| fail(&mut self.report, "design", EXIT_ESTIMATION, &e))?;
        let n = data.n();
        let g_bound = resolve_g_bound(n, cfg.g_bound).map_err(|e| fail(&mut self.report, "truncation_bound", EXIT_USAGE, &e))?;
        self.report.steps.step_4_estimation.settings = Some(EstimationSettings {
            q_library: cfg.q_library.iter().map(ToString::to_string).collect(),
            g_library: cfg.g_library.iter().map(ToString::to_string).collect(),
            folds: cfg.folds,
            stratify_folds: cfg.stratify,
            seed: cfg.seed,
            loss: cfg.loss.as_str().into(),
            g_bound,
            g_bound_source: if cfg.g_bound.is_some() { "configured" } else { "5 / (sqrt(n) ln n)" }.into(),
            q_bound: cfg.q_bound,
            meta_learner: META_LEARNER.into(),
        });
        let folds = make_folds(n, cfg.folds, cfg.seed, cfg.stratify.then_some(("outcome", data.y.as_slice())))
            .map_err(|e| fail(&mut self.report, "fold_construction", EXIT_USAGE, &e))?;
        let nuisances = tmle::fit_nuisances(&data, &cfg.q_library, &cfg.g_library, &folds, Some(g_bound), cfg.q_bound, cfg.loss)
            .map_err(|e| fail(&mut self.report, "nuisance_estimation", EXIT_ESTIMATION, &e))?;
        let (h1, h0) = tmle::clever_covariates(&data.a, &nuisances.g_values)
            .map_err(|e| fail(&mut self.report, "targeting", EXIT_ESTIMATION, &e))?;
        let qb = nuisances.q_bound;
        let q_init: Vec<f64> = (0..n)
            .map(|i| (if data.a[i] == 1.0 { nuisances.q1[i] } else { nuisances.q0[i] }).clamp(qb, 1.0 - qb))
            .collect();
        let fluctuation = tmle::fluctuate(&q_init, &h1, &h0, &data.y)
            .map_err(|e| fail(&mut self.report, "targeting", EXIT_ESTIMATION, &e))?;
        let result = tmle::estimate(&data.y, &data.a, &nuisances, &fluctuation)
            .map_err(|e| fail(&mut self.report, "inference", EXIT_ESTIMATION, &e))?;
        let overlap = overlap_summary(&nuisances.g_raw, &data.a)
            .map_err(|e| fail(&mut self.report, "propensity_diagnostics", EXIT_ESTIMATION, &e))?;
        let rows = overlap
            .bins
            .iter()
            .map(|b| vec![b.lower.to_string(), b.upper.to_string(), b.n_control.to_string(), b.n_treated.to_string()])
            .collect();
        self.table("overlap.csv".into(), &OVERLAP_HEADER, rows);

        let baseline = self.cfg.baseline.as_ref().map(|b| {
            let description = format!("main-terms logistic regression of the outcome on `{}` and {:?}", b.dose, b.columns);
            match tmle::parametric_baseline(ds, &b.columns, &b.dose) {
                Ok(fit) => BaselineSection {
                    description,
                    fit: Some(fit),
                    error: None,
                },
                Err(e) => BaselineSection {
                    description,
                    fit: None,
                    error: Some(e.to_string()),
                },
            }
        });

        let step = &mut self.report.steps.step_4_estimation;
        step.status = Status::Ok;
        step.result = Some(EstimationResult::from(&result));
        step.super_learner = Some(SuperLearners {
            q: (&nuisances.q).into(),
            g: (&nuisances.g).into(),
        });
        step.propensity_overlap = Some(overlap);
        step.baseline = baseline;
        Ok(result)
    }

    fn interpretation(&mut self, psi: f64, se: f64, ci: (f64, f64), source: &str) -> Result<(), Halt> {
        let grid = self.cfg.sensitivity.grid.clone().unwrap_or_else(|| default_grid(psi, se));
        let step = &mut self.report.steps.step_5_interpretation;
        step.source = Some(source.into());
        let curve = match causal_gap_curve(psi, se, ci, &grid) {
            Ok(c) => c,
            Err(e) => {
                step.status = Status::Failed;
                return Err(Halt::new(EXIT_USAGE, format!("sensitivity: {e}")));
            }
        };
        let rows = curve
            .rows
            .iter()
            .map(|r| {
                [r.delta, r.delta_se_units, r.estimate, r.lower, r.upper]
                    .iter()
                    .map(ToString::to_string)
                    .collect()
            })
            .collect();
        step.status = Status::Ok;
        step.summary = Some(interpretation_summary(&curve));
        step.sensitivity = Some(curve);
        self.table("sensitivity.csv".into(), &SENSITIVITY_HEADER, rows);
        Ok(())
    }

    fn sensitivity_from_report(&mut self) -> Result<(), Halt> {
        let rel = self.cfg.sensitivity.report.clone().expect("checked by caller");
        let path = relative_to(&self.inv.config, &rel);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Halt::new(EXIT_USAGE, format!("cannot read prior report {}: {e}", path.display())))?;
        let prior: Report = serde_json::from_str(&text)
            .map_err(|e| Halt::new(EXIT_USAGE, format!("invalid prior report {}: {e}", path.display())))?;
        let estimation = &prior.steps.step_4_estimation;
        let Some(result) = estimation.result.as_ref().filter(|_| estimation.status == Status::Ok) else {
            self.report.steps.block_after(0);
            return Err(Halt::new(
                EXIT_USAGE,
                format!("prior report {} has no estimation section; estimate first", path.display()),
            ));
        };
        let rd = result.rd;
        let question = std::mem::take(&mut self.report.steps.step_0_question);
        self.report.steps = prior.steps;
        if self.report.steps.step_0_question.question.is_empty() {
            self.report.steps.step_0_question = question;
        }
        self.interpretation(rd.estimate, rd.se, (rd.lower, rd.upper), &format!("prior report {}", rel.display()))
    }

    fn simulate(&mut self) -> Result<(), Halt> {
        let sim_cfg = self
            .cfg
            .simulation
            .clone()
            .ok_or_else(|| Halt::new(EXIT_USAGE, "missing [simulation] section"))?;
        let dgp = self.cfg.dgp().map_err(|e| Halt::new(EXIT_USAGE, e.to_string()))?;
        let estimators = self.cfg.sim_estimators().map_err(|e| Halt::new(EXIT_USAGE, e.to_string()))?;
        let base_seed = sim_cfg.base_seed.unwrap_or(self.cfg.seed);
        let truth = sim::true_psi(&dgp, sim_cfg.mc_size, sim_cfg.oracle_seed).map_err(|e| Halt::new(EXIT_USAGE, e.to_string()))?;
        let results = replicate_parallel(&dgp, sim_cfg.n, sim_cfg.reps, base_seed, &estimators, &truth, self.inv.threads)
            .map_err(|e| Halt::new(EXIT_ESTIMATION, e.to_string()))?;
        let summary = sim::summarize(sim_cfg.n, base_seed, &estimators, &results, &truth)
            .map_err(|e| Halt::new(EXIT_ESTIMATION, e.to_string()))?;

        let rows = summary
            .estimators
            .iter()
            .map(|s| {
                vec![
                    s.name.clone(),
                    s.kind.as_str().into(),
                    s.reps.to_string(),
                    s.mean_estimate.to_string(),
                    s.mean_bias.to_string(),
                    cell(s.sd),
                    cell(s.mean_se),
                    cell(s.coverage),
                    cell(s.mean_ci_width),
                    cell(s.max_abs_mean_ic),
                    truth.rd.to_string(),
                ]
            })
            .collect();
        self.table("simulation_summary.csv".into(), &SIMULATION_HEADER, rows);
        let mut rep_rows = Vec::new();
        for (r, row) in results.iter().enumerate() {
            for (est, e) in estimators.iter().zip(row) {
                rep_rows.push(vec![
                    r.to_string(),
                    base_seed.wrapping_add(r as u64).to_string(),
                    est.name.clone(),
                    e.estimate.to_string(),
                    cell(e.se),
                    cell(e.lower),
                    cell(e.upper),
                    cell(e.mean_ic),
                ]);
            }
        }
        self.table("replicates.csv".into(), &REPLICATES_HEADER, rep_rows);
        self.report.simulation = Some(SimulationSection {
            dgp: describe_dgp(&sim_cfg.dgp, &dgp),
            truth,
            summary,
        });
        Ok(())
    }
}

fn describe_dgp(label: &str, dgp: &DgpSpec) -> String {
    format!("{label}: logit g0 = {}; logit Q0 = {}", dgp.treatment, dgp.outcome)
}

/// Replicates `base_seed, base_seed + 1, ...` in parallel; results are in replicate order.
pub fn replicate_parallel(
    dgp: &DgpSpec,
    n: usize,
    reps: usize,
    base_seed: u64,
    estimators: &[EstimatorConfig],
    truth: &OracleTruth,
    threads: Option<usize>,
) -> Result<Vec<Vec<ReplicateEstimate>>, CoreError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| CoreError::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| {
        (0..reps as u64)
            .into_par_iter()
            .map(|r| sim::run_replicate(dgp, n, base_seed.wrapping_add(r), estimators, truth))
            .collect()
    })
}

/// Parallel counterpart of the sequential replication study.
pub fn replicate_study_parallel(
    dgp: &DgpSpec,
    n: usize,
    reps: usize,
    base_seed: u64,
    estimators: &[EstimatorConfig],
    truth: &OracleTruth,
    threads: Option<usize>,
) -> Result<ReplicationSummary, CoreError> {
    let results = replicate_parallel(dgp, n, reps, base_seed, estimators, truth, threads)?;
    sim::summarize(n, base_seed, estimators, &results, truth)
}
