//! Cohort tables with declared column roles and timing.
//!
//! A [`Dataset`] is built from raw text cells (the companion crate reads the
//! CSV) against a list of [`ColumnSpec`]s. Role and timing metadata are never
//! inferred from the data. Validation enforces that the adjustment set only
//! contains baseline covariates and that outcome and treatment are binary;
//! rows with missing analysis values are dropped and counted.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Role {
    Outcome,
    Treatment,
    Covariate,
    Dose,
    Id,
    Ignore,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Timing {
    Baseline,
    PostTreatment,
    PostOutcome,
}

impl Timing {
    pub fn as_str(self) -> &'static str {
        match self {
            Timing::Baseline => "baseline",
            Timing::PostTreatment => "post_treatment",
            Timing::PostOutcome => "post_outcome",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Kind {
    Binary,
    Continuous,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct ColumnSpec {
    pub name: String,
    pub role: Role,
    pub timing: Timing,
    pub kind: Kind,
}

impl ColumnSpec {
    pub fn new(name: &str, role: Role, timing: Timing, kind: Kind) -> Self {
        Self {
            name: name.to_string(),
            role,
            timing,
            kind,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    /// Binary and continuous columns.
    Numeric(Vec<Option<f64>>),
    /// Levels are kept in first-appearance order.
    Categorical {
        levels: Vec<String>,
        codes: Vec<Option<usize>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub spec: ColumnSpec,
    pub data: ColumnData,
}

impl Column {
    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn is_missing(&self, row: usize) -> bool {
        match &self.data {
            ColumnData::Numeric(v) => v[row].is_none(),
            ColumnData::Categorical { codes, .. } => codes[row].is_none(),
        }
    }

    pub fn numeric(&self) -> Option<&[Option<f64>]> {
        match &self.data {
            ColumnData::Numeric(v) => Some(v),
            ColumnData::Categorical { .. } => None,
        }
    }

    pub fn levels(&self) -> Option<&[String]> {
        match &self.data {
            ColumnData::Categorical { levels, .. } => Some(levels),
            ColumnData::Numeric(_) => None,
        }
    }

    fn select(&self, idx: &[usize]) -> Column {
        let data = match &self.data {
            ColumnData::Numeric(v) => ColumnData::Numeric(idx.iter().map(|&i| v[i]).collect()),
            ColumnData::Categorical { levels, codes } => {
                let picked: Vec<Option<usize>> = idx.iter().map(|&i| codes[i]).collect();
                // Re-derive first-appearance order over the kept rows.
                let mut remap: Vec<Option<usize>> = alloc::vec![None; levels.len()];
                let mut new_levels = Vec::new();
                let codes = picked
                    .iter()
                    .map(|c| {
                        c.map(|c| {
                            *remap[c].get_or_insert_with(|| {
                                new_levels.push(levels[c].clone());
                                new_levels.len() - 1
                            })
                        })
                    })
                    .collect();
                ColumnData::Categorical {
                    levels: new_levels,
                    codes,
                }
            }
        };
        Column {
            spec: self.spec.clone(),
            data,
        }
    }
}

/// One validation finding.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Finding {
    pub code: String,
    pub column: Option<String>,
    pub message: String,
}

impl Finding {
    pub fn new(code: &str, column: Option<&str>, message: String) -> Self {
        Self {
            code: code.to_string(),
            column: column.map(ToString::to_string),
            message,
        }
    }
}

pub const TIMING_VIOLATION: &str = "TIMING_VIOLATION";
pub const NOT_BINARY: &str = "NOT_BINARY";
pub const UNKNOWN_COLUMN: &str = "UNKNOWN_COLUMN";
pub const ROLE_CONFLICT: &str = "ROLE_CONFLICT";
pub const NO_TREATMENT: &str = "NO_TREATMENT";
pub const MISSING_VALUES: &str = "MISSING_VALUES";
pub const NO_COMPLETE_ROWS: &str = "NO_COMPLETE_ROWS";
pub const NO_TREATED: &str = "NO_TREATED";

#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ValidationReport {
    pub errors: Vec<Finding>,
    pub warnings: Vec<Finding>,
    pub rows_dropped: usize,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn has_error(&self, code: &str) -> bool {
        self.errors.iter().any(|f| f.code == code)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<Column>,
    n: usize,
}

/// Outcome, treatment and expanded adjustment covariates, ready for estimation.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisData {
    pub y: Vec<f64>,
    pub a: Vec<f64>,
    pub w: Matrix,
}

impl AnalysisData {
    pub fn new(y: Vec<f64>, a: Vec<f64>, w: Matrix) -> Result<Self> {
        if y.len() != a.len() || w.nrows() != y.len() {
            return Err(Error::Dimension(format!(
                "y has {} rows, a {}, w {}",
                y.len(),
                a.len(),
                w.nrows()
            )));
        }
        for (name, v) in [("outcome", &y), ("treatment", &a)] {
            if let Some(i) = v.iter().position(|&x| x != 0.0 && x != 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} value {} at row {} is not binary",
                    v[i],
                    i + 1
                )));
            }
        }
        Ok(Self { y, a, w })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }
}

fn check_specs(specs: &[ColumnSpec]) -> Result<()> {
    let count = |r: Role| specs.iter().filter(|s| s.role == r).count();
    if count(Role::Outcome) != 1 {
        return Err(Error::ColumnSpec(format!(
            "exactly one outcome column required, found {}",
            count(Role::Outcome)
        )));
    }
    let (t, d) = (count(Role::Treatment), count(Role::Dose));
    if t > 1 || d > 1 || (t == 0 && d == 0) {
        return Err(Error::ColumnSpec(format!(
            "need exactly one treatment column or one dose column (found {t} treatment, {d} dose)"
        )));
    }
    for (i, s) in specs.iter().enumerate() {
        if specs[..i].iter().any(|o| o.name == s.name) {
            return Err(Error::ColumnSpec(format!("duplicate column `{}`", s.name)));
        }
    }
    Ok(())
}

fn parse_cell(raw: &str, spec: &ColumnSpec, row: usize) -> Result<Option<f64>> {
    let s = raw.trim();
    if s.is_empty() {
        return Ok(None);
    }
    let v: f64 = s.parse().map_err(|_| Error::Cell {
        row,
        column: spec.name.clone(),
        message: format!("cannot parse `{s}` as a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Cell {
            row,
            column: spec.name.clone(),
            message: format!("non-finite value `{s}`"),
        });
    }
    if spec.kind == Kind::Binary && v != 0.0 && v != 1.0 {
        return Err(Error::Cell {
            row,
            column: spec.name.clone(),
            message: format!("value {s} is not binary (expected 0 or 1)"),
        });
    }
    Ok(Some(v))
}

impl Dataset {
    /// Builds typed columns from a header and raw text rows.
    ///
    /// Only columns named in `specs` are kept (`ignore` columns are not
    /// parsed). Rows are numbered from 1 in error messages.
    pub fn from_records<S: AsRef<str>>(
        header: &[S],
        rows: &[Vec<S>],
        specs: &[ColumnSpec],
    ) -> Result<Self> {
        check_specs(specs)?;
        let mut columns = Vec::new();
        for spec in specs {
            let Some(pos) = header.iter().position(|h| h.as_ref().trim() == spec.name) else {
                return Err(Error::UnknownColumn(spec.name.clone()));
            };
            if spec.role == Role::Ignore {
                continue;
            }
            let cell = |r: &Vec<S>, i: usize| -> Result<String> {
                r.get(pos).map(|c| c.as_ref().to_string()).ok_or(Error::Cell {
                    row: i + 1,
                    column: spec.name.clone(),
                    message: "row is too short".into(),
                })
            };
            let data = match spec.kind {
                Kind::Categorical => {
                    let mut levels: Vec<String> = Vec::new();
                    let mut codes = Vec::with_capacity(rows.len());
                    for (i, r) in rows.iter().enumerate() {
                        let raw = cell(r, i)?;
                        let s = raw.trim();
                        if s.is_empty() {
                            codes.push(None);
                            continue;
                        }
                        let code = match levels.iter().position(|l| l == s) {
                            Some(c) => c,
                            None => {
                                levels.push(s.to_string());
                                levels.len() - 1
                            }
                        };
                        codes.push(Some(code));
                    }
                    ColumnData::Categorical { levels, codes }
                }
                Kind::Binary | Kind::Continuous => {
                    let mut v = Vec::with_capacity(rows.len());
                    for (i, r) in rows.iter().enumerate() {
                        v.push(parse_cell(&cell(r, i)?, spec, i + 1)?);
                    }
                    ColumnData::Numeric(v)
                }
            };
            columns.push(Column {
                spec: spec.clone(),
                data,
            });
        }
        if rows.is_empty() {
            return Err(Error::NoData);
        }
        Ok(Self {
            columns,
            n: rows.len(),
        })
    }

    /// Builds a dataset from already typed columns.
    pub fn from_columns(columns: Vec<Column>) -> Result<Self> {
        let n = columns.first().map_or(0, |c| match &c.data {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Categorical { codes, .. } => codes.len(),
        });
        if n == 0 {
            return Err(Error::NoData);
        }
        for c in &columns {
            let len = match &c.data {
                ColumnData::Numeric(v) => v.len(),
                ColumnData::Categorical { codes, .. } => codes.len(),
            };
            if len != n {
                return Err(Error::Dimension(format!("column `{}` has {len} rows, expected {n}", c.name())));
            }
        }
        let specs: Vec<ColumnSpec> = columns.iter().map(|c| c.spec.clone()).collect();
        check_specs(&specs)?;
        Ok(Self { columns, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn specs(&self) -> Vec<ColumnSpec> {
        self.columns.iter().map(|c| c.spec.clone()).collect()
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        self.columns
            .iter()
            .find(|c| c.spec.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    fn by_role(&self, role: Role) -> Option<&Column> {
        self.columns.iter().find(|c| c.spec.role == role)
    }

    pub fn outcome(&self) -> Option<&Column> {
        self.by_role(Role::Outcome)
    }

    pub fn treatment(&self) -> Option<&Column> {
        self.by_role(Role::Treatment)
    }

    pub fn dose(&self) -> Option<&Column> {
        self.by_role(Role::Dose)
    }

    /// Values of a numeric column; errors on missing cells.
    pub fn numeric_values(&self, name: &str) -> Result<Vec<f64>> {
        let col = self.column(name)?;
        let v = col
            .numeric()
            .ok_or_else(|| Error::InvalidArgument(format!("column `{name}` is categorical")))?;
        v.iter()
            .enumerate()
            .map(|(i, x)| {
                x.ok_or(Error::Cell {
                    row: i + 1,
                    column: name.to_string(),
                    message: "missing value".into(),
                })
            })
            .collect()
    }

    /// Findings for the analysis defined by `adjustment_set`, without modifying the data.
    pub fn validate(&self, adjustment_set: &[String]) -> ValidationReport {
        let mut report = ValidationReport::default();
        let mut analysis_cols: Vec<&Column> = Vec::new();

        match self.outcome() {
            Some(c) => {
                if c.spec.kind != Kind::Binary {
                    report.errors.push(Finding::new(
                        NOT_BINARY,
                        Some(c.name()),
                        format!("outcome `{}` must be binary", c.name()),
                    ));
                }
                analysis_cols.push(c);
            }
            None => report.errors.push(Finding::new(
                UNKNOWN_COLUMN,
                None,
                "no outcome column".into(),
            )),
        }
        match self.treatment() {
            Some(c) => {
                if c.spec.kind != Kind::Binary {
                    report.errors.push(Finding::new(
                        NOT_BINARY,
                        Some(c.name()),
                        format!("treatment `{}` must be binary", c.name()),
                    ));
                }
                analysis_cols.push(c);
            }
            None => report.errors.push(Finding::new(
                NO_TREATMENT,
                None,
                "no binary treatment column; dichotomize the dose column first".into(),
            )),
        }
        for name in adjustment_set {
            let Ok(c) = self.column(name) else {
                report.errors.push(Finding::new(
                    UNKNOWN_COLUMN,
                    Some(name),
                    format!("adjustment column `{name}` is not declared"),
                ));
                continue;
            };
            if c.spec.role != Role::Covariate {
                report.errors.push(Finding::new(
                    ROLE_CONFLICT,
                    Some(name),
                    format!("adjustment column `{name}` has role {:?}, expected covariate", c.spec.role),
                ));
            }
            if c.spec.timing != Timing::Baseline {
                report.errors.push(Finding::new(
                    TIMING_VIOLATION,
                    Some(name),
                    format!(
                        "adjustment column `{name}` is measured {}; a confounder must precede treatment and outcome",
                        c.spec.timing.as_str()
                    ),
                ));
            }
            analysis_cols.push(c);
        }

        let incomplete: Vec<usize> = (0..self.n)
            .filter(|&i| analysis_cols.iter().any(|c| c.is_missing(i)))
            .collect();
        if !incomplete.is_empty() {
            let listed: Vec<String> = incomplete.iter().map(|i| (i + 1).to_string()).collect();
            report.warnings.push(Finding::new(
                MISSING_VALUES,
                None,
                format!(
                    "{} row(s) with missing analysis values dropped: {}",
                    incomplete.len(),
                    listed.join(", ")
                ),
            ));
            report.rows_dropped = incomplete.len();
            if incomplete.len() == self.n {
                report.errors.push(Finding::new(
                    NO_COMPLETE_ROWS,
                    None,
                    "no row is complete on the analysis columns".into(),
                ));
            }
        }
        report
    }

    /// Drops rows with a missing value in any of `columns`.
    pub fn complete_cases(&self, columns: &[&str]) -> Result<(Dataset, usize)> {
        let cols: Vec<&Column> = columns.iter().map(|c| self.column(c)).collect::<Result<_>>()?;
        let keep: Vec<usize> = (0..self.n)
            .filter(|&i| !cols.iter().any(|c| c.is_missing(i)))
            .collect();
        if keep.is_empty() {
            return Err(Error::NoData);
        }
        let dropped = self.n - keep.len();
        Ok((self.select_rows(&keep), dropped))
    }

    /// Validates and, when clean, returns the complete-case dataset.
    pub fn prepare(&self, adjustment_set: &[String]) -> (Option<Dataset>, ValidationReport) {
        let report = self.validate(adjustment_set);
        if !report.is_ok() {
            return (None, report);
        }
        let mut cols: Vec<&str> = Vec::new();
        cols.extend(self.outcome().map(Column::name));
        cols.extend(self.treatment().map(Column::name));
        cols.extend(adjustment_set.iter().map(String::as_str));
        match self.complete_cases(&cols) {
            Ok((ds, _)) => (Some(ds), report),
            Err(_) => (None, report),
        }
    }

    pub fn select_rows(&self, idx: &[usize]) -> Dataset {
        Dataset {
            columns: self.columns.iter().map(|c| c.select(idx)).collect(),
            n: idx.len(),
        }
    }

    /// Adds a binary treatment column equal to 1 iff the dose is positive.
    ///
    /// The new column is named `<dose>_any`; the dose column keeps its dose role.
    pub fn dichotomize_treatment(&self, dose_column: &str) -> Result<(Dataset, Vec<Finding>)> {
        if let Some(t) = self.treatment() {
            return Err(Error::ColumnSpec(format!(
                "dataset already has treatment column `{}`",
                t.name()
            )));
        }
        let dose = self.column(dose_column)?;
        let values = dose.numeric().ok_or_else(|| {
            Error::InvalidArgument(format!("dose column `{dose_column}` is not numeric"))
        })?;
        let mut treated = Vec::with_capacity(self.n);
        for (i, v) in values.iter().enumerate() {
            match v {
                Some(d) if *d < 0.0 => {
                    return Err(Error::Cell {
                        row: i + 1,
                        column: dose_column.to_string(),
                        message: format!("negative dose {d}"),
                    })
                }
                Some(d) => treated.push(Some(if *d > 0.0 { 1.0 } else { 0.0 })),
                None => treated.push(None),
            }
        }
        let mut warnings = Vec::new();
        if !treated.contains(&Some(1.0)) {
            warnings.push(Finding::new(
                NO_TREATED,
                Some(dose_column),
                "no treated subjects (every dose is zero)".into(),
            ));
        }
        let mut columns = self.columns.clone();
        if let Some(c) = columns.iter_mut().find(|c| c.spec.name == dose_column) {
            c.spec.role = Role::Dose;
        }
        columns.push(Column {
            spec: ColumnSpec {
                name: format!("{dose_column}_any"),
                role: Role::Treatment,
                timing: dose.spec.timing,
                kind: Kind::Binary,
            },
            data: ColumnData::Numeric(treated),
        });
        Ok((Dataset { columns, n: self.n }, warnings))
    }

    /// Replaces categorical levels according to `mapping` (old level -> new level).
    pub fn recode_categories(&self, column: &str, mapping: &BTreeMap<String, String>) -> Result<Dataset> {
        let col = self.column(column)?;
        let ColumnData::Categorical { levels, codes } = &col.data else {
            return Err(Error::InvalidArgument(format!("column `{column}` is not categorical")));
        };
        let mut new_levels: Vec<String> = Vec::new();
        let mut remap = Vec::with_capacity(levels.len());
        for level in levels {
            let target = mapping.get(level).ok_or_else(|| Error::UnmappedLevel {
                column: column.to_string(),
                level: level.clone(),
            })?;
            let idx = match new_levels.iter().position(|l| l == target) {
                Some(i) => i,
                None => {
                    new_levels.push(target.clone());
                    new_levels.len() - 1
                }
            };
            remap.push(idx);
        }
        let new_codes = codes.iter().map(|c| c.map(|c| remap[c])).collect();
        let mut columns = self.columns.clone();
        let target = columns.iter_mut().find(|c| c.spec.name == column).expect("column exists");
        target.data = ColumnData::Categorical {
            levels: new_levels,
            codes: new_codes,
        };
        Ok(Dataset { columns, n: self.n })
    }

    /// Numeric design over `columns`; categoricals become indicators against
    /// their first level. Errors on missing cells.
    pub fn design(&self, columns: &[String]) -> Result<Matrix> {
        let mut cols: Vec<Vec<f64>> = Vec::new();
        let mut names = Vec::new();
        for name in columns {
            let c = self.column(name)?;
            match &c.data {
                ColumnData::Numeric(_) => {
                    cols.push(self.numeric_values(name)?);
                    names.push(name.clone());
                }
                ColumnData::Categorical { levels, codes } => {
                    if let Some(i) = codes.iter().position(Option::is_none) {
                        return Err(Error::Cell {
                            row: i + 1,
                            column: name.clone(),
                            message: "missing value".into(),
                        });
                    }
                    for (l, level) in levels.iter().enumerate().skip(1) {
                        cols.push(codes.iter().map(|c| f64::from(u8::from(*c == Some(l)))).collect());
                        names.push(format!("{name}={level}"));
                    }
                }
            }
        }
        if cols.is_empty() {
            return Ok(Matrix::empty(self.n));
        }
        Matrix::from_columns(&cols, names)
    }

    /// Outcome, treatment and adjustment design of a validated dataset.
    pub fn analysis_data(&self, adjustment_set: &[String]) -> Result<AnalysisData> {
        let y_col = self.outcome().ok_or_else(|| Error::ColumnSpec("no outcome column".into()))?;
        let a_col = self
            .treatment()
            .ok_or_else(|| Error::ColumnSpec("no treatment column".into()))?;
        let y = self.numeric_values(&y_col.spec.name.clone())?;
        let a = self.numeric_values(&a_col.spec.name.clone())?;
        let w = self.design(adjustment_set)?;
        AnalysisData::new(y, a, w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn specs() -> Vec<ColumnSpec> {
        vec![
            ColumnSpec::new("y", Role::Outcome, Timing::PostTreatment, Kind::Binary),
            ColumnSpec::new("a", Role::Treatment, Timing::Baseline, Kind::Binary),
            ColumnSpec::new("bmi", Role::Covariate, Timing::Baseline, Kind::Continuous),
            ColumnSpec::new("pph", Role::Covariate, Timing::PostOutcome, Kind::Binary),
            ColumnSpec::new("age", Role::Covariate, Timing::Baseline, Kind::Categorical),
        ]
    }

    fn rows(cells: &[[&str; 5]]) -> Vec<Vec<String>> {
        cells.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect()
    }

    fn header() -> Vec<String> {
        ["y", "a", "bmi", "pph", "age"].iter().map(|s| s.to_string()).collect()
    }

    fn small() -> Dataset {
        let r = rows(&[
            ["1", "1", "22.5", "0", "31-35"],
            ["0", "0", "", "1", "16-20"],
            ["0", "1", "30.1", "0", "31-35"],
            ["1", "0", "27.0", "0", "21-25"],
        ]);
        Dataset::from_records(&header(), &r, &specs()).unwrap()
    }

    #[test]
    fn levels_in_first_appearance_order() {
        let ds = small();
        assert_eq!(ds.n(), 4);
        assert_eq!(ds.column("age").unwrap().levels().unwrap(), &["31-35", "16-20", "21-25"]);
    }

    #[test]
    fn header_only_is_no_data() {
        let r: Vec<Vec<String>> = Vec::new();
        assert_eq!(Dataset::from_records(&header(), &r, &specs()), Err(Error::NoData));
    }

    #[test]
    fn non_binary_treatment_names_row() {
        let r = rows(&[["1", "1", "22", "0", "x"], ["0", "2", "23", "0", "x"]]);
        match Dataset::from_records(&header(), &r, &specs()) {
            Err(Error::Cell { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "a");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unparseable_cell_and_missing_header() {
        let r = rows(&[["1", "1", "abc", "0", "x"]]);
        assert!(matches!(
            Dataset::from_records(&header(), &r, &specs()),
            Err(Error::Cell { row: 1, .. })
        ));
        let mut s = specs();
        s.push(ColumnSpec::new("height", Role::Covariate, Timing::Baseline, Kind::Continuous));
        let r = rows(&[["1", "1", "2", "0", "x"]]);
        assert_eq!(
            Dataset::from_records(&header(), &r, &s),
            Err(Error::UnknownColumn("height".into()))
        );
    }

    #[test]
    fn spec_invariants_enforced() {
        let mut s = specs();
        s[1].role = Role::Outcome;
        let r = rows(&[["1", "1", "2", "0", "x"]]);
        assert!(matches!(Dataset::from_records(&header(), &r, &s), Err(Error::ColumnSpec(_))));
    }

    #[test]
    fn post_outcome_adjustment_is_timing_violation() {
        let ds = small();
        let report = ds.validate(&["bmi".into(), "pph".into()]);
        assert!(report.has_error(TIMING_VIOLATION));
        assert_eq!(report.errors.len(), 1);
        assert_eq!(report.errors[0].column.as_deref(), Some("pph"));
    }

    #[test]
    fn missing_bmi_drops_one_row() {
        let ds = small();
        let adj = vec!["bmi".to_string(), "age".to_string()];
        let report = ds.validate(&adj);
        assert!(report.is_ok());
        assert_eq!(report.rows_dropped, 1);
        assert_eq!(report.warnings[0].code, MISSING_VALUES);
        assert!(report.warnings[0].message.contains(": 2"));
        let (clean, report2) = ds.prepare(&adj);
        assert_eq!(report, report2);
        assert_eq!(clean.unwrap().n(), ds.n() - report.rows_dropped);
        // idempotent
        assert_eq!(ds.validate(&adj), report);
    }

    #[test]
    fn complete_baseline_set_is_clean() {
        let ds = small();
        let report = ds.validate(&["age".into()]);
        assert!(report.errors.is_empty());
        assert!(report.warnings.is_empty());
        assert_eq!(report.rows_dropped, 0);
    }

    #[test]
    fn unknown_and_role_conflicts() {
        let ds = small();
        let report = ds.validate(&["nope".into(), "a".into()]);
        assert!(report.has_error(UNKNOWN_COLUMN));
        assert!(report.has_error(ROLE_CONFLICT));
    }

    fn dose_dataset(doses: &[&str]) -> Dataset {
        let specs = vec![
            ColumnSpec::new("y", Role::Outcome, Timing::PostTreatment, Kind::Binary),
            ColumnSpec::new("dose", Role::Dose, Timing::Baseline, Kind::Continuous),
        ];
        let header = vec!["y".to_string(), "dose".to_string()];
        let r: Vec<Vec<String>> = doses.iter().map(|d| vec!["0".to_string(), d.to_string()]).collect();
        Dataset::from_records(&header, &r, &specs).unwrap()
    }

    #[test]
    fn dichotomize_any_dose() {
        let ds = dose_dataset(&["0", "0.5", "51"]);
        assert!(ds.validate(&[]).has_error(NO_TREATMENT));
        let (d, warnings) = ds.dichotomize_treatment("dose").unwrap();
        assert!(warnings.is_empty());
        assert_eq!(d.numeric_values("dose_any").unwrap(), vec![0.0, 1.0, 1.0]);
        assert_eq!(d.treatment().unwrap().name(), "dose_any");
        assert_eq!(d.dose().unwrap().name(), "dose");
        assert!(d.validate(&[]).is_ok());
    }

    #[test]
    fn dichotomize_all_zero_warns_and_negative_errors() {
        let (d, warnings) = dose_dataset(&["0", "0"]).dichotomize_treatment("dose").unwrap();
        assert_eq!(d.numeric_values("dose_any").unwrap(), vec![0.0, 0.0]);
        assert_eq!(warnings[0].code, NO_TREATED);
        assert!(matches!(
            dose_dataset(&["1", "-2"]).dichotomize_treatment("dose"),
            Err(Error::Cell { row: 2, .. })
        ));
    }

    #[test]
    fn recode_merges_levels() {
        let ds = small();
        let mut m = BTreeMap::new();
        m.insert("16-20".to_string(), "16-30".to_string());
        m.insert("21-25".to_string(), "16-30".to_string());
        m.insert("31-35".to_string(), "31-35".to_string());
        let r = ds.recode_categories("age", &m).unwrap();
        assert_eq!(r.column("age").unwrap().levels().unwrap(), &["31-35", "16-30"]);
        m.remove("21-25");
        assert!(matches!(ds.recode_categories("age", &m), Err(Error::UnmappedLevel { .. })));
    }

    #[test]
    fn identity_recode_is_noop() {
        let ds = small();
        let m: BTreeMap<String, String> = ["31-35", "16-20", "21-25"]
            .iter()
            .map(|l| (l.to_string(), l.to_string()))
            .collect();
        assert_eq!(ds.recode_categories("age", &m).unwrap(), ds);
    }

    #[test]
    fn design_expands_categoricals() {
        let ds = small();
        let (clean, _) = ds.complete_cases(&["bmi"]).unwrap();
        let m = clean.design(&["age".into(), "bmi".into()]).unwrap();
        assert_eq!(m.names(), &["age=21-25", "bmi"]);
        assert_eq!(m.row(2), &[1.0, 27.0]);
    }
}
