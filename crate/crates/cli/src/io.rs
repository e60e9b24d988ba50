//! File formats: CSV data and loadings, embedding sets, priors, groups and
//! the JSON documents the commands emit.

use std::fs;
use std::path::Path;

use priorimax_core::extraction::{AdequacyReport, DataTable};
use priorimax_core::index::{IndexComponents, PairSet};
use priorimax_core::model::{default_factor_labels, FactorModel, LoadingMatrix};
use priorimax_core::priors::PriorMatrix;
use priorimax_core::similarity::EmbeddingSet;
use priorimax_core::es::GenerationStats;
use priorimax_core::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;

pub const MODEL_VERSION: &str = "1";

/// Rotated loadings stored in a model file must match `unrotated × rotation`
/// to this tolerance.
pub const MODEL_CONSISTENCY_TOL: f64 = 1e-9;

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable document");
    s.push('\n');
    s
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> CliResult<DMatrix<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
        return Err(CliError::input(format!("{what}: row {} has {} entries, expected {ncols}", i + 1, r.len())));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(rows.len(), ncols, &flat))
}

fn parse_cell(cell: &str) -> Option<f64> {
    let t = cell.trim();
    if t.is_empty() || t.eq_ignore_ascii_case("na") || t.eq_ignore_ascii_case("nan") {
        return Some(f64::NAN);
    }
    t.parse().ok()
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    CliError::input(format!("{}: {e}", path.display()))
}

/// Raw observations: header row of variable names, one row per respondent.
/// Empty, `NA` and `NaN` cells are missing.
pub fn read_data_csv(path: &Path) -> CliResult<DataTable> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| csv_error(path, e))?;
    let names: Vec<String> = reader.headers().map_err(|e| csv_error(path, e))?.iter().map(String::from).collect();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        for (col, cell) in record.iter().enumerate() {
            let v = parse_cell(cell).ok_or_else(|| {
                CliError::input(format!(
                    "{}: line {line}, column {} (`{}`): cannot parse `{cell}` as a number",
                    path.display(),
                    col + 1,
                    names[col]
                ))
            })?;
            values.push(v);
        }
    }
    Ok(DataTable::new(names, values)?)
}

/// Loadings CSV: header row of factor labels (first cell labels the name
/// column), then one row per variable starting with its name.
pub fn read_loadings_csv(path: &Path) -> CliResult<LoadingMatrix> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| csv_error(path, e))?;
    let t = reader.headers().map_err(|e| csv_error(path, e))?.len().saturating_sub(1);
    let mut names = Vec::new();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        names.push(record.get(0).unwrap_or_default().to_string());
        let row = record
            .iter()
            .skip(1)
            .enumerate()
            .map(|(k, cell)| match parse_cell(cell) {
                Some(v) if v.is_finite() => Ok(v),
                _ => Err(CliError::input(format!(
                    "{}: line {line}, column {}: `{cell}` is not a finite number",
                    path.display(),
                    k + 2
                ))),
            })
            .collect::<CliResult<Vec<f64>>>()?;
        rows.push(row);
    }
    let values = matrix_from_rows(&rows, &path.display().to_string())?;
    if values.ncols() != t {
        return Err(CliError::input(format!("{}: header names {t} factors", path.display())));
    }
    let m = names.len();
    Ok(LoadingMatrix::new(values, vec![1.0; m], names)?)
}

pub fn loadings_csv(lm: &LoadingMatrix) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["variable".to_string()];
    header.extend(default_factor_labels(lm.factor_count()));
    w.write_record(&header).expect("in-memory write");
    for (i, name) in lm.variable_names().iter().enumerate() {
        let mut row = vec![name.clone()];
        row.extend(lm.values().row(i).iter().map(|v| v.to_string()));
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingFile {
    pub questions: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
}

/// JSON `{"questions", "vectors"}`, or CSV rows of question text followed
/// by vector components (no header).
pub fn read_embeddings(path: &Path) -> CliResult<EmbeddingSet> {
    let file: EmbeddingFile = if is_csv(path) {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_path(path)
            .map_err(|e| csv_error(path, e))?;
        let mut questions = Vec::new();
        let mut vectors = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| csv_error(path, e))?;
            let line = record.position().map_or(0, |p| p.line());
            questions.push(record.get(0).unwrap_or_default().to_string());
            let v = record
                .iter()
                .skip(1)
                .map(|c| {
                    c.trim().parse::<f64>().map_err(|_| {
                        CliError::input(format!("{}: line {line}: `{c}` is not a number", path.display()))
                    })
                })
                .collect::<CliResult<Vec<f64>>>()?;
            vectors.push(v);
        }
        EmbeddingFile { questions, vectors }
    } else {
        parse_json(path)?
    };
    EmbeddingSet::new(file.questions, file.vectors).map_err(|e| CliError::from(e).context(path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorFile {
    pub size: usize,
    pub entries: Vec<Vec<Option<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<RunManifest>,
}

impl PriorFile {
    pub fn from_prior(prior: &PriorMatrix, manifest: Option<RunManifest>) -> Self {
        Self {
            size: prior.size(),
            entries: prior.rows().map(<[_]>::to_vec).collect(),
            labels: prior.labels().map(<[_]>::to_vec),
            manifest,
        }
    }

    pub fn into_prior(self) -> CliResult<PriorMatrix> {
        if self.entries.len() != self.size {
            return Err(CliError::input(format!(
                "prior declares size {} but has {} rows",
                self.size,
                self.entries.len()
            )));
        }
        let prior = PriorMatrix::from_rows(self.entries)?;
        match self.labels {
            Some(labels) => Ok(prior.with_labels(labels)?),
            None => Ok(prior),
        }
    }
}

/// Prior as JSON or as CSV with empty cells for missing entries. A CSV
/// first row containing non-numeric text is taken as labels.
pub fn read_prior(path: &Path) -> CliResult<PriorMatrix> {
    let prior = if is_csv(path) {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| csv_error(path, e))?;
        let mut labels = None;
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| csv_error(path, e))?;
            let line = record.position().map_or(0, |p| p.line());
            let numeric = record.iter().all(|c| c.is_empty() || c.parse::<f64>().is_ok());
            if rows.is_empty() && labels.is_none() && !numeric {
                labels = Some(record.iter().map(String::from).collect::<Vec<_>>());
                continue;
            }
            let row = record
                .iter()
                .enumerate()
                .map(|(k, c)| {
                    if c.trim().is_empty() || c.trim().eq_ignore_ascii_case("na") {
                        Ok(None)
                    } else {
                        c.parse::<f64>().map(Some).map_err(|_| {
                            CliError::input(format!("{}: line {line}, column {}: `{c}` is not a number", path.display(), k + 1))
                        })
                    }
                })
                .collect::<CliResult<Vec<_>>>()?;
            rows.push(row);
        }
        PriorFile { size: rows.len(), entries: rows, labels, manifest: None }.into_prior()
    } else {
        parse_json::<PriorFile>(path)?.into_prior()
    };
    prior.map_err(|e| e.context(path.display()))
}

pub fn prior_csv(prior: &PriorMatrix) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    if let Some(labels) = prior.labels() {
        w.write_record(labels).expect("in-memory write");
    }
    for row in prior.rows() {
        w.write_record(row.iter().map(|e| e.map_or(String::new(), |v| v.to_string())))
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8")
}

/// Disjoint 1-based index groups, e.g. `[[1, 7, 9], [6, 10]]`.
pub fn read_groups(path: &Path) -> CliResult<Vec<Vec<usize>>> {
    parse_json(path)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexJson {
    pub tau: f64,
    pub theta: f64,
    pub v: f64,
}

impl From<IndexComponents> for IndexJson {
    fn from(c: IndexComponents) -> Self {
        Self { tau: c.tau, theta: c.theta, v: c.v }
    }
}

impl From<IndexJson> for IndexComponents {
    fn from(c: IndexJson) -> Self {
        IndexComponents { tau: c.tau, theta: c.theta, v: c.v }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: String,
    pub variable_names: Vec<String>,
    pub factor_count: usize,
    pub unrotated_loadings: Vec<Vec<f64>>,
    pub rotation: Vec<Vec<f64>>,
    pub rotated_loadings: Vec<Vec<f64>>,
    pub uniquenesses: Vec<f64>,
    pub method: String,
    pub index: Option<IndexJson>,
    #[serde(default)]
    pub manifest: Option<RunManifest>,
}

impl ModelFile {
    pub fn from_model(fm: &FactorModel, manifest: RunManifest) -> Self {
        Self {
            version: MODEL_VERSION.to_string(),
            variable_names: fm.loadings().variable_names().to_vec(),
            factor_count: fm.factor_count(),
            unrotated_loadings: rows_of(fm.unrotated().values()),
            rotation: rows_of(fm.rotation()),
            rotated_loadings: rows_of(fm.loadings().values()),
            uniquenesses: fm.uniquenesses().to_vec(),
            method: fm.method().to_string(),
            index: fm.index().copied().map(IndexJson::from),
            manifest: Some(manifest),
        }
    }

    /// Rebuilds the model, checking shapes, orthogonality and that the
    /// stored rotated loadings agree with `unrotated × rotation`.
    pub fn into_model(self) -> CliResult<FactorModel> {
        let unrotated = matrix_from_rows(&self.unrotated_loadings, "unrotated_loadings")?;
        let rotation = matrix_from_rows(&self.rotation, "rotation")?;
        let stored = matrix_from_rows(&self.rotated_loadings, "rotated_loadings")?;
        if unrotated.ncols() != self.factor_count {
            return Err(CliError::input(format!(
                "factor_count is {} but loadings have {} columns",
                self.factor_count,
                unrotated.ncols()
            )));
        }
        let m = self.variable_names.len();
        let lm = LoadingMatrix::new(unrotated, vec![1.0; m], self.variable_names)?;
        let fm = FactorModel::new(lm, self.uniquenesses)?.rotated(&rotation, self.method)?;
        if stored.shape() != fm.loadings().values().shape() {
            return Err(CliError::input("rotated_loadings has the wrong shape"));
        }
        let diff = priorimax_core::linalg::max_abs_diff(&stored, fm.loadings().values());
        if diff > MODEL_CONSISTENCY_TOL {
            return Err(CliError::input(format!(
                "rotated_loadings differ from unrotated_loadings x rotation by {diff:e}"
            )));
        }
        Ok(fm.with_index(self.index.map(IndexComponents::from)))
    }
}

pub fn read_model(path: &Path) -> CliResult<FactorModel> {
    parse_json::<ModelFile>(path)?.into_model().map_err(|e| e.context(path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdequacyFile {
    pub bartlett_chi2: f64,
    pub bartlett_df: usize,
    pub bartlett_p: f64,
    pub kmo_overall: f64,
    pub kmo_per_variable: Vec<f64>,
    pub manifest: RunManifest,
}

impl AdequacyFile {
    pub fn new(r: AdequacyReport, manifest: RunManifest) -> Self {
        Self {
            bartlett_chi2: r.bartlett_chi2,
            bartlett_df: r.bartlett_df,
            bartlett_p: r.bartlett_p,
            kmo_overall: r.kmo_overall,
            kmo_per_variable: r.kmo_per_variable,
            manifest,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexFile {
    pub tau: f64,
    pub theta: f64,
    pub v: f64,
    pub pairs: usize,
    pub manifest: RunManifest,
}

/// Columns `prior, loading_sim, lowess_x, lowess_y`; the curve columns are
/// left empty when no curve was fitted.
pub fn plot_csv(pairs: &PairSet, curve: Option<&[(f64, f64)]>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["prior", "loading_sim", "lowess_x", "lowess_y"]).expect("in-memory write");
    for (k, p) in pairs.elements().iter().enumerate() {
        let (cx, cy) = match curve.and_then(|c| c.get(k)) {
            Some(&(x, y)) => (x.to_string(), y.to_string()),
            None => (String::new(), String::new()),
        };
        w.write_record([p.prior.to_string(), p.loading_sim.to_string(), cx, cy]).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8")
}

pub fn trace_csv(trace: &[GenerationStats]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["generation", "best_v", "feasible_fraction", "wall_seconds"]).expect("in-memory write");
    for g in trace {
        w.write_record([
            g.generation.to_string(),
            g.best_value.to_string(),
            g.feasible_fraction.to_string(),
            g.elapsed_secs.map_or(String::new(), |s| format!("{s:.6}")),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8")
}
