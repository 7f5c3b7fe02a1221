//! Delimited-text ingestion and JSON reports.
//!
//! Every input file needs a header row. Unit order in the data file is the
//! canonical order used by adjacency matrices, partitions and reports.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{RarError, Result};
use crate::glm::{fit_glm, Dataset, Family, GlmFit, GlmOptions};
use crate::graph::{build_adjacency, AdjacencyMatrix};
use crate::inference::{
    fit_stratified, region_lr_tests, region_morans_i, LrTest, RegionAnalysis, RegionResult, SelectionTrace, Z_95,
};
use crate::partition::Partition;

/// Schema tag written into every region report.
pub const REPORT_SCHEMA: &str = "rar-report/1";
/// Schema tag of simulation summaries.
pub const SIMULATION_SCHEMA: &str = "rar-simulation/1";

/// Column name that marks the optional offset column of a data file.
pub const OFFSET_COLUMN: &str = "offset";

fn open(path: &Path, delimiter: u8) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| RarError::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn csv_error(path: &Path, e: csv::Error) -> RarError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => RarError::io(path, io),
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => RarError::Parse {
            line,
            message: format!("expected {expected_len} fields, found {len}"),
        },
        csv::ErrorKind::Utf8 { .. } => RarError::Parse {
            line,
            message: "invalid UTF-8".to_string(),
        },
        other => RarError::Parse {
            line,
            message: format!("{other:?}"),
        },
    }
}

fn headers(path: &Path, reader: &mut csv::Reader<File>) -> Result<Vec<String>> {
    let h = reader.headers().map_err(|e| csv_error(path, e))?;
    Ok(h.iter().map(str::to_string).collect())
}

fn number(cell: &str, column: &str, line: usize) -> Result<f64> {
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(RarError::Parse {
            line,
            message: format!("column `{column}`: `{cell}` is not a finite number"),
        }),
    }
}

/// Reads `unit_id, y, [offset], exposure, covariates...`.
///
/// The offset column is recognised by the header name `offset`. Poisson
/// data require it; Gaussian data must not have it.
pub fn load_dataset(path: impl AsRef<Path>, family: Family, delimiter: u8) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = open(path, delimiter)?;
    let names = headers(path, &mut reader)?;
    let has_offset = names.get(2).is_some_and(|n| n.eq_ignore_ascii_case(OFFSET_COLUMN));
    let exposure_col = if has_offset { 3 } else { 2 };
    if names.len() <= exposure_col {
        return Err(RarError::Parse {
            line: 1,
            message: format!(
                "expected columns unit_id, y, [offset,] exposure, covariates...; found {}",
                names.join(", ")
            ),
        });
    }
    if family == Family::Poisson && !has_offset {
        return Err(RarError::validation(
            "the poisson family needs an `offset` column (expected counts) after y",
        ));
    }
    let n_cov = names.len() - exposure_col - 1;
    let mut ids = Vec::new();
    let mut y = Vec::new();
    let mut offset = Vec::new();
    let mut exposure = Vec::new();
    let mut covs: Vec<Vec<f64>> = vec![Vec::new(); n_cov];
    let mut seen: HashMap<String, usize> = HashMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let id = record[0].to_string();
        if id.is_empty() {
            return Err(RarError::Parse {
                line,
                message: "empty unit_id".to_string(),
            });
        }
        if let Some(first) = seen.insert(id.clone(), line) {
            return Err(RarError::Parse {
                line,
                message: format!("duplicate unit_id `{id}` (first seen on line {first})"),
            });
        }
        ids.push(id);
        y.push(number(&record[1], &names[1], line)?);
        if has_offset {
            offset.push(number(&record[2], &names[2], line)?);
        }
        exposure.push(number(&record[exposure_col], &names[exposure_col], line)?);
        for (j, col) in covs.iter_mut().enumerate() {
            let c = exposure_col + 1 + j;
            col.push(number(&record[c], &names[c], line)?);
        }
    }
    let covariates = names[exposure_col + 1..].iter().cloned().zip(covs).collect();
    let data = Dataset::new(ids, y, has_offset.then_some(offset), exposure, covariates)?
        .with_exposure_name(names[exposure_col].clone());
    data.validate_for(family)?;
    Ok(data)
}

fn two_columns(path: &Path, delimiter: u8, what: &str) -> Result<Vec<(usize, String, String)>> {
    let mut reader = open(path, delimiter)?;
    let names = headers(path, &mut reader)?;
    if names.len() != 2 {
        return Err(RarError::Parse {
            line: 1,
            message: format!("{what} file needs exactly two columns, found {}", names.len()),
        });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        rows.push((line, record[0].to_string(), record[1].to_string()));
    }
    Ok(rows)
}

/// Reads an undirected edge list `unit_id_a, unit_id_b`.
pub fn load_adjacency(path: impl AsRef<Path>, unit_ids: &[String], delimiter: u8) -> Result<AdjacencyMatrix> {
    let path = path.as_ref();
    let rows = two_columns(path, delimiter, "adjacency")?;
    let known: HashSet<&str> = unit_ids.iter().map(String::as_str).collect();
    for (line, a, b) in &rows {
        if a == b {
            return Err(RarError::Parse {
                line: *line,
                message: format!("self-loop at unit `{a}`"),
            });
        }
        for id in [a, b] {
            if !known.contains(id.as_str()) {
                return Err(RarError::Parse {
                    line: *line,
                    message: format!("unknown unit_id `{id}`"),
                });
            }
        }
    }
    let edges: Vec<(String, String)> = rows.into_iter().map(|(_, a, b)| (a, b)).collect();
    build_adjacency(&edges, unit_ids)
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| RarError::io(path, e))
}

fn writer(path: &Path, delimiter: u8) -> Result<csv::Writer<File>> {
    Ok(csv::WriterBuilder::new().delimiter(delimiter).from_writer(create(path)?))
}

fn write_rows<I, R>(path: &Path, delimiter: u8, header: [&str; 2], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = writer(path, delimiter)?;
    let fail = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(io) => RarError::io(path, io),
        other => RarError::io(path, std::io::Error::other(format!("{other:?}"))),
    };
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(row).map_err(fail)?;
    }
    w.flush().map_err(|e| RarError::io(path, e))
}

/// Writes the edges of `w` as `unit_id_a, unit_id_b` rows.
pub fn write_adjacency(w: &AdjacencyMatrix, unit_ids: &[String], path: impl AsRef<Path>, delimiter: u8) -> Result<()> {
    let rows = w.edges().iter().map(|&(a, b)| [unit_ids[a].clone(), unit_ids[b].clone()]);
    write_rows(path.as_ref(), delimiter, ["unit_id_a", "unit_id_b"], rows)
}

/// Writes `unit_id, region` rows in unit order.
pub fn write_labels(partition: &Partition, unit_ids: &[String], path: impl AsRef<Path>, delimiter: u8) -> Result<()> {
    if partition.len() != unit_ids.len() {
        return Err(RarError::validation("partition and unit ids differ in length"));
    }
    let rows = unit_ids
        .iter()
        .zip(partition.labels())
        .map(|(id, l)| [id.clone(), l.to_string()]);
    write_rows(path.as_ref(), delimiter, ["unit_id", "region"], rows)
}

/// Reads `unit_id, region` rows covering every unit exactly once, in any
/// order. Region values may be any non-negative integers; they are mapped
/// to `0..K` in increasing order.
pub fn read_labels(path: impl AsRef<Path>, unit_ids: &[String], delimiter: u8) -> Result<Partition> {
    let path = path.as_ref();
    let rows = two_columns(path, delimiter, "labels")?;
    let index: HashMap<&str, usize> = unit_ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let mut raw: Vec<Option<usize>> = vec![None; unit_ids.len()];
    for (line, id, label) in &rows {
        let &i = index.get(id.as_str()).ok_or_else(|| RarError::Parse {
            line: *line,
            message: format!("unknown unit_id `{id}`"),
        })?;
        let l: usize = label.parse().map_err(|_| RarError::Parse {
            line: *line,
            message: format!("region `{label}` is not a non-negative integer"),
        })?;
        if raw[i].replace(l).is_some() {
            return Err(RarError::Parse {
                line: *line,
                message: format!("unit_id `{id}` labelled twice"),
            });
        }
    }
    let missing: Vec<&str> = raw
        .iter()
        .zip(unit_ids)
        .filter(|(l, _)| l.is_none())
        .map(|(_, id)| id.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(RarError::validation(format!(
            "labels file has no region for: {}",
            missing.join(", ")
        )));
    }
    let raw: Vec<usize> = raw.into_iter().flatten().collect();
    let distinct: Vec<usize> = raw.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let labels = raw.iter().map(|l| distinct.binary_search(l).unwrap()).collect();
    Partition::new(labels)
}

/// Provenance of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub tool_version: String,
    pub command: String,
    pub seed: Option<u64>,
    pub restarts: Option<usize>,
    pub k_range: Option<(usize, usize)>,
    /// Seconds since the Unix epoch, recorded only on request so that
    /// repeated runs produce identical files.
    pub created_unix: Option<u64>,
}

impl RunMetadata {
    pub fn new(command: impl Into<String>) -> Self {
        RunMetadata {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.into(),
            seed: None,
            restarts: None,
            k_range: None,
            created_unix: None,
        }
    }
}

/// Coefficients of the single pooled model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalSummary {
    pub coef_names: Vec<String>,
    pub beta: Vec<f64>,
    pub se: Vec<f64>,
    pub exposure_beta: f64,
    pub exposure_se: f64,
    pub exposure_ci95: (f64, f64),
    pub loglik: f64,
    pub converged: bool,
    pub n_iter: usize,
}

impl GlobalSummary {
    pub fn from_fit(fit: &GlmFit) -> Self {
        let b = fit.beta[1];
        let se = fit.se(1);
        GlobalSummary {
            coef_names: fit.coef_names.clone(),
            beta: fit.beta.clone(),
            se: (0..fit.n_coef()).map(|j| fit.se(j)).collect(),
            exposure_beta: b,
            exposure_se: se,
            exposure_ci95: (b - Z_95 * se, b + Z_95 * se),
            loglik: fit.loglik,
            converged: fit.converged,
            n_iter: fit.n_iter,
        }
    }
}

/// Per-unit output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitRecord {
    pub unit_id: String,
    pub region: usize,
    /// Standardized exposure DFBETA from the pooled fit.
    pub d: Option<f64>,
}

/// Everything a region analysis produces, in serializable form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema: String,
    pub metadata: RunMetadata,
    pub family: Family,
    pub exposure_name: String,
    pub covariate_names: Vec<String>,
    pub n_units: usize,
    /// Requested K chosen by BIC (or the partition's K for a supplied
    /// partition).
    pub chosen_k: usize,
    /// Number of regions in the reported partition.
    pub realized_k: usize,
    pub selection: Option<SelectionTrace>,
    pub global: GlobalSummary,
    pub sigma_d: Option<f64>,
    /// The deviations were all equal and the similarity graph fell back to
    /// the bare adjacency.
    pub spatial_fallback: bool,
    pub ncut: Option<f64>,
    pub contiguous: Option<bool>,
    pub regions: Vec<RegionResult>,
    pub lr_tests: Vec<LrTest>,
    /// Moran's I of the residuals within each region.
    pub morans_i: Vec<Option<f64>>,
    pub units: Vec<UnitRecord>,
    pub warnings: Vec<String>,
}

impl ReportDocument {
    /// Report for a segmentation run.
    pub fn from_analysis(analysis: &RegionAnalysis, data: &Dataset, metadata: RunMetadata, warnings: Vec<String>) -> Self {
        let partition = &analysis.segmentation.partition;
        let d = &analysis.influence.deviation;
        let mut warnings = warnings;
        if analysis.influence.spatial_fallback {
            warnings.push("all deviations are identical; segmentation used the bare adjacency".to_string());
        }
        if !analysis.influence.global.converged {
            warnings.push("the pooled fit did not converge".to_string());
        }
        ReportDocument {
            schema: REPORT_SCHEMA.to_string(),
            metadata,
            family: analysis.family,
            exposure_name: data.exposure_name().to_string(),
            covariate_names: data.covariate_names().to_vec(),
            n_units: data.len(),
            chosen_k: analysis.trace.chosen_k,
            realized_k: partition.k(),
            selection: Some(analysis.trace.clone()),
            global: GlobalSummary::from_fit(&analysis.influence.global),
            sigma_d: Some(d.sigma_d),
            spatial_fallback: analysis.influence.spatial_fallback,
            ncut: Some(analysis.segmentation.ncut),
            contiguous: Some(partition.contiguous()),
            regions: analysis.stratified.regions.clone(),
            lr_tests: analysis.lr_tests.clone(),
            morans_i: analysis.morans_i.clone(),
            units: data
                .unit_ids()
                .iter()
                .zip(partition.labels())
                .zip(&d.d)
                .map(|((id, &region), &d)| UnitRecord {
                    unit_id: id.clone(),
                    region,
                    d: Some(d),
                })
                .collect(),
            warnings,
        }
    }

    /// Report for region-wise estimation on a supplied partition. Moran's I
    /// needs an adjacency and is omitted without one.
    pub fn for_partition(
        data: &Dataset,
        partition: &Partition,
        family: Family,
        w: Option<&AdjacencyMatrix>,
        opts: &GlmOptions,
        metadata: RunMetadata,
    ) -> Result<Self> {
        let global = fit_glm(data, family, opts)?;
        let stratified = fit_stratified(data, partition, family, opts)?;
        let lr_tests = region_lr_tests(data, partition, family, opts).unwrap_or_default();
        let morans_i = match w {
            Some(w) => region_morans_i(&stratified, partition, w),
            None => vec![None; partition.k()],
        };
        let mut warnings = Vec::new();
        for r in &stratified.regions {
            if let RegionResult::Failed { region, reason, .. } = r {
                warnings.push(format!("region {region} not estimated: {reason}"));
            }
        }
        Ok(ReportDocument {
            schema: REPORT_SCHEMA.to_string(),
            metadata,
            family,
            exposure_name: data.exposure_name().to_string(),
            covariate_names: data.covariate_names().to_vec(),
            n_units: data.len(),
            chosen_k: partition.k(),
            realized_k: partition.k(),
            selection: None,
            global: GlobalSummary::from_fit(&global),
            sigma_d: None,
            spatial_fallback: false,
            ncut: None,
            contiguous: w.map(|w| partition.is_contiguous_under(w)),
            regions: stratified.regions,
            lr_tests,
            morans_i,
            units: data
                .unit_ids()
                .iter()
                .zip(partition.labels())
                .map(|(id, &region)| UnitRecord {
                    unit_id: id.clone(),
                    region,
                    d: None,
                })
                .collect(),
            warnings,
        })
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn render(&self) -> Result<String> {
        render_json(self)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let doc: ReportDocument = parse_json(text)?;
        check_schema(&doc.schema, REPORT_SCHEMA)?;
        Ok(doc)
    }
}

fn render_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| RarError::Numerical(format!("cannot serialize report: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| RarError::Parse {
        line: e.line(),
        message: e.to_string(),
    })
}

fn check_schema(found: &str, expected: &str) -> Result<()> {
    if found != expected {
        return Err(RarError::validation(format!(
            "unsupported schema `{found}`, expected `{expected}`"
        )));
    }
    Ok(())
}

/// Simulation summary as written by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub schema: String,
    pub metadata: RunMetadata,
    pub result: crate::simulation::SimResult,
}

impl SimulationReport {
    pub fn new(metadata: RunMetadata, result: crate::simulation::SimResult) -> Self {
        SimulationReport {
            schema: SIMULATION_SCHEMA.to_string(),
            metadata,
            result,
        }
    }

    pub fn render(&self) -> Result<String> {
        render_json(self)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let doc: SimulationReport = parse_json(text)?;
        check_schema(&doc.schema, SIMULATION_SCHEMA)?;
        Ok(doc)
    }
}

/// Writes `text` to `path`, creating or truncating it.
pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    let mut f = create(path)?;
    f.write_all(text.as_bytes()).map_err(|e| RarError::io(path, e))
}

pub fn write_report(doc: &ReportDocument, path: impl AsRef<Path>) -> Result<()> {
    write_text(path, &doc.render()?)
}

pub fn read_report(path: impl AsRef<Path>) -> Result<ReportDocument> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| RarError::io(path, e))?;
    ReportDocument::parse(&text)
}
