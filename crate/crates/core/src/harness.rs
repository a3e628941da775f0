//! Parameter sweeps over scheme, granularity, energy scale and workload,
//! with CSV and JSON report output.

use std::io::{Read, Write};
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{Codec, CodecError, SchemeConfig, SchemeKind};
use crate::memsim::{Aggregate, MemoryArray, WriteRecord};
use crate::model::{DisturbanceModel, EnergyModel, ModelConfig, ModelError};
use crate::workloads::{generate, open_trace, GeneratorSpec, SpecError, TraceError};

pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("scheme {label:?}: {source}")]
    Scheme { label: String, source: CodecError },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("workload {name:?}: {source}")]
    Generator { name: String, source: SpecError },
    #[error("workload {name:?}, record {index}: {source}")]
    Trace { name: String, index: u64, source: TraceError },
    #[error("workload {0:?} needs exactly one of `generator` or `trace`")]
    WorkloadSource(String),
    #[error("sweep has no workloads")]
    NoWorkloads,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Workload {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
}

impl Workload {
    pub fn generated(name: impl Into<String>, spec: GeneratorSpec) -> Workload {
        Workload { name: name.into(), generator: Some(spec), trace: None }
    }

    pub fn from_trace(name: impl Into<String>, path: impl Into<PathBuf>) -> Workload {
        Workload { name: name.into(), generator: None, trace: Some(path.into()) }
    }

    pub fn load(&self) -> Result<Vec<WriteRecord>, HarnessError> {
        match (&self.generator, &self.trace) {
            (Some(spec), None) => Ok(generate(spec)
                .map_err(|source| HarnessError::Generator { name: self.name.clone(), source })?
                .collect()),
            (None, Some(path)) => {
                let err = |index, source| HarnessError::Trace { name: self.name.clone(), index, source };
                let (_, stream) = open_trace(path).map_err(|e| err(0, e))?;
                stream.enumerate().map(|(i, r)| r.map_err(|e| err(i as u64, e))).collect()
            }
            _ => Err(HarnessError::WorkloadSource(self.name.clone())),
        }
    }
}

/// A sweep grid. Scheme labels carrying a granularity (`wlcrc-16`) are used
/// as given; bare names (`wlcrc`) are crossed with `granularities`, or use
/// the scheme's default when that list is empty. Each `k_sweep` entry adds a
/// baseline row that records line compressibility at that depth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub schemes: Vec<String>,
    pub granularities: Vec<u32>,
    /// Threshold for the multi-objective scheme.
    pub threshold: Option<f64>,
    pub k_sweep: Vec<u8>,
    /// Factors applied to the S3/S4 SET energy.
    pub energy_scales: Vec<f64>,
    pub workloads: Vec<Workload>,
    /// Seeds disturbance sampling.
    pub seed: u64,
    pub model: ModelConfig,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            schemes: vec!["baseline".into(), "wlcrc-16".into()],
            granularities: Vec::new(),
            threshold: None,
            k_sweep: Vec::new(),
            energy_scales: vec![1.0],
            workloads: Vec::new(),
            seed: 0,
            model: ModelConfig::default(),
        }
    }
}

impl SweepSpec {
    pub fn from_toml_str(s: &str) -> Result<SweepSpec, toml::de::Error> {
        toml::from_str(s)
    }

    /// Scheme configurations in grid order.
    pub fn configs(&self) -> Result<Vec<SchemeConfig>, HarnessError> {
        let mut out = Vec::new();
        for label in &self.schemes {
            let err = |source| HarnessError::Scheme { label: label.clone(), source };
            let has_granularity = label.rsplit_once('-').is_some_and(|(_, g)| g.parse::<u32>().is_ok());
            let mut cfgs = if has_granularity {
                vec![SchemeConfig::parse(label).map_err(err)?]
            } else {
                let kind: SchemeKind = label.parse().map_err(err)?;
                if self.granularities.is_empty() {
                    vec![SchemeConfig::new(kind, kind.default_granularity()).map_err(err)?]
                } else {
                    self.granularities
                        .iter()
                        .map(|&g| SchemeConfig::new(kind, g))
                        .collect::<Result<_, _>>()
                        .map_err(err)?
                }
            };
            if let Some(t) = self.threshold {
                for c in cfgs.iter_mut().filter(|c| c.kind == SchemeKind::WlcrcMultiObjective) {
                    *c = c.with_threshold(t).map_err(err)?;
                }
            }
            out.extend(cfgs);
        }
        for &k in &self.k_sweep {
            let label = format!("baseline k={k}");
            let cfg = SchemeConfig::new(SchemeKind::Baseline, SchemeKind::Baseline.default_granularity())
                .and_then(|c| c.with_k(k))
                .map_err(|source| HarnessError::Scheme { label, source })?;
            out.push(cfg);
        }
        Ok(out)
    }

    pub fn grid_size(&self) -> Result<usize, HarnessError> {
        Ok(self.configs()?.len() * self.energy_scales.len() * self.workloads.len())
    }
}

/// One grid cell's averages per write request. Energies are pJ per line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub scheme: String,
    pub granularity: u32,
    pub k: Option<u8>,
    pub threshold: Option<f64>,
    pub energy_scale: f64,
    pub workload: String,
    pub writes: u64,
    pub avg_total_pj: f64,
    pub avg_data_pj: f64,
    pub avg_aux_pj: f64,
    pub avg_flag_pj: f64,
    pub avg_updated_cells: f64,
    pub avg_disturb_expected: f64,
    pub avg_disturb_sampled: f64,
    pub compression_rate: f64,
}

pub const CSV_COLUMNS: [&str; 15] = [
    "scheme",
    "granularity",
    "k",
    "threshold",
    "energy_scale",
    "workload",
    "writes",
    "avg_total_pj",
    "avg_data_pj",
    "avg_aux_pj",
    "avg_flag_pj",
    "avg_updated_cells",
    "avg_disturb_expected",
    "avg_disturb_sampled",
    "compression_rate",
];

impl SweepRow {
    pub fn from_aggregate(cfg: &SchemeConfig, energy_scale: f64, workload: &str, agg: &Aggregate) -> SweepRow {
        SweepRow {
            scheme: cfg.kind.name().to_string(),
            granularity: cfg.granularity,
            k: cfg.k,
            threshold: (cfg.kind == SchemeKind::WlcrcMultiObjective).then_some(cfg.threshold),
            energy_scale,
            workload: workload.to_string(),
            writes: agg.writes,
            avg_total_pj: agg.avg_total_pj(),
            avg_data_pj: agg.avg_data_pj(),
            avg_aux_pj: agg.avg_aux_pj(),
            avg_flag_pj: agg.avg_flag_pj(),
            avg_updated_cells: agg.avg_updated_cells(),
            avg_disturb_expected: agg.avg_disturb_expected(),
            avg_disturb_sampled: agg.avg_disturb_sampled(),
            compression_rate: agg.compression_rate(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub format_version: u32,
    /// The sweep that produced these rows.
    pub config: Option<SweepSpec>,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn new(config: Option<SweepSpec>, rows: Vec<SweepRow>) -> SweepReport {
        SweepReport { format_version: REPORT_FORMAT_VERSION, config, rows }
    }
}

/// Runs `records` through one scheme on a fresh array.
pub fn run_single(
    cfg: &SchemeConfig,
    model: &EnergyModel,
    dmodel: &DisturbanceModel,
    seed: u64,
    records: &[WriteRecord],
) -> Result<Aggregate, CodecError> {
    let mut arr = MemoryArray::new(Codec::new(*cfg)?, model.clone(), dmodel.clone(), seed);
    Ok(arr
        .run_trace(records.iter().cloned().map(Ok::<_, std::convert::Infallible>))
        .unwrap_or_else(|e| match e.source {}))
}

/// Runs every grid cell, in parallel, and returns rows ordered by workload,
/// then scheme, then energy scale.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepReport, HarnessError> {
    if spec.workloads.is_empty() {
        return Err(HarnessError::NoWorkloads);
    }
    let configs = spec.configs()?;
    let (base_model, dmodel) = spec.model.build()?;
    let models: Vec<EnergyModel> = spec
        .energy_scales
        .iter()
        .map(|&s| base_model.with_scale_high(base_model.params().scale_high * s))
        .collect::<Result<_, _>>()?;
    let traces: Vec<Vec<WriteRecord>> = spec.workloads.iter().map(Workload::load).collect::<Result<_, _>>()?;

    let mut cells = Vec::new();
    for w in 0..spec.workloads.len() {
        for c in 0..configs.len() {
            for s in 0..models.len() {
                cells.push((w, c, s));
            }
        }
    }
    let rows = cells
        .into_par_iter()
        .map(|(w, c, s)| {
            let agg = run_single(&configs[c], &models[s], &dmodel, spec.seed, &traces[w])
                .map_err(|source| HarnessError::Scheme { label: configs[c].label(), source })?;
            Ok(SweepRow::from_aggregate(&configs[c], spec.energy_scales[s], &spec.workloads[w].name, &agg))
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    Ok(SweepReport::new(Some(spec.clone()), rows))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown report format {other:?} (expected csv or json)")),
        }
    }
}

/// Writes the rows as CSV (header always present) or the whole report as
/// pretty JSON.
pub fn emit_report(report: &SweepReport, format: ReportFormat, out: impl Write) -> Result<(), HarnessError> {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
            w.write_record(CSV_COLUMNS)?;
            for row in &report.rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        ReportFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, report)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

pub fn read_csv_rows(input: impl Read) -> Result<Vec<SweepRow>, HarnessError> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

pub fn read_json_report(input: impl Read) -> Result<SweepReport, HarnessError> {
    Ok(serde_json::from_reader(input)?)
}
