//! File formats shared with the command-line tool.
//!
//! JSON documents:
//!
//! ```text
//! constellation: {"k", "provenance", "seed", "points": [{"re", "im"}, ...]}
//! weights:       {"k", "weights": [{"re", "im"}, ...], "achieved_dmin", "metric": "euclidean"}
//! mapping:       {"k", "label_of": [...], "achieved_cost", "metric": "hamming"}
//! ```
//!
//! CSV tables carry fixed headers, see the `*_HEADER` constants.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{SerCurve, SerRow};
use crate::constellation::{ComplexScalar, Constellation, Provenance, WeightVector};
use crate::error::{MbmError, Result};
use crate::optimizer::{BitMapping, TrialRecord};
use crate::stats::Histogram;

pub const TRACE_HEADER: &str = "trial,accepted,d_value";
pub const CURVE_HEADER: &str = "snr_db,errors,trials,rate,label";
pub const HISTOGRAM_HEADER: &str = "bin_left,bin_right,count,density";
pub const PDF_HEADER: &str = "d,pdf";

fn format_err(e: impl std::fmt::Display) -> MbmError {
    MbmError::Format(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointJson {
    pub re: f64,
    pub im: f64,
}

impl From<&ComplexScalar> for PointJson {
    fn from(c: &ComplexScalar) -> Self {
        PointJson { re: c.re, im: c.im }
    }
}

impl From<PointJson> for ComplexScalar {
    fn from(p: PointJson) -> Self {
        Complex64::new(p.re, p.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstellationFile {
    pub k: u32,
    pub provenance: String,
    pub seed: Option<u64>,
    pub points: Vec<PointJson>,
}

impl From<&Constellation> for ConstellationFile {
    fn from(c: &Constellation) -> Self {
        ConstellationFile {
            k: c.k(),
            provenance: c.provenance().name().to_owned(),
            seed: c.provenance().seed(),
            points: c.points().iter().map(PointJson::from).collect(),
        }
    }
}

impl TryFrom<ConstellationFile> for Constellation {
    type Error = MbmError;

    fn try_from(f: ConstellationFile) -> Result<Self> {
        let provenance = match (f.provenance.as_str(), f.seed) {
            ("open_loop_draw", Some(seed)) => Provenance::OpenLoopDraw { seed },
            ("open_loop_draw", None) => {
                return Err(MbmError::Format("open_loop_draw needs a seed".into()))
            }
            ("closed_loop", source_seed) => Provenance::ClosedLoop { source_seed },
            ("reference_qam", _) => Provenance::ReferenceQam,
            ("reference_psk", _) => Provenance::ReferencePsk,
            (other, _) => return Err(MbmError::Format(format!("unknown provenance '{other}'"))),
        };
        Constellation::new(
            f.k,
            f.points.into_iter().map(Into::into).collect(),
            provenance,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Euclidean,
    Hamming,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightFile {
    pub k: u32,
    pub weights: Vec<PointJson>,
    pub achieved_dmin: f64,
    pub metric: Metric,
}

impl WeightFile {
    pub fn new(w: &WeightVector, achieved_dmin: f64) -> Self {
        WeightFile {
            k: w.k(),
            weights: w.weights().iter().map(PointJson::from).collect(),
            achieved_dmin,
            metric: Metric::Euclidean,
        }
    }

    pub fn weight_vector(&self) -> Result<WeightVector> {
        if self.metric != Metric::Euclidean {
            return Err(MbmError::Format(
                "weight file must have metric \"euclidean\"".into(),
            ));
        }
        WeightVector::new(
            self.k,
            self.weights.iter().copied().map(Into::into).collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MappingFile {
    pub k: u32,
    pub label_of: Vec<u32>,
    pub achieved_cost: u64,
    pub metric: Metric,
}

impl MappingFile {
    pub fn new(m: &BitMapping, achieved_cost: u64) -> Self {
        MappingFile {
            k: m.k(),
            label_of: m.label_of().to_vec(),
            achieved_cost,
            metric: Metric::Hamming,
        }
    }

    pub fn mapping(&self) -> Result<BitMapping> {
        if self.metric != Metric::Hamming {
            return Err(MbmError::Format(
                "mapping file must have metric \"hamming\"".into(),
            ));
        }
        BitMapping::new(self.k, self.label_of.clone())
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(format_err)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(format_err)
}

pub fn constellation_to_json(c: &Constellation) -> Result<String> {
    to_json(&ConstellationFile::from(c))
}

pub fn constellation_from_json(text: &str) -> Result<Constellation> {
    from_json::<ConstellationFile>(text)?.try_into()
}

fn write_table<R: Serialize>(header: &str, rows: impl IntoIterator<Item = R>) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(header.split(',')).map_err(format_err)?;
    for r in rows {
        w.serialize(r).map_err(format_err)?;
    }
    String::from_utf8(w.into_inner().map_err(format_err)?).map_err(format_err)
}

fn read_table<R: for<'de> Deserialize<'de>>(header: &str, text: &str) -> Result<Vec<R>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let got = r
        .headers()
        .map_err(format_err)?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if got != header {
        return Err(MbmError::Format(format!(
            "expected header '{header}', got '{got}'"
        )));
    }
    r.deserialize()
        .collect::<std::result::Result<Vec<R>, _>>()
        .map_err(format_err)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub trial: u64,
    pub accepted: bool,
    pub d_value: f64,
}

pub fn trace_to_csv(records: &[TrialRecord]) -> Result<String> {
    write_table(
        TRACE_HEADER,
        records.iter().map(|r| TraceRow {
            trial: r.trial,
            accepted: r.accepted,
            d_value: r.value,
        }),
    )
}

pub fn trace_from_csv(text: &str) -> Result<Vec<TraceRow>> {
    read_table(TRACE_HEADER, text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub snr_db: f64,
    pub errors: u64,
    pub trials: u64,
    pub rate: f64,
    pub label: String,
}

/// Several curves stacked in one table, distinguished by `label`.
pub fn curves_to_csv(curves: &[SerCurve]) -> Result<String> {
    write_table(
        CURVE_HEADER,
        curves.iter().flat_map(|c| {
            c.rows.iter().map(|r| CurveRow {
                snr_db: r.snr_db,
                errors: r.errors,
                trials: r.trials,
                rate: r.rate,
                label: c.label.clone(),
            })
        }),
    )
}

/// Regroups rows by label in order of first appearance.
pub fn curves_from_csv(text: &str) -> Result<Vec<SerCurve>> {
    let mut curves: Vec<SerCurve> = Vec::new();
    for row in read_table::<CurveRow>(CURVE_HEADER, text)? {
        let r = SerRow {
            snr_db: row.snr_db,
            errors: row.errors,
            trials: row.trials,
            rate: row.rate,
        };
        match curves.iter_mut().find(|c| c.label == row.label) {
            Some(c) => c.rows.push(r),
            None => curves.push(SerCurve {
                rows: vec![r],
                label: row.label,
                symbol_energies: Vec::new(),
                reference_energies: Vec::new(),
            }),
        }
    }
    Ok(curves)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub bin_left: f64,
    pub bin_right: f64,
    pub count: u64,
    pub density: f64,
}

/// Histogram table with the given per-bin densities (raw or scaled).
pub fn histogram_to_csv(h: &Histogram, density: &[f64]) -> Result<String> {
    if density.len() != h.counts().len() {
        return Err(MbmError::param("density length does not match bin count"));
    }
    write_table(
        HISTOGRAM_HEADER,
        h.bins().zip(density).map(|((l, r, c), &d)| HistogramRow {
            bin_left: l,
            bin_right: r,
            count: c,
            density: d,
        }),
    )
}

pub fn histogram_from_csv(text: &str) -> Result<Vec<HistogramRow>> {
    read_table(HISTOGRAM_HEADER, text)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdfRow {
    pub d: f64,
    pub pdf: f64,
}

pub fn pdf_to_csv(rows: &[PdfRow]) -> Result<String> {
    write_table(PDF_HEADER, rows.iter().copied())
}

pub fn pdf_from_csv(text: &str) -> Result<Vec<PdfRow>> {
    read_table(PDF_HEADER, text)
}
