//! Accuracy error and accuracy rate.

use serde::{Deserialize, Serialize};

use crate::boundary::StageTimings;
use crate::error::{Error, Result};
use crate::imgcore::Mask;

/// An image counts as correctly localized below this accuracy error.
pub const SUCCESS_THRESHOLD: f64 = 10.0;

/// Pixel-count discrepancy between detected and true iris masks, as a
/// percentage of all image pixels.
pub fn accuracy_error(detected: &Mask, truth: &Mask) -> Result<f64> {
    detected.same_dims(truth)?;
    let total = (truth.width() * truth.height()) as f64;
    let gap = (truth.count() as f64 - detected.count() as f64).abs();
    Ok(gap / total * 100.0)
}

/// Geometry errors against a known synthetic eye.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryError {
    pub pupil_center: f64,
    pub pupil_radius: f64,
    pub iris_center: f64,
    pub iris_radius: f64,
    /// Intersection over union of detected and planted occluded angles;
    /// `None` when neither has any.
    pub gap_overlap: Option<f64>,
    /// Fraction of planted occluded angles flagged as gaps; `None` when
    /// nothing was planted.
    pub gap_coverage: Option<f64>,
}

/// Outcome for one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: String,
    pub ae: f64,
    pub success: bool,
    /// Absent when the image could not be segmented.
    pub timings: Option<StageTimings>,
    pub error: Option<String>,
    pub geometry: Option<GeometryError>,
}

impl EvalRecord {
    pub fn new(id: impl Into<String>, ae: f64, timings: Option<StageTimings>) -> Self {
        EvalRecord {
            id: id.into(),
            ae,
            success: ae < SUCCESS_THRESHOLD,
            timings,
            error: None,
            geometry: None,
        }
    }

    /// A record for an image that produced no segmentation. Nothing was
    /// localized, so the error is reported as 100%.
    pub fn failed(id: impl Into<String>, error: impl Into<String>) -> Self {
        EvalRecord {
            error: Some(error.into()),
            ..EvalRecord::new(id, 100.0, None)
        }
    }

    pub fn total_ms(&self) -> f64 {
        self.timings.map_or(0.0, |t| t.total())
    }
}

/// Percentage of records with `Ae` below the success threshold.
pub fn accuracy_rate(records: &[EvalRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::Corpus("accuracy rate of an empty record list".into()));
    }
    let ok = records.iter().filter(|r| r.ae < SUCCESS_THRESHOLD).count();
    Ok(100.0 * ok as f64 / records.len() as f64)
}

/// Corpus-level summary.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub records: Vec<EvalRecord>,
    pub ar: f64,
    pub mean_ae: f64,
    pub median_ae: f64,
    /// Mean segmentation time over images that were segmented.
    pub mean_ms: f64,
}

impl EvalReport {
    pub fn from_records(records: Vec<EvalRecord>) -> Result<Self> {
        let ar = accuracy_rate(&records)?;
        let n = records.len() as f64;
        let mean_ae = records.iter().map(|r| r.ae).sum::<f64>() / n;
        let mut sorted: Vec<f64> = records.iter().map(|r| r.ae).collect();
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        let median_ae = if sorted.len() % 2 == 1 { sorted[mid] } else { (sorted[mid - 1] + sorted[mid]) / 2.0 };
        let timed: Vec<f64> = records.iter().filter_map(|r| r.timings.map(|t| t.total())).collect();
        let mean_ms = if timed.is_empty() { 0.0 } else { timed.iter().sum::<f64>() / timed.len() as f64 };
        Ok(EvalReport { records, ar, mean_ae, median_ae, mean_ms })
    }

    pub fn summary_line(&self) -> String {
        format!(
            "images={} Ar={:.1} mean_Ae={:.3} median_Ae={:.3} mean_ms={:.1}",
            self.records.len(),
            self.ar,
            self.mean_ae,
            self.median_ae,
            self.mean_ms
        )
    }

    /// CSV with one `id,ae,success,ms` row per image, followed by the summary
    /// as a `#` comment line.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Corpus(format!("csv: {e}"));
        w.write_record(["id", "ae", "success", "ms"]).map_err(csv_err)?;
        for r in &self.records {
            w.write_record([
                r.id.clone(),
                format!("{:.4}", r.ae),
                r.success.to_string(),
                format!("{:.2}", r.total_ms()),
            ])
            .map_err(csv_err)?;
        }
        let mut bytes = w.into_inner().map_err(|e| Error::Corpus(format!("csv: {e}")))?;
        bytes.extend_from_slice(format!("# {}\n", self.summary_line()).as_bytes());
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}
