//! Text formats written by `qesprob estimate`, and readers for them.
//!
//! The per-batch CSV has the fixed header [`CSV_HEADER`]; the summary is a
//! single JSON object. Reals use the shortest representation that
//! round-trips.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{BatchRecord, EstimateSummary, UnweightedStats};

pub const CSV_HEADER: &str = "batch_index,n_samples,n_excluded,weight_sum,sep_weight_sum,batch_estimate,running_estimate,p_above_threshold";

/// One CSV line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BatchRow {
    pub batch_index: u64,
    pub n_samples: u64,
    pub n_excluded: u64,
    pub weight_sum: f64,
    pub sep_weight_sum: f64,
    pub batch_estimate: f64,
    pub running_estimate: f64,
    pub p_above_threshold: f64,
}

impl BatchRow {
    pub fn new(batch_index: u64, batch: &BatchRecord, running_estimate: f64) -> Self {
        Self {
            batch_index,
            n_samples: batch.n_samples,
            n_excluded: batch.n_excluded,
            weight_sum: batch.weight_sum,
            sep_weight_sum: batch.sep_weight_sum,
            batch_estimate: batch.estimate().unwrap_or(f64::NAN),
            running_estimate,
            p_above_threshold: batch.p_above_threshold().unwrap_or(f64::NAN),
        }
    }

    pub fn to_csv_line(&self) -> String {
        let mut line = String::with_capacity(128);
        write!(
            line,
            "{},{},{},{:?},{:?},{:?},{:?},{:?}",
            self.batch_index,
            self.n_samples,
            self.n_excluded,
            self.weight_sum,
            self.sep_weight_sum,
            self.batch_estimate,
            self.running_estimate,
            self.p_above_threshold
        )
        .expect("writing to a String cannot fail");
        line
    }
}

fn parse_field<T: std::str::FromStr>(field: &str, name: &str, line: usize) -> Result<T> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: bad {name} {field:?}")))
}

/// Reads a per-batch CSV document, header included.
pub fn parse_batch_csv(text: &str) -> Result<Vec<BatchRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == CSV_HEADER => {}
        _ => return Err(Error::Parse("missing or unexpected CSV header".into())),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(Error::Parse(format!(
                "line {lineno}: expected 8 fields, found {}",
                fields.len()
            )));
        }
        let row = BatchRow {
            batch_index: parse_field(fields[0], "batch_index", lineno)?,
            n_samples: parse_field(fields[1], "n_samples", lineno)?,
            n_excluded: parse_field(fields[2], "n_excluded", lineno)?,
            weight_sum: parse_field(fields[3], "weight_sum", lineno)?,
            sep_weight_sum: parse_field(fields[4], "sep_weight_sum", lineno)?,
            batch_estimate: parse_field(fields[5], "batch_estimate", lineno)?,
            running_estimate: parse_field(fields[6], "running_estimate", lineno)?,
            p_above_threshold: parse_field(fields[7], "p_above_threshold", lineno)?,
        };
        if row.batch_index != rows.len() as u64 {
            return Err(Error::Parse(format!(
                "line {lineno}: batch_index {} out of sequence",
                row.batch_index
            )));
        }
        if row.n_excluded > row.n_samples {
            return Err(Error::Parse(format!(
                "line {lineno}: more excluded samples than samples"
            )));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// The JSON summary document. Field order is the on-disk key order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryRecord {
    pub ensemble: String,
    pub field: String,
    pub weight_scheme: String,
    pub samples: u64,
    pub batch_size: u64,
    pub master_seed: u64,
    pub estimate: f64,
    pub std_error: f64,
    pub n_excluded: u64,
    pub p_above_threshold: f64,
    pub entangled_fraction_below_threshold: f64,
    pub mean_v_a_relative: f64,
    pub batch_median: f64,
    pub batch_mean: f64,
    pub batch_variance: f64,
    pub std_error_defined: bool,
    pub n_batches: u64,
    pub batch_min: f64,
    pub batch_max: f64,
    pub weight_cap: Option<f64>,
    pub entangled_share_below_threshold: Option<f64>,
    pub unweighted: UnweightedStats,
}

impl SummaryRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }

    /// Copies the statistics of `summary` next to the run's identity.
    #[allow(clippy::too_many_arguments)]
    pub fn from_summary(
        ensemble: &str,
        field: &str,
        weight_scheme: &str,
        samples: u64,
        batch_size: u64,
        master_seed: u64,
        weight_cap: Option<f64>,
        s: &EstimateSummary,
    ) -> Self {
        Self {
            ensemble: ensemble.to_owned(),
            field: field.to_owned(),
            weight_scheme: weight_scheme.to_owned(),
            samples,
            batch_size,
            master_seed,
            estimate: s.estimate,
            std_error: s.std_error,
            n_excluded: s.n_excluded,
            p_above_threshold: s.p_above_threshold,
            entangled_fraction_below_threshold: s.entangled_fraction_below_threshold,
            mean_v_a_relative: s.mean_v_a_relative,
            batch_median: s.batch_median,
            batch_mean: s.batch_mean,
            batch_variance: s.batch_variance,
            std_error_defined: s.std_error_defined,
            n_batches: s.n_batches,
            batch_min: s.batch_min,
            batch_max: s.batch_max,
            weight_cap,
            entangled_share_below_threshold: s.entangled_share_below_threshold,
            unweighted: s.unweighted,
        }
    }
}

fn probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Parse(format!("{name} = {p} is not a probability")))
    }
}

/// Reads a JSON summary and checks its internal consistency.
pub fn parse_summary_json(text: &str) -> Result<SummaryRecord> {
    let record: SummaryRecord =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    probability("estimate", record.estimate)?;
    probability("p_above_threshold", record.p_above_threshold)?;
    probability(
        "entangled_fraction_below_threshold",
        record.entangled_fraction_below_threshold,
    )?;
    if !(record.std_error >= 0.0) {
        return Err(Error::Parse(format!(
            "negative std_error {}",
            record.std_error
        )));
    }
    if record.n_excluded > record.samples {
        return Err(Error::Parse("more excluded samples than samples".into()));
    }
    if !matches!(record.ensemble.as_str(), "hs" | "bures") {
        return Err(Error::Parse(format!(
            "unknown ensemble {:?}",
            record.ensemble
        )));
    }
    if !matches!(record.field.as_str(), "complex" | "real") {
        return Err(Error::Parse(format!("unknown field {:?}", record.field)));
    }
    if !matches!(
        record.weight_scheme.as_str(),
        "none" | "qes-raw" | "cross" | "qes-eig" | "qes-unitary"
    ) {
        return Err(Error::Parse(format!(
            "unknown weight scheme {:?}",
            record.weight_scheme
        )));
    }
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let batch = BatchRecord {
            n_samples: 10,
            n_excluded: 1,
            weight_sum: 3.25,
            sep_weight_sum: 1e-30,
            above_weight_sum: 2.0,
        };
        let row = BatchRow::new(0, &batch, 0.1 + 0.2);
        let doc = format!("{CSV_HEADER}\n{}\n", row.to_csv_line());
        assert_eq!(parse_batch_csv(&doc).unwrap(), vec![row]);
    }

    #[test]
    fn csv_nan_estimate_survives() {
        let row = BatchRow::new(0, &BatchRecord::default(), f64::NAN);
        let doc = format!("{CSV_HEADER}\n{}\n", row.to_csv_line());
        let parsed = parse_batch_csv(&doc).unwrap();
        assert!(parsed[0].batch_estimate.is_nan());
    }

    #[test]
    fn csv_rejects_garbage() {
        assert!(parse_batch_csv("").is_err());
        assert!(parse_batch_csv("a,b\n").is_err());
        let bad = format!("{CSV_HEADER}\n1,2,3,4,5,6,7,8\n");
        assert!(parse_batch_csv(&bad).is_err());
        let short = format!("{CSV_HEADER}\n0,2,3\n");
        assert!(parse_batch_csv(&short).is_err());
    }

    #[test]
    fn summary_rejects_bad_probability() {
        assert!(parse_summary_json("{}").is_err());
        assert!(parse_summary_json("not json").is_err());
    }
}
