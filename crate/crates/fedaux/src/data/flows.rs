//! Flow samples and CSV ingestion.
//!
//! Input schema (UTF-8, header required):
//!
//! ```text
//! label,duration,bandwidth,f_0,f_1,...,f_{n-1}
//! ```
//!
//! `label` is the service class name; `duration` and `bandwidth` are the
//! raw columns the auxiliary labels are derived from; `f_*` are the
//! per-flow features. Class names map to indices by sorted order.

use std::collections::BTreeSet;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

/// One flow: fixed-length features, the main (service) label, and one
/// label per auxiliary task in the dataset's auxiliary-task order.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSample {
    pub features: Vec<f64>,
    pub main_label: usize,
    pub aux_labels: Vec<usize>,
}

/// Parse result of [`load_flows`]: samples with empty `aux_labels` plus the
/// raw columns needed to fit auxiliary label bins later.
#[derive(Debug, Clone)]
pub struct LoadedFlows {
    pub samples: Vec<FlowSample>,
    pub duration: Vec<f64>,
    pub bandwidth: Vec<f64>,
    pub class_names: Vec<String>,
    pub feature_len: usize,
}

/// Expectations about the file. With `class_names` set, labels outside the
/// list are rejected; otherwise classes are inferred from the file.
#[derive(Debug, Clone, Default)]
pub struct CsvSchema {
    pub class_names: Option<Vec<String>>,
}

pub fn load_flows_path(path: &Path, schema: &CsvSchema) -> Result<LoadedFlows> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::data(format!("cannot open {}: {}", path.display(), e)))?;
    load_flows(file, schema)
}

pub fn load_flows<R: Read>(reader: R, schema: &CsvSchema) -> Result<LoadedFlows> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr
        .headers()
        .map_err(|e| Error::data(format!("header: {}", e)))?
        .clone();
    let cols: Vec<&str> = headers.iter().collect();
    if cols.len() < 4 || cols[0] != "label" || cols[1] != "duration" || cols[2] != "bandwidth" {
        return Err(Error::data(format!(
            "header must start with label,duration,bandwidth,f_0,... (got {:?})",
            cols
        )));
    }
    for (i, name) in cols[3..].iter().enumerate() {
        let expected = format!("f_{}", i);
        if *name != expected {
            return Err(Error::data(format!(
                "feature column {} named {:?}, expected {:?}",
                i + 3,
                name,
                expected
            )));
        }
    }
    let feature_len = cols.len() - 3;

    let mut raw_labels = Vec::new();
    let mut duration = Vec::new();
    let mut bandwidth = Vec::new();
    let mut features = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::data(format!("csv parse: {}", e)))?;
        let line = record.position().map(|p| p.line()).unwrap_or_default();
        if record.len() != cols.len() {
            return Err(Error::data(format!(
                "line {}: expected {} fields, found {}",
                line,
                cols.len(),
                record.len()
            )));
        }
        let num = |idx: usize, what: &str| -> Result<f64> {
            let v = record[idx].parse::<f64>().map_err(|_| {
                Error::data(format!(
                    "line {}: non-numeric {} value {:?}",
                    line, what, &record[idx]
                ))
            })?;
            if !v.is_finite() {
                return Err(Error::data(format!(
                    "line {}: non-finite {} value {:?}",
                    line, what, &record[idx]
                )));
            }
            Ok(v)
        };
        raw_labels.push((record[0].to_string(), line));
        duration.push(num(1, "duration")?);
        bandwidth.push(num(2, "bandwidth")?);
        let mut f = Vec::with_capacity(feature_len);
        for i in 0..feature_len {
            f.push(num(3 + i, &format!("f_{}", i))?);
        }
        features.push(f);
    }
    if raw_labels.is_empty() {
        return Err(Error::data("no data rows"));
    }

    let class_names: Vec<String> = match &schema.class_names {
        Some(names) => {
            let mut sorted = names.clone();
            sorted.sort();
            sorted.dedup();
            sorted
        }
        None => {
            let set: BTreeSet<&str> = raw_labels.iter().map(|(l, _)| l.as_str()).collect();
            set.into_iter().map(|s| s.to_string()).collect()
        }
    };

    let mut samples = Vec::with_capacity(raw_labels.len());
    for ((label, line), f) in raw_labels.into_iter().zip(features) {
        let idx = class_names
            .binary_search(&label)
            .map_err(|_| Error::data(format!("line {}: unknown label {:?}", line, label)))?;
        samples.push(FlowSample {
            features: f,
            main_label: idx,
            aux_labels: Vec::new(),
        });
    }

    Ok(LoadedFlows {
        samples,
        duration,
        bandwidth,
        class_names,
        feature_len,
    })
}
