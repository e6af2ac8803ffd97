//! Reading and writing the per-round metrics CSV.
//!
//! Columns: `round,task_id,split,accuracy,loss,total_global_loss,
//! comm_bytes_cum,energy_j_cum,modeled_s_cum`: one row per round, task,
//! and split. Floats are printed in shortest round-trip form with a `.`
//! separator, so identical runs produce byte-identical files. Wall-clock
//! timings are informational and live in a separate sidecar file.

use std::io::{Read, Write};

use fedaux::error::{Error, Result};
use fedaux::fl::RoundMetrics;

pub const METRICS_HEADER: [&str; 9] = [
    "round",
    "task_id",
    "split",
    "accuracy",
    "loss",
    "total_global_loss",
    "comm_bytes_cum",
    "energy_j_cum",
    "modeled_s_cum",
];

pub fn write_metrics<W: Write>(w: W, metrics: &[RoundMetrics]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(METRICS_HEADER).map_err(csv_err)?;
    for m in metrics {
        for e in &m.evals {
            out.write_record([
                m.round.to_string(),
                e.task_id.clone(),
                e.split.name().to_string(),
                e.accuracy.to_string(),
                e.loss.to_string(),
                m.total_global_loss.to_string(),
                m.comm_bytes_cum.to_string(),
                m.energy_j_cum.to_string(),
                m.modeled_s_cum.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Round wall-clock sidecar (not part of the deterministic artifacts).
pub fn write_wall<W: Write>(w: W, metrics: &[RoundMetrics]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["round", "wall_ms", "wall_ms_cum"])
        .map_err(csv_err)?;
    let mut cum = 0.0;
    for m in metrics {
        cum += m.wall_ms;
        out.write_record([
            m.round.to_string(),
            format!("{:.3}", m.wall_ms),
            format!("{:.3}", cum),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Per-round cumulative cost rows from the ledger.
pub fn write_ledger_csv<W: Write>(w: W, ledger: &fedaux::cost::CostLedger) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["round", "comm_bytes_cum", "energy_j_cum", "modeled_s_cum"])
        .map_err(csv_err)?;
    for (round, bytes, energy, time) in ledger.cumulative_rows() {
        out.write_record([
            round.to_string(),
            bytes.to_string(),
            energy.to_string(),
            time.to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub round: usize,
    pub task_id: String,
    pub split: String,
    pub accuracy: f64,
    pub loss: f64,
    pub total_global_loss: f64,
    pub comm_bytes_cum: u64,
    pub energy_j_cum: f64,
    pub modeled_s_cum: f64,
}

pub fn read_metrics<R: Read>(r: R) -> Result<Vec<MetricsRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    {
        let headers = rdr.headers().map_err(csv_err)?;
        let got: Vec<&str> = headers.iter().collect();
        if got != METRICS_HEADER {
            return Err(Error::data(format!("unexpected metrics header {:?}", got)));
        }
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let field = |i: usize| -> &str { &record[i] };
        let num = |i: usize| -> Result<f64> {
            field(i)
                .parse()
                .map_err(|_| Error::data(format!("bad number {:?} in metrics", field(i))))
        };
        rows.push(MetricsRow {
            round: field(0)
                .parse()
                .map_err(|_| Error::data("bad round index in metrics"))?,
            task_id: field(1).to_string(),
            split: field(2).to_string(),
            accuracy: num(3)?,
            loss: num(4)?,
            total_global_loss: num(5)?,
            comm_bytes_cum: field(6)
                .parse()
                .map_err(|_| Error::data("bad byte count in metrics"))?,
            energy_j_cum: num(7)?,
            modeled_s_cum: num(8)?,
        });
    }
    Ok(rows)
}

/// Test-split accuracy series (by round) for one task.
pub fn accuracy_series(rows: &[MetricsRow], task_id: &str) -> Vec<f64> {
    let mut by_round: Vec<(usize, f64)> = rows
        .iter()
        .filter(|r| r.task_id == task_id && r.split == "test")
        .map(|r| (r.round, r.accuracy))
        .collect();
    by_round.sort_by_key(|(round, _)| *round);
    by_round.into_iter().map(|(_, a)| a).collect()
}

fn csv_err(e: csv::Error) -> Error {
    Error::data(format!("csv: {}", e))
}
