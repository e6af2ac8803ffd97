//! The comparison report: rounds / communication / energy to target
//! accuracy per baseline and task, recomputed purely from the stored
//! metrics and ledger artifacts.

use std::collections::BTreeMap;

use serde::Serialize;

use fedaux::cost::{rounds_to_target, CostLedger};
use fedaux::error::{Error, Result};

use crate::metrics_io::{accuracy_series, MetricsRow};

#[derive(Debug, Clone, Serialize)]
pub struct TaskReport {
    pub task_id: String,
    /// Target accuracy this task was scored against, if one is set.
    pub kappa: Option<f64>,
    pub rounds_to_kappa: Option<usize>,
    pub comm_mb_to_kappa: Option<f64>,
    pub energy_j_to_kappa: Option<f64>,
    pub final_test_accuracy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BaselineReport {
    pub baseline: String,
    pub rounds: usize,
    pub total_comm_mb: f64,
    pub total_energy_j: f64,
    pub total_modeled_time_s: f64,
    pub final_total_global_loss: f64,
    pub tasks: Vec<TaskReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub kappa: BTreeMap<String, f64>,
    pub baselines: Vec<BaselineReport>,
}

pub fn build_report(
    runs: &[(String, Vec<MetricsRow>, CostLedger)],
    kappa: &BTreeMap<String, f64>,
) -> Result<ComparisonReport> {
    let mut baselines = Vec::with_capacity(runs.len());
    for (name, rows, ledger) in runs {
        if rows.is_empty() {
            return Err(Error::data(format!("baseline {:?} has no metrics", name)));
        }
        let last_round = rows.iter().map(|r| r.round).max().unwrap_or(0);
        let mut task_ids: Vec<String> = Vec::new();
        for r in rows {
            if !task_ids.contains(&r.task_id) {
                task_ids.push(r.task_id.clone());
            }
        }
        let mut tasks = Vec::with_capacity(task_ids.len());
        for task_id in &task_ids {
            let series = accuracy_series(rows, task_id);
            let target = kappa.get(task_id).copied();
            let hit = target.and_then(|k| rounds_to_target(&series, k));
            tasks.push(TaskReport {
                task_id: task_id.clone(),
                kappa: target,
                rounds_to_kappa: hit,
                comm_mb_to_kappa: hit.map(|r| ledger.comm_mb_through(r)),
                energy_j_to_kappa: hit.map(|r| ledger.energy_j_through(r)),
                final_test_accuracy: *series.last().expect("non-empty series"),
            });
        }
        let final_loss = rows
            .iter()
            .filter(|r| r.round == last_round)
            .map(|r| r.total_global_loss)
            .next()
            .unwrap_or(f64::NAN);
        baselines.push(BaselineReport {
            baseline: name.clone(),
            rounds: last_round,
            total_comm_mb: ledger.comm_mb(),
            total_energy_j: ledger.total_energy_j(),
            total_modeled_time_s: ledger.modeled_elapsed_s(),
            final_total_global_loss: final_loss,
            tasks,
        });
    }
    Ok(ComparisonReport {
        kappa: kappa.clone(),
        baselines,
    })
}

impl ComparisonReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Plain-text table, one block per task with a target accuracy.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (task, target) in &self.kappa {
            out.push_str(&format!(
                "task {} (target accuracy {:.0}%)\n",
                task,
                target * 100.0
            ));
            out.push_str(&format!(
                "  {:<22} {:>9} {:>12} {:>12} {:>10}\n",
                "baseline", "rounds", "comm (MB)", "energy (J)", "final acc"
            ));
            for b in &self.baselines {
                let Some(t) = b.tasks.iter().find(|t| t.task_id == *task) else {
                    continue;
                };
                let rounds = t
                    .rounds_to_kappa
                    .map(|r| r.to_string())
                    .unwrap_or_else(|| "not reached".into());
                let comm = t
                    .comm_mb_to_kappa
                    .map(|v| format!("{:.3}", v))
                    .unwrap_or_else(|| "-".into());
                let energy = t
                    .energy_j_to_kappa
                    .map(|v| format!("{:.3}", v))
                    .unwrap_or_else(|| "-".into());
                out.push_str(&format!(
                    "  {:<22} {:>9} {:>12} {:>12} {:>9.1}%\n",
                    b.baseline,
                    rounds,
                    comm,
                    energy,
                    t.final_test_accuracy * 100.0
                ));
            }
            out.push('\n');
        }
        out.push_str("totals\n");
        out.push_str(&format!(
            "  {:<22} {:>12} {:>12} {:>14} {:>12}\n",
            "baseline", "comm (MB)", "energy (J)", "modeled (s)", "global loss"
        ));
        for b in &self.baselines {
            out.push_str(&format!(
                "  {:<22} {:>12.3} {:>12.3} {:>14.3} {:>12.4}\n",
                b.baseline,
                b.total_comm_mb,
                b.total_energy_j,
                b.total_modeled_time_s,
                b.final_total_global_loss
            ));
        }
        out
    }

    /// Per-task `round, <baseline accuracy columns>` plot data.
    pub fn accuracy_figure(
        task_id: &str,
        runs: &[(String, Vec<MetricsRow>, CostLedger)],
    ) -> (Vec<String>, Vec<Vec<String>>) {
        let mut header = vec!["round".to_string()];
        let mut series: Vec<Vec<f64>> = Vec::new();
        for (name, rows, _) in runs {
            let s = accuracy_series(rows, task_id);
            if !s.is_empty() {
                header.push(name.clone());
                series.push(s);
            }
        }
        let rounds = series.iter().map(|s| s.len()).max().unwrap_or(0);
        let mut body = Vec::with_capacity(rounds);
        for r in 0..rounds {
            let mut row = vec![(r + 1).to_string()];
            for s in &series {
                row.push(s.get(r).map(|v| v.to_string()).unwrap_or_default());
            }
            body.push(row);
        }
        (header, body)
    }

    /// `round, <baseline total-global-loss columns>` plot data.
    pub fn global_loss_figure(
        runs: &[(String, Vec<MetricsRow>, CostLedger)],
    ) -> (Vec<String>, Vec<Vec<String>>) {
        let mut header = vec!["round".to_string()];
        let mut series: Vec<Vec<f64>> = Vec::new();
        for (name, rows, _) in runs {
            header.push(name.clone());
            let mut by_round: BTreeMap<usize, f64> = BTreeMap::new();
            for r in rows {
                by_round.insert(r.round, r.total_global_loss);
            }
            series.push(by_round.into_values().collect());
        }
        let rounds = series.iter().map(|s| s.len()).max().unwrap_or(0);
        let mut body = Vec::with_capacity(rounds);
        for r in 0..rounds {
            let mut row = vec![(r + 1).to_string()];
            for s in &series {
                row.push(s.get(r).map(|v| v.to_string()).unwrap_or_default());
            }
            body.push(row);
        }
        (header, body)
    }
}
