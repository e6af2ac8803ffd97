//! The `partition`, `train`, and `report` commands, written as library
//! functions so tests can drive them directly.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use fedaux::cost::CostLedger;
use fedaux::data::{materialize_shards, partition};
use fedaux::error::{Error, Result};
use fedaux::fl::{run_experiment, Baseline, ExperimentOutput};

use crate::config::ExperimentConfig;
use crate::metrics_io::{read_metrics, write_ledger_csv, write_metrics, write_wall, MetricsRow};
use crate::report::{build_report, ComparisonReport};

/// Writes the partition manifest for the configured mode and prints
/// per-station sizes and main-class histograms.
pub fn cmd_partition(config: &ExperimentConfig, seed: u64, out_dir: &Path) -> Result<()> {
    let data = config.prepare_data(seed)?;
    let mode = config.partition.to_mode()?;
    let plan = partition(&data.train, mode, config.stations, seed)?;
    fs::create_dir_all(out_dir)?;
    let manifest_path = out_dir.join("partition.json");
    fs::write(
        &manifest_path,
        serde_json::to_string_pretty(&plan).expect("plan serializes"),
    )?;

    let classes = config.main_task().num_classes;
    println!("partition manifest: {}", manifest_path.display());
    for (station, shard) in materialize_shards(&data.train, &plan).iter().enumerate() {
        let mut hist = vec![0usize; classes];
        for s in shard {
            hist[s.main_label] += 1;
        }
        println!(
            "station {}: {} samples, classes {:?}",
            station,
            shard.len(),
            hist
        );
    }
    Ok(())
}

/// Runs the selected baselines and writes, per baseline:
/// `metrics.csv`, `ledger.json`, `params.bin`, `partition.json`, and the
/// informational `wall.csv`. The resolved config (with the effective
/// seed) is stored at the run root for replay.
pub fn cmd_train(
    config: &ExperimentConfig,
    seed: u64,
    out_dir: &Path,
    baseline_filter: Option<&[String]>,
    parallel: bool,
) -> Result<()> {
    let baselines = selected_baselines(config, baseline_filter)?;
    let data = config.prepare_data(seed)?;
    let feature_len = data.feature_len;

    fs::create_dir_all(out_dir)?;
    let mut resolved = config.clone();
    resolved.seed = seed;
    fs::write(out_dir.join("config.json"), resolved.to_json())?;

    let run_one = |baseline: &Baseline| -> Result<()> {
        let spec = config.experiment_spec(&data, seed)?;
        let factory = |tasks: &[fedaux::mtl::TaskSpec]| config.build_model(feature_len, tasks);
        let out = run_experiment(&spec, &factory, baseline, |_| {})?;
        write_baseline_artifacts(out_dir, &out)
    };

    if parallel {
        baselines
            .par_iter()
            .map(&run_one)
            .collect::<Result<Vec<_>>>()?;
    } else {
        for b in &baselines {
            run_one(b)?;
        }
    }
    for b in &baselines {
        println!(
            "baseline {}: {} rounds -> {}",
            b.name(),
            config.rounds.rounds,
            out_dir.join(b.dir_name()).display()
        );
    }
    Ok(())
}

fn selected_baselines(
    config: &ExperimentConfig,
    filter: Option<&[String]>,
) -> Result<Vec<Baseline>> {
    match filter {
        None => config.parse_baselines(),
        Some(names) => {
            let configured = config.parse_baselines()?;
            let mut chosen = Vec::with_capacity(names.len());
            for name in names {
                let b = Baseline::parse(name)?;
                if !configured.contains(&b) {
                    return Err(Error::config(format!(
                        "baseline {:?} is not in the config's baseline list",
                        name
                    )));
                }
                chosen.push(b);
            }
            Ok(chosen)
        }
    }
}

fn write_baseline_artifacts(out_dir: &Path, out: &ExperimentOutput) -> Result<()> {
    let dir = out_dir.join(Baseline::parse(&out.baseline)?.dir_name());
    fs::create_dir_all(&dir)?;

    let mut metrics_file = fs::File::create(dir.join("metrics.csv"))?;
    write_metrics(&mut metrics_file, &out.metrics)?;

    fs::write(
        dir.join("ledger.json"),
        serde_json::to_string_pretty(&out.ledger).expect("ledger serializes"),
    )?;

    fs::write(
        dir.join("partition.json"),
        serde_json::to_string_pretty(&out.partition).expect("plan serializes"),
    )?;

    let mut params_file = fs::File::create(dir.join("params.bin"))?;
    out.final_params.write_checkpoint(&mut params_file)?;

    let mut ledger_csv = fs::File::create(dir.join("ledger.csv"))?;
    write_ledger_csv(&mut ledger_csv, &out.ledger)?;

    let mut wall_file = fs::File::create(dir.join("wall.csv"))?;
    write_wall(&mut wall_file, &out.metrics)?;
    Ok(())
}

/// Loads one baseline's stored artifacts.
pub fn load_run(run_dir: &Path, baseline: &Baseline) -> Result<(Vec<MetricsRow>, CostLedger)> {
    let dir = run_dir.join(baseline.dir_name());
    let metrics_path = dir.join("metrics.csv");
    let metrics_file = fs::File::open(&metrics_path)
        .map_err(|e| Error::data(format!("cannot open {}: {}", metrics_path.display(), e)))?;
    let rows = read_metrics(metrics_file)?;
    let ledger_path = dir.join("ledger.json");
    let ledger_text = fs::read_to_string(&ledger_path)
        .map_err(|e| Error::data(format!("cannot open {}: {}", ledger_path.display(), e)))?;
    let ledger: CostLedger = serde_json::from_str(&ledger_text)
        .map_err(|e| Error::data(format!("{}: {}", ledger_path.display(), e)))?;
    Ok((rows, ledger))
}

/// Rebuilds the comparison report from a run directory and writes the
/// JSON/text tables plus per-figure CSVs under `<run>/report/`.
pub fn cmd_report(run_dir: &Path, kappa_override: &BTreeMap<String, f64>) -> Result<()> {
    let config_path = run_dir.join("config.json");
    let config = ExperimentConfig::load(&config_path)?;
    let mut kappa = config.rounds.target_accuracy.clone();
    for (task, v) in kappa_override {
        kappa.insert(task.clone(), *v);
    }

    // a run may hold a --baselines subset of the config's list
    let mut runs = Vec::new();
    for baseline in config.parse_baselines()? {
        if !run_dir.join(baseline.dir_name()).join("metrics.csv").is_file() {
            continue;
        }
        let (rows, ledger) = load_run(run_dir, &baseline)?;
        runs.push((baseline.name(), rows, ledger));
    }
    if runs.is_empty() {
        return Err(Error::data(format!(
            "no baseline runs found under {}",
            run_dir.display()
        )));
    }
    let report = build_report(&runs, &kappa)?;

    let report_dir = run_dir.join("report");
    fs::create_dir_all(&report_dir)?;
    fs::write(report_dir.join("comparison.json"), report.to_json())?;
    let text = report.to_text();
    fs::write(report_dir.join("comparison.txt"), &text)?;

    let task_ids: Vec<String> = config.tasks.iter().map(|t| t.id.clone()).collect();
    for task_id in &task_ids {
        let (header, body) = ComparisonReport::accuracy_figure(task_id, &runs);
        write_figure(
            &report_dir.join(format!("fig_accuracy_{}.csv", task_id)),
            &header,
            &body,
        )?;
    }
    let (header, body) = ComparisonReport::global_loss_figure(&runs);
    write_figure(&report_dir.join("fig_global_loss.csv"), &header, &body)?;

    print!("{}", text);
    Ok(())
}

fn write_figure(path: &Path, header: &[String], body: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(fs::File::create(path)?);
    w.write_record(header)
        .map_err(|e| Error::data(format!("csv: {}", e)))?;
    for row in body {
        w.write_record(row)
            .map_err(|e| Error::data(format!("csv: {}", e)))?;
    }
    w.flush()?;
    Ok(())
}
