use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::aggregate::{
    aggregate_curves, lower_median, pad_curve, AggregateResult, AlgorithmCurve,
};
use super::{ExperimentConfig, ExperimentOutput};
use crate::benchmarks::{to_native, Objective};
use crate::surrogate::PolynomialSurrogate;
use crate::trace::{Origin, RunTrace, TerminationReason, TraceRecord};
use crate::{Error, Result};

// 17 significant digits round-trip every f64.
fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `run_id,algorithm,eval_index,origin,x_1..x_m,f,best_so_far`.
pub fn write_trace_csv<W: Write>(
    writer: W,
    run_id: &str,
    algorithm: &str,
    trace: &RunTrace,
) -> Result<()> {
    let dim = trace.records.first().map_or(0, |r| r.x.len());
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![
        "run_id".to_string(),
        "algorithm".into(),
        "eval_index".into(),
        "origin".into(),
    ];
    header.extend((1..=dim).map(|i| format!("x_{i}")));
    header.push("f".into());
    header.push("best_so_far".into());
    w.write_record(&header)?;
    for r in &trace.records {
        let mut row = vec![
            run_id.to_string(),
            algorithm.to_string(),
            r.eval_index.to_string(),
            r.origin.as_str().to_string(),
        ];
        row.extend(r.x.iter().map(|&v| fmt_float(v)));
        row.push(fmt_float(r.f));
        row.push(fmt_float(r.best_so_far));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// One parsed trace file.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceFile {
    pub run_id: String,
    pub algorithm: String,
    pub trace: RunTrace,
}

pub fn read_trace_csv(path: &Path) -> Result<TraceFile> {
    let bad = |reason: String| Error::MalformedTrace {
        path: path.display().to_string(),
        reason,
    };
    let mut reader = csv::Reader::from_path(path)?;
    let header = reader.headers()?.clone();
    let n = header.len();
    if n < 7
        || &header[0] != "run_id"
        || &header[1] != "algorithm"
        || &header[2] != "eval_index"
        || &header[3] != "origin"
        || &header[n - 2] != "f"
        || &header[n - 1] != "best_so_far"
    {
        return Err(bad("unexpected header".into()));
    }
    let dim = n - 6;
    let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("`{s}`: {e}")));
    let mut ids: Option<(String, String)> = None;
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        match &ids {
            None => ids = Some((row[0].to_string(), row[1].to_string())),
            Some((id, algo)) if id != &row[0] || algo != &row[1] => {
                return Err(bad("more than one run in the file".into()));
            }
            _ => {}
        }
        let eval_index = row[2].parse::<usize>().map_err(|e| bad(e.to_string()))?;
        let origin: Origin = row[3].parse().map_err(bad)?;
        let x = (0..dim)
            .map(|i| num(&row[4 + i]))
            .collect::<Result<Vec<_>>>()?;
        records.push(TraceRecord {
            eval_index,
            x,
            f: num(&row[n - 2])?,
            best_so_far: num(&row[n - 1])?,
            origin,
        });
    }
    let (run_id, algorithm) = ids.ok_or_else(|| bad("no rows".into()))?;
    Ok(TraceFile {
        run_id,
        algorithm,
        trace: RunTrace {
            records,
            reason: TerminationReason::Budget,
            surrogate: None,
        },
    })
}

/// Aggregates every `*.csv` trace in `dir`, grouped by algorithm.
pub fn read_trace_dir(dir: &Path) -> Result<AggregateResult> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "csv"));
    paths.sort();

    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
    for p in &paths {
        let file = read_trace_csv(p)?;
        if !groups.contains_key(&file.algorithm) {
            order.push(file.algorithm.clone());
        }
        groups
            .entry(file.algorithm)
            .or_default()
            .push(file.trace.best_curve());
    }
    let objective = std::fs::read_to_string(dir.join(super::SUMMARY_FILE))
        .ok()
        .and_then(|s| serde_json::from_str::<Summary>(&s).ok())
        .map(|s| s.objective)
        .unwrap_or_else(|| {
            dir.file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default()
        });

    let mut curves = Vec::new();
    for algorithm in order {
        let runs = &groups[&algorithm];
        let len = runs.iter().map(Vec::len).max().unwrap_or(0);
        let padded: Vec<Vec<f64>> = runs.iter().map(|c| pad_curve(c, len)).collect();
        curves.push(AlgorithmCurve {
            runs: padded.len(),
            band: aggregate_curves(&padded)?,
            algorithm,
        });
    }
    if curves.is_empty() {
        return Err(Error::EmptyResult);
    }
    Ok(AggregateResult { objective, curves })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: String,
    pub algorithm: String,
    pub repeat: usize,
    pub rng_seed: u64,
    pub evaluations: usize,
    pub reason: TerminationReason,
    pub final_best: f64,
    /// Incumbent in unit-cube coordinates.
    pub best_x: Vec<f64>,
    pub best_x_native: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub surrogate: Option<PolynomialSurrogate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSummary {
    pub algorithm: String,
    pub median_final_best: f64,
    pub min_final_best: f64,
    pub max_final_best: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub objective: String,
    pub dimension: usize,
    pub config: ExperimentConfig,
    pub runs: Vec<RunSummary>,
    pub algorithms: Vec<AlgorithmSummary>,
}

impl Summary {
    pub fn new(
        config: &ExperimentConfig,
        objective: &Objective,
        output: &ExperimentOutput,
    ) -> Self {
        let runs = output
            .runs
            .iter()
            .map(|r| {
                let best = r.trace.best_record();
                let best_x = best.map(|b| b.x.clone()).unwrap_or_default();
                RunSummary {
                    run_id: r.run_id.clone(),
                    algorithm: r.algorithm.clone(),
                    repeat: r.repeat,
                    rng_seed: r.rng_seed,
                    evaluations: r.trace.len(),
                    reason: r.trace.reason,
                    final_best: r.trace.final_best().unwrap_or(f64::NAN),
                    best_x_native: to_native(&best_x, objective.native_box()),
                    best_x,
                    surrogate: r.trace.surrogate.clone(),
                }
            })
            .collect();
        let algorithms = output
            .aggregate
            .curves
            .iter()
            .map(|c| {
                let finals = output.final_bests(&c.algorithm);
                AlgorithmSummary {
                    algorithm: c.algorithm.clone(),
                    median_final_best: lower_median(&finals).unwrap_or(f64::NAN),
                    min_final_best: finals.iter().copied().fold(f64::INFINITY, f64::min),
                    max_final_best: finals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                }
            })
            .collect();
        Self {
            objective: objective.name().to_string(),
            dimension: objective.dimension(),
            config: config.clone(),
            runs,
            algorithms,
        }
    }
}

pub fn write_summary(path: &Path, summary: &Summary) -> Result<()> {
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
