//! Corpus-wide evaluation into CSV rows and ratio histogram data.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::evaluator::{evaluate, ratio, EvalError, EvalReport, Method};
use crate::instance_io::{parse_instance, Instance};
use crate::oracle::{expected_clairvoyant_lb, LbMode, OracleError, MAX_PARTITION_CUSTOMERS};
use crate::policy::Policy;

pub const CSV_HEADER: [&str; 12] = [
    "instance",
    "policy",
    "mode",
    "expected_cost",
    "tour_floor",
    "bertsimas",
    "combined_lb",
    "formula_ub",
    "ratio_vs_lb",
    "ub_respected",
    "clairvoyant_lb",
    "sharpened_ratio",
];

/// Histogram bins of `ratio_vs_lb`: `[1.0, 1.1), ..., [2.9, 3.0]`.
const HIST_LOW: f64 = 1.0;
const HIST_WIDTH: f64 = 0.1;
const HIST_BINS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub eval: EvalReport,
    pub clairvoyant_lb: Option<f64>,
}

impl ReportRow {
    pub fn sharpened_ratio(&self) -> Option<f64> {
        self.clairvoyant_lb
            .map(|lb| ratio(self.eval.expected_cost, lb))
    }

    fn record(&self) -> [String; 12] {
        let e = &self.eval;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        [
            e.instance_id.clone(),
            e.policy.to_string(),
            e.mode.as_str().to_owned(),
            e.expected_cost.to_string(),
            e.bounds.tour_floor.to_string(),
            e.bounds.bertsimas.to_string(),
            e.bounds.combined_lb.to_string(),
            e.formula_ub.to_string(),
            e.ratio_vs_lb.to_string(),
            e.ub_respected.to_string(),
            opt(self.clairvoyant_lb),
            opt(self.sharpened_ratio()),
        ]
    }
}

/// CSV text with the fixed header, one line per row.
pub fn rows_to_csv(rows: &[ReportRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for row in rows {
        w.write_record(row.record()).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

/// Bin counts per policy as CSV: `policy,bin_low,bin_high,count`.
/// Ratios at or above the top edge land in the last bin.
pub fn ratio_histogram_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from("policy,bin_low,bin_high,count\n");
    for policy in Policy::ALL {
        let mut counts = [0u64; HIST_BINS];
        for r in rows.iter().filter(|r| r.eval.policy == policy) {
            let idx = ((r.eval.ratio_vs_lb - HIST_LOW) / HIST_WIDTH).floor();
            let idx = idx.clamp(0.0, (HIST_BINS - 1) as f64) as usize;
            counts[idx] += 1;
        }
        for (i, c) in counts.iter().enumerate() {
            let lo = HIST_LOW + HIST_WIDTH * i as f64;
            out.push_str(&format!("{policy},{lo:.1},{:.1},{c}\n", lo + HIST_WIDTH));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReportConfig {
    /// Master seed for any Monte Carlo fallback.
    pub seed: u64,
    /// Replications when exact enumeration is over the limit.
    pub samples: u64,
    pub enum_limit: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOutput {
    pub rows: Vec<ReportRow>,
    /// `(file, message)` for every instance that could not be evaluated.
    pub failures: Vec<(PathBuf, String)>,
}

/// Evaluates one instance under both policies. Exact when the enumeration
/// fits, Monte Carlo otherwise.
pub fn evaluate_instance(inst: &Instance, cfg: &ReportConfig) -> Result<Vec<ReportRow>, EvalError> {
    Policy::ALL
        .iter()
        .map(|&policy| {
            let eval = match evaluate(
                &inst.name,
                &inst.tree,
                &inst.model,
                policy,
                Method::Exact { limit: cfg.enum_limit },
            ) {
                Err(EvalError::TooLarge(_)) => evaluate(
                    &inst.name,
                    &inst.tree,
                    &inst.model,
                    policy,
                    Method::MonteCarlo {
                        samples: cfg.samples,
                        seed: cfg.seed,
                    },
                )?,
                other => other?,
            };
            Ok(ReportRow {
                eval,
                clairvoyant_lb: clairvoyant_for(inst, policy, cfg.enum_limit)?,
            })
        })
        .collect()
}

/// Partition bound for unsplit when small enough, edge bound otherwise;
/// `None` when the demand enumeration is over the limit.
pub fn clairvoyant_for(inst: &Instance, policy: Policy, limit: u64) -> Result<Option<f64>, EvalError> {
    let mode = match policy {
        Policy::Unsplit if inst.tree.customer_count() <= MAX_PARTITION_CUSTOMERS => LbMode::Partition,
        _ => LbMode::Edge,
    };
    match expected_clairvoyant_lb(&inst.tree, &inst.model, mode, limit) {
        Ok(v) => Ok(Some(v)),
        Err(OracleError::Eval(EvalError::TooLarge(_))) => Ok(None),
        Err(OracleError::Eval(e)) => Err(e),
        Err(OracleError::TooManyCustomers { .. }) => unreachable!("mode chosen by size"),
    }
}

/// Every `*.json` file directly inside `dir`, sorted by file name.
pub fn corpus_files(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "json") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Evaluates every instance in `dir`. A failing file is recorded and skipped.
pub fn run_report(dir: &Path, cfg: &ReportConfig) -> std::io::Result<ReportOutput> {
    let files = corpus_files(dir)?;
    let results: Vec<Result<Vec<ReportRow>, String>> = files
        .par_iter()
        .map(|path| {
            let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
            let inst = parse_instance(&text).map_err(|e| e.to_string())?;
            evaluate_instance(&inst, cfg).map_err(|e| e.to_string())
        })
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (path, res) in files.into_iter().zip(results) {
        match res {
            Ok(r) => rows.extend(r),
            Err(msg) => failures.push((path, msg)),
        }
    }
    rows.sort_by(|a, b| {
        (&a.eval.instance_id, a.eval.policy).cmp(&(&b.eval.instance_id, b.eval.policy))
    });
    Ok(ReportOutput { rows, failures })
}
