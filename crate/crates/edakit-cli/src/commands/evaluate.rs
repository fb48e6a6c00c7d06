//! `edakit evaluate` — multi-method comparison: per task (dataset),
//! probe every method under one CV protocol, report metrics with
//! standard errors next to the best dummy, and run the rank statistics
//! across methods.
//!
//! Methods are feature CSVs (`NAME=path`); externally computed feature
//! sets participate as long as their rows describe the same windows.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use edakit::eval::{
    friedman_nemenyi, make_folds, mean_se, paired_ttest_bonferroni, MetricReport,
};
use edakit::features::io::read_feature_csv;
use edakit::probe::ProbeGrid;
use edakit::segment::WindowMeta;

use super::probe::{parse_protocol, probe_over_plan, FoldOutcome};
use crate::config::{load_section, persist_resolved, pick};
use crate::error::CliError;

#[derive(Args)]
pub struct EvaluateArgs {
    /// Methods as NAME=feature.csv (repeatable).
    #[arg(long = "method", num_args = 1..)]
    methods: Vec<String>,
    /// CV protocol: `lopo` or `ta`.
    #[arg(long)]
    protocol: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    inner_folds: Option<usize>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct EvaluateConfig {
    methods: Option<Vec<String>>,
    protocol: Option<String>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    inner_folds: Option<usize>,
}

#[derive(Debug, Serialize)]
struct Resolved {
    methods: Vec<String>,
    protocol: String,
    seed: u64,
    out: PathBuf,
    inner_folds: usize,
}

fn parse_methods(specs: &[String]) -> Result<Vec<(String, PathBuf)>, CliError> {
    if specs.is_empty() {
        return Err(CliError::data("evaluate: at least one --method NAME=FILE is required"));
    }
    specs
        .iter()
        .map(|s| {
            s.split_once('=')
                .map(|(name, path)| (name.to_string(), PathBuf::from(path)))
                .ok_or_else(|| CliError::data(format!("bad method spec {s:?}, want NAME=FILE")))
        })
        .collect()
}

pub fn run(args: EvaluateArgs, config: Option<&Path>) -> Result<(), CliError> {
    let file: EvaluateConfig = load_section(config, "evaluate")?.unwrap_or_default();
    let method_specs = if args.methods.is_empty() {
        file.methods.unwrap_or_default()
    } else {
        args.methods
    };
    let methods = parse_methods(&method_specs)?;
    let protocol_name = args.protocol.or(file.protocol).unwrap_or_else(|| "lopo".into());
    let protocol = parse_protocol(&protocol_name)?;
    let seed = pick(args.seed, file.seed, 0);
    let out = args
        .out
        .or(file.out)
        .ok_or_else(|| CliError::data("evaluate: --out is required"))?;
    let inner_folds = pick(args.inner_folds, file.inner_folds, 3);

    // Load every method; all must describe identical windows.
    let mut loaded: Vec<(String, Vec<WindowMeta>, Vec<Vec<f64>>)> = Vec::new();
    for (name, path) in &methods {
        let (metas, rows, _) = read_feature_csv(path)?;
        if metas.iter().any(|m| m.label.is_none()) {
            return Err(CliError::data(format!(
                "method {name}: feature file contains unlabeled windows"
            )));
        }
        if let Some((_, first_metas, _)) = loaded.first() {
            if first_metas != &metas {
                return Err(CliError::data(format!(
                    "method {name}: window metadata differs from the first method; \
                     all methods must describe the same windows"
                )));
            }
        }
        loaded.push((name.clone(), metas, rows));
    }
    let metas = loaded[0].1.clone();

    // Tasks: one binary task per dataset id.
    let mut tasks: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, m) in metas.iter().enumerate() {
        tasks.entry(m.dataset_id.clone()).or_default().push(i);
    }

    std::fs::create_dir_all(&out)?;
    let grid = ProbeGrid::default();

    let mut results = std::io::BufWriter::new(std::fs::File::create(out.join("results.csv"))?);
    writeln!(
        results,
        "method,task,protocol,n_folds,balanced_accuracy_mean,balanced_accuracy_se,\
         mcc_mean,mcc_se,f1_mean,f1_se,dummy_ba_mean,dummy_ba_se,solvable"
    )?;

    // method -> task -> fold BAs (for the statistics below).
    let mut fold_bas: BTreeMap<String, BTreeMap<String, Vec<f64>>> = BTreeMap::new();
    let mut dummy_fold_bas: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut rows_buffer: Vec<(String, String, MetricReport, (f64, f64))> = Vec::new();

    for (task, idx) in &tasks {
        let task_metas: Vec<WindowMeta> = idx.iter().map(|&i| metas[i].clone()).collect();
        let plan = make_folds(&task_metas, protocol, seed)?;
        plan.save(&out.join(format!("fold_plan_{task}.json")))?;

        for (name, _m, rows) in &loaded {
            let task_rows: Vec<Vec<f64>> = idx.iter().map(|&i| rows[i].clone()).collect();
            let outcomes: Vec<FoldOutcome> =
                probe_over_plan(&task_rows, &task_metas, &plan, &grid, inner_folds, seed)?;
            let report =
                MetricReport::from_folds(outcomes.iter().map(|o| o.metrics).collect());
            let dummies: Vec<f64> = outcomes.iter().map(|o| o.dummy_ba).collect();
            let dummy_stats = mean_se(&dummies);
            fold_bas
                .entry(name.clone())
                .or_default()
                .insert(task.clone(), outcomes.iter().map(|o| o.metrics.balanced_accuracy).collect());
            dummy_fold_bas.entry(task.clone()).or_insert(dummies);
            rows_buffer.push((name.clone(), task.clone(), report, dummy_stats));
        }
    }

    // Solvable flag per task: some method beats the dummy mean.
    let mut solvable: BTreeMap<String, bool> = BTreeMap::new();
    for (_, task, report, dummy) in &rows_buffer {
        let e = solvable.entry(task.clone()).or_insert(false);
        *e = *e || report.balanced_accuracy.0 > dummy.0;
    }
    for (name, task, report, dummy) in &rows_buffer {
        writeln!(
            results,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            name,
            task,
            protocol_name,
            report.per_fold.len(),
            report.balanced_accuracy.0,
            report.balanced_accuracy.1,
            report.mcc.0,
            report.mcc.1,
            report.f1.0,
            report.f1.1,
            dummy.0,
            dummy.1,
            solvable[task]
        )?;
    }
    results.flush()?;

    // Rank statistics across methods + dummy, one experiment per task.
    let method_names: Vec<String> = loaded.iter().map(|(n, _, _)| n.clone()).collect();
    let task_names: Vec<String> = tasks.keys().cloned().collect();
    let mut stats_csv = std::io::BufWriter::new(std::fs::File::create(out.join("stats.csv"))?);
    if task_names.len() >= 2 {
        let mut score_matrix: Vec<Vec<f64>> = Vec::new();
        for name in &method_names {
            score_matrix.push(
                task_names
                    .iter()
                    .map(|t| mean_se(&fold_bas[name][t]).0)
                    .collect(),
            );
        }
        score_matrix.push(
            task_names
                .iter()
                .map(|t| mean_se(&dummy_fold_bas[t]).0)
                .collect(),
        );
        let mut all_names = method_names.clone();
        all_names.push("dummy".into());

        let fr = friedman_nemenyi(&score_matrix)?;
        writeln!(stats_csv, "statistic,value")?;
        writeln!(stats_csv, "friedman_chi2,{}", fr.chi2)?;
        writeln!(stats_csv, "friedman_p,{}", fr.p_value)?;
        for (name, rank) in all_names.iter().zip(&fr.mean_ranks) {
            writeln!(stats_csv, "mean_rank_{name},{rank}")?;
        }
        for a in 0..all_names.len() {
            for b in a + 1..all_names.len() {
                writeln!(
                    stats_csv,
                    "nemenyi_p_{}_{},{}",
                    all_names[a], all_names[b], fr.pairwise_p[a][b]
                )?;
            }
        }
    } else {
        writeln!(stats_csv, "statistic,value")?;
        writeln!(stats_csv, "friedman_chi2,")?;
        writeln!(stats_csv, "friedman_p,")?;
    }

    // Bonferroni-corrected paired t-tests vs the dummy, per task.
    for task in &task_names {
        for name in &method_names {
            let a = &fold_bas[name][task];
            let b = &dummy_fold_bas[task];
            match paired_ttest_bonferroni(a, b, method_names.len()) {
                Ok(p) => writeln!(stats_csv, "bonferroni_vs_dummy_{name}_{task},{p}")?,
                Err(edakit::eval::EvalError::ZeroVariance) => {
                    writeln!(stats_csv, "bonferroni_vs_dummy_{name}_{task},undefined")?
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    stats_csv.flush()?;

    persist_resolved(
        &out,
        "evaluate",
        &Resolved {
            methods: method_specs,
            protocol: protocol_name,
            seed,
            out: out.clone(),
            inner_folds,
        },
    )?;
    println!(
        "evaluated {} methods on {} tasks; results in {}",
        method_names.len(),
        task_names.len(),
        out.display()
    );
    Ok(())
}
