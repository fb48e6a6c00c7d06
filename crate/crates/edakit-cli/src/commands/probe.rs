//! `edakit probe` — linear probing of one feature file under one CV
//! protocol, with per-fold inner grid search.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use edakit::eval::{dummy_best, make_folds, metrics_bool, FoldPlan, MetricsTriple, Protocol};
use edakit::features::io::read_feature_csv;
use edakit::probe::{grid_select, ProbeGrid};
use edakit::segment::WindowMeta;

use crate::config::{load_section, persist_resolved, pick};
use crate::error::CliError;

#[derive(Args)]
pub struct ProbeArgs {
    /// Feature CSV (from `features` or `embed`).
    #[arg(long)]
    features: Option<PathBuf>,
    /// CV protocol: `lopo` or `ta`.
    #[arg(long)]
    protocol: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Inner CV folds for the grid search.
    #[arg(long)]
    inner_folds: Option<usize>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct ProbeFileConfig {
    features: Option<PathBuf>,
    protocol: Option<String>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    inner_folds: Option<usize>,
}

#[derive(Debug, Serialize)]
struct Resolved {
    features: PathBuf,
    protocol: String,
    seed: u64,
    out: PathBuf,
    inner_folds: usize,
    grid: ProbeGrid,
}

pub fn parse_protocol(s: &str) -> Result<Protocol, CliError> {
    match s {
        "lopo" => Ok(Protocol::Lopo),
        "ta" => Ok(Protocol::TimeAware),
        other => Err(CliError::data(format!("unknown protocol {other:?} (lopo|ta)"))),
    }
}

/// One fold's probe outcome.
#[derive(Debug, Clone, Serialize)]
pub struct FoldOutcome {
    pub fold: usize,
    pub chosen_c: f64,
    pub metrics: MetricsTriple,
    pub dummy_ba: f64,
    pub dummy_kind: String,
    pub test_windows: usize,
}

/// Fit and score every fold of a plan on a feature matrix.
pub fn probe_over_plan(
    rows: &[Vec<f64>],
    metas: &[WindowMeta],
    plan: &FoldPlan,
    grid: &ProbeGrid,
    inner_folds: usize,
    seed: u64,
) -> Result<Vec<FoldOutcome>, CliError> {
    let label_of = |i: usize| -> Result<bool, CliError> {
        metas[i]
            .label
            .ok_or_else(|| CliError::data(format!("window {i} has no label")))
    };
    let mut outcomes = Vec::with_capacity(plan.folds.len());
    for (fi, fold) in plan.folds.iter().enumerate() {
        let mut x_tr = Vec::with_capacity(fold.train.len());
        let mut y_tr = Vec::with_capacity(fold.train.len());
        for &i in &fold.train {
            x_tr.push(rows[i].clone());
            y_tr.push(label_of(i)?);
        }
        let mut x_te = Vec::with_capacity(fold.test.len());
        let mut y_te = Vec::with_capacity(fold.test.len());
        for &i in &fold.test {
            x_te.push(rows[i].clone());
            y_te.push(label_of(i)?);
        }
        if y_te.is_empty() || y_tr.is_empty() {
            return Err(CliError::data(format!("fold {fi} has an empty side")));
        }

        let (model, _report) = grid_select(&x_tr, &y_tr, grid, inner_folds, seed ^ fi as u64)?;
        let preds: Vec<bool> = x_te.iter().map(|r| model.predict(r)).collect();
        let m = metrics_bool(&y_te, &preds)?;

        let y_tr_u8: Vec<u8> = y_tr.iter().map(|v| *v as u8).collect();
        let y_te_u8: Vec<u8> = y_te.iter().map(|v| *v as u8).collect();
        let dummy = dummy_best(&y_tr_u8, &y_te_u8, seed ^ (fi as u64) << 32)?;

        outcomes.push(FoldOutcome {
            fold: fi,
            chosen_c: model.chosen_c,
            metrics: m,
            dummy_ba: dummy.balanced_accuracy,
            dummy_kind: format!("{:?}", dummy.which),
            test_windows: fold.test.len(),
        });
    }
    Ok(outcomes)
}

pub fn run(args: ProbeArgs, config: Option<&Path>) -> Result<(), CliError> {
    let file: ProbeFileConfig = load_section(config, "probe")?.unwrap_or_default();
    let features = args
        .features
        .or(file.features)
        .ok_or_else(|| CliError::data("probe: --features is required"))?;
    let protocol_name = args.protocol.or(file.protocol).unwrap_or_else(|| "lopo".into());
    let protocol = parse_protocol(&protocol_name)?;
    let seed = pick(args.seed, file.seed, 0);
    let out = args
        .out
        .or(file.out)
        .ok_or_else(|| CliError::data("probe: --out is required"))?;
    let inner_folds = pick(args.inner_folds, file.inner_folds, 3);

    let (metas, rows, _names) = read_feature_csv(&features)?;
    let labeled: Vec<usize> = (0..metas.len()).filter(|&i| metas[i].label.is_some()).collect();
    if labeled.len() != metas.len() {
        return Err(CliError::data(format!(
            "{} of {} windows lack labels; probe needs labeled windows",
            metas.len() - labeled.len(),
            metas.len()
        )));
    }

    let plan = make_folds(&metas, protocol, seed)?;
    std::fs::create_dir_all(&out)?;
    plan.save(&out.join("fold_plan.json"))?;

    let grid = ProbeGrid::default();
    let outcomes = probe_over_plan(&rows, &metas, &plan, &grid, inner_folds, seed)?;

    let mut csv = std::io::BufWriter::new(std::fs::File::create(out.join("probe_results.csv"))?);
    writeln!(
        csv,
        "fold,chosen_c,balanced_accuracy,mcc,f1,dummy_ba,dummy_kind,test_windows"
    )?;
    for o in &outcomes {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            o.fold,
            o.chosen_c,
            o.metrics.balanced_accuracy,
            o.metrics.mcc,
            o.metrics.f1,
            o.dummy_ba,
            o.dummy_kind,
            o.test_windows
        )?;
    }
    let report =
        edakit::eval::MetricReport::from_folds(outcomes.iter().map(|o| o.metrics).collect());
    writeln!(
        csv,
        "mean,,{},{},{},,,",
        report.balanced_accuracy.0, report.mcc.0, report.f1.0
    )?;
    writeln!(csv, "se,,{},{},{},,,", report.balanced_accuracy.1, report.mcc.1, report.f1.1)?;
    csv.flush()?;

    persist_resolved(
        &out,
        "probe",
        &Resolved {
            features,
            protocol: protocol_name,
            seed,
            out: out.clone(),
            inner_folds,
            grid,
        },
    )?;
    println!(
        "probed {} folds: balanced accuracy {:.4} +/- {:.4}",
        outcomes.len(),
        report.balanced_accuracy.0,
        report.balanced_accuracy.1
    );
    Ok(())
}
