//! Experiment orchestration: expands a spec into variants, runs the trials
//! (in parallel, with deterministic result order), and writes per-trial
//! CSVs, per-variant aggregate CSVs, and a plain-text summary.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use rayon::prelude::*;
use thiserror::Error;

use crate::config::{CompareMode, ExperimentSpec, Study};
use crate::metrics::LEVELS;
use crate::sim::{run_trial, Composition, MetricsRow, SimConfig, SimMode, TrialResult};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "KTBT_THREADS";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Sim(#[from] crate::sim::SimError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("thread pool: {0}")]
    Pool(String),
}

/// One study variant: a name and the derived configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Variant {
    pub name: String,
    pub config: SimConfig,
}

/// Expands the study into concrete configurations. A spec without a study
/// runs the base configuration as the single variant `base`.
pub fn variants_for(spec: &ExperimentSpec) -> Vec<Variant> {
    let base = &spec.sim;
    let named = |name: String, config: SimConfig| Variant { name, config };
    match &spec.study {
        None | Some(Study::Heterogeneity) => {
            vec![named("base".into(), base.clone())]
        }
        Some(Study::Compare(modes)) => modes
            .iter()
            .map(|&mode| {
                let mut config = base.clone();
                match mode {
                    CompareMode::Bl1 => {
                        config.composition =
                            Composition::new([0, base.composition.total(), 0, 0, 0, 0]);
                        config.mode = SimMode::NoTransfer;
                    }
                    CompareMode::Bl2 => config.mode = SimMode::NoTransfer,
                    CompareMode::KtBt => config.mode = SimMode::KtBt,
                }
                named(mode.name().to_string(), config)
            })
            .collect(),
        Some(Study::Opportunities(counts)) => counts
            .iter()
            .map(|&count| {
                let mut config = base.clone();
                config.target_counts = [count; 4];
                named(format!("targets_{count}"), config)
            })
            .collect(),
        Some(Study::CommRange(ranges)) => ranges
            .iter()
            .map(|&range| {
                let mut config = base.clone();
                config.d_coms = range;
                named(format!("dcoms_{}", format_range(range)), config)
            })
            .collect(),
    }
}

fn format_range(range: f64) -> String {
    if range.fract() == 0.0 {
        format!("{}", range as i64)
    } else {
        format!("{range}")
    }
}

/// Results for one variant, trials ordered by trial index.
#[derive(Debug)]
pub struct VariantReport {
    pub variant: Variant,
    pub trials: Vec<TrialResult>,
    pub trial_csvs: Vec<PathBuf>,
    pub aggregate_csv: PathBuf,
}

impl VariantReport {
    /// Iterations to 99% per trial, with unfinished trials counted at the
    /// iteration cap.
    pub fn iterations_to_99_capped(&self) -> Vec<u64> {
        self.trials
            .iter()
            .map(|t| t.iterations_to_99.unwrap_or(self.variant.config.iterations))
            .collect()
    }
}

#[derive(Debug)]
pub struct ExperimentReport {
    pub variants: Vec<VariantReport>,
    pub summary_text: String,
    pub output_dir: PathBuf,
}

/// Sample mean and sample standard deviation (n - 1 denominator).
pub fn mean_and_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Mean series across trials. Sample grids can differ when trials stop
/// early, so each trial's last row is carried forward to later ticks.
pub fn aggregate_rows(trials: &[TrialResult]) -> Vec<MetricsRow> {
    let mut ticks: Vec<u64> = trials
        .iter()
        .flat_map(|t| t.rows.iter().map(|r| r.tick))
        .collect();
    ticks.sort_unstable();
    ticks.dedup();

    let n = trials.len() as f64;
    let mut out = Vec::with_capacity(ticks.len());
    for &tick in &ticks {
        let mut acc = MetricsRow {
            tick,
            collected_pct: 0.0,
            knows: [0; LEVELS],
            complexity: 0.0,
            disparity: 0.0,
            heterogeneity: 0.0,
            knowledge_score: 0.0,
            queries_sent: 0,
            queries_lost: 0,
            responses_sent: 0,
        };
        let mut knows_mean = [0.0f64; LEVELS];
        let mut sent = 0.0;
        let mut lost = 0.0;
        let mut responses = 0.0;
        for trial in trials {
            let row = trial
                .rows
                .iter()
                .take_while(|r| r.tick <= tick)
                .last()
                .unwrap_or(&trial.rows[0]);
            acc.collected_pct += row.collected_pct;
            acc.complexity += row.complexity;
            acc.disparity += row.disparity;
            acc.heterogeneity += row.heterogeneity;
            acc.knowledge_score += row.knowledge_score;
            for (sum, &count) in knows_mean.iter_mut().zip(&row.knows) {
                *sum += count as f64;
            }
            sent += row.queries_sent as f64;
            lost += row.queries_lost as f64;
            responses += row.responses_sent as f64;
        }
        acc.collected_pct /= n;
        acc.complexity /= n;
        acc.disparity /= n;
        acc.heterogeneity /= n;
        acc.knowledge_score /= n;
        for (slot, sum) in acc.knows.iter_mut().zip(knows_mean) {
            *slot = (sum / n).round() as u64;
        }
        acc.queries_sent = (sent / n).round() as u64;
        acc.queries_lost = (lost / n).round() as u64;
        acc.responses_sent = (responses / n).round() as u64;
        out.push(acc);
    }
    out
}

fn write_file(path: &PathBuf, contents: &str) -> Result<(), ExperimentError> {
    fs::write(path, contents).map_err(|source| ExperimentError::Io {
        path: path.clone(),
        source,
    })
}

fn rows_to_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from(MetricsRow::CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_line());
        out.push('\n');
    }
    out
}

fn summarize_variant(report: &VariantReport, out: &mut String) {
    let config = &report.variant.config;
    let iters: Vec<f64> = report
        .iterations_to_99_capped()
        .iter()
        .map(|&v| v as f64)
        .collect();
    let (iters_mean, iters_sd) = mean_and_sd(&iters);
    let reached = report
        .trials
        .iter()
        .filter(|t| t.iterations_to_99.is_some())
        .count();
    let finals = |f: fn(&TrialResult) -> f64| -> (f64, f64) {
        let values: Vec<f64> = report.trials.iter().map(f).collect();
        mean_and_sd(&values)
    };
    let (collected_mean, collected_sd) = finals(|t| t.final_collected_pct);
    let (score_mean, score_sd) = finals(|t| t.final_knowledge_score);
    let (knows4_mean, _) = finals(|t| t.final_census[4] as f64);
    let (lost_mean, _) = finals(|t| t.stats.queries_lost as f64);
    let (sent_mean, _) = finals(|t| t.stats.queries_sent as f64);

    writeln!(out, "variant {}", report.variant.name).unwrap();
    writeln!(out, "  trials: {}", report.trials.len()).unwrap();
    writeln!(
        out,
        "  reached 99%: {}/{} (unfinished counted at the {}-tick cap)",
        reached,
        report.trials.len(),
        config.iterations
    )
    .unwrap();
    writeln!(
        out,
        "  iterations to 99%: {iters_mean:.1} +/- {iters_sd:.1}"
    )
    .unwrap();
    writeln!(
        out,
        "  final collected %: {collected_mean:.4} +/- {collected_sd:.4}"
    )
    .unwrap();
    writeln!(
        out,
        "  final knowledge score: {score_mean:.6} +/- {score_sd:.6}"
    )
    .unwrap();
    writeln!(out, "  final knows-4 count: {knows4_mean:.2}").unwrap();
    writeln!(
        out,
        "  queries sent / lost: {sent_mean:.1} / {lost_mean:.1}"
    )
    .unwrap();
}

/// Runs every variant of the spec, `trials` runs each, and writes all
/// reports under `spec.output_dir`. Trials run in parallel (capped by the
/// `KTBT_THREADS` environment variable) but results are ordered by
/// `(variant, trial_index)` and output is byte-deterministic.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport, ExperimentError> {
    fs::create_dir_all(&spec.output_dir).map_err(|source| ExperimentError::Io {
        path: spec.output_dir.clone(),
        source,
    })?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Ok(threads) = std::env::var(THREADS_ENV) {
        if let Ok(threads) = threads.parse::<usize>() {
            pool = pool.num_threads(threads.max(1));
        }
    }
    let pool = pool
        .build()
        .map_err(|e| ExperimentError::Pool(e.to_string()))?;

    let mut reports = Vec::new();
    let mut summary = String::new();
    for variant in variants_for(spec) {
        let config = variant.config.clone();
        let trials: Result<Vec<TrialResult>, _> = pool.install(|| {
            (0..config.trials)
                .into_par_iter()
                .map(|i| run_trial(&config, i))
                .collect()
        });
        let trials = trials?;

        let mut trial_csvs = Vec::new();
        for (i, trial) in trials.iter().enumerate() {
            let path = spec
                .output_dir
                .join(format!("{}_trial_{i:03}.csv", variant.name));
            write_file(&path, &trial.to_csv())?;
            trial_csvs.push(path);
        }
        let aggregate_csv = spec.output_dir.join(format!("{}_mean.csv", variant.name));
        write_file(&aggregate_csv, &rows_to_csv(&aggregate_rows(&trials)))?;

        let report = VariantReport {
            variant,
            trials,
            trial_csvs,
            aggregate_csv,
        };
        summarize_variant(&report, &mut summary);
        reports.push(report);
    }

    let summary_path = spec.output_dir.join("summary.txt");
    write_file(&summary_path, &summary)?;

    Ok(ExperimentReport {
        variants: reports,
        summary_text: summary,
        output_dir: spec.output_dir.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desk_spec(dir: PathBuf) -> ExperimentSpec {
        ExperimentSpec {
            sim: SimConfig {
                composition: Composition::new([0, 2, 1, 1, 1, 1]),
                target_counts: [2, 2, 2, 2],
                d_coms: 150.0,
                iterations: 2000,
                trials: 2,
                seed: 11,
                arena: (600.0, 600.0),
                ..SimConfig::default()
            },
            study: None,
            output_dir: dir,
        }
    }

    #[test]
    fn variant_expansion_matches_the_study() {
        let spec = desk_spec(PathBuf::from("unused"));
        assert_eq!(variants_for(&spec).len(), 1);

        let mut compare = spec.clone();
        compare.study = Some(Study::Compare(vec![
            CompareMode::Bl1,
            CompareMode::Bl2,
            CompareMode::KtBt,
        ]));
        let variants = variants_for(&compare);
        assert_eq!(variants.len(), 3);
        assert_eq!(variants[0].name, "bl1");
        assert_eq!(variants[0].config.composition.counts(), [0, 6, 0, 0, 0, 0]);
        assert_eq!(variants[0].config.mode, SimMode::NoTransfer);
        assert_eq!(variants[1].config.mode, SimMode::NoTransfer);
        assert_eq!(variants[1].config.composition.counts(), [0, 2, 1, 1, 1, 1]);
        assert_eq!(variants[2].config.mode, SimMode::KtBt);

        let mut ranges = spec.clone();
        ranges.study = Some(Study::CommRange(vec![60.0, 120.0]));
        let variants = variants_for(&ranges);
        assert_eq!(variants[0].name, "dcoms_60");
        assert_eq!(variants[1].config.d_coms, 120.0);

        let mut opp = spec;
        opp.study = Some(Study::Opportunities(vec![4, 8]));
        let variants = variants_for(&opp);
        assert_eq!(variants[1].config.target_counts, [8; 4]);
    }

    #[test]
    fn experiment_writes_all_files_deterministically() {
        let dir = tempfile::tempdir().unwrap();
        let spec = desk_spec(dir.path().join("run"));
        let report = run_experiment(&spec).unwrap();
        assert_eq!(report.variants.len(), 1);
        assert_eq!(report.variants[0].trial_csvs.len(), 2);
        for path in &report.variants[0].trial_csvs {
            assert!(path.exists());
        }
        assert!(report.variants[0].aggregate_csv.exists());
        assert!(spec.output_dir.join("summary.txt").exists());

        // Re-running reproduces every CSV byte for byte.
        let first: Vec<String> = report.variants[0]
            .trial_csvs
            .iter()
            .map(|p| fs::read_to_string(p).unwrap())
            .collect();
        let report2 = run_experiment(&spec).unwrap();
        let second: Vec<String> = report2.variants[0]
            .trial_csvs
            .iter()
            .map(|p| fs::read_to_string(p).unwrap())
            .collect();
        assert_eq!(first, second);
        assert_eq!(report.summary_text, report2.summary_text);
    }

    #[test]
    fn single_trial_aggregate_equals_the_trial() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = desk_spec(dir.path().join("run"));
        spec.sim.trials = 1;
        let report = run_experiment(&spec).unwrap();
        let aggregate = fs::read_to_string(&report.variants[0].aggregate_csv).unwrap();
        let trial = fs::read_to_string(&report.variants[0].trial_csvs[0]).unwrap();
        assert_eq!(aggregate, trial);
    }

    #[test]
    fn mean_and_sd_uses_sample_denominator() {
        let (mean, sd) = mean_and_sd(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert!((mean - 5.0).abs() < 1e-12);
        // Sample variance of this classic set is 32/7.
        assert!((sd - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
    }
}
