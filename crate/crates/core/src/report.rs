//! The analysis pipeline and report emission.
//!
//! `analyze` runs eligibility → bucketize → rank_corpus → assign_tiers →
//! classify_growth over an open snapshot; `write_reports` serializes the
//! result as CSV/JSON under `<snapshot>/reports/`. Everything is sorted
//! before emission, so a given snapshot always produces byte-identical
//! report files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::classifier::{
    assign_tiers, classify_growth, ClassificationConfig, GrowthLabelSet, GrowthPattern,
    PopularityTier, Tier,
};
use crate::corpus::{FullName, RepoRecord, Snapshot};
use crate::error::{Error, Result};
use crate::npm::PackageUsage;
use crate::stats::{quartiles_by_group, rank_star_curve, spearman, CorrelationResult};
use crate::time::Timestamp;
use crate::trajectory::{
    bucketize, eligibility, rank_corpus, Eligibility, RankTrajectory, WeeklyStarSeries,
};

pub const REPORTS_DIR: &str = "reports";
pub const TIERS_CSV: &str = "tiers.csv";
pub const GROWTH_CSV: &str = "growth.csv";
pub const LANGUAGE_QUARTILES_CSV: &str = "language_quartiles.csv";
pub const RANK_CURVE_CSV: &str = "rank_curve.csv";
pub const CORRELATIONS_JSON: &str = "correlations.json";
pub const SUMMARY_JSON: &str = "summary.json";
pub const FORKS_SCATTER_CSV: &str = "stars_forks_scatter.csv";
pub const DEPENDENTS_SCATTER_CSV: &str = "stars_dependents_scatter.csv";

/// Analysis knobs: window length plus classification thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    pub weeks: usize,
    pub config: ClassificationConfig,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            weeks: crate::trajectory::DEFAULT_WEEKS,
            config: ClassificationConfig::default(),
        }
    }
}

/// Everything computed for one eligible repository.
#[derive(Debug, Clone)]
pub struct RepoAnalysis {
    pub record: RepoRecord,
    pub series: WeeklyStarSeries,
    pub trajectory: RankTrajectory,
    pub labels: GrowthLabelSet,
}

/// Full analysis of a snapshot.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub snapshot_at: Timestamp,
    pub weeks: usize,
    pub config: ClassificationConfig,
    /// Tier per repo, parallel to `Snapshot::repos()`.
    pub tiers: Vec<PopularityTier>,
    /// Repos left out of trajectory analysis, with the reason, sorted by name.
    pub excluded: Vec<(FullName, String)>,
    /// Per-repo trajectory results, sorted by full name.
    pub eligible: Vec<RepoAnalysis>,
}

/// Runs the whole per-repo pipeline over a snapshot.
///
/// Tier assignment covers every repo; trajectory classification covers the
/// eligible subset. An empty snapshot or one with no eligible repos is not
/// an error — the corresponding sections come back empty.
pub fn analyze(snapshot: &Snapshot, options: &AnalysisOptions) -> Result<Analysis> {
    options.config.validate()?;
    if options.weeks < 2 {
        return Err(Error::Validation(format!(
            "window must span at least 2 weeks, got {}",
            options.weeks
        )));
    }
    let snapshot_at = snapshot.snapshot_at();

    let tiers = if snapshot.repos().is_empty() {
        Vec::new()
    } else {
        assign_tiers(snapshot.repos(), &options.config)?
    };

    let mut excluded = Vec::new();
    let mut series_set = Vec::new();
    let mut eligible_records = Vec::new();
    for repo in snapshot.repos() {
        let complete = snapshot.is_complete(&repo.full_name);
        match eligibility(repo, complete, snapshot_at, options.weeks) {
            Eligibility::Eligible => {
                let series = bucketize(
                    &repo.full_name,
                    snapshot.events(&repo.full_name),
                    snapshot_at,
                    options.weeks,
                )?;
                series_set.push(series);
                eligible_records.push(repo.clone());
            }
            Eligibility::Ineligible(reason) => {
                excluded.push((repo.full_name.clone(), reason.to_string()));
            }
        }
    }

    let mut eligible = Vec::with_capacity(series_set.len());
    if !series_set.is_empty() {
        // rank_corpus sorts by name; records and series already are
        let trajectories = rank_corpus(&series_set)?;
        for ((record, series), trajectory) in
            eligible_records.into_iter().zip(series_set).zip(trajectories)
        {
            let labels = classify_growth(&trajectory, &series, &options.config)?;
            eligible.push(RepoAnalysis {
                record,
                series,
                trajectory,
                labels,
            });
        }
    }

    Ok(Analysis {
        snapshot_at,
        weeks: options.weeks,
        config: options.config.clone(),
        tiers,
        excluded,
        eligible,
    })
}

/// Paths of the report files one analysis run produces.
#[derive(Debug, Clone)]
pub struct ReportBundle {
    pub tiers_csv: PathBuf,
    pub growth_csv: PathBuf,
    pub language_quartiles_csv: PathBuf,
    pub rank_curve_csv: PathBuf,
    pub correlations_json: PathBuf,
    pub summary_json: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrelationsReport {
    /// Null when the corpus is too small or a side is constant.
    pub stars_vs_forks: Option<CorrelationResult>,
    /// Null without usable usage data.
    pub stars_vs_dependents: Option<CorrelationResult>,
}

#[derive(Debug, Serialize)]
struct ExcludedEntry<'a> {
    repo: &'a FullName,
    reason: &'a str,
}

#[derive(Debug, Serialize)]
struct TierCounts {
    very_popular: u64,
    popular: u64,
    ordinary: u64,
}

#[derive(Debug, Default, Serialize)]
struct PatternCounts {
    sustainable: u64,
    fast: u64,
    slow: u64,
    viral: u64,
    other: u64,
}

impl PatternCounts {
    fn add(&mut self, labels: &GrowthLabelSet) {
        if labels.matched.is_empty() {
            self.other += 1;
            return;
        }
        for pattern in &labels.matched {
            match pattern {
                GrowthPattern::Sustainable => self.sustainable += 1,
                GrowthPattern::Fast => self.fast += 1,
                GrowthPattern::Slow => self.slow += 1,
                GrowthPattern::Viral => self.viral += 1,
            }
        }
    }
}

#[derive(Debug, Serialize)]
struct LanguagePatternRow {
    language: String,
    repos: u64,
    #[serde(flatten)]
    counts: PatternCounts,
}

#[derive(Debug, Serialize)]
struct SummaryReport<'a> {
    snapshot_at: Timestamp,
    weeks: usize,
    repo_count: u64,
    eligible_count: u64,
    excluded: Vec<ExcludedEntry<'a>>,
    tier_counts: TierCounts,
    pattern_totals: PatternCounts,
    patterns_by_language: Vec<LanguagePatternRow>,
}

/// Writes the six report files under `<snapshot_dir>/reports/`.
///
/// `usage` feeds the stars-vs-dependents correlation; pass the cached
/// entries or an empty slice.
pub fn write_reports(
    snapshot_dir: &Path,
    snapshot: &Snapshot,
    analysis: &Analysis,
    usage: &[PackageUsage],
) -> Result<ReportBundle> {
    let dir = snapshot_dir.join(REPORTS_DIR);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

    let bundle = ReportBundle {
        tiers_csv: dir.join(TIERS_CSV),
        growth_csv: dir.join(GROWTH_CSV),
        language_quartiles_csv: dir.join(LANGUAGE_QUARTILES_CSV),
        rank_curve_csv: dir.join(RANK_CURVE_CSV),
        correlations_json: dir.join(CORRELATIONS_JSON),
        summary_json: dir.join(SUMMARY_JSON),
    };

    write_tiers_csv(&bundle.tiers_csv, snapshot, analysis)?;
    write_growth_csv(&bundle.growth_csv, analysis)?;
    write_language_quartiles_csv(&bundle.language_quartiles_csv, snapshot)?;
    write_rank_curve_csv(&bundle.rank_curve_csv, snapshot)?;
    let correlations = CorrelationsReport {
        stars_vs_forks: stars_vs_forks(snapshot).ok(),
        stars_vs_dependents: stars_vs_dependents(snapshot, usage)
            .ok()
            .map(|(result, _)| result),
    };
    write_json(&bundle.correlations_json, &correlations)?;
    write_summary_json(&bundle.summary_json, snapshot, analysis)?;
    Ok(bundle)
}

fn write_tiers_csv(path: &Path, snapshot: &Snapshot, analysis: &Analysis) -> Result<()> {
    let mut order: Vec<usize> = (0..snapshot.repos().len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (&snapshot.repos()[a], &snapshot.repos()[b]);
        rb.stars_at_snapshot
            .cmp(&ra.stars_at_snapshot)
            .then_with(|| ra.full_name.cmp(&rb.full_name))
    });
    let mut writer = csv_writer(path)?;
    writer
        .write_record([
            "full_name",
            "language",
            "stars_at_snapshot",
            "forks_at_snapshot",
            "tier",
            "threshold_stars",
        ])
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    for i in order {
        let repo = &snapshot.repos()[i];
        let tier = &analysis.tiers[i];
        writer
            .write_record([
                repo.full_name.as_str(),
                &repo.language,
                &repo.stars_at_snapshot.to_string(),
                &repo.forks_at_snapshot.to_string(),
                &tier.tier.to_string(),
                &tier.threshold_stars.to_string(),
            ])
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    }
    finish_csv(writer, path)
}

fn write_growth_csv(path: &Path, analysis: &Analysis) -> Result<()> {
    let mut writer = csv_writer(path)?;
    writer
        .write_record([
            "full_name",
            "language",
            "r_old",
            "r_now",
            "r_top",
            "r_bottom",
            "matched_labels",
            "canonical_label",
        ])
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    for repo in &analysis.eligible {
        let matched = repo
            .labels
            .matched
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join(";");
        writer
            .write_record([
                repo.record.full_name.as_str(),
                &repo.record.language,
                &format!("{:.6}", repo.trajectory.r_old),
                &format!("{:.6}", repo.trajectory.r_now),
                &format!("{:.6}", repo.trajectory.r_top),
                &format!("{:.6}", repo.trajectory.r_bottom),
                &matched,
                &repo.labels.canonical.to_string(),
            ])
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    }
    finish_csv(writer, path)
}

fn write_language_quartiles_csv(path: &Path, snapshot: &Snapshot) -> Result<()> {
    let values: Vec<(String, f64)> = snapshot
        .repos()
        .iter()
        .map(|r| (r.language.clone(), r.stars_at_snapshot as f64))
        .collect();
    let summaries = quartiles_by_group(&values)?;
    let mut writer = csv_writer(path)?;
    writer
        .write_record(["language", "n", "min", "q1", "median", "q3", "max"])
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    for s in summaries {
        writer
            .write_record([
                s.group_key.as_str(),
                &s.n.to_string(),
                &format!("{:.2}", s.min),
                &format!("{:.2}", s.q1),
                &format!("{:.2}", s.median),
                &format!("{:.2}", s.q3),
                &format!("{:.2}", s.max),
            ])
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    }
    finish_csv(writer, path)
}

fn write_rank_curve_csv(path: &Path, snapshot: &Snapshot) -> Result<()> {
    let mut writer = csv_writer(path)?;
    writer
        .write_record(["rank", "stars"])
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    for (rank, stars) in rank_star_curve(snapshot.repos()) {
        writer
            .write_record([rank.to_string(), stars.to_string()])
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    }
    finish_csv(writer, path)
}

fn write_summary_json(path: &Path, snapshot: &Snapshot, analysis: &Analysis) -> Result<()> {
    let mut tier_counts = TierCounts {
        very_popular: 0,
        popular: 0,
        ordinary: 0,
    };
    for tier in &analysis.tiers {
        match tier.tier {
            Tier::VeryPopular => tier_counts.very_popular += 1,
            Tier::Popular => tier_counts.popular += 1,
            Tier::Ordinary => tier_counts.ordinary += 1,
        }
    }

    let mut pattern_totals = PatternCounts::default();
    let mut by_language: BTreeMap<&str, (u64, PatternCounts)> = BTreeMap::new();
    for repo in &analysis.eligible {
        pattern_totals.add(&repo.labels);
        let entry = by_language
            .entry(repo.record.language.as_str())
            .or_default();
        entry.0 += 1;
        entry.1.add(&repo.labels);
    }
    let mut patterns_by_language: Vec<LanguagePatternRow> = by_language
        .into_iter()
        .map(|(language, (repos, counts))| LanguagePatternRow {
            language: language.to_string(),
            repos,
            counts,
        })
        .collect();
    patterns_by_language.sort_by(|a, b| {
        b.repos
            .cmp(&a.repos)
            .then_with(|| a.language.cmp(&b.language))
    });

    let summary = SummaryReport {
        snapshot_at: analysis.snapshot_at,
        weeks: analysis.weeks,
        repo_count: snapshot.manifest().repo_count,
        eligible_count: analysis.eligible.len() as u64,
        excluded: analysis
            .excluded
            .iter()
            .map(|(repo, reason)| ExcludedEntry {
                repo,
                reason: reason.as_str(),
            })
            .collect(),
        tier_counts,
        pattern_totals,
        patterns_by_language,
    };
    write_json(path, &summary)
}

fn stars_vs_forks(snapshot: &Snapshot) -> Result<CorrelationResult> {
    let stars: Vec<f64> = snapshot
        .repos()
        .iter()
        .map(|r| r.stars_at_snapshot as f64)
        .collect();
    let forks: Vec<f64> = snapshot
        .repos()
        .iter()
        .map(|r| r.forks_at_snapshot as f64)
        .collect();
    spearman(&stars, &forks)
}

/// One scatter row for the dependents plot: repo, package, stars, dependents.
type DependentsRow = (FullName, String, u64, u64);

/// Joins usage entries with snapshot repos (usage rows for unknown repos are
/// dropped) and correlates stars with dependents.
fn stars_vs_dependents(
    snapshot: &Snapshot,
    usage: &[PackageUsage],
) -> Result<(CorrelationResult, Vec<DependentsRow>)> {
    let mut rows: Vec<DependentsRow> = usage
        .iter()
        .filter_map(|u| {
            snapshot.repo(&u.repo).map(|record| {
                (
                    u.repo.clone(),
                    u.package_name.clone(),
                    record.stars_at_snapshot,
                    u.dependents,
                )
            })
        })
        .collect();
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    if usage.is_empty() {
        return Err(Error::Validation("no usage data".to_string()));
    }
    let stars: Vec<f64> = rows.iter().map(|r| r.2 as f64).collect();
    let dependents: Vec<f64> = rows.iter().map(|r| r.3 as f64).collect();
    let result = spearman(&stars, &dependents)?;
    Ok((result, rows))
}

/// Outcome of the correlation pass, with the file paths it wrote.
#[derive(Debug, Clone)]
pub struct CorrelateOutcome {
    pub stars_vs_forks: CorrelationResult,
    pub stars_vs_dependents: Option<CorrelationResult>,
    /// Usage entries that named repos outside the snapshot.
    pub unmatched_usage: usize,
    pub files: Vec<PathBuf>,
}

/// Correlates stars with forks (always) and with dependents (when usage
/// data is supplied), writing `correlations.json` and scatter CSVs.
///
/// Unlike report emission, correlation failures here are hard errors: too
/// few points or a constant input should fail the command.
pub fn correlate(
    snapshot_dir: &Path,
    snapshot: &Snapshot,
    usage: &[PackageUsage],
) -> Result<CorrelateOutcome> {
    let dir = snapshot_dir.join(REPORTS_DIR);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

    let forks_result = stars_vs_forks(snapshot)?;
    let mut files = Vec::new();

    let forks_path = dir.join(FORKS_SCATTER_CSV);
    let mut writer = csv_writer(&forks_path)?;
    writer
        .write_record(["full_name", "stars", "forks"])
        .map_err(|e| Error::Format(format!("{}: {e}", forks_path.display())))?;
    for repo in snapshot.repos() {
        writer
            .write_record([
                repo.full_name.as_str(),
                &repo.stars_at_snapshot.to_string(),
                &repo.forks_at_snapshot.to_string(),
            ])
            .map_err(|e| Error::Format(format!("{}: {e}", forks_path.display())))?;
    }
    finish_csv(writer, &forks_path)?;
    files.push(forks_path);

    let mut dependents_result = None;
    let mut unmatched_usage = 0;
    if !usage.is_empty() {
        let (result, rows) = stars_vs_dependents(snapshot, usage)?;
        unmatched_usage = usage.len() - rows.len();
        let path = dir.join(DEPENDENTS_SCATTER_CSV);
        let mut writer = csv_writer(&path)?;
        writer
            .write_record(["full_name", "package_name", "stars", "dependents"])
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        for (repo, package, stars, dependents) in &rows {
            writer
                .write_record([
                    repo.as_str(),
                    package,
                    &stars.to_string(),
                    &dependents.to_string(),
                ])
                .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        }
        finish_csv(writer, &path)?;
        files.push(path);
        dependents_result = Some(result);
    }

    let correlations = CorrelationsReport {
        stars_vs_forks: Some(forks_result),
        stars_vs_dependents: dependents_result,
    };
    let json_path = dir.join(CORRELATIONS_JSON);
    write_json(&json_path, &correlations)?;
    files.push(json_path);

    Ok(CorrelateOutcome {
        stars_vs_forks: forks_result,
        stars_vs_dependents: dependents_result,
        unmatched_usage,
        files,
    })
}

/// Emits gnuplot scripts next to the report CSVs that exist, returning the
/// scripts written. Scripts read their data with relative paths, so run
/// gnuplot from the reports directory.
pub fn write_plot_scripts(reports_dir: &Path) -> Result<Vec<PathBuf>> {
    let scripts: [(&str, &str, &str); 4] = [
        (
            RANK_CURVE_CSV,
            "rank_curve.gp",
            concat!(
                "set datafile separator ','\n",
                "set terminal pngcairo size 900,600\n",
                "set output 'rank_curve.png'\n",
                "set key off\n",
                "set xlabel 'rank'\n",
                "set ylabel 'stars'\n",
                "set logscale y 2\n",
                "plot 'rank_curve.csv' skip 1 using 1:2 with lines lw 2\n",
            ),
        ),
        (
            LANGUAGE_QUARTILES_CSV,
            "stars_by_language.gp",
            concat!(
                "set datafile separator ','\n",
                "set terminal pngcairo size 900,600\n",
                "set output 'stars_by_language.png'\n",
                "set key off\n",
                "set ylabel 'stars'\n",
                "set xtics rotate by -45\n",
                "set boxwidth 0.5\n",
                "set style fill empty\n",
                "# candlesticks: x : q1 : min : max : q3, labeled by language\n",
                "plot 'language_quartiles.csv' skip 1 using 0:4:3:7:6:xtic(1) with candlesticks whiskerbars, \\\n",
                "     '' skip 1 using 0:5:5:5:5 with candlesticks lt -1 notitle\n",
            ),
        ),
        (
            FORKS_SCATTER_CSV,
            "stars_vs_forks.gp",
            concat!(
                "set datafile separator ','\n",
                "set terminal pngcairo size 700,700\n",
                "set output 'stars_vs_forks.png'\n",
                "set key off\n",
                "set xlabel 'stars'\n",
                "set ylabel 'forks'\n",
                "set logscale xy 2\n",
                "plot 'stars_forks_scatter.csv' skip 1 using 2:3 with points pt 7 ps 0.5\n",
            ),
        ),
        (
            DEPENDENTS_SCATTER_CSV,
            "stars_vs_dependents.gp",
            concat!(
                "set datafile separator ','\n",
                "set terminal pngcairo size 700,700\n",
                "set output 'stars_vs_dependents.png'\n",
                "set key off\n",
                "set xlabel 'stars'\n",
                "set ylabel 'dependents'\n",
                "set logscale xy 2\n",
                "plot 'stars_dependents_scatter.csv' skip 1 using 3:4 with points pt 7 ps 0.5\n",
            ),
        ),
    ];
    let mut written = Vec::new();
    for (data_file, script_name, contents) in scripts {
        if !reports_dir.join(data_file).is_file() {
            continue;
        }
        let path = reports_dir.join(script_name);
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn finish_csv(writer: csv::Writer<fs::File>, path: &Path) -> Result<()> {
    writer
        .into_inner()
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?
        .sync_all()
        .ok();
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::json(path.display().to_string(), e))?;
    fs::write(path, format!("{text}\n")).map_err(|e| Error::io(path, e))
}
