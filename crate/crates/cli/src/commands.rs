//! The four subcommands. Each returns the process exit code: 0 for
//! success, 1 for partial failure (some repos or packages failed but the
//! artifacts were written), with hard failures surfaced as errors that the
//! caller maps to exit code 2.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use startrack_core::classifier::ClassificationConfig;
use startrack_core::corpus::{open_snapshot, FullName};
use startrack_core::npm::{
    collect_usage, default_mapping, map_repos_to_packages, read_usage_cache, write_usage_cache,
    NpmClient, PackageUsage,
};
use startrack_core::report::{
    self, analyze, correlate, write_plot_scripts, write_reports, AnalysisOptions,
};
use startrack_core::time::Timestamp;
use startrack_core::{FetchPolicy, GithubClient};

use crate::http::wire_from_env;
use crate::{AnalyzeArgs, CorrelateArgs, FetchArgs, ReportArgs};

pub fn cmd_fetch(args: &FetchArgs) -> Result<u8> {
    let repos = read_repo_list(&args.repos)?;
    let wire = wire_from_env()?;
    let token = match std::env::var("GITHUB_TOKEN") {
        Ok(token) if !token.is_empty() => Some(token),
        _ if wire.mock => None,
        _ => bail!("GITHUB_TOKEN is not set; live fetches need an API token"),
    };

    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let client = GithubClient::new(
        wire.transport.as_ref(),
        wire.pacer.as_ref(),
        token,
        FetchPolicy::default(),
    )?;
    let outcome = client.build_snapshot(&repos, &args.out)?;

    let fetched = outcome.manifest.repo_count;
    println!(
        "fetched {fetched} of {} repositories into {}",
        repos.len(),
        args.out.display()
    );
    if outcome.failures.is_empty() {
        Ok(0)
    } else {
        for failure in &outcome.failures {
            eprintln!("warning: {}: {}", failure.repo, failure.error);
        }
        eprintln!(
            "warning: {} repositories failed; see {}",
            outcome.failures.len(),
            args.out.join("errors.ndjson").display()
        );
        Ok(1)
    }
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<u8> {
    let snapshot = open_snapshot(&args.snapshot)?;
    let options = AnalysisOptions {
        weeks: args.weeks,
        config: config_from_args(
            args.popular_frac,
            args.very_popular_frac,
            args.sustainable_band,
            args.shift_threshold,
            args.monotone_frac,
            args.viral_frac,
        ),
    };
    let analysis = analyze(&snapshot, &options)?;
    let usage = read_usage_cache(&args.snapshot)?;
    let bundle = write_reports(&args.snapshot, &snapshot, &analysis, &usage)?;

    if analysis.eligible.is_empty() {
        eprintln!("warning: no eligible repositories; growth report is header-only");
    }
    for (repo, reason) in &analysis.excluded {
        eprintln!("note: excluded {repo}: {reason}");
    }
    println!(
        "analyzed {} repositories ({} eligible) over {} weeks",
        snapshot.repos().len(),
        analysis.eligible.len(),
        args.weeks
    );
    println!("reports written to {}", bundle.summary_json.parent().unwrap().display());
    if args.gnuplot {
        emit_plot_scripts(&args.snapshot)?;
    }
    Ok(0)
}

pub fn cmd_correlate(args: &CorrelateArgs) -> Result<u8> {
    let snapshot = open_snapshot(&args.snapshot)?;
    let mut partial = false;

    let usage: Vec<PackageUsage> = match &args.mapping {
        Some(mapping) => {
            let pairs = if mapping == "builtin" {
                default_mapping()
            } else {
                map_repos_to_packages(Path::new(mapping))?
            };
            let wire = wire_from_env()?;
            let client = NpmClient::new(
                wire.transport.as_ref(),
                wire.pacer.as_ref(),
                FetchPolicy::default(),
            )?;
            let fetched_at = Timestamp::from_unix(wire.pacer.now_unix());
            let (usage, failures) = collect_usage(&client, &pairs, fetched_at);
            for failure in &failures {
                eprintln!(
                    "warning: {} ({}): {}",
                    failure.repo, failure.package_name, failure.error
                );
            }
            partial = !failures.is_empty();
            write_usage_cache(&args.snapshot, &usage)?;
            usage
        }
        None => read_usage_cache(&args.snapshot)?,
    };

    let outcome = correlate(&args.snapshot, &snapshot, &usage)?;
    println!(
        "stars vs forks: rho={:.4} (n={})",
        outcome.stars_vs_forks.rho, outcome.stars_vs_forks.n
    );
    match outcome.stars_vs_dependents {
        Some(result) => println!(
            "stars vs dependents: rho={:.4} (n={})",
            result.rho, result.n
        ),
        None => println!("stars vs dependents: no usage data"),
    }
    if outcome.unmatched_usage > 0 {
        eprintln!(
            "note: {} usage entries matched no snapshot repository",
            outcome.unmatched_usage
        );
    }
    if args.gnuplot {
        emit_plot_scripts(&args.snapshot)?;
    }
    Ok(if partial { 1 } else { 0 })
}

pub fn cmd_report(args: &ReportArgs) -> Result<u8> {
    let reports_dir = args.snapshot.join(report::REPORTS_DIR);
    let summary_path = reports_dir.join(report::SUMMARY_JSON);
    if !summary_path.exists() {
        bail!(
            "no reports under {}; run `startrack analyze --snapshot {}` first",
            reports_dir.display(),
            args.snapshot.display()
        );
    }
    let summary: serde_json::Value = read_json(&summary_path)?;
    print_summary(&summary);

    let correlations_path = reports_dir.join(report::CORRELATIONS_JSON);
    if correlations_path.exists() {
        let correlations: serde_json::Value = read_json(&correlations_path)?;
        print_correlations(&correlations);
    }
    Ok(0)
}

/// One repository per line; blank lines and `#` comments are skipped.
fn read_repo_list(path: &Path) -> Result<Vec<FullName>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut repos = Vec::new();
    for (index, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let name: FullName = line
            .parse()
            .with_context(|| format!("{}:{}", path.display(), index + 1))?;
        repos.push(name);
    }
    if repos.is_empty() {
        bail!("{} lists no repositories", path.display());
    }
    Ok(repos)
}

fn config_from_args(
    popular_frac: Option<f64>,
    very_popular_frac: Option<f64>,
    sustainable_band: Option<f64>,
    shift_threshold: Option<f64>,
    monotone_frac: Option<f64>,
    viral_frac: Option<f64>,
) -> ClassificationConfig {
    let mut config = ClassificationConfig::default();
    if let Some(v) = popular_frac {
        config.popular_fraction = v;
    }
    if let Some(v) = very_popular_frac {
        config.very_popular_fraction = v;
    }
    if let Some(v) = sustainable_band {
        config.sustainable_band = v;
    }
    if let Some(v) = shift_threshold {
        config.shift_threshold = v;
    }
    if let Some(v) = monotone_frac {
        config.monotone_fraction = v;
    }
    if let Some(v) = viral_frac {
        config.viral_fraction = v;
    }
    config
}

fn emit_plot_scripts(snapshot_dir: &Path) -> Result<()> {
    let scripts = write_plot_scripts(&snapshot_dir.join(report::REPORTS_DIR))?;
    for script in &scripts {
        println!("plot script: {}", script.display());
    }
    Ok(())
}

fn read_json(path: &PathBuf) -> Result<serde_json::Value> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn print_summary(summary: &serde_json::Value) {
    let count = |v: &serde_json::Value, key: &str| v.get(key).and_then(|n| n.as_u64()).unwrap_or(0);

    println!(
        "snapshot {} — {} repositories, {} eligible ({}-week window)",
        summary.get("snapshot_at").and_then(|v| v.as_str()).unwrap_or("?"),
        count(summary, "repo_count"),
        count(summary, "eligible_count"),
        count(summary, "weeks"),
    );
    if let Some(tiers) = summary.get("tier_counts") {
        println!(
            "tiers: {} very popular, {} popular, {} ordinary",
            count(tiers, "very_popular"),
            count(tiers, "popular"),
            count(tiers, "ordinary"),
        );
    }
    if let Some(totals) = summary.get("pattern_totals") {
        println!(
            "growth: {} sustainable, {} fast, {} slow, {} viral, {} other",
            count(totals, "sustainable"),
            count(totals, "fast"),
            count(totals, "slow"),
            count(totals, "viral"),
            count(totals, "other"),
        );
    }
    if let Some(rows) = summary.get("patterns_by_language").and_then(|v| v.as_array()) {
        if !rows.is_empty() {
            println!("by language:");
            for row in rows.iter().take(10) {
                println!(
                    "  {:<12} {:>4} repos — {} sustainable, {} fast, {} slow, {} viral, {} other",
                    row.get("language").and_then(|v| v.as_str()).unwrap_or("?"),
                    count(row, "repos"),
                    count(row, "sustainable"),
                    count(row, "fast"),
                    count(row, "slow"),
                    count(row, "viral"),
                    count(row, "other"),
                );
            }
        }
    }
    if let Some(excluded) = summary.get("excluded").and_then(|v| v.as_array()) {
        if !excluded.is_empty() {
            let rendered: Vec<String> = excluded
                .iter()
                .map(|e| {
                    format!(
                        "{} ({})",
                        e.get("repo").and_then(|v| v.as_str()).unwrap_or("?"),
                        e.get("reason").and_then(|v| v.as_str()).unwrap_or("?"),
                    )
                })
                .collect();
            println!("excluded: {}", rendered.join(", "));
        }
    }
}

fn print_correlations(correlations: &serde_json::Value) {
    let render = |key: &str, label: &str| match correlations.get(key) {
        Some(serde_json::Value::Object(map)) => {
            let rho = map.get("rho").and_then(|v| v.as_f64()).unwrap_or(f64::NAN);
            let n = map.get("n").and_then(|v| v.as_u64()).unwrap_or(0);
            println!("{label}: rho={rho:.4} (n={n})");
        }
        _ => println!("{label}: not computed"),
    };
    render("stars_vs_forks", "stars vs forks");
    render("stars_vs_dependents", "stars vs dependents");
}
