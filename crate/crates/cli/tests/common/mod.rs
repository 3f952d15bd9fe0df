//! Shared fixture machinery for the integration suites: a hand-designed
//! thirteen-repo corpus whose trajectories exercise every growth pattern,
//! plus helpers for materializing it on disk.
//!
//! The corpus is pure arithmetic — no randomness — so the snapshot bytes
//! are reproducible from this file alone. Expected outcomes (derived by
//! hand from the star schedules):
//!
//! * sustainable — lumen/core, atlas/db, ember/steady, pico/tool
//! * fast        — quartz/engine (climbs from last place to 4th)
//! * slow        — helix/parser, drift/legacy (overtaken by every riser)
//! * viral       — nova/burst (140 of its 156 stars land in week 40)
//! * other       — orbit/ui, sprig/notes, zephyr/net
//! * excluded    — sprout/new (too young), mesa/partial (truncated history)

// Each test target compiles this module independently and uses a subset.
#![allow(dead_code)]

pub mod oracle;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use startrack_core::corpus::{
    write_snapshot, FullName, RepoRecord, Snapshot, SnapshotSource, StarEvent,
};
use startrack_core::npm::{write_usage_cache, PackageUsage};
use startrack_core::time::Timestamp;

/// 2015-05-01T00:00:00Z — the corpus is frozen at this instant.
pub const SNAPSHOT_UNIX: i64 = 1_430_438_400;
pub const WEEK: i64 = 604_800;
pub const WEEKS: i64 = 52;

pub fn snapshot_at() -> Timestamp {
    Timestamp::from_unix(SNAPSHOT_UNIX)
}

fn window_start() -> Timestamp {
    Timestamp::from_unix(SNAPSHOT_UNIX - WEEKS * WEEK)
}

struct RepoSpec {
    name: &'static str,
    language: &'static str,
    created: &'static str,
    baseline: u64,
    weekly: Vec<u64>,
    forks: u64,
    complete: bool,
}

fn constant(n: u64) -> Vec<u64> {
    vec![n; 52]
}

/// Ramp ceil(w/7): 1,1,…,2,2,…,8 — 220 stars over the window.
fn ramp() -> Vec<u64> {
    (1..=52u64).map(|w| w.div_ceil(7)).collect()
}

/// All quiet except one enormous week.
fn burst(week: usize, size: u64) -> Vec<u64> {
    let mut weekly = vec![0; 52];
    weekly[week - 1] = size;
    weekly
}

fn span(from_week: usize, to_week: usize, n: u64) -> Vec<u64> {
    let mut weekly = vec![0; 52];
    for slot in &mut weekly[from_week - 1..to_week] {
        *slot = n;
    }
    weekly
}

fn specs() -> Vec<RepoSpec> {
    vec![
        RepoSpec {
            name: "lumen/core",
            language: "Rust",
            created: "2013-06-01T00:00:00Z",
            baseline: 500,
            weekly: constant(1),
            forks: 210,
            complete: true,
        },
        RepoSpec {
            name: "atlas/db",
            language: "Go",
            created: "2013-07-04T00:00:00Z",
            baseline: 300,
            weekly: constant(1),
            forks: 140,
            complete: true,
        },
        RepoSpec {
            name: "ember/steady",
            language: "Rust",
            created: "2013-08-15T00:00:00Z",
            baseline: 200,
            weekly: constant(1),
            forks: 90,
            complete: true,
        },
        RepoSpec {
            name: "helix/parser",
            language: "Python",
            created: "2013-09-20T00:00:00Z",
            baseline: 150,
            weekly: constant(0),
            forks: 70,
            complete: true,
        },
        RepoSpec {
            name: "drift/legacy",
            language: "Java",
            created: "2013-10-01T00:00:00Z",
            baseline: 120,
            weekly: constant(0),
            forks: 50,
            complete: true,
        },
        RepoSpec {
            name: "orbit/ui",
            language: "JavaScript",
            created: "2013-11-11T00:00:00Z",
            baseline: 35,
            weekly: constant(3),
            forks: 75,
            complete: true,
        },
        RepoSpec {
            name: "pico/tool",
            language: "Python",
            created: "2013-12-02T00:00:00Z",
            baseline: 30,
            weekly: constant(3),
            forks: 55,
            complete: true,
        },
        RepoSpec {
            name: "sprig/notes",
            language: "Ruby",
            created: "2014-01-15T00:00:00Z",
            baseline: 25,
            weekly: constant(3),
            forks: 40,
            complete: true,
        },
        RepoSpec {
            name: "zephyr/net",
            language: "C",
            created: "2013-05-10T00:00:00Z",
            baseline: 20,
            weekly: constant(3),
            forks: 35,
            complete: true,
        },
        RepoSpec {
            name: "nova/burst",
            language: "JavaScript",
            created: "2014-02-20T00:00:00Z",
            baseline: 16,
            weekly: burst(40, 140),
            forks: 30,
            complete: true,
        },
        RepoSpec {
            name: "quartz/engine",
            language: "JavaScript",
            created: "2014-03-05T00:00:00Z",
            baseline: 10,
            weekly: ramp(),
            forks: 60,
            complete: true,
        },
        // Excluded from trajectory analysis, still present in tiers.
        RepoSpec {
            name: "mesa/partial",
            language: "TypeScript",
            created: "2013-09-09T00:00:00Z",
            baseline: 200,
            weekly: span(1, 10, 6),
            forks: 95,
            complete: false,
        },
        RepoSpec {
            name: "sprout/new",
            language: "Rust",
            created: "2015-03-01T00:00:00Z",
            baseline: 0,
            weekly: span(45, 52, 5),
            forks: 12,
            complete: true,
        },
    ]
}

fn events_for(name: &FullName, spec: &RepoSpec) -> Vec<StarEvent> {
    let mut events = Vec::new();
    // Baseline events march back hourly from the window edge.
    for i in (0..spec.baseline).rev() {
        events.push(StarEvent {
            repo: name.clone(),
            starred_at: window_start().minus_seconds((i as i64 + 1) * 3600),
        });
    }
    // In-window events spaced evenly inside their week.
    for (index, &count) in spec.weekly.iter().enumerate() {
        let week_open = SNAPSHOT_UNIX - WEEKS * WEEK + index as i64 * WEEK;
        for j in 0..count {
            let offset = (j as i64 + 1) * (WEEK / (count as i64 + 1));
            events.push(StarEvent {
                repo: name.clone(),
                starred_at: Timestamp::from_unix(week_open + offset),
            });
        }
    }
    events
}

/// The corpus as an in-memory snapshot.
pub fn golden_snapshot() -> Snapshot {
    let mut repos = Vec::new();
    let mut events = BTreeMap::new();
    let mut incomplete = BTreeSet::new();
    for spec in specs() {
        let name = FullName::new(spec.name).unwrap();
        let total: u64 = spec.baseline + spec.weekly.iter().sum::<u64>();
        repos.push(RepoRecord {
            full_name: name.clone(),
            language: spec.language.to_string(),
            stars_at_snapshot: total,
            forks_at_snapshot: spec.forks,
            created_at: spec.created.parse().unwrap(),
            fetched_at: snapshot_at(),
        });
        events.insert(name.clone(), events_for(&name, &spec));
        if !spec.complete {
            incomplete.insert(name);
        }
    }
    Snapshot::assemble(
        snapshot_at(),
        SnapshotSource::Fixture,
        repos,
        events,
        incomplete,
    )
    .unwrap()
}

/// Dependents for the three JavaScript repos, deliberately not in star
/// order so the correlation is interesting.
pub fn golden_usage() -> Vec<PackageUsage> {
    let entry = |repo: &str, package: &str, dependents: u64| PackageUsage {
        repo: FullName::new(repo).unwrap(),
        package_name: package.to_string(),
        dependents,
        fetched_at: snapshot_at(),
    };
    vec![
        entry("nova/burst", "nova-burst", 85),
        entry("orbit/ui", "orbit-ui", 520),
        entry("quartz/engine", "quartz-engine", 310),
    ]
}

/// Writes the snapshot plus its usage cache into `dir`.
pub fn write_golden(dir: &Path) {
    let snapshot = golden_snapshot();
    write_snapshot(&snapshot, dir).unwrap();
    write_usage_cache(dir, &golden_usage()).unwrap();
}

/// Committed copy of the fixture, reports included.
pub fn fixture_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("fixtures")
        .join("golden")
        .join("snapshot")
}

/// Recursively copies `src` into `dst`, skipping `reports/`.
pub fn copy_snapshot(src: &Path, dst: &Path) {
    std::fs::create_dir_all(dst).unwrap();
    for entry in std::fs::read_dir(src).unwrap() {
        let entry = entry.unwrap();
        let name = entry.file_name();
        if name == "reports" {
            continue;
        }
        let target = dst.join(&name);
        if entry.path().is_dir() {
            copy_snapshot(&entry.path(), &target);
        } else {
            std::fs::copy(entry.path(), &target).unwrap();
        }
    }
}

/// All files under `dir`, relative path → bytes.
pub fn dir_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(current) = stack.pop() {
        for entry in std::fs::read_dir(&current).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let key = path
                    .strip_prefix(dir)
                    .unwrap()
                    .to_string_lossy()
                    .into_owned();
                out.insert(key, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}
