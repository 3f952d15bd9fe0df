//! On-disk snapshot format and the in-memory corpus model.
//!
//! A snapshot directory holds:
//!
//! ```text
//! manifest.json                    one JSON object
//! repos.ndjson                     one RepoRecord per line
//! events/<owner>__<name>.ndjson    one StarEvent per line, sorted
//! incomplete.ndjson                optional; full names with truncated histories
//! ```
//!
//! Writes are canonical: repos sorted by full name, events sorted by time,
//! timestamps rendered as RFC 3339 `Z` strings. Writing the same corpus twice
//! produces byte-identical files.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::time::Timestamp;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPOS_FILE: &str = "repos.ndjson";
pub const EVENTS_DIR: &str = "events";
pub const INCOMPLETE_FILE: &str = "incomplete.ndjson";
/// Sidecar written by crawls for repositories that failed permanently.
pub const ERRORS_FILE: &str = "errors.ndjson";
/// Cache of NPM dependents lookups, kept inside the snapshot directory.
pub const NPM_USAGE_FILE: &str = "npm-usage.ndjson";

pub const SCHEMA_VERSION: u32 = 1;

/// `owner/name` repository identifier: exactly one slash, non-empty halves.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FullName(String);

impl FullName {
    pub fn new(s: impl Into<String>) -> Result<Self> {
        let s = s.into();
        let mut parts = s.split('/');
        match (parts.next(), parts.next(), parts.next()) {
            (Some(owner), Some(name), None) if !owner.is_empty() && !name.is_empty() => {
                Ok(FullName(s))
            }
            _ => Err(Error::Validation(format!(
                "full_name {s:?} must be \"owner/name\" with non-empty segments"
            ))),
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn owner(&self) -> &str {
        self.0.split('/').next().unwrap()
    }

    pub fn name(&self) -> &str {
        self.0.split('/').nth(1).unwrap()
    }

    /// File stem for the per-repo events file: `/` mapped to `__`.
    pub fn events_file_stem(&self) -> String {
        self.0.replace('/', "__")
    }
}

impl fmt::Display for FullName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for FullName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl FromStr for FullName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FullName::new(s)
    }
}

impl Serialize for FullName {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for FullName {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        FullName::new(s).map_err(serde::de::Error::custom)
    }
}

/// Repository metadata as of the snapshot instant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoRecord {
    pub full_name: FullName,
    /// Primary language tag; `"unknown"` when GitHub reports none.
    pub language: String,
    pub stars_at_snapshot: u64,
    pub forks_at_snapshot: u64,
    pub created_at: Timestamp,
    pub fetched_at: Timestamp,
}

impl RepoRecord {
    fn validate(&self) -> Result<()> {
        if self.fetched_at < self.created_at {
            return Err(Error::Validation(format!(
                "{}: fetched_at {} precedes created_at {}",
                self.full_name, self.fetched_at, self.created_at
            )));
        }
        Ok(())
    }
}

/// One star occurrence: the atomic ingestion unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StarEvent {
    pub repo: FullName,
    pub starred_at: Timestamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SnapshotSource {
    #[serde(rename = "live-api")]
    LiveApi,
    #[serde(rename = "fixture")]
    Fixture,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotManifest {
    pub snapshot_at: Timestamp,
    pub repo_count: u64,
    pub schema_version: u32,
    pub source: SnapshotSource,
}

/// Read-only corpus handle: manifest, repo records, and per-repo star events.
///
/// Construction canonicalizes: repos sorted by full name, and every invariant
/// checked up front. Safe to share across threads once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    manifest: SnapshotManifest,
    repos: Vec<RepoRecord>,
    events: BTreeMap<FullName, Vec<StarEvent>>,
    incomplete: BTreeSet<FullName>,
}

impl Snapshot {
    /// Builds a validated snapshot from parts.
    ///
    /// Repos are sorted by full name; `repo_count` is derived. Fails on
    /// duplicate repos, events for unknown repos, unsorted event streams,
    /// events after `snapshot_at`, or colliding events file names.
    pub fn assemble(
        snapshot_at: Timestamp,
        source: SnapshotSource,
        mut repos: Vec<RepoRecord>,
        events: BTreeMap<FullName, Vec<StarEvent>>,
        incomplete: BTreeSet<FullName>,
    ) -> Result<Self> {
        repos.sort_by(|a, b| a.full_name.cmp(&b.full_name));
        let mut stems = BTreeMap::new();
        for pair in repos.windows(2) {
            if pair[0].full_name == pair[1].full_name {
                return Err(Error::Validation(format!(
                    "duplicate repository {}",
                    pair[0].full_name
                )));
            }
        }
        for repo in &repos {
            repo.validate()?;
            if let Some(other) = stems.insert(repo.full_name.events_file_stem(), &repo.full_name) {
                return Err(Error::Validation(format!(
                    "events file name collision between {} and {}",
                    other, repo.full_name
                )));
            }
        }
        let known: BTreeSet<&FullName> = repos.iter().map(|r| &r.full_name).collect();
        for (repo, stream) in &events {
            if !known.contains(repo) {
                return Err(Error::Validation(format!(
                    "events for unknown repository {repo}"
                )));
            }
            validate_events(repo, stream, snapshot_at).map_err(Error::Validation)?;
        }
        // canonical form: an empty stream and an absent entry are the same
        let events: BTreeMap<FullName, Vec<StarEvent>> =
            events.into_iter().filter(|(_, s)| !s.is_empty()).collect();
        for repo in &incomplete {
            if !known.contains(repo) {
                return Err(Error::Validation(format!(
                    "incomplete flag for unknown repository {repo}"
                )));
            }
        }
        let manifest = SnapshotManifest {
            snapshot_at,
            repo_count: repos.len() as u64,
            schema_version: SCHEMA_VERSION,
            source,
        };
        Ok(Snapshot {
            manifest,
            repos,
            events,
            incomplete,
        })
    }

    pub fn manifest(&self) -> &SnapshotManifest {
        &self.manifest
    }

    pub fn snapshot_at(&self) -> Timestamp {
        self.manifest.snapshot_at
    }

    /// Repo records, sorted by full name.
    pub fn repos(&self) -> &[RepoRecord] {
        &self.repos
    }

    pub fn repo(&self, full_name: &FullName) -> Option<&RepoRecord> {
        self.repos
            .binary_search_by(|r| r.full_name.cmp(full_name))
            .ok()
            .map(|i| &self.repos[i])
    }

    /// Star events for one repo, ascending by `starred_at`.
    pub fn events(&self, full_name: &FullName) -> &[StarEvent] {
        self.events.get(full_name).map_or(&[], Vec::as_slice)
    }

    /// Whether ingestion retrieved the repo's full star history.
    pub fn is_complete(&self, full_name: &FullName) -> bool {
        !self.incomplete.contains(full_name)
    }

    pub fn incomplete(&self) -> &BTreeSet<FullName> {
        &self.incomplete
    }
}

fn validate_events(
    repo: &FullName,
    stream: &[StarEvent],
    snapshot_at: Timestamp,
) -> Result<(), String> {
    for event in stream {
        if &event.repo != repo {
            return Err(format!(
                "event stream for {repo} contains event tagged {}",
                event.repo
            ));
        }
        if event.starred_at > snapshot_at {
            return Err(format!(
                "event for {repo} at {} is after the snapshot instant {snapshot_at}",
                event.starred_at
            ));
        }
    }
    for pair in stream.windows(2) {
        if pair[1].starred_at < pair[0].starred_at {
            return Err(format!("events for {repo} are not sorted by starred_at"));
        }
    }
    Ok(())
}

/// Writes a snapshot directory; overwrites files already present.
pub fn write_snapshot(snapshot: &Snapshot, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest_json = serde_json::to_string_pretty(&snapshot.manifest)
        .map_err(|e| Error::json(MANIFEST_FILE, e))?;
    write_file(&dir.join(MANIFEST_FILE), format!("{manifest_json}\n").as_bytes())?;

    let mut repo_lines = String::new();
    for repo in &snapshot.repos {
        let line = serde_json::to_string(repo).map_err(|e| Error::json(REPOS_FILE, e))?;
        repo_lines.push_str(&line);
        repo_lines.push('\n');
    }
    write_file(&dir.join(REPOS_FILE), repo_lines.as_bytes())?;

    let events_dir = dir.join(EVENTS_DIR);
    fs::create_dir_all(&events_dir).map_err(|e| Error::io(&events_dir, e))?;
    for repo in &snapshot.repos {
        let mut lines = String::new();
        for event in snapshot.events(&repo.full_name) {
            let line = serde_json::to_string(event)
                .map_err(|e| Error::json(format!("events for {}", repo.full_name), e))?;
            lines.push_str(&line);
            lines.push('\n');
        }
        let path = events_dir.join(format!("{}.ndjson", repo.full_name.events_file_stem()));
        write_file(&path, lines.as_bytes())?;
    }

    if !snapshot.incomplete.is_empty() {
        let mut lines = String::new();
        for repo in &snapshot.incomplete {
            let line =
                serde_json::to_string(repo).map_err(|e| Error::json(INCOMPLETE_FILE, e))?;
            lines.push_str(&line);
            lines.push('\n');
        }
        write_file(&dir.join(INCOMPLETE_FILE), lines.as_bytes())?;
    }
    Ok(())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(bytes).map_err(|e| Error::io(path, e))
}

/// Opens and validates a snapshot directory.
pub fn open_snapshot(dir: &Path) -> Result<Snapshot> {
    let manifest_path = dir.join(MANIFEST_FILE);
    if !manifest_path.is_file() {
        return Err(Error::Format(format!(
            "manifest not found: {}",
            manifest_path.display()
        )));
    }
    let manifest_text =
        fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: SnapshotManifest = serde_json::from_str(&manifest_text)
        .map_err(|e| Error::Format(format!("{MANIFEST_FILE}: {e}")))?;
    if manifest.schema_version != SCHEMA_VERSION {
        return Err(Error::Format(format!(
            "{MANIFEST_FILE}: unsupported schema_version {} (expected {SCHEMA_VERSION})",
            manifest.schema_version
        )));
    }

    let repos = read_repos(&dir.join(REPOS_FILE))?;
    if repos.len() as u64 != manifest.repo_count {
        return Err(Error::Integrity(format!(
            "manifest says repo_count={} but {REPOS_FILE} has {} records",
            manifest.repo_count,
            repos.len()
        )));
    }

    let events_dir = dir.join(EVENTS_DIR);
    let mut events = BTreeMap::new();
    for repo in &repos {
        let path = events_dir.join(format!("{}.ndjson", repo.full_name.events_file_stem()));
        if !path.is_file() {
            continue; // absent events file reads as an empty stream
        }
        let stream = read_events(&path)?;
        validate_events(&repo.full_name, &stream, manifest.snapshot_at)
            .map_err(Error::Format)?;
        events.insert(repo.full_name.clone(), stream);
    }

    let incomplete = read_incomplete(&dir.join(INCOMPLETE_FILE))?;

    let snapshot = Snapshot::assemble(
        manifest.snapshot_at,
        manifest.source,
        repos,
        events,
        incomplete,
    )?;
    Ok(snapshot)
}

fn read_repos(path: &Path) -> Result<Vec<RepoRecord>> {
    if !path.is_file() {
        return Ok(Vec::new());
    }
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut repos = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let repo: RepoRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Format(format!("{REPOS_FILE} line {}: {e}", idx + 1)))?;
        repo.validate()
            .map_err(|e| Error::Format(format!("{REPOS_FILE} line {}: {e}", idx + 1)))?;
        repos.push(repo);
    }
    Ok(repos)
}

fn read_events(path: &Path) -> Result<Vec<StarEvent>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut events = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let event: StarEvent = serde_json::from_str(&line).map_err(|e| {
            Error::Format(format!("{} line {}: {e}", path.display(), idx + 1))
        })?;
        events.push(event);
    }
    Ok(events)
}

fn read_incomplete(path: &Path) -> Result<BTreeSet<FullName>> {
    if !path.is_file() {
        return Ok(BTreeSet::new());
    }
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut set = BTreeSet::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let name: FullName = serde_json::from_str(&line).map_err(|e| {
            Error::Format(format!("{INCOMPLETE_FILE} line {}: {e}", idx + 1))
        })?;
        set.insert(name);
    }
    Ok(set)
}
