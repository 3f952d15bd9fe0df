//! NPM registry client for dependents counts, plus the repo→package mapping.
//!
//! The mapping between repositories and the packages they publish is a
//! hand-maintained CSV (`full_name,package_name` per line); a starter set of
//! 38 well-known Node.js libraries ships built in. Dependents are direct
//! dependents per the registry's `dependedUpon` view, cached as NDJSON
//! inside the snapshot directory so re-runs don't hit the network.

use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{FullName, NPM_USAGE_FILE};
use crate::error::{Error, Result};
use crate::github::FetchPolicy;
use crate::time::Timestamp;
use crate::transport::{HttpRequest, HttpResponse, Pacer, Transport};

pub const DEFAULT_REGISTRY_BASE: &str = "https://registry.npmjs.org";

/// Built-in repo→package mapping: popular Node.js libraries.
pub const DEFAULT_MAPPING: &str = include_str!("../fixtures/nodejs-libraries.csv");

/// Direct-dependents count for one repo's published package.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackageUsage {
    pub repo: FullName,
    pub package_name: String,
    pub dependents: u64,
    pub fetched_at: Timestamp,
}

pub struct NpmClient<'a> {
    transport: &'a dyn Transport,
    pacer: &'a dyn Pacer,
    policy: FetchPolicy,
    registry_base: String,
}

impl<'a> NpmClient<'a> {
    pub fn new(
        transport: &'a dyn Transport,
        pacer: &'a dyn Pacer,
        policy: FetchPolicy,
    ) -> Result<Self> {
        policy.validate()?;
        Ok(NpmClient {
            transport,
            pacer,
            policy,
            registry_base: DEFAULT_REGISTRY_BASE.to_string(),
        })
    }

    pub fn with_registry_base(mut self, base: impl Into<String>) -> Self {
        self.registry_base = base.into();
        self
    }

    /// Number of packages that declare `package_name` as a dependency.
    ///
    /// Asks the registry's `dependedUpon` view first; a package with no row
    /// there is checked for existence, so a published package with zero
    /// dependents reports 0 and an unknown one is a not-found error.
    pub fn fetch_dependents(&self, package_name: &str) -> Result<u64> {
        if package_name.is_empty() {
            return Err(Error::Validation("package name is empty".to_string()));
        }
        let encoded = percent_encode(package_name);
        let view_url = format!(
            "{}/-/_view/dependedUpon?group_level=1&startkey=%5B%22{encoded}%22%5D&endkey=%5B%22{encoded}%22%2C%7B%7D%5D",
            self.registry_base
        );
        let response = self.get(&view_url)?;
        if response.status == 200 {
            #[derive(Deserialize)]
            struct View {
                rows: Vec<ViewRow>,
            }
            #[derive(Deserialize)]
            struct ViewRow {
                value: u64,
            }
            let view: View = serde_json::from_str(response.body_str()?)
                .map_err(|e| Error::Format(format!("{view_url}: {e}")))?;
            if let Some(row) = view.rows.first() {
                return Ok(row.value);
            }
        } else if response.status != 404 {
            return Err(Error::Transport(format!(
                "{view_url}: HTTP {}",
                response.status
            )));
        }

        // No row can mean "exists with zero dependents" or "no such package";
        // the package document tells them apart.
        let doc_url = format!("{}/{encoded}", self.registry_base);
        let response = self.get(&doc_url)?;
        match response.status {
            200 => Ok(0),
            404 => Err(Error::NotFound(format!(
                "package {package_name} is not in the registry"
            ))),
            status => Err(Error::Transport(format!("{doc_url}: HTTP {status}"))),
        }
    }

    /// One GET with retries and exponential backoff on transient failures.
    fn get(&self, url: &str) -> Result<HttpResponse> {
        let mut last_failure = String::new();
        for attempt in 0..=self.policy.max_retries {
            if attempt > 0 {
                self.pacer.sleep(self.policy.base_backoff * 2u32.pow(attempt - 1));
            }
            let request = HttpRequest::get(url)
                .header("user-agent", "startrack")
                .header("accept", "application/json");
            match self.transport.execute(&request) {
                Err(e) => last_failure = e.to_string(),
                Ok(response) => match response.status {
                    429 | 500..=599 => last_failure = format!("HTTP {}", response.status),
                    _ => return Ok(response),
                },
            }
        }
        Err(Error::Transport(format!(
            "{url}: giving up after {} attempts: {last_failure}",
            self.policy.max_retries + 1
        )))
    }
}

/// A repo whose package lookup failed during usage collection.
#[derive(Debug, Clone, Serialize)]
pub struct UsageFailure {
    pub repo: FullName,
    pub package_name: String,
    pub error: String,
}

/// Fetches dependents for every mapped pair; failures are collected, not
/// fatal. Results come back sorted by repo.
pub fn collect_usage(
    client: &NpmClient,
    pairs: &[(FullName, String)],
    fetched_at: Timestamp,
) -> (Vec<PackageUsage>, Vec<UsageFailure>) {
    let mut usage = Vec::new();
    let mut failures = Vec::new();
    for (repo, package_name) in pairs {
        match client.fetch_dependents(package_name) {
            Ok(dependents) => usage.push(PackageUsage {
                repo: repo.clone(),
                package_name: package_name.clone(),
                dependents,
                fetched_at,
            }),
            Err(e) => failures.push(UsageFailure {
                repo: repo.clone(),
                package_name: package_name.clone(),
                error: e.to_string(),
            }),
        }
    }
    usage.sort_by(|a, b| a.repo.cmp(&b.repo));
    (usage, failures)
}

/// Parses `full_name,package_name` lines. Blank lines are skipped, exact
/// duplicate pairs collapse to one, and a repo mapped to two different
/// packages is an error. Order of first appearance is kept.
pub fn parse_mapping(text: &str) -> Result<Vec<(FullName, String)>> {
    let mut pairs: Vec<(FullName, String)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: idx + 1,
            message,
        };
        let (repo, package) = line
            .split_once(',')
            .ok_or_else(|| parse_err(format!("expected full_name,package_name: {line:?}")))?;
        let repo = FullName::new(repo.trim())
            .map_err(|e| parse_err(e.to_string()))?;
        let package = package.trim();
        if package.is_empty() {
            return Err(parse_err("package name is empty".to_string()));
        }
        if let Some(previous) = pairs.iter().find(|(r, _)| *r == repo) {
            if previous.1 != package {
                return Err(parse_err(format!(
                    "{repo} already mapped to {}",
                    previous.1
                )));
            }
            continue; // exact duplicate
        }
        pairs.push((repo, package.to_string()));
    }
    Ok(pairs)
}

/// Reads and parses a mapping file.
pub fn map_repos_to_packages(path: &Path) -> Result<Vec<(FullName, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mapping(&text)
}

/// The built-in mapping, already validated by tests.
pub fn default_mapping() -> Vec<(FullName, String)> {
    parse_mapping(DEFAULT_MAPPING).expect("built-in mapping parses")
}

/// Renders pairs back to the mapping file format.
pub fn serialize_mapping(pairs: &[(FullName, String)]) -> String {
    let mut out = String::new();
    for (repo, package) in pairs {
        out.push_str(repo.as_str());
        out.push(',');
        out.push_str(package);
        out.push('\n');
    }
    out
}

/// Reads the usage cache from a snapshot directory; absent file = empty.
pub fn read_usage_cache(snapshot_dir: &Path) -> Result<Vec<PackageUsage>> {
    let path = snapshot_dir.join(NPM_USAGE_FILE);
    if !path.is_file() {
        return Ok(Vec::new());
    }
    let file = std::fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
    let mut usage = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(&path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: PackageUsage = serde_json::from_str(&line)
            .map_err(|e| Error::Format(format!("{NPM_USAGE_FILE} line {}: {e}", idx + 1)))?;
        usage.push(entry);
    }
    Ok(usage)
}

/// Writes the usage cache, sorted by repo, one JSON object per line.
pub fn write_usage_cache(snapshot_dir: &Path, usage: &[PackageUsage]) -> Result<()> {
    let mut sorted: Vec<&PackageUsage> = usage.iter().collect();
    sorted.sort_by(|a, b| a.repo.cmp(&b.repo));
    let mut lines = String::new();
    for entry in sorted {
        lines.push_str(&serde_json::to_string(entry).expect("usage record"));
        lines.push('\n');
    }
    let path = snapshot_dir.join(NPM_USAGE_FILE);
    std::fs::write(&path, lines).map_err(|e| Error::io(&path, e))
}

/// RFC 3986 percent-encoding, keeping only unreserved characters.
fn percent_encode(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for byte in s.bytes() {
        match byte {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'_' | b'.' | b'~' => {
                out.push(byte as char)
            }
            _ => out.push_str(&format!("%{byte:02X}")),
        }
    }
    out
}
