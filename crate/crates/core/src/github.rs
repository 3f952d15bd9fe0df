//! GitHub REST client: repo metadata, stargazer event replay, crawls.
//!
//! Every request goes through the injected [`Transport`]; retries, backoff,
//! and rate-limit pauses go through the injected [`Pacer`]. Stargazer
//! histories use the `application/vnd.github.star+json` media type so each
//! entry carries its `starred_at` instant, following `Link`-header
//! pagination to exhaustion.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::corpus::{
    self, FullName, RepoRecord, Snapshot, SnapshotManifest, SnapshotSource, StarEvent,
};
use crate::error::{Error, Result};
use crate::time::Timestamp;
use crate::transport::{HttpRequest, HttpResponse, Pacer, Transport};

pub const DEFAULT_API_BASE: &str = "https://api.github.com";
const STAR_MEDIA_TYPE: &str = "application/vnd.github.star+json";
const JSON_MEDIA_TYPE: &str = "application/vnd.github+json";
const USER_AGENT: &str = "startrack";

/// Retry, pagination, and quota knobs for API crawls.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchPolicy {
    /// Retries after the first attempt of each request.
    pub max_retries: u32,
    /// First retry delay; doubles per retry.
    pub base_backoff: Duration,
    /// Stargazer page size, 1..=100.
    pub per_page: u32,
    /// Pause until quota reset once this few requests remain.
    pub rate_limit_floor: u64,
}

impl Default for FetchPolicy {
    fn default() -> Self {
        FetchPolicy {
            max_retries: 3,
            base_backoff: Duration::from_millis(500),
            per_page: 100,
            rate_limit_floor: 1,
        }
    }
}

impl FetchPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(1..=100).contains(&self.per_page) {
            return Err(Error::Validation(format!(
                "per_page must be in 1..=100, got {}",
                self.per_page
            )));
        }
        Ok(())
    }
}

/// A repo's star events plus whether the API let us read all of them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StarHistory {
    /// Ascending by starred_at.
    pub events: Vec<StarEvent>,
    /// False when pagination was cut off before the history's end.
    pub complete: bool,
}

/// One permanently failed repository in a crawl.
#[derive(Debug, Clone, Serialize)]
pub struct CrawlFailure {
    pub repo: FullName,
    pub error: String,
}

/// Result of a crawl: the written manifest plus per-repo failures.
#[derive(Debug, Clone)]
pub struct BuildOutcome {
    pub manifest: SnapshotManifest,
    pub failures: Vec<CrawlFailure>,
}

pub struct GithubClient<'a> {
    transport: &'a dyn Transport,
    pacer: &'a dyn Pacer,
    token: Option<String>,
    policy: FetchPolicy,
    api_base: String,
    /// Unix instant to sleep until before the next request, set when the
    /// advertised remaining quota dips to the policy floor.
    gate_until: std::sync::Mutex<Option<i64>>,
}

impl<'a> GithubClient<'a> {
    pub fn new(
        transport: &'a dyn Transport,
        pacer: &'a dyn Pacer,
        token: Option<String>,
        policy: FetchPolicy,
    ) -> Result<Self> {
        policy.validate()?;
        Ok(GithubClient {
            transport,
            pacer,
            token,
            policy,
            api_base: DEFAULT_API_BASE.to_string(),
            gate_until: std::sync::Mutex::new(None),
        })
    }

    /// Points the client at a different API root (test fixtures).
    pub fn with_api_base(mut self, base: impl Into<String>) -> Self {
        self.api_base = base.into();
        self
    }

    /// Repo metadata as of now. The requested name stays the record's
    /// identity even if the API reports a rename.
    pub fn fetch_repo_metadata(&self, full_name: &FullName) -> Result<RepoRecord> {
        let url = format!("{}/repos/{}", self.api_base, full_name);
        let response = self.get(&url, JSON_MEDIA_TYPE)?;
        if response.status != 200 {
            return Err(Error::Transport(format!(
                "{url}: HTTP {}",
                response.status
            )));
        }
        #[derive(Deserialize)]
        struct RepoBody {
            language: Option<String>,
            stargazers_count: u64,
            forks_count: u64,
            created_at: Timestamp,
        }
        let body: RepoBody = serde_json::from_str(response.body_str()?)
            .map_err(|e| Error::Format(format!("{url}: {e}")))?;
        Ok(RepoRecord {
            full_name: full_name.clone(),
            language: body.language.unwrap_or_else(|| "unknown".to_string()),
            stars_at_snapshot: body.stargazers_count,
            forks_at_snapshot: body.forks_count,
            created_at: body.created_at,
            fetched_at: Timestamp::from_unix(self.pacer.now_unix()),
        })
    }

    /// Replays the full stargazer history, ascending by starred_at.
    ///
    /// A 422 mid-pagination means the API refuses to page deeper; the events
    /// read so far are returned with `complete = false`.
    pub fn fetch_star_events(&self, full_name: &FullName) -> Result<StarHistory> {
        let mut url = format!(
            "{}/repos/{}/stargazers?per_page={}",
            self.api_base, full_name, self.policy.per_page
        );
        let mut events = Vec::new();
        let mut complete = true;
        loop {
            let response = self.get(&url, STAR_MEDIA_TYPE)?;
            match response.status {
                200 => {
                    #[derive(Deserialize)]
                    struct Entry {
                        starred_at: Timestamp,
                    }
                    let page: Vec<Entry> = serde_json::from_str(response.body_str()?)
                        .map_err(|e| Error::Format(format!("{url}: {e}")))?;
                    events.extend(page.into_iter().map(|e| StarEvent {
                        repo: full_name.clone(),
                        starred_at: e.starred_at,
                    }));
                    match next_page(&response)? {
                        Some(next) => url = next,
                        None => break,
                    }
                }
                422 => {
                    complete = false;
                    break;
                }
                status => {
                    return Err(Error::Transport(format!("{url}: HTTP {status}")));
                }
            }
        }
        events.sort_by_key(|e| e.starred_at);
        Ok(StarHistory { events, complete })
    }

    /// Crawls every listed repo and writes a snapshot to `out`.
    ///
    /// Repos that fail permanently are recorded in an `errors.ndjson`
    /// sidecar and left out of the snapshot; the crawl only errors when
    /// nothing at all could be fetched.
    pub fn build_snapshot(&self, repo_list: &[FullName], out: &Path) -> Result<BuildOutcome> {
        if repo_list.is_empty() {
            return Err(Error::Validation("repo list is empty".to_string()));
        }
        let mut seen = BTreeSet::new();
        for name in repo_list {
            if !seen.insert(name) {
                return Err(Error::Validation(format!(
                    "repo list contains {name} more than once"
                )));
            }
        }

        let mut repos = Vec::new();
        let mut events = BTreeMap::new();
        let mut incomplete = BTreeSet::new();
        let mut failures = Vec::new();
        for name in repo_list {
            let fetched = self
                .fetch_repo_metadata(name)
                .and_then(|record| Ok((record, self.fetch_star_events(name)?)));
            match fetched {
                Ok((record, history)) => {
                    repos.push(record);
                    if !history.complete {
                        incomplete.insert(name.clone());
                    }
                    events.insert(name.clone(), history.events);
                }
                Err(e) => failures.push(CrawlFailure {
                    repo: name.clone(),
                    error: e.to_string(),
                }),
            }
        }
        if repos.is_empty() {
            return Err(Error::Transport(format!(
                "all {} repositories failed; first error: {}",
                repo_list.len(),
                failures[0].error
            )));
        }

        let snapshot_at = Timestamp::from_unix(self.pacer.now_unix());
        let snapshot = Snapshot::assemble(
            snapshot_at,
            SnapshotSource::LiveApi,
            repos,
            events,
            incomplete,
        )?;
        corpus::write_snapshot(&snapshot, out)?;
        if !failures.is_empty() {
            let mut lines = String::new();
            for failure in &failures {
                lines.push_str(&serde_json::to_string(failure).expect("failure record"));
                lines.push('\n');
            }
            let path = out.join(corpus::ERRORS_FILE);
            std::fs::write(&path, lines).map_err(|e| Error::io(&path, e))?;
        }
        Ok(BuildOutcome {
            manifest: snapshot.manifest().clone(),
            failures,
        })
    }

    /// One GET with retries, exponential backoff, and quota pauses.
    ///
    /// Connection failures, 5xx, 429, and quota-exhausted 403s are retried
    /// up to `max_retries` times; exhaustion surfaces the last failure.
    /// 404 maps to a not-found error. Other statuses (401, 422, …) are
    /// returned for the caller to interpret.
    fn get(&self, url: &str, accept: &str) -> Result<HttpResponse> {
        let mut pending_sleep: Option<Duration> = None;
        let mut last_failure = String::new();
        for attempt in 0..=self.policy.max_retries {
            if let Some(wait) = pending_sleep.take() {
                self.pacer.sleep(wait);
            }
            self.honor_gate();
            let mut request = HttpRequest::get(url)
                .header("user-agent", USER_AGENT)
                .header("accept", accept);
            if let Some(token) = &self.token {
                request = request.header("authorization", format!("token {token}"));
            }
            match self.transport.execute(&request) {
                Err(e) => last_failure = e.to_string(),
                Ok(response) => {
                    self.note_quota(&response);
                    match response.status {
                        404 => {
                            return Err(Error::NotFound(format!("{url} returned 404")));
                        }
                        403 if response.header("x-ratelimit-remaining") == Some("0") => {
                            last_failure = "HTTP 403 (rate limit exhausted)".to_string();
                            pending_sleep = Some(self.until_reset(&response));
                        }
                        429 | 500..=599 => {
                            last_failure = format!("HTTP {}", response.status);
                        }
                        _ => return Ok(response),
                    }
                }
            }
            if pending_sleep.is_none() && attempt < self.policy.max_retries {
                pending_sleep = Some(self.policy.base_backoff * 2u32.pow(attempt));
            }
        }
        Err(Error::Transport(format!(
            "{url}: giving up after {} attempts: {last_failure}",
            self.policy.max_retries + 1
        )))
    }

    /// Sleep off a previously noted quota pause before issuing a request.
    fn honor_gate(&self) {
        let gate = self.gate_until.lock().unwrap().take();
        if let Some(reset) = gate {
            let wait = reset - self.pacer.now_unix();
            if wait > 0 {
                self.pacer.sleep(Duration::from_secs(wait as u64));
            }
        }
    }

    /// Record the advertised quota; arm a pause when it reaches the floor.
    fn note_quota(&self, response: &HttpResponse) {
        let remaining = response
            .header("x-ratelimit-remaining")
            .and_then(|v| v.parse::<u64>().ok());
        let reset = response
            .header("x-ratelimit-reset")
            .and_then(|v| v.parse::<i64>().ok());
        if let (Some(remaining), Some(reset)) = (remaining, reset) {
            if remaining <= self.policy.rate_limit_floor {
                *self.gate_until.lock().unwrap() = Some(reset);
            }
        }
    }

    /// Wait for a 403'd request: until the advertised reset, else one backoff.
    fn until_reset(&self, response: &HttpResponse) -> Duration {
        response
            .header("x-ratelimit-reset")
            .and_then(|v| v.parse::<i64>().ok())
            .map(|reset| Duration::from_secs((reset - self.pacer.now_unix()).max(0) as u64))
            .unwrap_or(self.policy.base_backoff)
    }
}

/// Extracts the rel="next" target from a Link header, if any.
fn next_page(response: &HttpResponse) -> Result<Option<String>> {
    let Some(link) = response.header("link") else {
        return Ok(None);
    };
    for part in link.split(',') {
        let part = part.trim();
        if !part.contains("rel=\"next\"") {
            continue;
        }
        let url = part
            .split(';')
            .next()
            .map(str::trim)
            .filter(|u| u.starts_with('<') && u.ends_with('>'))
            .map(|u| u[1..u.len() - 1].to_string())
            .ok_or_else(|| Error::Format(format!("unparseable Link header: {link}")))?;
        return Ok(Some(url));
    }
    Ok(None)
}
