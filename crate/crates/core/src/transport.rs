//! HTTP transport abstraction.
//!
//! All network-facing clients take a [`Transport`] implementation, so every
//! test runs against a scripted [`MockTransport`] and the live adapter stays
//! a thin shell around an HTTP library. Pacing (sleeps, wall-clock reads) is
//! likewise behind [`Pacer`] so rate-limit behavior is testable without
//! real delays.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Outgoing GET request: URL plus headers (auth, media type).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpRequest {
    pub url: String,
    pub headers: Vec<(String, String)>,
}

impl HttpRequest {
    pub fn get(url: impl Into<String>) -> Self {
        HttpRequest {
            url: url.into(),
            headers: Vec::new(),
        }
    }

    pub fn header(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.headers.push((name.into(), value.into()));
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    /// Header names lowercased.
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl HttpResponse {
    pub fn header(&self, name: &str) -> Option<&str> {
        let name = name.to_ascii_lowercase();
        self.headers
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, v)| v.as_str())
    }

    pub fn body_str(&self) -> Result<&str> {
        std::str::from_utf8(&self.body)
            .map_err(|e| Error::Format(format!("response body is not UTF-8: {e}")))
    }
}

/// Blocking HTTP GET. Implementations return `Err` only for connection-level
/// failures; HTTP error statuses come back as responses.
pub trait Transport {
    fn execute(&self, request: &HttpRequest) -> Result<HttpResponse>;
}

/// Injectable clock and sleep, so tests can observe pauses instead of
/// suffering them.
pub trait Pacer {
    fn sleep(&self, duration: Duration);
    /// Current wall-clock time as Unix seconds.
    fn now_unix(&self) -> i64;
}

/// Production pacer: real sleeps, real clock.
pub struct SystemPacer;

impl Pacer for SystemPacer {
    fn sleep(&self, duration: Duration) {
        std::thread::sleep(duration);
    }

    fn now_unix(&self) -> i64 {
        crate::time::Timestamp::now().unix()
    }
}

/// Test pacer pinned to a fixed instant; sleeps advance the virtual clock
/// and are recorded for assertions.
pub struct VirtualPacer {
    state: Mutex<(i64, Vec<Duration>)>,
}

impl VirtualPacer {
    pub fn at(now_unix: i64) -> Self {
        VirtualPacer {
            state: Mutex::new((now_unix, Vec::new())),
        }
    }

    pub fn sleeps(&self) -> Vec<Duration> {
        self.state.lock().unwrap().1.clone()
    }

    pub fn total_slept(&self) -> Duration {
        self.sleeps().iter().sum()
    }
}

impl Pacer for VirtualPacer {
    fn sleep(&self, duration: Duration) {
        let mut state = self.state.lock().unwrap();
        state.0 += duration.as_secs() as i64;
        state.1.push(duration);
    }

    fn now_unix(&self) -> i64 {
        self.state.lock().unwrap().0
    }
}

/// One canned response in a mock script.
#[derive(Debug, Clone, Deserialize)]
pub struct ScriptedResponse {
    pub url: String,
    #[serde(default = "default_status")]
    pub status: u16,
    #[serde(default)]
    pub headers: HashMap<String, String>,
    /// A JSON string is used verbatim as the body; any other JSON value is
    /// serialized compactly.
    #[serde(default)]
    pub body: serde_json::Value,
}

fn default_status() -> u16 {
    200
}

#[derive(Debug, Deserialize)]
struct Script {
    responses: Vec<ScriptedResponse>,
}

/// Scripted transport: per-URL FIFO queues of canned responses.
///
/// Responses for a URL are served in script order; the last one repeats once
/// the queue drains (so endless retries keep hitting the same failure). A URL
/// with no script at all is a transport error. Every request URL is logged.
pub struct MockTransport {
    queues: Mutex<HashMap<String, Vec<ScriptedResponse>>>,
    log: Mutex<Vec<String>>,
}

impl MockTransport {
    pub fn new(responses: Vec<ScriptedResponse>) -> Self {
        let mut queues: HashMap<String, Vec<ScriptedResponse>> = HashMap::new();
        for response in responses {
            queues.entry(response.url.clone()).or_default().push(response);
        }
        MockTransport {
            queues: Mutex::new(queues),
            log: Mutex::new(Vec::new()),
        }
    }

    /// Loads a script: `{"responses": [{"url", "status", "headers", "body"}, …]}`.
    pub fn from_script_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let script: Script = serde_json::from_str(&text)
            .map_err(|e| Error::Format(format!("mock script {}: {e}", path.display())))?;
        Ok(MockTransport::new(script.responses))
    }

    /// URLs requested so far, in order.
    pub fn requests(&self) -> Vec<String> {
        self.log.lock().unwrap().clone()
    }

    pub fn request_count(&self, url: &str) -> usize {
        self.log.lock().unwrap().iter().filter(|u| *u == url).count()
    }
}

impl Transport for MockTransport {
    fn execute(&self, request: &HttpRequest) -> Result<HttpResponse> {
        self.log.lock().unwrap().push(request.url.clone());
        let mut queues = self.queues.lock().unwrap();
        let queue = queues.get_mut(&request.url).ok_or_else(|| {
            Error::Transport(format!("no scripted response for {}", request.url))
        })?;
        let scripted = if queue.len() > 1 {
            queue.remove(0)
        } else {
            queue[0].clone()
        };
        let body = match &scripted.body {
            serde_json::Value::String(s) => s.clone().into_bytes(),
            serde_json::Value::Null => Vec::new(),
            other => serde_json::to_vec(other).expect("serializing a JSON value"),
        };
        let headers = scripted
            .headers
            .iter()
            .map(|(k, v)| (k.to_ascii_lowercase(), v.clone()))
            .collect();
        Ok(HttpResponse {
            status: scripted.status,
            headers,
            body,
        })
    }
}
