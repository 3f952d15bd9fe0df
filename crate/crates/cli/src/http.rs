//! Wire selection: a real HTTP client for live runs, or a scripted
//! transport driven by the `STARTRACK_TRANSPORT` environment variable.
//!
//! `STARTRACK_TRANSPORT=mock:<script.json>` swaps in canned responses and a
//! virtual clock, which makes every network-touching command runnable in
//! tests and demos without credentials or connectivity.

use std::path::Path;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use startrack_core::transport::{
    HttpRequest, HttpResponse, MockTransport, Pacer, SystemPacer, Transport, VirtualPacer,
};
use startrack_core::Error;

/// Environment variable selecting the transport: unset or `live` for real
/// HTTP, `mock:<path>` for a response script.
pub const TRANSPORT_ENV: &str = "STARTRACK_TRANSPORT";

/// Clock used for mock runs unless the script says otherwise.
const MOCK_DEFAULT_NOW: i64 = 1_430_438_400; // 2015-05-01T00:00:00Z

/// Blocking HTTP transport backed by reqwest.
pub struct ReqwestTransport {
    client: reqwest::blocking::Client,
}

impl ReqwestTransport {
    pub fn new() -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(30))
            .build()
            .context("building HTTP client")?;
        Ok(ReqwestTransport { client })
    }
}

impl Transport for ReqwestTransport {
    fn execute(&self, request: &HttpRequest) -> startrack_core::Result<HttpResponse> {
        let mut builder = self.client.get(&request.url);
        for (name, value) in &request.headers {
            builder = builder.header(name, value);
        }
        let response = builder
            .send()
            .map_err(|e| Error::Transport(format!("{}: {e}", request.url)))?;
        let status = response.status().as_u16();
        let headers = response
            .headers()
            .iter()
            .filter_map(|(name, value)| {
                value
                    .to_str()
                    .ok()
                    .map(|v| (name.as_str().to_ascii_lowercase(), v.to_string()))
            })
            .collect();
        let body = response
            .bytes()
            .map_err(|e| Error::Transport(format!("{}: reading body: {e}", request.url)))?
            .to_vec();
        Ok(HttpResponse {
            status,
            headers,
            body,
        })
    }
}

/// A transport plus the pacing clock that goes with it.
pub struct Wire {
    pub transport: Box<dyn Transport>,
    pub pacer: Box<dyn Pacer>,
    pub mock: bool,
}

/// Builds the wire from `STARTRACK_TRANSPORT`.
pub fn wire_from_env() -> Result<Wire> {
    match std::env::var(TRANSPORT_ENV) {
        Err(_) => live_wire(),
        Ok(value) if value.is_empty() || value == "live" => live_wire(),
        Ok(value) => match value.strip_prefix("mock:") {
            Some(path) => mock_wire(Path::new(path)),
            None => bail!("{TRANSPORT_ENV} must be `live` or `mock:<script.json>`, got `{value}`"),
        },
    }
}

fn live_wire() -> Result<Wire> {
    Ok(Wire {
        transport: Box::new(ReqwestTransport::new()?),
        pacer: Box::new(SystemPacer),
        mock: false,
    })
}

fn mock_wire(script: &Path) -> Result<Wire> {
    let transport = MockTransport::from_script_file(script)
        .with_context(|| format!("loading transport script {}", script.display()))?;
    // The script may pin the clock; scripted crawls are dated, not "now".
    let text = std::fs::read_to_string(script)
        .with_context(|| format!("reading transport script {}", script.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).context("transport script is not valid JSON")?;
    let now_unix = value
        .get("now_unix")
        .and_then(serde_json::Value::as_i64)
        .unwrap_or(MOCK_DEFAULT_NOW);
    Ok(Wire {
        transport: Box::new(transport),
        pacer: Box::new(VirtualPacer::at(now_unix)),
        mock: true,
    })
}
