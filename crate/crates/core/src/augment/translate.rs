use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Carries one round-trip request: `text` out to `pivot` and back.
pub trait TranslationTransport: Send + Sync {
    fn round_trip(&self, text: &str, pivot: &str) -> std::result::Result<String, String>;
}

/// In-process transport that echoes its input.
#[derive(Debug, Clone, Copy, Default)]
pub struct StubTransport;

impl TranslationTransport for StubTransport {
    fn round_trip(&self, text: &str, _pivot: &str) -> std::result::Result<String, String> {
        Ok(text.to_string())
    }
}

#[derive(Serialize)]
struct Request<'a> {
    text: &'a str,
    pivot: &'a str,
}

#[derive(Deserialize)]
struct Response {
    text: String,
}

/// POSTs `{"text", "pivot"}` to a URL and reads `{"text"}` back.
pub struct HttpJsonTransport {
    url: String,
    agent: ureq::Agent,
}

impl HttpJsonTransport {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        HttpJsonTransport {
            url: url.into(),
            agent,
        }
    }
}

impl TranslationTransport for HttpJsonTransport {
    fn round_trip(&self, text: &str, pivot: &str) -> std::result::Result<String, String> {
        let mut resp = self
            .agent
            .post(&self.url)
            .send_json(Request { text, pivot })
            .map_err(|e| format!("{}: {e}", self.url))?;
        let body: Response = resp
            .body_mut()
            .read_json()
            .map_err(|e| format!("{}: bad response: {e}", self.url))?;
        Ok(body.text)
    }
}

pub struct TranslationClient {
    transport: Box<dyn TranslationTransport>,
    pivot: String,
}

impl TranslationClient {
    pub fn new(transport: Box<dyn TranslationTransport>, pivot: impl Into<String>) -> Self {
        TranslationClient {
            transport,
            pivot: pivot.into(),
        }
    }

    pub fn stub() -> Self {
        TranslationClient::new(Box::new(StubTransport), "de")
    }

    pub fn http(url: impl Into<String>, pivot: impl Into<String>) -> Self {
        TranslationClient::new(
            Box::new(HttpJsonTransport::new(url, Duration::from_secs(30))),
            pivot,
        )
    }

    pub fn pivot(&self) -> &str {
        &self.pivot
    }
}

/// Translates `text` to the client's pivot language and back.
pub fn round_trip_translate(text: &str, client: &TranslationClient) -> Result<String> {
    let out = client
        .transport
        .round_trip(text, &client.pivot)
        .map_err(Error::Translation)?;
    if out.trim().is_empty() {
        return Err(Error::Translation("empty translation".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Failing;
    impl TranslationTransport for Failing {
        fn round_trip(&self, _: &str, _: &str) -> std::result::Result<String, String> {
            Err("service unavailable".into())
        }
    }

    struct Blank;
    impl TranslationTransport for Blank {
        fn round_trip(&self, _: &str, _: &str) -> std::result::Result<String, String> {
            Ok("  ".into())
        }
    }

    #[test]
    fn stub_is_identity() {
        assert_eq!(
            round_trip_translate("hello world", &TranslationClient::stub()).unwrap(),
            "hello world"
        );
    }

    #[test]
    fn failures_surface() {
        let err = round_trip_translate("x", &TranslationClient::new(Box::new(Failing), "fr")).unwrap_err();
        assert!(err.to_string().contains("service unavailable"));
        let err = round_trip_translate("x", &TranslationClient::new(Box::new(Blank), "fr")).unwrap_err();
        assert!(err.to_string().contains("empty translation"));
    }
}
