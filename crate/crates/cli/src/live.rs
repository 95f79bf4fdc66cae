//! Network adapters for the hosted text model, street imagery, and image
//! revision services. Compiled only with the `live` feature.

use std::sync::{Arc, OnceLock};
use std::time::Duration;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use codesign_core::agents::CompletionRequest;
use codesign_core::scene::{RevisionRequest, ViewParams};
use codesign_core::{ChatProvider, ImageProvider, ProviderError, ProviderErrorKind, SceneProvider, WorkshopBuilder};
use reqwest::blocking::{Client, Response};
use serde_json::{json, Value};

use crate::config::{ProviderConfig, ServiceConfig};

const GEMINI_ENDPOINT: &str = "https://generativelanguage.googleapis.com/v1beta/models";
const STREETVIEW_ENDPOINT: &str = "https://maps.googleapis.com/maps/api/streetview";
const TIMEOUT: Duration = Duration::from_secs(90);

pub(crate) fn apply(mut builder: WorkshopBuilder, cfg: &ServiceConfig) -> WorkshopBuilder {
    if let ProviderConfig::Live { api_key, model } = &cfg.chat {
        builder = builder.chat(Arc::new(GeminiChat::new(api_key, model)));
    }
    if let ProviderConfig::Live { api_key, .. } = &cfg.scene {
        builder = builder.scenes(Arc::new(StreetViewScenes::new(api_key)));
    }
    if let ProviderConfig::Live { api_key, model } = &cfg.image {
        builder = builder.images(Arc::new(GeminiImages::new(api_key, model)));
    }
    builder
}

/// The blocking client owns a runtime, so it is built on first use from a
/// worker thread rather than inside the async server.
fn client(cell: &OnceLock<Client>) -> Result<&Client, ProviderError> {
    if let Some(c) = cell.get() {
        return Ok(c);
    }
    let built = Client::builder()
        .timeout(TIMEOUT)
        .build()
        .map_err(|e| ProviderError::unavailable(e.to_string()))?;
    Ok(cell.get_or_init(|| built))
}

fn transport(err: reqwest::Error) -> ProviderError {
    let kind = if err.is_timeout() {
        ProviderErrorKind::Timeout
    } else {
        ProviderErrorKind::Unavailable
    };
    ProviderError::new(kind, err.to_string())
}

fn check(resp: Response) -> Result<Response, ProviderError> {
    let status = resp.status();
    if status.is_success() {
        return Ok(resp);
    }
    let body = resp.text().unwrap_or_default();
    let kind = if status.is_client_error() {
        ProviderErrorKind::Rejected
    } else {
        ProviderErrorKind::Unavailable
    };
    Err(ProviderError::new(kind, format!("HTTP {status}: {}", body.chars().take(300).collect::<String>())))
}

fn malformed(what: impl std::fmt::Display) -> ProviderError {
    ProviderError::new(ProviderErrorKind::MalformedResponse, what.to_string())
}

fn to_png(bytes: &[u8]) -> Result<Vec<u8>, ProviderError> {
    let img = image::load_from_memory(bytes).map_err(malformed)?;
    let mut out = std::io::Cursor::new(Vec::new());
    img.write_to(&mut out, image::ImageFormat::Png).map_err(malformed)?;
    Ok(out.into_inner())
}

fn candidate_parts(body: &Value) -> Result<&Vec<Value>, ProviderError> {
    body.pointer("/candidates/0/content/parts")
        .and_then(Value::as_array)
        .ok_or_else(|| malformed("response has no candidate content"))
}

pub struct GeminiChat {
    api_key: String,
    model: String,
    http: OnceLock<Client>,
}

impl GeminiChat {
    pub fn new(api_key: &str, model: &str) -> Self {
        Self {
            api_key: api_key.to_string(),
            model: model.to_string(),
            http: OnceLock::new(),
        }
    }
}

impl ChatProvider for GeminiChat {
    fn name(&self) -> &str {
        "gemini-chat"
    }

    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        let transcript = request
            .history
            .iter()
            .map(|e| format!("{}: {}", e.label, e.content))
            .collect::<Vec<_>>()
            .join("\n");
        let body = json!({
            "systemInstruction": {"parts": [{"text": request.system_prompt}]},
            "contents": [{"role": "user", "parts": [{"text": transcript}]}],
            "generationConfig": {
                "maxOutputTokens": request.params.max_output_tokens,
                "temperature": request.params.temperature,
                "topP": request.params.top_p,
            },
        });
        let resp = client(&self.http)?
            .post(format!("{GEMINI_ENDPOINT}/{}:generateContent", self.model))
            .header("x-goog-api-key", &self.api_key)
            .json(&body)
            .send()
            .map_err(transport)?;
        let value: Value = check(resp)?.json().map_err(malformed)?;
        let text: String = candidate_parts(&value)?
            .iter()
            .filter_map(|p| p.get("text").and_then(Value::as_str))
            .collect();
        if text.trim().is_empty() {
            return Err(malformed("empty completion"));
        }
        Ok(text)
    }
}

pub struct StreetViewScenes {
    api_key: String,
    http: OnceLock<Client>,
}

impl StreetViewScenes {
    pub fn new(api_key: &str) -> Self {
        Self {
            api_key: api_key.to_string(),
            http: OnceLock::new(),
        }
    }
}

impl SceneProvider for StreetViewScenes {
    fn name(&self) -> &str {
        "street-view"
    }

    fn fetch_scene_image(&self, view: &ViewParams) -> Result<Vec<u8>, ProviderError> {
        let resp = client(&self.http)?
            .get(STREETVIEW_ENDPOINT)
            .query(&[
                ("size", "640x640".to_string()),
                ("pano", view.panorama_id.clone()),
                ("heading", view.heading.to_string()),
                ("pitch", view.pitch.to_string()),
                ("fov", view.fov.to_string()),
                ("key", self.api_key.clone()),
            ])
            .send()
            .map_err(transport)?;
        let bytes = check(resp)?.bytes().map_err(transport)?;
        to_png(&bytes)
    }
}

pub struct GeminiImages {
    api_key: String,
    model: String,
    http: OnceLock<Client>,
}

impl GeminiImages {
    pub fn new(api_key: &str, model: &str) -> Self {
        Self {
            api_key: api_key.to_string(),
            model: model.to_string(),
            http: OnceLock::new(),
        }
    }
}

impl ImageProvider for GeminiImages {
    fn name(&self) -> &str {
        "gemini-image"
    }

    fn revise(&self, request: &RevisionRequest) -> Result<Vec<u8>, ProviderError> {
        let body = json!({
            "contents": [{"role": "user", "parts": [
                {"text": request.prompt_text()},
                {"inlineData": {"mimeType": "image/png", "data": BASE64.encode(&request.source_png)}},
            ]}],
            "generationConfig": {"responseModalities": ["IMAGE"]},
        });
        let resp = client(&self.http)?
            .post(format!("{GEMINI_ENDPOINT}/{}:generateContent", self.model))
            .header("x-goog-api-key", &self.api_key)
            .json(&body)
            .send()
            .map_err(transport)?;
        let value: Value = check(resp)?.json().map_err(malformed)?;
        let data = candidate_parts(&value)?
            .iter()
            .find_map(|p| p.pointer("/inlineData/data").and_then(Value::as_str))
            .ok_or_else(|| malformed("response contains no image"))?;
        to_png(&BASE64.decode(data).map_err(malformed)?)
    }
}
