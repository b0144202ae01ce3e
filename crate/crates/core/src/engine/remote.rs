use std::collections::BTreeMap;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{EngineError, Translator};

/// Prompt preset for chat-style LLM translators.
pub const TRANSLATION_PROMPT: &str = "Directly translate {source_language} to {target_language}: {text}";

/// JSON field names of the request and response bodies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FieldMapping {
    pub text: String,
    pub source_lang: String,
    pub target_lang: String,
    /// Dotted path into the response, numeric segments index arrays, e.g.
    /// `choices.0.message.content`.
    pub response: String,
}

impl Default for FieldMapping {
    fn default() -> Self {
        FieldMapping {
            text: "text".into(),
            source_lang: "source_lang".into(),
            target_lang: "target_lang".into(),
            response: "text".into(),
        }
    }
}

fn default_retries() -> u32 {
    2
}

fn default_backoff_ms() -> u64 {
    200
}

fn default_timeout_ms() -> u64 {
    30_000
}

/// Settings for a generic JSON-over-HTTP translator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemoteConfig {
    pub url: String,
    /// Applied verbatim to the text before sending. Placeholders:
    /// `{text}`, `{source_language}`, `{target_language}`,
    /// `{source_lang}`, `{target_lang}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_template: Option<String>,
    #[serde(default)]
    pub fields: FieldMapping,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub headers: BTreeMap<String, String>,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
}

impl RemoteConfig {
    pub fn new(url: &str) -> RemoteConfig {
        RemoteConfig {
            url: url.to_string(),
            prompt_template: None,
            fields: FieldMapping::default(),
            headers: BTreeMap::new(),
            max_retries: default_retries(),
            backoff_ms: default_backoff_ms(),
            timeout_ms: default_timeout_ms(),
        }
    }

    /// [`RemoteConfig::new`] with the [`TRANSLATION_PROMPT`] template.
    pub fn prompt_preset(url: &str) -> RemoteConfig {
        RemoteConfig {
            prompt_template: Some(TRANSLATION_PROMPT.to_string()),
            ..RemoteConfig::new(url)
        }
    }
}

/// English name for a language code, or the code itself.
pub fn language_name(code: &str) -> &str {
    match code.to_ascii_lowercase().as_str() {
        "en" => "English",
        "fr" => "French",
        "de" => "German",
        "es" => "Spanish",
        "it" => "Italian",
        "ja" => "Japanese",
        "zh" => "Chinese",
        "pt" => "Portuguese",
        _ => code,
    }
}

pub struct RemoteEngine {
    id: String,
    source_lang: String,
    target_lang: String,
    config: RemoteConfig,
    agent: ureq::Agent,
}

impl RemoteEngine {
    pub fn new(id: &str, source_lang: &str, target_lang: &str, config: RemoteConfig) -> RemoteEngine {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        RemoteEngine {
            id: id.to_string(),
            source_lang: source_lang.to_string(),
            target_lang: target_lang.to_string(),
            config,
            agent,
        }
    }

    pub fn render_prompt(&self, text: &str) -> String {
        match &self.config.prompt_template {
            None => text.to_string(),
            Some(template) => template
                .replace("{source_language}", language_name(&self.source_lang))
                .replace("{target_language}", language_name(&self.target_lang))
                .replace("{source_lang}", &self.source_lang)
                .replace("{target_lang}", &self.target_lang)
                .replace("{text}", text),
        }
    }

    pub fn request_body(&self, text: &str) -> Value {
        let fields = &self.config.fields;
        let mut body = Map::new();
        body.insert(fields.text.clone(), Value::String(self.render_prompt(text)));
        body.insert(fields.source_lang.clone(), Value::String(self.source_lang.clone()));
        body.insert(fields.target_lang.clone(), Value::String(self.target_lang.clone()));
        Value::Object(body)
    }

    fn protocol(&self, message: impl Into<String>) -> EngineError {
        EngineError::Protocol {
            engine: self.id.clone(),
            message: message.into(),
        }
    }

    fn attempt(&self, body: &Value) -> Result<String, Attempt> {
        let mut request = self.agent.post(&self.config.url);
        for (name, value) in &self.config.headers {
            request = request.header(name.as_str(), value.as_str());
        }
        let mut response = request.send_json(body).map_err(|e| Attempt::Retry(e.to_string()))?;
        let status = response.status().as_u16();
        let raw = response
            .body_mut()
            .read_to_string()
            .map_err(|e| Attempt::Retry(e.to_string()))?;
        if status == 429 || status >= 500 {
            return Err(Attempt::Retry(format!("HTTP {status}")));
        }
        if !(200..300).contains(&status) {
            return Err(Attempt::Fatal(self.protocol(format!("HTTP {status}: {raw}"))));
        }
        let json: Value = serde_json::from_str(&raw).map_err(|e| Attempt::Fatal(self.protocol(e.to_string())))?;
        extract(&json, &self.config.fields.response)
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| {
                Attempt::Fatal(self.protocol(format!("response has no string at {:?}", self.config.fields.response)))
            })
    }
}

enum Attempt {
    Retry(String),
    Fatal(EngineError),
}

fn extract<'a>(value: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.')
        .filter(|s| !s.is_empty())
        .try_fold(value, |v, segment| match v {
            Value::Array(items) => segment.parse::<usize>().ok().and_then(|i| items.get(i)),
            Value::Object(map) => map.get(segment),
            _ => None,
        })
}

impl Translator for RemoteEngine {
    /// POST with up to `max_retries` retries and exponential backoff on
    /// transport errors, 429 and 5xx.
    fn translate(&self, text: &str) -> Result<String, EngineError> {
        let body = self.request_body(text);
        let attempts = self.config.max_retries + 1;
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                thread::sleep(Duration::from_millis(self.config.backoff_ms << (attempt - 1)));
            }
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(message)) => last = message,
            }
        }
        Err(EngineError::Transport {
            engine: self.id.clone(),
            attempts,
            message: last,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn prompt_template_applied_verbatim() {
        let engine = RemoteEngine::new("chat", "en", "fr", RemoteConfig::prompt_preset("http://127.0.0.1:9"));
        assert_eq!(
            engine.render_prompt("Bob is heading to the store."),
            "Directly translate English to French: Bob is heading to the store."
        );
        assert_eq!(
            engine.request_body("hi"),
            json!({"text": "Directly translate English to French: hi", "source_lang": "en", "target_lang": "fr"})
        );
    }

    #[test]
    fn custom_field_mapping() {
        let mut config = RemoteConfig::new("http://127.0.0.1:9");
        config.fields = FieldMapping {
            text: "q".into(),
            source_lang: "source".into(),
            target_lang: "target".into(),
            response: "data.translations.0.translatedText".into(),
        };
        let engine = RemoteEngine::new("g", "en", "de", config);
        assert_eq!(
            engine.request_body("hi"),
            json!({"q": "hi", "source": "en", "target": "de"})
        );

        let response = json!({"data": {"translations": [{"translatedText": "hallo"}]}});
        assert_eq!(
            extract(&response, "data.translations.0.translatedText"),
            Some(&json!("hallo"))
        );
        assert_eq!(extract(&response, "data.translations.1.translatedText"), None);
    }

    #[test]
    fn unreachable_endpoint_is_transport_error() {
        let mut config = RemoteConfig::new("http://127.0.0.1:1/translate");
        config.backoff_ms = 1;
        config.timeout_ms = 2_000;
        let engine = RemoteEngine::new("down", "en", "fr", config);
        let err = engine.translate("hello").unwrap_err();
        assert!(err.is_retryable());
        assert!(matches!(err, EngineError::Transport { attempts: 3, ref engine, .. } if engine == "down"));
    }
}
