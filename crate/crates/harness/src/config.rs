//! Run configuration: a TOML file, environment overrides for endpoint
//! locators (`LFA_<ROLE>_URL`), then command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use lfa_core::prompt::PromptPolicy;
use lfa_core::windowing::{SegmentMode, DEFAULT_CONTEXT_SIZE};
use serde::{Deserialize, Serialize};

use crate::backends::{EndpointDescriptor, Role};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub base: Option<String>,
    pub model: Option<String>,
    pub timeout_ms: Option<u64>,
    pub retries: Option<u32>,
    pub in_flight: Option<usize>,
    pub backoff_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub segment_mode: SegmentMode,
    pub context_size: usize,
    pub policy: PromptPolicy,
    pub cache_dir: Option<PathBuf>,
    /// Per-role endpoint settings; unlisted roles use the mock backend.
    pub backends: BTreeMap<Role, BackendConfig>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 0,
            segment_mode: SegmentMode::default(),
            context_size: DEFAULT_CONTEXT_SIZE,
            policy: PromptPolicy::default(),
            cache_dir: None,
            backends: BTreeMap::new(),
        }
    }
}

impl Config {
    pub fn parse(text: &str, name: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(format!("{name}: {e}")))?;
        config.policy.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Endpoint for every role, with `env` consulted for `LFA_<ROLE>_URL`.
    pub fn endpoints(&self, env: impl Fn(&str) -> Option<String>) -> Vec<EndpointDescriptor> {
        Role::ALL
            .into_iter()
            .map(|role| {
                let mut ep = EndpointDescriptor::mock(role);
                if let Some(c) = self.backends.get(&role) {
                    if let Some(b) = &c.base {
                        ep.base = b.clone();
                    }
                    if let Some(m) = &c.model {
                        ep.model = m.clone();
                    }
                    ep.timeout_ms = c.timeout_ms.unwrap_or(ep.timeout_ms);
                    ep.retries = c.retries.unwrap_or(ep.retries);
                    ep.in_flight = c.in_flight.unwrap_or(ep.in_flight);
                    ep.backoff_ms = c.backoff_ms.unwrap_or(ep.backoff_ms);
                }
                if let Some(url) = env(&env_key(role)) {
                    ep.base = url;
                }
                ep
            })
            .collect()
    }
}

pub fn env_key(role: Role) -> String {
    format!("LFA_{}_URL", role.name().to_uppercase())
}

#[cfg(test)]
mod tests {
    use super::*;
    use lfa_core::prompt::Granularity;

    #[test]
    fn file_then_env() {
        let c = Config::parse(
            r#"
seed = 7
context_size = 4
segment_mode = { kind = "by_tokens", budget = 300 }

[policy]
conserve_fraction = 0.5
granularity = "per_utterance"

[backends.paraphraser]
base = "http://localhost:9000"
model = "gemma3-4b"
retries = 1
"#,
            "test",
        )
        .unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.segment_mode, SegmentMode::ByTokens { budget: 300 });
        assert_eq!(c.policy.granularity, Granularity::PerUtterance);
        assert!(c.policy.condense);

        let env = |k: &str| (k == "LFA_ASR_URL").then(|| "http://asr:1".to_string());
        let eps = c.endpoints(env);
        let get = |r: Role| eps.iter().find(|e| e.role == r).unwrap().clone();
        assert_eq!(get(Role::Asr).base, "http://asr:1");
        assert_eq!(get(Role::Paraphraser).model, "gemma3-4b");
        assert_eq!(get(Role::Paraphraser).retries, 1);
        assert!(get(Role::Tts).is_mock());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(Config::parse("[policy]\nconserve_fraction = 1.5\n", "t").is_err());
        assert!(Config::parse("colour = 1\n", "t").is_err());
        assert!(Config::parse("[backends.nope]\nbase = \"x\"\n", "t").is_err());
    }
}
