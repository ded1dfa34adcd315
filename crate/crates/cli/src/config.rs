//! TOML configuration: rule tolerances, the prompt token budget and model
//! parameters.
//!
//! ```toml
//! token_budget = 8100
//!
//! [model]
//! name = "gpt-4"
//! temperature = 0.0
//!
//! [rules]
//! epsilon_align = 1.0
//! min_contrast = 4.5
//! ```
//!
//! `HEUREX_MODEL` overrides `model.name`.

use std::path::Path;

use heurex_core::{CompletionParams, RuleConfig, SessionState, DEFAULT_TOKEN_BUDGET};
use serde::{Deserialize, Serialize};

use crate::error::AppError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub name: String,
    pub temperature: f64,
    pub max_output_tokens: Option<u32>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let p = CompletionParams::default();
        ModelConfig { name: p.model, temperature: p.temperature, max_output_tokens: p.max_output_tokens }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub token_budget: usize,
    pub suppress_guideline_swaps: bool,
    pub model: ModelConfig,
    pub rules: RuleConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            token_budget: DEFAULT_TOKEN_BUDGET,
            suppress_guideline_swaps: false,
            model: ModelConfig::default(),
            rules: RuleConfig::default(),
        }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, AppError> {
        let config: Config = toml::from_str(text).map_err(|e| AppError::validation(format!("invalid config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads `path`, or returns the defaults when there is none.
    pub fn load(path: Option<&Path>) -> Result<Config, AppError> {
        match path {
            Some(p) => Config::parse(&std::fs::read_to_string(p).map_err(|e| AppError::io(p, e))?),
            None => Ok(Config::default()),
        }
    }

    pub fn validate(&self) -> Result<(), AppError> {
        if self.token_budget == 0 {
            return Err(AppError::validation("invalid config: token_budget must be positive"));
        }
        self.rules.validate().map_err(|e| AppError::validation(e.to_string()))?;
        self.params().validate().map_err(|e| AppError::validation(format!("invalid config: {e}")))?;
        Ok(())
    }

    pub fn params(&self) -> CompletionParams {
        CompletionParams {
            temperature: self.model.temperature,
            max_output_tokens: self.model.max_output_tokens,
            model: self.model.name.clone(),
        }
    }

    /// [`Config::params`] with the model name taken from `HEUREX_MODEL` when set.
    pub fn params_from_env(&self) -> CompletionParams {
        let mut params = self.params();
        if let Some(model) = std::env::var("HEUREX_MODEL").ok().filter(|m| !m.trim().is_empty()) {
            params.model = model;
        }
        params
    }

    /// Copies the settings that live on a session.
    pub fn apply(&self, session: &mut SessionState, params: CompletionParams) {
        session.budget = self.token_budget;
        session.rule_config = self.rules;
        session.suppress_guideline_swaps = self.suppress_guideline_swaps;
        session.params = params;
    }
}
