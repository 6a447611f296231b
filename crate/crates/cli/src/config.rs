use std::path::PathBuf;

use czgp_core::game::GeneratorParams;
use czgp_core::kernels::KernelSpec;
use czgp_core::metrics::RegretConvention;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub game: GameBlock,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub players: Option<Vec<PlayerBlock>>,
    #[serde(default)]
    pub confidence: ConfidenceBlock,
    #[serde(default)]
    pub kernels: Option<KernelBlock>,
    /// Feed the context to the constraint models of contextual learners.
    #[serde(default)]
    pub constraint_context: bool,
    #[serde(default)]
    pub context_schedule: ScheduleBlock,
    #[serde(default)]
    pub regret_convention: RegretConvention,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default = "default_true")]
    pub bounds: bool,
    #[serde(default = "default_parallel")]
    pub parallel: usize,
}

fn default_true() -> bool {
    true
}

fn default_parallel() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum GameBlock {
    Generate(GenerateBlock),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateBlock {
    #[serde(rename = "K")]
    pub num_actions: usize,
    #[serde(rename = "Z", default)]
    pub num_contexts: Option<usize>,
    #[serde(rename = "N", default = "default_players")]
    pub num_players: usize,
    #[serde(rename = "M", default = "default_constraints")]
    pub num_constraints: usize,
    /// Continuous context dimension; replaces `Z` when set.
    #[serde(default)]
    pub context_dim: Option<usize>,
    #[serde(default = "default_noise")]
    pub noise: f64,
    #[serde(default = "default_action_lengthscale")]
    pub action_lengthscale: f64,
    #[serde(default = "default_context_lengthscale")]
    pub context_lengthscale: f64,
    #[serde(default = "default_context_lengthscale")]
    pub constraint_lengthscale: f64,
    #[serde(default = "default_samples")]
    pub num_gp_samples: usize,
    #[serde(default = "default_samples")]
    pub points_per_sample: usize,
    #[serde(default = "default_quantile")]
    pub feasible_quantile: f64,
}

fn default_players() -> usize {
    3
}
fn default_constraints() -> usize {
    1
}
fn default_noise() -> f64 {
    1.0
}
fn default_action_lengthscale() -> f64 {
    2.0
}
fn default_context_lengthscale() -> f64 {
    0.5
}
fn default_samples() -> usize {
    10
}
fn default_quantile() -> f64 {
    0.25
}

impl GenerateBlock {
    pub fn params(&self) -> GeneratorParams {
        GeneratorParams {
            num_players: self.num_players,
            num_actions: self.num_actions,
            num_contexts: self.num_contexts.unwrap_or(1),
            num_constraints: self.num_constraints,
            action_lengthscale: self.action_lengthscale,
            context_lengthscale: self.context_lengthscale,
            constraint_lengthscale: self.constraint_lengthscale,
            num_gp_samples: self.num_gp_samples,
            points_per_sample: self.points_per_sample,
            conditioning_noise: GeneratorParams::default().conditioning_noise,
            noise: self.noise,
            feasible_quantile: self.feasible_quantile,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmName {
    CzAdaNormalGp,
    CAdaNormalGp,
    CzHedgeGp,
    Gpmw,
    ZGpmw,
    Random,
}

impl AlgorithmName {
    pub fn is_contextual(self) -> bool {
        matches!(self, Self::CzAdaNormalGp | Self::CzHedgeGp | Self::ZGpmw)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayerBlock {
    pub algorithm: AlgorithmName,
    /// Fixed ε-net radius for continuous contexts; derived from `T` otherwise.
    #[serde(default)]
    pub epsilon: Option<f64>,
    /// Lipschitz product used for the derived ε-net radius.
    #[serde(default)]
    pub lipschitz: Option<f64>,
    #[serde(default)]
    pub beta_scale: Option<f64>,
}

impl PlayerBlock {
    pub fn new(algorithm: AlgorithmName) -> Self {
        Self {
            algorithm,
            epsilon: None,
            lipschitz: None,
            beta_scale: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfidenceBlock {
    #[serde(default = "default_rkhs")]
    pub rkhs_bound: f64,
    /// Defaults to the game's reward noise scale.
    #[serde(default)]
    pub noise_scale: Option<f64>,
    #[serde(default = "default_delta")]
    pub failure_prob: f64,
    #[serde(default = "default_beta_scale")]
    pub beta_scale: f64,
}

fn default_rkhs() -> f64 {
    1.0
}
fn default_delta() -> f64 {
    0.1
}
fn default_beta_scale() -> f64 {
    1.0
}

impl Default for ConfidenceBlock {
    fn default() -> Self {
        Self {
            rkhs_bound: default_rkhs(),
            noise_scale: None,
            failure_prob: default_delta(),
            beta_scale: default_beta_scale(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelBlock {
    pub action: KernelSpec,
    pub context: KernelSpec,
    pub constraint: KernelSpec,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "type")]
pub enum ScheduleBlock {
    /// Uniform over the game's context space.
    #[default]
    Uniform,
    Fixed {
        contexts: Vec<czgp_core::game::Context>,
    },
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.horizon == 0 {
            return Err(CliError::config(".T", "must be at least 1"));
        }
        if self.seeds.is_empty() {
            return Err(CliError::config(".seeds", "must not be empty"));
        }
        if self.parallel == 0 {
            return Err(CliError::config(".parallel", "must be at least 1"));
        }
        if let GameBlock::Generate(g) = &self.game {
            if g.num_actions < 2 {
                return Err(CliError::config(".game.generate.K", "must be at least 2"));
            }
            match (g.num_contexts, g.context_dim) {
                (Some(_), Some(_)) => {
                    return Err(CliError::config(
                        ".game.generate",
                        "set either Z or context_dim, not both",
                    ))
                }
                (Some(0), _) => return Err(CliError::config(".game.generate.Z", "must be positive")),
                (_, Some(0)) => {
                    return Err(CliError::config(".game.generate.context_dim", "must be positive"))
                }
                _ => {}
            }
            if let Err(e) = g.params().validate() {
                return Err(CliError::config(".game.generate", &e.to_string()));
            }
            if let Some(players) = &self.players {
                if players.len() != g.num_players {
                    return Err(CliError::config(
                        ".players",
                        &format!("has {} entries but the game has {} players", players.len(), g.num_players),
                    ));
                }
            }
        }
        let c = &self.confidence;
        if !(c.rkhs_bound.is_finite() && c.rkhs_bound > 0.0) {
            return Err(CliError::config(".confidence.rkhs_bound", "must be positive"));
        }
        if !(c.failure_prob > 0.0 && c.failure_prob < 1.0) {
            return Err(CliError::config(".confidence.failure_prob", "must lie in (0, 1)"));
        }
        if let Some(s) = c.noise_scale {
            if !(s.is_finite() && s > 0.0) {
                return Err(CliError::config(".confidence.noise_scale", "must be positive"));
            }
        }
        if !(c.beta_scale.is_finite() && c.beta_scale >= 0.0) {
            return Err(CliError::config(".confidence.beta_scale", "must be non-negative"));
        }
        if let Some(k) = &self.kernels {
            for (name, spec) in [("action", &k.action), ("context", &k.context), ("constraint", &k.constraint)] {
                if let Err(e) = spec.validate() {
                    return Err(CliError::config(&format!(".kernels.{name}"), &e.to_string()));
                }
            }
        }
        if let Some(players) = &self.players {
            for (i, p) in players.iter().enumerate() {
                if let Some(e) = p.epsilon {
                    if !(e.is_finite() && e > 0.0) {
                        return Err(CliError::config(&format!(".players[{i}].epsilon"), "must be positive"));
                    }
                }
                if let Some(l) = p.lipschitz {
                    if !(l.is_finite() && l > 0.0) {
                        return Err(CliError::config(&format!(".players[{i}].lipschitz"), "must be positive"));
                    }
                }
                if let Some(b) = p.beta_scale {
                    if !(b.is_finite() && b >= 0.0) {
                        return Err(CliError::config(&format!(".players[{i}].beta_scale"), "must be non-negative"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Player blocks with defaults filled: the first player runs the
    /// contextual constrained learner and the others play uniformly.
    pub fn player_blocks(&self, num_players: usize) -> Vec<PlayerBlock> {
        match &self.players {
            Some(p) => p.clone(),
            None => (0..num_players)
                .map(|i| {
                    PlayerBlock::new(if i == 0 {
                        AlgorithmName::CzAdaNormalGp
                    } else {
                        AlgorithmName::Random
                    })
                })
                .collect(),
        }
    }

    /// Kernels with defaults taken from the generator lengthscales.
    pub fn kernel_block(&self) -> KernelBlock {
        if let Some(k) = &self.kernels {
            return k.clone();
        }
        let (a, z, g) = match &self.game {
            GameBlock::Generate(g) => (g.action_lengthscale, g.context_lengthscale, g.constraint_lengthscale),
            GameBlock::File(_) => (
                default_action_lengthscale(),
                default_context_lengthscale(),
                default_context_lengthscale(),
            ),
        };
        KernelBlock {
            action: KernelSpec::squared_exponential(a),
            context: KernelSpec::squared_exponential(z),
            constraint: KernelSpec::squared_exponential(g),
        }
    }
}

/// Parses and validates a JSON configuration. Errors name the offending
/// path, e.g. `.T` or `.game.generate.K`.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let mut path = e.path().to_string();
        let inner = e.inner().to_string();
        if let Some(rest) = inner.strip_prefix("missing field `") {
            if let Some(field) = rest.split('`').next() {
                path = if path == "." {
                    format!(".{field}")
                } else {
                    format!(".{path}.{field}")
                };
            }
        } else if !path.starts_with('.') {
            path = format!(".{path}");
        }
        CliError::config(&path, &inner)
    })?;
    cfg.validate()?;
    Ok(cfg)
}
