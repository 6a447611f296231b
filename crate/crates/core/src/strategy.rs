//! Per-player learners: context routing, safe-set filtering from constraint
//! lower confidence bounds, sampling, and the feedback update.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experts::{sleeping_reward_completion, HedgeState, SleepingExpertState};
use crate::game::{Context, Feedback};
use crate::gp::{beta, ConfidenceParams, GpModel};
use crate::kernels::KernelSpec;

pub use crate::experts::renormalize;

/// How a learner treats the revealed context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ContextMode {
    /// Ignore the context: a single expert state and context-free GP inputs.
    Ignore,
    /// One expert state per context id in `0..num_contexts`.
    Finite { num_contexts: usize },
    /// Contexts in `[0, 1]^dim` routed to the nearest center of a greedy
    /// L1 ε-net.
    EpsilonNet { dim: usize, epsilon: EpsilonChoice },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EpsilonChoice {
    Fixed(f64),
    /// `(L)^(-2/(d+2)) T^(-1/(d+2))`, see [`default_epsilon`].
    Auto { lipschitz: f64, horizon: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpertRule {
    AdaNormalHedge,
    Hedge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Filters actions by the constraint lower confidence bounds.
    Constrained,
    /// Ignores constraints entirely; every action is always eligible.
    Unconstrained,
    /// Uniformly random play, no models.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayerConfig {
    pub player_index: usize,
    pub num_players: usize,
    pub num_actions: usize,
    pub num_constraints: usize,
    pub algorithm: Algorithm,
    pub expert_rule: ExpertRule,
    pub context_mode: ContextMode,
    /// Kernel over `(a_1, …, a_N, context)`; without a context coordinate
    /// when the context is ignored.
    pub reward_kernel: KernelSpec,
    /// Kernels over `(own action, context)`, one per constraint, or over the
    /// own action alone when `constraint_context` is false.
    pub constraint_kernels: Vec<KernelSpec>,
    /// Whether constraint models receive the context coordinates.
    #[serde(default = "default_true")]
    pub constraint_context: bool,
    pub reward_confidence: ConfidenceParams,
    pub constraint_confidence: Vec<ConfidenceParams>,
    /// Multiplies every confidence width; 1 reproduces the theoretical value.
    pub beta_scale: f64,
}

fn default_true() -> bool {
    true
}

impl PlayerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.player_index >= self.num_players {
            return Err(Error::InvalidParameter(format!(
                "player_index {} >= num_players {}",
                self.player_index, self.num_players
            )));
        }
        if self.num_actions == 0 {
            return Err(Error::InvalidParameter("num_actions must be positive".into()));
        }
        if self.constraint_kernels.len() != self.num_constraints
            || self.constraint_confidence.len() != self.num_constraints
        {
            return Err(Error::InvalidParameter(format!(
                "expected {} constraint kernels and confidence parameters",
                self.num_constraints
            )));
        }
        if !(self.beta_scale.is_finite() && self.beta_scale >= 0.0) {
            return Err(Error::InvalidParameter("beta_scale must be non-negative".into()));
        }
        self.reward_kernel.validate()?;
        self.reward_confidence.validate()?;
        for (k, c) in self.constraint_kernels.iter().zip(&self.constraint_confidence) {
            k.validate()?;
            c.validate()?;
        }
        let ctx_dim = match &self.context_mode {
            ContextMode::Ignore => 0,
            ContextMode::Finite { num_contexts } => {
                if *num_contexts == 0 {
                    return Err(Error::InvalidParameter("num_contexts must be positive".into()));
                }
                1
            }
            ContextMode::EpsilonNet { dim, epsilon } => {
                if *dim == 0 {
                    return Err(Error::InvalidParameter("context dimension must be positive".into()));
                }
                let eps = self.epsilon_value(epsilon, *dim)?;
                if !(eps.is_finite() && eps > 0.0) {
                    return Err(Error::InvalidParameter(format!("epsilon must be positive, got {eps}")));
                }
                *dim
            }
        };
        self.reward_kernel.check_dim(self.num_players + ctx_dim)?;
        for k in &self.constraint_kernels {
            k.check_dim(if self.constraint_context { 1 + ctx_dim } else { 1 })?;
        }
        Ok(())
    }

    fn epsilon_value(&self, choice: &EpsilonChoice, dim: usize) -> Result<f64> {
        match choice {
            EpsilonChoice::Fixed(e) => Ok(*e),
            EpsilonChoice::Auto { lipschitz, horizon } => default_epsilon(*lipschitz, dim, *horizon),
        }
    }
}

/// Net radius balancing discretization error against the number of cells.
pub fn default_epsilon(lipschitz: f64, dim: usize, horizon: usize) -> Result<f64> {
    if !(lipschitz.is_finite() && lipschitz > 0.0) || horizon == 0 || dim == 0 {
        return Err(Error::InvalidParameter(
            "default epsilon needs positive lipschitz constant, dimension and horizon".into(),
        ));
    }
    let d = dim as f64;
    Ok(lipschitz.powf(-2.0 / (d + 2.0)) * (horizon as f64).powf(-1.0 / (d + 2.0)))
}

/// True when no action is certified feasible.
pub fn check_infeasibility(mask: &[bool]) -> bool {
    !mask.iter().any(|m| *m)
}

/// Inverse-CDF draw from `p` with a single uniform variate.
pub fn sample_index<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let total: f64 = p.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in p.iter().enumerate() {
        if *w > 0.0 {
            acc += w;
            last = i;
            if target < acc {
                return i;
            }
        }
    }
    last
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ExpertState {
    AdaNormalHedge(SleepingExpertState),
    Hedge(HedgeState),
}

impl ExpertState {
    fn new(rule: ExpertRule, k: usize) -> Self {
        match rule {
            ExpertRule::AdaNormalHedge => ExpertState::AdaNormalHedge(SleepingExpertState::new(k)),
            ExpertRule::Hedge => ExpertState::Hedge(HedgeState::new(k)),
        }
    }

    pub fn predict(&self) -> Vec<f64> {
        match self {
            ExpertState::AdaNormalHedge(s) => s.predict(),
            ExpertState::Hedge(s) => s.predict(),
        }
    }

    /// Cumulative magnitudes `C` of the sleeping-expert state, if any.
    pub fn magnitudes(&self) -> Option<&[f64]> {
        match self {
            ExpertState::AdaNormalHedge(s) => Some(s.magnitudes()),
            ExpertState::Hedge(_) => None,
        }
    }
}

/// Maps contexts to expert states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ContextRouter {
    Single(ExpertState),
    Finite(BTreeMap<usize, ExpertState>),
    EpsilonNet {
        epsilon: f64,
        centers: Vec<Vec<f64>>,
        states: Vec<ExpertState>,
    },
}

impl ContextRouter {
    fn new(mode: &ContextMode, epsilon: Option<f64>, rule: ExpertRule, k: usize) -> Self {
        match mode {
            ContextMode::Ignore => ContextRouter::Single(ExpertState::new(rule, k)),
            ContextMode::Finite { .. } => ContextRouter::Finite(BTreeMap::new()),
            ContextMode::EpsilonNet { .. } => ContextRouter::EpsilonNet {
                epsilon: epsilon.unwrap_or(1.0),
                centers: Vec::new(),
                states: Vec::new(),
            },
        }
    }

    /// Returns the routing key for `z` and whether a new state was created.
    fn route(&mut self, z: &[f64], rule: ExpertRule, k: usize) -> (usize, bool) {
        match self {
            ContextRouter::Single(_) => (0, false),
            ContextRouter::Finite(map) => {
                let id = z[0] as usize;
                let mut created = false;
                map.entry(id).or_insert_with(|| {
                    created = true;
                    ExpertState::new(rule, k)
                });
                (id, created)
            }
            ContextRouter::EpsilonNet {
                epsilon,
                centers,
                states,
            } => {
                let mut best: Option<(usize, f64)> = None;
                for (j, c) in centers.iter().enumerate() {
                    let d: f64 = c.iter().zip(z).map(|(a, b)| (a - b).abs()).sum();
                    if best.is_none_or(|(_, bd)| d < bd) {
                        best = Some((j, d));
                    }
                }
                match best {
                    Some((j, d)) if d <= *epsilon => (j, false),
                    _ => {
                        centers.push(z.to_vec());
                        states.push(ExpertState::new(rule, k));
                        (centers.len() - 1, true)
                    }
                }
            }
        }
    }

    fn state(&self, key: usize) -> &ExpertState {
        match self {
            ContextRouter::Single(s) => s,
            ContextRouter::Finite(map) => &map[&key],
            ContextRouter::EpsilonNet { states, .. } => &states[key],
        }
    }

    fn state_mut(&mut self, key: usize) -> &mut ExpertState {
        match self {
            ContextRouter::Single(s) => s,
            ContextRouter::Finite(map) => map.get_mut(&key).expect("routed key exists"),
            ContextRouter::EpsilonNet { states, .. } => &mut states[key],
        }
    }

    pub fn num_states(&self) -> usize {
        match self {
            ContextRouter::Single(_) => 1,
            ContextRouter::Finite(map) => map.len(),
            ContextRouter::EpsilonNet { states, .. } => states.len(),
        }
    }

    pub fn states(&self) -> Vec<&ExpertState> {
        match self {
            ContextRouter::Single(s) => vec![s],
            ContextRouter::Finite(map) => map.values().collect(),
            ContextRouter::EpsilonNet { states, .. } => states.iter().collect(),
        }
    }

    pub fn centers(&self) -> Option<&[Vec<f64>]> {
        match self {
            ContextRouter::EpsilonNet { centers, .. } => Some(centers),
            _ => None,
        }
    }
}

/// What a player chose in a round, with the distributions behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub action: usize,
    /// Expert prediction before filtering.
    pub p: Vec<f64>,
    /// Distribution actually sampled from.
    pub p_bar: Vec<f64>,
    pub mask: Vec<bool>,
    pub route_key: usize,
    pub new_state: bool,
}

#[derive(Debug, Clone)]
struct Pending {
    selection: Selection,
    context: Vec<f64>,
}

/// A learning player.
#[derive(Debug, Clone)]
pub struct PlayerState {
    config: PlayerConfig,
    reward_gp: Option<GpModel>,
    constraint_gps: Vec<GpModel>,
    router: ContextRouter,
    rng: ChaCha8Rng,
    rounds: usize,
    clamp_events: usize,
    infeasible_at: Option<usize>,
    pending: Option<Pending>,
}

impl PlayerState {
    pub fn new(config: PlayerConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let epsilon = match &config.context_mode {
            ContextMode::EpsilonNet { dim, epsilon } => Some(config.epsilon_value(epsilon, *dim)?),
            _ => None,
        };
        let uses_models = config.algorithm != Algorithm::Random;
        let reward_gp = if uses_models {
            Some(GpModel::new(
                config.reward_kernel.clone(),
                config.reward_confidence.noise_variance(),
            )?)
        } else {
            None
        };
        let constraint_gps = if config.algorithm == Algorithm::Constrained {
            config
                .constraint_kernels
                .iter()
                .zip(&config.constraint_confidence)
                .map(|(k, c)| GpModel::new(k.clone(), c.noise_variance()))
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        let router = ContextRouter::new(&config.context_mode, epsilon, config.expert_rule, config.num_actions);
        Ok(Self {
            config,
            reward_gp,
            constraint_gps,
            router,
            rng: ChaCha8Rng::seed_from_u64(seed),
            rounds: 0,
            clamp_events: 0,
            infeasible_at: None,
            pending: None,
        })
    }

    pub fn config(&self) -> &PlayerConfig {
        &self.config
    }

    pub fn router(&self) -> &ContextRouter {
        &self.router
    }

    pub fn reward_gp(&self) -> Option<&GpModel> {
        self.reward_gp.as_ref()
    }

    pub fn constraint_gps(&self) -> &[GpModel] {
        &self.constraint_gps
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    /// Number of reward-UCB entries clamped up to 0.
    pub fn clamp_events(&self) -> usize {
        self.clamp_events
    }

    pub fn infeasible_at(&self) -> Option<usize> {
        self.infeasible_at
    }

    /// Current reward confidence width.
    pub fn reward_beta(&self) -> f64 {
        let gamma = self.reward_gp.as_ref().map_or(0.0, |g| g.info_gain());
        self.config.beta_scale * beta(&self.config.reward_confidence, gamma)
    }

    /// Current confidence widths of the constraint models.
    pub fn constraint_betas(&self) -> Vec<f64> {
        self.constraint_gps
            .iter()
            .zip(&self.config.constraint_confidence)
            .map(|(g, c)| self.config.beta_scale * beta(c, g.info_gain()))
            .collect()
    }

    /// Validates and encodes a context according to the context mode.
    pub fn encode_context(&self, z: &Context) -> Result<Vec<f64>> {
        match (&self.config.context_mode, z) {
            (ContextMode::Ignore, _) => Ok(Vec::new()),
            (ContextMode::Finite { num_contexts }, Context::Discrete(id)) => {
                if id >= num_contexts {
                    return Err(Error::ContextOutOfRange(format!(
                        "context id {id} with {num_contexts} contexts"
                    )));
                }
                Ok(vec![*id as f64])
            }
            (ContextMode::EpsilonNet { dim, .. }, Context::Continuous(v)) => {
                if v.len() != *dim {
                    return Err(Error::DimensionMismatch {
                        expected: *dim,
                        got: v.len(),
                    });
                }
                if v.iter().any(|x| !(0.0..=1.0).contains(x)) {
                    return Err(Error::ContextOutOfRange(format!("{v:?}")));
                }
                Ok(v.clone())
            }
            (mode, z) => Err(Error::InvalidParameter(format!(
                "context {z} does not match context mode {mode:?}"
            ))),
        }
    }

    fn constraint_input(&self, own: usize, z: &[f64]) -> Vec<f64> {
        let mut x = Vec::with_capacity(1 + z.len());
        x.push(own as f64);
        if self.config.constraint_context {
            x.extend_from_slice(z);
        }
        x
    }

    fn reward_input(joint: &[usize], own_index: usize, own: usize, z: &[f64]) -> Vec<f64> {
        let mut x: Vec<f64> = joint.iter().map(|a| *a as f64).collect();
        x[own_index] = own as f64;
        x.extend_from_slice(z);
        x
    }

    fn mask_for_encoded(&self, z: &[f64]) -> Result<Vec<bool>> {
        let k = self.config.num_actions;
        let mut mask = vec![true; k];
        if self.config.algorithm != Algorithm::Constrained {
            return Ok(mask);
        }
        let xs: Vec<Vec<f64>> = (0..k).map(|a| self.constraint_input(a, z)).collect();
        for (gp, b) in self.constraint_gps.iter().zip(self.constraint_betas()) {
            for (m, (mu, sd)) in mask.iter_mut().zip(gp.posterior_batch(&xs)?) {
                if mu - b * sd > 0.0 {
                    *m = false;
                }
            }
        }
        Ok(mask)
    }

    /// Actions whose constraint lower confidence bounds are all `≤ 0`.
    pub fn feasible_mask(&self, z: &Context) -> Result<Vec<bool>> {
        let enc = self.encode_context(z)?;
        self.mask_for_encoded(&enc)
    }

    /// Chooses an action for context `z`. Declaring infeasibility is
    /// reported as [`Error::InfeasibilityDeclared`] and is terminal.
    pub fn select_action(&mut self, z: &Context) -> Result<Selection> {
        if let Some(round) = self.infeasible_at {
            return Err(Error::InfeasibilityDeclared { round });
        }
        let k = self.config.num_actions;
        if self.config.algorithm == Algorithm::Random {
            let p = vec![1.0 / k as f64; k];
            let action = self.rng.random_range(0..k);
            self.rounds += 1;
            let selection = Selection {
                action,
                p: p.clone(),
                p_bar: p,
                mask: vec![true; k],
                route_key: 0,
                new_state: false,
            };
            self.pending = Some(Pending {
                selection: selection.clone(),
                context: Vec::new(),
            });
            return Ok(selection);
        }
        let enc = self.encode_context(z)?;
        let mask = self.mask_for_encoded(&enc)?;
        self.rounds += 1;
        if check_infeasibility(&mask) {
            self.infeasible_at = Some(self.rounds);
            self.pending = None;
            return Err(Error::InfeasibilityDeclared { round: self.rounds });
        }
        let (key, created) = self.router.route(&enc, self.config.expert_rule, k);
        let p = self.router.state(key).predict();
        let p_bar = renormalize(&p, &mask)?;
        let action = sample_index(&p_bar, &mut self.rng);
        let selection = Selection {
            action,
            p,
            p_bar,
            mask,
            route_key: key,
            new_state: created,
        };
        self.pending = Some(Pending {
            selection: selection.clone(),
            context: enc,
        });
        Ok(selection)
    }

    /// Consumes the pending selection: updates the expert state of the routed
    /// context from reward upper confidence bounds, then appends the new
    /// observations to the models.
    pub fn observe_feedback(&mut self, feedback: &Feedback<'_>) -> Result<()> {
        let pending = self.pending.take().ok_or(Error::NoPendingSelection)?;
        let cfg = &self.config;
        if feedback.joint_action.len() != cfg.num_players {
            return Err(Error::DimensionMismatch {
                expected: cfg.num_players,
                got: feedback.joint_action.len(),
            });
        }
        if feedback.constraints.len() != cfg.num_constraints {
            return Err(Error::DimensionMismatch {
                expected: cfg.num_constraints,
                got: feedback.constraints.len(),
            });
        }
        let own = feedback.joint_action[cfg.player_index];
        if own != pending.selection.action {
            return Err(Error::InvalidParameter(format!(
                "feedback reports own action {own}, selected {}",
                pending.selection.action
            )));
        }
        if !feedback.reward.is_finite() {
            return Err(Error::NonFiniteTarget(feedback.reward));
        }
        if let Some(g) = feedback.constraints.iter().find(|g| !g.is_finite()) {
            return Err(Error::NonFiniteTarget(*g));
        }
        if cfg.algorithm == Algorithm::Random {
            return Ok(());
        }
        let k = cfg.num_actions;
        let z = &pending.context;
        let sel = &pending.selection;

        if !(matches!(cfg.context_mode, ContextMode::EpsilonNet { .. }) && sel.new_state) {
            let b = self.reward_beta();
            let gp = self.reward_gp.as_ref().expect("model-based player has a reward model");
            let xs: Vec<Vec<f64>> = (0..k)
                .map(|a| Self::reward_input(feedback.joint_action, cfg.player_index, a, z))
                .collect();
            let ucb: Vec<f64> = gp
                .posterior_batch(&xs)?
                .into_iter()
                .map(|(mu, sd)| mu + b * sd)
                .collect();
            self.clamp_events += ucb.iter().filter(|u| **u < 0.0).count();
            let state = self.router.state_mut(sel.route_key);
            match state {
                ExpertState::AdaNormalHedge(s) => {
                    let r_hat: Vec<f64> = ucb.iter().map(|u| u.clamp(0.0, 1.0)).collect();
                    s.update(&sel.mask, &r_hat, &sel.p_bar)?;
                }
                ExpertState::Hedge(s) => {
                    let r_hat = sleeping_reward_completion(&ucb, &sel.mask, &sel.p)?;
                    s.update(&r_hat)?;
                }
            }
        }

        let x = Self::reward_input(feedback.joint_action, cfg.player_index, own, z);
        self.reward_gp
            .as_mut()
            .expect("model-based player has a reward model")
            .add_observation(&x, feedback.reward)?;
        let xc = self.constraint_input(own, z);
        for (gp, g) in self.constraint_gps.iter_mut().zip(feedback.constraints) {
            gp.add_observation(&xc, *g)?;
        }
        Ok(())
    }
}

/// Builders for the standard learner families.
pub mod presets {
    use super::*;

    /// Shared shape of a player in an N-player game with product kernels.
    #[derive(Debug, Clone, PartialEq)]
    pub struct PlayerShape {
        pub player_index: usize,
        pub num_players: usize,
        pub num_actions: usize,
        pub num_constraints: usize,
        pub action_kernel: KernelSpec,
        pub context_kernel: KernelSpec,
        pub constraint_kernel: KernelSpec,
        /// Feed the context to the constraint models.
        pub constraint_context: bool,
        pub rkhs_bound: f64,
        pub noise_scale: f64,
        pub failure_prob: f64,
        pub beta_scale: f64,
    }

    fn build(shape: &PlayerShape, algorithm: Algorithm, rule: ExpertRule, mode: ContextMode) -> Result<PlayerConfig> {
        let contextual = !matches!(mode, ContextMode::Ignore);
        let reward_kernel = if contextual {
            KernelSpec::product(shape.action_kernel.clone(), shape.context_kernel.clone(), shape.num_players)
        } else {
            shape.action_kernel.clone()
        };
        let constraint_context = contextual && shape.constraint_context;
        let constraint_kernel = if constraint_context {
            KernelSpec::product(shape.constraint_kernel.clone(), shape.context_kernel.clone(), 1)
        } else {
            shape.constraint_kernel.clone()
        };
        let conf = ConfidenceParams::new(
            shape.rkhs_bound,
            shape.noise_scale,
            shape.failure_prob,
            shape.num_constraints,
        )?;
        let cfg = PlayerConfig {
            player_index: shape.player_index,
            num_players: shape.num_players,
            num_actions: shape.num_actions,
            num_constraints: shape.num_constraints,
            algorithm,
            expert_rule: rule,
            context_mode: mode,
            reward_kernel,
            constraint_kernels: vec![constraint_kernel; shape.num_constraints],
            constraint_context,
            reward_confidence: conf,
            constraint_confidence: vec![conf; shape.num_constraints],
            beta_scale: shape.beta_scale,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Contextual, constraint-aware learner with sleeping experts.
    pub fn cz_ada_normal_gp(shape: &PlayerShape, mode: ContextMode) -> Result<PlayerConfig> {
        build(shape, Algorithm::Constrained, ExpertRule::AdaNormalHedge, mode)
    }

    /// Constraint-aware learner that ignores the context.
    pub fn c_ada_normal_gp(shape: &PlayerShape) -> Result<PlayerConfig> {
        build(shape, Algorithm::Constrained, ExpertRule::AdaNormalHedge, ContextMode::Ignore)
    }

    /// Contextual, constraint-aware learner using Hedge with completed rewards.
    pub fn cz_hedge_gp(shape: &PlayerShape, mode: ContextMode) -> Result<PlayerConfig> {
        build(shape, Algorithm::Constrained, ExpertRule::Hedge, mode)
    }

    /// Unconstrained, non-contextual GP multiplicative weights.
    pub fn gpmw(shape: &PlayerShape) -> Result<PlayerConfig> {
        build(shape, Algorithm::Unconstrained, ExpertRule::Hedge, ContextMode::Ignore)
    }

    /// Unconstrained contextual GP multiplicative weights.
    pub fn z_gpmw(shape: &PlayerShape, mode: ContextMode) -> Result<PlayerConfig> {
        build(shape, Algorithm::Unconstrained, ExpertRule::Hedge, mode)
    }

    pub fn random(shape: &PlayerShape) -> Result<PlayerConfig> {
        build(shape, Algorithm::Random, ExpertRule::Hedge, ContextMode::Ignore)
    }
}
