//! Ground-truth games, the random game generator, context schedules and the
//! round-by-round simulation engine.

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::GpModel;
use crate::kernels::KernelSpec;
use crate::strategy::PlayerState;

/// Version stamp of the random-game construction, written into game metadata.
pub const GENERATOR_SCHEME: &str = "gp-union-conditioning/v1";

/// A revealed context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Context {
    Discrete(usize),
    Continuous(Vec<f64>),
}

impl Context {
    /// Real-valued encoding used as kernel input.
    pub fn encode(&self) -> Vec<f64> {
        match self {
            Context::Discrete(z) => vec![*z as f64],
            Context::Continuous(v) => v.clone(),
        }
    }

    pub fn key(&self) -> ContextKey {
        match self {
            Context::Discrete(z) => ContextKey::Discrete(*z),
            Context::Continuous(v) => ContextKey::Continuous(v.iter().map(|x| x.to_bits()).collect()),
        }
    }
}

impl std::fmt::Display for Context {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Context::Discrete(z) => write!(f, "{z}"),
            Context::Continuous(v) => {
                let parts: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
                write!(f, "{}", parts.join(";"))
            }
        }
    }
}

/// Exact-equality key for grouping rounds by realized context.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ContextKey {
    Discrete(usize),
    Continuous(Vec<u64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextSpace {
    Finite { count: usize },
    Continuous { dim: usize },
}

/// A real function over `(coordinates, context)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payoff {
    /// Row-major table: `values[index * num_contexts + z]`. A table with
    /// `num_contexts == 1` ignores the context.
    Table { num_contexts: usize, values: Vec<f64> },
    /// `offset + scale * Σ_j weights[j] k(centers[j], [coords, context])`,
    /// optionally clamped to `[0, 1]`.
    KernelExpansion {
        kernel: KernelSpec,
        centers: Vec<Vec<f64>>,
        weights: Vec<f64>,
        offset: f64,
        scale: f64,
        clamp_unit: bool,
    },
}

impl Payoff {
    fn eval(&self, index: usize, coords: &[f64], context: &Context) -> Result<f64> {
        match self {
            Payoff::Table {
                num_contexts,
                values,
            } => {
                let col = if *num_contexts == 1 {
                    0
                } else {
                    match context {
                        Context::Discrete(z) if z < num_contexts => *z,
                        other => {
                            return Err(Error::InvalidGame(format!(
                                "table with {num_contexts} contexts queried at context {other}"
                            )))
                        }
                    }
                };
                values
                    .get(index * num_contexts + col)
                    .copied()
                    .ok_or_else(|| Error::InvalidGame(format!("table index {index} out of range")))
            }
            Payoff::KernelExpansion {
                kernel,
                centers,
                weights,
                offset,
                scale,
                clamp_unit,
            } => {
                let mut x = coords.to_vec();
                x.extend(context.encode());
                let mut acc = 0.0;
                for (c, w) in centers.iter().zip(weights) {
                    acc += w * kernel.evaluate(c, &x)?;
                }
                let v = offset + scale * acc;
                Ok(if *clamp_unit { v.clamp(0.0, 1.0) } else { v })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GameMetadata {
    pub generator: Option<String>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameDefinition {
    pub num_players: usize,
    pub num_actions: Vec<usize>,
    pub num_constraints: usize,
    pub context_space: ContextSpace,
    /// One reward function per player over (joint action, context).
    pub rewards: Vec<Payoff>,
    /// `constraints[i][m]` over (own action, context).
    pub constraints: Vec<Vec<Payoff>>,
    pub reward_noise: Vec<f64>,
    pub constraint_noise: Vec<Vec<f64>>,
    #[serde(default)]
    pub metadata: GameMetadata,
}

impl GameDefinition {
    pub fn joint_space_size(&self) -> usize {
        self.num_actions.iter().product()
    }

    /// Mixed-radix index of a joint action, first player most significant.
    pub fn joint_index(&self, joint: &[usize]) -> usize {
        joint
            .iter()
            .zip(&self.num_actions)
            .fold(0, |acc, (a, k)| acc * k + a)
    }

    pub fn joint_from_index(&self, mut index: usize) -> Vec<usize> {
        let mut joint = vec![0; self.num_players];
        for i in (0..self.num_players).rev() {
            joint[i] = index % self.num_actions[i];
            index /= self.num_actions[i];
        }
        joint
    }

    fn check_joint(&self, joint: &[usize]) -> Result<()> {
        if joint.len() != self.num_players {
            return Err(Error::DimensionMismatch {
                expected: self.num_players,
                got: joint.len(),
            });
        }
        for (a, k) in joint.iter().zip(&self.num_actions) {
            if a >= k {
                return Err(Error::InvalidGame(format!("action {a} out of range {k}")));
            }
        }
        Ok(())
    }

    pub fn reward(&self, player: usize, joint: &[usize], context: &Context) -> Result<f64> {
        self.check_joint(joint)?;
        let coords: Vec<f64> = joint.iter().map(|a| *a as f64).collect();
        self.rewards[player].eval(self.joint_index(joint), &coords, context)
    }

    pub fn constraint(&self, player: usize, m: usize, own: usize, context: &Context) -> Result<f64> {
        if own >= self.num_actions[player] {
            return Err(Error::InvalidGame(format!("action {own} out of range")));
        }
        self.constraints[player][m].eval(own, &[own as f64], context)
    }

    pub fn constraints_of(&self, player: usize, own: usize, context: &Context) -> Result<Vec<f64>> {
        (0..self.num_constraints)
            .map(|m| self.constraint(player, m, own, context))
            .collect()
    }

    pub fn is_feasible(&self, player: usize, own: usize, context: &Context) -> Result<bool> {
        Ok(self
            .constraints_of(player, own, context)?
            .iter()
            .all(|g| *g <= 0.0))
    }

    pub fn check_context(&self, context: &Context) -> Result<()> {
        match (self.context_space, context) {
            (ContextSpace::Finite { count }, Context::Discrete(z)) if *z < count => Ok(()),
            (ContextSpace::Continuous { dim }, Context::Continuous(v)) if v.len() == dim => Ok(()),
            _ => Err(Error::InvalidGame(format!(
                "context {context} does not belong to {:?}",
                self.context_space
            ))),
        }
    }

    /// Checks shapes, noise scales and the range of tabulated rewards.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_players;
        if n == 0 {
            return Err(Error::InvalidGame("no players".into()));
        }
        if self.num_actions.len() != n
            || self.rewards.len() != n
            || self.constraints.len() != n
            || self.reward_noise.len() != n
            || self.constraint_noise.len() != n
        {
            return Err(Error::InvalidGame("per-player vectors must have length num_players".into()));
        }
        if self.num_actions.contains(&0) {
            return Err(Error::InvalidGame("every player needs at least one action".into()));
        }
        let z_count = match self.context_space {
            ContextSpace::Finite { count } if count > 0 => Some(count),
            ContextSpace::Continuous { dim } if dim > 0 => None,
            _ => return Err(Error::InvalidGame("empty context space".into())),
        };
        let joint = self.joint_space_size();
        for i in 0..n {
            if self.constraints[i].len() != self.num_constraints
                || self.constraint_noise[i].len() != self.num_constraints
            {
                return Err(Error::InvalidGame(format!(
                    "player {i} must have {} constraints",
                    self.num_constraints
                )));
            }
            let noises = std::iter::once(&self.reward_noise[i]).chain(&self.constraint_noise[i]);
            for s in noises {
                if !(s.is_finite() && *s >= 0.0) {
                    return Err(Error::InvalidGame(format!("noise scale {s} must be non-negative")));
                }
            }
            check_payoff_shape(&self.rewards[i], joint, z_count, n)?;
            if let Payoff::Table { values, .. } = &self.rewards[i] {
                if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                    return Err(Error::InvalidGame(format!(
                        "player {i} reward {v} outside [0, 1]"
                    )));
                }
            }
            for g in &self.constraints[i] {
                check_payoff_shape(g, self.num_actions[i], z_count, 1)?;
            }
        }
        Ok(())
    }

    /// For finite context spaces, checks that every player has at least one
    /// feasible action in every context. Continuous spaces are not checked.
    pub fn check_feasible(&self) -> Result<()> {
        let ContextSpace::Finite { count } = self.context_space else {
            return Ok(());
        };
        for i in 0..self.num_players {
            for z in 0..count {
                let ctx = Context::Discrete(z);
                let mut any = false;
                for a in 0..self.num_actions[i] {
                    any |= self.is_feasible(i, a, &ctx)?;
                }
                if !any {
                    return Err(Error::InvalidGame(format!(
                        "player {i} has no feasible action in context {z}"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn check_payoff_shape(p: &Payoff, entries: usize, z_count: Option<usize>, coord_dim: usize) -> Result<()> {
    match p {
        Payoff::Table {
            num_contexts,
            values,
        } => {
            if *num_contexts == 0 {
                return Err(Error::InvalidGame("table with zero contexts".into()));
            }
            if *num_contexts != 1 && Some(*num_contexts) != z_count {
                return Err(Error::InvalidGame(format!(
                    "table has {num_contexts} contexts, game has {z_count:?}"
                )));
            }
            if values.len() != entries * num_contexts {
                return Err(Error::InvalidGame(format!(
                    "table has {} values, expected {}",
                    values.len(),
                    entries * num_contexts
                )));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidGame("non-finite table value".into()));
            }
            Ok(())
        }
        Payoff::KernelExpansion {
            kernel,
            centers,
            weights,
            ..
        } => {
            kernel.validate()?;
            if centers.len() != weights.len() {
                return Err(Error::InvalidGame("centers and weights differ in length".into()));
            }
            if let Some(c) = centers.first() {
                if c.len() <= coord_dim.saturating_sub(1) {
                    return Err(Error::InvalidGame("expansion centers too short".into()));
                }
            }
            Ok(())
        }
    }
}

/// Parameters of the random N-player game generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorParams {
    pub num_players: usize,
    pub num_actions: usize,
    pub num_contexts: usize,
    pub num_constraints: usize,
    pub action_lengthscale: f64,
    pub context_lengthscale: f64,
    pub constraint_lengthscale: f64,
    pub num_gp_samples: usize,
    pub points_per_sample: usize,
    pub conditioning_noise: f64,
    pub noise: f64,
    /// Quantile of the rescaled constraint values shifted to zero.
    pub feasible_quantile: f64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            num_players: 3,
            num_actions: 7,
            num_contexts: 5,
            num_constraints: 1,
            action_lengthscale: 2.0,
            context_lengthscale: 0.5,
            constraint_lengthscale: 0.5,
            num_gp_samples: 10,
            points_per_sample: 10,
            conditioning_noise: 1e-6,
            noise: 1.0,
            feasible_quantile: 0.25,
        }
    }
}

impl GeneratorParams {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("num_players", self.num_players),
            ("num_actions", self.num_actions),
            ("num_contexts", self.num_contexts),
            ("num_gp_samples", self.num_gp_samples),
            ("points_per_sample", self.points_per_sample),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::InvalidParameter(format!("{name} must be positive")));
            }
        }
        let reals = [
            ("action_lengthscale", self.action_lengthscale),
            ("context_lengthscale", self.context_lengthscale),
            ("constraint_lengthscale", self.constraint_lengthscale),
            ("conditioning_noise", self.conditioning_noise),
        ];
        for (name, v) in reals {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return Err(Error::InvalidParameter("noise must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.feasible_quantile) {
            return Err(Error::InvalidParameter("feasible_quantile must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Product kernel over (N action coordinates, context) for rewards.
    pub fn reward_kernel(&self) -> KernelSpec {
        KernelSpec::product(
            KernelSpec::squared_exponential(self.action_lengthscale),
            KernelSpec::squared_exponential(self.context_lengthscale),
            self.num_players,
        )
    }

    pub fn constraint_kernel(&self) -> KernelSpec {
        KernelSpec::squared_exponential(self.constraint_lengthscale)
    }
}

/// Draws a smooth random function on `grid`: `num_gp_samples` prior samples
/// are each observed at `points_per_sample` distinct grid points, and a
/// zero-mean GP conditioned on the union of those observations is evaluated
/// on the whole grid.
fn sample_grid_function(
    kernel: &KernelSpec,
    grid: &[Vec<f64>],
    params: &GeneratorParams,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    let per_sample = params.points_per_sample.min(grid.len());
    let mut model = GpModel::new(kernel.clone(), params.conditioning_noise)?;
    for _ in 0..params.num_gp_samples {
        let mut idx = sample_indices(rng, grid.len(), per_sample).into_vec();
        idx.sort_unstable();
        let pts: Vec<Vec<f64>> = idx.iter().map(|i| grid[*i].clone()).collect();
        let values = draw_prior_sample(kernel, &pts, rng)?;
        for (p, v) in pts.iter().zip(values) {
            model.add_observation(p, v)?;
        }
    }
    Ok(model
        .posterior_batch(grid)?
        .into_iter()
        .map(|(m, _)| m)
        .collect())
}

/// Joint sample of the zero-mean prior at `pts` via a dense Cholesky factor.
fn draw_prior_sample(kernel: &KernelSpec, pts: &[Vec<f64>], rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let n = pts.len();
    let g = crate::kernels::gram(kernel, pts)?;
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut acc = g[i][j];
            if i == j {
                acc += 1e-9;
            }
            for k in 0..j {
                acc -= l[i][k] * l[j][k];
            }
            if i == j {
                l[i][i] = acc.max(0.0).sqrt();
            } else {
                l[i][j] = if l[j][j] > 0.0 { acc / l[j][j] } else { 0.0 };
            }
        }
    }
    let e: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    Ok((0..n)
        .map(|i| (0..=i).map(|k| l[i][k] * e[k]).sum())
        .collect())
}

fn min_max_rescale(values: &mut [f64]) -> Result<()> {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    if !(span > 1e-12) {
        return Err(Error::InvalidGame("degenerate grid: generated function is constant".into()));
    }
    for v in values.iter_mut() {
        *v = ((*v - lo) / span).clamp(0.0, 1.0);
    }
    Ok(())
}

/// Linear-interpolation quantile of `values`.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Random finite-context game: GP-sampled reward tables rescaled to `[0, 1]`
/// and context-free constraint tables shifted so a quantile of the actions
/// is feasible. Deterministic in `seed`.
pub fn generate_random_game(seed: u64, params: &GeneratorParams) -> Result<GameDefinition> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = params.num_players;
    let k = params.num_actions;
    let zc = params.num_contexts;
    let joint = k.pow(n as u32);

    let mut reward_grid = Vec::with_capacity(joint * zc);
    for j in 0..joint {
        let mut coords = vec![0.0; n];
        let mut rem = j;
        for c in coords.iter_mut().rev() {
            *c = (rem % k) as f64;
            rem /= k;
        }
        for z in 0..zc {
            let mut p = coords.clone();
            p.push(z as f64);
            reward_grid.push(p);
        }
    }
    let action_grid: Vec<Vec<f64>> = (0..k).map(|a| vec![a as f64]).collect();

    let mut rewards = Vec::with_capacity(n);
    let mut constraints = Vec::with_capacity(n);
    for _ in 0..n {
        let mut table = sample_grid_function(&params.reward_kernel(), &reward_grid, params, &mut rng)?;
        min_max_rescale(&mut table)?;
        rewards.push(Payoff::Table {
            num_contexts: zc,
            values: table,
        });
        let mut per_player = Vec::with_capacity(params.num_constraints);
        for _ in 0..params.num_constraints {
            let mut g = sample_grid_function(&params.constraint_kernel(), &action_grid, params, &mut rng)?;
            min_max_rescale(&mut g)?;
            let shift = quantile(&g, params.feasible_quantile);
            for v in g.iter_mut() {
                *v -= shift;
            }
            // The minimum sits at or below the shifted quantile, so at least
            // one action is feasible; re-shift defensively against rounding.
            let min = g.iter().cloned().fold(f64::INFINITY, f64::min);
            if min > 0.0 {
                for v in g.iter_mut() {
                    *v -= min;
                }
            }
            per_player.push(Payoff::Table {
                num_contexts: 1,
                values: g,
            });
        }
        constraints.push(per_player);
    }
    let game = GameDefinition {
        num_players: n,
        num_actions: vec![k; n],
        num_constraints: params.num_constraints,
        context_space: ContextSpace::Finite { count: zc },
        rewards,
        constraints,
        reward_noise: vec![params.noise; n],
        constraint_noise: vec![vec![params.noise; params.num_constraints]; n],
        metadata: GameMetadata {
            generator: Some(GENERATOR_SCHEME.to_string()),
            seed: Some(seed),
        },
    };
    game.validate()?;
    game.check_feasible()?;
    Ok(game)
}

/// Random game over the continuous context box `[0, 1]^dim`. Rewards are
/// kernel expansions clamped to `[0, 1]`; constraints are context-free tables
/// built exactly as in [`generate_random_game`].
pub fn generate_continuous_game(seed: u64, params: &GeneratorParams, dim: usize) -> Result<GameDefinition> {
    params.validate()?;
    if dim == 0 {
        return Err(Error::InvalidParameter("context dimension must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = params.num_players;
    let k = params.num_actions;
    let kernel = params.reward_kernel();
    let action_grid: Vec<Vec<f64>> = (0..k).map(|a| vec![a as f64]).collect();
    let mut rewards = Vec::with_capacity(n);
    let mut constraints = Vec::with_capacity(n);
    for _ in 0..n {
        let mut model = GpModel::new(kernel.clone(), params.conditioning_noise.max(1e-4))?;
        for _ in 0..params.num_gp_samples {
            let pts: Vec<Vec<f64>> = (0..params.points_per_sample)
                .map(|_| {
                    let mut p: Vec<f64> = (0..n).map(|_| rng.random_range(0..k) as f64).collect();
                    p.extend((0..dim).map(|_| rng.random::<f64>()));
                    p
                })
                .collect();
            let values = draw_prior_sample(&kernel, &pts, &mut rng)?;
            for (p, v) in pts.iter().zip(values) {
                model.add_observation(p, v)?;
            }
        }
        let weights = model.alpha();
        let centers = model.inputs().to_vec();
        let probes: Vec<Vec<f64>> = (0..512)
            .map(|_| {
                let mut p: Vec<f64> = (0..n).map(|_| rng.random_range(0..k) as f64).collect();
                p.extend((0..dim).map(|_| rng.random::<f64>()));
                p
            })
            .collect();
        let means: Vec<f64> = model.posterior_batch(&probes)?.into_iter().map(|(m, _)| m).collect();
        let lo = means.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(hi - lo > 1e-12) {
            return Err(Error::InvalidGame("degenerate generated reward".into()));
        }
        rewards.push(Payoff::KernelExpansion {
            kernel: kernel.clone(),
            centers,
            weights,
            offset: -lo / (hi - lo),
            scale: 1.0 / (hi - lo),
            clamp_unit: true,
        });
        let mut per_player = Vec::new();
        for _ in 0..params.num_constraints {
            let mut g = sample_grid_function(&params.constraint_kernel(), &action_grid, params, &mut rng)?;
            min_max_rescale(&mut g)?;
            let shift = quantile(&g, params.feasible_quantile);
            g.iter_mut().for_each(|v| *v -= shift);
            per_player.push(Payoff::Table {
                num_contexts: 1,
                values: g,
            });
        }
        constraints.push(per_player);
    }
    let game = GameDefinition {
        num_players: n,
        num_actions: vec![k; n],
        num_constraints: params.num_constraints,
        context_space: ContextSpace::Continuous { dim },
        rewards,
        constraints,
        reward_noise: vec![params.noise; n],
        constraint_noise: vec![vec![params.noise; params.num_constraints]; n],
        metadata: GameMetadata {
            generator: Some(format!("{GENERATOR_SCHEME}+continuous")),
            seed: Some(seed),
        },
    };
    game.validate()?;
    game.check_feasible()?;
    Ok(game)
}

/// How contexts are revealed over the rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleMode {
    /// Context ids drawn uniformly from `0..count`.
    UniformFinite { count: usize },
    /// Contexts drawn uniformly from `[0, 1]^dim`.
    UniformBox { dim: usize },
    /// Replays the given list; it must cover every round.
    FixedSequence { contexts: Vec<Context> },
}

pub fn context_schedule(mode: &ScheduleMode, seed: u64, rounds: usize) -> Result<Vec<Context>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match mode {
        ScheduleMode::UniformFinite { count } => {
            if *count == 0 {
                return Err(Error::Schedule("finite context count must be positive".into()));
            }
            Ok((0..rounds)
                .map(|_| Context::Discrete(rng.random_range(0..*count)))
                .collect())
        }
        ScheduleMode::UniformBox { dim } => {
            if *dim == 0 {
                return Err(Error::Schedule("context dimension must be positive".into()));
            }
            Ok((0..rounds)
                .map(|_| Context::Continuous((0..*dim).map(|_| rng.random::<f64>()).collect()))
                .collect())
        }
        ScheduleMode::FixedSequence { contexts } => {
            if contexts.is_empty() {
                return Err(Error::Schedule("fixed sequence is empty".into()));
            }
            if contexts.len() < rounds {
                return Err(Error::Schedule(format!(
                    "fixed sequence has {} contexts but {rounds} rounds were requested",
                    contexts.len()
                )));
            }
            Ok(contexts[..rounds].to_vec())
        }
    }
}

/// The feedback tuple a player receives after a round. It carries no
/// ground-truth values and nothing about other players' payoffs.
#[derive(Debug, Clone, PartialEq)]
pub struct Feedback<'a> {
    pub joint_action: &'a [usize],
    pub reward: f64,
    pub constraints: &'a [f64],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub context: Context,
    pub joint_action: Vec<usize>,
    pub noisy_rewards: Vec<f64>,
    pub noisy_constraints: Vec<Vec<f64>>,
    pub true_rewards: Vec<f64>,
    pub true_constraints: Vec<Vec<f64>>,
    pub reward_noise: Vec<f64>,
    pub constraint_noise: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    InfeasibilityDeclared { player: usize, round: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub records: Vec<RoundRecord>,
    pub status: RunStatus,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Plays `rounds` rounds of `game`. Each player sees the context, picks an
/// action, and then receives only its own noisy reward, its own noisy
/// constraint values and the joint action.
pub fn run(
    game: &GameDefinition,
    players: &mut [PlayerState],
    contexts: &[Context],
    rounds: usize,
    seed: u64,
) -> Result<Trajectory> {
    if players.len() != game.num_players {
        return Err(Error::DimensionMismatch {
            expected: game.num_players,
            got: players.len(),
        });
    }
    for (i, p) in players.iter().enumerate() {
        let cfg = p.config();
        if cfg.num_actions != game.num_actions[i] || cfg.num_constraints != game.num_constraints {
            return Err(Error::InvalidGame(format!(
                "player {i} configured for {} actions / {} constraints, game has {} / {}",
                cfg.num_actions, cfg.num_constraints, game.num_actions[i], game.num_constraints
            )));
        }
    }
    if contexts.len() < rounds {
        return Err(Error::Schedule(format!(
            "{} contexts for {rounds} rounds",
            contexts.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = game.num_players;
    let mut records = Vec::with_capacity(rounds);
    for (t, context) in contexts.iter().take(rounds).enumerate() {
        let round = t + 1;
        game.check_context(context)?;
        let mut joint = Vec::with_capacity(n);
        for (i, p) in players.iter_mut().enumerate() {
            match p.select_action(context) {
                Ok(sel) => joint.push(sel.action),
                Err(Error::InfeasibilityDeclared { .. }) => {
                    return Ok(Trajectory {
                        records,
                        status: RunStatus::InfeasibilityDeclared { player: i, round },
                    })
                }
                Err(e) => return Err(e),
            }
        }
        let mut record = RoundRecord {
            round,
            context: context.clone(),
            joint_action: joint.clone(),
            noisy_rewards: Vec::with_capacity(n),
            noisy_constraints: Vec::with_capacity(n),
            true_rewards: Vec::with_capacity(n),
            true_constraints: Vec::with_capacity(n),
            reward_noise: Vec::with_capacity(n),
            constraint_noise: Vec::with_capacity(n),
        };
        for i in 0..n {
            let r = game.reward(i, &joint, context)?;
            let eps: f64 = game.reward_noise[i] * rng.sample::<f64, _>(StandardNormal);
            let g = game.constraints_of(i, joint[i], context)?;
            let g_eps: Vec<f64> = game.constraint_noise[i]
                .iter()
                .map(|s| s * rng.sample::<f64, _>(StandardNormal))
                .collect();
            record.noisy_rewards.push(r + eps);
            record
                .noisy_constraints
                .push(g.iter().zip(&g_eps).map(|(a, b)| a + b).collect());
            record.true_rewards.push(r);
            record.true_constraints.push(g);
            record.reward_noise.push(eps);
            record.constraint_noise.push(g_eps);
        }
        for (i, p) in players.iter_mut().enumerate() {
            p.observe_feedback(&Feedback {
                joint_action: &record.joint_action,
                reward: record.noisy_rewards[i],
                constraints: &record.noisy_constraints[i],
            })?;
        }
        records.push(record);
    }
    Ok(Trajectory {
        records,
        status: RunStatus::Completed,
    })
}
