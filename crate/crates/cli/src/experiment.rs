use std::fs;
use std::path::{Path, PathBuf};

use czgp_core::game::{
    context_schedule, generate_continuous_game, generate_random_game, run, ContextSpace, GameDefinition,
    RunStatus, ScheduleMode, GENERATOR_SCHEME,
};
use czgp_core::metrics::{
    constrained_regret, cce_epsilon, cumulative_violations, expert_potential_constant, high_probability_bounds,
    BoundInputs, CceReport,
};
use czgp_core::strategy::presets::{self, PlayerShape};
use czgp_core::strategy::{ContextMode, EpsilonChoice, PlayerState};
use czgp_core::{ConfidenceParams, Trajectory};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{AlgorithmName, ExperimentConfig, GameBlock, PlayerBlock, ScheduleBlock};
use crate::error::CliError;
use crate::output::{round12, write_json, write_seed_csv};

/// Noise scale assumed by the learners when the game itself is noiseless.
const NOISELESS_MODEL_SCALE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SeedStatus {
    Completed,
    InfeasibilityDeclared { player: usize, round: usize },
    Failed { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerBounds {
    pub regret_bound: f64,
    pub violation_bounds: Vec<f64>,
    pub regret_within: bool,
    pub violations_within: bool,
    pub expert_constant: f64,
    pub reward_info_gain: f64,
    pub constraint_info_gains: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedRun {
    pub game: GameDefinition,
    pub trajectory: Trajectory,
    pub regret: Vec<Vec<f64>>,
    pub violations: Vec<Vec<Vec<f64>>>,
    /// `None` when some player has no feasible action at a realized context.
    pub cce: Option<CceReport>,
    pub bounds: Vec<Option<PlayerBounds>>,
    pub clamp_events: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedOutcome {
    pub seed: u64,
    pub status: SeedStatus,
    pub run: Option<SeedRun>,
}

impl SeedOutcome {
    pub fn failed(&self) -> bool {
        matches!(self.status, SeedStatus::Failed { .. })
    }
}

/// Derives an independent stream seed from a run seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream.wrapping_mul(0xBF58_476D_1CE4_E5B9))
        ^ stream
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let canonical = serde_json::to_string(cfg).expect("config serializes");
    Sha256::digest(canonical.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn load_game(cfg: &ExperimentConfig, seed: u64, base_dir: Option<&Path>) -> Result<GameDefinition, CliError> {
    match &cfg.game {
        GameBlock::Generate(g) => {
            let params = g.params();
            Ok(match g.context_dim {
                Some(dim) => generate_continuous_game(seed, &params, dim)?,
                None => generate_random_game(seed, &params)?,
            })
        }
        GameBlock::File(path) => {
            let path = match base_dir {
                Some(dir) if path.is_relative() => dir.join(path),
                _ => path.clone(),
            };
            let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
            let game: GameDefinition = serde_json::from_str(&text).map_err(|e| CliError::format(&path, e))?;
            game.validate()?;
            Ok(game)
        }
    }
}

fn context_mode(block: &PlayerBlock, game: &GameDefinition, horizon: usize) -> ContextMode {
    if !block.algorithm.is_contextual() {
        return ContextMode::Ignore;
    }
    match game.context_space {
        ContextSpace::Finite { count } => ContextMode::Finite { num_contexts: count },
        ContextSpace::Continuous { dim } => ContextMode::EpsilonNet {
            dim,
            epsilon: match block.epsilon {
                Some(e) => EpsilonChoice::Fixed(e),
                None => EpsilonChoice::Auto {
                    lipschitz: block.lipschitz.unwrap_or(1.0),
                    horizon,
                },
            },
        },
    }
}

pub fn build_players(cfg: &ExperimentConfig, game: &GameDefinition, seed: u64) -> Result<Vec<PlayerState>, CliError> {
    let blocks = cfg.player_blocks(game.num_players);
    if blocks.len() != game.num_players {
        return Err(CliError::config(
            ".players",
            &format!("has {} entries but the game has {} players", blocks.len(), game.num_players),
        ));
    }
    let kernels = cfg.kernel_block();
    blocks
        .iter()
        .enumerate()
        .map(|(i, block)| {
            let noise = cfg.confidence.noise_scale.unwrap_or(game.reward_noise[i]);
            let shape = PlayerShape {
                player_index: i,
                num_players: game.num_players,
                num_actions: game.num_actions[i],
                num_constraints: game.num_constraints,
                action_kernel: kernels.action.clone(),
                context_kernel: kernels.context.clone(),
                constraint_kernel: kernels.constraint.clone(),
                constraint_context: cfg.constraint_context,
                rkhs_bound: cfg.confidence.rkhs_bound,
                noise_scale: if noise > 0.0 { noise } else { NOISELESS_MODEL_SCALE },
                failure_prob: cfg.confidence.failure_prob,
                beta_scale: block.beta_scale.unwrap_or(cfg.confidence.beta_scale),
            };
            let mode = context_mode(block, game, cfg.horizon);
            let player_cfg = match block.algorithm {
                AlgorithmName::CzAdaNormalGp => presets::cz_ada_normal_gp(&shape, mode)?,
                AlgorithmName::CAdaNormalGp => presets::c_ada_normal_gp(&shape)?,
                AlgorithmName::CzHedgeGp => presets::cz_hedge_gp(&shape, mode)?,
                AlgorithmName::Gpmw => presets::gpmw(&shape)?,
                AlgorithmName::ZGpmw => presets::z_gpmw(&shape, mode)?,
                AlgorithmName::Random => presets::random(&shape)?,
            };
            Ok(PlayerState::new(player_cfg, derive_seed(seed, 1 + i as u64))?)
        })
        .collect()
}

fn schedule_mode(cfg: &ExperimentConfig, game: &GameDefinition) -> ScheduleMode {
    match &cfg.context_schedule {
        ScheduleBlock::Uniform => match game.context_space {
            ContextSpace::Finite { count } => ScheduleMode::UniformFinite { count },
            ContextSpace::Continuous { dim } => ScheduleMode::UniformBox { dim },
        },
        ScheduleBlock::Fixed { contexts } => ScheduleMode::FixedSequence {
            contexts: contexts.clone(),
        },
    }
}

fn player_bounds(
    player: &PlayerState,
    game: &GameDefinition,
    rounds: usize,
    regret: f64,
    violations: &[f64],
) -> Result<Option<PlayerBounds>, CliError> {
    let cfg = player.config();
    if cfg.algorithm != czgp_core::Algorithm::Constrained {
        return Ok(None);
    }
    let states = player.router().states();
    let mut expert_constant: Option<f64> = None;
    for s in states {
        let Some(c) = s.magnitudes() else {
            return Ok(None);
        };
        let b = expert_potential_constant(c);
        expert_constant = Some(expert_constant.map_or(b, |x: f64| x.max(b)));
    }
    let num_contexts = match (&cfg.context_mode, game.context_space) {
        (ContextMode::Ignore, _) => 1,
        (_, ContextSpace::Finite { count }) => count,
        _ => player.router().num_states().max(1),
    };
    let reward_gain = player.reward_gp().map_or(0.0, |g| g.info_gain());
    let constraint_gains: Vec<f64> = player.constraint_gps().iter().map(|g| g.info_gain()).collect();
    let constraint_conf: Vec<ConfidenceParams> = cfg.constraint_confidence.clone();
    let b = high_probability_bounds(&BoundInputs {
        num_contexts,
        num_actions: cfg.num_actions,
        horizon: rounds,
        reward_confidence: cfg.reward_confidence,
        constraint_confidence: constraint_conf,
        reward_info_gain: reward_gain,
        constraint_info_gains: constraint_gains.clone(),
        expert_constant: expert_constant.unwrap_or(1.0),
    })?;
    Ok(Some(PlayerBounds {
        regret_within: regret <= b.regret,
        violations_within: violations.iter().zip(&b.violations).all(|(v, bound)| v <= bound),
        regret_bound: b.regret,
        violation_bounds: b.violations,
        expert_constant: expert_constant.unwrap_or(1.0),
        reward_info_gain: reward_gain,
        constraint_info_gains: constraint_gains,
    }))
}

/// Regret is undefined for a player without a feasible comparator at some
/// realized context; such curves are reported empty.
fn undefined_as_empty(r: czgp_core::Result<Vec<f64>>) -> Result<Vec<f64>, CliError> {
    match r {
        Ok(v) => Ok(v),
        Err(czgp_core::Error::NoFeasiblePolicy { .. }) => Ok(Vec::new()),
        Err(e) => Err(e.into()),
    }
}

/// Runs one seed end to end and evaluates it against the true game.
pub fn simulate_seed(cfg: &ExperimentConfig, seed: u64, base_dir: Option<&Path>) -> Result<SeedRun, CliError> {
    let game = load_game(cfg, seed, base_dir)?;
    let mut players = build_players(cfg, &game, seed)?;
    let contexts = context_schedule(&schedule_mode(cfg, &game), derive_seed(seed, 100), cfg.horizon)?;
    let trajectory = run(&game, &mut players, &contexts, cfg.horizon, derive_seed(seed, 200))?;
    let n = game.num_players;
    let mut regret = Vec::with_capacity(n);
    let mut violations = Vec::with_capacity(n);
    let mut bounds = Vec::with_capacity(n);
    for (i, p) in players.iter().enumerate() {
        let r = undefined_as_empty(constrained_regret(&game, &trajectory, i, cfg.regret_convention))?;
        let v = cumulative_violations(&trajectory, i, game.num_constraints);
        let final_v: Vec<f64> = v.iter().map(|c| c.last().copied().unwrap_or(0.0)).collect();
        bounds.push(match r.last() {
            Some(final_r) if cfg.bounds => player_bounds(p, &game, trajectory.len(), *final_r, &final_v)?,
            _ => None,
        });
        regret.push(r);
        violations.push(v);
    }
    let cce = match cce_epsilon(&game, &trajectory) {
        Ok(c) => Some(c),
        Err(czgp_core::Error::NoFeasiblePolicy { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    Ok(SeedRun {
        clamp_events: players.iter().map(|p| p.clamp_events()).collect(),
        game,
        trajectory,
        regret,
        violations,
        cce,
        bounds,
    })
}

pub fn run_seed(cfg: &ExperimentConfig, seed: u64, base_dir: Option<&Path>) -> SeedOutcome {
    match simulate_seed(cfg, seed, base_dir) {
        Ok(run) => SeedOutcome {
            seed,
            status: match run.trajectory.status {
                RunStatus::Completed => SeedStatus::Completed,
                RunStatus::InfeasibilityDeclared { player, round } => {
                    SeedStatus::InfeasibilityDeclared { player, round }
                }
            },
            run: Some(run),
        },
        Err(e) => SeedOutcome {
            seed,
            status: SeedStatus::Failed { message: e.to_string() },
            run: None,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    #[serde(flatten)]
    pub status: SeedStatus,
    pub rounds: usize,
    pub final_regret: Vec<Option<f64>>,
    pub final_violations: Vec<Vec<f64>>,
    pub cce_epsilon: Option<f64>,
    pub reward_gaps: Vec<f64>,
    pub violation_gaps: Vec<Vec<f64>>,
    pub bounds: Vec<Option<PlayerBounds>>,
    pub clamp_events: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    /// Number of seeds contributing at each round.
    pub count: Vec<usize>,
    pub regret_mean: Vec<Vec<f64>>,
    pub regret_std: Vec<Vec<f64>>,
    pub violations_mean: Vec<Vec<Vec<f64>>>,
    pub violations_std: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config_hash: String,
    pub horizon: usize,
    pub seeds: Vec<u64>,
    pub algorithms: Vec<AlgorithmName>,
    pub per_seed: Vec<SeedSummary>,
    pub aggregate: Aggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub config_hash: String,
    pub generator_scheme: String,
    pub seeds: Vec<u64>,
    pub version: String,
}

/// Mean and sample standard deviation of `xs` (zero spread for one value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Number of rounds recorded for one seed.
pub fn seed_rounds(regret: &[Vec<f64>], violations: &[Vec<Vec<f64>>]) -> usize {
    let r = regret.iter().map(Vec::len);
    let v = violations.iter().flatten().map(Vec::len);
    r.chain(v).max().unwrap_or(0)
}

/// Aggregates per-seed curves, `curves[seed][player][t]` and
/// `viol[seed][player][m][t]`, across the seeds that reached each round.
pub fn aggregate(curves: &[&Vec<Vec<f64>>], viol: &[&Vec<Vec<Vec<f64>>>], horizon: usize) -> Aggregate {
    let players = curves.first().map_or(0, |c| c.len());
    let constraints = viol.first().and_then(|v| v.first()).map_or(0, |v| v.len());
    let mut count = vec![0; horizon];
    let mut regret_mean = vec![Vec::with_capacity(horizon); players];
    let mut regret_std = vec![Vec::with_capacity(horizon); players];
    let mut violations_mean = vec![vec![Vec::with_capacity(horizon); constraints]; players];
    let mut violations_std = vec![vec![Vec::with_capacity(horizon); constraints]; players];
    for t in 0..horizon {
        for i in 0..players {
            if i == 0 {
                count[t] = curves.iter().zip(viol).filter(|(c, v)| t < seed_rounds(c, v)).count();
            }
            let xs: Vec<f64> = curves.iter().filter_map(|c| c[i].get(t).copied()).collect();
            let (m, s) = mean_std(&xs);
            regret_mean[i].push(round12(m));
            regret_std[i].push(round12(s));
            for k in 0..constraints {
                let xs: Vec<f64> = viol.iter().filter_map(|v| v[i][k].get(t).copied()).collect();
                let (m, s) = mean_std(&xs);
                violations_mean[i][k].push(round12(m));
                violations_std[i][k].push(round12(s));
            }
        }
    }
    Aggregate {
        count,
        regret_mean,
        regret_std,
        violations_mean,
        violations_std,
    }
}

fn seed_summary(o: &SeedOutcome) -> SeedSummary {
    match &o.run {
        Some(r) => SeedSummary {
            seed: o.seed,
            status: o.status.clone(),
            rounds: r.trajectory.len(),
            final_regret: r.regret.iter().map(|c| c.last().map(|x| round12(*x))).collect(),
            final_violations: r
                .violations
                .iter()
                .map(|p| p.iter().map(|c| round12(c.last().copied().unwrap_or(0.0))).collect())
                .collect(),
            cce_epsilon: r.cce.as_ref().map(|c| round12(c.epsilon)),
            reward_gaps: r
                .cce
                .as_ref()
                .map_or_else(Vec::new, |c| c.reward_gaps.iter().map(|x| round12(*x)).collect()),
            violation_gaps: r.cce.as_ref().map_or_else(Vec::new, |c| {
                c.violation_gaps
                    .iter()
                    .map(|p| p.iter().map(|x| round12(*x)).collect())
                    .collect()
            }),
            bounds: r
                .bounds
                .iter()
                .map(|b| {
                    b.as_ref().map(|b| PlayerBounds {
                        regret_bound: round12(b.regret_bound),
                        violation_bounds: b.violation_bounds.iter().map(|x| round12(*x)).collect(),
                        expert_constant: round12(b.expert_constant),
                        reward_info_gain: round12(b.reward_info_gain),
                        constraint_info_gains: b.constraint_info_gains.iter().map(|x| round12(*x)).collect(),
                        ..b.clone()
                    })
                })
                .collect(),
            clamp_events: r.clamp_events.clone(),
        },
        None => SeedSummary {
            seed: o.seed,
            status: o.status.clone(),
            rounds: 0,
            final_regret: vec![],
            final_violations: vec![],
            cce_epsilon: None,
            reward_gaps: vec![],
            violation_gaps: vec![],
            bounds: vec![],
            clamp_events: vec![],
        },
    }
}

pub fn summarize(cfg: &ExperimentConfig, outcomes: &[SeedOutcome]) -> Summary {
    let runs: Vec<&SeedRun> = outcomes.iter().filter_map(|o| o.run.as_ref()).collect();
    let num_players = runs.first().map_or(0, |r| r.game.num_players);
    let curves: Vec<&Vec<Vec<f64>>> = runs.iter().map(|r| &r.regret).collect();
    let viol: Vec<&Vec<Vec<Vec<f64>>>> = runs.iter().map(|r| &r.violations).collect();
    Summary {
        config_hash: config_hash(cfg),
        horizon: cfg.horizon,
        seeds: outcomes.iter().map(|o| o.seed).collect(),
        algorithms: cfg.player_blocks(num_players).iter().map(|b| b.algorithm).collect(),
        per_seed: outcomes.iter().map(seed_summary).collect(),
        aggregate: aggregate(&curves, &viol, cfg.horizon),
    }
}

#[derive(Debug)]
pub struct ExperimentResult {
    pub outcomes: Vec<SeedOutcome>,
    pub summary: Summary,
    pub out_dir: Option<PathBuf>,
}

impl ExperimentResult {
    pub fn any_failed(&self) -> bool {
        self.outcomes.iter().any(|o| o.failed())
    }
}

/// Runs every seed (concurrently up to `cfg.parallel`) and, when `out_dir`
/// is given, writes `seed_<s>.csv`, `summary.json` and `metadata.json`.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    out_dir: Option<&Path>,
    base_dir: Option<&Path>,
) -> Result<ExperimentResult, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallel)
        .build()
        .map_err(|e| CliError::config(".parallel", &e.to_string()))?;
    let outcomes: Vec<SeedOutcome> =
        pool.install(|| cfg.seeds.par_iter().map(|s| run_seed(cfg, *s, base_dir)).collect());
    let summary = summarize(cfg, &outcomes);
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        for o in &outcomes {
            if let Some(r) = &o.run {
                write_seed_csv(&dir.join(format!("seed_{}.csv", o.seed)), r)?;
            }
        }
        write_json(&dir.join("summary.json"), &summary)?;
        let scheme = outcomes
            .iter()
            .find_map(|o| o.run.as_ref().and_then(|r| r.game.metadata.generator.clone()))
            .unwrap_or_else(|| GENERATOR_SCHEME.to_string());
        write_json(
            &dir.join("metadata.json"),
            &Metadata {
                config_hash: summary.config_hash.clone(),
                generator_scheme: scheme,
                seeds: cfg.seeds.clone(),
                version: env!("CARGO_PKG_VERSION").to_string(),
            },
        )?;
    }
    Ok(ExperimentResult {
        outcomes,
        summary,
        out_dir: out_dir.map(Path::to_path_buf),
    })
}
