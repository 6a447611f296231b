//! Post-hoc evaluation of a trajectory against the ground-truth game.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Context, ContextKey, GameDefinition, Trajectory};
use crate::gp::{beta, ConfidenceParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegretConvention {
    /// Comparator fixed at the best feasible policy over all rounds.
    #[default]
    FixedHorizon,
    /// Comparator re-optimized over the rounds seen so far.
    Anytime,
}

/// Per-context sums `S[z][a] = Σ_{t: zᵗ = z} r_i(a, a₋ᵢᵗ, zᵗ)` and the
/// feasible-action sets, built in round order.
struct CounterfactualSums {
    order: Vec<ContextKey>,
    contexts: BTreeMap<ContextKey, (Context, Vec<bool>, Vec<f64>)>,
}

fn feasible_actions(game: &GameDefinition, player: usize, z: &Context) -> Result<Vec<bool>> {
    (0..game.num_actions[player])
        .map(|a| game.is_feasible(player, a, z))
        .collect()
}

fn counterfactual_rewards(
    game: &GameDefinition,
    player: usize,
    joint: &[usize],
    z: &Context,
) -> Result<Vec<f64>> {
    let mut dev = joint.to_vec();
    (0..game.num_actions[player])
        .map(|a| {
            dev[player] = a;
            game.reward(player, &dev, z)
        })
        .collect()
}

fn best_in(feasible: &[bool], sums: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (a, (&ok, &s)) in feasible.iter().zip(sums).enumerate() {
        if ok && best.is_none_or(|(_, b)| s > b) {
            best = Some((a, s));
        }
    }
    best
}

/// Best feasible action per realized context, using true rewards against the
/// realized opponents and true constraints. Ties go to the lowest action.
pub fn best_feasible_policy(
    game: &GameDefinition,
    trajectory: &Trajectory,
    player: usize,
) -> Result<Vec<(Context, usize)>> {
    let sums = build_sums(game, trajectory, player, trajectory.len())?;
    sums.order
        .iter()
        .map(|key| {
            let (z, feasible, s) = &sums.contexts[key];
            let (a, _) = best_in(feasible, s).ok_or(Error::NoFeasiblePolicy { player })?;
            Ok((z.clone(), a))
        })
        .collect()
}

fn build_sums(game: &GameDefinition, trajectory: &Trajectory, player: usize, upto: usize) -> Result<CounterfactualSums> {
    let mut out = CounterfactualSums {
        order: Vec::new(),
        contexts: BTreeMap::new(),
    };
    for rec in trajectory.records.iter().take(upto) {
        let key = rec.context.key();
        if !out.contexts.contains_key(&key) {
            let feasible = feasible_actions(game, player, &rec.context)?;
            out.order.push(key.clone());
            out.contexts.insert(
                key.clone(),
                (rec.context.clone(), feasible, vec![0.0; game.num_actions[player]]),
            );
        }
        let r = counterfactual_rewards(game, player, &rec.joint_action, &rec.context)?;
        let entry = out.contexts.get_mut(&key).expect("inserted above");
        for (s, v) in entry.2.iter_mut().zip(r) {
            *s += v;
        }
    }
    Ok(out)
}

/// Cumulative constrained contextual regret `R_i^t` for `t = 1..T`.
pub fn constrained_regret(
    game: &GameDefinition,
    trajectory: &Trajectory,
    player: usize,
    convention: RegretConvention,
) -> Result<Vec<f64>> {
    let mut curve = Vec::with_capacity(trajectory.len());
    match convention {
        RegretConvention::FixedHorizon => {
            let policy: BTreeMap<ContextKey, usize> = best_feasible_policy(game, trajectory, player)?
                .into_iter()
                .map(|(z, a)| (z.key(), a))
                .collect();
            let mut acc = 0.0;
            let mut dev = Vec::new();
            for rec in &trajectory.records {
                dev.clone_from(&rec.joint_action);
                dev[player] = policy[&rec.context.key()];
                acc += game.reward(player, &dev, &rec.context)? - rec.true_rewards[player];
                curve.push(acc);
            }
        }
        RegretConvention::Anytime => {
            let mut sums: BTreeMap<ContextKey, (Vec<bool>, Vec<f64>, f64)> = BTreeMap::new();
            let mut total_best = 0.0;
            let mut played = 0.0;
            for rec in &trajectory.records {
                let key = rec.context.key();
                if !sums.contains_key(&key) {
                    let feasible = feasible_actions(game, player, &rec.context)?;
                    if !feasible.iter().any(|f| *f) {
                        return Err(Error::NoFeasiblePolicy { player });
                    }
                    sums.insert(key.clone(), (feasible, vec![0.0; game.num_actions[player]], 0.0));
                }
                let r = counterfactual_rewards(game, player, &rec.joint_action, &rec.context)?;
                let entry = sums.get_mut(&key).expect("inserted above");
                for (s, v) in entry.1.iter_mut().zip(&r) {
                    *s += v;
                }
                let (_, best) = best_in(&entry.0, &entry.1).expect("feasible set checked");
                total_best += best - entry.2;
                entry.2 = best;
                played += rec.true_rewards[player];
                curve.push(total_best - played);
            }
        }
    }
    Ok(curve)
}

/// `V_{i,m}^t = Σ_{τ ≤ t} [g_{i,m}(a_iᵗ, zᵗ)]₊` from the true constraint
/// values, indexed `[m][t]`.
pub fn cumulative_violations(trajectory: &Trajectory, player: usize, num_constraints: usize) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::with_capacity(trajectory.len()); num_constraints];
    let mut acc = vec![0.0; num_constraints];
    for rec in &trajectory.records {
        for m in 0..num_constraints {
            acc[m] += rec.true_constraints[player][m].max(0.0);
            out[m].push(acc[m]);
        }
    }
    out
}

/// Empirical distribution over joint actions for one realized context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextPolicy {
    pub context: Context,
    pub visits: usize,
    pub joint: BTreeMap<Vec<usize>, f64>,
}

/// Empirical joint policy `ρ_z(a) = |{t: zᵗ = z, aᵗ = a}| / T_z` over the
/// realized contexts, in order of first appearance. Unrealized contexts are
/// uniform and are not listed.
pub fn empirical_policy(trajectory: &Trajectory) -> Vec<ContextPolicy> {
    let mut index: BTreeMap<ContextKey, usize> = BTreeMap::new();
    let mut out: Vec<ContextPolicy> = Vec::new();
    for rec in &trajectory.records {
        let i = *index.entry(rec.context.key()).or_insert_with(|| {
            out.push(ContextPolicy {
                context: rec.context.clone(),
                visits: 0,
                joint: BTreeMap::new(),
            });
            out.len() - 1
        });
        out[i].visits += 1;
        *out[i].joint.entry(rec.joint_action.clone()).or_insert(0.0) += 1.0;
    }
    for entry in &mut out {
        let n = entry.visits as f64;
        for v in entry.joint.values_mut() {
            *v /= n;
        }
    }
    out
}

/// Gaps certifying the empirical policy as an approximate constrained
/// contextual coarse correlated equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CceReport {
    pub epsilon: f64,
    /// Best feasible unilateral deviation gain per player, averaged over rounds.
    pub reward_gaps: Vec<f64>,
    /// Expected positive constraint value per player and constraint.
    pub violation_gaps: Vec<Vec<f64>>,
}

pub fn cce_epsilon(game: &GameDefinition, trajectory: &Trajectory) -> Result<CceReport> {
    let t_total = trajectory.len();
    if t_total == 0 {
        return Ok(CceReport {
            epsilon: 0.0,
            reward_gaps: vec![0.0; game.num_players],
            violation_gaps: vec![vec![0.0; game.num_constraints]; game.num_players],
        });
    }
    let rho = empirical_policy(trajectory);
    let tf = t_total as f64;
    let mut reward_gaps = Vec::with_capacity(game.num_players);
    let mut violation_gaps = Vec::with_capacity(game.num_players);
    for i in 0..game.num_players {
        let k = game.num_actions[i];
        let mut gain = 0.0;
        let mut viol = vec![0.0; game.num_constraints];
        for cp in &rho {
            let z = &cp.context;
            let weight = cp.visits as f64;
            let mut dev_value = vec![0.0; k];
            let mut on_path = 0.0;
            for (joint, prob) in &cp.joint {
                on_path += prob * game.reward(i, joint, z)?;
                for (a, v) in counterfactual_rewards(game, i, joint, z)?.into_iter().enumerate() {
                    dev_value[a] += prob * v;
                }
                for (m, g) in game.constraints_of(i, joint[i], z)?.into_iter().enumerate() {
                    viol[m] += weight * prob * g.max(0.0);
                }
            }
            let feasible = feasible_actions(game, i, z)?;
            let (_, best) = best_in(&feasible, &dev_value).ok_or(Error::NoFeasiblePolicy { player: i })?;
            gain += weight * (best - on_path);
        }
        reward_gaps.push(gain / tf);
        violation_gaps.push(viol.into_iter().map(|v| v / tf).collect::<Vec<_>>());
    }
    let epsilon = reward_gaps
        .iter()
        .chain(violation_gaps.iter().flatten())
        .cloned()
        .fold(0.0, f64::max);
    Ok(CceReport {
        epsilon,
        reward_gaps,
        violation_gaps,
    })
}

/// Potential constant `B = 1 + (3/2)(1/K) Σ_a (1 + ln(1 + C_a))` of the
/// sleeping-expert regret bound.
pub fn expert_potential_constant(magnitudes: &[f64]) -> f64 {
    let k = magnitudes.len() as f64;
    1.0 + 1.5 / k * magnitudes.iter().map(|c| 1.0 + c.max(0.0).ln_1p()).sum::<f64>()
}

/// Per-expert sleeping regret bound `√(3 C_a (ln K + ln B + ln(1 + ln K)))`.
pub fn expert_regret_bounds(magnitudes: &[f64]) -> Vec<f64> {
    let k = magnitudes.len() as f64;
    let b = expert_potential_constant(magnitudes);
    let log_term = k.ln() + b.ln() + k.ln().ln_1p();
    magnitudes.iter().map(|c| (3.0 * c * log_term).sqrt()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub num_contexts: usize,
    pub num_actions: usize,
    pub horizon: usize,
    pub reward_confidence: ConfidenceParams,
    pub constraint_confidence: Vec<ConfidenceParams>,
    /// Realized information gain of the reward model after `horizon` rounds.
    pub reward_info_gain: f64,
    pub constraint_info_gains: Vec<f64>,
    /// Expert potential constant `B`; use the largest over context states.
    pub expert_constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HighProbabilityBounds {
    pub regret: f64,
    pub violations: Vec<f64>,
}

/// `8 / ln(1 + σ⁻²)`.
pub fn posterior_sum_constant(noise_scale: f64) -> f64 {
    8.0 / (1.0 / (noise_scale * noise_scale)).ln_1p()
}

/// High-probability regret and violation bounds with explicit constants.
pub fn high_probability_bounds(inputs: &BoundInputs) -> Result<HighProbabilityBounds> {
    if inputs.constraint_confidence.len() != inputs.constraint_info_gains.len() {
        return Err(Error::DimensionMismatch {
            expected: inputs.constraint_confidence.len(),
            got: inputs.constraint_info_gains.len(),
        });
    }
    if inputs.num_actions == 0 || inputs.num_contexts == 0 {
        return Err(Error::InvalidParameter("bounds need actions and contexts".into()));
    }
    let t = inputs.horizon as f64;
    let k = inputs.num_actions as f64;
    let zc = inputs.num_contexts as f64;
    let rc = &inputs.reward_confidence;
    let expert = (3.0 * zc * t * (k.ln() + inputs.expert_constant.ln() + k.ln().ln_1p())).sqrt();
    let concentration = (t / 2.0 * (2.0 / rc.failure_prob).ln()).sqrt();
    let model = posterior_sum_constant(rc.noise_scale)
        * beta(rc, inputs.reward_info_gain)
        * (t * inputs.reward_info_gain.max(0.0)).sqrt();
    let violations = inputs
        .constraint_confidence
        .iter()
        .zip(&inputs.constraint_info_gains)
        .map(|(c, g)| posterior_sum_constant(c.noise_scale) * beta(c, *g) * (t * g.max(0.0)).sqrt())
        .collect();
    Ok(HighProbabilityBounds {
        regret: expert + concentration + model,
        violations,
    })
}

/// Regret and violation trajectories of every player plus equilibrium gaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub regret: Vec<Vec<f64>>,
    pub violations: Vec<Vec<Vec<f64>>>,
    pub best_policy: Vec<Vec<(Context, usize)>>,
    pub cce: CceReport,
}

pub fn evaluate(game: &GameDefinition, trajectory: &Trajectory, convention: RegretConvention) -> Result<MetricsReport> {
    let mut regret = Vec::with_capacity(game.num_players);
    let mut violations = Vec::with_capacity(game.num_players);
    let mut best_policy = Vec::with_capacity(game.num_players);
    for i in 0..game.num_players {
        regret.push(constrained_regret(game, trajectory, i, convention)?);
        violations.push(cumulative_violations(trajectory, i, game.num_constraints));
        best_policy.push(best_feasible_policy(game, trajectory, i)?);
    }
    Ok(MetricsReport {
        regret,
        violations,
        best_policy,
        cce: cce_epsilon(game, trajectory)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{ContextSpace, GameMetadata, Payoff, RoundRecord, RunStatus};

    /// One player, two actions, one context; action 1 is worth 0.5, action 0
    /// is worth 0.1, both feasible.
    fn hand_game() -> GameDefinition {
        GameDefinition {
            num_players: 1,
            num_actions: vec![2],
            num_constraints: 1,
            context_space: ContextSpace::Finite { count: 1 },
            rewards: vec![Payoff::Table {
                num_contexts: 1,
                values: vec![0.1, 0.5],
            }],
            constraints: vec![vec![Payoff::Table {
                num_contexts: 1,
                values: vec![-0.2, 0.3],
            }]],
            reward_noise: vec![0.0],
            constraint_noise: vec![vec![0.0]],
            metadata: GameMetadata::default(),
        }
    }

    fn record(game: &GameDefinition, t: usize, joint: Vec<usize>) -> RoundRecord {
        let z = Context::Discrete(0);
        let n = game.num_players;
        let true_rewards: Vec<f64> = (0..n).map(|i| game.reward(i, &joint, &z).unwrap()).collect();
        let true_constraints: Vec<Vec<f64>> = (0..n)
            .map(|i| game.constraints_of(i, joint[i], &z).unwrap())
            .collect();
        RoundRecord {
            round: t,
            context: z,
            joint_action: joint,
            noisy_rewards: true_rewards.clone(),
            noisy_constraints: true_constraints.clone(),
            true_rewards,
            true_constraints,
            reward_noise: vec![0.0; n],
            constraint_noise: vec![vec![0.0; game.num_constraints]; n],
        }
    }

    #[test]
    fn regret_against_feasible_optimum() {
        let mut game = hand_game();
        game.constraints[0][0] = Payoff::Table {
            num_contexts: 1,
            values: vec![-0.2, -0.1],
        };
        let traj = Trajectory {
            records: vec![record(&game, 1, vec![0]), record(&game, 2, vec![0])],
            status: RunStatus::Completed,
        };
        let r = constrained_regret(&game, &traj, 0, RegretConvention::FixedHorizon).unwrap();
        assert!((r[1] - 0.8).abs() < 1e-12);
        let any = constrained_regret(&game, &traj, 0, RegretConvention::Anytime).unwrap();
        assert!((any[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn infeasible_best_action_is_excluded() {
        // Action 1 pays more but violates the constraint, so playing 0 is optimal.
        let game = hand_game();
        let traj = Trajectory {
            records: vec![record(&game, 1, vec![0]), record(&game, 2, vec![0])],
            status: RunStatus::Completed,
        };
        let r = constrained_regret(&game, &traj, 0, RegretConvention::FixedHorizon).unwrap();
        assert_eq!(r, vec![0.0, 0.0]);
        assert_eq!(cumulative_violations(&traj, 0, 1), vec![vec![0.0, 0.0]]);
    }

    #[test]
    fn violations_accumulate_positive_parts() {
        let game = hand_game();
        let traj = Trajectory {
            records: vec![
                record(&game, 1, vec![1]),
                record(&game, 2, vec![0]),
                record(&game, 3, vec![0]),
            ],
            status: RunStatus::Completed,
        };
        let v = cumulative_violations(&traj, 0, 1);
        assert_eq!(v[0].len(), 3);
        for x in &v[0] {
            assert!((x - 0.3).abs() < 1e-15);
        }
    }

    #[test]
    fn empirical_policy_frequencies() {
        let game = hand_game();
        let single = Trajectory {
            records: vec![record(&game, 1, vec![1])],
            status: RunStatus::Completed,
        };
        let rho = empirical_policy(&single);
        assert_eq!(rho.len(), 1);
        assert_eq!(rho[0].joint[&vec![1]], 1.0);
        let two = Trajectory {
            records: vec![record(&game, 1, vec![1]), record(&game, 2, vec![0])],
            status: RunStatus::Completed,
        };
        let rho = empirical_policy(&two);
        assert_eq!(rho[0].joint[&vec![0]], 0.5);
        assert_eq!(rho[0].joint[&vec![1]], 0.5);
    }

    #[test]
    fn cce_gap_two_player_hand_game() {
        // Player 0 rewards: a0 matches a1 -> 1, else 0. Player 1 gets 0.5 always.
        // ρ: (0,0) w.p. 1/2, (1,0) w.p. 1/2. Deviation to 0 earns 1, on-path 0.5.
        let game = GameDefinition {
            num_players: 2,
            num_actions: vec![2, 2],
            num_constraints: 1,
            context_space: ContextSpace::Finite { count: 1 },
            rewards: vec![
                Payoff::Table {
                    num_contexts: 1,
                    values: vec![1.0, 0.0, 0.0, 1.0],
                },
                Payoff::Table {
                    num_contexts: 1,
                    values: vec![0.5; 4],
                },
            ],
            constraints: vec![
                vec![Payoff::Table {
                    num_contexts: 1,
                    values: vec![-1.0, 0.2],
                }],
                vec![Payoff::Table {
                    num_contexts: 1,
                    values: vec![-1.0, -1.0],
                }],
            ],
            reward_noise: vec![0.0; 2],
            constraint_noise: vec![vec![0.0]; 2],
            metadata: GameMetadata::default(),
        };
        let traj = Trajectory {
            records: vec![record(&game, 1, vec![0, 0]), record(&game, 2, vec![1, 0])],
            status: RunStatus::Completed,
        };
        let cce = cce_epsilon(&game, &traj).unwrap();
        assert!((cce.reward_gaps[0] - 0.5).abs() < 1e-12);
        assert!(cce.reward_gaps[1].abs() < 1e-12);
        assert!((cce.violation_gaps[0][0] - 0.1).abs() < 1e-12);
        assert!((cce.epsilon - 0.5).abs() < 1e-12);
    }

    #[test]
    fn expert_constant_hand_value() {
        let b = expert_potential_constant(&[0.0, 0.0]);
        assert!((b - 2.5).abs() < 1e-15);
        let bounds = expert_regret_bounds(&[0.0, 4.0]);
        assert_eq!(bounds[0], 0.0);
        let b = 1.0 + 0.75 * (2.0 + 5f64.ln());
        let want = (12.0 * (2f64.ln() + b.ln() + 2f64.ln().ln_1p())).sqrt();
        assert!((bounds[1] - want).abs() < 1e-12);
    }

    #[test]
    fn bounds_grow_with_horizon() {
        let conf = ConfidenceParams::new(1.0, 1.0, 0.1, 1).unwrap();
        let mk = |t| BoundInputs {
            num_contexts: 5,
            num_actions: 7,
            horizon: t,
            reward_confidence: conf,
            constraint_confidence: vec![conf],
            reward_info_gain: 5.0,
            constraint_info_gains: vec![5.0],
            expert_constant: 2.5,
        };
        let a = high_probability_bounds(&mk(100)).unwrap();
        let b = high_probability_bounds(&mk(200)).unwrap();
        assert!(b.regret > a.regret);
        assert!(b.violations[0] > a.violations[0]);
    }
}
