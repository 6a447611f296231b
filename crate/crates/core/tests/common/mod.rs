#![allow(dead_code)]

use czgp_core::game::{ContextSpace, GameDefinition, GameMetadata, Payoff};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random tabular game with uniform rewards in [0, 1] and constraints in
/// [-1, 1]; one action per player and context is forced feasible.
pub fn tiny_game(seed: u64, players: usize, k: usize, contexts: usize, noise: f64) -> GameDefinition {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let joint = k.pow(players as u32);
    let rewards = (0..players)
        .map(|_| Payoff::Table {
            num_contexts: contexts,
            values: (0..joint * contexts).map(|_| rng.random()).collect(),
        })
        .collect();
    let constraints = (0..players)
        .map(|_| {
            let mut g: Vec<f64> = (0..k * contexts).map(|_| rng.random_range(-1.0..1.0)).collect();
            for z in 0..contexts {
                let a = rng.random_range(0..k);
                g[a * contexts + z] = -rng.random::<f64>();
            }
            vec![Payoff::Table {
                num_contexts: contexts,
                values: g,
            }]
        })
        .collect();
    GameDefinition {
        num_players: players,
        num_actions: vec![k; players],
        num_constraints: 1,
        context_space: ContextSpace::Finite { count: contexts },
        rewards,
        constraints,
        reward_noise: vec![noise; players],
        constraint_noise: vec![vec![noise]; players],
        metadata: GameMetadata::default(),
    }
}
