//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits with
//! a failure status if any criterion fails.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use czgp_cli::config::{AlgorithmName, PlayerBlock};
use czgp_cli::experiment::{run_experiment, SeedOutcome, SeedStatus};
use czgp_cli::parse_config;
use czgp_core::experts::{renormalize, SleepingExpertState};
use czgp_core::game::{run, Context, ContextSpace, GameDefinition, GameMetadata, Payoff};
use czgp_core::gp::GpModel;
use czgp_core::kernels::{gram, KernelSpec};
use czgp_core::metrics::{best_feasible_policy, expert_regret_bounds};
use czgp_core::strategy::presets::{self, PlayerShape};
use czgp_core::PlayerState;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    id: &'static str,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn outcome(id: &'static str, name: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { id, name, pass, detail }
}

fn random_kernel(rng: &mut ChaCha8Rng, family: usize, dim: usize) -> KernelSpec {
    let l = rng.random_range(0.3..3.0);
    match family {
        0 => KernelSpec::squared_exponential(l),
        1 => KernelSpec::matern(l, [0.5, 1.5, 2.5][rng.random_range(0..3)]),
        2 => KernelSpec::polynomial(rng.random_range(0.5..2.0), rng.random_range(1.0..4.0), rng.random_range(1..=3)),
        _ => {
            let split = if dim > 1 { rng.random_range(1..dim) } else { 1 };
            KernelSpec::product(
                KernelSpec::squared_exponential(l),
                KernelSpec::matern(rng.random_range(0.3..3.0), 2.5),
                split,
            )
        }
    }
}

fn criterion_gp_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let family = case % 4;
        let dim = if family == 3 { rng.random_range(2..=4) } else { rng.random_range(1..=4) };
        let kernel = random_kernel(&mut rng, family, dim);
        let noise = rng.random_range(0.05..1.0);
        let n = rng.random_range(1..=20);
        let xs: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.random_range(0.0..3.0)).collect()).collect();
        let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let qs: Vec<Vec<f64>> = (0..5).map(|_| (0..dim).map(|_| rng.random_range(0.0..3.0)).collect()).collect();
        let mut gp = GpModel::new(kernel.clone(), noise).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            gp.add_observation(x, *y).unwrap();
        }
        let g = gram(&kernel, &xs).unwrap();
        let s = noise + gp.jitter();
        let k = DMatrix::from_fn(n, n, |i, j| g[i][j] + if i == j { s } else { 0.0 });
        let lu = k.lu();
        let alpha = lu.solve(&DVector::from_column_slice(&ys)).unwrap();
        for q in qs.iter().chain(xs.iter()) {
            let kx = DVector::from_iterator(n, xs.iter().map(|x| kernel.evaluate(x, q).unwrap()));
            let mean = kx.dot(&alpha);
            let var = kernel.evaluate(q, q).unwrap() - kx.dot(&lu.solve(&kx).unwrap());
            let sd = var.max(0.0).sqrt();
            let (m, d) = gp.posterior(q).unwrap();
            worst = worst.max((m - mean).abs() / mean.abs().max(1.0));
            worst = worst.max((d - sd).abs() / sd.abs().max(1.0));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        "1",
        "GP oracle equivalence",
        worst < 1e-8 && secs < 10.0,
        format!("max relative error {worst:.3e} over 100 instances in {secs:.2}s"),
    )
}

fn criterion_expert_bound() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut violations = 0;
    let mut tightest: f64 = f64::INFINITY;
    for case in 0..200 {
        let k = rng.random_range(2..=8);
        let t = rng.random_range(1..=2000);
        let awake_prob = rng.random_range(0.2..1.0);
        let mut state = SleepingExpertState::new(k);
        for _ in 0..t {
            let mut awake: Vec<bool> = (0..k).map(|_| rng.random_bool(awake_prob)).collect();
            let forced = rng.random_range(0..k);
            awake[forced] = true;
            let p_bar = renormalize(&state.predict(), &awake).unwrap();
            let r: Vec<f64> = match case % 3 {
                0 => (0..k).map(|_| rng.random()).collect(),
                1 => {
                    let worst = (0..k)
                        .filter(|a| awake[*a])
                        .min_by(|a, b| p_bar[*a].total_cmp(&p_bar[*b]))
                        .unwrap();
                    (0..k).map(|a| f64::from(a == worst)).collect()
                }
                _ => {
                    let favourite = (0..k)
                        .filter(|a| awake[*a])
                        .max_by(|a, b| p_bar[*a].total_cmp(&p_bar[*b]))
                        .unwrap();
                    (0..k).map(|a| if a == favourite { 0.0 } else { rng.random() }).collect()
                }
            };
            state.update(&awake, &r, &p_bar).unwrap();
        }
        let bounds = expert_regret_bounds(state.magnitudes());
        for (reg, b) in state.regrets().iter().zip(&bounds) {
            if reg > b {
                violations += 1;
            }
            if *b > 0.0 {
                tightest = tightest.min(b - reg);
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        "2",
        "Expert regret bound on adversarial sequences",
        violations == 0 && secs < 60.0,
        format!("{violations} experts above bound over 200 sequences, smallest slack {tightest:.3}, {secs:.2}s"),
    )
}

const ALGORITHMS: [AlgorithmName; 5] = [
    AlgorithmName::Random,
    AlgorithmName::Gpmw,
    AlgorithmName::ZGpmw,
    AlgorithmName::CAdaNormalGp,
    AlgorithmName::CzAdaNormalGp,
];

fn reproduction_config(algorithm: AlgorithmName) -> czgp_cli::ExperimentConfig {
    let mut cfg =
        parse_config(r#"{"game":{"generate":{"K":7,"Z":5}},"T":1000,"seeds":[0,1,2,3,4,5,6,7,8,9]}"#).unwrap();
    cfg.players = Some(vec![
        PlayerBlock::new(algorithm),
        PlayerBlock::new(AlgorithmName::Random),
        PlayerBlock::new(AlgorithmName::Random),
    ]);
    cfg
}

struct Study {
    algorithm: AlgorithmName,
    regret_mean: Vec<f64>,
    violation_mean: Vec<f64>,
    outcomes: Vec<SeedOutcome>,
}

fn run_studies() -> Vec<Study> {
    ALGORITHMS
        .iter()
        .map(|a| {
            let cfg = reproduction_config(*a);
            let res = run_experiment(&cfg, None, None).expect("experiment runs");
            Study {
                algorithm: *a,
                regret_mean: res.summary.aggregate.regret_mean[0].clone(),
                violation_mean: res.summary.aggregate.violations_mean[0][0].clone(),
                outcomes: res.outcomes,
            }
        })
        .collect()
}

fn study(studies: &[Study], a: AlgorithmName) -> &Study {
    studies.iter().find(|s| s.algorithm == a).unwrap()
}

fn second_half_share(v: &[f64]) -> f64 {
    let total = *v.last().unwrap();
    if total <= 0.0 {
        return 0.0;
    }
    (total - v[v.len() / 2 - 1]) / total
}

fn criterion_reproduction(studies: &[Study]) -> Vec<Outcome> {
    let mut out = Vec::new();
    let names = |a: AlgorithmName| format!("{a:?}");
    let shares: Vec<(AlgorithmName, f64)> = [AlgorithmName::CzAdaNormalGp, AlgorithmName::CAdaNormalGp]
        .iter()
        .map(|a| (*a, second_half_share(&study(studies, *a).violation_mean)))
        .collect();
    out.push(outcome(
        "3a",
        "Constrained learners' violations plateau",
        shares.iter().all(|(_, s)| *s < 0.15),
        shares
            .iter()
            .map(|(a, s)| format!("{} second-half share {:.3} (need < 0.15)", names(*a), s))
            .collect::<Vec<_>>()
            .join("; "),
    ));
    let shares: Vec<(AlgorithmName, f64)> = [AlgorithmName::Gpmw, AlgorithmName::ZGpmw]
        .iter()
        .map(|a| (*a, second_half_share(&study(studies, *a).violation_mean)))
        .collect();
    out.push(outcome(
        "3b",
        "Unconstrained learners keep violating",
        shares.iter().all(|(_, s)| *s >= 0.35),
        shares
            .iter()
            .map(|(a, s)| format!("{} second-half share {:.3} (need >= 0.35)", names(*a), s))
            .collect::<Vec<_>>()
            .join("; "),
    ));
    let learners = [
        AlgorithmName::Gpmw,
        AlgorithmName::ZGpmw,
        AlgorithmName::CAdaNormalGp,
        AlgorithmName::CzAdaNormalGp,
    ];
    let avg: Vec<(AlgorithmName, f64, f64)> = learners
        .iter()
        .map(|a| {
            let r = &study(studies, *a).regret_mean;
            (*a, r[99] / 100.0, r[r.len() - 1] / r.len() as f64)
        })
        .collect();
    out.push(outcome(
        "3c",
        "Average regret decreases",
        avg.iter().all(|(_, early, late)| late < early),
        avg.iter()
            .map(|(a, e, l)| format!("{} R100/100 {:.4} -> RT/T {:.4}", names(*a), e, l))
            .collect::<Vec<_>>()
            .join("; "),
    ));
    let fin = |a| *study(studies, a).regret_mean.last().unwrap();
    let pairs = [
        (AlgorithmName::ZGpmw, AlgorithmName::Gpmw),
        (AlgorithmName::CzAdaNormalGp, AlgorithmName::CAdaNormalGp),
    ];
    out.push(outcome(
        "3d",
        "Contextual learners end with lower regret",
        pairs.iter().all(|(c, n)| fin(*c) < fin(*n)),
        pairs
            .iter()
            .map(|(c, n)| format!("{} {:.3} vs {} {:.3}", names(*c), fin(*c), names(*n), fin(*n)))
            .collect::<Vec<_>>()
            .join("; "),
    ));
    out
}

fn criterion_high_probability_bound(studies: &[Study]) -> Outcome {
    let s = study(studies, AlgorithmName::CzAdaNormalGp);
    let mut within = 0;
    let mut worst_ratio: f64 = 0.0;
    for o in &s.outcomes {
        let Some(run) = &o.run else { continue };
        let Some(b) = &run.bounds[0] else { continue };
        if b.regret_within && b.violations_within {
            within += 1;
        }
        let r = run.regret[0].last().copied().unwrap_or(0.0);
        worst_ratio = worst_ratio.max(r / b.regret_bound);
        for (v, vb) in run.violations[0].iter().zip(&b.violation_bounds) {
            worst_ratio = worst_ratio.max(v.last().copied().unwrap_or(0.0) / vb);
        }
    }
    outcome(
        "4",
        "High-probability regret and violation bounds",
        within >= 8,
        format!("bounds hold on {within}/10 seeds, largest value/bound ratio {worst_ratio:.3}"),
    )
}

fn criterion_infeasibility(studies: &[Study]) -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for a in [AlgorithmName::CzAdaNormalGp, AlgorithmName::CAdaNormalGp] {
        let n = study(studies, a)
            .outcomes
            .iter()
            .filter(|o| matches!(o.status, SeedStatus::InfeasibilityDeclared { .. }))
            .count();
        pass &= n <= 2;
        parts.push(format!("{a:?} declared infeasibility on {n}/10 seeds"));
    }
    outcome("5", "No spurious infeasibility", pass, parts.join("; "))
}

fn criterion_cce(studies: &[Study]) -> Outcome {
    let mut runs = 0;
    let mut bad = 0;
    let mut largest_slack_violation: f64 = f64::NEG_INFINITY;
    for s in studies {
        for o in &s.outcomes {
            let Some(run) = &o.run else { continue };
            let t = run.trajectory.len().max(1) as f64;
            let mut rhs: f64 = f64::NEG_INFINITY;
            for p in &run.regret {
                rhs = rhs.max(p.last().copied().unwrap_or(0.0) / t);
            }
            for p in &run.violations {
                for c in p {
                    rhs = rhs.max(c.last().copied().unwrap_or(0.0) / t);
                }
            }
            runs += 1;
            let Some(cce) = &run.cce else {
                bad += 1;
                continue;
            };
            largest_slack_violation = largest_slack_violation.max(cce.epsilon - rhs);
            if cce.epsilon > rhs + 1e-9 {
                bad += 1;
            }
        }
    }
    outcome(
        "6",
        "Equilibrium gap consistency",
        bad == 0 && runs == 50,
        format!("{bad}/{runs} runs with epsilon above max(R/T, V/T) + 1e-9; max excess {largest_slack_violation:.3e}"),
    )
}

fn tiny_game(rng: &mut ChaCha8Rng, k: usize, zc: usize) -> GameDefinition {
    let n = 2;
    let joint = k * k;
    let rewards = (0..n)
        .map(|_| Payoff::Table {
            num_contexts: zc,
            values: (0..joint * zc).map(|_| rng.random()).collect(),
        })
        .collect();
    let constraints = (0..n)
        .map(|_| {
            let mut g: Vec<f64> = (0..k * zc).map(|_| rng.random_range(-1.0..1.0)).collect();
            for z in 0..zc {
                let a = rng.random_range(0..k);
                g[a * zc + z] = -rng.random::<f64>();
            }
            vec![Payoff::Table { num_contexts: zc, values: g }]
        })
        .collect();
    GameDefinition {
        num_players: n,
        num_actions: vec![k; n],
        num_constraints: 1,
        context_space: ContextSpace::Finite { count: zc },
        rewards,
        constraints,
        reward_noise: vec![0.0; n],
        constraint_noise: vec![vec![0.0]; n],
        metadata: GameMetadata::default(),
    }
}

fn criterion_policy_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut mismatches = 0;
    for case in 0..50u64 {
        let k = rng.random_range(2..=3);
        let zc = rng.random_range(1..=2);
        let t = rng.random_range(1..=20);
        let game = tiny_game(&mut rng, k, zc);
        let shape = |i| PlayerShape {
            player_index: i,
            num_players: 2,
            num_actions: k,
            num_constraints: 1,
            action_kernel: KernelSpec::squared_exponential(1.0),
            context_kernel: KernelSpec::squared_exponential(1.0),
            constraint_kernel: KernelSpec::squared_exponential(1.0),
            constraint_context: true,
            rkhs_bound: 1.0,
            noise_scale: 1.0,
            failure_prob: 0.1,
            beta_scale: 1.0,
        };
        let mut players: Vec<PlayerState> = (0..2)
            .map(|i| PlayerState::new(presets::random(&shape(i)).unwrap(), case * 2 + i as u64).unwrap())
            .collect();
        let ctx: Vec<Context> = (0..t).map(|_| Context::Discrete(rng.random_range(0..zc))).collect();
        let traj = run(&game, &mut players, &ctx, t, case).unwrap();
        for i in 0..2 {
            let policy = best_feasible_policy(&game, &traj, i).unwrap();
            let value_of = |pol: &dyn Fn(usize) -> usize| -> Option<f64> {
                let mut total = 0.0;
                for rec in &traj.records {
                    let Context::Discrete(z) = rec.context else { unreachable!() };
                    let a = pol(z);
                    if !game.is_feasible(i, a, &rec.context).unwrap() {
                        return None;
                    }
                    let mut dev = rec.joint_action.clone();
                    dev[i] = a;
                    total += game.reward(i, &dev, &rec.context).unwrap();
                }
                Some(total)
            };
            let mut best = f64::NEG_INFINITY;
            for code in 0..k.pow(zc as u32) {
                let pol = |z: usize| (code / k.pow(z as u32)) % k;
                if let Some(v) = value_of(&pol) {
                    best = best.max(v);
                }
            }
            let chosen = |z: usize| {
                policy
                    .iter()
                    .find(|(c, _)| *c == Context::Discrete(z))
                    .map_or(0, |(_, a)| *a)
            };
            // Unrealized contexts do not affect the value; any action will do.
            let realized_value = value_of(&chosen);
            if realized_value.map_or(true, |v| (v - best).abs() > 1e-12) {
                mismatches += 1;
            }
        }
    }
    outcome(
        "7",
        "Per-context policy equals exhaustive enumeration",
        mismatches == 0,
        format!("{mismatches} mismatches over 50 games x 2 players"),
    )
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn criterion_determinism() -> Outcome {
    let mut cfg =
        parse_config(r#"{"game":{"generate":{"K":7,"Z":5}},"T":1000,"seeds":[3,4],"parallel":2}"#).unwrap();
    cfg.players = Some(vec![
        PlayerBlock::new(AlgorithmName::CzAdaNormalGp),
        PlayerBlock::new(AlgorithmName::Gpmw),
        PlayerBlock::new(AlgorithmName::Random),
    ]);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_experiment(&cfg, Some(a.path()), None).unwrap();
    cfg.parallel = 1;
    run_experiment(&cfg, Some(b.path()), None).unwrap();
    let fa = read_all(a.path());
    let fb = read_all(b.path());
    // The parallelism setting is part of the config, so compare everything
    // except the config hash stamped in the JSON files.
    let strip = |files: &[(String, Vec<u8>)]| -> Vec<(String, String)> {
        files
            .iter()
            .map(|(n, bytes)| {
                let text = String::from_utf8(bytes.clone()).unwrap();
                let text: String = text
                    .lines()
                    .filter(|l| !l.contains("config_hash"))
                    .collect::<Vec<_>>()
                    .join("\n");
                (n.clone(), text)
            })
            .collect()
    };
    let c = tempfile::tempdir().unwrap();
    run_experiment(&cfg, Some(c.path()), None).unwrap();
    let fc = read_all(c.path());
    let identical = fb == fc;
    let parallel_invariant = strip(&fa) == strip(&fb);
    outcome(
        "8",
        "Deterministic outputs",
        identical && parallel_invariant && fa.len() == 4,
        format!(
            "{} files; repeated run byte-identical: {identical}; sequential vs parallel identical: {parallel_invariant}",
            fa.len()
        ),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut results = vec![criterion_gp_oracle(), criterion_expert_bound()];
    let studies = run_studies();
    results.extend(criterion_reproduction(&studies));
    results.push(criterion_high_probability_bound(&studies));
    results.push(criterion_infeasibility(&studies));
    results.push(criterion_cce(&studies));
    results.push(criterion_policy_oracle());
    results.push(criterion_determinism());
    let mut failed = 0;
    println!();
    for r in &results {
        let tag = if r.pass { "PASS" } else { "FAIL" };
        if !r.pass {
            failed += 1;
        }
        println!("criterion {:<3} {tag}  {}: {}", r.id, r.name, r.detail);
    }
    println!(
        "acceptance: {} passed, {failed} failed ({:.1}s)",
        results.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
