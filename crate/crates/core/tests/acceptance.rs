//! Acceptance suite. Each test prints one `PASS`/`FAIL` line to stderr
//! (written directly, so it shows even when libtest captures output) and
//! then asserts. Tolerances are pinned as constants next to each check.

use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mlpac::cli::config::Profile;
use mlpac::datagen::{
    generate_multilabel, mask_positives, split_indices, FullDataset, PartialDataset,
};
use mlpac::evalkit::{mean_ap, TargetKind};
use mlpac::learners::{action_log_prob, reinforce_batch_gradient, sample_actions, SampledRollout};
use mlpac::netcore::{finite_diff_check, random_inputs, DenseModel, Gradients, LossKind};
use mlpac::rewards::{local_reward, recall_reward, total_reward, ActionVector};
use mlpac::trainer::{
    enhance_labels, evaluate_model, run_baseline, run_mlpac, BaselineVariant, TrainConfig,
    TrainResult,
};

fn report(n: u32, name: &str, pass: bool, detail: &str) {
    let line = format!(
        "[acceptance] criterion {n:>2} {:<4} {name}: {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- 1

#[test]
fn c01_gradients_match_finite_differences() {
    const MAX_REL_ERR: f64 = 1e-4;
    const BUDGET: Duration = Duration::from_secs(10);
    let start = Instant::now();
    let mut r = rng(1);
    let mut worst = 0.0f64;
    let mut models = 0;
    while models < 20 {
        let d = r.random_range(1..=5);
        let c = r.random_range(1..=4);
        let mut dims = vec![d];
        for _ in 0..r.random_range(0..=2) {
            dims.push(r.random_range(2..=8));
        }
        dims.push(c);
        let model = DenseModel::new(&dims, r.random()).unwrap();
        if model.num_params() > 200 {
            continue;
        }
        models += 1;
        let n = r.random_range(1..=4);
        let xs = random_inputs(n, d, r.random());
        let targets: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..c).map(|_| r.random_range(0..2) as f64).collect())
            .collect();
        let weights: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..c).map(|_| r.random_range(0.0..3.0)).collect())
            .collect();
        let bce = LossKind::WeightedBce { targets, weights };
        let actions: Vec<ActionVector> = (0..n)
            .map(|_| ActionVector::from_bools((0..c).map(|_| r.random()).collect()))
            .collect();
        let lp = LossKind::ScaledLogProb {
            actions,
            scale: r.random_range(-3.0..3.0),
        };
        for loss in [&bce, &lp] {
            worst = worst.max(finite_diff_check(&model, &xs, loss, 1e-5).unwrap());
        }
    }
    let elapsed = start.elapsed();
    let pass = worst < MAX_REL_ERR && elapsed < BUDGET;
    report(
        1,
        "gradient check",
        pass,
        &format!("max rel err {worst:.3e} (< {MAX_REL_ERR:e}), {elapsed:.2?}"),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 2

#[test]
fn c02_reinforce_estimator_is_unbiased() {
    const MIN_COSINE: f64 = 0.99;
    const MAX_REL_L2: f64 = 0.02;
    const SAMPLES: usize = 100_000;
    const BUDGET: Duration = Duration::from_secs(30);
    let start = Instant::now();
    let policy = DenseModel::new(&[4, 6, 3], 21).unwrap();
    let critic = DenseModel::new(&[4, 5, 3], 22).unwrap();
    let xs = random_inputs(2, 4, 23);
    let observed: [Vec<u8>; 2] = [vec![1, 0, 1], vec![0, 1, 0]];
    let w = 2.0;
    // every class scored, so the reward is a fixed function of the actions
    let reward = |i: usize, a: &ActionVector| -> f64 {
        let cp = critic.forward(&xs[i]).unwrap();
        let local: Vec<f64> = (0..3)
            .map(|c| local_reward(cp[c], a.is_positive(c)))
            .collect();
        total_reward(&local, recall_reward(&observed[i], a), w).unwrap()
    };

    let mut exact = Gradients::zeros_like(&policy);
    for (i, x) in xs.iter().enumerate() {
        let p = policy.forward(x).unwrap();
        for a in ActionVector::enumerate_all(3) {
            let prob = action_log_prob(&p, &a).exp();
            let g = policy
                .backward_scaled_logprob(x, &a, prob * reward(i, &a) / xs.len() as f64)
                .unwrap();
            exact.add_scaled(&g, 1.0).unwrap();
        }
    }

    let rollouts: Vec<SampledRollout> = xs
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let p = policy.forward(x).unwrap();
            let actions = sample_actions(&p, SAMPLES, 100 + i as u64);
            let rewards = actions.iter().map(|a| reward(i, a)).collect();
            let log_probs = actions.iter().map(|a| action_log_prob(&p, a)).collect();
            SampledRollout {
                instance: i,
                actions,
                rewards,
                log_probs,
            }
        })
        .collect();
    let mc = reinforce_batch_gradient(&policy, &xs, &rollouts).unwrap();

    let cosine = exact.dot(&mc) / (exact.norm() * mc.norm());
    let mut diff = mc.clone();
    diff.add_scaled(&exact, -1.0).unwrap();
    let rel = diff.norm() / exact.norm();
    let elapsed = start.elapsed();
    let pass = cosine > MIN_COSINE && rel < MAX_REL_L2 && elapsed < BUDGET;
    report(
        2,
        "REINFORCE unbiasedness",
        pass,
        &format!("cosine {cosine:.5}, rel L2 {rel:.4}, {elapsed:.2?}"),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 3

#[test]
fn c03_reward_unit_suite() {
    let mut failures = Vec::new();
    if local_reward(0.5, true) != 0.0 || local_reward(0.5, false) != 0.0 {
        failures.push("r(0.5) != 0".to_string());
    }
    if local_reward(0.9, true) != 1.0 {
        failures.push(format!("r(0.9,+1) = {}", local_reward(0.9, true)));
    }
    for k in 0..1000 {
        let p = k as f64 / 999.0;
        if local_reward(p, true) != -local_reward(p, false) {
            failures.push(format!("antisymmetry at p={p}"));
        }
    }
    let mut r = rng(3);
    for _ in 0..1000 {
        let c = r.random_range(1..=12);
        let obs: Vec<u8> = (0..c).map(|_| r.random_range(0..2)).collect();
        let act = ActionVector::from_bools((0..c).map(|_| r.random()).collect());
        let pos = obs.iter().filter(|&&o| o == 1).count();
        let hit = (0..c)
            .filter(|&k| obs[k] == 1 && act.is_positive(k))
            .count();
        let oracle = if pos == 0 {
            0.0
        } else {
            hit as f64 / pos as f64
        };
        if recall_reward(&obs, &act) != oracle {
            failures.push(format!("recall mismatch on {obs:?}"));
        }
    }
    let pass = failures.is_empty();
    report(
        3,
        "reward unit suite",
        pass,
        &if pass {
            "exact on all checks".to_string()
        } else {
            failures[..failures.len().min(3)].join("; ")
        },
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 4

#[test]
fn c04_log_probs_normalise() {
    const TOL: f64 = 1e-9;
    let mut r = rng(4);
    let mut worst = 0.0f64;
    for c in 1..=4usize {
        for trial in 0..25 {
            let p: Vec<f64> = (0..c).map(|_| r.random::<f64>()).collect();
            let total: f64 = ActionVector::enumerate_all(c)
                .map(|a| action_log_prob(&p, &a).exp())
                .sum();
            worst = worst.max((total - 1.0).abs());
            let model = DenseModel::new(&[3, 4, c], trial).unwrap();
            let x = random_inputs(1, 3, trial + 50).remove(0);
            let total: f64 = ActionVector::enumerate_all(c)
                .map(|a| model.log_prob_exact(&x, &a).unwrap().exp())
                .sum();
            worst = worst.max((total - 1.0).abs());
        }
    }
    let pass = worst <= TOL;
    report(
        4,
        "log-prob normalisation",
        pass,
        &format!("max |sum - 1| = {worst:.2e} (<= {TOL:e})"),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 5

#[test]
fn c05_enhancement_invariants() {
    let mut r = rng(5);
    let mut violations = Vec::new();
    for draw in 0..100u64 {
        let d = r.random_range(1..=4);
        let c = r.random_range(1..=5);
        let n = r.random_range(1..=20);
        let features = random_inputs(n, d, draw);
        let observed: Vec<Vec<u8>> = (0..n)
            .map(|_| (0..c).map(|_| (r.random::<f64>() < 0.3) as u8).collect())
            .collect();
        let data = PartialDataset {
            features,
            observed: observed.clone(),
            class_names: (0..c).map(|k| format!("c{k}")).collect(),
            annotation_ratio: 0.5,
            provenance: mlpac::datagen::Provenance::External,
            truth: None,
        };
        // scaled-up random nets so some probabilities clear high thresholds
        let mut policy = DenseModel::new(&[d, 4, c], r.random()).unwrap();
        let mut critic = DenseModel::new(&[d, 4, c], r.random()).unwrap();
        for m in [&mut policy, &mut critic] {
            for k in 0..m.num_params() {
                let v = m.param(k) * 6.0 + r.random_range(-1.0..1.0);
                m.set_param(k, v);
            }
        }
        let gamma = r.random_range(0.5..1.0);
        let e = enhance_labels(&policy, &critic, &data, gamma).unwrap();
        if !e.is_superset_of(&observed) {
            violations.push(format!("draw {draw}: not a superset"));
        }
        if enhance_labels(&policy, &critic, &data, 1.0).unwrap().labels != observed {
            violations.push(format!("draw {draw}: gamma=1 added labels"));
        }
        let mut silent = DenseModel::zeros(&[d, 4, c]).unwrap();
        let first_bias = silent.num_params() - c;
        for k in first_bias..silent.num_params() {
            silent.set_param(k, -50.0);
        }
        if enhance_labels(&policy, &silent, &data, gamma)
            .unwrap()
            .labels
            != observed
        {
            violations.push(format!("draw {draw}: all-FALSE critic added labels"));
        }
    }
    let pass = violations.is_empty();
    report(
        5,
        "enhancement invariants",
        pass,
        &if pass {
            "100 draws, no violations".to_string()
        } else {
            violations[..violations.len().min(3)].join("; ")
        },
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 6, 7

struct Task {
    train: PartialDataset,
    val: PartialDataset,
    test: FullDataset,
}

/// `n_train` training instances plus half as many for validation and
/// `n_train` more for testing, all drawn from one generator.
fn task(full: &FullDataset, keep: f64, n_train: usize, seed: u64) -> Task {
    let n = full.len();
    let val_frac = (n_train / 4) as f64 / n as f64;
    let test_frac = (n - n_train - n_train / 4) as f64 / n as f64;
    let (tr, va, te) = split_indices(n, val_frac, test_frac, seed).unwrap();
    assert_eq!(tr.len(), n_train);
    let partial = mask_positives(full, keep, seed).unwrap();
    Task {
        train: partial.select(&tr),
        val: partial.select(&va),
        test: full.select(&te),
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct Prf {
    p: f64,
    r: f64,
    f1: f64,
}

fn test_prf(res: &TrainResult, t: &Task) -> Prf {
    let m = evaluate_model(
        &res.best_policy,
        &t.test.features,
        &t.test.true_labels,
        TargetKind::GroundTruth,
    )
    .unwrap();
    Prf {
        p: m.precision,
        r: m.recall,
        f1: m.f1,
    }
}

fn mean(xs: &[Prf]) -> Prf {
    let n = xs.len() as f64;
    Prf {
        p: xs.iter().map(|x| x.p).sum::<f64>() / n,
        r: xs.iter().map(|x| x.r).sum::<f64>() / n,
        f1: xs.iter().map(|x| x.f1).sum::<f64>() / n,
    }
}

const SEEDS: [u64; 3] = [1, 2, 3];

struct MultilabelRuns {
    negative: Vec<Prf>,
    full: Vec<Prf>,
    no_global: Vec<Prf>,
    no_local: Vec<Prf>,
    per_seed: Vec<Duration>,
}

/// Synthetic 10-class task, 2000 training instances, 10% annotation.
fn multilabel_runs() -> &'static MultilabelRuns {
    static RUNS: OnceLock<MultilabelRuns> = OnceLock::new();
    RUNS.get_or_init(|| {
        let mut out = MultilabelRuns {
            negative: vec![],
            full: vec![],
            no_global: vec![],
            no_local: vec![],
            per_seed: vec![],
        };
        for seed in SEEDS {
            let start = Instant::now();
            let full = generate_multilabel(4500, 20, 10, 0.1, 0.5, seed).unwrap();
            let t = task(&full, 0.1, 2000, seed);
            let cfg = TrainConfig {
                seed,
                ..Profile::Multilabel.config()
            };
            let run = |c: &TrainConfig| run_mlpac(&t.train, &t.val, Some(&t.test), c).unwrap();
            let neg = run_baseline(
                &t.train,
                &t.val,
                Some(&t.test),
                BaselineVariant::NegativeMode,
                &cfg,
            )
            .unwrap();
            out.negative.push(test_prf(&neg, &t));
            out.full.push(test_prf(&run(&cfg), &t));
            out.per_seed.push(start.elapsed());
            let no_global = TrainConfig {
                global_reward: mlpac::rewards::GlobalRewardKind::None,
                ..cfg.clone()
            };
            out.no_global.push(test_prf(&run(&no_global), &t));
            let no_local = TrainConfig {
                local_reward: false,
                ..cfg.clone()
            };
            out.no_local.push(test_prf(&run(&no_local), &t));
        }
        out
    })
}

fn fmt(p: Prf) -> String {
    format!("P={:.3} R={:.3} F1={:.3}", p.p, p.r, p.f1)
}

#[test]
fn c06_mlpac_beats_negative_mode_at_ten_percent() {
    const MIN_NEG_GAP_P_MINUS_R: f64 = 0.3;
    const MIN_F1_GAIN: f64 = 0.10;
    const MIN_RECALL_GAIN: f64 = 0.20;
    const BUDGET_PER_SEED: Duration = Duration::from_secs(300);
    let runs = multilabel_runs();
    let neg = mean(&runs.negative);
    let ml = mean(&runs.full);
    let slowest = runs.per_seed.iter().max().copied().unwrap_or_default();
    let pass = neg.p - neg.r > MIN_NEG_GAP_P_MINUS_R
        && ml.f1 - neg.f1 >= MIN_F1_GAIN
        && ml.r - neg.r >= MIN_RECALL_GAIN
        && slowest < BUDGET_PER_SEED;
    report(
        6,
        "10% annotation trend",
        pass,
        &format!(
            "negative {} | mlpac {} | slowest seed {slowest:.2?}",
            fmt(neg),
            fmt(ml)
        ),
    );
    for (s, (n, m)) in SEEDS.iter().zip(runs.negative.iter().zip(&runs.full)) {
        let _ = writeln!(
            std::io::stderr(),
            "    seed {s}: negative {} | mlpac {}",
            fmt(*n),
            fmt(*m)
        );
    }
    assert!(pass);
}

#[test]
fn c07_ablation_orderings() {
    let runs = multilabel_runs();
    let full = mean(&runs.full);
    let ng = mean(&runs.no_global);
    let nl = mean(&runs.no_local);
    let pass = ng.r < full.r && nl.p < full.p;
    report(
        7,
        "ablation trends",
        pass,
        &format!(
            "full {} | no-global {} | no-local {}",
            fmt(full),
            fmt(ng),
            fmt(nl)
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 8

#[test]
fn c08_binary_pu_trend() {
    const BUDGET_PER_CELL: Duration = Duration::from_secs(180);
    const RATIOS: [f64; 3] = [0.1, 0.3, 0.5];
    // w0 = 50 is the largest of the binary-profile weights {10, 20, 50}
    let base = TrainConfig {
        reward: mlpac::rewards::RewardSpec {
            w0: 50.0,
            ..Profile::BinaryPu.config().reward
        },
        ..Profile::BinaryPu.config()
    };
    let mut gaps = Vec::new();
    let mut lines = Vec::new();
    let mut slowest = Duration::ZERO;
    for keep in RATIOS {
        let start = Instant::now();
        let mut neg = Vec::new();
        let mut ml = Vec::new();
        for seed in SEEDS {
            let full = generate_multilabel(11250, 20, 10, 0.1, 0.5, seed)
                .unwrap()
                .to_binary(0)
                .unwrap();
            let t = task(&full, keep, 5000, seed);
            let cfg = TrainConfig {
                seed,
                ..base.clone()
            };
            let n = run_baseline(
                &t.train,
                &t.val,
                Some(&t.test),
                BaselineVariant::NegativeMode,
                &cfg,
            )
            .unwrap();
            neg.push(test_prf(&n, &t));
            let m = run_mlpac(&t.train, &t.val, Some(&t.test), &cfg).unwrap();
            ml.push(test_prf(&m, &t));
        }
        slowest = slowest.max(start.elapsed());
        let (n, m) = (mean(&neg), mean(&ml));
        gaps.push(m.f1 - n.f1);
        lines.push(format!(
            "keep {keep}: negative F1={:.3} mlpac F1={:.3}",
            n.f1, m.f1
        ));
    }
    let beats = gaps.iter().all(|&g| g > 0.0);
    let shrinking = gaps.windows(2).all(|w| w[1] < w[0]);
    let pass = beats && shrinking && slowest < BUDGET_PER_CELL;
    report(
        8,
        "binary PU trend",
        pass,
        &format!(
            "{} | gaps {:.3?} | slowest cell {slowest:.2?}",
            lines.join("; "),
            gaps
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 9

/// Precision at the rank of every positive, found by counting how many
/// items outrank it (higher score, or equal score and lower index).
fn brute_force_map(scores: &[Vec<f64>], targets: &[Vec<i8>]) -> Option<f64> {
    let n = scores.len();
    let classes = targets[0].len();
    let mut aps = Vec::new();
    for c in 0..classes {
        let outranks = |a: usize, b: usize| {
            scores[a][c] > scores[b][c] || (scores[a][c] == scores[b][c] && a < b)
        };
        let rank = |j: usize| 1 + (0..n).filter(|&a| a != j && outranks(a, j)).count();
        let mut positives: Vec<(usize, usize)> = (0..n)
            .filter(|&j| targets[j][c] == 1)
            .map(|j| (rank(j), j))
            .collect();
        if positives.is_empty() {
            continue;
        }
        positives.sort();
        let mut sum = 0.0;
        for &(k, _) in &positives {
            let hits = positives.iter().filter(|&&(r, _)| r <= k).count();
            sum += hits as f64 / k as f64;
        }
        aps.push(sum / positives.len() as f64);
    }
    if aps.is_empty() {
        None
    } else {
        Some(aps.iter().sum::<f64>() / aps.len() as f64)
    }
}

#[test]
fn c09_map_matches_brute_force() {
    let mut r = rng(9);
    let mut mismatches = 0;
    let mut cases = 0;
    while cases < 200 {
        let n = r.random_range(1..=12);
        let c = r.random_range(1..=4);
        // coarse scores so ties occur
        let scores: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..c).map(|_| r.random_range(0..6) as f64 / 5.0).collect())
            .collect();
        let targets: Vec<Vec<i8>> = (0..n)
            .map(|_| {
                (0..c)
                    .map(|_| if r.random::<f64>() < 0.4 { 1 } else { -1 })
                    .collect()
            })
            .collect();
        let oracle = brute_force_map(&scores, &targets);
        let got = mean_ap(&scores, &targets).ok();
        if oracle.is_none() && got.is_none() {
            continue;
        }
        cases += 1;
        if got != oracle {
            mismatches += 1;
        }
    }
    let pass = mismatches == 0;
    report(
        9,
        "mAP oracle equivalence",
        pass,
        &format!("{mismatches} mismatches in {cases} cases"),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 10

fn run_train(data: &Path, out: &Path, method: &str) {
    let status = Command::new(env!("CARGO_BIN_EXE_mlpac"))
        .args(["train", "--data"])
        .arg(data)
        .args([
            "--ratio", "0.3", "--method", method, "--seed", "7", "--epochs", "6",
        ])
        .arg("--out")
        .arg(out)
        .output()
        .unwrap();
    assert!(
        status.status.success(),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
}

#[test]
fn c10_train_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let full = generate_multilabel(600, 8, 5, 0.15, 0.5, 10).unwrap();
    let data = dir.path().join("full.jsonl");
    mlpac::datagen::save_dataset(&mlpac::datagen::Dataset::Full(full), &data).unwrap();
    let mut differing = Vec::new();
    for method in ["mlpac", "negative", "self-training"] {
        let a = dir.path().join(format!("{method}-a"));
        let b = dir.path().join(format!("{method}-b"));
        run_train(&data, &a, method);
        run_train(&data, &b, method);
        for file in ["epochs.csv", "metrics.json", "checkpoint.json"] {
            let x = std::fs::read(a.join(file)).unwrap();
            let y = std::fs::read(b.join(file)).unwrap();
            if x != y {
                differing.push(format!("{method}/{file}"));
            }
        }
    }
    let pass = differing.is_empty();
    report(
        10,
        "train determinism",
        pass,
        &if pass {
            "epochs.csv, metrics.json and checkpoint.json byte-identical".to_string()
        } else {
            format!("differs: {}", differing.join(", "))
        },
    );
    assert!(pass);
}
