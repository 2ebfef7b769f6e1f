//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --release -p evt-core --test acceptance`. Pass
//! criterion numbers after `--` to run a subset. A criterion that runs but
//! misses its threshold prints FAIL without failing the target unless
//! `EVT_ACCEPTANCE_STRICT=1` is set; a criterion that errors or panics
//! always fails it.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use common::{
    brute_force_matched, fault_matches, idx_faults, load_idx_bytes, nmi_direct, permutations, randn, random_evidence,
    random_matrix, random_net, random_network, rng,
};
use evt_core::eval::{clustering_accuracy, min_cost_assignment, nmi};
use evt_core::evidence::labelset_evidence;
use evt_core::experiment::run_from_baseline;
use evt_core::io::{
    decode_checkpoint, decode_evidence, decode_matrix, encode_checkpoint, encode_evidence, encode_matrix,
    load_checkpoint, load_evidence, load_matrix, save_checkpoint, save_evidence, save_matrix,
};
use evt_core::nn::{check_gradients, gradient_check, mse_loss, softmax_rows, Activation, Loss, Probe};
use evt_core::pipeline::{evidence_transfer_observed, joint_objective, train_evidence_ae, HeadTarget, TransferState};
use evt_core::seed::derive_seed;
use evt_core::{run_experiment, DatasetBundle, ExperimentConfig, ExperimentOutput};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load_config(name: &str) -> (ExperimentConfig, DatasetBundle) {
    let dir = configs_dir();
    let text = std::fs::read_to_string(dir.join(name)).unwrap();
    let config = ExperimentConfig::from_toml(&text).unwrap();
    let data = config.dataset.load(&dir).unwrap();
    (config, data)
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

fn within(elapsed: Duration, limit: Duration) -> bool {
    elapsed <= limit
}

// 1 --------------------------------------------------------------------------

fn gradients() -> Outcome {
    use Activation::{Linear, Relu, Softmax};
    const H: f64 = 1e-4;
    const TOL: f64 = 1e-4;
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut failures = Vec::new();
    let mut record = |name: String, r: evt_core::nn::GradCheckReport| {
        worst = worst.max(r.max_relative_error);
        checked += r.checked;
        if !r.passed() || r.checked == 0 {
            failures.push(name);
        }
    };
    for seed in 0..20u64 {
        for (out, loss_ce) in [(Relu, false), (Linear, false), (Softmax, false), (Softmax, true)] {
            for hidden in [Relu, Linear, Softmax] {
                let mut r = rng(1000 * seed + 17);
                let dims: Vec<usize> = (0..4).map(|_| r.random_range(2..=7)).collect();
                let net = random_net(&dims, &[hidden, hidden, out], 1, &mut r);
                assert!(net.param_count() <= 1000);
                let x = randn(6, dims[0], &mut r);
                let target = if loss_ce {
                    softmax_rows(randn(6, dims[3], &mut r).view())
                } else {
                    randn(6, dims[3], &mut r)
                };
                let loss = if loss_ce {
                    Loss::CrossEntropy { target: target.view() }
                } else {
                    Loss::Mse { target: target.view() }
                };
                let rep = gradient_check(&net, x.view(), &loss, H, TOL).unwrap();
                record(format!("{hidden:?}/{out:?}/{} seed {seed}", if loss_ce { "ce" } else { "mse" }), rep);
            }
        }

        let mut r = rng(7000 + seed);
        let primary = random_net(&[6, 5, 3, 5, 6], &[Relu, Linear, Relu, Linear], 1, &mut r);
        let heads = vec![random_net(&[3, 3], &[Softmax], 0, &mut r), random_net(&[3, 4], &[Softmax], 0, &mut r)];
        let x = randn(8, 6, &mut r);
        let targets = vec![
            HeadTarget { rows: (0..8).collect(), codes: softmax_rows(randn(8, 3, &mut r).view()) },
            HeadTarget { rows: vec![0, 3, 5, 6], codes: softmax_rows(randn(4, 4, &mut r).view()) },
        ];
        let eval = joint_objective(&primary, &heads, x.view(), &targets, 0.5).unwrap();
        let mut analytic = eval.primary.flatten();
        let mut params = primary.flat_params();
        for (g, h) in eval.heads.iter().zip(&heads) {
            analytic.extend(g.flatten());
            params.extend(h.flat_params());
        }
        let (mut p, mut hs) = (primary.clone(), heads.clone());
        let rep = check_gradients(&params, &analytic, H, TOL, |v| {
            let mut off = p.param_count();
            p.set_flat_params(&v[..off]).unwrap();
            for h in &mut hs {
                let len = h.param_count();
                h.set_flat_params(&v[off..off + len]).unwrap();
                off += len;
            }
            let value = joint_objective(&p, &hs, x.view(), &targets, 0.5).unwrap().total;
            Probe { value, pattern: p.relu_pattern(&p.forward(x.view()).unwrap()) }
        });
        record(format!("joint seed {seed}"), rep);
    }
    let elapsed = start.elapsed();
    let pass = failures.is_empty() && worst < TOL && within(elapsed, Duration::from_secs(30));
    outcome(
        pass,
        format!(
            "{checked} parameters checked, max relative error {worst:.2e}, {} failing cases, {:.1}s",
            failures.len(),
            elapsed.as_secs_f64()
        ),
    )
}

// 2 --------------------------------------------------------------------------

fn metric_oracles() -> Outcome {
    let mut r = rng(2);
    let mut acc_bad = 0;
    for _ in 0..100 {
        let k = r.random_range(1..=7);
        let n = r.random_range(1..=80);
        let truth: Vec<usize> = (0..n).map(|_| r.random_range(0..k)).collect();
        let pred: Vec<usize> = (0..n).map(|_| r.random_range(0..k)).collect();
        let expected = brute_force_matched(&pred, &truth, k) as f64 / n as f64;
        if clustering_accuracy(&pred, &truth).unwrap() != expected {
            acc_bad += 1;
        }
    }
    let mut nmi_err: f64 = 0.0;
    for _ in 0..100 {
        let n = r.random_range(10..300);
        let mut a: Vec<usize> = (0..n).map(|_| r.random_range(0..7)).collect();
        let mut b: Vec<usize> = (0..n).map(|_| r.random_range(0..7)).collect();
        a[..2].copy_from_slice(&[0, 1]);
        b[..2].copy_from_slice(&[0, 1]);
        nmi_err = nmi_err.max((nmi(&a, &b).unwrap() - nmi_direct(&a, &b)).abs());
    }
    let perms = permutations(6);
    let mut hung_bad = 0;
    for _ in 0..1000 {
        let cost: Vec<Vec<i64>> = (0..6).map(|_| (0..6).map(|_| r.random_range(0..1000)).collect()).collect();
        let best = perms.iter().map(|p| (0..6).map(|i| cost[i][p[i]]).sum::<i64>()).min().unwrap();
        if min_cost_assignment(&cost).1 != best {
            hung_bad += 1;
        }
    }
    outcome(
        acc_bad == 0 && nmi_err < 1e-9 && hung_bad == 0,
        format!("ACC mismatches {acc_bad}/100, max NMI error {nmi_err:.1e}, Hungarian mismatches {hung_bad}/1000"),
    )
}

// 3, 4 -----------------------------------------------------------------------

fn effectiveness() -> Outcome {
    let start = Instant::now();
    let (config, data) = load_config("blobs-true.toml");
    let out = run_experiment(&config, &data).unwrap();
    let r = &out.reports()[0];
    let elapsed = start.elapsed();
    outcome(
        r.delta_acc >= 0.10 && within(elapsed, Duration::from_secs(120)),
        format!(
            "ACC {} -> {} ({:+.2} points, need >= +10), {:.1}s",
            pct(r.baseline_acc),
            pct(r.post_acc),
            100.0 * r.delta_acc,
            elapsed.as_secs_f64()
        ),
    )
}

fn robustness() -> Outcome {
    let (base_config, _) = load_config("blobs-random.toml");
    let mut deltas = Vec::new();
    for seed in 0..5u64 {
        let mut config = base_config.clone();
        config.dataset = evt_core::experiment::DatasetSpec::NuisanceBlobs { seed };
        config.train.seed = seed;
        let data = config.dataset.load(Path::new(".")).unwrap();
        let out = run_experiment(&config, &data).unwrap();
        deltas.push(out.reports()[0].delta_acc);
    }
    let worst = deltas.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let shown: Vec<String> = deltas.iter().map(|d| format!("{:+.2}", 100.0 * d)).collect();
    outcome(worst <= 0.03, format!("ACC deltas [{}] points over 5 seeds, need |delta| <= 3", shown.join(", ")))
}

// 5, 6 -----------------------------------------------------------------------

/// Percent sweep, then the class sweep reusing its pretrained baseline (the
/// two configs differ only in evidence and sweep).
fn mnist() -> (Outcome, Outcome) {
    let start = Instant::now();
    let (percent_cfg, data) = load_config("mnist10k-percent.toml");
    let percent = run_experiment(&percent_cfg, &data).unwrap();
    let percent_time = start.elapsed();

    let (classes_cfg, _) = load_config("mnist10k-classes.toml");
    assert_eq!(classes_cfg.train, percent_cfg.train);
    assert_eq!(classes_cfg.architecture, percent_cfg.architecture);
    let classes = run_from_baseline(&classes_cfg, &data, percent.baseline.clone()).unwrap();
    (percent_trend(&percent, percent_time), class_trend(&classes))
}

fn accs(out: &ExperimentOutput) -> Vec<f64> {
    out.reports().iter().map(|r| r.post_acc).collect()
}

fn percent_trend(out: &ExperimentOutput, elapsed: Duration) -> Outcome {
    let acc = accs(out);
    let base = out.baseline_scores.acc;
    let slack = 0.02;
    let monotone = acc.windows(2).all(|w| w[0] <= w[1] + slack);
    let gain = acc[2] - base;
    outcome(
        monotone && gain >= 0.08 && within(elapsed, Duration::from_secs(15 * 60)),
        format!(
            "baseline {}, M=0.1N {}, M=0.3N {}, M=N {} (gain {:+.2}, need >= +8; monotone within 2: {monotone}), {:.0}s",
            pct(base),
            pct(acc[0]),
            pct(acc[1]),
            pct(acc[2]),
            100.0 * gain,
            elapsed.as_secs_f64()
        ),
    )
}

fn class_trend(out: &ExperimentOutput) -> Outcome {
    let acc = accs(out);
    let base = out.baseline_scores.acc;
    let close = acc[1..].iter().all(|a| (a - acc[0]).abs() <= 0.05);
    let above = acc[1..].iter().all(|&a| a >= base - 0.03);
    outcome(
        close && above,
        format!(
            "baseline {}, w=10 {}, w=9 {} ({:+.2}), w=8 {} ({:+.2}); need within 5 of w=10 and >= baseline - 3",
            pct(base),
            pct(acc[0]),
            pct(acc[1]),
            100.0 * (acc[1] - acc[0]),
            pct(acc[2]),
            100.0 * (acc[2] - acc[0])
        ),
    )
}

// 7 --------------------------------------------------------------------------

fn zero_lambda_identity() -> Outcome {
    let (mut config, data) = load_config("blobs-true.toml");
    config.train.lambda = 0.0;
    let dims = config.architecture.dims(data.features.ncols());
    let primary = evt_core::pipeline::pretrain_primary(data.features.view(), &dims, &config.train).unwrap().model;
    let source = labelset_evidence(&data.labels).unwrap();
    let codes = train_evidence_ae(&source, &config.train, derive_seed(0, "evidence-ae", 0)).unwrap();
    let state = TransferState::new(primary, vec![codes], 0).unwrap();
    let x = data.features.view();
    let mut worst: f64 = 0.0;
    let mut steps = 0;
    evidence_transfer_observed(x, &state, &config.train, |step, model| {
        let xb = x.select(ndarray::Axis(0), &step.batch);
        let direct = mse_loss(xb.view(), model.predict(xb.view()).unwrap().view()).unwrap();
        worst = worst.max((step.total - direct).abs() / direct.abs());
        steps += 1;
    })
    .unwrap();
    outcome(worst <= 1e-6, format!("{steps} batches, max relative difference {worst:.1e}"))
}

// 8 --------------------------------------------------------------------------

fn reproducibility() -> Outcome {
    let mut mismatched = Vec::new();
    let mut compared = 0;
    for name in ["blobs-true.toml", "blobs-random.toml"] {
        let (config, data) = load_config(name);
        let dirs: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
        for d in &dirs {
            run_experiment(&config, &data).unwrap().write(d.path()).unwrap();
        }
        let mut files: Vec<PathBuf> = std::fs::read_dir(dirs[0].path()).unwrap().map(|e| e.unwrap().path()).collect();
        files.sort();
        for f in files {
            let file_name = f.file_name().unwrap();
            compared += 1;
            if std::fs::read(&f).unwrap() != std::fs::read(dirs[1].path().join(file_name)).unwrap() {
                mismatched.push(format!("{name}:{}", file_name.to_string_lossy()));
            }
        }
    }
    outcome(
        mismatched.is_empty() && compared >= 8,
        format!("{compared} output files compared, {} differ {mismatched:?}", mismatched.len()),
    )
}

// 9 --------------------------------------------------------------------------

fn io_round_trips() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut r = rng(9);
    let mut bad = Vec::new();
    for i in 0..100 {
        let m = random_matrix(&mut r);
        let bytes = encode_matrix(&m).unwrap();
        let p = dir.path().join("m.evtm");
        save_matrix(&m, &p).unwrap();
        let same = |a: &ndarray::Array2<f32>| a.dim() == m.dim() && a.iter().zip(&m).all(|(x, y)| x.to_bits() == y.to_bits());
        if !same(&decode_matrix(&bytes).unwrap()) || !same(&load_matrix(&p).unwrap()) {
            bad.push(format!("matrix {i}"));
        }

        let e = random_evidence(&mut r);
        let p = dir.path().join("e.evtc");
        save_evidence(&e, &p).unwrap();
        if decode_evidence(&encode_evidence(&e).unwrap()).unwrap() != e || load_evidence(&p).unwrap() != e {
            bad.push(format!("evidence {i}"));
        }

        let net = random_network(&mut r);
        let bytes = encode_checkpoint(&net, i);
        let p = dir.path().join("c.evtk");
        save_checkpoint(&net, i, &p).unwrap();
        let back = decode_checkpoint(&bytes).unwrap();
        let reloaded = load_checkpoint(&p).unwrap();
        if encode_checkpoint(&back.model, back.fingerprint) != bytes
            || encode_checkpoint(&reloaded.model, reloaded.fingerprint) != bytes
        {
            bad.push(format!("checkpoint {i}"));
        }
    }
    let mut rejected = 0;
    for (class, images, labels) in idx_faults() {
        match load_idx_bytes(dir.path(), &images, &labels) {
            Err(e) if fault_matches(class, &e) => rejected += 1,
            other => bad.push(format!("{class}: {:?}", other.map(|d| d.len()))),
        }
    }
    outcome(
        bad.is_empty() && rejected == 4,
        format!("300 payloads round-tripped, {rejected}/4 IDX fault classes rejected, problems {bad:?}"),
    )
}

// ----------------------------------------------------------------------------

const NAMES: [&str; 9] = [
    "gradient correctness",
    "metric oracles",
    "effectiveness",
    "robustness",
    "percent-incompleteness trend",
    "class-incompleteness trend",
    "zero-lambda identity",
    "reproducibility",
    "I/O round-trips",
];

fn main() {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |n: usize| selected.is_empty() || selected.contains(&n);
    let strict = std::env::var("EVT_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");

    let guarded = |f: &dyn Fn() -> Outcome| catch_unwind(AssertUnwindSafe(f)).map_err(panic_message);
    let single: [(usize, &dyn Fn() -> Outcome); 7] = [
        (1, &gradients),
        (2, &metric_oracles),
        (3, &effectiveness),
        (4, &robustness),
        (7, &zero_lambda_identity),
        (8, &reproducibility),
        (9, &io_round_trips),
    ];
    let mut results: Vec<(usize, Result<Outcome, String>)> =
        single.iter().filter(|(n, _)| wanted(*n)).map(|&(n, f)| (n, guarded(f))).collect();
    if wanted(5) || wanted(6) {
        let (five, six) = match catch_unwind(mnist) {
            Ok((five, six)) => (Ok(five), Ok(six)),
            Err(p) => {
                let msg = panic_message(p);
                (Err(msg.clone()), Err(msg))
            }
        };
        results.extend([(5, five), (6, six)].into_iter().filter(|(n, _)| wanted(*n)));
    }

    results.sort_by_key(|(n, _)| *n);
    println!();
    let (mut failed, mut errored) = (0, 0);
    for (n, result) in &results {
        let name = NAMES[n - 1];
        match result {
            Ok(o) => {
                failed += usize::from(!o.pass);
                println!("criterion {n} ({name}): {} | {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
            }
            Err(msg) => {
                errored += 1;
                println!("criterion {n} ({name}): ERROR | {msg}");
            }
        }
    }
    println!("\n{} passed, {failed} failed, {errored} errored", results.len() - failed - errored);
    if errored > 0 || (strict && failed > 0) {
        std::process::exit(1);
    }
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<String>()
        .cloned()
        .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "panic".into())
}
