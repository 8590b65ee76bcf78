//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use copa::eval::{set_aware_accuracy, stratified_kfold, stratified_split, WinnerSet};
use copa::features::{extract_features, feature_catalog, Complexity};
use copa::instances::{parse_instance, Instance, ProblemKind};
use copa::llmio::{ActivationMatrix, MockActivationConfig, MockAnswers, MockProvider};
use copa::matrix::Matrix;
use copa::pipeline::{
    emit_report, load_datasets, Experiment, ExperimentKind, InputSource, ProviderConfig, RunConfig,
    Stage,
};
use copa::pooling::{pool, PoolingStrategy};
use copa::probes::{
    predict_classifier, predict_regressor, train_classifier, train_regressor, Booster,
    ClassifierKind, GbdtConfig, HistogramBooster, Mlp, MlpTargets, RegressorKind, TrainConfig,
};
use copa::render::{render_standard, Representation};
use copa::synth::{self, SynthOptions};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE) || a == b
}

fn fuzz_opts(rng: &mut ChaCha8Rng) -> SynthOptions {
    SynthOptions {
        max_elements: rng.random_range(1..=30),
        degenerate: rng.random_bool(0.5),
    }
}

// Brute-force features computed straight from the standard text.
fn oracle(kind: ProblemKind, text: &str) -> Vec<Option<f64>> {
    let rows: Vec<Vec<u64>> = text
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('c'))
        .map(|l| {
            l.split_whitespace()
                .filter_map(|t| t.parse().ok())
                .collect()
        })
        .collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    match kind {
        ProblemKind::Gcp => {
            let n = rows[0][0] as usize;
            let mut adj = vec![vec![false; n + 1]; n + 1];
            for e in &rows[1..] {
                adj[e[0] as usize][e[1] as usize] = true;
                adj[e[1] as usize][e[0] as usize] = true;
            }
            let deg: Vec<f64> = (1..=n)
                .map(|u| (1..=n).filter(|&v| adj[u][v]).count() as f64)
                .collect();
            let mut m = 0usize;
            for u in 1..=n {
                for v in u + 1..=n {
                    m += usize::from(adj[u][v]);
                }
            }
            let (nf, mf) = (n as f64, m as f64);
            vec![
                Some(nf),
                Some(mf),
                Some(deg[0]),
                (n > 1).then(|| mf / (nf * (nf - 1.0) / 2.0)),
                (m > 0).then(|| nf / mf),
                Some(mf / nf),
                Some(mean(&deg)),
                Some(max(&deg)),
                Some(min(&deg)),
            ]
        }
        ProblemKind::Bpp => {
            let w: Vec<f64> = rows[1..].iter().map(|r| r[0] as f64).collect();
            vec![
                Some(rows[0][1] as f64),
                Some(w.len() as f64),
                Some(max(&w)),
                Some(min(&w)),
                Some(mean(&w)),
            ]
        }
        ProblemKind::Jssp => {
            let d: Vec<f64> = rows[1..]
                .iter()
                .flat_map(|r| r.chunks(2).map(|p| p[1] as f64))
                .collect();
            vec![
                Some(rows[0][0] as f64),
                Some(rows[0][1] as f64),
                Some(d.len() as f64),
                Some(max(&d)),
                Some(min(&d)),
                Some(mean(&d)),
            ]
        }
        ProblemKind::Kp => {
            let p: Vec<f64> = rows[1..].iter().map(|r| r[0] as f64).collect();
            let w: Vec<f64> = rows[1..].iter().map(|r| r[1] as f64).collect();
            let eff: Vec<f64> = p.iter().zip(&w).map(|(a, b)| a / b).collect();
            vec![
                Some(rows[0][1] as f64),
                Some(max(&w)),
                Some(min(&w)),
                Some(max(&p)),
                Some(min(&p)),
                Some(w[0]),
                Some(p[0]),
                Some(eff[0]),
                Some(mean(&w)),
                Some(mean(&p)),
                Some(mean(&eff)),
            ]
        }
    }
}

fn criterion_1() -> Outcome {
    let mut checked = 0;
    for kind in ProblemKind::ALL {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        for i in 0..500 {
            let opts = fuzz_opts(&mut rng);
            let inst = synth::random_instance(kind, &format!("x{i}"), &mut rng, opts);
            let got = extract_features(&inst);
            let want = oracle(kind, &render_standard(&inst).text);
            for (spec, (g, w)) in feature_catalog(kind)
                .iter()
                .zip(got.values.iter().zip(&want))
            {
                let ok = match (g, w) {
                    (Some(a), Some(b)) => rel_close(*a, *b, 1e-12),
                    (None, None) => true,
                    _ => false,
                };
                ensure(ok, || {
                    format!(
                        "{kind} {} on instance {i}: {g:?} vs oracle {w:?}",
                        spec.name
                    )
                })?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} feature values match the oracle"))
}

// A valid file with cosmetic noise: extra spaces, blank lines, comments.
fn noisy_text(kind: ProblemKind, inst: &Instance, rng: &mut ChaCha8Rng) -> String {
    let canonical = render_standard(inst).text;
    let mut lines: Vec<String> = canonical.lines().map(str::to_owned).collect();
    if kind == ProblemKind::Gcp {
        lines[1..].shuffle(rng);
        let at = rng.random_range(0..=lines.len());
        lines.insert(at, "c fuzzed comment".into());
    }
    let mut out = String::new();
    for l in lines {
        if rng.random_bool(0.1) {
            out.push('\n');
        }
        let sep = if rng.random_bool(0.3) { "  \t" } else { " " };
        out.push_str(&l.split(' ').collect::<Vec<_>>().join(sep));
        if rng.random_bool(0.2) {
            out.push_str("   ");
        }
        out.push('\n');
    }
    out
}

fn replace_token(text: &str, line: usize, tok: usize, value: String) -> String {
    let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
    let mut toks: Vec<String> = lines[line].split_whitespace().map(str::to_owned).collect();
    toks[tok] = value;
    lines[line] = toks.join(" ");
    lines.join("\n") + "\n"
}

fn mutations(kind: ProblemKind, inst: &Instance, rng: &mut ChaCha8Rng) -> Vec<String> {
    let text = render_standard(inst).text;
    let header: Vec<u64> = text
        .lines()
        .next()
        .unwrap()
        .split_whitespace()
        .filter_map(|t| t.parse().ok())
        .collect();
    let body_lines = text.lines().count() - 1;
    let mut out = Vec::new();
    match kind {
        ProblemKind::Gcp => {
            let (n, m) = (header[0], header[1]);
            out.push(replace_token(&text, 0, 3, (m + 1).to_string()));
            if m > 0 {
                out.push(replace_token(&text, 0, 3, (m - 1).to_string()));
                let line = rng.random_range(1..=body_lines);
                let tok = rng.random_range(1..=2);
                out.push(replace_token(&text, line, tok, (n + 1).to_string()));
                out.push(replace_token(&text, line, tok, "0".into()));
            }
        }
        ProblemKind::Bpp | ProblemKind::Kp => {
            let n = header[0];
            out.push(replace_token(&text, 0, 0, (n + 1).to_string()));
            out.push(replace_token(&text, 0, 0, (n - 1).to_string()));
        }
        ProblemKind::Jssp => {
            let (jobs, machines) = (header[0], header[1]);
            out.push(replace_token(&text, 0, 0, (jobs + 1).to_string()));
            out.push(replace_token(&text, 0, 0, (jobs - 1).to_string()));
            out.push(replace_token(&text, 0, 1, (machines + 1).to_string()));
            let line = rng.random_range(1..=body_lines);
            let pair = rng.random_range(0..machines as usize);
            out.push(replace_token(&text, line, 2 * pair, machines.to_string()));
        }
    }
    out
}

fn criterion_2() -> Outcome {
    let (mut round_trips, mut mutated) = (0, 0);
    for kind in ProblemKind::ALL {
        let mut rng = ChaCha8Rng::seed_from_u64(202);
        for i in 0..1000 {
            let opts = fuzz_opts(&mut rng);
            let inst = synth::random_instance(kind, &format!("f{i}"), &mut rng, opts);
            let text = noisy_text(kind, &inst, &mut rng);
            let first = parse_instance(kind, "f", &text)
                .map_err(|e| format!("{kind} file {i} rejected: {e}\n{text}"))?;
            let again = parse_instance(kind, "f", &render_standard(&first).text)
                .map_err(|e| format!("{kind} re-parse {i}: {e}"))?;
            ensure(first == again, || format!("{kind} round trip {i} differs"))?;
            ensure(
                render_standard(&first).text == render_standard(&inst).text,
                || format!("{kind} file {i} changed content"),
            )?;
            round_trips += 1;
            for bad in mutations(kind, &inst, &mut rng) {
                ensure(parse_instance(kind, "f", &bad).is_err(), || {
                    format!("{kind} mutation accepted:\n{bad}")
                })?;
                mutated += 1;
            }
        }
    }
    Ok(format!(
        "{round_trips} round trips, {mutated}/{mutated} mutations rejected"
    ))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for case in 0..1000 {
        let t = rng.random_range(1..=64);
        let d = rng.random_range(1..=128);
        let data: Vec<f32> = (0..t * d)
            .map(|_| rng.random_range(-100.0f32..100.0))
            .collect();
        let m = ActivationMatrix::new("m", Representation::Standard, t, d, data.clone()).unwrap();
        let mean = pool(&m, PoolingStrategy::Mean).unwrap().vector;
        let max = pool(&m, PoolingStrategy::Max).unwrap().vector;
        let last = pool(&m, PoolingStrategy::Last).unwrap().vector;
        for j in 0..d {
            let col: Vec<f64> = (0..t).map(|r| f64::from(data[r * d + j])).collect();
            let naive_mean = col.iter().sum::<f64>() / t as f64;
            let naive_max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            ensure(
                (mean[j] - naive_mean).abs() <= 1e-12 * naive_mean.abs().max(1.0),
                || format!("mean case {case} col {j}"),
            )?;
            ensure(max[j] == naive_max, || format!("max case {case} col {j}"))?;
            ensure(last[j] == col[t - 1], || {
                format!("last case {case} col {j}")
            })?;
        }
        // Row permutation.
        let mut order: Vec<usize> = (0..t).collect();
        order.shuffle(&mut rng);
        let permuted: Vec<f32> = order
            .iter()
            .flat_map(|&r| data[r * d..(r + 1) * d].to_vec())
            .collect();
        let p = ActivationMatrix::new("m", Representation::Standard, t, d, permuted).unwrap();
        let pmean = pool(&p, PoolingStrategy::Mean).unwrap().vector;
        ensure(
            pmean
                .iter()
                .zip(&mean)
                .all(|(a, b)| (a - b).abs() <= 1e-12 * b.abs().max(1.0)),
            || format!("mean not permutation invariant, case {case}"),
        )?;
        ensure(
            pool(&p, PoolingStrategy::Max).unwrap().vector == max,
            || format!("max not permutation invariant, case {case}"),
        )?;
    }
    let a = ActivationMatrix::new(
        "a",
        Representation::Standard,
        2,
        2,
        vec![1.0, 2.0, 3.0, 4.0],
    )
    .unwrap();
    let b = ActivationMatrix::new(
        "b",
        Representation::Standard,
        2,
        2,
        vec![3.0, 4.0, 1.0, 2.0],
    )
    .unwrap();
    ensure(
        pool(&a, PoolingStrategy::Last).unwrap().vector
            != pool(&b, PoolingStrategy::Last).unwrap().vector,
        || "last pooling ignored order".into(),
    )?;
    Ok("1000 matrices agree with the naive reference; last pooling is order-sensitive".into())
}

fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::new(
        rows,
        cols,
        (0..rows * cols)
            .map(|_| rng.random_range(-5.0..5.0))
            .collect(),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    // Planted sparse linear target.
    let x = random_matrix(120, 16, &mut rng);
    let mut w = vec![0.0; 16];
    for j in [1, 4, 9, 13] {
        w[j] = rng.random_range(-10.0..10.0);
    }
    let y: Vec<f64> = x
        .iter_rows()
        .map(|r| 2.5 + r.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    let train: Vec<usize> = (0..84).collect();
    let test: Vec<usize> = (84..120).collect();
    let ytr: Vec<f64> = train.iter().map(|&i| y[i]).collect();
    let model = train_regressor(
        RegressorKind::Linear,
        &x.select_rows(&train),
        &ytr,
        &TrainConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    let pred = predict_regressor(&model, &x.select_rows(&test)).map_err(|e| e.to_string())?;
    let worst = pred
        .iter()
        .zip(&test)
        .map(|(p, &i)| (p - y[i]).abs() / y[i].abs().max(1e-12))
        .fold(0.0, f64::max);
    ensure(worst <= 1e-6, || {
        format!("linear held-out relative error {worst:e}")
    })?;

    // Separable two-class labels from the sign of a planted coordinate.
    let xs = random_matrix(200, 6, &mut rng);
    let labels: Vec<&str> = xs
        .iter_rows()
        .map(|r| if r[3] > 0.0 { "B" } else { "A" })
        .collect();
    let clf = train_classifier(
        ClassifierKind::Logistic,
        &xs,
        &labels,
        &TrainConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    let got = predict_classifier(&clf, &xs).map_err(|e| e.to_string())?;
    let acc = got.iter().zip(&labels).filter(|(a, b)| a == b).count() as f64 / labels.len() as f64;
    ensure(acc >= 0.99, || format!("logistic training accuracy {acc}"))?;

    // Gradient check on a 10x8 batch.
    let xb = random_matrix(10, 8, &mut rng);
    let yb: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut net = Mlp::new(8, 128, 1, &mut rng);
    let (_, grad) = net.loss_and_grad(&xb, MlpTargets::Real(&yb));
    let mut worst_grad: f64 = 0.0;
    let mut kinked = 0;
    for j in 0..net.num_params() {
        let orig = net.params[j];
        net.params[j] = orig + 1e-4;
        let plus = net.loss_and_grad(&xb, MlpTargets::Real(&yb)).0;
        let pattern_plus = relu_pattern(&net, &xb);
        net.params[j] = orig - 1e-4;
        let minus = net.loss_and_grad(&xb, MlpTargets::Real(&yb)).0;
        let pattern_minus = relu_pattern(&net, &xb);
        net.params[j] = orig;
        // A central difference across a ReLU hinge is not a derivative.
        if pattern_plus != pattern_minus {
            kinked += 1;
            continue;
        }
        let fd = (plus - minus) / 2e-4;
        let scale = fd.abs().max(grad[j].abs());
        if scale > 1e-6 {
            worst_grad = worst_grad.max((fd - grad[j]).abs() / scale);
        }
    }
    ensure(kinked * 100 < net.num_params(), || {
        format!(
            "{kinked} of {} parameters straddle a ReLU hinge",
            net.num_params()
        )
    })?;
    ensure(worst_grad <= 1e-5, || {
        format!("MLP gradient relative error {worst_grad:e}")
    })?;

    // GBDT training loss.
    let xg = random_matrix(300, 5, &mut rng);
    let yg: Vec<f64> = xg
        .iter_rows()
        .map(|r| r[0].sin() * 3.0 + r[1] * r[2] + rng.random_range(-0.5..0.5))
        .collect();
    let ens = HistogramBooster.fit_regression(&xg, &yg, &GbdtConfig::default());
    ensure(ens.train_loss.len() == 200, || "expected 200 rounds".into())?;
    let increases = ens.train_loss.windows(2).filter(|w| w[1] > w[0]).count();
    ensure(increases == 0, || {
        format!("training MSE increased in {increases} rounds")
    })?;
    Ok(format!(
        "linear err {worst:.1e}, logistic acc {acc:.3}, grad err {worst_grad:.1e} ({kinked} hinge params skipped), gbdt MSE {:.3} -> {:.3}",
        ens.train_loss[0],
        ens.train_loss[199]
    ))
}

fn relu_pattern(net: &Mlp, x: &Matrix) -> Vec<bool> {
    let (d, h) = (net.inputs, net.hidden);
    let mut out = Vec::with_capacity(x.rows() * h);
    for row in x.iter_rows() {
        for k in 0..h {
            let w = &net.params[k * d..(k + 1) * d];
            let pre = net.params[h * d + k] + w.iter().zip(row).map(|(a, b)| a * b).sum::<f64>();
            out.push(pre > 0.0);
        }
    }
    out
}

fn random_set(rng: &mut ChaCha8Rng, algs: &[String]) -> BTreeSet<String> {
    loop {
        let s: BTreeSet<String> = algs
            .iter()
            .filter(|_| rng.random_bool(0.4))
            .cloned()
            .collect();
        if !s.is_empty() {
            return s;
        }
    }
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let algs: Vec<String> = (0..5).map(|i| format!("A{i}")).collect();
    let sets: Vec<BTreeSet<String>> = (0..10_000).map(|_| random_set(&mut rng, &algs)).collect();
    let preds: Vec<String> = (0..10_000)
        .map(|_| algs[rng.random_range(0..algs.len())].clone())
        .collect();
    let mut hits = 0usize;
    for (p, s) in preds.iter().zip(&sets) {
        for member in s {
            if member == p {
                hits += 1;
            }
        }
    }
    let acc = set_aware_accuracy(&preds, &sets).map_err(|e| e.to_string())?;
    ensure(acc == hits as f64 / 10_000.0, || {
        format!("accuracy {acc} vs brute force {hits}/10000")
    })?;
    let full: Vec<BTreeSet<String>> = vec![algs.iter().cloned().collect(); 10_000];
    let tied = set_aware_accuracy(&preds, &full).map_err(|e| e.to_string())?;
    ensure(tied == 1.0, || format!("all-tied accuracy {tied}"))?;
    Ok(format!(
        "brute force agrees ({hits}/10000); all-tied gives 1.0"
    ))
}

fn criterion_6() -> Outcome {
    let algs: Vec<String> = ["A", "B", "C"].iter().map(|s| s.to_string()).collect();
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(20..120);
        let sets: Vec<WinnerSet> = (0..n)
            .map(|i| WinnerSet {
                instance_name: format!("i{i}"),
                set: random_set(&mut rng, &algs),
            })
            .collect();
        let mut strata: BTreeMap<Vec<String>, Vec<usize>> = BTreeMap::new();
        for (i, s) in sets.iter().enumerate() {
            strata.entry(s.key()).or_default().push(i);
        }

        let split = stratified_split(&sets, 0.7, seed).map_err(|e| e.to_string())?;
        ensure(
            split.test.len() == n && split == stratified_split(&sets, 0.7, seed).unwrap(),
            || format!("holdout seed {seed}: determinism"),
        )?;
        for members in strata.values() {
            let train = members.iter().filter(|&&i| !split.test[i]).count() as f64;
            let target = 0.7 * members.len() as f64;
            if members.len() == 1 {
                ensure(train == 1.0, || {
                    format!("holdout seed {seed}: singleton stratum in test")
                })?;
            } else {
                ensure((train - target).abs() <= 1.0, || {
                    format!("holdout seed {seed}: {train} train vs {target}")
                })?;
            }
        }
        for (i, l) in split.labels.iter().enumerate() {
            ensure(sets[i].set.contains(l), || {
                format!("holdout seed {seed}: label outside winner set")
            })?;
        }

        let folds = stratified_kfold(&sets, 5, seed).map_err(|e| e.to_string())?;
        let again = stratified_kfold(&sets, 5, seed).unwrap();
        ensure(
            serde_json::to_vec(&folds).unwrap() == serde_json::to_vec(&again).unwrap(),
            || format!("kfold seed {seed}: not byte-identical"),
        )?;
        let mut times_in_test = vec![0; n];
        for f in &folds {
            for i in f.test_indices() {
                times_in_test[i] += 1;
            }
        }
        for members in strata.values() {
            let eligible = members.len() >= 5;
            for &i in members {
                let want = usize::from(eligible);
                ensure(times_in_test[i] == want, || {
                    format!(
                        "kfold seed {seed}: instance {i} in {} test folds",
                        times_in_test[i]
                    )
                })?;
            }
            if eligible {
                let per_fold: Vec<usize> = folds
                    .iter()
                    .map(|f| members.iter().filter(|&&i| f.test[i]).count())
                    .collect();
                let spread = per_fold.iter().max().unwrap() - per_fold.iter().min().unwrap();
                ensure(spread <= 1, || {
                    format!("kfold seed {seed}: per-stratum fold counts {per_fold:?}")
                })?;
            }
        }
    }
    // The pipeline shares one fold assignment across classifiers and sources.
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = mock_config(dir.path(), 60, &[ProblemKind::Gcp]);
    let datasets = load_datasets(&cfg).map_err(|e| e.to_string())?;
    let provider = MockProvider::new(
        MockAnswers::Regex,
        MockActivationConfig::default(),
        &all_instances(&datasets),
    );
    let report = Experiment::new(&cfg, &datasets, Some(&provider))
        .run(&[Stage::AlgorithmSelection])
        .map_err(|e| e.to_string())?;
    ensure(report.splits.len() == 1, || {
        format!("{} fold assignments exported", report.splits.len())
    })?;
    let sets: Vec<WinnerSet> =
        copa::eval::winner_sets(datasets[0].performance.as_ref().unwrap(), cfg.tie_tolerance)
            .unwrap();
    let seed = stable_problem_seed(&cfg, ProblemKind::Gcp);
    let expected = stratified_kfold(&sets, cfg.folds, seed).unwrap();
    ensure(
        serde_json::to_vec(&report.splits[0].folds).unwrap()
            == serde_json::to_vec(&expected).unwrap(),
        || "pipeline folds differ from the shared assignment".into(),
    )?;
    Ok("100 seeds satisfy partition, balance and determinism; pipeline folds are shared".into())
}

fn stable_problem_seed(cfg: &RunConfig, kind: ProblemKind) -> u64 {
    // Mirrors the per-problem seed derivation: FNV-1a over (seed, problem code).
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    for part in [&cfg.seed.to_le_bytes()[..], kind.code().as_bytes()] {
        for &b in part {
            h ^= u64::from(b);
            h = h.wrapping_mul(PRIME);
        }
        h ^= 0xff;
        h = h.wrapping_mul(PRIME);
    }
    h
}

fn all_instances(datasets: &[copa::pipeline::Dataset]) -> Vec<Instance> {
    datasets
        .iter()
        .flat_map(|d| d.instances.iter().cloned())
        .collect()
}

fn mock_config(dir: &Path, per_problem: usize, problems: &[ProblemKind]) -> RunConfig {
    let data = dir.join("data");
    synth::write_synthetic_corpus(&data, per_problem, 7).expect("corpus written");
    RunConfig {
        problems: problems.to_vec(),
        data_dir: data,
        output_dir: dir.join("out"),
        regressors: vec![RegressorKind::Linear],
        classifiers: vec![
            ClassifierKind::MostFrequent,
            ClassifierKind::Logistic,
            ClassifierKind::Gbdt,
        ],
        selection_sources: vec![InputSource::Embeddings],
        seed: 11,
        ..RunConfig::default()
    }
}

fn criterion_7() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = mock_config(dir.path(), 50, &ProblemKind::ALL);
    let datasets = load_datasets(&cfg).map_err(|e| e.to_string())?;
    let provider = MockProvider::new(
        MockAnswers::Regex,
        MockActivationConfig::default(),
        &all_instances(&datasets),
    );
    let report = Experiment::new(&cfg, &datasets, Some(&provider))
        .run(&[Stage::DirectQuerying])
        .map_err(|e| e.to_string())?;
    let mut summary = Vec::new();
    for kind in ProblemKind::ALL {
        let eq = report
            .select(ExperimentKind::DirectQuerying)
            .find(|r| {
                r.problem == kind
                    && r.representation == Some(Representation::Standard)
                    && r.tier == Some(Complexity::Direct)
                    && r.metric == "equals"
            })
            .and_then(|r| r.value);
        ensure(eq == Some(1.0), || {
            format!("{kind} direct-tier Equals on standard = {eq:?}")
        })?;
        summary.push(format!("{kind}=1.00"));
    }
    let written = emit_report(&report, &cfg.output_dir).map_err(|e| e.to_string())?;
    let table = fs::read_to_string(cfg.output_dir.join("direct_querying.csv"))
        .map_err(|e| e.to_string())?;
    let header: Vec<&str> = table
        .lines()
        .next()
        .unwrap_or_default()
        .split(',')
        .collect();
    ensure(header.len() == 14, || {
        format!("direct-querying table header has {} columns", header.len())
    })?;
    ensure(table.lines().count() == 1 + 4 * 3, || {
        "direct-querying table should hold 12 rows".into()
    })?;
    let gcp_std = table
        .lines()
        .find(|l| l.starts_with("GCP,standard"))
        .unwrap_or_default();
    ensure(gcp_std.split(',').nth(3) == Some("---"), || {
        "GCP low-effort MAE should be ---".into()
    })?;
    Ok(format!(
        "direct-tier Equals on standard: {}; {} files written, 12 metric columns",
        summary.join(" "),
        written.len()
    ))
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = mock_config(dir.path(), 200, &ProblemKind::ALL);
    let datasets = load_datasets(&cfg).map_err(|e| e.to_string())?;
    let provider = MockProvider::new(
        MockAnswers::Regex,
        MockActivationConfig::default(),
        &all_instances(&datasets),
    );
    let report = Experiment::new(&cfg, &datasets, Some(&provider))
        .run(&[Stage::FeatureProbing, Stage::AlgorithmSelection])
        .map_err(|e| e.to_string())?;
    ensure(report.failures.is_empty(), || {
        format!("failures: {:?}", report.failures)
    })?;
    let mut worst_w1: f64 = 1.0;
    for r in report
        .select(ExperimentKind::FeatureProbing)
        .filter(|r| r.metric == "within_1pct" && r.feature.is_some())
    {
        let v = r
            .value
            .ok_or_else(|| format!("missing within_1pct for {:?}", r.feature))?;
        worst_w1 = worst_w1.min(v);
        ensure(v >= 0.95, || {
            format!(
                "{} {:?} {:?} {:?}: within-1% {v}",
                r.problem, r.representation, r.pooling, r.feature
            )
        })?;
    }
    let mut margins = Vec::new();
    for kind in ProblemKind::ALL {
        let acc = |model: &str| -> Vec<((Option<Representation>, Option<PoolingStrategy>), f64)> {
            report
                .select(ExperimentKind::AlgorithmSelection)
                .filter(|r| {
                    r.problem == kind && r.fold.is_none() && r.model.as_deref() == Some(model)
                })
                .map(|r| ((r.representation, r.pooling), r.value.unwrap_or(f64::NAN)))
                .collect()
        };
        let base = acc("most_frequent");
        for model in ["logistic", "gbdt"] {
            for ((cell, a), (_, b)) in acc(model).iter().zip(&base) {
                let margin = a - b;
                margins.push(margin);
                ensure(margin >= 0.15, || {
                    format!("{kind} {model} {cell:?}: {a:.3} vs baseline {b:.3}")
                })?;
            }
        }
    }
    let min_margin = margins.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(format!("worst within-1% {worst_w1:.3}; smallest classifier margin over most_frequent {min_margin:.3} across {} cells", margins.len()))
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = dir.path().join("data");
    synth::write_synthetic_corpus(&data, 40, 3).map_err(|e| e.to_string())?;
    let config = format!(
        r#"
data_dir = "{}"
output_dir = "unused"
seed = 5
replicates = 2

[provider]
type = "mock"
answers = "regex"

[train.mlp]
epochs = 15

[train.gbdt]
n_trees = 25
"#,
        data.display()
    );
    let cfg_path = dir.path().join("run.toml");
    fs::write(&cfg_path, config).map_err(|e| e.to_string())?;
    let stages = [
        Stage::DirectQuerying,
        Stage::FeatureProbing,
        Stage::AlgorithmSelection,
    ];
    let mut outputs = Vec::new();
    for run in 0..2 {
        let cfg = RunConfig::load(&cfg_path).map_err(|e| e.to_string())?;
        ensure(matches!(cfg.provider, ProviderConfig::Mock { .. }), || {
            "mock provider expected".into()
        })?;
        let report = copa::pipeline::run_stages(&cfg, &stages).map_err(|e| e.to_string())?;
        let out = dir.path().join(format!("out{run}"));
        let files = emit_report(&report, &out).map_err(|e| e.to_string())?;
        let contents: BTreeMap<String, Vec<u8>> = files
            .iter()
            .map(|p| {
                (
                    p.file_name().unwrap().to_string_lossy().into_owned(),
                    fs::read(p).unwrap(),
                )
            })
            .collect();
        outputs.push(contents);
    }
    ensure(outputs[0].keys().eq(outputs[1].keys()), || {
        "different file sets".into()
    })?;
    for (name, bytes) in &outputs[0] {
        ensure(&outputs[1][name] == bytes, || {
            format!("{name} differs between runs")
        })?;
    }
    Ok(format!(
        "{} report files byte-identical across two runs",
        outputs[0].len()
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 9] = [
        (
            "feature-oracle equivalence",
            criterion_1,
            Duration::from_secs(10),
        ),
        (
            "parser/render round-trip",
            criterion_2,
            Duration::from_secs(30),
        ),
        ("pooling correctness", criterion_3, Duration::MAX),
        ("probe recovery", criterion_4, Duration::from_secs(60)),
        ("set-aware accuracy oracle", criterion_5, Duration::MAX),
        ("split laws", criterion_6, Duration::MAX),
        (
            "mock direct querying",
            criterion_7,
            Duration::from_secs(120),
        ),
        (
            "mock probing and selection",
            criterion_8,
            Duration::from_secs(300),
        ),
        ("determinism", criterion_9, Duration::MAX),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if elapsed > *budget => {
                Err(format!("{msg}; took {elapsed:.1?}, budget {budget:.0?}"))
            }
            other => other,
        };
        match outcome {
            Ok(msg) => println!("criterion {} [{name}]: PASS ({msg}; {elapsed:.1?})", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {} [{name}]: FAIL ({msg}; {elapsed:.1?})", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 9 acceptance criteria passed");
}
