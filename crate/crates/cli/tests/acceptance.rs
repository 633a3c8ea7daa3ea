//! Acceptance run: one PASS/FAIL line per criterion, details indented below.
//!
//! `HWPD_ACCEPT_SCALE` (default 1.0) scales the end-to-end cohort size.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{LN_2, PI};
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use hwpd_core::classify::grid::{grid_search_loocv, loocv_scores, FoldEvent, FoldObserver, Stage};
use hwpd_core::classify::knn::KnnModel;
use hwpd_core::classify::mlp::{MlpConfig, MlpModel};
use hwpd_core::classify::svm::{pairwise_sq, rbf_kernel_from_sq, solve_dual, train_svm};
use hwpd_core::classify::{train_classifier, ClassifierKind, ClassifierParams, GridSpec, LabeledSet};
use hwpd_core::eval::{roc_auc, run_protocol, AuditCounts, EvaluationReport, Experiment, ProtocolConfig, ProvenanceAudit};
use hwpd_core::features::{read_matrix_csv, FeatureManifest, FeatureSelection, FeatureVector};
use hwpd_core::neuromotor::extract::{extract_sigma_lognormal, SigmaLognormalConfig};
use hwpd_core::nonlinear::lz::lz_norm_bits;
use hwpd_core::nonlinear::{correlation_dimension, decompose, embed_delay, entropy, hurst_rs, largest_lyapunov, PhasePoints};
use hwpd_core::signal::{Group, TaskId};
use hwpd_core::synth::well_separated_lognormals;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Outcome of one sub-check.
struct Line {
    pass: bool,
    text: String,
}

fn line(pass: bool, text: String) -> Line {
    Line { pass, text }
}

fn within(name: &str, value: f64, target: f64, tol: f64) -> Line {
    line((value - target).abs() <= tol, format!("{name} = {value:.4} (target {target} ± {tol})"))
}

fn runtime(limit: Duration, started: Instant) -> Line {
    let secs = started.elapsed().as_secs_f64();
    line(started.elapsed() < limit, format!("runtime {secs:.1} s (limit {} s)", limit.as_secs()))
}

// ---------------------------------------------------------------- reference systems

fn lorenz_field(s: [f64; 3]) -> [f64; 3] {
    [10.0 * (s[1] - s[0]), s[0] * (28.0 - s[2]) - s[1], s[0] * s[1] - 8.0 / 3.0 * s[2]]
}

fn rk4(s: [f64; 3], h: f64) -> [f64; 3] {
    let add = |a: [f64; 3], k: [f64; 3], f: f64| [a[0] + f * k[0], a[1] + f * k[1], a[2] + f * k[2]];
    let k1 = lorenz_field(s);
    let k2 = lorenz_field(add(s, k1, h / 2.0));
    let k3 = lorenz_field(add(s, k2, h / 2.0));
    let k4 = lorenz_field(add(s, k3, h));
    let mut n = s;
    for i in 0..3 {
        n[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    n
}

fn lorenz(n: usize, h: f64) -> Vec<Vec<f64>> {
    let mut s = [1.0, 1.0, 1.0];
    for _ in 0..5000 {
        s = rk4(s, h);
    }
    (0..n)
        .map(|_| {
            let row = s.to_vec();
            s = rk4(s, h);
            row
        })
        .collect()
}

fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

// ---------------------------------------------------------------- 1

fn nonlinear_oracles() -> Vec<Line> {
    let started = Instant::now();
    let mut out = Vec::new();

    let mut x = 0.3141;
    for _ in 0..100 {
        x = 4.0 * x * (1.0 - x);
    }
    let orbit: Vec<f64> = (0..10_000)
        .map(|_| {
            let v = x;
            x = 4.0 * x * (1.0 - x);
            v
        })
        .collect();
    let est = embed_delay(&orbit, 1, 2).and_then(|p| largest_lyapunov(&p, 1, 1.0));
    out.push(match est {
        Ok(e) => within("logistic map lambda per step", e.per_step, LN_2, 0.05),
        Err(e) => line(false, format!("logistic map: {e}")),
    });

    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let circle: Vec<Vec<f64>> = (0..2000)
        .map(|_| {
            let a = rng.gen::<f64>() * 2.0 * PI;
            vec![a.cos(), a.sin()]
        })
        .collect();
    let square: Vec<Vec<f64>> = (0..4000).map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()]).collect();
    for (name, rows, theiler, target, tol) in [
        ("circle D2", circle, 0, 1.0, 0.1),
        ("filled square D2", square, 0, 2.0, 0.15),
        ("Lorenz D2", lorenz(50_000, 0.01), 10, 2.05, 0.15),
    ] {
        out.push(match correlation_dimension(&PhasePoints::from_rows(&rows), theiler) {
            Ok(d) => within(name, d.d2, target, tol),
            Err(e) => line(false, format!("{name}: {e}")),
        });
    }

    let hurst: Vec<f64> =
        (0..10).map(|s| hurst_rs(&normals(&mut ChaCha8Rng::seed_from_u64(2000 + s), 8192))).collect::<Result<_, _>>().unwrap_or_default();
    let mean = if hurst.len() == 10 { hurst.iter().sum::<f64>() / 10.0 } else { f64::NAN };
    out.push(within("white-noise Hurst (10-seed mean)", mean, 0.5, 0.08));

    let bits: Vec<u8> = (0..4096).map(|_| rng.gen_range(0..2)).collect();
    out.push(within("random-bit normalized LZ", lz_norm_bits(&bits), 1.0, 0.15));

    let mut monotone = 0;
    for _ in 0..100 {
        let n = rng.gen_range(100..400);
        let bins = rng.gen_range(2..80);
        let xs: Vec<f64> = (0..n).map(|_| rng.gen_range(-50.0..50.0)).collect();
        let h: Vec<f64> = (1..=3).map(|q| entropy(&xs, q, bins).unwrap_or(f64::NAN)).collect();
        if h[0] + 1e-9 >= h[1] && h[1] + 1e-9 >= h[2] {
            monotone += 1;
        }
    }
    out.push(line(monotone == 100, format!("Renyi orders 1 >= 2 >= 3 on {monotone}/100 random inputs")));

    let mut worst = 0.0f64;
    let mut failed = 0;
    for case in 0..20 {
        let n = rng.gen_range(256..1024);
        let s: Vec<f64> = if case % 2 == 0 {
            (0..n).map(|_| rng.gen_range(-100.0..100.0)).collect()
        } else {
            (0..n).map(|i| (i as f64 / 7.0).sin() + 0.3 * (i as f64 / 41.0).cos() + 0.01 * i as f64).collect()
        };
        match decompose(&s) {
            Ok(d) => {
                let scale = s.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                for (i, v) in s.iter().enumerate() {
                    let sum: f64 = d.imfs.iter().map(|m| m[i]).sum::<f64>() + d.residual[i];
                    worst = worst.max((sum - v).abs() / scale);
                }
            }
            Err(_) => failed += 1,
        }
    }
    out.push(line(failed == 0 && worst <= 1e-6, format!("EMD reconstruction max relative error {worst:.2e} over 20 series (limit 1e-6)")));
    out.push(runtime(Duration::from_secs(300), started));
    out
}

// ---------------------------------------------------------------- 2

fn sigma_lognormal_round_trip() -> Vec<Line> {
    let started = Instant::now();
    let cfg = SigmaLognormalConfig::default();
    let mut out = Vec::new();
    for k in [1usize, 2, 3, 5] {
        let mut ok = 0;
        let (mut worst_rel, mut worst_t0, mut worst_snr) = (0.0f64, 0.0f64, f64::INFINITY);
        let mut bad_count = 0;
        for seed in 0..20 {
            let (mut truth, times, speed) = well_separated_lognormals(k, 500 + seed, 180.0);
            let fit = match extract_sigma_lognormal(&times, &speed, &cfg) {
                Ok(f) => f,
                Err(_) => continue,
            };
            worst_snr = worst_snr.min(fit.reconstruction_snr_db);
            if fit.components.len() != k {
                bad_count += 1;
                continue;
            }
            let mut got = fit.components.clone();
            truth.sort_by(|a, b| a.t_peak().total_cmp(&b.t_peak()));
            got.sort_by(|a, b| a.t_peak().total_cmp(&b.t_peak()));
            let mut case_ok = fit.reconstruction_snr_db >= 30.0;
            for (t, g) in truth.iter().zip(&got) {
                let rel = [(g.d, t.d), (g.mu, t.mu), (g.sigma, t.sigma)].iter().map(|(a, b)| (a - b).abs() / b.abs()).fold(0.0, f64::max);
                let dt0 = (g.t0 - t.t0).abs();
                worst_rel = worst_rel.max(rel);
                worst_t0 = worst_t0.max(dt0);
                case_ok &= rel <= 0.02 && dt0 <= 0.005;
            }
            ok += usize::from(case_ok);
        }
        out.push(line(
            ok == 20,
            format!(
                "K={k}: {ok}/20 recovered, wrong count {bad_count}, worst D/mu/sigma error {:.3}%, worst t0 error {:.2} ms, min SNR {worst_snr:.1} dB",
                100.0 * worst_rel,
                1000.0 * worst_t0
            ),
        ));
    }
    out.push(runtime(Duration::from_secs(120), started));
    out
}

// ---------------------------------------------------------------- 3

fn random_set(rng: &mut ChaCha8Rng, n: usize, dim: usize, shift: f64) -> (Vec<Vec<f64>>, Vec<u8>) {
    let mut labels: Vec<u8> = (0..n).map(|i| u8::from(i % 2 == 0)).collect();
    labels.rotate_left(rng.gen_range(0..n));
    let rows = labels.iter().map(|&l| (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal) + shift * f64::from(l)).collect()).collect();
    (rows, labels)
}

/// Vote share by explicit rank: row i is a neighbour when fewer than k rows
/// precede it in (distance, index) order.
fn knn_oracle(rows: &[Vec<f64>], labels: &[u8], x: &[f64], k: usize) -> f64 {
    let d: Vec<f64> = rows.iter().map(|r| r.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum()).collect();
    let k = k.min(rows.len());
    let mut ones = 0;
    for i in 0..rows.len() {
        let rank = (0..rows.len()).filter(|&j| d[j] < d[i] || (d[j] == d[i] && j < i)).count();
        if rank < k && labels[i] == 1 {
            ones += 1;
        }
    }
    ones as f64 / k as f64
}

fn classifier_oracles() -> Vec<Line> {
    let mut rng = ChaCha8Rng::seed_from_u64(3003);
    let mut out = Vec::new();

    let mut agree = 0;
    for _ in 0..100 {
        let n = rng.gen_range(2..40);
        let dim = rng.gen_range(1..6);
        let k = rng.gen_range(1..=n);
        // coarse grid values force distance ties
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| f64::from(rng.gen_range(-3..=3))).collect()).collect();
        let labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let x: Vec<f64> = (0..dim).map(|_| f64::from(rng.gen_range(-3..=3))).collect();
        let model = KnnModel::new(k, rows.clone(), labels.clone()).unwrap();
        if model.score(&x).ok() == Some(knn_oracle(&rows, &labels, &x, k)) {
            agree += 1;
        }
    }
    out.push(line(agree == 100, format!("KNN equals exhaustive oracle on {agree}/100 instances")));

    let grid = GridSpec::default();
    let (mut models, mut feasible, mut worst_eq) = (0, 0, 0.0f64);
    for case in 0..4 {
        let (rows, labels) = random_set(&mut rng, 30 + 10 * case, 2 + case, 0.5 * case as f64);
        let d2 = pairwise_sq(&rows);
        for &c in &grid.c {
            for &gamma in &grid.gamma {
                models += 2;
                let k = rbf_kernel_from_sq(&d2, gamma);
                if let Ok(sol) = solve_dual(&k, &labels, c) {
                    let sum: f64 = sol.alpha.iter().zip(&labels).map(|(a, &l)| if l == 1 { *a } else { -a }).sum();
                    worst_eq = worst_eq.max(sum.abs());
                    let boxed = sol.alpha.iter().all(|&a| (0.0..=c * (1.0 + 1e-12)).contains(&a));
                    feasible += usize::from(sum.abs() <= 1e-6 && boxed);
                }
                if let Ok(m) = train_svm(&rows, &labels, c, gamma) {
                    let boxed = m.dual_coef.iter().all(|a| a.abs() <= c * (1.0 + 1e-12));
                    worst_eq = worst_eq.max(m.equality_violation());
                    feasible += usize::from(m.equality_violation() <= 1e-6 && boxed);
                }
            }
        }
    }
    out.push(line(feasible == models, format!("SVM dual feasible on {feasible}/{models} models, max |sum alpha y| {worst_eq:.1e}")));

    let mut worst_grad = 0.0f64;
    for (case, hidden) in [vec![3], vec![5, 4], vec![2, 3, 2]].iter().enumerate() {
        let (rows, labels) = random_set(&mut rng, 12, 4, 1.0);
        let model = MlpModel::init(4, hidden, 40 + case as u64).unwrap();
        let (_, grad) = model.loss_and_gradient(&rows, &labels);
        let p = model.parameters();
        let mut probe = model.clone();
        let mut num = vec![0.0; p.len()];
        for i in 0..p.len() {
            let h = 1e-5 * p[i].abs().max(1.0);
            let mut q = p.clone();
            q[i] = p[i] + h;
            probe.set_parameters(&q);
            let up = probe.loss(&rows, &labels);
            q[i] = p[i] - h;
            probe.set_parameters(&q);
            let down = probe.loss(&rows, &labels);
            num[i] = (up - down) / (2.0 * h);
        }
        let scale = grad.iter().chain(&num).fold(0.0f64, |a, v| a.max(v.abs()));
        let err = grad.iter().zip(&num).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
        worst_grad = worst_grad.max(err);
    }
    out.push(line(worst_grad <= 1e-5, format!("MLP gradient vs central differences: max relative error {worst_grad:.1e} (limit 1e-5)")));

    let (rows, labels) = random_set(&mut rng, 16, 3, 1.5);
    let ids = (0..rows.len()).map(|i| format!("s{i:02}")).collect();
    let data = LabeledSet::new(ids, rows.clone(), labels.clone()).unwrap().with_task(TaskId::Circle);
    let mlp = MlpConfig { epochs: 50, ..MlpConfig::default() };
    let singles = [
        (ClassifierKind::Knn, GridSpec { k: vec![5], ..GridSpec::default() }, ClassifierParams::Knn { k: 5 }),
        (
            ClassifierKind::Svm,
            GridSpec { c: vec![10.0], gamma: vec![0.1], ..GridSpec::default() },
            ClassifierParams::Svm { c: 10.0, gamma: 0.1 },
        ),
        (ClassifierKind::Mlp, GridSpec { mlp: vec![4], ..GridSpec::default() }, ClassifierParams::Mlp { hidden: vec![4] }),
    ];
    let mut single_ok = 0;
    let mut deterministic = 0;
    for (kind, spec, point) in &singles {
        let observer = hwpd_core::classify::grid::NoObserver;
        let a = grid_search_loocv(&data, *kind, spec, 9, &mlp, &observer);
        let b = grid_search_loocv(&data, *kind, spec, 9, &mlp, &observer);
        if let Ok(r) = &a {
            single_ok += usize::from(r.table.len() == 1 && &r.best == point);
        }
        let s1 = loocv_scores(&data, point, 9, &mlp, &observer);
        let s2 = loocv_scores(&data, point, 9, &mlp, &observer);
        let m1 = train_classifier(&rows, &labels, point, 9, &mlp);
        let m2 = train_classifier(&rows, &labels, point, 9, &mlp);
        deterministic += usize::from(a.is_ok() && a == b && s1.is_ok() && s1 == s2 && m1.is_ok() && m1 == m2);
    }
    out.push(line(single_ok == 3, format!("singleton grid returns its point for {single_ok}/3 classifiers")));
    out.push(line(deterministic == 3, format!("fixed seed reproduces grid, LOOCV scores and model for {deterministic}/3 classifiers")));
    out
}

// ---------------------------------------------------------------- 4

fn mann_whitney(scores: &[f64], labels: &[u8]) -> f64 {
    let (mut wins, mut pos, mut neg) = (0.0, 0.0, 0.0);
    for (i, &li) in labels.iter().enumerate() {
        if li != 1 {
            neg += 1.0;
            continue;
        }
        pos += 1.0;
        for (j, &lj) in labels.iter().enumerate() {
            if lj == 0 {
                wins += if scores[i] > scores[j] {
                    1.0
                } else if scores[i] == scores[j] {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    wins / (pos * neg)
}

fn auc_oracle() -> Vec<Line> {
    let mut rng = ChaCha8Rng::seed_from_u64(4004);
    let mut worst = 0.0f64;
    let mut valid = 0;
    for case in 0..100 {
        let n = rng.gen_range(4..200);
        let mut labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        labels[0] = 0;
        labels[1] = 1;
        let scores: Vec<f64> = if case % 2 == 0 {
            (0..n).map(|_| f64::from(rng.gen_range(0..8)) / 4.0).collect()
        } else {
            labels.iter().map(|&l| rng.gen::<f64>() + 0.3 * f64::from(l)).collect()
        };
        if let Ok(r) = roc_auc(&scores, &labels) {
            valid += 1;
            worst = worst.max((r.auc - mann_whitney(&scores, &labels)).abs());
        }
    }
    let labels = [0u8, 0, 0, 1, 1, 1];
    let separated = roc_auc(&[0.1, 0.2, 0.3, 0.7, 0.8, 0.9], &labels).map_or(f64::NAN, |r| r.auc);
    let constant = roc_auc(&[0.4; 6], &labels).map_or(f64::NAN, |r| r.auc);
    vec![
        line(valid == 100 && worst <= 1e-9, format!("AUC vs Mann-Whitney on {valid}/100 sets: max difference {worst:.1e} (limit 1e-9)")),
        line(separated == 1.0, format!("separated scores AUC = {separated}")),
        line(constant == 0.5, format!("constant scores AUC = {constant}")),
    ]
}

// ---------------------------------------------------------------- CLI helpers

fn hwpd(args: &[&str], cwd: &Path) -> Result<(), String> {
    let out =
        Command::new(env!("CARGO_BIN_EXE_hwpd")).args(args).current_dir(cwd).env("HWPD_LOG", "warn").output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("hwpd {} exited {:?}: {}", args.join(" "), out.status.code(), String::from_utf8_lossy(&out.stderr).trim()))
    }
}

fn load_report(path: &Path) -> Result<(EvaluationReport, AuditCounts), String> {
    let v: serde_json::Value = serde_json::from_slice(&fs::read(path).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let report = serde_json::from_value(v["report"].clone()).map_err(|e| e.to_string())?;
    let audit = serde_json::from_value(v["audit"].clone()).map_err(|e| e.to_string())?;
    Ok((report, audit))
}

fn load_matrix(dir: &Path) -> Result<(Vec<FeatureVector>, FeatureManifest), String> {
    let m = FeatureManifest::read_csv(&fs::read(dir.join("feature_manifest.csv")).map_err(|e| e.to_string())?[..])
        .map_err(|e| e.to_string())?;
    let v = read_matrix_csv(&fs::read(dir.join("features.csv")).map_err(|e| e.to_string())?[..], &m).map_err(|e| e.to_string())?;
    Ok((v, m))
}

// ---------------------------------------------------------------- 5 and 6

/// Checks every leave-one-out round against the subject lists of the matrix.
struct FoldChecker {
    compared: BTreeMap<TaskId, BTreeSet<String>>,
    seen: Mutex<(usize, usize, Vec<String>)>,
}

impl FoldObserver for FoldChecker {
    fn on_fold(&self, e: &FoldEvent<'_>) {
        let mut problems = Vec::new();
        let trained: BTreeSet<&str> = e.trained_on.iter().copied().collect();
        let standardized: BTreeSet<&str> = e.standardized_on.iter().copied().collect();
        if trained.contains(e.held_out) || standardized.contains(e.held_out) {
            problems.push("held-out row in fitted rows");
        }
        if trained != standardized || trained.len() != e.trained_on.len() {
            problems.push("training and standardization rows differ");
        }
        let mut full = trained.clone();
        full.insert(e.held_out);
        let expected = e.task.and_then(|t| self.compared.get(&t));
        if expected.map_or(true, |s| s.iter().map(String::as_str).collect::<BTreeSet<_>>() != full) {
            problems.push("fold rows differ from the task's subjects");
        }
        if e.stage == Stage::GridSearch && e.task != Some(TaskId::Circle) {
            problems.push("grid search outside Circle");
        }
        let mut s = self.seen.lock().unwrap();
        match e.stage {
            Stage::GridSearch => s.0 += 1,
            Stage::Evaluation => s.1 += 1,
        }
        s.2.extend(problems.into_iter().map(|p| format!("{} {:?}: {p}", e.held_out, e.task)));
    }
}

fn end_to_end(scale: f64) -> (Vec<Line>, Vec<Line>) {
    let started = Instant::now();
    let pd = ((55.0 * scale).round() as usize).max(4);
    let yhc = ((45.0 * scale).round() as usize).max(4);
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let counts = format!("{pd},0,{yhc}");
    let steps = [
        vec!["synth", "--seed", "2024", "--counts", &counts, "--out", "data"],
        vec!["features", "--manifest", "data/manifest.csv", "--out", "feats"],
        vec![
            "evaluate",
            "--matrix",
            "feats/features.csv",
            "--experiment",
            "yhc-vs-pd",
            "--classifier",
            "svm",
            "--seed",
            "2024",
            "--out",
            "rep",
        ],
    ];
    for s in &steps {
        if let Err(e) = hwpd(s, dir) {
            return (vec![line(false, e)], vec![line(false, "no evaluate run".into())]);
        }
    }
    let (report, audit) = match load_report(&dir.join("rep/report.json")) {
        Ok(r) => r,
        Err(e) => return (vec![line(false, e)], vec![line(false, "no report".into())]),
    };
    let mut e2e = vec![line(true, format!("cohort {pd} PD + {yhc} YHC, {} tasks, default grids, SVM", TaskId::ALL.len()))];
    for f in &report.families {
        let best = f.best_task_accuracy();
        let text = format!(
            "{:<10} fused {:.3}, best task {:.3}, Circle grid {:.3}",
            f.selection.as_str(),
            f.fused.accuracy,
            best,
            f.optimization_accuracy
        );
        if f.selection == FeatureSelection::All {
            e2e.push(line(f.fused.accuracy >= 0.90, format!("{text} (fused >= 0.90)")));
            e2e.push(line(
                f.fused.accuracy >= best - 0.05,
                format!("all features: fused {:.3} >= best task {best:.3} - 0.05", f.fused.accuracy),
            ));
        } else {
            e2e.push(line(true, text));
        }
    }
    if report.family(FeatureSelection::All).is_none() {
        e2e.push(line(false, "no all-features result".into()));
    }
    e2e.push(runtime(Duration::from_secs(1800), started));

    let mut hygiene = vec![line(
        audit.is_clean() && audit.grid_folds > 0 && audit.evaluation_folds > 0,
        format!(
            "evaluate audit: {} grid folds, {} evaluation folds, leaks standardization {} training {}, grid outside Circle {}, malformed {}",
            audit.grid_folds, audit.evaluation_folds, audit.standardization_leaks, audit.training_leaks, audit.grid_outside_optimization_task, audit.malformed_folds
        ),
    )];
    hygiene.extend(replay_folds(dir, &report, audit));
    (e2e, hygiene)
}

/// Reruns the protocol on the written matrix with an independent fold checker.
fn replay_folds(dir: &Path, report: &EvaluationReport, cli_audit: AuditCounts) -> Vec<Line> {
    let (vectors, manifest) = match load_matrix(&dir.join("feats")) {
        Ok(v) => v,
        Err(e) => return vec![line(false, e)],
    };
    let exp = Experiment::YHCvsPD;
    let mut compared: BTreeMap<TaskId, BTreeSet<String>> = BTreeMap::new();
    for v in vectors.iter().filter(|v| matches!(v.group, Group::YHC | Group::PD)) {
        compared.entry(v.task).or_default().insert(v.subject_id.clone());
    }
    let checker = FoldChecker { compared, seen: Mutex::new((0, 0, Vec::new())) };
    let cfg = ProtocolConfig::new(exp, ClassifierKind::Svm, report.seed);
    let replay = match run_protocol(&vectors, &manifest, &cfg, &checker) {
        Ok(r) => r,
        Err(e) => return vec![line(false, format!("replay: {e}"))],
    };
    let audit = ProvenanceAudit::default();
    let again = run_protocol(&vectors, &manifest, &cfg, &audit);
    let (grid, eval, problems) = checker.seen.into_inner().unwrap();
    let n_circle = checker.compared.get(&TaskId::Circle).map_or(0, BTreeSet::len);
    let expected_grid = n_circle * replay.families.len();
    let expected_eval: usize = replay.families.iter().flat_map(|f| &f.tasks).map(|t| t.scores.entries.len()).sum();
    let first = problems.first().cloned().unwrap_or_default();
    vec![
        line(
            problems.is_empty() && grid == expected_grid && eval == expected_eval,
            format!(
                "independent fold check: {grid}/{expected_grid} grid folds, {eval}/{expected_eval} evaluation folds, {} violations {first}",
                problems.len()
            ),
        ),
        line(again.as_ref().ok() == Some(&replay), "library protocol is repeatable".into()),
        line(replay == *report, "library replay reproduces the CLI report".into()),
        line(audit.counts() == cli_audit, "library audit counts equal the CLI audit counts".into()),
    ]
}

// ---------------------------------------------------------------- 7

fn round_trip() -> Vec<Line> {
    let started = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let mut out = Vec::new();
    let steps: [&[&str]; 3] = [
        &["synth", "--seed", "77", "--counts", "4,0,4", "--out", "data"],
        &["features", "--manifest", "data/manifest.csv", "--out", "feats"],
        &["evaluate", "--matrix", "feats/features.csv", "--seed", "77", "--out", "rep"],
    ];
    for run in ["a", "b"] {
        let dir = tmp.path().join(run);
        fs::create_dir_all(&dir).unwrap();
        for s in steps {
            out.push(match hwpd(s, &dir) {
                Ok(()) => line(true, format!("run {run}: hwpd {} exited 0", s[0])),
                Err(e) => line(false, e),
            });
        }
    }
    for f in [
        "data/manifest.csv",
        "feats/features.csv",
        "feats/feature_manifest.csv",
        "feats/provenance.json",
        "rep/report.json",
        "rep/table.csv",
        "rep/scores_all.csv",
        "rep/roc_all.csv",
        "rep/provenance.json",
    ] {
        let a = fs::read(tmp.path().join("a").join(f));
        let b = fs::read(tmp.path().join("b").join(f));
        let same = matches!((&a, &b), (Ok(x), Ok(y)) if x == y);
        out.push(line(same, format!("{f} byte-identical across runs")));
    }
    out.push(line(true, format!("runtime {:.1} s", started.elapsed().as_secs_f64())));
    out
}

// ---------------------------------------------------------------- driver

fn report(id: usize, name: &str, started: Instant, lines: &[Line]) -> bool {
    let pass = !lines.is_empty() && lines.iter().all(|l| l.pass);
    println!("{} {id} {name} ({:.1} s)", if pass { "PASS" } else { "FAIL" }, started.elapsed().as_secs_f64());
    for l in lines {
        println!("     {} {}", if l.pass { "ok  " } else { "FAIL" }, l.text);
    }
    pass
}

fn main() -> ExitCode {
    let scale: f64 = std::env::var("HWPD_ACCEPT_SCALE").ok().and_then(|s| s.parse().ok()).filter(|s: &f64| *s > 0.0).unwrap_or(1.0);
    let timed = |f: &dyn Fn() -> Vec<Line>| {
        let t = Instant::now();
        (t, f())
    };
    let mut results = Vec::new();
    for (id, name, f) in [
        (1, "nonlinear oracle suite", &nonlinear_oracles as &dyn Fn() -> Vec<Line>),
        (2, "Sigma-Lognormal round trip", &sigma_lognormal_round_trip),
        (3, "classifier oracles", &classifier_oracles),
        (4, "ROC/AUC oracle", &auc_oracle),
    ] {
        let (t, lines) = timed(f);
        results.push(report(id, name, t, &lines));
    }
    let t = Instant::now();
    let (e2e, hygiene) = end_to_end(scale);
    results.push(report(5, "end-to-end synthetic protocol", t, &e2e));
    results.push(report(6, "protocol hygiene", t, &hygiene));
    let (t, lines) = timed(&round_trip);
    results.push(report(7, "format round trip", t, &lines));
    let all = results.iter().all(|&r| r);
    println!("{}", if all { "acceptance: all criteria pass" } else { "acceptance: some criteria fail" });
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
