//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits with a
//! failure status if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use corrmat::experiment::{run_recovery_experiment, Estimator, ExperimentConfig, ExperimentReport};
use corrmat::io;
use corrmat::irt::{
    cell_log_likelihood, fit, log_likelihood_gradient, success_probability, sum_log_likelihood,
    FitConfig, IrtParams, Model, Selectivity,
};
use corrmat::matrix::{
    prune, prune_jointly, Axis, ItemBank, MatrixKind, Rational, Scheme,
    ScoredMatrix, Trigger,
};
use corrmat::sim::{generate_true_matrix, simulate, SimConfig};
use corrmat::stats::{pearson, pearson_moments, point_biserial};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut out = f();
    let elapsed = start.elapsed();
    out.detail.push_str(&format!("; {:.2} s", elapsed.as_secs_f64()));
    if let Some(limit) = limit {
        if elapsed > limit {
            out.pass = false;
            out.detail.push_str(&format!(" exceeds {} s", limit.as_secs()));
        }
    }
    out
}

// Closed-form reference curves.
fn logistic_ref(a: f64, theta: f64, delta: f64) -> f64 {
    1.0 / (1.0 + (-a * (theta - delta)).exp())
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let theta = rng.random_range(-4.0..4.0);
        let delta = rng.random_range(-4.0..4.0);
        let a = rng.random_range(0.2..4.0);
        let c = rng.random_range(0.0..0.5);
        let general = |dp, di, cp, ci| {
            let p = IrtParams::five_param(vec![theta], vec![delta], vec![dp], vec![di], vec![cp], vec![ci])
                .unwrap();
            success_probability(&p, 0, 0)
        };
        let fin = Selectivity::Finite;
        let inf = Selectivity::Infinite;
        let cases = [
            (general(fin(2f64.sqrt()), fin(2f64.sqrt()), 0.0, 0.0), logistic_ref(1.0, theta, delta)),
            (general(inf, fin(a), 0.0, 0.0), logistic_ref(a, theta, delta)),
            (general(fin(a), inf, 0.0, 0.0), logistic_ref(a, theta, delta)),
            (
                general(inf, fin(a), 1.0, c),
                c + (1.0 - c) * logistic_ref(a, theta, delta),
            ),
        ];
        for (got, want) in cases {
            worst = worst.max((got - want).abs());
        }
    }
    outcome(worst < 1e-12, format!("max deviation {worst:.2e} over 10000 points x 4 models"))
}

fn criterion_2() -> Outcome {
    let mut worst_identity: f64 = 0.0;
    for m in 2..=8u32 {
        for step in 1..200 {
            let p = f64::from(step) / 200.0;
            let x = -1.0 / f64::from(m - 1);
            let lhs = f64::from(m - 1) * cell_log_likelihood(x, p).unwrap()
                + cell_log_likelihood(1.0, p).unwrap();
            worst_identity = worst_identity.max((lhs - f64::from(m) * (1.0 - p).ln()).abs());
        }
    }
    let bundle = simulate(&SimConfig::new(40, 12, 0.6, 17), 0).unwrap();
    let m = &bundle.corrected_matrix;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let params = IrtParams::three_param(
        (0..40).map(|_| rng.random_range(-2.0..2.0)).collect(),
        (0..12).map(|_| rng.random_range(-2.0..2.0)).collect(),
        (0..40).map(|_| rng.random_range(0.5..3.0)).collect(),
        (0..12).map(|_| rng.random_range(0.5..3.0)).collect(),
    )
    .unwrap();
    let g = log_likelihood_gradient(m, &params).unwrap();
    let h = 1e-5;
    let ll = |p: &IrtParams| sum_log_likelihood(m, p).unwrap();
    let mut worst_gradient: f64 = 0.0;
    let mut record = |analytic: f64, plus: IrtParams, minus: IrtParams| {
        let fd = (ll(&plus) - ll(&minus)) / (2.0 * h);
        worst_gradient = worst_gradient.max((analytic - fd).abs() / analytic.abs().max(1.0));
    };
    let bump = |d: Selectivity, e: f64| Selectivity::Finite(d.finite().unwrap() + e);
    for i in 0..40 {
        let (mut a, mut b) = (params.clone(), params.clone());
        a.theta[i] += h;
        b.theta[i] -= h;
        record(g.theta[i], a, b);
        let (mut a, mut b) = (params.clone(), params.clone());
        a.d_person[i] = bump(a.d_person[i], h);
        b.d_person[i] = bump(b.d_person[i], -h);
        record(g.d_person[i], a, b);
    }
    for j in 0..12 {
        let (mut a, mut b) = (params.clone(), params.clone());
        a.delta[j] += h;
        b.delta[j] -= h;
        record(g.delta[j], a, b);
        let (mut a, mut b) = (params.clone(), params.clone());
        a.d_item[j] = bump(a.d_item[j], h);
        b.d_item[j] = bump(b.d_item[j], -h);
        record(g.d_item[j], a, b);
    }
    outcome(
        worst_identity < 1e-12 && worst_gradient < 1e-6,
        format!("balance identity max {worst_identity:.2e}; gradient max rel. error {worst_gradient:.2e}"),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst: f64 = 0.0;
    let mut evaluated = 0;
    for _ in 0..1000 {
        let n = rng.random_range(5..200);
        let column: Vec<f64> = (0..n).map(|_| f64::from(u8::from(rng.random_bool(0.4)))).collect();
        let totals: Vec<f64> = column
            .iter()
            .map(|x| x * 3.0 + rng.random_range(0.0..20.0_f64).floor())
            .collect();
        let (Ok(a), Ok(b), Ok(c)) = (
            point_biserial(&column, &totals),
            pearson(&column, &totals),
            pearson_moments(&column, &totals),
        ) else {
            continue;
        };
        evaluated += 1;
        worst = worst.max((a - b).abs()).max((a - c).abs());
    }
    outcome(
        worst < 1e-10 && evaluated > 900,
        format!("max |point-biserial - pearson| {worst:.2e} on {evaluated} columns"),
    )
}

fn experiment(n: usize, k: usize, replications: usize, seed: u64) -> ExperimentReport {
    let config = ExperimentConfig::new(SimConfig::new(n, k, 0.5, seed), replications);
    run_recovery_experiment(&config).unwrap()
}

fn criterion_4(report: &ExperimentReport) -> Outcome {
    let within = report
        .score_checks
        .iter()
        .filter(|c| (c.mean_corrected - c.mean_true).abs() < 3.0 * c.se_corrected)
        .count();
    let above = report
        .score_checks
        .iter()
        .filter(|c| c.mean_distorted > c.mean_true)
        .count();
    let total = report.score_checks.len();
    outcome(
        within >= 19 && above == total && total == 20,
        format!("corrected within 3 SE in {within}/{total}; distorted above true in {above}/{total}"),
    )
}

fn criterion_5() -> Outcome {
    let report = experiment(5000, 40, 5, 505);
    let scaled: Vec<f64> = report
        .rows_for(Estimator::ItemTotalScaled, MatrixKind::Corrected)
        .map(|r| r.mean_abs_dev)
        .collect();
    let raw: Vec<f64> = report
        .rows_for(Estimator::ItemTotalRaw, MatrixKind::Corrected)
        .map(|r| r.error())
        .collect();
    let worst_scaled = scaled.iter().cloned().fold(0.0, f64::max);
    let worst_raw = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    outcome(
        scaled.len() == 5 && worst_scaled < 0.05 && worst_raw < 0.0,
        format!(
            "max over replications: mean |K r - r_true| {worst_scaled:.4}, mean (r - r_true) {worst_raw:.4}"
        ),
    )
}

fn criterion_6(report: &ExperimentReport) -> Outcome {
    let mads: Vec<f64> = report
        .rows_for(Estimator::IntercorrScaled, MatrixKind::Corrected)
        .map(|r| r.mean_abs_dev)
        .collect();
    let worst = mads.iter().cloned().fold(0.0, f64::max);
    outcome(
        mads.len() == 20 && worst < 0.05,
        format!("max scaled intercorrelation MAD {worst:.4} over {} replications", mads.len()),
    )
}

fn criterion_7(report: &ExperimentReport) -> Outcome {
    let kr: Vec<_> = report.rows_for(Estimator::Kr20, MatrixKind::Corrected).collect();
    let alpha: Vec<_> = report.rows_for(Estimator::Alpha, MatrixKind::Corrected).collect();
    let worst = kr.iter().map(|r| r.error().abs()).fold(0.0, f64::max);
    let below = kr
        .iter()
        .zip(&alpha)
        .filter(|(k, a)| k.replication == a.replication && a.estimate < k.estimate)
        .count();
    outcome(
        kr.len() == 20 && worst < 0.03 && below == kr.len(),
        format!("max |KR20 corrected - true| {worst:.4}; alpha < KR20 in {below}/{}", kr.len()),
    )
}

fn rmse(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

fn criterion_8() -> Outcome {
    let config = SimConfig::new(2000, 30, 0.5, 808);
    let bundle = simulate(&config, 0).unwrap();
    let fit_config = FitConfig::default();
    let Some(pruned) = prune(&bundle.true_matrix).into_matrix() else {
        return outcome(false, "true matrix pruned to nothing".into());
    };
    let kept_items: Vec<usize> = (0..pruned.n_items())
        .map(|j| bundle.true_matrix.items().position(&pruned.items().get(j).id).unwrap())
        .collect();
    let true_fit = fit(&pruned, Model::Rasch, &fit_config).unwrap();
    let truth: Vec<f64> = kept_items.iter().map(|&j| bundle.true_params.delta[j]).collect();
    let recovery = rmse(&true_fit.params.delta, &truth);

    let (joint, _) = prune_jointly(&[&bundle.true_matrix, &bundle.corrected_matrix]).unwrap();
    let joint = joint.unwrap();
    let a = fit(&joint[0], Model::Rasch, &fit_config).unwrap();
    let b = fit(&joint[1], Model::Rasch, &fit_config).unwrap();
    let agreement = a
        .params
        .delta
        .iter()
        .zip(&b.params.delta)
        .map(|(x, y)| (x - y).abs())
        .sum::<f64>()
        / a.params.delta.len() as f64;
    let converged = true_fit.diagnostics.converged && a.diagnostics.converged && b.diagnostics.converged;
    outcome(
        recovery < 0.2 && agreement < 0.15 && converged,
        format!("RMSE(delta) {recovery:.4}; mean |delta corrected - delta true| {agreement:.4}; converged {converged}"),
    )
}

/// One-sided binomial tail `P(X >= successes)` for `X ~ Bin(trials, 1/2)`.
fn sign_test_p(successes: usize, trials: usize) -> f64 {
    let mut coefficient = 1.0f64;
    let mut tail = 0.0;
    for x in 0..=trials {
        if x > 0 {
            coefficient *= (trials - x + 1) as f64 / x as f64;
        }
        if x >= successes {
            tail += coefficient;
        }
    }
    tail / 2f64.powi(trials as i32)
}

fn criterion_9() -> Outcome {
    let report = experiment(2000, 40, 50, 909);
    let rows: Vec<_> = report
        .rows_for(Estimator::EasyItemTotalRaw, MatrixKind::Distorted)
        .collect();
    let lower = rows.iter().filter(|r| r.estimate < r.reference).count();
    let p = sign_test_p(lower, rows.len());
    outcome(
        rows.len() == 50 && p < 0.01,
        format!("distorted r below true for easy items in {lower}/{}; sign test p = {p:.2e}", rows.len()),
    )
}

fn fixture(cells: &[&str]) -> ScoredMatrix {
    let values = cells
        .iter()
        .flat_map(|row| row.chars())
        .map(|c| match c {
            '1' => Rational::new(1, 1),
            '0' => Rational::new(0, 1),
            'w' => Rational::new(-1, 3),
            _ => unreachable!(),
        })
        .collect();
    let kind = if cells.iter().any(|r| r.contains('w')) {
        MatrixKind::Corrected
    } else {
        MatrixKind::True
    };
    let scheme = if kind == MatrixKind::Corrected { Scheme::CorrectedElements } else { Scheme::Ignore };
    ScoredMatrix::new(
        (1..=5).map(|i| format!("P{i}")).collect(),
        ItemBank::uniform(5, 4).unwrap(),
        values,
        kind,
        scheme,
    )
    .unwrap()
}

type Expected = Vec<(Axis, &'static str, Trigger, usize)>;

fn criterion_10() -> Outcome {
    use Axis::{Column, Row};
    use Trigger::{AllConstant, NegativeSum};
    let cases: Vec<(&str, ScoredMatrix, Expected, (usize, usize))> = vec![
        (
            "all-one column then all-zero row",
            fixture(&["11010", "10101", "10000", "11100", "10110"]),
            vec![(Column, "I001", AllConstant, 1), (Row, "P3", AllConstant, 2)],
            (4, 4),
        ),
        (
            "negative row and column, zero sums kept",
            fixture(&["1wwww", "11w01", "011ww", "1w1w0", "w10ww"]),
            vec![(Row, "P1", NegativeSum, 1), (Column, "I004", NegativeSum, 1)],
            (4, 4),
        ),
        (
            "constant column exposes a negative row",
            fixture(&["1ww00", "11010", "10111", "1110w", "101w1"]),
            vec![(Column, "I001", AllConstant, 1), (Row, "P1", NegativeSum, 2)],
            (4, 4),
        ),
        (
            "zero row and column, then an all-one row",
            fixture(&["00000", "11110", "10100", "01100", "11010"]),
            vec![
                (Row, "P1", AllConstant, 1),
                (Column, "I005", AllConstant, 1),
                (Row, "P2", AllConstant, 2),
            ],
            (3, 4),
        ),
    ];
    let mut failures = Vec::new();
    for (name, matrix, expected, shape) in &cases {
        let out = prune(matrix);
        let got: Expected = out
            .report()
            .removals
            .iter()
            .map(|r| (r.axis, leak(&r.id), r.trigger, r.pass))
            .collect();
        let kept = out.matrix().map(|m| (m.n_persons(), m.n_items()));
        if &got != expected || kept != Some(*shape) {
            failures.push(format!("{name}: got {got:?}, kept {kept:?}"));
        }
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{} fixtures match their removal reports", cases.len())
        } else {
            failures.join("; ")
        },
    )
}

fn leak(s: &str) -> &'static str {
    Box::leak(s.to_string().into_boxed_str())
}

fn run_cli(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_corrmat"))
        .args(args)
        .env_remove("CORRMAT_SEED")
        .status()
        .map(|s| s.success())
        .unwrap_or(false)
}

/// Output file names of a directory, excluding the manifest.
fn output_files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .map(|entries| {
            entries
                .filter_map(|e| e.ok())
                .map(|e| e.file_name().to_string_lossy().into_owned())
                .filter(|n| n != "manifest.toml")
                .collect()
        })
        .unwrap_or_default();
    names.sort();
    names
}

fn outputs_identical(a: &Path, b: &Path) -> bool {
    let names = output_files(a);
    !names.is_empty()
        && names == output_files(b)
        && names.iter().all(|name| {
            std::fs::read(a.join(name)).ok().is_some_and(|x| Some(x) == std::fs::read(b.join(name)).ok())
        })
}

fn criterion_11() -> Outcome {
    let config = SimConfig::new(300, 12, 0.5, 1111);
    let a = simulate(&config, 3).unwrap();
    let b = simulate(&config, 3).unwrap();
    let library = a == b
        && io::write_scored(&a.corrected_matrix) == io::write_scored(&b.corrected_matrix)
        && generate_true_matrix(&config, 2).unwrap() == generate_true_matrix(&config, 2).unwrap();
    let exp = ExperimentConfig::new(config, 4);
    let library = library
        && io::write_experiment(&run_recovery_experiment(&exp).unwrap())
            == io::write_experiment(&run_recovery_experiment(&exp).unwrap());

    let tmp = tempfile::tempdir().unwrap();
    let d = |name: &str| tmp.path().join(name);
    let s = |p: std::path::PathBuf| p.display().to_string();
    let sim_args = ["simulate", "--n", "200", "--k", "10", "--replications", "3", "--seed", "42", "--fit-irt"];
    let first = run_cli(&[&sim_args[..], &["--out", &s(d("one"))]].concat());
    let second = run_cli(&[&sim_args[..], &["--out", &s(d("two"))]].concat());
    let sims_equal = first && second && outputs_identical(&d("one"), &d("two"));

    let fit1 = run_cli(&["fit", &s(d("one").join("corrected.csv")), "--prune", "--out", &s(d("fit1"))]);
    let fit2 = run_cli(&["fit", &s(d("one").join("corrected.csv")), "--prune", "--out", &s(d("fit2"))]);
    let fits_equal = fit1 && fit2 && outputs_identical(&d("fit1"), &d("fit2"));

    let rerun = run_cli(&["rerun", &s(d("one").join("manifest.toml")), "--out", &s(d("three"))]);
    let rerun_equal = rerun && outputs_identical(&d("one"), &d("three"));

    outcome(
        library && sims_equal && fits_equal && rerun_equal,
        format!(
            "library {library}; simulate twice {sims_equal}; fit twice {fits_equal}; rerun from manifest {rerun_equal}"
        ),
    )
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    results.push(("1 degeneration", timed(Some(Duration::from_secs(1)), criterion_1)));
    results.push(("2 likelihood identities", timed(Some(Duration::from_secs(5)), criterion_2)));
    results.push(("3 point-biserial equivalence", timed(None, criterion_3)));

    let start = Instant::now();
    let shared = experiment(2000, 40, 20, 404);
    let shared_time = start.elapsed();
    let mut c4 = criterion_4(&shared);
    c4.detail.push_str(&format!("; {:.2} s", shared_time.as_secs_f64()));
    if shared_time > Duration::from_secs(30) {
        c4.pass = false;
        c4.detail.push_str(" exceeds 30 s");
    }
    results.push(("4 unbiased corrected scores", c4));
    results.push(("5 K-scaled item-total correlation", timed(Some(Duration::from_secs(60)), criterion_5)));
    results.push(("6 intercorrelation scaling", criterion_6(&shared)));
    results.push(("7 reliability", criterion_7(&shared)));
    results.push(("8 Rasch parameter recovery", timed(Some(Duration::from_secs(120)), criterion_8)));
    results.push(("9 directional distortion", timed(None, criterion_9)));
    results.push(("10 pruning fixtures", criterion_10()));
    results.push(("11 determinism", timed(None, criterion_11)));

    let mut failed = 0;
    for (name, o) in &results {
        println!("{} criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {}/{} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
