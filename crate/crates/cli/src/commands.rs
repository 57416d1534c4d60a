use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use corrmat::experiment::{run_recovery_experiment, ExperimentConfig};
use corrmat::io;
use corrmat::irt::{fit, FitConfig, Model};
use corrmat::matrix::{
    prune, row_and_column_scores, score_matrix, Item, ItemBank, PruneOutcome, Scheme, ScoredMatrix,
};
use corrmat::reliability::{cronbach_alpha, kr20, split_half, test_retest, Method, SplitScheme};
use corrmat::sim::{simulate, Distribution, GenerationModel, SimConfig};
use corrmat::stats::{intercorrelation_matrix, item_stats};
use corrmat::Error;

use crate::config::{self, FitFile, OptionCounts, SimFile};
use crate::manifest::{RunManifest, MANIFEST_FILE};
use crate::output::OutDir;
use crate::{Cli, Command};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_NUMERIC: u8 = 2;
pub const EXIT_NOT_CONVERGED: u8 = 3;

/// Numeric and undefined-result errors exit with 2, everything else with 1.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::Undefined(_) | Error::Domain(_)) => EXIT_NUMERIC,
        _ => EXIT_INPUT,
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_scored(path: &Path) -> Result<ScoredMatrix> {
    io::read_scored(&read_text(path)?).with_context(|| format!("in {}", path.display()))
}

/// Prunes when asked, writing the removal report. An empty result is a
/// numeric error.
fn maybe_prune(matrix: ScoredMatrix, enabled: bool, out: &mut OutDir) -> Result<ScoredMatrix> {
    if !enabled {
        return Ok(matrix);
    }
    let outcome = prune(&matrix);
    out.write("prune_report.csv", &io::write_prune_report(outcome.report()))?;
    match outcome {
        PruneOutcome::Kept { matrix, .. } => Ok(matrix),
        PruneOutcome::Empty { .. } => Err(Error::Domain(
            "pruning removed every row or column; see prune_report.csv".into(),
        )
        .into()),
    }
}

pub fn run(cli: Cli, args: &[String]) -> Result<u8> {
    match cli.command {
        Command::Rerun { manifest, out } => rerun(&manifest, out.as_deref()),
        command => execute(command, args),
    }
}

fn execute(command: Command, args: &[String]) -> Result<u8> {
    match command {
        Command::Score {
            input,
            scheme,
            items,
            options,
            prune,
            out,
        } => {
            let mut manifest = RunManifest::new("score", args);
            let scheme = Scheme::from_name(&scheme).with_context(|| {
                format!("unknown scheme `{scheme}` (expected ignore, punitive or corrected)")
            })?;
            manifest.setting("scheme", scheme);
            manifest.setting("prune", prune);
            manifest.inputs.push(input.clone());
            let bank = match &items {
                Some(path) => {
                    manifest.inputs.push(path.clone());
                    io::read_item_bank(&read_text(path)?)
                        .with_context(|| format!("in {}", path.display()))?
                }
                None => {
                    manifest.setting("options", options);
                    let text = read_text(&input)?;
                    let ids = io::response_item_ids(&text)
                        .with_context(|| format!("in {}", input.display()))?;
                    ItemBank::new(ids.into_iter().map(|id| Item { id, options }).collect())?
                }
            };
            let responses = io::read_responses(&read_text(&input)?, &bank)
                .with_context(|| format!("in {}", input.display()))?;
            let mut dir = OutDir::create(&out.out)?;
            let scored = maybe_prune(score_matrix(&responses, scheme), prune, &mut dir)?;
            dir.write("scored.csv", &io::write_scored(&scored))?;
            dir.write(
                "scores.csv",
                &io::write_scores(&scored, &row_and_column_scores(&scored)),
            )?;
            dir.finish(manifest)?;
            Ok(EXIT_OK)
        }
        Command::Analyze {
            input,
            prune,
            threshold,
            out,
        } => {
            let mut manifest = RunManifest::new("analyze", args);
            manifest.inputs.push(input.clone());
            manifest.setting("prune", prune);
            manifest.setting("threshold", threshold);
            let matrix = read_scored(&input)?;
            let mut dir = OutDir::create(&out.out)?;
            let matrix = maybe_prune(matrix, prune, &mut dir)?;
            dir.write("itemstats.csv", &io::write_item_stats(&item_stats(&matrix, threshold)?))?;
            dir.write(
                "intercorr.csv",
                &io::write_intercorrelations(&intercorrelation_matrix(&matrix)?),
            )?;
            dir.finish(manifest)?;
            Ok(EXIT_OK)
        }
        Command::Reliability {
            input,
            methods,
            split,
            retest,
            out,
        } => {
            let mut manifest = RunManifest::new("reliability", args);
            manifest.inputs.push(input.clone());
            let scheme = match split.as_str() {
                "odd-even" => SplitScheme::OddEven,
                "first-second" => SplitScheme::FirstSecond,
                other => bail!("unknown split `{other}` (expected odd-even or first-second)"),
            };
            manifest.setting("methods", methods.join(","));
            manifest.setting("split", &split);
            let matrix = read_scored(&input)?;
            let mut reports = Vec::new();
            for name in &methods {
                let method = Method::from_name(name.trim()).with_context(|| {
                    format!("unknown method `{name}` (expected split-half, kr20, alpha or test-retest)")
                })?;
                reports.push(match method {
                    Method::SplitHalf => split_half(&matrix, scheme),
                    Method::Kr20 => kr20(&matrix),
                    Method::CronbachAlpha => cronbach_alpha(&matrix),
                    Method::TestRetest => {
                        let path = retest
                            .as_ref()
                            .context("test-retest needs a second administration (--retest)")?;
                        manifest.inputs.push(path.clone());
                        let second = read_scored(path)?;
                        if second.persons() != matrix.persons() {
                            bail!("retest file must list the same persons in the same order");
                        }
                        test_retest(&matrix.person_totals(), &second.person_totals())
                    }
                });
            }
            let mut dir = OutDir::create(&out.out)?;
            dir.write("reliability.txt", &io::write_reliability(&reports))?;
            dir.finish(manifest)?;
            Ok(EXIT_OK)
        }
        Command::Fit {
            input,
            model,
            config,
            max_iterations,
            prune,
            out,
        } => {
            let mut manifest = RunManifest::new("fit", args);
            manifest.inputs.push(input.clone());
            let model = Model::from_name(&model).with_context(|| {
                format!("unknown model `{model}` (expected rasch, 2pl-item, 2pl-person or 3param)")
            })?;
            let mut fit_config = FitConfig::default();
            if let Some(path) = &config {
                manifest.inputs.push(path.clone());
            }
            config::load::<FitFile>(config.as_deref())?.apply(&mut fit_config);
            if let Some(v) = max_iterations {
                fit_config.max_outer_iterations = v;
            }
            manifest.setting("model", model);
            manifest.setting("prune", prune);
            manifest.setting("max_outer_iterations", fit_config.max_outer_iterations);
            manifest.setting("ll_tolerance", fit_config.ll_tolerance);
            manifest.setting("param_tolerance", fit_config.param_tolerance);
            let matrix = read_scored(&input)?;
            let mut dir = OutDir::create(&out.out)?;
            let matrix = maybe_prune(matrix, prune, &mut dir)?;
            let result = fit(&matrix, model, &fit_config)?;
            let item_ids: Vec<String> = matrix.items().items().iter().map(|i| i.id.clone()).collect();
            dir.write(
                "params.csv",
                &io::write_params(&result.params, matrix.persons(), &item_ids),
            )?;
            dir.write(
                "diagnostics.txt",
                &io::write_diagnostics(&result.diagnostics, matrix.persons(), &item_ids),
            )?;
            dir.finish(manifest)?;
            if result.diagnostics.converged {
                Ok(EXIT_OK)
            } else {
                eprintln!(
                    "warning: no convergence after {} iterations; partial estimates written",
                    result.diagnostics.iterations
                );
                Ok(EXIT_NOT_CONVERGED)
            }
        }
        Command::Simulate {
            config,
            replications,
            seed,
            n,
            k,
            options,
            guess_rate,
            fit_irt,
            out,
        } => {
            let mut manifest = RunManifest::new("simulate", args);
            if let Some(path) = &config {
                manifest.inputs.push(path.clone());
            }
            let file: SimFile = config::load(config.as_deref())?;
            let replications = replications.or(file.replications).unwrap_or(1);
            if replications == 0 {
                bail!("--replications must be at least 1");
            }
            let seed = config::resolve_seed(seed, file.seed)?;
            let experiment = sim_config(&file, seed, replications, n, k, options, guess_rate, fit_irt)?;
            manifest.seed = Some(seed);
            let s = &experiment.sim;
            manifest.setting("n", s.n);
            manifest.setting("k", s.k);
            manifest.setting("guess_rate", s.guess_rate);
            manifest.setting("replications", replications);
            manifest.setting("fit_irt", experiment.fit_irt);

            let bundle = simulate(s, 0)?;
            let report = run_recovery_experiment(&experiment)?;
            let mut dir = OutDir::create(&out.out)?;
            let item_ids: Vec<String> = bundle
                .true_matrix
                .items()
                .items()
                .iter()
                .map(|i| i.id.clone())
                .collect();
            dir.write("item_bank.csv", &io::write_item_bank(bundle.true_matrix.items()))?;
            dir.write(
                "true_params.csv",
                &io::write_params(&bundle.true_params, bundle.true_matrix.persons(), &item_ids),
            )?;
            dir.write("responses.csv", &io::write_responses(&bundle.responses))?;
            dir.write("true.csv", &io::write_scored(&bundle.true_matrix))?;
            dir.write("distorted.csv", &io::write_scored(&bundle.distorted_matrix))?;
            dir.write("corrected.csv", &io::write_scored(&bundle.corrected_matrix))?;
            dir.write("experiment.csv", &io::write_experiment(&report))?;
            dir.write("summary.csv", &io::write_summary(&report))?;
            dir.write("score_checks.csv", &io::write_score_checks(&report))?;
            manifest.setting("skipped_replications", report.skipped);
            dir.finish(manifest)?;
            Ok(EXIT_OK)
        }
        Command::Report { dirs, out } => {
            let mut manifest = RunManifest::new("report", args);
            let mut text = String::new();
            for d in &dirs {
                manifest.inputs.push(d.clone());
                text.push_str(&report_section(d)?);
            }
            let mut dir = OutDir::create(&out.out)?;
            dir.write("report.txt", &text)?;
            dir.finish(manifest)?;
            Ok(EXIT_OK)
        }
        Command::Rerun { .. } => bail!("a rerun manifest cannot itself describe a rerun"),
    }
}

#[allow(clippy::too_many_arguments)]
fn sim_config(
    file: &SimFile,
    seed: u64,
    replications: usize,
    n: Option<usize>,
    k: Option<usize>,
    options: Option<u32>,
    guess_rate: Option<f64>,
    fit_irt: bool,
) -> Result<ExperimentConfig> {
    let n = n.or(file.n).unwrap_or(1000);
    let options = match (options, &file.options) {
        (Some(m), _) => OptionCounts::Uniform(m),
        (None, Some(o)) => o.clone(),
        (None, None) => OptionCounts::Uniform(4),
    };
    let k = match (&options, k.or(file.k)) {
        (OptionCounts::PerItem(v), None) => v.len(),
        (_, Some(k)) => k,
        (_, None) => 20,
    };
    let mut sim = SimConfig::new(n, k, guess_rate.or(file.guess_rate).unwrap_or(0.5), seed);
    sim.options = match options {
        OptionCounts::Uniform(m) => vec![m; k],
        OptionCounts::PerItem(v) => v,
    };
    let normal = |mean: Option<f64>, sd: Option<f64>| Distribution::Normal {
        mean: mean.unwrap_or(0.0),
        sd: sd.unwrap_or(1.0),
    };
    sim.theta = normal(file.theta_mean, file.theta_sd);
    sim.delta = normal(file.delta_mean, file.delta_sd);
    sim.model = match file.model.as_deref().unwrap_or("rasch") {
        "rasch" => GenerationModel::Rasch,
        "2pl-item" => GenerationModel::TwoPlItem {
            d_min: file.d_min.unwrap_or(0.5),
            d_max: file.d_max.unwrap_or(2.5),
        },
        other => bail!("unknown generation model `{other}` (expected rasch or 2pl-item)"),
    };
    sim.validate()?;
    let mut experiment = ExperimentConfig::new(sim, replications);
    experiment.fit_irt = fit_irt || file.fit_irt.unwrap_or(false);
    Ok(experiment)
}

const REPORT_FILES: [&str; 8] = [
    "summary.csv",
    "score_checks.csv",
    "reliability.txt",
    "diagnostics.txt",
    "itemstats.csv",
    "intercorr.csv",
    "prune_report.csv",
    "scores.csv",
];

fn report_section(dir: &Path) -> Result<String> {
    let manifest = RunManifest::read(&dir.join(MANIFEST_FILE))?;
    let mut text = format!("== {} ({}) ==\n", dir.display(), manifest.command);
    for (key, value) in &manifest.settings {
        text.push_str(&format!("{key}: {value}\n"));
    }
    if let Some(seed) = manifest.seed {
        text.push_str(&format!("seed: {seed}\n"));
    }
    for name in REPORT_FILES {
        let path = dir.join(name);
        if path.exists() {
            text.push_str(&format!("\n-- {name} --\n"));
            text.push_str(&read_text(&path)?);
        }
    }
    text.push('\n');
    Ok(text)
}

fn strip_out(args: &[String]) -> Vec<String> {
    let mut kept = Vec::with_capacity(args.len());
    let mut iter = args.iter();
    while let Some(a) = iter.next() {
        if a == "--out" || a == "-o" {
            iter.next();
        } else if !a.starts_with("--out=") {
            kept.push(a.clone());
        }
    }
    kept
}

fn recorded_out(args: &[String]) -> PathBuf {
    let mut iter = args.iter();
    let mut out = PathBuf::from(".");
    while let Some(a) = iter.next() {
        if a == "--out" || a == "-o" {
            if let Some(v) = iter.next() {
                out = v.into();
            }
        } else if let Some(v) = a.strip_prefix("--out=") {
            out = v.into();
        }
    }
    out
}

fn rerun(path: &Path, out: Option<&Path>) -> Result<u8> {
    let manifest = RunManifest::read(path)?;
    let cwd = std::env::current_dir()?;
    let out = match out {
        Some(o) => cwd.join(o),
        None => manifest.working_dir.join(recorded_out(&manifest.args)),
    };
    let mut args = strip_out(&manifest.args);
    args.push("--out".into());
    args.push(out.display().to_string());
    if let (Some(seed), true) = (manifest.seed, !args.iter().any(|a| a == "--seed")) {
        args.push("--seed".into());
        args.push(seed.to_string());
    }
    std::env::set_current_dir(&manifest.working_dir).with_context(|| {
        format!("entering recorded working directory {}", manifest.working_dir.display())
    })?;
    let cli = <Cli as clap::Parser>::try_parse_from(
        std::iter::once("corrmat".to_string()).chain(args.iter().cloned()),
    )
    .context("recorded arguments no longer parse")?;
    execute(cli.command, &args)
}
