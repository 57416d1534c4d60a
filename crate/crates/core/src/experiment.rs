//! Recovery experiments: every estimator is computed on the distorted and the
//! corrected matrix of a replication and compared with its value on the true
//! matrix of the same replication.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result, Stat};
use crate::irt::{fit, FitConfig, Model};
use crate::matrix::{prune_jointly, MatrixKind, ScoredMatrix};
use crate::reliability::{cronbach_alpha, kr20, split_half, SplitScheme};
use crate::sim::{simulate, SimBundle, SimConfig};
use crate::stats::{correction_coefficient, intercorrelation_matrix, mean, pearson, var_sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Estimator {
    PersonScoreMean,
    ItemTotalRaw,
    ItemTotalScaled,
    EasyItemTotalRaw,
    IntercorrRaw,
    IntercorrScaled,
    Kr20,
    Alpha,
    SplitHalf,
    IrtDelta,
}

impl Estimator {
    pub const ALL: [Estimator; 10] = [
        Estimator::PersonScoreMean,
        Estimator::ItemTotalRaw,
        Estimator::ItemTotalScaled,
        Estimator::EasyItemTotalRaw,
        Estimator::IntercorrRaw,
        Estimator::IntercorrScaled,
        Estimator::Kr20,
        Estimator::Alpha,
        Estimator::SplitHalf,
        Estimator::IrtDelta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::PersonScoreMean => "person_score_mean",
            Estimator::ItemTotalRaw => "item_total_r",
            Estimator::ItemTotalScaled => "item_total_r_scaled",
            Estimator::EasyItemTotalRaw => "easy_item_total_r",
            Estimator::IntercorrRaw => "intercorr_r",
            Estimator::IntercorrScaled => "intercorr_r_scaled",
            Estimator::Kr20 => "kr20",
            Estimator::Alpha => "alpha",
            Estimator::SplitHalf => "split_half",
            Estimator::IrtDelta => "irt_delta",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One estimator on one matrix of one replication. For estimators defined per
/// item (or item pair) `estimate` and `reference` are means over the items
/// where both are defined and `mean_abs_dev` is the mean absolute per-item
/// deviation; for scalar estimators it is `|estimate - reference|`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorRow {
    pub replication: usize,
    pub estimator: Estimator,
    pub matrix: MatrixKind,
    pub reference: f64,
    pub estimate: f64,
    pub mean_abs_dev: f64,
    pub count: usize,
}

impl EstimatorRow {
    pub fn error(&self) -> f64 {
        self.estimate - self.reference
    }
}

/// Person-score checks of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreCheck {
    pub replication: usize,
    pub mean_true: f64,
    pub mean_distorted: f64,
    pub mean_corrected: f64,
    /// Standard error of the mean corrected-minus-true person difference.
    pub se_corrected: f64,
    /// Mean of `c (k - T_i)` over persons, with `c` the configured success
    /// rate of guessing.
    pub expected_distorted_gap: f64,
    /// Standard error of the mean distorted gap around its expectation.
    pub se_distorted_gap: f64,
    /// Whether every distorted person score is at least the true score.
    pub distorted_dominates: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub sim: SimConfig,
    pub replications: usize,
    /// Also fit a Rasch model on each jointly pruned matrix.
    pub fit_irt: bool,
    pub fit_config: FitConfig,
}

impl ExperimentConfig {
    pub fn new(sim: SimConfig, replications: usize) -> Self {
        ExperimentConfig {
            sim,
            replications,
            fit_irt: false,
            fit_config: FitConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub estimator: Estimator,
    pub matrix: MatrixKind,
    pub replications: usize,
    pub bias: f64,
    pub rmse: f64,
    pub mean_abs_dev: f64,
    /// Standard error of `bias` across replications.
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub rows: Vec<EstimatorRow>,
    pub score_checks: Vec<ScoreCheck>,
    /// Replications skipped because pruning left nothing to fit.
    pub skipped: usize,
}

impl ExperimentReport {
    pub fn rows_for(&self, estimator: Estimator, matrix: MatrixKind) -> impl Iterator<Item = &EstimatorRow> {
        self.rows
            .iter()
            .filter(move |r| r.estimator == estimator && r.matrix == matrix)
    }

    /// Bias, RMSE and standard error per estimator and matrix.
    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut out = Vec::new();
        for estimator in Estimator::ALL {
            for matrix in [MatrixKind::Distorted, MatrixKind::Corrected] {
                let errors: Vec<f64> = self.rows_for(estimator, matrix).map(|r| r.error()).collect();
                if errors.is_empty() {
                    continue;
                }
                let mads: Vec<f64> = self.rows_for(estimator, matrix).map(|r| r.mean_abs_dev).collect();
                let count = errors.len();
                let se = if count > 1 {
                    (var_sample(&errors) / count as f64).sqrt()
                } else {
                    f64::NAN
                };
                out.push(SummaryRow {
                    estimator,
                    matrix,
                    replications: count,
                    bias: mean(&errors),
                    rmse: (errors.iter().map(|e| e * e).sum::<f64>() / count as f64).sqrt(),
                    mean_abs_dev: mean(&mads),
                    se,
                });
            }
        }
        out
    }
}

/// Per-item item-total correlations with the totals of the same matrix.
fn item_total(matrix: &ScoredMatrix, scaled: bool) -> Vec<Stat> {
    let totals = matrix.person_totals();
    (0..matrix.n_items())
        .map(|j| {
            let column = matrix.column(j);
            let r = pearson(&column, &totals)?;
            if scaled {
                Ok(correction_coefficient(&column)? * r)
            } else {
                Ok(r)
            }
        })
        .collect()
}

fn paired(
    replication: usize,
    estimator: Estimator,
    matrix: MatrixKind,
    reference: &[Stat],
    estimate: &[Stat],
    include: impl Fn(usize) -> bool,
) -> Option<EstimatorRow> {
    let pairs: Vec<(f64, f64)> = reference
        .iter()
        .zip(estimate)
        .enumerate()
        .filter(|(j, _)| include(*j))
        .filter_map(|(_, (a, b))| Some((a.clone().ok()?, b.clone().ok()?)))
        .collect();
    if pairs.is_empty() {
        return None;
    }
    let count = pairs.len() as f64;
    Some(EstimatorRow {
        replication,
        estimator,
        matrix,
        reference: pairs.iter().map(|p| p.0).sum::<f64>() / count,
        estimate: pairs.iter().map(|p| p.1).sum::<f64>() / count,
        mean_abs_dev: pairs.iter().map(|p| (p.1 - p.0).abs()).sum::<f64>() / count,
        count: pairs.len(),
    })
}

fn scalar(
    replication: usize,
    estimator: Estimator,
    matrix: MatrixKind,
    reference: Stat,
    estimate: Stat,
) -> Option<EstimatorRow> {
    paired(replication, estimator, matrix, &[reference], &[estimate], |_| true)
}

fn intercorrelations(matrix: &ScoredMatrix) -> Result<(Vec<Stat>, Vec<Stat>)> {
    let table = intercorrelation_matrix(matrix)?;
    let raw = table.pairs().map(|(_, _, e)| e.raw.clone()).collect();
    let scaled = table.pairs().map(|(_, _, e)| e.scaled.clone()).collect();
    Ok((raw, scaled))
}

fn score_check(replication: usize, bundle: &SimBundle, c: f64) -> ScoreCheck {
    let t = bundle.true_matrix.person_totals();
    let d = bundle.distorted_matrix.person_totals();
    let r = bundle.corrected_matrix.person_totals();
    let k = bundle.true_matrix.n_items() as f64;
    let n = t.len() as f64;
    let corrected_diff: Vec<f64> = r.iter().zip(&t).map(|(a, b)| a - b).collect();
    let gap_residual: Vec<f64> = d
        .iter()
        .zip(&t)
        .map(|(a, b)| (a - b) - c * (k - b))
        .collect();
    let se = |v: &[f64]| if v.len() > 1 { (var_sample(v) / n).sqrt() } else { f64::NAN };
    ScoreCheck {
        replication,
        mean_true: mean(&t),
        mean_distorted: mean(&d),
        mean_corrected: mean(&r),
        se_corrected: se(&corrected_diff),
        expected_distorted_gap: t.iter().map(|b| c * (k - b)).sum::<f64>() / n,
        se_distorted_gap: se(&gap_residual),
        distorted_dominates: d.iter().zip(&t).all(|(a, b)| a >= b),
    }
}

struct ReplicationResult {
    rows: Vec<EstimatorRow>,
    check: ScoreCheck,
    skipped: bool,
}

fn run_replication(config: &ExperimentConfig, replication: usize) -> Result<ReplicationResult> {
    let bundle = simulate(&config.sim, replication as u64)?;
    let truth = &bundle.true_matrix;
    let true_p: Vec<f64> = (0..truth.n_items()).map(|j| mean(&truth.column(j))).collect();
    let true_r = item_total(truth, false);
    let (true_ic, _) = intercorrelations(truth)?;
    let true_kr20 = kr20(truth).value;
    let true_alpha = cronbach_alpha(truth).value;
    let true_split = split_half(truth, SplitScheme::OddEven).value;
    let true_mean = Ok(mean(&truth.person_totals()));

    let mut rows = Vec::new();
    for (kind, m) in [
        (MatrixKind::Distorted, &bundle.distorted_matrix),
        (MatrixKind::Corrected, &bundle.corrected_matrix),
    ] {
        let (ic_raw, ic_scaled) = intercorrelations(m)?;
        let raw = item_total(m, false);
        rows.extend(
            [
                scalar(replication, Estimator::PersonScoreMean, kind, true_mean.clone(), Ok(mean(&m.person_totals()))),
                paired(replication, Estimator::ItemTotalRaw, kind, &true_r, &raw, |_| true),
                paired(replication, Estimator::ItemTotalScaled, kind, &true_r, &item_total(m, true), |_| true),
                paired(replication, Estimator::EasyItemTotalRaw, kind, &true_r, &raw, |j| true_p[j] > 0.5),
                paired(replication, Estimator::IntercorrRaw, kind, &true_ic, &ic_raw, |_| true),
                paired(replication, Estimator::IntercorrScaled, kind, &true_ic, &ic_scaled, |_| true),
                scalar(replication, Estimator::Kr20, kind, true_kr20.clone(), kr20(m).value),
                scalar(replication, Estimator::Alpha, kind, true_alpha.clone(), cronbach_alpha(m).value),
                scalar(replication, Estimator::SplitHalf, kind, true_split.clone(), split_half(m, SplitScheme::OddEven).value),
            ]
            .into_iter()
            .flatten(),
        );
    }

    let mut skipped = false;
    if config.fit_irt {
        let (kept, _) = prune_jointly(&[truth, &bundle.distorted_matrix, &bundle.corrected_matrix])?;
        match kept {
            Some(kept) => {
                let fits = kept
                    .iter()
                    .map(|m| fit(m, Model::Rasch, &config.fit_config))
                    .collect::<Result<Vec<_>>>()?;
                let reference: Vec<Stat> = fits[0].params.delta.iter().map(|&d| Ok(d)).collect();
                for (kind, f) in [(MatrixKind::Distorted, &fits[1]), (MatrixKind::Corrected, &fits[2])] {
                    let estimate: Vec<Stat> = f.params.delta.iter().map(|&d| Ok(d)).collect();
                    rows.extend(paired(replication, Estimator::IrtDelta, kind, &reference, &estimate, |_| true));
                }
            }
            None => skipped = true,
        }
    }

    Ok(ReplicationResult {
        rows,
        check: score_check(replication, &bundle, config.sim.effective_guess_rate()),
        skipped,
    })
}

/// Runs all replications (in parallel) and collects their rows in
/// replication order.
pub fn run_recovery_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    if config.replications == 0 {
        return Err(Error::Config("replications must be at least 1".into()));
    }
    config.sim.validate()?;
    let results = (0..config.replications)
        .into_par_iter()
        .map(|r| run_replication(config, r))
        .collect::<Result<Vec<_>>>()?;
    let mut report = ExperimentReport {
        rows: Vec::new(),
        score_checks: Vec::new(),
        skipped: 0,
    };
    for r in results {
        report.rows.extend(r.rows);
        report.score_checks.push(r.check);
        report.skipped += usize::from(r.skipped);
    }
    Ok(report)
}
