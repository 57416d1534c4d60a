//! Reliability coefficients.
//!
//! KR-20 and Cronbach's alpha use population (divide by `n`) variances
//! throughout. `p(1 - p)` is the population variance of a 0/1 column, so under
//! this convention alpha and KR-20 coincide exactly on dichotomous matrices.
//! On a corrected matrix the column variance exceeds `p(1 - p)`, which makes
//! alpha biased low; KR-20 with `p` taken as the column mean stays usable.

use crate::error::{Stat, Undefined};
use crate::matrix::{double_order, MatrixKind, ScoredMatrix};
use crate::stats::{mean, pearson, var_pop};

/// Warning attached to Cronbach's alpha computed on a corrected matrix.
pub const ALPHA_CORRECTED_WARNING: &str = "Cronbach's alpha is not a valid reliability estimate for a corrected matrix: negative corrective elements make each item variance exceed p_j(1-p_j), biasing alpha low; use KR-20 instead";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    TestRetest,
    SplitHalf,
    Kr20,
    CronbachAlpha,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::TestRetest => "test-retest",
            Method::SplitHalf => "split-half",
            Method::Kr20 => "kr20",
            Method::CronbachAlpha => "alpha",
        }
    }

    pub fn from_name(name: &str) -> Option<Method> {
        [Method::TestRetest, Method::SplitHalf, Method::Kr20, Method::CronbachAlpha]
            .into_iter()
            .find(|m| m.name() == name)
    }
}

/// How items are assigned to the two halves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitScheme {
    /// Items ordered by descending item score, then alternated.
    #[default]
    OddEven,
    /// First `ceil(k/2)` items against the rest, in matrix order.
    FirstSecond,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HalvesDetail {
    /// Pearson correlation of the two half scores.
    pub r_halves: Stat,
    /// `1 - s_d² / s_y²` with `d` the per-person half-score difference.
    pub r_half_test: Stat,
    /// Spearman-Brown projection of `r_half_test` to full length.
    pub r_full_spearman_brown: Stat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityReport {
    pub method: Method,
    pub value: Stat,
    pub halves: Option<HalvesDetail>,
    pub warning: Option<String>,
}

pub fn spearman_brown(r: f64) -> f64 {
    2.0 * r / (1.0 + r)
}

pub fn test_retest(scores_1: &[f64], scores_2: &[f64]) -> ReliabilityReport {
    ReliabilityReport {
        method: Method::TestRetest,
        value: pearson(scores_1, scores_2),
        halves: None,
        warning: None,
    }
}

fn undefined(method: Method, reason: Undefined) -> ReliabilityReport {
    ReliabilityReport {
        method,
        value: Err(reason.clone()),
        halves: (method == Method::SplitHalf).then(|| HalvesDetail {
            r_halves: Err(reason.clone()),
            r_half_test: Err(reason.clone()),
            r_full_spearman_brown: Err(reason),
        }),
        warning: None,
    }
}

/// Column indices of the two halves.
pub fn split_items(matrix: &ScoredMatrix, scheme: SplitScheme) -> (Vec<usize>, Vec<usize>) {
    let k = matrix.n_items();
    match scheme {
        SplitScheme::OddEven => {
            let order = double_order(matrix).column_order;
            let first = order.iter().copied().step_by(2).collect();
            let second = order.iter().copied().skip(1).step_by(2).collect();
            (first, second)
        }
        SplitScheme::FirstSecond => {
            let cut = k.div_ceil(2);
            ((0..cut).collect(), (cut..k).collect())
        }
    }
}

pub fn split_half(matrix: &ScoredMatrix, scheme: SplitScheme) -> ReliabilityReport {
    if matrix.n_items() < 2 {
        return undefined(Method::SplitHalf, Undefined::TooFewItems);
    }
    if matrix.n_persons() < 2 {
        return undefined(Method::SplitHalf, Undefined::TooShort { len: matrix.n_persons() });
    }
    let (first, second) = split_items(matrix, scheme);
    let half_score = |cols: &[usize], i: usize| cols.iter().map(|&j| matrix.get(i, j)).sum::<f64>();
    let n = matrix.n_persons();
    let a: Vec<f64> = (0..n).map(|i| half_score(&first, i)).collect();
    let b: Vec<f64> = (0..n).map(|i| half_score(&second, i)).collect();
    let totals: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
    let diffs: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();

    let s_y2 = var_pop(&totals);
    let r_half_test = if s_y2 > 0.0 {
        Ok(1.0 - var_pop(&diffs) / s_y2)
    } else {
        Err(Undefined::ZeroVariance)
    };
    let r_full = r_half_test.clone().map(spearman_brown);
    ReliabilityReport {
        method: Method::SplitHalf,
        value: r_full.clone(),
        halves: Some(HalvesDetail {
            r_halves: pearson(&a, &b),
            r_half_test,
            r_full_spearman_brown: r_full,
        }),
        warning: None,
    }
}

fn internal_consistency(
    matrix: &ScoredMatrix,
    method: Method,
    item_variance: impl Fn(&[f64]) -> f64,
) -> ReliabilityReport {
    let k = matrix.n_items();
    if k < 2 {
        return undefined(method, Undefined::TooFewItems);
    }
    if matrix.n_persons() == 0 {
        return undefined(method, Undefined::TooShort { len: 0 });
    }
    let s_y2 = var_pop(&matrix.person_totals());
    if s_y2 <= 0.0 {
        return undefined(method, Undefined::ZeroVariance);
    }
    let sum: f64 = (0..k).map(|j| item_variance(&matrix.column(j))).sum();
    let kf = k as f64;
    ReliabilityReport {
        method,
        value: Ok(kf / (kf - 1.0) * (1.0 - sum / s_y2)),
        halves: None,
        warning: None,
    }
}

/// KR-20 with `p_j` taken as the plain column mean.
pub fn kr20(matrix: &ScoredMatrix) -> ReliabilityReport {
    internal_consistency(matrix, Method::Kr20, |c| {
        let p = mean(c);
        p * (1.0 - p)
    })
}

/// Cronbach's alpha; carries a warning on corrected matrices.
pub fn cronbach_alpha(matrix: &ScoredMatrix) -> ReliabilityReport {
    let mut report = internal_consistency(matrix, Method::CronbachAlpha, var_pop);
    if matrix.kind() == MatrixKind::Corrected {
        report.warning = Some(ALPHA_CORRECTED_WARNING.to_string());
    }
    report
}
