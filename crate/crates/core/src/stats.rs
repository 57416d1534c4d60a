//! Classical item statistics with the correction coefficient for matrices that
//! carry negative corrective elements.
//!
//! On a corrected matrix every item column has a larger spread than the
//! column of the underlying true matrix, so Pearson correlations computed on
//! it come out too low. The coefficient
//!
//! ```text
//! K_j = sqrt(var_pop(x_j) / (p_j (1 - p_j)))
//! ```
//!
//! with `p_j` the plain column mean rescales them: item-total correlations are
//! multiplied by `K_j`, inter-item correlations by `K_s K_t`. On dichotomous
//! columns `K_j = 1` and nothing changes.
//!
//! Variances use the population (divide by `n`) convention unless stated.

use crate::error::{Error, Result, Stat, Undefined};
use crate::matrix::{MatrixKind, Scheme, ScoredMatrix};

/// Default validity threshold for corrected item-total correlations.
pub const VALIDITY_THRESHOLD: f64 = 0.2;

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn var_pop(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64
}

pub fn var_sample(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    var_pop(x) * n / (n - 1.0)
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<(), Undefined> {
    if x.len() != y.len() {
        return Err(Undefined::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Undefined::TooShort { len: x.len() });
    }
    Ok(())
}

fn is_constant(x: &[f64]) -> bool {
    x.iter().all(|v| *v == x[0])
}

/// Product-moment correlation from centred deviations.
pub fn pearson(x: &[f64], y: &[f64]) -> Stat {
    check_pair(x, y)?;
    if is_constant(x) || is_constant(y) {
        return Err(Undefined::ConstantVector);
    }
    let mx = mean(x);
    let my = mean(y);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    Ok(sxy / (sxx.sqrt() * syy.sqrt()))
}

/// The same correlation written with raw moments,
/// `(Σxy - n x̄ ȳ) / (sqrt(Σx² - n x̄²) sqrt(Σy² - n ȳ²))`.
pub fn pearson_moments(x: &[f64], y: &[f64]) -> Stat {
    check_pair(x, y)?;
    if is_constant(x) || is_constant(y) {
        return Err(Undefined::ConstantVector);
    }
    let n = x.len() as f64;
    let mx = mean(x);
    let my = mean(y);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    Ok((sxy - n * mx * my) / ((sxx - n * mx * mx).sqrt() * (syy - n * my * my).sqrt()))
}

/// Point-biserial correlation of a 0/1 column with total scores.
///
/// `s_y` uses the sample (n - 1) divisor, which makes the result identical
/// to [`pearson`] on the same vectors.
pub fn point_biserial(column: &[f64], totals: &[f64]) -> Stat {
    check_pair(column, totals)?;
    if column.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Undefined::NotDichotomous);
    }
    if is_constant(totals) {
        return Err(Undefined::ConstantVector);
    }
    let (mut sum1, mut n1, mut sum0, mut n0) = (0.0, 0usize, 0.0, 0usize);
    for (&x, &y) in column.iter().zip(totals) {
        if x == 1.0 {
            sum1 += y;
            n1 += 1;
        } else {
            sum0 += y;
            n0 += 1;
        }
    }
    if n1 == 0 || n0 == 0 {
        return Err(Undefined::SingleClass);
    }
    let n = column.len() as f64;
    let m1 = sum1 / n1 as f64;
    let m0 = sum0 / n0 as f64;
    let s_y = var_sample(totals).sqrt();
    Ok((m1 - m0) / s_y * ((n0 as f64 * n1 as f64) / (n * (n - 1.0))).sqrt())
}

/// `K_j = sqrt(var_pop / (p (1 - p)))` where `p` is the column mean.
pub fn correction_coefficient(column: &[f64]) -> Stat {
    if column.is_empty() {
        return Err(Undefined::TooShort { len: 0 });
    }
    let p = mean(column);
    if p <= 0.0 || p >= 1.0 {
        return Err(Undefined::MeanOutOfRange);
    }
    Ok((var_pop(column) / (p * (1.0 - p))).sqrt())
}

/// Pearson correlation of column `j` with the person totals.
pub fn item_total_correlation(matrix: &ScoredMatrix, j: usize) -> Stat {
    pearson(&matrix.column(j), &matrix.person_totals())
}

/// Correlation of column `j` with the totals over all other items.
pub fn item_rest_correlation(matrix: &ScoredMatrix, j: usize) -> Stat {
    if matrix.n_items() < 2 {
        return Err(Undefined::TooFewItems);
    }
    let column = matrix.column(j);
    let rest: Vec<f64> = matrix
        .person_totals()
        .iter()
        .zip(&column)
        .map(|(t, x)| t - x)
        .collect();
    pearson(&column, &rest)
}

/// `K_j` times the item-total correlation.
pub fn corrected_item_total(matrix: &ScoredMatrix, j: usize) -> Stat {
    let column = matrix.column(j);
    let k = correction_coefficient(&column)?;
    Ok(k * pearson(&column, &matrix.person_totals())?)
}

/// Corrected item-total correlation evaluated in one step: the item spread
/// `sqrt(Σx² - n x̄²)` in the denominator is replaced by `sqrt(n p (1 - p))`.
pub fn corrected_item_total_direct(matrix: &ScoredMatrix, j: usize) -> Stat {
    let x = matrix.column(j);
    let y = matrix.person_totals();
    check_pair(&x, &y)?;
    if is_constant(&y) {
        return Err(Undefined::ConstantVector);
    }
    let n = x.len() as f64;
    let p = mean(&x);
    if p <= 0.0 || p >= 1.0 {
        return Err(Undefined::MeanOutOfRange);
    }
    let my = mean(&y);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - p) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    Ok(sxy / ((n * p * (1.0 - p)).sqrt() * syy.sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Validity {
    Valid,
    Invalid,
    Unassessable,
}

impl Validity {
    pub fn name(self) -> &'static str {
        match self {
            Validity::Valid => "valid",
            Validity::Invalid => "invalid",
            Validity::Unassessable => "unassessable",
        }
    }
}

pub fn validity(r_corrected: &Stat, threshold: f64) -> Validity {
    match r_corrected {
        Ok(r) if *r >= threshold => Validity::Valid,
        Ok(_) => Validity::Invalid,
        Err(_) => Validity::Unassessable,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItemStats {
    pub item_id: String,
    /// Number of persons the statistics were computed on.
    pub n: usize,
    pub p: f64,
    pub var_pop: f64,
    pub var_sample: f64,
    pub k: Stat,
    pub r_raw: Stat,
    pub r_corrected: Stat,
    pub r_rest: Stat,
    pub valid: Validity,
}

pub fn validity_flags(stats: &[ItemStats], threshold: f64) -> Vec<Validity> {
    stats.iter().map(|s| validity(&s.r_corrected, threshold)).collect()
}

fn require_classical_input(matrix: &ScoredMatrix) -> Result<()> {
    if matrix.kind() == MatrixKind::Corrected && matrix.scheme() == Scheme::Punitive {
        return Err(Error::UnsupportedScheme(
            Scheme::Punitive.to_string(),
            "punitive scores are for score comparison only; use the corrected scheme".into(),
        ));
    }
    Ok(())
}

/// Item statistics for every column.
pub fn item_stats(matrix: &ScoredMatrix, threshold: f64) -> Result<Vec<ItemStats>> {
    require_classical_input(matrix)?;
    let totals = matrix.person_totals();
    let n = matrix.n_persons();
    Ok((0..matrix.n_items())
        .map(|j| {
            let column = matrix.column(j);
            let k = correction_coefficient(&column);
            let r_raw = pearson(&column, &totals);
            let r_corrected = match (&k, &r_raw) {
                (Ok(k), Ok(r)) => Ok(k * r),
                (Err(e), _) | (_, Err(e)) => Err(e.clone()),
            };
            let valid = validity(&r_corrected, threshold);
            let (var_pop, var_sample) = if n >= 2 {
                (var_pop(&column), var_sample(&column))
            } else {
                (0.0, f64::NAN)
            };
            ItemStats {
                item_id: matrix.items().get(j).id.clone(),
                n,
                p: mean(&column),
                var_pop,
                var_sample,
                k,
                r_raw,
                r_corrected,
                r_rest: item_rest_correlation(matrix, j),
                valid,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Intercorrelation {
    pub raw: Stat,
    /// `K_s K_t` times the raw value. May exceed 1 in finite samples.
    pub scaled: Stat,
}

impl Intercorrelation {
    pub fn out_of_range(&self) -> bool {
        matches!(self.scaled, Ok(v) if v.abs() > 1.0)
    }
}

/// Symmetric `k x k` table of item intercorrelations.
#[derive(Debug, Clone, PartialEq)]
pub struct Intercorrelations {
    pub item_ids: Vec<String>,
    entries: Vec<Intercorrelation>,
}

impl Intercorrelations {
    pub fn len(&self) -> usize {
        self.item_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.item_ids.is_empty()
    }

    pub fn get(&self, s: usize, t: usize) -> &Intercorrelation {
        &self.entries[s * self.item_ids.len() + t]
    }

    /// Off-diagonal pairs `(s, t)` with `s < t`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, &Intercorrelation)> + '_ {
        let k = self.len();
        (0..k).flat_map(move |s| ((s + 1)..k).map(move |t| (s, t, self.get(s, t))))
    }
}

pub fn intercorrelation_matrix(matrix: &ScoredMatrix) -> Result<Intercorrelations> {
    require_classical_input(matrix)?;
    let k = matrix.n_items();
    let columns: Vec<Vec<f64>> = (0..k).map(|j| matrix.column(j)).collect();
    let coefficients: Vec<Stat> = columns.iter().map(|c| correction_coefficient(c)).collect();
    let mut entries = Vec::with_capacity(k * k);
    for s in 0..k {
        for t in 0..k {
            let entry = if s == t {
                Intercorrelation {
                    raw: Ok(1.0),
                    scaled: Ok(1.0),
                }
            } else {
                let raw = pearson(&columns[s], &columns[t]);
                let scaled = match (&raw, &coefficients[s], &coefficients[t]) {
                    (Ok(r), Ok(ks), Ok(kt)) => Ok(ks * kt * r),
                    (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => Err(e.clone()),
                };
                Intercorrelation { raw, scaled }
            };
            entries.push(entry);
        }
    }
    Ok(Intercorrelations {
        item_ids: matrix.items().items().iter().map(|i| i.id.clone()).collect(),
        entries,
    })
}
