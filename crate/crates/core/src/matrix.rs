//! Raw response matrices, scoring schemes, score vectors, ordering and pruning.
//!
//! Cell values of a [`ScoredMatrix`] are kept as exact rationals so that sign
//! tests (pruning) and score ties (ordering) never depend on rounding: a row
//! such as `[1, -1/3, -1/3, -1/3]` sums to exactly zero. A parallel `f64`
//! copy feeds the statistics modules.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = Ratio<i64>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Item {
    pub id: String,
    /// Number of answer options `m_j`.
    pub options: u32,
}

/// Item identifiers with their option counts. Ids are unique and every item
/// offers at least two options.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ItemBank {
    items: Vec<Item>,
}

impl ItemBank {
    pub fn new(items: Vec<Item>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(items.len());
        for item in &items {
            if item.options < 2 {
                return Err(Error::ItemBank(format!(
                    "item `{}` has {} options, need at least 2",
                    item.id, item.options
                )));
            }
            if !seen.insert(item.id.as_str()) {
                return Err(Error::ItemBank(format!("duplicate item id `{}`", item.id)));
            }
        }
        Ok(ItemBank { items })
    }

    /// `k` items named `I001`, `I002`, ... sharing the same option count.
    pub fn uniform(k: usize, options: u32) -> Result<Self> {
        Self::from_options(&vec![options; k])
    }

    pub fn from_options(options: &[u32]) -> Result<Self> {
        let width = options.len().to_string().len().max(3);
        Self::new(
            options
                .iter()
                .enumerate()
                .map(|(j, &m)| Item {
                    id: format!("I{:0width$}", j + 1),
                    options: m,
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn get(&self, j: usize) -> &Item {
        &self.items[j]
    }

    pub fn options(&self, j: usize) -> u32 {
        self.items[j].options
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.items.iter().position(|item| item.id == id)
    }

    pub fn subset(&self, columns: &[usize]) -> ItemBank {
        ItemBank {
            items: columns.iter().map(|&j| self.items[j].clone()).collect(),
        }
    }
}

/// Judged outcome of one person on one item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Correct,
    Wrong,
    Omitted,
}

impl Outcome {
    /// Code used in response CSV files.
    pub fn code(self) -> &'static str {
        match self {
            Outcome::Correct => "1",
            Outcome::Wrong => "W",
            Outcome::Omitted => ".",
        }
    }

    pub fn from_code(code: &str) -> Option<Outcome> {
        match code {
            "1" => Some(Outcome::Correct),
            "W" => Some(Outcome::Wrong),
            "." => Some(Outcome::Omitted),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseMatrix {
    persons: Vec<String>,
    items: ItemBank,
    cells: Vec<Outcome>,
}

impl ResponseMatrix {
    /// `cells` is row-major with one row per person.
    pub fn new(persons: Vec<String>, items: ItemBank, cells: Vec<Outcome>) -> Result<Self> {
        if cells.len() != persons.len() * items.len() {
            return Err(Error::Dimension(format!(
                "{} cells for {} persons x {} items",
                cells.len(),
                persons.len(),
                items.len()
            )));
        }
        Ok(ResponseMatrix {
            persons,
            items,
            cells,
        })
    }

    pub fn n_persons(&self) -> usize {
        self.persons.len()
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn persons(&self) -> &[String] {
        &self.persons
    }

    pub fn items(&self) -> &ItemBank {
        &self.items
    }

    pub fn get(&self, i: usize, j: usize) -> Outcome {
        self.cells[i * self.items.len() + j]
    }

    pub fn row(&self, i: usize) -> &[Outcome] {
        let k = self.items.len();
        &self.cells[i * k..(i + 1) * k]
    }
}

/// How wrong answers enter the numeric matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Wrong answers score 0, like omissions (guessed ones stay in).
    Ignore,
    /// Every wrong answer costs one point.
    Punitive,
    /// Every wrong answer scores `-1/(m_j - 1)`.
    CorrectedElements,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Ignore => "ignore",
            Scheme::Punitive => "punitive",
            Scheme::CorrectedElements => "corrected",
        }
    }

    pub fn from_name(name: &str) -> Option<Scheme> {
        match name {
            "ignore" => Some(Scheme::Ignore),
            "punitive" => Some(Scheme::Punitive),
            "corrected" => Some(Scheme::CorrectedElements),
            _ => None,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MatrixKind {
    /// No guessing took place (only available from simulation).
    True,
    /// Guessed ones are indistinguishable from known ones.
    Distorted,
    /// Wrong answers carry negative corrective elements.
    Corrected,
}

impl MatrixKind {
    pub fn name(self) -> &'static str {
        match self {
            MatrixKind::True => "true",
            MatrixKind::Distorted => "distorted",
            MatrixKind::Corrected => "corrected",
        }
    }

    pub fn from_name(name: &str) -> Option<MatrixKind> {
        match name {
            "true" => Some(MatrixKind::True),
            "distorted" => Some(MatrixKind::Distorted),
            "corrected" => Some(MatrixKind::Corrected),
            _ => None,
        }
    }
}

impl fmt::Display for MatrixKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `-1/(m - 1)`, the value recorded for a wrong answer to an `m`-option item.
pub fn corrective_element(options: u32) -> Rational {
    Rational::new(-1, i64::from(options) - 1)
}

pub fn rational_to_f64(value: &Rational) -> f64 {
    *value.numer() as f64 / *value.denom() as f64
}

fn big_to_f64(value: &BigRational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Exact sum of small rationals. Numerators are accumulated per denominator in
/// `i64` and only the final combination uses big integers.
pub fn exact_sum<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigRational {
    let mut by_denominator: BTreeMap<i64, i64> = BTreeMap::new();
    for v in values {
        if !v.is_zero() {
            *by_denominator.entry(*v.denom()).or_insert(0) += *v.numer();
        }
    }
    by_denominator
        .into_iter()
        .fold(BigRational::zero(), |acc, (den, num)| {
            acc + BigRational::new(BigInt::from(num), BigInt::from(den))
        })
}

/// Numeric test matrix tagged with its kind and the scheme that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredMatrix {
    persons: Vec<String>,
    items: ItemBank,
    values: Vec<Rational>,
    floats: Vec<f64>,
    kind: MatrixKind,
    scheme: Scheme,
}

impl ScoredMatrix {
    /// Builds a matrix from row-major exact values, checking that every value
    /// is admissible for the kind and scheme.
    pub fn new(
        persons: Vec<String>,
        items: ItemBank,
        values: Vec<Rational>,
        kind: MatrixKind,
        scheme: Scheme,
    ) -> Result<Self> {
        let k = items.len();
        if values.len() != persons.len() * k {
            return Err(Error::Dimension(format!(
                "{} values for {} persons x {} items",
                values.len(),
                persons.len(),
                k
            )));
        }
        if kind == MatrixKind::Corrected && scheme == Scheme::Ignore {
            return Err(Error::UnsupportedScheme(
                scheme.to_string(),
                "a corrected matrix needs a scheme that records wrong answers".into(),
            ));
        }
        for (idx, v) in values.iter().enumerate() {
            let j = idx % k.max(1);
            if !admissible(v, kind, scheme, items.options(j)) {
                return Err(Error::CellValue {
                    row: idx / k,
                    column: j,
                    value: v.to_string(),
                    reason: format!("not admissible for a {kind} matrix under scheme {scheme}"),
                });
            }
        }
        let floats = values.iter().map(rational_to_f64).collect();
        Ok(ScoredMatrix {
            persons,
            items,
            values,
            floats,
            kind,
            scheme,
        })
    }

    /// Dichotomous matrix from booleans.
    pub fn from_binary(
        persons: Vec<String>,
        items: ItemBank,
        cells: &[bool],
        kind: MatrixKind,
    ) -> Result<Self> {
        let values = cells
            .iter()
            .map(|&c| if c { Rational::one() } else { Rational::zero() })
            .collect();
        Self::new(persons, items, values, kind, Scheme::Ignore)
    }

    pub fn n_persons(&self) -> usize {
        self.persons.len()
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn persons(&self) -> &[String] {
        &self.persons
    }

    pub fn items(&self) -> &ItemBank {
        &self.items
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn value(&self, i: usize, j: usize) -> &Rational {
        &self.values[i * self.items.len() + j]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.floats[i * self.items.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let k = self.items.len();
        &self.floats[i * k..(i + 1) * k]
    }

    pub fn exact_row(&self, i: usize) -> &[Rational] {
        let k = self.items.len();
        &self.values[i * k..(i + 1) * k]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_persons()).map(|i| self.get(i, j)).collect()
    }

    pub fn exact_column(&self, j: usize) -> impl Iterator<Item = &Rational> + '_ {
        let k = self.items.len();
        self.values.iter().skip(j).step_by(k.max(1))
    }

    /// Person totals in floating point.
    pub fn person_totals(&self) -> Vec<f64> {
        (0..self.n_persons())
            .map(|i| self.row(i).iter().sum())
            .collect()
    }

    /// True when at least one cell is negative.
    pub fn has_negative(&self) -> bool {
        self.values.iter().any(|v| v.is_negative())
    }

    /// Whether every cell is 0 or 1.
    pub fn is_dichotomous(&self) -> bool {
        self.values.iter().all(|v| v.is_zero() || v.is_one())
    }

    /// Sub-matrix keeping the given original row and column indices, in order.
    pub fn select(&self, rows: &[usize], columns: &[usize]) -> ScoredMatrix {
        let mut values = Vec::with_capacity(rows.len() * columns.len());
        for &i in rows {
            for &j in columns {
                values.push(*self.value(i, j));
            }
        }
        let floats = values.iter().map(rational_to_f64).collect();
        ScoredMatrix {
            persons: rows.iter().map(|&i| self.persons[i].clone()).collect(),
            items: self.items.subset(columns),
            values,
            floats,
            kind: self.kind,
            scheme: self.scheme,
        }
    }
}

fn admissible(v: &Rational, kind: MatrixKind, scheme: Scheme, options: u32) -> bool {
    if v.is_zero() || v.is_one() {
        return true;
    }
    match (kind, scheme) {
        (MatrixKind::True | MatrixKind::Distorted, _) => false,
        (MatrixKind::Corrected, Scheme::CorrectedElements) => *v == corrective_element(options),
        (MatrixKind::Corrected, Scheme::Punitive) => *v == -Rational::one(),
        (MatrixKind::Corrected, Scheme::Ignore) => false,
    }
}

/// Converts judged responses into a numeric matrix.
///
/// Omissions score 0 under every scheme; only wrong answers are penalised.
pub fn score_matrix(responses: &ResponseMatrix, scheme: Scheme) -> ScoredMatrix {
    let k = responses.n_items();
    let penalties: Vec<Rational> = (0..k)
        .map(|j| match scheme {
            Scheme::Ignore => Rational::zero(),
            Scheme::Punitive => -Rational::one(),
            Scheme::CorrectedElements => corrective_element(responses.items().options(j)),
        })
        .collect();
    let values: Vec<Rational> = responses
        .cells
        .iter()
        .enumerate()
        .map(|(idx, outcome)| match outcome {
            Outcome::Correct => Rational::one(),
            Outcome::Omitted => Rational::zero(),
            Outcome::Wrong => penalties[idx % k],
        })
        .collect();
    let kind = match scheme {
        Scheme::Ignore => MatrixKind::Distorted,
        Scheme::Punitive | Scheme::CorrectedElements => MatrixKind::Corrected,
    };
    let floats = values.iter().map(rational_to_f64).collect();
    ScoredMatrix {
        persons: responses.persons.clone(),
        items: responses.items.clone(),
        values,
        floats,
        kind,
        scheme,
    }
}

/// Signed row and column sums.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    pub person_scores: Vec<BigRational>,
    pub item_scores: Vec<BigRational>,
}

impl ScoreVector {
    pub fn person_scores_f64(&self) -> Vec<f64> {
        self.person_scores.iter().map(big_to_f64).collect()
    }

    pub fn item_scores_f64(&self) -> Vec<f64> {
        self.item_scores.iter().map(big_to_f64).collect()
    }
}

pub fn row_and_column_scores(matrix: &ScoredMatrix) -> ScoreVector {
    ScoreVector {
        person_scores: (0..matrix.n_persons())
            .map(|i| exact_sum(matrix.exact_row(i)))
            .collect(),
        item_scores: (0..matrix.n_items())
            .map(|j| exact_sum(matrix.exact_column(j)))
            .collect(),
    }
}

/// A doubly ordered matrix with the permutations that produced it.
/// `row_order[r]` is the original index of the row now at position `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ordered {
    pub matrix: ScoredMatrix,
    pub row_order: Vec<usize>,
    pub column_order: Vec<usize>,
}

fn descending_order(scores: &[BigRational]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // stable: ties keep original index order
    order.sort_by(|&a, &b| scores[b].cmp(&scores[a]));
    order
}

/// Sorts persons by descending score and items by descending item score.
pub fn double_order(matrix: &ScoredMatrix) -> Ordered {
    let scores = row_and_column_scores(matrix);
    let row_order = descending_order(&scores.person_scores);
    let column_order = descending_order(&scores.item_scores);
    Ordered {
        matrix: matrix.select(&row_order, &column_order),
        row_order,
        column_order,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    Row,
    Column,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Row => "row",
            Axis::Column => "column",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Trigger {
    /// Every entry is 0, or every entry is 1.
    AllConstant,
    /// The signed sum of entries is strictly negative.
    NegativeSum,
}

impl Trigger {
    pub fn name(self) -> &'static str {
        match self {
            Trigger::AllConstant => "all-constant",
            Trigger::NegativeSum => "negative-sum",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Removal {
    pub axis: Axis,
    /// Index in the matrix that was passed to the pruner.
    pub index: usize,
    pub id: String,
    pub trigger: Trigger,
    /// 1-based pass in which the removal happened.
    pub pass: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PruneReport {
    pub removals: Vec<Removal>,
    pub kept_rows: Vec<usize>,
    pub kept_columns: Vec<usize>,
    pub passes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PruneOutcome {
    Kept {
        matrix: ScoredMatrix,
        report: PruneReport,
    },
    /// Every row or every column was removed.
    Empty { report: PruneReport },
}

impl PruneOutcome {
    pub fn report(&self) -> &PruneReport {
        match self {
            PruneOutcome::Kept { report, .. } | PruneOutcome::Empty { report } => report,
        }
    }

    pub fn matrix(&self) -> Option<&ScoredMatrix> {
        match self {
            PruneOutcome::Kept { matrix, .. } => Some(matrix),
            PruneOutcome::Empty { .. } => None,
        }
    }

    pub fn into_matrix(self) -> Option<ScoredMatrix> {
        match self {
            PruneOutcome::Kept { matrix, .. } => Some(matrix),
            PruneOutcome::Empty { .. } => None,
        }
    }
}

fn line_trigger<'a>(values: impl Iterator<Item = &'a Rational> + Clone) -> Option<Trigger> {
    let mut iter = values.clone();
    let first = iter.next()?;
    if (first.is_zero() || first.is_one()) && iter.all(|v| v == first) {
        return Some(Trigger::AllConstant);
    }
    if exact_sum(values).is_negative() {
        return Some(Trigger::NegativeSum);
    }
    None
}

/// Removes all-constant rows and columns and rows and columns with a negative
/// sum, repeating until nothing changes.
///
/// Each pass evaluates every row and column of the matrix as it stood at the
/// start of the pass and removes all triggered lines at once.
pub fn prune(matrix: &ScoredMatrix) -> PruneOutcome {
    let (mut outcomes, report) = prune_jointly_inner(&[matrix]);
    match outcomes.pop() {
        Some(Some(m)) => PruneOutcome::Kept { matrix: m, report },
        _ => PruneOutcome::Empty { report },
    }
}

/// Prunes several same-shaped matrices with shared row and column removals:
/// a line is removed when it triggers in any of them. Used to compare, for
/// instance, a true matrix and its corrected counterpart on identical persons
/// and items.
pub fn prune_jointly(matrices: &[&ScoredMatrix]) -> Result<(Option<Vec<ScoredMatrix>>, PruneReport)> {
    if let Some(first) = matrices.first() {
        for m in &matrices[1..] {
            if m.n_persons() != first.n_persons() || m.n_items() != first.n_items() {
                return Err(Error::Dimension(
                    "jointly pruned matrices must share their shape".into(),
                ));
            }
        }
    }
    let (outcomes, report) = prune_jointly_inner(matrices);
    let all: Option<Vec<ScoredMatrix>> = outcomes.into_iter().collect();
    Ok((all, report))
}

fn prune_jointly_inner(matrices: &[&ScoredMatrix]) -> (Vec<Option<ScoredMatrix>>, PruneReport) {
    let Some(first) = matrices.first() else {
        return (Vec::new(), PruneReport::default());
    };
    let mut rows: Vec<usize> = (0..first.n_persons()).collect();
    let mut columns: Vec<usize> = (0..first.n_items()).collect();
    let mut report = PruneReport::default();

    loop {
        if rows.is_empty() || columns.is_empty() {
            break;
        }
        let pass = report.passes + 1;
        let mut drop_rows = Vec::new();
        let mut drop_columns = Vec::new();
        for &i in &rows {
            let hit = matrices.iter().find_map(|m| {
                line_trigger(columns.iter().map(move |&j| m.value(i, j)))
            });
            if let Some(trigger) = hit {
                drop_rows.push((i, trigger));
            }
        }
        for &j in &columns {
            let hit = matrices
                .iter()
                .find_map(|m| line_trigger(rows.iter().map(move |&i| m.value(i, j))));
            if let Some(trigger) = hit {
                drop_columns.push((j, trigger));
            }
        }
        if drop_rows.is_empty() && drop_columns.is_empty() {
            break;
        }
        report.passes = pass;
        for &(i, trigger) in &drop_rows {
            report.removals.push(Removal {
                axis: Axis::Row,
                index: i,
                id: first.persons[i].clone(),
                trigger,
                pass,
            });
        }
        for &(j, trigger) in &drop_columns {
            report.removals.push(Removal {
                axis: Axis::Column,
                index: j,
                id: first.items.get(j).id.clone(),
                trigger,
                pass,
            });
        }
        rows.retain(|i| !drop_rows.iter().any(|(r, _)| r == i));
        columns.retain(|j| !drop_columns.iter().any(|(c, _)| c == j));
    }

    report.kept_rows = rows.clone();
    report.kept_columns = columns.clone();
    let outcomes = matrices
        .iter()
        .map(|m| {
            if rows.is_empty() || columns.is_empty() {
                None
            } else {
                Some(m.select(&rows, &columns))
            }
        })
        .collect();
    (outcomes, report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn bank(options: &[u32]) -> ItemBank {
        ItemBank::from_options(options).unwrap()
    }

    fn persons(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("P{i}")).collect()
    }

    fn corrected(n: usize, options: &[u32], values: Vec<Rational>) -> ScoredMatrix {
        ScoredMatrix::new(
            persons(n),
            bank(options),
            values,
            MatrixKind::Corrected,
            Scheme::CorrectedElements,
        )
        .unwrap()
    }

    fn binary(n: usize, k: usize, cells: &[u8]) -> ScoredMatrix {
        let cells: Vec<bool> = cells.iter().map(|&c| c == 1).collect();
        ScoredMatrix::from_binary(persons(n), bank(&vec![4; k]), &cells, MatrixKind::True).unwrap()
    }

    #[test]
    fn item_bank_rejects_bad_items() {
        let err = ItemBank::new(vec![Item {
            id: "a".into(),
            options: 1,
        }]);
        assert!(err.is_err());
        let dup = ItemBank::new(vec![
            Item {
                id: "a".into(),
                options: 4,
            },
            Item {
                id: "a".into(),
                options: 3,
            },
        ]);
        assert!(dup.is_err());
    }

    #[test]
    fn wrong_answer_values_per_scheme() {
        let responses = ResponseMatrix::new(
            persons(1),
            bank(&[4, 2, 5]),
            vec![Outcome::Wrong, Outcome::Wrong, Outcome::Omitted],
        )
        .unwrap();
        let c = score_matrix(&responses, Scheme::CorrectedElements);
        assert_eq!(*c.value(0, 0), r(-1, 3));
        assert_eq!(*c.value(0, 1), r(-1, 1));
        assert_eq!(*c.value(0, 2), r(0, 1));
        assert_eq!(c.kind(), MatrixKind::Corrected);

        let p = score_matrix(&responses, Scheme::Punitive);
        assert_eq!(*p.value(0, 0), r(-1, 1));
        assert_eq!(p.kind(), MatrixKind::Corrected);
        assert_eq!(p.scheme(), Scheme::Punitive);

        let i = score_matrix(&responses, Scheme::Ignore);
        assert!(i.is_dichotomous());
        assert_eq!(i.kind(), MatrixKind::Distorted);
    }

    #[test]
    fn two_option_items_match_punitive_scoring() {
        let cells = vec![
            Outcome::Correct,
            Outcome::Wrong,
            Outcome::Omitted,
            Outcome::Wrong,
            Outcome::Wrong,
            Outcome::Correct,
        ];
        let responses = ResponseMatrix::new(persons(2), bank(&[2, 2, 2]), cells).unwrap();
        let c = score_matrix(&responses, Scheme::CorrectedElements);
        let p = score_matrix(&responses, Scheme::Punitive);
        for i in 0..2 {
            assert_eq!(c.exact_row(i), p.exact_row(i));
        }
    }

    #[test]
    fn corrected_row_score_matches_formula_score() {
        // 10 correct, 6 wrong, 4 omitted with m = 4: 10 - 6/3 = 8
        let mut cells = vec![Outcome::Correct; 10];
        cells.extend(vec![Outcome::Wrong; 6]);
        cells.extend(vec![Outcome::Omitted; 4]);
        let responses = ResponseMatrix::new(persons(1), bank(&[4; 20]), cells).unwrap();
        let scores = row_and_column_scores(&score_matrix(&responses, Scheme::CorrectedElements));
        assert_eq!(scores.person_scores[0], BigRational::from_integer(8.into()));
    }

    #[test]
    fn scores_of_small_matrices() {
        let zero = binary(2, 3, &[0; 6]);
        let s = row_and_column_scores(&zero);
        assert!(s.person_scores.iter().chain(&s.item_scores).all(|v| v.is_zero()));

        let m = binary(2, 2, &[1, 1, 0, 0]);
        let s = row_and_column_scores(&m);
        assert_eq!(s.person_scores_f64(), vec![2.0, 0.0]);
        assert_eq!(s.item_scores_f64(), vec![1.0, 1.0]);

        let balanced = corrected(1, &[4; 4], vec![r(1, 1), r(-1, 3), r(-1, 3), r(-1, 3)]);
        assert!(row_and_column_scores(&balanced).person_scores[0].is_zero());
    }

    #[test]
    fn scored_matrix_rejects_inadmissible_values() {
        let bad = ScoredMatrix::new(
            persons(1),
            bank(&[4]),
            vec![r(-1, 2)],
            MatrixKind::Corrected,
            Scheme::CorrectedElements,
        );
        assert!(matches!(bad, Err(Error::CellValue { .. })));
        let bad = ScoredMatrix::new(
            persons(1),
            bank(&[4]),
            vec![r(-1, 3)],
            MatrixKind::True,
            Scheme::Ignore,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn double_order_sorts_and_records_permutations() {
        let ordered_input = binary(3, 2, &[1, 1, 1, 0, 0, 0]);
        let o = double_order(&ordered_input);
        assert_eq!(o.row_order, vec![0, 1, 2]);
        assert_eq!(o.column_order, vec![0, 1]);

        // row scores 1, 3, 2
        let m = binary(3, 3, &[1, 0, 0, 1, 1, 1, 1, 1, 0]);
        let o = double_order(&m);
        assert_eq!(o.row_order, vec![1, 2, 0]);
        assert_eq!(o.matrix.persons(), &["P2", "P3", "P1"]);

        // ties keep original order
        let tied = binary(3, 2, &[1, 0, 0, 1, 1, 0]);
        let o = double_order(&tied);
        assert_eq!(o.row_order, vec![0, 1, 2]);
        assert_eq!(o.column_order, vec![0, 1]);
    }

    #[test]
    fn exact_zero_sum_is_tied_with_zero() {
        let m = corrected(
            2,
            &[4; 4],
            vec![
                r(0, 1),
                r(0, 1),
                r(0, 1),
                r(0, 1),
                r(1, 1),
                r(-1, 3),
                r(-1, 3),
                r(-1, 3),
            ],
        );
        let o = double_order(&m);
        assert_eq!(o.row_order, vec![0, 1]);
    }

    #[test]
    fn prune_removes_constant_column() {
        let m = binary(3, 3, &[0, 1, 0, 0, 0, 1, 0, 1, 0]);
        let out = prune(&m);
        let report = out.report();
        assert_eq!(report.removals.len(), 1);
        assert_eq!(report.removals[0].axis, Axis::Column);
        assert_eq!(report.removals[0].trigger, Trigger::AllConstant);
        assert_eq!(out.matrix().unwrap().n_items(), 2);
    }

    #[test]
    fn prune_removes_negative_row() {
        let m = corrected(
            2,
            &[4; 5],
            vec![
                r(1, 1),
                r(-1, 3),
                r(-1, 3),
                r(-1, 3),
                r(-1, 3),
                r(1, 1),
                r(1, 1),
                r(0, 1),
                r(1, 1),
                r(1, 1),
            ],
        );
        let out = prune(&m);
        let first = &out.report().removals[0];
        assert_eq!(first.axis, Axis::Row);
        assert_eq!(first.index, 0);
        assert_eq!(first.trigger, Trigger::NegativeSum);
    }

    #[test]
    fn prune_keeps_zero_sum_lines() {
        let m = corrected(
            2,
            &[4; 4],
            vec![
                r(1, 1),
                r(-1, 3),
                r(-1, 3),
                r(-1, 3),
                r(0, 1),
                r(1, 1),
                r(1, 1),
                r(1, 1),
            ],
        );
        let out = prune(&m);
        assert!(out.report().removals.is_empty());
    }

    #[test]
    fn prune_cascades_across_passes() {
        // column 0 is all ones; dropping it leaves row 2 all zeros
        let m = binary(3, 3, &[1, 1, 0, 1, 0, 1, 1, 0, 0]);
        let out = prune(&m);
        let report = out.report();
        assert_eq!(report.passes, 2);
        assert_eq!(
            report
                .removals
                .iter()
                .map(|r| (r.axis, r.index, r.trigger, r.pass))
                .collect::<Vec<_>>(),
            vec![
                (Axis::Column, 0, Trigger::AllConstant, 1),
                (Axis::Row, 2, Trigger::AllConstant, 2),
            ]
        );
        let kept = out.matrix().unwrap();
        assert_eq!(kept.n_persons(), 2);
        assert_eq!(kept.n_items(), 2);
    }

    #[test]
    fn prune_to_empty_is_reported() {
        let m = binary(2, 2, &[1, 1, 1, 1]);
        assert!(matches!(prune(&m), PruneOutcome::Empty { .. }));
    }

    #[test]
    fn joint_prune_removes_union() {
        let a = binary(3, 2, &[1, 0, 0, 1, 1, 0]);
        let b = binary(3, 2, &[0, 0, 0, 1, 1, 0]);
        let (kept, report) = prune_jointly(&[&a, &b]).unwrap();
        let kept = kept.unwrap();
        assert_eq!(report.removals[0].index, 0);
        assert_eq!(kept[0].n_persons(), 2);
        assert_eq!(kept[1].n_persons(), 2);
    }
}
