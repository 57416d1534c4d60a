//! Joint maximum likelihood by alternating person and item blocks.
//!
//! Every outer iteration updates each person against frozen item parameters,
//! then each item against the freshly updated persons. A unit's update is one
//! damped Newton step on its own one- or two-dimensional sub-problem: the step
//! is halved until the unit's log-likelihood does not decrease, so the total
//! log-likelihood never decreases either. Person potentials are centred to
//! mean zero after each iteration, shifting item potentials by the same
//! amount; the likelihood depends on `θ - δ` only, so the shift is exact.
//!
//! A line whose sum is not strictly between zero and its length has no finite
//! maximiser: a zero-sum row keeps gaining likelihood as `θ → -∞`. Such
//! extreme lines survive pruning (zero sums are kept), so they are set aside
//! before estimation, repeatedly since setting one aside changes the sums of
//! the others, and reported at the logit bound.

use rayon::prelude::*;

use crate::error::{Error, Result};
use num_rational::BigRational;
use num_traits::Zero;

use crate::matrix::{exact_sum, ScoredMatrix};

use super::likelihood::{check_pruned, discrimination_partials, log_likelihood_gradient};
use super::{DiscriminationForm, IrtParams, Model, Selectivity};

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub max_outer_iterations: usize,
    /// Relative change of the log-likelihood between outer iterations.
    pub ll_tolerance: f64,
    /// Largest absolute parameter change between outer iterations.
    pub param_tolerance: f64,
    /// Newton steps keep `|θ|` and `|δ|` within this bound.
    pub logit_bound: f64,
    pub d_min: f64,
    pub d_max: f64,
    pub max_halvings: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            max_outer_iterations: 200,
            ll_tolerance: 1e-6,
            param_tolerance: 1e-4,
            logit_bound: 6.0,
            d_min: 0.2,
            d_max: 5.0,
            max_halvings: 20,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ll_tolerance > 0.0 && self.param_tolerance > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if !(self.logit_bound > 0.0) {
            return Err(Error::Config("logit bound must be positive".into()));
        }
        if !(self.d_min > 0.0 && self.d_min < self.d_max) {
            return Err(Error::Config(
                "selectivity bounds must satisfy 0 < d_min < d_max".into(),
            ));
        }
        if self.max_outer_iterations == 0 {
            return Err(Error::Config("max_outer_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitDiagnostics {
    pub model: Model,
    pub iterations: usize,
    pub converged: bool,
    pub log_likelihood: f64,
    /// Euclidean norm of the gradient over the free parameters.
    pub gradient_norm: f64,
    /// Log-likelihood before the first and after every outer iteration.
    pub ll_trace: Vec<f64>,
    /// Persons whose potential sits at the logit bound (separation).
    pub clamped_persons: Vec<usize>,
    pub clamped_items: Vec<usize>,
    /// Extreme lines left out of estimation and placed at the bound. The
    /// log-likelihood, trace and gradient cover the remaining submatrix.
    pub extreme_persons: Vec<usize>,
    pub extreme_items: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: IrtParams,
    pub diagnostics: FitDiagnostics,
}

/// Fits a model without guessing parameters to a pruned matrix.
pub fn fit(matrix: &ScoredMatrix, model: Model, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    match model {
        Model::FiveParam => {
            return Err(Error::UnsupportedModel(
                model.to_string(),
                "joint fitting of the five-parameter function is excluded because its \
                 likelihood is multimodal and yields spurious solutions; fit a corrected \
                 matrix with rasch, 2pl-item, 2pl-person or 3param instead"
                    .into(),
            ))
        }
        Model::ThreePl => {
            return Err(Error::UnsupportedModel(
                model.to_string(),
                "guessing parameters are not estimated; corrected matrices need no guessing \
                 parameter, fit them with rasch, 2pl-item, 2pl-person or 3param"
                    .into(),
            ))
        }
        _ => {}
    }
    check_pruned(matrix)?;
    let extremes = Extremes::find(matrix);
    if extremes.rows.is_empty() && extremes.columns.is_empty() {
        return Fitter::new(matrix, model, config).run();
    }
    if extremes.kept_rows.is_empty() || extremes.kept_columns.is_empty() {
        return Err(Error::Domain(
            "every person or every item has an extreme score; nothing left to estimate".into(),
        ));
    }
    let sub = matrix.select(&extremes.kept_rows, &extremes.kept_columns);
    let inner = Fitter::new(&sub, model, config).run()?;
    Ok(extremes.expand(inner, matrix, config.logit_bound))
}

/// Lines without a finite maximiser, with the direction they diverge in.
struct Extremes {
    /// `(index, +1 or -1)`: the sign of the bound the potential goes to.
    rows: Vec<(usize, f64)>,
    columns: Vec<(usize, f64)>,
    kept_rows: Vec<usize>,
    kept_columns: Vec<usize>,
}

impl Extremes {
    fn find(matrix: &ScoredMatrix) -> Self {
        let mut kept_rows: Vec<usize> = (0..matrix.n_persons()).collect();
        let mut kept_columns: Vec<usize> = (0..matrix.n_items()).collect();
        let (mut rows, mut columns) = (Vec::new(), Vec::new());
        // sum <= 0 diverges downwards, sum == length (all ones) upwards
        let direction = |sum: BigRational, len: usize| {
            if sum <= BigRational::zero() {
                Some(-1.0)
            } else if sum == BigRational::from_integer(len.into()) {
                Some(1.0)
            } else {
                None
            }
        };
        loop {
            if kept_rows.is_empty() || kept_columns.is_empty() {
                break;
            }
            let new_rows: Vec<(usize, f64)> = kept_rows
                .iter()
                .filter_map(|&i| {
                    let sum = exact_sum(kept_columns.iter().map(|&j| matrix.value(i, j)));
                    direction(sum, kept_columns.len()).map(|d| (i, d))
                })
                .collect();
            // an item with a non-positive sum is infinitely hard
            let new_columns: Vec<(usize, f64)> = kept_columns
                .iter()
                .filter_map(|&j| {
                    let sum = exact_sum(kept_rows.iter().map(|&i| matrix.value(i, j)));
                    direction(sum, kept_rows.len()).map(|d| (j, -d))
                })
                .collect();
            if new_rows.is_empty() && new_columns.is_empty() {
                break;
            }
            kept_rows.retain(|i| !new_rows.iter().any(|r| r.0 == *i));
            kept_columns.retain(|j| !new_columns.iter().any(|c| c.0 == *j));
            rows.extend(new_rows);
            columns.extend(new_columns);
        }
        Extremes {
            rows,
            columns,
            kept_rows,
            kept_columns,
        }
    }

    /// Places the submatrix estimates back into full-size parameter vectors.
    fn expand(self, inner: FitResult, matrix: &ScoredMatrix, bound: f64) -> FitResult {
        let (n, k) = (matrix.n_persons(), matrix.n_items());
        let p = &inner.params;
        // extreme lines keep the pinned selectivity, or 1 where it is free
        let fill = |fitted: &[Selectivity], free: bool| {
            if free {
                Selectivity::Finite(1.0)
            } else {
                fitted[0]
            }
        };
        let mut theta = vec![0.0; n];
        let mut delta = vec![0.0; k];
        let mut d_person = vec![fill(&p.d_person, p.model.free_person_selectivity()); n];
        let mut d_item = vec![fill(&p.d_item, p.model.free_item_selectivity()); k];
        for (sub, &i) in self.kept_rows.iter().enumerate() {
            theta[i] = p.theta[sub];
            d_person[i] = p.d_person[sub];
        }
        for (sub, &j) in self.kept_columns.iter().enumerate() {
            delta[j] = p.delta[sub];
            d_item[j] = p.d_item[sub];
        }
        for &(i, sign) in &self.rows {
            theta[i] = sign * bound;
        }
        for &(j, sign) in &self.columns {
            delta[j] = sign * bound;
        }
        let d = inner.diagnostics;
        let mut extreme_persons: Vec<usize> = self.rows.iter().map(|r| r.0).collect();
        let mut extreme_items: Vec<usize> = self.columns.iter().map(|c| c.0).collect();
        extreme_persons.sort_unstable();
        extreme_items.sort_unstable();
        FitResult {
            params: IrtParams {
                theta,
                delta,
                d_person,
                d_item,
                c_person: vec![0.0; n],
                c_item: vec![0.0; k],
                model: p.model,
                form: p.form,
            },
            diagnostics: FitDiagnostics {
                clamped_persons: d.clamped_persons.iter().map(|&i| self.kept_rows[i]).collect(),
                clamped_items: d.clamped_items.iter().map(|&j| self.kept_columns[j]).collect(),
                extreme_persons,
                extreme_items,
                ..d
            },
        }
    }
}

/// Sub-problem of one person or one item against the frozen other side.
struct Side<'a> {
    cells: &'a [f64],
    other_anchor: &'a [f64],
    other_sel: &'a [Selectivity],
    /// `+1` for persons (`η = D (θ - δ)`), `-1` for items.
    sign: f64,
}

/// `x ln σ(η) + (1 - x) ln(1 - σ(η))` without forming σ.
fn cell_ll(x: f64, eta: f64) -> f64 {
    -(x * softplus(-eta) + (1.0 - x) * softplus(eta))
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    super::logistic(z)
}

impl Side<'_> {
    fn ll(&self, anchor: f64, own: Selectivity) -> f64 {
        self.cells
            .iter()
            .zip(self.other_anchor)
            .zip(self.other_sel)
            .map(|((&x, &b), &other)| {
                let (d, _, _) = discrimination_partials(own, other, DiscriminationForm::SumOfSquares);
                cell_ll(x, self.sign * d * (anchor - b))
            })
            .sum()
    }

    /// Gradient and Hessian (observed and expected) in `(anchor, own d)`.
    fn derivatives(&self, anchor: f64, own: Selectivity) -> Derivatives {
        let mut out = Derivatives::default();
        let s = self.sign;
        for ((&x, &b), &other) in self.cells.iter().zip(self.other_anchor).zip(self.other_sel) {
            let (d, d1, d2) = discrimination_partials(own, other, DiscriminationForm::SumOfSquares);
            let gap = anchor - b;
            let sigma = sigmoid(s * d * gap);
            let r = x - sigma;
            let w = sigma * (1.0 - sigma);
            let ea = s * d;
            let eu = s * d1 * gap;
            out.g[0] += r * ea;
            out.g[1] += r * eu;
            out.fisher[0][0] -= w * ea * ea;
            out.fisher[0][1] -= w * ea * eu;
            out.fisher[1][1] -= w * eu * eu;
            out.observed_cross += r * s * d1;
            out.observed_uu += r * s * d2 * gap;
        }
        out.fisher[1][0] = out.fisher[0][1];
        out
    }
}

#[derive(Default)]
struct Derivatives {
    g: [f64; 2],
    fisher: [[f64; 2]; 2],
    observed_cross: f64,
    observed_uu: f64,
}

fn solve2(h: [[f64; 2]; 2], g: [f64; 2]) -> Option<[f64; 2]> {
    // step = -H^{-1} g, only for negative definite H
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    if !(h[0][0] < 0.0 && det > 1e-300) {
        return None;
    }
    Some([
        -(h[1][1] * g[0] - h[0][1] * g[1]) / det,
        -(-h[1][0] * g[0] + h[0][0] * g[1]) / det,
    ])
}

#[derive(Clone, Copy)]
struct UnitUpdate {
    anchor: f64,
    sel: Selectivity,
    at_bound: bool,
}

fn update_unit(side: &Side<'_>, anchor: f64, sel: Selectivity, free: bool, cfg: &FitConfig) -> UnitUpdate {
    let bound = cfg.logit_bound;
    let current = side.ll(anchor, sel);
    let der = side.derivatives(anchor, sel);
    let step: [f64; 2] = if free {
        let observed = [
            [der.fisher[0][0], der.fisher[0][1] + der.observed_cross],
            [der.fisher[0][1] + der.observed_cross, der.fisher[1][1] + der.observed_uu],
        ];
        match solve2(observed, der.g).or_else(|| solve2(der.fisher, der.g)) {
            Some(step) => step,
            None => {
                let diag = |h: f64, g: f64| if h < 0.0 { -g / h } else { 0.0 };
                [
                    diag(der.fisher[0][0], der.g[0]),
                    diag(der.fisher[1][1], der.g[1]),
                ]
            }
        }
    } else if der.fisher[0][0] < 0.0 {
        [-der.g[0] / der.fisher[0][0], 0.0]
    } else {
        [0.0, 0.0]
    };

    let own_d = sel.finite();
    let mut t = 1.0;
    let mut accepted = None;
    for _ in 0..=cfg.max_halvings {
        let a = (anchor + t * step[0]).clamp(-bound, bound);
        let s = match (free, own_d) {
            (true, Some(d)) => Selectivity::Finite((d + t * step[1]).clamp(cfg.d_min, cfg.d_max)),
            _ => sel,
        };
        if side.ll(a, s) >= current {
            accepted = Some((a, s));
            break;
        }
        t *= 0.5;
    }
    let (a, s) = accepted.unwrap_or((anchor, sel));
    UnitUpdate {
        anchor: a,
        sel: s,
        at_bound: a.abs() >= bound - 1e-9,
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

struct Fitter<'a> {
    matrix: &'a ScoredMatrix,
    model: Model,
    cfg: &'a FitConfig,
    columns: Vec<f64>,
    theta: Vec<f64>,
    delta: Vec<f64>,
    d_person: Vec<Selectivity>,
    d_item: Vec<Selectivity>,
    person_bound: Vec<bool>,
    item_bound: Vec<bool>,
}

impl<'a> Fitter<'a> {
    fn new(matrix: &'a ScoredMatrix, model: Model, cfg: &'a FitConfig) -> Self {
        let (n, k) = (matrix.n_persons(), matrix.n_items());
        let mut columns = Vec::with_capacity(n * k);
        for j in 0..k {
            columns.extend((0..n).map(|i| matrix.get(i, j)));
        }
        let clamp_p = |p: f64| p.clamp(0.02, 0.98);
        let bound = cfg.logit_bound;
        let theta: Vec<f64> = (0..n)
            .map(|i| logit(clamp_p(matrix.row(i).iter().sum::<f64>() / k as f64)).clamp(-bound, bound))
            .collect();
        let delta: Vec<f64> = (0..k)
            .map(|j| {
                let col = &columns[j * n..(j + 1) * n];
                (-logit(clamp_p(col.iter().sum::<f64>() / n as f64))).clamp(-bound, bound)
            })
            .collect();
        let (d_person, d_item) = match model {
            Model::Rasch => (vec![Selectivity::RASCH; n], vec![Selectivity::RASCH; k]),
            Model::TwoPlItem => (vec![Selectivity::Infinite; n], vec![Selectivity::Finite(1.0); k]),
            Model::TwoPlPerson => (vec![Selectivity::Finite(1.0); n], vec![Selectivity::Infinite; k]),
            _ => (vec![Selectivity::RASCH; n], vec![Selectivity::RASCH; k]),
        };
        let mut fitter = Fitter {
            matrix,
            model,
            cfg,
            columns,
            theta,
            delta,
            d_person,
            d_item,
            person_bound: vec![false; n],
            item_bound: vec![false; k],
        };
        fitter.center();
        fitter
    }

    fn center(&mut self) {
        let shift = self.theta.iter().sum::<f64>() / self.theta.len() as f64;
        self.theta.iter_mut().for_each(|t| *t -= shift);
        self.delta.iter_mut().for_each(|d| *d -= shift);
    }

    fn person_side(&self, i: usize) -> Side<'_> {
        Side {
            cells: self.matrix.row(i),
            other_anchor: &self.delta,
            other_sel: &self.d_item,
            sign: 1.0,
        }
    }

    fn item_side(&self, j: usize) -> Side<'_> {
        let n = self.matrix.n_persons();
        Side {
            cells: &self.columns[j * n..(j + 1) * n],
            other_anchor: &self.theta,
            other_sel: &self.d_person,
            sign: -1.0,
        }
    }

    fn total_ll(&self) -> f64 {
        let parts: Vec<f64> = (0..self.matrix.n_persons())
            .into_par_iter()
            .map(|i| self.person_side(i).ll(self.theta[i], self.d_person[i]))
            .collect();
        parts.iter().sum()
    }

    fn update_persons(&mut self) {
        let free = self.model.free_person_selectivity();
        let updates: Vec<UnitUpdate> = (0..self.matrix.n_persons())
            .into_par_iter()
            .map(|i| update_unit(&self.person_side(i), self.theta[i], self.d_person[i], free, self.cfg))
            .collect();
        for (i, u) in updates.into_iter().enumerate() {
            self.theta[i] = u.anchor;
            self.d_person[i] = u.sel;
            self.person_bound[i] = u.at_bound;
        }
    }

    fn update_items(&mut self) {
        let free = self.model.free_item_selectivity();
        let updates: Vec<UnitUpdate> = (0..self.matrix.n_items())
            .into_par_iter()
            .map(|j| update_unit(&self.item_side(j), self.delta[j], self.d_item[j], free, self.cfg))
            .collect();
        for (j, u) in updates.into_iter().enumerate() {
            self.delta[j] = u.anchor;
            self.d_item[j] = u.sel;
            self.item_bound[j] = u.at_bound;
        }
    }

    fn snapshot(&self) -> Vec<f64> {
        let sel = |s: &Selectivity| s.finite().unwrap_or(0.0);
        self.theta
            .iter()
            .chain(&self.delta)
            .copied()
            .chain(self.d_person.iter().map(sel))
            .chain(self.d_item.iter().map(sel))
            .collect()
    }

    fn params(&self) -> IrtParams {
        let (n, k) = (self.theta.len(), self.delta.len());
        IrtParams {
            theta: self.theta.clone(),
            delta: self.delta.clone(),
            d_person: self.d_person.clone(),
            d_item: self.d_item.clone(),
            c_person: vec![0.0; n],
            c_item: vec![0.0; k],
            model: self.model,
            form: DiscriminationForm::SumOfSquares,
        }
    }

    fn run(mut self) -> Result<FitResult> {
        let mut ll = self.total_ll();
        let mut trace = vec![ll];
        let mut converged = false;
        let mut iterations = 0;
        while iterations < self.cfg.max_outer_iterations {
            iterations += 1;
            let before = self.snapshot();
            self.update_persons();
            self.update_items();
            self.center();
            let next = self.total_ll();
            trace.push(next);
            let max_change = before
                .iter()
                .zip(self.snapshot())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let rel = (next - ll).abs() / next.abs().max(1.0);
            ll = next;
            if rel <= self.cfg.ll_tolerance && max_change <= self.cfg.param_tolerance {
                converged = true;
                break;
            }
        }

        let params = self.params();
        let mut gradient = log_likelihood_gradient(self.matrix, &params)?;
        if !self.model.free_person_selectivity() {
            gradient.d_person.iter_mut().for_each(|g| *g = 0.0);
        }
        if !self.model.free_item_selectivity() {
            gradient.d_item.iter_mut().for_each(|g| *g = 0.0);
        }
        let indices = |flags: &[bool]| {
            flags
                .iter()
                .enumerate()
                .filter_map(|(i, &b)| b.then_some(i))
                .collect::<Vec<_>>()
        };
        Ok(FitResult {
            diagnostics: FitDiagnostics {
                model: self.model,
                iterations,
                converged,
                log_likelihood: ll,
                gradient_norm: gradient.norm(),
                ll_trace: trace,
                clamped_persons: indices(&self.person_bound),
                clamped_items: indices(&self.item_bound),
                extreme_persons: Vec::new(),
                extreme_items: Vec::new(),
            },
            params,
        })
    }
}
