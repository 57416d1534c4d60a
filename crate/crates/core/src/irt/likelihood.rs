use crate::error::{Error, Result};
use crate::matrix::{prune, ScoredMatrix};

use super::{combined_discrimination, logistic, DiscriminationForm, IrtParams, Selectivity};

/// Log-probability of one cell, `x ln P + (1 - x) ln(1 - P)`.
///
/// The same expression serves 0/1 cells and negative corrective elements
/// `x = -1/(m-1)`: `m - 1` such elements together with one guessed success
/// carry the probability of `m` failures, `P_x^(m-1) P = (1 - P)^m`, which is
/// solved by `P_x = P^x (1 - P)^(1 - x)`.
pub fn cell_log_likelihood(x: f64, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("probability {p} outside (0, 1)")));
    }
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("cell value {x} outside [-1, 1]")));
    }
    Ok(x * p.ln() + (1.0 - x) * (1.0 - p).ln())
}

/// Rejects matrices that still contain all-constant or negative-sum lines.
pub fn check_pruned(matrix: &ScoredMatrix) -> Result<()> {
    if let Some(first) = prune(matrix).report().removals.first() {
        return Err(Error::NotPruned(format!(
            "{} `{}` triggers {}",
            first.axis.name(),
            first.id,
            first.trigger.name()
        )));
    }
    Ok(())
}

fn check_shape(matrix: &ScoredMatrix, params: &IrtParams) -> Result<()> {
    if matrix.n_persons() != params.n_persons() || matrix.n_items() != params.n_items() {
        return Err(Error::Dimension(format!(
            "matrix is {}x{} but parameters cover {}x{}",
            matrix.n_persons(),
            matrix.n_items(),
            params.n_persons(),
            params.n_items()
        )));
    }
    Ok(())
}

/// Log-likelihood of a pruned matrix summed over all cells.
pub fn matrix_log_likelihood(matrix: &ScoredMatrix, params: &IrtParams) -> Result<f64> {
    check_pruned(matrix)?;
    sum_log_likelihood(matrix, params)
}

/// Cell log-likelihoods summed without the pruning check.
pub fn sum_log_likelihood(matrix: &ScoredMatrix, params: &IrtParams) -> Result<f64> {
    check_shape(matrix, params)?;
    params.validate()?;
    let mut total = 0.0;
    for i in 0..matrix.n_persons() {
        let row = matrix.row(i);
        for (j, &x) in row.iter().enumerate() {
            total += cell_log_likelihood(x, super::success_probability(params, i, j))?;
        }
    }
    Ok(total)
}

/// Combined discrimination and its first two derivatives with respect to
/// the `own` selectivity.
pub(crate) fn discrimination_partials(
    own: Selectivity,
    other: Selectivity,
    form: DiscriminationForm,
) -> (f64, f64, f64) {
    match (form, own, other) {
        (DiscriminationForm::SumOfSquares, Selectivity::Finite(u), Selectivity::Finite(v)) => {
            let s = u * u + v * v;
            let root = s.sqrt();
            let d = u * v / root;
            let d1 = v * v * v / (s * root);
            let d2 = -3.0 * u * v * v * v / (s * s * root);
            (d, d1, d2)
        }
        (DiscriminationForm::SumOfSquares, Selectivity::Finite(u), Selectivity::Infinite) => {
            (u, 1.0, 0.0)
        }
        _ => (
            combined_discrimination(own, other, form).unwrap_or(f64::INFINITY),
            0.0,
            0.0,
        ),
    }
}

/// Gradient of the matrix log-likelihood. Entries for infinite selectivities
/// are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodGradient {
    pub theta: Vec<f64>,
    pub delta: Vec<f64>,
    pub d_person: Vec<f64>,
    pub d_item: Vec<f64>,
}

impl LikelihoodGradient {
    pub fn norm(&self) -> f64 {
        self.theta
            .iter()
            .chain(&self.delta)
            .chain(&self.d_person)
            .chain(&self.d_item)
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }
}

pub fn log_likelihood_gradient(
    matrix: &ScoredMatrix,
    params: &IrtParams,
) -> Result<LikelihoodGradient> {
    check_shape(matrix, params)?;
    let (n, k) = (matrix.n_persons(), matrix.n_items());
    let mut g = LikelihoodGradient {
        theta: vec![0.0; n],
        delta: vec![0.0; k],
        d_person: vec![0.0; n],
        d_item: vec![0.0; k],
    };
    for i in 0..n {
        for j in 0..k {
            let x = matrix.get(i, j);
            let (d, dd_person, _) =
                discrimination_partials(params.d_person[i], params.d_item[j], params.form);
            let (_, dd_item, _) =
                discrimination_partials(params.d_item[j], params.d_person[i], params.form);
            if !d.is_finite() {
                continue;
            }
            let gap = params.theta[i] - params.delta[j];
            let sigma = logistic(d * gap);
            let c = params.c_person[i] * params.c_item[j];
            let p = c + (1.0 - c) * sigma;
            // d ll / d eta
            let score = (x / p - (1.0 - x) / (1.0 - p)) * (1.0 - c) * sigma * (1.0 - sigma);
            g.theta[i] += score * d;
            g.delta[j] -= score * d;
            g.d_person[i] += score * dd_person * gap;
            g.d_item[j] += score * dd_item * gap;
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{ItemBank, MatrixKind, Rational, Scheme};

    #[test]
    fn cell_examples() {
        assert!((cell_log_likelihood(1.0, 0.5).unwrap() - 0.5f64.ln()).abs() < 1e-15);
        assert!((cell_log_likelihood(0.0, 0.3).unwrap() - 0.7f64.ln()).abs() < 1e-15);
        assert!(cell_log_likelihood(1.0, 1.0).is_err());
        assert!(cell_log_likelihood(1.0, 0.0).is_err());
    }

    #[test]
    fn balance_identity_m4() {
        let p = 0.3;
        let lhs = 3.0 * cell_log_likelihood(-1.0 / 3.0, p).unwrap()
            + cell_log_likelihood(1.0, p).unwrap();
        assert!((lhs - 4.0 * 0.7f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn one_cell_rasch() {
        let m = ScoredMatrix::new(
            vec!["a".into()],
            ItemBank::uniform(1, 4).unwrap(),
            vec![Rational::new(1, 1)],
            MatrixKind::True,
            Scheme::Ignore,
        )
        .unwrap();
        let params = IrtParams::rasch(vec![0.2], vec![0.2]);
        let ll = sum_log_likelihood(&m, &params).unwrap();
        assert!((ll - 0.5f64.ln()).abs() < 1e-15);
        // a lone 1 is an all-constant line
        assert!(matches!(
            matrix_log_likelihood(&m, &params),
            Err(Error::NotPruned(_))
        ));
    }

    #[test]
    fn discrimination_partials_match_differences() {
        let h = 1e-6;
        for (u, v) in [(0.5, 2.0), (1.3, 1.3), (4.0, 0.3)] {
            let f = |u: f64| {
                discrimination_partials(
                    Selectivity::Finite(u),
                    Selectivity::Finite(v),
                    DiscriminationForm::SumOfSquares,
                )
            };
            let (_, d1, d2) = f(u);
            let fd1 = (f(u + h).0 - f(u - h).0) / (2.0 * h);
            let fd2 = (f(u + h).1 - f(u - h).1) / (2.0 * h);
            assert!((d1 - fd1).abs() < 1e-8);
            assert!((d2 - fd2).abs() < 1e-8);
        }
    }
}
