//! Success functions, the likelihood of scored matrices and joint maximum
//! likelihood fitting.
//!
//! The general success function is
//!
//! ```text
//! P_ij = c_i c_j + (1 - c_i c_j) / (1 + exp(D_ij (δ_j - θ_i)))
//! D_ij = d_i d_j / sqrt(d_i² + d_j²)
//! ```
//!
//! Pinning parameters recovers the familiar models: `c = 0, d = √2` gives
//! Rasch, `c = 0` with `d_i = ∞` the usual 2PL, `c_i = 1, d_i = ∞` the 3PL,
//! and `c = 0, d_j = ∞` the person-side 2PL.
//!
//! The combined discrimination is sometimes printed as
//! `d_i d_j / sqrt(d_i² d_j²)`, which is identically 1 for positive
//! selectivities and cannot reproduce any of those reductions. Both readings
//! are available through [`DiscriminationForm`]; only the sum-of-squares form
//! is used for fitting.

mod fit;
mod likelihood;

pub use fit::{fit, FitConfig, FitDiagnostics, FitResult};
pub use likelihood::{
    cell_log_likelihood, check_pruned, log_likelihood_gradient, matrix_log_likelihood,
    sum_log_likelihood, LikelihoodGradient,
};

use std::f64::consts::SQRT_2;
use std::fmt;

use crate::error::{Error, Result};

/// Selectivity (discrimination) of a person or an item.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Selectivity {
    Finite(f64),
    /// The limit `d → +∞`, handled analytically.
    Infinite,
}

impl Selectivity {
    pub const RASCH: Selectivity = Selectivity::Finite(SQRT_2);

    pub fn finite(self) -> Option<f64> {
        match self {
            Selectivity::Finite(d) => Some(d),
            Selectivity::Infinite => None,
        }
    }
}

impl fmt::Display for Selectivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Selectivity::Finite(d) => write!(f, "{d}"),
            Selectivity::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiscriminationForm {
    /// `d_i d_j / sqrt(d_i² + d_j²)`.
    #[default]
    SumOfSquares,
    /// `d_i d_j / sqrt(d_i² d_j²)`, evaluation only.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    Rasch,
    TwoPlItem,
    TwoPlPerson,
    ThreePl,
    ThreeParamCombined,
    FiveParam,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Rasch => "rasch",
            Model::TwoPlItem => "2pl-item",
            Model::TwoPlPerson => "2pl-person",
            Model::ThreePl => "3pl",
            Model::ThreeParamCombined => "3param",
            Model::FiveParam => "5param",
        }
    }

    pub fn from_name(name: &str) -> Option<Model> {
        [
            Model::Rasch,
            Model::TwoPlItem,
            Model::TwoPlPerson,
            Model::ThreePl,
            Model::ThreeParamCombined,
            Model::FiveParam,
        ]
        .into_iter()
        .find(|m| m.name() == name)
    }

    /// Models whose parameters [`fit`] estimates.
    pub fn is_fittable(self) -> bool {
        matches!(
            self,
            Model::Rasch | Model::TwoPlItem | Model::TwoPlPerson | Model::ThreeParamCombined
        )
    }

    pub(crate) fn free_person_selectivity(self) -> bool {
        matches!(self, Model::TwoPlPerson | Model::ThreeParamCombined)
    }

    pub(crate) fn free_item_selectivity(self) -> bool {
        matches!(self, Model::TwoPlItem | Model::ThreeParamCombined)
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Combined person-item discrimination, `None` when both sides are infinite.
pub fn combined_discrimination(
    d_person: Selectivity,
    d_item: Selectivity,
    form: DiscriminationForm,
) -> Option<f64> {
    use Selectivity::{Finite, Infinite};
    match form {
        DiscriminationForm::SumOfSquares => match (d_person, d_item) {
            (Finite(a), Finite(b)) => Some(a * b / (a * a + b * b).sqrt()),
            (Finite(a), Infinite) => Some(a),
            (Infinite, Finite(b)) => Some(b),
            (Infinite, Infinite) => None,
        },
        DiscriminationForm::Literal => match (d_person, d_item) {
            (Finite(a), Finite(b)) => Some(a * b / (a * a * b * b).sqrt()),
            _ => Some(1.0),
        },
    }
}

/// Numerically stable logistic function.
pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Person and item parameters of a success-function model.
#[derive(Debug, Clone, PartialEq)]
pub struct IrtParams {
    pub theta: Vec<f64>,
    pub delta: Vec<f64>,
    pub d_person: Vec<Selectivity>,
    pub d_item: Vec<Selectivity>,
    pub c_person: Vec<f64>,
    pub c_item: Vec<f64>,
    pub model: Model,
    pub form: DiscriminationForm,
}

impl IrtParams {
    fn with(
        model: Model,
        theta: Vec<f64>,
        delta: Vec<f64>,
        d_person: Vec<Selectivity>,
        d_item: Vec<Selectivity>,
        c_person: Vec<f64>,
        c_item: Vec<f64>,
    ) -> Result<Self> {
        let params = IrtParams {
            theta,
            delta,
            d_person,
            d_item,
            c_person,
            c_item,
            model,
            form: DiscriminationForm::SumOfSquares,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn rasch(theta: Vec<f64>, delta: Vec<f64>) -> Self {
        let (n, k) = (theta.len(), delta.len());
        IrtParams {
            theta,
            delta,
            d_person: vec![Selectivity::RASCH; n],
            d_item: vec![Selectivity::RASCH; k],
            c_person: vec![0.0; n],
            c_item: vec![0.0; k],
            model: Model::Rasch,
            form: DiscriminationForm::SumOfSquares,
        }
    }

    pub fn two_pl_item(theta: Vec<f64>, delta: Vec<f64>, d_item: Vec<f64>) -> Result<Self> {
        let (n, k) = (theta.len(), delta.len());
        Self::with(
            Model::TwoPlItem,
            theta,
            delta,
            vec![Selectivity::Infinite; n],
            d_item.into_iter().map(Selectivity::Finite).collect(),
            vec![0.0; n],
            vec![0.0; k],
        )
    }

    pub fn two_pl_person(theta: Vec<f64>, delta: Vec<f64>, d_person: Vec<f64>) -> Result<Self> {
        let (n, k) = (theta.len(), delta.len());
        Self::with(
            Model::TwoPlPerson,
            theta,
            delta,
            d_person.into_iter().map(Selectivity::Finite).collect(),
            vec![Selectivity::Infinite; k],
            vec![0.0; n],
            vec![0.0; k],
        )
    }

    pub fn three_pl(
        theta: Vec<f64>,
        delta: Vec<f64>,
        d_item: Vec<f64>,
        c_item: Vec<f64>,
    ) -> Result<Self> {
        let n = theta.len();
        Self::with(
            Model::ThreePl,
            theta,
            delta,
            vec![Selectivity::Infinite; n],
            d_item.into_iter().map(Selectivity::Finite).collect(),
            vec![1.0; n],
            c_item,
        )
    }

    pub fn three_param(
        theta: Vec<f64>,
        delta: Vec<f64>,
        d_person: Vec<f64>,
        d_item: Vec<f64>,
    ) -> Result<Self> {
        let (n, k) = (theta.len(), delta.len());
        Self::with(
            Model::ThreeParamCombined,
            theta,
            delta,
            d_person.into_iter().map(Selectivity::Finite).collect(),
            d_item.into_iter().map(Selectivity::Finite).collect(),
            vec![0.0; n],
            vec![0.0; k],
        )
    }

    #[allow(clippy::too_many_arguments)]
    pub fn five_param(
        theta: Vec<f64>,
        delta: Vec<f64>,
        d_person: Vec<Selectivity>,
        d_item: Vec<Selectivity>,
        c_person: Vec<f64>,
        c_item: Vec<f64>,
    ) -> Result<Self> {
        Self::with(Model::FiveParam, theta, delta, d_person, d_item, c_person, c_item)
    }

    pub fn n_persons(&self) -> usize {
        self.theta.len()
    }

    pub fn n_items(&self) -> usize {
        self.delta.len()
    }

    /// Checks lengths, parameter domains and the pinnings of the model tag.
    pub fn validate(&self) -> Result<()> {
        let (n, k) = (self.theta.len(), self.delta.len());
        if self.d_person.len() != n || self.c_person.len() != n {
            return Err(Error::Dimension("person parameter lengths differ".into()));
        }
        if self.d_item.len() != k || self.c_item.len() != k {
            return Err(Error::Dimension("item parameter lengths differ".into()));
        }
        let positive = |s: &Selectivity| match s {
            Selectivity::Finite(d) => *d > 0.0 && d.is_finite(),
            Selectivity::Infinite => true,
        };
        if !self.d_person.iter().chain(&self.d_item).all(positive) {
            return Err(Error::Domain("selectivities must be positive".into()));
        }
        if !self
            .c_person
            .iter()
            .chain(&self.c_item)
            .all(|c| (0.0..=1.0).contains(c))
        {
            return Err(Error::Domain("guessing parameters must lie in [0, 1]".into()));
        }
        if self.theta.iter().chain(&self.delta).any(|v| !v.is_finite()) {
            return Err(Error::Domain("potentials must be finite".into()));
        }
        let all_finite = |v: &[Selectivity]| v.iter().all(|s| s.finite().is_some());
        let all_infinite = |v: &[Selectivity]| v.iter().all(|s| s.finite().is_none());
        let zero = |v: &[f64]| v.iter().all(|c| *c == 0.0);
        let ok = match self.model {
            Model::Rasch => {
                let rasch = |v: &[Selectivity]| v.iter().all(|s| *s == Selectivity::RASCH);
                rasch(&self.d_person)
                    && rasch(&self.d_item)
                    && zero(&self.c_person)
                    && zero(&self.c_item)
            }
            Model::TwoPlItem => {
                all_infinite(&self.d_person)
                    && all_finite(&self.d_item)
                    && zero(&self.c_person)
                    && zero(&self.c_item)
            }
            Model::TwoPlPerson => {
                all_finite(&self.d_person)
                    && all_infinite(&self.d_item)
                    && zero(&self.c_person)
                    && zero(&self.c_item)
            }
            Model::ThreePl => {
                all_infinite(&self.d_person)
                    && all_finite(&self.d_item)
                    && self.c_person.iter().all(|c| *c == 1.0)
            }
            Model::ThreeParamCombined => {
                all_finite(&self.d_person)
                    && all_finite(&self.d_item)
                    && zero(&self.c_person)
                    && zero(&self.c_item)
            }
            Model::FiveParam => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "parameters violate the pinnings of model {}",
                self.model
            )))
        }
    }
}

/// Probability that person `i` succeeds on item `j`.
pub fn success_probability(params: &IrtParams, i: usize, j: usize) -> f64 {
    let c = params.c_person[i] * params.c_item[j];
    let gap = params.theta[i] - params.delta[j];
    let core = match combined_discrimination(params.d_person[i], params.d_item[j], params.form) {
        Some(d) => logistic(d * gap),
        None => {
            if gap > 0.0 {
                1.0
            } else if gap < 0.0 {
                0.0
            } else {
                0.5
            }
        }
    };
    c + (1.0 - c) * core
}
