//! Monte-Carlo generation of true, distorted and corrected matrices.
//!
//! A true matrix is drawn from a success-function model with known
//! parameters. Guessing is then injected cell by cell: a person facing an item
//! they did not solve attempts a guess with probability `g` and picks one of
//! the `m_j` options uniformly. A lucky guess turns the cell into a 1 in both
//! the distorted and the corrected matrix; an unlucky one leaves a 0 in the
//! distorted matrix and records `-1/(m_j - 1)` in the corrected one. The
//! expected corrected value of a true zero is therefore
//! `g (1/m - (m-1)/m · 1/(m-1)) = 0`.
//!
//! # Random streams
//!
//! All randomness comes from ChaCha8 seeded with the configured 64-bit seed.
//! Replication `r` draws its true matrix from stream `2r` and its guesses from
//! stream `2r + 1`, so replications are independent of each other and of the
//! order in which they run.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};

use crate::error::{Error, Result};
use crate::irt::{success_probability, IrtParams};
use crate::matrix::{score_matrix, ItemBank, MatrixKind, Outcome, ResponseMatrix, Scheme, ScoredMatrix};

/// Potentials are drawn inside this range.
pub const POTENTIAL_LIMIT: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution {
    Normal { mean: f64, sd: f64 },
    Fixed(f64),
}

impl Default for Distribution {
    fn default() -> Self {
        Distribution::Normal { mean: 0.0, sd: 1.0 }
    }
}

impl Distribution {
    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let v = match *self {
            Distribution::Normal { mean, sd } => {
                Normal::new(mean, sd).expect("validated sd").sample(rng)
            }
            Distribution::Fixed(v) => v,
        };
        v.clamp(-POTENTIAL_LIMIT, POTENTIAL_LIMIT)
    }

    fn validate(&self, what: &str) -> Result<()> {
        match *self {
            Distribution::Normal { mean, sd } if mean.is_finite() && sd.is_finite() && sd >= 0.0 => {
                Ok(())
            }
            Distribution::Fixed(v) if v.is_finite() => Ok(()),
            _ => Err(Error::Config(format!("invalid {what} distribution"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum GenerationModel {
    #[default]
    Rasch,
    /// Item selectivities drawn uniformly from `[d_min, d_max]`.
    TwoPlItem { d_min: f64, d_max: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub k: usize,
    /// Option count per item; length `k`.
    pub options: Vec<u32>,
    pub theta: Distribution,
    pub delta: Distribution,
    pub model: GenerationModel,
    /// Probability that a person who does not know the answer guesses.
    pub guess_rate: f64,
    pub seed: u64,
}

impl SimConfig {
    /// Rasch generation with standard normal potentials and four options.
    pub fn new(n: usize, k: usize, guess_rate: f64, seed: u64) -> Self {
        SimConfig {
            n,
            k,
            options: vec![4; k],
            theta: Distribution::default(),
            delta: Distribution::default(),
            model: GenerationModel::Rasch,
            guess_rate,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k == 0 {
            return Err(Error::Config("n and k must be at least 1".into()));
        }
        if self.options.len() != self.k {
            return Err(Error::Config(format!(
                "{} option counts for {} items",
                self.options.len(),
                self.k
            )));
        }
        if self.options.iter().any(|&m| m < 2) {
            return Err(Error::Config("every item needs at least 2 options".into()));
        }
        if !(0.0..=1.0).contains(&self.guess_rate) {
            return Err(Error::Config("guess rate must lie in [0, 1]".into()));
        }
        self.theta.validate("theta")?;
        self.delta.validate("delta")?;
        if let GenerationModel::TwoPlItem { d_min, d_max } = self.model {
            if !(d_min > 0.0 && d_min <= d_max && d_max.is_finite()) {
                return Err(Error::Config("selectivity range must satisfy 0 < d_min <= d_max".into()));
            }
        }
        Ok(())
    }

    /// Success rate of guessing per unknown cell, `g / m_j`, averaged over items.
    pub fn effective_guess_rate(&self) -> f64 {
        self.options
            .iter()
            .map(|&m| self.guess_rate / f64::from(m))
            .sum::<f64>()
            / self.k as f64
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Known parameters and the guess-free matrix drawn from them.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueSample {
    pub params: IrtParams,
    pub matrix: ScoredMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GuessEvent {
    pub person: usize,
    pub item: usize,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimBundle {
    pub true_params: IrtParams,
    pub responses: ResponseMatrix,
    pub true_matrix: ScoredMatrix,
    pub distorted_matrix: ScoredMatrix,
    pub corrected_matrix: ScoredMatrix,
    pub guess_log: Vec<GuessEvent>,
}

fn person_ids(n: usize) -> Vec<String> {
    let width = n.to_string().len().max(4);
    (1..=n).map(|i| format!("P{i:0width$}")).collect()
}

/// Draws parameters and a true matrix for one replication.
pub fn generate_true_matrix(config: &SimConfig, replication: u64) -> Result<TrueSample> {
    config.validate()?;
    let mut rng = stream_rng(config.seed, 2 * replication);
    let theta: Vec<f64> = (0..config.n).map(|_| config.theta.sample(&mut rng)).collect();
    let delta: Vec<f64> = (0..config.k).map(|_| config.delta.sample(&mut rng)).collect();
    let params = match config.model {
        GenerationModel::Rasch => IrtParams::rasch(theta, delta),
        GenerationModel::TwoPlItem { d_min, d_max } => {
            let d: Vec<f64> = (0..config.k)
                .map(|_| if d_max > d_min { rng.random_range(d_min..=d_max) } else { d_min })
                .collect();
            IrtParams::two_pl_item(theta, delta, d)?
        }
    };
    let mut cells = Vec::with_capacity(config.n * config.k);
    for i in 0..config.n {
        for j in 0..config.k {
            cells.push(rng.random::<f64>() < success_probability(&params, i, j));
        }
    }
    let matrix = ScoredMatrix::from_binary(
        person_ids(config.n),
        ItemBank::from_options(&config.options)?,
        &cells,
        MatrixKind::True,
    )?;
    Ok(TrueSample { params, matrix })
}

/// Adds guessing to a true sample, producing distorted and corrected matrices.
pub fn inject_guessing<R: Rng>(sample: TrueSample, guess_rate: f64, rng: &mut R) -> Result<SimBundle> {
    if !(0.0..=1.0).contains(&guess_rate) {
        return Err(Error::Config("guess rate must lie in [0, 1]".into()));
    }
    let m = &sample.matrix;
    let (n, k) = (m.n_persons(), m.n_items());
    let mut outcomes = Vec::with_capacity(n * k);
    let mut guess_log = Vec::new();
    for i in 0..n {
        for j in 0..k {
            if m.get(i, j) == 1.0 {
                outcomes.push(Outcome::Correct);
                continue;
            }
            if rng.random::<f64>() < guess_rate {
                let options = m.items().options(j);
                let success = rng.random_range(0..options) == 0;
                guess_log.push(GuessEvent {
                    person: i,
                    item: j,
                    success,
                });
                outcomes.push(if success { Outcome::Correct } else { Outcome::Wrong });
            } else {
                outcomes.push(Outcome::Omitted);
            }
        }
    }
    let responses = ResponseMatrix::new(m.persons().to_vec(), m.items().clone(), outcomes)?;
    let distorted_matrix = score_matrix(&responses, Scheme::Ignore);
    let corrected_matrix = score_matrix(&responses, Scheme::CorrectedElements);
    Ok(SimBundle {
        true_params: sample.params,
        responses,
        true_matrix: sample.matrix,
        distorted_matrix,
        corrected_matrix,
        guess_log,
    })
}

/// True, distorted and corrected matrices for one replication.
pub fn simulate(config: &SimConfig, replication: u64) -> Result<SimBundle> {
    let sample = generate_true_matrix(config, replication)?;
    let mut rng = stream_rng(config.seed, 2 * replication + 1);
    inject_guessing(sample, config.guess_rate, &mut rng)
}

/// Expected score after guessing, `(1 - c) T + c k`, where `c` is the share
/// of true zeros that turn into ones.
pub fn expected_distorted_score(true_score: f64, k: usize, c: f64) -> Result<f64> {
    let kf = k as f64;
    if !(0.0..=kf).contains(&true_score) || !(0.0..=1.0).contains(&c) {
        return Err(Error::Domain(format!(
            "need 0 <= T <= k and 0 <= c <= 1, got T = {true_score}, k = {k}, c = {c}"
        )));
    }
    Ok((1.0 - c) * true_score + c * kf)
}
