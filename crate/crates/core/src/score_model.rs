//! Joint lognormal model of expert-team scores and win-probability estimation.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, Matrix};
use crate::rng::{self, domain, SimRng};
use crate::special::normal_cdf;

/// Rows per independently seeded sampling chunk.
pub(crate) const CHUNK: usize = 4096;

/// Point-space description of the team scores: per-team mean and standard
/// deviation of fantasy points plus a common pairwise correlation.
///
/// This is the human-editable form of a [`ScoreModel`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSpec {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    pub rho: f64,
}

impl PointSpec {
    pub fn new(means: Vec<f64>, sds: Vec<f64>, rho: f64) -> Result<Self> {
        let spec = PointSpec { means, sds, rho };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.means.len();
        if n < 2 {
            return Err(Error::config(format!("need at least 2 teams, got {n}")));
        }
        if self.sds.len() != n {
            return Err(Error::config(format!(
                "means has {n} entries but sds has {}",
                self.sds.len()
            )));
        }
        if let Some(m) = self.means.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
            return Err(Error::config(format!("team means must be positive, got {m}")));
        }
        if let Some(s) = self.sds.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::config(format!("team sds must be positive, got {s}")));
        }
        check_rho(self.rho)
    }

    pub fn n_teams(&self) -> usize {
        self.means.len()
    }

    /// Keeps the first `k` teams.
    pub fn truncated(&self, k: usize) -> Result<PointSpec> {
        if k < 2 || k > self.n_teams() {
            return Err(Error::config(format!(
                "cannot keep {k} of {} teams",
                self.n_teams()
            )));
        }
        PointSpec::new(self.means[..k].to_vec(), self.sds[..k].to_vec(), self.rho)
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::config(format!("rho must lie in [0, 1), got {rho}")));
    }
    Ok(())
}

/// Unit-diagonal matrix with every off-diagonal entry equal to `rho`.
pub fn build_equicorr(n: usize, rho: f64) -> Result<Matrix> {
    if n < 2 {
        return Err(Error::config(format!("need at least 2 teams, got {n}")));
    }
    check_rho(rho)?;
    let mut m = Matrix::identity(n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                m[(i, j)] = rho;
            }
        }
    }
    Ok(m)
}

/// Multivariate lognormal: `log P ~ N(mu_log, diag(sigma_log)·corr_log·diag(sigma_log))`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreModel {
    mu_log: Vec<f64>,
    sigma_log: Vec<f64>,
    corr_log: Matrix,
    chol: Matrix,
}

impl ScoreModel {
    /// Builds a model directly from log-space parameters. Zero `sigma_log`
    /// entries are allowed and give deterministic scores.
    pub fn from_log_params(mu_log: Vec<f64>, sigma_log: Vec<f64>, corr_log: Matrix) -> Result<Self> {
        let n = mu_log.len();
        if n == 0 || sigma_log.len() != n || corr_log.rows() != n || corr_log.cols() != n {
            return Err(Error::config("log-space parameter shapes disagree"));
        }
        if mu_log.iter().chain(&sigma_log).any(|v| !v.is_finite()) {
            return Err(Error::config("log-space parameters must be finite"));
        }
        if sigma_log.iter().any(|&s| s < 0.0) {
            return Err(Error::config("log-space sds must be nonnegative"));
        }
        if !corr_log.is_symmetric(1e-12) || (0..n).any(|i| (corr_log[(i, i)] - 1.0).abs() > 1e-12) {
            return Err(Error::config("correlation matrix must be symmetric with unit diagonal"));
        }
        let mut chol = cholesky(&corr_log, 1e-12)?;
        for i in 0..n {
            for v in chol.row_mut(i) {
                *v *= sigma_log[i];
            }
        }
        Ok(ScoreModel {
            mu_log,
            sigma_log,
            corr_log,
            chol,
        })
    }

    pub fn n_teams(&self) -> usize {
        self.mu_log.len()
    }

    pub fn mu_log(&self) -> &[f64] {
        &self.mu_log
    }

    pub fn sigma_log(&self) -> &[f64] {
        &self.sigma_log
    }

    pub fn corr_log(&self) -> &Matrix {
        &self.corr_log
    }

    /// Lower-triangular factor of the log-space covariance.
    pub fn chol(&self) -> &Matrix {
        &self.chol
    }

    pub fn covariance(&self) -> Matrix {
        let n = self.n_teams();
        let mut cov = self.corr_log.clone();
        for i in 0..n {
            for j in 0..n {
                cov[(i, j)] *= self.sigma_log[i] * self.sigma_log[j];
            }
        }
        cov
    }

    /// Point-space means and sds implied by the log-space parameters.
    pub fn point_moments(&self) -> (Vec<f64>, Vec<f64>) {
        self.mu_log
            .iter()
            .zip(&self.sigma_log)
            .map(|(&m, &s)| {
                let mean = (m + 0.5 * s * s).exp();
                (mean, mean * (s * s).exp_m1().sqrt())
            })
            .unzip()
    }

    /// Draws one score vector into `out`.
    pub fn draw_into(&self, rng: &mut SimRng, z: &mut [f64], out: &mut [f64]) {
        let n = self.n_teams();
        for v in z.iter_mut() {
            *v = StandardNormal.sample(rng);
        }
        for i in 0..n {
            let row = &self.chol.row(i)[..=i];
            let shift: f64 = row.iter().zip(&z[..=i]).map(|(l, z)| l * z).sum();
            out[i] = (self.mu_log[i] + shift).exp();
        }
    }
}

/// Lognormal parameters reproducing the requested point-space mean and SD
/// for each team, with `rho` applied to the log scores.
pub fn moment_match(spec: &PointSpec) -> Result<ScoreModel> {
    spec.validate()?;
    let (mu, sigma): (Vec<f64>, Vec<f64>) = spec
        .means
        .iter()
        .zip(&spec.sds)
        .map(|(&m, &s)| {
            let var_log = (s / m).powi(2).ln_1p();
            (m.ln() - 0.5 * var_log, var_log.sqrt())
        })
        .unzip();
    ScoreModel::from_log_params(mu, sigma, build_equicorr(spec.n_teams(), spec.rho)?)
}

/// Something that produces one joint score per contest choice.
pub trait ScoreSource: Sync {
    fn n_choices(&self) -> usize;

    /// Writes one joint draw into `out` (length `n_choices`).
    fn draw(&self, rng: &mut SimRng, out: &mut [f64]);
}

impl ScoreSource for ScoreModel {
    fn n_choices(&self) -> usize {
        self.n_teams()
    }

    fn draw(&self, rng: &mut SimRng, out: &mut [f64]) {
        let mut z = [0.0; 16];
        if self.n_teams() <= z.len() {
            self.draw_into(rng, &mut z[..self.n_teams()], out);
        } else {
            let mut z = vec![0.0; self.n_teams()];
            self.draw_into(rng, &mut z, out);
        }
    }
}

/// `k × n` matrix of positive scores. Row `j` comes from chunk
/// `j / 4096`'s stream, so the output does not depend on the thread count.
pub fn sample_scores(model: &ScoreModel, k: usize, seed: u64) -> Matrix {
    let n = model.n_teams();
    let mut data = vec![0.0; k * n];
    data.par_chunks_mut(CHUNK * n)
        .enumerate()
        .for_each(|(chunk, block)| {
            let mut rng = rng::stream(seed, domain::SCORES, chunk as u64);
            for row in block.chunks_mut(n) {
                model.draw(&mut rng, row);
            }
        });
    Matrix::from_vec(k, n, data)
}

/// Indices attaining the maximum score.
pub fn winners(scores: &[f64]) -> Vec<usize> {
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    scores
        .iter()
        .enumerate()
        .filter(|(_, &s)| s == best)
        .map(|(i, _)| i)
        .collect()
}

/// Adds one win to `credits`, split equally across tied maxima.
pub(crate) fn credit_winners(scores: &[f64], credits: &mut [f64]) {
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties = scores.iter().filter(|&&s| s == best).count();
    let share = 1.0 / ties as f64;
    for (c, &s) in credits.iter_mut().zip(scores) {
        if s == best {
            *c += share;
        }
    }
}

/// Monte Carlo win frequency of every choice of a score source.
pub(crate) fn estimate_choice_probs<S: ScoreSource + ?Sized>(
    source: &S,
    k: usize,
    seed: u64,
    stream_domain: u64,
) -> Vec<f64> {
    let m = source.n_choices();
    let n_chunks = k.div_ceil(CHUNK);
    let partials: Vec<Vec<f64>> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = rng::stream(seed, stream_domain, chunk as u64);
            let rows = CHUNK.min(k - chunk * CHUNK);
            let mut credits = vec![0.0; m];
            let mut scores = vec![0.0; m];
            for _ in 0..rows {
                source.draw(&mut rng, &mut scores);
                credit_winners(&scores, &mut credits);
            }
            credits
        })
        .collect();
    let mut total = vec![0.0; m];
    for p in &partials {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    total.iter_mut().for_each(|t| *t /= k as f64);
    total
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WinProbEstimate {
    pub probs: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
}

impl WinProbEstimate {
    /// Binomial standard error of each frequency.
    pub fn std_errors(&self) -> Vec<f64> {
        self.probs
            .iter()
            .map(|p| (p * (1.0 - p) / self.n_samples as f64).sqrt())
            .collect()
    }

    pub fn best(&self) -> usize {
        crate::util::argmax(&self.probs)
    }
}

/// Empirical probability that each team attains the row maximum.
pub fn estimate_win_probs(model: &ScoreModel, k: usize, seed: u64) -> Result<WinProbEstimate> {
    if k == 0 {
        return Err(Error::config("win-probability sample count must be at least 1"));
    }
    Ok(WinProbEstimate {
        probs: estimate_choice_probs(model, k, seed, domain::WIN_PROB),
        n_samples: k,
        seed,
    })
}

/// Exact `P(P₂ > P₁)` for a two-team model, using the normality of
/// `log P₂ − log P₁`.
pub fn analytic_two_team_win_prob(model: &ScoreModel) -> Result<f64> {
    if model.n_teams() != 2 {
        return Err(Error::config(format!(
            "analytic win probability needs exactly 2 teams, got {}",
            model.n_teams()
        )));
    }
    let (s1, s2) = (model.sigma_log[0], model.sigma_log[1]);
    let rho = model.corr_log[(0, 1)];
    let diff = model.mu_log[1] - model.mu_log[0];
    let var = (s1 * s1 + s2 * s2 - 2.0 * rho * s1 * s2).max(0.0);
    if var == 0.0 {
        return Ok(match diff.partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Greater) => 1.0,
            Some(std::cmp::Ordering::Less) => 0.0,
            _ => 0.5,
        });
    }
    Ok(normal_cdf(diff / var.sqrt()))
}
