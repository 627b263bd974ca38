//! Analytical and random contest participants.
//!
//! Analytical users hold a noisy belief `p ~ Dirichlet(α·π)` about the true
//! win probabilities `π` and pick a team by sampling from it. Random users
//! pick uniformly.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, domain, SimRng};

/// Lower clamp for the calibrated concentration.
pub const MIN_ALPHA: f64 = 1e-6;

/// Smallest Dirichlet concentration for which every belief component lies
/// within `beta` of the truth with probability at least `1 − delta`:
/// `n / (4·delta·beta²) − 1` (Chebyshev plus a union bound over `n`
/// components, using `Var p_i ≤ 1 / (4(α + 1))`).
pub fn calibrate_alpha(n: usize, delta: f64, beta: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::config("calibrate_alpha needs at least one choice"));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::config(format!("delta must lie in (0, 1], got {delta}")));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::config(format!("beta must lie in (0, 1), got {beta}")));
    }
    let alpha = n as f64 / (4.0 * delta * beta * beta) - 1.0;
    // Drop representation noise so round inputs give round concentrations.
    let nearest = alpha.round();
    let alpha = if (alpha - nearest).abs() <= 1e-9 * nearest.abs() { nearest } else { alpha };
    Ok(alpha.max(MIN_ALPHA))
}

/// Population settings as they appear in config files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationConfig {
    pub n_users: u32,
    pub tau: f64,
    pub beta: f64,
    pub delta: f64,
    /// Overrides the calibrated concentration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

impl Default for PopulationConfig {
    fn default() -> Self {
        PopulationConfig {
            n_users: 1000,
            tau: 0.2,
            beta: 0.04,
            delta: 0.05,
            alpha: None,
        }
    }
}

impl PopulationConfig {
    /// Resolves the concentration for a contest with `n_choices` options.
    pub fn resolve(&self, n_choices: usize) -> Result<AgentPopulation> {
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::config(format!("tau must lie in [0, 1], got {}", self.tau)));
        }
        let alpha = match self.alpha {
            Some(a) if a > 0.0 && a.is_finite() => a,
            Some(a) => return Err(Error::config(format!("alpha must be positive, got {a}"))),
            None => calibrate_alpha(n_choices, self.delta, self.beta)?,
        };
        Ok(AgentPopulation {
            n_users: self.n_users,
            tau: self.tau,
            beta: self.beta,
            delta: self.delta,
            alpha,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentPopulation {
    pub n_users: u32,
    pub tau: f64,
    pub beta: f64,
    pub delta: f64,
    pub alpha: f64,
}

impl AgentPopulation {
    pub fn n_analytical(&self) -> u32 {
        (self.tau * self.n_users as f64).round() as u32
    }

    pub fn n_random(&self) -> u32 {
        self.n_users - self.n_analytical()
    }
}

/// A user's private estimate of the win probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct Belief {
    pub p: Vec<f64>,
}

pub(crate) fn check_probability_vector(pi: &[f64]) -> Result<()> {
    if pi.is_empty() || pi.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::config("probabilities must be finite and nonnegative"));
    }
    let total: f64 = pi.iter().sum();
    if total <= 0.0 {
        return Err(Error::config("probability vector is all zero"));
    }
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::config(format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}

/// Draws `p ~ Dirichlet(alpha·pi)` by normalizing Gamma variates. Zero
/// components of `pi` stay exactly zero.
pub fn sample_belief(pi: &[f64], alpha: f64, rng: &mut SimRng) -> Result<Belief> {
    check_probability_vector(pi)?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::config(format!("alpha must be positive, got {alpha}")));
    }
    let mut p = vec![0.0; pi.len()];
    fill_belief(pi, alpha, rng, &mut p);
    Ok(Belief { p })
}

/// Unchecked core of [`sample_belief`]; `pi` and `alpha` must be valid.
pub(crate) fn fill_belief(pi: &[f64], alpha: f64, rng: &mut SimRng, out: &mut [f64]) {
    loop {
        let mut total = 0.0;
        for (o, &w) in out.iter_mut().zip(pi) {
            *o = if w > 0.0 {
                Gamma::new(alpha * w, 1.0)
                    .expect("positive gamma shape")
                    .sample(rng)
            } else {
                0.0
            };
            total += *o;
        }
        // Tiny shapes can underflow every variate to zero; redraw.
        if total > 0.0 {
            out.iter_mut().for_each(|o| *o /= total);
            return;
        }
    }
}

/// Samples an index with probability `belief.p[i]`.
pub fn choose_analytical(belief: &Belief, rng: &mut SimRng) -> usize {
    choose_weighted(&belief.p, rng)
}

pub(crate) fn choose_weighted(p: &[f64], rng: &mut SimRng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in p.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if u < acc {
            return i;
        }
    }
    // Rounding left u above the cumulative total.
    last
}

/// Uniform index in `0..n`.
pub fn choose_random(n: usize, rng: &mut SimRng) -> usize {
    rng.random_range(0..n)
}

/// Per-choice selection counts, split by user type.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selections {
    pub analytical: Vec<u32>,
    pub random: Vec<u32>,
}

impl Selections {
    pub fn zeros(n: usize) -> Self {
        Selections {
            analytical: vec![0; n],
            random: vec![0; n],
        }
    }

    pub fn n_choices(&self) -> usize {
        self.analytical.len()
    }

    pub fn total(&self, choice: usize) -> u32 {
        self.analytical[choice] + self.random[choice]
    }

    pub fn grand_total(&self) -> u32 {
        self.analytical.iter().chain(&self.random).sum()
    }
}

/// Every analytical user draws an independent belief and samples a choice
/// from it; every random user picks uniformly. User `u` draws from its own
/// stream keyed by `(seed, u)`.
pub fn allocate_selections(pop: &AgentPopulation, pi: &[f64], seed: u64) -> Result<Selections> {
    check_probability_vector(pi)?;
    Ok(allocate_unchecked(pop, pi, seed))
}

pub(crate) fn allocate_unchecked(pop: &AgentPopulation, pi: &[f64], seed: u64) -> Selections {
    let n = pi.len();
    let mut sel = Selections::zeros(n);
    let mut belief = vec![0.0; n];
    let n_analytical = pop.n_analytical();
    for user in 0..pop.n_users {
        let mut rng = rng::stream(seed, domain::USER, user as u64);
        if user < n_analytical {
            fill_belief(pi, pop.alpha, &mut rng, &mut belief);
            sel.analytical[choose_weighted(&belief, &mut rng)] += 1;
        } else {
            sel.random[choose_random(n, &mut rng)] += 1;
        }
    }
    sel
}
