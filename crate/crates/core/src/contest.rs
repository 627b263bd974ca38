//! Shared-prize contest settlement and the two behavioral metrics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::{allocate_unchecked, AgentPopulation, Selections};
use crate::error::{Error, Result};
use crate::rng::{self, domain};
use crate::score_model::{winners, ScoreSource};
use crate::table::{Cell, ResultTable};

/// Iterations per aggregation chunk.
const ITER_CHUNK: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContestConfig {
    /// Per-user entry fee in rupees.
    pub entry_fee: f64,
    /// Platform commission in percent.
    pub platform_cut: f64,
    pub n_users: u32,
}

impl Default for ContestConfig {
    fn default() -> Self {
        ContestConfig {
            entry_fee: 25.0,
            platform_cut: 20.0,
            n_users: 1000,
        }
    }
}

impl ContestConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.entry_fee >= 0.0 && self.entry_fee.is_finite()) {
            return Err(Error::config(format!("entry fee must be nonnegative, got {}", self.entry_fee)));
        }
        if !(0.0..=100.0).contains(&self.platform_cut) {
            return Err(Error::config(format!(
                "platform cut must lie in [0, 100], got {}",
                self.platform_cut
            )));
        }
        Ok(())
    }
}

/// Entry fees net of the platform commission.
pub fn prize_pool(cfg: &ContestConfig) -> f64 {
    cfg.entry_fee * cfg.n_users as f64 * (100.0 - cfg.platform_cut) / 100.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationOutcome {
    pub winner_teams: Vec<usize>,
    pub selections: Selections,
    /// What each selector of a winning team receives.
    pub payout_per_winner: f64,
    /// Nobody picked a winning team; the pool is retained.
    pub rollover: bool,
}

impl IterationOutcome {
    /// Payout received by one user who selected `team`.
    pub fn payout_for(&self, team: usize) -> f64 {
        if self.winner_teams.contains(&team) {
            self.payout_per_winner
        } else {
            0.0
        }
    }

    /// Sum of payouts over every user.
    pub fn total_paid(&self) -> f64 {
        (0..self.selections.n_choices())
            .map(|t| self.selections.total(t) as f64 * self.payout_for(t))
            .sum()
    }
}

/// Splits `pool` equally over everyone who picked any of `winner_teams`.
pub fn settle(pool: f64, winner_teams: &[usize], selections: &Selections) -> Result<IterationOutcome> {
    if winner_teams.is_empty() {
        return Err(Error::data("settle called without a winning team"));
    }
    if let Some(&t) = winner_teams.iter().find(|&&t| t >= selections.n_choices()) {
        return Err(Error::data(format!("winning team {t} is out of range")));
    }
    let selectors: u32 = winner_teams.iter().map(|&t| selections.total(t)).sum();
    let (payout_per_winner, rollover) = if selectors > 0 {
        (pool / selectors as f64, false)
    } else {
        (0.0, true)
    };
    Ok(IterationOutcome {
        winner_teams: winner_teams.to_vec(),
        selections: selections.clone(),
        payout_per_winner,
        rollover,
    })
}

/// `(analytical_count / n_analytical) / (random_count / n_random)`;
/// `None` when no random user picked the team.
pub fn selection_ratio(
    analytical_count: u64,
    random_count: u64,
    n_analytical: u64,
    n_random: u64,
) -> Result<Option<f64>> {
    if n_analytical == 0 || n_random == 0 {
        return Err(Error::config("selection ratio needs both user types present"));
    }
    if random_count == 0 {
        return Ok(None);
    }
    Ok(Some(
        (analytical_count as f64 / n_analytical as f64) / (random_count as f64 / n_random as f64),
    ))
}

/// Average payout including the zero payouts of losing iterations.
pub fn mean_winnings(payout_history: &[f64]) -> Result<f64> {
    if payout_history.is_empty() {
        return Err(Error::data("mean winnings of an empty payout history"));
    }
    Ok(payout_history.iter().sum::<f64>() / payout_history.len() as f64)
}

/// Per-choice aggregates of a contest run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub config_id: String,
    pub win_probs: Vec<f64>,
    pub selection_ratio: Vec<Option<f64>>,
    pub mean_winnings: Vec<f64>,
    /// Standard error of `mean_winnings` across iterations.
    pub mean_winnings_se: Vec<f64>,
    pub analytical_selections: Vec<u64>,
    pub random_selections: Vec<u64>,
    pub wins: Vec<f64>,
    pub rollovers: u64,
    pub n_iterations: usize,
    pub seed: u64,
}

impl MetricsTable {
    pub fn n_choices(&self) -> usize {
        self.mean_winnings.len()
    }

    /// The choice with the highest true win probability.
    pub fn best(&self) -> usize {
        crate::util::argmax(&self.win_probs)
    }

    /// CSV layout: `config_id, team, selection_ratio, mean_winnings, n_iterations, seed`.
    pub fn to_table(&self) -> ResultTable {
        let mut t = ResultTable::new(&[
            "config_id",
            "team",
            "selection_ratio",
            "mean_winnings",
            "n_iterations",
            "seed",
        ]);
        for i in 0..self.n_choices() {
            t.push(vec![
                Cell::from(self.config_id.as_str()),
                Cell::Int(i as i64 + 1),
                Cell::from(self.selection_ratio[i]),
                Cell::Float(self.mean_winnings[i]),
                Cell::Int(self.n_iterations as i64),
                Cell::Uint(self.seed),
            ]);
        }
        t
    }
}

#[derive(Clone, Debug)]
struct Accumulator {
    analytical: Vec<u64>,
    random: Vec<u64>,
    payout: Vec<f64>,
    payout_sq: Vec<f64>,
    wins: Vec<f64>,
    rollovers: u64,
}

impl Accumulator {
    fn new(n: usize) -> Self {
        Accumulator {
            analytical: vec![0; n],
            random: vec![0; n],
            payout: vec![0.0; n],
            payout_sq: vec![0.0; n],
            wins: vec![0.0; n],
            rollovers: 0,
        }
    }

    fn record(&mut self, outcome: &IterationOutcome) {
        let sel = &outcome.selections;
        for t in 0..sel.n_choices() {
            self.analytical[t] += sel.analytical[t] as u64;
            self.random[t] += sel.random[t] as u64;
            let w = outcome.payout_for(t);
            self.payout[t] += w;
            self.payout_sq[t] += w * w;
        }
        let share = 1.0 / outcome.winner_teams.len() as f64;
        for &t in &outcome.winner_teams {
            self.wins[t] += share;
        }
        self.rollovers += outcome.rollover as u64;
    }

    fn merge(&mut self, other: &Accumulator) {
        let add_u = |a: &mut [u64], b: &[u64]| a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        let add_f = |a: &mut [f64], b: &[f64]| a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        add_u(&mut self.analytical, &other.analytical);
        add_u(&mut self.random, &other.random);
        add_f(&mut self.payout, &other.payout);
        add_f(&mut self.payout_sq, &other.payout_sq);
        add_f(&mut self.wins, &other.wins);
        self.rollovers += other.rollovers;
    }
}

/// A repeated contest: fixed score source, fixed true win probabilities and
/// a fixed user population.
pub struct Contest<'a, S: ScoreSource + ?Sized> {
    pub config_id: String,
    pub source: &'a S,
    /// True win probability of each choice, as known to analytical users.
    pub pi: &'a [f64],
    pub population: &'a AgentPopulation,
    pub config: &'a ContestConfig,
}

impl<'a, S: ScoreSource + ?Sized> Contest<'a, S> {
    pub fn new(
        config_id: impl Into<String>,
        source: &'a S,
        pi: &'a [f64],
        population: &'a AgentPopulation,
        config: &'a ContestConfig,
    ) -> Result<Self> {
        config.validate()?;
        if pi.len() != source.n_choices() {
            return Err(Error::config(format!(
                "{} win probabilities for {} choices",
                pi.len(),
                source.n_choices()
            )));
        }
        if population.n_users != config.n_users {
            return Err(Error::config("population and contest disagree on the user count"));
        }
        crate::agents::check_probability_vector(pi)?;
        Ok(Contest {
            config_id: config_id.into(),
            source,
            pi,
            population,
            config,
        })
    }

    /// Plays iteration `index`: allocate users, draw one score vector,
    /// settle. Scores and allocations come from separate streams, so two
    /// contests with the same seed and score source see the same match
    /// results whatever their populations.
    pub fn iteration(&self, index: u64, seed: u64) -> IterationOutcome {
        let alloc_seed = rng::derive(seed, &[domain::ALLOCATION, index]);
        let selections = allocate_unchecked(self.population, self.pi, alloc_seed);
        let mut scores_rng = rng::stream(seed, domain::SCORES, index);
        let mut scores = vec![0.0; self.source.n_choices()];
        self.source.draw(&mut scores_rng, &mut scores);
        let winning = winners(&scores);
        settle(prize_pool(self.config), &winning, &selections).expect("winners are in range")
    }

    pub fn run(&self, n_iter: usize, seed: u64) -> Result<MetricsTable> {
        if n_iter == 0 {
            return Err(Error::config("need at least one iteration"));
        }
        let n = self.source.n_choices();
        let n_chunks = n_iter.div_ceil(ITER_CHUNK);
        let partials: Vec<Accumulator> = (0..n_chunks)
            .into_par_iter()
            .map(|chunk| {
                let mut acc = Accumulator::new(n);
                let start = chunk * ITER_CHUNK;
                for i in start..(start + ITER_CHUNK).min(n_iter) {
                    acc.record(&self.iteration(i as u64, seed));
                }
                acc
            })
            .collect();
        let mut acc = Accumulator::new(n);
        for p in &partials {
            acc.merge(p);
        }
        let iters = n_iter as f64;
        let n_a = self.population.n_analytical() as u64 * n_iter as u64;
        let n_r = self.population.n_random() as u64 * n_iter as u64;
        let selection_ratio = (0..n)
            .map(|t| {
                if n_a == 0 || n_r == 0 {
                    Ok(None)
                } else {
                    selection_ratio(acc.analytical[t], acc.random[t], n_a, n_r)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let mean: Vec<f64> = acc.payout.iter().map(|s| s / iters).collect();
        let se = mean
            .iter()
            .zip(&acc.payout_sq)
            .map(|(m, sq)| {
                if n_iter < 2 {
                    return 0.0;
                }
                let var = ((sq - iters * m * m) / (iters - 1.0)).max(0.0);
                (var / iters).sqrt()
            })
            .collect();
        Ok(MetricsTable {
            config_id: self.config_id.clone(),
            win_probs: self.pi.to_vec(),
            selection_ratio,
            mean_winnings: mean,
            mean_winnings_se: se,
            analytical_selections: acc.analytical,
            random_selections: acc.random,
            wins: acc.wins,
            rollovers: acc.rollovers,
            n_iterations: n_iter,
            seed,
        })
    }
}

/// Runs `n_iter` contest iterations of a team score model.
pub fn run_iterations<S: ScoreSource + ?Sized>(
    config_id: &str,
    source: &S,
    pi: &[f64],
    pop: &AgentPopulation,
    cfg: &ContestConfig,
    n_iter: usize,
    seed: u64,
) -> Result<MetricsTable> {
    Contest::new(config_id, source, pi, pop, cfg)?.run(n_iter, seed)
}
