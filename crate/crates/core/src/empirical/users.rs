//! Rule-based user strategies.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::metrics::PlayerMetrics;
use super::selection::{ExpertTeam, Multipliers};
use crate::rng::SimRng;

/// A user who rates players by `w_form·Form + w_career·CareerPoints`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserStrategy {
    pub name: String,
    pub w_form: f64,
    pub w_career: f64,
}

impl UserStrategy {
    pub fn one_third_form() -> Self {
        UserStrategy { name: "OneThirdForm".into(), w_form: 1.0 / 3.0, w_career: 2.0 / 3.0 }
    }

    pub fn two_third_form() -> Self {
        UserStrategy { name: "TwoThirdForm".into(), w_form: 2.0 / 3.0, w_career: 1.0 / 3.0 }
    }

    pub fn strict_form() -> Self {
        UserStrategy { name: "StrictForm".into(), w_form: 1.0, w_career: 0.0 }
    }

    pub fn defaults() -> Vec<UserStrategy> {
        vec![Self::one_third_form(), Self::two_third_form(), Self::strict_form()]
    }

    /// Rating of one player. Missing form falls back to career points.
    pub fn rate(&self, m: &PlayerMetrics) -> f64 {
        let career = m.career_points.unwrap_or(0.0);
        self.w_form * m.form.unwrap_or(career) + self.w_career * career
    }

    /// Per-member ratings with captain and vice-captain multipliers.
    pub fn rate_members(&self, team: &ExpertTeam, metrics: &HashMap<String, PlayerMetrics>, mult: Multipliers) -> Vec<f64> {
        team.players
            .iter()
            .map(|p| metrics.get(p).map_or(0.0, |m| self.rate(m)) * team.multiplier(p, mult))
            .collect()
    }

    pub fn rate_team(&self, team: &ExpertTeam, metrics: &HashMap<String, PlayerMetrics>, mult: Multipliers) -> f64 {
        self.rate_members(team, metrics, mult).iter().sum()
    }
}

/// First index of the largest rating.
pub fn deterministic_pick(ratings: &[f64]) -> usize {
    crate::util::argmax(ratings)
}

/// Impact-mode choice: each team is paired with the candidate the strategy
/// rates highest, then teams are compared on their augmented ratings.
/// Returns `(team, candidate index within that team's list)`.
pub fn impact_pick(member_ratings: &[Vec<f64>], candidate_ratings: &[Vec<f64>]) -> (usize, usize) {
    assert_eq!(member_ratings.len(), candidate_ratings.len());
    let best: Vec<usize> = candidate_ratings.iter().map(|c| deterministic_pick(c)).collect();
    let augmented: Vec<f64> = member_ratings
        .iter()
        .zip(candidate_ratings)
        .zip(&best)
        .map(|((m, c), &b)| super::selection::impact_augment(m, c.get(b).copied().unwrap_or(f64::NEG_INFINITY)))
        .collect();
    let team = deterministic_pick(&augmented);
    (team, best[team])
}

/// With probability `p_random` a uniformly random team, otherwise the team
/// the strategy rates highest (lowest index on ties).
pub fn user_pick(
    strategy: &UserStrategy,
    teams: &[ExpertTeam],
    metrics: &HashMap<String, PlayerMetrics>,
    mult: Multipliers,
    p_random: f64,
    rng: &mut SimRng,
) -> usize {
    assert!(!teams.is_empty(), "user_pick needs at least one team");
    if p_random > 0.0 && rng.random::<f64>() < p_random {
        return rng.random_range(0..teams.len());
    }
    let ratings: Vec<f64> = teams.iter().map(|t| strategy.rate_team(t, metrics, mult)).collect();
    deterministic_pick(&ratings)
}
