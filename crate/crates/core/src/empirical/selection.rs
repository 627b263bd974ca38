//! Expert-team construction: the shared core and the strategy fill.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::metrics::PlayerMetrics;
use crate::error::{Error, Result};
use crate::impact::TEAM_SIZE;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Wicketkeeper,
    Batter,
    Bowler,
    AllRounder,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::Wicketkeeper, Role::Batter, Role::Bowler, Role::AllRounder];

    pub fn parse(s: &str) -> Result<Role> {
        match s.trim().to_ascii_uppercase().as_str() {
            "WK" | "WICKETKEEPER" | "WICKET-KEEPER" => Ok(Role::Wicketkeeper),
            "BAT" | "BATTER" | "BATSMAN" => Ok(Role::Batter),
            "BOWL" | "BOWLER" => Ok(Role::Bowler),
            "AR" | "ALLROUNDER" | "ALL-ROUNDER" => Ok(Role::AllRounder),
            other => Err(Error::data(format!("unknown role `{other}`"))),
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Role::Wicketkeeper => "WK",
            Role::Batter => "BAT",
            Role::Bowler => "BOWL",
            Role::AllRounder => "AR",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub player_id: String,
    pub role: Role,
    pub metrics: PlayerMetrics,
}

impl Candidate {
    pub fn career_points(&self) -> f64 {
        self.metrics.career_points.unwrap_or(0.0)
    }
}

/// Per-role bounds on the common core, indexed by [`Role`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompositionConstraints {
    pub min_wicketkeepers: Option<u32>,
    pub max_wicketkeepers: Option<u32>,
    pub min_batters: Option<u32>,
    pub max_batters: Option<u32>,
    pub min_bowlers: Option<u32>,
    pub max_bowlers: Option<u32>,
    pub min_all_rounders: Option<u32>,
    pub max_all_rounders: Option<u32>,
}

impl CompositionConstraints {
    fn bounds(&self) -> [(u32, u32); 4] {
        let b = |lo: Option<u32>, hi: Option<u32>| (lo.unwrap_or(0), hi.unwrap_or(u32::MAX));
        [
            b(self.min_wicketkeepers, self.max_wicketkeepers),
            b(self.min_batters, self.max_batters),
            b(self.min_bowlers, self.max_bowlers),
            b(self.min_all_rounders, self.max_all_rounders),
        ]
    }

    fn label(role: Role, min: bool) -> String {
        let noun = match role {
            Role::Wicketkeeper => "wicketkeepers",
            Role::Batter => "batters",
            Role::Bowler => "bowlers",
            Role::AllRounder => "all_rounders",
        };
        format!("{}_{noun}", if min { "min" } else { "max" })
    }
}

/// Orders by metric descending, then player id ascending.
fn rank_order(a: (f64, &str), b: (f64, &str)) -> Ordering {
    b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal).then_with(|| a.1.cmp(b.1))
}

struct CoreSearch<'a> {
    sorted: Vec<&'a Candidate>,
    bounds: [(u32, u32); 4],
    n: usize,
    /// Remaining role counts from index i onward.
    suffix_roles: Vec<[u32; 4]>,
    best_value: f64,
    best: Option<Vec<usize>>,
}

impl CoreSearch<'_> {
    fn dfs(&mut self, i: usize, chosen: &mut Vec<usize>, counts: &mut [u32; 4], value: f64) {
        if chosen.len() == self.n {
            if counts.iter().zip(&self.bounds).all(|(c, (lo, _))| c >= lo) && value > self.best_value {
                self.best_value = value;
                self.best = Some(chosen.clone());
            }
            return;
        }
        let need = self.n - chosen.len();
        if self.sorted.len() - i < need {
            return;
        }
        // Minimums must still be reachable with what is left.
        let mut short = 0;
        for r in 0..4 {
            let deficit = self.bounds[r].0.saturating_sub(counts[r]);
            if deficit > self.suffix_roles[i][r] {
                return;
            }
            short += deficit;
        }
        if short as usize > need {
            return;
        }
        // Candidates are sorted, so the next `need` values bound the optimum.
        let bound: f64 = value + self.sorted[i..i + need].iter().map(|c| c.career_points()).sum::<f64>();
        if bound <= self.best_value {
            return;
        }
        let r = self.sorted[i].role.index();
        if counts[r] < self.bounds[r].1 {
            counts[r] += 1;
            chosen.push(i);
            self.dfs(i + 1, chosen, counts, value + self.sorted[i].career_points());
            chosen.pop();
            counts[r] -= 1;
        }
        self.dfs(i + 1, chosen, counts, value);
    }
}

/// The `n`-subset of `pool` with the largest total career points subject to
/// `constraints`, found by exact branch and bound. Among equal totals the
/// subset that is first in (career points desc, player id asc) order wins.
pub fn select_common_core(
    pool: &[Candidate],
    n: usize,
    constraints: &CompositionConstraints,
) -> Result<Vec<String>> {
    if n > pool.len() {
        return Err(Error::Infeasible(format!(
            "core of {n} players from a pool of {}",
            pool.len()
        )));
    }
    let bounds = constraints.bounds();
    let mut available = [0u32; 4];
    for c in pool {
        available[c.role.index()] += 1;
    }
    for role in Role::ALL {
        let (lo, hi) = bounds[role.index()];
        if lo > available[role.index()] {
            return Err(Error::Infeasible(format!(
                "{} = {lo} but the pool has {} {}",
                CompositionConstraints::label(role, true),
                available[role.index()],
                role.code()
            )));
        }
        if lo > hi {
            return Err(Error::Infeasible(format!(
                "{} exceeds {}",
                CompositionConstraints::label(role, true),
                CompositionConstraints::label(role, false)
            )));
        }
    }
    let min_total: u32 = bounds.iter().map(|b| b.0).sum();
    if min_total as usize > n {
        return Err(Error::Infeasible(format!(
            "role minimums sum to {min_total}, more than the core size {n}"
        )));
    }
    let max_total: u64 = Role::ALL
        .iter()
        .map(|r| bounds[r.index()].1.min(available[r.index()]) as u64)
        .sum();
    if (max_total as usize) < n {
        return Err(Error::Infeasible(format!(
            "role maximums admit only {max_total} players, fewer than the core size {n}"
        )));
    }

    let mut sorted: Vec<&Candidate> = pool.iter().collect();
    sorted.sort_by(|a, b| rank_order((a.career_points(), &a.player_id), (b.career_points(), &b.player_id)));
    let mut suffix_roles = vec![[0u32; 4]; sorted.len() + 1];
    for i in (0..sorted.len()).rev() {
        suffix_roles[i] = suffix_roles[i + 1];
        suffix_roles[i][sorted[i].role.index()] += 1;
    }
    let mut search = CoreSearch {
        sorted,
        bounds,
        n,
        suffix_roles,
        best_value: f64::NEG_INFINITY,
        best: None,
    };
    search.dfs(0, &mut Vec::with_capacity(n), &mut [0; 4], 0.0);
    let best = search
        .best
        .ok_or_else(|| Error::Infeasible("no core satisfies the role constraints".into()))?;
    Ok(best.into_iter().map(|i| search.sorted[i].player_id.clone()).collect())
}

/// How an expert ranks players.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    CareerPoints,
    Ma5,
    TournamentPoints,
    MeanVarOptim,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::CareerPoints,
        Strategy::Ma5,
        Strategy::TournamentPoints,
        Strategy::MeanVarOptim,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Strategy::CareerPoints => "CareerPoints",
            Strategy::Ma5 => "MA5",
            Strategy::TournamentPoints => "TournamentPoints",
            Strategy::MeanVarOptim => "MeanVarOptim",
        }
    }

    /// Ranking value; players without the metric fall back to career points.
    pub fn metric(self, m: &PlayerMetrics) -> f64 {
        let v = match self {
            Strategy::CareerPoints => m.career_points,
            Strategy::Ma5 => m.form,
            Strategy::TournamentPoints => m.tournament_points,
            Strategy::MeanVarOptim => m.mean_var,
        };
        v.or(m.career_points).unwrap_or(0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpertTeam {
    pub players: Vec<String>,
    pub captain: String,
    pub vice_captain: String,
    pub strategy: Strategy,
}

impl ExpertTeam {
    pub fn contains(&self, player: &str) -> bool {
        self.players.iter().any(|p| p == player)
    }

    /// Points multiplier of `player` in this team.
    pub fn multiplier(&self, player: &str, m: Multipliers) -> f64 {
        if player == self.captain {
            m.captain
        } else if player == self.vice_captain {
            m.vice_captain
        } else {
            1.0
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Multipliers {
    pub captain: f64,
    pub vice_captain: f64,
}

impl Default for Multipliers {
    fn default() -> Self {
        Multipliers {
            captain: 2.0,
            vice_captain: 1.5,
        }
    }
}

/// Core plus the `11 − n_common` best remaining candidates by the strategy's
/// metric; captain and vice-captain are the top two by the same metric.
pub fn build_expert_team(
    strategy: Strategy,
    core: &[String],
    candidates: &[Candidate],
    n_common: usize,
) -> Result<ExpertTeam> {
    if core.len() != n_common || n_common > TEAM_SIZE {
        return Err(Error::config(format!(
            "core has {} players but n_common is {n_common}",
            core.len()
        )));
    }
    let lookup: HashMap<&str, &Candidate> = candidates.iter().map(|c| (c.player_id.as_str(), c)).collect();
    let score = |id: &str| -> Result<f64> {
        lookup
            .get(id)
            .map(|c| strategy.metric(&c.metrics))
            .ok_or_else(|| Error::data(format!("core player `{id}` is not a candidate")))
    };
    let mut rest: Vec<(f64, &str)> = candidates
        .iter()
        .filter(|c| !core.contains(&c.player_id))
        .map(|c| (strategy.metric(&c.metrics), c.player_id.as_str()))
        .collect();
    let free = TEAM_SIZE - n_common;
    if rest.len() < free {
        return Err(Error::Infeasible(format!(
            "{free} open slots but only {} candidates outside the core",
            rest.len()
        )));
    }
    rest.sort_by(|a, b| rank_order(*a, *b));

    let mut players: Vec<String> = core.to_vec();
    players.extend(rest[..free].iter().map(|(_, id)| id.to_string()));

    let mut ranked = players
        .iter()
        .map(|p| Ok((score(p)?, p.as_str())))
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| rank_order(*a, *b));
    let (captain, vice_captain) = (ranked[0].1.to_string(), ranked[1].1.to_string());
    Ok(ExpertTeam {
        players,
        captain,
        vice_captain,
        strategy,
    })
}

/// Per-member contributions with captain and vice-captain multipliers.
pub fn member_contributions(team: &ExpertTeam, points: &HashMap<String, f64>, m: Multipliers) -> Vec<f64> {
    team.players
        .iter()
        .map(|p| points.get(p).copied().unwrap_or(0.0) * team.multiplier(p, m))
        .collect()
}

/// Team fantasy total; players absent from the scorecard score 0.
pub fn team_total(team: &ExpertTeam, points: &HashMap<String, f64>, m: Multipliers) -> f64 {
    member_contributions(team, points, m).iter().sum()
}

/// Total after the impact player replaces the lowest member contribution
/// when the impact player scored more.
pub fn impact_augment(team_points: &[f64], impact_points: f64) -> f64 {
    let total: f64 = team_points.iter().sum();
    let lowest = team_points.iter().copied().fold(f64::INFINITY, f64::min);
    if lowest.is_finite() {
        total - lowest + lowest.max(impact_points)
    } else {
        total
    }
}
