//! Fantasy-point rule table.

use serde::{Deserialize, Serialize};

use super::data::{CareerRecord, ScorecardRow};

/// Number of scored features.
pub const N_FEATURES: usize = 13;

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "runs",
    "fours",
    "sixes",
    "fifties",
    "hundreds",
    "wickets",
    "three_wicket_hauls",
    "five_wicket_hauls",
    "maidens",
    "catches",
    "stumpings",
    "runouts",
    "played",
];

/// Points per unit of each feature. Milestones are exclusive: a hundred
/// scores the hundred bonus only, a five-wicket haul the five-wicket bonus only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoringRules {
    pub run: f64,
    pub four: f64,
    pub six: f64,
    pub fifty: f64,
    pub hundred: f64,
    pub wicket: f64,
    pub three_wicket_haul: f64,
    pub five_wicket_haul: f64,
    pub maiden: f64,
    pub catch: f64,
    pub stumping: f64,
    pub runout: f64,
    pub played: f64,
}

impl Default for ScoringRules {
    fn default() -> Self {
        ScoringRules {
            run: 1.0,
            four: 1.0,
            six: 2.0,
            fifty: 8.0,
            hundred: 16.0,
            wicket: 25.0,
            three_wicket_haul: 4.0,
            five_wicket_haul: 8.0,
            maiden: 8.0,
            catch: 8.0,
            stumping: 12.0,
            runout: 6.0,
            played: 4.0,
        }
    }
}

impl ScoringRules {
    pub fn weights(&self) -> [f64; N_FEATURES] {
        [
            self.run,
            self.four,
            self.six,
            self.fifty,
            self.hundred,
            self.wicket,
            self.three_wicket_haul,
            self.five_wicket_haul,
            self.maiden,
            self.catch,
            self.stumping,
            self.runout,
            self.played,
        ]
    }
}

/// Feature counts of one player-match or of a career aggregate.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StatLine(pub [f64; N_FEATURES]);

impl StatLine {
    pub fn from_row(row: &ScorecardRow) -> Self {
        if !row.played {
            return StatLine::default();
        }
        let runs = row.runs;
        let wickets = row.wickets;
        StatLine([
            runs as f64,
            row.fours as f64,
            row.sixes as f64,
            (50..100).contains(&runs) as u8 as f64,
            (runs >= 100) as u8 as f64,
            wickets as f64,
            (3..5).contains(&wickets) as u8 as f64,
            (wickets >= 5) as u8 as f64,
            row.maidens as f64,
            row.catches as f64,
            row.stumpings as f64,
            row.runouts as f64,
            1.0,
        ])
    }

    /// Career totals; unavailable sub-metrics come back as `None`.
    pub fn from_career(c: &CareerRecord) -> [Option<f64>; N_FEATURES] {
        [
            c.runs,
            c.fours,
            c.sixes,
            c.fifties,
            c.hundreds,
            c.wickets,
            c.three_wicket_hauls,
            c.five_wicket_hauls,
            c.maidens,
            c.catches,
            c.stumpings,
            c.runouts,
            Some(c.matches as f64),
        ]
    }

    pub fn points(&self, rules: &ScoringRules) -> f64 {
        self.0.iter().zip(rules.weights()).map(|(x, w)| x * w).sum()
    }
}

/// Points of one player-match under `rules`.
pub fn fantasy_points(row: &ScorecardRow, rules: &ScoringRules) -> f64 {
    StatLine::from_row(row).points(rules)
}

/// Features missing from any career record; they are ignored for every
/// player so career points stay comparable.
pub fn unavailable_features(careers: &[CareerRecord]) -> [bool; N_FEATURES] {
    let mut dropped = [false; N_FEATURES];
    for c in careers {
        for (d, v) in dropped.iter_mut().zip(StatLine::from_career(c)) {
            *d |= v.is_none();
        }
    }
    dropped
}

/// Total career points over the available features.
pub fn career_total_points(c: &CareerRecord, rules: &ScoringRules, dropped: &[bool; N_FEATURES]) -> f64 {
    StatLine::from_career(c)
        .iter()
        .zip(rules.weights())
        .zip(dropped)
        .filter(|(_, &d)| !d)
        .map(|((v, w), _)| v.unwrap_or(0.0) * w)
        .sum()
}
