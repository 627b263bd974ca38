//! Synthetic scorecards for tests, benchmarks and demos.
//!
//! Each franchise has a fixed 15-player squad. Players carry a latent skill
//! that drives their per-match output, so the metrics used by the expert
//! strategies carry genuine (but noisy) signal.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::data::{CareerRecord, Dataset, ScorecardRow};
use crate::error::{Error, Result};
use crate::rng::{self, domain, SimRng};

pub const SQUAD_SIZE: usize = 15;
const PRE_SEASON_MATCHES: u32 = 40;
/// Squad composition by role code.
const SQUAD_ROLES: [&str; SQUAD_SIZE] = [
    "WK", "BAT", "BAT", "BAT", "BAT", "BAT", "AR", "AR", "AR", "AR", "BOWL", "BOWL", "BOWL", "BOWL", "BOWL",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FixtureConfig {
    pub n_matches: usize,
    pub n_franchises: usize,
    pub seed: u64,
    pub tournament: String,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        FixtureConfig {
            n_matches: 30,
            n_franchises: 8,
            seed: 7,
            tournament: "SYN".into(),
        }
    }
}

struct Player {
    id: String,
    role: &'static str,
    bat: f64,
    bowl: f64,
}

fn squad(franchise: usize, rng: &mut SimRng) -> Vec<Player> {
    SQUAD_ROLES
        .iter()
        .enumerate()
        .map(|(i, &role)| {
            let jitter: f64 = rng.random_range(0.6..1.4);
            let (bat, bowl) = match role {
                "WK" => (22.0, 0.0),
                "BAT" => (26.0, 0.0),
                "AR" => (16.0, 0.7),
                _ => (6.0, 1.1),
            };
            Player {
                id: format!("F{franchise:02}P{i:02}"),
                role,
                bat: bat * jitter,
                bowl: bowl * jitter,
            }
        })
        .collect()
}

/// Chooses the 11 who take the field; the keeper always plays.
fn playing_eleven(rng: &mut SimRng) -> Vec<bool> {
    let mut played = vec![true; SQUAD_SIZE];
    let mut benched = 0;
    while benched < SQUAD_SIZE - 11 {
        let i = rng.random_range(1..SQUAD_SIZE);
        if played[i] {
            played[i] = false;
            benched += 1;
        }
    }
    played
}

fn perform(p: &Player, row: &mut ScorecardRow, rng: &mut SimRng) {
    let runs = Poisson::new(p.bat.max(0.5)).expect("positive rate").sample(rng) as u32;
    let runs = if rng.random_bool(0.15) { runs * 2 } else { runs };
    row.runs = runs;
    row.balls = (runs as f64 * rng.random_range(0.6..1.0)).ceil() as u32;
    row.fours = Binomial::new((runs / 4) as u64, 0.5).expect("valid").sample(rng) as u32;
    row.sixes = Binomial::new((runs.saturating_sub(4 * row.fours) / 6) as u64, 0.4)
        .expect("valid")
        .sample(rng) as u32;
    row.dismissed = rng.random_bool(0.7);
    if p.bowl > 0.0 {
        row.overs = 4.0;
        row.wickets = Poisson::new(p.bowl).expect("positive rate").sample(rng).min(6.0) as u32;
        row.runs_conceded = rng.random_range(18..45);
        row.maidens = rng.random_bool(0.08) as u32;
    }
    row.catches = rng.random_bool(0.25) as u32;
    if p.role == "WK" {
        row.stumpings = rng.random_bool(0.15) as u32;
    }
    row.runouts = rng.random_bool(0.05) as u32;
}

fn add(slot: &mut Option<f64>, v: f64) {
    *slot = Some(slot.unwrap_or(0.0) + v);
}

fn accumulate(c: &mut CareerRecord, r: &ScorecardRow) {
    add(&mut c.runs, r.runs as f64);
    add(&mut c.fours, r.fours as f64);
    add(&mut c.sixes, r.sixes as f64);
    add(&mut c.fifties, (r.runs >= 50 && r.runs < 100) as u8 as f64);
    add(&mut c.hundreds, (r.runs >= 100) as u8 as f64);
    add(&mut c.wickets, r.wickets as f64);
    add(&mut c.three_wicket_hauls, (r.wickets >= 3 && r.wickets < 5) as u8 as f64);
    add(&mut c.five_wicket_hauls, (r.wickets >= 5) as u8 as f64);
    add(&mut c.maidens, r.maidens as f64);
    add(&mut c.catches, r.catches as f64);
    add(&mut c.stumpings, r.stumpings as f64);
    add(&mut c.runouts, r.runouts as f64);
}

/// Generates a season of round-robin matches with pre-season career records.
pub fn generate(cfg: &FixtureConfig) -> Result<Dataset> {
    if cfg.n_franchises < 2 || cfg.n_matches == 0 {
        return Err(Error::config("fixtures need at least two franchises and one match"));
    }
    let mut rng = rng::stream(cfg.seed, domain::FIXTURE, 0);
    let squads: Vec<Vec<Player>> = (0..cfg.n_franchises).map(|f| squad(f, &mut rng)).collect();

    let mut careers: Vec<CareerRecord> = Vec::new();
    for (f, sq) in squads.iter().enumerate() {
        for p in sq {
            let mut c = CareerRecord {
                player_id: p.id.clone(),
                name: p.id.clone(),
                role: p.role.into(),
                team: format!("F{f:02}"),
                matches: PRE_SEASON_MATCHES,
                runs: None,
                fours: None,
                sixes: None,
                fifties: None,
                hundreds: None,
                wickets: None,
                three_wicket_hauls: None,
                five_wicket_hauls: None,
                maidens: None,
                catches: None,
                stumpings: None,
                runouts: None,
            };
            for _ in 0..PRE_SEASON_MATCHES {
                let mut row = ScorecardRow::benched("", "", "", &p.id, "");
                perform(p, &mut row, &mut rng);
                accumulate(&mut c, &row);
            }
            careers.push(c);
        }
    }

    let mut scorecards = Vec::new();
    let pairs: Vec<(usize, usize)> = (0..cfg.n_franchises)
        .flat_map(|a| ((a + 1)..cfg.n_franchises).map(move |b| (a, b)))
        .collect();
    for m in 0..cfg.n_matches {
        let (home, away) = pairs[m % pairs.len()];
        let match_id = format!("M{:04}", m + 1);
        let date = format!("2024-{:02}-{:02}", 1 + m / 28 % 12, 1 + m % 28);
        for (side, f) in [("home", home), ("away", away)] {
            let played = playing_eleven(&mut rng);
            for (p, &on) in squads[f].iter().zip(&played) {
                let mut row = ScorecardRow::benched(&match_id, &date, &cfg.tournament, &p.id, side);
                if on {
                    row.played = true;
                    perform(p, &mut row, &mut rng);
                }
                scorecards.push(row);
            }
        }
    }
    let data = Dataset { scorecards, careers };
    data.validate()?;
    Ok(data)
}
