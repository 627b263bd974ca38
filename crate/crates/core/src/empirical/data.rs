//! Scorecard and career-statistics files.
//!
//! `scorecards.csv` holds one row per player per match:
//!
//! ```text
//! match_id,match_date,tournament,player_id,team_side,played,runs,balls,fours,sixes,
//! dismissed,overs,maidens,runs_conceded,wickets,catches,stumpings,runouts
//! ```
//!
//! `careers.csv` holds one row per player, keyed by `player_id`:
//!
//! ```text
//! player_id,name,role,team,matches,runs,fours,sixes,fifties,hundreds,wickets,
//! three_wicket_hauls,five_wicket_hauls,maidens,catches,stumpings,runouts
//! ```
//!
//! Empty aggregate cells in `careers.csv` mark a sub-metric as unavailable.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::table::write_atomic;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScorecardRow {
    pub match_id: String,
    /// ISO date; matches are ordered by `(match_date, match_id)`.
    pub match_date: String,
    pub tournament: String,
    pub player_id: String,
    pub team_side: String,
    #[serde(deserialize_with = "flag", serialize_with = "write_flag")]
    pub played: bool,
    pub runs: u32,
    pub balls: u32,
    pub fours: u32,
    pub sixes: u32,
    #[serde(deserialize_with = "flag", serialize_with = "write_flag")]
    pub dismissed: bool,
    pub overs: f64,
    pub maidens: u32,
    pub runs_conceded: u32,
    pub wickets: u32,
    pub catches: u32,
    pub stumpings: u32,
    pub runouts: u32,
}

impl ScorecardRow {
    /// A squad member who did not take the field.
    pub fn benched(match_id: &str, match_date: &str, tournament: &str, player_id: &str, side: &str) -> Self {
        ScorecardRow {
            match_id: match_id.into(),
            match_date: match_date.into(),
            tournament: tournament.into(),
            player_id: player_id.into(),
            team_side: side.into(),
            played: false,
            runs: 0,
            balls: 0,
            fours: 0,
            sixes: 0,
            dismissed: false,
            overs: 0.0,
            maidens: 0,
            runs_conceded: 0,
            wickets: 0,
            catches: 0,
            stumpings: 0,
            runouts: 0,
        }
    }
}

fn flag<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<bool, D::Error> {
    let s = String::deserialize(d)?;
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "y" => Ok(true),
        "0" | "false" | "no" | "n" | "" => Ok(false),
        other => Err(serde::de::Error::custom(format!("not a flag: `{other}`"))),
    }
}

fn write_flag<S: Serializer>(v: &bool, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_u8(*v as u8)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CareerRecord {
    pub player_id: String,
    pub name: String,
    pub role: String,
    pub team: String,
    pub matches: u32,
    pub runs: Option<f64>,
    pub fours: Option<f64>,
    pub sixes: Option<f64>,
    pub fifties: Option<f64>,
    pub hundreds: Option<f64>,
    pub wickets: Option<f64>,
    pub three_wicket_hauls: Option<f64>,
    pub five_wicket_hauls: Option<f64>,
    pub maidens: Option<f64>,
    pub catches: Option<f64>,
    pub stumpings: Option<f64>,
    pub runouts: Option<f64>,
}

/// Scorecards plus career records.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub scorecards: Vec<ScorecardRow>,
    pub careers: Vec<CareerRecord>,
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    rdr.deserialize().map(|r| r.map_err(|e| Error::csv(path, e))).collect()
}

fn csv_bytes<T: Serialize>(path: &Path, rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::csv(path, e))?;
    }
    w.into_inner().map_err(|e| Error::data(e.to_string()))
}

impl Dataset {
    pub fn load(scorecards: &Path, careers: &Path) -> Result<Self> {
        let ds = Dataset {
            scorecards: read_csv(scorecards)?,
            careers: read_csv(careers)?,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn save(&self, scorecards: &Path, careers: &Path) -> Result<()> {
        let (s, c) = self.to_csv_bytes()?;
        write_atomic(scorecards, &s)?;
        write_atomic(careers, &c)
    }

    /// Scorecard and career CSV contents, as written by [`Dataset::save`].
    pub fn to_csv_bytes(&self) -> Result<(Vec<u8>, Vec<u8>)> {
        Ok((
            csv_bytes(Path::new("scorecards"), &self.scorecards)?,
            csv_bytes(Path::new("careers"), &self.careers)?,
        ))
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for c in &self.careers {
            if !seen.insert(c.player_id.as_str()) {
                return Err(Error::data(format!("duplicate career record for `{}`", c.player_id)));
            }
            if c.matches == 0 {
                return Err(Error::data(format!("career of `{}` has zero matches", c.player_id)));
            }
            let aggregates = [
                c.runs, c.fours, c.sixes, c.fifties, c.hundreds, c.wickets,
                c.three_wicket_hauls, c.five_wicket_hauls, c.maidens, c.catches,
                c.stumpings, c.runouts,
            ];
            if aggregates.iter().flatten().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return Err(Error::data(format!("negative career aggregate for `{}`", c.player_id)));
            }
        }
        let mut keys = HashSet::new();
        for r in &self.scorecards {
            if !(r.overs >= 0.0 && r.overs.is_finite()) {
                return Err(Error::data(format!(
                    "negative overs for `{}` in match `{}`",
                    r.player_id, r.match_id
                )));
            }
            if !keys.insert((r.match_id.as_str(), r.player_id.as_str())) {
                return Err(Error::data(format!(
                    "player `{}` appears twice in match `{}`",
                    r.player_id, r.match_id
                )));
            }
        }
        Ok(())
    }

    /// Match ids in playing order.
    pub fn match_order(&self) -> Vec<String> {
        let mut first: BTreeMap<&str, &str> = BTreeMap::new();
        for r in &self.scorecards {
            first.entry(&r.match_id).or_insert(&r.match_date);
        }
        let mut order: Vec<(&str, &str)> = first.into_iter().map(|(id, date)| (date, id)).collect();
        order.sort();
        order.into_iter().map(|(_, id)| id.to_string()).collect()
    }

    pub fn rows_for<'a>(&'a self, match_id: &'a str) -> impl Iterator<Item = &'a ScorecardRow> + 'a {
        self.scorecards.iter().filter(move |r| r.match_id == match_id)
    }
}
