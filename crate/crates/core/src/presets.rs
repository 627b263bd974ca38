//! Built-in configurations.

use serde::{Deserialize, Serialize};

use crate::agents::PopulationConfig;
use crate::contest::ContestConfig;
use crate::error::{Error, Result};
use crate::impact::{ImpactSpec, TEAM_SIZE};
use crate::score_model::PointSpec;

/// Default log-score correlation between expert teams.
pub const TEAM_RHO: f64 = 0.4;
/// Default log-score correlation between impact players.
pub const IMPACT_RHO: f64 = 0.3;
/// Default Dirichlet concentration of within-team contribution shares.
pub const MIN_SHARE_ALPHA: f64 = 10.0;
pub const WINPROB_SAMPLES: usize = 100_000;
pub const ITERATIONS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TeamPreset {
    EquiMean,
    UnequalMean,
    UnequalMeanUnequalStd,
}

impl TeamPreset {
    pub const ALL: [TeamPreset; 3] = [
        TeamPreset::EquiMean,
        TeamPreset::UnequalMean,
        TeamPreset::UnequalMeanUnequalStd,
    ];

    pub fn id(self) -> &'static str {
        match self {
            TeamPreset::EquiMean => "equi-mean",
            TeamPreset::UnequalMean => "unequal-mean",
            TeamPreset::UnequalMeanUnequalStd => "unequal-mean-unequal-std",
        }
    }

    /// Accepts the short ids and the long `Equi-mean_Equivariance` style names.
    pub fn parse(name: &str) -> Result<Self> {
        let key = name.to_ascii_lowercase().replace('_', "-");
        match key.as_str() {
            "equi-mean" | "equi-mean-equivariance" => Ok(TeamPreset::EquiMean),
            "unequal-mean" | "unequal-mean-equivariance" => Ok(TeamPreset::UnequalMean),
            "unequal-mean-unequal-std" => Ok(TeamPreset::UnequalMeanUnequalStd),
            _ => Err(Error::config(format!("unknown team preset `{name}`"))),
        }
    }

    pub fn point_spec(self, rho: f64) -> PointSpec {
        let (means, sds) = match self {
            TeamPreset::EquiMean => (vec![500.0; 4], vec![60.0; 4]),
            TeamPreset::UnequalMean => (vec![440.0, 473.0, 517.0, 550.0], vec![60.0; 4]),
            TeamPreset::UnequalMeanUnequalStd => {
                (vec![440.0, 473.0, 517.0, 550.0], vec![60.0, 30.0, 60.0, 30.0])
            }
        };
        PointSpec { means, sds, rho }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ImpactPreset {
    Iid,
    DifferentMean,
    DifferentMeanAndStd,
}

impl ImpactPreset {
    pub const ALL: [ImpactPreset; 3] = [
        ImpactPreset::Iid,
        ImpactPreset::DifferentMean,
        ImpactPreset::DifferentMeanAndStd,
    ];

    pub fn id(self) -> &'static str {
        match self {
            ImpactPreset::Iid => "IID",
            ImpactPreset::DifferentMean => "Different_mean",
            ImpactPreset::DifferentMeanAndStd => "Different_mean_and_std",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        let key = name.to_ascii_lowercase().replace('-', "_");
        match key.as_str() {
            "iid" => Ok(ImpactPreset::Iid),
            "different_mean" => Ok(ImpactPreset::DifferentMean),
            "different_mean_and_std" => Ok(ImpactPreset::DifferentMeanAndStd),
            _ => Err(Error::config(format!("unknown impact preset `{name}`"))),
        }
    }

    pub fn spec(self) -> ImpactSpec {
        let (means, sds) = match self {
            ImpactPreset::Iid => (vec![45.0; 4], vec![10.0; 4]),
            ImpactPreset::DifferentMean => (vec![35.0, 40.0, 45.0, 50.0], vec![10.0; 4]),
            ImpactPreset::DifferentMeanAndStd => {
                (vec![35.0, 40.0, 45.0, 50.0], vec![5.0, 10.0, 15.0, 20.0])
            }
        };
        ImpactSpec {
            means,
            sds,
            rho: IMPACT_RHO,
            dirichlet_alpha: vec![MIN_SHARE_ALPHA; TEAM_SIZE],
        }
    }
}

/// The shared baseline: 1000 users at Rs. 25 with a 20% cut, τ = 0.2,
/// β = 0.04, δ = 0.05.
pub fn baseline_population() -> PopulationConfig {
    PopulationConfig::default()
}

pub fn baseline_contest() -> ContestConfig {
    ContestConfig::default()
}
