//! Historical-data pipeline: scorecards, player metrics, expert teams and
//! rule-based users competing against random users.

pub mod data;
pub mod fixtures;
pub mod metrics;
pub mod scoring;
pub mod selection;
pub mod simulate;
pub mod users;

pub use data::{CareerRecord, Dataset, ScorecardRow};
pub use metrics::{compute_metrics, Appearance, CareerSummary, PlayerMetrics};
pub use scoring::{fantasy_points, ScoringRules};
pub use selection::{
    build_expert_team, impact_augment, select_common_core, Candidate, CompositionConstraints, ExpertTeam, Multipliers,
    Role, Strategy,
};
pub use simulate::{covariates, gain_metrics, run_empirical, Covariates, EmpiricalConfig, EmpiricalRun, GainMetrics, MatchReport};
pub use users::UserStrategy;
