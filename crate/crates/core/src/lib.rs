//! Monte Carlo study of skill versus chance in fantasy cricket contests.
//!
//! Team scores are drawn from a correlated multivariate lognormal, users pick
//! teams from noisy beliefs about win probabilities, and a winner-take-all
//! prize pool is split among everyone who picked a winning team.

pub mod agents;
pub mod contest;
pub mod empirical;
pub mod error;
pub mod experiment;
pub mod impact;
pub mod linalg;
pub mod presets;
pub mod regression;
pub mod render;
pub mod rng;
pub mod score_model;
pub mod special;
pub mod table;
mod util;

pub use agents::{allocate_selections, calibrate_alpha, AgentPopulation, PopulationConfig, Selections};
pub use contest::{run_iterations, selection_ratio, settle, Contest, ContestConfig, IterationOutcome, MetricsTable};
pub use error::{Error, ErrorKind, Result};
pub use experiment::{run_sweep, Axis, AxisValue, SweepResult, SweepSpec};
pub use impact::{run_impact_contest, ImpactModel, ImpactRun, ImpactSpec};
pub use linalg::Matrix;
pub use regression::{cross_tab, f_statistic, ols_fit, quadratic_design, Design, RegressionFit};
pub use score_model::{
    estimate_win_probs, moment_match, sample_scores, winners, PointSpec, ScoreModel, ScoreSource, WinProbEstimate,
};
pub use table::{emit_csv, Cell, ResultTable};
