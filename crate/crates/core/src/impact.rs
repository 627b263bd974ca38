//! Impact-Player extension.
//!
//! Each expert team `i` is paired with one of `m` impact players. The team's
//! weakest member contributes a share `S_i ~ DirichletMin(α)` of its score;
//! the impact player's score replaces that contribution when larger:
//! `B_ij = P_i·(1 − S_i) + max(S_i·P_i, I_j)`.

use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::agents::PopulationConfig;
use crate::contest::{Contest, ContestConfig, MetricsTable};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::{domain, SimRng};
use crate::score_model::{estimate_choice_probs, estimate_win_probs, moment_match, PointSpec, ScoreModel, ScoreSource};
use crate::table::{Cell, ResultTable};

/// Members of a fantasy team.
pub const TEAM_SIZE: usize = 11;

/// Point-space impact-player configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImpactSpec {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    pub rho: f64,
    /// Concentration of the within-team contribution shares (length 11).
    pub dirichlet_alpha: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImpactModel {
    spec: ImpactSpec,
    scores: ScoreModel,
}

impl ImpactModel {
    pub fn new(spec: ImpactSpec) -> Result<Self> {
        if spec.dirichlet_alpha.len() != TEAM_SIZE {
            return Err(Error::config(format!(
                "dirichlet_alpha needs {TEAM_SIZE} entries, got {}",
                spec.dirichlet_alpha.len()
            )));
        }
        if spec.dirichlet_alpha.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return Err(Error::config("dirichlet_alpha entries must be positive"));
        }
        let scores = moment_match(&PointSpec::new(spec.means.clone(), spec.sds.clone(), spec.rho)?)?;
        Ok(ImpactModel { spec, scores })
    }

    pub fn spec(&self) -> &ImpactSpec {
        &self.spec
    }

    pub fn n_impacts(&self) -> usize {
        self.scores.n_teams()
    }

    pub fn scores(&self) -> &ScoreModel {
        &self.scores
    }
}

/// Minimum coordinate of one `Dirichlet(alpha)` draw.
pub fn sample_min_share(alpha: &[f64], rng: &mut SimRng) -> Result<f64> {
    if alpha.len() != TEAM_SIZE || alpha.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
        return Err(Error::config("min-share concentration must be 11 positive entries"));
    }
    Ok(min_share_unchecked(alpha, rng))
}

fn min_share_unchecked(alpha: &[f64], rng: &mut SimRng) -> f64 {
    loop {
        let mut total = 0.0;
        let mut min = f64::INFINITY;
        for &a in alpha {
            let g = Gamma::new(a, 1.0).expect("positive shape").sample(rng);
            total += g;
            min = min.min(g);
        }
        if total > 0.0 {
            return min / total;
        }
    }
}

/// Team score after the impact player replaces the weakest contribution when
/// that raises the total.
pub fn boosted_score(team: f64, min_share: f64, impact: f64) -> f64 {
    team * (1.0 - min_share) + (min_share * team).max(impact)
}

/// All `n × m` team/impact cells of one contest. Cell `(i, j)` has index
/// `i·m + j`.
pub struct TeamImpactSource<'a> {
    pub teams: &'a ScoreModel,
    pub impact: &'a ImpactModel,
}

impl TeamImpactSource<'_> {
    pub fn shape(&self) -> (usize, usize) {
        (self.teams.n_teams(), self.impact.n_impacts())
    }
}

impl ScoreSource for TeamImpactSource<'_> {
    fn n_choices(&self) -> usize {
        self.teams.n_teams() * self.impact.n_impacts()
    }

    fn draw(&self, rng: &mut SimRng, out: &mut [f64]) {
        let (n, m) = self.shape();
        let mut team = vec![0.0; n];
        let mut imp = vec![0.0; m];
        self.teams.draw(rng, &mut team);
        self.impact.scores.draw(rng, &mut imp);
        for (i, &p) in team.iter().enumerate() {
            let s = min_share_unchecked(&self.impact.spec.dirichlet_alpha, rng);
            for (j, &v) in imp.iter().enumerate() {
                out[i * m + j] = boosted_score(p, s, v);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComboWinProbs {
    /// Teams by impact players.
    pub probs: Matrix,
    pub n_samples: usize,
}

impl ComboWinProbs {
    /// Win probability of each team with any impact player.
    pub fn team_marginals(&self) -> Vec<f64> {
        (0..self.probs.rows()).map(|i| self.probs.row(i).iter().sum()).collect()
    }

    pub fn impact_marginals(&self) -> Vec<f64> {
        (0..self.probs.cols()).map(|j| self.probs.column(j).iter().sum()).collect()
    }
}

/// Monte Carlo probability that each team/impact cell has the top boosted
/// score. Impact scores are drawn independently of team scores.
pub fn estimate_combo_win_probs(
    team_model: &ScoreModel,
    impact: &ImpactModel,
    k: usize,
    seed: u64,
) -> Result<ComboWinProbs> {
    if k == 0 {
        return Err(Error::config("win-probability sample count must be at least 1"));
    }
    let source = TeamImpactSource { teams: team_model, impact };
    let (n, m) = source.shape();
    let probs = estimate_choice_probs(&source, k, seed, domain::IMPACT);
    Ok(ComboWinProbs {
        probs: Matrix::from_vec(n, m, probs),
        n_samples: k,
    })
}

/// `combo[i][j] − baseline[i]`.
pub fn mean_deviation(combo: &Matrix, baseline: &[f64]) -> Result<Matrix> {
    if combo.rows() != baseline.len() {
        return Err(Error::data(format!(
            "{} team rows but {} baseline values",
            combo.rows(),
            baseline.len()
        )));
    }
    let mut out = combo.clone();
    for (i, b) in baseline.iter().enumerate() {
        out.row_mut(i).iter_mut().for_each(|v| *v -= b);
    }
    Ok(out)
}

/// One impact-player contest next to its no-impact baseline.
#[derive(Clone, Debug)]
pub struct ImpactRun {
    pub config_id: String,
    pub combo_probs: ComboWinProbs,
    /// Cell metrics; choice `i·m + j` is team `i` with impact player `j`.
    pub combo: MetricsTable,
    /// Plain contest on the same teams and seed.
    pub baseline: MetricsTable,
    /// Cell mean winnings minus the team's baseline mean winnings.
    pub deviation: Matrix,
}

impl ImpactRun {
    pub fn combo_mean_winnings(&self) -> Matrix {
        let (n, m) = (self.deviation.rows(), self.deviation.cols());
        Matrix::from_vec(n, m, self.combo.mean_winnings.clone())
    }

    /// CSV rows: one per cell, with 1-based `team` and `impact_index`.
    pub fn to_table(&self) -> ResultTable {
        let mut t = ResultTable::new(&[
            "config_id",
            "team",
            "impact_index",
            "win_prob",
            "selection_ratio",
            "mean_winnings",
            "deviation",
            "n_iterations",
            "seed",
        ]);
        let m = self.deviation.cols();
        for c in 0..self.combo.n_choices() {
            let (i, j) = (c / m, c % m);
            t.push(vec![
                Cell::from(self.config_id.as_str()),
                Cell::Int(i as i64 + 1),
                Cell::Int(j as i64 + 1),
                Cell::Float(self.combo.win_probs[c]),
                Cell::from(self.combo.selection_ratio[c]),
                Cell::Float(self.combo.mean_winnings[c]),
                Cell::Float(self.deviation[(i, j)]),
                Cell::Int(self.combo.n_iterations as i64),
                Cell::Uint(self.combo.seed),
            ]);
        }
        t
    }
}

/// Plays the impact contest (users pick a team/impact cell) and the plain
/// contest on the same seed, and returns both with the per-cell deviations.
///
/// Analytical users hold beliefs over all `n·m` cells, so the concentration
/// is calibrated for `n·m` choices.
#[allow(clippy::too_many_arguments)]
pub fn run_impact_contest(
    config_id: &str,
    teams: &ScoreModel,
    impact: &ImpactModel,
    population: &PopulationConfig,
    contest: &ContestConfig,
    n_iter: usize,
    winprob_samples: usize,
    seed: u64,
) -> Result<ImpactRun> {
    let combo_probs = estimate_combo_win_probs(teams, impact, winprob_samples, seed)?;
    let source = TeamImpactSource { teams, impact };
    let cell_pop = population.resolve(source.n_choices())?;
    let pi = combo_probs.probs.as_slice().to_vec();
    let combo = Contest::new(config_id, &source, &pi, &cell_pop, contest)?.run(n_iter, seed)?;

    let team_pi = estimate_win_probs(teams, winprob_samples, seed)?;
    let team_pop = population.resolve(teams.n_teams())?;
    let baseline = Contest::new(config_id, teams, &team_pi.probs, &team_pop, contest)?.run(n_iter, seed)?;

    let (n, m) = source.shape();
    let deviation = mean_deviation(&Matrix::from_vec(n, m, combo.mean_winnings.clone()), &baseline.mean_winnings)?;
    Ok(ImpactRun {
        config_id: config_id.to_string(),
        combo_probs,
        combo,
        baseline,
        deviation,
    })
}
