//! Contest simulation on real (or synthetic) scorecards.

use std::collections::{HashMap, HashSet};

use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::Dataset;
use super::metrics::{compute_metrics, Appearance, CareerSummary, PlayerMetrics};
use super::scoring::{career_total_points, fantasy_points, unavailable_features, ScoringRules};
use super::selection::{
    build_expert_team, impact_augment, member_contributions, select_common_core, team_total, Candidate,
    CompositionConstraints, ExpertTeam, Multipliers, Role, Strategy,
};
use super::users::{deterministic_pick, impact_pick, UserStrategy};
use crate::error::{Error, Result};
use crate::linalg::{mean, sample_variance};
use crate::rng::{self, domain, SimRng};
use crate::table::{Cell, ResultTable};

const ITER_CHUNK: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmpiricalConfig {
    /// Number of expert teams, taken in [`Strategy::ALL`] order.
    pub n_experts: usize,
    /// Prescribed common players shared by every expert team.
    pub n_common: usize,
    pub impact: bool,
    pub n_iterations: usize,
    pub seed: u64,
    pub users_per_strategy: u32,
    pub random_users: u32,
    /// Chance that a rule-based user ignores the rule and picks at random.
    pub p_random: f64,
    pub form_window: usize,
    pub lambda: f64,
    pub entry_fee: f64,
    pub platform_cut: f64,
    /// Simulate the final `eval_matches` matches; earlier ones are history only.
    pub eval_matches: usize,
    /// Give each strategy its own contest with its own random users.
    pub separate_contests: bool,
    pub multipliers: Multipliers,
    pub rules: ScoringRules,
    pub constraints: CompositionConstraints,
    pub strategies: Vec<UserStrategy>,
    /// Keep per-iteration selection counts.
    pub record_trace: bool,
}

impl Default for EmpiricalConfig {
    fn default() -> Self {
        EmpiricalConfig {
            n_experts: 4,
            n_common: 7,
            impact: false,
            n_iterations: 10_000,
            seed: 0,
            users_per_strategy: 1000,
            random_users: 16_000,
            p_random: 0.05,
            form_window: 5,
            lambda: 0.5,
            entry_fee: 25.0,
            platform_cut: 20.0,
            eval_matches: 10,
            separate_contests: false,
            multipliers: Multipliers::default(),
            rules: ScoringRules::default(),
            constraints: CompositionConstraints::default(),
            strategies: UserStrategy::defaults(),
            record_trace: false,
        }
    }
}

impl EmpiricalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(2..=Strategy::ALL.len()).contains(&self.n_experts) {
            return Err(Error::config(format!("n_experts must lie in 2..=4, got {}", self.n_experts)));
        }
        if self.n_common > crate::impact::TEAM_SIZE {
            return Err(Error::config(format!("n_common must be at most 11, got {}", self.n_common)));
        }
        if self.n_iterations == 0 || self.eval_matches == 0 {
            return Err(Error::config("iterations and evaluated matches must be positive"));
        }
        if !(0.0..=1.0).contains(&self.p_random) {
            return Err(Error::config(format!("p_random must lie in [0, 1], got {}", self.p_random)));
        }
        if self.strategies.is_empty() || self.users_per_strategy == 0 || self.random_users == 0 {
            return Err(Error::config("need rule-based and random users"));
        }
        if self.strategies.iter().any(|s| s.w_form < 0.0 || s.w_career < 0.0) {
            return Err(Error::config("strategy weights must be nonnegative"));
        }
        if !(0.0..=100.0).contains(&self.platform_cut) || self.entry_fee < 0.0 {
            return Err(Error::config("invalid entry fee or platform cut"));
        }
        Ok(())
    }
}

/// Regression covariates of one match.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Covariates {
    /// Number of expert teams.
    pub e: f64,
    /// Players shared by every team.
    pub c: f64,
    /// Prescribed common players.
    pub c_p: f64,
    /// Variance of team totals across teams.
    pub v_mu: f64,
    /// Mean within-team variance of member points.
    pub sigma2: f64,
}

impl Covariates {
    pub fn average(items: &[Covariates]) -> Option<Covariates> {
        if items.is_empty() {
            return None;
        }
        let avg = |f: fn(&Covariates) -> f64| items.iter().map(f).sum::<f64>() / items.len() as f64;
        Some(Covariates {
            e: avg(|c| c.e),
            c: avg(|c| c.c),
            c_p: avg(|c| c.c_p),
            v_mu: avg(|c| c.v_mu),
            sigma2: avg(|c| c.sigma2),
        })
    }
}

/// Between- and within-team variability of one match's expert teams.
pub fn covariates(
    teams: &[ExpertTeam],
    points: &HashMap<String, f64>,
    n_common: usize,
    mult: Multipliers,
) -> Result<Covariates> {
    if teams.len() < 2 {
        return Err(Error::data("covariates need at least two teams"));
    }
    let mut common: HashSet<&str> = teams[0].players.iter().map(String::as_str).collect();
    for t in &teams[1..] {
        let these: HashSet<&str> = t.players.iter().map(String::as_str).collect();
        common.retain(|p| these.contains(p));
    }
    let totals: Vec<f64> = teams.iter().map(|t| team_total(t, points, mult)).collect();
    let within: Vec<f64> = teams
        .iter()
        .map(|t| {
            let raw: Vec<f64> = t.players.iter().map(|p| points.get(p).copied().unwrap_or(0.0)).collect();
            sample_variance(&raw).unwrap_or(0.0)
        })
        .collect();
    Ok(Covariates {
        e: teams.len() as f64,
        c: common.len() as f64,
        c_p: n_common as f64,
        v_mu: sample_variance(&totals).unwrap_or(0.0),
        sigma2: mean(&within),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainMetrics {
    /// `(match_id, strategy mean payout − random mean payout)`.
    pub matchwise: Vec<(String, f64)>,
    /// Sum of the matchwise gains.
    pub tournament: f64,
}

/// Per-match payout advantage of a strategy over random users.
pub fn gain_metrics(strategy: &[(String, f64)], random: &[(String, f64)]) -> Result<GainMetrics> {
    if strategy.len() != random.len() || strategy.iter().zip(random).any(|(a, b)| a.0 != b.0) {
        return Err(Error::data("strategy and random results cover different matches"));
    }
    let matchwise: Vec<(String, f64)> = strategy
        .iter()
        .zip(random)
        .map(|((id, s), (_, r))| (id.clone(), s - r))
        .collect();
    let tournament = matchwise.iter().map(|(_, g)| g).sum();
    Ok(GainMetrics { matchwise, tournament })
}

/// One selectable option: an expert team, optionally with an impact player.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContestCell {
    pub team: usize,
    pub impact_player: Option<String>,
}

/// Per-iteration selection counts, laid out `[iteration][group][cell]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchTrace {
    pub groups: Vec<String>,
    pub group_sizes: Vec<u32>,
    /// Contest each group plays in.
    pub group_contest: Vec<usize>,
    pub n_cells: usize,
    pub counts: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub match_id: String,
    pub core: Vec<String>,
    pub teams: Vec<ExpertTeam>,
    pub cells: Vec<ContestCell>,
    /// Realized fantasy total of each cell.
    pub cell_scores: Vec<f64>,
    pub winners: Vec<usize>,
    /// Deterministic cell choice of each user strategy.
    pub choices: Vec<usize>,
    pub covariates: Covariates,
    /// Mean payout per user of each strategy.
    pub strategy_payout: Vec<f64>,
    /// Mean payout per random user in each strategy's contest.
    pub random_payout: Vec<f64>,
    pub trace: Option<MatchTrace>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalRun {
    pub config: EmpiricalConfig,
    pub matches: Vec<MatchReport>,
    /// Gains of each user strategy, in `config.strategies` order.
    pub gains: Vec<GainMetrics>,
}

impl EmpiricalRun {
    /// One row per strategy and match.
    pub fn to_table(&self) -> ResultTable {
        let mut t = ResultTable::new(&[
            "strategy",
            "match_id",
            "impact",
            "E",
            "C",
            "Cp",
            "Vmu",
            "Sigma2",
            "strategy_payout",
            "random_payout",
            "gain",
            "tournament_gain",
            "n_iterations",
            "seed",
        ]);
        for (s, strat) in self.config.strategies.iter().enumerate() {
            for m in &self.matches {
                let cov = m.covariates;
                t.push(vec![
                    Cell::from(strat.name.as_str()),
                    Cell::from(m.match_id.as_str()),
                    Cell::Int(self.config.impact as i64),
                    Cell::Float(cov.e),
                    Cell::Float(cov.c),
                    Cell::Float(cov.c_p),
                    Cell::Float(cov.v_mu),
                    Cell::Float(cov.sigma2),
                    Cell::Float(m.strategy_payout[s]),
                    Cell::Float(m.random_payout[s]),
                    Cell::Float(m.strategy_payout[s] - m.random_payout[s]),
                    Cell::Float(self.gains[s].tournament),
                    Cell::Int(self.config.n_iterations as i64),
                    Cell::Uint(self.config.seed),
                ]);
            }
        }
        t
    }

    /// Mean matchwise gain over all strategies and matches.
    pub fn mean_gain(&self) -> f64 {
        let all: Vec<f64> = self.gains.iter().flat_map(|g| g.matchwise.iter().map(|(_, v)| *v)).collect();
        mean(&all)
    }
}

/// Points and appearance histories derived from a dataset.
pub struct PreparedData<'a> {
    data: &'a Dataset,
    order: Vec<String>,
    /// `(match position, appearance)` per player, in playing order.
    history: HashMap<String, Vec<(usize, Appearance)>>,
    match_points: Vec<HashMap<String, f64>>,
    careers: HashMap<String, (Role, CareerSummary)>,
}

impl<'a> PreparedData<'a> {
    pub fn new(data: &'a Dataset, rules: &ScoringRules) -> Result<Self> {
        let order = data.match_order();
        let position: HashMap<&str, usize> = order.iter().enumerate().map(|(i, m)| (m.as_str(), i)).collect();
        let mut match_points = vec![HashMap::new(); order.len()];
        let mut history: HashMap<String, Vec<(usize, Appearance)>> = HashMap::new();
        for row in &data.scorecards {
            let pos = position[row.match_id.as_str()];
            let pts = fantasy_points(row, rules);
            match_points[pos].insert(row.player_id.clone(), pts);
            if row.played {
                history.entry(row.player_id.clone()).or_default().push((
                    pos,
                    Appearance {
                        tournament: row.tournament.clone(),
                        points: pts,
                    },
                ));
            }
        }
        for h in history.values_mut() {
            h.sort_by_key(|(pos, _)| *pos);
        }
        let dropped = unavailable_features(&data.careers);
        let careers = data
            .careers
            .iter()
            .map(|c| {
                let summary = CareerSummary {
                    total_points: career_total_points(c, rules, &dropped),
                    matches: c.matches,
                };
                Ok((c.player_id.clone(), (Role::parse(&c.role)?, summary)))
            })
            .collect::<Result<_>>()?;
        Ok(PreparedData {
            data,
            order,
            history,
            match_points,
            careers,
        })
    }

    pub fn match_ids(&self) -> &[String] {
        &self.order
    }

    /// Metrics of `player` using only matches before position `pos`.
    pub fn metrics_before(&self, player: &str, pos: usize, window: usize, lambda: f64, tournament: &str) -> PlayerMetrics {
        let prior: Vec<Appearance> = self
            .history
            .get(player)
            .map(|h| h.iter().take_while(|(p, _)| *p < pos).map(|(_, a)| a.clone()).collect())
            .unwrap_or_default();
        compute_metrics(&prior, self.careers.get(player).map(|c| c.1), window, lambda, tournament)
    }

    pub fn points(&self, pos: usize) -> &HashMap<String, f64> {
        &self.match_points[pos]
    }
}

/// Spreads `n` users uniformly over `counts`.
fn spread_uniform(n: u64, counts: &mut [u32], rng: &mut SimRng) {
    let mut left = n;
    let cells = counts.len();
    for (c, slot) in counts.iter_mut().enumerate() {
        if left == 0 {
            break;
        }
        let k = if c + 1 == cells {
            left
        } else {
            Binomial::new(left, 1.0 / (cells - c) as f64)
                .expect("valid binomial")
                .sample(rng)
        };
        *slot += k as u32;
        left -= k;
    }
}

struct MatchSetup {
    report: MatchReport,
    groups: Vec<String>,
    group_sizes: Vec<u32>,
    group_contest: Vec<usize>,
    /// Deterministic cell of rule-based groups; `None` for random groups.
    group_choice: Vec<Option<usize>>,
    contest_pools: Vec<f64>,
}

fn setup_match(prep: &PreparedData, pos: usize, cfg: &EmpiricalConfig) -> Result<MatchSetup> {
    let match_id = prep.order[pos].clone();
    let rows: Vec<_> = prep.data.rows_for(&match_id).collect();
    let tournament = rows.first().map(|r| r.tournament.clone()).unwrap_or_default();
    let mut pool: Vec<Candidate> = Vec::new();
    let mut metrics = HashMap::new();
    for r in rows.iter().filter(|r| r.played) {
        let (role, _) = prep
            .careers
            .get(&r.player_id)
            .ok_or_else(|| Error::data(format!("player `{}` has no career record", r.player_id)))?;
        let m = prep.metrics_before(&r.player_id, pos, cfg.form_window, cfg.lambda, &tournament);
        metrics.insert(r.player_id.clone(), m.clone());
        pool.push(Candidate {
            player_id: r.player_id.clone(),
            role: *role,
            metrics: m,
        });
    }
    pool.sort_by(|a, b| a.player_id.cmp(&b.player_id));
    if pool.len() < crate::impact::TEAM_SIZE {
        return Err(Error::data(format!(
            "match `{match_id}` has only {} players who took the field",
            pool.len()
        )));
    }

    let core = select_common_core(&pool, cfg.n_common, &cfg.constraints)?;
    let teams = Strategy::ALL[..cfg.n_experts]
        .iter()
        .map(|&s| build_expert_team(s, &core, &pool, cfg.n_common))
        .collect::<Result<Vec<_>>>()?;

    let points = prep.points(pos);
    let mult = cfg.multipliers;
    let mut cells = Vec::new();
    let mut cell_scores = Vec::new();
    let choices: Vec<usize> = if cfg.impact {
        let mut offsets = Vec::new();
        let mut member_ratings: Vec<Vec<Vec<f64>>> = vec![Vec::new(); cfg.strategies.len()];
        let mut candidate_ratings: Vec<Vec<Vec<f64>>> = vec![Vec::new(); cfg.strategies.len()];
        for (t, team) in teams.iter().enumerate() {
            offsets.push(cells.len());
            let contributions = member_contributions(team, points, mult);
            let candidates: Vec<&Candidate> = pool.iter().filter(|c| !team.contains(&c.player_id)).collect();
            for cand in &candidates {
                let impact_pts = points.get(&cand.player_id).copied().unwrap_or(0.0);
                cells.push(ContestCell {
                    team: t,
                    impact_player: Some(cand.player_id.clone()),
                });
                cell_scores.push(impact_augment(&contributions, impact_pts));
            }
            for (s, strat) in cfg.strategies.iter().enumerate() {
                member_ratings[s].push(strat.rate_members(team, &metrics, mult));
                candidate_ratings[s].push(candidates.iter().map(|c| strat.rate(&c.metrics)).collect());
            }
        }
        (0..cfg.strategies.len())
            .map(|s| {
                let (t, c) = impact_pick(&member_ratings[s], &candidate_ratings[s]);
                offsets[t] + c
            })
            .collect()
    } else {
        for (t, team) in teams.iter().enumerate() {
            cells.push(ContestCell { team: t, impact_player: None });
            cell_scores.push(team_total(team, points, mult));
        }
        cfg.strategies
            .iter()
            .map(|s| deterministic_pick(&teams.iter().map(|t| s.rate_team(t, &metrics, mult)).collect::<Vec<_>>()))
            .collect()
    };
    let winners = crate::score_model::winners(&cell_scores);
    let cov = covariates(&teams, points, cfg.n_common, mult)?;

    let mut groups = Vec::new();
    let mut group_sizes = Vec::new();
    let mut group_contest = Vec::new();
    let mut group_choice = Vec::new();
    let net = cfg.entry_fee * (100.0 - cfg.platform_cut) / 100.0;
    let mut contest_pools = Vec::new();
    if cfg.separate_contests {
        for (s, strat) in cfg.strategies.iter().enumerate() {
            groups.extend([strat.name.clone(), format!("Random[{}]", strat.name)]);
            group_sizes.extend([cfg.users_per_strategy, cfg.random_users]);
            group_contest.extend([s, s]);
            group_choice.extend([Some(choices[s]), None]);
            contest_pools.push(net * (cfg.users_per_strategy + cfg.random_users) as f64);
        }
    } else {
        for (s, strat) in cfg.strategies.iter().enumerate() {
            groups.push(strat.name.clone());
            group_sizes.push(cfg.users_per_strategy);
            group_contest.push(0);
            group_choice.push(Some(choices[s]));
        }
        groups.push("Random".into());
        group_sizes.push(cfg.random_users);
        group_contest.push(0);
        group_choice.push(None);
        let users = cfg.users_per_strategy as f64 * cfg.strategies.len() as f64 + cfg.random_users as f64;
        contest_pools.push(net * users);
    }

    Ok(MatchSetup {
        report: MatchReport {
            match_id,
            core,
            teams,
            cells,
            cell_scores,
            winners,
            choices,
            covariates: cov,
            strategy_payout: Vec::new(),
            random_payout: Vec::new(),
            trace: None,
        },
        groups,
        group_sizes,
        group_contest,
        group_choice,
        contest_pools,
    })
}

/// Per-group payout per user in one iteration.
pub fn iteration_payouts(
    counts: &[u32],
    n_cells: usize,
    winners: &[usize],
    group_sizes: &[u32],
    group_contest: &[usize],
    contest_pools: &[f64],
) -> Vec<f64> {
    let on_winners: Vec<u64> = (0..group_sizes.len())
        .map(|g| winners.iter().map(|&c| counts[g * n_cells + c] as u64).sum())
        .collect();
    let mut contest_winners = vec![0u64; contest_pools.len()];
    for (g, &w) in on_winners.iter().enumerate() {
        contest_winners[group_contest[g]] += w;
    }
    (0..group_sizes.len())
        .map(|g| {
            let k = group_contest[g];
            if contest_winners[k] == 0 {
                return 0.0;
            }
            let payout = contest_pools[k] / contest_winners[k] as f64;
            on_winners[g] as f64 * payout / group_sizes[g] as f64
        })
        .collect()
}

fn simulate_match(setup: &MatchSetup, pos: usize, cfg: &EmpiricalConfig) -> (Vec<f64>, Option<Vec<u32>>) {
    let n_cells = setup.report.cells.len();
    let n_groups = setup.groups.len();
    let match_seed = rng::derive(cfg.seed, &[domain::EMPIRICAL, pos as u64]);
    let n_chunks = cfg.n_iterations.div_ceil(ITER_CHUNK);
    let partials: Vec<(Vec<f64>, Vec<u32>)> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut sums = vec![0.0; n_groups];
            let mut trace = Vec::new();
            let start = chunk * ITER_CHUNK;
            let mut counts = vec![0u32; n_groups * n_cells];
            for it in start..(start + ITER_CHUNK).min(cfg.n_iterations) {
                let mut rng = rng::stream(match_seed, domain::EMPIRICAL, it as u64);
                counts.iter_mut().for_each(|c| *c = 0);
                for g in 0..n_groups {
                    let size = setup.group_sizes[g] as u64;
                    let row = &mut counts[g * n_cells..(g + 1) * n_cells];
                    match setup.group_choice[g] {
                        Some(choice) => {
                            let deviators = if cfg.p_random > 0.0 {
                                Binomial::new(size, cfg.p_random).expect("valid binomial").sample(&mut rng)
                            } else {
                                0
                            };
                            row[choice] += (size - deviators) as u32;
                            spread_uniform(deviators, row, &mut rng);
                        }
                        None => spread_uniform(size, row, &mut rng),
                    }
                }
                let pay = iteration_payouts(
                    &counts,
                    n_cells,
                    &setup.report.winners,
                    &setup.group_sizes,
                    &setup.group_contest,
                    &setup.contest_pools,
                );
                sums.iter_mut().zip(&pay).for_each(|(s, p)| *s += p);
                if cfg.record_trace {
                    trace.extend_from_slice(&counts);
                }
            }
            (sums, trace)
        })
        .collect();
    let mut sums = vec![0.0; n_groups];
    let mut trace = cfg.record_trace.then(Vec::new);
    for (s, t) in partials {
        sums.iter_mut().zip(&s).for_each(|(a, b)| *a += b);
        if let Some(tr) = trace.as_mut() {
            tr.extend(t);
        }
    }
    let means = sums.iter().map(|s| s / cfg.n_iterations as f64).collect();
    (means, trace)
}

/// Builds expert teams for each evaluated match, simulates the users, and
/// reports per-match payouts and gains over random selection.
pub fn run_empirical(data: &Dataset, cfg: &EmpiricalConfig) -> Result<EmpiricalRun> {
    cfg.validate()?;
    let prep = PreparedData::new(data, &cfg.rules)?;
    let n_matches = prep.order.len();
    if n_matches == 0 {
        return Err(Error::data("dataset has no matches"));
    }
    let first = n_matches.saturating_sub(cfg.eval_matches);
    let mut matches = Vec::new();
    for pos in first..n_matches {
        let setup = setup_match(&prep, pos, cfg)?;
        let (group_means, trace) = simulate_match(&setup, pos, cfg);
        let mut report = setup.report.clone();
        let strategy_groups: Vec<usize> = (0..setup.groups.len()).filter(|&g| setup.group_choice[g].is_some()).collect();
        let random_groups: Vec<usize> = (0..setup.groups.len()).filter(|&g| setup.group_choice[g].is_none()).collect();
        report.strategy_payout = strategy_groups.iter().map(|&g| group_means[g]).collect();
        report.random_payout = if cfg.separate_contests {
            random_groups.iter().map(|&g| group_means[g]).collect()
        } else {
            vec![group_means[random_groups[0]]; cfg.strategies.len()]
        };
        report.trace = trace.map(|counts| MatchTrace {
            groups: setup.groups.clone(),
            group_sizes: setup.group_sizes.clone(),
            group_contest: setup.group_contest.clone(),
            n_cells: setup.report.cells.len(),
            counts,
        });
        matches.push(report);
    }
    let gains = (0..cfg.strategies.len())
        .map(|s| {
            let strat: Vec<(String, f64)> = matches.iter().map(|m| (m.match_id.clone(), m.strategy_payout[s])).collect();
            let random: Vec<(String, f64)> = matches.iter().map(|m| (m.match_id.clone(), m.random_payout[s])).collect();
            gain_metrics(&strat, &random)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EmpiricalRun {
        config: cfg.clone(),
        matches,
        gains,
    })
}
