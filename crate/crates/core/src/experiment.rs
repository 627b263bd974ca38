//! Parameter sweeps over the simulated and empirical contests.
//!
//! Each axis value is evaluated independently from the sweep document and
//! the value alone, with the same seed for every value, so a row can be
//! reproduced in isolation and neighbouring rows share random numbers.

use serde::{Deserialize, Serialize};

use crate::agents::PopulationConfig;
use crate::contest::{run_iterations, ContestConfig, MetricsTable};
use crate::empirical::{run_empirical, Covariates, Dataset, EmpiricalConfig, EmpiricalRun};
use crate::error::{Error, Result};
use crate::impact::{run_impact_contest, ImpactModel, ImpactRun};
use crate::linalg::sample_variance;
use crate::presets::{self, ImpactPreset, TeamPreset};
use crate::score_model::{estimate_win_probs, moment_match};
use crate::table::{Cell, ResultTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Tau,
    Beta,
    Rho,
    NExperts,
    ImpactConfig,
    NCommon,
    KExperts,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Tau => "tau",
            Axis::Beta => "beta",
            Axis::Rho => "rho",
            Axis::NExperts => "n_experts",
            Axis::ImpactConfig => "impact_config",
            Axis::NCommon => "n_common",
            Axis::KExperts => "k_experts",
        }
    }

    /// Axes that run on historical scorecards.
    pub fn is_empirical(self) -> bool {
        matches!(self, Axis::NCommon | Axis::KExperts)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisValue {
    Number(f64),
    Name(String),
}

impl AxisValue {
    fn number(&self, axis: Axis) -> Result<f64> {
        match self {
            AxisValue::Number(v) => Ok(*v),
            AxisValue::Name(s) => Err(Error::config(format!("axis `{}` needs numbers, got `{s}`", axis.name()))),
        }
    }

    fn count(&self, axis: Axis) -> Result<usize> {
        let v = self.number(axis)?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(Error::config(format!("axis `{}` needs whole numbers, got {v}", axis.name())));
        }
        Ok(v as usize)
    }

    fn cell(&self) -> Cell {
        match self {
            AxisValue::Number(v) => Cell::Float(*v),
            AxisValue::Name(s) => Cell::from(s.as_str()),
        }
    }
}

fn default_iterations() -> usize {
    presets::ITERATIONS
}

fn default_winprob_samples() -> usize {
    presets::WINPROB_SAMPLES
}

fn default_rho() -> f64 {
    presets::TEAM_RHO
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Team preset id; ignored by the empirical axes.
    #[serde(default = "default_base")]
    pub base: String,
    pub axis: Axis,
    pub values: Vec<AxisValue>,
    #[serde(default = "default_iterations")]
    pub n_iterations: usize,
    #[serde(default = "default_winprob_samples")]
    pub winprob_samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default)]
    pub population: PopulationConfig,
    #[serde(default)]
    pub contest: ContestConfig,
    /// Impact preset that turns every point into an impact contest.
    #[serde(default)]
    pub impact: Option<String>,
    #[serde(default)]
    pub empirical: EmpiricalConfig,
}

fn default_base() -> String {
    TeamPreset::UnequalMean.id().to_string()
}

impl SweepSpec {
    pub fn new(base: &str, axis: Axis, values: Vec<AxisValue>) -> Self {
        SweepSpec {
            base: base.to_string(),
            axis,
            values,
            n_iterations: presets::ITERATIONS,
            winprob_samples: presets::WINPROB_SAMPLES,
            seed: 0,
            rho: presets::TEAM_RHO,
            population: PopulationConfig::default(),
            contest: ContestConfig::default(),
            impact: None,
            empirical: EmpiricalConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::config("sweep needs at least one axis value"));
        }
        if self.n_iterations == 0 || self.winprob_samples == 0 {
            return Err(Error::config("iteration and sample counts must be at least 1"));
        }
        if !self.axis.is_empirical() {
            TeamPreset::parse(&self.base)?;
        }
        if let Some(name) = &self.impact {
            ImpactPreset::parse(name)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub enum PointOutcome {
    Contest(MetricsTable),
    Impact(ImpactRun),
    Empirical(EmpiricalRun),
}

/// Fully resolved parameters of one sweep point.
#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub value: AxisValue,
    pub preset: String,
    pub impact: Option<String>,
    pub population: PopulationConfig,
    pub contest: ContestConfig,
    pub rho: f64,
    pub n_experts: usize,
    pub outcome: PointOutcome,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub points: Vec<SweepPoint>,
}

/// Runs one contest (or impact contest) per axis value.
///
/// The empirical axes `n_common` and `k_experts` need `data`.
pub fn run_sweep(spec: &SweepSpec, data: Option<&Dataset>) -> Result<SweepResult> {
    spec.validate()?;
    let points = spec
        .values
        .iter()
        .map(|v| run_point(spec, v, data))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        spec: spec.clone(),
        points,
    })
}

fn run_point(spec: &SweepSpec, value: &AxisValue, data: Option<&Dataset>) -> Result<SweepPoint> {
    if spec.axis.is_empirical() {
        let data = data.ok_or_else(|| Error::config(format!("axis `{}` needs a dataset", spec.axis.name())))?;
        let mut cfg = spec.empirical.clone();
        cfg.seed = spec.seed;
        match spec.axis {
            Axis::NCommon => cfg.n_common = value.count(spec.axis)?,
            _ => cfg.n_experts = value.count(spec.axis)?,
        }
        let run = run_empirical(data, &cfg)?;
        return Ok(SweepPoint {
            value: value.clone(),
            preset: "empirical".into(),
            impact: cfg.impact.then(|| "augment".to_string()),
            population: spec.population.clone(),
            contest: spec.contest.clone(),
            rho: spec.rho,
            n_experts: cfg.n_experts,
            outcome: PointOutcome::Empirical(run),
        });
    }

    let preset = TeamPreset::parse(&spec.base)?;
    let mut population = spec.population.clone();
    let mut rho = spec.rho;
    let mut impact = spec.impact.clone();
    let full = preset.point_spec(rho).n_teams();
    let mut n_experts = full;
    match spec.axis {
        Axis::Tau => population.tau = value.number(spec.axis)?,
        Axis::Beta => {
            population.beta = value.number(spec.axis)?;
            population.alpha = None;
        }
        Axis::Rho => rho = value.number(spec.axis)?,
        Axis::NExperts => n_experts = value.count(spec.axis)?,
        Axis::ImpactConfig => match value {
            AxisValue::Name(s) => impact = Some(ImpactPreset::parse(s)?.id().to_string()),
            AxisValue::Number(v) => {
                return Err(Error::config(format!("axis `impact_config` needs preset names, got {v}")))
            }
        },
        Axis::NCommon | Axis::KExperts => unreachable!("handled above"),
    }
    let mut contest = spec.contest.clone();
    contest.n_users = population.n_users;

    let point_spec = preset.point_spec(rho).truncated(n_experts)?;
    let model = moment_match(&point_spec)?;
    let config_id = match &impact {
        Some(name) => format!("{}+{}", preset.id(), name),
        None => preset.id().to_string(),
    };
    let outcome = match &impact {
        Some(name) => {
            let impact_model = ImpactModel::new(ImpactPreset::parse(name)?.spec())?;
            PointOutcome::Impact(run_impact_contest(
                &config_id,
                &model,
                &impact_model,
                &population,
                &contest,
                spec.n_iterations,
                spec.winprob_samples,
                spec.seed,
            )?)
        }
        None => {
            let pi = estimate_win_probs(&model, spec.winprob_samples, spec.seed)?;
            let pop = population.resolve(model.n_teams())?;
            PointOutcome::Contest(run_iterations(
                &config_id,
                &model,
                &pi.probs,
                &pop,
                &contest,
                spec.n_iterations,
                spec.seed,
            )?)
        }
    };
    Ok(SweepPoint {
        value: value.clone(),
        preset: preset.id().to_string(),
        impact,
        population,
        contest,
        rho,
        n_experts,
        outcome,
    })
}

const PROVENANCE: [&str; 16] = [
    "axis",
    "value",
    "config_id",
    "preset",
    "impact_config",
    "n_experts",
    "tau",
    "beta",
    "delta",
    "rho",
    "n_users",
    "entry_fee",
    "platform_cut",
    "n_iterations",
    "winprob_samples",
    "seed",
];

impl SweepResult {
    /// One row per axis value: full provenance, the best choice's metrics,
    /// and per-choice columns suffixed with the 1-based choice index.
    pub fn to_table(&self) -> ResultTable {
        if self.spec.axis.is_empirical() {
            return self.empirical_table();
        }
        let width = self.points.iter().map(|p| outcome_table(p).n_choices()).max().unwrap_or(0);
        let mut columns: Vec<String> = PROVENANCE.iter().map(|s| s.to_string()).collect();
        columns.extend(
            ["best", "best_win_prob", "best_selection_ratio", "best_mean_winnings", "best_mean_winnings_se", "deviation_variance"]
                .map(String::from),
        );
        for metric in ["win_prob", "selection_ratio", "mean_winnings", "mean_winnings_se"] {
            columns.extend((1..=width).map(|i| format!("{metric}_{i}")));
        }
        let refs: Vec<&str> = columns.iter().map(String::as_str).collect();
        let mut t = ResultTable::new(&refs);
        for p in &self.points {
            let m = outcome_table(p);
            let b = m.best();
            let mut row = self.provenance(p, &m.config_id);
            row.extend([
                Cell::Int(b as i64 + 1),
                Cell::Float(m.win_probs[b]),
                Cell::from(m.selection_ratio[b]),
                Cell::Float(m.mean_winnings[b]),
                Cell::Float(m.mean_winnings_se[b]),
                match &p.outcome {
                    PointOutcome::Impact(run) => Cell::from(sample_variance(run.deviation.as_slice())),
                    _ => Cell::Missing,
                },
            ]);
            let pad = |v: Vec<Cell>| {
                let mut v = v;
                v.resize(width, Cell::Missing);
                v
            };
            row.extend(pad(m.win_probs.iter().map(|&x| Cell::Float(x)).collect()));
            row.extend(pad(m.selection_ratio.iter().map(|&x| Cell::from(x)).collect()));
            row.extend(pad(m.mean_winnings.iter().map(|&x| Cell::Float(x)).collect()));
            row.extend(pad(m.mean_winnings_se.iter().map(|&x| Cell::Float(x)).collect()));
            t.push(row);
        }
        t
    }

    fn provenance(&self, p: &SweepPoint, config_id: &str) -> Vec<Cell> {
        vec![
            Cell::from(self.spec.axis.name()),
            p.value.cell(),
            Cell::from(config_id),
            Cell::from(p.preset.as_str()),
            p.impact.as_deref().map(Cell::from).unwrap_or(Cell::Missing),
            Cell::Int(p.n_experts as i64),
            Cell::Float(p.population.tau),
            Cell::Float(p.population.beta),
            Cell::Float(p.population.delta),
            Cell::Float(p.rho),
            Cell::Int(p.population.n_users as i64),
            Cell::Float(p.contest.entry_fee),
            Cell::Float(p.contest.platform_cut),
            Cell::Int(self.spec.n_iterations as i64),
            Cell::Int(self.spec.winprob_samples as i64),
            Cell::Uint(self.spec.seed),
        ]
    }

    fn empirical_table(&self) -> ResultTable {
        let strategies: Vec<String> = self.spec.empirical.strategies.iter().map(|s| s.name.clone()).collect();
        let mut columns: Vec<String> = [
            "axis",
            "value",
            "n_experts",
            "n_common",
            "impact",
            "p_random",
            "users_per_strategy",
            "random_users",
            "eval_matches",
            "n_iterations",
            "seed",
            "E",
            "C",
            "Cp",
            "Vmu",
            "Sigma2",
            "mean_gain",
        ]
        .map(String::from)
        .to_vec();
        columns.extend(strategies.iter().map(|s| format!("gain[{s}]")));
        let refs: Vec<&str> = columns.iter().map(String::as_str).collect();
        let mut t = ResultTable::new(&refs);
        for p in &self.points {
            let PointOutcome::Empirical(run) = &p.outcome else { continue };
            let c = &run.config;
            let covs: Vec<Covariates> = run.matches.iter().map(|m| m.covariates).collect();
            let avg = Covariates::average(&covs).expect("at least one evaluated match");
            let mut row = vec![
                Cell::from(self.spec.axis.name()),
                p.value.cell(),
                Cell::Int(c.n_experts as i64),
                Cell::Int(c.n_common as i64),
                Cell::Int(c.impact as i64),
                Cell::Float(c.p_random),
                Cell::Int(c.users_per_strategy as i64),
                Cell::Int(c.random_users as i64),
                Cell::Int(run.matches.len() as i64),
                Cell::Int(c.n_iterations as i64),
                Cell::Uint(c.seed),
                Cell::Float(avg.e),
                Cell::Float(avg.c),
                Cell::Float(avg.c_p),
                Cell::Float(avg.v_mu),
                Cell::Float(avg.sigma2),
                Cell::Float(run.mean_gain()),
            ];
            row.extend(run.gains.iter().map(|g| Cell::Float(g.tournament)));
            t.push(row);
        }
        t
    }
}

fn outcome_table(p: &SweepPoint) -> &MetricsTable {
    match &p.outcome {
        PointOutcome::Contest(m) => m,
        PointOutcome::Impact(run) => &run.combo,
        PointOutcome::Empirical(_) => unreachable!("empirical points use their own table"),
    }
}

/// Parses a sweep document.
pub fn parse_spec(json: &str) -> Result<SweepSpec> {
    serde_json::from_str(json).map_err(|e| Error::config(format!("invalid sweep spec: {e}")))
}
