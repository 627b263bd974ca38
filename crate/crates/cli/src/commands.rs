use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use skillgauge_core::empirical::fixtures::{generate, FixtureConfig, SQUAD_SIZE};
use skillgauge_core::empirical::{run_empirical, Dataset, EmpiricalConfig};
use skillgauge_core::experiment::{parse_spec, run_sweep};
use skillgauge_core::impact::{run_impact_contest, ImpactModel, ImpactRun};
use skillgauge_core::presets::{ImpactPreset, TeamPreset};
use skillgauge_core::regression::{cross_tab, ols_fit_with, Formula, Frame, SeKind};
use skillgauge_core::render::{default_columns, render_svg};
use skillgauge_core::table::write_atomic;
use skillgauge_core::{
    estimate_win_probs, f_statistic, moment_match, run_iterations, ContestConfig, Error, PopulationConfig, ResultTable,
    Result,
};

use crate::manifest::{Artifact, Manifest};
use crate::{Command, EmpiricalArgs, Switch, ImpactArgs, Output, PopulationArgs, RegressArgs, SimulateArgs, SweepArgs};

/// Everything a command produces, held in memory until the command succeeds.
struct Run {
    artifacts: Vec<(PathBuf, Vec<u8>)>,
    manifest_path: PathBuf,
    params: Value,
    seed: Option<u64>,
    summary: Value,
    stdout: String,
}

impl Run {
    fn new(output: &Output, params: Value, seed: Option<u64>) -> Self {
        Run {
            artifacts: Vec::new(),
            manifest_path: manifest_path(output),
            params,
            seed,
            summary: Value::Null,
            stdout: String::new(),
        }
    }

    fn csv(&mut self, path: &Path, table: &ResultTable) -> Result<()> {
        self.artifacts.push((path.to_path_buf(), table.to_csv_string()?.into_bytes()));
        Ok(())
    }
}

fn manifest_path(output: &Output) -> PathBuf {
    output.manifest.clone().unwrap_or_else(|| sibling(&output.out, "manifest.json"))
}

/// `dir/name.ext` becomes `dir/name.ext.<suffix>`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

/// Returns the given seed, or draws one, announces it, and records it in
/// the replay arguments.
fn resolve_seed(seed: Option<u64>, argv: &mut Vec<String>) -> u64 {
    seed.unwrap_or_else(|| {
        let s: u64 = rand::random();
        eprintln!("generated seed: {s}");
        argv.extend(["--seed".to_string(), s.to_string()]);
        s
    })
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("parameters serialize")
}

pub fn run(command: &Command, mut argv: Vec<String>) -> Result<()> {
    let name = match command {
        Command::Simulate(_) => "simulate",
        Command::Sweep(_) => "sweep",
        Command::Impact(_) => "impact",
        Command::Empirical(_) => "empirical",
        Command::Regress(_) => "regress",
        Command::Fixtures(_) => "fixtures",
        Command::Render(_) => "render",
    };
    let run = match command {
        Command::Simulate(a) => simulate(a, &mut argv)?,
        Command::Sweep(a) => sweep(a, &mut argv)?,
        Command::Impact(a) => impact(a, &mut argv)?,
        Command::Empirical(a) => empirical(a, &mut argv)?,
        Command::Regress(a) => regress(a)?,
        Command::Fixtures(a) => {
            if a.players % SQUAD_SIZE != 0 {
                return Err(Error::Config(format!(
                    "--players must be a multiple of the squad size {SQUAD_SIZE}, got {}",
                    a.players
                )));
            }
            let seed = resolve_seed(a.seed, &mut argv);
            let cfg = FixtureConfig {
                n_matches: a.matches,
                n_franchises: a.players / SQUAD_SIZE,
                seed,
                tournament: a.tournament.clone(),
            };
            let (scorecards, careers) = generate(&cfg)?.to_csv_bytes()?;
            std::fs::create_dir_all(&a.out_dir).map_err(|source| Error::Io {
                path: a.out_dir.clone(),
                source,
            })?;
            Run {
                artifacts: vec![
                    (a.out_dir.join("scorecards.csv"), scorecards),
                    (a.out_dir.join("careers.csv"), careers),
                ],
                manifest_path: a.out_dir.join("manifest.json"),
                params: to_value(&cfg),
                seed: Some(seed),
                summary: Value::Null,
                stdout: String::new(),
            }
        }
        Command::Render(a) => {
            let frame = Frame::read_csv(&a.input)?;
            let (x, ys) = match (&a.x, &a.y) {
                (Some(x), Some(ys)) => (x.clone(), ys.clone()),
                (x, ys) => {
                    let (dx, dys) = default_columns(&frame)?;
                    (x.clone().unwrap_or(dx), ys.clone().unwrap_or(dys))
                }
            };
            let title = a.title.clone().unwrap_or_else(|| a.input.display().to_string());
            let svg = render_svg(&frame, &x, &ys, &title)?;
            let mut run = Run::new(&a.output, json!({"input": a.input, "x": x, "y": ys, "title": title}), None);
            run.artifacts.push((a.output.out.clone(), svg.into_bytes()));
            run
        }
    };
    finish(name, argv, run)
}

fn finish(command: &str, argv: Vec<String>, run: Run) -> Result<()> {
    let mut artifacts = Vec::new();
    for (path, bytes) in &run.artifacts {
        write_atomic(path, bytes)?;
        artifacts.push(Artifact::describe(path, bytes));
    }
    let manifest = Manifest {
        tool: "skillgauge",
        version: env!("CARGO_PKG_VERSION"),
        command: command.to_string(),
        argv,
        params: run.params,
        seed: run.seed,
        artifacts,
        summary: run.summary,
    };
    write_atomic(&run.manifest_path, &manifest.to_bytes())?;
    print!("{}", run.stdout);
    Ok(())
}

fn population(p: &PopulationArgs) -> (PopulationConfig, ContestConfig) {
    (
        PopulationConfig {
            n_users: p.n_users,
            tau: p.tau,
            beta: p.beta,
            delta: p.delta,
            alpha: p.alpha,
        },
        ContestConfig {
            entry_fee: p.entry_fee,
            platform_cut: p.platform_cut,
            n_users: p.n_users,
        },
    )
}

fn simulate(a: &SimulateArgs, argv: &mut Vec<String>) -> Result<Run> {
    let preset = TeamPreset::parse(&a.preset)?;
    let seed = resolve_seed(a.seed, argv);
    let mut spec = preset.point_spec(a.rho);
    if let Some(k) = a.n_experts {
        spec = spec.truncated(k)?;
    }
    let model = moment_match(&spec)?;
    let pi = estimate_win_probs(&model, a.winprob_samples, seed)?;
    let (pop_cfg, contest) = population(&a.population);
    let pop = pop_cfg.resolve(model.n_teams())?;
    let metrics = run_iterations(preset.id(), &model, &pi.probs, &pop, &contest, a.iterations, seed)?;
    let table = metrics.to_table();
    let params = json!({
        "preset": preset.id(),
        "point_spec": spec,
        "population": pop,
        "contest": contest,
        "iterations": a.iterations,
        "winprob_samples": a.winprob_samples,
    });
    let mut run = Run::new(&a.output, params, Some(seed));
    run.stdout = table.to_text();
    run.summary = json!({"win_probs": pi.probs, "rollovers": metrics.rollovers});
    run.csv(&a.output.out, &table)?;
    Ok(run)
}

fn sweep(a: &SweepArgs, argv: &mut Vec<String>) -> Result<Run> {
    let text = read_text(&a.spec)?;
    let mut spec = parse_spec(&text)?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    let given = a.seed.or_else(|| doc.get("seed").and(Some(spec.seed)));
    spec.seed = resolve_seed(given, argv);
    let data = match (&a.scorecards, &a.careers) {
        (Some(s), Some(c)) => Some(Dataset::load(s, c)?),
        _ => None,
    };
    let result = run_sweep(&spec, data.as_ref())?;
    let table = result.to_table();
    let mut run = Run::new(&a.output, to_value(&spec), Some(spec.seed));
    run.stdout = format!("{} rows written to {}\n", table.len(), a.output.out.display());
    run.csv(&a.output.out, &table)?;
    Ok(run)
}

fn impact_runs(a: &ImpactArgs, impact: ImpactPreset, seed: u64) -> Result<Vec<ImpactRun>> {
    let model = ImpactModel::new(impact.spec())?;
    let (pop, contest) = population(&a.population);
    a.teams
        .iter()
        .map(|t| {
            let preset = TeamPreset::parse(t)?;
            let teams = moment_match(&preset.point_spec(a.rho))?;
            run_impact_contest(
                &format!("{}+{}", preset.id(), impact.id()),
                &teams,
                &model,
                &pop,
                &contest,
                a.iterations,
                a.winprob_samples,
                seed,
            )
        })
        .collect()
}

fn pooled_deviation(runs: &[ImpactRun]) -> Vec<f64> {
    runs.iter().flat_map(|r| r.deviation.as_slice().to_vec()).collect()
}

fn impact(a: &ImpactArgs, argv: &mut Vec<String>) -> Result<Run> {
    let preset = ImpactPreset::parse(&a.impact)?;
    let reference = a.reference.as_deref().map(ImpactPreset::parse).transpose()?;
    for t in &a.teams {
        TeamPreset::parse(t)?;
    }
    let seed = resolve_seed(a.seed, argv);
    let runs = impact_runs(a, preset, seed)?;
    let mut table = ResultTable::new(&[]);
    for r in &runs {
        let t = r.to_table();
        if table.columns.is_empty() {
            table = t;
        } else {
            table.extend(t)?;
        }
    }
    let deviation = pooled_deviation(&runs);
    let mut summary = json!({
        "deviation_variance": skillgauge_core::linalg::sample_variance(&deviation),
    });
    if let Some(r) = reference {
        let ref_seed = a.reference_seed.unwrap_or(seed);
        let ref_runs = impact_runs(a, r, ref_seed)?;
        let ref_dev = pooled_deviation(&ref_runs);
        let f = f_statistic(&deviation, &ref_dev)?;
        summary["reference"] = json!(r.id());
        summary["reference_seed"] = json!(ref_seed);
        summary["reference_deviation_variance"] = json!(skillgauge_core::linalg::sample_variance(&ref_dev));
        summary["f_statistic"] = json!(f);
        for run in &ref_runs {
            table.extend(run.to_table())?;
        }
    }
    let (pop, contest) = population(&a.population);
    let params = json!({
        "teams": a.teams,
        "impact": preset.id(),
        "impact_spec": preset.spec(),
        "reference": reference.map(|r| r.id()),
        "reference_seed": a.reference_seed,
        "rho": a.rho,
        "population": pop,
        "contest": contest,
        "iterations": a.iterations,
        "winprob_samples": a.winprob_samples,
    });
    let mut run = Run::new(&a.output, params, Some(seed));
    run.stdout = format!("{}\n", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    run.summary = summary;
    run.csv(&a.output.out, &table)?;
    Ok(run)
}

fn empirical(a: &EmpiricalArgs, argv: &mut Vec<String>) -> Result<Run> {
    let (mut cfg, seed_in_config) = match &a.config {
        Some(path) => {
            let text = read_text(path)?;
            let doc: Value = serde_json::from_str(&text).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
            let cfg: EmpiricalConfig =
                serde_json::from_value(doc.clone()).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
            (cfg, doc.get("seed").is_some())
        }
        None => (EmpiricalConfig::default(), false),
    };
    let given = a.seed.or(seed_in_config.then_some(cfg.seed));
    cfg.seed = resolve_seed(given, argv);
    if let Some(v) = a.n_experts {
        cfg.n_experts = v;
    }
    if let Some(v) = a.n_common {
        cfg.n_common = v;
    }
    if let Some(v) = a.iterations {
        cfg.n_iterations = v;
    }
    if let Some(v) = a.eval_matches {
        cfg.eval_matches = v;
    }
    if let Some(switch) = a.impact {
        cfg.impact = switch == Switch::On;
    }
    cfg.separate_contests |= a.separate_contests;
    cfg.record_trace = a.trace.is_some();
    cfg.validate()?;
    let data = Dataset::load(&a.scorecards, &a.careers)?;
    let result = run_empirical(&data, &cfg)?;
    let table = result.to_table();
    let mut run = Run::new(&a.output, to_value(&cfg), Some(cfg.seed));
    let gains: Vec<Value> = cfg
        .strategies
        .iter()
        .zip(&result.gains)
        .map(|(s, g)| json!({"strategy": s.name, "tournament_gain": g.tournament}))
        .collect();
    run.summary = json!({"matches": result.matches.len(), "gains": gains});
    run.stdout = format!("{}\n", serde_json::to_string_pretty(&run.summary).expect("summary serializes"));
    run.csv(&a.output.out, &table)?;
    if let Some(path) = &a.trace {
        let traces: Vec<Value> = result
            .matches
            .iter()
            .map(|m| json!({"match_id": m.match_id, "cells": m.cells, "winners": m.winners, "trace": m.trace}))
            .collect();
        let bytes = serde_json::to_vec(&traces).expect("trace serializes");
        run.artifacts.push((path.clone(), bytes));
    }
    Ok(run)
}

fn regress(a: &RegressArgs) -> Result<Run> {
    let frame = Frame::read_csv(&a.input)?;
    let formula = Formula::parse(&a.model, &frame.columns)?;
    let design = formula.design(&frame)?;
    let se = if a.robust { SeKind::Hc1 } else { SeKind::Classical };
    let fit = ols_fit_with(&design, se)?;
    let params = json!({"input": a.input, "model": a.model, "robust": a.robust, "cross_tab": a.cross_tab});
    let mut run = Run::new(&a.output, params, None);
    run.stdout = fit.report();
    run.summary = json!({
        "n": fit.n,
        "r_squared": fit.r_squared,
        "f_statistic": fit.f_statistic,
        "f_p_value": fit.f_p_value,
    });
    run.csv(&a.output.out, &fit.to_table())?;
    if let Some(keys) = &a.cross_tab {
        if keys.len() != 2 {
            return Err(Error::Config(format!("--cross-tab needs two columns, got {}", keys.len())));
        }
        let ct = cross_tab(&frame, &keys[0], &keys[1], &formula.response)?;
        let table = ct.to_table();
        run.stdout.push_str(&format!("\nMean {} by {} and {}\n{}", formula.response, keys[0], keys[1], table.to_text()));
        run.csv(&sibling(&a.output.out, "crosstab.csv"), &table)?;
    }
    Ok(run)
}
