//! Acceptance suite. Prints one line per criterion and exits nonzero when
//! any criterion fails. Pass a criterion number to run only that one.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use skillgauge_core::agents::sample_belief;
use skillgauge_core::contest::prize_pool;
use skillgauge_core::empirical::fixtures::{generate, FixtureConfig};
use skillgauge_core::empirical::{run_empirical, CareerRecord, EmpiricalConfig, EmpiricalRun, ScorecardRow};
use skillgauge_core::experiment::PointOutcome;
use skillgauge_core::presets::{ImpactPreset, TeamPreset};
use skillgauge_core::rng::seeded;
use skillgauge_core::score_model::analytic_two_team_win_prob;
use skillgauge_core::{
    calibrate_alpha, estimate_win_probs, f_statistic, moment_match, ols_fit, run_impact_contest, run_sweep, Axis,
    AxisValue, Contest, ContestConfig, Design, ImpactModel, ImpactRun, Matrix, MetricsTable, PointSpec,
    PopulationConfig, SweepSpec,
};

type Verdict = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn contest_metrics(preset: TeamPreset, pop: &PopulationConfig, k: usize, iters: usize, seed: u64) -> Result<MetricsTable, String> {
    let model = moment_match(&preset.point_spec(0.4)).map_err(err)?;
    let pi = estimate_win_probs(&model, k, seed).map_err(err)?.probs;
    let population = pop.resolve(pi.len()).map_err(err)?;
    let cfg = ContestConfig { n_users: pop.n_users, ..ContestConfig::default() };
    Contest::new(preset.id(), &model, &pi, &population, &cfg)
        .map_err(err)?
        .run(iters, seed)
        .map_err(err)
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", parts.join(", "))
}

fn symmetry() -> Verdict {
    let m = contest_metrics(TeamPreset::EquiMean, &PopulationConfig::default(), 100_000, 10_000, 11)?;
    for (i, p) in m.win_probs.iter().enumerate() {
        ensure((p - 0.25).abs() <= 0.01, || format!("pi_{} = {p}", i + 1))?;
    }
    for (i, r) in m.selection_ratio.iter().enumerate() {
        let r = r.ok_or_else(|| format!("selection ratio {} undefined", i + 1))?;
        ensure((r - 1.0).abs() <= 0.15, || format!("selection ratio {} = {r}", i + 1))?;
    }
    let ratios: Vec<f64> = m.selection_ratio.iter().map(|r| r.unwrap()).collect();
    Ok(format!("pi {} ratios {}", fmt_vec(&m.win_probs), fmt_vec(&ratios)))
}

fn two_team_oracle() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    for preset in TeamPreset::ALL {
        let spec = preset.point_spec(0.4);
        for i in 0..4 {
            for j in i + 1..4 {
                let pair = PointSpec::new(vec![spec.means[i], spec.means[j]], vec![spec.sds[i], spec.sds[j]], spec.rho)
                    .map_err(err)?;
                let model = moment_match(&pair).map_err(err)?;
                let exact = analytic_two_team_win_prob(&model).map_err(err)?;
                let est = estimate_win_probs(&model, 100_000, 21 + pairs).map_err(err)?;
                let se = (exact * (1.0 - exact) / 100_000.0).sqrt().max(1e-12);
                let z = (est.probs[1] - exact).abs() / se;
                worst = worst.max(z);
                ensure(z <= 3.0, || {
                    format!("{} teams {},{}: MC {} vs exact {exact} ({z:.2} SE)", preset.id(), i + 1, j + 1, est.probs[1])
                })?;
                pairs += 1;
            }
        }
    }
    Ok(format!("{pairs} pairs, largest deviation {worst:.2} SE"))
}

fn calibration() -> Verdict {
    let alpha = calibrate_alpha(4, 0.05, 0.04).map_err(err)?;
    ensure(alpha == 12499.0, || format!("alpha = {alpha}"))?;
    let pi = [0.1, 0.2, 0.3, 0.4];
    let mut rng = seeded(31);
    let draws = 10_000;
    let mut misses = 0;
    for _ in 0..draws {
        let b = sample_belief(&pi, alpha, &mut rng).map_err(err)?;
        let dev = b.p.iter().zip(&pi).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        if dev >= 0.04 {
            misses += 1;
        }
    }
    let rate = misses as f64 / draws as f64;
    ensure(rate <= 0.05, || format!("exceedance rate {rate}"))?;
    Ok(format!("alpha {alpha}, P(max|p-pi| >= 0.04) = {rate}"))
}

fn skill_visibility() -> Verdict {
    let mut notes = Vec::new();
    for preset in [TeamPreset::UnequalMean, TeamPreset::UnequalMeanUnequalStd] {
        let m = contest_metrics(preset, &PopulationConfig::default(), 100_000, 10_000, 41)?;
        let r4 = m.selection_ratio[3].ok_or("team 4 ratio undefined")?;
        ensure(r4 > 1.5, || format!("{}: team 4 ratio {r4}", preset.id()))?;
        ensure(m.best() == 3, || format!("{}: best team is {}", preset.id(), m.best() + 1))?;
        notes.push(format!("{} ratio4 {r4:.3} pi {}", preset.id(), fmt_vec(&m.win_probs)));
    }
    Ok(notes.join("; "))
}

fn sweep_metrics(axis: Axis, values: &[f64], tweak: impl FnOnce(&mut SweepSpec)) -> Result<Vec<MetricsTable>, String> {
    let mut spec = SweepSpec::new(
        TeamPreset::UnequalMean.id(),
        axis,
        values.iter().map(|&v| AxisValue::Number(v)).collect(),
    );
    spec.seed = 51;
    tweak(&mut spec);
    let result = run_sweep(&spec, None).map_err(err)?;
    result
        .points
        .into_iter()
        .map(|p| match p.outcome {
            PointOutcome::Contest(m) => Ok(m),
            _ => Err("expected a plain contest".to_string()),
        })
        .collect()
}

fn best_stats(m: &MetricsTable) -> (f64, f64, f64) {
    let b = m.best();
    (m.mean_winnings[b], m.mean_winnings_se[b], m.selection_ratio[b].unwrap_or(f64::NAN))
}

fn crowding() -> Verdict {
    let taus = [0.1, 0.2, 0.3, 0.4];
    let tables = sweep_metrics(Axis::Tau, &taus, |s| s.population.beta = 0.04)?;
    let stats: Vec<(f64, f64, f64)> = tables.iter().map(best_stats).collect();
    for k in 1..stats.len() {
        let (prev, (cur, se, _)) = (stats[k - 1].0, stats[k]);
        ensure(cur <= prev + se, || format!("tau {} -> {}: {prev} -> {cur} (SE {se})", taus[k - 1], taus[k]))?;
    }
    let mw: Vec<f64> = stats.iter().map(|s| s.0).collect();
    Ok(format!("best mean winnings over tau {}", fmt_vec(&mw)))
}

fn accuracy() -> Verdict {
    let tables = sweep_metrics(Axis::Beta, &[0.02, 0.05], |s| s.population.tau = 0.2)?;
    let (sharp, _, _) = best_stats(&tables[0]);
    let (loose, se, _) = best_stats(&tables[1]);
    ensure(sharp >= loose - se, || format!("beta 0.02: {sharp}, beta 0.05: {loose} (SE {se})"))?;
    Ok(format!("beta 0.02: {sharp:.3}, beta 0.05: {loose:.3} (SE {se:.3})"))
}

fn experts_effect() -> Verdict {
    let tables = sweep_metrics(Axis::NExperts, &[2.0, 4.0], |_| {})?;
    let (mw2, _, r2) = best_stats(&tables[0]);
    let (mw4, _, r4) = best_stats(&tables[1]);
    ensure(mw4 >= mw2, || format!("mean winnings 4 experts {mw4} < 2 experts {mw2}"))?;
    ensure(r4 >= r2, || format!("selection ratio 4 experts {r4} < 2 experts {r2}"))?;
    Ok(format!("mean winnings {mw2:.3} -> {mw4:.3}, selection ratio {r2:.3} -> {r4:.3}"))
}

fn impact_runs(preset: ImpactPreset, seed: u64) -> Result<Vec<ImpactRun>, String> {
    let model = ImpactModel::new(preset.spec()).map_err(err)?;
    TeamPreset::ALL
        .iter()
        .map(|t| {
            let teams = moment_match(&t.point_spec(0.4)).map_err(err)?;
            run_impact_contest(
                &format!("{}+{}", t.id(), preset.id()),
                &teams,
                &model,
                &PopulationConfig::default(),
                &ContestConfig::default(),
                10_000,
                100_000,
                seed,
            )
            .map_err(err)
        })
        .collect()
}

fn pooled(runs: &[ImpactRun]) -> Vec<f64> {
    runs.iter().flat_map(|r| r.deviation.as_slice().to_vec()).collect()
}

fn impact_f_statistics() -> Verdict {
    let reference = impact_runs(ImpactPreset::Iid, 2)?;
    let ref_dev = pooled(&reference);
    let f = |runs: &[ImpactRun]| -> Result<f64, String> {
        f_statistic(&pooled(runs), &ref_dev).map_err(err)?.ok_or_else(|| "reference variance is zero".to_string())
    };
    let dm = impact_runs(ImpactPreset::DifferentMean, 1)?;
    let dms = impact_runs(ImpactPreset::DifferentMeanAndStd, 1)?;
    let iid = impact_runs(ImpactPreset::Iid, 1)?;
    let (f_dm, f_dms, f_iid) = (f(&dm)?, f(&dms)?, f(&iid)?);
    let per_config = |runs: &[ImpactRun]| -> Vec<f64> {
        runs.iter()
            .zip(&reference)
            .map(|(a, b)| {
                f_statistic(a.combo_mean_winnings().as_slice(), b.combo_mean_winnings().as_slice())
                    .ok()
                    .flatten()
                    .unwrap_or(f64::NAN)
            })
            .collect()
    };
    let detail = format!(
        "F(Different_mean) {f_dm:.2}, F(Different_mean_and_std) {f_dms:.2}, F(IID vs fresh IID) {f_iid:.3}; \
         per-config cell mean winnings F: DM {} DMS {} IID {}",
        fmt_vec(&per_config(&dm)),
        fmt_vec(&per_config(&dms)),
        fmt_vec(&per_config(&iid))
    );
    ensure(f_dm >= 5.0 && f_dms >= 5.0, || detail.clone())?;
    ensure((0.5..=2.0).contains(&f_iid), || detail.clone())?;
    Ok(detail)
}

fn conservation() -> Verdict {
    let model = moment_match(&TeamPreset::UnequalMean.point_spec(0.4)).map_err(err)?;
    let pi = estimate_win_probs(&model, 20_000, 61).map_err(err)?.probs;
    let pop = PopulationConfig::default().resolve(4).map_err(err)?;
    let cfg = ContestConfig::default();
    let contest = Contest::new("conservation", &model, &pi, &pop, &cfg).map_err(err)?;
    let pool = prize_pool(&cfg);
    let (mut settled, mut rollovers, mut worst) = (0, 0, 0.0f64);
    for i in 0..10_000u64 {
        let out = contest.iteration(i, 61);
        for t in 0..4 {
            if !out.winner_teams.contains(&t) {
                ensure(out.payout_for(t) == 0.0, || format!("iteration {i}: loser {t} paid"))?;
            }
        }
        if out.rollover {
            rollovers += 1;
            ensure(out.total_paid() == 0.0, || format!("iteration {i}: rollover paid out"))?;
            continue;
        }
        let rel = (out.total_paid() - pool).abs() / pool;
        worst = worst.max(rel);
        ensure(rel <= 1e-6, || format!("iteration {i}: relative imbalance {rel}"))?;
        settled += 1;
    }
    Ok(format!("{settled} settled, {rollovers} rollovers, worst relative imbalance {worst:.2e}"))
}

/// Default point weights, written out independently of the scoring module.
fn oracle_points(r: &ScorecardRow) -> f64 {
    if !r.played {
        return 0.0;
    }
    let runs = r.runs as f64;
    let wk = r.wickets;
    runs + r.fours as f64 + 2.0 * r.sixes as f64
        + if (50..100).contains(&r.runs) { 8.0 } else { 0.0 }
        + if r.runs >= 100 { 16.0 } else { 0.0 }
        + 25.0 * wk as f64
        + if (3..5).contains(&wk) { 4.0 } else { 0.0 }
        + if wk >= 5 { 8.0 } else { 0.0 }
        + 8.0 * r.maidens as f64
        + 8.0 * r.catches as f64
        + 12.0 * r.stumpings as f64
        + 6.0 * r.runouts as f64
        + 4.0
}

fn oracle_career_totals(careers: &[CareerRecord]) -> HashMap<String, (f64, u32)> {
    let fields = |c: &CareerRecord| -> [(Option<f64>, f64); 13] {
        [
            (c.runs, 1.0),
            (c.fours, 1.0),
            (c.sixes, 2.0),
            (c.fifties, 8.0),
            (c.hundreds, 16.0),
            (c.wickets, 25.0),
            (c.three_wicket_hauls, 4.0),
            (c.five_wicket_hauls, 8.0),
            (c.maidens, 8.0),
            (c.catches, 8.0),
            (c.stumpings, 12.0),
            (c.runouts, 6.0),
            (Some(c.matches as f64), 4.0),
        ]
    };
    let dropped: Vec<bool> = (0..13).map(|k| careers.iter().any(|c| fields(c)[k].0.is_none())).collect();
    careers
        .iter()
        .map(|c| {
            let total = fields(c)
                .iter()
                .zip(&dropped)
                .filter(|(_, &d)| !d)
                .map(|((v, w), _)| v.unwrap_or(0.0) * w)
                .sum();
            (c.player_id.clone(), (total, c.matches))
        })
        .collect()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Rebuilds every user's payout from the raw scorecards and the recorded
/// selection counts, then compares gains, choices, scores and winners.
fn empirical_oracle() -> Verdict {
    let data = generate(&FixtureConfig { n_matches: 10, ..FixtureConfig::default() }).map_err(err)?;
    let cfg = EmpiricalConfig { n_iterations: 500, eval_matches: 10, record_trace: true, seed: 71, ..EmpiricalConfig::default() };
    let run = run_empirical(&data, &cfg).map_err(err)?;

    let mut order: Vec<(String, String)> =
        data.scorecards.iter().map(|r| (r.match_date.clone(), r.match_id.clone())).collect::<HashSet<_>>().into_iter().collect();
    order.sort();
    let careers = oracle_career_totals(&data.careers);
    let evaluated = &order[order.len() - cfg.eval_matches.min(order.len())..];
    ensure(run.matches.len() == evaluated.len(), || "evaluated match count differs".into())?;

    let mut gains: Vec<Vec<f64>> = vec![Vec::new(); cfg.strategies.len()];
    for (report, (_, match_id)) in run.matches.iter().zip(evaluated) {
        ensure(&report.match_id == match_id, || format!("match order: {} vs {match_id}", report.match_id))?;
        let pos = order.iter().position(|(_, m)| m == match_id).unwrap();
        let prior_ids: HashSet<&str> = order[..pos].iter().map(|(_, m)| m.as_str()).collect();

        for t in &report.teams {
            ensure(report.core.iter().all(|c| t.contains(c)), || format!("{match_id}: team misses a core player"))?;
        }
        for a in 0..report.teams.len() {
            for b in a + 1..report.teams.len() {
                let shared = report.teams[a].players.iter().filter(|p| report.teams[b].contains(p)).count();
                ensure(shared >= cfg.n_common, || format!("{match_id}: teams {a},{b} share {shared}"))?;
            }
        }

        let points: HashMap<&str, f64> =
            data.scorecards.iter().filter(|r| &r.match_id == match_id).map(|r| (r.player_id.as_str(), oracle_points(r))).collect();
        let mult = |team: &skillgauge_core::empirical::selection::ExpertTeam, p: &str| {
            if p == team.captain {
                2.0
            } else if p == team.vice_captain {
                1.5
            } else {
                1.0
            }
        };
        let totals: Vec<f64> = report
            .teams
            .iter()
            .map(|t| t.players.iter().map(|p| points.get(p.as_str()).copied().unwrap_or(0.0) * mult(t, p)).sum())
            .collect();
        for (c, (&ours, &theirs)) in totals.iter().zip(&report.cell_scores).enumerate() {
            ensure(close(ours, theirs), || format!("{match_id}: cell {c} total {theirs} vs oracle {ours}"))?;
        }
        let top = totals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let winners: Vec<usize> = (0..totals.len()).filter(|&c| totals[c] == top).collect();
        ensure(winners == report.winners, || format!("{match_id}: winners {:?} vs oracle {winners:?}", report.winners))?;

        // Metrics from earlier matches only.
        let metric = |player: &str| -> (Option<f64>, f64) {
            let mut prior: Vec<(&str, f64)> = data
                .scorecards
                .iter()
                .filter(|r| r.player_id == player && r.played && prior_ids.contains(r.match_id.as_str()))
                .map(|r| (r.match_id.as_str(), oracle_points(r)))
                .collect();
            prior.sort_by_key(|(m, _)| order.iter().position(|(_, id)| id == m));
            let (ct, cn) = careers.get(player).copied().unwrap_or((0.0, 0));
            let n = cn as usize + prior.len();
            let career = if n > 0 { (ct + prior.iter().map(|p| p.1).sum::<f64>()) / n as f64 } else { 0.0 };
            let recent = &prior[prior.len().saturating_sub(cfg.form_window)..];
            let form = (!recent.is_empty()).then(|| recent.iter().map(|p| p.1).sum::<f64>() / recent.len() as f64);
            (form, career)
        };
        for (s, strat) in cfg.strategies.iter().enumerate() {
            let ratings: Vec<f64> = report
                .teams
                .iter()
                .map(|t| {
                    t.players
                        .iter()
                        .map(|p| {
                            let (form, career) = metric(p);
                            (strat.w_form * form.unwrap_or(career) + strat.w_career * career) * mult(t, p)
                        })
                        .sum()
                })
                .collect();
            let best = ratings.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let pick = ratings.iter().position(|&r| r == best).unwrap();
            ensure(pick == report.choices[s], || format!("{match_id}: {} picks {} vs oracle {pick}", strat.name, report.choices[s]))?;
        }

        let trace = report.trace.as_ref().ok_or("trace missing")?;
        let (n_groups, n_cells) = (trace.group_sizes.len(), trace.n_cells);
        ensure(trace.counts.len() == cfg.n_iterations * n_groups * n_cells, || "trace length".into())?;
        let users: u32 = trace.group_sizes.iter().sum();
        let pool = (cfg.entry_fee * (100.0 - cfg.platform_cut) / 100.0) * users as f64;
        let mut group_pay = vec![0.0; n_groups];
        for it in trace.counts.chunks(n_groups * n_cells) {
            let on_winner: Vec<u64> =
                (0..n_groups).map(|g| winners.iter().map(|&c| it[g * n_cells + c] as u64).sum()).collect();
            for g in 0..n_groups {
                let row: u64 = it[g * n_cells..(g + 1) * n_cells].iter().map(|&x| x as u64).sum();
                ensure(row == trace.group_sizes[g] as u64, || format!("{match_id}: group {g} count {row}"))?;
            }
            let total: u64 = on_winner.iter().sum();
            if total > 0 {
                for g in 0..n_groups {
                    group_pay[g] += on_winner[g] as f64 * (pool / total as f64) / trace.group_sizes[g] as f64;
                }
            }
        }
        let iters = cfg.n_iterations as f64;
        let random = group_pay[n_groups - 1] / iters;
        for s in 0..cfg.strategies.len() {
            let strategy = group_pay[s] / iters;
            ensure(close(strategy, report.strategy_payout[s]), || format!("{match_id}: payout {} vs oracle {strategy}", report.strategy_payout[s]))?;
            gains[s].push(strategy - random);
        }
    }
    for (s, g) in run.gains.iter().enumerate() {
        for ((id, ours), theirs) in g.matchwise.iter().zip(&gains[s]) {
            ensure(close(*ours, *theirs), || format!("{id}: gain {ours} vs oracle {theirs}"))?;
        }
        let tournament: f64 = gains[s].iter().sum();
        ensure(close(g.tournament, tournament), || format!("tournament gain {} vs oracle {tournament}", g.tournament))?;
    }
    let summary: Vec<String> =
        run.gains.iter().zip(&cfg.strategies).map(|(g, s)| format!("{} {:.3}", s.name, g.tournament)).collect();
    Ok(format!("{} matches agree; tournament gains {}", run.matches.len(), summary.join(", ")))
}

fn mean_gains(run: &EmpiricalRun) -> Vec<f64> {
    run.gains.iter().map(|g| g.tournament / g.matchwise.len() as f64).collect()
}

fn impact_augmentation() -> Verdict {
    let data = generate(&FixtureConfig { n_matches: 10, ..FixtureConfig::default() }).map_err(err)?;
    let plain_cfg = EmpiricalConfig { eval_matches: 10, ..EmpiricalConfig::default() };
    let impact_cfg = EmpiricalConfig { impact: true, ..plain_cfg.clone() };
    let plain = run_empirical(&data, &plain_cfg).map_err(err)?;
    let boosted = run_empirical(&data, &impact_cfg).map_err(err)?;
    for (a, b) in plain.matches.iter().zip(&boosted.matches) {
        ensure(a.teams == b.teams, || format!("{}: teams differ between modes", a.match_id))?;
        for (cell, score) in b.cells.iter().zip(&b.cell_scores) {
            let base = a.cell_scores[cell.team];
            ensure(*score >= base - 1e-9, || format!("{}: cell {:?} {score} < {base}", a.match_id, cell))?;
        }
    }
    let (without, with) = (mean_gains(&plain), mean_gains(&boosted));
    let detail = format!("mean gain without impact {}, with impact {}", fmt_vec(&without), fmt_vec(&with));
    ensure(with.iter().zip(&without).all(|(w, o)| w >= o), || detail.clone())?;
    Ok(detail)
}

fn ols_oracle() -> Verdict {
    let mut rng = seeded(91);
    let mut worst: f64 = 0.0;
    for d in 0..20 {
        let n = rng.random_range(30..200);
        let p = rng.random_range(1..6);
        let x = Matrix::from_vec(n, p, (0..n * p).map(|_| rng.random_range(-5.0..5.0)).collect());
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-20.0..20.0)).collect();
        let labels: Vec<String> = (0..p).map(|j| format!("x{j}")).collect();
        let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
        let fit = ols_fit(&Design::new("y", &refs, y.clone(), x.clone()).map_err(err)?).map_err(err)?;
        let xi = nalgebra::DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { x[(i, j - 1)] });
        let yv = nalgebra::DVector::from_vec(y);
        let beta = (xi.transpose() * &xi).lu().solve(&(xi.transpose() * yv)).ok_or("oracle solve failed")?;
        for (j, b) in fit.coefficients.iter().enumerate() {
            let diff = (b - beta[j]).abs();
            worst = worst.max(diff);
            ensure(diff <= 1e-8, || format!("design {d}: coefficient {j} {b} vs {}", beta[j]))?;
        }
    }

    let truth = [3.0, -2.0, 0.5, 7.0];
    let x = Matrix::from_vec(40, 3, (0..120).map(|k| ((k * 7919) % 23) as f64 - 11.0 + (k % 3) as f64 * 0.25).collect());
    let y: Vec<f64> = (0..40).map(|i| truth[0] + (0..3).map(|j| truth[j + 1] * x[(i, j)]).sum::<f64>()).collect();
    let exact = ols_fit(&Design::new("y", &["a", "b", "c"], y, x).map_err(err)?).map_err(err)?;
    for (b, t) in exact.coefficients.iter().zip(truth) {
        ensure((b - t).abs() <= 1e-10, || format!("noise-free fit {b} vs {t}"))?;
    }
    ensure(exact.r_squared == 1.0, || format!("noise-free R2 {}", exact.r_squared))?;

    let n = 200;
    let mut rows = Vec::new();
    let mut g = Vec::new();
    for _ in 0..n {
        let e = rng.random_range(2..=4) as f64;
        let c = rng.random_range(0..=20) as f64;
        let noise: f64 = StandardNormal.sample(&mut rng);
        rows.push(vec![e, c, c * c]);
        g.push(12.0 * c - 0.45 * c * c + 5.0 * e + 6.0 * noise);
    }
    let design = Design::new("gain", &["E", "C", "C2"], g, Matrix::from_rows(&rows).map_err(err)?).map_err(err)?;
    let fit = ols_fit(&design).map_err(err)?;
    let (bc, bc2) = (fit.coefficient("C").unwrap(), fit.coefficient("C2").unwrap());
    let (pc, pc2) = (fit.p_value("C").unwrap(), fit.p_value("C2").unwrap());
    ensure(bc > 0.0 && pc < 0.05, || format!("C = {bc} (p {pc})"))?;
    ensure(bc2 < 0.0 && pc2 < 0.05, || format!("C2 = {bc2} (p {pc2})"))?;
    Ok(format!("20 designs within {worst:.1e}; inverted U: C {bc:.3} (p {pc:.1e}), C2 {bc2:.4} (p {pc2:.1e})"))
}

fn cli(dir: &Path, args: &[String]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_skillgauge")).args(args).current_dir(dir).output().map_err(err)?;
    ensure(out.status.success(), || format!("`{}` failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)))
}

fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

fn same_tree(a: &Path, b: &Path, what: &str) -> Result<usize, String> {
    let (x, y) = (snapshot(a), snapshot(b));
    ensure(x.keys().eq(y.keys()), || format!("{what}: file sets differ: {:?} vs {:?}", x.keys(), y.keys()))?;
    for (k, v) in &x {
        ensure(&y[k] == v, || format!("{what}: {} differs", k.display()))?;
    }
    Ok(x.len())
}

fn replay(from: &Path, to: &Path, manifests: &[&str]) -> Result<(), String> {
    for m in manifests {
        let text = std::fs::read_to_string(from.join(m)).map_err(err)?;
        let doc: serde_json::Value = serde_json::from_str(&text).map_err(err)?;
        let argv: Vec<String> = doc["argv"]
            .as_array()
            .ok_or("manifest has no argv")?
            .iter()
            .map(|a| a.as_str().unwrap_or_default().to_string())
            .collect();
        cli(to, &argv)?;
    }
    Ok(())
}

fn determinism() -> Verdict {
    let spec = r#"{"base": "unequal-mean", "axis": "tau", "values": [0.1, 0.2], "n_iterations": 300, "winprob_samples": 3000, "seed": 9}"#;
    let steps: Vec<(&str, Vec<&str>)> = vec![
        ("data/manifest.json", vec!["fixtures", "--matches", "12", "--seed", "3", "--out-dir", "data"]),
        ("sim.csv.manifest.json", vec!["simulate", "--preset", "unequal-mean", "--seed", "5", "--iterations", "500", "--winprob-samples", "5000", "--out", "sim.csv"]),
        ("sweep.csv.manifest.json", vec!["sweep", "--spec", "spec.json", "--out", "sweep.csv"]),
        ("impact.csv.manifest.json", vec!["impact", "--teams", "unequal-mean", "--impact", "different_mean", "--reference", "iid", "--reference-seed", "2", "--seed", "1", "--iterations", "200", "--winprob-samples", "2000", "--out", "impact.csv"]),
        ("emp.csv.manifest.json", vec!["empirical", "--scorecards", "data/scorecards.csv", "--careers", "data/careers.csv", "--seed", "4", "--iters", "200", "--eval-matches", "4", "--trace", "trace.json", "--out", "emp.csv"]),
        ("reg.csv.manifest.json", vec!["regress", "--in", "emp.csv", "--model", "gain ~ Vmu + Sigma2", "--cross-tab", "strategy,match_id", "--out", "reg.csv"]),
        ("sim.svg.manifest.json", vec!["render", "sim.csv", "--out", "sim.svg"]),
    ];
    let root = tempfile::tempdir().map_err(err)?;
    let dirs: Vec<PathBuf> = ["t1", "t4", "replay"].iter().map(|d| root.path().join(d)).collect();
    for d in &dirs {
        std::fs::create_dir_all(d).map_err(err)?;
        std::fs::write(d.join("spec.json"), spec).map_err(err)?;
    }
    for (threads, dir) in ["1", "4"].iter().zip(&dirs) {
        for (_, args) in &steps {
            let mut full: Vec<String> = vec!["--threads".into(), threads.to_string()];
            full.extend(args.iter().map(|s| s.to_string()));
            cli(dir, &full)?;
        }
    }
    let files = same_tree(&dirs[0], &dirs[1], "threads 1 vs 4")?;
    let manifests: Vec<&str> = steps.iter().map(|s| s.0).collect();
    replay(&dirs[0], &dirs[2], &manifests)?;
    same_tree(&dirs[0], &dirs[2], "manifest replay")?;

    // A run without --seed records the generated seed and replays exactly.
    let (fresh, again) = (root.path().join("fresh"), root.path().join("again"));
    std::fs::create_dir_all(&fresh).map_err(err)?;
    std::fs::create_dir_all(&again).map_err(err)?;
    let args: Vec<String> = ["simulate", "--preset", "equi-mean", "--iterations", "200", "--winprob-samples", "2000", "--out", "auto.csv"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    cli(&fresh, &args)?;
    replay(&fresh, &again, &["auto.csv.manifest.json"])?;
    same_tree(&fresh, &again, "generated seed replay")?;
    Ok(format!("{} commands, {files} artifacts identical across --threads 1/4 and manifest replay", steps.len()))
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Option<Duration>,
    run: fn() -> Verdict,
}

fn main() {
    let secs = |s| Some(Duration::from_secs(s));
    let criteria = [
        Criterion { id: 1, name: "symmetry", budget: secs(30), run: symmetry },
        Criterion { id: 2, name: "two-team oracle", budget: secs(10), run: two_team_oracle },
        Criterion { id: 3, name: "belief calibration", budget: secs(5), run: calibration },
        Criterion { id: 4, name: "skill visibility", budget: secs(60), run: skill_visibility },
        Criterion { id: 5, name: "crowding", budget: secs(240), run: crowding },
        Criterion { id: 6, name: "accuracy", budget: secs(240), run: accuracy },
        Criterion { id: 7, name: "experts effect", budget: secs(180), run: experts_effect },
        Criterion { id: 8, name: "impact F-statistics", budget: secs(300), run: impact_f_statistics },
        Criterion { id: 9, name: "conservation", budget: None, run: conservation },
        Criterion { id: 10, name: "empirical oracle", budget: None, run: empirical_oracle },
        Criterion { id: 11, name: "impact augmentation", budget: None, run: impact_augmentation },
        Criterion { id: 12, name: "OLS oracle", budget: None, run: ols_oracle },
        Criterion { id: 13, name: "determinism", budget: None, run: determinism },
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for c in criteria.iter().filter(|c| only.is_empty() || only.contains(&c.id)) {
        let start = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let elapsed = start.elapsed();
        let over = c.budget.is_some_and(|b| elapsed > b);
        let timing = match c.budget {
            Some(b) => format!("{:.1}s of {}s", elapsed.as_secs_f64(), b.as_secs()),
            None => format!("{:.1}s", elapsed.as_secs_f64()),
        };
        let (status, detail) = match (&verdict, over) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("over budget; {d}")),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("criterion {}: {status} {} ({timing}) {detail}", c.id, c.name);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
