use std::collections::HashMap;

use proptest::prelude::*;
use skillgauge_core::agents::sample_belief;
use skillgauge_core::empirical::scoring::StatLine;
use skillgauge_core::empirical::selection::{
    build_expert_team, impact_augment, select_common_core, Candidate, CompositionConstraints, Multipliers, Role,
    Strategy as Expert,
};
use skillgauge_core::empirical::users::user_pick;
use skillgauge_core::empirical::{fantasy_points, gain_metrics, PlayerMetrics, ScorecardRow, ScoringRules, UserStrategy};
use skillgauge_core::impact::boosted_score;
use skillgauge_core::linalg::cholesky;
use skillgauge_core::regression::Frame;
use skillgauge_core::rng::seeded;
use skillgauge_core::{
    cross_tab, estimate_win_probs, f_statistic, ols_fit, quadratic_design, settle, Cell, Design, Matrix, PointSpec,
    ResultTable, Selections,
};

fn model_inputs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
    (2usize..6).prop_flat_map(|n| {
        (
            prop::collection::vec(100.0..600.0f64, n),
            prop::collection::vec(5.0..80.0f64, n),
            0.0..0.8f64,
        )
    })
}

fn row_with(runs: u32, fours: u32, sixes: u32, wickets: u32, maidens: u32, catches: u32) -> ScorecardRow {
    let mut r = ScorecardRow::benched("m", "2024-01-01", "T", "p", "A");
    r.played = true;
    r.runs = runs;
    r.fours = fours;
    r.sixes = sixes;
    r.wickets = wickets;
    r.maidens = maidens;
    r.catches = catches;
    r
}

fn rules_from(w: &[f64]) -> ScoringRules {
    ScoringRules {
        run: w[0],
        four: w[1],
        six: w[2],
        fifty: w[3],
        hundred: w[4],
        wicket: w[5],
        three_wicket_haul: w[6],
        five_wicket_haul: w[7],
        maiden: w[8],
        catch: w[9],
        stumping: w[10],
        runout: w[11],
        played: w[12],
    }
}

fn pool_from(values: &[(f64, f64, u8)]) -> Vec<Candidate> {
    values
        .iter()
        .enumerate()
        .map(|(i, &(career, form, role))| Candidate {
            player_id: format!("p{i:02}"),
            role: [Role::Wicketkeeper, Role::Batter, Role::AllRounder, Role::Bowler][role as usize],
            metrics: PlayerMetrics {
                career_points: Some(career),
                form: Some(form),
                tournament_points: Some(career * 0.5 + form * 0.5),
                mean_var: Some(form - career * 0.1),
            },
        })
        .collect()
}

fn design_from(rows: &[(f64, f64, f64)]) -> Design {
    let y: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let x = Matrix::from_rows(&rows.iter().map(|r| vec![r.0, r.1]).collect::<Vec<_>>()).unwrap();
    Design::new("y", &["a", "b"], y, x).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn win_probabilities_form_a_distribution((means, sds, rho) in model_inputs(), seed in any::<u64>()) {
        let spec = PointSpec::new(means, sds, rho).unwrap();
        let model = skillgauge_core::moment_match(&spec).unwrap();
        let est = estimate_win_probs(&model, 2000, seed).unwrap();
        prop_assert!((est.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(est.probs.iter().all(|&p| (0.0..=1.0).contains(&p)));
    }

    #[test]
    fn beliefs_lie_on_the_simplex(raw in prop::collection::vec(0.0..1.0f64, 2..12), alpha in 0.5..20000.0f64, seed in any::<u64>()) {
        let total: f64 = raw.iter().sum();
        prop_assume!(total > 1e-3);
        let pi: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let b = sample_belief(&pi, alpha, &mut seeded(seed)).unwrap();
        prop_assert!((b.p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for (p, w) in b.p.iter().zip(&pi) {
            prop_assert!(*p >= 0.0);
            if *w == 0.0 {
                prop_assert_eq!(*p, 0.0);
            }
        }
    }

    #[test]
    fn settlement_pays_out_the_whole_pool(
        analytical in prop::collection::vec(0u32..50, 2..8),
        random_seed in any::<u64>(),
        pool in 1.0..1e6f64,
    ) {
        let n = analytical.len();
        let random: Vec<u32> = (0..n).map(|i| ((random_seed >> (i * 3)) & 7) as u32).collect();
        let sel = Selections { analytical, random };
        let winners = vec![(random_seed as usize) % n];
        let out = settle(pool, &winners, &sel).unwrap();
        if out.rollover {
            prop_assert_eq!(sel.total(winners[0]), 0);
            prop_assert_eq!(out.total_paid(), 0.0);
        } else {
            prop_assert!((out.total_paid() - pool).abs() < 1e-9 * pool);
        }
    }

    #[test]
    fn impact_boost_never_lowers_the_team(p in 1.0..1000.0f64, s in 0.0..0.5f64, i in 0.0..400.0f64) {
        let b = boosted_score(p, s, i);
        prop_assert!(b >= p - 1e-9 * p);
        if i <= s * p {
            prop_assert!((b - p).abs() <= 1e-9 * p);
        }
    }

    #[test]
    fn impact_augmented_total_dominates(points in prop::collection::vec(0.0..150.0f64, 11), impact in 0.0..200.0f64) {
        let total: f64 = points.iter().sum();
        prop_assert!(impact_augment(&points, impact) >= total - 1e-9);
    }

    #[test]
    fn fantasy_points_are_linear_in_weights(
        w1 in prop::collection::vec(-5.0..30.0f64, 13),
        w2 in prop::collection::vec(-5.0..30.0f64, 13),
        c in -3.0..3.0f64,
        stats in (0u32..150, 0u32..15, 0u32..10, 0u32..6, 0u32..4, 0u32..3),
    ) {
        let row = row_with(stats.0, stats.1, stats.2, stats.3, stats.4, stats.5);
        let mix: Vec<f64> = w1.iter().zip(&w2).map(|(a, b)| a + c * b).collect();
        let lhs = fantasy_points(&row, &rules_from(&mix));
        let rhs = fantasy_points(&row, &rules_from(&w1)) + c * fantasy_points(&row, &rules_from(&w2));
        prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()));
        prop_assert_eq!(StatLine::from_row(&row).0[12], 1.0);
    }

    #[test]
    fn expert_teams_share_the_common_core(
        values in prop::collection::vec((0.0..100.0f64, 0.0..100.0f64, 1u8..4), 20),
        n_common in 1usize..=7,
    ) {
        let mut values = values;
        values.push((40.0, 40.0, 0));
        values.push((30.0, 30.0, 0));
        let pool = pool_from(&values);
        let constraints = CompositionConstraints { min_wicketkeepers: Some(1), ..Default::default() };
        let core = select_common_core(&pool, n_common, &constraints).unwrap();
        prop_assert_eq!(core.len(), n_common);
        let teams: Vec<_> = Expert::ALL
            .iter()
            .map(|&s| build_expert_team(s, &core, &pool, n_common).unwrap())
            .collect();
        for t in &teams {
            prop_assert_eq!(t.players.len(), 11);
            prop_assert!(core.iter().all(|c| t.contains(c)));
        }
        for a in 0..teams.len() {
            for b in a + 1..teams.len() {
                let shared = teams[a].players.iter().filter(|p| teams[b].contains(p)).count();
                prop_assert!(shared >= n_common);
            }
        }
    }

    #[test]
    fn pure_users_are_deterministic(
        values in prop::collection::vec((0.0..100.0f64, 0.0..100.0f64, 1u8..4), 22),
        seed_a in any::<u64>(),
        seed_b in any::<u64>(),
    ) {
        let pool = pool_from(&values);
        let core = select_common_core(&pool, 4, &CompositionConstraints::default()).unwrap();
        let teams: Vec<_> = Expert::ALL.iter().map(|&s| build_expert_team(s, &core, &pool, 4).unwrap()).collect();
        let metrics: HashMap<String, PlayerMetrics> = pool.iter().map(|c| (c.player_id.clone(), c.metrics.clone())).collect();
        for strat in UserStrategy::defaults() {
            let a = user_pick(&strat, &teams, &metrics, Multipliers::default(), 0.0, &mut seeded(seed_a));
            let b = user_pick(&strat, &teams, &metrics, Multipliers::default(), 0.0, &mut seeded(seed_b));
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn gain_against_itself_is_zero(payouts in prop::collection::vec(0.0..1e4f64, 1..20)) {
        let series: Vec<(String, f64)> = payouts.iter().enumerate().map(|(i, &p)| (format!("m{i}"), p)).collect();
        let g = gain_metrics(&series, &series).unwrap();
        prop_assert!(g.matchwise.iter().all(|(_, v)| *v == 0.0));
        prop_assert_eq!(g.tournament, 0.0);
    }

    #[test]
    fn ols_residuals_are_orthogonal(rows in prop::collection::vec((-50.0..50.0f64, 0.0..10.0f64, -100.0..100.0f64), 8..40)) {
        let d = design_from(&rows);
        let fit = match ols_fit(&d) {
            Ok(f) => f,
            Err(_) => return Ok(()),
        };
        let scale = fit.residuals.iter().map(|r| r * r).sum::<f64>().sqrt().max(1.0);
        let x = d.with_intercept();
        for j in 0..x.cols() {
            let dot: f64 = (0..d.n()).map(|i| x[(i, j)] * fit.residuals[i]).sum();
            let norm = (0..d.n()).map(|i| x[(i, j)].powi(2)).sum::<f64>().sqrt();
            prop_assert!(dot.abs() <= 1e-7 * scale * norm.max(1.0), "column {} dot {}", j, dot);
        }
    }

    #[test]
    fn quadratic_term_never_lowers_r_squared(rows in prop::collection::vec((-5.0..5.0f64, 0.0..10.0f64, -10.0..10.0f64), 10..40)) {
        let d = design_from(&rows);
        let q = quadratic_design(&d, "a").unwrap();
        if let (Ok(lin), Ok(quad)) = (ols_fit(&d), ols_fit(&q)) {
            prop_assert!(quad.r_squared >= lin.r_squared - 1e-9);
        }
    }

    #[test]
    fn f_statistic_scales_quadratically(
        config in prop::collection::vec(-10.0..10.0f64, 3..30),
        iid in prop::collection::vec(-10.0..10.0f64, 3..30),
        c in 0.1..10.0f64,
    ) {
        let base = f_statistic(&config, &iid).unwrap();
        let scaled: Vec<f64> = config.iter().map(|x| x * c).collect();
        let f = f_statistic(&scaled, &iid).unwrap();
        match (base, f) {
            (Some(b), Some(s)) => prop_assert!((s - c * c * b).abs() <= 1e-9 * s.abs().max(1.0)),
            (None, None) => {}
            other => prop_assert!(false, "mismatch {:?}", other),
        }
    }

    #[test]
    fn cross_tab_margins_agree_with_raw_means(
        records in prop::collection::vec((0u8..3, 0u8..4, (-400i32..400).prop_map(|v| v as f64 / 4.0)), 1..60),
    ) {
        let mut t = ResultTable::new(&["r", "c", "v"]);
        for &(r, c, v) in &records {
            t.push(vec![Cell::Uint(r as u64), Cell::Uint(c as u64), Cell::Float(v)]);
        }
        let frame = Frame::from_table(&t);
        let tab = cross_tab(&frame, "r", "c", "v").unwrap();
        for (label, margin) in tab.row_labels.iter().zip(tab.row_margins()) {
            let vals: Vec<f64> = records.iter().filter(|x| x.0.to_string() == *label).map(|x| x.2).collect();
            let raw = vals.iter().sum::<f64>() / vals.len() as f64;
            prop_assert!((margin.unwrap() - raw).abs() < 1e-6);
        }
        let total: usize = tab.counts.iter().flatten().sum();
        prop_assert_eq!(total, records.len());
    }

    #[test]
    fn csv_round_trip_is_idempotent(values in prop::collection::vec((-1e6..1e6f64, any::<i32>()), 1..30)) {
        let mut t = ResultTable::new(&["x", "n"]);
        for &(x, n) in &values {
            t.push(vec![Cell::Float(x), Cell::Int(n as i64)]);
        }
        let first = t.to_csv_string().unwrap();
        let frame = Frame::from_table(&t);
        let mut again = ResultTable::new(&["x", "n"]);
        for row in &frame.rows {
            again.push(row.iter().map(|s| Cell::Text(s.clone())).collect());
        }
        prop_assert_eq!(first, again.to_csv_string().unwrap());
    }

    #[test]
    fn cholesky_reconstructs_spd(entries in prop::collection::vec(-3.0..3.0f64, 16), n in 1usize..5) {
        let a = Matrix::from_vec(n, n, entries[..n * n].to_vec());
        let mut spd = a.transpose().matmul(&a);
        for i in 0..n {
            spd[(i, i)] += 0.5;
        }
        let l = cholesky(&spd, 1e-12).unwrap();
        let back = l.matmul(&l.transpose());
        for i in 0..n {
            for j in 0..n {
                prop_assert!((back[(i, j)] - spd[(i, j)]).abs() < 1e-9);
                if j > i {
                    prop_assert_eq!(l[(i, j)], 0.0);
                }
            }
        }
        let oracle = nalgebra::DMatrix::from_fn(n, n, |i, j| spd[(i, j)]).cholesky().unwrap();
        for i in 0..n {
            for j in 0..=i {
                prop_assert!((oracle.l()[(i, j)] - l[(i, j)]).abs() < 1e-9);
            }
        }
    }
}
