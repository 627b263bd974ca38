//! Per-player performance metrics.

use serde::{Deserialize, Serialize};

use crate::linalg::{mean, sample_variance};

/// Lookback for the risk-adjusted metric.
pub const MEAN_VAR_WINDOW: usize = 3;

/// One appearance in the scorecard history.
#[derive(Clone, Debug, PartialEq)]
pub struct Appearance {
    pub tournament: String,
    pub points: f64,
}

/// Lifetime aggregate from the career file.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CareerSummary {
    pub total_points: f64,
    pub matches: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlayerMetrics {
    pub career_points: Option<f64>,
    pub form: Option<f64>,
    pub tournament_points: Option<f64>,
    pub mean_var: Option<f64>,
}

/// Metrics from a chronologically sorted appearance history.
///
/// Career points average every known appearance, including the career
/// aggregate when one is supplied. Form averages the last `window`
/// appearances (all of them if fewer). Mean-var is the 3-appearance form minus
/// `lambda` times the sample SD of those points; the SD of a single point is 0.
pub fn compute_metrics(
    history: &[Appearance],
    career: Option<CareerSummary>,
    window: usize,
    lambda: f64,
    tournament: &str,
) -> PlayerMetrics {
    let points: Vec<f64> = history.iter().map(|a| a.points).collect();
    let (career_total, career_n) = career.map_or((0.0, 0), |c| (c.total_points, c.matches));
    let n_total = career_n as usize + points.len();
    let career_points = (n_total > 0).then(|| (career_total + points.iter().sum::<f64>()) / n_total as f64);

    let recent = |w: usize| -> Option<&[f64]> {
        (!points.is_empty() && w > 0).then(|| &points[points.len().saturating_sub(w)..])
    };
    let form = recent(window).map(mean);
    let mean_var = recent(MEAN_VAR_WINDOW).map(|last| {
        let sd = sample_variance(last).map_or(0.0, f64::sqrt);
        mean(last) - lambda * sd
    });
    let in_tournament: Vec<f64> = history
        .iter()
        .filter(|a| a.tournament == tournament)
        .map(|a| a.points)
        .collect();
    let tournament_points = (!in_tournament.is_empty()).then(|| mean(&in_tournament));

    PlayerMetrics {
        career_points,
        form,
        tournament_points,
        mean_var,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hist(points: &[f64]) -> Vec<Appearance> {
        points
            .iter()
            .map(|&p| Appearance { tournament: "T".into(), points: p })
            .collect()
    }

    #[test]
    fn constant_history() {
        let m = compute_metrics(&hist(&[60.0; 8]), None, 5, 0.5, "T");
        assert_eq!(m.career_points, Some(60.0));
        assert_eq!(m.form, Some(60.0));
        assert_eq!(m.tournament_points, Some(60.0));
        assert_eq!(m.mean_var, Some(60.0));
    }

    #[test]
    fn mean_var_penalizes_volatility() {
        let m = compute_metrics(&hist(&[0.0, 30.0, 60.0, 90.0]), None, 5, 0.5, "T");
        assert_eq!(m.mean_var, Some(45.0));
        assert_eq!(m.form, Some(45.0));
    }

    #[test]
    fn single_appearance() {
        let m = compute_metrics(&hist(&[40.0]), None, 5, 0.5, "T");
        assert_eq!(m.career_points, Some(40.0));
        assert_eq!(m.form, Some(40.0));
        assert_eq!(m.tournament_points, Some(40.0));
        assert_eq!(m.mean_var, Some(40.0));
    }

    #[test]
    fn empty_history_is_undefined() {
        let m = compute_metrics(&[], None, 5, 0.5, "T");
        assert_eq!(m, PlayerMetrics::default());
        let with_career = compute_metrics(
            &[],
            Some(CareerSummary { total_points: 300.0, matches: 10 }),
            5,
            0.5,
            "T",
        );
        assert_eq!(with_career.career_points, Some(30.0));
        assert_eq!(with_career.form, None);
    }

    #[test]
    fn form_window_and_tournament_subset() {
        let mut h = hist(&[10.0, 20.0, 30.0, 40.0, 50.0, 60.0]);
        h[0].tournament = "Other".into();
        let m = compute_metrics(&h, Some(CareerSummary { total_points: 0.0, matches: 4 }), 2, 0.5, "T");
        assert_eq!(m.form, Some(55.0));
        assert_eq!(m.tournament_points, Some(40.0));
        assert_eq!(m.career_points, Some(21.0));
    }
}
