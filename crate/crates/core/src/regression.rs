//! Ordinary least squares with significance reporting, variance ratios and
//! cross-tabulation of result frames.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_inverse, cholesky_solve, mean, sample_variance, Matrix};
use crate::special::{f_survival, student_t_two_sided};
use crate::table::{Cell, ResultTable};

pub const INTERCEPT: &str = "Constant";

/// Relative pivot tolerance on the column-normalized Gram matrix.
const RANK_TOL: f64 = 1e-10;

/// Response and regressors, without the intercept column.
#[derive(Clone, Debug, PartialEq)]
pub struct Design {
    pub response: String,
    pub labels: Vec<String>,
    pub y: Vec<f64>,
    /// `n × p` regressor values.
    pub x: Matrix,
}

impl Design {
    pub fn new(response: &str, labels: &[&str], y: Vec<f64>, x: Matrix) -> Result<Self> {
        if x.rows() != y.len() || x.cols() != labels.len() {
            return Err(Error::data(format!(
                "design shape mismatch: {} responses, {}×{} regressors, {} labels",
                y.len(),
                x.rows(),
                x.cols(),
                labels.len()
            )));
        }
        Ok(Design {
            response: response.to_string(),
            labels: labels.iter().map(|s| s.to_string()).collect(),
            y,
            x,
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.labels.len()
    }

    /// Regressors with a leading column of ones.
    pub fn with_intercept(&self) -> Matrix {
        let (n, p) = (self.n(), self.p());
        let mut m = Matrix::zeros(n, p + 1);
        for i in 0..n {
            m[(i, 0)] = 1.0;
            m.row_mut(i)[1..].copy_from_slice(self.x.row(i));
        }
        m
    }
}

/// Appends the square of `var` as a new column named `var2`.
pub fn quadratic_design(design: &Design, var: &str) -> Result<Design> {
    let j = design
        .labels
        .iter()
        .position(|l| l == var)
        .ok_or_else(|| Error::config(format!("no regressor named `{var}`")))?;
    let (n, p) = (design.n(), design.p());
    let mut x = Matrix::zeros(n, p + 1);
    for i in 0..n {
        x.row_mut(i)[..p].copy_from_slice(design.x.row(i));
        x[(i, p)] = design.x[(i, j)] * design.x[(i, j)];
    }
    let mut labels = design.labels.clone();
    labels.push(format!("{var}2"));
    Ok(Design {
        response: design.response.clone(),
        labels,
        y: design.y.clone(),
        x,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum SeKind {
    #[default]
    Classical,
    /// Heteroskedasticity-consistent, with the `n / (n − k)` correction.
    Hc1,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegressionFit {
    pub response: String,
    /// Term labels, starting with the intercept.
    pub labels: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub p_values: Vec<f64>,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub f_statistic: f64,
    pub f_p_value: f64,
    pub n: usize,
    pub df_resid: usize,
    pub sigma2: f64,
    pub se_kind: SeKind,
    pub residuals: Vec<f64>,
}

impl RegressionFit {
    pub fn coefficient(&self, label: &str) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.coefficients[i])
    }

    pub fn p_value(&self, label: &str) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.p_values[i])
    }

    /// Coefficient table: `term, B, std_error, t, sig`.
    pub fn to_table(&self) -> ResultTable {
        let mut t = ResultTable::new(&["term", "B", "std_error", "t", "sig"]);
        for i in 0..self.labels.len() {
            t.push(vec![
                Cell::from(self.labels[i].as_str()),
                Cell::Float(self.coefficients[i]),
                Cell::Float(self.std_errors[i]),
                Cell::Float(self.t_stats[i]),
                Cell::Float(self.p_values[i]),
            ]);
        }
        t
    }

    /// Coefficient table followed by model fit statistics.
    pub fn report(&self) -> String {
        let mut out = format!("Dependent variable: {}\n", self.response);
        out.push_str(&self.to_table().to_text());
        out.push_str(&format!(
            "\nN = {}  R² = {:.4}  adj. R² = {:.4}  F({}, {}) = {:.4}  p = {:.4e}  SE: {}\n",
            self.n,
            self.r_squared,
            self.adj_r_squared,
            self.labels.len() - 1,
            self.df_resid,
            self.f_statistic,
            self.f_p_value,
            match self.se_kind {
                SeKind::Classical => "classical",
                SeKind::Hc1 => "HC1",
            }
        ));
        out
    }
}

pub fn ols_fit(design: &Design) -> Result<RegressionFit> {
    ols_fit_with(design, SeKind::Classical)
}

/// Least squares via the normal equations on unit-norm columns.
pub fn ols_fit_with(design: &Design, se_kind: SeKind) -> Result<RegressionFit> {
    let (n, p) = (design.n(), design.p());
    if n < p + 2 {
        return Err(Error::data(format!("{n} rows cannot support {p} regressors plus intercept")));
    }
    if design.y.iter().chain(design.x.as_slice()).any(|v| !v.is_finite()) {
        return Err(Error::data("design contains non-finite values"));
    }
    let x = design.with_intercept();
    let k = p + 1;
    let mut labels = vec![INTERCEPT.to_string()];
    labels.extend(design.labels.iter().cloned());

    let scale: Vec<f64> = (0..k)
        .map(|j| {
            let norm = x.column(j).iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                norm
            } else {
                1.0
            }
        })
        .collect();
    let mut xs = x.clone();
    for i in 0..n {
        for j in 0..k {
            xs[(i, j)] /= scale[j];
        }
    }
    let xt = xs.transpose();
    let gram = xt.matmul(&xs);
    let chol = cholesky(&gram, RANK_TOL).map_err(|e| match e {
        Error::NotPositiveDefinite { pivot } => Error::RankDeficient {
            column: labels[pivot].clone(),
        },
        other => other,
    })?;
    let xty = xt.mul_vec(&design.y);
    let beta_s = cholesky_solve(&chol, &xty);
    let coefficients: Vec<f64> = beta_s.iter().zip(&scale).map(|(b, s)| b / s).collect();

    let fitted = x.mul_vec(&coefficients);
    let residuals: Vec<f64> = design.y.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let ybar = mean(&design.y);
    let tss: f64 = design.y.iter().map(|y| (y - ybar) * (y - ybar)).sum();
    let df_resid = n - k;
    let sigma2 = rss / df_resid as f64;
    // Rounding leaves tiny residuals on exact fits; treat them as zero.
    let exact = rss <= 1e-24 * tss.max(ybar * ybar * n as f64);
    let (rss, sigma2) = if exact { (0.0, 0.0) } else { (rss, sigma2) };

    let inv_s = cholesky_inverse(&chol);
    let cov_s = match se_kind {
        SeKind::Classical => {
            Matrix::from_vec(k, k, inv_s.as_slice().iter().map(|v| v * sigma2).collect())
        }
        SeKind::Hc1 => {
            let mut meat = Matrix::zeros(k, k);
            for r in 0..n {
                let e2 = residuals[r] * residuals[r];
                let row = xs.row(r);
                for i in 0..k {
                    for j in 0..k {
                        meat[(i, j)] += e2 * row[i] * row[j];
                    }
                }
            }
            let mut c = inv_s.matmul(&meat).matmul(&inv_s);
            let adj = n as f64 / df_resid as f64;
            for i in 0..k {
                for j in 0..k {
                    c[(i, j)] *= adj;
                }
            }
            c
        }
    };
    let std_errors: Vec<f64> = (0..k).map(|j| cov_s[(j, j)].max(0.0).sqrt() / scale[j]).collect();
    let t_stats: Vec<f64> = coefficients
        .iter()
        .zip(&std_errors)
        .map(|(b, se)| if *se == 0.0 && *b == 0.0 { 0.0 } else { b / se })
        .collect();
    let p_values = t_stats.iter().map(|t| student_t_two_sided(*t, df_resid as f64)).collect();

    let r_squared = if tss > 0.0 { (1.0 - rss / tss).clamp(0.0, 1.0) } else { 0.0 };
    let adj_r_squared = 1.0 - (1.0 - r_squared) * (n - 1) as f64 / df_resid as f64;
    let f_statistic = if tss == 0.0 {
        0.0
    } else if rss == 0.0 {
        f64::INFINITY
    } else {
        ((tss - rss) / p as f64) / sigma2
    };
    let f_p_value = f_survival(f_statistic, p as f64, df_resid as f64);

    Ok(RegressionFit {
        response: design.response.clone(),
        labels,
        coefficients,
        std_errors,
        t_stats,
        p_values,
        r_squared,
        adj_r_squared,
        f_statistic,
        f_p_value,
        n,
        df_resid,
        sigma2,
        se_kind,
        residuals,
    })
}

/// Ratio of sample variances `var(config) / var(iid)`; `None` when the
/// reference variance is zero.
pub fn f_statistic(config: &[f64], iid: &[f64]) -> Result<Option<f64>> {
    if config.is_empty() || iid.is_empty() {
        return Err(Error::data("variance ratio needs non-empty inputs"));
    }
    let v = |xs: &[f64]| sample_variance(xs).unwrap_or(0.0);
    let denom = v(iid);
    if denom == 0.0 {
        return Ok(None);
    }
    Ok(Some(v(config) / denom))
}

/// String-valued table loaded from CSV, with numeric column access.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Frame {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Frame {
    pub fn read_csv(path: &Path) -> Result<Frame> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
        let columns = reader
            .headers()
            .map_err(|e| Error::csv(path, e))?
            .iter()
            .map(str::to_string)
            .collect();
        let rows = reader
            .records()
            .map(|r| r.map(|r| r.iter().map(str::to_string).collect()).map_err(|e| Error::csv(path, e)))
            .collect::<Result<Vec<Vec<String>>>>()?;
        Ok(Frame { columns, rows })
    }

    pub fn from_table(t: &ResultTable) -> Frame {
        Frame {
            columns: t.columns.clone(),
            rows: t.rows.iter().map(|r| r.iter().map(Cell::render).collect()).collect(),
        }
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::config(format!("no column named `{name}`")))
    }

    pub fn text(&self, name: &str) -> Result<Vec<&str>> {
        let j = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r[j].as_str()).collect())
    }

    pub fn numeric(&self, name: &str) -> Result<Vec<f64>> {
        let j = self.column_index(name)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r[j].trim()
                    .parse::<f64>()
                    .map_err(|_| Error::data(format!("row {}: column `{name}` is not numeric: `{}`", i + 1, r[j])))
            })
            .collect()
    }
}

/// A regressor in a model formula.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Term {
    pub column: String,
    pub squared: bool,
}

impl Term {
    pub fn label(&self) -> String {
        if self.squared {
            format!("{}2", self.column)
        } else {
            self.column.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Formula {
    pub response: String,
    pub terms: Vec<Term>,
}

impl Formula {
    /// Parses `y ~ a + b + b^2`. A term such as `C2` means the square of `C`
    /// when the frame has a `C` column but no `C2` column.
    pub fn parse(text: &str, columns: &[String]) -> Result<Formula> {
        let (lhs, rhs) = text
            .split_once('~')
            .ok_or_else(|| Error::config(format!("formula `{text}` has no `~`")))?;
        let response = lhs.trim().to_string();
        if response.is_empty() {
            return Err(Error::config("formula has no response"));
        }
        let has = |c: &str| columns.iter().any(|x| x == c);
        let mut terms = Vec::new();
        for raw in rhs.split('+').map(str::trim) {
            if raw.is_empty() {
                return Err(Error::config(format!("empty term in formula `{text}`")));
            }
            let term = if let Some(base) = raw.strip_suffix("^2") {
                Term { column: base.trim().to_string(), squared: true }
            } else if !has(raw) && raw.ends_with('2') && has(&raw[..raw.len() - 1]) {
                Term { column: raw[..raw.len() - 1].to_string(), squared: true }
            } else {
                Term { column: raw.to_string(), squared: false }
            };
            if !has(&term.column) {
                return Err(Error::config(format!("formula term `{raw}` names no column")));
            }
            terms.push(term);
        }
        if !has(&response) {
            return Err(Error::config(format!("response `{response}` names no column")));
        }
        Ok(Formula { response, terms })
    }

    pub fn design(&self, frame: &Frame) -> Result<Design> {
        let y = frame.numeric(&self.response)?;
        let cols = self
            .terms
            .iter()
            .map(|t| {
                let v = frame.numeric(&t.column)?;
                Ok(if t.squared { v.iter().map(|x| x * x).collect() } else { v })
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        let n = y.len();
        let p = cols.len();
        let mut x = Matrix::zeros(n, p);
        for (j, col) in cols.iter().enumerate() {
            for i in 0..n {
                x[(i, j)] = col[i];
            }
        }
        let labels: Vec<String> = self.terms.iter().map(Term::label).collect();
        let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
        Design::new(&self.response, &refs, y, x)
    }
}

/// Means of `value` over rows grouped by two keys.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossTab {
    pub row_key: String,
    pub col_key: String,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    /// `None` marks an empty cell.
    pub means: Vec<Vec<Option<f64>>>,
    pub counts: Vec<Vec<usize>>,
}

impl CrossTab {
    /// Row means weighted by cell counts.
    pub fn row_margins(&self) -> Vec<Option<f64>> {
        self.means
            .iter()
            .zip(&self.counts)
            .map(|(m, c)| weighted(m.iter().zip(c)))
            .collect()
    }

    pub fn col_margins(&self) -> Vec<Option<f64>> {
        (0..self.col_labels.len())
            .map(|j| weighted(self.means.iter().zip(&self.counts).map(|(m, c)| (&m[j], &c[j]))))
            .collect()
    }

    pub fn to_table(&self) -> ResultTable {
        let mut columns = vec![format!("{}\\{}", self.row_key, self.col_key)];
        columns.extend(self.col_labels.iter().cloned());
        let refs: Vec<&str> = columns.iter().map(String::as_str).collect();
        let mut t = ResultTable::new(&refs);
        for (label, row) in self.row_labels.iter().zip(&self.means) {
            let mut cells = vec![Cell::from(label.as_str())];
            cells.extend(row.iter().map(|&m| Cell::from(m)));
            t.push(cells);
        }
        t
    }
}

fn weighted<'a>(cells: impl Iterator<Item = (&'a Option<f64>, &'a usize)>) -> Option<f64> {
    let (mut s, mut n) = (0.0, 0usize);
    for (m, c) in cells {
        if let Some(m) = m {
            s += m * *c as f64;
            n += c;
        }
    }
    (n > 0).then(|| s / n as f64)
}

pub fn cross_tab(frame: &Frame, row_key: &str, col_key: &str, value: &str) -> Result<CrossTab> {
    let rk = frame.text(row_key)?;
    let ck = frame.text(col_key)?;
    let v = frame.numeric(value)?;
    let sort_labels = |keys: &[&str]| {
        let mut labels: Vec<String> = keys.iter().map(|s| s.to_string()).collect();
        labels.sort_by(|a, b| match (a.parse::<f64>(), b.parse::<f64>()) {
            (Ok(x), Ok(y)) => x.total_cmp(&y),
            _ => a.cmp(b),
        });
        labels.dedup();
        labels
    };
    let row_labels = sort_labels(&rk);
    let col_labels = sort_labels(&ck);
    let mut sums: BTreeMap<(usize, usize), (f64, usize)> = BTreeMap::new();
    for i in 0..v.len() {
        let r = row_labels.iter().position(|l| l == rk[i]).expect("label present");
        let c = col_labels.iter().position(|l| l == ck[i]).expect("label present");
        let e = sums.entry((r, c)).or_insert((0.0, 0));
        e.0 += v[i];
        e.1 += 1;
    }
    let mut means = vec![vec![None; col_labels.len()]; row_labels.len()];
    let mut counts = vec![vec![0; col_labels.len()]; row_labels.len()];
    for ((r, c), (s, n)) in sums {
        means[r][c] = Some(s / n as f64);
        counts[r][c] = n;
    }
    Ok(CrossTab {
        row_key: row_key.to_string(),
        col_key: col_key.to_string(),
        row_labels,
        col_labels,
        means,
        counts,
    })
}
