//! Minimal SVG line charts of result tables.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::regression::Frame;
use crate::table::format_sig6;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Picks the x column and y series for a frame when none are given: the
/// sweep `value` column (else the first column) against every
/// `mean_winnings_<i>` column (else every other numeric column).
pub fn default_columns(frame: &Frame) -> Result<(String, Vec<String>)> {
    let x = if frame.columns.iter().any(|c| c == "value") {
        "value".to_string()
    } else {
        frame.columns.first().cloned().ok_or_else(|| Error::data("table has no columns"))?
    };
    let mut ys: Vec<String> = frame
        .columns
        .iter()
        .filter(|c| c.starts_with("mean_winnings_") && !c.ends_with("_se"))
        .cloned()
        .collect();
    if ys.is_empty() {
        ys = frame
            .columns
            .iter()
            .filter(|c| **c != x && frame.numeric(c).is_ok())
            .cloned()
            .collect();
    }
    if ys.is_empty() {
        return Err(Error::data("table has no numeric series to plot"));
    }
    Ok((x, ys))
}

/// Renders `ys` against `x`. Non-numeric x values are placed at equal
/// spacing in row order; empty y cells leave gaps.
pub fn render_svg(frame: &Frame, x: &str, ys: &[String], title: &str) -> Result<String> {
    if frame.rows.is_empty() {
        return Err(Error::data("cannot plot an empty table"));
    }
    let labels = frame.text(x)?;
    let xs: Vec<f64> = match frame.numeric(x) {
        Ok(v) => v,
        Err(_) => (0..labels.len()).map(|i| i as f64).collect(),
    };
    let series = ys
        .iter()
        .map(|name| {
            let j = frame.column_index(name)?;
            Ok(frame.rows.iter().map(|r| r[j].trim().parse::<f64>().ok()).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let finite = |v: &&f64| v.is_finite();
    let all_y: Vec<f64> = series.iter().flatten().flatten().copied().collect();
    let (mut y_lo, mut y_hi) = bounds(all_y.iter().filter(finite).copied())
        .ok_or_else(|| Error::data("no numeric values to plot"))?;
    let (x_lo, mut x_hi) = bounds(xs.iter().copied()).expect("rows present");
    if x_hi == x_lo {
        x_hi = x_lo + 1.0;
    }
    if y_hi == y_lo {
        y_lo -= 1.0;
        y_hi += 1.0;
    }
    let px = |v: f64| MARGIN + (v - x_lo) / (x_hi - x_lo) * (WIDTH - 2.0 * MARGIN);
    let py = |v: f64| HEIGHT - MARGIN - (v - y_lo) / (y_hi - y_lo) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<path d="M{m} {t} V{b} H{r}" fill="none" stroke="black"/>"#,
        m = MARGIN,
        t = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    for (i, label) in labels.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            px(xs[i]),
            HEIGHT - MARGIN + 16.0,
            escape(label)
        );
    }
    for k in 0..=4 {
        let v = y_lo + (y_hi - y_lo) * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            MARGIN - 6.0,
            py(v) + 4.0,
            format_sig6(v)
        );
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 12.0, escape(x));
    for (k, (name, values)) in ys.iter().zip(&series).enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut d = String::new();
        let mut pen_up = true;
        for (xv, yv) in xs.iter().zip(values) {
            match yv.filter(|v| v.is_finite()) {
                Some(v) => {
                    let _ = write!(d, "{}{:.2} {:.2} ", if pen_up { "M" } else { "L" }, px(*xv), py(v));
                    pen_up = false;
                }
                None => pen_up = true,
            }
        }
        let _ = writeln!(s, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, d.trim_end());
        for (xv, yv) in xs.iter().zip(values) {
            if let Some(v) = yv.filter(|v| v.is_finite()) {
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, px(*xv), py(v));
            }
        }
        let ly = MARGIN + 14.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" fill="{color}">{}</text>"#,
            WIDTH - MARGIN + 4.0 - 120.0,
            ly,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn bounds(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values.fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame() -> Frame {
        Frame {
            columns: ["value", "mean_winnings_1", "mean_winnings_2"].map(String::from).to_vec(),
            rows: vec![
                ["0.1", "20", "30"].map(String::from).to_vec(),
                ["0.2", "18", ""].map(String::from).to_vec(),
            ],
        }
    }

    #[test]
    fn renders_all_series() {
        let f = frame();
        let (x, ys) = default_columns(&f).unwrap();
        assert_eq!(x, "value");
        assert_eq!(ys.len(), 2);
        let svg = render_svg(&f, &x, &ys, "a < b").unwrap();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.contains("a &lt; b"));
    }

    #[test]
    fn empty_frame_is_an_error() {
        let mut f = frame();
        f.rows.clear();
        assert!(render_svg(&f, "value", &["mean_winnings_1".into()], "").is_err());
    }
}
