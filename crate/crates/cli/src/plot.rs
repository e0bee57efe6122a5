//! Minimal static SVG line charts.
//!
//! Every chart maps data into a fixed frame and records the mapping on the
//! root element (`data-frame`, `data-x-min`, ...), so coordinates can be read
//! back from the file.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 690.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 390.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl Series {
    pub fn new(name: impl Into<String>, xs: Vec<f64>, ys: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            xs,
            ys,
        }
    }
}

struct Range {
    lo: f64,
    hi: f64,
}

impl Range {
    fn of<'a>(values: impl Iterator<Item = &'a f64>) -> Self {
        let (lo, hi) = values
            .filter(|v| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(*v), hi.max(*v))
            });
        if !lo.is_finite() {
            return Range { lo: 0.0, hi: 1.0 };
        }
        if hi - lo <= f64::EPSILON * lo.abs().max(1.0) {
            return Range {
                lo: lo - 0.5,
                hi: hi + 0.5,
            };
        }
        Range { lo, hi }
    }

    fn frac(&self, v: f64) -> f64 {
        (v - self.lo) / (self.hi - self.lo)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Renders each series as a polyline; non-finite points break the line.
fn render(title: &str, x_label: &str, y_label: &str, series: &[Series], y_scale: &str) -> String {
    let xr = Range::of(series.iter().flat_map(|s| s.xs.iter()));
    let yr = Range::of(series.iter().flat_map(|s| s.ys.iter()));
    let px = |x: f64| LEFT + xr.frac(x) * (RIGHT - LEFT);
    let py = |y: f64| BOTTOM - yr.frac(y) * (BOTTOM - TOP);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" data-frame="{LEFT} {TOP} {RIGHT} {BOTTOM}" data-x-min="{:e}" data-x-max="{:e}" data-y-min="{:e}" data-y-max="{:e}" data-y-scale="{y_scale}">"#,
        xr.lo, xr.hi, yr.lo, yr.hi
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        RIGHT - LEFT,
        BOTTOM - TOP
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
        (LEFT + RIGHT) / 2.0,
        HEIGHT - 14.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 16 {})">{}</text>"#,
        (TOP + BOTTOM) / 2.0,
        (TOP + BOTTOM) / 2.0,
        escape(y_label)
    );
    for (v, anchor, x, y) in [
        (xr.lo, "start", LEFT, BOTTOM + 16.0),
        (xr.hi, "end", RIGHT, BOTTOM + 16.0),
    ] {
        let _ = writeln!(
            svg,
            r#"<text x="{x}" y="{y}" text-anchor="{anchor}" font-family="sans-serif" font-size="10">{v:.3}</text>"#
        );
    }
    for (v, y) in [(yr.lo, BOTTOM), (yr.hi, TOP + 8.0)] {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{y}" text-anchor="end" font-family="sans-serif" font-size="10">{v:.3}</text>"#,
            LEFT - 4.0
        );
    }

    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut runs: Vec<Vec<String>> = vec![Vec::new()];
        for (x, y) in s.xs.iter().zip(&s.ys) {
            if x.is_finite() && y.is_finite() {
                runs.last_mut()
                    .expect("non-empty")
                    .push(format!("{:.3},{:.3}", px(*x), py(*y)));
            } else if !runs.last().expect("non-empty").is_empty() {
                runs.push(Vec::new());
            }
        }
        for pts in runs.iter().filter(|r| !r.is_empty()) {
            let _ = writeln!(
                svg,
                r#"<polyline data-series="{}" fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#,
                escape(&s.name),
                pts.join(" ")
            );
        }
        if series.len() <= 8 {
            let y = TOP + 14.0 + 14.0 * k as f64;
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{y}" text-anchor="end" font-family="sans-serif" font-size="10" fill="{color}">{}</text>"#,
                RIGHT - 6.0,
                escape(&s.name)
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    render(title, x_label, y_label, series, "linear")
}

/// Plots natural logs of the values; zero and negative values are gaps.
pub fn error_plot(title: &str, series: &[Series]) -> String {
    let logged: Vec<Series> = series
        .iter()
        .map(|s| {
            let ys =
                s.ys.iter()
                    .map(|v| if *v > 0.0 { v.ln() } else { f64::NAN })
                    .collect();
            Series::new(s.name.clone(), s.xs.clone(), ys)
        })
        .collect();
    render(title, "t", "ln error", &logged, "ln")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_values_split_the_log_line() {
        let s = Series::new("e", vec![0.0, 1.0, 2.0, 3.0], vec![1.0, 0.0, 0.5, 0.25]);
        let svg = error_plot("e", &[s]);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains(r#"data-y-scale="ln""#));
    }

    #[test]
    fn constant_series_has_a_finite_frame() {
        let s = Series::new("c", vec![0.0, 1.0], vec![2.0, 2.0]);
        let svg = line_plot("c", "t", "y", &[s]);
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }

    #[test]
    fn names_are_escaped() {
        let s = Series::new("a<b", vec![0.0, 1.0], vec![0.0, 1.0]);
        assert!(line_plot("x & y", "t", "y", &[s]).contains("a&lt;b"));
    }
}
