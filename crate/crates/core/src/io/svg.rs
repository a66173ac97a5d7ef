//! Minimal SVG 1.1 line, scatter and stacked-bar charts.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Markers,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
}

impl Series {
    pub fn line(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series {
            name: name.into(),
            points,
            style: Style::Line,
        }
    }

    pub fn markers(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series {
            name: name.into(),
            points,
            style: Style::Markers,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Equal scale on both axes (spot diagrams).
    pub square: bool,
}

/// A bar per category, each split into signed stacked segments.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BarChart {
    pub title: String,
    pub y_label: String,
    pub categories: Vec<String>,
    pub segment_names: Vec<String>,
    /// `values[category][segment]`.
    pub values: Vec<Vec<f64>>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Round tick step giving roughly `target` intervals over `span`.
fn tick_step(span: f64, target: f64) -> f64 {
    let raw = span / target;
    let magnitude = 10f64.powf(raw.log10().floor());
    let fraction = raw / magnitude;
    let nice = if fraction < 1.5 {
        1.0
    } else if fraction < 3.0 {
        2.0
    } else if fraction < 7.0 {
        5.0
    } else {
        10.0
    };
    nice * magnitude
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= 1e-300 {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
    plot_w: f64,
    plot_h: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * self.plot_w
    }

    fn py(&self, y: f64) -> f64 {
        TOP + (self.y.1 - y) / (self.y.1 - self.y.0) * self.plot_h
    }
}

fn open(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">
<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>
<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + (WIDTH - LEFT - RIGHT) / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, frame: &Frame, x_label: Option<&str>, y_label: &str) {
    let _ = writeln!(
        out,
        r#"<rect x="{LEFT}" y="{TOP}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        frame.plot_w, frame.plot_h
    );
    let ticks = |range: (f64, f64)| {
        let step = tick_step(range.1 - range.0, 6.0);
        let first = (range.0 / step).ceil() as i64;
        let last = (range.1 / step).floor() as i64;
        (first..=last).map(move |k| k as f64 * step)
    };
    if let Some(label) = x_label {
        for t in ticks(frame.x) {
            let x = frame.px(t);
            let _ = writeln!(
                out,
                r#"<line x1="{x:.2}" y1="{b:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                TOP + frame.plot_h + 5.0,
                TOP + frame.plot_h + 18.0,
                format_tick(t),
                b = TOP + frame.plot_h,
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + frame.plot_w / 2.0,
            HEIGHT - 12.0,
            escape(label)
        );
    }
    for t in ticks(frame.y) {
        let y = frame.py(t);
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0,
            format_tick(t)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        TOP + frame.plot_h / 2.0,
        TOP + frame.plot_h / 2.0,
        escape(y_label)
    );
}

fn format_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if (1e-3..1e5).contains(&a) {
        let s = format!("{v:.6}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn legend(out: &mut String, names: &[&str]) {
    for (i, name) in names.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * i as f64;
        let x = WIDTH - RIGHT + 12.0;
        let _ = writeln!(
            out,
            r#"<rect x="{x:.2}" y="{:.2}" width="12" height="8" fill="{}"/><text x="{:.2}" y="{y:.2}">{}</text>"#,
            y - 8.0,
            PALETTE[i % PALETTE.len()],
            x + 18.0,
            escape(name)
        );
    }
}

impl Plot {
    pub fn to_svg(&self) -> String {
        let points = || self.series.iter().flat_map(|s| s.points.iter().copied());
        let mut x = padded_range(points().map(|p| p.0));
        let mut y = padded_range(points().map(|p| p.1));
        let plot_w = WIDTH - LEFT - RIGHT;
        let plot_h = HEIGHT - TOP - BOTTOM;
        if self.square {
            let scale = ((x.1 - x.0) / plot_w).max((y.1 - y.0) / plot_h);
            let (cx, cy) = ((x.0 + x.1) / 2.0, (y.0 + y.1) / 2.0);
            x = (cx - scale * plot_w / 2.0, cx + scale * plot_w / 2.0);
            y = (cy - scale * plot_h / 2.0, cy + scale * plot_h / 2.0);
        }
        let frame = Frame {
            x,
            y,
            plot_w,
            plot_h,
        };
        let mut out = String::new();
        open(&mut out, &self.title);
        axes(&mut out, &frame, Some(&self.x_label), &self.y_label);
        for (i, s) in self.series.iter().enumerate() {
            let colour = PALETTE[i % PALETTE.len()];
            let finite = s
                .points
                .iter()
                .filter(|p| p.0.is_finite() && p.1.is_finite());
            match s.style {
                Style::Line => {
                    let path: Vec<String> = finite
                        .map(|&(a, b)| format!("{:.2},{:.2}", frame.px(a), frame.py(b)))
                        .collect();
                    let _ = writeln!(
                        out,
                        r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
                        path.join(" ")
                    );
                }
                Style::Markers => {
                    for &(a, b) in finite {
                        let _ = writeln!(
                            out,
                            r#"<circle cx="{:.2}" cy="{:.2}" r="1.5" fill="{colour}"/>"#,
                            frame.px(a),
                            frame.py(b)
                        );
                    }
                }
            }
        }
        let names: Vec<&str> = self.series.iter().map(|s| s.name.as_str()).collect();
        legend(&mut out, &names);
        out.push_str("</svg>\n");
        out
    }
}

impl BarChart {
    pub fn to_svg(&self) -> String {
        // positive segments stack upward from zero, negative ones downward
        let extents = self.values.iter().flat_map(|row| {
            let up: f64 = row.iter().filter(|v| **v > 0.0).sum();
            let down: f64 = row.iter().filter(|v| **v < 0.0).sum();
            [up, down, 0.0]
        });
        let plot_w = WIDTH - LEFT - RIGHT;
        let plot_h = HEIGHT - TOP - BOTTOM;
        let frame = Frame {
            x: (0.0, self.categories.len().max(1) as f64),
            y: padded_range(extents),
            plot_w,
            plot_h,
        };
        let mut out = String::new();
        open(&mut out, &self.title);
        axes(&mut out, &frame, None, &self.y_label);
        let slot = plot_w / self.categories.len().max(1) as f64;
        for (c, (name, row)) in self.categories.iter().zip(&self.values).enumerate() {
            let x = LEFT + slot * (c as f64 + 0.15);
            let (mut up, mut down) = (0.0, 0.0);
            for (s, &v) in row.iter().enumerate() {
                if v == 0.0 || !v.is_finite() {
                    continue;
                }
                let (from, to) = if v > 0.0 {
                    up += v;
                    (up - v, up)
                } else {
                    down += v;
                    (down, down - v)
                };
                let _ = writeln!(
                    out,
                    r#"<rect x="{x:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                    frame.py(to),
                    slot * 0.7,
                    frame.py(from) - frame.py(to),
                    PALETTE[s % PALETTE.len()]
                );
            }
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                x + slot * 0.35,
                TOP + plot_h + 18.0,
                escape(name)
            );
        }
        let zero = frame.py(0.0);
        let _ = writeln!(
            out,
            r#"<line x1="{LEFT}" y1="{zero:.2}" x2="{:.2}" y2="{zero:.2}" stroke="gray"/>"#,
            LEFT + plot_w
        );
        let names: Vec<&str> = self.segment_names.iter().map(String::as_str).collect();
        legend(&mut out, &names);
        out.push_str("</svg>\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tick_steps_are_round() {
        assert_eq!(tick_step(10.0, 5.0), 2.0);
        assert_eq!(tick_step(0.7, 6.0), 0.1);
        assert_eq!(tick_step(1000.0, 6.0), 200.0);
    }

    #[test]
    fn line_plot_contains_every_series() {
        let plot = Plot {
            title: "MTF <test>".into(),
            x_label: "cycles/mm".into(),
            y_label: "modulation".into(),
            series: vec![
                Series::line("a", vec![(0.0, 1.0), (100.0, 0.5)]),
                Series::markers("b", vec![(0.0, 0.2), (f64::NAN, 0.3)]),
            ],
            square: false,
        };
        let svg = plot.to_svg();
        assert!(svg.starts_with("<?xml") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(svg.contains("MTF &lt;test&gt;"));
        assert_eq!(svg, plot.to_svg());
    }

    #[test]
    fn bar_chart_stacks_signed_segments() {
        let chart = BarChart {
            title: "t".into(),
            y_label: "waves".into(),
            categories: vec!["1".into(), "SUM".into()],
            segment_names: vec!["p".into(), "q".into()],
            values: vec![vec![1.0, -0.5], vec![0.0, 2.0]],
        };
        let svg = chart.to_svg();
        assert_eq!(svg.matches("<rect").count(), 1 + 1 + 3 + 2);
    }
}
