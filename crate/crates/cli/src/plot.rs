//! Minimal static SVG charts: multi-series line chart and grouped histogram.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 60.0;
const COLOURS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        H - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (H - 2.0 * MARGIN)
    }

    fn axes(&self, svg: &mut String, x_label: &str, y_label: &str) {
        let (x0, x1, y0, y1) = (MARGIN, W - MARGIN, H - MARGIN, MARGIN);
        let _ = write!(
            svg,
            r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/><line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#
        );
        for i in 0..=4 {
            let fx = self.x.0 + (self.x.1 - self.x.0) * f64::from(i) / 4.0;
            let fy = self.y.0 + (self.y.1 - self.y.0) * f64::from(i) / 4.0;
            let _ = write!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">{}</text><text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{}</text>"#,
                self.px(fx),
                y0 + 16.0,
                tick(fx),
                x0 - 6.0,
                self.py(fy) + 4.0,
                tick(fy)
            );
        }
        let _ = write!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="13" text-anchor="middle">{}</text><text x="16" y="{:.1}" font-size="13" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
            W / 2.0,
            H - 16.0,
            escape(x_label),
            H / 2.0,
            H / 2.0,
            escape(y_label)
        );
    }
}

fn tick(v: f64) -> String {
    if v.abs() >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open() -> String {
    format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}"><rect width="100%" height="100%" fill="white"/>"#
    )
}

fn legend(svg: &mut String, names: &[&str]) {
    for (i, name) in names.iter().enumerate() {
        let y = MARGIN + 16.0 * i as f64;
        let _ = write!(
            svg,
            r#"<rect x="{}" y="{}" width="10" height="10" fill="{}"/><text x="{}" y="{}" font-size="11">{}</text>"#,
            W - MARGIN - 110.0,
            y - 9.0,
            COLOURS[i % COLOURS.len()],
            W - MARGIN - 95.0,
            y,
            escape(name)
        );
    }
}

/// One polyline per series, shared axes.
pub fn line_chart(y_label: &str, x_label: &str, series: &[(&str, Vec<(f64, f64)>)]) -> String {
    let frame = Frame {
        x: bounds(series.iter().flat_map(|(_, s)| s.iter().map(|p| p.0))),
        y: bounds(series.iter().flat_map(|(_, s)| s.iter().map(|p| p.1))),
    };
    let mut svg = open();
    frame.axes(&mut svg, x_label, y_label);
    for (i, (_, points)) in series.iter().enumerate() {
        let path: Vec<String> = points.iter().map(|&(x, y)| format!("{:.1},{:.1}", frame.px(x), frame.py(y))).collect();
        let _ = write!(
            svg,
            r#"<polyline fill="none" stroke="{}" stroke-width="2" points="{}"/>"#,
            COLOURS[i % COLOURS.len()],
            path.join(" ")
        );
    }
    legend(&mut svg, &series.iter().map(|(n, _)| *n).collect::<Vec<_>>());
    svg.push_str("</svg>\n");
    svg
}

/// Side-by-side bars per group over shared bins.
pub fn histogram(x_label: &str, groups: &[(&str, Vec<f64>)], bins: usize) -> String {
    let bins = bins.max(1);
    let (lo, hi) = bounds(groups.iter().flat_map(|(_, v)| v.iter().copied()));
    let width = (hi - lo) / bins as f64;
    let counts: Vec<Vec<usize>> = groups
        .iter()
        .map(|(_, values)| {
            let mut c = vec![0; bins];
            for &v in values {
                c[(((v - lo) / width) as usize).min(bins - 1)] += 1;
            }
            c
        })
        .collect();
    let top = counts.iter().flatten().copied().max().unwrap_or(0).max(1);
    let frame = Frame { x: (lo, hi), y: (0.0, top as f64) };
    let mut svg = open();
    frame.axes(&mut svg, x_label, "drivers");
    let slot = (frame.px(lo + width) - frame.px(lo)) / groups.len().max(1) as f64;
    for (g, c) in counts.iter().enumerate() {
        for (b, &n) in c.iter().enumerate() {
            let x = frame.px(lo + b as f64 * width) + g as f64 * slot;
            let y = frame.py(n as f64);
            let _ = write!(
                svg,
                r#"<rect x="{x:.1}" y="{y:.1}" width="{:.1}" height="{:.1}" fill="{}"/>"#,
                (slot - 1.0).max(0.5),
                frame.py(0.0) - y,
                COLOURS[g % COLOURS.len()]
            );
        }
    }
    legend(&mut svg, &groups.iter().map(|(n, _)| *n).collect::<Vec<_>>());
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_chart_has_one_polyline_per_series() {
        let svg = line_chart("y", "x", &[("a", vec![(0.0, 1.0), (1.0, 2.0)]), ("b", vec![(0.0, 3.0)])]);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
    }

    #[test]
    fn histogram_counts_every_value() {
        let svg = histogram("v", &[("a", vec![1.0, 1.0, 2.0]), ("b", vec![])], 2);
        assert_eq!(svg.matches("<rect x=").count(), 4 + 2);
        let constant = histogram("v", &[("a", vec![5.0; 3])], 4);
        assert!(constant.contains("<rect"));
    }
}
