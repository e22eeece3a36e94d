//! Static SVG line chart for losses against VaR forecasts.

use std::fmt::Write as _;

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 48.0;
const COLORS: [&str; 7] = [
    "#9e9e9e", "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
];

/// Renders equally spaced series over a shared x axis. The first series is
/// drawn thin and grey (losses); the rest get distinct colours.
pub fn line_chart(title: &str, first_label: &str, last_label: &str, series: &[(&str, &[f64])]) -> String {
    let n = series.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
    let finite = series.iter().flat_map(|(_, v)| v.iter()).filter(|v| v.is_finite());
    let (mut lo, mut hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        hi = lo + 1.0;
    }
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let x = |i: usize| MARGIN + plot_w * i as f64 / (n.max(2) - 1) as f64;
    let y = |v: f64| MARGIN + plot_h * (hi - v) / (hi - lo);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{MARGIN}" y="24" font-size="14">{}</text>"#, escape(title));
    let _ = writeln!(
        out,
        r##"<rect x="{MARGIN}" y="{MARGIN}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#444"/>"##
    );
    if lo < 0.0 && hi > 0.0 {
        let y0 = y(0.0);
        let _ = writeln!(
            out,
            r##"<line x1="{MARGIN}" y1="{y0:.2}" x2="{:.2}" y2="{y0:.2}" stroke="#ccc"/>"##,
            MARGIN + plot_w
        );
    }
    let _ = writeln!(out, r#"<text x="4" y="{:.2}">{hi:.4}</text>"#, MARGIN + 4.0);
    let _ = writeln!(out, r#"<text x="4" y="{:.2}">{lo:.4}</text>"#, MARGIN + plot_h);
    let _ = writeln!(out, r#"<text x="{MARGIN}" y="{:.2}">{}</text>"#, HEIGHT - 16.0, escape(first_label));
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
        MARGIN + plot_w,
        HEIGHT - 16.0,
        escape(last_label)
    );

    for (k, (name, values)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let width = if k == 0 { 0.8 } else { 1.4 };
        let mut points = String::new();
        for (i, v) in values.iter().enumerate().filter(|(_, v)| v.is_finite()) {
            let _ = write!(points, "{:.2},{:.2} ", x(i), y(*v));
        }
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="{width}" points="{}"/>"#,
            points.trim_end()
        );
        let ly = MARGIN + 14.0 + 16.0 * k as f64;
        let lx = MARGIN + plot_w - 110.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{ly:.2}">{}</text>"#,
            ly - 4.0,
            lx + 18.0,
            ly - 4.0,
            lx + 24.0,
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_one_polyline_per_series() {
        let loss = [0.01, -0.02, 0.03];
        let var = [0.02, 0.02, 0.025];
        let svg = line_chart("a < b", "2001-01-01", "2001-01-03", &[("loss", &loss), ("hs", &var)]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("a &lt; b"));
    }

    #[test]
    fn handles_flat_and_empty_series() {
        let flat = [1.0; 4];
        assert!(line_chart("t", "", "", &[("f", &flat)]).contains("<polyline"));
        assert!(line_chart("t", "", "", &[]).contains("</svg>"));
    }
}
