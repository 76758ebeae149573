//! Minimal hand-written SVG line charts. Every data series is exactly one
//! `<polyline>`; guide lines and axes use `<line>`.

use std::fmt::Write as _;

const PALETTE: &[&str] = &["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Horizontal guide lines at the given y values.
    pub guides: Vec<(f64, String)>,
    /// Categorical tick labels at integer x positions, if set.
    pub x_ticks: Vec<String>,
}

pub(crate) fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn bounds(panel: &Panel) -> (f64, f64, f64, f64) {
    let pts = panel.series.iter().flat_map(|s| s.points.iter()).filter(|p| p.0.is_finite() && p.1.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    for (g, _) in &panel.guides {
        y0 = y0.min(*g);
        y1 = y1.max(*g);
    }
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if !y0.is_finite() {
        (y0, y1) = (0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        (x0, x1) = (x0 - 0.5, x1 + 0.5);
    }
    let pad = ((y1 - y0) * 0.05).max(1e-6);
    (x0, x1, y0 - pad, y1 + pad)
}

/// Draws one panel into the box with top-left (ox, oy) and size (w, h).
fn draw_panel(out: &mut String, panel: &Panel, ox: f64, oy: f64, w: f64, h: f64) {
    let (ml, mr, mt, mb) = (70.0, 160.0, 30.0, 45.0);
    let (pw, ph) = (w - ml - mr, h - mt - mb);
    let (x0, x1, y0, y1) = bounds(panel);
    let sx = |x: f64| ox + ml + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| oy + mt + ph - (y - y0) / (y1 - y0) * ph;

    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="14" text-anchor="middle">{}</text>"#,
        ox + ml + pw / 2.0,
        oy + 18.0,
        escape(&panel.title)
    );
    let _ = writeln!(
        out,
        r##"<rect x="{:.1}" y="{:.1}" width="{pw:.1}" height="{ph:.1}" fill="none" stroke="#444"/>"##,
        ox + ml,
        oy + mt
    );
    for i in 0..=4 {
        let y = y0 + (y1 - y0) * i as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{}</text>"#,
            ox + ml - 4.0,
            sy(y) + 3.0,
            tick(y, y1 - y0)
        );
    }
    if panel.x_ticks.is_empty() {
        for i in 0..=4 {
            let x = x0 + (x1 - x0) * i as f64 / 4.0;
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="middle">{}</text>"#,
                sx(x),
                oy + mt + ph + 14.0,
                tick(x, x1 - x0)
            );
        }
    } else {
        for (i, t) in panel.x_ticks.iter().enumerate() {
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" font-size="9" text-anchor="middle">{}</text>"#,
                sx(i as f64),
                oy + mt + ph + 14.0,
                escape(t)
            );
        }
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">{}</text>"#,
        ox + ml + pw / 2.0,
        oy + h - 8.0,
        escape(&panel.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle" transform="rotate(-90 {:.1} {:.1})">{}</text>"#,
        ox + 16.0,
        oy + mt + ph / 2.0,
        ox + 16.0,
        oy + mt + ph / 2.0,
        escape(&panel.y_label)
    );
    for (g, label) in &panel.guides {
        let _ = writeln!(
            out,
            r##"<line x1="{:.1}" y1="{:.2}" x2="{:.1}" y2="{:.2}" stroke="#888" stroke-dasharray="5,4"/>"##,
            ox + ml,
            sy(*g),
            ox + ml + pw,
            sy(*g)
        );
        let _ = writeln!(
            out,
            r##"<text x="{:.1}" y="{:.2}" font-size="9" fill="#666">{}</text>"##,
            ox + ml + 4.0,
            sy(*g) - 3.0,
            escape(label)
        );
    }
    for (i, s) in panel.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"><title>{}</title></polyline>"#,
            pts.join(" "),
            escape(&s.name)
        );
        let ly = oy + mt + 12.0 + 14.0 * i as f64;
        let lx = ox + ml + pw + 10.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#,
            lx + 16.0
        );
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" font-size="10">{}</text>"#, lx + 20.0, ly + 3.0, escape(&s.name));
    }
}

fn tick(v: f64, span: f64) -> String {
    if span >= 10.0 {
        format!("{v:.0}")
    } else if span >= 0.1 {
        format!("{v:.2}")
    } else {
        format!("{v:.4}")
    }
}

/// Stacks the panels vertically in one document.
pub fn render(panels: &[Panel], width: f64, panel_height: f64) -> String {
    let height = panel_height * panels.len().max(1) as f64;
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, p) in panels.iter().enumerate() {
        draw_panel(&mut out, p, 0.0, panel_height * i as f64, width, panel_height);
    }
    out.push_str("</svg>\n");
    out
}

/// Step outline of a histogram over `[lo, hi]` with `bins` equal bins.
pub fn histogram_series(name: &str, values: &[f64], lo: f64, hi: f64, bins: usize) -> Series {
    let mut counts = vec![0usize; bins];
    for &v in values.iter().filter(|v| v.is_finite()) {
        let b = (((v - lo) / (hi - lo)) * bins as f64).floor().clamp(0.0, (bins - 1) as f64) as usize;
        counts[b] += 1;
    }
    let bw = (hi - lo) / bins as f64;
    let mut points = vec![(lo, 0.0)];
    for (i, &c) in counts.iter().enumerate() {
        let x = lo + bw * i as f64;
        points.push((x, c as f64));
        points.push((x + bw, c as f64));
    }
    points.push((hi, 0.0));
    Series { name: name.to_string(), points }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_polyline_per_series_and_guides_are_lines() {
        let panel = Panel {
            title: "t <a&b>".into(),
            series: vec![
                Series { name: "a".into(), points: vec![(0.0, 1.0), (1.0, 2.0)] },
                Series { name: "b".into(), points: vec![(0.0, 0.5)] },
            ],
            guides: vec![(1.5, "g".into())],
            ..Default::default()
        };
        let svg = render(&[panel], 600.0, 300.0);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("t &lt;a&amp;b&gt;"));
        assert!(svg.contains("stroke-dasharray"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn histogram_counts_sum() {
        let s = histogram_series("h", &[0.0, 0.05, 0.5, 1.0, 1.0], 0.0, 1.0, 10);
        // Every bin contributes two points at its count.
        let total: f64 = s.points[1..s.points.len() - 1].iter().step_by(2).map(|p| p.1).sum();
        assert_eq!(total, 5.0);
        assert_eq!(s.points[1].1, 2.0);
        assert_eq!(s.points[s.points.len() - 2].1, 2.0);
    }
}
