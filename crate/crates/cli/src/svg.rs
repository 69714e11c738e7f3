//! Minimal SVG line chart: one mean curve plus shaded band per series.

use std::fmt::Write;

pub struct Series {
    pub label: String,
    pub mean: Vec<f64>,
    pub half_width: Vec<f64>,
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 170.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 55.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Trailing moving average with window `w` (shorter at the start).
pub fn trailing_mean(values: &[f64], w: usize) -> Vec<f64> {
    if w <= 1 {
        return values.to_vec();
    }
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for (i, v) in values.iter().enumerate() {
        acc += v;
        if i >= w {
            acc -= values[i - w];
        }
        out.push(acc / (i + 1).min(w) as f64);
    }
    out
}

fn nice_step(range: f64) -> f64 {
    let raw = range / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let step = if norm < 1.5 {
        1.0
    } else if norm < 3.5 {
        2.0
    } else if norm < 7.5 {
        5.0
    } else {
        10.0
    };
    step * mag
}

/// Render series over a shared episode axis `1..=n`.
pub fn render(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let n = series.iter().map(|s| s.mean.len()).max().unwrap_or(0).max(1);
    let y_max = series
        .iter()
        .flat_map(|s| s.mean.iter().zip(&s.half_width).map(|(m, w)| m + w))
        .fold(0.0f64, f64::max)
        .max(1e-9);
    let y_min = series
        .iter()
        .flat_map(|s| s.mean.iter().zip(&s.half_width).map(|(m, w)| m - w))
        .fold(0.0f64, f64::min);
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |k: f64| MARGIN_LEFT + if n > 1 { (k - 1.0) / (n as f64 - 1.0) * plot_w } else { 0.0 };
    let sy = |y: f64| MARGIN_TOP + (y_max - y) / (y_max - y_min) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        escape(title)
    );

    // Axes and ticks.
    let x0 = MARGIN_LEFT;
    let y0 = MARGIN_TOP + plot_h;
    let _ = writeln!(
        svg,
        r#"<path d="M{x0:.1},{MARGIN_TOP:.1} L{x0:.1},{y0:.1} L{:.1},{y0:.1}" stroke="black" fill="none"/>"#,
        x0 + plot_w
    );
    let y_step = nice_step(y_max - y_min);
    let mut tick = (y_min / y_step).ceil() * y_step;
    while tick <= y_max + 1e-12 {
        let y = sy(tick);
        let _ = writeln!(
            svg,
            r##"<line x1="{:.1}" y1="{y:.1}" x2="{x0:.1}" y2="{y:.1}" stroke="black"/><line x1="{x0:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#dddddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##,
            x0 - 5.0,
            x0 + plot_w,
            x0 - 8.0,
            y + 4.0,
            trim_float(tick)
        );
        tick += y_step;
    }
    let x_step = nice_step(n as f64).max(1.0);
    let mut tick = x_step;
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">1</text>"#,
        sx(1.0),
        y0 + 18.0
    );
    while tick <= n as f64 {
        let x = sx(tick);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.1}" y1="{y0:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            y0 + 5.0,
            y0 + 18.0,
            trim_float(tick)
        );
        tick += x_step;
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        escape(y_label)
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if s.mean.is_empty() {
            continue;
        }
        // Band: upper edge forward, lower edge backward.
        let mut band = String::new();
        for (k, (m, w)) in s.mean.iter().zip(&s.half_width).enumerate() {
            let cmd = if k == 0 { 'M' } else { 'L' };
            let _ = write!(band, "{cmd}{:.2},{:.2} ", sx(k as f64 + 1.0), sy(m + w));
        }
        for (k, (m, w)) in s.mean.iter().zip(&s.half_width).enumerate().rev() {
            let _ = write!(band, "L{:.2},{:.2} ", sx(k as f64 + 1.0), sy(m - w));
        }
        let _ = writeln!(
            svg,
            r#"<path d="{}Z" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            band
        );
        let points: Vec<String> = s
            .mean
            .iter()
            .enumerate()
            .map(|(k, m)| format!("{:.2},{:.2}", sx(k as f64 + 1.0), sy(*m)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            points.join(" ")
        );
        let ly = MARGIN_TOP + 20.0 + 20.0 * i as f64;
        let lx = MARGIN_LEFT + plot_w + 15.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="3"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn trim_float(x: f64) -> String {
    let s = format!("{x:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
