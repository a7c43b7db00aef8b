//! Minimal SVG line chart of a loss curve on a log scale.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;
const MAX_POINTS: usize = 2000;

/// `points` are `(epoch, loss)`; non-positive losses are clamped to 1e-16.
pub fn loss_chart(title: &str, points: &[(usize, f64)]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN / 2.0, HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(
        out,
        r#"<polyline points="{x0},{y1} {x0},{y0} {x1},{y0}" fill="none" stroke="black"/>"#
    );

    if !points.is_empty() {
        let logs: Vec<f64> = points.iter().map(|&(_, l)| l.max(1e-16).log10()).collect();
        let mut lo = logs.iter().copied().fold(f64::INFINITY, f64::min).floor();
        let mut hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max).ceil();
        if hi <= lo {
            lo -= 1.0;
            hi += 1.0;
        }
        let e_max = points.last().map_or(1, |p| p.0).max(1) as f64;
        let sx = |e: f64| x0 + (x1 - x0) * e / e_max;
        let sy = |v: f64| y0 - (y0 - y1) * (v - lo) / (hi - lo);

        let stride = points.len().div_ceil(MAX_POINTS);
        let mut path = String::new();
        for (k, (&(e, _), v)) in points.iter().zip(&logs).enumerate() {
            if k % stride == 0 || k + 1 == points.len() {
                let _ = write!(path, "{:.2},{:.2} ", sx(e as f64), sy(*v));
            }
        }
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="1.5"/>"#,
            path.trim_end()
        );

        let step = ((hi - lo) / 8.0).ceil().max(1.0);
        let mut tick = lo;
        while tick <= hi {
            let y = sy(tick);
            let _ = writeln!(
                out,
                r#"<line x1="{}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="11">1e{}</text>"#,
                x0 - 4.0,
                x0 - 6.0,
                y + 4.0,
                tick as i64
            );
            tick += step;
        }
        let _ = writeln!(
            out,
            r#"<text x="{x1}" y="{}" text-anchor="end" font-family="sans-serif" font-size="11">{}</text>"#,
            y0 + 16.0,
            e_max as usize
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">epoch</text>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 16 {})">loss</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
