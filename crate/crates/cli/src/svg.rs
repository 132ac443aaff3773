//! Minimal static SVG plots.

use std::fmt::Write as _;

const WIDTH: f64 = 520.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 52.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Data-to-pixel mapping for one panel.
struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new((x0, x1): (f64, f64), (y0, y1): (f64, f64)) -> Self {
        let pad = |a: f64, b: f64| if b > a { (a, b) } else { (a - 0.5, a + 0.5) };
        let (x0, x1) = pad(x0, x1);
        let (y0, y1) = pad(y0, y1);
        Self { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    (0..=4).map(|i| lo + (hi - lo) * i as f64 / 4.0).collect()
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.2}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn open(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        esc(title)
    );
}

fn axes(out: &mut String, f: &Frame, xlabel: &str, ylabel: &str) {
    let (l, r, t, b) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(
        out,
        r#"<rect x="{l:.1}" y="{t:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        r - l,
        b - t
    );
    for x in ticks(f.x0, f.x1) {
        let p = f.px(x);
        let _ = writeln!(
            out,
            r#"<line x1="{p:.1}" y1="{b:.1}" x2="{p:.1}" y2="{:.1}" stroke="black"/><text x="{p:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            b + 5.0,
            b + 18.0,
            fmt_tick(x)
        );
    }
    for y in ticks(f.y0, f.y1) {
        let p = f.py(y);
        let _ = writeln!(
            out,
            r#"<line x1="{:.1}" y1="{p:.1}" x2="{l:.1}" y2="{p:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            l - 5.0,
            l - 8.0,
            p + 4.0,
            fmt_tick(y)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        (l + r) / 2.0,
        HEIGHT - 12.0,
        esc(xlabel)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        (t + b) / 2.0,
        (t + b) / 2.0,
        esc(ylabel)
    );
}

fn polyline(out: &mut String, f: &Frame, pts: &[(f64, f64)], colour: &str, dash: bool) {
    let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y))).collect();
    let dash = if dash { r#" stroke-dasharray="5,4""# } else { "" };
    let _ = writeln!(
        out,
        r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"{dash}/>"#,
        coords.join(" ")
    );
}

fn markers(out: &mut String, f: &Frame, pts: &[(f64, f64)], colour: &str, r: f64) {
    for &(x, y) in pts {
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="{r}" fill="{colour}"/>"#,
            f.px(x),
            f.py(y)
        );
    }
}

fn bounds(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// QQ plot of sorted p-values against uniform quantiles, with the `y = x`
/// reference line.
pub fn qq_plot(title: &str, pairs: &[(f64, f64)]) -> String {
    let mut out = String::new();
    let f = Frame::new((0.0, 1.0), (0.0, 1.0));
    open(&mut out, title);
    axes(&mut out, &f, "uniform quantile", "p-value");
    polyline(&mut out, &f, &[(0.0, 0.0), (1.0, 1.0)], "#888888", true);
    markers(&mut out, &f, pairs, PALETTE[0], 2.5);
    out.push_str("</svg>\n");
    out
}

/// A single curve with point markers and an optional horizontal guide.
pub fn curve_plot(title: &str, xlabel: &str, ylabel: &str, pts: &[(f64, f64)], guide: Option<f64>) -> String {
    let mut out = String::new();
    let (x0, x1) = bounds(pts.iter().map(|p| p.0));
    let (mut y0, mut y1) = bounds(pts.iter().map(|p| p.1).chain(guide));
    y0 = y0.min(0.0);
    y1 += 0.05 * (y1 - y0).max(1e-12);
    let f = Frame::new((x0, x1), (y0, y1));
    open(&mut out, title);
    axes(&mut out, &f, xlabel, ylabel);
    if let Some(g) = guide {
        polyline(&mut out, &f, &[(f.x0, g), (f.x1, g)], "#888888", true);
    }
    polyline(&mut out, &f, pts, PALETTE[0], false);
    markers(&mut out, &f, pts, PALETTE[0], 3.0);
    out.push_str("</svg>\n");
    out
}

/// Layout points coloured by class, with an edge for every overlapping pair.
pub fn overlay_plot(title: &str, pos: &[(f64, f64)], classes: &[usize], edges: &[(usize, usize)]) -> String {
    let mut out = String::new();
    let (x0, x1) = bounds(pos.iter().map(|p| p.0));
    let (y0, y1) = bounds(pos.iter().map(|p| p.1));
    let f = Frame::new((x0, x1), (y0, y1));
    open(&mut out, title);
    axes(&mut out, &f, "x", "y");
    for &(i, j) in edges {
        let _ = writeln!(
            out,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#444444" stroke-opacity="0.35"/>"##,
            f.px(pos[i].0),
            f.py(pos[i].1),
            f.px(pos[j].0),
            f.py(pos[j].1)
        );
    }
    for (p, &c) in pos.iter().zip(classes) {
        markers(&mut out, &f, &[*p], PALETTE[c % PALETTE.len()], 3.0);
    }
    out.push_str("</svg>\n");
    out
}
