//! Static SVG line plots.

use std::fmt::Write;

const WIDTH: f64 = 820.0;
const HEIGHT: f64 = 520.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 70.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub caption: String,
    pub unit: String,
}

impl Axis {
    pub fn new(caption: &str, unit: &str) -> Self {
        Self {
            caption: caption.into(),
            unit: unit.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// SI prefix and scale so that `max_abs` reads between 1 and 1000.
fn prefix(max_abs: f64, unit: &str) -> (&'static str, f64) {
    if unit.is_empty() || max_abs <= 0.0 || !max_abs.is_finite() {
        return ("", 1.0);
    }
    const P: [(&str, f64); 9] = [
        ("n", 1e-9),
        ("\u{b5}", 1e-6),
        ("m", 1e-3),
        ("", 1.0),
        ("k", 1e3),
        ("M", 1e6),
        ("G", 1e9),
        ("T", 1e12),
        ("P", 1e15),
    ];
    P.iter()
        .rev()
        .find(|(_, s)| max_abs >= *s)
        .map(|(p, s)| (*p, *s))
        .unwrap_or(("n", 1e-9))
}

fn axis_title(a: &Axis, pre: &str) -> String {
    if a.unit.is_empty() {
        a.caption.clone()
    } else {
        format!("{} ({}{})", a.caption, pre, a.unit)
    }
}

/// Round step of 1, 2 or 5 times a power of ten giving about `n` ticks.
fn nice_ticks(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / n as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= n as f64)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(v: f64, scale: f64) -> String {
    let x = v / scale;
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn range(vals: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    vals.filter(|v| v.is_finite()).fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((a, b)) => Some((a.min(v), b.max(v))),
    })
}

fn pad(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let m = 0.05 * (hi - lo);
        (lo - m, hi + m)
    } else {
        let m = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        (lo - m, hi + m)
    }
}

/// Renders one plot with a legend entry per line. Non-finite points break
/// the line.
pub fn render(title: &str, x: &Axis, y: &Axis, log_x: bool, lines: &[Line]) -> String {
    let all = || lines.iter().flat_map(|l| l.points.iter().copied());
    let log_x = log_x && all().all(|(px, _)| px > 0.0);
    let tx = |v: f64| if log_x { v.log10() } else { v };
    let (x_lo, x_hi) = range(all().map(|p| tx(p.0))).unwrap_or((0.0, 1.0));
    let (x_lo, x_hi) = if x_hi > x_lo {
        (x_lo, x_hi)
    } else {
        pad(x_lo, x_hi)
    };
    let (y_lo, y_hi) = range(all().map(|p| p.1)).unwrap_or((0.0, 1.0));
    let (y_lo, y_hi) = pad(y_lo, y_hi);

    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |v: f64| LEFT + (tx(v) - x_lo) / (x_hi - x_lo) * pw;
    let sy = |v: f64| TOP + (y_hi - v) / (y_hi - y_lo) * ph;

    let x_abs = (if log_x {
        10f64.powf(x_hi)
    } else {
        x_lo.abs().max(x_hi.abs())
    })
    .abs();
    let (x_pre, x_scale) = prefix(x_abs, &x.unit);
    let (y_pre, y_scale) = prefix(y_lo.abs().max(y_hi.abs()), &y.unit);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="28" text-anchor="middle" font-size="16">{}</text>"#,
        LEFT + pw / 2.0,
        escape(title)
    );

    // Grid and tick labels.
    let x_ticks: Vec<f64> = if log_x {
        let mut t: Vec<f64> = (x_lo.ceil() as i32..=x_hi.floor() as i32)
            .map(|e| 10f64.powi(e))
            .collect();
        if t.len() < 3 {
            t = (x_lo.floor() as i32..=x_hi.ceil() as i32)
                .flat_map(|e| [1.0, 2.0, 5.0].map(|m| m * 10f64.powi(e)))
                .filter(|v| (x_lo..=x_hi).contains(&v.log10()))
                .collect();
        }
        t
    } else {
        nice_ticks(x_lo, x_hi, 8)
    };
    for v in x_ticks {
        let px = sx(v);
        let _ = writeln!(
            s,
            r##"<line x1="{px:.2}" y1="{TOP}" x2="{px:.2}" y2="{:.2}" stroke="#ddd"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            TOP + ph,
            TOP + ph + 18.0,
            tick_label(v, x_scale)
        );
    }
    for v in nice_ticks(y_lo, y_hi, 8) {
        let py = sy(v);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            py + 4.0,
            tick_label(v, y_scale)
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 22.0,
        escape(&axis_title(x, x_pre))
    );
    let _ = writeln!(
        s,
        r#"<text x="22" y="{}" text-anchor="middle" transform="rotate(-90 22 {})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&axis_title(y, y_pre))
    );

    for (k, line) in lines.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut run: Vec<String> = Vec::new();
        let flush = |run: &mut Vec<String>, s: &mut String| {
            if run.len() > 1 {
                let _ = writeln!(
                    s,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                    run.join(" ")
                );
            }
            run.clear();
        };
        for &(px, py) in &line.points {
            if px.is_finite() && py.is_finite() && (!log_x || px > 0.0) {
                run.push(format!("{:.2},{:.2}", sx(px), sy(py)));
            } else {
                flush(&mut run, &mut s);
            }
        }
        flush(&mut run, &mut s);
        let ly = TOP + 10.0 + 20.0 * k as f64;
        let lx = LEFT + pw + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 25.0,
            lx + 32.0,
            ly + 4.0,
            escape(&line.label)
        );
    }
    s.push_str("</svg>\n");
    s
}
