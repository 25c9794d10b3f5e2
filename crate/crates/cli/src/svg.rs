//! Minimal SVG charts: line plots and bar charts.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 6] = ["#c2185b", "#1565c0", "#2e7d32", "#ef6c00", "#6a1b9a", "#455a64"];

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
    /// Thin unlabeled series, e.g. basis functions.
    pub faint: bool,
}

impl Series {
    pub fn solid(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series {
            name: name.into(),
            points,
            dashed: false,
            faint: false,
        }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }

    pub fn faint(mut self) -> Self {
        self.faint = true;
        self
    }
}

pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

struct Axes {
    x: (f64, f64),
    y: (f64, f64),
}

impl Axes {
    fn fit(points: impl Iterator<Item = (f64, f64)>) -> Self {
        let (mut x, mut y) = ((f64::INFINITY, f64::NEG_INFINITY), (f64::INFINITY, f64::NEG_INFINITY));
        for (px, py) in points.filter(|p| p.0.is_finite() && p.1.is_finite()) {
            x = (x.0.min(px), x.1.max(px));
            y = (y.0.min(py), y.1.max(py));
        }
        let widen = |r: (f64, f64)| {
            if !r.0.is_finite() {
                (0.0, 1.0)
            } else if r.1 - r.0 < 1e-12 {
                (r.0 - 0.5, r.1 + 0.5)
            } else {
                let pad = 0.05 * (r.1 - r.0);
                (r.0 - pad, r.1 + pad)
            }
        };
        Axes { x: widen(x), y: widen(y) }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn frame(out: &mut String, title: &str, x_label: &str, y_label: &str, axes: Option<&Axes>) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (x0, y0, x1, y1) = (MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN, MARGIN);
    let _ = writeln!(
        out,
        r#"<path d="M{x0},{y1} L{x0},{y0} L{x1},{y0}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
    if let Some(axes) = axes {
        for i in 0..=4 {
            let t = i as f64 / 4.0;
            let xv = axes.x.0 + t * (axes.x.1 - axes.x.0);
            let yv = axes.y.0 + t * (axes.y.1 - axes.y.0);
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
                axes.px(xv),
                y0 + 16.0,
                tick(xv)
            );
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#,
                x0 - 6.0,
                axes.py(yv) + 4.0,
                tick(yv)
            );
        }
    }
}

fn tick(v: f64) -> String {
    if v == 0.0 || (1e-2..1e4).contains(&v.abs()) {
        format!("{v:.3}")
    } else {
        format!("{v:.1e}")
    }
}

impl LinePlot {
    pub fn render(&self) -> String {
        let axes = Axes::fit(self.series.iter().flat_map(|s| s.points.iter().copied()));
        let mut out = String::new();
        frame(&mut out, &self.title, &self.x_label, &self.y_label, Some(&axes));
        let mut legend = 0;
        for (i, s) in self.series.iter().enumerate() {
            if s.points.is_empty() {
                continue;
            }
            let color = if s.faint { "#9e9e9e" } else { PALETTE[i % PALETTE.len()] };
            let path = s
                .points
                .iter()
                .enumerate()
                .map(|(k, &(x, y))| format!("{}{:.2},{:.2}", if k == 0 { "M" } else { "L" }, axes.px(x), axes.py(y)))
                .collect::<Vec<_>>()
                .join(" ");
            let dash = if s.dashed { r#" stroke-dasharray="5,4""# } else { "" };
            let width = if s.faint { 0.8 } else { 2.0 };
            let _ = writeln!(
                out,
                r#"<path d="{path}" fill="none" stroke="{color}" stroke-width="{width}"{dash}/>"#
            );
            if !s.faint {
                let y = MARGIN + 14.0 * legend as f64;
                let _ = writeln!(
                    out,
                    r#"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"{dash}/><text x="{}" y="{}">{}</text>"#,
                    WIDTH - MARGIN - 150.0,
                    WIDTH - MARGIN - 130.0,
                    WIDTH - MARGIN - 125.0,
                    y + 4.0,
                    escape(&s.name)
                );
                legend += 1;
            }
        }
        out.push_str("</svg>\n");
        out
    }
}

pub struct BarChart {
    pub title: String,
    pub y_label: String,
    pub bars: Vec<(String, f64)>,
    pub y_max: f64,
}

impl BarChart {
    pub fn render(&self) -> String {
        let axes = Axes {
            x: (0.0, self.bars.len().max(1) as f64),
            y: (0.0, self.y_max),
        };
        let mut out = String::new();
        frame(&mut out, &self.title, "", &self.y_label, None);
        for (i, (name, value)) in self.bars.iter().enumerate() {
            let left = axes.px(i as f64 + 0.2);
            let right = axes.px(i as f64 + 0.8);
            let top = axes.py(value.clamp(0.0, self.y_max));
            let base = axes.py(0.0);
            let _ = writeln!(
                out,
                r#"<rect x="{left:.1}" y="{top:.1}" width="{:.1}" height="{:.1}" fill="{}"/>"#,
                right - left,
                base - top,
                PALETTE[i % PALETTE.len()]
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text><text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                (left + right) / 2.0,
                base + 16.0,
                escape(name),
                (left + right) / 2.0,
                top - 4.0,
                tick(*value)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}
