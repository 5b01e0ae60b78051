//! Minimal static line plots.

use std::fmt::Write;

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: &[&str] = &[
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

#[derive(Debug, Clone, Default)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<(String, Vec<(f64, f64)>)>,
    /// Vertical marker at an x position, with its label.
    pub marker: Option<(f64, String)>,
    /// Custom x tick labels; numeric ticks are used when empty.
    pub x_ticks: Vec<(f64, String)>,
    pub log_x: bool,
}

pub fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.2e}")
    } else {
        format!("{}", (v * 1000.0).round() / 1000.0)
    }
}

impl LinePlot {
    fn tx(&self, x: f64) -> f64 {
        if self.log_x {
            x.log10()
        } else {
            x
        }
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for (_, pts) in &self.series {
            for &(x, y) in pts {
                let x = self.tx(x);
                if x.is_finite() && y.is_finite() {
                    b = (b.0.min(x), b.1.max(x), b.2.min(y), b.3.max(y));
                }
            }
        }
        if let Some((x, _)) = &self.marker {
            let x = self.tx(*x);
            if x.is_finite() {
                b = (b.0.min(x), b.1.max(x), b.2, b.3);
            }
        }
        if !b.0.is_finite() {
            return (0.0, 1.0, 0.0, 1.0);
        }
        if b.1 <= b.0 {
            b.1 = b.0 + 1.0;
        }
        if b.3 <= b.2 {
            b.3 = b.2 + 1.0;
        }
        b
    }

    pub fn render(&self) -> String {
        let (x0, x1, y0, y1) = self.bounds();
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let px = |x: f64| LEFT + (self.tx(x) - x0) / (x1 - x0) * pw;
        let py = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

        let mut s = String::new();
        let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );

        for i in 0..=4 {
            let y = y0 + (y1 - y0) * i as f64 / 4.0;
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
                LEFT - 6.0,
                py(y) + 4.0,
                tick_label(y)
            );
        }
        if self.x_ticks.is_empty() {
            for i in 0..=4 {
                let t = x0 + (x1 - x0) * i as f64 / 4.0;
                let v = if self.log_x { 10f64.powf(t) } else { t };
                let _ = writeln!(
                    s,
                    r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                    LEFT + (t - x0) / (x1 - x0) * pw,
                    TOP + ph + 18.0,
                    tick_label(v)
                );
            }
        } else {
            for (x, label) in &self.x_ticks {
                let _ = writeln!(
                    s,
                    r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                    px(*x),
                    TOP + ph + 18.0,
                    escape(label)
                );
            }
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 10.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        for (i, (name, pts)) in self.series.iter().enumerate() {
            let colour = PALETTE[i % PALETTE.len()];
            let mut path = String::new();
            let mut pen_down = false;
            for &(x, y) in pts {
                let (sx, sy) = (px(x), py(y));
                if !(sx.is_finite() && sy.is_finite()) {
                    pen_down = false;
                    continue;
                }
                let _ = write!(path, "{}{sx:.2},{sy:.2} ", if pen_down { "L" } else { "M" });
                pen_down = true;
            }
            let _ = writeln!(
                s,
                r#"<path d="{}" fill="none" stroke="{colour}" stroke-width="1"/>"#,
                path.trim_end()
            );
            let ly = TOP + 14.0 + 18.0 * i as f64;
            let lx = WIDTH - RIGHT + 12.0;
            let _ = writeln!(
                s,
                r#"<line x1="{lx:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{colour}" stroke-width="2"/>"#,
                ly - 4.0,
                lx + 20.0,
                ly - 4.0
            );
            let _ = writeln!(s, r#"<text x="{:.1}" y="{ly:.1}">{}</text>"#, lx + 26.0, escape(name));
        }

        if let Some((x, label)) = &self.marker {
            let sx = px(*x);
            if sx.is_finite() {
                let _ = writeln!(
                    s,
                    r#"<line x1="{sx:.2}" y1="{TOP}" x2="{sx:.2}" y2="{:.1}" stroke="red" stroke-width="1.5"/>"#,
                    TOP + ph
                );
                let _ = writeln!(
                    s,
                    r#"<text x="{:.2}" y="{:.1}" fill="red">{}</text>"#,
                    sx + 4.0,
                    TOP + 14.0,
                    escape(label)
                );
            }
        }
        s.push_str("</svg>\n");
        s
    }
}
