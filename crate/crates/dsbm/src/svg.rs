//! Minimal SVG rendering: line, scatter and heatmap layers on linear axes.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 110.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;

/// Series colors, cycled by index.
pub const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone)]
enum Layer {
    Line {
        points: Vec<(f64, f64)>,
        color: String,
        dashed: bool,
        label: Option<String>,
    },
    Scatter {
        points: Vec<(f64, f64)>,
        color: String,
        label: Option<String>,
    },
    Heatmap {
        xs: Vec<f64>,
        ys: Vec<f64>,
        /// `values[y][x]`; non-finite cells are left blank.
        values: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Default)]
pub struct Figure {
    title: String,
    x_label: String,
    y_label: String,
    layers: Vec<Layer>,
}

impl Figure {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            layers: Vec::new(),
        }
    }

    pub fn line(mut self, points: Vec<(f64, f64)>, color: &str, dashed: bool, label: Option<&str>) -> Self {
        self.layers.push(Layer::Line {
            points,
            color: color.to_string(),
            dashed,
            label: label.map(str::to_string),
        });
        self
    }

    pub fn scatter(mut self, points: Vec<(f64, f64)>, color: &str, label: Option<&str>) -> Self {
        self.layers.push(Layer::Scatter {
            points,
            color: color.to_string(),
            label: label.map(str::to_string),
        });
        self
    }

    /// Cells centered on the grid `xs × ys`.
    pub fn heatmap(mut self, xs: Vec<f64>, ys: Vec<f64>, values: Vec<Vec<f64>>) -> Self {
        self.layers.push(Layer::Heatmap { xs, ys, values });
        self
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        let mut add = |x: f64, y: f64| {
            if x.is_finite() && y.is_finite() {
                x0 = x0.min(x);
                x1 = x1.max(x);
                y0 = y0.min(y);
                y1 = y1.max(y);
            }
        };
        for layer in &self.layers {
            match layer {
                Layer::Line { points, .. } | Layer::Scatter { points, .. } => {
                    points.iter().for_each(|&(x, y)| add(x, y));
                }
                Layer::Heatmap { xs, ys, .. } => {
                    let (hx, hy) = (half_step(xs), half_step(ys));
                    for &x in xs {
                        for &y in ys {
                            add(x - hx, y - hy);
                            add(x + hx, y + hy);
                        }
                    }
                }
            }
        }
        if !x0.is_finite() {
            return (0.0, 1.0, 0.0, 1.0);
        }
        let pad = |lo: f64, hi: f64| if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
        let (x0, x1) = pad(x0, x1);
        let (y0, y1) = pad(y0, y1);
        (x0, x1, y0, y1)
    }

    pub fn render(&self) -> String {
        let (x0, x1, y0, y1) = self.bounds();
        let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        let sx = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * plot_w;
        let sy = |y: f64| MARGIN_TOP + plot_h - (y - y0) / (y1 - y0) * plot_h;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );

        let mut legend = Vec::new();
        for layer in &self.layers {
            match layer {
                Layer::Heatmap { xs, ys, values } => {
                    let finite = values.iter().flatten().copied().filter(|v| v.is_finite());
                    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
                    let (hx, hy) = (half_step(xs), half_step(ys));
                    for (iy, &y) in ys.iter().enumerate() {
                        for (ix, &x) in xs.iter().enumerate() {
                            let v = values.get(iy).and_then(|r| r.get(ix)).copied().unwrap_or(f64::NAN);
                            if !v.is_finite() {
                                continue;
                            }
                            let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
                            let _ = writeln!(
                                s,
                                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"><title>{v:.4}</title></rect>"#,
                                sx(x - hx),
                                sy(y + hy),
                                sx(x + hx) - sx(x - hx),
                                sy(y - hy) - sy(y + hy),
                                colormap(t)
                            );
                        }
                    }
                    if lo.is_finite() {
                        color_bar(&mut s, lo, hi);
                    }
                }
                Layer::Line { points, color, dashed, label } => {
                    let path: Vec<String> = points
                        .iter()
                        .filter(|(x, y)| x.is_finite() && y.is_finite())
                        .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                        .collect();
                    let dash = if *dashed { r#" stroke-dasharray="6,4""# } else { "" };
                    let _ = writeln!(
                        s,
                        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
                        path.join(" ")
                    );
                    if let Some(l) = label {
                        legend.push((l.clone(), color.clone()));
                    }
                }
                Layer::Scatter { points, color, label } => {
                    for &(x, y) in points.iter().filter(|(x, y)| x.is_finite() && y.is_finite()) {
                        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, sx(x), sy(y));
                    }
                    if let Some(l) = label {
                        legend.push((l.clone(), color.clone()));
                    }
                }
            }
        }

        // axes and ticks
        let _ = writeln!(
            s,
            r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
        );
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                sx(xv),
                MARGIN_TOP + plot_h + 18.0,
                tick(xv)
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                MARGIN_LEFT - 6.0,
                sy(yv) + 4.0,
                tick(yv)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            MARGIN_LEFT + plot_w / 2.0,
            HEIGHT - 18.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            MARGIN_TOP + plot_h / 2.0,
            MARGIN_TOP + plot_h / 2.0,
            escape(&self.y_label)
        );
        for (i, (label, color)) in legend.iter().enumerate() {
            let y = MARGIN_TOP + 14.0 + 16.0 * i as f64;
            let x = WIDTH - MARGIN_RIGHT + 10.0;
            let _ = writeln!(s, r#"<rect x="{x}" y="{:.2}" width="10" height="10" fill="{color}"/>"#, y - 9.0);
            let _ = writeln!(s, r#"<text x="{}" y="{y:.2}">{}</text>"#, x + 14.0, escape(label));
        }
        s.push_str("</svg>\n");
        s
    }
}

fn half_step(v: &[f64]) -> f64 {
    let mut sorted = v.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| *d > 0.0)
        .fold(f64::INFINITY, f64::min)
        .min(1.0)
        * 0.5
}

fn color_bar(s: &mut String, lo: f64, hi: f64) {
    let x = WIDTH - MARGIN_RIGHT + 20.0;
    let h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let steps = 32;
    for i in 0..steps {
        let t = i as f64 / (steps - 1) as f64;
        let y = MARGIN_TOP + h - (i + 1) as f64 * h / steps as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{x}" y="{y:.2}" width="14" height="{:.2}" fill="{}"/>"#,
            h / steps as f64 + 0.5,
            colormap(t)
        );
    }
    let _ = writeln!(s, r#"<text x="{}" y="{:.2}">{}</text>"#, x + 18.0, MARGIN_TOP + h, tick(lo));
    let _ = writeln!(s, r#"<text x="{}" y="{:.2}">{}</text>"#, x + 18.0, MARGIN_TOP + 10.0, tick(hi));
}

/// Dark blue to yellow ramp for `t ∈ [0, 1]`.
pub fn colormap(t: f64) -> String {
    const STOPS: [(f64, f64, f64); 4] = [(68.0, 1.0, 84.0), (59.0, 82.0, 139.0), (33.0, 145.0, 140.0), (253.0, 231.0, 37.0)];
    let t = t.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let i = (t.floor() as usize).min(STOPS.len() - 2);
    let f = t - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let mix = |u: f64, v: f64| (u + (v - u) * f).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn tick(v: f64) -> String {
    if v.abs() >= 100.0 || v == v.round() {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
