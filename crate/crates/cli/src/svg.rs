//! Minimal static SVG plots of exported series.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 48.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit(xs: &[f64], ys: &[f64]) -> Self {
        let span = |v: &[f64]| {
            let lo = v.iter().copied().filter(|x| x.is_finite()).fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().filter(|x| x.is_finite()).fold(f64::NEG_INFINITY, f64::max);
            if !(lo < hi) {
                (lo - 0.5, lo + 0.5)
            } else {
                (lo, hi)
            }
        };
        let (x0, x1) = span(xs);
        let (y0, y1) = span(ys);
        let pad = 0.05 * (y1 - y0);
        Self { x0, x1, y0: y0 - pad, y1: y1 + pad }
    }

    fn px(&self, x: f64) -> f64 {
        PAD + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * PAD)
    }

    fn py(&self, y: f64) -> f64 {
        H - PAD - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * PAD)
    }
}

fn open(title: &str, f: &Frame, xlabel: &str, ylabel: &str) -> String {
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#).unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{title}</text>"#, W / 2.0).unwrap();
    writeln!(
        s,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    )
    .unwrap();
    for (v, anchor, x, y) in [
        (f.x0, "start", PAD, H - PAD + 16.0),
        (f.x1, "end", W - PAD, H - PAD + 16.0),
    ] {
        writeln!(s, r#"<text x="{x}" y="{y}" text-anchor="{anchor}">{v:.3}</text>"#).unwrap();
    }
    for (v, y) in [(f.y0, H - PAD), (f.y1, PAD + 10.0)] {
        writeln!(s, r#"<text x="{}" y="{y}" text-anchor="end">{v:.3}</text>"#, PAD - 4.0).unwrap();
    }
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{xlabel}</text>"#, W / 2.0, H - 10.0).unwrap();
    writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{ylabel}</text>"#,
        H / 2.0,
        H / 2.0
    )
    .unwrap();
    s
}

pub fn line_plot(title: &str, xs: &[f64], ys: &[f64], xlabel: &str, ylabel: &str) -> String {
    let f = Frame::fit(xs, ys);
    let mut s = open(title, &f, xlabel, ylabel);
    let pts: Vec<String> = xs
        .iter()
        .zip(ys)
        .filter(|(_, y)| y.is_finite())
        .map(|(&x, &y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
        .collect();
    writeln!(s, r#"<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{}"/>"#, pts.join(" ")).unwrap();
    s.push_str("</svg>\n");
    s
}

/// Scatter with a dashed zero line; long series are thinned to about 2000 dots.
pub fn scatter_plot(title: &str, xs: &[f64], ys: &[f64], xlabel: &str, ylabel: &str) -> String {
    let f = Frame::fit(xs, ys);
    let mut s = open(title, &f, xlabel, ylabel);
    if f.y0 < 0.0 && f.y1 > 0.0 {
        let y = f.py(0.0);
        writeln!(s, r#"<line x1="{PAD}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="gray" stroke-dasharray="4 3"/>"#, W - PAD)
            .unwrap();
    }
    let step = (xs.len() / 2000).max(1);
    for (&x, &y) in xs.iter().zip(ys).step_by(step) {
        writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="1.5" fill="firebrick"/>"#, f.px(x), f.py(y)).unwrap();
    }
    s.push_str("</svg>\n");
    s
}
