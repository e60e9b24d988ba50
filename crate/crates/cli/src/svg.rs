//! Minimal SVG emitters for the interpretability scatter plot and the
//! variable-factor correlation heatmap. Output is plain text with fixed
//! number formatting, so identical inputs give identical bytes.

use std::fmt::Write;

use priorimax_core::index::{IndexComponents, PairSet};
use priorimax_core::DMatrix;

use crate::manifest::RunManifest;

const NEUTRAL: (f64, f64, f64) = (247.0, 247.0, 247.0);
const POSITIVE: (f64, f64, f64) = (178.0, 24.0, 43.0);
const NEGATIVE: (f64, f64, f64) = (33.0, 102.0, 172.0);

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn header(out: &mut String, width: f64, height: f64, manifest: &RunManifest) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif">"#
    );
    let json = serde_json::to_string(manifest).expect("serializable manifest");
    let _ = writeln!(out, "<metadata>{}</metadata>", escape(&json));
    let _ = writeln!(out, r#"<rect width="{width:.0}" height="{height:.0}" fill="white"/>"#);
}

/// Fill color for a correlation on the fixed `[-1, 1]` diverging scale.
pub fn diverging_color(v: f64) -> String {
    let v = if v.is_finite() { v.clamp(-1.0, 1.0) } else { 0.0 };
    let end = if v >= 0.0 { POSITIVE } else { NEGATIVE };
    let t = v.abs();
    let mix = |a: f64, b: f64| (a + t * (b - a)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(NEUTRAL.0, end.0), mix(NEUTRAL.1, end.1), mix(NEUTRAL.2, end.2))
}

/// Scatter of the pair set with an optional LOWESS polyline.
pub fn scatter(pairs: &PairSet, curve: Option<&[(f64, f64)]>, index: Option<IndexComponents>, manifest: &RunManifest) -> String {
    let (width, height) = (640.0, 480.0);
    let (left, right, top, bottom) = (64.0, 24.0, 44.0, 56.0);
    let plot_w = width - left - right;
    let plot_h = height - top - bottom;

    let priors = pairs.priors();
    let (mut x0, mut x1) = priors
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if !(x1 > x0) {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let pad = 0.05 * (x1 - x0);
    let (x0, x1) = (x0 - pad, x1 + pad);
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| top + (1.0 - y.clamp(0.0, 1.0)) * plot_h;

    let mut out = String::new();
    header(&mut out, width, height, manifest);
    let title = match index {
        Some(c) => format!("V = {:.4} (tau = {:.4}, theta = {:.4})", c.v, c.tau, c.theta),
        None => "interpretability plot".to_string(),
    };
    let _ = writeln!(out, r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#, width / 2.0, escape(&title));
    let _ = writeln!(
        out,
        r##"<rect x="{left:.1}" y="{top:.1}" width="{plot_w:.1}" height="{plot_h:.1}" fill="none" stroke="#444"/>"##
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), f);
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(
            out,
            r##"<line x1="{px:.1}" y1="{:.1}" x2="{px:.1}" y2="{:.1}" stroke="#444"/><text x="{px:.1}" y="{:.1}" text-anchor="middle" font-size="11">{xv:.2}</text>"##,
            top + plot_h,
            top + plot_h + 5.0,
            top + plot_h + 18.0
        );
        let _ = writeln!(
            out,
            r##"<line x1="{:.1}" y1="{py:.1}" x2="{left:.1}" y2="{py:.1}" stroke="#444"/><text x="{:.1}" y="{:.1}" text-anchor="end" font-size="11">{yv:.2}</text>"##,
            left - 5.0,
            left - 8.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="13">prior similarity</text>"#,
        left + plot_w / 2.0,
        height - 14.0
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" text-anchor="middle" font-size="13" transform="rotate(-90 16 {:.1})">loading similarity</text>"#,
        top + plot_h / 2.0,
        top + plot_h / 2.0
    );
    let _ = writeln!(out, r##"<g fill="#1f77b4" fill-opacity="0.6">"##);
    for p in pairs.elements() {
        let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3"/>"#, sx(p.prior), sy(p.loading_sim));
    }
    let _ = writeln!(out, "</g>");
    if let Some(curve) = curve {
        let points: Vec<String> = curve.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(
            out,
            r##"<polyline points="{}" fill="none" stroke="#d62728" stroke-width="2"/>"##,
            points.join(" ")
        );
    }
    out.push_str("</svg>\n");
    out
}

/// M×T grid of variable-factor correlations with printed values.
pub fn heatmap(values: &DMatrix<f64>, row_labels: &[String], col_labels: &[String], manifest: &RunManifest) -> String {
    let (cell_w, cell_h) = (64.0, 22.0);
    let label_w = 16.0 + 7.0 * row_labels.iter().map(|s| s.chars().count()).max().unwrap_or(1) as f64;
    let top = 32.0;
    let legend_h = 40.0;
    let width = label_w + cell_w * values.ncols() as f64 + 16.0;
    let height = top + cell_h * values.nrows() as f64 + legend_h;

    let mut out = String::new();
    header(&mut out, width.max(240.0), height, manifest);
    for (k, label) in col_labels.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="12">{}</text>"#,
            label_w + cell_w * (k as f64 + 0.5),
            top - 10.0,
            escape(label)
        );
    }
    for i in 0..values.nrows() {
        let y = top + cell_h * i as f64;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="12">{}</text>"#,
            label_w - 8.0,
            y + cell_h * 0.7,
            escape(row_labels.get(i).map_or("", String::as_str))
        );
        for k in 0..values.ncols() {
            let v = values[(i, k)];
            let x = label_w + cell_w * k as f64;
            let ink = if v.abs() > 0.6 { "white" } else { "black" };
            let _ = writeln!(
                out,
                r##"<rect x="{x:.1}" y="{y:.1}" width="{cell_w:.1}" height="{cell_h:.1}" fill="{}" stroke="#ffffff"/><text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="11" fill="{ink}">{v:.2}</text>"##,
                diverging_color(v),
                x + cell_w / 2.0,
                y + cell_h * 0.7
            );
        }
    }
    let ly = top + cell_h * values.nrows() as f64 + 12.0;
    for (j, v) in [-1.0, -0.5, 0.0, 0.5, 1.0].iter().enumerate() {
        let x = label_w + 36.0 * j as f64;
        let _ = writeln!(
            out,
            r##"<rect x="{x:.1}" y="{ly:.1}" width="36" height="10" fill="{}"/><text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="9">{v:.1}</text>"##,
            diverging_color(*v),
            x + 18.0,
            ly + 22.0
        );
    }
    out.push_str("</svg>\n");
    out
}
