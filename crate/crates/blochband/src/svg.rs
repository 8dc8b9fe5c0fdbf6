//! Hand-written SVG band diagrams.
//!
//! Eigenvalue branches are drawn as polylines over the arclength of the
//! sampled k-path (or grid traversal), with vertex labels as x-axis
//! ticks. Everything is assembled into one self-contained string; there
//! is no drawing dependency and no randomness, so identical inputs give
//! identical files.

use crate::spectral::{BandStructure, KPath};
use std::fmt::Write;

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 560.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 22.0;
const MARGIN_TOP: f64 = 26.0;
const MARGIN_BOTTOM: f64 = 52.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#7f7f7f",
];

// ---------------------------------------------------------------------------
// Public entry points
// ---------------------------------------------------------------------------

/// Arclength positions of the path vertices, paired with their labels.
pub fn path_ticks(path: &KPath) -> Vec<(f64, String)> {
    let vs = path.vertices();
    let mut out = Vec::with_capacity(vs.len());
    let mut s = 0.0f64;
    out.push((0.0, vs[0].label.clone()));
    for pair in vs.windows(2) {
        let dx = pair[1].k[0] - pair[0].k[0];
        let dy = pair[1].k[1] - pair[0].k[1];
        s += (dx * dx + dy * dy).sqrt();
        out.push((s, pair[1].label.clone()));
    }
    out
}

/// One diagram with a polyline per band. Pass the ticks from
/// [`path_ticks`] for labeled vertices, or an empty slice to fall back
/// to numeric arclength ticks (the natural choice for grid traversals).
pub fn band_diagram(bs: &BandStructure, ticks: &[(f64, String)]) -> String {
    let curves: Vec<Curve> = bs
        .bands
        .iter()
        .enumerate()
        .map(|(j, band)| Curve {
            color: PALETTE[j % PALETTE.len()],
            opacity: 1.0,
            points: pair_with_arclength(bs, band),
        })
        .collect();
    render(&curves, ticks, &[])
}

/// Overlay of several runs of the same path, one color per deformation
/// parameter, with a legend naming each `t`.
pub fn sweep_diagram(runs: &[(f64, BandStructure)], ticks: &[(f64, String)]) -> String {
    let mut curves = Vec::new();
    let mut legend = Vec::new();
    for (ri, (t, bs)) in runs.iter().enumerate() {
        let color = PALETTE[ri % PALETTE.len()];
        legend.push((format!("t = {t}"), color));
        for band in &bs.bands {
            curves.push(Curve { color, opacity: 0.85, points: pair_with_arclength(bs, band) });
        }
    }
    render(&curves, ticks, &legend)
}

// ---------------------------------------------------------------------------
// Painter
// ---------------------------------------------------------------------------

struct Curve {
    color: &'static str,
    opacity: f64,
    points: Vec<(f64, f64)>,
}

fn pair_with_arclength(bs: &BandStructure, band: &[f64]) -> Vec<(f64, f64)> {
    bs.k_points.iter().zip(band).map(|(kp, &v)| (kp.arclength, v)).collect()
}

struct Frame {
    xmin: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        let w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        MARGIN_LEFT + (v - self.xmin) / (self.xmax - self.xmin) * w
    }

    fn y(&self, v: f64) -> f64 {
        let h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        HEIGHT - MARGIN_BOTTOM - (v - self.ymin) / (self.ymax - self.ymin) * h
    }
}

fn render(curves: &[Curve], ticks: &[(f64, String)], legend: &[(String, &'static str)]) -> String {
    let mut xmin = f64::INFINITY;
    let mut xmax = f64::NEG_INFINITY;
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for c in curves {
        for &(x, y) in &c.points {
            xmin = xmin.min(x);
            xmax = xmax.max(x);
            ymin = ymin.min(y);
            ymax = ymax.max(y);
        }
    }
    for &(x, _) in ticks {
        xmin = xmin.min(x);
        xmax = xmax.max(x);
    }
    if !xmin.is_finite() || xmax <= xmin {
        let c = if xmin.is_finite() { xmin } else { 0.0 };
        xmin = c - 0.5;
        xmax = c + 0.5;
    }
    if !ymin.is_finite() || ymax <= ymin {
        let c = if ymin.is_finite() { ymin } else { 0.0 };
        ymin = c - 0.5;
        ymax = c + 0.5;
    }
    let pad = 0.04 * (ymax - ymin);
    let f = Frame { xmin, xmax, ymin: ymin - pad, ymax: ymax + pad };

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"Helvetica, Arial, sans-serif\" font-size=\"13\">"
    );
    let _ = writeln!(s, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"#ffffff\"/>");

    for v in nice_ticks(f.ymin, f.ymax) {
        let y = f.y(v);
        let _ = writeln!(
            s,
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#dddddd\"/>",
            MARGIN_LEFT,
            WIDTH - MARGIN_RIGHT,
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" fill=\"#333333\">{}</text>",
            MARGIN_LEFT - 7.0,
            y + 4.5,
            tick_text(v),
        );
    }

    let xticks: Vec<(f64, String)> = if ticks.is_empty() {
        nice_ticks(f.xmin, f.xmax).into_iter().map(|v| (v, tick_text(v))).collect()
    } else {
        ticks.iter().map(|(p, l)| (*p, escape(l))).collect()
    };
    for (p, label) in &xticks {
        let x = f.x(*p);
        let _ = writeln!(
            s,
            "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" \
             stroke=\"#bbbbbb\" stroke-dasharray=\"3 3\"/>",
            MARGIN_TOP,
            HEIGHT - MARGIN_BOTTOM,
        );
        let _ = writeln!(
            s,
            "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\" fill=\"#333333\">{label}</text>",
            HEIGHT - MARGIN_BOTTOM + 18.0,
        );
    }

    let _ = writeln!(
        s,
        "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" \
         fill=\"none\" stroke=\"#444444\"/>",
        MARGIN_LEFT,
        MARGIN_TOP,
        WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
        HEIGHT - MARGIN_TOP - MARGIN_BOTTOM,
    );

    for c in curves {
        let mut pts = String::new();
        for &(x, y) in &c.points {
            let _ = write!(pts, "{:.2},{:.2} ", f.x(x), f.y(y));
        }
        let _ = writeln!(
            s,
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.6\" \
             stroke-opacity=\"{}\" points=\"{}\"/>",
            c.color,
            c.opacity,
            pts.trim_end(),
        );
    }

    for (i, (label, color)) in legend.iter().enumerate() {
        let y = MARGIN_TOP + 16.0 + 18.0 * i as f64;
        let x = WIDTH - MARGIN_RIGHT - 150.0;
        let _ = writeln!(
            s,
            "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" \
             stroke=\"{color}\" stroke-width=\"2.4\"/>",
            y - 4.0,
            x + 26.0,
            y - 4.0,
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{y:.2}\" fill=\"#333333\">{}</text>",
            x + 33.0,
            escape(label),
        );
    }

    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" fill=\"#111111\">path position</text>",
        MARGIN_LEFT + (WIDTH - MARGIN_LEFT - MARGIN_RIGHT) / 2.0,
        HEIGHT - 12.0,
    );
    let _ = writeln!(
        s,
        "<text x=\"16\" y=\"{:.2}\" text-anchor=\"middle\" fill=\"#111111\" \
         transform=\"rotate(-90 16 {:.2})\">eigenvalue</text>",
        MARGIN_TOP + (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM) / 2.0,
        MARGIN_TOP + (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM) / 2.0,
    );
    s.push_str("</svg>\n");
    s
}

// ---------------------------------------------------------------------------
// Tick helpers
// ---------------------------------------------------------------------------

/// Round tick positions covering `[lo, hi]` with a 1-2-5 step.
fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let step = if norm < 1.5 {
        mag
    } else if norm < 3.5 {
        2.0 * mag
    } else if norm < 7.5 {
        5.0 * mag
    } else {
        10.0 * mag
    };
    let mut out = Vec::new();
    let mut k = (lo / step).ceil() as i64;
    while (k as f64) * step <= hi + 1e-9 * span {
        out.push(k as f64 * step);
        k += 1;
    }
    out
}

/// Shortest decimal form without floating-point tails; ticks come from
/// integer multiples of a 1-2-5 step, so a few digits always suffice.
fn tick_text(v: f64) -> String {
    for d in 0..=6usize {
        let scale = 10f64.powi(d as i32);
        if ((v * scale).round() - v * scale).abs() < 1e-6 * v.abs().max(1.0) {
            return format!("{v:.d$}");
        }
    }
    format!("{v:.6}")
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            _ => out.push(ch),
        }
    }
    out
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::PotentialSpec;
    use crate::spectral::KPoint;
    use std::f64::consts::PI;

    fn toy_bands(n_bands: usize) -> BandStructure {
        let k_points: Vec<KPoint> = (0..7)
            .map(|i| KPoint {
                segment: i / 3,
                arclength: i as f64 * 0.5,
                k: [i as f64 * 0.4, 0.0],
            })
            .collect();
        let bands: Vec<Vec<f64>> = (0..n_bands)
            .map(|j| (0..7).map(|i| j as f64 + (i as f64 * 0.7).sin()).collect())
            .collect();
        let residuals = vec![vec![1e-12; 7]; n_bands];
        BandStructure {
            k_points,
            bands,
            residuals,
            n: 8,
            mode: "nohole",
            t: 0.0,
            potential: PotentialSpec::zero(),
            grid_dims: None,
        }
    }

    #[test]
    fn path_ticks_mark_every_vertex() {
        let path = KPath::square_default(5);
        let ticks = path_ticks(&path);
        assert_eq!(ticks.len(), 4);
        let labels: Vec<&str> = ticks.iter().map(|(_, l)| l.as_str()).collect();
        assert_eq!(labels, ["Gamma", "X", "M", "Gamma"]);
        assert!((ticks[1].0 - PI).abs() < 1e-12);
        assert!((ticks[2].0 - 2.0 * PI).abs() < 1e-12);
        assert!((ticks[3].0 - 2.0 * PI - PI * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn one_polyline_per_band_and_labeled_ticks() {
        let bs = toy_bands(3);
        let ticks = vec![(0.0, "Gamma".to_string()), (3.0, "X".to_string())];
        let svg = band_diagram(&bs, &ticks);
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert!(svg.contains(">Gamma</text>"));
        assert!(svg.contains(">X</text>"));
        assert!(svg.starts_with("<svg "));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn empty_ticks_fall_back_to_numeric_labels() {
        let bs = toy_bands(1);
        let svg = band_diagram(&bs, &[]);
        assert!(svg.contains(">1</text>") || svg.contains(">0.5</text>"));
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn sweep_overlay_carries_one_legend_entry_per_run() {
        let runs = vec![(0.0, toy_bands(2)), (0.05, toy_bands(2))];
        let svg = sweep_diagram(&runs, &[]);
        assert_eq!(svg.matches("<polyline").count(), 4);
        assert!(svg.contains("t = 0</text>"));
        assert!(svg.contains("t = 0.05</text>"));
    }

    #[test]
    fn labels_with_markup_characters_are_escaped() {
        let bs = toy_bands(1);
        let ticks = vec![(0.0, "K<1>&Q".to_string())];
        let svg = band_diagram(&bs, &ticks);
        assert!(svg.contains("K&lt;1&gt;&amp;Q"));
        assert!(!svg.contains("K<1>"));
    }

    #[test]
    fn tick_positions_are_round_multiples() {
        let ticks = nice_ticks(0.0, 17.3);
        assert!(ticks.len() >= 4 && ticks.len() <= 10);
        let step = ticks[1] - ticks[0];
        for pair in ticks.windows(2) {
            assert!((pair[1] - pair[0] - step).abs() < 1e-9, "uneven spacing");
        }
        let mantissa = step / 10f64.powf(step.log10().floor());
        assert!(
            [1.0, 2.0, 5.0].iter().any(|m| (mantissa - m).abs() < 1e-9),
            "step {step} not on the 1-2-5 grid"
        );
        assert!(*ticks.first().unwrap() >= 0.0);
        assert!(*ticks.last().unwrap() <= 17.3 + 1e-9);
    }

    #[test]
    fn identical_inputs_render_identical_bytes() {
        let bs = toy_bands(2);
        let ticks = path_ticks(&KPath::square_default(4));
        assert_eq!(band_diagram(&bs, &ticks), band_diagram(&bs, &ticks));
    }
}
