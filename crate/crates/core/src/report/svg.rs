//! Hand-written SVG 1.1. Coordinates use two decimals so output bytes are
//! stable for fixed input.

use std::fmt::Write as _;
use std::path::Path;

use super::{BarDatum, ShapPoint, ViolinSummary};
use crate::error::{Error, Result};

pub const LOSS_LOW_COLOR: [u8; 3] = [0x08, 0x30, 0x6b];
pub const LOSS_HIGH_COLOR: [u8; 3] = [0xff, 0xff, 0xcc];
const SIGNIFICANT_FILL: &str = "#2166ac";
const NONSIGNIFICANT_FILL: &str = "#bdbdbd";
const FEATURE_LOW_COLOR: [u8; 3] = [0x3b, 0x4c, 0xc0];
const FEATURE_HIGH_COLOR: [u8; 3] = [0xb4, 0x04, 0x26];

const WIDTH: f64 = 760.0;
const LABEL_W: f64 = 170.0;
const RIGHT_PAD: f64 = 30.0;
const TOP: f64 = 40.0;
const AXIS_H: f64 = 50.0;
const LEGEND_W: f64 = 110.0;

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

/// Linear RGB interpolation, `t` clamped to [0, 1].
fn lerp_color(a: [u8; 3], b: [u8; 3], t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let c: Vec<u8> = a
        .iter()
        .zip(&b)
        .map(|(&x, &y)| (x as f64 + (y as f64 - x as f64) * t).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn hex(c: [u8; 3]) -> String {
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Fill for a mean loss within the shared range `[lo, hi]`.
pub(crate) fn loss_color(loss: f64, lo: f64, hi: f64) -> String {
    let t = if hi > lo { (loss - lo) / (hi - lo) } else { 0.0 };
    lerp_color(LOSS_LOW_COLOR, LOSS_HIGH_COLOR, t)
}

#[derive(Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    x0: f64,
    x1: f64,
}

impl Axis {
    /// Covers every value plus zero, with 5% padding.
    fn covering(values: impl Iterator<Item = f64>, x0: f64, x1: f64) -> Self {
        let (mut lo, mut hi) = values.fold((0.0f64, 0.0f64), |(l, h), v| (l.min(v), h.max(v)));
        if hi <= lo {
            hi = lo + 1.0;
        }
        let pad = 0.05 * (hi - lo);
        lo -= pad;
        hi += pad;
        Self { lo, hi, x0, x1 }
    }

    fn x(&self, v: f64) -> f64 {
        self.x0 + (v - self.lo) / (self.hi - self.lo) * (self.x1 - self.x0)
    }

    fn draw(&self, doc: &mut String, y: f64, label: &str) {
        let _ = writeln!(
            doc,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#000000" stroke-width="1"/>"##,
            self.x0, self.x1
        );
        for i in 0..=4 {
            let v = self.lo + (self.hi - self.lo) * i as f64 / 4.0;
            let x = self.x(v);
            let _ = writeln!(
                doc,
                r##"<line x1="{x:.2}" y1="{y:.2}" x2="{x:.2}" y2="{:.2}" stroke="#000000" stroke-width="1"/>"##,
                y + 4.0
            );
            let _ = writeln!(
                doc,
                r#"<text x="{x:.2}" y="{:.2}" font-size="10" text-anchor="middle">{:.3}</text>"#,
                y + 16.0,
                v
            );
        }
        let _ = writeln!(
            doc,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"#,
            0.5 * (self.x0 + self.x1),
            y + 34.0,
            escape(label)
        );
    }

    fn zero_line(&self, doc: &mut String, y0: f64, y1: f64) {
        let x = self.x(0.0);
        let _ = writeln!(
            doc,
            r##"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{y1:.2}" stroke="#666666" stroke-width="1" stroke-dasharray="4,3"/>"##
        );
    }
}

fn open(doc: &mut String, width: f64, height: f64, title: &str) {
    let _ = writeln!(doc, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        doc,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(doc, r##"<rect x="0" y="0" width="{width:.0}" height="{height:.0}" fill="#ffffff"/>"##);
    let _ = writeln!(
        doc,
        r#"<text x="{:.2}" y="22" font-size="14" text-anchor="middle">{}</text>"#,
        width / 2.0,
        escape(title)
    );
}

fn row_label(doc: &mut String, y: f64, name: &str) {
    let _ = writeln!(
        doc,
        r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"#,
        LABEL_W - 8.0,
        y + 4.0,
        escape(name)
    );
}

fn write_file(path: &Path, doc: &str) -> Result<()> {
    std::fs::write(path, doc).map_err(|e| Error::io(path, e))
}

fn sorted_bars(bars: &[BarDatum]) -> Vec<&BarDatum> {
    let mut v: Vec<&BarDatum> = bars.iter().collect();
    v.sort_by(|a, b| {
        b.pooled_mean
            .total_cmp(&a.pooled_mean)
            .then_with(|| a.variable.cmp(&b.variable))
    });
    v
}

/// Horizontal bars at the pooled mean with prediction-interval whiskers.
/// Bars whose interval is not entirely above zero are grey.
pub fn bar_svg(bars: &[BarDatum]) -> Result<String> {
    if bars.is_empty() {
        return Err(Error::Validation("bar chart needs at least one variable".into()));
    }
    const ROW: f64 = 30.0;
    let bars = sorted_bars(bars);
    let height = TOP + ROW * bars.len() as f64 + AXIS_H;
    let axis = Axis::covering(
        bars.iter().flat_map(|b| [b.pi_low, b.pi_high, b.pooled_mean]),
        LABEL_W,
        WIDTH - RIGHT_PAD,
    );
    let mut doc = String::new();
    open(&mut doc, WIDTH, height, "Pooled model reliance (95% prediction interval)");
    for (r, b) in bars.iter().enumerate() {
        let yc = TOP + ROW * (r as f64 + 0.5);
        row_label(&mut doc, yc, &b.variable);
        let (x0, xm) = (axis.x(0.0), axis.x(b.pooled_mean));
        let fill = if b.significant { SIGNIFICANT_FILL } else { NONSIGNIFICANT_FILL };
        let _ = writeln!(
            doc,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
            x0.min(xm),
            yc - 8.0,
            (xm - x0).abs(),
            16.0
        );
        let (xl, xh) = (axis.x(b.pi_low), axis.x(b.pi_high));
        let _ = writeln!(
            doc,
            r##"<path d="M{xl:.2} {:.2}V{:.2}M{xl:.2} {yc:.2}H{xh:.2}M{xh:.2} {:.2}V{:.2}" stroke="#222222" stroke-width="1.2" fill="none"/>"##,
            yc - 5.0,
            yc + 5.0,
            yc - 5.0,
            yc + 5.0
        );
    }
    let bottom = TOP + ROW * bars.len() as f64;
    axis.zero_line(&mut doc, TOP, bottom);
    axis.draw(&mut doc, bottom + 4.0, "average reliance");
    doc.push_str("</svg>\n");
    Ok(doc)
}

pub fn render_bar_svg(bars: &[BarDatum], path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &bar_svg(bars)?)
}

/// One horizontal violin per variable. Slice heights scale with the
/// proportion of models; fills map slice mean loss onto the shared
/// `loss_range` (dark blue = lowest loss).
pub fn violin_svg(summaries: &[ViolinSummary], loss_range: (f64, f64)) -> Result<String> {
    if summaries.is_empty() {
        return Err(Error::Validation("violin plot needs at least one variable".into()));
    }
    const ROW: f64 = 56.0;
    let (loss_lo, loss_hi) = loss_range;
    let plot_right = WIDTH - RIGHT_PAD - LEGEND_W;
    let height = TOP + ROW * summaries.len() as f64 + AXIS_H;
    let axis = Axis::covering(
        summaries
            .iter()
            .flat_map(|s| s.slices.iter().flat_map(|sl| [sl.lo, sl.hi])),
        LABEL_W,
        plot_right,
    );
    let max_prop = summaries
        .iter()
        .flat_map(|s| s.slices.iter().map(|sl| sl.proportion))
        .fold(0.0f64, f64::max);
    let mut doc = String::new();
    open(&mut doc, WIDTH, height, "Model reliance across near-optimal models");
    let _ = writeln!(
        doc,
        r#"<defs><linearGradient id="loss-scale" x1="0" y1="1" x2="0" y2="0"><stop offset="0" stop-color="{}"/><stop offset="1" stop-color="{}"/></linearGradient></defs>"#,
        hex(LOSS_LOW_COLOR),
        hex(LOSS_HIGH_COLOR)
    );
    for (r, s) in summaries.iter().enumerate() {
        let yc = TOP + ROW * (r as f64 + 0.5);
        row_label(&mut doc, yc, &s.variable);
        for sl in &s.slices {
            let half = 0.45 * ROW * sl.proportion / max_prop.max(f64::MIN_POSITIVE);
            let (x0, x1) = (axis.x(sl.lo), axis.x(sl.hi));
            let _ = writeln!(
                doc,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                x0,
                yc - half,
                (x1 - x0).max(1.0),
                2.0 * half,
                loss_color(sl.mean_loss, loss_lo, loss_hi)
            );
        }
    }
    let bottom = TOP + ROW * summaries.len() as f64;
    axis.zero_line(&mut doc, TOP, bottom);
    axis.draw(&mut doc, bottom + 4.0, "model reliance");

    let lx = plot_right + 30.0;
    let (ly0, ly1) = (TOP + 10.0, TOP + 10.0 + 120.0);
    let _ = writeln!(
        doc,
        r##"<rect x="{lx:.2}" y="{ly0:.2}" width="16" height="{:.2}" fill="url(#loss-scale)" stroke="#444444" stroke-width="0.5"/>"##,
        ly1 - ly0
    );
    let _ = writeln!(doc, r#"<text x="{:.2}" y="{:.2}" font-size="10">{loss_hi:.4}</text>"#, lx + 20.0, ly0 + 8.0);
    let _ = writeln!(doc, r#"<text x="{:.2}" y="{:.2}" font-size="10">{loss_lo:.4}</text>"#, lx + 20.0, ly1);
    let _ = writeln!(doc, r#"<text x="{lx:.2}" y="{:.2}" font-size="10">loss</text>"#, ly0 - 6.0);
    doc.push_str("</svg>\n");
    Ok(doc)
}

pub fn render_violin_svg(summaries: &[ViolinSummary], loss_range: (f64, f64), path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &violin_svg(summaries, loss_range)?)
}

/// Strip plot of per-instance SHAP values, one row per variable in the
/// given order; dot colour follows the within-variable rank of the
/// feature value.
pub fn shap_strip_svg(points: &[ShapPoint], order: &[String]) -> Result<String> {
    if order.is_empty() {
        return Err(Error::Validation("SHAP summary needs at least one variable".into()));
    }
    const ROW: f64 = 40.0;
    let height = TOP + ROW * order.len() as f64 + AXIS_H;
    let axis = Axis::covering(points.iter().map(|p| p.shap_value), LABEL_W, WIDTH - RIGHT_PAD);
    let mut doc = String::new();
    open(&mut doc, WIDTH, height, "SHAP values of the optimal model");
    for (r, name) in order.iter().enumerate() {
        let yc = TOP + ROW * (r as f64 + 0.5);
        row_label(&mut doc, yc, name);
        let row: Vec<&ShapPoint> = points.iter().filter(|p| &p.variable == name).collect();
        let mut by_value: Vec<usize> = (0..row.len()).collect();
        by_value.sort_by(|&a, &b| row[a].feature_value.total_cmp(&row[b].feature_value));
        let mut rank = vec![0.0; row.len()];
        // tied feature values share the lowest rank so binary features get two colours
        let mut i = 0;
        while i < by_value.len() {
            let mut k = i;
            while k + 1 < by_value.len() && row[by_value[k + 1]].feature_value == row[by_value[i]].feature_value {
                k += 1;
            }
            for &idx in &by_value[i..=k] {
                rank[idx] = i as f64;
            }
            i = k + 1;
        }
        let denom = (row.len().max(2) - 1) as f64;
        for (n, p) in row.iter().enumerate() {
            // deterministic vertical jitter
            let jitter = ((n as f64 * 0.618_033_988_749_895).fract() - 0.5) * 0.6 * ROW;
            let t = if row.len() == 1 { 0.5 } else { rank[n] / denom };
            let _ = writeln!(
                doc,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{}" fill-opacity="0.8"/>"#,
                axis.x(p.shap_value),
                yc + jitter,
                lerp_color(FEATURE_LOW_COLOR, FEATURE_HIGH_COLOR, t)
            );
        }
    }
    let bottom = TOP + ROW * order.len() as f64;
    axis.zero_line(&mut doc, TOP, bottom);
    axis.draw(&mut doc, bottom + 4.0, "SHAP value (impact on predicted probability)");
    doc.push_str("</svg>\n");
    Ok(doc)
}
