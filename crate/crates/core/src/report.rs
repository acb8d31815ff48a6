//! Artifact emitters: branch CSV (round-trip-exact floats), JSON summaries
//! and hand-emitted SVG bifurcation diagrams (λ horizontal, ‖u‖_∞ vertical;
//! solid where γ₁ > 0, dashed where γ₁ < 0, folds marked).

use std::fmt::Write as _;

use crate::continuation::{Branch, WhyburnReport};
use crate::error::{Error, Result};
use crate::solvers::Stability;

pub const CSV_HEADER: &str = "s,lambda,eps,u_max,u_min,u_l2,gamma1,stability,is_fold";

/// 17 significant digits: parses back to the identical f64.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn stability_label(s: Option<Stability>) -> &'static str {
    match s {
        Some(Stability::Stable) => "stable",
        Some(Stability::Unstable) => "unstable",
        Some(Stability::Neutral) => "neutral",
        None => "unknown",
    }
}

fn weighted_l2(weights: &[f64], u: &[f64]) -> f64 {
    weights
        .iter()
        .zip(u)
        .map(|(w, v)| w * v * v)
        .sum::<f64>()
        .sqrt()
}

/// Renders one or more branches into the fixed-schema CSV.
pub fn branches_to_csv(branches: &[&Branch], weights: &[f64]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for branch in branches {
        for point in &branch.points {
            let sol = &point.solution;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                fmt_float(point.s),
                fmt_float(sol.lambda),
                fmt_float(sol.eps),
                fmt_float(sol.u_max()),
                fmt_float(sol.u_min()),
                fmt_float(weighted_l2(weights, &sol.u)),
                fmt_float(sol.gamma1.unwrap_or(f64::NAN)),
                stability_label(sol.stability),
                point.is_fold
            );
        }
    }
    out
}

/// One re-imported CSV record (test/round-trip helper).
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub s: f64,
    pub lambda: f64,
    pub eps: f64,
    pub u_max: f64,
    pub u_min: f64,
    pub u_l2: f64,
    pub gamma1: f64,
    pub stability: String,
    pub is_fold: bool,
}

/// Re-imports branch CSV text; the header must match the schema exactly.
pub fn parse_branch_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, "empty CSV")))?;
    if header != CSV_HEADER {
        return Err(Error::Contract(format!("unexpected CSV header `{header}`")));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 9 {
            return Err(Error::Contract(format!("CSV row {} has {} columns", i + 2, cols.len())));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::Contract(format!("bad float `{s}` in CSV row {}", i + 2)))
        };
        rows.push(CsvRow {
            s: num(cols[0])?,
            lambda: num(cols[1])?,
            eps: num(cols[2])?,
            u_max: num(cols[3])?,
            u_min: num(cols[4])?,
            u_l2: num(cols[5])?,
            gamma1: num(cols[6])?,
            stability: cols[7].to_string(),
            is_fold: cols[8] == "true",
        });
    }
    Ok(rows)
}

/// Sidecar CSV of full nodal vectors: one row per (point, node).
pub fn solutions_to_csv(branch: &Branch, nodes: &[[f64; 2]]) -> String {
    let mut out = String::from("point,node,x,y,u\n");
    for (k, point) in branch.points.iter().enumerate() {
        for (i, &ui) in point.solution.u.iter().enumerate() {
            let _ = writeln!(
                out,
                "{k},{i},{},{},{}",
                fmt_float(nodes[i][0]),
                fmt_float(nodes[i][1]),
                fmt_float(ui)
            );
        }
    }
    out
}

const SVG_W: f64 = 640.0;
const SVG_H: f64 = 480.0;
const MARGIN: f64 = 50.0;

struct Axes {
    x_lo: f64,
    x_hi: f64,
    y_lo: f64,
    y_hi: f64,
}

impl Axes {
    /// data ranges padded by 5% on each side
    fn from_points(pts: impl Iterator<Item = (f64, f64)>) -> Axes {
        let mut x_lo = f64::MAX;
        let mut x_hi = f64::MIN;
        let mut y_lo = f64::MAX;
        let mut y_hi = f64::MIN;
        for (x, y) in pts {
            x_lo = x_lo.min(x);
            x_hi = x_hi.max(x);
            y_lo = y_lo.min(y);
            y_hi = y_hi.max(y);
        }
        if x_lo > x_hi {
            return Axes { x_lo: 0.0, x_hi: 1.0, y_lo: 0.0, y_hi: 1.0 };
        }
        let pad = |lo: f64, hi: f64| {
            let span = (hi - lo).max(1e-12);
            (lo - 0.05 * span, hi + 0.05 * span)
        };
        let (x_lo, x_hi) = pad(x_lo, x_hi);
        let (y_lo, y_hi) = pad(y_lo, y_hi);
        Axes { x_lo, x_hi, y_lo, y_hi }
    }

    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let px = MARGIN + (x - self.x_lo) / (self.x_hi - self.x_lo) * (SVG_W - 2.0 * MARGIN);
        let py = SVG_H - MARGIN - (y - self.y_lo) / (self.y_hi - self.y_lo) * (SVG_H - 2.0 * MARGIN);
        (px, py)
    }
}

fn svg_open(axes: &Axes, title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_W}\" height=\"{SVG_H}\" \
         viewBox=\"0 0 {SVG_W} {SVG_H}\">"
    );
    let _ = writeln!(
        s,
        "<!-- x-range {} {} y-range {} {} -->",
        fmt_float(axes.x_lo),
        fmt_float(axes.x_hi),
        fmt_float(axes.y_lo),
        fmt_float(axes.y_hi)
    );
    let _ = writeln!(s, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\
         <line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>",
        m = MARGIN,
        b = SVG_H - MARGIN,
        r = SVG_W - MARGIN,
        t = MARGIN
    );
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-size=\"13\">lambda</text>\
         <text x=\"12\" y=\"{}\" font-size=\"13\" transform=\"rotate(-90 12 {})\">sup norm of u</text>",
        SVG_W / 2.0 - 24.0,
        SVG_H - 12.0,
        SVG_H / 2.0,
        SVG_H / 2.0
    );
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"24\" font-size=\"14\" text-anchor=\"middle\">{title}</text>",
        SVG_W / 2.0
    );
    s
}

fn polyline(points: &[(f64, f64)], stroke: &str, dashed: bool, opacity: f64) -> String {
    let mut attr = format!("fill=\"none\" stroke=\"{stroke}\" stroke-width=\"1.5\" stroke-opacity=\"{opacity:.2}\"");
    if dashed {
        attr.push_str(" stroke-dasharray=\"6,4\"");
    }
    let pts: Vec<String> = points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    format!("<polyline {attr} points=\"{}\"/>\n", pts.join(" "))
}

/// Diagram of a single branch: solid γ₁ > 0, dashed γ₁ < 0, folds circled.
pub fn branch_svg(branch: &Branch) -> String {
    let axes = Axes::from_points(
        branch
            .points
            .iter()
            .map(|p| (p.solution.lambda, p.solution.u_max())),
    );
    let mut s = svg_open(&axes, "solution branch");
    // split into runs of constant stability sign
    let mut run: Vec<(f64, f64)> = Vec::new();
    let mut run_dashed = false;
    let flush = |s: &mut String, run: &mut Vec<(f64, f64)>, dashed: bool| {
        if run.len() >= 2 {
            s.push_str(&polyline(run, "steelblue", dashed, 1.0));
        }
        run.clear();
    };
    for p in &branch.points {
        let dashed = p.solution.gamma1.map(|g| g < 0.0).unwrap_or(false);
        let xy = axes.map(p.solution.lambda, p.solution.u_max());
        if !run.is_empty() && dashed != run_dashed {
            run.push(xy);
            flush(&mut s, &mut run, run_dashed);
        }
        run_dashed = dashed;
        run.push(xy);
    }
    flush(&mut s, &mut run, run_dashed);
    for &idx in &branch.folds {
        let p = &branch.points[idx];
        let (x, y) = axes.map(p.solution.lambda, p.solution.u_max());
        let _ = writeln!(
            s,
            "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"4\" fill=\"none\" stroke=\"crimson\" stroke-width=\"1.5\"/>"
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Diagram of an ε family: one polyline per ε, opacity rising as ε falls.
pub fn whyburn_svg(report: &WhyburnReport) -> String {
    let axes = Axes::from_points(report.branches.iter().flat_map(|b| {
        b.points
            .iter()
            .map(|p| (p.solution.lambda, p.solution.u_max()))
    }));
    let mut s = svg_open(&axes, "regularized branches, eps decreasing");
    let m = report.branches.len().max(1);
    for (k, branch) in report.branches.iter().enumerate() {
        let opacity = 0.35 + 0.65 * ((k + 1) as f64) / (m as f64);
        let pts: Vec<(f64, f64)> = branch
            .points
            .iter()
            .map(|p| axes.map(p.solution.lambda, p.solution.u_max()))
            .collect();
        if pts.len() >= 2 {
            s.push_str(&polyline(&pts, "steelblue", false, opacity));
        }
    }
    s.push_str("</svg>\n");
    s
}
