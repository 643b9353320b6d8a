//! Minimal static line charts. Floating point is used for layout only.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::engine::RoundRecord;
use crate::network::NodeId;
use crate::scalar::Mass;

const W: f64 = 960.0;
const H: f64 = 420.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 45.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22",
    "#17becf",
];

struct Frame {
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn new(x_max: f64, y_min: f64, y_max: f64) -> Self {
        let (y_min, y_max) = if y_max > y_min { (y_min, y_max) } else { (y_min - 1.0, y_max + 1.0) };
        Frame { x_max: x_max.max(1.0), y_min, y_max }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + x / self.x_max * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y_min) / (self.y_max - self.y_min) * (H - TOP - BOTTOM)
    }

    fn open(&self, title: &str, y_label: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ =
            writeln!(s, r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{title}</text>"#, W / 2.0);
        let (x0, x1, y0, y1) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
        let _ = writeln!(s, r#"<path d="M{x0},{y0} L{x0},{y1} L{x1},{y1}" fill="none" stroke="black"/>"#);
        for i in 0..=5 {
            let xv = self.x_max * i as f64 / 5.0;
            let x = self.px(xv);
            let _ = writeln!(
                s,
                r#"<line x1="{x:.1}" y1="{y1}" x2="{x:.1}" y2="{:.1}" stroke="black"/>"#,
                y1 + 4.0
            );
            let _ =
                writeln!(s, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{:.0}</text>"#, y1 + 18.0, xv);
            let yv = self.y_min + (self.y_max - self.y_min) * i as f64 / 5.0;
            let y = self.py(yv);
            let _ = writeln!(
                s,
                r#"<line x1="{:.1}" y1="{y:.1}" x2="{x0}" y2="{y:.1}" stroke="black"/>"#,
                x0 - 4.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.1}</text>"#,
                x0 - 6.0,
                y + 4.0,
                yv
            );
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">k</text>"#, W / 2.0, H - 8.0);
        let _ = writeln!(
            s,
            r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{y_label}</text>"#,
            H / 2.0,
            H / 2.0
        );
        s
    }

    fn polyline(&self, s: &mut String, points: &[(f64, f64)], color: &str, extra: &str) {
        if points.is_empty() {
            return;
        }
        let pts: Vec<String> =
            points.iter().map(|&(x, y)| format!("{:.1},{:.1}", self.px(x), self.py(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1"{extra}/>"#,
            pts.join(" ")
        );
    }
}

fn f<T: Mass>(v: T) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Every active node's `q_s` over time, with the true average dashed.
pub fn state_chart<T: Mass>(records: &[RoundRecord<T>]) -> String {
    let x_max = records.last().map(|r| r.step as f64).unwrap_or(1.0);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for r in records {
        for s in r.per_node.values() {
            lo = lo.min(f(s.q_s));
            hi = hi.max(f(s.q_s));
        }
    }
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    let frame = Frame::new(x_max, lo.floor(), hi.ceil());
    let mut s = frame.open("State variables q_s over time", "q_s[k]");

    // One polyline per contiguous activity span of each node.
    let mut spans: BTreeMap<NodeId, Vec<Vec<(f64, f64)>>> = BTreeMap::new();
    let mut last_seen: BTreeMap<NodeId, usize> = BTreeMap::new();
    for r in records {
        for (&v, snap) in &r.per_node {
            let runs = spans.entry(v).or_default();
            if runs.is_empty() || last_seen.get(&v).is_none_or(|&k| k + 1 != r.step) {
                runs.push(Vec::new());
            }
            runs.last_mut().unwrap().push((r.step as f64, f(snap.q_s)));
            last_seen.insert(v, r.step);
        }
    }
    for (v, runs) in &spans {
        let color = PALETTE[v.index() % PALETTE.len()];
        for run in runs {
            frame.polyline(&mut s, run, color, r#" stroke-opacity="0.6""#);
        }
    }
    let q: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| r.q_true.as_ref().map(|q| (r.step as f64, f(*q.numer()) / f(*q.denom()))))
        .collect();
    frame.polyline(&mut s, &q, "black", r#" stroke-dasharray="6 4" stroke-width="2""#);
    s.push_str("</svg>\n");
    s
}

/// Consensus error over time.
pub fn error_chart<T: Mass>(records: &[RoundRecord<T>]) -> String {
    let x_max = records.last().map(|r| r.step as f64).unwrap_or(1.0);
    let hi = records.iter().map(|r| f(r.epsilon)).fold(0.0, f64::max);
    let frame = Frame::new(x_max, 0.0, hi.max(1.0));
    let mut s = frame.open("Average consensus error over time", "epsilon[k]");
    let pts: Vec<(f64, f64)> = records.iter().map(|r| (r.step as f64, f(r.epsilon))).collect();
    frame.polyline(&mut s, &pts, "#d62728", "");
    s.push_str("</svg>\n");
    s
}
