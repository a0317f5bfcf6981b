//! Plain SVG charts and a markdown table built from campaign CSVs.
//!
//! Output is a pure function of the input files: fixed layout, fixed number
//! formatting, rows in file order.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::path::{Path, PathBuf};

use crate::error::{RcdpError, Result};
use crate::experiments::metrics::{quantile, read_csv, MetricsRow, ReplicationRecord};

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 130.0;

/// Half-width of the normal 95% interval for a mean.
pub fn ci_half_width(sd: f64, n: usize) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    1.96 * sd / (n as f64).sqrt()
}

/// Five-number box summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxStats {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

impl BoxStats {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        Some(Self {
            min: v[0],
            q25: quantile(&v, 0.25),
            median: quantile(&v, 0.5),
            q75: quantile(&v, 0.75),
            max: v[v.len() - 1],
        })
    }
}

fn load<T: for<'de> serde::Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| RcdpError::Results(format!("{}: {e}", path.display())))?;
    read_csv(file).map_err(|e| RcdpError::Results(format!("{}: {e}", path.display())))
}

/// Reads `summary.csv` and `replications.csv` from `results` and writes
/// `mean_cost.svg`, `error.svg`, `cost_boxes.svg`, `efficiency.svg`, and `report.md`
/// into `out`. Returns the written paths.
pub fn write_report(results: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let summary: Vec<MetricsRow> = load(&results.join("summary.csv"))?;
    let records: Vec<ReplicationRecord> = load(&results.join("replications.csv"))?;
    if summary.is_empty() {
        return Err(RcdpError::Results("summary.csv has no rows".into()));
    }
    fs::create_dir_all(out)?;
    let files = [
        ("mean_cost.svg", mean_cost_svg(&summary)),
        ("error.svg", error_svg(&summary)),
        ("cost_boxes.svg", cost_box_svg(&summary, &records)),
        ("efficiency.svg", efficiency_svg(&summary, &records)),
        ("report.md", markdown(&summary)),
    ];
    let mut written = Vec::new();
    for (name, body) in files {
        let path = out.join(name);
        fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}

fn label(row: &MetricsRow) -> String {
    format!("{} / {}", row.scenario, row.policy)
}

fn rows_for<'a>(records: &'a [ReplicationRecord], row: &MetricsRow) -> impl Iterator<Item = &'a ReplicationRecord> + 'a {
    let (scenario, policy) = (row.scenario.clone(), row.policy.clone());
    records.iter().filter(move |r| r.success && r.scenario == scenario && r.policy == policy)
}

/// Cost boxes: quartiles from the summary, median and whiskers from the records.
pub fn cost_boxes(summary: &[MetricsRow], records: &[ReplicationRecord]) -> Vec<Option<BoxStats>> {
    summary
        .iter()
        .map(|row| {
            let costs: Vec<f64> = rows_for(records, row).map(|r| r.cost).collect();
            BoxStats::from_values(&costs).map(|b| BoxStats { q25: row.q25, q75: row.q75, ..b })
        })
        .collect()
}

/// Per-record benchmark over realized cost.
pub fn efficiency_boxes(summary: &[MetricsRow], records: &[ReplicationRecord]) -> Vec<Option<BoxStats>> {
    summary
        .iter()
        .map(|row| {
            let eff: Vec<f64> = rows_for(records, row).filter_map(|r| r.benchmark_cost.map(|b| b / r.cost)).collect();
            BoxStats::from_values(&eff)
        })
        .collect()
}

struct Canvas {
    body: String,
    lo: f64,
    hi: f64,
    slots: usize,
}

impl Canvas {
    fn new(title: &str, y_label: &str, lo: f64, hi: f64, slots: usize) -> Self {
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 1.0, lo + 1.0) };
        let pad = 0.05 * (hi - lo);
        let mut c = Self { body: String::new(), lo: lo - pad, hi: hi + pad, slots: slots.max(1) };
        let _ = writeln!(
            c.body,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(c.body, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(c.body, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, esc(title));
        let (x0, y0, y1) = (MARGIN_L, MARGIN_T, HEIGHT - MARGIN_B);
        let _ = writeln!(c.body, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
        let _ = writeln!(c.body, r#"<line x1="{x0}" y1="{y1}" x2="{}" y2="{y1}" stroke="black"/>"#, WIDTH - MARGIN_R);
        for i in 0..=4 {
            let v = c.lo + (c.hi - c.lo) * i as f64 / 4.0;
            let y = c.y(v);
            let _ = writeln!(c.body, r#"<line x1="{}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/>"#, x0 - 4.0);
            let _ = writeln!(c.body, r#"<text x="{}" y="{:.2}" text-anchor="end">{v:.3}</text>"#, x0 - 6.0, y + 4.0);
        }
        let _ = writeln!(
            c.body,
            r#"<text x="16" y="{:.2}" transform="rotate(-90 16 {:.2})" text-anchor="middle">{}</text>"#,
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            esc(y_label)
        );
        c
    }

    fn y(&self, v: f64) -> f64 {
        let (top, bottom) = (MARGIN_T, HEIGHT - MARGIN_B);
        bottom - (v - self.lo) / (self.hi - self.lo) * (bottom - top)
    }

    fn x(&self, slot: usize) -> f64 {
        let w = (WIDTH - MARGIN_L - MARGIN_R) / self.slots as f64;
        MARGIN_L + w * (slot as f64 + 0.5)
    }

    fn half_slot(&self) -> f64 {
        (WIDTH - MARGIN_L - MARGIN_R) / self.slots as f64 / 2.0
    }

    fn tick_label(&mut self, slot: usize, text: &str) {
        let (x, y) = (self.x(slot), HEIGHT - MARGIN_B + 12.0);
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" transform="rotate(45 {x:.2} {y:.2})">{}</text>"#,
            esc(text)
        );
    }

    fn vline(&mut self, x: f64, a: f64, b: f64) {
        let _ = writeln!(self.body, r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, self.y(a), self.y(b));
    }

    fn hline(&mut self, x: f64, half: f64, v: f64) {
        let y = self.y(v);
        let _ = writeln!(self.body, r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black"/>"#, x - half, x + half);
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > hi {
        (0.0, 1.0)
    } else {
        (lo, hi)
    }
}

fn mean_cost_svg(summary: &[MetricsRow]) -> String {
    let hw: Vec<f64> = summary.iter().map(|r| ci_half_width(r.sd_cost, r.successes)).collect();
    let (lo, hi) = bounds(summary.iter().zip(&hw).flat_map(|(r, h)| [r.mean_cost - h, r.mean_cost + h]));
    let mut c = Canvas::new("Mean cost with 95% interval", "cost", lo, hi, summary.len());
    for (i, (row, &h)) in summary.iter().zip(&hw).enumerate() {
        let x = c.x(i);
        if row.mean_cost.is_finite() {
            if h.is_finite() {
                c.vline(x, row.mean_cost - h, row.mean_cost + h);
                c.hline(x, 5.0, row.mean_cost - h);
                c.hline(x, 5.0, row.mean_cost + h);
            }
            let y = c.y(row.mean_cost);
            let _ = writeln!(c.body, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3.5" fill="steelblue"/>"#);
            let _ = writeln!(c.body, r#"<text x="{:.2}" y="{:.2}" font-size="9">{:.3} ± {h:.3}</text>"#, x + 6.0, y - 6.0, row.mean_cost);
        }
        c.tick_label(i, &label(row));
    }
    c.finish()
}

fn error_svg(summary: &[MetricsRow]) -> String {
    let (_, hi) = bounds(summary.iter().map(|r| r.error));
    let mut c = Canvas::new("Root mean squared gap to benchmark", "error", 0.0, hi, summary.len());
    let half = c.half_slot() * 0.6;
    for (i, row) in summary.iter().enumerate() {
        let x = c.x(i);
        if row.error.is_finite() {
            let (y0, y1) = (c.y(0.0), c.y(row.error));
            let _ = writeln!(
                c.body,
                r#"<rect x="{:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="indianred"/>"#,
                x - half,
                2.0 * half,
                (y0 - y1).max(0.0)
            );
            let _ = writeln!(c.body, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="9">{:.3}</text>"#, y1 - 4.0, row.error);
        }
        c.tick_label(i, &label(row));
    }
    c.finish()
}

fn box_svg(title: &str, y_label: &str, summary: &[MetricsRow], boxes: &[Option<BoxStats>]) -> String {
    let (lo, hi) = bounds(boxes.iter().flatten().flat_map(|b| [b.min, b.max]));
    let mut c = Canvas::new(title, y_label, lo, hi, summary.len());
    let half = c.half_slot() * 0.5;
    for (i, (row, b)) in summary.iter().zip(boxes).enumerate() {
        let x = c.x(i);
        if let Some(b) = b {
            c.vline(x, b.min, b.q25);
            c.vline(x, b.q75, b.max);
            c.hline(x, half * 0.5, b.min);
            c.hline(x, half * 0.5, b.max);
            let (top, bottom) = (c.y(b.q75), c.y(b.q25));
            let _ = writeln!(
                c.body,
                r#"<rect x="{:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="lightsteelblue" stroke="black"/>"#,
                x - half,
                2.0 * half,
                (bottom - top).max(0.0)
            );
            c.hline(x, half, b.median);
        }
        c.tick_label(i, &label(row));
    }
    c.finish()
}

fn cost_box_svg(summary: &[MetricsRow], records: &[ReplicationRecord]) -> String {
    box_svg("Cost quartiles", "cost", summary, &cost_boxes(summary, records))
}

fn efficiency_svg(summary: &[MetricsRow], records: &[ReplicationRecord]) -> String {
    box_svg("Relative efficiency (benchmark / cost)", "efficiency", summary, &efficiency_boxes(summary, records))
}

fn markdown(summary: &[MetricsRow]) -> String {
    let mut s = String::from(
        "| scenario | policy | runs | successes | mean cost | 95% CI ± | sd | error | q25 | q75 | mean disamb | mean weight | efficiency | satisfied |\n",
    );
    s.push_str("|---|---|---:|---:|---:|---:|---:|---:|---:|---:|---:|---:|---:|---:|\n");
    for r in summary {
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} | {:.3} | {:.3} | {:.4} | {:.3} |",
            r.scenario,
            r.policy,
            r.runs,
            r.successes,
            r.mean_cost,
            ci_half_width(r.sd_cost, r.successes),
            r.sd_cost,
            r.error,
            r.q25,
            r.q75,
            r.mean_n_disamb,
            r.mean_weight_used,
            r.relative_efficiency,
            r.constraint_satisfaction
        );
    }
    s
}
