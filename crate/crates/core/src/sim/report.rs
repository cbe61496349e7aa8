use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::SimMetrics;

/// One table row with deltas against the first policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyRow {
    pub policy: String,
    pub mean_captured_toc: f64,
    pub ignore_rate: f64,
    pub notifications_sent: u64,
    pub mean_notifications_per_duty: f64,
    pub duties_missed: u64,
    /// Relative change of `mean_captured_toc` vs the first row; `None` when the base is 0.
    pub captured_toc_delta: Option<f64>,
    pub ignore_rate_delta: Option<f64>,
}

const HEADER: [&str; 7] = ["policy", "captured_toc", "ignore_rate", "sent", "per_duty", "missed", "d_toc/d_ignore"];

fn rel(v: f64, base: f64) -> Option<f64> {
    (base != 0.0).then(|| (v - base) / base)
}

impl SimMetrics {
    pub fn rows(&self) -> Vec<PolicyRow> {
        let Some(base) = self.policies.first() else {
            return Vec::new();
        };
        self.policies
            .iter()
            .map(|p| PolicyRow {
                policy: p.policy.clone(),
                mean_captured_toc: p.mean_captured_toc,
                ignore_rate: p.ignore_rate,
                notifications_sent: p.notifications_sent,
                mean_notifications_per_duty: p.mean_notifications_per_duty,
                duties_missed: p.missed,
                captured_toc_delta: rel(p.mean_captured_toc, base.mean_captured_toc),
                ignore_rate_delta: rel(p.ignore_rate, base.ignore_rate),
            })
            .collect()
    }
}

fn pct(d: Option<f64>) -> String {
    d.map_or_else(|| "n/a".to_owned(), |d| format!("{:+.1}%", d * 100.0))
}

/// Plain-text comparison table; columns are fixed, rows follow policy order.
pub fn render_table(metrics: &SimMetrics) -> String {
    let rows: Vec<[String; 7]> = metrics
        .rows()
        .into_iter()
        .map(|r| {
            [
                r.policy,
                format!("{:.4}", r.mean_captured_toc),
                format!("{:.4}", r.ignore_rate),
                r.notifications_sent.to_string(),
                format!("{:.2}", r.mean_notifications_per_duty),
                r.duties_missed.to_string(),
                format!("{} / {}", pct(r.captured_toc_delta), pct(r.ignore_rate_delta)),
            ]
        })
        .collect();
    let mut widths = HEADER.map(str::len);
    for r in &rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[&str]| {
        let parts: Vec<String> = cells
            .iter()
            .zip(widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(&mut out, &HEADER);
    for r in &rows {
        line(&mut out, &r.iter().map(String::as_str).collect::<Vec<_>>());
    }
    out
}
