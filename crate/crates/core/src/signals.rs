//! The four wake signals: opportunity curve (TOC), engagement (BEP),
//! value decay (VDI) and cross-duty resonance (CDR).
//!
//! Everything here is a pure function of its inputs.

use std::collections::BTreeSet;

use chrono::{DateTime, Datelike, FixedOffset, Timelike, Utc};
use serde::{Deserialize, Serialize};

use crate::duty::{days_between, DutyId, DutyRecord, TocParams};
use crate::scalar::{clamp, Scalar};

/// Opportunity value of acting `t_days` before the deadline.
///
/// Gaussian curves are piecewise: `sigma_pre_days` for `t > mu`, `sigma_post_days`
/// for `t < mu`. Step curves defer to [`toc_step`].
pub fn toc<T: Scalar>(t_days: T, params: &TocParams<T>) -> T {
    if params.is_step() {
        return toc_step(t_days, params.pickup_window_days.unwrap_or_else(T::zero));
    }
    let d = t_days - params.mu_days;
    let sigma = side_sigma(t_days, params);
    (-(d * d) / (T::lit(2.0) * sigma * sigma)).exp()
}

/// Cliff curve: 1 inside `[0, window]`, 0 before the window opens and after the deadline.
pub fn toc_step<T: Scalar>(t_days: T, pickup_window_days: T) -> T {
    if t_days >= T::zero() && t_days <= pickup_window_days {
        T::one()
    } else {
        T::zero()
    }
}

/// Analytic derivative of [`toc`] with respect to days-until-deadline.
pub fn dtoc_dt<T: Scalar>(t_days: T, params: &TocParams<T>) -> T {
    if params.is_step() || t_days == params.mu_days {
        return T::zero();
    }
    let sigma = side_sigma(t_days, params);
    -((t_days - params.mu_days) / (sigma * sigma)) * toc(t_days, params)
}

/// Normalized value decay: `max(0, dTOC/dt)` scaled so its peak (at `mu - sigma_post`) is 1.
///
/// Step curves report 1 inside the pickup window and 0 elsewhere.
pub fn vdi<T: Scalar>(t_days: T, params: &TocParams<T>) -> T {
    if params.is_step() {
        return toc(t_days, params);
    }
    let raw = dtoc_dt(t_days, params).max(T::zero());
    let norm = params.sigma_post_days * T::lit(0.5).exp();
    clamp(raw * norm, T::zero(), T::one())
}

fn side_sigma<T: Scalar>(t_days: T, params: &TocParams<T>) -> T {
    if t_days > params.mu_days {
        params.sigma_pre_days
    } else {
        params.sigma_post_days
    }
}

/// Device and habit state at the moment of a wake.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngagementContext {
    pub at: DateTime<Utc>,
    pub hour: u8,
    /// Monday = 0.
    pub weekday: u8,
    pub charging: bool,
    pub wifi: bool,
    pub ignore_streak: u32,
    pub hours_since_last_open: f64,
}

impl EngagementContext {
    /// Context with no modifiers; hour and weekday taken in the given UTC offset.
    pub fn neutral(at: DateTime<Utc>, utc_offset_minutes: i32) -> Self {
        let local = at.with_timezone(
            &FixedOffset::east_opt(utc_offset_minutes * 60).unwrap_or_else(|| FixedOffset::east_opt(0).unwrap()),
        );
        EngagementContext {
            at,
            hour: local.hour() as u8,
            weekday: local.weekday().num_days_from_monday() as u8,
            charging: false,
            wifi: false,
            ignore_streak: 0,
            hours_since_last_open: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseCell {
    pub responded: u32,
    pub total: u32,
}

/// Per (weekday, hour) response counts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngagementHistory {
    pub response_counts: [[ResponseCell; 24]; 7],
}

impl EngagementHistory {
    pub fn record(&mut self, weekday: u8, hour: u8, responded: bool) {
        let cell = &mut self.response_counts[weekday as usize % 7][hour as usize % 24];
        cell.total += 1;
        if responded {
            cell.responded += 1;
        }
    }

    pub fn cell(&self, weekday: u8, hour: u8) -> ResponseCell {
        self.response_counts[weekday as usize % 7][hour as usize % 24]
    }
}

/// Multipliers of the rule-based engagement model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BepRules<T> {
    pub settled_multiplier: T,
    pub ignore_dampener: T,
    pub stale_after_hours: T,
    pub stale_multiplier: T,
    pub floor: T,
}

impl<T: Scalar> Default for BepRules<T> {
    fn default() -> Self {
        BepRules {
            settled_multiplier: T::lit(1.2),
            ignore_dampener: T::lit(0.8),
            stale_after_hours: T::lit(48.0),
            stale_multiplier: T::lit(0.7),
            floor: T::lit(0.01),
        }
    }
}

/// Response probability under the default rule table.
pub fn bep<T: Scalar>(ctx: &EngagementContext, hist: &EngagementHistory) -> T {
    bep_with(ctx, hist, &BepRules::default())
}

/// Laplace-smoothed cell rate times the charging/wifi, ignore-streak and staleness modifiers.
pub fn bep_with<T: Scalar>(ctx: &EngagementContext, hist: &EngagementHistory, rules: &BepRules<T>) -> T {
    let cell = hist.cell(ctx.weekday, ctx.hour);
    let mut p = T::lit((cell.responded as f64 + 1.0) / (cell.total as f64 + 2.0));
    if ctx.charging && ctx.wifi {
        p = p * rules.settled_multiplier;
    }
    p = p * rules.ignore_dampener.powi(ctx.ignore_streak.min(i32::MAX as u32) as i32);
    if T::lit(ctx.hours_since_last_open) > rules.stale_after_hours {
        p = p * rules.stale_multiplier;
    }
    clamp(p, rules.floor, T::one())
}

const WINDOW_OVERLAP_DAYS: f64 = 14.0;
const CYCLE_PHASE_DAYS: u32 = 30;

const STOP_WORDS: &[&str] = &[
    "a", "an", "and", "as", "at", "by", "for", "from", "in", "into", "of", "on", "or", "the", "to", "via", "with",
];

fn capability_tokens(s: &str) -> BTreeSet<String> {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .filter(|w| !STOP_WORDS.contains(&w.as_str()))
        .collect()
}

/// Date at which the duty's curve peaks: `deadline - mu` days.
pub fn peak_date(d: &DutyRecord) -> DateTime<Utc> {
    d.deadline - chrono::Duration::milliseconds((d.toc_params.mu_days * 86_400_000.0).round() as i64)
}

/// Per-duty inputs to the resonance predicates, precomputed once per cycle.
#[derive(Debug, Clone)]
pub struct ResonanceFeatures<'a> {
    pub id: &'a DutyId,
    domain: &'a str,
    peak: DateTime<Utc>,
    deadline_doy: u32,
    capabilities: BTreeSet<String>,
}

impl<'a> ResonanceFeatures<'a> {
    pub fn of(d: &'a DutyRecord) -> Self {
        ResonanceFeatures {
            id: &d.id,
            domain: &d.counterparty_domain,
            peak: peak_date(d),
            deadline_doy: d.deadline.ordinal0() % 365,
            capabilities: d.escalation_capability.as_deref().map(capability_tokens).unwrap_or_default(),
        }
    }

    pub fn same_domain(&self, o: &Self) -> bool {
        self.domain == o.domain
    }

    pub fn windows_overlap(&self, o: &Self) -> bool {
        days_between(self.peak, o.peak).abs() <= WINDOW_OVERLAP_DAYS
    }

    pub fn shared_capability(&self, o: &Self) -> bool {
        self.capabilities.iter().any(|w| o.capabilities.contains(w))
    }

    /// Deadlines within 30 days of each other on the circular 365-day calendar.
    pub fn same_cycle_phase(&self, o: &Self) -> bool {
        let d = self.deadline_doy.abs_diff(o.deadline_doy);
        d.min(365 - d) <= CYCLE_PHASE_DAYS
    }

    pub fn score(&self, o: &Self) -> f64 {
        let mut s: f64 = 0.0;
        if self.same_domain(o) {
            s += 0.5;
        }
        if self.windows_overlap(o) {
            s += 0.3;
        }
        if self.shared_capability(o) {
            s += 0.2;
        }
        if self.same_cycle_phase(o) {
            s += 0.1;
        }
        s.min(1.0)
    }
}

/// Pairwise batching score, capped at 1.
pub fn cdr_pair(a: &DutyRecord, b: &DutyRecord) -> f64 {
    ResonanceFeatures::of(a).score(&ResonanceFeatures::of(b))
}

/// Strongest resonance of `duty` against `others`, with its partner.
///
/// Ties go to the lexicographically smaller partner id.
pub fn cdr_signal<'a, I>(duty: &DutyRecord, others: I) -> (f64, Option<DutyId>)
where
    I: IntoIterator<Item = &'a DutyRecord>,
{
    let me = ResonanceFeatures::of(duty);
    let feats: Vec<_> = others.into_iter().map(ResonanceFeatures::of).collect();
    best_resonance(&me, &feats)
}

/// Max-aggregation over precomputed features; entries sharing `me`'s id are skipped.
pub fn best_resonance(me: &ResonanceFeatures<'_>, others: &[ResonanceFeatures<'_>]) -> (f64, Option<DutyId>) {
    let mut best: Option<(f64, &DutyId)> = None;
    for other in others {
        if other.id == me.id {
            continue;
        }
        let s = me.score(other);
        best = match best {
            None => Some((s, other.id)),
            Some((bs, bid)) if s > bs || (s == bs && other.id < bid) => Some((s, other.id)),
            keep => keep,
        };
    }
    match best {
        Some((s, id)) => (s, Some(id.clone())),
        None => (0.0, None),
    }
}

/// The four signal values feeding the composite score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalBreakdown<T> {
    pub toc: T,
    pub bep: T,
    pub vdi: T,
    pub cdr: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cdr_partner: Option<DutyId>,
}

impl<T: Scalar> SignalBreakdown<T> {
    pub fn new(toc: T, bep: T, vdi: T, cdr: T) -> Self {
        SignalBreakdown {
            toc,
            bep,
            vdi,
            cdr,
            cdr_partner: None,
        }
    }
}
