//! Composite scoring, zone classification, threshold adaptation and the wake cycle.

mod escalate;
mod message;

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::duty::{DutyRecord, DutyThresholds, DutyType, InteractionEvent, Outcome, RegistrySnapshot, Thresholds};
use crate::scalar::{clamp, Scalar};
use crate::signals::{
    best_resonance, bep_with, toc, vdi, BepRules, EngagementContext, EngagementHistory, ResonanceFeatures,
    SignalBreakdown,
};

pub use escalate::{escalate, EscalationResult};
pub use message::{batch_message, decision_message};

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("precondition violated: {0}")]
    PrecondViolation(String),
    #[error("escalation unavailable: {0}")]
    EscalationUnavailable(String),
    #[error("invalid engine config: {0}")]
    InvalidConfig(String),
}

/// Wake outcome, ordered `Sleep < Nudge < ActNow`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Zone {
    Sleep,
    Nudge,
    ActNow,
}

impl Zone {
    pub fn label(self) -> &'static str {
        match self {
            Zone::Sleep => "SLEEP",
            Zone::Nudge => "NUDGE",
            Zone::ActNow => "ACT_NOW",
        }
    }

    pub fn parse(s: &str) -> Option<Zone> {
        match s.trim().to_ascii_uppercase().replace([' ', '-'], "_").as_str() {
            "SLEEP" => Some(Zone::Sleep),
            "NUDGE" => Some(Zone::Nudge),
            "ACT_NOW" | "ACTNOW" => Some(Zone::ActNow),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ZoneReason {
    Scored,
    UrgencyFloor,
    BopisCap,
}

/// Recommended timing: act in this cycle or wait a number of days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Defer {
    ActNow,
    DeferDays(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights<T> {
    pub toc: T,
    pub bep: T,
    pub vdi: T,
    pub cdr: T,
}

impl<T: Scalar> Weights<T> {
    pub fn sum(&self) -> T {
        self.toc + self.bep + self.vdi + self.cdr
    }
}

impl<T: Scalar> Default for Weights<T> {
    fn default() -> Self {
        Weights {
            toc: T::lit(0.35),
            bep: T::lit(0.25),
            vdi: T::lit(0.25),
            cdr: T::lit(0.15),
        }
    }
}

/// Bounds and step size for threshold adaptation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRule<T> {
    pub lower: T,
    pub upper: T,
    pub min_gap: T,
}

impl<T: Scalar> Default for ThresholdRule<T> {
    fn default() -> Self {
        ThresholdRule {
            lower: T::lit(0.15),
            upper: T::lit(0.75),
            min_gap: T::lit(0.05),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub weights: Weights<f64>,
    pub alpha: f64,
    pub theta_bounds: (f64, f64),
    pub min_theta_gap: f64,
    pub initial_thresholds: (f64, f64),
    pub batch_threshold: f64,
    pub urgency_floor_days: BTreeMap<DutyType, f64>,
    pub defer_horizons_days: Vec<u32>,
    pub bep: BepRules<f64>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            weights: Weights::default(),
            alpha: 0.05,
            theta_bounds: (0.15, 0.75),
            min_theta_gap: 0.05,
            initial_thresholds: (0.35, 0.60),
            batch_threshold: 0.6,
            urgency_floor_days: DutyType::ALL
                .into_iter()
                .filter(|t| *t != DutyType::BopisPickup)
                .map(|t| (t, 7.0))
                .collect(),
            defer_horizons_days: vec![1, 3, 7],
            bep: BepRules::default(),
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: &str| Err(EngineError::InvalidConfig(m.to_owned()));
        if (self.weights.sum() - 1.0).abs() > 1e-9 {
            return bad("weights must sum to 1");
        }
        let w = &self.weights;
        if [w.toc, w.bep, w.vdi, w.cdr].iter().any(|x| *x < 0.0) {
            return bad("weights must be non-negative");
        }
        let (lo, hi) = self.theta_bounds;
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo + self.min_theta_gap > hi {
            return bad("theta bounds must be ordered within [0, 1] and admit the minimum gap");
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha must lie in (0, 1]");
        }
        if self.defer_horizons_days.windows(2).any(|p| p[0] >= p[1]) {
            return bad("defer horizons must be strictly increasing");
        }
        Ok(())
    }

    pub fn threshold_rule(&self) -> ThresholdRule<f64> {
        ThresholdRule {
            lower: self.theta_bounds.0,
            upper: self.theta_bounds.1,
            min_gap: self.min_theta_gap,
        }
    }

    pub fn initial_thresholds(&self) -> DutyThresholds {
        Thresholds::new(self.initial_thresholds.0, self.initial_thresholds.1, self.alpha)
    }

    pub fn urgency_floor(&self, t: DutyType) -> Option<f64> {
        self.urgency_floor_days.get(&t).copied()
    }
}

/// Weighted sum of the four signals.
pub fn composite_score<T: Scalar>(signals: &SignalBreakdown<T>, weights: &Weights<T>) -> T {
    weights.toc * signals.toc + weights.bep * signals.bep + weights.vdi * signals.vdi + weights.cdr * signals.cdr
}

/// Zone from the score alone.
pub fn zone_for_score<T: Scalar>(score: T, th: &Thresholds<T>) -> Zone {
    if score < th.theta1 {
        Zone::Sleep
    } else if score < th.theta2 {
        Zone::Nudge
    } else {
        Zone::ActNow
    }
}

/// Scored zone, then the urgency floor, then the BOPIS cap (which wins).
pub fn classify_zone<T: Scalar>(
    score: T,
    th: &Thresholds<T>,
    duty: &DutyRecord,
    t_days: f64,
    cfg: &EngineConfig,
) -> (Zone, ZoneReason) {
    let mut zone = zone_for_score(score, th);
    let mut reason = ZoneReason::Scored;
    if let Some(floor) = cfg.urgency_floor(duty.duty_type) {
        if (0.0..=floor).contains(&t_days) && zone < Zone::ActNow {
            zone = Zone::ActNow;
            reason = ZoneReason::UrgencyFloor;
        }
    }
    if duty.duty_type == DutyType::BopisPickup && zone > Zone::Nudge {
        zone = Zone::Nudge;
        reason = ZoneReason::BopisCap;
    }
    (zone, reason)
}

/// Moves the threshold that gated the fired notification.
///
/// A response pulls it toward the presented score, an ignore pushes it toward 1.
/// The result is clamped into the rule's bounds with `theta2 - theta1 >= min_gap`.
pub fn adapt_threshold<T: Scalar>(th: &Thresholds<T>, ev: &InteractionEvent, rule: &ThresholdRule<T>) -> Thresholds<T> {
    let score = clamp(T::lit(ev.score_at_fire), T::zero(), T::one());
    let step = |theta: T| match ev.outcome {
        Outcome::Responded => theta - th.alpha * (theta - score),
        Outcome::Ignored => theta + th.alpha * (T::one() - theta),
    };
    let mut out = *th;
    match ev.fired_zone {
        Zone::Sleep => return out,
        Zone::Nudge => {
            out.theta1 = clamp(step(th.theta1), rule.lower, rule.upper);
            if out.theta2 - out.theta1 < rule.min_gap {
                out.theta2 = (out.theta1 + rule.min_gap).min(rule.upper);
                out.theta1 = out.theta1.min(out.theta2 - rule.min_gap);
            }
        }
        Zone::ActNow => {
            out.theta2 = clamp(step(th.theta2), rule.lower, rule.upper);
            if out.theta2 - out.theta1 < rule.min_gap {
                out.theta1 = (out.theta2 - rule.min_gap).max(rule.lower);
                out.theta2 = out.theta2.max(out.theta1 + rule.min_gap);
            }
        }
    }
    out
}

/// Compares acting now against waiting each horizon; prefers the longer wait on ties.
pub fn defer_schedule(duty: &DutyRecord, t_days: f64, horizons: &[u32]) -> Defer {
    let params = &duty.toc_params;
    if params.is_step() {
        let window = params.pickup_window_days.unwrap_or(0.0);
        if t_days <= window {
            return Defer::ActNow;
        }
    }
    let mut best = (toc(t_days, params), Defer::ActNow);
    for &d in horizons {
        let later = t_days - d as f64;
        if later < 0.0 {
            continue;
        }
        let v = toc(later, params);
        if v >= best.0 {
            best = (v, Defer::DeferDays(d));
        }
    }
    best.1
}

/// One duty's evaluation in a wake cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WakeDecision {
    pub duty_id: crate::duty::DutyId,
    pub t_days: f64,
    pub signals: SignalBreakdown<f64>,
    pub score: f64,
    pub zone: Zone,
    pub zone_reason: ZoneReason,
    pub message: String,
    pub defer: Defer,
}

/// Evaluates a single duty. `peers` holds resonance features of every duty in the cycle.
pub fn evaluate_duty(
    duty: &DutyRecord,
    peers: &[ResonanceFeatures<'_>],
    th: &DutyThresholds,
    bep: f64,
    cfg: &EngineConfig,
    now: DateTime<Utc>,
) -> WakeDecision {
    let t_days = duty.days_until(now);
    let (cdr, partner) = best_resonance(&ResonanceFeatures::of(duty), peers);
    let signals = SignalBreakdown {
        toc: toc(t_days, &duty.toc_params),
        bep,
        vdi: vdi(t_days, &duty.toc_params),
        cdr,
        cdr_partner: partner,
    };
    let score = composite_score(&signals, &cfg.weights);
    let (zone, zone_reason) = classify_zone(score, th, duty, t_days, cfg);
    let defer = defer_schedule(duty, t_days, &cfg.defer_horizons_days);
    WakeDecision {
        duty_id: duty.id.clone(),
        t_days,
        signals,
        score,
        zone,
        zone_reason,
        message: String::new(),
        defer,
    }
}

/// Scores every duty in the snapshot against one shared context.
///
/// Emits one decision per duty in snapshot order, `Sleep` included.
pub fn evaluate_cycle(
    snap: &RegistrySnapshot,
    ctx: &EngagementContext,
    hist: &EngagementHistory,
    cfg: &EngineConfig,
    now: DateTime<Utc>,
) -> Vec<WakeDecision> {
    let peers: Vec<_> = snap.duties.iter().map(ResonanceFeatures::of).collect();
    let bep = bep_with(ctx, hist, &cfg.bep);
    let fallback = cfg.initial_thresholds();
    snap.duties
        .iter()
        .map(|duty| {
            let th = snap.thresholds.get(&duty.id).unwrap_or(&fallback);
            let mut d = evaluate_duty(duty, &peers, th, bep, cfg, now);
            let partner = d
                .signals
                .cdr_partner
                .as_ref()
                .filter(|_| d.signals.cdr >= cfg.batch_threshold)
                .and_then(|id| snap.duties.iter().find(|o| &o.id == id));
            d.message = match partner {
                Some(p) => message::batch_text(duty, p),
                None => decision_message(duty, &d),
            };
            d
        })
        .collect()
}
