//! Seeded Monte Carlo comparison of reminder policies.
//!
//! Every user is simulated independently on a 15-minute (configurable) clock.
//! Randomness comes from Xoshiro256++ streams whose 64-bit seeds are the
//! SplitMix64 finalizer applied to `(seed, user, stream)`; the generator
//! itself is expanded from that seed with SplitMix64. Each policy sees the
//! same duties and the same device context for a given user (common random
//! numbers); only the user's response draws are policy-specific.

mod policy;
mod report;

use std::collections::BTreeMap;

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::duty::{DutyId, DutyRecord, DutyType, InteractionEvent, Outcome, Thresholds};
use crate::engine::{adapt_threshold, classify_zone, composite_score, defer_schedule, Defer, EngineConfig, Zone};
use crate::signals::{bep_with, toc, vdi, EngagementContext, EngagementHistory, ResonanceFeatures, SignalBreakdown};

pub use policy::{Policy, DEFAULT_COOLDOWN_HOURS};
pub use report::{render_table, PolicyRow};

/// The scenario shipped with the repository.
pub const DEFAULT_SCENARIO: &str = include_str!("../../../../scenarios/default.json");

/// Every simulation clock starts on this Monday.
pub fn sim_epoch() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2026, 1, 5, 0, 0, 0).unwrap()
}

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
}

/// One synthetic user. Responds iff a uniform draw falls below
/// `hourly_receptivity[hour] * weekday_modifier[weekday] * base_response_rate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimUserProfile {
    pub hourly_receptivity: [f64; 24],
    pub weekday_modifier: [f64; 7],
    pub base_response_rate: f64,
}

impl SimUserProfile {
    pub fn response_probability(&self, hour: u8, weekday: u8) -> f64 {
        (self.hourly_receptivity[hour as usize % 24] * self.weekday_modifier[weekday as usize % 7] * self.base_response_rate)
            .clamp(0.0, 1.0)
    }

    fn validate(&self) -> Result<(), String> {
        let ok = |x: f64| (0.0..=1.0).contains(&x);
        if !self.hourly_receptivity.iter().all(|x| ok(*x)) || !ok(self.base_response_rate) {
            return Err("receptivity and base response rate must lie in [0, 1]".into());
        }
        if !self.weekday_modifier.iter().all(|x| x.is_finite() && *x >= 0.0) {
            return Err("weekday modifiers must be >= 0".into());
        }
        Ok(())
    }
}

/// How per-user profiles are drawn around the template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub template: SimUserProfile,
    /// Uniform +/- jitter applied to each hourly receptivity.
    pub receptivity_jitter: f64,
    /// Range the base response rate is drawn from.
    pub base_response_range: (f64, f64),
}

/// Day/night device schedule the context is drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceSchedule {
    /// Probability of being on wifi while home (evenings, nights, weekends) and away.
    pub wifi_home: f64,
    pub wifi_away: f64,
    /// First and last-plus-one hour of the weekday away period.
    pub away_hours: (u8, u8),
    pub charging_by_hour: [f64; 24],
    /// App opens per hour at full receptivity.
    pub opens_per_hour: f64,
}

impl Default for DeviceSchedule {
    fn default() -> Self {
        let mut charging = [0.1; 24];
        for (h, p) in charging.iter_mut().enumerate() {
            *p = match h {
                0..=6 | 23 => 0.85,
                18..=22 => 0.3,
                _ => 0.1,
            };
        }
        DeviceSchedule {
            wifi_home: 0.9,
            wifi_away: 0.2,
            away_hours: (8, 18),
            charging_by_hour: charging,
            opens_per_hour: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    pub n_users: usize,
    pub horizon_days: u32,
    /// Expected arrivals per user per day, by duty type.
    pub duty_mix: BTreeMap<DutyType, f64>,
    #[serde(default = "default_tick")]
    pub tick_minutes: u32,
    pub policies: Vec<String>,
    pub population: Population,
    #[serde(default)]
    pub device: DeviceSchedule,
    /// Minimum spacing between DAWN notifications for one duty.
    #[serde(default = "default_cooldown")]
    pub dawn_cooldown_hours: f64,
    #[serde(default)]
    pub engine: EngineConfig,
}

fn default_tick() -> u32 {
    15
}

fn default_cooldown() -> f64 {
    DEFAULT_COOLDOWN_HOURS
}

impl SimConfig {
    pub fn default_scenario() -> Self {
        serde_json::from_str(DEFAULT_SCENARIO).expect("shipped scenario parses")
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let cfg: SimConfig = serde_json::from_str(text).map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<Vec<Policy>, SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if self.tick_minutes < 15 {
            return bad(format!("tick_minutes must be >= 15, got {}", self.tick_minutes));
        }
        if let Some((t, r)) = self.duty_mix.iter().find(|(_, r)| !(r.is_finite() && **r >= 0.0)) {
            return bad(format!("arrival rate for {t} must be >= 0, got {r}"));
        }
        if self.policies.is_empty() {
            return bad("at least one policy is required".into());
        }
        if self.dawn_cooldown_hours.is_nan() || self.dawn_cooldown_hours < 0.0 {
            return bad("dawn_cooldown_hours must be >= 0".into());
        }
        let d = &self.device;
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !(unit(d.wifi_home) && unit(d.wifi_away) && d.charging_by_hour.iter().all(|x| unit(*x)) && d.opens_per_hour >= 0.0) {
            return bad("device schedule probabilities must lie in [0, 1]".into());
        }
        let p = &self.population;
        p.template.validate().map_err(SimError::InvalidConfig)?;
        let (lo, hi) = p.base_response_range;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) || p.receptivity_jitter.is_nan() || p.receptivity_jitter < 0.0 {
            return bad("population ranges must lie in [0, 1] and be ordered".into());
        }
        self.engine.validate().map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        self.policies
            .iter()
            .map(|s| Policy::parse(s).map_err(SimError::InvalidConfig))
            .collect()
    }

    fn ticks(&self) -> u64 {
        self.horizon_days as u64 * 1440 / self.tick_minutes as u64
    }
}

/// Outcome counts and captured value for one policy.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PolicyMetrics {
    pub policy: String,
    pub duties_total: u64,
    pub acted: u64,
    pub missed: u64,
    pub still_active: u64,
    pub notifications_sent: u64,
    pub responded: u64,
    pub ignored: u64,
    /// Mean TOC at the moment of action, over acted duties.
    pub mean_captured_toc: f64,
    pub ignore_rate: f64,
    pub mean_notifications_per_duty: f64,
    /// Lowest and highest threshold seen (adaptive policies only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_range: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMetrics {
    pub seed: u64,
    pub n_users: usize,
    pub horizon_days: u32,
    pub policies: Vec<PolicyMetrics>,
}

impl SimMetrics {
    pub fn get(&self, policy: &str) -> Option<&PolicyMetrics> {
        self.policies.iter().find(|p| p.policy == policy)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }
}

/// Raw per-user tallies, summed in user order.
#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    total: u64,
    acted: u64,
    missed: u64,
    active: u64,
    sent: u64,
    responded: u64,
    captured: f64,
    theta_lo: f64,
    theta_hi: f64,
}

impl Tally {
    fn merge(&mut self, o: &Tally) {
        self.total += o.total;
        self.acted += o.acted;
        self.missed += o.missed;
        self.active += o.active;
        self.sent += o.sent;
        self.responded += o.responded;
        self.captured += o.captured;
        self.theta_lo = self.theta_lo.min(o.theta_lo);
        self.theta_hi = self.theta_hi.max(o.theta_hi);
    }
}

const STREAM_PROFILE: u64 = 1;
const STREAM_DUTIES: u64 = 2;
const STREAM_CONTEXT: u64 = 3;
const STREAM_RESPONSE: u64 = 16;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent generator for `(seed, user, stream)`.
pub fn substream(seed: u64, user: u64, stream: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(splitmix(splitmix(splitmix(seed) ^ user) ^ stream))
}

/// Runs every policy for every user.
pub fn run(cfg: &SimConfig) -> Result<SimMetrics, SimError> {
    let policies = cfg.validate()?;
    let per_user: Vec<Vec<Tally>> = (0..cfg.n_users as u64)
        .into_par_iter()
        .map(|u| simulate_user(cfg, &policies, u))
        .collect();

    let mut totals = vec![
        Tally {
            theta_lo: f64::INFINITY,
            theta_hi: f64::NEG_INFINITY,
            ..Tally::default()
        };
        policies.len()
    ];
    for user in &per_user {
        for (t, u) in totals.iter_mut().zip(user) {
            t.merge(u);
        }
    }
    let rows = policies
        .iter()
        .zip(totals)
        .map(|(p, t)| PolicyMetrics {
            policy: p.id(),
            duties_total: t.total,
            acted: t.acted,
            missed: t.missed,
            still_active: t.active,
            notifications_sent: t.sent,
            responded: t.responded,
            ignored: t.sent - t.responded,
            mean_captured_toc: if t.acted > 0 { t.captured / t.acted as f64 } else { 0.0 },
            ignore_rate: if t.sent > 0 { (t.sent - t.responded) as f64 / t.sent as f64 } else { 0.0 },
            mean_notifications_per_duty: if t.total > 0 { t.sent as f64 / t.total as f64 } else { 0.0 },
            theta_range: (p.is_adaptive() && t.theta_lo.is_finite()).then_some((t.theta_lo, t.theta_hi)),
        })
        .collect();
    Ok(SimMetrics {
        seed: cfg.seed,
        n_users: cfg.n_users,
        horizon_days: cfg.horizon_days,
        policies: rows,
    })
}

fn draw_profile(cfg: &SimConfig, user: u64) -> SimUserProfile {
    let mut rng = substream(cfg.seed, user, STREAM_PROFILE);
    let pop = &cfg.population;
    let mut p = pop.template.clone();
    for r in p.hourly_receptivity.iter_mut() {
        let j = pop.receptivity_jitter;
        *r = (*r + rng.random_range(-j..=j)).clamp(0.0, 1.0);
    }
    let (lo, hi) = pop.base_response_range;
    p.base_response_rate = if hi > lo { rng.random_range(lo..=hi) } else { lo };
    p
}

/// A generated duty in tick units.
struct SimDuty {
    record: DutyRecord,
    arrival_tick: u64,
    /// Deadline in minutes since the epoch.
    deadline_min: f64,
}

fn draw_duties(cfg: &SimConfig, user: u64) -> Vec<SimDuty> {
    let mut rng = substream(cfg.seed, user, STREAM_DUTIES);
    let horizon = cfg.horizon_days as f64;
    let epoch = sim_epoch();
    let mut out = Vec::new();
    for (&ty, &rate) in &cfg.duty_mix {
        if rate <= 0.0 {
            continue;
        }
        let params = ty.default_toc::<f64>();
        let mut at = 0.0;
        loop {
            at += -(1.0 - rng.random::<f64>()).ln() / rate;
            if at >= horizon {
                break;
            }
            // arrive before the optimal window opens
            let lead = if params.is_step() {
                params.pickup_window_days.unwrap_or(0.0)
            } else {
                params.mu_days + params.sigma_pre_days * rng.random_range(1.0..2.5)
            };
            let arrival = epoch + Duration::milliseconds((at * 86_400_000.0) as i64);
            let deadline = arrival + Duration::milliseconds((lead * 86_400_000.0) as i64);
            let id = format!("u{user}-{}-{}", ty.name(), out.len());
            out.push(SimDuty {
                record: DutyRecord::new(id, ty, ty.name(), deadline, arrival),
                arrival_tick: (at * 1440.0 / cfg.tick_minutes as f64).ceil() as u64,
                deadline_min: (at + lead) * 1440.0,
            });
        }
    }
    out.sort_by_key(|d| d.arrival_tick);
    out
}

/// Device state at one tick, shared by all policies.
#[derive(Clone, Copy)]
struct Device {
    charging: bool,
    wifi: bool,
    opened: bool,
}

fn draw_device(
    rng: &mut Xoshiro256PlusPlus,
    sched: &DeviceSchedule,
    hour: u8,
    weekday: u8,
    profile: &SimUserProfile,
    tick_minutes: u32,
) -> Device {
    let (away_from, away_to) = sched.away_hours;
    let home = weekday >= 5 || !(away_from..away_to).contains(&hour);
    let wifi = rng.random::<f64>() < if home { sched.wifi_home } else { sched.wifi_away };
    let charging = rng.random::<f64>() < sched.charging_by_hour[hour as usize];
    let p_open = profile.hourly_receptivity[hour as usize] * sched.opens_per_hour * tick_minutes as f64 / 60.0;
    let opened = rng.random::<f64>() < p_open;
    Device { charging, wifi, opened }
}

#[derive(Clone)]
struct Live {
    idx: usize,
    fired: u32,
    last_fire_min: f64,
    /// Fixed-interval trigger points still pending.
    pending: Vec<f64>,
    cdr: f64,
}

fn simulate_user(cfg: &SimConfig, policies: &[Policy], user: u64) -> Vec<Tally> {
    let profile = draw_profile(cfg, user);
    let duties = draw_duties(cfg, user);
    policies
        .iter()
        .enumerate()
        .map(|(pi, policy)| simulate_policy(cfg, policy, pi as u64, user, &profile, &duties))
        .collect()
}

fn simulate_policy(
    cfg: &SimConfig,
    policy: &Policy,
    policy_index: u64,
    user: u64,
    profile: &SimUserProfile,
    duties: &[SimDuty],
) -> Tally {
    let mut ctx_rng = substream(cfg.seed, user, STREAM_CONTEXT);
    let mut resp_rng = substream(cfg.seed, user, STREAM_RESPONSE + policy_index);
    let tick = cfg.tick_minutes as u64;
    let engine = &cfg.engine;
    let rule = engine.threshold_rule();
    let mut th: Thresholds<f64> = engine.initial_thresholds();
    let mut hist = EngagementHistory::default();
    let mut ignore_streak = 0u32;
    let mut last_open_min = 0.0f64;
    let mut next = 0usize;
    let mut live: Vec<Live> = Vec::new();
    let mut dirty = false;
    let mut tally = Tally {
        total: duties.len() as u64,
        theta_lo: th.theta1,
        theta_hi: th.theta2,
        ..Tally::default()
    };
    let cooldown_min = cfg.dawn_cooldown_hours * 60.0;

    for k in 0..cfg.ticks() {
        let now_min = (k * tick) as f64;
        let minute_of_day = (k * tick) % 1440;
        let hour = (minute_of_day / 60) as u8;
        let weekday = (((k * tick) / 1440) % 7) as u8;
        let device = draw_device(&mut ctx_rng, &cfg.device, hour, weekday, profile, cfg.tick_minutes);
        if device.opened {
            last_open_min = now_min;
        }

        while next < duties.len() && duties[next].arrival_tick <= k {
            let d = &duties[next];
            let t0 = (d.deadline_min - now_min) / 1440.0;
            let pending = match policy {
                Policy::FixedInterval(days) => days.iter().map(|x| *x as f64).filter(|x| *x < t0).collect(),
                _ => Vec::new(),
            };
            live.push(Live {
                idx: next,
                fired: 0,
                last_fire_min: f64::NEG_INFINITY,
                pending,
                cdr: 0.0,
            });
            next += 1;
            dirty = true;
        }
        let before = live.len();
        live.retain(|l| {
            let gone = duties[l.idx].deadline_min < now_min;
            if gone {
                tally.missed += 1;
            }
            !gone
        });
        if live.is_empty() {
            continue;
        }
        dirty |= live.len() != before;
        if policy.is_adaptive() && dirty {
            dirty = false;
            let feats: Vec<_> = live.iter().map(|l| ResonanceFeatures::of(&duties[l.idx].record)).collect();
            for (i, l) in live.iter_mut().enumerate() {
                l.cdr = feats
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, f)| feats[i].score(f))
                    .fold(0.0, f64::max);
            }
        }

        let p_respond = profile.response_probability(hour, weekday);
        let bep = if policy.is_adaptive() {
            let ctx = EngagementContext {
                at: sim_epoch() + Duration::minutes(now_min as i64),
                hour,
                weekday,
                charging: device.charging,
                wifi: device.wifi,
                ignore_streak,
                hours_since_last_open: (now_min - last_open_min) / 60.0,
            };
            bep_with(&ctx, &hist, &engine.bep)
        } else {
            0.0
        };

        let mut i = 0;
        while i < live.len() {
            let d = &duties[live[i].idx];
            let t = (d.deadline_min - now_min) / 1440.0;
            let params = &d.record.toc_params;
            let fire: Option<(Zone, f64)> = match policy {
                Policy::FixedInterval(_) => {
                    let l = &mut live[i];
                    let before = l.pending.len();
                    l.pending.retain(|x| t > *x);
                    (l.pending.len() < before).then_some((Zone::Nudge, 0.0))
                }
                Policy::Countdown(limit) => (t <= *limit).then_some((Zone::Nudge, 0.0)),
                Policy::Dawn => {
                    if now_min - live[i].last_fire_min < cooldown_min {
                        None
                    } else {
                        let signals = SignalBreakdown::new(toc(t, params), bep, vdi(t, params), live[i].cdr);
                        let score = composite_score(&signals, &engine.weights);
                        let (zone, _) = classify_zone(score, &th, &d.record, t, engine);
                        policy::dawn_fires(zone, || defer_schedule(&d.record, t, &engine.defer_horizons_days) == Defer::ActNow)
                            .then_some((zone, score))
                    }
                }
            };
            let Some((zone, score)) = fire else {
                i += 1;
                continue;
            };
            tally.sent += 1;
            live[i].fired += 1;
            live[i].last_fire_min = now_min;
            let responded = resp_rng.random::<f64>() < p_respond;
            if policy.is_adaptive() {
                hist.record(weekday, hour, responded);
                let ev = InteractionEvent {
                    duty_id: DutyId::new(d.record.id.as_str()),
                    fired_zone: zone,
                    score_at_fire: score.clamp(0.0, 1.0),
                    outcome: if responded { Outcome::Responded } else { Outcome::Ignored },
                    at: sim_epoch() + Duration::minutes(now_min as i64),
                };
                th = adapt_threshold(&th, &ev, &rule);
                tally.theta_lo = tally.theta_lo.min(th.theta1);
                tally.theta_hi = tally.theta_hi.max(th.theta2);
            }
            if responded {
                ignore_streak = 0;
                last_open_min = now_min;
                tally.responded += 1;
                tally.acted += 1;
                tally.captured += toc(t, params);
                live.swap_remove(i);
                dirty = true;
            } else {
                ignore_streak += 1;
                i += 1;
            }
        }
    }
    tally.active = live.len() as u64 + (duties.len() - next) as u64;
    tally
}

#[cfg(test)]
mod tests;
