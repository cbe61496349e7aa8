use std::fmt;

use crate::engine::Zone;

/// DAWN re-notifies a duty at most this often.
pub const DEFAULT_COOLDOWN_HOURS: f64 = 6.0;

/// A reminder policy under comparison.
#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    /// Wake-cycle scoring with zone gating and threshold adaptation.
    Dawn,
    /// Notify once as the deadline crosses each of these day marks.
    FixedInterval(Vec<u32>),
    /// Notify every tick once within this many days of the deadline.
    Countdown(f64),
}

impl Policy {
    /// Parses `dawn`, `fixed_interval[:7,3,1]` or `countdown[:2]`.
    pub fn parse(s: &str) -> Result<Policy, String> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        match (name, arg) {
            ("dawn", None) => Ok(Policy::Dawn),
            ("fixed_interval", None) => Ok(Policy::FixedInterval(vec![7, 3, 1])),
            ("fixed_interval", Some(a)) => {
                let mut days = a
                    .split(',')
                    .map(|d| d.trim().parse::<u32>().map_err(|e| format!("bad day mark {d:?}: {e}")))
                    .collect::<Result<Vec<_>, _>>()?;
                if days.is_empty() {
                    return Err("fixed_interval needs at least one day mark".into());
                }
                days.sort_unstable_by(|a, b| b.cmp(a));
                days.dedup();
                Ok(Policy::FixedInterval(days))
            }
            ("countdown", None) => Ok(Policy::Countdown(2.0)),
            ("countdown", Some(a)) => match a.parse::<f64>() {
                Ok(d) if d.is_finite() && d >= 0.0 => Ok(Policy::Countdown(d)),
                _ => Err(format!("bad countdown threshold {a:?}")),
            },
            _ => Err(format!("unknown policy {s:?}")),
        }
    }

    /// Canonical identifier, as used in reports.
    pub fn id(&self) -> String {
        match self {
            Policy::Dawn => "dawn".into(),
            Policy::FixedInterval(days) => {
                let marks: Vec<String> = days.iter().map(u32::to_string).collect();
                format!("fixed_interval:{}", marks.join(","))
            }
            Policy::Countdown(d) => format!("countdown:{d}"),
        }
    }

    pub fn is_adaptive(&self) -> bool {
        matches!(self, Policy::Dawn)
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

/// DAWN notifies on ACT_NOW, and on NUDGE only when waiting would not
/// capture more value. SLEEP never notifies.
pub fn dawn_fires(zone: Zone, now_beats_waiting: impl FnOnce() -> bool) -> bool {
    match zone {
        Zone::Sleep => false,
        Zone::ActNow => true,
        Zone::Nudge => now_beats_waiting(),
    }
}
