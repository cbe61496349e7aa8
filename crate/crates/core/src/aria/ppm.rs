//! Purchase Pattern Model: what the user actually buys.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::InboundMessage;
use crate::duty::days_between;

/// Purchases inside this many days count as fully recent.
pub const RECENCY_WINDOW_DAYS: f64 = 90.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Purchase {
    pub merchant: String,
    pub category_tag: String,
    pub amount_minor: i64,
    pub currency: String,
    pub at: DateTime<Utc>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "PurchaseLog", into = "PurchaseLog")]
pub struct PurchasePatternModel {
    purchases: Vec<Purchase>,
    /// Share of purchases per category; derived from `purchases`.
    category_affinity: BTreeMap<String, f64>,
}

#[derive(Serialize, Deserialize)]
struct PurchaseLog {
    purchases: Vec<Purchase>,
}

impl From<PurchaseLog> for PurchasePatternModel {
    fn from(log: PurchaseLog) -> Self {
        PurchasePatternModel::from_purchases(log.purchases)
    }
}

impl From<PurchasePatternModel> for PurchaseLog {
    fn from(m: PurchasePatternModel) -> Self {
        PurchaseLog { purchases: m.purchases }
    }
}

impl PurchasePatternModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_purchases(purchases: impl IntoIterator<Item = Purchase>) -> Self {
        purchases.into_iter().fold(Self::new(), Self::with_purchase)
    }

    /// Adds a purchase; re-sending the same (merchant, at, amount) is a no-op.
    pub fn update(&mut self, purchase: Purchase) {
        let dup = self
            .purchases
            .iter()
            .any(|p| p.merchant == purchase.merchant && p.at == purchase.at && p.amount_minor == purchase.amount_minor);
        if !dup {
            self.purchases.push(purchase);
            self.recompute();
        }
    }

    pub fn with_purchase(mut self, purchase: Purchase) -> Self {
        self.update(purchase);
        self
    }

    fn recompute(&mut self) {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for p in &self.purchases {
            *counts.entry(p.category_tag.to_lowercase()).or_default() += 1;
        }
        let n = self.purchases.len() as f64;
        self.category_affinity = counts.into_iter().map(|(k, c)| (k, c as f64 / n)).collect();
    }

    pub fn purchases(&self) -> &[Purchase] {
        &self.purchases
    }

    pub fn affinity(&self, category: &str) -> f64 {
        self.category_affinity.get(&category.to_lowercase()).copied().unwrap_or(0.0)
    }

    /// Most recent purchase time in the category.
    pub fn last_purchase(&self, category: &str) -> Option<DateTime<Utc>> {
        self.purchases
            .iter()
            .filter(|p| p.category_tag.eq_ignore_ascii_case(category))
            .map(|p| p.at)
            .max()
    }

    /// Category a promotional message is about: the sender's known merchant
    /// category first, then any purchased category named in the text.
    pub fn infer_category(&self, msg: &InboundMessage) -> Option<String> {
        let domain = msg.sender_domain.to_lowercase();
        let by_merchant = self
            .purchases
            .iter()
            .filter(|p| {
                let m: String = p.merchant.to_lowercase().chars().filter(|c| c.is_alphanumeric()).collect();
                !m.is_empty() && domain.split('.').any(|label| label == m)
            })
            .max_by_key(|p| p.at)
            .map(|p| p.category_tag.to_lowercase());
        if by_merchant.is_some() {
            return by_merchant;
        }
        let text = msg.text().to_lowercase();
        let words: Vec<&str> = text.split(|c: char| !c.is_alphanumeric()).collect();
        let mut tags: Vec<String> = self.purchases.iter().map(|p| p.category_tag.to_lowercase()).collect();
        tags.sort();
        tags.dedup();
        tags.into_iter().find(|t| words.contains(&t.as_str()))
    }
}

/// Recency factor for a purchase `days_since` days ago.
pub fn recency(days_since: Option<f64>) -> f64 {
    match days_since {
        None => 0.0,
        Some(d) if d <= RECENCY_WINDOW_DAYS => 1.0,
        Some(d) => (-(d - RECENCY_WINDOW_DAYS) / RECENCY_WINDOW_DAYS).exp(),
    }
}

/// `0.7 * recency + 0.3 * affinity` for the message's inferred category; 0 if none.
pub fn ppm_score(msg: &InboundMessage, ppm: &PurchasePatternModel, now: DateTime<Utc>) -> f64 {
    let Some(category) = ppm.infer_category(msg) else {
        return 0.0;
    };
    let days = ppm.last_purchase(&category).map(|at| days_between(at, now).max(0.0));
    (0.7 * recency(days) + 0.3 * ppm.affinity(&category)).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Duration, TimeZone};

    fn now() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2026, 6, 1, 12, 0, 0).unwrap()
    }

    fn buy(merchant: &str, cat: &str, days_ago: i64) -> Purchase {
        Purchase {
            merchant: merchant.into(),
            category_tag: cat.into(),
            amount_minor: 450,
            currency: "USD".into(),
            at: now() - Duration::days(days_ago),
        }
    }

    fn promo(domain: &str, text: &str) -> InboundMessage {
        InboundMessage {
            sender_address: format!("deals@{domain}"),
            sender_domain: domain.into(),
            subject: "This week only".into(),
            body_text: text.into(),
            received_at: now(),
        }
    }

    #[test]
    fn affinity_shares() {
        let ppm = PurchasePatternModel::new().with_purchase(buy("Bean", "coffee", 3));
        assert_eq!(ppm.affinity("coffee"), 1.0);
        let ppm = PurchasePatternModel::from_purchases([
            buy("Bean", "coffee", 3),
            buy("Bean", "coffee", 4),
            buy("Bean", "coffee", 5),
            buy("Mart", "grocery", 5),
        ]);
        assert_eq!(ppm.affinity("coffee"), 0.75);
    }

    #[test]
    fn duplicate_is_ignored() {
        let p = buy("Bean", "coffee", 3);
        let once = PurchasePatternModel::new().with_purchase(p.clone());
        let twice = once.clone().with_purchase(p);
        assert_eq!(once, twice);
    }

    #[test]
    fn recent_category_scores_high() {
        // 2 of 5 purchases are shoes, last one 30 days ago
        let ppm = PurchasePatternModel::from_purchases([
            buy("Runner", "shoes", 30),
            buy("Runner", "shoes", 60),
            buy("Mart", "grocery", 1),
            buy("Mart", "grocery", 2),
            buy("Mart", "grocery", 3),
        ]);
        let s = ppm_score(&promo("runner.example", "New arrivals"), &ppm, now());
        assert!((s - 0.82).abs() < 1e-12, "{s}");
    }

    #[test]
    fn unknown_brand_and_category_is_zero() {
        let ppm = PurchasePatternModel::from_purchases([buy("Mart", "grocery", 1)]);
        assert_eq!(ppm_score(&promo("yachts.example", "Luxury yachts 20% off"), &ppm, now()), 0.0);
        assert_eq!(ppm_score(&promo("x.example", "anything"), &PurchasePatternModel::new(), now()), 0.0);
    }

    #[test]
    fn old_purchase_decays() {
        let ppm = PurchasePatternModel::from_purchases([buy("Runner", "shoes", 180), buy("Mart", "grocery", 1)]);
        // affinity 0.5 here; isolate the decay term
        let s = ppm_score(&promo("runner.example", "sale"), &ppm, now()) - 0.3 * 0.5;
        assert!((s - 0.7 * (-1.0f64).exp()).abs() < 1e-12);
        assert!((0.7 * (-1.0f64).exp() - 0.2575).abs() < 1e-3);
    }

    #[test]
    fn category_named_in_text() {
        let ppm = PurchasePatternModel::from_purchases([buy("Bean", "coffee", 10)]);
        let s = ppm_score(&promo("newroaster.example", "Fresh coffee beans, 30% off"), &ppm, now());
        assert_eq!(s, 1.0);
    }
}
