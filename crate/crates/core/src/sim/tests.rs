use super::*;

fn small(policies: &[&str]) -> SimConfig {
    let mut cfg = SimConfig::default_scenario();
    cfg.n_users = 20;
    cfg.horizon_days = 60;
    cfg.policies = policies.iter().map(|s| s.to_string()).collect();
    cfg
}

#[test]
fn shipped_scenario_is_valid() {
    let cfg = SimConfig::default_scenario();
    assert_eq!((cfg.seed, cfg.n_users, cfg.horizon_days, cfg.tick_minutes), (42, 1000, 180, 15));
    assert_eq!(cfg.validate().unwrap().len(), 3);
}

#[test]
fn deterministic() {
    let cfg = small(&["dawn", "fixed_interval", "countdown:2"]);
    let a = run(&cfg).unwrap();
    let b = run(&cfg).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    let mut other = cfg.clone();
    other.seed = 7;
    assert_ne!(run(&other).unwrap().to_json(), a.to_json());
}

#[test]
fn conservation_and_bounds() {
    let m = run(&small(&["dawn", "fixed_interval:7,3,1", "countdown:2"])).unwrap();
    for p in &m.policies {
        assert_eq!(p.acted + p.missed + p.still_active, p.duties_total, "{}", p.policy);
        assert_eq!(p.responded, p.acted);
        assert!((0.0..=1.0).contains(&p.ignore_rate));
        assert!((0.0..=1.0).contains(&p.mean_captured_toc));
    }
    let (lo, hi) = m.get("dawn").unwrap().theta_range.unwrap();
    assert!(lo >= 0.15 && hi <= 0.75);
    assert!(m.get("countdown:2").unwrap().theta_range.is_none());
}

#[test]
fn zero_rates_mean_nothing_happens() {
    let mut cfg = small(&["dawn", "fixed_interval", "countdown:2"]);
    for r in cfg.duty_mix.values_mut() {
        *r = 0.0;
    }
    for p in run(&cfg).unwrap().policies {
        assert_eq!((p.notifications_sent, p.missed, p.duties_total), (0, 0, 0));
    }
}

#[test]
fn fixed_interval_notifies_three_times_when_ignored() {
    // never responds: every trigger point fires and the duty is missed
    let mut cfg = small(&["fixed_interval:7,3,1"]);
    cfg.duty_mix = BTreeMap::from([(DutyType::Custom, 0.05)]);
    cfg.population.template.base_response_rate = 0.0;
    cfg.population.base_response_range = (0.0, 0.0);
    cfg.horizon_days = 120;
    let m = run(&cfg).unwrap();
    let p = &m.policies[0];
    assert!(p.missed > 0);
    assert_eq!(p.notifications_sent, 3 * p.missed + 3 * p.still_active - pending_marks(&cfg));
    assert_eq!(p.acted, 0);
}

/// Trigger points not yet reached by duties still open at the horizon.
fn pending_marks(cfg: &SimConfig) -> u64 {
    let end = cfg.horizon_days as f64 * 1440.0;
    (0..cfg.n_users as u64)
        .flat_map(|u| draw_duties(cfg, u))
        .filter(|d| d.deadline_min >= end)
        .map(|d| [7.0f64, 3.0, 1.0].iter().filter(|m| d.deadline_min - **m * 1440.0 >= end).count() as u64)
        .sum()
}

#[test]
fn invalid_configs() {
    let mut cfg = small(&["dawn"]);
    cfg.tick_minutes = 5;
    assert!(matches!(run(&cfg), Err(SimError::InvalidConfig(_))));
    let mut cfg = small(&["weekly"]);
    assert!(run(&cfg).is_err());
    cfg.policies = vec!["dawn".into()];
    cfg.duty_mix.insert(DutyType::Custom, -1.0);
    assert!(run(&cfg).is_err());
}

#[test]
fn substreams_differ() {
    let a: u64 = substream(42, 0, 1).random();
    let b: u64 = substream(42, 1, 1).random();
    let c: u64 = substream(42, 0, 2).random();
    assert!(a != b && a != c && b != c);
    assert_eq!(a, substream(42, 0, 1).random::<u64>());
}

#[test]
fn report_shapes() {
    let m = run(&small(&["dawn", "fixed_interval", "countdown:2"])).unwrap();
    let table = render_table(&m);
    assert_eq!(table.lines().count(), 4);
    assert!(table.starts_with("policy"));
    let back: SimMetrics = serde_json::from_str(&m.to_json()).unwrap();
    assert_eq!(back, m);
    let empty = SimMetrics {
        policies: vec![],
        ..m
    };
    assert_eq!(render_table(&empty).lines().count(), 1);
}
