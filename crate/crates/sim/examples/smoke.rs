use bevplan_sim::{run_episode, PlannerConfig, PlannerVariant, Scenario};
use std::path::Path;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let scn_path = args.get(1).map(|s| s.as_str()).unwrap_or("scenarios/cutin.scn");
    let variant = PlannerVariant::parse(args.get(2).map(|s| s.as_str()).unwrap_or("uap")).unwrap();
    let seeds: u64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(5);
    let overrides: Vec<(String, String)> = args[4..]
        .iter()
        .map(|kv| {
            let (k, v) = kv.split_once('=').unwrap();
            (k.to_string(), v.to_string())
        })
        .collect();
    let scenario = Scenario::from_file(Path::new(scn_path)).unwrap();
    let mut cfg = PlannerConfig::for_scenario(&scenario).unwrap();
    for (k, v) in &overrides {
        cfg.apply_override(k, v).unwrap();
    }
    let t0 = std::time::Instant::now();
    let mut collisions = 0;
    for seed in 0..seeds {
        let result = run_episode(&scenario, &cfg, variant, seed).unwrap();
        let m = &result.metrics;
        if m.outcome == bevplan_sim::Outcome::Collision {
            collisions += 1;
        }
        println!(
            "seed {seed}: {:?} rc={:.0}% dur={:?} smooth={:.2} min_gap={:?} dist={:.0}",
            m.outcome, m.completion_pct, m.duration.map(|d| (d * 10.0).round() / 10.0),
            m.smoothness, m.min_gap.map(|g| (g * 100.0).round() / 100.0), m.distance_m
        );
    }
    println!(
        "variant={} collisions={collisions}/{seeds} elapsed={:.1?}",
        variant.as_str(),
        t0.elapsed()
    );
}
