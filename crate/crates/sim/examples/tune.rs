use bevplan_sim::scenario::{CutinEvent, NeighborScript, StopEvent};
use bevplan_sim::{run_episode, Outcome, PlannerConfig, PlannerVariant, Scenario};

fn acceptance_cfg(scenario: &Scenario) -> PlannerConfig {
    let mut cfg = PlannerConfig::for_scenario(scenario).unwrap();
    for (k, v) in [
        ("optimizer.samples", "40"),
        ("optimizer.constraint_elites", "20"),
        ("optimizer.elites", "8"),
        ("optimizer.iterations", "4"),
        ("kernel.samples", "64"),
        ("optimizer.projection_iters", "40"),
    ] {
        cfg.apply_override(k, v).unwrap();
    }
    cfg
}

fn cutin_scenario(gap0: f64, speed: f64, cut_at: f64, rate: f64) -> Scenario {
    let mut s = Scenario::empty_road("cutin", 100.0);
    s.centerline = bevplan_sim::scenario::CenterlineSpec::Straight(200.0);
    s.ego_speed = 8.0;
    let mut n = NeighborScript::constant(2.0 + gap0, 3.5, speed);
    n.cutin = Some(CutinEvent { at: cut_at, target_y: 0.0, rate });
    s.neighbors = vec![n];
    s
}

fn stop_scenario(gap0: f64, speed: f64, stop_at: f64, decel: f64, target: f64) -> Scenario {
    let mut s = Scenario::empty_road("abrupt_stop", 100.0);
    s.centerline = bevplan_sim::scenario::CenterlineSpec::Straight(200.0);
    s.ego_speed = 8.0;
    s.timeout = 80.0;
    let mut n = NeighborScript::constant(2.0 + gap0, 0.0, speed);
    n.stop = Some(StopEvent { at: stop_at, decel, target });
    s.neighbors = vec![n];
    s
}

fn run_set(name: &str, scenario: &Scenario, seeds: u64) {
    for variant in [PlannerVariant::Uap, PlannerVariant::Deterministic] {
        let cfg = acceptance_cfg(scenario);
        let mut collisions = 0;
        let mut completed = 0;
        let mut min_gaps = Vec::new();
        let t0 = std::time::Instant::now();
        for seed in 0..seeds {
            let r = run_episode(scenario, &cfg, variant, seed).unwrap();
            match r.metrics.outcome {
                Outcome::Collision => collisions += 1,
                Outcome::Completed => completed += 1,
                _ => {}
            }
            if let Some(g) = r.metrics.min_gap {
                min_gaps.push(g);
            }
        }
        min_gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let gmin = min_gaps.first().copied().unwrap_or(f64::NAN);
        let gmed = min_gaps.get(min_gaps.len() / 2).copied().unwrap_or(f64::NAN);
        println!(
            "{name} {:>13}: coll {collisions}/{seeds} done {completed} min_gap[min={gmin:.2} med={gmed:.2}] {:.1?}",
            variant.as_str(),
            t0.elapsed()
        );
    }
}

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "cutin".into());
    let seeds: u64 = std::env::args().nth(2).map(|s| s.parse().unwrap()).unwrap_or(10);
    if which == "cutin" {
        for (gap0, speed, cut_at, rate) in [
            (9.0, 6.0, 1.5, 1.85),
            (8.75, 6.0, 1.5, 1.85),
            (8.6, 6.0, 1.5, 1.85),
            (8.75, 6.0, 1.5, 1.75),
            (8.9, 6.0, 1.5, 2.0),
        ] {
            let s = cutin_scenario(gap0, speed, cut_at, rate);
            println!("--- cutin gap0={gap0} v={speed} at={cut_at} rate={rate}");
            run_set("cutin", &s, seeds);
        }
    } else {
        for (gap0, speed, stop_at, decel, target) in [
            (14.0, 7.5, 5.0, 5.0, 2.5),
            (12.0, 7.5, 5.0, 5.5, 2.0),
            (11.0, 7.5, 5.0, 6.0, 2.0),
            (10.0, 7.5, 4.5, 6.0, 1.5),
        ] {
            let s = stop_scenario(gap0, speed, stop_at, decel, target);
            println!("--- stop gap0={gap0} v={speed} at={stop_at} d={decel} t={target}");
            run_set("stop", &s, seeds);
        }
    }
}
