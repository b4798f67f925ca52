use bevplan_sim::scenario::{CenterlineSpec, NeighborScript};
use bevplan_sim::{run_episode, PlannerConfig, PlannerVariant, Scenario};

fn main() {
    let mut scenario = Scenario::empty_road("pass", 90.0);
    scenario.mode = bevplan_sim::ScenarioMode::Overtaking;
    scenario.centerline = CenterlineSpec::Straight(200.0);
    scenario.y_ub = 5.25;
    scenario.neighbors = vec![NeighborScript::constant(30.0, 0.0, 1.5)];
    scenario.timeout = 60.0;
    let mut cfg = PlannerConfig::for_scenario(&scenario).unwrap();
    for (k, v) in [
        ("optimizer.samples", "24"),
        ("optimizer.constraint_elites", "12"),
        ("optimizer.elites", "6"),
        ("optimizer.iterations", "3"),
        ("kernel.samples", "32"),
    ] {
        cfg.apply_override(k, v).unwrap();
    }
    let r = run_episode(&scenario, &cfg, PlannerVariant::Uap, 1).unwrap();
    println!("outcome {:?}", r.metrics.outcome);
    for rec in r.trace.iter().step_by(5) {
        let n = &rec.neighbors[0];
        println!(
            "t={:4.1} ego(s={:5.1} y={:5.2} v={:4.2}) lead(s={:5.1}) gap={:5.2} coll={}",
            rec.t, rec.ego.s, rec.ego.lat, rec.ego.vx.hypot(rec.ego.vy),
            n.s, n.s - rec.ego.s, rec.collision
        );
    }
    let last = r.trace.last().unwrap();
    println!("last: t={:.1} ego=({:.2},{:.2}) lead=({:.2},{:.2})",
        last.t, last.ego.s, last.ego.lat, last.neighbors[0].s, last.neighbors[0].y);
}
