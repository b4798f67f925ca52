use bevplan_sim::scenario::{CenterlineSpec, CutinEvent, NeighborScript};
use bevplan_sim::{run_episode, PlannerConfig, PlannerVariant, Scenario};

fn main() {
    let mut s = Scenario::empty_road("cutin", 100.0);
    s.centerline = CenterlineSpec::Straight(200.0);
    s.ego_speed = 8.0;
    let mut n = NeighborScript::constant(2.0 + 9.0, 3.5, 6.0);
    n.cutin = Some(CutinEvent { at: 1.5, target_y: 0.0, rate: 1.75 });
    s.neighbors = vec![n];
    for variant in [PlannerVariant::Uap, PlannerVariant::Deterministic] {
        let cfg = PlannerConfig::for_scenario(&s).unwrap();
        let r = run_episode(&s, &cfg, variant, 0).unwrap();
        println!("== {} outcome {:?} min_gap {:?}", variant.as_str(), r.metrics.outcome, r.metrics.min_gap);
        for rec in r.trace.iter().filter(|r| r.cost.is_some()).take(14) {
            let c = rec.cost.unwrap();
            let gap = rec.neighbors[0].s - rec.ego.s;
            let dy = rec.neighbors[0].y - rec.ego.lat;
            println!(
                "t={:4.1} gap={:5.2} dy={:5.2} v={:4.2} | ca={:8.3} cbev={:10.6} r={:8.3}",
                rec.t, gap, dy, rec.ego.vx.hypot(rec.ego.vy), c.analytic, c.collision, c.residual
            );
        }
    }
}
