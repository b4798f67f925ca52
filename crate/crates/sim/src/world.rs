//! Ground-truth world state and the closed-loop step.
//!
//! The ego tracks its planned trajectory exactly (no controller model);
//! neighbors follow their scripts in closed form, so stepping is free of
//! integration drift. Collision is declared when a ground-truth center
//! distance drops below the summed footprint radii.

use bevplan_core::{Centerline, FrenetState, StateSequence};

use crate::scenario::Scenario;
use crate::{Result, SimError};

#[derive(Clone, Copy, Debug)]
pub struct NeighborState {
    pub s: f64,
    pub y: f64,
    pub speed: f64,
    pub world: (f64, f64),
}

#[derive(Clone, Debug)]
pub struct World {
    pub t: f64,
    pub ego: FrenetState<f64>,
    pub ego_world: (f64, f64),
    pub neighbors: Vec<NeighborState>,
    pub collision: bool,
    /// Current plan in the Frenet frame plus the executed step cursor.
    plan: Option<StateSequence<f64>>,
    plan_cursor: usize,
}

impl World {
    pub fn init(scenario: &Scenario, centerline: &Centerline<f64>) -> Result<Self> {
        let ego = FrenetState {
            s: scenario.ego_s,
            lat: scenario.ego_y,
            vs: scenario.ego_speed,
            vlat: 0.0,
            acc_s: 0.0,
            acc_lat: 0.0,
        };
        let p = centerline.to_cartesian(ego.s, ego.lat)?;
        let mut world = Self {
            t: 0.0,
            ego,
            ego_world: (p.x, p.y),
            neighbors: Vec::new(),
            collision: false,
            plan: None,
            plan_cursor: 0,
        };
        world.neighbors = world.neighbor_states(scenario, centerline, 0.0)?;
        Ok(world)
    }

    /// Ground-truth neighbor states at absolute time `t`.
    pub fn neighbor_states(
        &self,
        scenario: &Scenario,
        centerline: &Centerline<f64>,
        t: f64,
    ) -> Result<Vec<NeighborState>> {
        scenario
            .neighbors
            .iter()
            .map(|script| {
                let s = script.s_at(t);
                let y = script.y_at(t);
                let p = centerline.to_cartesian(s.min(centerline.length()), y)?;
                Ok(NeighborState {
                    s,
                    y,
                    speed: script.speed_at(t),
                    world: (p.x, p.y),
                })
            })
            .collect()
    }

    /// Installs a fresh plan whose step 0 is the current state.
    pub fn set_plan(&mut self, plan: StateSequence<f64>) {
        self.plan = Some(plan);
        self.plan_cursor = 0;
    }

    pub fn current_plan(&self) -> Option<&StateSequence<f64>> {
        self.plan.as_ref()
    }

    /// Advances the world by `dt`: the ego consumes the next planned step
    /// (or holds its pose without one), neighbors follow their scripts, and
    /// the collision flag latches on footprint overlap.
    pub fn step(
        &mut self,
        scenario: &Scenario,
        centerline: &Centerline<f64>,
        dt: f64,
        ego_radius: f64,
        neighbor_radius: f64,
    ) -> Result<()> {
        if dt <= 0.0 {
            return Err(SimError::Config("step dt must be positive".into()));
        }
        self.t += dt;
        if let Some(plan) = &self.plan {
            let next = (self.plan_cursor + 1).min(plan.len() - 1);
            self.plan_cursor = next;
            self.ego = FrenetState {
                s: plan.x[next],
                lat: plan.y[next],
                vs: plan.vx[next],
                vlat: plan.vy[next],
                acc_s: plan.ax[next],
                acc_lat: plan.ay[next],
            };
        } else {
            // no plan: coast along the lane at the current speed
            self.ego.s += self.ego.vs * dt;
        }
        let p = centerline.to_cartesian(self.ego.s, self.ego.lat)?;
        self.ego_world = (p.x, p.y);
        self.neighbors = self.neighbor_states(scenario, centerline, self.t)?;
        let threshold = ego_radius + neighbor_radius;
        for n in &self.neighbors {
            let dx = n.world.0 - self.ego_world.0;
            let dy = n.world.1 - self.ego_world.1;
            if (dx * dx + dy * dy).sqrt() < threshold {
                self.collision = true;
            }
        }
        Ok(())
    }

    pub fn ego_speed(&self) -> f64 {
        self.ego.vs.hypot(self.ego.vlat)
    }

    /// Longitudinal gap to the nearest same-lane lead, if any.
    pub fn lead_gap(&self, lateral_gate: f64) -> Option<f64> {
        self.neighbors
            .iter()
            .filter(|n| (n.y - self.ego.lat).abs() <= lateral_gate && n.s > self.ego.s)
            .map(|n| n.s - self.ego.s)
            .min_by(|a, b| a.partial_cmp(b).unwrap())
    }
}
