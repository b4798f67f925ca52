//! Scenario descriptions and the key-value scenario file format.
//!
//! A scenario file is line-based `key = value` text. Global keys come
//! first; each `[neighbor]` line starts a new neighbor script. `#` starts a
//! comment. Keys prefixed `planner.` are collected verbatim and applied as
//! configuration overrides (scenario beats built-in defaults, command-line
//! overrides beat the scenario).
//!
//! ```text
//! name = cutin
//! mode = inlane              # inlane | overtaking
//! route_length = 100
//! centerline = straight 200  # or: centerline = file <path relative to the scenario>
//! y_lb = -1.75
//! y_ub = 1.75
//! ego.s = 2
//! ego.y = 0
//! ego.speed = 8
//! seed = 1
//! timeout = 60
//!
//! [neighbor]
//! s = 15
//! y = 3.5
//! speed = 6
//! speed_profile = 0:6 4:2    # optional piecewise-constant t:v pairs
//! cutin.at = 2
//! cutin.target_y = 0
//! cutin.rate = 1.8
//! stop.at = 5                # optional abrupt slow-down
//! stop.decel = 5
//! stop.target = 0
//! ```

use std::path::{Path, PathBuf};

use bevplan_core::Centerline;

use crate::{Result, SimError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScenarioMode {
    Inlane,
    Overtaking,
}

/// Lateral cut-in maneuver triggered at a fixed time.
#[derive(Clone, Copy, Debug)]
pub struct CutinEvent {
    pub at: f64,
    pub target_y: f64,
    /// Lateral speed of the maneuver (m/s).
    pub rate: f64,
}

/// Abrupt deceleration to a target speed triggered at a fixed time.
#[derive(Clone, Copy, Debug)]
pub struct StopEvent {
    pub at: f64,
    pub decel: f64,
    pub target: f64,
}

/// Deterministic neighbor motion script.
#[derive(Clone, Debug)]
pub struct NeighborScript {
    pub s0: f64,
    pub y0: f64,
    /// Piecewise-constant speed profile `(t, v)`, first entry at t = 0.
    pub speed_profile: Vec<(f64, f64)>,
    pub cutin: Option<CutinEvent>,
    pub stop: Option<StopEvent>,
}

impl NeighborScript {
    pub fn constant(s0: f64, y0: f64, speed: f64) -> Self {
        Self {
            s0,
            y0,
            speed_profile: vec![(0.0, speed)],
            cutin: None,
            stop: None,
        }
    }

    fn base_speed(&self, t: f64) -> f64 {
        let mut v = self.speed_profile[0].1;
        for &(tp, vp) in &self.speed_profile {
            if tp <= t {
                v = vp;
            } else {
                break;
            }
        }
        v
    }

    /// Ground-truth speed at time `t`. A stop event freezes the profile at
    /// its trigger value and ramps it down at the configured deceleration.
    pub fn speed_at(&self, t: f64) -> f64 {
        match self.stop {
            Some(stop) if t >= stop.at => {
                let v0 = self.base_speed(stop.at);
                (v0 - stop.decel * (t - stop.at)).max(stop.target.min(v0))
            }
            _ => self.base_speed(t),
        }
    }

    /// Ground-truth longitudinal position at time `t` (closed-form
    /// piecewise integral of the speed).
    pub fn s_at(&self, t: f64) -> f64 {
        let ramp_start = self.stop.map(|e| e.at).unwrap_or(f64::INFINITY);
        let t_const = t.min(ramp_start);
        let mut s = self.s0;
        // piecewise-constant part
        for (i, &(tp, vp)) in self.speed_profile.iter().enumerate() {
            if tp >= t_const {
                break;
            }
            let t_end = self
                .speed_profile
                .get(i + 1)
                .map(|&(tn, _)| tn)
                .unwrap_or(f64::INFINITY)
                .min(t_const);
            s += vp * (t_end - tp);
        }
        if t > ramp_start {
            let stop = self.stop.unwrap();
            let v0 = self.base_speed(stop.at);
            let target = stop.target.min(v0);
            let ramp_time = (v0 - target) / stop.decel;
            let tau = t - ramp_start;
            if tau <= ramp_time {
                s += v0 * tau - 0.5 * stop.decel * tau * tau;
            } else {
                s += v0 * ramp_time - 0.5 * stop.decel * ramp_time * ramp_time
                    + target * (tau - ramp_time);
            }
        }
        s
    }

    /// Ground-truth lateral offset at time `t`.
    pub fn y_at(&self, t: f64) -> f64 {
        match self.cutin {
            Some(ev) if t >= ev.at => {
                let span = ev.target_y - self.y0;
                let moved = (ev.rate * (t - ev.at)).min(span.abs());
                self.y0 + moved * span.signum()
            }
            _ => self.y0,
        }
    }
}

/// Centerline source.
#[derive(Clone, Debug)]
pub enum CenterlineSpec {
    Straight(f64),
    File(PathBuf),
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub mode: ScenarioMode,
    pub route_length: f64,
    pub y_lb: f64,
    pub y_ub: f64,
    pub centerline: CenterlineSpec,
    pub lane_half_width: f64,
    pub ego_s: f64,
    pub ego_y: f64,
    pub ego_speed: f64,
    pub timeout: f64,
    pub seed: u64,
    pub neighbors: Vec<NeighborScript>,
    /// `planner.*` overrides collected from the file, applied in order.
    pub overrides: Vec<(String, String)>,
}

impl Scenario {
    pub fn empty_road(name: &str, route_length: f64) -> Self {
        Self {
            name: name.into(),
            mode: ScenarioMode::Inlane,
            route_length,
            y_lb: -1.75,
            y_ub: 1.75,
            centerline: CenterlineSpec::Straight(route_length + 60.0),
            lane_half_width: 1.75,
            ego_s: 2.0,
            ego_y: 0.0,
            ego_speed: 8.0,
            timeout: 60.0,
            seed: 1,
            neighbors: Vec::new(),
            overrides: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.route_length <= 0.0 {
            return Err(SimError::Scenario("route_length must be positive".into()));
        }
        if self.y_lb >= self.y_ub {
            return Err(SimError::Scenario("y_lb must be below y_ub".into()));
        }
        if let CenterlineSpec::Straight(len) = self.centerline {
            if len < self.ego_s + self.route_length + 35.0 {
                return Err(SimError::Scenario(format!(
                    "centerline length {len} too short: need ego_s + route_length + 35 m of \
                     planning margin"
                )));
            }
        }
        if self.speed_limit_hint() <= 0.0 {
            return Err(SimError::Scenario("ego.speed must be positive".into()));
        }
        Ok(())
    }

    fn speed_limit_hint(&self) -> f64 {
        self.ego_speed
    }

    /// Materializes the centerline.
    pub fn build_centerline(&self) -> Result<Centerline<f64>> {
        match &self.centerline {
            CenterlineSpec::Straight(len) => {
                Ok(Centerline::straight(*len, self.lane_half_width)?)
            }
            CenterlineSpec::File(path) => {
                let text = std::fs::read_to_string(path)?;
                Ok(Centerline::from_text(&text, self.lane_half_width, 10.0)?)
            }
        }
    }

    /// Parses the scenario file format.
    pub fn from_text(text: &str, base_dir: &Path) -> Result<Self> {
        let mut scenario = Scenario::empty_road("unnamed", 100.0);
        scenario.neighbors.clear();
        let mut current: Option<NeighborScript> = None;
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| SimError::Scenario(format!("line {}: {msg}", ln + 1));
            if line == "[neighbor]" {
                if let Some(n) = current.take() {
                    scenario.neighbors.push(n);
                }
                current = Some(NeighborScript::constant(0.0, 0.0, 0.0));
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected key = value".into()))?;
            let key = key.trim();
            let value = value.trim();
            let fnum = || -> Result<f64> {
                value
                    .parse::<f64>()
                    .map_err(|e| err(format!("bad number '{value}': {e}")))
            };
            if let Some(neighbor) = current.as_mut() {
                match key {
                    "s" => neighbor.s0 = fnum()?,
                    "y" => neighbor.y0 = fnum()?,
                    "speed" => neighbor.speed_profile = vec![(0.0, fnum()?)],
                    "speed_profile" => {
                        let mut profile = Vec::new();
                        for pair in value.split_whitespace() {
                            let (t, v) = pair
                                .split_once(':')
                                .ok_or_else(|| err(format!("bad profile entry '{pair}'")))?;
                            profile.push((
                                t.parse().map_err(|e| err(format!("{e}")))?,
                                v.parse().map_err(|e| err(format!("{e}")))?,
                            ));
                        }
                        if profile.is_empty() || profile[0].0 != 0.0 {
                            return Err(err("speed_profile must start at t=0".into()));
                        }
                        neighbor.speed_profile = profile;
                    }
                    "cutin.at" => {
                        neighbor.cutin.get_or_insert(CutinEvent {
                            at: 0.0,
                            target_y: 0.0,
                            rate: 1.0,
                        }).at = fnum()?
                    }
                    "cutin.target_y" => {
                        neighbor.cutin.get_or_insert(CutinEvent {
                            at: 0.0,
                            target_y: 0.0,
                            rate: 1.0,
                        }).target_y = fnum()?
                    }
                    "cutin.rate" => {
                        neighbor.cutin.get_or_insert(CutinEvent {
                            at: 0.0,
                            target_y: 0.0,
                            rate: 1.0,
                        }).rate = fnum()?
                    }
                    "stop.at" => {
                        neighbor.stop.get_or_insert(StopEvent {
                            at: 0.0,
                            decel: 4.0,
                            target: 0.0,
                        }).at = fnum()?
                    }
                    "stop.decel" => {
                        neighbor.stop.get_or_insert(StopEvent {
                            at: 0.0,
                            decel: 4.0,
                            target: 0.0,
                        }).decel = fnum()?
                    }
                    "stop.target" => {
                        neighbor.stop.get_or_insert(StopEvent {
                            at: 0.0,
                            decel: 4.0,
                            target: 0.0,
                        }).target = fnum()?
                    }
                    _ => return Err(err(format!("unknown neighbor key '{key}'"))),
                }
                continue;
            }
            match key {
                "name" => scenario.name = value.into(),
                "mode" => {
                    scenario.mode = match value {
                        "inlane" => ScenarioMode::Inlane,
                        "overtaking" => ScenarioMode::Overtaking,
                        _ => return Err(err(format!("unknown mode '{value}'"))),
                    }
                }
                "route_length" => scenario.route_length = fnum()?,
                "y_lb" => scenario.y_lb = fnum()?,
                "y_ub" => scenario.y_ub = fnum()?,
                "lane_half_width" => scenario.lane_half_width = fnum()?,
                "centerline" => {
                    let mut parts = value.split_whitespace();
                    match parts.next() {
                        Some("straight") => {
                            let len = parts
                                .next()
                                .ok_or_else(|| err("straight needs a length".into()))?
                                .parse()
                                .map_err(|e| err(format!("{e}")))?;
                            scenario.centerline = CenterlineSpec::Straight(len);
                        }
                        Some("file") => {
                            let rel = parts
                                .next()
                                .ok_or_else(|| err("file needs a path".into()))?;
                            scenario.centerline = CenterlineSpec::File(base_dir.join(rel));
                        }
                        _ => return Err(err(format!("unknown centerline '{value}'"))),
                    }
                }
                "ego.s" => scenario.ego_s = fnum()?,
                "ego.y" => scenario.ego_y = fnum()?,
                "ego.speed" => scenario.ego_speed = fnum()?,
                "timeout" => scenario.timeout = fnum()?,
                "seed" => {
                    scenario.seed = value
                        .parse()
                        .map_err(|e| err(format!("bad seed: {e}")))?
                }
                k if k.starts_with("planner.") => {
                    scenario
                        .overrides
                        .push((k["planner.".len()..].into(), value.into()));
                }
                _ => return Err(err(format!("unknown key '{key}'"))),
            }
        }
        if let Some(n) = current.take() {
            scenario.neighbors.push(n);
        }
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_text(&text, base)
    }
}
