//! Reference centerline and conversions between the road-aligned Frenet
//! frame (arc length `s`, signed lateral offset `d`, positive left) and the
//! Cartesian world frame.
//!
//! The centerline is a sampled polyline. The lateral frame interpolates
//! vertex-averaged normals along each segment, which keeps the
//! `(s, d) -> point` map continuous and invertible inside the lane tube;
//! the inverse projection solves the per-segment perpendicularity
//! condition in closed form. Velocities and accelerations map through the
//! local frame rotation only; curvature coupling terms are dropped and
//! absorbed by replanning.

use nalgebra::Vector2;

use crate::basis::StateSequence;
use crate::{real, CoreError, Real, Result};

/// Queries up to this far beyond either end are clamped onto the endpoint;
/// covers arc-length shortfall of polylines sampled from smooth curves.
const END_SLACK: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct Centerline<T: Real> {
    points: Vec<Vector2<T>>,
    /// Cumulative arc length per point, `arc[0] = 0`.
    arc: Vec<T>,
    /// Unit left normal per vertex (averaged between adjacent segments).
    normals: Vec<Vector2<T>>,
    pub lane_half_width: T,
}

#[inline]
fn cross2<T: Real>(a: Vector2<T>, b: Vector2<T>) -> T {
    a.x * b.y - a.y * b.x
}

impl<T: Real> Centerline<T> {
    /// Builds a centerline from sampled points.
    ///
    /// Arc length must be strictly increasing (no repeated points) and
    /// consecutive samples must be closer than `max_spacing`.
    pub fn new(points: Vec<(T, T)>, lane_half_width: T, max_spacing: T) -> Result<Self> {
        if points.len() < 2 {
            return Err(CoreError::InvalidArgument(
                "centerline needs at least 2 points".into(),
            ));
        }
        let points: Vec<Vector2<T>> = points.into_iter().map(|(x, y)| Vector2::new(x, y)).collect();
        let mut arc = Vec::with_capacity(points.len());
        arc.push(T::zero());
        for i in 1..points.len() {
            let step = (points[i] - points[i - 1]).norm();
            if step <= T::zero() {
                return Err(CoreError::InvalidArgument(format!(
                    "centerline arc length not strictly increasing at point {i}"
                )));
            }
            if step > max_spacing {
                return Err(CoreError::InvalidArgument(format!(
                    "centerline spacing {} at point {i} exceeds max {}",
                    step.to_f64().unwrap_or(f64::NAN),
                    max_spacing.to_f64().unwrap_or(f64::NAN)
                )));
            }
            arc.push(arc[i - 1] + step);
        }
        // left normal per segment, averaged at shared vertices
        let seg_normal = |i: usize| {
            let t = (points[i + 1] - points[i]).normalize();
            Vector2::new(-t.y, t.x)
        };
        let last = points.len() - 1;
        let normals = (0..points.len())
            .map(|i| {
                if i == 0 {
                    seg_normal(0)
                } else if i == last {
                    seg_normal(last - 1)
                } else {
                    let sum = seg_normal(i - 1) + seg_normal(i);
                    if sum.norm() < real::<T>(1e-6) {
                        // degenerate hairpin; fall back to one side
                        seg_normal(i)
                    } else {
                        sum.normalize()
                    }
                }
            })
            .collect();
        Ok(Self {
            points,
            arc,
            normals,
            lane_half_width,
        })
    }

    /// Straight centerline along +x from the origin.
    pub fn straight(length: T, lane_half_width: T) -> Result<Self> {
        let n = 64usize;
        let pts = (0..=n)
            .map(|i| (length * real::<T>(i as f64 / n as f64), T::zero()))
            .collect();
        Self::new(pts, lane_half_width, length)
    }

    /// Parses the plain-text table format: one `x y` pair per line, meters.
    /// Blank lines and `#` comments are skipped.
    pub fn from_text(text: &str, lane_half_width: T, max_spacing: T) -> Result<Self> {
        let mut pts = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let x: f64 = it
                .next()
                .ok_or_else(|| CoreError::Parse(format!("line {}: missing x", ln + 1)))?
                .parse()
                .map_err(|e| CoreError::Parse(format!("line {}: {e}", ln + 1)))?;
            let y: f64 = it
                .next()
                .ok_or_else(|| CoreError::Parse(format!("line {}: missing y", ln + 1)))?
                .parse()
                .map_err(|e| CoreError::Parse(format!("line {}: {e}", ln + 1)))?;
            pts.push((real::<T>(x), real::<T>(y)));
        }
        Self::new(pts, lane_half_width, max_spacing)
    }

    /// Total arc length.
    pub fn length(&self) -> T {
        *self.arc.last().unwrap()
    }

    pub fn points(&self) -> &[Vector2<T>] {
        &self.points
    }

    /// Segment index and interpolation parameter for arc length `s`.
    fn locate(&self, s: T) -> Result<(usize, T)> {
        let len = self.length();
        let slack = real::<T>(END_SLACK);
        if s < -slack || s > len + slack {
            return Err(CoreError::OutOfRange {
                s: s.to_f64().unwrap_or(f64::NAN),
                len: len.to_f64().unwrap_or(f64::NAN),
            });
        }
        let s = s.clamp(T::zero(), len);
        // binary search for the segment containing s
        let mut lo = 0usize;
        let mut hi = self.arc.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.arc[mid] <= s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let seg_len = self.arc[lo + 1] - self.arc[lo];
        Ok(((lo), (s - self.arc[lo]) / seg_len))
    }

    /// Interpolated unit left normal within segment `i` at parameter `t`.
    fn normal_at(&self, i: usize, t: T) -> Vector2<T> {
        let n = self.normals[i] + (self.normals[i + 1] - self.normals[i]) * t;
        n.normalize()
    }

    /// Local frame within segment `i` at parameter `t`: unit tangent and
    /// unit left normal (the tangent is the normal rotated -90 degrees).
    fn frame_at(&self, i: usize, t: T) -> (Vector2<T>, Vector2<T>) {
        let normal = self.normal_at(i, t);
        (Vector2::new(normal.y, -normal.x), normal)
    }

    /// Maps a single Frenet point to Cartesian.
    pub fn to_cartesian(&self, s: T, d: T) -> Result<Vector2<T>> {
        let (i, t) = self.locate(s)?;
        let base = self.points[i] + (self.points[i + 1] - self.points[i]) * t;
        Ok(base + self.normal_at(i, t) * d)
    }

    /// Maps a full Frenet state sequence (x = longitudinal arc length,
    /// y = lateral offset) to Cartesian, rotating velocities and
    /// accelerations through the local frame.
    pub fn state_to_cartesian(&self, frenet: &StateSequence<T>) -> Result<StateSequence<T>> {
        let n = frenet.len();
        let mut out = StateSequence {
            x: frenet.x.clone(),
            y: frenet.y.clone(),
            vx: frenet.vx.clone(),
            vy: frenet.vy.clone(),
            ax: frenet.ax.clone(),
            ay: frenet.ay.clone(),
        };
        for k in 0..n {
            let (i, t) = self.locate(frenet.x[k])?;
            let base = self.points[i] + (self.points[i + 1] - self.points[i]) * t;
            let (tangent, normal) = self.frame_at(i, t);
            let p = base + normal * frenet.y[k];
            let v = tangent * frenet.vx[k] + normal * frenet.vy[k];
            let a = tangent * frenet.ax[k] + normal * frenet.ay[k];
            out.x[k] = p.x;
            out.y[k] = p.y;
            out.vx[k] = v.x;
            out.vy[k] = v.y;
            out.ax[k] = a.x;
            out.ay[k] = a.y;
        }
        Ok(out)
    }

    /// Candidate projections of `p` onto segment `i`: parameters where
    /// `p - base(t)` is parallel to the interpolated normal. The condition
    /// `cross(n(t), p - a - t u) = 0` is quadratic in `t`.
    fn segment_candidates(&self, i: usize, p: Vector2<T>, out: &mut Vec<(usize, T, T)>) {
        let a = self.points[i];
        let u = self.points[i + 1] - a;
        let n0 = self.normals[i];
        let dn = self.normals[i + 1] - self.normals[i];
        let r0 = p - a;
        let c0 = cross2(n0, r0);
        let c1 = cross2(dn, r0) - cross2(n0, u);
        let c2 = -cross2(dn, u);
        let eps = real::<T>(1e-9);
        let mut push = |t: T| {
            if t >= -eps && t <= T::one() + eps {
                let t = t.clamp(T::zero(), T::one());
                let d = (p - a - u * t).dot(&self.normal_at(i, t));
                out.push((i, t, d));
            }
        };
        if c2.abs() < real::<T>(1e-14) {
            if c1.abs() > real::<T>(1e-14) {
                push(-c0 / c1);
            }
        } else {
            let disc = c1 * c1 - real::<T>(4.0) * c2 * c0;
            if disc >= T::zero() {
                let sq = disc.sqrt();
                let two = real::<T>(2.0);
                push((-c1 + sq) / (two * c2));
                push((-c1 - sq) / (two * c2));
            }
        }
    }

    /// Projects a Cartesian point onto the centerline, returning `(s, d)`.
    ///
    /// Projection ambiguity (equidistant to two non-adjacent segments) is
    /// reported as an error rather than silently resolved.
    pub fn to_frenet(&self, x: T, y: T) -> Result<(T, T)> {
        let p = Vector2::new(x, y);
        let mut candidates: Vec<(usize, T, T)> = Vec::new();
        for i in 0..self.points.len() - 1 {
            self.segment_candidates(i, p, &mut candidates);
        }
        if candidates.is_empty() {
            // beyond the end caps: fall back to the endpoint frames
            let last = self.points.len() - 1;
            let d0 = (p - self.points[0]).dot(&self.normals[0]);
            let dl = (p - self.points[last]).dot(&self.normals[last]);
            let along0 = ((p - self.points[0]).norm_squared() - d0 * d0).abs();
            let along_l = ((p - self.points[last]).norm_squared() - dl * dl).abs();
            candidates.push(if along0 <= along_l {
                (0, T::zero(), d0)
            } else {
                (last - 1, T::one(), dl)
            });
        }
        let mut best: Option<(usize, T, T)> = None;
        let mut second: Option<(usize, T)> = None;
        for &(i, t, d) in &candidates {
            match best {
                None => best = Some((i, t, d)),
                Some((bi, _, bd)) => {
                    if d.abs() < bd.abs() {
                        second = Some((bi, bd));
                        best = Some((i, t, d));
                    } else if second.map_or(true, |(_, sd)| d.abs() < sd.abs()) {
                        second = Some((i, d));
                    }
                }
            }
        }
        let (i, t, d) = best.unwrap();
        if let Some((j, sd)) = second {
            let gap = sd.abs() - d.abs();
            let adjacent = j.abs_diff(i) <= 1;
            if !adjacent && gap < real::<T>(1e-9) {
                return Err(CoreError::AmbiguousProjection {
                    a: i.min(j),
                    b: i.max(j),
                });
            }
        }
        let s = self.arc[i] + (self.arc[i + 1] - self.arc[i]) * t;
        Ok((s, d))
    }

    /// Projects a batch of points.
    pub fn points_to_frenet(&self, pts: &[(T, T)]) -> Result<Vec<(T, T)>> {
        pts.iter().map(|&(x, y)| self.to_frenet(x, y)).collect()
    }
}
