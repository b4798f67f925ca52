//! Per-frame occupancy grids and Euclidean distance-field queries.
//!
//! Grids are binary, row-major, with cell `(row, col)` centered at
//! `origin + (col, row) * resolution` in the ego-centric frame. The distance
//! field holds the exact Euclidean distance (meters) from each cell center
//! to the nearest occupied cell center, computed with the two-pass
//! lower-envelope transform in O(H*W). An empty grid yields a finite
//! sentinel `resolution * (height + width)` everywhere so downstream cost
//! arithmetic stays well-defined.

use crate::{real, CoreError, Real, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyGrid<T: Real> {
    pub height: usize,
    pub width: usize,
    /// Meters per cell.
    pub resolution: T,
    /// Ego-centric position of cell (0, 0)'s center.
    pub origin: (T, T),
    /// Row-major occupancy flags, `height * width` entries.
    pub cells: Vec<bool>,
}

impl<T: Real> OccupancyGrid<T> {
    pub fn empty(height: usize, width: usize, resolution: T, origin: (T, T)) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(CoreError::InvalidArgument(
                "grid dimensions must be positive".into(),
            ));
        }
        if resolution <= T::zero() {
            return Err(CoreError::InvalidArgument(
                "grid resolution must be positive".into(),
            ));
        }
        Ok(Self {
            height,
            width,
            resolution,
            origin,
            cells: vec![false; height * width],
        })
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> bool {
        self.cells[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.cells[row * self.width + col] = value;
    }

    /// Marks every cell whose center lies within `radius` of `(x, y)`
    /// (ego-centric meters).
    pub fn fill_disc(&mut self, x: T, y: T, radius: T) {
        let res = self.resolution;
        let cx = (x - self.origin.0) / res;
        let cy = (y - self.origin.1) / res;
        let r_cells = radius / res;
        let lo_row = (cy - r_cells).floor().to_f64().unwrap_or(0.0).max(0.0) as usize;
        let hi_row = (cy + r_cells).ceil().to_f64().unwrap_or(0.0).max(0.0) as usize;
        let lo_col = (cx - r_cells).floor().to_f64().unwrap_or(0.0).max(0.0) as usize;
        let hi_col = (cx + r_cells).ceil().to_f64().unwrap_or(0.0).max(0.0) as usize;
        let r2 = r_cells * r_cells;
        for row in lo_row..=hi_row.min(self.height.saturating_sub(1)) {
            for col in lo_col..=hi_col.min(self.width.saturating_sub(1)) {
                let dx = real::<T>(col as f64) - cx;
                let dy = real::<T>(row as f64) - cy;
                if dx * dx + dy * dy <= r2 {
                    self.set(row, col, true);
                }
            }
        }
    }

    /// Morphological dilation by a square structuring element, `steps` times.
    pub fn dilate(&mut self, steps: usize) {
        for _ in 0..steps {
            let src = self.cells.clone();
            for row in 0..self.height {
                for col in 0..self.width {
                    if src[row * self.width + col] {
                        continue;
                    }
                    let mut hit = false;
                    'scan: for dr in -1i64..=1 {
                        for dc in -1i64..=1 {
                            let r = row as i64 + dr;
                            let c = col as i64 + dc;
                            if r >= 0
                                && c >= 0
                                && (r as usize) < self.height
                                && (c as usize) < self.width
                                && src[r as usize * self.width + c as usize]
                            {
                                hit = true;
                                break 'scan;
                            }
                        }
                    }
                    if hit {
                        self.set(row, col, true);
                    }
                }
            }
        }
    }

    /// Morphological erosion by a square structuring element, `steps` times.
    pub fn erode(&mut self, steps: usize) {
        for _ in 0..steps {
            let src = self.cells.clone();
            for row in 0..self.height {
                for col in 0..self.width {
                    if !src[row * self.width + col] {
                        continue;
                    }
                    let mut keep = true;
                    'scan: for dr in -1i64..=1 {
                        for dc in -1i64..=1 {
                            let r = row as i64 + dr;
                            let c = col as i64 + dc;
                            if r < 0
                                || c < 0
                                || (r as usize) >= self.height
                                || (c as usize) >= self.width
                                || !src[r as usize * self.width + c as usize]
                            {
                                keep = false;
                                break 'scan;
                            }
                        }
                    }
                    if !keep {
                        self.set(row, col, false);
                    }
                }
            }
        }
    }

    /// Serializes to the text format: header line
    /// `UAPGRID1 <height> <width> <resolution> <origin_x> <origin_y>`,
    /// followed by `height` rows of `'0'`/`'1'` characters.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.height * (self.width + 1) + 64);
        out.push_str(&format!(
            "UAPGRID1 {} {} {} {} {}\n",
            self.height,
            self.width,
            self.resolution.to_f64().unwrap(),
            self.origin.0.to_f64().unwrap(),
            self.origin.1.to_f64().unwrap()
        ));
        for row in 0..self.height {
            for col in 0..self.width {
                out.push(if self.at(row, col) { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| CoreError::Parse("empty grid file".into()))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("UAPGRID1") {
            return Err(CoreError::Parse("missing UAPGRID1 magic".into()));
        }
        let mut field = |name: &str| -> Result<f64> {
            parts
                .next()
                .ok_or_else(|| CoreError::Parse(format!("missing {name}")))?
                .parse::<f64>()
                .map_err(|e| CoreError::Parse(format!("bad {name}: {e}")))
        };
        let height = field("height")? as usize;
        let width = field("width")? as usize;
        let resolution = real::<T>(field("resolution")?);
        let origin = (real::<T>(field("origin_x")?), real::<T>(field("origin_y")?));
        let mut grid = Self::empty(height, width, resolution, origin)?;
        for row in 0..height {
            let line = lines
                .next()
                .ok_or_else(|| CoreError::Parse(format!("missing row {row}")))?;
            if line.len() != width {
                return Err(CoreError::Parse(format!(
                    "row {row} has {} cells, expected {width}",
                    line.len()
                )));
            }
            for (col, ch) in line.chars().enumerate() {
                match ch {
                    '0' => {}
                    '1' => grid.set(row, col, true),
                    _ => return Err(CoreError::Parse(format!("bad cell '{ch}' in row {row}"))),
                }
            }
        }
        Ok(grid)
    }
}

/// Exact per-cell distance to the nearest occupied cell, in meters.
#[derive(Clone, Debug)]
pub struct DistanceField<T: Real> {
    pub height: usize,
    pub width: usize,
    pub resolution: T,
    pub origin: (T, T),
    values: Vec<T>,
}

/// One interpolated distance query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistanceSample<T: Real> {
    pub distance: T,
    /// True when the query point fell outside the grid and was clamped to
    /// the boundary.
    pub clamped: bool,
}

/// 1D squared-distance transform (lower envelope of parabolas).
fn transform_1d(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let fq = f[q] + (q * q) as f64;
        loop {
            let p = v[k];
            let s = (fq - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] {
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
    }
    k = 0;
    for q in 0..n {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let d = q as f64 - p as f64;
        out[q] = d * d + f[p];
    }
}

/// Builds the exact Euclidean distance field of a grid.
pub fn build_distance_field<T: Real>(grid: &OccupancyGrid<T>) -> DistanceField<T> {
    let (h, w) = (grid.height, grid.width);
    let sentinel_cells = ((h + w) * (h + w)) as f64;
    // column pass over squared distances
    let mut sq = vec![0.0f64; h * w];
    let mut col_in = vec![0.0f64; h];
    let mut col_out = vec![0.0f64; h];
    for col in 0..w {
        for row in 0..h {
            col_in[row] = if grid.at(row, col) { 0.0 } else { sentinel_cells };
        }
        transform_1d(&col_in, &mut col_out);
        for row in 0..h {
            sq[row * w + col] = col_out[row];
        }
    }
    // row pass
    let mut row_in = vec![0.0f64; w];
    let mut row_out = vec![0.0f64; w];
    for row in 0..h {
        row_in.copy_from_slice(&sq[row * w..(row + 1) * w]);
        transform_1d(&row_in, &mut row_out);
        sq[row * w..(row + 1) * w].copy_from_slice(&row_out);
    }
    let res = grid.resolution.to_f64().unwrap();
    let sentinel = res * (h + w) as f64;
    let values = sq
        .iter()
        .map(|&d2| {
            if d2 >= sentinel_cells {
                real::<T>(sentinel)
            } else {
                real::<T>(d2.sqrt() * res)
            }
        })
        .collect();
    DistanceField {
        height: h,
        width: w,
        resolution: grid.resolution,
        origin: grid.origin,
        values,
    }
}

impl<T: Real> DistanceField<T> {
    #[inline]
    pub fn at(&self, row: usize, col: usize) -> T {
        self.values[row * self.width + col]
    }

    /// Bilinear interpolation of the four surrounding cell distances.
    /// Out-of-grid points are clamped to the boundary and flagged.
    pub fn query(&self, x: T, y: T) -> DistanceSample<T> {
        let u = ((x - self.origin.0) / self.resolution).to_f64().unwrap();
        let v = ((y - self.origin.1) / self.resolution).to_f64().unwrap();
        let max_u = (self.width - 1) as f64;
        let max_v = (self.height - 1) as f64;
        let clamped = !(0.0..=max_u).contains(&u) || !(0.0..=max_v).contains(&v);
        let u = u.clamp(0.0, max_u);
        let v = v.clamp(0.0, max_v);
        let c0 = u.floor() as usize;
        let r0 = v.floor() as usize;
        let c1 = (c0 + 1).min(self.width - 1);
        let r1 = (r0 + 1).min(self.height - 1);
        let fu = real::<T>(u - c0 as f64);
        let fv = real::<T>(v - r0 as f64);
        let one = T::one();
        let d00 = self.at(r0, c0);
        let d01 = self.at(r0, c1);
        let d10 = self.at(r1, c0);
        let d11 = self.at(r1, c1);
        let top = d00 * (one - fu) + d01 * fu;
        let bottom = d10 * (one - fu) + d11 * fu;
        DistanceSample {
            distance: top * (one - fv) + bottom * fv,
            clamped,
        }
    }
}

/// Ordered per-future-frame grids sharing one geometry.
#[derive(Clone, Debug)]
pub struct GridSequence<T: Real> {
    frames: Vec<OccupancyGrid<T>>,
}

impl<T: Real> GridSequence<T> {
    pub fn new(frames: Vec<OccupancyGrid<T>>) -> Result<Self> {
        if frames.is_empty() {
            return Err(CoreError::EmptyInput("grid sequence".into()));
        }
        let first = &frames[0];
        for (i, g) in frames.iter().enumerate().skip(1) {
            if g.height != first.height
                || g.width != first.width
                || g.resolution != first.resolution
                || g.origin != first.origin
            {
                return Err(CoreError::DimensionMismatch(format!(
                    "frame {i} geometry differs from frame 0"
                )));
            }
        }
        Ok(Self { frames })
    }

    pub fn frames(&self) -> &[OccupancyGrid<T>] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Distance field per frame.
    pub fn distance_fields(&self) -> Vec<DistanceField<T>> {
        self.frames.iter().map(build_distance_field).collect()
    }
}

/// Distances along a trajectory, with the frame each step was mapped to.
#[derive(Clone, Debug)]
pub struct DistanceProfile<T: Real> {
    pub distances: Vec<T>,
    pub frame_index: Vec<usize>,
    pub clamped: Vec<bool>,
}

/// Maps planner step time to the nearest predicted frame, holding the last
/// frame beyond the prediction horizon.
pub fn frame_of_step<T: Real>(step: usize, dt: T, frame_period: T, frame_count: usize) -> usize {
    let t = (real::<T>(step as f64) * dt / frame_period).to_f64().unwrap();
    (t.round().max(0.0) as usize).min(frame_count - 1)
}

/// Queries per-step distances for an ego-centric trajectory.
///
/// `points` must already be expressed in the grids' ego-centric frame.
pub fn trajectory_distances<T: Real>(
    fields: &[DistanceField<T>],
    frame_period: T,
    dt: T,
    points: &[(T, T)],
) -> Result<DistanceProfile<T>> {
    if fields.is_empty() {
        return Err(CoreError::EmptyInput("distance field sequence".into()));
    }
    let mut distances = Vec::with_capacity(points.len());
    let mut frame_index = Vec::with_capacity(points.len());
    let mut clamped = Vec::with_capacity(points.len());
    for (k, &(x, y)) in points.iter().enumerate() {
        let f = frame_of_step(k, dt, frame_period, fields.len());
        let sample = fields[f].query(x, y);
        distances.push(sample.distance);
        frame_index.push(f);
        clamped.push(sample.clamped);
    }
    Ok(DistanceProfile {
        distances,
        frame_index,
        clamped,
    })
}
