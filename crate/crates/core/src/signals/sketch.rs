use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Length of the sketch feature vector.
pub const SKETCH_FEATURES: usize = 17;

const THIRD: f64 = 1.0 / 3.0;

/// A single pen stroke.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct Polyline {
    points: Vec<[f64; 2]>,
}

impl Polyline {
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::TooFewPoints(points.len()));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::MalformedSignal("non-finite sketch coordinate".into()));
        }
        Ok(Polyline { points })
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }
}

impl TryFrom<Vec<[f64; 2]>> for Polyline {
    type Error = Error;
    fn try_from(points: Vec<[f64; 2]>) -> Result<Self> {
        Polyline::new(points)
    }
}

impl From<Polyline> for Vec<[f64; 2]> {
    fn from(p: Polyline) -> Self {
        p.points
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SketchFeatures {
    pub start: [f64; 2],
    pub end: [f64; 2],
    pub delta: [f64; 2],
    pub start_end_distance: f64,
    pub path_length: f64,
    /// Share of path length per cell of the 3x3 grid over [-1, 1]^2, row-major
    /// from the bottom-left cell.
    pub grid_fraction: [f64; 9],
}

impl SketchFeatures {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(SKETCH_FEATURES);
        v.extend_from_slice(&self.start);
        v.extend_from_slice(&self.end);
        v.extend_from_slice(&self.delta);
        v.push(self.start_end_distance);
        v.push(self.path_length);
        v.extend_from_slice(&self.grid_fraction);
        v
    }
}

/// Translates and uniformly scales the stroke so its bounding box is centered
/// and fits [-1, 1]^2. A stroke with a single distinct position maps to the
/// origin.
pub fn normalize_sketch(p: &Polyline) -> Result<Polyline> {
    if p.points.len() < 2 {
        return Err(Error::TooFewPoints(p.points.len()));
    }
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for pt in &p.points {
        for k in 0..2 {
            lo[k] = lo[k].min(pt[k]);
            hi[k] = hi[k].max(pt[k]);
        }
    }
    let center = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
    let half = 0.5 * (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let points = p
        .points
        .iter()
        .map(|pt| {
            if half > 0.0 {
                [(pt[0] - center[0]) / half, (pt[1] - center[1]) / half]
            } else {
                [0.0, 0.0]
            }
        })
        .collect();
    Ok(Polyline { points })
}

/// Cell along one axis; points on a boundary go to the lower cell.
fn axis_cell(v: f64) -> usize {
    if v <= -THIRD {
        0
    } else if v <= THIRD {
        1
    } else {
        2
    }
}

fn cell_of(p: [f64; 2]) -> usize {
    axis_cell(p[1]) * 3 + axis_cell(p[0])
}

/// Endpoint, displacement and length features plus the path-length share
/// falling in each grid cell. Expects a normalized stroke.
pub fn sketch_features(p: &Polyline) -> SketchFeatures {
    let pts = &p.points;
    let start = pts[0];
    let end = pts[pts.len() - 1];
    let delta = [end[0] - start[0], end[1] - start[1]];
    let start_end_distance = delta[0].hypot(delta[1]);

    let mut cells = [0.0; 9];
    let mut path_length = 0.0;
    for seg in pts.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let d = [b[0] - a[0], b[1] - a[1]];
        let len = d[0].hypot(d[1]);
        if len == 0.0 {
            continue;
        }
        path_length += len;
        // Split where the segment crosses a grid line.
        let mut cuts = vec![0.0, 1.0];
        for k in 0..2 {
            if d[k] != 0.0 {
                for line in [-THIRD, THIRD] {
                    let t = (line - a[k]) / d[k];
                    if t > 0.0 && t < 1.0 {
                        cuts.push(t);
                    }
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        for w in cuts.windows(2) {
            let (t0, t1) = (w[0], w[1]);
            if t1 <= t0 {
                continue;
            }
            let tm = 0.5 * (t0 + t1);
            let mid = [a[0] + tm * d[0], a[1] + tm * d[1]];
            cells[cell_of(mid)] += (t1 - t0) * len;
        }
    }

    let grid_fraction = if path_length > 0.0 {
        cells.map(|c| c / path_length)
    } else {
        let mut g = [0.0; 9];
        g[cell_of(start)] = 1.0;
        g
    };
    SketchFeatures {
        start,
        end,
        delta,
        start_end_distance,
        path_length,
        grid_fraction,
    }
}
