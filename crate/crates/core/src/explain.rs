//! Per-digit explanation panels: how each hypothesis labels the user's
//! actions, and for continuous signals the color map its classifier draws.

use serde::{Deserialize, Serialize};

use crate::consistency::{median_heuristic_gamma, train_rbf_svm};
use crate::error::Result;
use crate::inference::{hypothesis_dataset, project_session};
use crate::model::{Gamma, Meaning, Provenance, SessionState, NUM_INTENTS};

pub const DEFAULT_GRID: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum PanelSignal {
    Button {
        button: u32,
        color: Meaning,
        provenance: Provenance,
    },
    Point {
        x: f64,
        y: f64,
        color: Meaning,
        provenance: Provenance,
    },
}

/// Predicted colors over a square, `cells[row][col]`, row 0 at `y_min`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorGrid {
    pub size: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub cells: Vec<Vec<Meaning>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub digit: u8,
    pub valid: bool,
    pub score: f64,
    pub signals: Vec<PanelSignal>,
    pub grid: Option<ColorGrid>,
}

pub fn dashboard(state: &SessionState, grid_size: usize) -> Result<Vec<Panel>> {
    let coords = if state.mode.is_discrete() {
        Vec::new()
    } else {
        project_session(state)?
    };
    let square = display_square(&coords);
    let gamma = match state.config.rbf_gamma {
        Gamma::Fixed(g) => g,
        Gamma::Median => median_heuristic_gamma(&coords),
    };
    (0..NUM_INTENTS as u8)
        .map(|digit| {
            let ds = hypothesis_dataset(&state.history, &state.shared_prior, digit);
            let signals: Vec<PanelSignal> = if state.mode.is_discrete() {
                ds.items
                    .iter()
                    .filter_map(|item| {
                        item.action.as_button().map(|button| PanelSignal::Button {
                            button,
                            color: item.label,
                            provenance: item.provenance,
                        })
                    })
                    .collect()
            } else {
                ds.items
                    .iter()
                    .zip(&coords)
                    .map(|(item, p)| PanelSignal::Point {
                        x: p[0],
                        y: p[1],
                        color: item.label,
                        provenance: item.provenance,
                    })
                    .collect()
            };
            let grid = if state.mode.is_discrete() || coords.is_empty() || grid_size == 0 {
                None
            } else {
                let labeled: Vec<(&[f64], Meaning)> =
                    coords.iter().map(|p| p.as_slice()).zip(ds.items.iter().map(|i| i.label)).collect();
                Some(color_grid(&labeled, square, grid_size, state.config.svm_c, gamma)?)
            };
            Ok(Panel {
                digit,
                valid: state.valid[digit as usize],
                score: state.scores[digit as usize],
                signals,
                grid,
            })
        })
        .collect()
}

/// Square around the points, padded by 10%; the unit square when empty.
fn display_square(coords: &[Vec<f64>]) -> [f64; 4] {
    if coords.is_empty() {
        return [0.0, 1.0, 0.0, 1.0];
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in coords {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    let half = (0.5 * (x1 - x0).max(y1 - y0) * 1.1).max(0.5);
    let (cx, cy) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
    [cx - half, cx + half, cy - half, cy + half]
}

fn color_grid(data: &[(&[f64], Meaning)], square: [f64; 4], size: usize, c: f64, gamma: f64) -> Result<ColorGrid> {
    let [x_min, x_max, y_min, y_max] = square;
    let center = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * (i as f64 + 0.5) / size as f64;
    let first = data[0].1;
    let cells = if data.iter().all(|(_, l)| *l == first) {
        vec![vec![first; size]; size]
    } else {
        let f = train_rbf_svm(data, c, gamma)?;
        (0..size)
            .map(|row| {
                (0..size)
                    .map(|col| {
                        let v = f.value(&[center(x_min, x_max, col), center(y_min, y_max, row)]);
                        if v >= 0.0 {
                            Meaning::Yellow
                        } else {
                            Meaning::Grey
                        }
                    })
                    .collect()
            })
            .collect()
    };
    Ok(ColorGrid {
        size,
        x_min,
        x_max,
        y_min,
        y_max,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ActionSignal, EngineConfig, Mode};

    #[test]
    fn fresh_session_has_empty_valid_panels() {
        let s = SessionState::new(Mode::SelfCalButtons, Some(9), 0, EngineConfig::default()).unwrap();
        let panels = dashboard(&s, DEFAULT_GRID).unwrap();
        assert_eq!(panels.len(), 10);
        assert!(panels.iter().all(|p| p.valid && p.signals.is_empty() && p.grid.is_none()));
    }

    #[test]
    fn touch_panels_carry_grids() {
        let mut s = SessionState::new(Mode::TouchMap, None, 3, EngineConfig::default()).unwrap();
        for (x, y) in [(-0.5, 0.1), (0.6, -0.2), (-0.7, 0.4), (0.3, 0.9)] {
            s.apply(ActionSignal::point(x, y)).unwrap();
        }
        let panels = dashboard(&s, 8).unwrap();
        for p in &panels {
            let g = p.grid.as_ref().unwrap();
            assert_eq!(g.cells.len(), 8);
            assert!(g.cells.iter().all(|r| r.len() == 8));
            assert_eq!(p.signals.len(), 4);
        }
    }
}
