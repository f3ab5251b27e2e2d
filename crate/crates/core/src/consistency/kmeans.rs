//! Cluster-first baseline: 2-means, then try both cluster colorings.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::svm::squared_distance;
use crate::inference::elim_step;
use crate::model::{InteractionEvent, Meaning, NUM_INTENTS};

const RESTARTS: u64 = 10;
const MAX_ITER: usize = 100;
const SEED: u64 = 0x5eed_2c1a_5e00;

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub assignments: Vec<usize>,
    pub centroids: [Vec<f64>; 2],
    pub inertia: f64,
}

/// Lloyd's 2-means with k-means++ seeding, best of ten seeded restarts.
///
/// Needs at least two points.
pub fn two_means<P: AsRef<[f64]>>(points: &[P]) -> Option<Clustering> {
    if points.len() < 2 {
        return None;
    }
    let mut best: Option<Clustering> = None;
    for restart in 0..RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        rng.set_stream(restart);
        let run = lloyd(points, &mut rng);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    best
}

fn lloyd<P: AsRef<[f64]>>(points: &[P], rng: &mut ChaCha8Rng) -> Clustering {
    let n = points.len();
    let first = rng.random_range(0..n);
    let c0 = points[first].as_ref().to_vec();
    let d2: Vec<f64> = points.iter().map(|p| squared_distance(p.as_ref(), &c0)).collect();
    let total: f64 = d2.iter().sum();
    let second = if total > 0.0 {
        let mut target = rng.random::<f64>() * total;
        let mut pick = n - 1;
        for (i, d) in d2.iter().enumerate() {
            if target < *d {
                pick = i;
                break;
            }
            target -= d;
        }
        pick
    } else {
        (first + 1) % n
    };
    let mut centroids = [c0, points[second].as_ref().to_vec()];
    let mut assignments = vec![0; n];
    for _ in 0..MAX_ITER {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let p = p.as_ref();
            let a = usize::from(squared_distance(p, &centroids[1]) < squared_distance(p, &centroids[0]));
            if assignments[i] != a {
                assignments[i] = a;
                changed = true;
            }
        }
        for (k, centroid) in centroids.iter_mut().enumerate() {
            let members: Vec<&[f64]> = points
                .iter()
                .zip(&assignments)
                .filter(|(_, &a)| a == k)
                .map(|(p, _)| p.as_ref())
                .collect();
            if members.is_empty() {
                continue;
            }
            for (dim, c) in centroid.iter_mut().enumerate() {
                *c = members.iter().map(|m| m[dim]).sum::<f64>() / members.len() as f64;
            }
        }
        if !changed {
            break;
        }
    }
    let inertia = points
        .iter()
        .zip(&assignments)
        .map(|(p, &a)| squared_distance(p.as_ref(), &centroids[a]))
        .sum();
    Clustering {
        assignments,
        centroids,
        inertia,
    }
}

/// Clusters `points` (one per event of `history`), then replays elimination
/// under both cluster-to-color assignments. Returns a digit only when exactly
/// one assignment leaves exactly one digit standing.
pub fn unsup_baseline<P: AsRef<[f64]>>(points: &[P], history: &[InteractionEvent]) -> Option<u8> {
    if points.len() != history.len() {
        return None;
    }
    let clustering = two_means(points)?;
    let mut winners = Vec::new();
    for yellow_cluster in 0..2 {
        let mut valid = [true; NUM_INTENTS];
        for (event, &cluster) in history.iter().zip(&clustering.assignments) {
            let meaning = if cluster == yellow_cluster {
                Meaning::Yellow
            } else {
                Meaning::Grey
            };
            valid = elim_step(&valid, &event.coloring, meaning);
        }
        let survivors: Vec<u8> = (0..NUM_INTENTS as u8).filter(|&d| valid[d as usize]).collect();
        if survivors.len() == 1 {
            winners.push(survivors[0]);
        }
    }
    match winners.as_slice() {
        [d] => Some(*d),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separates_two_blobs() {
        let pts: Vec<[f64; 2]> = vec![[-5.0, 0.0], [-5.1, 0.2], [-4.9, -0.1], [5.0, 0.0], [5.2, 0.1], [4.8, 0.3]];
        let c = two_means(&pts).unwrap();
        assert_eq!(c.assignments[0], c.assignments[1]);
        assert_eq!(c.assignments[1], c.assignments[2]);
        assert_ne!(c.assignments[0], c.assignments[3]);
        assert_eq!(c.assignments[3], c.assignments[5]);
    }

    #[test]
    fn needs_two_points() {
        assert!(two_means(&[[0.0]]).is_none());
        assert!(two_means(&[[0.0], [0.0]]).is_some());
    }
}
