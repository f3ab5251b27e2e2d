//! Point-cloud scenarios that do or do not favor cluster-first inference.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::user::{HalfPlane, PointSampler, SimulatedUser, UserKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseKind {
    /// Two blobs, one per color.
    Structured,
    /// One blob cut diagonally.
    Unstructured,
    /// Two side-by-side vertical blobs, each cut in half by a horizontal
    /// color boundary.
    Deceptive,
}

pub fn case_user_kind(kind: CaseKind) -> UserKind {
    let (color_map, sampler) = match kind {
        CaseKind::Structured => (
            HalfPlane::VERTICAL,
            PointSampler::Gaussians {
                centers: vec![[-0.6, 0.0], [0.6, 0.0]],
                sd: [0.15, 0.15],
            },
        ),
        CaseKind::Unstructured => (
            HalfPlane {
                normal: [1.0, 1.0],
                offset: 0.0,
            },
            PointSampler::Gaussians {
                centers: vec![[0.0, 0.0]],
                sd: [0.4, 0.4],
            },
        ),
        CaseKind::Deceptive => (
            HalfPlane {
                normal: [0.0, 1.0],
                offset: 0.0,
            },
            PointSampler::Gaussians {
                centers: vec![[-0.6, 0.0], [0.6, 0.0]],
                sd: [0.1, 0.35],
            },
        ),
    };
    UserKind::Map {
        color_map,
        sampler,
        margin: 0.05,
    }
}

/// A map user for `kind` with a PIN drawn from `seed`.
pub fn generate_case(kind: CaseKind, seed: u64) -> SimulatedUser {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pin = std::array::from_fn(|_| rng.random_range(0..10u8));
    SimulatedUser::new(case_user_kind(kind), pin, rng.random())
}
