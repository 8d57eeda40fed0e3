//! Fixtures shared by the benchmarks.

use infoloss::verify::random_model_pair;
use infoloss::{CondDist, FullModel};

/// Deterministic random model and estimate with alphabets up to `max_card`.
pub fn fixture(seed: u64, max_card: usize) -> (FullModel, CondDist) {
    random_model_pair(seed, max_card, false)
}
