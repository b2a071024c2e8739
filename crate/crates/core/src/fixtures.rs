//! Small reference networks used throughout the tests and examples.

use crate::network::{ReactionNetwork, ReactionSpec};

fn build(names: &[&str], reactions: Vec<ReactionSpec>) -> ReactionNetwork {
    ReactionNetwork::new(names.iter().copied(), reactions).expect("fixture network is valid")
}

/// `A <-> B` with forward rate `kf` and backward rate `kb`.
pub fn net_ab(kf: f64, kb: f64) -> ReactionNetwork {
    build(
        &["A", "B"],
        vec![
            ReactionSpec::new(vec![1.0, 0.0], vec![0.0, 1.0], kf),
            ReactionSpec::new(vec![0.0, 1.0], vec![1.0, 0.0], kb),
        ],
    )
}

/// `A -> B` only.
pub fn net_ab_irrev() -> ReactionNetwork {
    build(
        &["A", "B"],
        vec![ReactionSpec::new(vec![1.0, 0.0], vec![0.0, 1.0], 1.0)],
    )
}

/// The cycle `A -> B -> C -> A` with unit rates.
pub fn net_tri() -> ReactionNetwork {
    net_tri_rates(&[1.0, 1.0, 1.0])
}

pub fn net_tri_rates(k: &[f64; 3]) -> ReactionNetwork {
    build(
        &["A", "B", "C"],
        vec![
            ReactionSpec::new(vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], k[0]),
            ReactionSpec::new(vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], k[1]),
            ReactionSpec::new(vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0], k[2]),
        ],
    )
}

/// `S1 + S3 <-> S2 + S4`.
pub fn net_4sp(kf: f64, kb: f64) -> ReactionNetwork {
    build(
        &["S1", "S2", "S3", "S4"],
        vec![
            ReactionSpec::new(vec![1.0, 0.0, 1.0, 0.0], vec![0.0, 1.0, 0.0, 1.0], kf),
            ReactionSpec::new(vec![0.0, 1.0, 0.0, 1.0], vec![1.0, 0.0, 1.0, 0.0], kb),
        ],
    )
}

/// `A + 4B <-> 5B`, a fifth-order reversible reaction.
pub fn net_quintic(kf: f64, kb: f64) -> ReactionNetwork {
    build(
        &["A", "B"],
        vec![
            ReactionSpec::new(vec![1.0, 4.0], vec![0.0, 5.0], kf),
            ReactionSpec::new(vec![0.0, 5.0], vec![1.0, 4.0], kb),
        ],
    )
}

/// `A -> B`, `A -> 2B`: no conservation law.
pub fn net_m0() -> ReactionNetwork {
    build(
        &["A", "B"],
        vec![
            ReactionSpec::new(vec![1.0, 0.0], vec![0.0, 1.0], 1.0),
            ReactionSpec::new(vec![1.0, 0.0], vec![0.0, 2.0], 1.0),
        ],
    )
}
