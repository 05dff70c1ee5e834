//! Ten consumers, ten producers, one viewed slot: deterministic ranking gives
//! every producer one impression, uniform shuffling does not.

use crate::error::Result;
use crate::frequency::candidate_frequencies;
use crate::metrics::{expected_impressions, randomized_expected_impressions};
use crate::ranking::RankingPolicy;
use crate::simgen::CandidateSet;
use crate::streams::{stream, tag};
use crate::{ItemId, UserId};

pub const TOY_PRODUCERS: usize = 10;
pub const TOY_K: usize = 4;
pub const TOY_ELL: usize = 1;
/// Producer present in every candidate set.
pub const TOY_SHARED: ItemId = ItemId(9);

/// Consumer `i < 9` gets producers `i, i+1, i+2 (mod 9)` and J, ranked in that
/// order; consumer 9 gets J first, then A, B, C.
pub fn toy_sets() -> Vec<CandidateSet> {
    let scores = vec![4.0, 3.0, 2.0, 1.0];
    (0..TOY_PRODUCERS as u32)
        .map(|c| {
            let items = if c < 9 {
                vec![
                    ItemId(c),
                    ItemId((c + 1) % 9),
                    ItemId((c + 2) % 9),
                    TOY_SHARED,
                ]
            } else {
                vec![TOY_SHARED, ItemId(0), ItemId(1), ItemId(2)]
            };
            CandidateSet::new(UserId(c), items, scores.clone()).expect("toy sets are well formed")
        })
        .collect()
}

pub fn producer_label(item: ItemId) -> char {
    (b'A' + item.0 as u8) as char
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyRow {
    pub producer: ItemId,
    pub deterministic: f64,
    pub randomized_mc: f64,
    pub randomized_exact: f64,
}

/// Expected impressions per producer under deterministic ranking and under
/// uniform shuffling (Monte Carlo over `trials` passes, plus closed form).
pub fn toy_demo(trials: usize, seed: u64) -> Result<Vec<ToyRow>> {
    let sets = toy_sets();
    let freqs = candidate_frequencies(&sets)?;
    let mut rng = stream(&[seed, tag::TOY]);
    let det = expected_impressions(
        &RankingPolicy::Deterministic,
        &sets,
        &freqs,
        TOY_PRODUCERS,
        TOY_ELL,
        1,
        &mut rng,
    )?;
    let mc = expected_impressions(
        &RankingPolicy::Randomized,
        &sets,
        &freqs,
        TOY_PRODUCERS,
        TOY_ELL,
        trials,
        &mut rng,
    )?;
    let exact = randomized_expected_impressions(&sets, TOY_PRODUCERS, TOY_ELL)?;
    Ok((0..TOY_PRODUCERS as u32)
        .map(ItemId)
        .map(|p| ToyRow {
            producer: p,
            deterministic: det.get(p),
            randomized_mc: mc.get(p),
            randomized_exact: exact.get(p),
        })
        .collect())
}
