//! Exhaustive check for perfectly equal exposure under subset selection:
//! every consumer is shown exactly `k` of its candidates and sees all of them.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::ItemId;

/// Largest search space (product of per-consumer subset counts) accepted.
pub const MAX_ASSIGNMENTS: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Feasibility {
    /// One `k`-subset per consumer under which every producer has the same
    /// exposure.
    Feasible(Vec<Vec<ItemId>>),
    Infeasible,
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible(_))
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Decide whether some choice of `k` items per candidate set gives every
/// producer (every item appearing in any set) identical exposure.
pub fn equal_exposure_feasible<S: AsRef<[ItemId]>>(sets: &[S], k: usize) -> Result<Feasibility> {
    let mut index: BTreeMap<ItemId, usize> = BTreeMap::new();
    let mut local: Vec<Vec<usize>> = Vec::with_capacity(sets.len());
    let mut space = 1u128;
    for (c, set) in sets.iter().enumerate() {
        let set = set.as_ref();
        let mut ids = Vec::with_capacity(set.len());
        for item in set {
            let next = index.len();
            let id = *index.entry(*item).or_insert(next);
            if ids.contains(&id) {
                return Err(Error::invalid(format!(
                    "consumer {c} lists producer {item} twice"
                )));
            }
            ids.push(id);
        }
        if set.len() < k {
            return Err(Error::invalid(format!(
                "consumer {c} has {} candidates, fewer than k = {k}",
                set.len()
            )));
        }
        space = space.saturating_mul(binomial(set.len(), k));
        local.push(ids);
    }
    if space > MAX_ASSIGNMENTS {
        return Err(Error::Capacity(format!(
            "{space} candidate selections exceed the exhaustive-search limit of {MAX_ASSIGNMENTS}"
        )));
    }
    let producers: Vec<ItemId> = {
        let mut p = vec![ItemId(0); index.len()];
        for (item, &i) in &index {
            p[i] = *item;
        }
        p
    };
    let m = producers.len();
    if m == 0 {
        return Ok(Feasibility::Feasible(vec![Vec::new(); sets.len()]));
    }
    let slots = sets.len() * k;
    if !slots.is_multiple_of(m) {
        return Ok(Feasibility::Infeasible);
    }
    let target = slots / m;

    // remaining[c][p]: how many consumers from c onward can still show p
    let mut remaining = vec![vec![0usize; m]; local.len() + 1];
    for c in (0..local.len()).rev() {
        remaining[c] = remaining[c + 1].clone();
        for &p in &local[c] {
            remaining[c][p] += 1;
        }
    }
    if remaining[0].iter().any(|&r| r < target) {
        return Ok(Feasibility::Infeasible);
    }

    let mut search = Search {
        local: &local,
        remaining: &remaining,
        k,
        target,
        exposure: vec![0; m],
        chosen: Vec::with_capacity(local.len()),
    };
    Ok(match search.run(0) {
        true => Feasibility::Feasible(
            search
                .chosen
                .iter()
                .map(|sel| sel.iter().map(|&p| producers[p]).collect())
                .collect(),
        ),
        false => Feasibility::Infeasible,
    })
}

struct Search<'a> {
    local: &'a [Vec<usize>],
    remaining: &'a [Vec<usize>],
    k: usize,
    target: usize,
    exposure: Vec<usize>,
    chosen: Vec<Vec<usize>>,
}

impl Search<'_> {
    fn run(&mut self, consumer: usize) -> bool {
        if consumer == self.local.len() {
            return self.exposure.iter().all(|&e| e == self.target);
        }
        let mut picked = Vec::with_capacity(self.k);
        self.choose(consumer, 0, &mut picked)
    }

    fn choose(&mut self, consumer: usize, start: usize, picked: &mut Vec<usize>) -> bool {
        let set = &self.local[consumer];
        if picked.len() == self.k {
            // everyone must still be able to reach the target with the
            // consumers after this one
            let rest = &self.remaining[consumer + 1];
            if self
                .exposure
                .iter()
                .zip(rest)
                .any(|(&e, &r)| e > self.target || e + r < self.target)
            {
                return false;
            }
            self.chosen.push(picked.clone());
            if self.run(consumer + 1) {
                return true;
            }
            self.chosen.pop();
            return false;
        }
        let need = self.k - picked.len();
        for (pos, &p) in set
            .iter()
            .enumerate()
            .take(set.len() - need + 1)
            .skip(start)
        {
            self.exposure[p] += 1;
            picked.push(p);
            let found = self.exposure[p] <= self.target && self.choose(consumer, pos + 1, picked);
            picked.pop();
            if found {
                return true;
            }
            self.exposure[p] -= 1;
        }
        false
    }
}
