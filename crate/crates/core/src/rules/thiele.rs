//! Sequential and global Thiele rules for committee elections.

use super::compiled::Compiled;
use super::{Action, RawOutcome, RuleError, RuleOptions, TraceLevel, WeightFunction};
use crate::model::{Election, ProjectId};
use crate::rational::{self, Rational};
use num_bigint::BigInt;

fn int(n: u64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `w-score(W) = sum over voters of w(1) + ... + w(|A(v) ∩ W|)`.
pub fn w_score(e: &Election, w: &WeightFunction, committee: &[ProjectId]) -> Rational {
    let mut total = rational::zero();
    for v in e.voters() {
        let hits = committee.iter().filter(|c| v.approvals.contains(*c)).count();
        for j in 1..=hits {
            total += w.weight(j);
        }
    }
    total
}

pub(crate) fn run_sequential(c: &Compiled, active: &[bool], w: &WeightFunction, trace: TraceLevel) -> RawOutcome {
    let mut pending: Vec<usize> = c.by_rank.iter().copied().filter(|&p| active[p]).collect();
    let rounds = (c.budget as usize).min(pending.len());
    let mut covered = vec![0usize; c.classes.len()];
    let mut out = RawOutcome::new(trace);
    for _ in 0..rounds {
        let mut best: Option<(usize, Rational)> = None;
        for (pos, &p) in pending.iter().enumerate() {
            let gain: Rational = c.supporters[p]
                .iter()
                .map(|&k| w.weight(covered[k] + 1) * int(c.classes[k].weight))
                .sum();
            if best.as_ref().is_none_or(|(_, g)| gain > *g) {
                best = Some((pos, gain));
            }
        }
        let (pos, gain) = best.expect("rounds bounded by pending count");
        let p = pending.remove(pos);
        for &k in &c.supporters[p] {
            covered[k] += 1;
        }
        out.funded.push(p);
        out.record(p, Action::Funded, Some(gain), Vec::new, TraceLevel::Rounds);
    }
    out
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc.saturating_mul((n - i) as u128) / (i as u128 + 1))
}

/// Exhaustive search over committees of size `min(B, m)`. Committees are
/// enumerated lexicographically in tie-breaking rank, so the first maximum
/// found is the one preferred by the lexicographic extension of the order.
pub(crate) fn run_global(
    c: &Compiled,
    active: &[bool],
    w: &WeightFunction,
    opts: &RuleOptions,
) -> Result<RawOutcome, RuleError> {
    let candidates: Vec<usize> = c.by_rank.iter().copied().filter(|&p| active[p]).collect();
    let m = candidates.len();
    let size = (c.budget as usize).min(m);
    let subsets = binomial(m, size);
    if m > opts.global_max_projects || subsets > opts.global_max_subsets {
        return Err(RuleError::EnumerationCap {
            projects: m,
            subsets,
            max_projects: opts.global_max_projects,
            max_subsets: opts.global_max_subsets,
        });
    }
    // prefix[j] = w(1) + ... + w(j)
    let mut prefix = vec![rational::zero()];
    for j in 1..=size {
        let next = &prefix[j - 1] + w.weight(j);
        prefix.push(next);
    }

    let mut idx: Vec<usize> = (0..size).collect();
    let mut counts = vec![0usize; c.classes.len()];
    let mut best: Option<(Vec<usize>, Rational)> = None;
    loop {
        counts.iter_mut().for_each(|x| *x = 0);
        for &i in &idx {
            for &k in &c.supporters[candidates[i]] {
                counts[k] += 1;
            }
        }
        let score: Rational = counts
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 0)
            .map(|(k, &n)| &prefix[n] * int(c.classes[k].weight))
            .sum();
        if best.as_ref().is_none_or(|(_, s)| score > *s) {
            best = Some((idx.clone(), score));
        }
        // Advance to the next combination in lexicographic order.
        let Some(i) = (0..size).rev().find(|&i| idx[i] < m - size + i) else { break };
        idx[i] += 1;
        for j in i + 1..size {
            idx[j] = idx[j - 1] + 1;
        }
    }

    let (chosen, score) = best.expect("at least the empty committee");
    let mut out = RawOutcome::new(opts.trace);
    for &i in &chosen {
        out.funded.push(candidates[i]);
        out.record(candidates[i], Action::Funded, Some(score.clone()), Vec::new, TraceLevel::Rounds);
    }
    Ok(out)
}

/// w-score of a committee given by project indices.
pub(crate) fn score_indices(c: &Compiled, w: &WeightFunction, committee: &[usize]) -> Rational {
    let mut counts = vec![0usize; c.classes.len()];
    for &p in committee {
        for &k in &c.supporters[p] {
            counts[k] += 1;
        }
    }
    let mut total = rational::zero();
    for (k, &n) in counts.iter().enumerate() {
        for j in 1..=n {
            total += w.weight(j) * int(c.classes[k].weight);
        }
    }
    total
}
