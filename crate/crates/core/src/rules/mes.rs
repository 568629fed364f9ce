//! Method of Equal Shares, cost-utility and binary-utility variants.

use super::compiled::Compiled;
use super::{Action, MesUtility, RawOutcome, RuleError, TraceLevel};
use crate::rational::{self, Rational};
use num_bigint::BigInt;

fn int(n: u64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Smallest per-voter payment cap `x` with `sum_k w_k * min(b_k, x) = cost`,
/// or `None` if the supporters cannot afford the project at all.
fn min_cap(c: &Compiled, balances: &[Rational], project: usize) -> Option<Rational> {
    let cost = int(c.costs[project]);
    let mut sup: Vec<usize> = c.supporters[project].clone();
    sup.sort_by(|&a, &b| balances[a].cmp(&balances[b]));

    let total: Rational = sup
        .iter()
        .map(|&k| &balances[k] * int(c.classes[k].weight))
        .sum();
    if total < cost {
        return None;
    }
    let mut paid_in_full = rational::zero();
    let mut remaining_weight: u64 = sup.iter().map(|&k| c.classes[k].weight).sum();
    for &k in &sup {
        let cap = (&cost - &paid_in_full) / int(remaining_weight);
        if cap <= balances[k] {
            return Some(cap);
        }
        paid_in_full += &balances[k] * int(c.classes[k].weight);
        remaining_weight -= c.classes[k].weight;
    }
    unreachable!("total balance covers the cost")
}

pub(crate) fn run(
    c: &Compiled,
    active: &[bool],
    utility: MesUtility,
    trace: TraceLevel,
) -> Result<RawOutcome, RuleError> {
    if c.num_voters == 0 {
        return Err(RuleError::NoVoters);
    }
    let share = rational::ratio(c.budget, c.num_voters);
    let mut balances: Vec<Rational> = vec![share; c.classes.len()];
    let mut pending: Vec<usize> = c
        .by_rank
        .iter()
        .copied()
        .filter(|&p| active[p] && c.score[p] > 0)
        .collect();

    let mut out = RawOutcome::new(trace);
    loop {
        let mut best: Option<(usize, Rational, Rational)> = None;
        // Balances only decrease, so unaffordable projects are gone for good.
        let mut still_affordable = Vec::with_capacity(pending.len());
        for &p in &pending {
            let Some(cap) = min_cap(c, &balances, p) else { continue };
            let rho = match utility {
                MesUtility::Cost => &cap / int(c.costs[p]),
                MesUtility::Binary => cap.clone(),
            };
            if best.as_ref().is_none_or(|(_, br, _)| rho < *br) {
                best = Some((p, rho, cap));
            }
            still_affordable.push(p);
        }
        pending = still_affordable;
        let Some((p, rho, cap)) = best else { break };
        pending.retain(|&q| q != p);

        for &k in &c.supporters[p] {
            if balances[k] > cap {
                balances[k] -= &cap;
            } else {
                balances[k] = rational::zero();
            }
        }
        out.funded.push(p);
        out.record(p, Action::Funded, Some(rho), || balances.clone(), trace);
    }
    Ok(out)
}
