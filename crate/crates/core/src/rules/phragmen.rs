//! Sequential Phragmén for participatory budgeting.
//!
//! Voters earn one unit of money per unit of time. A class last reset at time
//! `r` holds `t - r` at time `t`, so the supporters of project `c` can afford
//! it at `t = (cost(c) + sum of their reset times) / |S(c)|`. The per-project
//! sum of reset times is maintained incrementally.

use super::compiled::Compiled;
use super::{Action, RawOutcome, TraceLevel};
use crate::rational::{self, Rational};
use num_bigint::BigInt;

pub(crate) fn run(c: &Compiled, active: &[bool], trace: TraceLevel) -> RawOutcome {
    let m = c.num_projects();
    let mut reset: Vec<Rational> = vec![rational::zero(); c.classes.len()];
    let mut reset_sum: Vec<Rational> = vec![rational::zero(); m];
    // Zero-supporter projects never become affordable.
    let mut pending: Vec<usize> = c
        .by_rank
        .iter()
        .copied()
        .filter(|&p| active[p] && c.score[p] > 0)
        .collect();

    let mut out = RawOutcome::new(trace);
    let mut spent = 0u64;
    while !pending.is_empty() {
        // `pending` is in tie-breaking order, so the first strict minimum wins ties.
        let mut best: Option<(usize, Rational)> = None;
        for (pos, &p) in pending.iter().enumerate() {
            let t = (Rational::from_integer(BigInt::from(c.costs[p])) + &reset_sum[p])
                / Rational::from_integer(BigInt::from(c.score[p]));
            if best.as_ref().is_none_or(|(_, bt)| t < *bt) {
                best = Some((pos, t));
            }
        }
        let (pos, time) = best.expect("pending is nonempty");
        let p = pending.remove(pos);

        let action = if spent + c.costs[p] <= c.budget {
            spent += c.costs[p];
            for &k in &c.supporters[p] {
                let delta = (&time - &reset[k]) * Rational::from_integer(BigInt::from(c.classes[k].weight));
                for &d in &c.classes[k].projects {
                    reset_sum[d] += &delta;
                }
                reset[k] = time.clone();
            }
            out.funded.push(p);
            Action::Funded
        } else {
            Action::Dropped
        };
        let balances = || reset.iter().map(|r| &time - r).collect();
        out.record(p, action, Some(time.clone()), balances, trace);
    }
    out
}
