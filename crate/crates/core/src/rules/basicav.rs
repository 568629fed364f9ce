use super::compiled::Compiled;
use super::{Action, RawOutcome, TraceLevel};

pub(crate) fn run(c: &Compiled, active: &[bool], trace: TraceLevel) -> RawOutcome {
    let mut order: Vec<usize> = c.by_rank.iter().copied().filter(|&p| active[p]).collect();
    // Stable sort keeps tie-breaking order among equal scores.
    order.sort_by(|&a, &b| c.score[b].cmp(&c.score[a]));

    let mut out = RawOutcome::new(trace);
    let mut spent = 0u64;
    for p in order {
        let action = if spent + c.costs[p] <= c.budget {
            spent += c.costs[p];
            out.funded.push(p);
            Action::Funded
        } else {
            Action::Dropped
        };
        out.record(p, action, None, Vec::new, TraceLevel::Rounds);
    }
    out
}
