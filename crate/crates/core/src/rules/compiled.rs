use crate::model::Election;
use std::collections::HashMap;

/// Voters sharing one approval set.
#[derive(Clone, Debug)]
pub(crate) struct BallotClass {
    pub weight: u64,
    pub projects: Vec<usize>,
}

/// Index-based view of an election used by every rule.
///
/// Voters with identical approval sets behave identically under all rules,
/// so they are merged into weighted classes. Sub-elections induced by a
/// strategy profile are evaluated by masking projects rather than rebuilding
/// the election.
#[derive(Clone, Debug)]
pub(crate) struct Compiled {
    pub costs: Vec<u64>,
    pub rank: Vec<usize>,
    /// Project indices sorted by tie-breaking rank.
    pub by_rank: Vec<usize>,
    pub classes: Vec<BallotClass>,
    /// Supporting class indices per project.
    pub supporters: Vec<Vec<usize>>,
    /// Number of approving voters per project.
    pub score: Vec<u64>,
    pub num_voters: u64,
    pub budget: u64,
    pub voter_class: Vec<usize>,
}

impl Compiled {
    pub fn new(e: &Election) -> Self {
        let m = e.num_projects();
        let costs: Vec<u64> = e.projects().iter().map(|p| p.cost).collect();
        let rank: Vec<usize> = (0..m).map(|i| e.rank(i)).collect();
        let mut by_rank: Vec<usize> = (0..m).collect();
        by_rank.sort_by_key(|&i| rank[i]);

        let mut class_of: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut classes: Vec<BallotClass> = Vec::new();
        let mut voter_class = Vec::with_capacity(e.voters().len());
        for v in e.voters() {
            let mut key: Vec<usize> = v
                .approvals
                .iter()
                .map(|id| e.index_of(id).expect("validated election"))
                .collect();
            key.sort_unstable();
            let k = *class_of.entry(key.clone()).or_insert_with(|| {
                classes.push(BallotClass { weight: 0, projects: key });
                classes.len() - 1
            });
            classes[k].weight += 1;
            voter_class.push(k);
        }
        let mut supporters = vec![Vec::new(); m];
        let mut score = vec![0u64; m];
        for (k, c) in classes.iter().enumerate() {
            for &p in &c.projects {
                supporters[p].push(k);
                score[p] += c.weight;
            }
        }
        Compiled {
            costs,
            rank,
            by_rank,
            classes,
            supporters,
            score,
            num_voters: e.voters().len() as u64,
            budget: e.budget(),
            voter_class,
        }
    }

    pub fn num_projects(&self) -> usize {
        self.costs.len()
    }

    pub fn all_active(&self) -> Vec<bool> {
        vec![true; self.num_projects()]
    }

    pub fn has_unit_costs(&self, active: &[bool]) -> bool {
        self.costs
            .iter()
            .zip(active)
            .all(|(&c, &a)| !a || c == 1)
    }
}
