//! Communication graphs: per-step snapshots, scripted or randomly failing
//! schedules, connected components, and unique-ID flooding for group sizes.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Undirected simple graph over agents `0..n_agents`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphSnapshot {
    n_agents: usize,
    edges: BTreeSet<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl GraphSnapshot {
    pub fn new(n_agents: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::Config(format!("self-loop on agent {a}")));
            }
            if a >= n_agents || b >= n_agents {
                return Err(Error::Config(format!(
                    "edge ({a}, {b}) outside {n_agents} agents"
                )));
            }
            set.insert((a.min(b), a.max(b)));
        }
        let mut adjacency = vec![Vec::new(); n_agents];
        for &(a, b) in &set {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Self {
            n_agents,
            edges: set,
            adjacency,
        })
    }

    pub fn empty(n_agents: usize) -> Self {
        Self::new(n_agents, []).expect("empty graph is valid")
    }

    pub fn complete(n_agents: usize) -> Self {
        let edges = (0..n_agents).flat_map(|a| ((a + 1)..n_agents).map(move |b| (a, b)));
        Self::new(n_agents, edges).expect("complete graph is valid")
    }

    pub fn path(n_agents: usize) -> Self {
        Self::new(n_agents, (1..n_agents).map(|b| (b - 1, b))).expect("path graph is valid")
    }

    /// Circulant `degree`-regular graph: node `i` links to `i ± 1, …, i ± ⌊degree/2⌋`
    /// (mod n), plus the antipode `i + n/2` when `degree` is odd.
    pub fn circulant_regular(n_agents: usize, degree: usize) -> Result<Self> {
        if degree >= n_agents.max(1) || (n_agents * degree) % 2 == 1 {
            return Err(Error::Config(format!(
                "no {degree}-regular graph exists on {n_agents} nodes"
            )));
        }
        let mut edges = Vec::new();
        for i in 0..n_agents {
            for off in 1..=degree / 2 {
                edges.push((i, (i + off) % n_agents));
            }
            if degree % 2 == 1 {
                edges.push((i, (i + n_agents / 2) % n_agents));
            }
        }
        Self::new(n_agents, edges)
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    /// Degree excluding the node itself.
    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    /// The agent followed by its neighbors in ascending order.
    pub fn closed_neighborhood(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(i).chain(self.adjacency[i].iter().copied())
    }

    pub fn without_edges(&self, removed: impl Fn(usize, usize) -> bool) -> Self {
        let kept = self.edges.iter().copied().filter(|&(a, b)| !removed(a, b));
        Self::new(self.n_agents, kept).expect("subgraph of a valid graph")
    }
}

/// Communication topology over time.
#[derive(Debug, Clone, PartialEq)]
pub enum TopologySchedule {
    /// Explicit graph per step.
    Scripted {
        n_agents: usize,
        steps: BTreeMap<usize, GraphSnapshot>,
    },
    /// A fixed regular graph whose edges each fail independently with
    /// probability `p_fail` at every step.
    RegularWithFailures {
        n_agents: usize,
        degree: usize,
        p_fail: f64,
        seed: u64,
    },
}

impl TopologySchedule {
    pub fn regular_with_failures(
        n_agents: usize,
        degree: usize,
        p_fail: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_fail) {
            return Err(Error::Config(format!(
                "link failure probability {p_fail} outside [0, 1]"
            )));
        }
        GraphSnapshot::circulant_regular(n_agents, degree)?;
        Ok(TopologySchedule::RegularWithFailures {
            n_agents,
            degree,
            p_fail,
            seed,
        })
    }

    /// The same graph at every step `1..=horizon`.
    pub fn fixed(graph: GraphSnapshot, horizon: usize) -> Self {
        TopologySchedule::Scripted {
            n_agents: graph.n_agents(),
            steps: (1..=horizon).map(|k| (k, graph.clone())).collect(),
        }
    }

    pub fn n_agents(&self) -> usize {
        match self {
            TopologySchedule::Scripted { n_agents, .. }
            | TopologySchedule::RegularWithFailures { n_agents, .. } => *n_agents,
        }
    }

    /// Checks that steps `1..=horizon` are all covered.
    pub fn validate(&self, horizon: usize) -> Result<()> {
        if let TopologySchedule::Scripted { n_agents, steps } = self {
            for k in 1..=horizon {
                match steps.get(&k) {
                    None => {
                        return Err(Error::Config(format!("scripted topology missing step {k}")))
                    }
                    Some(g) if g.n_agents() != *n_agents => {
                        return Err(Error::Config(format!(
                            "scripted topology at step {k} has {} agents, expected {n_agents}",
                            g.n_agents()
                        )))
                    }
                    Some(_) => {}
                }
            }
        }
        Ok(())
    }

    /// Graph in force at time step `step`; reproducible for a given seed.
    pub fn snapshot_at(&self, step: usize) -> Result<GraphSnapshot> {
        match self {
            TopologySchedule::Scripted { steps, .. } => steps
                .get(&step)
                .cloned()
                .ok_or_else(|| Error::Config(format!("scripted topology missing step {step}"))),
            TopologySchedule::RegularWithFailures {
                n_agents,
                degree,
                p_fail,
                seed,
            } => {
                let base = GraphSnapshot::circulant_regular(*n_agents, *degree)?;
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_stream(step as u64);
                let failed: BTreeSet<(usize, usize)> = base
                    .edges()
                    .iter()
                    .copied()
                    .filter(|_| rng.random::<f64>() < *p_fail)
                    .collect();
                Ok(base.without_edges(|a, b| failed.contains(&(a, b))))
            }
        }
    }
}

/// Connected components, each sorted, ordered by smallest member.
pub fn components(g: &GraphSnapshot) -> Vec<Vec<usize>> {
    let mut seen = vec![false; g.n_agents()];
    let mut out = Vec::new();
    for start in 0..g.n_agents() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &u in g.neighbors(v) {
                if !seen[u] {
                    seen[u] = true;
                    comp.push(u);
                    queue.push_back(u);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

pub fn is_connected(g: &GraphSnapshot) -> bool {
    components(g).len() <= 1
}

/// Agent IDs seen so far by one agent; always holds the owner's ID.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdSet {
    owner: usize,
    seen: BTreeSet<usize>,
}

impl IdSet {
    pub fn singleton(owner: usize) -> Self {
        Self {
            owner,
            seen: BTreeSet::from([owner]),
        }
    }

    pub fn owner(&self) -> usize {
        self.owner
    }

    pub fn seen(&self) -> &BTreeSet<usize> {
        &self.seen
    }

    /// Size of the connected group as far as this agent knows.
    pub fn n_cg(&self) -> usize {
        self.seen.len()
    }
}

/// One flooding round: each agent merges its neighbors' ID sets into its own.
pub fn flood_ids(id_sets: &[IdSet], g: &GraphSnapshot) -> Result<Vec<IdSet>> {
    if id_sets.len() != g.n_agents() {
        return Err(Error::dims("flood_ids", g.n_agents(), id_sets.len()));
    }
    Ok((0..id_sets.len())
        .map(|i| {
            let mut next = id_sets[i].clone();
            for &j in g.neighbors(i) {
                next.seen.extend(id_sets[j].seen.iter().copied());
            }
            next
        })
        .collect())
}
