//! Per-vertex machinery of the obvious directed acyclic graph: the
//! worst-truthful / best-deviant payoff bounds, the divergence graph
//! `G_i(T')`, and the minimal answer partition of an agent's types.
//!
//! A set `A_i` with no divergence-graph edge crossing into its complement
//! is exactly an "obvious" binary question at that vertex: every outcome the
//! agent can get by answering truthfully is at least as good as every
//! outcome reachable by lying, from the agent's own perspective on both
//! sides of the split.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::instance::ChoiceInstance;
use crate::union_find::UnionFind;
use crate::vertex::ProductVertex;

/// Worst-truthful and best-deviant payoffs for one agent at one vertex.
///
/// For each remaining type `a` of the agent, `worst_truthful(a)` is the
/// minimum over opponent profiles of the agent's payoff when reporting
/// truthfully, and `best_deviant(a, b)` the maximum payoff a true type `a`
/// can reach by reporting `b`. The worst side is computed once per type,
/// not per pair, which is what keeps the per-vertex cost at
/// `O(|T'_i|^2 * |T'_{-i}|)`.
pub struct PayoffBounds {
    agent: usize,
    members: Vec<u32>,
    worst: Vec<i64>,
    worst_arg: Vec<u32>,
    best: Vec<i64>,
    best_arg: Vec<u32>,
}

impl PayoffBounds {
    pub fn compute(instance: &ChoiceInstance, vertex: &ProductVertex, agent: usize) -> Self {
        let members = vertex.set(agent).to_vec();
        let m = members.len();
        let stride = instance.strides()[agent];

        let mut worst = vec![i64::MAX; m];
        let mut worst_arg = vec![0u32; m];
        let mut best = vec![i64::MIN; m * m];
        let mut best_arg = vec![0u32; m * m];

        for (r_pos, &reported) in members.iter().enumerate() {
            for (base, packed) in vertex.opponents(instance, agent) {
                let outcome = instance.outcome_at(base + reported as usize * stride);
                let truthful = instance.utility(agent, reported, outcome);
                if truthful < worst[r_pos] {
                    worst[r_pos] = truthful;
                    worst_arg[r_pos] = packed;
                }
                for (a_pos, &actual) in members.iter().enumerate() {
                    if a_pos == r_pos {
                        continue;
                    }
                    let deviant = instance.utility(agent, actual, outcome);
                    let slot = a_pos * m + r_pos;
                    if deviant > best[slot] {
                        best[slot] = deviant;
                        best_arg[slot] = packed;
                    }
                }
            }
        }

        PayoffBounds {
            agent,
            members,
            worst,
            worst_arg,
            best,
            best_arg,
        }
    }

    pub fn agent(&self) -> usize {
        self.agent
    }

    /// The agent's remaining types at the vertex, ascending.
    pub fn members(&self) -> &[u32] {
        &self.members
    }

    /// `min over T'_{-i} of u_i(a, c(a, .))`, by member position.
    pub fn worst_truthful(&self, a_pos: usize) -> i64 {
        self.worst[a_pos]
    }

    /// Packed opponent index attaining the worst truthful payoff.
    pub fn worst_arg(&self, a_pos: usize) -> u32 {
        self.worst_arg[a_pos]
    }

    /// `max over T'_{-i} of u_i(a, c(b, .))`, by member positions.
    pub fn best_deviant(&self, a_pos: usize, b_pos: usize) -> i64 {
        self.best[a_pos * self.members.len() + b_pos]
    }

    /// Packed opponent index attaining the best deviant payoff.
    pub fn best_arg(&self, a_pos: usize, b_pos: usize) -> u32 {
        self.best_arg[a_pos * self.members.len() + b_pos]
    }

    /// The divergence-graph edge test for a pair of member positions:
    /// some side of the split strictly prefers some lie.
    pub fn diverges(&self, a_pos: usize, b_pos: usize) -> bool {
        self.worst_truthful(a_pos) < self.best_deviant(a_pos, b_pos)
            || self.worst_truthful(b_pos) < self.best_deviant(b_pos, a_pos)
    }
}

/// The undirected divergence graph `G_i(T')` over agent `i`'s remaining
/// types. Its connected components are the finest obvious split at the
/// vertex; any obvious question must keep each edge's endpoints together.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DivergenceGraph {
    pub agent: usize,
    pub vertex: ProductVertex,
    members: Vec<u32>,
    edges: Vec<(u32, u32)>,
}

impl DivergenceGraph {
    pub fn members(&self) -> &[u32] {
        &self.members
    }

    /// Edges as type-index pairs `(a, b)` with `a < b`, lexicographic.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn has_edge(&self, a: u32, b: u32) -> bool {
        let key = if a < b { (a, b) } else { (b, a) };
        self.edges.binary_search(&key).is_ok()
    }
}

/// Builds `G_i(T')` for one agent at one vertex.
pub fn divergence_graph(
    instance: &ChoiceInstance,
    vertex: &ProductVertex,
    agent: usize,
) -> Result<DivergenceGraph> {
    vertex.check_against(instance)?;
    let bounds = PayoffBounds::compute(instance, vertex, agent);
    Ok(graph_from_bounds(vertex, &bounds))
}

fn graph_from_bounds(vertex: &ProductVertex, bounds: &PayoffBounds) -> DivergenceGraph {
    let members = bounds.members().to_vec();
    let mut edges = Vec::new();
    for a_pos in 0..members.len() {
        for b_pos in a_pos + 1..members.len() {
            if bounds.diverges(a_pos, b_pos) {
                edges.push((members[a_pos], members[b_pos]));
            }
        }
    }
    DivergenceGraph {
        agent: bounds.agent(),
        vertex: vertex.clone(),
        members,
        edges,
    }
}

/// The minimal partition of an agent's types at a vertex: the connected
/// components of the divergence graph, absent when the agent cannot be
/// asked anything obvious here.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerPartition {
    pub agent: usize,
    /// Pairwise-disjoint nonempty cells covering `T'_i`, ordered by their
    /// smallest type index; always at least two cells.
    pub cells: Vec<Vec<u32>>,
}

/// Computes the minimal answer partition for `agent` at `vertex`, or `None`
/// when the agent's remaining type set is a singleton or the divergence
/// graph is connected (no obvious question exists).
pub fn answer_partition(
    instance: &ChoiceInstance,
    vertex: &ProductVertex,
    agent: usize,
) -> Result<Option<AnswerPartition>> {
    vertex.check_against(instance)?;
    Ok(partition_cells(instance, vertex, agent).map(|cells| AnswerPartition { agent, cells }))
}

/// Unvalidated partition computation used on internally-constructed
/// vertices (the recursion of the decision procedure).
pub(crate) fn partition_cells(
    instance: &ChoiceInstance,
    vertex: &ProductVertex,
    agent: usize,
) -> Option<Vec<Vec<u32>>> {
    let members = vertex.set(agent);
    let m = members.len();
    if m <= 1 {
        return None;
    }
    let bounds = PayoffBounds::compute(instance, vertex, agent);
    let mut uf = UnionFind::new(m);
    for a_pos in 0..m {
        for b_pos in a_pos + 1..m {
            if bounds.diverges(a_pos, b_pos) {
                uf.union(a_pos, b_pos);
            }
        }
    }
    if uf.num_components() == 1 {
        return None;
    }
    Some(cells_of(&mut uf, members))
}

/// Groups members into connected components; cell order follows the
/// smallest contained type index, members ascending within each cell.
fn cells_of(uf: &mut UnionFind, members: &[u32]) -> Vec<Vec<u32>> {
    let mut root_to_cell = vec![usize::MAX; members.len()];
    let mut cells: Vec<Vec<u32>> = Vec::new();
    for (pos, &t) in members.iter().enumerate() {
        let root = uf.find(pos);
        if root_to_cell[root] == usize::MAX {
            root_to_cell[root] = cells.len();
            cells.push(Vec::new());
        }
        cells[root_to_cell[root]].push(t);
    }
    cells
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_dictatorship, gen_sat, BooleanFormula};

    fn sat_x0() -> ChoiceInstance {
        gen_sat(&BooleanFormula::parse("x0", None).unwrap()).unwrap()
    }

    fn constant_rule() -> ChoiceInstance {
        ChoiceInstance::new(
            vec![2, 2],
            2,
            vec![0; 4],
            vec![vec![vec![5, -1], vec![2, 2]]; 2],
        )
        .unwrap()
    }

    #[test]
    fn sat_root_graphs() {
        let inst = sat_x0();
        let root = ProductVertex::root(&inst);
        // the special agent (last) diverges: truthful worst 0, deviant best 1
        let special = divergence_graph(&inst, &root, 1).unwrap();
        assert_eq!(special.edges(), &[(0, 1)]);
        // the variable agent has constant utility, hence no edges
        let variable = divergence_graph(&inst, &root, 0).unwrap();
        assert!(variable.edges().is_empty());
    }

    #[test]
    fn constant_rule_has_no_edges() {
        let inst = constant_rule();
        let root = ProductVertex::root(&inst);
        for agent in 0..2 {
            let g = divergence_graph(&inst, &root, agent).unwrap();
            assert!(g.edges().is_empty());
        }
    }

    #[test]
    fn singleton_side_has_no_pairs() {
        let inst = sat_x0();
        let v = ProductVertex::new(vec![vec![1], vec![0, 1]]).unwrap();
        let g = divergence_graph(&inst, &v, 0).unwrap();
        assert_eq!(g.members(), &[1]);
        assert!(g.edges().is_empty());
    }

    #[test]
    fn edgeless_graph_partitions_into_singletons() {
        let inst = constant_rule();
        let root = ProductVertex::root(&inst);
        let p = answer_partition(&inst, &root, 0).unwrap().unwrap();
        assert_eq!(p.cells, vec![vec![0], vec![1]]);
    }

    #[test]
    fn connected_graph_has_no_partition() {
        let inst = sat_x0();
        // on the t0 = 1 slice the special agent's two types diverge
        let v = ProductVertex::new(vec![vec![1], vec![0, 1]]).unwrap();
        assert!(answer_partition(&inst, &v, 1).unwrap().is_none());
        // ... and a singleton coordinate never has a partition
        assert!(answer_partition(&inst, &v, 0).unwrap().is_none());
    }

    #[test]
    fn dictatorship_root_partitions_dictator() {
        let inst = gen_dictatorship(&[2, 2], &[0, 1]).unwrap();
        let root = ProductVertex::root(&inst);
        let p = answer_partition(&inst, &root, 0).unwrap().unwrap();
        assert_eq!(p.cells, vec![vec![0], vec![1]]);
    }

    #[test]
    fn edgeless_three_type_graph_partitions_into_three_singletons() {
        let inst = gen_dictatorship(&[3, 2], &[0, 1, 2]).unwrap();
        let root = ProductVertex::root(&inst);
        assert!(divergence_graph(&inst, &root, 0)
            .unwrap()
            .edges()
            .is_empty());
        let p = answer_partition(&inst, &root, 0).unwrap().unwrap();
        assert_eq!(p.cells, vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn bounds_track_argument_profiles() {
        let inst = sat_x0();
        let root = ProductVertex::root(&inst);
        let bounds = PayoffBounds::compute(&inst, &root, 1);
        // type 0 of the special agent: worst truthful payoff is 0
        assert_eq!(bounds.worst_truthful(0), 0);
        // deviating to type 1 reaches outcome 1 when the variable agent is 1
        assert_eq!(bounds.best_deviant(0, 1), 1);
        let packed = bounds.best_arg(0, 1);
        assert_eq!(root.decode_opponent(1, packed), vec![1]);
    }
}
