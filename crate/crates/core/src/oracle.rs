//! Exponential-time ground truth: materialize the obvious directed acyclic
//! graph vertex by vertex and decide nice connectedness by graph search.
//! Guarded to desk scale; exists to validate the polynomial path, not to
//! compete with it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::ChoiceInstance;
use crate::vertex::ProductVertex;

/// Default cap on the number of O-dag vertices the oracle will enumerate.
pub const DEFAULT_MAX_VERTICES: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    /// Every singleton vertex is reachable from the root.
    Reachability,
    /// No non-singleton vertex is childless.
    Childless,
}

impl std::str::FromStr for OracleMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "reach" | "reachability" => Ok(OracleMode::Reachability),
            "childless" => Ok(OracleMode::Childless),
            other => Err(format!("unknown mode `{other}` (expected reach|childless)")),
        }
    }
}

pub struct Oracle<'a> {
    instance: &'a ChoiceInstance,
    max_vertices: u64,
    cross_check: bool,
}

impl<'a> Oracle<'a> {
    pub fn new(instance: &'a ChoiceInstance) -> Self {
        Oracle {
            instance,
            max_vertices: DEFAULT_MAX_VERTICES,
            cross_check: false,
        }
    }

    pub fn with_max_vertices(mut self, max_vertices: u64) -> Self {
        self.max_vertices = max_vertices;
        self
    }

    /// Re-derives every edge test with the literal quantified definition
    /// and the per-vertex candidate sets with the divergence graph,
    /// panicking on any disagreement. Diagnostic mode for tests.
    pub fn with_cross_check(mut self, on: bool) -> Self {
        self.cross_check = on;
        self
    }

    /// Worst truthful / best deviant payoffs for one ordered type pair,
    /// quantified over the vertex's opponent profiles.
    fn pair_has_divergence(&self, vertex: &ProductVertex, agent: usize, a: u32, b: u32) -> bool {
        let stride = self.instance.strides()[agent];
        let mut worst_a = i64::MAX;
        let mut best_a_via_b = i64::MIN;
        let mut worst_b = i64::MAX;
        let mut best_b_via_a = i64::MIN;
        for (base, _) in vertex.opponents(self.instance, agent) {
            let outcome_a = self.instance.outcome_at(base + a as usize * stride);
            let outcome_b = self.instance.outcome_at(base + b as usize * stride);
            worst_a = worst_a.min(self.instance.utility(agent, a, outcome_a));
            best_a_via_b = best_a_via_b.max(self.instance.utility(agent, a, outcome_b));
            worst_b = worst_b.min(self.instance.utility(agent, b, outcome_b));
            best_b_via_a = best_b_via_a.max(self.instance.utility(agent, b, outcome_a));
        }
        worst_a < best_a_via_b || worst_b < best_b_via_a
    }

    /// Does the O-dag contain the edge `from => to`? True iff `to` shrinks
    /// exactly one agent's set to a proper nonempty subset and the two-sided
    /// indifference-or-better condition holds across the split.
    pub fn edge_exists(&self, from: &ProductVertex, to: &ProductVertex) -> Result<bool> {
        from.check_against(self.instance)?;
        to.check_against(self.instance)?;
        let fast = self.edge_exists_fast(from, to);
        if self.cross_check {
            let naive = self.edge_exists_naive(from, to)?;
            assert_eq!(
                fast, naive,
                "oracle cross-check mismatch on edge {from:?} => {to:?}"
            );
        }
        Ok(fast)
    }

    fn edge_exists_fast(&self, from: &ProductVertex, to: &ProductVertex) -> bool {
        let Some(agent) = single_shrunk_agent(from, to) else {
            return false;
        };
        let kept = to.set(agent);
        let dropped: Vec<u32> = from
            .set(agent)
            .iter()
            .copied()
            .filter(|t| kept.binary_search(t).is_err())
            .collect();
        for &a in kept {
            for &b in &dropped {
                if self.pair_has_divergence(from, agent, a, b) {
                    return false;
                }
            }
        }
        true
    }

    /// The literal edge definition: both weak-preference inequalities for
    /// every kept type, dropped type, and ordered pair of opponent profiles.
    pub fn edge_exists_naive(&self, from: &ProductVertex, to: &ProductVertex) -> Result<bool> {
        from.check_against(self.instance)?;
        to.check_against(self.instance)?;
        let Some(agent) = single_shrunk_agent(from, to) else {
            return Ok(false);
        };
        let stride = self.instance.strides()[agent];
        let kept = to.set(agent);
        let dropped: Vec<u32> = from
            .set(agent)
            .iter()
            .copied()
            .filter(|t| kept.binary_search(t).is_err())
            .collect();
        for &a in kept {
            for &b in &dropped {
                for (base_a, _) in from.opponents(self.instance, agent) {
                    let outcome_a = self.instance.outcome_at(base_a + a as usize * stride);
                    for (base_b, _) in from.opponents(self.instance, agent) {
                        let outcome_b = self.instance.outcome_at(base_b + b as usize * stride);
                        let a_keeps_truth = self.instance.utility(agent, a, outcome_a)
                            >= self.instance.utility(agent, a, outcome_b);
                        let b_keeps_truth = self.instance.utility(agent, b, outcome_b)
                            >= self.instance.utility(agent, b, outcome_a);
                        if !a_keeps_truth || !b_keeps_truth {
                            return Ok(false);
                        }
                    }
                }
            }
        }
        Ok(true)
    }

    /// All O-dag children of a vertex, ordered by agent then by subset
    /// enumeration order.
    pub fn children(&self, vertex: &ProductVertex) -> Result<Vec<ProductVertex>> {
        vertex.check_against(self.instance)?;
        let enumeration: u64 = vertex.sets().iter().map(|s| 1u64 << s.len().min(63)).sum();
        if vertex.sets().iter().any(|s| s.len() > 25) || enumeration > self.max_vertices {
            return Err(Error::GuardExceeded(format!(
                "subset enumeration of {enumeration} candidates exceeds the limit of {}",
                self.max_vertices
            )));
        }
        let mut out = Vec::new();
        for agent in 0..vertex.num_agents() {
            let members = vertex.set(agent);
            let k = members.len();
            if k < 2 {
                continue;
            }
            let compatible = self.pair_matrix(vertex, agent);
            for submask in 1..((1u32 << k) - 1) {
                if split_is_obvious(&compatible, k, submask) {
                    let cell: Vec<u32> = (0..k)
                        .filter(|&p| submask >> p & 1 == 1)
                        .map(|p| members[p])
                        .collect();
                    out.push(vertex.with_set(agent, cell));
                }
            }
            if self.cross_check {
                self.cross_check_against_divergence_graph(vertex, agent, &compatible);
            }
        }
        Ok(out)
    }

    /// `compatible[a][b]` = the pair can be separated (no divergence).
    fn pair_matrix(&self, vertex: &ProductVertex, agent: usize) -> Vec<bool> {
        let members = vertex.set(agent);
        let k = members.len();
        let mut compatible = vec![true; k * k];
        for a_pos in 0..k {
            for b_pos in a_pos + 1..k {
                let ok = !self.pair_has_divergence(vertex, agent, members[a_pos], members[b_pos]);
                compatible[a_pos * k + b_pos] = ok;
                compatible[b_pos * k + a_pos] = ok;
            }
        }
        compatible
    }

    fn cross_check_against_divergence_graph(
        &self,
        vertex: &ProductVertex,
        agent: usize,
        compatible: &[bool],
    ) {
        let graph = crate::odag::divergence_graph(self.instance, vertex, agent)
            .expect("vertex already validated");
        let members = vertex.set(agent);
        let k = members.len();
        for a_pos in 0..k {
            for b_pos in a_pos + 1..k {
                assert_eq!(
                    !compatible[a_pos * k + b_pos],
                    graph.has_edge(members[a_pos], members[b_pos]),
                    "oracle pair test disagrees with the divergence graph at {vertex:?}, agent {agent}"
                );
            }
        }
    }

    /// Materializes the whole O-dag. Errors when the vertex count exceeds
    /// the guard; the oracle never truncates silently.
    pub fn build(&self) -> Result<ExplicitOdag> {
        let radices: Vec<u64> = self
            .instance
            .type_sizes()
            .iter()
            .map(|&s| if s > 25 { u64::MAX } else { (1u64 << s) - 1 })
            .collect();
        let mut total: u64 = 1;
        for &r in &radices {
            total = total.saturating_mul(r);
        }
        if total > self.max_vertices {
            return Err(Error::GuardExceeded(format!(
                "O-dag has {total} vertices, the limit is {}",
                self.max_vertices
            )));
        }
        let total = total as usize;

        let mut vertices = Vec::with_capacity(total);
        for id in 0..total {
            vertices.push(self.decode_vertex(&radices, id));
        }
        let mut children: Vec<Vec<u32>> = Vec::with_capacity(total);
        for vertex in &vertices {
            let kids = self
                .children(vertex)?
                .into_iter()
                .map(|child| self.encode_vertex(&radices, &child) as u32)
                .collect();
            children.push(kids);
        }
        Ok(ExplicitOdag {
            radices,
            vertices,
            children,
        })
    }

    fn decode_vertex(&self, radices: &[u64], mut id: usize) -> ProductVertex {
        let n = radices.len();
        let mut sets = vec![Vec::new(); n];
        for i in (0..n).rev() {
            let digit = id as u64 % radices[i];
            id /= radices[i] as usize;
            let mask = digit + 1;
            sets[i] = (0..self.instance.type_size(i))
                .filter(|&t| mask >> t & 1 == 1)
                .collect();
        }
        ProductVertex::from_sorted_unchecked(sets)
    }

    fn encode_vertex(&self, radices: &[u64], vertex: &ProductVertex) -> usize {
        let mut id = 0usize;
        for (i, set) in vertex.sets().iter().enumerate() {
            let mask: u64 = set.iter().map(|&t| 1u64 << t).sum();
            id = id * radices[i] as usize + (mask - 1) as usize;
        }
        id
    }

    /// Ground-truth decision by explicit graph search. The two modes always
    /// agree; with finite types, nice connectedness is exactly "no
    /// childless non-singleton vertex".
    pub fn decide_explicit(&self, mode: OracleMode) -> Result<bool> {
        let dag = self.build()?;
        Ok(match mode {
            OracleMode::Reachability => dag.nicely_connected_by_reachability(),
            OracleMode::Childless => dag.childless_non_singleton().is_none(),
        })
    }
}

fn single_shrunk_agent(from: &ProductVertex, to: &ProductVertex) -> Option<usize> {
    if from.num_agents() != to.num_agents() {
        return None;
    }
    let mut shrunk = None;
    for i in 0..from.num_agents() {
        if to.set(i) == from.set(i) {
            continue;
        }
        let proper_nonempty_subset = !to.set(i).is_empty()
            && to.set(i).len() < from.set(i).len()
            && to
                .set(i)
                .iter()
                .all(|t| from.set(i).binary_search(t).is_ok());
        if !proper_nonempty_subset || shrunk.is_some() {
            return None;
        }
        shrunk = Some(i);
    }
    shrunk
}

fn split_is_obvious(compatible: &[bool], k: usize, submask: u32) -> bool {
    for a_pos in 0..k {
        if submask >> a_pos & 1 == 0 {
            continue;
        }
        for b_pos in 0..k {
            if submask >> b_pos & 1 == 1 {
                continue;
            }
            if !compatible[a_pos * k + b_pos] {
                return false;
            }
        }
    }
    true
}

/// The materialized O-dag of one instance.
pub struct ExplicitOdag {
    radices: Vec<u64>,
    vertices: Vec<ProductVertex>,
    children: Vec<Vec<u32>>,
}

impl ExplicitOdag {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[ProductVertex] {
        &self.vertices
    }

    pub fn children_of(&self, id: usize) -> &[u32] {
        &self.children[id]
    }

    pub fn vertex_id(&self, vertex: &ProductVertex) -> usize {
        let mut id = 0usize;
        for (i, set) in vertex.sets().iter().enumerate() {
            let mask: u64 = set.iter().map(|&t| 1u64 << t).sum();
            id = id * self.radices[i] as usize + (mask - 1) as usize;
        }
        id
    }

    pub fn root_id(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn nicely_connected_by_reachability(&self) -> bool {
        let reached = self.reachable_from(self.root_id());
        self.vertices
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_singleton())
            .all(|(id, _)| reached[id])
    }

    /// First childless non-singleton vertex in id order, if any.
    pub fn childless_non_singleton(&self) -> Option<&ProductVertex> {
        self.vertices
            .iter()
            .enumerate()
            .find(|(id, v)| !v.is_singleton() && self.children[*id].is_empty())
            .map(|(_, v)| v)
    }

    pub fn has_path(&self, from: usize, to: usize) -> bool {
        if from == to {
            return true;
        }
        self.reachable_from(from)[to]
    }

    fn reachable_from(&self, start: usize) -> Vec<bool> {
        let mut reached = vec![false; self.vertices.len()];
        let mut queue = std::collections::VecDeque::new();
        reached[start] = true;
        queue.push_back(start);
        while let Some(id) = queue.pop_front() {
            for &kid in &self.children[id] {
                if !reached[kid as usize] {
                    reached[kid as usize] = true;
                    queue.push_back(kid as usize);
                }
            }
        }
        reached
    }

    pub fn dump(&self) -> OdagDump {
        let mut edges = Vec::new();
        for (id, kids) in self.children.iter().enumerate() {
            for &kid in kids {
                edges.push((id as u32, kid));
            }
        }
        OdagDump {
            vertices: self.vertices.clone(),
            edges,
        }
    }
}

/// Serializable vertex/edge listing of an explicit O-dag. Edges are pairs
/// of indices into `vertices`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdagDump {
    pub vertices: Vec<ProductVertex>,
    pub edges: Vec<(u32, u32)>,
}

impl OdagDump {
    pub fn load(serialized: &[u8]) -> Result<Self> {
        Ok(serde_json::from_slice(serialized)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dump serialization cannot fail")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_dictatorship, gen_random, gen_sat, BooleanFormula};

    fn constant_rule() -> ChoiceInstance {
        ChoiceInstance::new(vec![2, 2], 1, vec![0; 4], vec![vec![vec![0]; 2]; 2]).unwrap()
    }

    #[test]
    fn constant_rule_root_has_four_children() {
        let inst = constant_rule();
        let oracle = Oracle::new(&inst).with_cross_check(true);
        let kids = oracle.children(&ProductVertex::root(&inst)).unwrap();
        assert_eq!(kids.len(), 4);
        for mode in [OracleMode::Reachability, OracleMode::Childless] {
            assert!(oracle.decide_explicit(mode).unwrap());
        }
    }

    #[test]
    fn edge_requires_a_proper_shrink() {
        let inst = constant_rule();
        let oracle = Oracle::new(&inst);
        let root = ProductVertex::root(&inst);
        assert!(!oracle.edge_exists(&root, &root).unwrap());
        let child = ProductVertex::new(vec![vec![0], vec![0, 1]]).unwrap();
        assert!(oracle.edge_exists(&root, &child).unwrap());
        // shrinking two agents at once is never one edge
        let both = ProductVertex::new(vec![vec![0], vec![0]]).unwrap();
        assert!(!oracle.edge_exists(&root, &both).unwrap());
    }

    #[test]
    fn dictatorship_root_edge() {
        let inst = gen_dictatorship(&[2, 2], &[0, 1]).unwrap();
        let oracle = Oracle::new(&inst).with_cross_check(true);
        let root = ProductVertex::root(&inst);
        let to = ProductVertex::new(vec![vec![0], vec![0, 1]]).unwrap();
        assert!(oracle.edge_exists(&root, &to).unwrap());
    }

    #[test]
    fn satisfiable_reduction_has_a_childless_witness() {
        let inst = gen_sat(&BooleanFormula::parse("x0", None).unwrap()).unwrap();
        let oracle = Oracle::new(&inst).with_cross_check(true);
        assert!(!oracle.decide_explicit(OracleMode::Reachability).unwrap());
        assert!(!oracle.decide_explicit(OracleMode::Childless).unwrap());
        let dag = oracle.build().unwrap();
        assert_eq!(dag.num_vertices(), 9);
        let witness = ProductVertex::new(vec![vec![1], vec![0, 1]]).unwrap();
        assert!(oracle.children(&witness).unwrap().is_empty());
        assert_eq!(
            dag.childless_non_singleton().unwrap().sets(),
            witness.sets()
        );
    }

    #[test]
    fn singleton_vertex_has_no_children() {
        let inst = constant_rule();
        let oracle = Oracle::new(&inst);
        let v = ProductVertex::new(vec![vec![1], vec![0]]).unwrap();
        assert!(oracle.children(&v).unwrap().is_empty());
    }

    #[test]
    fn on_constant_rules_every_proper_shrink_is_an_edge() {
        let inst = constant_rule();
        let dag = Oracle::new(&inst).build().unwrap();
        for (id, vertex) in dag.vertices().iter().enumerate() {
            let expected: usize = vertex.sets().iter().map(|s| (1usize << s.len()) - 2).sum();
            assert_eq!(dag.children_of(id).len(), expected);
        }
    }

    #[test]
    fn guard_is_a_hard_error() {
        let inst = constant_rule();
        let oracle = Oracle::new(&inst).with_max_vertices(4);
        assert!(matches!(
            oracle.decide_explicit(OracleMode::Reachability),
            Err(Error::GuardExceeded(_))
        ));
        assert!(matches!(
            oracle.children(&ProductVertex::root(&inst)),
            Err(Error::GuardExceeded(_))
        ));
    }

    #[test]
    fn fast_edge_test_matches_the_literal_definition() {
        for seed in 0..40 {
            let inst = gen_random(seed, &[3, 2], 3, 0, 2).unwrap();
            // cross_check re-runs the naive test inside every edge query
            let oracle = Oracle::new(&inst).with_cross_check(true);
            oracle.build().unwrap();
        }
    }

    #[test]
    fn dump_round_trips() {
        let inst = constant_rule();
        let dump = Oracle::new(&inst).build().unwrap().dump();
        let back = OdagDump::load(dump.to_json().as_bytes()).unwrap();
        assert_eq!(dump, back);
    }
}
