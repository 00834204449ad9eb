//! The greedy decision procedure: walk the obvious directed acyclic graph
//! from the root, always splitting on an agent's minimal answer partition,
//! and report either the recursion tree (a mechanism) or a stuck vertex.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::instance::ChoiceInstance;
use crate::mechanism::{InternalNode, LeafNode, MechanismEdge, MechanismNode, MechanismTree};
use crate::odag::partition_cells;
use crate::vertex::ProductVertex;

/// How the acting agent is chosen at each vertex. The verdict is the same
/// under every policy; only the tree shape changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SelectionPolicy {
    /// Smallest agent index with a nonempty answer partition.
    #[default]
    LowestIndex,
    /// Cycle through agents in index order, skipping agents with nothing
    /// obvious to report.
    RoundRobin,
}

impl std::str::FromStr for SelectionPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lowest" | "lowest_index" => Ok(SelectionPolicy::LowestIndex),
            "roundrobin" | "round_robin" => Ok(SelectionPolicy::RoundRobin),
            other => Err(format!(
                "unknown policy `{other}` (expected lowest|roundrobin)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DecideOptions {
    pub policy: SelectionPolicy,
    /// Emit a leaf as soon as the choice rule is constant on the current
    /// vertex, instead of splitting all the way down to singletons.
    pub stop_when_constant: bool,
}

/// Outcome of the decision procedure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionResult {
    pub implementable: bool,
    pub policy: SelectionPolicy,
    /// On success, the recursion tree as a mechanism.
    pub mechanism: Option<MechanismTree>,
    /// On failure, a non-singleton vertex where every agent's answer
    /// partition is absent (a childless witness).
    pub failing_vertex: Option<ProductVertex>,
    /// Vertices the recursion visited.
    pub vertices_visited: u64,
    /// Deepest recursion level reached; never exceeds the sum of the
    /// type-set sizes.
    pub max_depth: usize,
    /// Per-depth sums of the vertex size measure
    /// `(sum of |T'_i|) * (product of |T'_i|)`, root at index 0.
    /// Non-increasing in depth, which is what caps total work at
    /// table size times the sum of type-set sizes.
    pub depth_costs: Vec<u128>,
}

/// Decides OSP-implementability and, on success, builds the mechanism.
pub fn decide(instance: &ChoiceInstance, policy: SelectionPolicy) -> DecisionResult {
    decide_with(
        instance,
        DecideOptions {
            policy,
            ..DecideOptions::default()
        },
    )
}

pub fn decide_with(instance: &ChoiceInstance, options: DecideOptions) -> DecisionResult {
    run(instance, options, true)
}

/// The bare verdict, without materializing the tree.
pub fn decide_only(instance: &ChoiceInstance, policy: SelectionPolicy) -> bool {
    run(
        instance,
        DecideOptions {
            policy,
            ..DecideOptions::default()
        },
        false,
    )
    .implementable
}

struct Frame {
    vertex: ProductVertex,
    agent: usize,
    cells: Vec<Vec<u32>>,
    next_cell: usize,
    children: Vec<MechanismNode>,
    child_start: usize,
}

enum Step {
    Visit(ProductVertex, usize),
    Ascend,
}

fn run(instance: &ChoiceInstance, options: DecideOptions, build_tree: bool) -> DecisionResult {
    let mut stack: Vec<Frame> = Vec::new();
    let mut visited = 0u64;
    let mut max_depth = 0usize;
    let mut depth_costs: Vec<u128> = Vec::new();
    let mut subtree: Option<MechanismNode> = None;
    let mut step = Step::Visit(ProductVertex::root(instance), 0);

    loop {
        match step {
            Step::Visit(vertex, start_agent) => {
                let depth = stack.len() + 1;
                visited += 1;
                max_depth = max_depth.max(depth);
                if depth_costs.len() < depth {
                    depth_costs.push(0);
                }
                depth_costs[depth - 1] +=
                    u128::from(vertex.sum_sizes()) * u128::from(vertex.product_size());

                if let Some(outcome) = leaf_outcome(instance, &vertex, options) {
                    if build_tree {
                        subtree = Some(MechanismNode::Leaf(LeafNode {
                            sets: vertex,
                            outcome,
                        }));
                    }
                    step = Step::Ascend;
                    continue;
                }

                match choose_agent(instance, &vertex, options.policy, start_agent) {
                    None => {
                        return DecisionResult {
                            implementable: false,
                            policy: options.policy,
                            mechanism: None,
                            failing_vertex: Some(vertex),
                            vertices_visited: visited,
                            max_depth,
                            depth_costs,
                        };
                    }
                    Some((agent, cells)) => {
                        let child_start = (agent + 1) % instance.num_agents();
                        let first = vertex.with_set(agent, cells[0].clone());
                        stack.push(Frame {
                            vertex,
                            agent,
                            cells,
                            next_cell: 1,
                            children: Vec::new(),
                            child_start,
                        });
                        step = Step::Visit(first, child_start);
                    }
                }
            }
            Step::Ascend => {
                let Some(frame) = stack.last_mut() else {
                    return DecisionResult {
                        implementable: true,
                        policy: options.policy,
                        mechanism: subtree.map(|root| MechanismTree { root }),
                        failing_vertex: None,
                        vertices_visited: visited,
                        max_depth,
                        depth_costs,
                    };
                };
                if build_tree {
                    frame
                        .children
                        .push(subtree.take().expect("child subtree built"));
                }
                if frame.next_cell < frame.cells.len() {
                    let cell = frame.cells[frame.next_cell].clone();
                    frame.next_cell += 1;
                    let child = frame.vertex.with_set(frame.agent, cell);
                    let start = frame.child_start;
                    step = Step::Visit(child, start);
                } else {
                    let frame = stack.pop().expect("frame present");
                    if build_tree {
                        subtree = Some(assemble(frame));
                    }
                    step = Step::Ascend;
                }
            }
        }
    }
}

fn leaf_outcome(
    instance: &ChoiceInstance,
    vertex: &ProductVertex,
    options: DecideOptions,
) -> Option<u32> {
    if options.stop_when_constant {
        vertex.constant_outcome(instance)
    } else {
        vertex
            .singleton_profile()
            .map(|p| instance.outcome_at(instance.profile_index(&p).expect("profile in range")))
    }
}

fn choose_agent(
    instance: &ChoiceInstance,
    vertex: &ProductVertex,
    policy: SelectionPolicy,
    start_agent: usize,
) -> Option<(usize, Vec<Vec<u32>>)> {
    let n = instance.num_agents();
    for k in 0..n {
        let agent = match policy {
            SelectionPolicy::LowestIndex => k,
            SelectionPolicy::RoundRobin => (start_agent + k) % n,
        };
        if let Some(cells) = partition_cells(instance, vertex, agent) {
            return Some((agent, cells));
        }
    }
    None
}

fn assemble(frame: Frame) -> MechanismNode {
    MechanismNode::Internal(InternalNode {
        player: frame.agent,
        sets: frame.vertex,
        edges: frame
            .cells
            .into_iter()
            .zip(frame.children)
            .map(|(cell, child)| MechanismEdge { cell, child })
            .collect(),
    })
}

/// Parallel variant: sibling cells of each split are decided on the rayon
/// thread pool. The verdict, tree, and failing vertex are bit-identical to
/// the sequential procedure; on a negative verdict the visit counters may
/// exceed the sequential ones because siblings of a failed branch still run.
pub fn decide_parallel(instance: &ChoiceInstance, options: DecideOptions) -> DecisionResult {
    match par_visit(instance, options, ProductVertex::root(instance), 0) {
        Ok((node, stats)) => DecisionResult {
            implementable: true,
            policy: options.policy,
            mechanism: Some(MechanismTree { root: node }),
            failing_vertex: None,
            vertices_visited: stats.visited,
            max_depth: stats.max_depth,
            depth_costs: stats.depth_costs,
        },
        Err((vertex, stats)) => DecisionResult {
            implementable: false,
            policy: options.policy,
            mechanism: None,
            failing_vertex: Some(vertex),
            vertices_visited: stats.visited,
            max_depth: stats.max_depth,
            depth_costs: stats.depth_costs,
        },
    }
}

struct SubStats {
    visited: u64,
    max_depth: usize,
    depth_costs: Vec<u128>,
}

type ParOutcome = Result<(MechanismNode, SubStats), (ProductVertex, SubStats)>;

fn par_visit(
    instance: &ChoiceInstance,
    options: DecideOptions,
    vertex: ProductVertex,
    start_agent: usize,
) -> ParOutcome {
    let own_cost = u128::from(vertex.sum_sizes()) * u128::from(vertex.product_size());
    let mut stats = SubStats {
        visited: 1,
        max_depth: 1,
        depth_costs: vec![own_cost],
    };

    if let Some(outcome) = leaf_outcome(instance, &vertex, options) {
        return Ok((
            MechanismNode::Leaf(LeafNode {
                sets: vertex,
                outcome,
            }),
            stats,
        ));
    }

    let Some((agent, cells)) = choose_agent(instance, &vertex, options.policy, start_agent) else {
        return Err((vertex, stats));
    };
    let child_start = (agent + 1) % instance.num_agents();

    let outcomes: Vec<ParOutcome> = cells
        .par_iter()
        .map(|cell| {
            par_visit(
                instance,
                options,
                vertex.with_set(agent, cell.clone()),
                child_start,
            )
        })
        .collect();

    let mut children = Vec::with_capacity(outcomes.len());
    let mut failure: Option<ProductVertex> = None;
    for outcome in outcomes {
        let sub = match outcome {
            Ok((node, sub)) => {
                children.push(node);
                sub
            }
            Err((v, sub)) => {
                if failure.is_none() {
                    failure = Some(v);
                }
                sub
            }
        };
        stats.visited += sub.visited;
        stats.max_depth = stats.max_depth.max(sub.max_depth + 1);
        if stats.depth_costs.len() < sub.depth_costs.len() + 1 {
            stats.depth_costs.resize(sub.depth_costs.len() + 1, 0);
        }
        for (d, c) in sub.depth_costs.into_iter().enumerate() {
            stats.depth_costs[d + 1] += c;
        }
    }
    match failure {
        Some(v) => Err((v, stats)),
        None => Ok((
            MechanismNode::Internal(InternalNode {
                player: agent,
                sets: vertex,
                edges: cells
                    .into_iter()
                    .zip(children)
                    .map(|(cell, child)| MechanismEdge { cell, child })
                    .collect(),
            }),
            stats,
        )),
    }
}
