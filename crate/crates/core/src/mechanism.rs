//! Extensive-form mechanisms: a rooted tree of product vertices where one
//! agent moves per vertex, out-edges partition the mover's remaining types,
//! and each leaf commits to an outcome. Includes independent verifiers for
//! well-formedness and obvious strategy-proofness.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{ChoiceInstance, TypeProfile};
use crate::odag::PayoffBounds;
use crate::vertex::ProductVertex;

/// A mechanism tree. Serializes as its nested root vertex object.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MechanismTree {
    pub root: MechanismNode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MechanismNode {
    Internal(InternalNode),
    Leaf(LeafNode),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InternalNode {
    pub player: usize,
    pub sets: ProductVertex,
    pub edges: Vec<MechanismEdge>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismEdge {
    pub cell: Vec<u32>,
    pub child: MechanismNode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeafNode {
    pub sets: ProductVertex,
    pub outcome: u32,
}

impl MechanismNode {
    pub fn sets(&self) -> &ProductVertex {
        match self {
            MechanismNode::Internal(n) => &n.sets,
            MechanismNode::Leaf(n) => &n.sets,
        }
    }
}

impl MechanismTree {
    pub fn load(serialized: &[u8]) -> Result<Self> {
        Ok(serde_json::from_slice(serialized)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("mechanism serialization cannot fail")
    }

    /// Number of leaves.
    pub fn num_leaves(&self) -> usize {
        fn walk(node: &MechanismNode) -> usize {
            match node {
                MechanismNode::Leaf(_) => 1,
                MechanismNode::Internal(n) => n.edges.iter().map(|e| walk(&e.child)).sum(),
            }
        }
        walk(&self.root)
    }

    /// Number of vertices on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(node: &MechanismNode) -> usize {
            match node {
                MechanismNode::Leaf(_) => 1,
                MechanismNode::Internal(n) => {
                    1 + n.edges.iter().map(|e| walk(&e.child)).max().unwrap_or(0)
                }
            }
        }
        walk(&self.root)
    }
}

/// Which well-formedness rule a violation breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// Player index, set arity, type ranges, duplicate entries.
    Structure,
    /// The root vertex must carry every agent's full type set.
    RootCoverage,
    /// Out-edge cells must partition the mover's remaining types.
    Partition,
    /// A child must inherit the parent's sets with only the mover's
    /// coordinate replaced by the edge cell.
    ChildBookkeeping,
    /// Every type profile must reach exactly one leaf.
    FinitePlays,
    /// The choice rule must be constant on each leaf and match the
    /// leaf's outcome.
    Measurability,
}

/// One broken rule, naming the vertex by its path of child-edge indices
/// from the root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WellformednessViolation {
    pub path: Vec<usize>,
    pub rule: Rule,
    pub message: String,
}

/// One witness that a tree is not obviously strategy-proof: at the named
/// vertex the mover's true type `t_i` can end up strictly worse by telling
/// the truth (against opponents `t_minus_i`) than by deviating to `t_i_prime`
/// (against opponents `t_minus_i_prime`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OspViolation {
    pub path: Vec<usize>,
    pub agent: usize,
    pub t_i: u32,
    pub t_i_prime: u32,
    pub t_minus_i: TypeProfile,
    pub t_minus_i_prime: TypeProfile,
    pub truthful_payoff: i64,
    pub deviant_payoff: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OspReport {
    pub osp: bool,
    pub violation: Option<OspViolation>,
}

/// Checks every well-formedness rule; an empty list means well-formed.
pub fn verify_wellformed(
    instance: &ChoiceInstance,
    tree: &MechanismTree,
) -> Vec<WellformednessViolation> {
    let mut violations = Vec::new();
    let mut leaf_cover = vec![0u32; instance.num_profiles()];

    let root_sets = tree.root.sets();
    if root_sets.check_against(instance).is_ok() && *root_sets != ProductVertex::root(instance) {
        violations.push(WellformednessViolation {
            path: vec![],
            rule: Rule::RootCoverage,
            message: "root vertex does not carry the full type sets".into(),
        });
    }

    walk_wellformed(
        instance,
        &tree.root,
        &mut vec![],
        &mut violations,
        &mut leaf_cover,
    );

    // finite plays: every profile in exactly one leaf (skip when the tree is
    // already structurally broken, where coverage counting is meaningless)
    if violations.iter().all(|v| v.rule != Rule::Structure) {
        for (idx, &count) in leaf_cover.iter().enumerate() {
            if count != 1 {
                violations.push(WellformednessViolation {
                    path: vec![],
                    rule: Rule::FinitePlays,
                    message: format!(
                        "profile index {idx} is covered by {count} leaves, expected exactly 1"
                    ),
                });
                break;
            }
        }
    }
    violations
}

fn walk_wellformed(
    instance: &ChoiceInstance,
    node: &MechanismNode,
    path: &mut Vec<usize>,
    violations: &mut Vec<WellformednessViolation>,
    leaf_cover: &mut [u32],
) {
    let sets = node.sets();
    if let Err(e) = sets.check_against(instance) {
        violations.push(WellformednessViolation {
            path: path.clone(),
            rule: Rule::Structure,
            message: e.to_string(),
        });
        return;
    }

    match node {
        MechanismNode::Leaf(leaf) => {
            for (idx, _) in sets.profiles(instance) {
                leaf_cover[idx] += 1;
            }
            if leaf.outcome >= instance.num_outcomes() {
                violations.push(WellformednessViolation {
                    path: path.clone(),
                    rule: Rule::Structure,
                    message: format!("leaf outcome {} out of range", leaf.outcome),
                });
                return;
            }
            match sets.constant_outcome(instance) {
                Some(x) if x == leaf.outcome => {}
                Some(x) => violations.push(WellformednessViolation {
                    path: path.clone(),
                    rule: Rule::Measurability,
                    message: format!(
                        "choice rule picks outcome {x} on this leaf, label says {}",
                        leaf.outcome
                    ),
                }),
                None => violations.push(WellformednessViolation {
                    path: path.clone(),
                    rule: Rule::Measurability,
                    message: "choice rule is not constant on this leaf".into(),
                }),
            }
        }
        MechanismNode::Internal(internal) => {
            if internal.player >= instance.num_agents() {
                violations.push(WellformednessViolation {
                    path: path.clone(),
                    rule: Rule::Structure,
                    message: format!("player index {} out of range", internal.player),
                });
                return;
            }
            let mover = internal.player;
            let mover_types = sets.set(mover);

            // edge cells must partition the mover's remaining types
            let mut seen = std::collections::BTreeMap::new();
            let mut partition_ok = true;
            for (e, edge) in internal.edges.iter().enumerate() {
                if edge.cell.is_empty() {
                    violations.push(WellformednessViolation {
                        path: path.clone(),
                        rule: Rule::Partition,
                        message: format!("edge {e} has an empty cell"),
                    });
                    partition_ok = false;
                }
                for &t in &edge.cell {
                    if mover_types.binary_search(&t).is_err() {
                        violations.push(WellformednessViolation {
                            path: path.clone(),
                            rule: Rule::Partition,
                            message: format!(
                                "edge {e} mentions type {t} not remaining for player {mover}"
                            ),
                        });
                        partition_ok = false;
                    } else if let Some(other) = seen.insert(t, e) {
                        violations.push(WellformednessViolation {
                            path: path.clone(),
                            rule: Rule::Partition,
                            message: format!("type {t} appears in edges {other} and {e}"),
                        });
                        partition_ok = false;
                    }
                }
            }
            if partition_ok && seen.len() != mover_types.len() {
                let missing: Vec<u32> = mover_types
                    .iter()
                    .copied()
                    .filter(|t| !seen.contains_key(t))
                    .collect();
                violations.push(WellformednessViolation {
                    path: path.clone(),
                    rule: Rule::Partition,
                    message: format!("types {missing:?} of player {mover} are on no edge"),
                });
            }

            for (e, edge) in internal.edges.iter().enumerate() {
                let child_sets = edge.child.sets();
                if child_sets.num_agents() == sets.num_agents() {
                    let mut cell_sorted = edge.cell.clone();
                    cell_sorted.sort_unstable();
                    if child_sets.set(mover) != cell_sorted.as_slice() {
                        violations.push(WellformednessViolation {
                            path: path.clone(),
                            rule: Rule::ChildBookkeeping,
                            message: format!(
                                "child through edge {e} does not restrict player {mover} to the edge cell"
                            ),
                        });
                    }
                    for j in 0..sets.num_agents() {
                        if j != mover && child_sets.set(j) != sets.set(j) {
                            violations.push(WellformednessViolation {
                                path: path.clone(),
                                rule: Rule::ChildBookkeeping,
                                message: format!("child through edge {e} changes agent {j}'s set"),
                            });
                        }
                    }
                }
                path.push(e);
                walk_wellformed(instance, &edge.child, path, violations, leaf_cover);
                path.pop();
            }
        }
    }
}

/// Checks obvious strategy-proofness of a well-formed tree: at every vertex,
/// for the agent called to play there, the worst outcome from answering
/// truthfully is at least the best outcome from any deviating answer.
///
/// Errors if the tree is not well-formed.
pub fn verify_osp(instance: &ChoiceInstance, tree: &MechanismTree) -> Result<OspReport> {
    let violations = verify_wellformed(instance, tree);
    if !violations.is_empty() {
        return Err(Error::MalformedMechanism(format!(
            "{} (and {} more violation(s))",
            violations[0].message,
            violations.len() - 1
        )));
    }
    let mut path = Vec::new();
    let violation = walk_osp(instance, &tree.root, &mut path);
    Ok(OspReport {
        osp: violation.is_none(),
        violation,
    })
}

fn walk_osp(
    instance: &ChoiceInstance,
    node: &MechanismNode,
    path: &mut Vec<usize>,
) -> Option<OspViolation> {
    let internal = match node {
        MechanismNode::Leaf(_) => return None,
        MechanismNode::Internal(n) => n,
    };
    let sets = &internal.sets;
    let mover = internal.player;
    let members = sets.set(mover);

    // cell id per member position
    let mut cell_of = vec![usize::MAX; members.len()];
    for (e, edge) in internal.edges.iter().enumerate() {
        for &t in &edge.cell {
            cell_of[members.binary_search(&t).expect("wellformed partition")] = e;
        }
    }

    let bounds = PayoffBounds::compute(instance, sets, mover);
    for a_pos in 0..members.len() {
        for b_pos in 0..members.len() {
            if cell_of[a_pos] == cell_of[b_pos] {
                continue;
            }
            let truthful = bounds.worst_truthful(a_pos);
            let deviant = bounds.best_deviant(a_pos, b_pos);
            if truthful < deviant {
                return Some(OspViolation {
                    path: path.clone(),
                    agent: mover,
                    t_i: members[a_pos],
                    t_i_prime: members[b_pos],
                    t_minus_i: sets.decode_opponent(mover, bounds.worst_arg(a_pos)),
                    t_minus_i_prime: sets.decode_opponent(mover, bounds.best_arg(a_pos, b_pos)),
                    truthful_payoff: truthful,
                    deviant_payoff: deviant,
                });
            }
        }
    }

    for (e, edge) in internal.edges.iter().enumerate() {
        path.push(e);
        if let Some(v) = walk_osp(instance, &edge.child, path) {
            return Some(v);
        }
        path.pop();
    }
    None
}
