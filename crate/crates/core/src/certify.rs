//! Non-existence certificates: a childless non-singleton vertex together
//! with, per agent, a spanning tree of strict-inequality witnesses over the
//! divergence graph. A verifier checks the certificate with one inequality
//! per tree edge and never re-evaluates the quantified edge condition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{ChoiceInstance, TypeProfile};
use crate::odag::{partition_cells, PayoffBounds};
use crate::union_find::UnionFind;
use crate::vertex::{insert_coordinate, ProductVertex};

/// Two full profiles in the certificate vertex realizing one strict
/// divergence inequality for the agent that owns the tuple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessTuple {
    pub t: TypeProfile,
    pub tprime: TypeProfile,
}

/// Proof that no obviously strategy-proof mechanism exists: the vertex has
/// no child in the O-dag, certified per agent by `|T'_i| - 1` witness
/// tuples whose own-type pairs form a spanning tree of the divergence
/// graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonOspCertificate {
    pub vertex: ProductVertex,
    pub witnesses: Vec<Vec<WitnessTuple>>,
}

impl NonOspCertificate {
    pub fn load(serialized: &[u8]) -> Result<Self> {
        Ok(serde_json::from_slice(serialized)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serialization cannot fail")
    }
}

/// Builds a certificate from a failing vertex of the decision procedure.
///
/// Errors unless the vertex is non-singleton with every agent's answer
/// partition absent (equivalently: every divergence graph connected, so the
/// vertex is childless). Spanning trees are taken breadth-first from each
/// agent's smallest remaining type; witness profiles are the argument
/// profiles recorded while computing the payoff bounds.
pub fn extract(
    instance: &ChoiceInstance,
    failing_vertex: &ProductVertex,
) -> Result<NonOspCertificate> {
    failing_vertex.check_against(instance)?;
    if failing_vertex.is_singleton() {
        return Err(Error::ExtractionPrecondition(
            "vertex is a singleton, nothing to certify".into(),
        ));
    }
    for agent in 0..instance.num_agents() {
        if partition_cells(instance, failing_vertex, agent).is_some() {
            return Err(Error::ExtractionPrecondition(format!(
                "vertex has a child: agent {agent} still has an obvious question"
            )));
        }
    }

    let mut witnesses = Vec::with_capacity(instance.num_agents());
    for agent in 0..instance.num_agents() {
        let members = failing_vertex.set(agent);
        let m = members.len();
        if m == 1 {
            witnesses.push(Vec::new());
            continue;
        }
        let bounds = PayoffBounds::compute(instance, failing_vertex, agent);

        // breadth-first spanning tree over the (connected) divergence graph
        let mut tuples = Vec::with_capacity(m - 1);
        let mut visited = vec![false; m];
        let mut queue = std::collections::VecDeque::new();
        visited[0] = true;
        queue.push_back(0usize);
        while let Some(u) = queue.pop_front() {
            let discovered: Vec<usize> = (0..m)
                .filter(|&v| !visited[v] && bounds.diverges(u, v))
                .collect();
            for v in discovered {
                visited[v] = true;
                queue.push_back(v);
                tuples.push(witness_for_edge(failing_vertex, agent, &bounds, u, v));
            }
        }
        debug_assert_eq!(tuples.len(), m - 1, "divergence graph must be connected");
        witnesses.push(tuples);
    }

    Ok(NonOspCertificate {
        vertex: failing_vertex.clone(),
        witnesses,
    })
}

fn witness_for_edge(
    vertex: &ProductVertex,
    agent: usize,
    bounds: &PayoffBounds,
    u: usize,
    v: usize,
) -> WitnessTuple {
    let members = bounds.members();
    // orient so that `t`'s own type realizes worst-truthful < best-deviant
    let (truth_pos, lie_pos) = if bounds.worst_truthful(u) < bounds.best_deviant(u, v) {
        (u, v)
    } else {
        (v, u)
    };
    let worst_opp = vertex.decode_opponent(agent, bounds.worst_arg(truth_pos));
    let best_opp = vertex.decode_opponent(agent, bounds.best_arg(truth_pos, lie_pos));
    WitnessTuple {
        t: insert_coordinate(&worst_opp, agent, members[truth_pos]),
        tprime: insert_coordinate(&best_opp, agent, members[lie_pos]),
    }
}

/// Checks every certificate invariant against the instance.
///
/// Returns `Ok(false)` when the certificate is well-formed but does not
/// prove anything (bad tuple counts, not a spanning tree, profiles outside
/// the vertex, non-strict inequalities); errors only when the certificate
/// cannot be interpreted against the instance at all.
pub fn verify(instance: &ChoiceInstance, certificate: &NonOspCertificate) -> Result<bool> {
    let n = instance.num_agents();
    certificate
        .vertex
        .check_against(instance)
        .map_err(|e| Error::MalformedCertificate(e.to_string()))?;
    if certificate.witnesses.len() != n {
        return Err(Error::MalformedCertificate(format!(
            "expected witness sets for {n} agents, found {}",
            certificate.witnesses.len()
        )));
    }
    for per_agent in &certificate.witnesses {
        for tuple in per_agent {
            for profile in [&tuple.t, &tuple.tprime] {
                if profile.len() != n {
                    return Err(Error::MalformedCertificate(format!(
                        "witness profile {profile:?} has wrong arity"
                    )));
                }
                for (j, &t) in profile.iter().enumerate() {
                    if t >= instance.type_size(j) {
                        return Err(Error::MalformedCertificate(format!(
                            "witness profile {profile:?} is outside the type space at agent {j}"
                        )));
                    }
                }
            }
        }
    }

    let vertex = &certificate.vertex;
    if vertex.is_singleton() {
        return Ok(false);
    }

    for (agent, per_agent) in certificate.witnesses.iter().enumerate() {
        let members = vertex.set(agent);
        let m = members.len();
        if per_agent.len() != m - 1 {
            return Ok(false);
        }
        let mut uf = UnionFind::new(m);
        for tuple in per_agent {
            if !vertex.contains_profile(&tuple.t) || !vertex.contains_profile(&tuple.tprime) {
                return Ok(false);
            }
            let own = tuple.t[agent];
            let own_prime = tuple.tprime[agent];
            if own == own_prime {
                return Ok(false); // self-loop, not a tree edge
            }
            let u = members.binary_search(&own).expect("profile inside vertex");
            let v = members
                .binary_search(&own_prime)
                .expect("profile inside vertex");
            if !uf.union(u, v) {
                return Ok(false); // repeated or cyclic edge
            }
            if !strict_divergence(instance, agent, &tuple.t, &tuple.tprime)? {
                return Ok(false);
            }
        }
        if m >= 1 && uf.num_components() != 1 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// At least one of the two strict inequalities of the edge condition.
fn strict_divergence(
    instance: &ChoiceInstance,
    agent: usize,
    t: &[u32],
    tprime: &[u32],
) -> Result<bool> {
    let outcome_t = instance.outcome_at(instance.profile_index(t)?);
    let outcome_tp = instance.outcome_at(instance.profile_index(tprime)?);
    let own = t[agent];
    let own_prime = tprime[agent];
    Ok(
        instance.utility(agent, own, outcome_t) < instance.utility(agent, own, outcome_tp)
            || instance.utility(agent, own_prime, outcome_tp)
                < instance.utility(agent, own_prime, outcome_t),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decide::{decide, SelectionPolicy};
    use crate::generators::{gen_dictatorship, gen_sat, BooleanFormula};

    fn sat_x0() -> ChoiceInstance {
        gen_sat(&BooleanFormula::parse("x0", None).unwrap()).unwrap()
    }

    #[test]
    fn extracts_the_expected_witness_on_the_sat_instance() {
        let inst = sat_x0();
        let failing = decide(&inst, SelectionPolicy::LowestIndex)
            .failing_vertex
            .unwrap();
        let cert = extract(&inst, &failing).unwrap();
        assert_eq!(cert.vertex.set(0), &[1]);
        assert!(cert.witnesses[0].is_empty());
        assert_eq!(
            cert.witnesses[1],
            vec![WitnessTuple {
                t: vec![1, 0],
                tprime: vec![1, 1],
            }]
        );
        assert!(verify(&inst, &cert).unwrap());
    }

    #[test]
    fn extraction_requires_a_childless_vertex() {
        let dict = gen_dictatorship(&[2, 2], &[0, 1]).unwrap();
        assert!(decide(&dict, SelectionPolicy::LowestIndex).implementable);
        // on an implementable rule there is no vertex to certify at all
        for vertex in crate::oracle::Oracle::new(&dict)
            .build()
            .unwrap()
            .vertices()
        {
            assert!(matches!(
                extract(&dict, vertex),
                Err(Error::ExtractionPrecondition(_))
            ));
        }

        let constant =
            ChoiceInstance::new(vec![2, 2], 1, vec![0; 4], vec![vec![vec![0]; 2]; 2]).unwrap();
        assert!(matches!(
            extract(&constant, &ProductVertex::root(&constant)),
            Err(Error::ExtractionPrecondition(_))
        ));
    }

    #[test]
    fn self_loop_tuple_is_rejected() {
        let inst = sat_x0();
        let failing = decide(&inst, SelectionPolicy::LowestIndex)
            .failing_vertex
            .unwrap();
        let mut cert = extract(&inst, &failing).unwrap();
        cert.witnesses[1][0].tprime = cert.witnesses[1][0].t.clone();
        assert!(!verify(&inst, &cert).unwrap());
    }

    #[test]
    fn wrong_slice_has_no_strict_inequality() {
        let inst = sat_x0();
        let cert = NonOspCertificate {
            vertex: ProductVertex::new(vec![vec![0], vec![0, 1]]).unwrap(),
            witnesses: vec![
                vec![],
                vec![WitnessTuple {
                    t: vec![0, 0],
                    tprime: vec![0, 1],
                }],
            ],
        };
        assert!(!verify(&inst, &cert).unwrap());
    }

    #[test]
    fn malformed_certificates_error() {
        let inst = sat_x0();
        let cert = NonOspCertificate {
            vertex: ProductVertex::new(vec![vec![1], vec![0, 1]]).unwrap(),
            witnesses: vec![vec![]],
        };
        assert!(matches!(
            verify(&inst, &cert),
            Err(Error::MalformedCertificate(_))
        ));
        let cert = NonOspCertificate {
            vertex: ProductVertex::new(vec![vec![1], vec![0, 1]]).unwrap(),
            witnesses: vec![
                vec![],
                vec![WitnessTuple {
                    t: vec![1, 7],
                    tprime: vec![1, 1],
                }],
            ],
        };
        assert!(matches!(
            verify(&inst, &cert),
            Err(Error::MalformedCertificate(_))
        ));
    }

    #[test]
    fn certificate_json_round_trips() {
        let inst = sat_x0();
        let failing = decide(&inst, SelectionPolicy::LowestIndex)
            .failing_vertex
            .unwrap();
        let cert = extract(&inst, &failing).unwrap();
        let back = NonOspCertificate::load(cert.to_json().as_bytes()).unwrap();
        assert_eq!(cert, back);
    }
}
