//! Strategy-proofness: no type of any agent can strictly gain by
//! misreporting, for any fixed opponent profile.

use serde::{Deserialize, Serialize};

use crate::instance::{ChoiceInstance, TypeProfile};
use crate::vertex::ProductVertex;

/// One strict violation of strategy-proofness.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpViolation {
    pub agent: usize,
    pub true_type: u32,
    pub deviation: u32,
    /// Opponent types in agent order with `agent` removed.
    pub opponents: TypeProfile,
    pub truthful_payoff: i64,
    pub deviant_payoff: i64,
}

/// Result of the strategy-proofness scan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpReport {
    pub sp: bool,
    /// Number of payoff comparisons performed; always equals the table
    /// size `(sum of |T_i|) * (product of |T_i|)`.
    pub comparisons: u64,
    pub violation: Option<SpViolation>,
}

/// Scans every `(agent, true type, deviation, opponent profile)` quadruple.
///
/// The scan always runs to completion so that `comparisons` is exactly the
/// table size; the reported violation is the first in scan order
/// `(i, t_i, t_i', t_{-i})`.
pub fn check_sp(instance: &ChoiceInstance) -> SpReport {
    let root = ProductVertex::root(instance);
    let mut comparisons = 0u64;
    let mut violation: Option<SpViolation> = None;

    for agent in 0..instance.num_agents() {
        let own_stride = instance.strides()[agent];
        for true_type in 0..instance.type_size(agent) {
            for deviation in 0..instance.type_size(agent) {
                for (base, packed) in root.opponents(instance, agent) {
                    let truthful = instance.payoff_at(
                        agent,
                        true_type,
                        base + true_type as usize * own_stride,
                    );
                    let deviant = instance.payoff_at(
                        agent,
                        true_type,
                        base + deviation as usize * own_stride,
                    );
                    comparisons += 1;
                    if truthful < deviant && violation.is_none() {
                        violation = Some(SpViolation {
                            agent,
                            true_type,
                            deviation,
                            opponents: root.decode_opponent(agent, packed),
                            truthful_payoff: truthful,
                            deviant_payoff: deviant,
                        });
                    }
                }
            }
        }
    }

    SpReport {
        sp: violation.is_none(),
        comparisons,
        violation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::gen_dictatorship;

    /// One agent, two types, two outcomes, c(t) = 1 - t, agent wants x == t.
    fn contrarian() -> ChoiceInstance {
        ChoiceInstance::new(vec![2], 2, vec![1, 0], vec![vec![vec![1, 0], vec![0, 1]]]).unwrap()
    }

    fn constant_rule() -> ChoiceInstance {
        ChoiceInstance::new(
            vec![2, 2],
            2,
            vec![0; 4],
            vec![vec![vec![3, 0], vec![0, 3]]; 2],
        )
        .unwrap()
    }

    #[test]
    fn misreport_gains_detected() {
        let report = check_sp(&contrarian());
        assert!(!report.sp);
        let v = report.violation.unwrap();
        assert_eq!((v.agent, v.true_type, v.deviation), (0, 0, 1));
        assert_eq!((v.truthful_payoff, v.deviant_payoff), (0, 1));
        assert!(v.opponents.is_empty());
    }

    #[test]
    fn constant_rule_is_sp() {
        let report = check_sp(&constant_rule());
        assert!(report.sp);
        assert!(report.violation.is_none());
    }

    #[test]
    fn dictatorship_is_sp() {
        let inst = gen_dictatorship(&[2, 2], &[0, 1]).unwrap();
        assert!(check_sp(&inst).sp);
    }

    #[test]
    fn comparison_count_equals_table_size() {
        for inst in [contrarian(), constant_rule()] {
            assert_eq!(check_sp(&inst).comparisons, inst.stats().table_size);
        }
    }
}
