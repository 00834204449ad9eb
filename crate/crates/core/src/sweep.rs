//! Cross-validation sweeps: run the greedy decision procedure against the
//! explicit oracle on exhaustive and seeded-random instance families, and
//! verify every emitted mechanism and certificate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::certify;
use crate::decide::{decide, decide_only, SelectionPolicy};
use crate::generators::gen_random;
use crate::instance::ChoiceInstance;
use crate::mechanism::{verify_osp, verify_wellformed};
use crate::oracle::Oracle;
use crate::sp::check_sp;

#[derive(Debug, Clone)]
pub struct SweepConfig {
    /// Include the exhaustive block: every 2-agent 2x2-type 2-outcome
    /// choice table, crossed with seeded utility assignments.
    pub exhaustive_2x2: bool,
    /// Utility assignments per exhaustive choice table.
    pub utility_assignments: usize,
    pub random_instances: usize,
    pub max_agents: usize,
    pub max_types: u32,
    pub max_outcomes: u32,
    pub payoff_min: i64,
    pub payoff_max: i64,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            exhaustive_2x2: true,
            utility_assignments: 20,
            random_instances: 1000,
            max_agents: 3,
            max_types: 3,
            max_outcomes: 3,
            payoff_min: 0,
            payoff_max: 3,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckCount {
    pub passed: u64,
    pub failed: u64,
}

impl CheckCount {
    fn record(&mut self, ok: bool) -> bool {
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
        }
        ok
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepTally {
    /// Greedy verdict equals explicit-oracle reachability.
    pub oracle_equivalence: CheckCount,
    /// Oracle reachability equals oracle childlessness.
    pub oracle_modes_agree: CheckCount,
    /// Lowest-index and round-robin policies give the same verdict.
    pub policy_independence: CheckCount,
    /// Implementable: the emitted tree is well-formed and obviously
    /// strategy-proof.
    pub mechanism_verified: CheckCount,
    /// Not implementable: the extracted certificate verifies.
    pub certificate_verified: CheckCount,
    /// Implementable implies strategy-proof.
    pub osp_implies_sp: CheckCount,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepFailure {
    pub check: String,
    pub instance: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepReport {
    pub instances: u64,
    pub implementable: u64,
    pub not_implementable: u64,
    pub tally: SweepTally,
    pub failures: Vec<SweepFailure>,
    pub all_passed: bool,
}

impl SweepReport {
    pub fn load(serialized: &[u8]) -> crate::error::Result<Self> {
        Ok(serde_json::from_slice(serialized)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

const MAX_STORED_FAILURES: usize = 20;

/// Every 2-agent, 2x2-type, 2-outcome choice table (16 rules), each crossed
/// with `assignments` seeded utility tables.
pub fn exhaustive_2x2_instances(
    seed: u64,
    assignments: usize,
    payoff_min: i64,
    payoff_max: i64,
) -> Vec<ChoiceInstance> {
    let mut out = Vec::with_capacity(16 * assignments);
    for table in 0u32..16 {
        let choice: Vec<u32> = (0..4).map(|k| table >> k & 1).collect();
        for assignment in 0..assignments {
            let mut rng =
                ChaCha8Rng::seed_from_u64(seed ^ (u64::from(table) << 32) ^ assignment as u64);
            let utilities: Vec<Vec<Vec<i64>>> = (0..2)
                .map(|_| {
                    (0..2)
                        .map(|_| {
                            (0..2)
                                .map(|_| rng.random_range(payoff_min..=payoff_max))
                                .collect()
                        })
                        .collect()
                })
                .collect();
            out.push(
                ChoiceInstance::new(vec![2, 2], 2, choice.clone(), utilities)
                    .expect("exhaustive instance is valid"),
            );
        }
    }
    out
}

/// Seeded random instances with up to `max_agents` agents, `max_types`
/// types per agent, and `max_outcomes` outcomes.
pub fn random_sweep_instances(config: &SweepConfig) -> Vec<ChoiceInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut out = Vec::with_capacity(config.random_instances);
    for _ in 0..config.random_instances {
        let n = rng.random_range(1..=config.max_agents);
        let sizes: Vec<u32> = (0..n)
            .map(|_| rng.random_range(1..=config.max_types))
            .collect();
        let outcomes = rng.random_range(1..=config.max_outcomes);
        let inst_seed: u64 = rng.random();
        out.push(
            gen_random(
                inst_seed,
                &sizes,
                outcomes,
                config.payoff_min,
                config.payoff_max,
            )
            .expect("random instance parameters are valid"),
        );
    }
    out
}

pub fn sweep_instances(config: &SweepConfig) -> Vec<ChoiceInstance> {
    let mut instances = Vec::new();
    if config.exhaustive_2x2 {
        instances.extend(exhaustive_2x2_instances(
            config.seed,
            config.utility_assignments,
            config.payoff_min,
            config.payoff_max,
        ));
    }
    instances.extend(random_sweep_instances(config));
    instances
}

/// Runs every cross-check on every sweep instance.
pub fn run_sweep(config: &SweepConfig) -> SweepReport {
    let mut report = SweepReport {
        instances: 0,
        implementable: 0,
        not_implementable: 0,
        tally: SweepTally::default(),
        failures: Vec::new(),
        all_passed: true,
    };
    for instance in sweep_instances(config) {
        check_instance(&instance, &mut report);
    }
    report.all_passed = report.failures.is_empty()
        && [
            report.tally.oracle_equivalence,
            report.tally.oracle_modes_agree,
            report.tally.policy_independence,
            report.tally.mechanism_verified,
            report.tally.certificate_verified,
            report.tally.osp_implies_sp,
        ]
        .iter()
        .all(|c| c.failed == 0);
    report
}

fn check_instance(instance: &ChoiceInstance, report: &mut SweepReport) {
    report.instances += 1;
    let note = |ok: bool, check: &str, failures: &mut Vec<SweepFailure>| {
        if !ok && failures.len() < MAX_STORED_FAILURES {
            failures.push(SweepFailure {
                check: check.to_string(),
                instance: instance.to_json(),
            });
        }
        ok
    };

    let fast = decide_only(instance, SelectionPolicy::LowestIndex);
    if fast {
        report.implementable += 1;
    } else {
        report.not_implementable += 1;
    }

    let dag = Oracle::new(instance)
        .build()
        .expect("sweep instances are within the oracle guard");
    let reach = dag.nicely_connected_by_reachability();
    let childless_free = dag.childless_non_singleton().is_none();

    let ok = report.tally.oracle_equivalence.record(fast == reach);
    note(ok, "oracle_equivalence", &mut report.failures);
    let ok = report
        .tally
        .oracle_modes_agree
        .record(reach == childless_free);
    note(ok, "oracle_modes_agree", &mut report.failures);

    let round_robin = decide_only(instance, SelectionPolicy::RoundRobin);
    let ok = report.tally.policy_independence.record(fast == round_robin);
    note(ok, "policy_independence", &mut report.failures);

    let result = decide(instance, SelectionPolicy::LowestIndex);
    if result.implementable {
        let tree = result.mechanism.as_ref().expect("tree on success");
        let wellformed = verify_wellformed(instance, tree).is_empty();
        let osp = wellformed && verify_osp(instance, tree).map(|r| r.osp).unwrap_or(false);
        let ok = report.tally.mechanism_verified.record(wellformed && osp);
        note(ok, "mechanism_verified", &mut report.failures);

        let ok = report.tally.osp_implies_sp.record(check_sp(instance).sp);
        note(ok, "osp_implies_sp", &mut report.failures);
    } else {
        let vertex = result.failing_vertex.as_ref().expect("vertex on failure");
        let verified = certify::extract(instance, vertex)
            .and_then(|cert| certify::verify(instance, &cert))
            .unwrap_or(false);
        let ok = report.tally.certificate_verified.record(verified);
        note(ok, "certificate_verified", &mut report.failures);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_sweep_is_clean() {
        let config = SweepConfig {
            exhaustive_2x2: false,
            random_instances: 40,
            seed: 7,
            ..SweepConfig::default()
        };
        let report = run_sweep(&config);
        assert_eq!(report.instances, 40);
        assert!(report.all_passed, "failures: {:?}", report.failures);
        assert!(report.implementable + report.not_implementable == 40);
    }

    #[test]
    fn exhaustive_block_has_the_right_shape() {
        let instances = exhaustive_2x2_instances(1, 3, 0, 3);
        assert_eq!(instances.len(), 48);
        assert!(instances.iter().all(|i| i.num_agents() == 2));
    }

    #[test]
    fn sweep_generation_is_deterministic() {
        let config = SweepConfig {
            random_instances: 10,
            ..SweepConfig::default()
        };
        let a = sweep_instances(&config);
        let b = sweep_instances(&config);
        assert_eq!(a, b);
    }
}
