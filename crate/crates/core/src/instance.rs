//! Choice-rule instances: agents, type sets, outcomes, the choice table,
//! and per-agent ordinal utility tables.
//!
//! Types and outcomes are dense 0-based indices. The choice table is stored
//! flat in row-major order with the last agent varying fastest, so
//! `profile_index` is a plain stride sum. Payoffs are signed 64-bit integers
//! and every comparison in the library is an exact integer comparison.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A full report profile, one type index per agent.
pub type TypeProfile = Vec<u32>;

/// Upper bound on the number of type profiles in one instance.
pub const MAX_PROFILES: u64 = 1 << 24;

/// Upper bound on the table size measure `(sum of |T_i|) * (product of |T_i|)`.
pub const MAX_TABLE_SIZE: u64 = 1 << 28;

/// A validated choice-rule instance.
///
/// Immutable after construction; all algorithms take `&ChoiceInstance`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChoiceInstance {
    num_agents: usize,
    type_sizes: Vec<u32>,
    num_outcomes: u32,
    choice: Vec<u32>,
    utilities: Vec<Vec<Vec<i64>>>,
    labels: Option<serde_json::Value>,
    strides: Vec<usize>,
}

/// Size statistics for an instance: `table_size = sum_types * product_types`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceStats {
    pub table_size: u64,
    pub sum_types: u64,
    pub product_types: u64,
}

/// The on-disk JSON document. Field names are part of the format.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    agents: usize,
    type_sizes: Vec<u32>,
    num_outcomes: u32,
    choice: Vec<u32>,
    utilities: Vec<Vec<Vec<i64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<serde_json::Value>,
}

impl ChoiceInstance {
    /// Builds and validates an instance from its raw parts.
    pub fn new(
        type_sizes: Vec<u32>,
        num_outcomes: u32,
        choice: Vec<u32>,
        utilities: Vec<Vec<Vec<i64>>>,
    ) -> Result<Self> {
        let agents = type_sizes.len();
        Self::from_doc(InstanceDoc {
            agents,
            type_sizes,
            num_outcomes,
            choice,
            utilities,
            labels: None,
        })
    }

    fn from_doc(doc: InstanceDoc) -> Result<Self> {
        if doc.agents == 0 {
            return Err(Error::validation("agents", "must be at least 1"));
        }
        if doc.type_sizes.len() != doc.agents {
            return Err(Error::validation(
                "type_sizes",
                format!(
                    "expected {} entries, found {}",
                    doc.agents,
                    doc.type_sizes.len()
                ),
            ));
        }
        for (i, &s) in doc.type_sizes.iter().enumerate() {
            if s == 0 {
                return Err(Error::validation(
                    format!("type_sizes[{i}]"),
                    "type set must be nonempty",
                ));
            }
        }
        if doc.num_outcomes == 0 {
            return Err(Error::validation("num_outcomes", "must be at least 1"));
        }

        let mut product: u64 = 1;
        let mut sum: u64 = 0;
        for &s in &doc.type_sizes {
            product = product.saturating_mul(u64::from(s));
            sum += u64::from(s);
        }
        if product > MAX_PROFILES || sum.saturating_mul(product) > MAX_TABLE_SIZE {
            return Err(Error::validation(
                "type_sizes",
                format!("type space too large: {product} profiles"),
            ));
        }
        let num_profiles = product as usize;

        if doc.choice.len() != num_profiles {
            return Err(Error::validation(
                "choice",
                format!(
                    "expected {} entries, found {}",
                    num_profiles,
                    doc.choice.len()
                ),
            ));
        }
        for (k, &x) in doc.choice.iter().enumerate() {
            if x >= doc.num_outcomes {
                return Err(Error::validation(
                    format!("choice[{k}]"),
                    format!(
                        "outcome index {} out of range (num_outcomes {})",
                        x, doc.num_outcomes
                    ),
                ));
            }
        }

        if doc.utilities.len() != doc.agents {
            return Err(Error::validation(
                "utilities",
                format!(
                    "expected {} agents, found {}",
                    doc.agents,
                    doc.utilities.len()
                ),
            ));
        }
        for (i, per_type) in doc.utilities.iter().enumerate() {
            if per_type.len() != doc.type_sizes[i] as usize {
                return Err(Error::validation(
                    format!("utilities[{i}]"),
                    format!(
                        "expected {} types, found {}",
                        doc.type_sizes[i],
                        per_type.len()
                    ),
                ));
            }
            for (t, per_outcome) in per_type.iter().enumerate() {
                if per_outcome.len() != doc.num_outcomes as usize {
                    return Err(Error::validation(
                        format!("utilities[{i}][{t}]"),
                        format!(
                            "expected {} outcomes, found {}",
                            doc.num_outcomes,
                            per_outcome.len()
                        ),
                    ));
                }
            }
        }

        let strides = strides_of(&doc.type_sizes);
        Ok(ChoiceInstance {
            num_agents: doc.agents,
            type_sizes: doc.type_sizes,
            num_outcomes: doc.num_outcomes,
            choice: doc.choice,
            utilities: doc.utilities,
            labels: doc.labels,
            strides,
        })
    }

    /// Parses and validates the instance JSON document.
    pub fn load(serialized: &[u8]) -> Result<Self> {
        let doc: InstanceDoc = serde_json::from_slice(serialized)?;
        Self::from_doc(doc)
    }

    /// Serializes to the canonical JSON document.
    pub fn to_json(&self) -> String {
        let doc = InstanceDoc {
            agents: self.num_agents,
            type_sizes: self.type_sizes.clone(),
            num_outcomes: self.num_outcomes,
            choice: self.choice.clone(),
            utilities: self.utilities.clone(),
            labels: self.labels.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("instance serialization cannot fail")
    }

    pub fn num_agents(&self) -> usize {
        self.num_agents
    }

    pub fn type_sizes(&self) -> &[u32] {
        &self.type_sizes
    }

    pub fn type_size(&self, agent: usize) -> u32 {
        self.type_sizes[agent]
    }

    pub fn num_outcomes(&self) -> u32 {
        self.num_outcomes
    }

    pub fn num_profiles(&self) -> usize {
        self.choice.len()
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn labels(&self) -> Option<&serde_json::Value> {
        self.labels.as_ref()
    }

    pub fn set_labels(&mut self, labels: Option<serde_json::Value>) {
        self.labels = labels;
    }

    /// Outcome chosen at a flat profile index.
    #[inline]
    pub fn outcome_at(&self, profile_index: usize) -> u32 {
        self.choice[profile_index]
    }

    /// `u_i(t_i, x)`.
    #[inline]
    pub fn utility(&self, agent: usize, type_index: u32, outcome: u32) -> i64 {
        self.utilities[agent][type_index as usize][outcome as usize]
    }

    /// `u_i(t_i, c(profile))` with the profile given by its flat index.
    #[inline]
    pub fn payoff_at(&self, agent: usize, type_index: u32, profile_index: usize) -> i64 {
        self.utility(agent, type_index, self.choice[profile_index])
    }

    /// Flat index of a full profile; errors on any out-of-range coordinate.
    pub fn profile_index(&self, profile: &[u32]) -> Result<usize> {
        profile_index(profile, &self.type_sizes)
    }

    /// Inverse of [`profile_index`].
    pub fn index_profile(&self, index: usize) -> Result<TypeProfile> {
        index_profile(index, &self.type_sizes)
    }

    /// The table-size measure `(sum of |T_i|) * (product of |T_i|)`.
    pub fn stats(&self) -> InstanceStats {
        let sum_types: u64 = self.type_sizes.iter().map(|&s| u64::from(s)).sum();
        let product_types: u64 = self.type_sizes.iter().map(|&s| u64::from(s)).product();
        InstanceStats {
            table_size: sum_types * product_types,
            sum_types,
            product_types,
        }
    }
}

fn strides_of(type_sizes: &[u32]) -> Vec<usize> {
    let n = type_sizes.len();
    let mut strides = vec![1usize; n];
    for i in (0..n.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * type_sizes[i + 1] as usize;
    }
    strides
}

/// Flat index of `profile`, last agent varying fastest.
pub fn profile_index(profile: &[u32], type_sizes: &[u32]) -> Result<usize> {
    if profile.len() != type_sizes.len() {
        return Err(Error::InvalidProfile(format!(
            "expected {} coordinates, found {}",
            type_sizes.len(),
            profile.len()
        )));
    }
    let mut index = 0usize;
    for (i, (&t, &s)) in profile.iter().zip(type_sizes).enumerate() {
        if t >= s {
            return Err(Error::InvalidProfile(format!(
                "coordinate {i} is {t}, agent has only {s} types"
            )));
        }
        index = index * s as usize + t as usize;
    }
    Ok(index)
}

/// Inverse of [`profile_index`].
pub fn index_profile(mut index: usize, type_sizes: &[u32]) -> Result<TypeProfile> {
    let total: usize = type_sizes.iter().map(|&s| s as usize).product();
    if index >= total {
        return Err(Error::InvalidProfile(format!(
            "index {index} out of range (total {total})"
        )));
    }
    let mut profile = vec![0u32; type_sizes.len()];
    for i in (0..type_sizes.len()).rev() {
        let s = type_sizes[i] as usize;
        profile[i] = (index % s) as u32;
        index /= s;
    }
    Ok(profile)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_doc() -> String {
        r#"{
            "agents": 2,
            "type_sizes": [2, 2],
            "num_outcomes": 2,
            "choice": [0, 1, 1, 0],
            "utilities": [
                [[1, 0], [0, 1]],
                [[0, 0], [0, 0]]
            ]
        }"#
        .to_string()
    }

    #[test]
    fn loads_well_formed_document() {
        let inst = ChoiceInstance::load(tiny_doc().as_bytes()).unwrap();
        assert_eq!(inst.num_agents(), 2);
        assert_eq!(inst.stats().product_types, 4);
        assert_eq!(inst.outcome_at(0), 0);
        assert_eq!(inst.utility(0, 1, 1), 1);
    }

    #[test]
    fn rejects_wrong_choice_length() {
        let doc = tiny_doc().replace("[0, 1, 1, 0]", "[0, 1, 1]");
        let err = ChoiceInstance::load(doc.as_bytes()).unwrap_err();
        match err {
            Error::Validation { field, .. } => assert_eq!(field, "choice"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_out_of_range_outcome_naming_profile_index() {
        let doc = tiny_doc().replace("[0, 1, 1, 0]", "[0, 1, 5, 0]");
        let err = ChoiceInstance::load(doc.as_bytes()).unwrap_err();
        match err {
            Error::Validation { field, .. } => assert_eq!(field, "choice[2]"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_fields() {
        let doc = tiny_doc().replace("\"agents\": 2,", "\"agents\": 2, \"bogus\": 1,");
        assert!(matches!(
            ChoiceInstance::load(doc.as_bytes()),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn rejects_missing_utility_row() {
        let doc = tiny_doc().replace("[[0, 0], [0, 0]]", "[[0, 0]]");
        let err = ChoiceInstance::load(doc.as_bytes()).unwrap_err();
        match err {
            Error::Validation { field, .. } => assert_eq!(field, "utilities[1]"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn stats_formula() {
        let inst = ChoiceInstance::new(
            vec![2, 2],
            1,
            vec![0; 4],
            vec![vec![vec![0]; 2], vec![vec![0]; 2]],
        )
        .unwrap();
        assert_eq!(inst.stats().table_size, 16);

        let inst = ChoiceInstance::new(vec![1], 1, vec![0], vec![vec![vec![0]]]).unwrap();
        assert_eq!(inst.stats().table_size, 1);

        let sizes = vec![2u32, 3, 4];
        let profiles = 24;
        let inst = ChoiceInstance::new(
            sizes.clone(),
            1,
            vec![0; profiles],
            sizes.iter().map(|&s| vec![vec![0]; s as usize]).collect(),
        )
        .unwrap();
        assert_eq!(inst.stats().table_size, 9 * 24);
        assert_eq!(
            inst.stats().table_size,
            inst.stats().sum_types * inst.stats().product_types
        );
    }

    #[test]
    fn profile_index_examples() {
        assert_eq!(profile_index(&[0, 0], &[2, 2]).unwrap(), 0);
        assert_eq!(profile_index(&[1, 0], &[2, 2]).unwrap(), 2);
        assert_eq!(profile_index(&[1, 2], &[2, 3]).unwrap(), 5);
        assert!(profile_index(&[2, 0], &[2, 3]).is_err());
    }

    #[test]
    fn profile_index_bijection() {
        let sizes = [2u32, 3, 2];
        let total = 12usize;
        let mut seen = vec![false; total];
        for (idx, slot) in seen.iter_mut().enumerate() {
            let p = index_profile(idx, &sizes).unwrap();
            assert_eq!(profile_index(&p, &sizes).unwrap(), idx);
            assert!(!*slot);
            *slot = true;
        }
        assert!(seen.iter().all(|&b| b));
    }

    #[test]
    fn round_trips_through_json() {
        let mut inst = ChoiceInstance::load(tiny_doc().as_bytes()).unwrap();
        inst.set_labels(Some(serde_json::json!({"name": "matching pennies"})));
        let back = ChoiceInstance::load(inst.to_json().as_bytes()).unwrap();
        assert_eq!(inst, back);
    }
}
