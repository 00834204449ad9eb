//! Product vertices: one nonempty subset of types per agent, tracking what
//! the reports so far reveal about the type profile.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{ChoiceInstance, TypeProfile};

/// A product set of types, `T'_1 x ... x T'_n`, each coordinate a nonempty
/// sorted subset of the agent's type indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProductVertex {
    sets: Vec<Vec<u32>>,
}

impl ProductVertex {
    /// Canonicalizes (sorts) the given sets; rejects empty sets and
    /// duplicate entries.
    pub fn new(mut sets: Vec<Vec<u32>>) -> Result<Self> {
        for (i, set) in sets.iter_mut().enumerate() {
            if set.is_empty() {
                return Err(Error::InvalidVertex(format!("agent {i} has an empty set")));
            }
            set.sort_unstable();
            if set.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidVertex(format!(
                    "agent {i} has duplicate type indices"
                )));
            }
        }
        Ok(ProductVertex { sets })
    }

    /// The root vertex: every agent's full type set.
    pub fn root(instance: &ChoiceInstance) -> Self {
        ProductVertex {
            sets: instance
                .type_sizes()
                .iter()
                .map(|&s| (0..s).collect())
                .collect(),
        }
    }

    /// A singleton vertex holding exactly one profile.
    pub fn singleton(profile: &[u32]) -> Self {
        ProductVertex {
            sets: profile.iter().map(|&t| vec![t]).collect(),
        }
    }

    pub(crate) fn from_sorted_unchecked(sets: Vec<Vec<u32>>) -> Self {
        ProductVertex { sets }
    }

    /// Checks coordinate count, nonemptiness, strict ordering, and type
    /// ranges against an instance.
    pub fn check_against(&self, instance: &ChoiceInstance) -> Result<()> {
        if self.sets.len() != instance.num_agents() {
            return Err(Error::InvalidVertex(format!(
                "expected {} coordinates, found {}",
                instance.num_agents(),
                self.sets.len()
            )));
        }
        for (i, set) in self.sets.iter().enumerate() {
            if set.is_empty() {
                return Err(Error::InvalidVertex(format!("agent {i} has an empty set")));
            }
            if set.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidVertex(format!(
                    "agent {i} set is not strictly sorted"
                )));
            }
            if *set.last().unwrap() >= instance.type_size(i) {
                return Err(Error::InvalidVertex(format!(
                    "agent {i} set contains type {} but the agent has only {} types",
                    set.last().unwrap(),
                    instance.type_size(i)
                )));
            }
        }
        Ok(())
    }

    pub fn num_agents(&self) -> usize {
        self.sets.len()
    }

    pub fn set(&self, agent: usize) -> &[u32] {
        &self.sets[agent]
    }

    pub fn sets(&self) -> &[Vec<u32>] {
        &self.sets
    }

    /// New vertex with agent `i`'s coordinate replaced by `cell`.
    pub fn with_set(&self, agent: usize, cell: Vec<u32>) -> Self {
        let mut sets = self.sets.clone();
        sets[agent] = cell;
        ProductVertex { sets }
    }

    pub fn is_singleton(&self) -> bool {
        self.sets.iter().all(|s| s.len() == 1)
    }

    /// The unique profile of a singleton vertex.
    pub fn singleton_profile(&self) -> Option<TypeProfile> {
        if self.is_singleton() {
            Some(self.sets.iter().map(|s| s[0]).collect())
        } else {
            None
        }
    }

    pub fn product_size(&self) -> u64 {
        self.sets.iter().map(|s| s.len() as u64).product()
    }

    pub fn sum_sizes(&self) -> u64 {
        self.sets.iter().map(|s| s.len() as u64).sum()
    }

    pub fn contains_profile(&self, profile: &[u32]) -> bool {
        profile.len() == self.sets.len()
            && profile
                .iter()
                .zip(&self.sets)
                .all(|(t, set)| set.binary_search(t).is_ok())
    }

    /// Is `other` a coordinatewise subset of `self`?
    pub fn contains_vertex(&self, other: &ProductVertex) -> bool {
        other.sets.len() == self.sets.len()
            && other
                .sets
                .iter()
                .zip(&self.sets)
                .all(|(sub, sup)| sub.iter().all(|t| sup.binary_search(t).is_ok()))
    }

    /// Iterates the flat profile indices of every profile in the vertex.
    pub fn profiles<'a>(&'a self, instance: &ChoiceInstance) -> SubProfiles<'a> {
        SubProfiles::new(
            self.sets.iter().map(|s| s.as_slice()).collect(),
            (0..self.sets.len())
                .map(|i| instance.strides()[i])
                .collect(),
        )
    }

    /// Iterates the opponent sub-product `T'_{-i}`, yielding partial flat
    /// indices (agent `skip`'s coordinate contributes zero).
    pub fn opponents<'a>(&'a self, instance: &ChoiceInstance, skip: usize) -> SubProfiles<'a> {
        let mut sets = Vec::with_capacity(self.sets.len().saturating_sub(1));
        let mut strides = Vec::with_capacity(sets.capacity());
        for (j, set) in self.sets.iter().enumerate() {
            if j != skip {
                sets.push(set.as_slice());
                strides.push(instance.strides()[j]);
            }
        }
        SubProfiles::new(sets, strides)
    }

    /// Decodes a packed opponent index (as yielded by [`Self::opponents`])
    /// into the opponents' type profile, agent order with `skip` removed.
    pub fn decode_opponent(&self, skip: usize, packed: u32) -> TypeProfile {
        let sets: Vec<&[u32]> = self
            .sets
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != skip)
            .map(|(_, s)| s.as_slice())
            .collect();
        decode_packed(&sets, packed)
    }

    /// If the choice rule is constant on this vertex, the constant outcome.
    pub fn constant_outcome(&self, instance: &ChoiceInstance) -> Option<u32> {
        let mut it = self.profiles(instance);
        let first = instance.outcome_at(it.next().expect("vertex is nonempty").0);
        for (idx, _) in it {
            if instance.outcome_at(idx) != first {
                return None;
            }
        }
        Some(first)
    }
}

/// Odometer over a product of member lists, yielding `(flat_index, packed)`
/// where `flat_index` is the stride-weighted sum of the selected types and
/// `packed` counts combinations in iteration order (last agent fastest).
///
/// An empty product (no participating agents) yields exactly one item,
/// `(0, 0)`: the empty profile.
pub struct SubProfiles<'a> {
    sets: Vec<&'a [u32]>,
    strides: Vec<usize>,
    pos: Vec<usize>,
    base: usize,
    packed: u32,
    state: IterState,
}

enum IterState {
    Fresh,
    Running,
    Done,
}

impl<'a> SubProfiles<'a> {
    pub fn new(sets: Vec<&'a [u32]>, strides: Vec<usize>) -> Self {
        debug_assert_eq!(sets.len(), strides.len());
        let base = sets
            .iter()
            .zip(&strides)
            .map(|(s, &st)| s[0] as usize * st)
            .sum();
        SubProfiles {
            pos: vec![0; sets.len()],
            sets,
            strides,
            base,
            packed: 0,
            state: IterState::Fresh,
        }
    }

    /// Total number of combinations.
    pub fn len(&self) -> u64 {
        self.sets.iter().map(|s| s.len() as u64).product()
    }

    pub fn is_empty(&self) -> bool {
        false // the product of zero or more nonempty sets is nonempty
    }
}

impl Iterator for SubProfiles<'_> {
    type Item = (usize, u32);

    fn next(&mut self) -> Option<Self::Item> {
        match self.state {
            IterState::Fresh => {
                self.state = IterState::Running;
                Some((self.base, 0))
            }
            IterState::Running => {
                // advance odometer, last agent fastest
                for j in (0..self.sets.len()).rev() {
                    let set = self.sets[j];
                    if self.pos[j] + 1 < set.len() {
                        self.base -= set[self.pos[j]] as usize * self.strides[j];
                        self.pos[j] += 1;
                        self.base += set[self.pos[j]] as usize * self.strides[j];
                        self.packed += 1;
                        return Some((self.base, self.packed));
                    }
                    self.base -= set[self.pos[j]] as usize * self.strides[j];
                    self.pos[j] = 0;
                    self.base += set[0] as usize * self.strides[j];
                }
                self.state = IterState::Done;
                None
            }
            IterState::Done => None,
        }
    }
}

/// Decodes a packed combination index back into member values,
/// mirroring the [`SubProfiles`] iteration order.
pub fn decode_packed(sets: &[&[u32]], mut packed: u32) -> TypeProfile {
    let mut out = vec![0u32; sets.len()];
    for j in (0..sets.len()).rev() {
        let len = sets[j].len() as u32;
        out[j] = sets[j][(packed % len) as usize];
        packed /= len;
    }
    out
}

/// Builds a full profile by inserting `own` at coordinate `agent` into an
/// opponent profile.
pub fn insert_coordinate(opponents: &[u32], agent: usize, own: u32) -> TypeProfile {
    let mut profile = Vec::with_capacity(opponents.len() + 1);
    profile.extend_from_slice(&opponents[..agent]);
    profile.push(own);
    profile.extend_from_slice(&opponents[agent..]);
    profile
}
