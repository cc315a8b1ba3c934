//! Finite stages of the tagged cumulative hierarchy.
//!
//! `W_0 = {}` and `W_{n+1} = ({0} x P(W_n)) ∪ ({1} x W_n^2)`, with von
//! Neumann tags and Kuratowski products. Objects tagged 0 model sets
//! ("m-sets"), objects tagged 1 model primitive pairs ("m-pairs").

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::hf::{self, HfSet};

/// Deepest stage that can be materialised; `|W_5|` is about `2^131361`.
pub const MAX_DEPTH: u32 = 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HierarchyError {
    #[error("depth {0} exceeds the largest buildable stage W_{MAX_DEPTH}")]
    DepthExceeded(u32),
    #[error("{0} is not a member of W_{1}")]
    NotInUniverse(HfSet, u32),
}

fn tag_set() -> HfSet {
    hf::vn(0)
}

fn tag_pair() -> HfSet {
    hf::vn(1)
}

/// `<0, contents>`.
pub fn m_set(contents: HfSet) -> HfSet {
    hf::kpair(tag_set(), contents)
}

/// `<1, <a, b>>`.
pub fn m_pair(a: HfSet, b: HfSet) -> HfSet {
    hf::kpair(tag_pair(), hf::kpair(a, b))
}

/// Decoded shape of a tagged value, without any rank information.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tagged {
    Set(HfSet),
    Pair(HfSet, HfSet),
}

/// Reads the tag structure of an arbitrary HF value.
pub fn decode(x: HfSet) -> Option<Tagged> {
    let (tag, body) = hf::kproj(x)?;
    if tag == tag_set() {
        Some(Tagged::Set(body))
    } else if tag == tag_pair() {
        let (a, b) = hf::kproj(body)?;
        Some(Tagged::Pair(a, b))
    } else {
        None
    }
}

/// `a ∈̂ x`: `x = <0, y>` and `a ∈ y`.
pub fn mem_hat(a: HfSet, x: HfSet) -> bool {
    matches!(decode(x), Some(Tagged::Set(y)) if y.contains(a))
}

/// `a π̂1 p`: `p = <1, <a, v>>`.
pub fn pi1_hat(a: HfSet, p: HfSet) -> bool {
    matches!(decode(p), Some(Tagged::Pair(u, _)) if u == a)
}

/// `a π̂2 p`: `p = <1, <u, a>>`.
pub fn pi2_hat(a: HfSet, p: HfSet) -> bool {
    matches!(decode(p), Some(Tagged::Pair(_, v)) if v == a)
}

/// Readable form of a tagged value: m-sets as `{..}` of their contents,
/// m-pairs as `(a, b)`. Untagged input falls back to raw notation.
pub fn render(x: HfSet) -> String {
    match decode(x) {
        Some(Tagged::Set(contents)) => {
            let parts: Vec<String> = contents.elems().iter().map(|a| render(*a)).collect();
            format!("{{{}}}", parts.join(", "))
        }
        Some(Tagged::Pair(a, b)) => format!("({}, {})", render(a), render(b)),
        None => x.to_string(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MKind {
    MSet { contents: HfSet },
    MPair { first: HfSet, second: HfSet },
}

/// A classified member of the hierarchy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MObject {
    pub value: HfSet,
    pub kind: MKind,
    pub rank: u32,
}

impl MObject {
    pub fn is_set(&self) -> bool {
        matches!(self.kind, MKind::MSet { .. })
    }
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct TierStats {
    pub tier: u32,
    pub size: usize,
    pub m_sets: usize,
    pub m_pairs: usize,
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct UniverseStats {
    pub depth: u32,
    pub tier_sizes: Vec<usize>,
    pub tiers: Vec<TierStats>,
}

/// The materialised stages `W_0 ..= W_depth`.
///
/// Members of `W_depth` are listed by rank, then canonical order, so `W_k`
/// is always the prefix of length `tier_size(k)`.
#[derive(Debug)]
pub struct WUniverse {
    depth: u32,
    members: Vec<HfSet>,
    kinds: Vec<Tagged>,
    ranks: Vec<u32>,
    index: HashMap<HfSet, u32>,
    tier_sizes: Vec<usize>,
}

pub fn build_w(depth: u32) -> Result<WUniverse, HierarchyError> {
    if depth > MAX_DEPTH {
        return Err(HierarchyError::DepthExceeded(depth));
    }
    let mut members: Vec<HfSet> = Vec::new();
    let mut kinds: Vec<Tagged> = Vec::new();
    let mut ranks: Vec<u32> = Vec::new();
    let mut index: HashMap<HfSet, u32> = HashMap::new();
    let mut tier_sizes = vec![0];

    for stage in 1..=depth {
        let mut prev: Vec<HfSet> = members.clone();
        prev.sort_unstable();
        let mut fresh: Vec<(HfSet, Tagged)> = Vec::new();
        for contents in hf::subsets(&prev) {
            let value = m_set(contents);
            if !index.contains_key(&value) {
                fresh.push((value, Tagged::Set(contents)));
            }
        }
        for &a in &prev {
            for &b in &prev {
                let value = m_pair(a, b);
                if !index.contains_key(&value) {
                    fresh.push((value, Tagged::Pair(a, b)));
                }
            }
        }
        fresh.sort_unstable_by_key(|(v, _)| *v);
        for (value, kind) in fresh {
            index.insert(value, members.len() as u32);
            members.push(value);
            kinds.push(kind);
            ranks.push(stage);
        }
        tier_sizes.push(members.len());
    }
    Ok(WUniverse {
        depth,
        members,
        kinds,
        ranks,
        index,
        tier_sizes,
    })
}

impl WUniverse {
    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// All of `W_depth`, ordered by rank.
    pub fn members(&self) -> &[HfSet] {
        &self.members
    }

    pub fn tier(&self, k: u32) -> &[HfSet] {
        &self.members[..self.tier_size(k)]
    }

    pub fn tier_size(&self, k: u32) -> usize {
        self.tier_sizes[k.min(self.depth) as usize]
    }

    pub fn tier_sizes(&self) -> &[usize] {
        &self.tier_sizes
    }

    pub fn index_of(&self, x: HfSet) -> Option<u32> {
        self.index.get(&x).copied()
    }

    pub fn contains(&self, x: HfSet) -> bool {
        self.index.contains_key(&x)
    }

    /// Least stage containing `x`.
    pub fn rank(&self, x: HfSet) -> Option<u32> {
        self.index_of(x).map(|i| self.ranks[i as usize])
    }

    pub fn rank_at(&self, i: u32) -> u32 {
        self.ranks[i as usize]
    }

    pub fn kind_at(&self, i: u32) -> Tagged {
        self.kinds[i as usize]
    }

    pub fn classify(&self, x: HfSet) -> Result<MObject, HierarchyError> {
        let i = self
            .index_of(x)
            .ok_or(HierarchyError::NotInUniverse(x, self.depth))?;
        let kind = match self.kinds[i as usize] {
            Tagged::Set(contents) => MKind::MSet { contents },
            Tagged::Pair(first, second) => MKind::MPair { first, second },
        };
        Ok(MObject {
            value: x,
            kind,
            rank: self.ranks[i as usize],
        })
    }

    /// A pure set is an m-set all of whose members are pure sets.
    pub fn is_pure(&self, x: HfSet) -> Result<bool, HierarchyError> {
        let i = self
            .index_of(x)
            .ok_or(HierarchyError::NotInUniverse(x, self.depth))?;
        Ok(self.purity_table()[i as usize])
    }

    /// Purity of every member, by index. Computed bottom-up: members of an
    /// m-set always have strictly smaller rank, hence smaller index.
    pub fn purity_table(&self) -> Vec<bool> {
        let mut pure = vec![false; self.members.len()];
        for i in 0..self.members.len() {
            if let Tagged::Set(contents) = self.kinds[i] {
                pure[i] = contents
                    .elems()
                    .iter()
                    .all(|a| pure[self.index[a] as usize]);
            }
        }
        pure
    }

    pub fn stats(&self) -> UniverseStats {
        let tiers = (0..=self.depth)
            .map(|k| {
                let n = self.tier_size(k);
                let m_sets = self.kinds[..n]
                    .iter()
                    .filter(|t| matches!(t, Tagged::Set(_)))
                    .count();
                TierStats {
                    tier: k,
                    size: n,
                    m_sets,
                    m_pairs: n - m_sets,
                }
            })
            .collect();
        UniverseStats {
            depth: self.depth,
            tier_sizes: self.tier_sizes.clone(),
            tiers,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hf::{empty, singleton, vn};

    #[test]
    fn small_tiers() {
        let w = build_w(2).unwrap();
        assert_eq!(w.tier_sizes(), &[0, 1, 3]);
        let w3 = build_w(3).unwrap();
        assert_eq!(w3.tier_sizes(), &[0, 1, 3, 17]);
        assert!(build_w(5).is_err());
    }

    #[test]
    fn sole_member_of_w1() {
        let w = build_w(1).unwrap();
        assert_eq!(w.members(), &[m_set(empty())]);
    }

    #[test]
    fn classify_examples() {
        let w = build_w(3).unwrap();
        let e = m_set(empty());
        let o = w.classify(e).unwrap();
        assert_eq!(o.kind, MKind::MSet { contents: empty() });
        assert_eq!(o.rank, 1);

        let p = m_pair(e, e);
        let o = w.classify(p).unwrap();
        assert_eq!(
            o.kind,
            MKind::MPair {
                first: e,
                second: e
            }
        );
        assert_eq!(o.rank, 2);

        assert!(matches!(
            w.classify(vn(2)),
            Err(HierarchyError::NotInUniverse(..))
        ));
    }

    #[test]
    fn hat_relations() {
        let e = m_set(empty());
        assert!(mem_hat(e, m_set(singleton(e))));
        let p = m_pair(e, m_set(singleton(e)));
        assert!(!mem_hat(e, p));
        assert!(pi1_hat(e, p) && pi2_hat(m_set(singleton(e)), p));
        assert!(!pi1_hat(e, e));
    }

    #[test]
    fn purity() {
        let w = build_w(3).unwrap();
        let e = m_set(empty());
        assert!(w.is_pure(e).unwrap());
        let p = m_pair(e, e);
        assert!(!w.is_pure(p).unwrap());
        assert!(!w.is_pure(m_set(singleton(p))).unwrap());
        assert!(w.is_pure(m_set(singleton(e))).unwrap());
    }

    #[test]
    fn render_examples() {
        let e = m_set(empty());
        assert_eq!(render(e), "{}");
        assert_eq!(render(m_pair(e, m_set(singleton(e)))), "({}, {{}})");
        assert_eq!(render(vn(2)), vn(2).to_string());
    }

    #[test]
    fn stats_counts() {
        let w = build_w(3).unwrap();
        let s = w.stats();
        assert_eq!(s.tiers[3].m_sets, 8);
        assert_eq!(s.tiers[3].m_pairs, 9);
    }
}
