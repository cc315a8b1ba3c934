//! Hereditarily finite sets with canonical, hash-consed representation.
//!
//! Every [`HfSet`] is interned in a process-wide table, so two values are
//! extensionally equal exactly when they are the same node. Elements are kept
//! sorted by the recursive lexicographic order of [`Ord`] and deduplicated.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{LazyLock, Mutex};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HfError {
    #[error("von Neumann stage V_{0} is too large to enumerate (limit 5)")]
    TierTooDeep(u32),
}

struct Node {
    elems: Box<[HfSet]>,
    hash: u64,
    rank: u32,
}

/// A canonical hereditarily finite set.
#[derive(Clone, Copy)]
pub struct HfSet(&'static Node);

type Interner = Mutex<HashMap<Box<[usize]>, &'static Node>>;

static INTERNER: LazyLock<Interner> = LazyLock::new(|| Mutex::new(HashMap::new()));

fn mix(h: u64, x: u64) -> u64 {
    // splitmix64 finaliser over an FNV-style accumulator
    let mut z = (h ^ x)
        .wrapping_mul(0x100_0000_01b3)
        .wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl HfSet {
    fn ptr(self) -> usize {
        self.0 as *const Node as usize
    }

    /// Interns an already sorted, duplicate-free element list.
    fn intern(elems: Vec<HfSet>) -> HfSet {
        let key: Box<[usize]> = elems.iter().map(|e| e.ptr()).collect();
        let mut table = INTERNER.lock().expect("interner poisoned");
        if let Some(node) = table.get(&key) {
            return HfSet(node);
        }
        let hash = elems
            .iter()
            .fold(0xcbf2_9ce4_8422_2325, |h, e| mix(h, e.0.hash));
        let rank = elems.iter().map(|e| e.0.rank + 1).max().unwrap_or(0);
        let node: &'static Node = Box::leak(Box::new(Node {
            elems: elems.into_boxed_slice(),
            hash,
            rank,
        }));
        table.insert(key, node);
        HfSet(node)
    }

    /// Builds a set from arbitrary elements, sorting and deduplicating.
    pub fn from_elems(mut elems: Vec<HfSet>) -> HfSet {
        elems.sort_unstable();
        elems.dedup();
        HfSet::intern(elems)
    }

    pub fn empty() -> HfSet {
        HfSet::intern(Vec::new())
    }

    pub fn elems(&self) -> &'static [HfSet] {
        &self.0.elems
    }

    pub fn len(&self) -> usize {
        self.0.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.elems.is_empty()
    }

    /// Von Neumann rank: the least `n` with `self ∈ V_{n+1}`.
    pub fn rank(&self) -> u32 {
        self.0.rank
    }

    pub fn contains(&self, a: HfSet) -> bool {
        self.0.elems.binary_search(&a).is_ok()
    }
}

impl PartialEq for HfSet {
    fn eq(&self, other: &HfSet) -> bool {
        std::ptr::eq(self.0, other.0)
    }
}

impl Eq for HfSet {}

impl Hash for HfSet {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl Ord for HfSet {
    fn cmp(&self, other: &HfSet) -> Ordering {
        if self == other {
            return Ordering::Equal;
        }
        let (a, b) = (self.elems(), other.elems());
        for (x, y) in a.iter().zip(b) {
            match x.cmp(y) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        a.len().cmp(&b.len())
    }
}

impl PartialOrd for HfSet {
    fn partial_cmp(&self, other: &HfSet) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Nested-brace rendering, e.g. `{{},{{}}}`.
impl fmt::Display for HfSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, e) in self.elems().iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{e}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for HfSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Von Neumann numerals below 8 print as digits, everything else as braces.
pub fn render(x: HfSet) -> String {
    if let Some(k) = (0..8).find(|&k| vn(k) == x) {
        return k.to_string();
    }
    let parts: Vec<String> = x.elems().iter().map(|a| render(*a)).collect();
    format!("{{{}}}", parts.join(", "))
}

// ---------------------------------------------------------------------------
// Set operations.

pub fn empty() -> HfSet {
    HfSet::empty()
}

pub fn singleton(a: HfSet) -> HfSet {
    HfSet::intern(vec![a])
}

pub fn upair(a: HfSet, b: HfSet) -> HfSet {
    match a.cmp(&b) {
        Ordering::Less => HfSet::intern(vec![a, b]),
        Ordering::Equal => HfSet::intern(vec![a]),
        Ordering::Greater => HfSet::intern(vec![b, a]),
    }
}

pub fn binary_union(x: HfSet, y: HfSet) -> HfSet {
    let (a, b) = (x.elems(), y.elems());
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    HfSet::intern(out)
}

pub fn big_union(x: HfSet) -> HfSet {
    let all: Vec<HfSet> = x
        .elems()
        .iter()
        .flat_map(|z| z.elems().iter().copied())
        .collect();
    HfSet::from_elems(all)
}

/// All subsets of `x`; has `2^|x|` elements.
pub fn powerset(x: HfSet) -> HfSet {
    HfSet::from_elems(subsets(x.elems()))
}

/// Every subset of a sorted element slice, each as a canonical set.
pub fn subsets(elems: &[HfSet]) -> Vec<HfSet> {
    let n = elems.len();
    assert!(n < 32, "powerset of a {n}-element set is out of reach");
    (0u64..1 << n)
        .map(|mask| {
            let picked: Vec<HfSet> = (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| elems[i])
                .collect();
            // a subsequence of a sorted slice is sorted
            HfSet::intern(picked)
        })
        .collect()
}

pub fn mem(a: HfSet, x: HfSet) -> bool {
    x.contains(a)
}

pub fn subset(x: HfSet, y: HfSet) -> bool {
    x.elems().iter().all(|a| y.contains(*a))
}

/// `x ∪ {x}`.
pub fn successor(x: HfSet) -> HfSet {
    binary_union(x, singleton(x))
}

/// The von Neumann numeral `n`.
pub fn vn(n: u32) -> HfSet {
    (0..n).fold(empty(), |acc, _| successor(acc))
}

/// Kuratowski pair `{{a},{a,b}}`.
pub fn kpair(a: HfSet, b: HfSet) -> HfSet {
    upair(singleton(a), upair(a, b))
}

/// Decodes a Kuratowski pair by its membership criteria: the first
/// projection lies in every member, the second in exactly one.
pub fn kproj(q: HfSet) -> Option<(HfSet, HfSet)> {
    let members = q.elems();
    let first_candidates: Vec<HfSet> = members
        .iter()
        .flat_map(|x| x.elems().iter().copied())
        .filter(|a| members.iter().all(|x| x.contains(*a)))
        .collect();
    let mut first = first_candidates;
    first.sort_unstable();
    first.dedup();
    let [a] = first[..] else { return None };
    let mut seconds: Vec<HfSet> = members
        .iter()
        .flat_map(|x| x.elems().iter().copied())
        .filter(|b| members.iter().filter(|x| x.contains(*b)).count() == 1)
        .collect();
    seconds.sort_unstable();
    seconds.dedup();
    let b = match seconds[..] {
        [b] => b,
        // <a,a> = {{a}}: a is in exactly one member, the only one
        [] if members.len() == 1 => a,
        _ => return None,
    };
    (kpair(a, b) == q).then_some((a, b))
}

pub fn cartesian(x: HfSet, y: HfSet) -> HfSet {
    let pairs: Vec<HfSet> = x
        .elems()
        .iter()
        .flat_map(|c| y.elems().iter().map(move |d| kpair(*c, *d)))
        .collect();
    HfSet::from_elems(pairs)
}

pub fn is_transitive(x: HfSet) -> bool {
    x.elems().iter().all(|y| subset(*y, x))
}

/// Transitive and totally ordered by membership.
pub fn is_ordinal(x: HfSet) -> bool {
    let e = x.elems();
    is_transitive(x)
        && e.iter()
            .all(|y| e.iter().all(|z| y == z || z.contains(*y) || y.contains(*z)))
}

/// The von Neumann stage `V_n`, listed by rank and then canonical order.
pub fn v_tier(n: u32) -> Result<Vec<HfSet>, HfError> {
    if n > 5 {
        return Err(HfError::TierTooDeep(n));
    }
    let mut tier: Vec<HfSet> = Vec::new();
    for _ in 0..n {
        let mut next = subsets(&sorted(&tier));
        next.sort_by_key(|s| (s.rank(), *s));
        tier = next;
    }
    Ok(tier)
}

fn sorted(v: &[HfSet]) -> Vec<HfSet> {
    let mut v = v.to_vec();
    v.sort_unstable();
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_constructions() {
        assert_eq!(powerset(empty()), singleton(empty()));
        assert_eq!(successor(empty()), vn(1));
        assert_eq!(vn(2), upair(empty(), singleton(empty())));
        let x = upair(singleton(empty()), singleton(singleton(empty())));
        assert_eq!(big_union(x), vn(2));
        assert_eq!(powerset(vn(3)).len(), 8);
    }

    #[test]
    fn rendering() {
        assert_eq!(vn(2).to_string(), "{{},{{}}}");
        assert_eq!(empty().to_string(), "{}");
    }

    #[test]
    fn kuratowski_facts() {
        let a = vn(2);
        assert_eq!(kpair(a, a), singleton(singleton(a)));
        assert_eq!(singleton(kpair(vn(0), vn(0))), kpair(vn(1), vn(1)));
        assert_eq!(kproj(kpair(empty(), vn(1))), Some((empty(), vn(1))));
        assert_eq!(kproj(kpair(a, a)), Some((a, a)));
        assert_eq!(kproj(singleton(empty())), None);
        assert_eq!(kproj(empty()), None);
    }

    #[test]
    fn cartesian_small() {
        let one = singleton(empty());
        assert_eq!(cartesian(one, one), singleton(kpair(empty(), empty())));
        assert_eq!(cartesian(one, one).to_string(), "{{{{}}}}");
    }

    #[test]
    fn ordinals() {
        assert!(is_ordinal(vn(3)));
        assert!(!is_ordinal(singleton(singleton(empty()))));
        assert!(!is_transitive(singleton(singleton(empty()))));
    }

    #[test]
    fn tiers() {
        let sizes: Vec<usize> = (0..=5).map(|n| v_tier(n).unwrap().len()).collect();
        assert_eq!(sizes, vec![0, 1, 2, 4, 16, 65536]);
        assert!(v_tier(6).is_err());
    }

    #[test]
    fn rank_matches_tier() {
        let v4 = v_tier(4).unwrap();
        for x in &v4 {
            assert!(x.rank() < 4);
        }
        assert_eq!(vn(3).rank(), 3);
    }
}
