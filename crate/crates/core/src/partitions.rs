//! Exact combinatorics behind the trace-moment expansion.
//!
//! Ground sets are `{1, ..., k}` and matrix indices are `{1, ..., n}`; all
//! public APIs here are 1-based.
//!
//! A consistent sequence `((p_1, q_1), ..., (p_k, q_k))` has `q_j = p_{j+1}`
//! with `k + 1` identified with 1, so it is determined by the closed walk
//! `v_1 -> v_2 -> ... -> v_k -> v_1` with `p_j = v_j`, `q_j = v_{j+1}`.

use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;

use crate::error::{Error, Result};

/// Largest ground set we enumerate partitions of.
pub const MAX_PARTITION_K: usize = 12;

/// Largest number of consistent sequences (`n^k`) we enumerate.
pub const CONSISTENT_BUDGET: u128 = 10_000_000;

/// A set partition of `{1..k}`, stored both as blocks (sorted by least
/// element, each block ascending) and as a restricted growth string
/// `class[i]` giving the block of element `i + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    class: Vec<usize>,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// Canonical partition induced by equal labels: `i ~ j` iff `labels[i] == labels[j]`.
    pub fn from_labels<T: Eq + Hash>(labels: &[T]) -> Self {
        let mut ids: HashMap<&T, usize> = HashMap::new();
        let class = labels
            .iter()
            .map(|l| {
                let next = ids.len();
                *ids.entry(l).or_insert(next)
            })
            .collect();
        Self::from_rgs(class)
    }

    fn from_rgs(class: Vec<usize>) -> Self {
        let nblocks = class.iter().max().map_or(0, |m| m + 1);
        let mut blocks = vec![Vec::new(); nblocks];
        for (i, &c) in class.iter().enumerate() {
            blocks[c].push(i + 1);
        }
        Partition { class, blocks }
    }

    /// Builds a partition of `{1..k}` from 1-based blocks in any order.
    pub fn from_blocks(k: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        let mut labels = vec![usize::MAX; k];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::Input("partition blocks must be nonempty".into()));
            }
            for &e in block {
                if e == 0 || e > k {
                    return Err(Error::Input(format!("element {e} outside 1..={k}")));
                }
                if labels[e - 1] != usize::MAX {
                    return Err(Error::Input(format!("element {e} appears twice")));
                }
                labels[e - 1] = b;
            }
        }
        if let Some(i) = labels.iter().position(|&l| l == usize::MAX) {
            return Err(Error::Input(format!("element {} not covered", i + 1)));
        }
        Ok(Self::from_labels(&labels))
    }

    pub fn k(&self) -> usize {
        self.class.len()
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// 0-based block index of each element, in element order.
    pub fn class_vector(&self) -> &[usize] {
        &self.class
    }

    /// `i ~ j` for 1-based elements.
    pub fn equivalent(&self, i: usize, j: usize) -> bool {
        self.class[i - 1] == self.class[j - 1]
    }

    pub fn is_pair_partition(&self) -> bool {
        self.blocks.iter().all(|b| b.len() == 2)
    }

    /// Image under `i -> k + 1 - i`.
    pub fn reflect(&self) -> Partition {
        let labels: Vec<usize> = self.class.iter().rev().copied().collect();
        Self::from_labels(&labels)
    }

    /// The partition with every element in its own block.
    pub fn singletons(k: usize) -> Partition {
        Self::from_rgs((0..k).collect())
    }
}

/// Blocks joined by `|`, elements within a block by `.`, e.g. `1.3|2.4`.
impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .blocks
            .iter()
            .map(|b| b.iter().map(usize::to_string).collect::<Vec<_>>().join("."))
            .collect();
        f.write_str(&parts.join("|"))
    }
}

impl std::str::FromStr for Partition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let blocks = s
            .split('|')
            .map(|b| {
                b.split('.')
                    .map(|e| {
                        e.trim()
                            .parse::<usize>()
                            .map_err(|_| Error::Input(format!("bad partition element `{e}`")))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let k = blocks.iter().map(Vec::len).sum();
        Partition::from_blocks(k, &blocks)
    }
}

/// A partition whose blocks all have exactly two elements.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairPartition(Partition);

impl PairPartition {
    pub fn from_pairs(k: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let blocks: Vec<Vec<usize>> = pairs.iter().map(|&(a, b)| vec![a, b]).collect();
        Partition::from_blocks(k, &blocks)?.try_into()
    }

    pub fn partition(&self) -> &Partition {
        &self.0
    }

    pub fn k(&self) -> usize {
        self.0.k()
    }

    /// Blocks as `(i, j)` with `i < j`, sorted by `i`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0.blocks.iter().map(|b| (b[0], b[1]))
    }

    /// True if some `i < j < l < m` has `i ~ l` and `j ~ m`.
    pub fn is_crossing(&self) -> bool {
        is_crossing(self)
    }

    pub fn reflect(&self) -> PairPartition {
        PairPartition(self.0.reflect())
    }
}

impl TryFrom<Partition> for PairPartition {
    type Error = Error;

    fn try_from(p: Partition) -> Result<Self> {
        if p.is_pair_partition() {
            Ok(PairPartition(p))
        } else {
            Err(Error::Input(format!("{p} is not a pair partition")))
        }
    }
}

impl fmt::Display for PairPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

fn check_partition_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Domain("ground set size must be at least 1".into()));
    }
    if k > MAX_PARTITION_K {
        return Err(Error::Resource {
            what: format!("partitions of a {k}-element set"),
            needed: k as u128,
            budget: MAX_PARTITION_K as u128,
        });
    }
    Ok(())
}

/// All set partitions of `{1..k}` in lexicographic order of their restricted
/// growth strings.
pub fn enumerate_partitions(k: usize) -> Result<Vec<Partition>> {
    check_partition_k(k)?;
    let mut out = Vec::new();
    let mut rgs = vec![0usize; k];
    // max_prefix[i] = max(rgs[0..=i])
    let mut max_prefix = vec![0usize; k];
    loop {
        out.push(Partition::from_rgs(rgs.clone()));
        // rightmost position that can still grow
        let mut i = k - 1;
        loop {
            if i == 0 {
                return Ok(out);
            }
            if rgs[i] <= max_prefix[i - 1] {
                break;
            }
            i -= 1;
        }
        rgs[i] += 1;
        max_prefix[i] = max_prefix[i - 1].max(rgs[i]);
        for j in i + 1..k {
            rgs[j] = 0;
            max_prefix[j] = max_prefix[i];
        }
    }
}

/// All perfect matchings of `{1..k}`, sorted canonically.
pub fn enumerate_pair_partitions(k: usize) -> Result<Vec<PairPartition>> {
    check_partition_k(k)?;
    if k % 2 == 1 {
        return Err(Error::Domain(format!("no pair partitions of an odd set (k = {k})")));
    }
    fn extend(class: &mut Vec<Option<usize>>, next_block: usize, out: &mut Vec<PairPartition>) {
        let Some(first) = class.iter().position(Option::is_none) else {
            let labels: Vec<usize> = class.iter().map(|c| c.unwrap()).collect();
            out.push(PairPartition(Partition::from_labels(&labels)));
            return;
        };
        class[first] = Some(next_block);
        for partner in first + 1..class.len() {
            if class[partner].is_none() {
                class[partner] = Some(next_block);
                extend(class, next_block + 1, out);
                class[partner] = None;
            }
        }
        class[first] = None;
    }
    let mut out = Vec::new();
    extend(&mut vec![None; k], 0, &mut out);
    out.sort();
    Ok(out)
}

pub fn is_crossing(pp: &PairPartition) -> bool {
    let c = pp.0.class_vector();
    let k = c.len();
    for i in 0..k {
        for j in i + 1..k {
            for l in j + 1..k {
                if c[i] != c[l] {
                    continue;
                }
                for m in l + 1..k {
                    if c[j] == c[m] {
                        return true;
                    }
                }
            }
        }
    }
    false
}

/// Number of non-crossing pair partitions of `{1..k}`.
pub fn count_ncpp(k: usize) -> Result<u64> {
    Ok(enumerate_pair_partitions(k)?
        .iter()
        .filter(|pp| !pp.is_crossing())
        .count() as u64)
}

/// A cyclically consistent k-tuple of index pairs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConsistentSequence {
    walk: Vec<usize>,
}

impl ConsistentSequence {
    /// From the closed walk `v_1, ..., v_k` (1-based indices).
    pub fn from_walk(walk: Vec<usize>) -> Result<Self> {
        if walk.is_empty() {
            return Err(Error::Domain("a consistent sequence has at least one pair".into()));
        }
        if walk.contains(&0) {
            return Err(Error::Input("indices are 1-based".into()));
        }
        Ok(ConsistentSequence { walk })
    }

    /// From explicit pairs; fails unless `q_j = p_{j+1}` cyclically.
    pub fn from_pairs(pairs: &[(usize, usize)]) -> Result<Self> {
        let k = pairs.len();
        for j in 0..k {
            let (_, q) = pairs[j];
            let (p_next, _) = pairs[(j + 1) % k];
            if q != p_next {
                return Err(Error::Input(format!(
                    "pair {} ends at {q} but pair {} starts at {p_next}",
                    j + 1,
                    (j + 1) % k + 1
                )));
            }
        }
        Self::from_walk(pairs.iter().map(|&(p, _)| p).collect())
    }

    pub fn k(&self) -> usize {
        self.walk.len()
    }

    pub fn walk(&self) -> &[usize] {
        &self.walk
    }

    /// `(p_j, q_j)` for `j = 1..k`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let k = self.walk.len();
        (0..k).map(move |j| (self.walk[j], self.walk[(j + 1) % k]))
    }

    /// `|q_j - p_j|` for each pair.
    pub fn gaps(&self) -> Vec<usize> {
        self.pairs().map(|(p, q)| p.abs_diff(q)).collect()
    }
}

/// Iterator over all of `T_n(k)` in lexicographic walk order.
#[derive(Debug, Clone)]
pub struct ConsistentSequences {
    n: usize,
    next: Option<Vec<usize>>,
}

impl Iterator for ConsistentSequences {
    type Item = ConsistentSequence;

    fn next(&mut self) -> Option<ConsistentSequence> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        if advance_walk(&mut succ, self.n) {
            self.next = Some(succ);
        }
        Some(ConsistentSequence { walk: current })
    }
}

/// Odometer step over `{1..n}^k`; false once the last walk has been passed.
fn advance_walk(walk: &mut [usize], n: usize) -> bool {
    for v in walk.iter_mut().rev() {
        if *v < n {
            *v += 1;
            return true;
        }
        *v = 1;
    }
    false
}

pub(crate) fn check_budget(n: usize, k: usize, budget: u128) -> Result<()> {
    if n == 0 || k == 0 {
        return Err(Error::Domain(format!("need n >= 1 and k >= 1, got n = {n}, k = {k}")));
    }
    let needed = (n as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    if needed > budget {
        return Err(Error::Resource {
            what: format!("consistent sequences for n = {n}, k = {k}"),
            needed,
            budget,
        });
    }
    Ok(())
}

/// All `n^k` consistent sequences, lazily. Fails up front past [`CONSISTENT_BUDGET`].
pub fn enumerate_consistent(n: usize, k: usize) -> Result<ConsistentSequences> {
    check_budget(n, k, CONSISTENT_BUDGET)?;
    Ok(ConsistentSequences {
        n,
        next: Some(vec![1; k]),
    })
}

/// Calls `f` on every closed walk in `{1..n}^k` without allocating per walk.
/// The caller is responsible for the budget.
pub(crate) fn for_each_walk(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    let mut walk = vec![1usize; k];
    loop {
        f(&walk);
        if !advance_walk(&mut walk, n) {
            break;
        }
    }
}

/// The partition grouping pair indices by equal gap `|q_j - p_j|`.
pub fn partition_of_sequence(seq: &ConsistentSequence) -> Partition {
    Partition::from_labels(&seq.gaps())
}

fn walk_gap(walk: &[usize], j: usize) -> usize {
    walk[j].abs_diff(walk[(j + 1) % walk.len()])
}

/// Signed step `q_j - p_j`.
fn walk_step(walk: &[usize], j: usize) -> isize {
    walk[(j + 1) % walk.len()] as isize - walk[j] as isize
}

/// `|gap_i| == |gap_j|` exactly when `i ~ j`.
pub(crate) fn walk_is_consistent_with(walk: &[usize], class: &[usize]) -> bool {
    let k = walk.len();
    for i in 0..k {
        let gi = walk_gap(walk, i);
        for j in i + 1..k {
            if (gi == walk_gap(walk, j)) != (class[i] == class[j]) {
                return false;
            }
        }
    }
    true
}

/// Paired steps run in opposite directions: `q_i - p_i = p_j - q_j` for each block.
pub(crate) fn walk_is_star(walk: &[usize], pp: &PairPartition) -> bool {
    pp.pairs()
        .all(|(i, j)| walk_step(walk, i - 1) == -walk_step(walk, j - 1))
}

fn check_ground_set(n: usize, pi: &Partition) -> Result<()> {
    check_budget(n, pi.k(), CONSISTENT_BUDGET)
}

/// `#S_n(pi)`: consistent sequences whose gap pattern is exactly `pi`.
pub fn count_s(n: usize, pi: &Partition) -> Result<u64> {
    check_ground_set(n, pi)?;
    let class = pi.class_vector();
    let mut count = 0u64;
    for_each_walk(n, pi.k(), |w| {
        if walk_is_consistent_with(w, class) {
            count += 1;
        }
    });
    Ok(count)
}

/// `#S_n*(pi)`: the pi-consistent sequences whose paired steps are reversed.
pub fn count_s_star(n: usize, pi: &PairPartition) -> Result<u64> {
    Ok(count_s_and_star(n, pi)?.1)
}

/// `(#S_n(pi), #S_n*(pi))` in one pass.
pub fn count_s_and_star(n: usize, pi: &PairPartition) -> Result<(u64, u64)> {
    check_ground_set(n, pi.partition())?;
    let class = pi.partition().class_vector();
    let (mut s, mut star) = (0u64, 0u64);
    for_each_walk(n, pi.k(), |w| {
        if walk_is_consistent_with(w, class) {
            s += 1;
            if walk_is_star(w, pi) {
                star += 1;
            }
        }
    });
    Ok((s, star))
}

/// `#S_n*(pi) / n^{k/2 + 1}`.
pub fn star_ratio(n: usize, pi: &PairPartition) -> Result<f64> {
    let star = count_s_star(n, pi)?;
    Ok(star as f64 / (n as f64).powi(pi.k() as i32 / 2 + 1))
}

/// `#S_n(pi) - #S_n*(pi)`.
pub fn residual_count(n: usize, pi: &PairPartition) -> Result<u64> {
    let (s, star) = count_s_and_star(n, pi)?;
    Ok(s - star)
}
