//! Set partitions of `[n] = {1, ..., n}` in canonical (order of appearance) form.

use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::caps;
use crate::{Error, Result};

/// A partition of `{1, ..., n}`. Blocks hold 1-based indices in increasing
/// order and are listed by their least element.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<usize>>", into = "Vec<Vec<usize>>")]
pub struct Partition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// Builds a partition from arbitrary-order blocks, canonicalizing them.
    pub fn new(mut blocks: Vec<Vec<usize>>) -> Result<Self> {
        if blocks.iter().any(|b| b.is_empty()) {
            return Err(Error::arg("partition blocks must be non-empty"));
        }
        for b in blocks.iter_mut() {
            b.sort_unstable();
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        let n: usize = blocks.iter().map(Vec::len).sum();
        if n == 0 {
            return Err(Error::arg("partition of an empty set"));
        }
        let mut seen = vec![false; n + 1];
        for &i in blocks.iter().flatten() {
            if i == 0 || i > n {
                return Err(Error::arg(format!("index {i} outside 1..={n}")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::arg(format!("index {i} appears twice")));
            }
        }
        Ok(Self { n, blocks })
    }

    /// Partition whose blocks are the classes of equal entries of a
    /// restricted-growth string (`rgs[0] == 0`, `rgs[i] <= 1 + max(rgs[..i])`).
    pub(crate) fn from_rgs(rgs: &[usize]) -> Self {
        let k = rgs.iter().copied().max().map_or(0, |m| m + 1);
        let mut blocks = vec![Vec::new(); k];
        for (i, &b) in rgs.iter().enumerate() {
            blocks[b].push(i + 1);
        }
        Self {
            n: rgs.len(),
            blocks,
        }
    }

    /// Consecutive blocks with the given sizes: `(2, 1)` gives `{{1,2},{3}}`.
    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        let bs = BlockSizes::new(sizes.to_vec())?;
        if bs.n() == 0 {
            return Err(Error::arg("partition of an empty set"));
        }
        let mut next = 1;
        let blocks = bs
            .sizes()
            .iter()
            .map(|&s| {
                let b: Vec<usize> = (next..next + s).collect();
                next += s;
                b
            })
            .collect();
        Ok(Self { n: bs.n(), blocks })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// 0-based block index of every element, in element order.
    pub fn assignment(&self) -> Vec<usize> {
        let mut a = vec![0; self.n];
        for (c, b) in self.blocks.iter().enumerate() {
            for &i in b {
                a[i - 1] = c;
            }
        }
        a
    }

    pub fn block_sizes(&self) -> BlockSizes {
        BlockSizes {
            sizes: self.blocks.iter().map(Vec::len).collect(),
        }
    }

    /// Restriction to `{1, ..., m}`.
    pub fn restrict(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.n {
            return Err(Error::arg(format!(
                "restriction size {m} outside 1..={}",
                self.n
            )));
        }
        // Least elements are preserved, so appearance order is preserved too.
        let blocks = self
            .blocks
            .iter()
            .map(|b| b.iter().copied().take_while(|&i| i <= m).collect::<Vec<_>>())
            .filter(|b| !b.is_empty())
            .collect();
        Ok(Self { n: m, blocks })
    }

    /// True when every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        if self.n != coarser.n {
            return false;
        }
        let a = coarser.assignment();
        self.blocks
            .iter()
            .all(|b| b.iter().all(|&i| a[i - 1] == a[b[0] - 1]))
    }
}

impl TryFrom<Vec<Vec<usize>>> for Partition {
    type Error = Error;

    fn try_from(blocks: Vec<Vec<usize>>) -> Result<Self> {
        Partition::new(blocks)
    }
}

impl From<Partition> for Vec<Vec<usize>> {
    fn from(p: Partition) -> Self {
        p.blocks
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (c, b) in self.blocks.iter().enumerate() {
            if c > 0 {
                write!(f, ",")?;
            }
            write!(f, "{{")?;
            for (j, i) in b.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{i}")?;
            }
            write!(f, "}}")?;
        }
        write!(f, "}}")
    }
}

/// Block sizes `(n_1, ..., n_k)` of a partition. May be empty (`n = 0`),
/// which is the state before the first observation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct BlockSizes {
    sizes: Vec<usize>,
}

impl BlockSizes {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.contains(&0) {
            return Err(Error::arg("block sizes must be positive"));
        }
        Ok(Self { sizes })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn n(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    /// Same multiset in non-increasing order.
    pub fn canonical(&self) -> Self {
        let mut sizes = self.sizes.clone();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        Self { sizes }
    }
}

impl TryFrom<Vec<usize>> for BlockSizes {
    type Error = Error;

    fn try_from(sizes: Vec<usize>) -> Result<Self> {
        BlockSizes::new(sizes)
    }
}

impl From<BlockSizes> for Vec<usize> {
    fn from(b: BlockSizes) -> Self {
        b.sizes
    }
}

/// Partition of `{1, ..., n}` by equality of labels.
pub fn induced_partition<T: Eq + Hash>(labels: &[T]) -> Result<Partition> {
    if labels.is_empty() {
        return Err(Error::arg("cannot induce a partition from no labels"));
    }
    let mut index: HashMap<&T, usize> = HashMap::new();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for (i, l) in labels.iter().enumerate() {
        let next = blocks.len();
        let c = *index.entry(l).or_insert(next);
        if c == next {
            blocks.push(Vec::new());
        }
        blocks[c].push(i + 1);
    }
    Ok(Partition {
        n: labels.len(),
        blocks,
    })
}

/// All partitions of `{1, ..., n}`, each exactly once, in lexicographic
/// order of their restricted-growth strings.
pub fn enumerate_partitions(n: usize) -> Result<PartitionIter> {
    if n == 0 {
        return Err(Error::arg("n must be positive"));
    }
    let cap = caps::enumeration_cap();
    if n > cap {
        return Err(Error::limit(format!(
            "partition enumeration for n = {n} exceeds the cap {cap}"
        )));
    }
    Ok(PartitionIter::uncapped(n))
}

/// Iterator over restricted-growth strings. `prefix_max[i]` is
/// `max(rgs[..=i])`.
#[derive(Debug, Clone)]
pub struct PartitionIter {
    rgs: Vec<usize>,
    prefix_max: Vec<usize>,
    done: bool,
}

impl PartitionIter {
    /// Enumeration without the configurable cap, for internal sums whose
    /// size is bounded by other means. `n` must be positive.
    pub(crate) fn uncapped(n: usize) -> Self {
        Self {
            rgs: vec![0; n],
            prefix_max: vec![0; n],
            done: n == 0,
        }
    }

    fn advance(&mut self) {
        let n = self.rgs.len();
        let mut i = n;
        while i > 1 {
            i -= 1;
            if self.rgs[i] <= self.prefix_max[i - 1] {
                self.rgs[i] += 1;
                self.prefix_max[i] = self.prefix_max[i - 1].max(self.rgs[i]);
                for j in i + 1..n {
                    self.rgs[j] = 0;
                    self.prefix_max[j] = self.prefix_max[i];
                }
                return;
            }
        }
        self.done = true;
    }
}

impl Iterator for PartitionIter {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        if self.done {
            return None;
        }
        let p = Partition::from_rgs(&self.rgs);
        self.advance();
        Some(p)
    }
}

/// Bell numbers `B(0..=n)` from the Bell triangle.
pub fn bell_numbers(n: usize) -> Vec<u128> {
    let mut out = vec![1u128];
    let mut row = vec![1u128];
    for _ in 0..n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().unwrap());
        for &x in &row {
            let last = *next.last().unwrap();
            next.push(last + x);
        }
        out.push(next[0]);
        row = next;
    }
    out.truncate(n + 1);
    out
}


/// Every distinct ordering of `v` (multiset permutations), starting from the
/// non-decreasing one.
pub fn distinct_permutations(v: &[usize]) -> Vec<Vec<usize>> {
    let mut cur = v.to_vec();
    cur.sort_unstable();
    let mut out = vec![cur.clone()];
    loop {
        // next lexicographic permutation
        let Some(i) = (1..cur.len()).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..cur.len()).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(blocks: &[&[usize]]) -> Partition {
        Partition::new(blocks.iter().map(|b| b.to_vec()).collect()).unwrap()
    }

    #[test]
    fn induced_partition_examples() {
        assert_eq!(induced_partition(&['x', 'x', 'x']).unwrap(), p(&[&[1, 2, 3]]));
        assert_eq!(induced_partition(&['x', 'y', 'x']).unwrap(), p(&[&[1, 3], &[2]]));
        assert_eq!(
            induced_partition(&['a', 'b', 'c', 'b']).unwrap(),
            p(&[&[1], &[2, 4], &[3]])
        );
        let empty: [u8; 0] = [];
        assert!(matches!(
            induced_partition(&empty),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn restrict_examples() {
        assert_eq!(p(&[&[1, 3], &[2]]).restrict(2).unwrap(), p(&[&[1], &[2]]));
        assert_eq!(p(&[&[1, 2, 3]]).restrict(1).unwrap(), p(&[&[1]]));
        assert_eq!(
            p(&[&[1, 4], &[2], &[3]]).restrict(3).unwrap(),
            p(&[&[1], &[2], &[3]])
        );
        assert!(p(&[&[1]]).restrict(2).is_err());
        assert!(p(&[&[1]]).restrict(0).is_err());
    }

    #[test]
    fn block_sizes_examples() {
        assert_eq!(p(&[&[1, 3], &[2]]).block_sizes().sizes(), &[2, 1]);
        assert_eq!(p(&[&[1], &[2], &[3]]).block_sizes().sizes(), &[1, 1, 1]);
        assert_eq!(p(&[&[1, 2, 4], &[3]]).block_sizes().sizes(), &[3, 1]);
    }

    #[test]
    fn constructor_canonicalizes_and_validates() {
        let q = Partition::new(vec![vec![2], vec![3, 1]]).unwrap();
        assert_eq!(q.blocks(), &[vec![1, 3], vec![2]]);
        assert!(Partition::new(vec![vec![1], vec![1, 2]]).is_err());
        assert!(Partition::new(vec![vec![1], vec![3]]).is_err());
        assert!(Partition::new(vec![vec![1], vec![]]).is_err());
    }

    #[test]
    fn json_form_is_nested_arrays() {
        let q = p(&[&[1, 3], &[2]]);
        assert_eq!(serde_json::to_string(&q).unwrap(), "[[1,3],[2]]");
        let back: Partition = serde_json::from_str("[[2],[1,3]]").unwrap();
        assert_eq!(back, q);
        assert!(serde_json::from_str::<Partition>("[[1,1]]").is_err());
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_partitions(1).unwrap().count(), 1);
        assert_eq!(enumerate_partitions(3).unwrap().count(), 5);
        assert_eq!(enumerate_partitions(8).unwrap().count(), 4140);
        assert!(matches!(
            enumerate_partitions(13),
            Err(Error::ResourceLimit(_))
        ));
    }

    #[test]
    fn multiset_permutations() {
        assert_eq!(distinct_permutations(&[2, 1, 1]).len(), 3);
        assert_eq!(distinct_permutations(&[1, 2, 3]).len(), 6);
        assert_eq!(distinct_permutations(&[]).len(), 1);
    }

    #[test]
    fn bell_triangle() {
        assert_eq!(bell_numbers(6), vec![1, 1, 2, 5, 15, 52, 203]);
    }

    #[test]
    fn from_sizes_is_consecutive() {
        assert_eq!(
            Partition::from_sizes(&[2, 1]).unwrap(),
            p(&[&[1, 2], &[3]])
        );
    }
}
