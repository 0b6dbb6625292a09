//! Plane trees, non-crossing partitions and Łukasiewicz paths.
//!
//! Trees are stored as the sequence of outdegrees of their vertices listed in
//! lexicographic (depth-first) order. Vertex `i` of a tree is the `i`-th vertex
//! in that order, so vertex `0` is the root. Parent and children relations are
//! recovered with a single left-to-right stack scan.
//!
//! Partitions are of the ground set `{1, ..., n}` (1-based); walks are indexed
//! from 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sentinel parent of the root.
pub const NO_PARENT: usize = usize::MAX;

/// A rooted ordered tree given by its lex-ordered outdegree sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawTree", into = "RawTree")]
pub struct PlaneTree {
    degrees: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct RawTree {
    degrees: Vec<usize>,
}

impl TryFrom<RawTree> for PlaneTree {
    type Error = Error;
    fn try_from(raw: RawTree) -> Result<Self> {
        PlaneTree::new(raw.degrees)
    }
}

impl From<PlaneTree> for RawTree {
    fn from(t: PlaneTree) -> Self {
        RawTree { degrees: t.degrees }
    }
}

impl PlaneTree {
    /// Validates a degree sequence. The sum must be `len - 1` and every strict
    /// prefix of `(k - 1)` increments must stay nonnegative.
    pub fn new(degrees: Vec<usize>) -> Result<Self> {
        if degrees.is_empty() {
            return Err(Error::SumMismatch {
                sum: 0,
                expected: 0,
            });
        }
        let sum: usize = degrees.iter().sum();
        if sum != degrees.len() - 1 {
            return Err(Error::SumMismatch {
                sum,
                expected: degrees.len() - 1,
            });
        }
        let mut height: i64 = 0;
        for (j, &k) in degrees.iter().enumerate().take(degrees.len() - 1) {
            height += k as i64 - 1;
            if height < 0 {
                return Err(Error::BallotViolation { prefix: j + 1 });
            }
        }
        Ok(PlaneTree { degrees })
    }

    /// Trusted constructor for sequences produced by this crate's own bijections.
    pub(crate) fn from_valid(degrees: Vec<usize>) -> Self {
        debug_assert!(PlaneTree::new(degrees.clone()).is_ok(), "{degrees:?}");
        PlaneTree { degrees }
    }

    pub fn singleton() -> Self {
        PlaneTree { degrees: vec![0] }
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn into_degrees(self) -> Vec<usize> {
        self.degrees
    }

    /// Number of vertices.
    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn degree(&self, v: usize) -> usize {
        self.degrees[v]
    }

    pub fn leaf_count(&self) -> usize {
        self.degrees.iter().filter(|&&k| k == 0).count()
    }

    /// `parents()[v]` is the parent of vertex `v` (`NO_PARENT` for the root).
    pub fn parents(&self) -> Vec<usize> {
        self.scan().0
    }

    /// `true` at `v` when `v` is the last child of its parent.
    pub fn last_child_flags(&self) -> Vec<bool> {
        self.scan().1
    }

    fn scan(&self) -> (Vec<usize>, Vec<bool>) {
        let len = self.degrees.len();
        let mut parent = vec![NO_PARENT; len];
        let mut last = vec![false; len];
        // (vertex, children still to be attached)
        let mut stack: Vec<(usize, usize)> = Vec::new();
        for v in 0..len {
            if let Some(top) = stack.last_mut() {
                parent[v] = top.0;
                top.1 -= 1;
                if top.1 == 0 {
                    last[v] = true;
                    stack.pop();
                }
            }
            if self.degrees[v] > 0 {
                stack.push((v, self.degrees[v]));
            }
        }
        (parent, last)
    }

    /// Children of every vertex, each list in lexicographic order.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut children: Vec<Vec<usize>> = self
            .degrees
            .iter()
            .map(|&k| Vec::with_capacity(k))
            .collect();
        for (v, &p) in self.parents().iter().enumerate() {
            if p != NO_PARENT {
                children[p].push(v);
            }
        }
        children
    }

    /// Generation (distance to the root) of every vertex.
    pub fn depths(&self) -> Vec<usize> {
        let parent = self.parents();
        let mut depth = vec![0; self.len()];
        for v in 1..self.len() {
            depth[v] = depth[parent[v]] + 1;
        }
        depth
    }

    /// Vertices that are the last child of their parent, grouped into
    /// maximal twigs: `heads()[v]` is the top vertex of the maximal twig
    /// containing `v`.
    pub fn twig_heads(&self) -> Vec<usize> {
        let (parent, last) = self.scan();
        let mut head: Vec<usize> = (0..self.len()).collect();
        for v in 1..self.len() {
            if last[v] {
                head[v] = head[parent[v]];
            }
        }
        head
    }
}

/// A partition of `{1, ..., n}` whose blocks have pairwise disjoint convex
/// hulls on the regular `n`-gon.
///
/// Blocks are kept in canonical form: each block increasing, blocks sorted by
/// their smallest element.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawPartition", into = "RawPartition")]
pub struct NCPartition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct RawPartition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl TryFrom<RawPartition> for NCPartition {
    type Error = Error;
    fn try_from(raw: RawPartition) -> Result<Self> {
        validate_partition(raw.blocks, raw.n)
    }
}

impl From<NCPartition> for RawPartition {
    fn from(p: NCPartition) -> Self {
        RawPartition {
            n: p.n,
            blocks: p.blocks,
        }
    }
}

/// Checks that `blocks` partition `{1, ..., n}` without crossings.
///
/// The crossing test is a single sweep with a stack of open blocks; on
/// failure the error carries a witness `a < b < c < d` with `{a, c}` in one
/// block and `{b, d}` in another.
pub fn validate_partition(blocks: Vec<Vec<usize>>, n: usize) -> Result<NCPartition> {
    let mut owner = vec![usize::MAX; n + 1];
    let mut blocks = blocks;
    for b in blocks.iter_mut() {
        if b.is_empty() {
            return Err(Error::NotAPartition("empty block".into()));
        }
        b.sort_unstable();
    }
    blocks.sort_unstable_by_key(|b| b[0]);
    for (id, b) in blocks.iter().enumerate() {
        for &x in b {
            if x == 0 || x > n {
                return Err(Error::NotAPartition(format!("element {x} outside 1..={n}")));
            }
            if owner[x] != usize::MAX {
                return Err(Error::NotAPartition(format!("element {x} appears twice")));
            }
            owner[x] = id;
        }
    }
    if let Some(x) = (1..=n).find(|&x| owner[x] == usize::MAX) {
        return Err(Error::NotAPartition(format!("element {x} is missing")));
    }

    // position of each element inside its block
    let mut pos = vec![0usize; n + 1];
    for b in &blocks {
        for (i, &x) in b.iter().enumerate() {
            pos[x] = i;
        }
    }
    let mut open: Vec<usize> = Vec::new();
    for x in 1..=n {
        let id = owner[x];
        let block = &blocks[id];
        if block.len() == 1 {
            continue;
        }
        let i = pos[x];
        if i == 0 {
            open.push(id);
            continue;
        }
        let top = *open
            .last()
            .expect("an earlier element of this block was opened");
        if top != id {
            // `top` was opened after the previous element of `id`
            let t = &blocks[top];
            let seen = t.partition_point(|&y| y < x);
            return Err(Error::Crossing {
                a: block[i - 1],
                b: t[seen - 1],
                c: x,
                d: t[seen],
            });
        }
        if i + 1 == block.len() {
            open.pop();
        }
    }
    Ok(NCPartition { n, blocks })
}

impl NCPartition {
    /// Trusted constructor for block lists that are already canonical and
    /// non-crossing.
    pub(crate) fn from_canonical(n: usize, blocks: Vec<Vec<usize>>) -> Self {
        debug_assert!(
            validate_partition(blocks.clone(), n).map(|p| p.blocks == blocks) == Ok(true)
        );
        NCPartition { n, blocks }
    }

    /// Canonicalizes blocks that are known to be non-crossing.
    pub(crate) fn from_blocks(n: usize, mut blocks: Vec<Vec<usize>>) -> Self {
        for b in blocks.iter_mut() {
            b.sort_unstable();
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        NCPartition::from_canonical(n, blocks)
    }

    pub fn singletons(n: usize) -> Self {
        NCPartition {
            n,
            blocks: (1..=n).map(|x| vec![x]).collect(),
        }
    }

    pub fn one_block(n: usize) -> Self {
        let blocks = if n == 0 {
            vec![]
        } else {
            vec![(1..=n).collect()]
        };
        NCPartition { n, blocks }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// `owners()[x]` is the index of the block containing `x` (index 0 unused).
    pub fn owners(&self) -> Vec<usize> {
        let mut owner = vec![usize::MAX; self.n + 1];
        for (id, b) in self.blocks.iter().enumerate() {
            for &x in b {
                owner[x] = id;
            }
        }
        owner
    }

    /// `successors()[x]` is the next element of the block of `x`, cyclically.
    pub fn successors(&self) -> Vec<usize> {
        let mut next = vec![0; self.n + 1];
        for b in &self.blocks {
            for (i, &x) in b.iter().enumerate() {
                next[x] = b[(i + 1) % b.len()];
            }
        }
        next
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }
}

/// An integer path `W_0, ..., W_{n+1}` with `W_0 = 0`, steps `>= -1`,
/// `W_j >= 0` for `j <= n` and `W_{n+1} = -1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LukaWalk {
    values: Vec<i64>,
}

impl LukaWalk {
    pub fn new(values: Vec<i64>) -> Result<Self> {
        let len = values.len();
        if len < 2 {
            return Err(Error::InvalidWalk(format!("length {len} < 2")));
        }
        if values[0] != 0 {
            return Err(Error::InvalidWalk("W_0 must be 0".into()));
        }
        for j in 0..len - 1 {
            if values[j + 1] - values[j] < -1 {
                return Err(Error::InvalidWalk(format!(
                    "step W_{} - W_{} = {} < -1",
                    j + 1,
                    j,
                    values[j + 1] - values[j]
                )));
            }
        }
        if let Some(j) = (0..len - 1).find(|&j| values[j] < 0) {
            return Err(Error::InvalidWalk(format!(
                "W_{j} < 0 before the last step"
            )));
        }
        if values[len - 1] != -1 {
            return Err(Error::InvalidWalk(format!("W_{} must be -1", len - 1)));
        }
        Ok(LukaWalk { values })
    }

    pub(crate) fn from_valid(values: Vec<i64>) -> Self {
        debug_assert!(LukaWalk::new(values.clone()).is_ok());
        LukaWalk { values }
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    /// The size parameter: the walk has `n + 2` values and codes a tree with
    /// `n + 1` vertices.
    pub fn n(&self) -> usize {
        self.values.len() - 2
    }

    /// Outdegrees `k_j = W_{j+1} - W_j + 1`.
    pub fn degrees(&self) -> Vec<usize> {
        self.values
            .windows(2)
            .map(|w| (w[1] - w[0] + 1) as usize)
            .collect()
    }
}

/// Encodes a tree by its Łukasiewicz path: `W_{j+1} = W_j + k_j - 1`.
pub fn lukasiewicz_path(tree: &PlaneTree) -> LukaWalk {
    let mut values = Vec::with_capacity(tree.len() + 1);
    let mut w = 0i64;
    values.push(w);
    for &k in tree.degrees() {
        w += k as i64 - 1;
        values.push(w);
    }
    LukaWalk::from_valid(values)
}

/// Inverse of [`lukasiewicz_path`].
pub fn tree_from_walk(walk: &LukaWalk) -> PlaneTree {
    PlaneTree::from_valid(walk.degrees())
}

/// Which dual vertices sit at even generations of a [`TwoTypeTree`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvenKind {
    /// Even generations are faces (white vertices): rooting at a face.
    White,
    /// Even generations are blocks (black vertices): rooting at a block.
    Black,
}

/// A plane tree whose generations alternate between two vertex types.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TwoTypeTree {
    tree: PlaneTree,
    even: EvenKind,
}

impl TwoTypeTree {
    pub fn new(tree: PlaneTree, even: EvenKind) -> Self {
        TwoTypeTree { tree, even }
    }

    pub fn tree(&self) -> &PlaneTree {
        &self.tree
    }

    pub fn even_kind(&self) -> EvenKind {
        self.even
    }

    /// `true` for black (block) vertices.
    pub fn black_flags(&self) -> Vec<bool> {
        self.tree
            .depths()
            .into_iter()
            .map(|d| (d % 2 == 0) == (self.even == EvenKind::Black))
            .collect()
    }
}
