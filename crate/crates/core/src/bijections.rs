//! Maps between non-crossing partitions and plane trees.
//!
//! The dual tree of a partition of `[n]` has one black vertex per block and one
//! white vertex per remaining face of the disk; black vertices sit on blocks,
//! white vertices on the blocks of the Kreweras complement. Its `n` edges are
//! labelled by `1..=n`: edge `x` joins the block of `x` to the face containing
//! the gap between `x` and `x + 1` (gap `n` lies between `n` and `1`). Around
//! every vertex the edges appear in increasing label order, cyclically.
//!
//! Two rootings of the dual tree ([`dual_tree_circ`], [`dual_tree_bullet`])
//! composed with the Janson–Stefánsson map [`js_forward`] give the one-type
//! trees [`t_circ`] and [`t_bullet`]; [`p_circ`] and [`p_bullet`] invert them.

use crate::model::{
    lukasiewicz_path, EvenKind, LukaWalk, NCPartition, PlaneTree, TwoTypeTree, NO_PARENT,
};

/// Disjoint-set forest over gap indices.
struct Gaps {
    parent: Vec<usize>,
}

impl Gaps {
    fn new(n: usize) -> Self {
        Gaps {
            parent: (0..=n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Labels of every black and white vertex of the dual tree.
struct Dual {
    n: usize,
    /// labels of each block, increasing
    block_labels: Vec<Vec<usize>>,
    /// labels of each face, increasing
    face_labels: Vec<Vec<usize>>,
    block_of: Vec<usize>,
    face_of: Vec<usize>,
    /// position of label `x` inside its block / face list
    pos_in_block: Vec<usize>,
    pos_in_face: Vec<usize>,
}

impl Dual {
    fn new(p: &NCPartition) -> Self {
        let n = p.n();
        // The face behind chord (x, next(x)) touches gaps x and next(x) - 1;
        // gap 0 is gap n.
        let mut gaps = Gaps::new(n);
        for b in p.blocks() {
            let k = b.len();
            for i in 0..k {
                let next = b[(i + 1) % k];
                let before = if next == 1 { n } else { next - 1 };
                gaps.union(b[i], before);
            }
        }
        let mut face_id = vec![usize::MAX; n + 1];
        let mut face_labels: Vec<Vec<usize>> = Vec::new();
        let mut face_of = vec![usize::MAX; n + 1];
        let mut pos_in_face = vec![0; n + 1];
        for x in 1..=n {
            let r = gaps.find(x);
            if face_id[r] == usize::MAX {
                face_id[r] = face_labels.len();
                face_labels.push(Vec::new());
            }
            let f = face_id[r];
            face_of[x] = f;
            pos_in_face[x] = face_labels[f].len();
            face_labels[f].push(x);
        }
        let block_labels = p.blocks().to_vec();
        let block_of = p.owners();
        let mut pos_in_block = vec![0; n + 1];
        for b in &block_labels {
            for (i, &x) in b.iter().enumerate() {
                pos_in_block[x] = i;
            }
        }
        Dual {
            n,
            block_labels,
            face_labels,
            block_of,
            face_of,
            pos_in_block,
            pos_in_face,
        }
    }

    fn labels(&self, v: Vertex) -> &[usize] {
        match v {
            Vertex::Block(b) => &self.block_labels[b],
            Vertex::Face(f) => &self.face_labels[f],
        }
    }

    fn position(&self, v: Vertex, label: usize) -> usize {
        match v {
            Vertex::Block(_) => self.pos_in_block[label],
            Vertex::Face(_) => self.pos_in_face[label],
        }
    }

    fn across(&self, v: Vertex, label: usize) -> Vertex {
        match v {
            Vertex::Block(_) => Vertex::Face(self.face_of[label]),
            Vertex::Face(_) => Vertex::Block(self.block_of[label]),
        }
    }

    /// Preorder degree sequence of the dual tree rooted at `root`, whose
    /// children are read cyclically from `first` (inclusive).
    fn rooted(&self, root: Vertex, first: usize) -> PlaneTree {
        let mut degrees = Vec::with_capacity(self.n + 1);
        let labels = self.labels(root);
        let k = labels.len();
        let start = self.position(root, first);
        degrees.push(k);
        // (vertex, label of the edge to its parent)
        let mut stack: Vec<(Vertex, usize)> = (0..k)
            .rev()
            .map(|i| {
                let x = labels[(start + i) % k];
                (self.across(root, x), x)
            })
            .collect();
        while let Some((v, via)) = stack.pop() {
            let labels = self.labels(v);
            let k = labels.len();
            degrees.push(k - 1);
            let at = self.position(v, via);
            for i in (1..k).rev() {
                let x = labels[(at + i) % k];
                stack.push((self.across(v, x), x));
            }
        }
        PlaneTree::from_valid(degrees)
    }
}

#[derive(Debug, Clone, Copy)]
enum Vertex {
    Block(usize),
    Face(usize),
}

/// The dual two-type tree rooted at the face containing gap `n` (between `n`
/// and `1`), whose first child is the block of `1`.
pub fn dual_tree_circ(p: &NCPartition) -> TwoTypeTree {
    if p.n() == 0 {
        return TwoTypeTree::new(PlaneTree::singleton(), EvenKind::White);
    }
    let dual = Dual::new(p);
    let root = Vertex::Face(dual.face_of[p.n()]);
    let first = dual.face_labels[dual.face_of[p.n()]][0];
    TwoTypeTree::new(dual.rooted(root, first), EvenKind::White)
}

/// The dual two-type tree rooted at the block containing `n`, whose first
/// child is the face containing gap `n`.
pub fn dual_tree_bullet(p: &NCPartition) -> TwoTypeTree {
    if p.n() == 0 {
        return TwoTypeTree::new(PlaneTree::singleton(), EvenKind::Black);
    }
    let dual = Dual::new(p);
    let root = Vertex::Block(dual.block_of[p.n()]);
    TwoTypeTree::new(dual.rooted(root, p.n()), EvenKind::Black)
}

/// The Janson–Stefánsson bijection from two-type trees to one-type trees.
///
/// Every even-generation vertex becomes a leaf; an odd-generation vertex `v`
/// with `k` children gets `k + 1` children: for each child `c` of `v`, the
/// first child of `c` (or `c` itself if `c` is a leaf), then the next sibling
/// of `v` (or its parent if `v` is a last child). The new root is the first
/// child of the old root.
pub fn js_forward(t: &TwoTypeTree) -> PlaneTree {
    js_forward_tree(t.tree())
}

pub(crate) fn js_forward_tree(tree: &PlaneTree) -> PlaneTree {
    let len = tree.len();
    if len == 1 {
        return PlaneTree::singleton();
    }
    let parent = tree.parents();
    let children = tree.children();
    let depth = tree.depths();
    // position of each vertex among its siblings
    let mut rank = vec![0usize; len];
    for sibs in &children {
        for (i, &c) in sibs.iter().enumerate() {
            rank[c] = i;
        }
    }
    let closing = |v: usize| -> usize {
        let p = parent[v];
        if rank[v] + 1 < children[p].len() {
            children[p][rank[v] + 1]
        } else {
            p
        }
    };

    let mut degrees = Vec::with_capacity(len);
    let mut stack = vec![children[0][0]];
    let mut buf = Vec::new();
    while let Some(v) = stack.pop() {
        if depth[v].is_multiple_of(2) {
            degrees.push(0);
            continue;
        }
        buf.clear();
        for &c in &children[v] {
            buf.push(children[c].first().copied().unwrap_or(c));
        }
        buf.push(closing(v));
        degrees.push(buf.len());
        stack.extend(buf.iter().rev());
    }
    PlaneTree::from_valid(degrees)
}

/// `𝒯∘(P)`: the Janson–Stefánsson image of the face-rooted dual tree.
pub fn t_circ(p: &NCPartition) -> PlaneTree {
    js_forward(&dual_tree_circ(p))
}

/// `𝒯•(P)`: the Janson–Stefánsson image of the block-rooted dual tree.
pub fn t_bullet(p: &NCPartition) -> PlaneTree {
    js_forward(&dual_tree_bullet(p))
}

/// Groups the non-root vertices of `t` (lex indices `1..=n`) by parent.
pub fn p_circ(t: &PlaneTree) -> NCPartition {
    let n = t.len() - 1;
    let blocks: Vec<Vec<usize>> = t.children().into_iter().filter(|c| !c.is_empty()).collect();
    // children lists are increasing; sort blocks by smallest element
    NCPartition::from_blocks(n, blocks)
}

/// Groups the non-root vertices of `t` by maximal twig (chains of last
/// children), dropping the root from its twig.
pub fn p_bullet(t: &PlaneTree) -> NCPartition {
    let n = t.len() - 1;
    let head = t.twig_heads();
    let mut slot = vec![usize::MAX; n + 1];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for v in 1..=n {
        let h = head[v];
        if slot[h] == usize::MAX {
            slot[h] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[slot[h]].push(v);
    }
    NCPartition::from_canonical(n, blocks)
}

/// The direct tree map with `ℬ(𝒯∘(P)) = 𝒯•(P)`.
///
/// Consecutive siblings are linked (each non-first child hangs below its
/// previous sibling); a first child hangs below the top of the maximal twig
/// that ends at its parent. The map preserves the lexicographic order of
/// vertices, so the new degree of vertex `i` is its number of new children.
pub fn b_transform(t: &PlaneTree) -> PlaneTree {
    let len = t.len();
    let parent = t.parents();
    let head = t.twig_heads();
    let mut degrees = vec![0usize; len];
    let mut prev_child = vec![NO_PARENT; len];
    for v in 1..len {
        let p = parent[v];
        let new_parent = if prev_child[p] == NO_PARENT {
            head[p]
        } else {
            prev_child[p]
        };
        prev_child[p] = v;
        degrees[new_parent] += 1;
    }
    PlaneTree::from_valid(degrees)
}

/// The Kreweras complement, `P•(𝒯∘(P))`.
pub fn kreweras(p: &NCPartition) -> NCPartition {
    p_bullet(&t_circ(p))
}

/// Reads the partition `P∘(τ)` straight off the Łukasiewicz path of `τ`.
///
/// The parent of vertex `m` is the last `j < m` with `W_j <= W_m`; a monotone
/// stack finds all of them in one pass.
pub fn partition_from_walk(w: &LukaWalk) -> NCPartition {
    let n = w.n();
    let values = w.values();
    let mut stack: Vec<usize> = vec![0];
    let mut parent = vec![0usize; n + 1];
    let mut child_count = vec![0usize; n + 1];
    for m in 1..=n {
        while values[*stack.last().expect("root stays on the stack")] > values[m] {
            stack.pop();
        }
        let p = *stack.last().expect("root stays on the stack");
        parent[m] = p;
        child_count[p] += 1;
        stack.push(m);
    }
    let mut slot = vec![usize::MAX; n + 1];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for m in 1..=n {
        let p = parent[m];
        if slot[p] == usize::MAX {
            slot[p] = blocks.len();
            blocks.push(Vec::with_capacity(child_count[p]));
        }
        blocks[slot[p]].push(m);
    }
    NCPartition::from_canonical(n, blocks)
}

/// Convenience: the Łukasiewicz path of `𝒯∘(P)`.
pub fn walk_of(p: &NCPartition) -> LukaWalk {
    lukasiewicz_path(&t_circ(p))
}
