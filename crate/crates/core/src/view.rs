//! Augmented truncated views, their canonical byte encoding, and view-equivalence
//! partitions computed by iterated refinement.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::graph::{NodeId, Port, PortGraph};

pub const DEFAULT_VIEW_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ViewError {
    #[error("explicit view of depth {depth} needs {needed} nodes, budget is {budget}")]
    DepthTooLarge { depth: usize, needed: u64, budget: u64 },
    #[error("nodes {a} and {b} have identical views at depth {depth}")]
    TiedViews { a: NodeId, b: NodeId, depth: usize },
    #[error("empty candidate set")]
    NoCandidates,
    #[error("malformed view encoding at byte {0}")]
    BadEncoding(usize),
}

pub type ViewDigest = [u8; 16];

/// One node of a view tree; children are indexed by outgoing port.
#[derive(Debug)]
pub struct ViewNode {
    pub degree: usize,
    pub children: Vec<ViewEdge>,
    digest: ViewDigest,
}

#[derive(Debug, Clone)]
pub struct ViewEdge {
    /// Port at the child through which the edge arrives.
    pub incoming_port: Port,
    pub child: Arc<ViewNode>,
}

impl ViewNode {
    pub fn leaf(degree: usize) -> Arc<Self> {
        Self::new(degree, Vec::new())
    }

    pub fn new(degree: usize, children: Vec<ViewEdge>) -> Arc<Self> {
        debug_assert!(children.is_empty() || children.len() == degree);
        let mut h = Sha256::new();
        let mut buf = Vec::with_capacity(8);
        push_varint(&mut buf, degree as u64);
        push_varint(&mut buf, children.len() as u64);
        h.update(&buf);
        for e in &children {
            buf.clear();
            push_varint(&mut buf, e.incoming_port as u64);
            h.update(&buf);
            h.update(e.child.digest);
        }
        let full = h.finalize();
        let mut digest = [0u8; 16];
        digest.copy_from_slice(&full[..16]);
        Arc::new(ViewNode { degree, children, digest })
    }

    /// Merkle digest of the subtree; equal subtrees always share it.
    pub fn digest(&self) -> &ViewDigest {
        &self.digest
    }

    fn structurally_equal(a: &Arc<ViewNode>, b: &Arc<ViewNode>) -> bool {
        if Arc::ptr_eq(a, b) {
            return true;
        }
        if a.digest != b.digest || a.degree != b.degree || a.children.len() != b.children.len() {
            return false;
        }
        a.children.iter().zip(&b.children).all(|(x, y)| {
            x.incoming_port == y.incoming_port && ViewNode::structurally_equal(&x.child, &y.child)
        })
    }
}

/// The view of some node truncated at `depth`, leaves labeled with degrees.
#[derive(Debug, Clone)]
pub struct ViewTree {
    pub depth: usize,
    pub root: Arc<ViewNode>,
}

impl PartialEq for ViewTree {
    fn eq(&self, other: &Self) -> bool {
        self.depth == other.depth && ViewNode::structurally_equal(&self.root, &other.root)
    }
}
impl Eq for ViewTree {}

impl ViewTree {
    pub fn degree(&self) -> usize {
        self.root.degree
    }

    /// Number of nodes in the explicit (unshared) tree.
    pub fn tree_size(&self) -> u64 {
        fn go(n: &ViewNode) -> u64 {
            1 + n.children.iter().map(|e| go(&e.child)).sum::<u64>()
        }
        go(&self.root)
    }

    /// Follows an outgoing port sequence from the root; `None` if it leaves the view.
    pub fn walk(&self, ports: &[Port]) -> Option<&Arc<ViewNode>> {
        let mut cur = &self.root;
        for &p in ports {
            cur = &cur.children.get(p)?.child;
        }
        Some(cur)
    }

    /// Lexicographically least among the shortest walks from the root to a view node
    /// accepted by `pred`, as `(outgoing, incoming)` port pairs.
    pub fn shortest_path_to(&self, pred: impl Fn(&ViewNode) -> bool) -> Option<Vec<(Port, Port)>> {
        self.shortest_path_where(|n, _| pred(n))
    }

    /// Like [`ViewTree::shortest_path_to`] but the predicate also sees the path so far.
    pub fn shortest_path_where(
        &self,
        pred: impl Fn(&ViewNode, &[(Port, Port)]) -> bool,
    ) -> Option<Vec<(Port, Port)>> {
        let mut level: Vec<(Arc<ViewNode>, Vec<(Port, Port)>)> = vec![(self.root.clone(), Vec::new())];
        for _ in 0..=self.depth {
            for (node, path) in &level {
                if pred(node, path) {
                    return Some(path.clone());
                }
            }
            let mut seen = std::collections::HashSet::new();
            let mut next = Vec::new();
            for (node, path) in &level {
                for (p, e) in node.children.iter().enumerate() {
                    if seen.insert(Arc::as_ptr(&e.child)) {
                        let mut np = path.clone();
                        np.push((p, e.incoming_port));
                        next.push((e.child.clone(), np));
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            level = next;
        }
        None
    }
}

/// Number of nodes of the explicit depth-`h` view of every node, saturating.
fn explicit_sizes(g: &PortGraph, h: usize) -> Vec<u64> {
    let mut cnt = vec![1u64; g.n()];
    for _ in 0..h {
        cnt = (0..g.n())
            .map(|v| {
                g.ports(v)
                    .iter()
                    .fold(1u64, |acc, &(u, _)| acc.saturating_add(cnt[u]))
            })
            .collect();
    }
    cnt
}

/// Builds the explicit view `B^h(v)` with the default node budget.
pub fn build_view(g: &PortGraph, v: NodeId, h: usize) -> Result<ViewTree, ViewError> {
    build_view_with_budget(g, v, h, DEFAULT_VIEW_BUDGET)
}

pub fn build_view_with_budget(g: &PortGraph, v: NodeId, h: usize, budget: u64) -> Result<ViewTree, ViewError> {
    let needed = explicit_sizes(g, h)[v];
    if needed > budget {
        return Err(ViewError::DepthTooLarge { depth: h, needed, budget });
    }
    fn go(g: &PortGraph, v: NodeId, rem: usize) -> Arc<ViewNode> {
        if rem == 0 {
            return ViewNode::leaf(g.degree(v));
        }
        let children = g
            .ports(v)
            .iter()
            .map(|&(u, q)| ViewEdge { incoming_port: q, child: go(g, u, rem - 1) })
            .collect();
        ViewNode::new(g.degree(v), children)
    }
    Ok(ViewTree { depth: h, root: go(g, v, h) })
}

pub(crate) fn push_varint(out: &mut Vec<u8>, mut x: u64) {
    loop {
        let b = (x & 0x7f) as u8;
        x >>= 7;
        if x == 0 {
            out.push(b);
            return;
        }
        out.push(b | 0x80);
    }
}

pub(crate) fn read_varint(bytes: &[u8], pos: &mut usize) -> Option<u64> {
    let mut x = 0u64;
    let mut shift = 0;
    loop {
        let b = *bytes.get(*pos)?;
        *pos += 1;
        if shift >= 64 {
            return None;
        }
        x |= u64::from(b & 0x7f) << shift;
        if b & 0x80 == 0 {
            return Some(x);
        }
        shift += 7;
    }
}

/// Canonical byte encoding; bytewise order is the view order used for "lexicographically smallest".
pub fn canonical_encoding(view: &ViewTree) -> Vec<u8> {
    fn enc(n: &ViewNode, rem: usize, out: &mut Vec<u8>) {
        push_varint(out, n.degree as u64);
        if rem > 0 {
            for e in &n.children {
                push_varint(out, e.incoming_port as u64);
                enc(&e.child, rem - 1, out);
            }
        }
    }
    let mut out = Vec::new();
    push_varint(&mut out, view.depth as u64);
    enc(&view.root, view.depth, &mut out);
    out
}

/// Inverse of [`canonical_encoding`].
pub fn decode_encoding(bytes: &[u8]) -> Result<ViewTree, ViewError> {
    fn dec(bytes: &[u8], pos: &mut usize, rem: usize) -> Result<Arc<ViewNode>, ViewError> {
        let degree = read_varint(bytes, pos).ok_or(ViewError::BadEncoding(*pos))? as usize;
        if rem == 0 {
            return Ok(ViewNode::leaf(degree));
        }
        let mut children = Vec::with_capacity(degree.min(1 << 16));
        for _ in 0..degree {
            let q = read_varint(bytes, pos).ok_or(ViewError::BadEncoding(*pos))? as usize;
            children.push(ViewEdge { incoming_port: q, child: dec(bytes, pos, rem - 1)? });
        }
        Ok(ViewNode::new(degree, children))
    }
    let mut pos = 0;
    let depth = read_varint(bytes, &mut pos).ok_or(ViewError::BadEncoding(0))? as usize;
    let root = dec(bytes, &mut pos, depth)?;
    if pos != bytes.len() {
        return Err(ViewError::BadEncoding(pos));
    }
    Ok(ViewTree { depth, root })
}

/// View-equivalence classes for every depth `0..=h`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    classes: Vec<Vec<u32>>,
    counts: Vec<usize>,
}

impl Partition {
    pub fn depth(&self) -> usize {
        self.classes.len() - 1
    }

    pub fn class(&self, depth: usize, v: NodeId) -> u32 {
        self.classes[depth][v]
    }

    pub fn classes_at(&self, depth: usize) -> &[u32] {
        &self.classes[depth]
    }

    pub fn class_count(&self, depth: usize) -> usize {
        self.counts[depth]
    }

    /// Class sizes at `depth`, indexed by class id.
    pub fn class_sizes(&self, depth: usize) -> Vec<usize> {
        let mut sizes = vec![0; self.counts[depth]];
        for &c in &self.classes[depth] {
            sizes[c as usize] += 1;
        }
        sizes
    }

    /// Nodes alone in their class at `depth`, ascending.
    pub fn singletons(&self, depth: usize) -> Vec<NodeId> {
        let sizes = self.class_sizes(depth);
        (0..self.classes[depth].len())
            .filter(|&v| sizes[self.classes[depth][v] as usize] == 1)
            .collect()
    }

    /// Members of each class at `depth`, classes ordered by id, members ascending.
    pub fn groups(&self, depth: usize) -> Vec<Vec<NodeId>> {
        let mut out = vec![Vec::new(); self.counts[depth]];
        for (v, &c) in self.classes[depth].iter().enumerate() {
            out[c as usize].push(v);
        }
        out
    }

    pub fn is_discrete(&self, depth: usize) -> bool {
        self.counts[depth] == self.classes[depth].len()
    }
}

const OUTSIDE: NodeId = usize::MAX;
const UNKNOWN_CLASS: u32 = u32::MAX;

/// One refinement step; neighbors equal to `OUTSIDE` contribute an unknown class.
fn refine_step(adj: &[Vec<(NodeId, Port)>], prev: &[u32]) -> (Vec<u32>, usize) {
    let sigs: Vec<Vec<u32>> = adj
        .par_iter()
        .enumerate()
        .map(|(v, ports)| {
            let mut s = Vec::with_capacity(1 + 2 * ports.len());
            s.push(prev[v]);
            for &(u, q) in ports {
                s.push(q as u32);
                s.push(if u == OUTSIDE { UNKNOWN_CLASS } else { prev[u] });
            }
            s
        })
        .collect();
    let mut ids: HashMap<&[u32], u32> = HashMap::with_capacity(adj.len());
    let mut out = Vec::with_capacity(adj.len());
    for s in &sigs {
        let next = ids.len() as u32;
        out.push(*ids.entry(s.as_slice()).or_insert(next));
    }
    (out, ids.len())
}

fn dense_from_keys(keys: impl Iterator<Item = usize>) -> (Vec<u32>, usize) {
    let mut ids: HashMap<usize, u32> = HashMap::new();
    let out = keys
        .map(|k| {
            let next = ids.len() as u32;
            *ids.entry(k).or_insert(next)
        })
        .collect();
    (out, ids.len())
}

/// Refinement partitions for depths `0..=h`.
pub fn refine_classes(g: &PortGraph, h: usize) -> Partition {
    let (c0, n0) = dense_from_keys((0..g.n()).map(|v| g.degree(v)));
    let mut classes = vec![c0];
    let mut counts = vec![n0];
    for _ in 0..h {
        let (c, n) = refine_step(g.adjacency(), classes.last().unwrap());
        classes.push(c);
        counts.push(n);
    }
    Partition { classes, counts }
}

/// Refines until two consecutive depths coincide (at most `max_depth` steps).
pub fn refine_until_stable(g: &PortGraph, max_depth: usize) -> Partition {
    let (c0, n0) = dense_from_keys((0..g.n()).map(|v| g.degree(v)));
    let mut classes = vec![c0];
    let mut counts = vec![n0];
    while classes.len() <= max_depth {
        let (c, n) = refine_step(g.adjacency(), classes.last().unwrap());
        let stable = n == *counts.last().unwrap();
        classes.push(c);
        counts.push(n);
        if stable {
            break;
        }
    }
    Partition { classes, counts }
}

/// Nodes whose depth-`h` view is unique in `g`.
pub fn unique_view_nodes(g: &PortGraph, h: usize) -> BTreeSet<NodeId> {
    refine_classes(g, h).singletons(h).into_iter().collect()
}

/// The candidate whose depth-`h` view has the bytewise smallest encoding.
pub fn lex_min_view(g: &PortGraph, candidates: &BTreeSet<NodeId>, h: usize) -> Result<NodeId, ViewError> {
    let mut best: Option<(Vec<u8>, NodeId)> = None;
    for &v in candidates {
        let enc = canonical_encoding(&build_view(g, v, h)?);
        match &best {
            Some((b, u)) if *b == enc => return Err(ViewError::TiedViews { a: *u, b: v, depth: h }),
            Some((b, _)) if *b < enc => {}
            _ => best = Some((enc, v)),
        }
    }
    best.map(|(_, v)| v).ok_or(ViewError::NoCandidates)
}

/// The radius-`h` ball around `v`, with out-of-ball neighbors marked `OUTSIDE`.
fn ball(g: &PortGraph, v: NodeId, h: usize) -> (Vec<Vec<(NodeId, Port)>>, Vec<usize>) {
    let mut local: HashMap<NodeId, usize> = HashMap::new();
    let mut order = vec![v];
    local.insert(v, 0);
    let mut queue = VecDeque::from([(v, 0usize)]);
    while let Some((x, d)) = queue.pop_front() {
        if d == h {
            continue;
        }
        for &(u, _) in g.ports(x) {
            if !local.contains_key(&u) {
                local.insert(u, order.len());
                order.push(u);
                queue.push_back((u, d + 1));
            }
        }
    }
    let adj = order
        .iter()
        .map(|&x| {
            g.ports(x)
                .iter()
                .map(|&(u, q)| (local.get(&u).copied().unwrap_or(OUTSIDE), q))
                .collect()
        })
        .collect();
    let degrees = order.iter().map(|&x| g.degree(x)).collect();
    (adj, degrees)
}

/// Exact test of `B^h(v1)` in `g1` against `B^h(v2)` in `g2`.
///
/// Refines the disjoint union of the two radius-`h` balls. A node at distance `d`
/// from its center only influences the center through its depth-`(h-d)` class, which
/// never looks past the ball, so the unknown outside classes cannot leak in.
pub fn views_equal(g1: &PortGraph, v1: NodeId, g2: &PortGraph, v2: NodeId, h: usize) -> bool {
    if std::ptr::eq(g1, g2) {
        if v1 == v2 {
            return true;
        }
        let p = refine_classes(g1, h);
        return p.class(h, v1) == p.class(h, v2);
    }
    let (mut adj, mut deg) = ball(g1, v1, h);
    let (adj2, deg2) = ball(g2, v2, h);
    let off = adj.len();
    adj.extend(adj2.into_iter().map(|row| {
        row.into_iter()
            .map(|(u, q)| (if u == OUTSIDE { OUTSIDE } else { u + off }, q))
            .collect()
    }));
    deg.extend(deg2);
    let (mut cls, _) = dense_from_keys(deg.into_iter());
    for _ in 0..h {
        cls = refine_step(&adj, &cls).0;
    }
    cls[0] == cls[off]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_plg;

    fn line3() -> PortGraph {
        parse_plg("plg 1\nnodes 3\nedge 0 0 1 0\nedge 1 1 2 0\n").unwrap()
    }

    /// 4-cycle where every node has port 0 clockwise and port 1 counter-clockwise.
    fn alt_cycle4() -> PortGraph {
        PortGraph::from_edges(4, &[(0, 0, 1, 1), (1, 0, 2, 1), (2, 0, 3, 1), (3, 0, 0, 1)]).unwrap()
    }

    #[test]
    fn line_views() {
        let g = line3();
        let v = build_view(&g, 1, 1).unwrap();
        assert_eq!(v.root.degree, 2);
        assert_eq!(v.root.children.len(), 2);
        for e in &v.root.children {
            assert_eq!(e.incoming_port, 0);
            assert_eq!(e.child.degree, 1);
        }
        let leaf = build_view(&g, 0, 0).unwrap();
        assert_eq!(leaf.root.degree, 1);
        assert!(leaf.root.children.is_empty());
    }

    #[test]
    fn depth_zero_encoding() {
        let k = PortGraph::from_edges(4, &[(0, 0, 1, 0), (0, 1, 2, 0), (0, 2, 3, 0)]).unwrap();
        assert_eq!(canonical_encoding(&build_view(&k, 0, 0).unwrap()), vec![0x00, 0x03]);
    }

    #[test]
    fn line_end_encodings_differ() {
        let g = line3();
        let a = canonical_encoding(&build_view(&g, 0, 1).unwrap());
        let b = canonical_encoding(&build_view(&g, 2, 1).unwrap());
        // h=1, deg 1, via port 0 arrive on q, deg 2
        assert_eq!(a, vec![1, 1, 0, 2]);
        assert_eq!(b, vec![1, 1, 1, 2]);
    }

    #[test]
    fn alternating_cycle_is_symmetric() {
        let g = alt_cycle4();
        let v0 = build_view(&g, 0, 2).unwrap();
        for v in 1..4 {
            assert_eq!(build_view(&g, v, 2).unwrap(), v0);
        }
        let p = refine_classes(&g, 5);
        for d in 0..=5 {
            assert_eq!(p.class_count(d), 1);
        }
        assert!(unique_view_nodes(&g, 3).is_empty());
    }

    #[test]
    fn line_classes() {
        let g = line3();
        let p = refine_classes(&g, 1);
        assert_eq!(p.class(0, 0), p.class(0, 2));
        assert_ne!(p.class(0, 0), p.class(0, 1));
        assert_eq!(p.class_count(1), 3);
        assert_eq!(unique_view_nodes(&g, 0), BTreeSet::from([1]));
    }

    #[test]
    fn lex_min_by_encoding() {
        let g = line3();
        assert_eq!(lex_min_view(&g, &BTreeSet::from([2]), 3).unwrap(), 2);
        // degree 1 < degree 2 at depth 0
        assert_eq!(lex_min_view(&g, &BTreeSet::from([0, 1]), 0).unwrap(), 0);
        assert!(matches!(lex_min_view(&g, &BTreeSet::from([0, 2]), 0), Err(ViewError::TiedViews { .. })));
        let star = PortGraph::from_edges(4, &[(0, 0, 1, 0), (0, 1, 2, 0), (0, 2, 3, 0), (1, 1, 2, 1)]).unwrap();
        // node 1 and 2 have degree 2, node 0 degree 3
        assert_eq!(lex_min_view(&star, &BTreeSet::from([0, 1]), 0).unwrap(), 1);
    }

    #[test]
    fn budget_guard() {
        let g = alt_cycle4();
        assert!(matches!(build_view_with_budget(&g, 0, 10, 100), Err(ViewError::DepthTooLarge { .. })));
    }

    #[test]
    fn encoding_roundtrip() {
        let g = alt_cycle4();
        let v = build_view(&g, 0, 3).unwrap();
        let enc = canonical_encoding(&v);
        assert_eq!(decode_encoding(&enc).unwrap(), v);
        assert!(decode_encoding(&enc[..enc.len() - 1]).is_err());
        let mut big = Vec::new();
        push_varint(&mut big, 300);
        assert_eq!(big, vec![0xac, 0x02]);
        let mut pos = 0;
        assert_eq!(read_varint(&big, &mut pos), Some(300));
    }

    #[test]
    fn cross_graph_equality() {
        let g = line3();
        let h = alt_cycle4();
        assert!(views_equal(&g, 1, &g, 1, 4));
        assert!(!views_equal(&g, 0, &h, 0, 0));
        let g2 = line3();
        assert!(views_equal(&g, 0, &g2, 0, 3));
        assert!(!views_equal(&g, 0, &g2, 2, 1));
        assert!(views_equal(&g, 0, &g2, 2, 0));
    }

    #[test]
    fn shortest_path_in_view() {
        let g = line3();
        let v = build_view(&g, 0, 2).unwrap();
        assert_eq!(v.shortest_path_to(|n| n.degree == 2), Some(vec![(0, 0)]));
        assert_eq!(v.shortest_path_where(|_, p| p.len() == 2), Some(vec![(0, 0), (0, 0)]));
    }
}
