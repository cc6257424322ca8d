//! The path-election lower-bound family: chains of `2^z` gadgets, each four copies of
//! a layered component `H` glued at a center `rho`, where the gadget index is written
//! in binary into the last layer through extra edges.
//!
//! Layer nodes are addressed by `(b, seq)`: the node reached from root `r_b` of the
//! layer by the outgoing ports `seq`. Middle nodes of even layers use `b = 0`, and
//! the nodes of `L_1` are addressed `(0, [i])` by the port `i` at `r^0_0`. Within a
//! layer, nodes are numbered in lexicographic order of `b` followed by `seq`, which
//! is also the border order `w_1..w_z`. The component numbers its layers `L_0` to
//! `L_{k-1}`, then the two copies of `L_k`.
//!
//! Gadget `i` occupies a contiguous block: `rho_i` first, then the non-center nodes of
//! the left, top, right and bottom copies of `H` in component order. Bit `q` of a
//! gadget index is the `q`-th most significant of its `z` bits.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::advice::{decode_map_advice, map_advice, Advice};
use crate::graph::{GraphBuilder, NodeId, Port, PortGraph};
use crate::lemma::{FamilyError, LemmaReport};
use crate::sim::{run, run_streaming, NodeProgram, RunTrace, SimConfig, SimError};
use crate::tasks::{ElectionOutput, TaskId, Validator, Violation};
use crate::view::{refine_classes, views_equal, ViewNode, ViewTree};

pub const J_SIZE_GUARD: u128 = 2_000_000;

/// Component names in port order at `rho`.
pub const COMPONENTS: [char; 4] = ['L', 'T', 'R', 'B'];
pub const LEFT: usize = 0;
pub const TOP: usize = 1;
pub const RIGHT: usize = 2;
pub const BOTTOM: usize = 3;

pub type LayerKey = (u8, Vec<usize>);

fn check_params(mu: usize, k: usize) -> Result<(), FamilyError> {
    if mu < 2 || k < 4 {
        return Err(FamilyError::ParamOutOfRange(format!("need mu >= 2 and k >= 4, got mu={mu} k={k}")));
    }
    Ok(())
}

/// Node count of `L_m` from the closed forms.
pub fn layer_size(mu: usize, m: usize) -> u128 {
    let mu = mu as u128;
    match m {
        0 => 1,
        1 => mu,
        _ if m % 2 == 0 => {
            let j = (m / 2) as u32;
            (mu.pow(j + 1) + mu.pow(j) - 2) / (mu - 1)
        }
        _ => {
            let j = (m / 2) as u32;
            (2 * mu.pow(j + 1) - 2) / (mu - 1)
        }
    }
}

/// `z = |L_k|`.
pub fn border_count(mu: usize, k: usize) -> u128 {
    layer_size(mu, k)
}

/// `2^(2^(z-1))`.
pub fn class_size_j(mu: usize, k: usize) -> Result<BigUint, FamilyError> {
    check_params(mu, k)?;
    let z = border_count(mu, k);
    let exp = u64::try_from(z - 1)
        .ok()
        .filter(|&e| e < 40)
        .ok_or_else(|| FamilyError::ParamOutOfRange(format!("z={z} too large to count")))?;
    Ok(BigUint::from(1u32) << (1u64 << exp))
}

/// Node count of every graph of the class.
pub fn j_node_count(mu: usize, k: usize) -> Result<u128, FamilyError> {
    check_params(mu, k)?;
    let h: u128 = (0..k).map(|m| layer_size(mu, m)).sum::<u128>() + 2 * layer_size(mu, k);
    let z = border_count(mu, k);
    if z >= 100 {
        return Err(FamilyError::SizeGuard { nodes: u128::MAX, limit: J_SIZE_GUARD });
    }
    (1u128 << z)
        .checked_mul(4 * h - 3)
        .ok_or(FamilyError::SizeGuard { nodes: u128::MAX, limit: J_SIZE_GUARD })
}

/// The nodes of one layer with their addresses.
#[derive(Debug, Clone)]
struct Layer {
    keys: Vec<LayerKey>,
    index: HashMap<LayerKey, usize>,
}

impl Layer {
    fn new(mu: usize, m: usize) -> Layer {
        let mut keys = Vec::new();
        let mut index = HashMap::new();
        match m {
            0 => keys.push((0, vec![])),
            1 => keys.extend((0..mu).map(|i| (0, vec![i]))),
            _ => {
                let j = m / 2;
                fn visit(b: u8, seq: &mut Vec<usize>, j: usize, mu: usize, skip_middle: bool, out: &mut Vec<LayerKey>) {
                    if !(skip_middle && seq.len() == j) {
                        out.push((b, seq.clone()));
                    }
                    if seq.len() < j {
                        for c in 0..mu {
                            seq.push(c);
                            visit(b, seq, j, mu, skip_middle, out);
                            seq.pop();
                        }
                    }
                }
                visit(0, &mut Vec::new(), j, mu, false, &mut keys);
                visit(1, &mut Vec::new(), j, mu, m % 2 == 0, &mut keys);
            }
        }
        for (i, key) in keys.iter().enumerate() {
            index.insert(key.clone(), i);
        }
        if m >= 2 && m % 2 == 0 {
            // middle nodes are shared by both trees
            for (i, (b, seq)) in keys.iter().enumerate() {
                if *b == 0 && seq.len() == m / 2 {
                    index.insert((1, seq.clone()), i);
                }
            }
        }
        Layer { keys, index }
    }

    fn at(&self, b: u8, seq: &[usize]) -> usize {
        self.index[&(b, seq.to_vec())]
    }

    /// Edges inside the layer, in local numbering.
    fn edges(&self, mu: usize, m: usize) -> Vec<(usize, Port, usize, Port)> {
        let mut out = Vec::new();
        match m {
            0 => {}
            1 => {
                for i in 0..mu {
                    for j in i + 1..mu {
                        out.push((i, j - 1, j, i));
                    }
                }
            }
            _ => {
                let j = m / 2;
                for (b, seq) in &self.keys {
                    if seq.len() < j {
                        let parent = self.at(*b, seq);
                        for c in 0..mu {
                            let mut s = seq.clone();
                            s.push(c);
                            let child = self.at(*b, &s);
                            let up = if s.len() < j {
                                mu
                            } else if m % 2 == 0 {
                                *b as usize
                            } else {
                                0
                            };
                            out.push((parent, c, child, up));
                        }
                    }
                }
                if m % 2 == 1 {
                    for (b, seq) in &self.keys {
                        if *b == 0 && seq.len() == j {
                            out.push((self.at(0, seq), 1, self.at(1, seq), 1));
                        }
                    }
                }
            }
        }
        out
    }
}

/// `L_m` on its own, with node addresses in numbering order.
pub fn build_layer(mu: usize, m: usize) -> Result<(PortGraph, Vec<LayerKey>), FamilyError> {
    if mu < 2 {
        return Err(FamilyError::ParamOutOfRange(format!("need mu >= 2, got {mu}")));
    }
    if m > 12 || layer_size(mu, m) > J_SIZE_GUARD {
        return Err(FamilyError::ParamOutOfRange(format!("layer {m} too large")));
    }
    let layer = Layer::new(mu, m);
    let g = PortGraph::from_edges(layer.keys.len(), &layer.edges(mu, m))?;
    Ok((g, layer.keys))
}

/// Edges between `L_m` and `L_{m+1}` as `(key in L_m, port, key in L_{m+1}, port)`.
fn interlayer(mu: usize, m: usize) -> Vec<(LayerKey, Port, LayerKey, Port)> {
    let mut out = Vec::new();
    match m {
        0 => {
            for i in 0..mu {
                out.push(((0, vec![]), i, (0, vec![i]), mu - 1));
            }
        }
        1 => {
            for i in 0..mu {
                out.push(((0, vec![i]), mu, (0, vec![i]), 2));
            }
            out.push(((0, vec![0]), mu + 1, (0, vec![]), mu));
            out.push(((0, vec![mu - 1]), mu + 1, (1, vec![]), mu));
        }
        _ => {
            for b in 0..2u8 {
                out.push(((b, vec![]), mu + 1, (b, vec![]), mu));
            }
            let mut seqs: Vec<Vec<usize>> = vec![vec![]];
            for len in 1..=m / 2 {
                seqs = seqs
                    .iter()
                    .flat_map(|s| (0..mu).map(move |c| {
                        let mut t = s.clone();
                        t.push(c);
                        t
                    }))
                    .collect();
                if len < m / 2 {
                    for s in &seqs {
                        for b in 0..2u8 {
                            out.push(((b, s.clone()), mu + 2, (b, s.clone()), mu + 1));
                        }
                    }
                } else if m % 2 == 0 {
                    let (p0, p1) = if m == 2 { (3, 4) } else { (4, 5) };
                    for s in &seqs {
                        out.push(((0, s.clone()), p0, (0, s.clone()), 2));
                        out.push(((0, s.clone()), p1, (1, s.clone()), 2));
                    }
                }
            }
            if m % 2 == 1 {
                // middle nodes of odd layers have depth (m-1)/2
                for s in &seqs {
                    for b in 0..2u8 {
                        out.push(((b, s.clone()), 3, (b, s.clone()), mu + 1));
                        for i in 0..mu {
                            let mut t = s.clone();
                            t.push(i);
                            out.push(((b, s.clone()), 4 + i, (b, t), 2 + b as usize));
                        }
                    }
                }
            }
        }
    }
    out
}

/// The component graph `H` with its border nodes.
#[derive(Debug, Clone)]
pub struct Component {
    pub mu: usize,
    pub k: usize,
    pub graph: PortGraph,
    /// `0..k` for `L_0..L_{k-1}`, then `k` and `k+1` for the two copies of `L_k`.
    pub layer_of: Vec<usize>,
    pub keys: Vec<LayerKey>,
    /// `border[q-1] = [w_{q,1}, w_{q,2}]`.
    pub border: Vec<[NodeId; 2]>,
}

impl Component {
    pub fn z(&self) -> usize {
        self.border.len()
    }

    pub fn root(&self) -> NodeId {
        0
    }
}

pub fn build_component_h(mu: usize, k: usize) -> Result<Component, FamilyError> {
    check_params(mu, k)?;
    if k > 12 || 4 * ((0..=k).map(|m| layer_size(mu, m)).sum::<u128>()) > J_SIZE_GUARD {
        return Err(FamilyError::SizeGuard { nodes: u128::MAX, limit: J_SIZE_GUARD });
    }
    let layers: Vec<Layer> = (0..=k).map(|m| Layer::new(mu, m)).collect();
    let mut offsets = Vec::new();
    let mut n = 0;
    let mut layer_of = Vec::new();
    let mut keys = Vec::new();
    for slot in 0..=k + 1 {
        let m = slot.min(k);
        offsets.push(n);
        n += layers[m].keys.len();
        layer_of.extend(std::iter::repeat_n(slot, layers[m].keys.len()));
        keys.extend(layers[m].keys.iter().cloned());
    }
    let mut edges = Vec::new();
    for slot in 0..=k + 1 {
        let m = slot.min(k);
        for (a, p, b, q) in layers[m].edges(mu, m) {
            edges.push((offsets[slot] + a, p, offsets[slot] + b, q));
        }
    }
    for m in 0..k {
        let lo = &layers[m];
        let hi = &layers[m + 1];
        let first = interlayer(mu, m);
        let targets: &[usize] = if m + 1 == k { &[k, k + 1] } else { &[m + 1] };
        for (copy, &slot) in targets.iter().enumerate() {
            // the second copy of L_k continues the port numbering at L_{k-1}
            let mut used: HashMap<usize, usize> = HashMap::new();
            if copy == 1 {
                for (a, _, _, _) in &first {
                    *used.entry(lo.index[a]).or_default() += 1;
                }
            }
            for (a, p, b, q) in &first {
                let la = lo.index[a];
                let shift = used.get(&la).copied().unwrap_or(0);
                edges.push((offsets[m] + la, p + shift, offsets[slot] + hi.index[b], *q));
            }
        }
    }
    let graph = PortGraph::from_edges(n, &edges)?;
    let z = layers[k].keys.len();
    let border = (0..z).map(|q| [offsets[k] + q, offsets[k + 1] + q]).collect();
    Ok(Component { mu, k, graph, layer_of, keys, border })
}

/// Every node of `H` misses some pair `w_{l,1}, w_{l,2}` within distance `k-1`.
pub fn check_invisible_leaf_h(comp: &Component) -> Result<LemmaReport, FamilyError> {
    let mut rep = LemmaReport::new("j", format!("mu={} k={} component", comp.mu, comp.k));
    let mut all_within_k = true;
    let mut sees_all = None;
    for v in 0..comp.graph.n() {
        let d = comp.graph.bfs_distances(v);
        if !comp.border.iter().any(|&[a, b]| d[a] >= comp.k && d[b] >= comp.k) {
            sees_all = sees_all.or(Some(v));
        }
        all_within_k &= comp.border.iter().all(|&[a, b]| d[a] <= comp.k || d[b] <= comp.k);
    }
    let detail = match sees_all {
        None => format!("each of the {} nodes misses a border pair within {}", comp.graph.n(), comp.k - 1),
        Some(v) => format!("node {v} sees every border pair within {}", comp.k - 1),
    };
    rep.require("invisible-leaf-component", sees_all.is_none(), detail)?;
    rep.require("border-within-k", all_within_k, "every node reaches one node of each border pair within k")?;
    Ok(rep)
}

/// The gadget: four copies of `H` sharing the center.
pub fn build_gadget(mu: usize, k: usize) -> Result<(PortGraph, Component), FamilyError> {
    let comp = build_component_h(mu, k)?;
    let mut b = GraphBuilder::new();
    add_gadget(&mut b, &comp);
    Ok((b.build()?, comp))
}

fn add_gadget(b: &mut GraphBuilder, comp: &Component) -> NodeId {
    let h = comp.graph.n();
    let rho = b.add_node();
    let base = rho + 1;
    for _ in 0..4 * (h - 1) {
        b.add_node();
    }
    let map = |c: usize, u: NodeId| if u == 0 { rho } else { base + c * (h - 1) + u - 1 };
    for (u, p, v, q) in comp.graph.edges() {
        for c in 0..4 {
            let p2 = if u == 0 { p + c * comp.mu } else { p };
            let q2 = if v == 0 { q + c * comp.mu } else { q };
            b.add_edge(map(c, u), p2, map(c, v), q2);
        }
    }
    rho
}

/// Position of a node of `J_Y` inside its gadget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct JPlace {
    pub gadget: usize,
    /// `None` for the center.
    pub component: Option<usize>,
    pub h_node: NodeId,
}

#[derive(Debug, Clone)]
pub struct JInstance {
    pub graph: PortGraph,
    pub mu: usize,
    pub k: usize,
    pub z: usize,
    /// Empty for the template.
    pub y: Vec<bool>,
    pub comp: Component,
}

impl JInstance {
    pub fn gadget_count(&self) -> usize {
        1 << self.z
    }

    pub fn gadget_size(&self) -> usize {
        4 * self.comp.graph.n() - 3
    }

    pub fn rho(&self, i: usize) -> NodeId {
        i * self.gadget_size()
    }

    pub fn node(&self, gadget: usize, component: usize, h_node: NodeId) -> NodeId {
        if h_node == 0 {
            return self.rho(gadget);
        }
        self.rho(gadget) + 1 + component * (self.comp.graph.n() - 1) + h_node - 1
    }

    /// `w_{q,b}` (1-based `q`, `b` in 1..=2).
    pub fn border(&self, gadget: usize, component: usize, q: usize, b: usize) -> NodeId {
        self.node(gadget, component, self.comp.border[q - 1][b - 1])
    }

    pub fn place(&self, v: NodeId) -> JPlace {
        let gs = self.gadget_size();
        let (gadget, off) = (v / gs, v % gs);
        if off == 0 {
            return JPlace { gadget, component: None, h_node: 0 };
        }
        let h1 = self.comp.graph.n() - 1;
        JPlace { gadget, component: Some((off - 1) / h1), h_node: (off - 1) % h1 + 1 }
    }

    pub fn sidecar(&self) -> serde_json::Value {
        let rho: Vec<NodeId> = (0..self.gadget_count()).map(|i| self.rho(i)).collect();
        let border: Vec<Vec<Vec<[NodeId; 2]>>> = (0..self.gadget_count())
            .map(|i| {
                (0..4)
                    .map(|c| (1..=self.z).map(|q| [self.border(i, c, q, 1), self.border(i, c, q, 2)]).collect())
                    .collect()
            })
            .collect();
        let y: String = self.y.iter().map(|&b| if b { '1' } else { '0' }).collect();
        serde_json::json!({
            "family": "j",
            "mu": self.mu,
            "k": self.k,
            "z": self.z,
            "y": y,
            "nodes": self.graph.n(),
            "rho": rho,
            "border": border,
        })
    }
}

/// Bit `q` (1-based, most significant first) of the `z`-bit form of `i`.
pub fn bit(i: usize, z: usize, q: usize) -> bool {
    (i >> (z - q)) & 1 == 1
}

pub fn build_template_j(mu: usize, k: usize) -> Result<JInstance, FamilyError> {
    build_template_j_with_guard(mu, k, J_SIZE_GUARD)
}

pub fn build_template_j_with_guard(mu: usize, k: usize, guard: u128) -> Result<JInstance, FamilyError> {
    let nodes = j_node_count(mu, k)?;
    if nodes > guard {
        return Err(FamilyError::SizeGuard { nodes, limit: guard });
    }
    let comp = build_component_h(mu, k)?;
    let z = comp.z();
    let mut b = GraphBuilder::new();
    for _ in 0..1usize << z {
        add_gadget(&mut b, &comp);
    }
    let shell = JInstance { graph: PortGraph::from_edges(1, &[])?, mu, k, z, y: Vec::new(), comp };
    for i in 1..shell.gadget_count() {
        for q in (1..=z).filter(|&q| bit(i, z, q)) {
            let port = shell.comp.graph.degree(shell.comp.border[q - 1][0]);
            let w = |g: usize, c: usize, bb: usize| shell.border(g, c, q, bb);
            b.add_edge(w(i - 1, BOTTOM, 1), port, w(i - 1, BOTTOM, 2), port);
            b.add_edge(w(i, TOP, 1), port, w(i, TOP, 2), port);
            b.add_edge(w(i - 1, RIGHT, 1), port, w(i, LEFT, 2), port);
            b.add_edge(w(i - 1, RIGHT, 2), port, w(i, LEFT, 1), port);
        }
    }
    Ok(JInstance { graph: b.build()?, ..shell })
}

/// Applies the center port swaps selected by `y` to the template.
pub fn apply_y(template: &JInstance, y: &[bool]) -> Result<JInstance, FamilyError> {
    let half = template.gadget_count() / 2;
    if y.len() != half {
        return Err(FamilyError::BadSequence(format!("Y needs {half} bits, got {}", y.len())));
    }
    let mu = template.mu;
    let last = template.gadget_count() - 1;
    let mut g = template.graph.clone();
    for (i, _) in y.iter().enumerate().filter(|(_, &b)| b) {
        for x in 2 * mu..3 * mu {
            g.swap_ports(template.rho(i), x, x + mu);
        }
        for x in 0..mu {
            g.swap_ports(template.rho(last - i), x, x + mu);
        }
    }
    Ok(JInstance { graph: g, y: y.to_vec(), ..template.clone() })
}

pub fn build_jy(mu: usize, k: usize, y: &[bool]) -> Result<JInstance, FamilyError> {
    apply_y(&build_template_j(mu, k)?, y)
}

/// Parses a bit string such as `"1000"`.
pub fn parse_y(s: &str) -> Result<Vec<bool>, FamilyError> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(FamilyError::BadSequence(format!("Y must be binary, found {c:?}"))),
        })
        .collect()
}

/// Lex-least shortest port path inside `H` from `from` to `to`, with a flag per
/// step telling whether the step leaves the center (whose ports get shifted).
fn h_path(comp: &Component, from: NodeId, to: NodeId) -> Vec<(Port, bool)> {
    let dist = comp.graph.bfs_distances(to);
    let mut cur = from;
    let mut out = Vec::new();
    while cur != to {
        let p = (0..comp.graph.degree(cur))
            .find(|&p| dist[comp.graph.ports(cur)[p].0] + 1 == dist[cur])
            .expect("component is connected");
        out.push((p, cur == 0));
        cur = comp.graph.ports(cur)[p].0;
    }
    out
}

fn shifted(path: &[(Port, bool)], mu: usize, c: usize) -> Vec<Port> {
    path.iter().map(|&(p, at_center)| if at_center { p + mu * c } else { p }).collect()
}

/// Decoding of the center's four integers into its gadget index.
pub fn decode_center(w: [usize; 4], z: usize) -> Result<usize, FamilyError> {
    let top = (1usize << z) - 1;
    let mut s = w;
    s.sort_unstable();
    if s == [0, 0, top, top] {
        return Ok(top);
    }
    if s[0] == s[1] && s[2] == s[3] && s[2] == s[0] + 1 {
        return Ok(s[0]);
    }
    Err(FamilyError::DecodeAmbiguity(format!("center integers {w:?}")))
}

/// Gadget index of a non-center node that reached its center through component `c`.
///
/// Left and top copies carry the gadget's own index whichever way they were swapped;
/// right and bottom copies carry the next index, wrapping to 0 at the last gadget.
pub fn decode_member(c: usize, w: usize, z: usize) -> usize {
    if c < 2 {
        w
    } else if w == 0 {
        (1 << z) - 1
    } else {
        w - 1
    }
}

/// Everything the path-election program derives from the map.
pub struct JMapState {
    mu: usize,
    z: usize,
    comp: Component,
    /// `paths[h][q-1]`: routes from `H` node `h` to those of `w_{q,1}, w_{q,2}`
    /// that lie within distance `k`.
    paths: Vec<Vec<Vec<Vec<(Port, bool)>>>>,
    /// `sigma[x]` for `x >= 1`: lex-least shortest route from `rho_x` to `rho_{x-1}`.
    sigma: Vec<Vec<(Port, Port)>>,
    /// Per gadget, `(component, H node) -> step` for the part of `sigma[x]` inside it.
    on_sigma: Vec<HashMap<(usize, NodeId), usize>>,
    pub rho_of: Vec<NodeId>,
}

impl JMapState {
    fn w_integer(&self, c: usize, start: NodeId, degree_at: impl Fn(&[Port]) -> Option<usize>) -> Result<usize, String> {
        let mut w = 0usize;
        for q in 1..=self.z {
            let base = self.comp.graph.degree(self.comp.border[q - 1][0]);
            let mut bit = None;
            for path in &self.paths[start][q - 1] {
                let d = degree_at(&shifted(path, self.mu, c)).ok_or_else(|| format!("border pair {q} unreachable"))?;
                if d != base && d != base + 1 {
                    return Err(format!("border node of pair {q} has degree {d}, expected {base} or {}", base + 1));
                }
                if bit.is_some_and(|b| b != (d == base + 1)) {
                    return Err(format!("border pair {q} disagrees"));
                }
                bit = Some(d == base + 1);
            }
            w = (w << 1) | bit.ok_or_else(|| format!("border pair {q} out of view"))? as usize;
        }
        Ok(w)
    }

    fn center_index(&self, degree_at: impl Fn(&[Port]) -> Option<usize>) -> Result<usize, String> {
        let mut w = [0; 4];
        for (c, slot) in w.iter_mut().enumerate() {
            *slot = self.w_integer(c, 0, &degree_at)?;
        }
        decode_center(w, self.z).map_err(|e| e.to_string())
    }

    fn tail(&self, x: usize, out: &mut Vec<(Port, Port)>) {
        for i in (1..x).rev() {
            out.extend_from_slice(&self.sigma[i]);
        }
    }
}

/// Lex-least shortest route between two nodes, searching at most `radius` hops out.
fn local_route(g: &PortGraph, from: NodeId, to: NodeId, radius: usize) -> Option<Vec<(Port, Port)>> {
    let mut dist: HashMap<NodeId, usize> = HashMap::from([(to, 0)]);
    let mut queue = VecDeque::from([to]);
    while let Some(v) = queue.pop_front() {
        let d = dist[&v];
        if v == from || d == radius {
            continue;
        }
        for &(u, _) in g.ports(v) {
            dist.entry(u).or_insert_with(|| {
                queue.push_back(u);
                d + 1
            });
        }
    }
    let mut cur = from;
    let mut out = Vec::new();
    let mut left = *dist.get(&from)?;
    while cur != to {
        let (p, &(u, q)) = g.ports(cur).iter().enumerate().find(|(_, (u, _))| dist.get(u) == Some(&(left - 1)))?;
        out.push((p, q));
        cur = u;
        left -= 1;
    }
    Some(out)
}

/// The `k`-round complete-port-path program that receives the whole graph as advice.
#[derive(Debug, Clone, Copy)]
pub struct JCppeProgram {
    pub mu: usize,
    pub k: usize,
}

impl JCppeProgram {
    pub fn prepare_from_map(&self, map: &PortGraph) -> Result<JMapState, FamilyError> {
        let (mu, k) = (self.mu, self.k);
        let comp = build_component_h(mu, k)?;
        let z = comp.z();
        let gadgets = 1usize << z;
        let centers: Vec<NodeId> = (0..map.n()).filter(|&v| map.degree(v) == 4 * mu).collect();
        if centers.len() != gadgets {
            return Err(FamilyError::NotAFamilyInstance(format!(
                "expected {gadgets} nodes of degree {}, found {}",
                4 * mu,
                centers.len()
            )));
        }
        let mut paths = Vec::with_capacity(comp.graph.n());
        for h in 0..comp.graph.n() {
            let mut row = Vec::new();
            for (q, pair) in comp.border.iter().enumerate() {
                let near: Vec<_> = pair.iter().map(|&w| h_path(&comp, h, w)).filter(|p| p.len() <= k).collect();
                if near.is_empty() {
                    return Err(FamilyError::NotAFamilyInstance(format!("border pair {} is beyond {k} hops from {h}", q + 1)));
                }
                row.push(near);
            }
            paths.push(row);
        }
        let mut state =
            JMapState { mu, z, comp, paths, sigma: Vec::new(), on_sigma: Vec::new(), rho_of: vec![usize::MAX; gadgets] };
        for &r in &centers {
            let x = state
                .center_index(|ports| {
                    let mut cur = r;
                    for &p in ports {
                        cur = map.follow_port(cur, p).ok()?.0;
                    }
                    Some(map.degree(cur))
                })
                .map_err(FamilyError::DecodeAmbiguity)?;
            if state.rho_of[x] != usize::MAX {
                return Err(FamilyError::DecodeAmbiguity(format!("two centers decode to gadget {x}")));
            }
            state.rho_of[x] = r;
        }
        let radius = 2 * k + 1;
        let sigma: Result<Vec<Vec<(Port, Port)>>, FamilyError> = (0..gadgets)
            .into_par_iter()
            .map(|x| {
                if x == 0 {
                    return Ok(Vec::new());
                }
                local_route(map, state.rho_of[x], state.rho_of[x - 1], radius).ok_or_else(|| {
                    FamilyError::NotAFamilyInstance(format!("no route of length <= {radius} from gadget {x} to {}", x - 1))
                })
            })
            .collect();
        state.sigma = sigma?;
        state.on_sigma = state
            .sigma
            .iter()
            .map(|route| {
                let mut at = HashMap::new();
                if let Some(&(p0, _)) = route.first() {
                    let c = p0 / mu;
                    let mut h = 0;
                    for (step, &(p, _)) in route.iter().enumerate().take(k) {
                        let hp = if h == 0 { p - mu * c } else { p };
                        match state.comp.graph.follow_port(h, hp) {
                            Ok((next, _)) => h = next,
                            Err(_) => break,
                        }
                        at.insert((c, h), step + 1);
                    }
                }
                at
            })
            .collect();
        Ok(state)
    }
}

impl NodeProgram for JCppeProgram {
    type State = JMapState;

    fn prepare(&self, advice: &Advice) -> Result<JMapState, SimError> {
        let map = decode_map_advice(advice).map_err(|e| SimError::BadAdvice(e.to_string()))?;
        self.prepare_from_map(&map).map_err(|e| SimError::BadAdvice(e.to_string()))
    }

    fn rounds(&self, _: &JMapState) -> usize {
        self.k
    }

    fn output(&self, st: &JMapState, view: &ViewTree) -> Result<ElectionOutput, String> {
        let four_mu = 4 * st.mu;
        let degree_at = |ports: &[Port]| view.walk(ports).map(|n| n.degree);
        if view.degree() == four_mu {
            let x = st.center_index(degree_at)?;
            if x == 0 {
                return Ok(ElectionOutput::Leader);
            }
            let mut out = Vec::new();
            st.tail(x + 1, &mut out);
            return Ok(ElectionOutput::PairSeq(out));
        }
        let q = view
            .shortest_path_to(|n: &ViewNode| n.degree == four_mu)
            .ok_or_else(|| "no center within view".to_string())?;
        let d = q.len();
        let c = q[d - 1].1 / st.mu;
        // positions in H along the route, from the center back to this node
        let h = &st.comp.graph;
        let mut pos = vec![0; d + 1];
        for t in (0..d).rev() {
            let back = if pos[t + 1] == 0 { q[t].1 - st.mu * c } else { q[t].1 };
            let (prev, arrive) = h.follow_port(pos[t + 1], back).map_err(|e| e.to_string())?;
            let fwd = if prev == 0 { arrive + st.mu * c } else { arrive };
            if fwd != q[t].0 {
                return Err("route to the center leaves the component".into());
            }
            pos[t] = prev;
        }
        let w = st.w_integer(c, pos[0], degree_at)?;
        let x = decode_member(c, w, st.z);
        let mut out = Vec::new();
        if x == 0 {
            out.extend_from_slice(&q);
            return Ok(ElectionOutput::PairSeq(out));
        }
        let meet = (0..d).find_map(|t| st.on_sigma[x].get(&(c, pos[t])).map(|&s| (t, s))).unwrap_or((d, 0));
        out.extend_from_slice(&q[..meet.0]);
        out.extend_from_slice(&st.sigma[x][meet.1..]);
        st.tail(x, &mut out);
        Ok(ElectionOutput::PairSeq(out))
    }
}

fn family_err(e: SimError) -> FamilyError {
    match e {
        SimError::BadAdvice(m) => FamilyError::NotAFamilyInstance(m),
        other => FamilyError::NotAFamilyInstance(other.to_string()),
    }
}

/// Runs the map-based program and collects every output. Outputs are long chains of
/// port pairs; on full-size instances use [`cppe_map_streaming`].
pub fn cppe_map_algorithm(g: &PortGraph, map: &PortGraph, mu: usize, k: usize) -> Result<Vec<ElectionOutput>, FamilyError> {
    let (outputs, _) = run(g, &JCppeProgram { mu, k }, &map_advice(map)).map_err(family_err)?;
    Ok(outputs)
}

/// Runs the map-based program handing each output to `sink`.
pub fn cppe_map_streaming(
    g: &PortGraph,
    map: &PortGraph,
    mu: usize,
    k: usize,
    sink: impl Fn(NodeId, ElectionOutput) + Sync,
) -> Result<RunTrace, FamilyError> {
    run_streaming(g, &JCppeProgram { mu, k }, &map_advice(map), SimConfig::default(), sink).map_err(family_err)
}

/// Which outputs get walked during validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePolicy {
    pub seed: u64,
    pub fraction: f64,
    /// Validate every node.
    pub full: bool,
    /// Gadgets validated in full besides the centers.
    pub full_gadgets: [usize; 3],
}

impl SamplePolicy {
    pub fn standard(seed: u64, gadgets: usize) -> Self {
        SamplePolicy { seed, fraction: 0.01, full: false, full_gadgets: [0, 1, gadgets - 1] }
    }

    pub fn selection(&self, inst: &JInstance) -> Vec<bool> {
        let n = inst.graph.n();
        if self.full {
            return vec![true; n];
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..n)
            .map(|v| {
                let place = inst.place(v);
                let coin = rng.gen_bool(self.fraction);
                place.component.is_none() || self.full_gadgets.contains(&place.gadget) || coin
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CppeValidation {
    pub rounds: usize,
    pub leaders: Vec<NodeId>,
    pub expected_leader: NodeId,
    pub checked: usize,
    pub violation: Option<Violation>,
}

impl CppeValidation {
    pub fn is_valid(&self) -> bool {
        self.violation.is_none() && self.leaders == [self.expected_leader]
    }
}

/// Runs the program on every node, records all leaders, and walks the sampled outputs.
pub fn validate_cppe(inst: &JInstance, map: &PortGraph, policy: &SamplePolicy) -> Result<CppeValidation, FamilyError> {
    validate_cppe_on(&inst.graph, map, inst.mu, inst.k, inst.rho(0), &policy.selection(inst))
}

/// [`validate_cppe`] on a bare graph: outputs of nodes with `selected[v]` are walked
/// against `expected` as the leader.
pub fn validate_cppe_on(
    g: &PortGraph,
    map: &PortGraph,
    mu: usize,
    k: usize,
    expected: NodeId,
    selected: &[bool],
) -> Result<CppeValidation, FamilyError> {
    let leaders = Mutex::new(Vec::new());
    let pool: Mutex<Vec<Validator>> = Mutex::new(Vec::new());
    let first_bad: Mutex<Option<Violation>> = Mutex::new(None);
    let checked = AtomicUsize::new(0);
    let trace = cppe_map_streaming(g, map, mu, k, |v, out| {
        if out.is_leader() {
            leaders.lock().unwrap().push(v);
        }
        if !selected[v] {
            return;
        }
        let mut val = pool.lock().unwrap().pop().unwrap_or_else(|| Validator::new(g, TaskId::CPPE, expected));
        let r = val.check(v, &out);
        pool.lock().unwrap().push(val);
        checked.fetch_add(1, Ordering::Relaxed);
        if let Err(e) = r {
            let mut slot = first_bad.lock().unwrap();
            if slot.as_ref().is_none_or(|s| s.node > e.node) {
                *slot = Some(e);
            }
        }
    })?;
    let mut leaders = leaders.into_inner().unwrap();
    leaders.sort_unstable();
    Ok(CppeValidation {
        rounds: trace.rounds,
        leaders,
        expected_leader: expected,
        checked: checked.into_inner(),
        violation: first_bad.into_inner().unwrap(),
    })
}

/// The individually selectable checks on one instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JCheck {
    InvisibleLeaf,
    RhoSym,
    Twin,
    Cppe,
}

impl JCheck {
    pub const ALL: [JCheck; 4] = [JCheck::InvisibleLeaf, JCheck::RhoSym, JCheck::Twin, JCheck::Cppe];

    pub fn name(self) -> &'static str {
        match self {
            JCheck::InvisibleLeaf => "invisible-leaf",
            JCheck::RhoSym => "rho-sym",
            JCheck::Twin => "twin",
            JCheck::Cppe => "cppe",
        }
    }

    pub fn parse(s: &str) -> Option<JCheck> {
        JCheck::ALL.into_iter().find(|c| c.name() == s)
    }
}

/// Nodes within `r` hops of `v`.
fn ball(g: &PortGraph, v: NodeId, r: usize) -> HashSet<NodeId> {
    let mut seen = HashSet::from([v]);
    let mut frontier = vec![v];
    for _ in 0..r {
        let mut next = Vec::new();
        for x in frontier {
            for &(u, _) in g.ports(x) {
                if seen.insert(u) {
                    next.push(u);
                }
            }
        }
        frontier = next;
    }
    seen
}

pub fn check_j_instance(inst: &JInstance, checks: &[JCheck], policy: &SamplePolicy) -> Result<LemmaReport, FamilyError> {
    let (g, k) = (&inst.graph, inst.k);
    let y: String = inst.y.iter().map(|&b| if b { '1' } else { '0' }).collect();
    let short = if y.len() > 8 { format!("{}..({} bits)", &y[..8], y.len()) } else { y };
    let mut rep = LemmaReport::new("j", format!("mu={} k={k} Y={short}", inst.mu));
    let centers: Vec<NodeId> = (0..inst.gadget_count()).map(|i| inst.rho(i)).collect();
    let census = (0..g.n()).filter(|&v| g.degree(v) == 4 * inst.mu).eq(centers.iter().copied());
    rep.require("degree-census", census, format!("{} centers of degree {}", centers.len(), 4 * inst.mu))?;
    if checks.contains(&JCheck::InvisibleLeaf) {
        let bad = (0..g.n()).into_par_iter().find_first(|&v| {
            let seen = ball(g, v, k - 1);
            let place = inst.place(v);
            let comps: Vec<usize> = place.component.map_or_else(|| (0..4).collect(), |c| vec![c]);
            comps.iter().any(|&c| {
                !(1..=inst.z).any(|q| {
                    !seen.contains(&inst.border(place.gadget, c, q, 1)) && !seen.contains(&inst.border(place.gadget, c, q, 2))
                })
            })
        });
        rep.require("invisible-leaf", bad.is_none(), format!("every node misses a border pair at distance {}; witness {bad:?}", k - 1))?;
    }
    if checks.contains(&JCheck::RhoSym) || checks.contains(&JCheck::Twin) {
        let part = refine_classes(g, k - 1);
        if checks.contains(&JCheck::RhoSym) {
            let c0 = part.class(k - 1, centers[0]);
            let same = centers.iter().all(|&r| part.class(k - 1, r) == c0);
            rep.require("rho-sym", same, format!("{} centers share a depth-{} class", centers.len(), k - 1))?;
        }
        if checks.contains(&JCheck::Twin) {
            let lone = part.singletons(k - 1);
            rep.require("twin", lone.is_empty(), format!("singletons at depth {}: {:?}", k - 1, &lone[..lone.len().min(5)]))?;
        }
    }
    if checks.contains(&JCheck::Cppe) {
        let r = validate_cppe(inst, g, policy)?;
        rep.require(
            "cppe",
            r.is_valid() && r.rounds == k,
            format!("{} rounds, leaders {:?}, {} outputs walked, violation {:?}", r.rounds, r.leaders, r.checked, r.violation),
        )?;
    }
    Ok(rep)
}

/// What happens to a fixed port sequence when traced from a start node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum TraceOutcome {
    /// Simple and reaches gadget `2^(z-1)` or beyond.
    Crosses,
    Revisits { step: usize },
    MissingPort { step: usize },
    StaysLeft,
}

pub fn trace_outcome(inst: &JInstance, start: NodeId, ports: &[Port]) -> TraceOutcome {
    let half = inst.gadget_count() / 2;
    let mut seen = HashSet::from([start]);
    let mut cur = start;
    let mut crossed = inst.place(start).gadget >= half;
    for (step, &p) in ports.iter().enumerate() {
        match inst.graph.follow_port(cur, p) {
            Ok((u, _)) => cur = u,
            Err(_) => return TraceOutcome::MissingPort { step },
        }
        if !seen.insert(cur) {
            return TraceOutcome::Revisits { step };
        }
        crossed |= inst.place(cur).gadget >= half;
    }
    if crossed {
        TraceOutcome::Crosses
    } else {
        TraceOutcome::StaysLeft
    }
}

/// A simple route in `inst` from `w_{1,1}` of the left copy of gadget 0 through the
/// centers up to `rho_{2^(z-1)}`.
pub fn crossing_witness(inst: &JInstance) -> Result<Vec<Port>, FamilyError> {
    let start = inst.border(0, LEFT, 1, 1);
    let radius = 2 * inst.k + 1;
    let missing = || FamilyError::NotAFamilyInstance("no local route between consecutive centers".into());
    let mut ports: Vec<Port> = local_route(&inst.graph, start, inst.rho(0), radius).ok_or_else(missing)?.iter().map(|s| s.0).collect();
    for i in 0..inst.gadget_count() / 2 {
        let leg = local_route(&inst.graph, inst.rho(i), inst.rho(i + 1), radius).ok_or_else(missing)?;
        ports.extend(leg.iter().map(|s| s.0));
    }
    Ok(ports)
}

/// For two instances differing in `Y`: equal depth-`k` views at `w_{1,1}` of the left
/// copy of gadget 0, and a crossing route of one breaking in the other.
pub fn check_j_pair(a: &JInstance, b: &JInstance) -> Result<LemmaReport, FamilyError> {
    if a.y == b.y || a.y.len() != b.y.len() {
        return Err(FamilyError::BadSequence("pair must have distinct Y of equal length".into()));
    }
    let k = a.k;
    let mut rep = LemmaReport::new("j", format!("mu={} k={k} pair", a.mu));
    let (va, vb) = (a.border(0, LEFT, 1, 1), b.border(0, LEFT, 1, 1));
    rep.require("edge-view-equal", views_equal(&a.graph, va, &b.graph, vb, k), format!("B^{k} of node {va} equal in both"))?;
    for (x, y) in [(a, b), (b, a)] {
        let witness = crossing_witness(x)?;
        let own = trace_outcome(x, va, &witness);
        rep.require("witness-crosses", own == TraceOutcome::Crosses, format!("{} ports, {own:?}", witness.len()))?;
        let other = trace_outcome(y, vb, &witness);
        rep.require(
            "witness-breaks",
            matches!(other, TraceOutcome::Revisits { .. } | TraceOutcome::MissingPort { .. } | TraceOutcome::StaysLeft),
            format!("{other:?}"),
        )?;
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layer_sizes_match_closed_forms() {
        for mu in 2..=4 {
            for m in 0..=12 {
                let (g, keys) = build_layer(mu, m).unwrap();
                assert_eq!(g.n() as u128, layer_size(mu, m), "mu={mu} m={m}");
                assert_eq!(keys.len(), g.n());
            }
        }
        assert_eq!([0, 1, 2, 3, 4, 5].map(|m| layer_size(3, m)), [1, 3, 5, 8, 17, 26]);
        assert_eq!(border_count(2, 4), 10);
    }

    #[test]
    fn small_layers_by_hand() {
        let (l2, _) = build_layer(3, 2).unwrap();
        // two roots of degree 3, three middle nodes with ports 0 and 1
        assert_eq!((0..5).map(|v| l2.degree(v)).collect::<Vec<_>>(), vec![3, 2, 2, 2, 3]);
        let (l3, keys) = build_layer(3, 3).unwrap();
        assert_eq!(l3.n(), 8);
        let leaf = keys.iter().position(|k| *k == (0, vec![2])).unwrap();
        let twin = keys.iter().position(|k| *k == (1, vec![2])).unwrap();
        assert_eq!(l3.ports(leaf)[1], (twin, 1));
    }

    #[test]
    fn component_shape() {
        let h = build_component_h(2, 4).unwrap();
        assert_eq!(h.graph.n(), 33);
        assert_eq!(h.z(), 10);
        assert_eq!(h.graph.degree(0), 2);
        check_invisible_leaf_h(&h).unwrap();
        let h3 = build_component_h(3, 5).unwrap();
        check_invisible_leaf_h(&h3).unwrap();
    }

    #[test]
    fn gadget_shape() {
        let (g, h) = build_gadget(2, 4).unwrap();
        assert_eq!(g.n(), 4 * h.graph.n() - 3);
        assert_eq!(g.degree(0), 8);
        assert!((1..g.n()).all(|v| g.degree(v) != 8));
        // middle nodes of L_3 feed both copies of L_4: 3 + 2 * (mu + 1) ports
        let mid = h.keys.iter().zip(&h.layer_of).position(|(key, &l)| l == 3 && key.1.len() == 1).unwrap();
        assert_eq!(h.graph.degree(mid), 9);
        assert_eq!(g.max_degree(), 9);
    }

    #[test]
    fn class_counts() {
        assert_eq!(class_size_j(2, 4).unwrap(), BigUint::from(1u32) << 512u32);
        for (mu, k) in [(2, 4), (2, 5), (3, 4), (3, 6)] {
            let z = border_count(mu, k);
            let m = (mu as u128).pow(k as u32 / 2);
            assert!(m <= z && z <= 4 * m);
        }
        assert_eq!(j_node_count(2, 4).unwrap(), 1024 * 129);
        assert!(matches!(build_template_j(2, 5), Err(FamilyError::SizeGuard { .. })));
    }

    #[test]
    fn decoding_rules() {
        assert_eq!(decode_center([0, 0, 1, 1], 10).unwrap(), 0);
        assert_eq!(decode_center([1023, 1023, 0, 0], 10).unwrap(), 1023);
        assert_eq!(decode_center([5, 6, 6, 5], 10).unwrap(), 5);
        assert!(decode_center([5, 6, 7, 5], 10).is_err());
        assert_eq!(decode_member(0, 700, 10), 700);
        assert_eq!(decode_member(3, 700, 10), 699);
        assert_eq!(decode_member(2, 0, 10), 1023);
    }
}
