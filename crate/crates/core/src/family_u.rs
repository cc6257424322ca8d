//! The port-election lower-bound family: a cycle of tree roots, each with a
//! "heavy" copy hanging off a connecting path, where graphs differ only in which
//! port of the heavy copies leads back toward the cycle.
//!
//! Node numbering: for each `j` and `b = 1, 2` in turn, the cycle tree `T_{j,b}`
//! (root first, numbered as in the selection family), then the heavy tree
//! `T_{j,1,b}`, then the `k` inner nodes of the connecting path from `r_{j,b}`,
//! then the `delta-1` pendant paths of the heavy root in port order.

use std::collections::{HashMap, VecDeque};

use num_bigint::BigUint;
use serde::Serialize;

use crate::advice::{decode_map_advice, map_advice, Advice};
use crate::family_g::{add_txb, class_size_g, index_to_sequence, leaf_count, tree_t_size};
use crate::graph::{GraphBuilder, NodeId, Port, PortGraph};
use crate::lemma::{FamilyError, LemmaReport};
use crate::sim::{run, NodeProgram, SimError};
use crate::tasks::{validate_outputs, ElectionOutput, PeOracle, TaskId};
use crate::view::{build_view, canonical_encoding, refine_classes, views_equal, ViewTree};

pub const U_SIZE_GUARD: u128 = 2_000_000;

fn check_params(delta: usize, k: usize) -> Result<(), FamilyError> {
    if delta < 4 || k < 1 {
        return Err(FamilyError::ParamOutOfRange(format!("need delta >= 4 and k >= 1, got delta={delta} k={k}")));
    }
    Ok(())
}

/// Number of augmented trees, i.e. the length of `sigma`.
pub fn tree_count(delta: usize, k: usize) -> Result<u64, FamilyError> {
    let z = leaf_count(delta, k);
    let count = (delta as u128 - 1).checked_pow(z as u32).filter(|&c| c <= u64::MAX as u128);
    count
        .map(|c| c as u64)
        .ok_or_else(|| FamilyError::SizeGuard { nodes: u128::MAX, limit: U_SIZE_GUARD })
}

/// `(delta-1)^{|T|}`.
pub fn class_size_u(delta: usize, k: usize) -> BigUint {
    let trees = class_size_g(delta, k);
    let exp = u32::try_from(&trees).expect("tree count exponent fits in u32");
    BigUint::from(delta - 1).pow(exp)
}

/// Node count of `U` (and of every `G_sigma`).
pub fn u_node_count(delta: usize, k: usize) -> Result<u128, FamilyError> {
    check_params(delta, k)?;
    let trees = tree_count(delta, k)? as u128;
    let base = tree_t_size(delta, k) + k as u128 + 1;
    // sum of X over all sequences: every coordinate averages delta/2
    let z = leaf_count(delta, k);
    let x_sum_total = trees * z * delta as u128 / 2;
    let per_j_fixed = 4 * base + 2 * (k as u128 + (delta as u128 - 1) * (k as u128 + 1));
    Ok(trees * per_j_fixed + 4 * x_sum_total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct UTreeNodes {
    pub j: u64,
    pub b: u8,
    pub cycle_root: NodeId,
    pub heavy_root: NodeId,
}

/// A generated template `U` or `G_sigma` with its distinguished nodes.
#[derive(Debug, Clone)]
pub struct UInstance {
    pub graph: PortGraph,
    pub delta: usize,
    pub k: usize,
    /// Empty for the template.
    pub sigma: Vec<usize>,
    /// `r_{1,1}, r_{1,2}, r_{2,1}, ...` in cycle order.
    pub roots: Vec<UTreeNodes>,
}

impl UInstance {
    pub fn cycle(&self) -> Vec<NodeId> {
        self.roots.iter().map(|r| r.cycle_root).collect()
    }

    pub fn heavy(&self, j: u64, b: u8) -> NodeId {
        self.roots[((j - 1) * 2 + u64::from(b - 1)) as usize].heavy_root
    }

    pub fn cycle_root(&self, j: u64, b: u8) -> NodeId {
        self.roots[((j - 1) * 2 + u64::from(b - 1)) as usize].cycle_root
    }

    pub fn sidecar(&self) -> serde_json::Value {
        serde_json::json!({
            "family": "u",
            "delta": self.delta,
            "k": self.k,
            "sigma": self.sigma,
            "nodes": self.graph.n(),
            "roots": self.roots,
        })
    }
}

pub fn build_template_u(delta: usize, k: usize) -> Result<UInstance, FamilyError> {
    build_template_u_with_guard(delta, k, U_SIZE_GUARD)
}

pub fn build_template_u_with_guard(delta: usize, k: usize, guard: u128) -> Result<UInstance, FamilyError> {
    check_params(delta, k)?;
    let nodes = u_node_count(delta, k)?;
    if nodes > guard {
        return Err(FamilyError::SizeGuard { nodes, limit: guard });
    }
    let trees = tree_count(delta, k)?;
    let mut b = GraphBuilder::new();
    let mut roots = Vec::new();
    for j in 1..=trees {
        let x = index_to_sequence(delta, k, j)?;
        for bb in [1u8, 2] {
            let cyc = add_txb(&mut b, delta, k, &x, bb).root;
            let heavy = add_txb(&mut b, delta, k, &x, 1).root;
            // connecting path: port delta at the cycle root, delta-1 at the heavy root,
            // inner nodes 1 toward the cycle root and 0 toward the heavy root
            let mut prev = (cyc, delta);
            for _ in 0..k {
                let p = b.add_node();
                b.add_edge(prev.0, prev.1, p, 1);
                prev = (p, 0);
            }
            b.add_edge(prev.0, prev.1, heavy, delta - 1);
            for port in delta..=2 * delta - 2 {
                let mut prev = (heavy, port);
                for _ in 0..=k {
                    let p = b.add_node();
                    b.add_edge(prev.0, prev.1, p, 0);
                    prev = (p, 1);
                }
            }
            roots.push(UTreeNodes { j, b: bb, cycle_root: cyc, heavy_root: heavy });
        }
    }
    let len = roots.len();
    for m in 0..len {
        // successor on port delta+1, predecessor on port delta-1
        b.add_edge(roots[m].cycle_root, delta + 1, roots[(m + 1) % len].cycle_root, delta - 1);
    }
    let graph = b.build()?;
    Ok(UInstance { graph, delta, k, sigma: Vec::new(), roots })
}

/// Applies the per-`j` port swap `delta-1 <-> delta-1+s_j` at both heavy roots.
pub fn apply_sigma(template: &UInstance, sigma: &[usize]) -> Result<UInstance, FamilyError> {
    let delta = template.delta;
    let trees = template.roots.len() / 2;
    if sigma.len() != trees || sigma.iter().any(|&s| s < 1 || s > delta - 1) {
        return Err(FamilyError::BadSequence(format!("sigma needs {trees} entries in 1..={}", delta - 1)));
    }
    let mut g = template.graph.clone();
    for (idx, &s) in sigma.iter().enumerate() {
        for r in &template.roots[2 * idx..2 * idx + 2] {
            g.swap_ports(r.heavy_root, delta - 1, delta - 1 + s);
        }
    }
    Ok(UInstance { graph: g, sigma: sigma.to_vec(), ..template.clone() })
}

pub fn build_gsigma(delta: usize, k: usize, sigma: &[usize]) -> Result<UInstance, FamilyError> {
    apply_sigma(&build_template_u(delta, k)?, sigma)
}

/// Distance from every node to the nearest node accepted by `is_target`.
fn distance_to(g: &PortGraph, is_target: impl Fn(NodeId) -> bool) -> Vec<usize> {
    let mut dist = vec![usize::MAX; g.n()];
    let mut q = VecDeque::new();
    for v in 0..g.n() {
        if is_target(v) {
            dist[v] = 0;
            q.push_back(v);
        }
    }
    while let Some(v) = q.pop_front() {
        for &(u, _) in g.ports(v) {
            if dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                q.push_back(u);
            }
        }
    }
    dist
}

/// What every node derives from the map before round 1.
pub struct UMapState {
    cycle_degree: usize,
    heavy_degree: usize,
    min_cycle_view: Vec<u8>,
    heavy_port: HashMap<Vec<u8>, Port>,
}

/// The `k`-round port-election program that receives the whole graph as advice.
#[derive(Debug, Clone, Copy)]
pub struct UPeProgram {
    pub delta: usize,
    pub k: usize,
}

impl UPeProgram {
    pub fn prepare_from_map(&self, map: &PortGraph) -> Result<UMapState, FamilyError> {
        let (delta, k) = (self.delta, self.k);
        let (cycle_degree, heavy_degree) = (delta + 2, 2 * delta - 1);
        let trees = tree_count(delta, k)? as usize;
        let cycle: Vec<NodeId> = (0..map.n()).filter(|&v| map.degree(v) == cycle_degree).collect();
        let heavy: Vec<NodeId> = (0..map.n()).filter(|&v| map.degree(v) == heavy_degree).collect();
        if cycle.len() != 2 * trees || heavy.len() != 2 * trees || map.max_degree() != heavy_degree {
            return Err(FamilyError::NotAFamilyInstance(format!(
                "expected {} nodes of degree {cycle_degree} and of degree {heavy_degree}, found {} and {}",
                2 * trees,
                cycle.len(),
                heavy.len()
            )));
        }
        let view_of = |v: NodeId| -> Result<Vec<u8>, FamilyError> {
            build_view(map, v, k)
                .map(|t| canonical_encoding(&t))
                .map_err(|e| FamilyError::NotAFamilyInstance(e.to_string()))
        };
        let mut min_cycle_view: Option<Vec<u8>> = None;
        for &v in &cycle {
            let e = view_of(v)?;
            if min_cycle_view.as_ref().is_none_or(|m| e < *m) {
                min_cycle_view = Some(e);
            }
        }
        let to_cycle = distance_to(map, |v| map.degree(v) == cycle_degree);
        let mut heavy_port = HashMap::new();
        for &v in &heavy {
            let p = (0..map.degree(v))
                .find(|&p| to_cycle[map.ports(v)[p].0] < to_cycle[v])
                .ok_or_else(|| FamilyError::NotAFamilyInstance(format!("heavy node {v} cannot reach the cycle")))?;
            heavy_port.insert(view_of(v)?, p);
        }
        Ok(UMapState { cycle_degree, heavy_degree, min_cycle_view: min_cycle_view.unwrap(), heavy_port })
    }
}

impl NodeProgram for UPeProgram {
    type State = UMapState;

    fn prepare(&self, advice: &Advice) -> Result<UMapState, SimError> {
        let map = decode_map_advice(advice).map_err(|e| SimError::BadAdvice(e.to_string()))?;
        self.prepare_from_map(&map).map_err(|e| SimError::BadAdvice(e.to_string()))
    }

    fn rounds(&self, _: &UMapState) -> usize {
        self.k
    }

    fn output(&self, st: &UMapState, view: &ViewTree) -> Result<ElectionOutput, String> {
        let deg = view.degree();
        if deg == 1 {
            return Ok(ElectionOutput::FirstPort(0));
        }
        if deg == st.cycle_degree {
            return Ok(if canonical_encoding(view) == st.min_cycle_view {
                ElectionOutput::Leader
            } else {
                ElectionOutput::FirstPort(self.delta + 1)
            });
        }
        if deg == st.heavy_degree {
            return st
                .heavy_port
                .get(&canonical_encoding(view))
                .map(|&p| ElectionOutput::FirstPort(p))
                .ok_or_else(|| "no heavy node of the map has this view".to_string());
        }
        let path = view
            .shortest_path_to(|n| n.degree == st.cycle_degree)
            .or_else(|| view.shortest_path_to(|n| n.degree == st.heavy_degree))
            .ok_or_else(|| "no cycle or heavy node within view".to_string())?;
        Ok(ElectionOutput::FirstPort(path[0].0))
    }
}

/// Runs the map-based port-election program on `g` with `map` as advice.
pub fn pe_map_algorithm(g: &PortGraph, map: &PortGraph, delta: usize, k: usize) -> Result<Vec<ElectionOutput>, FamilyError> {
    let advice = map_advice(map);
    let (outputs, _) = run(g, &UPeProgram { delta, k }, &advice).map_err(|e| match e {
        SimError::BadAdvice(m) => FamilyError::NotAFamilyInstance(m),
        other => FamilyError::NotAFamilyInstance(other.to_string()),
    })?;
    Ok(outputs)
}

/// Ports at `v` that begin a simple path to some cycle node acting as leader.
pub fn valid_pe_ports(inst: &UInstance, v: NodeId) -> Vec<Port> {
    let mut ports: Vec<Port> = Vec::new();
    for leader in inst.cycle() {
        let o = PeOracle::new(&inst.graph, leader);
        for (p, &(w, _)) in inst.graph.ports(v).iter().enumerate() {
            if o.reaches(v, w) && !ports.contains(&p) {
                ports.push(p);
            }
        }
    }
    ports.sort_unstable();
    ports
}

/// Structural checks and the port-election algorithm on one `G_sigma`.
pub fn check_u_instance(inst: &UInstance) -> Result<LemmaReport, FamilyError> {
    let (delta, k, g) = (inst.delta, inst.k, &inst.graph);
    let mut rep = LemmaReport::new("u", format!("delta={delta} k={k} sigma={:?}", inst.sigma));
    let cycle = inst.cycle();
    let heavy: Vec<NodeId> = inst.roots.iter().map(|r| r.heavy_root).collect();
    let census_ok = (0..g.n()).all(|v| {
        let d = g.degree(v);
        (d == delta + 2) == cycle.contains(&v) && (d == 2 * delta - 1) == heavy.contains(&v)
    });
    rep.require("degree-census", census_ok && g.max_degree() == 2 * delta - 1, "degree delta+2 = cycle, 2delta-1 = heavy")?;
    let part = refine_classes(g, k);
    let c0 = part.class(k - 1, cycle[0]);
    let same = cycle.iter().all(|&c| part.class(k - 1, c) == c0);
    rep.require("cycle-one-class-below-k", same, format!("{} cycle nodes share a depth-{} class", cycle.len(), k - 1))?;
    let below = part.singletons(k - 1);
    rep.require("no-unique-below-k", below.is_empty(), format!("singletons at depth {}: {:?}", k - 1, below))?;
    let sizes = part.class_sizes(k);
    let lone: Vec<NodeId> = cycle.iter().copied().filter(|&c| sizes[part.class(k, c) as usize] != 1).collect();
    rep.require("cycle-unique-at-k", lone.is_empty(), format!("cycle nodes not unique at depth {k}: {lone:?}"))?;
    let twins = (0..g.n()).filter(|v| !cycle.contains(v)).all(|v| sizes[part.class(k, v) as usize] >= 2);
    rep.require("non-cycle-twins-at-k", twins, "every non-cycle node shares its depth-k class")?;
    let heavy_pairs = inst
        .roots
        .chunks(2)
        .all(|pair| part.class(k, pair[0].heavy_root) == part.class(k, pair[1].heavy_root));
    rep.require("heavy-pair-views", heavy_pairs, "B^k(r_{j,1,1}) = B^k(r_{j,1,2}) for all j")?;
    let outputs = pe_map_algorithm(g, g, delta, k)?;
    let leaders: Vec<NodeId> = (0..g.n()).filter(|&v| outputs[v].is_leader()).collect();
    let valid = validate_outputs(g, TaskId::PE, &outputs);
    rep.require(
        "pe-map-algorithm",
        valid.is_ok() && leaders.len() == 1 && cycle.contains(&leaders[0]),
        format!("{k} rounds, leader {leaders:?}, validation {valid:?}"),
    )?;
    Ok(rep)
}

/// The fooling pair: `sigma` and `sigma2` differ only at `j`; the heavy root
/// `r_{j,1,1}` sees the same depth-`k` view in both graphs, yet its valid
/// port-election outputs are disjoint.
pub fn check_u_fooling(a: &UInstance, b: &UInstance) -> Result<LemmaReport, FamilyError> {
    let diff: Vec<usize> = (0..a.sigma.len()).filter(|&i| a.sigma[i] != b.sigma[i]).collect();
    if diff.len() != 1 || a.sigma.len() != b.sigma.len() {
        return Err(FamilyError::BadSequence("fooling pair must differ in exactly one coordinate".into()));
    }
    let j = diff[0] as u64 + 1;
    let k = a.k;
    let mut rep = LemmaReport::new("u", format!("delta={} k={k} differing at j={j}", a.delta));
    let (va, vb) = (a.heavy(j, 1), b.heavy(j, 1));
    rep.require("fooling-views-equal", views_equal(&a.graph, va, &b.graph, vb, k), format!("B^{k}(r_({j},1,1)) equal"))?;
    let (pa, pb) = (valid_pe_ports(a, va), valid_pe_ports(b, vb));
    let disjoint = pa.iter().all(|p| !pb.contains(p)) && !pa.is_empty() && !pb.is_empty();
    rep.require("fooling-outputs-differ", disjoint, format!("valid ports {pa:?} vs {pb:?}"))?;
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_shape() {
        let u = build_template_u(4, 1).unwrap();
        assert_eq!(u.roots.len(), 18);
        assert_eq!(u.graph.n() as u128, u_node_count(4, 1).unwrap());
        assert_eq!(u.graph.max_degree(), 7);
        for r in &u.roots {
            assert_eq!(u.graph.degree(r.cycle_root), 6);
            assert_eq!(u.graph.degree(r.heavy_root), 7);
        }
        // orientation: port delta+1 leads to the next root in cycle order
        assert_eq!(u.graph.ports(u.roots[0].cycle_root)[5], (u.roots[1].cycle_root, 3));
        assert_eq!(u.graph.ports(u.roots[17].cycle_root)[5], (u.roots[0].cycle_root, 3));
    }

    #[test]
    fn sigma_swaps() {
        let u = build_template_u(4, 1).unwrap();
        let g = apply_sigma(&u, &[1; 9]).unwrap();
        let h = g.heavy(1, 1);
        assert_eq!(u.graph.ports(h)[3], g.graph.ports(h)[4]);
        assert_eq!(u.graph.ports(h)[4], g.graph.ports(h)[3]);
        assert!(apply_sigma(&u, &[4; 9]).is_err());
        assert!(apply_sigma(&u, &[1; 8]).is_err());
    }

    #[test]
    fn class_counts() {
        assert_eq!(class_size_u(4, 1), BigUint::from(19683u32));
        assert_eq!(tree_count(4, 2).unwrap(), 729);
    }

    #[test]
    fn small_instance_checks() {
        let a = build_gsigma(4, 1, &[1; 9]).unwrap();
        check_u_instance(&a).unwrap();
        let mut s2 = vec![1; 9];
        s2[2] = 2;
        let b = build_gsigma(4, 1, &s2).unwrap();
        let rep = check_u_fooling(&a, &b).unwrap();
        assert_eq!(rep.passed.len(), 2);
    }

    #[test]
    fn rejects_foreign_map() {
        let g = crate::graph::parse_plg("plg 1\nnodes 3\nedge 0 0 1 0\nedge 1 1 2 0\n").unwrap();
        assert!(matches!(pe_map_algorithm(&g, &g, 4, 1), Err(FamilyError::NotAFamilyInstance(_))));
    }
}
