//! Election tasks: output validation, feasibility, and brute-force election indexes.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{NodeId, Port, PortGraph};
use crate::view::{refine_classes, refine_until_stable, Partition};

/// Selection, port election, port path election, complete port path election.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TaskId {
    S,
    PE,
    PPE,
    CPPE,
}

impl TaskId {
    pub const ALL: [TaskId; 4] = [TaskId::S, TaskId::PE, TaskId::PPE, TaskId::CPPE];
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TaskId::S => "S",
            TaskId::PE => "PE",
            TaskId::PPE => "PPE",
            TaskId::CPPE => "CPPE",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for TaskId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "s" => Ok(TaskId::S),
            "pe" => Ok(TaskId::PE),
            "ppe" => Ok(TaskId::PPE),
            "cppe" => Ok(TaskId::CPPE),
            _ => Err(format!("unknown task `{s}` (expected s, pe, ppe or cppe)")),
        }
    }
}

/// What a single node outputs. The leader outputs `Leader` in every task.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ElectionOutput {
    #[serde(rename = "LEADER")]
    Leader,
    #[serde(rename = "NON_LEADER")]
    NonLeader,
    #[serde(rename = "port")]
    FirstPort(Port),
    #[serde(rename = "ports")]
    PortSeq(Vec<Port>),
    #[serde(rename = "pairs")]
    PairSeq(Vec<(Port, Port)>),
}

impl ElectionOutput {
    pub fn is_leader(&self) -> bool {
        matches!(self, ElectionOutput::Leader)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    NoLeader,
    MultipleLeaders,
    /// Output variant does not belong to the task.
    WrongKind,
    BadPort,
    NotSimple,
    WrongEndpoint,
    /// The walk actually arrived on the contained port.
    PortMismatch(Port),
    /// Output vector length differs from the node count.
    CountMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("{kind:?} at node {node:?}")]
pub struct Violation {
    pub kind: ViolationKind,
    pub node: Option<NodeId>,
}

impl Violation {
    fn at(kind: ViolationKind, node: NodeId) -> Self {
        Violation { kind, node: Some(node) }
    }
}

/// Answers "is there a simple path from `v` starting with port `p` to the leader"
/// in O(log deg) after one DFS rooted at the leader.
#[derive(Debug, Clone)]
pub struct PeOracle {
    leader: NodeId,
    disc: Vec<u32>,
    fin: Vec<u32>,
    low: Vec<u32>,
    /// DFS children of each node, in discovery order.
    kids: Vec<Vec<NodeId>>,
}

impl PeOracle {
    pub fn new(g: &PortGraph, leader: NodeId) -> Self {
        let n = g.n();
        let mut parent = vec![usize::MAX; n];
        let mut disc = vec![u32::MAX; n];
        let mut fin = vec![0u32; n];
        let mut low = vec![0u32; n];
        let mut kids = vec![Vec::new(); n];
        let mut t = 0u32;
        let mut stack: Vec<(NodeId, usize)> = vec![(leader, 0)];
        disc[leader] = 0;
        low[leader] = 0;
        while let Some(&mut (v, ref mut i)) = stack.last_mut() {
            if *i < g.degree(v) {
                let u = g.ports(v)[*i].0;
                *i += 1;
                if disc[u] == u32::MAX {
                    t += 1;
                    disc[u] = t;
                    low[u] = t;
                    parent[u] = v;
                    kids[v].push(u);
                    stack.push((u, 0));
                } else if u != parent[v] {
                    low[v] = low[v].min(disc[u]);
                }
            } else {
                stack.pop();
                fin[v] = t;
                if let Some(&(p, _)) = stack.last() {
                    low[p] = low[p].min(low[v]);
                }
            }
        }
        PeOracle { leader, disc, fin, low, kids }
    }

    pub fn leader(&self) -> NodeId {
        self.leader
    }

    /// Whether the leader is reachable from neighbor `w` of `v` without passing `v`.
    pub fn reaches(&self, v: NodeId, w: NodeId) -> bool {
        if w == self.leader {
            return true;
        }
        if v == self.leader {
            return false;
        }
        let descendant = |x: NodeId, a: NodeId| self.disc[a] <= self.disc[x] && self.disc[x] <= self.fin[a];
        if !descendant(w, v) {
            // w is on the tree path above v or in a subtree hanging off it
            return true;
        }
        let ks = &self.kids[v];
        let idx = ks.partition_point(|&c| self.disc[c] <= self.disc[w]) - 1;
        self.low[ks[idx]] < self.disc[v]
    }
}

/// Checks outputs of individual nodes against a known leader.
pub struct Validator<'g> {
    g: &'g PortGraph,
    task: TaskId,
    leader: NodeId,
    pe: Option<PeOracle>,
    stamp: Vec<u32>,
    epoch: u32,
}

impl<'g> Validator<'g> {
    pub fn new(g: &'g PortGraph, task: TaskId, leader: NodeId) -> Self {
        let pe = (task == TaskId::PE).then(|| PeOracle::new(g, leader));
        Validator { g, task, leader, pe, stamp: Vec::new(), epoch: 0 }
    }

    /// Reuses an already built port-election oracle.
    pub fn with_oracle(g: &'g PortGraph, oracle: PeOracle) -> Self {
        Validator { g, task: TaskId::PE, leader: oracle.leader(), pe: Some(oracle), stamp: Vec::new(), epoch: 0 }
    }

    /// Validates a non-leader's output (or the leader's, which must be `Leader`).
    pub fn check(&mut self, v: NodeId, out: &ElectionOutput) -> Result<(), Violation> {
        use ElectionOutput as O;
        use ViolationKind as K;
        if v == self.leader {
            return if out.is_leader() { Ok(()) } else { Err(Violation::at(K::NoLeader, v)) };
        }
        match (self.task, out) {
            (_, O::Leader) => Err(Violation::at(K::MultipleLeaders, v)),
            (TaskId::S, O::NonLeader) => Ok(()),
            (TaskId::PE, O::FirstPort(p)) => {
                let (w, _) = self.g.follow_port(v, *p).map_err(|_| Violation::at(K::BadPort, v))?;
                if self.pe.as_ref().unwrap().reaches(v, w) {
                    Ok(())
                } else {
                    Err(Violation::at(K::WrongEndpoint, v))
                }
            }
            (TaskId::PPE, O::PortSeq(ps)) => self.walk(v, ps.iter().map(|&p| (p, None))),
            (TaskId::CPPE, O::PairSeq(ps)) => self.walk(v, ps.iter().map(|&(p, q)| (p, Some(q)))),
            _ => Err(Violation::at(K::WrongKind, v)),
        }
    }

    fn walk(&mut self, v: NodeId, steps: impl Iterator<Item = (Port, Option<Port>)>) -> Result<(), Violation> {
        use ViolationKind as K;
        if self.stamp.len() != self.g.n() {
            self.stamp = vec![0; self.g.n()];
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        let mut cur = v;
        self.stamp[cur] = self.epoch;
        for (p, q) in steps {
            if cur == self.leader {
                return Err(Violation::at(K::WrongEndpoint, v));
            }
            let (u, arrive) = self.g.follow_port(cur, p).map_err(|_| Violation::at(K::BadPort, v))?;
            if let Some(q) = q {
                if q != arrive {
                    return Err(Violation::at(K::PortMismatch(arrive), v));
                }
            }
            if self.stamp[u] == self.epoch {
                return Err(Violation::at(K::NotSimple, v));
            }
            self.stamp[u] = self.epoch;
            cur = u;
        }
        if cur == self.leader {
            Ok(())
        } else {
            Err(Violation::at(K::WrongEndpoint, v))
        }
    }
}

/// Validates a complete output assignment for `task`.
pub fn validate_outputs(g: &PortGraph, task: TaskId, outputs: &[ElectionOutput]) -> Result<(), Violation> {
    if outputs.len() != g.n() {
        return Err(Violation { kind: ViolationKind::CountMismatch, node: None });
    }
    let mut leaders = outputs.iter().enumerate().filter(|(_, o)| o.is_leader()).map(|(v, _)| v);
    let leader = leaders.next().ok_or(Violation { kind: ViolationKind::NoLeader, node: None })?;
    if let Some(second) = leaders.next() {
        return Err(Violation::at(ViolationKind::MultipleLeaders, second));
    }
    let mut val = Validator::new(g, task, leader);
    for (v, out) in outputs.iter().enumerate() {
        val.check(v, out)?;
    }
    Ok(())
}

/// Whether all (infinite) views are distinct, i.e. leader election is possible at all.
pub fn is_feasible(g: &PortGraph) -> bool {
    let p = refine_until_stable(g, g.n().saturating_sub(1));
    p.is_discrete(p.depth())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IndexError {
    #[error("graph is not feasible: some nodes have identical views")]
    Infeasible,
    #[error("no solution up to depth {max_k}")]
    MaxKExceeded { max_k: usize },
    #[error("search budget of {budget} expansions exhausted at depth {depth}")]
    BudgetExceeded { budget: u64, depth: usize },
    #[error("path search supports at most 64 nodes, graph has {n}")]
    TooLarge { n: usize },
}

/// Least depth at which some node has a unique view.
pub fn s_index(g: &PortGraph) -> Result<usize, IndexError> {
    s_index_with_partition(g).map(|(h, _)| h)
}

/// [`s_index`] together with the partition that witnesses it.
pub fn s_index_with_partition(g: &PortGraph) -> Result<(usize, Partition), IndexError> {
    if !is_feasible(g) {
        return Err(IndexError::Infeasible);
    }
    let mut h = 0;
    loop {
        let p = refine_classes(g, h);
        if !p.singletons(h).is_empty() {
            return Ok((h, p));
        }
        h += 1;
    }
}

/// Minimal depth for a task together with a witness assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElectionIndexReport {
    pub task: TaskId,
    pub k: usize,
    pub leader: NodeId,
    pub outputs: Vec<ElectionOutput>,
}

/// Computes the election index of `task` by exhaustive search over class-uniform outputs.
///
/// For each depth from the selection index up to `max_k` and each node with a unique
/// view at that depth, every class of non-leaders must agree on one output that is
/// valid for all its members. `budget` caps the joint-path search expansions.
pub fn z_index_bruteforce(
    g: &PortGraph,
    task: TaskId,
    max_k: usize,
    budget: u64,
) -> Result<ElectionIndexReport, IndexError> {
    let s = s_index(g)?;
    if s > max_k {
        return Err(IndexError::MaxKExceeded { max_k });
    }
    if matches!(task, TaskId::PPE | TaskId::CPPE) && g.n() > 64 {
        return Err(IndexError::TooLarge { n: g.n() });
    }
    let part = refine_classes(g, max_k);
    let mut spent = 0u64;
    // candidates whose view became unique earliest come first, then by id
    let mut unique_since = vec![usize::MAX; g.n()];
    for h in s..=max_k {
        for v in part.singletons(h) {
            unique_since[v] = unique_since[v].min(h);
        }
    }
    for h in s..=max_k {
        let groups = part.groups(h);
        let mut candidates = part.singletons(h);
        candidates.sort_by_key(|&v| (unique_since[v], v));
        for leader in candidates {
            let found = match task {
                TaskId::S => Some(
                    (0..g.n())
                        .map(|v| if v == leader { ElectionOutput::Leader } else { ElectionOutput::NonLeader })
                        .collect(),
                ),
                TaskId::PE => uniform_first_ports(g, leader, &groups),
                TaskId::PPE | TaskId::CPPE => {
                    let mut search = PathSearch::new(g, leader, task == TaskId::CPPE, budget, spent);
                    let r = search.all_classes(&groups);
                    spent = search.spent;
                    r.map_err(|_| IndexError::BudgetExceeded { budget, depth: h })?
                }
            };
            if let Some(outputs) = found {
                return Ok(ElectionIndexReport { task, k: h, leader, outputs });
            }
        }
    }
    Err(IndexError::MaxKExceeded { max_k })
}

fn uniform_first_ports(g: &PortGraph, leader: NodeId, groups: &[Vec<NodeId>]) -> Option<Vec<ElectionOutput>> {
    let oracle = PeOracle::new(g, leader);
    let mut out = vec![ElectionOutput::Leader; g.n()];
    for members in groups {
        if members.contains(&leader) {
            continue;
        }
        let deg = g.degree(members[0]);
        let p = (0..deg).find(|&p| members.iter().all(|&v| oracle.reaches(v, g.ports(v)[p].0)))?;
        for &v in members {
            out[v] = ElectionOutput::FirstPort(p);
        }
    }
    Some(out)
}

struct BudgetHit;

/// Joint depth-first search for one port sequence that is a simple path to the
/// leader from every member of a class at once.
struct PathSearch<'g> {
    g: &'g PortGraph,
    leader: NodeId,
    complete: bool,
    budget: u64,
    spent: u64,
    failed: HashSet<(Vec<NodeId>, Vec<u64>)>,
}

impl<'g> PathSearch<'g> {
    fn new(g: &'g PortGraph, leader: NodeId, complete: bool, budget: u64, spent: u64) -> Self {
        PathSearch { g, leader, complete, budget, spent, failed: HashSet::new() }
    }

    fn all_classes(&mut self, groups: &[Vec<NodeId>]) -> Result<Option<Vec<ElectionOutput>>, BudgetHit> {
        let mut out = vec![ElectionOutput::Leader; self.g.n()];
        for members in groups {
            if members.contains(&self.leader) {
                continue;
            }
            self.failed.clear();
            let mut pos = members.clone();
            let mut masks: Vec<u64> = members.iter().map(|&v| 1u64 << v).collect();
            let mut path = Vec::new();
            if !self.extend(&mut pos, &mut masks, &mut path)? {
                return Ok(None);
            }
            for &v in members {
                out[v] = if self.complete {
                    ElectionOutput::PairSeq(path.clone())
                } else {
                    ElectionOutput::PortSeq(path.iter().map(|&(p, _)| p).collect())
                };
            }
        }
        Ok(Some(out))
    }

    fn extend(
        &mut self,
        pos: &mut Vec<NodeId>,
        masks: &mut Vec<u64>,
        path: &mut Vec<(Port, Port)>,
    ) -> Result<bool, BudgetHit> {
        self.spent += 1;
        if self.spent > self.budget {
            return Err(BudgetHit);
        }
        if path.len() + 1 >= self.g.n() || self.failed.contains(&(pos.clone(), masks.clone())) {
            return Ok(false);
        }
        let width = pos.iter().map(|&v| self.g.degree(v)).min().unwrap();
        'ports: for p in 0..width {
            let mut next = Vec::with_capacity(pos.len());
            let mut arrive = None;
            let mut reached = 0;
            for (i, &v) in pos.iter().enumerate() {
                let (u, q) = self.g.ports(v)[p];
                if masks[i] >> u & 1 == 1 {
                    continue 'ports;
                }
                match arrive {
                    None => arrive = Some(q),
                    Some(a) if self.complete && a != q => continue 'ports,
                    _ => {}
                }
                reached += usize::from(u == self.leader);
                next.push(u);
            }
            let q = arrive.unwrap();
            if reached == pos.len() {
                path.push((p, q));
                return Ok(true);
            }
            if reached > 0 {
                continue;
            }
            let saved = std::mem::replace(pos, next);
            for (m, &u) in masks.iter_mut().zip(pos.iter()) {
                *m |= 1 << u;
            }
            path.push((p, q));
            if self.extend(pos, masks, path)? {
                return Ok(true);
            }
            path.pop();
            for (m, &u) in masks.iter_mut().zip(pos.iter()) {
                *m &= !(1 << u);
            }
            *pos = saved;
        }
        self.failed.insert((pos.clone(), masks.clone()));
        Ok(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_plg;

    fn line3() -> PortGraph {
        parse_plg("plg 1\nnodes 3\nedge 0 0 1 0\nedge 1 1 2 0\n").unwrap()
    }

    fn two_nodes() -> PortGraph {
        PortGraph::from_edges(2, &[(0, 0, 1, 0)]).unwrap()
    }

    fn alt_cycle4() -> PortGraph {
        PortGraph::from_edges(4, &[(0, 0, 1, 1), (1, 0, 2, 1), (2, 0, 3, 1), (3, 0, 0, 1)]).unwrap()
    }

    #[test]
    fn feasibility() {
        assert!(!is_feasible(&two_nodes()));
        assert!(is_feasible(&line3()));
        assert!(!is_feasible(&alt_cycle4()));
        assert_eq!(s_index(&two_nodes()), Err(IndexError::Infeasible));
    }

    #[test]
    fn line_indexes() {
        let g = line3();
        assert_eq!(s_index(&g).unwrap(), 0);
        let s = z_index_bruteforce(&g, TaskId::S, 4, 1000).unwrap();
        assert_eq!((s.k, s.leader), (0, 1));
        let pe = z_index_bruteforce(&g, TaskId::PE, 4, 1000).unwrap();
        assert_eq!(pe.k, 0);
        assert_eq!(pe.outputs[0], ElectionOutput::FirstPort(0));
        let ppe = z_index_bruteforce(&g, TaskId::PPE, 4, 1000).unwrap();
        assert_eq!(ppe.k, 0);
        let cppe = z_index_bruteforce(&g, TaskId::CPPE, 4, 1000).unwrap();
        assert_eq!((cppe.k, cppe.leader), (1, 1));
        validate_outputs(&g, TaskId::CPPE, &cppe.outputs).unwrap();
        assert!(matches!(z_index_bruteforce(&g, TaskId::CPPE, 0, 1000), Err(IndexError::MaxKExceeded { .. })));
    }

    #[test]
    fn line_cppe_validation() {
        use ElectionOutput::*;
        let g = line3();
        let ok = vec![PairSeq(vec![(0, 0)]), Leader, PairSeq(vec![(0, 1)])];
        validate_outputs(&g, TaskId::CPPE, &ok).unwrap();
        let bad = vec![PairSeq(vec![(0, 1)]), Leader, PairSeq(vec![(0, 1)])];
        assert_eq!(
            validate_outputs(&g, TaskId::CPPE, &bad).unwrap_err(),
            Violation { kind: ViolationKind::PortMismatch(0), node: Some(0) }
        );
        let two = vec![Leader, Leader, NonLeader];
        assert_eq!(validate_outputs(&g, TaskId::S, &two).unwrap_err().kind, ViolationKind::MultipleLeaders);
        let none = vec![NonLeader, NonLeader, NonLeader];
        assert_eq!(validate_outputs(&g, TaskId::S, &none).unwrap_err().kind, ViolationKind::NoLeader);
        let loopy = vec![Leader, PortSeq(vec![1, 0, 0]), PortSeq(vec![0, 0])];
        assert_eq!(validate_outputs(&g, TaskId::PPE, &loopy).unwrap_err().kind, ViolationKind::NotSimple);
        let past = vec![Leader, PortSeq(vec![0]), PortSeq(vec![0, 0, 0])];
        assert_eq!(validate_outputs(&g, TaskId::PPE, &past).unwrap_err().kind, ViolationKind::WrongEndpoint);
        let far = vec![Leader, FirstPort(0), FirstPort(7)];
        assert_eq!(validate_outputs(&g, TaskId::PE, &far).unwrap_err().kind, ViolationKind::BadPort);
    }

    /// Brute-force simple-path existence, for cross-checking the DFS oracle.
    fn simple_path_exists(g: &PortGraph, v: NodeId, p: Port, leader: NodeId) -> bool {
        fn dfs(g: &PortGraph, cur: NodeId, leader: NodeId, seen: &mut Vec<bool>) -> bool {
            if cur == leader {
                return true;
            }
            for &(u, _) in g.ports(cur) {
                if !seen[u] {
                    seen[u] = true;
                    if dfs(g, u, leader, seen) {
                        return true;
                    }
                    seen[u] = false;
                }
            }
            false
        }
        let mut seen = vec![false; g.n()];
        seen[v] = true;
        let w = g.ports(v)[p].0;
        seen[w] = true;
        dfs(g, w, leader, &mut seen)
    }

    #[test]
    fn pe_oracle_matches_path_search() {
        // two triangles joined at node 2, with a pendant at 4
        let g = PortGraph::from_edges(
            6,
            &[(0, 0, 1, 0), (0, 1, 2, 0), (1, 1, 2, 1), (2, 2, 3, 0), (2, 3, 4, 0), (3, 1, 4, 1), (4, 2, 5, 0)],
        )
        .unwrap();
        for leader in 0..g.n() {
            let o = PeOracle::new(&g, leader);
            for v in 0..g.n() {
                if v == leader {
                    continue;
                }
                for p in 0..g.degree(v) {
                    let w = g.ports(v)[p].0;
                    assert_eq!(o.reaches(v, w), simple_path_exists(&g, v, p, leader), "leader {leader} v {v} p {p}");
                }
            }
        }
    }

    #[test]
    fn report_json_shape() {
        let r = z_index_bruteforce(&line3(), TaskId::CPPE, 3, 100).unwrap();
        let j = serde_json::to_value(&r).unwrap();
        assert_eq!(j["task"], "CPPE");
        assert_eq!(j["k"], 1);
        assert_eq!(j["leader"], 1);
        assert_eq!(j["outputs"][1], "LEADER");
        assert_eq!(j["outputs"][0]["pairs"][0][0], 0);
    }
}
