//! Port-labeled graphs: validation, port traversal and the PLG text format.

use std::collections::HashSet;
use std::fmt::Write as _;

use thiserror::Error;

pub type NodeId = usize;
pub type Port = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("graph is not connected (node {node} unreachable from node 0)")]
    NotConnected { node: NodeId },
    #[error("node {node}: ports are not exactly 0..{degree}")]
    BadPortRange { node: NodeId, degree: usize },
    #[error("edge {u}:{p} -> {v}:{q} is not reciprocated")]
    NonReciprocal { u: NodeId, p: Port, v: NodeId, q: Port },
    #[error("self-loop at node {node} port {port}")]
    SelfLoop { node: NodeId, port: Port },
    #[error("multiple edges between nodes {u} and {v}")]
    MultiEdge { u: NodeId, v: NodeId },
    #[error("node {node} out of range (n = {n})")]
    NodeOutOfRange { node: NodeId, n: usize },
    #[error("port {port} out of range at node {node} (degree {degree})")]
    PortOutOfRange { node: NodeId, port: Port, degree: usize },
    #[error("graph has no nodes")]
    Empty,
    #[error("syntax error on line {line}: {msg}")]
    SyntaxError { line: usize, msg: String },
}

/// A simple, connected, undirected graph with local port numbers.
///
/// `adj[v][p] = (u, q)` means port `p` at `v` leads to `u`, arriving on port `q`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PortGraph {
    adj: Vec<Vec<(NodeId, Port)>>,
}

impl PortGraph {
    /// Checks every model invariant and wraps the adjacency.
    pub fn validate(adj: Vec<Vec<(NodeId, Port)>>) -> Result<Self, GraphError> {
        let n = adj.len();
        if n == 0 {
            return Err(GraphError::Empty);
        }
        for (v, ports) in adj.iter().enumerate() {
            for (p, &(u, q)) in ports.iter().enumerate() {
                if u >= n {
                    return Err(GraphError::NodeOutOfRange { node: u, n });
                }
                if u == v {
                    return Err(GraphError::SelfLoop { node: v, port: p });
                }
                match adj[u].get(q) {
                    Some(&(back, bp)) if back == v && bp == p => {}
                    _ => return Err(GraphError::NonReciprocal { u: v, p, v: u, q }),
                }
            }
            let mut seen = HashSet::with_capacity(ports.len());
            for &(u, _) in ports {
                if !seen.insert(u) {
                    return Err(GraphError::MultiEdge { u: v.min(u), v: v.max(u) });
                }
            }
        }
        let g = PortGraph { adj };
        if let Some(node) = g.first_unreachable() {
            return Err(GraphError::NotConnected { node });
        }
        Ok(g)
    }

    /// Builds from an edge list `(u, p, v, q)`; ports must cover `0..deg` at every node.
    pub fn from_edges(n: usize, edges: &[(NodeId, Port, NodeId, Port)]) -> Result<Self, GraphError> {
        let mut slots: Vec<Vec<Option<(NodeId, Port)>>> = vec![Vec::new(); n];
        for &(u, p, v, q) in edges {
            for (a, ap, b, bq) in [(u, p, v, q), (v, q, u, p)] {
                if a >= n {
                    return Err(GraphError::NodeOutOfRange { node: a, n });
                }
                if a == b {
                    return Err(GraphError::SelfLoop { node: a, port: ap });
                }
                let row = &mut slots[a];
                if row.len() <= ap {
                    row.resize(ap + 1, None);
                }
                if row[ap].is_some() {
                    return Err(GraphError::NonReciprocal { u: a, p: ap, v: b, q: bq });
                }
                row[ap] = Some((b, bq));
            }
        }
        let mut adj = Vec::with_capacity(n);
        for (v, row) in slots.into_iter().enumerate() {
            let degree = row.iter().filter(|s| s.is_some()).count();
            if degree != row.len() {
                return Err(GraphError::BadPortRange { node: v, degree });
            }
            adj.push(row.into_iter().map(Option::unwrap).collect());
        }
        Self::validate(adj)
    }

    fn first_unreachable(&self) -> Option<NodeId> {
        let mut seen = vec![false; self.adj.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &(u, _) in &self.adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen.iter().position(|s| !s)
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Neighbors of `v` indexed by port.
    pub fn ports(&self, v: NodeId) -> &[(NodeId, Port)] {
        &self.adj[v]
    }

    pub fn adjacency(&self) -> &[Vec<(NodeId, Port)>] {
        &self.adj
    }

    pub fn follow_port(&self, v: NodeId, p: Port) -> Result<(NodeId, Port), GraphError> {
        let ports = self
            .adj
            .get(v)
            .ok_or(GraphError::NodeOutOfRange { node: v, n: self.adj.len() })?;
        ports
            .get(p)
            .copied()
            .ok_or(GraphError::PortOutOfRange { node: v, port: p, degree: ports.len() })
    }

    /// Edges `(u, p, v, q)` in canonical order: ascending `(min endpoint, port there)`.
    pub fn edges(&self) -> Vec<(NodeId, Port, NodeId, Port)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (u, ports) in self.adj.iter().enumerate() {
            for (p, &(v, q)) in ports.iter().enumerate() {
                if u < v {
                    out.push((u, p, v, q));
                }
            }
        }
        out
    }

    /// Exchanges ports `a` and `b` at node `v`, keeping the far ends consistent.
    pub fn swap_ports(&mut self, v: NodeId, a: Port, b: Port) {
        if a == b {
            return;
        }
        self.adj[v].swap(a, b);
        for p in [a, b] {
            let (u, q) = self.adj[v][p];
            self.adj[u][q].1 = p;
        }
    }

    /// Breadth-first distances from `src`.
    pub fn bfs_distances(&self, src: NodeId) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n()];
        let mut queue = std::collections::VecDeque::new();
        dist[src] = 0;
        queue.push_back(src);
        while let Some(v) = queue.pop_front() {
            for &(u, _) in &self.adj[v] {
                if dist[u] == usize::MAX {
                    dist[u] = dist[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        dist
    }

    /// Traces an outgoing port sequence from `v`, returning every visited node.
    pub fn trace(&self, v: NodeId, ports: &[Port]) -> Result<Vec<NodeId>, GraphError> {
        let mut walk = Vec::with_capacity(ports.len() + 1);
        walk.push(v);
        let mut cur = v;
        for &p in ports {
            cur = self.follow_port(cur, p)?.0;
            walk.push(cur);
        }
        Ok(walk)
    }
}

/// Parses the PLG text format.
pub fn parse_plg(text: &str) -> Result<PortGraph, GraphError> {
    let mut n: Option<usize> = None;
    let mut header = false;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let toks: Vec<&str> = content.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        let syntax = |msg: &str| GraphError::SyntaxError { line, msg: msg.to_string() };
        let num = |s: &str| s.parse::<usize>().map_err(|_| syntax(&format!("bad integer `{s}`")));
        match toks[0] {
            "plg" if !header => {
                if toks.len() != 2 || toks[1] != "1" {
                    return Err(syntax("expected `plg 1`"));
                }
                header = true;
            }
            _ if !header => return Err(syntax("missing `plg 1` header")),
            "nodes" if n.is_none() => {
                if toks.len() != 2 {
                    return Err(syntax("expected `nodes <n>`"));
                }
                n = Some(num(toks[1])?);
            }
            "edge" => {
                if n.is_none() {
                    return Err(syntax("`edge` before `nodes`"));
                }
                if toks.len() != 5 {
                    return Err(syntax("expected `edge <u> <p> <v> <q>`"));
                }
                edges.push((num(toks[1])?, num(toks[2])?, num(toks[3])?, num(toks[4])?));
            }
            other => return Err(syntax(&format!("unexpected `{other}`"))),
        }
    }
    let n = n.ok_or(GraphError::SyntaxError { line: text.lines().count().max(1), msg: "missing `nodes`".into() })?;
    PortGraph::from_edges(n, &edges)
}

/// Serializes to canonical PLG text.
pub fn serialize_plg(g: &PortGraph) -> String {
    let mut s = String::with_capacity(16 + 24 * g.edge_count());
    s.push_str("plg 1\n");
    let _ = writeln!(s, "nodes {}", g.n());
    for (u, p, v, q) in g.edges() {
        let _ = writeln!(s, "edge {u} {p} {v} {q}");
    }
    s
}

/// Incremental builder used by the family generators.
#[derive(Debug, Default, Clone)]
pub struct GraphBuilder {
    edges: Vec<(NodeId, Port, NodeId, Port)>,
    n: usize,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self) -> NodeId {
        self.n += 1;
        self.n - 1
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn add_edge(&mut self, u: NodeId, p: Port, v: NodeId, q: Port) {
        self.edges.push((u, p, v, q));
    }

    /// Edges added so far as `(u, p, v, q)`.
    pub fn edges(&self) -> &[(NodeId, Port, NodeId, Port)] {
        &self.edges
    }

    pub fn build(&self) -> Result<PortGraph, GraphError> {
        PortGraph::from_edges(self.n, &self.edges)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line3() -> PortGraph {
        parse_plg("plg 1\nnodes 3\nedge 0 0 1 0\nedge 1 1 2 0\n").unwrap()
    }

    #[test]
    fn line_follow_port() {
        let g = line3();
        assert_eq!(g.follow_port(1, 1).unwrap(), (2, 0));
        assert_eq!(g.follow_port(2, 0).unwrap(), (1, 1));
        assert!(matches!(g.follow_port(0, 1), Err(GraphError::PortOutOfRange { node: 0, .. })));
    }

    #[test]
    fn rejects_bad_inputs() {
        let disjoint = "plg 1\nnodes 4\nedge 0 0 1 0\nedge 2 0 3 0\n";
        assert!(matches!(parse_plg(disjoint), Err(GraphError::NotConnected { .. })));
        let gap = "plg 1\nnodes 3\nedge 0 0 1 0\nedge 0 2 2 0\n";
        assert!(matches!(parse_plg(gap), Err(GraphError::BadPortRange { node: 0, .. })));
        let selfloop = "plg 1\nnodes 1\nedge 0 0 0 1\n";
        assert!(matches!(parse_plg(selfloop), Err(GraphError::SelfLoop { .. })));
        let multi = "plg 1\nnodes 2\nedge 0 0 1 0\nedge 0 1 1 1\n";
        assert!(matches!(parse_plg(multi), Err(GraphError::MultiEdge { .. })));
        assert!(matches!(parse_plg("plg 1\nnodes 2\nedge 0 x 1 0\n"), Err(GraphError::SyntaxError { line: 3, .. })));
        assert!(matches!(parse_plg("nodes 2\n"), Err(GraphError::SyntaxError { line: 1, .. })));
        let nonrec = vec![vec![(1, 0)], vec![(0, 1), (2, 0)], vec![(1, 1)]];
        assert!(matches!(PortGraph::validate(nonrec), Err(GraphError::NonReciprocal { .. })));
    }

    #[test]
    fn roundtrip_is_canonical() {
        let text = "# comment\nplg 1\nnodes 3\nedge 2 0 1 1   # trailing\n\nedge 1 0 0 0\n";
        let g = parse_plg(text).unwrap();
        let canon = serialize_plg(&g);
        assert_eq!(canon, "plg 1\nnodes 3\nedge 0 0 1 0\nedge 1 1 2 0\n");
        assert_eq!(serialize_plg(&parse_plg(&canon).unwrap()), canon);
        assert_eq!(parse_plg(&canon).unwrap(), line3());
    }

    #[test]
    fn swap_ports_keeps_reciprocity() {
        let mut g = line3();
        g.swap_ports(1, 0, 1);
        assert_eq!(g.follow_port(1, 0).unwrap(), (2, 0));
        assert_eq!(g.follow_port(0, 0).unwrap(), (1, 1));
        PortGraph::validate(g.adjacency().to_vec()).unwrap();
    }
}
