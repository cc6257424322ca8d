//! Small-graph generation: exhaustive enumeration of port labelings up to
//! port-preserving isomorphism, and seeded random connected graphs.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::{NodeId, Port, PortGraph};
use crate::tasks::is_feasible;

type Adj = Vec<Vec<(NodeId, Port)>>;

/// Port-preserving canonical form: the least BFS code over all start nodes.
///
/// Two port-labeled graphs get equal forms iff some node bijection maps every
/// `(u, p) -> (v, q)` onto the other graph's edges.
pub fn canonical_form(g: &PortGraph) -> Vec<u32> {
    canonical_adj(g.adjacency())
}

fn canonical_adj(adj: &[Vec<(NodeId, Port)>]) -> Vec<u32> {
    let n = adj.len();
    let mut best: Option<Vec<u32>> = None;
    let mut id = vec![u32::MAX; n];
    let mut order = Vec::with_capacity(n);
    for s in 0..n {
        id.iter_mut().for_each(|x| *x = u32::MAX);
        order.clear();
        id[s] = 0;
        order.push(s);
        let mut code = Vec::with_capacity(n + 4 * n);
        let mut head = 0;
        while head < order.len() {
            let x = order[head];
            head += 1;
            code.push(adj[x].len() as u32);
            for &(u, q) in &adj[x] {
                if id[u] == u32::MAX {
                    id[u] = order.len() as u32;
                    order.push(u);
                }
                code.push(id[u]);
                code.push(q as u32);
            }
        }
        if best.as_ref().is_none_or(|b| code < *b) {
            best = Some(code);
        }
    }
    best.unwrap_or_default()
}

/// The same graph renumbered so that its canonical start node is 0 and the rest
/// follow in BFS port order.
pub fn canonical_graph(g: &PortGraph) -> PortGraph {
    let code = canonical_form(g);
    let n = g.n();
    let mut adj: Adj = Vec::with_capacity(n);
    let mut pos = 0;
    for _ in 0..n {
        let d = code[pos] as usize;
        pos += 1;
        adj.push((0..d).map(|p| (code[pos + 2 * p] as NodeId, code[pos + 2 * p + 1] as Port)).collect());
        pos += 2 * d;
    }
    PortGraph::validate(adj).expect("canonical renumbering of a valid graph")
}

fn connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &(a, b) in edges {
            let u = if a == v { b } else if b == v { a } else { continue };
            if !seen[u] {
                seen[u] = true;
                stack.push(u);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut all = vec![Vec::new()];
    for k in 0..n {
        all = all
            .into_iter()
            .flat_map(|p| {
                (0..=k).map(move |at| {
                    let mut q = p.clone();
                    q.insert(at, k);
                    q
                })
            })
            .collect();
    }
    all
}

/// Connected simple graphs on `n` nodes, one per isomorphism class, as edge lists.
pub fn unlabeled_connected_graphs(n: usize) -> Vec<Vec<(usize, usize)>> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let perms = permutations(n);
    let mask_of = |edges: &mut dyn Iterator<Item = (usize, usize)>| -> u64 {
        edges.fold(0u64, |m, (a, b)| {
            let (a, b) = (a.min(b), a.max(b));
            m | 1 << pairs.iter().position(|&p| p == (a, b)).unwrap()
        })
    };
    let mut out = Vec::new();
    for mask in 0u64..1 << pairs.len() {
        let edges: Vec<(usize, usize)> = (0..pairs.len()).filter(|&i| mask >> i & 1 == 1).map(|i| pairs[i]).collect();
        if n == 0 || !connected(n, &edges) {
            continue;
        }
        let least = perms.iter().map(|p| mask_of(&mut edges.iter().map(|&(a, b)| (p[a], p[b])))).min().unwrap();
        if least == mask {
            out.push(edges);
        }
    }
    out
}

/// Calls `visit` once per connected port-labeled graph on `n` nodes, up to
/// port-preserving isomorphism. Returns the number of graphs visited.
pub fn enumerate_port_graphs(n: usize, mut visit: impl FnMut(PortGraph)) -> usize {
    let mut count = 0;
    for edges in unlabeled_connected_graphs(n) {
        let mut nbrs = vec![Vec::new(); n];
        for &(a, b) in &edges {
            nbrs[a].push(b);
            nbrs[b].push(a);
        }
        let perms: Vec<Vec<Vec<usize>>> = nbrs.iter().map(|nb| permutations(nb.len())).collect();
        let mut digit = vec![0usize; n];
        let mut seen: HashSet<Vec<u32>> = HashSet::new();
        loop {
            // port p of v leads to nbrs[v][perm[p]]
            let order: Vec<&Vec<usize>> = (0..n).map(|v| &perms[v][digit[v]]).collect();
            let port_to = |v: usize, u: usize| order[v].iter().position(|&i| nbrs[v][i] == u).unwrap();
            let adj: Adj = (0..n)
                .map(|v| order[v].iter().map(|&i| (nbrs[v][i], port_to(nbrs[v][i], v))).collect())
                .collect();
            if seen.insert(canonical_adj(&adj)) {
                count += 1;
                visit(PortGraph::validate(adj).expect("enumerated labeling is valid"));
            }
            let mut v = 0;
            while v < n {
                digit[v] += 1;
                if digit[v] < perms[v].len() {
                    break;
                }
                digit[v] = 0;
                v += 1;
            }
            if v == n {
                break;
            }
        }
    }
    count
}

/// A random connected graph: a random spanning tree plus each remaining pair with
/// probability `extra`, random port orders and node ids.
pub fn random_connected<R: Rng>(rng: &mut R, n: usize, extra: f64) -> PortGraph {
    let mut ids: Vec<NodeId> = (0..n).collect();
    ids.shuffle(rng);
    let mut nbrs: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    let link = |a: usize, b: usize, nbrs: &mut Vec<Vec<NodeId>>| {
        nbrs[ids[a]].push(ids[b]);
        nbrs[ids[b]].push(ids[a]);
    };
    for v in 1..n {
        let u = rng.gen_range(0..v);
        link(u, v, &mut nbrs);
    }
    for a in 0..n {
        for b in a + 1..n {
            if !nbrs[ids[a]].contains(&ids[b]) && rng.gen_bool(extra) {
                link(a, b, &mut nbrs);
            }
        }
    }
    for nb in nbrs.iter_mut() {
        nb.shuffle(rng);
    }
    let adj: Adj = (0..n)
        .map(|v| nbrs[v].iter().map(|&u| (u, nbrs[u].iter().position(|&w| w == v).unwrap())).collect())
        .collect();
    PortGraph::validate(adj).expect("random graph is valid")
}

/// Draws [`random_connected`] graphs until one is feasible, up to `attempts` tries.
pub fn random_feasible<R: Rng>(rng: &mut R, n: usize, extra: f64, attempts: usize) -> Option<PortGraph> {
    (0..attempts).map(|_| random_connected(rng, n, extra)).find(is_feasible)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_plg;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unlabeled_counts() {
        // connected graphs up to isomorphism: OEIS A001349
        let counts: Vec<usize> = (1..=6).map(|n| unlabeled_connected_graphs(n).len()).collect();
        assert_eq!(counts, vec![1, 1, 2, 6, 21, 112]);
    }

    #[test]
    fn labeled_counts_by_hand() {
        // n=3: the path has one labeling up to isomorphism per choice at the middle
        // node, modulo the reflection (1); the triangle has 2^3 labelings, and the
        // rotations and reflections leave two classes
        assert_eq!(enumerate_port_graphs(1, |_| {}), 1);
        assert_eq!(enumerate_port_graphs(2, |_| {}), 1);
        assert_eq!(enumerate_port_graphs(3, |_| {}), 3);
    }

    #[test]
    fn canonical_form_ignores_node_ids() {
        let a = parse_plg("plg 1\nnodes 3\nedge 0 0 1 0\nedge 1 1 2 0\n").unwrap();
        let b = parse_plg("plg 1\nnodes 3\nedge 2 0 0 0\nedge 0 1 1 0\n").unwrap();
        assert_eq!(canonical_form(&a), canonical_form(&b));
        let cw = parse_plg("plg 1\nnodes 3\nedge 0 0 1 1\nedge 1 0 2 1\nedge 2 0 0 1\n").unwrap();
        let flipped = parse_plg("plg 1\nnodes 3\nedge 0 1 1 1\nedge 1 0 2 1\nedge 2 0 0 0\n").unwrap();
        assert_ne!(canonical_form(&cw), canonical_form(&flipped));
        assert_eq!(canonical_graph(&b), canonical_graph(&a));
    }

    #[test]
    fn random_graphs_are_connected_and_seeded() {
        let mut r1 = ChaCha8Rng::seed_from_u64(7);
        let mut r2 = ChaCha8Rng::seed_from_u64(7);
        for n in 1..20 {
            let g = random_connected(&mut r1, n, 0.2);
            assert_eq!(g.n(), n);
            assert_eq!(g, random_connected(&mut r2, n, 0.2));
        }
        let f = random_feasible(&mut r1, 8, 0.3, 1000).unwrap();
        assert!(is_feasible(&f));
    }
}
