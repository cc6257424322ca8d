//! Synchronous full-information LOCAL simulation.
//!
//! Each round every node sends its whole knowledge, tagged with the sending port,
//! through every port. Knowledge is shared between nodes as a DAG, so after `k`
//! rounds memory is `O(k * sum of degrees)` even though the views are trees.

use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::advice::Advice;
use crate::graph::{NodeId, PortGraph};
use crate::tasks::ElectionOutput;
use crate::view::{ViewDigest, ViewEdge, ViewNode, ViewTree};

pub const DEFAULT_ROUND_CAP: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("program asks for {rounds} rounds, cap is {cap}")]
    RoundBudgetExceeded { rounds: usize, cap: usize },
    #[error("advice rejected: {0}")]
    BadAdvice(String),
    #[error("node {node}: {msg}")]
    Program { node: NodeId, msg: String },
}

/// A deterministic program: every node's output is a function of the advice and its view.
pub trait NodeProgram: Sync {
    /// Whatever the program derives from the advice before round 1.
    type State: Sync;

    fn prepare(&self, advice: &Advice) -> Result<Self::State, SimError>;

    fn rounds(&self, state: &Self::State) -> usize;

    /// The per-node output; errors carry a message, the simulator adds the node.
    fn output(&self, state: &Self::State, view: &ViewTree) -> Result<ElectionOutput, String>;
}

#[derive(Debug, Clone, Copy)]
pub struct SimConfig {
    pub max_rounds: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { max_rounds: DEFAULT_ROUND_CAP }
    }
}

/// Knowledge digests per round (index 0 is the initial knowledge) and node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunTrace {
    pub rounds: usize,
    pub digests: Vec<Vec<ViewDigest>>,
}

impl RunTrace {
    /// One JSON object per line: `{"round":r,"node":v,"digest":"<hex>"}`.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for (r, row) in self.digests.iter().enumerate() {
            for (v, d) in row.iter().enumerate() {
                let hex: String = d.iter().map(|b| format!("{b:02x}")).collect();
                out.push_str(&format!("{{\"round\":{r},\"node\":{v},\"digest\":\"{hex}\"}}\n"));
            }
        }
        out
    }
}

/// Knowledge of every node after `k` rounds, plus per-round digests.
pub fn knowledge(g: &PortGraph, k: usize) -> (Vec<Arc<ViewNode>>, Vec<Vec<ViewDigest>>) {
    let mut know: Vec<Arc<ViewNode>> = (0..g.n()).map(|v| ViewNode::leaf(g.degree(v))).collect();
    let mut digests = vec![know.iter().map(|n| *n.digest()).collect::<Vec<_>>()];
    for _ in 0..k {
        // barrier: every message of this round is built from the previous round's state
        let prev = &know;
        let next: Vec<Arc<ViewNode>> = (0..g.n())
            .into_par_iter()
            .map(|v| {
                let inbox = g
                    .ports(v)
                    .iter()
                    .map(|&(u, q)| ViewEdge { incoming_port: q, child: prev[u].clone() })
                    .collect();
                ViewNode::new(g.degree(v), inbox)
            })
            .collect();
        digests.push(next.iter().map(|n| *n.digest()).collect());
        know = next;
    }
    (know, digests)
}

/// Runs `program` on every node and collects outputs.
pub fn run<P: NodeProgram>(
    g: &PortGraph,
    program: &P,
    advice: &Advice,
) -> Result<(Vec<ElectionOutput>, RunTrace), SimError> {
    run_with_config(g, program, advice, SimConfig::default())
}

pub fn run_with_config<P: NodeProgram>(
    g: &PortGraph,
    program: &P,
    advice: &Advice,
    config: SimConfig,
) -> Result<(Vec<ElectionOutput>, RunTrace), SimError> {
    let slots: Vec<std::sync::Mutex<Option<ElectionOutput>>> = (0..g.n()).map(|_| Default::default()).collect();
    let trace = run_streaming(g, program, advice, config, |v, out| {
        *slots[v].lock().unwrap() = Some(out);
    })?;
    let outputs = slots.into_iter().map(|m| m.into_inner().unwrap().unwrap()).collect();
    Ok((outputs, trace))
}

/// Runs `program` and hands every node's output to `sink` instead of storing it.
///
/// `sink` may be called concurrently and in any order; the trace and the set of
/// delivered outputs are deterministic.
pub fn run_streaming<P: NodeProgram>(
    g: &PortGraph,
    program: &P,
    advice: &Advice,
    config: SimConfig,
    sink: impl Fn(NodeId, ElectionOutput) + Sync,
) -> Result<RunTrace, SimError> {
    let state = program.prepare(advice)?;
    let rounds = program.rounds(&state);
    if rounds > config.max_rounds {
        return Err(SimError::RoundBudgetExceeded { rounds, cap: config.max_rounds });
    }
    let (know, digests) = knowledge(g, rounds);
    let first_err = (0..g.n())
        .into_par_iter()
        .filter_map(|v| {
            let view = ViewTree { depth: rounds, root: know[v].clone() };
            match program.output(&state, &view) {
                Ok(out) => {
                    sink(v, out);
                    None
                }
                Err(msg) => Some(SimError::Program { node: v, msg }),
            }
        })
        .min_by_key(|e| match e {
            SimError::Program { node, .. } => *node,
            _ => usize::MAX,
        });
    if let Some(e) = first_err {
        return Err(e);
    }
    Ok(RunTrace { rounds, digests })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_plg;
    use crate::view::build_view;

    struct OwnDegree;

    impl NodeProgram for OwnDegree {
        type State = ();
        fn prepare(&self, _: &Advice) -> Result<(), SimError> {
            Ok(())
        }
        fn rounds(&self, _: &()) -> usize {
            0
        }
        fn output(&self, _: &(), view: &ViewTree) -> Result<ElectionOutput, String> {
            Ok(ElectionOutput::FirstPort(view.degree()))
        }
    }

    struct TooLong;

    impl NodeProgram for TooLong {
        type State = ();
        fn prepare(&self, _: &Advice) -> Result<(), SimError> {
            Ok(())
        }
        fn rounds(&self, _: &()) -> usize {
            1000
        }
        fn output(&self, _: &(), _: &ViewTree) -> Result<ElectionOutput, String> {
            Ok(ElectionOutput::Leader)
        }
    }

    fn line3() -> PortGraph {
        parse_plg("plg 1\nnodes 3\nedge 0 0 1 0\nedge 1 1 2 0\n").unwrap()
    }

    #[test]
    fn zero_rounds_outputs_degrees() {
        let (out, trace) = run(&line3(), &OwnDegree, &Advice::empty()).unwrap();
        assert_eq!(out, vec![ElectionOutput::FirstPort(1), ElectionOutput::FirstPort(2), ElectionOutput::FirstPort(1)]);
        assert_eq!(trace.digests.len(), 1);
        assert_eq!(trace.to_json_lines().lines().count(), 3);
    }

    #[test]
    fn round_cap() {
        assert!(matches!(
            run(&line3(), &TooLong, &Advice::empty()),
            Err(SimError::RoundBudgetExceeded { rounds: 1000, .. })
        ));
    }

    #[test]
    fn knowledge_matches_views() {
        let g = line3();
        let (know, digests) = knowledge(&g, 3);
        assert_eq!(digests.len(), 4);
        for v in 0..3 {
            let sim = ViewTree { depth: 3, root: know[v].clone() };
            assert_eq!(sim, build_view(&g, v, 3).unwrap());
        }
        assert_eq!(knowledge(&g, 3).1, digests);
    }
}
