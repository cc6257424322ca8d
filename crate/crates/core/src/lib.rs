//! Deterministic leader election in anonymous port-labeled networks.
//!
//! Views and refinement partitions, a synchronous full-information simulator,
//! election task validation and brute-force election indexes, generators for
//! three lower-bound graph families, and advice-based election schemes.

pub mod advice;
pub mod family_g;
pub mod family_j;
pub mod family_u;
pub mod gen;
pub mod graph;
pub mod lemma;
pub mod sim;
pub mod tasks;
pub mod view;

pub use graph::{parse_plg, serialize_plg, GraphError, NodeId, Port, PortGraph};
