//! Open dynamic digraphs: node identities, per-step edge sets, membership
//! transitions, union digraphs, and scenario validation.

mod graph;
mod topology;
mod validate;

pub use graph::{membership_sets, node_set, union_digraph, Digraph, MembershipSets, NodeId, NodeSet};
pub use topology::{
    EdgeSegment, InstanceFamily, InstanceSpec, StableTopology, TopologySchedule, TransientTopology,
};
pub use validate::{validate_scenario, Check, Finding, Severity, ValidationReport};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NetworkError {
    #[error("node {0} is not part of this graph")]
    UnknownNode(NodeId),
    #[error("self-loop on {0}; the self-edge is implicit and must not be stored")]
    SelfLoop(NodeId),
    #[error("edge {from} -> {to} references {missing}, which is not in the node set")]
    EdgeEndpoint { from: NodeId, to: NodeId, missing: NodeId },
    #[error("union of digraphs with different node sets")]
    NodeSetMismatch,
    #[error("union of an empty instance list")]
    EmptyUnion,
}
