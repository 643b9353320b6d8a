use std::collections::BTreeSet;
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graphmap::DiGraphMap;
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize};

use super::NetworkError;

/// Identity of a potentially participating node, an index into `[0, n_total)`.
///
/// Ids are stable for the whole run; a node that departs and later arrives
/// again keeps its id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

// Accepts a number or a numeric string, so ids work as JSON object keys
// everywhere, including inside tagged enums.
impl<'de> Deserialize<'de> for NodeId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct IdVisitor;

        impl Visitor<'_> for IdVisitor {
            type Value = NodeId;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a node index")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<NodeId, E> {
                u32::try_from(v).map(NodeId).map_err(|_| E::custom(format!("node index {v} out of range")))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<NodeId, E> {
                u64::try_from(v)
                    .map_err(|_| E::custom(format!("negative node index {v}")))
                    .and_then(|v| self.visit_u64(v))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<NodeId, E> {
                v.parse::<u32>().map(NodeId).map_err(|_| E::custom(format!("invalid node index {v:?}")))
            }
        }

        deserializer.deserialize_any(IdVisitor)
    }
}

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<u32> for NodeId {
    fn from(v: u32) -> Self {
        NodeId(v)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

pub type NodeSet = BTreeSet<NodeId>;

/// Builds a [`NodeSet`] from raw indices.
pub fn node_set<I: IntoIterator<Item = u32>>(ids: I) -> NodeSet {
    ids.into_iter().map(NodeId).collect()
}

/// A directed graph over a fixed node set.
///
/// Self-loops are never stored; the protocol's self-edge is implicit in the
/// agent.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Digraph {
    nodes: NodeSet,
    edges: BTreeSet<(NodeId, NodeId)>,
}

impl Digraph {
    pub fn new<E>(nodes: NodeSet, edges: E) -> Result<Self, NetworkError>
    where
        E: IntoIterator<Item = (NodeId, NodeId)>,
    {
        let mut g = Digraph { nodes, edges: BTreeSet::new() };
        for (from, to) in edges {
            g.insert_edge(from, to)?;
        }
        Ok(g)
    }

    /// Graph with no edges.
    pub fn empty(nodes: NodeSet) -> Self {
        Digraph { nodes, edges: BTreeSet::new() }
    }

    /// Convenience constructor from raw index pairs.
    pub fn from_pairs(nodes: &[u32], edges: &[(u32, u32)]) -> Result<Self, NetworkError> {
        Self::new(node_set(nodes.iter().copied()), edges.iter().map(|&(a, b)| (NodeId(a), NodeId(b))))
    }

    pub fn insert_edge(&mut self, from: NodeId, to: NodeId) -> Result<bool, NetworkError> {
        if from == to {
            return Err(NetworkError::SelfLoop(from));
        }
        for v in [from, to] {
            if !self.nodes.contains(&v) {
                return Err(NetworkError::EdgeEndpoint { from, to, missing: v });
            }
        }
        Ok(self.edges.insert((from, to)))
    }

    pub fn nodes(&self) -> &NodeSet {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeSet<(NodeId, NodeId)> {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains_edge(&self, from: NodeId, to: NodeId) -> bool {
        self.edges.contains(&(from, to))
    }

    /// `N⁺(v)`: every `u` with an edge `v → u`.
    pub fn out_neighbors(&self, v: NodeId) -> Result<NodeSet, NetworkError> {
        if !self.nodes.contains(&v) {
            return Err(NetworkError::UnknownNode(v));
        }
        Ok(self.edges.range((v, NodeId(0))..=(v, NodeId(u32::MAX))).map(|&(_, to)| to).collect())
    }

    /// Out-neighbors of `v` that stay active into the next step.
    pub fn remaining_out_neighbors(
        &self,
        v: NodeId,
        membership: &MembershipSets,
    ) -> Result<NodeSet, NetworkError> {
        Ok(self.out_neighbors(v)?.intersection(&membership.remaining).copied().collect())
    }

    /// Induced subgraph on `keep ∩ nodes`.
    pub fn restrict(&self, keep: &NodeSet) -> Digraph {
        let nodes: NodeSet = self.nodes.intersection(keep).copied().collect();
        let edges =
            self.edges.iter().filter(|(a, b)| nodes.contains(a) && nodes.contains(b)).copied().collect();
        Digraph { nodes, edges }
    }

    /// True iff every ordered pair of distinct nodes is joined by a directed
    /// path. A single node is trivially strongly connected; the empty graph
    /// is not.
    pub fn is_strongly_connected(&self) -> bool {
        match self.nodes.len() {
            0 => false,
            1 => true,
            _ => {
                let mut g: DiGraphMap<NodeId, ()> =
                    DiGraphMap::with_capacity(self.nodes.len(), self.edges.len());
                for &v in &self.nodes {
                    g.add_node(v);
                }
                for &(a, b) in &self.edges {
                    g.add_edge(a, b, ());
                }
                tarjan_scc(&g).len() == 1
            }
        }
    }
}

/// Edge-set union of instances that share one node set.
pub fn union_digraph(instances: &[Digraph]) -> Result<Digraph, NetworkError> {
    let (first, rest) = instances.split_first().ok_or(NetworkError::EmptyUnion)?;
    let mut out = first.clone();
    for g in rest {
        if g.nodes != out.nodes {
            return Err(NetworkError::NodeSetMismatch);
        }
        out.edges.extend(g.edges.iter().copied());
    }
    Ok(out)
}

/// Membership transition between step `k` and `k + 1`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MembershipSets {
    /// `R[k] = V[k] ∩ V[k+1]`
    pub remaining: NodeSet,
    /// `A[k] = V[k+1] \ V[k]`
    pub arriving: NodeSet,
    /// `D[k] = V[k] \ V[k+1]`
    pub departing: NodeSet,
}

impl MembershipSets {
    pub fn is_static(&self) -> bool {
        self.arriving.is_empty() && self.departing.is_empty()
    }
}

pub fn membership_sets(active_now: &NodeSet, active_next: &NodeSet) -> MembershipSets {
    MembershipSets {
        remaining: active_now.intersection(active_next).copied().collect(),
        arriving: active_next.difference(active_now).copied().collect(),
        departing: active_now.difference(active_next).copied().collect(),
    }
}
