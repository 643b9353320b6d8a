use serde::{Deserialize, Serialize};

use super::{Digraph, NetworkError, NodeId, NodeSet};

/// Edge set shared by a contiguous, inclusive range of steps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSegment {
    pub first_step: usize,
    pub last_step: usize,
    pub edges: Vec<(NodeId, NodeId)>,
}

impl EdgeSegment {
    pub fn covers(&self, k: usize) -> bool {
        self.first_step <= k && k <= self.last_step
    }
}

/// Topology rule for steps before stabilization (`k < k′`).
///
/// Either form is defined over `V′`; the engine restricts each step's graph
/// to the nodes active at that step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TransientTopology {
    /// Piecewise-constant explicit edge sets. Steps not covered by any segment
    /// have no edges.
    Explicit { segments: Vec<EdgeSegment> },
    /// Each active node draws `min(min_out_degree, n[k] - 1)` distinct
    /// out-neighbors uniformly among the other active nodes, fresh every step
    /// from the topology stream.
    RandomMinOutDegree { min_out_degree: usize },
}

impl Default for TransientTopology {
    fn default() -> Self {
        TransientTopology::Explicit { segments: Vec::new() }
    }
}

impl TransientTopology {
    pub fn is_deterministic(&self) -> bool {
        matches!(self, TransientTopology::Explicit { .. })
    }

    /// Explicit edge list for step `k`, if this is an explicit schedule.
    pub fn explicit_edges(&self, k: usize) -> Option<&[(NodeId, NodeId)]> {
        match self {
            TransientTopology::Explicit { segments } => {
                Some(segments.iter().find(|s| s.covers(k)).map(|s| s.edges.as_slice()).unwrap_or(&[]))
            }
            TransientTopology::RandomMinOutDegree { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub edges: Vec<(NodeId, NodeId)>,
    pub probability: f64,
}

/// Topology rule for `k ≥ k′`: a finite instance family drawn i.i.d.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StableTopology {
    /// Instances given edge by edge over `V_R`. `nodes` declares `V_R`; it may
    /// be omitted when the churn schedule is explicit, in which case `V_R` is
    /// the replayed active set at `k′`.
    Explicit {
        #[serde(default)]
        nodes: Option<NodeSet>,
        instances: Vec<InstanceSpec>,
    },
    /// `T` instances materialized at `k′` over whatever `V_R` turned out to
    /// be. A random Hamiltonian cycle over `V_R` is cut into `T` contiguous
    /// arcs, one per instance, so the union is strongly connected while no
    /// single instance needs to be; every instance also gets
    /// `extra_out_degree` random out-edges per node. Probabilities are `1/T`.
    Generated { extra_out_degree: usize },
}

/// Full topology description of a scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySchedule {
    #[serde(default)]
    pub transient: TransientTopology,
    pub stable: StableTopology,
}

/// A materialized stable instance family over `V_R`.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceFamily {
    instances: Vec<Digraph>,
    probabilities: Vec<f64>,
}

impl InstanceFamily {
    /// Builds a family; every instance must share the node set and the
    /// probabilities must be positive and sum to one.
    pub fn new(instances: Vec<Digraph>, probabilities: Vec<f64>) -> Result<Self, FamilyError> {
        if instances.is_empty() || instances.len() != probabilities.len() {
            return Err(FamilyError::Shape);
        }
        if probabilities.iter().any(|&p| !p.is_finite() || p <= 0.0) {
            return Err(FamilyError::NonPositive);
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(FamilyError::Sum(total));
        }
        let nodes = instances[0].nodes();
        if instances.iter().any(|g| g.nodes() != nodes) {
            return Err(FamilyError::Network(NetworkError::NodeSetMismatch));
        }
        Ok(InstanceFamily { instances, probabilities })
    }

    pub fn from_specs(nodes: &NodeSet, specs: &[InstanceSpec]) -> Result<Self, FamilyError> {
        let instances = specs
            .iter()
            .map(|s| Digraph::new(nodes.clone(), s.edges.iter().copied()))
            .collect::<Result<Vec<_>, _>>()
            .map_err(FamilyError::Network)?;
        Self::new(instances, specs.iter().map(|s| s.probability).collect())
    }

    pub fn instances(&self) -> &[Digraph] {
        &self.instances
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn nodes(&self) -> &NodeSet {
        self.instances[0].nodes()
    }

    /// Index of the instance selected by a uniform sample `u ∈ [0, 1)`.
    pub fn select(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (i, p) in self.probabilities.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.probabilities.len() - 1
    }
}

pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FamilyError {
    #[error("instance family must be nonempty with one probability per instance")]
    Shape,
    #[error("every instance probability must be positive and finite")]
    NonPositive,
    #[error("instance probabilities sum to {0}, not 1")]
    Sum(f64),
    #[error(transparent)]
    Network(NetworkError),
}
