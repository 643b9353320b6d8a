use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{EdgeSegment, NodeId, NodeSet, StableTopology, TopologySchedule, TransientTopology};

/// Rule giving the initial state of a node that (re-)arrives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ArrivalStates {
    /// Uniform integer in `[low, high]`, drawn from the arrival stream of
    /// `(seed, node, step)`.
    Uniform { low: i64, high: i64 },
    /// Fixed value per node, reused on every arrival of that node.
    Fixed { values: BTreeMap<NodeId, i64> },
}

impl Default for ArrivalStates {
    fn default() -> Self {
        ArrivalStates::Fixed { values: BTreeMap::new() }
    }
}

/// Explicit membership change at step `k`: the listed nodes are in `A[k]`
/// and `D[k]`, so the change is visible in `V[k+1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChurnEvent {
    pub step: usize,
    #[serde(default)]
    pub arrivals: NodeSet,
    #[serde(default)]
    pub departures: NodeSet,
}

fn one() -> f64 {
    1.0
}

fn one_node() -> usize {
    1
}

/// Stochastic churn over the inclusive step range `[first_step, last_step]`.
///
/// At each step an event happens with `probability`; its kind is arrival or
/// departure in proportion to the weights, and it moves `magnitude` nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChurnInterval {
    pub first_step: usize,
    pub last_step: usize,
    pub probability: f64,
    #[serde(default = "one")]
    pub arrival_weight: f64,
    #[serde(default = "one")]
    pub departure_weight: f64,
    #[serde(default = "one_node")]
    pub magnitude: usize,
}

impl ChurnInterval {
    pub fn covers(&self, k: usize) -> bool {
        self.first_step <= k && k <= self.last_step
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChurnSchedule {
    Explicit { events: Vec<ChurnEvent> },
    Stochastic { intervals: Vec<ChurnInterval> },
}

impl Default for ChurnSchedule {
    fn default() -> Self {
        ChurnSchedule::Explicit { events: Vec::new() }
    }
}

impl ChurnSchedule {
    pub fn is_deterministic(&self) -> bool {
        matches!(self, ChurnSchedule::Explicit { .. })
    }

    /// Steps at or after `k_prime` at which membership may change.
    pub fn late_steps(&self, k_prime: usize) -> Vec<usize> {
        match self {
            ChurnSchedule::Explicit { events } => events
                .iter()
                .filter(|e| e.step >= k_prime && !(e.arrivals.is_empty() && e.departures.is_empty()))
                .map(|e| e.step)
                .collect(),
            ChurnSchedule::Stochastic { intervals } => intervals
                .iter()
                .filter(|i| i.last_step >= k_prime && i.probability > 0.0)
                .map(|i| i.first_step.max(k_prime))
                .collect(),
        }
    }
}

/// A complete experiment description, as read from a scenario file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// `|V′|`
    pub n_total: u32,
    pub initially_active: NodeSet,
    pub initial_states: BTreeMap<NodeId, i64>,
    #[serde(default)]
    pub arrival_states: ArrivalStates,
    #[serde(default)]
    pub churn: ChurnSchedule,
    pub topology: TopologySchedule,
    pub k_prime: usize,
    /// Number of stable topology instances.
    #[serde(rename = "T")]
    pub t: usize,
    pub horizon: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed scenario: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("inconsistent scenario: {0}")]
    Structure(String),
}

macro_rules! structure {
    ($($arg:tt)*) => {
        return Err(ScenarioError::Structure(format!($($arg)*)))
    };
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = serde_json::from_str(text)?;
        s.check_structure()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// All potentially participating nodes.
    pub fn universe(&self) -> NodeSet {
        (0..self.n_total).map(NodeId).collect()
    }

    fn check_id(&self, v: NodeId, what: &str) -> Result<(), ScenarioError> {
        if v.0 >= self.n_total {
            structure!("{what} references {v}, outside [0, {})", self.n_total);
        }
        Ok(())
    }

    fn check_edges(&self, edges: &[(NodeId, NodeId)], what: &str) -> Result<(), ScenarioError> {
        for &(a, b) in edges {
            self.check_id(a, what)?;
            self.check_id(b, what)?;
            if a == b {
                structure!("{what} contains self-loop on {a}");
            }
        }
        Ok(())
    }

    /// Checks that make the scenario executable at all. Assumption-level
    /// findings are left to [`crate::network::validate_scenario`].
    pub fn check_structure(&self) -> Result<(), ScenarioError> {
        if self.n_total == 0 {
            structure!("n_total must be at least 1");
        }
        if self.t == 0 {
            structure!("T must be at least 1");
        }
        if self.k_prime > self.horizon {
            structure!("k_prime {} exceeds horizon {}", self.k_prime, self.horizon);
        }
        for &v in &self.initially_active {
            self.check_id(v, "initially_active")?;
            if !self.initial_states.contains_key(&v) {
                structure!("initially active {v} has no initial state");
            }
        }
        for v in self.initial_states.keys() {
            if !self.initially_active.contains(v) {
                structure!("initial_states lists {v}, which is not initially active");
            }
        }

        match &self.arrival_states {
            ArrivalStates::Uniform { low, high } => {
                if low > high {
                    structure!("arrival_states range [{low}, {high}] is empty");
                }
            }
            ArrivalStates::Fixed { values } => {
                for &v in values.keys() {
                    self.check_id(v, "arrival_states")?;
                }
            }
        }

        match &self.churn {
            ChurnSchedule::Explicit { .. } => {
                // Replaying rejects arrive-while-active and depart-while-inactive.
                self.replay_explicit_membership()?;
                if let ArrivalStates::Fixed { values } = &self.arrival_states {
                    for v in self.explicit_arrivals() {
                        if !values.contains_key(&v) {
                            structure!("{v} arrives but arrival_states has no value for it");
                        }
                    }
                }
            }
            ChurnSchedule::Stochastic { intervals } => {
                for i in intervals {
                    if i.first_step > i.last_step {
                        structure!("churn interval [{}, {}] is empty", i.first_step, i.last_step);
                    }
                    if !(0.0..=1.0).contains(&i.probability) {
                        structure!("churn probability {} outside [0, 1]", i.probability);
                    }
                    if i.arrival_weight < 0.0
                        || i.departure_weight < 0.0
                        || (i.arrival_weight + i.departure_weight).is_nan()
                        || i.arrival_weight + i.departure_weight <= 0.0
                    {
                        structure!("churn weights must be nonnegative and not both zero");
                    }
                    if i.magnitude == 0 {
                        structure!("churn magnitude must be at least 1");
                    }
                }
                for (a, b) in intervals.iter().zip(intervals.iter().skip(1)) {
                    if b.first_step <= a.last_step {
                        structure!("churn intervals must be ordered and disjoint");
                    }
                }
                if let ArrivalStates::Fixed { values } = &self.arrival_states {
                    if intervals.iter().any(|i| i.arrival_weight > 0.0 && i.probability > 0.0)
                        && (values.len() as u32) < self.n_total
                    {
                        structure!(
                            "stochastic arrivals need a uniform arrival rule or a fixed value for every node"
                        );
                    }
                }
            }
        }

        match &self.topology.transient {
            TransientTopology::Explicit { segments } => {
                for s in segments {
                    if s.first_step > s.last_step {
                        structure!("edge segment [{}, {}] is empty", s.first_step, s.last_step);
                    }
                    self.check_edges(&s.edges, "transient edge segment")?;
                }
                let mut sorted: Vec<&EdgeSegment> = segments.iter().collect();
                sorted.sort_by_key(|s| s.first_step);
                for (a, b) in sorted.iter().zip(sorted.iter().skip(1)) {
                    if b.first_step <= a.last_step {
                        structure!("transient edge segments overlap at step {}", b.first_step);
                    }
                }
            }
            TransientTopology::RandomMinOutDegree { .. } => {}
        }

        match &self.topology.stable {
            StableTopology::Explicit { nodes, instances } => {
                if let Some(nodes) = nodes {
                    for &v in nodes {
                        self.check_id(v, "stable node set")?;
                    }
                }
                for inst in instances {
                    self.check_edges(&inst.edges, "stable instance")?;
                }
                if nodes.is_none() && !self.churn.is_deterministic() {
                    structure!("explicit stable instances need a declared node set under stochastic churn");
                }
            }
            StableTopology::Generated { .. } => {}
        }
        Ok(())
    }

    fn explicit_arrivals(&self) -> NodeSet {
        match &self.churn {
            ChurnSchedule::Explicit { events } => {
                events.iter().flat_map(|e| e.arrivals.iter().copied()).collect()
            }
            ChurnSchedule::Stochastic { .. } => NodeSet::new(),
        }
    }

    /// Explicit churn events merged per step.
    pub fn events_at(&self, k: usize) -> (NodeSet, NodeSet) {
        let mut arrivals = NodeSet::new();
        let mut departures = NodeSet::new();
        if let ChurnSchedule::Explicit { events } = &self.churn {
            for e in events.iter().filter(|e| e.step == k) {
                arrivals.extend(e.arrivals.iter().copied());
                departures.extend(e.departures.iter().copied());
            }
        }
        (arrivals, departures)
    }

    /// `V[0], …, V[horizon]` for an explicit churn schedule.
    pub fn replay_explicit_membership(&self) -> Result<Vec<NodeSet>, ScenarioError> {
        let ChurnSchedule::Explicit { events } = &self.churn else {
            structure!("membership replay needs an explicit churn schedule");
        };
        for e in events {
            for &v in e.arrivals.iter().chain(e.departures.iter()) {
                self.check_id(v, "churn event")?;
            }
            if e.step >= self.horizon && !(e.arrivals.is_empty() && e.departures.is_empty()) {
                structure!("churn event at step {} is at or beyond the horizon", e.step);
            }
        }
        let mut sets = Vec::with_capacity(self.horizon + 1);
        let mut active = self.initially_active.clone();
        sets.push(active.clone());
        for k in 0..self.horizon {
            let (arrivals, departures) = self.events_at(k);
            if let Some(v) = arrivals.intersection(&departures).next() {
                structure!("{v} both arrives and departs at step {k}");
            }
            for v in &arrivals {
                if active.contains(v) {
                    structure!("{v} arrives at step {k} while already active");
                }
            }
            for v in &departures {
                if !active.contains(v) {
                    structure!("{v} departs at step {k} while inactive");
                }
                active.remove(v);
            }
            active.extend(arrivals.iter().copied());
            sets.push(active.clone());
        }
        Ok(sets)
    }

    /// `V_R` when it is known before running: declared in the stable
    /// topology, or replayed from explicit churn.
    pub fn declared_stable_nodes(&self) -> Option<NodeSet> {
        if let StableTopology::Explicit { nodes: Some(nodes), .. } = &self.topology.stable {
            return Some(nodes.clone());
        }
        if self.churn.is_deterministic() {
            return self.replay_explicit_membership().ok().map(|mut v| v.swap_remove(self.k_prime));
        }
        None
    }
}
