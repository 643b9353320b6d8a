//! Synchronous round loop: churn, topology draw, the three strategy blocks,
//! barrier-synchronized delivery, and per-round records.

mod rng;
mod scenario;
mod topology;

pub use rng::{RandomStream, StreamTag};
pub use scenario::{ArrivalStates, ChurnEvent, ChurnInterval, ChurnSchedule, Scenario, ScenarioError};
pub use topology::{draw_topology, generate_family, random_out_degree};

use std::collections::BTreeMap;

use num_rational::Ratio;
use serde::Serialize;
use thiserror::Error;

use crate::agent::{AgentError, AgentState, MassMessage, Violation};
use crate::analysis::{consensus_error, true_average};
use crate::network::{
    membership_sets, validate_scenario, Digraph, InstanceFamily, MembershipSets, NodeId, NodeSet,
    StableTopology, ValidationReport,
};
use crate::scalar::Mass;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("scenario fails validation: {}", .0.errors().map(|f| f.message.as_str()).collect::<Vec<_>>().join("; "))]
    Invalid(ValidationReport),
    #[error("initial state {value} of {node} does not fit the mass type")]
    Overflow { node: NodeId, value: i64 },
    #[error("{node} arrives at step {step} but no arrival state is defined for it")]
    MissingArrivalState { node: NodeId, step: usize },
    #[error("{node} at step {step}: {source}")]
    Agent {
        node: NodeId,
        step: usize,
        #[source]
        source: AgentError,
    },
    #[error("message from {from} to {to} at step {step} is not addressed to a remaining node")]
    Misaddressed { from: NodeId, to: NodeId, step: usize },
    #[error("stable node set differs from the active set at step {0}")]
    StableSetMismatch(usize),
}

/// Per-node values in a [`RoundRecord`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct NodeSnapshot<T> {
    pub x: T,
    /// Mass at the start of the step.
    pub y: T,
    pub z: T,
    /// State variables as set during the step.
    pub y_s: T,
    pub z_s: T,
    pub q_s: T,
}

/// Snapshot of step `k` over `V[k]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RoundRecord<T: Mass> {
    pub step: usize,
    pub active: NodeSet,
    pub membership: MembershipSets,
    pub per_node: BTreeMap<NodeId, NodeSnapshot<T>>,
    /// `None` only when no node is active.
    pub q_true: Option<Ratio<T>>,
    pub epsilon: T,
    pub excluded: usize,
    pub violations: Vec<Violation<T>>,
    /// Index of the stable instance drawn at this step, if any.
    pub instance: Option<usize>,
    pub edges: usize,
    pub messages: usize,
}

/// One run of a scenario under one seed.
pub struct Simulation<'a, T> {
    scenario: &'a Scenario,
    seed: u64,
    agents: Vec<AgentState<T>>,
    active: NodeSet,
    family: Option<InstanceFamily>,
    step: usize,
}

impl<'a, T: Mass> Simulation<'a, T> {
    /// Refuses scenarios whose validation report has errors.
    pub fn new(scenario: &'a Scenario, seed: u64) -> Result<Self, EngineError> {
        let report = validate_scenario(scenario);
        if report.has_errors() {
            return Err(EngineError::Invalid(report));
        }
        let mut agents = vec![AgentState::inactive(); scenario.n_total as usize];
        for (&v, &x) in &scenario.initial_states {
            let x = T::from_state(x).ok_or(EngineError::Overflow { node: v, value: x })?;
            agents[v.index()] = AgentState::init_active(x);
        }
        let family = match &scenario.topology.stable {
            StableTopology::Explicit { instances, .. } => {
                let nodes = scenario.declared_stable_nodes().expect("validated");
                Some(InstanceFamily::from_specs(&nodes, instances).expect("validated"))
            }
            StableTopology::Generated { .. } => None,
        };
        Ok(Simulation { scenario, seed, agents, active: scenario.initially_active.clone(), family, step: 0 })
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn active(&self) -> &NodeSet {
        &self.active
    }

    pub fn agent(&self, v: NodeId) -> &AgentState<T> {
        &self.agents[v.index()]
    }

    /// Membership change drawn for step `k`: `(arrivals, departures)`.
    fn churn(&self, k: usize) -> (NodeSet, NodeSet) {
        let s = self.scenario;
        if k >= s.horizon {
            return (NodeSet::new(), NodeSet::new());
        }
        match &s.churn {
            ChurnSchedule::Explicit { .. } => s.events_at(k),
            ChurnSchedule::Stochastic { intervals } => {
                let Some(interval) = intervals.iter().find(|i| i.covers(k)) else {
                    return (NodeSet::new(), NodeSet::new());
                };
                let mut rng = RandomStream::derive(self.seed, StreamTag::Churn, 0, k as u64);
                if !rng.chance(interval.probability) {
                    return (NodeSet::new(), NodeSet::new());
                }
                let total = interval.arrival_weight + interval.departure_weight;
                let arrival = rng.unit() * total < interval.arrival_weight;
                let m = interval.magnitude;
                if arrival {
                    let idle: Vec<NodeId> = s.universe().difference(&self.active).copied().collect();
                    if idle.len() < m {
                        return (NodeSet::new(), NodeSet::new());
                    }
                    let picked = rng.distinct(idle.len(), m).into_iter().map(|i| idle[i]).collect();
                    (picked, NodeSet::new())
                } else {
                    // Never empty the network.
                    let live: Vec<NodeId> = self.active.iter().copied().collect();
                    if live.len() <= m {
                        return (NodeSet::new(), NodeSet::new());
                    }
                    let picked = rng.distinct(live.len(), m).into_iter().map(|i| live[i]).collect();
                    (NodeSet::new(), picked)
                }
            }
        }
    }

    fn arrival_state(&self, v: NodeId, k: usize) -> Result<T, EngineError> {
        let value = match &self.scenario.arrival_states {
            ArrivalStates::Uniform { low, high } => {
                RandomStream::derive(self.seed, StreamTag::Arrival, v.0 as u64, k as u64).between(*low, *high)
            }
            ArrivalStates::Fixed { values } => {
                *values.get(&v).ok_or(EngineError::MissingArrivalState { node: v, step: k })?
            }
        };
        T::from_state(value).ok_or(EngineError::Overflow { node: v, value })
    }

    fn ensure_family(&mut self, k: usize) -> Result<(), EngineError> {
        let s = self.scenario;
        if k < s.k_prime || self.family.is_some() {
            return Ok(());
        }
        if let StableTopology::Generated { extra_out_degree } = s.topology.stable {
            self.family = Some(generate_family(&self.active, s.t, extra_out_degree, self.seed));
        }
        if k == s.k_prime && self.family.as_ref().is_some_and(|f| f.nodes() != &self.active) {
            return Err(EngineError::StableSetMismatch(k));
        }
        Ok(())
    }

    /// Executes step `k` and returns its record.
    pub fn step(&mut self) -> Result<RoundRecord<T>, EngineError> {
        let k = self.step;
        let s = self.scenario;

        let (arrivals, departures) = self.churn(k);
        let mut next = self.active.clone();
        for v in &departures {
            next.remove(v);
        }
        next.extend(arrivals.iter().copied());
        let membership = membership_sets(&self.active, &next);

        self.ensure_family(k)?;
        let (graph, instance) =
            draw_topology(&s.topology, self.family.as_ref(), &self.active, k, s.k_prime, self.seed);

        // Arrivals take effect at k + 1 and do not take part in step k.
        let mut arrived = Vec::with_capacity(membership.arriving.len());
        for &v in &membership.arriving {
            let x = self.arrival_state(v, k)?;
            let state = self.agents[v.index()].arrive(x).map_err(|source| EngineError::Agent {
                node: v,
                step: k,
                source,
            })?;
            arrived.push((v, state));
        }

        let targets_of = |v: NodeId, g: &Digraph| -> Vec<NodeId> {
            g.remaining_out_neighbors(v, &membership).expect("active node").into_iter().collect()
        };

        let mut messages: Vec<MassMessage<T>> = Vec::new();
        let mut violations = Vec::new();
        let mut snapshots = BTreeMap::new();
        let mut departed = Vec::with_capacity(membership.departing.len());
        for &d in &membership.departing {
            let state = self.agents[d.index()];
            let mut rng = RandomStream::agent(self.seed, d.0, k);
            let out = state.depart_step(d, k, &targets_of(d, &graph), &mut rng);
            messages.extend(out.outgoing);
            violations.extend(out.violation);
            snapshots.insert(d, snapshot(&state, &state));
            departed.push((d, out.new_state));
        }

        let mut staying = Vec::with_capacity(membership.remaining.len());
        for &r in &membership.remaining {
            let state = self.agents[r.index()];
            let mut rng = RandomStream::agent(self.seed, r.0, k);
            let out = state.remaining_step(r, k, &targets_of(r, &graph), &mut rng);
            messages.extend(out.outgoing);
            snapshots.insert(r, snapshot(&state, &out.new_state));
            staying.push((r, out.new_state, out.kept));
        }

        let mut inbox: BTreeMap<NodeId, Vec<MassMessage<T>>> = BTreeMap::new();
        for m in &messages {
            if !membership.remaining.contains(&m.to) {
                return Err(EngineError::Misaddressed { from: m.from, to: m.to, step: k });
            }
            inbox.entry(m.to).or_default().push(*m);
        }

        let q_true = true_average(snapshots.values().map(|n| n.x)).ok();
        let err = q_true
            .as_ref()
            .map(|q| consensus_error(snapshots.values().map(|n| (n.y, n.z)), q))
            .unwrap_or(crate::analysis::ConsensusError { epsilon: T::zero(), excluded: 0 });

        for (r, state, kept) in staying {
            let inbound = inbox.get(&r).map(Vec::as_slice).unwrap_or(&[]);
            self.agents[r.index()] = state.receive(kept, inbound);
        }
        for (d, state) in departed {
            self.agents[d.index()] = state;
        }
        for (v, state) in arrived {
            self.agents[v.index()] = state;
        }

        let record = RoundRecord {
            step: k,
            active: std::mem::replace(&mut self.active, next),
            membership,
            per_node: snapshots,
            q_true,
            epsilon: err.epsilon,
            excluded: err.excluded,
            violations,
            instance,
            edges: graph.edge_count(),
            messages: messages.len(),
        };
        self.step += 1;
        Ok(record)
    }

    /// Runs steps `0..=horizon`.
    pub fn run(mut self) -> Result<Vec<RoundRecord<T>>, EngineError> {
        (0..=self.scenario.horizon).map(|_| self.step()).collect()
    }
}

fn snapshot<T: Mass>(before: &AgentState<T>, after: &AgentState<T>) -> NodeSnapshot<T> {
    NodeSnapshot { x: before.x, y: before.y, z: before.z, y_s: after.y_s, z_s: after.z_s, q_s: after.q_s }
}

/// Runs `scenario` under `seed` with mass type `T`.
pub fn run<T: Mass>(scenario: &Scenario, seed: u64) -> Result<Vec<RoundRecord<T>>, EngineError> {
    Simulation::new(scenario, seed)?.run()
}
