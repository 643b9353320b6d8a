//! Per-node protocol state machine.
//!
//! Each node holds a mass pair `(y, z)` whose ratio estimates the average and
//! a state triple `(y_s, z_s, q_s)` that snapshots it. A remaining node splits
//! its mass into `z` near-equal token pieces, keeps one and routes the rest
//! uniformly over its remaining out-neighbors and itself. A departing node
//! hands its mass, minus its own initial contribution, to one remaining
//! out-neighbor. An arriving node starts from `(2x, 2)`.

use serde::Serialize;
use thiserror::Error;

use crate::network::NodeId;
use crate::scalar::{floor_div, Mass};

/// Source of uniform choices among `n` candidates.
pub trait Draw {
    /// Uniform index in `0..n`; `n ≥ 1`.
    fn pick(&mut self, n: usize) -> usize;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct AgentState<T> {
    /// Initial quantized state of the current activation.
    pub x: T,
    pub y: T,
    pub z: T,
    pub y_s: T,
    pub z_s: T,
    pub q_s: T,
    pub active: bool,
}

/// A transmitted mass pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct MassMessage<T> {
    pub from: NodeId,
    pub to: NodeId,
    pub c_y: T,
    pub c_z: T,
    pub step: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// A departing node had nobody to hand its mass to.
    NoRemainingOutNeighbor,
}

/// Recorded when a departure discards mass instead of handing it off.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Violation<T> {
    pub node: NodeId,
    pub step: usize,
    pub kind: ViolationKind,
    /// The `(y − 2x, z − 2)` pair that should have been transmitted.
    pub lost_y: T,
    pub lost_z: T,
}

/// Result of one strategy step for one node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome<T> {
    pub new_state: AgentState<T>,
    /// At most one message per target, with all pieces for it coalesced.
    pub outgoing: Vec<MassMessage<T>>,
    /// Mass retained over the virtual self-edge.
    pub kept: (T, T),
    /// `δ_y` of each routed piece, in draw order. Excludes the residual.
    pub pieces: Vec<T>,
    pub violation: Option<Violation<T>>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AgentError {
    #[error("node is already active and cannot arrive")]
    AlreadyActive,
    #[error("node is not active")]
    Inactive,
}

impl<T: Mass> AgentState<T> {
    /// The denominator weight of every node; initial states are integers.
    pub fn r() -> T {
        T::one()
    }

    /// Cleared state of a node outside the network.
    pub fn inactive() -> Self {
        AgentState {
            x: T::zero(),
            y: T::zero(),
            z: T::zero(),
            y_s: T::zero(),
            z_s: T::zero(),
            q_s: T::zero(),
            active: false,
        }
    }

    /// State of a node active from step 0.
    pub fn init_active(x: T) -> Self {
        let y = T::two() * x;
        let z = T::two() * Self::r();
        AgentState { x, y, z, y_s: y, z_s: z, q_s: floor_div(y, z), active: true }
    }

    /// Activation of an inactive node. The caller makes the state effective
    /// from the next step.
    pub fn arrive(&self, x: T) -> Result<Self, AgentError> {
        if self.active {
            return Err(AgentError::AlreadyActive);
        }
        Ok(Self::init_active(x))
    }

    /// `⌊y_s / z_s⌋`, or the last computed value while `z_s ≤ 0`.
    pub fn quantized_estimate(&self) -> T {
        if self.z_s >= T::one() {
            floor_div(self.y_s, self.z_s)
        } else {
            self.q_s
        }
    }

    /// One step of a node that stays active. `targets` are its remaining
    /// out-neighbors (sorted, without itself); it may be empty.
    pub fn remaining_step<D: Draw + ?Sized>(
        &self,
        me: NodeId,
        step: usize,
        targets: &[NodeId],
        draw: &mut D,
    ) -> Outcome<T> {
        debug_assert!(self.active);
        let mut next = *self;
        next.y_s = self.y;
        next.z_s = self.z;
        next.q_s = next.quantized_estimate();

        // Index `targets.len()` is the self-edge.
        let candidates = targets.len() + 1;
        let mut acc = vec![(T::zero(), T::zero()); candidates];
        let mut pieces = Vec::new();

        let (mut y, mut z) = (self.y, self.z);
        let mut delta_z = self.z;
        if delta_z <= T::one() {
            acc[targets.len()] = (y, z);
        } else {
            while delta_z > T::one() {
                let delta_y = floor_div(y, z);
                let slot = &mut acc[draw.pick(candidates)];
                slot.0 = slot.0 + delta_y;
                slot.1 = slot.1 + T::one();
                pieces.push(delta_y);
                y = y - delta_y;
                z = z - T::one();
                delta_z = delta_z - T::one();
            }
            let own = &mut acc[targets.len()];
            own.0 = own.0 + y;
            own.1 = own.1 + z;
        }

        let kept = acc[targets.len()];
        let outgoing = targets
            .iter()
            .zip(&acc)
            .filter(|(_, (_, c_z))| !c_z.is_zero())
            .map(|(&to, &(c_y, c_z))| MassMessage { from: me, to, c_y, c_z, step })
            .collect();
        next.y = kept.0;
        next.z = kept.1;
        Outcome { new_state: next, outgoing, kept, pieces, violation: None }
    }

    /// One step of a node that leaves after this step. With no targets the
    /// held mass is lost and a violation is reported.
    pub fn depart_step<D: Draw + ?Sized>(
        &self,
        me: NodeId,
        step: usize,
        targets: &[NodeId],
        draw: &mut D,
    ) -> Outcome<T> {
        debug_assert!(self.active);
        let c_y = self.y - T::two() * self.x;
        let c_z = self.z - T::two() * Self::r();
        let zero = (T::zero(), T::zero());
        if targets.is_empty() {
            return Outcome {
                new_state: Self::inactive(),
                outgoing: Vec::new(),
                kept: zero,
                pieces: Vec::new(),
                violation: Some(Violation {
                    node: me,
                    step,
                    kind: ViolationKind::NoRemainingOutNeighbor,
                    lost_y: c_y,
                    lost_z: c_z,
                }),
            };
        }
        let to = targets[draw.pick(targets.len())];
        Outcome {
            new_state: Self::inactive(),
            outgoing: vec![MassMessage { from: me, to, c_y, c_z, step }],
            kept: zero,
            pieces: Vec::new(),
            violation: None,
        }
    }

    /// Mass update of a remaining node from its kept pair and every message
    /// delivered to it.
    pub fn receive<'a, I>(&self, kept: (T, T), inbound: I) -> Self
    where
        I: IntoIterator<Item = &'a MassMessage<T>>,
    {
        let mut next = *self;
        let (mut y, mut z) = kept;
        for m in inbound {
            y = y + m.c_y;
            z = z + m.c_z;
        }
        next.y = y;
        next.z = z;
        next
    }
}
