use std::fmt;

use serde::Serialize;

use super::topology::PROBABILITY_TOLERANCE;
use super::{union_digraph, Digraph, InstanceFamily, StableTopology, TransientTopology};
use crate::engine::Scenario;
use crate::network::{membership_sets, NodeId};

/// Which property a finding is about.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// Union of the stable instances is strongly connected.
    UnionConnectivity,
    /// Membership is frozen from `k′` on.
    Stabilization,
    /// Every departing node has at least one remaining out-neighbor.
    DepartureHandoff,
    /// Probabilities, instance count, node sets, coverage.
    Consistency,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Check::UnionConnectivity => "union-connectivity",
            Check::Stabilization => "stabilization",
            Check::DepartureHandoff => "departure-handoff",
            Check::Consistency => "consistency",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Pass,
    /// Cannot be decided statically; the engine records it per step.
    Runtime,
    Warning,
    Error,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub check: Check,
    pub severity: Severity,
    pub step: Option<usize>,
    pub node: Option<NodeId>,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Pass => "ok",
            Severity::Runtime => "runtime",
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "[{tag}] {}: {}", self.check, self.message)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    fn push(&mut self, check: Check, severity: Severity, message: impl Into<String>) {
        self.findings.push(Finding { check, severity, step: None, node: None, message: message.into() });
    }

    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Warning)
    }

    /// Findings for a given check.
    pub fn of(&self, check: Check) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(move |f| f.check == check)
    }

    /// Worst severity among the findings for `check`.
    pub fn worst(&self, check: Check) -> Option<Severity> {
        self.of(check).map(|f| f.severity).max()
    }

    pub fn has_errors(&self) -> bool {
        self.errors().next().is_some()
    }

    /// Strict mode treats warnings as errors.
    pub fn is_acceptable(&self, strict: bool) -> bool {
        !self.has_errors() && !(strict && self.warnings().next().is_some())
    }

    /// Departure-handoff violations found statically, as `(step, node)`.
    pub fn handoff_violations(&self) -> Vec<(usize, NodeId)> {
        self.of(Check::DepartureHandoff)
            .filter(|f| f.severity == Severity::Warning)
            .filter_map(|f| Some((f.step?, f.node?)))
            .collect()
    }
}

/// Checks a structurally sound scenario against the model assumptions.
///
/// Departure-handoff violations are reported as warnings so that violating
/// fixtures remain runnable.
pub fn validate_scenario(s: &Scenario) -> ValidationReport {
    let mut report = ValidationReport::default();
    check_stable_family(s, &mut report);
    check_stabilization(s, &mut report);
    check_handoffs(s, &mut report);
    check_coverage(s, &mut report);
    report
}

fn check_stable_family(s: &Scenario, report: &mut ValidationReport) {
    match &s.topology.stable {
        StableTopology::Generated { extra_out_degree } => {
            report.push(
                Check::Consistency,
                Severity::Pass,
                format!(
                    "{} generated instances with uniform probability, extra out-degree {extra_out_degree}",
                    s.t
                ),
            );
            report.push(
                Check::UnionConnectivity,
                Severity::Pass,
                "generated instances partition a Hamiltonian cycle over V_R; union is strongly connected by construction",
            );
        }
        StableTopology::Explicit { instances, .. } => {
            if instances.len() != s.t {
                report.push(
                    Check::Consistency,
                    Severity::Error,
                    format!("T = {} but {} stable instances are listed", s.t, instances.len()),
                );
            }
            let total: f64 = instances.iter().map(|i| i.probability).sum();
            if instances.iter().any(|i| i.probability.is_nan() || i.probability <= 0.0) {
                report.push(
                    Check::Consistency,
                    Severity::Error,
                    "every instance probability must be positive",
                );
            } else if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
                report.push(
                    Check::Consistency,
                    Severity::Error,
                    format!("instance probabilities sum to {total}"),
                );
            }

            let Some(nodes) = s.declared_stable_nodes() else {
                report.push(Check::Consistency, Severity::Error, "stable node set V_R is unknown");
                return;
            };
            if nodes.is_empty() {
                report.push(Check::Consistency, Severity::Error, "stable node set V_R is empty");
                return;
            }
            if s.churn.is_deterministic() {
                if let Ok(sets) = s.replay_explicit_membership() {
                    if sets[s.k_prime] != nodes {
                        report.push(
                            Check::Consistency,
                            Severity::Error,
                            "declared stable node set differs from the active set at k_prime",
                        );
                    }
                }
            }
            let mut graphs = Vec::with_capacity(instances.len());
            for (i, inst) in instances.iter().enumerate() {
                match Digraph::new(nodes.clone(), inst.edges.iter().copied()) {
                    Ok(g) => graphs.push(g),
                    Err(e) => report.push(
                        Check::Consistency,
                        Severity::Error,
                        format!("stable instance {i} is not over V_R: {e}"),
                    ),
                }
            }
            if graphs.len() != instances.len() || graphs.is_empty() {
                return;
            }
            if InstanceFamily::new(graphs.clone(), instances.iter().map(|i| i.probability).collect()).is_ok()
                && !report.has_errors()
            {
                report.push(Check::Consistency, Severity::Pass, "stable instance family is well formed");
            }
            let union = union_digraph(&graphs).expect("instances share V_R");
            if union.is_strongly_connected() {
                let single = graphs.iter().filter(|g| g.is_strongly_connected()).count();
                report.push(
                    Check::UnionConnectivity,
                    Severity::Pass,
                    format!(
                        "union of {} instances is strongly connected ({single} individually strongly connected)",
                        graphs.len()
                    ),
                );
            } else {
                report.push(
                    Check::UnionConnectivity,
                    Severity::Warning,
                    "union of the stable instances is not strongly connected",
                );
            }
        }
    }
}

fn check_stabilization(s: &Scenario, report: &mut ValidationReport) {
    let late = s.churn.late_steps(s.k_prime);
    if late.is_empty() {
        report.push(
            Check::Stabilization,
            Severity::Pass,
            format!("no membership change at or after k' = {}", s.k_prime),
        );
    } else {
        for step in late {
            report.findings.push(Finding {
                check: Check::Stabilization,
                severity: Severity::Warning,
                step: Some(step),
                node: None,
                message: format!("churn at step {step} is at or after k' = {}", s.k_prime),
            });
        }
    }
}

fn check_handoffs(s: &Scenario, report: &mut ValidationReport) {
    let deterministic = s.churn.is_deterministic() && s.topology.transient.is_deterministic();
    let sets = match s.replay_explicit_membership() {
        Ok(sets) if deterministic => sets,
        _ => {
            report.push(
                Check::DepartureHandoff,
                Severity::Runtime,
                "stochastic churn or topology; departure hand-offs are checked at runtime",
            );
            return;
        }
    };

    let mut clean = true;
    let mut runtime = false;
    for k in 0..s.horizon {
        let m = membership_sets(&sets[k], &sets[k + 1]);
        if m.departing.is_empty() {
            continue;
        }
        if k >= s.k_prime {
            // Stable instances are drawn at random.
            runtime = true;
            continue;
        }
        let edges = s.topology.transient.explicit_edges(k).unwrap_or(&[]);
        let g = build_restricted(&sets[k], edges);
        for &d in &m.departing {
            let targets = g.remaining_out_neighbors(d, &m).expect("departing node is active");
            if targets.is_empty() {
                clean = false;
                report.findings.push(Finding {
                    check: Check::DepartureHandoff,
                    severity: Severity::Warning,
                    step: Some(k),
                    node: Some(d),
                    message: format!("{d} departs at step {k} with no remaining out-neighbor"),
                });
            }
        }
    }
    if runtime {
        report.push(
            Check::DepartureHandoff,
            Severity::Runtime,
            "departures at or after k' are checked at runtime",
        );
    }
    if clean {
        report.push(
            Check::DepartureHandoff,
            Severity::Pass,
            "every scheduled departure has a remaining out-neighbor",
        );
    }
}

fn check_coverage(s: &Scenario, report: &mut ValidationReport) {
    if let TransientTopology::Explicit { segments } = &s.topology.transient {
        let uncovered: Vec<usize> =
            (0..s.k_prime).filter(|&k| !segments.iter().any(|seg| seg.covers(k))).collect();
        if !uncovered.is_empty() && !segments.is_empty() {
            report.push(
                Check::Consistency,
                Severity::Warning,
                format!("{} transient steps have no edge segment (first: {})", uncovered.len(), uncovered[0]),
            );
        }
    }
}

fn build_restricted(active: &super::NodeSet, edges: &[(NodeId, NodeId)]) -> Digraph {
    let edges = edges.iter().filter(|(a, b)| active.contains(a) && active.contains(b)).copied();
    Digraph::new(active.clone(), edges).expect("filtered edges lie inside the active set")
}
