mod common;

use oqac::engine::{Scenario, ScenarioError};
use oqac::network::{validate_scenario, Check, NodeId, Severity};

fn scenario(json: &str) -> Scenario {
    Scenario::from_json(json).expect("fixture parses")
}

const RING_UNION: &str = r#"{
  "n_total": 3,
  "initially_active": [0, 1, 2],
  "initial_states": {"0": 1, "1": 2, "2": 3},
  "topology": {"stable": {"kind": "explicit", "instances": [
    {"edges": [[0, 1], [1, 2]], "probability": 0.5},
    {"edges": [[2, 0]], "probability": 0.5}
  ]}},
  "k_prime": 0, "T": 2, "horizon": 20
}"#;

#[test]
fn ring_union_passes_every_check() {
    let report = validate_scenario(&scenario(RING_UNION));
    assert_eq!(report.worst(Check::UnionConnectivity), Some(Severity::Pass));
    assert!(report.is_acceptable(true), "{:?}", report.findings);
}

#[test]
fn disconnected_union_is_a_warning() {
    let json = RING_UNION.replace("[[2, 0]]", "[[1, 0]]");
    let report = validate_scenario(&scenario(&json));
    assert_eq!(report.worst(Check::UnionConnectivity), Some(Severity::Warning));
    assert!(report.is_acceptable(false));
    assert!(!report.is_acceptable(true));
}

#[test]
fn churn_after_stabilization_fails() {
    let json = r#"{
      "n_total": 4,
      "initially_active": [0, 1, 2],
      "initial_states": {"0": 1, "1": 2, "2": 3},
      "arrival_states": {"kind": "fixed", "values": {"3": 4}},
      "churn": {"kind": "explicit", "events": [{"step": 15, "arrivals": [3]}]},
      "topology": {"stable": {"kind": "explicit", "nodes": [0, 1, 2], "instances": [
        {"edges": [[0, 1], [1, 2], [2, 0]], "probability": 1.0}
      ]}},
      "k_prime": 10, "T": 1, "horizon": 30
    }"#;
    let report = validate_scenario(&scenario(json));
    let late: Vec<_> = report.of(Check::Stabilization).filter(|f| f.severity == Severity::Warning).collect();
    assert_eq!(late.len(), 1);
    assert_eq!(late[0].step, Some(15));
    assert!(!report.is_acceptable(true));
}

#[test]
fn departure_onto_departing_node_is_flagged() {
    // Both nodes of a 2-node network leave together; node 0's only edge
    // points at node 1, which is not remaining.
    let json = r#"{
      "n_total": 3,
      "initially_active": [0, 1, 2],
      "initial_states": {"0": 1, "1": 2, "2": 3},
      "churn": {"kind": "explicit", "events": [{"step": 2, "departures": [0, 1]}]},
      "topology": {
        "transient": {"kind": "explicit", "segments": [
          {"first_step": 0, "last_step": 2, "edges": [[0, 1], [1, 2], [2, 0]]}
        ]},
        "stable": {"kind": "explicit", "instances": [{"edges": [], "probability": 1.0}]}
      },
      "k_prime": 3, "T": 1, "horizon": 10
    }"#;
    let s = scenario(json);
    let report = validate_scenario(&s);
    assert_eq!(report.handoff_violations(), vec![(2, NodeId(0))]);
}

#[test]
fn bundled_scenarios_have_no_errors() {
    for name in ["churn_150.json", "static_small.json", "stranded_departure.json"] {
        let report = validate_scenario(&common::load(name));
        assert!(!report.has_errors(), "{name}: {:?}", report.findings);
    }
    let report = validate_scenario(&common::load("stranded_departure.json"));
    assert_eq!(report.handoff_violations(), vec![(20, NodeId(3))]);
}

#[test]
fn malformed_file_is_a_parse_error() {
    assert!(matches!(Scenario::from_json("{ \"n_total\": "), Err(ScenarioError::Parse(_))));
    assert!(matches!(Scenario::from_json(r#"{"n_total": 1, "bogus": 2}"#), Err(ScenarioError::Parse(_))));
}

#[test]
fn wrong_instance_count_is_an_error() {
    let json = RING_UNION.replace("\"T\": 2", "\"T\": 3");
    let report = validate_scenario(&scenario(&json));
    assert_eq!(report.worst(Check::Consistency), Some(Severity::Error));
    assert!(!report.is_acceptable(false));
}
