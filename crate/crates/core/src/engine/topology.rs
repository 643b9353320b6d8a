use crate::network::{Digraph, InstanceFamily, NodeId, NodeSet, TopologySchedule, TransientTopology};

use super::rng::{RandomStream, StreamTag};

/// Graph in effect at step `k` over the active set `active`.
///
/// Before `k_prime` the transient rule applies; afterwards one instance of
/// `family` is drawn with its probability. Edges touching inactive nodes are
/// dropped. Returns the graph and the drawn instance index, if any.
pub fn draw_topology(
    schedule: &TopologySchedule,
    family: Option<&InstanceFamily>,
    active: &NodeSet,
    k: usize,
    k_prime: usize,
    seed: u64,
) -> (Digraph, Option<usize>) {
    let mut rng = RandomStream::derive(seed, StreamTag::Topology, 0, k as u64);
    if k >= k_prime {
        if let Some(family) = family {
            let theta = family.select(rng.unit());
            return (restrict_to(&family.instances()[theta], active), Some(theta));
        }
        return (Digraph::empty(active.clone()), None);
    }
    let g = match &schedule.transient {
        TransientTopology::Explicit { .. } => {
            let edges = schedule.transient.explicit_edges(k).unwrap_or(&[]);
            filtered(active, edges.iter().copied())
        }
        TransientTopology::RandomMinOutDegree { min_out_degree } => {
            random_out_degree(active, *min_out_degree, &mut rng)
        }
    };
    (g, None)
}

fn filtered<I: IntoIterator<Item = (NodeId, NodeId)>>(active: &NodeSet, edges: I) -> Digraph {
    let edges = edges.into_iter().filter(|(a, b)| active.contains(a) && active.contains(b));
    Digraph::new(active.clone(), edges).expect("edges filtered to the active set")
}

fn restrict_to(g: &Digraph, active: &NodeSet) -> Digraph {
    if g.nodes() == active {
        return g.clone();
    }
    filtered(active, g.edges().iter().copied())
}

/// Every node gets `min(degree, n - 1)` distinct out-neighbors among the
/// other nodes.
pub fn random_out_degree(nodes: &NodeSet, degree: usize, rng: &mut RandomStream) -> Digraph {
    let list: Vec<NodeId> = nodes.iter().copied().collect();
    let n = list.len();
    let mut g = Digraph::empty(nodes.clone());
    if n < 2 {
        return g;
    }
    let d = degree.min(n - 1);
    for (i, &v) in list.iter().enumerate() {
        for j in rng.distinct(n - 1, d) {
            // Skip over `v` itself.
            let u = list[if j >= i { j + 1 } else { j }];
            g.insert_edge(v, u).expect("distinct endpoints in node set");
        }
    }
    g
}

/// `t` instances over `nodes`: a random Hamiltonian cycle cut into `t`
/// contiguous arcs, one arc per instance, plus `extra_out_degree` random
/// out-edges per node in every instance.
pub fn generate_family(nodes: &NodeSet, t: usize, extra_out_degree: usize, seed: u64) -> InstanceFamily {
    let mut rng = RandomStream::derive(seed, StreamTag::Family, 0, 0);
    let mut order: Vec<NodeId> = nodes.iter().copied().collect();
    rng.shuffle(&mut order);
    let n = order.len();
    let mut instances: Vec<Digraph> =
        (0..t).map(|_| random_out_degree(nodes, extra_out_degree, &mut rng)).collect();
    if n >= 2 {
        for i in 0..n {
            let (a, b) = (order[i], order[(i + 1) % n]);
            instances[i * t / n].insert_edge(a, b).expect("cycle edge inside node set");
        }
    }
    InstanceFamily::new(instances, vec![1.0 / t as f64; t]).expect("uniform family is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{node_set, union_digraph, EdgeSegment, StableTopology};

    #[test]
    fn min_out_degree_holds() {
        let nodes = node_set(0..30);
        let mut rng = RandomStream::derive(3, StreamTag::Topology, 0, 0);
        let g = random_out_degree(&nodes, 4, &mut rng);
        for &v in &nodes {
            assert_eq!(g.out_neighbors(v).unwrap().len(), 4);
        }
        let small = node_set([1, 2]);
        let g = random_out_degree(&small, 5, &mut rng);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn generated_family_union_is_strongly_connected() {
        for n in [1u32, 2, 3, 7, 25, 100] {
            for seed in 0..5 {
                let nodes = node_set(0..n);
                let fam = generate_family(&nodes, 20, 0, seed);
                assert_eq!(fam.instances().len(), 20);
                let union = union_digraph(fam.instances()).unwrap();
                assert!(union.is_strongly_connected(), "n={n} seed={seed}");
                if n > 3 {
                    assert!(fam.instances().iter().all(|g| !g.is_strongly_connected()));
                }
            }
        }
    }

    #[test]
    fn explicit_transient_is_restricted() {
        let schedule = TopologySchedule {
            transient: TransientTopology::Explicit {
                segments: vec![EdgeSegment {
                    first_step: 0,
                    last_step: 3,
                    edges: vec![(NodeId(0), NodeId(1)), (NodeId(1), NodeId(2))],
                }],
            },
            stable: StableTopology::Generated { extra_out_degree: 0 },
        };
        let (g, theta) = draw_topology(&schedule, None, &node_set([0, 1]), 2, 5, 0);
        assert_eq!(theta, None);
        assert_eq!(g, Digraph::from_pairs(&[0, 1], &[(0, 1)]).unwrap());
        let (g, _) = draw_topology(&schedule, None, &node_set([0, 1, 2]), 4, 5, 0);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn single_instance_always_drawn() {
        let nodes = node_set([0, 1]);
        let only = Digraph::from_pairs(&[0, 1], &[(0, 1), (1, 0)]).unwrap();
        let fam = InstanceFamily::new(vec![only.clone()], vec![1.0]).unwrap();
        let schedule = TopologySchedule {
            transient: TransientTopology::default(),
            stable: StableTopology::Generated { extra_out_degree: 0 },
        };
        for k in 0..50 {
            let (g, theta) = draw_topology(&schedule, Some(&fam), &nodes, k, 0, 9);
            assert_eq!(theta, Some(0));
            assert_eq!(g, only);
        }
    }
}
