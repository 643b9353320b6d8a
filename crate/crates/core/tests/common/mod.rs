#![allow(dead_code)]

use std::path::PathBuf;

use oqac::engine::Scenario;

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

pub fn load(name: &str) -> Scenario {
    Scenario::load(scenario_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// All-pairs reachability by transitive closure; independent of the SCC path.
pub fn brute_force_strongly_connected(n: usize, adj: &[Vec<bool>]) -> bool {
    if n == 0 {
        return false;
    }
    let mut reach = adj.to_vec();
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
    }
    for m in 0..n {
        for i in 0..n {
            if reach[i][m] {
                let via = reach[m].clone();
                for (cell, hop) in reach[i].iter_mut().zip(via) {
                    *cell |= hop;
                }
            }
        }
    }
    reach.iter().all(|row| row.iter().all(|&b| b))
}
