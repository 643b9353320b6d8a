use std::io::Write;

use crate::engine::RoundRecord;
use crate::network::NodeId;
use crate::scalar::Mass;

/// Fixed leading columns of a trace CSV; per-node `q_s_<id>` columns follow
/// for every id in `[0, n_total)`.
pub const TRACE_COLUMNS: [&str; 7] =
    ["step", "n_active", "q_num", "q_den", "epsilon", "excluded_nodes", "violations"];

pub fn trace_header(n_total: u32) -> Vec<String> {
    TRACE_COLUMNS.iter().map(|s| s.to_string()).chain((0..n_total).map(|v| format!("q_s_{v}"))).collect()
}

pub fn write_trace<T: Mass, W: Write>(records: &[RoundRecord<T>], n_total: u32, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trace_header(n_total))?;
    for r in records {
        let (num, den) = match &r.q_true {
            Some(q) => (q.numer().to_string(), q.denom().to_string()),
            None => (String::new(), String::new()),
        };
        let mut row = vec![
            r.step.to_string(),
            r.active.len().to_string(),
            num,
            den,
            r.epsilon.to_string(),
            r.excluded.to_string(),
            r.violations.len().to_string(),
        ];
        row.extend(
            (0..n_total).map(|v| r.per_node.get(&NodeId(v)).map(|s| s.q_s.to_string()).unwrap_or_default()),
        );
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub const SUMMARY_COLUMNS: [&str; 9] = [
    "seed",
    "converged",
    "k0",
    "band_settled",
    "band_k0",
    "final_epsilon",
    "max_abs_y_imbalance",
    "max_abs_z_imbalance",
    "violations",
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SummaryRow {
    pub seed: u64,
    pub converged: bool,
    pub k0: Option<usize>,
    pub band_settled: bool,
    pub band_k0: Option<usize>,
    pub final_epsilon: String,
    pub max_abs_y_imbalance: String,
    pub max_abs_z_imbalance: String,
    pub violations: usize,
}

pub fn write_summary<W: Write>(rows: &[SummaryRow], out: W) -> csv::Result<()> {
    let opt = |v: Option<usize>| v.map_or_else(|| "none".to_string(), |k| k.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.seed.to_string(),
            r.converged.to_string(),
            opt(r.k0),
            r.band_settled.to_string(),
            opt(r.band_k0),
            r.final_epsilon.clone(),
            r.max_abs_y_imbalance.clone(),
            r.max_abs_z_imbalance.clone(),
            r.violations.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
