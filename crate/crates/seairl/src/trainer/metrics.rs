//! Per-iteration metrics and the CSV schema.
//!
//! Column order is fixed per schema version; the per-code column count
//! follows the run's K. `wall_ms` is a measurement, not part of the
//! reproducible surface — determinism checks compare every other column.

use std::fmt::Write as _;

#[derive(Debug, Clone)]
pub struct IterationMetrics {
    pub iteration: usize,
    pub wall_ms: f64,
    pub loss_lq: f64,
    pub loss_li: f64,
    pub loss_disc: f64,
    pub mean_f: f64,
    pub mean_rhat: f64,
    pub mean_entropy: f64,
    pub kl_old_new: f64,
    pub kl_warning: bool,
    /// Latest evaluation success rate (carried forward between evals).
    pub eval_success: f64,
    pub rhat_mean_per_code: Vec<f64>,
    pub rhat_std_per_code: Vec<f64>,
    pub raw_r_std_per_code: Vec<f64>,
    pub hindsight_return: f64,
    pub hindsight_kl: f64,
    pub hindsight_logz_per_code: Vec<f64>,
}

pub const METRICS_SCHEMA_VERSION: &str = "v1";

pub fn csv_header(k: usize) -> String {
    let mut cols = vec![
        "iteration".to_string(),
        "wall_ms".to_string(),
        "loss_lq".to_string(),
        "loss_li".to_string(),
        "loss_disc".to_string(),
        "mean_f".to_string(),
        "mean_rhat".to_string(),
        "mean_entropy".to_string(),
        "kl_old_new".to_string(),
        "kl_warning".to_string(),
        "eval_success".to_string(),
    ];
    for c in 0..k {
        cols.push(format!("rhat_mean_c{c}"));
    }
    for c in 0..k {
        cols.push(format!("rhat_std_c{c}"));
    }
    for c in 0..k {
        cols.push(format!("r_raw_std_c{c}"));
    }
    cols.push("hindsight_return".to_string());
    cols.push("hindsight_kl".to_string());
    for c in 0..k {
        cols.push(format!("hindsight_logz_c{c}"));
    }
    cols.join(",")
}

pub fn csv_row(m: &IterationMetrics) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "{},{},{},{},{},{},{},{},{},{},{}",
        m.iteration,
        m.wall_ms,
        m.loss_lq,
        m.loss_li,
        m.loss_disc,
        m.mean_f,
        m.mean_rhat,
        m.mean_entropy,
        m.kl_old_new,
        m.kl_warning as u8,
        m.eval_success
    );
    for v in m
        .rhat_mean_per_code
        .iter()
        .chain(&m.rhat_std_per_code)
        .chain(&m.raw_r_std_per_code)
    {
        let _ = write!(s, ",{v}");
    }
    let _ = write!(s, ",{},{}", m.hindsight_return, m.hindsight_kl);
    for v in &m.hindsight_logz_per_code {
        let _ = write!(s, ",{v}");
    }
    s
}

pub fn metrics_to_csv(k: usize, rows: &[IterationMetrics]) -> String {
    let mut out = csv_header(k);
    out.push('\n');
    for row in rows {
        out.push_str(&csv_row(row));
        out.push('\n');
    }
    out
}

/// Mean and standard deviation per code of a per-transition quantity,
/// grouped by the argmax of each transition's code.
pub fn per_code_stats(values: &[f64], codes: &[Vec<f64>], k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut sums = vec![0.0; k];
    let mut sqs = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for (v, code) in values.iter().zip(codes) {
        let mut best = 0;
        for (i, &p) in code.iter().enumerate() {
            if p > code[best] {
                best = i;
            }
        }
        sums[best] += v;
        sqs[best] += v * v;
        counts[best] += 1;
    }
    let mut means = vec![0.0; k];
    let mut stds = vec![0.0; k];
    for c in 0..k {
        if counts[c] > 0 {
            let n = counts[c] as f64;
            means[c] = sums[c] / n;
            stds[c] = (sqs[c] / n - means[c] * means[c]).max(0.0).sqrt();
        }
    }
    (means, stds)
}
