//! Monte-Carlo diagnostic of the hindsight multi-task objective: the soft
//! return term, the KL of the relabeling posterior to the uniform prior,
//! and a per-code normalizer proxy (the exact partition function is
//! intractable; the per-code mean of the shaped reward stands in).

use crate::latent::posterior_logits;
use crate::nn::heads::kl_to_uniform;
use crate::nn::Network;
use crate::trainer::run::FlatBatch;
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct HindsightRecord {
    /// Mean over episodes of `sum_t (r_hat_t - log pi_t)`.
    pub return_term: f64,
    /// Mean over transitions of `KL(Q(.|c_prev, s, a_prev) || uniform)`.
    pub kl_term: f64,
    /// Per-code mean of the shaped reward `f`, the `log Z(c)` stand-in.
    pub logz_proxy: Vec<f64>,
}

pub fn hindsight_objective_estimate(
    batch: &FlatBatch,
    rhat: &[f64],
    f_values: &[f64],
    posterior: &Network,
    k: usize,
) -> Result<HindsightRecord> {
    let mut return_term = 0.0;
    for span in &batch.episodes {
        let mut acc = 0.0;
        for i in span.clone() {
            acc += rhat[i] - batch.log_pi[i];
        }
        return_term += acc;
    }
    return_term /= batch.episodes.len() as f64;

    let mut kl_term = 0.0;
    let mut code_sum = vec![0.0; k];
    let mut code_n = vec![0usize; k];
    for i in 0..batch.len() {
        let logits = posterior_logits(
            posterior,
            &batch.prev_codes[i],
            &batch.states[i],
            &batch.prev_action_encs[i],
        )?;
        kl_term += kl_to_uniform(&logits);
        let code = argmax(&batch.codes[i]);
        code_sum[code] += f_values[i];
        code_n[code] += 1;
    }
    kl_term /= batch.len() as f64;

    let logz_proxy = code_sum
        .iter()
        .zip(&code_n)
        .map(|(s, &n)| if n > 0 { s / n as f64 } else { 0.0 })
        .collect();
    Ok(HindsightRecord { return_term, kl_term, logz_proxy })
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}
