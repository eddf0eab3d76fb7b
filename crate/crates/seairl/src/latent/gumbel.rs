//! Gumbel-softmax sampling of categorical codes with a differentiable
//! relaxed path, plus the straight-through hard variant.

use rand::Rng;

use super::SubTaskCode;
use crate::nn::heads::softmax;
use crate::{Error, Result};

/// One relaxed categorical draw. `code` is what downstream consumers see
/// (one-hot when `hard`); gradients always flow through the relaxed
/// probabilities via [`GumbelSample::backward_to_logits`].
#[derive(Debug, Clone)]
pub struct GumbelSample {
    pub code: SubTaskCode,
    relaxed: Vec<f64>,
    temperature: f64,
}

impl GumbelSample {
    /// d(loss)/d(logits) given d(loss)/d(code). The hard sample is treated
    /// as `relaxed + constant` (straight-through).
    pub fn backward_to_logits(&self, upstream: &[f64]) -> Vec<f64> {
        let y = &self.relaxed;
        let dot: f64 = upstream.iter().zip(y).map(|(u, yi)| u * yi).sum();
        y.iter()
            .zip(upstream)
            .map(|(yi, u)| yi * (u - dot) / self.temperature)
            .collect()
    }

    pub fn relaxed(&self) -> &[f64] {
        &self.relaxed
    }
}

/// Draw standard Gumbel noise `-log(-log(u))`.
pub fn sample_gumbel_noise<R: Rng>(k: usize, rng: &mut R) -> Vec<f64> {
    (0..k)
        .map(|_| {
            let u: f64 = rng.random();
            // u in [0, 1); nudge zero away to keep the double log finite
            -(-(u.max(1e-300)).ln()).ln()
        })
        .collect()
}

/// Deterministic Gumbel-softmax given pre-drawn noise; the seam that lets
/// gradient checks freeze the randomness.
pub fn gumbel_softmax_with_noise(
    logits: &[f64],
    temperature: f64,
    hard: bool,
    noise: &[f64],
) -> Result<GumbelSample> {
    if temperature <= 0.0 || !temperature.is_finite() {
        return Err(Error::config(format!(
            "gumbel-softmax temperature must be positive, got {temperature}"
        )));
    }
    if logits.iter().any(|l| !l.is_finite()) {
        return Err(Error::numeric("non-finite logits in gumbel-softmax"));
    }
    let v: Vec<f64> = logits
        .iter()
        .zip(noise)
        .map(|(l, g)| (l + g) / temperature)
        .collect();
    let relaxed = softmax(&v);
    let code = if hard {
        let mut arg = 0;
        for (i, &p) in relaxed.iter().enumerate() {
            if p > relaxed[arg] {
                arg = i;
            }
        }
        SubTaskCode::one_hot(arg, relaxed.len())
    } else {
        SubTaskCode::new(relaxed.clone())?
    };
    Ok(GumbelSample { code, relaxed, temperature })
}

/// Relaxed (or straight-through hard) categorical sample.
pub fn gumbel_softmax_sample<R: Rng>(
    logits: &[f64],
    temperature: f64,
    hard: bool,
    rng: &mut R,
) -> Result<GumbelSample> {
    let noise = sample_gumbel_noise(logits.len(), rng);
    gumbel_softmax_with_noise(logits, temperature, hard, &noise)
}
