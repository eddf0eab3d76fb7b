//! Distribution heads: categorical and diagonal-Gaussian sampling,
//! log-densities, entropies, and their gradients with respect to the
//! network outputs that parameterize them.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub const LN_2PI: f64 = 1.8378770664093453;

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.iter().map(|e| e / z).collect()
}

/// Numerically stable log-softmax.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logits.iter().map(|&l| (l - m).exp()).sum();
    let lz = m + z.ln();
    logits.iter().map(|&l| l - lz).collect()
}

/// log(sum(exp(x))) with max-shift stabilization. Tolerates -inf entries.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let s: f64 = xs.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

/// log(sigmoid(z)) without overflow for large |z|.
pub fn log_sigmoid(z: f64) -> f64 {
    -softplus(-z)
}

/// log(1 + e^z), stable in both tails.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Draw an index from the categorical distribution over `softmax(logits)`,
/// returning the index and its exact log-probability.
pub fn sample_categorical<R: Rng>(logits: &[f64], rng: &mut R) -> (usize, f64) {
    let p = softmax(logits);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut idx = p.len() - 1;
    for (i, pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            idx = i;
            break;
        }
    }
    (idx, log_softmax(logits)[idx])
}

/// Exact log-probability of index `a` under `softmax(logits)`.
pub fn categorical_log_prob(logits: &[f64], a: usize) -> f64 {
    log_softmax(logits)[a]
}

/// d log p(a) / d logits = onehot(a) - softmax(logits).
pub fn categorical_log_prob_grad(logits: &[f64], a: usize) -> Vec<f64> {
    let p = softmax(logits);
    let mut g: Vec<f64> = p.iter().map(|pi| -pi).collect();
    g[a] += 1.0;
    g
}

/// Entropy of `softmax(logits)` in nats.
pub fn categorical_entropy(logits: &[f64]) -> f64 {
    let lp = log_softmax(logits);
    -lp.iter().map(|&l| l.exp() * l).sum::<f64>()
}

/// d H / d logits_k = -p_k (log p_k + H).
pub fn categorical_entropy_grad(logits: &[f64]) -> Vec<f64> {
    let lp = log_softmax(logits);
    let h = -lp.iter().map(|&l| l.exp() * l).sum::<f64>();
    lp.iter().map(|&l| -l.exp() * (l + h)).collect()
}

/// Reparameterized draw from N(mean, diag(exp(log_std)^2)): the noise is a
/// standard normal vector, so the sample is `mean + std * eps` and
/// gradients flow to both halves. Returns `(sample, log_prob)`.
pub fn sample_gaussian<R: Rng>(mean: &[f64], log_std: &[f64], rng: &mut R) -> (Vec<f64>, f64) {
    let x: Vec<f64> = mean
        .iter()
        .zip(log_std)
        .map(|(&m, &ls)| {
            let eps: f64 = StandardNormal.sample(rng);
            m + ls.exp() * eps
        })
        .collect();
    let lp = gaussian_log_prob(mean, log_std, &x);
    (x, lp)
}

/// Exact diagonal-Gaussian log-density.
pub fn gaussian_log_prob(mean: &[f64], log_std: &[f64], x: &[f64]) -> f64 {
    let mut lp = 0.0;
    for i in 0..mean.len() {
        let z = (x[i] - mean[i]) / log_std[i].exp();
        lp += -log_std[i] - 0.5 * LN_2PI - 0.5 * z * z;
    }
    lp
}

/// Gradients of the log-density with respect to mean and log-std.
pub fn gaussian_log_prob_grads(
    mean: &[f64],
    log_std: &[f64],
    x: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let mut d_mean = Vec::with_capacity(mean.len());
    let mut d_log_std = Vec::with_capacity(mean.len());
    for i in 0..mean.len() {
        let s = log_std[i].exp();
        let z = (x[i] - mean[i]) / s;
        d_mean.push(z / s);
        d_log_std.push(z * z - 1.0);
    }
    (d_mean, d_log_std)
}

/// Entropy of a diagonal Gaussian: sum of log_std + 0.5 ln(2 pi e) per dim.
pub fn gaussian_entropy(log_std: &[f64]) -> f64 {
    log_std.iter().map(|ls| ls + 0.5 * (LN_2PI + 1.0)).sum()
}

/// Exact KL(softmax(logits) || uniform over K) = log K - H(p). Always >= 0
/// and zero iff the softmax is uniform.
pub fn kl_to_uniform(logits: &[f64]) -> f64 {
    let k = logits.len() as f64;
    (k.ln() - categorical_entropy(logits)).max(0.0)
}

/// d KL(p || uniform) / d logits = -dH/dlogits.
pub fn kl_to_uniform_grad(logits: &[f64]) -> Vec<f64> {
    categorical_entropy_grad(logits)
        .into_iter()
        .map(|g| -g)
        .collect()
}
