//! Exact tabular machinery: finite MDPs small enough to enumerate, the
//! closed-form mutual information, the variational bound, the softmax
//! solution of the Lagrange dual, EM, and value iteration.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::nn::heads::log_sum_exp;
use crate::{Error, Result};

/// Explicit finite MDP with a (possibly code-conditioned) transition
/// tensor `p[c][s][a] -> distribution over s'`.
#[derive(Debug, Clone)]
pub struct TabularMdp {
    pub n_states: usize,
    pub n_actions: usize,
    pub n_codes: usize,
    p: Vec<Vec<Vec<Vec<f64>>>>,
}

impl TabularMdp {
    pub fn new(p: Vec<Vec<Vec<Vec<f64>>>>) -> Result<Self> {
        if p.is_empty() || p[0].is_empty() || p[0][0].is_empty() {
            return Err(Error::config("empty transition tensor"));
        }
        let (n_codes, n_states, n_actions) = (p.len(), p[0].len(), p[0][0].len());
        if n_states * n_actions > 10_000 {
            return Err(Error::config("tabular MDP too large for dense enumeration"));
        }
        for code in &p {
            if code.len() != n_states {
                return Err(Error::config("ragged transition tensor"));
            }
            for row in code {
                if row.len() != n_actions {
                    return Err(Error::config("ragged transition tensor"));
                }
                for dist in row {
                    if dist.len() != n_states {
                        return Err(Error::config("next-state distribution has wrong support"));
                    }
                    check_simplex(dist)?;
                }
            }
        }
        Ok(TabularMdp { n_states, n_actions, n_codes, p })
    }

    pub fn transition(&self, c: usize, s: usize, a: usize) -> &[f64] {
        &self.p[c][s][a]
    }

    /// Random stochastic MDP: every next-state distribution is an
    /// independent random simplex point.
    pub fn random(
        n_states: usize,
        n_actions: usize,
        n_codes: usize,
        rng: &mut ChaCha8Rng,
    ) -> TabularMdp {
        let p = (0..n_codes)
            .map(|_| {
                (0..n_states)
                    .map(|_| (0..n_actions).map(|_| random_simplex(n_states, rng)).collect())
                    .collect()
            })
            .collect();
        TabularMdp::new(p).expect("random construction is valid")
    }

    /// Deterministic bijective channel: action `a` from state `s` reaches
    /// state `(s + a) mod n`, so distinct actions reach distinct states.
    pub fn bijective(n: usize, n_codes: usize) -> TabularMdp {
        let p = (0..n_codes)
            .map(|_| {
                (0..n)
                    .map(|s| {
                        (0..n)
                            .map(|a| {
                                let mut d = vec![0.0; n];
                                d[(s + a) % n] = 1.0;
                                d
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        TabularMdp::new(p).unwrap()
    }

    /// Every action leads to state 0: the channel carries no information.
    pub fn uninformative(n_states: usize, n_actions: usize, n_codes: usize) -> TabularMdp {
        let mut d = vec![0.0; n_states];
        d[0] = 1.0;
        let p = vec![vec![vec![d; n_actions]; n_states]; n_codes];
        TabularMdp::new(p).unwrap()
    }
}

pub(crate) fn check_simplex(w: &[f64]) -> Result<()> {
    if w.iter().any(|&x| !x.is_finite() || x < 0.0) {
        return Err(Error::config("distribution entries must be finite and >= 0"));
    }
    let sum: f64 = w.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::config(format!("distribution sums to {sum}")));
    }
    Ok(())
}

pub(crate) fn random_simplex(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    // exponential draws normalized: uniform on the simplex
    let raw: Vec<f64> = (0..n).map(|_| -(rng.random::<f64>().max(1e-300)).ln()).collect();
    let z: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / z).collect()
}

fn entropy(w: &[f64]) -> f64 {
    -w.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>()
}

/// Exact `I(a; s' | s, c) = H(a|s,c) - H(a|s,c,s')` in nats for action
/// distribution `w` at `(s, c)`, by dense double summation with the
/// Bayes-inverted action posterior.
pub fn exact_situational_mi(mdp: &TabularMdp, w: &[f64], s: usize, c: usize) -> Result<f64> {
    if w.len() != mdp.n_actions {
        return Err(Error::config("action distribution width mismatch"));
    }
    check_simplex(w)?;
    let h_a = entropy(w);

    // p(s') and the joint p(a, s')
    let mut p_next = vec![0.0; mdp.n_states];
    for a in 0..mdp.n_actions {
        let pa = mdp.transition(c, s, a);
        for s2 in 0..mdp.n_states {
            p_next[s2] += w[a] * pa[s2];
        }
    }
    let mut h_a_given = 0.0;
    for s2 in 0..mdp.n_states {
        if p_next[s2] <= 0.0 {
            continue;
        }
        for a in 0..mdp.n_actions {
            let joint = w[a] * mdp.transition(c, s, a)[s2];
            if joint > 0.0 {
                h_a_given -= joint * (joint / p_next[s2]).ln();
            }
        }
    }
    Ok((h_a - h_a_given).max(0.0))
}

/// Exact variational bound `L_I(w, Omega) = H(w) + E_{w,P}[ln Omega]`
/// where `omega[s'][a]` is the variational action posterior at `(s, c)`.
/// May be -inf when `omega` puts zero mass on a reachable action.
pub fn variational_bound_exact(
    mdp: &TabularMdp,
    w: &[f64],
    omega: &[Vec<f64>],
    s: usize,
    c: usize,
) -> Result<f64> {
    check_simplex(w)?;
    if omega.len() != mdp.n_states || omega.iter().any(|row| row.len() != mdp.n_actions) {
        return Err(Error::config("omega table must be n_states x n_actions"));
    }
    let mut expected = 0.0;
    for a in 0..mdp.n_actions {
        if w[a] <= 0.0 {
            continue;
        }
        let pa = mdp.transition(c, s, a);
        for s2 in 0..mdp.n_states {
            if pa[s2] <= 0.0 {
                continue;
            }
            expected += w[a] * pa[s2] * omega[s2][a].ln();
        }
    }
    Ok(entropy(w) + expected)
}

/// Unbiased sampled estimate of the same bound: `H(w)` is exact, the
/// expectation over `(a, s')` is Monte Carlo.
pub fn variational_bound_sampled(
    mdp: &TabularMdp,
    w: &[f64],
    omega: &[Vec<f64>],
    s: usize,
    c: usize,
    n_samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    check_simplex(w)?;
    if n_samples == 0 {
        return Err(Error::config("need at least one sample"));
    }
    let mut acc = 0.0;
    for _ in 0..n_samples {
        let a = sample_index(w, rng);
        let s2 = sample_index(mdp.transition(c, s, a), rng);
        acc += omega[s2][a].ln();
    }
    Ok(entropy(w) + acc / n_samples as f64)
}

fn sample_index(dist: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in dist.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    dist.len() - 1
}

/// Closed-form maximizer of the bound in `w` for fixed expected
/// log-inverse values `v(a) = E_P[ln Omega(a | s, c, s')]`:
/// `w*(a) = softmax(beta * v)(a)`, with `log Z = logsumexp(beta * v)`.
/// The potential is `log Z`.
pub fn analytic_w_star(expected_log_omega: &[f64], beta: f64) -> (Vec<f64>, f64) {
    let u: Vec<f64> = expected_log_omega.iter().map(|&v| beta * v).collect();
    let log_z = log_sum_exp(&u);
    let w = u.iter().map(|&x| (x - log_z).exp()).collect();
    (w, log_z)
}

#[derive(Debug, Clone, Copy)]
pub struct EmConfig {
    pub beta: f64,
    pub iters: usize,
    pub tol: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig { beta: 1.0, iters: 50, tol: 1e-10 }
    }
}

#[derive(Debug, Clone)]
pub struct EmOutcome {
    pub w: Vec<f64>,
    pub omega: Vec<Vec<f64>>,
    /// `log Z` of the final solution: the situational potential.
    pub potential: f64,
    pub bound_trace: Vec<f64>,
    pub converged: bool,
}

/// Alternate exact Bayes posterior updates (M-step) with the analytic
/// softmax solution (E-step). With `beta = 1` both steps are exact
/// coordinate ascent on the bound, so the trace is non-decreasing.
pub fn em_optimize(mdp: &TabularMdp, s: usize, c: usize, cfg: &EmConfig) -> Result<EmOutcome> {
    if !(cfg.beta.is_finite() && cfg.beta >= 0.0) {
        return Err(Error::config("beta must be finite and non-negative"));
    }
    let na = mdp.n_actions;
    let mut w = vec![1.0 / na as f64; na];
    let mut omega = vec![vec![1.0 / na as f64; na]; mdp.n_states];
    let mut trace = Vec::new();
    let mut log_z = (na as f64).ln();
    let mut converged = false;

    for _ in 0..cfg.iters {
        // M-step: omega <- Bayes posterior of w
        for s2 in 0..mdp.n_states {
            let mut row = vec![0.0; na];
            let mut norm = 0.0;
            for a in 0..na {
                row[a] = w[a] * mdp.transition(c, s, a)[s2];
                norm += row[a];
            }
            omega[s2] = if norm > 0.0 {
                row.into_iter().map(|x| x / norm).collect()
            } else {
                vec![1.0 / na as f64; na]
            };
        }
        // E-step: w <- softmax(beta * v)
        let mut v = vec![0.0; na];
        for a in 0..na {
            let pa = mdp.transition(c, s, a);
            let mut acc = 0.0;
            for s2 in 0..mdp.n_states {
                if pa[s2] > 0.0 {
                    acc += pa[s2]
                        * if omega[s2][a] > 0.0 {
                            omega[s2][a].ln()
                        } else {
                            f64::NEG_INFINITY
                        };
                }
            }
            v[a] = acc;
        }
        let (w_new, lz) = analytic_w_star(&v, cfg.beta);
        w = w_new;
        log_z = lz;

        let mut bound = entropy(&w);
        for a in 0..na {
            if w[a] > 0.0 {
                bound += w[a] * v[a];
            }
        }
        let done = trace
            .last()
            .map(|prev: &f64| (bound - prev).abs() < cfg.tol)
            .unwrap_or(false);
        trace.push(bound);
        if done {
            converged = true;
            break;
        }
    }
    Ok(EmOutcome { w, omega, potential: log_z, bound_trace: trace, converged })
}

/// Discounted value iteration with deterministic lowest-index tie
/// breaking; returns `(V, greedy policy)`.
pub fn value_iteration(
    mdp: &TabularMdp,
    rewards: &[Vec<f64>],
    c: usize,
    gamma: f64,
    tol: f64,
    max_iters: usize,
) -> Result<(Vec<f64>, Vec<usize>)> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::config("value iteration needs gamma in [0, 1)"));
    }
    if rewards.len() != mdp.n_states || rewards.iter().any(|r| r.len() != mdp.n_actions) {
        return Err(Error::config("reward table must be n_states x n_actions"));
    }
    let mut v = vec![0.0; mdp.n_states];
    for _ in 0..max_iters {
        let mut next = vec![0.0; mdp.n_states];
        let mut delta: f64 = 0.0;
        for s in 0..mdp.n_states {
            let mut best = f64::NEG_INFINITY;
            for a in 0..mdp.n_actions {
                let q: f64 = rewards[s][a]
                    + gamma
                        * mdp
                            .transition(c, s, a)
                            .iter()
                            .zip(&v)
                            .map(|(p, vs)| p * vs)
                            .sum::<f64>();
                if q > best {
                    best = q;
                }
            }
            next[s] = best;
            delta = delta.max((next[s] - v[s]).abs());
        }
        v = next;
        if delta < tol {
            break;
        }
    }
    let mut policy = vec![0usize; mdp.n_states];
    for s in 0..mdp.n_states {
        let mut best = 0;
        let mut best_q = f64::NEG_INFINITY;
        for a in 0..mdp.n_actions {
            let q: f64 = rewards[s][a]
                + gamma
                    * mdp
                        .transition(c, s, a)
                        .iter()
                        .zip(&v)
                        .map(|(p, vs)| p * vs)
                        .sum::<f64>();
            if q > best_q {
                best_q = q;
                best = a;
            }
        }
        policy[s] = best;
    }
    Ok((v, policy))
}
