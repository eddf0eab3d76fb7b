//! Run configuration: a flat `key = value` text format with section
//! prefixes (`env.`, `ppo.`, `lambda.`, `em.`, `train.`, `pretrain.`).
//! Unknown keys are rejected by name. Presets select the ablation flag
//! combinations for the four algorithm variants.

use std::fmt::Write as _;

use crate::envs::{EnvKind, EnvSpec};
use crate::{Error, Result};

/// Ablation flags select which machinery runs; the four named presets are
/// points in this space.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub env: EnvSpec,
    pub demos_per_scenario: usize,

    pub seed: u64,
    pub iterations: usize,
    pub steps_per_iter: usize,
    pub sync_interval: usize,
    pub k_codes: usize,
    pub hidden: Vec<usize>,
    pub use_codes: bool,
    pub use_empowerment_reg: bool,
    pub use_shaping: bool,
    pub temperature: f64,
    pub eval_interval: usize,
    pub eval_episodes: usize,
    pub stop_at_success: Option<f64>,

    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip: f64,
    pub ppo_epochs: usize,
    pub minibatch: usize,
    pub lr: f64,

    pub lambda_q: f64,
    pub lambda_i: f64,
    pub lambda_h: f64,
    pub lambda_kl: f64,

    pub beta: f64,
    pub em_iters: usize,
    pub em_mc_samples: usize,

    pub pretrain_epochs: usize,
    pub pretrain_minibatch: usize,
    pub temp_start: f64,
    pub temp_end: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            env: EnvSpec::grid_two_scenario(),
            demos_per_scenario: 50,
            seed: 0,
            iterations: 300,
            steps_per_iter: 2048,
            sync_interval: 5,
            k_codes: 3,
            hidden: vec![64, 64],
            use_codes: true,
            use_empowerment_reg: true,
            use_shaping: true,
            temperature: 0.5,
            eval_interval: 10,
            eval_episodes: 20,
            stop_at_success: None,
            gamma: 0.99,
            gae_lambda: 0.95,
            clip: 0.2,
            ppo_epochs: 4,
            minibatch: 256,
            lr: 3e-4,
            lambda_q: 1.0,
            lambda_i: 1.0,
            lambda_h: 1e-3,
            lambda_kl: 0.1,
            beta: 1.0,
            em_iters: 50,
            em_mc_samples: 64,
            pretrain_epochs: 300,
            pretrain_minibatch: 8,
            temp_start: 1.0,
            temp_end: 0.3,
        }
    }
}

pub const PRESETS: [&str; 4] = ["seairl", "gail", "digail", "eairl"];

impl TrainConfig {
    /// Apply a named ablation preset. The flags pick the algorithm; every
    /// variant shares one code path, with `use_codes = false` meaning a
    /// single constant code.
    pub fn apply_preset(&mut self, name: &str) -> Result<()> {
        match name {
            "seairl" => {
                self.use_codes = true;
                self.use_empowerment_reg = true;
                self.use_shaping = true;
            }
            "digail" => {
                self.use_codes = true;
                self.use_empowerment_reg = false;
                self.use_shaping = false;
            }
            "eairl" => {
                self.use_codes = false;
                self.use_empowerment_reg = true;
                self.use_shaping = true;
                self.lambda_q = 0.0;
            }
            "gail" => {
                self.use_codes = false;
                self.use_empowerment_reg = false;
                self.use_shaping = false;
                self.lambda_q = 0.0;
            }
            other => {
                return Err(Error::config(format!(
                    "unknown preset `{other}` (expected one of {PRESETS:?})"
                )))
            }
        }
        Ok(())
    }

    pub fn preset(name: &str) -> Result<TrainConfig> {
        let mut cfg = TrainConfig::default();
        cfg.apply_preset(name)?;
        Ok(cfg)
    }

    /// Number of codes actually used: 1 when codes are disabled.
    pub fn effective_k(&self) -> usize {
        if self.use_codes {
            self.k_codes
        } else {
            1
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::config("ppo.gamma must lie in (0, 1)"));
        }
        if !(self.clip > 0.0 && self.clip <= 0.5) {
            return Err(Error::config("ppo.clip must lie in (0, 0.5]"));
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return Err(Error::config("ppo.gae_lambda must lie in [0, 1]"));
        }
        for (name, v) in [
            ("lambda.q", self.lambda_q),
            ("lambda.i", self.lambda_i),
            ("lambda.h", self.lambda_h),
            ("lambda.kl", self.lambda_kl),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(format!("{name} must be non-negative")));
            }
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::config("em.beta must be positive"));
        }
        if self.k_codes == 0 || self.k_codes > 6 {
            return Err(Error::config("train.k_codes must lie in 1..=6"));
        }
        if self.minibatch == 0 || self.steps_per_iter == 0 || self.sync_interval == 0 {
            return Err(Error::config("batch sizes and sync interval must be positive"));
        }
        if self.temperature <= 0.0 || self.temp_start <= 0.0 || self.temp_end <= 0.0 {
            return Err(Error::config("gumbel temperatures must be positive"));
        }
        if self.eval_episodes == 0 || self.eval_interval == 0 {
            return Err(Error::config("evaluation cadence must be positive"));
        }
        if let Some(t) = self.stop_at_success {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::config("train.stop_at_success must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let scen = self
            .env
            .scenarios
            .iter()
            .map(|sc| sc.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
            .collect::<Vec<_>>()
            .join(";");
        let detour = self
            .env
            .detour
            .iter()
            .map(|d| (*d as u8).to_string())
            .collect::<Vec<_>>()
            .join(",");
        let _ = writeln!(s, "env.kind = {}", self.env.kind.name());
        let _ = writeln!(s, "env.scenarios = {scen}");
        let _ = writeln!(s, "env.episode_cap = {}", self.env.episode_cap);
        let _ = writeln!(s, "env.detour = {detour}");
        let _ = writeln!(s, "env.demos_per_scenario = {}", self.demos_per_scenario);
        let _ = writeln!(s, "train.seed = {}", self.seed);
        let _ = writeln!(s, "train.iterations = {}", self.iterations);
        let _ = writeln!(s, "train.sync_interval = {}", self.sync_interval);
        let _ = writeln!(s, "train.k_codes = {}", self.k_codes);
        let hidden = self.hidden.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let _ = writeln!(s, "train.hidden = {hidden}");
        let _ = writeln!(s, "train.use_codes = {}", self.use_codes);
        let _ = writeln!(s, "train.use_empowerment_reg = {}", self.use_empowerment_reg);
        let _ = writeln!(s, "train.use_shaping = {}", self.use_shaping);
        let _ = writeln!(s, "train.temperature = {}", self.temperature);
        let _ = writeln!(s, "train.eval_interval = {}", self.eval_interval);
        let _ = writeln!(s, "train.eval_episodes = {}", self.eval_episodes);
        let stop = match self.stop_at_success {
            None => "none".to_string(),
            Some(v) => v.to_string(),
        };
        let _ = writeln!(s, "train.stop_at_success = {stop}");
        let _ = writeln!(s, "ppo.gamma = {}", self.gamma);
        let _ = writeln!(s, "ppo.gae_lambda = {}", self.gae_lambda);
        let _ = writeln!(s, "ppo.clip = {}", self.clip);
        let _ = writeln!(s, "ppo.epochs = {}", self.ppo_epochs);
        let _ = writeln!(s, "ppo.minibatch = {}", self.minibatch);
        let _ = writeln!(s, "ppo.lr = {}", self.lr);
        let _ = writeln!(s, "ppo.steps_per_iter = {}", self.steps_per_iter);
        let _ = writeln!(s, "lambda.q = {}", self.lambda_q);
        let _ = writeln!(s, "lambda.i = {}", self.lambda_i);
        let _ = writeln!(s, "lambda.h = {}", self.lambda_h);
        let _ = writeln!(s, "lambda.kl = {}", self.lambda_kl);
        let _ = writeln!(s, "em.beta = {}", self.beta);
        let _ = writeln!(s, "em.iters = {}", self.em_iters);
        let _ = writeln!(s, "em.mc_samples = {}", self.em_mc_samples);
        let _ = writeln!(s, "pretrain.epochs = {}", self.pretrain_epochs);
        let _ = writeln!(s, "pretrain.minibatch = {}", self.pretrain_minibatch);
        let _ = writeln!(s, "pretrain.temp_start = {}", self.temp_start);
        let _ = writeln!(s, "pretrain.temp_end = {}", self.temp_end);
        s
    }

    /// Parse the flat key=value format. Unknown keys are errors that name
    /// the key; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<TrainConfig> {
        let mut cfg = TrainConfig::default();
        for (lineno0, raw) in text.lines().enumerate() {
            let lineno = lineno0 + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(format!("config line {lineno}: expected `key = value`"))
            })?;
            let key = key.trim();
            let value = value.trim();
            cfg.set(key, value).map_err(|e| match e {
                Error::Config(msg) => Error::config(format!("config line {lineno}: {msg}")),
                other => other,
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse::<T>()
                .map_err(|_| Error::config(format!("bad value `{v}` for key `{key}`")))
        }
        fn flag(key: &str, v: &str) -> Result<bool> {
            match v {
                "true" | "1" => Ok(true),
                "false" | "0" => Ok(false),
                _ => Err(Error::config(format!("bad boolean `{v}` for key `{key}`"))),
            }
        }
        match key {
            "env.kind" => self.env.kind = EnvKind::parse(value)?,
            "env.scenarios" => {
                let scenarios = value
                    .split(';')
                    .map(|sc| {
                        sc.split(',')
                            .map(|x| num::<usize>(key, x.trim()))
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                self.env.detour = vec![false; scenarios.len()];
                self.env.scenarios = scenarios;
            }
            "env.episode_cap" => self.env.episode_cap = num(key, value)?,
            "env.detour" => {
                self.env.detour = value
                    .split(',')
                    .map(|x| flag(key, x.trim()))
                    .collect::<Result<Vec<_>>>()?;
            }
            "env.demos_per_scenario" => self.demos_per_scenario = num(key, value)?,
            "train.seed" => self.seed = num(key, value)?,
            "train.iterations" => self.iterations = num(key, value)?,
            "train.sync_interval" => self.sync_interval = num(key, value)?,
            "train.k_codes" => self.k_codes = num(key, value)?,
            "train.hidden" => {
                self.hidden = value
                    .split(',')
                    .map(|x| num::<usize>(key, x.trim()))
                    .collect::<Result<Vec<_>>>()?;
            }
            "train.use_codes" => self.use_codes = flag(key, value)?,
            "train.use_empowerment_reg" => self.use_empowerment_reg = flag(key, value)?,
            "train.use_shaping" => self.use_shaping = flag(key, value)?,
            "train.temperature" => self.temperature = num(key, value)?,
            "train.eval_interval" => self.eval_interval = num(key, value)?,
            "train.eval_episodes" => self.eval_episodes = num(key, value)?,
            "train.stop_at_success" => {
                self.stop_at_success = if value == "none" {
                    None
                } else {
                    Some(num(key, value)?)
                };
            }
            "ppo.gamma" => self.gamma = num(key, value)?,
            "ppo.gae_lambda" => self.gae_lambda = num(key, value)?,
            "ppo.clip" => self.clip = num(key, value)?,
            "ppo.epochs" => self.ppo_epochs = num(key, value)?,
            "ppo.minibatch" => self.minibatch = num(key, value)?,
            "ppo.lr" => self.lr = num(key, value)?,
            "ppo.steps_per_iter" => self.steps_per_iter = num(key, value)?,
            "lambda.q" => self.lambda_q = num(key, value)?,
            "lambda.i" => self.lambda_i = num(key, value)?,
            "lambda.h" => self.lambda_h = num(key, value)?,
            "lambda.kl" => self.lambda_kl = num(key, value)?,
            "em.beta" => self.beta = num(key, value)?,
            "em.iters" => self.em_iters = num(key, value)?,
            "em.mc_samples" => self.em_mc_samples = num(key, value)?,
            "pretrain.epochs" => self.pretrain_epochs = num(key, value)?,
            "pretrain.minibatch" => self.pretrain_minibatch = num(key, value)?,
            "pretrain.temp_start" => self.temp_start = num(key, value)?,
            "pretrain.temp_end" => self.temp_end = num(key, value)?,
            other => return Err(Error::config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_text() {
        let mut cfg = TrainConfig::default();
        cfg.seed = 42;
        cfg.stop_at_success = Some(0.8);
        cfg.env = EnvSpec::grid_two_scenario().with_detour(1);
        let text = cfg.to_text();
        let back = TrainConfig::parse(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = TrainConfig::parse("train.bogus = 3\n").unwrap_err();
        match err {
            Error::Config(msg) => assert!(msg.contains("train.bogus"), "{msg}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn presets_set_flags() {
        let seairl = TrainConfig::preset("seairl").unwrap();
        assert!(seairl.use_codes && seairl.use_empowerment_reg && seairl.use_shaping);
        let gail = TrainConfig::preset("gail").unwrap();
        assert!(!gail.use_codes && !gail.use_empowerment_reg && !gail.use_shaping);
        assert_eq!(gail.lambda_q, 0.0);
        assert_eq!(gail.effective_k(), 1);
        let eairl = TrainConfig::preset("eairl").unwrap();
        assert!(!eairl.use_codes && eairl.use_empowerment_reg && eairl.use_shaping);
        assert!(TrainConfig::preset("nope").is_err());
    }

    #[test]
    fn validation_catches_bad_ranges() {
        let mut cfg = TrainConfig::default();
        cfg.gamma = 1.5;
        assert!(cfg.validate().is_err());
        cfg.gamma = 0.99;
        cfg.clip = 0.9;
        assert!(cfg.validate().is_err());
    }
}
