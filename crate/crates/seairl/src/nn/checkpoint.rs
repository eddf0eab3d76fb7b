//! Versioned text checkpoints.
//!
//! A checkpoint maps network names to `(spec, parameters)`. Values are
//! written in shortest round-trip decimal, so save -> load is value-exact.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{Activation, MlpSpec, Network, OutputHead, Params};
use crate::{Error, Result};

const MAGIC: &str = "seairl-checkpoint v1";

/// Named network parameters, ordered by name for stable output.
#[derive(Debug, Clone, Default)]
pub struct Checkpoint {
    entries: BTreeMap<String, Network>,
}

impl Checkpoint {
    pub fn new() -> Self {
        Checkpoint::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, network: Network) {
        self.entries.insert(name.into(), network);
    }

    pub fn get(&self, name: &str) -> Result<&Network> {
        self.entries
            .get(name)
            .ok_or_else(|| Error::format(format!("checkpoint has no network `{name}`")))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(MAGIC);
        out.push('\n');
        for (name, net) in &self.entries {
            let widths: Vec<String> = net.spec.widths().iter().map(|w| w.to_string()).collect();
            let _ = writeln!(
                out,
                "network {name} widths={} activation={} head={} params={}",
                widths.join(","),
                net.spec.activation().name(),
                net.spec.head().name(),
                net.params.len()
            );
            for v in net.params.values() {
                let _ = writeln!(out, "{v}");
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Checkpoint> {
        let mut lines = text.lines();
        match lines.next() {
            Some(l) if l == MAGIC => {}
            other => {
                return Err(Error::format(format!(
                    "bad checkpoint magic: {:?}",
                    other.unwrap_or("<empty>")
                )))
            }
        }
        let mut ck = Checkpoint::new();
        let mut lines = lines.peekable();
        while let Some(header) = lines.next() {
            if header.trim().is_empty() {
                continue;
            }
            let rest = header
                .strip_prefix("network ")
                .ok_or_else(|| Error::format(format!("expected network header, got `{header}`")))?;
            let mut name = None;
            let mut widths: Option<Vec<usize>> = None;
            let mut activation = None;
            let mut head = None;
            let mut count = None;
            for (i, tok) in rest.split_whitespace().enumerate() {
                if i == 0 {
                    name = Some(tok.to_string());
                    continue;
                }
                let (key, value) = tok
                    .split_once('=')
                    .ok_or_else(|| Error::format(format!("bad header field `{tok}`")))?;
                match key {
                    "widths" => {
                        let ws = value
                            .split(',')
                            .map(|s| {
                                s.parse::<usize>()
                                    .map_err(|_| Error::format(format!("bad width `{s}`")))
                            })
                            .collect::<Result<Vec<_>>>()?;
                        widths = Some(ws);
                    }
                    "activation" => activation = Some(Activation::parse(value)?),
                    "head" => head = Some(OutputHead::parse(value)?),
                    "params" => {
                        count = Some(value.parse::<usize>().map_err(|_| {
                            Error::format(format!("bad params count `{value}`"))
                        })?)
                    }
                    other => return Err(Error::format(format!("unknown header key `{other}`"))),
                }
            }
            let name = name.ok_or_else(|| Error::format("missing network name"))?;
            let spec = MlpSpec::new(
                widths.ok_or_else(|| Error::format("missing widths"))?,
                activation.ok_or_else(|| Error::format("missing activation"))?,
                head.ok_or_else(|| Error::format("missing head"))?,
            )?;
            let count = count.ok_or_else(|| Error::format("missing params count"))?;
            if count != spec.param_count() {
                return Err(Error::format(format!(
                    "network `{name}`: header says {count} params, spec wants {}",
                    spec.param_count()
                )));
            }
            let mut values = Vec::with_capacity(count);
            for _ in 0..count {
                let line = lines
                    .next()
                    .ok_or_else(|| Error::format(format!("network `{name}`: truncated values")))?;
                let v: f64 = line.trim().parse().map_err(|_| {
                    Error::format(format!("network `{name}`: bad value `{line}`"))
                })?;
                values.push(v);
            }
            let params = Params::from_values(&spec, values)?;
            ck.insert(name, Network { spec, params });
        }
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        let text = std::fs::read_to_string(path)?;
        Checkpoint::from_text(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn round_trip_is_value_exact() {
        let mut rng = seeded(31, 0);
        let mut ck = Checkpoint::new();
        let spec_a = MlpSpec::new(vec![3, 16, 2], Activation::Tanh, OutputHead::Linear).unwrap();
        let spec_b =
            MlpSpec::new(vec![5, 8, 4], Activation::Relu, OutputHead::GaussianMeanLogStd).unwrap();
        ck.insert("policy", Network::init(spec_a, &mut rng));
        ck.insert("inverse", Network::init(spec_b, &mut rng));

        let text = ck.to_text();
        let back = Checkpoint::from_text(&text).unwrap();
        for name in ["policy", "inverse"] {
            let orig = ck.get(name).unwrap();
            let got = back.get(name).unwrap();
            assert_eq!(orig.spec, got.spec);
            assert_eq!(orig.params.values(), got.params.values());
        }
    }

    #[test]
    fn rejects_garbage() {
        assert!(Checkpoint::from_text("not a checkpoint").is_err());
        let truncated = format!("{MAGIC}\nnetwork p widths=2,2 activation=tanh head=linear params=6\n1.0\n");
        assert!(Checkpoint::from_text(&truncated).is_err());
    }
}
