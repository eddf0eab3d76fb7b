//! Demo file format: line-delimited transitions under a schema-versioned
//! header, with an optional pseudo-label section appended after training.
//!
//! Reals are written in shortest round-trip decimal so save -> load is
//! value-exact. Parse errors name the first offending line.

use std::fmt::Write as _;
use std::path::Path;

use super::types::{Action, DemoSet, Done, EvalOnlyReward, Trajectory, Transition};
use crate::latent::SubTaskCode;
use crate::{Error, Result};

const MAGIC: &str = "seairl-demos v1";
const CODES_MAGIC: &str = "codes v1";

/// A parsed demo file: the demonstrations plus, when present, one
/// pseudo-label sequence per trajectory.
#[derive(Debug, Clone)]
pub struct DemoFile {
    pub demos: DemoSet,
    pub codes: Option<Vec<Vec<usize>>>,
}

fn write_reals(out: &mut String, xs: &[f64]) {
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{x}");
    }
}

fn write_action(out: &mut String, a: &Action) {
    match a {
        Action::Discrete(i) => {
            let _ = write!(out, "d:{i}");
        }
        Action::Continuous(v) => {
            out.push_str("c:");
            write_reals(out, v);
        }
    }
}

fn write_code(out: &mut String, c: &Option<SubTaskCode>) {
    match c {
        None => out.push('-'),
        Some(code) => write_reals(out, code.probs()),
    }
}

fn transition_line(t: &Transition) -> String {
    let mut line = String::new();
    write_reals(&mut line, &t.state);
    line.push('|');
    write_action(&mut line, &t.action);
    line.push('|');
    write_code(&mut line, &t.code);
    line.push('|');
    write_reals(&mut line, &t.next_state);
    line.push('|');
    write_code(&mut line, &t.next_code);
    let _ = write!(
        line,
        "|{}|{}|{}",
        t.log_pi,
        t.reward.for_evaluation(),
        match t.done {
            Done::No => 0,
            Done::Terminated => 1,
            Done::Truncated => 2,
        }
    );
    line
}

fn demo_text(set: &DemoSet, codes: Option<&[Vec<usize>]>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "fingerprint {}", set.fingerprint);
    let _ = writeln!(out, "seed {}", set.seed);
    for traj in &set.trajectories {
        let truth = match &traj.ground_truth_subtasks {
            None => "-".to_string(),
            Some(labels) => labels
                .iter()
                .map(|l| l.to_string())
                .collect::<Vec<_>>()
                .join(","),
        };
        let _ = writeln!(out, "traj {} {} truth={truth}", traj.scenario, traj.len());
        for t in &traj.transitions {
            let _ = writeln!(out, "{}", transition_line(t));
        }
    }
    if let Some(codes) = codes {
        let _ = writeln!(out, "{CODES_MAGIC}");
        for (i, seq) in codes.iter().enumerate() {
            let csv = seq.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",");
            let _ = writeln!(out, "{i} {csv}");
        }
    }
    out
}

pub fn save_demos(set: &DemoSet, path: &Path) -> Result<()> {
    std::fs::write(path, demo_text(set, None))?;
    Ok(())
}

/// Save demos together with per-trajectory pseudo-label sequences.
pub fn save_demos_with_codes(set: &DemoSet, codes: &[Vec<usize>], path: &Path) -> Result<()> {
    if codes.len() != set.trajectories.len() {
        return Err(Error::config("one code sequence per trajectory required"));
    }
    std::fs::write(path, demo_text(set, Some(codes)))?;
    Ok(())
}

struct LineParser<'a> {
    lineno: usize,
    text: &'a str,
}

impl<'a> LineParser<'a> {
    fn bad(&self, what: impl std::fmt::Display) -> Error {
        Error::format(format!("demo file line {}: {what}", self.lineno))
    }

    fn reals(&self, s: &str) -> Result<Vec<f64>> {
        s.split(',')
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| self.bad(format!("bad real `{tok}`")))
            })
            .collect()
    }

    fn action(&self, s: &str) -> Result<Action> {
        if let Some(rest) = s.strip_prefix("d:") {
            Ok(Action::Discrete(
                rest.parse().map_err(|_| self.bad("bad discrete action"))?,
            ))
        } else if let Some(rest) = s.strip_prefix("c:") {
            Ok(Action::Continuous(self.reals(rest)?))
        } else {
            Err(self.bad(format!("bad action `{s}`")))
        }
    }

    fn code(&self, s: &str) -> Result<Option<SubTaskCode>> {
        if s == "-" {
            return Ok(None);
        }
        let probs = self.reals(s)?;
        SubTaskCode::new(probs)
            .map(Some)
            .map_err(|e| self.bad(format!("bad sub-task code: {e}")))
    }

    fn transition(&self) -> Result<Transition> {
        let parts: Vec<&str> = self.text.split('|').collect();
        if parts.len() != 8 {
            return Err(self.bad(format!("expected 8 fields, got {}", parts.len())));
        }
        let done = match parts[7] {
            "0" => Done::No,
            "1" => Done::Terminated,
            "2" => Done::Truncated,
            other => return Err(self.bad(format!("bad done flag `{other}`"))),
        };
        Ok(Transition {
            state: self.reals(parts[0])?,
            action: self.action(parts[1])?,
            code: self.code(parts[2])?,
            next_state: self.reals(parts[3])?,
            next_code: self.code(parts[4])?,
            log_pi: parts[5]
                .parse()
                .map_err(|_| self.bad("bad log_pi"))?,
            reward: EvalOnlyReward::new(
                parts[6].parse().map_err(|_| self.bad("bad reward"))?,
            ),
            done,
        })
    }
}

pub fn load_demos(path: &Path) -> Result<DemoFile> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate().peekable();

    let expect_line = |pair: Option<(usize, &str)>, what: &str| -> Result<(usize, String)> {
        match pair {
            Some((n, l)) => Ok((n + 1, l.to_string())),
            None => Err(Error::format(format!("demo file truncated: expected {what}"))),
        }
    };

    let (n, magic) = expect_line(lines.next(), "magic")?;
    if magic != MAGIC {
        return Err(Error::format(format!("demo file line {n}: bad magic `{magic}`")));
    }
    let (n, fp_line) = expect_line(lines.next(), "fingerprint")?;
    let fingerprint = fp_line
        .strip_prefix("fingerprint ")
        .and_then(|s| s.parse::<u64>().ok())
        .ok_or_else(|| Error::format(format!("demo file line {n}: bad fingerprint")))?;
    let (n, seed_line) = expect_line(lines.next(), "seed")?;
    let seed = seed_line
        .strip_prefix("seed ")
        .and_then(|s| s.parse::<u64>().ok())
        .ok_or_else(|| Error::format(format!("demo file line {n}: bad seed")))?;

    let mut trajectories = Vec::new();
    let mut codes: Option<Vec<Vec<usize>>> = None;

    while let Some((lineno0, line)) = lines.next() {
        let lineno = lineno0 + 1;
        if line.trim().is_empty() {
            continue;
        }
        if line == CODES_MAGIC {
            let mut parsed = Vec::new();
            for (cn0, cline) in lines.by_ref() {
                let cn = cn0 + 1;
                if cline.trim().is_empty() {
                    continue;
                }
                let (idx, csv) = cline
                    .split_once(' ')
                    .ok_or_else(|| Error::format(format!("demo file line {cn}: bad code record")))?;
                let idx: usize = idx
                    .parse()
                    .map_err(|_| Error::format(format!("demo file line {cn}: bad code index")))?;
                if idx != parsed.len() {
                    return Err(Error::format(format!(
                        "demo file line {cn}: code records out of order"
                    )));
                }
                let seq = csv
                    .split(',')
                    .map(|s| {
                        s.parse::<usize>().map_err(|_| {
                            Error::format(format!("demo file line {cn}: bad code `{s}`"))
                        })
                    })
                    .collect::<Result<Vec<usize>>>()?;
                parsed.push(seq);
            }
            codes = Some(parsed);
            break;
        }
        let rest = line
            .strip_prefix("traj ")
            .ok_or_else(|| Error::format(format!("demo file line {lineno}: expected traj header")))?;
        let mut toks = rest.split_whitespace();
        let scenario: usize = toks
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format(format!("demo file line {lineno}: bad scenario")))?;
        let len: usize = toks
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format(format!("demo file line {lineno}: bad length")))?;
        let truth = toks
            .next()
            .and_then(|s| s.strip_prefix("truth="))
            .ok_or_else(|| Error::format(format!("demo file line {lineno}: missing truth field")))?;
        let ground_truth_subtasks = if truth == "-" {
            None
        } else {
            Some(
                truth
                    .split(',')
                    .map(|s| {
                        s.parse::<usize>().map_err(|_| {
                            Error::format(format!("demo file line {lineno}: bad truth label `{s}`"))
                        })
                    })
                    .collect::<Result<Vec<usize>>>()?,
            )
        };
        let mut transitions = Vec::with_capacity(len);
        for _ in 0..len {
            let (tn0, tline) =
                expect_line(lines.next(), "transition record")?;
            let parser = LineParser { lineno: tn0, text: &tline };
            transitions.push(parser.transition()?);
        }
        let traj = Trajectory { scenario, transitions, ground_truth_subtasks };
        traj.check_chain()?;
        trajectories.push(traj);
    }

    if trajectories.is_empty() {
        return Err(Error::format("demo file contains no trajectories"));
    }
    if let Some(codes) = &codes {
        if codes.len() != trajectories.len() {
            return Err(Error::format(format!(
                "demo file has {} code records for {} trajectories",
                codes.len(),
                trajectories.len()
            )));
        }
    }
    Ok(DemoFile {
        demos: DemoSet { trajectories, fingerprint, seed },
        codes,
    })
}
