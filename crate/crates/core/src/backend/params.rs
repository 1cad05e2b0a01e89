// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::booleanifier::GateKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BootstrapMode {
    /// Every gate output is refreshed to `refresh_noise`.
    PerGate,
    /// Noise accumulates until decryption.
    Off,
}

impl fmt::Display for BootstrapMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BootstrapMode::PerGate => "per_gate",
            BootstrapMode::Off => "off",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParamsError {
    #[error("fresh_noise {fresh} exceeds budget {budget}")]
    FreshOverBudget { fresh: u64, budget: u64 },
    #[error("refresh_noise {refresh} exceeds budget {budget}")]
    RefreshOverBudget { refresh: u64, budget: u64 },
    #[error("per_gate mode needs refresh_noise + max gate noise ({0}) within the budget ({1})")]
    BootstrapOverBudget(u64, u64),
    #[error("unknown preset `{0}` (expected tfhe_like, leveled_small or leveled_large)")]
    UnknownPreset(String),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

/// Noise model parameters. Units are abstract integers.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SchemeParams {
    pub noise_budget: u64,
    pub fresh_noise: u64,
    pub gate_noise: BTreeMap<GateKind, u64>,
    pub bootstrap: BootstrapMode,
    pub refresh_noise: u64,
    pub key_seed: u64,
}

pub const PRESETS: [&str; 3] = ["tfhe_like", "leveled_small", "leveled_large"];

fn uniform_gate_noise(logic: u64) -> BTreeMap<GateKind, u64> {
    GateKind::ALL
        .iter()
        .map(|&k| {
            let n = match k {
                GateKind::And | GateKind::Or | GateKind::Xor | GateKind::Mux => logic,
                _ => 0,
            };
            (k, n)
        })
        .collect()
}

impl SchemeParams {
    /// Bootstraps after every gate; depth is unbounded.
    pub fn tfhe_like() -> Self {
        SchemeParams {
            noise_budget: 100,
            fresh_noise: 10,
            gate_noise: uniform_gate_noise(10),
            bootstrap: BootstrapMode::PerGate,
            refresh_noise: 10,
            key_seed: 0,
        }
    }

    /// No bootstrapping; 16 logic levels fit the budget.
    pub fn leveled_small() -> Self {
        SchemeParams {
            noise_budget: 1000,
            fresh_noise: 40,
            gate_noise: uniform_gate_noise(60),
            bootstrap: BootstrapMode::Off,
            refresh_noise: 40,
            key_seed: 0,
        }
    }

    /// No bootstrapping; 128 logic levels fit the budget.
    pub fn leveled_large() -> Self {
        SchemeParams {
            noise_budget: 8000,
            fresh_noise: 40,
            gate_noise: uniform_gate_noise(62),
            bootstrap: BootstrapMode::Off,
            refresh_noise: 40,
            key_seed: 0,
        }
    }

    pub fn preset(name: &str) -> Result<Self, ParamsError> {
        match name {
            "tfhe_like" => Ok(Self::tfhe_like()),
            "leveled_small" => Ok(Self::leveled_small()),
            "leveled_large" => Ok(Self::leveled_large()),
            other => Err(ParamsError::UnknownPreset(other.to_string())),
        }
    }

    pub fn gate_noise(&self, kind: GateKind) -> u64 {
        self.gate_noise.get(&kind).copied().unwrap_or(0)
    }

    /// Longest chain of gates with increment `inc` that still decrypts in
    /// off mode.
    pub fn max_depth(&self, inc: u64) -> Option<u64> {
        (inc > 0).then(|| self.noise_budget.saturating_sub(self.fresh_noise) / inc)
    }

    pub fn validate(&self) -> Result<(), ParamsError> {
        let budget = self.noise_budget;
        if self.fresh_noise > budget {
            return Err(ParamsError::FreshOverBudget { fresh: self.fresh_noise, budget });
        }
        if self.refresh_noise > budget {
            return Err(ParamsError::RefreshOverBudget { refresh: self.refresh_noise, budget });
        }
        if self.bootstrap == BootstrapMode::PerGate {
            let worst = self.refresh_noise + self.gate_noise.values().copied().max().unwrap_or(0);
            if worst > budget {
                return Err(ParamsError::BootstrapOverBudget(worst, budget));
            }
        }
        Ok(())
    }

    /// Key/value text, one `key=value` per line, in the format [`FromStr`]
    /// reads back.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "budget={}\nfresh_noise={}\nbootstrap={}\nrefresh_noise={}\nkey_seed={}\n",
            self.noise_budget, self.fresh_noise, self.bootstrap, self.refresh_noise, self.key_seed
        );
        for (k, v) in &self.gate_noise {
            out.push_str(&format!("gate_noise.{k}={v}\n"));
        }
        out
    }
}

impl FromStr for SchemeParams {
    type Err = ParamsError;

    /// Parses `key=value` lines. A `preset=` line, if present, must come
    /// first and supplies defaults for the keys that follow.
    fn from_str(text: &str) -> Result<Self, ParamsError> {
        let mut p = SchemeParams::tfhe_like();
        let mut seen_other = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |message: String| ParamsError::Syntax { line: i + 1, message };
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| syntax("expected `key=value`".into()))?;
            let number =
                || value.parse::<u64>().map_err(|_| syntax(format!("`{value}` is not a non-negative integer")));
            match key {
                "preset" if seen_other => return Err(syntax("`preset` must come first".into())),
                "preset" => {
                    let seed = p.key_seed;
                    p = SchemeParams::preset(value)?;
                    p.key_seed = seed;
                }
                "budget" => p.noise_budget = number()?,
                "fresh_noise" => p.fresh_noise = number()?,
                "refresh_noise" => p.refresh_noise = number()?,
                "key_seed" => p.key_seed = number()?,
                "bootstrap" => {
                    p.bootstrap = match value {
                        "per_gate" => BootstrapMode::PerGate,
                        "off" => BootstrapMode::Off,
                        _ => return Err(syntax(format!("bootstrap must be per_gate or off, found `{value}`"))),
                    }
                }
                _ => {
                    let kind = key
                        .strip_prefix("gate_noise.")
                        .and_then(GateKind::from_name)
                        .ok_or_else(|| syntax(format!("unknown key `{key}`")))?;
                    p.gate_noise.insert(kind, number()?);
                }
            }
            seen_other |= key != "preset";
        }
        p.validate()?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_have_documented_depths() {
        for name in PRESETS {
            SchemeParams::preset(name).unwrap().validate().unwrap();
        }
        assert_eq!(SchemeParams::leveled_small().max_depth(60), Some(16));
        assert_eq!(SchemeParams::leveled_large().max_depth(62), Some(128));
        assert!(matches!(SchemeParams::preset("huge"), Err(ParamsError::UnknownPreset(_))));
    }

    #[test]
    fn invariants_are_enforced() {
        let mut p = SchemeParams::tfhe_like();
        p.fresh_noise = 101;
        assert!(matches!(p.validate(), Err(ParamsError::FreshOverBudget { .. })));
        let mut p = SchemeParams::tfhe_like();
        p.gate_noise.insert(GateKind::And, 95);
        assert_eq!(p.validate(), Err(ParamsError::BootstrapOverBudget(105, 100)));
        p.bootstrap = BootstrapMode::Off;
        assert!(p.validate().is_ok());
    }

    #[test]
    fn parse_file() {
        let text = "preset=leveled_small\n# tighter\nbudget=500\ngate_noise.AND=30\nkey_seed=7\n";
        let p: SchemeParams = text.parse().unwrap();
        assert_eq!(p.noise_budget, 500);
        assert_eq!(p.gate_noise(GateKind::And), 30);
        assert_eq!(p.gate_noise(GateKind::Or), 60);
        assert_eq!(p.bootstrap, BootstrapMode::Off);
        assert_eq!(p.key_seed, 7);

        let p2: SchemeParams = p.to_text().parse().unwrap();
        assert_eq!(p2, p);

        let e = "budget=5\npreset=tfhe_like\n".parse::<SchemeParams>().unwrap_err();
        assert!(matches!(e, ParamsError::Syntax { line: 2, .. }));
        let e = "gate_noise.NAND=3\n".parse::<SchemeParams>().unwrap_err();
        assert!(e.to_string().contains("unknown key"));
        let e = "budget=-1\n".parse::<SchemeParams>().unwrap_err();
        assert!(e.to_string().contains("line 1"));
    }
}
