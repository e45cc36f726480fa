//! Experiment configuration files.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::asymptotics::{Family, FamilySpec};
use crate::error::{Error, Result};
use crate::logic::{parse, NormalFormSet, Strategy, DEFAULT_BUDGET};
use crate::measures::{MeasuringCandidate, Tolerances};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Count,
    Profile,
    Sweep,
    Dims,
    Measure,
    VerifyAdditivity,
    VerifyFubini,
    VerifySemiring,
    CheckMeasuring,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Count => "count",
            Task::Profile => "profile",
            Task::Sweep => "sweep",
            Task::Dims => "dims",
            Task::Measure => "measure",
            Task::VerifyAdditivity => "verify-additivity",
            Task::VerifyFubini => "verify-fubini",
            Task::VerifySemiring => "verify-semiring",
            Task::CheckMeasuring => "check-measuring",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum FamilyConfig {
    One(FamilySpec),
    Many(Vec<FamilySpec>),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum FormulaEntry {
    Text(String),
    Full {
        formula: String,
        #[serde(default)]
        vars: Option<Vec<String>>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expectation {
    Pass,
    Fail,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateEntry {
    /// A formula name or an inline formula.
    pub target: String,
    pub phi: String,
    #[serde(default)]
    pub x: Option<Vec<String>>,
    #[serde(default)]
    pub z: Option<Vec<String>>,
    #[serde(default)]
    pub symmetrize: bool,
    #[serde(default)]
    pub expect: Option<Expectation>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapEntry {
    pub graph: String,
    pub base: String,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SemiringConfig {
    pub cases: usize,
    pub seed: u64,
}

impl Default for SemiringConfig {
    fn default() -> Self {
        SemiringConfig { cases: 1000, seed: 0 }
    }
}

fn default_profile_limit() -> usize {
    32
}

/// The JSON file as written by users.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: FamilyConfig,
    pub task: Task,
    #[serde(default)]
    pub formulas: BTreeMap<String, FormulaEntry>,
    #[serde(default)]
    pub candidates: BTreeMap<String, CandidateEntry>,
    #[serde(default)]
    pub pairs: Vec<(String, String)>,
    #[serde(default)]
    pub maps: Vec<MapEntry>,
    #[serde(default)]
    pub semiring: SemiringConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub strategy: Strategy,
    #[serde(default)]
    pub budget: Option<u64>,
    #[serde(default = "default_profile_limit")]
    pub profile_limit: usize,
}

#[derive(Clone, Debug)]
pub struct NamedCandidate {
    pub candidate: MeasuringCandidate,
    pub expect: Option<Expectation>,
}

/// A validated configuration with every name resolved.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub family: Family,
    pub task: Task,
    pub sets: BTreeMap<String, NormalFormSet>,
    pub candidates: BTreeMap<String, NamedCandidate>,
    pub pairs: Vec<(String, String)>,
    pub maps: Vec<MapEntry>,
    pub semiring: SemiringConfig,
    pub tolerances: Tolerances,
    pub strategy: Strategy,
    pub budget: u64,
    pub profile_limit: usize,
}

fn parse_entry(entry: &FormulaEntry) -> Result<NormalFormSet> {
    match entry {
        FormulaEntry::Text(t) => NormalFormSet::parse(t, None),
        FormulaEntry::Full { formula, vars } => NormalFormSet::parse(formula, vars.as_deref()),
    }
}

fn missing(what: &str, name: &str) -> Error {
    Error::Config(format!("unknown {what} '{name}'"))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Resolves names and checks the fields the task needs. `budget`
    /// overrides the configured budget.
    pub fn resolve(self, budget: Option<u64>) -> Result<Experiment> {
        let grids = match self.family {
            FamilyConfig::One(g) => vec![g],
            FamilyConfig::Many(g) => g,
        };
        let family = Family::new(grids)?;
        let mut sets = BTreeMap::new();
        for (name, entry) in &self.formulas {
            sets.insert(name.clone(), parse_entry(entry)?);
        }
        let lookup = |name: &str| -> Result<NormalFormSet> {
            match sets.get(name) {
                Some(s) => Ok(s.clone()),
                None => NormalFormSet::parse(name, None),
            }
        };
        let mut candidates = BTreeMap::new();
        for (name, c) in &self.candidates {
            let target = lookup(&c.target)?;
            let mut candidate = MeasuringCandidate::new(target, parse(&c.phi)?, c.x.clone(), c.z.clone())?;
            if c.symmetrize {
                candidate = candidate.symmetrize();
            }
            candidates.insert(name.clone(), NamedCandidate { candidate, expect: c.expect });
        }
        for (a, b) in &self.pairs {
            for n in [a, b] {
                if !sets.contains_key(n) {
                    return Err(missing("formula", n));
                }
            }
        }
        for m in &self.maps {
            for n in [&m.graph, &m.base] {
                if !sets.contains_key(n) {
                    return Err(missing("formula", n));
                }
            }
        }
        let need = |ok: bool, what: &str| if ok { Ok(()) } else { Err(Error::Config(format!("task {} needs {what}", self.task.name()))) };
        match self.task {
            Task::Count | Task::Profile | Task::Sweep | Task::Dims => need(!sets.is_empty(), "formulas")?,
            Task::Measure | Task::CheckMeasuring => need(!candidates.is_empty(), "candidates")?,
            Task::VerifyAdditivity => need(!self.pairs.is_empty(), "pairs")?,
            Task::VerifyFubini => need(!self.maps.is_empty(), "maps")?,
            Task::VerifySemiring => need(self.semiring.cases > 0, "semiring.cases > 0")?,
        }
        Ok(Experiment {
            family,
            task: self.task,
            sets,
            candidates,
            pairs: self.pairs,
            maps: self.maps,
            semiring: self.semiring,
            tolerances: self.tolerances,
            strategy: self.strategy,
            budget: budget.or(self.budget).unwrap_or(DEFAULT_BUDGET),
            profile_limit: self.profile_limit,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_resolves() {
        let text = r#"{
            "family": [{"p": [5, 7], "m": [8]}, {"p": [5], "m": [8, 16]}],
            "task": "check-measuring",
            "formulas": {"hh": "exists z1 in H. exists z2 in H. x = z1 + z2"},
            "candidates": {"c": {"target": "hh", "phi": "x = z1 + z2", "expect": "pass"}},
            "tolerances": {"measure": 0.01}
        }"#;
        let e = ExperimentConfig::from_json(text).unwrap().resolve(Some(10)).unwrap();
        assert_eq!(e.family.members().len(), 3);
        assert_eq!(e.budget, 10);
        assert_eq!(e.tolerances.measure, 0.01);
        assert_eq!(e.candidates["c"].candidate.k(), 2);
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            r#"{"family": {"p": [4], "m": [2]}, "task": "count", "formulas": {"a": "H(x)"}}"#,
            r#"{"family": {"p": [5], "m": [2]}, "task": "count"}"#,
            r#"{"family": {"p": [5], "m": [2]}, "task": "count", "formulas": {"a": "x = "}}"#,
            r#"{"family": {"p": [5], "m": [2]}, "task": "verify-additivity", "formulas": {"a": "H(x)"}, "pairs": [["a", "b"]]}"#,
            r#"{"family": {"p": [5], "m": [2]}, "task": "frobnicate"}"#,
        ];
        for text in bad {
            let r = ExperimentConfig::from_json(text).and_then(|c| c.resolve(None));
            assert!(r.is_err(), "{text}");
        }
        let err = ExperimentConfig::from_json(bad[0]).unwrap().resolve(None).unwrap_err();
        assert!(err.to_string().contains("non-prime modulus"));
    }
}
