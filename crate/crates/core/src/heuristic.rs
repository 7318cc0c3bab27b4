//! Beam scores, minimized.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intervention::Intervention;
use crate::scm::VarId;
use crate::search::SearchSpace;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeuristicKind {
    /// Number of positive variables after the intervention.
    Positive,
    /// Number of variables whose value differs from the actual one.
    Changed,
    /// Number of non-positive variables.
    Negative,
    /// Number of variables that keep their actual value.
    Occam,
    /// Seeded pseudo-random value in `[1, |V|]`.
    Random,
    /// `|V| / 2`.
    Constant,
    /// Set sizes plus the `SD` and `DK` indices of the set-valued SMK layout.
    NonbooleanSmk,
}

impl HeuristicKind {
    pub const ALL: [HeuristicKind; 7] = [
        HeuristicKind::Positive,
        HeuristicKind::Changed,
        HeuristicKind::Negative,
        HeuristicKind::Occam,
        HeuristicKind::Random,
        HeuristicKind::Constant,
        HeuristicKind::NonbooleanSmk,
    ];

    pub fn name(self) -> &'static str {
        match self {
            HeuristicKind::Positive => "positive",
            HeuristicKind::Changed => "changed",
            HeuristicKind::Negative => "negative",
            HeuristicKind::Occam => "occam",
            HeuristicKind::Random => "random",
            HeuristicKind::Constant => "constant",
            HeuristicKind::NonbooleanSmk => "nonboolean-smk",
        }
    }

    /// Whether the score depends on variables the intervention does not set.
    pub fn needs_downstream(self) -> bool {
        matches!(self, HeuristicKind::NonbooleanSmk)
    }
}

impl fmt::Display for HeuristicKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HeuristicKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        HeuristicKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown heuristic `{s}`")))
    }
}

const NONBOOLEAN_SETS: [&str; 9] = ["A", "AD", "KMS", "FF", "FDB", "GP", "GK", "FS", "FN"];
const NONBOOLEAN_INDICES: [&str; 2] = ["SD", "DK"];

/// A heuristic bound to a search space.
///
/// Counting heuristics range over the space's variables, read from the
/// post-intervention state.
#[derive(Clone, Debug)]
pub struct Heuristic {
    kind: HeuristicKind,
    vars: Vec<VarId>,
    v_star: Vec<u32>,
    /// Per variable id, positivity of each value index.
    positive: Vec<Vec<bool>>,
    magnitude: Vec<Vec<i64>>,
    nonboolean: Vec<VarId>,
    seed: u64,
}

impl Heuristic {
    /// `downstream` tells whether observed states include effects of the
    /// intervention; heuristics that need them are rejected otherwise.
    pub fn new(
        kind: HeuristicKind,
        space: &SearchSpace,
        seed: u64,
        downstream: bool,
    ) -> Result<Self> {
        if kind.needs_downstream() && !downstream {
            return Err(Error::IncompatibleHeuristic(kind.name().into()));
        }
        let positive = space
            .domains
            .iter()
            .map(|d| d.values().into_iter().map(|v| v.is_positive()).collect())
            .collect();
        let magnitude = space
            .domains
            .iter()
            .map(|d| d.values().into_iter().map(|v| v.magnitude()).collect())
            .collect();
        let mut nonboolean = Vec::new();
        if kind == HeuristicKind::NonbooleanSmk {
            for name in NONBOOLEAN_SETS.iter().chain(&NONBOOLEAN_INDICES) {
                let id = space.names.iter().position(|n| n == name).ok_or_else(|| {
                    Error::IncompatibleHeuristic(format!("{kind} (no variable `{name}`)"))
                })?;
                nonboolean.push(VarId(id as u32));
            }
        }
        Ok(Heuristic {
            kind,
            vars: space.vars.clone(),
            v_star: space.v_star.clone(),
            positive,
            magnitude,
            nonboolean,
            seed,
        })
    }

    pub fn kind(&self) -> HeuristicKind {
        self.kind
    }

    /// Whether [`Heuristic::score`] reads the post-intervention state.
    pub fn uses_state(&self) -> bool {
        !matches!(self.kind, HeuristicKind::Random | HeuristicKind::Constant)
    }

    pub fn score(&self, e: &Intervention, post: &[u32]) -> f64 {
        let n = self.vars.len() as f64;
        let count =
            |pred: &dyn Fn(VarId) -> bool| self.vars.iter().filter(|&&v| pred(v)).count() as f64;
        match self.kind {
            HeuristicKind::Positive => {
                count(&|v| self.positive[v.index()][post[v.index()] as usize])
            }
            HeuristicKind::Negative => {
                count(&|v| !self.positive[v.index()][post[v.index()] as usize])
            }
            HeuristicKind::Changed => count(&|v| post[v.index()] != self.v_star[v.index()]),
            HeuristicKind::Occam => count(&|v| post[v.index()] == self.v_star[v.index()]),
            HeuristicKind::Constant => n / 2.0,
            HeuristicKind::Random => {
                let mut h = crate::mix_seed(self.seed, 0x5eed);
                for &(v, x) in e.pairs() {
                    h = crate::mix_seed(h, ((v.0 as u64) << 32) | x as u64);
                }
                let unit = (h >> 11) as f64 / (1u64 << 53) as f64;
                1.0 + unit * (n - 1.0).max(0.0)
            }
            HeuristicKind::NonbooleanSmk => self
                .nonboolean
                .iter()
                .map(|v| self.magnitude[v.index()][post[v.index()] as usize])
                .sum::<i64>() as f64,
        }
    }
}
