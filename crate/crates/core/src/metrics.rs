//! Comparison of identified cause sets against a reference.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intervention::is_subset;
use crate::scm::VarId;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum F1Mode {
    #[default]
    Harmonic,
    Geometric,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub missed: f64,
    pub overshoot: f64,
}

fn as_sets(causes: &[Vec<VarId>]) -> BTreeSet<Vec<VarId>> {
    causes
        .iter()
        .map(|c| {
            let mut c = c.clone();
            c.sort_unstable();
            c.dedup();
            c
        })
        .collect()
}

/// Precision, recall and their mean over distinct cause sets.
///
/// An empty identified list has precision 1; an empty reference has recall 1.
pub fn precision_recall_f1(
    identified: &[Vec<VarId>],
    reference: &[Vec<VarId>],
    mode: F1Mode,
) -> (f64, f64, f64) {
    let got = as_sets(identified);
    let want = as_sets(reference);
    let hits = got.intersection(&want).count() as f64;
    let precision = if got.is_empty() {
        1.0
    } else {
        hits / got.len() as f64
    };
    let recall = if want.is_empty() {
        1.0
    } else {
        hits / want.len() as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        match mode {
            F1Mode::Harmonic => 2.0 * precision * recall / (precision + recall),
            F1Mode::Geometric => (precision * recall).sqrt(),
        }
    };
    (precision, recall, f1)
}

/// Fraction of reference causes with no identified superset (`missed`), and
/// with only strict supersets identified (`overshoot`).
pub fn missed_overshoot(identified: &[Vec<VarId>], reference: &[Vec<VarId>]) -> (f64, f64) {
    let got = as_sets(identified);
    let want = as_sets(reference);
    if want.is_empty() {
        return (0.0, 0.0);
    }
    let mut missed = 0;
    let mut over = 0;
    for r in &want {
        if got.contains(r) {
            continue;
        }
        if got.iter().any(|g| is_subset(r, g)) {
            over += 1;
        } else {
            missed += 1;
        }
    }
    let n = want.len() as f64;
    (missed as f64 / n, over as f64 / n)
}

pub fn score(identified: &[Vec<VarId>], reference: &[Vec<VarId>], mode: F1Mode) -> Scores {
    let (precision, recall, f1) = precision_recall_f1(identified, reference, mode);
    let (missed, overshoot) = missed_overshoot(identified, reference);
    Scores {
        precision,
        recall,
        f1,
        missed,
        overshoot,
    }
}

/// Size a smallest cause must have in a Boolean SMK world: one when exactly
/// one of `SD` and `DK` holds, two when both do.
pub fn expected_smallest_size(sd: bool, dk: bool) -> Result<usize> {
    match (sd, dk) {
        (false, false) => Err(Error::ContextInconsistent(
            "neither SD nor DK holds, so the target cannot hold".into(),
        )),
        (true, true) => Ok(2),
        _ => Ok(1),
    }
}

/// 1 when the cause has the expected smallest size, else 0.
pub fn smallest_cause_accuracy(cause_size: usize, sd: bool, dk: bool) -> Result<f64> {
    Ok((cause_size == expected_smallest_size(sd, dk)?) as u8 as f64)
}

/// Mean, median, extremes and quartiles (linear interpolation).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub q1: f64,
    pub q3: f64,
}

pub fn summarize(values: &[f64]) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (v.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
    };
    Some(Summary {
        n: v.len(),
        mean: v.iter().sum::<f64>() / v.len() as f64,
        median: q(0.5),
        min: v[0],
        max: v[v.len() - 1],
        q1: q(0.25),
        q3: q(0.75),
    })
}
