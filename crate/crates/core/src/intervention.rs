use std::fmt;

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::scm::VarId;

/// Sorted, duplicate-free variable list.
pub type VarSet = SmallVec<[VarId; 8]>;

/// A set of `(variable, value index)` pairs, kept sorted by variable.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Intervention {
    pairs: SmallVec<[(VarId, u32); 8]>,
}

impl Intervention {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn single(var: VarId, value: u32) -> Self {
        let mut pairs = SmallVec::new();
        pairs.push((var, value));
        Intervention { pairs }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (VarId, u32)>) -> Result<Self> {
        let mut pairs: SmallVec<[(VarId, u32); 8]> = pairs.into_iter().collect();
        pairs.sort_unstable_by_key(|p| p.0);
        if let Some(w) = pairs.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateVariable(format!("#{}", w[0].0 .0)));
        }
        Ok(Intervention { pairs })
    }

    #[inline]
    pub fn pairs(&self) -> &[(VarId, u32)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn get(&self, var: VarId) -> Option<u32> {
        self.pairs
            .binary_search_by_key(&var, |p| p.0)
            .ok()
            .map(|i| self.pairs[i].1)
    }

    pub fn contains_var(&self, var: VarId) -> bool {
        self.pairs.binary_search_by_key(&var, |p| p.0).is_ok()
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.pairs.iter().map(|p| p.0)
    }

    /// Copy with one more pair. `var` must not be present yet.
    pub fn with(&self, var: VarId, value: u32) -> Self {
        let pos = match self.pairs.binary_search_by_key(&var, |p| p.0) {
            Ok(_) => panic!("variable already intervened on"),
            Err(pos) => pos,
        };
        let mut pairs = self.pairs.clone();
        pairs.insert(pos, (var, value));
        Intervention { pairs }
    }

    /// Splits the variables into those forced away from `v_star` (the
    /// counterfactual part) and those held at their actual value (the
    /// contingency part).
    pub fn split_sets(&self, v_star: &[u32]) -> (VarSet, VarSet) {
        let mut cause = VarSet::new();
        let mut contingency = VarSet::new();
        for &(var, val) in &self.pairs {
            if val != v_star[var.index()] {
                cause.push(var);
            } else {
                contingency.push(var);
            }
        }
        (cause, contingency)
    }

    pub fn cause_vars(&self, v_star: &[u32]) -> VarSet {
        self.pairs
            .iter()
            .filter(|&&(v, x)| x != v_star[v.index()])
            .map(|p| p.0)
            .collect()
    }

    /// Adds `(X, v*_X)` for every `X` in `pins` not already intervened on.
    pub fn pinned(&self, pins: &[VarId], v_star: &[u32]) -> Self {
        if pins.is_empty() {
            return self.clone();
        }
        let mut pairs = self.pairs.clone();
        for &p in pins {
            if !self.contains_var(p) {
                pairs.push((p, v_star[p.index()]));
            }
        }
        pairs.sort_unstable_by_key(|p| p.0);
        Intervention { pairs }
    }
}

impl fmt::Debug for Intervention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, x)) in self.pairs.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "#{}={}", v.0, x)?;
        }
        f.write_str("}")
    }
}

/// `a ⊆ b` for sorted slices.
pub fn is_subset(a: &[VarId], b: &[VarId]) -> bool {
    if a.len() > b.len() {
        return false;
    }
    let mut j = 0;
    for x in a {
        while j < b.len() && b[j] < *x {
            j += 1;
        }
        if j == b.len() || b[j] != *x {
            return false;
        }
        j += 1;
    }
    true
}

/// Sorted union of two sorted slices.
pub fn union(a: &[VarId], b: &[VarId]) -> VarSet {
    let mut out: VarSet = a.iter().chain(b).copied().collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Keeps the sets that have no strict subset in `sets`; among equal sets the
/// first occurrence wins. Order of survivors is preserved.
pub fn minimal_indices(sets: &[&[VarId]]) -> Vec<usize> {
    let mut keep = Vec::new();
    'outer: for (i, s) in sets.iter().enumerate() {
        for (j, t) in sets.iter().enumerate() {
            if i == j {
                continue;
            }
            if t.len() < s.len() && is_subset(t, s) {
                continue 'outer;
            }
            if j < i && *t == *s {
                continue 'outer;
            }
        }
        keep.push(i);
    }
    keep
}
