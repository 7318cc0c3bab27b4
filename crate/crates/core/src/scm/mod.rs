//! Discrete structural causal models: representation, evaluation under
//! interventions, and the actual-cause conditions.

mod expr;
pub mod hp;
mod json;
mod value;

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intervention::Intervention;

pub use expr::{Expr, ExprSpec};
pub use hp::{check_hp_cause, HpVerdict, DEFAULT_AC3_BUDGET};
pub use json::{ScmBuilder, ScmSpec, TargetSpec, VariableSpec};
pub use value::{Domain, Value, MAX_SET_UNIVERSE};

use expr::EvalEnv;

/// Dense handle of an endogenous variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VarId(pub u32);

impl VarId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub domain: Domain,
}

/// Value index per exogenous variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Context(Vec<u32>);

impl Context {
    pub fn new(scm: &Scm, values: Vec<u32>) -> Result<Context> {
        if values.len() != scm.exogenous.len() {
            return Err(Error::Schema(format!(
                "context has {} values, model has {} exogenous variables",
                values.len(),
                scm.exogenous.len()
            )));
        }
        for (var, &v) in scm.exogenous.iter().zip(&values) {
            if v as usize >= var.domain.len() {
                return Err(Error::ValueOutsideDomain {
                    variable: var.name.clone(),
                    value: format!("#{v}"),
                });
            }
        }
        Ok(Context(values))
    }

    /// Context of an all-Boolean exogenous layer.
    pub fn from_bools(scm: &Scm, values: &[bool]) -> Result<Context> {
        Context::new(scm, values.iter().map(|&b| b as u32).collect())
    }

    pub fn values(&self) -> &[u32] {
        &self.0
    }
}

/// Value index per endogenous variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Assignment(pub Vec<u32>);

impl Assignment {
    #[inline]
    pub fn get(&self, var: VarId) -> u32 {
        self.0[var.index()]
    }

    pub fn values(&self) -> &[u32] {
        &self.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Target {
    Variable(VarId),
    Predicate(Expr),
}

/// Per-evaluation flip noise on Boolean assignments.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    pub rate: f64,
    /// Leave variables without endogenous parents noise-free.
    pub exempt_leaves: bool,
}

const UNSET: u32 = u32::MAX;

#[derive(Clone, Debug, PartialEq)]
pub struct Scm {
    endogenous: Vec<Variable>,
    exogenous: Vec<Variable>,
    equations: Vec<Expr>,
    parents: Vec<Vec<VarId>>,
    target: Target,
    order: Vec<VarId>,
    endo_domains: Vec<Domain>,
    exo_domains: Vec<Domain>,
    endo_index: HashMap<String, VarId>,
    exo_index: HashMap<String, usize>,
}

impl Scm {
    pub fn endogenous(&self) -> &[Variable] {
        &self.endogenous
    }

    pub fn exogenous(&self) -> &[Variable] {
        &self.exogenous
    }

    pub fn domains(&self) -> &[Domain] {
        &self.endo_domains
    }

    pub fn name(&self, var: VarId) -> &str {
        &self.endogenous[var.index()].name
    }

    pub fn names(&self) -> Vec<String> {
        self.endogenous.iter().map(|v| v.name.clone()).collect()
    }

    pub fn var(&self, name: &str) -> Result<VarId> {
        self.endo_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn exo(&self, name: &str) -> Result<usize> {
        self.exo_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn parents(&self, var: VarId) -> &[VarId] {
        &self.parents[var.index()]
    }

    pub fn parent_map(&self) -> &[Vec<VarId>] {
        &self.parents
    }

    pub fn equation(&self, var: VarId) -> &Expr {
        &self.equations[var.index()]
    }

    pub fn target(&self) -> &Target {
        &self.target
    }

    /// Endogenous variables the target is computed from directly.
    pub fn target_parents(&self) -> Vec<VarId> {
        match &self.target {
            Target::Variable(v) => self.parents(*v).to_vec(),
            Target::Predicate(e) => {
                let mut refs = Vec::new();
                e.endogenous_refs(&mut refs);
                refs.sort();
                refs.dedup();
                refs
            }
        }
    }

    /// Variables an identifier may intervene on: every endogenous variable
    /// except the target variable itself.
    pub fn search_variables(&self) -> Vec<VarId> {
        let excluded = match self.target {
            Target::Variable(v) => Some(v),
            Target::Predicate(_) => None,
        };
        (0..self.endogenous.len() as u32)
            .map(VarId)
            .filter(|v| Some(*v) != excluded)
            .collect()
    }

    /// Parent-before-child order, ties broken by ascending index.
    pub fn topological_order(&self) -> &[VarId] {
        &self.order
    }

    pub fn value_of(&self, var: VarId, index: u32) -> Value {
        self.endo_domains[var.index()].value(index)
    }

    pub fn index_of(&self, var: VarId, value: Value) -> Result<u32> {
        self.endo_domains[var.index()]
            .index_of(value)
            .ok_or_else(|| Error::ValueOutsideDomain {
                variable: self.name(var).to_string(),
                value: value.to_string(),
            })
    }

    fn check_intervention(&self, e: &Intervention) -> Result<()> {
        for &(var, val) in e.pairs() {
            let Some(variable) = self.endogenous.get(var.index()) else {
                return Err(Error::UnknownVariable(format!("#{}", var.0)));
            };
            if val as usize >= variable.domain.len() {
                return Err(Error::ValueOutsideDomain {
                    variable: variable.name.clone(),
                    value: format!("#{val}"),
                });
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, ctx: &Context, e: &Intervention) -> Result<Assignment> {
        self.check_intervention(e)?;
        let mut out = Vec::with_capacity(self.endogenous.len());
        self.evaluate_into(ctx.values(), e.pairs(), &mut out)?;
        Ok(Assignment(out))
    }

    pub fn actual_values(&self, ctx: &Context) -> Result<Assignment> {
        self.evaluate(ctx, &Intervention::empty())
    }

    /// Evaluates into a caller-owned buffer. `pairs` must already be valid.
    pub(crate) fn evaluate_into(
        &self,
        exo: &[u32],
        pairs: &[(VarId, u32)],
        out: &mut Vec<u32>,
    ) -> Result<()> {
        self.evaluate_impl(exo, pairs, out, |_, v| v)
    }

    /// Like [`Scm::evaluate_into`], recomputing only variables with a parent
    /// that differs from `base`, the unintervened values in the same context.
    pub(crate) fn evaluate_from(
        &self,
        base: &[u32],
        exo: &[u32],
        pairs: &[(VarId, u32)],
        out: &mut Vec<u32>,
    ) -> Result<()> {
        out.clear();
        out.extend_from_slice(base);
        for &(var, val) in pairs {
            out[var.index()] = val;
        }
        for &var in &self.order {
            let i = var.index();
            if !self.parents[i]
                .iter()
                .any(|p| out[p.index()] != base[p.index()])
                || pairs.binary_search_by_key(&var, |&(v, _)| v).is_ok()
            {
                continue;
            }
            out[i] = self.compute(i, exo, out)?;
        }
        Ok(())
    }

    fn compute(&self, i: usize, exo: &[u32], endo: &[u32]) -> Result<u32> {
        let env = EvalEnv {
            endo_domains: &self.endo_domains,
            exo_domains: &self.exo_domains,
            endo,
            exo,
        };
        let value = self.equations[i]
            .eval(&env)
            .map_err(|reason| Error::TypeMismatch {
                variable: self.endogenous[i].name.clone(),
                reason,
            })?;
        self.endo_domains[i]
            .index_of(value)
            .ok_or_else(|| Error::ValueOutsideDomain {
                variable: self.endogenous[i].name.clone(),
                value: value.to_string(),
            })
    }

    /// Evaluation where every computed Boolean assignment flips with
    /// probability `noise.rate`. Intervened variables are forced, not computed,
    /// and never flip.
    pub fn evaluate_noisy(
        &self,
        exo: &[u32],
        pairs: &[(VarId, u32)],
        noise: NoiseModel,
        rng: &mut dyn rand::RngCore,
        out: &mut Vec<u32>,
    ) -> Result<()> {
        self.evaluate_impl(exo, pairs, out, |var, v| {
            let flippable = self.endo_domains[var.index()].is_bool()
                && !(noise.exempt_leaves && self.parents[var.index()].is_empty());
            if flippable && noise.rate > 0.0 && rng.gen_bool(noise.rate) {
                1 - v
            } else {
                v
            }
        })
    }

    fn evaluate_impl(
        &self,
        exo: &[u32],
        pairs: &[(VarId, u32)],
        out: &mut Vec<u32>,
        mut post: impl FnMut(VarId, u32) -> u32,
    ) -> Result<()> {
        if exo.len() != self.exogenous.len() {
            return Err(Error::Schema("context does not match the model".into()));
        }
        out.clear();
        out.resize(self.endogenous.len(), UNSET);
        for &(var, val) in pairs {
            out[var.index()] = val;
        }
        for &var in &self.order {
            let i = var.index();
            if out[i] != UNSET {
                continue;
            }
            let index = self.compute(i, exo, out)?;
            out[i] = post(var, index);
        }
        Ok(())
    }

    /// Target predicate on a full assignment.
    pub fn target_holds(&self, values: &[u32], exo: &[u32]) -> Result<bool> {
        match &self.target {
            Target::Variable(v) => Ok(self.endo_domains[v.index()]
                .value(values[v.index()])
                .truthy()),
            Target::Predicate(e) => {
                let env = EvalEnv {
                    endo_domains: &self.endo_domains,
                    exo_domains: &self.exo_domains,
                    endo: values,
                    exo,
                };
                e.eval(&env)
                    .map(Value::truthy)
                    .map_err(|reason| Error::TypeMismatch {
                        variable: "target".into(),
                        reason,
                    })
            }
        }
    }

    /// Renders an intervention with variable names, e.g. `{ST=false, BH=false}`.
    pub fn describe(&self, e: &Intervention) -> String {
        let parts: Vec<String> = e
            .pairs()
            .iter()
            .map(|&(v, x)| format!("{}={}", self.name(v), self.value_of(v, x)))
            .collect();
        format!("{{{}}}", parts.join(", "))
    }
}

/// Kahn's algorithm over `parents`, always emitting the smallest ready index.
///
/// On a cycle, reports the smallest-index variable left unordered.
pub fn topological_order(parents: &[Vec<VarId>]) -> std::result::Result<Vec<VarId>, VarId> {
    let n = parents.len();
    let mut indegree = vec![0usize; n];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (child, ps) in parents.iter().enumerate() {
        for p in ps {
            indegree[child] += 1;
            children[p.index()].push(child);
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> =
        (0..n).filter(|&i| indegree[i] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(i)) = ready.pop() {
        order.push(VarId(i as u32));
        for &c in &children[i] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(Reverse(c));
            }
        }
    }
    if order.len() < n {
        let stuck = (0..n).find(|&i| indegree[i] > 0).unwrap_or(0);
        return Err(VarId(stuck as u32));
    }
    Ok(order)
}
