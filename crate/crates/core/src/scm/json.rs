//! Serialized model form and the builder used by the generators.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::expr::{Expr, ExprSpec};
use super::value::Domain;
use super::{topological_order, Scm, Target, VarId, Variable};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableSpec {
    pub name: String,
    pub domain: Domain,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetSpec {
    Variable(String),
    Predicate(ExprSpec),
}

/// JSON document describing a model.
///
/// `edges` maps a variable to its parent list. Variables missing from it get
/// the endogenous variables their equation mentions; declared lists may be
/// larger than that but never smaller.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScmSpec {
    pub variables: Vec<VariableSpec>,
    #[serde(default)]
    pub exogenous: Vec<VariableSpec>,
    #[serde(default)]
    pub edges: BTreeMap<String, Vec<String>>,
    pub equations: BTreeMap<String, ExprSpec>,
    pub target: TargetSpec,
}

fn index_names<'a>(vars: impl Iterator<Item = &'a str>) -> Result<HashMap<String, usize>> {
    let mut map = HashMap::new();
    for (i, name) in vars.enumerate() {
        if map.insert(name.to_string(), i).is_some() {
            return Err(Error::DuplicateVariable(name.to_string()));
        }
    }
    Ok(map)
}

struct Resolver<'a> {
    endo: &'a HashMap<String, VarId>,
    exo: &'a HashMap<String, usize>,
}

impl Resolver<'_> {
    fn resolve(&self, spec: &ExprSpec) -> Result<Expr> {
        let many = |args: &[ExprSpec]| -> Result<Vec<Expr>> {
            args.iter().map(|a| self.resolve(a)).collect()
        };
        Ok(match spec {
            ExprSpec::Var { name } => Expr::Var(
                *self
                    .endo
                    .get(name)
                    .ok_or_else(|| Error::UnknownVariable(name.clone()))?,
            ),
            ExprSpec::Exo { name } => Expr::Exo(
                *self
                    .exo
                    .get(name)
                    .ok_or_else(|| Error::UnknownVariable(name.clone()))?,
            ),
            ExprSpec::Const { value } => Expr::Const(*value),
            ExprSpec::Identity { arg } => self.resolve(arg)?,
            ExprSpec::Not { arg } => Expr::Not(Box::new(self.resolve(arg)?)),
            ExprSpec::And { args } => Expr::And(many(args)?),
            ExprSpec::Or { args } => Expr::Or(many(args)?),
            ExprSpec::Union { args } => Expr::Union(many(args)?),
            ExprSpec::Intersection { args } => Expr::Intersection(many(args)?),
            ExprSpec::MinElse { arg, default } => {
                Expr::MinElse(Box::new(self.resolve(arg)?), *default)
            }
            ExprSpec::Threshold { args, above } => Expr::Threshold(many(args)?, *above),
            ExprSpec::IndicatorSet { args } => Expr::IndicatorSet(many(args)?),
        })
    }
}

impl Scm {
    pub fn from_spec(spec: &ScmSpec) -> Result<Scm> {
        if spec.variables.is_empty() {
            return Err(Error::Schema(
                "model declares no endogenous variables".into(),
            ));
        }
        let endo_pos = index_names(spec.variables.iter().map(|v| v.name.as_str()))?;
        let exo_index = index_names(spec.exogenous.iter().map(|v| v.name.as_str()))?;
        if let Some(name) = spec
            .exogenous
            .iter()
            .find(|v| endo_pos.contains_key(&v.name))
        {
            return Err(Error::DuplicateVariable(name.name.clone()));
        }
        let endo_index: HashMap<String, VarId> = endo_pos
            .into_iter()
            .map(|(k, i)| (k, VarId(i as u32)))
            .collect();

        for name in spec.equations.keys().chain(spec.edges.keys()) {
            if !endo_index.contains_key(name) {
                return Err(Error::UnknownVariable(name.clone()));
            }
        }

        let resolver = Resolver {
            endo: &endo_index,
            exo: &exo_index,
        };
        let mut equations = Vec::with_capacity(spec.variables.len());
        let mut parents = Vec::with_capacity(spec.variables.len());
        for var in &spec.variables {
            let eq = spec
                .equations
                .get(&var.name)
                .ok_or_else(|| Error::Schema(format!("no equation for `{}`", var.name)))?;
            let expr = resolver.resolve(eq)?;
            let mut refs = Vec::new();
            expr.endogenous_refs(&mut refs);
            refs.sort_unstable();
            refs.dedup();
            let ps = match spec.edges.get(&var.name) {
                None => refs,
                Some(declared) => {
                    let mut ps = declared
                        .iter()
                        .map(|p| {
                            endo_index
                                .get(p)
                                .copied()
                                .ok_or_else(|| Error::UnknownVariable(p.clone()))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    ps.sort_unstable();
                    ps.dedup();
                    if let Some(missing) = refs.iter().find(|r| ps.binary_search(r).is_err()) {
                        return Err(Error::Schema(format!(
                            "equation for `{}` reads `{}`, which is not among its declared parents",
                            var.name,
                            spec.variables[missing.index()].name
                        )));
                    }
                    ps
                }
            };
            equations.push(expr);
            parents.push(ps);
        }

        let order = topological_order(&parents).map_err(|v| Error::CycleDetected {
            variable: spec.variables[v.index()].name.clone(),
        })?;

        let target = match &spec.target {
            TargetSpec::Variable(name) => Target::Variable(
                *endo_index
                    .get(name)
                    .ok_or_else(|| Error::UnknownVariable(name.clone()))?,
            ),
            TargetSpec::Predicate(e) => Target::Predicate(resolver.resolve(e)?),
        };

        let endogenous: Vec<Variable> = spec
            .variables
            .iter()
            .map(|v| Variable {
                name: v.name.clone(),
                domain: v.domain.clone(),
            })
            .collect();
        let exogenous: Vec<Variable> = spec
            .exogenous
            .iter()
            .map(|v| Variable {
                name: v.name.clone(),
                domain: v.domain.clone(),
            })
            .collect();
        Ok(Scm {
            endo_domains: endogenous.iter().map(|v| v.domain.clone()).collect(),
            exo_domains: exogenous.iter().map(|v| v.domain.clone()).collect(),
            endogenous,
            exogenous,
            equations,
            parents,
            target,
            order,
            endo_index,
            exo_index,
        })
    }

    pub fn to_spec(&self) -> ScmSpec {
        let endo_names = self.names();
        let exo_names: Vec<String> = self.exogenous.iter().map(|v| v.name.clone()).collect();
        let to_spec = |v: &Variable| VariableSpec {
            name: v.name.clone(),
            domain: v.domain.clone(),
        };
        ScmSpec {
            variables: self.endogenous.iter().map(to_spec).collect(),
            exogenous: self.exogenous.iter().map(to_spec).collect(),
            edges: self
                .parents
                .iter()
                .enumerate()
                .map(|(i, ps)| {
                    (
                        endo_names[i].clone(),
                        ps.iter().map(|p| endo_names[p.index()].clone()).collect(),
                    )
                })
                .collect(),
            equations: self
                .equations
                .iter()
                .enumerate()
                .map(|(i, e)| (endo_names[i].clone(), e.to_spec(&endo_names, &exo_names)))
                .collect(),
            target: match &self.target {
                Target::Variable(v) => TargetSpec::Variable(endo_names[v.index()].clone()),
                Target::Predicate(e) => TargetSpec::Predicate(e.to_spec(&endo_names, &exo_names)),
            },
        }
    }

    pub fn from_json(text: &str) -> Result<Scm> {
        let spec: ScmSpec = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        Scm::from_spec(&spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_spec()).expect("model serializes")
    }
}

/// Incremental construction of a model, mostly for generators.
#[derive(Default)]
pub struct ScmBuilder {
    variables: Vec<VariableSpec>,
    exogenous: Vec<VariableSpec>,
    equations: BTreeMap<String, ExprSpec>,
    target: Option<TargetSpec>,
}

impl ScmBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn exogenous(&mut self, name: impl Into<String>, domain: Domain) -> &mut Self {
        self.exogenous.push(VariableSpec {
            name: name.into(),
            domain,
        });
        self
    }

    pub fn variable(&mut self, name: impl Into<String>, domain: Domain, eq: ExprSpec) -> &mut Self {
        let name = name.into();
        self.equations.insert(name.clone(), eq);
        self.variables.push(VariableSpec { name, domain });
        self
    }

    pub fn target(&mut self, target: TargetSpec) -> &mut Self {
        self.target = Some(target);
        self
    }

    pub fn spec(&self) -> Result<ScmSpec> {
        Ok(ScmSpec {
            variables: self.variables.clone(),
            exogenous: self.exogenous.clone(),
            edges: BTreeMap::new(),
            equations: self.equations.clone(),
            target: self
                .target
                .clone()
                .ok_or_else(|| Error::Schema("no target".into()))?,
        })
    }

    pub fn build(&self) -> Result<Scm> {
        Scm::from_spec(&self.spec()?)
    }
}
