//! Structural equations as small expression trees over discrete values.

use serde::{Deserialize, Serialize};

use super::value::{Domain, Value};
use super::VarId;

/// Serialized form of an equation: builtin operators referring to variables by name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExprSpec {
    /// Endogenous variable.
    Var {
        name: String,
    },
    /// Exogenous variable.
    Exo {
        name: String,
    },
    Const {
        value: Value,
    },
    Identity {
        arg: Box<ExprSpec>,
    },
    Not {
        arg: Box<ExprSpec>,
    },
    And {
        args: Vec<ExprSpec>,
    },
    Or {
        args: Vec<ExprSpec>,
    },
    Union {
        args: Vec<ExprSpec>,
    },
    Intersection {
        args: Vec<ExprSpec>,
    },
    /// Smallest member of a set, or `default` when the set is empty.
    MinElse {
        arg: Box<ExprSpec>,
        default: i64,
    },
    /// True when the summed magnitude of the arguments exceeds `above`.
    Threshold {
        args: Vec<ExprSpec>,
        above: i64,
    },
    /// The set of positions `i` whose argument is truthy.
    IndicatorSet {
        args: Vec<ExprSpec>,
    },
}

impl ExprSpec {
    pub fn var(name: impl Into<String>) -> Self {
        ExprSpec::Var { name: name.into() }
    }

    pub fn exo(name: impl Into<String>) -> Self {
        ExprSpec::Exo { name: name.into() }
    }

    pub fn not(arg: ExprSpec) -> Self {
        ExprSpec::Not { arg: Box::new(arg) }
    }

    pub fn and(args: Vec<ExprSpec>) -> Self {
        ExprSpec::And { args }
    }

    pub fn or(args: Vec<ExprSpec>) -> Self {
        ExprSpec::Or { args }
    }
}

/// Resolved equation, variables replaced by indices.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Var(VarId),
    Exo(usize),
    Const(Value),
    Not(Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
    Union(Vec<Expr>),
    Intersection(Vec<Expr>),
    MinElse(Box<Expr>, i64),
    Threshold(Vec<Expr>, i64),
    IndicatorSet(Vec<Expr>),
}

pub(crate) struct EvalEnv<'a> {
    pub endo_domains: &'a [Domain],
    pub exo_domains: &'a [Domain],
    pub endo: &'a [u32],
    pub exo: &'a [u32],
}

impl Expr {
    pub(crate) fn eval(&self, env: &EvalEnv<'_>) -> Result<Value, String> {
        Ok(match self {
            Expr::Var(v) => env.endo_domains[v.index()].value(env.endo[v.index()]),
            Expr::Exo(i) => env.exo_domains[*i].value(env.exo[*i]),
            Expr::Const(c) => *c,
            Expr::Not(a) => Value::Bool(!a.eval(env)?.truthy()),
            Expr::And(args) => {
                for a in args {
                    if !a.eval(env)?.truthy() {
                        return Ok(Value::Bool(false));
                    }
                }
                Value::Bool(true)
            }
            Expr::Or(args) => {
                for a in args {
                    if a.eval(env)?.truthy() {
                        return Ok(Value::Bool(true));
                    }
                }
                Value::Bool(false)
            }
            Expr::Union(args) => {
                let mut m = 0u64;
                for a in args {
                    m |= as_set(a.eval(env)?)?;
                }
                Value::Set(m)
            }
            Expr::Intersection(args) => {
                let mut m = u64::MAX;
                for a in args {
                    m &= as_set(a.eval(env)?)?;
                }
                Value::Set(if args.is_empty() { 0 } else { m })
            }
            Expr::MinElse(a, default) => {
                let m = as_set(a.eval(env)?)?;
                if m == 0 {
                    Value::Int(*default)
                } else {
                    Value::Int(m.trailing_zeros() as i64)
                }
            }
            Expr::Threshold(args, above) => {
                let mut total = 0i64;
                for a in args {
                    total += a.eval(env)?.magnitude();
                }
                Value::Bool(total > *above)
            }
            Expr::IndicatorSet(args) => {
                if args.len() > 64 {
                    return Err("indicator set over more than 64 arguments".into());
                }
                let mut m = 0u64;
                for (i, a) in args.iter().enumerate() {
                    if a.eval(env)?.truthy() {
                        m |= 1u64 << i;
                    }
                }
                Value::Set(m)
            }
        })
    }

    /// Endogenous variables referenced by this expression.
    pub fn endogenous_refs(&self, out: &mut Vec<VarId>) {
        match self {
            Expr::Var(v) => out.push(*v),
            Expr::Exo(_) | Expr::Const(_) => {}
            Expr::Not(a) | Expr::MinElse(a, _) => a.endogenous_refs(out),
            Expr::And(args)
            | Expr::Or(args)
            | Expr::Union(args)
            | Expr::Intersection(args)
            | Expr::Threshold(args, _)
            | Expr::IndicatorSet(args) => args.iter().for_each(|a| a.endogenous_refs(out)),
        }
    }

    pub(crate) fn to_spec(&self, endo_names: &[String], exo_names: &[String]) -> ExprSpec {
        let many = |args: &[Expr]| -> Vec<ExprSpec> {
            args.iter()
                .map(|a| a.to_spec(endo_names, exo_names))
                .collect()
        };
        match self {
            Expr::Var(v) => ExprSpec::Var {
                name: endo_names[v.index()].clone(),
            },
            Expr::Exo(i) => ExprSpec::Exo {
                name: exo_names[*i].clone(),
            },
            Expr::Const(value) => ExprSpec::Const { value: *value },
            Expr::Not(a) => ExprSpec::Not {
                arg: Box::new(a.to_spec(endo_names, exo_names)),
            },
            Expr::And(args) => ExprSpec::And { args: many(args) },
            Expr::Or(args) => ExprSpec::Or { args: many(args) },
            Expr::Union(args) => ExprSpec::Union { args: many(args) },
            Expr::Intersection(args) => ExprSpec::Intersection { args: many(args) },
            Expr::MinElse(a, default) => ExprSpec::MinElse {
                arg: Box::new(a.to_spec(endo_names, exo_names)),
                default: *default,
            },
            Expr::Threshold(args, above) => ExprSpec::Threshold {
                args: many(args),
                above: *above,
            },
            Expr::IndicatorSet(args) => ExprSpec::IndicatorSet { args: many(args) },
        }
    }
}

fn as_set(v: Value) -> Result<u64, String> {
    match v {
        Value::Set(m) => Ok(m),
        other => Err(format!("expected a set, got {other}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_json_shape() {
        let spec = ExprSpec::and(vec![
            ExprSpec::var("BT"),
            ExprSpec::not(ExprSpec::var("SH")),
        ]);
        let json = serde_json::to_value(&spec).unwrap();
        assert_eq!(
            json,
            serde_json::json!({
                "op": "and",
                "args": [
                    {"op": "var", "name": "BT"},
                    {"op": "not", "arg": {"op": "var", "name": "SH"}}
                ]
            })
        );
        let back: ExprSpec = serde_json::from_value(json).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn min_else_and_threshold() {
        let env_domains = [Domain::Subsets { universe: 3 }];
        let endo = [0b101u32];
        let env = EvalEnv {
            endo_domains: &env_domains,
            exo_domains: &[],
            endo: &endo,
            exo: &[],
        };
        let min = Expr::MinElse(Box::new(Expr::Var(VarId(0))), -1);
        assert_eq!(min.eval(&env).unwrap(), Value::Int(0));
        let empty = Expr::MinElse(Box::new(Expr::Const(Value::Set(0))), -1);
        assert_eq!(empty.eval(&env).unwrap(), Value::Int(-1));
        let gt = Expr::Threshold(vec![Expr::Const(Value::Int(-1))], -1);
        assert_eq!(gt.eval(&env).unwrap(), Value::Bool(false));
        let bad = Expr::Union(vec![Expr::Const(Value::Int(3))]);
        assert!(bad.eval(&env).is_err());
    }
}
