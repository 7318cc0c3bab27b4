#![allow(dead_code)]

use actcause::exact;
use actcause::intervention::is_subset;
use actcause::search::CauseResult;
use actcause::{Oracle, VarId};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The witness of every cause makes the target fail.
pub fn ac2_violations(oracle: &dyn Oracle, v_star: &[u32], causes: &[CauseResult]) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    causes
        .iter()
        .filter(|c| {
            let counterfactual = c
                .cause_vars
                .iter()
                .zip(&c.counterfactual_values)
                .all(|(v, &x)| x != v_star[v.index()]);
            !counterfactual
                || c.cause_vars.is_empty()
                || oracle.query(&c.witness(v_star), &mut rng).unwrap()
        })
        .count()
}

/// No cause set equals or contains another.
pub fn mutually_minimal(causes: &[CauseResult]) -> bool {
    for (i, a) in causes.iter().enumerate() {
        for (j, b) in causes.iter().enumerate() {
            if i != j && is_subset(&a.cause_vars, &b.cause_vars) {
                return false;
            }
        }
    }
    true
}

pub fn sets(causes: &[CauseResult]) -> Vec<Vec<VarId>> {
    exact::cause_sets(causes)
}

use actcause::scm::{ExprSpec, ScmBuilder, TargetSpec};
use actcause::{Context, Domain, Scm};
use rand::Rng;

/// Random Boolean model: `n` endogenous variables in a chain order, each a
/// random gate over up to three earlier variables or its own exogenous
/// input. The last variable is the target.
pub fn random_boolean_scm(seed: u64, n: usize) -> Scm {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = ScmBuilder::new();
    for i in 0..n {
        b.exogenous(format!("u{i}"), Domain::Bool);
    }
    for i in 0..n {
        let mut args = vec![ExprSpec::exo(format!("u{i}"))];
        if i > 0 {
            let parents = rng.gen_range(1..=3.min(i));
            args.clear();
            for _ in 0..parents {
                let p = rng.gen_range(0..i);
                let mut e = ExprSpec::var(format!("V{p}"));
                if rng.gen_bool(0.3) {
                    e = ExprSpec::not(e);
                }
                args.push(e);
            }
            if rng.gen_bool(0.3) {
                args.push(ExprSpec::exo(format!("u{i}")));
            }
        }
        let eq = match (args.len(), rng.gen_range(0..2)) {
            (1, _) => args.pop().unwrap(),
            (_, 0) => ExprSpec::and(args),
            _ => ExprSpec::or(args),
        };
        b.variable(format!("V{i}"), Domain::Bool, eq);
    }
    b.target(TargetSpec::Variable(format!("V{}", n - 1)));
    b.build().expect("generated model is valid")
}

/// A context in which the target holds, if one of a few random draws gives it.
pub fn satisfying_context(scm: &Scm, seed: u64) -> Option<Context> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let m = scm.exogenous().len();
    for _ in 0..64 {
        let values: Vec<bool> = (0..m).map(|_| rng.gen_bool(0.5)).collect();
        let ctx = Context::from_bools(scm, &values).ok()?;
        let actual = scm.actual_values(&ctx).ok()?;
        if scm.target_holds(actual.values(), ctx.values()).ok()? {
            return Some(ctx);
        }
    }
    None
}
