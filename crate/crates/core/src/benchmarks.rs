//! Benchmark models: rock throwing and the "steal master key" family.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::intervention::Intervention;
use crate::oracle::FnOracle;
use crate::scm::{Context, Domain, ExprSpec, NoiseModel, Scm, ScmBuilder, TargetSpec, VarId};
use crate::search::SearchSpace;

/// Largest attacker count for set-valued domains.
pub const MAX_SET_ATTACKERS: usize = 12;

/// Noise level used by the noisy benchmark unless told otherwise.
pub const DEFAULT_NOISE: f64 = 0.01;

const LEAVES: [&str; 6] = ["FS", "FN", "FF", "FDB", "A", "AD"];

fn exo_name(leaf: &str, i: usize) -> String {
    format!("{}_{i}", leaf.to_lowercase())
}

/// Suzy and Billy throw rocks at a bottle; Suzy's rock arrives first.
pub fn rock_throwing() -> Scm {
    let mut b = ScmBuilder::new();
    b.exogenous("st", Domain::Bool)
        .exogenous("bt", Domain::Bool)
        .variable("ST", Domain::Bool, ExprSpec::exo("st"))
        .variable("BT", Domain::Bool, ExprSpec::exo("bt"))
        .variable("SH", Domain::Bool, ExprSpec::var("ST"))
        .variable(
            "BH",
            Domain::Bool,
            ExprSpec::and(vec![
                ExprSpec::var("BT"),
                ExprSpec::not(ExprSpec::var("SH")),
            ]),
        )
        .variable(
            "BS",
            Domain::Bool,
            ExprSpec::or(vec![ExprSpec::var("BH"), ExprSpec::var("SH")]),
        )
        .target(TargetSpec::Variable("BS".into()));
    b.build().expect("rock throwing model is valid")
}

fn smk_exogenous(b: &mut ScmBuilder, k: usize) {
    for i in 1..=k {
        for leaf in LEAVES {
            b.exogenous(exo_name(leaf, i), Domain::Bool);
        }
    }
}

/// Boolean "steal master key" model with `k` attackers.
///
/// Attacker `i` decrypts the key when it has the passphrase and the key and
/// no earlier attacker decrypted it; stealing works the same way through the
/// key management service.
pub fn smk_base(k: usize) -> Scm {
    assert!(k >= 1, "at least one attacker");
    let v = |n: &str, i: usize| ExprSpec::var(format!("{n}{i}"));
    let mut b = ScmBuilder::new();
    smk_exogenous(&mut b, k);
    b.variable(
        "SMK",
        Domain::Bool,
        ExprSpec::or(vec![ExprSpec::var("DK"), ExprSpec::var("SD")]),
    );
    b.variable(
        "DK",
        Domain::Bool,
        ExprSpec::or((1..=k).map(|i| v("DK", i)).collect()),
    );
    b.variable(
        "SD",
        Domain::Bool,
        ExprSpec::or((1..=k).map(|i| v("SD", i)).collect()),
    );
    for i in 1..=k {
        let mut args = vec![v("GP", i), v("GK", i)];
        args.extend((1..i).map(|j| ExprSpec::not(v("DK", j))));
        b.variable(format!("DK{i}"), Domain::Bool, ExprSpec::and(args));
    }
    for i in 1..=k {
        let mut args = vec![v("KMS", i)];
        args.extend((1..i).map(|j| ExprSpec::not(v("SD", j))));
        b.variable(format!("SD{i}"), Domain::Bool, ExprSpec::and(args));
    }
    for i in 1..=k {
        b.variable(
            format!("GP{i}"),
            Domain::Bool,
            ExprSpec::or(vec![v("FS", i), v("FN", i)]),
        );
    }
    for i in 1..=k {
        b.variable(
            format!("GK{i}"),
            Domain::Bool,
            ExprSpec::or(vec![v("FF", i), v("FDB", i)]),
        );
    }
    for i in 1..=k {
        b.variable(
            format!("KMS{i}"),
            Domain::Bool,
            ExprSpec::and(vec![v("A", i), v("AD", i)]),
        );
    }
    for leaf in LEAVES {
        for i in 1..=k {
            b.variable(
                format!("{leaf}{i}"),
                Domain::Bool,
                ExprSpec::exo(exo_name(leaf, i)),
            );
        }
    }
    b.target(TargetSpec::Variable("SMK".into()));
    b.build().expect("smk model is valid")
}

/// Set-valued variant: one variable per action listing the attackers
/// (numbered from 0) who performed it; `DK` and `SD` hold the first
/// successful attacker or -1.
pub fn smk_nonboolean(k: usize) -> Result<Scm> {
    if k > MAX_SET_ATTACKERS {
        return Err(Error::KTooLargeForSetDomains {
            k,
            limit: MAX_SET_ATTACKERS,
        });
    }
    if k == 0 {
        return Err(Error::InvalidConfig("at least one attacker".into()));
    }
    let set = Domain::Subsets { universe: k as u32 };
    let index = Domain::IntRange {
        min: -1,
        max: k as i64 - 1,
    };
    let var = |name: &str| ExprSpec::var(name);
    let first = |arg: ExprSpec| ExprSpec::MinElse {
        arg: Box::new(arg),
        default: -1,
    };
    let some = |name: &str| ExprSpec::Threshold {
        args: vec![ExprSpec::var(name)],
        above: -1,
    };
    let mut b = ScmBuilder::new();
    smk_exogenous(&mut b, k);
    b.variable(
        "SMK",
        Domain::Bool,
        ExprSpec::or(vec![some("DK"), some("SD")]),
    );
    b.variable(
        "DK",
        index.clone(),
        first(ExprSpec::Intersection {
            args: vec![var("GP"), var("GK")],
        }),
    );
    b.variable("SD", index, first(var("KMS")));
    b.variable(
        "GP",
        set.clone(),
        ExprSpec::Union {
            args: vec![var("FS"), var("FN")],
        },
    );
    b.variable(
        "GK",
        set.clone(),
        ExprSpec::Union {
            args: vec![var("FF"), var("FDB")],
        },
    );
    b.variable(
        "KMS",
        set.clone(),
        ExprSpec::Intersection {
            args: vec![var("A"), var("AD")],
        },
    );
    for leaf in LEAVES {
        b.variable(
            leaf,
            set.clone(),
            ExprSpec::IndicatorSet {
                args: (1..=k).map(|i| ExprSpec::exo(exo_name(leaf, i))).collect(),
            },
        );
    }
    b.target(TargetSpec::Variable("SMK".into()));
    b.build()
}

/// The Boolean model behind an oracle that only exposes the `6k` leaves.
#[derive(Clone, Debug)]
pub struct SmkBlackBox {
    scm: Scm,
    leaves: Vec<VarId>,
}

pub fn smk_blackbox(k: usize) -> SmkBlackBox {
    let scm = smk_base(k);
    let mut leaves = Vec::with_capacity(6 * k);
    for i in 1..=k {
        for leaf in LEAVES {
            leaves.push(scm.var(&format!("{leaf}{i}")).unwrap());
        }
    }
    SmkBlackBox { scm, leaves }
}

impl SmkBlackBox {
    pub fn names(&self) -> Vec<String> {
        self.leaves
            .iter()
            .map(|&v| self.scm.name(v).to_string())
            .collect()
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    /// Exogenous layout, shared with the Boolean model.
    pub fn model(&self) -> &Scm {
        &self.scm
    }

    /// Search space over the leaves; no graph is exposed.
    pub fn space(&self, ctx: &Context) -> Result<SearchSpace> {
        let actual = self.scm.actual_values(ctx)?;
        let n = self.leaves.len();
        SearchSpace::new(
            self.names(),
            vec![Domain::Bool; n],
            self.leaves.iter().map(|&v| actual.get(v)).collect(),
            (0..n as u32).map(VarId).collect(),
        )
    }

    fn translate(&self, e: &Intervention) -> Result<Intervention> {
        Intervention::from_pairs(e.pairs().iter().map(|&(v, x)| (self.leaves[v.index()], x)))
    }

    /// Target value under an intervention on leaves.
    pub fn query(&self, ctx: &Context, e: &Intervention) -> Result<bool> {
        if let Some(&(v, _)) = e
            .pairs()
            .iter()
            .find(|(v, _)| v.index() >= self.leaves.len())
        {
            return Err(Error::UnknownVariable(format!("#{}", v.0)));
        }
        let state = self.scm.evaluate(ctx, &self.translate(e)?)?;
        self.scm.target_holds(state.values(), ctx.values())
    }

    pub fn oracle<'a>(
        &'a self,
        ctx: &'a Context,
    ) -> Result<FnOracle<impl Fn(&Intervention) -> Result<bool> + 'a>> {
        let space = self.space(ctx)?;
        if !self.query(ctx, &Intervention::empty())? {
            return Err(Error::TargetNotActual);
        }
        Ok(FnOracle::new(
            move |e: &Intervention| self.query(ctx, e),
            space.v_star,
        ))
    }
}

/// Boolean model plus flip noise on every computed Boolean assignment.
pub fn smk_noisy(k: usize, rate: f64) -> Result<(Scm, NoiseModel)> {
    if !(0.0..0.5).contains(&rate) {
        return Err(Error::InvalidConfig(
            "noise level must lie in [0, 0.5)".into(),
        ));
    }
    Ok((
        smk_base(k),
        NoiseModel {
            rate,
            exempt_leaves: false,
        },
    ))
}

/// `n` distinct contexts over Boolean exogenous variables, half of them true
/// (rounded either way when the count is odd), each making the target hold.
pub fn sample_contexts(scm: &Scm, n: usize, seed: u64) -> Result<Vec<Context>> {
    sample_contexts_capped(scm, n, seed, 1000 + 1000 * n)
}

pub fn sample_contexts_capped(
    scm: &Scm,
    n: usize,
    seed: u64,
    max_attempts: usize,
) -> Result<Vec<Context>> {
    let m = scm.exogenous().len();
    if scm.exogenous().iter().any(|v| !v.domain.is_bool()) {
        return Err(Error::InvalidConfig(
            "context sampling needs Boolean exogenous variables".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0;
    let mut state = Vec::new();
    while out.len() < n {
        if attempts == max_attempts {
            return Err(Error::SamplingExhausted {
                found: out.len(),
                requested: n,
                attempts,
            });
        }
        attempts += 1;
        let trues = if m % 2 == 0 || rng.gen_bool(0.5) {
            m / 2
        } else {
            m.div_ceil(2)
        };
        let mut values = vec![0u32; m];
        for i in sample(&mut rng, m, trues) {
            values[i] = 1;
        }
        if seen.contains(&values) {
            continue;
        }
        scm.evaluate_into(&values, &[], &mut state)?;
        if !scm.target_holds(&state, &values)? {
            continue;
        }
        seen.insert(values.clone());
        out.push(Context::new(scm, values)?);
    }
    Ok(out)
}

/// Three attackers where only the second decrypts the key:
/// the first finds the passphrase in the script and has access, the second
/// finds everything and can attach a debugger, the third finds the script
/// and the database.
pub fn smk_showcase_context(scm: &Scm) -> Result<Context> {
    if scm.exogenous().len() != 18 {
        return Err(Error::InvalidConfig(
            "the showcase context is defined for three attackers".into(),
        ));
    }
    let truths: [[u32; 6]; 3] = [[1, 0, 0, 0, 1, 0], [1, 1, 1, 1, 0, 1], [1, 0, 0, 1, 0, 0]];
    let mut values = vec![0u32; 18];
    for (i, row) in truths.iter().enumerate() {
        for (leaf, &x) in LEAVES.iter().zip(row) {
            values[scm.exo(&exo_name(leaf, i + 1))?] = x;
        }
    }
    Context::new(scm, values)
}

/// Builtin model names accepted on the command line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Builtin {
    RockThrowing,
    Smk(usize),
    SmkNonboolean(usize),
    SmkBlackbox(usize),
    SmkNoisy(usize, f64),
}

impl FromStr for Builtin {
    type Err = Error;

    /// `rock-throwing`, `smk:K`, `smk-nonboolean:K`, `smk-blackbox:K`,
    /// `smk-noisy:K` or `smk-noisy:K:RATE`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("unknown builtin model `{s}`"));
        if s == "rock-throwing" {
            return Ok(Builtin::RockThrowing);
        }
        let mut parts = s.split(':');
        let kind = parts.next().ok_or_else(bad)?;
        let k: usize = parts.next().and_then(|k| k.parse().ok()).ok_or_else(bad)?;
        if k == 0 {
            return Err(Error::InvalidConfig("at least one attacker".into()));
        }
        let rate = parts
            .next()
            .map(|r| r.parse::<f64>().map_err(|_| bad()))
            .transpose()?;
        if parts.next().is_some() || (rate.is_some() && kind != "smk-noisy") {
            return Err(bad());
        }
        match kind {
            "smk" => Ok(Builtin::Smk(k)),
            "smk-nonboolean" => Ok(Builtin::SmkNonboolean(k)),
            "smk-blackbox" => Ok(Builtin::SmkBlackbox(k)),
            "smk-noisy" => Ok(Builtin::SmkNoisy(k, rate.unwrap_or(DEFAULT_NOISE))),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Builtin::RockThrowing => f.write_str("rock-throwing"),
            Builtin::Smk(k) => write!(f, "smk:{k}"),
            Builtin::SmkNonboolean(k) => write!(f, "smk-nonboolean:{k}"),
            Builtin::SmkBlackbox(k) => write!(f, "smk-blackbox:{k}"),
            Builtin::SmkNoisy(k, r) => write!(f, "smk-noisy:{k}:{r}"),
        }
    }
}

impl Builtin {
    /// The explicit model: the Boolean one for the black-box and noisy
    /// variants.
    pub fn scm(&self) -> Result<Scm> {
        Ok(match *self {
            Builtin::RockThrowing => rock_throwing(),
            Builtin::Smk(k) | Builtin::SmkBlackbox(k) | Builtin::SmkNoisy(k, _) => smk_base(k),
            Builtin::SmkNonboolean(k) => smk_nonboolean(k)?,
        })
    }
}

/// Reads the `SD` and `DK` facts of a Boolean SMK world.
pub fn smk_facts(scm: &Scm, ctx: &Context) -> Result<(bool, bool)> {
    let v = scm.actual_values(ctx)?;
    let get = |n: &str| -> Result<bool> {
        let id = scm.var(n)?;
        Ok(scm.value_of(id, v.get(id)).truthy())
    };
    Ok((get("SD")?, get("DK")?))
}
