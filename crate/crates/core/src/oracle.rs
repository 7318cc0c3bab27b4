//! Query access to the target predicate under interventions.

use rand::RngCore;

use crate::error::{Error, Result};
use crate::intervention::Intervention;
use crate::scm::{Context, NoiseModel, Scm, VarId};

/// Answers whether the target holds under an intervention.
///
/// Deterministic oracles ignore `rng`; stochastic ones return one Bernoulli
/// sample per call.
pub trait Oracle {
    fn query(&self, e: &Intervention, rng: &mut dyn RngCore) -> Result<bool>;

    /// Like [`Oracle::query`], also writing the post-intervention value of
    /// every variable into `state`, indexed by variable id.
    fn query_observe(
        &self,
        e: &Intervention,
        rng: &mut dyn RngCore,
        state: &mut Vec<u32>,
    ) -> Result<bool>;

    fn is_stochastic(&self) -> bool {
        false
    }

    /// False when the observed state is only the actual state overlaid with
    /// the intervention, i.e. effects on other variables are hidden.
    fn observes_downstream(&self) -> bool {
        true
    }
}

/// Oracle backed by a model evaluated in a fixed context.
pub struct ScmOracle<'a> {
    scm: &'a Scm,
    exo: Vec<u32>,
    actual: Vec<u32>,
}

impl<'a> ScmOracle<'a> {
    /// Fails with [`Error::TargetNotActual`] when the target is false in the
    /// unintervened world.
    pub fn new(scm: &'a Scm, ctx: &Context) -> Result<Self> {
        let actual = scm.actual_values(ctx)?.values().to_vec();
        if !scm.target_holds(&actual, ctx.values())? {
            return Err(Error::TargetNotActual);
        }
        Ok(ScmOracle {
            scm,
            exo: ctx.values().to_vec(),
            actual,
        })
    }

    fn eval(&self, e: &Intervention, state: &mut Vec<u32>) -> Result<bool> {
        self.scm
            .evaluate_from(&self.actual, &self.exo, e.pairs(), state)?;
        self.scm.target_holds(state, &self.exo)
    }
}

impl Oracle for ScmOracle<'_> {
    fn query(&self, e: &Intervention, _rng: &mut dyn RngCore) -> Result<bool> {
        let mut state = Vec::with_capacity(self.scm.endogenous().len());
        self.eval(e, &mut state)
    }

    fn query_observe(
        &self,
        e: &Intervention,
        _rng: &mut dyn RngCore,
        state: &mut Vec<u32>,
    ) -> Result<bool> {
        self.eval(e, state)
    }
}

/// Oracle over a model whose Boolean assignments flip at random.
pub struct NoisyScmOracle<'a> {
    scm: &'a Scm,
    exo: Vec<u32>,
    noise: NoiseModel,
}

impl<'a> NoisyScmOracle<'a> {
    /// The target must hold in the noiseless actual world.
    pub fn new(scm: &'a Scm, ctx: &Context, noise: NoiseModel) -> Result<Self> {
        ScmOracle::new(scm, ctx)?;
        Ok(NoisyScmOracle {
            scm,
            exo: ctx.values().to_vec(),
            noise,
        })
    }
}

impl Oracle for NoisyScmOracle<'_> {
    fn query(&self, e: &Intervention, rng: &mut dyn RngCore) -> Result<bool> {
        let mut state = Vec::with_capacity(self.scm.endogenous().len());
        self.query_observe(e, rng, &mut state)
    }

    fn query_observe(
        &self,
        e: &Intervention,
        rng: &mut dyn RngCore,
        state: &mut Vec<u32>,
    ) -> Result<bool> {
        self.scm
            .evaluate_noisy(&self.exo, e.pairs(), self.noise, rng, state)?;
        self.scm.target_holds(state, &self.exo)
    }

    fn is_stochastic(&self) -> bool {
        self.noise.rate > 0.0
    }
}

/// Adds a fixed contingency, held at actual values, to every query.
/// Variables the query already sets keep the query's value.
pub struct PinnedOracle<'a> {
    inner: &'a dyn Oracle,
    pins: Vec<VarId>,
    v_star: &'a [u32],
}

impl<'a> PinnedOracle<'a> {
    pub fn new(inner: &'a dyn Oracle, pins: Vec<VarId>, v_star: &'a [u32]) -> Self {
        PinnedOracle {
            inner,
            pins,
            v_star,
        }
    }
}

impl Oracle for PinnedOracle<'_> {
    fn query(&self, e: &Intervention, rng: &mut dyn RngCore) -> Result<bool> {
        self.inner.query(&e.pinned(&self.pins, self.v_star), rng)
    }

    fn query_observe(
        &self,
        e: &Intervention,
        rng: &mut dyn RngCore,
        state: &mut Vec<u32>,
    ) -> Result<bool> {
        self.inner
            .query_observe(&e.pinned(&self.pins, self.v_star), rng, state)
    }

    fn is_stochastic(&self) -> bool {
        self.inner.is_stochastic()
    }

    fn observes_downstream(&self) -> bool {
        self.inner.observes_downstream()
    }
}

/// Wraps a plain function of the intervention. Only the intervention itself
/// is observable, so observed states are the actual state overlaid with it.
pub struct FnOracle<F> {
    f: F,
    v_star: Vec<u32>,
    stochastic: bool,
}

impl<F> FnOracle<F>
where
    F: Fn(&Intervention) -> Result<bool>,
{
    pub fn new(f: F, v_star: Vec<u32>) -> Self {
        FnOracle {
            f,
            v_star,
            stochastic: false,
        }
    }

    pub fn stochastic(mut self, yes: bool) -> Self {
        self.stochastic = yes;
        self
    }
}

pub(crate) fn overlay(v_star: &[u32], e: &Intervention, state: &mut Vec<u32>) {
    state.clear();
    state.extend_from_slice(v_star);
    for &(v, x) in e.pairs() {
        state[v.index()] = x;
    }
}

impl<F> Oracle for FnOracle<F>
where
    F: Fn(&Intervention) -> Result<bool>,
{
    fn query(&self, e: &Intervention, _rng: &mut dyn RngCore) -> Result<bool> {
        (self.f)(e)
    }

    fn query_observe(
        &self,
        e: &Intervention,
        _rng: &mut dyn RngCore,
        state: &mut Vec<u32>,
    ) -> Result<bool> {
        overlay(&self.v_star, e, state);
        (self.f)(e)
    }

    fn is_stochastic(&self) -> bool {
        self.stochastic
    }

    fn observes_downstream(&self) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rock_throwing_queries() {
        let scm = benchmarks::rock_throwing();
        let ctx = Context::from_bools(&scm, &[true, true]).unwrap();
        let oracle = ScmOracle::new(&scm, &ctx).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(oracle.query(&Intervention::empty(), &mut rng).unwrap());
        let e =
            Intervention::from_pairs([(scm.var("ST").unwrap(), 0), (scm.var("BH").unwrap(), 0)])
                .unwrap();
        assert!(!oracle.query(&e, &mut rng).unwrap());
    }

    #[test]
    fn target_must_hold_in_the_actual_world() {
        let scm = benchmarks::rock_throwing();
        let ctx = Context::from_bools(&scm, &[false, false]).unwrap();
        assert!(matches!(
            ScmOracle::new(&scm, &ctx),
            Err(Error::TargetNotActual)
        ));
    }

    #[test]
    fn pinning_matches_explicit_contingency() {
        let scm = benchmarks::rock_throwing();
        let ctx = Context::from_bools(&scm, &[true, true]).unwrap();
        let v_star = scm.actual_values(&ctx).unwrap().0;
        let bare = ScmOracle::new(&scm, &ctx).unwrap();
        let bh = scm.var("BH").unwrap();
        let pinned = PinnedOracle::new(&bare, vec![bh], &v_star);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for var in scm.search_variables() {
            for x in 0..2 {
                let e = Intervention::single(var, x);
                let explicit = e.pinned(&[bh], &v_star);
                assert_eq!(
                    pinned.query(&e, &mut rng).unwrap(),
                    bare.query(&explicit, &mut rng).unwrap()
                );
            }
        }
    }
}
