use super::updates::{
    baseline_update_delta0, baseline_update_eta, baseline_update_z, direct_block_update,
    gibbs_update_theta2, mh_update_nu,
};
use super::{ChainContext, ChainScheme, GlmmState};
use crate::error::Result;

/// Random-walk `nu`, then the joint `(eta, delta0, Z)` block, then `theta2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct DirectBlock;

impl DirectBlock {
    pub const NAME: &'static str = "direct";
}

impl ChainScheme for DirectBlock {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn step(&self, state: &mut GlmmState, ctx: &mut ChainContext<'_>, adapt: bool) -> Result<()> {
        mh_update_nu(state, ctx.panel, adapt);
        direct_block_update(state, ctx)?;
        gibbs_update_theta2(state);
        Ok(())
    }
}

/// Traditional single-site Gibbs: cycles `nu_ij`, `Z_i`, `theta2`, `delta0`,
/// `eta` through their full conditionals one coordinate at a time.
#[derive(Debug, Clone, Copy, Default)]
pub struct BaselineGibbs;

impl BaselineGibbs {
    pub const NAME: &'static str = "gibbs";
}

impl ChainScheme for BaselineGibbs {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn step(&self, state: &mut GlmmState, ctx: &mut ChainContext<'_>, adapt: bool) -> Result<()> {
        mh_update_nu(state, ctx.panel, adapt);
        baseline_update_z(state, ctx);
        gibbs_update_theta2(state);
        baseline_update_delta0(state, ctx)?;
        baseline_update_eta(state, ctx)
    }
}
