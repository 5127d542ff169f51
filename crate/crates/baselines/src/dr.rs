//! Domain randomization: every training episode runs on a freshly sampled
//! shifted instance.

use std::collections::BTreeMap;
use std::sync::Arc;

use erpo_core::rng::{stream, Rng};
use erpo_core::StochasticPolicy;
use erpo_envs::family::{apply_shift, canonical_shift, BETA_HI};
use erpo_envs::{EnvError, EnvInstance, Level};
use rand::Rng as _;

use crate::config::BaselineConfig;
use crate::{episode_rng, make_learner, Result};

const DR_STREAM: u64 = 0xD0;

/// Draws a level uniformly from `levels` and a placement seed uniformly
/// from `0..pool`, caching generated instances.
#[derive(Debug, Clone)]
pub struct ShiftSampler {
    base: Arc<EnvInstance>,
    levels: Vec<Level>,
    pool: u64,
    cache: BTreeMap<(Level, u64), Arc<EnvInstance>>,
}

impl ShiftSampler {
    pub fn new(base: EnvInstance, levels: Vec<Level>, pool: u64) -> Self {
        Self {
            base: Arc::new(base),
            levels,
            pool: pool.max(1),
            cache: BTreeMap::new(),
        }
    }

    /// Sampler that always returns the base instance.
    pub fn base_only(base: EnvInstance) -> Self {
        Self::new(base, vec![Level::Base], 1)
    }

    pub fn base(&self) -> &EnvInstance {
        &self.base
    }

    pub fn sample(&mut self, rng: &mut Rng) -> Result<Arc<EnvInstance>> {
        if self.levels.is_empty() {
            return Ok(self.base.clone());
        }
        let level = self.levels[rng.gen_range(0..self.levels.len())];
        let seed = rng.gen_range(0..self.pool);
        if level == Level::Base {
            return Ok(self.base.clone());
        }
        if let Some(env) = self.cache.get(&(level, seed)) {
            return Ok(env.clone());
        }
        let spec = canonical_shift(self.base.family, level, seed)
            .ok_or_else(|| EnvError::Mismatch(format!("{} has no level table", self.base.family)))?;
        let env = apply_shift(&self.base, &spec)?;
        if env.beta > BETA_HI {
            return Err(EnvError::Generation(format!("sampled shift has β = {}", env.beta)).into());
        }
        let env = Arc::new(env);
        self.cache.insert((level, seed), env.clone());
        Ok(env)
    }

    /// Random stream used to pick the instance for training episode `episode`.
    pub fn episode_stream(seed: u64, episode: u64) -> Rng {
        stream(seed, &[DR_STREAM, episode])
    }

    pub fn cached(&self) -> impl Iterator<Item = &EnvInstance> {
        self.cache.values().map(|e| e.as_ref())
    }
}

/// Trains `cfg.algo` with one sampled instance per episode and returns the
/// final policy.
pub fn domain_randomization_train(sampler: &mut ShiftSampler, cfg: &BaselineConfig) -> Result<StochasticPolicy> {
    let mut learner = make_learner(&sampler.base.mdp, cfg)?;
    for ep in 0..cfg.episodes as u64 {
        if cfg.max_env_steps.is_some_and(|m| learner.env_steps() >= m) {
            break;
        }
        let env = sampler.sample(&mut ShiftSampler::episode_stream(cfg.seed, ep))?;
        learner.train_episode(&env.mdp, &mut episode_rng(cfg.seed, ep));
    }
    Ok(learner.policy())
}
