//! Clipped-surrogate policy optimisation on tabular softmax logits with
//! Monte-Carlo advantages.

use erpo_core::rng::{sample_index, Rng};
use erpo_core::{StochasticPolicy, TabularMdp};

use crate::actor_critic::{policy_gradient_step, warm_parts};
use crate::config::BaselineConfig;
use crate::{softmax_row, EpisodicLearner, Result};

/// `min(ρ A, clip(ρ, 1 − ε, 1 + ε) A)`.
pub fn clipped_surrogate(ratio: f64, adv: f64, clip: f64) -> f64 {
    (ratio * adv).min(ratio.clamp(1.0 - clip, 1.0 + clip) * adv)
}

/// Derivative of [`clipped_surrogate`] in `ratio`: `A` inside the trust
/// region, 0 once the ratio has moved past the boundary in the advantage's
/// direction.
pub fn clipped_surrogate_grad(ratio: f64, adv: f64, clip: f64) -> f64 {
    if (adv >= 0.0 && ratio >= 1.0 + clip) || (adv < 0.0 && ratio <= 1.0 - clip) {
        0.0
    } else {
        adv
    }
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    state: usize,
    action: usize,
    ret: f64,
    old_prob: f64,
}

#[derive(Debug, Clone)]
pub struct PpoClip {
    cfg: BaselineConfig,
    num_actions: usize,
    logits: Vec<f64>,
    values: Vec<f64>,
    gamma: f64,
    buffer: Vec<Sample>,
    buffered_episodes: usize,
    steps: u64,
    episodes: u64,
    updates: u64,
}

impl PpoClip {
    pub fn new(mdp: &TabularMdp, cfg: &BaselineConfig) -> Result<Self> {
        let (logits, values) = warm_parts(mdp, cfg)?;
        Ok(Self {
            cfg: cfg.clone(),
            num_actions: mdp.num_actions(),
            logits,
            values,
            gamma: cfg.gamma.unwrap_or(mdp.discount()),
            buffer: Vec::new(),
            buffered_episodes: 0,
            steps: 0,
            episodes: 0,
            updates: 0,
        })
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    fn update(&mut self) {
        let m = self.num_actions;
        let adv: Vec<f64> = self.buffer.iter().map(|x| x.ret - self.values[x.state]).collect();
        let n = adv.len() as f64;
        let mean = adv.iter().sum::<f64>() / n;
        let sd = (adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n).sqrt();
        let norm: Vec<f64> = if sd > 1e-12 {
            adv.iter().map(|a| (a - mean) / sd).collect()
        } else {
            vec![0.0; adv.len()]
        };
        let mut probs = vec![0.0; m];
        for epoch in 0..self.cfg.ppo_epochs {
            for (x, &a_hat) in self.buffer.iter().zip(&norm) {
                let row = x.state * m..(x.state + 1) * m;
                softmax_row(&self.logits[row.clone()], &mut probs);
                let ratio = probs[x.action] / x.old_prob;
                let g = clipped_surrogate_grad(ratio, a_hat, self.cfg.clip);
                policy_gradient_step(&mut self.logits[row], &probs, x.action, g * ratio, self.cfg.alpha, self.cfg.entropy);
                if epoch == 0 {
                    self.values[x.state] += self.cfg.critic_alpha * (x.ret - self.values[x.state]);
                }
            }
        }
        self.buffer.clear();
        self.buffered_episodes = 0;
        self.updates += 1;
    }
}

impl EpisodicLearner for PpoClip {
    fn train_episode(&mut self, mdp: &TabularMdp, rng: &mut Rng) -> u64 {
        let m = self.num_actions;
        let mut probs = vec![0.0; m];
        let mut s = mdp.sample_start(rng);
        let mut episode: Vec<(usize, usize, f64, f64)> = Vec::new();
        for t in 0..mdp.horizon() {
            if mdp.is_absorbing(s) {
                break;
            }
            softmax_row(&self.logits[s * m..(s + 1) * m], &mut probs);
            let a = sample_index(&probs, rng);
            let (next, r) = mdp.step(s, a, t, rng);
            episode.push((s, a, r, probs[a]));
            s = next;
        }
        let mut ret = 0.0;
        let start = self.buffer.len();
        for &(state, action, r, old_prob) in episode.iter().rev() {
            ret = r + self.gamma * ret;
            self.buffer.push(Sample { state, action, ret, old_prob });
        }
        self.buffer[start..].reverse();
        let taken = episode.len() as u64;
        self.steps += taken;
        self.episodes += 1;
        self.buffered_episodes += 1;
        if self.buffered_episodes >= self.cfg.ppo_batch {
            self.update();
        }
        taken
    }

    fn policy(&self) -> StochasticPolicy {
        StochasticPolicy::softmax(self.logits.len() / self.num_actions, self.num_actions, &self.logits)
    }

    fn env_steps(&self) -> u64 {
        self.steps
    }

    fn episodes(&self) -> u64 {
        self.episodes
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Algo;
    use crate::episode_rng;
    use crate::testutil::single_choice;

    #[test]
    fn surrogate_examples() {
        assert_eq!(clipped_surrogate(1.0, 2.0, 0.2), 2.0);
        assert!((clipped_surrogate(1.5, 2.0, 0.2) - 2.4).abs() < 1e-12);
        assert!((clipped_surrogate(0.5, -1.0, 0.2) - -0.8).abs() < 1e-12);
        // Pessimistic side is not clipped.
        assert!((clipped_surrogate(1.5, -1.0, 0.2) - -1.5).abs() < 1e-12);
        assert_eq!(clipped_surrogate_grad(1.2, 1.0, 0.2), 0.0);
        assert_eq!(clipped_surrogate_grad(1.19, 1.0, 0.2), 1.0);
        assert_eq!(clipped_surrogate_grad(0.8, -1.0, 0.2), 0.0);
        assert_eq!(clipped_surrogate_grad(1.5, -1.0, 0.2), -1.0);
    }

    #[test]
    fn ratio_stops_at_clip_boundary() {
        // One sample with positive advantage: repeated small steps push the
        // ratio up until it crosses 1 + clip, then the gradient vanishes.
        let clip = 0.2;
        let mut logits = vec![0.0, 0.0];
        let old = 0.5;
        let mut probs = vec![0.0; 2];
        for _ in 0..10_000 {
            softmax_row(&logits, &mut probs);
            let ratio = probs[0] / old;
            let g = clipped_surrogate_grad(ratio, 1.0, clip);
            policy_gradient_step(&mut logits, &probs, 0, g * ratio, 1e-3, 0.0);
        }
        softmax_row(&logits, &mut probs);
        let ratio = probs[0] / old;
        assert!(ratio >= 1.0 + clip && ratio < 1.0 + clip + 1e-3, "{ratio}");
    }

    #[test]
    fn updates_every_batch() {
        let mdp = single_choice(1.0, 3.0);
        let cfg = BaselineConfig { algo: Algo::PpoClip, ppo_batch: 4, ..Default::default() };
        let mut l = PpoClip::new(&mdp, &cfg).unwrap();
        for ep in 0..10 {
            l.train_episode(&mdp, &mut episode_rng(0, ep));
        }
        assert_eq!(l.updates(), 2);
        l.policy().validate().unwrap();
    }
}
