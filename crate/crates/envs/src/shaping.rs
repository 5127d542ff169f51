use erpo_core::TabularMdp;

use crate::EnvError;

/// Potential-based shaping: `r + γ Φ(s') − Φ(s)`, with `Φ` read as 0 on
/// absorbing states. Absorbing rows keep their rewards.
pub fn shape_rewards(mdp: &TabularMdp, phi: &[f64]) -> Result<TabularMdp, EnvError> {
    if phi.len() != mdp.num_states() {
        return Err(EnvError::Mismatch(format!(
            "potential has {} entries for {} states",
            phi.len(),
            mdp.num_states()
        )));
    }
    let gamma = mdp.discount();
    let pot = |s: usize| if mdp.is_absorbing(s) { 0.0 } else { phi[s] };
    Ok(mdp.map_rewards(|s, _a, next, r| {
        if mdp.is_absorbing(s) {
            r
        } else {
            r + gamma * pot(next) - pot(s)
        }
    })?)
}
