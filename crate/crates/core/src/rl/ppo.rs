/// Clipped surrogate `min(rho A, clip(rho, 1 - eps, 1 + eps) A)`.
pub fn ppo_clip_objective(log_prob_new: f64, log_prob_old: f64, advantage: f64, eps: f64) -> f64 {
    let rho = (log_prob_new - log_prob_old).exp();
    let clipped = rho.clamp(1.0 - eps, 1.0 + eps);
    (rho * advantage).min(clipped * advantage)
}

/// Derivative of [`ppo_clip_objective`] with respect to `log_prob_new`.
/// Zero wherever the clipped branch is the strict minimum.
pub fn ppo_clip_grad(log_prob_new: f64, log_prob_old: f64, advantage: f64, eps: f64) -> f64 {
    let rho = (log_prob_new - log_prob_old).exp();
    let clip_binds = (advantage > 0.0 && rho > 1.0 + eps) || (advantage < 0.0 && rho < 1.0 - eps);
    if clip_binds {
        0.0
    } else {
        rho * advantage
    }
}

/// Mean squared error.
pub fn critic_loss(values: &[f64], targets: &[f64]) -> f64 {
    assert_eq!(values.len(), targets.len());
    if values.is_empty() {
        return 0.0;
    }
    values.iter().zip(targets).map(|(v, t)| (v - t).powi(2)).sum::<f64>() / values.len() as f64
}
