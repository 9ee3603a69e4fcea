/// Advantages and critic targets from one or more concatenated episodes.
///
/// `values` holds `V(s_t)` for every step plus one trailing bootstrap value
/// for the state after the last step. A set `dones[t]` cuts the recursion.
pub fn gae_advantages(rewards: &[f64], values: &[f64], dones: &[bool], gamma: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    assert_eq!(values.len(), n + 1, "values need a bootstrap entry");
    assert_eq!(dones.len(), n, "one done flag per reward");
    let mut adv = vec![0.0; n];
    let mut next = 0.0;
    for t in (0..n).rev() {
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * values[t + 1] * live - values[t];
        next = delta + gamma * lambda * live * next;
        adv[t] = next;
    }
    let targets = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, targets)
}

/// `r_t + gamma V(s_{t+1})`, zeroing the bootstrap after a terminal step.
pub fn one_step_targets(rewards: &[f64], values: &[f64], dones: &[bool], gamma: f64) -> Vec<f64> {
    (0..rewards.len())
        .map(|t| rewards[t] + if dones[t] { 0.0 } else { gamma * values[t + 1] })
        .collect()
}

/// Shifts and scales to zero mean, unit (population) standard deviation.
pub fn normalize_advantages(adv: &mut [f64]) {
    let n = adv.len() as f64;
    if adv.len() < 2 {
        adv.iter_mut().for_each(|a| *a = 0.0);
        return;
    }
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    for a in adv.iter_mut() {
        *a = if std > 0.0 { (*a - mean) / std } else { 0.0 };
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_recursion() {
        let (a, t) = gae_advantages(&[1.0, 0.0], &[0.5, 0.4, 0.0], &[false, false], 0.99, 0.95);
        assert!((a[1] + 0.4).abs() < 1e-12);
        // delta = [0.896, -0.4]; A_0 = 0.896 + 0.99 * 0.95 * -0.4
        assert!((a[0] - 0.5198).abs() < 1e-12);
        assert!((t[0] - 1.0198).abs() < 1e-12);
    }

    #[test]
    fn done_cuts_bootstrap() {
        let (a, _) = gae_advantages(&[1.0, 2.0], &[0.0, 5.0, 7.0], &[true, true], 0.9, 0.9);
        assert_eq!(a, vec![1.0, -3.0]);
    }

    #[test]
    fn normalization_contract() {
        let mut a: Vec<f64> = (0..257).map(|i| ((i * 7919) % 101) as f64 * 0.3 - 4.0).collect();
        normalize_advantages(&mut a);
        let n = a.len() as f64;
        let mean = a.iter().sum::<f64>() / n;
        let std = (a.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!(mean.abs() < 1e-9);
        assert!((std - 1.0).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn lambda_zero_is_td_residual(
            r in prop::collection::vec(-5.0f64..5.0, 1..40),
            seed in any::<u64>(),
        ) {
            let n = r.len();
            let v: Vec<f64> = (0..=n).map(|i| ((seed.wrapping_add(i as u64) % 97) as f64) / 10.0 - 4.0).collect();
            let d: Vec<bool> = (0..n).map(|i| (seed >> (i % 60)) & 1 == 1).collect();
            let (a, _) = gae_advantages(&r, &v, &d, 0.97, 0.0);
            for t in 0..n {
                let live = if d[t] { 0.0 } else { 1.0 };
                prop_assert!((a[t] - (r[t] + 0.97 * v[t + 1] * live - v[t])).abs() < 1e-12);
            }
        }
    }
}
