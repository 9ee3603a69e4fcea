use crate::error::{Error, Result};

/// `|x·y| / (‖x‖ ‖y‖)`, always in `[0, 1]`.
pub fn cosine_similarity(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            got: y.len(),
        });
    }
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let nx = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let ny = y.iter().map(|b| b * b).sum::<f64>().sqrt();
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::invalid("embedding", "cosine similarity of a zero vector"));
    }
    Ok((dot.abs() / (nx * ny)).min(1.0))
}

const PROB_EPS: f64 = 1e-12;

/// Word-level binary cross-entropy in nats; predictions are clipped to
/// `[1e-12, 1 - 1e-12]`.
pub fn binary_cross_entropy(truth: &[f64], predicted: &[f64]) -> Result<f64> {
    if truth.len() != predicted.len() {
        return Err(Error::Dimension {
            expected: truth.len(),
            got: predicted.len(),
        });
    }
    let mut loss = 0.0;
    for (&q, &p) in truth.iter().zip(predicted) {
        if !(0.0..=1.0).contains(&q) || !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid("probability", "entries must lie in [0, 1]"));
        }
        let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
        loss -= q * p.ln() + (1.0 - q) * (1.0 - p).ln();
    }
    Ok(loss)
}

/// Exact mutual information in bits of a joint pmf `joint[x][y]`.
pub fn mutual_information_exact(joint: &[Vec<f64>]) -> Result<f64> {
    let cols = joint.first().map_or(0, Vec::len);
    if joint.iter().any(|row| row.len() != cols) {
        return Err(Error::invalid("joint", "rows must have equal length"));
    }
    if joint.iter().flatten().any(|&p| !(p >= 0.0)) {
        return Err(Error::invalid("joint", "probabilities must be non-negative"));
    }
    let total: f64 = joint.iter().flatten().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("joint", format!("pmf sums to {total}, not 1")));
    }
    let px: Vec<f64> = joint.iter().map(|row| row.iter().sum()).collect();
    let py: Vec<f64> = (0..cols).map(|j| joint.iter().map(|row| row[j]).sum()).collect();
    let mut mi = 0.0;
    for (i, row) in joint.iter().enumerate() {
        for (j, &p) in row.iter().enumerate() {
            if p > 0.0 {
                mi += p * (p / (px[i] * py[j])).log2();
            }
        }
    }
    Ok(mi.max(0.0))
}
