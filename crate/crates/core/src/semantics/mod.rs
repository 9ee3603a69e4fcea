//! Semantic quality: the similarity surrogate, the QoE objective, and the
//! information-theoretic scores used to judge reconstructed messages.

mod metrics;
mod qoe;
mod similarity;

pub use metrics::{binary_cross_entropy, cosine_similarity, mutual_information_exact};
pub use qoe::{normalized_power, pair_qoe, qoe, theta_a, theta_b, QoeParams};
pub use similarity::{ParametricSimilarity, SimilarityModel, SimilarityTable, SimilarityValue};

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
