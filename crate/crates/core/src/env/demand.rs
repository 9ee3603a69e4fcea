use std::io::Write;

use crate::error::Result;

/// Per-pair payload bookkeeping for one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandTracker {
    pub initial_words: f64,
    pub remaining_words: Vec<f64>,
    /// `[step][q]` words delivered.
    pub delivered_history: Vec<Vec<f64>>,
    pub qoe_history: Vec<f64>,
    pub reward_history: Vec<f64>,
    /// Similarities of active pairs, summed over the episode.
    xi_sum: f64,
    xi_count: usize,
    fulfilled_at: Vec<Option<usize>>,
}

impl DemandTracker {
    pub fn new(num_pairs: usize, demand_words: f64) -> Self {
        let met = if demand_words <= 0.0 { Some(0) } else { None };
        DemandTracker {
            initial_words: demand_words,
            remaining_words: vec![demand_words.max(0.0); num_pairs],
            delivered_history: Vec::new(),
            qoe_history: Vec::new(),
            reward_history: Vec::new(),
            xi_sum: 0.0,
            xi_count: 0,
            fulfilled_at: vec![met; num_pairs],
        }
    }

    pub fn steps(&self) -> usize {
        self.delivered_history.len()
    }

    pub fn all_met(&self) -> bool {
        self.remaining_words.iter().all(|&r| r <= 0.0)
    }

    pub fn record(&mut self, delivered: &[f64], qoe: f64, reward: f64, active_xi: impl Iterator<Item = f64>) {
        let step = self.steps() + 1;
        for (q, &d) in delivered.iter().enumerate() {
            let left = (self.remaining_words[q] - d.max(0.0)).max(0.0);
            self.remaining_words[q] = left;
            if left <= 0.0 && self.fulfilled_at[q].is_none() {
                self.fulfilled_at[q] = Some(step);
            }
        }
        self.delivered_history.push(delivered.to_vec());
        self.qoe_history.push(qoe);
        self.reward_history.push(reward);
        for xi in active_xi {
            self.xi_sum += xi;
            self.xi_count += 1;
        }
    }

    pub fn fulfilled_at(&self, q: usize) -> Option<usize> {
        self.fulfilled_at[q]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fulfillment {
    Met(usize),
    /// Never met; carries the episode length.
    Unmet(usize),
}

impl Fulfillment {
    /// Steps used, counting an unmet demand as the whole episode.
    pub fn steps(&self) -> usize {
        match *self {
            Fulfillment::Met(s) | Fulfillment::Unmet(s) => s,
        }
    }

    pub fn is_met(&self) -> bool {
        matches!(self, Fulfillment::Met(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSummary {
    pub length: usize,
    pub steps_to_fulfillment: Vec<Fulfillment>,
    pub cumulative_qoe: f64,
    pub cumulative_reward: f64,
    /// Mean similarity over active pair-steps; `None` if nobody transmitted.
    pub mean_similarity: Option<f64>,
}

pub fn episode_metrics(tracker: &DemandTracker) -> EpisodeSummary {
    let length = tracker.steps();
    EpisodeSummary {
        length,
        steps_to_fulfillment: tracker
            .fulfilled_at
            .iter()
            .map(|f| f.map_or(Fulfillment::Unmet(length), Fulfillment::Met))
            .collect(),
        cumulative_qoe: tracker.qoe_history.iter().sum(),
        cumulative_reward: tracker.reward_history.iter().sum(),
        mean_similarity: (tracker.xi_count > 0).then(|| tracker.xi_sum / tracker.xi_count as f64),
    }
}

/// Per-step, per-vehicle rows:
/// `episode,step,vehicle,reward,qoe,xi_min,sinr_min_db,remaining_words`.
/// Reward, QoE and the minima are step totals over active pairs.
pub struct EpisodeCsvWriter<W: Write> {
    inner: csv::Writer<W>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub reward: f64,
    pub qoe: f64,
    pub xi_min: Option<f64>,
    pub sinr_min_db: Option<f64>,
    pub remaining_words: Vec<f64>,
}

impl<W: Write> EpisodeCsvWriter<W> {
    pub fn new(writer: W) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(writer);
        inner.write_record([
            "episode",
            "step",
            "vehicle",
            "reward",
            "qoe",
            "xi_min",
            "sinr_min_db",
            "remaining_words",
        ])?;
        Ok(EpisodeCsvWriter { inner })
    }

    pub fn write_step(&mut self, episode: usize, step: usize, rec: &StepRecord) -> Result<()> {
        let opt = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x:.6}"));
        for (q, rem) in rec.remaining_words.iter().enumerate() {
            self.inner.write_record([
                episode.to_string(),
                step.to_string(),
                q.to_string(),
                format!("{:.6}", rec.reward),
                format!("{:.6}", rec.qoe),
                opt(rec.xi_min),
                opt(rec.sinr_min_db),
                format!("{rem:.3}"),
            ])?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush().map_err(|e| crate::error::Error::io("<episode csv>", e))?;
        self.inner
            .into_inner()
            .map_err(|e| crate::error::Error::io("<episode csv>", e.into_error()))
    }
}
