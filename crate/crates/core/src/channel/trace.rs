use std::io::Write;

use super::gains::ChannelState;
use crate::error::Result;

/// Streams per-step gains as CSV: `step,link_kind,tx,rx,w,gain_db`.
/// Base-station receivers are written as `bs`.
pub struct ChannelTraceWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> ChannelTraceWriter<W> {
    pub fn new(writer: W) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(writer);
        inner.write_record(["step", "link_kind", "tx", "rx", "w", "gain_db"])?;
        Ok(ChannelTraceWriter { inner })
    }

    pub fn write_step(&mut self, step: usize, ch: &ChannelState) -> Result<()> {
        let step = step.to_string();
        let mut row = |kind: &str, tx: usize, rx: Option<usize>, w: usize, db: f64| {
            let rx = rx.map_or_else(|| "bs".to_string(), |r| r.to_string());
            self.inner.write_record([
                step.as_str(),
                kind,
                &tx.to_string(),
                &rx,
                &w.to_string(),
                &format!("{db:.6}"),
            ])
        };
        for (w, g) in ch.v2i_bs.iter().enumerate() {
            row("v2i_bs", w, None, w, g.db())?;
        }
        for (q, per_w) in ch.v2v_bs.iter().enumerate() {
            for (w, g) in per_w.iter().enumerate() {
                row("v2v_bs", q, None, w, g.db())?;
            }
        }
        for (q, per_w) in ch.v2v_own.iter().enumerate() {
            for (w, g) in per_w.iter().enumerate() {
                row("v2v_own", q, Some(q), w, g.db())?;
            }
        }
        for (w, per_q) in ch.v2i_v2v.iter().enumerate() {
            for (q, g) in per_q.iter().enumerate() {
                row("v2i_v2v", w, Some(q), w, g.db())?;
            }
        }
        for (qp, per_q) in ch.v2v_cross.iter().enumerate() {
            for (q, per_w) in per_q.iter().enumerate() {
                if q == qp {
                    continue;
                }
                for (w, g) in per_w.iter().enumerate() {
                    row("v2v_cross", qp, Some(q), w, g.db())?;
                }
            }
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush().map_err(|e| crate::error::Error::io("<trace>", e))?;
        self.inner
            .into_inner()
            .map_err(|e| crate::error::Error::io("<trace>", e.into_error()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_gains, Topology};
    use crate::config::ScenarioConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn writes_every_link() {
        let cfg = ScenarioConfig {
            num_vehicles: 2,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let topo = Topology::random(&cfg, &mut rng);
        let ch = sample_gains(&topo, &cfg, &mut rng);
        let mut w = ChannelTraceWriter::new(Vec::new()).unwrap();
        w.write_step(0, &ch).unwrap();
        let text = String::from_utf8(w.finish().unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "step,link_kind,tx,rx,w,gain_db");
        // W + QW + QW + WQ + Q(Q-1)W with W = Q = 2.
        assert_eq!(lines.len() - 1, 2 + 4 + 4 + 4 + 4);
        assert!(lines[1].starts_with("0,v2i_bs,0,bs,0,"));
    }
}
