use std::io::Write;

use super::Configuration;
use crate::error::Result;

/// Per-observable readings at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservableState {
    /// `π_t(S_n G)`
    pub plain: f64,
    /// `π̂_t(G) = π_t(S_n G_n)`; zero when the observable has no corrected
    /// pairing.
    pub corrected: f64,
    /// `∫₀^t π_s(L_n S_n G_n) ds`, accumulated between events.
    pub integral: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub ids: Vec<String>,
    pub has_corrected: Vec<bool>,
    pub times: Vec<f64>,
    pub initial: Vec<ObservableState>,
    /// `samples[k][o]` is observable `o` at `times[k]`.
    pub samples: Vec<Vec<ObservableState>>,
    pub final_config: Configuration,
    /// Clock rings, including no-op swaps.
    pub events: u64,
    pub swaps: u64,
    pub stream_id: u64,
}

impl TrajectoryRecord {
    pub fn observable_index(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|i| i == id)
    }

    /// `M_t = π̂_t − π̂_0 − ∫₀^t π_s(L_n S_n G_n) ds` at sample `k`.
    pub fn martingale(&self, obs: usize, k: usize) -> f64 {
        let s = &self.samples[k][obs];
        s.corrected - self.initial[obs].corrected - s.integral
    }

    /// CSV with columns `time,observable_id,pi_plain,pi_corrected,running_integral,M`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "time",
            "observable_id",
            "pi_plain",
            "pi_corrected",
            "running_integral",
            "M",
        ])?;
        for (k, &t) in self.times.iter().enumerate() {
            for (o, id) in self.ids.iter().enumerate() {
                let s = &self.samples[k][o];
                let (corr, m) = if self.has_corrected[o] {
                    (s.corrected.to_string(), self.martingale(o, k).to_string())
                } else {
                    (String::new(), String::new())
                };
                w.write_record([
                    t.to_string(),
                    id.clone(),
                    s.plain.to_string(),
                    corr,
                    s.integral.to_string(),
                    m,
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}
