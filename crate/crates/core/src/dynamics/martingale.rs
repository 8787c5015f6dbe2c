use super::TrajectoryRecord;
use crate::error::{Error, Result};
use crate::operator::CorrectedFunction;

#[derive(Debug, Clone)]
pub struct MartingaleSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// `a_n⁻¹ E_n(G_n)`; the predictable quadratic variation at `t` is at
    /// most `t` times this.
    pub bound_rate: f64,
}

impl MartingaleSeries {
    pub fn bound(&self, t: f64) -> f64 {
        t * self.bound_rate
    }

    pub fn terminal(&self) -> f64 {
        *self.values.last().unwrap()
    }
}

/// `M_t(G)` at the record's sample times for the observable built from
/// `corrected`.
pub fn martingale_series(
    record: &TrajectoryRecord,
    corrected: &CorrectedFunction,
) -> Result<MartingaleSeries> {
    let id = corrected.function.to_string();
    let obs = record
        .observable_index(&id)
        .filter(|&o| record.has_corrected[o])
        .ok_or_else(|| Error::MismatchedObservable(id.clone()))?;
    Ok(MartingaleSeries {
        times: record.times.clone(),
        values: (0..record.times.len())
            .map(|k| record.martingale(obs, k))
            .collect(),
        bound_rate: corrected.energy / corrected.scaling,
    })
}
