//! End-to-end latency bound: slowest uplink plus server computation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::ScenarioConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyBreakdown {
    /// Upload time of the worst active device, s. Sensing runs concurrently
    /// with the upload, so this is also the ISAC stage duration.
    pub t_comm: f64,
    /// Server inference time for all uploaded samples, s.
    pub t_comp: f64,
    pub xi_ub: f64,
}

/// Latency upper bound for active set `active` given per-device spectral
/// efficiencies `rates` (bps/Hz, indexed by device).
pub fn xi_ub(cfg: &ScenarioConfig, rates: &[f64], active: &[usize]) -> Result<LatencyBreakdown> {
    if active.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut t_comm: f64 = 0.0;
    for &i in active {
        let r = *rates.get(i).ok_or(Error::Index {
            index: i,
            len: rates.len(),
        })?;
        if !(r > 0.0) {
            return Err(Error::ZeroRate { device: i });
        }
        t_comm = t_comm.max(cfg.data_bits / (cfg.bandwidth * r));
    }
    let t_comp = active.len() as f64 * cfg.n_flop / cfg.compute_speed;
    Ok(LatencyBreakdown {
        t_comm,
        t_comp,
        xi_ub: t_comm + t_comp,
    })
}
