//! Zero-forcing sensing beamformers, zero-forcing server receive filters and
//! the resulting sensing / communication SINRs.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::palloc::PowerAllocation;
use crate::scenario::{Activation, ScenarioConfig};

/// Gram matrices with a larger condition number are treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

fn to_vector(v: &[Complex64]) -> DVector<Complex64> {
    DVector::from_column_slice(v)
}

/// Solves `gram * y = rhs` for a Hermitian positive-definite Gram matrix,
/// refusing ill-conditioned systems.
fn solve_gram(gram: DMatrix<Complex64>, rhs: DMatrix<Complex64>, context: &str) -> Result<DMatrix<Complex64>> {
    let eig = gram.clone().symmetric_eigenvalues();
    let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::RankDeficient {
            context: context.to_string(),
            condition,
        });
    }
    let chol = gram.cholesky().ok_or_else(|| Error::RankDeficient {
        context: context.to_string(),
        condition,
    })?;
    Ok(chol.solve(&rhs))
}

/// Unit-norm sensing direction of device `i`: the normalized first column of
/// `F^H (F F^H)^-1` with `F = [g_i, q_ik ...]^H` over the other active `k`.
pub fn zf_beamformer(chans: &ChannelSet, active: &[usize], i: usize) -> Result<DVector<Complex64>> {
    if !active.contains(&i) {
        return Err(Error::Domain(format!("device {i} is not in the active set")));
    }
    let rows = active.len();
    if chans.n_sense_ant < rows {
        return Err(Error::Dimension(format!(
            "{} sensing antennas cannot null {} devices",
            chans.n_sense_ant,
            rows - 1
        )));
    }
    // Columns of F^H: g_i followed by q_ik.
    let mut cols: Vec<DVector<Complex64>> = Vec::with_capacity(rows);
    cols.push(to_vector(&chans.g[i]));
    cols.extend(active.iter().filter(|&&k| k != i).map(|&k| to_vector(&chans.q[i][k])));
    let f_h = DMatrix::from_columns(&cols);
    let gram = f_h.adjoint() * &f_h;
    let mut e1 = DMatrix::zeros(rows, 1);
    e1[(0, 0)] = Complex64::new(1.0, 0.0);
    let y = solve_gram(gram, e1, "sensing beamformer")?;
    let col = f_h * y;
    let norm = col.norm();
    Ok(DVector::from_iterator(col.nrows(), col.iter().map(|z| z / norm)))
}

/// Zero-forcing receive filters `w_k` (stored as columns, applied as `w_k^H y`)
/// for the active devices in order; `w_k^H h_j = delta_kj`.
pub fn zf_receivers(chans: &ChannelSet, active: &[usize]) -> Result<Vec<DVector<Complex64>>> {
    if active.is_empty() {
        return Err(Error::EmptySet);
    }
    if chans.n_server_ant < active.len() {
        return Err(Error::Dimension(format!(
            "{} server antennas cannot separate {} devices",
            chans.n_server_ant,
            active.len()
        )));
    }
    let cols: Vec<DVector<Complex64>> = active.iter().map(|&i| to_vector(&chans.h[i])).collect();
    let h = DMatrix::from_columns(&cols);
    let gram = h.adjoint() * &h;
    // (H^H H)^-1 H^H; its rows are w_k^H.
    let w_rows = solve_gram(gram, h.adjoint(), "receive filter")?;
    Ok((0..active.len())
        .map(|r| w_rows.row(r).adjoint().into_owned())
        .collect())
}

/// Beamformers, filters and effective gains for one active set.
#[derive(Debug, Clone)]
pub struct PhyState {
    pub activation: Activation,
    /// Active devices in increasing order; all per-device vectors follow it.
    pub active: Vec<usize>,
    pub f_zf: Vec<DVector<Complex64>>,
    pub w: Vec<DVector<Complex64>>,
    /// `|g_i^H f_i|^2`
    pub a: Vec<f64>,
    /// `|w_i^H h_i|^2 / (||w_i||^2 sigma_c^2)`, per watt of uplink power.
    pub gamma_c: Vec<f64>,
}

impl PhyState {
    pub fn compute(cfg: &ScenarioConfig, chans: &ChannelSet, x: Activation) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::EmptySet);
        }
        if x.n() != chans.n_devices {
            return Err(Error::Dimension(format!(
                "activation has {} entries, channel set {} devices",
                x.n(),
                chans.n_devices
            )));
        }
        let active = x.active();
        let f_zf = active
            .iter()
            .map(|&i| zf_beamformer(chans, &active, i))
            .collect::<Result<Vec<_>>>()?;
        let w = zf_receivers(chans, &active)?;
        let a = active
            .iter()
            .zip(&f_zf)
            .map(|(&i, f)| to_vector(&chans.g[i]).dotc(f).norm_sqr())
            .collect();
        let gamma_c = active
            .iter()
            .zip(&w)
            .map(|(&i, w)| w.dotc(&to_vector(&chans.h[i])).norm_sqr() / (w.norm_squared() * cfg.noise_comm))
            .collect();
        Ok(PhyState {
            activation: x,
            active,
            f_zf,
            w,
            a,
            gamma_c,
        })
    }

    /// Position of device `i` within the active list.
    pub fn slot(&self, i: usize) -> Option<usize> {
        self.active.binary_search(&i).ok()
    }

    /// Sensing SINR per device (0 for inactive devices). When
    /// `comm_interference` is false the uplink leakage term is dropped, as in
    /// a sequential sense-then-upload schedule.
    pub fn sensing_sinr(
        &self,
        cfg: &ScenarioConfig,
        chans: &ChannelSet,
        p: &PowerAllocation,
        comm_interference: bool,
    ) -> Vec<f64> {
        let mut out = vec![0.0; chans.n_devices];
        for (slot, &i) in self.active.iter().enumerate() {
            let leak: f64 = if comm_interference {
                self.active
                    .iter()
                    .filter(|&&j| j != i)
                    .map(|&j| p.p_c[j] * chans.c[j][i].norm_sqr())
                    .sum()
            } else {
                0.0
            };
            out[i] = p.p_s[i] * self.a[slot] / (cfg.noise_sense + leak);
        }
        out
    }

    pub fn comm_sinr(&self, chans: &ChannelSet, p: &PowerAllocation) -> Vec<f64> {
        let mut out = vec![0.0; chans.n_devices];
        for (slot, &i) in self.active.iter().enumerate() {
            out[i] = p.p_c[i] * self.gamma_c[slot];
        }
        out
    }
}

pub fn sensing_sinr(
    cfg: &ScenarioConfig,
    chans: &ChannelSet,
    x: Activation,
    p: &PowerAllocation,
) -> Result<Vec<f64>> {
    Ok(PhyState::compute(cfg, chans, x)?.sensing_sinr(cfg, chans, p, true))
}

pub fn comm_sinr(cfg: &ScenarioConfig, chans: &ChannelSet, x: Activation, p: &PowerAllocation) -> Result<Vec<f64>> {
    Ok(PhyState::compute(cfg, chans, x)?.comm_sinr(chans, p))
}

/// `log2(1 + sinr)` in bps/Hz.
pub fn spectral_efficiency(sinr: f64) -> Result<f64> {
    if !(sinr >= 0.0) {
        return Err(Error::Domain(format!("SINR must be non-negative, got {sinr}")));
    }
    Ok(sinr.ln_1p() / std::f64::consts::LN_2)
}

/// Thread-safe memo of [`PhyState`]s keyed by activation bitmask.
pub struct PhyCache<'a> {
    cfg: &'a ScenarioConfig,
    chans: &'a ChannelSet,
    states: Mutex<HashMap<u32, Arc<PhyState>>>,
}

impl<'a> PhyCache<'a> {
    pub fn new(cfg: &'a ScenarioConfig, chans: &'a ChannelSet) -> Self {
        PhyCache {
            cfg,
            chans,
            states: Mutex::new(HashMap::new()),
        }
    }

    pub fn get(&self, x: Activation) -> Result<Arc<PhyState>> {
        if let Some(state) = self.states.lock().expect("phy cache poisoned").get(&x.mask()) {
            return Ok(Arc::clone(state));
        }
        let state = Arc::new(PhyState::compute(self.cfg, self.chans, x)?);
        self.states
            .lock()
            .expect("phy cache poisoned")
            .insert(x.mask(), Arc::clone(&state));
        Ok(state)
    }

    pub fn len(&self) -> usize {
        self.states.lock().expect("phy cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
