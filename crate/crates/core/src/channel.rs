//! Seeded generation of all ISAC channel realizations.
//!
//! Every link draws from its own ChaCha substream keyed by `(seed, link)`, so
//! adding or removing a device leaves the draws of the remaining links intact.
//! Small-scale fading is Rician with a geometric line-of-sight component
//! (half-wavelength ULA along the x axis, unit carrier wavelength).

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{distance, Point, ScenarioConfig};

/// Links shorter than the path-loss reference distance use the reference gain.
pub const MIN_LINK_DISTANCE: f64 = 1.0;

/// One realization of every channel in the network.
///
/// `q[i][k]` is the sensing interference channel from device `i`'s sensing
/// array into device `k`'s echo receiver, `c[j][i]` the communication
/// interference from device `j`'s uplink antenna into device `i`'s echo
/// receiver. Diagonal entries are empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSet {
    pub n_devices: usize,
    pub n_sense_ant: usize,
    pub n_server_ant: usize,
    pub g: Vec<Vec<Complex64>>,
    pub q: Vec<Vec<Vec<Complex64>>>,
    pub c: Vec<Vec<Complex64>>,
    pub h: Vec<Vec<Complex64>>,
}

/// `10^(-ref_db/10) * d^(-exponent)`
pub fn pathloss_gain(distance: f64, ref_db: f64, exponent: f64) -> Result<f64> {
    if !(distance > 0.0) || !distance.is_finite() {
        return Err(Error::Domain(format!("path loss needs a positive distance, got {distance}")));
    }
    Ok(10f64.powf(-ref_db / 10.0) * distance.powf(-exponent))
}

/// Rician coefficient with unit mean-square magnitude around a given
/// line-of-sight phase. `k_linear = inf` yields the pure line-of-sight term.
pub fn rician_coefficient<R: Rng + ?Sized>(rng: &mut R, los_phase: f64, k_linear: f64) -> Complex64 {
    let los = Complex64::from_polar(1.0, los_phase);
    if k_linear.is_infinite() {
        return los;
    }
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    let scatter = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
    los * (k_linear / (k_linear + 1.0)).sqrt() + scatter * (1.0 / (k_linear + 1.0)).sqrt()
}

#[derive(Debug, Clone, Copy)]
enum LinkKind {
    Echo = 1,
    SenseInterference = 2,
    CommInterference = 3,
    Uplink = 4,
}

fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn link_rng(seed: u64, kind: LinkKind, from: usize, to: usize) -> ChaCha8Rng {
    let id = (kind as u64) << 48 | (from as u64) << 24 | to as u64;
    ChaCha8Rng::seed_from_u64(mix64(seed ^ mix64(id)))
}

/// Vector channel of an `n`-element half-wavelength ULA along x.
fn array_channel(
    rng: &mut ChaCha8Rng,
    n: usize,
    from: Point,
    to: Point,
    link_distance: f64,
    amplitude: f64,
    k_linear: f64,
) -> Vec<Complex64> {
    let d = distance(from, to);
    let ux = if d > 0.0 { (to[0] - from[0]) / d } else { 0.0 };
    let base = 2.0 * PI * link_distance;
    (0..n)
        .map(|m| amplitude * rician_coefficient(rng, base + PI * m as f64 * ux, k_linear))
        .collect()
}

fn link_amplitude(cfg: &ScenarioConfig, d: f64) -> f64 {
    pathloss_gain(d.max(MIN_LINK_DISTANCE), cfg.pathloss_ref_db, cfg.pathloss_exponent)
        .expect("floored distance is positive")
        .sqrt()
}

/// Draws every channel of the scenario from `seed`.
pub fn gen_channels(cfg: &ScenarioConfig, seed: u64) -> ChannelSet {
    let n = cfg.n_devices();
    let k = cfg.rician_k();
    let target = cfg.target_position;

    let g = (0..n)
        .map(|i| {
            let p = cfg.device_positions[i];
            let d = distance(p, target);
            let mut amp = link_amplitude(cfg, d);
            if cfg.echo_round_trip {
                amp *= amp;
            }
            let mut rng = link_rng(seed, LinkKind::Echo, i, i);
            array_channel(&mut rng, cfg.n_sense_ant, p, target, 2.0 * d, amp, k)
        })
        .collect();

    let q = (0..n)
        .map(|i| {
            (0..n)
                .map(|kk| {
                    if i == kk {
                        return Vec::new();
                    }
                    let (a, b) = (cfg.device_positions[i], cfg.device_positions[kk]);
                    let d = distance(a, b);
                    let mut rng = link_rng(seed, LinkKind::SenseInterference, i, kk);
                    array_channel(&mut rng, cfg.n_sense_ant, a, b, d, link_amplitude(cfg, d), k)
                })
                .collect()
        })
        .collect();

    let c = (0..n)
        .map(|j| {
            (0..n)
                .map(|i| {
                    if i == j {
                        return Complex64::new(0.0, 0.0);
                    }
                    let d = distance(cfg.device_positions[j], cfg.device_positions[i]);
                    let mut rng = link_rng(seed, LinkKind::CommInterference, j, i);
                    link_amplitude(cfg, d) * rician_coefficient(&mut rng, 2.0 * PI * d, k)
                })
                .collect()
        })
        .collect();

    let h = (0..n)
        .map(|i| {
            let p = cfg.device_positions[i];
            let d = distance(cfg.server_position, p);
            let mut rng = link_rng(seed, LinkKind::Uplink, i, i);
            array_channel(&mut rng, cfg.n_server_ant, cfg.server_position, p, d, link_amplitude(cfg, d), k)
        })
        .collect();

    ChannelSet {
        n_devices: n,
        n_sense_ant: cfg.n_sense_ant,
        n_server_ant: cfg.n_server_ant,
        g,
        q,
        c,
        h,
    }
}

impl ChannelSet {
    /// JSON document with complex entries written as `[re, im]`.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("channel set is always serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let set: ChannelSet = serde_json::from_str(text).map_err(|e| Error::Parse {
            origin: "channel set JSON".into(),
            message: e.to_string(),
        })?;
        set.check_shape()?;
        Ok(set)
    }

    pub fn check_shape(&self) -> Result<()> {
        let n = self.n_devices;
        let bad = |what: &str| Err(Error::Dimension(format!("channel set: {what}")));
        if self.g.len() != n || self.h.len() != n || self.q.len() != n || self.c.len() != n {
            return bad("per-device arrays must have n_devices entries");
        }
        for i in 0..n {
            if self.g[i].len() != self.n_sense_ant {
                return bad("echo channel length differs from n_sense_ant");
            }
            if self.h[i].len() != self.n_server_ant {
                return bad("uplink channel length differs from n_server_ant");
            }
            if self.q[i].len() != n || self.c[i].len() != n {
                return bad("pairwise arrays must be n_devices x n_devices");
            }
            for k in 0..n {
                let expect = if i == k { 0 } else { self.n_sense_ant };
                if self.q[i][k].len() != expect {
                    return bad("sensing interference channel has the wrong length");
                }
            }
        }
        let finite = |z: &Complex64| z.re.is_finite() && z.im.is_finite();
        let all_finite = self.g.iter().flatten().all(finite)
            && self.h.iter().flatten().all(finite)
            && self.c.iter().flatten().all(finite)
            && self.q.iter().flatten().flatten().all(finite);
        if !all_finite {
            return bad("non-finite entry");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::default_fig2a;
    use approx::assert_relative_eq;

    #[test]
    fn pathloss_values() {
        assert_relative_eq!(pathloss_gain(1.0, 30.0, 2.0).unwrap(), 1e-3, max_relative = 1e-12);
        assert_relative_eq!(pathloss_gain(10.0, 30.0, 2.0).unwrap(), 1e-5, max_relative = 1e-12);
        // 1e-3 * 5^-2.5 = 1e-3 / (25 * sqrt 5)
        let oracle = 1e-3 / (25.0 * 5f64.sqrt());
        assert_relative_eq!(pathloss_gain(5.0, 30.0, 2.5).unwrap(), oracle, max_relative = 1e-12);
        assert_relative_eq!(oracle, 1.7889e-5, max_relative = 1e-4);
        assert!(pathloss_gain(0.0, 30.0, 2.0).is_err());
        assert!(pathloss_gain(-1.0, 30.0, 2.0).is_err());
    }

    #[test]
    fn pure_line_of_sight_has_unit_modulus() {
        let mut cfg = default_fig2a();
        cfg.rician_k_db = f64::INFINITY;
        cfg.pathloss_ref_db = 0.0;
        cfg.pathloss_exponent = 0.0;
        let ch = gen_channels(&cfg, 3);
        let all = ch
            .g
            .iter()
            .flatten()
            .chain(ch.h.iter().flatten())
            .chain(ch.q.iter().flatten().flatten());
        for z in all {
            assert_relative_eq!(z.norm(), 1.0, epsilon = 1e-12);
        }
        for j in 0..8 {
            for i in 0..8 {
                if i != j {
                    assert_relative_eq!(ch.c[j][i].norm(), 1.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = default_fig2a();
        assert_eq!(gen_channels(&cfg, 42), gen_channels(&cfg, 42));
        assert_ne!(gen_channels(&cfg, 42), gen_channels(&cfg, 43));
    }

    #[test]
    fn adding_a_device_keeps_other_links() {
        let cfg = default_fig2a();
        let mut bigger = cfg.clone();
        bigger.device_positions.push([3.0, -4.0]);
        let a = gen_channels(&cfg, 11);
        let b = gen_channels(&bigger, 11);
        assert_eq!(a.g, b.g[..8]);
        assert_eq!(a.h, b.h[..8]);
        assert_eq!(a.q[2][5], b.q[2][5]);
        assert_eq!(a.c[7][0], b.c[7][0]);
    }

    #[test]
    fn unit_mean_square_small_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let k = 10f64.powf(1.0);
        let trials = 1_000_000;
        let mean: f64 = (0..trials)
            .map(|t| rician_coefficient(&mut rng, 0.37 * t as f64, k).norm_sqr())
            .sum::<f64>()
            / trials as f64;
        assert!((mean - 1.0).abs() <= 0.01, "mean {mean}");
    }

    #[test]
    fn magnitudes_decay_with_distance_when_fading_is_frozen() {
        let mut cfg = default_fig2a();
        cfg.rician_k_db = f64::INFINITY;
        cfg.device_positions = vec![[6.0, 0.0], [8.0, 0.0], [12.0, 0.0], [20.0, 0.0]];
        let ch = gen_channels(&cfg, 0);
        let norms: Vec<f64> = ch.g.iter().map(|v| v.iter().map(|z| z.norm_sqr()).sum()).collect();
        assert!(norms.windows(2).all(|w| w[0] > w[1]), "{norms:?}");
        let uplink: Vec<f64> = ch.h.iter().map(|v| v.iter().map(|z| z.norm_sqr()).sum()).collect();
        // server at (-2.5, 10): devices further along +x are further away
        assert!(uplink.windows(2).all(|w| w[0] > w[1]), "{uplink:?}");
    }

    #[test]
    fn round_trip_echo_squares_the_gain() {
        let mut cfg = default_fig2a();
        cfg.rician_k_db = f64::INFINITY;
        let one_way = gen_channels(&cfg, 1);
        cfg.echo_round_trip = true;
        let round = gen_channels(&cfg, 1);
        let d = distance(cfg.device_positions[0], cfg.target_position);
        let gain = pathloss_gain(d, 30.0, 2.0).unwrap();
        assert_relative_eq!(one_way.g[0][0].norm_sqr(), gain, max_relative = 1e-12);
        assert_relative_eq!(round.g[0][0].norm_sqr(), gain * gain, max_relative = 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let cfg = default_fig2a();
        let ch = gen_channels(&cfg, 9);
        let text = ch.to_json();
        assert!(text.contains("[["));
        assert_eq!(ChannelSet::from_json(&text).unwrap(), ch);
        assert!(ChannelSet::from_json("{\"n_devices\": 1}").is_err());
    }
}
