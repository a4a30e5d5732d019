//! Scenario configuration, unit handling and target-centric geometry.
//!
//! A scenario is stored on disk as a flat TOML table whose keys carry their
//! unit in the name (`p_sum_mw`, `noise_sense_dbm`, `data_mb`, ...). Every key
//! is optional; missing keys fall back to the built-in conference hall
//! layout returned by [`default_fig2a`]. Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 2-D position in meters.
pub type Point = [f64; 2];

/// Largest network the bitmask-based activation type supports.
pub const MAX_DEVICES: usize = 32;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm) * 1e-3
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    linear_to_db(watts * 1e3)
}

pub fn mw_to_watts(mw: f64) -> f64 {
    mw * 1e-3
}

/// Megabytes (SI, 10^6 bytes) to bits.
pub fn mb_to_bits(mb: f64) -> f64 {
    mb * 8e6
}

/// Fully resolved scenario in linear SI units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub device_positions: Vec<Point>,
    pub server_position: Point,
    pub target_position: Point,
    /// Sensing transmit antennas per device.
    pub n_sense_ant: usize,
    /// Receive antennas at the edge server.
    pub n_server_ant: usize,
    /// Sensing receiver noise power, W.
    pub noise_sense: f64,
    /// Server receiver noise power per antenna, W.
    pub noise_comm: f64,
    /// Per-device transmit power budget, W.
    pub p_max: f64,
    /// Total transmit power budget, W.
    pub p_sum: f64,
    /// Linear sensing-SINR quality threshold.
    pub beta: f64,
    /// Aspect-angle cosine threshold.
    pub alpha: f64,
    pub p_f: f64,
    pub p_m: f64,
    pub lambda: f64,
    pub prior_h0: f64,
    pub prior_h1: f64,
    /// Bits uploaded per sample.
    pub data_bits: f64,
    /// Uplink bandwidth per device, Hz.
    pub bandwidth: f64,
    /// FLOPs needed per sample at the server.
    pub n_flop: f64,
    /// Server computing speed, FLOPs/s.
    pub compute_speed: f64,
    pub pathloss_ref_db: f64,
    pub pathloss_exponent: f64,
    pub rician_k_db: f64,
    /// Model the echo channel with the squared one-way gain.
    pub echo_round_trip: bool,
    /// Divisors applied to (error, latency) inside the weighted-sum objective.
    pub psi_scale: [f64; 2],
    pub seed: u64,
}

/// Decision-model constants shared by the fusion routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionParams {
    pub p_f: f64,
    pub p_m: f64,
    pub lambda: f64,
    pub prior_h0: f64,
    pub prior_h1: f64,
}

impl FusionParams {
    pub fn new(p_f: f64, p_m: f64, lambda: f64) -> Self {
        FusionParams {
            p_f,
            p_m,
            lambda,
            prior_h0: 0.5,
            prior_h1: 0.5,
        }
    }
}

impl ScenarioConfig {
    pub fn n_devices(&self) -> usize {
        self.device_positions.len()
    }

    pub fn fusion_params(&self) -> FusionParams {
        FusionParams {
            p_f: self.p_f,
            p_m: self.p_m,
            lambda: self.lambda,
            prior_h0: self.prior_h0,
            prior_h1: self.prior_h1,
        }
    }

    pub fn rician_k(&self) -> f64 {
        db_to_linear(self.rician_k_db)
    }

    pub fn device(&self, i: usize) -> Result<Point> {
        self.device_positions.get(i).copied().ok_or(Error::Index {
            index: i,
            len: self.n_devices(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_devices();
        if n == 0 {
            return Err(Error::validation("device_positions", "at least one device is required"));
        }
        if n > MAX_DEVICES {
            return Err(Error::validation(
                "device_positions",
                format!("at most {MAX_DEVICES} devices are supported, got {n}"),
            ));
        }
        if self.n_sense_ant == 0 {
            return Err(Error::validation("n_sense_ant", "must be at least 1"));
        }
        if self.n_server_ant == 0 {
            return Err(Error::validation("n_server_ant", "must be at least 1"));
        }
        let strictly_positive = [
            ("noise_sense", self.noise_sense),
            ("noise_comm", self.noise_comm),
            ("p_max", self.p_max),
            ("p_sum", self.p_sum),
            ("beta", self.beta),
            ("data_bits", self.data_bits),
            ("bandwidth", self.bandwidth),
            ("n_flop", self.n_flop),
            ("compute_speed", self.compute_speed),
            ("psi_scale", self.psi_scale[0]),
            ("psi_scale", self.psi_scale[1]),
        ];
        for (field, value) in strictly_positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::validation(field, format!("must be finite and > 0, got {value}")));
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::validation("alpha", "must lie in (0, 1)"));
        }
        if !(self.p_f > 0.0 && self.p_f.is_finite()) {
            return Err(Error::validation("p_f", "must be > 0"));
        }
        if !(self.p_m > 0.0 && self.p_m.is_finite()) {
            return Err(Error::validation("p_m", "must be > 0"));
        }
        if !(self.lambda >= 1.0 && self.lambda.is_finite()) {
            return Err(Error::validation("lambda", "degradation factor must be >= 1"));
        }
        if self.lambda * self.p_f > 1.0 {
            return Err(Error::validation("lambda", "lambda * p_f exceeds 1"));
        }
        if self.lambda * self.p_m > 1.0 {
            return Err(Error::validation("lambda", "lambda * p_m exceeds 1"));
        }
        for (field, prior) in [("prior_h0", self.prior_h0), ("prior_h1", self.prior_h1)] {
            if !(0.0..=1.0).contains(&prior) {
                return Err(Error::validation(field, "must be a probability"));
            }
        }
        if (self.prior_h0 + self.prior_h1 - 1.0).abs() > 1e-12 {
            return Err(Error::validation("prior_h1", "priors must sum to 1"));
        }
        if !(self.pathloss_ref_db.is_finite() && self.pathloss_exponent.is_finite()) {
            return Err(Error::validation("pathloss_exponent", "path-loss parameters must be finite"));
        }
        if self.rician_k_db.is_nan() {
            return Err(Error::validation("rician_k_db", "must not be NaN"));
        }
        let all_points = self
            .device_positions
            .iter()
            .chain([&self.server_position, &self.target_position]);
        for p in all_points {
            if !(p[0].is_finite() && p[1].is_finite()) {
                return Err(Error::validation("device_positions", "coordinates must be finite"));
            }
        }
        for (i, p) in self.device_positions.iter().enumerate() {
            if distance(*p, self.target_position) <= 0.0 {
                return Err(Error::validation(
                    "device_positions",
                    format!("device {} is co-located with the target", i + 1),
                ));
            }
        }
        Ok(())
    }
}

pub fn distance(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// On-disk representation; units are encoded in the key names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioFile {
    pub device_positions: Vec<Point>,
    pub server_position: Point,
    pub target_position: Point,
    /// Optional consistency check against `device_positions`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_devices: Option<usize>,
    pub n_sense_ant: usize,
    pub n_server_ant: usize,
    pub noise_sense_dbm: f64,
    pub noise_comm_dbm: f64,
    pub p_max_mw: f64,
    pub p_sum_mw: f64,
    pub beta_db: f64,
    pub alpha: f64,
    pub p_f: f64,
    pub p_m: f64,
    pub lambda: f64,
    pub prior_h0: f64,
    pub prior_h1: f64,
    pub data_mb: f64,
    pub bandwidth_mhz: f64,
    pub n_flop: f64,
    pub compute_speed: f64,
    pub pathloss_ref_db: f64,
    pub pathloss_exponent: f64,
    pub rician_k_db: f64,
    pub echo_round_trip: bool,
    pub psi_scale: [f64; 2],
    pub seed: u64,
}

impl Default for ScenarioFile {
    fn default() -> Self {
        ScenarioFile {
            device_positions: vec![
                [0.0, 5.0],
                [10.0, 5.0],
                [10.0, 0.0],
                [-10.0, -5.0],
                [0.0, -5.0],
                [-10.0, -5.0],
                [-10.0, 0.0],
                [-10.0, 5.0],
            ],
            server_position: [-2.5, 10.0],
            target_position: [5.0, 0.0],
            n_devices: None,
            n_sense_ant: 8,
            n_server_ant: 8,
            noise_sense_dbm: -90.0,
            noise_comm_dbm: -60.0,
            p_max_mw: 30.0,
            p_sum_mw: 90.0,
            beta_db: 27.0,
            alpha: 0.5,
            p_f: 0.1,
            p_m: 0.1,
            lambda: 3.0,
            prior_h0: 0.5,
            prior_h1: 0.5,
            data_mb: 0.125,
            bandwidth_mhz: 20.0,
            n_flop: 1e9,
            compute_speed: 1e11,
            pathloss_ref_db: 30.0,
            pathloss_exponent: 2.0,
            rician_k_db: 10.0,
            echo_round_trip: false,
            psi_scale: [1.0, 1.0],
            seed: 1,
        }
    }
}

impl ScenarioFile {
    pub fn resolve(&self) -> Result<ScenarioConfig> {
        if let Some(n) = self.n_devices {
            if n != self.device_positions.len() {
                return Err(Error::validation(
                    "n_devices",
                    format!("{n} does not match {} device positions", self.device_positions.len()),
                ));
            }
        }
        let cfg = ScenarioConfig {
            device_positions: self.device_positions.clone(),
            server_position: self.server_position,
            target_position: self.target_position,
            n_sense_ant: self.n_sense_ant,
            n_server_ant: self.n_server_ant,
            noise_sense: dbm_to_watts(self.noise_sense_dbm),
            noise_comm: dbm_to_watts(self.noise_comm_dbm),
            p_max: mw_to_watts(self.p_max_mw),
            p_sum: mw_to_watts(self.p_sum_mw),
            beta: db_to_linear(self.beta_db),
            alpha: self.alpha,
            p_f: self.p_f,
            p_m: self.p_m,
            lambda: self.lambda,
            prior_h0: self.prior_h0,
            prior_h1: self.prior_h1,
            data_bits: mb_to_bits(self.data_mb),
            bandwidth: self.bandwidth_mhz * 1e6,
            n_flop: self.n_flop,
            compute_speed: self.compute_speed,
            pathloss_ref_db: self.pathloss_ref_db,
            pathloss_exponent: self.pathloss_exponent,
            rician_k_db: self.rician_k_db,
            echo_round_trip: self.echo_round_trip,
            psi_scale: self.psi_scale,
            seed: self.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario file is always serializable")
    }
}

/// Parses a scenario from TOML text and applies `key=value` overrides.
///
/// Override values are parsed as TOML values (`p_sum_mw=30`,
/// `device_positions=[[0,1],[2,3]]`); anything that does not parse is taken
/// as a bare string.
pub fn parse_scenario(text: &str, origin: &str, overrides: &[String]) -> Result<ScenarioConfig> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse {
        origin: origin.to_string(),
        message: e.to_string(),
    })?;
    for item in overrides {
        let (key, value) = item.split_once('=').ok_or_else(|| Error::Parse {
            origin: format!("override `{item}`"),
            message: "expected key=value".into(),
        })?;
        table.insert(key.trim().to_string(), parse_override_value(value.trim()));
    }
    let file: ScenarioFile = table.try_into().map_err(|e: toml::de::Error| Error::Parse {
        origin: origin.to_string(),
        message: e.message().to_string(),
    })?;
    file.resolve()
}

fn parse_override_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    load_scenario_with(path, &[])
}

pub fn load_scenario_with(path: &Path, overrides: &[String]) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario(&text, &path.display().to_string(), overrides)
}

/// The eight-device conference-hall scenario.
///
/// Devices 4 and 6 share the coordinate (-10, -5) as listed in the original
/// scenario description; override `device_positions` to move one of them.
pub fn default_fig2a() -> ScenarioConfig {
    ScenarioFile::default()
        .resolve()
        .expect("built-in scenario is valid")
}

/// Intersection angle at the target between devices `i` and `j`, in [0, pi].
pub fn pairwise_angle(cfg: &ScenarioConfig, i: usize, j: usize) -> Result<f64> {
    let pi_ = cfg.device(i)?;
    let pj = cfg.device(j)?;
    if i == j {
        return Err(Error::Domain(format!("pairwise angle needs two distinct devices, got {i} twice")));
    }
    let t = cfg.target_position;
    let u = [pi_[0] - t[0], pi_[1] - t[1]];
    let v = [pj[0] - t[0], pj[1] - t[1]];
    // atan2 of cross/dot is better conditioned than acos near 0 and pi.
    let cross = u[0] * v[1] - u[1] * v[0];
    let dot = u[0] * v[0] + u[1] * v[1];
    Ok(cross.abs().atan2(dot))
}

/// |cos| of the aspect angle between device `i`'s line of sight to the target
/// and the target motion direction `motion_dir` (radians).
pub fn aspect_cos(cfg: &ScenarioConfig, i: usize, motion_dir: f64) -> f64 {
    let p = cfg.device_positions[i];
    aspect_cos_at(p, cfg.target_position, motion_dir)
}

pub(crate) fn aspect_cos_at(device: Point, target: Point, motion_dir: f64) -> f64 {
    let los = [target[0] - device[0], target[1] - device[1]];
    let norm = los[0].hypot(los[1]);
    ((los[0] * motion_dir.cos() + los[1] * motion_dir.sin()) / norm)
        .abs()
        .min(1.0)
}

/// Device activation vector x, stored as a bitmask (bit k is device k+1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Activation {
    mask: u32,
    n: usize,
}

impl Activation {
    pub fn from_mask(mask: u32, n: usize) -> Result<Self> {
        if n > MAX_DEVICES {
            return Err(Error::SizeLimit(format!("{n} devices exceed {MAX_DEVICES}")));
        }
        if n < MAX_DEVICES && mask >> n != 0 {
            return Err(Error::Domain(format!("mask {mask:#b} has bits beyond {n} devices")));
        }
        Ok(Activation { mask, n })
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        let mut mask = 0u32;
        for (k, &b) in bits.iter().enumerate() {
            match b {
                0 => {}
                1 => mask |= 1 << k,
                other => return Err(Error::Domain(format!("activation entries must be 0 or 1, got {other}"))),
            }
        }
        Activation::from_mask(mask, bits.len())
    }

    pub fn from_indices(indices: &[usize], n: usize) -> Result<Self> {
        let mut mask = 0u32;
        for &i in indices {
            if i >= n {
                return Err(Error::Index { index: i, len: n });
            }
            mask |= 1 << i;
        }
        Activation::from_mask(mask, n)
    }

    pub fn all(n: usize) -> Self {
        let mask = if n == MAX_DEVICES { u32::MAX } else { (1u32 << n) - 1 };
        Activation { mask, n }
    }

    pub fn single(i: usize, n: usize) -> Result<Self> {
        Activation::from_indices(&[i], n)
    }

    pub fn mask(&self) -> u32 {
        self.mask
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_active(&self, i: usize) -> bool {
        i < self.n && self.mask >> i & 1 == 1
    }

    /// |S|
    pub fn count(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    /// Active set S in increasing device order.
    pub fn active(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| self.is_active(i)).collect()
    }

    pub fn bits(&self) -> Vec<u8> {
        (0..self.n).map(|i| self.is_active(i) as u8).collect()
    }

    pub fn flip(&self, i: usize) -> Self {
        debug_assert!(i < self.n);
        Activation {
            mask: self.mask ^ (1 << i),
            n: self.n,
        }
    }
}

impl std::fmt::Display for Activation {
    /// One-based active set, e.g. `{1,2,6}`.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let items: Vec<String> = self.active().iter().map(|i| (i + 1).to_string()).collect();
        write!(f, "{{{}}}", items.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn beta_and_budget_units() {
        let cfg = parse_scenario("beta_db = 27\np_sum_mw = 90", "inline", &[]).unwrap();
        assert_relative_eq!(cfg.beta, 10f64.powf(2.7), max_relative = 1e-12);
        assert_relative_eq!(cfg.beta, 501.187, epsilon = 1e-3);
        assert_relative_eq!(cfg.p_sum, 0.09, max_relative = 1e-12);
    }

    #[test]
    fn lambda_times_pf_above_one_is_rejected() {
        let err = parse_scenario("lambda = 20\np_f = 0.1", "inline", &[]).unwrap_err();
        match err {
            Error::Validation { field, .. } => assert_eq!(field, "lambda"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse_scenario("p_summ_mw = 90", "inline", &[]).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
        assert!(err.to_string().contains("p_summ_mw"));
    }

    #[test]
    fn malformed_file_is_parse_error() {
        assert!(matches!(
            parse_scenario("p_sum_mw = = 3", "inline", &[]),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn overrides_take_precedence() {
        let cfg = parse_scenario("p_sum_mw = 90", "inline", &["p_sum_mw=30".into(), "seed=9".into()]).unwrap();
        assert_relative_eq!(cfg.p_sum, 0.03, max_relative = 1e-12);
        assert_eq!(cfg.seed, 9);
    }

    #[test]
    fn device_at_target_is_rejected() {
        let err = parse_scenario("device_positions = [[5.0, 0.0]]", "inline", &[]).unwrap_err();
        assert!(matches!(err, Error::Validation { ref field, .. } if field == "device_positions"));
    }

    #[test]
    fn fig2a_defaults() {
        let cfg = default_fig2a();
        assert_eq!(cfg.n_devices(), 8);
        assert_eq!(cfg.device_positions[2], [10.0, 0.0]);
        assert_eq!(cfg.device_positions[3], cfg.device_positions[5]);
        assert_relative_eq!(cfg.noise_comm, 1e-9, max_relative = 1e-12);
        assert_relative_eq!(cfg.noise_sense, 1e-12, max_relative = 1e-12);
        assert_relative_eq!(cfg.data_bits, 1.0e6, max_relative = 1e-12);
        assert_relative_eq!(cfg.p_max, 0.03, max_relative = 1e-12);
        assert_eq!(cfg.lambda, 3.0);
        assert_eq!(cfg.alpha, 0.5);
    }

    #[test]
    fn angles_at_target() {
        let cfg = default_fig2a();
        assert_relative_eq!(pairwise_angle(&cfg, 0, 1).unwrap(), FRAC_PI_2, epsilon = 1e-12);
        // (-5,5) vs (5,0): acos(-25 / (sqrt(50) * 5))
        let oracle = (-25.0 / (50f64.sqrt() * 5.0)).acos();
        assert_relative_eq!(oracle, 3.0 * PI / 4.0, epsilon = 1e-12);
        assert_relative_eq!(pairwise_angle(&cfg, 0, 2).unwrap(), oracle, epsilon = 1e-12);
        assert!(pairwise_angle(&cfg, 1, 1).is_err());
        assert!(matches!(pairwise_angle(&cfg, 0, 8), Err(Error::Index { .. })));
    }

    #[test]
    fn aspect_cosine_cases() {
        let cfg = default_fig2a();
        // device 1 at (0,5), target (5,0): line of sight along (1,-1)/sqrt(2)
        assert_relative_eq!(aspect_cos(&cfg, 0, -PI / 4.0), 1.0, epsilon = 1e-12);
        assert_relative_eq!(aspect_cos(&cfg, 0, PI / 4.0), 0.0, epsilon = 1e-12);
        assert_relative_eq!(aspect_cos(&cfg, 0, 0.0), 5.0 / 50f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn activation_basics() {
        let x = Activation::from_bits(&[1, 1, 0, 0, 0, 1, 0, 0]).unwrap();
        assert_eq!(x.count(), 3);
        assert_eq!(x.active(), vec![0, 1, 5]);
        assert_eq!(x.to_string(), "{1,2,6}");
        assert!(Activation::from_bits(&[2]).is_err());
        assert_eq!(Activation::all(8).count(), 8);
        assert_eq!(x.flip(5).active(), vec![0, 1]);
    }

    proptest::proptest! {
        #[test]
        fn pairwise_angle_is_symmetric(ax in -20.0..20.0f64, ay in -20.0..20.0f64,
                                        bx in -20.0..20.0f64, by in -20.0..20.0f64) {
            let mut cfg = default_fig2a();
            cfg.device_positions = vec![[ax, ay], [bx, by]];
            proptest::prop_assume!(distance([ax, ay], cfg.target_position) > 1e-6);
            proptest::prop_assume!(distance([bx, by], cfg.target_position) > 1e-6);
            let a = pairwise_angle(&cfg, 0, 1).unwrap();
            let b = pairwise_angle(&cfg, 1, 0).unwrap();
            proptest::prop_assert!((a - b).abs() <= 1e-12);
            proptest::prop_assert!((0.0..=PI).contains(&a));
        }

        #[test]
        fn aspect_cos_ignores_motion_reversal(dir in 0.0..(2.0 * PI), dev in 0usize..8) {
            let cfg = default_fig2a();
            let a = aspect_cos(&cfg, dev, dir);
            let b = aspect_cos(&cfg, dev, dir + PI);
            proptest::prop_assert!((a - b).abs() <= 1e-12);
            proptest::prop_assert!((0.0..=1.0).contains(&a));
        }

        #[test]
        fn dbm_round_trip(dbm in -150.0..50.0f64) {
            let back = watts_to_dbm(dbm_to_watts(dbm));
            proptest::prop_assert!((back - dbm).abs() <= 1e-9 * dbm.abs().max(1.0));
        }
    }
}
