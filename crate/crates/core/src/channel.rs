//! Downlink channel model: antenna gain, received power, SINR and the
//! achievable rate of an equal share of a slice band.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;

/// 5G service class of a user.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum SliceClass {
    Embb = 0,
    Urllc = 1,
    Mmtc = 2,
}

impl SliceClass {
    pub const ALL: [SliceClass; 3] = [SliceClass::Embb, SliceClass::Urllc, SliceClass::Mmtc];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(SliceClass::Embb),
            1 => Some(SliceClass::Urllc),
            2 => Some(SliceClass::Mmtc),
            _ => None,
        }
    }
}

impl TryFrom<u8> for SliceClass {
    type Error = String;

    fn try_from(code: u8) -> std::result::Result<Self, String> {
        SliceClass::from_code(code).ok_or_else(|| format!("unknown slice class code {code}"))
    }
}

impl From<SliceClass> for u8 {
    fn from(s: SliceClass) -> u8 {
        s as u8
    }
}

impl fmt::Display for SliceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SliceClass::Embb => "eMBB",
            SliceClass::Urllc => "URLLC",
            SliceClass::Mmtc => "mMTC",
        })
    }
}

/// UAV antenna pattern.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GainModel {
    /// Unit gain everywhere.
    Isotropic,
    /// `main` inside the half-power cone (ground radius `h * tan(beamwidth / 2)`),
    /// `side` outside it.
    Cone { main: f64, side: f64 },
}

impl GainModel {
    pub const DEFAULT_CONE: GainModel = GainModel::Cone { main: 1.0, side: 0.01 };
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Physical and traffic constants of the scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvParams {
    pub tx_power_w: f64,
    /// Linear scale; configure from dB with [`db_to_linear`].
    pub nearfield_pathloss: f64,
    pub pathloss_exp: f64,
    pub beamwidth_deg: f64,
    pub uav_height_m: f64,
    pub noise_w: f64,
    pub bandwidth_hz: f64,
    /// Indexed by [`SliceClass::index`].
    pub demand_bps: [f64; 3],
    /// Indexed by [`SliceClass::index`].
    pub class_probs: [f64; 3],
    pub user_density_per_km2: f64,
    /// Kept for completeness; the service area is derived from user density.
    pub uav_density_per_km2: f64,
    pub gain_model: GainModel,
}

impl Default for EnvParams {
    fn default() -> Self {
        EnvParams {
            tx_power_w: 1.0,
            nearfield_pathloss: db_to_linear(-38.4),
            pathloss_exp: 2.1,
            beamwidth_deg: 30.0,
            uav_height_m: 50.0,
            noise_w: 8e-13,
            bandwidth_hz: 20e6,
            demand_bps: [5e6, 10e6, 0.5e6],
            class_probs: [0.2, 0.1, 0.7],
            user_density_per_km2: 100.0,
            uav_density_per_km2: 8.0,
            gain_model: GainModel::Isotropic,
        }
    }
}

impl EnvParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tx_power_w", self.tx_power_w),
            ("nearfield_pathloss", self.nearfield_pathloss),
            ("pathloss_exp", self.pathloss_exp),
            ("beamwidth_deg", self.beamwidth_deg),
            ("uav_height_m", self.uav_height_m),
            ("noise_w", self.noise_w),
            ("bandwidth_hz", self.bandwidth_hz),
            ("user_density_per_km2", self.user_density_per_km2),
            ("uav_density_per_km2", self.uav_density_per_km2),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.demand_bps.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::InvalidParameter("demands must be finite and >= 0".into()));
        }
        if self.class_probs.iter().any(|p| !(p.is_finite() && *p >= 0.0))
            || (self.class_probs.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(Error::InvalidParameter(format!(
                "class probabilities must be non-negative and sum to 1, got {:?}",
                self.class_probs
            )));
        }
        if let GainModel::Cone { main, side } = self.gain_model {
            if !(main > 0.0 && side > 0.0 && main.is_finite() && side.is_finite()) {
                return Err(Error::InvalidParameter("cone gains must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn demand(&self, slice: SliceClass) -> f64 {
        self.demand_bps[slice.index()]
    }

    /// Ground radius of the half-power cone.
    pub fn cone_radius_m(&self) -> f64 {
        self.uav_height_m * (self.beamwidth_deg / 2.0).to_radians().tan()
    }
}

pub fn antenna_gain(user: Point, uav: Point, params: &EnvParams) -> f64 {
    match params.gain_model {
        GainModel::Isotropic => 1.0,
        GainModel::Cone { main, side } => {
            if user.dist(uav) <= params.cone_radius_m() {
                main
            } else {
                side
            }
        }
    }
}

/// `p * c * gain * (d^2 + h^2)^(-alpha/2)` for horizontal distance `d`.
pub fn received_power(user: Point, uav: Point, params: &EnvParams) -> f64 {
    let d2 = user.dist2(uav);
    let h2 = params.uav_height_m * params.uav_height_m;
    params.tx_power_w
        * params.nearfield_pathloss
        * antenna_gain(user, uav, params)
        * (d2 + h2).powf(-params.pathloss_exp / 2.0)
}

/// SINR from a received-power vector: every UAV other than `serving`
/// interferes.
pub fn sinr_from_powers(powers: &[f64], serving: usize, params: &EnvParams) -> f64 {
    let interference: f64 = powers
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != serving)
        .map(|(_, p)| *p)
        .sum();
    powers[serving] / (interference + params.noise_w)
}

/// SINR of `user` served by `uavs[serving]`.
///
/// Panics if `serving` is out of range.
pub fn sinr(user: Point, serving: usize, uavs: &[Point], params: &EnvParams) -> f64 {
    let powers: Vec<f64> = uavs.iter().map(|u| received_power(user, *u, params)).collect();
    sinr_from_powers(&powers, serving, params)
}

/// Shannon rate of one user holding a `1/n_slice_users` share of a slice
/// that owns `slice_bw_fraction` of the band.
pub fn user_rate(sinr: f64, slice_bw_fraction: f64, n_slice_users: usize, params: &EnvParams) -> f64 {
    slice_bw_fraction * params.bandwidth_hz / n_slice_users as f64 * (1.0 + sinr).log2()
}

/// Smallest slice fraction at which [`user_rate`] reaches `demand_bps`:
/// `demand * n / (B * log2(1 + sinr))`. Zero demand needs nothing; a zero
/// spectral efficiency with positive demand needs `+inf`.
///
/// Satisfaction everywhere in this crate is the test `fraction >= required`,
/// the exact algebraic rearrangement of `user_rate >= demand`, so that a
/// slice set to precisely the required fraction always satisfies the user.
pub fn required_fraction(sinr: f64, demand_bps: f64, n_slice_users: usize, params: &EnvParams) -> f64 {
    if demand_bps <= 0.0 {
        return 0.0;
    }
    let capacity = params.bandwidth_hz * (1.0 + sinr).log2();
    if capacity > 0.0 {
        demand_bps * n_slice_users as f64 / capacity
    } else {
        f64::INFINITY
    }
}
