//! Random deployments and noise-normalized channel gains.
//!
//! Access nodes (ANs) and user equipments (UEs) are dropped uniformly over a
//! square. Gains follow a log-distance law and are divided once by the noise
//! power over the full system bandwidth, so every SINR expression downstream
//! carries a unit noise term.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoordError, Result};

/// Distances below this are clamped (far-field model validity).
pub const MIN_DISTANCE_M: f64 = 1.0;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Physical constants of a simulated deployment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SystemConfig {
    /// Side of the square deployment region in meters.
    pub area_side: f64,
    pub pathloss_exponent: f64,
    /// Per-pair power budget in watts.
    pub p_max: f64,
    /// Thermal noise density in W/Hz.
    pub noise_density: f64,
    /// Bandwidth used for noise normalization, in Hz.
    pub system_bandwidth: f64,
    /// Linear path gain at 1 m.
    pub reference_gain_at_1m: f64,
    pub rng_seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            area_side: 1000.0,
            pathloss_exponent: 4.0,
            p_max: dbm_to_watts(30.0),
            noise_density: dbm_to_watts(-174.0),
            system_bandwidth: 1e7,
            reference_gain_at_1m: 1.0,
            rng_seed: 0,
        }
    }
}

impl SystemConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_density * self.system_bandwidth
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("area_side", self.area_side),
            ("pathloss_exponent", self.pathloss_exponent),
            ("p_max", self.p_max),
            ("noise_density", self.noise_density),
            ("system_bandwidth", self.system_bandwidth),
            ("reference_gain_at_1m", self.reference_gain_at_1m),
        ];
        for (name, value) in checks {
            if !(value.is_finite() && value > 0.0) {
                return Err(CoordError::InvalidInput(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        Ok(())
    }
}

/// AN and UE positions in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deployment {
    pub an_positions: Vec<[f64; 2]>,
    pub ue_positions: Vec<[f64; 2]>,
}

impl Deployment {
    pub fn an_count(&self) -> usize {
        self.an_positions.len()
    }

    pub fn ue_count(&self) -> usize {
        self.ue_positions.len()
    }

    pub fn distance(&self, ue: usize, an: usize) -> f64 {
        let [ux, uy] = self.ue_positions[ue];
        let [ax, ay] = self.an_positions[an];
        (ux - ax).hypot(uy - ay)
    }
}

/// The channel state every coordination algorithm consumes.
///
/// `gains[k][m]` is the noise-normalized linear power gain between UE `k` and
/// AN `m`. The deployment is absent for hand-built gain matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkInstance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deployment: Option<Deployment>,
    pub p_max: f64,
    pub gains: Vec<Vec<f64>>,
}

impl NetworkInstance {
    /// Builds an instance directly from a K×M gain matrix.
    pub fn from_gains(gains: Vec<Vec<f64>>, p_max: f64) -> Result<Self> {
        let instance = NetworkInstance {
            deployment: None,
            p_max,
            gains,
        };
        instance.validate()?;
        Ok(instance)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_max.is_finite() && self.p_max > 0.0) {
            return Err(CoordError::InvalidInput(format!(
                "p_max must be positive, got {}",
                self.p_max
            )));
        }
        let k = self.gains.len();
        if k == 0 {
            return Err(CoordError::InvalidInput("gain matrix has no UEs".into()));
        }
        let m = self.gains[0].len();
        if m == 0 {
            return Err(CoordError::InvalidInput("gain matrix has no ANs".into()));
        }
        for (ue, row) in self.gains.iter().enumerate() {
            if row.len() != m {
                return Err(CoordError::InvalidInput(format!(
                    "gain row {ue} has {} entries, expected {m}",
                    row.len()
                )));
            }
            if let Some(g) = row.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
                return Err(CoordError::InvalidInput(format!(
                    "gain row {ue} contains invalid entry {g}"
                )));
            }
        }
        if let Some(d) = &self.deployment {
            if d.ue_count() != k || d.an_count() != m {
                return Err(CoordError::InvalidInput(
                    "deployment size does not match gain matrix".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn ue_count(&self) -> usize {
        self.gains.len()
    }

    pub fn an_count(&self) -> usize {
        self.gains.first().map_or(0, Vec::len)
    }

    #[inline]
    pub fn gain(&self, ue: usize, an: usize) -> f64 {
        self.gains[ue][an]
    }

    /// Best gain of `ue` over all ANs, with the AN achieving it (lowest index
    /// on ties).
    pub fn best_an(&self, ue: usize) -> (usize, f64) {
        let mut best = (0, self.gains[ue][0]);
        for (an, &g) in self.gains[ue].iter().enumerate().skip(1) {
            if g > best.1 {
                best = (an, g);
            }
        }
        best
    }

    /// Interference-free SINR of `ue` on its best AN at full power.
    pub fn interference_free_sinr(&self, ue: usize) -> f64 {
        self.p_max * self.best_an(ue).1
    }

    /// Largest SINR any single UE could reach; an upper bound on every common
    /// SINR.
    pub fn max_gain(&self) -> f64 {
        self.gains
            .iter()
            .flat_map(|row| row.iter().copied())
            .fold(0.0, f64::max)
    }
}

/// Drops `m_count` ANs then `k_count` UEs uniformly over the square.
///
/// The stream is ChaCha8 seeded with `config.rng_seed`, so equal seeds give
/// bit-identical positions.
pub fn generate_deployment(
    m_count: usize,
    k_count: usize,
    config: &SystemConfig,
) -> Result<Deployment> {
    config.validate()?;
    if m_count == 0 || k_count == 0 {
        return Err(CoordError::InvalidInput(format!(
            "need at least one AN and one UE, got M={m_count}, K={k_count}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let side = config.area_side;
    let mut draw = |count: usize| -> Vec<[f64; 2]> {
        (0..count)
            .map(|_| [rng.random_range(0.0..=side), rng.random_range(0.0..=side)])
            .collect()
    };
    let an_positions = draw(m_count);
    let ue_positions = draw(k_count);
    Ok(Deployment {
        an_positions,
        ue_positions,
    })
}

/// Log-distance path gain at distance `d` (clamped below at 1 m), before
/// noise normalization.
pub fn path_gain(distance: f64, config: &SystemConfig) -> f64 {
    config.reference_gain_at_1m * distance.max(MIN_DISTANCE_M).powf(-config.pathloss_exponent)
}

pub fn compute_gains(deployment: &Deployment, config: &SystemConfig) -> Result<NetworkInstance> {
    config.validate()?;
    if deployment.an_count() == 0 || deployment.ue_count() == 0 {
        return Err(CoordError::InvalidInput("empty deployment".into()));
    }
    let noise = config.noise_power();
    let gains = (0..deployment.ue_count())
        .map(|k| {
            (0..deployment.an_count())
                .map(|m| path_gain(deployment.distance(k, m), config) / noise)
                .collect()
        })
        .collect();
    Ok(NetworkInstance {
        deployment: Some(deployment.clone()),
        p_max: config.p_max,
        gains,
    })
}

/// Convenience: deployment plus gains in one call.
pub fn generate_instance(
    m_count: usize,
    k_count: usize,
    config: &SystemConfig,
) -> Result<NetworkInstance> {
    let deployment = generate_deployment(m_count, k_count, config)?;
    compute_gains(&deployment, config)
}
