use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Pathloss in dB for a link of `distance_km`.
pub fn pathloss_db(distance_km: f64) -> f64 {
    128.1 + 37.6 * distance_km.log10()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceGeometry {
    pub distances_km: Vec<f64>,
    pub pathloss_db: Vec<f64>,
    /// Linear amplitude gain `10^(-pathloss/20)`.
    pub amplitude_scale: Vec<f64>,
}

impl DeviceGeometry {
    pub fn from_distances(distances_km: Vec<f64>) -> Result<Self> {
        if let Some(d) = distances_km.iter().find(|d| !(**d > 0.0) || !d.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "device distance must be positive, got {d}"
            )));
        }
        let pathloss_db: Vec<f64> = distances_km.iter().map(|&d| pathloss_db(d)).collect();
        let amplitude_scale = pathloss_db.iter().map(|g| 10f64.powf(-g / 20.0)).collect();
        Ok(Self {
            distances_km,
            pathloss_db,
            amplitude_scale,
        })
    }

    /// Every device at the same distance: equal pathloss for ablations.
    pub fn normalized(n: usize, distance_km: f64) -> Result<Self> {
        Self::from_distances(vec![distance_km; n])
    }

    pub fn len(&self) -> usize {
        self.distances_km.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances_km.is_empty()
    }

    /// Mean of `amplitude_scale^2` over devices.
    pub fn mean_power_gain(&self) -> f64 {
        self.amplitude_scale.iter().map(|a| a * a).sum::<f64>() / self.len().max(1) as f64
    }
}

/// Distances uniform in `[min_distance_km, cell_radius_km]`.
pub fn generate_geometry<R: Rng + ?Sized>(
    n: usize,
    cell_radius_km: f64,
    min_distance_km: f64,
    rng: &mut R,
) -> Result<DeviceGeometry> {
    if !(cell_radius_km > 0.0) || !(min_distance_km > 0.0) || min_distance_km >= cell_radius_km {
        return Err(Error::InvalidConfig(format!(
            "need 0 < min distance < cell radius, got {min_distance_km} and {cell_radius_km} km"
        )));
    }
    let distances = (0..n)
        .map(|_| rng.random_range(min_distance_km..=cell_radius_km))
        .collect();
    DeviceGeometry::from_distances(distances)
}

/// Expected linear power gain `E[10^(-pathloss/10)]` for a distance uniform
/// on `[a, b]` km. Closed form of the integral of `d^-3.76` over the range.
pub fn expected_power_gain_uniform(a: f64, b: f64) -> f64 {
    let e = 3.76;
    let base = 10f64.powf(-12.81);
    if (b - a).abs() < 1e-15 {
        return base * a.powf(-e);
    }
    base * (a.powf(1.0 - e) - b.powf(1.0 - e)) / ((e - 1.0) * (b - a))
}

/// How device positions are produced for each synthesized instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum GeometryPolicy {
    /// Fresh uniform distances for every instance.
    PerInstance { min_km: f64, max_km: f64 },
    /// One draw per scenario, reused for every instance.
    Fixed { min_km: f64, max_km: f64 },
    /// All devices at `distance_km`.
    Normalized { distance_km: f64 },
}

impl Default for GeometryPolicy {
    fn default() -> Self {
        GeometryPolicy::PerInstance {
            min_km: 0.1,
            max_km: 1.0,
        }
    }
}

impl GeometryPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            GeometryPolicy::PerInstance { min_km, max_km } | GeometryPolicy::Fixed { min_km, max_km } => {
                if !(min_km > 0.0) || min_km >= max_km {
                    return Err(Error::InvalidConfig(format!(
                        "geometry range must satisfy 0 < min < max, got [{min_km}, {max_km}]"
                    )));
                }
            }
            GeometryPolicy::Normalized { distance_km } => {
                if !(distance_km > 0.0) {
                    return Err(Error::InvalidConfig("normalized distance must be positive".into()));
                }
            }
        }
        Ok(())
    }

    pub fn draw<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<DeviceGeometry> {
        match *self {
            GeometryPolicy::PerInstance { min_km, max_km } | GeometryPolicy::Fixed { min_km, max_km } => {
                generate_geometry(n, max_km, min_km, rng)
            }
            GeometryPolicy::Normalized { distance_km } => DeviceGeometry::normalized(n, distance_km),
        }
    }

    pub fn redraw_per_instance(&self) -> bool {
        matches!(self, GeometryPolicy::PerInstance { .. })
    }

    /// Average per-device power gain over the instance distribution.
    pub fn reference_power_gain(&self, fixed: &DeviceGeometry) -> f64 {
        match *self {
            GeometryPolicy::PerInstance { min_km, max_km } => expected_power_gain_uniform(min_km, max_km),
            GeometryPolicy::Fixed { .. } => fixed.mean_power_gain(),
            GeometryPolicy::Normalized { distance_km } => 10f64.powf(-pathloss_db(distance_km) / 10.0),
        }
    }
}

/// Flat i.i.d. Rayleigh coefficients, indexed `[device][slot * m + subcarrier]`
/// where `slot = antenna * measurements + t`.
///
/// Each entry is `CN(0, scale_i^2)` for device `i`'s amplitude scale.
pub fn generate_channel<R: Rng + ?Sized>(
    amplitude_scale: &[f64],
    m: usize,
    measurements: usize,
    antennas: usize,
    rng: &mut R,
) -> Vec<Vec<Complex64>> {
    let len = m * measurements * antennas;
    amplitude_scale
        .iter()
        .map(|&a| (0..len).map(|_| complex_gaussian(rng) * a).collect())
        .collect()
}

/// Unit-variance circularly-symmetric complex Gaussian.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}
