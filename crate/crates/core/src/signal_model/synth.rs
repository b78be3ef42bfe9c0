use std::sync::OnceLock;

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::codebook::{generate_hopping_codebook, LdsCodebook};
use super::geometry::{complex_gaussian, generate_channel, DeviceGeometry, GeometryPolicy};
use super::sensing::{build_sensing_matrix, SensingMatrix};
use crate::rng::{stream, streams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Constellation {
    Bpsk,
    #[default]
    Qpsk,
    Qam16,
}

impl Constellation {
    /// Uniform draw from the unit-average-energy alphabet.
    pub fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> Complex64 {
        match self {
            Constellation::Bpsk => Complex64::new(if rng.random() { 1.0 } else { -1.0 }, 0.0),
            Constellation::Qpsk => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let re = if rng.random() { s } else { -s };
                let im = if rng.random() { s } else { -s };
                Complex64::new(re, im)
            }
            Constellation::Qam16 => {
                const LEVELS: [f64; 4] = [-3.0, -1.0, 1.0, 3.0];
                let scale = 1.0 / 10f64.sqrt();
                let re = LEVELS[rng.random_range(0..4)] * scale;
                let im = LEVELS[rng.random_range(0..4)] * scale;
                Complex64::new(re, im)
            }
        }
    }
}

/// How the noise level of an instance is chosen.
///
/// The relative modes define SNR as `E||Φx||^2 / E||v||^2` over the instance
/// distribution. Physical mode derives the noise from a spectral density and
/// bandwidth (split evenly over subcarriers) and expresses the received
/// samples in units of the noise standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SnrPolicy {
    Fixed {
        db: f64,
    },
    Uniform {
        min_db: f64,
        max_db: f64,
    },
    Physical {
        tx_power_dbm: f64,
        noise_density_dbm_hz: f64,
        bandwidth_hz: f64,
    },
}

impl Default for SnrPolicy {
    fn default() -> Self {
        SnrPolicy::Uniform {
            min_db: 5.0,
            max_db: 25.0,
        }
    }
}

impl SnrPolicy {
    pub fn physical_default() -> Self {
        SnrPolicy::Physical {
            tx_power_dbm: 23.0,
            noise_density_dbm_hz: -170.0,
            bandwidth_hz: 1e6,
        }
    }
}

fn default_antennas() -> usize {
    1
}

/// Static description of one detection setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default = "AudScenario::desk")]
pub struct AudScenario {
    /// Total devices `N`.
    pub devices: usize,
    /// Subcarriers per slot `m`.
    pub subcarriers: usize,
    /// Nonzeros per codeword `S`.
    pub nonzeros: usize,
    /// Active devices `k`.
    pub active: usize,
    /// Stacked data measurements `N_d`.
    pub measurements: usize,
    #[serde(default = "default_antennas")]
    pub antennas: usize,
    #[serde(default)]
    pub constellation: Constellation,
    #[serde(default)]
    pub snr: SnrPolicy,
    #[serde(default)]
    pub geometry: GeometryPolicy,
    #[serde(default)]
    pub codebook_seed: u64,
    /// Independent codebook per measurement slot.
    #[serde(default)]
    pub hopping: bool,
}

impl AudScenario {
    /// Desk-scale defaults: N=20, m=12, N_d=2, S=4, k=2.
    pub fn desk() -> Self {
        Self {
            devices: 20,
            subcarriers: 12,
            nonzeros: 4,
            active: 2,
            measurements: 2,
            antennas: 1,
            constellation: Constellation::Qpsk,
            snr: SnrPolicy::default(),
            geometry: GeometryPolicy::default(),
            codebook_seed: 0,
            hopping: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.active < 1 || self.active >= self.devices {
            return bad(format!("need 1 <= k < N, got k={} N={}", self.active, self.devices));
        }
        if self.measurements < 1 || self.antennas < 1 {
            return bad("N_d and M must be at least 1".into());
        }
        if self.nonzeros < 1 || self.nonzeros > self.subcarriers {
            return bad(format!(
                "need 1 <= S <= m, got S={} m={}",
                self.nonzeros, self.subcarriers
            ));
        }
        match self.snr {
            SnrPolicy::Uniform { min_db, max_db } if !(min_db <= max_db) => {
                return bad(format!("SNR range [{min_db}, {max_db}] is empty"));
            }
            SnrPolicy::Physical { bandwidth_hz, .. } if !(bandwidth_hz > 0.0) => {
                return bad("bandwidth must be positive".into());
            }
            _ => {}
        }
        self.geometry.validate()
    }

    /// Slots per stacked vector: one per (antenna, measurement).
    pub fn slots(&self) -> usize {
        self.measurements * self.antennas
    }

    /// Length of the stacked complex received vector.
    pub fn stacked_len(&self) -> usize {
        self.subcarriers * self.slots()
    }

    /// Length of the real network input.
    pub fn input_dim(&self) -> usize {
        2 * self.stacked_len()
    }

    pub fn with_snr_db(&self, db: f64) -> Self {
        Self {
            snr: SnrPolicy::Fixed { db },
            ..self.clone()
        }
    }
}

/// One synthetic trial.
#[derive(Debug, Clone)]
pub struct AudInstance {
    /// Stacked received vector, slot-major (`slot * m + subcarrier`).
    pub y: Vec<Complex64>,
    /// Active devices, ascending.
    pub support: Vec<usize>,
    /// Composite `s * h` block per active device, aligned with `support`.
    pub x_blocks: Vec<Vec<Complex64>>,
    /// Channel per active device, aligned with `support`.
    pub channels: Vec<Vec<Complex64>>,
    /// Symbol per active device and measurement slot.
    pub symbols: Vec<Vec<Complex64>>,
    pub activity: Vec<bool>,
    pub noise: Vec<Complex64>,
    pub noise_variance: f64,
    pub snr_db: f64,
}

impl AudInstance {
    /// Full-length block-sparse vector `x` with zero blocks for idle devices.
    pub fn sparse_x(&self, devices: usize) -> Vec<Complex64> {
        let w = self.y.len();
        let mut x = vec![Complex64::new(0.0, 0.0); devices * w];
        for (&d, block) in self.support.iter().zip(&self.x_blocks) {
            x[d * w..(d + 1) * w].copy_from_slice(block);
        }
        x
    }
}

/// A scenario with its codebook and scenario-level geometry materialized.
#[derive(Debug)]
pub struct Environment {
    pub scenario: AudScenario,
    pub codebook: LdsCodebook,
    /// Geometry reused by the `Fixed` and `Normalized` policies.
    pub geometry: DeviceGeometry,
    reference_gain: f64,
    sensing: OnceLock<SensingMatrix>,
}

impl Environment {
    pub fn new(scenario: AudScenario) -> Result<Self> {
        scenario.validate()?;
        let slots = if scenario.hopping { scenario.measurements } else { 1 };
        let codebook = generate_hopping_codebook(
            scenario.subcarriers,
            scenario.devices,
            scenario.nonzeros,
            slots,
            &mut stream(scenario.codebook_seed, streams::CODEBOOK),
        )?;
        Self::with_codebook(scenario, codebook)
    }

    pub fn with_codebook(scenario: AudScenario, codebook: LdsCodebook) -> Result<Self> {
        scenario.validate()?;
        if codebook.m != scenario.subcarriers || codebook.n != scenario.devices {
            return Err(Error::InvalidConfig(format!(
                "codebook is {}x{}, scenario needs {}x{}",
                codebook.m, codebook.n, scenario.subcarriers, scenario.devices
            )));
        }
        let geometry = scenario
            .geometry
            .draw(scenario.devices, &mut stream(scenario.codebook_seed, streams::GEOMETRY))?;
        let reference_gain = scenario.geometry.reference_power_gain(&geometry);
        Ok(Self {
            scenario,
            codebook,
            geometry,
            reference_gain,
            sensing: OnceLock::new(),
        })
    }

    /// `Φ`, built on first use.
    pub fn sensing(&self) -> &SensingMatrix {
        self.sensing.get_or_init(|| {
            build_sensing_matrix(&self.codebook, self.scenario.measurements, self.scenario.antennas)
        })
    }

    /// Ratio `σ_n^2 / σ_x^2` for the MMSE refit. Under the relative SNR
    /// convention the average per-entry `x` variance is one, so this is the
    /// noise variance itself.
    pub fn mmse_ratio(&self, instance: &AudInstance) -> f64 {
        match self.scenario.snr {
            SnrPolicy::Physical { .. } => {
                let mean_sq = instance
                    .x_blocks
                    .iter()
                    .flatten()
                    .map(|v| v.norm_sqr())
                    .sum::<f64>()
                    / instance.x_blocks.iter().map(Vec::len).sum::<usize>().max(1) as f64;
                instance.noise_variance / mean_sq.max(f64::MIN_POSITIVE)
            }
            _ => instance.noise_variance,
        }
    }

    /// Draws an instance with the scenario's own policies.
    pub fn synthesize<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<AudInstance> {
        let sc = &self.scenario;
        let per_instance;
        let geometry = if sc.geometry.redraw_per_instance() {
            per_instance = sc.geometry.draw(sc.devices, rng)?;
            &per_instance
        } else {
            &self.geometry
        };
        synthesize_with(self, geometry, rng)
    }
}

fn synthesize_with<R: Rng + ?Sized>(
    env: &Environment,
    geometry: &DeviceGeometry,
    rng: &mut R,
) -> Result<AudInstance> {
    let sc = &env.scenario;
    let (n, m, k) = (sc.devices, sc.subcarriers, sc.active);
    if geometry.len() != n {
        return Err(Error::InvalidConfig(format!(
            "geometry has {} devices, scenario has {n}",
            geometry.len()
        )));
    }
    let slots = sc.slots();
    let len = m * slots;

    let mut support = sample(rng, n, k).into_vec();
    support.sort_unstable();

    let (snr_db, noise_variance, gain) = match sc.snr {
        SnrPolicy::Fixed { db } => relative_noise(db, k, m, env.reference_gain),
        SnrPolicy::Uniform { min_db, max_db } => {
            let db = if min_db == max_db { min_db } else { rng.random_range(min_db..max_db) };
            relative_noise(db, k, m, env.reference_gain)
        }
        SnrPolicy::Physical {
            tx_power_dbm,
            noise_density_dbm_hz,
            bandwidth_hz,
        } => {
            let tx_w = 10f64.powf((tx_power_dbm - 30.0) / 10.0);
            let noise_w = 10f64.powf((noise_density_dbm_hz - 30.0) / 10.0) * bandwidth_hz / m as f64;
            let gain = tx_w / noise_w;
            let snr = gain * env.reference_gain * k as f64 / m as f64;
            (10.0 * snr.log10(), 1.0, gain.sqrt())
        }
    };

    let amplitudes: Vec<f64> = support.iter().map(|&d| geometry.amplitude_scale[d] * gain).collect();
    let channels = generate_channel(&amplitudes, m, sc.measurements, sc.antennas, rng);
    let symbols: Vec<Vec<Complex64>> = support
        .iter()
        .map(|_| (0..sc.measurements).map(|_| sc.constellation.draw(rng)).collect())
        .collect();

    let mut y = vec![Complex64::new(0.0, 0.0); len];
    let mut x_blocks = Vec::with_capacity(k);
    for ((&d, h), s) in support.iter().zip(&channels).zip(&symbols) {
        let mut block = vec![Complex64::new(0.0, 0.0); len];
        for q in 0..slots {
            let t = q % sc.measurements;
            for p in 0..m {
                block[q * m + p] = s[t] * h[q * m + p];
            }
            let cw = env.codebook.codeword(d, t);
            for (&p, &c) in cw.positions.iter().zip(&cw.values) {
                y[q * m + p] += c * block[q * m + p];
            }
        }
        x_blocks.push(block);
    }
    let sigma = noise_variance.sqrt();
    let noise: Vec<Complex64> = (0..len).map(|_| complex_gaussian(rng) * sigma).collect();
    for (yi, vi) in y.iter_mut().zip(&noise) {
        *yi += vi;
    }

    let mut activity = vec![false; n];
    for &d in &support {
        activity[d] = true;
    }
    Ok(AudInstance {
        y,
        support,
        x_blocks,
        channels,
        symbols,
        activity,
        noise,
        noise_variance,
        snr_db,
    })
}

/// Relative convention: amplitudes are divided by the reference gain so the
/// average per-entry `x` variance is one; then `σ^2 = k / (m * snr)`.
fn relative_noise(db: f64, k: usize, m: usize, reference_gain: f64) -> (f64, f64, f64) {
    let snr = 10f64.powf(db / 10.0);
    (db, k as f64 / (m as f64 * snr), 1.0 / reference_gain.sqrt())
}

/// Draws one instance using an explicitly supplied geometry.
pub fn synthesize_received<R: Rng + ?Sized>(
    env: &Environment,
    geometry: &DeviceGeometry,
    rng: &mut R,
) -> Result<AudInstance> {
    synthesize_with(env, geometry, rng)
}

/// `[Re(y_1) .. Re(y_d), Im(y_1) .. Im(y_d)]`
pub fn real_split(y: &[Complex64]) -> Vec<f64> {
    y.iter().map(|v| v.re).chain(y.iter().map(|v| v.im)).collect()
}

/// Inverse of [`real_split`].
pub fn recombine(v: &[f64]) -> Vec<Complex64> {
    let d = v.len() / 2;
    (0..d).map(|i| Complex64::new(v[i], v[d + i])).collect()
}
