//! Synthetic sparse delay-Doppler channels and windowed pilot observations.
//!
//! The channel is a sparse complex matrix `H` on an `N_tau x N_nu`
//! delay-Doppler grid. A window of `T` slots observes, per slot `t`, the `M`
//! subcarriers of the pattern's active subband through
//! `y_t = R_{f_t} F H g_t^T + w_t`, where `F` is the frequency-delay partial
//! Fourier dictionary, `g_t` the time-Doppler dictionary row of slot `t`, and
//! `w_t` white circular Gaussian noise at the configured SNR. Pilot symbols
//! are taken as unit-modulus and divided out at the receiver, so no explicit
//! modulation operator appears.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::pattern::{GridDims, PilotPattern};

/// Simulation knobs. `seed` drives every random draw; harness code derives
/// per-realization seeds with [`derive_seed`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    #[serde(flatten)]
    pub dims: GridDims,
    /// Delay grid size (`<= N`).
    pub n_tau: usize,
    /// Doppler grid size (`>= window_len`).
    pub n_nu: usize,
    /// Number of channel paths `S`.
    pub num_paths: usize,
    /// Maximum Doppler in cycles per slot at unit pilot interval.
    pub max_doppler: f64,
    /// Multiplier on the slot spacing; enters only as a time-index scale.
    pub pilot_interval: f64,
    /// Exponential power-delay-profile rate.
    pub pdp_decay: f64,
    pub snr_db: f64,
    /// Observation window length `T`.
    pub window_len: usize,
    pub seed: u64,
}

impl SimConfig {
    /// Desk-scale defaults for a given grid.
    pub fn default_for(dims: GridDims) -> Self {
        SimConfig {
            dims,
            n_tau: 64.min(dims.n()),
            n_nu: 16,
            num_paths: 6,
            max_doppler: 0.05,
            pilot_interval: 1.0,
            pdp_decay: 0.1,
            snr_db: 30.0,
            window_len: 10,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_tau == 0 || self.n_tau > self.dims.n() {
            return Err(Error::invalid_argument(format!(
                "n_tau={} must be in [1, N={}]",
                self.n_tau,
                self.dims.n()
            )));
        }
        if self.n_nu == 0 || self.n_nu < self.window_len {
            return Err(Error::invalid_argument(format!(
                "n_nu={} must be >= window_len={}",
                self.n_nu, self.window_len
            )));
        }
        if self.window_len == 0 {
            return Err(Error::invalid_argument("window_len must be positive"));
        }
        if self.num_paths == 0 || self.num_paths > self.n_tau * self.n_nu {
            return Err(Error::invalid_argument(format!(
                "num_paths={} must be in [1, {}]",
                self.num_paths,
                self.n_tau * self.n_nu
            )));
        }
        if self.pilot_interval <= 0.0 {
            return Err(Error::invalid_argument("pilot_interval must be positive"));
        }
        if self.max_doppler < 0.0 || self.pdp_decay < 0.0 {
            return Err(Error::invalid_argument(
                "max_doppler and pdp_decay must be nonnegative",
            ));
        }
        Ok(())
    }
}

/// One sparse channel path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathCoeff {
    pub delay: usize,
    pub doppler: usize,
    pub gain: (f64, f64),
}

impl PathCoeff {
    pub fn gain_c(&self) -> Complex64 {
        Complex64::new(self.gain.0, self.gain.1)
    }
}

/// Sparse delay-Doppler channel `H` (`N_tau x N_nu`, few nonzeros).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DDChannel {
    pub n_tau: usize,
    pub n_nu: usize,
    pub support: Vec<PathCoeff>,
}

impl DDChannel {
    pub fn dense(&self) -> DMatrix<Complex64> {
        let mut h = DMatrix::zeros(self.n_tau, self.n_nu);
        for p in &self.support {
            h[(p.delay, p.doppler)] += p.gain_c();
        }
        h
    }

    pub fn frob_sq(&self) -> f64 {
        self.dense().iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Centered Doppler index of bin `m` on an `n_nu`-point grid (FFT order:
/// bins past the midpoint represent negative frequencies).
pub fn centered_doppler_index(m: usize, n_nu: usize) -> i64 {
    if m < n_nu.div_ceil(2) {
        m as i64
    } else {
        m as i64 - n_nu as i64
    }
}

/// Doppler frequency of bin `m` in cycles per unit slot.
pub fn doppler_frequency(m: usize, cfg: &SimConfig) -> f64 {
    let step = 2.0 * cfg.max_doppler / cfg.n_nu as f64;
    centered_doppler_index(m, cfg.n_nu) as f64 * step
}

/// Partial Fourier dictionaries: `F` maps delay to subcarrier frequency,
/// `G` maps Doppler to slot time.
#[derive(Debug, Clone)]
pub struct Dictionaries {
    /// `N x N_tau`; column `l` is `exp(-2*pi*i*n*l/N) / sqrt(N_tau)`.
    pub f: DMatrix<Complex64>,
    /// `T x N_nu`; row `t` is `exp(+2*pi*i*(t*interval)*nu_m)`, indexed by
    /// absolute slot time.
    pub g: DMatrix<Complex64>,
}

/// Builds the dictionaries for a configuration.
pub fn build_dictionaries(cfg: &SimConfig) -> Dictionaries {
    let n = cfg.dims.n();
    let scale = 1.0 / (cfg.n_tau as f64).sqrt();
    let f = DMatrix::from_fn(n, cfg.n_tau, |row, col| {
        Complex64::from_polar(scale, -TAU * (row * col) as f64 / n as f64)
    });
    let g = DMatrix::from_fn(cfg.window_len, cfg.n_nu, |t, m| {
        Complex64::from_polar(1.0, TAU * t as f64 * cfg.pilot_interval * doppler_frequency(m, cfg))
    });
    Dictionaries { f, g }
}

/// Draws a sparse channel: `S` distinct support cells with exponentially
/// weighted delays, Doppler uniform over the band, and circular Gaussian
/// gains normalized so `E ||H||_F^2 = 1`.
pub fn sample_channel(cfg: &SimConfig) -> Result<DDChannel> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[SEED_CHANNEL]));

    // Exponential PDP over delay bins.
    let weights: Vec<f64> = (0..cfg.n_tau)
        .map(|l| (-cfg.pdp_decay * l as f64).exp())
        .collect();
    let total: f64 = weights.iter().sum();

    let mut cells: Vec<(usize, usize)> = Vec::with_capacity(cfg.num_paths);
    while cells.len() < cfg.num_paths {
        let mut u: f64 = rng.random::<f64>() * total;
        let mut delay = cfg.n_tau - 1;
        for (l, w) in weights.iter().enumerate() {
            if u < *w {
                delay = l;
                break;
            }
            u -= w;
        }
        let doppler = rng.random_range(0..cfg.n_nu);
        if !cells.contains(&(delay, doppler)) {
            cells.push((delay, doppler));
        }
    }

    let scale = 1.0 / (2.0 * cfg.num_paths as f64).sqrt();
    let support = cells
        .into_iter()
        .map(|(delay, doppler)| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            PathCoeff {
                delay,
                doppler,
                gain: (re * scale, im * scale),
            }
        })
        .collect();
    Ok(DDChannel {
        n_tau: cfg.n_tau,
        n_nu: cfg.n_nu,
        support,
    })
}

/// Per-slot pilot measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotObservation {
    pub t: usize,
    pub subband: usize,
    pub y: DVector<Complex64>,
    pub sigma_sq: f64,
}

/// Pilot observations over the sliding window ending at slot `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationWindow {
    pub t0: usize,
    pub slots: Vec<SlotObservation>,
}

impl ObservationWindow {
    pub fn window_len(&self) -> usize {
        self.slots.len()
    }

    /// Mean per-slot noise variance over the window.
    pub fn mean_sigma_sq(&self) -> f64 {
        if self.slots.is_empty() {
            return 0.0;
        }
        self.slots.iter().map(|s| s.sigma_sq).sum::<f64>() / self.slots.len() as f64
    }
}

/// Observes a channel through `cfg.window_len` slots of the pattern at the
/// given cyclic shift. The noise stream is drawn from `cfg.seed`; per-slot
/// noise variance is set from the slot's signal power and `cfg.snr_db`
/// (an infinite SNR yields exact noiseless observations).
pub fn observe(
    pattern: &PilotPattern,
    shift: i64,
    channel: &DDChannel,
    cfg: &SimConfig,
) -> Result<ObservationWindow> {
    let dicts = build_dictionaries(cfg);
    observe_with_dicts(pattern, shift, channel, cfg, &dicts)
}

/// [`observe`] with pre-built dictionaries (they depend only on the config,
/// so sweeps reuse them across shifts and realizations).
pub fn observe_with_dicts(
    pattern: &PilotPattern,
    shift: i64,
    channel: &DDChannel,
    cfg: &SimConfig,
    dicts: &Dictionaries,
) -> Result<ObservationWindow> {
    cfg.validate()?;
    if channel.n_tau != cfg.n_tau || channel.n_nu != cfg.n_nu {
        return Err(Error::invalid_argument(format!(
            "channel grid {}x{} does not match config {}x{}",
            channel.n_tau, channel.n_nu, cfg.n_tau, cfg.n_nu
        )));
    }
    if pattern.k() != cfg.dims.k {
        return Err(Error::invalid_argument(format!(
            "pattern k={} does not match grid k={}",
            pattern.k(),
            cfg.dims.k
        )));
    }
    let shifted = pattern.cyclic_shift(shift);
    let k = cfg.dims.k;
    let m = cfg.dims.m;
    let snr_lin = if cfg.snr_db.is_infinite() {
        f64::INFINITY
    } else {
        10f64.powf(cfg.snr_db / 10.0)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[SEED_NOISE]));
    let mut slots = Vec::with_capacity(cfg.window_len);
    for t in 0..cfg.window_len {
        let subband = shifted.schedule()[t % k];
        // h_t = H * g_t^T, exploiting the sparse support.
        let mut h_t = DVector::zeros(cfg.n_tau);
        for p in &channel.support {
            h_t[p.delay] += p.gain_c() * dicts.g[(t, p.doppler)];
        }
        let f_sub = dicts.f.rows(subband * m, m);
        let x = f_sub * &h_t;
        let sigma_sq = if snr_lin.is_infinite() {
            0.0
        } else {
            x.norm_squared() / m as f64 / snr_lin
        };
        let noise_scale = (sigma_sq / 2.0).sqrt();
        let y = DVector::from_iterator(
            m,
            x.iter().map(|&v| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                v + Complex64::new(re * noise_scale, im * noise_scale)
            }),
        );
        slots.push(SlotObservation {
            t,
            subband,
            y,
            sigma_sq,
        });
    }
    Ok(ObservationWindow {
        t0: cfg.window_len - 1,
        slots,
    })
}

const SEED_CHANNEL: u64 = 0x6368616e; // "chan"
const SEED_NOISE: u64 = 0x6e6f6973; // "nois"

/// Deterministic seed derivation for independent sub-streams.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut s = splitmix64(base ^ 0x9E37_79B9_7F4A_7C15);
    for &p in parts {
        s = splitmix64(s ^ p);
    }
    s
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
