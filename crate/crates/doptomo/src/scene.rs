//! Rotating point-scatterer scenes and synthesis of the received complex
//! baseband signal.
//!
//! A scene is a set of point reflectors rotating at a constant rate about a
//! common axis, observed by a distant antenna radiating a single unmodulated
//! carrier. Each scatterer contributes an amplitude-weighted phasor
//! `a * exp(-j 4 pi R(t) / lambda)` where `R(t)` is its time-varying range;
//! the received trace is the coherent sum over scatterers, uniformly sampled
//! in rotation angle.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::dft;

/// Speed of light in vacuum (m/s), exact.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Spectrogram cells are clamped at this power level (dB) so silent traces
/// produce a finite floor instead of `-inf`.
pub const SPECTROGRAM_DB_FLOOR: f64 = -120.0;

const TAU: f64 = std::f64::consts::TAU;

/// Which range expression drives the synthesized phase history.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RangeModel {
    /// Exact square-root geometry.
    Exact,
    /// First-order far-field expansion; the imaging derivation assumes this
    /// form, so it is the default.
    #[default]
    Approx,
}

/// One rotating point reflector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scatterer {
    r0: f64,
    theta0: f64,
    z0: f64,
    amplitude: f64,
}

impl Scatterer {
    /// Creates a scatterer at radial offset `r0` (m), initial angle `theta0`
    /// (rad, normalized into `[0, 2pi)`), height `z0` (m), with real signal
    /// amplitude `amplitude` (V).
    pub fn new(r0: f64, theta0: f64, z0: f64, amplitude: f64) -> Result<Self> {
        if !(r0.is_finite() && theta0.is_finite() && z0.is_finite() && amplitude.is_finite()) {
            return Err(Error::Config("scatterer parameters must be finite".into()));
        }
        if r0 < 0.0 {
            return Err(Error::Config(format!(
                "radial offset must be >= 0, got {r0}"
            )));
        }
        if amplitude < 0.0 {
            return Err(Error::Config(format!(
                "amplitude must be >= 0, got {amplitude}"
            )));
        }
        Ok(Self {
            r0,
            theta0: theta0.rem_euclid(TAU),
            z0,
            amplitude,
        })
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// Initial angle in `[0, 2pi)`.
    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub fn z0(&self) -> f64 {
        self.z0
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Cartesian x-coordinate at `t = 0`: `r0 cos(theta0)`.
    pub fn x0(&self) -> f64 {
        self.r0 * self.theta0.cos()
    }

    /// Cartesian y-coordinate at `t = 0`: `r0 sin(theta0)`.
    pub fn y0(&self) -> f64 {
        self.r0 * self.theta0.sin()
    }
}

/// Full description of one measurement: carrier, rotation, standoff range,
/// scatterers, and the angular sampling plan.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    carrier_hz: f64,
    omega_r: f64,
    standoff_m: f64,
    scatterers: Vec<Scatterer>,
    sample_count: usize,
    revolutions: u32,
}

impl SceneConfig {
    /// Builds a scene covering one full revolution.
    ///
    /// `carrier_hz` is the carrier frequency (Hz), `omega_r` the angular
    /// rotation rate (rad/s), `standoff_m` the antenna-to-rotation-axis
    /// distance (m), and `sample_count` the number of uniform angle samples.
    pub fn new(
        carrier_hz: f64,
        omega_r: f64,
        standoff_m: f64,
        scatterers: Vec<Scatterer>,
        sample_count: usize,
    ) -> Result<Self> {
        if !(carrier_hz.is_finite() && carrier_hz > 0.0) {
            return Err(Error::Config(format!(
                "carrier frequency must be > 0, got {carrier_hz}"
            )));
        }
        if !(omega_r.is_finite() && omega_r > 0.0) {
            return Err(Error::Config(format!(
                "rotation rate must be > 0, got {omega_r}"
            )));
        }
        if !(standoff_m.is_finite() && standoff_m > 0.0) {
            return Err(Error::Config(format!(
                "standoff range must be > 0, got {standoff_m}"
            )));
        }
        if sample_count < 2 {
            return Err(Error::Config(format!(
                "sample count must be >= 2, got {sample_count}"
            )));
        }
        Ok(Self {
            carrier_hz,
            omega_r,
            standoff_m,
            scatterers,
            sample_count,
            revolutions: 1,
        })
    }

    /// Sets the number of full rotations covered by the sampling plan.
    pub fn with_revolutions(mut self, revolutions: u32) -> Result<Self> {
        if revolutions == 0 {
            return Err(Error::Config("revolutions must be >= 1".into()));
        }
        self.revolutions = revolutions;
        Ok(self)
    }

    pub fn carrier_hz(&self) -> f64 {
        self.carrier_hz
    }

    pub fn omega_r(&self) -> f64 {
        self.omega_r
    }

    /// Antenna-to-rotation-axis distance (m).
    pub fn standoff_m(&self) -> f64 {
        self.standoff_m
    }

    pub fn scatterers(&self) -> &[Scatterer] {
        &self.scatterers
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn revolutions(&self) -> u32 {
        self.revolutions
    }

    /// Carrier wavelength `c / f` (m).
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    /// Angular sample spacing `2 pi revolutions / P` (rad).
    pub fn delta_theta(&self) -> f64 {
        TAU * self.revolutions as f64 / self.sample_count as f64
    }

    /// Time between samples (s).
    pub fn delta_t(&self) -> f64 {
        self.delta_theta() / self.omega_r
    }

    /// Baseband sample rate (Hz).
    pub fn sample_rate_hz(&self) -> f64 {
        1.0 / self.delta_t()
    }

    /// The uniform angle grid `Theta_k = k * delta_theta`.
    pub fn theta_samples(&self) -> Vec<f64> {
        let dt = self.delta_theta();
        (0..self.sample_count).map(|k| k as f64 * dt).collect()
    }

    /// Non-fatal geometry diagnostics. Currently flags scenes where the
    /// far-field assumption behind the approximate range model is dubious
    /// (standoff below ten times the largest scatterer offset).
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let max_offset = self
            .scatterers
            .iter()
            .map(|s| s.r0.max(s.z0.abs()))
            .fold(0.0_f64, f64::max);
        if max_offset > 0.0 && self.standoff_m < 10.0 * max_offset {
            out.push(format!(
                "far-field assumption is weak: standoff {} m < 10 x max scatterer offset {} m",
                self.standoff_m, max_offset
            ));
        }
        out
    }
}

/// Provenance and geometry carried along with sampled signals so that
/// downstream imaging does not need the original [`SceneConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct TraceMeta {
    pub wavelength: f64,
    pub delta_theta: f64,
    pub omega_r: f64,
    pub source: String,
}

impl TraceMeta {
    /// Baseband sample rate implied by the angle grid (Hz).
    pub fn sample_rate_hz(&self) -> f64 {
        self.omega_r / self.delta_theta
    }
}

/// Uniformly sampled complex baseband signal indexed by rotation angle.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalTrace {
    theta: Vec<f64>,
    samples: Vec<Complex64>,
    meta: TraceMeta,
}

impl SignalTrace {
    /// Assembles a trace from matching angle and sample arrays.
    pub fn new(theta: Vec<f64>, samples: Vec<Complex64>, meta: TraceMeta) -> Result<Self> {
        if theta.len() != samples.len() {
            return Err(Error::Dimension(format!(
                "trace has {} angles but {} samples",
                theta.len(),
                samples.len()
            )));
        }
        if theta.is_empty() {
            return Err(Error::Config("trace must not be empty".into()));
        }
        Ok(Self {
            theta,
            samples,
            meta,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn meta(&self) -> &TraceMeta {
        &self.meta
    }

    /// Returns a copy with the samples replaced (angles and metadata kept).
    pub fn with_samples(&self, samples: Vec<Complex64>) -> Result<Self> {
        Self::new(self.theta.clone(), samples, self.meta.clone())
    }
}

/// Exact antenna-to-scatterer range at time `t` (m):
/// `sqrt(r0^2 + Ra^2 + 2 Ra r0 sin(theta0 + omega t) + z0^2)`.
pub fn exact_range(s: &Scatterer, cfg: &SceneConfig, t: f64) -> f64 {
    let ra = cfg.standoff_m;
    (s.r0 * s.r0 + ra * ra + 2.0 * ra * s.r0 * (s.theta0 + cfg.omega_r * t).sin() + s.z0 * s.z0)
        .sqrt()
}

/// Far-field range approximation at time `t` (m):
/// `Ra + x0 sin(omega t) + y0 cos(omega t)`.
pub fn approx_range(s: &Scatterer, cfg: &SceneConfig, t: f64) -> f64 {
    let theta = cfg.omega_r * t;
    cfg.standoff_m + s.x0() * theta.sin() + s.y0() * theta.cos()
}

fn range(s: &Scatterer, cfg: &SceneConfig, t: f64, model: RangeModel) -> f64 {
    match model {
        RangeModel::Exact => exact_range(s, cfg, t),
        RangeModel::Approx => approx_range(s, cfg, t),
    }
}

/// Instantaneous Doppler shift of one scatterer at time `t` (Hz), under the
/// far-field model: `(2 x0 w / lambda) cos(w t) - (2 y0 w / lambda) sin(w t)`.
pub fn doppler_shift(s: &Scatterer, cfg: &SceneConfig, t: f64) -> f64 {
    let lam = cfg.wavelength();
    let theta = cfg.omega_r * t;
    2.0 * cfg.omega_r / lam * (s.x0() * theta.cos() - s.y0() * theta.sin())
}

/// Synthesizes the received trace: for each angle sample the coherent sum of
/// `amplitude * exp(-j 4 pi R / lambda)` over all scatterers.
pub fn synthesize_trace(cfg: &SceneConfig, model: RangeModel) -> SignalTrace {
    let lam = cfg.wavelength();
    let theta = cfg.theta_samples();
    let phase_scale = -4.0 * std::f64::consts::PI / lam;
    let samples: Vec<Complex64> = theta
        .iter()
        .map(|&th| {
            let t = th / cfg.omega_r;
            let mut acc = Complex64::new(0.0, 0.0);
            for s in &cfg.scatterers {
                let r = range(s, cfg, t, model);
                acc += s.amplitude * Complex64::from_polar(1.0, phase_scale * r);
            }
            acc
        })
        .collect();
    let meta = TraceMeta {
        wavelength: lam,
        delta_theta: cfg.delta_theta(),
        omega_r: cfg.omega_r,
        source: format!(
            "synthesized: {} scatterers, {:?} range model",
            cfg.scatterers.len(),
            model
        ),
    };
    SignalTrace {
        theta,
        samples,
        meta,
    }
}

/// Adds i.i.d. circular complex Gaussian noise with per-sample standard
/// deviation `sigma` (so `E|n|^2 = sigma^2`). `sigma = 0` returns the trace
/// unchanged.
pub fn add_noise(trace: &SignalTrace, sigma: f64, rng: &mut impl Rng) -> Result<SignalTrace> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::Config(format!(
            "noise sigma must be >= 0, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(trace.clone());
    }
    let comp = sigma / 2.0_f64.sqrt();
    let samples = trace
        .samples
        .iter()
        .map(|&s| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            s + Complex64::new(comp * re, comp * im)
        })
        .collect();
    trace.with_samples(samples)
}

/// Short-time spectrum of a trace: frames of `window_len` samples advanced by
/// `hop`, Hann-windowed, transformed, and rendered as power in dB.
#[derive(Debug, Clone)]
pub struct Spectrogram {
    times: Vec<f64>,
    freqs_hz: Vec<f64>,
    /// Row-major `times.len() x freqs_hz.len()` power matrix (dB).
    power_db: Vec<f64>,
}

impl Spectrogram {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Frequency axis in Hz, ascending, centered on zero.
    pub fn freqs_hz(&self) -> &[f64] {
        &self.freqs_hz
    }

    pub fn power_db(&self) -> &[f64] {
        &self.power_db
    }

    pub fn frames(&self) -> usize {
        self.times.len()
    }

    pub fn bins(&self) -> usize {
        self.freqs_hz.len()
    }

    #[inline]
    pub fn value(&self, frame: usize, bin: usize) -> f64 {
        self.power_db[frame * self.freqs_hz.len() + bin]
    }

    /// Frequency of the strongest bin in one frame (Hz).
    pub fn peak_freq(&self, frame: usize) -> f64 {
        let row = &self.power_db[frame * self.bins()..(frame + 1) * self.bins()];
        let mut best = 0;
        for (i, v) in row.iter().enumerate() {
            if *v > row[best] {
                best = i;
            }
        }
        self.freqs_hz[best]
    }

    /// Largest `|peak_freq|` over all frames (Hz); the extent of the
    /// strongest micro-Doppler ridge.
    pub fn max_ridge_freq(&self) -> f64 {
        (0..self.frames())
            .map(|f| self.peak_freq(f).abs())
            .fold(0.0, f64::max)
    }
}

/// Computes the spectrogram of `trace` with a periodic Hann window.
///
/// Frames start at multiples of `hop`; frame times are window centers. The
/// frequency axis spans `[-fs/2, fs/2)` in ascending order. Power is
/// `10 log10 |X|^2`, clamped at [`SPECTROGRAM_DB_FLOOR`].
pub fn spectrogram(trace: &SignalTrace, window_len: usize, hop: usize) -> Result<Spectrogram> {
    let p = trace.len();
    if window_len < 2 {
        return Err(Error::Config(format!(
            "window length must be >= 2, got {window_len}"
        )));
    }
    if window_len > p {
        return Err(Error::Config(format!(
            "window length {window_len} exceeds trace length {p}"
        )));
    }
    if hop < 1 {
        return Err(Error::Config("hop must be >= 1".into()));
    }

    let n = window_len;
    let window: Vec<f64> = (0..n)
        .map(|k| 0.5 * (1.0 - (TAU * k as f64 / n as f64).cos()))
        .collect();
    let fs = trace.meta.sample_rate_hz();
    let dt = 1.0 / fs;
    let half = n / 2;
    let freqs_hz: Vec<f64> = (0..n)
        .map(|i| (i as f64 - half as f64) * fs / n as f64)
        .collect();

    let mut times = Vec::new();
    let mut power_db = Vec::new();
    let mut frame = vec![Complex64::new(0.0, 0.0); n];
    let mut start = 0;
    while start + n <= p {
        for (k, f) in frame.iter_mut().enumerate() {
            *f = trace.samples[start + k] * window[k];
        }
        let spec = dft(&frame);
        // fftshift: bin i of the output corresponds to DFT bin (i + n/2) mod n.
        for i in 0..n {
            let v = spec[(i + half) % n].norm_sqr();
            let db = if v > 0.0 {
                (10.0 * v.log10()).max(SPECTROGRAM_DB_FLOOR)
            } else {
                SPECTROGRAM_DB_FLOOR
            };
            power_db.push(db);
        }
        times.push((start + half) as f64 * dt);
        start += hop;
    }

    Ok(Spectrogram {
        times,
        freqs_hz,
        power_db,
    })
}
