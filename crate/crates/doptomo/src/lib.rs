//! Coherent Doppler tomography of rotating point-scatterer scenes.
//!
//! A single unmodulated carrier illuminates an object rotating at a constant
//! rate. Each scattering center imprints a sinusoidal micro-Doppler signature
//! on the received signal; over a full revolution the measurements sweep a
//! circle in k-space and can be coherently backprojected into an image of the
//! scene. This crate simulates that measurement chain and implements the two
//! adaptive steps built on top of it:
//!
//! * [`scene`] — rotating scenes, range/Doppler models, trace synthesis, and
//!   spectrograms;
//! * [`recon`] — polar/Cartesian backprojection, radial and line cuts, peak
//!   extraction;
//! * [`nulling`] — solving for a continuous receive-phase modulation that
//!   forces the image to zero at chosen points;
//! * [`deblur`] — known-kernel deconvolution of trace-domain distortion by
//!   least squares;
//! * [`numerics`] — the small dense complex linear algebra and DFT the other
//!   modules share;
//! * [`io`] — deterministic CSV/PGM artifact writers.
//!
//! The three bundled CLI scenarios (see the `doptomo-cli` crate and the book
//! under `book/`) reproduce the simulation studies this library was built
//! around: a three-scatterer imaging scene at 6 GHz, point-null synthesis at
//! 600 MHz, and blur/deblur of the single-scatterer trace.
//!
//! # Quick start
//!
//! ```
//! use doptomo::prelude::*;
//!
//! // One scatterer, 1.5 m from the rotation axis, amplitude 3 V.
//! let cfg = SceneConfig::new(
//!     600e6,                       // carrier (Hz)
//!     std::f64::consts::PI,        // rotation rate (rad/s)
//!     60.0,                        // antenna standoff (m)
//!     vec![Scatterer::new(1.5, 300f64.to_radians(), 0.0, 3.0)?],
//!     512,                         // angle samples per revolution
//! )?;
//! let trace = synthesize_trace(&cfg, RangeModel::Approx);
//!
//! // Image it and find the peak: it sits at the scatterer's position.
//! let grid = CartesianGrid::centered(0.125, 1.8)?;
//! let image = backproject_cartesian(&trace, &grid);
//! let peak = image.peak();
//! assert!((peak.x - 0.75).abs() <= 0.125);
//! assert!((peak.y + 1.299).abs() <= 0.125);
//! # Ok::<(), doptomo::Error>(())
//! ```

pub mod deblur;
pub mod error;
pub mod guide;
pub mod io;
pub mod nulling;
pub mod numerics;
pub mod recon;
pub mod scene;

pub use error::{Error, Result};

/// The types and operations most programs need.
pub mod prelude {
    pub use crate::deblur::{
        blur, build_convolution_matrix, deblur_ls, gaussian_kernel, BlurKernel, BlurredTrace,
    };
    pub use crate::error::{Error, Result};
    pub use crate::nulling::{
        apply_phase_offset, build_steering, linearized_residual, solve_phase_offset, verify_null,
        NullSpec, NullTarget, PhaseOffset, SteeringMatrix,
    };
    pub use crate::recon::{
        backproject_at, backproject_cartesian, backproject_polar, line_cut, local_peaks,
        radial_cut, theta_to_kspace, CartesianGrid, ComplexImage, GridDescriptor, ImagePeak,
        KPoint, PolarGrid,
    };
    pub use crate::scene::{
        add_noise, approx_range, doppler_shift, exact_range, spectrogram, synthesize_trace,
        RangeModel, Scatterer, SceneConfig, SignalTrace, Spectrogram, TraceMeta,
    };
}
