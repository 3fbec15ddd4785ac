//! Known-kernel deconvolution of trace-domain blur by least squares.
//!
//! The receiver's narrowband response is modeled as a complex FIR kernel
//! `z` convolving the ideal trace: `s_bar = Z s + n`, where `Z` is the tall
//! `(L+P-1) x P` full-convolution Toeplitz matrix built from the `L` kernel
//! taps. The ideal trace is recovered by minimizing
//! `||Z s_hat - s_bar||^2 + ridge ||s_hat||^2`; with `ridge = 0` this is the
//! plain least-squares estimate, solved by an orthogonal factorization
//! rather than explicit normal-equation inversion.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::{lstsq, ComplexMatrix};
use crate::scene::{SignalTrace, TraceMeta};

/// Complex FIR taps modeling the receiver distortion.
#[derive(Debug, Clone, PartialEq)]
pub struct BlurKernel {
    taps: Vec<Complex64>,
}

impl BlurKernel {
    pub fn new(taps: Vec<Complex64>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::Config("blur kernel needs at least one tap".into()));
        }
        if taps.iter().any(|t| !t.re.is_finite() || !t.im.is_finite()) {
            return Err(Error::Config("blur kernel taps must be finite".into()));
        }
        if taps.iter().all(|t| t.re == 0.0 && t.im == 0.0) {
            return Err(Error::Config("blur kernel must not be all zero".into()));
        }
        Ok(Self { taps })
    }

    pub fn taps(&self) -> &[Complex64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }
}

/// Real symmetric Gaussian kernel of `len` taps:
/// `taps[i] = gain * exp(-(i - (len-1)/2)^2 / (2 sigma^2))`.
pub fn gaussian_kernel(len: usize, sigma: f64, gain: f64) -> Result<BlurKernel> {
    if len < 1 {
        return Err(Error::Config("kernel length must be >= 1".into()));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::Config(format!(
            "kernel sigma must be > 0, got {sigma}"
        )));
    }
    if !(gain.is_finite() && gain != 0.0) {
        return Err(Error::Config(format!(
            "kernel gain must be nonzero, got {gain}"
        )));
    }
    let center = (len - 1) as f64 / 2.0;
    let taps = (0..len)
        .map(|i| {
            let d = i as f64 - center;
            Complex64::new(gain * (-d * d / (2.0 * sigma * sigma)).exp(), 0.0)
        })
        .collect();
    BlurKernel::new(taps)
}

/// A distorted trace: `L + P - 1` convolution outputs plus the geometry
/// needed to rebuild the source angle grid after deblurring.
#[derive(Debug, Clone)]
pub struct BlurredTrace {
    samples: Vec<Complex64>,
    source_len: usize,
    kernel_len: usize,
    meta: TraceMeta,
}

impl BlurredTrace {
    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Length `P` of the undistorted source trace.
    pub fn source_len(&self) -> usize {
        self.source_len
    }

    /// Number of kernel taps `L` that produced this trace.
    pub fn kernel_len(&self) -> usize {
        self.kernel_len
    }

    pub fn meta(&self) -> &TraceMeta {
        &self.meta
    }

    /// The `P` samples starting at the kernel group-delay offset
    /// `(L-1)/2`. For a symmetric kernel this window is aligned with the
    /// source angle grid, which keeps display images from rotating.
    pub fn centered_window(&self) -> &[Complex64] {
        let start = (self.kernel_len - 1) / 2;
        &self.samples[start..start + self.source_len]
    }

    /// Views the centered window as a [`SignalTrace`] on the source angle
    /// grid, for imaging the distorted signal.
    pub fn centered_trace(&self) -> Result<SignalTrace> {
        let theta: Vec<f64> = (0..self.source_len)
            .map(|k| k as f64 * self.meta.delta_theta)
            .collect();
        let mut meta = self.meta.clone();
        meta.source = format!("{} (blurred, centered window)", self.meta.source);
        SignalTrace::new(theta, self.centered_window().to_vec(), meta)
    }
}

/// Convolves a trace with the kernel (full convolution, output length
/// `L + P - 1`) and adds circular complex Gaussian noise of per-sample
/// standard deviation `noise_sigma`.
pub fn blur(
    trace: &SignalTrace,
    kernel: &BlurKernel,
    noise_sigma: f64,
    rng: &mut impl Rng,
) -> Result<BlurredTrace> {
    if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
        return Err(Error::Config(format!(
            "noise sigma must be >= 0, got {noise_sigma}"
        )));
    }
    let p = trace.len();
    let l = kernel.len();
    let mut samples = vec![Complex64::new(0.0, 0.0); l + p - 1];
    for (i, &s) in trace.samples().iter().enumerate() {
        for (j, &z) in kernel.taps().iter().enumerate() {
            samples[i + j] += s * z;
        }
    }
    if noise_sigma > 0.0 {
        let comp = noise_sigma / 2.0_f64.sqrt();
        for v in &mut samples {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *v += Complex64::new(comp * re, comp * im);
        }
    }
    Ok(BlurredTrace {
        samples,
        source_len: p,
        kernel_len: l,
        meta: trace.meta().clone(),
    })
}

/// Builds the `(L+P-1) x P` full-convolution matrix: column `p` holds the
/// kernel taps shifted down by `p` rows.
pub fn build_convolution_matrix(kernel: &BlurKernel, p: usize) -> Result<ComplexMatrix> {
    if p < 1 {
        return Err(Error::Config("source length must be >= 1".into()));
    }
    let l = kernel.len();
    let mut m = ComplexMatrix::zeros(l + p - 1, p);
    for col in 0..p {
        for (j, &z) in kernel.taps().iter().enumerate() {
            m.set(col + j, col, z);
        }
    }
    Ok(m)
}

/// Recovers the undistorted trace from a blurred one by least squares:
/// minimizes `||Z s - s_bar||^2 + ridge ||s||^2`.
///
/// The `L - 1` transient rows are part of the system and are never trimmed.
/// With `ridge = 0` a numerically rank-deficient `Z` is an explicit error;
/// any `ridge > 0` restores full rank.
pub fn deblur_ls(blurred: &BlurredTrace, kernel: &BlurKernel, ridge: f64) -> Result<SignalTrace> {
    if !(ridge.is_finite() && ridge >= 0.0) {
        return Err(Error::Config(format!("ridge must be >= 0, got {ridge}")));
    }
    if kernel.len() != blurred.kernel_len() {
        return Err(Error::Dimension(format!(
            "kernel has {} taps but the blurred trace was produced with {}",
            kernel.len(),
            blurred.kernel_len()
        )));
    }
    let p = blurred.source_len();
    let z = build_convolution_matrix(kernel, p)?;
    let m = z.rows();

    let x = if ridge > 0.0 {
        // Augment with sqrt(ridge) * I rows; the same orthogonal
        // factorization then minimizes the ridge objective.
        let sqrt_ridge = ridge.sqrt();
        let aug = ComplexMatrix::from_fn(m + p, p, |i, j| {
            if i < m {
                z.get(i, j)
            } else if i - m == j {
                Complex64::new(sqrt_ridge, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let mut rhs = blurred.samples().to_vec();
        rhs.resize(m + p, Complex64::new(0.0, 0.0));
        lstsq(&aug, &rhs)?
    } else {
        lstsq(&z, blurred.samples())?
    };

    let theta: Vec<f64> = (0..p)
        .map(|k| k as f64 * blurred.meta().delta_theta)
        .collect();
    let mut meta = blurred.meta().clone();
    meta.source = format!("{} (deblurred, ridge {ridge})", blurred.meta().source);
    SignalTrace::new(theta, x, meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{synthesize_trace, RangeModel, Scatterer, SceneConfig};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn test_trace(p: usize) -> SignalTrace {
        let cfg = SceneConfig::new(
            600e6,
            std::f64::consts::PI,
            60.0,
            vec![Scatterer::new(1.5, 300.0_f64.to_radians(), 0.0, 3.0).unwrap()],
            p,
        )
        .unwrap();
        synthesize_trace(&cfg, RangeModel::Approx)
    }

    fn random_trace(p: usize, rng: &mut impl Rng) -> SignalTrace {
        let base = test_trace(p);
        let samples = (0..p)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        base.with_samples(samples).unwrap()
    }

    fn random_kernel(l: usize, rng: &mut impl Rng) -> BlurKernel {
        BlurKernel::new(
            (0..l)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect(),
        )
        .unwrap()
    }

    fn rel_err(a: &[Complex64], b: &[Complex64]) -> f64 {
        let num: f64 = a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let den: f64 = b.iter().map(|y| y.norm_sqr()).sum::<f64>().sqrt();
        num / den
    }

    #[test]
    fn gaussian_kernel_shapes() {
        let k = gaussian_kernel(1, 2.0, 0.7).unwrap();
        assert_eq!(k.len(), 1);
        assert_eq!(k.taps()[0], Complex64::new(0.7, 0.0));

        let k = gaussian_kernel(7, 1.0, 1.0).unwrap();
        for i in 0..7 {
            assert!(
                (k.taps()[i] - k.taps()[6 - i]).norm() < 1e-15,
                "asymmetric at {i}"
            );
        }
        let center = k.taps()[3].re;
        assert!(k.taps().iter().all(|t| t.re <= center));
        assert_eq!(center, 1.0);

        // The default display kernel: bell curve, unit peak, monotone flanks.
        let k = gaussian_kernel(31, 5.0, 1.0).unwrap();
        assert_eq!(k.taps()[15].re, 1.0);
        for i in 0..15 {
            assert!(k.taps()[i].re < k.taps()[i + 1].re);
            assert!((k.taps()[i] - k.taps()[30 - i]).norm() < 1e-15);
        }

        assert!(gaussian_kernel(0, 1.0, 1.0).is_err());
        assert!(gaussian_kernel(5, 0.0, 1.0).is_err());
    }

    #[test]
    fn unit_impulse_kernel_is_identity() {
        let trace = test_trace(64);
        let kernel = BlurKernel::new(vec![Complex64::new(1.0, 0.0)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let blurred = blur(&trace, &kernel, 0.0, &mut rng).unwrap();
        assert_eq!(blurred.len(), 64);
        assert_eq!(blurred.samples(), trace.samples());

        // Identity kernel: the deblurred trace equals the blurred samples.
        let deblurred = deblur_ls(&blurred, &kernel, 0.0).unwrap();
        let err = rel_err(deblurred.samples(), trace.samples());
        assert!(err < 1e-14, "identity roundtrip err {err}");
    }

    #[test]
    fn constant_input_interior_equals_tap_sum() {
        let trace = test_trace(32)
            .with_samples(vec![Complex64::new(1.0, 0.0); 32])
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let kernel = gaussian_kernel(9, 2.0, 1.0).unwrap();
        let tap_sum: Complex64 = kernel.taps().iter().sum();
        let blurred = blur(&trace, &kernel, 0.0, &mut rng).unwrap();
        // Interior samples (full overlap): indices L-1 .. P-1.
        for i in 8..32 {
            assert!((blurred.samples()[i] - tap_sum).norm() < 1e-12);
        }
    }

    #[test]
    fn convolution_matrix_structure() {
        let kernel = BlurKernel::new(vec![Complex64::new(1.0, 0.0)]).unwrap();
        let z = build_convolution_matrix(&kernel, 4).unwrap();
        assert_eq!((z.rows(), z.cols()), (4, 4));
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_eq!(z.get(i, j), Complex64::new(expect, 0.0));
            }
        }

        let (z0, z1) = (Complex64::new(0.3, -0.1), Complex64::new(-0.8, 0.2));
        let z = build_convolution_matrix(&BlurKernel::new(vec![z0, z1]).unwrap(), 2).unwrap();
        assert_eq!((z.rows(), z.cols()), (3, 2));
        assert_eq!(z.get(0, 0), z0);
        assert_eq!(z.get(0, 1), Complex64::new(0.0, 0.0));
        assert_eq!(z.get(1, 0), z1);
        assert_eq!(z.get(1, 1), z0);
        assert_eq!(z.get(2, 0), Complex64::new(0.0, 0.0));
        assert_eq!(z.get(2, 1), z1);
    }

    #[test]
    fn matrix_path_matches_direct_convolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for (l, p) in [(1usize, 16usize), (5, 32), (16, 64)] {
            let trace = random_trace(p, &mut rng);
            let kernel = random_kernel(l, &mut rng);
            let blurred = blur(&trace, &kernel, 0.0, &mut rng).unwrap();
            let z = build_convolution_matrix(&kernel, p).unwrap();
            let via_matrix = z.mul_vec(trace.samples()).unwrap();
            let scale = blurred
                .samples()
                .iter()
                .map(|v| v.norm())
                .fold(0.0, f64::max);
            for (a, b) in via_matrix.iter().zip(blurred.samples()) {
                assert!((a - b).norm() <= 1e-12 * scale.max(1.0));
            }
        }
    }

    #[test]
    fn noiseless_roundtrip_recovers_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (l, p) in [(1usize, 64usize), (8, 64), (31, 64), (8, 256)] {
            let trace = random_trace(p, &mut rng);
            let kernel = random_kernel(l, &mut rng);
            let blurred = blur(&trace, &kernel, 0.0, &mut rng).unwrap();
            let recovered = deblur_ls(&blurred, &kernel, 0.0).unwrap();
            let err = rel_err(recovered.samples(), trace.samples());
            assert!(err <= 1e-8, "L={l} P={p}: rel err {err:.3e}");
            assert_eq!(recovered.theta(), trace.theta());
        }
    }

    #[test]
    fn residual_is_orthogonal_to_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let trace = random_trace(96, &mut rng);
        let kernel = random_kernel(11, &mut rng);
        // Noisy observation so the residual is nonzero.
        let blurred = blur(&trace, &kernel, 0.05, &mut rng).unwrap();
        let recovered = deblur_ls(&blurred, &kernel, 0.0).unwrap();
        let z = build_convolution_matrix(&kernel, 96).unwrap();
        let zs = z.mul_vec(recovered.samples()).unwrap();
        let resid: Vec<Complex64> = zs
            .iter()
            .zip(blurred.samples())
            .map(|(a, b)| a - b)
            .collect();
        let ortho = z.herm_mul_vec(&resid).unwrap();
        let bnorm = blurred
            .samples()
            .iter()
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            .sqrt();
        for v in ortho {
            assert!(v.norm() <= 1e-10 * bnorm, "Z^H r = {:.3e}", v.norm());
        }
    }

    #[test]
    fn scaling_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let trace = random_trace(64, &mut rng);
        let kernel = random_kernel(7, &mut rng);
        let blurred = blur(&trace, &kernel, 0.0, &mut rng).unwrap();
        let alpha = Complex64::new(-1.3, 2.1);
        let scaled = BlurredTrace {
            samples: blurred.samples().iter().map(|v| alpha * v).collect(),
            source_len: blurred.source_len(),
            kernel_len: blurred.kernel_len(),
            meta: blurred.meta().clone(),
        };
        let base = deblur_ls(&blurred, &kernel, 0.0).unwrap();
        let scaled_out = deblur_ls(&scaled, &kernel, 0.0).unwrap();
        let scale = base.samples().iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (a, b) in scaled_out.samples().iter().zip(base.samples()) {
            assert!((a - alpha * b).norm() <= 1e-10 * scale * alpha.norm());
        }
    }

    #[test]
    fn recovered_image_matches_clean_image() {
        // Image-domain statement of exact recovery: backprojecting the
        // recovered trace reproduces the clean image to below -60 dB of its
        // peak in the noiseless case.
        use crate::recon::{backproject_cartesian, CartesianGrid};
        let trace = test_trace(128);
        let kernel = gaussian_kernel(31, 5.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let blurred = blur(&trace, &kernel, 0.0, &mut rng).unwrap();
        let recovered = deblur_ls(&blurred, &kernel, 0.0).unwrap();
        let grid = CartesianGrid::centered(0.1, 1.8).unwrap();
        let clean_img = backproject_cartesian(&trace, &grid);
        let rec_img = backproject_cartesian(&recovered, &grid);
        let peak = clean_img.peak().magnitude;
        let worst = clean_img
            .values()
            .iter()
            .zip(rec_img.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(
            worst <= 1e-3 * peak,
            "image deviation {:.1} dB rel peak",
            20.0 * (worst / peak).log10()
        );
    }

    #[test]
    fn noise_monotonicity_over_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let trace = test_trace(128);
        let kernel = gaussian_kernel(9, 1.5, 1.0).unwrap();
        let mut mean_err = [0.0_f64; 2];
        for (slot, sigma) in [(0usize, 1e-4), (1usize, 1e-2)] {
            for _ in 0..20 {
                let blurred = blur(&trace, &kernel, sigma, &mut rng).unwrap();
                let rec = deblur_ls(&blurred, &kernel, 0.0).unwrap();
                mean_err[slot] += rel_err(rec.samples(), trace.samples()) / 20.0;
            }
        }
        assert!(
            mean_err[1] > mean_err[0],
            "mean err at 1e-2 ({:.3e}) should exceed 1e-4 ({:.3e})",
            mean_err[1],
            mean_err[0]
        );
    }

    #[test]
    fn degenerate_kernel_errors_without_ridge_and_solves_with_it() {
        // Subnormal taps: the squared column norms underflow to zero, which
        // is exactly the numerical rank collapse the contract surfaces.
        let kernel = BlurKernel::new(vec![Complex64::new(1e-300, 0.0); 3]).unwrap();
        let trace = test_trace(16);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let blurred = blur(&trace, &kernel, 0.0, &mut rng).unwrap();
        match deblur_ls(&blurred, &kernel, 0.0) {
            Err(Error::RankDeficient(_)) => {}
            other => panic!("expected rank deficiency, got {other:?}"),
        }
        assert!(deblur_ls(&blurred, &kernel, 1e-6).is_ok());
    }

    #[test]
    fn centered_window_aligns_symmetric_kernels() {
        let trace = test_trace(64);
        let kernel = gaussian_kernel(31, 5.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let blurred = blur(&trace, &kernel, 0.0, &mut rng).unwrap();
        assert_eq!(blurred.len(), 64 + 31 - 1);
        let window = blurred.centered_window();
        assert_eq!(window.len(), 64);
        // The window starts at the group delay (L-1)/2 = 15.
        assert_eq!(window[0], blurred.samples()[15]);
        let ct = blurred.centered_trace().unwrap();
        assert_eq!(ct.len(), 64);
        assert_eq!(ct.theta(), trace.theta());
    }

    #[test]
    fn kernel_validation() {
        assert!(BlurKernel::new(vec![]).is_err());
        assert!(BlurKernel::new(vec![Complex64::new(0.0, 0.0); 4]).is_err());
        assert!(BlurKernel::new(vec![Complex64::new(f64::NAN, 0.0)]).is_err());
    }
}
