//! Computing a continuous phase-offset function that places point nulls in
//! the reconstructed image.
//!
//! The receive chain can impart a phase modulation `exp(+j phi(Theta))` onto
//! the measured trace. To first order in `phi`, the image value at a target
//! point is driven to zero by requiring, per target `q`,
//!
//! ```text
//! <w_q, phi> = j <w_q, 1>,   w_q(Theta) = s(Theta) * K_q(Theta)
//! ```
//!
//! where `K_q` is the imaging phasor of the target point and `<g, h>` is the
//! unconjugated inner product `dTheta * sum_k g_k h_k`. Splitting `w = c + jd`
//! into real and imaginary parts turns the `K` complex conditions into `2K`
//! real ones; the minimum-norm solution in `span[c d]` is
//!
//! ```text
//! phi_hat = [c d] G^-1 b,   G = <[c d], [c d]>,   b = <[-d c], 1>
//! ```
//!
//! The steering columns are built from the measured trace samples themselves,
//! not from scene knowledge, so the method only needs the received signal.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{spd_solve_pivoted, ComplexMatrix, RANK_TOL};
use crate::recon::{
    backproject_at, backproject_cartesian, db_rel, trig_table, CartesianGrid, ImagePeak,
};
use crate::scene::SignalTrace;

/// One requested null location, stored in polar image coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullTarget {
    r: f64,
    nu: f64,
}

impl NullTarget {
    /// Builds a target from polar coordinates (`r >= 0`, `nu` normalized
    /// into `[0, 2pi)`).
    pub fn from_polar(r: f64, nu: f64) -> Result<Self> {
        if !(r.is_finite() && nu.is_finite()) {
            return Err(Error::Config("null coordinates must be finite".into()));
        }
        if r < 0.0 {
            return Err(Error::Config(format!("null radius must be >= 0, got {r}")));
        }
        Ok(Self {
            r,
            nu: nu.rem_euclid(std::f64::consts::TAU),
        })
    }

    /// Builds a target from Cartesian coordinates via `r = hypot(x, y)`,
    /// `nu = atan2(y, x)`.
    pub fn from_cartesian(x: f64, y: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite()) {
            return Err(Error::Config("null coordinates must be finite".into()));
        }
        Self::from_polar(x.hypot(y), y.atan2(x))
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn x(&self) -> f64 {
        self.r * self.nu.cos()
    }

    pub fn y(&self) -> f64 {
        self.r * self.nu.sin()
    }
}

/// A set of `K >= 1` distinct null locations.
#[derive(Debug, Clone, PartialEq)]
pub struct NullSpec {
    targets: Vec<NullTarget>,
}

impl NullSpec {
    pub fn new(targets: Vec<NullTarget>) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::Config("at least one null target is required".into()));
        }
        for (i, a) in targets.iter().enumerate() {
            for b in &targets[..i] {
                if a == b {
                    return Err(Error::Config(format!(
                        "null targets must be distinct; target {i} repeats ({}, {})",
                        a.x(),
                        a.y()
                    )));
                }
            }
        }
        Ok(Self { targets })
    }

    pub fn targets(&self) -> &[NullTarget] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

/// Real-valued phase-offset samples aligned with a trace's angle grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseOffset {
    phi: Vec<f64>,
}

impl PhaseOffset {
    pub fn new(phi: Vec<f64>) -> Result<Self> {
        if phi.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("phase offsets must be finite".into()));
        }
        Ok(Self { phi })
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    /// Peak-to-peak excursion of the offset function (rad).
    pub fn peak_to_peak(&self) -> f64 {
        let max = self.phi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = self.phi.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min
    }
}

/// The `P x K` steering matrix: column `q` is the trace multiplied by the
/// imaging phasor of null target `q`, together with its real (`c`) and
/// imaginary (`d`) parts.
#[derive(Debug, Clone)]
pub struct SteeringMatrix {
    w: ComplexMatrix,
    /// Row-major `P x K` real part of `w`.
    c: Vec<f64>,
    /// Row-major `P x K` imaginary part of `w`.
    d: Vec<f64>,
}

impl SteeringMatrix {
    pub fn w(&self) -> &ComplexMatrix {
        &self.w
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    /// Number of angle samples `P`.
    pub fn samples(&self) -> usize {
        self.w.rows()
    }

    /// Number of null targets `K`.
    pub fn nulls(&self) -> usize {
        self.w.cols()
    }
}

/// Builds the steering matrix for a trace and a set of null targets:
/// `w[k][q] = s(Theta_k) * exp(+j (4 pi r_q / lambda) sin(Theta_k + nu_q))`.
pub fn build_steering(trace: &SignalTrace, nulls: &NullSpec) -> Result<SteeringMatrix> {
    if trace.is_empty() {
        return Err(Error::Config(
            "cannot build steering from an empty trace".into(),
        ));
    }
    let p = trace.len();
    let k = nulls.len();
    let c4 = 4.0 * std::f64::consts::PI / trace.meta().wavelength;
    let trig = trig_table(trace.theta());
    let samples = trace.samples();

    let mut data = vec![Complex64::new(0.0, 0.0); p * k];
    for (q, target) in nulls.targets().iter().enumerate() {
        let (x, y) = (target.x(), target.y());
        for (row, (&s, &(sin_t, cos_t))) in samples.iter().zip(&trig).enumerate() {
            let (sin_p, cos_p) = (c4 * (x * sin_t + y * cos_t)).sin_cos();
            data[row * k + q] = s * Complex64::new(cos_p, sin_p);
        }
    }
    let w = ComplexMatrix::new(p, k, data)?;
    let c = w.data().iter().map(|z| z.re).collect();
    let d = w.data().iter().map(|z| z.im).collect();
    Ok(SteeringMatrix { w, c, d })
}

/// Solves for the minimum-norm phase-offset function satisfying the `K`
/// linearized null conditions.
///
/// The quadrature weight `delta_theta` cancels between the Gram matrix and
/// the right-hand side, so the result is invariant to it; it is accepted
/// explicitly because the inner products are defined with it. Errors with
/// [`Error::DegenerateNulls`] when the Gram matrix loses rank (coincident or
/// otherwise dependent targets).
pub fn solve_phase_offset(sm: &SteeringMatrix, delta_theta: f64) -> Result<PhaseOffset> {
    if !(delta_theta.is_finite() && delta_theta > 0.0) {
        return Err(Error::Config(format!(
            "delta_theta must be > 0, got {delta_theta}"
        )));
    }
    let p = sm.samples();
    let k = sm.nulls();
    let n = 2 * k;

    // Stacked real matrix M = [c d] (P x 2K), Gram G = dTheta * M^T M.
    let m_at = |row: usize, col: usize| -> f64 {
        if col < k {
            sm.c[row * k + col]
        } else {
            sm.d[row * k + (col - k)]
        }
    };
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let mut acc = 0.0;
            for row in 0..p {
                acc += m_at(row, i) * m_at(row, j);
            }
            let v = delta_theta * acc;
            gram[i * n + j] = v;
            gram[j * n + i] = v;
        }
    }
    // b = <[-d c], 1>.
    let mut b = vec![0.0; n];
    for q in 0..k {
        let mut sum_c = 0.0;
        let mut sum_d = 0.0;
        for row in 0..p {
            sum_c += sm.c[row * k + q];
            sum_d += sm.d[row * k + q];
        }
        b[q] = -delta_theta * sum_d;
        b[k + q] = delta_theta * sum_c;
    }

    let y = spd_solve_pivoted(n, &gram, &b, RANK_TOL)
        .map_err(|pivot| Error::DegenerateNulls { index: pivot % k })?;

    let mut phi = vec![0.0; p];
    for (row, v) in phi.iter_mut().enumerate() {
        let mut acc = 0.0;
        for q in 0..k {
            acc += sm.c[row * k + q] * y[q] + sm.d[row * k + q] * y[k + q];
        }
        *v = acc;
    }
    PhaseOffset::new(phi)
}

/// Applies the modulation `samples[k] <- samples[k] * exp(+j phi[k])`.
/// Sample magnitudes are unchanged.
pub fn apply_phase_offset(trace: &SignalTrace, phi: &PhaseOffset) -> Result<SignalTrace> {
    if phi.len() != trace.len() {
        return Err(Error::Dimension(format!(
            "phase offset has {} samples, trace has {}",
            phi.len(),
            trace.len()
        )));
    }
    let samples = trace
        .samples()
        .iter()
        .zip(phi.phi())
        .map(|(&s, &p)| s * Complex64::from_polar(1.0, p))
        .collect();
    trace.with_samples(samples)
}

/// Residual of the discretized linearized null condition for each target:
/// `j <w_q, 1> - <w_q, phi>`. All entries are zero (to solver accuracy) for
/// the offset returned by [`solve_phase_offset`].
pub fn linearized_residual(
    sm: &SteeringMatrix,
    delta_theta: f64,
    phi: &PhaseOffset,
) -> Result<Vec<Complex64>> {
    if phi.len() != sm.samples() {
        return Err(Error::Dimension(format!(
            "phase offset has {} samples, steering matrix has {}",
            phi.len(),
            sm.samples()
        )));
    }
    let k = sm.nulls();
    let mut out = Vec::with_capacity(k);
    for q in 0..k {
        let mut sum_w = Complex64::new(0.0, 0.0);
        let mut sum_wphi = Complex64::new(0.0, 0.0);
        for row in 0..sm.samples() {
            let w = sm.w.get(row, q);
            sum_w += w;
            sum_wphi += w * phi.phi()[row];
        }
        out.push(Complex64::i() * delta_theta * sum_w - delta_theta * sum_wphi);
    }
    Ok(out)
}

/// Before/after measurement at one null location.
#[derive(Debug, Clone, Copy)]
pub struct NullCheck {
    pub x: f64,
    pub y: f64,
    /// Image magnitude at the null before adaptation (dB relative to the
    /// pre-adaptation image peak, floored).
    pub pre_db: f64,
    /// Image magnitude at the null after adaptation (dB relative to the
    /// post-adaptation image peak, floored).
    pub post_db: f64,
    /// Absolute magnitude change at the null, `20 log10(|post|/|pre|)`.
    pub suppression_db: f64,
}

/// Comparison of the image before and after applying a phase offset.
#[derive(Debug, Clone)]
pub struct NullVerification {
    pub checks: Vec<NullCheck>,
    pub pre_peak: ImagePeak,
    pub post_peak: ImagePeak,
    /// Chebyshev distance between pre and post image argmax, in grid cells.
    pub peak_shift_cells: usize,
    /// Change of the image peak magnitude (dB; negative means a drop).
    pub peak_drop_db: f64,
}

/// Images the trace before and after applying `phi` and reports the image
/// magnitude at each null location (sampled exactly, by pointwise
/// backprojection) together with the peak displacement.
pub fn verify_null(
    trace: &SignalTrace,
    phi: &PhaseOffset,
    nulls: &NullSpec,
    grid: &CartesianGrid,
) -> Result<NullVerification> {
    let adapted = apply_phase_offset(trace, phi)?;
    let pre_img = backproject_cartesian(trace, grid);
    let post_img = backproject_cartesian(&adapted, grid);
    let pre_peak = pre_img.peak();
    let post_peak = post_img.peak();

    let mut checks = Vec::with_capacity(nulls.len());
    for t in nulls.targets() {
        let g_pre = backproject_at(trace, t.x(), t.y());
        let g_post = backproject_at(&adapted, t.x(), t.y());
        let suppression_db = if g_pre.norm() > 0.0 && g_post.norm() > 0.0 {
            20.0 * (g_post.norm() / g_pre.norm()).log10()
        } else {
            f64::NEG_INFINITY
        };
        checks.push(NullCheck {
            x: t.x(),
            y: t.y(),
            pre_db: db_rel(g_pre.norm(), pre_peak.magnitude),
            post_db: db_rel(g_post.norm(), post_peak.magnitude),
            suppression_db,
        });
    }

    let dr = pre_peak.row.abs_diff(post_peak.row);
    let dc = pre_peak.col.abs_diff(post_peak.col);
    let peak_drop_db = if pre_peak.magnitude > 0.0 && post_peak.magnitude > 0.0 {
        20.0 * (post_peak.magnitude / pre_peak.magnitude).log10()
    } else {
        f64::NEG_INFINITY
    };
    Ok(NullVerification {
        checks,
        pre_peak,
        post_peak,
        peak_shift_cells: dr.max(dc),
        peak_drop_db,
    })
}
