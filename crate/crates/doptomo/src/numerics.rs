//! Minimal dense complex linear algebra and transform utilities shared by the
//! imaging, nulling, and deblurring modules.
//!
//! Everything here is deliberately small: row-major complex matrices, a
//! column-pivoted Householder QR least-squares solve, a diagonally pivoted
//! Cholesky factorization for small symmetric positive semi-definite systems,
//! and a discrete Fourier transform (radix-2 when the length is a power of
//! two, direct otherwise). All functions are pure and reentrant.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative pivot threshold used for rank detection in [`lstsq`] and
/// [`spd_solve_pivoted`]. A pivot smaller than this fraction of the largest
/// pivot is treated as a rank deficiency rather than silently inverted.
pub const RANK_TOL: f64 = 1e-12;

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries. Errors if the entry count does
    /// not match `rows * cols` or any entry is non-finite.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "matrix data has {} entries, expected {}x{}={}",
                data.len(),
                rows,
                cols,
                rows * cols
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Config("matrix entries must be finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    /// Builds a matrix by evaluating `f(row, col)` for every entry.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    /// Matrix-vector product `A x`.
    pub fn mul_vec(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!(
                "mul_vec: vector length {} != cols {}",
                x.len(),
                self.cols
            )));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows];
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let mut acc = Complex64::new(0.0, 0.0);
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            *o = acc;
        }
        Ok(out)
    }

    /// Conjugate-transpose product `A^H y`.
    pub fn herm_mul_vec(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        if y.len() != self.rows {
            return Err(Error::Dimension(format!(
                "herm_mul_vec: vector length {} != rows {}",
                y.len(),
                self.rows
            )));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.cols];
        for (i, yi) in y.iter().enumerate() {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            for (j, a) in row.iter().enumerate() {
                out[j] += a.conj() * yi;
            }
        }
        Ok(out)
    }
}

/// Least-squares solve of `min ||A x - b||_2` for a tall matrix (`m >= n`)
/// via column-pivoted Householder QR.
///
/// Errors with [`Error::RankDeficient`] when a pivot column norm falls below
/// [`RANK_TOL`] times the first pivot; callers wanting a regularized solve
/// augment the system with ridge rows before calling.
pub fn lstsq(a: &ComplexMatrix, b: &[Complex64]) -> Result<Vec<Complex64>> {
    let (m, n) = (a.rows, a.cols);
    if m < n {
        return Err(Error::Dimension(format!(
            "lstsq: system is underdetermined ({m} rows < {n} cols)"
        )));
    }
    if b.len() != m {
        return Err(Error::Dimension(format!(
            "lstsq: rhs length {} != rows {m}",
            b.len()
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }

    let mut r = a.data.clone();
    let mut qtb = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let idx = |i: usize, j: usize| i * n + j;

    let mut first_pivot = 0.0_f64;
    for j in 0..n {
        // Column pivot: largest remaining norm below row j, recomputed
        // exactly (no downdating) since our systems are desk-scale.
        let mut best = j;
        let mut best_norm2 = -1.0_f64;
        for c in j..n {
            let mut s = 0.0;
            for i in j..m {
                s += r[idx(i, c)].norm_sqr();
            }
            if s > best_norm2 {
                best_norm2 = s;
                best = c;
            }
        }
        if best != j {
            for i in 0..m {
                r.swap(idx(i, j), idx(i, best));
            }
            perm.swap(j, best);
        }

        let col_norm = best_norm2.sqrt();
        if j == 0 {
            first_pivot = col_norm;
        }
        if col_norm <= RANK_TOL * first_pivot || col_norm == 0.0 {
            return Err(Error::RankDeficient(format!(
                "column {} (original index {}) has negligible pivot {:.3e} (threshold {:.3e})",
                j,
                perm[j],
                col_norm,
                RANK_TOL * first_pivot
            )));
        }

        // Householder reflector for column j: v = x - beta*e1 with
        // beta = -sign(x0)*||x||, stored in place of the column.
        let alpha = r[idx(j, j)];
        let phase = if alpha.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            alpha / alpha.norm()
        };
        let beta = -phase * col_norm;
        let v0 = alpha - beta;
        r[idx(j, j)] = v0;
        let mut vnorm2 = 0.0;
        for i in j..m {
            vnorm2 += r[idx(i, j)].norm_sqr();
        }

        if vnorm2 > 0.0 {
            let scale = 2.0 / vnorm2;
            // Apply H = I - 2 v v^H / ||v||^2 to the remaining columns and b.
            for c in (j + 1)..n {
                let mut dot = Complex64::new(0.0, 0.0);
                for i in j..m {
                    dot += r[idx(i, j)].conj() * r[idx(i, c)];
                }
                let f = scale * dot;
                for i in j..m {
                    let vij = r[idx(i, j)];
                    r[idx(i, c)] -= f * vij;
                }
            }
            let mut dot = Complex64::new(0.0, 0.0);
            for i in j..m {
                dot += r[idx(i, j)].conj() * qtb[i];
            }
            let f = scale * dot;
            for i in j..m {
                qtb[i] -= f * r[idx(i, j)];
            }
        }

        r[idx(j, j)] = beta;
        for i in (j + 1)..m {
            r[idx(i, j)] = Complex64::new(0.0, 0.0);
        }
    }

    // Back substitution on the upper-triangular n x n block.
    let mut x_perm = vec![Complex64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let mut acc = qtb[i];
        for k in (i + 1)..n {
            acc -= r[idx(i, k)] * x_perm[k];
        }
        x_perm[i] = acc / r[idx(i, i)];
    }

    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for (j, &p) in perm.iter().enumerate() {
        x[p] = x_perm[j];
    }
    Ok(x)
}

/// Solves the symmetric positive semi-definite system `G y = b` by Cholesky
/// factorization with diagonal pivoting.
///
/// `g` is row-major `n x n` (only symmetry of the provided entries is
/// assumed). On a pivot failure the `Err` value is the *original* index of
/// the row whose pivot collapsed, letting callers name the offending
/// constraint.
pub fn spd_solve_pivoted(
    n: usize,
    g: &[f64],
    b: &[f64],
    rel_tol: f64,
) -> std::result::Result<Vec<f64>, usize> {
    assert_eq!(g.len(), n * n, "spd_solve_pivoted: bad matrix size");
    assert_eq!(b.len(), n, "spd_solve_pivoted: bad rhs size");
    let mut a = g.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let idx = |i: usize, j: usize| i * n + j;

    let max_diag0 = (0..n).fold(0.0_f64, |acc, i| acc.max(a[idx(i, i)]));
    for j in 0..n {
        let mut p = j;
        for i in (j + 1)..n {
            if a[idx(i, i)] > a[idx(p, p)] {
                p = i;
            }
        }
        if a[idx(p, p)] <= rel_tol * max_diag0 || a[idx(p, p)] <= 0.0 {
            return Err(perm[p]);
        }
        if p != j {
            for c in 0..n {
                a.swap(idx(j, c), idx(p, c));
            }
            for r0 in 0..n {
                a.swap(idx(r0, j), idx(r0, p));
            }
            perm.swap(j, p);
        }
        let d = a[idx(j, j)].sqrt();
        a[idx(j, j)] = d;
        for i in (j + 1)..n {
            a[idx(i, j)] /= d;
        }
        // Update the full trailing submatrix (both triangles) so the
        // symmetric pivot swaps above stay consistent.
        for i in (j + 1)..n {
            let lij = a[idx(i, j)];
            for k in (j + 1)..n {
                let lkj = a[idx(k, j)];
                a[idx(i, k)] -= lij * lkj;
            }
        }
    }

    // Forward/backward substitution in permuted coordinates.
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut acc = b[perm[i]];
        for k in 0..i {
            acc -= a[idx(i, k)] * y[k];
        }
        y[i] = acc / a[idx(i, i)];
    }
    let mut z = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = y[i];
        for k in (i + 1)..n {
            acc -= a[idx(k, i)] * z[k];
        }
        z[i] = acc / a[idx(i, i)];
    }
    let mut x = vec![0.0; n];
    for (i, &p) in perm.iter().enumerate() {
        x[p] = z[i];
    }
    Ok(x)
}

/// Forward discrete Fourier transform, `X[f] = sum_k x[k] e^{-j 2 pi f k / N}`.
pub fn dft(x: &[Complex64]) -> Vec<Complex64> {
    transform(x, false)
}

/// Inverse discrete Fourier transform with the `1/N` factor, so that
/// `idft(dft(x)) == x` up to round-off.
pub fn idft(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    let mut out = transform(x, true);
    let scale = 1.0 / n as f64;
    for v in &mut out {
        *v *= scale;
    }
    out
}

fn transform(x: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let n = x.len();
    let mut buf = x.to_vec();
    if n <= 1 {
        return buf;
    }
    if n.is_power_of_two() {
        fft_pow2(&mut buf, inverse);
        return buf;
    }
    // Direct O(N^2) evaluation with an exact twiddle table; lengths that are
    // not powers of two only occur for small user-chosen windows.
    let sign = if inverse { 1.0 } else { -1.0 };
    let tw: Vec<Complex64> = (0..n)
        .map(|m| {
            Complex64::from_polar(1.0, sign * 2.0 * std::f64::consts::PI * m as f64 / n as f64)
        })
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (f, o) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, v) in buf.iter().enumerate() {
            acc += v * tw[(f * k) % n];
        }
        *o = acc;
    }
    buf.copy_from_slice(&out);
    buf
}

fn fft_pow2(buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    // Bit-reversal permutation.
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            buf.swap(i, j);
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    // One exact twiddle table for the full length, indexed with a stride at
    // shorter stages; avoids accumulating recurrence error.
    let half = n / 2;
    let tw: Vec<Complex64> = (0..half)
        .map(|k| {
            Complex64::from_polar(1.0, sign * 2.0 * std::f64::consts::PI * k as f64 / n as f64)
        })
        .collect();
    let mut len = 2;
    while len <= n {
        let stride = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..len / 2 {
                let w = tw[k * stride];
                let u = buf[start + k];
                let v = buf[start + k + len / 2] * w;
                buf[start + k] = u + v;
                buf[start + k + len / 2] = u - v;
            }
        }
        len <<= 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn randc(rng: &mut impl Rng) -> Complex64 {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    }

    /// Neumaier-compensated complex dot product, used as the high-accuracy
    /// reference when checking residual orthogonality.
    fn compensated_dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
        let mut sum_re = 0.0f64;
        let mut c_re = 0.0f64;
        let mut sum_im = 0.0f64;
        let mut c_im = 0.0f64;
        for (x, y) in a.iter().zip(b) {
            let p = x.conj() * y;
            for (val, sum, comp) in [
                (p.re, &mut sum_re, &mut c_re),
                (p.im, &mut sum_im, &mut c_im),
            ] {
                let t = *sum + val;
                if sum.abs() >= val.abs() {
                    *comp += (*sum - t) + val;
                } else {
                    *comp += (val - t) + *sum;
                }
                *sum = t;
            }
        }
        Complex64::new(sum_re + c_re, sum_im + c_im)
    }

    #[test]
    fn lstsq_identity_returns_rhs() {
        let a = ComplexMatrix::from_fn(4, 4, |i, j| {
            if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let b: Vec<Complex64> = (0..4)
            .map(|k| Complex64::new(k as f64, -(k as f64)))
            .collect();
        let x = lstsq(&a, &b).unwrap();
        for (xi, bi) in x.iter().zip(&b) {
            assert!((xi - bi).norm() < 1e-14);
        }
    }

    #[test]
    fn lstsq_overdetermined_consistent_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = ComplexMatrix::from_fn(20, 5, |_, _| randc(&mut rng));
        let x_true: Vec<Complex64> = (0..5).map(|_| randc(&mut rng)).collect();
        let b = a.mul_vec(&x_true).unwrap();
        let x = lstsq(&a, &b).unwrap();
        let bnorm = b.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let resid = a
            .mul_vec(&x)
            .unwrap()
            .iter()
            .zip(&b)
            .map(|(p, q)| (p - q).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(
            resid <= 1e-12 * bnorm,
            "residual {resid:.3e} vs {bnorm:.3e}"
        );
    }

    #[test]
    fn lstsq_residual_orthogonality_random_50x10() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let a = ComplexMatrix::from_fn(50, 10, |_, _| randc(&mut rng));
        let b: Vec<Complex64> = (0..50).map(|_| randc(&mut rng)).collect();
        let x = lstsq(&a, &b).unwrap();
        let ax = a.mul_vec(&x).unwrap();
        let r: Vec<Complex64> = ax.iter().zip(&b).map(|(p, q)| p - q).collect();
        // Oracle: compensated column dot products A^H r must vanish.
        let scale = b.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        for j in 0..10 {
            let col: Vec<Complex64> = (0..50).map(|i| a.get(i, j)).collect();
            let d = compensated_dot(&col, &r);
            assert!(
                d.norm() <= 1e-10 * scale,
                "column {j}: A^H r = {:.3e}",
                d.norm()
            );
        }
    }

    #[test]
    fn lstsq_matches_normal_equations_on_well_conditioned_system() {
        // Independent oracle: solve (A^H A) x = A^H b with compensated Gram
        // assembly and a small pivoted Gaussian elimination.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = ComplexMatrix::from_fn(30, 4, |_, _| randc(&mut rng));
        let b: Vec<Complex64> = (0..30).map(|_| randc(&mut rng)).collect();
        let x = lstsq(&a, &b).unwrap();

        let n = 4;
        let mut gram = vec![Complex64::new(0.0, 0.0); n * n];
        let mut rhs = vec![Complex64::new(0.0, 0.0); n];
        let col = |j: usize| (0..30).map(|i| a.get(i, j)).collect::<Vec<_>>();
        for j in 0..n {
            let cj = col(j);
            rhs[j] = compensated_dot(&cj, &b);
            for k in 0..n {
                gram[j * n + k] = compensated_dot(&cj, &col(k));
            }
        }
        // Gaussian elimination with partial pivoting.
        let mut aug = gram;
        let mut y = rhs;
        for p in 0..n {
            let piv = (p..n)
                .max_by(|&i, &j| {
                    aug[i * n + p]
                        .norm()
                        .partial_cmp(&aug[j * n + p].norm())
                        .unwrap()
                })
                .unwrap();
            if piv != p {
                for c in 0..n {
                    aug.swap(p * n + c, piv * n + c);
                }
                y.swap(p, piv);
            }
            for i in (p + 1)..n {
                let f = aug[i * n + p] / aug[p * n + p];
                for c in p..n {
                    let v = aug[p * n + c];
                    aug[i * n + c] -= f * v;
                }
                let yp = y[p];
                y[i] -= f * yp;
            }
        }
        let mut x_ne = vec![Complex64::new(0.0, 0.0); n];
        for i in (0..n).rev() {
            let mut acc = y[i];
            for k in (i + 1)..n {
                acc -= aug[i * n + k] * x_ne[k];
            }
            x_ne[i] = acc / aug[i * n + i];
        }
        for (u, v) in x.iter().zip(&x_ne) {
            assert!((u - v).norm() < 1e-8, "{u} vs {v}");
        }
    }

    #[test]
    fn lstsq_detects_rank_deficiency() {
        // Two identical columns.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let c: Vec<Complex64> = (0..12).map(|_| randc(&mut rng)).collect();
        let a = ComplexMatrix::from_fn(12, 3, |i, j| match j {
            0 | 2 => c[i],
            _ => c[i] * Complex64::new(0.5, 0.0),
        });
        let b: Vec<Complex64> = (0..12).map(|_| randc(&mut rng)).collect();
        match lstsq(&a, &b) {
            Err(Error::RankDeficient(_)) => {}
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn lstsq_rejects_underdetermined() {
        let a = ComplexMatrix::zeros(2, 3);
        let b = vec![Complex64::new(0.0, 0.0); 2];
        assert!(matches!(lstsq(&a, &b), Err(Error::Dimension(_))));
    }

    #[test]
    fn spd_solver_roundtrip_and_pivot_report() {
        // G = M^T M for a random tall M is SPD.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 6;
        let m = 40;
        let mat: Vec<f64> = (0..m * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                g[i * n + j] = (0..m).map(|k| mat[k * n + i] * mat[k * n + j]).sum();
            }
        }
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = spd_solve_pivoted(n, &g, &b, RANK_TOL).unwrap();
        for i in 0..n {
            let gi: f64 = (0..n).map(|j| g[i * n + j] * x[j]).sum();
            assert!((gi - b[i]).abs() < 1e-9, "row {i}: {gi} vs {}", b[i]);
        }

        // Make row/col 2 a duplicate of row/col 0 -> singular, pivot failure
        // must name one of the dependent indices.
        for j in 0..n {
            g[2 * n + j] = g[j];
            g[j * n + 2] = g[j * n];
        }
        g[2 * n + 2] = g[0];
        let err = spd_solve_pivoted(n, &g, &b, RANK_TOL).unwrap_err();
        assert!(err == 0 || err == 2, "failing pivot index {err}");
    }

    #[test]
    fn dft_impulse_is_flat() {
        let mut x = vec![Complex64::new(0.0, 0.0); 8];
        x[0] = Complex64::new(1.0, 0.0);
        for v in dft(&x) {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn dft_constant_is_dc_impulse() {
        let n = 16;
        let x = vec![Complex64::new(1.0, 0.0); n];
        let spec = dft(&x);
        assert!((spec[0] - Complex64::new(n as f64, 0.0)).norm() < 1e-10);
        for v in &spec[1..] {
            assert!(v.norm() < 1e-10);
        }
    }

    #[test]
    fn dft_parseval_and_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in [1usize, 5, 64, 96, 128] {
            let x: Vec<Complex64> = (0..n).map(|_| randc(&mut rng)).collect();
            let spec = dft(&x);
            let ex: f64 = x.iter().map(|v| v.norm_sqr()).sum();
            let es: f64 = spec.iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
            assert!(
                (ex - es).abs() <= 1e-10 * ex.max(1.0),
                "Parseval failed for n={n}: {ex} vs {es}"
            );
            let back = idft(&spec);
            let err: f64 = back
                .iter()
                .zip(&x)
                .map(|(p, q)| (p - q).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(
                err <= 1e-10 * ex.sqrt().max(1.0),
                "roundtrip failed for n={n}"
            );
        }
    }
}
