//! Direct (O(N²)) discrete Fourier transforms.
//!
//! Amplitude convention: `a[0] = |Σ f_n| / N`, `a[m] = (2/N)|X_m|` for
//! `0 < m < N/2`, and for even `N` the Nyquist bin `a[N/2] = |X_{N/2}| / N`.
//! A sinusoid `A·sin(2π m n / N + φ)` with integer `0 < m < N/2` therefore
//! reads `a[m] = A`, and so does `A·cos(π n)` at the Nyquist bin. Parseval
//! in this convention reads
//! `Σ f_n² / N = a[0]² + ½ Σ_{0<m<N/2} a[m]² + a[N/2]²` (last term for even N only).

use num_complex::Complex;

use super::matrix::Matrix;
use super::Real;
use crate::error::{invalid, Result};

/// A sparse list of complex Fourier coefficients keyed by integer frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrum<T> {
    bins: Vec<(i64, Complex<T>)>,
}

impl<T: Real> ComplexSpectrum<T> {
    pub fn new(bins: Vec<(i64, Complex<T>)>) -> Result<Self> {
        if bins.windows(2).any(|w| w[0].0 >= w[1].0) {
            return invalid("spectrum bin indices must be strictly increasing");
        }
        if bins.iter().any(|(_, c)| !c.re.is_finite() || !c.im.is_finite()) {
            return invalid("non-finite spectrum value");
        }
        Ok(Self { bins })
    }

    pub fn bins(&self) -> &[(i64, Complex<T>)] {
        &self.bins
    }

    pub fn get(&self, k: i64) -> Option<Complex<T>> {
        self.bins
            .binary_search_by_key(&k, |(i, _)| *i)
            .ok()
            .map(|i| self.bins[i].1)
    }

    pub fn magnitudes(&self) -> Vec<T> {
        self.bins.iter().map(|(_, c)| c.norm()).collect()
    }
}

struct Twiddles<T> {
    cos: Vec<T>,
    sin: Vec<T>,
}

impl<T: Real> Twiddles<T> {
    fn new(n: usize) -> Self {
        let step = T::TAU() / T::from_usize_lossy(n);
        let (cos, sin) = (0..n)
            .map(|j| {
                let a = step * T::from_usize_lossy(j);
                (a.cos(), a.sin())
            })
            .unzip();
        Self { cos, sin }
    }

    /// `Σ_n f_n e^{−2πi m n / N}`.
    fn bin(&self, samples: &[T], m: usize) -> Complex<T> {
        let n = samples.len();
        let mut re = T::zero();
        let mut im = T::zero();
        let mut idx = 0usize;
        for &f in samples {
            re += f * self.cos[idx];
            im -= f * self.sin[idx];
            idx += m;
            if idx >= n {
                idx -= n;
            }
        }
        Complex::new(re, im)
    }

    fn bin_complex(&self, samples: &[Complex<T>], m: usize) -> Complex<T> {
        let n = samples.len();
        let mut acc = Complex::new(T::zero(), T::zero());
        let mut idx = 0usize;
        for &f in samples {
            acc += f * Complex::new(self.cos[idx], -self.sin[idx]);
            idx += m;
            if idx >= n {
                idx -= n;
            }
        }
        acc
    }
}

/// Raw coefficient `X_m = Σ_n f_n e^{−2πi m n / N}` for `m = 0..=⌊N/2⌋`.
pub fn dft_half_spectrum<T: Real>(samples: &[T]) -> Result<ComplexSpectrum<T>> {
    let n = samples.len();
    if n < 2 {
        return invalid(format!("DFT needs at least 2 samples, got {n}"));
    }
    let tw = Twiddles::new(n);
    let bins = (0..=n / 2)
        .map(|m| ((m as i64), tw.bin(samples, m % n)))
        .collect();
    ComplexSpectrum::new(bins)
}

/// Raw coefficients at the requested frequencies only.
pub fn dft_bins<T: Real>(samples: &[T], freqs: &[usize]) -> Result<Vec<Complex<T>>> {
    let n = samples.len();
    if n < 2 {
        return invalid(format!("DFT needs at least 2 samples, got {n}"));
    }
    let tw = Twiddles::new(n);
    Ok(freqs.iter().map(|&m| tw.bin(samples, m % n)).collect())
}

/// Scale factor turning `|X_m|` into the single-sided amplitude `a[m]`.
pub fn amplitude_scale<T: Real>(n: usize, m: usize) -> T {
    let nn = T::from_usize_lossy(n);
    if m == 0 || (n % 2 == 0 && m == n / 2) {
        T::one() / nn
    } else {
        T::lit(2.0) / nn
    }
}

/// Single-sided DFT amplitudes over integer frequencies `0..=⌊N/2⌋`.
pub fn dft_amplitudes<T: Real>(samples: &[T]) -> Result<Vec<T>> {
    let n = samples.len();
    let spec = dft_half_spectrum(samples)?;
    Ok(spec
        .bins()
        .iter()
        .map(|(m, c)| c.norm() * amplitude_scale::<T>(n, *m as usize))
        .collect())
}

/// Single-sided amplitudes at selected frequencies (each must be `≤ N/2`).
pub fn dft_amplitudes_at<T: Real>(samples: &[T], freqs: &[usize]) -> Result<Vec<T>> {
    let n = samples.len();
    if let Some(&bad) = freqs.iter().find(|&&m| m > n / 2) {
        return invalid(format!("frequency {bad} exceeds Nyquist for N={n}"));
    }
    let raw = dft_bins(samples, freqs)?;
    Ok(raw
        .iter()
        .zip(freqs)
        .map(|(c, &m)| c.norm() * amplitude_scale::<T>(n, m))
        .collect())
}

/// Signed frequency of DFT index `p` on `n` points (`p ≤ n/2` maps to itself).
fn signed_freq(p: usize, n: usize) -> i64 {
    if p <= n / 2 {
        p as i64
    } else {
        p as i64 - n as i64
    }
}

/// Full 2D DFT `X[p][q] = Σ_{r,c} g[r][c] e^{−2πi (p r + q c)/n}` of a square grid.
pub fn dft2<T: Real>(grid: &Matrix<T>) -> Result<Vec<Vec<Complex<T>>>> {
    if !grid.is_square() {
        return invalid(format!("2D DFT needs a square grid, got {}x{}", grid.rows(), grid.cols()));
    }
    let n = grid.rows();
    if n < 2 {
        return invalid("2D DFT needs a grid side of at least 2");
    }
    let tw = Twiddles::new(n);
    let row_dfts: Vec<Vec<Complex<T>>> = (0..n)
        .map(|r| (0..n).map(|q| tw.bin(grid.row(r), q)).collect())
        .collect();
    let mut out = vec![vec![Complex::new(T::zero(), T::zero()); n]; n];
    let mut column = vec![Complex::new(T::zero(), T::zero()); n];
    for q in 0..n {
        for r in 0..n {
            column[r] = row_dfts[r][q];
        }
        for (p, row) in out.iter_mut().enumerate() {
            row[q] = tw.bin_complex(&column, p);
        }
    }
    Ok(out)
}

/// Radial spectrum: `|X[p][q]| / n²` summed over annuli of unit width in
/// integer-frequency radius, `floor(√(p'² + q'²))` with signed `p', q'`.
/// Returns `bins` annuli; coefficients beyond the last annulus are dropped.
pub fn dft2_radial<T: Real>(grid: &Matrix<T>, bins: usize) -> Result<Vec<T>> {
    if !grid.is_square() {
        return invalid(format!("radial spectrum needs a square grid, got {}x{}", grid.rows(), grid.cols()));
    }
    let n = grid.rows();
    if n < 4 {
        return invalid(format!("radial spectrum needs grid side >= 4, got {n}"));
    }
    let coeffs = dft2(grid)?;
    let norm = T::from_usize_lossy(n * n);
    let mut out = vec![T::zero(); bins];
    for (p, row) in coeffs.iter().enumerate() {
        let fp = signed_freq(p, n) as f64;
        for (q, c) in row.iter().enumerate() {
            let fq = signed_freq(q, n) as f64;
            let annulus = (fp * fp + fq * fq).sqrt().floor() as usize;
            if annulus < bins {
                out[annulus] += c.norm() / norm;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Compensated (Kahan) direct DFT, independent of the twiddle table.
    fn kahan_amplitudes(f: &[f64]) -> Vec<f64> {
        let n = f.len();
        (0..=n / 2)
            .map(|m| {
                let (mut re, mut cre, mut im, mut cim) = (0.0, 0.0, 0.0, 0.0);
                for (j, &x) in f.iter().enumerate() {
                    let ang = -2.0 * PI * ((m * j) % n) as f64 / n as f64;
                    for (sum, comp, term) in [(&mut re, &mut cre, x * ang.cos()), (&mut im, &mut cim, x * ang.sin())] {
                        let y = term - *comp;
                        let t = *sum + y;
                        *comp = (t - *sum) - y;
                        *sum = t;
                    }
                }
                let scale = if m == 0 || (n % 2 == 0 && m == n / 2) { 1.0 } else { 2.0 };
                scale * (re * re + im * im).sqrt() / n as f64
            })
            .collect()
    }

    #[test]
    fn constant_signal() {
        let a = dft_amplitudes(&vec![1.0f64; 200]).unwrap();
        assert!((a[0] - 1.0).abs() < 1e-12);
        assert!(a[1..].iter().all(|&x| x < 1e-12));
        assert_eq!(a.len(), 101);
    }

    #[test]
    fn unit_sinusoid_reads_one() {
        let n = 200;
        let f: Vec<f64> = (0..n).map(|i| (2.0 * PI * 5.0 * i as f64 / n as f64).sin()).collect();
        let a = dft_amplitudes(&f).unwrap();
        assert!((a[5] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn too_short() {
        assert!(dft_amplitudes(&[1.0f64]).is_err());
        assert!(dft_amplitudes_at(&[1.0f64, 2.0, 3.0, 4.0], &[3]).is_err());
    }

    #[test]
    fn matches_compensated_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        let f: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
        let got = dft_amplitudes(&f).unwrap();
        let want = kahan_amplitudes(&f);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-10);
        }
    }

    #[test]
    fn nyquist_cosine_reads_amplitude() {
        let f: Vec<f64> = (0..16).map(|i| 0.7 * (PI * i as f64).cos()).collect();
        let a = dft_amplitudes(&f).unwrap();
        assert!((a[8] - 0.7).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn parseval(seed in 0u64..1000, half in 2usize..40) {
            let n = 2 * half;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let a = dft_amplitudes(&f).unwrap();
            let energy: f64 = f.iter().map(|x| x * x).sum::<f64>() / n as f64;
            let mid: f64 = a[1..half].iter().map(|x| x * x).sum();
            let spectral = a[0] * a[0] + 0.5 * mid + a[half] * a[half];
            prop_assert!((energy - spectral).abs() <= 1e-9 * energy.max(1e-300));
        }
    }

    #[test]
    fn radial_constant_grid() {
        let g = Matrix::from_fn(8, 8, |_, _| 2.5f64);
        let z = dft2_radial(&g, 6).unwrap();
        assert!((z[0] - 2.5).abs() < 1e-12);
        assert!(z[1..].iter().all(|&x| x < 1e-12));
    }

    #[test]
    fn radial_plane_wave() {
        let n = 64;
        let g = Matrix::from_fn(n, n, |_, c| (2.0 * PI * 3.0 * c as f64 / n as f64).sin());
        let z = dft2_radial(&g, 10).unwrap();
        let total: f64 = z.iter().sum();
        assert!(z[3] / total > 1.0 - 1e-9);
    }

    #[test]
    fn radial_rejects_non_square() {
        assert!(dft2_radial(&Matrix::<f64>::zeros(4, 5), 3).is_err());
        assert!(dft2_radial(&Matrix::<f64>::zeros(3, 3), 3).is_err());
    }

    #[test]
    fn radial_matches_unbinned_oracle() {
        let n = 16;
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let g = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0f64));
        let bins = 13;
        let mut want = vec![0.0; bins];
        for p in 0..n {
            for q in 0..n {
                let (mut re, mut im) = (0.0, 0.0);
                for r in 0..n {
                    for c in 0..n {
                        let ang = -2.0 * PI * ((p * r + q * c) % n) as f64 / n as f64;
                        re += g.get(r, c) * ang.cos();
                        im += g.get(r, c) * ang.sin();
                    }
                }
                let fp = if p <= n / 2 { p as f64 } else { p as f64 - n as f64 };
                let fq = if q <= n / 2 { q as f64 } else { q as f64 - n as f64 };
                let k = (fp * fp + fq * fq).sqrt().floor() as usize;
                if k < bins {
                    want[k] += (re * re + im * im).sqrt() / (n * n) as f64;
                }
            }
        }
        let got = dft2_radial(&g, bins).unwrap();
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn sparse_spectrum_lookup() {
        let s = ComplexSpectrum::new(vec![(0, Complex::new(1.0, 0.0)), (3, Complex::new(0.0, 2.0))]).unwrap();
        assert_eq!(s.get(3), Some(Complex::new(0.0, 2.0)));
        assert_eq!(s.get(2), None);
        assert!(ComplexSpectrum::new(vec![(1, Complex::new(1.0, 0.0)), (1, Complex::new(1.0, 0.0))]).is_err());
    }
}
