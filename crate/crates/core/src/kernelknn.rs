//! Gaussian RBF kernels and their eigenbases, eigenbasis noise, brute-force
//! k-nearest-neighbour classification and probability maps on a box.

use crate::error::{invalid, Result};
use crate::numeric::extended::{ext, sym_eigen_ext, Ext};
use crate::numeric::{dft_amplitudes, sym_eigen, Matrix, Real};
use crate::targets::LabelledDataset;

/// Default kernel width for 50 points in `[0, 1]`.
pub const DEFAULT_SIGMA: f64 = 0.2;

fn sq_dist<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// `K_ij = exp(−‖x_i − x_j‖²/σ²)` over the rows of `x`.
pub fn rbf_kernel_matrix<T: Real>(x: &Matrix<T>, sigma: T) -> Result<Matrix<T>> {
    if !(sigma > T::zero() && sigma.is_finite()) {
        return invalid("kernel width must be positive");
    }
    let n = x.rows();
    let s2 = sigma * sigma;
    let mut k = Matrix::identity(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (-sq_dist(x.row(i), x.row(j)) / s2).exp();
            k.set(i, j, v);
            k.set(j, i, v);
        }
    }
    Ok(k)
}

fn check_points<T: Real>(points: &Matrix<T>, sigma: T) -> Result<()> {
    if points.rows() == 0 {
        return invalid("no sample points");
    }
    if !(sigma > T::zero() && sigma.is_finite()) {
        return invalid("kernel width must be positive");
    }
    if points.as_slice().iter().any(|v| !v.is_finite()) {
        return invalid("non-finite sample point");
    }
    Ok(())
}

/// Eigendecomposition `K = V Λ Vᵀ` of the kernel matrix on a sample set.
#[derive(Debug, Clone)]
pub struct KernelEigenbasis<T> {
    pub points: Matrix<T>,
    pub sigma: T,
    /// Descending.
    pub values: Vec<T>,
    /// Column `n` is the eigenvector `v_n` for `values[n]`.
    pub vectors: Matrix<T>,
}

/// Starting precision (bits) of the extended eigensolver.
const EXT_BITS_START: usize = 256;
/// Precision ceiling; beyond this the result is accepted as is.
const EXT_BITS_MAX: usize = 2048;
/// Headroom (bits) required between the smallest eigenvalue and the
/// working roundoff floor before the extended solve is accepted.
const EXT_HEADROOM_BITS: i32 = 64;

impl<T: Real> KernelEigenbasis<T> {
    /// Eigenbasis computed in extended precision. Gaussian kernel spectra
    /// decay super-exponentially, so the trailing eigenvectors of even a
    /// 50-point kernel sit far below `f64` roundoff; the working precision
    /// doubles until the smallest eigenvalue clears the roundoff floor by
    /// `2^64`.
    pub fn new(points: Matrix<T>, sigma: T) -> Result<Self> {
        check_points(&points, sigma)?;
        let n = points.rows();
        let mut bits = EXT_BITS_START;
        loop {
            let s2 = ext(sigma.as_f64(), bits) * ext(sigma.as_f64(), bits);
            let entries: Vec<Vec<Ext>> = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            let d2 = points
                                .row(i)
                                .iter()
                                .zip(points.row(j))
                                .map(|(&a, &b)| {
                                    let d = ext(a.as_f64(), bits) - ext(b.as_f64(), bits);
                                    &d * &d
                                })
                                .fold(ext(0.0, bits), |acc, x| acc + x);
                            (-(d2 / &s2)).exp().with_precision(bits).value()
                        })
                        .collect()
                })
                .collect();
            let e = sym_eigen_ext::<T>(entries, bits)?;
            let lmax = e.values[0].abs();
            let lmin = e.values.iter().fold(T::infinity(), |m, v| m.min(v.abs()));
            let floor = lmax.as_f64() * 2f64.powi(-(bits as i32) + EXT_HEADROOM_BITS);
            if lmin.as_f64() >= floor || bits >= EXT_BITS_MAX {
                return Ok(Self { points, sigma, values: e.values, vectors: e.vectors });
            }
            bits *= 2;
        }
    }

    /// Eigenbasis from the native-precision Jacobi solver. Fast, but
    /// eigenvectors whose eigenvalues fall below `ε·λ_max` are arbitrary.
    pub fn new_native(points: Matrix<T>, sigma: T) -> Result<Self> {
        check_points(&points, sigma)?;
        let k = rbf_kernel_matrix(&points, sigma)?;
        let e = sym_eigen(&k)?;
        Ok(Self { points, sigma, values: e.values, vectors: e.vectors })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `max |V Λ Vᵀ − K|`.
    pub fn reconstruction_error(&self) -> Result<T> {
        let k = rbf_kernel_matrix(&self.points, self.sigma)?;
        let n = self.len();
        let vl = Matrix::from_fn(n, n, |i, j| self.vectors.get(i, j) * self.values[j]);
        let rec = vl.matmul(&self.vectors.transpose())?;
        Ok(rec
            .as_slice()
            .iter()
            .zip(k.as_slice())
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs())))
    }
}

/// Dominant DFT bin of each eigenvector, in eigenvalue order. The sample
/// points must form a uniform, increasing 1D grid.
pub fn eigenfunction_frequencies<T: Real>(basis: &KernelEigenbasis<T>) -> Result<Vec<usize>> {
    let p = &basis.points;
    if p.cols() != 1 || p.rows() < 2 {
        return invalid("dominant bins need at least two samples on a 1D grid");
    }
    let x = p.column(0);
    let h = x[1] - x[0];
    let tol = T::lit(1e-9) * h.abs().max(T::min_positive_value());
    if !(h > T::zero()) || x.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > tol) {
        return invalid("samples are not a uniform increasing grid");
    }
    (0..basis.len())
        .map(|n| {
            let a = dft_amplitudes(&basis.vectors.column(n))?;
            // first maximum wins, so ties resolve to the lower bin
            let best = a
                .iter()
                .enumerate()
                .fold((0, T::neg_infinity()), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
            Ok(best.0)
        })
        .collect()
}

/// `ψ_γ = Σ_n (n/N)^γ v_n` at the sample points.
pub fn psi_gamma_noise<T: Real>(basis: &KernelEigenbasis<T>, gamma: T) -> Result<Vec<T>> {
    if !(gamma >= T::zero() && gamma.is_finite()) {
        return invalid("noise exponent must be non-negative and finite");
    }
    let n = basis.len();
    let nn = T::from_usize_lossy(n);
    let w: Vec<T> = (1..=n)
        .map(|i| (T::from_usize_lossy(i) / nn).powf(gamma))
        .collect();
    basis.vectors.matvec(&w)
}

/// Indices of the `k` nearest rows of `points` to `query`; equal distances
/// keep the lower index first.
pub fn knn_indices<T: Real>(points: &Matrix<T>, k: usize, query: &[T]) -> Result<Vec<usize>> {
    if points.rows() == 0 {
        return invalid("empty training set");
    }
    if k == 0 || k > points.rows() {
        return invalid(format!("K = {k} outside 1..={}", points.rows()));
    }
    if query.len() != points.cols() {
        return invalid("query dimension mismatch");
    }
    let mut d: Vec<(T, usize)> = (0..points.rows())
        .map(|i| (sq_dist(points.row(i), query), i))
        .collect();
    let cmp = |a: &(T, usize), b: &(T, usize)| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.cmp(&b.1))
    };
    if k < d.len() {
        d.select_nth_unstable_by(k - 1, cmp);
        d.truncate(k);
    }
    d.sort_by(cmp);
    Ok(d.into_iter().map(|(_, i)| i).collect())
}

/// Fraction of the `k` nearest training labels that are 1 (label `> 0.5`).
pub fn knn_predict<T: Real>(train: &LabelledDataset<T>, k: usize, query: &[T]) -> Result<T> {
    let idx = knn_indices(train.inputs(), k, query)?;
    let ones = idx
        .iter()
        .filter(|&&i| train.targets()[i] > T::lit(0.5))
        .count();
    Ok(T::from_usize_lossy(ones) / T::from_usize_lossy(k))
}

/// Axis-aligned box `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box2<T> {
    pub x0: T,
    pub y0: T,
    pub x1: T,
    pub y1: T,
}

/// `out[r][c] = predictor(x0 + c·(x1−x0)/res, y0 + r·(y1−y0)/res)`: a
/// `res × res` endpoint-exclusive grid, rows along `y`.
pub fn probability_map<T: Real>(
    mut predictor: impl FnMut(&[T]) -> Result<T>,
    bx: Box2<T>,
    resolution: usize,
) -> Result<Matrix<T>> {
    if resolution < 8 {
        return invalid("probability maps need resolution >= 8");
    }
    if !(bx.x1 > bx.x0 && bx.y1 > bx.y0) {
        return invalid("empty box");
    }
    let r = T::from_usize_lossy(resolution);
    let (dx, dy) = ((bx.x1 - bx.x0) / r, (bx.y1 - bx.y0) / r);
    let mut data = Vec::with_capacity(resolution * resolution);
    for row in 0..resolution {
        let y = bx.y0 + dy * T::from_usize_lossy(row);
        for col in 0..resolution {
            let x = bx.x0 + dx * T::from_usize_lossy(col);
            data.push(predictor(&[x, y])?);
        }
    }
    Matrix::new(resolution, resolution, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::stats::spearman;
    use crate::spectra::generalized_spectrum;
    use crate::targets::sample_grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid_points(n: usize) -> Matrix<f64> {
        Matrix::new(n, 1, sample_grid(n).unwrap()).unwrap()
    }

    #[test]
    fn kernel_entries() {
        let x = Matrix::new(2, 2, vec![0.0, 0.0, 0.2, 0.0]).unwrap();
        let k = rbf_kernel_matrix(&x, 0.2).unwrap();
        assert_eq!((k.get(0, 0), k.get(1, 1)), (1.0, 1.0));
        assert!((k.get(0, 1) - (-1.0f64).exp()).abs() < 1e-15);
        assert!(rbf_kernel_matrix(&x, 0.0).is_err());
        assert!(rbf_kernel_matrix(&x, -1.0).is_err());
    }

    #[test]
    fn kernel_is_psd() {
        let b = KernelEigenbasis::new(grid_points(50), 0.1).unwrap();
        assert!(*b.values.last().unwrap() >= -1e-10);
        let b = KernelEigenbasis::new(grid_points(50), 0.2).unwrap();
        assert!(b.values.iter().all(|&v| v >= -1e-8));
        assert!(b.reconstruction_error().unwrap() < 1e-7);
    }

    #[test]
    fn translation_invariant() {
        let x = Matrix::from_fn(12, 2, |i, j| ((i * 3 + j) as f64 * 0.71).sin());
        let y = x.map(|v| v + 4.25);
        let (kx, ky) = (rbf_kernel_matrix(&x, 0.5).unwrap(), rbf_kernel_matrix(&y, 0.5).unwrap());
        for (a, b) in kx.as_slice().iter().zip(ky.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn eigenvector_frequencies_increase() {
        let b = KernelEigenbasis::new(grid_points(50), DEFAULT_SIGMA).unwrap();
        let f = eigenfunction_frequencies(&b).unwrap();
        assert!(f[0] <= 1, "{f:?}");
        assert!(f[49] >= 20, "{f:?}");
        let n: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let fr: Vec<f64> = f.iter().map(|&v| v as f64).collect();
        let rho = spearman(&n, &fr).unwrap();
        assert!(rho >= 0.9, "rho = {rho}: {f:?}");
        let bent = Matrix::new(3, 1, vec![0.0, 0.1, 0.3]).unwrap();
        let b = KernelEigenbasis::new(bent, 0.2).unwrap();
        assert!(eigenfunction_frequencies(&b).is_err());
    }

    #[test]
    fn psi_round_trips() {
        let b = KernelEigenbasis::new(grid_points(50), DEFAULT_SIGMA).unwrap();
        let ones = generalized_spectrum(&psi_gamma_noise(&b, 0.0).unwrap(), &b.vectors).unwrap();
        assert!(ones.iter().all(|v| (v - 1.0).abs() < 1e-10));
        let s = generalized_spectrum(&psi_gamma_noise(&b, 2.0).unwrap(), &b.vectors).unwrap();
        for (n, v) in s.iter().enumerate() {
            let w = ((n + 1) as f64 / 50.0).powi(2);
            assert!((v - w).abs() < 1e-10);
        }
        let s = generalized_spectrum(&psi_gamma_noise(&b, 200.0).unwrap(), &b.vectors).unwrap();
        assert!((s[49] - 1.0).abs() < 1e-10 && s[48] < 1e-1);
        assert!(psi_gamma_noise(&b, -1.0).is_err());
    }

    fn random_dataset(n: usize, seed: u64) -> LabelledDataset<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Matrix::from_fn(n, 2, |_, _| rng.random::<f64>());
        let y = (0..n).map(|_| f64::from(rng.random::<bool>())).collect();
        LabelledDataset::new(x, y, None).unwrap()
    }

    #[test]
    fn knn_trivial_cases() {
        let ds = random_dataset(30, 1);
        for i in [0, 7, 29] {
            assert_eq!(knn_predict(&ds, 1, ds.inputs().row(i)).unwrap(), ds.targets()[i]);
        }
        let mean = ds.targets().iter().sum::<f64>() / 30.0;
        assert!((knn_predict(&ds, 30, &[5.0, -3.0]).unwrap() - mean).abs() < 1e-15);
        assert!(knn_predict(&ds, 0, &[0.0, 0.0]).is_err());
        assert!(knn_predict(&ds, 31, &[0.0, 0.0]).is_err());
        // duplicate points: lower index wins the tie
        let dup = LabelledDataset::new(Matrix::new(2, 1, vec![1.0, 1.0]).unwrap(), vec![0.0, 1.0], None).unwrap();
        assert_eq!(knn_indices(dup.inputs(), 1, &[1.0]).unwrap(), vec![0]);
    }

    #[test]
    fn knn_matches_full_sort() {
        let ds = random_dataset(60, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let q = [rng.random::<f64>(), rng.random::<f64>()];
            let mut all: Vec<(f64, usize)> =
                (0..60).map(|i| (sq_dist(ds.inputs().row(i), &q), i)).collect();
            all.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let expect: Vec<usize> = all[..5].iter().map(|p| p.1).collect();
            assert_eq!(knn_indices(ds.inputs(), 5, &q).unwrap(), expect);
            let frac = expect.iter().filter(|&&i| ds.targets()[i] > 0.5).count() as f64 / 5.0;
            assert_eq!(knn_predict(&ds, 5, &q).unwrap(), frac);
        }
    }

    #[test]
    fn maps() {
        let bx = Box2 { x0: 0.0, y0: 0.0, x1: 1.0, y1: 1.0 };
        let m = probability_map(|_| Ok(0.3), bx, 8).unwrap();
        assert!(m.as_slice().iter().all(|&v| v == 0.3));
        let two = LabelledDataset::new(
            Matrix::new(2, 2, vec![0.25, 0.5, 0.75, 0.5]).unwrap(),
            vec![0.0, 1.0],
            None,
        )
        .unwrap();
        let m = probability_map(|q| knn_predict(&two, 1, q), bx, 16).unwrap();
        for r in 0..16 {
            for c in 0..16 {
                let x = c as f64 / 16.0;
                let expect = if x > 0.5 { 1.0 } else { 0.0 };
                assert_eq!(m.get(r, c), expect, "({r},{c})");
            }
        }
        assert!(probability_map(|_| Ok(0.0), bx, 4).is_err());
    }
}
