use super::matrix::{gemm, norm2, Matrix, Op};
use super::Real;
use crate::error::{invalid, Result};

/// Power-iteration count used for per-layer spectral norm traces.
pub const DEFAULT_POWER_ITERATIONS: usize = 10;

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_OFF_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-9;

/// Largest singular value estimated by power iteration on `mᵀm`.
///
/// Starts from the all-ones vector so the result is reproducible. If that
/// start happens to lie in the null space of `m`, the iteration restarts
/// from the basis vector of the heaviest column.
pub fn spectral_norm<T: Real>(m: &Matrix<T>, iterations: usize) -> Result<T> {
    if m.is_empty() {
        return invalid("spectral norm of an empty matrix");
    }
    if iterations == 0 {
        return invalid("power iteration needs at least one step");
    }
    if m.max_abs() == T::zero() {
        return Ok(T::zero());
    }
    let n = m.cols();
    let mut v = vec![T::one() / T::from_usize_lossy(n).sqrt(); n];
    let mut restarted = false;
    let mut it = 0;
    while it < iterations {
        let mv = m.matvec(&v)?;
        let w = m.vecmat(&mv)?;
        let norm = norm2(&w);
        if norm == T::zero() {
            if restarted {
                return Ok(T::zero());
            }
            restarted = true;
            let heaviest = (0..n)
                .map(|j| (j, norm2(&m.column(j))))
                .fold((0, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best })
                .0;
            v = vec![T::zero(); n];
            v[heaviest] = T::one();
            continue;
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = *wi / norm;
        }
        it += 1;
    }
    Ok(norm2(&m.matvec(&v)?))
}

/// Spectral norm from the full eigendecomposition of the smaller Gram
/// matrix. Exact to roundoff, unlike the truncated power iteration.
pub fn spectral_norm_exact<T: Real>(m: &Matrix<T>) -> Result<T> {
    if m.is_empty() {
        return invalid("spectral norm of an empty matrix");
    }
    let (r, c) = m.shape();
    let gram = if r <= c {
        let mut g = Matrix::zeros(r, r);
        gemm(T::one(), m, Op::N, m, Op::T, T::zero(), &mut g);
        g
    } else {
        let mut g = Matrix::zeros(c, c);
        gemm(T::one(), m, Op::T, m, Op::N, T::zero(), &mut g);
        g
    };
    let gram = symmetrize(gram);
    let top = sym_eigen(&gram)?.values[0];
    Ok(top.max(T::zero()).sqrt())
}

fn symmetrize<T: Real>(mut g: Matrix<T>) -> Matrix<T> {
    let n = g.rows();
    let half = T::lit(0.5);
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = (g.get(i, j) + g.get(j, i)) * half;
            g.set(i, j, avg);
            g.set(j, i, avg);
        }
    }
    g
}

/// Eigenpairs of a symmetric matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct SymEigen<T> {
    pub values: Vec<T>,
    /// Column `n` is the unit eigenvector for `values[n]`.
    pub vectors: Matrix<T>,
}

/// Cyclic Jacobi eigendecomposition.
///
/// Sweeps until the off-diagonal Frobenius norm falls below `1e-12` of the
/// matrix norm, at most 100 sweeps. Each eigenvector's largest-magnitude
/// component is made positive.
pub fn sym_eigen<T: Real>(k: &Matrix<T>) -> Result<SymEigen<T>> {
    if !k.is_square() {
        return invalid(format!("eigendecomposition of non-square {}x{}", k.rows(), k.cols()));
    }
    let n = k.rows();
    if n == 0 {
        return invalid("eigendecomposition of an empty matrix");
    }
    let scale = k.max_abs().max(T::one());
    if k.asymmetry().unwrap_or(T::zero()) > T::lit(SYMMETRY_TOL) * scale {
        return invalid("matrix is not symmetric");
    }

    let mut a = k.clone();
    let mut v = Matrix::<T>::identity(n);
    let tol = T::lit(JACOBI_OFF_TOL).max(T::epsilon() * T::lit(4.0)) * a.frobenius_norm();

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == T::zero() {
                    continue;
                }
                let theta = (a.get(q, q) - a.get(p, p)) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                rotate(&mut a, &mut v, p, q, c, s);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a.get(j, j)
            .partial_cmp(&a.get(i, i))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let values = order.iter().map(|&i| a.get(i, i)).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let mut vec = v.column(src);
        let pivot = vec
            .iter()
            .enumerate()
            .fold((0, T::zero()), |best, (i, x)| if x.abs() > best.1 { (i, x.abs()) } else { best })
            .0;
        if vec[pivot] < T::zero() {
            vec.iter_mut().for_each(|x| *x = -*x);
        }
        for (row, x) in vec.into_iter().enumerate() {
            vectors.set(row, col, x);
        }
    }
    Ok(SymEigen { values, vectors })
}

fn off_diagonal_norm<T: Real>(a: &Matrix<T>) -> T {
    let n = a.rows();
    let mut s = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let x = a.get(i, j);
                s += x * x;
            }
        }
    }
    s.sqrt()
}

fn rotate<T: Real>(a: &mut Matrix<T>, v: &mut Matrix<T>, p: usize, q: usize, c: T, s: T) {
    let n = a.rows();
    for r in 0..n {
        let arp = a.get(r, p);
        let arq = a.get(r, q);
        a.set(r, p, c * arp - s * arq);
        a.set(r, q, s * arp + c * arq);
    }
    for r in 0..n {
        let apr = a.get(p, r);
        let aqr = a.get(q, r);
        a.set(p, r, c * apr - s * aqr);
        a.set(q, r, s * apr + c * aqr);
    }
    for r in 0..n {
        let vrp = v.get(r, p);
        let vrq = v.get(r, q);
        v.set(r, p, c * vrp - s * vrq);
        v.set(r, q, s * vrp + c * vrq);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> Matrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    fn random_symmetric(n: usize, seed: u64) -> Matrix<f64> {
        let m = random(n, n, seed);
        Matrix::from_fn(n, n, |i, j| m.get(i, j) + m.get(j, i))
    }

    #[test]
    fn diagonal_spectral_norm() {
        let m = Matrix::<f64>::from_diag(&[3.0, 1.0]);
        assert!((spectral_norm(&m, 10).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_and_empty() {
        assert_eq!(spectral_norm(&Matrix::<f64>::zeros(4, 4), 10).unwrap(), 0.0);
        assert!(spectral_norm(&Matrix::<f64>::zeros(0, 3), 10).is_err());
        assert!(spectral_norm(&Matrix::<f64>::identity(2), 0).is_err());
    }

    #[test]
    fn start_vector_in_null_space_restarts() {
        let m = Matrix::new(1, 2, vec![1.0, -1.0]).unwrap();
        let s = spectral_norm(&m, 10).unwrap();
        assert!((s - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn power_iteration_matches_jacobi() {
        let m = random(5, 5, 11);
        let mut gram = Matrix::zeros(5, 5);
        gemm(1.0, &m, Op::T, &m, Op::N, 0.0, &mut gram);
        let lambda_max = sym_eigen(&symmetrize(gram)).unwrap().values[0];
        let s = spectral_norm(&m, 500).unwrap();
        assert!(((s * s) - lambda_max).abs() / lambda_max < 1e-8);
        let t = spectral_norm(&m.transpose(), 500).unwrap();
        assert!((s - t).abs() < 1e-8);
        assert!((spectral_norm_exact(&m).unwrap() - s).abs() < 1e-8);
    }

    #[test]
    fn identity_and_two_by_two() {
        let e = sym_eigen(&Matrix::<f64>::identity(3)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
        let m = Matrix::<f64>::new(2, 2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let e = sym_eigen(&m).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-12);
        assert!((e.values[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonsquare_and_asymmetric() {
        assert!(sym_eigen(&Matrix::<f64>::zeros(2, 3)).is_err());
        let m = Matrix::new(2, 2, vec![1.0, 2.0, 0.0, 1.0]).unwrap();
        assert!(sym_eigen(&m).is_err());
    }

    #[test]
    fn reconstruction_and_orthonormality() {
        let k = random_symmetric(8, 3);
        let e = sym_eigen(&k).unwrap();
        let v = &e.vectors;
        let lam = Matrix::from_diag(&e.values);
        let rebuilt = v.matmul(&lam).unwrap().matmul(&v.transpose()).unwrap();
        for (x, y) in rebuilt.as_slice().iter().zip(k.as_slice()) {
            assert!((x - y).abs() < 1e-8);
        }
        let vtv = v.transpose().matmul(v).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((vtv.get(i, j) - want).abs() < 1e-8);
            }
        }
        // kV = VΛ
        let kv = k.matmul(v).unwrap();
        let vl = v.matmul(&lam).unwrap();
        for (x, y) in kv.as_slice().iter().zip(vl.as_slice()) {
            assert!((x - y).abs() < 1e-8);
        }
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }

    /// Real roots of the characteristic cubic via the trigonometric method.
    fn cubic_eigenvalues(m: &Matrix<f64>) -> Vec<f64> {
        let a = |i, j| m.get(i, j);
        let tr = a(0, 0) + a(1, 1) + a(2, 2);
        let c2 = a(0, 0) * a(1, 1) + a(0, 0) * a(2, 2) + a(1, 1) * a(2, 2)
            - a(0, 1) * a(1, 0)
            - a(0, 2) * a(2, 0)
            - a(1, 2) * a(2, 1);
        let det = a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1))
            - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
            + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
        // λ³ − tr λ² + c2 λ − det = 0, shift λ = x + tr/3
        let shift = tr / 3.0;
        let p = c2 - tr * tr / 3.0;
        let q = -(2.0 * tr.powi(3) / 27.0 - tr * c2 / 3.0 + det);
        let r = (-p / 3.0).sqrt();
        let phi = ((3.0 * q / (2.0 * p)) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0).acos() / 3.0;
        let mut roots: Vec<f64> = (0..3)
            .map(|j| 2.0 * r * (phi - 2.0 * std::f64::consts::PI * j as f64 / 3.0).cos() + shift)
            .collect();
        roots.sort_by(|x, y| y.partial_cmp(x).unwrap());
        roots
    }

    #[test]
    fn three_by_three_matches_cubic_roots() {
        for seed in 0..20 {
            let k = random_symmetric(3, 100 + seed);
            let e = sym_eigen(&k).unwrap();
            let roots = cubic_eigenvalues(&k);
            for (x, y) in e.values.iter().zip(&roots) {
                assert!((x - y).abs() < 1e-8, "seed {seed}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn works_in_single_precision() {
        let m = Matrix::<f32>::new(2, 2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let e = sym_eigen(&m).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-5);
        assert!((spectral_norm(&m, 30).unwrap() - 3.0).abs() < 1e-5);
    }
}
