use super::Real;
use crate::error::{invalid, Result};

/// Ranks with ties assigned their average rank (1-based).
pub fn average_ranks<T: Real>(x: &[T]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    sab / (saa * sbb).sqrt()
}

/// Spearman rank correlation. Constant inputs give 0.
pub fn spearman<T: Real, U: Real>(x: &[T], y: &[U]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return invalid("spearman needs two equal-length series of length >= 2");
    }
    Ok(pearson(&average_ranks(x), &average_ranks(y)))
}

/// Least-squares slope of `y` against `x`.
pub fn ols_slope<T: Real>(x: &[T], y: &[T]) -> Result<T> {
    if x.len() != y.len() || x.len() < 2 {
        return invalid("slope fit needs two equal-length series of length >= 2");
    }
    let n = T::from_usize_lossy(x.len());
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let mut sxy = T::zero();
    let mut sxx = T::zero();
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    if sxx == T::zero() {
        return invalid("slope fit over a single abscissa");
    }
    Ok(sxy / sxx)
}

/// Slope of `log y` against `log x`, using only points with `y > floor`.
/// Errors when fewer than two usable points remain.
pub fn loglog_slope<T: Real>(x: &[T], y: &[T], floor: T) -> Result<T> {
    let (lx, ly): (Vec<T>, Vec<T>) = x
        .iter()
        .zip(y)
        .filter(|(&a, &b)| a > T::zero() && b > floor && b.is_finite())
        .map(|(&a, &b)| (a.ln(), b.ln()))
        .unzip();
    if lx.len() < 2 {
        return invalid(format!("only {} usable points for a log-log fit", lx.len()));
    }
    ols_slope(&lx, &ly)
}

/// `n` logarithmically spaced values from `lo` to `hi` inclusive.
pub fn log_spaced<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    let step = (b - a) / T::from_usize_lossy(n - 1);
    (0..n).map(|i| (a + step * T::from_usize_lossy(i)).exp()).collect()
}

pub fn mean<T: Real>(x: &[T]) -> T {
    if x.is_empty() {
        return T::zero();
    }
    x.iter().copied().sum::<T>() / T::from_usize_lossy(x.len())
}
