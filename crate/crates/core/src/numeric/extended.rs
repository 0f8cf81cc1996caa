//! Symmetric eigensolver in arbitrary-precision binary floating point, for symmetric
//! matrices whose spectrum spans more decades than `f64` can resolve.

use dashu_float::ops::SquareRoot;
use dashu_float::{round::mode::HalfEven, FBig};

use super::{Matrix, Real, SymEigen};
use crate::error::{invalid, Result};

pub(crate) type Ext = FBig<HalfEven>;

pub(crate) fn ext(x: f64, bits: usize) -> Ext {
    Ext::try_from(x).expect("finite value").with_precision(bits).value()
}

fn abs(x: &Ext) -> Ext {
    if *x < Ext::ZERO {
        -x.clone()
    } else {
        x.clone()
    }
}

fn to_real<T: Real>(x: &Ext) -> T {
    T::lit(x.to_f64().value())
}

/// Eigendecomposition of the symmetric matrix `a` (row-major, `n × n`)
/// carried out at `bits` of precision and rounded to `T`: Householder
/// reduction to tridiagonal form followed by implicit QL with accumulated
/// rotations. Absolute error is about `2^-bits · ‖a‖`, so eigenvalues far
/// below `f64` roundoff keep their leading digits. Values are returned
/// descending, with the same sign convention as `sym_eigen`.
pub(crate) fn sym_eigen_ext<T: Real>(a: Vec<Vec<Ext>>, bits: usize) -> Result<SymEigen<T>> {
    let n = a.len();
    if n == 0 || a.iter().any(|r| r.len() != n) {
        return invalid("extended eigendecomposition needs a non-empty square matrix");
    }
    let zero = ext(0.0, bits);
    let mut v = a;
    let mut d = vec![zero.clone(); n];
    let mut e = vec![zero.clone(); n];
    tridiagonalize(&mut v, &mut d, &mut e, bits);
    ql_implicit(&mut v, &mut d, &mut e, bits)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).unwrap_or(std::cmp::Ordering::Equal).then(i.cmp(&j)));
    let values = order.iter().map(|&i| to_real(&d[i])).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let mut vec: Vec<T> = (0..n).map(|r| to_real(&v[r][src])).collect();
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

/// Householder tridiagonalization; on return `v` holds the orthogonal
/// transform, `d` the diagonal and `e[1..]` the subdiagonal.
fn tridiagonalize(v: &mut [Vec<Ext>], d: &mut [Ext], e: &mut [Ext], bits: usize) {
    let n = v.len();
    let zero = ext(0.0, bits);
    let one = ext(1.0, bits);
    for j in 0..n {
        d[j] = v[n - 1][j].clone();
    }
    for i in (1..n).rev() {
        let scale = (0..i).fold(zero.clone(), |acc, k| acc + abs(&d[k]));
        let mut h = zero.clone();
        if scale == zero {
            e[i] = d[i - 1].clone();
            for j in 0..i {
                d[j] = v[i - 1][j].clone();
                v[i][j] = zero.clone();
                v[j][i] = zero.clone();
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk = &*dk / &scale;
                h = h + &*dk * &*dk;
            }
            let mut f = d[i - 1].clone();
            let mut g = h.sqrt();
            if f > zero {
                g = -g;
            }
            e[i] = &scale * &g;
            h = h - &f * &g;
            d[i - 1] = &f - &g;
            for ej in e.iter_mut().take(i) {
                *ej = zero.clone();
            }
            for j in 0..i {
                f = d[j].clone();
                v[j][i] = f.clone();
                g = &e[j] + &v[j][j] * &f;
                for k in (j + 1)..i {
                    g = g + &v[k][j] * &d[k];
                    e[k] = &e[k] + &v[k][j] * &f;
                }
                e[j] = g;
            }
            f = zero.clone();
            for j in 0..i {
                e[j] = &e[j] / &h;
                f = f + &e[j] * &d[j];
            }
            let hh = &f / (&h + &h);
            for j in 0..i {
                e[j] = &e[j] - &hh * &d[j];
            }
            for j in 0..i {
                let (f, g) = (d[j].clone(), e[j].clone());
                for k in j..i {
                    v[k][j] = &v[k][j] - (&f * &e[k] + &g * &d[k]);
                }
                d[j] = v[i - 1][j].clone();
                v[i][j] = zero.clone();
            }
        }
        d[i] = h;
    }
    for i in 0..n.saturating_sub(1) {
        v[n - 1][i] = v[i][i].clone();
        v[i][i] = one.clone();
        let h = d[i + 1].clone();
        if h != zero {
            for k in 0..=i {
                d[k] = &v[k][i + 1] / &h;
            }
            for j in 0..=i {
                let g = (0..=i).fold(zero.clone(), |acc, k| acc + &v[k][i + 1] * &v[k][j]);
                for k in 0..=i {
                    v[k][j] = &v[k][j] - &g * &d[k];
                }
            }
        }
        for row in v.iter_mut().take(i + 1) {
            row[i + 1] = zero.clone();
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j].clone();
        v[n - 1][j] = zero.clone();
    }
    v[n - 1][n - 1] = one;
    e[0] = zero;
}

/// Implicit QL on the tridiagonal `(d, e)`, accumulating into `v`.
fn ql_implicit(v: &mut [Vec<Ext>], d: &mut [Ext], e: &mut [Ext], bits: usize) -> Result<()> {
    let n = v.len();
    let zero = ext(0.0, bits);
    let one = ext(1.0, bits);
    let two = ext(2.0, bits);
    let eps = ext(2f64.powi(-(bits as i32)), bits);
    let hypot = |a: &Ext, b: &Ext| (a * a + b * b).sqrt();
    for i in 1..n {
        e[i - 1] = e[i].clone();
    }
    e[n - 1] = zero.clone();
    let mut f = zero.clone();
    let mut tst1 = zero.clone();
    for l in 0..n {
        let t = abs(&d[l]) + abs(&e[l]);
        if t > tst1 {
            tst1 = t;
        }
        let mut m = l;
        while m < n - 1 && abs(&e[m]) > &eps * &tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 30 * n {
                    return Err(crate::Error::Numeric("extended QL iteration did not converge".into()));
                }
                let g = d[l].clone();
                let mut p = (&d[l + 1] - &g) / (&two * &e[l]);
                let mut r = hypot(&p, &one);
                if p < zero {
                    r = -r;
                }
                d[l] = &e[l] / (&p + &r);
                d[l + 1] = &e[l] * (&p + &r);
                let dl1 = d[l + 1].clone();
                let mut h = &g - &d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di = &*di - &h;
                }
                f = f + &h;

                p = d[m].clone();
                let (mut c, mut c2, mut c3) = (one.clone(), one.clone(), one.clone());
                let el1 = e[l + 1].clone();
                let (mut s, mut s2) = (zero.clone(), zero.clone());
                for i in (l..m).rev() {
                    c3 = c2.clone();
                    c2 = c.clone();
                    s2 = s.clone();
                    let g = &c * &e[i];
                    h = &c * &p;
                    r = hypot(&p, &e[i]);
                    e[i + 1] = &s * &r;
                    s = &e[i] / &r;
                    c = &p / &r;
                    p = &c * &d[i] - &s * &g;
                    d[i + 1] = &h + &s * (&c * &g + &s * &d[i]);
                    for row in v.iter_mut() {
                        let hk = row[i + 1].clone();
                        row[i + 1] = &s * &row[i] + &c * &hk;
                        row[i] = &c * &row[i] - &s * &hk;
                    }
                }
                p = -(&s * &s2 * &c3 * &el1 * &e[l]) / &dl1;
                e[l] = &s * &p;
                d[l] = &c * &p;
                if abs(&e[l]) <= &eps * &tst1 {
                    break;
                }
            }
        }
        d[l] = &d[l] + &f;
        e[l] = zero.clone();
    }
    Ok(())
}
