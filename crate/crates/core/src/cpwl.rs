//! Exact piecewise-linear structure of a ReLU network: linear regions along a
//! segment, local affine maps `W_ε x + b_ε`, the Lipschitz chain, and the
//! closed-form Fourier transform of the restriction to `[0, 1]`.

use std::collections::HashSet;
use std::fmt::Write as _;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::numeric::stats::loglog_slope;
use crate::numeric::{norm2, spectral_norm_exact, Matrix, Real};
use crate::relunet::{ActivationPattern, ReluNet};

/// Default limit on the number of regions along one segment.
pub const DEFAULT_REGION_CAP: usize = 1_000_000;

/// Breakpoints closer than this (in the line parameter) are treated as one.
pub const BREAKPOINT_TOL: f64 = 1e-12;

/// Relative size below which a preactivation counts as sitting on its kink.
const ON_KINK_TOL: f64 = 1e-11;

/// Magnitudes at or below this are dropped from decay fits.
pub const DECAY_FLOOR: f64 = 1e-13;

/// One affine piece `f(x(t)) = slope·t + intercept` for `t ∈ [t_lo, t_hi)`,
/// where `x(t) = a + t (b − a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRegion1D<T> {
    pub t_lo: T,
    pub t_hi: T,
    pub slope: T,
    pub intercept: T,
    pub pattern: ActivationPattern,
}

impl<T: Real> LinearRegion1D<T> {
    pub fn eval(&self, t: T) -> T {
        self.slope * t + self.intercept
    }

    pub fn len(&self) -> T {
        self.t_hi - self.t_lo
    }
}

/// Affine-in-`t` preactivations of every hidden layer under the pattern
/// selected just to the right of `t`, plus the output's affine form.
struct LineState<T> {
    /// `(α, β)` per neuron per hidden layer: `z(t) = α t + β`.
    hidden: Vec<Vec<(T, T)>>,
    pattern: Vec<Vec<bool>>,
    output: (T, T),
}

fn line_state<T: Real>(net: &ReluNet<T>, a: &[T], dir: &[T], t: T) -> Result<LineState<T>> {
    let layers = net.layers();
    let tol = T::lit(ON_KINK_TOL);
    let mut alpha = dir.to_vec();
    let mut beta = a.to_vec();
    let mut hidden = Vec::with_capacity(net.depth());
    let mut pattern = Vec::with_capacity(net.depth());
    for (k, layer) in layers.iter().enumerate() {
        let mut na = layer.weight.matvec(&alpha)?;
        let mut nb = layer.weight.matvec(&beta)?;
        for (b, &bias) in nb.iter_mut().zip(&layer.bias) {
            *b += bias;
        }
        if k + 1 == layers.len() {
            return Ok(LineState {
                hidden,
                pattern,
                output: (na[0], nb[0]),
            });
        }
        let mut active = Vec::with_capacity(na.len());
        for (al, be) in na.iter().zip(&nb) {
            let z = *al * t + *be;
            let on = if z.abs() > tol * (al.abs() + be.abs()) {
                z > T::zero()
            } else {
                // on the kink: the sign just to the right is the slope's
                *al > T::zero()
            };
            active.push(on);
        }
        hidden.push(na.iter().copied().zip(nb.iter().copied()).collect());
        for ((al, be), &on) in na.iter_mut().zip(nb.iter_mut()).zip(&active) {
            if !on {
                *al = T::zero();
                *be = T::zero();
            }
        }
        pattern.push(active);
        alpha = na;
        beta = nb;
    }
    unreachable!("a network always has an output layer")
}

/// Linear regions of `net` along the segment from `a` to `b`, in order,
/// with the default cap of [`DEFAULT_REGION_CAP`] regions.
pub fn extract_regions_1d<T: Real>(
    net: &ReluNet<T>,
    a: &[T],
    b: &[T],
) -> Result<Vec<LinearRegion1D<T>>> {
    extract_regions_1d_capped(net, a, b, DEFAULT_REGION_CAP)
}

/// Region walk: inside a region every preactivation is affine in `t`, so the
/// next breakpoint is the smallest root beyond the current `t` of any
/// preactivation under the current pattern. Adjacent pieces with equal
/// patterns are merged.
pub fn extract_regions_1d_capped<T: Real>(
    net: &ReluNet<T>,
    a: &[T],
    b: &[T],
    cap: usize,
) -> Result<Vec<LinearRegion1D<T>>> {
    let d = net.input_dim();
    if a.len() != d || b.len() != d {
        return invalid(format!("segment endpoints must lie in R^{d}"));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return invalid("non-finite segment endpoint");
    }
    let dir: Vec<T> = b.iter().zip(a).map(|(&x, &y)| x - y).collect();
    if dir.iter().all(|&v| v == T::zero()) {
        return invalid("segment endpoints coincide");
    }
    let step_tol = T::lit(BREAKPOINT_TOL);
    let mut regions: Vec<LinearRegion1D<T>> = Vec::new();
    let mut t = T::zero();
    while t < T::one() {
        let state = line_state(net, a, &dir, t)?;
        let mut next = T::one();
        for layer in &state.hidden {
            for &(al, be) in layer {
                if al != T::zero() {
                    let root = -be / al;
                    if root > t + step_tol && root < next {
                        next = root;
                    }
                }
            }
        }
        let pattern = ActivationPattern::new(state.pattern);
        let (slope, intercept) = state.output;
        match regions.last_mut() {
            Some(last) if last.pattern == pattern => last.t_hi = next,
            _ => {
                if regions.len() == cap {
                    return Err(Error::Resource(format!(
                        "more than {cap} linear regions along the segment"
                    )));
                }
                regions.push(LinearRegion1D {
                    t_lo: t,
                    t_hi: next,
                    slope,
                    intercept,
                    pattern,
                });
            }
        }
        t = next;
    }
    Ok(regions)
}

/// Value of the piecewise-linear reconstruction at `t ∈ [0, 1]`.
pub fn eval_regions<T: Real>(regions: &[LinearRegion1D<T>], t: T) -> Option<T> {
    let idx = regions.partition_point(|r| r.t_hi <= t);
    regions
        .get(idx.min(regions.len().saturating_sub(1)))
        .filter(|r| t >= r.t_lo - T::lit(BREAKPOINT_TOL) && t <= r.t_hi + T::lit(BREAKPOINT_TOL))
        .map(|r| r.eval(t))
}

/// Region dump: `t_lo,t_hi,slope,intercept,pattern_hash`.
pub fn regions_to_csv<T: Real>(regions: &[LinearRegion1D<T>]) -> String {
    let mut out = String::from("t_lo,t_hi,slope,intercept,pattern_hash\n");
    for r in regions {
        let _ = writeln!(
            out,
            "{},{},{},{},{:016x}",
            r.t_lo,
            r.t_hi,
            r.slope,
            r.intercept,
            r.pattern.digest()
        );
    }
    out
}

/// Local affine map of the region with the given pattern:
/// `W_ε = W^{(L+1)} D_L W^{(L)} ⋯ D_1 W^{(1)}` (a `1 × d` matrix) and the
/// bias propagated through the same masks.
pub fn region_matrix<T: Real>(
    net: &ReluNet<T>,
    pattern: &ActivationPattern,
) -> Result<(Matrix<T>, T)> {
    if pattern.widths() != net.hidden_widths() {
        return invalid(format!(
            "pattern widths {:?} do not match hidden widths {:?}",
            pattern.widths(),
            net.hidden_widths()
        ));
    }
    let layers = net.layers();
    let mut w = layers[0].weight.clone();
    let mut c = layers[0].bias.clone();
    for (k, layer) in layers.iter().enumerate().skip(1) {
        for (j, &on) in pattern.layers()[k - 1].iter().enumerate() {
            if !on {
                w.row_mut(j).iter_mut().for_each(|v| *v = T::zero());
                c[j] = T::zero();
            }
        }
        w = layer.weight.matmul(&w)?;
        c = layer.weight.matvec(&c)?;
        for (ci, &bi) in c.iter_mut().zip(&layer.bias) {
            *ci += bi;
        }
    }
    Ok((w, c[0]))
}

/// The Lipschitz chain `max ‖W_ε‖ ≤ ∏‖W^{(k)}‖ ≤ ‖θ‖_∞^{L+1} √d ∏ d_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzReport<T> {
    /// Largest `‖W_ε‖` over regions hit by the samples.
    pub sampled_max: T,
    /// Product of exact layer spectral norms.
    pub layer_product: T,
    /// Max-norm bound.
    pub max_norm_bound: T,
    /// Distinct regions visited.
    pub regions_seen: usize,
}

impl<T: Real> LipschitzReport<T> {
    /// Whether each link holds up to relative slack `rel`.
    pub fn chain_holds(&self, rel: T) -> bool {
        let le = |a: T, b: T| a <= b + rel * b.abs().max(T::min_positive_value());
        le(self.sampled_max, self.layer_product) && le(self.layer_product, self.max_norm_bound)
    }
}

/// Evaluates the chain, maximizing `‖W_ε‖` over the regions containing
/// `samples` uniform points of `[0, 1]^d` (seeded).
pub fn lipschitz_report<T: Real>(
    net: &ReluNet<T>,
    samples: usize,
    seed: u64,
) -> Result<LipschitzReport<T>> {
    if samples == 0 {
        return invalid("need at least one sample");
    }
    let d = net.input_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut sampled_max = T::zero();
    for _ in 0..samples {
        let x: Vec<T> = (0..d).map(|_| T::lit(rng.random::<f64>())).collect();
        let pattern = net.activation_pattern(&x)?;
        if !seen.insert(pattern.clone()) {
            continue;
        }
        let (w, _) = region_matrix(net, &pattern)?;
        sampled_max = sampled_max.max(norm2(w.as_slice()));
    }
    let layer_product = net
        .layers()
        .iter()
        .map(|l| spectral_norm_exact(&l.weight))
        .product::<Result<T>>()?;
    let theta_inf = net.max_abs_param();
    let hidden: T = net
        .hidden_widths()
        .iter()
        .map(|&w| T::from_usize_lossy(w))
        .product();
    let max_norm_bound =
        theta_inf.powi(net.layers().len() as i32) * T::from_usize_lossy(d).sqrt() * hidden;
    Ok(LipschitzReport {
        sampled_max,
        layer_product,
        max_norm_bound,
        regions_seen: seen.len(),
    })
}

fn check_partition<T: Real>(regions: &[LinearRegion1D<T>]) -> Result<()> {
    let tol = T::lit(BREAKPOINT_TOL);
    let (Some(first), Some(last)) = (regions.first(), regions.last()) else {
        return invalid("no regions");
    };
    if first.t_lo.abs() > tol || (last.t_hi - T::one()).abs() > tol {
        return invalid("regions must start at 0 and end at 1");
    }
    for w in regions.windows(2) {
        if (w[0].t_hi - w[1].t_lo).abs() > tol {
            return invalid("regions leave a gap or overlap");
        }
    }
    if regions.iter().any(|r| !(r.t_hi > r.t_lo)) {
        return invalid("empty or reversed region");
    }
    Ok(())
}

/// `∫₀¹ f(t) e^{−2πikt} dt` for the piecewise-linear `f`, summed exactly
/// segment by segment.
pub fn cpwl_fourier_1d<T: Real>(regions: &[LinearRegion1D<T>], k: i64) -> Result<Complex<T>> {
    check_partition(regions)?;
    Ok(fourier_unchecked(regions, k))
}

fn fourier_unchecked<T: Real>(regions: &[LinearRegion1D<T>], k: i64) -> Complex<T> {
    let half = T::lit(0.5);
    if k == 0 {
        return regions
            .iter()
            .map(|r| {
                let (t0, t1) = (r.t_lo, r.t_hi);
                let v = r.slope * half * (t1 * t1 - t0 * t0) + r.intercept * (t1 - t0);
                Complex::new(v, T::zero())
            })
            .sum();
    }
    let omega = T::TAU() * T::lit(k as f64);
    let i = Complex::new(T::zero(), T::one());
    let inv_w = T::one() / omega;
    // antiderivative of (m t + c) e^{−iωt}: [m (i t/ω + 1/ω²) + c i/ω] e^{−iωt}
    let anti = |r: &LinearRegion1D<T>, t: T| -> Complex<T> {
        let e = Complex::from_polar(T::one(), -omega * t);
        let coef = i * (r.slope * t * inv_w + r.intercept * inv_w)
            + Complex::new(r.slope * inv_w * inv_w, T::zero());
        coef * e
    };
    regions
        .iter()
        .map(|r| anti(r, r.t_hi) - anti(r, r.t_lo))
        .sum()
}

/// Log-log slope of `|∫₀¹ f e^{−2πikt}|` against `k`, ignoring magnitudes
/// at or below [`DECAY_FLOOR`]. The frequencies must span a decade.
pub fn decay_fit_1d<T: Real>(regions: &[LinearRegion1D<T>], ks: &[u64]) -> Result<T> {
    check_partition(regions)?;
    let lo = ks.iter().copied().min().unwrap_or(0);
    let hi = ks.iter().copied().max().unwrap_or(0);
    if lo == 0 || hi < 10 * lo {
        return invalid("decay fit needs positive frequencies spanning a decade");
    }
    let x: Vec<T> = ks.iter().map(|&k| T::lit(k as f64)).collect();
    let y: Vec<T> = ks
        .iter()
        .map(|&k| fourier_unchecked(regions, k as i64).norm())
        .collect();
    loglog_slope(&x, &y, T::lit(DECAY_FLOOR))
}
