//! One-dimensional quadrature and scalar root bracketing.
//!
//! The adaptive driver uses the 7-point Gauss / 15-point Kronrod pair with global
//! bisection of the interval carrying the largest error estimate. Integrands with
//! algebraic endpoint singularities `(x - a)^(-alpha)` are handled by a power
//! substitution that turns the singular factor into a smooth one before the
//! adaptive rule sees it.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances and limits for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-14,
            rel_tol: 1e-12,
            max_intervals: 4000,
        }
    }
}

/// Returns the Kronrod value, the Kronrod–Gauss difference and the Kronrod
/// estimate of `∫|f|` (used as the rounding-noise scale).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs = fc.abs() * WGK[7];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = h * x;
        let (fl, fr) = (f(c - dx), f(c + dx));
        let pair = fl + fr;
        kronrod += w * pair;
        abs += w * (fl.abs() + fr.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * h;
    let err = ((kronrod - gauss) * h).abs();
    (value, err, abs * h.abs())
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
    abs: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Adaptive Gauss–Kronrod integration of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Quadrature(format!("non-finite bounds [{a}, {b}]")));
    }
    let (sign, lo, hi) = if a < b { (1.0, a, b) } else { (-1.0, b, a) };
    let (v, e, m) = gk15(&f, lo, hi);
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a: lo, b: hi, value: v, err: e, abs: m });
    let mut total = v;
    let mut total_err = e;
    while total_err > opts.abs_tol.max(opts.rel_tol * total.abs()) {
        if heap.len() >= opts.max_intervals {
            break;
        }
        let worst = heap.pop().expect("heap never empties");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            heap.push(worst);
            break;
        }
        let (v1, e1, m1) = gk15(&f, worst.a, mid);
        let (v2, e2, m2) = gk15(&f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.err;
        heap.push(Piece { a: worst.a, b: mid, value: v1, err: e1, abs: m1 });
        heap.push(Piece { a: mid, b: worst.b, value: v2, err: e2, abs: m2 });
    }
    // re-sum to shed the drift of the running updates
    let mut pieces: Vec<Piece> = heap.into_vec();
    pieces.sort_by(|x, y| x.a.total_cmp(&y.a));
    let sum: f64 = pieces.iter().map(|p| p.value).sum();
    let err: f64 = pieces.iter().map(|p| p.err).sum();
    let abs: f64 = pieces.iter().map(|p| p.abs).sum();
    if !sum.is_finite() {
        return Err(Error::Quadrature(format!("non-finite integral on [{lo}, {hi}]")));
    }
    // integrands that cancel near an endpoint carry rounding noise the
    // estimate cannot go below; accept anything at that floor
    let noise = 1e5 * f64::EPSILON * abs;
    let slack = 1e3 * opts.abs_tol.max(opts.rel_tol * sum.abs());
    if err > slack.max(1e-10 * sum.abs()).max(noise) {
        return Err(Error::Quadrature(format!(
            "error estimate {err:e} above tolerance on [{lo}, {hi}]"
        )));
    }
    Ok(sign * sum)
}

/// Integrates `f` over `[a, b]` when `f` blows up like `(x-a)^(-alpha_lo)` at `a`
/// and `(b-x)^(-alpha_hi)` at `b`. Exponents must lie in `[0, 1)`; a zero
/// exponent means the endpoint is regular.
pub fn integrate_endpoint_singular<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    alpha_lo: f64,
    alpha_hi: f64,
    opts: QuadOptions,
) -> Result<f64> {
    if !(0.0..1.0).contains(&alpha_lo) || !(0.0..1.0).contains(&alpha_hi) {
        return Err(Error::Quadrature(format!(
            "endpoint exponents must be in [0,1), got {alpha_lo}, {alpha_hi}"
        )));
    }
    if a == b {
        return Ok(0.0);
    }
    if a > b {
        return integrate_endpoint_singular(f, b, a, alpha_hi, alpha_lo, opts).map(|v| -v);
    }
    let mid = 0.5 * (a + b);
    let left = if alpha_lo > 0.0 {
        singular_half(&f, a, mid - a, alpha_lo, opts)?
    } else {
        integrate(&f, a, mid, opts)?
    };
    let right = if alpha_hi > 0.0 {
        singular_half(&f, b, -(b - mid), alpha_hi, opts)?
    } else {
        integrate(&f, mid, b, opts)?
    };
    Ok(left + right)
}

/// `∫` of `f` from the singular endpoint `e` over a signed length `len`.
///
/// The first `delta` next to `e` is taken from the leading term `C d^-alpha`,
/// matched at `d = delta`: closer in, `x - e` is dominated by rounding in `x`
/// and sampling `f` there only adds noise.
fn singular_half<F: Fn(f64) -> f64>(f: &F, e: f64, len: f64, alpha: f64, opts: QuadOptions) -> Result<f64> {
    let span = len.abs();
    let dir = len.signum();
    let delta = (1e-8 * e.abs().max(span)).min(1e-3 * span);
    let rest = span - delta;
    let r = 2.0 / (1.0 - alpha);
    let body = integrate(
        |u: f64| {
            let ur = u.powf(r);
            f(e + dir * (delta + rest * ur)) * rest * r * ur / u
        },
        f64::MIN_POSITIVE.powf(1.0 / r),
        1.0,
        opts,
    )?;
    let cap = f(e + dir * delta) * delta / (1.0 - alpha);
    if !cap.is_finite() {
        return Err(Error::Quadrature(format!("integrand not finite at {} + {delta:e}", e)));
    }
    Ok(body + cap)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, computed by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "gauss_legendre needs at least one node");
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Gauss–Legendre rule mapped onto `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (
        x.iter().map(|&t| mid + half * t).collect(),
        w.iter().map(|&v| v * half).collect(),
    )
}

/// Bisection for a sign change of `f` on `[lo, hi]`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Infeasible(format!(
            "no sign change on [{lo}, {hi}] ({flo:e}, {fhi:e})"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid == lo || mid == hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(5);
        // exact through degree 9
        let m8: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((m8 - 2.0 / 9.0).abs() < 1e-14);
        let (x, w) = gauss_legendre(64);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-13);
        let c: f64 = x.iter().zip(&w).map(|(x, w)| w * x.cos()).sum();
        assert!((c - 2.0 * 1f64.sin()).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_peaks() {
        let v = integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, QuadOptions::default()).unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((v - exact).abs() / exact < 1e-11);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let v = integrate(|x| x * x, 1.0, 0.0, QuadOptions::default()).unwrap();
        assert!((v + 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn endpoint_singular_inverse_sqrt() {
        // int_0^1 x^{-1/2} (1-x)^{-1/2} dx = pi; 1 - x cancels near x = 1, which
        // caps the attainable accuracy well above machine precision
        let v = integrate_endpoint_singular(
            |x| 1.0 / (x * (1.0 - x)).sqrt(),
            0.0,
            1.0,
            0.5,
            0.5,
            QuadOptions::default(),
        )
        .unwrap();
        assert!((v - std::f64::consts::PI).abs() < 1e-9, "{v}");
    }

    #[test]
    fn bisection_finds_root() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-15).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
    }
}
