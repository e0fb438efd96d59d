//! One-dimensional profiles: the explicit comparison profile, the heteroclinic
//! connection between the wells, and the ε-perturbed super-solution profile.
//!
//! Heteroclinic and super-solution profiles are obtained from a first integral:
//! the travelling coordinate is an explicit integral of the state,
//! `t(s) = ∫_0^s φ(τ) dτ`, and the profile is its inverse. The inverse is
//! evaluated by safeguarded Newton iteration on top of a graded node table, so
//! each sample is accurate to quadrature precision rather than to the node spacing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::interp::Hermite;
use crate::potential::{weight_exponent, Potential};
use crate::quadrature::{bisect, integrate, integrate_endpoint_singular, QuadOptions};
use crate::stats::fit_line;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    Comparison,
    Heteroclinic,
    Supersolution,
}

/// Profile metadata. `a`/`b` are the finite ends of the transition (where the
/// profile reaches its extreme values with zero slope); `None` means the end is
/// at infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileMeta {
    pub p: f64,
    pub m: f64,
    pub epsilon: f64,
    pub eta: f64,
    pub s0: f64,
    pub s1: f64,
    pub a: Option<f64>,
    pub b: Option<f64>,
}

/// A sampled monotone profile `U(t)` with its derivative.
#[derive(Debug, Clone)]
pub struct Profile1D {
    pub kind: ProfileKind,
    pub t: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    pub meta: ProfileMeta,
    interp: Option<Hermite>,
}

impl Profile1D {
    fn new(kind: ProfileKind, t: Vec<f64>, u: Vec<f64>, du: Vec<f64>, meta: ProfileMeta) -> Self {
        let interp = if t.len() >= 2 && t.windows(2).all(|w| w[1] > w[0]) {
            Hermite::new(t.clone(), u.clone(), du.clone()).ok()
        } else {
            None
        };
        Self { kind, t, u, du, meta, interp }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Evaluates `(U, U')` at `t`. Comparison profiles use the closed form; the
    /// others interpolate their samples and are constant beyond the sampled range.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        if self.kind == ProfileKind::Comparison {
            return comparison_value(self.meta.p, self.meta.m, t);
        }
        match &self.interp {
            Some(h) if t < h.x_min() => (self.u[0], 0.0),
            Some(h) if t > h.x_max() => (self.u[self.u.len() - 1], 0.0),
            Some(h) => h.eval(t),
            None => (self.u.first().copied().unwrap_or(f64::NAN), 0.0),
        }
    }

    /// Writes `t,u,du` rows.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "u", "du"])?;
        for i in 0..self.t.len() {
            w.write_record(&[
                format!("{:e}", self.t[i]),
                format!("{:e}", self.u[i]),
                format!("{:e}", self.du[i]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn comparison_value(p: f64, m: f64, t: f64) -> (f64, f64) {
    if t >= 0.0 {
        if t < 1.0 {
            (t, 1.0)
        } else {
            (1.0, 0.0)
        }
    } else {
        let k = p / (m - p);
        let s = 1.0 - t;
        (-1.0 + s.powf(-k), k * s.powf(-k - 1.0))
    }
}

/// The comparison profile: `U(t) = t` for `0 <= t <= 1` (clamped to 1 beyond),
/// `U(t) = -1 + (1-t)^(-p/(m-p))` for `t <= 0`. Returns `(U, U')`.
pub fn comparison_profile(p: f64, m: f64, t: f64) -> Result<(f64, f64)> {
    weight_exponent(p, m)?;
    Ok(comparison_value(p, m, t))
}

/// Samples the comparison profile on `t_grid`.
pub fn comparison_samples(p: f64, m: f64, t_grid: &[f64]) -> Result<Profile1D> {
    weight_exponent(p, m)?;
    let (u, du): (Vec<f64>, Vec<f64>) = t_grid.iter().map(|&t| comparison_value(p, m, t)).unzip();
    Ok(Profile1D::new(
        ProfileKind::Comparison,
        t_grid.to_vec(),
        u,
        du,
        ProfileMeta {
            p,
            m,
            epsilon: 0.0,
            eta: 0.0,
            s0: -1.0,
            s1: 1.0,
            a: None,
            b: Some(1.0),
        },
    ))
}

/// `∫_{-∞}^{-T} |U'|^p + W(U) dt` for the comparison profile.
///
/// In the variable `s = 1 - t` the integrand is `k^p s^(-q) + W(-1 + s^(-k))`
/// with `k = p/(m-p)`, `q = pm/(m-p)`. It is integrated in `ln s` up to a
/// cutoff; beyond the cutoff the integrand is replaced by its leading-order
/// power law `f(s_cut) (s/s_cut)^(-q)`, which integrates in closed form.
pub fn tail_energy(p: f64, m: f64, big_t: f64, pot: &Potential) -> Result<f64> {
    let q = weight_exponent(p, m)?;
    if !(big_t >= 1.0) {
        return Err(Error::Parameter(format!("tail energy needs T >= 1, got {big_t}")));
    }
    let k = p / (m - p);
    let f = |s: f64| -> f64 {
        let y = s.powf(-k);
        k.powf(p) * s.powf(-q) + pot.value_near_minus_one(y)
    };
    let ln_lo = (1.0 + big_t).ln();
    // the leading-order tail is accurate to O(s^-k); push the cutoff until that is negligible
    let ln_cut = (ln_lo + 14.0 * std::f64::consts::LN_10).max((1e-12f64).ln() / -k).min(700.0);
    let ln_cut = ln_cut.max(ln_lo + 1.0);
    let body = integrate(
        |ls: f64| {
            let s = ls.exp();
            f(s) * s
        },
        ln_lo,
        ln_cut,
        QuadOptions {
            abs_tol: 0.0,
            rel_tol: 1e-12,
            max_intervals: 4000,
        },
    )?;
    let s_cut = ln_cut.exp();
    let tail = f(s_cut) * s_cut / (q - 1.0);
    Ok(body + tail)
}

/// Cumulative first-integral table `t(s) = t_ref + ∫ φ` on increasing nodes, with
/// optional algebraic singularities of `φ` at the first/last node.
struct InverseTable<'a> {
    phi: &'a dyn Fn(f64) -> f64,
    nodes: Vec<f64>,
    values: Vec<f64>,
    alpha_lo: f64,
    alpha_hi: f64,
}

impl<'a> InverseTable<'a> {
    /// `origin` is the index of the node where `t = 0`.
    fn build(
        phi: &'a dyn Fn(f64) -> f64,
        nodes: Vec<f64>,
        origin: usize,
        alpha_lo: f64,
        alpha_hi: f64,
    ) -> Result<Self> {
        let mut table = Self {
            phi,
            values: vec![0.0; nodes.len()],
            nodes,
            alpha_lo,
            alpha_hi,
        };
        for k in origin + 1..table.nodes.len() {
            table.values[k] = table.values[k - 1] + table.segment(k - 1)?;
        }
        for k in (0..origin).rev() {
            table.values[k] = table.values[k + 1] - table.segment(k)?;
        }
        Ok(table)
    }

    fn opts() -> QuadOptions {
        QuadOptions {
            abs_tol: 1e-15,
            rel_tol: 1e-13,
            max_intervals: 2000,
        }
    }

    /// `∫_{nodes[k]}^{nodes[k+1]} φ`.
    fn segment(&self, k: usize) -> Result<f64> {
        let last = self.nodes.len() - 1;
        let lo_a = if k == 0 { self.alpha_lo } else { 0.0 };
        let hi_a = if k + 1 == last { self.alpha_hi } else { 0.0 };
        let (a, b) = (self.nodes[k], self.nodes[k + 1]);
        let v = integrate_endpoint_singular(|s| (self.phi)(s), a, b, lo_a, hi_a, Self::opts())?;
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::Quadrature(format!(
                "first integral is not finite and positive on [{a}, {b}]"
            )));
        }
        Ok(v)
    }

    /// `t(s)` for `s` inside segment `k`.
    fn t_at(&self, k: usize, s: f64) -> Result<f64> {
        let last = self.nodes.len() - 1;
        if k + 1 == last && self.alpha_hi > 0.0 {
            let rest =
                integrate_endpoint_singular(|x| (self.phi)(x), s, self.nodes[last], 0.0, self.alpha_hi, Self::opts())?;
            return Ok(self.values[last] - rest);
        }
        if k == 0 && self.alpha_lo > 0.0 {
            let part =
                integrate_endpoint_singular(|x| (self.phi)(x), self.nodes[0], s, self.alpha_lo, 0.0, Self::opts())?;
            return Ok(self.values[0] + part);
        }
        Ok(self.values[k] + integrate(|x| (self.phi)(x), self.nodes[k], s, Self::opts())?)
    }

    fn t_min(&self) -> f64 {
        self.values[0]
    }

    fn t_max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Inverse `s(t)`; clamps to the end nodes outside the table.
    fn solve(&self, t: f64) -> Result<f64> {
        let last = self.nodes.len() - 1;
        if t <= self.values[0] {
            return Ok(self.nodes[0]);
        }
        if t >= self.values[last] {
            return Ok(self.nodes[last]);
        }
        let k = self.values.partition_point(|&v| v <= t).saturating_sub(1).min(last - 1);
        let (mut lo, mut hi) = (self.nodes[k], self.nodes[k + 1]);
        let (tlo, thi) = (self.values[k], self.values[k + 1]);
        if t == tlo {
            return Ok(lo);
        }
        let mut s = lo + (hi - lo) * (t - tlo) / (thi - tlo);
        let tol = 1e-14 * t.abs().max(1.0);
        for _ in 0..80 {
            let r = self.t_at(k, s)? - t;
            if r.abs() <= tol {
                return Ok(s);
            }
            if r > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            let d = (self.phi)(s);
            let mut next = s - r / d;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            if next == s || hi - lo <= f64::EPSILON * s.abs().max(1e-300) {
                return Ok(next);
            }
            s = next;
        }
        Ok(s)
    }
}

/// Heteroclinic profile through `U(0) = 0` from the equipartition relation
/// `(p-1)|U'|^p = W(U)`, sampled on `t_grid` (ascending).
pub fn heteroclinic_profile(p: f64, pot: &Potential, t_grid: &[f64]) -> Result<Profile1D> {
    if !(p > 1.0) {
        return Err(Error::Parameter(format!("p must exceed 1, got {p}")));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Parameter("t_grid must be strictly increasing".into()));
    }
    let m = pot.m();
    let finite_ends = m < p;
    let inv_p = 1.0 / p;
    let phi = |s: f64| -> f64 {
        let w = pot.value(s.clamp(-1.0, 1.0));
        (w / (p - 1.0)).powf(-inv_p)
    };
    let t_need_hi = t_grid.last().copied().unwrap_or(0.0).max(0.0) * 1.01 + 1.0;
    let t_need_lo = t_grid.first().copied().unwrap_or(0.0).min(0.0).abs() * 1.01 + 1.0;

    // nodes: uniform on |s| <= 1/2, then geometric toward each well
    let side = |sign: f64, t_need: f64| -> Result<Vec<f64>> {
        let mut nodes: Vec<f64> = (1..=16).map(|j| sign * 0.5 * j as f64 / 16.0).collect();
        let mut y = 0.5;
        let mut t_acc = 0.0;
        let mut prev: f64 = 0.0;
        // running estimate of |t| reached, to know when to stop
        for &s in &nodes {
            t_acc += integrate_endpoint_singular(phi, prev.min(s), prev.max(s), 0.0, 0.0, QuadOptions::default())?;
            prev = s;
        }
        loop {
            let y_next = 0.5 * y;
            if finite_ends && y_next < 1.0 / 64.0 {
                nodes.push(sign);
                break;
            }
            if y_next < 1e-15 {
                break;
            }
            let s = sign * (1.0 - y_next);
            let seg = integrate(phi, prev.min(s), prev.max(s), QuadOptions::default())?;
            if !seg.is_finite() {
                return Err(Error::Quadrature("W vanishes inside (-1, 1)".into()));
            }
            t_acc += seg;
            nodes.push(s);
            prev = s;
            y = y_next;
            if !finite_ends && t_acc > t_need {
                break;
            }
        }
        Ok(nodes)
    };
    let right = side(1.0, t_need_hi)?;
    let left = side(-1.0, t_need_lo)?;
    let mut nodes: Vec<f64> = left.iter().rev().copied().collect();
    let origin = nodes.len();
    nodes.push(0.0);
    nodes.extend(right);
    let alpha = if finite_ends { m / p } else { 0.0 };
    let table = InverseTable::build(&phi, nodes, origin, alpha, alpha)?;

    let (mut u, mut du) = (Vec::with_capacity(t_grid.len()), Vec::with_capacity(t_grid.len()));
    for &t in t_grid {
        let s = table.solve(t)?;
        u.push(s);
        du.push(if s.abs() >= 1.0 { 0.0 } else { (pot.value(s) / (p - 1.0)).powf(inv_p) });
    }
    let meta = ProfileMeta {
        p,
        m,
        epsilon: 0.0,
        eta: 0.0,
        s0: -1.0,
        s1: 1.0,
        a: finite_ends.then(|| table.t_min()),
        b: finite_ends.then(|| table.t_max()),
    };
    Ok(Profile1D::new(ProfileKind::Heteroclinic, t_grid.to_vec(), u, du, meta))
}

/// Roots bracketing zero of `W(tau) - eps*tau + eta`, plus the slopes of that
/// function there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootPair {
    pub s0: f64,
    pub s1: f64,
    pub slope0: f64,
    pub slope1: f64,
}

/// Nearest roots of `F(tau) = W(tau) - eps*tau + eta` on either side of 0.
/// Fails unless both roots lie inside `(-1, 1)` and are transversal in the
/// sense `|W'(s_i) - eps| >= eps/10`.
pub fn bracket_roots(pot: &Potential, epsilon: f64, eta: f64) -> Result<RootPair> {
    let f = |tau: f64| pot.value(tau) - epsilon * tau + eta;
    if !(f(0.0) > 0.0) {
        return Err(Error::Infeasible(format!("W(0) + eta = {} is not positive", f(0.0))));
    }
    let first_root = |sign: f64| -> Result<f64> {
        const STEPS: usize = 4096;
        let mut prev = 0.0;
        for i in 1..=STEPS {
            let tau = sign * i as f64 / STEPS as f64;
            if f(tau) <= 0.0 {
                if f(tau) == 0.0 && tau.abs() == 1.0 {
                    break;
                }
                let (lo, hi) = if sign > 0.0 { (prev, tau) } else { (tau, prev) };
                return bisect(f, lo, hi, 1e-15);
            }
            prev = tau;
        }
        Err(Error::Infeasible(format!(
            "W(tau) - {epsilon} tau + {eta} has no root in {}",
            if sign > 0.0 { "(0, 1)" } else { "(-1, 0)" }
        )))
    };
    let s1 = first_root(1.0)?;
    let s0 = first_root(-1.0)?;
    let slope0 = pot.slope(s0) - epsilon;
    let slope1 = pot.slope(s1) - epsilon;
    let floor = epsilon / 10.0;
    if !(slope0.abs() >= floor && slope1.abs() >= floor) || s0.abs() >= 1.0 || s1.abs() >= 1.0 {
        return Err(Error::Infeasible(format!(
            "roots s0 = {s0}, s1 = {s1} are not transversal (slopes {slope0:e}, {slope1:e})"
        )));
    }
    Ok(RootPair { s0, s1, slope0, slope1 })
}

/// Smallest `eta` such that the right root of `W(tau) - eps*tau + eta` is at
/// least `1 - h`, found by bisection over `eta ∈ (-W(0), -eps)`.
pub fn choose_eta(pot: &Potential, h: f64, epsilon: f64) -> Result<f64> {
    let w0 = pot.value(0.0);
    let target = 1.0 - h;
    // F(tau) > 0 on [0, 1-h] means the right root is past 1-h
    let reaches = |eta: f64| -> bool {
        const STEPS: usize = 2048;
        (0..=STEPS).all(|i| {
            let tau = target * i as f64 / STEPS as f64;
            pot.value(tau) - epsilon * tau + eta >= 0.0
        })
    };
    let (mut lo, mut hi) = (-w0, -epsilon);
    if !(lo < hi) {
        return Err(Error::Infeasible(format!(
            "epsilon = {epsilon} is not below W(0) = {w0}: no left root in (-1, 0)"
        )));
    }
    // strictly below -eps so that F(-1) = eps + eta < 0
    hi -= 1e-12 * epsilon.max(1e-300);
    if !reaches(hi) {
        return Err(Error::Infeasible(format!(
            "no eta < -epsilon keeps W(tau) - epsilon tau + eta >= 0 on [0, {target}]"
        )));
    }
    // a hair above the threshold so the right root clears 1 - h after rounding
    let cap = hi;
    let nudge = |eta: f64| (eta + 1e-12 * eta.abs().max(1e-3)).min(cap);
    if reaches(lo) {
        return Ok(nudge(lo));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if reaches(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(nudge(hi))
}

/// Super-solution profile: the increasing solution of
/// `p d/dt((U')^(p-1)) = W'(U) - eps`, `U(0) = 0`, on `[a, b]` with
/// `U'(a) = U'(b) = 0`, sampled at `samples` uniform points of `[a, b]`.
pub fn supersolution_profile(h: f64, p: f64, pot: &Potential, epsilon: f64) -> Result<Profile1D> {
    supersolution_profile_sampled(h, p, pot, epsilon, 2001)
}

pub fn supersolution_profile_sampled(
    h: f64,
    p: f64,
    pot: &Potential,
    epsilon: f64,
    samples: usize,
) -> Result<Profile1D> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::Parameter(format!("h must lie in (0, 1), got {h}")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Parameter(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(p > 1.0) {
        return Err(Error::Parameter(format!("p must exceed 1, got {p}")));
    }
    let eta = choose_eta(pot, h, epsilon)?;
    let roots = bracket_roots(pot, epsilon, eta)?;
    if roots.s1 < 1.0 - h {
        return Err(Error::Infeasible(format!(
            "right root {} below 1 - h = {}",
            roots.s1,
            1.0 - h
        )));
    }
    let inv_p = 1.0 / p;
    let first_integral = |s: f64| (pot.value(s.clamp(-1.0, 1.0)) - epsilon * s + eta).max(0.0);
    let phi = |s: f64| (first_integral(s) / (p - 1.0)).powf(-inv_p);
    // nodes clustered toward both roots
    let (s0, s1) = (roots.s0, roots.s1);
    let n_nodes = 48;
    let mut nodes: Vec<f64> = (0..=n_nodes)
        .map(|i| {
            let th = std::f64::consts::PI * i as f64 / n_nodes as f64;
            0.5 * (s0 + s1) - 0.5 * (s1 - s0) * th.cos()
        })
        .filter(|&s| s.abs() > 1e-9 * (s1 - s0))
        .collect();
    nodes[0] = s0;
    let last = nodes.len() - 1;
    nodes[last] = s1;
    let origin = nodes.partition_point(|&s| s < 0.0);
    nodes.insert(origin, 0.0);
    let table = InverseTable::build(&phi, nodes, origin, inv_p, inv_p)?;
    let (a, b) = (table.t_min(), table.t_max());
    let samples = samples.max(8);
    let mut t = Vec::with_capacity(samples);
    let mut u = Vec::with_capacity(samples);
    let mut du = Vec::with_capacity(samples);
    for i in 0..samples {
        let ti = a + (b - a) * i as f64 / (samples - 1) as f64;
        let s = if i == 0 {
            s0
        } else if i == samples - 1 {
            s1
        } else {
            table.solve(ti)?
        };
        let slope = if i == 0 || i == samples - 1 {
            0.0
        } else {
            (first_integral(s) / (p - 1.0)).powf(inv_p)
        };
        t.push(ti);
        u.push(s);
        du.push(slope);
    }
    let meta = ProfileMeta {
        p,
        m: pot.m(),
        epsilon,
        eta,
        s0,
        s1,
        a: Some(a),
        b: Some(b),
    };
    Ok(Profile1D::new(ProfileKind::Supersolution, t, u, du, meta))
}

/// Smallest radius `r` for which the radialized super-solution satisfies
/// `-eps + p(n-1)(U')^(p-1)/(r+t) < 0` on all of `[a, b]`.
pub fn supersolution_min_radius(prof: &Profile1D, n: usize) -> Result<f64> {
    if prof.kind != ProfileKind::Supersolution {
        return Err(Error::Parameter("radius heuristic needs a supersolution profile".into()));
    }
    let p = prof.meta.p;
    let a = prof.meta.a.unwrap_or(0.0);
    let flux_max = prof.du.iter().map(|d| d.powf(p - 1.0)).fold(0.0, f64::max);
    Ok(p * (n as f64 - 1.0) * flux_max / prof.meta.epsilon - a)
}

/// Radial field `v(x) = U(|x - center| - r)` with the profile's end values
/// continued outside its sampled range.
pub fn radial_field(grid: &Grid, center: &[f64], prof: &Profile1D, r: f64) -> Result<Field> {
    if center.len() != grid.dim() {
        return Err(Error::Parameter("center dimension does not match grid".into()));
    }
    let values = (0..grid.len())
        .map(|i| {
            let d = grid.distance(i, center);
            prof.eval(d - r).0.clamp(-1.0, 1.0)
        })
        .collect();
    Field::from_values(grid.clone(), values)
}

/// Least-squares slope of `log(1 + U)` against `log(1 - t)` over the window,
/// negated.
pub fn fit_decay_exponent(prof: &Profile1D, window: (f64, f64)) -> Result<f64> {
    let (lo, hi) = (window.0.min(window.1), window.0.max(window.1));
    if hi >= 0.0 {
        return Err(Error::Fit(format!("decay window must lie in t < 0, got [{lo}, {hi}]")));
    }
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (&t, &u) in prof.t.iter().zip(&prof.u) {
        if t >= lo && t <= hi {
            let lift = 1.0 + u;
            if !(lift > 0.0) {
                return Err(Error::Fit(format!("1 + U vanishes at t = {t}")));
            }
            x.push((1.0 - t).ln());
            y.push(lift.ln());
        }
    }
    if x.len() < 8 {
        return Err(Error::Fit(format!(
            "decay fit needs >= 8 samples in the window, found {}",
            x.len()
        )));
    }
    Ok(-fit_line(&x, &y)?.slope)
}

/// Logarithmically spaced points from `-t_far` to `-t_near` (both positive).
pub fn log_spaced_negative(t_near: f64, t_far: f64, count: usize) -> Vec<f64> {
    let (l0, l1) = (t_far.ln(), t_near.ln());
    (0..count)
        .map(|i| -(l0 + (l1 - l0) * i as f64 / (count - 1).max(1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparison_examples() {
        assert_eq!(comparison_profile(2.0, 4.0, 0.0).unwrap().0, 0.0);
        assert!((comparison_profile(2.0, 4.0, -1.0).unwrap().0 + 0.5).abs() < 1e-15);
        let (u, du) = comparison_profile(2.0, 4.0, -3.0).unwrap();
        assert!((u + 0.75).abs() < 1e-15);
        assert!((du - 0.0625).abs() < 1e-15);
        assert!(comparison_profile(2.0, 2.0, -1.0).is_err());
        assert_eq!(comparison_profile(2.0, 4.0, 0.5).unwrap(), (0.5, 1.0));
        assert_eq!(comparison_profile(2.0, 4.0, 3.0).unwrap(), (1.0, 0.0));
    }

    #[test]
    fn tail_energy_vanishes_far_out() {
        let pot = Potential::model(4.0).unwrap();
        let e = tail_energy(2.0, 4.0, 1e12, &pot).unwrap();
        assert!(e < 1e-30);
        assert!(tail_energy(2.0, 4.0, 0.5, &pot).is_err());
        assert!(tail_energy(2.0, 2.0, 2.0, &pot).is_err());
    }

    #[test]
    fn tail_energy_matches_brute_trapezoid() {
        // trapezoid on [-1e6, -10] with 1e7 nodes
        let pot = Potential::model(4.0).unwrap();
        let f = |t: f64| {
            let (u, du) = comparison_value(2.0, 4.0, t);
            du * du + (1.0 - u * u).powi(4)
        };
        let nodes = 10_000_000usize;
        let (a, b) = (-1e6, -10.0);
        let step = (b - a) / (nodes - 1) as f64;
        let mut acc = 0.5 * (f(a) + f(b));
        for i in 1..nodes - 1 {
            acc += f(a + step * i as f64);
        }
        let oracle = acc * step;
        let e = tail_energy(2.0, 4.0, 10.0, &pot).unwrap();
        assert!(((e - oracle) / oracle).abs() <= 1e-4, "{e} vs {oracle}");
    }

    /// Closed form for p = 2, m = 4: the integrand in `s = 1 - t` is
    /// `17 s^-4 - 32 s^-5 + 24 s^-6 - 8 s^-7 + s^-8`.
    fn tail_closed_form_2_4(big_t: f64) -> f64 {
        let s = 1.0 + big_t;
        17.0 / (3.0 * s.powi(3)) - 8.0 / s.powi(4) + 24.0 / (5.0 * s.powi(5)) - 4.0 / (3.0 * s.powi(6))
            + 1.0 / (7.0 * s.powi(7))
    }

    #[test]
    fn tail_energy_matches_closed_form() {
        let pot = Potential::model(4.0).unwrap();
        for t in [1.0, 3.0, 10.0, 100.0, 1e4] {
            let e = tail_energy(2.0, 4.0, t, &pot).unwrap();
            let exact = tail_closed_form_2_4(t);
            assert!((e / exact - 1.0).abs() < 1e-9, "T = {t}: {e} vs {exact}");
        }
    }

    #[test]
    fn tail_energy_halving_ratio() {
        let pot = Potential::model(4.0).unwrap();
        for t in [16.0, 64.0, 256.0] {
            let r = tail_energy(2.0, 4.0, 2.0 * t, &pot).unwrap() / tail_energy(2.0, 4.0, t, &pot).unwrap();
            let exact = tail_closed_form_2_4(2.0 * t) / tail_closed_form_2_4(t);
            assert!((r - exact).abs() < 1e-9);
            // the (1 - t) shift keeps T = 16 about 14% above 1/8; the power law is reached from T = 64 on
            if t >= 64.0 {
                assert!((r / 0.125 - 1.0).abs() < 0.05, "T = {t}: ratio {r}");
            }
        }
    }

    #[test]
    fn heteroclinic_is_tanh_for_classical_case() {
        let pot = Potential::model(2.0).unwrap();
        let grid: Vec<f64> = (0..=200).map(|i| -5.0 + 0.05 * i as f64).collect();
        let prof = heteroclinic_profile(2.0, &pot, &grid).unwrap();
        let err = grid
            .iter()
            .zip(&prof.u)
            .map(|(t, u)| (u - t.tanh()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "sup error {err}");
        assert!(prof.u[100].abs() < 1e-15);
        let at_one = prof.eval(1.0).0;
        assert!((at_one - 0.761594).abs() < 1e-6);
        assert!(prof.meta.a.is_none() && prof.meta.b.is_none());
    }

    #[test]
    fn heteroclinic_equipartition_and_monotonicity() {
        let pot = Potential::model(3.0).unwrap();
        let grid: Vec<f64> = (0..=400).map(|i| -20.0 + 0.1 * i as f64).collect();
        let prof = heteroclinic_profile(2.0, &pot, &grid).unwrap();
        let wmax = 1.0;
        for (u, du) in prof.u.iter().zip(&prof.du) {
            let w = pot.eval(*u).unwrap();
            assert!(((2.0 - 1.0) * du.powi(2) - w).abs() <= 1e-8 * wmax);
            assert!(*du >= 0.0);
        }
        assert!(prof.u.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn heteroclinic_finite_ends_when_m_below_p() {
        let pot = Potential::model(1.5).unwrap();
        let grid: Vec<f64> = (0..=200).map(|i| -10.0 + 0.1 * i as f64).collect();
        let prof = heteroclinic_profile(3.0, &pot, &grid).unwrap();
        let (a, b) = (prof.meta.a.unwrap(), prof.meta.b.unwrap());
        assert!(a < 0.0 && b > 0.0 && a.is_finite());
        // symmetric well: symmetric ends
        assert!((a + b).abs() < 1e-8);
        let (u_far, du_far) = prof.eval(b + 1.0);
        assert!(u_far == 1.0 && du_far == 0.0);
    }

    #[test]
    fn heteroclinic_decay_exponents() {
        let pot4 = Potential::model(4.0).unwrap();
        let grid = log_spaced_negative(10.0, 1e3, 200);
        let prof = heteroclinic_profile(2.0, &pot4, &grid).unwrap();
        let e = fit_decay_exponent(&prof, (-1e3, -10.0)).unwrap();
        assert!((e - 1.0).abs() < 0.05, "m = 4 exponent {e}");

        let pot3 = Potential::model(3.0).unwrap();
        let grid = log_spaced_negative(100.0, 1e3, 100);
        let prof = heteroclinic_profile(2.0, &pot3, &grid).unwrap();
        let e = fit_decay_exponent(&prof, (-1e3, -1e2)).unwrap();
        assert!((e - 2.0).abs() < 0.1, "m = 3 exponent {e}");
    }

    #[test]
    fn comparison_decay_is_exact() {
        let grid = log_spaced_negative(10.0, 1e3, 64);
        for (p, m, k) in [(2.0, 4.0, 1.0), (3.0, 5.0, 1.5), (2.0, 3.0, 2.0)] {
            let prof = comparison_samples(p, m, &grid).unwrap();
            let e = fit_decay_exponent(&prof, (-1e3, -10.0)).unwrap();
            assert!((e - k).abs() < 1e-6);
        }
        let prof = comparison_samples(2.0, 4.0, &grid[..5]).unwrap();
        assert!(fit_decay_exponent(&prof, (-1e3, -10.0)).is_err());
        assert!(fit_decay_exponent(&prof, (-1.0, 1.0)).is_err());
    }

    #[test]
    fn supersolution_structure() {
        let pot = Potential::model(2.0).unwrap();
        let prof = supersolution_profile(0.2, 2.0, &pot, 0.05).unwrap();
        let meta = prof.meta;
        assert!(meta.s0 < 0.0 && 0.8 <= meta.s1 && meta.s1 < 1.0);
        let (a, b) = (meta.a.unwrap(), meta.b.unwrap());
        assert!(a.is_finite() && b.is_finite() && a < 0.0 && b > 0.0);
        assert_eq!(prof.du[0], 0.0);
        assert_eq!(*prof.du.last().unwrap(), 0.0);
        assert!(prof.du.iter().all(|&d| d >= 0.0));
        // integrated first relation
        for (u, du) in prof.u.iter().zip(&prof.du) {
            let lhs = du.powi(2) - pot.eval(*u).unwrap() + meta.epsilon * u;
            assert!((lhs - meta.eta).abs() <= 1e-6 * meta.eta.abs());
        }
        // U(0) = 0
        assert!(prof.eval(0.0).0.abs() < 1e-10);
    }

    #[test]
    fn supersolution_ode_residual() {
        let pot = Potential::model(2.0).unwrap();
        let prof = supersolution_profile(0.2, 2.0, &pot, 0.05).unwrap();
        let p = 2.0;
        let n = prof.len();
        for i in 5..n - 5 {
            let (t0, t1) = (prof.t[i - 1], prof.t[i + 1]);
            let flux = |j: usize| prof.du[j].powf(p - 1.0);
            let lhs = p * (flux(i + 1) - flux(i - 1)) / (t1 - t0);
            let rhs = pot.slope(prof.u[i]) - prof.meta.epsilon;
            assert!((lhs - rhs).abs() < 1e-3, "i = {i}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn supersolution_roots_match_bisection_oracle() {
        let (h, eps) = (0.3, 0.1);
        let pot = Potential::model(2.0).unwrap();
        let prof = supersolution_profile(h, 2.0, &pot, eps).unwrap();
        let w = |t: f64| (1.0 - t * t).powi(2);
        // smallest eta with the right root at 1 - h
        let eta = eps * (1.0 - h) - w(1.0 - h);
        let g = |t: f64| w(t) - eps * t + eta;
        let bis = |mut lo: f64, mut hi: f64| {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if g(mid).signum() == g(lo).signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let s0 = bis(-0.999, -1e-3);
        assert!((prof.meta.eta - eta).abs() < 1e-8);
        assert!((prof.meta.s0 - s0).abs() < 1e-8);
        assert!((prof.meta.s1 - (1.0 - h)).abs() < 1e-8);
    }

    #[test]
    fn vanishing_perturbation_is_rejected() {
        let pot = Potential::model(4.0).unwrap();
        assert!(matches!(bracket_roots(&pot, 0.0, 0.0), Err(Error::Infeasible(_))));
        assert!(matches!(
            supersolution_profile(0.2, 2.0, &pot, 0.0),
            Err(Error::Parameter(_))
        ));
        // epsilon above W(0) leaves no room for a left root
        assert!(matches!(
            supersolution_profile(0.2, 2.0, &pot, 2.0),
            Err(Error::Infeasible(_))
        ));
    }
}
