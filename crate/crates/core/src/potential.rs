//! Double-well potentials `W` and the structural parameters of the energy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::Hermite;

/// Dimension, exponents and structural constants of `J(v) = ∫ |∇v|^p + W(v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams {
    pub n: usize,
    pub p: f64,
    pub m: f64,
    #[serde(default = "unit")]
    pub lambda: f64,
    #[serde(rename = "Lambda", default = "unit")]
    pub big_lambda: f64,
    #[serde(rename = "Q", default = "unit")]
    pub q_factor: f64,
    /// Gradient regularization; `None` picks the default for `p`.
    pub eps_reg: Option<f64>,
}

fn unit() -> f64 {
    1.0
}

impl EnergyParams {
    pub fn new(n: usize, p: f64, m: f64) -> Result<Self> {
        let params = Self {
            n,
            p,
            m,
            lambda: 1.0,
            big_lambda: 1.0,
            q_factor: 1.0,
            eps_reg: None,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.n) {
            return Err(Error::Parameter(format!("dimension must be 1..=3, got {}", self.n)));
        }
        if !(self.p > 1.0) || !self.p.is_finite() {
            return Err(Error::Parameter(format!("p must exceed 1, got {}", self.p)));
        }
        if !(self.m > 0.0) || !self.m.is_finite() {
            return Err(Error::Parameter(format!("m must be positive, got {}", self.m)));
        }
        if !(self.lambda > 0.0) || self.lambda > self.big_lambda {
            return Err(Error::Parameter(format!(
                "need 0 < lambda <= Lambda, got {} and {}",
                self.lambda, self.big_lambda
            )));
        }
        if !(self.q_factor >= 1.0) {
            return Err(Error::Parameter(format!("Q must be >= 1, got {}", self.q_factor)));
        }
        if let Some(e) = self.eps_reg {
            if !(e >= 0.0) {
                return Err(Error::Parameter(format!("eps_reg must be >= 0, got {e}")));
            }
        }
        Ok(())
    }

    /// `m > p`: the slowly decaying regime the density audits are about.
    pub fn is_degenerate(&self) -> bool {
        self.m > self.p
    }

    /// Fails unless `m > p`.
    pub fn require_degenerate(&self) -> Result<()> {
        if self.is_degenerate() {
            Ok(())
        } else {
            Err(Error::Parameter(format!(
                "this audit requires m > p (got p = {}, m = {})",
                self.p, self.m
            )))
        }
    }

    pub fn eps_reg(&self) -> f64 {
        self.eps_reg
            .unwrap_or(if self.p >= 2.0 { 1e-8 } else { 1e-4 })
    }

    /// `q = pm/(m-p)`, the decay exponent of the annular weights.
    pub fn weight_exponent(&self) -> Result<f64> {
        weight_exponent(self.p, self.m)
    }

    /// `gamma = pm/(m-p) - 1`, the tail-energy exponent.
    pub fn gamma(&self) -> Result<f64> {
        Ok(weight_exponent(self.p, self.m)? - 1.0)
    }
}

pub fn weight_exponent(p: f64, m: f64) -> Result<f64> {
    if !(m > p && p > 1.0) {
        return Err(Error::Parameter(format!("need m > p > 1, got p = {p}, m = {m}")));
    }
    Ok(p * m / (m - p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialKind {
    Model,
    Custom,
}

#[derive(Debug, Clone)]
enum Repr {
    Model,
    Table(Hermite),
}

/// A double well on `[-1, 1]` vanishing at `±1` to order `m`.
#[derive(Debug, Clone)]
pub struct Potential {
    m: f64,
    repr: Repr,
}

/// `(1 - tau^2)` computed as `(1 - tau)(1 + tau)` to keep digits near the wells.
#[inline]
fn one_minus_sq(tau: f64) -> f64 {
    (1.0 - tau) * (1.0 + tau)
}

#[inline]
fn ipow(x: f64, m: f64) -> f64 {
    if m.fract() == 0.0 && m.abs() < 64.0 {
        x.powi(m as i32)
    } else {
        x.powf(m)
    }
}

impl Potential {
    /// `W(tau) = (1 - tau^2)^m`.
    pub fn model(m: f64) -> Result<Self> {
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::Parameter(format!("m must be positive, got {m}")));
        }
        Ok(Self { m, repr: Repr::Model })
    }

    /// Tabulated potential from `(tau, W, W')` rows, interpolated by cubic Hermite
    /// splines. The table must span `[-1, 1]` with `W(±1) = 0`.
    pub fn from_table(m: f64, tau: Vec<f64>, w: Vec<f64>, dw: Vec<f64>) -> Result<Self> {
        if !(m > 0.0) {
            return Err(Error::Parameter(format!("m must be positive, got {m}")));
        }
        let interp = Hermite::new(tau, w.clone(), dw)?;
        if (interp.x_min() + 1.0).abs() > 1e-12 || (interp.x_max() - 1.0).abs() > 1e-12 {
            return Err(Error::Parameter("potential table must span [-1, 1]".into()));
        }
        if w[0].abs() > 1e-14 || w[w.len() - 1].abs() > 1e-14 {
            return Err(Error::Parameter("potential table must vanish at ±1".into()));
        }
        if w[1..w.len() - 1].iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Parameter("potential table must be positive inside (-1, 1)".into()));
        }
        Ok(Self { m, repr: Repr::Table(interp) })
    }

    /// Samples closures into a table on a grid graded toward the wells.
    pub fn tabulate<F, G>(m: f64, nodes: usize, w: F, dw: G) -> Result<Self>
    where
        F: Fn(f64) -> f64,
        G: Fn(f64) -> f64,
    {
        let nodes = nodes.max(3);
        let tau: Vec<f64> = (0..nodes)
            .map(|i| -(std::f64::consts::PI * i as f64 / (nodes - 1) as f64).cos())
            .map(|t| t.clamp(-1.0, 1.0))
            .collect();
        let mut wv: Vec<f64> = tau.iter().map(|&t| w(t)).collect();
        wv[0] = 0.0;
        wv[nodes - 1] = 0.0;
        let dwv = tau.iter().map(|&t| dw(t)).collect();
        Self::from_table(m, tau, wv, dwv)
    }

    /// Reads a CSV with header `tau,W,dW`.
    pub fn from_csv(m: f64, path: &std::path::Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let (mut tau, mut w, mut dw) = (Vec::new(), Vec::new(), Vec::new());
        for rec in rdr.records() {
            let rec = rec?;
            let get = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::Validation(format!("bad potential table row: {rec:?}")))
            };
            tau.push(get(0)?);
            w.push(get(1)?);
            dw.push(get(2)?);
        }
        Self::from_table(m, tau, w, dw)
    }

    pub fn kind(&self) -> PotentialKind {
        match self.repr {
            Repr::Model => PotentialKind::Model,
            Repr::Table(_) => PotentialKind::Custom,
        }
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    /// `W(tau)` for `|tau| <= 1`.
    pub fn eval(&self, tau: f64) -> Result<f64> {
        if !(tau.abs() <= 1.0) {
            return Err(Error::Domain(format!("W is defined on [-1, 1], got {tau}")));
        }
        Ok(self.value(tau))
    }

    /// `W'(tau)` for `|tau| < 1`.
    pub fn deriv(&self, tau: f64) -> Result<f64> {
        if !(tau.abs() < 1.0) {
            return Err(Error::Domain(format!("W' is taken on (-1, 1), got {tau}")));
        }
        Ok(self.slope(tau))
    }

    /// `W'(tau)` on the closed interval, with the continuous extension at `±1`.
    /// Requires `m >= 1` so that the extension is finite.
    pub fn deriv_extended(&self, tau: f64) -> Result<f64> {
        if !(tau.abs() <= 1.0) {
            return Err(Error::Domain(format!("W' is taken on [-1, 1], got {tau}")));
        }
        if tau.abs() < 1.0 {
            return Ok(self.slope(tau));
        }
        match self.repr {
            Repr::Model if self.m > 1.0 => Ok(0.0),
            Repr::Model if self.m == 1.0 => Ok(-2.0 * tau),
            Repr::Model => Err(Error::Domain(format!(
                "W' is unbounded at the wells for m = {} < 1",
                self.m
            ))),
            Repr::Table(ref h) => Ok(h.eval(tau).1),
        }
    }

    /// Unchecked value; callers keep `tau` in `[-1, 1]`.
    #[inline]
    pub(crate) fn value(&self, tau: f64) -> f64 {
        match self.repr {
            Repr::Model => ipow(one_minus_sq(tau).max(0.0), self.m),
            Repr::Table(ref h) => h.eval(tau).0.max(0.0),
        }
    }

    /// `W(-1 + y)` for small `y >= 0`, without the cancellation in `-1 + y`.
    #[inline]
    pub(crate) fn value_near_minus_one(&self, y: f64) -> f64 {
        match self.repr {
            Repr::Model => ipow(((2.0 - y) * y).max(0.0), self.m),
            Repr::Table(ref h) => h.eval(-1.0 + y).0.max(0.0),
        }
    }

    /// Unchecked derivative with the extension to the wells (0 for `m > 1`).
    #[inline]
    pub(crate) fn slope(&self, tau: f64) -> f64 {
        match self.repr {
            Repr::Model => {
                let base = one_minus_sq(tau);
                if base <= 0.0 {
                    return if self.m > 1.0 { 0.0 } else { -2.0 * self.m * tau };
                }
                -2.0 * self.m * tau * ipow(base, self.m - 1.0)
            }
            Repr::Table(ref h) => h.eval(tau).1,
        }
    }
}

/// Extremes of one admissibility ratio over the sample grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioRange {
    pub min: f64,
    pub argmin: f64,
    pub max: f64,
    pub argmax: f64,
}

impl RatioRange {
    fn from_samples(iter: impl Iterator<Item = (f64, f64)>) -> Self {
        let mut r = RatioRange {
            min: f64::INFINITY,
            argmin: f64::NAN,
            max: f64::NEG_INFINITY,
            argmax: f64::NAN,
        };
        for (tau, v) in iter {
            if v < r.min {
                r.min = v;
                r.argmin = tau;
            }
            if v > r.max {
                r.max = v;
                r.argmax = tau;
            }
        }
        r
    }

    fn within(&self, lo: f64, hi: f64) -> bool {
        self.min >= lo && self.max <= hi
    }
}

/// Outcome of [`check_admissible`]. The value condition compares `W/(1-tau^2)^m`
/// with `(lambda, Lambda)`; the slope condition `-W'/((1-tau^2)^(m-1) sgn tau)` on
/// `1/2 < |tau| < 1` is checked against its own pair when one is supplied, and
/// otherwise only has to be bounded away from 0 and infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub value_ratio: RatioRange,
    pub slope_ratio: RatioRange,
    pub value_bounds: (f64, f64),
    pub slope_bounds: Option<(f64, f64)>,
    pub value_pass: bool,
    pub slope_pass: bool,
    pub pass: bool,
}

/// Checks the two structural conditions on a uniform grid of `samples` interior points.
pub fn check_admissible(
    pot: &Potential,
    params: &EnergyParams,
    samples: usize,
) -> Result<AdmissibilityReport> {
    check_admissible_with(pot, (params.lambda, params.big_lambda), None, samples)
}

pub fn check_admissible_with(
    pot: &Potential,
    value_bounds: (f64, f64),
    slope_bounds: Option<(f64, f64)>,
    samples: usize,
) -> Result<AdmissibilityReport> {
    if samples < 2 {
        return Err(Error::Parameter("admissibility check needs >= 2 samples".into()));
    }
    let m = pot.m();
    let taus: Vec<f64> = (1..=samples)
        .map(|i| -1.0 + 2.0 * i as f64 / (samples + 1) as f64)
        .collect();
    let value_ratio = RatioRange::from_samples(
        taus.iter()
            .map(|&t| (t, pot.value(t) / ipow(one_minus_sq(t), m))),
    );
    let slope_ratio = RatioRange::from_samples(
        taus.iter()
            .filter(|t| t.abs() > 0.5)
            .map(|&t| (t, -pot.slope(t) / (ipow(one_minus_sq(t), m - 1.0) * t.signum()))),
    );
    let value_pass = value_ratio.within(value_bounds.0, value_bounds.1);
    let slope_pass = match slope_bounds {
        Some((lo, hi)) => slope_ratio.within(lo, hi),
        None => slope_ratio.min > 0.0 && slope_ratio.max.is_finite(),
    };
    Ok(AdmissibilityReport {
        value_ratio,
        slope_ratio,
        value_bounds,
        slope_bounds,
        value_pass,
        slope_pass,
        pass: value_pass && slope_pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn model_values() {
        assert_eq!(Potential::model(2.0).unwrap().eval(0.0).unwrap(), 1.0);
        assert_eq!(Potential::model(4.0).unwrap().eval(1.0).unwrap(), 0.0);
        let w = Potential::model(3.0).unwrap().eval(0.5).unwrap();
        assert!((w - 0.421875).abs() < 1e-15);
        assert!(matches!(
            Potential::model(2.0).unwrap().eval(1.5),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn model_derivative_values() {
        let w2 = Potential::model(2.0).unwrap();
        assert_eq!(w2.deriv(0.0).unwrap(), 0.0);
        assert!((w2.deriv(0.5).unwrap() + 1.5).abs() < 1e-14);
        let w4 = Potential::model(4.0).unwrap();
        assert!((w4.deriv(-0.5).unwrap() - 1.6875).abs() < 1e-14);
        assert!(w4.deriv(1.0).is_err());
        assert_eq!(w4.deriv_extended(1.0).unwrap(), 0.0);
        assert!(Potential::model(0.5).unwrap().deriv_extended(-1.0).is_err());
    }

    #[test]
    fn admissible_model_with_single_value_pair() {
        let pot = Potential::model(3.0).unwrap();
        let rep = check_admissible_with(&pot, (1.0, 1.0), None, 1000).unwrap();
        assert!(rep.pass);
        assert!((rep.value_ratio.min - 1.0).abs() < 1e-12);
        assert!((rep.value_ratio.max - 1.0).abs() < 1e-12);
        // 2m|tau| on (1/2, 1)
        assert!(rep.slope_ratio.max <= 6.0 && rep.slope_ratio.min >= 3.0);
    }

    #[test]
    fn admissible_scaled_model() {
        let pot = Potential::tabulate(
            2.0,
            4001,
            |t| 2.0 * (1.0 - t * t).powi(2),
            |t| -8.0 * t * (1.0 - t * t),
        )
        .unwrap();
        let rep = check_admissible_with(&pot, (1.0, 3.0), None, 1000).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!((rep.value_ratio.min - 2.0).abs() < 1e-4);
    }

    #[test]
    fn admissible_sum_of_powers_matches_dense_oracle() {
        let w = |t: f64| (1.0 - t * t).powi(2) + (1.0 - t * t).powi(5);
        let dw = |t: f64| -4.0 * t * (1.0 - t * t) - 10.0 * t * (1.0 - t * t).powi(4);
        let pot = Potential::tabulate(2.0, 4001, w, dw).unwrap();
        let rep = check_admissible_with(&pot, (1.0, 2.0), None, 1000).unwrap();
        assert!(rep.pass, "{rep:?}");
        // dense oracle straight from the closed forms
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut slo, mut shi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 1..=100_000 {
            let t = -1.0 + 2.0 * i as f64 / 100_001.0;
            let r = w(t) / (1.0 - t * t).powi(2);
            lo = lo.min(r);
            hi = hi.max(r);
            if t.abs() > 0.5 {
                let s = -dw(t) / ((1.0 - t * t) * t.signum());
                slo = slo.min(s);
                shi = shi.max(s);
            }
        }
        assert!(lo >= 1.0 && hi <= 2.0);
        assert!((rep.value_ratio.min - lo).abs() < 1e-3);
        assert!((rep.value_ratio.max - hi).abs() < 1e-3);
        assert!(rep.slope_ratio.min >= slo - 1e-3 && rep.slope_ratio.max <= shi + 1e-3);
    }

    #[test]
    fn slope_pair_is_enforced_when_given() {
        let pot = Potential::model(3.0).unwrap();
        let rep = check_admissible_with(&pot, (1.0, 1.0), Some((1.0, 1.0)), 1000).unwrap();
        assert!(rep.value_pass && !rep.slope_pass && !rep.pass);
    }

    #[test]
    fn model_passes_shared_pair_for_several_m() {
        for m in [2.5, 3.0, 4.0, 6.0] {
            let pot = Potential::model(m).unwrap();
            let lo = 1f64.min(2.0 * m) * (1.0 - 1e-9);
            let hi = 1f64.max(2.0 * m) * (1.0 + 1e-9);
            let rep = check_admissible_with(&pot, (lo, hi), Some((lo, hi)), 1000).unwrap();
            assert!(rep.pass, "m = {m}: {rep:?}");
        }
    }

    #[test]
    fn params_validation() {
        assert!(EnergyParams::new(2, 2.0, 4.0).is_ok());
        assert!(EnergyParams::new(4, 2.0, 4.0).is_err());
        assert!(EnergyParams::new(2, 1.0, 4.0).is_err());
        let p = EnergyParams::new(2, 2.0, 2.0).unwrap();
        assert!(!p.is_degenerate());
        assert!(p.require_degenerate().is_err());
        assert!((EnergyParams::new(2, 2.0, 4.0).unwrap().gamma().unwrap() - 3.0).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn model_is_even(m in 0.5f64..8.0, tau in -1.0f64..1.0) {
            let pot = Potential::model(m).unwrap();
            prop_assert_eq!(pot.eval(tau).unwrap(), pot.eval(-tau).unwrap());
        }

        #[test]
        fn derivative_matches_centered_difference(m in 1.5f64..8.0, tau in -0.95f64..0.95) {
            let pot = Potential::model(m).unwrap();
            let step = 1e-6;
            let fd = (pot.eval(tau + step).unwrap() - pot.eval(tau - step).unwrap()) / (2.0 * step);
            let d = pot.deriv(tau).unwrap();
            let scale = d.abs().max(1.0);
            prop_assert!((fd - d).abs() / scale <= 1e-8, "fd {} vs {}", fd, d);
        }
    }
}
