//! Piecewise cubic Hermite interpolation on strictly increasing knots.

use crate::error::{Error, Result};

/// Cubic Hermite interpolant through `(x_i, y_i)` with prescribed slopes.
#[derive(Debug, Clone)]
pub struct Hermite {
    x: Vec<f64>,
    y: Vec<f64>,
    dy: Vec<f64>,
}

impl Hermite {
    pub fn new(x: Vec<f64>, y: Vec<f64>, dy: Vec<f64>) -> Result<Self> {
        if x.len() < 2 || x.len() != y.len() || x.len() != dy.len() {
            return Err(Error::Parameter(format!(
                "hermite table needs >= 2 rows of equal length (got {}, {}, {})",
                x.len(),
                y.len(),
                dy.len()
            )));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Parameter("hermite knots must be strictly increasing".into()));
        }
        Ok(Self { x, y, dy })
    }

    /// Builds a shape-preserving interpolant (Fritsch–Carlson slopes) from values only.
    pub fn monotone(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || n != y.len() {
            return Err(Error::Parameter("monotone table needs >= 2 rows".into()));
        }
        let secants: Vec<f64> = (0..n - 1)
            .map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i]))
            .collect();
        let mut dy = vec![0.0; n];
        dy[0] = secants[0];
        dy[n - 1] = secants[n - 2];
        for i in 1..n - 1 {
            let (a, b) = (secants[i - 1], secants[i]);
            if a * b <= 0.0 {
                dy[i] = 0.0;
            } else {
                let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
                let w0 = 2.0 * h1 + h0;
                let w1 = h1 + 2.0 * h0;
                dy[i] = (w0 + w1) / (w0 / a + w1 / b);
            }
        }
        Self::new(x, y, dy)
    }

    pub fn x_min(&self) -> f64 {
        self.x[0]
    }

    pub fn x_max(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    fn segment(&self, t: f64) -> usize {
        match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            k if k >= self.x.len() => self.x.len() - 2,
            k => k - 1,
        }
    }

    /// Value and first derivative; clamps `t` to the knot range.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let t = t.clamp(self.x_min(), self.x_max());
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (y0, y1) = (self.y[i], self.y[i + 1]);
        let (m0, m1) = (self.dy[i] * h, self.dy[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let value = h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1;
        let d00 = 6.0 * s2 - 6.0 * s;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = -6.0 * s2 + 6.0 * s;
        let d11 = 3.0 * s2 - 2.0 * s;
        let deriv = (d00 * y0 + d10 * m0 + d01 * y1 + d11 * m1) / h;
        (value, deriv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_cubics_exactly() {
        let f = |x: f64| x * x * x - 2.0 * x + 1.0;
        let df = |x: f64| 3.0 * x * x - 2.0;
        let x: Vec<f64> = (0..6).map(|i| -1.0 + 0.4 * i as f64).collect();
        let h = Hermite::new(
            x.clone(),
            x.iter().map(|&v| f(v)).collect(),
            x.iter().map(|&v| df(v)).collect(),
        )
        .unwrap();
        for k in 0..50 {
            let t = -1.0 + 2.0 * k as f64 / 49.0;
            let (v, d) = h.eval(t);
            assert!((v - f(t)).abs() < 1e-12);
            assert!((d - df(t)).abs() < 1e-10);
        }
    }

    #[test]
    fn monotone_data_stays_monotone() {
        let x = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let y = vec![0.0, 0.1, 0.1, 5.0, 5.1];
        let h = Hermite::monotone(x, y).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=400 {
            let (v, _) = h.eval(k as f64 / 100.0);
            assert!(v >= prev - 1e-14);
            prev = v;
        }
    }

    #[test]
    fn rejects_unsorted_knots() {
        assert!(Hermite::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 0.0]).is_err());
    }
}
