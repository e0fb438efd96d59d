//! Uniform lattices, grid functions and the discrete energy.
//!
//! Cells are indexed row-major (last axis fastest). Gradients are forward
//! differences; the last cell along an axis gets a zero difference, so
//! every lattice face is counted exactly once and the residual below is the
//! exact transpose of the energy's first variation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{EnergyParams, Potential};
use crate::stats::compensated_sum;

/// A uniform `n`-dimensional lattice of cell centers
/// `origin + h * index`, `index_a ∈ [0, shape_a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    shape: Vec<usize>,
    h: f64,
    origin: Vec<f64>,
    #[serde(skip)]
    strides: Vec<usize>,
}

impl Grid {
    pub fn new(shape: Vec<usize>, h: f64, origin: Vec<f64>) -> Result<Self> {
        if !(1..=3).contains(&shape.len()) {
            return Err(Error::Parameter(format!("grid dimension must be 1..=3, got {}", shape.len())));
        }
        if shape.iter().any(|&s| s < 4) {
            return Err(Error::Parameter(format!("every grid axis needs >= 4 cells, got {shape:?}")));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Parameter(format!("grid spacing must be positive, got {h}")));
        }
        if origin.len() != shape.len() {
            return Err(Error::Parameter("origin and shape dimensions differ".into()));
        }
        let mut strides = vec![1; shape.len()];
        for a in (0..shape.len() - 1).rev() {
            strides[a] = strides[a + 1] * shape[a + 1];
        }
        Ok(Self { shape, h, origin, strides })
    }

    /// Box `[-half_widths_a, half_widths_a]` with cell centers on both faces.
    pub fn centered_box(half_widths: &[f64], h: f64) -> Result<Self> {
        let shape: Vec<usize> = half_widths
            .iter()
            .map(|&l| (2.0 * l / h).round() as usize + 1)
            .collect();
        let origin = half_widths.iter().map(|&l| -l).collect();
        Self::new(shape, h, origin)
    }

    /// Re-derives strides after deserialization.
    pub fn rebuild(self) -> Result<Self> {
        Self::new(self.shape, self.h, self.origin)
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim() as i32)
    }

    #[inline]
    pub fn axis_index(&self, i: usize, axis: usize) -> usize {
        (i / self.strides[axis]) % self.shape[axis]
    }

    pub fn multi_index(&self, i: usize) -> Vec<usize> {
        (0..self.dim()).map(|a| self.axis_index(i, a)).collect()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    #[inline]
    pub fn coord(&self, i: usize, axis: usize) -> f64 {
        self.origin[axis] + self.h * self.axis_index(i, axis) as f64
    }

    pub fn coords(&self, i: usize) -> Vec<f64> {
        (0..self.dim()).map(|a| self.coord(i, a)).collect()
    }

    #[inline]
    pub fn distance(&self, i: usize, center: &[f64]) -> f64 {
        let mut d2 = 0.0;
        for (a, c) in center.iter().enumerate().take(self.dim()) {
            let dx = self.coord(i, a) - c;
            d2 += dx * dx;
        }
        d2.sqrt()
    }

    /// Extent of the box covered by the cells, `(lo, hi)` per axis.
    pub fn bounds(&self, axis: usize) -> (f64, f64) {
        let lo = self.origin[axis] - 0.5 * self.h;
        (lo, lo + self.h * self.shape[axis] as f64)
    }

    pub fn contains_ball(&self, center: &[f64], radius: f64) -> bool {
        let slack = 1e-9 * self.h;
        center.len() == self.dim()
            && (0..self.dim()).all(|a| {
                let (lo, hi) = self.bounds(a);
                center[a] - radius >= lo - slack && center[a] + radius <= hi + slack
            })
    }

    /// True when the cell lies on a face of the box.
    pub fn on_boundary(&self, i: usize) -> bool {
        (0..self.dim()).any(|a| {
            let k = self.axis_index(i, a);
            k == 0 || k + 1 == self.shape[a]
        })
    }

    /// Index of the cell whose center is closest to `x`.
    pub fn nearest_cell(&self, x: &[f64]) -> usize {
        let idx: Vec<usize> = (0..self.dim())
            .map(|a| {
                let k = ((x[a] - self.origin[a]) / self.h).round();
                k.clamp(0.0, (self.shape[a] - 1) as f64) as usize
            })
            .collect();
        self.flat_index(&idx)
    }
}

/// A grid function with values in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn constant(grid: Grid, value: f64) -> Result<Self> {
        let n = grid.len();
        Self::from_values(grid, vec![value; n])
    }

    /// Rejects values outside `[-1, 1]` (beyond rounding).
    pub fn from_values(grid: Grid, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Parameter(format!(
                "field has {} values for a grid of {} cells",
                values.len(),
                grid.len()
            )));
        }
        for v in values.iter_mut() {
            if !(v.abs() <= 1.0 + 1e-12) {
                return Err(Error::Domain(format!("field value {v} outside [-1, 1]")));
            }
            *v = v.clamp(-1.0, 1.0);
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at every cell center and clamps into `[-1, 1]`.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(grid: Grid, f: F) -> Self {
        let values = (0..grid.len())
            .map(|i| f(&grid.coords(i)).clamp(-1.0, 1.0))
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Applies `f` to the value buffer, then clamps back into `[-1, 1]`.
    pub fn update<F: FnOnce(&mut [f64])>(&mut self, f: F) {
        f(&mut self.values);
        for v in self.values.iter_mut() {
            *v = if v.is_nan() { 0.0 } else { v.clamp(-1.0, 1.0) };
        }
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Writes `x,u` (1-D) or `x,y,u` (2-D, blank line between rows) columns; 3-D
    /// fields are sliced through the middle of the last axis.
    pub fn write_slice_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        let g = &self.grid;
        match g.dim() {
            1 => {
                writeln!(out, "# x u")?;
                for i in 0..g.len() {
                    writeln!(out, "{:e} {:e}", g.coord(i, 0), self.values[i])?;
                }
            }
            _ => {
                let mid = if g.dim() == 3 { g.shape()[2] / 2 } else { 0 };
                writeln!(out, "# x y u")?;
                for ix in 0..g.shape()[0] {
                    for iy in 0..g.shape()[1] {
                        let mut idx = vec![ix, iy];
                        if g.dim() == 3 {
                            idx.push(mid);
                        }
                        let i = g.flat_index(&idx);
                        writeln!(out, "{:e} {:e} {:e}", g.coord(i, 0), g.coord(i, 1), self.values[i])?;
                    }
                    writeln!(out)?;
                }
            }
        }
        Ok(())
    }
}

/// A set of cells of a grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    mask: Vec<bool>,
}

impl Region {
    pub fn empty(grid: &Grid) -> Self {
        Self { mask: vec![false; grid.len()] }
    }

    pub fn full(grid: &Grid) -> Self {
        Self { mask: vec![true; grid.len()] }
    }

    pub fn from_mask(grid: &Grid, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != grid.len() {
            return Err(Error::Parameter("region mask does not conform to the grid".into()));
        }
        Ok(Self { mask })
    }

    pub fn from_predicate<F: Fn(usize) -> bool>(grid: &Grid, pred: F) -> Self {
        Self { mask: (0..grid.len()).map(pred).collect() }
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn contains(&self, i: usize) -> bool {
        self.mask[i]
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn volume(&self, grid: &Grid) -> f64 {
        self.count() as f64 * grid.cell_volume()
    }

    pub fn conforms(&self, grid: &Grid) -> bool {
        self.mask.len() == grid.len()
    }

    pub fn intersect(&self, other: &Region) -> Region {
        Region { mask: self.mask.iter().zip(&other.mask).map(|(a, b)| *a && *b).collect() }
    }

    pub fn union(&self, other: &Region) -> Region {
        Region { mask: self.mask.iter().zip(&other.mask).map(|(a, b)| *a || *b).collect() }
    }

    pub fn minus(&self, other: &Region) -> Region {
        Region { mask: self.mask.iter().zip(&other.mask).map(|(a, b)| *a && !*b).collect() }
    }

    pub fn is_subset_of(&self, other: &Region) -> bool {
        self.mask.iter().zip(&other.mask).all(|(a, b)| !*a || *b)
    }

    /// Adds the backward neighbours along every axis: exactly the cells whose energy
    /// density can change when values inside `self` change.
    pub fn with_backward_neighbours(&self, grid: &Grid) -> Region {
        let mut mask = self.mask.clone();
        for i in 0..grid.len() {
            if !self.mask[i] {
                continue;
            }
            for a in 0..grid.dim() {
                if grid.axis_index(i, a) > 0 {
                    mask[i - grid.strides()[a]] = true;
                }
            }
        }
        Region { mask }
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }
}

/// Cells whose centers satisfy `|x - center| <= radius`. The ball must fit in the box.
pub fn ball_mask(grid: &Grid, center: &[f64], radius: f64) -> Result<Region> {
    if center.len() != grid.dim() {
        return Err(Error::Parameter("ball center dimension does not match the grid".into()));
    }
    if !grid.contains_ball(center, radius) {
        return Err(Error::Geometry(format!(
            "ball of radius {radius} about {center:?} leaves the domain"
        )));
    }
    let tol = 1e-12 * grid.h();
    Ok(Region::from_predicate(grid, |i| grid.distance(i, center) <= radius + tol))
}

/// `B_outer \ B_inner` about `center`.
pub fn annulus_mask(grid: &Grid, center: &[f64], inner: f64, outer: f64) -> Result<Region> {
    let big = ball_mask(grid, center, outer)?;
    let tol = 1e-12 * grid.h();
    let small = Region::from_predicate(grid, |i| grid.distance(i, center) <= inner + tol);
    Ok(big.minus(&small))
}

#[derive(Debug, Clone, Copy)]
enum Pow {
    Two,
    Int(i32),
    Real(f64),
}

impl Pow {
    fn new(e: f64) -> Self {
        if e == 2.0 {
            Pow::Two
        } else if e.fract() == 0.0 && e.abs() < 64.0 {
            Pow::Int(e as i32)
        } else {
            Pow::Real(e)
        }
    }

    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Pow::Two => x * x,
            Pow::Int(k) => x.powi(k),
            Pow::Real(e) => x.powf(e),
        }
    }
}

/// Per-cell evaluation of the discrete energy and its first variation.
#[derive(Debug, Clone)]
pub struct EnergyKernel<'a> {
    grid: &'a Grid,
    pot: &'a Potential,
    p: f64,
    eps: f64,
    eps_p: f64,
    half_p: Pow,
    half_pm2: Pow,
}

impl<'a> EnergyKernel<'a> {
    pub fn new(grid: &'a Grid, params: &EnergyParams, pot: &'a Potential) -> Self {
        let p = params.p;
        let eps = params.eps_reg();
        Self {
            grid,
            pot,
            p,
            eps,
            eps_p: eps.powf(p),
            half_p: Pow::new(0.5 * p),
            half_pm2: Pow::new(0.5 * (p - 2.0)),
        }
    }

    /// Forward differences of `u` at cell `i` (zero past the last cell).
    #[inline]
    fn diffs(&self, u: &[f64], i: usize, out: &mut [f64; 3]) -> f64 {
        let g = self.grid;
        let inv_h = 1.0 / g.h();
        let mut s2 = 0.0;
        for a in 0..g.dim() {
            let d = if g.axis_index(i, a) + 1 < g.shape()[a] {
                (u[i + g.strides()[a]] - u[i]) * inv_h
            } else {
                0.0
            };
            out[a] = d;
            s2 += d * d;
        }
        s2
    }

    /// Energy density `(g_eps^p - eps^p) + W(u)` at every cell.
    pub fn densities(&self, u: &[f64]) -> Vec<f64> {
        let mut d = [0.0; 3];
        (0..u.len())
            .map(|i| {
                let s2 = self.diffs(u, i, &mut d);
                let e2 = s2 + self.eps * self.eps;
                (self.half_p.apply(e2) - self.eps_p) + self.pot.value(u[i])
            })
            .collect()
    }

    /// Gradient part `g_eps^p - eps^p` of the density at every cell.
    pub fn gradient_densities(&self, u: &[f64]) -> Vec<f64> {
        let mut d = [0.0; 3];
        (0..u.len())
            .map(|i| {
                let s2 = self.diffs(u, i, &mut d);
                self.half_p.apply(s2 + self.eps * self.eps) - self.eps_p
            })
            .collect()
    }

    /// Total energy `Σ density * h^n`.
    pub fn total(&self, u: &[f64]) -> f64 {
        compensated_sum(self.densities(u)) * self.grid.cell_volume()
    }

    /// `∂E/∂u_i / h^n = W'(u_i) + (Dᵀ φ)_i` with `φ = p g_eps^(p-2) D u`.
    pub fn variation(&self, u: &[f64]) -> Vec<f64> {
        let g = self.grid;
        let n = g.dim();
        let inv_h = 1.0 / g.h();
        let mut flux = vec![0.0; u.len() * n];
        let mut d = [0.0; 3];
        for i in 0..u.len() {
            let s2 = self.diffs(u, i, &mut d);
            let coef = self.p * self.half_pm2.apply(s2 + self.eps * self.eps);
            for a in 0..n {
                flux[i * n + a] = coef * d[a];
            }
        }
        (0..u.len())
            .map(|i| {
                let mut acc = self.pot.slope(u[i]);
                for a in 0..n {
                    acc -= flux[i * n + a] * inv_h;
                    if g.axis_index(i, a) > 0 {
                        acc += flux[(i - g.strides()[a]) * n + a] * inv_h;
                    }
                }
                acc
            })
            .collect()
    }
}

/// Forward-difference gradient at every cell.
pub fn gradient(field: &Field) -> Vec<Vec<f64>> {
    let g = field.grid();
    let u = field.values();
    (0..g.len())
        .map(|i| {
            (0..g.dim())
                .map(|a| {
                    if g.axis_index(i, a) + 1 < g.shape()[a] {
                        (u[i + g.strides()[a]] - u[i]) / g.h()
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Regularized magnitude `(|∇u|^2 + eps^2)^(1/2)` at every cell.
pub fn gradient_magnitude(field: &Field, eps_reg: f64) -> Vec<f64> {
    gradient(field)
        .iter()
        .map(|d| (d.iter().map(|x| x * x).sum::<f64>() + eps_reg * eps_reg).sqrt())
        .collect()
}

/// `J(u, region) = Σ_{region} (g_eps^p - eps^p + W(u)) h^n`.
pub fn energy(field: &Field, region: &Region, params: &EnergyParams, pot: &Potential) -> Result<f64> {
    if !region.conforms(field.grid()) {
        return Err(Error::Parameter("region does not conform to the field".into()));
    }
    let kernel = EnergyKernel::new(field.grid(), params, pot);
    let dens = kernel.densities(field.values());
    Ok(compensated_sum(region.indices().map(|i| dens[i])) * field.grid().cell_volume())
}

/// Energy on the whole grid.
pub fn total_energy(field: &Field, params: &EnergyParams, pot: &Potential) -> f64 {
    EnergyKernel::new(field.grid(), params, pot).total(field.values())
}

/// Gradient of the total energy with respect to the cell values (not divided by `h^n`).
pub fn energy_gradient(field: &Field, params: &EnergyParams, pot: &Potential) -> Vec<f64> {
    let vol = field.grid().cell_volume();
    EnergyKernel::new(field.grid(), params, pot)
        .variation(field.values())
        .into_iter()
        .map(|v| v * vol)
        .collect()
}

/// Discrete `p div(g_eps^(p-2) ∇u) - W'(u)` and the mask of cells away from the box faces.
#[derive(Debug, Clone)]
pub struct Residual {
    pub values: Vec<f64>,
    pub interior: Region,
}

impl Residual {
    pub fn interior_sup(&self) -> f64 {
        self.interior.indices().map(|i| self.values[i].abs()).fold(0.0, f64::max)
    }
}

pub fn p_laplacian_residual(field: &Field, params: &EnergyParams, pot: &Potential) -> Result<Residual> {
    if params.p < 2.0 && !(params.eps_reg() > 0.0) {
        return Err(Error::Parameter("p < 2 needs a positive gradient regularization".into()));
    }
    let g = field.grid();
    let values = EnergyKernel::new(g, params, pot)
        .variation(field.values())
        .into_iter()
        .map(|v| -v)
        .collect();
    let interior = Region::from_predicate(g, |i| !g.on_boundary(i));
    Ok(Residual { values, interior })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(n: usize, p: f64, m: f64, eps: Option<f64>) -> EnergyParams {
        let mut e = EnergyParams::new(n, p, m).unwrap();
        e.eps_reg = eps;
        e
    }

    #[test]
    fn one_d_ball_counts_cells() {
        let grid = Grid::new(vec![11], 1.0, vec![-5.0]).unwrap();
        let b = ball_mask(&grid, &[0.0], 2.4).unwrap();
        assert_eq!(b.count(), 5);
        assert_eq!(b.volume(&grid), 5.0);
        assert!(matches!(ball_mask(&grid, &[0.0], 6.0), Err(Error::Geometry(_))));
    }

    #[test]
    fn disc_area_converges() {
        let grid = Grid::centered_box(&[1.5, 1.5], 0.1).unwrap();
        let b = ball_mask(&grid, &[0.0, 0.0], 1.0).unwrap();
        let area = b.volume(&grid);
        assert!((area / std::f64::consts::PI - 1.0).abs() < 0.02, "area {area}");
    }

    #[test]
    fn gradients_of_simple_fields() {
        let grid = Grid::centered_box(&[1.0, 1.0], 0.25).unwrap();
        let c = Field::constant(grid.clone(), 0.3).unwrap();
        assert!(gradient(&c).iter().flatten().all(|&d| d == 0.0));

        let g1 = Grid::centered_box(&[1.0], 0.25).unwrap();
        let lin = Field::from_fn(g1.clone(), |x| 0.9 * x[0]);
        let d = gradient(&lin);
        for i in 0..g1.len() - 1 {
            assert!((d[i][0] - 0.9).abs() < 1e-14);
        }

        let plane = Field::from_fn(grid.clone(), |x| 0.3 * x[0] + 0.4 * x[1]);
        let mag = gradient_magnitude(&plane, 0.0);
        for i in 0..grid.len() {
            if !grid.on_boundary(i) {
                assert!((mag[i] - 0.5).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn pure_phase_has_zero_energy() {
        let grid = Grid::centered_box(&[2.0, 2.0], 0.5).unwrap();
        let u = Field::constant(grid.clone(), 1.0).unwrap();
        let pot = Potential::model(4.0).unwrap();
        let e = energy(&u, &Region::full(&grid), &params(2, 2.0, 4.0, None), &pot).unwrap();
        assert_eq!(e, 0.0);
    }

    #[test]
    fn linear_ramp_energy() {
        // ∫_{-1}^{1} 1 + (1 - x^2)^2 dx = 2 + 16/15
        let h = 0.005;
        let grid = Grid::new(vec![400], h, vec![-1.0 + 0.5 * h]).unwrap();
        let u = Field::from_fn(grid.clone(), |x| x[0]);
        let pot = Potential::model(2.0).unwrap();
        let e = energy(&u, &Region::full(&grid), &params(1, 2.0, 2.0, None), &pot).unwrap();
        let exact = 2.0 + 16.0 / 15.0;
        assert!((e / exact - 1.0).abs() < 0.01, "{e} vs {exact}");
    }

    #[test]
    fn energy_additive_and_monotone() {
        let grid = Grid::centered_box(&[3.0, 3.0], 0.25).unwrap();
        let u = Field::from_fn(grid.clone(), |x| (x[0] + 0.3 * x[1]).tanh());
        let pot = Potential::model(3.0).unwrap();
        let pr = params(2, 2.0, 3.0, None);
        let a = ball_mask(&grid, &[0.0, 0.0], 1.5).unwrap();
        let b = Region::full(&grid).minus(&a);
        let ea = energy(&u, &a, &pr, &pot).unwrap();
        let eb = energy(&u, &b, &pr, &pot).unwrap();
        let full = energy(&u, &Region::full(&grid), &pr, &pot).unwrap();
        assert!((ea + eb - full).abs() < 1e-12 * full);
        let small = ball_mask(&grid, &[0.0, 0.0], 1.0).unwrap();
        assert!(energy(&u, &small, &pr, &pot).unwrap() <= ea);
    }

    #[test]
    fn energy_dominates_potential_part() {
        let grid = Grid::centered_box(&[2.0, 2.0], 0.25).unwrap();
        let pot = Potential::model(3.0).unwrap();
        let pr = params(2, 3.0, 3.0, None);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let vals: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u = Field::from_values(grid.clone(), vals).unwrap();
        let e = energy(&u, &Region::full(&grid), &pr, &pot).unwrap();
        let pot_part: f64 = u.values().iter().map(|&v| pot.value(v)).sum::<f64>() * grid.cell_volume();
        assert!(e >= pr.lambda * pot_part);
    }

    #[test]
    fn residual_of_zero_field_vanishes() {
        let grid = Grid::centered_box(&[2.0, 2.0], 0.5).unwrap();
        let u = Field::constant(grid, 0.0).unwrap();
        let pot = Potential::model(3.0).unwrap();
        let r = p_laplacian_residual(&u, &params(2, 2.0, 3.0, None), &pot).unwrap();
        assert!(r.values.iter().all(|&v| v.abs() < 1e-14));
        assert!(p_laplacian_residual(&u, &params(2, 1.5, 3.0, Some(0.0)), &pot).is_err());
    }

    #[test]
    fn tanh_residual_is_second_order() {
        let pot = Potential::model(2.0).unwrap();
        let pr = params(1, 2.0, 2.0, None);
        let mut sups = Vec::new();
        for h in [4e-3, 2e-3, 1e-3] {
            let grid = Grid::centered_box(&[4.0], h).unwrap();
            let u = Field::from_fn(grid, |x| x[0].tanh());
            sups.push(p_laplacian_residual(&u, &pr, &pot).unwrap().interior_sup());
        }
        assert!(sups[2] < 1e-5, "{sups:?}");
        assert!(sups[0] / sups[1] > 3.5 && sups[1] / sups[2] > 3.5, "{sups:?}");
    }

    fn directional_check(p: f64, eps: f64, tol: f64) {
        let grid = Grid::centered_box(&[2.0, 2.0], 0.25).unwrap();
        let pot = Potential::model(3.0).unwrap();
        let pr = params(2, p, 3.0, Some(eps));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let vals: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-0.9..0.9)).collect();
            let dir: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let u = Field::from_values(grid.clone(), vals.clone()).unwrap();
            let grad = energy_gradient(&u, &pr, &pot);
            let analytic: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
            let step = 1e-5;
            let shifted = |s: f64| {
                let v: Vec<f64> = vals.iter().zip(&dir).map(|(a, d)| a + s * d).collect();
                total_energy(&Field::from_values(grid.clone(), v).unwrap(), &pr, &pot)
            };
            let fd = (shifted(step) - shifted(-step)) / (2.0 * step);
            let rel = (analytic - fd).abs() / analytic.abs();
            assert!(rel <= tol, "p = {p}: rel err {rel}");
        }
    }

    #[test]
    fn directional_derivatives_match_finite_differences() {
        directional_check(2.0, 1e-8, 1e-6);
        directional_check(1.5, 1e-6, 1e-4);
        directional_check(3.0, 1e-6, 1e-4);
    }
}
