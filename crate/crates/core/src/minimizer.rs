//! Box-constrained minimization of the discrete energy and diagnostics on
//! computed minimizers: sampled Q-minimality, the near-`+1` ball and the
//! sliding super-solution check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{energy, ball_mask, EnergyKernel, Field, Grid, Region};
use crate::potential::{EnergyParams, Potential};
use crate::profile1d::{comparison_profile, radial_field, Profile1D, ProfileKind};

/// Condition on one face of the box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FaceCondition {
    Natural,
    Dirichlet(f64),
}

/// Per-axis `[low face, high face]` conditions plus optional pinned cells.
/// Where two Dirichlet faces meet, the lower axis wins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCondition {
    pub faces: Vec<[FaceCondition; 2]>,
    /// Cells held at their initial value.
    #[serde(skip)]
    pub frozen: Option<Region>,
}

impl BoundaryCondition {
    pub fn natural(dim: usize) -> Self {
        Self {
            faces: vec![[FaceCondition::Natural; 2]; dim],
            frozen: None,
        }
    }

    pub fn dirichlet_all(dim: usize, value: f64) -> Self {
        Self {
            faces: vec![[FaceCondition::Dirichlet(value); 2]; dim],
            frozen: None,
        }
    }

    /// `u = lo` on the face `x_1 = min`, `u = hi` on `x_1 = max`, natural elsewhere.
    pub fn planar(dim: usize, lo: f64, hi: f64) -> Self {
        let mut bc = Self::natural(dim);
        bc.faces[0] = [FaceCondition::Dirichlet(lo), FaceCondition::Dirichlet(hi)];
        bc
    }

    pub fn with_frozen(mut self, frozen: Region) -> Self {
        self.frozen = Some(frozen);
        self
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if self.faces.len() != grid.dim() {
            return Err(Error::Validation(format!(
                "boundary condition has {} axes, grid has {}",
                self.faces.len(),
                grid.dim()
            )));
        }
        for face in self.faces.iter().flatten() {
            if let FaceCondition::Dirichlet(v) = face {
                if !(v.abs() <= 1.0) {
                    return Err(Error::Validation(format!("dirichlet value {v} outside [-1, 1]")));
                }
            }
        }
        if let Some(f) = &self.frozen {
            if !f.conforms(grid) {
                return Err(Error::Validation("frozen mask does not conform to the grid".into()));
            }
        }
        Ok(())
    }

    /// Prescribed value of cell `i`, if a Dirichlet face owns it.
    pub fn dirichlet_value(&self, grid: &Grid, i: usize) -> Option<f64> {
        for (a, pair) in self.faces.iter().enumerate() {
            let k = grid.axis_index(i, a);
            let last = grid.shape()[a] - 1;
            for (side, face) in pair.iter().enumerate() {
                if let FaceCondition::Dirichlet(v) = face {
                    if (side == 0 && k == 0) || (side == 1 && k == last) {
                        return Some(*v);
                    }
                }
            }
        }
        None
    }

    /// Cells the solver may move.
    pub fn free_cells(&self, grid: &Grid) -> Vec<bool> {
        (0..grid.len())
            .map(|i| {
                self.dirichlet_value(grid, i).is_none()
                    && !self.frozen.as_ref().is_some_and(|f| f.contains(i))
            })
            .collect()
    }

    /// Overwrites the Dirichlet cells of `field`.
    pub fn apply(&self, field: &mut Field) {
        let grid = field.grid().clone();
        field.update(|u| {
            for (i, v) in u.iter_mut().enumerate() {
                if let Some(d) = self.dirichlet_value(&grid, i) {
                    *v = d;
                }
            }
        });
    }
}

/// Outcome of [`minimize`]. Traces hold one entry per accepted step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub initial_energy: f64,
    pub final_energy: f64,
    /// Sup over free cells of the projected energy gradient divided by `h^n`.
    pub final_max_residual: f64,
    pub tol: f64,
    pub converged: bool,
    pub step_trace: Vec<f64>,
    pub energy_trace: Vec<f64>,
    pub note: String,
}

impl SolveReport {
    /// Copy with the traces subsampled to at most `keep` entries (last one kept).
    pub fn thinned(&self, keep: usize) -> Self {
        let thin = |v: &[f64]| -> Vec<f64> {
            if v.len() <= keep || keep < 2 {
                return v.to_vec();
            }
            let stride = v.len().div_ceil(keep - 1);
            let mut out: Vec<f64> = v.iter().step_by(stride).copied().collect();
            if (v.len() - 1) % stride != 0 {
                out.push(v[v.len() - 1]);
            }
            out
        };
        Self {
            step_trace: thin(&self.step_trace),
            energy_trace: thin(&self.energy_trace),
            ..self.clone()
        }
    }
}

fn projected_sup(u: &[f64], g: &[f64], free: &[bool]) -> f64 {
    let mut sup = 0.0f64;
    for i in 0..u.len() {
        if !free[i] {
            continue;
        }
        // a component pushing against an active bound is not a descent direction
        if (u[i] <= -1.0 && g[i] > 0.0) || (u[i] >= 1.0 && g[i] < 0.0) {
            continue;
        }
        sup = sup.max(g[i].abs());
    }
    sup
}

/// Projected Barzilai–Borwein descent with monotone Armijo backtracking.
///
/// Stops once the projected gradient of `E` divided by `h^n` is below `tol` on
/// every free cell. Exhausting `max_iter` is not an error: the report carries
/// `converged = false`.
pub fn minimize(
    u0: &Field,
    bc: &BoundaryCondition,
    params: &EnergyParams,
    pot: &Potential,
    tol: f64,
    max_iter: usize,
) -> Result<(Field, SolveReport)> {
    params.validate()?;
    let grid = u0.grid();
    bc.validate(grid)?;
    if params.n != grid.dim() {
        return Err(Error::Validation(format!(
            "params.n = {} but the grid is {}-dimensional",
            params.n,
            grid.dim()
        )));
    }
    for i in 0..grid.len() {
        if let Some(d) = bc.dirichlet_value(grid, i) {
            if (u0.value(i) - d).abs() > 1e-12 {
                return Err(Error::Validation(format!(
                    "initial field violates its dirichlet data at cell {i}: {} vs {d}",
                    u0.value(i)
                )));
            }
        }
    }
    if params.p < 2.0 && !(params.eps_reg() > 0.0) {
        return Err(Error::Parameter("p < 2 needs a positive gradient regularization".into()));
    }

    let kernel = EnergyKernel::new(grid, params, pot);
    let free = bc.free_cells(grid);
    let n = grid.dim() as f64;
    let h = grid.h();
    let gradient = |u: &[f64]| -> Vec<f64> {
        let mut g = kernel.variation(u);
        for (gi, &f) in g.iter_mut().zip(&free) {
            if !f {
                *gi = 0.0;
            }
        }
        g
    };

    let mut u = u0.values().to_vec();
    let mut e = kernel.total(&u);
    let initial_energy = e;
    let mut g = gradient(&u);
    let mut res = projected_sup(&u, &g, &free);
    // explicit-scheme step for the gradient term as the first guess (in units of the
    // variation, so the cell volume drops out)
    let mut alpha = h * h / (4.0 * n * params.p.max(2.0));
    let mut step_trace = Vec::new();
    let mut energy_trace = Vec::new();
    let mut iterations = 0;
    let mut note = String::new();
    let mut trial = vec![0.0; u.len()];
    let vol = grid.cell_volume();

    while res > tol {
        if iterations >= max_iter {
            note = format!("stopped after {max_iter} iterations");
            break;
        }
        let mut step = alpha;
        let accepted = loop {
            let mut decrease = 0.0;
            for i in 0..u.len() {
                trial[i] = if free[i] { (u[i] - step * g[i]).clamp(-1.0, 1.0) } else { u[i] };
                decrease += g[i] * (trial[i] - u[i]);
            }
            let e_new = kernel.total(&trial);
            if decrease < 0.0 && e_new <= e + 1e-4 * decrease * vol {
                break Some(e_new);
            }
            if decrease >= 0.0 || step < 1e-30 * alpha.max(1e-300) {
                break None;
            }
            step *= 0.25;
        };
        let Some(e_new) = accepted else {
            note = "line search stalled at rounding level".into();
            break;
        };
        let g_new = gradient(&trial);
        let (mut ss, mut sy, mut yy) = (0.0, 0.0, 0.0);
        for i in 0..u.len() {
            if !free[i] {
                continue;
            }
            let s = trial[i] - u[i];
            let y = g_new[i] - g[i];
            ss += s * s;
            sy += s * y;
            yy += y * y;
        }
        debug_assert!(e_new <= e);
        std::mem::swap(&mut u, &mut trial);
        g = g_new;
        e = e_new;
        iterations += 1;
        step_trace.push(step);
        energy_trace.push(e);
        res = projected_sup(&u, &g, &free);
        // alternate the two Barzilai–Borwein lengths
        alpha = if sy > 0.0 {
            if iterations % 2 == 0 { ss / sy } else { sy / yy }
        } else {
            4.0 * step
        };
        alpha = alpha.clamp(1e-12 * h * h, 1e12);
    }
    let converged = res <= tol;
    if converged && note.is_empty() {
        note = "projected gradient below tolerance".into();
    }
    let field = Field::from_values(grid.clone(), u)?;
    Ok((
        field,
        SolveReport {
            iterations,
            initial_energy,
            final_energy: e,
            final_max_residual: res,
            tol,
            converged,
            step_trace,
            energy_trace,
            note,
        },
    ))
}

/// Competitor family used by [`q_minimality_audit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompetitorFamily {
    /// `min(u, ψ)` with `ψ` ramping from `-1` inside the region to `1` at its edge.
    RampDown,
    /// `max(u, -ψ)`.
    RampUp,
    /// `min(u, U(|x - c| - R))` with the comparison profile `U`.
    ComparisonBall,
    /// Clamped sums of Gaussian bumps.
    Bump,
    /// A short projected descent with everything outside the region frozen.
    Relaxation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub family: CompetitorFamily,
    pub energy_u: f64,
    pub energy_v: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QMinimalityReport {
    pub worst_ratio: f64,
    pub worst_family: Option<CompetitorFamily>,
    pub q_factor: f64,
    /// `worst_ratio <= 1`.
    pub minimal: bool,
    /// `worst_ratio <= Q`.
    pub q_minimal: bool,
    pub trials: Vec<TrialRecord>,
}

/// Samples competitors that agree with `u` off `region` and compares energies
/// on the region plus its backward neighbours (every cell whose density the
/// change can reach). `trials` random bump competitors are drawn from `seed`
/// on top of the structured families.
pub fn q_minimality_audit(
    u: &Field,
    region: &Region,
    params: &EnergyParams,
    pot: &Potential,
    trials: usize,
    seed: u64,
) -> Result<QMinimalityReport> {
    let grid = u.grid();
    if !region.conforms(grid) {
        return Err(Error::Parameter("region does not conform to the field".into()));
    }
    if region.is_empty() {
        return Err(Error::Parameter("q-minimality audit needs a nonempty region".into()));
    }
    if region.indices().any(|i| grid.on_boundary(i)) {
        return Err(Error::Geometry("audit region touches the boundary of the domain".into()));
    }
    let closure = region.with_backward_neighbours(grid);
    let j_u = energy(u, &closure, params, pot)?;

    // bounding ball of the region
    let count = region.count() as f64;
    let mut center = vec![0.0; grid.dim()];
    for i in region.indices() {
        for (a, c) in center.iter_mut().enumerate() {
            *c += grid.coord(i, a) / count;
        }
    }
    let radius = region.indices().map(|i| grid.distance(i, &center)).fold(0.0, f64::max) + 0.5 * grid.h();

    let masked = |f: &dyn Fn(usize, f64) -> f64| -> Result<Field> {
        let vals = (0..grid.len())
            .map(|i| if region.contains(i) { f(i, u.value(i)).clamp(-1.0, 1.0) } else { u.value(i) })
            .collect();
        Field::from_values(grid.clone(), vals)
    };
    let width = (0.5 * radius).min(1.0).max(grid.h());
    let psi = |i: usize| -> f64 {
        let d = grid.distance(i, &center);
        (-1.0 + 2.0 * (d - (radius - width)) / width).clamp(-1.0, 1.0)
    };

    let mut competitors: Vec<(CompetitorFamily, Field)> = vec![
        (CompetitorFamily::RampDown, masked(&|i, v| v.min(psi(i)))?),
        (CompetitorFamily::RampUp, masked(&|i, v| v.max(-psi(i)))?),
    ];
    if params.is_degenerate() {
        let r_in = (radius - 1.0).max(0.0);
        competitors.push((
            CompetitorFamily::ComparisonBall,
            masked(&|i, v| {
                let t = grid.distance(i, &center) - r_in;
                v.min(comparison_profile(params.p, params.m, t).map(|x| x.0).unwrap_or(1.0))
            })?,
        ));
    }
    {
        let outside = Region::from_predicate(grid, |i| !region.contains(i));
        let bc = BoundaryCondition::natural(grid.dim()).with_frozen(outside);
        let (relaxed, _) = minimize(u, &bc, params, pot, 0.0, 50)?;
        competitors.push((CompetitorFamily::Relaxation, relaxed));
    }
    let members: Vec<usize> = region.indices().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let k = rng.gen_range(1..=3);
        let bumps: Vec<(Vec<f64>, f64, f64)> = (0..k)
            .map(|_| {
                let c = grid.coords(members[rng.gen_range(0..members.len())]);
                let w = rng.gen_range(2.0 * grid.h()..(0.5 * radius).max(3.0 * grid.h()));
                let a = rng.gen_range(-0.5..0.5);
                (c, w, a)
            })
            .collect();
        let v = masked(&|i, v| {
            v + bumps
                .iter()
                .map(|(c, w, a)| {
                    let d = grid.distance(i, c);
                    a * (-0.5 * (d / w).powi(2)).exp()
                })
                .sum::<f64>()
        })?;
        competitors.push((CompetitorFamily::Bump, v));
    }

    let mut records = Vec::with_capacity(competitors.len());
    for (family, v) in &competitors {
        let j_v = energy(v, &closure, params, pot)?;
        let ratio = if j_v > 0.0 {
            j_u / j_v
        } else if j_u > 0.0 {
            return Err(Error::Degenerate(format!(
                "{family:?} competitor has zero energy while J(u) = {j_u:e}"
            )));
        } else {
            1.0
        };
        records.push(TrialRecord {
            family: *family,
            energy_u: j_u,
            energy_v: j_v,
            ratio,
        });
    }
    let worst = records
        .iter()
        .max_by(|a, b| a.ratio.total_cmp(&b.ratio))
        .copied()
        .expect("at least the ramp competitors");
    Ok(QMinimalityReport {
        worst_ratio: worst.ratio,
        worst_family: Some(worst.family),
        q_factor: params.q_factor,
        minimal: worst.ratio <= 1.0,
        q_minimal: worst.ratio <= params.q_factor,
        trials: records,
    })
}

/// Cell near the anchor where `u` is close to `+1`, and the empty-of-negative ball around it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearPlusOne {
    pub cell: usize,
    pub location: Vec<f64>,
    pub value: f64,
    /// `|x_h - x_0|`.
    pub distance: f64,
    /// Largest `R_1` with `u >= 0` on every cell of `B_{R_1}(x_h)` inside the box.
    pub radius: f64,
    /// The radius was cut off by the box rather than by a negative cell.
    pub limited_by_boundary: bool,
}

pub fn find_near_plus_one(u: &Field, anchor: &[f64], h_level: f64) -> Result<NearPlusOne> {
    let grid = u.grid();
    if !(h_level > 0.0 && h_level < 1.0) {
        return Err(Error::Parameter(format!("h_level must lie in (0, 1), got {h_level}")));
    }
    if anchor.len() != grid.dim() {
        return Err(Error::Parameter("anchor dimension does not match the grid".into()));
    }
    let level = 1.0 - h_level;
    let tie = 1e-12 * grid.h();
    let mut best: Option<(usize, f64)> = None;
    for i in 0..grid.len() {
        if u.value(i) >= level {
            let d = grid.distance(i, anchor);
            // strict improvement keeps the smallest index among ties
            if best.is_none_or(|(_, bd)| d < bd - tie) {
                best = Some((i, d));
            }
        }
    }
    let (cell, distance) = best.ok_or_else(|| {
        Error::NotFound(format!("no cell with u >= {level} in the domain (inconclusive)"))
    })?;
    let location = grid.coords(cell);
    let to_negative = (0..grid.len())
        .filter(|&i| u.value(i) < 0.0)
        .map(|i| grid.distance(i, &location))
        .fold(f64::INFINITY, f64::min);
    let to_box = (0..grid.dim())
        .map(|a| {
            let (lo, hi) = grid.bounds(a);
            (location[a] - lo).min(hi - location[a])
        })
        .fold(f64::INFINITY, f64::min);
    Ok(NearPlusOne {
        cell,
        value: u.value(cell),
        location,
        distance,
        radius: to_negative.min(to_box),
        limited_by_boundary: to_box < to_negative,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contact {
    pub step: usize,
    pub center: Vec<f64>,
    pub cell: usize,
    /// `u - v` at the contact cell (`>= 0` up to rounding).
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlidingReport {
    pub steps: usize,
    pub radius: f64,
    pub support_radius: f64,
    /// Profile value at the center of the translated field.
    pub v_center: f64,
    pub contact: Option<Contact>,
    /// `max (u - v)` over the support, per step walked.
    pub max_gap_trace: Vec<f64>,
    pub note: String,
}

/// Slides `v(x) = U(|x - c| - r)` from `c = x0` toward `x1` in steps of at most
/// `h` and stops at the first center where `u` touches `v` from below on the
/// support `B_{r+b}(c)`.
pub fn sliding_supersolution_test(
    u: &Field,
    prof: &Profile1D,
    r: f64,
    x0: &[f64],
    x1: &[f64],
) -> Result<SlidingReport> {
    let grid = u.grid();
    if prof.kind != ProfileKind::Supersolution {
        return Err(Error::Parameter("sliding test needs a supersolution profile".into()));
    }
    if x0.len() != grid.dim() || x1.len() != grid.dim() {
        return Err(Error::Parameter("segment endpoints do not match the grid dimension".into()));
    }
    let b = prof.meta.b.unwrap_or(0.0);
    let support = r + b;
    let length = x0.iter().zip(x1).map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt();
    let steps = ((length / grid.h()).ceil() as usize).max(1);
    let centers: Vec<Vec<f64>> = (0..=steps)
        .map(|k| {
            let s = k as f64 / steps as f64;
            x0.iter().zip(x1).map(|(a, b)| a + s * (b - a)).collect()
        })
        .collect();
    if let Some(c) = centers.iter().find(|c| !grid.contains_ball(c, support)) {
        return Err(Error::Geometry(format!(
            "translated support of radius {support} about {c:?} leaves the domain"
        )));
    }
    let v_center = prof.eval(-r).0;
    let mut trace = Vec::new();
    for (step, c) in centers.iter().enumerate() {
        let ball = ball_mask(grid, c, support)?;
        let mut worst = (f64::NEG_INFINITY, 0usize);
        for i in ball.indices() {
            let v = prof.eval(grid.distance(i, c) - r).0;
            let gap = u.value(i) - v;
            if gap > worst.0 {
                worst = (gap, i);
            }
        }
        trace.push(worst.0);
        if worst.0 >= -1e-12 {
            return Ok(SlidingReport {
                steps,
                radius: r,
                support_radius: support,
                v_center,
                contact: Some(Contact {
                    step,
                    center: c.clone(),
                    cell: worst.1,
                    gap: worst.0,
                }),
                max_gap_trace: trace,
                note: format!("u touches the translated super-solution at step {step}"),
            });
        }
    }
    let note = if u.values().iter().all(|&x| x < v_center) {
        format!("no contact; u stays below v(0) = {v_center} so the ordering holds trivially")
    } else {
        "no contact along the whole segment: if u exceeds v(0) somewhere on it, the discrete \
         solution violates the comparison principle"
            .to_string()
    };
    Ok(SlidingReport {
        steps,
        radius: r,
        support_radius: support,
        v_center,
        contact: None,
        max_gap_trace: trace,
        note,
    })
}

/// The translated super-solution as a field, for plotting and for the residual check.
pub fn translated_supersolution(grid: &Grid, prof: &Profile1D, r: f64, center: &[f64]) -> Result<Field> {
    radial_field(grid, center, prof, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile1d::supersolution_profile;

    fn params(n: usize, p: f64, m: f64) -> EnergyParams {
        EnergyParams::new(n, p, m).unwrap()
    }

    /// 1-D minimizer between -1 and 1 on `[-l, l]`, seeded with a ramp.
    fn kink(p: f64, m: f64, l: f64, h: f64) -> (Field, SolveReport) {
        let grid = Grid::centered_box(&[l], h).unwrap();
        let u0 = Field::from_fn(grid, |x| (x[0] / 2.0).clamp(-1.0, 1.0));
        let bc = BoundaryCondition::planar(1, -1.0, 1.0);
        minimize(&u0, &bc, &params(1, p, m), &Potential::model(m).unwrap(), 1e-8, 200_000).unwrap()
    }

    /// Best shift by golden-section search on the sup error.
    fn tanh_error(u: &Field) -> (f64, f64) {
        let g = u.grid();
        let err = |x0: f64| {
            (0..g.len())
                .map(|i| (u.value(i) - (g.coord(i, 0) - x0).tanh()).abs())
                .fold(0.0, f64::max)
        };
        let (mut a, mut b) = (-1.0, 1.0);
        let r = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..100 {
            let c = b - r * (b - a);
            let d = a + r * (b - a);
            if err(c) < err(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let x0 = 0.5 * (a + b);
        (x0, err(x0))
    }

    #[test]
    fn pure_phase_from_random_start() {
        let grid = Grid::centered_box(&[2.0, 2.0], 0.25).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let vals = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut u0 = Field::from_values(grid, vals).unwrap();
        let bc = BoundaryCondition::dirichlet_all(2, 1.0);
        bc.apply(&mut u0);
        let (u, rep) = minimize(&u0, &bc, &params(2, 2.0, 2.0), &Potential::model(2.0).unwrap(), 1e-8, 100_000).unwrap();
        assert!(rep.converged, "{rep:?}");
        assert!(u.values().iter().all(|&v| (v - 1.0).abs() < 1e-6));
        assert!(rep.final_energy < 1e-10);
        assert!(rep.energy_trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn classical_kink_is_shifted_tanh() {
        let (u, rep) = kink(2.0, 2.0, 20.0, 0.05);
        assert!(rep.converged, "{}", rep.note);
        assert!(rep.energy_trace.windows(2).all(|w| w[1] <= w[0]));
        let (_, err) = tanh_error(&u);
        assert!(err <= 5e-3, "sup error {err}");
    }

    #[test]
    fn kink_error_is_second_order() {
        let hs = [0.2, 0.1, 0.05];
        let errs: Vec<f64> = hs.iter().map(|&h| tanh_error(&kink(2.0, 2.0, 12.0, h).0).1).collect();
        let fit = crate::stats::log_log_slope(&hs, &errs).unwrap();
        assert!(fit.slope >= 1.7, "slope {} from {errs:?}", fit.slope);
    }

    #[test]
    fn dirichlet_data_must_hold_initially() {
        let grid = Grid::centered_box(&[2.0], 0.25).unwrap();
        let u0 = Field::constant(grid, 0.0).unwrap();
        let bc = BoundaryCondition::planar(1, -1.0, 1.0);
        let err = minimize(&u0, &bc, &params(1, 2.0, 2.0), &Potential::model(2.0).unwrap(), 1e-6, 10);
        assert!(matches!(err, Err(Error::Validation(_))));
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let grid = Grid::centered_box(&[10.0], 0.1).unwrap();
        let u0 = Field::from_fn(grid, |x| (x[0] / 10.0).clamp(-1.0, 1.0));
        let bc = BoundaryCondition::planar(1, -1.0, 1.0);
        let (_, rep) = minimize(&u0, &bc, &params(1, 2.0, 4.0), &Potential::model(4.0).unwrap(), 1e-12, 5).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.iterations, 5);
    }

    #[test]
    fn pure_phase_is_minimal_against_every_family() {
        let grid = Grid::centered_box(&[4.0, 4.0], 0.25).unwrap();
        let u = Field::constant(grid.clone(), 1.0).unwrap();
        let region = ball_mask(&grid, &[0.0, 0.0], 2.0).unwrap();
        let rep = q_minimality_audit(&u, &region, &params(2, 2.0, 4.0), &Potential::model(4.0).unwrap(), 20, 1).unwrap();
        assert!(rep.worst_ratio <= 1.0);
        assert_eq!(rep.trials.len(), 24);
    }

    #[test]
    fn converged_kink_is_minimal_and_perturbation_is_not() {
        let tol = 1e-8;
        let (u, rep) = kink(2.0, 4.0, 12.0, 0.1);
        assert!(rep.converged && rep.tol == tol, "{} {} {}", rep.iterations, rep.final_max_residual, rep.note);
        let grid = u.grid().clone();
        let pars = params(1, 2.0, 4.0);
        let pot = Potential::model(4.0).unwrap();
        let region = ball_mask(&grid, &[0.0], 4.0).unwrap();
        let audit = q_minimality_audit(&u, &region, &pars, &pot, 100, 3).unwrap();
        assert!(audit.worst_ratio <= 1.0 + 10.0 * tol, "{}", audit.worst_ratio);

        let mut bad = u.clone();
        bad.update(|v| {
            for (i, x) in v.iter_mut().enumerate() {
                let t = grid.coord(i, 0);
                *x += 0.3 * (-t * t).exp();
            }
        });
        let audit = q_minimality_audit(&bad, &region, &pars, &pot, 20, 3).unwrap();
        assert!(audit.worst_ratio > 1.0);
    }

    #[test]
    fn audit_region_must_stay_inside() {
        let grid = Grid::centered_box(&[2.0], 0.25).unwrap();
        let u = Field::constant(grid.clone(), 1.0).unwrap();
        let region = Region::full(&grid);
        let r = q_minimality_audit(&u, &region, &params(1, 2.0, 4.0), &Potential::model(4.0).unwrap(), 1, 0);
        assert!(matches!(r, Err(Error::Geometry(_))));
    }

    #[test]
    fn near_plus_one_on_tanh() {
        let grid = Grid::centered_box(&[10.0], 0.01).unwrap();
        let x0 = 0.3;
        let u = Field::from_fn(grid, |x| (x[0] - x0).tanh());
        let hit = find_near_plus_one(&u, &[x0], 0.5).unwrap();
        assert!((hit.location[0] - (x0 + 0.5f64.atanh())).abs() <= 0.01 + 1e-9);
        assert!((hit.radius - (hit.location[0] - x0)).abs() <= 0.011);
        assert!(!hit.limited_by_boundary);

        let ones = Field::constant(u.grid().clone(), 1.0).unwrap();
        let hit = find_near_plus_one(&ones, &[0.004], 0.5).unwrap();
        assert!(hit.distance <= 0.005 + 1e-12);
        assert!(hit.limited_by_boundary);

        let minus = Field::constant(u.grid().clone(), -1.0).unwrap();
        assert!(matches!(find_near_plus_one(&minus, &[0.0], 0.5), Err(Error::NotFound(_))));
    }

    #[test]
    fn near_plus_one_ties_pick_lowest_index() {
        let grid = Grid::centered_box(&[1.0], 0.5).unwrap();
        // cells at -1, -0.5, 0, 0.5, 1; the two outer ones qualify and are equidistant
        let u = Field::from_values(grid, vec![1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(find_near_plus_one(&u, &[0.0], 0.1).unwrap().cell, 0);
    }

    #[test]
    fn sliding_trivial_cases() {
        let pot = Potential::model(2.0).unwrap();
        let prof = supersolution_profile(0.5, 2.0, &pot, 0.2).unwrap();
        let r = 3.0;
        let support = r + prof.meta.b.unwrap();
        let l = support + 3.0;
        let grid = Grid::centered_box(&[l, l], 0.25).unwrap();
        let minus = Field::constant(grid.clone(), -1.0).unwrap();
        let rep = sliding_supersolution_test(&minus, &prof, r, &[-1.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!(rep.contact.is_none());
        assert!(rep.v_center > -1.0);
        assert!(rep.note.contains("trivially"));

        let v = translated_supersolution(&grid, &prof, r, &[-1.0, 0.0]).unwrap();
        let rep = sliding_supersolution_test(&v, &prof, r, &[-1.0, 0.0], &[1.0, 0.0]).unwrap();
        assert_eq!(rep.contact.unwrap().step, 0);

        let far = sliding_supersolution_test(&minus, &prof, r, &[-5.0, 0.0], &[0.0, 0.0]);
        assert!(matches!(far, Err(Error::Geometry(_))));
    }

    #[test]
    fn sliding_into_an_interface_makes_contact() {
        let pot = Potential::model(2.0).unwrap();
        let prof = supersolution_profile(0.5, 2.0, &pot, 0.2).unwrap();
        let r = 3.0;
        let support = r + prof.meta.b.unwrap();
        let l = (support + 12.0).ceil();
        let grid = Grid::centered_box(&[l, support + 1.0], 0.25).unwrap();
        let u = Field::from_fn(grid, |x| x[0].tanh());
        let rep = sliding_supersolution_test(&u, &prof, r, &[-10.0, 0.0], &[0.0, 0.0]).unwrap();
        let c = rep.contact.expect("contact before the anchor");
        assert!(c.center[0] < 0.0);
    }
}
