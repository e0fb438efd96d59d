//! Experiment configuration, the named pipelines and their artifacts.
//!
//! Every run writes its artifacts under one output directory together with a
//! `manifest.json` that ties each file to the hash of the effective config.
//! Reports carry no timestamps or paths, so a fixed config and seed reproduce
//! them byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::audit::{
    audit_sequences, density_report, AuditSequences, discrete_inequality_fit, induction_simulator, main_inequality_report,
    measured_zero, power_seed, summarize_ratios, DensityReport, InductionTrace, InequalityReport, MainRecord,
    RatioSummary,
};
use crate::error::{Error, Result};
use crate::grid::{ball_mask, energy, p_laplacian_residual, Field, Grid};
use crate::minimizer::{find_near_plus_one, minimize, q_minimality_audit, BoundaryCondition, NearPlusOne, SolveReport};
use crate::potential::{EnergyParams, Potential};
use crate::profile1d::{
    comparison_samples, fit_decay_exponent, heteroclinic_profile, log_spaced_negative, radial_field,
    supersolution_min_radius, supersolution_profile, supersolution_profile_sampled, tail_energy, Profile1D,
    ProfileKind,
};
use crate::snapshot::write_snapshot;
use crate::stats::log_log_slope;

pub const EXPERIMENTS: [&str; 8] = [
    "density-2d",
    "density",
    "minimize",
    "profile",
    "profile-tails",
    "tanh-1d",
    "supersolution",
    "induction",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PotentialSpec {
    /// `(1 - τ²)^m` with `m` from the params.
    #[default]
    Model,
    /// CSV table with columns `tau,W,dW`.
    Table { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "GridSpec::default_dim")]
    pub dim: usize,
    /// Half-widths of the box `[-L, L]^n`; one value for every axis or one per axis.
    #[serde(rename = "box", default = "GridSpec::default_box")]
    pub half_width: Vec<f64>,
    #[serde(default = "GridSpec::default_h")]
    pub h: f64,
}

impl GridSpec {
    fn default_dim() -> usize {
        2
    }
    fn default_box() -> Vec<f64> {
        vec![40.0]
    }
    fn default_h() -> f64 {
        0.25
    }

    pub fn half_widths(&self) -> Result<Vec<f64>> {
        match self.half_width.len() {
            1 => Ok(vec![self.half_width[0]; self.dim]),
            k if k == self.dim => Ok(self.half_width.clone()),
            k => Err(Error::Validation(format!("box has {k} entries for a {}-dimensional grid", self.dim))),
        }
    }

    pub fn build(&self) -> Result<Grid> {
        let hw = self.half_widths()?;
        if hw.iter().any(|l| !(*l > 0.0)) {
            return Err(Error::Validation(format!("box half-widths must be positive, got {hw:?}")));
        }
        Grid::centered_box(&hw, self.h).map_err(|e| Error::Validation(e.to_string()))
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            dim: Self::default_dim(),
            half_width: Self::default_box(),
            h: Self::default_h(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BcSpec {
    /// Dirichlet `lo` / `hi` on the faces normal to `x_1`, natural elsewhere.
    Planar {
        #[serde(default = "minus_one")]
        lo: f64,
        #[serde(default = "plus_one")]
        hi: f64,
    },
    Natural,
    Dirichlet { value: f64 },
}

fn minus_one() -> f64 {
    -1.0
}
fn plus_one() -> f64 {
    1.0
}

impl Default for BcSpec {
    fn default() -> Self {
        BcSpec::Planar { lo: -1.0, hi: 1.0 }
    }
}

impl BcSpec {
    pub fn build(&self, dim: usize) -> BoundaryCondition {
        match *self {
            BcSpec::Planar { lo, hi } => BoundaryCondition::planar(dim, lo, hi),
            BcSpec::Natural => BoundaryCondition::natural(dim),
            BcSpec::Dirichlet { value } => BoundaryCondition::dirichlet_all(dim, value),
        }
    }

    /// Parses `planar`, `planar:<lo>:<hi>`, `natural` or `dirichlet:<v>`.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::Validation(format!("bad number {s:?} in boundary spec {text:?}")))
        };
        match parts.as_slice() {
            ["planar"] => Ok(Self::default()),
            ["planar", lo, hi] => Ok(BcSpec::Planar { lo: num(lo)?, hi: num(hi)? }),
            ["natural"] => Ok(BcSpec::Natural),
            ["dirichlet", v] => Ok(BcSpec::Dirichlet { value: num(v)? }),
            _ => Err(Error::Validation(format!(
                "boundary spec {text:?} is not one of planar, planar:<lo>:<hi>, natural, dirichlet:<v>"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub tol: f64,
    pub max_iter: usize,
    /// Amplitude of the seeded uniform noise added to the initial guess.
    pub init_noise: f64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 200_000,
            init_noise: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditSpec {
    #[serde(rename = "T")]
    pub t_window: usize,
    #[serde(rename = "R0")]
    pub r0: usize,
    #[serde(rename = "R_max")]
    pub r_max: usize,
    /// Radii for the main inequality.
    pub main_radii: Vec<usize>,
    /// Radii for the energy-scaling check.
    pub energy_radii: Vec<usize>,
    /// Random competitors in the Q-minimality audit (0 skips the audit).
    pub trials: usize,
    pub q_radius: f64,
    pub near_levels: Vec<f64>,
}

impl Default for AuditSpec {
    fn default() -> Self {
        Self {
            t_window: 5,
            r0: 10,
            r_max: 40,
            main_radii: vec![16, 24, 32],
            energy_radii: vec![10, 20, 40],
            trials: 20,
            q_radius: 5.0,
            near_levels: vec![0.4, 0.2, 0.1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileSpec {
    /// Profile written by the `profile` experiment.
    pub kind: ProfileKind,
    /// `h` of the super-solution: its right end value is at least `1 - h`.
    pub h_level: f64,
    pub epsilon: f64,
    /// The radialized super-solution uses `radius_factor * r_heuristic`.
    pub radius_factor: f64,
    /// Tail window `[t_near, t_far]` (as positive distances) for the decay fits.
    pub t_near: f64,
    pub t_far: f64,
    pub samples: usize,
}

impl Default for ProfileSpec {
    fn default() -> Self {
        Self {
            kind: ProfileKind::Comparison,
            h_level: 0.2,
            epsilon: 0.05,
            radius_factor: 4.0,
            t_near: 10.0,
            t_far: 1000.0,
            samples: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InductionSpec {
    pub n: usize,
    pub sigma: f64,
    #[serde(rename = "T")]
    pub t_window: usize,
    #[serde(rename = "C0")]
    pub big_c0: f64,
    pub c1: f64,
    /// Defaults to `pm/(m-p) - 1` from the params.
    pub gamma: Option<f64>,
    pub r_start: usize,
    pub r_stop: usize,
}

impl Default for InductionSpec {
    fn default() -> Self {
        Self {
            n: 2,
            sigma: 0.1,
            t_window: 10,
            big_c0: 1.0,
            c1: 2.5,
            gamma: None,
            r_start: 800,
            r_stop: 3200,
        }
    }
}

fn default_params() -> EnergyParams {
    EnergyParams {
        n: 2,
        p: 2.0,
        m: 4.0,
        lambda: 1.0,
        big_lambda: 1.0,
        q_factor: 1.0,
        eps_reg: None,
    }
}

/// One experiment, fully specified. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: String,
    #[serde(default = "default_params")]
    pub params: EnergyParams,
    #[serde(default)]
    pub potential: PotentialSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub bc: BcSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub audit: AuditSpec,
    #[serde(default)]
    pub profile: ProfileSpec,
    #[serde(default)]
    pub induction: InductionSpec,
    #[serde(default)]
    pub seed: u64,
    /// Output directory; not part of the config hash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(experiment: &str) -> Self {
        Self {
            experiment: experiment.to_string(),
            params: default_params(),
            potential: PotentialSpec::default(),
            grid: GridSpec::default(),
            bc: BcSpec::default(),
            solver: SolverSpec::default(),
            audit: AuditSpec::default(),
            profile: ProfileSpec::default(),
            induction: InductionSpec::default(),
            seed: 0,
            out: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Validation(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Validation(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// SHA-256 of the canonical JSON of the config without its output directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn validate(&self) -> Result<()> {
        let v = |e: Error| Error::Validation(e.to_string());
        if !EXPERIMENTS.contains(&self.experiment.as_str()) {
            return Err(Error::Validation(format!(
                "unknown experiment {:?}; expected one of {}",
                self.experiment,
                EXPERIMENTS.join(", ")
            )));
        }
        self.params.validate().map_err(v)?;
        let needs_degenerate = matches!(self.experiment.as_str(), "density-2d" | "density" | "profile-tails");
        if needs_degenerate && !self.params.is_degenerate() {
            return Err(Error::Validation(format!(
                "experiment {} requires m > p (got p = {}, m = {})",
                self.experiment, self.params.p, self.params.m
            )));
        }
        if self.experiment == "density-2d" && self.grid.dim != 2 {
            return Err(Error::Validation(format!("density-2d needs grid.dim = 2, got {}", self.grid.dim)));
        }
        let on_grid = matches!(self.experiment.as_str(), "density-2d" | "density" | "minimize");
        if on_grid && self.params.n != self.grid.dim {
            return Err(Error::Validation(format!(
                "params.n = {} does not match grid.dim = {}",
                self.params.n, self.grid.dim
            )));
        }
        if !(self.solver.tol >= 0.0) || self.solver.max_iter == 0 {
            return Err(Error::Validation("solver needs tol >= 0 and max_iter >= 1".into()));
        }
        if !(self.solver.init_noise >= 0.0) {
            return Err(Error::Validation("init_noise must be >= 0".into()));
        }
        if self.audit.r0 == 0 || self.audit.r0 > self.audit.r_max {
            return Err(Error::Validation(format!(
                "need 1 <= R0 <= R_max, got {} and {}",
                self.audit.r0, self.audit.r_max
            )));
        }
        if on_grid {
            self.grid.build()?;
        }
        Ok(())
    }

    pub fn potential(&self) -> Result<Potential> {
        match &self.potential {
            PotentialSpec::Model => Potential::model(self.params.m),
            PotentialSpec::Table { path } => Potential::from_csv(self.params.m, path),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
    pub package: String,
    pub version: String,
    pub status: String,
    pub artifacts: Vec<ArtifactEntry>,
}

/// Collects the files of one run.
pub struct ArtifactWriter {
    dir: PathBuf,
    files: Vec<String>,
}

impl ArtifactWriter {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(self.dir.join(name), text)?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        let mut w = csv::Writer::from_path(self.dir.join(name))?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(row.iter().map(|v| format!("{v:e}")))?;
        }
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn profile(&mut self, stem: &str, prof: &Profile1D) -> Result<()> {
        let name = format!("{stem}.csv");
        prof.write_csv(fs::File::create(self.dir.join(&name))?)?;
        self.files.push(name);
        self.json(&format!("{stem}.meta.json"), &profile_metadata(prof))
    }

    pub fn snapshot(&mut self, stem: &str, field: &Field) -> Result<()> {
        write_snapshot(field, &self.dir.join(stem))?;
        self.files.push(format!("{stem}.json"));
        self.files.push(format!("{stem}.bin"));
        let slice = format!("{stem}_slice.dat");
        field.write_slice_csv(fs::File::create(self.dir.join(&slice))?)?;
        self.files.push(slice);
        Ok(())
    }

    pub fn finish(self, config: &RunConfig, status: &str) -> Result<PathBuf> {
        let mut artifacts = Vec::with_capacity(self.files.len());
        for f in &self.files {
            let bytes = fs::read(self.dir.join(f))?;
            artifacts.push(ArtifactEntry {
                file: f.clone(),
                sha256: hex::encode(Sha256::digest(&bytes)),
                bytes: bytes.len() as u64,
            });
        }
        let manifest = Manifest {
            experiment: config.experiment.clone(),
            config_hash: config.hash(),
            seed: config.seed,
            package: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            status: status.into(),
            artifacts,
        };
        let path = self.dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(path)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileMetadata {
    pub kind: crate::profile1d::ProfileKind,
    pub samples: usize,
    #[serde(flatten)]
    pub meta: crate::profile1d::ProfileMeta,
}

pub fn profile_metadata(prof: &Profile1D) -> ProfileMetadata {
    ProfileMetadata {
        kind: prof.kind,
        samples: prof.len(),
        meta: prof.meta,
    }
}

/// Summary of a solve without the traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub iterations: usize,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub final_max_residual: f64,
    pub tol: f64,
    pub converged: bool,
    pub note: String,
}

impl From<&SolveReport> for SolveSummary {
    fn from(r: &SolveReport) -> Self {
        Self {
            iterations: r.iterations,
            initial_energy: r.initial_energy,
            final_energy: r.final_energy,
            final_max_residual: r.final_max_residual,
            tol: r.tol,
            converged: r.converged,
            note: r.note.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub r: usize,
    pub p_over_r: f64,
    pub j_over_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyScaling {
    /// The quantities are divided by `R^(n-1)`.
    pub rows: Vec<EnergyRow>,
    /// `max/min - 1` of `P_R / R^(n-1)`.
    pub p_variation: f64,
    pub j_variation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QSummary {
    pub region_radius: f64,
    pub trials: usize,
    pub worst_ratio: f64,
    pub worst_family: Option<crate::minimizer::CompetitorFamily>,
    pub minimal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearRecord {
    pub h_level: f64,
    #[serde(flatten)]
    pub hit: NearPlusOne,
}

/// Everything the density pipeline measures on one minimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityRun {
    pub experiment: String,
    pub config_hash: String,
    pub dim: usize,
    pub cells: usize,
    pub presolve: Option<SolveSummary>,
    pub solve: Option<SolveSummary>,
    pub center: Vec<f64>,
    pub density: DensityReport,
    pub energy_scaling: EnergyScaling,
    pub main: Vec<MainRecord>,
    pub main_summary: Option<RatioSummary>,
    pub discrete: Option<InequalityReport>,
    pub discrete_error: Option<String>,
    pub sequences_monotone: bool,
    pub sequences: AuditSequences,
    pub q_minimality: Option<QSummary>,
    pub near_plus_one: Vec<NearRecord>,
}

fn variation(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo > 0.0 {
        hi / lo - 1.0
    } else {
        f64::INFINITY
    }
}

/// The starting field for a planar run: the converged one-dimensional kink
/// extended along the other axes, plus seeded noise on the free cells.
fn planar_start(
    config: &RunConfig,
    grid: &Grid,
    bc: &BoundaryCondition,
    pot: &Potential,
) -> Result<(Field, Option<SolveSummary>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let free = bc.free_cells(grid);
    let (base, presolve): (Vec<f64>, Option<SolveSummary>) = match config.bc {
        BcSpec::Planar { lo, hi } => {
            let hw = config.grid.half_widths()?;
            let line = Grid::centered_box(&hw[..1], config.grid.h)?;
            let mid = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            let u0 = Field::from_fn(line, |x| (mid + half * (x[0] / 2.0).clamp(-1.0, 1.0)).clamp(-1.0, 1.0));
            let mut p1 = config.params;
            p1.n = 1;
            let (u1, rep) = minimize(
                &u0,
                &BoundaryCondition::planar(1, lo, hi),
                &p1,
                pot,
                config.solver.tol,
                config.solver.max_iter,
            )?;
            let vals = (0..grid.len()).map(|i| u1.value(grid.axis_index(i, 0))).collect();
            (vals, Some(SolveSummary::from(&rep)))
        }
        _ => ((0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect(), None),
    };
    let amp = config.solver.init_noise;
    let vals = base
        .iter()
        .zip(&free)
        .map(|(&v, &f)| if f && amp > 0.0 { (v + amp * rng.gen_range(-1.0..1.0)).clamp(-1.0, 1.0) } else { v })
        .collect();
    let mut field = Field::from_values(grid.clone(), vals)?;
    bc.apply(&mut field);
    Ok((field, presolve))
}

/// Minimizes on the configured grid. Returns the field, the solve report and
/// the summary of the one-dimensional presolve of planar runs.
pub fn solve(config: &RunConfig) -> Result<(Field, SolveReport, Option<SolveSummary>)> {
    config.validate()?;
    let pot = config.potential()?;
    let grid = config.grid.build()?;
    let bc = config.bc.build(grid.dim());
    let (u0, presolve) = planar_start(config, &grid, &bc, &pot)?;
    let (u, rep) = minimize(&u0, &bc, &config.params, &pot, config.solver.tol, config.solver.max_iter)?;
    Ok((u, rep, presolve))
}

/// Minimize, then run every density audit on the result.
pub fn density_pipeline(config: &RunConfig) -> Result<(DensityRun, Field, SolveReport)> {
    let (u, rep, presolve) = solve(config)?;
    let grid = u.grid();
    let origin = vec![0.0; grid.dim()];
    let center = match config.bc {
        BcSpec::Planar { .. } => measured_zero(&u, &origin).unwrap_or(origin),
        _ => origin,
    };
    let mut run = audit_field(config, &u, &center)?;
    run.presolve = presolve;
    run.solve = Some(SolveSummary::from(&rep));
    Ok((run, u, rep))
}

/// Every density audit of `u` about `center`, using the audit and params
/// sections of `config`.
pub fn audit_field(config: &RunConfig, u: &Field, center: &[f64]) -> Result<DensityRun> {
    let pot = config.potential()?;
    let params = config.params;
    let grid = u.grid();
    if params.n != grid.dim() {
        return Err(Error::Validation(format!(
            "params.n = {} does not match the {}-dimensional field",
            params.n,
            grid.dim()
        )));
    }
    let a = &config.audit;
    let center = center.to_vec();
    let density = density_report(u, &center, a.r0, a.r_max)?;

    let seq = audit_sequences(u, &center, a.r_max, a.t_window, &params, &pot)?;
    let nm1 = grid.dim() as f64 - 1.0;
    // radii beyond R_max are skipped
    let rows = a
        .energy_radii
        .iter()
        .filter(|&&r| r <= a.r_max)
        .map(|&r| {
            let ball = ball_mask(grid, &center, r as f64)?;
            let scale = (r as f64).powf(nm1);
            Ok(EnergyRow {
                r,
                p_over_r: seq.p[r] / scale,
                j_over_r: energy(u, &ball, &params, &pot)? / scale,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let energy_scaling = EnergyScaling {
        p_variation: variation(rows.iter().map(|r| r.p_over_r)),
        j_variation: variation(rows.iter().map(|r| r.j_over_r)),
        rows,
    };

    let main = a
        .main_radii
        .iter()
        .map(|&r| main_inequality_report(u, &center, r, a.t_window, &params, &pot))
        .collect::<Result<Vec<_>>>()?;
    let main_summary = summarize_ratios(&main.iter().map(|m| m.ratio).collect::<Vec<_>>()).ok();
    let (discrete, discrete_error) = match discrete_inequality_fit(&seq, grid.dim()) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };

    let q_minimality = if a.trials > 0 {
        let region = ball_mask(grid, &center, a.q_radius)?;
        let q = q_minimality_audit(u, &region, &params, &pot, a.trials, config.seed)?;
        Some(QSummary {
            region_radius: a.q_radius,
            trials: q.trials.len(),
            worst_ratio: q.worst_ratio,
            worst_family: q.worst_family,
            minimal: q.minimal,
        })
    } else {
        None
    };
    let near_plus_one = a
        .near_levels
        .iter()
        .filter_map(|&h| find_near_plus_one(u, &center, h).ok().map(|hit| NearRecord { h_level: h, hit }))
        .collect();

    Ok(DensityRun {
        experiment: config.experiment.clone(),
        config_hash: config.hash(),
        dim: grid.dim(),
        cells: grid.len(),
        presolve: None,
        solve: None,
        center,
        density,
        energy_scaling,
        main,
        main_summary,
        sequences_monotone: seq.is_monotone(),
        sequences: seq,
        discrete,
        discrete_error,
        q_minimality,
        near_plus_one,
    })
}

/// Density tables, `sequences.csv` and `report.json` of one audited field.
pub fn write_audit(w: &mut ArtifactWriter, run: &DensityRun) -> Result<()> {
    let rows: Vec<Vec<f64>> = run.density.rows.iter().map(|r| vec![r.r as f64, r.plus, r.minus]).collect();
    w.csv("density.csv", &["R", "plus_fraction", "minus_fraction"], &rows)?;
    let rows: Vec<Vec<f64>> = run
        .energy_scaling
        .rows
        .iter()
        .map(|r| vec![r.r as f64, r.p_over_r, r.j_over_r])
        .collect();
    w.csv("energy.csv", &["R", "P_R_over_R^(n-1)", "J_over_R^(n-1)"], &rows)?;
    let rows: Vec<Vec<f64>> = run
        .main
        .iter()
        .map(|m| vec![m.r as f64, m.lhs, m.rhs, m.ratio, m.coarea_lhs, m.inner_energy, m.inner_scale])
        .collect();
    w.csv("main.csv", &["R", "V_R-T^((n-1)/n)", "J_vR_SR", "ratio", "coarea_lhs", "inner_energy", "inner_scale"], &rows)?;
    let rows: Vec<Vec<f64>> = run
        .main
        .iter()
        .flat_map(|m| m.annuli.iter().map(move |a| vec![m.r as f64, a.j as f64, a.energy, a.bound]))
        .collect();
    w.csv("annuli.csv", &["R", "j", "energy", "bound"], &rows)?;
    if let Some(d) = &run.discrete {
        let rows: Vec<Vec<f64>> = d
            .rows
            .iter()
            .map(|r| vec![r.r as f64, r.lhs, r.rhs, r.slack, if r.pass { 1.0 } else { 0.0 }])
            .collect();
        w.csv("discrete.csv", &["R", "lhs", "rhs", "slack", "pass"], &rows)?;
    }
    let seq = &run.sequences;
    let rows: Vec<Vec<f64>> = (0..=seq.r_max())
        .map(|r| vec![r as f64, seq.v[r], seq.p[r], seq.m_at(r).unwrap_or(f64::NAN)])
        .collect();
    w.csv("sequences.csv", &["R", "V_R", "P_R", "M_R"], &rows)?;
    w.json("report.json", run)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailsReport {
    pub experiment: String,
    pub config_hash: String,
    pub p: f64,
    pub m: f64,
    pub gamma_expected: f64,
    /// Log-log slope of the tail energy against `T` (expected `-gamma`).
    pub tail_slope: f64,
    pub gamma_fitted: f64,
    pub decay_expected: f64,
    pub decay_exponent: f64,
}

pub fn tails_pipeline(config: &RunConfig) -> Result<(TailsReport, Vec<Vec<f64>>, Profile1D)> {
    config.validate()?;
    let pot = config.potential()?;
    let (p, m) = (config.params.p, config.params.m);
    let pr = &config.profile;
    let count = pr.samples.max(8);
    let ts: Vec<f64> = log_spaced_negative(pr.t_near, pr.t_far, count).iter().map(|t| -t).rev().collect();
    let energies = ts.iter().map(|&t| tail_energy(p, m, t, &pot)).collect::<Result<Vec<_>>>()?;
    let fit = log_log_slope(&ts, &energies)?;
    let grid = log_spaced_negative(pr.t_near, pr.t_far, count);
    let prof = comparison_samples(p, m, &grid)?;
    let decay = fit_decay_exponent(&prof, (-pr.t_far, -pr.t_near))?;
    let gamma = config.params.gamma()?;
    let rows = ts.iter().zip(&energies).map(|(&t, &e)| vec![t, e]).collect();
    Ok((
        TailsReport {
            experiment: config.experiment.clone(),
            config_hash: config.hash(),
            p,
            m,
            gamma_expected: gamma,
            tail_slope: fit.slope,
            gamma_fitted: -fit.slope,
            decay_expected: p / (m - p),
            decay_exponent: decay,
        },
        rows,
        prof,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TanhReport {
    pub experiment: String,
    pub config_hash: String,
    pub half_width: f64,
    pub h: f64,
    pub solve: SolveSummary,
    pub shift: f64,
    /// Sup error of the minimizer against `tanh(x - shift)`.
    pub minimizer_error: f64,
    /// Sup error of the heteroclinic quadrature against `tanh` on `[-5, 5]`.
    pub heteroclinic_error: f64,
}

/// Sup error against the best shifted `tanh`, by golden-section search in the shift.
pub fn shifted_tanh_error(u: &Field) -> (f64, f64) {
    let g = u.grid();
    let err = |x0: f64| {
        (0..g.len())
            .map(|i| (u.value(i) - (g.coord(i, 0) - x0).tanh()).abs())
            .fold(0.0, f64::max)
    };
    let (mut a, mut b) = (-2.0 * g.h() - 1.0, 2.0 * g.h() + 1.0);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..120 {
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

pub fn tanh_pipeline(config: &RunConfig) -> Result<(TanhReport, Field, SolveReport, Profile1D)> {
    config.validate()?;
    let mut params = config.params;
    params.n = 1;
    params.p = 2.0;
    params.m = 2.0;
    let pot = Potential::model(2.0)?;
    let l = config.grid.half_width[0];
    let grid = Grid::centered_box(&[l], config.grid.h).map_err(|e| Error::Validation(e.to_string()))?;
    let u0 = Field::from_fn(grid, |x| (x[0] / 2.0).clamp(-1.0, 1.0));
    let bc = BoundaryCondition::planar(1, -1.0, 1.0);
    let (u, rep) = minimize(&u0, &bc, &params, &pot, config.solver.tol, config.solver.max_iter)?;
    let (shift, err) = shifted_tanh_error(&u);
    let t_grid: Vec<f64> = (0..=1000).map(|i| -5.0 + 0.01 * i as f64).collect();
    let het = heteroclinic_profile(2.0, &pot, &t_grid)?;
    let het_err = het.t.iter().zip(&het.u).map(|(t, u)| (u - t.tanh()).abs()).fold(0.0, f64::max);
    Ok((
        TanhReport {
            experiment: config.experiment.clone(),
            config_hash: config.hash(),
            half_width: l,
            h: config.grid.h,
            solve: SolveSummary::from(&rep),
            shift,
            minimizer_error: err,
            heteroclinic_error: het_err,
        },
        u,
        rep,
        het,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupersolutionReport {
    pub experiment: String,
    pub config_hash: String,
    pub dim: usize,
    pub h_level: f64,
    pub epsilon: f64,
    pub eta: f64,
    pub s0: f64,
    pub s1: f64,
    pub a: f64,
    pub b: f64,
    pub r_heuristic: f64,
    pub r: f64,
    pub grid_h: f64,
    pub annulus_cells: usize,
    /// Largest residual over the interior annulus cells (negative certifies).
    pub max_annulus_residual: f64,
    pub certified: bool,
    /// Largest relative defect of `(p-1)(U')^p - W(U) + eps U = eta` over the samples.
    pub first_integral_defect: f64,
}

/// Cells whose whole stencil lies in the open annulus `r + a < |x| < r + b`.
pub fn interior_annulus(grid: &Grid, center: &[f64], inner: f64, outer: f64) -> crate::grid::Region {
    let h = grid.h();
    crate::grid::Region::from_predicate(grid, |i| {
        let d = grid.distance(i, center);
        !grid.on_boundary(i) && d > inner + 1.5 * h && d < outer - 1.5 * h
    })
}

pub fn first_integral_defect(prof: &Profile1D, pot: &Potential) -> f64 {
    let (p, eps, eta) = (prof.meta.p, prof.meta.epsilon, prof.meta.eta);
    prof.u
        .iter()
        .zip(&prof.du)
        .map(|(&u, &du)| {
            let lhs = (p - 1.0) * du.powf(p) - pot.value(u) + eps * u;
            (lhs - eta).abs() / eta.abs()
        })
        .fold(0.0, f64::max)
}

pub fn supersolution_pipeline(config: &RunConfig) -> Result<(SupersolutionReport, Profile1D)> {
    config.validate()?;
    let pot = config.potential()?;
    let p = config.params.p;
    let pr = &config.profile;
    let prof = supersolution_profile(pr.h_level, p, &pot, pr.epsilon)?;
    let dim = config.grid.dim.max(2);
    let r_heuristic = supersolution_min_radius(&prof, dim)?;
    let r = pr.radius_factor * r_heuristic;
    let (a, b) = (prof.meta.a.unwrap_or(0.0), prof.meta.b.unwrap_or(0.0));
    let extent = r + b + 4.0 * config.grid.h;
    let grid = Grid::centered_box(&vec![extent; dim], config.grid.h)?;
    let center = vec![0.0; dim];
    let v = radial_field(&grid, &center, &prof, r)?;
    let mut params = config.params;
    params.n = dim;
    let res = p_laplacian_residual(&v, &params, &pot)?;
    let annulus = interior_annulus(&grid, &center, r + a, r + b);
    let max_res = annulus.indices().map(|i| res.values[i]).fold(f64::NEG_INFINITY, f64::max);
    Ok((
        SupersolutionReport {
            experiment: config.experiment.clone(),
            config_hash: config.hash(),
            dim,
            h_level: pr.h_level,
            epsilon: pr.epsilon,
            eta: prof.meta.eta,
            s0: prof.meta.s0,
            s1: prof.meta.s1,
            a,
            b,
            r_heuristic,
            r,
            grid_h: config.grid.h,
            annulus_cells: annulus.count(),
            max_annulus_residual: max_res,
            certified: annulus.count() > 0 && max_res < 0.0,
            first_integral_defect: first_integral_defect(&prof, &pot),
        },
        prof,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InductionSummary {
    pub experiment: String,
    pub config_hash: String,
    pub rho1: f64,
    pub r_start: usize,
    pub r_stop: usize,
    pub maintained: bool,
    pub first_violation: Option<(usize, crate::audit::ViolationKind)>,
}

pub fn induction_pipeline(config: &RunConfig) -> Result<(InductionSummary, InductionTrace)> {
    config.validate()?;
    let s = &config.induction;
    let gamma = match s.gamma {
        Some(g) => g,
        None => config.params.gamma()?,
    };
    if s.r_start < s.t_window {
        return Err(Error::Validation(format!("r_start = {} is below T = {}", s.r_start, s.t_window)));
    }
    let seed = power_seed(s.n, s.sigma, s.t_window, s.r_start);
    let trace = induction_simulator(s.n, s.sigma, s.t_window, s.big_c0, s.c1, gamma, &seed, s.r_start, s.r_stop)?;
    Ok((
        InductionSummary {
            experiment: config.experiment.clone(),
            config_hash: config.hash(),
            rho1: trace.rho1,
            r_start: s.r_start,
            r_stop: s.r_stop,
            maintained: trace.maintained,
            first_violation: trace.first_violation,
        },
        trace,
    ))
}

pub fn write_induction(w: &mut ArtifactWriter, summary: &InductionSummary, trace: &InductionTrace) -> Result<()> {
    let rows: Vec<Vec<f64>> = trace
        .rows
        .iter()
        .map(|r| {
            vec![
                r.r as f64,
                r.m,
                r.target,
                if r.invariant_ok { 1.0 } else { 0.0 },
                if r.chain_ok { 1.0 } else { 0.0 },
            ]
        })
        .collect();
    w.csv("induction.csv", &["R", "M_R", "sigma_R^n", "invariant_ok", "chain_ok"], &rows)?;
    w.json("report.json", summary)
}

/// The profile selected by `config.profile.kind`: the comparison profile on
/// `[-t_far, -t_near]` (log-spaced), the heteroclinic on `[-t_near, t_near]`,
/// or the super-solution for `h_level` and `epsilon`.
pub fn profile_pipeline(config: &RunConfig) -> Result<Profile1D> {
    config.validate()?;
    let pot = config.potential()?;
    let (p, m) = (config.params.p, config.params.m);
    let pr = &config.profile;
    let count = pr.samples.max(2);
    match pr.kind {
        ProfileKind::Comparison => comparison_samples(p, m, &log_spaced_negative(pr.t_near, pr.t_far, count)),
        ProfileKind::Heteroclinic => {
            let grid: Vec<f64> = (0..count)
                .map(|i| -pr.t_near + 2.0 * pr.t_near * i as f64 / (count - 1) as f64)
                .collect();
            heteroclinic_profile(p, &pot, &grid)
        }
        ProfileKind::Supersolution => supersolution_profile_sampled(pr.h_level, p, &pot, pr.epsilon, count),
    }
}

/// Key scalars of a finished run, used by sweeps.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunScalars {
    pub delta: Option<f64>,
    pub c1: Option<f64>,
    pub big_c0: Option<f64>,
    pub gamma: Option<f64>,
    pub decay_exponent: Option<f64>,
    pub error: Option<f64>,
}

/// Outcome of [`run`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: PathBuf,
    pub scalars: RunScalars,
}

/// Runs the configured experiment and writes its artifacts to `dir`. A solver
/// that fails to converge still writes everything, then reports
/// [`Error::NonConvergence`].
pub fn run(config: &RunConfig, dir: &Path) -> Result<RunOutcome> {
    config.validate()?;
    let mut w = ArtifactWriter::new(dir)?;
    w.json("config.json", config)?;
    let mut scalars = RunScalars::default();
    let mut non_converged: Option<String> = None;
    match config.experiment.as_str() {
        "density-2d" | "density" => {
            let (run, u, rep) = density_pipeline(config)?;
            w.snapshot("u", &u)?;
            w.json("solve.json", &rep.thinned(1000))?;
            write_audit(&mut w, &run)?;
            scalars.delta = Some(run.density.delta);
            scalars.c1 = run.discrete.as_ref().map(|d| d.c1);
            scalars.big_c0 = run.discrete.as_ref().map(|d| d.big_c0);
            scalars.gamma = config.params.gamma().ok();
            if !rep.converged {
                non_converged = Some(rep.note.clone());
            }
        }
        "minimize" => {
            let (u, rep, presolve) = solve(config)?;
            w.snapshot("u", &u)?;
            w.json("solve.json", &rep.thinned(1000))?;
            let summary = serde_json::json!({
                "experiment": config.experiment,
                "config_hash": config.hash(),
                "presolve": presolve,
                "solve": SolveSummary::from(&rep),
            });
            w.json("report.json", &summary)?;
            if !rep.converged {
                non_converged = Some(rep.note.clone());
            }
        }
        "profile" => {
            let prof = profile_pipeline(config)?;
            w.profile("profile", &prof)?;
        }
        "profile-tails" => {
            let (rep, rows, prof) = tails_pipeline(config)?;
            w.csv("tail_energy.csv", &["T", "E"], &rows)?;
            w.profile("comparison", &prof)?;
            w.json("report.json", &rep)?;
            scalars.gamma = Some(rep.gamma_fitted);
            scalars.decay_exponent = Some(rep.decay_exponent);
        }
        "tanh-1d" => {
            let (rep, u, solve, het) = tanh_pipeline(config)?;
            w.snapshot("u", &u)?;
            w.json("solve.json", &solve.thinned(1000))?;
            w.profile("heteroclinic", &het)?;
            w.json("report.json", &rep)?;
            scalars.error = Some(rep.minimizer_error);
            if !solve.converged {
                non_converged = Some(solve.note.clone());
            }
        }
        "supersolution" => {
            let (rep, prof) = supersolution_pipeline(config)?;
            w.profile("supersolution", &prof)?;
            w.json("report.json", &rep)?;
            scalars.error = Some(rep.max_annulus_residual);
        }
        "induction" => {
            let (summary, trace) = induction_pipeline(config)?;
            write_induction(&mut w, &summary, &trace)?;
        }
        other => return Err(Error::Validation(format!("unknown experiment {other:?}"))),
    }
    let status = if non_converged.is_some() { "non-converged" } else { "ok" };
    let manifest = w.finish(config, status)?;
    if let Some(note) = non_converged {
        return Err(Error::NonConvergence(format!("{note}; artifacts kept in {}", dir.display())));
    }
    Ok(RunOutcome {
        dir: dir.to_path_buf(),
        manifest,
        scalars,
    })
}

pub const SWEEP_AXES: [&str; 6] = ["p", "m", "T", "R", "h", "L"];

/// Copy of `config` with one sweep axis set.
pub fn with_axis(config: &RunConfig, axis: &str, value: f64) -> Result<RunConfig> {
    let mut c = config.clone();
    let whole = |v: f64| -> Result<usize> {
        if v >= 0.0 && v.fract() == 0.0 {
            Ok(v as usize)
        } else {
            Err(Error::Validation(format!("axis {axis} needs whole numbers, got {v}")))
        }
    };
    match axis {
        "p" => c.params.p = value,
        "m" => c.params.m = value,
        "T" => {
            c.audit.t_window = whole(value)?;
            c.induction.t_window = whole(value)?;
        }
        "R" => c.audit.r_max = whole(value)?,
        "h" => c.grid.h = value,
        "L" => c.grid.half_width = vec![value],
        other => {
            return Err(Error::Validation(format!(
                "sweep axis {other:?} is not one of {}",
                SWEEP_AXES.join(", ")
            )))
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub status: String,
    pub exit_code: i32,
    #[serde(flatten)]
    pub scalars: RunScalars,
    pub message: String,
}

fn axis_label(value: f64) -> String {
    let s = format!("{value}");
    s.replace('-', "m")
}

/// Runs the pipeline once per value, each in `dir/<axis>=<value>`, and writes
/// `sweep.csv` plus `sweep.json`. Failed runs are kept as rows with their
/// exit code. `threads > 1` runs values on that many worker threads.
pub fn sweep(config: &RunConfig, axis: &str, values: &[f64], dir: &Path, threads: usize) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::Validation("sweep needs at least one value".into()));
    }
    if !SWEEP_AXES.contains(&axis) {
        return Err(Error::Validation(format!(
            "sweep axis {axis:?} is not one of {}",
            SWEEP_AXES.join(", ")
        )));
    }
    let configs = values
        .iter()
        .map(|&v| with_axis(config, axis, v))
        .collect::<Result<Vec<_>>>()?;
    fs::create_dir_all(dir)?;
    let one = |k: usize| -> SweepRow {
        let sub = dir.join(format!("{axis}={}", axis_label(values[k])));
        match run(&configs[k], &sub) {
            Ok(out) => SweepRow {
                value: values[k],
                status: "ok".into(),
                exit_code: 0,
                scalars: out.scalars,
                message: String::new(),
            },
            Err(e) => SweepRow {
                value: values[k],
                status: "failed".into(),
                exit_code: e.exit_code(),
                scalars: RunScalars::default(),
                message: e.to_string(),
            },
        }
    };
    let threads = threads.clamp(1, values.len());
    let mut rows: Vec<Option<SweepRow>> = vec![None; values.len()];
    if threads == 1 {
        for (k, slot) in rows.iter_mut().enumerate() {
            *slot = Some(one(k));
        }
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..threads)
                .map(|w| {
                    let one = &one;
                    s.spawn(move || {
                        (w..values.len())
                            .step_by(threads)
                            .map(|k| (k, one(k)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            for h in handles {
                for (k, row) in h.join().expect("sweep worker panicked") {
                    rows[k] = Some(row);
                }
            }
        });
    }
    let rows: Vec<SweepRow> = rows.into_iter().map(|r| r.expect("every value ran")).collect();
    let mut w = csv::Writer::from_path(dir.join("sweep.csv"))?;
    w.write_record([axis, "status", "exit_code", "delta", "c1", "C0", "gamma", "decay_exponent", "error", "message"])?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
    for r in &rows {
        w.write_record([
            format!("{}", r.value),
            r.status.clone(),
            r.exit_code.to_string(),
            opt(r.scalars.delta),
            opt(r.scalars.c1),
            opt(r.scalars.big_c0),
            opt(r.scalars.gamma),
            opt(r.scalars.decay_exponent),
            opt(r.scalars.error),
            r.message.clone(),
        ])?;
    }
    w.flush()?;
    fs::write(dir.join("sweep.json"), serde_json::to_string_pretty(&rows)? + "\n")?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip_and_defaults() {
        let c = RunConfig::from_json(r#"{"experiment": "profile-tails", "params": {"n": 1, "p": 2, "m": 4}}"#).unwrap();
        assert_eq!(c.params.lambda, 1.0);
        assert_eq!(c.grid.h, 0.25);
        let back = RunConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        assert!(RunConfig::from_json(r#"{"experiment": "tanh-1d", "bogus": 1}"#).is_err());
    }

    #[test]
    fn hash_ignores_output_dir() {
        let mut a = RunConfig::new("tanh-1d");
        let h = a.hash();
        a.out = Some("/tmp/x".into());
        assert_eq!(a.hash(), h);
        a.seed = 3;
        assert_ne!(a.hash(), h);
    }

    #[test]
    fn validation_cites_the_exponent_requirement() {
        let mut c = RunConfig::new("density-2d");
        c.params.m = 2.0;
        let e = c.validate().unwrap_err();
        assert_eq!(e.exit_code(), 1);
        assert!(e.to_string().contains("m > p"));
        assert!(RunConfig::new("nope").validate().is_err());
    }

    #[test]
    fn bc_spec_parsing() {
        assert_eq!(BcSpec::parse("planar").unwrap(), BcSpec::default());
        assert_eq!(BcSpec::parse("planar:-0.5:1").unwrap(), BcSpec::Planar { lo: -0.5, hi: 1.0 });
        assert_eq!(BcSpec::parse("dirichlet:1").unwrap(), BcSpec::Dirichlet { value: 1.0 });
        assert!(BcSpec::parse("robin").is_err());
    }

    #[test]
    fn tails_report_matches_formula() {
        let mut c = RunConfig::new("profile-tails");
        c.params.n = 1;
        let (rep, rows, _) = tails_pipeline(&c).unwrap();
        assert_eq!(rows.len(), 64);
        assert_eq!(rep.gamma_expected, 3.0);
        assert!((rep.gamma_fitted / 3.0 - 1.0).abs() < 0.05, "{}", rep.gamma_fitted);
        assert!((rep.decay_exponent - 1.0).abs() < 1e-6);
    }

    #[test]
    fn sweep_rejects_empty_and_unknown() {
        let dir = tempfile::tempdir().unwrap();
        let c = RunConfig::new("profile-tails");
        assert_eq!(sweep(&c, "m", &[], dir.path(), 1).unwrap_err().exit_code(), 1);
        assert!(sweep(&c, "z", &[1.0], dir.path(), 1).is_err());
    }

    #[test]
    fn sweep_keeps_failures_as_rows() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = RunConfig::new("profile-tails");
        c.params.n = 1;
        let rows = sweep(&c, "m", &[1.5, 4.0], dir.path(), 2).unwrap();
        assert_eq!(rows[0].status, "failed");
        assert_eq!(rows[0].exit_code, 1);
        assert_eq!(rows[1].status, "ok");
        assert!(dir.path().join("sweep.csv").exists());
        assert!(dir.path().join("m=4/manifest.json").exists());
    }
}
