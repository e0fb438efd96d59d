use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dgl_core::audit::measured_zero;
use dgl_core::error::{Error, Result};
use dgl_core::pipeline::{audit_field, run, sweep, write_audit, ArtifactWriter, BcSpec, RunConfig, SWEEP_AXES};
use dgl_core::profile1d::ProfileKind;
use dgl_core::snapshot::read_snapshot;

/// Minimizers and density-estimate audits for degenerate Ginzburg-Landau energies.
#[derive(Parser)]
#[command(name = "dgl", version, about)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run config; command line flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: $DGL_OUT_DIR/<experiment>-<hash>, or ./dgl-out/...).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a one-dimensional profile to CSV.
    Profile(ProfileArgs),
    /// Minimize the discrete energy and write a snapshot.
    Minimize(Overrides),
    /// Audit a stored snapshot.
    Audit(AuditArgs),
    /// Worst-case propagation of the discrete induction inequality.
    SimulateInduction(InductionArgs),
    /// Run a pipeline once per value of one parameter.
    Sweep(SweepArgs),
    /// Run the experiment named in the config (or by --experiment).
    Run(Overrides),
}

#[derive(Args, Default)]
struct Overrides {
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    m: Option<f64>,
    /// Grid dimension; also sets the energy dimension.
    #[arg(long)]
    dim: Option<usize>,
    /// Box half-widths, one value or one per axis.
    #[arg(long = "box", value_delimiter = ',')]
    half_width: Option<Vec<f64>>,
    #[arg(long)]
    h: Option<f64>,
    /// planar, planar:<lo>:<hi>, natural or dirichlet:<v>.
    #[arg(long)]
    bc: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long = "T")]
    t_window: Option<usize>,
    #[arg(long = "Rmax")]
    r_max: Option<usize>,
    /// Random competitors for the Q-minimality audit.
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Comparison,
    Heteroclinic,
    Supersolution,
}

#[derive(Args)]
struct ProfileArgs {
    #[arg(long, value_enum, default_value = "comparison")]
    kind: KindArg,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    m: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    h_level: Option<f64>,
    #[arg(long)]
    t_near: Option<f64>,
    #[arg(long)]
    t_far: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args)]
struct AuditArgs {
    /// Snapshot header (`.json`) or stem.
    #[arg(long)]
    snapshot: PathBuf,
    /// Ball center, comma separated; defaults to a measured zero near the origin.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    center: Option<Vec<f64>>,
    #[arg(long = "T")]
    t_window: Option<usize>,
    #[arg(long = "R0")]
    r0: Option<usize>,
    #[arg(long = "Rmax")]
    r_max: Option<usize>,
    /// Radii for the main inequality.
    #[arg(long, value_delimiter = ',')]
    radii: Option<Vec<usize>>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    m: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Extra copy of the JSON report.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct InductionArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long = "T")]
    t_window: Option<usize>,
    #[arg(long = "C0")]
    big_c0: Option<f64>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    r_start: Option<usize>,
    #[arg(long = "Rstop")]
    r_stop: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    /// One of p, m, T, R, h, L.
    #[arg(long)]
    axis: String,
    /// Comma separated values (`--values=-1,2` for negative ones).
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    values: Vec<f64>,
    #[command(flatten)]
    overrides: Overrides,
}

fn base_config(common: &Common, experiment: Option<&str>) -> Result<RunConfig> {
    let mut config = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => match experiment {
            Some(e) => RunConfig::new(e),
            None => return Err(Error::Validation("give --config or --experiment".into())),
        },
    };
    if let Some(e) = experiment {
        config.experiment = e.to_string();
    }
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(out) = &common.out {
        config.out = Some(out.clone());
    }
    Ok(config)
}

fn apply(config: &mut RunConfig, o: &Overrides) -> Result<()> {
    if let Some(p) = o.p {
        config.params.p = p;
    }
    if let Some(m) = o.m {
        config.params.m = m;
    }
    if let Some(d) = o.dim {
        config.grid.dim = d;
        config.params.n = d;
    }
    if let Some(b) = &o.half_width {
        config.grid.half_width = b.clone();
    }
    if let Some(h) = o.h {
        config.grid.h = h;
    }
    if let Some(bc) = &o.bc {
        config.bc = BcSpec::parse(bc)?;
    }
    if let Some(t) = o.tol {
        config.solver.tol = t;
    }
    if let Some(k) = o.max_iter {
        config.solver.max_iter = k;
    }
    if let Some(a) = o.noise {
        config.solver.init_noise = a;
    }
    if let Some(t) = o.t_window {
        config.audit.t_window = t;
        config.induction.t_window = t;
    }
    if let Some(r) = o.r_max {
        config.audit.r_max = r;
    }
    if let Some(t) = o.trials {
        config.audit.trials = t;
    }
    Ok(())
}

fn output_dir(config: &RunConfig) -> PathBuf {
    if let Some(out) = &config.out {
        return out.clone();
    }
    let root = std::env::var_os("DGL_OUT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("dgl-out"));
    root.join(format!("{}-{}", config.experiment, &config.hash()[..12]))
}

fn say(common: &Common, text: &str) {
    if !common.quiet {
        println!("{text}");
    }
}

fn run_config(common: &Common, config: &RunConfig) -> Result<()> {
    let dir = output_dir(config);
    let outcome = run(config, &dir)?;
    say(common, &format!("{}: wrote {}", config.experiment, outcome.manifest.display()));
    Ok(())
}

fn profile(common: &Common, a: &ProfileArgs) -> Result<()> {
    let mut config = base_config(common, Some("profile"))?;
    let pr = &mut config.profile;
    pr.kind = match a.kind {
        KindArg::Comparison => ProfileKind::Comparison,
        KindArg::Heteroclinic => ProfileKind::Heteroclinic,
        KindArg::Supersolution => ProfileKind::Supersolution,
    };
    if let Some(v) = a.epsilon {
        pr.epsilon = v;
    }
    if let Some(v) = a.h_level {
        pr.h_level = v;
    }
    if let Some(v) = a.t_near {
        pr.t_near = v;
    }
    if let Some(v) = a.t_far {
        pr.t_far = v;
    }
    if let Some(v) = a.samples {
        pr.samples = v;
    }
    if let Some(p) = a.p {
        config.params.p = p;
    }
    if let Some(m) = a.m {
        config.params.m = m;
    }
    run_config(common, &config)
}

fn audit(common: &Common, a: &AuditArgs) -> Result<()> {
    let u = read_snapshot(&a.snapshot)?;
    let mut config = base_config(common, Some("density"))?;
    config.experiment = "audit".into();
    config.params.n = u.grid().dim();
    config.grid.dim = u.grid().dim();
    if let Some(p) = a.p {
        config.params.p = p;
    }
    if let Some(m) = a.m {
        config.params.m = m;
    }
    config.params.validate()?;
    config.params.require_degenerate()?;
    let au = &mut config.audit;
    if let Some(t) = a.t_window {
        au.t_window = t;
    }
    if let Some(r) = a.r0 {
        au.r0 = r;
    }
    if let Some(r) = a.r_max {
        au.r_max = r;
    }
    if let Some(r) = &a.radii {
        au.main_radii = r.clone();
    }
    if let Some(t) = a.trials {
        au.trials = t;
    }
    let center = match &a.center {
        Some(c) => c.clone(),
        None => measured_zero(&u, &vec![0.0; u.grid().dim()])?,
    };
    let report = audit_field(&config, &u, &center)?;
    let dir = output_dir(&config);
    let mut w = ArtifactWriter::new(&dir)?;
    w.json("config.json", &config)?;
    write_audit(&mut w, &report)?;
    let manifest = w.finish(&config, "ok")?;
    if let Some(path) = &a.report {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, serde_json::to_string_pretty(&report)? + "\n")?;
    }
    say(
        common,
        &format!("audit: delta = {:.4}; wrote {}", report.density.delta, manifest.display()),
    );
    Ok(())
}

fn simulate_induction(common: &Common, a: &InductionArgs) -> Result<()> {
    let mut config = base_config(common, Some("induction"))?;
    let s = &mut config.induction;
    if let Some(v) = a.n {
        s.n = v;
    }
    if let Some(v) = a.sigma {
        s.sigma = v;
    }
    if let Some(v) = a.t_window {
        s.t_window = v;
    }
    if let Some(v) = a.big_c0 {
        s.big_c0 = v;
    }
    if let Some(v) = a.c1 {
        s.c1 = v;
    }
    if a.gamma.is_some() {
        s.gamma = a.gamma;
    }
    if let Some(v) = a.r_start {
        s.r_start = v;
    }
    if let Some(v) = a.r_stop {
        s.r_stop = v;
    }
    run_config(common, &config)
}

fn sweep_cmd(common: &Common, a: &SweepArgs) -> Result<()> {
    if a.values.is_empty() {
        return Err(Error::Validation("sweep needs at least one value".into()));
    }
    if !SWEEP_AXES.contains(&a.axis.as_str()) {
        return Err(Error::Validation(format!(
            "sweep axis {:?} is not one of {}",
            a.axis,
            SWEEP_AXES.join(", ")
        )));
    }
    let mut config = base_config(common, a.overrides.experiment.as_deref())?;
    apply(&mut config, &a.overrides)?;
    let dir = match &config.out {
        Some(d) => d.clone(),
        None => output_dir(&config).with_extension(format!("sweep-{}", a.axis)),
    };
    config.out = None;
    let rows = sweep(&config, &a.axis, &a.values, &dir, common.threads)?;
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    say(
        common,
        &format!("sweep over {}: {} runs, {failed} failed; wrote {}", a.axis, rows.len(), dir.join("sweep.csv").display()),
    );
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    let common = &cli.common;
    match &cli.command {
        Command::Profile(a) => profile(common, a),
        Command::Minimize(o) => {
            let mut config = base_config(common, Some("minimize"))?;
            apply(&mut config, o)?;
            run_config(common, &config)
        }
        Command::Audit(a) => audit(common, a),
        Command::SimulateInduction(a) => simulate_induction(common, a),
        Command::Sweep(a) => sweep_cmd(common, a),
        Command::Run(o) => {
            let mut config = base_config(common, o.experiment.as_deref())?;
            apply(&mut config, o)?;
            run_config(common, &config)
        }
    }
}

fn report_error(e: &Error) {
    let body = serde_json::json!({
        "error": e.kind(),
        "message": e.to_string(),
        "exit_code": e.exit_code(),
    });
    eprintln!("{body}");
}

fn main() -> ExitCode {
    // Usage errors share the validation exit code; 2 is reserved for non-convergence.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report_error(&e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
