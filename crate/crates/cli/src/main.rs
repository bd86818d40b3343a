//! `cloaksim`: sweeps, resonance tables, field slices, time-domain series and
//! the invariant suite, written as CSV or JSON reports.

mod report;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use cloak_core::acceptance::{run_criterion, structural_invariants, CRITERIA};
use cloak_core::config::CloakConfig;
use cloak_core::experiments::{
    blowup_probe, column, config_hash, fit_rate, log_product_spread, resonance_family, run_rho_sweep, run_time_sweep,
    RateModel, ResolvedSource, SweepSpec, TimeSweepSpec, VisibilityReport, EXTERIOR,
};
use cloak_core::helmholtz::{
    assemble_equivalent_medium, eval_field, expand_source, solve_modes, ExpandedSource, LayeredMedium, ModeKey,
};
use cloak_core::maxwell::{
    assemble_equivalent_medium_em, eval_em_field, expand_source_em, solve_multipoles, EmExpansion,
};
use cloak_core::resonance::{resonant_modes, ResonanceFamily};
use cloak_core::timesynth::{synthesize_timedomain, synthesize_timedomain_em, FrequencyGrid};
use cloak_core::CloakError;
use report::{Cell, Document, Format, Table};
use scenario::{Expectation, Scenario};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "cloaksim", version, about = "Approximate cloaking simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the rho list of the sweep and time-domain sections.
    #[arg(long, global = true, value_delimiter = ',')]
    rho_list: Option<Vec<f64>>,
    /// Overrides the mode truncation of every section.
    #[arg(long, global = true)]
    modes: Option<usize>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq, Debug)]
enum Command {
    /// rho sweep with rate fit, or a resonance blow-up probe.
    Sweep,
    /// Interior resonance tables with certification residuals.
    Resonance,
    /// Field values on a polar grid.
    Field,
    /// Probe time series and sup-in-time visibility.
    Timedomain,
    /// Structural invariant suite.
    Verify {
        /// Run every acceptance criterion instead.
        #[arg(long)]
        all: bool,
    },
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Sweep => "sweep",
            Command::Resonance => "resonance",
            Command::Field => "field",
            Command::Timedomain => "timedomain",
            Command::Verify { .. } => "verify",
        }
    }
}

/// Failure classes mapped to exit codes 1, 2 and 3.
#[derive(Debug)]
enum Failure {
    Assertion(String),
    Config(String),
    Solver(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Assertion(_) => 1,
            Failure::Config(_) => 2,
            Failure::Solver(_) => 3,
        }
    }
}

impl From<CloakError> for Failure {
    fn from(e: CloakError) -> Self {
        let mut inner = &e;
        loop {
            match inner {
                CloakError::Sweep { source, .. } | CloakError::Frequency { source, .. } => inner = source,
                CloakError::InvalidInput(_) | CloakError::NotResonant { .. } => return Failure::Config(e.to_string()),
                _ => return Failure::Solver(e.to_string()),
            }
        }
    }
}

fn io_failure(e: std::io::Error) -> Failure {
    Failure::Solver(format!("cannot write report: {e}"))
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    config_path: Option<String>,
    output_dir: String,
    tool_version: String,
    config_hash: String,
    wall_time_seconds: f64,
}

struct Context {
    out: PathBuf,
    format: Format,
    hash: String,
}

impl Context {
    fn write(&self, stem: &str, table: Table) -> Result<(), Failure> {
        let doc = Document { manifest: "manifest.json".into(), config_hash: self.hash.clone(), table };
        report::write(&self.out, stem, self.format, &doc).map_err(io_failure)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Assertion(m) | Failure::Config(m) | Failure::Solver(m)) = &f;
            let kind = match f {
                Failure::Assertion(_) => "acceptance failure",
                Failure::Config(_) => "config error",
                Failure::Solver(_) => "solver failure",
            };
            eprintln!("{kind}: {m}");
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let start = Instant::now();
    if let Some(k) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build_global()
            .map_err(|e| Failure::Config(format!("--jobs: {e}")))?;
    }
    if let Some(list) = &cli.rho_list {
        if list.is_empty() {
            return Err(Failure::Config("--rho-list is empty".into()));
        }
    }
    let scenario = match (&cli.config, cli.command) {
        (Some(p), _) => {
            let mut s = scenario::load(p).map_err(Failure::Config)?;
            if let Some(list) = &cli.rho_list {
                s.override_rho_list(list);
            }
            if let Some(n) = cli.modes {
                s.override_modes(n);
            }
            Some(s)
        }
        (None, Command::Verify { .. }) => None,
        (None, _) => return Err(Failure::Config("--config is required".into())),
    };
    std::fs::create_dir_all(&cli.out).map_err(io_failure)?;
    let hash = config_hash(&(cli.command.name(), &scenario)).map_err(Failure::from)?;
    let ctx = Context { out: cli.out.clone(), format: cli.format, hash: hash.clone() };
    let outcome = match (cli.command, &scenario) {
        (Command::Verify { all }, _) => verify(&ctx, all),
        (cmd, Some(s)) => match cmd {
            Command::Sweep => sweep(&ctx, s),
            Command::Resonance => resonance(&ctx, s),
            Command::Field => field(&ctx, s),
            Command::Timedomain => timedomain(&ctx, s),
            Command::Verify { .. } => unreachable!(),
        },
        (_, None) => unreachable!(),
    };
    let manifest = RunManifest {
        command: cli.command.name().into(),
        config_path: cli.config.as_ref().map(|p| p.display().to_string()),
        output_dir: cli.out.display().to_string(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        config_hash: hash,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(cli.out.join("manifest.json"), text + "\n").map_err(io_failure)?;
    outcome
}

fn section<'a, T>(s: &'a Option<T>, name: &str) -> Result<&'a T, Failure> {
    s.as_ref().ok_or_else(|| Failure::Config(format!("scenario has no [{name}] section")))
}

fn fit_cells(points: &[(f64, f64)], model: RateModel) -> Cell {
    match fit_rate(points, model) {
        Ok(f) => Cell::Num(f.exponent),
        Err(_) => Cell::Text("nan".into()),
    }
}

fn sweep_table(reports: &[VisibilityReport], model: RateModel) -> Table {
    let mut t = Table::new(&["rho", "norm_L2", "norm_H1", "interior_L2", "interior_H1"]);
    for r in reports {
        t.push(vec![
            r.rho.into(),
            r.exterior_l2.into(),
            r.exterior_h1.into(),
            r.interior_l2.into(),
            r.interior_h1.into(),
        ]);
    }
    if reports.len() >= 3 {
        let picks: [fn(&VisibilityReport) -> f64; 4] =
            [|r| r.exterior_l2, |r| r.exterior_h1, |r| r.interior_l2, |r| r.interior_h1];
        let mut row = vec![Cell::Text("slope".into())];
        row.extend(picks.iter().map(|p| fit_cells(&column(reports, p), model)));
        t.push(row);
    }
    t
}

fn sweep(ctx: &Context, s: &Scenario) -> Result<(), Failure> {
    let sec = section(&s.sweep, "sweep")?;
    let spec = SweepSpec {
        config: s.config.clone(),
        omega: sec.omega,
        rho_list: sec.rho_list.clone(),
        source: sec.source.clone(),
        n_max: sec.n_max,
    };
    let mut failures = Vec::new();
    let reports = if sec.probe {
        let probe = blowup_probe(&spec)?;
        let mut t =
            Table::new(&["rho", "scaled_interior", "bounded_below", "interior_growing", "exterior_non_decaying"]);
        let flag = |b: bool| Cell::Num(if b { 1.0 } else { 0.0 });
        for (r, v) in probe.sweep.reports.iter().zip(&probe.scaled_interior) {
            t.push(vec![
                r.rho.into(),
                (*v).into(),
                flag(probe.bounded_below),
                flag(probe.interior_growing),
                flag(probe.exterior_non_decaying),
            ]);
        }
        ctx.write("probe", t)?;
        for e in &sec.expect {
            let ok = match e {
                Expectation::BoundedBelow => probe.bounded_below,
                Expectation::InteriorGrowing => probe.interior_growing,
                Expectation::ExteriorNonDecaying => probe.exterior_non_decaying,
            };
            if !ok {
                failures.push(format!("{e:?} does not hold"));
            }
        }
        probe.sweep.reports
    } else {
        run_rho_sweep(&spec)?.reports
    };
    ctx.write("sweep", sweep_table(&reports, sec.model))?;
    if let Some([lo, hi]) = sec.expect_slope {
        let pts = column(&reports, |r| r.exterior_h1);
        let (v, ok) = match sec.model {
            RateModel::PowerLaw => {
                let p = fit_rate(&pts, RateModel::PowerLaw)?.exponent;
                (p, p >= lo && p <= hi)
            }
            RateModel::Logarithmic => {
                let spread = log_product_spread(&pts);
                (spread, spread <= hi)
            }
        };
        println!("rate statistic {v:.6} (window [{lo}, {hi}])");
        if !ok {
            failures.push(format!("rate statistic {v} outside [{lo}, {hi}]"));
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Assertion(failures.join("; ")))
    }
}

fn resonance(ctx: &Context, s: &Scenario) -> Result<(), Failure> {
    let sec = section(&s.resonance, "resonance")?;
    let params = (s.config.object.lambda1, s.config.object.lambda2);
    let families: Vec<(ResonanceFamily, &str)> = match resonance_family(&s.config) {
        ResonanceFamily::MaxwellTE | ResonanceFamily::MaxwellTM => {
            vec![(ResonanceFamily::MaxwellTE, "resonance_te"), (ResonanceFamily::MaxwellTM, "resonance_tm")]
        }
        f => vec![(f, "resonance")],
    };
    for (family, stem) in families {
        let mut t = Table::new(&["order", "index", "omega", "k", "certification_residual"]);
        for &n in &sec.orders {
            let modes = resonant_modes(family, params, ModeKey::zonal(n), (sec.window[0], sec.window[1]))?;
            for (i, m) in modes.iter().enumerate() {
                t.push(vec![
                    (n as f64).into(),
                    (i as f64).into(),
                    m.omega.into(),
                    m.k.into(),
                    m.certification_residual()?.into(),
                ]);
            }
        }
        ctx.write(stem, t)?;
    }
    Ok(())
}

fn grid_points(dim: usize, r_max: f64, nr: usize, na: usize) -> Vec<(f64, f64, [f64; 3])> {
    let mut out = Vec::new();
    for i in 0..nr {
        let r = r_max * (i as f64 + 0.5) / nr as f64;
        for j in 0..na {
            let theta = if dim == 3 {
                std::f64::consts::PI * j as f64 / (na.max(2) - 1) as f64
            } else {
                2.0 * std::f64::consts::PI * j as f64 / na as f64
            };
            let x = if dim == 3 {
                [r * theta.sin(), 0.0, r * theta.cos()]
            } else {
                [r * theta.cos(), r * theta.sin(), 0.0]
            };
            out.push((r, theta, x));
        }
    }
    out
}

fn expand_parts_acoustic(
    parts: &[(cloak_core::helmholtz::SourceSpec, bool)],
    exterior_only: bool,
    omega: f64,
    dim: usize,
    n_max: usize,
) -> Result<ExpandedSource, Failure> {
    let mut out = ExpandedSource { modes: Vec::new(), tail_estimate: 0.0, warning: None };
    for (p, ext) in parts {
        if exterior_only && !ext {
            continue;
        }
        out.modes.extend(expand_source(p, omega, dim, n_max, EXTERIOR.r_out)?.modes);
    }
    Ok(out)
}

fn expand_parts_em(
    parts: &[(cloak_core::maxwell::CurrentSpec, bool)],
    omega: f64,
    n_max: usize,
) -> Result<EmExpansion, Failure> {
    let mut out = EmExpansion { modes: Vec::new(), tail_estimate: 0.0, warning: None };
    for (p, _) in parts {
        out.modes.extend(expand_source_em(p, omega, n_max, EXTERIOR.r_out)?.modes);
    }
    Ok(out)
}

fn field(ctx: &Context, s: &Scenario) -> Result<(), Failure> {
    let sec = section(&s.field, "field")?;
    if !(sec.r_max > 0.0 && sec.radial_points > 0 && sec.angular_points > 0) {
        return Err(Failure::Config("field grid needs r_max > 0 and positive point counts".into()));
    }
    let c: &CloakConfig = &s.config;
    let omega = sec.omega.resolve(c)?;
    let points = grid_points(c.dimension, sec.r_max, sec.radial_points, sec.angular_points);
    match sec.source.resolve(c, omega)? {
        ResolvedSource::Acoustic(parts) => {
            let all = expand_parts_acoustic(&parts, false, omega, c.dimension, sec.n_max)?;
            let ext = expand_parts_acoustic(&parts, true, omega, c.dimension, sec.n_max)?;
            let cloaked = solve_modes(&assemble_equivalent_medium(c, omega)?, omega, &all)?;
            let free = solve_modes(&LayeredMedium::homogeneous(c.dimension, omega), omega, &ext)?;
            let mut t = Table::new(&["r", "theta", "x", "y", "z", "re_u", "im_u", "re_u_free", "im_u_free"]);
            for (r, theta, x) in points {
                let u = eval_field(&cloaked, &x)?;
                let f = eval_field(&free, &x)?;
                t.push(vec![
                    r.into(),
                    theta.into(),
                    x[0].into(),
                    x[1].into(),
                    x[2].into(),
                    u.re.into(),
                    u.im.into(),
                    f.re.into(),
                    f.im.into(),
                ]);
            }
            ctx.write("field", t)
        }
        ResolvedSource::Maxwell(parts) => {
            let all = expand_parts_em(&parts, omega, sec.n_max)?;
            let cloaked = solve_multipoles(&assemble_equivalent_medium_em(c, omega)?, omega, &all)?;
            let mut cols = vec!["r", "theta", "x", "y", "z"];
            let names = [
                "re_Ex", "im_Ex", "re_Ey", "im_Ey", "re_Ez", "im_Ez", "re_Hx", "im_Hx", "re_Hy", "im_Hy", "re_Hz",
                "im_Hz",
            ];
            cols.extend(names);
            let mut t = Table::new(&cols);
            // the uniaxial cloak layer is not sampled
            for (r, theta, x) in points.into_iter().filter(|p| !(p.0 >= 1.0 && p.0 < 2.0)) {
                let (e, h) = eval_em_field(&cloaked, &x)?;
                let mut row: Vec<Cell> = vec![r.into(), theta.into(), x[0].into(), x[1].into(), x[2].into()];
                for v in e.iter().chain(&h) {
                    row.push(v.re.into());
                    row.push(v.im.into());
                }
                t.push(row);
            }
            ctx.write("field", t)
        }
    }
}

fn timedomain(ctx: &Context, s: &Scenario) -> Result<(), Failure> {
    let sec = section(&s.timedomain, "timedomain")?;
    let c = &s.config;
    let r_source =
        sec.source.outer_radius().ok_or_else(|| Failure::Config("time-domain sources need bounded support".into()))?;
    let r_probe = sec.probes.iter().map(|p| p.iter().map(|v| v * v).sum::<f64>().sqrt()).fold(EXTERIOR.r_out, f64::max);
    let grid = match sec.window {
        Some(t) => FrequencyGrid::with_window(&sec.pulse, t, sec.frequencies)?,
        None => FrequencyGrid::for_pulse(&sec.pulse, r_probe, r_source, sec.frequencies)?,
    };
    let result = match sec.source.resolve(c, 1.0)? {
        ResolvedSource::Acoustic(parts) => {
            let [(src, true)] = parts.as_slice() else {
                return Err(Failure::Config("time-domain source must be one part outside B_2".into()));
            };
            synthesize_timedomain(c, src, sec.n_max, &sec.pulse, &grid, EXTERIOR, &sec.probes)?
        }
        ResolvedSource::Maxwell(parts) => {
            let [(cur, true)] = parts.as_slice() else {
                return Err(Failure::Config("time-domain source must be one part outside B_2".into()));
            };
            if !sec.probes.is_empty() {
                return Err(Failure::Config("Maxwell time-domain runs take no point probes".into()));
            }
            synthesize_timedomain_em(c, cur, sec.n_max, &sec.pulse, &grid, EXTERIOR)?
        }
    };
    let mut cols = vec!["t".to_string(), "visibility".into(), "energy".into()];
    for i in 0..sec.probes.len() {
        cols.push(format!("probe{i}_cloaked"));
        cols.push(format!("probe{i}_free"));
    }
    let mut t = Table { columns: cols, rows: Vec::new() };
    for (j, time) in result.times.iter().enumerate() {
        let mut row: Vec<Cell> = vec![(*time).into(), result.visibility[j].into(), result.energy[j].into()];
        for (a, b) in result.probes_cloaked.iter().zip(&result.probes_free) {
            row.push(a[j].into());
            row.push(b[j].into());
        }
        t.push(row);
    }
    ctx.write("timedomain", t)?;
    let Some(list) = &sec.rho_list else {
        return Ok(());
    };
    let spec = TimeSweepSpec {
        config: c.clone(),
        pulse: sec.pulse,
        frequencies: sec.frequencies,
        rho_list: Some(list.clone()),
        source: sec.source.clone(),
        n_max: sec.n_max,
        window: sec.window,
    };
    let sweep = run_time_sweep(&spec)?;
    let pts: Vec<(f64, f64)> = sweep.reports.iter().map(|r| (r.rho, r.sup_visibility)).collect();
    let mut t = Table::new(&["rho", "sup_visibility", "active_frequencies"]);
    for r in &sweep.reports {
        t.push(vec![r.rho.into(), r.sup_visibility.into(), (r.active_frequencies as f64).into()]);
    }
    if pts.len() >= 3 {
        t.push(vec!["slope".into(), fit_cells(&pts, RateModel::PowerLaw), Cell::Text("nan".into())]);
    }
    ctx.write("timedomain_sweep", t)?;
    if let Some([lo, hi]) = sec.expect_slope {
        let p = fit_rate(&pts, RateModel::PowerLaw)?.exponent;
        println!("time-domain rate {p:.6} (window [{lo}, {hi}])");
        if !(p >= lo && p <= hi) {
            return Err(Failure::Assertion(format!("time-domain rate {p} outside [{lo}, {hi}]")));
        }
    }
    Ok(())
}

fn verify(ctx: &Context, all: bool) -> Result<(), Failure> {
    let mut failed = Vec::new();
    if all {
        let mut t = Table::new(&["criterion", "passed", "seconds", "budget_seconds"]);
        for id in 1..=CRITERIA {
            let r = run_criterion(id).expect("known criterion");
            println!("{}", r.line());
            if !r.passed {
                failed.push(format!("criterion {id}"));
            }
            t.push(vec![
                (id as f64).into(),
                (if r.passed { 1.0 } else { 0.0 }).into(),
                r.seconds.into(),
                r.budget_seconds.into(),
            ]);
        }
        ctx.write("acceptance", t)?;
    } else {
        let mut t = Table::new(&["check", "value", "tolerance", "passed"]);
        for c in structural_invariants() {
            println!("{} {:.3e} <= {:.1e}: {}", c.name, c.value, c.tolerance, if c.passed { "ok" } else { "FAILED" });
            if !c.passed {
                failed.push(c.name.clone());
            }
            t.push(vec![
                c.name.replace(' ', "_").as_str().into(),
                c.value.into(),
                c.tolerance.into(),
                (if c.passed { 1.0 } else { 0.0 }).into(),
            ]);
        }
        ctx.write("verify", t)?;
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Assertion(format!("failed: {}", failed.join(", "))))
    }
}
