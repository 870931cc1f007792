//! Command runners behind the `hybrid-magnonics` binary.
//!
//! Every runner resolves the configuration first (file, then overrides), so
//! invalid keys fail before any computation. Output payloads depend only on
//! the resolved configuration; the manifest timestamp is the only exception.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::centers::{analyze_all, center_window};
use crate::coupling::{sweep_multimode, sweep_pairwise, track_branches};
use crate::fitting::{
    decompose_coupling, extract_ridges, fit_dispersion, synthetic_ridges, FitResult, KKind,
    RidgeData,
};
use crate::io::config::Config;
use crate::io::manifest::{write_outputs, OutputKind, OutputRecord};
use crate::io::tables::{
    branches_csv, fmt_num, kittel_csv, phase_boundary_csv, phase_cells_csv, read_ridges_csv,
    read_spectrum_csv, ridges_csv, spectrum_csv, spectrum_json, trace_csv,
};
use crate::io::DEFAULT_CONFIG;
use crate::magnon::{kittel_frequency, FieldPoint};
use crate::phasemap::phase_diagram;
use crate::transmission::{linspace, sweep_spectrum, Variant};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "hybrid-magnonics",
    version,
    about = "Magnon-mediated photon–photon coupling simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML configuration; the bundled three-ring device when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Dotted-key override, e.g. `couplings.*.k_mp=0`. Repeatable.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Worker threads for sweeps and fit restarts (0 = all cores).
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,
    /// Grid size: fields×freqs (sweep), damping×phase (phase-diagram),
    /// fields (kittel, dispersion; W ignored).
    #[arg(long, global = true, value_name = "HxW")]
    pub grid: Option<GridShape>,
    /// Restricts the sweep to one transmission model.
    #[arg(long, global = true, value_name = "VARIANT")]
    pub variant: Option<Variant>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Kittel FMR curve f(μ0H).
    Kittel,
    /// |S21| maps over the field–frequency plane.
    Sweep,
    /// Complex branch trajectories around each coupling centre.
    Dispersion,
    /// CIT/CIA phase diagrams over (ψ, |β − α_eff|).
    PhaseDiagram,
    /// Fits K and α_cp to a dispersion.
    Fit(FitArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct FitArgs {
    /// Ridge CSV (mu0_H_T, f_upper_GHz, f_lower_GHz, weight).
    #[arg(long, value_name = "PATH", conflicts_with = "spectrum")]
    pub ridges: Option<PathBuf>,
    /// Spectrum CSV to extract ridges from; needs a window.
    #[arg(long, value_name = "PATH")]
    pub spectrum: Option<PathBuf>,
    /// Frequency window for ridge extraction, `F0,F1` in GHz.
    #[arg(long, value_name = "F0,F1")]
    pub window: Option<Window>,
    /// Photon mode label to fit against.
    #[arg(long, value_name = "LABEL")]
    pub mode: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridShape {
    pub rows: usize,
    pub cols: usize,
}

impl FromStr for GridShape {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (a, b) = s
            .split_once(['x', 'X', '×'])
            .ok_or_else(|| format!("expected HxW, got {s:?}"))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("bad grid size {t:?}"))
        };
        let (rows, cols) = (parse(a)?, parse(b)?);
        if rows == 0 || cols == 0 {
            return Err("grid sizes must be positive".into());
        }
        Ok(GridShape { rows, cols })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window(pub f64, pub f64);

impl FromStr for Window {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (a, b) = s
            .split_once([',', ':'])
            .ok_or_else(|| format!("expected F0,F1, got {s:?}"))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad frequency {t:?}"))
        };
        let w = Window(parse(a)?, parse(b)?);
        if !(w.0 < w.1) {
            return Err("window needs F0 < F1".into());
        }
        Ok(w)
    }
}

impl CommonArgs {
    pub fn load(&self) -> Result<Config> {
        match &self.config {
            Some(p) => crate::io::load_config_with(p, &self.overrides),
            None => Config::from_toml_str(DEFAULT_CONFIG, &self.overrides),
        }
    }

    fn workers(&self) -> usize {
        self.workers.unwrap_or(0)
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let level = match cli.common.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::from_default_env()
        .filter_level(level)
        .format_timestamp(None)
        .try_init();
    match run(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs one subcommand; returns the files written, manifests included.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let cfg = cli.common.load()?;
    let c = &cli.common;
    match &cli.command {
        Command::Kittel => run_kittel(&cfg, c),
        Command::Sweep => run_sweep(&cfg, c),
        Command::Dispersion => run_dispersion(&cfg, c),
        Command::PhaseDiagram => run_phase_diagram(&cfg, c),
        Command::Fit(args) => run_fit(&cfg, c, args),
    }
}

fn fields(range: [f64; 2], points: usize) -> Result<Vec<FieldPoint>> {
    linspace(range[0], range[1], points)
        .into_iter()
        .map(FieldPoint::new)
        .collect()
}

pub fn run_kittel(cfg: &Config, c: &CommonArgs) -> Result<Vec<PathBuf>> {
    let points = c.grid.map_or(cfg.kittel.points, |g| g.rows);
    let range = cfg.kittel.field_range;
    if points > 1 && !(range[0] < range[1]) {
        return Err(Error::Config(format!(
            "kittel.field_range {range:?} has zero length"
        )));
    }
    let magnon = cfg.magnon()?;
    let curve: Vec<(f64, f64)> = fields(range, points)?
        .into_iter()
        .map(|h| (h.tesla(), kittel_frequency(h, &magnon)))
        .collect();
    let record = OutputRecord::new(OutputKind::Kittel, cfg);
    write_outputs(
        &c.out,
        "kittel",
        record,
        &[("kittel.csv".into(), kittel_csv(&curve)?)],
    )
}

pub fn run_sweep(cfg: &Config, c: &CommonArgs) -> Result<Vec<PathBuf>> {
    let sys = cfg.system()?;
    let grid = cfg.sweep_grid(c.grid.map(|g| (g.rows, g.cols)))?;
    let variants = match c.variant {
        Some(v) => vec![v],
        None => cfg.sweep.variants.clone(),
    };
    let hash = cfg.snapshot_hash();
    let mut written = Vec::new();
    for v in variants {
        log::info!("sweep {}: {:?} grid", v.as_str(), grid.shape());
        let mut map = sweep_spectrum(&sys, &grid, v, c.workers())?;
        map.metadata.snapshot = Some(hash.clone());
        if !map.saturated.is_empty() {
            log::warn!(
                "{} cells sat on a pole and were clamped",
                map.saturated.len()
            );
        }
        let stem = format!("spectrum_{}", v.as_str());
        let payloads = [
            (format!("{stem}.csv"), spectrum_csv(&map)?),
            (format!("{stem}.json"), spectrum_json(&map)?),
        ];
        written.extend(write_outputs(
            &c.out,
            &stem,
            OutputRecord::new(OutputKind::Spectrum, cfg),
            &payloads,
        )?);
    }
    Ok(written)
}

pub fn run_dispersion(cfg: &Config, c: &CommonArgs) -> Result<Vec<PathBuf>> {
    let sys = cfg.system()?;
    let points = c.grid.map_or(cfg.dispersion.points, |g| g.rows);
    let mut payloads = Vec::new();
    for (n, mode) in sys.modes().iter().enumerate() {
        let window = center_window(&sys, n, cfg.dispersion.half_width, points)?;
        let b = track_branches(sweep_pairwise(&sys, n, &window));
        payloads.push((
            format!("branches_center{}.csv", mode.label),
            branches_csv(&b)?,
        ));
    }
    let reports = analyze_all(&sys)?;
    for r in &reports {
        log::info!(
            "centre {}: {} (real {:?}, imag {:?})",
            r.mode,
            r.regime.as_str(),
            r.real,
            r.imag
        );
    }
    let mut json =
        serde_json::to_string_pretty(&reports).map_err(|e| Error::Data(e.to_string()))?;
    json.push('\n');
    payloads.push(("centers.json".into(), json));
    if cfg.dispersion.multimode {
        let s = &cfg.sweep;
        let axis = fields(s.field_range, c.grid.map_or(s.field_points, |g| g.rows))?;
        let b = track_branches(sweep_multimode(&sys, &axis)?);
        payloads.push(("branches_multimode.csv".into(), branches_csv(&b)?));
    }
    write_outputs(
        &c.out,
        "branches",
        OutputRecord::new(OutputKind::Branches, cfg),
        &payloads,
    )
}

pub fn run_phase_diagram(cfg: &Config, c: &CommonArgs) -> Result<Vec<PathBuf>> {
    let mut payloads = Vec::new();
    for spec in cfg.phase_diagram_specs(c.grid.map(|g| (g.rows, g.cols))) {
        let pd = phase_diagram(&spec, c.workers())?;
        let stem = format!("phase_sigma{}_k{}", fmt_num(spec.sigma), fmt_num(spec.k));
        log::info!("{stem}: boundary with {} points", pd.boundary.len());
        payloads.push((format!("{stem}_cells.csv"), phase_cells_csv(&pd)?));
        payloads.push((format!("{stem}_boundary.csv"), phase_boundary_csv(&pd)));
    }
    write_outputs(
        &c.out,
        "phase_diagram",
        OutputRecord::new(OutputKind::PhaseDiagram, cfg),
        &payloads,
    )
}

/// Fit outcome as written to `fit_summary.toml`.
#[derive(Debug, Clone, Serialize)]
pub struct FitSummary {
    pub mode: usize,
    pub source: String,
    pub k_kind: KKind,
    pub k_abs: f64,
    pub k_re: f64,
    pub k_im: f64,
    pub alpha_cp: f64,
    pub crossing_field_t: f64,
    pub residual_rms_ghz: f64,
    pub residual_real_ghz: f64,
    pub residual_imaginary_ghz: f64,
    pub residual_ratio: f64,
    pub sigma_k_abs: f64,
    pub sigma_alpha_cp: f64,
    pub sigma_crossing_field_t: f64,
    pub k_mp_re: f64,
    pub k_mp_im: f64,
    pub k_pp_re: f64,
    pub k_pp_im: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reported_k_pp: Option<f64>,
    pub complex_k_pp: bool,
    pub reported_mismatch: bool,
    pub warnings: Vec<String>,
    pub optimizer: String,
    pub restarts: usize,
    pub parameters: String,
    pub weighting: String,
    pub field_window_t: [f64; 2],
    pub points: usize,
    pub snapshot_hash: String,
}

fn r12(x: f64) -> f64 {
    fmt_num(x).parse().unwrap_or(x)
}

impl FitSummary {
    fn new(cfg: &Config, mode: usize, source: String, fit: &FitResult) -> Result<Self> {
        let n = cfg.mode_index(mode)?;
        let coupling = &cfg.couplings[n];
        let k_mp = coupling.k_mp.value();
        let d = decompose_coupling(fit, k_mp, coupling.reported_k_pp);
        for w in &d.warnings {
            log::warn!("{w}");
        }
        let k = fit.k_value();
        let m = &fit.metadata;
        Ok(FitSummary {
            mode,
            source,
            k_kind: fit.k_kind,
            k_abs: r12(fit.k_abs),
            k_re: r12(k.re),
            k_im: r12(k.im),
            alpha_cp: r12(fit.alpha_cp),
            crossing_field_t: r12(fit.crossing_field),
            residual_rms_ghz: r12(fit.residual_rms),
            residual_real_ghz: r12(fit.residual_real),
            residual_imaginary_ghz: r12(fit.residual_imaginary),
            residual_ratio: r12(fit.residual_ratio),
            sigma_k_abs: r12(fit.sensitivity.k_abs),
            sigma_alpha_cp: r12(fit.sensitivity.alpha_cp),
            sigma_crossing_field_t: r12(fit.sensitivity.crossing_field),
            k_mp_re: r12(k_mp.re),
            k_mp_im: r12(k_mp.im),
            k_pp_re: r12(d.k_pp.re),
            k_pp_im: r12(d.k_pp.im),
            reported_k_pp: d.reported_k_pp,
            complex_k_pp: d.complex_k_pp,
            reported_mismatch: d.reported_mismatch,
            warnings: d.warnings,
            optimizer: m.optimizer.clone(),
            restarts: m.restarts,
            parameters: m.parameters.clone(),
            weighting: m.weighting.clone(),
            field_window_t: [r12(m.field_window_t[0]), r12(m.field_window_t[1])],
            points: m.points,
            snapshot_hash: cfg.snapshot_hash(),
        })
    }
}

/// Ridge source, in order of precedence: `--ridges`, `--spectrum`, the
/// config's `fit.ridges` / `fit.spectrum`, synthetic ridges of the
/// configured system.
fn fit_ridges(cfg: &Config, args: &FitArgs, mode: usize) -> Result<(RidgeData, String)> {
    let ridges = args
        .ridges
        .clone()
        .or_else(|| cfg.fit.ridges.as_ref().map(PathBuf::from));
    let spectrum = args
        .spectrum
        .clone()
        .or_else(|| cfg.fit.spectrum.as_ref().map(PathBuf::from));
    if let Some(p) = ridges.filter(|_| args.spectrum.is_none()) {
        return Ok((read_ridges_csv(&p)?, format!("ridges:{}", file_name(&p))));
    }
    if let Some(p) = spectrum {
        let w = args
            .window
            .map(|w| (w.0, w.1))
            .or(cfg.fit.window.map(|w| (w[0], w[1])))
            .ok_or_else(|| {
                Error::Config("fitting a spectrum needs --window or fit.window".into())
            })?;
        let map = read_spectrum_csv(&p)?;
        return Ok((
            extract_ridges(&map, w)?,
            format!("spectrum:{}", file_name(&p)),
        ));
    }
    let sys = cfg.system()?;
    let n = cfg.mode_index(mode)?;
    let m = &sys.modes()[n];
    let window = center_window(&sys, n, cfg.fit.half_width, cfg.fit.points)?;
    let noise =
        (cfg.fit.noise > 0.0).then_some((cfg.fit.noise * m.beta_in * m.f_ghz, cfg.fit.seed));
    Ok((
        synthetic_ridges(&sys, n, &window, noise)?,
        "synthetic".into(),
    ))
}

fn file_name(p: &Path) -> String {
    p.file_name().map_or_else(
        || p.display().to_string(),
        |s| s.to_string_lossy().into_owned(),
    )
}

pub fn run_fit(cfg: &Config, c: &CommonArgs, args: &FitArgs) -> Result<Vec<PathBuf>> {
    let mode = args.mode.unwrap_or(cfg.fit.mode);
    let n = cfg.mode_index(mode)?;
    let (ridges, source) = fit_ridges(cfg, args, mode)?;
    let magnon = cfg.magnon()?;
    let photon = &cfg.modes()?[n];
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(c.workers())
        .build()
        .map_err(|e| Error::Numerical(format!("worker pool: {e}")))?;
    let fit = pool.install(|| fit_dispersion(&ridges, &magnon, photon, &cfg.fit.options));
    let record = OutputRecord::new(OutputKind::Fit, cfg);
    match fit {
        Ok(fit) => {
            let summary = FitSummary::new(cfg, mode, source, &fit)?;
            log::info!(
                "K = {} ({}), alpha_cp = {}",
                summary.k_abs,
                summary.k_kind.as_str(),
                summary.alpha_cp
            );
            let toml = toml::to_string(&summary).map_err(|e| Error::Data(e.to_string()))?;
            let payloads = [
                ("fit_summary.toml".into(), toml),
                ("fit_trace.csv".into(), trace_csv(&fit.trace)),
                ("fit_ridges.csv".into(), ridges_csv(&ridges)),
            ];
            write_outputs(&c.out, "fit", record, &payloads)
        }
        Err(Error::Fit(failure)) => {
            let payloads = [
                ("fit_trace.csv".into(), trace_csv(&failure.trace)),
                ("fit_ridges.csv".into(), ridges_csv(&ridges)),
            ];
            write_outputs(&c.out, "fit", record, &payloads)?;
            Err(Error::Fit(failure))
        }
        Err(e) => Err(e),
    }
}
