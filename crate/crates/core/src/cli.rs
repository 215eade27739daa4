//! Command-line front end.
//!
//! A run is described by a TOML file (see [`RunConfig`]); command-line flags
//! override individual entries. Every command writes plain CSV or text into
//! the output directory, which defaults to `$PCCLONE_OUT` and then
//! `pcclone-out`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cloner::{
    clone_fidelities, clone_fidelities_with_ancilla, equalizing_filter, optimal_spec, success_variation, symmetrize, Sweep,
    F_ESTIMATION, F_PHASE_COVARIANT, F_UNIVERSAL,
};
use crate::counts::{
    calibration_run, estimate_fidelities, estimate_success, measure_point, q_factor, write_records_csv, Analyzer,
    CoincidenceRecord, NoiseModel,
};
use crate::error::Error;
use crate::optics::{BeamSplitterSpec, FilterSpec};
use crate::qstate::{PolarizationKet, Port};
use crate::tomography::{
    build_campaign, cardinal_inputs, map_fidelity, ml_reconstruct, pretty_print, simulate_campaign, write_choi_csv,
    BasisPlan, MlOptions, MlResult,
};

pub const OUT_ENV: &str = "PCCLONE_OUT";
pub const DEFAULT_OUT: &str = "pcclone-out";

/// Reference values the report compares against.
pub const REF_R_V: f64 = 0.789;
pub const REF_Q: f64 = 0.484;
pub const REF_P_SUCC_SIM: f64 = 0.292;
pub const REF_MAP_FIDELITY: f64 = 0.93;
pub const REF_MAP_FIDELITY_FILTERED: f64 = 0.94;

/// Failure of a command, split by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(Error::Io(e))
    }
}

fn config_err(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {msg}"))
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SplitterPreset {
    /// Optimal ratio, P_succ = 1/3.
    Ideal,
    /// 76:24 for V and 18:82 for H.
    Measured,
    /// Reflectances from the config file.
    Custom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitterConfig {
    pub preset: SplitterPreset,
    pub reflectance_v: f64,
    pub reflectance_h: f64,
    pub t_h_negative: bool,
}

impl Default for SplitterConfig {
    fn default() -> Self {
        Self { preset: SplitterPreset::Measured, reflectance_v: 0.76, reflectance_h: 0.18, t_h_negative: true }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FilterMode {
    None,
    /// Amplitude-ratio filter of the configured splitter (exact at V = 1).
    Auto,
    /// Filter tuned until the clones match at the configured visibility and ancilla.
    Equalize,
    /// Transmissions from the config file.
    Manual,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub mode: FilterMode,
    pub eta_v: f64,
    pub eta_h: f64,
    pub port: Port,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self { mode: FilterMode::None, eta_v: 1.0, eta_h: 1.0, port: Port::One }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PlanKind {
    /// Six cardinal inputs, all nine Pauli basis pairs.
    Pauli,
    /// Each input analysed in its own basis.
    Own,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    /// Points per sweep.
    pub grid: usize,
    /// Measurement periods per point.
    pub periods: usize,
    /// Seconds per period.
    pub period_duration: f64,
    /// Polar angle held fixed in φ sweeps.
    pub theta: f64,
    /// Azimuth held fixed in θ sweeps.
    pub phi: f64,
    pub plan: PlanKind,
    /// Number of inputs for the `own` plan, spread over the sphere.
    pub own_inputs: usize,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self { grid: 64, periods: 10, period_duration: 5.0, theta: FRAC_PI_2, phi: 0.0, plan: PlanKind::Pauli, own_inputs: 24 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TomographyConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for TomographyConfig {
    fn default() -> Self {
        let o = MlOptions::default();
        Self { tol: o.tol, max_iter: o.max_iter }
    }
}

/// Complete description of a run.
///
/// ```toml
/// seed = 7
/// output_dir = "out"
///
/// [splitter]
/// preset = "custom"        # ideal | measured | custom
/// reflectance_v = 0.76
/// reflectance_h = 0.18
/// t_h_negative = true
///
/// [filter]
/// mode = "auto"            # none | auto | equalize | manual
///
/// [noise]
/// visibility = 0.95
///
/// [campaign]
/// grid = 64
/// periods = 10
/// period_duration = 5.0
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub splitter: SplitterConfig,
    pub filter: FilterConfig,
    pub noise: NoiseModel,
    pub campaign: CampaignConfig,
    pub tomography: TomographyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            output_dir: None,
            splitter: SplitterConfig::default(),
            filter: FilterConfig::default(),
            noise: NoiseModel::laboratory(),
            campaign: CampaignConfig::default(),
            tomography: TomographyConfig::default(),
        }
    }
}

impl RunConfig {
    /// Parses and validates; syntax errors carry the line and column.
    pub fn from_toml_str(s: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(s).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.noise.validate().map_err(|e| config_err("noise", e))?;
        self.splitter_spec()?;
        self.filter_spec()?;
        let c = &self.campaign;
        if c.grid == 0 {
            return Err(config_err("campaign.grid", "must be at least 1"));
        }
        if c.periods == 0 {
            return Err(config_err("campaign.periods", "must be at least 1"));
        }
        if !(c.period_duration.is_finite() && c.period_duration > 0.0) {
            return Err(config_err("campaign.period_duration", format!("{} must be positive", c.period_duration)));
        }
        if !(c.theta.is_finite() && c.phi.is_finite()) {
            return Err(config_err("campaign.theta/phi", "must be finite"));
        }
        if c.plan == PlanKind::Own && c.own_inputs == 0 {
            return Err(config_err("campaign.own_inputs", "must be at least 1"));
        }
        let t = &self.tomography;
        if !(t.tol.is_finite() && t.tol > 0.0) {
            return Err(config_err("tomography.tol", format!("{} must be positive", t.tol)));
        }
        Ok(())
    }

    pub fn splitter_spec(&self) -> Result<BeamSplitterSpec, CliError> {
        match self.splitter.preset {
            SplitterPreset::Ideal => Ok(optimal_spec()),
            SplitterPreset::Measured => Ok(BeamSplitterSpec::measured()),
            SplitterPreset::Custom => {
                let s = &self.splitter;
                BeamSplitterSpec::from_reflectances(s.reflectance_v, s.reflectance_h, s.t_h_negative)
                    .map_err(|e| config_err("splitter", e))
            }
        }
    }

    pub fn filter_spec(&self) -> Result<Option<FilterSpec>, CliError> {
        match self.filter.mode {
            FilterMode::None => Ok(None),
            FilterMode::Auto => symmetrize(&self.splitter_spec()?).map(Some).map_err(|e| config_err("filter", e)),
            FilterMode::Equalize => equalizing_filter(&self.splitter_spec()?, self.noise.visibility, &self.noise.ancilla())
                .map(Some)
                .map_err(|e| config_err("filter", e)),
            FilterMode::Manual => {
                let f = &self.filter;
                FilterSpec::new(f.eta_v, f.eta_h, f.port).map(Some).map_err(|e| config_err("filter", e))
            }
        }
    }

    pub fn ml_options(&self) -> MlOptions {
        MlOptions { tol: self.tomography.tol, max_iter: self.tomography.max_iter }
    }

    pub fn basis_plan(&self) -> (Vec<(f64, f64)>, BasisPlan) {
        match self.campaign.plan {
            PlanKind::Pauli => (cardinal_inputs(), BasisPlan::pauli()),
            PlanKind::Own => (spread_inputs(self.campaign.own_inputs), BasisPlan::Own),
        }
    }
}

/// Fibonacci lattice of `n` points on the sphere as `(θ, φ)`.
pub fn spread_inputs(n: usize) -> Vec<(f64, f64)> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - (2.0 * k as f64 + 1.0) / n as f64;
            (z.acos(), (golden * k as f64).rem_euclid(2.0 * PI))
        })
        .collect()
}

#[derive(Parser, Debug)]
#[command(name = "pcclone", version, about = "Simulate and reconstruct a beam-splitter phase-covariant cloner")]
pub struct Cli {
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Default, Clone)]
pub struct Overrides {
    /// TOML run description.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (default: $PCCLONE_OUT, then pcclone-out).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub visibility: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub filter: Option<FilterMode>,
    #[arg(long, global = true, value_enum)]
    pub splitter: Option<SplitterPreset>,
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    #[arg(long, global = true)]
    pub periods: Option<usize>,
    /// Seconds per measurement period.
    #[arg(long, global = true)]
    pub duration: Option<f64>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Equatorial sweep over φ at fixed θ.
    SweepPhi,
    /// Meridian sweep over θ at fixed φ.
    SweepTheta,
    /// Simulated process tomography with and without the filter.
    Tomography,
    /// Filter that equalizes the clones for the configured splitter.
    Symmetrize,
    /// Compare earlier outputs with the reference numbers.
    Report,
}

impl Overrides {
    /// Loads the config (or defaults) and applies the flags.
    pub fn resolve(&self) -> Result<(RunConfig, PathBuf), CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(v) = self.visibility {
            cfg.noise.visibility = v;
        }
        if let Some(f) = self.filter {
            cfg.filter.mode = f;
        }
        if let Some(s) = self.splitter {
            cfg.splitter.preset = s;
        }
        if let Some(g) = self.grid {
            cfg.campaign.grid = g;
        }
        if let Some(p) = self.periods {
            cfg.campaign.periods = p;
        }
        if let Some(d) = self.duration {
            cfg.campaign.period_duration = d;
        }
        cfg.validate()?;
        let out = self
            .out
            .clone()
            .or_else(|| cfg.output_dir.clone())
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        Ok((cfg, out))
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run_from_args<I, T>(args: I) -> i32
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
    match run(&cli) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("pcclone: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command line; returns the text meant for stdout.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let (cfg, out) = cli.overrides.resolve()?;
    match cli.command {
        Command::SweepPhi => cmd_sweep(&cfg, &out, SweepKind::Phi).map(|s| s.summary()),
        Command::SweepTheta => cmd_sweep(&cfg, &out, SweepKind::Theta).map(|s| s.summary()),
        Command::Tomography => cmd_tomography(&cfg, &out).map(|t| t.text),
        Command::Symmetrize => cmd_symmetrize(&cfg, &out),
        Command::Report => cmd_report(&cfg, &out),
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum SweepKind {
    Phi,
    Theta,
}

impl SweepKind {
    pub fn name(self) -> &'static str {
        match self {
            SweepKind::Phi => "sweep_phi",
            SweepKind::Theta => "sweep_theta",
        }
    }
}

/// One row of the sweep curve CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub theta_rad: f64,
    pub phi_rad: f64,
    #[serde(rename = "F1_analytic")]
    pub f1_analytic: f64,
    #[serde(rename = "F2_analytic")]
    pub f2_analytic: f64,
    #[serde(rename = "Psucc_analytic")]
    pub p_succ_analytic: f64,
    #[serde(rename = "F1_sim")]
    pub f1_sim: f64,
    #[serde(rename = "F1_err")]
    pub f1_err: f64,
    #[serde(rename = "F2_sim")]
    pub f2_sim: f64,
    #[serde(rename = "F2_err")]
    pub f2_err: f64,
    #[serde(rename = "Psucc_sim")]
    pub p_succ_sim: f64,
    #[serde(rename = "Psucc_err")]
    pub p_succ_err: f64,
}

pub fn write_curve_csv<W: Write>(w: W, rows: &[CurveRow]) -> crate::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_curve_csv<R: Read>(r: R) -> crate::Result<Vec<CurveRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    rdr.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[derive(Clone, Debug)]
pub struct SweepOutput {
    pub kind: SweepKind,
    pub records: Vec<CoincidenceRecord>,
    pub curve: Vec<CurveRow>,
    pub records_path: PathBuf,
    pub curve_path: PathBuf,
}

impl SweepOutput {
    fn summary(&self) -> String {
        let n = self.curve.len() as f64;
        let mean = |f: fn(&CurveRow) -> f64| self.curve.iter().map(f).sum::<f64>() / n;
        format!(
            "{}: {} points\n  mean F1 analytic {:.4}  simulated {:.4}\n  mean F2 analytic {:.4}  simulated {:.4}\n  mean P_succ analytic {:.4}  simulated {:.4}\nwrote {}\nwrote {}\n",
            self.kind.name(),
            self.curve.len(),
            mean(|r| r.f1_analytic),
            mean(|r| r.f1_sim),
            mean(|r| r.f2_analytic),
            mean(|r| r.f2_sim),
            mean(|r| r.p_succ_analytic),
            mean(|r| r.p_succ_sim),
            self.records_path.display(),
            self.curve_path.display(),
        )
    }
}

fn create(out: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
    fs::create_dir_all(out)?;
    let path = out.join(name);
    let f = File::create(&path)?;
    Ok((path, BufWriter::new(f)))
}

/// Simulated sweep plus analytic curve; writes `<name>_records.csv` and
/// `<name>_curve.csv`.
pub fn cmd_sweep(cfg: &RunConfig, out: &Path, kind: SweepKind) -> Result<SweepOutput, CliError> {
    let spec = cfg.splitter_spec()?;
    let filter = cfg.filter_spec()?;
    let c = &cfg.campaign;
    let sweep = match kind {
        SweepKind::Phi => Sweep::phi(c.theta, c.grid),
        SweepKind::Theta => Sweep::theta(c.phi, c.grid),
    };
    let noise = &cfg.noise;
    let ancilla = noise.ancilla();
    let mut seeds = ChaCha8Rng::seed_from_u64(cfg.seed);
    let cal = calibration_run(&spec, noise, c.periods as f64 * c.period_duration, seeds.next_u64())?;

    let mut records = Vec::new();
    let mut curve = Vec::new();
    for (theta, phi) in sweep.points() {
        let analytic = clone_fidelities_with_ancilla(&spec, filter.as_ref(), theta, phi, noise.visibility, &ancilla)?;
        let analyzer = Analyzer::own(&PolarizationKet::from_angles(theta, phi));
        let periods = measure_point(&spec, filter.as_ref(), noise, theta, phi, &analyzer, c.periods, c.period_duration, seeds.next_u64())?;
        let rec = CoincidenceRecord::merge(&periods)?;
        let (f1, f1_err, f2, f2_err) = match estimate_fidelities(&rec) {
            Ok(e) => (e.f1, e.f1_err, e.f2, e.f2_err),
            Err(Error::NoEvents) => (f64::NAN, f64::NAN, f64::NAN, f64::NAN),
            Err(e) => return Err(e.into()),
        };
        let (p_succ_sim, p_succ_err) = match estimate_success(&rec, cal.c_sum_dis, cal.q) {
            Ok(s) => (s.p_succ, s.err),
            Err(Error::ZeroCalibration) => (f64::NAN, f64::NAN),
            Err(e) => return Err(e.into()),
        };
        curve.push(CurveRow {
            theta_rad: theta,
            phi_rad: phi,
            f1_analytic: analytic.f1,
            f2_analytic: analytic.f2,
            p_succ_analytic: analytic.p_succ,
            f1_sim: f1,
            f1_err,
            f2_sim: f2,
            f2_err,
            p_succ_sim,
            p_succ_err,
        });
        records.push(rec);
    }

    let (records_path, mut w) = create(out, &format!("{}_records.csv", kind.name()))?;
    write_records_csv(&mut w, &records)?;
    w.flush()?;
    let (curve_path, mut w) = create(out, &format!("{}_curve.csv", kind.name()))?;
    write_curve_csv(&mut w, &curve)?;
    w.flush()?;
    Ok(SweepOutput { kind, records, curve, records_path, curve_path })
}

pub const TOMOGRAPHY_SUMMARY: &str = "tomography_summary.csv";

/// One reconstruction in the tomography summary CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TomographySummaryRow {
    pub label: String,
    pub map_fidelity: f64,
    pub reference: f64,
    pub iterations: usize,
    pub converged: bool,
    pub stalled: bool,
    pub complete: bool,
    pub rank: usize,
    pub log_likelihood: f64,
    pub max_tp_error: f64,
}

pub fn read_tomography_summary<R: Read>(r: R) -> crate::Result<Vec<TomographySummaryRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    rdr.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[derive(Clone, Debug)]
pub struct TomographyOutput {
    /// Reconstructions without and with the filter.
    pub runs: Vec<(String, MlResult, f64)>,
    pub text: String,
}

/// Simulates the campaign without filter and with the configured filter
/// (`equalize` if none is configured), reconstructs both maps and writes
/// `choi_<label>.csv`, `tomography.txt` and the summary CSV.
pub fn cmd_tomography(cfg: &RunConfig, out: &Path) -> Result<TomographyOutput, CliError> {
    let spec = cfg.splitter_spec()?;
    let filter = match cfg.filter_spec()? {
        Some(f) => f,
        None => equalizing_filter(&spec, cfg.noise.visibility, &cfg.noise.ancilla())?,
    };
    let (inputs, plan) = cfg.basis_plan();
    let design = build_campaign(&inputs, &plan)?;
    let c = &cfg.campaign;
    let mut seeds = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut text = String::new();
    if !design.complete {
        let _ = writeln!(
            text,
            "warning: campaign is not informationally complete (rank {} of 64); the reconstruction is not unique",
            design.rank
        );
    }
    let mut runs = Vec::new();
    let mut rows = Vec::new();
    for (label, f, reference) in
        [("nofilter", None, REF_MAP_FIDELITY), ("filter", Some(&filter), REF_MAP_FIDELITY_FILTERED)]
    {
        let data = simulate_campaign(&design, &spec, f, &cfg.noise, c.periods, c.period_duration, seeds.next_u64())?;
        let res = ml_reconstruct(&data, &cfg.ml_options())?;
        let fid = map_fidelity(&res.process)?;
        let (_, mut w) = create(out, &format!("choi_{label}.csv"))?;
        write_choi_csv(&mut w, res.process.matrix())?;
        w.flush()?;
        let d = &res.diagnostics;
        let _ = writeln!(text, "== {label} ==");
        if let Some(f) = f {
            let _ = writeln!(text, "filter eta_V={:.4} eta_H={:.4} on port {}", f.eta_v(), f.eta_h(), f.port().number());
        }
        let _ = writeln!(
            text,
            "map fidelity {fid:.4} (reference {reference:.2}); {} iterations, converged {}, stalled {}, max TP error {:.1e}",
            d.iterations, d.converged, d.stalled, d.max_trace_preservation_error
        );
        if d.floored > 0 {
            let _ = writeln!(text, "warning: {} probabilities floored", d.floored);
        }
        let _ = writeln!(text, "Choi operator (normalized to trace 2):\n{}", pretty_print(res.process.matrix())?);
        rows.push(TomographySummaryRow {
            label: label.to_string(),
            map_fidelity: fid,
            reference,
            iterations: d.iterations,
            converged: d.converged,
            stalled: d.stalled,
            complete: d.complete,
            rank: d.rank,
            log_likelihood: d.log_likelihood,
            max_tp_error: d.max_trace_preservation_error,
        });
        runs.push((label.to_string(), res, fid));
    }
    let (_, mut w) = create(out, "tomography.txt")?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    let (_, w) = create(out, TOMOGRAPHY_SUMMARY)?;
    let mut wtr = csv::Writer::from_writer(w);
    for r in &rows {
        wtr.serialize(r).map_err(Error::from)?;
    }
    wtr.flush()?;
    Ok(TomographyOutput { runs, text })
}

/// Prints the equalizing filter and writes it to `symmetrize.txt`.
pub fn cmd_symmetrize(cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    let spec = cfg.splitter_spec()?;
    let f = symmetrize(&spec)?;
    let v = cfg.noise.visibility;
    let eq = |filter: Option<&FilterSpec>| clone_fidelities(&spec, filter, FRAC_PI_2, 0.0, v);
    let (before, after) = (eq(None)?, eq(Some(&f))?);
    let mut s = String::new();
    let _ = writeln!(s, "splitter R_V={:.4} R_H={:.4}", spec.reflectance_v(), spec.reflectance_h());
    let _ = writeln!(s, "filter on port {}: eta_V={:.6} eta_H={:.6} (ratio {:.6})", f.port().number(), f.eta_v(), f.eta_h(), f.eta_h() / f.eta_v());
    let _ = writeln!(s, "equatorial F1/F2 at V={v}: before {:.4}/{:.4}, after {:.4}/{:.4}", before.f1, before.f2, after.f1, after.f2);
    let _ = writeln!(
        s,
        "relative P_succ variation: before {:.4}, after {:.4}",
        success_variation(&spec, None, v)?,
        success_variation(&spec, Some(&f), v)?
    );
    let g = equalizing_filter(&spec, v, &cfg.noise.ancilla())?;
    let tuned = eq(Some(&g))?;
    let _ = writeln!(
        s,
        "filter equalizing at V={v}: port {}, eta_V={:.6} eta_H={:.6}; F1/F2 {:.4}/{:.4}",
        g.port().number(),
        g.eta_v(),
        g.eta_h(),
        tuned.f1,
        tuned.f2
    );
    let (_, mut w) = create(out, "symmetrize.txt")?;
    w.write_all(s.as_bytes())?;
    w.flush()?;
    Ok(s)
}

/// Table of computed values against the reference numbers. Requires the
/// outputs of `sweep-phi` and `tomography` in `out`.
pub fn cmd_report(cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    let open = |name: &str, cmd: &str| {
        File::open(out.join(name)).map_err(|e| {
            CliError::Runtime(Error::Io(std::io::Error::new(
                e.kind(),
                format!("{}: {e} (run `pcclone {cmd}` first)", out.join(name).display()),
            )))
        })
    };
    let curve = read_curve_csv(open("sweep_phi_curve.csv", "sweep-phi")?)?;
    let tomo = read_tomography_summary(open(TOMOGRAPHY_SUMMARY, "tomography")?)?;
    if curve.is_empty() {
        return Err(Error::Empty("sweep_phi_curve.csv").into());
    }

    let spec = cfg.splitter_spec()?;
    let ideal = optimal_spec();
    let f_pc = clone_fidelities(&ideal, None, FRAC_PI_2, 0.0, 1.0)?;
    let mean = |f: fn(&CurveRow) -> f64| {
        let v: Vec<f64> = curve.iter().map(f).filter(|x| x.is_finite()).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };

    let mut rows: Vec<(String, f64, f64)> = vec![
        ("F_pc, ideal splitter".into(), f_pc.f1, F_PHASE_COVARIANT),
        ("F_pc vs universal bound".into(), f_pc.f1, F_UNIVERSAL),
        ("F_pc vs estimation bound".into(), f_pc.f1, F_ESTIMATION),
        ("R_V, ideal splitter".into(), ideal.reflectance_v(), REF_R_V),
        ("P_succ, ideal splitter".into(), f_pc.p_succ, 1.0 / 3.0),
        ("Q, configured splitter".into(), q_factor(&spec), REF_Q),
        ("mean F1 simulated".into(), mean(|r| r.f1_sim), F_PHASE_COVARIANT),
        ("mean F2 simulated".into(), mean(|r| r.f2_sim), F_PHASE_COVARIANT),
        ("mean P_succ simulated".into(), mean(|r| r.p_succ_sim), REF_P_SUCC_SIM),
    ];
    for t in &tomo {
        rows.push((format!("map fidelity, {}", t.label), t.map_fidelity, t.reference));
    }

    let mut s = String::new();
    let _ = writeln!(s, "{:<28} {:>10} {:>10} {:>10}", "quantity", "computed", "reference", "delta");
    for (name, got, reference) in rows {
        let _ = writeln!(s, "{name:<28} {got:>10.6} {reference:>10.6} {:>+10.6}", got - reference);
    }
    for t in tomo.iter().filter(|t| !t.complete) {
        let _ = writeln!(s, "note: {} reconstruction used an incomplete campaign (rank {})", t.label, t.rank);
    }
    Ok(s)
}
