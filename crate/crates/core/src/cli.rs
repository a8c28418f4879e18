//! Experiment runner behind the `mdl` binary.
//!
//! Every command reads one JSON experiment document, dispatches to the
//! library and writes its artifacts atomically into the output directory.
//!
//! Exit codes: 0 success, 1 invalid input (the message names the field),
//! 2 runtime numeric failure, 3 a verification or verdict failed.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::channels::{Encoding, Scheme, SystemConfig};
use crate::error::{Error, Result};
use crate::fitters::{compare, estimate_slope_with, read_sweep_csv, SlopeOptions, SnrWindow, Verdict, HIT_FLOOR};
use crate::formulas::{
    diversity_cp, diversity_cp_simo, diversity_flat, diversity_flat_upper_at_integer_points, diversity_mac_bounds,
    diversity_separate, diversity_zp_bounds, diversity_zp_siso, flat_rate_thresholds, DiversityValue, RateThreshold,
};
use crate::simkit::{
    jensen_upper_sweep, outage_sweep, ser_sweep, snr_grid, EarlyStop, Metric, SweepOptions, SweepResult,
};
use crate::verify::{self, SuiteOutcome, VerifySpec};

/// Default slope tolerance when the spec gives none.
pub const DEFAULT_TOLERANCE: f64 = 0.3;

#[derive(Debug, Parser)]
#[command(name = "mdl", version, about = "Diversity of linear MIMO receivers: closed forms, sweeps and slope checks")]
pub struct Args {
    #[command(subcommand)]
    pub command: Command,

    /// JSON experiment document.
    #[arg(long, global = true)]
    pub spec: Option<PathBuf>,

    /// Directory for CSV/JSON artifacts.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,

    /// Worker threads for Monte Carlo sweeps.
    #[arg(long, global = true, env = "MDL_THREADS")]
    pub threads: Option<usize>,

    /// Overrides the spec's master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Print every closed-form diversity that applies to the config.
    Formula,
    /// Outage-probability sweep to CSV.
    Sweep,
    /// Uncoded QPSK symbol-error sweep to CSV.
    Ser,
    /// Fit the diversity slope and compare it with the prediction.
    Slope,
    /// Run the randomized invariant suites.
    Verify,
    /// Reproduce a named figure (fig1 … fig5) as a CSV bundle.
    Figure { name: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrSpec {
    pub start_db: f64,
    pub stop_db: f64,
    pub step_db: f64,
}

impl Default for SnrSpec {
    fn default() -> Self {
        Self {
            start_db: 0.0,
            stop_db: 40.0,
            step_db: 2.0,
        }
    }
}

impl SnrSpec {
    pub fn grid(&self) -> Result<Vec<f64>> {
        snr_grid(self.start_db, self.stop_db, self.step_db)
    }
}

fn default_trials() -> u64 {
    100_000
}

/// One experiment document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    #[serde(flatten)]
    pub config: SystemConfig,
    #[serde(default)]
    pub snr: SnrSpec,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub early_stop: Option<EarlyStop>,
    /// `[lo_db, hi_db]` fitting window for `slope`.
    #[serde(default)]
    pub window: Option<[f64; 2]>,
    #[serde(default)]
    pub tolerance: Option<f64>,
    /// Overrides the closed-form prediction used by `slope`.
    #[serde(default)]
    pub predicted: Option<f64>,
    /// Fit an existing sweep CSV instead of running a new sweep.
    #[serde(default)]
    pub input_csv: Option<PathBuf>,
    #[serde(default)]
    pub weighted: bool,
}

impl ExperimentSpec {
    pub fn new(config: SystemConfig) -> Self {
        Self {
            config,
            snr: SnrSpec::default(),
            trials: default_trials(),
            master_seed: 0,
            early_stop: None,
            window: None,
            tolerance: None,
            predicted: None,
            input_csv: None,
            weighted: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        self.snr.grid()?;
        if self.trials == 0 {
            return Err(Error::config("trials", "must be positive"));
        }
        if let Some([lo, hi]) = self.window {
            if !(lo <= hi) {
                return Err(Error::config("window", format!("[{lo}, {hi}] is empty")));
            }
        }
        if let Some(tol) = self.tolerance {
            if !(tol > 0.0) {
                return Err(Error::config("tolerance", "must be positive"));
            }
        }
        Ok(())
    }

    fn options(&self, threads: Option<usize>) -> SweepOptions {
        SweepOptions {
            trials_per_point: self.trials,
            early_stop: self.early_stop,
            threads,
        }
    }
}

/// Everything `formula` reports for one config.
#[derive(Debug, Clone, Serialize)]
pub struct FormulaReport {
    pub config: SystemConfig,
    /// The value `slope` compares against by default.
    pub d: u64,
    pub prediction: DiversityValue,
    pub records: Vec<DiversityValue>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub thresholds: Vec<RateThreshold>,
}

/// The closed form a measured slope is compared against by default.
///
/// MAC and MIMO zero-padding use the lower bound; single-transmit-antenna
/// cyclic prefix uses the SIMO closed form.
pub fn predicted_diversity(config: &SystemConfig) -> Result<DiversityValue> {
    config.validate()?;
    let c = config;
    match (c.scheme, c.encoding) {
        (Scheme::Flat, Encoding::Joint) => Ok(diversity_flat(c.rate, c.m, c.n)),
        (Scheme::Flat, Encoding::Separate) => diversity_separate(c.m, c.n),
        (Scheme::Mac, _) => Ok(diversity_mac_bounds(c.rate, c.m, c.n, c.k).0),
        (Scheme::Zp, _) if c.m == 1 && c.n == 1 => Ok(diversity_zp_siso(c.nu)),
        (Scheme::Zp, _) => Ok(diversity_zp_bounds(c.rate, c.m, c.n, c.nu, c.l_d).0),
        (Scheme::Cp, _) if c.m == 1 => diversity_cp_simo(c.rate, c.n, c.nu, c.l_d),
        (Scheme::Cp, _) => diversity_cp(c.rate, c.m, c.n, c.nu, c.l_d),
    }
}

pub fn formula_report(config: &SystemConfig) -> Result<FormulaReport> {
    let prediction = predicted_diversity(config)?;
    let c = config;
    let mut records = Vec::new();
    let mut thresholds = Vec::new();
    match c.scheme {
        Scheme::Flat => {
            records.push(diversity_flat(c.rate, c.m, c.n));
            records.push(diversity_flat_upper_at_integer_points(c.rate, c.m, c.n));
            if let Ok(sep) = diversity_separate(c.m, c.n) {
                records.push(sep);
            }
            thresholds = flat_rate_thresholds(c.m, c.n);
        }
        Scheme::Mac => {
            let (lo, hi) = diversity_mac_bounds(c.rate, c.m, c.n, c.k);
            records.extend([lo, hi]);
        }
        Scheme::Zp => {
            let (lo, hi) = diversity_zp_bounds(c.rate, c.m, c.n, c.nu, c.l_d);
            records.extend([lo, hi]);
            if c.m == 1 && c.n == 1 {
                records.push(diversity_zp_siso(c.nu));
            }
        }
        Scheme::Cp => {
            records.push(diversity_cp(c.rate, c.m, c.n, c.nu, c.l_d)?);
            if c.m == 1 {
                records.push(diversity_cp_simo(c.rate, c.n, c.nu, c.l_d)?);
            }
        }
    }
    Ok(FormulaReport {
        config: config.clone(),
        d: prediction.value,
        prediction,
        records,
        thresholds,
    })
}

/// One curve of a figure recipe.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curve {
    pub label: String,
    pub config: SystemConfig,
    pub metric: Metric,
}

impl Curve {
    fn outage(config: SystemConfig) -> Self {
        Self {
            label: curve_label(&config, "outage"),
            config,
            metric: Metric::Outage,
        }
    }

    fn jensen(config: SystemConfig) -> Self {
        Self {
            label: curve_label(&config, "jensen_upper"),
            config,
            metric: Metric::JensenUpper,
        }
    }
}

fn curve_label(c: &SystemConfig, what: &str) -> String {
    let scheme = format!("{:?}", c.scheme).to_lowercase();
    format!("{scheme}_M{}_N{}_nu{}_L{}_R{}_{what}", c.m, c.n, c.nu, c.l_d, c.rate)
}

pub const FIGURES: [&str; 5] = ["fig1", "fig2", "fig3", "fig4", "fig5"];

/// Rates of the first figure: M = N = 3 across all three diversity regimes.
pub const FIG1_RATES: [f64; 8] = [1.0, 1.5, 2.0, 3.0, 4.5, 4.8, 5.0, 10.0];

/// The curves of a named figure.
pub fn figure_recipe(name: &str) -> Result<Vec<Curve>> {
    let flat = |m, n, rates: &[f64]| -> Vec<Curve> {
        rates.iter().map(|&r| Curve::outage(SystemConfig::flat(m, n, r))).collect()
    };
    Ok(match name {
        "fig1" => flat(3, 3, &FIG1_RATES),
        "fig2" => {
            let mut curves = flat(2, 2, &[1.0, 4.0, 10.0]);
            curves.extend([1.0, 4.0, 10.0].iter().map(|&r| Curve::jensen(SystemConfig::flat(2, 2, r))));
            curves
        }
        "fig3" => flat(2, 3, &[1.5, 2.5, 4.0]),
        "fig4" => {
            let mut curves = flat(2, 3, &[1.8, 4.0, 10.0]);
            curves.extend(flat(3, 2, &[1.8, 4.0, 10.0]));
            curves
        }
        "fig5" => [1.0, 3.0]
            .iter()
            .flat_map(|&r| {
                [
                    Curve::outage(SystemConfig::zp(1, 1, 1, 4, r)),
                    Curve::outage(SystemConfig::cp(1, 1, 1, 4, r)),
                ]
            })
            .collect(),
        other => {
            return Err(Error::config(
                "figure",
                format!("unknown figure `{other}`; expected one of {}", FIGURES.join(", ")),
            ))
        }
    })
}

/// Grid and trial budget for figure runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FigureSpec {
    pub snr: SnrSpec,
    pub trials: u64,
    pub master_seed: u64,
    pub early_stop: Option<EarlyStop>,
}

impl Default for FigureSpec {
    fn default() -> Self {
        Self {
            snr: SnrSpec::default(),
            trials: 10_000,
            master_seed: 0,
            early_stop: Some(EarlyStop {
                target_hits: 200,
                ceiling: 1_000_000,
            }),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FigureCurve {
    pub label: String,
    pub csv: String,
    pub result: SweepResult,
}

#[derive(Debug, Clone, Serialize)]
pub struct FigureBundle {
    pub figure: String,
    pub curves: Vec<FigureCurve>,
}

pub fn run_figure(name: &str, spec: &FigureSpec, threads: Option<usize>) -> Result<FigureBundle> {
    let grid = spec.snr.grid()?;
    let options = SweepOptions {
        trials_per_point: spec.trials,
        early_stop: spec.early_stop,
        threads,
    };
    let curves = figure_recipe(name)?
        .into_iter()
        .map(|curve| {
            let result = match curve.metric {
                Metric::JensenUpper => jensen_upper_sweep(&curve.config, &grid, &options, spec.master_seed)?,
                _ => outage_sweep(&curve.config, &grid, &options, spec.master_seed)?,
            };
            Ok(FigureCurve {
                csv: format!("{name}_{}.csv", curve.label),
                label: curve.label,
                result,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FigureBundle {
        figure: name.to_string(),
        curves,
    })
}

/// Writes `contents` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    let path = dir.join(name);
    tmp.persist(&path).map_err(|e| Error::Io(e.error))?;
    Ok(path)
}

/// A command failure carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::Config { .. } | Error::Json(_) | Error::Csv(_) => 1,
            _ => 2,
        };
        Failure {
            code,
            message: err.to_string(),
        }
    }
}

fn read_spec_text(path: Option<&Path>) -> std::result::Result<Option<String>, Failure> {
    path.map(|p| {
        fs::read_to_string(p).map_err(|e| Failure {
            code: 1,
            message: format!("cannot read spec `{}`: {e}", p.display()),
        })
    })
    .transpose()
}

fn experiment(args: &Args) -> std::result::Result<ExperimentSpec, Failure> {
    let text = read_spec_text(args.spec.as_deref())?.ok_or_else(|| Failure {
        code: 1,
        message: "this command needs --spec <file>".into(),
    })?;
    let mut spec = ExperimentSpec::from_json(&text)?;
    if let Some(seed) = args.seed {
        spec.master_seed = seed;
    }
    Ok(spec)
}

fn json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn write_sweep(out: &Path, stem: &str, result: &SweepResult) -> Result<()> {
    write_atomic(out, &format!("{stem}.csv"), result.to_csv()?.as_bytes())?;
    write_atomic(out, &format!("{stem}.json"), &json(result)?)?;
    Ok(())
}

fn summarize_suites(outcomes: &[SuiteOutcome]) -> bool {
    for s in outcomes {
        let status = if s.passed() { "PASS" } else { "FAIL" };
        println!("{status} {} ({} cases, {} violations)", s.name, s.cases, s.violations);
        if let (false, Some(detail)) = (s.passed(), &s.detail) {
            println!("     {detail}");
        }
    }
    outcomes.iter().all(SuiteOutcome::passed)
}

/// Runs one parsed invocation, returning the exit code on failure.
pub fn execute(args: &Args) -> std::result::Result<(), Failure> {
    let out = args.out.as_path();
    match &args.command {
        Command::Formula => {
            let spec = experiment(args)?;
            let report = formula_report(&spec.config)?;
            let bytes = json(&report)?;
            write_atomic(out, "formula.json", &bytes)?;
            print!("{}", String::from_utf8_lossy(&bytes));
        }
        Command::Sweep => {
            let spec = experiment(args)?;
            let result = outage_sweep(&spec.config, &spec.snr.grid()?, &spec.options(args.threads), spec.master_seed)?;
            write_sweep(out, "sweep", &result)?;
            print!("{}", result.to_csv()?);
        }
        Command::Ser => {
            let spec = experiment(args)?;
            let result = ser_sweep(&spec.config, &spec.snr.grid()?, &spec.options(args.threads), spec.master_seed)?;
            write_sweep(out, "ser", &result)?;
            print!("{}", result.to_csv()?);
        }
        Command::Slope => {
            let spec = experiment(args)?;
            let points = match &spec.input_csv {
                Some(path) => read_sweep_csv(path)?,
                None => {
                    let result =
                        outage_sweep(&spec.config, &spec.snr.grid()?, &spec.options(args.threads), spec.master_seed)?;
                    write_sweep(out, "sweep", &result)?;
                    result.points
                }
            };
            let window = spec.window.map_or(SnrWindow::all(), |[lo, hi]| SnrWindow::new(lo, hi));
            let options = SlopeOptions {
                hit_floor: HIT_FLOOR,
                weighted: spec.weighted,
            };
            let estimate = estimate_slope_with(&points, window, options)?;
            let predicted = match spec.predicted {
                Some(p) => p,
                None => predicted_diversity(&spec.config)?.value as f64,
            };
            let verdict: Verdict = compare(&estimate, predicted, spec.tolerance.unwrap_or(DEFAULT_TOLERANCE))?;
            let bytes = json(&verdict)?;
            write_atomic(out, "verdict.json", &bytes)?;
            print!("{}", String::from_utf8_lossy(&bytes));
            if !verdict.pass {
                return Err(Failure {
                    code: 3,
                    message: format!(
                        "measured slope {:.3} differs from {predicted} by more than {}",
                        verdict.d_hat, verdict.tolerance
                    ),
                });
            }
        }
        Command::Verify => {
            let mut spec: VerifySpec = match read_spec_text(args.spec.as_deref())? {
                Some(text) => serde_json::from_str(&text).map_err(Error::from)?,
                None => VerifySpec::default(),
            };
            if let Some(seed) = args.seed {
                spec.master_seed = seed;
            }
            let outcomes = verify::run_all(&spec)?;
            write_atomic(out, "verify.json", &json(&outcomes)?)?;
            if !summarize_suites(&outcomes) {
                return Err(Failure {
                    code: 3,
                    message: "invariant suite violations found".into(),
                });
            }
        }
        Command::Figure { name } => {
            figure_recipe(name)?;
            let mut spec: FigureSpec = match read_spec_text(args.spec.as_deref())? {
                Some(text) => serde_json::from_str(&text).map_err(Error::from)?,
                None => FigureSpec::default(),
            };
            if let Some(seed) = args.seed {
                spec.master_seed = seed;
            }
            let bundle = run_figure(name, &spec, args.threads)?;
            for curve in &bundle.curves {
                write_atomic(out, &curve.csv, curve.result.to_csv()?.as_bytes())?;
                println!("{}", out.join(&curve.csv).display());
            }
            write_atomic(out, &format!("{name}.json"), &json(&bundle)?)?;
        }
    }
    Ok(())
}

/// Entry point shared by the binary: parse, execute, map to an exit code.
pub fn main_with_args<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(args) => args,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
