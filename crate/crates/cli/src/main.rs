use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use biphoton::config::{FitWeighting, Mode, Scenario, ScenarioConfig};
use biphoton::fringe::{
    fit_fixed_period_with, fit_free_period_with, read_curve_csv, FitOptions, FitReport, FringeSign,
    PeriodGrid, Weighting,
};
use biphoton::resonance::{mode_table, nearest_mode, OpticalConstants, EPS_AIR, EPS_GLASS};
use biphoton::runner::{fit_json, run_scenario, write_outputs, ScanResult};
use biphoton::{bethe_transmission, enhancement_at, ingest_spectrum, Error, Normalization, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Two-photon interference through a subwavelength hole array.
#[derive(Debug, Parser)]
#[command(name = "biphoton", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario scan and write scan.csv + fit.json.
    Scan(RunArgs),
    /// Fit a fringe to an external CSV curve.
    Fit(FitArgs),
    /// Free-period fit: report the fringe period (de Broglie wavelength).
    Debroglie(DebroglieArgs),
    /// Surface-plasmon resonance table for a square lattice.
    Resonance(ResonanceArgs),
    /// Classical small-aperture transmittance of a hole array.
    Bethe(BetheArgs),
    /// Query a measured transmittance spectrum.
    Spectrum(SpectrumArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Analytic,
    Mc,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NormArg {
    Paper,
    Physical,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScenarioArg {
    NoPlate,
    PlateHwpFirst,
    PlateHwpAfter,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SignArg {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum WeightArg {
    Uniform,
    Poisson,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Scenario config (TOML); defaults apply to anything omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    scenario: Option<ScenarioArg>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    normalization: Option<NormArg>,
    /// Fit the fringe period instead of holding it at wavelength/2.
    #[arg(long)]
    free_period: bool,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn load(&self) -> Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(p) => ScenarioConfig::load(p)?,
            None => ScenarioConfig::default(),
        };
        if let Some(s) = self.scenario {
            cfg.scenario = match s {
                ScenarioArg::NoPlate => Scenario::NoPlate,
                ScenarioArg::PlateHwpFirst => Scenario::PlateHwpFirst,
                ScenarioArg::PlateHwpAfter => Scenario::PlateHwpAfter,
            };
        }
        if let Some(seed) = self.seed {
            cfg.detection.seed = seed;
        }
        if let Some(m) = self.mode {
            cfg.mode = match m {
                ModeArg::Analytic => Mode::Analytic,
                ModeArg::Mc => Mode::MonteCarlo,
            };
        }
        if let Some(n) = self.normalization {
            cfg.detection.normalization = match n {
                NormArg::Paper => Normalization::Paper,
                NormArg::Physical => Normalization::Physical,
            };
        }
        if self.free_period {
            cfg.fit.free_period = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct GridArgs {
    #[arg(long, default_value_t = PeriodGrid::default().min_nm)]
    grid_min: f64,
    #[arg(long, default_value_t = PeriodGrid::default().max_nm)]
    grid_max: f64,
    #[arg(long, default_value_t = PeriodGrid::default().step_nm)]
    grid_step: f64,
}

impl GridArgs {
    fn grid(&self) -> PeriodGrid {
        PeriodGrid {
            min_nm: self.grid_min,
            max_nm: self.grid_max,
            step_nm: self.grid_step,
        }
    }
}

#[derive(Debug, Args)]
struct FitArgs {
    /// CSV with a `delta_l_nm` column and at least one data column.
    #[arg(long)]
    input: PathBuf,
    /// Data column to fit (default: first non-x column).
    #[arg(long)]
    column: Option<String>,
    /// Fringe period in path difference, nm. Omit to fit it.
    #[arg(long)]
    period: Option<f64>,
    #[arg(long, value_enum, default_value = "plus")]
    sign: SignArg,
    #[arg(long, value_enum, default_value = "uniform")]
    weights: WeightArg,
    #[command(flatten)]
    grid: GridArgs,
    /// Write the report to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DebroglieArgs {
    /// Curve to analyse; without it the configured scenario is simulated.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    column: Option<String>,
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Debug, Args)]
struct ResonanceArgs {
    #[arg(long, default_value_t = 600.0)]
    period: f64,
    #[arg(long, default_value_t = 2)]
    max_order: u32,
    /// Metal permittivity CSV (`wavelength_nm,eps_real,eps_imag`); defaults to bundled gold.
    #[arg(long)]
    optical_constants: Option<PathBuf>,
    #[arg(long, default_value_t = EPS_GLASS)]
    eps_glass: f64,
    #[arg(long, default_value_t = EPS_AIR)]
    eps_air: f64,
    /// Also report the mode nearest to this wavelength.
    #[arg(long)]
    wavelength: Option<f64>,
}

#[derive(Debug, Args)]
struct BetheArgs {
    #[arg(long, default_value_t = 200.0)]
    diameter: f64,
    #[arg(long, default_value_t = 702.0)]
    wavelength: f64,
    #[arg(long, default_value_t = 600.0)]
    period: f64,
}

#[derive(Debug, Args)]
struct SpectrumArgs {
    /// Spectrum CSV (`wavelength_nm,transmittance`).
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 702.0)]
    wavelength: f64,
    /// Classical transmittance to compute an enhancement factor against.
    #[arg(long)]
    classical: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Scan(args) => scan(&args),
        Command::Fit(args) => fit(&args),
        Command::Debroglie(args) => debroglie(&args),
        Command::Resonance(args) => resonance(&args),
        Command::Bethe(args) => {
            let t = bethe_transmission(args.diameter, args.wavelength, args.period)?;
            println!(
                "{}",
                serde_json::json!({
                    "hole_diameter_nm": args.diameter,
                    "wavelength_nm": args.wavelength,
                    "period_nm": args.period,
                    "transmittance": t,
                })
            );
            Ok(())
        }
        Command::Spectrum(args) => {
            let spec = ingest_spectrum(File::open(&args.input)?)?;
            let t = spec.transmittance_at(args.wavelength)?;
            let mut doc =
                serde_json::json!({ "wavelength_nm": args.wavelength, "transmittance": t });
            if let Some(c) = args.classical {
                doc["classical"] = c.into();
                doc["enhancement"] = enhancement_at(&spec, args.wavelength, c)?.into();
            }
            println!("{doc}");
            Ok(())
        }
    }
}

fn scan(args: &RunArgs) -> Result<()> {
    let cfg = args.load()?;
    let result = run_scenario(&cfg)?;
    emit_scan(&result, args.out.as_deref())
}

fn emit_scan(result: &ScanResult, out: Option<&Path>) -> Result<()> {
    match out {
        Some(dir) => {
            let files = write_outputs(result, dir)?;
            println!("wrote {} and {}", files.csv.display(), files.json.display());
        }
        None => println!("{}", fit_json(result)?),
    }
    Ok(())
}

fn fit(args: &FitArgs) -> Result<()> {
    let curve = read_curve_csv(File::open(&args.input)?, args.column.as_deref())?;
    let opts = FitOptions {
        sign: match args.sign {
            SignArg::Plus => FringeSign::Plus,
            SignArg::Minus => FringeSign::Minus,
        },
        weighting: match args.weights {
            WeightArg::Uniform => Weighting::Uniform,
            WeightArg::Poisson => Weighting::Poisson,
        },
    };
    let fit = match args.period {
        Some(p) => fit_fixed_period_with(&curve, p, &opts)?,
        None => fit_free_period_with(&curve, &args.grid.grid(), &opts)?,
    };
    write_json(&FitReport::from(&fit), args.out.as_deref())
}

fn debroglie(args: &DebroglieArgs) -> Result<()> {
    let grid = args.grid.grid();
    let (curve, weighting) = match &args.input {
        Some(path) => (
            read_curve_csv(File::open(path)?, args.column.as_deref())?,
            Weighting::Uniform,
        ),
        None => {
            let mut cfg = args.run.load()?;
            cfg.fit.enabled = false;
            let weighting = match (cfg.fit.weighting, cfg.mode) {
                (FitWeighting::Poisson, _) | (FitWeighting::Auto, Mode::MonteCarlo) => {
                    Weighting::Poisson
                }
                _ => Weighting::Uniform,
            };
            (run_scenario(&cfg)?.hv_curve(), weighting)
        }
    };
    let fit = fit_free_period_with(
        &curve,
        &grid,
        &FitOptions {
            weighting,
            ..FitOptions::default()
        },
    )?;
    let report = DebroglieReport {
        de_broglie_wavelength_nm: fit.model.period_nm,
        fit: FitReport::from(&fit),
    };
    let path = args.run.out.as_ref().map(|d| d.join("debroglie.json"));
    if let Some(dir) = &args.run.out {
        std::fs::create_dir_all(dir)?;
    }
    write_json(&report, path.as_deref())
}

fn resonance(args: &ResonanceArgs) -> Result<()> {
    let oc = match &args.optical_constants {
        Some(p) => OpticalConstants::from_csv(File::open(p)?, args.eps_glass, args.eps_air)?,
        None => {
            let mut oc = OpticalConstants::sample_gold();
            oc.eps_glass = args.eps_glass;
            oc.eps_air = args.eps_air;
            oc
        }
    };
    println!("mode,interface,resonance_nm,status");
    for (mode, res) in mode_table(args.period, &oc, args.max_order) {
        match res {
            Ok(l) => println!(
                "\"({},{})\",{},{l:.2},ok",
                mode.i(),
                mode.j(),
                mode.interface
            ),
            Err(e) => println!(
                "\"({},{})\",{},,\"{e}\"",
                mode.i(),
                mode.j(),
                mode.interface
            ),
        }
    }
    if let Some(w) = args.wavelength {
        let m = nearest_mode(w, args.period, &oc, args.max_order)?;
        eprintln!(
            "nearest to {w} nm: {} at {:.2} nm (distance {:.2} nm)",
            m.mode, m.resonance_nm, m.distance_nm
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct DebroglieReport {
    de_broglie_wavelength_nm: f64,
    fit: FitReport,
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    match path {
        Some(p) => std::fs::write(p, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}
