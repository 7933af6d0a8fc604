//! Command-line definitions and dispatch.

use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use casecontrol::montecarlo::{Statistic, StatisticBattery, DEFAULT_BINS};
use casecontrol::robust::Sidedness;
use casecontrol::TrendScore;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analyze::{analyze, parse_tables, AnalyzeSettings};
use crate::report::{num, opt_num, render, Format, Provenance, Table};
use crate::scenarios::ScenarioPack;
use crate::simulate::{
    all_failed, resolve_calibrations, run_corr, run_criticals, run_crosstab, run_power, CriticalMethod, RunSettings,
};

/// Robust trend, maximum and chi-square tests for case-control genotype
/// tables, and the Monte Carlo experiments that compare them.
///
/// Simulations run on all cores; set RAYON_NUM_THREADS to change the
/// default thread count. Results do not depend on it.
#[derive(Debug, Parser)]
#[command(name = "casecontrol", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate statistics on genotype tables (r0 r1 r2 s0 s1 s2 per line).
    Analyze(AnalyzeArgs),
    /// Estimate critical values under each scenario's null, then power.
    Power(PowerArgs),
    /// Mean correlations of Z_0, Z_1/2 and Z_1 over simulated tables.
    Corr(CorrArgs),
    /// Cross-classify the p-values of two statistics on the same tables.
    Crosstab(CrosstabArgs),
    /// Critical values under each scenario's null.
    Criticals(CriticalsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Side {
    One,
    Two,
}

impl From<Side> for Sidedness {
    fn from(s: Side) -> Self {
        match s {
            Side::One => Sidedness::One,
            Side::Two => Sidedness::Two,
        }
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BatteryArgs {
    /// `standard`, `rec_add`, `full`, or a comma-separated list of ids
    /// (Z0, Z_HALF, Z1, MERT, MERT_REC_ADD, MAX2, MAX2_REC_ADD, MAX3, MAX3_MERT,
    /// MAXGRID, CHI2_2DF, AA, HWD, T_P, T_MAX).
    #[arg(long)]
    pub battery: Option<String>,
    #[arg(long, value_enum, default_value = "two")]
    pub sidedness: Side,
    /// Middle scores for MAXGRID, comma-separated (default 0, 0.1, ..., 1).
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Scenario pack (TOML).
    #[arg(long)]
    pub scenarios: PathBuf,
    /// Run only these scenario ids.
    #[arg(long, value_delimiter = ',')]
    pub only: Option<Vec<String>>,
    /// Master seed; every random stream is derived from it.
    #[arg(long)]
    pub seed: u64,
    /// Override the continuity correction of every scenario.
    #[arg(long, value_enum)]
    pub correction: Option<Switch>,
    /// Power replicates per bisection step when calibrating penetrances.
    #[arg(long, default_value_t = 10_000)]
    pub calibration_replicates: usize,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Table file; `-` reads standard input.
    #[arg(long, default_value = "-")]
    pub input: PathBuf,
    #[command(flatten)]
    pub battery: BatteryArgs,
    /// Add 1/2 to every cell before computing statistics.
    #[arg(long, value_enum, default_value = "off")]
    pub correction: Switch,
    /// Permutation replicates; asymptotic p-values are reported otherwise.
    #[arg(long, requires = "seed")]
    pub permutations: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct PowerArgs {
    #[command(flatten)]
    pub scenarios: ScenarioArgs,
    #[command(flatten)]
    pub battery: BatteryArgs,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 200_000)]
    pub b_null: usize,
    #[arg(long, default_value_t = 10_000)]
    pub b_power: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CorrArgs {
    #[command(flatten)]
    pub scenarios: ScenarioArgs,
    /// Null replicates, used only when penetrances are calibrated.
    #[arg(long, default_value_t = 200_000)]
    pub b_null: usize,
    /// Replicates per scenario.
    #[arg(long, default_value_t = 10_000)]
    pub b_power: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CrosstabArgs {
    #[command(flatten)]
    pub scenarios: ScenarioArgs,
    #[arg(long, default_value = "MAX3")]
    pub stat_a: String,
    #[arg(long, default_value = "CHI2_2DF")]
    pub stat_b: String,
    /// Upper bin edges, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub bins: Option<Vec<f64>>,
    #[command(flatten)]
    pub battery: BatteryArgs,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 200_000)]
    pub b_null: usize,
    /// Replicates per scenario.
    #[arg(long, default_value_t = 5000)]
    pub b_power: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Simulate,
    Normal,
}

#[derive(Debug, Args)]
pub struct CriticalsArgs {
    #[command(flatten)]
    pub scenarios: ScenarioArgs,
    #[command(flatten)]
    pub battery: BatteryArgs,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 200_000)]
    pub b_null: usize,
    /// `normal` uses asymptotic laws, with a multivariate-normal
    /// approximation for the maxima.
    #[arg(long, value_enum, default_value = "simulate")]
    pub method: Method,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Output of a command and whether it should exit with failure.
pub struct Outcome {
    pub text: String,
    pub failures: Vec<String>,
}

pub fn parse_battery(spec: &str, args: &BatteryArgs) -> Result<StatisticBattery> {
    let sidedness = args.sidedness.into();
    let statistics = match spec.trim().to_ascii_lowercase().as_str() {
        "standard" => StatisticBattery::standard(sidedness).statistics().to_vec(),
        "rec_add" => StatisticBattery::rec_add(sidedness).statistics().to_vec(),
        "full" => StatisticBattery::full(sidedness).statistics().to_vec(),
        _ => spec
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(str::parse)
            .collect::<casecontrol::Result<Vec<Statistic>>>()?,
    };
    Ok(match &args.grid {
        Some(xs) => {
            let grid = xs.iter().map(|&x| TrendScore::new(x)).collect::<casecontrol::Result<Vec<_>>>()?;
            StatisticBattery::with_grid(statistics, sidedness, grid)?
        }
        None => StatisticBattery::new(statistics, sidedness)?,
    })
}

fn load_pack(args: &ScenarioArgs) -> Result<ScenarioPack> {
    let mut pack = ScenarioPack::load(&args.scenarios)?;
    if let Some(ids) = &args.only {
        pack.select(ids)?;
    }
    if let Some(c) = args.correction {
        pack.set_correction(c == Switch::On);
    }
    Ok(pack)
}

fn provenance(command: &str, args: &[String], pack: Option<&ScenarioPack>, settings: Option<&RunSettings>) -> Provenance {
    let mut p = Provenance::new(command, args.to_vec());
    if let Some(pack) = pack {
        p.scenarios = Some(pack.path.display().to_string());
        p.scenarios_sha256 = Some(pack.sha256.clone());
    }
    if let Some(s) = settings {
        p.seed = Some(s.seed);
        p.alpha = Some(s.alpha);
        p.sidedness = s.sidedness().to_string();
        p.battery = s.battery.statistics().iter().map(|s| s.id().to_string()).collect();
    }
    p
}

fn settings(
    pack: &ScenarioPack,
    battery: Option<&BatteryArgs>,
    fallback: &str,
    alpha: f64,
    b_null: usize,
    b_power: usize,
    seed: u64,
) -> Result<RunSettings> {
    let default_args = BatteryArgs {
        battery: None,
        sidedness: Side::Two,
        grid: None,
    };
    let args = battery.unwrap_or(&default_args);
    let spec = args.battery.as_deref().or(pack.battery.as_deref()).unwrap_or(fallback);
    if !(alpha > 0.0 && alpha < 1.0) {
        bail!("--alpha must lie in (0, 1), got {alpha}");
    }
    Ok(RunSettings {
        battery: parse_battery(spec, args)?,
        alpha,
        null_replicates: b_null,
        replicates: b_power,
        seed,
    })
}

fn calibration_notes(p: &mut Provenance, cals: &[(String, casecontrol::montecarlo::Calibration)]) {
    for (id, c) in cals {
        let f = c.penetrance;
        p.notes.push(format!(
            "calibrated {id}: f0={} f1={} f2={} power={} iterations={}",
            f.f0, f.f1, f.f2, c.power, c.iterations
        ));
    }
}

pub fn run(cli: &Cli, args: &[String]) -> Result<Outcome> {
    match &cli.command {
        Command::Analyze(a) => cmd_analyze(a, args),
        Command::Power(a) => cmd_power(a, args),
        Command::Corr(a) => cmd_corr(a, args),
        Command::Crosstab(a) => cmd_crosstab(a, args),
        Command::Criticals(a) => cmd_criticals(a, args),
    }
}

fn cmd_analyze(a: &AnalyzeArgs, args: &[String]) -> Result<Outcome> {
    let text = if a.input.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        s
    } else {
        fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?
    };
    let records = parse_tables(&text)?;
    let battery = parse_battery(a.battery.battery.as_deref().unwrap_or("full"), &a.battery)?;
    let settings = AnalyzeSettings {
        battery,
        correction: a.correction == Switch::On,
        permutations: a.permutations.zip(a.seed),
    };
    let reports = records.iter().map(|r| analyze(r, &settings)).collect::<Result<Vec<_>>>()?;

    let mut table = Table::new(&["line", "quantity", "value", "p_one_sided", "p_two_sided", "method", "error"]);
    for r in &reports {
        let line = r.line.to_string();
        for s in &r.statistics {
            let method = serde_json::to_value(s.method)?.as_str().unwrap_or_default().to_string();
            table.push(vec![
                line.clone(),
                s.statistic.id().to_string(),
                opt_num(s.value),
                opt_num(s.p_one_sided),
                opt_num(s.p_two_sided),
                method,
                s.error.clone().unwrap_or_default(),
            ]);
        }
        let mut extra = |quantity: &str, value: String| {
            table.push(vec![line.clone(), quantity.into(), value, String::new(), String::new(), String::new(), String::new()]);
        };
        if let Some(c) = r.correlations {
            extra("rho_0_half", num(c.rho_0_half));
            extra("rho_0_1", num(c.rho_0_1));
            extra("rho_half_1", num(c.rho_half_1));
        }
        extra("certificate", r.certificate.map(|b| b.to_string()).unwrap_or_default());
        extra("mert_are", opt_num(r.mert_are));
        extra("recommendation", r.recommendation.map(|x| x.note().to_string()).unwrap_or_default());
    }
    let mut p = Provenance::new("analyze", args.to_vec());
    p.seed = a.seed;
    p.b_null = a.permutations;
    p.sidedness = settings.battery.sidedness().to_string();
    p.battery = settings.battery.statistics().iter().map(|s| s.id().to_string()).collect();
    p.notes.push(format!("correction: {}", settings.correction));
    Ok(Outcome {
        text: render(a.output.format, &p, &table, &reports)?,
        failures: Vec::new(),
    })
}

fn cmd_power(a: &PowerArgs, args: &[String]) -> Result<Outcome> {
    let mut pack = load_pack(&a.scenarios)?;
    let s = settings(&pack, Some(&a.battery), "standard", a.alpha, a.b_null, a.b_power, a.scenarios.seed)?;
    let cals = resolve_calibrations(&mut pack, &s, a.scenarios.calibration_replicates)?;
    let results = run_power(&pack, &s)?;

    let mut table = Table::new(&["scenario", "statistic", "value", "se", "b", "seed"]);
    for r in &results {
        for e in &r.power.entries {
            table.push(vec![
                r.scenario.id.clone(),
                e.statistic.id().into(),
                num(e.rate),
                num(e.se),
                r.power.replicates.to_string(),
                s.seed.to_string(),
            ]);
        }
    }
    let mut p = provenance("power", args, Some(&pack), Some(&s));
    p.b_null = Some(s.null_replicates);
    p.b_power = Some(s.replicates);
    calibration_notes(&mut p, &cals);
    Ok(Outcome {
        text: render(a.output.format, &p, &table, &results)?,
        failures: all_failed(&results),
    })
}

fn cmd_corr(a: &CorrArgs, args: &[String]) -> Result<Outcome> {
    let mut pack = load_pack(&a.scenarios)?;
    let s = settings(&pack, None, "standard", a.alpha, a.b_null, a.b_power, a.scenarios.seed)?;
    let cals = resolve_calibrations(&mut pack, &s, a.scenarios.calibration_replicates)?;
    let results = run_corr(&pack, &s)?;

    let mut table = Table::new(&["scenario", "statistic", "value", "se", "b", "seed"]);
    let mut failures = Vec::new();
    for r in &results {
        let c = &r.correlations;
        for (name, (v, se)) in ["rho_0_half", "rho_0_1", "rho_half_1"].iter().zip(c.mean.as_array().into_iter().zip(c.se)) {
            table.push(vec![
                r.scenario.clone(),
                name.to_string(),
                num(v),
                num(se),
                c.replicates.to_string(),
                s.seed.to_string(),
            ]);
        }
        if c.errors == c.replicates {
            failures.push(format!("{}: correlations undefined on every replicate", r.scenario));
        }
    }
    let mut p = provenance("corr", args, Some(&pack), None);
    p.seed = Some(s.seed);
    p.b_power = Some(s.replicates);
    calibration_notes(&mut p, &cals);
    Ok(Outcome {
        text: render(a.output.format, &p, &table, &results)?,
        failures,
    })
}

fn bin_labels(bins: &[f64]) -> Vec<String> {
    let mut labels = vec![format!("<{}", bins[0])];
    labels.extend(bins.windows(2).map(|w| format!("[{},{})", w[0], w[1])));
    labels.push(format!(">={}", bins[bins.len() - 1]));
    labels
}

fn cmd_crosstab(a: &CrosstabArgs, args: &[String]) -> Result<Outcome> {
    let stat_a: Statistic = a.stat_a.parse()?;
    let stat_b: Statistic = a.stat_b.parse()?;
    let mut pack = load_pack(&a.scenarios)?;
    let spec = format!("{stat_a},{stat_b}");
    let battery_spec = if stat_a == stat_b { stat_a.id().to_string() } else { spec };
    let battery = BatteryArgs {
        battery: Some(battery_spec),
        sidedness: a.battery.sidedness,
        grid: a.battery.grid.clone(),
    };
    let s = settings(&pack, Some(&battery), "", a.alpha, a.b_null, a.b_power, a.scenarios.seed)?;
    let cals = resolve_calibrations(&mut pack, &s, a.scenarios.calibration_replicates)?;
    let bins = a.bins.clone().unwrap_or_else(|| DEFAULT_BINS.to_vec());
    let results = run_crosstab(&pack, &s, stat_a, stat_b, &bins)?;

    let labels = bin_labels(&bins);
    let mut table = Table::new(&["scenario", "stat_a", "stat_b", "bin_a", "bin_b", "count", "b", "seed"]);
    for x in &results {
        for (i, row) in x.counts.iter().enumerate() {
            for (j, count) in row.iter().enumerate() {
                table.push(vec![
                    x.scenario.clone(),
                    stat_a.id().into(),
                    stat_b.id().into(),
                    labels[i].clone(),
                    labels[j].clone(),
                    count.to_string(),
                    x.replicates.to_string(),
                    s.seed.to_string(),
                ]);
            }
        }
    }
    let mut p = provenance("crosstab", args, Some(&pack), Some(&s));
    p.b_null = Some(s.null_replicates);
    p.b_power = Some(s.replicates);
    calibration_notes(&mut p, &cals);
    Ok(Outcome {
        text: render(a.output.format, &p, &table, &results)?,
        failures: Vec::new(),
    })
}

fn cmd_criticals(a: &CriticalsArgs, args: &[String]) -> Result<Outcome> {
    let pack = load_pack(&a.scenarios)?;
    let s = settings(&pack, Some(&a.battery), "standard", a.alpha, a.b_null, 1, a.scenarios.seed)?;
    let method = match a.method {
        Method::Simulate => CriticalMethod::Simulate,
        Method::Normal => CriticalMethod::Normal,
    };
    let rows = run_criticals(&pack, &s, method)?;

    let mut table = Table::new(&["scenario", "statistic", "value", "se", "b", "seed"]);
    let mut failures = Vec::new();
    for r in &rows {
        table.push(vec![
            r.scenario.clone(),
            r.statistic.id().into(),
            opt_num(r.threshold),
            String::new(),
            s.null_replicates.to_string(),
            s.seed.to_string(),
        ]);
        if method == CriticalMethod::Simulate && r.errors == s.null_replicates {
            failures.push(format!("{}: {} errored on every null replicate", r.scenario, r.statistic));
        }
    }
    let mut p = provenance("criticals", args, Some(&pack), Some(&s));
    p.b_null = Some(s.null_replicates);
    p.notes.push(format!("method: {}", serde_json::to_value(method)?.as_str().unwrap_or_default()));
    Ok(Outcome {
        text: render(a.output.format, &p, &table, &rows)?,
        failures,
    })
}

/// Parses the process arguments, runs the command and writes its output.
/// Returns the process exit code.
pub fn main() -> i32 {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse_from(&argv);
    let shown: Vec<String> = argv.iter().skip(1).cloned().collect();
    let outcome = match run(&cli, &shown) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            return 1;
        }
    };
    let output = match &cli.command {
        Command::Analyze(a) => &a.output,
        Command::Power(a) => &a.output,
        Command::Corr(a) => &a.output,
        Command::Crosstab(a) => &a.output,
        Command::Criticals(a) => &a.output,
    };
    let written = match &output.out {
        Some(path) => fs::write(path, &outcome.text).with_context(|| format!("writing {}", path.display())),
        None => io::stdout().write_all(outcome.text.as_bytes()).map_err(Into::into),
    };
    if let Err(e) = written {
        eprintln!("error: {e:#}");
        return 1;
    }
    for f in &outcome.failures {
        eprintln!("error: statistic failed on every replicate: {f}");
    }
    i32::from(!outcome.failures.is_empty())
}
