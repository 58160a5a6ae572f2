//! Command-line front end behind the `gps` binary.
//!
//! Exit codes: 0 success, 1 bad input or I/O failure, 2 a fit that did not
//! converge.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use crate::data::{glass_fibres, Dataset};
use crate::distribution::{linear_grid, GpsParams};
use crate::error::{GpsError, Result};
use crate::estimation::{em_fit, mle_direct, DirectOptions, EmOptions, FitResult, ModelSpec, ObservedSample};
use crate::gof::{information_criteria, GofReport};
use crate::simlab::{run_study, StudyConfig};

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20_240_101;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "gps", version, about = "Gompertz power-series lifetime distributions")]
pub struct Cli {
    /// Random seed for sampling and studies.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output format for records and tables.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    JsonRecord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Direct,
    Em,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one model to a dataset and report estimates and fit statistics.
    Fit(FitArgs),
    /// Draw a sample by inverse transform.
    Sample(SampleArgs),
    /// Tabulate pdf, cdf, survival and hazard on a grid.
    Curve(CurveArgs),
    /// Run a Monte-Carlo study described by a config file.
    Study(StudyArgs),
    /// Fit several models and compare them by K-S, AIC, AICC and BIC.
    Gof(GofArgs),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// gompertz, gg, gg-classic, gp, gb, gl, gb(m), a preset name or a
    /// polynomial such as 1:1,20:1.
    #[arg(long)]
    pub family: String,
    /// Replica count for `--family gb`.
    #[arg(long)]
    pub m: Option<u32>,
}

impl ModelArgs {
    fn model(&self) -> Result<ModelSpec> {
        model_from(&self.family, self.m)
    }
}

fn model_from(family: &str, m: Option<u32>) -> Result<ModelSpec> {
    match (family.trim().to_ascii_lowercase().as_str(), m) {
        ("gb", Some(m)) => ModelSpec::gb(m),
        (_, Some(_)) => Err(GpsError::InvalidSpec("--m only applies to --family gb".into())),
        _ => ModelSpec::parse(family),
    }
}

#[derive(Debug, Args)]
pub struct ParamArgs {
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub gamma: f64,
    /// Mixing parameter; ignored by θ-free families. For `gg` this is the
    /// extended θ < 1.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub theta: f64,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV file (value[,event]) or builtin:glass-fibres.
    #[arg(long)]
    pub data: String,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = Method::Direct)]
    pub method: Method,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(short, long)]
    pub n: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub params: ParamArgs,
    /// `from:to:points`, e.g. 0:3:301.
    #[arg(long, default_value = "0:3:301")]
    pub grid: String,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = ".")]
    pub output_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct GofArgs {
    #[arg(long, default_value = "builtin:glass-fibres")]
    pub data: String,
    /// Models to compare, separated by ';'.
    #[arg(long, default_value = "gompertz;gg;gp;gb(5);gl")]
    pub models: String,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn load_dataset(spec: &str) -> Result<Dataset> {
    match spec {
        "builtin:glass-fibres" => Ok(Dataset { values: glass_fibres().values().to_vec(), events: None }),
        path => Dataset::read(Path::new(path)),
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn model_params(model: &ModelSpec, p: &ParamArgs) -> Result<GpsParams> {
    let theta = if model.fixes_theta() { 1.0 } else { p.theta };
    model.params(p.beta, p.gamma, theta)
}

fn fit_dataset(model: &ModelSpec, data: &Dataset, method: Method) -> Result<FitResult> {
    match (method, data.is_censored()) {
        (Method::Em, true) => Err(GpsError::InvalidSpec("EM handles complete data only; use --method direct".into())),
        (Method::Em, false) => em_fit(model, &data.to_observed()?, None, &EmOptions::default()),
        (Method::Direct, true) => mle_direct(model, &data.to_censored()?, &DirectOptions::default()),
        (Method::Direct, false) => mle_direct(model, &data.to_observed()?, &DirectOptions::default()),
    }
}

/// Fit record extended with K-S (complete data only) and information criteria.
pub fn fit_record(fit: &FitResult, data: &Dataset) -> Result<Map<String, Value>> {
    let Value::Object(mut rec) = fit.to_record() else { unreachable!("records are objects") };
    let num = |v: f64| if v.is_finite() { Value::from(v) } else { Value::Null };
    if data.is_censored() {
        let ic = information_criteria(fit.loglik, fit.k, fit.n);
        rec.insert("ks_stat".into(), Value::Null);
        rec.insert("ks_pvalue".into(), Value::Null);
        rec.insert("aic".into(), num(ic.aic));
        rec.insert("aicc".into(), ic.aicc.map_or(Value::Null, num));
        rec.insert("bic".into(), num(ic.bic));
    } else {
        let g = GofReport::from_fit(fit, &ObservedSample::new(data.values.clone())?);
        rec.insert("ks_stat".into(), num(g.ks_stat));
        rec.insert("ks_pvalue".into(), num(g.ks_pvalue));
        rec.insert("aic".into(), num(g.aic));
        rec.insert("aicc".into(), g.aicc.map_or(Value::Null, num));
        rec.insert("bic".into(), num(g.bic));
    }
    Ok(rec)
}

fn csv_cell(v: Option<&Value>) -> String {
    match v {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) if s.contains(',') => format!("\"{s}\""),
        Some(Value::String(s)) => s.clone(),
        Some(v) => v.to_string(),
    }
}

/// Writes records as CSV over the union of their keys, or one JSON object
/// per line.
pub fn write_records<W: Write>(records: &[Map<String, Value>], format: Format, mut out: W) -> Result<()> {
    match format {
        Format::JsonRecord => {
            for r in records {
                writeln!(out, "{}", serde_json::to_string(r)?)?;
            }
        }
        Format::Csv => {
            let mut keys: Vec<&String> = Vec::new();
            let mut widest: Vec<&Map<String, Value>> = records.iter().collect();
            widest.sort_by_key(|r| std::cmp::Reverse(r.len()));
            for r in widest {
                for k in r.keys() {
                    if !keys.contains(&k) {
                        keys.push(k);
                    }
                }
            }
            writeln!(out, "{}", keys.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(","))?;
            for r in records {
                let row: Vec<String> = keys.iter().map(|k| csv_cell(r.get(*k))).collect();
                writeln!(out, "{}", row.join(","))?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_fit(args: &FitArgs, format: Format) -> Result<i32> {
    let data = load_dataset(&args.data)?;
    let model = args.model.model()?;
    let fit = match fit_dataset(&model, &data, args.method) {
        Err(GpsError::Numerical(msg)) => {
            eprintln!("gps: fit failed: {msg}");
            return Ok(EXIT_NOT_CONVERGED);
        }
        other => other?,
    };
    write_records(&[fit_record(&fit, &data)?], format, open_output(args.output.as_deref())?)?;
    if fit.converged {
        Ok(EXIT_OK)
    } else {
        eprintln!("gps: {} fit did not converge after {} iterations", model.name(), fit.iterations);
        Ok(EXIT_NOT_CONVERGED)
    }
}

fn cmd_sample(args: &SampleArgs, seed: u64, format: Format) -> Result<i32> {
    let params = model_params(&args.model.model()?, &args.params)?;
    let records: Vec<Map<String, Value>> = params
        .sample_seeded(args.n, seed)
        .into_iter()
        .map(|x| Map::from_iter([("x".to_string(), Value::from(x))]))
        .collect();
    if records.is_empty() && format == Format::Csv {
        // keep the header so the file still reads back as an empty sample
        let mut out = open_output(args.output.as_deref())?;
        writeln!(out, "x")?;
        out.flush()?;
        return Ok(EXIT_OK);
    }
    write_records(&records, format, open_output(args.output.as_deref())?)?;
    Ok(EXIT_OK)
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || GpsError::InvalidSpec(format!("grid '{spec}' is not from:to:points"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [from, to, points] = parts.as_slice() else { return Err(bad()) };
    let from: f64 = from.trim().parse().map_err(|_| bad())?;
    let to: f64 = to.trim().parse().map_err(|_| bad())?;
    let points: usize = points.trim().parse().map_err(|_| bad())?;
    linear_grid(from, to, points)
}

fn cmd_curve(args: &CurveArgs, format: Format) -> Result<i32> {
    let params = model_params(&args.model.model()?, &args.params)?;
    let grid = parse_grid(&args.grid)?;
    let records: Vec<Map<String, Value>> = params
        .curve(&grid)
        .into_iter()
        .map(|row| ["x", "pdf", "cdf", "survival", "hazard"].iter().zip(row).map(|(k, v)| (k.to_string(), Value::from(v))).collect())
        .collect();
    write_records(&records, format, open_output(args.output.as_deref())?)?;
    Ok(EXIT_OK)
}

fn cmd_study(args: &StudyArgs, seed: Option<u64>, format: Format) -> Result<i32> {
    let mut cfg = StudyConfig::read(&args.config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let report = run_study(&cfg)?;
    std::fs::create_dir_all(&args.output_dir)?;
    let stem = args.config.file_stem().and_then(|s| s.to_str()).unwrap_or("study");
    std::fs::write(args.output_dir.join(format!("{stem}.csv")), report.to_csv())?;
    std::fs::write(args.output_dir.join(format!("{stem}.txt")), report.to_table())?;
    if format == Format::JsonRecord {
        std::fs::write(args.output_dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&report)? + "\n")?;
    }
    print!("{}", report.to_table());
    Ok(EXIT_OK)
}

fn cmd_gof(args: &GofArgs, format: Format) -> Result<i32> {
    let data = load_dataset(&args.data)?;
    let mut records = Vec::new();
    let mut code = EXIT_OK;
    for spec in args.models.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let model = ModelSpec::parse(spec)?;
        match fit_dataset(&model, &data, Method::Direct) {
            Ok(fit) => {
                if !fit.converged {
                    code = EXIT_NOT_CONVERGED;
                }
                records.push(fit_record(&fit, &data)?);
            }
            Err(GpsError::Numerical(msg)) => {
                eprintln!("gps: {spec}: {msg}");
                code = EXIT_NOT_CONVERGED;
            }
            Err(e) => return Err(e),
        }
    }
    write_records(&records, format, open_output(args.output.as_deref())?)?;
    Ok(code)
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    let result = match &cli.command {
        Command::Fit(a) => cmd_fit(a, cli.format),
        Command::Sample(a) => cmd_sample(a, seed, cli.format),
        Command::Curve(a) => cmd_curve(a, cli.format),
        Command::Study(a) => cmd_study(a, cli.seed, cli.format),
        Command::Gof(a) => cmd_gof(a, cli.format),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("gps: {e}");
            EXIT_ERROR
        }
    }
}

/// Parses `std::env::args` and runs. Usage errors exit with code 1.
pub fn main() -> i32 {
    match Cli::try_parse() {
        Ok(cli) => run(cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}
