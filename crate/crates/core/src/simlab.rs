//! Monte-Carlo studies: estimator quality on simulated samples and
//! model-selection preference under misspecification.

use std::fmt::Write as _;
use std::path::Path;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::GpsParams;
use crate::error::{GpsError, Result};
use crate::estimation::optim::brent;
use crate::estimation::{
    confidence_intervals, em_fit, mle_direct, CensoredSample, DirectOptions, EmOptions, FitResult, ModelSpec,
    ObservedSample,
};
use crate::gof::information_criteria;
use crate::quadrature::Quadrature;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyKind {
    Estimation,
    Misspecification,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyMethod {
    Em,
    Direct,
}

/// Study design. `model` and `competitors` take the same strings as
/// [`ModelSpec::parse`], except that `gg` means the geometric family with
/// θ ∈ (0, 1) here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub kind: StudyKind,
    pub model: String,
    /// True `(β, γ, θ)` per cell; θ is ignored for Gompertz.
    pub params: Vec<[f64; 3]>,
    pub sample_sizes: Vec<usize>,
    pub replicates: usize,
    pub method: StudyMethod,
    pub censoring_fraction: f64,
    pub seed: u64,
    pub competitors: Vec<String>,
    pub level: f64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            kind: StudyKind::Estimation,
            model: "gg".into(),
            params: vec![[0.5, 2.0, 0.9]],
            sample_sizes: vec![30, 50, 100, 200],
            replicates: 1000,
            method: StudyMethod::Em,
            censoring_fraction: 0.0,
            seed: 2024,
            competitors: Vec::new(),
            level: 0.95,
        }
    }
}

fn study_model(spec: &str) -> Result<ModelSpec> {
    match spec.trim().to_ascii_lowercase().as_str() {
        "gg" => Ok(ModelSpec::gg_classic()),
        _ => ModelSpec::parse(spec),
    }
}

fn split_list(v: &str) -> Vec<String> {
    // commas separate entries unless the entry is a polynomial spec like 1:1,20:1
    let sep: &[char] = if v.contains(';') || v.contains(':') { &[';'] } else { &[',', ';'] };
    v.split(sep).map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

fn parse_numbers(v: &str) -> std::result::Result<Vec<f64>, std::num::ParseFloatError> {
    v.split([',', ' ', '\t']).filter(|s| !s.is_empty()).map(str::parse).collect()
}

impl StudyConfig {
    /// Parses JSON (text starting with `{`) or `key = value` lines.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| GpsError::InvalidSpec(format!("study config: {e}")))?
        } else {
            Self::parse_key_values(text)?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn parse_key_values(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |what: &str| GpsError::InvalidSpec(format!("study config line {}: {what}", lineno + 1));
            let (key, value) = line.split_once('=').ok_or_else(|| bad("expected key = value"))?;
            let value = value.trim();
            match key.trim() {
                "kind" => {
                    cfg.kind = match value {
                        "estimation" => StudyKind::Estimation,
                        "misspecification" => StudyKind::Misspecification,
                        _ => return Err(bad("kind must be estimation or misspecification")),
                    }
                }
                "model" => cfg.model = value.to_string(),
                "params" => {
                    cfg.params = value
                        .split(';')
                        .filter(|s| !s.trim().is_empty())
                        .map(|t| match parse_numbers(t).as_deref() {
                            Ok([b, g, th]) => Ok([*b, *g, *th]),
                            Ok([b, g]) => Ok([*b, *g, 1.0]),
                            _ => Err(bad("params are `beta gamma theta` triples separated by ';'")),
                        })
                        .collect::<Result<_>>()?
                }
                "sample_sizes" => {
                    cfg.sample_sizes = value
                        .split([',', ' '])
                        .filter(|s| !s.is_empty())
                        .map(|s| s.parse().map_err(|_| bad("sample sizes must be integers")))
                        .collect::<Result<_>>()?
                }
                "replicates" => cfg.replicates = value.parse().map_err(|_| bad("replicates must be an integer"))?,
                "method" => {
                    cfg.method = match value {
                        "em" => StudyMethod::Em,
                        "direct" => StudyMethod::Direct,
                        _ => return Err(bad("method must be em or direct")),
                    }
                }
                "censoring_fraction" => {
                    cfg.censoring_fraction = value.parse().map_err(|_| bad("censoring_fraction must be a number"))?
                }
                "seed" => cfg.seed = value.parse().map_err(|_| bad("seed must be an unsigned integer"))?,
                "competitors" => cfg.competitors = split_list(value),
                "level" => cfg.level = value.parse().map_err(|_| bad("level must be a number"))?,
                other => return Err(bad(&format!("unknown key '{other}'"))),
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(GpsError::InvalidSpec(m));
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.censoring_fraction) {
            return bad(format!("censoring_fraction {} outside [0, 1)", self.censoring_fraction));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return bad(format!("level {} outside (0, 1)", self.level));
        }
        if self.params.is_empty() || self.sample_sizes.is_empty() {
            return bad("need at least one parameter set and one sample size".into());
        }
        if self.sample_sizes.iter().any(|&n| n < 2) {
            return bad("sample sizes must be at least 2".into());
        }
        let model = study_model(&self.model)?;
        for p in &self.params {
            self.truth(&model, p)?;
        }
        match self.kind {
            StudyKind::Estimation => {
                if self.censoring_fraction > 0.0 && self.method == StudyMethod::Em {
                    return bad("censored cells are fitted with method = direct".into());
                }
            }
            StudyKind::Misspecification => {
                if self.competitors.is_empty() {
                    return bad("misspecification study needs competitors".into());
                }
                for c in &self.competitors {
                    study_model(c)?;
                }
            }
        }
        Ok(())
    }

    fn truth(&self, model: &ModelSpec, p: &[f64; 3]) -> Result<GpsParams> {
        let theta = if model.fixes_theta() { 1.0 } else { p[2] };
        model.params(p[0], p[1], theta)
    }
}

/// Estimator summaries for one cell; vectors are ordered `(β, γ, θ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationMetrics {
    pub ae: [f64; 3],
    pub mse: [f64; 3],
    pub vs: [f64; 3],
    /// Average of the inverse-information diagonal.
    pub ef: [f64; 3],
    pub cp: [f64; 3],
    /// Replicates with usable standard errors (denominator of EF and CP).
    pub with_std_errors: usize,
}

/// Number of replicates in which `competitor` beat the generating model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferenceCount {
    pub competitor: String,
    pub aic: usize,
    pub aicc: usize,
    pub bic: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub n: usize,
    pub truth: [f64; 3],
    /// Free parameters of the generating model.
    pub k: usize,
    pub replicates: usize,
    /// Replicates whose fits all converged and enter the summaries.
    pub valid: usize,
    pub convergence_rate: f64,
    /// Rate of the exponential censoring times, when censoring is on.
    pub censoring_rate: Option<f64>,
    pub observed_censoring: f64,
    pub estimation: Option<EstimationMetrics>,
    pub preferences: Vec<PreferenceCount>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub config: StudyConfig,
    pub cells: Vec<CellReport>,
}

const PARAM_NAMES: [&str; 3] = ["beta", "gamma", "theta"];

impl StudyReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match self.config.kind {
            StudyKind::Estimation => {
                out.push_str("n,beta,gamma,theta,parameter,truth,ae,mse,vs,ef,cp,valid,replicates,censoring_rate\n");
                for c in &self.cells {
                    let Some(m) = &c.estimation else { continue };
                    for j in 0..c.k {
                        let _ = writeln!(
                            out,
                            "{},{},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.4},{},{},{}",
                            c.n,
                            c.truth[0],
                            c.truth[1],
                            c.truth[2],
                            PARAM_NAMES[j],
                            c.truth[j],
                            m.ae[j],
                            m.mse[j],
                            m.vs[j],
                            m.ef[j],
                            m.cp[j],
                            c.valid,
                            c.replicates,
                            c.censoring_rate.map_or(String::new(), |r| format!("{r:.6}"))
                        );
                    }
                }
            }
            StudyKind::Misspecification => {
                out.push_str("n,beta,gamma,theta,competitor,aic,aicc,bic,valid,replicates\n");
                for c in &self.cells {
                    for p in &c.preferences {
                        let _ = writeln!(
                            out,
                            "{},{},{},{},{},{},{},{},{},{}",
                            c.n, c.truth[0], c.truth[1], c.truth[2], p.competitor, p.aic, p.aicc, p.bic, c.valid, c.replicates
                        );
                    }
                }
            }
        }
        out
    }

    /// Fixed-width table, one block per parameter set.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let cfg = &self.config;
        let _ = writeln!(out, "model {}  replicates {}  seed {}", cfg.model, cfg.replicates, cfg.seed);
        let mut truths: Vec<[f64; 3]> = Vec::new();
        for c in &self.cells {
            if !truths.contains(&c.truth) {
                truths.push(c.truth);
            }
        }
        for t in truths {
            let cells: Vec<&CellReport> = self.cells.iter().filter(|c| c.truth == t).collect();
            let _ = writeln!(out, "\n(beta, gamma, theta) = ({}, {}, {})", t[0], t[1], t[2]);
            match cfg.kind {
                StudyKind::Estimation => {
                    let k = cells[0].k;
                    let _ = write!(out, "{:>5} {:>6}", "n", "conv");
                    for metric in ["AE", "MSE", "VS", "EF", "CP"] {
                        for name in &PARAM_NAMES[..k] {
                            let _ = write!(out, " {:>9}", format!("{metric}({})", &name[..1]));
                        }
                    }
                    out.push('\n');
                    for c in cells {
                        let _ = write!(out, "{:>5} {:>6.3}", c.n, c.convergence_rate);
                        if let Some(m) = &c.estimation {
                            for v in [m.ae, m.mse, m.vs, m.ef, m.cp] {
                                for x in &v[..k] {
                                    let _ = write!(out, " {x:>9.4}");
                                }
                            }
                        }
                        out.push('\n');
                    }
                }
                StudyKind::Misspecification => {
                    let _ = writeln!(out, "{:>5} {:>12} {:>6} {:>6} {:>6} {:>6}", "n", "competitor", "AIC", "AICC", "BIC", "valid");
                    for c in cells {
                        for p in &c.preferences {
                            let _ = writeln!(
                                out,
                                "{:>5} {:>12} {:>6} {:>6} {:>6} {:>6}",
                                c.n, p.competitor, p.aic, p.aicc, p.bic, c.valid
                            );
                        }
                    }
                }
            }
        }
        out
    }
}

/// `P(X > C)` for `C ~ Exp(rate)` independent of X, i.e. `1 - E e^{-rate X}`.
pub fn censoring_probability(params: &GpsParams, rate: f64) -> f64 {
    if rate <= 0.0 {
        return 0.0;
    }
    let quad = Quadrature::with_tol(1e-13, 1e-11);
    1.0 - params.integrate(|x| (-rate * x).exp() * params.pdf(x), &quad)
}

/// Exponential censoring rate giving `P(X > C) = fraction`.
pub fn calibrate_censoring_rate(params: &GpsParams, fraction: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(GpsError::Domain(format!("censoring fraction {fraction} outside [0, 1)")));
    }
    if fraction == 0.0 {
        return Ok(0.0);
    }
    let scale = 1.0 / params.quantile(0.5)?;
    let f = |ln_rate: f64| censoring_probability(params, ln_rate.exp()) - fraction;
    let (mut lo, mut hi) = (scale.ln() - 1.0, scale.ln() + 1.0);
    while f(lo) > 0.0 {
        lo -= 2.0;
    }
    while f(hi) < 0.0 {
        hi += 2.0;
    }
    brent(f, lo, hi, 1e-12, 200)
        .map(f64::exp)
        .ok_or_else(|| GpsError::Numerical("censoring rate calibration failed".into()))
}

/// Draws `n` lifetimes, then `n` exponential censoring times from the same
/// generator, and returns `(min(X, C), X ≤ C)`.
fn censored_draws(params: &GpsParams, n: usize, rate: f64, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<bool>) {
    let xs = params.sample(n, rng);
    if rate == 0.0 {
        return (xs.clone(), vec![true; n]);
    }
    xs.into_iter()
        .map(|x| {
            let c = -rng.sample::<f64, _>(Open01).ln() / rate;
            if x <= c {
                (x, true)
            } else {
                (c, false)
            }
        })
        .unzip()
}

/// Right-censored sample with exponential censoring calibrated to `fraction`.
pub fn generate_censored_sample(params: &GpsParams, n: usize, fraction: f64, seed: u64) -> Result<CensoredSample> {
    let rate = calibrate_censoring_rate(params, fraction)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (xs, events) = censored_draws(params, n, rate, &mut rng);
    CensoredSample::new(xs, events)
}

fn replicate_rng(seed: u64, cell: usize, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((cell as u64) << 32) | rep as u64);
    rng
}

struct EstimationDraw {
    estimates: [f64; 3],
    variances: Option<[f64; 3]>,
    covered: Option<[bool; 3]>,
    censored: f64,
}

fn fit_replicate(
    model: &ModelSpec,
    method: StudyMethod,
    xs: Vec<f64>,
    events: Vec<bool>,
) -> Result<FitResult> {
    match method {
        StudyMethod::Em => em_fit(model, &ObservedSample::new(xs)?, None, &EmOptions::default()),
        StudyMethod::Direct => {
            let data = CensoredSample::new(xs, events)?;
            if data.n_events() == data.len() {
                mle_direct(model, &ObservedSample::new(data.values().to_vec())?, &DirectOptions::default())
            } else {
                mle_direct(model, &data, &DirectOptions::default())
            }
        }
    }
}

fn estimation_draw(
    cfg: &StudyConfig,
    model: &ModelSpec,
    truth: &GpsParams,
    n: usize,
    rate: f64,
    mut rng: ChaCha8Rng,
) -> Option<EstimationDraw> {
    let (xs, events) = censored_draws(truth, n, rate, &mut rng);
    let censored = events.iter().filter(|&&e| !e).count() as f64 / n as f64;
    let fit = fit_replicate(model, cfg.method, xs, events).ok()?;
    if !fit.converged {
        return None;
    }
    let target = [truth.beta(), truth.gamma(), truth.theta()];
    let (variances, covered) = match (fit.std_errors, confidence_intervals(&fit, cfg.level)) {
        (Some(se), Ok(ci)) => {
            let mut cov = [false; 3];
            for (j, c) in ci.iter().enumerate() {
                cov[j] = c.contains(target[j]);
            }
            (Some([se[0] * se[0], se[1] * se[1], se[2] * se[2]]), Some(cov))
        }
        _ => (None, None),
    };
    Some(EstimationDraw { estimates: fit.estimates(), variances, covered, censored })
}

fn summarize(draws: &[EstimationDraw], truth: [f64; 3], k: usize) -> EstimationMetrics {
    let m = draws.len() as f64;
    let mut ae = [0.0; 3];
    let mut mse = [0.0; 3];
    let mut vs = [0.0; 3];
    let mut ef = [0.0; 3];
    let mut cp = [0.0; 3];
    for j in 0..k {
        ae[j] = draws.iter().map(|d| d.estimates[j]).sum::<f64>() / m;
        mse[j] = draws.iter().map(|d| (d.estimates[j] - truth[j]).powi(2)).sum::<f64>() / m;
        vs[j] = draws.iter().map(|d| (d.estimates[j] - ae[j]).powi(2)).sum::<f64>() / m;
    }
    let with_se: Vec<&EstimationDraw> = draws.iter().filter(|d| d.variances.is_some()).collect();
    let ms = with_se.len() as f64;
    for j in 0..k {
        if ms > 0.0 {
            ef[j] = with_se.iter().map(|d| d.variances.unwrap()[j]).sum::<f64>() / ms;
            cp[j] = with_se.iter().filter(|d| d.covered.unwrap()[j]).count() as f64 / ms;
        } else {
            ef[j] = f64::NAN;
            cp[j] = f64::NAN;
        }
    }
    for j in k..3 {
        for v in [&mut ae, &mut mse, &mut vs, &mut ef, &mut cp] {
            v[j] = f64::NAN;
        }
    }
    EstimationMetrics { ae, mse, vs, ef, cp, with_std_errors: with_se.len() }
}

fn cells(cfg: &StudyConfig) -> Vec<([f64; 3], usize)> {
    cfg.params.iter().flat_map(|p| cfg.sample_sizes.iter().map(move |&n| (*p, n))).collect()
}

/// Simulates, fits and summarizes every `(params, n)` cell. Replicates run
/// in parallel; each draws from its own ChaCha stream so results do not
/// depend on the thread count.
pub fn run_estimation_study(cfg: &StudyConfig) -> Result<StudyReport> {
    cfg.validate()?;
    let model = study_model(&cfg.model)?;
    let mut out = Vec::new();
    for (ci, (p, n)) in cells(cfg).into_iter().enumerate() {
        let truth = cfg.truth(&model, &p)?;
        let rate = calibrate_censoring_rate(&truth, cfg.censoring_fraction)?;
        let draws: Vec<Option<EstimationDraw>> = (0..cfg.replicates)
            .into_par_iter()
            .map(|r| estimation_draw(cfg, &model, &truth, n, rate, replicate_rng(cfg.seed, ci, r)))
            .collect();
        let draws: Vec<EstimationDraw> = draws.into_iter().flatten().collect();
        let target = [truth.beta(), truth.gamma(), truth.theta()];
        let k = model.free_parameters();
        let valid = draws.len();
        out.push(CellReport {
            n,
            truth: target,
            k,
            replicates: cfg.replicates,
            valid,
            convergence_rate: valid as f64 / cfg.replicates as f64,
            censoring_rate: (cfg.censoring_fraction > 0.0).then_some(rate),
            observed_censoring: if valid > 0 { draws.iter().map(|d| d.censored).sum::<f64>() / valid as f64 } else { 0.0 },
            estimation: (valid > 0).then(|| summarize(&draws, target, k)),
            preferences: Vec::new(),
        });
    }
    Ok(StudyReport { config: cfg.clone(), cells: out })
}

/// For each replicate fits the generating model and every competitor, and
/// counts how often a competitor's AIC, AICC and BIC are strictly smaller.
pub fn run_misspecification_study(cfg: &StudyConfig) -> Result<StudyReport> {
    cfg.validate()?;
    let model = study_model(&cfg.model)?;
    let competitors: Vec<ModelSpec> = cfg.competitors.iter().map(|c| study_model(c)).collect::<Result<_>>()?;
    let mut out = Vec::new();
    for (ci, (p, n)) in cells(cfg).into_iter().enumerate() {
        let truth = cfg.truth(&model, &p)?;
        let wins: Vec<Option<Vec<[bool; 3]>>> = (0..cfg.replicates)
            .into_par_iter()
            .map(|r| {
                let mut rng = replicate_rng(cfg.seed, ci, r);
                let data = ObservedSample::new(truth.sample(n, &mut rng)).ok()?;
                let criteria = |m: &ModelSpec| -> Option<[Option<f64>; 3]> {
                    let fit = mle_direct(m, &data, &DirectOptions::default()).ok()?;
                    if !fit.converged {
                        return None;
                    }
                    let ic = information_criteria(fit.loglik, fit.k, n);
                    Some([Some(ic.aic), ic.aicc, Some(ic.bic)])
                };
                let base = criteria(&model)?;
                competitors
                    .iter()
                    .map(|c| {
                        let v = criteria(c)?;
                        Some(std::array::from_fn(|j| matches!((v[j], base[j]), (Some(a), Some(b)) if a < b)))
                    })
                    .collect()
            })
            .collect();
        let wins: Vec<Vec<[bool; 3]>> = wins.into_iter().flatten().collect();
        let preferences = competitors
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let count = |j: usize| wins.iter().filter(|w| w[i][j]).count();
                PreferenceCount { competitor: c.name(), aic: count(0), aicc: count(1), bic: count(2) }
            })
            .collect();
        out.push(CellReport {
            n,
            truth: [truth.beta(), truth.gamma(), truth.theta()],
            k: model.free_parameters(),
            replicates: cfg.replicates,
            valid: wins.len(),
            convergence_rate: wins.len() as f64 / cfg.replicates as f64,
            censoring_rate: None,
            observed_censoring: 0.0,
            estimation: None,
            preferences,
        });
    }
    Ok(StudyReport { config: cfg.clone(), cells: out })
}

/// Dispatches on [`StudyConfig::kind`].
pub fn run_study(cfg: &StudyConfig) -> Result<StudyReport> {
    match cfg.kind {
        StudyKind::Estimation => run_estimation_study(cfg),
        StudyKind::Misspecification => run_misspecification_study(cfg),
    }
}
