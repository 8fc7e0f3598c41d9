//! Reconstruction sweeps over noise level and sampling density.
//!
//! A config is a `key = value` text file (`#` comments, lists separated by
//! commas). The sweep covers `noise_levels x {fixed_samples}` together with
//! `{fixed_noise} x samples_levels`; every point runs `trials` repetitions
//! with per-trial seed `seed + trial`. Within one trial the signal, the
//! sample times and the unit noise draws are shared by all points and
//! methods.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::baselines::{krr_grid, KrrConfig, ScSmoother};
use crate::complex::ChainComplexRep;
use crate::error::{Error, Result};
use crate::hodge::{spectral_bases, HodgeBases};
use crate::io::resolve_complex;
use crate::learn::{
    error_ratio, eval_grid, reconstruct_gssc, sample_async, select_eta, synthesize, SynthSpec,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Gssc,
    GsscSub,
    Krr,
    ScProduct,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Gssc,
        Method::GsscSub,
        Method::Krr,
        Method::ScProduct,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Gssc => "gssc",
            Method::GsscSub => "gssc_sub",
            Method::Krr => "krr",
            Method::ScProduct => "sc_product",
        }
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown method '{s}'; expected one of gssc, gssc_sub, krr, sc_product"
                ))
            })
    }
}

/// Everything that determines an experiment run.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    /// File path, canonical name or `random:n:edge_prob:fill_prob:seed`.
    pub complex: String,
    pub methods: Vec<Method>,
    pub noise_levels: Vec<f64>,
    pub samples_levels: Vec<usize>,
    /// Samples per edge used along the noise sweep.
    pub fixed_samples: usize,
    /// Noise level used along the samples sweep.
    pub fixed_noise: f64,
    pub trials: usize,
    pub seed: u64,
    pub n_irr: usize,
    pub n_sol: usize,
    pub order: usize,
    pub sub_size: usize,
    pub eta: f64,
    /// When non-empty, `eta` is chosen per trial from this grid on held-out
    /// samples.
    pub eta_grid: Vec<f64>,
    pub holdout: f64,
    pub krr_lengthscale: f64,
    pub krr_ridge: f64,
    pub sc_alpha: f64,
    pub sc_beta: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            complex: "random:30:0.3:0.9:1".into(),
            methods: Method::ALL.to_vec(),
            noise_levels: vec![0.001, 0.005, 0.01, 0.05, 0.1],
            samples_levels: vec![5, 10, 15, 20, 30, 40],
            fixed_samples: 20,
            fixed_noise: 0.01,
            trials: 20,
            seed: 2024,
            n_irr: 20,
            n_sol: 20,
            order: 3,
            sub_size: 15,
            eta: 1.0,
            eta_grid: Vec::new(),
            holdout: 0.2,
            krr_lengthscale: 1.0,
            krr_ridge: 1e-2,
            sc_alpha: 0.05,
            sc_beta: 1.0,
        }
    }
}

fn parse_list<T: FromStr>(line: usize, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Error::parse(line, format!("bad list entry '{s}'")))
        })
        .collect()
}

fn parse_one<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::parse(line, format!("bad value '{v}' for {key}")))
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
}

impl ExperimentConfig {
    /// Parses `key = value` lines on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = ExperimentConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.split('#').next().unwrap_or("").trim();
            if l.is_empty() {
                continue;
            }
            let (k, v) = l
                .split_once('=')
                .ok_or_else(|| Error::parse(line, "expected 'key = value'"))?;
            let (k, v) = (k.trim(), v.trim());
            match k {
                "complex" => c.complex = v.to_string(),
                "methods" => {
                    c.methods = v
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(Method::from_str)
                        .collect::<Result<_>>()?
                }
                "noise_levels" => c.noise_levels = parse_list(line, v)?,
                "samples_levels" => c.samples_levels = parse_list(line, v)?,
                "fixed_samples" => c.fixed_samples = parse_one(line, k, v)?,
                "fixed_noise" => c.fixed_noise = parse_one(line, k, v)?,
                "trials" => c.trials = parse_one(line, k, v)?,
                "seed" => c.seed = parse_one(line, k, v)?,
                "n_irr" => c.n_irr = parse_one(line, k, v)?,
                "n_sol" => c.n_sol = parse_one(line, k, v)?,
                "order" => c.order = parse_one(line, k, v)?,
                "sub_size" => c.sub_size = parse_one(line, k, v)?,
                "eta" => c.eta = parse_one(line, k, v)?,
                "eta_grid" => c.eta_grid = parse_list(line, v)?,
                "holdout" => c.holdout = parse_one(line, k, v)?,
                "krr_lengthscale" => c.krr_lengthscale = parse_one(line, k, v)?,
                "krr_ridge" => c.krr_ridge = parse_one(line, k, v)?,
                "sc_alpha" => c.sc_alpha = parse_one(line, k, v)?,
                "sc_beta" => c.sc_beta = parse_one(line, k, v)?,
                _ => return Err(Error::parse(line, format!("unknown key '{k}'"))),
            }
        }
        c.check()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.methods.is_empty() {
            return bad("no methods selected");
        }
        if self.noise_levels.is_empty() && self.samples_levels.is_empty() {
            return bad("both sweep axes are empty");
        }
        if self.trials == 0 {
            return bad("trials must be >= 1");
        }
        if self.fixed_samples == 0 || self.samples_levels.contains(&0) {
            return bad("samples per edge must be >= 1");
        }
        if self
            .noise_levels
            .iter()
            .chain([&self.fixed_noise])
            .any(|s| !(*s >= 0.0))
        {
            return bad("noise levels must be >= 0");
        }
        if !(self.eta > 0.0) || self.eta_grid.iter().any(|e| !(*e > 0.0)) {
            return bad("eta values must be > 0");
        }
        if !(self.holdout > 0.0 && self.holdout < 1.0) {
            return bad("holdout must lie in (0, 1)");
        }
        KrrConfig::new(self.krr_lengthscale, self.krr_ridge)?;
        if !(self.sc_alpha >= 0.0) || !(self.sc_beta >= 0.0) {
            return bad("sc_alpha and sc_beta must be >= 0");
        }
        Ok(())
    }

    /// Config text that parses back to `self`.
    pub fn to_text(&self) -> String {
        let names: Vec<&str> = self.methods.iter().map(Method::name).collect();
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("complex", self.complex.clone());
        kv("methods", names.join(", "));
        kv("noise_levels", join(&self.noise_levels));
        kv("samples_levels", join(&self.samples_levels));
        kv("fixed_samples", self.fixed_samples.to_string());
        kv("fixed_noise", self.fixed_noise.to_string());
        kv("trials", self.trials.to_string());
        kv("seed", self.seed.to_string());
        kv("n_irr", self.n_irr.to_string());
        kv("n_sol", self.n_sol.to_string());
        kv("order", self.order.to_string());
        kv("sub_size", self.sub_size.to_string());
        kv("eta", self.eta.to_string());
        kv("eta_grid", join(&self.eta_grid));
        kv("holdout", self.holdout.to_string());
        kv("krr_lengthscale", self.krr_lengthscale.to_string());
        kv("krr_ridge", self.krr_ridge.to_string());
        kv("sc_alpha", self.sc_alpha.to_string());
        kv("sc_beta", self.sc_beta.to_string());
        s
    }

    /// Sweep points `(noise, samples_per_edge)`, sorted and deduplicated.
    pub fn points(&self) -> Vec<(f64, usize)> {
        let mut set = BTreeSet::new();
        for &s in &self.noise_levels {
            set.insert((s.to_bits(), self.fixed_samples));
        }
        for &m in &self.samples_levels {
            set.insert((self.fixed_noise.to_bits(), m));
        }
        let mut pts: Vec<(f64, usize)> = set
            .into_iter()
            .map(|(b, m)| (f64::from_bits(b), m))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        pts
    }

    pub fn trial_seed(&self, trial: usize) -> u64 {
        self.seed.wrapping_add(trial as u64)
    }
}

/// Formats an error ratio the way it is written to the results file.
pub fn format_rmse(v: f64) -> String {
    format!("{v:.11e}")
}

/// Per-complex state shared by every trial: the complex, its spectral bases
/// and the space-time smoother.
pub struct ExperimentContext {
    pub config: ExperimentConfig,
    pub rep: ChainComplexRep,
    pub bases: HodgeBases,
    pub sub_bases: HodgeBases,
    smoother: ScSmoother,
}

/// One method's result on one trial.
#[derive(Clone, Debug)]
pub struct MethodOutcome {
    pub method: Method,
    pub rmse: f64,
    pub hyperparams: String,
    pub seconds: f64,
}

impl ExperimentContext {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.check()?;
        let rep = resolve_complex(&config.complex)?;
        if rep.top_dim().is_none_or(|t| t < 1) {
            return Err(Error::InvalidArgument(
                "the experiment complex needs edges".into(),
            ));
        }
        let bases = spectral_bases(&rep, 1, config.n_irr, config.n_sol)?;
        let sub_bases = bases.truncate(config.sub_size, config.sub_size);
        let smoother = ScSmoother::new(&rep, config.sc_alpha, config.sc_beta)?;
        Ok(ExperimentContext {
            config,
            rep,
            bases,
            sub_bases,
            smoother,
        })
    }

    /// Runs every configured method on one `(noise, M, seed)` point.
    pub fn run_trial(&self, noise: f64, m: usize, seed: u64) -> Result<Vec<MethodOutcome>> {
        let c = &self.config;
        let spec = SynthSpec {
            n_irr: c.n_irr,
            n_sol: c.n_sol,
            order: c.order,
            seed,
            ..SynthSpec::default()
        };
        let syn = synthesize(&self.rep, &spec)?;
        let truth = eval_grid(&syn.signal)?;
        let samples = sample_async(&syn.signal, m, noise, seed)?;
        let krr_cfg = KrrConfig::new(c.krr_lengthscale, c.krr_ridge)?;
        let krr_hp = format!("lengthscale={};ridge={}", c.krr_lengthscale, c.krr_ridge);

        let mut out = Vec::new();
        let mut krr_cache = None;
        for &method in &c.methods {
            let start = Instant::now();
            let (est, hp) = match method {
                Method::Gssc | Method::GsscSub => {
                    let (bases, sub) = if method == Method::Gssc {
                        (&self.bases, None)
                    } else {
                        (&self.sub_bases, Some(c.sub_size))
                    };
                    let eta = if c.eta_grid.is_empty() || m < 2 {
                        c.eta
                    } else {
                        select_eta(
                            &self.rep,
                            &samples,
                            bases,
                            c.order,
                            &c.eta_grid,
                            c.holdout,
                            seed,
                        )?
                    };
                    let r = reconstruct_gssc(&self.rep, &samples, bases, c.order, eta)?;
                    let mut hp = format!("eta={eta}");
                    if let Some(s) = sub {
                        hp.push_str(&format!(";sub={s}"));
                    }
                    (eval_grid(&r.estimate)?, hp)
                }
                Method::Krr => {
                    let g = krr_grid(&samples, &krr_cfg)?;
                    krr_cache = Some(g.clone());
                    (g, krr_hp.clone())
                }
                Method::ScProduct => {
                    let g0 = match &krr_cache {
                        Some(g) => g.clone(),
                        None => krr_grid(&samples, &krr_cfg)?,
                    };
                    let hp = format!("{krr_hp};alpha={};beta={}", c.sc_alpha, c.sc_beta);
                    (self.smoother.apply(&g0)?, hp)
                }
            };
            let rmse = error_ratio(&est, &truth)?;
            out.push(MethodOutcome {
                method,
                rmse,
                hyperparams: hp,
                seconds: start.elapsed().as_secs_f64(),
            });
        }
        Ok(out)
    }
}

/// One row of the results file.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub method: Method,
    pub noise: f64,
    pub samples_per_edge: usize,
    pub trial: usize,
    pub seed: u64,
    /// The error ratio exactly as printed.
    pub rmse: String,
    pub hyperparams: String,
}

/// Mean over trials of one `(method, noise, M)` point.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateRow {
    pub method: Method,
    pub noise: f64,
    pub samples_per_edge: usize,
    pub trials: usize,
    pub mean_rmse: f64,
}

#[derive(Clone, Debug)]
pub struct TimingRow {
    pub method: Method,
    pub noise: f64,
    pub samples_per_edge: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub aggregate: Vec<AggregateRow>,
    pub timing: Vec<TimingRow>,
}

impl ExperimentOutput {
    pub fn mean(&self, method: Method, noise: f64, m: usize) -> Option<f64> {
        self.aggregate
            .iter()
            .find(|a| a.method == method && a.noise == noise && a.samples_per_edge == m)
            .map(|a| a.mean_rmse)
    }
}

/// Mean of printed values, parsed back, so that the aggregate is exactly
/// reproducible from the results file.
pub fn mean_of_printed(values: &[String]) -> f64 {
    let parsed: Vec<f64> = values
        .iter()
        .map(|s| s.parse::<f64>().expect("printed float"))
        .collect();
    parsed.iter().sum::<f64>() / parsed.len() as f64
}

/// Runs the whole sweep. `jobs` bounds the worker threads; output order does
/// not depend on it.
pub fn run_experiment(config: &ExperimentConfig, jobs: Option<usize>) -> Result<ExperimentOutput> {
    let ctx = ExperimentContext::new(config.clone())?;
    let points = config.points();
    let tasks: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..config.trials).map(move |t| (p, t)))
        .collect();
    let work = || -> Result<Vec<Vec<MethodOutcome>>> {
        tasks
            .par_iter()
            .map(|&(p, t)| {
                let (noise, m) = points[p];
                ctx.run_trial(noise, m, config.trial_seed(t))
            })
            .collect()
    };
    let results = match jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };

    let mut rows = Vec::new();
    let mut timing: Vec<TimingRow> = Vec::new();
    for (&(p, t), outcomes) in tasks.iter().zip(&results) {
        let (noise, m) = points[p];
        for o in outcomes {
            rows.push(ResultRow {
                method: o.method,
                noise,
                samples_per_edge: m,
                trial: t,
                seed: config.trial_seed(t),
                rmse: format_rmse(o.rmse),
                hyperparams: o.hyperparams.clone(),
            });
            match timing
                .iter_mut()
                .find(|r| r.method == o.method && r.noise == noise && r.samples_per_edge == m)
            {
                Some(r) => r.seconds += o.seconds,
                None => timing.push(TimingRow {
                    method: o.method,
                    noise,
                    samples_per_edge: m,
                    seconds: o.seconds,
                }),
            }
        }
    }
    let key = |m: Method, n: f64, s: usize| (m, n.to_bits(), s);
    rows.sort_by(|a, b| {
        a.method
            .cmp(&b.method)
            .then(a.noise.total_cmp(&b.noise))
            .then(a.samples_per_edge.cmp(&b.samples_per_edge))
            .then(a.trial.cmp(&b.trial))
    });
    timing.sort_by(|a, b| {
        a.method
            .cmp(&b.method)
            .then(a.noise.total_cmp(&b.noise))
            .then(a.samples_per_edge.cmp(&b.samples_per_edge))
    });
    let mut aggregate = Vec::new();
    let mut i = 0;
    while i < rows.len() {
        let k = key(rows[i].method, rows[i].noise, rows[i].samples_per_edge);
        let j = rows[i..]
            .iter()
            .position(|r| key(r.method, r.noise, r.samples_per_edge) != k)
            .map_or(rows.len(), |off| i + off);
        let printed: Vec<String> = rows[i..j].iter().map(|r| r.rmse.clone()).collect();
        aggregate.push(AggregateRow {
            method: rows[i].method,
            noise: rows[i].noise,
            samples_per_edge: rows[i].samples_per_edge,
            trials: j - i,
            mean_rmse: mean_of_printed(&printed),
        });
        i = j;
    }
    Ok(ExperimentOutput {
        rows,
        aggregate,
        timing,
    })
}

pub fn results_csv(out: &ExperimentOutput) -> Result<String> {
    let mut wr = csv::Writer::from_writer(Vec::new());
    wr.write_record([
        "method",
        "noise",
        "samples_per_edge",
        "trial",
        "seed",
        "rmse",
        "hyperparams",
    ])?;
    for r in &out.rows {
        wr.write_record([
            r.method.name().to_string(),
            r.noise.to_string(),
            r.samples_per_edge.to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
            r.rmse.clone(),
            r.hyperparams.clone(),
        ])?;
    }
    finish(wr)
}

pub fn aggregate_csv(out: &ExperimentOutput) -> Result<String> {
    let mut wr = csv::Writer::from_writer(Vec::new());
    wr.write_record(["method", "noise", "samples_per_edge", "trials", "mean_rmse"])?;
    for a in &out.aggregate {
        wr.write_record([
            a.method.name().to_string(),
            a.noise.to_string(),
            a.samples_per_edge.to_string(),
            a.trials.to_string(),
            format_rmse(a.mean_rmse),
        ])?;
    }
    finish(wr)
}

pub fn timing_csv(out: &ExperimentOutput) -> Result<String> {
    let mut wr = csv::Writer::from_writer(Vec::new());
    wr.write_record(["method", "noise", "samples_per_edge", "seconds"])?;
    for t in &out.timing {
        wr.write_record([
            t.method.name().to_string(),
            t.noise.to_string(),
            t.samples_per_edge.to_string(),
            format!("{:.6}", t.seconds),
        ])?;
    }
    finish(wr)
}

/// Plot data for one sweep axis: one row per x value, one column per method.
fn plot_csv(out: &ExperimentOutput, config: &ExperimentConfig, noise_axis: bool) -> Result<String> {
    let mut wr = csv::Writer::from_writer(Vec::new());
    let mut head = vec![if noise_axis {
        "noise"
    } else {
        "samples_per_edge"
    }
    .to_string()];
    head.extend(config.methods.iter().map(|m| m.name().to_string()));
    wr.write_record(&head)?;
    let xs: Vec<(f64, usize)> = if noise_axis {
        let mut v: Vec<f64> = config.noise_levels.clone();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v.into_iter().map(|s| (s, config.fixed_samples)).collect()
    } else {
        let mut v = config.samples_levels.clone();
        v.sort_unstable();
        v.dedup();
        v.into_iter().map(|m| (config.fixed_noise, m)).collect()
    };
    for (noise, m) in xs {
        let mut row = vec![if noise_axis {
            noise.to_string()
        } else {
            m.to_string()
        }];
        for &method in &config.methods {
            row.push(
                out.mean(method, noise, m)
                    .map_or(String::new(), format_rmse),
            );
        }
        wr.write_record(&row)?;
    }
    finish(wr)
}

fn finish(wr: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = wr
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Writes `results.csv`, `aggregate.csv`, `timing.csv`, the per-figure
/// `plot_noise.csv` / `plot_samples.csv` and a copy of the config.
pub fn write_outputs(
    dir: impl AsRef<Path>,
    out: &ExperimentOutput,
    config: &ExperimentConfig,
) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    fs::write(dir.join("results.csv"), results_csv(out)?)?;
    fs::write(dir.join("aggregate.csv"), aggregate_csv(out)?)?;
    fs::write(dir.join("timing.csv"), timing_csv(out)?)?;
    if !config.noise_levels.is_empty() {
        fs::write(dir.join("plot_noise.csv"), plot_csv(out, config, true)?)?;
    }
    if !config.samples_levels.is_empty() {
        fs::write(dir.join("plot_samples.csv"), plot_csv(out, config, false)?)?;
    }
    fs::write(dir.join("config.conf"), config.to_text())?;
    Ok(())
}
