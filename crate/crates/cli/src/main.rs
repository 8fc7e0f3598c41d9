use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use gensig::baselines::{krr_grid, sc_product, KrrConfig};
use gensig::coeff::norm_p;
use gensig::complex::{canonical_simplicial, SimplicialComplex};
use gensig::experiment::{run_experiment, write_outputs, ExperimentConfig, Method};
use gensig::hodge::{eig_sym, hodge_decompose, laplacian, spectral_bases};
use gensig::homology::{homology_field, homology_z, simplicial_seminorm, Field};
use gensig::io::{
    format_dcx, format_scx, load_chain, load_samples, parse_random_spec, resolve_complex,
    write_chain, write_grid, write_samples,
};
use gensig::learn::{
    eval_grid, reconstruct_gssc, sample_async, solve_fundamental, solve_smooth, synthesize,
    DecompositionResult, SynthSpec,
};
use gensig::{ChainComplexRep, CoefficientSystem, Error, Result, WeightVector};

/// Signal processing on simplicial complexes with general coefficients.
///
/// A COMPLEX argument is a `.scx` / `.dcx` file, a canonical name such as
/// `rp2`, `torus` or `cycle(5)`, or `random:N:EDGE_PROB:FILL_PROB:SEED`.
#[derive(Parser)]
#[command(name = "gensig", version)]
struct Cli {
    /// Seed for synthesis and sampling; overrides the experiment master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output file or directory, depending on the subcommand.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integer homology (or Betti numbers over a field).
    Homology {
        complex: String,
        #[arg(long, conflicts_with = "k")]
        all: bool,
        #[arg(short, long)]
        k: Option<usize>,
        /// `real` or `mod:P` for a prime P; prints Betti numbers only.
        #[arg(long)]
        field: Option<String>,
    },
    /// Split a chain into harmonic, solenoidal and irrotational parts.
    /// Writes x0.csv, x1.csv and x_neg1.csv into --out (default `.`).
    Decompose(DecomposeArgs),
    /// Eigenvalues of the k-th Hodge Laplacian.
    Spectra {
        complex: String,
        #[arg(short, long, default_value_t = 1)]
        k: usize,
    },
    /// Random function-valued edge signal.
    Synth {
        complex: String,
        #[arg(long, default_value_t = 20)]
        n_irr: usize,
        #[arg(long, default_value_t = 20)]
        n_sol: usize,
        #[arg(long, default_value_t = 3)]
        order: usize,
    },
    /// Noisy asynchronous samples of a function-valued edge signal.
    Sample {
        complex: String,
        signal: PathBuf,
        #[arg(short, long, default_value_t = 20)]
        m: usize,
        #[arg(long, default_value_t = 0.01)]
        sigma: f64,
        #[arg(long, default_value_t = 3)]
        order: usize,
    },
    /// Reconstruct edge signals on the evaluation grid from samples.
    Reconstruct(ReconstructArgs),
    /// Run a sweep from a config file; writes CSVs into --out (default `results`).
    Experiment { config: PathBuf },
    /// Complex utilities.
    Complex {
        #[command(subcommand)]
        cmd: ComplexCmd,
    },
}

#[derive(Subcommand)]
enum ComplexCmd {
    /// Print a complex as `.dcx` (any source) or `.scx` (simplicial sources).
    Gen {
        source: String,
        #[arg(long, value_enum, default_value_t = Format::Dcx)]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Scx,
    Dcx,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Fundamental,
    Smooth,
    Hodge,
}

#[derive(Args)]
struct DecomposeArgs {
    complex: String,
    signal: PathBuf,
    #[arg(short, long, default_value_t = 1)]
    k: usize,
    #[arg(long, value_enum, default_value_t = ModelArg::Fundamental)]
    model: ModelArg,
    #[arg(long, default_value_t = 2)]
    p: u32,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    /// `real`, `mod:N`, `int` or `fourier:M`.
    #[arg(long, default_value = "real")]
    coeff: String,
}

#[derive(Args)]
struct ReconstructArgs {
    complex: String,
    samples: PathBuf,
    /// gssc, gssc_sub, krr or sc_product.
    #[arg(long, default_value = "gssc")]
    method: String,
    #[arg(long, default_value_t = 1e6)]
    eta: f64,
    #[arg(long, default_value_t = 20)]
    n_irr: usize,
    #[arg(long, default_value_t = 20)]
    n_sol: usize,
    #[arg(long, default_value_t = 15)]
    sub_size: usize,
    #[arg(long, default_value_t = 3)]
    order: usize,
    #[arg(long, default_value_t = 1.0)]
    lengthscale: f64,
    #[arg(long, default_value_t = 1e-2)]
    ridge: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global()
        {
            log::warn!("could not size thread pool: {e}");
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

/// Writes to `--out` when given, stdout otherwise.
fn emit(out: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match out {
        Some(p) => {
            let mut file = io::BufWriter::new(fs::File::create(p)?);
            f(&mut file)?;
            file.flush()?;
            Ok(())
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let out = cli.out.as_deref();
    match &cli.cmd {
        Cmd::Homology {
            complex,
            all,
            k,
            field,
        } => {
            let rep = resolve_complex(complex)?;
            let ks: Vec<usize> = match (k, all) {
                (Some(k), _) => vec![*k],
                _ => (0..rep.dims().len()).collect(),
            };
            let parts = match field {
                None => ks
                    .iter()
                    .map(|&k| homology_z(&rep, k).map(|h| h.to_string()))
                    .collect::<Result<Vec<_>>>()?,
                Some(f) => {
                    let field = parse_field(f)?;
                    ks.iter()
                        .map(|&k| homology_field(&rep, k, field).map(|b| format!("b_{k} = {b}")))
                        .collect::<Result<Vec<_>>>()?
                }
            };
            println!("{}", parts.join(", "));
            Ok(())
        }
        Cmd::Decompose(a) => decompose(a, out),
        Cmd::Spectra { complex, k } => {
            let rep = resolve_complex(complex)?;
            let spec = eig_sym(&laplacian(&rep, *k)?)?;
            emit(out, |w| {
                writeln!(
                    w,
                    "# zero_tol={:e} nullity={}",
                    spec.zero_tol,
                    spec.nullity()
                )?;
                writeln!(w, "index,eigenvalue")?;
                for (i, l) in spec.eigenvalues.iter().enumerate() {
                    writeln!(w, "{i},{l:e}")?;
                }
                Ok(())
            })
        }
        Cmd::Synth {
            complex,
            n_irr,
            n_sol,
            order,
        } => {
            let rep = resolve_complex(complex)?;
            let spec = SynthSpec {
                n_irr: *n_irr,
                n_sol: *n_sol,
                order: *order,
                seed: cli.seed.unwrap_or(0),
                ..SynthSpec::default()
            };
            let s = synthesize(&rep, &spec)?;
            let (n0, n1, n2) = s.counts();
            if s.bases.truncated {
                log::warn!("basis truncated to harmonic={n0} irrotational={n1} solenoidal={n2}");
            }
            emit(out, |w| write_chain(w, &s.signal))
        }
        Cmd::Sample {
            complex,
            signal,
            m,
            sigma,
            order,
        } => {
            let rep = resolve_complex(complex)?;
            let f = load_chain(signal, 1, CoefficientSystem::fourier(*order))?;
            check_len(&rep, 1, f.len())?;
            let s = sample_async(&f, *m, *sigma, cli.seed.unwrap_or(0))?;
            emit(out, |w| write_samples(w, &s))
        }
        Cmd::Reconstruct(a) => reconstruct(a, out),
        Cmd::Experiment { config } => {
            let mut cfg = ExperimentConfig::load(config)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            let dir = out.map_or_else(|| PathBuf::from("results"), Path::to_path_buf);
            let start = Instant::now();
            let res = run_experiment(&cfg, cli.jobs)?;
            write_outputs(&dir, &res, &cfg)?;
            println!(
                "{} rows, {} points, {:.1} s -> {}",
                res.rows.len(),
                res.aggregate.len(),
                start.elapsed().as_secs_f64(),
                dir.display()
            );
            Ok(())
        }
        Cmd::Complex {
            cmd: ComplexCmd::Gen { source, format },
        } => {
            let text = match format {
                Format::Dcx => format_dcx(&resolve_complex(source)?),
                Format::Scx => format_scx(&simplicial_source(source)?),
            };
            emit(out, |w| Ok(w.write_all(text.as_bytes())?))
        }
    }
}

fn parse_field(s: &str) -> Result<Field> {
    let c = CoefficientSystem::parse(s)?;
    match c {
        CoefficientSystem::Real => Ok(Field::Real),
        CoefficientSystem::ModN(p) => Ok(Field::ModP(p)),
        other => Err(Error::Unsupported(format!(
            "{other} is not a field; use real or mod:P"
        ))),
    }
}

fn simplicial_source(source: &str) -> Result<SimplicialComplex> {
    if let Some(sc) = parse_random_spec(source)? {
        return Ok(sc);
    }
    if Path::new(source).is_file() {
        return gensig::io::load_complex(source);
    }
    canonical_simplicial(source)?.ok_or_else(|| {
        Error::Unsupported(format!(
            "'{source}' is not a simplicial complex; use --format dcx"
        ))
    })
}

fn check_len(rep: &ChainComplexRep, k: usize, len: usize) -> Result<()> {
    if rep.dim(k as isize) != len {
        return Err(Error::Mismatch(format!(
            "chain has {len} cells, complex has {} {k}-cells",
            rep.dim(k as isize)
        )));
    }
    Ok(())
}

fn decompose(a: &DecomposeArgs, out: Option<&Path>) -> Result<()> {
    let rep = resolve_complex(&a.complex)?;
    let system = CoefficientSystem::parse(&a.coeff)?;
    let x = load_chain(&a.signal, a.k as isize, system)?;
    check_len(&rep, a.k, x.len())?;
    let w = WeightVector::ones(x.len());
    let res: DecompositionResult = match a.model {
        ModelArg::Fundamental => solve_fundamental(&rep, &x, a.p, &w)?,
        ModelArg::Smooth => solve_smooth(&rep, &x, a.eta, &w)?,
        ModelArg::Hodge => {
            if !matches!(system, CoefficientSystem::Real) {
                return Err(Error::Unsupported(format!(
                    "hodge model over {system}; supported: real (fundamental: real/fourier p=2, mod:2 p in {{1,2}}; smooth: real/fourier)"
                )));
            }
            hodge_decompose(&rep, &x)?
        }
    };
    let dir = out.map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    fs::create_dir_all(&dir)?;
    for (name, part) in [("x0", &res.x0), ("x1", &res.x1), ("x_neg1", &res.x_neg1)] {
        gensig::io::save_chain(dir.join(format!("{name}.csv")), part)?;
    }
    let p = if matches!(a.model, ModelArg::Fundamental) {
        a.p
    } else {
        2
    };
    let seminorm = if x.apply_boundary(&rep)?.is_zero() {
        simplicial_seminorm(&rep, &x, p, &w).ok().map(|s| s.value)
    } else {
        None
    };
    let summary = json!({
        "model": res.model.to_string(),
        "coeff": system.to_string(),
        "k": a.k,
        "p": p,
        "objective": res.objective,
        "residual": res.residual,
        "norm_x0": norm_p(&res.x0, 2, &w)?,
        "norm_x1": norm_p(&res.x1, 2, &w)?,
        "norm_x_neg1": norm_p(&res.x_neg1, 2, &w)?,
        "seminorm": seminorm,
    });
    println!("{summary}");
    Ok(())
}

fn reconstruct(a: &ReconstructArgs, out: Option<&Path>) -> Result<()> {
    let method = Method::from_str(&a.method)?;
    let rep = resolve_complex(&a.complex)?;
    let samples = load_samples(&a.samples, rep.dim(1))?;
    let start = Instant::now();
    let krr = || KrrConfig::new(a.lengthscale, a.ridge).and_then(|c| krr_grid(&samples, &c));
    let grid = match method {
        Method::Gssc | Method::GsscSub => {
            let mut bases = spectral_bases(&rep, 1, a.n_irr, a.n_sol)?;
            if method == Method::GsscSub {
                bases = bases.truncate(a.sub_size, a.sub_size);
            }
            let r = reconstruct_gssc(&rep, &samples, &bases, a.order, a.eta)?;
            if r.jittered {
                log::warn!("normal equations needed diagonal jitter");
            }
            eval_grid(&r.estimate)?
        }
        Method::Krr => krr()?,
        Method::ScProduct => sc_product(&krr()?, &rep, a.alpha, a.beta)?,
    };
    log::info!(
        "{} took {:.3} s",
        method.name(),
        start.elapsed().as_secs_f64()
    );
    emit(out, |w| write_grid(w, &grid))
}
