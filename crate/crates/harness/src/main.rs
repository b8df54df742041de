use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use varifold_core::measure::{read_points_csv, write_points_csv};
use varifold_core::metrics::{solve, Ball, FlatMetricProblem, MatrixNorm, SolverOptions, Support};
use varifold_core::sampling::sample_stream;
use varifold_core::{DiscreteMeasure, DiscreteVarifold, ShapeModel};
use varifold_harness::config::parse_list;
use varifold_harness::experiments::run;
use varifold_harness::{configure_threads, emit_results, ExperimentConfig, ExperimentKind, OutputPaths, RateResult};
use varifold_harness::{TangentMatrix, Variant};

#[derive(Parser)]
#[command(name = "varifold", version, about = "Varifold estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// β between the split varifold estimate and the ground truth.
    Rate(ExperimentArgs),
    /// β between the measure estimate and H^d on the shape.
    Measure(ExperimentArgs),
    /// Spread of the density estimate at a point across seeds.
    Fluct(ExperimentArgs),
    /// Pointwise tangent error against the true projectors.
    Tangent(ExperimentArgs),
    /// β between two CSV measures or varifolds.
    Flatnorm(FlatnormArgs),
    /// Draw an i.i.d. sample and write it as CSV.
    Sample(SampleArgs),
    /// Write the ground-truth quadrature varifold as CSV.
    Quadrature(QuadratureArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON or TOML file with the same keys as these flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    shape: Option<String>,
    #[arg(long)]
    density: Option<String>,
    /// Comma-separated sample sizes.
    #[arg(long)]
    n_grid: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tau: Option<f64>,
    /// Fixed bandwidth, overriding the δ_N rule.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, value_enum)]
    variant: Option<Variant>,
    /// Localization ball `c1,...,cn,R`.
    #[arg(long)]
    ball: Option<String>,
    /// Quadrature resolution of the ground truth.
    #[arg(long)]
    h: Option<f64>,
    #[arg(long, value_enum)]
    norm: Option<NormArg>,
    /// Exclude points within this multiple of δ from the singular set.
    #[arg(long, conflicts_with = "unrestricted")]
    exclusion: Option<f64>,
    /// Keep every point in the tangent error.
    #[arg(long)]
    unrestricted: bool,
    #[arg(long, value_enum)]
    tangent_matrix: Option<TangentMatrix>,
    /// Query point of `fluct`.
    #[arg(long)]
    point: Option<String>,
    /// Bandwidth grid of `fluct` at the first N.
    #[arg(long)]
    delta_grid: Option<String>,
    #[arg(long)]
    size_cap: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum NormArg {
    Operator,
    Frobenius,
}

impl From<NormArg> for MatrixNorm {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Operator => MatrixNorm::Operator,
            NormArg::Frobenius => MatrixNorm::Frobenius,
        }
    }
}

impl ExperimentArgs {
    fn into_config(self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => { $( if let Some(v) = self.$field { cfg.$field = v; } )* };
        }
        set!(shape, density, trials, seed, variant, size_cap);
        if let Some(s) = &self.n_grid {
            cfg.n_grid = parse_list(s).map_err(|e| anyhow::anyhow!("--n-grid {e}"))?;
        }
        if let Some(s) = &self.point {
            cfg.point = Some(parse_list(s).map_err(|e| anyhow::anyhow!("--point {e}"))?);
        }
        if let Some(s) = &self.delta_grid {
            cfg.delta_grid = Some(parse_list(s).map_err(|e| anyhow::anyhow!("--delta-grid {e}"))?);
        }
        macro_rules! set_opt {
            ($($field:ident),*) => { $( if self.$field.is_some() { cfg.$field = self.$field; } )* };
        }
        set_opt!(tau, delta, ball, h, out, exclusion);
        if let Some(n) = self.norm {
            cfg.norm = n.into();
        }
        if let Some(m) = self.tangent_matrix {
            cfg.tangent_matrix = m;
        }
        if self.unrestricted {
            cfg.exclusion = None;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct FlatnormArgs {
    a: PathBuf,
    b: PathBuf,
    /// Compare as measures even when matrix columns are present.
    #[arg(long)]
    mass_only: bool,
    #[arg(long)]
    ball: Option<String>,
    #[arg(long, value_enum, default_value = "operator")]
    norm: NormArg,
    /// Coarsen inputs on a grid of this diameter when above the size cap.
    #[arg(long)]
    coarsen: Option<f64>,
    #[arg(long, default_value_t = varifold_core::metrics::DEFAULT_SIZE_CAP)]
    size_cap: usize,
    /// Write the value, witness and flow as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long, default_value = "circle")]
    shape: String,
    #[arg(long, default_value = "uniform")]
    density: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    stream: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct QuadratureArgs {
    #[arg(long, default_value = "circle")]
    shape: String,
    #[arg(long, default_value = "uniform")]
    density: String,
    #[arg(long)]
    h: f64,
    /// Weights of the sampling law instead of the Hausdorff measure.
    #[arg(long)]
    law: bool,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> Result<()> {
    configure_threads()?;
    match Cli::parse().command {
        Command::Rate(a) => experiment(ExperimentKind::Rate, a),
        Command::Measure(a) => experiment(ExperimentKind::Measure, a),
        Command::Fluct(a) => experiment(ExperimentKind::Fluct, a),
        Command::Tangent(a) => experiment(ExperimentKind::Tangent, a),
        Command::Flatnorm(a) => flatnorm(a),
        Command::Sample(a) => {
            let shape = ShapeModel::from_names(&a.shape, &a.density)?;
            let batch = sample_stream(&shape, a.n, a.seed, a.stream)?;
            write_points_csv(&a.out, batch.dim(), batch.points())?;
            Ok(())
        }
        Command::Quadrature(a) => {
            let shape = ShapeModel::from_names(&a.shape, &a.density)?;
            if a.law {
                shape.quadrature_law(a.h)?.write_csv(&a.out)?;
            } else {
                shape.quadrature_varifold(a.h)?.write_csv(&a.out)?;
            }
            Ok(())
        }
    }
}

fn experiment(kind: ExperimentKind, args: ExperimentArgs) -> Result<()> {
    let cfg = args.into_config()?;
    let result = run(kind, &cfg)?;
    print_table(&result);
    if let Some(dir) = &cfg.out {
        let stem = serde_json::to_value(kind)?.as_str().unwrap_or("result").to_string();
        let paths = OutputPaths::in_dir(dir, &stem);
        emit_results(&result, &paths)?;
        eprintln!("wrote {} and {}", paths.trials_csv.display(), paths.summary_json.display());
    }
    Ok(())
}

fn print_table(r: &RateResult) {
    let axis = if r.slope_axis == "delta" { "delta" } else { "N" };
    println!("{:>8} {:>10} {:>12} {:>12} {:>12} {:>12}", axis, "delta", "mean", "std_err", "sd", "median");
    for g in &r.grid {
        let x = if r.slope_axis == "delta" { format!("{:.4}", g.delta) } else { g.n.to_string() };
        println!("{:>8} {:>10.5} {:>12.5e} {:>12.3e} {:>12.3e} {:>12.5e}", x, g.delta, g.mean, g.std_err, g.sd, g.median);
    }
    match (r.slope, r.slope_ci) {
        (Some(s), Some((lo, hi))) => println!("slope {s:.4}  (95% bootstrap [{lo:.4}, {hi:.4}])"),
        (Some(s), None) => println!("slope {s:.4}"),
        _ => println!("slope undefined"),
    }
}

fn read_support(path: &PathBuf, mass_only: bool) -> Result<Support> {
    let v = DiscreteVarifold::read_csv(path);
    Ok(match v {
        Ok(v) if !mass_only => Support::Varifold(v),
        Ok(v) => Support::Measure(v.mass()),
        Err(_) => match DiscreteMeasure::read_csv(path) {
            Ok(m) => Support::Measure(m),
            Err(_) => {
                let (dim, pts) = read_points_csv(path).with_context(|| format!("reading {}", path.display()))?;
                Support::Measure(DiscreteMeasure::empirical(dim, pts)?)
            }
        },
    })
}

fn flatnorm(a: FlatnormArgs) -> Result<()> {
    let (sa, sb) = (read_support(&a.a, a.mass_only)?, read_support(&a.b, a.mass_only)?);
    let mut problem = FlatMetricProblem::new(sa, sb)?.with_norm(a.norm.into());
    let localized = a.ball.is_some();
    if let Some(b) = &a.ball {
        problem = problem.with_ball(Ball::parse(b)?)?;
    }
    if a.coarsen.is_some_and(|h| !(h > 0.0)) {
        bail!("--coarsen must be positive");
    }
    let options = SolverOptions { size_cap: a.size_cap, coarsen_h: a.coarsen, ..Default::default() };
    let sol = solve(&problem, localized, &options)?;
    println!("{}", sol.value);
    if let Some(out) = &a.out {
        std::fs::write(out, serde_json::to_string_pretty(&sol)?).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(())
}
