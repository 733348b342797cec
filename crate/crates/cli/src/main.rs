use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use cplsh::analysis::{default_cp_dims, default_parts_grid};
use cplsh::bench::{
    cross_polytope_curve, lower_bound_curve, probe_trace_text, run_grid, write_curve_csv, write_reports_csv,
    BenchOptions, BenchReport, GridSpec, Objective, ProbeSchedule, TablesRule, Workload, DEFAULT_RECALL_TARGET,
};
use cplsh::data_io::{generate_random_instance, load_instance, write_instance};
use cplsh::{Family, IndexConfig, LshIndex, RotationKind};

#[derive(Parser)]
#[command(name = "cplsh", version, about = "Cross-polytope LSH benchmarks")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "CPLSH_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random planted instance with ground truth.
    Generate(GenerateArgs),
    /// Grid-search index parameters at a recall target.
    Bench(BenchArgs),
    /// Emit the ρ trade-off curves.
    Curves(CurvesArgs),
    /// Print the probing sequence of one query.
    ProbeTrace(TraceArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    /// Distance from each query to its planted neighbor, in (0, 2).
    #[arg(long)]
    r: f64,
    #[arg(long, default_value_t = 1000)]
    queries: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    CrossPolytope,
    Hyperplane,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum RotationArg {
    Pseudo,
    Gaussian,
}

impl From<RotationArg> for RotationKind {
    fn from(r: RotationArg) -> Self {
        match r {
            RotationArg::Pseudo => RotationKind::Pseudo,
            RotationArg::Gaussian => RotationKind::Gaussian,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    QueryTime,
    Candidates,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, value_enum, default_value = "cross-polytope")]
    family: FamilyArg,
    #[arg(long, value_enum, default_value = "pseudo")]
    rotation: RotationArg,
    /// Hashes (hyperplane: bits) per table; defaults to the family's grid.
    #[arg(long, value_delimiter = ',')]
    k: Vec<usize>,
    /// Last cross-polytope dimensions; defaults to 1, 2, 4, …, padded d.
    #[arg(long, value_delimiter = ',')]
    last_cp_dim: Vec<usize>,
    /// Fixed probe counts; defaults to doubling from L.
    #[arg(long, value_delimiter = ',')]
    probes: Vec<usize>,
    /// Doubling stops once mean candidates exceed this fraction of n.
    #[arg(long, default_value_t = 0.25)]
    max_candidate_fraction: f64,
    #[arg(long, default_value_t = 1 << 16)]
    max_probes: usize,
    /// Number of tables; derived from the memory budget when omitted.
    #[arg(long)]
    tables: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_RECALL_TARGET)]
    recall: f64,
    #[arg(long, value_enum, default_value = "query-time")]
    objective: ObjectiveArg,
    /// Measured passes after the warm-up pass.
    #[arg(long, default_value_t = 3)]
    passes: usize,
    /// Evaluate configurations concurrently (no timings).
    #[arg(long)]
    parallel: bool,
    #[arg(long)]
    collapse_signs: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// CSV report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CurvesArgs {
    /// Near distance.
    #[arg(long, default_value_t = std::f64::consts::FRAC_1_SQRT_2)]
    r1: f64,
    /// Part counts of the lower bound; defaults to 2¹…2⁵³ and 10¹…10¹⁶.
    #[arg(long, value_delimiter = ',')]
    parts: Vec<f64>,
    /// Cross-polytope dimensions; defaults to 2⁰…2⁵².
    #[arg(long, value_delimiter = ',')]
    cp_dims: Vec<u64>,
    /// Output directory for `lower_bound.csv` and `cross_polytope.csv`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Query id within the instance's query set.
    #[arg(long)]
    query: usize,
    #[arg(long, value_enum, default_value = "cross-polytope")]
    family: FamilyArg,
    #[arg(long, value_enum, default_value = "pseudo")]
    rotation: RotationArg,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long)]
    last_cp_dim: Option<usize>,
    #[arg(long, default_value_t = 10)]
    tables: usize,
    /// Probes to print; defaults to the number of tables.
    #[arg(long)]
    probes: Option<usize>,
    #[arg(long)]
    collapse_signs: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn generate(args: GenerateArgs) -> Result<ExitCode> {
    let instance = generate_random_instance(args.n, args.d, args.r, args.queries, args.seed)?;
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let manifest = write_instance(&args.out, &instance)?;
    println!("{}", manifest.display());
    Ok(ExitCode::SUCCESS)
}

fn grid_for(family: Family, args: &BenchArgs, dim: usize) -> GridSpec {
    let tables = args.tables.map_or(TablesRule::MemoryDerived, TablesRule::Fixed);
    let mut grid = match family {
        Family::CrossPolytope => GridSpec::default_cross_polytope(dim, tables, args.seed),
        Family::Hyperplane => GridSpec::default_hyperplane(tables, args.seed),
    };
    grid.rotation = args.rotation.into();
    grid.collapse_signs = args.collapse_signs;
    if !args.k.is_empty() {
        grid.k_values = args.k.clone();
    }
    if !args.last_cp_dim.is_empty() {
        grid.last_cp_dims = args.last_cp_dim.iter().copied().map(Some).collect();
    }
    grid.probes = if args.probes.is_empty() {
        ProbeSchedule::Doubling {
            max_candidate_fraction: args.max_candidate_fraction,
            max_probes: args.max_probes,
        }
    } else {
        ProbeSchedule::Fixed(args.probes.clone())
    };
    grid
}

fn summarize(name: &str, report: &BenchReport) {
    match report.best_row() {
        Some(b) => eprintln!(
            "{name}: best k={} last_cp_dim={:?} L={} m={} recall={:.3} candidates={:.1}{}",
            b.config.hashes_per_table,
            b.config.last_cp_dim,
            b.config.num_tables,
            b.probes,
            b.recall,
            b.mean_candidates,
            b.timings
                .map(|t| format!(" query={:.1}µs", t.query.as_secs_f64() * 1e6))
                .unwrap_or_default()
        ),
        None => eprintln!("{name}: no configuration reaches recall {}", report.recall_target),
    }
}

fn bench(args: BenchArgs) -> Result<ExitCode> {
    if !(0.0..=1.0).contains(&args.recall) {
        bail!("recall target {} must lie in [0, 1]", args.recall);
    }
    let instance = load_instance(&args.manifest)?;
    let points = Arc::new(instance.points);
    let work = Workload {
        queries: &instance.queries,
        ground_truth: &instance.ground_truth,
    };
    let opts = BenchOptions {
        recall_target: args.recall,
        objective: match args.objective {
            ObjectiveArg::QueryTime => Objective::QueryTime,
            ObjectiveArg::Candidates => Objective::Candidates,
        },
        timing_passes: args.passes,
        parallel: args.parallel,
    };
    let families: &[(Family, &str)] = match args.family {
        FamilyArg::CrossPolytope => &[(Family::CrossPolytope, "cross-polytope")],
        FamilyArg::Hyperplane => &[(Family::Hyperplane, "hyperplane")],
        FamilyArg::Both => &[(Family::Hyperplane, "hyperplane"), (Family::CrossPolytope, "cross-polytope")],
    };
    let mut reports = Vec::new();
    for &(family, name) in families {
        let grid = grid_for(family, &args, points.dim());
        let report = run_grid(points.clone(), &work, &grid, &opts)?;
        if !report.memory_rule_holds() {
            bail!("{name}: index exceeds the dataset's memory budget");
        }
        summarize(name, &report);
        reports.push(report);
    }
    if let [hp, cp] = reports.as_slice() {
        if let Some(c) = cp.compare(hp) {
            eprintln!(
                "cross-polytope vs hyperplane: {:.1}× fewer candidates{}",
                c.candidates_ratio,
                c.speedup.map(|s| format!(", {s:.2}× speed-up")).unwrap_or_default()
            );
        }
    }
    let refs: Vec<&BenchReport> = reports.iter().collect();
    write_reports_csv(&refs, output(args.out.as_deref())?)?;
    Ok(if reports.iter().all(|r| r.best.is_some()) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn curves(args: CurvesArgs) -> Result<ExitCode> {
    let parts = if args.parts.is_empty() { default_parts_grid() } else { args.parts };
    let dims = if args.cp_dims.is_empty() { default_cp_dims() } else { args.cp_dims };
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let (lb, lb_errors) = lower_bound_curve(args.r1, &parts);
    let (cp, cp_errors) = cross_polytope_curve(args.r1, &dims);
    for e in lb_errors.iter().chain(&cp_errors) {
        eprintln!("warning: {e}");
    }
    for (file, rows) in [("lower_bound.csv", &lb), ("cross_polytope.csv", &cp)] {
        let path = args.out.join(file);
        write_curve_csv(rows, output(Some(&path))?)?;
        println!("{}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn probe_trace(args: TraceArgs) -> Result<ExitCode> {
    let instance = load_instance(&args.manifest)?;
    if args.query >= instance.queries.len() {
        bail!("query id {} out of range: the instance has {} queries", args.query, instance.queries.len());
    }
    let mut config = match args.family {
        FamilyArg::CrossPolytope => IndexConfig::cross_polytope(args.tables, args.k, args.seed),
        FamilyArg::Hyperplane => IndexConfig::hyperplane(args.tables, args.k, args.seed),
        FamilyArg::Both => bail!("probe-trace needs a single family"),
    }
    .with_rotation(args.rotation.into())
    .with_collapse_signs(args.collapse_signs);
    if let Some(d) = args.last_cp_dim {
        config = config.with_last_cp_dim(d);
    }
    let index = LshIndex::build(Arc::new(instance.points), config)?;
    let m = args.probes.unwrap_or(args.tables);
    let text = probe_trace_text(&index, instance.queries.point(args.query), m)?;
    output(args.out.as_deref())?.write_all(text.as_bytes())?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Bench(a) => bench(a),
        Command::Curves(a) => curves(a),
        Command::ProbeTrace(a) => probe_trace(a),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::FAILURE
    })
}
