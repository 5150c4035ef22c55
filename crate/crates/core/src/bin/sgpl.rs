use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sgpl::dgp::{gen_dataset, DgpSpec, Pattern};
use sgpl::harness::config::ScenarioConfig;
use sgpl::harness::export::export_pairs;
use sgpl::harness::fit_file::{fit_file, read_points_csv, write_runs_csv, CoordMode, FitFileOptions};
use sgpl::harness::metrics::{write_metrics_csv, write_replicates_csv};
use sgpl::harness::scenario::{run_scenario, timing_report, write_timing_csv};
use sgpl::hexgrid::{GridSpec, DEFAULT_BASE_EDGE, DEFAULT_RESOLUTION};
use sgpl::pairsampler::SamplerConfig;
use sgpl::points::PointSet;
use sgpl::{Result, SgplError};

#[derive(Parser)]
#[command(name = "sgpl", version, about = "Sampled grid pairwise likelihood for spatial error regression")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a Monte-Carlo scenario grid and write metrics and replicate tables.
    Simulate {
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Fit SG-PL to a CSV of point data.
    Fit {
        csv: PathBuf,
        #[command(flatten)]
        cols: ColumnArgs,
        #[arg(long, value_enum, default_value_t = CoordArg::Planar)]
        coord_mode: CoordArg,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        sampler: SamplerArgs,
        #[arg(long, default_value_t = 1)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the per-run table here.
        #[arg(long)]
        runs_out: Option<PathBuf>,
    },
    /// Draw one pair sample and write it as CSV.
    ExportPairs {
        /// Planar point data; simulated from the dataset flags when absent.
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        cols: ColumnArgs,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        sampler: SamplerArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time SG-PL against the dense ML benchmark across a scenario grid.
    Timing {
        config: PathBuf,
        #[arg(long, default_value = "timing.csv")]
        out: PathBuf,
    },
    /// Simulate one dataset and write it as CSV (columns px, py, x, y).
    Generate {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CoordArg {
    Planar,
    Latlon,
}

#[derive(Args)]
struct ColumnArgs {
    #[arg(long, default_value = "x")]
    x_col: String,
    #[arg(long, default_value = "y")]
    y_col: String,
    /// First coordinate column (latitude in latlon mode).
    #[arg(long, default_value = "px")]
    c1_col: String,
    /// Second coordinate column (longitude in latlon mode).
    #[arg(long, default_value = "py")]
    c2_col: String,
}

#[derive(Args)]
struct GridArgs {
    /// Cell edge length in coordinate units (km in latlon mode). Overrides resolution.
    #[arg(long)]
    edge: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    resolution: u32,
    #[arg(long, default_value_t = DEFAULT_BASE_EDGE)]
    base_edge: f64,
}

impl GridArgs {
    fn spec(&self) -> Result<GridSpec> {
        match self.edge {
            Some(e) => GridSpec::with_edge(e),
            None => GridSpec::new(self.resolution, self.base_edge),
        }
    }
}

#[derive(Args)]
struct SamplerArgs {
    #[arg(long, default_value_t = 1000)]
    q_target: usize,
    #[arg(long, default_value_t = 2)]
    n_min: usize,
    #[arg(long, default_value_t = 1)]
    k_ring: u32,
}

impl SamplerArgs {
    fn config(&self, seed: u64) -> SamplerConfig {
        SamplerConfig { n_min_per_cell: self.n_min, k_ring: self.k_ring, q_target: self.q_target, seed }
    }
}

#[derive(Args)]
struct DataArgs {
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value = "uniform")]
    pattern: Pattern,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    lambda_sem: f64,
    #[arg(long, default_value_t = 0)]
    data_seed: u64,
}

impl DataArgs {
    fn points(&self) -> Result<PointSet> {
        let spec = DgpSpec {
            n: self.n,
            pattern: self.pattern,
            lambda_sem: self.lambda_sem,
            seed: self.data_seed,
            ..Default::default()
        };
        Ok(gen_dataset(&spec)?.points)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| SgplError::InvalidInput(format!("cannot create {}: {e}", path.display())))
}

fn run(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Simulate { config, out_dir } => {
            let cfg = ScenarioConfig::from_path(&config)?;
            std::fs::create_dir_all(&out_dir)?;
            let out = run_scenario(&cfg)?;
            write_metrics_csv(&out.rows, create(&out_dir.join("metrics.csv"))?)?;
            write_replicates_csv(&out.replicates, create(&out_dir.join("replicates.csv"))?)?;
            for r in &out.rows {
                println!(
                    "n={} lambda_sem={} pattern={}: beta1 {:.4} lambda {:.4} sigma2 {:.4} ({}/{} ok)",
                    r.n, r.lambda_sem, r.pattern.as_str(), r.beta1.mean, r.lambda.mean, r.sigma2.mean, r.n_ok, r.reps
                );
            }
        }
        Cmd::Fit { csv, cols, coord_mode, grid, sampler, runs, seed, runs_out } => {
            let opts = FitFileOptions {
                x_col: cols.x_col,
                y_col: cols.y_col,
                c1_col: cols.c1_col,
                c2_col: cols.c2_col,
                coord_mode: match coord_mode {
                    CoordArg::Planar => CoordMode::Planar,
                    CoordArg::Latlon => CoordMode::Latlon,
                },
                grid: grid.spec()?,
                sampler: sampler.config(0),
                runs,
                master_seed: seed,
                ..Default::default()
            };
            let s = fit_file(&csv, &opts)?;
            if let Some(p) = runs_out {
                write_runs_csv(&s.runs, create(&p)?)?;
            }
            println!("n = {}, candidate cells = {}, runs = {}", s.n, s.n_candidates, s.runs.len());
            println!("mean q = {}", s.mean_q);
            println!("beta1 = {}", s.mean_beta1);
            println!("lambda = {}", s.mean_lambda);
            println!("sigma2 = {}", s.mean_sigma2);
        }
        Cmd::ExportPairs { input, cols, data, grid, sampler, seed, out } => {
            let points = match input {
                Some(path) => {
                    let opts = FitFileOptions {
                        x_col: cols.x_col,
                        y_col: cols.y_col,
                        c1_col: cols.c1_col,
                        c2_col: cols.c2_col,
                        ..Default::default()
                    };
                    let (c, x, y) = read_points_csv(File::open(&path)?, &opts)?;
                    PointSet::new(c, x, y)?
                }
                None => data.points()?,
            };
            let pairs = export_pairs(&points, &grid.spec()?, &sampler.config(seed), &out)?;
            println!("wrote {} pairs to {}", pairs.q(), out.display());
        }
        Cmd::Timing { config, out } => {
            let cfg = ScenarioConfig::from_path(&config)?;
            let rows = timing_report(&cfg)?;
            write_timing_csv(&rows, create(&out)?)?;
            for r in &rows {
                println!(
                    "n={:>6} sgpl {:>9.3} ms  benchmark {:>10.3} ms  ratio {:>8.1}",
                    r.n, r.mean_time_sgpl_ms, r.time_benchmark_ms, r.relative_time
                );
            }
        }
        Cmd::Generate { data, out } => {
            data.points()?.write_csv(create(&out)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
