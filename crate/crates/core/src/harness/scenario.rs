//! Monte-Carlo scenario runner and timing report.

use std::time::Instant;

use rayon::prelude::*;

use crate::dgp::{gen_dataset, Dataset, Pattern};
use crate::error::{Result, SgplError};
use crate::harness::config::{Benchmark, DatasetMode, ScenarioConfig};
use crate::harness::metrics::{aggregate, BenchEstimate, MetricsRow, ReplicateRecord, Truth};
use crate::harness::seeds::{derive_seed, Stream};
use crate::oracle::{fit_ml_sem, ML_MAX_N};
use crate::pairsampler::SamplingPlan;
use crate::plcore::{fit_pl, PairData};
use crate::points::PointSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioCell {
    pub index: usize,
    pub n: usize,
    pub lambda_sem: f64,
    pub pattern: Pattern,
}

/// Cells in `n`-major, then `lambda_sem`, then pattern order.
pub fn scenario_cells(cfg: &ScenarioConfig) -> Vec<ScenarioCell> {
    let mut out = Vec::new();
    for &n in &cfg.n {
        for &lambda_sem in &cfg.lambda_sem {
            for &pattern in &cfg.patterns {
                out.push(ScenarioCell { index: out.len(), n, lambda_sem, pattern });
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub rows: Vec<MetricsRow>,
    pub replicates: Vec<ReplicateRecord>,
}

/// Wall-clock milliseconds at microsecond resolution.
pub(crate) fn elapsed_ms(start: Instant) -> f64 {
    (start.elapsed().as_secs_f64() * 1e6).round() / 1e3
}

struct Prepared {
    data_seed: u64,
    points: PointSet,
    plan: std::result::Result<SamplingPlan, String>,
    prep_time_ms: f64,
    bench: Option<BenchEstimate>,
    bench_time_ms: Option<f64>,
}

fn prepare(cfg: &ScenarioConfig, cell: &ScenarioCell, data_seed: u64, run_bench: bool) -> Result<Prepared> {
    let spec = cfg.dgp.spec(cell.n, cell.pattern, cell.lambda_sem, data_seed);
    let Dataset { points, weights } = gen_dataset(&spec)?;
    let (bench, bench_time_ms) = if run_bench {
        let t = Instant::now();
        let fit = fit_ml_sem(&weights, &points.x, &points.y)?;
        let time = elapsed_ms(t);
        (Some(BenchEstimate { beta1: fit.beta1, lambda: fit.lambda_ml, sigma2: fit.sigma2_ml }), Some(time))
    } else {
        (None, None)
    };
    let points = if cfg.demean { points.demeaned() } else { points };
    let t = Instant::now();
    let plan = SamplingPlan::new(&points, &cfg.grid, &cfg.sampler.with_seed(0));
    let prep_time_ms = elapsed_ms(t);
    let plan = match plan {
        Ok(p) => Ok(p),
        Err(e @ SgplError::NoCandidateCells { .. }) => Err(e.to_string()),
        Err(e) => return Err(e),
    };
    Ok(Prepared { data_seed, points, plan, prep_time_ms, bench, bench_time_ms })
}

fn replicate(cfg: &ScenarioConfig, cell: &ScenarioCell, prep: &Prepared, rep: usize) -> ReplicateRecord {
    let sampler_seed = derive_seed(cfg.master_seed, cell.index as u64, Stream::Sampler, rep as u64);
    let mut rec = ReplicateRecord {
        scenario: cell.index,
        n: cell.n,
        lambda_sem: cell.lambda_sem,
        pattern: cell.pattern,
        rep,
        data_seed: prep.data_seed,
        sampler_seed,
        status: "ok".into(),
        q: 0,
        achieved_target: false,
        converged: false,
        iterations: 0,
        beta1: f64::NAN,
        sigma2: f64::NAN,
        lambda: f64::NAN,
        loglik: f64::NAN,
        bench: prep.bench,
        prep_time_ms: prep.prep_time_ms,
        time_ms: 0.0,
        bench_time_ms: prep.bench_time_ms,
    };
    let plan = match &prep.plan {
        Ok(p) => p,
        Err(msg) => {
            rec.status = msg.clone();
            return rec;
        }
    };
    let t = Instant::now();
    let outcome = plan
        .draw(&cfg.sampler.with_seed(sampler_seed))
        .and_then(|pairs| Ok((PairData::from_pairs(&prep.points, &pairs)?, pairs)))
        .and_then(|(data, pairs)| Ok((fit_pl(&data, &cfg.fit)?, pairs)));
    rec.time_ms = elapsed_ms(t);
    match outcome {
        Ok((fit, pairs)) => {
            rec.q = pairs.q();
            rec.achieved_target = pairs.achieved_target;
            rec.converged = fit.converged;
            rec.iterations = fit.iterations;
            rec.beta1 = fit.beta;
            rec.sigma2 = fit.sigma2;
            rec.lambda = fit.lambda;
            rec.loglik = fit.loglik;
        }
        Err(e) => rec.status = e.to_string(),
    }
    rec
}

fn benchmark_plan(cfg: &ScenarioConfig, n: usize) -> (bool, String) {
    match cfg.benchmark {
        Benchmark::None => (false, "none".into()),
        Benchmark::MlOracle if n > ML_MAX_N => {
            (false, format!("skipped: n = {n} exceeds dense ML cap {ML_MAX_N}"))
        }
        Benchmark::MlOracle => (true, "ml_oracle".into()),
    }
}

fn run_cell(cfg: &ScenarioConfig, cell: &ScenarioCell) -> Result<(MetricsRow, Vec<ReplicateRecord>)> {
    let (run_bench, note) = benchmark_plan(cfg, cell.n);
    let records: Vec<ReplicateRecord> = match cfg.mode {
        DatasetMode::FixedDataset => {
            let seed = derive_seed(cfg.master_seed, cell.index as u64, Stream::Dataset, 0);
            let prep = prepare(cfg, cell, seed, run_bench)?;
            if cfg.parallel {
                (0..cfg.reps).into_par_iter().map(|r| replicate(cfg, cell, &prep, r)).collect()
            } else {
                (0..cfg.reps).map(|r| replicate(cfg, cell, &prep, r)).collect()
            }
        }
        DatasetMode::FreshDataset => {
            let one = |r: usize| -> Result<ReplicateRecord> {
                let seed = derive_seed(cfg.master_seed, cell.index as u64, Stream::Dataset, r as u64);
                let prep = prepare(cfg, cell, seed, run_bench)?;
                Ok(replicate(cfg, cell, &prep, r))
            };
            if cfg.parallel {
                (0..cfg.reps).into_par_iter().map(one).collect::<Result<_>>()?
            } else {
                (0..cfg.reps).map(one).collect::<Result<_>>()?
            }
        }
    };
    let truth = Truth { beta1: cfg.dgp.beta1, lambda: cell.lambda_sem, sigma2: cfg.dgp.sigma_eps2 };
    let row = aggregate(&records, cfg.mode, truth, &note)?;
    Ok((row, records))
}

/// Runs every scenario cell. Replicate `r` of cell `s` uses the sampler seed
/// `derive_seed(master_seed, s, Sampler, r)`; datasets use the `Dataset`
/// stream with index 0 (fixed mode) or `r` (fresh mode).
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    cfg.validate()?;
    let mut rows = Vec::new();
    let mut replicates = Vec::new();
    for cell in scenario_cells(cfg) {
        let (row, recs) = run_cell(cfg, &cell)?;
        rows.push(row);
        replicates.extend(recs);
    }
    Ok(ScenarioOutput { rows, replicates })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub n: usize,
    pub lambda_sem: f64,
    pub pattern: Pattern,
    pub mean_q: f64,
    pub time_prep_ms: f64,
    pub mean_time_sgpl_ms: f64,
    pub time_benchmark_ms: f64,
    /// Benchmark time over mean SG-PL replicate time.
    pub relative_time: f64,
}

/// Sequential run with the dense ML benchmark on every cell.
pub fn timing_report(cfg: &ScenarioConfig) -> Result<Vec<TimingRow>> {
    if let Some(&n) = cfg.n.iter().find(|&&n| n > ML_MAX_N) {
        return Err(SgplError::OracleCap { n, cap: ML_MAX_N });
    }
    let cfg = ScenarioConfig { benchmark: Benchmark::MlOracle, parallel: false, ..cfg.clone() };
    let out = run_scenario(&cfg)?;
    out.rows
        .iter()
        .map(|r| {
            let bench = r.mean_time_benchmark_ms.ok_or_else(|| {
                SgplError::Internal(format!("scenario {} has no benchmark timing", r.scenario))
            })?;
            Ok(TimingRow {
                n: r.n,
                lambda_sem: r.lambda_sem,
                pattern: r.pattern,
                mean_q: r.mean_q,
                time_prep_ms: r.mean_time_prep_ms,
                mean_time_sgpl_ms: r.mean_time_sgpl_ms,
                time_benchmark_ms: bench,
                relative_time: bench / r.mean_time_sgpl_ms.max(1e-6),
            })
        })
        .collect()
}

pub const TIMING_COLUMNS: [&str; 8] = [
    "n", "lambda_sem", "pattern", "mean_q", "time_prep_ms", "mean_time_sgpl_ms",
    "time_benchmark_ms", "relative_time",
];

pub fn write_timing_csv<W: std::io::Write>(rows: &[TimingRow], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(TIMING_COLUMNS)?;
    for r in rows {
        wtr.write_record([
            r.n.to_string(),
            r.lambda_sem.to_string(),
            r.pattern.as_str().to_string(),
            r.mean_q.to_string(),
            format!("{:.3}", r.time_prep_ms),
            format!("{:.3}", r.mean_time_sgpl_ms),
            format!("{:.3}", r.time_benchmark_ms),
            format!("{:.1}", r.relative_time),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
