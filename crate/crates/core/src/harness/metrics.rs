//! Per-replicate records, their aggregation into metrics rows, and the CSV
//! layouts of both tables.

use std::io::{Read, Write};

use crate::dgp::Pattern;
use crate::error::{Result, SgplError};
use crate::harness::config::DatasetMode;

/// One SG-PL replicate, plus the benchmark fit of the dataset it ran on.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateRecord {
    pub scenario: usize,
    pub n: usize,
    pub lambda_sem: f64,
    pub pattern: Pattern,
    pub rep: usize,
    pub data_seed: u64,
    pub sampler_seed: u64,
    /// `ok`, or the error that stopped the replicate.
    pub status: String,
    pub q: usize,
    pub achieved_target: bool,
    pub converged: bool,
    pub iterations: usize,
    pub beta1: f64,
    pub sigma2: f64,
    pub lambda: f64,
    pub loglik: f64,
    pub bench: Option<BenchEstimate>,
    pub prep_time_ms: f64,
    pub time_ms: f64,
    pub bench_time_ms: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchEstimate {
    pub beta1: f64,
    pub lambda: f64,
    pub sigma2: f64,
}

impl ReplicateRecord {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamMetrics {
    pub truth: f64,
    pub mean: f64,
    pub bias: f64,
    pub mse: f64,
    /// Standard error of `mean` across replicates.
    pub mc_se: f64,
    pub bench_mean: Option<f64>,
    pub bench_bias: Option<f64>,
    pub bench_mse: Option<f64>,
    /// `bench_mse / mse`; above 1 favours SG-PL.
    pub relative_efficiency: Option<f64>,
}

impl ParamMetrics {
    fn compute(truth: f64, estimates: &[f64], bench: &[f64]) -> Self {
        let m = estimates.len() as f64;
        let mean = estimates.iter().sum::<f64>() / m;
        let mse = estimates.iter().map(|e| (e - truth) * (e - truth)).sum::<f64>() / m;
        let var = if estimates.len() > 1 {
            estimates.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (m - 1.0)
        } else {
            f64::NAN
        };
        let (bench_mean, bench_bias, bench_mse) = if bench.is_empty() {
            (None, None, None)
        } else {
            let b = bench.len() as f64;
            let bm = bench.iter().sum::<f64>() / b;
            let bmse = bench.iter().map(|e| (e - truth) * (e - truth)).sum::<f64>() / b;
            (Some(bm), Some(bm - truth), Some(bmse))
        };
        let relative_efficiency = bench_mse.filter(|_| mse > 0.0).map(|bm| bm / mse);
        Self {
            truth,
            mean,
            bias: mean - truth,
            mse,
            mc_se: (var / m).sqrt(),
            bench_mean,
            bench_bias,
            bench_mse,
            relative_efficiency,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub scenario: usize,
    pub n: usize,
    pub lambda_sem: f64,
    pub pattern: Pattern,
    pub mode: DatasetMode,
    pub reps: usize,
    pub n_ok: usize,
    pub mean_q: f64,
    pub achieved_rate: f64,
    pub converged_rate: f64,
    pub beta1: ParamMetrics,
    pub lambda: ParamMetrics,
    pub sigma2: ParamMetrics,
    pub mean_time_prep_ms: f64,
    pub mean_time_sgpl_ms: f64,
    pub mean_time_benchmark_ms: Option<f64>,
    /// Benchmark time over SG-PL time.
    pub relative_time: Option<f64>,
    pub benchmark_note: String,
}

/// True values the estimates are scored against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truth {
    pub beta1: f64,
    pub lambda: f64,
    pub sigma2: f64,
}

/// Aggregates one scenario cell. In fixed-dataset mode every record carries
/// the same benchmark fit and only the first is used; in fresh-dataset mode
/// the benchmark is averaged over replicates.
pub fn aggregate(
    records: &[ReplicateRecord],
    mode: DatasetMode,
    truth: Truth,
    benchmark_note: &str,
) -> Result<MetricsRow> {
    let first = records
        .first()
        .ok_or_else(|| SgplError::Internal("cannot aggregate zero replicates".into()))?;
    let ok: Vec<&ReplicateRecord> = records.iter().filter(|r| r.is_ok()).collect();
    if ok.is_empty() {
        return Err(SgplError::Internal(format!(
            "scenario {}: every replicate failed, first error: {}",
            first.scenario, first.status
        )));
    }
    let m = ok.len() as f64;
    let col = |f: fn(&ReplicateRecord) -> f64| ok.iter().map(|r| f(r)).collect::<Vec<f64>>();

    let bench_records: Vec<BenchEstimate> = match mode {
        DatasetMode::FixedDataset => first.bench.into_iter().collect(),
        DatasetMode::FreshDataset => ok.iter().filter_map(|r| r.bench).collect(),
    };
    let bcol = |f: fn(&BenchEstimate) -> f64| bench_records.iter().map(f).collect::<Vec<f64>>();

    let bench_times: Vec<f64> = match mode {
        DatasetMode::FixedDataset => first.bench_time_ms.into_iter().collect(),
        DatasetMode::FreshDataset => ok.iter().filter_map(|r| r.bench_time_ms).collect(),
    };
    let prep_times: Vec<f64> = match mode {
        DatasetMode::FixedDataset => vec![first.prep_time_ms],
        DatasetMode::FreshDataset => ok.iter().map(|r| r.prep_time_ms).collect(),
    };
    let mean_time_prep_ms = prep_times.iter().sum::<f64>() / prep_times.len() as f64;
    let mean_time_sgpl_ms = ok.iter().map(|r| r.time_ms).sum::<f64>() / m;
    let mean_time_benchmark_ms =
        (!bench_times.is_empty()).then(|| bench_times.iter().sum::<f64>() / bench_times.len() as f64);
    let relative_time = mean_time_benchmark_ms.filter(|_| mean_time_sgpl_ms > 0.0).map(|b| b / mean_time_sgpl_ms);

    Ok(MetricsRow {
        scenario: first.scenario,
        n: first.n,
        lambda_sem: first.lambda_sem,
        pattern: first.pattern,
        mode,
        reps: records.len(),
        n_ok: ok.len(),
        mean_q: ok.iter().map(|r| r.q as f64).sum::<f64>() / m,
        achieved_rate: ok.iter().filter(|r| r.achieved_target).count() as f64 / m,
        converged_rate: ok.iter().filter(|r| r.converged).count() as f64 / m,
        beta1: ParamMetrics::compute(truth.beta1, &col(|r| r.beta1), &bcol(|b| b.beta1)),
        lambda: ParamMetrics::compute(truth.lambda, &col(|r| r.lambda), &bcol(|b| b.lambda)),
        sigma2: ParamMetrics::compute(truth.sigma2, &col(|r| r.sigma2), &bcol(|b| b.sigma2)),
        mean_time_prep_ms,
        mean_time_sgpl_ms,
        mean_time_benchmark_ms,
        relative_time,
        benchmark_note: benchmark_note.to_string(),
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn ms(v: f64) -> String {
    format!("{v:.3}")
}

fn opt_ms(v: Option<f64>) -> String {
    v.map(ms).unwrap_or_default()
}

pub const REPLICATE_COLUMNS: [&str; 22] = [
    "scenario", "n", "lambda_sem", "pattern", "rep", "data_seed", "sampler_seed", "status", "q",
    "achieved_target", "converged", "iterations", "beta1", "sigma2", "lambda", "loglik",
    "bench_beta1", "bench_lambda", "bench_sigma2", "prep_time_ms", "time_ms",
    "bench_time_ms",
];

pub fn write_replicates_csv<W: Write>(records: &[ReplicateRecord], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(REPLICATE_COLUMNS)?;
    for r in records {
        wtr.write_record([
            r.scenario.to_string(),
            r.n.to_string(),
            r.lambda_sem.to_string(),
            r.pattern.as_str().to_string(),
            r.rep.to_string(),
            r.data_seed.to_string(),
            r.sampler_seed.to_string(),
            r.status.clone(),
            r.q.to_string(),
            r.achieved_target.to_string(),
            r.converged.to_string(),
            r.iterations.to_string(),
            r.beta1.to_string(),
            r.sigma2.to_string(),
            r.lambda.to_string(),
            r.loglik.to_string(),
            opt(r.bench.map(|b| b.beta1)),
            opt(r.bench.map(|b| b.lambda)),
            opt(r.bench.map(|b| b.sigma2)),
            ms(r.prep_time_ms),
            ms(r.time_ms),
            opt_ms(r.bench_time_ms),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Parses a table written by [`write_replicates_csv`].
pub fn read_replicates_csv<R: Read>(r: R) -> Result<Vec<ReplicateRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let num = |i: usize| -> Result<f64> {
            field(i).parse::<f64>().map_err(|_| {
                SgplError::InvalidInput(format!(
                    "row {}: column {} is not numeric: {:?}",
                    row + 1,
                    REPLICATE_COLUMNS[i],
                    field(i)
                ))
            })
        };
        let int = |i: usize| -> Result<u64> {
            field(i).parse::<u64>().map_err(|_| {
                SgplError::InvalidInput(format!("row {}: column {} is not an integer", row + 1, REPLICATE_COLUMNS[i]))
            })
        };
        let optnum = |i: usize| -> Result<Option<f64>> {
            if field(i).is_empty() { Ok(None) } else { num(i).map(Some) }
        };
        let bench = match (optnum(16)?, optnum(17)?, optnum(18)?) {
            (Some(beta1), Some(lambda), Some(sigma2)) => Some(BenchEstimate { beta1, lambda, sigma2 }),
            _ => None,
        };
        out.push(ReplicateRecord {
            scenario: int(0)? as usize,
            n: int(1)? as usize,
            lambda_sem: num(2)?,
            pattern: field(3).parse()?,
            rep: int(4)? as usize,
            data_seed: int(5)?,
            sampler_seed: int(6)?,
            status: field(7).to_string(),
            q: int(8)? as usize,
            achieved_target: field(9) == "true",
            converged: field(10) == "true",
            iterations: int(11)? as usize,
            beta1: num(12)?,
            sigma2: num(13)?,
            lambda: num(14)?,
            loglik: num(15)?,
            bench,
            prep_time_ms: num(19)?,
            time_ms: num(20)?,
            bench_time_ms: optnum(21)?,
        });
    }
    Ok(out)
}

pub const METRICS_COLUMNS: [&str; 42] = [
    "scenario", "n", "lambda_sem", "pattern", "mode", "reps", "n_ok", "mean_q", "achieved_rate",
    "converged_rate",
    "beta1_true", "beta1_mean", "beta1_bias", "beta1_mse", "beta1_mc_se",
    "beta1_bench_mean", "beta1_bench_bias", "beta1_bench_mse", "beta1_re",
    "lambda_true", "lambda_mean", "lambda_bias", "lambda_mse", "lambda_mc_se",
    "lambda_bench_mean", "lambda_bench_bias", "lambda_bench_mse", "lambda_re",
    "sigma2_true", "sigma2_mean", "sigma2_bias", "sigma2_mse", "sigma2_mc_se",
    "sigma2_bench_mean", "sigma2_bench_bias", "sigma2_bench_mse", "sigma2_re",
    "mean_time_prep_ms", "mean_time_sgpl_ms", "mean_time_benchmark_ms", "relative_time",
    "benchmark_note",
];

fn param_fields(p: &ParamMetrics) -> [String; 9] {
    [
        p.truth.to_string(),
        p.mean.to_string(),
        p.bias.to_string(),
        p.mse.to_string(),
        p.mc_se.to_string(),
        opt(p.bench_mean),
        opt(p.bench_bias),
        opt(p.bench_mse),
        opt(p.relative_efficiency),
    ]
}

pub fn write_metrics_csv<W: Write>(rows: &[MetricsRow], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(METRICS_COLUMNS)?;
    for r in rows {
        let mut rec: Vec<String> = vec![
            r.scenario.to_string(),
            r.n.to_string(),
            r.lambda_sem.to_string(),
            r.pattern.as_str().to_string(),
            r.mode.as_str().to_string(),
            r.reps.to_string(),
            r.n_ok.to_string(),
            r.mean_q.to_string(),
            r.achieved_rate.to_string(),
            r.converged_rate.to_string(),
        ];
        rec.extend(param_fields(&r.beta1));
        rec.extend(param_fields(&r.lambda));
        rec.extend(param_fields(&r.sigma2));
        rec.extend([
            ms(r.mean_time_prep_ms),
            ms(r.mean_time_sgpl_ms),
            opt_ms(r.mean_time_benchmark_ms),
            opt(r.relative_time.map(|v| (v * 1000.0).round() / 1000.0)),
            r.benchmark_note.clone(),
        ]);
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}
