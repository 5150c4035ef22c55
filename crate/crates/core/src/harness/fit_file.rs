//! Fitting SG-PL to point data read from CSV.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SgplError};
use crate::harness::scenario::elapsed_ms;
use crate::harness::seeds::{derive_seed, Stream};
use crate::hexgrid::GridSpec;
use crate::pairsampler::{SamplerConfig, SamplingPlan};
use crate::plcore::{fit_pl, FitOptions, PairData};
use crate::points::{Coord, PointSet};

pub const EARTH_RADIUS_KM: f64 = 6371.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordMode {
    /// Columns are already planar coordinates.
    Planar,
    /// Columns are latitude and longitude in degrees, projected to km.
    Latlon,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitFileOptions {
    pub x_col: String,
    pub y_col: String,
    /// First coordinate column: planar x, or latitude.
    pub c1_col: String,
    /// Second coordinate column: planar y, or longitude.
    pub c2_col: String,
    pub coord_mode: CoordMode,
    pub grid: GridSpec,
    pub sampler: SamplerConfig,
    pub fit: FitOptions,
    pub runs: usize,
    pub master_seed: u64,
}

impl Default for FitFileOptions {
    fn default() -> Self {
        Self {
            x_col: "x".into(),
            y_col: "y".into(),
            c1_col: "px".into(),
            c2_col: "py".into(),
            coord_mode: CoordMode::Planar,
            grid: GridSpec::default(),
            sampler: SamplerConfig::default(),
            fit: FitOptions::default(),
            runs: 1,
            master_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitRun {
    pub run: usize,
    pub seed: u64,
    pub q: usize,
    pub achieved_target: bool,
    pub converged: bool,
    pub iterations: usize,
    pub beta1: f64,
    pub sigma2: f64,
    pub lambda: f64,
    pub loglik: f64,
    pub time_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitSummary {
    pub n: usize,
    pub n_candidates: usize,
    pub runs: Vec<FitRun>,
    pub mean_beta1: f64,
    pub mean_sigma2: f64,
    pub mean_lambda: f64,
    pub mean_q: f64,
}

/// Reads the four named columns. Numbers must use a decimal point.
pub fn read_points_csv<R: std::io::Read>(r: R, opts: &FitFileOptions) -> Result<(Vec<Coord>, Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| SgplError::InvalidInput(format!("missing column {name:?}")))
    };
    let cols = [find(&opts.c1_col)?, find(&opts.c2_col)?, find(&opts.x_col)?, find(&opts.y_col)?];
    let names = [&opts.c1_col, &opts.c2_col, &opts.x_col, &opts.y_col];
    let (mut coords, mut x, mut y) = (Vec::new(), Vec::new(), Vec::new());
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        // Header is line 1.
        let line = row + 2;
        let mut v = [0.0; 4];
        for k in 0..4 {
            let raw = rec.get(cols[k]).unwrap_or("");
            v[k] = raw.parse::<f64>().ok().filter(|f| f.is_finite()).ok_or_else(|| {
                SgplError::InvalidInput(format!("line {line}, column {:?}: not a finite number: {raw:?}", names[k]))
            })?;
        }
        coords.push([v[0], v[1]]);
        x.push(v[2]);
        y.push(v[3]);
    }
    if coords.len() < 2 {
        return Err(SgplError::InvalidInput(format!("need at least 2 data rows, found {}", coords.len())));
    }
    Ok((coords, x, y))
}

/// Equirectangular projection of (lat, lon) degrees to km around the mean
/// latitude and longitude.
pub fn project_latlon(latlon: &[Coord]) -> Result<Vec<Coord>> {
    let n = latlon.len() as f64;
    if let Some(bad) = latlon.iter().find(|p| p[0].abs() > 90.0 || p[1].abs() > 360.0) {
        return Err(SgplError::InvalidInput(format!("not a latitude/longitude pair: {bad:?}")));
    }
    let lat0 = latlon.iter().map(|p| p[0]).sum::<f64>() / n;
    let lon0 = latlon.iter().map(|p| p[1]).sum::<f64>() / n;
    let k = EARTH_RADIUS_KM * std::f64::consts::PI / 180.0;
    let c = lat0.to_radians().cos();
    Ok(latlon.iter().map(|p| [k * (p[1] - lon0) * c, k * (p[0] - lat0)]).collect())
}

pub fn fit_points(points: &PointSet, opts: &FitFileOptions) -> Result<FitSummary> {
    if opts.runs == 0 {
        return Err(SgplError::Config("runs must be at least 1".into()));
    }
    let points = points.demeaned();
    let plan = SamplingPlan::new(&points, &opts.grid, &opts.sampler)?;
    let mut runs = Vec::with_capacity(opts.runs);
    for run in 0..opts.runs {
        let seed = derive_seed(opts.master_seed, 0, Stream::FitRun, run as u64);
        let t = Instant::now();
        let pairs = plan.draw(&opts.sampler.with_seed(seed))?;
        let fit = fit_pl(&PairData::from_pairs(&points, &pairs)?, &opts.fit)?;
        let time_ms = elapsed_ms(t);
        runs.push(FitRun {
            run,
            seed,
            q: pairs.q(),
            achieved_target: pairs.achieved_target,
            converged: fit.converged,
            iterations: fit.iterations,
            beta1: fit.beta,
            sigma2: fit.sigma2,
            lambda: fit.lambda,
            loglik: fit.loglik,
            time_ms,
        });
    }
    let m = runs.len() as f64;
    let mean = |f: fn(&FitRun) -> f64| runs.iter().map(f).sum::<f64>() / m;
    Ok(FitSummary {
        n: points.len(),
        n_candidates: plan.candidates.len(),
        mean_beta1: mean(|r| r.beta1),
        mean_sigma2: mean(|r| r.sigma2),
        mean_lambda: mean(|r| r.lambda),
        mean_q: mean(|r| r.q as f64),
        runs,
    })
}

pub fn fit_file(path: &Path, opts: &FitFileOptions) -> Result<FitSummary> {
    let file = std::fs::File::open(path)
        .map_err(|e| SgplError::InvalidInput(format!("cannot open {}: {e}", path.display())))?;
    let (coords, x, y) = read_points_csv(file, opts)?;
    let coords = match opts.coord_mode {
        CoordMode::Planar => coords,
        CoordMode::Latlon => project_latlon(&coords)?,
    };
    fit_points(&PointSet::new(coords, x, y)?, opts)
}

pub const RUN_COLUMNS: [&str; 11] = [
    "run", "seed", "q", "achieved_target", "converged", "iterations", "beta1", "sigma2", "lambda",
    "loglik", "time_ms",
];

pub fn write_runs_csv<W: std::io::Write>(runs: &[FitRun], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(RUN_COLUMNS)?;
    for r in runs {
        wtr.write_record([
            r.run.to_string(),
            r.seed.to_string(),
            r.q.to_string(),
            r.achieved_target.to_string(),
            r.converged.to_string(),
            r.iterations.to_string(),
            r.beta1.to_string(),
            r.sigma2.to_string(),
            r.lambda.to_string(),
            r.loglik.to_string(),
            format!("{:.3}", r.time_ms),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
