use std::path::Path;

use crate::error::Result;
use crate::hexgrid::GridSpec;
use crate::pairsampler::{run_sgpl_sampling, PairSet, SamplerConfig};
use crate::points::PointSet;

/// Runs one round of cell selection and pair sampling and writes the pairs as CSV.
pub fn export_pairs(points: &PointSet, grid: &GridSpec, sampler: &SamplerConfig, path: &Path) -> Result<PairSet> {
    let pairs = run_sgpl_sampling(points, grid, sampler)?;
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    pairs.write_csv(points, file)?;
    Ok(pairs)
}
