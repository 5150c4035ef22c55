//! Grid-based pair selection: candidate cells, spatially isolated cell
//! selection, and one uniformly drawn pair per selected cell.

use std::collections::{HashMap, HashSet};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SgplError};
use crate::hexgrid::{assign_all, k_ring, CellAssignment, CellId, GridSpec};
use crate::points::PointSet;

/// Seeded RNG used for every random step of pair selection.
pub type SamplerRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub n_min_per_cell: usize,
    pub k_ring: u32,
    pub q_target: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { n_min_per_cell: 2, k_ring: 1, q_target: 1000, seed: 0 }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_min_per_cell < 2 {
            return Err(SgplError::Config(format!(
                "n_min_per_cell must be at least 2, got {}",
                self.n_min_per_cell
            )));
        }
        if self.q_target == 0 {
            return Err(SgplError::Config("q_target must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SampledPair {
    /// Always `i < l`.
    pub i: usize,
    pub l: usize,
    pub cell: CellId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairSet {
    pub pairs: Vec<SampledPair>,
    pub q_target: usize,
    /// False when candidate cells ran out before `q_target` was reached.
    pub achieved_target: bool,
}

impl PairSet {
    pub fn q(&self) -> usize {
        self.pairs.len()
    }

    pub const CSV_HEADER: [&'static str; 8] =
        ["cell_q", "cell_r", "i", "l", "xi_coord", "yi_coord", "xl_coord", "yl_coord"];

    /// Figure-ready export: one row per pair with both endpoint locations.
    pub fn write_csv<W: Write>(&self, points: &PointSet, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(Self::CSV_HEADER)?;
        for p in &self.pairs {
            let (a, b) = match (points.coords.get(p.i), points.coords.get(p.l)) {
                (Some(a), Some(b)) => (a, b),
                _ => {
                    return Err(SgplError::InvalidInput(format!(
                        "pair ({}, {}) indexes beyond {} points",
                        p.i,
                        p.l,
                        points.len()
                    )))
                }
            };
            wtr.write_record([
                p.cell.q.to_string(),
                p.cell.r.to_string(),
                p.i.to_string(),
                p.l.to_string(),
                a[0].to_string(),
                a[1].to_string(),
                b[0].to_string(),
                b[1].to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Cells holding at least `n_min_per_cell` points, in ascending `CellId` order.
pub fn candidate_cells(assignment: &CellAssignment, cfg: &SamplerConfig) -> Vec<CellId> {
    assignment
        .cells
        .iter()
        .filter(|(_, members)| members.len() >= cfg.n_min_per_cell)
        .map(|(c, _)| *c)
        .collect()
}

/// Random sequential selection of cells at mutual hex distance `> k_ring`.
///
/// `candidates` is taken in the given order (callers pass it sorted). The
/// random order is a forward Fisher-Yates shuffle drawn lazily: step `t`
/// swaps position `t` with a uniform position in `t..len`, then the cell now
/// at `t` is taken unless an earlier pick's k-ring removed it. Stops once
/// `q_target` cells are selected or the list is exhausted.
pub fn select_isolated_cells<R: Rng + ?Sized>(
    candidates: &[CellId],
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Vec<CellId> {
    let mut order = candidates.to_vec();
    let mut removed: HashSet<CellId> = HashSet::new();
    let mut selected = Vec::with_capacity(cfg.q_target.min(order.len()));
    let n = order.len();
    for t in 0..n {
        if selected.len() >= cfg.q_target {
            break;
        }
        let j = rng.random_range(t..n);
        order.swap(t, j);
        let chosen = order[t];
        if removed.contains(&chosen) {
            continue;
        }
        selected.push(chosen);
        removed.extend(k_ring(chosen, cfg.k_ring));
    }
    selected
}

/// Draws one unordered pair of distinct members, uniformly, from each selected cell.
pub fn sample_pairs<R: Rng + ?Sized>(
    assignment: &CellAssignment,
    selected: &[CellId],
    q_target: usize,
    rng: &mut R,
) -> Result<PairSet> {
    let mut pairs = Vec::with_capacity(selected.len());
    for &cell in selected {
        let members = assignment
            .members(&cell)
            .ok_or_else(|| SgplError::Internal(format!("selected cell {cell} has no members")))?;
        let m = members.len();
        if m < 2 {
            return Err(SgplError::Internal(format!(
                "selected cell {cell} has {m} member(s); a pair needs 2"
            )));
        }
        // Uniform ordered pair of distinct positions, hence uniform unordered pair.
        let a = rng.random_range(0..m);
        let mut b = rng.random_range(0..m - 1);
        if b >= a {
            b += 1;
        }
        let (pa, pb) = (members[a], members[b]);
        pairs.push(SampledPair { i: pa.min(pb), l: pa.max(pb), cell });
    }
    let achieved_target = pairs.len() == q_target;
    Ok(PairSet { pairs, q_target, achieved_target })
}

/// The deterministic part of pair selection (grid overlay, candidate
/// filtering and each candidate's k-ring neighbourhood), computed once per
/// point set and reused across replicates.
#[derive(Debug, Clone)]
pub struct SamplingPlan {
    pub assignment: CellAssignment,
    pub candidates: Vec<CellId>,
    pub n_min_per_cell: usize,
    pub k_ring: u32,
    /// For each candidate, the indices of candidates within its k-ring.
    blocked: Vec<Vec<u32>>,
    /// Member lists aligned with `candidates`.
    members: Vec<Vec<usize>>,
}

impl SamplingPlan {
    pub fn new(points: &PointSet, grid: &GridSpec, cfg: &SamplerConfig) -> Result<Self> {
        cfg.validate()?;
        if points.len() < 2 {
            return Err(SgplError::InvalidInput(format!(
                "pair sampling needs at least 2 points, got {}",
                points.len()
            )));
        }
        let assignment = assign_all(grid, points)?;
        let candidates = candidate_cells(&assignment, cfg);
        if candidates.is_empty() {
            return Err(SgplError::NoCandidateCells { n_min: cfg.n_min_per_cell });
        }
        if candidates.len() > u32::MAX as usize {
            return Err(SgplError::InvalidInput(format!("{} candidate cells", candidates.len())));
        }
        let index: HashMap<CellId, u32> =
            candidates.iter().enumerate().map(|(i, c)| (*c, i as u32)).collect();
        let blocked = candidates
            .iter()
            .map(|c| k_ring(*c, cfg.k_ring).iter().filter_map(|r| index.get(r).copied()).collect())
            .collect();
        let members = candidates
            .iter()
            .map(|c| assignment.members(c).map(<[usize]>::to_vec).unwrap_or_default())
            .collect();
        Ok(Self {
            assignment,
            candidates,
            n_min_per_cell: cfg.n_min_per_cell,
            k_ring: cfg.k_ring,
            blocked,
            members,
        })
    }

    /// One replicate of cell selection and pair sampling, seeded by `cfg.seed`.
    ///
    /// Consumes the random stream exactly as [`select_isolated_cells`]
    /// followed by [`sample_pairs`] would, so the result is identical.
    pub fn draw(&self, cfg: &SamplerConfig) -> Result<PairSet> {
        if cfg.n_min_per_cell != self.n_min_per_cell || cfg.k_ring != self.k_ring {
            return Err(SgplError::Config(format!(
                "plan built for n_min_per_cell = {}, k_ring = {}; asked to draw with {}, {}",
                self.n_min_per_cell, self.k_ring, cfg.n_min_per_cell, cfg.k_ring
            )));
        }
        let mut rng = SamplerRng::seed_from_u64(cfg.seed);
        let n = self.candidates.len();
        let mut order: Vec<u32> = (0..n as u32).collect();
        let mut removed = vec![false; n];
        let mut selected = Vec::with_capacity(cfg.q_target.min(n));
        for t in 0..n {
            if selected.len() >= cfg.q_target {
                break;
            }
            let j = rng.random_range(t..n);
            order.swap(t, j);
            let c = order[t] as usize;
            if removed[c] {
                continue;
            }
            selected.push(c);
            for &b in &self.blocked[c] {
                removed[b as usize] = true;
            }
        }
        let mut pairs = Vec::with_capacity(selected.len());
        for c in selected {
            let members = &self.members[c];
            let m = members.len();
            if m < 2 {
                return Err(SgplError::Internal(format!(
                    "selected cell {} has {m} member(s); a pair needs 2",
                    self.candidates[c]
                )));
            }
            let a = rng.random_range(0..m);
            let mut b = rng.random_range(0..m - 1);
            if b >= a {
                b += 1;
            }
            let (pa, pb) = (members[a], members[b]);
            pairs.push(SampledPair { i: pa.min(pb), l: pa.max(pb), cell: self.candidates[c] });
        }
        let achieved_target = pairs.len() == cfg.q_target;
        Ok(PairSet { pairs, q_target: cfg.q_target, achieved_target })
    }
}

/// Grid overlay, candidate identification, isolated selection and pair sampling.
pub fn run_sgpl_sampling(points: &PointSet, grid: &GridSpec, cfg: &SamplerConfig) -> Result<PairSet> {
    SamplingPlan::new(points, grid, cfg)?.draw(cfg)
}
