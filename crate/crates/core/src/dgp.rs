//! Simulated spatial error model data on the unit square.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SgplError};
use crate::points::{Coord, PointSet};

pub type DgpRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pattern {
    Uniform,
    Clustered,
}

impl Pattern {
    pub fn as_str(&self) -> &'static str {
        match self {
            Pattern::Uniform => "uniform",
            Pattern::Clustered => "clustered",
        }
    }
}

impl std::str::FromStr for Pattern {
    type Err = SgplError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Pattern::Uniform),
            "clustered" => Ok(Pattern::Clustered),
            other => Err(SgplError::Config(format!("unknown pattern {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub n: usize,
    pub pattern: Pattern,
    pub beta0: f64,
    pub beta1: f64,
    pub mu_x: f64,
    pub sigma_x: f64,
    pub sigma_eps2: f64,
    pub lambda_sem: f64,
    pub k_w: usize,
    pub k_taylor: usize,
    /// Poisson mean of the number of cluster centroids.
    pub lambda_c: f64,
    pub sigma_cluster: f64,
    pub seed: u64,
}

impl Default for DgpSpec {
    fn default() -> Self {
        Self {
            n: 1000,
            pattern: Pattern::Uniform,
            beta0: 1.0,
            beta1: 1.5,
            mu_x: 0.0,
            sigma_x: 1.0,
            sigma_eps2: 0.1,
            lambda_sem: 0.0,
            k_w: 4,
            k_taylor: 50,
            lambda_c: 5.0,
            sigma_cluster: 0.05,
            seed: 0,
        }
    }
}

impl DgpSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SgplError::Config(m));
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if !(self.lambda_sem.abs() < 1.0) {
            return bad(format!("|lambda_sem| must be below 1, got {}", self.lambda_sem));
        }
        if self.k_w == 0 || self.k_taylor == 0 {
            return bad("k_w and k_taylor must be at least 1".into());
        }
        if !(self.sigma_eps2 >= 0.0 && self.sigma_x >= 0.0) {
            return bad("variances must be non-negative".into());
        }
        if !(self.lambda_c > 0.0 && self.sigma_cluster > 0.0) {
            return bad("lambda_c and sigma_cluster must be positive".into());
        }
        if self.n <= self.k_w {
            return bad(format!("n = {} must exceed k_w = {}", self.n, self.k_w));
        }
        Ok(())
    }
}

pub fn gen_points_uniform<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Coord> {
    (0..n).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect()
}

/// Poisson number of uniform centroids (redrawn while zero), a balanced split
/// of `n` over them, and isotropic normal scatter redrawn until inside the
/// unit square.
pub fn gen_points_clustered<R: Rng + ?Sized>(
    n: usize,
    lambda_c: f64,
    sigma_cluster: f64,
    rng: &mut R,
) -> Result<Vec<Coord>> {
    let poisson = Poisson::new(lambda_c)
        .map_err(|e| SgplError::Config(format!("invalid lambda_c {lambda_c}: {e}")))?;
    let n_c = loop {
        let draw: f64 = poisson.sample(rng);
        if draw >= 1.0 {
            break draw as usize;
        }
    };
    let centroids: Vec<Coord> = (0..n_c).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
    let base = n / n_c;
    let extra = n % n_c;
    let mut out = Vec::with_capacity(n);
    for (j, mu) in centroids.iter().enumerate() {
        let size = base + usize::from(j < extra);
        for _ in 0..size {
            loop {
                let dx: f64 = rng.sample(StandardNormal);
                let dy: f64 = rng.sample(StandardNormal);
                let p = [mu[0] + sigma_cluster * dx, mu[1] + sigma_cluster * dy];
                if (0.0..=1.0).contains(&p[0]) && (0.0..=1.0).contains(&p[1]) {
                    out.push(p);
                    break;
                }
            }
        }
    }
    Ok(out)
}

/// Row-standardised k-nearest-neighbour weights: every row has `k` entries
/// of weight `1/k`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightsMatrix {
    pub k: usize,
    /// Row-major `n * k` neighbour indices, each row sorted by (distance, index).
    pub neighbors: Vec<usize>,
}

impl WeightsMatrix {
    pub fn n(&self) -> usize {
        self.neighbors.len() / self.k
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.neighbors[i * self.k..(i + 1) * self.k]
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.k as f64
    }

    /// `out = W v`.
    pub fn mul_vec_into(&self, v: &[f64], out: &mut [f64]) {
        let w = self.weight();
        for (i, o) in out.iter_mut().enumerate() {
            let s: f64 = self.row(i).iter().map(|&j| v[j]).sum();
            *o = w * s;
        }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        self.mul_vec_into(v, &mut out);
        out
    }
}

/// Exact kNN by bucketed search; ties in distance go to the lower index.
pub fn knn_weights(coords: &[Coord], k_w: usize) -> Result<WeightsMatrix> {
    let n = coords.len();
    if k_w == 0 {
        return Err(SgplError::InvalidInput("k_w must be at least 1".into()));
    }
    if n <= k_w {
        return Err(SgplError::InvalidInput(format!("kNN weights need n > k_w, got n = {n}, k_w = {k_w}")));
    }
    if let Some(p) = coords.iter().find(|p| !(p[0].is_finite() && p[1].is_finite())) {
        return Err(SgplError::InvalidInput(format!("non-finite coordinate {p:?}")));
    }
    let grid = BucketGrid::new(coords, k_w);
    let mut neighbors = Vec::with_capacity(n * k_w);
    let mut scratch: Vec<(f64, usize)> = Vec::new();
    for i in 0..n {
        grid.nearest(coords, i, k_w, &mut scratch);
        neighbors.extend(scratch.iter().map(|&(_, j)| j));
    }
    Ok(WeightsMatrix { k: k_w, neighbors })
}

struct BucketGrid {
    min: Coord,
    cell: f64,
    nx: usize,
    ny: usize,
    start: Vec<usize>,
    items: Vec<usize>,
}

impl BucketGrid {
    fn new(coords: &[Coord], k: usize) -> Self {
        let n = coords.len();
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for p in coords {
            for d in 0..2 {
                min[d] = min[d].min(p[d]);
                max[d] = max[d].max(p[d]);
            }
        }
        let w = (max[0] - min[0]).max(max[1] - min[1]);
        // About k points per bucket.
        let per_side = ((n as f64 / k.max(1) as f64).sqrt().ceil() as usize).clamp(1, 4096);
        let cell = if w > 0.0 { w / per_side as f64 } else { 1.0 };
        let nx = (((max[0] - min[0]) / cell) as usize + 1).max(1);
        let ny = (((max[1] - min[1]) / cell) as usize + 1).max(1);
        let mut counts = vec![0usize; nx * ny + 1];
        let bucket_of = |p: &Coord| {
            let bx = (((p[0] - min[0]) / cell) as usize).min(nx - 1);
            let by = (((p[1] - min[1]) / cell) as usize).min(ny - 1);
            by * nx + bx
        };
        for p in coords {
            counts[bucket_of(p) + 1] += 1;
        }
        for b in 0..nx * ny {
            counts[b + 1] += counts[b];
        }
        let start = counts.clone();
        let mut fill = counts;
        let mut items = vec![0usize; n];
        for (i, p) in coords.iter().enumerate() {
            let b = bucket_of(p);
            items[fill[b]] = i;
            fill[b] += 1;
        }
        Self { min, cell, nx, ny, start, items }
    }

    fn nearest(&self, coords: &[Coord], i: usize, k: usize, out: &mut Vec<(f64, usize)>) {
        out.clear();
        let p = coords[i];
        let bx = (((p[0] - self.min[0]) / self.cell) as usize).min(self.nx - 1) as i64;
        let by = (((p[1] - self.min[1]) / self.cell) as usize).min(self.ny - 1) as i64;
        let max_ring = self.nx.max(self.ny) as i64;
        let mut ring = 0i64;
        loop {
            for y in (by - ring)..=(by + ring) {
                for x in (bx - ring)..=(bx + ring) {
                    let on_ring = (y - by).abs() == ring || (x - bx).abs() == ring;
                    if !on_ring || x < 0 || y < 0 || x >= self.nx as i64 || y >= self.ny as i64 {
                        continue;
                    }
                    let b = y as usize * self.nx + x as usize;
                    for &j in &self.items[self.start[b]..self.start[b + 1]] {
                        if j != i {
                            let dx = coords[j][0] - p[0];
                            let dy = coords[j][1] - p[1];
                            out.push((dx * dx + dy * dy, j));
                        }
                    }
                }
            }
            if out.len() >= k {
                out.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                out.truncate(k);
                // Anything outside the scanned block is at least `ring * cell` away.
                let reach = ring as f64 * self.cell * (1.0 - 1e-12);
                if out[k - 1].0 < reach * reach || ring >= max_ring {
                    return;
                }
            } else if ring >= max_ring {
                return;
            }
            ring += 1;
        }
    }
}

/// Truncated Neumann series `sum_{k=0}^{K} (lambda W)^k eps` by Horner
/// accumulation `u <- eps + lambda W u`, applied `k_taylor` times.
pub fn neumann_apply(w: &WeightsMatrix, lambda_sem: f64, eps: &[f64], k_taylor: usize) -> Vec<f64> {
    let mut u = eps.to_vec();
    if lambda_sem == 0.0 {
        return u;
    }
    let mut wu = vec![0.0; u.len()];
    for _ in 0..k_taylor {
        w.mul_vec_into(&u, &mut wu);
        for ((ui, e), v) in u.iter_mut().zip(eps).zip(&wu) {
            *ui = e + lambda_sem * v;
        }
    }
    u
}

/// Draws `eps ~ N(0, sigma_eps2 I)` and returns the truncated series together with `eps`.
pub fn neumann_errors<R: Rng + ?Sized>(
    w: &WeightsMatrix,
    lambda_sem: f64,
    sigma_eps2: f64,
    k_taylor: usize,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(lambda_sem.abs() < 1.0) {
        return Err(SgplError::InvalidInput(format!("|lambda_sem| must be below 1, got {lambda_sem}")));
    }
    if !(sigma_eps2 >= 0.0) {
        return Err(SgplError::InvalidInput(format!("sigma_eps2 must be non-negative, got {sigma_eps2}")));
    }
    let sd = sigma_eps2.sqrt();
    let eps: Vec<f64> = (0..w.n()).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect();
    let u = neumann_apply(w, lambda_sem, &eps, k_taylor);
    Ok((u, eps))
}

/// A simulated data set with the weights used to generate it.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub points: PointSet,
    pub weights: WeightsMatrix,
}

/// Coordinates, then `x`, then the error draw, all from one stream seeded by `spec.seed`.
pub fn gen_dataset(spec: &DgpSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = DgpRng::seed_from_u64(spec.seed);
    let coords = match spec.pattern {
        Pattern::Uniform => gen_points_uniform(spec.n, &mut rng),
        Pattern::Clustered => gen_points_clustered(spec.n, spec.lambda_c, spec.sigma_cluster, &mut rng)?,
    };
    let x: Vec<f64> = (0..spec.n)
        .map(|_| spec.mu_x + spec.sigma_x * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let weights = knn_weights(&coords, spec.k_w)?;
    let (u, _) = neumann_errors(&weights, spec.lambda_sem, spec.sigma_eps2, spec.k_taylor, &mut rng)?;
    let y = x.iter().zip(&u).map(|(xi, ui)| spec.beta0 + spec.beta1 * xi + ui).collect();
    Ok(Dataset { points: PointSet::new(coords, x, y)?, weights })
}
