//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use sgpl::dgp::WeightsMatrix;
use sgpl::hexgrid::{CellId, GridSpec};
use sgpl::plcore::{total_loglik, PairData, Theta};
use sgpl::points::Coord;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Pairs with x ~ N(0, 1) and bivariate normal errors of variance `sigma2`
/// and correlation `lambda`.
pub fn pair_instance(q: usize, beta: f64, sigma2: f64, lambda: f64, seed: u64) -> PairData {
    let mut r = rng(seed);
    let sd = sigma2.sqrt();
    let mut cols = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
    for _ in 0..q {
        let (xi, xl): (f64, f64) = (r.sample(StandardNormal), r.sample(StandardNormal));
        let (z1, z2): (f64, f64) = (r.sample(StandardNormal), r.sample(StandardNormal));
        let ei = sd * z1;
        let el = sd * (lambda * z1 + (1.0 - lambda * lambda).sqrt() * z2);
        cols[0].push(xi);
        cols[1].push(xl);
        cols[2].push(beta * xi + ei);
        cols[3].push(beta * xl + el);
    }
    let [a, b, c, d] = cols;
    PairData::new(a, b, c, d).unwrap()
}

/// Largest component of the central-difference gradient of the pairwise
/// log-likelihood, step `1e-6 * max(|theta_j|, 1)`.
pub fn fd_gradient_max(theta: &Theta, data: &PairData) -> f64 {
    let base = [theta.beta, theta.sigma2, theta.lambda];
    let mut worst = 0.0f64;
    for j in 0..3 {
        let h = 1e-6 * base[j].abs().max(1.0);
        let at = |d: f64| {
            let mut v = base;
            v[j] += d;
            total_loglik(&Theta::new(v[0], v[1], v[2]), data).unwrap()
        };
        worst = worst.max(((at(h) - at(-h)) / (2.0 * h)).abs());
    }
    worst
}

/// Fixed-point residual of the three closed-form updates, recomputed from
/// raw pair sums (not the library's sufficient statistics).
pub fn update_residual(theta: &Theta, d: &PairData) -> f64 {
    let (mut a1, mut a2, mut a3, mut a4, mut a5, mut a6) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for k in 0..d.q() {
        let (xi, xl, yi, yl) = (d.x_i[k], d.x_l[k], d.y_i[k], d.y_l[k]);
        a1 += xi * xi + xl * xl;
        a2 += yi * yi + yl * yl;
        a3 += xi * yi + xl * yl;
        a4 += xi * yl + xl * yi;
        a5 += xi * xl;
        a6 += yi * yl;
    }
    let q = d.q() as f64;
    let (b, s, l) = (theta.beta, theta.sigma2, theta.lambda);
    let beta = (a3 - l * a4) / (a1 - 2.0 * l * a5);
    let quad = a2 + b * b * a1 - 2.0 * b * a3 - 2.0 * l * (a6 - b * a4 + b * b * a5);
    let sigma2 = quad / (2.0 * q * (1.0 - l * l));
    let lambda = (a6 - b * a4 + b * b * a5) / (q * s);
    (beta - b).abs().max(((sigma2 - s) / s).abs()).max((lambda - l).abs())
}

/// Nearest cell center by exhaustive search over a window of axial coordinates.
pub fn nearest_center_brute(grid: &GridSpec, p: Coord, window: i64) -> (CellId, f64, f64) {
    let e = grid.edge();
    let mut best = (CellId::new(0, 0), f64::INFINITY, f64::INFINITY);
    for q in -window..=window {
        for r in -window..=window {
            let cx = e * 3f64.sqrt() * (q as f64 + r as f64 / 2.0);
            let cy = 1.5 * e * r as f64;
            let d = (p[0] - cx).powi(2) + (p[1] - cy).powi(2);
            if d < best.1 {
                best = (CellId::new(q, r), d, best.1);
            } else if d < best.2 {
                best.2 = d;
            }
        }
    }
    best
}

/// kNN by sorting all distances: ascending distance, then ascending index.
pub fn knn_brute(coords: &[Coord], k: usize) -> Vec<Vec<usize>> {
    (0..coords.len())
        .map(|i| {
            let mut others: Vec<(f64, usize)> = (0..coords.len())
                .filter(|&j| j != i)
                .map(|j| {
                    let dx = coords[i][0] - coords[j][0];
                    let dy = coords[i][1] - coords[j][1];
                    (dx * dx + dy * dy, j)
                })
                .collect();
            others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            others.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect()
}

pub fn dense_w(w: &WeightsMatrix) -> DMatrix<f64> {
    let n = w.n();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for &j in w.row(i) {
            m[(i, j)] += w.weight();
        }
    }
    m
}

/// Solves `(I - lambda W) u = eps` by dense LU.
pub fn sem_errors_exact(w: &WeightsMatrix, lambda: f64, eps: &[f64]) -> Vec<f64> {
    let n = w.n();
    let a = DMatrix::identity(n, n) - dense_w(w) * lambda;
    let u = a.lu().solve(&DVector::from_column_slice(eps)).expect("I - lambda W is singular");
    u.iter().copied().collect()
}
