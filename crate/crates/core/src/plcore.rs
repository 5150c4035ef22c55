//! Pairwise likelihood for the scalar-regressor spatial error model.
//!
//! Each selected pair `(i, l)` contributes a bivariate normal density of the
//! residuals `e = y - x*beta` with marginal variance `sigma2` and correlation
//! `lambda`. The estimator iterates the three closed-form first-order
//! conditions, which depend on the data only through six pair sums.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SgplError};
use crate::pairsampler::PairSet;
use crate::points::PointSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theta {
    pub beta: f64,
    pub sigma2: f64,
    pub lambda: f64,
}

impl Theta {
    pub const fn new(beta: f64, sigma2: f64, lambda: f64) -> Self {
        Self { beta, sigma2, lambda }
    }

    pub fn check_domain(&self) -> Result<()> {
        if !(self.sigma2 > 0.0) || !self.sigma2.is_finite() {
            return Err(SgplError::Domain(format!("sigma2 must be positive, got {}", self.sigma2)));
        }
        if !(self.lambda.abs() < 1.0) {
            return Err(SgplError::Domain(format!("|lambda| must be below 1, got {}", self.lambda)));
        }
        Ok(())
    }
}

/// Per-pair observations, with `x_i[k], y_i[k]` and `x_l[k], y_l[k]` the two
/// members of pair `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairData {
    pub x_i: Vec<f64>,
    pub x_l: Vec<f64>,
    pub y_i: Vec<f64>,
    pub y_l: Vec<f64>,
}

impl PairData {
    pub fn new(x_i: Vec<f64>, x_l: Vec<f64>, y_i: Vec<f64>, y_l: Vec<f64>) -> Result<Self> {
        let q = x_i.len();
        if x_l.len() != q || y_i.len() != q || y_l.len() != q {
            return Err(SgplError::InvalidInput("pair arrays differ in length".into()));
        }
        let all = x_i.iter().chain(&x_l).chain(&y_i).chain(&y_l);
        if let Some(v) = all.into_iter().find(|v| !v.is_finite()) {
            return Err(SgplError::InvalidInput(format!("non-finite pair value {v}")));
        }
        Ok(Self { x_i, x_l, y_i, y_l })
    }

    pub fn from_pairs(points: &PointSet, pairs: &PairSet) -> Result<Self> {
        let q = pairs.q();
        let (mut x_i, mut x_l, mut y_i, mut y_l) =
            (Vec::with_capacity(q), Vec::with_capacity(q), Vec::with_capacity(q), Vec::with_capacity(q));
        for p in &pairs.pairs {
            if p.i >= points.len() || p.l >= points.len() {
                return Err(SgplError::InvalidInput(format!(
                    "pair ({}, {}) indexes beyond {} points",
                    p.i,
                    p.l,
                    points.len()
                )));
            }
            x_i.push(points.x[p.i]);
            x_l.push(points.x[p.l]);
            y_i.push(points.y[p.i]);
            y_l.push(points.y[p.l]);
        }
        Self::new(x_i, x_l, y_i, y_l)
    }

    pub fn q(&self) -> usize {
        self.x_i.len()
    }
}

pub fn pair_loglik(theta: &Theta, xi: f64, xl: f64, yi: f64, yl: f64) -> Result<f64> {
    theta.check_domain()?;
    Ok(pair_loglik_unchecked(theta, xi, xl, yi, yl))
}

fn pair_loglik_unchecked(theta: &Theta, xi: f64, xl: f64, yi: f64, yl: f64) -> f64 {
    let Theta { beta, sigma2, lambda } = *theta;
    let ei = yi - xi * beta;
    let el = yl - xl * beta;
    let one_m = 1.0 - lambda * lambda;
    -(2.0 * PI).ln() - sigma2.ln() - 0.5 * one_m.ln()
        - (ei * ei - 2.0 * lambda * ei * el + el * el) / (2.0 * sigma2 * one_m)
}

/// Sum of pair contributions.
pub fn total_loglik(theta: &Theta, data: &PairData) -> Result<f64> {
    theta.check_domain()?;
    let mut acc = NeumaierSum::default();
    for k in 0..data.q() {
        acc.add(pair_loglik_unchecked(theta, data.x_i[k], data.x_l[k], data.y_i[k], data.y_l[k]));
    }
    Ok(acc.total())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SufficientStats {
    /// sum of x_i^2 + x_l^2
    pub alpha1: f64,
    /// sum of y_i^2 + y_l^2
    pub alpha2: f64,
    /// sum of x_i y_i + x_l y_l
    pub alpha3: f64,
    /// sum of x_i y_l + x_l y_i
    pub alpha4: f64,
    /// sum of x_i x_l
    pub alpha5: f64,
    /// sum of y_i y_l
    pub alpha6: f64,
    pub q: usize,
}

impl SufficientStats {
    /// Residual quadratic form summed over pairs:
    /// sum of e_i^2 - 2 lambda e_i e_l + e_l^2.
    pub fn quad_form(&self, beta: f64, lambda: f64) -> f64 {
        self.alpha2 + beta * beta * self.alpha1 - 2.0 * beta * self.alpha3
            - 2.0 * lambda * (self.alpha6 - beta * self.alpha4 + beta * beta * self.alpha5)
    }

    /// Log-likelihood evaluated from the sums alone.
    pub fn loglik(&self, theta: &Theta) -> f64 {
        let q = self.q as f64;
        let one_m = 1.0 - theta.lambda * theta.lambda;
        -q * ((2.0 * PI).ln() + theta.sigma2.ln() + 0.5 * one_m.ln())
            - self.quad_form(theta.beta, theta.lambda) / (2.0 * theta.sigma2 * one_m)
    }

    pub fn beta_update(&self, lambda: f64) -> Result<f64> {
        let den = self.alpha1 - 2.0 * lambda * self.alpha5;
        if den.abs() <= 1e-12 {
            return Err(SgplError::DegenerateRegressor { denominator: den });
        }
        Ok((self.alpha3 - lambda * self.alpha4) / den)
    }

    pub fn sigma2_update(&self, beta: f64, lambda: f64) -> f64 {
        self.quad_form(beta, lambda) / (2.0 * self.q as f64 * (1.0 - lambda * lambda))
    }

    pub fn lambda_update(&self, beta: f64, sigma2: f64) -> f64 {
        (self.alpha6 - beta * self.alpha4 + beta * beta * self.alpha5) / (self.q as f64 * sigma2)
    }

    /// Largest discrepancy between `theta` and the right-hand sides of the
    /// three update equations, with `sigma2` measured relatively.
    pub fn fixed_point_residual(&self, theta: &Theta) -> Result<f64> {
        let b = self.beta_update(theta.lambda)?;
        let s = self.sigma2_update(theta.beta, theta.lambda);
        let l = self.lambda_update(theta.beta, theta.sigma2);
        Ok((b - theta.beta)
            .abs()
            .max((s - theta.sigma2).abs() / theta.sigma2.abs().max(f64::MIN_POSITIVE))
            .max((l - theta.lambda).abs()))
    }
}

pub fn sufficient_stats(data: &PairData) -> Result<SufficientStats> {
    let q = data.q();
    if q == 0 {
        return Err(SgplError::InvalidInput("sufficient statistics need at least one pair".into()));
    }
    let mut a = [NeumaierSum::default(); 6];
    for k in 0..q {
        let (xi, xl, yi, yl) = (data.x_i[k], data.x_l[k], data.y_i[k], data.y_l[k]);
        a[0].add(xi * xi + xl * xl);
        a[1].add(yi * yi + yl * yl);
        a[2].add(xi * yi + xl * yl);
        a[3].add(xi * yl + xl * yi);
        a[4].add(xi * xl);
        a[5].add(yi * yl);
    }
    Ok(SufficientStats {
        alpha1: a[0].total(),
        alpha2: a[1].total(),
        alpha3: a[2].total(),
        alpha4: a[3].total(),
        alpha5: a[4].total(),
        alpha6: a[5].total(),
        q,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    /// Stop when the largest parameter change (sigma2 relative) falls below this.
    pub tol: f64,
    pub max_iter: usize,
    pub lambda_clamp: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 200, lambda_clamp: 0.9999 }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(SgplError::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(SgplError::Config("max_iter must be at least 1".into()));
        }
        if !(self.lambda_clamp > 0.0 && self.lambda_clamp < 1.0) {
            return Err(SgplError::Config(format!(
                "lambda_clamp must lie in (0, 1), got {}",
                self.lambda_clamp
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlFit {
    pub beta: f64,
    pub sigma2: f64,
    pub lambda: f64,
    pub iterations: usize,
    pub converged: bool,
    pub loglik: f64,
}

impl PlFit {
    pub fn theta(&self) -> Theta {
        Theta::new(self.beta, self.sigma2, self.lambda)
    }
}

pub fn fit_pl(data: &PairData, opts: &FitOptions) -> Result<PlFit> {
    opts.validate()?;
    if data.q() < 2 {
        return Err(SgplError::InvalidInput(format!("fit needs at least 2 pairs, got {}", data.q())));
    }
    let stats = sufficient_stats(data)?;
    fit_from_stats(&stats, opts)
}

/// Residual variance below this fraction of the response's mean square counts
/// as an exact fit.
const PERFECT_FIT_RTOL: f64 = 1e-13;

/// Cyclic beta -> sigma2 -> lambda substitution starting from lambda = 0.
///
/// Noiseless data (`y` exactly linear in `x`) returns `sigma2 = 0`, `lambda = 0`
/// and an infinite log-likelihood; `y` identically zero is a
/// [`SgplError::DegenerateVariance`].
pub fn fit_from_stats(stats: &SufficientStats, opts: &FitOptions) -> Result<PlFit> {
    opts.validate()?;
    let mut beta = f64::NAN;
    let mut sigma2 = f64::NAN;
    let mut lambda = 0.0;
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=opts.max_iter {
        iterations = it;
        let new_beta = stats.beta_update(lambda)?;
        let new_sigma2 = stats.sigma2_update(new_beta, lambda);
        if !new_sigma2.is_finite() {
            return Err(SgplError::DegenerateVariance { sigma2: new_sigma2 });
        }
        if new_sigma2 <= PERFECT_FIT_RTOL * stats.alpha2 / (2.0 * stats.q as f64) {
            if stats.alpha2 > 0.0 && it == 1 {
                // y is an exact linear function of x: beta is determined,
                // the likelihood is unbounded in sigma2 and lambda is not identified.
                return Ok(PlFit {
                    beta: new_beta,
                    sigma2: 0.0,
                    lambda: 0.0,
                    iterations: it,
                    converged: true,
                    loglik: f64::INFINITY,
                });
            }
            if !(new_sigma2 > 0.0) {
                return Err(SgplError::DegenerateVariance { sigma2: new_sigma2 });
            }
        }
        let new_lambda = stats
            .lambda_update(new_beta, new_sigma2)
            .clamp(-opts.lambda_clamp, opts.lambda_clamp);
        if it > 1 {
            let change = (new_beta - beta)
                .abs()
                .max((new_sigma2 - sigma2).abs() / new_sigma2)
                .max((new_lambda - lambda).abs());
            beta = new_beta;
            sigma2 = new_sigma2;
            lambda = new_lambda;
            if change < opts.tol {
                converged = true;
                break;
            }
        } else {
            beta = new_beta;
            sigma2 = new_sigma2;
            lambda = new_lambda;
        }
    }
    let loglik = stats.loglik(&Theta::new(beta, sigma2, lambda));
    Ok(PlFit { beta, sigma2, lambda, iterations, converged, loglik })
}

/// Neumaier's compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum + self.comp
    }
}
