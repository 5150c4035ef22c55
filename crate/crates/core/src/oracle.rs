//! Reference estimators for testing and desk-scale benchmarking.
//!
//! * Exact maximum likelihood for the spatial error model
//!   `y = X beta + u, u = (I - lambda W)^-1 eps`, using the likelihood
//!   concentrated over `beta` and `sigma2` and a dense LU log-determinant.
//! * A brute-force maximiser of the pairwise log-likelihood that shares no
//!   code with the closed-form fixed point in [`crate::plcore`].

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::dgp::WeightsMatrix;
use crate::error::{Result, SgplError};
use crate::plcore::{PairData, Theta};

/// Largest N the dense oracle accepts.
pub const ML_MAX_N: usize = 3000;
pub const LAMBDA_BOUND: f64 = 0.999;
const GRID_POINTS: usize = 21;
const LAMBDA_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileValue {
    pub loglik: f64,
    pub sigma2: f64,
}

/// Concentrated log-likelihood at `lambda` with the GLS coefficients.
pub fn sem_profile_loglik(
    lambda: f64,
    w: &WeightsMatrix,
    x_cols: &[Vec<f64>],
    y: &[f64],
) -> Result<(f64, Vec<f64>, f64)> {
    let n = y.len();
    check_ml_inputs(w, x_cols, y)?;
    if !(lambda.abs() < 1.0) {
        return Err(SgplError::Domain(format!("|lambda| must be below 1, got {lambda}")));
    }
    let log_det = log_det_i_minus_lambda_w(w, lambda)?;
    let (beta, sigma2) = gls_profile(lambda, w, x_cols, y)?;
    let nf = n as f64;
    let loglik = -0.5 * nf * (2.0 * std::f64::consts::PI * sigma2).ln() + log_det - 0.5 * nf;
    Ok((loglik, beta, sigma2))
}

fn check_ml_inputs(w: &WeightsMatrix, x_cols: &[Vec<f64>], y: &[f64]) -> Result<()> {
    let n = y.len();
    if n > ML_MAX_N {
        return Err(SgplError::OracleCap { n, cap: ML_MAX_N });
    }
    if w.n() != n || x_cols.iter().any(|c| c.len() != n) {
        return Err(SgplError::InvalidInput(format!(
            "dimension mismatch: W has {} rows, y has {n}",
            w.n()
        )));
    }
    if x_cols.is_empty() || n <= x_cols.len() {
        return Err(SgplError::InvalidInput(format!(
            "need more observations ({n}) than regressors ({})",
            x_cols.len()
        )));
    }
    Ok(())
}

/// `v - lambda W v`
fn apply_a(w: &WeightsMatrix, lambda: f64, v: &[f64]) -> Vec<f64> {
    let wv = w.mul_vec(v);
    v.iter().zip(&wv).map(|(a, b)| a - lambda * b).collect()
}

fn gls_profile(lambda: f64, w: &WeightsMatrix, x_cols: &[Vec<f64>], y: &[f64]) -> Result<(Vec<f64>, f64)> {
    let p = x_cols.len();
    let ax: Vec<Vec<f64>> = x_cols.iter().map(|c| apply_a(w, lambda, c)).collect();
    let ay = apply_a(w, lambda, y);
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();
    let xtx = Mat::<f64>::from_fn(p, p, |i, j| dot(&ax[i], &ax[j]));
    let xty = Mat::<f64>::from_fn(p, 1, |i, _| dot(&ax[i], &ay));
    let beta_mat = xtx
        .llt(faer::Side::Lower)
        .map_err(|_| SgplError::Singular("X'A'AX is not positive definite".into()))?
        .solve(&xty);
    let beta: Vec<f64> = (0..p).map(|i| beta_mat[(i, 0)]).collect();
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(SgplError::Singular("X'A'AX is numerically singular".into()));
    }
    let mut ss = 0.0;
    let mut scale = 0.0;
    for i in 0..y.len() {
        let fitted: f64 = (0..p).map(|k| ax[k][i] * beta[k]).sum();
        let r = ay[i] - fitted;
        ss += r * r;
        scale += ay[i] * ay[i];
    }
    let sigma2 = ss / y.len() as f64;
    if !(sigma2 > 1e-14 * (scale / y.len() as f64)) || !(sigma2 > 0.0) {
        return Err(SgplError::DegenerateVariance { sigma2 });
    }
    Ok((beta, sigma2))
}

/// `log |I - lambda W|` from the diagonal of a dense partial-pivot LU.
pub fn log_det_i_minus_lambda_w(w: &WeightsMatrix, lambda: f64) -> Result<f64> {
    let n = w.n();
    if n > ML_MAX_N {
        return Err(SgplError::OracleCap { n, cap: ML_MAX_N });
    }
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let wt = lambda * w.weight();
    let mut a = Mat::<f64>::identity(n, n);
    for i in 0..n {
        for &j in w.row(i) {
            a[(i, j)] -= wt;
        }
    }
    let lu = PartialPivLu::new(a.as_ref());
    let u = lu.U();
    let mut log_det = 0.0;
    for i in 0..n {
        let d = u[(i, i)];
        if d == 0.0 || !d.is_finite() {
            return Err(SgplError::Singular(format!("I - lambda W is singular at lambda = {lambda}")));
        }
        log_det += d.abs().ln();
    }
    Ok(log_det)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlFit {
    pub beta0: f64,
    pub beta1: f64,
    pub lambda_ml: f64,
    pub sigma2_ml: f64,
    pub loglik: f64,
    pub n_evals: usize,
    /// The pre-scan found more than one local maximum.
    pub multimodal_warning: bool,
}

/// Maximum likelihood for `y = beta0 + beta1 x + u` by a grid pre-scan over
/// `(-0.999, 0.999)` followed by Brent's method on the bracket around the
/// best grid point. Every evaluation factorises the dense `I - lambda W`.
pub fn fit_ml_sem(w: &WeightsMatrix, x: &[f64], y: &[f64]) -> Result<MlFit> {
    let x_cols = vec![vec![1.0; y.len()], x.to_vec()];
    check_ml_inputs(w, &x_cols, y)?;
    let mut n_evals = 0usize;
    let mut best: Option<(f64, f64, Vec<f64>, f64)> = None;
    let mut eval = |lambda: f64| -> Result<f64> {
        n_evals += 1;
        let (ll, beta, sigma2) = sem_profile_loglik(lambda, w, &x_cols, y)?;
        if best.as_ref().is_none_or(|b| ll > b.1) {
            best = Some((lambda, ll, beta, sigma2));
        }
        Ok(ll)
    };

    let grid: Vec<f64> = (0..GRID_POINTS)
        .map(|i| -LAMBDA_BOUND + 2.0 * LAMBDA_BOUND * i as f64 / (GRID_POINTS - 1) as f64)
        .collect();
    let mut values = Vec::with_capacity(GRID_POINTS);
    for &g in &grid {
        values.push(eval(g)?);
    }
    let top = (0..GRID_POINTS).fold(0, |b, i| if values[i] > values[b] { i } else { b });
    let local_maxima = (0..GRID_POINTS)
        .filter(|&i| {
            let left = i == 0 || values[i] > values[i - 1] + 1e-6;
            let right = i + 1 == GRID_POINTS || values[i] > values[i + 1] + 1e-6;
            left && right
        })
        .count();

    let lo = grid[top.saturating_sub(1)];
    let hi = grid[(top + 1).min(GRID_POINTS - 1)];
    brent_max(&mut eval, lo, hi, grid[top], values[top], LAMBDA_TOL)?;

    let (lambda_ml, loglik, beta, sigma2_ml) =
        best.ok_or_else(|| SgplError::Internal("no likelihood evaluations".into()))?;
    Ok(MlFit {
        beta0: beta[0],
        beta1: beta[1],
        lambda_ml,
        sigma2_ml,
        loglik,
        n_evals,
        multimodal_warning: local_maxima > 1,
    })
}

/// Brent's parabolic/golden-section search for a maximum of `f` on
/// `[a, b]`, starting from the interior point `x` with value `fx`.
fn brent_max<F: FnMut(f64) -> Result<f64>>(
    f: &mut F,
    mut a: f64,
    mut b: f64,
    x: f64,
    fx: f64,
    tol: f64,
) -> Result<f64> {
    const CGOLD: f64 = 0.381_966_011_250_105_1;
    let (mut x, mut w, mut v) = (x, x, x);
    // Minimise the negated objective.
    let (mut fx, mut fw, mut fv) = (-fx, -fx, -fx);
    let (mut d, mut e) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let xm = 0.5 * (a + b);
        let tol1 = tol * 0.5 + 1e-12 * x.abs();
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            if p.abs() < (0.5 * q * e).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = tol1.copysign(xm - x);
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = CGOLD * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = -f(u)?;
        if fu <= fx {
            if u >= x { a = x } else { b = x }
            (v, fv) = (w, fw);
            (w, fw) = (x, fx);
            (x, fx) = (u, fu);
        } else {
            if u < x { a = u } else { b = u }
            if fu <= fw || w == x {
                (v, fv) = (w, fw);
                (w, fw) = (u, fu);
            } else if fu <= fv || v == x || v == w {
                (v, fv) = (u, fu);
            }
        }
    }
    Ok(x)
}

/// Pairwise objective with `sigma2` profiled out, up to an additive constant.
fn profiled_pl(data: &PairData, beta: f64, lambda: f64) -> (f64, f64) {
    let q = data.q() as f64;
    let mut s = 0.0;
    for k in 0..data.q() {
        let ei = data.y_i[k] - beta * data.x_i[k];
        let el = data.y_l[k] - beta * data.x_l[k];
        s += ei * ei - 2.0 * lambda * ei * el + el * el;
    }
    let one_m = 1.0 - lambda * lambda;
    let sigma2 = s / (2.0 * q * one_m);
    (-q * sigma2.ln() - 0.5 * q * one_m.ln(), sigma2)
}

/// Grid search over `(beta, lambda)` followed by an eight-direction compass
/// search with step halving.
pub fn maximize_pl_brute(data: &PairData) -> Result<Theta> {
    let q = data.q();
    if q < 2 {
        return Err(SgplError::InvalidInput(format!("need at least 2 pairs, got {q}")));
    }
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for k in 0..q {
        sxx += data.x_i[k] * data.x_i[k] + data.x_l[k] * data.x_l[k];
        sxy += data.x_i[k] * data.y_i[k] + data.x_l[k] * data.y_l[k];
    }
    if sxx <= 1e-12 {
        return Err(SgplError::DegenerateRegressor { denominator: sxx });
    }
    let b_ols = sxy / sxx;
    let (_, s2_ols) = profiled_pl(data, b_ols, 0.0);
    if !(s2_ols > 0.0) {
        return Err(SgplError::DegenerateVariance { sigma2: s2_ols });
    }
    let half_width = (10.0 * (s2_ols / sxx).sqrt()).max(1e-6 * b_ols.abs()).max(1e-9);

    let nb = 61;
    let mut best = (f64::NEG_INFINITY, b_ols, 0.0);
    for i in 0..nb {
        let b = b_ols - half_width + 2.0 * half_width * i as f64 / (nb - 1) as f64;
        for j in 0..199 {
            let l = -0.99 + 0.01 * j as f64;
            let (f, _) = profiled_pl(data, b, l);
            if f > best.0 {
                best = (f, b, l);
            }
        }
    }

    let (mut f, mut b, mut l) = best;
    let mut hb = 2.0 * half_width / (nb - 1) as f64;
    let mut hl = 0.01;
    const DIRS: [(f64, f64); 8] =
        [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)];
    while hl > 1e-12 {
        let mut moved = false;
        for (db, dl) in DIRS {
            let nb_ = b + db * hb;
            let nl = l + dl * hl;
            if nl.abs() >= 0.999_999 {
                continue;
            }
            let (nf, _) = profiled_pl(data, nb_, nl);
            if nf > f {
                f = nf;
                b = nb_;
                l = nl;
                moved = true;
                break;
            }
        }
        if !moved {
            hb *= 0.5;
            hl *= 0.5;
        }
    }
    let (_, sigma2) = profiled_pl(data, b, l);
    if !(sigma2 > 0.0) {
        return Err(SgplError::DegenerateVariance { sigma2 });
    }
    Ok(Theta::new(b, sigma2, l))
}
