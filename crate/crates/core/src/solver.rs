//! FISTA with backtracking for the L1-penalized per-triple problem and the
//! warm-started penalty path.
//!
//! Along the path each fit is solved on a working set (active coordinates
//! plus those passing the sequential strong rule), with rows merged by their
//! pattern on that set. The result is then certified against the KKT
//! conditions of the full problem and violators are added until none remain.

use crate::error::{CtbnError, Result};
use crate::objective::{grad, loss, CenteredDesign, CompactDesign, TripleKey, TripleProblem};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub grid_size: usize,
    pub lambda_min_ratio: f64,
    /// Initial Lipschitz estimate for backtracking.
    pub l0: f64,
    /// Backtracking growth factor.
    pub eta: f64,
    pub max_iter: usize,
    /// Relative objective change tolerance; KKT gaps are certified at `10 * tol`.
    pub tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            grid_size: 100,
            lambda_min_ratio: 1e-3,
            l0: 1.0,
            eta: 2.0,
            max_iter: 5000,
            tol: 1e-8,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_size < 2 {
            return Err(CtbnError::param("grid_size", "must be at least 2"));
        }
        if !(self.lambda_min_ratio > 0.0 && self.lambda_min_ratio < 1.0) {
            return Err(CtbnError::param("lambda_min_ratio", "must lie in (0, 1)"));
        }
        if !(self.l0 > 0.0 && self.l0.is_finite()) {
            return Err(CtbnError::param("l0", "must be positive"));
        }
        if !(self.eta > 1.0 && self.eta.is_finite()) {
            return Err(CtbnError::param("eta", "must exceed 1"));
        }
        if !(self.tol > 0.0) {
            return Err(CtbnError::param("tol", "must be positive"));
        }
        if self.max_iter == 0 {
            return Err(CtbnError::param("max_iter", "must be at least 1"));
        }
        Ok(())
    }

    /// Certified KKT bound on the scaled gap reported by [`kkt_gap`].
    pub fn kkt_bound(&self) -> f64 {
        10.0 * self.tol
    }
}

/// Componentwise soft-thresholding.
#[inline]
pub fn soft_threshold(x: f64, thr: f64) -> f64 {
    if x > thr {
        x - thr
    } else if x < -thr {
        x + thr
    } else {
        0.0
    }
}

/// Scaled KKT residual: the maximum of `|g_0|` and, over penalized `j`,
/// `|g_j + lambda sign(theta_j)|` (if `theta_j != 0`) or `(|g_j| - lambda)_+`
/// (if `theta_j = 0`), the latter divided by `max(1, lambda)`.
pub fn kkt_gap(g: &[f64], theta: &[f64], lambda: f64) -> f64 {
    let (a, b) = kkt_parts(g, theta, lambda);
    a.max(b)
}

/// `(intercept residual, scaled penalized residual)`.
fn kkt_parts(g: &[f64], theta: &[f64], lambda: f64) -> (f64, f64) {
    let mut pen = 0.0f64;
    for j in 1..g.len() {
        let r = if theta[j] != 0.0 {
            (g[j] + lambda * theta[j].signum()).abs()
        } else {
            (g[j].abs() - lambda).max(0.0)
        };
        pen = pen.max(r);
    }
    (g[0].abs(), pen / lambda.max(1.0))
}

fn penalized_objective(loss_value: f64, theta: &[f64], lambda: f64) -> f64 {
    loss_value + lambda * theta[1..].iter().map(|v| v.abs()).sum::<f64>()
}

/// Intercept of the empty model: `log(sum n / sum t)`, floored at
/// `log(1 / (T e))` when no jumps were observed.
pub fn empty_intercept(p: &TripleProblem) -> f64 {
    let n = p.total_count();
    if n > 0.0 {
        (n / p.total_time()).ln()
    } else {
        -(p.horizon().ln()) - 1.0
    }
}

/// Smallest penalty at which the empty model (intercept only) is optimal.
pub fn lambda_max(p: &TripleProblem) -> f64 {
    let mut theta = vec![0.0; p.dim()];
    theta[0] = empty_intercept(p);
    grad(p, &theta)[1..].iter().fold(0.0, |m, g| m.max(g.abs()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FistaResult {
    pub theta: Vec<f64>,
    /// Penalized objective at `theta`.
    pub objective: f64,
    pub kkt_gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

struct InnerResult {
    x: Vec<f64>,
    iterations: usize,
    converged: bool,
}

/// Slack in the backtracking test so that roundoff in the loss near the
/// optimum does not inflate the Lipschitz estimate.
const ROUNDOFF: f64 = 1e-12;

/// FISTA on a compact design; coordinate 0 is unpenalized.
///
/// Iterates run in centered coordinates `u` with `theta_0 = u_0 - m . u_{1..}`
/// and `theta_j = u_j`, where `m` holds the exposure-weighted covariate means
/// at the starting point. The penalty only touches `j >= 1`, so the problem is
/// unchanged while the intercept decouples from the covariates. Linear
/// predictors are carried along with the iterates so that the momentum step
/// needs no extra pass over the design.
fn fista_compact(design: &CompactDesign, lambda: f64, x0: &[f64], cfg: &SolverConfig) -> InnerResult {
    let dim = design.dim();
    let goal = 0.5 * cfg.kkt_bound();
    let mut gt = vec![0.0; dim];
    let fx0 = design.loss_grad(x0, &mut gt);
    let (a, b) = kkt_parts(&gt, x0, lambda);
    if fx0.is_finite() && a.max(b) <= goal {
        return InnerResult {
            x: x0.to_vec(),
            iterations: 0,
            converged: true,
        };
    }
    let means = if fx0.is_finite() {
        design.weighted_means(x0)
    } else {
        vec![0.0; dim]
    };
    let cd = CenteredDesign::new(design, &means);
    let rows = cd.rows();
    let n_total = cd.count_total();
    let mut x = vec![0.0; dim];
    cd.from_theta(x0, &mut x);
    let mut eta_x = vec![0.0; rows];
    cd.eta(&x, &mut eta_x);
    let mut ex = vec![0.0; rows];
    let mut obj_x = penalized_objective(cd.loss_at(&eta_x, &mut ex), &x, lambda);

    let mut y = x.clone();
    let mut eta_y = eta_x.clone();
    let mut z = vec![0.0; dim];
    let mut eta_z = vec![0.0; rows];
    let mut gy = vec![0.0; dim];
    let mut th = vec![0.0; dim];
    let mut resid = vec![0.0; rows];
    let mut momentum = 1.0f64;
    let mut lip = cfg.l0;
    let finish = |u: &[f64], iterations: usize, converged: bool| {
        let mut th = vec![0.0; dim];
        cd.to_theta(u, &mut th);
        InnerResult {
            x: th,
            iterations,
            converged,
        }
    };

    for it in 1..=cfg.max_iter {
        let mut fy = cd.loss_at(&eta_y, &mut ex);
        if !fy.is_finite() {
            y.copy_from_slice(&x);
            eta_y.copy_from_slice(&eta_x);
            momentum = 1.0;
            fy = cd.loss_at(&eta_y, &mut ex);
        }
        cd.grad_at(&ex, &mut resid, &mut gy);
        let fz = loop {
            let step = 1.0 / lip;
            z[0] = y[0] - step * gy[0];
            for j in 1..dim {
                z[j] = soft_threshold(y[j] - step * gy[j], lambda * step);
            }
            cd.eta(&z, &mut eta_z);
            let fz = cd.loss_at(&eta_z, &mut ex);
            let mut lin = 0.0;
            let mut sq = 0.0;
            for j in 0..dim {
                let dz = z[j] - y[j];
                lin += gy[j] * dz;
                sq += dz * dz;
            }
            if fz.is_finite() && fz <= fy + lin + 0.5 * lip * sq + ROUNDOFF * (1.0 + fy.abs()) {
                break fz;
            }
            lip *= cfg.eta;
            if !lip.is_finite() {
                return finish(&x, it, false);
            }
        };
        let obj_z = penalized_objective(fz, &z, lambda);
        let plain = momentum == 1.0;
        if obj_z > obj_x && !plain {
            // objective went up: drop the momentum and take a plain proximal step from x
            momentum = 1.0;
            y.copy_from_slice(&x);
            eta_y.copy_from_slice(&eta_x);
            continue;
        }
        let next_momentum = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        let beta = (momentum - 1.0) / next_momentum;
        for j in 0..dim {
            y[j] = z[j] + beta * (z[j] - x[j]);
        }
        for i in 0..rows {
            eta_y[i] = eta_z[i] + beta * (eta_z[i] - eta_x[i]);
        }
        momentum = next_momentum;
        let rel = (obj_x - obj_z).abs() / obj_z.abs().max(1.0);
        x.copy_from_slice(&z);
        eta_x.copy_from_slice(&eta_z);
        obj_x = obj_z;
        if rel < cfg.tol {
            // `ex` holds t e^eta at z = x; first minimize exactly over the intercept
            let exposure: f64 = ex.iter().sum();
            if n_total > 0.0 && exposure > 0.0 {
                let shift = (n_total / exposure).ln();
                x[0] += shift;
                eta_x.iter_mut().for_each(|v| *v += shift);
                obj_x = penalized_objective(cd.loss_at(&eta_x, &mut ex), &x, lambda);
            }
            let mut gu = vec![0.0; dim];
            cd.grad_at(&ex, &mut resid, &mut gu);
            cd.to_theta_grad(&gu, &mut gt);
            cd.to_theta(&x, &mut th);
            let (a, b) = kkt_parts(&gt, &th, lambda);
            if a.max(b) <= goal {
                return finish(&x, it, true);
            }
        }
    }
    finish(&x, cfg.max_iter, false)
}

/// Minimizes `loss(theta) + lambda * sum_{j >= 1} |theta_j|` from `theta0`.
pub fn fista(p: &TripleProblem, lambda: f64, theta0: &[f64], cfg: &SolverConfig) -> Result<FistaResult> {
    cfg.validate()?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(CtbnError::param("lambda", format!("must be finite and >= 0, got {lambda}")));
    }
    if theta0.len() != p.dim() || theta0.iter().any(|v| !v.is_finite()) {
        return Err(CtbnError::InvalidInput("initial point has wrong length or non-finite entries".into()));
    }
    let coords: Vec<usize> = (0..p.dim() - 1).collect();
    let design = CompactDesign::new(p, &coords);
    let inner = fista_compact(&design, lambda, theta0, cfg);
    Ok(finish(p, lambda, inner.x, inner.iterations, inner.converged))
}

fn finish(p: &TripleProblem, lambda: f64, theta: Vec<f64>, iterations: usize, converged: bool) -> FistaResult {
    let l = loss(p, &theta);
    let g = grad(p, &theta);
    FistaResult {
        objective: penalized_objective(l, &theta, lambda),
        kkt_gap: kkt_gap(&g, &theta, lambda),
        theta,
        iterations,
        converged,
    }
}

/// Solutions along a descending, log-spaced penalty grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaPath {
    pub key: TripleKey,
    pub lambdas: Vec<f64>,
    /// Per-penalty coefficient vectors, intercept first.
    pub solutions: Vec<Vec<f64>>,
    /// Penalized objective values.
    pub objectives: Vec<f64>,
    /// Unpenalized loss values.
    pub losses: Vec<f64>,
    pub kkt_gap: Vec<f64>,
    pub iterations: Vec<usize>,
    pub converged: Vec<bool>,
    /// Set when the triple has no observed jumps; every solution is then the
    /// floored empty model and the intercept is excluded from `kkt_gap`.
    pub no_jumps: bool,
}

impl LambdaPath {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// Number of nonzero penalized coefficients at grid point `i`.
    pub fn nnz(&self, i: usize) -> usize {
        self.solutions[i][1..].iter().filter(|v| **v != 0.0).count()
    }
}

/// Smallest top-of-grid penalty, used when no covariate varies.
const LAMBDA_FLOOR: f64 = 1e-12;

pub fn lambda_grid(top: f64, cfg: &SolverConfig) -> Vec<f64> {
    let top = top.max(LAMBDA_FLOOR);
    let n = cfg.grid_size;
    (0..n)
        .map(|i| top * cfg.lambda_min_ratio.powf(i as f64 / (n - 1) as f64))
        .collect()
}

/// Fits the full penalty path with warm starts.
pub fn path(p: &TripleProblem, cfg: &SolverConfig) -> Result<LambdaPath> {
    cfg.validate()?;
    let dim = p.dim();
    let lambdas = lambda_grid(lambda_max(p), cfg);
    let mut out = LambdaPath {
        key: p.key(),
        lambdas: lambdas.clone(),
        solutions: Vec::with_capacity(lambdas.len()),
        objectives: Vec::with_capacity(lambdas.len()),
        losses: Vec::with_capacity(lambdas.len()),
        kkt_gap: Vec::with_capacity(lambdas.len()),
        iterations: Vec::with_capacity(lambdas.len()),
        converged: Vec::with_capacity(lambdas.len()),
        no_jumps: false,
    };

    let mut theta = vec![0.0; dim];
    theta[0] = empty_intercept(p);

    if p.total_count() == 0.0 {
        out.no_jumps = true;
        let l = loss(p, &theta);
        let g = grad(p, &theta);
        for &lam in &lambdas {
            let (_, pen) = kkt_parts(&g, &theta, lam);
            out.solutions.push(theta.clone());
            out.objectives.push(l);
            out.losses.push(l);
            out.kkt_gap.push(pen);
            out.iterations.push(0);
            out.converged.push(true);
        }
        return Ok(out);
    }

    let mut g = grad(p, &theta);
    let mut prev_lambda = lambdas[0];
    for &lam in &lambdas {
        let screen = 2.0 * lam - prev_lambda;
        let mut in_set: Vec<bool> = (1..dim)
            .map(|j| theta[j] != 0.0 || g[j].abs() >= screen)
            .collect();
        let mut iterations = 0;
        let mut converged;
        loop {
            let coords: Vec<usize> = (0..dim - 1).filter(|&k| in_set[k]).collect();
            let design = CompactDesign::new(p, &coords);
            let mut x0 = Vec::with_capacity(coords.len() + 1);
            x0.push(theta[0]);
            x0.extend(coords.iter().map(|&k| theta[k + 1]));
            let inner = fista_compact(&design, lam, &x0, cfg);
            iterations += inner.iterations;
            converged = inner.converged;
            theta.iter_mut().for_each(|v| *v = 0.0);
            theta[0] = inner.x[0];
            for (i, &k) in coords.iter().enumerate() {
                theta[k + 1] = inner.x[i + 1];
            }
            g = grad(p, &theta);
            let mut added = false;
            for k in 0..dim - 1 {
                if !in_set[k] && g[k + 1].abs() - lam > cfg.tol * lam.max(1.0) {
                    in_set[k] = true;
                    added = true;
                }
            }
            if !added {
                break;
            }
        }
        let l = loss(p, &theta);
        out.solutions.push(theta.clone());
        out.objectives.push(penalized_objective(l, &theta, lam));
        out.losses.push(l);
        out.kkt_gap.push(kkt_gap(&g, &theta, lam));
        out.iterations.push(iterations);
        out.converged.push(converged);
        prev_lambda = lam;
    }
    Ok(out)
}
