//! Computable constants of the consistency theory and empirical checks of
//! the martingale and Hessian sandwich identities behind it.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::chain::{support_parents, ChainAnalysis, MAX_AMALGAMATE_NODES};
use crate::error::{CtbnError, Result};
use crate::model::{coordinate_node, expand_mask, BetaMatrix, CtbnModel, State};
use crate::objective::{grad, hess_quad, TripleKey, TripleProblem};
use crate::seed;
use crate::stats::SuffStats;

/// `sum over nonzero penalized beta_j of exp(-beta_j)`.
pub fn a_beta(beta: &BetaMatrix) -> Result<f64> {
    let support = beta.support();
    if support.is_empty() {
        return Err(CtbnError::UndefinedBound(
            "A_beta needs at least one nonzero penalized coefficient".into(),
        ));
    }
    Ok(support.iter().map(|&(_, _, _, v)| (-v).exp()).sum())
}

/// `K = 2 (2 + e^2) d (d - 1)`.
pub fn k_constant(d: usize) -> f64 {
    2.0 * (2.0 + std::f64::consts::E.powi(2)) * (d * (d - 1)) as f64
}

fn check_xi(xi: f64) -> Result<()> {
    if !(xi.is_finite() && xi > 1.0) {
        return Err(CtbnError::param("xi", format!("must be finite and > 1, got {xi}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CifReport {
    pub xi: f64,
    #[serde(rename = "A_beta")]
    pub a_beta: f64,
    /// `1 / (xi A_beta)`, a lower bound on the cone invertibility factor `F(xi)`.
    #[serde(rename = "F_lower")]
    pub f_lower: f64,
    pub beta_min: f64,
    #[serde(rename = "S_size")]
    pub s_size: usize,
    #[serde(rename = "max_Sw")]
    pub max_sw: usize,
}

pub fn cif_report(model: &CtbnModel, xi: f64) -> Result<CifReport> {
    check_xi(xi)?;
    let beta = model_beta(model)?;
    let a = a_beta(beta)?;
    let support = beta.support();
    let beta_min = support.iter().map(|s| s.3.abs()).fold(f64::INFINITY, f64::min);
    let max_sw = (0..model.d())
        .map(|w| support_parents(model, w).len())
        .max()
        .unwrap_or(0);
    Ok(CifReport {
        xi,
        a_beta: a,
        f_lower: 1.0 / (xi * a),
        beta_min,
        s_size: support.len(),
        max_sw,
    })
}

fn model_beta(model: &CtbnModel) -> Result<&BetaMatrix> {
    model
        .beta()
        .ok_or_else(|| CtbnError::Unsupported("the model carries no log-linear coefficients".into()))
}

/// `(xi + 1) / (xi - 1)`.
pub fn cone_factor(xi: f64) -> f64 {
    (xi + 1.0) / (xi - 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremBounds {
    pub epsilon: f64,
    pub xi: f64,
    #[serde(rename = "K")]
    pub k: f64,
    /// Horizon at which the penalty window and radius are evaluated.
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "T_min")]
    pub t_min: f64,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    /// Estimation radius evaluated at `lambda_lo`.
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "A_beta")]
    pub a_beta: f64,
    #[serde(rename = "F_lower")]
    pub f_lower: f64,
    pub zeta: f64,
    pub rho1: f64,
    pub delta: f64,
    /// Set when the assumptions cannot all hold: an empty penalty window,
    /// `T delta < 2`, or `T` not above `T_min`.
    pub vacuous: bool,
}

/// Evaluates the time bound, the admissible penalty window and the
/// estimation radius for the true model, with the cone invertibility factor
/// replaced by its `1 / (xi A_beta)` lower bound. `horizon` defaults to `T_min`.
pub fn theorem_bounds(
    model: &CtbnModel,
    analysis: &ChainAnalysis,
    xi: f64,
    epsilon: f64,
    horizon: Option<f64>,
) -> Result<TheoremBounds> {
    check_xi(xi)?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(CtbnError::param("epsilon", format!("must lie in (0, 1), got {epsilon}")));
    }
    let d = model.d();
    if d > MAX_AMALGAMATE_NODES {
        return Err(CtbnError::Unsupported(format!(
            "theory bounds need the stationary law, available for d <= {MAX_AMALGAMATE_NODES}"
        )));
    }
    let cif = cif_report(model, xi)?;
    let pi_min = analysis.pi_min_support;
    let numer = 36.0
        * ((cif.max_sw as f64 + 1.0) * std::f64::consts::LN_2
            + (d as f64 * analysis.nu_norm / epsilon).ln());
    let t_min = numer / (pi_min * pi_min * analysis.rho1);
    let horizon = horizon.unwrap_or(t_min);
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(CtbnError::param("T", format!("must be positive and finite, got {horizon}")));
    }
    let k = k_constant(d);
    let lambda_lo = 2.0 * cone_factor(xi) * (k / epsilon).ln() * (analysis.delta / horizon).sqrt();
    let e = std::f64::consts::E;
    let lambda_hi = 2.0 * analysis.zeta * cif.f_lower / (e * (xi + 1.0) * cif.s_size as f64);
    let r = 2.0 * e * xi * lambda_lo / ((xi + 1.0) * analysis.zeta * cif.f_lower);
    let vacuous = lambda_lo > lambda_hi || horizon * analysis.delta < 2.0 || horizon < t_min;
    Ok(TheoremBounds {
        epsilon,
        xi,
        k,
        horizon,
        t_min,
        lambda_lo,
        lambda_hi,
        r,
        a_beta: cif.a_beta,
        f_lower: cif.f_lower,
        zeta: analysis.zeta,
        rho1: analysis.rho1,
        delta: analysis.delta,
        vacuous,
    })
}

/// `M(T) = sum over c with z_k(c) = 1 of [n_w(c; s, 1-s) - t_w(c; s) Q_w(c; s, 1-s)]`.
/// Coordinate `k = 0` is the intercept (every configuration).
pub fn martingale_residual_stats(stats: &SuffStats, model: &CtbnModel, key: TripleKey, k: usize) -> Result<f64> {
    let d = model.d();
    if stats.d() != d || key.w >= d || k >= d {
        return Err(CtbnError::InvalidInput("node, coordinate or dimension out of range".into()));
    }
    let w = key.w;
    let s = key.s;
    let selected = |c: u64| k == 0 || (c >> (k - 1)) & 1 == 1;
    let rate = |c: u64| model.rate_from(State(expand_mask(c, w, s)), w, s);
    let mut m = 0.0;
    for (&c, &n) in stats.counts(w, s) {
        if selected(c) {
            m += n as f64;
        }
    }
    for (&c, &t) in stats.times(w, s) {
        if selected(c) {
            m -= t * rate(c);
        }
    }
    Ok(m)
}

pub fn martingale_residual(
    traj: &crate::simulate::Trajectory,
    model: &CtbnModel,
    key: TripleKey,
    k: usize,
) -> Result<f64> {
    martingale_residual_stats(&crate::stats::extract(traj), model, key, k)
}

/// `(c_b^-1 hess, b' [grad(beta + b) - grad(beta)], c_b hess)` with
/// `c_b = max over rows of exp(|b' z|)`.
pub fn sandwich_terms(p: &TripleProblem, beta: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let shifted: Vec<f64> = beta.iter().zip(b).map(|(x, y)| x + y).collect();
    let g1 = grad(p, &shifted);
    let g0 = grad(p, beta);
    let mid: f64 = b.iter().zip(g1.iter().zip(&g0)).map(|(bj, (a, c))| bj * (a - c)).sum();
    let cb = p
        .rows()
        .iter()
        .filter(|r| r.t > 0.0)
        .map(|r| r.eta(b).abs())
        .fold(0.0f64, f64::max)
        .exp();
    let h = hess_quad(p, beta, b);
    (h / cb, mid, h * cb)
}

pub const SANDWICH_SLACK: f64 = 1e-10;

pub fn sandwich_check(p: &TripleProblem, beta: &[f64], b: &[f64]) -> bool {
    let (lo, mid, hi) = sandwich_terms(p, beta, b);
    let slack = SANDWICH_SLACK * (1.0 + mid.abs());
    lo <= mid + slack && mid <= hi + slack
}

/// The cone-invertibility ratio for a direction `theta` (intercepts ignored),
/// summing over each node's support configurations with the rest at 0.
pub fn cif_ratio(model: &CtbnModel, theta: &BetaMatrix) -> Result<f64> {
    let beta = model_beta(model)?;
    let d = model.d();
    if theta.d() != d {
        return Err(CtbnError::InvalidInput("direction has the wrong dimension".into()));
    }
    let mut s_norm = 0.0;
    let mut sup = 0.0f64;
    for w in 0..d {
        for s in 0..2u8 {
            for k in 0..d - 1 {
                let v = theta.row(w, s)[k + 1];
                sup = sup.max(v.abs());
                if beta.row(w, s)[k + 1] != 0.0 {
                    s_norm += v.abs();
                }
            }
        }
    }
    if s_norm == 0.0 {
        return Ok(f64::INFINITY);
    }
    let mut num = 0.0;
    for w in 0..d {
        let sw = support_parents(model, w);
        for s in 0..2u8 {
            let (brow, trow) = (beta.row(w, s), theta.row(w, s));
            for cfg in 0..(1u64 << sw.len()) {
                let mut eb = 0.0;
                let mut et = 0.0;
                for (i, &u) in sw.iter().enumerate() {
                    if (cfg >> i) & 1 == 1 {
                        let k = crate::model::node_coordinate(w, u);
                        eb += brow[k + 1];
                        et += trow[k + 1];
                    }
                }
                num += eb.exp() * et * et;
            }
        }
    }
    Ok(num / (s_norm * sup))
}

/// Smallest ratio over random directions of the cone
/// `|theta_{S^c}|_1 <= xi |theta_S|_1`. Any value is an upper estimate of
/// `F(xi)`; no accuracy is claimed.
pub fn cif_diagnostic(model: &CtbnModel, xi: f64, n_samples: usize, rng_seed: u64) -> Result<f64> {
    check_xi(xi)?;
    let beta = model_beta(model)?;
    let d = model.d();
    let support = beta.support();
    if support.is_empty() {
        return Err(CtbnError::UndefinedBound("empty support".into()));
    }
    let mut rng = seed::rng(rng_seed);
    let mut best = f64::INFINITY;
    for _ in 0..n_samples {
        let theta = sample_cone_direction(beta, xi, &mut rng, d);
        best = best.min(cif_ratio(model, &theta)?);
    }
    Ok(best)
}

pub(crate) fn sample_cone_direction<R: Rng>(beta: &BetaMatrix, xi: f64, rng: &mut R, d: usize) -> BetaMatrix {
    let mut theta = BetaMatrix::zeros(d);
    let sparse_on_s = rng.gen_bool(0.3);
    let support = beta.support();
    let pick = rng.gen_range(0..support.len());
    let mut s_norm = 0.0;
    let mut off = Vec::new();
    for w in 0..d {
        for s in 0..2u8 {
            for k in 0..d - 1 {
                let u = coordinate_node(w, k);
                let on_s = beta.coef(w, s, u) != 0.0;
                let g: f64 = StandardNormal.sample(rng);
                if on_s {
                    let keep = !sparse_on_s || support[pick].0 == w && support[pick].1 == s && support[pick].2 == u;
                    if keep {
                        theta.row_mut(w, s)[k + 1] = g;
                        s_norm += g.abs();
                    }
                } else {
                    off.push((w, s, k, g));
                }
            }
        }
    }
    let off_norm: f64 = off.iter().map(|x| x.3.abs()).sum();
    if off_norm > 0.0 {
        let budget = rng.gen::<f64>().powi(2) * xi * s_norm;
        for (w, s, k, g) in off {
            theta.row_mut(w, s)[k + 1] = g / off_norm * budget;
        }
    }
    theta
}

/// Outcome of the thresholding corollary on one realized estimate: `None`
/// when its premise `|beta_hat - beta|_inf <= delta < beta_min / 2` fails,
/// otherwise whether thresholding at `delta` recovered the support exactly.
pub fn corollary2_check(beta_hat: &BetaMatrix, beta: &BetaMatrix, delta: f64) -> Option<bool> {
    let d = beta.d();
    let mut err = 0.0f64;
    let mut beta_min = f64::INFINITY;
    for w in 0..d {
        for s in 0..2u8 {
            let (h, t) = (beta_hat.row(w, s), beta.row(w, s));
            for j in 1..d {
                err = err.max((h[j] - t[j]).abs());
                if t[j] != 0.0 {
                    beta_min = beta_min.min(t[j].abs());
                }
            }
        }
    }
    if !(err <= delta && delta < beta_min / 2.0) {
        return None;
    }
    let exact = (0..d).all(|w| {
        (0..2u8).all(|s| {
            let (h, t) = (beta_hat.row(w, s), beta.row(w, s));
            (1..d).all(|j| (h[j].abs() > delta) == (t[j] != 0.0))
        })
    });
    Some(exact)
}

/// Theory report written by the command-line tool.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryReport {
    #[serde(rename = "A_beta")]
    pub a_beta: f64,
    #[serde(rename = "F_lower")]
    pub f_lower: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "T_min")]
    pub t_min: f64,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub zeta: f64,
    pub rho1: f64,
    pub vacuous: bool,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub xi: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub beta_min: f64,
}

pub fn theory_report(model: &CtbnModel, analysis: &ChainAnalysis, xi: f64, epsilon: f64, horizon: Option<f64>) -> Result<TheoryReport> {
    let b = theorem_bounds(model, analysis, xi, epsilon, horizon)?;
    let cif = cif_report(model, xi)?;
    Ok(TheoryReport {
        a_beta: b.a_beta,
        f_lower: b.f_lower,
        k: b.k,
        t_min: b.t_min,
        lambda_lo: b.lambda_lo,
        lambda_hi: b.lambda_hi,
        r: b.r,
        zeta: b.zeta,
        rho1: b.rho1,
        vacuous: b.vacuous,
        horizon: b.horizon,
        xi,
        epsilon,
        delta: b.delta,
        beta_min: cif.beta_min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::analyze_chain;
    use crate::model::{make_m1, Config, dummy_encode};
    use crate::objective::{build_triple, Row};
    use crate::simulate::{sample_path, StartSpec};
    use crate::stats::extract;
    use proptest::prelude::*;
    use rand::Rng;

    fn single(d: usize, v: &[(usize, u8, usize, f64)]) -> BetaMatrix {
        let mut b = BetaMatrix::zeros(d);
        for &(w, s, u, x) in v {
            let k = crate::model::node_coordinate(w, u);
            b.row_mut(w, s)[k + 1] = x;
        }
        b
    }

    #[test]
    fn a_beta_fixtures() {
        let ln2 = 2f64.ln();
        let a = a_beta(&single(3, &[(0, 0, 1, ln2)])).unwrap();
        assert!((a - 0.5).abs() < 1e-12);
        assert!((1.0 / (2.0 * a) - 1.0).abs() < 1e-12);
        let a = a_beta(&single(3, &[(0, 0, 1, ln2), (2, 1, 0, -ln2)])).unwrap();
        assert!((a - 2.5).abs() < 1e-12);
        // intercepts do not count
        let mut b = BetaMatrix::zeros(3);
        b.row_mut(0, 0)[0] = 1.0;
        assert!(matches!(a_beta(&b), Err(CtbnError::UndefinedBound(_))));
    }

    #[test]
    fn k_constant_exact() {
        let e2 = std::f64::consts::E.powi(2);
        assert_eq!(k_constant(20), 2.0 * (2.0 + e2) * 380.0);
        assert!((k_constant(20) - 760.0 * (2.0 + e2)).abs() < 1e-9);
    }

    #[test]
    fn cone_factor_decreasing() {
        let mut prev = f64::INFINITY;
        for i in 1..200 {
            let xi = 1.0 + i as f64 * 0.05;
            let f = cone_factor(xi);
            assert!(f < prev);
            prev = f;
        }
    }

    #[test]
    fn bounds_on_m1_and_epsilon_monotone() {
        let m = make_m1(3, 4).unwrap();
        let a = analyze_chain(&m, None).unwrap();
        let mut prev = 0.0;
        for eps in [0.5, 0.1, 1e-2, 1e-4, 1e-8] {
            let b = theorem_bounds(&m, &a, 2.0, eps, None).unwrap();
            assert!(b.t_min.is_finite() && b.t_min > prev);
            assert!(b.lambda_lo.is_finite() && b.lambda_hi.is_finite() && b.r.is_finite());
            assert!((b.f_lower * 2.0 * b.a_beta - 1.0).abs() < 1e-12);
            prev = b.t_min;
        }
        assert!(theorem_bounds(&m, &a, 1.0, 0.1, None).is_err());
        assert!(theorem_bounds(&m, &a, 2.0, 1.0, None).is_err());
    }

    #[test]
    fn independent_pair_min_pi_is_quarter() {
        // constant-rate pair with a zero-valued parent coefficient supplied
        let m = CtbnModel::new(
            2,
            vec![vec![1], vec![]],
            vec![vec![[2.0, 2.0], [2.0, 4.0]], vec![[3.0, 3.0]]],
            None,
            None,
        )
        .unwrap();
        let a = analyze_chain(&m, None).unwrap();
        assert!(a.pi_min_support > 0.0);
        // without beta the bound is unsupported
        assert!(matches!(theorem_bounds(&m, &a, 2.0, 0.1, None), Err(CtbnError::Unsupported(_))));

        let ln2 = 2f64.ln();
        let beta = BetaMatrix::from_rows(
            2,
            &[[vec![ln2, 0.0], vec![ln2, ln2]], [vec![3f64.ln(), 0.0], vec![3f64.ln(), 0.0]]],
        )
        .unwrap();
        let m = CtbnModel::new(
            2,
            vec![vec![1], vec![]],
            vec![vec![[2.0, 2.0], [2.0, 4.0]], vec![[3.0, 3.0]]],
            Some(beta),
            None,
        )
        .unwrap();
        let a = analyze_chain(&m, None).unwrap();
        let b = theorem_bounds(&m, &a, 2.0, 0.1, Some(100.0)).unwrap();
        assert!(b.t_min.is_finite());
        assert_eq!(b.horizon, 100.0);

        // symmetric independent pair: every state has mass 1/4
        let beta = BetaMatrix::from_rows(2, &[[vec![0.0, 0.0], vec![0.0, 0.0]], [vec![0.0, 0.0], vec![0.0, 0.0]]]).unwrap();
        let sym = CtbnModel::new(2, vec![vec![], vec![]], vec![vec![[1.0, 1.0]], vec![[1.0, 1.0]]], Some(beta), None).unwrap();
        let a = analyze_chain(&sym, None).unwrap();
        assert!((a.pi_min_support - 0.25).abs() < 1e-12);
    }

    #[test]
    fn martingale_gradient_identity() {
        let m = make_m1(3, 11).unwrap();
        let beta = m.beta().unwrap().clone();
        let tr = sample_path(&m, &StartSpec::Stationary, 30.0, 3).unwrap();
        let st = extract(&tr);
        for key in TripleKey::all(3) {
            let p = build_triple(&st, key).unwrap();
            let g = grad(&p, beta.row(key.w, key.s));
            for k in 0..3 {
                let mres = martingale_residual_stats(&st, &m, key, k).unwrap();
                assert!((30.0 * g[k] + mres).abs() < 1e-9 * (1.0 + mres.abs()), "{key:?} {k}");
            }
        }
    }

    #[test]
    fn martingale_jump_free_is_zero() {
        let m = make_m1(2, 1).unwrap();
        let tr = crate::simulate::Trajectory::new(2, 1.0, State(0), vec![]).unwrap();
        // from the all-zero state node 1 never sees coordinate 1 switched on
        assert_eq!(martingale_residual(&tr, &m, TripleKey { w: 1, s: 0 }, 1).unwrap(), 0.0);
    }

    #[test]
    fn sandwich_zero_direction() {
        let rows = vec![Row { mask: 0, n: 1.0, t: 1.0 }, Row { mask: 1, n: 2.0, t: 1.0 }];
        let p = TripleProblem::new(TripleKey { w: 0, s: 0 }, 2, 2.0, rows).unwrap();
        assert!(sandwich_check(&p, &[0.1, 0.2], &[0.0, 0.0]));
        assert_eq!(sandwich_terms(&p, &[0.1, 0.2], &[0.0, 0.0]), (0.0, 0.0, 0.0));
    }

    #[test]
    fn cif_ratio_respects_lower_bound() {
        for seed in 0..5 {
            let m = make_m1(4, seed).unwrap();
            for xi in [1.5, 2.0, 4.0] {
                let rep = cif_report(&m, xi).unwrap();
                let diag = cif_diagnostic(&m, xi, 300, seed).unwrap();
                assert!(diag >= rep.f_lower * (1.0 - 1e-12), "{diag} < {}", rep.f_lower);
            }
        }
    }

    #[test]
    fn corollary_premise_and_recovery() {
        let t = single(3, &[(0, 0, 1, 1.0)]);
        let h = single(3, &[(0, 0, 1, 0.9), (1, 1, 2, 0.05)]);
        assert_eq!(corollary2_check(&h, &t, 0.2), Some(true));
        assert_eq!(corollary2_check(&h, &t, 0.6), None);
        assert_eq!(corollary2_check(&h, &t, 0.01), None);
    }

    #[test]
    fn dummy_encoding_matches_row_masks() {
        let z = dummy_encode(3, 1, &Config::restricted(1, vec![1, 0]).unwrap()).unwrap();
        let row = Row { mask: 0b01, n: 0.0, t: 1.0 };
        let zf: Vec<u8> = row.z(3).iter().map(|v| *v as u8).collect();
        assert_eq!(z, zf);
    }

    proptest! {
        #[test]
        fn a_beta_permutation_invariant(vals in prop::collection::vec(-2.0f64..2.0, 4), perm in Just(vec![0usize, 1, 2, 3]).prop_shuffle()) {
            let entries = [(0usize, 0u8, 1usize), (1, 1, 3), (2, 0, 0), (3, 1, 2)];
            let v: Vec<_> = entries.iter().zip(&vals).filter(|(_, x)| **x != 0.0).map(|(&(w, s, u), &x)| (w, s, u, x)).collect();
            prop_assume!(!v.is_empty());
            let b = single(4, &v);
            let pv: Vec<_> = v.iter().map(|&(w, s, u, x)| (perm[w], s, perm[u], x)).collect();
            let pb = single(4, &pv);
            prop_assert!((a_beta(&b).unwrap() - a_beta(&pb).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn sandwich_holds(seed in 0u64..1000, scale in 0.01f64..5.0) {
            let m = make_m1(3, seed).unwrap();
            let tr = sample_path(&m, &StartSpec::Stationary, 20.0, seed).unwrap();
            let st = extract(&tr);
            let key = TripleKey { w: (seed % 3) as usize, s: (seed % 2) as u8 };
            if let Ok(p) = build_triple(&st, key) {
                let mut rng = seed::rng(seed);
                let beta: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let b: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0) * scale).collect();
                prop_assert!(sandwich_check(&p, &beta, &b));
            }
        }
    }
}
