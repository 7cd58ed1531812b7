//! Small-d analysis of the amalgamated Markov jump process: the full
//! `2^d x 2^d` generator, its stationary law, the spectral gap of the
//! additive symmetrization and the related constants.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{CtbnError, Result};
use crate::model::{CtbnModel, NodeId, State};

/// Largest `d` for which the dense generator is built.
pub const MAX_AMALGAMATE_NODES: usize = 14;

#[derive(Debug, Clone, PartialEq)]
pub struct ChainAnalysis {
    /// Stationary distribution indexed by packed state.
    pub pi: Vec<f64>,
    /// Smallest positive eigenvalue of `-(Q + Q*)/2`.
    pub rho1: f64,
    /// Largest off-diagonal generator entry.
    pub delta: f64,
    /// `L2(pi)` norm of the initial density `nu / pi`.
    pub nu_norm: f64,
    /// `min pi(s, c_{S_w}, 0)` over nodes `w`, own states `s` and parent
    /// configurations `c_{S_w}`, with every non-parent of `w` at 0.
    pub pi_min_support: f64,
    /// `pi_min_support / 2`.
    pub zeta: f64,
}

fn check_size(d: usize) -> Result<()> {
    if d > MAX_AMALGAMATE_NODES {
        return Err(CtbnError::Capacity(format!(
            "dense chain analysis supports d <= {MAX_AMALGAMATE_NODES}, got d = {d}"
        )));
    }
    Ok(())
}

/// Full intensity matrix over all `2^d` states; state index equals the packed bitmask.
pub fn amalgamate(model: &CtbnModel) -> Result<DMatrix<f64>> {
    let d = model.d();
    check_size(d)?;
    let n = 1usize << d;
    let mut q = DMatrix::zeros(n, n);
    for x in 0..n {
        let s = State(x as u64);
        let mut out = 0.0;
        for w in 0..d {
            let r = model.rate(s, w);
            q[(x, s.flipped(w).0 as usize)] = r;
            out += r;
        }
        q[(x, x)] = -out;
    }
    Ok(q)
}

fn reachable_all(q: &DMatrix<f64>, transpose: bool) -> bool {
    let n = q.nrows();
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for j in 0..n {
            let v = if transpose { q[(j, i)] } else { q[(i, j)] };
            if i != j && v > 0.0 && !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.into_iter().all(|b| b)
}

/// Solves `pi Q = 0`, `sum pi = 1` for an irreducible generator.
pub fn stationary(q: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = q.nrows();
    if n == 0 || q.ncols() != n {
        return Err(CtbnError::InvalidInput("generator must be square and non-empty".into()));
    }
    if !(reachable_all(q, false) && reachable_all(q, true)) {
        return Err(CtbnError::NoUniqueStationary);
    }
    let mut a = q.transpose();
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let pi = a.lu().solve(&b).ok_or(CtbnError::NoUniqueStationary)?;
    Ok(pi.iter().map(|v| v.max(0.0)).collect())
}

/// Stationary distribution computed without forming the dense generator,
/// by power iteration on the uniformized chain. Used for stationary starts.
pub fn stationary_sparse(model: &CtbnModel) -> Result<Vec<f64>> {
    let d = model.d();
    check_size(d)?;
    let n = 1usize << d;
    let mut exit = vec![0.0; n];
    let mut rates = vec![0.0; n * d];
    for x in 0..n {
        let s = State(x as u64);
        for w in 0..d {
            let r = model.rate(s, w);
            rates[x * d + w] = r;
            exit[x] += r;
        }
    }
    // strictly larger than the max exit rate keeps the uniformized chain aperiodic
    let unif = 1.1 * exit.iter().cloned().fold(0.0, f64::max);
    let mut p = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..200_000 {
        for x in 0..n {
            next[x] = p[x] * (1.0 - exit[x] / unif);
        }
        for x in 0..n {
            let px = p[x] / unif;
            for w in 0..d {
                next[x ^ (1 << w)] += px * rates[x * d + w];
            }
        }
        let total: f64 = next.iter().sum();
        let mut change = 0.0;
        for x in 0..n {
            let v = next[x] / total;
            change += (v - p[x]).abs();
            p[x] = v;
        }
        if change < 1e-14 {
            break;
        }
    }
    Ok(p)
}

/// Nodes `S_w` whose state the intensities of `w` depend on.
pub(crate) fn support_parents(model: &CtbnModel, w: NodeId) -> Vec<NodeId> {
    match model.beta() {
        Some(b) => (0..model.d())
            .filter(|&u| u != w && (b.coef(w, 0, u) != 0.0 || b.coef(w, 1, u) != 0.0))
            .collect(),
        None => model.parents(w).to_vec(),
    }
}

/// Computes the stationary law and the spectral constants of the amalgamated chain.
/// `nu` defaults to `pi`.
pub fn analyze_chain(model: &CtbnModel, nu: Option<&[f64]>) -> Result<ChainAnalysis> {
    let q = amalgamate(model)?;
    analyze_generator(model, &q, nu)
}

fn analyze_generator(model: &CtbnModel, q: &DMatrix<f64>, nu: Option<&[f64]>) -> Result<ChainAnalysis> {
    let n = q.nrows();
    let pi = stationary(q)?;
    if pi.iter().any(|&p| p <= 0.0) {
        return Err(CtbnError::NoUniqueStationary);
    }

    let mut sym = DMatrix::zeros(n, n);
    let sqrt_pi: Vec<f64> = pi.iter().map(|p| p.sqrt()).collect();
    for i in 0..n {
        for j in 0..n {
            let a = sqrt_pi[i] / sqrt_pi[j] * q[(i, j)];
            let b = sqrt_pi[j] / sqrt_pi[i] * q[(j, i)];
            sym[(i, j)] = -0.5 * (a + b);
        }
    }
    let eig = SymmetricEigen::new(sym).eigenvalues;
    let scale = eig.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let rho1 = eig
        .iter()
        .cloned()
        .filter(|&v| v > 1e-9 * scale)
        .fold(f64::INFINITY, f64::min);
    if !rho1.is_finite() {
        return Err(CtbnError::NoUniqueStationary);
    }

    let mut delta = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                delta = delta.max(q[(i, j)]);
            }
        }
    }

    let nu_norm = match nu {
        None => 1.0,
        Some(nu) => {
            if nu.len() != n {
                return Err(CtbnError::InvalidInput(format!(
                    "initial distribution has {} entries, expected {n}",
                    nu.len()
                )));
            }
            nu.iter().zip(&pi).map(|(v, p)| v * v / p).sum::<f64>().sqrt()
        }
    };

    let mut pi_min = f64::INFINITY;
    for w in 0..model.d() {
        let sw = support_parents(model, w);
        for s in 0..2u64 {
            for k in 0..(1u64 << sw.len()) {
                let mut x = s << w;
                for (i, &u) in sw.iter().enumerate() {
                    x |= ((k >> i) & 1) << u;
                }
                pi_min = pi_min.min(pi[x as usize]);
            }
        }
    }

    Ok(ChainAnalysis {
        pi,
        rho1,
        delta,
        nu_norm,
        pi_min_support: pi_min,
        zeta: pi_min / 2.0,
    })
}
