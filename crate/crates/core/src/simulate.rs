//! Exact trajectory sampling by competing exponential clocks.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rayon::prelude::*;

use crate::chain::{stationary_sparse, MAX_AMALGAMATE_NODES};
use crate::error::{CtbnError, Result};
use crate::model::{CtbnModel, NodeId, State, MAX_NODES};
use crate::seed;

/// Burn-in horizon discarded before recording when a stationary start is
/// requested and the stationary law cannot be computed exactly.
pub const BURN_IN: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub time: f64,
    pub node: NodeId,
}

/// Piecewise-constant path on `[0, horizon]`: an initial state plus timed
/// single-node flips in strictly increasing time order inside `(0, horizon)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    d: usize,
    horizon: f64,
    initial: State,
    jumps: Vec<Jump>,
}

impl Trajectory {
    pub fn new(d: usize, horizon: f64, initial: State, jumps: Vec<Jump>) -> Result<Self> {
        if !(2..=MAX_NODES).contains(&d) {
            return Err(CtbnError::InvalidInput(format!("d must lie in [2, {MAX_NODES}], got {d}")));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(CtbnError::InvalidInput(format!("horizon must be positive and finite, got {horizon}")));
        }
        if d < 64 && initial.0 >> d != 0 {
            return Err(CtbnError::InvalidInput("initial state has bits beyond d".into()));
        }
        let mut prev = 0.0;
        for (i, j) in jumps.iter().enumerate() {
            if j.node >= d {
                return Err(CtbnError::InvalidInput(format!("jump {i} flips node {} >= d", j.node)));
            }
            if !(j.time.is_finite() && j.time > prev && j.time < horizon) {
                return Err(CtbnError::InvalidInput(format!(
                    "jump {i} at time {} is not strictly inside ({prev}, {horizon})",
                    j.time
                )));
            }
            prev = j.time;
        }
        Ok(Trajectory {
            d,
            horizon,
            initial,
            jumps,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn initial(&self) -> State {
        self.initial
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    /// Constant segments as `(start, end, state)`; they partition `[0, horizon]`.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, State)> + '_ {
        let mut x = self.initial;
        let mut t = 0.0;
        let mut i = 0;
        std::iter::from_fn(move || {
            if i > self.jumps.len() {
                return None;
            }
            let seg = if i < self.jumps.len() {
                let j = self.jumps[i];
                let seg = (t, j.time, x);
                x = x.flipped(j.node);
                t = j.time;
                seg
            } else {
                (t, self.horizon, x)
            };
            i += 1;
            Some(seg)
        })
    }

    /// State at time `t` (right-continuous).
    pub fn state_at(&self, t: f64) -> State {
        let mut x = self.initial;
        for j in self.jumps.iter().take_while(|j| j.time <= t) {
            x = x.flipped(j.node);
        }
        x
    }

    /// Splits at an interior time into `[0, tau]` and `[tau, horizon]`, the
    /// latter shifted to start at 0.
    pub fn split(&self, tau: f64) -> Result<(Trajectory, Trajectory)> {
        if !(tau > 0.0 && tau < self.horizon) {
            return Err(CtbnError::InvalidInput(format!("split time {tau} outside (0, {})", self.horizon)));
        }
        let head: Vec<Jump> = self.jumps.iter().copied().filter(|j| j.time < tau).collect();
        let tail: Vec<Jump> = self
            .jumps
            .iter()
            .filter(|j| j.time > tau)
            .map(|j| Jump {
                time: j.time - tau,
                node: j.node,
            })
            .collect();
        let mid = self.state_at(tau);
        if self.jumps.iter().any(|j| j.time == tau) {
            return Err(CtbnError::InvalidInput("split time coincides with a jump".into()));
        }
        Ok((
            Trajectory::new(self.d, tau, self.initial, head)?,
            Trajectory::new(self.d, self.horizon - tau, mid, tail)?,
        ))
    }
}

/// Initial-state rule for simulation.
#[derive(Debug, Clone, PartialEq)]
pub enum StartSpec {
    /// Draw from the stationary law: exactly when `d <= 14`, otherwise by
    /// running the chain for [`BURN_IN`] time units from the all-zero state.
    Stationary,
    Fixed(State),
}

/// Samples paths from one model, caching the stationary law when needed.
pub struct PathSampler<'a> {
    model: &'a CtbnModel,
    start: StartSpec,
    pi: Option<WeightedIndex<f64>>,
}

impl<'a> PathSampler<'a> {
    pub fn new(model: &'a CtbnModel, start: StartSpec) -> Result<Self> {
        if let StartSpec::Fixed(x) = &start {
            if model.d() < 64 && x.0 >> model.d() != 0 {
                return Err(CtbnError::InvalidConfig("start state has bits beyond d".into()));
            }
        }
        let pi = match start {
            StartSpec::Stationary if model.d() <= MAX_AMALGAMATE_NODES => {
                let pi = stationary_sparse(model)?;
                Some(WeightedIndex::new(pi).map_err(|e| CtbnError::InvalidModel(e.to_string()))?)
            }
            _ => None,
        };
        Ok(PathSampler { model, start, pi })
    }

    pub fn sample(&self, horizon: f64, rng_seed: u64) -> Result<Trajectory> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(CtbnError::param("T", format!("must be positive and finite, got {horizon}")));
        }
        let mut rng = seed::rng(rng_seed);
        let initial = match (&self.start, &self.pi) {
            (StartSpec::Fixed(x), _) => *x,
            (StartSpec::Stationary, Some(pi)) => State(pi.sample(&mut rng) as u64),
            (StartSpec::Stationary, None) => {
                let burn = run(self.model, State(0), BURN_IN, &mut rng);
                burn.iter().fold(State(0), |x, j| x.flipped(j.node))
            }
        };
        let jumps = run(self.model, initial, horizon, &mut rng);
        Trajectory::new(self.model.d(), horizon, initial, jumps)
    }
}

fn run<R: Rng>(model: &CtbnModel, start: State, horizon: f64, rng: &mut R) -> Vec<Jump> {
    let d = model.d();
    let mut x = start;
    let mut rates: Vec<f64> = (0..d).map(|w| model.rate(x, w)).collect();
    let mut jumps = Vec::new();
    let mut t = 0.0;
    loop {
        let total: f64 = rates.iter().sum();
        t += -seed::open_unit(rng).ln() / total;
        if t >= horizon {
            break;
        }
        let target = seed::open_unit(rng) * total;
        let mut acc = 0.0;
        let mut node = d - 1;
        for (w, &r) in rates.iter().enumerate() {
            acc += r;
            if target < acc {
                node = w;
                break;
            }
        }
        x = x.flipped(node);
        rates[node] = model.rate(x, node);
        for &c in model.children(node) {
            rates[c] = model.rate(x, c);
        }
        jumps.push(Jump { time: t, node });
    }
    jumps
}

/// One exact sample path on `[0, horizon]`.
pub fn sample_path(model: &CtbnModel, start: &StartSpec, horizon: f64, rng_seed: u64) -> Result<Trajectory> {
    PathSampler::new(model, start.clone())?.sample(horizon, rng_seed)
}

/// `n_reps` independent paths; replicate `i` uses sub-seed `derive(seed, i)`.
/// Output order follows the replicate index.
pub fn replicate(
    model: &CtbnModel,
    start: &StartSpec,
    horizon: f64,
    n_reps: usize,
    rng_seed: u64,
) -> Result<Vec<Trajectory>> {
    if n_reps == 0 {
        return Err(CtbnError::param("reps", "must be at least 1"));
    }
    let sampler = PathSampler::new(model, start.clone())?;
    (0..n_reps)
        .into_par_iter()
        .map(|i| sampler.sample(horizon, seed::derive(rng_seed, i as u64)))
        .collect()
}
