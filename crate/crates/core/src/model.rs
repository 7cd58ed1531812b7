//! Binary CTBN domain types: states, conditional intensity tables, the
//! log-linear coefficient matrix and edge sets, plus the two benchmark
//! generators.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::Rng;

use crate::error::{CtbnError, Result};
use crate::seed;

/// Index of a node in `[0, d)`.
pub type NodeId = usize;

/// Largest supported node count; states are packed into a `u64`.
pub const MAX_NODES: usize = 64;

/// Full configuration packed as a bitmask: bit `w` holds the state of node `w`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct State(pub u64);

impl State {
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        if bits.len() > MAX_NODES {
            return Err(CtbnError::InvalidConfig(format!(
                "{} nodes exceed the {MAX_NODES}-node limit",
                bits.len()
            )));
        }
        let mut x = 0u64;
        for (i, &b) in bits.iter().enumerate() {
            match b {
                0 => {}
                1 => x |= 1 << i,
                other => {
                    return Err(CtbnError::InvalidConfig(format!(
                        "entry {i} is {other}, expected 0 or 1"
                    )))
                }
            }
        }
        Ok(State(x))
    }

    pub fn to_bits(self, d: usize) -> Vec<u8> {
        (0..d).map(|w| self.get(w)).collect()
    }

    #[inline]
    pub fn get(self, w: NodeId) -> u8 {
        ((self.0 >> w) & 1) as u8
    }

    #[inline]
    pub fn flipped(self, w: NodeId) -> State {
        State(self.0 ^ (1 << w))
    }

    /// Configuration of the nodes other than `w`, packed over ascending `-w` order.
    #[inline]
    pub fn restrict(self, w: NodeId) -> u64 {
        restrict_mask(self.0, w)
    }
}

/// Drops bit `w` from `x`, shifting higher bits down by one.
#[inline]
pub fn restrict_mask(x: u64, w: NodeId) -> u64 {
    let low = x & ((1u64 << w) - 1);
    let high = if w + 1 >= 64 { 0 } else { (x >> (w + 1)) << w };
    low | high
}

/// Inverse of [`restrict_mask`]: inserts state `s` for node `w` into a restricted mask.
#[inline]
pub fn expand_mask(c: u64, w: NodeId, s: u8) -> u64 {
    let low = c & ((1u64 << w) - 1);
    let high = if w >= 63 { 0 } else { (c >> w) << (w + 1) };
    low | high | ((s as u64) << w)
}

/// Node addressed by penalized coordinate `k` (0-based over `-w`).
#[inline]
pub fn coordinate_node(w: NodeId, k: usize) -> NodeId {
    if k < w {
        k
    } else {
        k + 1
    }
}

/// Penalized coordinate (0-based over `-w`) of node `u`.
#[inline]
pub fn node_coordinate(w: NodeId, u: NodeId) -> usize {
    debug_assert_ne!(u, w);
    if u < w {
        u
    } else {
        u - 1
    }
}

/// A binary configuration vector. Full configurations cover all `d` nodes;
/// restricted ones cover the `d - 1` nodes other than `excluded`, in
/// ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    bits: Vec<u8>,
    excluded: Option<NodeId>,
}

impl Config {
    pub fn full(bits: Vec<u8>) -> Result<Self> {
        check_binary(&bits)?;
        Ok(Config {
            bits,
            excluded: None,
        })
    }

    pub fn restricted(excluded: NodeId, bits: Vec<u8>) -> Result<Self> {
        check_binary(&bits)?;
        Ok(Config {
            bits,
            excluded: Some(excluded),
        })
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn excluded(&self) -> Option<NodeId> {
        self.excluded
    }
}

fn check_binary(bits: &[u8]) -> Result<()> {
    match bits.iter().position(|&b| b > 1) {
        Some(i) => Err(CtbnError::InvalidConfig(format!(
            "entry {i} is {}, expected 0 or 1",
            bits[i]
        ))),
        None => Ok(()),
    }
}

/// Covariate vector `[1, c_1, ..., c_{d-1}]` for node `w` under the full-parent model.
pub fn dummy_encode(d: usize, w: NodeId, c: &Config) -> Result<Vec<u8>> {
    if w >= d {
        return Err(CtbnError::InvalidConfig(format!("node {w} out of range for d={d}")));
    }
    if c.excluded != Some(w) {
        return Err(CtbnError::InvalidConfig(format!(
            "configuration does not exclude node {w}"
        )));
    }
    if c.bits.len() + 1 != d {
        return Err(CtbnError::InvalidConfig(format!(
            "restricted configuration has length {}, expected {}",
            c.bits.len(),
            d - 1
        )));
    }
    let mut z = Vec::with_capacity(d);
    z.push(1);
    z.extend_from_slice(&c.bits);
    Ok(z)
}

/// Coefficients of the log-linear intensity model, one row of length `d`
/// (intercept first, then one entry per node of `-w` in ascending order) for
/// each `(w, s -> 1-s)`. Rows are ordered `(w0,0->1), (w0,1->0), (w1,0->1), ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaMatrix {
    d: usize,
    data: Vec<f64>,
}

impl BetaMatrix {
    pub fn zeros(d: usize) -> Self {
        BetaMatrix {
            d,
            data: vec![0.0; 2 * d * d],
        }
    }

    /// Builds from rows laid out as `rows[w][s]`, each of length `d`.
    pub fn from_rows(d: usize, rows: &[[Vec<f64>; 2]]) -> Result<Self> {
        if rows.len() != d {
            return Err(CtbnError::InvalidModel(format!(
                "beta has {} node entries, expected {d}",
                rows.len()
            )));
        }
        let mut m = BetaMatrix::zeros(d);
        for (w, pair) in rows.iter().enumerate() {
            for s in 0..2 {
                if pair[s].len() != d {
                    return Err(CtbnError::InvalidModel(format!(
                        "beta row ({w},{s}) has length {}, expected {d}",
                        pair[s].len()
                    )));
                }
                if pair[s].iter().any(|v| !v.is_finite()) {
                    return Err(CtbnError::InvalidModel(format!(
                        "beta row ({w},{s}) has a non-finite entry"
                    )));
                }
                m.row_mut(w, s as u8).copy_from_slice(&pair[s]);
            }
        }
        Ok(m)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, w: NodeId, s: u8) -> &[f64] {
        let start = (2 * w + s as usize) * self.d;
        &self.data[start..start + self.d]
    }

    pub fn row_mut(&mut self, w: NodeId, s: u8) -> &mut [f64] {
        let start = (2 * w + s as usize) * self.d;
        &mut self.data[start..start + self.d]
    }

    pub fn intercept(&self, w: NodeId, s: u8) -> f64 {
        self.row(w, s)[0]
    }

    /// `beta^w_{s,1-s}(u)`.
    pub fn coef(&self, w: NodeId, s: u8, u: NodeId) -> f64 {
        self.row(w, s)[1 + node_coordinate(w, u)]
    }

    /// Intensity of leaving state `s` at node `w` given the other nodes' configuration.
    pub fn intensity(&self, w: NodeId, s: u8, c: u64) -> f64 {
        let row = self.row(w, s);
        let mut eta = row[0];
        let mut bits = c;
        while bits != 0 {
            let k = bits.trailing_zeros() as usize;
            eta += row[1 + k];
            bits &= bits - 1;
        }
        eta.exp()
    }

    /// Nonzero penalized coefficients as `(w, s, u, value)`.
    pub fn support(&self) -> Vec<(NodeId, u8, NodeId, f64)> {
        let mut out = Vec::new();
        for w in 0..self.d {
            for s in 0..2u8 {
                for (k, &v) in self.row(w, s)[1..].iter().enumerate() {
                    if v != 0.0 {
                        out.push((w, s, coordinate_node(w, k), v));
                    }
                }
            }
        }
        out
    }

    /// Edge set read off the penalized coefficients.
    pub fn edges(&self) -> EdgeSet {
        let mut e = EdgeSet::new();
        for (w, _, u, _) in self.support() {
            e.insert(u, w).expect("support never addresses w itself");
        }
        e
    }

    pub fn to_rows(&self) -> Vec<[Vec<f64>; 2]> {
        (0..self.d)
            .map(|w| [self.row(w, 0).to_vec(), self.row(w, 1).to_vec()])
            .collect()
    }
}

/// Directed edges `u -> w`, stored as `(u, w)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgeSet(BTreeSet<(NodeId, NodeId)>);

impl EdgeSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, u: NodeId, w: NodeId) -> Result<bool> {
        if u == w {
            return Err(CtbnError::InvalidInput(format!("self-loop on node {u}")));
        }
        Ok(self.0.insert((u, w)))
    }

    pub fn contains(&self, u: NodeId, w: NodeId) -> bool {
        self.0.contains(&(u, w))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(NodeId, NodeId)> {
        self.0.iter()
    }
}

impl FromIterator<(NodeId, NodeId)> for EdgeSet {
    fn from_iter<I: IntoIterator<Item = (NodeId, NodeId)>>(iter: I) -> Self {
        EdgeSet(iter.into_iter().filter(|(u, w)| u != w).collect())
    }
}

/// A binary CTBN: parent sets and conditional intensity tables.
///
/// `cims[w][k]` holds `(Q_w(c;0,1), Q_w(c;1,0))` where bit `i` of `k` is the
/// state of the `i`-th parent of `w` in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct CtbnModel {
    d: usize,
    parents: Vec<Vec<NodeId>>,
    cims: Vec<Vec<[f64; 2]>>,
    beta: Option<BetaMatrix>,
    seed: Option<u64>,
    children: Vec<Vec<NodeId>>,
}

const BETA_REL_TOL: f64 = 1e-12;

impl CtbnModel {
    pub fn new(
        d: usize,
        parents: Vec<Vec<NodeId>>,
        cims: Vec<Vec<[f64; 2]>>,
        beta: Option<BetaMatrix>,
        seed: Option<u64>,
    ) -> Result<Self> {
        if d < 2 {
            return Err(CtbnError::param("d", format!("need at least 2 nodes, got {d}")));
        }
        if d > MAX_NODES {
            return Err(CtbnError::param(
                "d",
                format!("at most {MAX_NODES} nodes supported, got {d}"),
            ));
        }
        if parents.len() != d || cims.len() != d {
            return Err(CtbnError::InvalidModel(format!(
                "expected {d} parent lists and CIM tables, got {} and {}",
                parents.len(),
                cims.len()
            )));
        }
        let mut children = vec![Vec::new(); d];
        for (w, pa) in parents.iter().enumerate() {
            if pa.windows(2).any(|p| p[0] >= p[1]) {
                return Err(CtbnError::InvalidModel(format!(
                    "parents of node {w} must be sorted and distinct"
                )));
            }
            for &u in pa {
                if u == w {
                    return Err(CtbnError::InvalidModel(format!("node {w} is its own parent")));
                }
                if u >= d {
                    return Err(CtbnError::InvalidModel(format!(
                        "parent {u} of node {w} out of range"
                    )));
                }
                children[u].push(w);
            }
            if pa.len() > 20 {
                return Err(CtbnError::Capacity(format!(
                    "node {w} has {} parents; CIM tables are limited to 20",
                    pa.len()
                )));
            }
            let expected = 1usize << pa.len();
            if cims[w].len() != expected {
                return Err(CtbnError::InvalidModel(format!(
                    "node {w} has {} CIM entries, expected {expected}",
                    cims[w].len()
                )));
            }
            for (k, q) in cims[w].iter().enumerate() {
                if !(q[0] > 0.0 && q[0].is_finite() && q[1] > 0.0 && q[1].is_finite()) {
                    return Err(CtbnError::InvalidModel(format!(
                        "node {w} config {k}: rates must be positive and finite"
                    )));
                }
            }
        }
        let model = CtbnModel {
            d,
            parents,
            cims,
            beta,
            seed,
            children,
        };
        if let Some(b) = &model.beta {
            model.check_beta(b)?;
        }
        Ok(model)
    }

    fn check_beta(&self, beta: &BetaMatrix) -> Result<()> {
        if beta.d() != self.d {
            return Err(CtbnError::InvalidModel("beta dimension mismatch".into()));
        }
        for w in 0..self.d {
            for s in 0..2u8 {
                for u in (0..self.d).filter(|&u| u != w) {
                    if beta.coef(w, s, u) != 0.0 && !self.parents[w].contains(&u) {
                        return Err(CtbnError::InvalidModel(format!(
                            "beta links {u} -> {w} but {u} is not a parent"
                        )));
                    }
                }
                for k in 0..self.cims[w].len() {
                    let mut x = 0u64;
                    for (i, &u) in self.parents[w].iter().enumerate() {
                        if (k >> i) & 1 == 1 {
                            x |= 1 << u;
                        }
                    }
                    let got = beta.intensity(w, s, restrict_mask(x, w));
                    let want = self.cims[w][k][s as usize];
                    if ((got - want) / want).abs() > BETA_REL_TOL {
                        return Err(CtbnError::InvalidModel(format!(
                            "beta does not reproduce Q_{w}(config {k}; {s}) = {want} (got {got})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn parents(&self, w: NodeId) -> &[NodeId] {
        &self.parents[w]
    }

    pub fn parent_lists(&self) -> &[Vec<NodeId>] {
        &self.parents
    }

    pub fn children(&self, u: NodeId) -> &[NodeId] {
        &self.children[u]
    }

    pub fn cims(&self) -> &[Vec<[f64; 2]>] {
        &self.cims
    }

    pub fn beta(&self) -> Option<&BetaMatrix> {
        self.beta.as_ref()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Index into `cims[w]` for the parent states found in `x`.
    #[inline]
    pub fn parent_index(&self, x: State, w: NodeId) -> usize {
        let mut k = 0usize;
        for (i, &u) in self.parents[w].iter().enumerate() {
            k |= (x.get(u) as usize) << i;
        }
        k
    }

    /// Intensity of flipping node `w` away from its current state in `x`.
    #[inline]
    pub fn rate(&self, x: State, w: NodeId) -> f64 {
        self.cims[w][self.parent_index(x, w)][x.get(w) as usize]
    }

    /// `Q_w(c; s, 1-s)` evaluated at the parents' states in `x`, for an arbitrary `s`.
    #[inline]
    pub fn rate_from(&self, x: State, w: NodeId, s: u8) -> f64 {
        self.cims[w][self.parent_index(x, w)][s as usize]
    }

    /// True edge set `{(u, w) : u in pa(w)}`.
    pub fn edges(&self) -> EdgeSet {
        self.parents
            .iter()
            .enumerate()
            .flat_map(|(w, pa)| pa.iter().map(move |&u| (u, w)))
            .collect()
    }
}

/// Chain model: node 0 flips at rate 5 in both directions; node `k > 0` has
/// parent `k - 1` and leaves state `s` at rate 1 when `s = |c - a|`, else 9,
/// with `a` drawn uniformly per node.
pub fn make_m1(d: usize, rng_seed: u64) -> Result<CtbnModel> {
    if d < 2 {
        return Err(CtbnError::param("d", format!("M1 needs d >= 2, got {d}")));
    }
    let mut rng = seed::rng(rng_seed);
    let mut parents = vec![Vec::new()];
    let mut cims = vec![vec![[5.0, 5.0]]];
    let mut beta = BetaMatrix::zeros(d);
    beta.row_mut(0, 0)[0] = 5f64.ln();
    beta.row_mut(0, 1)[0] = 5f64.ln();
    for k in 1..d {
        let a: u8 = rng.gen_range(0..=1);
        let q = |c: u8, s: u8| if s == c.abs_diff(a) { 1.0 } else { 9.0 };
        parents.push(vec![k - 1]);
        cims.push(vec![[q(0, 0), q(0, 1)], [q(1, 0), q(1, 1)]]);
        for s in 0..2u8 {
            let (lo, hi): (f64, f64) = (q(0, s), q(1, s));
            let row = beta.row_mut(k, s);
            row[0] = lo.ln();
            row[1 + node_coordinate(k, k - 1)] = hi.ln() - lo.ln();
        }
    }
    CtbnModel::new(d, parents, cims, Some(beta), Some(rng_seed))
}

/// Five densely linked nodes plus `d - 5` independent ones. Each of the first
/// five nodes gets two parents drawn without replacement from the other four
/// and a uniformly drawn preferred state `p`: it leaves `p` at rate 9 when all
/// parents are 1 and at rate 1 otherwise, and leaves `1 - p` at the opposite
/// rates. Parentless nodes flip at rate 5.
pub fn make_m2(d: usize, rng_seed: u64) -> Result<CtbnModel> {
    if d < 5 {
        return Err(CtbnError::param("d", format!("M2 needs d >= 5, got {d}")));
    }
    let mut rng = seed::rng(rng_seed);
    let mut parents = Vec::with_capacity(d);
    let mut cims = Vec::with_capacity(d);
    for w in 0..5 {
        let others: Vec<NodeId> = (0..5).filter(|&u| u != w).collect();
        let mut pa: Vec<NodeId> = sample(&mut rng, 4, 2).iter().map(|i| others[i]).collect();
        pa.sort_unstable();
        let preferred: u8 = rng.gen_range(0..=1);
        let table = (0..4usize)
            .map(|k| {
                let all_ones = k == 0b11;
                let leave = |s: u8| match (s == preferred, all_ones) {
                    (true, true) | (false, false) => 9.0,
                    _ => 1.0,
                };
                [leave(0), leave(1)]
            })
            .collect();
        parents.push(pa);
        cims.push(table);
    }
    for _ in 5..d {
        parents.push(Vec::new());
        cims.push(vec![[5.0, 5.0]]);
    }
    CtbnModel::new(d, parents, cims, None, Some(rng_seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dummy_encode_layout() {
        let c = Config::restricted(0, vec![1, 0]).unwrap();
        assert_eq!(dummy_encode(3, 0, &c).unwrap(), vec![1, 1, 0]);
        let c = Config::restricted(0, vec![0, 0]).unwrap();
        assert_eq!(dummy_encode(3, 0, &c).unwrap(), vec![1, 0, 0]);
        let c = Config::restricted(2, vec![1, 0, 1]).unwrap();
        assert_eq!(dummy_encode(4, 2, &c).unwrap(), vec![1, 1, 0, 1]);
    }

    #[test]
    fn dummy_encode_rejects_mismatch() {
        let c = Config::restricted(0, vec![1, 0, 1]).unwrap();
        assert!(matches!(dummy_encode(3, 0, &c), Err(CtbnError::InvalidConfig(_))));
        let c = Config::restricted(1, vec![1, 0]).unwrap();
        assert!(dummy_encode(3, 0, &c).is_err());
        let c = Config::full(vec![1, 0]).unwrap();
        assert!(dummy_encode(3, 0, &c).is_err());
        assert!(Config::full(vec![0, 2]).is_err());
    }

    #[test]
    fn mask_helpers_round_trip() {
        for x in 0..64u64 {
            let s = State(x);
            for w in 0..6 {
                let c = s.restrict(w);
                assert_eq!(expand_mask(c, w, s.get(w)), x);
            }
        }
        assert_eq!(restrict_mask(0b1011, 1), 0b101);
        assert_eq!(coordinate_node(2, 1), 1);
        assert_eq!(coordinate_node(2, 2), 3);
        assert_eq!(node_coordinate(2, 3), 2);
    }

    #[test]
    fn m1_rates() {
        let m = make_m1(5, 3).unwrap();
        for x in 0..32u64 {
            assert_eq!(m.rate(State(x), 0), 5.0);
        }
        for k in 1..5 {
            // both cases of a: rates always in {1, 9}, and leaving rate is 1 exactly
            // when s = |c - a|, so flipping the parent swaps the rate
            let r00 = m.rate(State(0), k);
            let r10 = m.rate(State(1 << (k - 1)), k);
            assert!(r00 == 1.0 || r00 == 9.0);
            assert_eq!(r00 * r10, 9.0);
        }
    }

    #[test]
    fn m1_rate_table_matches_preference_rule() {
        // node with a = 0: parent 0 and own 0 -> 1, own 1 -> 9
        let q = |c: u8, s: u8, a: u8| if s == c.abs_diff(a) { 1.0 } else { 9.0 };
        assert_eq!(q(0, 0, 0), 1.0);
        assert_eq!(q(0, 1, 0), 9.0);
        let m = make_m1(8, 11).unwrap();
        for k in 1..8 {
            let t = &m.cims()[k];
            let a = if t[0][0] == 1.0 { 0 } else { 1 };
            for c in 0..2u8 {
                for s in 0..2u8 {
                    assert_eq!(t[c as usize][s as usize], q(c, s, a));
                }
            }
        }
    }

    #[test]
    fn m1_edge_counts() {
        assert_eq!(make_m1(20, 1).unwrap().edges().len(), 19);
        assert_eq!(make_m1(50, 1).unwrap().edges().len(), 49);
        let m = make_m1(2, 9).unwrap();
        assert!(m.edges().contains(0, 1));
        assert!(m.cims()[1].iter().flatten().all(|&q| q == 1.0 || q == 9.0));
        assert!(make_m1(1, 0).is_err());
    }

    #[test]
    fn m1_beta_reproduces_cims() {
        for seed in 0..20 {
            let m = make_m1(6, seed).unwrap();
            let b = m.beta().unwrap();
            assert_eq!(b.edges(), m.edges());
            assert!((b.intercept(0, 0) - 5f64.ln()).abs() < 1e-15);
            for (_, _, _, v) in b.support() {
                assert!((v.abs() - 9f64.ln()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn m2_structure() {
        for seed in 0..20 {
            let m = make_m2(20, seed).unwrap();
            let e = m.edges();
            assert_eq!(e.len(), 10);
            assert!(e.iter().all(|&(u, w)| u < 5 && w < 5 && u != w));
            for w in 0..5 {
                assert_eq!(m.parents(w).len(), 2);
            }
            for w in 5..20 {
                assert!(m.parents(w).is_empty());
                assert_eq!(m.cims()[w], vec![[5.0, 5.0]]);
            }
            assert!(m.beta().is_none());
        }
        assert!(make_m2(4, 0).is_err());
    }

    #[test]
    fn m2_preference_rule() {
        let m = make_m2(5, 4).unwrap();
        for w in 0..5 {
            let t = &m.cims()[w];
            // all parents at 1: the preferred state p is left at rate 9
            let p = if t[0b11][0] == 9.0 { 0 } else { 1 };
            assert_eq!(t[0b11][p], 9.0);
            assert_eq!(t[0b11][1 - p], 1.0);
            for k in 0..3 {
                assert_eq!(t[k][p], 1.0);
                assert_eq!(t[k][1 - p], 9.0);
            }
        }
    }

    #[test]
    fn model_validation() {
        let ok = CtbnModel::new(2, vec![vec![], vec![0]], vec![vec![[1.0, 1.0]], vec![[1.0, 2.0], [3.0, 4.0]]], None, None);
        assert!(ok.is_ok());
        let selfp = CtbnModel::new(2, vec![vec![0], vec![]], vec![vec![[1.0, 1.0]; 2], vec![[1.0, 1.0]]], None, None);
        assert!(selfp.is_err());
        let neg = CtbnModel::new(2, vec![vec![], vec![]], vec![vec![[0.0, 1.0]], vec![[1.0, 1.0]]], None, None);
        assert!(neg.is_err());
        let short = CtbnModel::new(2, vec![vec![], vec![0]], vec![vec![[1.0, 1.0]], vec![[1.0, 2.0]]], None, None);
        assert!(short.is_err());
        let unsorted = CtbnModel::new(
            3,
            vec![vec![], vec![], vec![1, 0]],
            vec![vec![[1.0, 1.0]], vec![[1.0, 1.0]], vec![[1.0, 1.0]; 4]],
            None,
            None,
        );
        assert!(unsorted.is_err());
    }

    #[test]
    fn inconsistent_beta_rejected() {
        let mut b = BetaMatrix::zeros(2);
        b.row_mut(1, 0)[1] = 0.5;
        let r = CtbnModel::new(2, vec![vec![], vec![]], vec![vec![[1.0, 1.0]], vec![[1.0, 1.0]]], Some(b), None);
        assert!(r.is_err());
    }

    #[test]
    fn edge_set_rejects_self_loops() {
        let mut e = EdgeSet::new();
        assert!(e.insert(1, 1).is_err());
        assert!(e.insert(0, 1).unwrap());
        let collected: EdgeSet = vec![(2, 2), (0, 1)].into_iter().collect();
        assert_eq!(collected.len(), 1);
    }
}
