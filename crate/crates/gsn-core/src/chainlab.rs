//! Exact finite-state chain analysis.
//!
//! Everything here enumerates a small discrete state space and builds the
//! true transition matrix, so statements about stationary distributions,
//! ergodicity, and perturbation bounds can be checked by linear algebra
//! instead of sampling: the learned denoising chain as an exact operator,
//! dependency-network scan operators, joint visible/hidden operators from
//! explicit conditional tables, and Schweitzer's perturbation bound.

use std::io::Write;

use serde::Serialize;

use crate::gsn::{GsnModel, VisibleKind};
use crate::ndnum::{lu_inverse, stationary_dense, stationary_distribution, Matrix, Rng};
use crate::{Error, Result};

/// Default ceiling on enumerable states; keeps every exact computation
/// comfortably fast.
pub const DEFAULT_STATE_CAP: usize = 4096;

/// Tolerance for row sums of constructed operators.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Enumeration of binary vectors of a fixed dimension in binary counting
/// order; bit `j` of state `s` is `(s >> j) & 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateSpace {
    dim: usize,
    size: usize,
}

impl StateSpace {
    pub fn new(dim: usize) -> Result<StateSpace> {
        StateSpace::with_cap(dim, DEFAULT_STATE_CAP)
    }

    pub fn with_cap(dim: usize, cap: usize) -> Result<StateSpace> {
        if dim == 0 {
            return Err(Error::Param("state space needs at least one bit".into()));
        }
        if dim >= usize::BITS as usize || (1usize << dim) > cap {
            return Err(Error::SizeCap(format!(
                "2^{dim} states exceed the cap of {cap}"
            )));
        }
        Ok(StateSpace { dim, size: 1 << dim })
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn vector(&self, s: usize) -> Vec<f64> {
        (0..self.dim).map(|j| ((s >> j) & 1) as f64).collect()
    }

    /// The state as a 1 x dim matrix row (model input form).
    pub fn row(&self, s: usize) -> Matrix {
        Matrix::from_vec(1, self.dim, self.vector(s)).expect("bits are finite")
    }

    pub fn index(&self, bits: &[f64]) -> Result<usize> {
        if bits.len() != self.dim {
            return Err(Error::Shape(format!(
                "expected {} bits, got {}",
                self.dim,
                bits.len()
            )));
        }
        let mut s = 0usize;
        for (j, &b) in bits.iter().enumerate() {
            if b == 1.0 {
                s |= 1 << j;
            } else if b != 0.0 {
                return Err(Error::Param(format!("entry {j} is {b}, not a bit")));
            }
        }
        Ok(s)
    }
}

/// A validated row-stochastic transition matrix with a human label.
#[derive(Debug, Clone)]
pub struct ChainOperator {
    k: Matrix,
    label: String,
}

impl ChainOperator {
    /// Validates squareness, non-negativity, and row sums within
    /// `ROW_SUM_TOL`. Entries in [-1e-12, 0) are rounding debris from
    /// matrix products and are zeroed; anything more negative is an error.
    pub fn new(k: Matrix, label: impl Into<String>) -> Result<ChainOperator> {
        let label = label.into();
        let mut k = k;
        if k.rows() != k.cols() {
            return Err(Error::Shape(format!(
                "operator {label}: {}x{} is not square",
                k.rows(),
                k.cols()
            )));
        }
        for v in k.data_mut() {
            if *v < 0.0 {
                if *v < -1e-12 {
                    return Err(Error::Param(format!(
                        "operator {label}: negative transition probability {v}"
                    )));
                }
                *v = 0.0;
            }
        }
        for i in 0..k.rows() {
            let s: f64 = k.row(i).iter().sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::Param(format!(
                    "operator {label}: row {i} sums to {s}, off by {:.3e}",
                    (s - 1.0).abs()
                )));
            }
        }
        Ok(ChainOperator { k, label })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.k
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn size(&self) -> usize {
        self.k.rows()
    }

    /// Stationary distribution by power iteration (errors on reducible or
    /// periodic chains).
    pub fn stationary(&self, tol: f64) -> Result<Vec<f64>> {
        Ok(stationary_distribution(&self.k, tol)?.data().to_vec())
    }

    /// Stationary distribution by direct solve of the balance equations.
    pub fn stationary_exact(&self) -> Result<Vec<f64>> {
        Ok(stationary_dense(&self.k)?.data().to_vec())
    }
}

/// Half the L1 distance between two distributions.
pub fn total_variation(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Shape(format!(
            "total_variation: lengths {} vs {}",
            p.len(),
            q.len()
        )));
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Exact transition operator of a one-hidden-layer binary chain with
/// noise-free hidden units: K(x'|x) = sum over corruptions x~ of
/// C(x~|x) P(x'|x~). The corruption factorizes per bit (each bit is
/// replaced by a fair coin with probability p), and the reconstruction
/// factorizes per bit given the deterministic hidden activation of x~.
pub fn dae_exact_operator(model: &GsnModel, space: &StateSpace) -> Result<ChainOperator> {
    let cfg = model.config();
    if cfg.depth() != 1 {
        return Err(Error::Param(format!(
            "exact operator needs exactly one hidden layer, model has {}",
            cfg.depth()
        )));
    }
    if cfg.eta_in.iter().chain(&cfg.eta_out).any(|&e| e > 0.0) {
        return Err(Error::Param("exact operator needs noise-free hidden units".into()));
    }
    if cfg.visible_kind != VisibleKind::Binary {
        return Err(Error::Param("exact operator needs binary visibles".into()));
    }
    if space.dimension() != cfg.visible_size {
        return Err(Error::Shape(format!(
            "state space dimension {} vs visible size {}",
            space.dimension(),
            cfg.visible_size
        )));
    }

    let n = space.size();
    let d = space.dimension();
    // Hidden updates are noise-free, so the rng is never consulted.
    let mut rng = Rng::new(0);

    let mut recon = Matrix::zeros(n, n);
    for xt in 0..n {
        let state = model.init_state(space.row(xt))?;
        let h1 = model.layer_update(&state, 1, &mut rng)?;
        let probs = model.recon_distribution(&h1)?;
        for xp in 0..n {
            let mut prod = 1.0;
            for j in 0..d {
                let pj = probs.get(0, j);
                prod *= if (xp >> j) & 1 == 1 { pj } else { 1.0 - pj };
            }
            recon.set(xt, xp, prod);
        }
    }

    let p = cfg.input_corruption_p;
    let keep = 1.0 - p / 2.0;
    let flip = p / 2.0;
    let mut corrupt = Matrix::zeros(n, n);
    for x in 0..n {
        for xt in 0..n {
            let ham = (x ^ xt).count_ones() as i32;
            corrupt.set(x, xt, flip.powi(ham) * keep.powi(d as i32 - ham));
        }
    }

    ChainOperator::new(corrupt.matmul(&recon)?, "dae-exact")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ErgodicityReport {
    pub irreducible: bool,
    /// gcd of cycle lengths when irreducible; 0 for reducible chains.
    pub period: usize,
    pub ergodic: bool,
}

/// Irreducibility via forward and backward reachability on the support
/// graph, period via the gcd of `level(u) + 1 - level(v)` over all
/// support edges of a breadth-first layering; ergodic means irreducible
/// with period 1.
pub fn ergodicity_check(op: &ChainOperator) -> ErgodicityReport {
    let n = op.size();
    let k = op.matrix();
    let edge = |u: usize, v: usize| k.get(u, v) > 0.0;

    let reach = |backward: bool| -> Vec<bool> {
        let mut seen = vec![false; n];
        let mut queue = vec![0usize];
        seen[0] = true;
        while let Some(u) = queue.pop() {
            for v in 0..n {
                let connected = if backward { edge(v, u) } else { edge(u, v) };
                if connected && !seen[v] {
                    seen[v] = true;
                    queue.push(v);
                }
            }
        }
        seen
    };
    let fwd = reach(false);
    let bwd = reach(true);
    let irreducible = fwd.iter().all(|&s| s) && bwd.iter().all(|&s| s);
    if !irreducible {
        return ErgodicityReport { irreducible: false, period: 0, ergodic: false };
    }

    // BFS levels from state 0.
    let mut level = vec![usize::MAX; n];
    level[0] = 0;
    let mut frontier = vec![0usize];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &u in &frontier {
            for v in 0..n {
                if edge(u, v) && level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    next.push(v);
                }
            }
        }
        frontier = next;
    }
    let mut g: u64 = 0;
    for u in 0..n {
        for v in 0..n {
            if edge(u, v) {
                let delta = (level[u] as i64 + 1 - level[v] as i64).unsigned_abs();
                g = gcd(g, delta);
            }
        }
    }
    let period = g as usize;
    ErgodicityReport { irreducible: true, period, ergodic: period == 1 }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchweitzerReport {
    /// L1 distance between the two stationary distributions.
    pub lhs: f64,
    /// Fundamental-matrix bound on that distance.
    pub rhs: f64,
    pub holds: bool,
}

/// Schweitzer's perturbation bound for ergodic finite chains:
/// `||pi - pi~||_1 <= ||Z||_inf ||K - K~||_inf` with the fundamental
/// matrix `Z = (I - K + 1 pi)^-1`, everything in row-stochastic
/// orientation and the infinity norm the max absolute row sum. This
/// orientation is the one that survives randomized verification (its
/// transpose does not); the 200-trial property test below is the guard.
pub fn schweitzer_bound(k: &ChainOperator, k_tilde: &ChainOperator) -> Result<SchweitzerReport> {
    if k.size() != k_tilde.size() {
        return Err(Error::Shape(format!(
            "operators have sizes {} and {}",
            k.size(),
            k_tilde.size()
        )));
    }
    let n = k.size();
    let pi = stationary_dense(k.matrix())?;
    let pi_t = stationary_dense(k_tilde.matrix())?;
    let lhs = pi.l1_distance(&pi_t)?;

    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let delta = if i == j { 1.0 } else { 0.0 };
            a.set(i, j, delta - k.matrix().get(i, j) + pi.get(0, j));
        }
    }
    let z = lu_inverse(&a)?;
    let rhs = z.norm_inf() * k.matrix().sub(k_tilde.matrix())?.norm_inf();
    Ok(SchweitzerReport { lhs, rhs, holds: lhs <= rhs + 1e-9 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanMode {
    /// Each step picks a uniformly random coordinate to resample.
    RandomScan,
    /// Coordinates are swept in order; the sweep position is part of the
    /// chain state, which makes the chain periodic with period d.
    OrderedScanWithIndex,
}

/// A dependency network: one conditional table per coordinate, each
/// giving P(x_i = 1 | rest) indexed by the full state (the entry may not
/// depend on the coordinate's own bit). The tables may be mutually
/// inconsistent; the scan operator still defines a proper chain.
#[derive(Debug, Clone)]
pub struct DepNetSpec {
    pub conditionals: Vec<Vec<f64>>,
    pub scan: ScanMode,
}

impl DepNetSpec {
    fn validate(&self) -> Result<StateSpace> {
        let d = self.conditionals.len();
        let space = StateSpace::new(d)?;
        for (i, table) in self.conditionals.iter().enumerate() {
            if table.len() != space.size() {
                return Err(Error::Shape(format!(
                    "conditional {i} has {} entries, expected {}",
                    table.len(),
                    space.size()
                )));
            }
            for (s, &p) in table.iter().enumerate() {
                if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                    return Err(Error::Param(format!(
                        "conditional {i} at state {s} is {p}, not a probability"
                    )));
                }
            }
            for s in 0..space.size() {
                if self.conditionals[i][s] != self.conditionals[i][s ^ (1 << i)] {
                    return Err(Error::Param(format!(
                        "conditional {i} depends on its own coordinate (states {s} and {})",
                        s ^ (1 << i)
                    )));
                }
            }
        }
        Ok(space)
    }
}

/// Builds the scan operator of a dependency network. Random scan mixes
/// the per-coordinate resampling kernels with weight 1/d; ordered scan
/// augments the state with the sweep position, so the operator has
/// `2^d * d` states indexed as `state * d + position`.
pub fn depnet_operator(spec: &DepNetSpec) -> Result<ChainOperator> {
    let space = spec.validate()?;
    let d = space.dimension();
    let n = space.size();
    match spec.scan {
        ScanMode::RandomScan => {
            let mut k = Matrix::zeros(n, n);
            let w = 1.0 / d as f64;
            for s in 0..n {
                for (i, table) in spec.conditionals.iter().enumerate() {
                    let p = table[s];
                    let s1 = s | (1 << i);
                    let s0 = s & !(1 << i);
                    k.set(s, s1, k.get(s, s1) + w * p);
                    k.set(s, s0, k.get(s, s0) + w * (1.0 - p));
                }
            }
            ChainOperator::new(k, "depnet-random-scan")
        }
        ScanMode::OrderedScanWithIndex => {
            let total = n * d;
            if total > DEFAULT_STATE_CAP {
                return Err(Error::SizeCap(format!(
                    "ordered scan needs {total} augmented states, cap is {DEFAULT_STATE_CAP}"
                )));
            }
            let mut k = Matrix::zeros(total, total);
            for s in 0..n {
                for i in 0..d {
                    let p = spec.conditionals[i][s];
                    let next_i = (i + 1) % d;
                    let s1 = s | (1 << i);
                    let s0 = s & !(1 << i);
                    k.set(s * d + i, s1 * d + next_i, k.get(s * d + i, s1 * d + next_i) + p);
                    k.set(s * d + i, s0 * d + next_i, k.get(s * d + i, s0 * d + next_i) + 1.0 - p);
                }
            }
            ChainOperator::new(k, "depnet-ordered-scan")
        }
    }
}

/// Exact operator of the joint (x, h) chain driven by explicit
/// conditional tables: `f` has one row per (x, h) pair (index
/// `x * nh + h`) giving the distribution of the next h, and `g` has one
/// row per h giving the distribution of the next x. Also solves for the
/// stationary distribution and its x-marginal, which is what the chain
/// actually generates.
#[derive(Debug, Clone)]
pub struct JointChain {
    pub operator: ChainOperator,
    pub stationary: Vec<f64>,
    pub x_marginal: Vec<f64>,
    pub nx: usize,
    pub nh: usize,
}

pub fn joint_chain_operator(f: &Matrix, g: &Matrix) -> Result<JointChain> {
    let nh = g.rows();
    let nx = g.cols();
    if nh == 0 || nx == 0 {
        return Err(Error::Shape("empty conditional table".into()));
    }
    if f.rows() != nx * nh || f.cols() != nh {
        return Err(Error::Shape(format!(
            "f is {}x{}, expected {}x{} for nx={nx}, nh={nh}",
            f.rows(),
            f.cols(),
            nx * nh,
            nh
        )));
    }
    let total = nx * nh;
    if total > DEFAULT_STATE_CAP {
        return Err(Error::SizeCap(format!(
            "joint chain needs {total} states, cap is {DEFAULT_STATE_CAP}"
        )));
    }
    check_conditional(f, "f")?;
    check_conditional(g, "g")?;

    let mut k = Matrix::zeros(total, total);
    for x in 0..nx {
        for h in 0..nh {
            let from = x * nh + h;
            for hp in 0..nh {
                let fh = f.get(from, hp);
                for xp in 0..nx {
                    k.set(from, xp * nh + hp, fh * g.get(hp, xp));
                }
            }
        }
    }
    let operator = ChainOperator::new(k, "joint-xh")?;
    let stationary = operator.stationary_exact()?;
    let mut x_marginal = vec![0.0; nx];
    for x in 0..nx {
        for h in 0..nh {
            x_marginal[x] += stationary[x * nh + h];
        }
    }
    Ok(JointChain { operator, stationary, x_marginal, nx, nh })
}

fn check_conditional(m: &Matrix, what: &str) -> Result<()> {
    for i in 0..m.rows() {
        let mut s = 0.0;
        for &v in m.row(i) {
            if v < 0.0 {
                return Err(Error::Param(format!(
                    "table {what}: negative probability {v} in row {i}"
                )));
            }
            s += v;
        }
        if (s - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::Param(format!(
                "table {what}: row {i} sums to {s}"
            )));
        }
    }
    Ok(())
}

/// One line of an analysis report; optional fields stay empty when the
/// analysis does not apply (e.g. no perturbation bound for a single
/// chain).
#[derive(Debug, Clone, Serialize)]
pub struct AnalysisRecord {
    pub trial: usize,
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub irreducible: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub period: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lhs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rhs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub holds: Option<bool>,
}

pub fn write_records_jsonl<W: Write>(records: &[AnalysisRecord], w: &mut W) -> Result<()> {
    for r in records {
        let line = serde_json::to_string(r)
            .map_err(|e| Error::Format(format!("report serialization failed: {e}")))?;
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn write_records_csv<W: Write>(records: &[AnalysisRecord], w: &mut W) -> Result<()> {
    writeln!(w, "trial,label,irreducible,period,lhs,rhs,holds")?;
    let opt = |v: Option<String>| v.unwrap_or_default();
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.trial,
            r.label,
            opt(r.irreducible.map(|v| v.to_string())),
            opt(r.period.map(|v| v.to_string())),
            opt(r.lhs.map(|v| v.to_string())),
            opt(r.rhs.map(|v| v.to_string())),
            opt(r.holds.map(|v| v.to_string())),
        )?;
    }
    Ok(())
}
