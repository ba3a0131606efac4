//! The generative stochastic network: a Markov chain over a visible layer
//! and a stack of hidden layers.
//!
//! One chain step corrupts the visible, updates the hidden layers of the
//! scheduled parity (odd layers on even steps, even layers on odd steps;
//! each hidden layer sees its neighbours through a weight matrix and its
//! transpose), then resamples the visible from the layer-1 readout.
//! Training unrolls several steps of this chain from a corrupted data
//! point and back-propagates the summed per-step reconstruction losses
//! against the clean input, which is exactly the walkback criterion.
//!
//! Conventions used throughout: examples are rows; `W_l` has shape
//! (size of layer l-1) x (size of layer l); bottom-up signals multiply
//! `W_l`, top-down signals multiply the tied transpose `W_{l+1}^T`; the
//! visible readout uses `W_1^T` plus a visible bias.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diffgraph::{
    sigmoid_scalar, CorruptKind, DetachMode, Graph, NodeId, NoiseMode, ParameterStore,
};
use crate::ndnum::{gaussian_noise, Matrix, Rng};
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"GSNC";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Distribution family of the visible layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VisibleKind {
    /// Factorized Bernoulli; readout passes through a sigmoid.
    Binary,
    /// Factorized Gaussian with unit variance; readout is the mean.
    Real,
}

/// Which parity group of hidden layers moves on step 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StartParity {
    Odd,
    Even,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GsnConfig {
    pub visible_size: usize,
    pub hidden_sizes: Vec<usize>,
    /// Pre-activation noise std per hidden layer. Layer 1 feeds the
    /// reconstruction directly, so its entry is forced to zero.
    pub eta_in: Vec<f64>,
    /// Post-activation noise std per hidden layer; entry 0 forced to zero.
    pub eta_out: Vec<f64>,
    /// Binary visibles: salt-and-pepper flip probability. Real visibles:
    /// std of additive Gaussian corruption.
    pub input_corruption_p: f64,
    pub walkback_steps: usize,
    pub visible_kind: VisibleKind,
    pub seed: u64,
    /// Corrupt the resampled visible between unrolled training steps, not
    /// just at step 0. The sampling chain always corrupts.
    pub corrupt_every_step: bool,
    /// Warm-start h1 from the (corrupted) input instead of zeros.
    pub h0_from_h1: bool,
    pub start_parity: StartParity,
}

impl GsnConfig {
    /// Standard configuration: uniform noise level `eta` across hidden
    /// layers (layer 1 zeroed), walkback depth twice the number of hidden
    /// layers, corruption at every unrolled step.
    pub fn new(
        visible_size: usize,
        hidden_sizes: Vec<usize>,
        eta: f64,
        input_corruption_p: f64,
        visible_kind: VisibleKind,
        seed: u64,
    ) -> Result<GsnConfig> {
        let depth = hidden_sizes.len();
        let mut eta_in = vec![eta; depth];
        let mut eta_out = vec![eta; depth];
        if depth > 0 {
            eta_in[0] = 0.0;
            eta_out[0] = 0.0;
        }
        let config = GsnConfig {
            visible_size,
            hidden_sizes,
            eta_in,
            eta_out,
            input_corruption_p,
            walkback_steps: 2 * depth,
            visible_kind,
            seed,
            corrupt_every_step: true,
            h0_from_h1: false,
            start_parity: StartParity::Odd,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn depth(&self) -> usize {
        self.hidden_sizes.len()
    }

    /// Size of layer `l`, where layer 0 is the visible layer.
    pub fn layer_size(&self, l: usize) -> usize {
        if l == 0 {
            self.visible_size
        } else {
            self.hidden_sizes[l - 1]
        }
    }

    /// Zeroes the layer-1 noise entries.
    pub fn normalize(&mut self) {
        if !self.eta_in.is_empty() {
            self.eta_in[0] = 0.0;
        }
        if !self.eta_out.is_empty() {
            self.eta_out[0] = 0.0;
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.visible_size == 0 {
            return Err(Error::Param("visible_size must be positive".into()));
        }
        if self.hidden_sizes.is_empty() {
            return Err(Error::Param("at least one hidden layer is required".into()));
        }
        if self.hidden_sizes.iter().any(|&n| n == 0) {
            return Err(Error::Param("hidden layer sizes must be positive".into()));
        }
        let d = self.depth();
        if self.eta_in.len() != d || self.eta_out.len() != d {
            return Err(Error::Param(format!(
                "noise vectors must have one entry per hidden layer ({d}), got {} and {}",
                self.eta_in.len(),
                self.eta_out.len()
            )));
        }
        for (name, v) in [("eta_in", &self.eta_in), ("eta_out", &self.eta_out)] {
            if v.iter().any(|&e| !e.is_finite() || e < 0.0) {
                return Err(Error::Param(format!("{name} entries must be finite and >= 0")));
            }
        }
        if !self.input_corruption_p.is_finite() || self.input_corruption_p < 0.0 {
            return Err(Error::Param("input_corruption_p must be finite and >= 0".into()));
        }
        if self.visible_kind == VisibleKind::Binary && self.input_corruption_p > 1.0 {
            return Err(Error::Param(format!(
                "input_corruption_p {} is not a probability",
                self.input_corruption_p
            )));
        }
        if self.walkback_steps == 0 {
            return Err(Error::Param("walkback_steps must be positive".into()));
        }
        Ok(())
    }
}

/// One state of the chain: the visible batch and every hidden layer.
#[derive(Debug, Clone)]
pub struct GsnState {
    pub x: Matrix,
    /// `h[i]` is hidden layer `i + 1`.
    pub h: Vec<Matrix>,
}

/// An unrolled walkback training graph plus the inputs it binds.
#[derive(Debug)]
pub struct WalkbackGraph {
    pub graph: Graph,
    /// Scalar node summing every per-step reconstruction loss.
    pub loss: NodeId,
    pub step_losses: Vec<NodeId>,
    /// Per-step reconstruction distributions (probs or means).
    pub recon_nodes: Vec<NodeId>,
    pub inputs: HashMap<String, Matrix>,
    pub batch: usize,
}

impl WalkbackGraph {
    /// Total loss averaged per example; requires a completed forward pass.
    pub fn mean_loss(&self) -> Result<f64> {
        Ok(self.graph.value(self.loss)?.get(0, 0) / self.batch as f64)
    }
}

#[derive(Debug, Clone)]
pub struct GsnModel {
    config: GsnConfig,
    params: ParameterStore,
}

impl GsnModel {
    /// Fresh model with weights drawn uniformly from
    /// [-1/sqrt(fan_in), +1/sqrt(fan_in)] (in declaration order W1..WD,
    /// row-major) and zero biases, seeded from `config.seed`.
    pub fn new(config: GsnConfig) -> Result<GsnModel> {
        let mut config = config;
        config.normalize();
        config.validate()?;
        let mut params = empty_store(&config)?;
        let mut rng = Rng::with_stream(config.seed, 0);
        for l in 1..=config.depth() {
            let rows = config.layer_size(l - 1);
            let cols = config.layer_size(l);
            let bound = 1.0 / (rows as f64).sqrt();
            let w = Matrix::from_fn(rows, cols, |_, _| (2.0 * rng.next_f64() - 1.0) * bound)?;
            params.set(&weight_name(l), w)?;
        }
        Ok(GsnModel { config, params })
    }

    pub fn config(&self) -> &GsnConfig {
        &self.config
    }

    pub fn params(&self) -> &ParameterStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParameterStore {
        &mut self.params
    }

    /// Hidden layers scheduled at the given step index: odd layers on even
    /// steps and even layers on odd steps (swapped for `StartParity::Even`).
    /// A depth-1 network has no even layers, so every step updates layer 1
    /// and the chain reduces to the plain autoencoder chain.
    pub fn update_set(&self, step: usize) -> Vec<usize> {
        let odd_turn = match self.config.start_parity {
            StartParity::Odd => step % 2 == 0,
            StartParity::Even => step % 2 == 1,
        };
        let want = if odd_turn { 1 } else { 0 };
        let set: Vec<usize> = (1..=self.config.depth()).filter(|l| l % 2 == want).collect();
        if set.is_empty() {
            (1..=self.config.depth()).filter(|l| l % 2 == 1).collect()
        } else {
            set
        }
    }

    /// Chain state with the given visible batch and zero hidden layers
    /// (h1 warm-started from the visible when `h0_from_h1` is set).
    pub fn init_state(&self, x: Matrix) -> Result<GsnState> {
        if x.cols() != self.config.visible_size {
            return Err(Error::Shape(format!(
                "visible batch has {} columns, model expects {}",
                x.cols(),
                self.config.visible_size
            )));
        }
        let batch = x.rows();
        let mut h: Vec<Matrix> = (1..=self.config.depth())
            .map(|l| Matrix::zeros(batch, self.config.layer_size(l)))
            .collect();
        if self.config.h0_from_h1 {
            let a = x
                .matmul(self.params.owner_value(&weight_name(1))?)?
                .add_row_broadcast(self.params.owner_value(&bias_h_name(1))?)?;
            h[0] = a.map(f64::tanh);
        }
        Ok(GsnState { x, h })
    }

    /// Uninformative visible start for free-running chains: fair coin flips
    /// for binary visibles, zeros for real ones.
    pub fn random_visible_start(&self, batch: usize, rng: &mut Rng) -> Matrix {
        match self.config.visible_kind {
            VisibleKind::Binary => {
                Matrix::from_fn(batch, self.config.visible_size, |_, _| {
                    if rng.next_bernoulli(0.5) {
                        1.0
                    } else {
                        0.0
                    }
                })
                .expect("constant entries are finite")
            }
            VisibleKind::Real => Matrix::zeros(batch, self.config.visible_size),
        }
    }

    /// Applies the input corruption to a visible batch. Coordinates whose
    /// mask entry is true are left untouched and consume no randomness;
    /// `None` behaves as an all-false mask.
    pub fn corrupt_visible(
        &self,
        x: &Matrix,
        rng: &mut Rng,
        clamp_mask: Option<&[bool]>,
    ) -> Result<Matrix> {
        if let Some(mask) = clamp_mask {
            if mask.len() != self.config.visible_size {
                return Err(Error::Shape(format!(
                    "clamp mask has {} entries, visible size is {}",
                    mask.len(),
                    self.config.visible_size
                )));
            }
        }
        let p = self.config.input_corruption_p;
        if p == 0.0 {
            return Ok(x.clone());
        }
        let mut out = x.clone();
        match self.config.visible_kind {
            VisibleKind::Binary => {
                for i in 0..out.rows() {
                    for j in 0..out.cols() {
                        if clamp_mask.is_some_and(|m| m[j]) {
                            continue;
                        }
                        if rng.next_f64() < p {
                            out.set(i, j, if rng.next_bernoulli(0.5) { 1.0 } else { 0.0 });
                        }
                    }
                }
            }
            VisibleKind::Real => {
                for i in 0..out.rows() {
                    for j in 0..out.cols() {
                        if clamp_mask.is_some_and(|m| m[j]) {
                            continue;
                        }
                        out.set(i, j, out.get(i, j) + p * rng.next_gaussian());
                    }
                }
            }
        }
        Ok(out)
    }

    /// Recomputes one hidden layer from the current state: bottom-up input
    /// times `W_l`, top-down input times `W_{l+1}^T`, bias, then
    /// `eta_out * e2 + tanh(eta_in * e1 + a)`. Noise draw order is the
    /// full pre-activation matrix first, then the post-activation one.
    pub fn layer_update(&self, state: &GsnState, layer: usize, rng: &mut Rng) -> Result<Matrix> {
        let d = self.config.depth();
        if layer == 0 || layer > d {
            return Err(Error::Param(format!("layer {layer} out of range 1..={d}")));
        }
        let below = if layer == 1 { &state.x } else { &state.h[layer - 2] };
        let mut a = below.matmul(self.params.owner_value(&weight_name(layer))?)?;
        if layer < d {
            let above = &state.h[layer];
            a = a.add(&above.matmul_nt(self.params.owner_value(&weight_name(layer + 1))?)?)?;
        }
        a = a.add_row_broadcast(self.params.owner_value(&bias_h_name(layer))?)?;
        let ein = self.config.eta_in[layer - 1];
        if ein > 0.0 {
            a = a.add(&gaussian_noise(rng, a.rows(), a.cols(), ein)?)?;
        }
        let mut h = a.map(f64::tanh);
        let eout = self.config.eta_out[layer - 1];
        if eout > 0.0 {
            h = h.add(&gaussian_noise(rng, h.rows(), h.cols(), eout)?)?;
        }
        Ok(h)
    }

    /// Reconstruction distribution given hidden layer 1: sigmoid of the
    /// tied readout for binary visibles, the raw affine mean for real ones.
    pub fn recon_distribution(&self, h1: &Matrix) -> Result<Matrix> {
        let pre = h1
            .matmul_nt(self.params.owner_value(&weight_name(1))?)?
            .add_row_broadcast(self.params.owner_value("bv")?)?;
        Ok(match self.config.visible_kind {
            VisibleKind::Binary => pre.map(sigmoid_scalar),
            VisibleKind::Real => pre,
        })
    }

    /// Draws a visible batch from a reconstruction distribution.
    pub fn sample_visible(&self, dist: &Matrix, rng: &mut Rng) -> Matrix {
        match self.config.visible_kind {
            VisibleKind::Binary => dist.map_with_rng(rng, |p, r| {
                if r.next_bernoulli(p) {
                    1.0
                } else {
                    0.0
                }
            }),
            VisibleKind::Real => dist.map_with_rng(rng, |m, r| m + r.next_gaussian()),
        }
    }

    /// One step of the sampling chain: corrupt the visible, update the
    /// scheduled hidden layers (all reading the pre-step state), resample
    /// the visible. Returns the new state and the reconstruction
    /// distribution the visible was drawn from.
    pub fn chain_step(
        &self,
        state: &GsnState,
        step: usize,
        rng: &mut Rng,
    ) -> Result<(GsnState, Matrix)> {
        self.chain_step_clamped(state, step, rng, None)
    }

    /// Chain step with some visible coordinates held fixed: clamped
    /// coordinates are exempt from corruption and reset to their clamp
    /// values after resampling, so only the free coordinates evolve.
    pub fn chain_step_clamped(
        &self,
        state: &GsnState,
        step: usize,
        rng: &mut Rng,
        clamp: Option<(&[bool], &[f64])>,
    ) -> Result<(GsnState, Matrix)> {
        if let Some((mask, values)) = clamp {
            if mask.len() != self.config.visible_size || values.len() != self.config.visible_size {
                return Err(Error::Shape(format!(
                    "clamp mask/values must have {} entries, got {} and {}",
                    self.config.visible_size,
                    mask.len(),
                    values.len()
                )));
            }
        }
        let x_in = self.corrupt_visible(&state.x, rng, clamp.map(|c| c.0))?;
        let pre_step = GsnState { x: x_in, h: state.h.clone() };
        let mut h_new = state.h.clone();
        for l in self.update_set(step) {
            h_new[l - 1] = self.layer_update(&pre_step, l, rng)?;
        }
        let dist = self.recon_distribution(&h_new[0])?;
        let mut x_new = self.sample_visible(&dist, rng);
        if let Some((mask, values)) = clamp {
            for i in 0..x_new.rows() {
                for (j, (&keep, &v)) in mask.iter().zip(values).enumerate() {
                    if keep {
                        x_new.set(i, j, v);
                    }
                }
            }
        }
        Ok((GsnState { x: x_new, h: h_new }, dist))
    }

    fn corruption_kind(&self) -> CorruptKind {
        let p = self.config.input_corruption_p;
        if p == 0.0 {
            return CorruptKind::None;
        }
        match self.config.visible_kind {
            VisibleKind::Binary => CorruptKind::SaltPepper(p),
            VisibleKind::Real => CorruptKind::Gaussian(p),
        }
    }

    /// Unrolls the walkback training graph for a clean batch `x0`: step 0
    /// corrupts `x0`, every step updates the scheduled layers and scores
    /// the reconstruction against the clean `x0`, and resampled visibles
    /// pass through sample-detach nodes so each step's loss trains only
    /// its own continuous path.
    pub fn build_walkback_graph(&self, x0: &Matrix) -> Result<WalkbackGraph> {
        if x0.cols() != self.config.visible_size {
            return Err(Error::Shape(format!(
                "walkback batch has {} columns, model expects {}",
                x0.cols(),
                self.config.visible_size
            )));
        }
        let batch = x0.rows();
        if batch == 0 {
            return Err(Error::Shape("walkback batch is empty".into()));
        }
        let d = self.config.depth();
        let binary = self.config.visible_kind == VisibleKind::Binary;

        let mut g = Graph::new();
        let mut inputs = HashMap::new();
        let x0_in = g.input("x0");
        inputs.insert("x0".to_string(), x0.clone());

        let w: Vec<NodeId> = (1..=d).map(|l| g.parameter(&weight_name(l))).collect();
        let wt: Vec<NodeId> = (1..=d).map(|l| g.parameter(&tied_name(l))).collect();
        let bh: Vec<NodeId> = (1..=d).map(|l| g.parameter(&bias_h_name(l))).collect();
        let bv = g.parameter("bv");

        // Step-0 corruption of the clean input; always applied.
        let mut x_cur = g.sample_detach(x0_in, DetachMode::PassThrough, self.corruption_kind())?;

        let mut h_prev: Vec<NodeId> = Vec::with_capacity(d);
        for l in 1..=d {
            if l == 1 && self.config.h0_from_h1 {
                let a = g.affine(vec![(x_cur, w[0])], Some(bh[0]))?;
                h_prev.push(g.tanh(a)?);
            } else {
                let name = format!("h0_{l}");
                let node = g.input(&name);
                inputs.insert(name, Matrix::zeros(batch, self.config.layer_size(l)));
                h_prev.push(node);
            }
        }

        let mut step_losses = Vec::with_capacity(self.config.walkback_steps);
        let mut recon_nodes = Vec::with_capacity(self.config.walkback_steps);
        for k in 0..self.config.walkback_steps {
            let mut h_new = h_prev.clone();
            for l in self.update_set(k) {
                let mut terms = vec![(
                    if l == 1 { x_cur } else { h_prev[l - 2] },
                    w[l - 1],
                )];
                if l < d {
                    terms.push((h_prev[l], wt[l]));
                }
                let a = g.affine(terms, Some(bh[l - 1]))?;
                let ein = self.config.eta_in[l - 1];
                let pre = if ein > 0.0 { g.add_noise(a, ein)? } else { a };
                let t = g.tanh(pre)?;
                let eout = self.config.eta_out[l - 1];
                h_new[l - 1] = if eout > 0.0 { g.add_noise(t, eout)? } else { t };
            }
            h_prev = h_new;

            let recon_pre = g.affine(vec![(h_prev[0], wt[0])], Some(bv))?;
            let (dist, loss_k) = if binary {
                let p = g.sigmoid(recon_pre)?;
                (p, g.bernoulli_nll(p, x0_in)?)
            } else {
                (recon_pre, g.gaussian_nll(recon_pre, x0_in)?)
            };
            recon_nodes.push(dist);
            step_losses.push(loss_k);

            if k + 1 < self.config.walkback_steps {
                let corrupt = if self.config.corrupt_every_step {
                    self.corruption_kind()
                } else {
                    CorruptKind::None
                };
                let mode = if binary { DetachMode::Bernoulli } else { DetachMode::Gaussian(1.0) };
                x_cur = g.sample_detach(dist, mode, corrupt)?;
            }
        }
        let loss = g.sum_loss(step_losses.clone())?;
        Ok(WalkbackGraph { graph: g, loss, step_losses, recon_nodes, inputs, batch })
    }

    /// Mean walkback loss of a batch under freshly drawn noise; the
    /// training objective as a plain number.
    pub fn walkback_nll(&self, x0: &Matrix, rng: &mut Rng) -> Result<f64> {
        let mut wb = self.build_walkback_graph(x0)?;
        wb.graph.forward(&self.params, &wb.inputs, rng, NoiseMode::Fresh)?;
        wb.mean_loss()
    }

    /// FNV-1a over parameter names and little-endian values in declaration
    /// order; a compact fingerprint for logs and determinism checks.
    pub fn params_checksum(&self) -> u64 {
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                hash ^= b as u64;
                hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        for name in self.params.names().to_vec() {
            eat(name.as_bytes());
            let v = self.params.owner_value(&name).expect("owner names are valid");
            for &x in v.data() {
                eat(&x.to_le_bytes());
            }
        }
        hash
    }

    /// Serializes magic, version, config (JSON), and every owned parameter
    /// in declaration order as little-endian f64; no timestamps or other
    /// environment-dependent bytes, so equal models produce equal files.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        let config = serde_json::to_vec(&self.config)
            .map_err(|e| Error::Format(format!("config serialization failed: {e}")))?;
        out.extend_from_slice(&(config.len() as u32).to_le_bytes());
        out.extend_from_slice(&config);
        out.extend_from_slice(&(self.params.names().len() as u32).to_le_bytes());
        for name in self.params.names() {
            let v = self.params.owner_value(name)?;
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(v.rows() as u32).to_le_bytes());
            out.extend_from_slice(&(v.cols() as u32).to_le_bytes());
            for &x in v.data() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<GsnModel> {
        let mut cur = Cursor { buf: bytes, pos: 0 };
        let magic = cur.take(4, "magic")?;
        if magic != CHECKPOINT_MAGIC {
            return Err(Error::Format(format!(
                "bad checkpoint magic {magic:?}, expected {CHECKPOINT_MAGIC:?}"
            )));
        }
        let version = cur.u32("version")?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!(
                "unsupported checkpoint version {version}, this build reads {CHECKPOINT_VERSION}"
            )));
        }
        let config_len = cur.u32("config length")? as usize;
        let config_bytes = cur.take(config_len, "config")?;
        let config: GsnConfig = serde_json::from_slice(config_bytes)
            .map_err(|e| Error::Format(format!("checkpoint config is not valid JSON: {e}")))?;
        config.validate()?;
        let mut params = empty_store(&config)?;
        let count = cur.u32("parameter count")? as usize;
        let expected = params.names().to_vec();
        if count != expected.len() {
            return Err(Error::Format(format!(
                "checkpoint has {count} parameters, config implies {}",
                expected.len()
            )));
        }
        for want in &expected {
            let name_len = cur.u32("parameter name length")? as usize;
            let name_bytes = cur.take(name_len, "parameter name")?;
            let name = std::str::from_utf8(name_bytes)
                .map_err(|_| Error::Format(format!("parameter name at byte {} is not UTF-8", cur.pos)))?;
            if name != want {
                return Err(Error::Format(format!(
                    "parameter order mismatch: found {name}, expected {want}"
                )));
            }
            let rows = cur.u32("rows")? as usize;
            let cols = cur.u32("cols")? as usize;
            let have = params.owner_value(want)?;
            if rows != have.rows() || cols != have.cols() {
                return Err(Error::Format(format!(
                    "parameter {want}: checkpoint shape {rows}x{cols}, config implies {}x{}",
                    have.rows(),
                    have.cols()
                )));
            }
            let raw = cur.take(rows * cols * 8, "parameter values")?;
            let data: Vec<f64> = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
                .collect();
            params.set(want, Matrix::from_vec(rows, cols, data)?)?;
        }
        if cur.pos != bytes.len() {
            return Err(Error::Format(format!(
                "checkpoint has {} trailing bytes after offset {}",
                bytes.len() - cur.pos,
                cur.pos
            )));
        }
        Ok(GsnModel { config, params })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<GsnModel> {
        GsnModel::from_bytes(&std::fs::read(path)?)
    }
}

fn weight_name(l: usize) -> String {
    format!("W{l}")
}

fn tied_name(l: usize) -> String {
    format!("W{l}_t")
}

fn bias_h_name(l: usize) -> String {
    format!("bh{l}")
}

/// Zero-valued store with the canonical layout: W1..WD, bh1..bhD, bv,
/// plus tied-transpose aliases W1_t..WD_t.
fn empty_store(config: &GsnConfig) -> Result<ParameterStore> {
    let mut s = ParameterStore::new();
    for l in 1..=config.depth() {
        s.add(
            &weight_name(l),
            Matrix::zeros(config.layer_size(l - 1), config.layer_size(l)),
        )?;
    }
    for l in 1..=config.depth() {
        s.add(&bias_h_name(l), Matrix::zeros(1, config.layer_size(l)))?;
    }
    s.add("bv", Matrix::zeros(1, config.visible_size))?;
    for l in 1..=config.depth() {
        s.add_tied_transpose(&tied_name(l), &weight_name(l))?;
    }
    Ok(s)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Format(format!(
                "checkpoint truncated at byte {}: needed {n} bytes for {what}, {} left",
                self.pos,
                self.buf.len() - self.pos
            )));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().expect("slice of 4")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> GsnConfig {
        GsnConfig::new(6, vec![8, 4], 0.5, 0.1, VisibleKind::Binary, 7).unwrap()
    }

    #[test]
    fn config_defaults() {
        let c = small_config();
        assert_eq!(c.walkback_steps, 4);
        assert_eq!(c.eta_in, vec![0.0, 0.5]);
        assert_eq!(c.eta_out, vec![0.0, 0.5]);
        assert!(c.corrupt_every_step);
        assert!(!c.h0_from_h1);
        assert_eq!(c.start_parity, StartParity::Odd);
    }

    #[test]
    fn config_rejects_bad_shapes_and_ranges() {
        assert!(GsnConfig::new(6, vec![], 0.5, 0.1, VisibleKind::Binary, 0).is_err());
        assert!(GsnConfig::new(0, vec![4], 0.5, 0.1, VisibleKind::Binary, 0).is_err());
        // Layer-1 noise is zeroed, so use depth 2 to expose the bad eta.
        assert!(GsnConfig::new(6, vec![4, 4], -0.5, 0.1, VisibleKind::Binary, 0).is_err());
        assert!(GsnConfig::new(6, vec![4], 0.5, 1.5, VisibleKind::Binary, 0).is_err());
        // A corruption std above 1 is fine for real visibles.
        assert!(GsnConfig::new(6, vec![4], 0.5, 1.5, VisibleKind::Real, 0).is_ok());
        let mut c = small_config();
        c.walkback_steps = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn layer1_noise_forced_zero() {
        let mut c = small_config();
        c.eta_in = vec![2.0, 2.0];
        c.eta_out = vec![3.0, 3.0];
        let m = GsnModel::new(c).unwrap();
        assert_eq!(m.config().eta_in[0], 0.0);
        assert_eq!(m.config().eta_out[0], 0.0);
        assert_eq!(m.config().eta_in[1], 2.0);
        assert_eq!(m.config().eta_out[1], 3.0);
    }

    #[test]
    fn model_init_shapes_and_bounds() {
        let m = GsnModel::new(small_config()).unwrap();
        let names: Vec<&str> = m.params().names().iter().map(|s| s.as_str()).collect();
        assert_eq!(names, vec!["W1", "W2", "bh1", "bh2", "bv"]);
        let w1 = m.params().owner_value("W1").unwrap();
        assert_eq!((w1.rows(), w1.cols()), (6, 8));
        let bound = 1.0 / 6.0f64.sqrt();
        assert!(w1.data().iter().all(|&v| v.abs() <= bound));
        assert!(w1.data().iter().any(|&v| v != 0.0));
        let w2 = m.params().owner_value("W2").unwrap();
        assert_eq!((w2.rows(), w2.cols()), (8, 4));
        assert!(m.params().owner_value("bh1").unwrap().data().iter().all(|&v| v == 0.0));
        assert!(m.params().owner_value("bv").unwrap().data().iter().all(|&v| v == 0.0));
        // Tied alias materializes as the transpose.
        let w1t = m.params().value("W1_t").unwrap();
        assert!(w1t.l1_distance(&w1.transpose()).unwrap() < 1e-15);
        // Same seed, same weights; different seed, different weights.
        let m2 = GsnModel::new(small_config()).unwrap();
        assert_eq!(m.params_checksum(), m2.params_checksum());
        let mut c3 = small_config();
        c3.seed = 8;
        assert_ne!(m.params_checksum(), GsnModel::new(c3).unwrap().params_checksum());
    }

    #[test]
    fn update_set_alternates_parity() {
        let mut c = GsnConfig::new(4, vec![3, 3, 3], 0.0, 0.1, VisibleKind::Binary, 1).unwrap();
        let m = GsnModel::new(c.clone()).unwrap();
        assert_eq!(m.update_set(0), vec![1, 3]);
        assert_eq!(m.update_set(1), vec![2]);
        assert_eq!(m.update_set(2), vec![1, 3]);
        c.start_parity = StartParity::Even;
        let m = GsnModel::new(c).unwrap();
        assert_eq!(m.update_set(0), vec![2]);
        assert_eq!(m.update_set(1), vec![1, 3]);
        // Depth 1: no even layers, layer 1 moves every step.
        let d1 = GsnModel::new(GsnConfig::new(4, vec![3], 0.0, 0.1, VisibleKind::Binary, 1).unwrap()).unwrap();
        assert_eq!(d1.update_set(0), vec![1]);
        assert_eq!(d1.update_set(1), vec![1]);
    }

    #[test]
    fn layer_update_matches_recorded_noise_formula() {
        let m = GsnModel::new(small_config()).unwrap();
        let mut rng = Rng::new(5);
        let x = m.random_visible_start(3, &mut rng);
        let mut state = m.init_state(x).unwrap();
        state.h[0] = gaussian_noise(&mut rng, 3, 8, 0.3).unwrap();
        state.h[1] = gaussian_noise(&mut rng, 3, 4, 0.3).unwrap();

        // Layer 2 (noisy): replicate the draws on a twin stream.
        let mut r1 = Rng::new(77);
        let h2 = m.layer_update(&state, 2, &mut r1).unwrap();
        let mut r2 = Rng::new(77);
        let a = state.h[0]
            .matmul(m.params().owner_value("W2").unwrap())
            .unwrap()
            .add_row_broadcast(m.params().owner_value("bh2").unwrap())
            .unwrap();
        let e_in = gaussian_noise(&mut r2, 3, 4, m.config().eta_in[1]).unwrap();
        let e_out = gaussian_noise(&mut r2, 3, 4, m.config().eta_out[1]).unwrap();
        let manual = a.add(&e_in).unwrap().map(f64::tanh).add(&e_out).unwrap();
        assert!(h2.l1_distance(&manual).unwrap() < 1e-12);

        // Layer 1 (noise forced to zero, reads layer 2 top-down).
        let h1 = m.layer_update(&state, 1, &mut r1).unwrap();
        let a1 = state
            .x
            .matmul(m.params().owner_value("W1").unwrap())
            .unwrap()
            .add(&state.h[1].matmul_nt(m.params().owner_value("W2").unwrap()).unwrap())
            .unwrap()
            .add_row_broadcast(m.params().owner_value("bh1").unwrap())
            .unwrap();
        assert!(h1.l1_distance(&a1.map(f64::tanh)).unwrap() < 1e-12);
    }

    #[test]
    fn chain_step_keeps_binary_range_and_moves_scheduled_layers() {
        let m = GsnModel::new(small_config()).unwrap();
        let mut rng = Rng::new(11);
        let state = m.init_state(m.random_visible_start(5, &mut rng)).unwrap();
        let (s1, dist) = m.chain_step(&state, 0, &mut rng).unwrap();
        assert!(s1.x.data().iter().all(|&v| v == 0.0 || v == 1.0));
        assert!(dist.data().iter().all(|&p| (0.0..=1.0).contains(&p)));
        // Step 0 is an odd-layer step: h2 must be untouched.
        assert!(s1.h[1].l1_distance(&state.h[1]).unwrap() < 1e-15);
        assert!(s1.h[0].l1_distance(&state.h[0]).unwrap() > 1e-9);
        let (s2, _) = m.chain_step(&s1, 1, &mut rng).unwrap();
        assert!(s2.h[0].l1_distance(&s1.h[0]).unwrap() < 1e-15);
        // Determinism under a fixed seed.
        let mut ra = Rng::new(3);
        let mut rb = Rng::new(3);
        let (a, _) = m.chain_step(&state, 0, &mut ra).unwrap();
        let (b, _) = m.chain_step(&state, 0, &mut rb).unwrap();
        assert_eq!(a.x.data(), b.x.data());
    }

    #[test]
    fn clamped_chain_step_pins_masked_coordinates() {
        let m = GsnModel::new(small_config()).unwrap();
        let mut rng = Rng::new(2);
        let state = m.init_state(m.random_visible_start(4, &mut rng)).unwrap();
        let mask = [true, false, false, true, false, false];
        let values = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let mut s = GsnState { x: state.x.clone(), h: state.h.clone() };
        for i in 0..s.x.rows() {
            s.x.set(i, 0, 1.0);
            s.x.set(i, 3, 0.0);
        }
        for step in 0..6 {
            let (next, _) = m
                .chain_step_clamped(&s, step, &mut rng, Some((&mask, &values)))
                .unwrap();
            s = next;
            for i in 0..s.x.rows() {
                assert_eq!(s.x.get(i, 0), 1.0);
                assert_eq!(s.x.get(i, 3), 0.0);
            }
        }
    }

    #[test]
    fn corrupt_visible_none_equals_all_false_mask() {
        let m = GsnModel::new(small_config()).unwrap();
        let mut rng = Rng::new(9);
        let x = m.random_visible_start(8, &mut rng);
        let mask = vec![false; 6];
        let mut ra = Rng::new(4);
        let mut rb = Rng::new(4);
        let a = m.corrupt_visible(&x, &mut ra, None).unwrap();
        let b = m.corrupt_visible(&x, &mut rb, Some(&mask)).unwrap();
        assert_eq!(a.data(), b.data());
        assert_eq!(ra.next_u64(), rb.next_u64());
    }

    #[test]
    fn walkback_graph_trains_every_parameter() {
        let m = GsnModel::new(small_config()).unwrap();
        let mut rng = Rng::new(31);
        let x0 = m.random_visible_start(3, &mut rng);
        let mut wb = m.build_walkback_graph(&x0).unwrap();
        assert_eq!(wb.step_losses.len(), 4);
        assert_eq!(wb.recon_nodes.len(), 4);
        let mut store = m.params().clone();
        wb.graph.forward(&store, &wb.inputs, &mut rng, NoiseMode::Fresh).unwrap();
        store.zero_grads();
        wb.graph.backward(&mut store, wb.loss).unwrap();
        for name in ["W1", "W2", "bh1", "bh2", "bv"] {
            let g = store.grad(name).unwrap_or_else(|| panic!("no grad for {name}"));
            assert!(g.data().iter().any(|&v| v != 0.0), "zero grad for {name}");
        }
    }

    #[test]
    fn walkback_untrained_loss_near_coin_flipping() {
        // Fresh weights are tiny, so reconstructions hover near p = 0.5 and
        // the per-step loss per example is close to visible_size * ln 2.
        let m = GsnModel::new(small_config()).unwrap();
        let mut rng = Rng::new(13);
        let x0 = m.random_visible_start(64, &mut rng);
        let nll = m.walkback_nll(&x0, &mut rng).unwrap();
        let coin = 4.0 * 6.0 * std::f64::consts::LN_2;
        assert!((nll - coin).abs() / coin < 0.25, "nll {nll} vs coin bound {coin}");
    }

    #[test]
    fn walkback_finite_difference_spot_check() {
        let mut c = GsnConfig::new(3, vec![4, 3], 0.5, 0.3, VisibleKind::Binary, 21).unwrap();
        c.walkback_steps = 3;
        let m = GsnModel::new(c).unwrap();
        let mut rng = Rng::new(8);
        let x0 = m.random_visible_start(2, &mut rng);
        let mut wb = m.build_walkback_graph(&x0).unwrap();
        let mut store = m.params().clone();
        wb.graph.forward(&store, &wb.inputs, &mut Rng::new(55), NoiseMode::Fresh).unwrap();
        store.zero_grads();
        wb.graph.backward(&mut store, wb.loss).unwrap();

        let h = 1e-5;
        for (name, i, j) in [("W1", 0, 0), ("W2", 1, 2), ("bh2", 0, 0), ("bv", 0, 1)] {
            let analytic = store.grad(name).unwrap().get(i, j);
            let base = store.owner_value(name).unwrap().clone();
            let mut probe = |delta: f64, store: &mut ParameterStore| -> f64 {
                let mut m2 = base.clone();
                m2.set(i, j, base.get(i, j) + delta);
                store.set(name, m2).unwrap();
                wb.graph
                    .forward(store, &wb.inputs, &mut Rng::new(0), NoiseMode::Replay)
                    .unwrap();
                wb.graph.value(wb.loss).unwrap().get(0, 0)
            };
            let lp = probe(h, &mut store);
            let lm = probe(-h, &mut store);
            store.set(name, base).unwrap();
            let fd = (lp - lm) / (2.0 * h);
            let denom = analytic.abs().max(fd.abs()).max(1e-8);
            assert!(
                ((analytic - fd) / denom).abs() < 1e-4,
                "{name}[{i},{j}]: analytic {analytic}, fd {fd}"
            );
        }
    }

    #[test]
    fn real_visibles_walkback_backprops() {
        let c = GsnConfig::new(2, vec![5], 0.0, 0.4, VisibleKind::Real, 3).unwrap();
        let m = GsnModel::new(c).unwrap();
        let mut rng = Rng::new(1);
        let x0 = gaussian_noise(&mut rng, 6, 2, 1.0).unwrap();
        let mut wb = m.build_walkback_graph(&x0).unwrap();
        let mut store = m.params().clone();
        wb.graph.forward(&store, &wb.inputs, &mut rng, NoiseMode::Fresh).unwrap();
        store.zero_grads();
        wb.graph.backward(&mut store, wb.loss).unwrap();
        assert!(store.grad("W1").is_some());
        assert!(wb.mean_loss().unwrap().is_finite());
    }

    #[test]
    fn h0_from_h1_warm_starts_first_layer() {
        let mut c = small_config();
        c.h0_from_h1 = true;
        let m = GsnModel::new(c).unwrap();
        let mut rng = Rng::new(6);
        let x = m.random_visible_start(3, &mut rng);
        let st = m.init_state(x.clone()).unwrap();
        let expect = x
            .matmul(m.params().owner_value("W1").unwrap())
            .unwrap()
            .add_row_broadcast(m.params().owner_value("bh1").unwrap())
            .unwrap()
            .map(f64::tanh);
        assert!(st.h[0].l1_distance(&expect).unwrap() < 1e-15);
        assert!(st.h[1].data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn checkpoint_roundtrip_is_bit_exact() {
        let m = GsnModel::new(small_config()).unwrap();
        let bytes = m.to_bytes().unwrap();
        let loaded = GsnModel::from_bytes(&bytes).unwrap();
        assert_eq!(loaded.to_bytes().unwrap(), bytes);
        assert_eq!(loaded.config(), m.config());
        assert_eq!(loaded.params_checksum(), m.params_checksum());
        // The alias table survives the round trip.
        assert!(loaded.params().value("W2_t").is_ok());
    }

    #[test]
    fn checkpoint_rejects_garbage() {
        let m = GsnModel::new(small_config()).unwrap();
        let good = m.to_bytes().unwrap();

        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        let err = GsnModel::from_bytes(&bad_magic).unwrap_err();
        assert!(err.to_string().contains("magic"), "{err}");

        let mut bad_version = good.clone();
        bad_version[4] = 99;
        let err = GsnModel::from_bytes(&bad_version).unwrap_err();
        assert!(err.to_string().contains("version"), "{err}");

        let err = GsnModel::from_bytes(&good[..good.len() - 9]).unwrap_err();
        assert!(err.to_string().contains("truncated"), "{err}");

        let mut trailing = good.clone();
        trailing.push(0);
        let err = GsnModel::from_bytes(&trailing).unwrap_err();
        assert!(err.to_string().contains("trailing"), "{err}");
    }

    #[test]
    fn checksum_tracks_parameter_changes() {
        let mut m = GsnModel::new(small_config()).unwrap();
        let before = m.params_checksum();
        let mut w = m.params().owner_value("W1").unwrap().clone();
        w.set(0, 0, w.get(0, 0) + 1e-9);
        m.params_mut().set("W1", w).unwrap();
        assert_ne!(before, m.params_checksum());
    }
}
