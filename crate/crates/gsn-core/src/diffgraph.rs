//! Reverse-mode differentiation over a statically built computation graph.
//!
//! Two properties distinguish this from a generic autodiff engine:
//!
//! - Noise-injection nodes (`add-noise`) draw Gaussian noise during the
//!   forward pass, record it, and back-propagate as identity with respect
//!   to their signal parent (the noise is a constant offset).
//! - `sample-detach` nodes pass sampled values forward and block gradients
//!   entirely: the gradient of a binary stochastic unit is zero almost
//!   everywhere, so each unrolled step's loss flows back only through that
//!   step's continuous path.
//!
//! Recorded noise and samples can be replayed (`NoiseMode::Replay`), which
//! freezes the stochastic choices and makes the whole graph a
//! deterministic function of its parameters, which is the basis for
//! finite-difference gradient checking.

use std::collections::HashMap;

use crate::ndnum::{gaussian_noise, salt_and_pepper, Matrix, Rng};
use crate::{Error, Result};

/// Clamp bound for log arguments inside losses; keeps NLL finite for
/// saturated sigmoids without visibly biasing gradients.
pub const LOG_CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

/// How a sample-detach node turns reconstruction parameters into the next
/// visible. All modes record their output and block gradients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetachMode {
    /// Pass the parent value through unchanged before corruption. Used for
    /// the chain's step-0 input, which is corrupted but not resampled.
    PassThrough,
    /// Draw Bernoulli(p) per entry (binary visibles).
    Bernoulli,
    /// Add N(0, std^2) per entry, treating the parent as a mean (real
    /// visibles).
    Gaussian(f64),
}

/// Corruption applied inside a sample-detach node after sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CorruptKind {
    None,
    /// Salt-and-pepper with the given probability (binary visibles).
    SaltPepper(f64),
    /// Additive Gaussian with the given std (real visibles).
    Gaussian(f64),
}

#[derive(Debug, Clone)]
enum Op {
    Input { name: String },
    Parameter { name: String },
    /// sum over terms of x * param, plus optional bias broadcast row.
    Affine { terms: Vec<(NodeId, NodeId)>, bias: Option<NodeId> },
    Tanh { x: NodeId },
    Sigmoid { x: NodeId },
    AddNoise { x: NodeId, sigma: f64 },
    SampleDetach { x: NodeId, mode: DetachMode, corrupt: CorruptKind },
    BernoulliNll { probs: NodeId, target: NodeId },
    GaussianNll { mean: NodeId, target: NodeId },
    SumLoss { terms: Vec<NodeId> },
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    value: Option<Matrix>,
    grad: Option<Matrix>,
    /// AddNoise: the drawn noise. SampleDetach: the emitted output.
    recorded: Option<Matrix>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMode {
    /// Draw fresh noise/samples and record them.
    Fresh,
    /// Reuse the recorded noise/samples from the last fresh pass.
    Replay,
}

/// Named parameters plus tied-transpose aliases. An alias owns no storage:
/// its value is the transpose of its owner's, and gradients routed to it
/// accumulate into the transpose of the owner's gradient.
#[derive(Debug, Clone, Default)]
pub struct ParameterStore {
    order: Vec<String>,
    values: HashMap<String, Matrix>,
    aliases: HashMap<String, String>,
    grads: HashMap<String, Matrix>,
}

impl ParameterStore {
    pub fn new() -> ParameterStore {
        ParameterStore::default()
    }

    pub fn add(&mut self, name: &str, value: Matrix) -> Result<()> {
        if self.values.contains_key(name) || self.aliases.contains_key(name) {
            return Err(Error::Param(format!("parameter {name} already declared")));
        }
        self.order.push(name.to_string());
        self.values.insert(name.to_string(), value);
        Ok(())
    }

    pub fn add_tied_transpose(&mut self, alias: &str, owner: &str) -> Result<()> {
        if !self.values.contains_key(owner) {
            return Err(Error::Param(format!("tied alias {alias}: owner {owner} not declared")));
        }
        if self.values.contains_key(alias) || self.aliases.contains_key(alias) {
            return Err(Error::Param(format!("parameter {alias} already declared")));
        }
        self.aliases.insert(alias.to_string(), owner.to_string());
        Ok(())
    }

    /// Owner names in declaration order (serialization order).
    pub fn names(&self) -> &[String] {
        &self.order
    }

    pub fn contains(&self, name: &str) -> bool {
        self.values.contains_key(name) || self.aliases.contains_key(name)
    }

    /// Materialized value: owners by reference semantics (cloned), aliases
    /// as the owner's transpose.
    pub fn value(&self, name: &str) -> Result<Matrix> {
        if let Some(v) = self.values.get(name) {
            return Ok(v.clone());
        }
        if let Some(owner) = self.aliases.get(name) {
            return Ok(self.values[owner].transpose());
        }
        Err(Error::Param(format!("unknown parameter {name}")))
    }

    pub fn owner_value(&self, name: &str) -> Result<&Matrix> {
        self.values
            .get(name)
            .ok_or_else(|| Error::Param(format!("unknown parameter {name}")))
    }

    pub fn set(&mut self, name: &str, value: Matrix) -> Result<()> {
        let slot = self
            .values
            .get_mut(name)
            .ok_or_else(|| Error::Param(format!("unknown parameter {name}")))?;
        if slot.rows() != value.rows() || slot.cols() != value.cols() {
            return Err(Error::Shape(format!(
                "set {name}: {}x{} replaced by {}x{}",
                slot.rows(),
                slot.cols(),
                value.rows(),
                value.cols()
            )));
        }
        *slot = value;
        Ok(())
    }

    pub fn zero_grads(&mut self) {
        self.grads.clear();
    }

    pub fn grad(&self, name: &str) -> Option<&Matrix> {
        self.grads.get(name)
    }

    /// Accumulates a gradient; alias gradients land in the transpose of
    /// the owner's slot.
    pub fn accumulate_grad(&mut self, name: &str, g: &Matrix) -> Result<()> {
        let (owner, add): (String, Matrix) = if let Some(owner) = self.aliases.get(name) {
            (owner.clone(), g.transpose())
        } else if self.values.contains_key(name) {
            (name.to_string(), g.clone())
        } else {
            return Err(Error::Param(format!("unknown parameter {name}")));
        };
        let shape = {
            let v = &self.values[&owner];
            (v.rows(), v.cols())
        };
        if (add.rows(), add.cols()) != shape {
            return Err(Error::Shape(format!(
                "gradient for {owner}: got {}x{}, parameter is {}x{}",
                add.rows(),
                add.cols(),
                shape.0,
                shape.1
            )));
        }
        match self.grads.get_mut(&owner) {
            Some(slot) => *slot = slot.add(&add)?,
            None => {
                self.grads.insert(owner, add);
            }
        }
        Ok(())
    }
}

/// Statically built computation graph. Nodes may only reference earlier
/// nodes, so the vector order is a topological order and the graph is
/// acyclic by construction.
#[derive(Debug, Clone, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Graph {
        Graph::default()
    }

    fn push(&mut self, op: Op) -> NodeId {
        self.nodes.push(Node { op, value: None, grad: None, recorded: None });
        NodeId(self.nodes.len() - 1)
    }

    fn check_parent(&self, id: NodeId, what: &str) -> Result<()> {
        if id.0 >= self.nodes.len() {
            return Err(Error::Graph(format!("{what}: parent id {} out of range", id.0)));
        }
        Ok(())
    }

    pub fn input(&mut self, name: &str) -> NodeId {
        self.push(Op::Input { name: name.to_string() })
    }

    pub fn parameter(&mut self, name: &str) -> NodeId {
        self.push(Op::Parameter { name: name.to_string() })
    }

    /// `sum_i terms[i].0 * terms[i].1 (+ bias)`; the second element of each
    /// term and the bias must be parameter nodes.
    pub fn affine(&mut self, terms: Vec<(NodeId, NodeId)>, bias: Option<NodeId>) -> Result<NodeId> {
        if terms.is_empty() {
            return Err(Error::Graph("affine: no terms".into()));
        }
        for &(x, w) in &terms {
            self.check_parent(x, "affine")?;
            self.check_parent(w, "affine")?;
            if !matches!(self.nodes[w.0].op, Op::Parameter { .. }) {
                return Err(Error::Graph("affine: weight argument must be a parameter node".into()));
            }
        }
        if let Some(b) = bias {
            self.check_parent(b, "affine")?;
            if !matches!(self.nodes[b.0].op, Op::Parameter { .. }) {
                return Err(Error::Graph("affine: bias argument must be a parameter node".into()));
            }
        }
        Ok(self.push(Op::Affine { terms, bias }))
    }

    pub fn tanh(&mut self, x: NodeId) -> Result<NodeId> {
        self.check_parent(x, "tanh")?;
        Ok(self.push(Op::Tanh { x }))
    }

    pub fn sigmoid(&mut self, x: NodeId) -> Result<NodeId> {
        self.check_parent(x, "sigmoid")?;
        Ok(self.push(Op::Sigmoid { x }))
    }

    pub fn add_noise(&mut self, x: NodeId, sigma: f64) -> Result<NodeId> {
        self.check_parent(x, "add_noise")?;
        if sigma < 0.0 {
            return Err(Error::Param(format!("add_noise: sigma {sigma} < 0")));
        }
        Ok(self.push(Op::AddNoise { x, sigma }))
    }

    pub fn sample_detach(&mut self, x: NodeId, mode: DetachMode, corrupt: CorruptKind) -> Result<NodeId> {
        self.check_parent(x, "sample_detach")?;
        Ok(self.push(Op::SampleDetach { x, mode, corrupt }))
    }

    /// Scalar node: `-sum [t log p + (1-t) log(1-p)]`, p clamped to
    /// [LOG_CLAMP, 1-LOG_CLAMP].
    pub fn bernoulli_nll(&mut self, probs: NodeId, target: NodeId) -> Result<NodeId> {
        self.check_parent(probs, "bernoulli_nll")?;
        self.check_parent(target, "bernoulli_nll")?;
        Ok(self.push(Op::BernoulliNll { probs, target }))
    }

    /// Scalar node: unit-variance Gaussian NLL, `0.5 sum (mean-t)^2` plus
    /// the log-normalization constant.
    pub fn gaussian_nll(&mut self, mean: NodeId, target: NodeId) -> Result<NodeId> {
        self.check_parent(mean, "gaussian_nll")?;
        self.check_parent(target, "gaussian_nll")?;
        Ok(self.push(Op::GaussianNll { mean, target }))
    }

    pub fn sum_loss(&mut self, terms: Vec<NodeId>) -> Result<NodeId> {
        if terms.is_empty() {
            return Err(Error::Graph("sum_loss: no terms".into()));
        }
        for &t in &terms {
            self.check_parent(t, "sum_loss")?;
        }
        Ok(self.push(Op::SumLoss { terms }))
    }

    pub fn value(&self, id: NodeId) -> Result<&Matrix> {
        self.nodes[id.0]
            .value
            .as_ref()
            .ok_or_else(|| Error::State(format!("node {} has no value; run forward first", id.0)))
    }

    /// Recorded noise or sample of a stochastic node after a fresh pass.
    pub fn recorded(&self, id: NodeId) -> Result<&Matrix> {
        self.nodes[id.0]
            .recorded
            .as_ref()
            .ok_or_else(|| Error::State(format!("node {} has nothing recorded", id.0)))
    }

    pub fn forward(
        &mut self,
        store: &ParameterStore,
        inputs: &HashMap<String, Matrix>,
        rng: &mut Rng,
        mode: NoiseMode,
    ) -> Result<()> {
        for idx in 0..self.nodes.len() {
            let value = match self.nodes[idx].op.clone() {
                Op::Input { name } => inputs
                    .get(&name)
                    .cloned()
                    .ok_or_else(|| Error::Graph(format!("unbound input {name}")))?,
                Op::Parameter { name } => store.value(&name)?,
                Op::Affine { terms, bias } => {
                    let mut acc: Option<Matrix> = None;
                    for (x, w) in terms {
                        let prod = self.node_value(x)?.matmul(self.node_value(w)?)?;
                        acc = Some(match acc {
                            None => prod,
                            Some(a) => a.add(&prod)?,
                        });
                    }
                    let acc = acc.expect("affine terms nonempty");
                    match bias {
                        Some(b) => acc.add_row_broadcast(self.node_value(b)?)?,
                        None => acc,
                    }
                }
                Op::Tanh { x } => self.node_value(x)?.map(f64::tanh),
                Op::Sigmoid { x } => self.node_value(x)?.map(sigmoid_scalar),
                Op::AddNoise { x, sigma } => {
                    let x_val = self.node_value(x)?.clone();
                    let noise = match mode {
                        NoiseMode::Fresh => {
                            let n = gaussian_noise(rng, x_val.rows(), x_val.cols(), sigma)?;
                            self.nodes[idx].recorded = Some(n.clone());
                            n
                        }
                        NoiseMode::Replay => self.nodes[idx]
                            .recorded
                            .clone()
                            .ok_or_else(|| Error::State("replay without recorded noise".into()))?,
                    };
                    x_val.add(&noise)?
                }
                Op::SampleDetach { x, mode: dmode, corrupt } => {
                    let parent = self.node_value(x)?.clone();
                    match mode {
                        NoiseMode::Fresh => {
                            let sampled = match dmode {
                                DetachMode::PassThrough => parent,
                                DetachMode::Bernoulli => parent.map_with_rng(rng, |p, r| {
                                    if r.next_bernoulli(p) {
                                        1.0
                                    } else {
                                        0.0
                                    }
                                }),
                                DetachMode::Gaussian(std) => {
                                    let n = gaussian_noise(rng, parent.rows(), parent.cols(), std)?;
                                    parent.add(&n)?
                                }
                            };
                            let out = match corrupt {
                                CorruptKind::None => sampled,
                                CorruptKind::SaltPepper(p) => salt_and_pepper(rng, &sampled, p)?,
                                CorruptKind::Gaussian(s) => {
                                    let n = gaussian_noise(rng, sampled.rows(), sampled.cols(), s)?;
                                    sampled.add(&n)?
                                }
                            };
                            self.nodes[idx].recorded = Some(out.clone());
                            out
                        }
                        NoiseMode::Replay => self.nodes[idx]
                            .recorded
                            .clone()
                            .ok_or_else(|| Error::State("replay without recorded sample".into()))?,
                    }
                }
                Op::BernoulliNll { probs, target } => {
                    let p = self.node_value(probs)?;
                    let t = self.node_value(target)?;
                    Matrix::from_vec(1, 1, vec![bernoulli_nll_value(p, t)?])?
                }
                Op::GaussianNll { mean, target } => {
                    let m = self.node_value(mean)?;
                    let t = self.node_value(target)?;
                    Matrix::from_vec(1, 1, vec![gaussian_nll_value(m, t)?])?
                }
                Op::SumLoss { terms } => {
                    let mut s = 0.0;
                    for t in terms {
                        let v = self.node_value(t)?;
                        if v.rows() != 1 || v.cols() != 1 {
                            return Err(Error::Shape("sum_loss: term is not scalar".into()));
                        }
                        s += v.get(0, 0);
                    }
                    Matrix::from_vec(1, 1, vec![s])?
                }
            };
            self.nodes[idx].value = Some(value);
            self.nodes[idx].grad = None;
        }
        Ok(())
    }

    fn node_value(&self, id: NodeId) -> Result<&Matrix> {
        self.nodes[id.0]
            .value
            .as_ref()
            .ok_or_else(|| Error::Graph(format!("node {} evaluated before its parent", id.0)))
    }

    /// Back-propagates from a scalar loss node, accumulating parameter
    /// gradients into the store (tied transposes routed to their owners,
    /// recorded noise treated as constant).
    pub fn backward(&mut self, store: &mut ParameterStore, loss: NodeId) -> Result<()> {
        self.check_parent(loss, "backward")?;
        {
            let lv = self.nodes[loss.0]
                .value
                .as_ref()
                .ok_or_else(|| Error::State("backward before forward".into()))?;
            if lv.rows() != 1 || lv.cols() != 1 {
                return Err(Error::Shape("backward: loss node is not scalar".into()));
            }
        }
        for n in &mut self.nodes {
            n.grad = None;
        }
        self.nodes[loss.0].grad = Some(Matrix::from_vec(1, 1, vec![1.0])?);

        for idx in (0..self.nodes.len()).rev() {
            let Some(out_grad) = self.nodes[idx].grad.clone() else {
                continue;
            };
            match self.nodes[idx].op.clone() {
                Op::Input { .. } | Op::Parameter { .. } => {}
                Op::Affine { terms, bias } => {
                    for (x, w) in terms {
                        let w_val = self.node_value(w)?.clone();
                        let x_val = self.node_value(x)?.clone();
                        let dx = out_grad.matmul_nt(&w_val)?;
                        self.add_grad(x, dx)?;
                        let dw = x_val.matmul_tn(&out_grad)?;
                        self.add_grad(w, dw)?;
                    }
                    if let Some(b) = bias {
                        self.add_grad(b, out_grad.sum_rows())?;
                    }
                }
                Op::Tanh { x } => {
                    let y = self.node_value(NodeId(idx))?.clone();
                    let dx = out_grad.hadamard(&y.map(|v| 1.0 - v * v))?;
                    self.add_grad(x, dx)?;
                }
                Op::Sigmoid { x } => {
                    let y = self.node_value(NodeId(idx))?.clone();
                    let dx = out_grad.hadamard(&y.map(|v| v * (1.0 - v)))?;
                    self.add_grad(x, dx)?;
                }
                Op::AddNoise { x, .. } => {
                    self.add_grad(x, out_grad)?;
                }
                Op::SampleDetach { .. } => {
                    // Gradients blocked by definition.
                }
                Op::BernoulliNll { probs, target } => {
                    let g = out_grad.get(0, 0);
                    let p = self.node_value(probs)?.clone();
                    let t = self.node_value(target)?.clone();
                    let mut dp = Matrix::zeros(p.rows(), p.cols());
                    for i in 0..p.rows() {
                        for j in 0..p.cols() {
                            let raw = p.get(i, j);
                            // Entries pushed into the clamp are constants of
                            // the clamped loss; their gradient is zero.
                            if raw <= LOG_CLAMP || raw >= 1.0 - LOG_CLAMP {
                                continue;
                            }
                            let tv = t.get(i, j);
                            dp.set(i, j, g * (-(tv / raw) + (1.0 - tv) / (1.0 - raw)));
                        }
                    }
                    self.add_grad(probs, dp)?;
                }
                Op::GaussianNll { mean, target } => {
                    let g = out_grad.get(0, 0);
                    let m = self.node_value(mean)?.clone();
                    let t = self.node_value(target)?.clone();
                    let dm = m.sub(&t)?.scale(g);
                    self.add_grad(mean, dm)?;
                }
                Op::SumLoss { terms } => {
                    for t in terms {
                        self.add_grad(t, out_grad.clone())?;
                    }
                }
            }
        }

        for idx in 0..self.nodes.len() {
            if let Op::Parameter { name } = &self.nodes[idx].op {
                if let Some(g) = &self.nodes[idx].grad {
                    let name = name.clone();
                    let g = g.clone();
                    store.accumulate_grad(&name, &g)?;
                }
            }
        }
        Ok(())
    }

    fn add_grad(&mut self, id: NodeId, g: Matrix) -> Result<()> {
        match &mut self.nodes[id.0].grad {
            Some(slot) => *slot = slot.add(&g)?,
            slot @ None => *slot = Some(g),
        }
        Ok(())
    }

    /// Gradient of an arbitrary node after backward (None if no gradient
    /// reached it, e.g. behind a sample-detach).
    pub fn node_grad(&self, id: NodeId) -> Option<&Matrix> {
        self.nodes[id.0].grad.as_ref()
    }
}

pub(crate) fn sigmoid_scalar(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

/// Direct Bernoulli NLL with the standard clamp; shared by the graph node
/// and callers needing the plain number.
pub fn bernoulli_nll_value(probs: &Matrix, target: &Matrix) -> Result<f64> {
    if probs.rows() != target.rows() || probs.cols() != target.cols() {
        return Err(Error::Shape(format!(
            "bernoulli_nll: probs {}x{} vs target {}x{}",
            probs.rows(),
            probs.cols(),
            target.rows(),
            target.cols()
        )));
    }
    let mut loss = 0.0;
    for (&p, &t) in probs.data().iter().zip(target.data()) {
        let pc = p.clamp(LOG_CLAMP, 1.0 - LOG_CLAMP);
        loss -= t * pc.ln() + (1.0 - t) * (1.0 - pc).ln();
    }
    Ok(loss)
}

/// Unit-variance Gaussian NLL: `0.5 sum (m-t)^2 + 0.5 n log(2 pi)`.
pub fn gaussian_nll_value(mean: &Matrix, target: &Matrix) -> Result<f64> {
    if mean.rows() != target.rows() || mean.cols() != target.cols() {
        return Err(Error::Shape(format!(
            "gaussian_nll: mean {}x{} vs target {}x{}",
            mean.rows(),
            mean.cols(),
            target.rows(),
            target.cols()
        )));
    }
    let n = mean.data().len() as f64;
    let sq: f64 = mean
        .data()
        .iter()
        .zip(target.data())
        .map(|(&m, &t)| (m - t) * (m - t))
        .sum();
    Ok(0.5 * sq + 0.5 * n * (2.0 * std::f64::consts::PI).ln())
}

impl Matrix {
    /// Entry-wise map with access to the rng (sampling helpers).
    pub(crate) fn map_with_rng(&self, rng: &mut Rng, f: impl Fn(f64, &mut Rng) -> f64) -> Matrix {
        let mut out = self.clone();
        for v in out.data_mut() {
            *v = f(*v, rng);
        }
        out
    }
}
