//! Deep Modularity Networks.
//!
//! A single message-passing layer with a trainable skip path,
//!
//! ```text
//! H = SeLU(Ã X W + X W_skip)
//! C = softmax(dropout(H) W_out + b)
//! ```
//!
//! trained without labels by minimizing
//!
//! ```text
//! L = -tr(Cᵀ B C) / 2m  +  (√k / n) ‖Σ_i C_i‖ - 1
//! ```
//!
//! where `B = A - d dᵀ / 2m` is never materialized: `tr(Cᵀ B C)` is
//! evaluated as `tr(Cᵀ (A C)) - ‖dᵀ C‖² / 2m`.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{spmm, NormalizedAdjacency, SparseGraph};
use crate::io;
use crate::metrics::HardPartition;
use crate::nn::{self, AdamState, DenseMatrix, Mode};

/// Row-stochastic `n × k` soft cluster membership matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftAssignment(DenseMatrix);

impl SoftAssignment {
    pub fn new(c: DenseMatrix) -> Result<Self> {
        for (i, row) in c.rows().into_iter().enumerate() {
            if row.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                return Err(Error::Numerical(format!(
                    "row {i} has entries outside [0, 1]"
                )));
            }
            let sum = row.sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Numerical(format!("row {i} sums to {sum}")));
            }
        }
        Ok(SoftAssignment(c))
    }

    pub fn from_logits(logits: ArrayView2<'_, f64>) -> Self {
        SoftAssignment(nn::softmax_rows(logits))
    }

    /// One-hot encoding of a hard partition.
    pub fn one_hot(p: &HardPartition) -> Self {
        let mut c = Array2::zeros((p.len(), p.num_clusters()));
        for (i, &cluster) in p.assignments().iter().enumerate() {
            c[[i, cluster]] = 1.0;
        }
        SoftAssignment(c)
    }

    pub fn uniform(n: usize, k: usize) -> Self {
        SoftAssignment(Array2::from_elem((n, k), 1.0 / k as f64))
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.0
    }

    pub fn num_nodes(&self) -> usize {
        self.0.nrows()
    }

    pub fn num_clusters(&self) -> usize {
        self.0.ncols()
    }

    /// Cluster sizes, `Σ_i C_i`.
    pub fn soft_sizes(&self) -> Vec<f64> {
        self.0.sum_axis(Axis(0)).to_vec()
    }
}

/// Per-row argmax; ties go to the lowest cluster index.
pub fn harden(c: &SoftAssignment) -> HardPartition {
    let assignments = c
        .matrix()
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect();
    HardPartition::new(assignments, c.num_clusters().max(1))
        .expect("argmax is always below the column count")
}

/// Modularity part of the objective, `-tr(Cᵀ B C) / 2m`, and its gradient
/// with respect to `C`.
pub fn modularity_loss(g: &SparseGraph, c: &SoftAssignment) -> Result<(f64, DenseMatrix)> {
    if g.num_edges() == 0 {
        return Err(Error::UndefinedMetric(
            "modularity loss on a graph without edges",
        ));
    }
    if c.num_nodes() != g.num_nodes() {
        return Err(Error::Shape(format!(
            "assignment has {} rows for {} nodes",
            c.num_nodes(),
            g.num_nodes()
        )));
    }
    let two_m = 2.0 * g.num_edges() as f64;
    let cm = c.matrix();
    let ac = spmm(g, cm.view())?;
    let degrees = ndarray::ArrayView1::from(g.degrees());
    // dᵀC, length k
    let degree_sums = cm.t().dot(&degrees);
    let trace_ac = (&ac * cm).sum();
    let rank_one = degree_sums.dot(&degree_sums) / two_m;
    let value = -(trace_ac - rank_one) / two_m;

    let outer = degrees
        .insert_axis(Axis(1))
        .dot(&degree_sums.view().insert_axis(Axis(0)));
    let grad = (ac * 2.0 - outer * (2.0 / two_m)) * (-1.0 / two_m);
    Ok((value, grad))
}

/// `(√k / n) ‖Σ_i C_i‖₂ - 1` and its gradient with respect to `C`.
/// Zero for perfectly balanced clusters, `√k - 1` when all mass sits in one.
pub fn collapse_regularizer(c: &SoftAssignment) -> Result<(f64, DenseMatrix)> {
    let (n, k) = c.matrix().dim();
    let sizes = c.matrix().sum_axis(Axis(0));
    let norm = sizes.dot(&sizes).sqrt();
    if norm == 0.0 {
        return Err(Error::Numerical("all cluster sizes are zero".into()));
    }
    let scale = (k as f64).sqrt() / n as f64;
    let row_grad = sizes.mapv(|s| scale * s / norm);
    let grad = row_grad
        .insert_axis(Axis(0))
        .broadcast((n, k))
        .expect("row broadcast")
        .to_owned();
    Ok((scale * norm - 1.0, grad))
}

/// `‖CᵀC - I‖_F`. Logged for comparison, never optimized.
pub fn orthogonality_diagnostic(c: &SoftAssignment) -> f64 {
    let gram = c.matrix().t().dot(c.matrix());
    gram.indexed_iter()
        .map(|((i, j), &v)| {
            let target = if i == j { 1.0 } else { 0.0 };
            (v - target).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub modularity_term: f64,
    pub collapse_term: f64,
    pub orthogonality: Option<f64>,
}

/// Full objective and its gradient with respect to `C`.
pub fn loss(g: &SparseGraph, c: &SoftAssignment) -> Result<(LossBreakdown, DenseMatrix)> {
    let (modularity_term, grad_mod) = modularity_loss(g, c)?;
    let (collapse_term, grad_collapse) = collapse_regularizer(c)?;
    Ok((
        LossBreakdown {
            total: modularity_term + collapse_term,
            modularity_term,
            collapse_term,
            orthogonality: Some(orthogonality_diagnostic(c)),
        },
        grad_mod + grad_collapse,
    ))
}

/// Node features together with their one-hop aggregate `Ã X`, which does
/// not depend on the parameters and is computed once.
#[derive(Debug, Clone)]
pub struct Propagated {
    features: DenseMatrix,
    aggregated: DenseMatrix,
}

impl Propagated {
    pub fn new(adj: &NormalizedAdjacency, features: DenseMatrix) -> Result<Self> {
        nn::check_finite(features.view(), "node features")?;
        let aggregated = spmm(adj, features.view())?;
        Ok(Propagated {
            features,
            aggregated,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.features.nrows()
    }

    pub fn num_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &DenseMatrix {
        &self.features
    }
}

/// Trainable parameters and architecture hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmonModel {
    pub gcn_weight: DenseMatrix,
    pub skip_weight: DenseMatrix,
    pub out_weight: DenseMatrix,
    /// `1 × k` bias row.
    pub out_bias: DenseMatrix,
    pub dropout_rate: f64,
}

/// Intermediate values of one forward pass, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub assignment: SoftAssignment,
    pre_activation: DenseMatrix,
    hidden: DenseMatrix,
    dropout_mask: Option<DenseMatrix>,
}

/// Gradients in the same layout as [`DmonModel`]'s parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub gcn_weight: DenseMatrix,
    pub skip_weight: DenseMatrix,
    pub out_weight: DenseMatrix,
    pub out_bias: DenseMatrix,
}

impl DmonModel {
    /// Glorot-uniform weights and zero bias.
    pub fn new<R: Rng + ?Sized>(
        num_features: usize,
        hidden: usize,
        k: usize,
        dropout_rate: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if k < 2 {
            return Err(Error::Config(format!("need at least 2 clusters, got {k}")));
        }
        if hidden == 0 || num_features == 0 {
            return Err(Error::Config(
                "hidden width and feature count must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&dropout_rate) {
            return Err(Error::Config(format!(
                "dropout rate {dropout_rate} outside [0, 1)"
            )));
        }
        Ok(DmonModel {
            gcn_weight: nn::glorot_uniform(num_features, hidden, rng),
            skip_weight: nn::glorot_uniform(num_features, hidden, rng),
            out_weight: nn::glorot_uniform(hidden, k, rng),
            out_bias: Array2::zeros((1, k)),
            dropout_rate,
        })
    }

    pub fn num_features(&self) -> usize {
        self.gcn_weight.nrows()
    }

    pub fn hidden(&self) -> usize {
        self.gcn_weight.ncols()
    }

    pub fn num_clusters(&self) -> usize {
        self.out_weight.ncols()
    }

    pub fn parameters(&self) -> [&DenseMatrix; 4] {
        [
            &self.gcn_weight,
            &self.skip_weight,
            &self.out_weight,
            &self.out_bias,
        ]
    }

    pub fn parameters_mut(&mut self) -> [&mut DenseMatrix; 4] {
        [
            &mut self.gcn_weight,
            &mut self.skip_weight,
            &mut self.out_weight,
            &mut self.out_bias,
        ]
    }

    fn check_shapes(&self) -> Result<()> {
        let (s, h, k) = (self.num_features(), self.hidden(), self.num_clusters());
        if self.skip_weight.dim() != (s, h)
            || self.out_weight.nrows() != h
            || self.out_bias.dim() != (1, k)
        {
            return Err(Error::Shape("inconsistent model parameter shapes".into()));
        }
        Ok(())
    }

    pub fn forward<R: Rng + ?Sized>(
        &self,
        inputs: &Propagated,
        mode: Mode,
        rng: &mut R,
    ) -> Result<ForwardPass> {
        self.check_shapes()?;
        if inputs.num_features() != self.num_features() {
            return Err(Error::Shape(format!(
                "model expects {} features, input has {}",
                self.num_features(),
                inputs.num_features()
            )));
        }
        let pre_activation =
            inputs.aggregated.dot(&self.gcn_weight) + inputs.features.dot(&self.skip_weight);
        nn::check_finite(pre_activation.view(), "message-passing layer")?;
        let hidden = nn::selu(pre_activation.view());
        let (dropped, dropout_mask) = nn::dropout(hidden.view(), self.dropout_rate, mode, rng)?;
        let logits = dropped.dot(&self.out_weight) + &self.out_bias;
        nn::check_finite(logits.view(), "cluster logits")?;
        Ok(ForwardPass {
            assignment: SoftAssignment::from_logits(logits.view()),
            pre_activation,
            hidden,
            dropout_mask,
        })
    }

    /// Soft assignment in evaluation mode (no dropout).
    pub fn predict(&self, inputs: &Propagated) -> Result<SoftAssignment> {
        // eval mode never draws from the rng
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        Ok(self.forward(inputs, Mode::Eval, &mut rng)?.assignment)
    }

    /// Reverse pass from `dL/dC` to parameter gradients.
    pub fn backward(
        &self,
        inputs: &Propagated,
        pass: &ForwardPass,
        grad_assignment: ArrayView2<'_, f64>,
    ) -> Result<Gradients> {
        let grad_logits =
            nn::softmax_rows_backward(pass.assignment.matrix().view(), grad_assignment)?;
        let dropped = match &pass.dropout_mask {
            Some(mask) => &pass.hidden * mask,
            None => pass.hidden.clone(),
        };
        let out_weight = dropped.t().dot(&grad_logits);
        let out_bias = nn::column_sums(grad_logits.view());
        let grad_dropped = grad_logits.dot(&self.out_weight.t());
        let grad_hidden = nn::dropout_backward(grad_dropped.view(), pass.dropout_mask.as_ref());
        let grad_pre = nn::selu_backward(pass.pre_activation.view(), grad_hidden.view())?;
        Ok(Gradients {
            gcn_weight: inputs.aggregated.t().dot(&grad_pre),
            skip_weight: inputs.features.t().dot(&grad_pre),
            out_weight,
            out_bias,
        })
    }

    /// Forward, objective and backward in one call.
    pub fn objective_and_gradients<R: Rng + ?Sized>(
        &self,
        graph: &SparseGraph,
        inputs: &Propagated,
        mode: Mode,
        rng: &mut R,
    ) -> Result<(LossBreakdown, Gradients, SoftAssignment)> {
        if graph.num_nodes() != inputs.num_nodes() {
            return Err(Error::Shape(format!(
                "graph has {} nodes, features have {} rows",
                graph.num_nodes(),
                inputs.num_nodes()
            )));
        }
        let pass = self.forward(inputs, mode, rng)?;
        let (breakdown, grad_c) = loss(graph, &pass.assignment)?;
        let grads = self.backward(inputs, &pass, grad_c.view())?;
        Ok((breakdown, grads, pass.assignment))
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let tensor = |name: &str, m: &DenseMatrix| NamedTensor {
            name: name.to_string(),
            shape: [m.nrows(), m.ncols()],
            data: m.iter().copied().collect(),
        };
        Checkpoint {
            dropout_rate: self.dropout_rate,
            tensors: vec![
                tensor("gcn_weight", &self.gcn_weight),
                tensor("skip_weight", &self.skip_weight),
                tensor("out_weight", &self.out_weight),
                tensor("out_bias", &self.out_bias),
            ],
        }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let get = |name: &str| -> Result<DenseMatrix> {
            let t = ckpt
                .tensors
                .iter()
                .find(|t| t.name == name)
                .ok_or_else(|| Error::Config(format!("checkpoint lacks tensor `{name}`")))?;
            Array2::from_shape_vec((t.shape[0], t.shape[1]), t.data.clone())
                .map_err(|e| Error::Shape(format!("tensor `{name}`: {e}")))
        };
        let model = DmonModel {
            gcn_weight: get("gcn_weight")?,
            skip_weight: get("skip_weight")?,
            out_weight: get("out_weight")?,
            out_bias: get("out_bias")?,
            dropout_rate: ckpt.dropout_rate,
        };
        model.check_shapes()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let json = serde_json::to_string(&self.to_checkpoint())?;
        io::write_string(path.as_ref(), &json)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = io::read_string(path.as_ref())?;
        Self::from_checkpoint(&serde_json::from_str(&text)?)
    }
}

/// Row-major weight array with its shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub shape: [usize; 2],
    pub data: Vec<f64>,
}

/// JSON model checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub dropout_rate: f64,
    pub tensors: Vec<NamedTensor>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Seeds the dropout stream.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            learning_rate: 1e-3,
            seed: 0,
        }
    }
}

/// Full-graph Adam training. Returns the objective recorded at every epoch
/// (before that epoch's update).
pub fn train(
    model: &mut DmonModel,
    graph: &SparseGraph,
    inputs: &Propagated,
    config: &TrainConfig,
) -> Result<Vec<LossBreakdown>> {
    let shapes: Vec<(usize, usize)> = model.parameters().iter().map(|p| p.dim()).collect();
    let mut adam = AdamState::new(&shapes, config.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let diverged = |e: Error| Error::Diverged {
            epoch,
            msg: e.to_string(),
        };
        let (breakdown, grads, _) = model
            .objective_and_gradients(graph, inputs, Mode::Train, &mut rng)
            .map_err(|e| match e {
                Error::Numerical(_) => diverged(e),
                other => other,
            })?;
        if !breakdown.total.is_finite() {
            return Err(Error::Diverged {
                epoch,
                msg: format!("objective is {}", breakdown.total),
            });
        }
        let grad_refs = [
            &grads.gcn_weight,
            &grads.skip_weight,
            &grads.out_weight,
            &grads.out_bias,
        ];
        adam.step(&mut model.parameters_mut(), &grad_refs)
            .map_err(diverged)?;
        history.push(breakdown);
        log::debug!(
            "epoch {epoch}: total {:.5} modularity {:.5} collapse {:.5}",
            breakdown.total,
            breakdown.modularity_term,
            breakdown.collapse_term
        );
    }
    Ok(history)
}

pub const LOSS_HISTORY_HEADER: &str = "epoch,total,modularity_term,collapse_term,orthogonality";

pub fn loss_history_csv(history: &[LossBreakdown]) -> String {
    let mut out = format!("{LOSS_HISTORY_HEADER}\n");
    for (epoch, b) in history.iter().enumerate() {
        let ortho = b.orthogonality.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{epoch},{},{},{},{ortho}",
            b.total, b.modularity_term, b.collapse_term
        );
    }
    out
}
