//! Minimal reverse-mode automatic differentiation over flat `f64` buffers.
//!
//! The tape records layer-granular operations: each node stores its value,
//! its input node ids, and a boxed [`TapeOp`] that knows the analytic
//! vector-Jacobian product. Complex tensors live on the tape as interleaved
//! `(re, im)` pairs, so every trainable quantity is a plain real vector and
//! gradients are checkable coordinate-by-coordinate with finite differences.
//!
//! Gradient accumulation follows fixed node order, so backward sweeps are
//! deterministic.

use std::collections::HashMap;

use crate::{Error, Result};

/// Identifier of a trainable parameter inside a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub usize);

/// Named trainable vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub data: Vec<f64>,
}

/// Ordered collection of trainable parameters. Registration order is the
/// canonical parameter order used by the optimizer and checkpoints.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    entries: Vec<Param>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, name: impl Into<String>, data: Vec<f64>) -> ParamId {
        self.entries.push(Param {
            name: name.into(),
            data,
        });
        ParamId(self.entries.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn param(&self, id: ParamId) -> &Param {
        &self.entries[id.0]
    }

    pub fn data(&self, id: ParamId) -> &[f64] {
        &self.entries[id.0].data
    }

    pub fn data_mut(&mut self, id: ParamId) -> &mut Vec<f64> {
        &mut self.entries[id.0].data
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Param)> {
        self.entries
            .iter()
            .enumerate()
            .map(|(i, p)| (ParamId(i), p))
    }

    pub fn total_len(&self) -> usize {
        self.entries.iter().map(|p| p.data.len()).sum()
    }
}

/// Node handle on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(pub usize);

/// An operation recorded on the tape. `backward` receives the saved input
/// values, the node's output value, and the incoming output gradient; it
/// returns one gradient buffer per input (`None` marks an input that needs
/// no gradient). Returning buffers instead of writing in place keeps
/// duplicate inputs (e.g. `add(x, x)`) correct.
pub trait TapeOp: Send + Sync {
    fn name(&self) -> &'static str;
    fn backward(
        &self,
        inputs: &[&[f64]],
        output: &[f64],
        out_grad: &[f64],
    ) -> Vec<Option<Vec<f64>>>;
}

struct Node {
    value: Vec<f64>,
    inputs: Vec<NodeId>,
    op: Option<Box<dyn TapeOp>>,
    param: Option<ParamId>,
}

/// Reverse-mode tape: append-only list of nodes in topological order.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Leaf carrying non-trainable data.
    pub fn data(&mut self, value: Vec<f64>) -> NodeId {
        self.nodes.push(Node {
            value,
            inputs: Vec::new(),
            op: None,
            param: None,
        });
        NodeId(self.nodes.len() - 1)
    }

    /// Leaf carrying the current value of a trainable parameter.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> NodeId {
        self.nodes.push(Node {
            value: store.data(id).to_vec(),
            inputs: Vec::new(),
            op: None,
            param: Some(id),
        });
        NodeId(self.nodes.len() - 1)
    }

    /// Records an operation node. Called by the wrappers in [`crate::ops`].
    pub fn push(&mut self, value: Vec<f64>, inputs: Vec<NodeId>, op: Box<dyn TapeOp>) -> NodeId {
        debug_assert!(inputs.iter().all(|i| i.0 < self.nodes.len()));
        self.nodes.push(Node {
            value,
            inputs,
            op: Some(op),
            param: None,
        });
        NodeId(self.nodes.len() - 1)
    }

    pub fn value(&self, id: NodeId) -> &[f64] {
        &self.nodes[id.0].value
    }

    pub fn scalar(&self, id: NodeId) -> f64 {
        debug_assert_eq!(self.nodes[id.0].value.len(), 1);
        self.nodes[id.0].value[0]
    }

    /// Reverse sweep from a real scalar loss node. Returns per-node and
    /// per-parameter gradients; parameters that do not influence the loss
    /// get exactly zero.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients> {
        if loss.0 >= self.nodes.len() {
            return Err(Error::DetachedNode { node: loss.0 });
        }
        let loss_len = self.nodes[loss.0].value.len();
        if loss_len != 1 {
            return Err(Error::LossNotScalar { len: loss_len });
        }
        let mut grads: Vec<Option<Vec<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(vec![1.0]);
        for idx in (0..self.nodes.len()).rev() {
            let Some(out_grad) = grads[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            if let Some(op) = &node.op {
                let input_values: Vec<&[f64]> = node
                    .inputs
                    .iter()
                    .map(|i| self.nodes[i.0].value.as_slice())
                    .collect();
                let contributions = op.backward(&input_values, &node.value, &out_grad);
                debug_assert_eq!(contributions.len(), node.inputs.len());
                for (input, contrib) in node.inputs.iter().zip(contributions) {
                    let Some(contrib) = contrib else { continue };
                    debug_assert_eq!(contrib.len(), self.nodes[input.0].value.len());
                    match &mut grads[input.0] {
                        Some(acc) => {
                            for (a, c) in acc.iter_mut().zip(contrib.iter()) {
                                *a += c;
                            }
                        }
                        slot @ None => *slot = Some(contrib),
                    }
                }
            }
            grads[idx] = Some(out_grad);
        }
        let mut by_param: HashMap<ParamId, Vec<f64>> = HashMap::new();
        for (idx, node) in self.nodes.iter().enumerate() {
            if let (Some(pid), Some(g)) = (node.param, &grads[idx]) {
                match by_param.get_mut(&pid) {
                    Some(acc) => {
                        for (a, c) in acc.iter_mut().zip(g.iter()) {
                            *a += c;
                        }
                    }
                    None => {
                        by_param.insert(pid, g.clone());
                    }
                }
            }
        }
        Ok(Gradients { grads, by_param })
    }
}

/// Result of a backward sweep.
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
    by_param: HashMap<ParamId, Vec<f64>>,
}

impl Gradients {
    pub fn of_node(&self, id: NodeId) -> Option<&[f64]> {
        self.grads.get(id.0).and_then(|g| g.as_deref())
    }

    pub fn of_param(&self, id: ParamId) -> Option<&[f64]> {
        self.by_param.get(&id).map(|v| v.as_slice())
    }

    /// Dense per-parameter gradients in registration order; parameters the
    /// loss never touched come back as zero vectors.
    pub fn dense(&self, store: &ParamStore) -> Vec<Vec<f64>> {
        store
            .iter()
            .map(|(id, p)| {
                self.by_param
                    .get(&id)
                    .cloned()
                    .unwrap_or_else(|| vec![0.0; p.data.len()])
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops;

    #[test]
    fn sum_of_squares_gradient_is_exact() {
        let mut store = ParamStore::new();
        let p = store.register("p", vec![1.0, -2.0, 3.5]);
        let mut tape = Tape::new();
        let pn = tape.param(&store, p);
        let loss = ops::sum_squares(&mut tape, pn);
        let grads = tape.backward(loss).unwrap();
        let g = grads.of_param(p).unwrap();
        assert_eq!(g, &[2.0, -4.0, 7.0]);
    }

    #[test]
    fn unused_parameter_has_zero_gradient() {
        let mut store = ParamStore::new();
        let a = store.register("a", vec![1.0]);
        let b = store.register("b", vec![5.0, 6.0]);
        let mut tape = Tape::new();
        let an = tape.param(&store, a);
        let _bn = tape.param(&store, b);
        let loss = ops::sum_squares(&mut tape, an);
        let grads = tape.backward(loss).unwrap();
        let dense = grads.dense(&store);
        assert_eq!(dense[1], vec![0.0, 0.0]);
        let _ = b;
    }

    #[test]
    fn duplicate_input_accumulates() {
        let mut store = ParamStore::new();
        let p = store.register("p", vec![3.0]);
        let mut tape = Tape::new();
        let pn = tape.param(&store, p);
        let doubled = ops::add(&mut tape, pn, pn).unwrap();
        let loss = ops::sum_squares(&mut tape, doubled);
        let grads = tape.backward(loss).unwrap();
        // loss = (2p)^2, d/dp = 8p = 24.
        assert_eq!(grads.of_param(p).unwrap(), &[24.0]);
    }

    #[test]
    fn non_scalar_loss_is_rejected() {
        let mut tape = Tape::new();
        let x = tape.data(vec![1.0, 2.0]);
        assert!(matches!(
            tape.backward(x),
            Err(Error::LossNotScalar { len: 2 })
        ));
    }

    #[test]
    fn detached_node_is_rejected() {
        let tape = Tape::new();
        assert!(matches!(
            tape.backward(NodeId(3)),
            Err(Error::DetachedNode { node: 3 })
        ));
    }
}
