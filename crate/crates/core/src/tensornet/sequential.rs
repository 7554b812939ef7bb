use super::{relu, relu_backward, ConvLayer, ParamStore, Tensor};
use crate::error::{shape_err, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Conv(ConvLayer),
    Relu,
}

/// Activations recorded by [`Sequential::forward`]: the input followed by the
/// output of every layer.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    activations: Vec<Tensor>,
}

impl Trace {
    pub fn output(&self) -> Option<&Tensor> {
        self.activations.last()
    }

    pub fn activations(&self) -> &[Tensor] {
        &self.activations
    }
}

/// A chain of layers applied in order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Sequential {
    layers: Vec<Layer>,
}

impl Sequential {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, layer: Layer) {
        self.layers.push(layer);
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn convs(&self) -> impl Iterator<Item = &ConvLayer> {
        self.layers.iter().filter_map(|l| match l {
            Layer::Conv(c) => Some(c),
            Layer::Relu => None,
        })
    }

    pub fn forward(&self, input: &Tensor, store: &ParamStore) -> Result<(Tensor, Trace)> {
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(input.clone());
        for layer in &self.layers {
            let x = activations.last().expect("non-empty");
            let y = match layer {
                Layer::Conv(c) => c.forward(x, store)?,
                Layer::Relu => relu(x),
            };
            activations.push(y);
        }
        let out = activations.last().expect("non-empty").clone();
        Ok((out, Trace { activations }))
    }

    /// Back-propagates `grad_out` through the recorded forward pass,
    /// accumulating parameter gradients, and returns the input gradient.
    pub fn backward(&self, trace: &Trace, grad_out: &Tensor, store: &mut ParamStore) -> Result<Tensor> {
        if trace.activations.len() != self.layers.len() + 1 {
            return Err(shape_err!(
                "backward needs a trace of {} activations, got {} (was forward run?)",
                self.layers.len() + 1,
                trace.activations.len()
            ));
        }
        let mut grad = grad_out.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            grad = match layer {
                Layer::Conv(c) => c.backward(&trace.activations[i], &grad, store)?,
                Layer::Relu => relu_backward(&trace.activations[i + 1], &grad)?,
            };
        }
        Ok(grad)
    }
}
