use super::{Shape, Tensor};
use crate::error::{shape_err, Result};

pub fn relu(input: &Tensor) -> Tensor {
    let mut out = input.clone();
    out.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
    out
}

/// Gradient through a ReLU given its forward *output*. The subgradient at
/// exactly zero is taken as 0.
pub fn relu_backward(output: &Tensor, grad_out: &Tensor) -> Result<Tensor> {
    grad_out.expect_shape(output.shape(), "relu backward")?;
    let mut g = grad_out.clone();
    g.data_mut()
        .iter_mut()
        .zip(output.data())
        .for_each(|(g, &y)| {
            if y <= 0.0 {
                *g = 0.0;
            }
        });
    Ok(g)
}

/// Stacks tensors along the channel axis in the given order.
pub fn concat_channels(inputs: &[&Tensor]) -> Result<Tensor> {
    let first = inputs
        .first()
        .ok_or_else(|| shape_err!("concat of zero tensors"))?
        .shape();
    let mut channels = 0;
    for t in inputs {
        let s = t.shape();
        if (s.height, s.width) != (first.height, first.width) {
            return Err(shape_err!("concat spatial mismatch: {s} vs {first}"));
        }
        channels += s.channels;
    }
    let mut data = Vec::with_capacity(channels * first.plane());
    for t in inputs {
        data.extend_from_slice(t.data());
    }
    Tensor::from_vec(Shape::new(channels, first.height, first.width), data)
}

/// Inverse of [`concat_channels`]: cuts `input` into consecutive channel groups.
pub fn split_channels(input: &Tensor, sizes: &[usize]) -> Result<Vec<Tensor>> {
    let s = input.shape();
    if sizes.iter().sum::<usize>() != s.channels {
        return Err(shape_err!("split sizes {sizes:?} do not cover {s}"));
    }
    let plane = s.plane();
    let mut start = 0;
    sizes
        .iter()
        .map(|&c| {
            let slice = input.data()[start * plane..(start + c) * plane].to_vec();
            start += c;
            Tensor::from_vec(Shape::new(c, s.height, s.width), slice)
        })
        .collect()
}

/// Summed squared error `||pred - target||^2` and its gradient `2 (pred - target)`.
pub fn mse_loss(pred: &Tensor, target: &Tensor) -> Result<(f64, Tensor)> {
    pred.expect_shape(target.shape(), "mse_loss")?;
    let mut grad = Tensor::zeros(pred.shape());
    let mut loss = 0.0;
    for ((g, p), t) in grad.data_mut().iter_mut().zip(pred.data()).zip(target.data()) {
        let d = p - t;
        loss += d * d;
        *g = 2.0 * d;
    }
    Ok((loss, grad))
}
