use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{ParamId, ParamStore, Shape, Tensor};
use crate::error::{invalid, shape_err, Result};

/// Output extent of a convolution along one axis, or `None` when it would
/// not be positive.
pub fn conv_output_dim(input: usize, kernel: usize, stride: usize, dilation: usize, padding: usize) -> Option<usize> {
    let span = dilation * (kernel - 1) + 1;
    let padded = input + 2 * padding;
    if padded < span || stride == 0 {
        return None;
    }
    Some((padded - span) / stride + 1)
}

/// Geometry of a convolution layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ConvSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub dilation: usize,
    pub padding: usize,
}

impl ConvSpec {
    pub fn new(in_channels: usize, out_channels: usize, kernel: usize) -> Self {
        ConvSpec {
            in_channels,
            out_channels,
            kernel,
            stride: 1,
            dilation: 1,
            padding: 0,
        }
    }

    pub fn stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    pub fn dilation(mut self, dilation: usize) -> Self {
        self.dilation = dilation;
        self
    }

    pub fn padding(mut self, padding: usize) -> Self {
        self.padding = padding;
        self
    }

    pub fn weight_len(&self) -> usize {
        self.out_channels * self.in_channels * self.kernel * self.kernel
    }

    pub fn num_params(&self) -> usize {
        self.weight_len() + self.out_channels
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0 || self.out_channels == 0 {
            return Err(invalid!("convolution needs positive channel counts: {self:?}"));
        }
        if !(1..=3).contains(&self.kernel) {
            return Err(invalid!("kernel size {} not in 1..=3", self.kernel));
        }
        if !(1..=2).contains(&self.stride) {
            return Err(invalid!("stride {} not in 1..=2", self.stride));
        }
        if self.dilation == 0 {
            return Err(invalid!("dilation must be positive"));
        }
        Ok(())
    }

    pub fn output_shape(&self, input: Shape) -> Result<Shape> {
        if input.channels != self.in_channels {
            return Err(shape_err!(
                "convolution expects {} input channels, got {}",
                self.in_channels,
                input.channels
            ));
        }
        let dim = |n| conv_output_dim(n, self.kernel, self.stride, self.dilation, self.padding);
        match (dim(input.height), dim(input.width)) {
            (Some(h), Some(w)) => Ok(Shape::new(self.out_channels, h, w)),
            _ => Err(shape_err!("convolution {self:?} on {input} has no output")),
        }
    }
}

/// A 2-D cross-correlation layer whose weights (out, in, k, k) and bias live
/// in a [`ParamStore`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    pub spec: ConvSpec,
    pub weight: ParamId,
    pub bias: ParamId,
}

/// Range of output positions `o` whose tap `o * stride + offset - padding`
/// lands inside `0..input`.
#[inline]
fn valid_range(out: usize, input: usize, stride: usize, offset: usize, padding: usize) -> (usize, usize) {
    let lo = if offset >= padding {
        0
    } else {
        (padding - offset).div_ceil(stride)
    };
    // largest o with o*stride + offset - padding <= input - 1
    let limit = input + padding;
    let hi = if offset >= limit {
        0
    } else {
        ((limit - 1 - offset) / stride + 1).min(out)
    };
    (lo.min(hi), hi)
}

impl ConvLayer {
    /// Registers weights drawn from N(0, 2 / fan_in) and a zero bias.
    pub fn init<R: Rng>(store: &mut ParamStore, name: &str, spec: ConvSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let fan_in = (spec.in_channels * spec.kernel * spec.kernel) as f64;
        let normal = Normal::new(0.0, (2.0 / fan_in).sqrt()).expect("positive std");
        let w: Vec<f64> = (0..spec.weight_len()).map(|_| normal.sample(rng)).collect();
        Self::with_values(store, name, spec, w, vec![0.0; spec.out_channels])
    }

    pub fn with_values(
        store: &mut ParamStore,
        name: &str,
        spec: ConvSpec,
        weight: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        spec.validate()?;
        let k = spec.kernel;
        let weight = store.add(
            format!("{name}.weight"),
            vec![spec.out_channels, spec.in_channels, k, k],
            weight,
        )?;
        let bias = store.add(format!("{name}.bias"), vec![spec.out_channels], bias)?;
        Ok(ConvLayer { spec, weight, bias })
    }

    pub fn forward(&self, input: &Tensor, store: &ParamStore) -> Result<Tensor> {
        let s = self.spec;
        let in_shape = input.shape();
        let out_shape = s.output_shape(in_shape)?;
        let (ih, iw) = (in_shape.height, in_shape.width);
        let (oh, ow) = (out_shape.height, out_shape.width);
        let w = store.value(self.weight);
        let b = store.value(self.bias);
        let x = input.data();
        let mut out = Tensor::zeros(out_shape);
        let y = out.data_mut();
        let k = s.kernel;
        for oc in 0..s.out_channels {
            let yplane = &mut y[oc * oh * ow..(oc + 1) * oh * ow];
            yplane.iter_mut().for_each(|v| *v = b[oc]);
            for ic in 0..s.in_channels {
                let xplane = &x[ic * ih * iw..(ic + 1) * ih * iw];
                for ky in 0..k {
                    let (oy0, oy1) = valid_range(oh, ih, s.stride, ky * s.dilation, s.padding);
                    for kx in 0..k {
                        let wv = w[((oc * s.in_channels + ic) * k + ky) * k + kx];
                        let (ox0, ox1) = valid_range(ow, iw, s.stride, kx * s.dilation, s.padding);
                        for oy in oy0..oy1 {
                            let iy = oy * s.stride + ky * s.dilation - s.padding;
                            let xrow = &xplane[iy * iw..(iy + 1) * iw];
                            let yrow = &mut yplane[oy * ow..(oy + 1) * ow];
                            let ix0 = ox0 * s.stride + kx * s.dilation - s.padding;
                            if s.stride == 1 {
                                let n = ox1 - ox0;
                                for (yv, xv) in yrow[ox0..ox1].iter_mut().zip(&xrow[ix0..ix0 + n]) {
                                    *yv += wv * xv;
                                }
                            } else {
                                for (j, yv) in yrow[ox0..ox1].iter_mut().enumerate() {
                                    *yv += wv * xrow[ix0 + j * s.stride];
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Accumulates weight and bias gradients into `store` and returns the
    /// gradient with respect to `input`.
    pub fn backward(&self, input: &Tensor, grad_out: &Tensor, store: &mut ParamStore) -> Result<Tensor> {
        let s = self.spec;
        let in_shape = input.shape();
        let out_shape = s.output_shape(in_shape)?;
        grad_out.expect_shape(out_shape, "convolution backward")?;
        let (ih, iw) = (in_shape.height, in_shape.width);
        let (oh, ow) = (out_shape.height, out_shape.width);
        let k = s.kernel;
        let x = input.data();
        let g = grad_out.data();
        let mut grad_in = Tensor::zeros(in_shape);
        let gx = grad_in.data_mut();

        let w = store.value(self.weight).to_vec();
        let mut gw = vec![0.0; w.len()];
        let mut gb = vec![0.0; s.out_channels];
        for oc in 0..s.out_channels {
            let gplane = &g[oc * oh * ow..(oc + 1) * oh * ow];
            gb[oc] = gplane.iter().sum();
            for ic in 0..s.in_channels {
                let xplane = &x[ic * ih * iw..(ic + 1) * ih * iw];
                let gxplane = &mut gx[ic * ih * iw..(ic + 1) * ih * iw];
                for ky in 0..k {
                    let (oy0, oy1) = valid_range(oh, ih, s.stride, ky * s.dilation, s.padding);
                    for kx in 0..k {
                        let wi = ((oc * s.in_channels + ic) * k + ky) * k + kx;
                        let wv = w[wi];
                        let (ox0, ox1) = valid_range(ow, iw, s.stride, kx * s.dilation, s.padding);
                        let mut acc = 0.0;
                        for oy in oy0..oy1 {
                            let iy = oy * s.stride + ky * s.dilation - s.padding;
                            let grow = &gplane[oy * ow..(oy + 1) * ow];
                            let ix0 = ox0 * s.stride + kx * s.dilation - s.padding;
                            for (j, gv) in grow[ox0..ox1].iter().enumerate() {
                                let ix = iy * iw + ix0 + j * s.stride;
                                acc += gv * xplane[ix];
                                gxplane[ix] += wv * gv;
                            }
                        }
                        gw[wi] += acc;
                    }
                }
            }
        }
        store
            .grad_mut(self.weight)
            .iter_mut()
            .zip(&gw)
            .for_each(|(a, b)| *a += b);
        store
            .grad_mut(self.bias)
            .iter_mut()
            .zip(&gb)
            .for_each(|(a, b)| *a += b);
        Ok(grad_in)
    }
}
