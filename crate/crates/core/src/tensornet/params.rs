use crate::error::{invalid, shape_err, Result};
use crate::Error;

/// Handle to a parameter inside a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(usize);

#[derive(Debug, Clone)]
struct Param {
    name: String,
    shape: Vec<usize>,
    value: Vec<f64>,
    grad: Vec<f64>,
    m: Vec<f64>,
    v: Vec<f64>,
}

/// Named parameters, their gradients, and Adam moment buffers.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    params: Vec<Param>,
    adam_steps: u64,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a parameter. Names must be unique.
    pub fn add(&mut self, name: impl Into<String>, shape: Vec<usize>, value: Vec<f64>) -> Result<ParamId> {
        let name = name.into();
        let expected: usize = shape.iter().product();
        if expected != value.len() {
            return Err(shape_err!(
                "parameter {name}: {} values for shape {shape:?}",
                value.len()
            ));
        }
        if self.params.iter().any(|p| p.name == name) {
            return Err(invalid!("duplicate parameter name {name}"));
        }
        let n = value.len();
        self.params.push(Param {
            name,
            shape,
            value,
            grad: vec![0.0; n],
            m: vec![0.0; n],
            v: vec![0.0; n],
        });
        Ok(ParamId(self.params.len() - 1))
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn num_scalars(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn id_of(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.params[id.0].name
    }

    pub fn shape(&self, id: ParamId) -> &[usize] {
        &self.params[id.0].shape
    }

    pub fn value(&self, id: ParamId) -> &[f64] {
        &self.params[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut [f64] {
        &mut self.params[id.0].value
    }

    pub fn grad(&self, id: ParamId) -> &[f64] {
        &self.params[id.0].grad
    }

    pub fn grad_mut(&mut self, id: ParamId) -> &mut [f64] {
        &mut self.params[id.0].grad
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad.iter_mut().for_each(|g| *g = 0.0);
        }
    }

    /// Multiplies every gradient by `factor` (used for epoch-mean reductions).
    pub fn scale_grad(&mut self, factor: f64) {
        for p in &mut self.params {
            p.grad.iter_mut().for_each(|g| *g *= factor);
        }
    }

    /// Copy of all parameter values, in registration order.
    pub fn snapshot(&self) -> Vec<Vec<f64>> {
        self.params.iter().map(|p| p.value.clone()).collect()
    }

    pub fn restore(&mut self, snapshot: &[Vec<f64>]) -> Result<()> {
        if snapshot.len() != self.params.len() {
            return Err(shape_err!(
                "snapshot has {} parameters, store has {}",
                snapshot.len(),
                self.params.len()
            ));
        }
        for (p, s) in self.params.iter_mut().zip(snapshot) {
            if p.value.len() != s.len() {
                return Err(shape_err!("snapshot size mismatch for {}", p.name));
            }
            p.value.copy_from_slice(s);
        }
        Ok(())
    }

    /// Overwrites the value of the parameter called `name`.
    pub fn load(&mut self, name: &str, shape: &[usize], value: &[f64]) -> Result<()> {
        let id = self
            .id_of(name)
            .ok_or_else(|| invalid!("checkpoint parameter {name} not present in model"))?;
        let p = &mut self.params[id.0];
        if p.shape != shape {
            return Err(shape_err!(
                "parameter {name}: checkpoint shape {shape:?}, model shape {:?}",
                p.shape
            ));
        }
        p.value.copy_from_slice(value);
        Ok(())
    }

    /// Number of Adam updates applied so far.
    pub fn adam_steps(&self) -> u64 {
        self.adam_steps
    }
}

/// Adam hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam update over every parameter in `store`.
///
/// Refuses to touch anything if a gradient is non-finite so the caller can
/// fall back to its last good parameters.
pub fn adam_step(store: &mut ParamStore, config: &AdamConfig) -> Result<()> {
    for p in &store.params {
        if let Some(i) = p.grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!("gradient of {}[{i}]", p.name)));
        }
    }
    store.adam_steps += 1;
    let t = store.adam_steps as i32;
    let (b1, b2) = (config.beta1, config.beta2);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for p in &mut store.params {
        for i in 0..p.value.len() {
            let g = p.grad[i];
            p.m[i] = b1 * p.m[i] + (1.0 - b1) * g;
            p.v[i] = b2 * p.v[i] + (1.0 - b2) * g * g;
            let m_hat = p.m[i] / c1;
            let v_hat = p.v[i] / c2;
            p.value[i] -= config.lr * m_hat / (v_hat.sqrt() + config.eps);
        }
    }
    Ok(())
}
