//! Learnable parameters and plain momentum SGD.
//!
//! Parameters live outside the tape in a `ParamSet`; a forward pass snapshots
//! their values onto the tape and `backward` accumulates adjoints back into
//! the set. One optimizer setting applies to every parameter in the set.

use crate::error::{Error, Result};
use crate::tensor::matrix::Matrix;
use crate::tensor::prng::SplitMix64;

/// Index of a parameter inside its `ParamSet`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub usize);

/// One learnable matrix with its gradient accumulator and momentum buffer.
#[derive(Debug, Clone)]
pub struct Parameter {
    pub name: String,
    pub value: Matrix,
    pub grad: Matrix,
    pub momentum: Matrix,
}

impl Parameter {
    fn new(name: String, value: Matrix) -> Self {
        let (r, c) = value.shape();
        Parameter {
            name,
            value,
            grad: Matrix::zeros(r, c),
            momentum: Matrix::zeros(r, c),
        }
    }
}

/// Ordered collection of named parameters. Order is insertion order, which
/// also fixes the order of PRNG draws at initialization and the record order
/// in checkpoints.
#[derive(Debug, Clone, Default)]
pub struct ParamSet {
    params: Vec<Parameter>,
}

impl ParamSet {
    pub fn new() -> Self {
        ParamSet { params: Vec::new() }
    }

    /// Register a parameter. Names must be unique within the set.
    pub fn insert(&mut self, name: impl Into<String>, value: Matrix) -> Result<ParamId> {
        let name = name.into();
        if self.params.iter().any(|p| p.name == name) {
            return Err(Error::Contract(format!(
                "duplicate parameter name {name:?}"
            )));
        }
        self.params.push(Parameter::new(name, value));
        Ok(ParamId(self.params.len() - 1))
    }

    /// Register a weight of shape (fan_out, fan_in) initialized uniformly in
    /// +-1/sqrt(fan_in), the same rule linear layers use for their biases.
    pub fn insert_linear_weight(
        &mut self,
        name: impl Into<String>,
        fan_out: usize,
        fan_in: usize,
        rng: &mut SplitMix64,
    ) -> Result<ParamId> {
        let bound = 1.0 / (fan_in as f64).sqrt();
        self.insert(name, Matrix::uniform(fan_out, fan_in, bound, rng))
    }

    /// Register a bias row (1 x fan_out) with the same +-1/sqrt(fan_in) rule.
    pub fn insert_bias(
        &mut self,
        name: impl Into<String>,
        fan_out: usize,
        fan_in: usize,
        rng: &mut SplitMix64,
    ) -> Result<ParamId> {
        let bound = 1.0 / (fan_in as f64).sqrt();
        self.insert(name, Matrix::uniform(1, fan_out, bound, rng))
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Parameter {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Parameter {
        &mut self.params[id.0]
    }

    pub fn by_name(&self, name: &str) -> Option<(ParamId, &Parameter)> {
        self.params
            .iter()
            .enumerate()
            .find(|(_, p)| p.name == name)
            .map(|(i, p)| (ParamId(i), p))
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Parameter)> {
        self.params.iter().enumerate().map(|(i, p)| (ParamId(i), p))
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            p.grad.data_mut().fill(0.0);
        }
    }

    /// Total number of scalar entries across all parameter values.
    pub fn scalar_count(&self) -> usize {
        self.params
            .iter()
            .map(|p| p.value.rows() * p.value.cols())
            .sum()
    }
}

/// Momentum SGD with decoupled-from-nothing weight decay: the decay term is
/// added to the raw gradient before the momentum update, matching the
/// classical formulation
///
/// ```text
/// v     <- momentum * v + (grad + weight_decay * value)
/// value <- value - lr * v
/// ```
#[derive(Debug, Clone, Copy)]
pub struct SgdConfig {
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig {
            lr: 0.01,
            momentum: 0.9,
            weight_decay: 1e-4,
        }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) {
            return Err(Error::Config(format!(
                "sgd lr must be positive, got {}",
                self.lr
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!(
                "sgd momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        if self.weight_decay < 0.0 {
            return Err(Error::Config(format!(
                "sgd weight decay must be non-negative, got {}",
                self.weight_decay
            )));
        }
        Ok(())
    }
}

/// Apply one SGD step to every parameter, then zero all gradients.
pub fn sgd_step(params: &mut ParamSet, cfg: &SgdConfig) -> Result<()> {
    cfg.validate()?;
    for p in &mut params.params {
        let n = p.value.data().len();
        for i in 0..n {
            let g = p.grad.data()[i] + cfg.weight_decay * p.value.data()[i];
            let v = cfg.momentum * p.momentum.data()[i] + g;
            p.momentum.data_mut()[i] = v;
            p.value.data_mut()[i] -= cfg.lr * v;
        }
        p.grad.data_mut().fill(0.0);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_param(v: f64) -> ParamSet {
        let mut ps = ParamSet::new();
        ps.insert("w", Matrix::from_vec(1, 1, vec![v]).unwrap()).unwrap();
        ps
    }

    #[test]
    fn single_step_without_momentum() {
        // value 1, grad 0.1, lr 1, no momentum, no decay -> 0.9
        let mut ps = one_param(1.0);
        ps.get_mut(ParamId(0)).grad.set(0, 0, 0.1);
        let cfg = SgdConfig { lr: 1.0, momentum: 0.0, weight_decay: 0.0 };
        sgd_step(&mut ps, &cfg).unwrap();
        assert_eq!(ps.get(ParamId(0)).value.get(0, 0), 0.9);
        assert_eq!(ps.get(ParamId(0)).grad.get(0, 0), 0.0, "grad must be zeroed");
    }

    #[test]
    fn momentum_recursion_two_steps() {
        // Constant grad 1, lr 1, momentum 0.9 from zero:
        // v1 = 1, x1 = -1; v2 = 1.9, x2 = -2.9.
        let mut ps = one_param(0.0);
        let cfg = SgdConfig { lr: 1.0, momentum: 0.9, weight_decay: 0.0 };
        for _ in 0..2 {
            ps.get_mut(ParamId(0)).grad.set(0, 0, 1.0);
            sgd_step(&mut ps, &cfg).unwrap();
        }
        assert_eq!(ps.get(ParamId(0)).value.get(0, 0), -2.9);
    }

    #[test]
    fn weight_decay_enters_before_momentum() {
        // value 1, grad 0, wd 0.1, lr 1, momentum 0: v = 0.1, value -> 0.9
        let mut ps = one_param(1.0);
        let cfg = SgdConfig { lr: 1.0, momentum: 0.0, weight_decay: 0.1 };
        sgd_step(&mut ps, &cfg).unwrap();
        assert!((ps.get(ParamId(0)).value.get(0, 0) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn non_positive_lr_is_a_config_error() {
        let mut ps = one_param(1.0);
        let cfg = SgdConfig { lr: 0.0, momentum: 0.9, weight_decay: 0.0 };
        assert!(matches!(sgd_step(&mut ps, &cfg), Err(crate::error::Error::Config(_))));
    }

    #[test]
    fn duplicate_parameter_names_are_rejected() {
        let mut ps = ParamSet::new();
        ps.insert("w", Matrix::zeros(1, 1)).unwrap();
        assert!(ps.insert("w", Matrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn identical_seeds_give_identical_updates() {
        let run = || {
            let mut rng = SplitMix64::stream(5, "init");
            let mut ps = ParamSet::new();
            ps.insert_linear_weight("w", 4, 4, &mut rng).unwrap();
            let cfg = SgdConfig::default();
            for step in 0..10 {
                let fake = Matrix::from_fn(4, 4, |i, j| ((i + j + step) % 3) as f64 - 1.0);
                ps.get_mut(ParamId(0)).grad = fake;
                sgd_step(&mut ps, &cfg).unwrap();
            }
            ps.get(ParamId(0)).value.data().to_vec()
        };
        let a = run();
        let b = run();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }
}
